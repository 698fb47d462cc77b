//! Defining functions, the model-domain catalog, and basic boundary
//! geometry: point classification, boundary projection, Levi spot checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::poly::{CPoly, Mono, WDir};

pub type C2 = [Complex64; 2];

/// Real-valued polynomial defining function in `(z1, conj z1, z2, conj z2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DefiningFunction {
    pub poly: CPoly,
    /// Jet orders above the polynomial degree are exactly zero, so any
    /// request up to this cap is answerable; kept explicit for the
    /// capability check demanded by callers.
    pub max_jet_order: u32,
}

impl DefiningFunction {
    pub fn new(poly: CPoly) -> Result<Self> {
        if !poly.is_real(1e-12) {
            return Err(CoreError::Config(
                "defining polynomial is not real-valued: coeff(M) != conj(coeff(conj M))".into(),
            ));
        }
        Ok(DefiningFunction { max_jet_order: poly.degree() + 4, poly })
    }

    pub fn eval(&self, z: C2) -> f64 {
        self.poly.eval(z).re
    }

    /// Complex gradient `(dr/dz1, dr/dz2)`.
    pub fn grad_z(&self, z: C2) -> C2 {
        [
            self.poly.wirtinger(WDir::Z1).eval(z),
            self.poly.wirtinger(WDir::Z2).eval(z),
        ]
    }

    /// Real gradient in coordinates `(x1, y1, x2, y2)`; `dr = 2 Re(dr/dz_i dz_i)`.
    pub fn grad_real(&self, z: C2) -> [f64; 4] {
        let g = self.grad_z(z);
        [2.0 * g[0].re, -2.0 * g[0].im, 2.0 * g[1].re, -2.0 * g[1].im]
    }

    pub fn grad_real_norm(&self, z: C2) -> f64 {
        let g = self.grad_real(z);
        (g.iter().map(|t| t * t).sum::<f64>()).sqrt()
    }
}

/// Table of mixed Wirtinger derivatives of `r` at a base point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetTable {
    pub base: C2,
    pub order: u32,
    /// Entries keyed by the derivative multi-index.
    pub entries: Vec<([u8; 4], Complex64)>,
}

impl JetTable {
    pub fn get(&self, alpha: [u8; 4]) -> Complex64 {
        self.entries
            .iter()
            .find(|(a, _)| *a == alpha)
            .map(|(_, v)| *v)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Conjugation symmetry defect: max |entry(alpha) - conj(entry(alpha-bar))|.
    pub fn conjugation_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|(a, v)| {
                let sw = [a[1], a[0], a[3], a[2]];
                (v - self.get(sw).conj()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// All mixed Wirtinger derivatives of `r` up to `order` at `z`; exact for
/// the polynomial representation.
pub fn eval_jet(r: &DefiningFunction, z: C2, order: u32) -> Result<JetTable> {
    if order > r.max_jet_order {
        return Err(CoreError::Capability(format!(
            "jet order {} exceeds capability {}",
            order, r.max_jet_order
        )));
    }
    let mut entries = Vec::new();
    for a in 0..=order as u8 {
        for ab in 0..=(order as u8 - a) {
            for b in 0..=(order as u8 - a - ab) {
                for bb in 0..=(order as u8 - a - ab - b) {
                    let alpha = [a, ab, b, bb];
                    let val = r.poly.wirtinger_multi(alpha).eval(z);
                    entries.push((alpha, val));
                }
            }
        }
    }
    Ok(JetTable { base: z, order, entries })
}

/// Where a queried point sits relative to the domain and its neighborhood.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum PointClass {
    Interior,
    Shell,
    OutsideNeighborhood,
}

/// A model domain `D = { r < 0 }` together with the neighborhood data the
/// shell constructions need.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub r: DefiningFunction,
    /// Radius of the ball U that is treated as the ambient neighborhood.
    pub neighborhood_radius: f64,
    /// The shell is `{ 0 <= r < shell_width }` inside U.
    pub shell_width: f64,
    pub catalog_id: Option<String>,
}

impl DomainSpec {
    pub fn classify(&self, z: C2) -> PointClass {
        let v = self.r.eval(z);
        if v < 0.0 {
            PointClass::Interior
        } else if v < self.shell_width && norm2(z) <= self.neighborhood_radius {
            PointClass::Shell
        } else {
            PointClass::OutsideNeighborhood
        }
    }

    /// Gradient nondegeneracy spot check on the zero set near sampled points.
    pub fn check_gradient_nondegenerate(&self, samples: &[C2], tol: f64) -> bool {
        samples.iter().all(|z| self.r.grad_real_norm(*z) > tol)
    }
}

pub fn norm2(z: C2) -> f64 {
    (z[0].norm_sqr() + z[1].norm_sqr()).sqrt()
}

pub fn dist2(a: C2, b: C2) -> f64 {
    norm2([a[0] - b[0], a[1] - b[1]])
}

/// Catalog of model domains.
pub mod catalog {
    use super::*;

    fn mono(a: u8, ab: u8, b: u8, bb: u8, re: f64) -> (Mono, Complex64) {
        (Mono { a, ab, b, bb }, Complex64::new(re, 0.0))
    }

    /// Unit ball: `|z1|^2 + |z2|^2 - 1`.
    pub fn ball() -> DomainSpec {
        let poly = CPoly::from_terms(vec![
            mono(1, 1, 0, 0, 1.0),
            mono(0, 0, 1, 1, 1.0),
            mono(0, 0, 0, 0, -1.0),
        ]);
        DomainSpec {
            r: DefiningFunction::new(poly).unwrap(),
            neighborhood_radius: 2.0,
            shell_width: 0.4,
            catalog_id: Some("ball".into()),
        }
    }

    /// Egg of exponent `k`: `|z1|^{2k} + |z2|^2 - 1` (type `2k` at `(0, ±1)`).
    pub fn egg(k: u8) -> DomainSpec {
        let poly = CPoly::from_terms(vec![
            mono(k, k, 0, 0, 1.0),
            mono(0, 0, 1, 1, 1.0),
            mono(0, 0, 0, 0, -1.0),
        ]);
        DomainSpec {
            r: DefiningFunction::new(poly).unwrap(),
            neighborhood_radius: 2.0,
            shell_width: 0.4,
            catalog_id: Some(format!("egg{k}")),
        }
    }

    /// Kohn-Nirenberg-type model near the origin:
    /// `Re z2 + |z1|^8 + c |z1|^2 Re(z1^6)`, type 8 at 0 (default c = 15/7).
    /// Only the piece inside the configured neighborhood is used.
    pub fn kohn_nirenberg(c: f64) -> DomainSpec {
        let half = 0.5;
        let poly = CPoly::from_terms(vec![
            mono(0, 0, 1, 0, half),
            mono(0, 0, 0, 1, half),
            mono(4, 4, 0, 0, 1.0),
            // |z1|^2 Re(z1^6) = (z1^7 zbar1 + z1 zbar1^7)/2
            mono(7, 1, 0, 0, c / 2.0),
            mono(1, 7, 0, 0, c / 2.0),
        ]);
        DomainSpec {
            r: DefiningFunction::new(poly).unwrap(),
            neighborhood_radius: 0.7,
            shell_width: 0.2,
            catalog_id: Some("kn".into()),
        }
    }

    pub fn by_id(id: &str, kn_c: f64) -> Option<DomainSpec> {
        match id {
            "ball" => Some(ball()),
            "egg1" => Some(egg(1)),
            "egg2" => Some(egg(2)),
            "egg3" => Some(egg(3)),
            "kn" => Some(kohn_nirenberg(kn_c)),
            _ => None,
        }
    }
}

/// Projection of `z` onto `{ r = level }` by damped Newton along the real
/// gradient, followed by tangential sliding toward the nearest point.
/// Returns `w` with `|r(w) - level| < tol` and `w - z` parallel to the
/// gradient at `w` within `tol`.
pub fn boundary_project_level(
    r: &DefiningFunction,
    z: C2,
    level: f64,
    tol: f64,
    max_iter: usize,
) -> Result<C2> {
    let mut w = z;
    for _ in 0..max_iter {
        // Newton step onto the level set.
        let mut inner = 0;
        while (r.eval(w) - level).abs() > tol && inner < 60 {
            let v = r.eval(w) - level;
            let g = r.grad_real(w);
            let g2: f64 = g.iter().map(|t| t * t).sum();
            if g2 < 1e-14 {
                return Err(CoreError::Geometry("degenerate gradient in projection".into()));
            }
            let mut lambda = 1.0;
            let base = v.abs();
            loop {
                let cand = add_real(w, g.map(|t| -lambda * v * t / g2));
                if (r.eval(cand) - level).abs() < base || lambda < 1e-6 {
                    w = cand;
                    break;
                }
                lambda *= 0.5;
            }
            inner += 1;
        }
        // Tangential slide toward z.
        let g = r.grad_real(w);
        let g2: f64 = g.iter().map(|t| t * t).sum();
        if g2 < 1e-14 {
            return Err(CoreError::Geometry("degenerate gradient in projection".into()));
        }
        let d = sub_real(z, w);
        let dn: f64 = d.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>() / g2;
        let tang = [
            d[0] - dn * g[0],
            d[1] - dn * g[1],
            d[2] - dn * g[2],
            d[3] - dn * g[3],
        ];
        let tnorm = (tang.iter().map(|t| t * t).sum::<f64>()).sqrt();
        if tnorm < tol && (r.eval(w) - level).abs() < tol {
            return Ok(w);
        }
        w = add_real(w, tang.map(|t| 0.8 * t));
    }
    Err(CoreError::Numeric("boundary projection did not converge".into()))
}

/// Projection of `z` onto the zero set `bD` (tol 1e-10, 100 iterations).
pub fn boundary_project(d: &DomainSpec, z: C2) -> Result<C2> {
    boundary_project_level(&d.r, z, 0.0, 1e-10, 100)
}

fn add_real(z: C2, d: [f64; 4]) -> C2 {
    [
        Complex64::new(z[0].re + d[0], z[0].im + d[1]),
        Complex64::new(z[1].re + d[2], z[1].im + d[3]),
    ]
}

fn sub_real(a: C2, b: C2) -> [f64; 4] {
    [a[0].re - b[0].re, a[0].im - b[0].im, a[1].re - b[1].re, a[1].im - b[1].im]
}

/// Levi form at a boundary point applied to the unit complex-tangential
/// direction, normalized by `|dr|` (the `|grad r| = 1` convention).
pub fn levi_spot_check(d: &DomainSpec, z: C2, tol: f64) -> Result<f64> {
    if d.r.eval(z).abs() > tol {
        return Err(CoreError::Precondition(format!(
            "point not on boundary: r = {}",
            d.r.eval(z)
        )));
    }
    let g = d.r.grad_z(z);
    let gnorm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    if gnorm < tol {
        return Err(CoreError::Geometry("degenerate gradient at boundary point".into()));
    }
    // Unit complex tangent: t ~ (-dr/dz2, dr/dz1) (orthogonal to (conj dr/dz1, conj dr/dz2)).
    let t = [-g[1] / gnorm, g[0] / gnorm];
    let r11 = d.r.poly.wirtinger(WDir::Z1).wirtinger(WDir::Z1Bar).eval(z);
    let r12 = d.r.poly.wirtinger(WDir::Z1).wirtinger(WDir::Z2Bar).eval(z);
    let r21 = d.r.poly.wirtinger(WDir::Z2).wirtinger(WDir::Z1Bar).eval(z);
    let r22 = d.r.poly.wirtinger(WDir::Z2).wirtinger(WDir::Z2Bar).eval(z);
    let levi = r11 * t[0] * t[0].conj()
        + r12 * t[0] * t[1].conj()
        + r21 * t[1] * t[0].conj()
        + r22 * t[1] * t[1].conj();
    Ok(levi.re / gnorm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jet_of_ball_at_origin() {
        let d = catalog::ball();
        let jet = eval_jet(&d.r, [c(0.0, 0.0), c(0.0, 0.0)], 2).unwrap();
        assert_relative_eq!(jet.get([0, 0, 0, 0]).re, -1.0);
        assert_relative_eq!(jet.get([1, 1, 0, 0]).re, 1.0);
        assert_relative_eq!(jet.get([2, 0, 0, 0]).norm(), 0.0);
        assert_relative_eq!(jet.get([0, 0, 2, 0]).norm(), 0.0);
        assert_eq!(jet.conjugation_defect(), 0.0);
    }

    #[test]
    fn jet_of_egg2_order_one() {
        let d = catalog::egg(2);
        let jet = eval_jet(&d.r, [c(0.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        assert_relative_eq!(jet.get([0, 0, 1, 0]).re, 1.0);
        assert_relative_eq!(jet.get([1, 0, 0, 0]).norm(), 0.0);
    }

    #[test]
    fn jet_order_capability_error() {
        let d = catalog::ball();
        assert!(eval_jet(&d.r, [c(0.0, 0.0); 2], 99).is_err());
    }

    #[test]
    fn classify_ball_points() {
        let d = catalog::ball();
        assert_eq!(d.classify([c(0.0, 0.0), c(0.0, 0.0)]), PointClass::Interior);
        let shell = d.classify([c(0.0, 0.0), c(1.05, 0.0)]);
        assert_eq!(shell, PointClass::Shell);
        assert_relative_eq!(d.r.eval([c(0.0, 0.0), c(1.05, 0.0)]), 0.1025, epsilon = 1e-12);
        assert_eq!(
            d.classify([c(0.0, 0.0), c(5.0, 0.0)]),
            PointClass::OutsideNeighborhood
        );
    }

    #[test]
    fn project_ball_radial() {
        let d = catalog::ball();
        let w = boundary_project(&d, [c(0.0, 0.0), c(1.2, 0.0)]).unwrap();
        assert_relative_eq!(w[1].re, 1.0, epsilon = 1e-9);
        assert!(w[0].norm() < 1e-9 && w[1].im.abs() < 1e-9);
    }

    #[test]
    fn project_egg_pole() {
        let d = catalog::egg(2);
        let w = boundary_project(&d, [c(0.0, 0.0), c(-1.1, 0.0)]).unwrap();
        assert_relative_eq!(w[1].re, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn project_egg_generic_is_fixed_point() {
        let d = catalog::egg(2);
        let z = [c(0.31, -0.12), c(0.85, 0.4)];
        let w = boundary_project(&d, z).unwrap();
        assert!(d.r.eval(w).abs() < 1e-10);
        // projection of the projection stays put
        let w2 = boundary_project(&d, w).unwrap();
        assert!(dist2(w, w2) < 1e-8);
        // oracle: dense boundary mesh nearest-point search (egg boundary
        // parametrized by (|z1|, arg z1, arg z2) with |z2| determined)
        let mut best = (f64::INFINITY, w);
        let n = 60;
        for i in 0..n {
            let rho = i as f64 / n as f64; // |z1| in [0,1)
            let h = 1.0 - rho.powi(4);
            if h < 0.0 {
                continue;
            }
            let z2m = h.sqrt();
            for j in 0..n {
                let th1 = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                for l in 0..n {
                    let th2 = 2.0 * std::f64::consts::PI * l as f64 / n as f64;
                    let cand = [
                        c(rho * th1.cos(), rho * th1.sin()),
                        c(z2m * th2.cos(), z2m * th2.sin()),
                    ];
                    let dd = dist2(cand, z);
                    if dd < best.0 {
                        best = (dd, cand);
                    }
                }
            }
        }
        // Newton answer is at least as close as the mesh optimum (up to mesh size)
        assert!(dist2(w, z) <= best.0 + 0.06);
        assert!(dist2(w, best.1) < 0.12);
    }

    #[test]
    fn levi_values() {
        let ball = catalog::ball();
        let v = levi_spot_check(&ball, [c(0.0, 0.0), c(1.0, 0.0)], 1e-9).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        let v = levi_spot_check(&ball, [c(0.6, 0.0), c(0.8, 0.0)], 1e-9).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);

        let egg = catalog::egg(2);
        // flat complex-tangential direction at the type-4 point
        let v = levi_spot_check(&egg, [c(0.0, 0.0), c(1.0, 0.0)], 1e-9).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-12);
        // strictly positive off the poles: expected value from the closed form
        // Levi(t) = (4|z1|^2 |t1|^2 + |t2|^2)/|dr| with t ~ (-r_z2, r_z1)/|dr|
        let z1 = c(0.8, 0.0);
        let z2m = (1.0f64 - 0.8f64.powi(4)).sqrt();
        let z = [z1, c(z2m, 0.0)];
        let v = levi_spot_check(&egg, z, 1e-9).unwrap();
        let g1 = 2.0 * z1 * z1.norm_sqr(); // d/dz1 |z1|^4 = 2 z1bar |z1|^2 conj'd below
        let g = [g1.conj(), c(z2m, 0.0)];
        let gn = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
        let t = [-g[1] / gn, g[0] / gn];
        let expected = (4.0 * z1.norm_sqr() * t[0].norm_sqr() + t[1].norm_sqr()) / gn;
        assert!(v > 0.0);
        assert_relative_eq!(v, expected, epsilon = 1e-10);
    }

    #[test]
    fn realness_and_gradient_consistency_random() {
        let ball = catalog::ball();
        let kn = catalog::kohn_nirenberg(15.0 / 7.0);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..10_000 {
            let z = [c(rng(), rng()), c(rng(), rng())];
            assert_eq!(ball.r.poly.eval(z).im, 0.0);
            assert_eq!(kn.r.poly.eval(z).im, 0.0);
        }
        // finite-difference real gradient vs jet entries
        for dom in [&ball, &kn] {
            let z = [c(0.21, -0.37), c(0.55, 0.11)];
            let g = dom.r.grad_real(z);
            let h = 1e-5;
            for axis in 0..4 {
                let mut dp = [0.0; 4];
                dp[axis] = h;
                let mut dm = [0.0; 4];
                dm[axis] = -h;
                let fd = (dom.r.eval(add_real(z, dp)) - dom.r.eval(add_real(z, dm))) / (2.0 * h);
                assert_relative_eq!(fd, g[axis], max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }

    /// Independent jet oracle: exact Lagrange differentiation along each
    /// real axis, combined into Wirtinger derivatives. Polynomial degree is
    /// finite, so differentiating the interpolant is exact up to rounding.
    fn lagrange_diff(f: impl Fn(f64) -> Complex64, deg: usize) -> Complex64 {
        let n = deg + 1;
        let hstep = 0.37;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * hstep).collect();
        let ys: Vec<Complex64> = xs.iter().map(|&x| f(x)).collect();
        // derivative of the Lagrange interpolant at 0
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut sum = 0.0;
            for m in 0..n {
                if m == i {
                    continue;
                }
                let mut prod = 1.0;
                for j in 0..n {
                    if j != i && j != m {
                        prod *= (0.0 - xs[j]) / (xs[i] - xs[j]);
                    }
                }
                sum += prod / (xs[i] - xs[m]);
            }
            acc += ys[i] * sum;
        }
        acc
    }

    #[test]
    fn jet_matches_lagrange_oracle_on_kn() {
        let kn = catalog::kohn_nirenberg(15.0 / 7.0);
        let z = [c(0.13, -0.22), c(0.05, 0.31)];
        let jet = eval_jet(&kn.r, z, 1).unwrap();
        let deg = kn.r.poly.degree() as usize;
        let f = |w: C2| kn.r.poly.eval(w);
        // d/dz1 = (d/dx1 - i d/dy1)/2 at z
        let dx = lagrange_diff(|t| f([z[0] + c(t, 0.0), z[1]]), deg);
        let dy = lagrange_diff(|t| f([z[0] + c(0.0, t), z[1]]), deg);
        let dz1 = (dx - c(0.0, 1.0) * dy) * 0.5;
        assert!((dz1 - jet.get([1, 0, 0, 0])).norm() < 1e-12);
        let dx2 = lagrange_diff(|t| f([z[0], z[1] + c(t, 0.0)]), deg);
        let dy2 = lagrange_diff(|t| f([z[0], z[1] + c(0.0, t)]), deg);
        let dz2b = (dx2 + c(0.0, 1.0) * dy2) * 0.5;
        assert!((dz2b - jet.get([0, 0, 0, 1])).norm() < 1e-12);
    }
}
