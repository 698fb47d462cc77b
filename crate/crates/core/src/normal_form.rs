//! Catlin special coordinates: the recursion that turns a defining
//! function into `Re zeta2 + sum a_{j,k} zeta1^j conj(zeta1)^k + O(...)`
//! by removing the pure-harmonic `zeta1` powers order by order, plus the
//! tangential chart built from `Im g`.
//!
//! Convention: before the first step we apply a unitary rotation so that
//! `dr/dz2 > 0` (real) at the base point; the first step then uses the
//! factor `2 dr/dz2(p)` verbatim. For the unit ball at `(0,1)` this makes
//! `a_{1,1} = 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{boundary_project, C2, DomainSpec};
use crate::error::{CoreError, Result};
use crate::poly::{CPoly, HPoly, HoloMap2, Mono};

/// Normal form at a base point: forward/inverse coordinate maps, the
/// mixed-coefficient table and the removed pure-term coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalForm {
    pub p: C2,
    pub m: u32,
    /// Unitary rotation `z = p + U w` applied before the first step.
    pub rotation: [[Complex64; 2]; 2],
    /// `|dr/dw2(0)| = |(dr/dz1, dr/dz2)(p)|` in the rotated frame.
    pub grad_norm: f64,
    /// Pure-term coefficients `b_l`, `l = 2..=m`, removed at each step.
    pub b: Vec<Complex64>,
    /// `a_{j,k}` for `j,k >= 1`, `j+k <= m`, keyed by `(j,k)`.
    pub a: Vec<((u8, u8), Complex64)>,
    /// Defining function pulled back to normal coordinates, exact table.
    pub rho: CPoly,
    /// `phi_p`: normal coordinates -> ambient.
    pub phi: HoloMap2,
    /// `phi_p^{-1}`: ambient -> normal coordinates.
    pub phi_inv: HoloMap2,
    /// Max modulus over forbidden pure monomials `zeta1^j`, `1 <= j <= m`.
    pub residual_order_certificate: f64,
}

impl NormalForm {
    pub fn a_jk(&self, j: u8, k: u8) -> Complex64 {
        self.a
            .iter()
            .find(|((jj, kk), _)| *jj == j && *kk == k)
            .map(|(_, c)| *c)
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// `g(p, z) = (phi_p^{-1})^{(2)}(z)`.
    pub fn g(&self, z: C2) -> Complex64 {
        self.phi_inv.c2.eval(z)
    }

    /// Hermitian symmetry defect of the `a_{j,k}` table.
    pub fn hermitian_defect(&self) -> f64 {
        self.a
            .iter()
            .map(|((j, k), c)| (c - self.a_jk(*k, *j).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Catlin normalization at a boundary point (`|r(p)| < tol` enforced).
pub fn catlin_normalize(d: &DomainSpec, p: C2, m: u32) -> Result<NormalForm> {
    if d.r.eval(p).abs() > 1e-8 {
        return Err(CoreError::Precondition(format!(
            "base point not on boundary: r(p) = {}",
            d.r.eval(p)
        )));
    }
    catlin_normalize_at(d, p, m)
}

/// Normalization with the base point anywhere in the neighborhood (used
/// for shell points, where `rho_p := r \circ phi_p - r(p)`).
pub fn catlin_normalize_at(d: &DomainSpec, p: C2, m: u32) -> Result<NormalForm> {
    if m < 2 {
        return Err(CoreError::Precondition("normal form order m must be >= 2".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let v = d.r.grad_z(p);
    let vnorm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if vnorm < 1e-10 {
        return Err(CoreError::Geometry("degenerate gradient at base point".into()));
    }
    // Unitary U with second column conj(v)/|v|: dr/dw2(0) = |v| > 0, dr/dw1(0) = 0.
    let col2 = [v[0].conj() / vnorm, v[1].conj() / vnorm];
    let col1 = [-v[1] / vnorm, v[0] / vnorm];
    let u = [[col1[0], col2[0]], [col1[1], col2[1]]];
    // z = p + U w  and  w = U^* (z - p)
    let fwd_a = HoloMap2::affine(u, p);
    let ustar = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
    let shift = [
        -(ustar[0][0] * p[0] + ustar[0][1] * p[1]),
        -(ustar[1][0] * p[0] + ustar[1][1] * p[1]),
    ];
    let inv_a = HoloMap2::affine(ustar, shift);

    // Phi^1 (verbatim, rotated frame): zeta1 = w1, zeta2 = 2 |v| w2.
    let s = Complex64::new(2.0 * vnorm, 0.0);
    let phi1 = HoloMap2 {
        c1: HPoly::var(0),
        c2: HPoly::var(1).scale(one / s),
    };
    let phi1_inv = HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1).scale(s) };

    let base_fwd = fwd_a.after(&phi1);
    let rp = d.r.eval(p);

    // The shear steps Psi_l commute and accumulate into one polynomial
    // B(zeta1) = sum_l 2 b_l zeta1^l; each b_l is read off the cheap
    // one-variable curve t -> base_fwd(t, -B(t)) instead of recomposing
    // the full defining function at every order.
    let mut b_acc = HPoly::zero();
    let mut b = Vec::with_capacity(m as usize - 1);
    for l in 2..=m as u8 {
        let curve = base_fwd.after(&HoloMap2 {
            c1: HPoly::var(0),
            c2: b_acc.scale(Complex64::new(-1.0, 0.0)),
        });
        let pulled = d.r.poly.compose(&curve);
        let bl = pulled.coeff(Mono { a: l, ab: 0, b: 0, bb: 0 });
        b.push(bl);
        b_acc = b_acc.add(&HPoly::var(0).pow(l).scale(bl * 2.0));
    }
    let shear = HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1).sub(&b_acc) };
    let shear_inv = HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1).add(&b_acc) };
    let phi = base_fwd.after(&shear);
    let phi_inv = shear_inv.after(&phi1_inv.after(&inv_a));
    let rho = d
        .r
        .poly
        .compose(&phi)
        .sub(&CPoly::constant(Complex64::new(rp, 0.0)))
        .prune(1e-14);

    let mut a = Vec::new();
    for j in 1..=m as u8 {
        for k in 1..=(m as u8 - j) {
            a.push(((j, k), rho.coeff(Mono { a: j, ab: k, b: 0, bb: 0 })));
        }
    }
    let mut cert = 0.0f64;
    for j in 1..=m as u8 {
        cert = cert.max(rho.coeff(Mono { a: j, ab: 0, b: 0, bb: 0 }).norm());
        cert = cert.max(rho.coeff(Mono { a: 0, ab: j, b: 0, bb: 0 }).norm());
    }
    // rho(0) = 0 and linear part Re zeta2 are structural; surface them in
    // the certificate so a violation trips the consistency check below.
    cert = cert.max(rho.coeff(Mono::ONE).norm());
    cert = cert.max((rho.coeff(Mono { a: 0, ab: 0, b: 1, bb: 0 }) - Complex64::new(0.5, 0.0)).norm());
    if cert > 1e-9 {
        return Err(CoreError::Numeric(format!(
            "normal form residual certificate {cert:.3e} above tolerance"
        )));
    }
    let _ = zero;
    Ok(NormalForm {
        p,
        m,
        rotation: u,
        grad_norm: vnorm,
        b,
        a,
        rho,
        phi,
        phi_inv,
        residual_order_certificate: cert,
    })
}

/// Second component of `phi_p^{-1}` as a holomorphic polynomial in `z`,
/// built without composing the full defining function (the light path
/// behind `Gamma_eps` sampling, where a fresh base point is needed per
/// quadrature node).
pub fn g_function(d: &DomainSpec, p: C2, m: u32) -> Result<HPoly> {
    let one = Complex64::new(1.0, 0.0);
    let v = d.r.grad_z(p);
    let vnorm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if vnorm < 1e-10 {
        return Err(CoreError::Geometry("degenerate gradient at base point".into()));
    }
    let col2 = [v[0].conj() / vnorm, v[1].conj() / vnorm];
    let col1 = [-v[1] / vnorm, v[0] / vnorm];
    let u = [[col1[0], col2[0]], [col1[1], col2[1]]];
    let fwd_a = HoloMap2::affine(u, p);
    let ustar = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
    let shift = [
        -(ustar[0][0] * p[0] + ustar[0][1] * p[1]),
        -(ustar[1][0] * p[0] + ustar[1][1] * p[1]),
    ];
    let inv_a = HoloMap2::affine(ustar, shift);
    let s = Complex64::new(2.0 * vnorm, 0.0);
    let phi1 = HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1).scale(one / s) };
    let phi1_inv = HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1).scale(s) };
    let base_fwd = fwd_a.after(&phi1);
    let mut b_acc = HPoly::zero();
    for l in 2..=m as u8 {
        let curve = base_fwd.after(&HoloMap2 {
            c1: HPoly::var(0),
            c2: b_acc.scale(Complex64::new(-1.0, 0.0)),
        });
        let pulled = d.r.poly.compose(&curve);
        let bl = pulled.coeff(Mono { a: l, ab: 0, b: 0, bb: 0 });
        b_acc = b_acc.add(&HPoly::var(0).pow(l).scale(bl * 2.0));
    }
    let inner = phi1_inv.after(&inv_a);
    // second component of shear_inv . inner = inner.c2 + B(inner.c1)
    Ok(inner.c2.add(&b_acc.compose(&HoloMap2 { c1: inner.c1.clone(), c2: HPoly::zero() })))
}

/// `rho_p(zeta) = r(phi_p(zeta)) - r(p)` via the exact composed table.
pub fn pullback_defining(nf: &NormalForm, zeta: C2) -> f64 {
    nf.rho.eval(zeta).re
}

/// Same value computed by pointwise composition; agreement with
/// [`pullback_defining`] is the exactness certificate.
pub fn pullback_pointwise(d: &DomainSpec, nf: &NormalForm, zeta: C2) -> f64 {
    d.r.eval(nf.phi.eval(zeta)) - d.r.eval(nf.p)
}

/// `g(p, z) = (phi_p^{-1})^{(2)}(z)`.
pub fn second_component_inverse(nf: &NormalForm, z: C2) -> Complex64 {
    nf.g(z)
}

/// Tangential chart of the `Im g` lemma, adapted to the point `z`:
/// `zeta -> (s1, s2, t1, t2)` with `s1 = (r(zeta)+eps)/|grad r|` and
/// `s2 = Im g(zeta, z)/(2 |dr/dw2|)`, both gradient-normalized so the
/// chart differential is unitary on the model ball.
#[derive(Clone, Debug)]
pub struct TangentialChart {
    pub s1: f64,
    pub s2: f64,
    pub t: [f64; 2],
    pub jacobian_cert: f64,
}

pub fn tangential_chart(
    d: &DomainSpec,
    z: C2,
    zeta: C2,
    eps: f64,
    m: u32,
) -> Result<TangentialChart> {
    let b = boundary_project(d, z)?;
    let chart_vals = |q: C2| -> Result<(f64, f64)> {
        let nf = catlin_normalize_at(d, q, m)?;
        let s1 = (d.r.eval(q) + eps) / d.r.grad_real_norm(b).max(1e-14);
        let s2 = nf.g(z).im / (2.0 * nf.grad_norm);
        Ok((s1, s2))
    };
    let (s1, s2) = chart_vals(zeta)?;
    // complex-tangential coordinates of zeta relative to the boundary point
    let g = d.r.grad_z(b);
    let gnorm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    if gnorm < 1e-12 {
        return Err(CoreError::Geometry("degenerate gradient for chart".into()));
    }
    let e_t = [-g[1] / gnorm, g[0] / gnorm];
    let dzeta = [zeta[0] - b[0], zeta[1] - b[1]];
    let tau = dzeta[0] * e_t[0].conj() + dzeta[1] * e_t[1].conj();
    // Jacobian certificate: finite differences of the full chart map at zeta.
    let h = 1e-5;
    let mut jac = [[0.0f64; 4]; 4];
    for axis in 0..4 {
        let mut dz = zeta;
        let mut dz2 = zeta;
        match axis {
            0 => {
                dz[0] += Complex64::new(h, 0.0);
                dz2[0] -= Complex64::new(h, 0.0);
            }
            1 => {
                dz[0] += Complex64::new(0.0, h);
                dz2[0] -= Complex64::new(0.0, h);
            }
            2 => {
                dz[1] += Complex64::new(h, 0.0);
                dz2[1] -= Complex64::new(h, 0.0);
            }
            _ => {
                dz[1] += Complex64::new(0.0, h);
                dz2[1] -= Complex64::new(0.0, h);
            }
        }
        let (a1, a2) = chart_vals(dz)?;
        let (b1, b2) = chart_vals(dz2)?;
        jac[0][axis] = (a1 - b1) / (2.0 * h);
        jac[1][axis] = (a2 - b2) / (2.0 * h);
        let dtau = |q: C2| {
            let dd = [q[0] - b[0], q[1] - b[1]];
            dd[0] * e_t[0].conj() + dd[1] * e_t[1].conj()
        };
        jac[2][axis] = (dtau(dz).re - dtau(dz2).re) / (2.0 * h);
        jac[3][axis] = (dtau(dz).im - dtau(dz2).im) / (2.0 * h);
    }
    let det = det4(&jac).abs();
    if det < 1e-6 {
        return Err(CoreError::Geometry(format!("chart degenerate: |det| = {det:.3e}")));
    }
    Ok(TangentialChart { s1, s2, t: [tau.re, tau.im], jacobian_cert: det })
}

fn det4(m: &[[f64; 4]; 4]) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for i in 0..4 {
        let mut piv = i;
        for r in i + 1..4 {
            if a[r][i].abs() > a[piv][i].abs() {
                piv = r;
            }
        }
        if a[piv][i].abs() < 1e-300 {
            return 0.0;
        }
        if piv != i {
            a.swap(piv, i);
            det = -det;
        }
        det *= a[i][i];
        for r in i + 1..4 {
            let f = a[r][i] / a[i][i];
            for c in i..4 {
                a[r][c] -= f * a[i][c];
            }
        }
    }
    det
}

/// Deterministic sampler of boundary points for the catalog domains
/// (used by the certificates; seeds the projection with random rays).
pub fn sample_boundary_points(d: &DomainSpec, n: usize, seed: u64) -> Vec<C2> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut guard = 0;
    while out.len() < n && guard < 100 * n {
        guard += 1;
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nrm = (dir.iter().map(|t| t * t).sum::<f64>()).sqrt();
        if nrm < 1e-3 {
            continue;
        }
        let scale = 1.2 / nrm;
        let z = [
            Complex64::new(dir[0] * scale, dir[1] * scale),
            Complex64::new(dir[2] * scale, dir[3] * scale),
        ];
        if let Ok(w) = boundary_project(d, z) {
            if d.r.eval(w).abs() < 1e-9 && d.r.grad_real_norm(w) > 1e-4 {
                out.push(w);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{catalog, dist2};
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ball_normal_form_a11() {
        let d = catalog::ball();
        let nf = catlin_normalize(&d, [c(0.0, 0.0), c(1.0, 0.0)], 2).unwrap();
        assert_relative_eq!(nf.a_jk(1, 1).re, 1.0, epsilon = 1e-12);
        assert!(nf.a_jk(1, 1).im.abs() < 1e-12);
        assert!(nf.residual_order_certificate < 1e-12);
    }

    #[test]
    fn egg2_normal_form_a22() {
        let d = catalog::egg(2);
        let nf = catlin_normalize(&d, [c(0.0, 0.0), c(1.0, 0.0)], 4).unwrap();
        assert_relative_eq!(nf.a_jk(2, 2).re, 1.0, epsilon = 1e-12);
        assert!(nf.a_jk(1, 1).norm() < 1e-12);
        assert!(nf.residual_order_certificate < 1e-12);
    }

    #[test]
    fn pure_terms_vanish_random_boundary() {
        for (d, m) in [
            (catalog::ball(), 2u32),
            (catalog::egg(2), 4),
            (catalog::egg(3), 6),
        ] {
            for p in sample_boundary_points(&d, 10, 7) {
                let nf = catlin_normalize(&d, p, m).unwrap();
                assert!(
                    nf.residual_order_certificate < 1e-9,
                    "certificate {} at {:?}",
                    nf.residual_order_certificate,
                    p
                );
                assert!(nf.hermitian_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn pullback_exactness() {
        let d = catalog::egg(2);
        let p = sample_boundary_points(&d, 1, 3)[0];
        let nf = catlin_normalize(&d, p, 4).unwrap();
        assert!(pullback_defining(&nf, [c(0.0, 0.0); 2]).abs() < 1e-13);
        let mut state = 1234u64;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.6
        };
        for _ in 0..1000 {
            let zeta = [c(rng(), rng()), c(rng(), rng())];
            let a = pullback_defining(&nf, zeta);
            let b = pullback_pointwise(&d, &nf, zeta);
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn ball_rho_small_imaginary_zeta2() {
        let d = catalog::ball();
        let nf = catlin_normalize(&d, [c(0.0, 0.0), c(1.0, 0.0)], 2).unwrap();
        for y in [1e-3, 1e-2, 5e-2] {
            let rho = pullback_defining(&nf, [c(0.0, 0.0), c(0.0, y)]);
            // Re zeta2 = 0 on the imaginary axis, so rho = O(y^2)
            assert!(rho.abs() < y * y);
        }
    }

    #[test]
    fn g_vanishes_at_base_and_inverse_consistency() {
        let d = catalog::ball();
        let p = [c(0.0, 0.0), c(1.0, 0.0)];
        let nf = catlin_normalize(&d, p, 2).unwrap();
        assert!(nf.g(p).norm() < 1e-13);
        // phi(phi_inv(z)) = z near p
        for dz in [c(0.05, -0.02), c(-0.03, 0.08)] {
            let z = [p[0] + dz, p[1] + dz * c(0.3, 0.1)];
            let zeta = nf.phi_inv.eval(z);
            let back = nf.phi.eval(zeta);
            assert!(dist2(back, z) < 1e-12);
        }
    }

    #[test]
    fn d_im_g_direction_rotated_frame() {
        let d = catalog::egg(2);
        let p = sample_boundary_points(&d, 1, 11)[0];
        let nf = catlin_normalize(&d, p, 4).unwrap();
        // finite differences of Im g(p, .) at p along rotated axes
        let h = 1e-6;
        let u = nf.rotation;
        let mut grad = [0.0f64; 4];
        for (axis, dir) in [
            (0usize, [c(1.0, 0.0), c(0.0, 0.0)]),
            (1, [c(0.0, 1.0), c(0.0, 0.0)]),
            (2, [c(0.0, 0.0), c(1.0, 0.0)]),
            (3, [c(0.0, 0.0), c(0.0, 1.0)]),
        ] {
            // dw along the rotated axis mapped to ambient: dz = U dw
            let dz = [
                u[0][0] * dir[0] + u[0][1] * dir[1],
                u[1][0] * dir[0] + u[1][1] * dir[1],
            ];
            let zp = [p[0] + dz[0] * h, p[1] + dz[1] * h];
            let zm = [p[0] - dz[0] * h, p[1] - dz[1] * h];
            grad[axis] = (nf.g(zp).im - nf.g(zm).im) / (2.0 * h);
        }
        let nrm = (grad.iter().map(|t| t * t).sum::<f64>()).sqrt();
        let unit: Vec<f64> = grad.iter().map(|t| t / nrm).collect();
        // d Im g = 2|v| dy2 in the rotated frame
        assert!(unit[0].abs() < 1e-6 && unit[1].abs() < 1e-6 && unit[2].abs() < 1e-6);
        assert_relative_eq!(unit[3].abs(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(nrm, 2.0 * nf.grad_norm, max_relative = 1e-6);
    }

    #[test]
    fn g_function_matches_full_normal_form() {
        let d = catalog::egg(2);
        for base in [
            [c(0.05, 0.02), c(1.01, 0.03)],
            [c(-0.2, 0.1), c(0.9, -0.15)],
        ] {
            let nf = catlin_normalize_at(&d, base, 4).unwrap();
            let g = g_function(&d, base, 4).unwrap();
            for dz in [c(0.0, 0.0), c(0.1, -0.05), c(-0.07, 0.12)] {
                let z = [base[0] + dz, base[1] + dz * c(0.4, -0.2)];
                assert!((nf.g(z) - g.eval(z)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn chart_at_base_and_ball_jacobian() {
        let d = catalog::ball();
        let p = [c(0.0, 0.0), c(1.0, 0.0)];
        let chart = tangential_chart(&d, p, p, 0.0, 2).unwrap();
        assert!(chart.s1.abs() < 1e-12 && chart.s2.abs() < 1e-12);
        assert_relative_eq!(chart.jacobian_cert, 1.0, epsilon = 1e-4);
    }
}
