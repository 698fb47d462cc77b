//! Bochner-Martinelli and Cauchy-Fantappie kernels and the homotopy
//! operators `H1^0`, `H1^1`, `H2^0` on interior approximating domains.
//!
//! Scalar reductions used throughout (volume pairings, `u_i = conj(zeta_i - z_i)`,
//! `X = |zeta - z|^2`):
//!
//! ```text
//! H1^0 phi (z) = -(1/pi^2) Int  [u1 f1 + u2 f2] / X^2 dV
//! H2^0 dbar phi (z) = (1/pi^2) [Int h u2 / X^2 dV] dzbar1
//!                   - (1/pi^2) [Int h u1 / X^2 dV] dzbar2
//! H1^1 phi (z) = -(1/pi^2) Int_shell [u1 W2 - u2 W1] / X * g dV
//! ```
//!
//! with `f` the extended coefficients, `h` the extended `dbar phi`
//! coefficient, and `g` the `[dbar, E]`-commutator coefficient. The
//! orientation is fixed by the identity
//! `d/dzbar_k H1^1 = (B_{(0,1)}-pairing)_k`, which holds pointwise for
//! sections with `<W, zeta - z> = 1` holomorphic in `z`; the ball smoke
//! test exercises it end to end.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::division::LeraySection;
use crate::domain::{C2, DomainSpec};
use crate::error::{CoreError, Result};
use crate::poly::{CPoly, WDir};
use crate::quad::{gauss_on, s3_directions, Grid4, S3_AREA};

const INV_PI2: f64 = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);

/// Bochner-Martinelli kernel components at `(z, zeta)`: the vectors that
/// pair with the extended `(0,1)` coefficients (`b00`) and with the
/// extended `(0,2)` coefficient (`b01`, per output `dzbar` component).
#[derive(Clone, Copy, Debug)]
pub struct BmComponents {
    pub b00: [Complex64; 2],
    pub b01: [Complex64; 2],
}

pub fn bm_kernel(z: C2, zeta: C2) -> Result<BmComponents> {
    let u = [(zeta[0] - z[0]).conj(), (zeta[1] - z[1]).conj()];
    let x = (zeta[0] - z[0]).norm_sqr() + (zeta[1] - z[1]).norm_sqr();
    if x == 0.0 {
        return Err(CoreError::Numeric("Bochner-Martinelli kernel at coincident points".into()));
    }
    let x2 = x * x;
    Ok(BmComponents {
        b00: [-INV_PI2 * u[0] / x2, -INV_PI2 * u[1] / x2],
        b01: [INV_PI2 * u[1] / x2, -INV_PI2 * u[0] / x2],
    })
}

/// Cauchy-Fantappie kernel scalar for the `(0,0)` component, with the
/// reproduction identity checked at the evaluation point.
pub fn cf_kernel(
    section: &dyn LeraySection,
    z: C2,
    zeta: C2,
    reproduction_tol: f64,
) -> Result<Complex64> {
    let w = section.eval(zeta, z)?;
    let rep = (w[0] * (zeta[0] - z[0]) + w[1] * (zeta[1] - z[1]) - Complex64::new(1.0, 0.0)).norm();
    if rep > reproduction_tol {
        return Err(CoreError::Numeric(format!(
            "kernel integrity: Leray reproduction residual {rep:.3e} at zeta = {zeta:?}"
        )));
    }
    let u = [(zeta[0] - z[0]).conj(), (zeta[1] - z[1]).conj()];
    let x = (zeta[0] - z[0]).norm_sqr() + (zeta[1] - z[1]).norm_sqr();
    Ok(-INV_PI2 * (u[0] * w[1] - u[1] * w[0]) / x)
}

/// The `(0,1)`-in-`z` component of `K` pairs with `[dbar, E] dbar phi`,
/// which is a `(0,3)`-form in `C^2`, hence zero: `H2^1` vanishes at the
/// integrand level.
pub fn h2_1_integrand_is_zero() -> bool {
    true
}

/// Smooth radial cutoff `chi(zeta) = S((t1 - r(zeta)) / (t1 - t0))` with
/// the exponential smoothstep; `chi = 1` on `{r <= t0}`, `0` on `{r >= t1}`.
#[derive(Clone, Debug)]
pub struct CutoffChi {
    pub r: CPoly,
    pub r_zbar: [CPoly; 2],
    pub t0: f64,
    pub t1: f64,
}

fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let b = (-1.0 / x).exp();
        let c = (-1.0 / (1.0 - x)).exp();
        b / (b + c)
    }
}

fn smoothstep_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let b = (-1.0 / x).exp();
    let c = (-1.0 / (1.0 - x)).exp();
    let db = b / (x * x);
    let dc = -c / ((1.0 - x) * (1.0 - x));
    (db * (b + c) - b * (db + dc)) / ((b + c) * (b + c))
}

impl CutoffChi {
    pub fn new(d: &DomainSpec, t0: f64, t1: f64) -> Self {
        CutoffChi {
            r: d.r.poly.clone(),
            r_zbar: [d.r.poly.wirtinger(WDir::Z1Bar), d.r.poly.wirtinger(WDir::Z2Bar)],
            t0,
            t1,
        }
    }

    pub fn value(&self, zeta: C2) -> f64 {
        let r = self.r.eval(zeta).re;
        smoothstep((self.t1 - r) / (self.t1 - self.t0))
    }

    /// `(dchi/dzbar1, dchi/dzbar2)`.
    pub fn dbar(&self, zeta: C2) -> [Complex64; 2] {
        let r = self.r.eval(zeta).re;
        let x = (self.t1 - r) / (self.t1 - self.t0);
        let ds = smoothstep_deriv(x) * (-1.0 / (self.t1 - self.t0));
        [self.r_zbar[0].eval(zeta) * ds, self.r_zbar[1].eval(zeta) * ds]
    }

    pub fn in_transition(&self, r: f64, margin: f64) -> bool {
        r > self.t0 - margin && r < self.t1 + margin
    }
}

/// Closed-form `(0,1)` test forms with exact `dbar`.
#[derive(Clone, Debug)]
pub enum TestForm {
    Zero,
    /// `dzbar1` (closed).
    DzBar1,
    /// `zbar2 dzbar1 + zbar1 dzbar2 = dbar(zbar1 zbar2)` (closed).
    SymClosed,
    /// `zbar2 dzbar1` (`dbar = -dzbar1 ^ dzbar2`).
    NonClosed,
    /// `|r|^sigma dzbar1`: rough at the boundary, smooth on the
    /// commutator shell.
    Rough { r: CPoly, r_zbar2: CPoly, sigma: f64 },
    /// `dbar((-r)_+^{1+s})`: a dbar-closed form with exactly Lambda^s
    /// boundary roughness, supported in the closed domain.
    RoughClosed { r: CPoly, r_zbar: [CPoly; 2], s: f64 },
    /// `a phi + b psi` for linearity checks.
    Combo(Complex64, Box<TestForm>, Complex64, Box<TestForm>),
}

impl TestForm {
    pub fn rough(d: &DomainSpec, sigma: f64) -> TestForm {
        TestForm::Rough {
            r: d.r.poly.clone(),
            r_zbar2: d.r.poly.wirtinger(WDir::Z2Bar),
            sigma,
        }
    }

    pub fn rough_closed(d: &DomainSpec, s: f64) -> TestForm {
        TestForm::RoughClosed {
            r: d.r.poly.clone(),
            r_zbar: [d.r.poly.wirtinger(WDir::Z1Bar), d.r.poly.wirtinger(WDir::Z2Bar)],
            s,
        }
    }

    /// Coefficients `(f1, f2)` of `f1 dzbar1 + f2 dzbar2`.
    pub fn coeffs(&self, zeta: C2) -> [Complex64; 2] {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            TestForm::Zero => [zero, zero],
            TestForm::DzBar1 => [Complex64::new(1.0, 0.0), zero],
            TestForm::SymClosed => [zeta[1].conj(), zeta[0].conj()],
            TestForm::NonClosed => [zeta[1].conj(), zero],
            TestForm::Rough { r, sigma, .. } => {
                let v = r.eval(zeta).re.abs();
                [Complex64::new(v.powf(*sigma), 0.0), zero]
            }
            TestForm::RoughClosed { r, r_zbar, s } => {
                let v = r.eval(zeta).re;
                if v >= 0.0 {
                    return [zero, zero];
                }
                let amp = -(1.0 + s) * (-v).powf(*s);
                [r_zbar[0].eval(zeta) * amp, r_zbar[1].eval(zeta) * amp]
            }
            TestForm::Combo(a, phi, b, psi) => {
                let x = phi.coeffs(zeta);
                let y = psi.coeffs(zeta);
                [a * x[0] + b * y[0], a * x[1] + b * y[1]]
            }
        }
    }

    /// Coefficient `h` of `dbar phi = h dzbar1 ^ dzbar2`.
    pub fn dbar_coeff(&self, zeta: C2) -> Complex64 {
        match self {
            TestForm::Zero
            | TestForm::DzBar1
            | TestForm::SymClosed
            | TestForm::RoughClosed { .. } => Complex64::new(0.0, 0.0),
            // h = d f2/dzbar1 - d f1/dzbar2 = -1
            TestForm::NonClosed => Complex64::new(-1.0, 0.0),
            TestForm::Rough { r, r_zbar2, sigma } => {
                let v = r.eval(zeta).re;
                let grad = r_zbar2.eval(zeta);
                // -d/dzbar2 |r|^sigma
                -Complex64::new(*sigma * v.abs().powf(*sigma - 1.0) * v.signum(), 0.0) * grad
            }
            TestForm::Combo(a, phi, b, psi) => {
                a * phi.dbar_coeff(zeta) + b * psi.dbar_coeff(zeta)
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            TestForm::Zero
            | TestForm::DzBar1
            | TestForm::SymClosed
            | TestForm::RoughClosed { .. } => true,
            TestForm::NonClosed | TestForm::Rough { .. } => false,
            TestForm::Combo(_, phi, _, psi) => phi.is_closed() && psi.is_closed(),
        }
    }
}

/// Materialized quadrature node set with a region tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum RegionTag {
    Interior,
    Shell,
    Ambient,
}

#[derive(Clone, Debug)]
pub struct QuadratureScheme {
    pub region: RegionTag,
    pub nodes: Vec<C2>,
    pub weights: Vec<f64>,
    pub level: usize,
}

impl QuadratureScheme {
    pub fn from_grid_mask(
        grid: &Grid4,
        level: usize,
        region: RegionTag,
        mask: impl Fn(C2) -> bool,
    ) -> Self {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        grid.for_each_center(|zeta| {
            if mask(zeta) {
                nodes.push(zeta);
                weights.push(grid.cell_volume);
            }
        });
        QuadratureScheme { region, nodes, weights, level }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Homotopy operator evaluator over one uniform grid level.
pub struct HomotopyOp<'a> {
    pub domain: &'a DomainSpec,
    pub chi: &'a CutoffChi,
    pub grid: Grid4,
    /// Near-zone radius in cells for the polar treatment.
    pub polar_cells: f64,
    /// Radial Gauss order and extra S^3 directions of the polar rule.
    pub polar_radial: usize,
    pub polar_dirs_extra: usize,
    /// Subdivision factor for cells meeting the commutator shell.
    pub shell_subdiv: usize,
}

impl<'a> HomotopyOp<'a> {
    pub fn new(domain: &'a DomainSpec, chi: &'a CutoffChi, n: usize, half: f64) -> Self {
        HomotopyOp {
            domain,
            chi,
            grid: Grid4::new(half, n),
            polar_cells: 4.0,
            polar_radial: 8,
            polar_dirs_extra: 40,
            shell_subdiv: 2,
        }
    }

    /// Snap a nominal point to the cell-center lattice (keeps the
    /// near-zone pattern translation-covariant across the finite
    /// difference stencil).
    pub fn snap(&self, z: C2) -> C2 {
        let g = &self.grid;
        let snap1 = |x: f64| {
            let i = ((x + g.half) / g.h - 0.5).round();
            let i = i.clamp(0.0, g.n as f64 - 1.0);
            -g.half + (i + 0.5) * g.h
        };
        [
            Complex64::new(snap1(z[0].re), snap1(z[0].im)),
            Complex64::new(snap1(z[1].re), snap1(z[1].im)),
        ]
    }

    /// `H1^0 phi` and (optionally) `H2^0 dbar phi` at the evaluation
    /// points, sharing one sweep over the grid.
    pub fn bm_integrals(
        &self,
        form: &TestForm,
        eval_pts: &[C2],
        want_h2: bool,
    ) -> (Vec<Complex64>, Vec<[Complex64; 2]>) {
        let n_e = eval_pts.len();
        let mut h1 = vec![Complex64::new(0.0, 0.0); n_e];
        let mut h2 = vec![[Complex64::new(0.0, 0.0); 2]; n_e];
        let vol = self.grid.cell_volume;
        // Near-zone membership is decided on exact integer lattice offsets:
        // a distance comparison would hit floating-point ties at offsets
        // like (4,0,0,0) vs (2,2,2,2) and break the translation covariance
        // that lets the finite-difference stencil cancel the common error.
        let near_cells2 = (self.polar_cells * self.polar_cells).round() as i64;
        let h = self.grid.h;
        self.grid.for_each_center(|zeta| {
            let chi = self.chi.value(zeta);
            if chi == 0.0 {
                return;
            }
            let f = form.coeffs(zeta);
            let a = [f[0] * chi, f[1] * chi];
            let hcoef = if want_h2 { form.dbar_coeff(zeta) * chi } else { Complex64::new(0.0, 0.0) };
            for (e, z) in eval_pts.iter().enumerate() {
                let d0 = zeta[0] - z[0];
                let d1 = zeta[1] - z[1];
                let di = [
                    (d0.re / h).round() as i64,
                    (d0.im / h).round() as i64,
                    (d1.re / h).round() as i64,
                    (d1.im / h).round() as i64,
                ];
                if di.iter().map(|t| t * t).sum::<i64>() <= near_cells2 {
                    continue; // handled by the polar rule
                }
                let x = d0.norm_sqr() + d1.norm_sqr();
                let x2 = x * x;
                let u = [d0.conj(), d1.conj()];
                h1[e] += -INV_PI2 * (u[0] * a[0] + u[1] * a[1]) / x2 * vol;
                if want_h2 {
                    h2[e][0] += INV_PI2 * hcoef * u[1] / x2 * vol;
                    h2[e][1] += -INV_PI2 * hcoef * u[0] / x2 * vol;
                }
            }
        });
        // polar correction per evaluation point
        let dirs = s3_directions(self.polar_dirs_extra);
        let wdir = S3_AREA / dirs.len() as f64;
        let rmax = self.polar_cells * self.grid.h;
        let (rs, ws) = gauss_on(0.0, rmax, self.polar_radial);
        for (e, z) in eval_pts.iter().enumerate() {
            for dir in &dirs {
                for (r, wr) in rs.iter().zip(&ws) {
                    let zeta = [
                        z[0] + Complex64::new(dir[0] * r, dir[1] * r),
                        z[1] + Complex64::new(dir[2] * r, dir[3] * r),
                    ];
                    let chi = self.chi.value(zeta);
                    if chi == 0.0 {
                        continue;
                    }
                    let f = form.coeffs(zeta);
                    let x = r * r;
                    let x2 = x * x;
                    let u = [
                        Complex64::new(dir[0] * r, -dir[1] * r),
                        Complex64::new(dir[2] * r, -dir[3] * r),
                    ];
                    let scale = wdir * wr * r * r * r; // r^3 dr dS
                    h1[e] += -INV_PI2 * (u[0] * f[0] + u[1] * f[1]) * chi / x2 * scale;
                    if want_h2 {
                        let hcoef = form.dbar_coeff(zeta) * chi;
                        h2[e][0] += INV_PI2 * hcoef * u[1] / x2 * scale;
                        h2[e][1] += -INV_PI2 * hcoef * u[0] / x2 * scale;
                    }
                }
            }
        }
        (h1, h2)
    }

    /// `H1^1 phi` at the evaluation points: the commutator shell
    /// integral against the Cauchy-Fantappie kernel.
    pub fn h1_1(
        &self,
        form: &TestForm,
        section: &dyn LeraySection,
        eval_pts: &[C2],
    ) -> Result<Vec<Complex64>> {
        let n_e = eval_pts.len();
        let mut acc = vec![Complex64::new(0.0, 0.0); n_e];
        let margin = self.grid.h;
        let sub = self.shell_subdiv.max(1);
        let subvol = self.grid.cell_volume / (sub * sub * sub * sub) as f64;
        let mut err: Option<CoreError> = None;
        self.grid.for_each_center(|cell| {
            if err.is_some() {
                return;
            }
            let rc = self.domain.r.eval(cell);
            if !self.chi.in_transition(rc, 4.0 * margin) {
                return;
            }
            // subdivide the cell; integrand vanishes smoothly at the zone edges
            let hs = self.grid.h / sub as f64;
            for i0 in 0..sub {
                for i1 in 0..sub {
                    for i2 in 0..sub {
                        for i3 in 0..sub {
                            let zeta = [
                                cell[0]
                                    + Complex64::new(
                                        -self.grid.h / 2.0 + (i0 as f64 + 0.5) * hs,
                                        -self.grid.h / 2.0 + (i1 as f64 + 0.5) * hs,
                                    ),
                                cell[1]
                                    + Complex64::new(
                                        -self.grid.h / 2.0 + (i2 as f64 + 0.5) * hs,
                                        -self.grid.h / 2.0 + (i3 as f64 + 0.5) * hs,
                                    ),
                            ];
                            let dchi = self.chi.dbar(zeta);
                            if dchi[0].norm_sqr() + dchi[1].norm_sqr() == 0.0 {
                                continue;
                            }
                            let f = form.coeffs(zeta);
                            let g = dchi[0] * f[1] - dchi[1] * f[0];
                            if g.norm_sqr() == 0.0 {
                                continue;
                            }
                            for (e, z) in eval_pts.iter().enumerate() {
                                match section.eval(zeta, *z) {
                                    Ok(w) => {
                                        let d0 = zeta[0] - z[0];
                                        let d1 = zeta[1] - z[1];
                                        let x = d0.norm_sqr() + d1.norm_sqr();
                                        let u = [d0.conj(), d1.conj()];
                                        acc[e] +=
                                            -INV_PI2 * (u[0] * w[1] - u[1] * w[0]) / x * g * subvol;
                                    }
                                    Err(e2) => {
                                        err = Some(e2);
                                        return;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    }
}

/// One refinement level of the homotopy residual study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualLevel {
    pub n: usize,
    pub h: f64,
    pub residual_max: f64,
    pub residual_l2: f64,
    pub relative_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HomotopyReport {
    pub levels: Vec<ResidualLevel>,
    pub observed_orders: Vec<f64>,
}

/// Runs `phi - dbar(H1^0 + H1^1) phi - H2^0 dbar phi` on a fixed nominal
/// query set, per grid level, with `dbar` of the computed potential by
/// centered differences at the grid step.
#[allow(clippy::too_many_arguments)]
pub fn homotopy_residual(
    domain: &DomainSpec,
    chi: &CutoffChi,
    form: &TestForm,
    section: &dyn LeraySection,
    queries: &[C2],
    levels: &[usize],
    half: f64,
    drop_h2: bool,
) -> Result<HomotopyReport> {
    let mut out = Vec::new();
    for &n in levels {
        let op = HomotopyOp::new(domain, chi, n, half);
        let h = op.grid.h;
        // snapped queries plus FD stencil
        let snapped: Vec<C2> = queries.iter().map(|z| op.snap(*z)).collect();
        let mut eval_pts: Vec<C2> = Vec::with_capacity(snapped.len() * 9);
        for z in &snapped {
            eval_pts.push(*z);
            for axis in 0..4 {
                for sgn in [1.0, -1.0] {
                    let mut w = *z;
                    match axis {
                        0 => w[0] += Complex64::new(sgn * h, 0.0),
                        1 => w[0] += Complex64::new(0.0, sgn * h),
                        2 => w[1] += Complex64::new(sgn * h, 0.0),
                        _ => w[1] += Complex64::new(0.0, sgn * h),
                    }
                    eval_pts.push(w);
                }
            }
        }
        let want_h2 = !form.is_closed() && !drop_h2;
        let (h10, h20) = op.bm_integrals(form, &eval_pts, want_h2);
        let h11 = op.h1_1(form, section, &eval_pts)?;
        let u: Vec<Complex64> = h10.iter().zip(&h11).map(|(a, b)| a + b).collect();
        let mut rmax = 0.0f64;
        let mut r2 = 0.0f64;
        let mut fmax = 0.0f64;
        let mut count = 0usize;
        for (k, z) in snapped.iter().enumerate() {
            let base = k * 9;
            // stencil order: +x1, -x1, +y1, -y1, +x2, -x2, +y2, -y2
            let dx1 = (u[base + 1] - u[base + 2]) / (2.0 * h);
            let dy1 = (u[base + 3] - u[base + 4]) / (2.0 * h);
            let dx2 = (u[base + 5] - u[base + 6]) / (2.0 * h);
            let dy2 = (u[base + 7] - u[base + 8]) / (2.0 * h);
            let img = Complex64::new(0.0, 1.0);
            let dbar_u = [(dx1 + img * dy1) * 0.5, (dx2 + img * dy2) * 0.5];
            let f = form.coeffs(*z);
            let h2v = if want_h2 { h20[base] } else { [Complex64::new(0.0, 0.0); 2] };
            for i in 0..2 {
                let res = (f[i] - dbar_u[i] - h2v[i]).norm();
                rmax = rmax.max(res);
                r2 += res * res;
                fmax = fmax.max(f[i].norm());
                count += 1;
            }
        }
        let l2 = (r2 / count as f64).sqrt();
        out.push(ResidualLevel {
            n,
            h,
            residual_max: rmax,
            residual_l2: l2,
            relative_max: if fmax > 0.0 { rmax / fmax } else { rmax },
        });
    }
    let orders = out
        .windows(2)
        .map(|w| {
            (w[0].residual_max / w[1].residual_max).log2()
                / (w[1].n as f64 / w[0].n as f64).log2()
        })
        .collect();
    Ok(HomotopyReport { levels: out, observed_orders: orders })
}

/// `H1^0 phi(z)` by global polar quadrature around `z` in Hopf-style
/// coordinates on S^3; the radial direction resolves the near-boundary
/// scale, so evaluation accuracy is uniform in the distance of `z` to
/// the boundary. Used for boundary-approaching solution values and as an
/// independent oracle for the grid evaluator.
pub fn h1_0_polar(
    chi: &CutoffChi,
    form: &TestForm,
    z: C2,
    n_theta: usize,
    n_phi: usize,
    n_r: usize,
    r_max: f64,
) -> Complex64 {
    let (ths, wths) = gauss_on(0.0, std::f64::consts::FRAC_PI_2, n_theta);
    let (rs, wrs) = gauss_on(0.0, r_max, n_r);
    let mut acc = Complex64::new(0.0, 0.0);
    for (th, wth) in ths.iter().zip(&wths) {
        for i in 0..n_phi {
            let p1 = std::f64::consts::TAU * i as f64 / n_phi as f64;
            for j in 0..n_phi {
                let p2 = std::f64::consts::TAU * j as f64 / n_phi as f64;
                let dir = [
                    th.cos() * p1.cos(),
                    th.cos() * p1.sin(),
                    th.sin() * p2.cos(),
                    th.sin() * p2.sin(),
                ];
                let wdir =
                    th.sin() * th.cos() * wth * (std::f64::consts::TAU / n_phi as f64).powi(2);
                for (r, wr) in rs.iter().zip(&wrs) {
                    let zeta = [
                        z[0] + Complex64::new(dir[0] * r, dir[1] * r),
                        z[1] + Complex64::new(dir[2] * r, dir[3] * r),
                    ];
                    let cv = chi.value(zeta);
                    if cv == 0.0 {
                        continue;
                    }
                    let f = form.coeffs(zeta);
                    if f[0].norm_sqr() + f[1].norm_sqr() == 0.0 {
                        continue;
                    }
                    let u = [
                        Complex64::new(dir[0] * r, -dir[1] * r),
                        Complex64::new(dir[2] * r, -dir[3] * r),
                    ];
                    let x2 = (r * r) * (r * r);
                    acc += -INV_PI2 * (u[0] * f[0] + u[1] * f[1]) * cv / x2
                        * (wdir * wr * r * r * r);
                }
            }
        }
    }
    acc
}

/// Newtonian potential `G * f` in R^4 (`G = -1/(4 pi^2 |x|^2)`) with the
/// same singular-cell treatment; used as the quadrature smoke test.
pub fn newton_potential(
    chi: &CutoffChi,
    f: &dyn Fn(C2) -> f64,
    grid: &Grid4,
    eval_pts: &[C2],
) -> Vec<f64> {
    let inv4pi2 = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let mut out = vec![0.0; eval_pts.len()];
    let h = grid.h;
    grid.for_each_center(|zeta| {
        let val = f(zeta) * chi.value(zeta);
        if val == 0.0 {
            return;
        }
        for (e, z) in eval_pts.iter().enumerate() {
            let d0 = zeta[0] - z[0];
            let d1 = zeta[1] - z[1];
            let di = [
                (d0.re / h).round() as i64,
                (d0.im / h).round() as i64,
                (d1.re / h).round() as i64,
                (d1.im / h).round() as i64,
            ];
            if di.iter().map(|t| t * t).sum::<i64>() <= 16 {
                continue;
            }
            let x = d0.norm_sqr() + d1.norm_sqr();
            out[e] += -inv4pi2 / x * val * grid.cell_volume;
        }
    });
    let dirs = s3_directions(40);
    let wdir = S3_AREA / dirs.len() as f64;
    let (rs, ws) = gauss_on(0.0, 4.0 * grid.h, 8);
    for (e, z) in eval_pts.iter().enumerate() {
        for dir in &dirs {
            for (r, wr) in rs.iter().zip(&ws) {
                let zeta = [
                    z[0] + Complex64::new(dir[0] * r, dir[1] * r),
                    z[1] + Complex64::new(dir[2] * r, dir[3] * r),
                ];
                let val = f(zeta) * chi.value(zeta);
                out[e] += -inv4pi2 / (r * r) * val * wdir * wr * r * r * r;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::division::ConvexLeray;
    use crate::domain::catalog;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bm_scaling_and_antisymmetry() {
        let z = [c(0.0, 0.0), c(0.0, 0.0)];
        for k in 1..30 {
            let t = k as f64 * 0.17;
            let zeta = [c(t.cos() * 0.4, 0.2), c(0.1, -t.sin() * 0.5)];
            let d = (zeta[0].norm_sqr() + zeta[1].norm_sqr()).sqrt();
            let b = bm_kernel(z, zeta).unwrap();
            let mag = (b.b00[0].norm_sqr() + b.b00[1].norm_sqr()).sqrt();
            assert!(mag <= INV_PI2 / d.powi(3) * 1.0001, "|B| not within C/d^3");
            // swap antisymmetry of the (zetabar - zbar) factor
            let b2 = bm_kernel(zeta, z).unwrap();
            for i in 0..2 {
                assert!((b.b00[i] + b2.b00[i]).norm() < 1e-13);
            }
        }
        assert!(bm_kernel(z, z).is_err());
        assert!(h2_1_integrand_is_zero());
    }

    #[test]
    fn cf_kernel_finite_on_shell() {
        let d = catalog::ball();
        let sec = ConvexLeray::new(&d);
        let z = [c(0.1, 0.0), c(0.2, -0.1)];
        let mut checked = 0;
        for k in 0..200 {
            let th = k as f64 * 0.13;
            let zeta = [
                c(0.3 * th.cos(), 0.3 * th.sin()),
                c(1.02 + 0.05 * (1.0 + th.sin()), 0.1 * th.cos()),
            ];
            if d.r.eval(zeta) <= 0.0 {
                continue;
            }
            let v = cf_kernel(&sec, z, zeta, 1e-10).unwrap();
            assert!(v.norm().is_finite());
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn chi_cutoff_shape() {
        let d = catalog::ball();
        let chi = CutoffChi::new(&d, 0.04, 0.36);
        assert_eq!(chi.value([c(0.0, 0.0), c(0.0, 0.0)]), 1.0);
        assert_eq!(chi.value([c(0.0, 0.0), c(1.3, 0.0)]), 0.0);
        let mid = [c(0.0, 0.0), c(1.09, 0.0)];
        let v = chi.value(mid);
        assert!(v > 0.0 && v < 1.0);
        // dbar chi matches finite differences of chi
        let h = 1e-6;
        let fd_re = (chi.value([mid[0], mid[1] + c(h, 0.0)])
            - chi.value([mid[0], mid[1] - c(h, 0.0)]))
            / (2.0 * h);
        let fd_im = (chi.value([mid[0], mid[1] + c(0.0, h)])
            - chi.value([mid[0], mid[1] - c(0.0, h)]))
            / (2.0 * h);
        let want = (Complex64::new(fd_re, 0.0) + Complex64::new(0.0, 1.0) * fd_im) * 0.5;
        let got = chi.dbar(mid)[1];
        assert!((want - got).norm() < 1e-6 * (1.0 + want.norm()));
    }

    #[test]
    fn newtonian_laplacian_recovers_density() {
        // f = smooth bump; Laplacian of G*f at interior points ~ f
        let d = catalog::ball();
        let chi = CutoffChi::new(&d, 0.04, 0.36);
        let f = |z: C2| {
            let s = z[0].norm_sqr() + z[1].norm_sqr();
            (-3.0 * s).exp()
        };
        let grid = Grid4::new(1.25, 28);
        let h = grid.h;
        let z0 = [c(h * 0.5, h * 0.5), c(h * 0.5, h * 0.5)]; // lattice-aligned
        let mut pts = vec![z0];
        for axis in 0..4 {
            for sgn in [1.0f64, -1.0] {
                let mut w = z0;
                match axis {
                    0 => w[0] += c(sgn * h, 0.0),
                    1 => w[0] += c(0.0, sgn * h),
                    2 => w[1] += c(sgn * h, 0.0),
                    _ => w[1] += c(0.0, sgn * h),
                }
                pts.push(w);
            }
        }
        let v = newton_potential(&chi, &f, &grid, &pts);
        let lap = (v[1] + v[2] + v[3] + v[4] + v[5] + v[6] + v[7] + v[8] - 8.0 * v[0]) / (h * h);
        let expect = f(z0);
        assert!(
            (lap - expect).abs() < 0.08 * expect.abs(),
            "Laplacian consistency: {lap} vs {expect}"
        );
    }

    #[test]
    fn h1_linearity_at_quadrature_level() {
        let d = catalog::ball();
        let chi = CutoffChi::new(&d, 0.04, 0.36);
        let op = HomotopyOp::new(&d, &chi, 10, 1.25);
        let z = op.snap([c(0.05, 0.0), c(0.1, 0.0)]);
        let phi = TestForm::DzBar1;
        let psi = TestForm::SymClosed;
        let a = c(2.0, -1.0);
        let b = c(-0.5, 0.3);
        let combo = TestForm::Combo(a, Box::new(phi.clone()), b, Box::new(psi.clone()));
        let (v_phi, _) = op.bm_integrals(&phi, &[z], false);
        let (v_psi, _) = op.bm_integrals(&psi, &[z], false);
        let (v_combo, _) = op.bm_integrals(&combo, &[z], false);
        assert!((v_combo[0] - (a * v_phi[0] + b * v_psi[0])).norm() < 1e-12);
        let sec = ConvexLeray::new(&d);
        let w_phi = op.h1_1(&phi, &sec, &[z]).unwrap();
        let w_psi = op.h1_1(&psi, &sec, &[z]).unwrap();
        let w_combo = op.h1_1(&combo, &sec, &[z]).unwrap();
        assert!((w_combo[0] - (a * w_phi[0] + b * w_psi[0])).norm() < 1e-12);
    }

    #[test]
    fn zero_form_residual_zero() {
        let d = catalog::ball();
        let chi = CutoffChi::new(&d, 0.04, 0.36);
        let sec = ConvexLeray::new(&d);
        let rep = homotopy_residual(
            &d,
            &chi,
            &TestForm::Zero,
            &sec,
            &[[c(0.0, 0.0), c(0.0, 0.0)]],
            &[8],
            1.25,
            false,
        )
        .unwrap();
        assert_eq!(rep.levels[0].residual_max, 0.0);
    }

    #[test]
    fn quadrature_scheme_volume() {
        let d = catalog::ball();
        let grid = Grid4::new(1.25, 40);
        let qs = QuadratureScheme::from_grid_mask(&grid, 0, RegionTag::Interior, |z| {
            d.r.eval(z) < 0.0
        });
        let vol_ball = std::f64::consts::PI * std::f64::consts::PI / 2.0;
        assert!((qs.total_weight() - vol_ball).abs() / vol_ball < 6e-3);
        let shell = QuadratureScheme::from_grid_mask(&grid, 0, RegionTag::Shell, |z| {
            let r = d.r.eval(z);
            (0.0..0.36).contains(&r)
        });
        let vol_shell =
            std::f64::consts::PI * std::f64::consts::PI / 2.0 * (1.36f64.powi(2) - 1.0);
        assert!((shell.total_weight() - vol_shell).abs() / vol_shell < 1e-2);
    }

    #[test]
    fn homotopy_residual_ball_dzbar1_converges() {
        let d = catalog::ball();
        let chi = CutoffChi::new(&d, 0.04, 0.36);
        let sec = ConvexLeray::new(&d);
        let queries = vec![
            [c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.12, 0.0), c(0.0, 0.1)],
            [c(0.0, -0.1), c(0.15, 0.0)],
        ];
        let rep = homotopy_residual(
            &d,
            &chi,
            &TestForm::DzBar1,
            &sec,
            &queries,
            &[12, 24],
            1.25,
            false,
        )
        .unwrap();
        assert!(
            rep.levels[1].residual_max < rep.levels[0].residual_max,
            "no decrease: {:?}",
            rep.levels
        );
        assert!(rep.levels[1].relative_max < 0.15, "residual too large: {:?}", rep.levels);
    }
}
