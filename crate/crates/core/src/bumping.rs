//! Bumped domains: the surrogate bump `H = -c_H J_delta`, the enlarged
//! domains `Omega_p^delta`, their intersection `Omega_p^*`, the pushed-out
//! domains `D_delta` / `D_*` in ambient coordinates, the boundary-shell
//! sequence `zeta_j`, and the index selection `j*(q)`.
//!
//! The surrogate bump replaces Catlin's plurisubharmonic function by
//! `-c_H J_delta`, which satisfies the two-sided comparability with
//! `J_delta` by construction; every report derived from it is flagged as
//! surrogate-based.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aniso::{j_delta, AnisoProfile};
use crate::domain::{boundary_project, dist2, norm2, C2, DefiningFunction, DomainSpec};
use crate::error::{CoreError, Result};
use crate::normal_form::{catlin_normalize, NormalForm};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BumpConfig {
    /// Surrogate bump amplitude: `H_{p,delta} = -c_h J_delta`.
    pub c_h: f64,
    pub eps0: f64,
    pub s0: f64,
    pub delta0: f64,
    pub a0: f64,
    /// Chart radius `c` of the normal-coordinate patch.
    pub chart_radius: f64,
    /// Patching radii in the `D_delta` definition, `0 < gamma_inner < gamma`.
    pub gamma: f64,
    pub gamma_inner: f64,
    /// Enlargement level: `D hat = { r < mu }`.
    pub mu: f64,
    /// Geometric grid depth for the `Omega_p^*` intersection.
    pub i_max: u32,
}

impl Default for BumpConfig {
    fn default() -> Self {
        BumpConfig {
            c_h: 0.5,
            eps0: 0.2,
            s0: 0.35,
            delta0: 0.0625,
            a0: 5e-4,
            chart_radius: 0.7,
            gamma: 0.45,
            gamma_inner: 0.3,
            mu: 0.12,
            i_max: 24,
        }
    }
}

impl BumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 * self.c_h > 0.0 && self.eps0 * self.c_h < 1.0) {
            return Err(CoreError::Config("need 0 < eps0 * c_h < 1".into()));
        }
        if !(0.0 < self.gamma_inner && self.gamma_inner < self.gamma) {
            return Err(CoreError::Config("need 0 < gamma_inner < gamma".into()));
        }
        if self.a0 <= 0.0 || self.s0 <= 0.0 || self.delta0 <= 0.0 {
            return Err(CoreError::Config("a0, s0, delta0 must be positive".into()));
        }
        Ok(())
    }
}

/// One bumped domain `Omega_p^delta` in normal coordinates.
#[derive(Clone, Debug)]
pub struct BumpedDomain {
    pub nf: NormalForm,
    pub profile: AnisoProfile,
    pub delta: f64,
    pub config: BumpConfig,
}

impl BumpedDomain {
    pub fn new(nf: NormalForm, delta: f64, config: BumpConfig) -> Result<Self> {
        config.validate()?;
        let profile = AnisoProfile::from_normal_form(&nf);
        Ok(BumpedDomain { nf, profile, delta, config })
    }

    pub fn rho(&self, zeta: C2) -> f64 {
        self.nf.rho.eval(zeta).re
    }

    /// Surrogate bump `H_{p,delta}(zeta) = -c_H J_delta(p, zeta)`.
    pub fn surrogate_bump(&self, zeta: C2) -> f64 {
        -self.config.c_h * j_delta(&self.profile, self.delta, zeta)
    }

    /// `rho^{eps0}_delta = rho + eps0 H_{p,delta}`.
    pub fn rho_bumped(&self, zeta: C2) -> f64 {
        self.rho(zeta) + self.config.eps0 * self.surrogate_bump(zeta)
    }

    /// `W_{s,delta}(p) = { |zeta| < c, |rho| < s J_delta }`.
    pub fn in_w_strip(&self, zeta: C2, s: f64) -> bool {
        norm2(zeta) < self.config.chart_radius
            && self.rho(zeta).abs() < s * j_delta(&self.profile, self.delta, zeta)
    }

    /// Membership in `Omega_p^delta` (union of the untouched interior
    /// piece and the bumped strip piece).
    pub fn member(&self, zeta: C2) -> Result<bool> {
        if norm2(zeta) >= self.config.chart_radius {
            return Err(CoreError::Geometry(format!(
                "point outside chart radius {}",
                self.config.chart_radius
            )));
        }
        Ok(self.rho(zeta) < 0.0
            || (self.in_w_strip(zeta, self.config.s0) && self.rho_bumped(zeta) < 0.0))
    }
}

/// Family of bumped domains at one base point, with the geometric
/// delta-grid used to approximate `Omega_p^*`.
#[derive(Clone, Debug)]
pub struct BumpFamily {
    pub nf: NormalForm,
    pub profile: AnisoProfile,
    pub config: BumpConfig,
}

impl BumpFamily {
    pub fn new(d: &DomainSpec, p: C2, m: u32, config: BumpConfig) -> Result<Self> {
        config.validate()?;
        let nf = catlin_normalize(d, p, m)?;
        let profile = AnisoProfile::from_normal_form(&nf);
        Ok(BumpFamily { nf, profile, config })
    }

    pub fn at_delta(&self, delta: f64) -> BumpedDomain {
        BumpedDomain {
            nf: self.nf.clone(),
            profile: self.profile.clone(),
            delta,
            config: self.config.clone(),
        }
    }

    /// `Omega_p^*` approximated by intersecting the geometric delta grid.
    pub fn member_star(&self, zeta: C2) -> Result<bool> {
        for i in 0..=self.config.i_max {
            let delta = self.config.delta0 * 2f64.powi(-(i as i32));
            if !self.at_delta(delta).member(zeta)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The point `zeta_j = (0, 0, x2, 0)` on `S_{delta_j}`, found by
    /// bisection of `rho + eps0 H` on the proof's bracket.
    pub fn zeta_sequence(&self, j: u32) -> Result<(C2, f64)> {
        let delta = 2f64.powi(-(j as i32));
        if delta >= self.config.delta0 {
            return Err(CoreError::Precondition(format!(
                "need 2^-j < delta0; j = {j} too small"
            )));
        }
        let eps = self.config.eps0;
        let c_small = self.config.c_h / std::f64::consts::SQRT_2;
        let c_big = self.config.c_h;
        let lo = 0.5 * (eps * c_small / (1.0 - eps * c_small)) * delta;
        let hi = 2.0 * (eps * c_big / (1.0 - eps * c_big)) * delta;
        let f = |x2: f64| {
            let zeta = [Complex64::new(0.0, 0.0), Complex64::new(x2, 0.0)];
            self.at_delta(delta).rho_bumped(zeta)
        };
        let (mut a, mut b) = (lo, hi);
        let (fa, fb) = (f(a), f(b));
        if fa.signum() == fb.signum() {
            return Err(CoreError::Config(format!(
                "bisection bracket failed at j = {j}: f({a:.3e}) = {fa:.3e}, f({b:.3e}) = {fb:.3e}; eps0 * c_h too large"
            )));
        }
        while b - a > 1e-12 {
            let mid = 0.5 * (a + b);
            if f(mid).signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
        }
        let x2 = 0.5 * (a + b);
        Ok(([Complex64::new(0.0, 0.0), Complex64::new(x2, 0.0)], delta))
    }

    /// Ambient image `q_j = phi_p(zeta_j)`.
    pub fn q_j(&self, j: u32) -> Result<C2> {
        let (zeta, _) = self.zeta_sequence(j)?;
        Ok(self.nf.phi.eval(zeta))
    }
}

/// Pushed-out domain `D_delta` in ambient coordinates.
pub struct DDelta<'a> {
    pub family: &'a BumpFamily,
    pub domain: &'a DomainSpec,
    pub delta: f64,
}

impl DDelta<'_> {
    /// `D_delta = [Dhat ∩ {|z-p|<gamma} ∩ phi_p(Omega_p^delta)] ∪ [Dhat ∩ {|z-p|>gamma_inner}]`.
    pub fn member(&self, z: C2) -> bool {
        let cfg = &self.family.config;
        if self.domain.r.eval(z) >= cfg.mu {
            return false;
        }
        let d = dist2(z, self.family.nf.p);
        if d > cfg.gamma_inner {
            return true;
        }
        if d < cfg.gamma {
            let zeta = self.family.nf.phi_inv.eval(z);
            if norm2(zeta) < cfg.chart_radius {
                if let Ok(m) = self.family.at_delta(self.delta).member(zeta) {
                    return m;
                }
            }
        }
        false
    }

    /// Approximate distance to the boundary of `D_delta`: the minimum of
    /// the gradient-rescaled active constraint surrogates. Reported as
    /// approximate; it is the weight used inside the division objective.
    pub fn dist_to_boundary(&self, z: C2) -> f64 {
        let cfg = &self.family.config;
        let r = &self.domain.r;
        let g = r.grad_real_norm(z).max(1e-9);
        let mut best = (cfg.mu - r.eval(z)) / g;
        let d = dist2(z, self.family.nf.p);
        if d <= cfg.gamma_inner {
            let zeta = self.family.nf.phi_inv.eval(z);
            if norm2(zeta) < cfg.chart_radius {
                let bd = self.family.at_delta(self.delta);
                let v = bd.rho_bumped(zeta);
                // rescale by a finite-difference gradient of the bumped function
                let h = 1e-5;
                let mut g2 = 0.0;
                for axis in 0..4 {
                    let mut zp = zeta;
                    let mut zm = zeta;
                    let dc = match axis {
                        0 => Complex64::new(h, 0.0),
                        1 => Complex64::new(0.0, h),
                        2 => Complex64::new(h, 0.0),
                        _ => Complex64::new(0.0, h),
                    };
                    if axis < 2 {
                        zp[0] += dc;
                        zm[0] -= dc;
                    } else {
                        zp[1] += dc;
                        zm[1] -= dc;
                    }
                    let der = (bd.rho_bumped(zp) - bd.rho_bumped(zm)) / (2.0 * h);
                    g2 += der * der;
                }
                best = best.min(-v / g2.sqrt().max(1e-9));
            }
        }
        best.max(0.0)
    }
}

/// `j*(q)` and the associated `D_*(q) = D_{delta_{j*}}`.
pub struct JStarSelection {
    pub j_star: u32,
    pub delta: f64,
    pub r_q: f64,
    pub r_qjstar: f64,
    /// True when `q` sat outside the computed `r(q_j)` range and the index
    /// was clamped to the nearest end of the sequence.
    pub clamped: bool,
}

pub fn jstar(
    family: &BumpFamily,
    d: &DomainSpec,
    q: C2,
    j_min: u32,
    j_max: u32,
    cone_constant: f64,
) -> Result<JStarSelection> {
    let r_q = d.r.eval(q);
    if r_q <= 0.0 {
        return Err(CoreError::Precondition("q must lie outside the closed domain".into()));
    }
    let q_t = boundary_project(d, q)?;
    let p_t = family.nf.p;
    if dist2(q_t, p_t) > cone_constant * r_q && dist2(q, p_t) > cone_constant * r_q {
        return Err(CoreError::Geometry(format!(
            "q outside the cone over p: |q^T - p^T| = {:.3e} > C r(q) = {:.3e}",
            dist2(q_t, p_t),
            cone_constant * r_q
        )));
    }
    let mut rs = Vec::new();
    for j in j_min..=j_max {
        rs.push((j, d.r.eval(family.q_j(j)?)));
    }
    // r(q_j) decreases in j; find max j with r(q_j) <= r(q) < r(q_{j-1})
    if r_q >= rs[0].1 {
        return Ok(JStarSelection {
            j_star: rs[0].0,
            delta: 2f64.powi(-(rs[0].0 as i32)),
            r_q,
            r_qjstar: rs[0].1,
            clamped: true,
        });
    }
    for w in rs.windows(2) {
        let (j_prev, r_prev) = w[0];
        let (j, r_j) = w[1];
        let _ = j_prev;
        if r_j <= r_q && r_q < r_prev {
            return Ok(JStarSelection {
                j_star: j,
                delta: 2f64.powi(-(j as i32)),
                r_q,
                r_qjstar: r_j,
                clamped: false,
            });
        }
    }
    let last = *rs.last().unwrap();
    Ok(JStarSelection {
        j_star: last.0,
        delta: 2f64.powi(-(last.0 as i32)),
        r_q,
        r_qjstar: last.1,
        clamped: true,
    })
}

/// Fitted lower-bound constant for `r(z) >= c' |z - p|^m` over samples
/// outside `phi_p(Omega_p^*)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RLowerBoundReport {
    pub fitted_c: f64,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

pub fn check_r_lower_bound(
    family: &BumpFamily,
    d: &DomainSpec,
    n_samples: usize,
    seed: u64,
) -> Result<RLowerBoundReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p = family.nf.p;
    let gamma = family.config.gamma;
    let m = family.nf.m;
    let mut fitted = f64::INFINITY;
    let mut acc = 0;
    let mut rej = 0;
    while acc + rej < n_samples {
        let z = [
            p[0] + Complex64::new(rng.gen_range(-gamma..gamma), rng.gen_range(-gamma..gamma)),
            p[1] + Complex64::new(rng.gen_range(-gamma..gamma), rng.gen_range(-gamma..gamma)),
        ];
        let dz = dist2(z, p);
        if dz > gamma || dz < 1e-4 {
            rej += 1;
            continue;
        }
        let zeta = family.nf.phi_inv.eval(z);
        if norm2(zeta) >= family.config.chart_radius {
            rej += 1;
            continue;
        }
        match family.member_star(zeta) {
            Ok(false) => {
                acc += 1;
                fitted = fitted.min(d.r.eval(z) / dz.powi(m as i32));
            }
            _ => {
                rej += 1;
            }
        }
    }
    Ok(RLowerBoundReport { fitted_c: fitted, n_accepted: acc, n_rejected: rej })
}

/// Ratio report for `delta_tilde ~ |zeta_tilde|` along the sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaZetaReport {
    pub j: u32,
    pub ratio: f64,
    pub dist_over_norm: f64,
}

pub fn check_delta_zeta_equiv(family: &BumpFamily, j: u32) -> Result<DeltaZetaReport> {
    let (zeta, delta) = family.zeta_sequence(j)?;
    let norm = norm2(zeta);
    // distance oracle: project onto { rho = 0 } and measure
    let rho_fn = DefiningFunction::new(family.nf.rho.clone())
        .map_err(|_| CoreError::Numeric("rho not real".into()))?;
    let w = crate::domain::boundary_project_level(&rho_fn, zeta, 0.0, 1e-10, 100)?;
    let dist = dist2(zeta, w);
    let ratio_dist = dist / norm;
    if !(0.05..=2.0).contains(&ratio_dist) {
        return Err(CoreError::Precondition(format!(
            "dist(zeta_j, Omega_p)/|zeta_j| = {ratio_dist:.3} outside [0.05, 2]"
        )));
    }
    Ok(DeltaZetaReport { j, ratio: delta / norm, dist_over_norm: ratio_dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::catalog;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ball_family() -> (DomainSpec, BumpFamily) {
        let d = catalog::ball();
        let fam = BumpFamily::new(&d, [c(0.0, 0.0), c(1.0, 0.0)], 2, BumpConfig::default()).unwrap();
        (d, fam)
    }

    #[test]
    fn surrogate_bump_values() {
        let (_, fam) = ball_family();
        let bd = fam.at_delta(0.01);
        let origin = [c(0.0, 0.0); 2];
        assert_relative_eq!(bd.surrogate_bump(origin), -0.5 * 0.01, epsilon = 1e-15);
        let bd2 = fam.at_delta(0.02);
        assert_relative_eq!(bd2.surrogate_bump(origin), 2.0 * bd.surrogate_bump(origin));
        let zeta = [c(0.1, 0.05), c(-0.02, 0.03)];
        let ratio = -bd.surrogate_bump(zeta) / j_delta(&bd.profile, bd.delta, zeta);
        assert_relative_eq!(ratio, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn membership_union_structure() {
        let (_, fam) = ball_family();
        let bd = fam.at_delta(0.01);
        // interior points stay members
        let inside = [c(0.05, 0.0), c(-0.1, 0.02)];
        assert!(bd.rho(inside) < 0.0);
        assert!(bd.member(inside).unwrap());
        // far outside the strip: not a member
        let out = [c(0.0, 0.0), c(0.3, 0.0)];
        assert!(bd.rho(out) > bd.config.s0 * j_delta(&bd.profile, bd.delta, out));
        assert!(!bd.member(out).unwrap());
        // outside chart: error
        assert!(bd.member([c(0.9, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn zeta_sequence_brackets_and_flip() {
        let (_, fam) = ball_family();
        // eps0 * c_h = 0.1 as in the worked example
        let (zeta, delta) = fam.zeta_sequence(8).unwrap();
        let x2 = zeta[1].re;
        let ec = fam.config.eps0 * fam.config.c_h;
        assert!(x2 > 0.5 * (ec / (1.0 - ec)) * delta * 0.99);
        assert!(x2 < 2.0 * (ec / (1.0 - ec)) * delta * 1.01);
        // membership flips within 1e-8 along x2
        let bd = fam.at_delta(delta);
        let above = [zeta[0], zeta[1] + c(1e-8, 0.0)];
        let below = [zeta[0], zeta[1] - c(1e-8, 0.0)];
        assert!(bd.rho_bumped(above) > 0.0);
        assert!(bd.rho_bumped(below) < 0.0);
    }

    #[test]
    fn zeta_sequence_ratio_and_decay() {
        let (d, fam) = ball_family();
        let eps = fam.config.eps0;
        let c_small = fam.config.c_h / std::f64::consts::SQRT_2;
        let c_big = fam.config.c_h;
        let c0 = 0.5 * eps * c_small / (1.0 - eps * c_small);
        let big_c0 = eps * c_big / (1.0 - eps * c_big);
        let mut prev = f64::INFINITY;
        for j in 8..=20 {
            let (zeta, _) = fam.zeta_sequence(j).unwrap();
            let rho = fam.at_delta(0.0).rho(zeta); // rho itself (delta unused)
            let scaled = rho * 2f64.powi(j as i32);
            assert!(scaled >= c0 * 0.9, "j={j}: {scaled} < {c0}");
            assert!(scaled <= 2.0 * big_c0 * 1.1, "j={j}: {scaled}");
            let n = norm2(zeta);
            assert!(n < prev);
            prev = n;
            // ambient consistency: r(q_j) = rho(zeta_j)
            let qj = fam.q_j(j).unwrap();
            assert_relative_eq!(d.r.eval(qj), rho, epsilon = 1e-12);
        }
    }

    #[test]
    fn jstar_selection() {
        let (d, fam) = ball_family();
        // q exactly at q_j: j* = j
        let q10 = fam.q_j(10).unwrap();
        let sel = jstar(&fam, &d, q10, 6, 20, 50.0).unwrap();
        assert_eq!(sel.j_star, 10);
        assert!(!sel.clamped);
        // halfway between r(q_10) and r(q_9): still j* = 10, ratio bounded
        let r10 = d.r.eval(fam.q_j(10).unwrap());
        let r9 = d.r.eval(fam.q_j(9).unwrap());
        let target = 0.5 * (r10 + r9);
        // walk along the normal ray to hit r = target
        let q = [c(0.0, 0.0), c((1.0f64 + target).sqrt(), 0.0)];
        let sel = jstar(&fam, &d, q, 6, 20, 50.0).unwrap();
        assert_eq!(sel.j_star, 10);
        let c1 = 4.0 * (fam.config.eps0 * fam.config.c_h / (1.0 - fam.config.eps0 * fam.config.c_h))
            / (0.5 * fam.config.eps0 * fam.config.c_h
                / std::f64::consts::SQRT_2
                / (1.0 - fam.config.eps0 * fam.config.c_h / std::f64::consts::SQRT_2));
        assert!(sel.r_q / sel.r_qjstar <= c1);
        // out-of-cone rejection
        let far = [c(1.2, 0.0), c(0.3, 0.0)];
        assert!(d.r.eval(far) > 0.0);
        assert!(jstar(&fam, &d, far, 6, 20, 1.0).is_err());
    }

    #[test]
    fn q_not_in_dstar() {
        // generic cone points strictly between the r(q_j) levels, with
        // small tangential displacements (the points q_j themselves sit
        // exactly on b D_*(q) and are excluded only up to rounding)
        let (d, fam) = ball_family();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(40);
        let mut tested = 0;
        while tested < 1000 {
            let j = rng.gen_range(9u32..18);
            let r_j = d.r.eval(fam.q_j(j).unwrap());
            let r_prev = d.r.eval(fam.q_j(j - 1).unwrap());
            let t = rng.gen_range(0.25..0.75);
            let target = r_j + t * (r_prev - r_j);
            // normal-ray point at level target, then a tangential nudge within the cone
            let x2 = rng.gen_range(0.0..0.5) * target.sqrt() * 0.3;
            let ray = (1.0f64 + target - x2 * x2).sqrt();
            let q = [c(x2, 0.0), c(ray, 0.0)];
            if d.r.eval(q) <= r_j || d.r.eval(q) >= r_prev {
                continue;
            }
            let sel = match jstar(&fam, &d, q, 6, 20, 50.0) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let dd = DDelta { family: &fam, domain: &d, delta: sel.delta };
            assert!(!dd.member(q), "cone point {q:?} must not lie in D_*(q)");
            tested += 1;
        }
        // deep interior points are members
        let sel = jstar(&fam, &d, fam.q_j(10).unwrap(), 6, 20, 50.0).unwrap();
        let dd = DDelta { family: &fam, domain: &d, delta: sel.delta };
        assert!(dd.member([c(0.0, 0.0), c(0.0, 0.0)]));
    }

    #[test]
    fn omega_bar_subset_of_omega_delta() {
        let (_, fam) = ball_family();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for i in 0..6u32 {
            let delta = fam.config.delta0 * 2f64.powi(-(i as i32));
            let bd = fam.at_delta(delta);
            let mut count = 0;
            while count < 300 {
                let zeta = [
                    c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
                    c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
                ];
                if norm2(zeta) >= fam.config.chart_radius || bd.rho(zeta) > 0.0 {
                    continue;
                }
                count += 1;
                assert!(bd.member(zeta).unwrap());
            }
        }
    }

    #[test]
    fn polydisk_inclusion_in_omega_delta() {
        let (_, fam) = ball_family();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        let delta = 0.01;
        let bd = fam.at_delta(delta);
        let mut centers = 0;
        while centers < 100 {
            let zeta = [
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
                c(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
            ];
            if bd.rho(zeta) >= 0.0 || norm2(zeta) >= 0.35 {
                continue;
            }
            centers += 1;
            let pd = crate::aniso::polydisk(&bd.profile, fam.config.a0, delta, delta, zeta).unwrap();
            for _ in 0..30 {
                let s = pd.sample(&mut rng);
                if norm2(s) < fam.config.chart_radius {
                    assert!(
                        bd.member(s).unwrap(),
                        "polydisk point escaped Omega_p^delta at center {zeta:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn r_lower_bound_positive_and_stable() {
        let d = catalog::egg(2);
        let fam = BumpFamily::new(&d, [c(0.0, 0.0), c(1.0, 0.0)], 4, BumpConfig::default()).unwrap();
        let rep = check_r_lower_bound(&fam, &d, 2000, 31).unwrap();
        assert!(rep.fitted_c > 0.0, "fitted c' = {}", rep.fitted_c);
        // refinement stability: finer delta grid changes the fit by < 20%
        let mut cfg2 = fam.config.clone();
        cfg2.i_max *= 2;
        let fam2 = BumpFamily::new(&d, [c(0.0, 0.0), c(1.0, 0.0)], 4, cfg2).unwrap();
        let rep2 = check_r_lower_bound(&fam2, &d, 2000, 31).unwrap();
        assert!((rep2.fitted_c - rep.fitted_c).abs() / rep.fitted_c < 0.2);
    }

    #[test]
    fn delta_zeta_ratios_bounded() {
        for (d, m) in [(catalog::ball(), 2u32), (catalog::egg(2), 4)] {
            let fam =
                BumpFamily::new(&d, [c(0.0, 0.0), c(1.0, 0.0)], m, BumpConfig::default()).unwrap();
            let mut ratios = Vec::new();
            for j in [8u32, 12, 16, 20] {
                ratios.push(check_delta_zeta_equiv(&fam, j).unwrap().ratio);
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
            assert!(lo > 0.0 && hi / lo < 4.0, "ratios {ratios:?}");
        }
    }
}
