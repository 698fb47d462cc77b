//! Nonisotropic finite-type geometry: the coefficient maxima `A_l`, the
//! tangential scale `tau(q, delta)`, the full scale `J_delta(p, zeta)`,
//! generalized polydisks, and the type of a boundary point with its
//! brute-force order-of-contact oracle.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{C2, DomainSpec};
use crate::error::{CoreError, Result};
use crate::normal_form::{catlin_normalize, NormalForm};
use crate::poly::{HPoly, HoloMap2, Mono};

pub const A_TOL: f64 = 1e-9;

/// `A_l = max { |a_{j,k}| : j + k = l }` for `l = 2..=m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnisoProfile {
    pub m: u32,
    /// `a[l-2]` holds `A_l`.
    pub a: Vec<f64>,
}

impl AnisoProfile {
    pub fn from_normal_form(nf: &NormalForm) -> Self {
        let mut a = vec![0.0f64; nf.m as usize - 1];
        for ((j, k), c) in &nf.a {
            let l = (*j + *k) as usize;
            if l >= 2 && l <= nf.m as usize {
                a[l - 2] = a[l - 2].max(c.norm());
            }
        }
        AnisoProfile { m: nf.m, a }
    }

    /// Synthetic profile for the estimate harnesses.
    pub fn synthetic(m: u32, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), m as usize - 1);
        AnisoProfile { m, a }
    }

    pub fn a_l(&self, l: u32) -> f64 {
        self.a[(l - 2) as usize]
    }

    /// First `l` with `A_l` above tolerance (the type estimate).
    pub fn first_nonzero(&self) -> Option<u32> {
        (2..=self.m).find(|l| self.a_l(*l) > A_TOL)
    }
}

/// `tau(q, delta) = min { (delta / A_l)^{1/l} : 2 <= l <= m, A_l > 0 }`.
pub fn tau(profile: &AnisoProfile, delta: f64) -> Result<f64> {
    if delta <= 0.0 {
        return Err(CoreError::Precondition("tau requires delta > 0".into()));
    }
    let mut best = f64::INFINITY;
    for l in 2..=profile.m {
        let al = profile.a_l(l);
        if al > A_TOL {
            best = best.min((delta / al).powf(1.0 / l as f64));
        }
    }
    if !best.is_finite() {
        return Err(CoreError::InfiniteType("all A_l vanish up to m".into()));
    }
    Ok(best)
}

/// `J_delta(p, zeta) = [delta^2 + |zeta2|^2 + sum A_k^2 |zeta1|^{2k}]^{1/2}`.
pub fn j_delta(profile: &AnisoProfile, delta: f64, zeta: C2) -> f64 {
    let mut s = delta * delta + zeta[1].norm_sqr();
    let z1sq = zeta[0].norm_sqr();
    for k in 2..=profile.m {
        let ak = profile.a_l(k);
        s += ak * ak * z1sq.powi(k as i32);
    }
    s.sqrt()
}

/// Generalized nonisotropic polydisk `P^{(a)}_{delta,gamma}(center)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolydiskSpec {
    pub center: C2,
    /// `|zeta1 - center1|` bound: `tau(p, a J_delta(center)) + a gamma`.
    pub radius1: f64,
    /// `|zeta2 - center2|` bound: `a (J_delta(center) + gamma)`.
    pub radius2: f64,
    pub a: f64,
    pub delta: f64,
    pub gamma: f64,
}

pub fn polydisk(
    profile: &AnisoProfile,
    a: f64,
    delta: f64,
    gamma: f64,
    center: C2,
) -> Result<PolydiskSpec> {
    if a <= 0.0 || delta <= 0.0 || gamma < 0.0 {
        return Err(CoreError::Precondition("polydisk requires a, delta > 0, gamma >= 0".into()));
    }
    let j = j_delta(profile, delta, center);
    Ok(PolydiskSpec {
        center,
        radius1: tau(profile, a * j)? + a * gamma,
        radius2: a * (j + gamma),
        a,
        delta,
        gamma,
    })
}

impl PolydiskSpec {
    pub fn member(&self, zeta: C2) -> bool {
        (zeta[0] - self.center[0]).norm() < self.radius1
            && (zeta[1] - self.center[1]).norm() < self.radius2
    }

    /// Uniform sample on the bidisk.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> C2 {
        let mut draw = |rad: f64| {
            let r = rad * rng.gen_range(0.0f64..1.0).sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::new(r * th.cos(), r * th.sin())
        };
        [self.center[0] + draw(self.radius1), self.center[1] + draw(self.radius2)]
    }
}

/// Type of a boundary point: least `l` with `A_l > tol`, cross-checked
/// against the order-of-contact oracle on catalog domains.
pub fn type_at(d: &DomainSpec, p: C2, m_max: u32) -> Result<u32> {
    let nf = catlin_normalize(d, p, m_max)?;
    let profile = AnisoProfile::from_normal_form(&nf);
    let t = profile.first_nonzero().ok_or_else(|| {
        CoreError::InfiniteType(format!("no nonzero A_l up to m_max = {m_max}"))
    })?;
    let oracle = contact_order_oracle(d, p, m_max, 0xA11CE);
    if oracle != t {
        return Err(CoreError::Numeric(format!(
            "type_at = {t} disagrees with contact-order oracle = {oracle}"
        )));
    }
    Ok(t)
}

/// Brute-force order of contact: parametrized holomorphic discs
/// `h(t) = p + t v + t^2 w_2 + ... + t^d w_d` with `dh(0) = v != 0`;
/// the vanishing order of `r(h(t))` at `t = 0` is read off the exact
/// polynomial composition in `(t, conj t)`. Returns the maximum order
/// over the disc family (the candidate set includes the complex-tangent
/// line and randomized polynomial perturbations).
pub fn contact_order_oracle(d: &DomainSpec, p: C2, m_max: u32, seed: u64) -> u32 {
    let g = d.r.grad_z(p);
    let gnorm = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    let e_t = [-g[1] / gnorm, g[0] / gnorm];
    let mut discs: Vec<Vec<[Complex64; 2]>> = Vec::new();
    // tangent line
    discs.push(vec![[e_t[0], e_t[1]]]);
    // tangent line + quadratic/cubic corrections along both axes
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..40 {
        let deg = rng.gen_range(1..=(m_max as usize / 2).max(1));
        let mut coeffs = vec![[e_t[0], e_t[1]]];
        for _ in 1..=deg {
            coeffs.push([
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ]);
        }
        discs.push(coeffs);
    }
    // normal-direction line for completeness (order 1 contact)
    discs.push(vec![[g[0].conj() / gnorm, g[1].conj() / gnorm]]);

    let mut best = 0u32;
    for coeffs in discs {
        // embed the disc as a holomorphic map C -> C^2 in the variable t = zeta1
        let mut c1 = HPoly::constant(p[0]);
        let mut c2 = HPoly::constant(p[1]);
        for (k, w) in coeffs.iter().enumerate() {
            let tpow = HPoly::var(0).pow((k + 1) as u8);
            c1 = c1.add(&tpow.scale(w[0]));
            c2 = c2.add(&tpow.scale(w[1]));
        }
        let map = HoloMap2 { c1, c2 };
        let pulled = d.r.poly.compose(&map); // polynomial in (t, conj t)
        let mut order = u32::MAX;
        for (mono, c) in pulled.terms() {
            debug_assert_eq!(mono.b, 0);
            debug_assert_eq!(mono.bb, 0);
            if c.norm() > 1e-10 {
                order = order.min(mono.degree());
            }
        }
        if order == u32::MAX {
            // r vanishes identically on the disc: infinite order
            return u32::MAX;
        }
        // clamp at the jet order we trust
        best = best.max(order.min(2 * m_max));
    }
    best
}

/// Report from the scaling-law check `tau_scaling`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauScalingReport {
    pub pass: bool,
    pub worst_lower_margin: f64,
    pub worst_upper_margin: f64,
    pub checked: usize,
}

/// Verifies `(d'/d'')^{1/2} tau(d'') <= tau(d') <= (d'/d'')^{1/m} tau(d'')`
/// over a log grid of pairs `d' < d''`.
pub fn verify_tau_scaling(profile: &AnisoProfile, grid: &[f64]) -> Result<TauScalingReport> {
    let mut worst_lower = f64::INFINITY;
    let mut worst_upper = f64::INFINITY;
    let mut checked = 0;
    for (i, &dp) in grid.iter().enumerate() {
        for &dpp in grid.iter().skip(i + 1) {
            if dp >= dpp {
                continue;
            }
            let t_p = tau(profile, dp)?;
            let t_pp = tau(profile, dpp)?;
            let lo = (dp / dpp).sqrt() * t_pp;
            let hi = (dp / dpp).powf(1.0 / profile.m as f64) * t_pp;
            worst_lower = worst_lower.min(t_p - lo);
            worst_upper = worst_upper.min(hi - t_p);
            checked += 1;
        }
    }
    let tol = -1e-12;
    Ok(TauScalingReport {
        pass: worst_lower >= tol && worst_upper >= tol,
        worst_lower_margin: worst_lower,
        worst_upper_margin: worst_upper,
        checked,
    })
}

/// Fitted two-sided comparability constants of `J_delta` over a sampled
/// polydisk (Lemma `J_del` shape).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JComparabilityReport {
    pub c_forward: f64,
    pub c_backward: f64,
    pub n_samples: usize,
}

pub fn verify_j_comparability(
    profile: &AnisoProfile,
    a: f64,
    delta: f64,
    gamma: f64,
    center: C2,
    n_samples: usize,
    seed: u64,
) -> Result<JComparabilityReport> {
    let pd = polydisk(profile, a, delta, gamma, center)?;
    let j_center = j_delta(profile, delta, center);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fwd = 0.0f64;
    let mut bwd = 0.0f64;
    for _ in 0..n_samples {
        let zeta = pd.sample(&mut rng);
        let j = j_delta(profile, delta, zeta);
        fwd = fwd.max(j / (j_center + a * gamma));
        bwd = bwd.max(j_center / (j + a * gamma));
    }
    Ok(JComparabilityReport { c_forward: fwd, c_backward: bwd, n_samples })
}

/// Boundary points with nonzero `z1` coordinate for egg-type checks.
pub fn egg_side_point(k: u8, rho: f64) -> C2 {
    let z2 = (1.0 - rho.powi(2 * k as i32)).sqrt();
    [Complex64::new(rho, 0.0), Complex64::new(z2, 0.0)]
}

pub fn catalog_profile(d: &DomainSpec, p: C2, m: u32) -> Result<AnisoProfile> {
    Ok(AnisoProfile::from_normal_form(&catlin_normalize(d, p, m)?))
}

/// Avoid unused-import warnings for Mono in release builds of this module.
#[allow(dead_code)]
fn _mono_touch() -> Mono {
    Mono::ONE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::catalog;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn tau_simple_profiles() {
        let p2 = AnisoProfile::synthetic(2, vec![1.0]);
        assert_relative_eq!(tau(&p2, 0.04).unwrap(), 0.2, epsilon = 1e-14);
        let p4 = AnisoProfile::synthetic(4, vec![0.0, 0.0, 1.0]);
        assert_relative_eq!(tau(&p4, 1e-4).unwrap(), 0.1, epsilon = 1e-14);
        let mixed = AnisoProfile::synthetic(4, vec![1.0, 0.0, 16.0]);
        // min(0.01^{1/2}, (0.01/16)^{1/4}) = min(0.1, 0.1581...) = 0.1
        assert_relative_eq!(tau(&mixed, 0.01).unwrap(), 0.1, epsilon = 1e-14);
        let dead = AnisoProfile::synthetic(3, vec![0.0, 0.0]);
        assert!(tau(&dead, 0.1).is_err());
    }

    #[test]
    fn j_delta_values() {
        let p4 = AnisoProfile::synthetic(4, vec![0.0, 0.0, 1.0]);
        assert_relative_eq!(j_delta(&p4, 0.3, [c(0.0, 0.0); 2]), 0.3);
        assert_relative_eq!(j_delta(&p4, 0.0, [c(0.0, 0.0), c(0.0, -0.7)]), 0.7);
        assert_relative_eq!(
            j_delta(&p4, 0.0, [c(0.5, 0.0), c(0.0, 0.0)]),
            0.0625,
            epsilon = 1e-14
        );
    }

    #[test]
    fn polydisk_radii_membership_sampler() {
        let p2 = AnisoProfile::synthetic(2, vec![1.0]);
        let pd = polydisk(&p2, 1.0, 0.01, 0.01, [c(0.0, 0.0); 2]).unwrap();
        assert_relative_eq!(pd.radius2, 0.02, epsilon = 1e-14);
        assert_relative_eq!(pd.radius1, 0.11, epsilon = 1e-14);
        assert!(pd.member(pd.center));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            assert!(pd.member(pd.sample(&mut rng)));
        }
    }

    #[test]
    fn types_on_catalog() {
        let ball = catalog::ball();
        let p = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(type_at(&ball, p, 4).unwrap(), 2);
        let egg = catalog::egg(2);
        assert_eq!(type_at(&egg, [c(0.0, 0.0), c(1.0, 0.0)], 6).unwrap(), 4);
        assert_eq!(type_at(&egg, [c(0.0, 0.0), c(-1.0, 0.0)], 6).unwrap(), 4);
        assert_eq!(type_at(&egg, egg_side_point(2, 0.6), 6).unwrap(), 2);
    }

    #[test]
    fn oracle_tangent_disc_egg() {
        // the disc t -> (t, 1) realizes |t|^4 on the egg
        let egg = catalog::egg(2);
        let order = contact_order_oracle(&egg, [c(0.0, 0.0), c(1.0, 0.0)], 6, 42);
        assert_eq!(order, 4);
        let ball = catalog::ball();
        assert_eq!(contact_order_oracle(&ball, [c(0.0, 0.0), c(1.0, 0.0)], 4, 42), 2);
    }

    #[test]
    fn tau_scaling_bounds() {
        let grid: Vec<f64> = (0..20).map(|i| 10f64.powf(-6.0 + 5.0 * i as f64 / 19.0)).collect();
        // equality at the left bound
        let p2 = AnisoProfile::synthetic(2, vec![1.0]);
        let rep = verify_tau_scaling(&p2, &grid).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_lower_margin.abs() < 1e-12);
        // equality at the right bound
        let pm = AnisoProfile::synthetic(4, vec![0.0, 0.0, 1.0]);
        let rep = verify_tau_scaling(&pm, &grid).unwrap();
        assert!(rep.pass);
        assert!(rep.worst_upper_margin.abs() < 1e-12);
        // strict on a mixed profile
        let mixed = AnisoProfile::synthetic(4, vec![0.5, 0.0, 2.0]);
        let rep = verify_tau_scaling(&mixed, &grid).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn power_sandwich_catalog_profiles() {
        for (d, p, m) in [
            (catalog::ball(), [c(0.0, 0.0), c(1.0, 0.0)], 2u32),
            (catalog::egg(2), [c(0.0, 0.0), c(1.0, 0.0)], 4),
            (catalog::egg(2), egg_side_point(2, 0.5), 4),
        ] {
            let prof = catalog_profile(&d, p, m).unwrap();
            let c_lo: f64 = (2..=prof.m)
                .filter(|l| prof.a_l(*l) > A_TOL)
                .map(|l| prof.a_l(l).powf(-1.0 / l as f64))
                .fold(f64::INFINITY, f64::min);
            let c_hi: f64 = (2..=prof.m)
                .filter(|l| prof.a_l(*l) > A_TOL)
                .map(|l| prof.a_l(l).powf(-1.0 / l as f64))
                .fold(0.0, f64::max);
            for i in 0..20 {
                let delta = 10f64.powf(-6.0 + 5.0 * i as f64 / 19.0);
                let t = tau(&prof, delta).unwrap();
                assert!(t >= c_lo * delta.sqrt() * (1.0 - 1e-12));
                assert!(t <= c_hi * delta.powf(1.0 / prof.m as f64) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn monotonicity() {
        let prof = AnisoProfile::synthetic(4, vec![0.7, 0.1, 2.0]);
        let mut prev = 0.0;
        for i in 0..30 {
            let delta = 1e-6 * 1.8f64.powi(i);
            let t = tau(&prof, delta).unwrap();
            assert!(t >= prev);
            prev = t;
        }
        // J monotone in |zeta1|, |zeta2|, delta
        let j0 = j_delta(&prof, 0.1, [c(0.1, 0.0), c(0.2, 0.0)]);
        assert!(j_delta(&prof, 0.1, [c(0.2, 0.0), c(0.2, 0.0)]) >= j0);
        assert!(j_delta(&prof, 0.1, [c(0.1, 0.0), c(0.3, 0.0)]) >= j0);
        assert!(j_delta(&prof, 0.2, [c(0.1, 0.0), c(0.2, 0.0)]) >= j0);
    }

    #[test]
    fn j_comparability_stable_under_doubling() {
        for (profile, name) in [
            (AnisoProfile::synthetic(2, vec![1.0]), "ball"),
            (AnisoProfile::synthetic(4, vec![0.0, 0.0, 1.0]), "egg2"),
            (AnisoProfile::synthetic(4, vec![0.5, 0.0, 2.0]), "mixed"),
        ] {
            let center = [c(0.02, 0.01), c(-0.01, 0.03)];
            let r1 = verify_j_comparability(&profile, 0.25, 0.01, 0.005, center, 4000, 9).unwrap();
            let r2 = verify_j_comparability(&profile, 0.25, 0.01, 0.005, center, 8000, 10).unwrap();
            assert!(r1.c_forward.is_finite() && r1.c_backward.is_finite(), "{name}");
            assert!(
                (r2.c_forward - r1.c_forward).abs() / r1.c_forward < 0.1,
                "{name}: {} vs {}",
                r1.c_forward,
                r2.c_forward
            );
            assert!((r2.c_backward - r1.c_backward).abs() / r1.c_backward < 0.1, "{name}");
        }
    }
}
