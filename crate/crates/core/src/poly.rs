//! Exact polynomial arithmetic in the four Wirtinger variables
//! `(z1, conj z1, z2, conj z2)`.
//!
//! Everything downstream (defining functions, normal-form recursions,
//! pullbacks) is built on exact coefficient tables, so jets and
//! compositions carry no discretization error beyond f64 rounding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Multi-exponent `(a, ab, b, bb)` of the monomial
/// `z1^a * conj(z1)^ab * z2^b * conj(z2)^bb`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash, Serialize, Deserialize)]
pub struct Mono {
    pub a: u8,
    pub ab: u8,
    pub b: u8,
    pub bb: u8,
}

impl Mono {
    pub const ONE: Mono = Mono { a: 0, ab: 0, b: 0, bb: 0 };

    pub fn degree(&self) -> u32 {
        self.a as u32 + self.ab as u32 + self.b as u32 + self.bb as u32
    }

    /// Exponent with holomorphic and antiholomorphic indices swapped.
    pub fn conj(&self) -> Mono {
        Mono { a: self.ab, ab: self.a, b: self.bb, bb: self.b }
    }

    fn eval(&self, z: [Complex64; 2]) -> Complex64 {
        fn powi(base: Complex64, n: u8) -> Complex64 {
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..n {
                acc *= base;
            }
            acc
        }
        powi(z[0], self.a) * powi(z[0].conj(), self.ab) * powi(z[1], self.b) * powi(z[1].conj(), self.bb)
    }
}

/// Polynomial in `(z1, conj z1, z2, conj z2)` with complex coefficients,
/// stored as a sorted coefficient table.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct CPoly {
    terms: Vec<(Mono, Complex64)>,
}

const DROP_EPS: f64 = 0.0; // keep exact tables; explicit prune() drops dust

impl CPoly {
    pub fn zero() -> Self {
        CPoly { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        CPoly { terms: vec![(Mono::ONE, c)] }
    }

    pub fn from_terms(mut terms: Vec<(Mono, Complex64)>) -> Self {
        terms.sort_by_key(|(m, _)| *m);
        let mut out: Vec<(Mono, Complex64)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| c.norm_sqr() > DROP_EPS);
        CPoly { terms: out }
    }

    /// The variable `z1`.
    pub fn z1() -> Self {
        CPoly::from_terms(vec![(Mono { a: 1, ab: 0, b: 0, bb: 0 }, Complex64::new(1.0, 0.0))])
    }
    /// The variable `z2`.
    pub fn z2() -> Self {
        CPoly::from_terms(vec![(Mono { a: 0, ab: 0, b: 1, bb: 0 }, Complex64::new(1.0, 0.0))])
    }

    pub fn terms(&self) -> &[(Mono, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn coeff(&self, m: Mono) -> Complex64 {
        match self.terms.binary_search_by_key(&m, |(k, _)| *k) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn eval(&self, z: [Complex64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            acc += c * m.eval(z);
        }
        acc
    }

    pub fn eval_real(&self, z: [Complex64; 2]) -> f64 {
        self.eval(z).re
    }

    pub fn add(&self, other: &CPoly) -> CPoly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        CPoly::from_terms(t)
    }

    pub fn sub(&self, other: &CPoly) -> CPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> CPoly {
        if c == Complex64::new(0.0, 0.0) {
            return CPoly::zero();
        }
        CPoly { terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect() }
    }

    pub fn mul(&self, other: &CPoly) -> CPoly {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = Mono {
                    a: m1.a + m2.a,
                    ab: m1.ab + m2.ab,
                    b: m1.b + m2.b,
                    bb: m1.bb + m2.bb,
                };
                t.push((m, c1 * c2));
            }
        }
        CPoly::from_terms(t)
    }

    /// Complex conjugate of the polynomial as a function:
    /// conjugates coefficients and swaps holomorphic/antiholomorphic exponents.
    pub fn conj(&self) -> CPoly {
        CPoly::from_terms(self.terms.iter().map(|(m, c)| (m.conj(), c.conj())).collect())
    }

    /// Drop terms with |coefficient| below `eps` (cleanup after long compositions).
    pub fn prune(&self, eps: f64) -> CPoly {
        CPoly { terms: self.terms.iter().filter(|(_, c)| c.norm() > eps).copied().collect() }
    }

    /// Wirtinger derivative along one of the four directions.
    pub fn wirtinger(&self, dir: WDir) -> CPoly {
        let mut t = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let (e, m2) = match dir {
                WDir::Z1 => (m.a, Mono { a: m.a.wrapping_sub(1), ..*m }),
                WDir::Z1Bar => (m.ab, Mono { ab: m.ab.wrapping_sub(1), ..*m }),
                WDir::Z2 => (m.b, Mono { b: m.b.wrapping_sub(1), ..*m }),
                WDir::Z2Bar => (m.bb, Mono { bb: m.bb.wrapping_sub(1), ..*m }),
            };
            if e > 0 {
                t.push((m2, c * Complex64::new(e as f64, 0.0)));
            }
        }
        CPoly::from_terms(t)
    }

    /// Mixed Wirtinger derivative `d^alpha` with `alpha = (a, ab, b, bb)`.
    pub fn wirtinger_multi(&self, alpha: [u8; 4]) -> CPoly {
        let mut p = self.clone();
        for _ in 0..alpha[0] {
            p = p.wirtinger(WDir::Z1);
        }
        for _ in 0..alpha[1] {
            p = p.wirtinger(WDir::Z1Bar);
        }
        for _ in 0..alpha[2] {
            p = p.wirtinger(WDir::Z2);
        }
        for _ in 0..alpha[3] {
            p = p.wirtinger(WDir::Z2Bar);
        }
        p
    }

    /// True if the polynomial is a real-valued function:
    /// `coeff(M) == conj(coeff(conj M))` for every monomial, up to `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms
            .iter()
            .all(|(m, c)| (c - self.coeff(m.conj()).conj()).norm() <= tol)
    }

    /// Exact composition with a holomorphic polynomial map `zeta -> z`:
    /// `z1 = map.0(zeta)`, `z2 = map.1(zeta)`; antiholomorphic variables
    /// transform by the conjugate map. The result is again a polynomial
    /// in `(zeta1, conj zeta1, zeta2, conj zeta2)`.
    pub fn compose(&self, map: &HoloMap2) -> CPoly {
        let p1 = map.c1.embed();
        let p2 = map.c2.embed();
        let q1 = p1.conj();
        let q2 = p2.conj();
        let max_a = self.terms.iter().map(|(m, _)| m.a).max().unwrap_or(0);
        let max_ab = self.terms.iter().map(|(m, _)| m.ab).max().unwrap_or(0);
        let max_b = self.terms.iter().map(|(m, _)| m.b).max().unwrap_or(0);
        let max_bb = self.terms.iter().map(|(m, _)| m.bb).max().unwrap_or(0);
        let pow1 = power_table(&p1, max_a);
        let pow1c = power_table(&q1, max_ab);
        let pow2 = power_table(&p2, max_b);
        let pow2c = power_table(&q2, max_bb);
        let mut acc = CPoly::zero();
        for (m, c) in &self.terms {
            let t = pow1[m.a as usize]
                .mul(&pow1c[m.ab as usize])
                .mul(&pow2[m.b as usize])
                .mul(&pow2c[m.bb as usize])
                .scale(*c);
            acc = acc.add(&t);
        }
        acc
    }

    /// Max coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }
}

fn power_table(p: &CPoly, n: u8) -> Vec<CPoly> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(CPoly::constant(Complex64::new(1.0, 0.0)));
    for k in 1..=n as usize {
        let next = out[k - 1].mul(p);
        out.push(next);
    }
    out
}

/// Wirtinger differentiation direction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WDir {
    Z1,
    Z1Bar,
    Z2,
    Z2Bar,
}

/// Holomorphic polynomial in `(z1, z2)` only.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct HPoly {
    /// Sorted table keyed by `(deg z1, deg z2)`.
    terms: Vec<((u8, u8), Complex64)>,
}

impl HPoly {
    pub fn zero() -> Self {
        HPoly { terms: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            return Self::zero();
        }
        HPoly { terms: vec![((0, 0), c)] }
    }

    pub fn var(which: usize) -> Self {
        let key = if which == 0 { (1, 0) } else { (0, 1) };
        HPoly { terms: vec![(key, Complex64::new(1.0, 0.0))] }
    }

    pub fn from_terms(mut terms: Vec<((u8, u8), Complex64)>) -> Self {
        terms.sort_by_key(|(m, _)| *m);
        let mut out: Vec<((u8, u8), Complex64)> = Vec::new();
        for (m, c) in terms {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc += c,
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| c.norm_sqr() > 0.0);
        HPoly { terms: out }
    }

    pub fn terms(&self) -> &[((u8, u8), Complex64)] {
        &self.terms
    }

    pub fn eval(&self, z: [Complex64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), c) in &self.terms {
            let mut t = *c;
            for _ in 0..*a {
                t *= z[0];
            }
            for _ in 0..*b {
                t *= z[1];
            }
            acc += t;
        }
        acc
    }

    pub fn add(&self, other: &HPoly) -> HPoly {
        let mut t = self.terms.clone();
        t.extend_from_slice(&other.terms);
        HPoly::from_terms(t)
    }

    pub fn sub(&self, other: &HPoly) -> HPoly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> HPoly {
        if c == Complex64::new(0.0, 0.0) {
            return HPoly::zero();
        }
        HPoly { terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect() }
    }

    pub fn mul(&self, other: &HPoly) -> HPoly {
        let mut t = Vec::with_capacity(self.terms.len() * other.terms.len());
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                t.push(((a1 + a2, b1 + b2), c1 * c2));
            }
        }
        HPoly::from_terms(t)
    }

    pub fn pow(&self, n: u8) -> HPoly {
        let mut acc = HPoly::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Derivative in `z1` (`which = 0`) or `z2` (`which = 1`).
    pub fn derivative(&self, which: usize) -> HPoly {
        let mut t = Vec::new();
        for ((a, b), c) in &self.terms {
            let (e, m) = if which == 0 {
                (*a, (a.wrapping_sub(1), *b))
            } else {
                (*b, (*a, b.wrapping_sub(1)))
            };
            if e > 0 {
                t.push((m, c * Complex64::new(e as f64, 0.0)));
            }
        }
        HPoly::from_terms(t)
    }

    /// Composition `self(map.c1, map.c2)`.
    pub fn compose(&self, map: &HoloMap2) -> HPoly {
        let max_a = self.terms.iter().map(|((a, _), _)| *a).max().unwrap_or(0);
        let max_b = self.terms.iter().map(|((_, b), _)| *b).max().unwrap_or(0);
        let mut pow1 = Vec::with_capacity(max_a as usize + 1);
        pow1.push(HPoly::constant(Complex64::new(1.0, 0.0)));
        for k in 1..=max_a as usize {
            let t = pow1[k - 1].mul(&map.c1);
            pow1.push(t);
        }
        let mut pow2 = Vec::with_capacity(max_b as usize + 1);
        pow2.push(HPoly::constant(Complex64::new(1.0, 0.0)));
        for k in 1..=max_b as usize {
            let t = pow2[k - 1].mul(&map.c2);
            pow2.push(t);
        }
        let mut acc = HPoly::zero();
        for ((a, b), c) in &self.terms {
            acc = acc.add(&pow1[*a as usize].mul(&pow2[*b as usize]).scale(*c));
        }
        acc
    }

    /// Embed into the four-variable ring (no antiholomorphic exponents).
    pub fn embed(&self) -> CPoly {
        CPoly::from_terms(
            self.terms
                .iter()
                .map(|((a, b), c)| (Mono { a: *a, ab: 0, b: *b, bb: 0 }, *c))
                .collect(),
        )
    }
}

/// Holomorphic polynomial map `C^2 -> C^2`, `zeta -> (c1(zeta), c2(zeta))`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct HoloMap2 {
    pub c1: HPoly,
    pub c2: HPoly,
}

impl HoloMap2 {
    pub fn identity() -> Self {
        HoloMap2 { c1: HPoly::var(0), c2: HPoly::var(1) }
    }

    /// Affine map `zeta -> shift + M zeta`.
    pub fn affine(m: [[Complex64; 2]; 2], shift: [Complex64; 2]) -> Self {
        let c1 = HPoly::from_terms(vec![
            ((0, 0), shift[0]),
            ((1, 0), m[0][0]),
            ((0, 1), m[0][1]),
        ]);
        let c2 = HPoly::from_terms(vec![
            ((0, 0), shift[1]),
            ((1, 0), m[1][0]),
            ((0, 1), m[1][1]),
        ]);
        HoloMap2 { c1, c2 }
    }

    pub fn eval(&self, zeta: [Complex64; 2]) -> [Complex64; 2] {
        [self.c1.eval(zeta), self.c2.eval(zeta)]
    }

    /// Composition `self(other(zeta))`.
    pub fn after(&self, other: &HoloMap2) -> HoloMap2 {
        HoloMap2 { c1: self.c1.compose(other), c2: self.c2.compose(other) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mul_and_eval_agree() {
        // (z1 + conj z2)^2 evaluated two ways
        let p = CPoly::z1().add(&CPoly::z2().conj());
        let sq = p.mul(&p);
        let z = [c(0.3, -0.7), c(-1.1, 0.4)];
        let direct = p.eval(z) * p.eval(z);
        assert_relative_eq!(sq.eval(z).re, direct.re, epsilon = 1e-14);
        assert_relative_eq!(sq.eval(z).im, direct.im, epsilon = 1e-14);
    }

    #[test]
    fn wirtinger_of_mod_squared() {
        // r = |z1|^2: d/dz1 = conj z1, d/dz1 d/dz1bar = 1
        let r = CPoly::z1().mul(&CPoly::z1().conj());
        let dz1 = r.wirtinger(WDir::Z1);
        assert_eq!(dz1, CPoly::z1().conj());
        let mixed = dz1.wirtinger(WDir::Z1Bar);
        assert_eq!(mixed, CPoly::constant(c(1.0, 0.0)));
    }

    #[test]
    fn compose_matches_pointwise() {
        // r = |z1|^2 + Re z2, map: z1 = zeta1 + i zeta2^2, z2 = 2 zeta2 - 1
        let half = c(0.5, 0.0);
        let r = CPoly::z1()
            .mul(&CPoly::z1().conj())
            .add(&CPoly::z2().scale(half))
            .add(&CPoly::z2().conj().scale(half));
        let map = HoloMap2 {
            c1: HPoly::var(0).add(&HPoly::var(1).pow(2).scale(c(0.0, 1.0))),
            c2: HPoly::var(1).scale(c(2.0, 0.0)).sub(&HPoly::constant(c(1.0, 0.0))),
        };
        let composed = r.compose(&map);
        for k in 0..20 {
            let t = k as f64 * 0.137;
            let zeta = [c(t.sin() * 0.4, t.cos() * 0.2), c(0.3 - 0.02 * t, 0.1 * t.sin())];
            let lhs = composed.eval(zeta);
            let rhs = r.eval(map.eval(zeta));
            assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-12);
            assert_relative_eq!(lhs.im, rhs.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn conj_swaps_and_realness() {
        let r = CPoly::z1().mul(&CPoly::z1().conj()).add(&CPoly::constant(c(-1.0, 0.0)));
        assert!(r.is_real(0.0));
        let p = CPoly::z1().scale(c(0.0, 1.0));
        assert!(!p.is_real(1e-15));
        assert_eq!(p.conj().conj(), p);
    }
}
