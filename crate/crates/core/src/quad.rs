//! Quadrature building blocks: Gauss-Legendre rules, dyadic corner
//! subdivision for singular corner integrands, uniform 4-D grids with
//! polar-cell refinement near a kernel singularity, and a fixed
//! antipodally symmetric direction set on S^3.

use num_complex::Complex64;

use crate::domain::C2;

/// Gauss-Legendre nodes/weights on [-1, 1], Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, t);
            let dt = -p / dp;
            t += dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, t);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss rule mapped to [a, b].
pub fn gauss_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        x.iter().map(|t| mid + half * t).collect(),
        w.iter().map(|t| t * half).collect(),
    )
}

/// Dyadic subdivision of [0, 1] toward 0: intervals
/// `[2^{-k-1}, 2^{-k}]` for `k = 0..levels`, plus the core `[0, 2^{-levels-1}]`.
pub fn dyadic_intervals(levels: u32) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(levels as usize + 1);
    for k in 0..levels {
        out.push((2f64.powi(-(k as i32) - 1), 2f64.powi(-(k as i32))));
    }
    out.push((0.0, 2f64.powi(-(levels as i32) - 1)));
    out
}

/// Composite Gauss rule on [0,1] refined dyadically toward the origin.
pub fn corner_rule(levels: u32, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (a, b) in dyadic_intervals(levels) {
        let (x, w) = gauss_on(a, b, order);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Uniform grid over a 4-D box `[-half, half]^4` with `n` cells per axis;
/// cell centers and the common cell volume.
pub struct Grid4 {
    pub half: f64,
    pub n: usize,
    pub h: f64,
    pub cell_volume: f64,
}

impl Grid4 {
    pub fn new(half: f64, n: usize) -> Self {
        let h = 2.0 * half / n as f64;
        Grid4 { half, n, h, cell_volume: h * h * h * h }
    }

    pub fn center(&self, i: [usize; 4]) -> C2 {
        let c = |k: usize| -self.half + (i[k] as f64 + 0.5) * self.h;
        [Complex64::new(c(0), c(1)), Complex64::new(c(2), c(3))]
    }

    pub fn for_each_center(&self, mut f: impl FnMut(C2)) {
        for i0 in 0..self.n {
            for i1 in 0..self.n {
                for i2 in 0..self.n {
                    for i3 in 0..self.n {
                        f(self.center([i0, i1, i2, i3]));
                    }
                }
            }
        }
    }
}

/// Fixed antipodally symmetric direction set on S^3 (cross-polytope
/// vertices, 24-cell-style midpoints, and a deterministic low-discrepancy
/// fill), with uniform weights summing to the S^3 area `2 pi^2`.
pub fn s3_directions(n_extra: usize) -> Vec<[f64; 4]> {
    let mut dirs: Vec<[f64; 4]> = Vec::new();
    for axis in 0..4 {
        for sign in [1.0, -1.0] {
            let mut v = [0.0; 4];
            v[axis] = sign;
            dirs.push(v);
        }
    }
    let s = 0.5f64;
    for s0 in [s, -s] {
        for s1 in [s, -s] {
            for s2 in [s, -s] {
                for s3 in [s, -s] {
                    dirs.push([s0, s1, s2, s3]);
                }
            }
        }
    }
    // deterministic additive-recurrence fill, symmetrized
    let mut state = [0.12f64, 0.37, 0.61, 0.83];
    let alphas = [0.6180339887498949, 0.7548776662466927, 0.8191725133961645, 0.2886751345948129];
    for _ in 0..n_extra {
        for k in 0..4 {
            state[k] = (state[k] + alphas[k]) % 1.0;
        }
        let g: Vec<f64> = state.iter().map(|u| inv_norm_cdf(*u)).collect();
        let nrm = (g.iter().map(|t| t * t).sum::<f64>()).sqrt();
        if nrm > 1e-9 {
            let v = [g[0] / nrm, g[1] / nrm, g[2] / nrm, g[3] / nrm];
            dirs.push(v);
            dirs.push([-v[0], -v[1], -v[2], -v[3]]);
        }
    }
    dirs
}

/// Acklam-style inverse normal CDF, good to ~1e-9 (used only to spread
/// quadrature directions; not a statistics routine).
fn inv_norm_cdf(p: f64) -> f64 {
    let a = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    let b = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    let c = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    let d = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    let plow = 0.02425;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        -inv_norm_cdf(1.0 - p)
    }
}

/// Area of S^3.
pub const S3_AREA: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Tanh-sinh (double-exponential) rule on [0, 1]; spectrally accurate for
/// integrands that are flat or mildly singular at the endpoints.
pub fn tanh_sinh_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let tmax = 3.2;
    let h = 2.0 * tmax / (n as f64 - 1.0);
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let pi_half = std::f64::consts::FRAC_PI_2;
    for i in 0..n {
        let t = -tmax + i as f64 * h;
        let u = pi_half * t.sinh();
        let x = 0.5 * (1.0 + u.tanh());
        let w = h * pi_half * t.cosh() / (2.0 * u.cosh() * u.cosh());
        if w.is_finite() && w > 1e-300 {
            xs.push(x);
            ws.push(w);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_integrates_polynomials() {
        let (x, w) = gauss_on(0.0, 2.0, 8);
        let val: f64 = x.iter().zip(&w).map(|(t, w)| t.powi(7) * w).sum();
        assert_relative_eq!(val, 2f64.powi(8) / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn corner_rule_handles_mild_singularity() {
        // integral of x^{-1/2} on (0,1] = 2
        let (x, w) = corner_rule(40, 6);
        let val: f64 = x.iter().zip(&w).filter(|(t, _)| **t > 0.0).map(|(t, w)| w / t.sqrt()).sum();
        assert_relative_eq!(val, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn s3_set_is_antipodal_and_unit() {
        let dirs = s3_directions(20);
        for v in &dirs {
            let n: f64 = v.iter().map(|t| t * t).sum();
            assert_relative_eq!(n, 1.0, epsilon = 1e-9);
            assert!(dirs.iter().any(|u| {
                (0..4).all(|k| (u[k] + v[k]).abs() < 1e-12)
            }));
        }
    }

    #[test]
    fn grid_cells_tile_volume() {
        let g = Grid4::new(1.0, 8);
        let mut vol = 0.0;
        g.for_each_center(|_| vol += g.cell_volume);
        assert_relative_eq!(vol, 16.0, max_relative = 1e-12);
    }
}
