//! Reference implementations that share no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Quadrature split into `pieces` panels, for peaked integrands.
pub fn integrate_split(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| integrate(f, a + i as f64 * h, a + (i + 1) as f64 * h, tol / pieces as f64))
        .sum()
}

/// `I0(x) = (1/pi) int_0^pi e^{x cos t} dt` by the trapezoid rule, which
/// converges geometrically for periodic integrands.
pub fn bessel_i0_trapezoid(x: f64) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let mut s = 0.5 * (x.exp() + (-x).exp());
    for i in 1..n {
        s += (x * (i as f64 * h).cos()).exp();
    }
    s * h / PI
}

pub fn bessel_i1_trapezoid(x: f64) -> f64 {
    let n = 400;
    let h = PI / n as f64;
    let mut s = 0.5 * (x.exp() - (-x).exp());
    for i in 1..n {
        let t = i as f64 * h;
        s += (x * t.cos()).exp() * t.cos();
    }
    s * h / PI
}

pub fn rayleigh_pdf(b: f64, x: f64) -> f64 {
    x / b * (-x * x / (2.0 * b)).exp()
}

pub fn rayleigh_cdf(b: f64, x: f64) -> f64 {
    1.0 - (-x * x / (2.0 * b)).exp()
}

pub fn rician_pdf(s: f64, b: f64, x: f64) -> f64 {
    x / b * (-(x * x + s * s) / (2.0 * b)).exp() * bessel_i0_trapezoid(x * s / b)
}

/// Two-sample-free Kolmogorov-Smirnov statistic of `xs` against `cdf`.
pub fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Truncated product of two coefficient vectors, written as a plain double loop.
pub fn poly_mul(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for i in 0..a.len() {
        for j in 0..b.len() {
            if i + j < len {
                out[i + j] += a[i] * b[j];
            }
        }
    }
    out
}

/// Minimal xorshift generator for oracle-side sampling.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn rayleigh(&mut self, b: f64) -> f64 {
        (-2.0 * b * (1.0 - self.next_f64()).ln()).sqrt()
    }
}
