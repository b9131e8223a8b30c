//! Small-argument behaviour of `|H|` for perfectly aligned branches via
//! Laplace transforms.
//!
//! A branch density with Maclaurin series `sum a_n x^n` has a Laplace
//! transform whose large-`t` expansion is `sum c_{n+1} t^{-(n+1)}` with
//! `c_{n+1} = n! a_n` (Watson's lemma). The transform of a sum of `M`
//! independent branches is the `M`-th power, and inverting term by term
//! gives the Maclaurin series of the density of `|H|` near the origin.
//!
//! Series arithmetic is generic over [`SeriesScalar`], so Rayleigh
//! coefficients can be carried exactly as `BigRational`.

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{Error, Flagged, Result, Warning};
use crate::fading::{BranchDistribution, FadingLaw};
use crate::outage::least_squares_slope;
use crate::rng::{run_chunked, RandomStream};
use crate::scalar::{Real, SeriesScalar};
use crate::special::{erfcx, factorial};

/// Partial-sum fraction that bounds the validity radius.
pub const RADIUS_TOLERANCE: f64 = 0.1;

/// Extra orders kept beyond the leading `t^{-2M}` term by default.
pub const EXTRA_ORDERS: usize = 8;

pub fn default_order(m: usize) -> usize {
    2 * m + EXTRA_ORDERS
}

/// Laplace transform of the Rayleigh(b) density,
/// `1 - sqrt(pi b/2) t e^{b t^2/2} erfc(t sqrt(b/2))`.
pub fn laplace_rayleigh<T: Real>(t: T, b: T) -> Result<T> {
    if t < T::zero() || t.is_nan() {
        return Err(Error::domain(format!("Laplace argument must be nonnegative, got {t}")));
    }
    if !(b > T::zero()) {
        return Err(Error::domain(format!("Rayleigh scale must be positive, got {b}")));
    }
    // With z = t sqrt(b/2) the transform is 1 - sqrt(pi) z erfcx(z).
    let z = t * (b / T::lit(2.0)).sqrt();
    if z < T::lit(8.0) {
        return Ok(T::one() - T::PI().sqrt() * z * erfcx(z));
    }
    // 1 - sqrt(pi) z erfcx(z) ~ sum_{k>=1} (-1)^{k+1} (2k-1)!! / (2 z^2)^k
    let inv = T::one() / (T::lit(2.0) * z * z);
    let mut term = inv;
    let mut sum = term;
    for k in 2..200 {
        let next = -term * T::from_count(2 * k - 1) * inv;
        if next.abs() >= term.abs() || next.abs() < T::epsilon() * sum.abs() {
            break;
        }
        term = next;
        sum = sum + term;
    }
    Ok(sum)
}

/// Scale parameters recorded alongside a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesScale {
    Rayleigh { b: f64 },
    Rician { s: f64, b: f64 },
}

/// Truncated `L(t) = sum_{n=1}^{N} c_n t^{-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InversePowerSeries<S> {
    /// `coefficients[n]` is `c_n`; index 0 is unused and kept at zero.
    coefficients: Vec<S>,
    pub scale: Option<SeriesScale>,
    /// Number of branches whose transforms were multiplied.
    pub branches: usize,
}

impl<S: SeriesScalar> InversePowerSeries<S> {
    /// From `c_1..=c_N`.
    pub fn from_coefficients(c: Vec<S>) -> Self {
        let mut coefficients = Vec::with_capacity(c.len() + 1);
        coefficients.push(S::zero());
        coefficients.extend(c);
        Self {
            coefficients,
            scale: None,
            branches: 1,
        }
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `c_n`, zero beyond the truncation order.
    pub fn coefficient(&self, n: usize) -> S {
        self.coefficients.get(n).cloned().unwrap_or_else(S::zero)
    }

    /// `(n, c_n)` for `n = 1..=N`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &S)> {
        self.coefficients.iter().enumerate().skip(1)
    }

    /// Index of the first nonzero coefficient.
    pub fn leading_index(&self) -> Option<usize> {
        self.terms().find(|(_, c)| !c.is_zero()).map(|(n, _)| n)
    }
}

/// Rayleigh(b) coefficients `c_{2k+2} = (-1)^k (2k+1)!! / b^{k+1}` up to
/// order `n`; odd indices vanish.
pub fn rayleigh_series<S: SeriesScalar>(b: S, order: usize) -> Result<InversePowerSeries<S>> {
    if order < 2 {
        return Err(Error::Truncation { order, needed: 2 });
    }
    let mut c = vec![S::zero(); order + 1];
    let mut cur = S::one() / b.clone();
    let mut k = 0;
    while 2 * k + 2 <= order {
        c[2 * k + 2] = cur.clone();
        cur = cur * -S::from_int(2 * k as i64 + 3) / b.clone();
        k += 1;
    }
    let scale = Some(SeriesScale::Rayleigh { b: b.approx_f64() });
    Ok(InversePowerSeries {
        coefficients: c,
        scale,
        branches: 1,
    })
}

/// Rician(s, b) coefficients from the density's Maclaurin series
/// `a_{2k+1} = e^{-s^2/2b}/b sum_{i+j=k} (-1)^i/((2b)^i i!) (s^2/4b^2)^j/(j!)^2`.
pub fn rician_series<T: Real + SeriesScalar>(s: T, b: T, order: usize) -> Result<InversePowerSeries<T>> {
    if order < 2 {
        return Err(Error::Truncation { order, needed: 2 });
    }
    let two = T::lit(2.0);
    let pre = (-s * s / (two * b)).exp() / b;
    let q = s * s / (T::lit(4.0) * b * b);
    let mut c = vec![T::zero(); order + 1];
    let mut k = 0;
    while 2 * k + 2 <= order {
        let mut sum = T::zero();
        for i in 0..=k {
            let j = k - i;
            let gauss = (-T::one() / (two * b)).powi(i as i32) / factorial::<T>(i);
            let bessel = q.powi(j as i32) / (factorial::<T>(j) * factorial::<T>(j));
            sum = sum + gauss * bessel;
        }
        c[2 * k + 2] = factorial::<T>(2 * k + 1) * pre * sum;
        k += 1;
    }
    Ok(InversePowerSeries {
        coefficients: c,
        scale: Some(SeriesScale::Rician {
            s: s.as_f64(),
            b: b.as_f64(),
        }),
        branches: 1,
    })
}

/// Inverse-power expansion of a branch transform.
pub fn branch_series<T: Real + SeriesScalar>(dist: &BranchDistribution<T>, order: usize) -> Result<InversePowerSeries<T>> {
    match dist.law() {
        FadingLaw::Rayleigh { b } => rayleigh_series(b, order),
        FadingLaw::Rician { s, b } => rician_series(s, b, order),
        FadingLaw::Degenerate { .. } => Err(Error::Unsupported(
            "degenerate amplitude has no density to expand".into(),
        )),
    }
}

fn cauchy_product<S: SeriesScalar>(a: &[S], b: &[S], order: usize) -> Vec<S> {
    let mut out = vec![S::zero(); order + 1];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
        for (j, y) in b.iter().enumerate() {
            if i + j > order {
                break;
            }
            if !y.is_zero() {
                out[i + j] = out[i + j].clone() + x.clone() * y.clone();
            }
        }
    }
    out
}

/// `L^M` truncated at `order`.
pub fn raise_to_power_m<S: SeriesScalar>(series: &InversePowerSeries<S>, m: usize, order: usize) -> Result<InversePowerSeries<S>> {
    if m == 0 {
        return Err(Error::domain("power must be at least 1"));
    }
    let lead = series
        .leading_index()
        .ok_or_else(|| Error::domain("series has no nonzero coefficient"))?;
    if order < m * lead {
        return Err(Error::Truncation {
            order,
            needed: m * lead,
        });
    }
    let mut base = series.coefficients.clone();
    base.resize(order + 1, S::zero());
    let mut acc = base.clone();
    for _ in 1..m {
        acc = cauchy_product(&acc, &base, order);
    }
    Ok(InversePowerSeries {
        coefficients: acc,
        scale: series.scale,
        branches: series.branches * m,
    })
}

/// Truncated density expansion `P(x) = sum a_k x^k` near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MaclaurinSeries<S> {
    coefficients: Vec<S>,
    /// Largest `x` at which the last nonzero term stays within
    /// [`RADIUS_TOLERANCE`] of the partial sum.
    pub x_max: f64,
    pub scale: Option<SeriesScale>,
    pub branches: usize,
}

impl<S: SeriesScalar> MaclaurinSeries<S> {
    /// `a_k`, zero beyond the truncation order.
    pub fn coefficient(&self, k: usize) -> S {
        self.coefficients.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &S)> {
        self.coefficients.iter().enumerate()
    }

    pub fn leading_index(&self) -> Option<usize> {
        self.terms().find(|(_, a)| !a.is_zero()).map(|(k, _)| k)
    }

    /// Density estimate at `x`.
    pub fn density(&self, x: S) -> S {
        self.coefficients
            .iter()
            .rev()
            .fold(S::zero(), |acc, a| acc * x.clone() + a.clone())
    }

    /// `integral_0^x P = sum a_k x^{k+1}/(k+1)`.
    pub fn integral(&self, x: S) -> S {
        self.coefficients
            .iter()
            .enumerate()
            .rev()
            .fold(S::zero(), |acc, (k, a)| acc * x.clone() + a.clone() / S::from_int(k as i64 + 1))
            * x
    }
}

fn eval_f64(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Radius where the last nonzero term reaches `RADIUS_TOLERANCE` of the sum.
fn validity_radius(coeffs: &[f64]) -> f64 {
    let nonzero: Vec<usize> = (0..coeffs.len()).filter(|&k| coeffs[k] != 0.0).collect();
    let (Some(&first), Some(&last)) = (nonzero.first(), nonzero.last()) else {
        return 0.0;
    };
    if first == last {
        return f64::INFINITY;
    }
    let exceeds = |x: f64| {
        let last_term = (coeffs[last] * x.powi(last as i32)).abs();
        let sum = eval_f64(coeffs, x).abs();
        !(last_term <= RADIUS_TOLERANCE * sum)
    };
    // Geometric scan for the first crossing, then bisection.
    let (mut lo, mut hi) = (0.0, f64::NAN);
    let mut x = 1e-6;
    while x < 1e6 {
        if exceeds(x) {
            hi = x;
            break;
        }
        lo = x;
        x *= 1.25;
    }
    if hi.is_nan() {
        return f64::INFINITY;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// `a_k = c_{k+1} / k!`.
pub fn invert_termwise<S: SeriesScalar>(series: &InversePowerSeries<S>) -> MaclaurinSeries<S> {
    let n = series.order();
    let mut coefficients = Vec::with_capacity(n);
    let mut k_fact = S::one();
    for k in 0..n {
        if k > 0 {
            k_fact = k_fact * S::from_int(k as i64);
        }
        coefficients.push(series.coefficient(k + 1) / k_fact.clone());
    }
    let approx: Vec<f64> = coefficients.iter().map(|a| a.approx_f64()).collect();
    MaclaurinSeries {
        x_max: validity_radius(&approx),
        coefficients,
        scale: series.scale,
        branches: series.branches,
    }
}

/// Outage `P(|H| < x_star)` by integrating the density series; flagged
/// beyond the validity radius.
pub fn outage_from_maclaurin<S: SeriesScalar>(series: &MaclaurinSeries<S>, x_star: S) -> Flagged<S> {
    let beyond = x_star.approx_f64() > series.x_max;
    Flagged::warn_if(series.integral(x_star), beyond, Warning::Extrapolated)
}

/// Leading-term-only outage `a_K x^{K+1} / (K+1)`.
pub fn outage_leading_term<S: SeriesScalar>(series: &MaclaurinSeries<S>, x_star: S) -> S {
    let Some(k) = series.leading_index() else {
        return S::zero();
    };
    let mut p = series.coefficient(k) / S::from_int(k as i64 + 1);
    for _ in 0..=k {
        p = p * x_star.clone();
    }
    p
}

/// Density series of `|H|` for `m` perfectly aligned branches with the
/// default truncation.
pub fn perfect_alignment_density<T: Real + SeriesScalar>(dist: &BranchDistribution<T>, m: usize) -> Result<MaclaurinSeries<T>> {
    let order = default_order(m);
    let base = branch_series(dist, order)?;
    Ok(invert_termwise(&raise_to_power_m(&base, m, order)?))
}

/// Writes `section,index,coefficient` rows for both expansions.
pub fn write_series_csv<W: Write, S: SeriesScalar + std::fmt::Display>(
    out: &mut W,
    laplace: &InversePowerSeries<S>,
    maclaurin: &MaclaurinSeries<S>,
    metadata: &[(String, String)],
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# x_max: {}", maclaurin.x_max)?;
    writeln!(out, "section,index,coefficient")?;
    for (n, c) in laplace.terms() {
        writeln!(out, "laplace,{n},{c}")?;
    }
    for (k, a) in maclaurin.terms() {
        writeln!(out, "maclaurin,{k},{a}")?;
    }
    Ok(())
}

/// Weighted histogram of `sum |h_m|` on `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub trials: u64,
    /// Probability that every branch lies below `x_max`; each draw carries
    /// this weight.
    pub weight: f64,
}

impl DensityHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    pub fn centre(&self, i: usize) -> f64 {
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    pub fn hits(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Estimated probability mass of bin `i`.
    pub fn probability(&self, i: usize) -> f64 {
        self.weight * self.counts[i] as f64 / self.trials as f64
    }

    pub fn density(&self, i: usize) -> f64 {
        self.probability(i) / self.width(i)
    }

    /// Standard deviation of a bin-mass estimate if the true mass is
    /// `predicted`.
    pub fn sigma_under(&self, predicted: f64) -> f64 {
        let q = (predicted / self.weight).clamp(0.0, 1.0);
        self.weight * (q * (1.0 - q) / self.trials as f64).sqrt()
    }

    /// Exponent `e` of a density `~ x^e`, fitted from the cumulative counts
    /// at the bin edges (`~ x^{e+1}`). Edges with fewer than `min_count`
    /// cumulative hits are skipped; the fit is weighted by counts.
    pub fn fit_exponent(&self, min_count: u64) -> Result<(f64, f64)> {
        let mut acc = 0u64;
        let mut pts = Vec::new();
        for (i, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc >= min_count {
                pts.push((self.edges[i + 1].ln(), (acc as f64).ln(), acc as f64));
            }
        }
        if pts.len() < 3 {
            return Err(Error::Estimation(format!(
                "only {} edge(s) with at least {min_count} cumulative hits",
                pts.len()
            )));
        }
        let wsum: f64 = pts.iter().map(|p| p.2).sum();
        let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / wsum;
        let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / wsum;
        let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        // Cumulative counts are strongly correlated, so report the
        // unweighted residual scatter as a rough error bar.
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (_, stderr) = least_squares_slope(&xs, &ys);
        Ok((slope - 1.0, stderr))
    }
}

/// Histogram of `sum |h_m|` over `bins` equal bins on `[0, x_max]`.
///
/// Branches are drawn from their law truncated to `[0, x_max]` and each
/// draw is weighted by `F(x_max)^M`; a sum below `x_max` is impossible
/// otherwise, so the estimate is unbiased while every draw is informative.
pub fn mc_density_near_origin<T: Real>(
    dist: &BranchDistribution<T>,
    m: usize,
    x_max: T,
    bins: usize,
    trials: u64,
    stream: &RandomStream,
) -> Result<Flagged<DensityHistogram>> {
    if bins < 10 {
        return Err(Error::domain(format!("need at least 10 bins, got {bins}")));
    }
    if m == 0 || trials == 0 || !(x_max > T::zero()) {
        return Err(Error::domain("branch count, trials and x_max must be positive"));
    }
    let mass = dist.cdf(x_max);
    let width = x_max / T::from_count(bins);
    let chunks = run_chunked(trials, stream, |rng, len| {
        let mut counts = vec![0u64; bins];
        if mass <= T::zero() {
            return counts;
        }
        for _ in 0..len {
            let mut sum = T::zero();
            for _ in 0..m {
                sum = sum + dist.draw_truncated(rng, x_max, mass).unwrap_or(x_max);
            }
            if sum < x_max {
                let i = (sum / width).to_usize().unwrap_or(bins).min(bins - 1);
                counts[i] += 1;
            }
        }
        counts
    });
    let mut counts = vec![0u64; bins];
    for c in chunks {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    let edges = (0..=bins).map(|i| (width * T::from_count(i)).as_f64()).collect();
    let h = DensityHistogram {
        edges,
        counts,
        trials,
        weight: mass.powi(m as i32).as_f64(),
    };
    let empty = h.hits() == 0;
    Ok(Flagged::warn_if(h, empty, Warning::NoSamples))
}
