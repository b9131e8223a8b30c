//! Outage probability `P(|H| < sqrt(gamma_0 / gamma_t))` by Monte Carlo and
//! in closed or asymptotic form, plus diversity-order estimation.

use std::io::{self, Write};

use serde::Serialize;

use crate::alignment::{AlignmentKind, AlignmentModel};
use crate::error::{Error, Flagged, Result, Warning};
use crate::fading::BranchDistribution;
use crate::rng::{run_chunked, RandomStream};
use crate::scalar::Real;
use crate::special::{factorial, ln_factorial};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Points with fewer outage events than this are flagged low-confidence.
pub const LOW_CONFIDENCE_EVENTS: u64 = 10;

/// Per-branch SNR grid in dB and the linear SNR threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrGrid<T> {
    gamma_t_db: Vec<T>,
    gamma_0: T,
}

impl<T: Real> SnrGrid<T> {
    pub fn new(gamma_t_db: Vec<T>, gamma_0: T) -> Result<Self> {
        if gamma_t_db.is_empty() {
            return Err(Error::domain("SNR grid is empty"));
        }
        if !(gamma_0 > T::zero() && gamma_0.is_finite()) {
            return Err(Error::domain(format!("gamma_0 must be positive, got {gamma_0}")));
        }
        if gamma_t_db.iter().any(|g| !g.is_finite()) || gamma_t_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("SNR grid must be finite and strictly increasing"));
        }
        Ok(Self { gamma_t_db, gamma_0 })
    }

    /// `start, start + step, ...` up to `stop` inclusive (with a small slack
    /// so decimal steps land on `stop`).
    pub fn stepped(start: T, stop: T, step: T, gamma_0: T) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::domain("grid step must be positive"));
        }
        let n = ((stop - start) / step + T::lit(1e-9)).floor();
        let n = n.to_usize().ok_or_else(|| Error::domain("grid stop precedes start"))?;
        Self::new((0..=n).map(|i| start + T::from_count(i) * step).collect(), gamma_0)
    }

    pub fn gamma_t_db(&self) -> &[T] {
        &self.gamma_t_db
    }

    pub fn gamma_0(&self) -> T {
        self.gamma_0
    }

    pub fn len(&self) -> usize {
        self.gamma_t_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_t_db.is_empty()
    }

    pub fn gamma_t_linear(&self) -> impl Iterator<Item = T> + '_ {
        self.gamma_t_db.iter().map(|&db| db_to_linear(db))
    }

    /// Amplitude thresholds `x* = sqrt(gamma_0 / gamma_t)`, decreasing along the grid.
    pub fn thresholds(&self) -> Vec<T> {
        self.gamma_t_linear().map(|g| (self.gamma_0 / g).sqrt()).collect()
    }
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    MonteCarlo,
    Analytic,
    Asymptotic,
    Bound,
    Series,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::MonteCarlo => "monte_carlo",
            Provenance::Analytic => "analytic",
            Provenance::Asymptotic => "asymptotic",
            Provenance::Bound => "bound",
            Provenance::Series => "series",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutagePoint<T> {
    pub gamma_t_db: T,
    /// Estimate, clamped to `[0, 1]`.
    pub p_out: T,
    pub ci_low: T,
    pub ci_high: T,
    /// Monte Carlo draws behind the estimate; zero for non-sampled curves.
    pub trials: u64,
    /// Outage events observed; zero for non-sampled curves.
    pub events: u64,
    /// Unclamped value of an asymptotic or series formula.
    pub p_out_raw: T,
    pub low_confidence: bool,
}

impl<T: Real> OutagePoint<T> {
    /// A point with no sampling uncertainty.
    pub fn exact(gamma_t_db: T, raw: T) -> Self {
        let p = raw.max(T::zero()).min(T::one());
        Self {
            gamma_t_db,
            p_out: p,
            ci_low: p,
            ci_high: p,
            trials: 0,
            events: 0,
            p_out_raw: raw,
            low_confidence: false,
        }
    }

    /// CI half-width relative to the estimate (infinite at zero).
    pub fn relative_half_width(&self) -> T {
        if self.p_out > T::zero() {
            (self.ci_high - self.ci_low) / (T::lit(2.0) * self.p_out)
        } else {
            T::infinity()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageCurve<T> {
    pub provenance: Provenance,
    pub points: Vec<OutagePoint<T>>,
    pub warning: Option<Warning>,
}

impl<T: Real> OutageCurve<T> {
    fn exact(provenance: Provenance, grid: &SnrGrid<T>, f: impl Fn(T) -> T) -> Self {
        let points = grid
            .gamma_t_db
            .iter()
            .zip(grid.gamma_t_linear())
            .map(|(&db, g)| OutagePoint::exact(db, f(g)))
            .collect();
        Self {
            provenance,
            points,
            warning: None,
        }
    }

    /// Writes the curve as CSV, preceded by `# key: value` metadata lines.
    pub fn write_csv<W: Write>(&self, out: &mut W, metadata: &[(String, String)]) -> io::Result<()> {
        for (k, v) in metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        if let Some(w) = self.warning {
            writeln!(out, "# warning: {w}")?;
        }
        writeln!(out, "gamma_t_db,p_out,ci_low,ci_high,trials,provenance,p_out_raw,low_confidence")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{},{},{:e},{}",
                p.gamma_t_db,
                p.p_out,
                p.ci_low,
                p.ci_high,
                p.trials,
                self.provenance.as_str(),
                p.p_out_raw,
                p.low_confidence
            )?;
        }
        Ok(())
    }
}

/// Wilson score interval for `events` successes in `trials`.
pub fn wilson_interval(events: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if events == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if events == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::domain("trials must be at least 1"))
    } else {
        Ok(())
    }
}

/// Draws `|H|` `trials` times and tests every draw against every threshold.
/// Returns per-threshold outage counts (common random numbers).
fn count_outages<T, F>(thresholds: &[T], trials: u64, stream: &RandomStream, draw: F) -> Vec<u64>
where
    T: Real,
    F: Fn(&mut crate::rng::StreamRng) -> T + Sync,
{
    let n = thresholds.len();
    let chunks = run_chunked(trials, stream, |rng, len| {
        // hist[k]: draws lying below exactly the first k thresholds.
        let mut hist = vec![0u64; n + 1];
        for _ in 0..len {
            let h = draw(rng);
            hist[thresholds.partition_point(|&x| h < x)] += 1;
        }
        hist
    });
    let mut hist = vec![0u64; n + 1];
    for c in chunks {
        for (a, b) in hist.iter_mut().zip(c) {
            *a += b;
        }
    }
    // Outage at point i iff the draw lies below threshold i, i.e. k > i.
    let mut counts = vec![0u64; n];
    let mut acc = 0;
    for i in (0..n).rev() {
        acc += hist[i + 1];
        counts[i] = acc;
    }
    counts
}

fn mc_curve<T: Real>(grid: &SnrGrid<T>, counts: &[u64], trials: u64, weight: T) -> OutageCurve<T> {
    let points = grid
        .gamma_t_db
        .iter()
        .zip(counts)
        .map(|(&db, &events)| {
            let (lo, hi) = wilson_interval(events, trials);
            let p = weight * T::lit(events as f64 / trials as f64);
            OutagePoint {
                gamma_t_db: db,
                p_out: p,
                ci_low: weight * T::lit(lo),
                ci_high: weight * T::lit(hi),
                trials,
                events,
                p_out_raw: p,
                low_confidence: events < LOW_CONFIDENCE_EVENTS,
            }
        })
        .collect();
    OutageCurve {
        provenance: Provenance::MonteCarlo,
        points,
        warning: None,
    }
}

/// Monte Carlo outage over the grid with common random numbers.
pub fn mc_outage_curve<T: Real>(
    model: &AlignmentModel<T>,
    dist: &BranchDistribution<T>,
    m: usize,
    grid: &SnrGrid<T>,
    trials: u64,
    stream: &RandomStream,
) -> Result<OutageCurve<T>> {
    check_trials(trials)?;
    let sampler = model.sampler(m)?;
    let thresholds = grid.thresholds();
    let counts = count_outages(&thresholds, trials, stream, |rng| sampler.draw(rng, dist).magnitude);
    Ok(mc_curve(grid, &counts, trials, T::one()))
}

/// Total phase spread the model can produce: offset range plus the error window.
fn phase_spread<T: Real>(model: &AlignmentModel<T>) -> Option<T> {
    let w = model.half_width()?;
    let (lo, hi) = model.offsets.as_ref().map_or((T::zero(), T::zero()), |o| {
        o.iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    });
    Some(hi - lo + T::lit(2.0) * w)
}

/// Monte Carlo outage conditioned on every branch lying below the largest
/// threshold, for rare-event points.
///
/// If all branch phases fall within a `pi/2` sector then `|H| >= max |h_m|`,
/// so `|H| < x` forces every `|h_m| < x`. Drawing branches from the
/// truncated law and weighting by `F(x_max)^M` is then exact. Models whose
/// phase spread can exceed `pi/2` are rejected.
pub fn mc_outage_curve_conditional<T: Real>(
    model: &AlignmentModel<T>,
    dist: &BranchDistribution<T>,
    m: usize,
    grid: &SnrGrid<T>,
    trials: u64,
    stream: &RandomStream,
) -> Result<OutageCurve<T>> {
    check_trials(trials)?;
    let spread = phase_spread(model)
        .ok_or_else(|| Error::Unsupported("conditional sampling needs perfect or coherent alignment".into()))?;
    if spread > T::FRAC_PI_2() * (T::one() + T::epsilon()) {
        return Err(Error::Unsupported(format!(
            "phase spread {spread} exceeds pi/2; conditioning would bias the estimate"
        )));
    }
    let sampler = model.sampler(m)?;
    let thresholds = grid.thresholds();
    let cut = thresholds[0];
    let mass = dist.cdf(cut);
    if mass <= T::zero() {
        return Ok(mc_curve(grid, &vec![0; grid.len()], trials, T::zero()));
    }
    let weight = mass.powi(m as i32);
    let counts = count_outages(&thresholds, trials, stream, |rng| {
        sampler
            .draw_with(rng, |r| dist.draw_truncated(r, cut, mass).unwrap_or(cut))
            .magnitude
    });
    Ok(mc_curve(grid, &counts, trials, weight))
}

/// `b^-M gamma_0^M / (2M)! gamma_t^-M`: high-SNR outage of `M`
/// perfectly aligned Rayleigh branches. Raw value; may exceed 1 at low SNR.
pub fn analytic_outage_perfect_asymptotic<T: Real>(m: usize, b: T, gamma_0: T, gamma_t: T) -> T {
    perfect_asymptotic_log_intercept(m, b, gamma_0).exp() * gamma_t.powi(-(m as i32))
}

/// Intercept `p0 = M (ln gamma_0 - ln b) - ln (2M)!` of the asymptote
/// `ln P = p0 - M ln gamma_t`.
pub fn perfect_asymptotic_log_intercept<T: Real>(m: usize, b: T, gamma_0: T) -> T {
    T::from_count(m) * (gamma_0.ln() - b.ln()) - ln_factorial::<T>(2 * m)
}

pub fn perfect_asymptotic_curve<T: Real>(m: usize, b: T, grid: &SnrGrid<T>) -> OutageCurve<T> {
    OutageCurve::exact(Provenance::Asymptotic, grid, |g| {
        analytic_outage_perfect_asymptotic(m, b, grid.gamma_0, g)
    })
}

/// `1 - exp(-gamma_0 / (Omega_p gamma_t))` with `Omega_p = M E[h^2]`.
/// Exact for Rayleigh branches; otherwise a large-`M` approximation,
/// flagged below four branches.
pub fn analytic_outage_random<T: Real>(m: usize, dist: &BranchDistribution<T>, gamma_0: T, gamma_t: T) -> Flagged<T> {
    let omega = T::from_count(m) * dist.moments().mean_square;
    let p = -(-gamma_0 / (omega * gamma_t)).exp_m1();
    Flagged::warn_if(p, m < 4, Warning::SmallBranchCount)
}

pub fn random_outage_curve<T: Real>(m: usize, dist: &BranchDistribution<T>, grid: &SnrGrid<T>) -> OutageCurve<T> {
    let mut c = OutageCurve::exact(Provenance::Analytic, grid, |g| {
        analytic_outage_random(m, dist, grid.gamma_0, g).value
    });
    c.warning = (m < 4).then_some(Warning::SmallBranchCount);
    c
}

/// `F(sqrt(gamma_0/gamma_t))^M`, an upper bound on coherent outage when the
/// half-width is at most `pi/4`; flagged otherwise.
pub fn coherent_upper_bound<T: Real>(
    m: usize,
    dist: &BranchDistribution<T>,
    half_width: T,
    gamma_0: T,
    gamma_t: T,
) -> Flagged<T> {
    let p = dist.cdf((gamma_0 / gamma_t).sqrt()).powi(m as i32);
    Flagged::warn_if(p, half_width > T::FRAC_PI_4(), Warning::BoundNotGuaranteed)
}

pub fn coherent_bound_curve<T: Real>(
    m: usize,
    dist: &BranchDistribution<T>,
    half_width: T,
    grid: &SnrGrid<T>,
) -> OutageCurve<T> {
    let mut c = OutageCurve::exact(Provenance::Bound, grid, |g| {
        coherent_upper_bound(m, dist, half_width, grid.gamma_0, g).value
    });
    c.warning = (half_width > T::FRAC_PI_4()).then_some(Warning::BoundNotGuaranteed);
    c
}

/// Leading inverse-power term `coefficient * t^-exponent` of the Laplace
/// transform of `|H|` for perfectly aligned Rician branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicianLeading<T> {
    /// As published: `e^{-M s^2/2b} (2b)^{-M}`.
    pub coefficient: T,
    /// `2M`.
    pub exponent: usize,
    /// From the Maclaurin term `(x/b) e^{-s^2/2b}` of the branch density:
    /// `e^{-M s^2/2b} b^{-M}`. Differs from `coefficient` by `2^M`.
    pub watson_coefficient: T,
}

impl<T: Real> RicianLeading<T> {
    fn pdf_term(c: T, n: usize, x: T) -> T {
        c / factorial::<T>(n - 1) * x.powi(n as i32 - 1)
    }

    /// Implied small-`x` density `coefficient / (2M-1)! x^{2M-1}`.
    pub fn pdf_leading(&self, x: T) -> T {
        Self::pdf_term(self.coefficient, self.exponent, x)
    }

    /// Implied high-SNR outage `coefficient / (2M)! (gamma_0/gamma_t)^M`.
    pub fn outage_leading(&self, snr_ratio: T) -> T {
        self.coefficient / factorial::<T>(self.exponent) * snr_ratio.powi(self.exponent as i32 / 2)
    }

    pub fn watson_pdf_leading(&self, x: T) -> T {
        Self::pdf_term(self.watson_coefficient, self.exponent, x)
    }

    pub fn watson_outage_leading(&self, snr_ratio: T) -> T {
        self.watson_coefficient / factorial::<T>(self.exponent) * snr_ratio.powi(self.exponent as i32 / 2)
    }
}

pub fn rician_leading_coefficient<T: Real>(m: usize, s: T, b: T) -> RicianLeading<T> {
    let mf = T::from_count(m);
    let shadow = (-mf * s * s / (T::lit(2.0) * b)).exp();
    RicianLeading {
        coefficient: shadow * (T::lit(2.0) * b).powi(-(m as i32)),
        exponent: 2 * m,
        watson_coefficient: shadow * b.powi(-(m as i32)),
    }
}

/// Least-squares diversity fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityFit {
    pub order: f64,
    pub stderr: f64,
    pub points_used: usize,
    pub gamma_t_db_range: (f64, f64),
}

/// Relative CI half-width above which a point is not used in the fit.
pub const FIT_MAX_RELATIVE_CI: f64 = 0.3;
/// Fit window below the highest usable point, in dB.
pub const FIT_WINDOW_DB: f64 = 10.0;

/// Fits `log10 P` against `log10 gamma_t` over the highest-SNR contiguous run
/// of points with relative CI half-width below 30%, restricted to the 10 dB
/// below the top usable point. Returns minus the slope.
pub fn estimate_diversity_order<T: Real>(curve: &OutageCurve<T>) -> Result<DiversityFit> {
    let usable = |p: &OutagePoint<T>| {
        p.p_out > T::zero() && p.relative_half_width().as_f64() < FIT_MAX_RELATIVE_CI
    };
    let pts = &curve.points;
    let top = pts
        .iter()
        .rposition(usable)
        .ok_or_else(|| Error::Estimation("no point has a positive estimate with a tight interval".into()))?;
    let top_db = pts[top].gamma_t_db.as_f64();
    let mut start = top;
    while start > 0 && usable(&pts[start - 1]) && top_db - pts[start - 1].gamma_t_db.as_f64() <= FIT_WINDOW_DB + 1e-9 {
        start -= 1;
    }
    let run = &pts[start..=top];
    if run.len() < 3 {
        return Err(Error::Estimation(format!(
            "only {} usable point(s) in the top {FIT_WINDOW_DB} dB ending at {top_db} dB; need 3",
            run.len()
        )));
    }
    let xs: Vec<f64> = run.iter().map(|p| p.gamma_t_db.as_f64() / 10.0).collect();
    let ys: Vec<f64> = run.iter().map(|p| p.p_out.as_f64().log10()).collect();
    let (slope, stderr) = least_squares_slope(&xs, &ys);
    Ok(DiversityFit {
        order: -slope,
        stderr,
        points_used: run.len(),
        gamma_t_db_range: (run[0].gamma_t_db.as_f64(), top_db),
    })
}

/// Ordinary least-squares slope and its standard error.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, stderr)
}

/// Whether a model satisfies the pairwise `pi/2` phase condition with certainty.
pub fn within_quarter_sector<T: Real>(model: &AlignmentModel<T>) -> bool {
    matches!(model.kind, AlignmentKind::Perfect { .. } | AlignmentKind::Coherent { .. })
        && phase_spread(model).is_some_and(|s| s <= T::FRAC_PI_2() * (T::one() + T::epsilon()))
}
