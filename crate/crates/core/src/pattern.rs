//! Far-field geometry of a linear RIS: phase scanning, array factor,
//! full-diversity beamwidth, Woodward synthesis and the element link budget.

use std::io::{self, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::alignment::AlignmentModel;
use crate::error::{Error, Flagged, Result, Warning};
use crate::fading::BranchDistribution;
use crate::outage::{mc_outage_curve, OutageCurve, SnrGrid};
use crate::rng::RandomStream;
use crate::scalar::Real;

/// Points in the default pattern export over `u in [-1, 1]`; odd so the grid
/// step is 1/1024 and `u = 0` is sampled.
pub const DEFAULT_PATTERN_POINTS: usize = 2049;

/// Floor applied to exported pattern levels in dB.
pub const PATTERN_DB_FLOOR: f64 = -120.0;

/// Below this `|sin(pi d (u - u0))|` the array factor uses its series form.
const SINGULAR_SIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RisGeometry<T> {
    /// Element count.
    pub m: usize,
    /// Element pitch in wavelengths.
    pub dx_over_lambda: T,
    /// Scan direction sine.
    pub u0: T,
}

impl<T: Real> RisGeometry<T> {
    pub fn new(m: usize, dx_over_lambda: T, u0: T) -> Result<Self> {
        if m == 0 {
            return Err(Error::domain("element count must be at least 1"));
        }
        if !(dx_over_lambda > T::zero() && dx_over_lambda.is_finite()) {
            return Err(Error::domain(format!("element pitch must be positive, got {dx_over_lambda}")));
        }
        check_sine(u0)?;
        Ok(Self { m, dx_over_lambda, u0 })
    }

    /// Perfect alignment towards `u0` observed from direction `u`: the
    /// residual scan phases become deterministic branch offsets.
    pub fn alignment_towards(&self, u: T) -> Result<AlignmentModel<T>> {
        Ok(AlignmentModel::perfect(T::zero()).with_offsets(branch_phase_offsets(self, u)?))
    }
}

fn check_sine<T: Real>(u: T) -> Result<()> {
    if u.abs() <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(format!("direction sine must lie in [-1, 1], got {u}")))
    }
}

/// `r_m = exp(2 pi j u0 d m)` for `m = 1..=M`.
pub fn scan_coefficients<T: Real>(geom: &RisGeometry<T>) -> Vec<Complex<T>> {
    steering(geom.m, geom.dx_over_lambda, geom.u0)
}

fn steering<T: Real>(m: usize, d: T, u: T) -> Vec<Complex<T>> {
    (1..=m)
        .map(|i| Complex::from_polar(T::one(), T::TAU() * u * d * T::from_count(i)))
        .collect()
}

/// Normalized pattern `sin(M pi d x) / (M sin(pi d x))`, `x = u - u0`.
pub fn array_factor<T: Real>(geom: &RisGeometry<T>, u: T) -> T {
    let mf = T::from_count(geom.m);
    let psi = T::PI() * geom.dx_over_lambda * (u - geom.u0);
    let den = psi.sin();
    if den.abs() >= T::lit(SINGULAR_SIN) {
        return (mf * psi).sin() / (mf * den);
    }
    // Near psi = k pi: F ~ (-1)^{k(M-1)} (1 - (M^2 - 1) eps^2 / 6).
    let k = (psi / T::PI()).round();
    let eps = psi - k * T::PI();
    let odd = (k.abs().to_u64().unwrap_or(0) % 2 == 1) && geom.m % 2 == 0;
    let sign = if odd { -T::one() } else { T::one() };
    sign * (T::one() - (mf * mf - T::one()) * eps * eps / T::lit(6.0))
}

/// Full-diversity half-width around the scan direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Beamwidth<T> {
    /// `arcsin(1 / (4 M d))`, radians.
    pub exact: T,
    /// `0.25 / (M d)`, radians.
    pub approximate: T,
}

/// Largest `theta` with `M 2 pi sin(theta) d <= pi/2`. When the aperture is
/// so small that every direction qualifies the exact form is clamped to
/// `pi/2` and flagged.
pub fn full_diversity_beamwidth<T: Real>(geom: &RisGeometry<T>) -> Flagged<Beamwidth<T>> {
    let arg = T::one() / (T::lit(4.0) * T::from_count(geom.m) * geom.dx_over_lambda);
    let too_small = arg > T::one();
    let exact = if too_small { T::FRAC_PI_2() } else { arg.asin() };
    Flagged::warn_if(
        Beamwidth {
            exact,
            approximate: arg,
        },
        too_small,
        Warning::GeometryTooSmall,
    )
}

/// Phase-shift hardware resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseShift {
    Continuous,
    Discrete,
}

/// Channel-state knowledge at the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Csi {
    Perfect,
    Partial,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentCategory {
    Perfect,
    Coherent,
    Random,
    Destructive,
}

/// Category reached by a given phase-shift resolution and CSI level.
pub fn classify_alignment(phase_shift: PhaseShift, csi: Csi) -> AlignmentCategory {
    match (phase_shift, csi) {
        (_, Csi::None) => AlignmentCategory::Random,
        (PhaseShift::Continuous, Csi::Perfect) => AlignmentCategory::Perfect,
        _ => AlignmentCategory::Coherent,
    }
}

/// `Delta theta_m = 2 pi m d (u - u0)`: residual phase of branch `m` seen
/// from direction `u`.
pub fn branch_phase_offsets<T: Real>(geom: &RisGeometry<T>, u: T) -> Result<Vec<T>> {
    check_sine(u)?;
    let step = T::TAU() * geom.dx_over_lambda * (u - geom.u0);
    Ok((1..=geom.m).map(|i| step * T::from_count(i)).collect())
}

/// `M 2 pi d |u - u0|`, the phase span compared against `pi/2`.
pub fn aperture_phase_span<T: Real>(geom: &RisGeometry<T>, u: T) -> T {
    T::from_count(geom.m) * T::TAU() * geom.dx_over_lambda * (u - geom.u0).abs()
}

/// Monte Carlo outage of a perfectly scanned surface seen from each angle in
/// `angles_deg`. All angles share one random stream.
pub fn off_target_outage<T: Real>(
    geom: &RisGeometry<T>,
    dist: &BranchDistribution<T>,
    angles_deg: &[T],
    grid: &SnrGrid<T>,
    trials: u64,
    stream: &RandomStream,
) -> Result<Vec<(T, OutageCurve<T>)>> {
    angles_deg
        .iter()
        .map(|&deg| {
            let model = geom.alignment_towards(deg.to_radians().sin())?;
            Ok((deg, mc_outage_curve(&model, dist, geom.m, grid, trials, stream)?))
        })
        .collect()
}

/// Beam weights on the orthogonal grid `u_i = i / (M d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoodwardConfig<T> {
    /// `(i, alpha_i)` pairs.
    pub beams: Vec<(i64, Complex<T>)>,
}

impl<T: Real> WoodwardConfig<T> {
    /// Beam direction `u_i`.
    pub fn direction(geom: &RisGeometry<T>, i: i64) -> T {
        T::lit(i as f64) / (T::from_count(geom.m) * geom.dx_over_lambda)
    }

    /// Unit weights on beams `first..=last`, each rotated by
    /// `exp(-j pi d (M+1) u_i)` so adjacent beams add in phase between grid
    /// points rather than cancelling.
    pub fn flat_top(geom: &RisGeometry<T>, first: i64, last: i64) -> Self {
        let k = T::PI() * geom.dx_over_lambda * T::from_count(geom.m + 1);
        let beams = (first..=last)
            .map(|i| (i, Complex::from_polar(T::one(), -k * Self::direction(geom, i))))
            .collect();
        Self { beams }
    }
}

/// Woodward-synthesized element coefficients and their pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WoodwardSynthesis<T> {
    pub m: usize,
    pub dx_over_lambda: T,
    /// `c'_m = sum_i alpha_i exp(2 pi j u_i d m)`.
    pub coefficients: Vec<Complex<T>>,
}

impl<T: Real> WoodwardSynthesis<T> {
    /// `(1/M) sum_m c'_m exp(-2 pi j u d m)`, by direct summation.
    pub fn pattern(&self, u: T) -> Complex<T> {
        let mf = T::from_count(self.m);
        let sum = self
            .coefficients
            .iter()
            .enumerate()
            .fold(Complex::new(T::zero(), T::zero()), |acc, (i, c)| {
                acc + c * Complex::from_polar(T::one(), -T::TAU() * u * self.dx_over_lambda * T::from_count(i + 1))
            });
        sum / mf
    }

    /// Width in degrees of the region around the pattern peak where the
    /// magnitude stays within 3 dB of it, sampled at `points` angles.
    pub fn three_db_width_deg(&self, points: usize) -> T {
        let thetas: Vec<T> = (0..points)
            .map(|i| -T::FRAC_PI_2() + T::PI() * T::from_count(i) / T::from_count(points - 1))
            .collect();
        let mags: Vec<T> = thetas.iter().map(|t| self.pattern(t.sin()).norm()).collect();
        let (peak_i, peak) = mags
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        let level = peak / T::SQRT_2();
        let mut lo = peak_i;
        while lo > 0 && mags[lo - 1] >= level {
            lo -= 1;
        }
        let mut hi = peak_i;
        while hi + 1 < points && mags[hi + 1] >= level {
            hi += 1;
        }
        (thetas[hi] - thetas[lo]).to_degrees()
    }
}

pub fn woodward_coefficients<T: Real>(geom: &RisGeometry<T>, config: &WoodwardConfig<T>) -> Result<WoodwardSynthesis<T>> {
    if geom.m % 2 == 0 {
        return Err(Error::Unsupported("the orthogonal beam grid is defined for odd M".into()));
    }
    let mut coefficients = vec![Complex::new(T::zero(), T::zero()); geom.m];
    for &(i, alpha) in &config.beams {
        let u = WoodwardConfig::direction(geom, i);
        check_sine(u)?;
        for (c, r) in coefficients.iter_mut().zip(steering(geom.m, geom.dx_over_lambda, u)) {
            *c = *c + alpha * r;
        }
    }
    Ok(WoodwardSynthesis {
        m: geom.m,
        dx_over_lambda: geom.dx_over_lambda,
        coefficients,
    })
}

/// Geometry and antenna parameters of a single reflected path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget<T> {
    /// Element dimensions, metres.
    pub px: T,
    pub py: T,
    /// Transmitter-RIS and RIS-receiver distances, metres.
    pub d1: T,
    pub d2: T,
    /// Element pattern directivity.
    pub directivity: T,
    pub gt: T,
    pub gr: T,
}

/// Per-element path gain and its `M^2`-scaled coherent combining value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathGain<T> {
    pub per_element: T,
    pub combined: T,
}

/// `PL = px^2 py^2 / (16 pi^2 d1^2 d2^2) D^2 Gt Gr` and `M^2 PL`.
pub fn path_loss_and_array_gain<T: Real>(budget: &LinkBudget<T>, m: usize) -> Result<PathGain<T>> {
    let b = budget;
    let fields = [b.px, b.py, b.d1, b.d2, b.directivity, b.gt, b.gr];
    if fields.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
        return Err(Error::domain("link budget fields must be positive"));
    }
    let sq = |v: T| v * v;
    let pl = sq(b.px) * sq(b.py) / (T::lit(16.0) * sq(T::PI()) * sq(b.d1) * sq(b.d2)) * sq(b.directivity) * b.gt * b.gr;
    let mf = T::from_count(m);
    Ok(PathGain {
        per_element: pl,
        combined: mf * mf * pl,
    })
}

/// Writes `u,F_linear,F_db` rows at `points` uniform directions in `[-1, 1]`.
pub fn write_pattern_csv<T: Real, W: Write>(
    out: &mut W,
    points: usize,
    metadata: &[(String, String)],
    f: impl Fn(T) -> T,
) -> io::Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "u,F_linear,F_db")?;
    let denom = points.saturating_sub(1).max(1);
    for i in 0..points {
        let u = T::lit(-1.0 + 2.0 * i as f64 / denom as f64);
        let v = f(u);
        let db = (T::lit(20.0) * v.abs().log10()).max(T::lit(PATTERN_DB_FLOOR));
        writeln!(out, "{u},{v:e},{db}")?;
    }
    Ok(())
}
