//! Phase-alignment categories and composition of the overall channel
//! `H = sum_m |h_m| e^{j theta_m}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::BranchDistribution;
use crate::rng::RandomStream;
use crate::scalar::Real;
use crate::special::{bessel_i0e, bessel_i1e, sinc};

/// Phase model of the reflected branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlignmentKind<T> {
    /// Every branch arrives with phase `theta0`.
    Perfect { theta0: T },
    /// `theta0` plus an independent uniform error on `(-half_width, half_width)`.
    Coherent { theta0: T, half_width: T },
    /// Independent uniform phases on `(-pi, pi)`.
    Random,
    /// The degenerate channel `H = 0`.
    Destructive,
}

/// An alignment category plus optional deterministic per-branch offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentModel<T> {
    pub kind: AlignmentKind<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<T>>,
}

/// Which reading of the quantization level `L` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowConvention {
    /// Error uniform on `(-pi/L, pi/L)`.
    Section2,
    /// Error uniform on `(-pi/2L, pi/2L)`, the window behind the Rician
    /// shape factors.
    AppendixA,
}

/// Half-width of the phase-error window for quantization level `levels`.
pub fn quantization_to_half_width<T: Real>(levels: u32, convention: WindowConvention) -> Result<T> {
    if levels == 0 {
        return Err(Error::domain("quantization level must be at least 1"));
    }
    let l = T::lit(f64::from(levels));
    Ok(match convention {
        WindowConvention::Section2 => T::PI() / l,
        WindowConvention::AppendixA => T::PI() / (T::lit(2.0) * l),
    })
}

impl<T: Real> AlignmentModel<T> {
    pub fn perfect(theta0: T) -> Self {
        AlignmentKind::Perfect { theta0 }.into()
    }

    pub fn coherent(theta0: T, half_width: T) -> Result<Self> {
        if !(half_width > T::zero() && half_width <= T::PI()) {
            return Err(Error::domain(format!("coherent half-width must lie in (0, pi], got {half_width}")));
        }
        Ok(AlignmentKind::Coherent { theta0, half_width }.into())
    }

    /// Coherent model from a quantization level under an explicit convention.
    pub fn quantized(theta0: T, levels: u32, convention: WindowConvention) -> Result<Self> {
        Self::coherent(theta0, quantization_to_half_width(levels, convention)?)
    }

    pub fn random() -> Self {
        AlignmentKind::Random.into()
    }

    pub fn destructive() -> Self {
        AlignmentKind::Destructive.into()
    }

    /// Attaches deterministic per-branch phase offsets (radians).
    pub fn with_offsets(mut self, offsets: Vec<T>) -> Self {
        self.offsets = Some(offsets);
        self
    }

    /// Error half-width, zero for perfect alignment.
    pub fn half_width(&self) -> Option<T> {
        match self.kind {
            AlignmentKind::Perfect { .. } => Some(T::zero()),
            AlignmentKind::Coherent { half_width, .. } => Some(half_width),
            _ => None,
        }
    }

    fn check_branches(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::domain("branch count must be at least 1"));
        }
        match &self.offsets {
            Some(o) if o.len() != m => Err(Error::Shape {
                expected: m,
                got: o.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Prepares a sampler for `m` branches; fails on an offset length mismatch.
    pub fn sampler(&self, m: usize) -> Result<ChannelSampler<T>> {
        self.check_branches(m)?;
        let offset = |i: usize| self.offsets.as_ref().map_or(T::zero(), |o| o[i]);
        let phases = match self.kind {
            AlignmentKind::Perfect { theta0 } => PhaseLaw::Fixed((0..m).map(|i| unit(theta0 + offset(i))).collect()),
            AlignmentKind::Coherent { theta0, half_width } => PhaseLaw::Uniform {
                centres: (0..m).map(|i| theta0 + offset(i)).collect(),
                half_width,
            },
            AlignmentKind::Random => PhaseLaw::Uniform {
                centres: (0..m).map(offset).collect(),
                half_width: T::PI(),
            },
            AlignmentKind::Destructive => PhaseLaw::Zero,
        };
        Ok(ChannelSampler { branches: m, phases })
    }
}

impl<T> From<AlignmentKind<T>> for AlignmentModel<T> {
    fn from(kind: AlignmentKind<T>) -> Self {
        Self { kind, offsets: None }
    }
}

fn unit<T: Real>(theta: T) -> (T, T) {
    let (s, c) = theta.sin_cos();
    (c, s)
}

/// One realization of the composed channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSample<T> {
    pub real_part: T,
    pub imag_part: T,
    pub magnitude: T,
    pub phase: T,
}

impl<T: Real> ChannelSample<T> {
    pub fn from_parts(real_part: T, imag_part: T) -> Self {
        Self {
            real_part,
            imag_part,
            magnitude: real_part.hypot(imag_part),
            phase: imag_part.atan2(real_part),
        }
    }
}

/// `H = sum |h_m| e^{j theta_m}` by complex accumulation.
pub fn compose_channel<T: Real>(amplitudes: &[T], phases: &[T]) -> Result<ChannelSample<T>> {
    if amplitudes.len() != phases.len() {
        return Err(Error::Shape {
            expected: amplitudes.len(),
            got: phases.len(),
        });
    }
    let (re, im) = amplitudes.iter().zip(phases).fold((T::zero(), T::zero()), |(re, im), (&a, &p)| {
        let (s, c) = p.sin_cos();
        (re + a * c, im + a * s)
    });
    Ok(ChannelSample::from_parts(re, im))
}

#[derive(Debug, Clone)]
enum PhaseLaw<T> {
    Fixed(Vec<(T, T)>),
    Uniform { centres: Vec<T>, half_width: T },
    Zero,
}

/// Draws composed channels for a fixed model and branch count.
#[derive(Debug, Clone)]
pub struct ChannelSampler<T> {
    branches: usize,
    phases: PhaseLaw<T>,
}

impl<T: Real> ChannelSampler<T> {
    pub fn branches(&self) -> usize {
        self.branches
    }

    /// Draws one channel, taking branch amplitudes from `amplitude`.
    /// Each branch draws its amplitude before its phase.
    pub fn draw_with<R, F>(&self, rng: &mut R, mut amplitude: F) -> ChannelSample<T>
    where
        R: Rng + ?Sized,
        F: FnMut(&mut R) -> T,
    {
        let (mut re, mut im) = (T::zero(), T::zero());
        match &self.phases {
            PhaseLaw::Fixed(units) => {
                for &(c, s) in units {
                    let a = amplitude(rng);
                    re = re + a * c;
                    im = im + a * s;
                }
            }
            PhaseLaw::Uniform { centres, half_width } => {
                for &centre in centres {
                    let a = amplitude(rng);
                    let u: f64 = rng.random();
                    let theta = centre + *half_width * T::lit(2.0 * u - 1.0);
                    let (s, c) = theta.sin_cos();
                    re = re + a * c;
                    im = im + a * s;
                }
            }
            PhaseLaw::Zero => {}
        }
        ChannelSample::from_parts(re, im)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, dist: &BranchDistribution<T>) -> ChannelSample<T> {
        self.draw_with(rng, |r| dist.draw(r))
    }
}

/// One channel realization from the start of `stream`.
pub fn draw_channel<T: Real>(
    model: &AlignmentModel<T>,
    dist: &BranchDistribution<T>,
    m: usize,
    stream: &RandomStream,
) -> Result<ChannelSample<T>> {
    let sampler = model.sampler(m)?;
    Ok(sampler.draw(&mut stream.rng(), dist))
}

/// Mean and variance of `|H|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MagnitudeMoments<T> {
    pub mean: T,
    pub variance: T,
    /// For destructive alignment only: the tabulated variance
    /// `M (E[h^2] - E[h]^2)`, which describes the unconstrained phasor
    /// sum rather than the degenerate `|H| = 0` channel.
    pub tabulated_variance: Option<T>,
}

/// Closed-form moments of `|H|` for `m` branches.
///
/// Coherent alignment uses the Rician approximation at the model's
/// half-width. Deterministic offsets have no closed form and are rejected.
pub fn magnitude_moments<T: Real>(
    model: &AlignmentModel<T>,
    dist: &BranchDistribution<T>,
    m: usize,
) -> Result<MagnitudeMoments<T>> {
    if model.offsets.is_some() {
        return Err(Error::Unsupported("no closed-form moments with per-branch offsets".into()));
    }
    model.check_branches(m)?;
    let mf = T::from_count(m);
    let bm = dist.moments();
    let plain = |mean, variance| MagnitudeMoments {
        mean,
        variance,
        tabulated_variance: None,
    };
    Ok(match model.kind {
        AlignmentKind::Perfect { .. } => plain(mf * bm.mean, mf * bm.variance()),
        AlignmentKind::Coherent { half_width, .. } => {
            let r = rician_approx_half_width(dist, m, half_width);
            plain(r.mean(), r.variance())
        }
        AlignmentKind::Random => plain(
            (mf * T::PI() * bm.mean_square).sqrt() / T::lit(2.0),
            mf * bm.mean_square * (T::lit(4.0) - T::PI()) / T::lit(4.0),
        ),
        AlignmentKind::Destructive => MagnitudeMoments {
            mean: T::zero(),
            variance: T::zero(),
            tabulated_variance: Some(mf * bm.variance()),
        },
    })
}

/// Rician approximation of `|H|` under coherent alignment: `alpha` is the
/// specular amplitude, `beta_sq` the per-quadrature scatter variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicianApprox<T> {
    pub alpha: T,
    pub beta_sq: T,
}

impl<T: Real> RicianApprox<T> {
    /// `E[|H|] = sqrt(pi/2) beta L_{1/2}(-alpha^2 / 2 beta^2)`, or `alpha` when `beta = 0`.
    pub fn mean(&self) -> T {
        if self.beta_sq <= T::zero() {
            return self.alpha;
        }
        let x = -self.alpha * self.alpha / (T::lit(2.0) * self.beta_sq);
        (T::FRAC_PI_2() * self.beta_sq).sqrt() * laguerre_half_unchecked(x)
    }

    /// `alpha^2 + 2 beta^2 - E[|H|]^2`, clamped at zero.
    pub fn variance(&self) -> T {
        let mu = self.mean();
        (self.alpha * self.alpha + T::lit(2.0) * self.beta_sq - mu * mu).max(T::zero())
    }
}

/// Rician approximation for quantization level `levels`, using the window
/// `(-pi/2L, pi/2L)` that the shape factors are built on.
pub fn rician_approx<T: Real>(dist: &BranchDistribution<T>, m: usize, levels: u32) -> Result<RicianApprox<T>> {
    if m == 0 {
        return Err(Error::domain("branch count must be at least 1"));
    }
    let w = quantization_to_half_width(levels, WindowConvention::AppendixA)?;
    Ok(rician_approx_half_width(dist, m, w))
}

/// `alpha = M E[h] sinc(w)`, `beta^2 = (M/2) E[h^2] (1 - sinc(2w))`.
pub fn rician_approx_half_width<T: Real>(dist: &BranchDistribution<T>, m: usize, half_width: T) -> RicianApprox<T> {
    let mf = T::from_count(m);
    let bm = dist.moments();
    RicianApprox {
        alpha: mf * bm.mean * sinc(half_width),
        beta_sq: (mf / T::lit(2.0) * bm.mean_square * (T::one() - sinc(T::lit(2.0) * half_width))).max(T::zero()),
    }
}

/// Laguerre function `L_{1/2}(x)` for `x <= 0`.
pub fn laguerre_half<T: Real>(x: T) -> Result<T> {
    if x > T::zero() || x.is_nan() {
        return Err(Error::domain(format!("laguerre_half defined here for x <= 0, got {x}")));
    }
    Ok(laguerre_half_unchecked(x))
}

/// `e^{x/2} [(1-x) I0(-x/2) - x I1(-x/2)]`, written with scaled Bessel
/// functions so it stays finite for large `|x|`.
pub(crate) fn laguerre_half_unchecked<T: Real>(x: T) -> T {
    let h = -x / T::lit(2.0);
    (T::one() - x) * bessel_i0e(h) - x * bessel_i1e(h)
}
