//! Per-branch small-scale fading amplitudes.
//!
//! Rayleigh branches are parameterised by `b` with density
//! `x/b * exp(-x^2 / 2b)`, i.e. `b` is the per-quadrature variance
//! (`b = sigma^2` in the common notation) and `E[h^2] = 2b`. Rician branches
//! share that scatter parameter and add a specular amplitude `s`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RandomStream, StreamRng};
use crate::scalar::Real;
use crate::special::{bessel_i0e, gamma_p_int, ln_factorial};

/// Raw distribution parameters, validated on conversion into
/// [`BranchDistribution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingLaw<T> {
    Rayleigh { b: T },
    Rician { s: T, b: T },
    Degenerate { c: T },
}

/// Amplitude law of one diversity branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FadingLaw<T>", into = "FadingLaw<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct BranchDistribution<T> {
    law: FadingLaw<T>,
}

/// First two raw moments of a branch amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchMoments<T> {
    /// `E[h]`
    pub mean: T,
    /// `E[h^2]`
    pub mean_square: T,
}

impl<T: Real> BranchMoments<T> {
    pub fn variance(&self) -> T {
        self.mean_square - self.mean * self.mean
    }
}

impl<T: Real> TryFrom<FadingLaw<T>> for BranchDistribution<T> {
    type Error = Error;

    fn try_from(law: FadingLaw<T>) -> Result<Self> {
        let ok = match law {
            FadingLaw::Rayleigh { b } => b > T::zero() && b.is_finite(),
            FadingLaw::Rician { s, b } => b > T::zero() && b.is_finite() && s >= T::zero() && s.is_finite(),
            FadingLaw::Degenerate { c } => c >= T::zero() && c.is_finite(),
        };
        if ok {
            Ok(Self { law })
        } else {
            Err(Error::domain(format!("invalid branch parameters {law:?}")))
        }
    }
}

impl<T> From<BranchDistribution<T>> for FadingLaw<T> {
    fn from(d: BranchDistribution<T>) -> Self {
        d.law
    }
}

impl<T: Real> BranchDistribution<T> {
    pub fn rayleigh(b: T) -> Result<Self> {
        FadingLaw::Rayleigh { b }.try_into()
    }

    pub fn rician(s: T, b: T) -> Result<Self> {
        FadingLaw::Rician { s, b }.try_into()
    }

    pub fn degenerate(c: T) -> Result<Self> {
        FadingLaw::Degenerate { c }.try_into()
    }

    pub fn law(&self) -> FadingLaw<T> {
        self.law
    }

    /// Scatter parameter `b`, if the law has one.
    pub fn scale(&self) -> Option<T> {
        match self.law {
            FadingLaw::Rayleigh { b } | FadingLaw::Rician { b, .. } => Some(b),
            FadingLaw::Degenerate { .. } => None,
        }
    }

    /// Rician K-factor `s^2 / 2b`; zero for Rayleigh.
    pub fn k_factor(&self) -> Option<T> {
        match self.law {
            FadingLaw::Rayleigh { .. } => Some(T::zero()),
            FadingLaw::Rician { s, b } => Some(s * s / (T::lit(2.0) * b)),
            FadingLaw::Degenerate { .. } => None,
        }
    }

    pub fn pdf(&self, x: T) -> Result<T> {
        if x < T::zero() || x.is_nan() {
            return Err(Error::domain(format!("pdf argument must be nonnegative, got {x}")));
        }
        let two = T::lit(2.0);
        match self.law {
            FadingLaw::Rayleigh { b } => Ok(x / b * (-x * x / (two * b)).exp()),
            FadingLaw::Rician { s, b } => {
                // e^{-(x^2+s^2)/2b} I0(xs/b) = e^{-(x-s)^2/2b} * [e^{-xs/b} I0(xs/b)]
                let d = x - s;
                Ok(x / b * (-d * d / (two * b)).exp() * bessel_i0e(x * s / b))
            }
            FadingLaw::Degenerate { .. } => Err(Error::Unsupported(
                "degenerate amplitude has no density".into(),
            )),
        }
    }

    pub fn cdf(&self, x: T) -> T {
        if x <= T::zero() {
            return match self.law {
                FadingLaw::Degenerate { c } if c <= x => T::one(),
                _ => T::zero(),
            };
        }
        let two = T::lit(2.0);
        match self.law {
            FadingLaw::Rayleigh { b } => -(-x * x / (two * b)).exp_m1(),
            FadingLaw::Rician { s, b } => rician_cdf(s, b, x),
            FadingLaw::Degenerate { c } => {
                if x >= c {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    pub fn moments(&self) -> BranchMoments<T> {
        let two = T::lit(2.0);
        match self.law {
            FadingLaw::Rayleigh { b } => BranchMoments {
                mean: (T::PI() * b / two).sqrt(),
                mean_square: two * b,
            },
            FadingLaw::Rician { s, b } => BranchMoments {
                mean: (T::PI() * b / two).sqrt() * crate::alignment::laguerre_half_unchecked(-s * s / (two * b)),
                mean_square: s * s + two * b,
            },
            FadingLaw::Degenerate { c } => BranchMoments {
                mean: c,
                mean_square: c * c,
            },
        }
    }

    /// One amplitude draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self.law {
            FadingLaw::Rayleigh { b } => {
                let u: f64 = rng.random();
                (T::lit(-2.0) * b * T::lit((-u).ln_1p())).sqrt()
            }
            FadingLaw::Rician { s, b } => {
                let sd = b.sqrt();
                let i = s + sd * T::lit(rng.sample::<f64, _>(StandardNormal));
                let q = sd * T::lit(rng.sample::<f64, _>(StandardNormal));
                i.hypot(q)
            }
            FadingLaw::Degenerate { c } => c,
        }
    }

    /// Draw conditioned on `h < x_max`; `mass` must be `self.cdf(x_max)`.
    ///
    /// Rayleigh uses the truncated inverse CDF; Rician uses rejection from
    /// the truncated Rayleigh law with the same `b`.
    /// Returns `None` when the conditioning event has zero probability.
    pub fn draw_truncated<R: Rng + ?Sized>(&self, rng: &mut R, x_max: T, mass: T) -> Option<T> {
        if mass <= T::zero() {
            return None;
        }
        match self.law {
            FadingLaw::Rayleigh { b } => {
                let u: f64 = rng.random();
                let v = T::lit(u) * mass;
                let h = (T::lit(-2.0) * b * (-v).ln_1p()).sqrt();
                Some(h.min(x_max))
            }
            FadingLaw::Rician { s, b } => {
                // Propose from the truncated Rayleigh(b) law and accept with
                // I0(hs/b) / I0(x_max s/b), the density ratio up to a constant.
                let proposal = Self { law: FadingLaw::Rayleigh { b } };
                let pmass = proposal.cdf(x_max);
                let ceiling = bessel_i0e(x_max * s / b);
                loop {
                    let h = proposal.draw_truncated(rng, x_max, pmass)?;
                    let ratio = bessel_i0e(h * s / b) * ((h - x_max) * s / b).exp() / ceiling;
                    let u: f64 = rng.random();
                    if T::lit(u) < ratio {
                        break Some(h);
                    }
                }
            }
            FadingLaw::Degenerate { c } => (c < x_max).then_some(c),
        }
    }

    /// `n` i.i.d. draws from the start of `stream`.
    pub fn sample(&self, n: usize, stream: &RandomStream) -> Vec<T> {
        let mut rng: StreamRng = stream.rng();
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

/// Rician CDF as a Poisson mixture of central chi-square CDFs:
/// `|h|^2 / b` is noncentral chi-square with 2 degrees of freedom and
/// noncentrality `s^2 / b`.
fn rician_cdf<T: Real>(s: T, b: T, x: T) -> T {
    let two = T::lit(2.0);
    let lam = s * s / (two * b);
    let z = x * x / (two * b);
    if lam == T::zero() {
        return -(-z).exp_m1();
    }
    // F = sum_j w_j P(j+1, z) with Poisson weights w_j = e^{-lam} lam^j / j!.
    // Beyond the mode both factors shrink, so stop once the weight is
    // negligible relative to the modal one.
    let mode = lam.floor().to_usize().unwrap_or(0);
    let mut hi = mode;
    let mut ratio = T::one();
    while ratio > T::epsilon() * T::lit(1e-3) && hi < mode + 1_000_000 {
        hi += 1;
        ratio = ratio * lam / T::from_count(hi);
    }
    // Walk down to j = 0 using P(j, z) = P(j+1, z) + e^{-z} z^j / j!, which
    // only adds positive terms, so small-z tails keep relative accuracy.
    let ln_fact = ln_factorial::<T>(hi);
    let jf = T::from_count(hi);
    let mut w = (jf * lam.ln() - lam - ln_fact).exp();
    let mut t = (jf * z.ln() - z - ln_fact).exp();
    let mut g = gamma_p_int(hi + 1, z);
    let mut total = T::zero();
    let mut j = hi;
    loop {
        total = total + w * g;
        if j == 0 {
            break;
        }
        g = g + t;
        let jf = T::from_count(j);
        t = t * jf / z;
        w = w * jf / lam;
        j -= 1;
    }
    total.min(T::one())
}
