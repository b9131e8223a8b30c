//! Channel models for reconfigurable intelligent surfaces under different
//! phase-alignment regimes.
//!
//! The overall channel is `H = sum_m |h_m| e^{j theta_m}` over `M` reflected
//! branches. [`fading`] supplies the branch amplitudes, [`alignment`] the
//! phases, and [`outage`] estimates `P(|H| < sqrt(gamma_0/gamma_t))` by Monte
//! Carlo or in closed form. [`series`] derives the small-`|H|` density from
//! Laplace transforms, [`pattern`] covers array geometry, and
//! [`multiaccess`] computes multi-user power budgets.
//!
//! Most items are generic over the float type; the aliases below fix `f64`.

pub mod alignment;
pub mod error;
pub mod fading;
pub mod multiaccess;
pub mod outage;
pub mod pattern;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod special;

pub use alignment::{AlignmentKind, AlignmentModel, ChannelSample, RicianApprox, WindowConvention};
pub use error::{Error, Flagged, Result, Warning};
pub use fading::{BranchDistribution, FadingLaw};
pub use outage::{OutageCurve, OutagePoint, Provenance, SnrGrid};
pub use pattern::{LinkBudget, RisGeometry, WoodwardConfig};
pub use rng::RandomStream;
pub use scalar::{Real, SeriesScalar};
pub use series::{InversePowerSeries, MaclaurinSeries};

pub type DistributionF64 = BranchDistribution<f64>;
pub type AlignmentModelF64 = AlignmentModel<f64>;
pub type SnrGridF64 = SnrGrid<f64>;
pub type OutageCurveF64 = OutageCurve<f64>;
pub type RisGeometryF64 = RisGeometry<f64>;
pub type SeriesF64 = InversePowerSeries<f64>;
/// Exact rational coefficients, for Rayleigh branches with rational `b`.
pub type SeriesExact = InversePowerSeries<num_rational::BigRational>;
