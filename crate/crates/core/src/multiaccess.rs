//! Multi-user power budgets (NOMA, TDMA, FDMA) for static and dynamically
//! reconfigured surfaces, per-user NOMA outage, and the angular spacing that
//! guarantees a transposed decoding order.
//!
//! Powers are relative to unit noise unless `sigma_sq` says otherwise.
//! User indices are 0-based. NOMA users must be supplied strongest first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Flagged, Result, Warning};
use crate::fading::BranchDistribution;
use crate::outage::{analytic_outage_perfect_asymptotic, SnrGrid};
use crate::pattern::{array_factor, path_loss_and_array_gain, LinkBudget, RisGeometry};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserProfile<T> {
    /// Rate target, bits/s/Hz.
    pub rate: T,
    /// Channel magnitude `|H_k|`.
    pub channel: T,
}

impl<T: Real> UserProfile<T> {
    pub fn new(rate: T, channel: T) -> Result<Self> {
        if !(rate > T::zero() && rate.is_finite()) {
            return Err(Error::domain(format!("rate target must be positive, got {rate}")));
        }
        if !(channel >= T::zero() && channel.is_finite()) {
            return Err(Error::domain(format!("channel magnitude must be nonnegative, got {channel}")));
        }
        Ok(Self { rate, channel })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    NomaStatic,
    TdmaStatic,
    FdmaStatic,
    /// Hybrid NOMA with one surface configuration per slot.
    NomaDynamic,
    TdmaDynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMode {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerBudget<T> {
    pub scheme: Scheme,
    /// Per-user minimum power; for hybrid NOMA the sum over slots.
    pub powers: Vec<T>,
    /// Hybrid NOMA only: `slot_powers[t][k]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot_powers: Option<Vec<Vec<T>>>,
    /// Sum of `powers`.
    pub total: T,
    /// Radiated power below which the system is in outage: `total`, except
    /// static TDMA where each user transmits in one of `K` slots and the
    /// requirement is `total / K`.
    pub requirement: T,
}

impl<T: Real> PowerBudget<T> {
    fn new(scheme: Scheme, powers: Vec<T>, slot_powers: Option<Vec<Vec<T>>>) -> Self {
        let total: T = powers.iter().copied().sum();
        let requirement = match scheme {
            Scheme::TdmaStatic => total / T::from_count(powers.len()),
            _ => total,
        };
        Self {
            scheme,
            powers,
            slot_powers,
            total,
            requirement,
        }
    }

    /// System outage at radiated power `p_rad`.
    pub fn outage(&self, p_rad: T) -> bool {
        p_rad < self.requirement
    }
}

fn check_users<T: Real>(users: &[UserProfile<T>], sigma_sq: T) -> Result<()> {
    if users.is_empty() {
        return Err(Error::domain("at least one user required"));
    }
    if !(sigma_sq > T::zero() && sigma_sq.is_finite()) {
        return Err(Error::domain(format!("noise power must be positive, got {sigma_sq}")));
    }
    if let Some(k) = users.iter().position(|u| u.channel <= T::zero()) {
        return Err(Error::Infeasible(format!("user {k} has a zero channel; its minimum power is infinite")));
    }
    Ok(())
}

fn check_descending<T: Real>(channels: impl Iterator<Item = T>) -> Result<()> {
    let mut prev = T::infinity();
    for (k, h) in channels.enumerate() {
        if h > prev {
            return Err(Error::Ordering { index: k });
        }
        prev = h;
    }
    Ok(())
}

fn tau<T: Real>(rate: T) -> T {
    (rate * T::LN_2()).exp_m1()
}

/// `P_k = (2^{r_k} - 1) (sigma^2 / |H_k|^2 + sum_{i<k} P_i)` for
/// `(rate, channel)` pairs already in decoding order.
fn noma_recursion<T: Real>(pairs: impl Iterator<Item = (T, T)>, sigma_sq: T) -> Vec<T> {
    let mut acc = T::zero();
    pairs
        .map(|(rate, h)| {
            let p = tau(rate) * (sigma_sq / (h * h) + acc);
            acc = acc + p;
            p
        })
        .collect()
}

/// Static NOMA minimum powers; users must be ordered strongest first
/// (ties allowed). The order is verified, never changed.
pub fn noma_min_powers_static<T: Real>(users: &[UserProfile<T>], sigma_sq: T) -> Result<PowerBudget<T>> {
    check_users(users, sigma_sq)?;
    check_descending(users.iter().map(|u| u.channel))?;
    let powers = noma_recursion(users.iter().map(|u| (u.rate, u.channel)), sigma_sq);
    Ok(PowerBudget::new(Scheme::NomaStatic, powers, None))
}

/// TDMA slot powers `(2^{K r_k} - 1) sigma^2 / |H_k|^2`. In dynamic mode the
/// channels are those of each user's own slot configuration.
pub fn tdma_min_powers<T: Real>(users: &[UserProfile<T>], sigma_sq: T, mode: SurfaceMode) -> Result<PowerBudget<T>> {
    check_users(users, sigma_sq)?;
    let k = T::from_count(users.len());
    let powers = users
        .iter()
        .map(|u| tau(k * u.rate) * sigma_sq / (u.channel * u.channel))
        .collect();
    let scheme = match mode {
        SurfaceMode::Static => Scheme::TdmaStatic,
        SurfaceMode::Dynamic => Scheme::TdmaDynamic,
    };
    Ok(PowerBudget::new(scheme, powers, None))
}

/// FDMA powers `(2^{K r_k} - 1) sigma^2 / (K |H_k|^2)`, with each channel
/// measured at the user's own carrier.
pub fn fdma_min_powers<T: Real>(users: &[UserProfile<T>], sigma_sq: T) -> Result<PowerBudget<T>> {
    check_users(users, sigma_sq)?;
    let k = T::from_count(users.len());
    let powers = users
        .iter()
        .map(|u| tau(k * u.rate) * sigma_sq / (k * u.channel * u.channel))
        .collect();
    Ok(PowerBudget::new(Scheme::FdmaStatic, powers, None))
}

/// Hybrid NOMA over `K` slots, `channels[t][k] = |H(k, theta_t)|`. Each slot
/// runs the NOMA recursion with users decoded strongest first in that slot.
/// The per-slot exponent uses the full target `2^{r_k}`.
pub fn noma_hybrid_min_powers<T: Real>(rates: &[T], channels: &[Vec<T>], sigma_sq: T) -> Result<PowerBudget<T>> {
    let k = rates.len();
    if channels.len() != k {
        return Err(Error::Shape {
            expected: k,
            got: channels.len(),
        });
    }
    let mut slot_powers = Vec::with_capacity(k);
    for row in channels {
        if row.len() != k {
            return Err(Error::Shape {
                expected: k,
                got: row.len(),
            });
        }
        let users = rates
            .iter()
            .zip(row)
            .map(|(&r, &h)| UserProfile::new(r, h))
            .collect::<Result<Vec<_>>>()?;
        check_users(&users, sigma_sq)?;
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).expect("finite channels"));
        let sorted = noma_recursion(order.iter().map(|&i| (rates[i], row[i])), sigma_sq);
        let mut slot = vec![T::zero(); k];
        for (&i, p) in order.iter().zip(sorted) {
            slot[i] = p;
        }
        slot_powers.push(slot);
    }
    let powers = (0..k).map(|i| slot_powers.iter().map(|s| s[i]).sum()).collect();
    Ok(PowerBudget::new(Scheme::NomaDynamic, powers, Some(slot_powers)))
}

/// Per-user channel statistics for the closed-form NOMA outage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UserChannel<T> {
    /// User in the target direction: `M` perfectly aligned Rayleigh(b) branches.
    Perfect { m: usize, b: T },
    /// User off target: `M` randomly aligned branches.
    Random { m: usize, dist: BranchDistribution<T> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NomaUserOutage<T> {
    /// `mu_i` for `i >= k` (index `i - k`).
    pub mu: Vec<T>,
    pub mu_max: T,
    pub p_out: T,
}

/// `mu_i = tau_i / (a_i - tau_i sum_{l<i} a_l)` for `i >= k`, erroring on
/// the first index whose denominator is not positive.
pub fn noma_mu<T: Real>(allocation: &[T], rates: &[T], k: usize) -> Result<Vec<T>> {
    if allocation.len() != rates.len() {
        return Err(Error::Shape {
            expected: allocation.len(),
            got: rates.len(),
        });
    }
    if k >= allocation.len() {
        return Err(Error::domain(format!("user index {k} out of range")));
    }
    let mut prefix: T = allocation[..k].iter().copied().sum();
    let mut out = Vec::with_capacity(allocation.len() - k);
    for i in k..allocation.len() {
        let t = tau(rates[i]);
        let denom = allocation[i] - t * prefix;
        if denom <= T::zero() {
            return Err(Error::Infeasible(format!(
                "allocation infeasible at user {i}: a_i - tau_i * sum_(l<i) a_l = {denom} <= 0"
            )));
        }
        out.push(t / denom);
        prefix = prefix + allocation[i];
    }
    Ok(out)
}

/// Outage of NOMA user `k` at radiated power `p_rad`:
/// `P(|H_k|^2 < mu_max sigma^2 / p_rad)`, in the high-SNR asymptotic form
/// for perfect alignment and the exact Rayleigh form for random alignment.
pub fn noma_user_outage<T: Real>(
    allocation: &[T],
    rates: &[T],
    k: usize,
    channel: UserChannel<T>,
    sigma_sq: T,
    p_rad: T,
) -> Result<NomaUserOutage<T>> {
    let mu = noma_mu(allocation, rates, k)?;
    let mu_max = mu.iter().copied().fold(T::neg_infinity(), T::max);
    let gamma_0 = mu_max * sigma_sq;
    let p_out = match channel {
        UserChannel::Perfect { m, b } => analytic_outage_perfect_asymptotic(m, b, gamma_0, p_rad),
        UserChannel::Random { m, dist } => {
            let omega = T::from_count(m) * dist.moments().mean_square;
            -(-gamma_0 / (omega * p_rad)).exp_m1()
        }
    };
    Ok(NomaUserOutage { mu, mu_max, p_out })
}

/// SNR grid for Monte Carlo NOMA outage: threshold `mu_max sigma^2`,
/// abscissa the radiated power in dB.
pub fn noma_outage_grid<T: Real>(mu_max: T, sigma_sq: T, p_rad_db: Vec<T>) -> Result<SnrGrid<T>> {
    SnrGrid::new(p_rad_db, mu_max * sigma_sq)
}

/// Smallest angular separation between two users at distances `d1 > d2`
/// that transposes their decoding order:
/// `sin(dphi) >= sqrt(6 / (pi^2 (M^2 - 1)) (1/d)^2 (1 - (d2/d1)^beta))`.
pub fn min_angular_spacing<T: Real>(m: usize, d1: T, d2: T, dx_over_lambda: T, beta: T) -> Result<Flagged<T>> {
    if m < 2 {
        return Err(Error::domain("angular spacing needs at least 2 elements"));
    }
    if !(d2 > T::zero() && d1 > d2) {
        return Err(Error::domain(format!("need d1 > d2 > 0, got d1 = {d1}, d2 = {d2}")));
    }
    if !(dx_over_lambda > T::zero() && beta > T::zero()) {
        return Err(Error::domain("element pitch and path-loss exponent must be positive"));
    }
    let mf = T::from_count(m);
    let rhs = (T::lit(6.0) / (T::PI() * T::PI() * (mf * mf - T::one()))
        * (T::one() / dx_over_lambda).powi(2)
        * (T::one() - (d2 / d1).powf(beta)))
    .sqrt();
    let infeasible = rhs > T::one();
    let value = if infeasible { T::FRAC_PI_2() } else { rhs.asin() };
    Ok(Flagged::warn_if(value, infeasible, Warning::NoFeasibleSpacing))
}

/// One row of the spacing table: `(M, d1/d2, d)`.
pub const SPACING_TABLE: [(usize, f64, f64); 5] = [
    (5, 2.0, 0.5),
    (10, 2.0, 0.5),
    (10, 4.0, 0.5),
    (10, 2.0, 0.25),
    (15, 2.0, 0.5),
];

/// Default path-loss exponent for the spacing condition.
pub const DEFAULT_BETA: f64 = 2.0;

/// Line-of-sight magnitude of a user at `distance` and `angle` (radians)
/// when the surface is steered by `geom`: `sqrt(PL) M |F(sin angle)|`, with
/// `budget.d2` replaced by `distance`.
pub fn channel_from_geometry<T: Real>(geom: &RisGeometry<T>, budget: &LinkBudget<T>, distance: T, angle: T) -> Result<T> {
    let link = LinkBudget { d2: distance, ..*budget };
    let pl = path_loss_and_array_gain(&link, 1)?.per_element;
    Ok(pl.sqrt() * T::from_count(geom.m) * array_factor(geom, angle.sin()).abs())
}

/// JSON request for `ma-budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaRequest {
    pub scheme: Scheme,
    pub sigma_sq: f64,
    #[serde(rename = "P_rad", alias = "p_rad")]
    pub p_rad: f64,
    pub users: Vec<MaUser>,
    /// Hybrid NOMA: explicit `slots[t][k]` channel matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<Vec<f64>>>,
    /// Surface used to derive channels from `(distance, angle)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<RisGeometry<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkBudget<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaUser {
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaReport {
    pub budget: PowerBudget<f64>,
    pub p_rad: f64,
    pub outage: bool,
    /// Channels the budget was computed from (`[t][k]` for hybrid NOMA).
    pub channels: Vec<Vec<f64>>,
}

impl MaRequest {
    fn geometry_pair(&self) -> Result<(RisGeometry<f64>, LinkBudget<f64>)> {
        match (self.geometry, self.link) {
            (Some(g), Some(l)) => Ok((RisGeometry::new(g.m, g.dx_over_lambda, g.u0)?, l)),
            _ => Err(Error::domain("users given by distance and angle need both `geometry` and `link`")),
        }
    }

    fn placement(u: &MaUser, k: usize) -> Result<(f64, f64)> {
        match (u.distance, u.angle) {
            (Some(d), Some(a)) => Ok((d, a)),
            _ => Err(Error::domain(format!("user {k} needs `channel` or both `distance` and `angle`"))),
        }
    }

    /// Channel of user `k` with the surface steered as configured.
    fn static_channel(&self, k: usize) -> Result<f64> {
        let u = &self.users[k];
        if let Some(h) = u.channel {
            return Ok(h);
        }
        let (d, a) = Self::placement(u, k)?;
        let (g, l) = self.geometry_pair()?;
        channel_from_geometry(&g, &l, d, a)
    }

    /// `[t][k]`: channel of user `k` while the surface points at user `t`.
    fn slot_channels(&self) -> Result<Vec<Vec<f64>>> {
        if let Some(s) = &self.slots {
            return Ok(s.clone());
        }
        let (g, l) = self.geometry_pair()?;
        let placed = self
            .users
            .iter()
            .enumerate()
            .map(|(k, u)| Self::placement(u, k))
            .collect::<Result<Vec<_>>>()?;
        placed
            .iter()
            .map(|&(_, target)| {
                let steered = RisGeometry::new(g.m, g.dx_over_lambda, target.sin())?;
                placed
                    .iter()
                    .map(|&(d, a)| channel_from_geometry(&steered, &l, d, a))
                    .collect()
            })
            .collect()
    }

    pub fn evaluate(&self) -> Result<MaReport> {
        let rates: Vec<f64> = self.users.iter().map(|u| u.rate).collect();
        let (budget, channels) = match self.scheme {
            Scheme::NomaDynamic => {
                let ch = self.slot_channels()?;
                (noma_hybrid_min_powers(&rates, &ch, self.sigma_sq)?, ch)
            }
            Scheme::TdmaDynamic => {
                // Each user is served by the configuration aimed at it.
                let diag = match self.users.iter().map(|u| u.channel).collect::<Option<Vec<_>>>() {
                    Some(ch) if self.slots.is_none() => ch,
                    _ => {
                        let ch = self.slot_channels()?;
                        (0..rates.len())
                            .map(|k| ch.get(k).and_then(|row| row.get(k)).copied())
                            .collect::<Option<Vec<_>>>()
                            .ok_or(Error::Shape {
                                expected: rates.len(),
                                got: ch.len(),
                            })?
                    }
                };
                let users = profiles(&rates, &diag)?;
                (tdma_min_powers(&users, self.sigma_sq, SurfaceMode::Dynamic)?, vec![diag])
            }
            scheme => {
                let ch = (0..self.users.len()).map(|k| self.static_channel(k)).collect::<Result<Vec<_>>>()?;
                let users = profiles(&rates, &ch)?;
                let b = match scheme {
                    Scheme::NomaStatic => noma_min_powers_static(&users, self.sigma_sq)?,
                    Scheme::TdmaStatic => tdma_min_powers(&users, self.sigma_sq, SurfaceMode::Static)?,
                    _ => fdma_min_powers(&users, self.sigma_sq)?,
                };
                (b, vec![ch])
            }
        };
        Ok(MaReport {
            outage: budget.outage(self.p_rad),
            p_rad: self.p_rad,
            budget,
            channels,
        })
    }
}

fn profiles(rates: &[f64], channels: &[f64]) -> Result<Vec<UserProfile<f64>>> {
    rates.iter().zip(channels).map(|(&r, &h)| UserProfile::new(r, h)).collect()
}
