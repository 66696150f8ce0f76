//! Instantaneous service rates of the multiple-access schemes and the ergodic
//! capacity-region membership test.

use std::f64::consts::LN_2;
use std::fmt;

use crate::effcap::QosSpec;
use crate::error::{Error, Result};
use crate::fading::{FadingModel, QuadRule};

/// System configuration shared by all users.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Frame duration `T` in seconds.
    pub frame_duration: f64,
    /// Bandwidth `B` in Hz.
    pub bandwidth: f64,
    /// Linear average SNR per user, `P̄_j / (N0 B)`.
    pub snr: Vec<f64>,
    /// QoS exponent per user, in 1/bit.
    pub theta: Vec<f64>,
}

/// Default frame duration (2 ms).
pub const DEFAULT_FRAME_DURATION: f64 = 2e-3;
/// Default bandwidth (100 kHz).
pub const DEFAULT_BANDWIDTH: f64 = 1e5;

impl SystemParams {
    pub fn new(frame_duration: f64, bandwidth: f64, snr: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let params = Self { frame_duration, bandwidth, snr, theta };
        params.validate()?;
        Ok(params)
    }

    /// Default `T` and `B` with the given per-user SNRs and exponents.
    pub fn with_defaults(snr: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        Self::new(DEFAULT_FRAME_DURATION, DEFAULT_BANDWIDTH, snr, theta)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.frame_duration) {
            return Err(Error::invalid("T", format!("frame duration must be positive, got {}", self.frame_duration)));
        }
        if !positive(self.bandwidth) {
            return Err(Error::invalid("B", format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if self.snr.is_empty() {
            return Err(Error::invalid("snr", "need at least one user"));
        }
        if self.snr.len() != self.theta.len() {
            return Err(Error::invalid(
                "theta",
                format!("{} SNR values but {} QoS exponents", self.snr.len(), self.theta.len()),
            ));
        }
        if let Some(v) = self.snr.iter().find(|v| !positive(**v)) {
            return Err(Error::invalid("snr", format!("SNR must be positive, got {v}")));
        }
        if let Some(v) = self.theta.iter().find(|v| !positive(**v)) {
            return Err(Error::invalid("theta", format!("QoS exponent must be positive, got {v}")));
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.snr.len()
    }

    /// Normalized QoS exponent `β_j = θ_j T B / ln 2`.
    pub fn beta(&self, user: usize) -> f64 {
        self.theta[user] * self.frame_duration * self.bandwidth / LN_2
    }

    pub fn qos(&self, user: usize) -> QosSpec {
        QosSpec { theta: self.theta[user], frame_duration: self.frame_duration, bandwidth: self.bandwidth }
    }

    /// The common exponent when all users share one `θ`.
    pub fn common_theta(&self) -> Option<f64> {
        let first = self.theta[0];
        self.theta.iter().all(|&t| t == first).then_some(first)
    }

    /// Same system with every user's exponent replaced by `theta`.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.frame_duration, self.bandwidth, self.snr.clone(), vec![theta; self.users()])
    }
}

/// Successive decoding order: `order[0]` is decoded first and sees
/// interference from every other user; the last user is interference-free.
/// Users are 0-based internally and printed 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecodingOrder(Vec<usize>);

impl DecodingOrder {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let m = order.len();
        let mut seen = vec![false; m];
        for &u in &order {
            if u >= m || seen[u] {
                return Err(Error::invalid("order", format!("{order:?} is not a permutation of 0..{m}")));
            }
            seen[u] = true;
        }
        if m == 0 {
            return Err(Error::invalid("order", "empty decoding order"));
        }
        Ok(Self(order))
    }

    /// Parses a 1-based order such as `[2, 1]`.
    pub fn from_one_based(order: &[usize]) -> Result<Self> {
        if order.contains(&0) {
            return Err(Error::invalid("order", "1-based user indices start at 1"));
        }
        Self::new(order.iter().map(|u| u - 1).collect())
    }

    /// Users decoded in index order `0, 1, ..., m-1`.
    pub fn identity(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Decoding position of `user` (0 = decoded first).
    pub fn position(&self, user: usize) -> usize {
        self.0.iter().position(|&u| u == user).expect("user in order")
    }

    /// Users decoded after `user`, i.e. the interferers `user` sees.
    pub fn decoded_after(&self, user: usize) -> &[usize] {
        &self.0[self.position(user) + 1..]
    }

    /// All `M!` orders in lexicographic order.
    pub fn all(m: usize) -> Vec<Self> {
        use itertools::Itertools;
        (0..m).permutations(m).map(Self).collect()
    }
}

impl fmt::Display for DecodingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.0.iter().map(|u| (u + 1).to_string()).collect();
        write!(f, "({})", labels.join(","))
    }
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Per-user rates (bits/s) at the successive-decoding vertex for `order`.
pub fn vertex_rates(z: &[f64], snr: &[f64], order: &DecodingOrder, bandwidth: f64) -> Vec<f64> {
    let mut rates = vec![0.0; z.len()];
    let mut interference = 0.0;
    for &u in order.as_slice().iter().rev() {
        let signal = snr[u] * z[u];
        rates[u] = bandwidth * log2_1p(signal / (1.0 + interference));
        interference += signal;
    }
    rates
}

/// Rates with per-state allocated SNR levels `μ(z)` in place of the averages.
pub fn powered_rates(z: &[f64], mu: &[f64], order: &DecodingOrder, bandwidth: f64) -> Result<Vec<f64>> {
    if let Some(v) = mu.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid("mu", format!("allocated SNR must be nonnegative, got {v}")));
    }
    Ok(vertex_rates(z, mu, order, bandwidth))
}

/// Burst rate of a TDMA user during its slot, with power boosted by `1/δ`.
pub fn tdma_rate(z: f64, snr: f64, delta: f64, bandwidth: f64) -> Result<f64> {
    check_fraction(delta)?;
    Ok(bandwidth * log2_1p(snr / delta * z))
}

pub(crate) fn check_fraction(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid("delta", format!("time fraction must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// Relative slack of the ergodic region membership test.
pub const REGION_SLACK: f64 = 1e-9;

/// `B E{log2(1 + Σ_{j∈S} SNR_j z_j)}` for a subset `S` of users.
///
/// Uses `ln(1+x) = ∫₀^∞ e^{-t}(1 - e^{-tx})/t dt`, which turns the `|S|`-dimensional
/// expectation into a one-dimensional integral of the product of Laplace
/// transforms `E{e^{-t SNR_j z_j}}`.
pub fn subset_sum_capacity(subset: &[usize], snr: &[f64], models: &[FadingModel], bandwidth: f64) -> Result<f64> {
    let rule = QuadRule::Graded;
    let unit = FadingModel::rayleigh();
    let log_laplace = |u: f64, model: &FadingModel| -> Result<f64> {
        match model {
            FadingModel::Rayleigh { mean_gain } => Ok(-(u * mean_gain).ln_1p()),
            other => Ok(other.integrate(0.0, f64::INFINITY, rule, |z| Ok((-u * z).exp()))?.ln()),
        }
    };
    let nats = unit.integrate(0.0, f64::INFINITY, rule, |t| {
        let mut sum = 0.0;
        for &j in subset {
            sum += log_laplace(t * snr[j], &models[j])?;
        }
        Ok(-sum.exp_m1() / t)
    })?;
    Ok(bandwidth * nats / LN_2)
}

/// Whether mean rates (bits/s) satisfy every subset constraint of the ergodic
/// capacity region.
pub fn in_ergodic_region(rates: &[f64], snr: &[f64], models: &[FadingModel], bandwidth: f64) -> Result<bool> {
    let m = rates.len();
    if m == 0 || m > 10 {
        return Err(Error::invalid("rates", format!("membership test supports 1..=10 users, got {m}")));
    }
    if snr.len() != m || models.len() != m {
        return Err(Error::invalid("snr", "rates, snr and models must have equal length"));
    }
    for mask in 1u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let bound = subset_sum_capacity(&subset, snr, models, bandwidth)?;
        let load: f64 = subset.iter().map(|&j| rates[j]).sum();
        if load > bound + REGION_SLACK * bound.max(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}
