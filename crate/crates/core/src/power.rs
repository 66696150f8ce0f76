//! QoS-driven power control under a fixed decoding order.
//!
//! For a fixed order the weighted problem separates into one problem per
//! user, solved from the last-decoded user backwards. User `j` minimizes
//! `E{(1 + μ_j z_j/(1+I_j))^{-β_j}} + κ_j E{μ_j}`; with `x = z_j/(1+I_j)` the
//! pointwise minimizer is
//!
//! `μ_j = ((x/α_j)^{1/(β_j+1)} − 1) / x` for `x > α_j`, else `0`,
//!
//! where `κ_j = β_j α_j`. The thresholds `α_j` are calibrated so that every
//! average power constraint `E{μ_j} = SNR_j` binds.

use crate::effcap::EffCapResult;
use crate::error::{Error, Result};
use crate::fading::{map_samples, monte_carlo_mean, FadingModel, Method, QuadRule};
use crate::rates::{DecodingOrder, SystemParams};
use crate::solve::find_root;

/// Calibration bracket for every threshold.
pub const ALPHA_BRACKET: (f64, f64) = (1e-12, 1e12);
/// Default relative tolerance on the average-power constraints.
pub const DEFAULT_POWER_TOLERANCE: f64 = 1e-8;

/// Threshold power policy for one decoding order.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPolicy {
    pub order: DecodingOrder,
    /// Per-user thresholds `α_j > 0`, indexed by user.
    pub alpha: Vec<f64>,
    /// Per-user normalized QoS exponents `β_j`.
    pub beta: Vec<f64>,
}

impl PowerPolicy {
    pub fn new(order: DecodingOrder, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let m = order.users();
        if alpha.len() != m || beta.len() != m {
            return Err(Error::invalid("alpha", format!("need {m} thresholds and exponents")));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("alpha", format!("thresholds must be positive, got {a}")));
        }
        if let Some(b) = beta.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::invalid("beta", format!("exponents must be positive, got {b}")));
        }
        Ok(Self { order, alpha, beta })
    }

    /// Lagrange multiplier of user `j`'s power constraint, `β_j α_j`.
    pub fn kappa(&self, user: usize) -> f64 {
        self.beta[user] * self.alpha[user]
    }
}

/// Allocated SNR of one user given its gain and the interference from users
/// decoded after it.
pub fn user_mu(z: f64, interference: f64, alpha: f64, beta: f64) -> f64 {
    if !(z > 0.0) {
        return 0.0;
    }
    let noise = 1.0 + interference;
    let x = z / noise;
    if x <= alpha {
        return 0.0;
    }
    // (x/α)^{1/(β+1)} − 1 without cancellation near the threshold
    ((x / alpha).ln() / (beta + 1.0)).exp_m1() / x
}

/// Allocated SNR of every user in state `z`, evaluated from the last-decoded
/// user backwards so that each interference term is known.
pub fn policy_mu(z: &[f64], policy: &PowerPolicy) -> Vec<f64> {
    let mut mu = vec![0.0; z.len()];
    let mut interference = 0.0;
    for &u in policy.order.as_slice().iter().rev() {
        mu[u] = user_mu(z[u], interference, policy.alpha[u], policy.beta[u]);
        interference += mu[u] * z[u];
    }
    mu
}

/// Two-user policy for order (2,1) (user 1 decoded last) in explicit branch
/// form. Returns `(μ₁, μ₂)`.
pub fn two_user_policy(z1: f64, z2: f64, alphas: [f64; 2], betas: [f64; 2]) -> (f64, f64) {
    let [a1, a2] = alphas;
    let [b1, b2] = betas;
    if z1 <= a1 {
        // user 1 silent: user 2 sees no interference
        let mu2 = if z2 > a2 { (z2 / a2).powf(1.0 / (b2 + 1.0)) / z2 - 1.0 / z2 } else { 0.0 };
        return (0.0, mu2);
    }
    let mu1 = (z1 / a1).powf(1.0 / (b1 + 1.0)) / z1 - 1.0 / z1;
    // 1 + μ₁z₁ = (z₁/α₁)^{1/(β₁+1)}
    let noise = (z1 / a1).powf(1.0 / (b1 + 1.0));
    let mu2 = if z2 / a2 > noise {
        noise.powf(b2 / (b2 + 1.0)) / (a2.powf(1.0 / (b2 + 1.0)) * z2.powf(b2 / (b2 + 1.0))) - noise / z2
    } else {
        0.0
    };
    (mu1, mu2)
}

fn check(params: &SystemParams, models: &[FadingModel], order: &DecodingOrder) -> Result<()> {
    params.validate()?;
    if models.len() != params.users() || order.users() != params.users() {
        return Err(Error::invalid("models", "order, models and SNR list must cover the same users"));
    }
    Ok(())
}

/// `E{f(μ_j, x_j)}` for user `j`, where `x_j = z_j/(1+I_j)`, by nested
/// quadrature over `j` and the users decoded after it. Every level is split
/// at its own power-on threshold, and `f(0, x)` is used below it.
fn nested_expectation<F>(policy: &PowerPolicy, models: &[FadingModel], user: usize, rule: QuadRule, f: &F) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let later: Vec<usize> = policy.order.decoded_after(user).iter().rev().copied().collect();
    nested_level(policy, models, user, &later, 0.0, rule, f)
}

fn nested_level<F>(
    policy: &PowerPolicy,
    models: &[FadingModel],
    user: usize,
    later: &[usize],
    interference: f64,
    rule: QuadRule,
    f: &F,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let noise = 1.0 + interference;
    match later.split_first() {
        None => {
            let (a, b) = (policy.alpha[user], policy.beta[user]);
            let on = a * noise;
            let off = models[user].integrate(0.0, on, rule, |z| Ok(f(0.0, z / noise)))?;
            let active = models[user].integrate(on, f64::INFINITY, rule, |z| Ok(f(user_mu(z, interference, a, b), z / noise)))?;
            Ok(off + active)
        }
        Some((&u, rest)) => {
            let (a, b) = (policy.alpha[u], policy.beta[u]);
            let on = a * noise;
            let off = models[u].integrate(0.0, on, rule, |_| nested_level(policy, models, user, rest, interference, rule, f))?;
            let active = models[u].integrate(on, f64::INFINITY, rule, |z| {
                let extra = user_mu(z, interference, a, b) * z;
                nested_level(policy, models, user, rest, interference + extra, rule, f).map_err(|e| e.at_outer(z))
            })?;
            Ok(off + active)
        }
    }
}

/// Largest number of jointly integrated users for quadrature calibration.
const MAX_NESTED_USERS: usize = 2;

/// Average allocated SNR `E{μ_j}` of every user under `policy`.
pub fn average_power(policy: &PowerPolicy, models: &[FadingModel], method: Method) -> Result<Vec<f64>> {
    let m = policy.order.users();
    match method {
        Method::Quadrature(rule) => (0..m)
            .map(|j| {
                check_depth(policy, j)?;
                nested_expectation(policy, models, j, rule, &|mu, _| mu)
            })
            .collect(),
        Method::MonteCarlo { samples, seed } => (0..m)
            .map(|j| Ok(monte_carlo_mean(|z| policy_mu(z, policy)[j], models, samples, seed)?.value))
            .collect(),
    }
}

fn check_depth(policy: &PowerPolicy, user: usize) -> Result<()> {
    let depth = 1 + policy.order.decoded_after(user).len();
    if depth > MAX_NESTED_USERS {
        return Err(Error::Unsupported(format!(
            "quadrature over {depth} users is too costly for calibration; use monte-carlo"
        )));
    }
    Ok(())
}

/// Calibrates the thresholds so that `E{μ_j} = SNR_j` within the relative
/// `tolerance`, from the last-decoded user backwards. Monte Carlo reuses one
/// fixed sample set so the constraint map stays monotone.
pub fn calibrate(
    order: &DecodingOrder,
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
    tolerance: f64,
) -> Result<PowerPolicy> {
    check(params, models, order)?;
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "calibration tolerance must be positive"));
    }
    let m = params.users();
    let beta: Vec<f64> = (0..m).map(|j| params.beta(j)).collect();
    let mut policy = PowerPolicy::new(order.clone(), vec![1.0; m], beta)?;
    let samples = match method {
        Method::MonteCarlo { samples, seed } => Some(map_samples(models, seed, samples, |z| z.to_vec())),
        Method::Quadrature(_) => None,
    };
    for &u in order.as_slice().iter().rev() {
        let target = params.snr[u];
        let power_at = |log_alpha: f64, policy: &mut PowerPolicy| -> Result<f64> {
            policy.alpha[u] = log_alpha.exp();
            match (&samples, method) {
                (Some(zs), _) => Ok(zs.iter().map(|z| policy_mu(z, policy)[u]).sum::<f64>() / zs.len() as f64),
                (None, Method::Quadrature(rule)) => {
                    check_depth(policy, u)?;
                    nested_expectation(policy, models, u, rule, &|mu, _| mu)
                }
                (None, Method::MonteCarlo { .. }) => unreachable!("samples drawn above"),
            }
        };
        let (lo, hi) = (ALPHA_BRACKET.0.ln(), ALPHA_BRACKET.1.ln());
        let p_lo = power_at(lo, &mut policy)?;
        let p_hi = power_at(hi, &mut policy)?;
        if !(p_lo >= target && p_hi <= target) {
            return Err(Error::BracketFailure { user: u + 1, lo: ALPHA_BRACKET.0, hi: ALPHA_BRACKET.1, target });
        }
        let mut work = policy.clone();
        let log_alpha = find_root(
            |x| Ok((power_at(x, &mut work)? / target).ln()),
            lo,
            hi,
            1e-13,
            "power threshold",
        )?;
        let achieved = power_at(log_alpha, &mut policy)?;
        let error = (achieved - target).abs() / target;
        if error > tolerance {
            return Err(Error::NotConverged { what: "power calibration", iterations: 200, residual: error });
        }
    }
    Ok(policy)
}

/// Effective capacities (bits/s/Hz) at the decoding-order vertex under `policy`.
pub fn powered_vertex_capacities(
    policy: &PowerPolicy,
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>> {
    check(params, models, &policy.order)?;
    let m = params.users();
    match method {
        Method::Quadrature(rule) => (0..m)
            .map(|j| {
                let b = params.beta(j);
                check_depth(policy, j)?;
                let mgf = nested_expectation(policy, models, j, rule, &|mu, x| (-b * (mu * x).ln_1p()).exp())?;
                EffCapResult::from_mgf(mgf, None, &params.qos(j), &method)
            })
            .collect(),
        Method::MonteCarlo { .. } => powered_capacities(|z| policy_mu(z, policy), &policy.order, params, models, method),
    }
}

/// Effective capacities for an arbitrary power map `z ↦ μ(z)` with the fixed
/// decoding order `order`, by tensor quadrature or Monte Carlo.
pub fn powered_capacities<P>(
    power: P,
    order: &DecodingOrder,
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>>
where
    P: Fn(&[f64]) -> Vec<f64> + Sync,
{
    check(params, models, order)?;
    (0..params.users())
        .map(|j| {
            let qos = params.qos(j);
            let b = qos.bandwidth;
            crate::effcap::effective_capacity(
                |z| crate::rates::powered_rates(z, &power(z), order, b).map(|r| r[j]).unwrap_or(f64::NAN),
                models,
                &qos,
                method,
            )
        })
        .collect()
}
