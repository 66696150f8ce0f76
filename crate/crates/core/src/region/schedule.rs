//! State-dependent decoding order: the two-user optimal switching family and
//! the `λ/z` rule.

use crate::effcap::EffCapResult;
use crate::error::{Error, Result};
use crate::fading::{expect_split_2d, monte_carlo_mean, FadingModel, Method, QuadRule};
use crate::rates::SystemParams;

use super::timeshare::fixed_order_capacities;
use super::{SchedulingRule, SwitchCurve};
use crate::rates::DecodingOrder;

/// Switching curve of the optimal two-user rule for the constant `K`.
///
/// For `K ≥ 1`: `z2 = ((1+SNR₁z₁)K^{1/β} − 1)/SNR₂`. For `K < 1` the roles
/// swap: `z1 = ((1+SNR₂z₂)K^{−1/β} − 1)/SNR₁`. `K = ∞` and `K = 0` are the
/// fixed orders (1,2) and (2,1).
pub fn optimal_boundary_g(k: f64, snr1: f64, snr2: f64, beta: f64) -> Result<SwitchCurve> {
    if !(k >= 0.0) {
        return Err(Error::invalid("K", format!("K must be nonnegative, got {k}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("beta must be positive, got {beta}")));
    }
    if !(snr1 > 0.0 && snr2 > 0.0) {
        return Err(Error::invalid("snr", "SNR must be positive"));
    }
    if k >= 1.0 {
        let c = k.powf(1.0 / beta);
        if !c.is_finite() {
            return Ok(SwitchCurve::AlwaysFirst);
        }
        Ok(SwitchCurve::Z2OfZ1 { intercept: (c - 1.0) / snr2, slope: snr1 * c / snr2 })
    } else {
        let c = k.powf(-1.0 / beta);
        if !c.is_finite() {
            return Ok(SwitchCurve::AlwaysSecond);
        }
        Ok(SwitchCurve::Z1OfZ2 { intercept: (c - 1.0) / snr1, slope: snr2 * c / snr1 })
    }
}

/// Effective capacities (bits/s/Hz) of every user under `rule`.
///
/// Two-user switching rules under quadrature split the inner integral exactly
/// on the switching curve. Monte Carlo decides the order per sample and works
/// for any number of users.
pub fn scheduled_capacities(
    rule: &SchedulingRule,
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>> {
    params.validate()?;
    let m = params.users();
    if models.len() != m {
        return Err(Error::invalid("models", format!("{m} users but {} fading models", models.len())));
    }
    rule.validate(m)?;
    match rule {
        SchedulingRule::FixedOrder(order) => return fixed_order_capacities(order, params, models, method),
        SchedulingRule::TimeShare(parts) => return super::timeshare_capacities(parts, params, models, method),
        SchedulingRule::BoundaryK(_) => {
            if params.common_theta().is_none() {
                return Err(Error::invalid("theta", "optimal switching assumes a common QoS exponent"));
            }
        }
        SchedulingRule::LambdaRatio(_) => {}
    }
    match method {
        Method::Quadrature(quad) => {
            if m != 2 {
                return Err(Error::Unsupported(format!(
                    "state-dependent order with {m} users needs monte-carlo; quadrature covers two users"
                )));
            }
            let curve = match rule {
                SchedulingRule::BoundaryK(k) => optimal_boundary_g(*k, params.snr[0], params.snr[1], params.beta(0))?,
                SchedulingRule::LambdaRatio(l) => SwitchCurve::lambda_ratio(l[0], l[1]),
                _ => unreachable!("handled above"),
            };
            let mgf = curve_mgfs(&curve, params, models, quad)?;
            finish(&mgf, None, params, method)
        }
        Method::MonteCarlo { samples, seed } => {
            let beta = params.beta(0);
            let mut mgf = Vec::with_capacity(m);
            let mut se = Vec::with_capacity(m);
            for j in 0..m {
                let theta_tb = params.qos(j).theta_tb();
                let est = monte_carlo_mean(
                    |z| (-theta_tb * rule.normalized_service(z, &params.snr, beta)[j]).exp(),
                    models,
                    samples,
                    seed,
                )?;
                mgf.push(est.value);
                se.push(est.std_error);
            }
            finish(&mgf, Some(&se), params, method)
        }
    }
}

fn finish(mgf: &[f64], se: Option<&[Option<f64>]>, params: &SystemParams, method: Method) -> Result<Vec<EffCapResult>> {
    mgf.iter()
        .enumerate()
        .map(|(j, &phi)| EffCapResult::from_mgf(phi, se.and_then(|s| s[j]), &params.qos(j), &method))
        .collect()
}

/// `E{x_j^{-β_j}}` for both users under a two-user switching curve.
pub(crate) fn curve_mgfs(
    curve: &SwitchCurve,
    params: &SystemParams,
    models: &[FadingModel],
    rule: QuadRule,
) -> Result<[f64; 2]> {
    let (s1, s2) = (params.snr[0], params.snr[1]);
    let (b1, b2) = (params.beta(0), params.beta(1));
    // user 1 decoded first: interference from user 2
    let u1_first = move |z1: f64, z2: f64| (-b1 * (s1 * z1 / (1.0 + s2 * z2)).ln_1p()).exp();
    let u1_last = move |z1: f64, _z2: f64| (-b1 * (s1 * z1).ln_1p()).exp();
    let u2_last = move |_z1: f64, z2: f64| (-b2 * (s2 * z2).ln_1p()).exp();
    let u2_first = move |z1: f64, z2: f64| (-b2 * (s2 * z2 / (1.0 + s1 * z1)).ln_1p()).exp();
    match *curve {
        SwitchCurve::AlwaysFirst | SwitchCurve::AlwaysSecond => {
            let order = if matches!(curve, SwitchCurve::AlwaysFirst) {
                DecodingOrder::identity(2)
            } else {
                DecodingOrder::new(vec![1, 0])?
            };
            let caps = fixed_order_capacities(&order, params, models, Method::Quadrature(rule))?;
            Ok([0, 1].map(|j| (-caps[j].normalized * params.qos(j).theta_tb()).exp()))
        }
        SwitchCurve::Z2OfZ1 { intercept, slope } => {
            let g = move |z1: f64| intercept + slope * z1;
            let phi1 = expect_split_2d(&models[0], &models[1], rule, g, u1_first, u1_last)?;
            let phi2 = expect_split_2d(&models[0], &models[1], rule, g, u2_last, u2_first)?;
            Ok([phi1, phi2])
        }
        SwitchCurve::Z1OfZ2 { intercept, slope } => {
            // outer variable is z2; below the curve (small z1) user 2 goes first
            let h = move |z2: f64| intercept + slope * z2;
            let phi1 = expect_split_2d(&models[1], &models[0], rule, h, |x, y| u1_last(y, x), |x, y| u1_first(y, x))?;
            let phi2 = expect_split_2d(&models[1], &models[0], rule, h, |x, y| u2_first(y, x), |x, y| u2_last(y, x))?;
            Ok([phi1, phi2])
        }
    }
}

/// Residual of the stationarity condition together with the weights it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    /// `max |((1+SNR₁z₁)/(1+SNR₂z₂))^{−β} / K − 1|` along the curve.
    pub residual: f64,
    /// `λ₁ = φ₁/(φ₁ + Kφ₂)`.
    pub lambda1: f64,
    /// Per-user MGFs `φ₁, φ₂`.
    pub phi: [f64; 2],
}

/// Points sampled along the free coordinate when measuring the residual.
const RESIDUAL_GRID: usize = 201;
const RESIDUAL_SPAN: f64 = 20.0;

/// Relative stationarity residual of an arbitrary switching curve for `K`.
pub fn switch_curve_residual(curve: &SwitchCurve, k: f64, snr1: f64, snr2: f64, beta: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("K", format!("stationarity needs 0 < K < ∞, got {k}")));
    }
    let mut worst: f64 = 0.0;
    for i in 0..RESIDUAL_GRID {
        let t = RESIDUAL_SPAN * i as f64 / (RESIDUAL_GRID - 1) as f64;
        let (z1, z2) = match *curve {
            SwitchCurve::Z2OfZ1 { intercept, slope } => (t, intercept + slope * t),
            SwitchCurve::Z1OfZ2 { intercept, slope } => (intercept + slope * t, t),
            _ => return Err(Error::invalid("curve", "a fixed order has no stationarity curve")),
        };
        let ratio = (1.0 + snr1 * z1) / (1.0 + snr2 * z2);
        worst = worst.max((ratio.powf(-beta) / k - 1.0).abs());
    }
    Ok(worst)
}

/// Stationarity residual of the optimal curve for `K` and the implied `λ₁`.
pub fn stationarity_residual(k: f64, params: &SystemParams, models: &[FadingModel], rule: QuadRule) -> Result<Stationarity> {
    check_two_user(params, models)?;
    let (s1, s2, beta) = (params.snr[0], params.snr[1], params.beta(0));
    let curve = optimal_boundary_g(k, s1, s2, beta)?;
    let residual = switch_curve_residual(&curve, k, s1, s2, beta)?;
    let phi = curve_mgfs(&curve, params, models, rule)?;
    Ok(Stationarity { residual, lambda1: phi[0] / (phi[0] + k * phi[1]), phi })
}

fn check_two_user(params: &SystemParams, models: &[FadingModel]) -> Result<()> {
    params.validate()?;
    if params.users() != 2 || models.len() != 2 {
        return Err(Error::invalid("snr", "optimal switching is defined for two users"));
    }
    if params.common_theta().is_none() {
        return Err(Error::invalid("theta", "optimal switching assumes a common QoS exponent"));
    }
    Ok(())
}

/// Result of the fixed-point iteration `K = (1−λ₁)φ₁(K)/(λ₁φ₂(K))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub k: f64,
    pub iterations: usize,
}

/// Solves for the `K` whose curve is stationary for weight `λ₁` by damped
/// iteration on `ln K`, starting from `K₀`.
pub fn solve_k_for_lambda(
    lambda1: f64,
    params: &SystemParams,
    models: &[FadingModel],
    rule: QuadRule,
    k0: f64,
    damping: f64,
    tolerance: f64,
) -> Result<FixedPoint> {
    check_two_user(params, models)?;
    if !(lambda1 > 0.0 && lambda1 < 1.0) {
        return Err(Error::invalid("lambda", format!("lambda1 must lie in (0, 1), got {lambda1}")));
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::invalid("damping", format!("damping must lie in (0, 1], got {damping}")));
    }
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::invalid("K", format!("starting K must be positive, got {k0}")));
    }
    let (s1, s2, beta) = (params.snr[0], params.snr[1], params.beta(0));
    let weight = ((1.0 - lambda1) / lambda1).ln();
    let mut x = k0.ln();
    const MAX_ITER: usize = 500;
    for iter in 1..=MAX_ITER {
        let curve = optimal_boundary_g(x.exp(), s1, s2, beta)?;
        let phi = curve_mgfs(&curve, params, models, rule)?;
        let target = weight + phi[0].ln() - phi[1].ln();
        let step = damping * (target - x);
        x += step;
        if step.abs() < tolerance {
            return Ok(FixedPoint { k: x.exp(), iterations: iter });
        }
    }
    Err(Error::NotConverged { what: "fixed point for K", iterations: MAX_ITER, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::DecodingOrder;
    use approx::assert_relative_eq;

    const Q: Method = Method::Quadrature(QuadRule::Graded);

    fn fig2() -> (SystemParams, Vec<FadingModel>) {
        (SystemParams::with_defaults(vec![1.0, 1.0], vec![0.01, 0.01]).unwrap(), vec![FadingModel::rayleigh(); 2])
    }

    fn normalized(v: &[EffCapResult]) -> Vec<f64> {
        v.iter().map(|c| c.normalized).collect()
    }

    #[test]
    fn boundary_examples() {
        assert_eq!(
            optimal_boundary_g(1.0, 1.0, 1.0, 2.0).unwrap(),
            SwitchCurve::Z2OfZ1 { intercept: 0.0, slope: 1.0 }
        );
        let beta = 2.885;
        match optimal_boundary_g(2f64.powf(beta), 1.0, 1.0, beta).unwrap() {
            SwitchCurve::Z2OfZ1 { intercept, slope } => {
                assert_relative_eq!(intercept, 1.0, max_relative = 1e-14);
                assert_relative_eq!(slope, 2.0, max_relative = 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(optimal_boundary_g(f64::INFINITY, 1.0, 1.0, beta).unwrap(), SwitchCurve::AlwaysFirst);
        assert_eq!(optimal_boundary_g(0.0, 1.0, 1.0, beta).unwrap(), SwitchCurve::AlwaysSecond);
        assert!(matches!(optimal_boundary_g(0.5, 1.0, 1.0, beta).unwrap(), SwitchCurve::Z1OfZ2 { .. }));
        assert!(optimal_boundary_g(-1.0, 1.0, 1.0, beta).is_err());
    }

    #[test]
    fn symmetric_unit_k_orders_by_gain() {
        let curve = optimal_boundary_g(1.0, 1.0, 1.0, 2.885).unwrap();
        // the stronger user is decoded first
        assert!(curve.first_user_first(2.0, 1.0));
        assert!(!curve.first_user_first(1.0, 2.0));
        assert!(curve.first_user_first(1.0, 1.0));
    }

    #[test]
    fn extreme_k_reduces_to_fixed_orders() {
        let (params, models) = fig2();
        for (k, order) in [(f64::INFINITY, [1, 2]), (1e12, [1, 2]), (0.0, [2, 1]), (1e-12, [2, 1])] {
            let sched = normalized(&scheduled_capacities(&SchedulingRule::BoundaryK(k), &params, &models, Q).unwrap());
            let fixed = normalized(
                &fixed_order_capacities(&DecodingOrder::from_one_based(&order).unwrap(), &params, &models, Q).unwrap(),
            );
            for j in 0..2 {
                assert_relative_eq!(sched[j], fixed[j], max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn unit_k_matches_monte_carlo_oracle() {
        // independent oracle: 1e7 samples with a per-sample order decision
        let (params, models) = fig2();
        let c = normalized(&scheduled_capacities(&SchedulingRule::BoundaryK(1.0), &params, &models, Q).unwrap());
        let oracle = [(0.542_036_831_225_223_8, 0.000_119_143), (0.542_238_370_402_077_9, 0.000_119_177)];
        for j in 0..2 {
            assert!((c[j] - oracle[j].0).abs() <= 3.0 * oracle[j].1, "user {j}: {} vs {:?}", c[j], oracle[j]);
        }
        assert_relative_eq!(c[0], c[1], max_relative = 1e-10);
    }

    #[test]
    fn quadrature_and_sampling_agree_off_symmetry() {
        let params = SystemParams::with_defaults(vec![10.0, 1.0], vec![0.01, 0.01]).unwrap();
        let models = vec![FadingModel::rayleigh(); 2];
        for rule in [SchedulingRule::BoundaryK(3.0), SchedulingRule::BoundaryK(0.2), SchedulingRule::LambdaRatio(vec![0.3, 0.7])] {
            let q = normalized(&scheduled_capacities(&rule, &params, &models, Q).unwrap());
            let mc = scheduled_capacities(&rule, &params, &models, Method::monte_carlo(400_000, 11)).unwrap();
            for j in 0..2 {
                let se = mc[j].std_error.unwrap();
                assert!((q[j] - mc[j].normalized).abs() <= 4.0 * se, "{rule:?} user {j}: {} vs {} ± {se}", q[j], mc[j].normalized);
            }
        }
    }

    #[test]
    fn stationarity_identity_holds_on_exact_curve() {
        let (params, models) = fig2();
        for k in [0.05, 0.5, 1.0, 2.0, 1e3] {
            let st = stationarity_residual(k, &params, &models, QuadRule::Graded).unwrap();
            assert!(st.residual <= 1e-12, "K={k}: {}", st.residual);
        }
        let st = stationarity_residual(1.0, &params, &models, QuadRule::Graded).unwrap();
        assert_relative_eq!(st.lambda1, 0.5, max_relative = 1e-10);
        let beta = params.beta(0);
        let perturbed = match optimal_boundary_g(2.0, 1.0, 1.0, beta).unwrap() {
            SwitchCurve::Z2OfZ1 { intercept, slope } => SwitchCurve::Z2OfZ1 { intercept: intercept + 0.01, slope },
            other => panic!("unexpected {other:?}"),
        };
        assert!(switch_curve_residual(&perturbed, 2.0, 1.0, 1.0, beta).unwrap() > 1e-4);
    }

    #[test]
    fn fixed_point_recovers_swept_k() {
        let params = SystemParams::with_defaults(vec![10.0, 1.0], vec![0.01, 0.01]).unwrap();
        let models = vec![FadingModel::rayleigh(); 2];
        for k in [0.3, 4.0] {
            let st = stationarity_residual(k, &params, &models, QuadRule::Graded).unwrap();
            let fp = solve_k_for_lambda(st.lambda1, &params, &models, QuadRule::Graded, 1.0, 1.0, 1e-10).unwrap();
            assert_relative_eq!(fp.k, k, max_relative = 1e-6);
        }
    }
}
