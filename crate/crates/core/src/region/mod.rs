//! Throughput-region boundaries at fixed transmit power.
//!
//! Two-user order switching is described by a [`SwitchCurve`] in the gain
//! plane; every effective-capacity integral is split exactly on that curve.

mod boundary;
mod schedule;
mod timeshare;
mod trace;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rates::DecodingOrder;

pub use boundary::{BoundaryPoint, RegionBoundary, CONCAVITY_TOLERANCE};
pub use schedule::{
    optimal_boundary_g, scheduled_capacities, solve_k_for_lambda, stationarity_residual, switch_curve_residual,
    FixedPoint, Stationarity,
};
pub use timeshare::{fixed_order_capacities, tdma_capacities, timeshare_capacities};
pub use trace::{ray_radius, sum_rate_sweep, trace_region, SumRateRow, TraceOptions};

/// Rule selecting the decoding order in each fading state.
#[derive(Debug, Clone, PartialEq)]
pub enum SchedulingRule {
    /// One order for every state.
    FixedOrder(DecodingOrder),
    /// Per-frame time sharing: weight `τ_m` on each listed order.
    TimeShare(Vec<(DecodingOrder, f64)>),
    /// Two-user optimal switching family indexed by `K ∈ [0, ∞]`.
    BoundaryK(f64),
    /// Decode in ascending order of `λ_j / z_j`.
    LambdaRatio(Vec<f64>),
}

impl SchedulingRule {
    /// Time sharing over all `M!` orders in lexicographic order.
    pub fn time_share(users: usize, tau: &[f64]) -> Result<Self> {
        let orders = DecodingOrder::all(users);
        if tau.len() != orders.len() {
            return Err(Error::invalid(
                "tau",
                format!("{} users need {} time fractions, got {}", users, orders.len(), tau.len()),
            ));
        }
        let rule = SchedulingRule::TimeShare(orders.into_iter().zip(tau.iter().copied()).collect());
        rule.validate(users)?;
        Ok(rule)
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        match self {
            SchedulingRule::FixedOrder(order) => {
                if order.users() != users {
                    return Err(Error::invalid("order", format!("order has {} users, system has {users}", order.users())));
                }
            }
            SchedulingRule::TimeShare(parts) => {
                check_simplex("tau", parts.iter().map(|(_, t)| *t))?;
                if parts.iter().any(|(o, _)| o.users() != users) {
                    return Err(Error::invalid("tau", "every order must cover all users"));
                }
            }
            SchedulingRule::BoundaryK(k) => {
                if users != 2 {
                    return Err(Error::invalid("K", "boundary-K switching is defined for two users"));
                }
                if !(*k >= 0.0) {
                    return Err(Error::invalid("K", format!("K must be nonnegative, got {k}")));
                }
            }
            SchedulingRule::LambdaRatio(lambda) => {
                if lambda.len() != users {
                    return Err(Error::invalid("lambda", format!("need {users} weights, got {}", lambda.len())));
                }
                check_simplex("lambda", lambda.iter().copied())?;
            }
        }
        Ok(())
    }

    /// Decoding order used in state `z`. Time sharing has no single order.
    pub fn order_for_state(&self, z: &[f64], snr: &[f64], beta: f64) -> Option<DecodingOrder> {
        match self {
            SchedulingRule::FixedOrder(order) => Some(order.clone()),
            SchedulingRule::TimeShare(_) => None,
            SchedulingRule::BoundaryK(k) => {
                let curve = optimal_boundary_g(*k, snr[0], snr[1], beta).ok()?;
                Some(curve.order(z[0], z[1]))
            }
            SchedulingRule::LambdaRatio(lambda) => Some(lambda_ratio_order(lambda, z)),
        }
    }

    /// Per-user service in bits/s/Hz for one frame in state `z`.
    pub fn normalized_service(&self, z: &[f64], snr: &[f64], beta: f64) -> Vec<f64> {
        match self {
            SchedulingRule::TimeShare(parts) => {
                let mut total = vec![0.0; z.len()];
                for (order, tau) in parts {
                    if *tau > 0.0 {
                        for (t, r) in total.iter_mut().zip(crate::rates::vertex_rates(z, snr, order, 1.0)) {
                            *t += tau * r;
                        }
                    }
                }
                total
            }
            _ => {
                let order = self.order_for_state(z, snr, beta).expect("single-order rule");
                crate::rates::vertex_rates(z, snr, &order, 1.0)
            }
        }
    }
}

fn check_simplex(field: &'static str, weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::invalid(field, format!("weights must be nonnegative, got {w}")));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(field, format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Order sorted by `λ_j / z_j` ascending; ties keep the lower index first.
pub fn lambda_ratio_order(lambda: &[f64], z: &[f64]) -> DecodingOrder {
    let mut users: Vec<usize> = (0..lambda.len()).collect();
    // compare λ_a z_b with λ_b z_a to avoid dividing by a zero gain
    users.sort_by(|&a, &b| (lambda[a] * z[b]).total_cmp(&(lambda[b] * z[a])));
    DecodingOrder::new(users).expect("permutation of 0..M")
}

/// Two-user switching curve in the `(z1, z2)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwitchCurve {
    /// Order (1,2) in every state.
    AlwaysFirst,
    /// Order (2,1) in every state.
    AlwaysSecond,
    /// `z2 = intercept + slope·z1`; order (1,2) when `z2 ≤` the curve.
    Z2OfZ1 { intercept: f64, slope: f64 },
    /// `z1 = intercept + slope·z2`; order (1,2) when `z1 ≥` the curve.
    Z1OfZ2 { intercept: f64, slope: f64 },
}

impl SwitchCurve {
    /// Curve of the `λ/z` rule for weights `(λ1, λ2)`.
    pub fn lambda_ratio(lambda1: f64, lambda2: f64) -> Self {
        if lambda1 >= lambda2 {
            SwitchCurve::Z2OfZ1 { intercept: 0.0, slope: lambda2 / lambda1 }
        } else {
            SwitchCurve::Z1OfZ2 { intercept: 0.0, slope: lambda1 / lambda2 }
        }
    }

    /// Whether user 1 is decoded first in state `(z1, z2)`.
    pub fn first_user_first(&self, z1: f64, z2: f64) -> bool {
        match *self {
            SwitchCurve::AlwaysFirst => true,
            SwitchCurve::AlwaysSecond => false,
            SwitchCurve::Z2OfZ1 { intercept, slope } => z2 <= intercept + slope * z1,
            SwitchCurve::Z1OfZ2 { intercept, slope } => z1 >= intercept + slope * z2,
        }
    }

    pub fn order(&self, z1: f64, z2: f64) -> DecodingOrder {
        if self.first_user_first(z1, z2) {
            DecodingOrder::identity(2)
        } else {
            DecodingOrder::new(vec![1, 0]).expect("valid order")
        }
    }
}

/// Region-tracing strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Optimal,
    Suboptimal,
    FixedTimeShare,
    Tdma,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Optimal, Strategy::Suboptimal, Strategy::FixedTimeShare, Strategy::Tdma];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Optimal => "optimal",
            Strategy::Suboptimal => "suboptimal",
            Strategy::FixedTimeShare => "fixed-timeshare",
            Strategy::Tdma => "tdma",
        }
    }

    /// Name of the swept generator parameter.
    pub fn parameter_name(&self) -> &'static str {
        match self {
            Strategy::Optimal => "K",
            Strategy::Suboptimal => "lambda1",
            Strategy::FixedTimeShare => "tau",
            Strategy::Tdma => "delta1",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.label() == s.trim())
            .ok_or_else(|| {
                Error::invalid("strategy", format!("unknown strategy {s:?}; expected optimal, suboptimal, fixed-timeshare or tdma"))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_rule_decodes_heavy_weight_last() {
        let order = lambda_ratio_order(&[0.2, 0.5, 0.3], &[1.0, 1.0, 1.0]);
        assert_eq!(order.as_slice(), &[0, 2, 1]);
        // a zero gain pushes the user to the end
        let order = lambda_ratio_order(&[0.5, 0.5], &[0.0, 1.0]);
        assert_eq!(order.as_slice(), &[1, 0]);
        // ties go to (1,2)
        let order = lambda_ratio_order(&[0.5, 0.5], &[1.0, 1.0]);
        assert_eq!(order.as_slice(), &[0, 1]);
    }

    #[test]
    fn lambda_curve_matches_sorting_rule() {
        for (l1, l2) in [(0.3, 0.7), (0.7, 0.3), (0.5, 0.5), (0.0, 1.0), (1.0, 0.0)] {
            let curve = SwitchCurve::lambda_ratio(l1, l2);
            for &(z1, z2) in &[(0.1, 0.3), (2.0, 0.5), (1.0, 1.0), (0.7, 1.9)] {
                let by_sort = lambda_ratio_order(&[l1, l2], &[z1, z2]);
                assert_eq!(curve.order(z1, z2), by_sort, "λ=({l1},{l2}) z=({z1},{z2})");
            }
        }
    }

    #[test]
    fn rule_validation() {
        assert!(SchedulingRule::time_share(2, &[0.5, 0.5]).is_ok());
        assert!(SchedulingRule::time_share(2, &[0.5, 0.6]).is_err());
        assert!(SchedulingRule::time_share(3, &[0.5, 0.5]).is_err());
        assert!(SchedulingRule::BoundaryK(-1.0).validate(2).is_err());
        assert!(SchedulingRule::BoundaryK(f64::INFINITY).validate(2).is_ok());
        assert!(SchedulingRule::BoundaryK(1.0).validate(3).is_err());
        assert!(SchedulingRule::LambdaRatio(vec![0.2, 0.2]).validate(2).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.label().parse::<Strategy>().unwrap(), s);
        }
        assert!("best".parse::<Strategy>().is_err());
    }
}
