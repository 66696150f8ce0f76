//! Frontier sweeps, exact ray intersections and sum-rate maximization.

use rayon::prelude::*;

use crate::effcap::EffCapResult;
use crate::error::{Error, Result};
use crate::fading::{FadingModel, Method, QuadRule};
use crate::rates::{DecodingOrder, SystemParams};
use crate::solve::{find_root, golden_max};

use super::boundary::{BoundaryPoint, RegionBoundary};
use super::schedule::scheduled_capacities;
use super::timeshare::{tdma_capacities, timeshare_capacities};
use super::{SchedulingRule, Strategy};

/// Range of the log-spaced `K` (and `λ₂/λ₁`) sweep.
const SWEEP_DECADES: f64 = 4.0;
/// Smallest number of points on a two-user sweep.
pub const MIN_SWEEP_POINTS: usize = 81;
/// Range of `ln K^{1/β}` (optimal) and `ln(λ₂/λ₁)` (suboptimal) used when
/// solving for a ray or a maximum; the ends reproduce the fixed orders to
/// machine precision.
const LOG_PARAM_SPAN: f64 = 30.0;
/// Coarse scan that brackets a maximum before golden-section refinement.
const SCAN_POINTS: usize = 31;

/// Sweep configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Grid points for two-user sweeps (at least [`MIN_SWEEP_POINTS`] for
    /// the `K` and `λ` sweeps); simplex divisions for three or more users.
    pub points: usize,
    pub method: Method,
    /// Monte Carlo budget for sweeps that have no quadrature form.
    pub samples: u64,
    pub seed: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { points: MIN_SWEEP_POINTS, method: Method::default(), samples: 200_000, seed: 1 }
    }
}

fn log_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 10f64.powf(-SWEEP_DECADES + 2.0 * SWEEP_DECADES * i as f64 / (points - 1) as f64))
        .collect()
}

fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Cosine-spaced grid on `[0, 1]`, dense at both ends where TDMA capacities
/// change fastest.
fn end_dense_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::PI * i as f64 / (points - 1) as f64).cos())
        .map(|x: f64| x.clamp(0.0, 1.0))
        .collect()
}

/// All compositions of `divisions` into `users` nonnegative parts, as fractions.
fn simplex_grid(users: usize, divisions: usize) -> Vec<Vec<f64>> {
    fn rec(left: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(left - k, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(divisions, users, &mut Vec::new(), &mut out);
    out.into_iter().map(|v| v.into_iter().map(|k| k as f64 / divisions as f64).collect()).collect()
}

fn normalized(v: Vec<EffCapResult>) -> Vec<f64> {
    v.into_iter().map(|c| c.normalized).collect()
}

fn order(one_based: &[usize]) -> DecodingOrder {
    DecodingOrder::from_one_based(one_based).expect("valid order")
}

/// Two-user capacities at generator value `p` of a strategy, where `p` runs
/// over the range returned by [`generator_range`] and larger `p` favours user 2.
fn two_user_point(strategy: Strategy, p: f64, params: &SystemParams, models: &[FadingModel], method: Method) -> Result<Vec<f64>> {
    let caps = match strategy {
        Strategy::Optimal => {
            let k = (params.beta(0) * p).exp();
            scheduled_capacities(&SchedulingRule::BoundaryK(k), params, models, method)?
        }
        Strategy::Suboptimal => {
            let lambda1 = 1.0 / (1.0 + p.exp());
            scheduled_capacities(&SchedulingRule::LambdaRatio(vec![lambda1, 1.0 - lambda1]), params, models, method)?
        }
        Strategy::FixedTimeShare => {
            let tau = p.clamp(0.0, 1.0);
            timeshare_capacities(&[(order(&[1, 2]), tau), (order(&[2, 1]), 1.0 - tau)], params, models, method)?
        }
        Strategy::Tdma => {
            let d2 = p.clamp(0.0, 1.0);
            tdma_capacities(&[1.0 - d2, d2], params, models, method)?
        }
    };
    Ok(normalized(caps))
}

fn generator_range(strategy: Strategy) -> (f64, f64) {
    match strategy {
        Strategy::Optimal | Strategy::Suboptimal => (-LOG_PARAM_SPAN, LOG_PARAM_SPAN),
        Strategy::FixedTimeShare | Strategy::Tdma => (0.0, 1.0),
    }
}

/// Traces the frontier of `strategy`. Two-user sweeps cover the whole
/// parameter range including its endpoints; larger systems are sampled on a
/// simplex grid (Monte Carlo for the `λ/z` rule).
pub fn trace_region(
    strategy: Strategy,
    params: &SystemParams,
    models: &[FadingModel],
    options: &TraceOptions,
) -> Result<RegionBoundary> {
    params.validate()?;
    let m = params.users();
    if models.len() != m {
        return Err(Error::invalid("models", format!("{m} users but {} fading models", models.len())));
    }
    if options.points < 2 {
        return Err(Error::invalid("points", "a sweep needs at least two points"));
    }
    let method = options.method;
    let mut boundary = if m == 2 {
        let n = options.points;
        let (params_list, point_fn): (Vec<f64>, Box<dyn Fn(f64) -> Result<Vec<f64>> + Sync>) = match strategy {
            Strategy::Optimal => {
                if params.common_theta().is_none() {
                    return Err(Error::invalid("theta", "optimal switching assumes a common QoS exponent"));
                }
                let mut ks = vec![0.0];
                ks.extend(log_grid(n.max(MIN_SWEEP_POINTS)));
                ks.push(f64::INFINITY);
                let f = move |k: f64| {
                    Ok(normalized(scheduled_capacities(&SchedulingRule::BoundaryK(k), params, models, method)?))
                };
                (ks, Box::new(f))
            }
            Strategy::Suboptimal => {
                let mut ls = vec![0.0];
                ls.extend(log_grid(n.max(MIN_SWEEP_POINTS)).into_iter().rev().map(|c| 1.0 / (1.0 + c)));
                ls.push(1.0);
                let f = move |l: f64| {
                    Ok(normalized(scheduled_capacities(&SchedulingRule::LambdaRatio(vec![l, 1.0 - l]), params, models, method)?))
                };
                (ls, Box::new(f))
            }
            Strategy::FixedTimeShare => (unit_grid(n), Box::new(move |t| two_user_point(strategy, t, params, models, method))),
            Strategy::Tdma => {
                let f = move |d1: f64| Ok(normalized(tdma_capacities(&[d1, 1.0 - d1], params, models, method)?));
                (end_dense_grid(n), Box::new(f))
            }
        };
        let points = params_list
            .par_iter()
            .map(|&p| Ok(BoundaryPoint { parameter: p, capacities: point_fn(p)? }))
            .collect::<Result<Vec<_>>>()?;
        let mut b = RegionBoundary::new(strategy, points);
        b.certify();
        b
    } else {
        trace_many(strategy, params, models, options)?
    };
    boundary.points.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    Ok(boundary)
}

fn trace_many(strategy: Strategy, params: &SystemParams, models: &[FadingModel], options: &TraceOptions) -> Result<RegionBoundary> {
    let m = params.users();
    let divisions = options.points.min(12).max(2);
    let (weights, note): (Vec<Vec<f64>>, String) = match strategy {
        Strategy::Optimal => {
            return Err(Error::Unsupported("optimal order switching is only available for two users".into()))
        }
        Strategy::Suboptimal => (simplex_grid(m, divisions), "lambda weights sampled by Monte Carlo".into()),
        Strategy::Tdma => (simplex_grid(m, divisions), "slot fractions on a simplex grid".into()),
        Strategy::FixedTimeShare => {
            let k = DecodingOrder::all(m).len();
            let mut w: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| f64::from(u8::from(i == j))).collect()).collect();
            w.push(vec![1.0 / k as f64; k]);
            (w, "decoding-order vertices and the uniform share".into())
        }
    };
    let mc = match options.method {
        Method::MonteCarlo { .. } => options.method,
        Method::Quadrature(_) => Method::monte_carlo(options.samples, options.seed),
    };
    let points = weights
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let caps = match strategy {
                Strategy::Suboptimal => scheduled_capacities(&SchedulingRule::LambdaRatio(w.clone()), params, models, mc)?,
                Strategy::Tdma => tdma_capacities(w, params, models, options.method)?,
                Strategy::FixedTimeShare => {
                    let rule = SchedulingRule::time_share(m, w)?;
                    match rule {
                        SchedulingRule::TimeShare(parts) => {
                            let method = if w.iter().filter(|x| **x > 0.0).count() == 1 { options.method } else { mc };
                            timeshare_capacities(&parts, params, models, method)?
                        }
                        _ => unreachable!("time_share builds a time-share rule"),
                    }
                }
                Strategy::Optimal => unreachable!("rejected above"),
            };
            Ok(BoundaryPoint { parameter: i as f64, capacities: normalized(caps) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut b = RegionBoundary::new(strategy, points);
    b.warnings.push(format!("{strategy}: {m} users, {note}; parameter is the grid index, concavity not certified"));
    Ok(b)
}

/// Exact distance from the origin to the two-user frontier of `strategy`
/// along the ray at `angle` (radians), solving for the generator parameter.
/// Rays outside the swept fan meet the axis-parallel extensions.
pub fn ray_radius(strategy: Strategy, angle: f64, params: &SystemParams, models: &[FadingModel], rule: QuadRule) -> Result<f64> {
    if params.users() != 2 {
        return Err(Error::invalid("snr", "ray intersection is defined for two users"));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&angle) {
        return Err(Error::invalid("angle", format!("ray angle must lie in [0, π/2], got {angle}")));
    }
    let method = Method::Quadrature(rule);
    let point = |p: f64| two_user_point(strategy, p, params, models, method);
    let (lo, hi) = generator_range(strategy);
    let (c_lo, c_hi) = (point(lo)?, point(hi)?);
    let ang = |c: &[f64]| c[1].atan2(c[0]);
    if angle <= ang(&c_lo) {
        return Ok(c_lo[0] / angle.cos());
    }
    if angle >= ang(&c_hi) {
        return Ok(c_hi[1] / angle.sin());
    }
    let p = find_root(|p| Ok(ang(&point(p)?) - angle), lo, hi, 1e-11, "ray intersection")?;
    let c = point(p)?;
    Ok(c[0].hypot(c[1]))
}

/// Maximal sum capacity per strategy at one `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRateRow {
    pub theta: f64,
    /// `Σ_j C_j` (bits/s/Hz) in the order the strategies were requested.
    pub sums: Vec<f64>,
    /// Maximizing generator value per strategy (`K`, `λ₁`, `τ` or `δ₁`).
    pub argmax: Vec<f64>,
}

/// Maximizes `C₁ + C₂` over each strategy's generator for every `θ` (common
/// to both users).
pub fn sum_rate_sweep(
    strategies: &[Strategy],
    thetas: &[f64],
    params: &SystemParams,
    models: &[FadingModel],
    rule: QuadRule,
) -> Result<Vec<SumRateRow>> {
    if params.users() != 2 {
        return Err(Error::invalid("snr", "sum-rate sweeps are defined for two users"));
    }
    if thetas.is_empty() || thetas.windows(2).any(|w| !(w[1] > w[0])) || !(thetas[0] > 0.0) {
        return Err(Error::invalid("theta_grid", "theta grid must be positive and strictly ascending"));
    }
    let method = Method::Quadrature(rule);
    thetas
        .par_iter()
        .map(|&theta| {
            let p = params.with_theta(theta)?;
            let mut sums = Vec::with_capacity(strategies.len());
            let mut argmax = Vec::with_capacity(strategies.len());
            for &s in strategies {
                let (lo, hi) = generator_range(s);
                let sum = |x: f64| -> Result<f64> { Ok(two_user_point(s, x, &p, models, method)?.iter().sum()) };
                // the sum is flat where a strategy degenerates to a fixed
                // order, so bracket the peak on a coarse grid first
                let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).collect();
                let values = grid.iter().map(|&x| sum(x)).collect::<Result<Vec<_>>>()?;
                let i = (0..SCAN_POINTS).fold(0, |b, i| if values[i] > values[b] { i } else { b });
                let (a, b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(SCAN_POINTS - 1)]);
                let tol = 1e-7 * (hi - lo);
                let (x, best) = golden_max(sum, a, b, tol)?;
                sums.push(best);
                argmax.push(match s {
                    Strategy::Optimal => (p.beta(0) * x).exp(),
                    Strategy::Suboptimal => 1.0 / (1.0 + x.exp()),
                    Strategy::FixedTimeShare => x,
                    Strategy::Tdma => 1.0 - x,
                });
            }
            Ok(SumRateRow { theta, sums, argmax })
        })
        .collect()
}
