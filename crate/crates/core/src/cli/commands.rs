//! Command implementations producing output tables.

use crate::effcap::{single_user_normalized, EffCapResult};
use crate::fading::{FadingModel, Method, QuadRule};
use crate::power::{average_power, calibrate, policy_mu, powered_vertex_capacities};
use crate::queue::{estimate_decay, simulate};
use crate::rates::{vertex_rates, SystemParams};
use crate::region::{
    fixed_order_capacities, scheduled_capacities, sum_rate_sweep, tdma_capacities, trace_region, SchedulingRule,
    TraceOptions,
};

use super::config::{Command, RunConfig};
use super::output::{num, opt, Table};
use super::CliError;

/// Relative band around `θ` that counts as a matching tail exponent.
pub const DECAY_BAND: (f64, f64) = (0.8, 1.25);

fn numeric<T>(op: &str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::numeric(op, e))
}

fn setup(cfg: &RunConfig) -> Result<(SystemParams, Vec<FadingModel>), CliError> {
    let params = cfg.system().map_err(|e| CliError::config(e.to_string()))?;
    Ok((params, cfg.models()?))
}

/// Runs `command` and returns its tables, unrendered.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    match command {
        Command::Region => region(cfg),
        Command::Sumrate => sumrate(cfg),
        Command::Power => power(cfg),
        Command::Validate => validate(cfg),
        Command::Effcap => effcap(cfg),
    }
}

fn user_columns(prefix: &str, users: usize) -> Vec<String> {
    (1..=users).map(|j| format!("{prefix}{j}")).collect()
}

fn table(file: &str, method: String, columns: Vec<String>) -> Table {
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    Table::new(file, method, &cols)
}

fn region(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let (params, models) = setup(cfg)?;
    let m = params.users();
    let options = TraceOptions { points: cfg.points, method: cfg.method(), samples: cfg.samples, seed: cfg.seed };
    let mut columns = vec!["strategy".to_string(), "parameter".to_string()];
    columns.extend(user_columns("C", m));
    let mut out = table("region.csv", cfg.method().describe(), columns);
    for &strategy in &cfg.strategies {
        let b = numeric("region::trace_region", trace_region(strategy, &params, &models, &options))?;
        if m == 2 {
            let v = numeric("region::concavity_violation", b.concavity_violation())?;
            out.notes.push(format!("concavity {strategy}: {v:e}"));
        }
        out.notes.extend(b.warnings.iter().map(|w| format!("warning: {w}")));
        for p in &b.points {
            let mut row = vec![strategy.label().to_string(), num(p.parameter)];
            row.extend(p.capacities.iter().map(|&c| num(c)));
            out.push(row);
        }
    }
    Ok(vec![out])
}

fn quadrature_rule(cfg: &RunConfig, what: &str) -> Result<QuadRule, CliError> {
    match cfg.method() {
        Method::Quadrature(rule) => Ok(rule),
        Method::MonteCarlo { .. } => Err(CliError::config(format!("config key `method`: {what} needs graded or laguerre"))),
    }
}

fn sumrate(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let (params, models) = setup(cfg)?;
    let rule = quadrature_rule(cfg, "sumrate")?;
    let mut columns = vec!["theta".to_string()];
    columns.extend(cfg.strategies.iter().map(|s| format!("sum_{}", s.label())));
    columns.extend(cfg.strategies.iter().map(|s| format!("arg_{}", s.label())));
    let mut out = table("sumrate.csv", cfg.method().describe(), columns);
    out.notes.push(format!(
        "generators: {}",
        cfg.strategies.iter().map(|s| format!("{}={}", s.label(), s.parameter_name())).collect::<Vec<_>>().join(" ")
    ));
    let rows = numeric("region::sum_rate_sweep", sum_rate_sweep(&cfg.strategies, &cfg.theta_grid(), &params, &models, rule))?;
    for r in rows {
        let mut row = vec![num(r.theta)];
        row.extend(r.sums.iter().map(|&v| num(v)));
        row.extend(r.argmax.iter().map(|&v| num(v)));
        out.push(row);
    }
    Ok(vec![out])
}

fn power(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let (params, models) = setup(cfg)?;
    let m = params.users();
    let method = cfg.method();
    let order = cfg.decoding_order();
    let policy = numeric("power::calibrate", calibrate(&order, &params, &models, method, cfg.tolerance))?;
    let achieved = numeric("power::average_power", average_power(&policy, &models, method))?;
    let powered = numeric("power::powered_vertex_capacities", powered_vertex_capacities(&policy, &params, &models, method))?;
    let fixed = numeric("region::fixed_order_capacities", fixed_order_capacities(&order, &params, &models, method))?;

    let mut thresholds = table(
        "power_thresholds.csv",
        method.describe(),
        ["user", "position", "snr", "theta", "beta", "alpha", "kappa", "mean_power", "capacity_powered", "capacity_fixed"]
            .map(String::from)
            .to_vec(),
    );
    thresholds.notes.push(format!("order: {order}"));
    for j in 0..m {
        thresholds.push(vec![
            (j + 1).to_string(),
            (order.position(j) + 1).to_string(),
            num(params.snr[j]),
            num(params.theta[j]),
            num(policy.beta[j]),
            num(policy.alpha[j]),
            num(policy.kappa(j)),
            num(achieved[j]),
            num(powered[j].normalized),
            num(fixed[j].normalized),
        ]);
    }

    let n = cfg.policy_points;
    let grid: Vec<f64> = (0..n).map(|i| cfg.policy_z_max * i as f64 / (n - 1) as f64).collect();
    let mu_columns = user_columns("mu", m);
    let mut map = if m == 2 {
        let mut cols = vec!["z1".to_string(), "z2".to_string()];
        cols.extend(mu_columns);
        table("power_policy.csv", method.describe(), cols)
    } else {
        let mut cols = vec!["z".to_string()];
        cols.extend(mu_columns);
        table("power_policy.csv", method.describe(), cols)
    };
    map.notes.push(format!("order: {order}"));
    if m == 2 {
        for &z1 in &grid {
            for &z2 in &grid {
                let mut row = vec![num(z1), num(z2)];
                row.extend(policy_mu(&[z1, z2], &policy).into_iter().map(num));
                map.push(row);
            }
        }
    } else {
        if m > 2 {
            map.notes.push("grid: diagonal z1 = ... = zM = z".into());
        }
        for &z in &grid {
            let mut row = vec![num(z)];
            row.extend(policy_mu(&vec![z; m], &policy).into_iter().map(num));
            map.push(row);
        }
    }
    Ok(vec![thresholds, map])
}

fn validate(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let (params, models) = setup(cfg)?;
    let u = cfg.user - 1;
    let order = cfg.decoding_order();
    let capacity = numeric("region::fixed_order_capacities", fixed_order_capacities(&order, &params, &models, cfg.method()))?[u]
        .bits_per_second;
    let theta = params.theta[u];
    let mut out = table(
        "validate.csv",
        format!("simulation: {} frames, seed {}; capacity by {}", cfg.frames, cfg.seed, cfg.method().describe()),
        [
            "arrival_factor",
            "arrival_rate",
            "theta",
            "theta_hat",
            "ci_low",
            "ci_high",
            "std_error",
            "q_low",
            "q_high",
            "exceedances",
            "within_band",
        ]
        .map(String::from)
        .to_vec(),
    );
    out.notes.push(format!("user: {} at order {order}, effective capacity {} bits/s", cfg.user, num(capacity)));
    let (snr, b) = (params.snr.clone(), params.bandwidth);
    for &f in &cfg.arrival_factors {
        let arrival = f * capacity;
        let trace = numeric(
            "queue::simulate",
            simulate(|z| vertex_rates(z, &snr, &order, b)[u], &models, arrival, params.frame_duration, cfg.frames, cfg.seed),
        )?;
        out.notes.extend(trace.warnings.iter().map(|w| format!("warning: factor {}: {w}", num(f))));
        let d = numeric("queue::estimate_decay", estimate_decay(&trace, cfg.window, cfg.batches))?;
        let within = d.theta >= DECAY_BAND.0 * theta && d.theta <= DECAY_BAND.1 * theta;
        out.push(vec![
            num(f),
            num(arrival),
            num(theta),
            num(d.theta),
            num(d.ci.0),
            num(d.ci.1),
            num(d.std_error),
            num(d.window.0),
            num(d.window.1),
            d.exceedances.to_string(),
            within.to_string(),
        ]);
    }
    Ok(vec![out])
}

/// One effective capacity per user and scheme.
struct SchemeValue {
    user: usize,
    scheme: String,
    result: EffCapResult,
}

fn scheme_values(cfg: &RunConfig, params: &SystemParams, models: &[FadingModel], method: Method) -> Result<Vec<SchemeValue>, CliError> {
    let m = params.users();
    let mut values = Vec::new();
    for j in 0..m {
        let qos = params.qos(j);
        let r = numeric("effcap::single_user_normalized", single_user_normalized(&models[j], params.snr[j], &qos, method))?;
        values.push(SchemeValue { user: j, scheme: "single-user".into(), result: r });
    }
    if m > 1 {
        let order = cfg.decoding_order();
        let vertex = numeric("region::fixed_order_capacities", fixed_order_capacities(&order, params, models, method))?;
        values.extend(vertex.into_iter().enumerate().map(|(j, r)| SchemeValue { user: j, scheme: "vertex".into(), result: r }));
        let tdma = numeric("region::tdma_capacities", tdma_capacities(&vec![1.0 / m as f64; m], params, models, method))?;
        values.extend(tdma.into_iter().enumerate().map(|(j, r)| SchemeValue { user: j, scheme: "tdma-equal".into(), result: r }));
    }
    Ok(values)
}

fn effcap(cfg: &RunConfig) -> Result<Vec<Table>, CliError> {
    let (params, models) = setup(cfg)?;
    let method = cfg.method();
    let mut out = table(
        "effcap.csv",
        method.describe(),
        ["user", "snr", "theta", "scheme", "bits_per_second", "normalized", "std_error"].map(String::from).to_vec(),
    );
    out.notes.push(format!("order: {}", cfg.decoding_order()));
    for v in scheme_values(cfg, &params, &models, method)? {
        out.push(vec![
            (v.user + 1).to_string(),
            num(params.snr[v.user]),
            num(params.theta[v.user]),
            v.scheme,
            num(v.result.bits_per_second),
            num(v.result.normalized),
            opt(v.result.std_error),
        ]);
    }
    Ok(vec![out])
}

/// Quadrature and Monte Carlo values of one effective capacity (bits/s/Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub label: String,
    pub quadrature: f64,
    pub monte_carlo: f64,
    pub std_error: f64,
}

impl CrossCheck {
    /// `|quadrature − Monte Carlo|` in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.quadrature - self.monte_carlo).abs() / self.std_error
    }
}

/// Evaluates every effective capacity the `effcap` command reports, plus the
/// two-user switching rules at `K = 1` and equal weights, by graded quadrature
/// and by Monte Carlo with `samples` draws.
pub fn cross_validate(cfg: &RunConfig, samples: u64) -> Result<Vec<CrossCheck>, CliError> {
    let (params, models) = setup(cfg)?;
    let quad = Method::Quadrature(QuadRule::Graded);
    let mc = Method::monte_carlo(samples, cfg.seed);
    let q = scheme_values(cfg, &params, &models, quad)?;
    let s = scheme_values(cfg, &params, &models, mc)?;
    let mut checks: Vec<CrossCheck> = q
        .iter()
        .zip(&s)
        .map(|(a, b)| CrossCheck {
            label: format!("{} user {}", a.scheme, a.user + 1),
            quadrature: a.result.normalized,
            monte_carlo: b.result.normalized,
            std_error: b.result.std_error.unwrap_or(f64::NAN),
        })
        .collect();
    if params.users() == 2 && params.common_theta().is_some() {
        let rules = [("switching K=1", SchedulingRule::BoundaryK(1.0)), ("lambda-rule equal", SchedulingRule::LambdaRatio(vec![0.5, 0.5]))];
        for (name, rule) in rules {
            let a = numeric("region::scheduled_capacities", scheduled_capacities(&rule, &params, &models, quad))?;
            let b = numeric("region::scheduled_capacities", scheduled_capacities(&rule, &params, &models, mc))?;
            for j in 0..2 {
                checks.push(CrossCheck {
                    label: format!("{name} user {}", j + 1),
                    quadrature: a[j].normalized,
                    monte_carlo: b[j].normalized,
                    std_error: b[j].std_error.unwrap_or(f64::NAN),
                });
            }
        }
    }
    Ok(checks)
}
