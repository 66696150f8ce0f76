//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use effcap_mac::cli::{cross_validate, RunConfig};
use effcap_mac::effcap::{single_user_normalized, QosSpec};
use effcap_mac::power::{average_power, calibrate, two_user_policy, PowerPolicy};
use effcap_mac::queue::{estimate_decay, simulate};
use effcap_mac::rates::{vertex_rates, DecodingOrder, SystemParams};
use effcap_mac::region::{
    fixed_order_capacities, ray_radius, solve_k_for_lambda, stationarity_residual, sum_rate_sweep, trace_region,
    Strategy, TraceOptions, CONCAVITY_TOLERANCE,
};
use effcap_mac::{FadingModel, Method, QuadRule};

type Outcome = Result<String, String>;

const Q: Method = Method::Quadrature(QuadRule::Graded);

// e·E₁(1)/ln 2, 30-digit reference
const ERGODIC_SNR_ONE: f64 = 0.860_347_382_270_885_95;
// waterfilling cutoffs α with e^{-α}/α − E₁(α) = SNR
const WATERFILLING_CUTOFF: [(f64, f64); 2] = [(1.0, 0.393_773_845_045_118_36), (10.0, 0.076_759_156_424_983_25)];

fn config(name: &str) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    effcap_mac::cli::load_config(&path, &[]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn setup(name: &str) -> (RunConfig, SystemParams, Vec<FadingModel>) {
    let cfg = config(name);
    let params = cfg.system().unwrap();
    let models = cfg.models().unwrap();
    (cfg, params, models)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within_time(elapsed: Duration, limit_s: u64, detail: String) -> Outcome {
    check(elapsed.as_secs() < limit_s, format!("{detail}; {:.1}s (limit {limit_s}s)", elapsed.as_secs_f64()))
}

fn region_dominance() -> Outcome {
    let start = Instant::now();
    let (_, params, models) = setup("region.conf");
    let rule = QuadRule::Graded;
    let mut worst_sub_gap: f64 = 0.0;
    let mut order_violations = Vec::new();
    for k in 0..21 {
        let angle = FRAC_PI_2 * k as f64 / 20.0;
        let r = |s| ray_radius(s, angle, &params, &models, rule).map_err(|e| e.to_string());
        let (opt, sub, fixed) = (r(Strategy::Optimal)?, r(Strategy::Suboptimal)?, r(Strategy::FixedTimeShare)?);
        let slack = 1e-9 * opt;
        if !(opt + slack >= sub && sub + slack >= fixed) {
            order_violations.push(format!("ray {k}: {opt} {sub} {fixed}"));
        }
        worst_sub_gap = worst_sub_gap.max((opt - sub) / opt);
    }
    let tdma = trace_region(Strategy::Tdma, &params, &models, &TraceOptions::default()).map_err(|e| e.to_string())?;
    let mut outside = 0;
    for p in &tdma.points {
        let (c1, c2) = (p.capacities[0], p.capacities[1]);
        let angle = c2.atan2(c1);
        let fixed = ray_radius(Strategy::FixedTimeShare, angle, &params, &models, rule).map_err(|e| e.to_string())?;
        if c1.hypot(c2) > fixed * (1.0 + 1e-9) {
            outside += 1;
        }
    }
    let detail = format!(
        "21 rays, ordering violations {}, worst suboptimal gap {:.3}%, {outside}/{} TDMA points outside fixed-order region",
        order_violations.len(),
        100.0 * worst_sub_gap,
        tdma.points.len()
    );
    if !order_violations.is_empty() || worst_sub_gap > 0.01 || outside == 0 {
        return Err(format!("{detail} {order_violations:?}"));
    }
    within_time(start.elapsed(), 120, detail)
}

fn sum_rate_crossover() -> Outcome {
    let start = Instant::now();
    let (cfg, params, models) = setup("sumrate.conf");
    let strategies = Strategy::ALL;
    let rows = sum_rate_sweep(&strategies, &cfg.theta_grid(), &params, &models, QuadRule::Graded).map_err(|e| e.to_string())?;
    let idx = |s: Strategy| strategies.iter().position(|x| *x == s).unwrap();
    let first = &rows[0];
    let last = rows.last().unwrap();
    let fixed = first.sums[idx(Strategy::FixedTimeShare)];
    let tdma = first.sums[idx(Strategy::Tdma)];
    let max = last.sums.iter().cloned().fold(f64::MIN, f64::max);
    let min = last.sums.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / max;
    let detail = format!(
        "theta {}: fixed-order {fixed:.4} vs TDMA {tdma:.4}; theta {}: spread {:.2}%",
        first.theta,
        last.theta,
        100.0 * spread
    );
    if !(fixed > tdma && spread <= 0.05) {
        return Err(detail);
    }
    within_time(start.elapsed(), 120, detail)
}

fn ergodic_limit() -> Outcome {
    let qos = QosSpec::new(1e-4 / 200.0, 2e-3, 1e5).map_err(|e| e.to_string())?;
    let c = single_user_normalized(&FadingModel::rayleigh(), 1.0, &qos, Q).map_err(|e| e.to_string())?.normalized;
    let rel = (c - ERGODIC_SNR_ONE).abs() / ERGODIC_SNR_ONE;
    check(rel <= 5e-3, format!("C = {c:.6} vs {ERGODIC_SNR_ONE:.6}, relative error {rel:.2e} (limit 5e-3)"))
}

fn convexity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut traced = 0;
    let mut failures = Vec::new();
    for name in ["region.conf", "sumrate.conf"] {
        let (cfg, base, models) = setup(name);
        for theta in [1e-3, 1e-2, 1e-1] {
            let params = base.with_theta(theta).map_err(|e| e.to_string())?;
            let options = TraceOptions { points: cfg.points, ..TraceOptions::default() };
            for s in Strategy::ALL {
                let b = trace_region(s, &params, &models, &options).map_err(|e| e.to_string())?;
                let v = b.concavity_violation().map_err(|e| e.to_string())?;
                traced += 1;
                worst = worst.max(v);
                if v > CONCAVITY_TOLERANCE {
                    failures.push(format!("{name} theta {theta} {s}: {v:e}"));
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{traced} frontiers, worst violation {worst:.2e} (tolerance {CONCAVITY_TOLERANCE:e}){}", failures.join("; ")),
    )
}

fn stationarity() -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut worst_fp: f64 = 0.0;
    for name in ["region.conf", "sumrate.conf"] {
        let (_, params, models) = setup(name);
        for i in 0..10 {
            let k = 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0);
            let st = stationarity_residual(k, &params, &models, QuadRule::Graded).map_err(|e| e.to_string())?;
            worst_res = worst_res.max(st.residual);
            let fp = solve_k_for_lambda(st.lambda1, &params, &models, QuadRule::Graded, 1.0, 1.0, 1e-10)
                .map_err(|e| format!("K = {k}: {e}"))?;
            worst_fp = worst_fp.max((fp.k - k).abs() / k);
        }
    }
    check(
        worst_res <= 1e-12 && worst_fp <= 1e-6,
        format!("10 K values x 2 setups: worst residual {worst_res:.2e} (limit 1e-12), worst fixed-point error {worst_fp:.2e} (limit 1e-6)"),
    )
}

fn telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let b = 1e5;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for m in [2usize, 3] {
        let orders = DecodingOrder::all(m);
        for _ in 0..10_000 {
            let z: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().ln()).collect();
            let snr: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-2.0..3.0))).collect();
            let total: f64 = z.iter().zip(&snr).map(|(z, s)| z * s).sum();
            let want = b * total.ln_1p() / LN_2;
            for o in &orders {
                let got: f64 = vertex_rates(&z, &snr, o, b).iter().sum();
                worst = worst.max((got - want).abs() / want.max(1.0));
                checked += 1;
            }
        }
    }
    check(worst <= 1e-12, format!("{checked} state-order pairs, worst relative error {worst:.2e} (limit 1e-12)"))
}

/// Minimizes the convex `(1+μx)^{-β} + βαμ` over `μ ≥ 0` by bisection on
/// the derivative inside an expanding bracket.
fn numeric_mu(x: f64, alpha: f64, beta: f64) -> f64 {
    let deriv = |mu: f64| -beta * x * (1.0 + mu * x).powf(-beta - 1.0) + beta * alpha;
    if deriv(0.0) >= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while deriv(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `E{g(z)}` for `z ~ Exp(1)` by the midpoint rule in `u = e^{-z}`.
fn exp_mean(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    (0..n).map(|i| g(-((i as f64 + 0.5) / n as f64).ln())).sum::<f64>() / n as f64
}

fn power_policy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_mu: f64 = 0.0;
    for beta in [0.5, 1.0, 3.0] {
        for _ in 0..1000 {
            let (z1, z2) = (-rng.random::<f64>().ln() * 3.0, -rng.random::<f64>().ln() * 3.0);
            let alphas = [rng.random_range(0.02..2.0), rng.random_range(0.02..2.0)];
            let (mu1, mu2) = two_user_policy(z1, z2, alphas, [beta, beta]);
            // order (2,1): user 1 decoded last without interference
            let n1 = numeric_mu(z1, alphas[0], beta);
            let n2 = numeric_mu(z2 / (1.0 + n1 * z1), alphas[1], beta);
            worst_mu = worst_mu.max((mu1 - n1).abs()).max((mu2 - n2).abs());
        }
    }

    let order = DecodingOrder::from_one_based(&[2, 1]).unwrap();
    let models = vec![FadingModel::rayleigh(); 2];
    let mut worst_power: f64 = 0.0;
    let mut worst_independent: f64 = 0.0;
    for snr in [[1.0, 1.0], [10.0, 1.0]] {
        for beta in [0.5, 1.0, 3.0] {
            let theta = beta * LN_2 / 200.0;
            let params = SystemParams::with_defaults(snr.to_vec(), vec![theta; 2]).unwrap();
            let policy = calibrate(&order, &params, &models, Q, 1e-8).map_err(|e| e.to_string())?;
            let avg = average_power(&policy, &models, Q).map_err(|e| e.to_string())?;
            for j in 0..2 {
                worst_power = worst_power.max((avg[j] - snr[j]).abs() / snr[j]);
            }
            let (a, b) = ([policy.alpha[0], policy.alpha[1]], [beta, beta]);
            let e1 = exp_mean(20_000, |z1| two_user_policy(z1, 0.0, a, b).0);
            let e2 = exp_mean(1500, |z1| exp_mean(1500, |z2| two_user_policy(z1, z2, a, b).1));
            worst_independent = worst_independent.max((e1 - snr[0]).abs() / snr[0]).max((e2 - snr[1]).abs() / snr[1]);
        }
    }

    let mut worst_cutoff: f64 = 0.0;
    for (snr, cutoff) in WATERFILLING_CUTOFF {
        let theta = 1e-6 * LN_2 / 200.0;
        let params = SystemParams::with_defaults(vec![snr], vec![theta]).unwrap();
        let policy: PowerPolicy = calibrate(&DecodingOrder::identity(1), &params, &[FadingModel::rayleigh()], Q, 1e-10)
            .map_err(|e| e.to_string())?;
        worst_cutoff = worst_cutoff.max((policy.alpha[0] - cutoff).abs() / cutoff);
    }
    check(
        worst_mu <= 1e-6 && worst_power <= 1e-3 && worst_independent <= 1e-3 && worst_cutoff <= 1e-4,
        format!(
            "pointwise |mu - numeric| {worst_mu:.2e} (limit 1e-6); power constraint {worst_power:.2e}, \
             independent midpoint check {worst_independent:.2e} (limit 1e-3); waterfilling cutoff {worst_cutoff:.2e} (limit 1e-4)"
        ),
    )
}

fn queue_tail() -> Outcome {
    let start = Instant::now();
    let (cfg, base, models) = setup("validate.conf");
    let mut lines = Vec::new();
    let mut ok = true;
    let estimate = |params: &SystemParams, factor: f64| -> Result<(f64, f64), String> {
        let order = DecodingOrder::identity(1);
        let c = fixed_order_capacities(&order, params, &models, Q).map_err(|e| e.to_string())?[0].bits_per_second;
        let (snr, b) = (params.snr.clone(), params.bandwidth);
        let trace = simulate(|z| vertex_rates(z, &snr, &order, b)[0], &models, factor * c, params.frame_duration, cfg.frames, cfg.seed)
            .map_err(|e| e.to_string())?;
        let d = estimate_decay(&trace, cfg.window, cfg.batches).map_err(|e| e.to_string())?;
        Ok((d.theta, params.theta[0]))
    };
    for theta in [0.001, 0.01] {
        let (hat, th) = estimate(&base.with_theta(theta).map_err(|e| e.to_string())?, 1.0)?;
        let ratio = hat / th;
        ok &= (0.8..=1.25).contains(&ratio);
        lines.push(format!("theta {theta}: ratio {ratio:.3}"));
    }
    let mut sweep = Vec::new();
    for &f in &cfg.arrival_factors {
        sweep.push(estimate(&base, f)?.0);
    }
    let monotone = sweep.windows(2).all(|w| w[1] <= w[0]);
    ok &= monotone && sweep.len() == 5;
    let ratios: Vec<String> = sweep.iter().map(|h| format!("{:.3}", h / base.theta[0])).collect();
    lines.push(format!("sweep {:?} -> ratios [{}] monotone {monotone}", cfg.arrival_factors, ratios.join(", ")));
    let detail = format!("{} frames; {}", cfg.frames, lines.join("; "));
    if !ok {
        return Err(detail);
    }
    within_time(start.elapsed(), 300, detail)
}

fn cross_validation() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".conf"))
        .collect();
    names.sort();
    let mut worst = (0.0, String::new());
    let mut count = 0;
    for name in &names {
        let cfg = config(name);
        for c in cross_validate(&cfg, 1_000_000).map_err(|e| format!("{name}: {e}"))? {
            count += 1;
            let z = c.z_score();
            if !(z <= worst.0) {
                worst = (z, format!("{name} {}", c.label));
            }
        }
    }
    check(
        worst.0 <= 3.0,
        format!("{count} capacities over {} configs, worst |quad - mc| = {:.2} SE at {} (limit 3)", names.len(), worst.0, worst.1),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 region dominance", region_dominance),
        ("2 sum-rate crossover", sum_rate_crossover),
        ("3 ergodic limit", ergodic_limit),
        ("4 convexity", convexity),
        ("5 stationarity", stationarity),
        ("6 telescoping identity", telescoping),
        ("7 power-policy optimality", power_policy),
        ("8 queue-tail semantics", queue_tail),
        ("9 method cross-validation", cross_validation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
