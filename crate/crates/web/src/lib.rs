//! Browser bindings. Every entry point returns a JSON string; the page in
//! `www/` draws it on a canvas.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use effcap_mac::power::{calibrate, policy_mu};
use effcap_mac::rates::{DecodingOrder, SystemParams};
use effcap_mac::region::{sum_rate_sweep, trace_region, Strategy, TraceOptions};
use effcap_mac::{FadingModel, Method, QuadRule};

#[derive(Debug, Serialize)]
pub struct Frontier {
    pub strategy: String,
    /// `[C1, C2]` in bits/s/Hz, in sweep order.
    pub points: Vec<[f64; 2]>,
    pub concavity_violation: f64,
}

#[derive(Debug, Serialize)]
pub struct RegionView {
    pub frontiers: Vec<Frontier>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct SumRateView {
    pub theta: Vec<f64>,
    pub strategies: Vec<String>,
    /// `sums[s][i]` is the best sum of strategy `s` at `theta[i]`.
    pub sums: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct PolicyView {
    pub z: Vec<f64>,
    pub alpha: [f64; 2],
    /// `mu[u][i][k]`: user `u` at `z1 = z[i]`, `z2 = z[k]`.
    pub mu: [Vec<Vec<f64>>; 2],
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn two_users(snr1_db: f64, snr2_db: f64, theta: f64) -> Result<(SystemParams, Vec<FadingModel>), String> {
    let params = SystemParams::with_defaults(vec![db(snr1_db), db(snr2_db)], vec![theta; 2]).map_err(|e| e.to_string())?;
    Ok((params, vec![FadingModel::rayleigh(); 2]))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// All four two-user frontiers for Rayleigh fading.
pub fn region_json(snr1_db: f64, snr2_db: f64, theta: f64) -> Result<String, String> {
    let (params, models) = two_users(snr1_db, snr2_db, theta)?;
    let mut view = RegionView { frontiers: Vec::new(), warnings: Vec::new() };
    for s in Strategy::ALL {
        let b = trace_region(s, &params, &models, &TraceOptions::default()).map_err(|e| e.to_string())?;
        view.warnings.extend(b.warnings.iter().cloned());
        view.frontiers.push(Frontier {
            strategy: s.label().to_string(),
            points: b.points.iter().map(|p| [p.capacities[0], p.capacities[1]]).collect(),
            concavity_violation: b.concavity_violation().map_err(|e| e.to_string())?,
        });
    }
    to_json(&view)
}

/// Best sum capacity per strategy on a log-spaced `θ` grid.
pub fn sum_rate_json(snr1_db: f64, snr2_db: f64, theta_min: f64, theta_max: f64, points: usize) -> Result<String, String> {
    if !(theta_min > 0.0 && theta_max > theta_min && points >= 2) {
        return Err("need 0 < theta_min < theta_max and at least two points".into());
    }
    let (params, models) = two_users(snr1_db, snr2_db, theta_min)?;
    let (a, b) = (theta_min.log10(), theta_max.log10());
    let theta: Vec<f64> = (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect();
    let rows = sum_rate_sweep(&Strategy::ALL, &theta, &params, &models, QuadRule::Graded).map_err(|e| e.to_string())?;
    let sums = (0..Strategy::ALL.len()).map(|s| rows.iter().map(|r| r.sums[s]).collect()).collect();
    to_json(&SumRateView { theta, strategies: Strategy::ALL.iter().map(|s| s.label().to_string()).collect(), sums })
}

/// Calibrated power policy on a square gain grid. `first` is the 1-based
/// user decoded first.
pub fn power_policy_json(snr1_db: f64, snr2_db: f64, theta: f64, first: usize, z_max: f64, points: usize) -> Result<String, String> {
    if !(z_max > 0.0 && points >= 2) {
        return Err("need z_max > 0 and at least two points".into());
    }
    let order = match first {
        1 => vec![1, 2],
        2 => vec![2, 1],
        _ => return Err(format!("first decoded user must be 1 or 2, got {first}")),
    };
    let order = DecodingOrder::from_one_based(&order).map_err(|e| e.to_string())?;
    let (params, models) = two_users(snr1_db, snr2_db, theta)?;
    let policy = calibrate(&order, &params, &models, Method::Quadrature(QuadRule::Graded), 1e-8).map_err(|e| e.to_string())?;
    let z: Vec<f64> = (0..points).map(|i| z_max * i as f64 / (points - 1) as f64).collect();
    let mut mu = [Vec::new(), Vec::new()];
    for &z1 in &z {
        let row: Vec<Vec<f64>> = z.iter().map(|&z2| policy_mu(&[z1, z2], &policy)).collect();
        for (u, m) in mu.iter_mut().enumerate() {
            m.push(row.iter().map(|v| v[u]).collect());
        }
    }
    to_json(&PolicyView { z, alpha: [policy.alpha[0], policy.alpha[1]], mu })
}

#[wasm_bindgen]
pub fn region(snr1_db: f64, snr2_db: f64, theta: f64) -> Result<String, JsError> {
    region_json(snr1_db, snr2_db, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sum_rate(snr1_db: f64, snr2_db: f64, theta_min: f64, theta_max: f64, points: usize) -> Result<String, JsError> {
    sum_rate_json(snr1_db, snr2_db, theta_min, theta_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn power_policy(snr1_db: f64, snr2_db: f64, theta: f64, first: usize, z_max: f64, points: usize) -> Result<String, JsError> {
    power_policy_json(snr1_db, snr2_db, theta, first, z_max, points).map_err(|e| JsError::new(&e))
}
