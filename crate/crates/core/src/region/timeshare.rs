//! Fixed decoding orders, per-frame time sharing between them, and TDMA.

use crate::effcap::{effective_capacity_tdma, EffCapResult};
use crate::error::{Error, Result};
use crate::fading::{expect_nd, FadingModel, Method};
use crate::rates::{DecodingOrder, SystemParams};

fn check_models(params: &SystemParams, models: &[FadingModel]) -> Result<()> {
    params.validate()?;
    if models.len() != params.users() {
        return Err(Error::invalid("models", format!("{} users but {} fading models", params.users(), models.len())));
    }
    Ok(())
}

/// Capacities at the successive-decoding vertex of `order`.
///
/// User `j` only depends on its own gain and those decoded after it, so the
/// expectation runs over that subset.
pub fn fixed_order_capacities(
    order: &DecodingOrder,
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>> {
    check_models(params, models)?;
    if order.users() != params.users() {
        return Err(Error::invalid("order", "decoding order must cover every user"));
    }
    (0..params.users())
        .map(|j| {
            let later = order.decoded_after(j);
            let involved: Vec<usize> = std::iter::once(j).chain(later.iter().copied()).collect();
            let sub: Vec<FadingModel> = involved.iter().map(|&u| models[u].clone()).collect();
            let beta = params.beta(j);
            let snr = &params.snr;
            let est = expect_nd(
                |z| {
                    let interference: f64 = involved[1..].iter().zip(&z[1..]).map(|(&u, &g)| snr[u] * g).sum();
                    (-beta * (snr[j] * z[0] / (1.0 + interference)).ln_1p()).exp()
                },
                &sub,
                method,
            )?;
            EffCapResult::from_mgf(est.value, est.std_error, &params.qos(j), &method)
        })
        .collect()
}

/// Capacities when each frame is time-shared between decoding orders with
/// fractions `τ`; the per-frame service is `Σ_m τ_m R_m` inside one exponent.
pub fn timeshare_capacities(
    parts: &[(DecodingOrder, f64)],
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>> {
    check_models(params, models)?;
    super::SchedulingRule::TimeShare(parts.to_vec()).validate(params.users())?;
    let active: Vec<&(DecodingOrder, f64)> = parts.iter().filter(|(_, t)| *t > 0.0).collect();
    if let [(order, _)] = active.as_slice() {
        return fixed_order_capacities(order, params, models, method);
    }
    (0..params.users())
        .map(|j| {
            let beta = params.beta(j);
            let snr = &params.snr;
            let est = expect_nd(
                |z| {
                    let signal = snr[j] * z[j];
                    let mut nats = 0.0;
                    for (order, tau) in &active {
                        let interference: f64 = order.decoded_after(j).iter().map(|&u| snr[u] * z[u]).sum();
                        nats += tau * (signal / (1.0 + interference)).ln_1p();
                    }
                    (-beta * nats).exp()
                },
                models,
                method,
            )?;
            EffCapResult::from_mgf(est.value, est.std_error, &params.qos(j), &method)
        })
        .collect()
}

/// TDMA capacities for slot fractions `δ`. A zero fraction silences the user
/// (capacity 0); the fractions may not exceed one in total.
pub fn tdma_capacities(
    deltas: &[f64],
    params: &SystemParams,
    models: &[FadingModel],
    method: Method,
) -> Result<Vec<EffCapResult>> {
    check_models(params, models)?;
    if deltas.len() != params.users() {
        return Err(Error::invalid("delta", format!("need {} slot fractions, got {}", params.users(), deltas.len())));
    }
    let total: f64 = deltas.iter().sum();
    if deltas.iter().any(|d| !(*d >= 0.0)) || total > 1.0 + 1e-9 {
        return Err(Error::invalid("delta", format!("slot fractions must be nonnegative with sum ≤ 1, got {deltas:?}")));
    }
    deltas
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if d == 0.0 {
                Ok(EffCapResult::from_bits(0.0, None, &params.qos(j), &method))
            } else {
                effective_capacity_tdma(d.min(1.0), &models[j], params.snr[j], &params.qos(j), method)
            }
        })
        .collect()
}
