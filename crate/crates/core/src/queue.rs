//! Discrete-time queue simulation and tail-exponent estimation.
//!
//! A constant arrival rate `a` feeds a queue served by `s[i] = T R[i]` bits
//! per frame; `Q[i+1] = max(Q[i] + aT − s[i], 0)`. For large `q` the
//! stationary tail behaves like `P(Q ≥ q) ≈ γ e^{−θ q}`, and `θ` is estimated
//! by least squares on the empirical log-tail.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fading::{map_samples, FadingModel};

/// Smallest trace length accepted by [`simulate`].
pub const MIN_FRAMES: u64 = 100_000;
/// Fraction of frames discarded as warm-up.
pub const WARMUP_FRACTION: f64 = 0.01;
/// Default tail window, as quantiles of the stationary queue length.
pub const DEFAULT_WINDOW: (f64, f64) = (0.95, 0.999);
/// Exceedances required at the lower edge of the window.
pub const MIN_EXCEEDANCES: usize = 1000;
/// Default number of batches for the confidence interval.
pub const DEFAULT_BATCHES: usize = 20;
/// Number of queue levels in the regression.
const FIT_LEVELS: usize = 50;

/// Queue lengths (bits) after every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueTrace {
    pub queue: Vec<f64>,
    /// Arrival rate in bits/s.
    pub arrival_rate: f64,
    pub frame_duration: f64,
    pub seed: u64,
    /// Leading frames excluded from tail statistics.
    pub warmup: usize,
    pub warnings: Vec<String>,
}

impl QueueTrace {
    /// Wraps externally produced queue lengths, with the default warm-up.
    pub fn from_queue(queue: Vec<f64>, arrival_rate: f64, frame_duration: f64, seed: u64) -> Self {
        let warmup = (queue.len() as f64 * WARMUP_FRACTION) as usize;
        Self { queue, arrival_rate, frame_duration, seed, warmup, warnings: Vec::new() }
    }

    pub fn frames(&self) -> usize {
        self.queue.len()
    }

    /// Queue lengths after the warm-up prefix.
    pub fn stationary(&self) -> &[f64] {
        &self.queue[self.warmup.min(self.queue.len())..]
    }
}

/// Service in bits for each of `frames` frames: `T R(z)` with i.i.d. gains.
pub fn services<R>(rate_law: R, models: &[FadingModel], frame_duration: f64, frames: u64, seed: u64) -> Vec<f64>
where
    R: Fn(&[f64]) -> f64 + Sync,
{
    map_samples(models, seed, frames, |z| frame_duration * rate_law(z))
}

/// Lindley recursion from an empty queue; returns the length after each frame.
pub fn lindley(arrival_bits: f64, services: &[f64]) -> Vec<f64> {
    let mut q = 0.0;
    services
        .iter()
        .map(|s| {
            q = (q + arrival_bits - s).max(0.0);
            q
        })
        .collect()
}

/// Simulates the queue fed at `arrival_rate` (bits/s) and served by
/// `rate_law` (bits/s as a function of the gain vector).
pub fn simulate<R>(
    rate_law: R,
    models: &[FadingModel],
    arrival_rate: f64,
    frame_duration: f64,
    frames: u64,
    seed: u64,
) -> Result<QueueTrace>
where
    R: Fn(&[f64]) -> f64 + Sync,
{
    if frames < MIN_FRAMES {
        return Err(Error::invalid("frames", format!("need at least {MIN_FRAMES} frames, got {frames}")));
    }
    if !(arrival_rate >= 0.0 && arrival_rate.is_finite()) {
        return Err(Error::invalid("arrival", format!("arrival rate must be nonnegative, got {arrival_rate}")));
    }
    if !(frame_duration > 0.0) {
        return Err(Error::invalid("T", "frame duration must be positive"));
    }
    let s = services(rate_law, models, frame_duration, frames, seed);
    if let Some(bad) = s.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::NonFiniteIntegrand { at: vec![*bad] });
    }
    let arrival_bits = arrival_rate * frame_duration;
    let mean_service = s.iter().sum::<f64>() / s.len() as f64;
    let mut trace = QueueTrace::from_queue(lindley(arrival_bits, &s), arrival_rate, frame_duration, seed);
    if arrival_bits >= mean_service {
        trace.warnings.push(format!(
            "unstable queue: arrivals {arrival_bits:.6e} bits/frame ≥ mean service {mean_service:.6e}"
        ));
    }
    Ok(trace)
}

/// Tail-exponent estimate with its batch-means confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    /// Estimated `θ` in 1/bit.
    pub theta: f64,
    pub std_error: f64,
    /// 95% confidence interval.
    pub ci: (f64, f64),
    /// Fitted queue-length window in bits.
    pub window: (f64, f64),
    /// Frames with `Q ≥` the lower window edge.
    pub exceedances: usize,
    pub batches: usize,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * p).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Count of values `≥ q` in a sorted slice.
fn tail_count(sorted: &[f64], q: f64) -> usize {
    sorted.len() - sorted.partition_point(|&v| v < q)
}

fn fit_slope(sorted: &[f64], levels: &[f64]) -> Option<f64> {
    let n = sorted.len() as f64;
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter_map(|&q| {
            let c = tail_count(sorted, q);
            (c > 0).then(|| (q, (c as f64 / n).ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Least-squares slope of `ln P(Q ≥ q)` over the quantile window of the
/// stationary trace, with a confidence interval from `batches` contiguous
/// batches.
pub fn estimate_decay(trace: &QueueTrace, window: (f64, f64), batches: usize) -> Result<DecayEstimate> {
    let (p_lo, p_hi) = window;
    if !(0.0 <= p_lo && p_lo < p_hi && p_hi < 1.0) {
        return Err(Error::invalid("window", format!("quantile window must satisfy 0 ≤ lo < hi < 1, got {window:?}")));
    }
    if batches < DEFAULT_BATCHES {
        return Err(Error::invalid("batches", format!("need at least {DEFAULT_BATCHES} batches, got {batches}")));
    }
    let data = trace.stationary();
    if data.is_empty() {
        return Err(Error::InsufficientTail { exceedances: 0, needed: MIN_EXCEEDANCES, required_frames: MIN_FRAMES });
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q_lo = quantile(&sorted, p_lo);
    let q_hi = quantile(&sorted, p_hi);
    let exceed_lo = tail_count(&sorted, q_lo.max(f64::MIN_POSITIVE));
    if exceed_lo < MIN_EXCEEDANCES || !(q_hi > q_lo) {
        // frames needed so that the lower edge collects enough exceedances
        let rate = (exceed_lo.max(1) as f64) / sorted.len() as f64;
        let required = ((MIN_EXCEEDANCES as f64 / rate) / (1.0 - WARMUP_FRACTION)).ceil() as u64;
        return Err(Error::InsufficientTail {
            exceedances: exceed_lo,
            needed: MIN_EXCEEDANCES,
            required_frames: required.max(trace.frames() as u64 + 1),
        });
    }
    // an empty queue is an atom at zero, not part of the exponential tail
    let start = if q_lo > 0.0 { q_lo } else { q_hi / FIT_LEVELS as f64 };
    let levels: Vec<f64> =
        (0..FIT_LEVELS).map(|i| start + (q_hi - start) * i as f64 / (FIT_LEVELS - 1) as f64).collect();
    let slope = fit_slope(&sorted, &levels).ok_or(Error::InsufficientTail {
        exceedances: exceed_lo,
        needed: MIN_EXCEEDANCES,
        required_frames: 2 * trace.frames() as u64,
    })?;
    let size = data.len() / batches;
    let mut estimates = Vec::with_capacity(batches);
    for b in 0..batches {
        let mut chunk = data[b * size..(b + 1) * size].to_vec();
        chunk.sort_by(f64::total_cmp);
        if let Some(s) = fit_slope(&chunk, &levels) {
            estimates.push(-s);
        }
    }
    let k = estimates.len();
    let (std_error, half) = if k >= 2 {
        let mean = estimates.iter().sum::<f64>() / k as f64;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        let se = (var / k as f64).sqrt();
        let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
            .map_err(|e| Error::invalid("batches", e.to_string()))?
            .inverse_cdf(0.975);
        (se, t * se)
    } else {
        (f64::NAN, f64::NAN)
    };
    let theta = -slope;
    Ok(DecayEstimate {
        theta,
        std_error,
        ci: (theta - half, theta + half),
        window: (q_lo, q_hi),
        exceedances: exceed_lo,
        batches: k,
    })
}
