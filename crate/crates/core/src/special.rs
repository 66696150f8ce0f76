//! Closed forms used as references for Rayleigh-fading expectations.

use std::f64::consts::LN_2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_int_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 is defined here for x > 0");
    if x <= 1.0 {
        // -γ - ln x - Σ (-x)^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `E{log₂(1 + SNR·z)}` for `z ~ Exp(1)`: `e^{1/SNR} E₁(1/SNR) / ln 2`.
pub fn rayleigh_ergodic_capacity(snr: f64) -> f64 {
    let a = 1.0 / snr;
    (a.exp() * exp_int_e1(a)) / LN_2
}

/// Average power of the waterfilling policy `(1/α - 1/z)⁺` under `z ~ Exp(1)`:
/// `e^{-α}/α - E₁(α)`.
pub fn rayleigh_waterfilling_power(cutoff: f64) -> f64 {
    (-cutoff).exp() / cutoff - exp_int_e1(cutoff)
}

/// Ergodic rate `E{log₂(z/α)⁺}` of the waterfilling policy: `E₁(α)/ln 2`.
pub fn rayleigh_waterfilling_capacity(cutoff: f64) -> f64 {
    exp_int_e1(cutoff) / LN_2
}
