//! Effective capacity of block-fading service processes.
//!
//! With i.i.d. frames the service in frame `i` is `T·R[i]` bits and the
//! effective capacity reduces to the one-frame log-MGF
//! `C(θ) = -(1/θT) ln E_z{e^{-θT R(z)}}` bits/s.

use std::f64::consts::LN_2;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::fading::{expect_nd, FadingModel, Method};
use crate::rates::check_fraction;

/// QoS exponent together with the frame and bandwidth it applies to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosSpec {
    /// 1/bit
    pub theta: f64,
    /// seconds
    pub frame_duration: f64,
    /// Hz
    pub bandwidth: f64,
}

impl QosSpec {
    pub fn new(theta: f64, frame_duration: f64, bandwidth: f64) -> Result<Self> {
        let q = Self { theta, frame_duration, bandwidth };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let product = self.theta * self.frame_duration * self.bandwidth;
        if !(product > 0.0 && product.is_finite()) {
            return Err(Error::invalid("theta", format!("θTB must be positive and finite, got {product}")));
        }
        Ok(())
    }

    /// `θT`, the exponent per bit/s of rate.
    pub fn theta_t(&self) -> f64 {
        self.theta * self.frame_duration
    }

    /// `θTB`.
    pub fn theta_tb(&self) -> f64 {
        self.theta * self.frame_duration * self.bandwidth
    }

    /// Normalized exponent `β = θTB / ln 2`, so `e^{-θT·B log2 x} = x^{-β}`.
    pub fn beta(&self) -> f64 {
        self.theta_tb() / LN_2
    }
}

/// Effective capacity with its evaluation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EffCapResult {
    pub bits_per_second: f64,
    /// bits/s/Hz, always `bits_per_second / B`.
    pub normalized: f64,
    /// Standard error of `normalized` (Monte Carlo only, delta method).
    pub std_error: Option<f64>,
    pub method: String,
}

impl EffCapResult {
    pub(crate) fn from_mgf(mgf: f64, mgf_std_error: Option<f64>, qos: &QosSpec, method: &Method) -> Result<Self> {
        if !(mgf > f64::MIN_POSITIVE) {
            return Err(Error::MgfUnderflow { mgf });
        }
        let bits_per_second = -mgf.ln() / qos.theta_t();
        Ok(Self::from_bits(bits_per_second, mgf_std_error.map(|se| se / mgf / qos.theta_tb()), qos, method))
    }

    pub(crate) fn from_bits(bits_per_second: f64, std_error: Option<f64>, qos: &QosSpec, method: &Method) -> Self {
        Self {
            bits_per_second,
            normalized: bits_per_second / qos.bandwidth,
            std_error,
            method: method.describe(),
        }
    }
}

/// Normalized effective capacity from a one-frame MGF value `E{x^{-β}}`.
pub fn normalized_from_mgf(mgf: f64, theta_tb: f64) -> f64 {
    -mgf.ln() / theta_tb
}

/// Effective capacity of `rate_law` (bits/s as a function of the gain vector).
pub fn effective_capacity<R>(rate_law: R, models: &[FadingModel], qos: &QosSpec, method: Method) -> Result<EffCapResult>
where
    R: Fn(&[f64]) -> f64 + Sync,
{
    qos.validate()?;
    let theta_t = qos.theta_t();
    let est = expect_nd(|z| (-theta_t * rate_law(z)).exp(), models, method)?;
    EffCapResult::from_mgf(est.value, est.std_error, qos, &method)
}

/// Log-domain variant of [`effective_capacity`] for service laws whose
/// `e^{-θT R}` underflows everywhere: the smallest sampled rate is factored out
/// before exponentiating (two passes over the same deterministic nodes or
/// the same seeded samples).
pub fn effective_capacity_log_domain<R>(
    rate_law: R,
    models: &[FadingModel],
    qos: &QosSpec,
    method: Method,
) -> Result<EffCapResult>
where
    R: Fn(&[f64]) -> f64 + Sync,
{
    qos.validate()?;
    let theta_t = qos.theta_t();
    let min_rate = Mutex::new(f64::INFINITY);
    expect_nd(
        |z| {
            let r = rate_law(z);
            let mut m = min_rate.lock().unwrap_or_else(|e| e.into_inner());
            if r < *m {
                *m = r;
            }
            0.0
        },
        models,
        method,
    )?;
    let shift = min_rate.into_inner().unwrap_or_else(|e| e.into_inner());
    if !shift.is_finite() {
        return Err(Error::invalid("rate_law", "rate law is not finite at the evaluation nodes"));
    }
    let est = expect_nd(|z| (-theta_t * (rate_law(z) - shift)).exp(), models, method)?;
    if !(est.value > 0.0) {
        return Err(Error::MgfUnderflow { mgf: est.value });
    }
    let bits_per_second = shift - est.value.ln() / theta_t;
    let se = est.std_error.map(|se| se / est.value / qos.theta_tb());
    Ok(EffCapResult::from_bits(bits_per_second, se, qos, &method))
}

/// Effective capacity of a discrete service law given as `(rate, probability)` pairs.
pub fn effective_capacity_discrete(law: &[(f64, f64)], qos: &QosSpec) -> Result<f64> {
    qos.validate()?;
    let total: f64 = law.iter().map(|(_, p)| p).sum();
    if law.is_empty() || (total - 1.0).abs() > 1e-12 || law.iter().any(|(_, p)| *p < 0.0) {
        return Err(Error::invalid("law", "probabilities must be nonnegative and sum to one"));
    }
    let theta_t = qos.theta_t();
    let mgf: f64 = law.iter().map(|(r, p)| p * (-theta_t * r).exp()).sum();
    if !(mgf > f64::MIN_POSITIVE) {
        return Err(Error::MgfUnderflow { mgf });
    }
    Ok(-mgf.ln() / theta_t)
}

/// Effective capacity of one TDMA user holding a fixed fraction `delta` of
/// every frame, with power boosted by `1/delta` inside its slot. Service per
/// frame is `δ T B log2(1 + SNR z / δ)` bits.
pub fn effective_capacity_tdma(
    delta: f64,
    model: &FadingModel,
    snr: f64,
    qos: &QosSpec,
    method: Method,
) -> Result<EffCapResult> {
    check_fraction(delta)?;
    qos.validate()?;
    let exponent = delta * qos.beta();
    let gain = snr / delta;
    let est = expect_nd(|z| (-exponent * (gain * z[0]).ln_1p()).exp(), std::slice::from_ref(model), method)?;
    EffCapResult::from_mgf(est.value, est.std_error, qos, &method)
}

/// Single-user effective capacity at fixed power (bits/s/Hz), via `(1+SNR z)^{-β}`.
pub fn single_user_normalized(model: &FadingModel, snr: f64, qos: &QosSpec, method: Method) -> Result<EffCapResult> {
    effective_capacity_tdma(1.0, model, snr, qos, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::QuadRule;
    use crate::rates::{vertex_rates, DecodingOrder, SystemParams};
    use approx::assert_relative_eq;

    const Q: Method = Method::Quadrature(QuadRule::Graded);

    fn default_qos(theta: f64) -> QosSpec {
        QosSpec::new(theta, 2e-3, 1e5).unwrap()
    }

    #[test]
    fn constant_rate_is_its_own_capacity() {
        let m = [FadingModel::rayleigh()];
        for theta in [1e-4, 0.01, 1.0] {
            let c = effective_capacity(|_| 1234.5, &m, &default_qos(theta), Q).unwrap();
            assert_relative_eq!(c.bits_per_second, 1234.5, max_relative = 1e-12);
            assert_eq!(c.normalized, c.bits_per_second / 1e5);
        }
    }

    #[test]
    fn two_point_law() {
        let qos = QosSpec::new(1.0, 1.0, 1.0).unwrap();
        let c = effective_capacity_discrete(&[(0.0, 0.5), (1.0, 0.5)], &qos).unwrap();
        let expected = -((1.0 + (-1.0f64).exp()) / 2.0).ln();
        assert_relative_eq!(c, expected, epsilon = 1e-15);
        assert_relative_eq!(c, 0.3799, epsilon = 1e-4);
        assert!(effective_capacity_discrete(&[(0.0, 0.5)], &qos).is_err());
    }

    #[test]
    fn ergodic_limit() {
        let qos = QosSpec::new(1e-4, 1.0, 1.0).unwrap();
        let c = single_user_normalized(&FadingModel::rayleigh(), 1.0, &qos, Q).unwrap();
        let target = crate::special::rayleigh_ergodic_capacity(1.0);
        assert!((c.normalized - target).abs() / target < 0.005);
        assert!(c.normalized < target);
    }

    #[test]
    fn tdma_reductions_and_limits() {
        let m = FadingModel::rayleigh();
        let qos = default_qos(0.01);
        let full = effective_capacity_tdma(1.0, &m, 1.0, &qos, Q).unwrap();
        let direct = effective_capacity(|z| 1e5 * (1.0 + z[0]).log2(), &[m.clone()], &qos, Q).unwrap();
        assert_relative_eq!(full.normalized, direct.normalized, max_relative = 1e-12);
        let tiny = effective_capacity_tdma(1e-3, &m, 1.0, &qos, Q).unwrap();
        let half = effective_capacity_tdma(0.5, &m, 1.0, &qos, Q).unwrap();
        assert!(tiny.normalized < half.normalized);
        assert!(effective_capacity_tdma(0.0, &m, 1.0, &qos, Q).is_err());
    }

    #[test]
    fn tdma_half_slot_matches_monte_carlo_oracle() {
        // numpy Monte Carlo, 10^7 samples: 0.517591 ± 0.000112 (mpmath: 0.5176048)
        let c = effective_capacity_tdma(0.5, &FadingModel::rayleigh(), 1.0, &default_qos(0.01), Q).unwrap();
        assert!((c.normalized - 0.517_591_434_928_633).abs() < 3.0 * 0.000_112_445_961);
        assert_relative_eq!(c.normalized, 0.517_604_780_539_732_3, max_relative = 1e-10);
    }

    #[test]
    fn underflow_is_reported_and_log_domain_recovers() {
        let m = [FadingModel::rayleigh()];
        let qos = QosSpec::new(1.0, 1.0, 1.0).unwrap();
        let law = |z: &[f64]| 1000.0 + z[0];
        match effective_capacity(law, &m, &qos, Q) {
            Err(Error::MgfUnderflow { .. }) => {}
            other => panic!("expected underflow, got {other:?}"),
        }
        let c = effective_capacity_log_domain(law, &m, &qos, Q).unwrap();
        // E{e^{-z}} = 1/2 for z ~ Exp(1)
        assert_relative_eq!(c.bits_per_second, 1000.0 + 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn monotone_in_theta_and_bounded_by_mean() {
        let m = [FadingModel::rayleigh()];
        let law = |z: &[f64]| 1e5 * (1.0 + z[0]).log2();
        let mean = crate::fading::expect_nd(law, &m, Q).unwrap().value;
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let theta = 1e-5 * 10f64.powf(k as f64 * 0.25);
            let c = effective_capacity(law, &m, &default_qos(theta), Q).unwrap().bits_per_second;
            assert!(c <= last + 1e-9 && c >= 0.0 && c <= mean * (1.0 + 1e-12));
            last = c;
        }
    }

    #[test]
    fn time_sharing_two_laws_beats_mixing_capacities() {
        use rand::{Rng, SeedableRng};
        let models = vec![FadingModel::rayleigh(); 2];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let p = SystemParams::with_defaults(
                vec![rng.random_range(0.2..10.0), rng.random_range(0.2..10.0)],
                vec![0.01, 0.01],
            )
            .unwrap();
            let alpha: f64 = rng.random_range(0.05..0.95);
            let theta = rng.random_range(1e-3..0.05);
            let qos = default_qos(theta);
            let user = rng.random_range(0..2usize);
            let a = DecodingOrder::identity(2);
            let b = DecodingOrder::from_one_based(&[2, 1]).unwrap();
            let ra = |z: &[f64]| vertex_rates(z, &p.snr, &a, 1e5)[user];
            let rb = |z: &[f64]| vertex_rates(z, &p.snr, &b, 1e5)[user];
            let ca = effective_capacity(ra, &models, &qos, Q).unwrap().normalized;
            let cb = effective_capacity(rb, &models, &qos, Q).unwrap().normalized;
            let mix = effective_capacity(|z| alpha * ra(z) + (1.0 - alpha) * rb(z), &models, &qos, Q)
                .unwrap()
                .normalized;
            assert!(mix >= alpha * ca + (1.0 - alpha) * cb - 1e-12);
        }
    }

    #[test]
    fn monte_carlo_within_three_standard_errors() {
        let m = FadingModel::rayleigh();
        let qos = default_qos(0.01);
        let q = single_user_normalized(&m, 1.0, &qos, Q).unwrap();
        let mc = single_user_normalized(&m, 1.0, &qos, Method::monte_carlo(1_000_000, 5)).unwrap();
        assert!((q.normalized - mc.normalized).abs() < 3.0 * mc.std_error.unwrap());
    }
}
