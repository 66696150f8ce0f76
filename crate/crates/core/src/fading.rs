//! Per-user fading distributions and expectations over the channel-gain space.
//!
//! Every expectation `E_z{·}` in the crate is evaluated here, either by
//! deterministic quadrature or by seeded Monte Carlo. Monte Carlo work is cut
//! into fixed-size shards; shard `k` draws from its own ChaCha8 stream
//! `(seed, k)`, so results do not depend on how many worker threads run.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{self, GaussLaguerre, KRONROD_POINTS};

/// Samples per Monte Carlo shard.
pub const SHARD_SIZE: u64 = 1 << 16;

/// Identifies the generator in run metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha), stream = shard index, 65536 samples per shard";

/// Largest tensor-product quadrature we are willing to run.
const MAX_TENSOR_EVALUATIONS: f64 = 2e8;

/// Distribution of a user's channel power gain `z = |h|²`.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingModel {
    /// Rayleigh fading: `z` is exponential with the given mean.
    Rayleigh { mean_gain: f64 },
    /// Piecewise-linear density read from a table.
    Tabulated(TabulatedDensity),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingKind {
    Rayleigh,
    Tabulated,
}

impl Default for FadingModel {
    fn default() -> Self {
        Self::rayleigh()
    }
}

impl FadingModel {
    /// Unit-mean Rayleigh fading, density `e^{-z}`.
    pub fn rayleigh() -> Self {
        FadingModel::Rayleigh { mean_gain: 1.0 }
    }

    pub fn rayleigh_with_mean(mean_gain: f64) -> Result<Self> {
        if !(mean_gain > 0.0 && mean_gain.is_finite()) {
            return Err(Error::invalid("mean_gain", format!("must be positive, got {mean_gain}")));
        }
        Ok(FadingModel::Rayleigh { mean_gain })
    }

    pub fn kind(&self) -> FadingKind {
        match self {
            FadingModel::Rayleigh { .. } => FadingKind::Rayleigh,
            FadingModel::Tabulated(_) => FadingKind::Tabulated,
        }
    }

    pub fn mean_gain(&self) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => *mean_gain,
            FadingModel::Tabulated(t) => t.mean,
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                if z < 0.0 {
                    0.0
                } else {
                    (-z / mean_gain).exp() / mean_gain
                }
            }
            FadingModel::Tabulated(t) => t.density(z),
        }
    }

    /// `P(Z > z)`.
    pub fn tail_mass(&self, z: f64) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                if z <= 0.0 {
                    1.0
                } else {
                    (-z / mean_gain).exp()
                }
            }
            FadingModel::Tabulated(t) => 1.0 - t.cdf(z),
        }
    }

    /// Draws one gain.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingModel::Rayleigh { mean_gain } => {
                let e: f64 = rng.sample(Exp1);
                e * mean_gain
            }
            FadingModel::Tabulated(t) => t.inverse_cdf(rng.random::<f64>()),
        }
    }

    /// `∫_lo^hi f(z) p(z) dz` with `0 <= lo <= hi <= ∞`.
    pub fn integrate<F>(&self, lo: f64, hi: f64, rule: QuadRule, mut f: F) -> Result<f64>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let lo = lo.max(0.0);
        if hi.is_nan() || lo.is_nan() {
            return Err(Error::invalid("limits", "integration limits must not be NaN"));
        }
        if hi <= lo || lo.is_infinite() {
            return Ok(0.0);
        }
        match (self, rule) {
            (FadingModel::Rayleigh { mean_gain }, QuadRule::Graded) => {
                let m = *mean_gain;
                let breaks = quadrature::graded_breaks(lo, hi, m);
                let mut g = |z: f64| Ok(f(z)? * (-z / m).exp() / m);
                quadrature::composite(&breaks, &mut g)
            }
            (FadingModel::Rayleigh { mean_gain }, QuadRule::GaussLaguerre(n)) => {
                let m = *mean_gain;
                let rule = GaussLaguerre::cached(n)?;
                let mut tail = |from: f64| -> Result<f64> {
                    Ok((-from / m).exp() * rule.integrate(|x| f(from + m * x))?)
                };
                let upper = tail(lo)?;
                if hi.is_finite() {
                    Ok(upper - tail(hi)?)
                } else {
                    Ok(upper)
                }
            }
            (FadingModel::Tabulated(t), QuadRule::Graded) => {
                let top = hi.min(t.z_max());
                if top <= lo {
                    return Ok(0.0);
                }
                let mut breaks = quadrature::graded_breaks(lo, top, t.mean);
                breaks.extend(t.z.iter().copied().filter(|&z| z > lo && z < top));
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let mut g = |z: f64| Ok(f(z)? * t.density(z));
                quadrature::composite(&breaks, &mut g)
            }
            (FadingModel::Tabulated(_), QuadRule::GaussLaguerre(_)) => Err(Error::Unsupported(
                "Gauss-Laguerre quadrature applies to exponential (Rayleigh) gains only".into(),
            )),
        }
    }
}

/// Piecewise-linear density on `[0, z_max]`, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    z: Vec<f64>,
    p: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
}

impl TabulatedDensity {
    /// Builds the density from `(z, p(z))` knots. The table must start at
    /// `z = 0` and be strictly increasing; it is renormalized to unit mass.
    pub fn from_points(z: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if z.len() < 2 || z.len() != p.len() {
            return Err(Error::invalid("fading_table", "need at least two (z, p) knots of equal length"));
        }
        if z[0] != 0.0 {
            return Err(Error::invalid("fading_table", "table must start at z = 0"));
        }
        if z.windows(2).any(|w| w[1] <= w[0] || !w[1].is_finite()) {
            return Err(Error::invalid("fading_table", "z knots must be finite and strictly increasing"));
        }
        if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("fading_table", "density values must be finite and nonnegative"));
        }
        let mut cdf = Vec::with_capacity(z.len());
        cdf.push(0.0);
        let mut first_moment = 0.0;
        for i in 1..z.len() {
            let h = z[i] - z[i - 1];
            cdf.push(cdf[i - 1] + 0.5 * h * (p[i - 1] + p[i]));
            // ∫ z (linear p) over the segment
            first_moment += h / 6.0 * (p[i - 1] * (2.0 * z[i - 1] + z[i]) + p[i] * (z[i - 1] + 2.0 * z[i]));
        }
        let total = *cdf.last().unwrap();
        if total <= 0.0 {
            return Err(Error::invalid("fading_table", "density has zero mass"));
        }
        let p = p.into_iter().map(|v| v / total).collect();
        let cdf = cdf.into_iter().map(|v| v / total).collect();
        Ok(Self { z, p, cdf, mean: first_moment / total })
    }

    /// Tabulates `density` on `points` equispaced knots over `[0, z_max]`.
    pub fn from_fn(density: impl Fn(f64) -> f64, z_max: f64, points: usize) -> Result<Self> {
        if points < 2 || !(z_max > 0.0) {
            return Err(Error::invalid("fading_table", "need z_max > 0 and at least two knots"));
        }
        let z: Vec<f64> = (0..points).map(|i| z_max * i as f64 / (points - 1) as f64).collect();
        let p = z.iter().map(|&x| density(x)).collect();
        Self::from_points(z, p)
    }

    pub fn z_max(&self) -> f64 {
        *self.z.last().unwrap()
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.z, &self.p)
    }

    fn segment(&self, z: f64) -> usize {
        match self.z.binary_search_by(|v| v.total_cmp(&z)) {
            Ok(i) => i.min(self.z.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.z.len() - 2),
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 || z > self.z_max() {
            return 0.0;
        }
        let i = self.segment(z);
        let t = (z - self.z[i]) / (self.z[i + 1] - self.z[i]);
        self.p[i] + t * (self.p[i + 1] - self.p[i])
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= self.z_max() {
            return 1.0;
        }
        let i = self.segment(z);
        let dz = z - self.z[i];
        let slope = (self.p[i + 1] - self.p[i]) / (self.z[i + 1] - self.z[i]);
        self.cdf[i] + self.p[i] * dz + 0.5 * slope * dz * dz
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let i = match self.cdf.binary_search_by(|v| v.total_cmp(&u)) {
            Ok(i) => return self.z[i],
            Err(i) => i.saturating_sub(1).min(self.z.len() - 2),
        };
        let need = u - self.cdf[i];
        let h = self.z[i + 1] - self.z[i];
        let a = 0.5 * (self.p[i + 1] - self.p[i]) / h;
        let b = self.p[i];
        // a·dz² + b·dz = need
        let dz = if a.abs() < 1e-14 * b.max(1e-300) {
            need / b.max(1e-300)
        } else {
            let disc = (b * b + 4.0 * a * need).max(0.0);
            2.0 * need / (b + disc.sqrt())
        };
        self.z[i] + dz.clamp(0.0, h)
    }
}

/// Channel power gains of all users in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<f64>);

impl GainVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("z", "channel gains must be finite and nonnegative"));
        }
        Ok(Self(z))
    }

    pub fn users(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GainVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Deterministic quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadRule {
    /// Graded composite 15-point Kronrod rule.
    #[default]
    Graded,
    /// Gauss–Laguerre with the given number of nodes (Rayleigh gains only).
    GaussLaguerre(usize),
}

impl QuadRule {
    /// Integrand evaluations per one-dimensional expectation over `[0, ∞)`.
    pub fn nodes_per_dimension(&self) -> usize {
        match self {
            QuadRule::Graded => {
                (quadrature::GRADED_MAX_EXPONENT - quadrature::GRADED_MIN_EXPONENT + 1) as usize * KRONROD_POINTS
            }
            QuadRule::GaussLaguerre(n) => *n,
        }
    }
}

/// How an expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature(QuadRule),
    MonteCarlo { samples: u64, seed: u64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Quadrature(QuadRule::Graded)
    }
}

impl Method {
    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Method::MonteCarlo { samples, seed }
    }

    /// Short description for output metadata.
    pub fn describe(&self) -> String {
        match self {
            Method::Quadrature(QuadRule::Graded) => format!(
                "quadrature: graded composite Kronrod-15, {} nodes per dimension",
                QuadRule::Graded.nodes_per_dimension()
            ),
            Method::Quadrature(QuadRule::GaussLaguerre(n)) => format!("quadrature: Gauss-Laguerre, {n} nodes"),
            Method::MonteCarlo { samples, seed } => {
                format!("monte-carlo: {samples} samples, seed {seed}, rng {RNG_NAME}")
            }
        }
    }
}

/// Expectation estimate. `std_error` is present for Monte Carlo only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

impl Estimate {
    fn exact(value: f64) -> Self {
        Self { value, std_error: None }
    }
}

/// `E{f(z)}` for one user.
pub fn expect_1d<F>(f: F, model: &FadingModel, method: Method) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    match method {
        Method::Quadrature(rule) => model
            .integrate(0.0, f64::INFINITY, rule, |z| Ok(f(z)))
            .map(Estimate::exact),
        Method::MonteCarlo { samples, seed } => {
            monte_carlo_mean(|z| f(z[0]), std::slice::from_ref(model), samples, seed)
        }
    }
}

/// `E{f(z1, z2)}` for two independent users.
pub fn expect_2d<F>(f: F, model1: &FadingModel, model2: &FadingModel, method: Method) -> Result<Estimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    expect_nd(|z| f(z[0], z[1]), &[model1.clone(), model2.clone()], method)
}

/// `E{f(z)}` over independent users by tensor-product quadrature or Monte Carlo.
pub fn expect_nd<F>(f: F, models: &[FadingModel], method: Method) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if models.is_empty() {
        return Err(Error::invalid("models", "need at least one user"));
    }
    match method {
        Method::Quadrature(rule) => {
            let evals = (rule.nodes_per_dimension() as f64).powi(models.len() as i32);
            if evals > MAX_TENSOR_EVALUATIONS {
                return Err(Error::Unsupported(format!(
                    "tensor quadrature over {} users needs {evals:.1e} evaluations; use monte-carlo",
                    models.len()
                )));
            }
            let mut point = vec![0.0; models.len()];
            tensor(&f, models, rule, 0, &mut point).map(Estimate::exact)
        }
        Method::MonteCarlo { samples, seed } => monte_carlo_mean(f, models, samples, seed),
    }
}

fn tensor<F>(f: &F, models: &[FadingModel], rule: QuadRule, depth: usize, point: &mut Vec<f64>) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    models[depth].integrate(0.0, f64::INFINITY, rule, |z| {
        point[depth] = z;
        if depth + 1 == models.len() {
            Ok(f(point))
        } else {
            tensor(f, models, rule, depth + 1, point).map_err(|e| e.at_outer(z))
        }
    })
}

/// Two-dimensional expectation whose inner integrand changes form across a
/// boundary curve:
///
/// `E = ∫ p_o(x) [ ∫_0^{b(x)} below(x, y) p_i(y) dy + ∫_{b(x)}^∞ above(x, y) p_i(y) dy ] dx`.
///
/// The inner integral is split exactly at `b(x)` (clamped to `[0, ∞]`).
pub fn expect_split_2d<B, L, U>(
    outer: &FadingModel,
    inner: &FadingModel,
    rule: QuadRule,
    boundary: B,
    below: L,
    above: U,
) -> Result<f64>
where
    B: Fn(f64) -> f64,
    L: Fn(f64, f64) -> f64,
    U: Fn(f64, f64) -> f64,
{
    outer.integrate(0.0, f64::INFINITY, rule, |x| {
        let b = boundary(x);
        let b = if b.is_nan() { 0.0 } else { b.max(0.0) };
        let lower = inner.integrate(0.0, b, rule, |y| Ok(below(x, y)));
        let upper = inner.integrate(b, f64::INFINITY, rule, |y| Ok(above(x, y)));
        match (lower, upper) {
            (Ok(l), Ok(u)) => Ok(l + u),
            (Err(e), _) | (_, Err(e)) => Err(e.at_outer(x)),
        }
    })
}

/// Streams `n` i.i.d. gain vectors in shard order and maps each through `f`.
pub fn map_samples<T, F>(models: &[FadingModel], seed: u64, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    let chunks: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let count = SHARD_SIZE.min(n - shard * SHARD_SIZE) as usize;
            let mut rng = shard_rng(seed, shard);
            let mut z = vec![0.0; models.len()];
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                for (slot, m) in z.iter_mut().zip(models) {
                    *slot = m.draw(&mut rng);
                }
                out.push(f(&z));
            }
            out
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// `n` i.i.d. gains for one user. Identical `(seed, n)` reproduce the sequence.
pub fn sample(model: &FadingModel, seed: u64, n: u64) -> Vec<f64> {
    map_samples(std::slice::from_ref(model), seed, n, |z| z[0])
}

/// Sample mean and standard error of `f(z)`; shards are reduced in order.
pub fn monte_carlo_mean<F>(f: F, models: &[FadingModel], samples: u64, seed: u64) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::invalid("samples", "Monte Carlo needs at least two samples"));
    }
    let shards = samples.div_ceil(SHARD_SIZE);
    let partials: Vec<Result<(f64, f64, f64)>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let count = SHARD_SIZE.min(samples - shard * SHARD_SIZE);
            let mut rng = shard_rng(seed, shard);
            let mut z = vec![0.0; models.len()];
            // Welford within the shard
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..count {
                for (slot, m) in z.iter_mut().zip(models) {
                    *slot = m.draw(&mut rng);
                }
                let v = f(&z);
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand { at: z.clone() });
                }
                let delta = v - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (v - mean);
            }
            Ok((count as f64, mean, m2))
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for part in partials {
        let (nb, mb, m2b) = part?;
        let total = n + nb;
        let delta = mb - mean;
        mean += delta * nb / total;
        m2 += m2b + delta * delta * n * nb / total;
        n = total;
    }
    let var = m2 / (n - 1.0);
    Ok(Estimate { value: mean, std_error: Some((var / n).sqrt()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const Q: Method = Method::Quadrature(QuadRule::Graded);

    #[test]
    fn normalization_and_mean() {
        let m = FadingModel::rayleigh();
        assert_relative_eq!(expect_1d(|_| 1.0, &m, Q).unwrap().value, 1.0, epsilon = 1e-10);
        assert_relative_eq!(expect_1d(|z| z, &m, Q).unwrap().value, 1.0, epsilon = 1e-8);
        let lag = Method::Quadrature(QuadRule::GaussLaguerre(64));
        assert_relative_eq!(expect_1d(|z| z, &m, lag).unwrap().value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ergodic_log_closed_form() {
        let m = FadingModel::rayleigh();
        let v = expect_1d(|z| (1.0 + z).log2(), &m, Q).unwrap().value;
        assert_relative_eq!(v, crate::special::rayleigh_ergodic_capacity(1.0), max_relative = 1e-12);
    }

    #[test]
    fn graded_rule_resolves_steep_boundary_layer() {
        // mpmath.quad reference for E{(1+10 z)^-β}, β = 0.1·200/ln 2
        let beta = 20.0 / std::f64::consts::LN_2;
        let m = FadingModel::rayleigh();
        let v = expect_1d(|z| (1.0 + 10.0 * z).powf(-beta), &m, Q).unwrap().value;
        let c = -v.ln() / 20.0;
        assert_relative_eq!(c, 0.281_663_726_007_719_05, max_relative = 1e-10);
    }

    #[test]
    fn two_dimensional_examples() {
        let m = FadingModel::rayleigh();
        assert_relative_eq!(expect_2d(|_, _| 1.0, &m, &m, Q).unwrap().value, 1.0, epsilon = 1e-10);
        assert_relative_eq!(expect_2d(|a, b| a * b, &m, &m, Q).unwrap().value, 1.0, epsilon = 1e-8);
        let half = expect_split_2d(&m, &m, QuadRule::Graded, |z1| z1, |_, _| 1.0, |_, _| 0.0).unwrap();
        assert_relative_eq!(half, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn indicator_by_monte_carlo_is_half() {
        let m = FadingModel::rayleigh();
        let est = expect_2d(|a, b| if b < a { 1.0 } else { 0.0 }, &m, &m, Method::monte_carlo(200_000, 3)).unwrap();
        assert!((est.value - 0.5).abs() < 3.0 * est.std_error.unwrap());
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let m = FadingModel::rayleigh();
        let err = expect_1d(|z| if z > 3.0 { f64::INFINITY } else { 1.0 }, &m, Q).unwrap_err();
        match err {
            Error::NonFiniteIntegrand { at } => assert!(at[0] > 3.0),
            e => panic!("unexpected {e}"),
        }
        let err = expect_2d(|_, b| if b > 2.0 { f64::NAN } else { 1.0 }, &m, &m, Q).unwrap_err();
        match err {
            Error::NonFiniteIntegrand { at } => {
                assert_eq!(at.len(), 2);
                assert!(at[1] > 2.0);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn sampling_is_reproducible_and_unit_mean() {
        let m = FadingModel::rayleigh();
        let a = sample(&m, 7, 1_000_000);
        let b = sample(&m, 7, 1_000_000);
        assert_eq!(a, b);
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        assert!((0.997..=1.003).contains(&mean), "mean {mean}");
        assert!(sample(&m, 7, 0).is_empty());
        // prefix property: shards do not depend on the total count
        assert_eq!(&sample(&m, 7, 100)[..], &a[..100]);
    }

    #[test]
    fn monte_carlo_agrees_with_quadrature_and_error_scales() {
        let m = FadingModel::rayleigh();
        let f = |z: f64| (1.0 + z).log2();
        let q = expect_1d(f, &m, Q).unwrap().value;
        let mc = expect_1d(f, &m, Method::monte_carlo(1_000_000, 11)).unwrap();
        assert!((mc.value - q).abs() < 3.0 * mc.std_error.unwrap());
        let small = expect_1d(f, &m, Method::monte_carlo(250_000, 11)).unwrap();
        let ratio = small.std_error.unwrap() / mc.std_error.unwrap();
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn laguerre_exact_for_polynomials() {
        for n in [8usize, 16, 32] {
            let rule = GaussLaguerre::new(n).unwrap();
            for deg in 0..(2 * n) as i32 {
                let v = rule.integrate(|x| Ok(x.powi(deg))).unwrap();
                let exact: f64 = (1..=deg).map(f64::from).product();
                assert_relative_eq!(v, exact, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn laguerre_64_exact_for_high_degree_polynomial() {
        let rule = GaussLaguerre::new(64).unwrap();
        // p(x) = 1 + x^40 / 40! + x^127 / 127!, E = 3
        let ln_f40: f64 = (1..=40).map(|k| (k as f64).ln()).sum();
        let ln_f127: f64 = (1..=127).map(|k| (k as f64).ln()).sum();
        let v = rule
            .integrate(|x| {
                let l = x.ln();
                Ok(1.0 + (40.0 * l - ln_f40).exp() + (127.0 * l - ln_f127).exp())
            })
            .unwrap();
        assert_relative_eq!(v, 3.0, max_relative = 1e-10);
    }

    #[test]
    fn tabulated_density_normalizes_and_integrates() {
        let t = TabulatedDensity::from_fn(|z| (-z).exp(), 40.0, 4001).unwrap();
        let m = FadingModel::Tabulated(t.clone());
        assert_eq!(m.kind(), FadingKind::Tabulated);
        let one = expect_1d(|_| 1.0, &m, Q).unwrap().value;
        assert_relative_eq!(one, 1.0, epsilon = 1e-8);
        assert_relative_eq!(m.mean_gain(), 1.0, max_relative = 1e-4);
        let cap = expect_1d(|z| (1.0 + z).log2(), &m, Q).unwrap().value;
        assert_relative_eq!(cap, crate::special::rayleigh_ergodic_capacity(1.0), max_relative = 1e-4);
        assert!(matches!(
            expect_1d(|z| z, &m, Method::Quadrature(QuadRule::GaussLaguerre(8))),
            Err(Error::Unsupported(_))
        ));
        let draws = sample(&m, 5, 400_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - m.mean_gain()).abs() < 0.01);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(TabulatedDensity::from_points(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedDensity::from_points(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(TabulatedDensity::from_points(vec![0.0, 1.0], vec![-1.0, 1.0]).is_err());
        assert!(TabulatedDensity::from_points(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn expectation_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..5.0) {
            let m = FadingModel::rayleigh();
            let f = |z: f64| a * (1.0 + c * z).ln();
            let g = |z: f64| b * (-(c * z)).exp();
            let ef = expect_1d(f, &m, Q).unwrap().value;
            let eg = expect_1d(g, &m, Q).unwrap().value;
            let efg = expect_1d(|z| f(z) + g(z), &m, Q).unwrap().value;
            prop_assert!((ef + eg - efg).abs() <= 1e-12);
        }

        #[test]
        fn graded_split_matches_whole(split in 0.0f64..8.0, s in 0.1f64..10.0) {
            let m = FadingModel::rayleigh();
            let f = |z: f64| Ok((1.0 + s * z).powf(-2.0));
            let whole = m.integrate(0.0, f64::INFINITY, QuadRule::Graded, f).unwrap();
            let parts = m.integrate(0.0, split, QuadRule::Graded, f).unwrap()
                + m.integrate(split, f64::INFINITY, QuadRule::Graded, f).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12);
        }
    }
}
