//! Uncertainty models, folded-normal expectations and seeded random streams.
//!
//! Streams come from ChaCha8 keyed by the master seed, with the trial index
//! selecting the ChaCha stream id. Two trials never share draws and a
//! `(master_seed, trial)` pair always replays the same sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::Graph;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Gaussian multiplicative edge noise and additive frequency noise.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianUncertainty {
    /// Mean of each edge weight, in edge listing order.
    pub edge_means: Vec<f64>,
    /// Shared variance of every edge weight.
    pub edge_variance: f64,
    /// Constant part of each node frequency (rad/s).
    pub freq_const: Vec<f64>,
    pub freq_noise_means: Vec<f64>,
    pub freq_noise_variances: Vec<f64>,
}

impl GaussianUncertainty {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        check_len("edge_means", g.edge_count(), self.edge_means.len())?;
        check_len("freq_const", g.node_count(), self.freq_const.len())?;
        check_len(
            "freq_noise_means",
            g.node_count(),
            self.freq_noise_means.len(),
        )?;
        check_len(
            "freq_noise_variances",
            g.node_count(),
            self.freq_noise_variances.len(),
        )?;
        if !(self.edge_variance >= 0.0) {
            return Err(Error::NegativeVariance(self.edge_variance));
        }
        if let Some(&v) = self.freq_noise_variances.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::NegativeVariance(v));
        }
        for &v in self
            .edge_means
            .iter()
            .chain(&self.freq_const)
            .chain(&self.freq_noise_means)
        {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(())
    }

    /// Mean of each node's total frequency `omega_i + E[noise_i]`.
    pub fn freq_means(&self) -> Vec<f64> {
        self.freq_const
            .iter()
            .zip(&self.freq_noise_means)
            .map(|(w, m)| w + m)
            .collect()
    }

    /// `(min, max)` of `|edge mean|`.
    pub fn abs_mean_range(&self) -> (f64, f64) {
        let abs = self.edge_means.iter().map(|m| m.abs());
        let lo = abs.clone().fold(f64::INFINITY, f64::min);
        let hi = abs.fold(0.0, f64::max);
        (lo, hi)
    }
}

/// Each edge present with probability `p` at every step, frequencies constant.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliModel {
    pub p: f64,
    pub freq_const: Vec<f64>,
}

impl BernoulliModel {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Parameter(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        check_len("freq_const", g.node_count(), self.freq_const.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyModel {
    Gaussian(GaussianUncertainty),
    Bernoulli(BernoulliModel),
}

impl UncertaintyModel {
    pub fn validate(&self, g: &Graph) -> Result<()> {
        match self {
            Self::Gaussian(m) => m.validate(g),
            Self::Bernoulli(m) => m.validate(g),
        }
    }

    /// True when no step consumes randomness.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Self::Gaussian(m) => {
                m.edge_variance == 0.0 && m.freq_noise_variances.iter().all(|v| *v == 0.0)
            }
            Self::Bernoulli(m) => m.p == 0.0 || m.p == 1.0,
        }
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPolicy {
    pub master_seed: u64,
}

impl SeedPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn stream(&self, trial: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial);
        Stream(rng)
    }
}

/// A reproducible random stream owned by one execution context.
#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn standard_normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

/// One weight per edge; each undirected edge is shared by both endpoints.
pub fn sample_edge_weights(model: &GaussianUncertainty, stream: &mut Stream) -> Vec<f64> {
    let sd = model.edge_variance.sqrt();
    model
        .edge_means
        .iter()
        .map(|&mu| mu + sd * stream.standard_normal())
        .collect()
}

/// `omega_i + noise_i` per node.
pub fn sample_frequencies(model: &GaussianUncertainty, stream: &mut Stream) -> Vec<f64> {
    model
        .freq_const
        .iter()
        .zip(&model.freq_noise_means)
        .zip(&model.freq_noise_variances)
        .map(|((w, m), v)| w + m + v.sqrt() * stream.standard_normal())
        .collect()
}

pub fn sample_bernoulli_mask(model: &BernoulliModel, m: usize, stream: &mut Stream) -> Vec<f64> {
    (0..m)
        .map(|_| if stream.bernoulli(model.p) { 1.0 } else { 0.0 })
        .collect()
}

/// Error function, accurate to about 1e-15 absolute.
///
/// Uses the all-positive series `erf(x) = 2/sqrt(pi) e^{-x^2} sum (2x^2)^n x / (2n+1)!!`
/// below |x| = 3 and a Lentz continued fraction for `erfc` above.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let r = if ax < 3.0 {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    r.copysign(x)
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    if x > 27.0 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (f * std::f64::consts::PI.sqrt())
}

/// `E|Z|` for `Z ~ N(mu, variance)`.
pub fn folded_normal_mean(mu: f64, variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    if variance == 0.0 {
        return Ok(mu.abs());
    }
    let two_var = 2.0 * variance;
    Ok(
        (two_var / std::f64::consts::PI).sqrt() * (-mu * mu / two_var).exp()
            + mu * erf(mu / two_var.sqrt()),
    )
}

/// `sqrt(2 variance / pi) + |mu|`, an upper bound on [`folded_normal_mean`].
pub fn folded_normal_upper_bound(mu: f64, variance: f64) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::NegativeVariance(variance));
    }
    Ok(noise_gap_term(variance) + mu.abs())
}

/// `sqrt(2 variance / pi)`.
pub fn noise_gap_term(variance: f64) -> f64 {
    (2.0 * variance / std::f64::consts::PI).sqrt()
}

/// How the largest expected frequency gap is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapMode {
    /// Max over edges of `|omega_i - omega_j|`, constant parts only.
    #[default]
    NominalEdgewise,
    /// Max over node pairs of the exact folded-normal `E|w_i - w_j|`.
    ExactPairwise,
    /// Max over node pairs of the folded-normal upper bound.
    BoundPairwise,
}

impl std::str::FromStr for GapMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nominal" | "nominal-edgewise" => Ok(Self::NominalEdgewise),
            "exact" | "exact-pairwise" => Ok(Self::ExactPairwise),
            "bound" | "bound-pairwise" => Ok(Self::BoundPairwise),
            other => Err(Error::Parameter(format!(
                "unknown gap mode '{other}' (expected nominal, exact or bound)"
            ))),
        }
    }
}

impl std::fmt::Display for GapMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::NominalEdgewise => "nominal-edgewise",
            Self::ExactPairwise => "exact-pairwise",
            Self::BoundPairwise => "bound-pairwise",
        })
    }
}

fn all_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

/// `E_max |delta omega|` for a Gaussian model.
pub fn max_expected_freq_gap(model: &GaussianUncertainty, g: &Graph, mode: GapMode) -> Result<f64> {
    model.validate(g)?;
    match mode {
        GapMode::NominalEdgewise => Ok(constant_gap(&model.freq_const, g, mode)),
        GapMode::ExactPairwise | GapMode::BoundPairwise => {
            let means = model.freq_means();
            let vars = &model.freq_noise_variances;
            let mut best: f64 = 0.0;
            for (i, j) in all_pairs(g.node_count()) {
                let mu = means[i] - means[j];
                let var = vars[i] + vars[j];
                let e = if mode == GapMode::ExactPairwise {
                    folded_normal_mean(mu, var)?
                } else {
                    folded_normal_upper_bound(mu, var)?
                };
                best = best.max(e);
            }
            Ok(best)
        }
    }
}

/// `max |E[delta omega]|` over the pairs the mode ranges over.
pub fn max_mean_freq_gap(model: &GaussianUncertainty, g: &Graph, mode: GapMode) -> f64 {
    match mode {
        GapMode::NominalEdgewise => constant_gap(&model.freq_const, g, mode),
        _ => constant_gap(&model.freq_means(), g, mode),
    }
}

/// Largest gap between constant frequencies: over edges for the nominal
/// mode, over all node pairs otherwise.
pub fn constant_gap(freqs: &[f64], g: &Graph, mode: GapMode) -> f64 {
    match mode {
        GapMode::NominalEdgewise => g
            .edges()
            .iter()
            .map(|&(t, h)| (freqs[t] - freqs[h]).abs())
            .fold(0.0, f64::max),
        _ => all_pairs(freqs.len())
            .map(|(i, j)| (freqs[i] - freqs[j]).abs())
            .fold(0.0, f64::max),
    }
}
