//! Derivative-free search for a context bias that improves the structural
//! metrics of the embedded order.
//!
//! The bias is parameterized as `tanh(u)` with `u` clamped to
//! `[-PARAM_LIMIT, PARAM_LIMIT]`, which keeps every emitted value strictly
//! inside (-1, 1). The objective is
//! `J = w_mu * m_u + w_md * m_d(n_buckets) - w_asu * |a_su|`, maximized.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order::PatchOrder;
use crate::pe::{apply_bias, cosine_field, embed, ContextBias, FrequencySet, SimilarityField};
use crate::pesi;

/// `tanh(8) = 1 - 2.3e-7`, comfortably representable below 1.
pub const PARAM_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub w_mu: f64,
    pub w_md: f64,
    pub w_asu: f64,
    pub n_buckets: usize,
}

impl ObjectiveWeights {
    pub fn new(w_mu: f64, w_md: f64, w_asu: f64, n_buckets: usize) -> Result<Self> {
        let w = Self {
            w_mu,
            w_md,
            w_asu,
            n_buckets,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_mu, self.w_md, self.w_asu];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        if ws.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidWeights("at least one weight must be positive".into()));
        }
        if self.n_buckets == 0 {
            return Err(Error::InvalidBucketCount);
        }
        Ok(())
    }
}

/// Objective of a similarity field. Metrics with zero weight are skipped.
pub fn objective(field: &SimilarityField, weights: &ObjectiveWeights) -> Result<f64> {
    let mut j = 0.0;
    if weights.w_mu != 0.0 {
        j += weights.w_mu * pesi::undirected_monotonicity(field);
    }
    if weights.w_md != 0.0 {
        j += weights.w_md * pesi::directed_monotonicity(field, weights.n_buckets)?;
    }
    if weights.w_asu != 0.0 {
        j -= weights.w_asu * pesi::undirected_asymmetry(field).abs();
    }
    Ok(j)
}

/// Objective of an order after embedding it.
pub fn score_order(
    order: &PatchOrder,
    freqs: &FrequencySet,
    weights: &ObjectiveWeights,
) -> Result<f64> {
    objective(&cosine_field(&embed(order, freqs))?, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// Metropolis acceptance with geometric cooling.
    Anneal,
    /// Greedy: accept only strict improvements.
    Coordinate,
}

impl std::str::FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "anneal" => Ok(Schedule::Anneal),
            "coordinate" => Ok(Schedule::Coordinate),
            other => Err(format!("unknown schedule `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Standard deviation of a single-coordinate step in parameter space.
    pub proposal_scale: f64,
    pub schedule: Schedule,
    /// Target acceptance rate of worsening moves at the start of annealing.
    pub initial_acceptance: f64,
    /// Final temperature as a fraction of the initial one.
    pub cooling_ratio: f64,
    /// Random proposals used to calibrate the initial temperature.
    pub calibration_samples: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            iterations: 2_000,
            seed: 0,
            proposal_scale: 0.5,
            schedule: Schedule::Anneal,
            initial_acceptance: 0.5,
            cooling_ratio: 1e-3,
            calibration_samples: 32,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proposal_scale > 0.0 && self.proposal_scale <= 1.0) {
            return Err(Error::InvalidConfig("proposal_scale must lie in (0, 1]".into()));
        }
        if !(self.initial_acceptance > 0.0 && self.initial_acceptance < 1.0) {
            return Err(Error::InvalidConfig("initial_acceptance must lie in (0, 1)".into()));
        }
        if !(self.cooling_ratio > 0.0 && self.cooling_ratio <= 1.0) {
            return Err(Error::InvalidConfig("cooling_ratio must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub j_current: f64,
    pub j_best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub bias: ContextBias,
    /// Row 0 is the zero-bias start; one row per iteration after that.
    pub trace: Vec<TraceRow>,
    pub j_initial: f64,
    pub j_best: f64,
    pub accepted: usize,
    /// Initial annealing temperature (`None` for the greedy schedule).
    pub initial_temperature: Option<f64>,
}

struct Problem<'a> {
    static_order: &'a PatchOrder,
    freqs: &'a FrequencySet,
    weights: &'a ObjectiveWeights,
}

impl Problem<'_> {
    fn bias(&self, params: &[f64]) -> Result<ContextBias> {
        let values = params.iter().map(|u| u.tanh()).collect();
        ContextBias::new(self.static_order.shape(), values)
            .map_err(|e| Error::Invariant(format!("optimizer emitted an invalid bias: {e}")))
    }

    fn score(&self, params: &[f64]) -> Result<f64> {
        let order = apply_bias(self.static_order, &self.bias(params)?)?;
        score_order(&order, self.freqs, self.weights)
    }
}

/// Proposes a single-coordinate move; returns `(cell, new_value)`.
fn propose(params: &[f64], scale: f64, rng: &mut impl Rng) -> (usize, f64) {
    let cell = rng.random_range(0..params.len());
    let z: f64 = rng.sample(StandardNormal);
    (cell, (params[cell] + scale * z).clamp(-PARAM_LIMIT, PARAM_LIMIT))
}

fn calibrate_temperature(
    problem: &Problem<'_>,
    params: &[f64],
    j0: f64,
    cfg: &OptConfig,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut trial = params.to_vec();
    let mut worse = Vec::new();
    for _ in 0..cfg.calibration_samples {
        let (cell, value) = propose(params, cfg.proposal_scale, &mut rng);
        trial[cell] = value;
        let dj = problem.score(&trial)? - j0;
        trial[cell] = params[cell];
        if dj < 0.0 {
            worse.push(-dj);
        }
    }
    let mean = if worse.is_empty() {
        1e-3
    } else {
        worse.iter().sum::<f64>() / worse.len() as f64
    };
    // exp(-mean / t0) == initial_acceptance
    Ok(mean / -cfg.initial_acceptance.ln())
}

/// Searches for a bias maximizing the objective of `static_order + bias`.
///
/// Starts from the zero bias and always returns the best bias seen, so the
/// reported objective never falls below the static order's.
pub fn optimize_bias(
    static_order: &PatchOrder,
    freqs: &FrequencySet,
    weights: &ObjectiveWeights,
    cfg: &OptConfig,
) -> Result<OptResult> {
    weights.validate()?;
    cfg.validate()?;
    let problem = Problem {
        static_order,
        freqs,
        weights,
    };
    let n = static_order.shape().len();
    let mut params = vec![0.0; n];
    let j0 = problem.score(&params)?;
    let mut j_current = j0;
    let mut best = params.clone();
    let mut j_best = j0;
    let mut trace = Vec::with_capacity(cfg.iterations + 1);
    trace.push(TraceRow {
        iteration: 0,
        j_current,
        j_best,
    });

    let initial_temperature = match cfg.schedule {
        Schedule::Anneal if cfg.iterations > 0 => {
            Some(calibrate_temperature(&problem, &params, j0, cfg)?)
        }
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut accepted = 0;
    for it in 1..=cfg.iterations {
        let (cell, value) = propose(&params, cfg.proposal_scale, &mut rng);
        let previous = params[cell];
        params[cell] = value;
        let j_new = problem.score(&params)?;
        let accept = match (cfg.schedule, initial_temperature) {
            (Schedule::Anneal, Some(t0)) => {
                let progress = (it - 1) as f64 / cfg.iterations as f64;
                let t = t0 * cfg.cooling_ratio.powf(progress);
                let u: f64 = rng.random();
                j_new >= j_current || u < ((j_new - j_current) / t).exp()
            }
            _ => j_new > j_current,
        };
        if accept {
            accepted += 1;
            j_current = j_new;
            if j_new > j_best {
                j_best = j_new;
                best.copy_from_slice(&params);
            }
        } else {
            params[cell] = previous;
        }
        trace.push(TraceRow {
            iteration: it,
            j_current,
            j_best,
        });
    }

    Ok(OptResult {
        bias: problem.bias(&best)?,
        trace,
        j_initial: j0,
        j_best,
        accepted,
        initial_temperature,
    })
}
