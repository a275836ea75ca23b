//! Hardness-adaptive instance generation.
//!
//! Hardness of an instance is the relative excess of the model's greedy
//! tour over a surrogate solver's tour. Instances are hardened by gradient
//! ascent on their coordinates with both tours held fixed, so the gradient
//! is that of a ratio of two piecewise-linear tour lengths.

use cogs_core::oracle::local_search_oracle;
use cogs_core::seed::derive_seed;
use cogs_core::{Point, Tour, TspInstance};
use serde::{Deserialize, Serialize};

use crate::error::{common_size, Error, Result};
use crate::policy::{DecodeMode, SolverPolicy};

/// Which solver plays the surrogate in the hardness ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "surrogate", rename_all = "snake_case")]
pub enum SurrogateChoice {
    /// The frozen rollout baseline policy, greedy decoded.
    RolloutBaseline,
    LocalSearch { restarts: usize, seed: u64 },
}

/// A resolved surrogate.
#[derive(Debug, Clone, Copy)]
pub enum Surrogate<'a> {
    Policy(&'a SolverPolicy),
    LocalSearch { restarts: usize, seed: u64 },
}

impl Surrogate<'_> {
    /// Surrogate tour for batch element `index`.
    pub fn tour(&self, instance: &TspInstance, index: usize) -> Result<Tour> {
        match *self {
            Surrogate::Policy(p) => Ok(p.decode_one(instance, DecodeMode::Greedy)?.tour),
            Surrogate::LocalSearch { restarts, seed } => {
                let s = derive_seed(seed, "hac/local_search", &[index as u64]);
                Ok(local_search_oracle(instance, restarts, s)?.tour)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HacConfig {
    /// Ascent step size.
    pub eta: f64,
    /// Re-weighting softmax temperature.
    pub tau: f64,
    /// Ascent steps per batch.
    pub steps: usize,
    pub surrogate: SurrogateChoice,
}

impl Default for HacConfig {
    fn default() -> Self {
        HacConfig {
            eta: 1.0,
            tau: 0.5,
            steps: 1,
            surrogate: SurrogateChoice::RolloutBaseline,
        }
    }
}

impl HacConfig {
    /// `eta = 0` is accepted so the step can be switched off in place.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }
}

fn model_tour(model: &SolverPolicy, instance: &TspInstance) -> Result<Tour> {
    Ok(model.decode_one(instance, DecodeMode::Greedy)?.tour)
}

/// `(C_model - C_surrogate) / C_surrogate` for one pair of costs.
pub fn hardness_from_costs(model_cost: f64, surrogate_cost: f64) -> Result<f64> {
    if !(surrogate_cost > 0.0) || !surrogate_cost.is_finite() {
        return Err(Error::Core(cogs_core::Error::Degenerate(format!(
            "surrogate tour length {surrogate_cost}; all points coincide"
        ))));
    }
    Ok((model_cost - surrogate_cost) / surrogate_cost)
}

/// Hardness of each instance in an equal-size batch.
pub fn hardness(model: &SolverPolicy, surrogate: &Surrogate<'_>, batch: &[TspInstance]) -> Result<Vec<f64>> {
    common_size(batch)?;
    batch
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let m = model_tour(model, inst)?;
            let s = surrogate.tour(inst, i)?;
            hardness_from_costs(m.length(), s.length())
        })
        .collect()
}

/// Gradient of a closed tour's length with respect to each point. Edges of
/// zero length contribute nothing.
pub fn tour_length_gradient(points: &[Point], order: &[usize]) -> Vec<[f64; 2]> {
    let n = order.len();
    let mut g = vec![[0.0; 2]; points.len()];
    for k in 0..n {
        let (a, b) = (order[k], order[(k + 1) % n]);
        let (pa, pb) = (points[a], points[b]);
        let (dx, dy) = (pa.x - pb.x, pa.y - pb.y);
        let l = dx.hypot(dy);
        if l > 0.0 {
            g[a][0] += dx / l;
            g[a][1] += dy / l;
            g[b][0] -= dx / l;
            g[b][1] -= dy / l;
        }
    }
    g
}

/// Hardness and its gradient with both tours held fixed:
/// `grad H = grad L_M / L_S - L_M grad L_S / L_S^2`.
pub fn hardness_gradient(instance: &TspInstance, model_order: &[usize], surrogate_order: &[usize]) -> Result<(f64, Vec<[f64; 2]>)> {
    let lm = cogs_core::tour_length(instance, model_order)?;
    let ls = cogs_core::tour_length(instance, surrogate_order)?;
    let h = hardness_from_costs(lm, ls)?;
    let gm = tour_length_gradient(instance.points(), model_order);
    let gs = tour_length_gradient(instance.points(), surrogate_order);
    let grad = gm
        .iter()
        .zip(&gs)
        .map(|(m, s)| [m[0] / ls - lm * s[0] / (ls * ls), m[1] / ls - lm * s[1] / (ls * ls)])
        .collect();
    Ok((h, grad))
}

fn batch_gradients(model: &SolverPolicy, surrogate: &Surrogate<'_>, batch: &[TspInstance]) -> Result<Vec<Vec<[f64; 2]>>> {
    batch
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let m = model_tour(model, inst)?;
            let s = surrogate.tour(inst, i)?;
            let (_, g) = hardness_gradient(inst, m.order(), s.order())?;
            if g.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    context: "hac_step",
                    index: i,
                    detail: "non-finite hardness gradient".into(),
                });
            }
            Ok(g)
        })
        .collect()
}

/// `config.steps` rounds of `X <- clamp(X + eta * grad H)`, re-decoding both
/// tours each round.
pub fn hac_step(model: &SolverPolicy, surrogate: &Surrogate<'_>, batch: &[TspInstance], config: &HacConfig) -> Result<Vec<TspInstance>> {
    config.validate()?;
    common_size(batch)?;
    let mut cur = batch.to_vec();
    if config.eta == 0.0 {
        return Ok(cur);
    }
    for _ in 0..config.steps {
        let grads = batch_gradients(model, surrogate, &cur)?;
        cur = cur
            .iter()
            .zip(&grads)
            .map(|(inst, g)| {
                let pts = inst
                    .points()
                    .iter()
                    .zip(g)
                    .map(|(p, d)| Point::new(p.x + config.eta * d[0], p.y + config.eta * d[1]))
                    .collect();
                TspInstance::clamped(pts).map_err(Error::from)
            })
            .collect::<Result<_>>()?;
    }
    Ok(cur)
}

/// Mean and median of `|eta * grad H|` over every coordinate of the batch.
pub fn gradient_magnitude_stats(model: &SolverPolicy, surrogate: &Surrogate<'_>, batch: &[TspInstance], config: &HacConfig) -> Result<(f64, f64)> {
    config.validate()?;
    common_size(batch)?;
    let grads = batch_gradients(model, surrogate, batch)?;
    let mut mags: Vec<f64> = grads.iter().flatten().flatten().map(|v| (config.eta * v).abs()).collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    mags.sort_by(f64::total_cmp);
    let k = mags.len();
    let median = if k % 2 == 1 {
        mags[k / 2]
    } else {
        0.5 * (mags[k / 2 - 1] + mags[k / 2])
    };
    Ok((mean, median))
}

/// `B * softmax(scores / tau)`: weights average exactly 1 and grow with
/// hardness. An infinite `tau` gives all ones.
pub fn reweight(scores: &[f64], tau: f64) -> Vec<f64> {
    let b = scores.len() as f64;
    if tau.is_infinite() {
        return vec![1.0; scores.len()];
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| ((s - m) / tau).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| b * v / z).collect()
}

/// Pearson correlation of `(size, gap)` records.
pub fn gap_size_correlation(records: &[(f64, f64)]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = records.iter().copied().unzip();
    Ok(cogs_core::stats::pearson(&x, &y)?)
}
