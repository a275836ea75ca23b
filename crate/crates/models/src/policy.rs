//! Attention encoder-decoder policy for 2D Euclidean TSP.
//!
//! The encoder embeds raw coordinates and applies multi-head self-attention
//! layers with residual connections, layer normalisation and a ReLU
//! feed-forward block. The decoder builds each tour from node 0: at every
//! step a query formed from the graph embedding and the first and last
//! visited nodes attends over the nodes (a masked glimpse), and the glimpse
//! scores unvisited nodes through a `C * tanh` clipped compatibility.

use cogs_autodiff::{Gradients, Graph, Matrix, ParamId, ParamStore, Var};
use cogs_core::seed::{derive_rng, derive_seed};
use cogs_core::{Tour, TspInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{common_size, Error, Result};

/// Clip applied to decoder logits before the softmax.
pub const LOGIT_CLIP: f64 = 10.0;
const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub embed_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_hidden: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            embed_dim: 128,
            layers: 3,
            heads: 8,
            ff_hidden: 512,
        }
    }
}

impl PolicyConfig {
    /// Width 8, one layer; for gradient checks.
    pub fn tiny() -> Self {
        PolicyConfig {
            embed_dim: 8,
            layers: 1,
            heads: 2,
            ff_hidden: 16,
        }
    }

    /// Width 32, two layers; small experiments on one CPU core.
    pub fn toy() -> Self {
        PolicyConfig {
            embed_dim: 32,
            layers: 2,
            heads: 4,
            ff_hidden: 128,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default" => Ok(Self::default()),
            "toy" => Ok(Self::toy()),
            "tiny" => Ok(Self::tiny()),
            other => Err(Error::Config(format!("unknown policy profile {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.heads == 0 || self.ff_hidden == 0 {
            return Err(Error::Config("policy dimensions must be positive".into()));
        }
        if self.embed_dim % self.heads != 0 {
            return Err(Error::Config(format!(
                "embed_dim {} not divisible by heads {}",
                self.embed_dim, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct LayerIds {
    wqkv: ParamId,
    wo: ParamId,
    ln1_g: ParamId,
    ln1_b: ParamId,
    ff1_w: ParamId,
    ff1_b: ParamId,
    ff2_w: ParamId,
    ff2_b: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
}

#[derive(Debug, Clone)]
struct PolicyIds {
    embed_w: ParamId,
    embed_b: ParamId,
    layers: Vec<LayerIds>,
    w_fixed: ParamId,
    w_first: ParamId,
    w_last: ParamId,
    w_glimpse: ParamId,
    w_out: ParamId,
}

/// Trainable policy. Hyperparameters are fixed at construction.
#[derive(Debug, Clone)]
pub struct SolverPolicy {
    config: PolicyConfig,
    params: ParamStore,
    ids: PolicyIds,
}

pub const POLICY_VERSION: u32 = 1;

fn layout(config: &PolicyConfig, seed: u64) -> (ParamStore, PolicyIds) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.embed_dim;
    let f = config.ff_hidden;
    let mut s = ParamStore::new();
    let embed_w = s.add_uniform("embed.w", 2, d, 2, &mut rng);
    let embed_b = s.add_uniform("embed.b", 1, d, 2, &mut rng);
    let layers = (0..config.layers)
        .map(|l| LayerIds {
            wqkv: s.add_uniform(format!("enc{l}.wqkv"), d, 3 * d, d, &mut rng),
            wo: s.add_uniform(format!("enc{l}.wo"), d, d, d, &mut rng),
            ln1_g: s.add(format!("enc{l}.ln1.g"), Matrix::filled(1, d, 1.0)),
            ln1_b: s.add(format!("enc{l}.ln1.b"), Matrix::zeros(1, d)),
            ff1_w: s.add_uniform(format!("enc{l}.ff1.w"), d, f, d, &mut rng),
            ff1_b: s.add_uniform(format!("enc{l}.ff1.b"), 1, f, d, &mut rng),
            ff2_w: s.add_uniform(format!("enc{l}.ff2.w"), f, d, f, &mut rng),
            ff2_b: s.add_uniform(format!("enc{l}.ff2.b"), 1, d, f, &mut rng),
            ln2_g: s.add(format!("enc{l}.ln2.g"), Matrix::filled(1, d, 1.0)),
            ln2_b: s.add(format!("enc{l}.ln2.b"), Matrix::zeros(1, d)),
        })
        .collect();
    let ids = PolicyIds {
        embed_w,
        embed_b,
        layers,
        w_fixed: s.add_uniform("dec.w_fixed", d, d, d, &mut rng),
        w_first: s.add_uniform("dec.w_first", d, d, 2 * d, &mut rng),
        w_last: s.add_uniform("dec.w_last", d, d, 2 * d, &mut rng),
        w_glimpse: s.add_uniform("dec.w_glimpse", d, 3 * d, d, &mut rng),
        w_out: s.add_uniform("dec.w_out", d, d, d, &mut rng),
    };
    (s, ids)
}

/// How the decoder picks the next node.
pub enum DecodeMode<'a> {
    Greedy,
    Sample(&'a mut ChaCha8Rng),
    /// Replays a given tour (rotated to start at node 0).
    Forced(&'a [usize]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub tour: Tour,
    /// Sum of `step_log_probs`; always `<= 0`.
    pub log_probability: f64,
    /// One entry per selection step (`n` entries). The fixed start and the
    /// forced final node contribute 0.
    pub step_log_probs: Vec<f64>,
}

/// Per-node and pooled embeddings of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub nodes: Matrix,
    pub graph: Matrix,
}

struct Rollout {
    order: Vec<usize>,
    step_log_probs: Vec<f64>,
    picked: Vec<Var>,
}

impl SolverPolicy {
    pub fn new(config: PolicyConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (params, ids) = layout(&config, seed);
        Ok(SolverPolicy {
            config,
            params,
            ids,
        })
    }

    /// Rebuilds a policy from saved tensors; names and shapes must match
    /// the layout implied by `config`.
    pub fn from_params(config: PolicyConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let (fresh, ids) = layout(&config, 0);
        check_same_layout(&fresh, &params)?;
        Ok(SolverPolicy {
            config,
            params,
            ids,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn head_dim(&self) -> usize {
        self.config.embed_dim / self.config.heads
    }

    /// Multi-head scaled dot-product attention. `q`, `k`, `v` are column
    /// offsets into the given source nodes.
    #[allow(clippy::too_many_arguments)]
    fn attention(
        &self,
        g: &mut Graph<'_>,
        (qs, qo): (Var, usize),
        (ks, ko): (Var, usize),
        (vs, vo): (Var, usize),
        mask: Option<&[bool]>,
    ) -> Var {
        let dk = self.head_dim();
        let inv = 1.0 / (dk as f64).sqrt();
        let heads: Vec<Var> = (0..self.config.heads)
            .map(|h| {
                let q = g.cols(qs, qo + h * dk, dk);
                let k = g.cols(ks, ko + h * dk, dk);
                let v = g.cols(vs, vo + h * dk, dk);
                let s = g.matmul_t(q, k);
                let s = g.scale(s, inv);
                let a = g.softmax_rows(s, mask);
                g.matmul(a, v)
            })
            .collect();
        if heads.len() == 1 {
            heads[0]
        } else {
            g.concat_cols(&heads)
        }
    }

    fn norm(&self, g: &mut Graph<'_>, x: Var, gain: ParamId, bias: ParamId) -> Var {
        let n = g.layer_norm(x, LN_EPS);
        let gp = g.param(gain);
        let bp = g.param(bias);
        let n = g.mul_row(n, gp);
        g.add_row(n, bp)
    }

    /// Records the encoder on `g`; returns node embeddings (n x d) and the
    /// mean-pooled graph embedding (1 x d).
    fn encode_on(&self, g: &mut Graph<'_>, instance: &TspInstance) -> (Var, Var) {
        let d = self.config.embed_dim;
        let x = g.input(Matrix::from_vec(instance.n(), 2, instance.flat_coords()));
        let ew = g.param(self.ids.embed_w);
        let eb = g.param(self.ids.embed_b);
        let h = g.matmul(x, ew);
        let mut h = g.add_row(h, eb);
        for l in &self.ids.layers {
            let wqkv = g.param(l.wqkv);
            let qkv = g.matmul(h, wqkv);
            let att = self.attention(g, (qkv, 0), (qkv, d), (qkv, 2 * d), None);
            let wo = g.param(l.wo);
            let att = g.matmul(att, wo);
            let r = g.add(h, att);
            h = self.norm(g, r, l.ln1_g, l.ln1_b);
            let w1 = g.param(l.ff1_w);
            let b1 = g.param(l.ff1_b);
            let w2 = g.param(l.ff2_w);
            let b2 = g.param(l.ff2_b);
            let f = g.matmul(h, w1);
            let f = g.add_row(f, b1);
            let f = g.relu(f);
            let f = g.matmul(f, w2);
            let f = g.add_row(f, b2);
            let r = g.add(h, f);
            h = self.norm(g, r, l.ln2_g, l.ln2_b);
        }
        let pooled = g.mean_rows(h);
        (h, pooled)
    }

    fn rollout_on(&self, g: &mut Graph<'_>, instance: &TspInstance, mut mode: DecodeMode<'_>) -> Result<Rollout> {
        let n = instance.n();
        let d = self.config.embed_dim;
        let forced = match &mode {
            DecodeMode::Forced(order) => Some(rotate_to_zero(order, n)?),
            _ => None,
        };
        let (h, pooled) = self.encode_on(g, instance);
        let wf = g.param(self.ids.w_fixed);
        let fixed = g.matmul(pooled, wf);
        let w_first = g.param(self.ids.w_first);
        let w_last = g.param(self.ids.w_last);
        let h_first = g.matmul(h, w_first);
        let h_last = g.matmul(h, w_last);
        let wg = g.param(self.ids.w_glimpse);
        let gkv = g.matmul(h, wg);
        let logit_k = g.cols(gkv, 2 * d, d);
        let w_out = g.param(self.ids.w_out);
        let first_q = g.rows(h_first, &[0]);

        let mut visited = vec![false; n];
        visited[0] = true;
        let mut order = Vec::with_capacity(n);
        order.push(0);
        let mut step_log_probs = vec![0.0];
        let mut picked = Vec::with_capacity(n.saturating_sub(2));
        let inv_sqrt_d = 1.0 / (d as f64).sqrt();
        for step in 1..n {
            let last = order[step - 1];
            if step == n - 1 {
                let rest = visited.iter().position(|v| !v).expect("one node left");
                if let Some(f) = &forced {
                    debug_assert_eq!(f[step], rest);
                }
                visited[rest] = true;
                order.push(rest);
                step_log_probs.push(0.0);
                break;
            }
            let last_q = g.rows(h_last, &[last]);
            let q = g.add_n(&[fixed, first_q, last_q]);
            let glimpse = self.attention(g, (q, 0), (gkv, 0), (gkv, d), Some(&visited));
            let glimpse = g.matmul(glimpse, w_out);
            let logits = g.matmul_t(glimpse, logit_k);
            let logits = g.scale(logits, inv_sqrt_d);
            let logits = g.tanh(logits);
            let logits = g.scale(logits, LOGIT_CLIP);
            let lp = g.log_softmax_rows(logits, Some(&visited));
            let row = g.value(lp).row(0);
            let next = match (&mut mode, &forced) {
                (_, Some(f)) => f[step],
                (DecodeMode::Greedy, _) => argmax_unmasked(row, &visited),
                (DecodeMode::Sample(rng), _) => sample_unmasked(row, &visited, rng),
                (DecodeMode::Forced(_), None) => unreachable!(),
            };
            step_log_probs.push(row[next]);
            picked.push(g.pick(lp, 0, next));
            visited[next] = true;
            order.push(next);
        }
        Ok(Rollout {
            order,
            step_log_probs,
            picked,
        })
    }

    fn finish(&self, instance: &TspInstance, r: Rollout) -> Result<DecodeResult> {
        let log_probability = r.step_log_probs.iter().sum();
        Ok(DecodeResult {
            tour: Tour::new(instance, r.order)?,
            log_probability,
            step_log_probs: r.step_log_probs,
        })
    }

    /// Decodes one instance.
    pub fn decode_one(&self, instance: &TspInstance, mode: DecodeMode<'_>) -> Result<DecodeResult> {
        let mut g = Graph::new(&self.params);
        let r = self.rollout_on(&mut g, instance, mode)?;
        self.finish(instance, r)
    }

    /// Log-probability of `order` and its gradient, scaled by `coef`, added
    /// into `grads`.
    pub fn log_likelihood_into(
        &self,
        instance: &TspInstance,
        order: &[usize],
        coef: f64,
        grads: &mut Gradients,
    ) -> Result<f64> {
        let mut g = Graph::new(&self.params);
        let r = self.rollout_on(&mut g, instance, DecodeMode::Forced(order))?;
        let lp: f64 = r.step_log_probs.iter().sum();
        if coef != 0.0 && !r.picked.is_empty() {
            let total = g.add_n(&r.picked);
            g.backward_scaled(total, coef, grads);
        }
        Ok(lp)
    }
}

fn check_same_layout(expected: &ParamStore, got: &ParamStore) -> Result<()> {
    if expected.names() != got.names() {
        return Err(Error::Checkpoint("parameter names do not match the layout".into()));
    }
    for (i, (a, b)) in expected.values().iter().zip(got.values()).enumerate() {
        if a.shape() != b.shape() {
            return Err(Error::Checkpoint(format!(
                "parameter {} has shape {:?}, expected {:?}",
                expected.names()[i],
                b.shape(),
                a.shape()
            )));
        }
    }
    if !got.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter values".into()));
    }
    Ok(())
}

pub(crate) fn check_layout(expected: &ParamStore, got: &ParamStore) -> Result<()> {
    check_same_layout(expected, got)
}

fn rotate_to_zero(order: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Core(cogs_core::Error::NotAPermutation {
            n,
            reason: "forced decode order is not a permutation".into(),
        }));
    }
    let start = order.iter().position(|&i| i == 0).expect("0 present");
    let mut out = order[start..].to_vec();
    out.extend_from_slice(&order[..start]);
    Ok(out)
}

fn argmax_unmasked(row: &[f64], visited: &[bool]) -> usize {
    let mut best = usize::MAX;
    let mut best_v = f64::NEG_INFINITY;
    for (i, (&v, &m)) in row.iter().zip(visited).enumerate() {
        if !m && (best == usize::MAX || v > best_v) {
            best = i;
            best_v = v;
        }
    }
    best
}

fn sample_unmasked(row: &[f64], visited: &[bool], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = usize::MAX;
    for (i, (&v, &m)) in row.iter().zip(visited).enumerate() {
        if m {
            continue;
        }
        acc += v.exp();
        last = i;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative mass just below u.
    last
}

/// Embeddings for each instance of an equal-size batch.
pub fn encode(policy: &SolverPolicy, batch: &[TspInstance]) -> Result<Vec<Embeddings>> {
    common_size(batch)?;
    Ok(batch
        .iter()
        .map(|inst| {
            let mut g = Graph::new(&policy.params);
            let (h, pooled) = policy.encode_on(&mut g, inst);
            Embeddings {
                nodes: g.value(h).clone(),
                graph: g.value(pooled).clone(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeKind {
    Greedy,
    Sample,
}

/// Decodes an equal-size batch. Sampling for instance `i` uses
/// `derive_rng(seed, "decode/sample", [i])`.
pub fn decode(policy: &SolverPolicy, batch: &[TspInstance], kind: DecodeKind, seed: u64) -> Result<Vec<DecodeResult>> {
    common_size(batch)?;
    batch
        .iter()
        .enumerate()
        .map(|(i, inst)| match kind {
            DecodeKind::Greedy => policy.decode_one(inst, DecodeMode::Greedy),
            DecodeKind::Sample => {
                let mut rng = derive_rng(seed, "decode/sample", &[i as u64]);
                policy.decode_one(inst, DecodeMode::Sample(&mut rng))
            }
        })
        .collect()
}

/// Greedy tour lengths for each instance (sizes may differ).
pub fn greedy_costs(policy: &SolverPolicy, instances: &[TspInstance]) -> Result<Vec<f64>> {
    instances
        .iter()
        .map(|inst| Ok(policy.decode_one(inst, DecodeMode::Greedy)?.tour.length()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ReinforceOutput {
    pub grads: Gradients,
    /// Mean sampled tour cost, the quantity the gradient descends.
    pub mean_cost: f64,
    pub mean_baseline_cost: f64,
    /// Batch mean of `w_i * (cost_i - baseline_i) * log p_i`.
    pub surrogate: f64,
    pub sampled_orders: Vec<Vec<usize>>,
    pub costs: Vec<f64>,
    pub baseline_costs: Vec<f64>,
}

/// One-sample REINFORCE estimate with a greedy rollout baseline:
/// `grad = 1/B * sum_i w_i (C(pi_i) - C(pi_i^greedy baseline)) grad log p(pi_i)`.
/// Weights default to 1. Instance `i` samples with
/// `derive_seed(seed, "reinforce/sample", [i])`.
pub fn reinforce_loss(
    policy: &SolverPolicy,
    batch: &[TspInstance],
    baseline: &SolverPolicy,
    weights: Option<&[f64]>,
    seed: u64,
) -> Result<ReinforceOutput> {
    common_size(batch)?;
    if let Some(w) = weights {
        if w.len() != batch.len() {
            return Err(Error::Config(format!(
                "{} weights for a batch of {}",
                w.len(),
                batch.len()
            )));
        }
    }
    let b = batch.len() as f64;
    let mut grads = Gradients::zeros_like(&policy.params);
    let mut costs = Vec::with_capacity(batch.len());
    let mut baseline_costs = Vec::with_capacity(batch.len());
    let mut orders = Vec::with_capacity(batch.len());
    let mut surrogate = 0.0;
    for (i, inst) in batch.iter().enumerate() {
        let base = baseline.decode_one(inst, DecodeMode::Greedy)?.tour.length();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "reinforce/sample", &[i as u64]));
        let mut g = Graph::new(&policy.params);
        let r = policy.rollout_on(&mut g, inst, DecodeMode::Sample(&mut rng))?;
        let lp: f64 = r.step_log_probs.iter().sum();
        let cost = cogs_core::tour_length(inst, &r.order)?;
        if !cost.is_finite() || !base.is_finite() || !lp.is_finite() {
            return Err(Error::Numerical {
                context: "reinforce_loss",
                index: i,
                detail: format!("cost {cost}, baseline {base}, log p {lp}"),
            });
        }
        let w = weights.map_or(1.0, |w| w[i]);
        let coef = w * (cost - base) / b;
        if coef != 0.0 && !r.picked.is_empty() {
            let total = g.add_n(&r.picked);
            g.backward_scaled(total, coef, &mut grads);
        }
        surrogate += coef * lp;
        costs.push(cost);
        baseline_costs.push(base);
        orders.push(r.order);
    }
    if !grads.is_finite() {
        return Err(Error::Numerical {
            context: "reinforce_loss",
            index: batch.len(),
            detail: "non-finite gradient".into(),
        });
    }
    Ok(ReinforceOutput {
        grads,
        mean_cost: costs.iter().sum::<f64>() / b,
        mean_baseline_cost: baseline_costs.iter().sum::<f64>() / b,
        surrogate,
        sampled_orders: orders,
        costs,
        baseline_costs,
    })
}

/// Frozen policy whose greedy tours serve as the REINFORCE baseline.
#[derive(Debug, Clone)]
pub struct RolloutBaseline {
    policy: SolverPolicy,
}

impl RolloutBaseline {
    pub fn new(policy: &SolverPolicy) -> Self {
        RolloutBaseline {
            policy: policy.clone(),
        }
    }

    pub fn policy(&self) -> &SolverPolicy {
        &self.policy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineUpdate {
    pub replaced: bool,
    pub policy_cost: f64,
    pub baseline_cost: f64,
    /// Greedy cost of the policy on each validation instance.
    pub policy_costs: Vec<f64>,
}

/// Replaces the baseline with a copy of `policy` iff the policy's mean
/// greedy validation cost is strictly lower.
pub fn maybe_update_baseline(
    policy: &SolverPolicy,
    baseline: &mut RolloutBaseline,
    validation: &[TspInstance],
) -> Result<BaselineUpdate> {
    if validation.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mean = |c: &[f64]| c.iter().sum::<f64>() / c.len() as f64;
    let policy_costs = greedy_costs(policy, validation)?;
    let policy_cost = mean(&policy_costs);
    let baseline_cost = mean(&greedy_costs(&baseline.policy, validation)?);
    let replaced = policy_cost < baseline_cost;
    if replaced {
        *baseline = RolloutBaseline::new(policy);
    }
    Ok(BaselineUpdate {
        replaced,
        policy_cost,
        baseline_cost,
        policy_costs,
    })
}
