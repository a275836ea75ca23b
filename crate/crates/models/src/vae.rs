//! LSTM sequence VAE over x-sorted point sequences.
//!
//! The encoder reads the canonical sequence and maps its final hidden state
//! to a diagonal Gaussian posterior. The decoder initialises its state from
//! `z`, receives the previous point and `z` at each step (teacher forcing
//! during training, its own output when sampling) and squashes each output
//! through a sigmoid so every decoded coordinate lies in `[0, 1]`.

use cogs_autodiff::{Adam, AdamConfig, Gradients, Graph, Matrix, ParamId, ParamStore, Var};
use cogs_core::distributions::GeneratorConfig;
use cogs_core::seed::{derive_rng, derive_seed};
use cogs_core::{Point, TspInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{common_size, Error, Result};
use crate::policy::check_layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaeConfig {
    /// Points per decoded instance.
    pub n: usize,
    pub latent_dim: usize,
    pub hidden: usize,
}

impl VaeConfig {
    pub fn new(n: usize) -> Self {
        VaeConfig {
            n,
            latent_dim: 32,
            hidden: 128,
        }
    }

    /// Desk-scale profile: narrower recurrent state.
    pub fn toy(n: usize) -> Self {
        VaeConfig { hidden: 64, ..Self::new(n) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.latent_dim < 2 || self.hidden == 0 {
            return Err(Error::Config(format!(
                "vae needs n >= 2, latent_dim >= 2, hidden > 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct VaeIds {
    enc_wx: ParamId,
    enc_wh: ParamId,
    enc_b: ParamId,
    mu_w: ParamId,
    mu_b: ParamId,
    lv_w: ParamId,
    lv_b: ParamId,
    init_h_w: ParamId,
    init_h_b: ParamId,
    init_c_w: ParamId,
    init_c_b: ParamId,
    dec_wx: ParamId,
    dec_wz: ParamId,
    dec_wh: ParamId,
    dec_b: ParamId,
    out_w: ParamId,
    out_b: ParamId,
}

#[derive(Debug, Clone)]
pub struct VaeModel {
    config: VaeConfig,
    params: ParamStore,
    ids: VaeIds,
    /// Standard deviation of the Gaussian observation model; 0 decodes the
    /// mean.
    output_std: f64,
}

fn lstm_bias(hidden: usize) -> Matrix {
    // Gate order i, f, g, o; forget gate starts open.
    let mut b = Matrix::zeros(1, 4 * hidden);
    for v in &mut b.data_mut()[hidden..2 * hidden] {
        *v = 1.0;
    }
    b
}

fn layout(c: &VaeConfig, seed: u64) -> (ParamStore, VaeIds) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, d) = (c.hidden, c.latent_dim);
    let mut s = ParamStore::new();
    let ids = VaeIds {
        enc_wx: s.add_uniform("enc.wx", 2, 4 * h, h, &mut rng),
        enc_wh: s.add_uniform("enc.wh", h, 4 * h, h, &mut rng),
        enc_b: s.add("enc.b", lstm_bias(h)),
        mu_w: s.add_uniform("mu.w", h, d, h, &mut rng),
        mu_b: s.add("mu.b", Matrix::zeros(1, d)),
        lv_w: s.add_uniform("logvar.w", h, d, h, &mut rng),
        lv_b: s.add("logvar.b", Matrix::zeros(1, d)),
        init_h_w: s.add_uniform("dec.init_h.w", d, h, d, &mut rng),
        init_h_b: s.add("dec.init_h.b", Matrix::zeros(1, h)),
        init_c_w: s.add_uniform("dec.init_c.w", d, h, d, &mut rng),
        init_c_b: s.add("dec.init_c.b", Matrix::zeros(1, h)),
        dec_wx: s.add_uniform("dec.wx", 2, 4 * h, h, &mut rng),
        dec_wz: s.add_uniform("dec.wz", d, 4 * h, h, &mut rng),
        dec_wh: s.add_uniform("dec.wh", h, 4 * h, h, &mut rng),
        dec_b: s.add("dec.b", lstm_bias(h)),
        out_w: s.add_uniform("out.w", h, 2, h, &mut rng),
        out_b: s.add("out.b", Matrix::zeros(1, 2)),
    };
    (s, ids)
}

/// Points sorted ascending by x, ties ascending by y.
pub fn canonicalize_sequence(instance: &TspInstance) -> Vec<Point> {
    let mut pts = instance.points().to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts
}

/// `0.5 * sum(mu^2 + exp(lv) - 1 - lv)` summed over dimensions and averaged
/// over rows.
pub fn kl_divergence(mu: &Matrix, logvar: &Matrix) -> f64 {
    assert_eq!(mu.shape(), logvar.shape(), "kl shape");
    let s: f64 = mu
        .data()
        .iter()
        .zip(logvar.data())
        .map(|(m, lv)| m * m + lv.exp() - 1.0 - lv)
        .sum();
    0.5 * s / mu.rows() as f64
}

#[derive(Debug, Clone)]
pub struct ElboOutput {
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub grads: Gradients,
}

/// Step `t` inputs of a batch of canonical sequences: `B x 2`.
fn step_inputs(seqs: &[Vec<Point>], t: usize) -> Matrix {
    let mut m = Matrix::zeros(seqs.len(), 2);
    for (b, s) in seqs.iter().enumerate() {
        m.set(b, 0, s[t].x);
        m.set(b, 1, s[t].y);
    }
    m
}

impl VaeModel {
    pub fn new(config: VaeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let (params, ids) = layout(&config, seed);
        Ok(VaeModel {
            config,
            params,
            ids,
            output_std: 0.0,
        })
    }

    pub fn from_params(config: VaeConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let (fresh, ids) = layout(&config, 0);
        check_layout(&fresh, &params)?;
        Ok(VaeModel {
            config,
            params,
            ids,
            output_std: 0.0,
        })
    }

    pub fn output_std(&self) -> f64 {
        self.output_std
    }

    pub fn set_output_std(&mut self, std: f64) -> Result<()> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::Config(format!("output_std must be finite and >= 0, got {std}")));
        }
        self.output_std = std;
        Ok(())
    }

    pub fn config(&self) -> &VaeConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    fn lstm_step(&self, g: &mut Graph<'_>, pre_x: Var, h: Var, c: Var, wh: ParamId, b: ParamId) -> (Var, Var) {
        let hd = self.config.hidden;
        let wh = g.param(wh);
        let b = g.param(b);
        let rec = g.matmul(h, wh);
        let pre = g.add(pre_x, rec);
        let pre = g.add_row(pre, b);
        let i = g.cols(pre, 0, hd);
        let i = g.sigmoid(i);
        let f = g.cols(pre, hd, hd);
        let f = g.sigmoid(f);
        let gg = g.cols(pre, 2 * hd, hd);
        let gg = g.tanh(gg);
        let o = g.cols(pre, 3 * hd, hd);
        let o = g.sigmoid(o);
        let fc = g.mul(f, c);
        let ig = g.mul(i, gg);
        let c = g.add(fc, ig);
        let tc = g.tanh(c);
        let h = g.mul(o, tc);
        (h, c)
    }

    /// Posterior mean and log-variance (`B x d` each).
    fn encode_on(&self, g: &mut Graph<'_>, seqs: &[Vec<Point>]) -> (Var, Var) {
        let bsz = seqs.len();
        let hd = self.config.hidden;
        let mut h = g.input(Matrix::zeros(bsz, hd));
        let mut c = g.input(Matrix::zeros(bsz, hd));
        let wx = g.param(self.ids.enc_wx);
        for t in 0..seqs[0].len() {
            let x = g.input(step_inputs(seqs, t));
            let px = g.matmul(x, wx);
            (h, c) = self.lstm_step(g, px, h, c, self.ids.enc_wh, self.ids.enc_b);
        }
        let (mw, mb, lw, lb) = (
            g.param(self.ids.mu_w),
            g.param(self.ids.mu_b),
            g.param(self.ids.lv_w),
            g.param(self.ids.lv_b),
        );
        let mu = g.matmul(h, mw);
        let mu = g.add_row(mu, mb);
        let lv = g.matmul(h, lw);
        let lv = g.add_row(lv, lb);
        (mu, lv)
    }

    fn decoder_init(&self, g: &mut Graph<'_>, z: Var) -> (Var, Var, Var) {
        let (hw, hb, cw, cb, wz) = (
            g.param(self.ids.init_h_w),
            g.param(self.ids.init_h_b),
            g.param(self.ids.init_c_w),
            g.param(self.ids.init_c_b),
            g.param(self.ids.dec_wz),
        );
        let h = g.matmul(z, hw);
        let h = g.add_row(h, hb);
        let h = g.tanh(h);
        let c = g.matmul(z, cw);
        let c = g.add_row(c, cb);
        let c = g.tanh(c);
        let zpart = g.matmul(z, wz);
        (h, c, zpart)
    }

    fn decoder_step(&self, g: &mut Graph<'_>, prev: Var, zpart: Var, h: Var, c: Var) -> (Var, Var, Var) {
        let wx = g.param(self.ids.dec_wx);
        let px = g.matmul(prev, wx);
        let pre_x = g.add(px, zpart);
        let (h, c) = self.lstm_step(g, pre_x, h, c, self.ids.dec_wh, self.ids.dec_b);
        let (ow, ob) = (g.param(self.ids.out_w), g.param(self.ids.out_b));
        let out = g.matmul(h, ow);
        let out = g.add_row(out, ob);
        let out = g.sigmoid(out);
        (out, h, c)
    }

    /// Reconstruction MSE plus `beta` times the KL term, with gradients.
    /// `eps` is the `B x d` standard-normal noise of the reparameterisation.
    pub fn elbo_with_noise(&self, seqs: &[Vec<Point>], beta: f64, eps: &Matrix) -> Result<ElboOutput> {
        let n = self.check_batch(seqs)?;
        let bsz = seqs.len();
        assert_eq!(eps.shape(), (bsz, self.config.latent_dim), "noise shape");
        let mut g = Graph::new(&self.params);
        let (mu, lv) = self.encode_on(&mut g, seqs);
        let half_lv = g.scale(lv, 0.5);
        let std = g.exp(half_lv);
        let e = g.input(eps.clone());
        let noise = g.mul(std, e);
        let z = g.add(mu, noise);
        let (mut h, mut c, zpart) = self.decoder_init(&mut g, z);
        let mut prev = g.input(Matrix::zeros(bsz, 2));
        let mut errs = Vec::with_capacity(n);
        for t in 0..n {
            let (out, h2, c2) = self.decoder_step(&mut g, prev, zpart, h, c);
            (h, c) = (h2, c2);
            let target = g.input(step_inputs(seqs, t));
            let diff = g.sub(out, target);
            let sq = g.square(diff);
            errs.push(g.sum(sq));
            prev = target;
        }
        let sse = g.add_n(&errs);
        let recon = g.scale(sse, 1.0 / (bsz * n * 2) as f64);
        let mu2 = g.square(mu);
        let elv = g.exp(lv);
        let a = g.add(mu2, elv);
        let a = g.sub(a, lv);
        let a = g.add_scalar(a, -1.0);
        let kl = g.sum(a);
        let kl = g.scale(kl, 0.5 / bsz as f64);
        let weighted = g.scale(kl, beta);
        let loss = g.add(recon, weighted);
        let (lv_loss, lv_recon, lv_kl) = (g.value(loss).item(), g.value(recon).item(), g.value(kl).item());
        if !lv_loss.is_finite() {
            return Err(Error::Numerical {
                context: "vae_elbo_loss",
                index: 0,
                detail: format!("loss {lv_loss} (reconstruction {lv_recon}, kl {lv_kl})"),
            });
        }
        let mut grads = Gradients::zeros_like(&self.params);
        g.backward(loss, &mut grads);
        Ok(ElboOutput {
            loss: lv_loss,
            reconstruction: lv_recon,
            kl: lv_kl,
            grads,
        })
    }

    fn check_batch(&self, seqs: &[Vec<Point>]) -> Result<usize> {
        let n = seqs.first().ok_or(Error::EmptyBatch)?.len();
        if let Some(bad) = seqs.iter().find(|s| s.len() != n) {
            return Err(Error::MixedSizes {
                expected: n,
                found: bad.len(),
            });
        }
        Ok(n)
    }

    /// Posterior means (`count x d`) of canonicalised instances.
    pub fn encode_means(&self, instances: &[TspInstance]) -> Result<Matrix> {
        common_size(instances)?;
        let d = self.config.latent_dim;
        let mut out = Matrix::zeros(instances.len(), d);
        for (ci, chunk) in instances.chunks(256).enumerate() {
            let seqs: Vec<_> = chunk.iter().map(canonicalize_sequence).collect();
            let mut g = Graph::new(&self.params);
            let (mu, _) = self.encode_on(&mut g, &seqs);
            let mu = g.value(mu);
            for r in 0..chunk.len() {
                out.row_mut(ci * 256 + r).copy_from_slice(mu.row(r));
            }
        }
        Ok(out)
    }

    /// Decodes each row of `z` (`count x d`) autoregressively into an instance.
    pub fn decode_latents(&self, z: &Matrix) -> Result<Vec<TspInstance>> {
        self.decode_latents_with(z, 0.0, 0)
    }

    /// Decodes with Gaussian observation noise of standard deviation
    /// `output_std` added to every emitted point (and fed back), clamped to
    /// the unit square. Row `i` draws its noise from
    /// `derive_rng(noise_seed, "vae/obs", [i])`.
    pub fn decode_latents_with(&self, z: &Matrix, output_std: f64, noise_seed: u64) -> Result<Vec<TspInstance>> {
        let d = self.config.latent_dim;
        if z.cols() != d {
            return Err(Error::Config(format!("latent width {} != {d}", z.cols())));
        }
        if !(output_std >= 0.0 && output_std.is_finite()) {
            return Err(Error::Config(format!("output_std must be finite and >= 0, got {output_std}")));
        }
        let mut out = Vec::with_capacity(z.rows());
        let mut start = 0;
        while start < z.rows() {
            let end = (start + 256).min(z.rows());
            let block = Matrix::from_vec(end - start, d, z.data()[start * d..end * d].to_vec());
            let bsz = block.rows();
            let mut g = Graph::new(&self.params);
            let zv = g.input(block);
            let (mut h, mut c, zpart) = self.decoder_init(&mut g, zv);
            let mut prev = g.input(Matrix::zeros(bsz, 2));
            let mut pts = vec![Vec::with_capacity(self.config.n); bsz];
            let mut noise: Vec<ChaCha8Rng> = if output_std > 0.0 {
                (start..end).map(|i| derive_rng(noise_seed, "vae/obs", &[i as u64])).collect()
            } else {
                Vec::new()
            };
            for _ in 0..self.config.n {
                let (o, h2, c2) = self.decoder_step(&mut g, prev, zpart, h, c);
                (h, c) = (h2, c2);
                let mut v = g.value(o).clone();
                for (b, r) in noise.iter_mut().enumerate() {
                    for x in v.row_mut(b) {
                        let e: f64 = r.sample(StandardNormal);
                        *x = (*x + output_std * e).clamp(0.0, 1.0);
                    }
                }
                for (b, p) in pts.iter_mut().enumerate() {
                    p.push(Point::new(v.get(b, 0), v.get(b, 1)));
                }
                prev = g.input(v);
            }
            for (b, p) in pts.into_iter().enumerate() {
                out.push(TspInstance::new(p).map_err(|e| Error::Numerical {
                    context: "vae decode",
                    index: start + b,
                    detail: e.to_string(),
                })?);
            }
            start = end;
        }
        Ok(out)
    }
}

/// ELBO loss of a batch with reparameterisation noise drawn from `seed`.
pub fn vae_elbo_loss(model: &VaeModel, batch: &[TspInstance], beta: f64, seed: u64) -> Result<ElboOutput> {
    common_size(batch)?;
    let seqs: Vec<_> = batch.iter().map(canonicalize_sequence).collect();
    let eps = normal_matrix(batch.len(), model.config.latent_dim, &mut ChaCha8Rng::seed_from_u64(seed));
    model.elbo_with_noise(&seqs, beta, &eps)
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VaeTrainConfig {
    pub generator: GeneratorConfig,
    /// Fresh instances drawn per epoch.
    pub samples_per_epoch: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// KL weight reached at the end of the warm-up.
    pub beta_max: f64,
    /// Fraction of epochs over which the KL weight ramps from 0.
    pub anneal_fraction: f64,
    pub seed: u64,
}

impl VaeTrainConfig {
    pub fn new(generator: GeneratorConfig, epochs: usize, seed: u64) -> Self {
        VaeTrainConfig {
            generator,
            samples_per_epoch: 2000,
            epochs,
            batch_size: 64,
            optimizer: AdamConfig {
                lr: 1e-3,
                ..AdamConfig::default()
            },
            beta_max: 1.0,
            anneal_fraction: 0.2,
            seed,
        }
    }

    /// Desk-scale schedule: 40 epochs of 2000 samples in batches of 16 at
    /// learning rate 2e-3, KL weight capped at 1e-3 (a full-weight KL
    /// collapses the posterior at this budget).
    pub fn toy(generator: GeneratorConfig, seed: u64) -> Self {
        let mut c = Self::new(generator, 40, seed);
        c.batch_size = 16;
        c.optimizer.lr = 2e-3;
        c.beta_max = 1e-3;
        c
    }

    pub fn beta_at(&self, epoch: usize) -> f64 {
        let ramp = self.anneal_fraction * self.epochs as f64;
        if ramp <= 0.0 {
            self.beta_max
        } else {
            self.beta_max * (epoch as f64 / ramp).min(1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaeEpochLog {
    pub epoch: usize,
    pub reconstruction: f64,
    pub kl: f64,
    pub beta: f64,
    pub loss: f64,
}

/// Trains on freshly sampled batches each epoch. Epoch `e` draws its data
/// with generator seed `derive_seed(seed, "vae/data", [e])`.
pub fn train_vae(model: &mut VaeModel, cfg: &VaeTrainConfig) -> Result<Vec<VaeEpochLog>> {
    cfg.generator.validate()?;
    if cfg.generator.n != model.config.n {
        return Err(Error::Config(format!(
            "generator n {} differs from model n {}",
            cfg.generator.n, model.config.n
        )));
    }
    if cfg.batch_size == 0 || cfg.samples_per_epoch == 0 {
        return Err(Error::Config("batch_size and samples_per_epoch must be positive".into()));
    }
    let mut adam = Adam::new(cfg.optimizer, &model.params);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let beta = cfg.beta_at(epoch);
        let gen = GeneratorConfig {
            seed: derive_seed(cfg.seed, "vae/data", &[epoch as u64]),
            ..cfg.generator.clone()
        };
        let data = gen.sample_many(cfg.samples_per_epoch)?;
        let (mut rec, mut kl, mut loss, mut seen) = (0.0, 0.0, 0.0, 0usize);
        for (bi, chunk) in data.chunks(cfg.batch_size).enumerate() {
            let mut out = vae_elbo_loss(
                model,
                chunk,
                beta,
                derive_seed(cfg.seed, "vae/eps", &[epoch as u64, bi as u64]),
            )
            .map_err(|e| match e {
                Error::Numerical { context, detail, .. } => Error::Numerical {
                    context,
                    index: bi,
                    detail: format!("epoch {epoch}: {detail}"),
                },
                other => other,
            })?;
            adam.step(&mut model.params, &mut out.grads);
            let w = chunk.len();
            rec += out.reconstruction * w as f64;
            kl += out.kl * w as f64;
            loss += out.loss * w as f64;
            seen += w;
        }
        let s = seen as f64;
        history.push(VaeEpochLog {
            epoch,
            reconstruction: rec / s,
            kl: kl / s,
            beta,
            loss: loss / s,
        });
    }
    if let Some(last) = history.last() {
        // Maximum-likelihood variance of the Gaussian observation model is
        // the per-coordinate mean squared residual.
        model.set_output_std(last.reconstruction.sqrt())?;
    }
    Ok(history)
}

/// Draws `count` latents from N(0, I) (row `i` from
/// `derive_rng(seed, "vae/z", [i])`) and decodes them through the model's
/// observation noise (see [`VaeModel::decode_latents_with`]).
pub fn sample_instances(model: &VaeModel, count: usize, seed: u64) -> Result<Vec<TspInstance>> {
    let d = model.config.latent_dim;
    let mut z = Matrix::zeros(count, d);
    for i in 0..count {
        let mut rng = derive_rng(seed, "vae/z", &[i as u64]);
        for v in z.row_mut(i) {
            *v = rng.sample(StandardNormal);
        }
    }
    model.decode_latents_with(&z, model.output_std, seed)
}
