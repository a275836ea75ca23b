//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (no libtest harness) so the lines are always
//! printed. Exits nonzero when any hard criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use cogs_autodiff::{Gradients, Matrix, ParamId, ParamStore};
use cogs_core::dataset::InstanceDataset;
use cogs_core::distributions::{sample_uniform, GeneratorConfig, GeneratorKind};
use cogs_core::oracle::{brute_force, held_karp, local_search_oracle};
use cogs_core::seed::{derive_rng, derive_seed};
use cogs_core::stats::{pearson, welch_t_test};
use cogs_core::tsplib::{build_tsplib50, load_source_dir, Tsplib50Options};
use cogs_core::{Point, TspInstance};
use cogs_models::hac::{gradient_magnitude_stats, hac_step, hardness, hardness_gradient};
use cogs_models::pca::{convex_hull_area, latent_pca_projection};
use cogs_models::{
    canonicalize_sequence, reinforce_loss, sample_instances, train_vae, DecodeMode, HacConfig, PolicyConfig,
    SolverPolicy, Surrogate, VaeConfig, VaeModel, VaeTrainConfig,
};
use cogs_pipeline::eval::{tail_mean, GapReport};
use cogs_pipeline::experiment::{build_validation, run_mode, warm_up, TestSet};
use cogs_pipeline::{NoProbe, PipelineConfig, TrainingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

fn in_unit_square(inst: &TspInstance) -> bool {
    inst.points()
        .iter()
        .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y))
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for n in 4..=9usize {
        for i in 0..200u64 {
            let inst = sample_uniform(n, derive_seed(1, "acceptance/c1", &[n as u64, i])).unwrap();
            let (hk, bf) = (held_karp(&inst).unwrap().length(), brute_force(&inst).unwrap().length());
            worst = worst.max((hk - bf).abs() / bf);
            count += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-9 && t < Duration::from_secs(60),
        format!("{count} instances, max relative difference {worst:.2e}, {t:.2?}"),
    )
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let gaps: Vec<f64> = (0..100u64)
        .map(|i| {
            let inst = sample_uniform(12, derive_seed(2, "acceptance/c2", &[i])).unwrap();
            let exact = held_karp(&inst).unwrap().length();
            (local_search_oracle(&inst, 20, i).unwrap().length() - exact) / exact
        })
        .collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let t = start.elapsed();
    verdict(
        mean <= 0.01 && t < Duration::from_secs(120),
        format!("mean gap {:.4}% over 100 instances, {t:.2?}", 100.0 * mean),
    )
}

fn criterion_3() -> Verdict {
    let mut bad_tours = 0;
    let mut decodes = 0;
    for init in 0..100u64 {
        let policy = SolverPolicy::new(PolicyConfig::toy(), derive_seed(3, "acceptance/c3/policy", &[init])).unwrap();
        let mut rng = derive_rng(3, "acceptance/c3/rng", &[init]);
        for k in 0..100u64 {
            let n = rng.random_range(5..=50);
            let inst = sample_uniform(n, derive_seed(3, "acceptance/c3/inst", &[init, k])).unwrap();
            let r = if k % 2 == 0 {
                policy.decode_one(&inst, DecodeMode::Greedy).unwrap()
            } else {
                policy.decode_one(&inst, DecodeMode::Sample(&mut rng)).unwrap()
            };
            decodes += 1;
            if !is_permutation(r.tour.order(), n) {
                bad_tours += 1;
            }
        }
    }
    let mut bad_points = 0;
    let mut vae_decodes = 0;
    for init in 0..10u64 {
        let vae = VaeModel::new(VaeConfig::toy(20), derive_seed(3, "acceptance/c3/vae", &[init])).unwrap();
        let d = vae.config().latent_dim;
        let mut rng = derive_rng(3, "acceptance/c3/z", &[init]);
        let mut z = Matrix::zeros(1000, d);
        for r in 0..1000 {
            let row: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let target = rng.random_range(0.0..=100.0);
            for (o, v) in z.row_mut(r).iter_mut().zip(&row) {
                *o = v / norm * target;
            }
        }
        // Half through the mean decoder, half through observation noise.
        let mean = vae.decode_latents(&Matrix::from_vec(500, d, z.data()[..500 * d].to_vec())).unwrap();
        let noisy = vae
            .decode_latents_with(&Matrix::from_vec(500, d, z.data()[500 * d..].to_vec()), 0.3, init)
            .unwrap();
        for inst in mean.iter().chain(&noisy) {
            vae_decodes += 1;
            if !in_unit_square(inst) {
                bad_points += 1;
            }
        }
    }
    verdict(
        bad_tours == 0 && bad_points == 0 && decodes == 10_000 && vae_decodes == 10_000,
        format!("{decodes} policy decodes, {bad_tours} invalid; {vae_decodes} VAE decodes, {bad_points} out of bounds"),
    )
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn coords(store: &ParamStore, rng: &mut ChaCha8Rng) -> Vec<(ParamId, usize)> {
    let ids: Vec<ParamId> = store.ids().collect();
    (0..20)
        .map(|_| {
            let id = ids[rng.random_range(0..ids.len())];
            (id, rng.random_range(0..store.get(id).data().len()))
        })
        .collect()
}

fn criterion_4() -> Verdict {
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    let policy = SolverPolicy::new(PolicyConfig::tiny(), 41).unwrap();
    let baseline = SolverPolicy::new(PolicyConfig::tiny(), 42).unwrap();
    let batch: Vec<TspInstance> = (0..4).map(|s| sample_uniform(6, 400 + s).unwrap()).collect();
    let w = [1.0, 0.25, 1.5, 1.25];
    let out = reinforce_loss(&policy, &batch, &baseline, Some(&w), 4).unwrap();
    let coefs: Vec<f64> = (0..4)
        .map(|i| w[i] * (out.costs[i] - out.baseline_costs[i]) / 4.0)
        .collect();
    let objective = |p: &SolverPolicy| -> f64 {
        let mut sink = Gradients::zeros_like(p.params());
        batch
            .iter()
            .zip(&out.sampled_orders)
            .zip(&coefs)
            .map(|((inst, order), c)| c * p.log_likelihood_into(inst, order, 0.0, &mut sink).unwrap())
            .sum()
    };
    let mut reinforce_worst: f64 = 0.0;
    for (id, k) in coords(policy.params(), &mut rng) {
        let (mut plus, mut minus) = (policy.clone(), policy.clone());
        plus.params_mut().get_mut(id).data_mut()[k] += h;
        minus.params_mut().get_mut(id).data_mut()[k] -= h;
        let fd = (objective(&plus) - objective(&minus)) / (2.0 * h);
        reinforce_worst = reinforce_worst.max(rel_err(out.grads.get(id).data()[k], fd, 1e-7));
    }

    let vae = VaeModel::new(
        VaeConfig {
            n: 6,
            latent_dim: 3,
            hidden: 4,
        },
        43,
    )
    .unwrap();
    let seqs: Vec<Vec<Point>> = (0..3)
        .map(|s| canonicalize_sequence(&sample_uniform(6, 500 + s).unwrap()))
        .collect();
    let eps = Matrix::from_vec(3, 3, (0..9).map(|_| rng.random_range(-1.5..1.5)).collect());
    let elbo = vae.elbo_with_noise(&seqs, 0.6, &eps).unwrap();
    let loss = |m: &VaeModel| m.elbo_with_noise(&seqs, 0.6, &eps).unwrap().loss;
    let mut elbo_worst: f64 = 0.0;
    for (id, k) in coords(vae.params(), &mut rng) {
        let (mut plus, mut minus) = (vae.clone(), vae.clone());
        plus.params_mut().get_mut(id).data_mut()[k] += h;
        minus.params_mut().get_mut(id).data_mut()[k] -= h;
        let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
        elbo_worst = elbo_worst.max(rel_err(elbo.grads.get(id).data()[k], fd, 1e-7));
    }

    let mut hard_worst: f64 = 0.0;
    for s in 0..8 {
        let inst = sample_uniform(15, 600 + s).unwrap();
        let m = policy.decode_one(&inst, DecodeMode::Greedy).unwrap().tour;
        let sur = local_search_oracle(&inst, 5, s).unwrap().tour;
        let (_, grad) = hardness_gradient(&inst, m.order(), sur.order()).unwrap();
        let cycle = |pts: &[Point], order: &[usize]| -> f64 {
            (0..order.len())
                .map(|k| {
                    let (a, b) = (pts[order[k]], pts[order[(k + 1) % order.len()]]);
                    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
                })
                .sum()
        };
        let fixed = |pts: &[Point]| (cycle(pts, m.order()) - cycle(pts, sur.order())) / cycle(pts, sur.order());
        for (p, g) in grad.iter().enumerate() {
            for axis in 0..2 {
                let shifted = |d: f64| {
                    let mut pts = inst.points().to_vec();
                    if axis == 0 {
                        pts[p].x += d;
                    } else {
                        pts[p].y += d;
                    }
                    fixed(&pts)
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                hard_worst = hard_worst.max(rel_err(g[axis], fd, 1e-6));
            }
        }
    }
    verdict(
        reinforce_worst <= 1e-3 && elbo_worst <= 1e-3 && hard_worst <= 1e-4,
        format!(
            "max relative error: reinforce {reinforce_worst:.2e}, elbo {elbo_worst:.2e}, hardness {hard_worst:.2e}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let cfg = PipelineConfig::toy();
    let val = build_validation(&cfg).unwrap();
    let warm = warm_up(&cfg, &val, None, &mut NoProbe).unwrap();
    let batch: Vec<TspInstance> = (0..512u64)
        .map(|i| sample_uniform(cfg.n, derive_seed(5, "acceptance/c5", &[i])).unwrap())
        .collect();
    let sur = Surrogate::LocalSearch { restarts: 20, seed: 5 };
    let hac = HacConfig::default();
    let before = hardness(&warm.policy, &sur, &batch).unwrap();
    let stepped = hac_step(&warm.policy, &sur, &batch, &hac).unwrap();
    let after = hardness(&warm.policy, &sur, &stepped).unwrap();
    let up = before.iter().zip(&after).filter(|(b, a)| a >= b).count();
    let frac = up as f64 / batch.len() as f64;
    let (mag_mean, mag_median) = gradient_magnitude_stats(&warm.policy, &sur, &batch, &hac).unwrap();
    let mean_before = before.iter().sum::<f64>() / 512.0;
    let mean_after = after.iter().sum::<f64>() / 512.0;
    verdict(
        frac >= 0.8 && (0.005..=0.5).contains(&mag_mean),
        format!(
            "hardness rose on {up}/512 ({:.1}%), mean {mean_before:.4} -> {mean_after:.4}; \
             |eta grad H| mean {mag_mean:.4}, median {mag_median:.4} (reference 0.077 / 0.023)",
            100.0 * frac
        ),
    )
}

/// Trained toy VAEs per seed, shared by the COGS and coverage criteria.
fn toy_vae(seed: u64, kind: &GeneratorKind, n: usize) -> VaeModel {
    let mut vae = VaeModel::new(VaeConfig::toy(n), seed).unwrap();
    train_vae(&mut vae, &VaeTrainConfig::toy(GeneratorConfig::new(kind.clone(), n, seed), seed)).unwrap();
    vae
}

struct Criterion6 {
    verdict: Verdict,
    vaes: Vec<VaeModel>,
    reports: Vec<GapReport>,
}

fn criterion_6() -> Criterion6 {
    let start = Instant::now();
    let base = PipelineConfig::toy();
    let clustered = InstanceDataset::generate(
        "clustered",
        &GeneratorConfig::new(GeneratorKind::default_clustered_uniform(), base.n, 999),
        base.eval_size,
    )
    .unwrap();
    let test = TestSet::solve("clustered", &clustered, &base.oracle).unwrap();
    let mut vaes = Vec::new();
    let mut reports = Vec::new();
    let (mut beats_uniform, mut beats_hac) = (0, 0);
    let mut rows = Vec::new();
    for seed in 0..5u64 {
        let cfg = PipelineConfig { seed, ..base.clone() };
        let vae = toy_vae(seed, &cfg.vae_data, cfg.n);
        let val = build_validation(&cfg).unwrap();
        let warm = warm_up(&cfg, &val, None, &mut NoProbe).unwrap();
        let mut w1 = Vec::new();
        for mode in [TrainingMode::Uniform, TrainingMode::Hac, TrainingMode::Cogs] {
            let run = run_mode(&cfg, &warm, mode, Some(&vae), &val, std::slice::from_ref(&test), None, &mut NoProbe)
                .unwrap();
            let report = run.reports.into_iter().next().unwrap().1;
            w1.push(report.summary.worst_1);
            reports.push(report);
        }
        beats_uniform += usize::from(w1[2] < w1[0]);
        beats_hac += usize::from(w1[2] < w1[1]);
        rows.push(format!("seed {seed}: uniform {:.4} hac {:.4} cogs {:.4}", w1[0], w1[1], w1[2]));
        println!("    criterion 6 {} ({:.0?})", rows.last().unwrap(), start.elapsed());
        vaes.push(vae);
    }
    let t = start.elapsed();
    Criterion6 {
        verdict: verdict(
            beats_uniform >= 4 && beats_hac >= 3 && t <= Duration::from_secs(7200),
            format!(
                "worst-1% clustered gap: cogs < uniform in {beats_uniform}/5, cogs < hac in {beats_hac}/5, {t:.0?} [{}]",
                rows.join("; ")
            ),
        ),
        vaes,
        reports,
    }
}

fn criterion_7(emitted: &[GapReport]) -> Verdict {
    let gaps: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let w1 = tail_mean(&gaps, 1.0);
    let w10 = tail_mean(&gaps, 10.0);
    let r = GapReport::from_gaps(gaps, cogs_core::oracle::OracleMethod::LocalSearch, 0, None);
    let monotone = emitted.iter().chain(std::iter::once(&r)).all(|r| r.summary.tails_monotone());
    verdict(
        w1 == 1.0 && (w10 - 0.955).abs() < 1e-12 && monotone,
        format!(
            "worst 1% = {:.1}%, worst 10% = {:.1}%, {} reports tail-monotone: {monotone}",
            100.0 * w1,
            100.0 * w10,
            emitted.len() + 1
        ),
    )
}

fn criterion_8() -> Verdict {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data");
    let opts = Tsplib50Options::default();
    let (accepted, rejected) = load_source_dir(&dir, opts).unwrap();
    let sources: Vec<_> = accepted.into_iter().map(|(_, s)| s).collect();
    let a = build_tsplib50(&sources, 40, 8, opts).unwrap();
    let b = build_tsplib50(&sources, 40, 8, opts).unwrap();
    let shape_ok = a.len() == 40
        && a.instances.iter().all(|inst| {
            let mut keys: Vec<_> = inst.points().iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
            keys.sort();
            keys.dedup();
            inst.n() == 50 && keys.len() == 50 && in_unit_square(inst)
        });
    let mut skipped: Vec<String> = rejected
        .iter()
        .map(|r| r.path.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    skipped.sort();
    let skips_ok = skipped == ["att532.tsp", "gr17.tsp"];
    verdict(
        shape_ok && a == b && skips_ok && sources.len() == 1,
        format!(
            "{} instances from {} source(s), deterministic: {}, skipped {:?}",
            a.len(),
            sources.len(),
            a == b,
            rejected.iter().map(|r| format!("{} ({})", r.path.file_name().unwrap().to_string_lossy(), r.reason)).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9(vaes: &[VaeModel]) -> Verdict {
    let mut wins = 0;
    let mut rows = Vec::new();
    let mut descending = true;
    for (seed, vae) in vaes.iter().enumerate() {
        let n = vae.config().n;
        let train = GeneratorConfig::new(
            GeneratorKind::default_clustered_uniform(),
            n,
            derive_seed(seed as u64, "acceptance/c9/train", &[]),
        )
        .sample_many(150)
        .unwrap();
        let inference = sample_instances(vae, 150, derive_seed(seed as u64, "acceptance/c9/prior", &[])).unwrap();
        let proj = latent_pca_projection(vae, &[("training".into(), train), ("inference".into(), inference)]).unwrap();
        let [r1, r2] = proj.explained_variance_ratio;
        descending &= r1 >= r2;
        let (at, ai) = (convex_hull_area(&proj.points_of(0)), convex_hull_area(&proj.points_of(1)));
        wins += usize::from(ai >= at);
        rows.push(format!("seed {seed}: training {at:.4}, inference {ai:.4}, ratios {r1:.3}/{r2:.3}"));
    }
    verdict(
        wins >= 3 && descending && vaes.len() == 5,
        format!("inference hull >= training hull in {wins}/{} [{}]", vaes.len(), rows.join("; ")),
    )
}

#[derive(Deserialize)]
struct WelchCase {
    a: Vec<f64>,
    b: Vec<f64>,
    t: f64,
    df: f64,
    p: f64,
}

#[derive(Deserialize)]
struct PearsonCase {
    x: Vec<f64>,
    y: Vec<f64>,
    r: f64,
}

#[derive(Deserialize)]
struct StatsReference {
    welch: Vec<WelchCase>,
    pearson: PearsonCase,
}

/// Welch t and degrees of freedom straight from the textbook formulas.
fn welch_direct(a: &[f64], b: &[f64]) -> (f64, f64) {
    let moments = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (n, m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0))
    };
    let ((na, ma, va), (nb, mb, vb)) = (moments(a), moments(b));
    let (sa, sb) = (va / na, vb / nb);
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    (t, df)
}

fn criterion_10() -> Verdict {
    let text = include_str!("data/stats_reference.json");
    let reference: StatsReference = serde_json::from_str(text).unwrap();
    let (mut t_err, mut df_err, mut p_err, mut direct_err): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for c in &reference.welch {
        let w = welch_t_test(&c.a, &c.b).unwrap();
        let (t, df) = welch_direct(&c.a, &c.b);
        t_err = t_err.max((w.t - c.t).abs());
        df_err = df_err.max((w.df - c.df).abs() / c.df);
        p_err = p_err.max((w.p - c.p).abs());
        direct_err = direct_err.max((w.t - t).abs()).max((w.df - df).abs() / df);
    }
    let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
    let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -0.5 * v + 4.0).collect();
    let (r_up, r_down) = (pearson(&x, &up).unwrap(), pearson(&x, &down).unwrap());
    let r_ref = pearson(&reference.pearson.x, &reference.pearson.y).unwrap();
    let pearson_ok = (r_up - 1.0).abs() < 1e-12 && (r_down + 1.0).abs() < 1e-12 && (r_ref - reference.pearson.r).abs() < 1e-12;
    verdict(
        reference.welch.len() == 20 && t_err <= 1e-9 && direct_err <= 1e-9 && pearson_ok,
        format!(
            "20 pairs: max |t - scipy| {t_err:.1e}, df rel {df_err:.1e}, |p - scipy| {p_err:.1e}, direct-formula {direct_err:.1e}; \
             pearson {r_up:.15} / {r_down:.15}"
        ),
    )
}

fn guarded<T>(f: impl FnOnce() -> T) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).map_err(|e| {
        e.downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())
    })
}

fn report(id: u32, name: &str, result: Result<Verdict, String>, hard: bool, failures: &mut Vec<u32>) {
    let (pass, detail) = match result {
        Ok(v) => (v.pass, v.detail),
        Err(msg) => (false, format!("panicked: {msg}")),
    };
    let tag = match (pass, hard) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "FAIL (logged, not fatal)",
    };
    println!("criterion {id:>2} {name}: {tag} - {detail}");
    if !pass && hard {
        failures.push(id);
    }
}

fn main() {
    // `cargo test` passes libtest flags; a filter that names no criterion
    // (such as `--list`) runs nothing.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let mut failures = Vec::new();
    report(1, "oracle equivalence", guarded(criterion_1), true, &mut failures);
    report(2, "surrogate oracle quality", guarded(criterion_2), true, &mut failures);
    report(3, "permutation and clamp fuzz", guarded(criterion_3), true, &mut failures);
    report(4, "gradient checks", guarded(criterion_4), true, &mut failures);
    report(5, "HAC ascent direction", guarded(criterion_5), true, &mut failures);
    let (c6, vaes, reports) = match guarded(criterion_6) {
        Ok(c) => (Ok(c.verdict), c.vaes, c.reports),
        Err(e) => (Err(e), Vec::new(), Vec::new()),
    };
    report(6, "directional COGS claim", c6, true, &mut failures);
    report(7, "tail-statistic arithmetic", guarded(|| criterion_7(&reports)), true, &mut failures);
    report(8, "TSPLib50 builder", guarded(criterion_8), true, &mut failures);
    report(9, "latent coverage", guarded(|| criterion_9(&vaes)), false, &mut failures);
    report(10, "statistics", guarded(criterion_10), true, &mut failures);
    println!("acceptance finished in {:.0?}", start.elapsed());
    if !failures.is_empty() {
        println!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
