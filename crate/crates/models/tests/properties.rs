use cogs_autodiff::{Adam, AdamConfig, Matrix};
use cogs_core::distributions::sample_uniform;
use cogs_core::{Point, TspInstance};
use cogs_models::hac::{gradient_magnitude_stats, hac_step, reweight};
use cogs_models::vae::{canonicalize_sequence, kl_divergence};
use cogs_models::{
    maybe_update_baseline, reinforce_loss, sample_instances, DecodeMode, HacConfig, PolicyConfig, RolloutBaseline, SolverPolicy,
    Surrogate, VaeConfig, VaeModel,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn is_permutation(order: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n && order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decoded_tours_are_permutations(seed in any::<u64>(), n in 5usize..=50, sample in any::<bool>()) {
        let p = SolverPolicy::new(PolicyConfig::tiny(), seed).unwrap();
        let inst = sample_uniform(n, seed ^ 0x55).unwrap();
        let r = if sample {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            p.decode_one(&inst, DecodeMode::Sample(&mut rng)).unwrap()
        } else {
            p.decode_one(&inst, DecodeMode::Greedy).unwrap()
        };
        prop_assert!(is_permutation(r.tour.order(), n));
        prop_assert_eq!(r.step_log_probs.len(), n);
        prop_assert!(r.log_probability <= 0.0);
    }

    #[test]
    fn kl_is_nonnegative(mu in prop::collection::vec(-20.0f64..20.0, 8), lv in prop::collection::vec(-10.0f64..10.0, 8)) {
        let k = kl_divergence(&Matrix::from_vec(2, 4, mu), &Matrix::from_vec(2, 4, lv));
        prop_assert!(k >= 0.0);
    }

    #[test]
    fn decoder_output_stays_in_unit_square(seed in any::<u64>(), scale in 0.0f64..100.0) {
        let m = VaeModel::new(VaeConfig { n: 6, latent_dim: 4, hidden: 8 }, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..12).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
        let norm = raw.chunks(4).map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max).max(1e-12);
        let z = Matrix::from_vec(3, 4, raw.iter().map(|v| v / norm * scale).collect());
        for inst in m.decode_latents(&z).unwrap() {
            prop_assert!(inst.points().iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
        }
    }

    #[test]
    fn canonical_sequence_is_idempotent_sorted_permutation(pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 2..30)) {
        let inst = TspInstance::from_pairs(&pairs).unwrap();
        let c = canonicalize_sequence(&inst);
        let again = canonicalize_sequence(&TspInstance::new(c.clone()).unwrap());
        prop_assert_eq!(&again, &c);
        prop_assert!(c.windows(2).all(|w| (w[0].x, w[0].y) <= (w[1].x, w[1].y)));
        let key = |p: &Point| (p.x.to_bits(), p.y.to_bits());
        let mut a: Vec<_> = inst.points().iter().map(key).collect();
        let mut b: Vec<_> = c.iter().map(key).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reweight_sums_to_batch_and_is_monotone(scores in prop::collection::vec(-3.0f64..3.0, 1..64), tau in 0.05f64..10.0, rot in 0usize..64) {
        let w = reweight(&scores, tau);
        prop_assert!((w.iter().sum::<f64>() - scores.len() as f64).abs() < 1e-9);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if scores[i] > scores[j] {
                    prop_assert!(w[i] > w[j] || (w[i] - w[j]).abs() < 1e-300);
                }
            }
        }
        let k = rot % scores.len();
        let mut rs = scores.clone();
        rs.rotate_left(k);
        let mut rw = w.clone();
        rw.rotate_left(k);
        let w2 = reweight(&rs, tau);
        for (a, b) in w2.iter().zip(&rw) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn strictly_larger_score_gets_strictly_larger_weight() {
    let w = reweight(&[0.0, 1e-3, 2.0], 0.5);
    assert!(w[0] < w[1] && w[1] < w[2]);
}

fn surrogate_batch() -> (SolverPolicy, Vec<TspInstance>) {
    let p = SolverPolicy::new(PolicyConfig::tiny(), 13).unwrap();
    let batch = (0..16).map(|s| sample_uniform(10, 40 + s).unwrap()).collect();
    (p, batch)
}

#[test]
fn hac_step_identity_at_zero_eta_and_clamped_otherwise() {
    let (p, batch) = surrogate_batch();
    let sur = Surrogate::LocalSearch { restarts: 3, seed: 1 };
    let zero = HacConfig {
        eta: 0.0,
        ..HacConfig::default()
    };
    assert_eq!(hac_step(&p, &sur, &batch, &zero).unwrap(), batch);
    let big = HacConfig {
        eta: 50.0,
        steps: 2,
        ..HacConfig::default()
    };
    for inst in hac_step(&p, &sur, &batch, &big).unwrap() {
        assert!(inst.points().iter().all(|q| (0.0..=1.0).contains(&q.x) && (0.0..=1.0).contains(&q.y)));
    }
}

#[test]
fn magnitude_stats_are_linear_in_eta() {
    let (p, batch) = surrogate_batch();
    let sur = Surrogate::LocalSearch { restarts: 3, seed: 1 };
    let cfg = |eta| HacConfig {
        eta,
        ..HacConfig::default()
    };
    assert_eq!(gradient_magnitude_stats(&p, &sur, &batch, &cfg(0.0)).unwrap(), (0.0, 0.0));
    let (m1, d1) = gradient_magnitude_stats(&p, &sur, &batch, &cfg(0.3)).unwrap();
    let (m2, d2) = gradient_magnitude_stats(&p, &sur, &batch, &cfg(0.6)).unwrap();
    assert!(m1 > 0.0);
    assert_eq!(m2, 2.0 * m1);
    assert_eq!(d2, 2.0 * d1);
}

#[test]
fn zero_learning_rate_leaves_parameters_bit_identical() {
    let mut p = SolverPolicy::new(PolicyConfig::tiny(), 17).unwrap();
    let base = SolverPolicy::new(PolicyConfig::tiny(), 18).unwrap();
    let before = p.params().clone();
    let batch: Vec<_> = (0..4).map(|s| sample_uniform(7, s).unwrap()).collect();
    let mut out = reinforce_loss(&p, &batch, &base, None, 2).unwrap();
    assert!(out.grads.global_norm() > 0.0);
    let mut adam = Adam::new(
        AdamConfig {
            lr: 0.0,
            ..AdamConfig::default()
        },
        p.params(),
    );
    adam.step(p.params_mut(), &mut out.grads);
    for (a, b) in before.values().iter().zip(p.params().values()) {
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn better_policy_replaces_baseline() {
    // Pick the better of two random policies on a validation set where it
    // wins every instance.
    let val: Vec<_> = (0..3).map(|s| sample_uniform(8, 900 + s).unwrap()).collect();
    let costs = |p: &SolverPolicy| cogs_models::policy::greedy_costs(p, &val).unwrap();
    let mut found = None;
    'outer: for a in 0..50u64 {
        for b in (a + 1)..50 {
            let (pa, pb) = (
                SolverPolicy::new(PolicyConfig::tiny(), a).unwrap(),
                SolverPolicy::new(PolicyConfig::tiny(), b).unwrap(),
            );
            let (ca, cb) = (costs(&pa), costs(&pb));
            if ca.iter().zip(&cb).all(|(x, y)| x < y) {
                found = Some((pa, pb));
                break 'outer;
            }
        }
    }
    let (better, worse) = found.expect("some pair is ordered on every instance");
    let mut baseline = RolloutBaseline::new(&worse);
    let u = maybe_update_baseline(&better, &mut baseline, &val).unwrap();
    assert!(u.replaced && u.policy_cost < u.baseline_cost);
    assert_eq!(baseline.policy().params(), better.params());
    // The reverse comparison keeps the (now better) baseline.
    let u = maybe_update_baseline(&worse, &mut baseline, &val).unwrap();
    assert!(!u.replaced);
}

fn clustered(n: usize, seed: u64) -> cogs_core::distributions::GeneratorConfig {
    cogs_core::distributions::GeneratorConfig::new(
        cogs_core::distributions::GeneratorKind::default_clustered_uniform(),
        n,
        seed,
    )
}

fn small_vae() -> VaeModel {
    VaeModel::new(
        VaeConfig {
            n: 6,
            latent_dim: 3,
            hidden: 6,
        },
        8,
    )
    .unwrap()
}

#[test]
fn zero_vae_epochs_change_nothing() {
    let mut m = small_vae();
    let before = m.params().clone();
    let logs = cogs_models::train_vae(&mut m, &cogs_models::VaeTrainConfig::new(clustered(6, 1), 0, 1)).unwrap();
    assert!(logs.is_empty());
    assert_eq!(m.params(), &before);
    assert_eq!(m.output_std(), 0.0);
}

#[test]
fn vae_training_is_deterministic_and_fits_noise_scale() {
    let mut cfg = cogs_models::VaeTrainConfig::new(clustered(6, 2), 3, 2);
    cfg.samples_per_epoch = 64;
    cfg.batch_size = 16;
    let (mut a, mut b) = (small_vae(), small_vae());
    let la = cogs_models::train_vae(&mut a, &cfg).unwrap();
    let lb = cogs_models::train_vae(&mut b, &cfg).unwrap();
    assert_eq!(la, lb);
    assert_eq!(a.params(), b.params());
    assert_eq!(a.output_std(), la[2].reconstruction.sqrt());
    assert_eq!(la.iter().map(|l| l.beta).collect::<Vec<_>>(), vec![0.0, 1.0, 1.0]);
}

#[test]
fn prior_samples_are_counted_bounded_and_reproducible() {
    let mut m = small_vae();
    for std in [0.0, 0.25] {
        m.set_output_std(std).unwrap();
        let a = sample_instances(&m, 40, 3).unwrap();
        assert_eq!(a.len(), 40);
        assert!(a.iter().all(|i| i.n() == 6));
        assert!(a
            .iter()
            .all(|i| i.points().iter().all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y))));
        assert_eq!(a, sample_instances(&m, 40, 3).unwrap());
        // Row i does not depend on how many rows are drawn.
        assert_eq!(a[..7], sample_instances(&m, 7, 3).unwrap()[..]);
    }
    assert!(m.set_output_std(-1.0).is_err());
}

#[test]
fn vae_checkpoint_keeps_noise_scale() {
    let mut m = small_vae();
    m.set_output_std(0.125).unwrap();
    let ck = cogs_models::Checkpoint::for_vae(&m, None, 4, None);
    let back = cogs_models::Checkpoint::decode(&ck.encode()).unwrap().vae().unwrap();
    assert_eq!(back.output_std(), 0.125);
    assert_eq!(back.params(), m.params());
}
