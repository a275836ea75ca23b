//! Central-difference checks of every op's backward rule.

use cogs_autodiff::{Gradients, Graph, Matrix, ParamId, ParamStore, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn check(store: &ParamStore, f: impl Fn(&mut Graph<'_>) -> Var) {
    let mut grads = Gradients::zeros_like(store);
    {
        let mut g = Graph::new(store);
        let out = f(&mut g);
        g.backward(out, &mut grads);
    }
    let eval = |s: &ParamStore| {
        let mut g = Graph::new(s);
        let out = f(&mut g);
        g.value(out).item()
    };
    let h = 1e-5;
    for id in store.ids() {
        for k in 0..store.get(id).data().len() {
            let mut plus = store.clone();
            plus.get_mut(id).data_mut()[k] += h;
            let mut minus = store.clone();
            minus.get_mut(id).data_mut()[k] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let an = grads.get(id).data()[k];
            let tol = 1e-6 * (1.0 + fd.abs().max(an.abs()));
            assert!(
                (fd - an).abs() <= tol,
                "{}[{k}]: analytic {an} vs numeric {fd}",
                store.name(id)
            );
        }
    }
}

fn store_with(shapes: &[(&str, usize, usize)], seed: u64) -> (ParamStore, Vec<ParamId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ParamStore::new();
    let ids = shapes
        .iter()
        .map(|&(n, r, c)| s.add_uniform(n, r, c, 1, &mut rng))
        .collect();
    (s, ids)
}

#[test]
fn matmul_variants() {
    let (s, ids) = store_with(&[("a", 3, 4), ("b", 4, 2), ("c", 5, 4)], 1);
    check(&s, |g| {
        let a = g.param(ids[0]);
        let b = g.param(ids[1]);
        let c = g.param(ids[2]);
        let ab = g.matmul(a, b);
        let act = g.matmul_t(a, c);
        let x = g.tanh(ab);
        let y = g.sigmoid(act);
        let sx = g.sum(x);
        let sy = g.sum(y);
        g.add_n(&[sx, sy, sx])
    });
}

#[test]
fn elementwise_and_broadcast() {
    let (s, ids) = store_with(&[("a", 3, 4), ("b", 3, 4), ("r", 1, 4)], 2);
    check(&s, |g| {
        let a = g.param(ids[0]);
        let b = g.param(ids[1]);
        let r = g.param(ids[2]);
        let m = g.mul(a, b);
        let d = g.sub(m, b);
        let e = g.add_row(d, r);
        let f = g.mul_row(e, r);
        let q = g.square(f);
        let x = g.exp(q);
        let sc = g.scale(x, -0.7);
        let sh = g.add_scalar(sc, 3.0);
        let s = g.add(sh, a);
        g.sum(s)
    });
}

#[test]
fn relu_away_from_kink() {
    let mut s = ParamStore::new();
    let id = s.add(
        "a",
        Matrix::from_vec(2, 3, vec![0.5, -0.3, 1.2, -0.8, 0.1, 2.0]),
    );
    check(&s, |g| {
        let a = g.param(id);
        let r = g.relu(a);
        let sq = g.square(r);
        g.sum(sq)
    });
}

#[test]
fn slicing_and_gathers() {
    let (s, ids) = store_with(&[("a", 4, 6), ("b", 4, 2)], 3);
    check(&s, |g| {
        let a = g.param(ids[0]);
        let b = g.param(ids[1]);
        let left = g.cols(a, 1, 3);
        let cat = g.concat_cols(&[left, b, left]);
        let rows = g.rows(cat, &[3, 0, 3, 2]);
        let m = g.mean_rows(rows);
        let t = g.tanh(m);
        let p = g.pick(cat, 2, 4);
        let s = g.sum(t);
        g.add(s, p)
    });
}

#[test]
fn normalisers() {
    let (s, ids) = store_with(&[("a", 3, 5), ("w", 5, 5)], 4);
    let mask = [false, true, false, false, true];
    check(&s, |g| {
        let a = g.param(ids[0]);
        let w = g.param(ids[1]);
        let ln = g.layer_norm(a, 1e-5);
        let h = g.matmul(ln, w);
        let sm = g.softmax_rows(h, None);
        let smm = g.softmax_rows(h, Some(&mask));
        let lsm = g.log_softmax_rows(h, Some(&mask));
        let x = g.mul(sm, smm);
        let p1 = g.pick(lsm, 0, 2);
        let p2 = g.pick(lsm, 2, 3);
        let s = g.sum(x);
        let sc = g.scale(s, 5.0);
        g.add_n(&[sc, p1, p2])
    });
}

#[test]
fn masked_entries_are_excluded() {
    let mut s = ParamStore::new();
    let id = s.add("a", Matrix::row_vector(vec![0.3, 5.0, -0.2]));
    let mask = [false, true, false];
    let mut g = Graph::new(&s);
    let a = g.param(id);
    let sm = g.softmax_rows(a, Some(&mask));
    let lsm = g.log_softmax_rows(a, Some(&mask));
    let v = g.value(sm).data().to_vec();
    assert_eq!(v[1], 0.0);
    assert!((v[0] + v[2] - 1.0).abs() < 1e-12);
    assert_eq!(g.value(lsm).get(0, 1), f64::NEG_INFINITY);
    let p = g.pick(lsm, 0, 0);
    let mut grads = Gradients::zeros_like(&s);
    g.backward(p, &mut grads);
    assert_eq!(grads.get(id).data()[1], 0.0);
    assert!(grads.is_finite());
}

#[test]
fn params_bind_once_and_inputs_get_no_gradient() {
    let (s, ids) = store_with(&[("w", 2, 2)], 5);
    let mut g = Graph::new(&s);
    let w1 = g.param(ids[0]);
    let w2 = g.param(ids[0]);
    assert_eq!(w1, w2);
    let x = g.input(Matrix::from_vec(1, 2, vec![1.0, 2.0]));
    let y = g.matmul(x, w1);
    let out = g.sum(y);
    let mut grads = Gradients::zeros_like(&s);
    g.backward_scaled(out, 2.0, &mut grads);
    assert_eq!(grads.get(ids[0]).data(), &[2.0, 2.0, 4.0, 4.0]);
}
