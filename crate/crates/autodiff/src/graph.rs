use crate::matrix::{gemm_acc, Operand};
use crate::{Gradients, Matrix, ParamId, ParamStore};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Value<'p> {
    Own(Matrix),
    Param(&'p Matrix),
}

impl Value<'_> {
    #[inline]
    fn get(&self) -> &Matrix {
        match self {
            Value::Own(m) => m,
            Value::Param(m) => m,
        }
    }
}

enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddN(Vec<Var>),
    AddRow(Var, Var),
    MulRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Exp(Var),
    Square(Var),
    Cols { a: Var, start: usize },
    Concat(Vec<Var>),
    Rows { a: Var, idx: Vec<usize> },
    MeanRows(Var),
    Sum(Var),
    LayerNorm { a: Var, inv_std: Vec<f64> },
    Softmax(Var),
    LogSoftmax { a: Var, mask: Option<Vec<bool>> },
    Pick { a: Var, r: usize, c: usize },
}

struct Node<'p> {
    value: Value<'p>,
    op: Op,
    requires_grad: bool,
}

/// A tape of eagerly evaluated matrix ops over parameters borrowed from a
/// [`ParamStore`].
pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node<'p>>,
    bound: Vec<Option<Var>>,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            bound: vec![None; store.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        self.nodes[v.0].value.get()
    }

    fn push(&mut self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Value::Own(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A constant input.
    pub fn input(&mut self, m: Matrix) -> Var {
        self.push(m, Op::Leaf, false)
    }

    /// The node for parameter `id`; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.bound[id.0] {
            return v;
        }
        self.nodes.push(Node {
            value: Value::Param(self.store.get(id)),
            op: Op::Param(id),
            requires_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.bound[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::MatMul(a, b), rg)
    }

    /// `a * b^T`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let out = self.value(a).matmul_t(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::MatMulT(a, b), rg)
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "elementwise shape mismatch");
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Matrix::from_vec(x.rows(), x.cols(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip(a, b, |p, q| p + q);
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Add(a, b), rg)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip(a, b, |p, q| p - q);
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Sub(a, b), rg)
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let out = self.zip(a, b, |p, q| p * q);
        let rg = self.rg(a) || self.rg(b);
        self.push(out, Op::Mul(a, b), rg)
    }

    /// Sum of equally shaped nodes.
    pub fn add_n(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "add_n of nothing");
        let mut out = self.value(vars[0]).clone();
        for &v in &vars[1..] {
            out.add_assign(self.value(v));
        }
        let rg = vars.iter().any(|&v| self.rg(v));
        self.push(out, Op::AddN(vars.to_vec()), rg)
    }

    fn broadcast(&self, a: Var, row: Var, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (x, r) = (self.value(a), self.value(row));
        assert_eq!(r.rows(), 1, "broadcast operand must be a row");
        assert_eq!(x.cols(), r.cols(), "broadcast width mismatch");
        let mut out = x.clone();
        for i in 0..x.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(r.data()) {
                *o = f(*o, b);
            }
        }
        out
    }

    /// Adds a 1xC row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let out = self.broadcast(a, row, |p, q| p + q);
        let rg = self.rg(a) || self.rg(row);
        self.push(out, Op::AddRow(a, row), rg)
    }

    /// Multiplies every row of `a` elementwise by a 1xC row.
    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        let out = self.broadcast(a, row, |p, q| p * q);
        let rg = self.rg(a) || self.rg(row);
        self.push(out, Op::MulRow(a, row), rg)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v * s);
        let rg = self.rg(a);
        self.push(out, Op::Scale(a, s), rg)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let out = self.value(a).map(|v| v + s);
        let rg = self.rg(a);
        self.push(out, Op::AddScalar(a), rg)
    }

    fn unary(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let out = self.value(a).map(f);
        let rg = self.rg(a);
        self.push(out, op, rg)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, f64::tanh, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |v| v.max(0.0), Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, f64::exp, Op::Exp(a))
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, |v| v * v, Op::Square(a))
    }

    /// Columns `start..start + width`.
    pub fn cols(&mut self, a: Var, start: usize, width: usize) -> Var {
        let x = self.value(a);
        assert!(start + width <= x.cols(), "column slice out of range");
        let mut out = Matrix::zeros(x.rows(), width);
        for r in 0..x.rows() {
            out.row_mut(r)
                .copy_from_slice(&x.row(r)[start..start + width]);
        }
        let rg = self.rg(a);
        self.push(out, Op::Cols { a, start }, rg)
    }

    /// Horizontal concatenation.
    pub fn concat_cols(&mut self, vars: &[Var]) -> Var {
        assert!(!vars.is_empty(), "concat of nothing");
        let rows = self.value(vars[0]).rows();
        let width: usize = vars.iter().map(|&v| self.value(v).cols()).sum();
        let mut out = Matrix::zeros(rows, width);
        let mut off = 0;
        for &v in vars {
            let x = self.value(v);
            assert_eq!(x.rows(), rows, "concat row mismatch");
            for r in 0..rows {
                out.row_mut(r)[off..off + x.cols()].copy_from_slice(x.row(r));
            }
            off += x.cols();
        }
        let rg = vars.iter().any(|&v| self.rg(v));
        self.push(out, Op::Concat(vars.to_vec()), rg)
    }

    /// Gathers rows by index (indices may repeat).
    pub fn rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let x = self.value(a);
        let mut out = Matrix::zeros(idx.len(), x.cols());
        for (i, &r) in idx.iter().enumerate() {
            out.row_mut(i).copy_from_slice(x.row(r));
        }
        let rg = self.rg(a);
        self.push(
            out,
            Op::Rows {
                a,
                idx: idx.to_vec(),
            },
            rg,
        )
    }

    /// Column means as a 1xC row.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let mut out = Matrix::zeros(1, x.cols());
        for r in 0..x.rows() {
            for (o, &v) in out.data_mut().iter_mut().zip(x.row(r)) {
                *o += v;
            }
        }
        out.scale_assign(1.0 / x.rows() as f64);
        let rg = self.rg(a);
        self.push(out, Op::MeanRows(a), rg)
    }

    /// Sum of all entries as a 1x1 node.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        let rg = self.rg(a);
        self.push(Matrix::scalar(s), Op::Sum(a), rg)
    }

    /// Per-row standardisation without affine terms.
    pub fn layer_norm(&mut self, a: Var, eps: f64) -> Var {
        let x = self.value(a);
        let c = x.cols() as f64;
        let mut out = x.clone();
        let mut inv_std = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let row = out.row_mut(r);
            let mu = row.iter().sum::<f64>() / c;
            let var = row.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / c;
            let inv = 1.0 / (var + eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mu) * inv;
            }
            inv_std.push(inv);
        }
        let rg = self.rg(a);
        self.push(out, Op::LayerNorm { a, inv_std }, rg)
    }

    /// Row-wise softmax. Columns flagged in `mask` get probability zero.
    pub fn softmax_rows(&mut self, a: Var, mask: Option<&[bool]>) -> Var {
        let mut out = self.value(a).clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let lse = masked_logsumexp(row, mask);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if is_masked(mask, c) { 0.0 } else { (*v - lse).exp() };
            }
        }
        let rg = self.rg(a);
        self.push(out, Op::Softmax(a), rg)
    }

    /// Row-wise log-softmax. Masked columns hold `-inf` and receive no
    /// gradient.
    pub fn log_softmax_rows(&mut self, a: Var, mask: Option<&[bool]>) -> Var {
        let mut out = self.value(a).clone();
        if let Some(m) = mask {
            assert_eq!(m.len(), out.cols(), "mask width");
        }
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let lse = masked_logsumexp(row, mask);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if is_masked(mask, c) {
                    f64::NEG_INFINITY
                } else {
                    *v - lse
                };
            }
        }
        let rg = self.rg(a);
        self.push(
            out,
            Op::LogSoftmax {
                a,
                mask: mask.map(<[bool]>::to_vec),
            },
            rg,
        )
    }

    /// Entry `(r, c)` as a 1x1 node.
    pub fn pick(&mut self, a: Var, r: usize, c: usize) -> Var {
        let v = self.value(a).get(r, c);
        let rg = self.rg(a);
        self.push(Matrix::scalar(v), Op::Pick { a, r, c }, rg)
    }

    /// Back-propagates from the 1x1 node `out` and adds parameter gradients
    /// into `grads`.
    pub fn backward(&self, out: Var, grads: &mut Gradients) {
        self.backward_scaled(out, 1.0, grads);
    }

    /// As [`Graph::backward`] with the seed gradient set to `seed`.
    pub fn backward_scaled(&self, out: Var, seed: f64, grads: &mut Gradients) {
        assert_eq!(self.value(out).shape(), (1, 1), "backward from non-scalar");
        if !self.rg(out) {
            return;
        }
        let mut g: Vec<Option<Matrix>> = Vec::with_capacity(out.0 + 1);
        g.resize_with(out.0 + 1, || None);
        g[out.0] = Some(Matrix::scalar(seed));
        for i in (0..=out.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            self.propagate(node, gi, &mut g, grads);
        }
    }

    fn propagate(&self, node: &Node<'_>, gy: Matrix, g: &mut [Option<Matrix>], grads: &mut Gradients) {
        let y = node.value.get();
        match &node.op {
            Op::Leaf => {}
            Op::Param(id) => grads.accumulate(*id, &gy),
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    let mut d = Matrix::zeros(y.rows(), self.value(*a).cols());
                    gemm_acc(Operand::plain(&gy), Operand::transposed(self.value(*b)), &mut d);
                    acc(g, *a, d);
                }
                if self.rg(*b) {
                    let mut d = Matrix::zeros(self.value(*b).rows(), y.cols());
                    gemm_acc(Operand::transposed(self.value(*a)), Operand::plain(&gy), &mut d);
                    acc(g, *b, d);
                }
            }
            Op::MatMulT(a, b) => {
                if self.rg(*a) {
                    acc(g, *a, gy.matmul(self.value(*b)));
                }
                if self.rg(*b) {
                    acc(g, *b, gy.t_matmul(self.value(*a)));
                }
            }
            Op::Add(a, b) => {
                if self.rg(*b) {
                    acc(g, *b, gy.clone());
                }
                if self.rg(*a) {
                    acc(g, *a, gy);
                }
            }
            Op::Sub(a, b) => {
                if self.rg(*b) {
                    acc(g, *b, gy.map(|v| -v));
                }
                if self.rg(*a) {
                    acc(g, *a, gy);
                }
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    acc(g, *a, hadamard(&gy, self.value(*b)));
                }
                if self.rg(*b) {
                    acc(g, *b, hadamard(&gy, self.value(*a)));
                }
            }
            Op::AddN(vars) => {
                for &v in vars {
                    if self.rg(v) {
                        acc(g, v, gy.clone());
                    }
                }
            }
            Op::AddRow(a, row) => {
                if self.rg(*row) {
                    acc(g, *row, col_sums(&gy));
                }
                if self.rg(*a) {
                    acc(g, *a, gy);
                }
            }
            Op::MulRow(a, row) => {
                let r = self.value(*row);
                if self.rg(*row) {
                    acc(g, *row, col_sums(&hadamard(&gy, self.value(*a))));
                }
                if self.rg(*a) {
                    let mut d = gy;
                    for i in 0..d.rows() {
                        for (o, &b) in d.row_mut(i).iter_mut().zip(r.data()) {
                            *o *= b;
                        }
                    }
                    acc(g, *a, d);
                }
            }
            Op::Scale(a, s) => acc(g, *a, gy.map(|v| v * s)),
            Op::AddScalar(a) => acc(g, *a, gy),
            Op::Tanh(a) => acc(g, *a, zip_map(&gy, y, |d, t| d * (1.0 - t * t))),
            Op::Sigmoid(a) => acc(g, *a, zip_map(&gy, y, |d, s| d * s * (1.0 - s))),
            Op::Relu(a) => acc(g, *a, zip_map(&gy, y, |d, v| if v > 0.0 { d } else { 0.0 })),
            Op::Exp(a) => acc(g, *a, hadamard(&gy, y)),
            Op::Square(a) => acc(g, *a, zip_map(&gy, self.value(*a), |d, v| 2.0 * d * v)),
            Op::Cols { a, start } => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    d.row_mut(r)[*start..*start + gy.cols()].copy_from_slice(gy.row(r));
                }
                acc(g, *a, d);
            }
            Op::Concat(vars) => {
                let mut off = 0;
                for &v in vars {
                    let w = self.value(v).cols();
                    if self.rg(v) {
                        let mut d = Matrix::zeros(gy.rows(), w);
                        for r in 0..gy.rows() {
                            d.row_mut(r).copy_from_slice(&gy.row(r)[off..off + w]);
                        }
                        acc(g, v, d);
                    }
                    off += w;
                }
            }
            Op::Rows { a, idx } => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows(), x.cols());
                for (i, &r) in idx.iter().enumerate() {
                    for (o, &v) in d.row_mut(r).iter_mut().zip(gy.row(i)) {
                        *o += v;
                    }
                }
                acc(g, *a, d);
            }
            Op::MeanRows(a) => {
                let x = self.value(*a);
                let k = 1.0 / x.rows() as f64;
                let mut d = Matrix::zeros(x.rows(), x.cols());
                for r in 0..x.rows() {
                    for (o, &v) in d.row_mut(r).iter_mut().zip(gy.data()) {
                        *o = v * k;
                    }
                }
                acc(g, *a, d);
            }
            Op::Sum(a) => {
                let x = self.value(*a);
                acc(g, *a, Matrix::filled(x.rows(), x.cols(), gy.item()));
            }
            Op::LayerNorm { a, inv_std } => {
                let c = y.cols() as f64;
                let mut d = gy;
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let dr = d.row_mut(r);
                    let mg = dr.iter().sum::<f64>() / c;
                    let mgy = dr.iter().zip(yr).map(|(p, q)| p * q).sum::<f64>() / c;
                    for (o, &yv) in dr.iter_mut().zip(yr) {
                        *o = inv_std[r] * (*o - mg - yv * mgy);
                    }
                }
                acc(g, *a, d);
            }
            Op::Softmax(a) => {
                let mut d = gy;
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let dr = d.row_mut(r);
                    let dot: f64 = dr.iter().zip(yr).map(|(p, q)| p * q).sum();
                    for (o, &yv) in dr.iter_mut().zip(yr) {
                        *o = yv * (*o - dot);
                    }
                }
                acc(g, *a, d);
            }
            Op::LogSoftmax { a, mask } => {
                let mask = mask.as_deref();
                let mut d = gy;
                for r in 0..y.rows() {
                    let yr = y.row(r);
                    let dr = d.row_mut(r);
                    let total: f64 = dr
                        .iter()
                        .enumerate()
                        .filter(|(c, _)| !is_masked(mask, *c))
                        .map(|(_, v)| v)
                        .sum();
                    for (c, (o, &yv)) in dr.iter_mut().zip(yr).enumerate() {
                        *o = if is_masked(mask, c) {
                            0.0
                        } else {
                            *o - yv.exp() * total
                        };
                    }
                }
                acc(g, *a, d);
            }
            Op::Pick { a, r, c } => {
                let x = self.value(*a);
                let mut d = Matrix::zeros(x.rows(), x.cols());
                d.set(*r, *c, gy.item());
                acc(g, *a, d);
            }
        }
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn is_masked(mask: Option<&[bool]>, c: usize) -> bool {
    mask.is_some_and(|m| m[c])
}

fn masked_logsumexp(row: &[f64], mask: Option<&[bool]>) -> f64 {
    let mx = row
        .iter()
        .enumerate()
        .filter(|(c, _)| !is_masked(mask, *c))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(mx > f64::NEG_INFINITY, "softmax over a fully masked row");
    let s: f64 = row
        .iter()
        .enumerate()
        .filter(|(c, _)| !is_masked(mask, *c))
        .map(|(_, &v)| (v - mx).exp())
        .sum();
    mx + s.ln()
}

fn acc(g: &mut [Option<Matrix>], v: Var, d: Matrix) {
    match &mut g[v.0] {
        Some(m) => m.add_assign(&d),
        slot @ None => *slot = Some(d),
    }
}

fn zip_map(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = a.data().iter().zip(b.data()).map(|(&p, &q)| f(p, q)).collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}

fn hadamard(a: &Matrix, b: &Matrix) -> Matrix {
    zip_map(a, b, |p, q| p * q)
}

fn col_sums(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, m.cols());
    for r in 0..m.rows() {
        for (o, &v) in out.data_mut().iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
    out
}
