//! Reverse-mode autodiff on an append-only tape.
//!
//! Values are computed eagerly as nodes are appended, so node index order is
//! already topological and `backward` is a single reverse sweep. Parameters
//! are read from a [`ParamSet`] at build time; their gradients are written
//! back by `backward`, which makes it safe to build many graphs (one per
//! sentence, per replayed transition, ...) against the same weights before an
//! optimizer step.

use crate::error::{Error, Result};
use crate::numerics::params::{ParamId, ParamSet};
use crate::numerics::tensor::{matmul_nn, matmul_nt, matmul_tn, sigmoid, Tensor};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Hadamard(usize, usize),
    Scale(usize, f64),
    Sigmoid(usize),
    Tanh(usize),
    /// Stack same-width blocks vertically.
    ConcatRows(Vec<usize>),
    /// Stack same-height blocks side by side.
    ConcatCols(Vec<usize>),
    /// Contiguous row range `[start, start+len)` of the source.
    SliceRows(usize, usize, usize),
    /// Repeat a column vector across `n` columns.
    TileCols(usize, usize),
    /// Column-major flatten of a `d x n` matrix into a `d*n_max` column,
    /// zero-padded or truncated to exactly `n_max` columns.
    FlattenPad(usize, usize),
    /// Same data, new shape (element count preserved).
    Reshape(usize),
    /// Single element by row-major index, as a 1x1 tensor.
    Pick(usize, usize),
    Sum(usize),
    /// Negative log-softmax of the target row of a column of logits.
    CrossEntropy(usize, usize),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    /// One node per distinct parameter so repeated reads share a tape slot.
    param_cache: Vec<(ParamId, usize)>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Constant leaf; no gradient flows out of it.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Op::Input, t)
    }

    pub fn input_vector(&mut self, data: Vec<f64>) -> Var {
        self.input(Tensor::vector(data))
    }

    /// Trainable leaf; `backward` accumulates into `params`.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> Var {
        if let Some(&(_, node)) = self.param_cache.iter().find(|(pid, _)| *pid == id) {
            return Var(node);
        }
        let v = self.push(Op::Param(id), params.value(id).clone());
        self.param_cache.push((id, v.0));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.cols() != tb.rows() {
            return Err(Error::Shape {
                op: "matmul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = vec![0.0; m * n];
        matmul_nn(ta.data(), tb.data(), m, k, n, &mut out);
        Ok(self.push(Op::MatMul(a.0, b.0), Tensor::new(vec![m, n], out)?))
    }

    fn zip_op(
        &mut self,
        name: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(usize, usize) -> Op,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() {
            return Err(Error::Shape {
                op: name,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data().iter())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(op(a.0, b.0), t))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("add", a, b, |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("sub", a, b, |x, y| x - y, Op::Sub)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_op("hadamard", a, b, |x, y| x * y, Op::Hadamard)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = &self.nodes[a.0].value;
        let data = t.data().iter().map(|&x| c * x).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(Op::Scale(a.0, c), out)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let data = t.data().iter().map(|&x| sigmoid(x)).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(Op::Sigmoid(a.0), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let data = t.data().iter().map(|&x| x.tanh()).collect();
        let out = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(Op::Tanh(a.0), out)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("concat_rows"));
        }
        let cols = self.nodes[parts[0].0].value.cols();
        let mut rows = 0;
        for &p in parts {
            let t = &self.nodes[p.0].value;
            if t.cols() != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    lhs: vec![rows, cols],
                    rhs: t.shape().to_vec(),
                });
            }
            rows += t.rows();
        }
        let mut data = Vec::with_capacity(rows * cols);
        for &p in parts {
            data.extend_from_slice(self.nodes[p.0].value.data());
        }
        let ids = parts.iter().map(|v| v.0).collect();
        Ok(self.push(Op::ConcatRows(ids), Tensor::new(vec![rows, cols], data)?))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        if parts.is_empty() {
            return Err(Error::EmptyInput("concat_cols"));
        }
        let rows = self.nodes[parts[0].0].value.rows();
        let mut cols = 0;
        for &p in parts {
            let t = &self.nodes[p.0].value;
            if t.rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    lhs: vec![rows, cols],
                    rhs: t.shape().to_vec(),
                });
            }
            cols += t.cols();
        }
        let mut data = vec![0.0; rows * cols];
        let mut off = 0;
        for &p in parts {
            let t = &self.nodes[p.0].value;
            let pc = t.cols();
            for r in 0..rows {
                data[r * cols + off..r * cols + off + pc]
                    .copy_from_slice(&t.data()[r * pc..(r + 1) * pc]);
            }
            off += pc;
        }
        let ids = parts.iter().map(|v| v.0).collect();
        Ok(self.push(Op::ConcatCols(ids), Tensor::new(vec![rows, cols], data)?))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let (rows, cols) = (t.rows(), t.cols());
        if len == 0 || start + len > rows {
            return Err(Error::Shape {
                op: "slice_rows",
                lhs: t.shape().to_vec(),
                rhs: vec![start, len],
            });
        }
        let data = t.data()[start * cols..(start + len) * cols].to_vec();
        Ok(self.push(
            Op::SliceRows(a.0, start, len),
            Tensor::new(vec![len, cols], data)?,
        ))
    }

    pub fn tile_cols(&mut self, a: Var, n: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if t.cols() != 1 || n == 0 {
            return Err(Error::Shape {
                op: "tile_cols",
                lhs: t.shape().to_vec(),
                rhs: vec![n],
            });
        }
        let d = t.rows();
        let mut data = vec![0.0; d * n];
        for r in 0..d {
            data[r * n..(r + 1) * n].fill(t.data()[r]);
        }
        Ok(self.push(Op::TileCols(a.0, n), Tensor::new(vec![d, n], data)?))
    }

    pub fn flatten_pad(&mut self, a: Var, n_max: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if n_max == 0 {
            return Err(Error::Shape {
                op: "flatten_pad",
                lhs: t.shape().to_vec(),
                rhs: vec![0],
            });
        }
        let (d, n) = (t.rows(), t.cols());
        let mut data = vec![0.0; d * n_max];
        for c in 0..n.min(n_max) {
            for r in 0..d {
                data[c * d + r] = t.data()[r * n + c];
            }
        }
        Ok(self.push(
            Op::FlattenPad(a.0, n_max),
            Tensor::new(vec![d * n_max, 1], data)?,
        ))
    }

    pub fn reshape(&mut self, a: Var, shape: Vec<usize>) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        let count: usize = shape.iter().product();
        if count != t.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape {
                op: "reshape",
                lhs: t.shape().to_vec(),
                rhs: shape,
            });
        }
        let data = t.data().to_vec();
        Ok(self.push(Op::Reshape(a.0), Tensor::new(shape, data)?))
    }

    /// Row `r` of a matrix as a column vector; the embedding lookup.
    pub fn row_as_column(&mut self, a: Var, r: usize) -> Result<Var> {
        let cols = self.nodes[a.0].value.cols();
        let row = self.slice_rows(a, r, 1)?;
        self.reshape(row, vec![cols, 1])
    }

    pub fn pick(&mut self, a: Var, idx: usize) -> Result<Var> {
        let t = &self.nodes[a.0].value;
        if idx >= t.len() {
            return Err(Error::Shape {
                op: "pick",
                lhs: t.shape().to_vec(),
                rhs: vec![idx],
            });
        }
        let v = t.data()[idx];
        Ok(self.push(Op::Pick(a.0, idx), Tensor::scalar(v)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s: f64 = self.nodes[a.0].value.data().iter().sum();
        self.push(Op::Sum(a.0), Tensor::scalar(s))
    }

    /// Mean of all elements; bounded losses keep finite-difference noise low.
    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.nodes[a.0].value.len();
        let s = self.sum(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// `-log softmax(logits)[target]` with a stable log-sum-exp.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Result<Var> {
        let t = &self.nodes[logits.0].value;
        if t.cols() != 1 || target >= t.rows() {
            return Err(Error::Shape {
                op: "cross_entropy",
                lhs: t.shape().to_vec(),
                rhs: vec![target],
            });
        }
        let z = t.data();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
        Ok(self.push(
            Op::CrossEntropy(logits.0, target),
            Tensor::scalar(lse - z[target]),
        ))
    }

    /// Accumulate d(loss)/d(param) into `params` for every parameter this
    /// graph read. Additive across calls; the optimizer clears gradients.
    pub fn backward(&self, loss: Var, params: &mut ParamSet) -> Result<()> {
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::new(
            self.nodes[loss.0].value.shape().to_vec(),
            vec![1.0],
        )?);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let value = &self.nodes[i].value;
            match &self.nodes[i].op {
                Op::Input => {}
                Op::Param(id) => params.accumulate_grad(*id, &g)?,
                Op::MatMul(a, b) => {
                    let (ta, tb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    {
                        let ga = slot(&mut grads, *a, ta.shape());
                        matmul_nt(g.data(), tb.data(), m, n, k, ga.data_mut());
                    }
                    let gb = slot(&mut grads, *b, tb.shape());
                    matmul_tn(ta.data(), g.data(), m, k, n, gb.data_mut());
                }
                Op::Add(a, b) => {
                    add_into(slot(&mut grads, *a, g.shape()), g.data(), 1.0);
                    add_into(slot(&mut grads, *b, g.shape()), g.data(), 1.0);
                }
                Op::Sub(a, b) => {
                    add_into(slot(&mut grads, *a, g.shape()), g.data(), 1.0);
                    add_into(slot(&mut grads, *b, g.shape()), g.data(), -1.0);
                }
                Op::Hadamard(a, b) => {
                    let other_b = self.nodes[*b].value.data().to_vec();
                    let other_a = self.nodes[*a].value.data().to_vec();
                    mul_into(slot(&mut grads, *a, g.shape()), g.data(), &other_b);
                    mul_into(slot(&mut grads, *b, g.shape()), g.data(), &other_a);
                }
                Op::Scale(a, c) => {
                    add_into(slot(&mut grads, *a, g.shape()), g.data(), *c);
                }
                Op::Sigmoid(a) => {
                    let ga = slot(&mut grads, *a, g.shape());
                    for ((dst, &gv), &s) in
                        ga.data_mut().iter_mut().zip(g.data()).zip(value.data())
                    {
                        *dst += gv * s * (1.0 - s);
                    }
                }
                Op::Tanh(a) => {
                    let ga = slot(&mut grads, *a, g.shape());
                    for ((dst, &gv), &t) in
                        ga.data_mut().iter_mut().zip(g.data()).zip(value.data())
                    {
                        *dst += gv * (1.0 - t * t);
                    }
                }
                Op::ConcatRows(parts) => {
                    let cols = value.cols();
                    let mut row0 = 0;
                    for &p in parts {
                        let pr = self.nodes[p].value.rows();
                        let shape = self.nodes[p].value.shape().to_vec();
                        let gp = slot(&mut grads, p, &shape);
                        let block = &g.data()[row0 * cols..(row0 + pr) * cols];
                        add_into(gp, block, 1.0);
                        row0 += pr;
                    }
                }
                Op::ConcatCols(parts) => {
                    let (rows, cols) = (value.rows(), value.cols());
                    let mut col0 = 0;
                    for &p in parts {
                        let pc = self.nodes[p].value.cols();
                        let shape = self.nodes[p].value.shape().to_vec();
                        let gp = slot(&mut grads, p, &shape);
                        for r in 0..rows {
                            for c in 0..pc {
                                gp.data_mut()[r * pc + c] += g.data()[r * cols + col0 + c];
                            }
                        }
                        col0 += pc;
                    }
                }
                Op::SliceRows(a, start, _len) => {
                    let cols = self.nodes[*a].value.cols();
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    for (j, &gv) in g.data().iter().enumerate() {
                        ga.data_mut()[start * cols + j] += gv;
                    }
                }
                Op::TileCols(a, n) => {
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    let d = shape[0];
                    for r in 0..d {
                        let mut s = 0.0;
                        for c in 0..*n {
                            s += g.data()[r * n + c];
                        }
                        ga.data_mut()[r] += s;
                    }
                }
                Op::FlattenPad(a, n_max) => {
                    let src = &self.nodes[*a].value;
                    let (d, n) = (src.rows(), src.cols());
                    let shape = src.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    for c in 0..n.min(*n_max) {
                        for r in 0..d {
                            ga.data_mut()[r * n + c] += g.data()[c * d + r];
                        }
                    }
                }
                Op::Reshape(a) => {
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    add_into(ga, g.data(), 1.0);
                }
                Op::Pick(a, idx) => {
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    ga.data_mut()[*idx] += g.data()[0];
                }
                Op::Sum(a) => {
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    let gv = g.data()[0];
                    for dst in ga.data_mut() {
                        *dst += gv;
                    }
                }
                Op::CrossEntropy(a, target) => {
                    let z = self.nodes[*a].value.data();
                    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let denom: f64 = z.iter().map(|&v| (v - m).exp()).sum();
                    let shape = self.nodes[*a].value.shape().to_vec();
                    let ga = slot(&mut grads, *a, &shape);
                    let gv = g.data()[0];
                    for (j, dst) in ga.data_mut().iter_mut().enumerate() {
                        let soft = (z[j] - m).exp() / denom;
                        *dst += gv * (soft - if j == *target { 1.0 } else { 0.0 });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fetch-or-allocate the gradient buffer for node `idx`.
fn slot<'a>(grads: &'a mut [Option<Tensor>], idx: usize, shape: &[usize]) -> &'a mut Tensor {
    grads[idx].get_or_insert_with(|| Tensor::zeros(shape.to_vec()))
}

fn add_into(dst: &mut Tensor, src: &[f64], scale: f64) {
    for (d, &s) in dst.data_mut().iter_mut().zip(src) {
        *d += scale * s;
    }
}

fn mul_into(dst: &mut Tensor, g: &[f64], other: &[f64]) {
    for ((d, &gv), &ov) in dst.data_mut().iter_mut().zip(g).zip(other) {
        *d += gv * ov;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, stream};

    fn small_params(seed: u64) -> (ParamSet, ParamId, ParamId) {
        let mut rng = seeded(seed, stream::INIT);
        let mut ps = ParamSet::new();
        let w = ps.register_normal("w", vec![3, 4], 0.5, &mut rng, true);
        let b = ps.register_normal("b", vec![3, 1], 0.5, &mut rng, false);
        (ps, w, b)
    }

    #[test]
    fn linear_loss_gradient_is_input_broadcast() {
        // loss = sum(W x)  =>  dL/dW[i][j] = x[j] for every row i.
        let mut ps = ParamSet::new();
        let w = ps.register_zeros("w", vec![2, 3], true);
        let x = vec![0.5, -1.0, 2.0];
        let mut g = Graph::new();
        let wv = g.param(&ps, w);
        let xv = g.input_vector(x.clone());
        let y = g.matmul(wv, xv).unwrap();
        let loss = g.sum(y);
        g.backward(loss, &mut ps).unwrap();
        let grad = ps.get(w).grad.data();
        for i in 0..2 {
            for j in 0..3 {
                assert!((grad[i * 3 + j] - x[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_loss_leaves_gradients_zero() {
        let (mut ps, w, _) = small_params(1);
        let mut g = Graph::new();
        let c = g.input(Tensor::scalar(4.2));
        let loss = g.scale(c, 2.0);
        g.backward(loss, &mut ps).unwrap();
        assert!(ps.get(w).grad.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_is_additive_across_calls() {
        let (mut ps, w, b) = small_params(2);
        let mut g = Graph::new();
        let wv = g.param(&ps, w);
        let bv = g.param(&ps, b);
        let x = g.input_vector(vec![1.0, -0.5, 0.25, 2.0]);
        let wx = g.matmul(wv, x).unwrap();
        let y = g.add(wx, bv).unwrap();
        let act = g.tanh(y);
        let loss = g.sum(act);
        g.backward(loss, &mut ps).unwrap();
        let once = ps.get(w).grad.clone();
        g.backward(loss, &mut ps).unwrap();
        for (twice, one) in ps.get(w).grad.data().iter().zip(once.data()) {
            assert!((twice - 2.0 * one).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let (mut ps, w, _) = small_params(3);
        let mut g = Graph::new();
        let wv = g.param(&ps, w);
        assert!(matches!(
            g.backward(wv, &mut ps),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        // grads of a*L1 + b*L2 must equal a*grads(L1) + b*grads(L2).
        let (alpha, beta) = (0.7, -1.3);
        let grab = |mode: u8| -> Vec<f64> {
            let (mut ps, w, b) = small_params(4);
            let mut g = Graph::new();
            let wv = g.param(&ps, w);
            let bv = g.param(&ps, b);
            let x = g.input_vector(vec![0.3, 0.1, -0.2, 0.9]);
            let wx = g.matmul(wv, x).unwrap();
            let pre = g.add(wx, bv).unwrap();
            let l1 = {
                let t = g.tanh(pre);
                g.sum(t)
            };
            let l2 = {
                let s = g.sigmoid(pre);
                let sq = g.hadamard(s, s).unwrap();
                g.sum(sq)
            };
            let loss = match mode {
                0 => {
                    let a = g.scale(l1, alpha);
                    let b2 = g.scale(l2, beta);
                    g.add(a, b2).unwrap()
                }
                1 => l1,
                _ => l2,
            };
            g.backward(loss, &mut ps).unwrap();
            let mut out = ps.get(w).grad.data().to_vec();
            out.extend_from_slice(ps.get(b).grad.data());
            out
        };
        let combined = grab(0);
        let g1 = grab(1);
        let g2 = grab(2);
        for ((c, a), b) in combined.iter().zip(g1.iter()).zip(g2.iter()) {
            assert!((c - (alpha * a + beta * b)).abs() < 1e-10);
        }
    }

    #[test]
    fn cross_entropy_hand_case() {
        // Two equal logits: loss = ln 2, grad = softmax - onehot = [-0.5, 0.5].
        let mut ps = ParamSet::new();
        let z = ps.register_zeros("z", vec![2, 1], false);
        let mut g = Graph::new();
        let zv = g.param(&ps, z);
        let loss = g.cross_entropy(zv, 0).unwrap();
        assert!((g.value(loss).data()[0] - (2.0f64).ln()).abs() < 1e-12);
        g.backward(loss, &mut ps).unwrap();
        let grad = ps.get(z).grad.data();
        assert!((grad[0] + 0.5).abs() < 1e-12);
        assert!((grad[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_is_stable_for_huge_logits() {
        let mut g = Graph::new();
        let z = g.input_vector(vec![1000.0, -1000.0]);
        let loss = g.cross_entropy(z, 0).unwrap();
        assert!(g.value(loss).data()[0].abs() < 1e-12);
    }

    #[test]
    fn flatten_pad_truncates_and_pads_column_major() {
        let mut g = Graph::new();
        // 2x3 matrix, columns [1,4], [2,5], [3,6].
        let m = g.input(Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap());
        let padded = g.flatten_pad(m, 4).unwrap();
        assert_eq!(
            g.value(padded).data(),
            &[1., 4., 2., 5., 3., 6., 0., 0.]
        );
        let truncated = g.flatten_pad(m, 2).unwrap();
        assert_eq!(g.value(truncated).data(), &[1., 4., 2., 5.]);
    }

    #[test]
    fn concat_and_slice_round_trip() {
        let mut g = Graph::new();
        let a = g.input_vector(vec![1.0, 2.0]);
        let b = g.input_vector(vec![3.0]);
        let cat = g.concat_rows(&[a, b]).unwrap();
        assert_eq!(g.value(cat).data(), &[1.0, 2.0, 3.0]);
        let back = g.slice_rows(cat, 1, 2).unwrap();
        assert_eq!(g.value(back).data(), &[2.0, 3.0]);

        let cols = g.concat_cols(&[a, a]).unwrap();
        assert_eq!(g.value(cols).shape(), &[2, 2]);
        assert_eq!(g.value(cols).data(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn tile_cols_forward_and_backward() {
        let mut ps = ParamSet::new();
        let v = ps.register("v", Tensor::vector(vec![2.0, -1.0]), false);
        let mut g = Graph::new();
        let vv = g.param(&ps, v);
        let tiled = g.tile_cols(vv, 3).unwrap();
        assert_eq!(g.value(tiled).data(), &[2.0, 2.0, 2.0, -1.0, -1.0, -1.0]);
        let loss = g.sum(tiled);
        g.backward(loss, &mut ps).unwrap();
        // Each source row feeds 3 columns.
        assert_eq!(ps.get(v).grad.data(), &[3.0, 3.0]);
    }

    #[test]
    fn pick_routes_gradient_to_one_element() {
        let mut ps = ParamSet::new();
        let v = ps.register("v", Tensor::vector(vec![5.0, 7.0, 9.0]), false);
        let mut g = Graph::new();
        let vv = g.param(&ps, v);
        let q = g.pick(vv, 1).unwrap();
        assert_eq!(g.value(q).data(), &[7.0]);
        g.backward(q, &mut ps).unwrap();
        assert_eq!(ps.get(v).grad.data(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn param_reads_share_one_tape_node() {
        let (ps, w, _) = small_params(5);
        let mut g = Graph::new();
        let v1 = g.param(&ps, w);
        let v2 = g.param(&ps, w);
        assert_eq!(v1, v2);
    }

    #[test]
    fn shape_errors_name_the_operation() {
        let mut g = Graph::new();
        let a = g.input(Tensor::zeros(vec![2, 2]));
        let b = g.input(Tensor::zeros(vec![3, 1]));
        match g.matmul(a, b) {
            Err(Error::Shape { op, .. }) => assert_eq!(op, "matmul"),
            other => panic!("expected shape error, got {other:?}"),
        }
        match g.add(a, b) {
            Err(Error::Shape { op, .. }) => assert_eq!(op, "add"),
            other => panic!("expected shape error, got {other:?}"),
        }
    }
}
