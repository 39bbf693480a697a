use super::ops;
use super::Tensor;
use crate::error::{invalid, Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    AddCol(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Mask(Var, Vec<f64>),
    Conv1dCausal { x: Var, w: Var, dilation: usize },
    MeanPoolTime { x: Var, start: usize },
    SelectCol(Var, usize),
    Transpose(Var),
    RepeatRows(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols { x: Var, start: usize },
    SelectRow(Var, usize),
    GatherRows(Var, Vec<usize>),
    Sum(Var),
    Mse(Var, Var),
    CrossEntropy { logits: Var, rows: Vec<(usize, usize)>, probs: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records operations in execution order; each node holds its inputs, its
/// output value and (implicitly, via [`Op`]) a local backward rule.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        left: a.shape().to_vec(),
        right: b.shape().to_vec(),
    }
}

fn mat(rows: usize, cols: usize, data: Vec<f64>) -> Tensor {
    Tensor::new(vec![rows, cols], data).expect("kernel produced consistent shape")
}

fn acc(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Records a leaf. Gradients are tracked iff `t.requires_grad`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        let rg = t.requires_grad;
        let mut t = t;
        t.grad = None;
        self.push(t, Op::Leaf, rg)
    }

    pub fn constant(&mut self, mut t: Tensor) -> Var {
        t.requires_grad = false;
        self.leaf(t)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape().len() != 2 || tb.shape().len() != 2 || ta.cols() != tb.rows() {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = vec![0.0; m * n];
        ops::matmul_acc(ta.data(), tb.data(), &mut out, m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(mat(m, n, out), Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err(op, ta, tb));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(a) || self.rg(b);
        self.push(value, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// `x[m×n] + b[n]`, broadcasting `b` over rows.
    pub fn add_row(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let n = tx.cols();
        if tb.len() != n {
            return Err(shape_err("add_row", tx, tb));
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_mut(n) {
            for (v, bv) in row.iter_mut().zip(tb.data()) {
                *v += bv;
            }
        }
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(value, Op::AddRow(x, b), rg))
    }

    /// `x[m×n] + b[m]`, broadcasting `b` over columns.
    pub fn add_col(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        let (m, n) = (tx.rows(), tx.cols());
        if tb.len() != m || tx.shape().len() != 2 {
            return Err(shape_err("add_col", tx, tb));
        }
        let mut data = tx.data().to_vec();
        for (row, bv) in data.chunks_mut(n).zip(tb.data()) {
            for v in row.iter_mut() {
                *v += bv;
            }
        }
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(mat(m, n, data), Op::AddCol(x, b), rg))
    }

    fn map(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let tx = self.value(x);
        let data = tx.data().iter().map(|v| f(*v)).collect();
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(x);
        self.push(value, op, rg)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        self.map(x, Op::Scale(x, c), |v| v * c)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, Op::Relu(x), |v| v.max(0.0))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, Op::Sigmoid(x), ops::sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, Op::Tanh(x), f64::tanh)
    }

    /// Elementwise product with a constant mask (used for dropout).
    pub fn mask(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        let tx = self.value(x);
        if mask.len() != tx.len() {
            return Err(invalid(format!(
                "mask length {} does not match tensor {:?}",
                mask.len(),
                tx.shape()
            )));
        }
        let data = tx.data().iter().zip(&mask).map(|(a, b)| a * b).collect();
        let value = Tensor::new(tx.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(x);
        Ok(self.push(value, Op::Mask(x, mask), rg))
    }

    /// Causal dilated convolution: `x[c_in×t]`, `w[c_out×c_in×k]` → `[c_out×t]`.
    pub fn conv1d_causal(&mut self, x: Var, w: Var, dilation: usize) -> Result<Var> {
        let (tx, tw) = (self.value(x), self.value(w));
        if dilation == 0 {
            return Err(invalid("dilation must be >= 1"));
        }
        if tw.shape().len() != 3 || tx.shape().len() != 2 || tw.shape()[1] != tx.rows() {
            return Err(shape_err("conv1d_causal", tx, tw));
        }
        let (c_out, c_in, k) = (tw.shape()[0], tw.shape()[1], tw.shape()[2]);
        if k == 0 {
            return Err(invalid("kernel size must be >= 1"));
        }
        let t = tx.cols();
        let out = ops::conv1d_causal_forward(tx.data(), tw.data(), c_in, c_out, k, t, dilation);
        let rg = self.rg(x) || self.rg(w);
        Ok(self.push(mat(c_out, t, out), Op::Conv1dCausal { x, w, dilation }, rg))
    }

    /// Mean over time of `x[c×t]`, skipping the first `start` frames → `[1×c]`.
    pub fn mean_pool_time(&mut self, x: Var, start: usize) -> Result<Var> {
        let tx = self.value(x);
        let (c, t) = (tx.rows(), tx.cols());
        if start >= t {
            return Err(invalid(format!("pool start {start} leaves no frames of {t}")));
        }
        let denom = (t - start) as f64;
        let data = tx
            .data()
            .chunks(t)
            .map(|row| row[start..].iter().sum::<f64>() / denom)
            .collect();
        let rg = self.rg(x);
        Ok(self.push(mat(1, c, data), Op::MeanPoolTime { x, start }, rg))
    }

    /// Column `j` of `x[m×n]` as a row vector `[1×m]`.
    pub fn select_col(&mut self, x: Var, j: usize) -> Result<Var> {
        let tx = self.value(x);
        let (m, n) = (tx.rows(), tx.cols());
        if j >= n {
            return Err(Error::OutOfRange(format!("column {j} of {n}")));
        }
        let data = (0..m).map(|i| tx.data()[i * n + j]).collect();
        let rg = self.rg(x);
        Ok(self.push(mat(1, m, data), Op::SelectCol(x, j), rg))
    }

    pub fn transpose(&mut self, x: Var) -> Var {
        let value = self.value(x).transpose();
        let rg = self.rg(x);
        self.push(value, Op::Transpose(x), rg)
    }

    /// Tiles a row vector `[1×n]` into `[rows×n]`.
    pub fn repeat_rows(&mut self, x: Var, rows: usize) -> Result<Var> {
        let tx = self.value(x);
        if tx.rows() != 1 || rows == 0 {
            return Err(invalid(format!(
                "repeat_rows expects a row vector and rows >= 1, got {:?} x {rows}",
                tx.shape()
            )));
        }
        let n = tx.cols();
        let mut data = Vec::with_capacity(rows * n);
        for _ in 0..rows {
            data.extend_from_slice(tx.data());
        }
        let rg = self.rg(x);
        Ok(self.push(mat(rows, n, data), Op::RepeatRows(x), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| invalid("concat of nothing"))?;
        let m = self.value(first).rows();
        for p in parts {
            if self.value(*p).rows() != m {
                return Err(shape_err("concat_cols", self.value(first), self.value(*p)));
            }
        }
        let widths: Vec<usize> = parts.iter().map(|p| self.value(*p).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * total);
        for i in 0..m {
            for (p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(*p).data()[i * w..(i + 1) * w]);
            }
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(mat(m, total, data), Op::ConcatCols(parts.to_vec()), rg))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| invalid("concat of nothing"))?;
        let n = self.value(first).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let tp = self.value(*p);
            if tp.cols() != n {
                return Err(shape_err("concat_rows", self.value(first), tp));
            }
            rows += tp.rows();
            data.extend_from_slice(tp.data());
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(mat(rows, n, data), Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = self.value(x);
        let (m, n) = (tx.rows(), tx.cols());
        if start + len > n || len == 0 {
            return Err(Error::OutOfRange(format!(
                "columns {start}..{} of {n}",
                start + len
            )));
        }
        let mut data = Vec::with_capacity(m * len);
        for i in 0..m {
            data.extend_from_slice(&tx.data()[i * n + start..i * n + start + len]);
        }
        let rg = self.rg(x);
        Ok(self.push(mat(m, len, data), Op::SliceCols { x, start }, rg))
    }

    pub fn select_row(&mut self, x: Var, r: usize) -> Result<Var> {
        let tx = self.value(x);
        let (m, n) = (tx.rows(), tx.cols());
        if r >= m {
            return Err(Error::OutOfRange(format!("row {r} of {m}")));
        }
        let data = tx.data()[r * n..(r + 1) * n].to_vec();
        let rg = self.rg(x);
        Ok(self.push(mat(1, n, data), Op::SelectRow(x, r), rg))
    }

    /// Rows `idx[0], idx[1], ...` of `x`, repeats allowed.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize]) -> Result<Var> {
        let tx = self.value(x);
        let (m, n) = (tx.rows(), tx.cols());
        if let Some(r) = idx.iter().find(|r| **r >= m) {
            return Err(Error::OutOfRange(format!("row {r} of {m}")));
        }
        let mut data = Vec::with_capacity(idx.len() * n);
        for r in idx {
            data.extend_from_slice(&tx.data()[r * n..(r + 1) * n]);
        }
        let rg = self.rg(x);
        Ok(self.push(mat(idx.len(), n, data), Op::GatherRows(x, idx.to_vec()), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Mean squared error over all elements.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape("mse_loss", pred, target)?;
        let (tp, tt) = (self.value(pred), self.value(target));
        let n = tp.len().max(1) as f64;
        let s: f64 = tp
            .data()
            .iter()
            .zip(tt.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Tensor::scalar(s / n), Op::Mse(pred, target), rg))
    }

    /// Mean cross-entropy of `logits[m×v]` against per-row class indices.
    /// Rows whose target equals `ignore_index` are excluded from the mean.
    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        ignore_index: Option<usize>,
    ) -> Result<Var> {
        let tl = self.value(logits);
        let (m, v) = (tl.rows(), tl.cols());
        if targets.len() != m {
            return Err(invalid(format!(
                "cross_entropy: {} targets for {m} rows",
                targets.len()
            )));
        }
        let mut probs = vec![0.0; m * v];
        let mut rows = Vec::new();
        let mut total = 0.0;
        for (i, &target) in targets.iter().enumerate() {
            if Some(target) == ignore_index {
                continue;
            }
            if target >= v {
                return Err(Error::OutOfRange(format!(
                    "class index {target} with {v} classes"
                )));
            }
            let row = &tl.data()[i * v..(i + 1) * v];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
            for (j, z) in row.iter().enumerate() {
                probs[i * v + j] = (z - lse).exp();
            }
            total += lse - row[target];
            rows.push((i, target));
        }
        let loss = if rows.is_empty() {
            0.0
        } else {
            total / rows.len() as f64
        };
        let rg = self.rg(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                rows,
                probs,
            },
            rg,
        ))
    }

    /// Reverse sweep from a scalar `loss`. Gradients accumulate additively
    /// over every use of a value.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(invalid(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            self.backward_node(node, &g, &mut grads);
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }

    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn backward_node(&self, node: &Node, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let want = |v: Var| self.nodes[v.0].requires_grad;
        macro_rules! slot {
            ($v:expr) => {
                acc(&mut grads[$v.0], self.nodes[$v.0].value.len())
            };
        }
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                if want(*a) {
                    ops::matmul_bt_acc(g, tb.data(), slot!(*a), m, k, n);
                }
                if want(*b) {
                    ops::matmul_at_acc(ta.data(), g, slot!(*b), m, k, n);
                }
            }
            Op::Add(a, b) => {
                for (v, sign) in [(*a, 1.0), (*b, 1.0)] {
                    if want(v) {
                        for (d, gv) in slot!(v).iter_mut().zip(g) {
                            *d += sign * gv;
                        }
                    }
                }
            }
            Op::Sub(a, b) => {
                for (v, sign) in [(*a, 1.0), (*b, -1.0)] {
                    if want(v) {
                        for (d, gv) in slot!(v).iter_mut().zip(g) {
                            *d += sign * gv;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                if want(*a) {
                    let other = val(*b).data();
                    for ((d, gv), o) in slot!(*a).iter_mut().zip(g).zip(other) {
                        *d += gv * o;
                    }
                }
                if want(*b) {
                    let other = val(*a).data();
                    for ((d, gv), o) in slot!(*b).iter_mut().zip(g).zip(other) {
                        *d += gv * o;
                    }
                }
            }
            Op::AddRow(x, b) => {
                if want(*x) {
                    for (d, gv) in slot!(*x).iter_mut().zip(g) {
                        *d += gv;
                    }
                }
                if want(*b) {
                    let n = val(*b).len();
                    let db = slot!(*b);
                    for row in g.chunks(n) {
                        for (d, gv) in db.iter_mut().zip(row) {
                            *d += gv;
                        }
                    }
                }
            }
            Op::AddCol(x, b) => {
                if want(*x) {
                    for (d, gv) in slot!(*x).iter_mut().zip(g) {
                        *d += gv;
                    }
                }
                if want(*b) {
                    let n = val(*x).cols();
                    let db = slot!(*b);
                    for (d, row) in db.iter_mut().zip(g.chunks(n)) {
                        *d += row.iter().sum::<f64>();
                    }
                }
            }
            Op::Scale(x, c) => {
                for (d, gv) in slot!(*x).iter_mut().zip(g) {
                    *d += c * gv;
                }
            }
            Op::Relu(x) => {
                let xs = val(*x).data();
                for ((d, gv), xv) in slot!(*x).iter_mut().zip(g).zip(xs) {
                    if *xv > 0.0 {
                        *d += gv;
                    }
                }
            }
            Op::Sigmoid(x) => {
                let ys = node.value.data();
                for ((d, gv), y) in slot!(*x).iter_mut().zip(g).zip(ys) {
                    *d += gv * y * (1.0 - y);
                }
            }
            Op::Tanh(x) => {
                let ys = node.value.data();
                for ((d, gv), y) in slot!(*x).iter_mut().zip(g).zip(ys) {
                    *d += gv * (1.0 - y * y);
                }
            }
            Op::Mask(x, mask) => {
                for ((d, gv), m) in slot!(*x).iter_mut().zip(g).zip(mask) {
                    *d += gv * m;
                }
            }
            Op::Conv1dCausal { x, w, dilation } => {
                let (tx, tw) = (val(*x), val(*w));
                let (c_out, c_in, k) = (tw.shape()[0], tw.shape()[1], tw.shape()[2]);
                let t = tx.cols();
                let mut dx = want(*x).then(|| vec![0.0; tx.len()]);
                let mut dw = want(*w).then(|| vec![0.0; tw.len()]);
                ops::conv1d_causal_backward(
                    g,
                    tx.data(),
                    tw.data(),
                    c_in,
                    c_out,
                    k,
                    t,
                    *dilation,
                    dx.as_deref_mut(),
                    dw.as_deref_mut(),
                );
                if let Some(dx) = dx {
                    for (d, v) in slot!(*x).iter_mut().zip(dx) {
                        *d += v;
                    }
                }
                if let Some(dw) = dw {
                    for (d, v) in slot!(*w).iter_mut().zip(dw) {
                        *d += v;
                    }
                }
            }
            Op::MeanPoolTime { x, start } => {
                let t = val(*x).cols();
                let denom = (t - start) as f64;
                let dx = slot!(*x);
                for (row, gv) in dx.chunks_mut(t).zip(g) {
                    for d in &mut row[*start..] {
                        *d += gv / denom;
                    }
                }
            }
            Op::SelectCol(x, j) => {
                let n = val(*x).cols();
                let dx = slot!(*x);
                for (i, gv) in g.iter().enumerate() {
                    dx[i * n + j] += gv;
                }
            }
            Op::Transpose(x) => {
                let (r, c) = (val(*x).rows(), val(*x).cols());
                let dx = slot!(*x);
                for i in 0..r {
                    for j in 0..c {
                        dx[i * c + j] += g[j * r + i];
                    }
                }
            }
            Op::RepeatRows(x) => {
                let n = val(*x).cols();
                let dx = slot!(*x);
                for row in g.chunks(n) {
                    for (d, gv) in dx.iter_mut().zip(row) {
                        *d += gv;
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let total = node.value.cols();
                let mut offset = 0;
                for p in parts {
                    let w = val(*p).cols();
                    if want(*p) {
                        let dp = slot!(*p);
                        for (i, row) in dp.chunks_mut(w).enumerate() {
                            let src = &g[i * total + offset..i * total + offset + w];
                            for (d, gv) in row.iter_mut().zip(src) {
                                *d += gv;
                            }
                        }
                    }
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for p in parts {
                    let len = val(*p).len();
                    if want(*p) {
                        for (d, gv) in slot!(*p).iter_mut().zip(&g[offset..offset + len]) {
                            *d += gv;
                        }
                    }
                    offset += len;
                }
            }
            Op::SliceCols { x, start } => {
                let n = val(*x).cols();
                let len = node.value.cols();
                let dx = slot!(*x);
                for (i, row) in g.chunks(len).enumerate() {
                    for (d, gv) in dx[i * n + start..i * n + start + len].iter_mut().zip(row) {
                        *d += gv;
                    }
                }
            }
            Op::SelectRow(x, r) => {
                let n = val(*x).cols();
                let dx = slot!(*x);
                for (d, gv) in dx[r * n..(r + 1) * n].iter_mut().zip(g) {
                    *d += gv;
                }
            }
            Op::GatherRows(x, idx) => {
                let n = val(*x).cols();
                let dx = slot!(*x);
                for (k, r) in idx.iter().enumerate() {
                    for (d, gv) in dx[r * n..(r + 1) * n].iter_mut().zip(&g[k * n..(k + 1) * n]) {
                        *d += gv;
                    }
                }
            }
            Op::Sum(x) => {
                for d in slot!(*x).iter_mut() {
                    *d += g[0];
                }
            }
            Op::Mse(a, b) => {
                let (ta, tb) = (val(*a), val(*b));
                let scale = 2.0 * g[0] / ta.len().max(1) as f64;
                if want(*a) {
                    let da = slot!(*a);
                    for ((d, x), y) in da.iter_mut().zip(ta.data()).zip(tb.data()) {
                        *d += scale * (x - y);
                    }
                }
                if want(*b) {
                    let db = slot!(*b);
                    for ((d, x), y) in db.iter_mut().zip(ta.data()).zip(tb.data()) {
                        *d -= scale * (x - y);
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                rows,
                probs,
            } => {
                if rows.is_empty() {
                    return;
                }
                let v = val(*logits).cols();
                let scale = g[0] / rows.len() as f64;
                let dl = slot!(*logits);
                for &(i, target) in rows {
                    for j in 0..v {
                        let indicator = if j == target { 1.0 } else { 0.0 };
                        dl[i * v + j] += scale * (probs[i * v + j] - indicator);
                    }
                }
            }
        }
    }
}
