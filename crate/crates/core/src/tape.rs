//! Eager forward / taped reverse-mode differentiation over dense matrices.
//!
//! Every primitive computes its value immediately and pushes a node onto the
//! [`Tape`]. Nodes are stored in creation order, which is a topological order
//! of the computation graph, so [`Tape::backward`] just walks the tape from
//! the end.
//!
//! Subgradients at kinks (`relu`, `abs`, `max_const`) are taken as zero.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Abs(Var),
    Sigmoid(Var),
    Relu(Var),
    Exp(Var),
    Ln(Var),
    Exp2(Var),
    MaxConst(Var, f64),
    SoftmaxRows(Var),
    SumRows(Var),
    SumCols(Var),
    SumAll(Var),
    Broadcast(Var),
    MaskedSum(Var, Matrix),
    MulConst(Var, Matrix),
    Entry(Var, usize),
    Extreme(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
}

/// Ordered record of a forward computation.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of [`Tape::backward`]: one gradient per node, indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Matrix>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> &Matrix {
        &self.grads[v.0]
    }

    pub fn take(&mut self, v: Var) -> Matrix {
        std::mem::replace(&mut self.grads[v.0], Matrix::zeros(0, 0))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
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

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Registers an input. Parameters and constants are both leaves; the
    /// caller decides which gradients to read back.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.leaf(Matrix::scalar(value))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        self.push(value, Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(value, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    /// Elementwise quotient; a zero divisor is a domain error.
    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(b).as_slice().contains(&0.0) {
            return Err(Error::Domain("division by zero".into()));
        }
        let value = self.value(a).zip_map(self.value(b), "div", |x, y| x / y)?;
        Ok(self.push(value, Op::Div(a, b)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).scale(s);
        self.push(value, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let value = self.value(a).map(|x| x + s);
        self.push(value, Op::AddScalar(a))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::abs);
        self.push(value, Op::Abs(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = self.value(a).map(sigmoid);
        self.push(value, Op::Sigmoid(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).map(|x| x.max(0.0));
        self.push(value, Op::Relu(a))
    }

    pub fn exp(&mut self, a: Var) -> Result<Var> {
        let value = self.value(a).map(f64::exp);
        if !value.is_finite() {
            return Err(Error::Domain("exp overflow".into()));
        }
        Ok(self.push(value, Op::Exp(a)))
    }

    /// Natural log; every input entry must be strictly positive.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).as_slice().iter().find(|&&x| !(x > 0.0)) {
            return Err(Error::Domain(format!("ln of non-positive value {bad}")));
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.push(value, Op::Ln(a)))
    }

    /// Elementwise 2^x.
    pub fn exp2(&mut self, a: Var) -> Var {
        let value = self.value(a).map(f64::exp2);
        self.push(value, Op::Exp2(a))
    }

    /// Elementwise max(x, c).
    pub fn max_const(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a).map(|x| x.max(c));
        self.push(value, Op::MaxConst(a, c))
    }

    /// Row-wise softmax with per-row max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let input = self.value(a);
        let cols = input.cols();
        let mut value = input.clone();
        for row in value.as_mut_slice().chunks_mut(cols.max(1)) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                total += *x;
            }
            for x in row.iter_mut() {
                *x /= total;
            }
        }
        self.push(value, Op::SoftmaxRows(a))
    }

    /// Sum across each row: m×n → m×1.
    pub fn sum_rows(&mut self, a: Var) -> Var {
        let value = Matrix::column(&self.value(a).row_sums());
        self.push(value, Op::SumRows(a))
    }

    /// Sum down each column: m×n → 1×n.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let value = Matrix::row(&self.value(a).col_sums());
        self.push(value, Op::SumCols(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = Matrix::scalar(self.value(a).sum());
        self.push(value, Op::SumAll(a))
    }

    /// Broadcasts a 1×1, 1×n or m×1 node to `rows`×`cols`.
    pub fn broadcast(&mut self, a: Var, rows: usize, cols: usize) -> Result<Var> {
        let src = self.value(a);
        let (r, c) = src.shape();
        let ok = (r == 1 || r == rows) && (c == 1 || c == cols);
        if !ok {
            return Err(Error::shape("broadcast", (r, c), (rows, cols)));
        }
        let value = Matrix::from_fn(rows, cols, |i, j| {
            src.get(if r == 1 { 0 } else { i }, if c == 1 { 0 } else { j })
        });
        Ok(self.push(value, Op::Broadcast(a)))
    }

    /// Σ mask_ij · a_ij with a constant weight mask; gradient flows only where
    /// the mask is non-zero.
    pub fn masked_sum(&mut self, a: Var, mask: Matrix) -> Result<Var> {
        let value = self.value(a).hadamard(&mask)?.sum();
        Ok(self.push(Matrix::scalar(value), Op::MaskedSum(a, mask)))
    }

    /// Elementwise product with a constant matrix.
    pub fn mul_const(&mut self, a: Var, c: Matrix) -> Result<Var> {
        let value = self.value(a).hadamard(&c)?;
        Ok(self.push(value, Op::MulConst(a, c)))
    }

    /// Scales `a` by the 1×1 node `s`.
    pub fn mul_scalar(&mut self, a: Var, s: Var) -> Result<Var> {
        let (r, c) = self.shape(a);
        let b = self.broadcast(s, r, c)?;
        self.mul(a, b)
    }

    /// Picks entry (i, j) as a 1×1 node.
    pub fn entry(&mut self, a: Var, i: usize, j: usize) -> Result<Var> {
        let (r, c) = self.shape(a);
        if i >= r || j >= c {
            return Err(Error::shape("entry", (r, c), (i, j)));
        }
        let value = Matrix::scalar(self.value(a).get(i, j));
        Ok(self.push(value, Op::Entry(a, i * c + j)))
    }

    /// Largest entry as a 1×1 node. The selected position is fixed for the
    /// backward pass (first occurrence on ties); the value carries gradient.
    pub fn max(&mut self, a: Var) -> Var {
        let idx = self.value(a).argmax();
        let value = Matrix::scalar(self.value(a).as_slice()[idx]);
        self.push(value, Op::Extreme(a, idx))
    }

    /// Smallest entry as a 1×1 node, see [`Tape::max`].
    pub fn min(&mut self, a: Var) -> Var {
        let idx = self.value(a).argmin();
        let value = Matrix::scalar(self.value(a).as_slice()[idx]);
        self.push(value, Op::Extreme(a, idx))
    }

    /// Reverse pass from a 1×1 `loss`. Returns gradients for every node;
    /// nodes that do not influence the loss get zeros.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(Error::shape("backward", shape, (1, 1)));
        }
        let mut acc = Accumulator {
            slots: vec![None; self.nodes.len()],
        };
        acc.slots[loss.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = acc.slots[idx].take() else {
                continue;
            };
            if g.as_slice().iter().any(|&x| x != 0.0) {
                self.propagate(node, &g, &mut acc)?;
            }
            acc.slots[idx] = Some(g);
        }
        let grads = acc
            .slots
            .into_iter()
            .zip(&self.nodes)
            .map(|(g, n)| g.unwrap_or_else(|| Matrix::zeros(n.value.rows(), n.value.cols())))
            .collect();
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node, g: &Matrix, acc: &mut Accumulator) -> Result<()> {
        let out = &node.value;
        match node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                acc.add(a, g.matmul(&self.value(b).transpose())?)?;
                acc.add(b, self.value(a).transpose().matmul(g)?)?;
            }
            Op::Transpose(a) => acc.add(a, g.transpose())?,
            Op::Add(a, b) => {
                acc.add_scaled(a, g, 1.0)?;
                acc.add_scaled(b, g, 1.0)?;
            }
            Op::Sub(a, b) => {
                acc.add_scaled(a, g, 1.0)?;
                acc.add_scaled(b, g, -1.0)?;
            }
            Op::Mul(a, b) => {
                acc.add(a, g.hadamard(self.value(b))?)?;
                acc.add(b, g.hadamard(self.value(a))?)?;
            }
            Op::Div(a, b) => {
                let vb = self.value(b);
                acc.add(a, g.zip_map(vb, "div", |gi, y| gi / y)?)?;
                acc.add(b, g.hadamard(out)?.zip_map(vb, "div", |t, y| -t / y)?)?;
            }
            Op::Scale(a, s) => acc.add_scaled(a, g, s)?,
            Op::AddScalar(a) => acc.add_scaled(a, g, 1.0)?,
            Op::Abs(a) => acc.add(a, g.zip_map(self.value(a), "abs", |gi, x| gi * sign(x))?)?,
            Op::Sigmoid(a) => acc.add(a, g.zip_map(out, "sigmoid", |gi, y| gi * y * (1.0 - y))?)?,
            Op::Relu(a) => acc.add(a, g.zip_map(self.value(a), "relu", |gi, x| if x > 0.0 { gi } else { 0.0 })?)?,
            Op::Exp(a) => acc.add(a, g.hadamard(out)?)?,
            Op::Ln(a) => acc.add(a, g.zip_map(self.value(a), "ln", |gi, x| gi / x)?)?,
            Op::Exp2(a) => acc.add(a, g.zip_map(out, "exp2", |gi, y| gi * y * std::f64::consts::LN_2)?)?,
            Op::MaxConst(a, c) => {
                acc.add(a, g.zip_map(self.value(a), "max_const", |gi, x| if x > c { gi } else { 0.0 })?)?
            }
            Op::SoftmaxRows(a) => {
                // dx_ij = y_ij (g_ij - Σ_k g_ik y_ik)
                let cols = out.cols();
                let mut d = Matrix::zeros(out.rows(), cols);
                for i in 0..out.rows() {
                    let y = out.row_slice(i);
                    let gr = g.row_slice(i);
                    let dot: f64 = y.iter().zip(gr).map(|(a, b)| a * b).sum();
                    for j in 0..cols {
                        d.set(i, j, y[j] * (gr[j] - dot));
                    }
                }
                acc.add(a, d)?;
            }
            Op::SumRows(a) => {
                let (r, c) = self.shape(a);
                acc.add(a, Matrix::from_fn(r, c, |i, _| g.get(i, 0)))?;
            }
            Op::SumCols(a) => {
                let (r, c) = self.shape(a);
                acc.add(a, Matrix::from_fn(r, c, |_, j| g.get(0, j)))?;
            }
            Op::SumAll(a) => {
                let (r, c) = self.shape(a);
                acc.add(a, Matrix::filled(r, c, g.item()))?;
            }
            Op::Broadcast(a) => {
                let (r, c) = self.shape(a);
                let target = acc.slot(a, r, c);
                for i in 0..g.rows() {
                    for j in 0..g.cols() {
                        let (si, sj) = (if r == 1 { 0 } else { i }, if c == 1 { 0 } else { j });
                        let cur = target.get(si, sj);
                        target.set(si, sj, cur + g.get(i, j));
                    }
                }
            }
            Op::MaskedSum(a, ref mask) => acc.add_scaled(a, mask, g.item())?,
            Op::MulConst(a, ref c) => acc.add(a, g.hadamard(c)?)?,
            Op::Entry(a, flat) | Op::Extreme(a, flat) => {
                let (r, c) = self.shape(a);
                acc.slot(a, r, c).as_mut_slice()[flat] += g.item();
            }
        }
        Ok(())
    }
}

/// Gradient slots filled on first contribution, so nodes off the loss path
/// never allocate during the reverse pass.
struct Accumulator {
    slots: Vec<Option<Matrix>>,
}

impl Accumulator {
    fn add(&mut self, v: Var, d: Matrix) -> Result<()> {
        match &mut self.slots[v.0] {
            Some(cur) => cur.add_scaled(&d, 1.0),
            slot => {
                *slot = Some(d);
                Ok(())
            }
        }
    }

    fn add_scaled(&mut self, v: Var, d: &Matrix, s: f64) -> Result<()> {
        match &mut self.slots[v.0] {
            Some(cur) => cur.add_scaled(d, s),
            slot => {
                *slot = Some(if s == 1.0 { d.clone() } else { d.scale(s) });
                Ok(())
            }
        }
    }

    fn slot(&mut self, v: Var, rows: usize, cols: usize) -> &mut Matrix {
        self.slots[v.0].get_or_insert_with(|| Matrix::zeros(rows, cols))
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
