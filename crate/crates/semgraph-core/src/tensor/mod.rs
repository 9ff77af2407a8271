//! Minimal dense 2-D tensor engine with reverse-mode differentiation.
//!
//! A [`Tape`] records a dynamic computation graph per forward pass; the
//! graphs here are tiny (tens of nodes per sample), so clarity wins over
//! fusion. [`Tensor`] is a copyable handle into the tape. Forward values are
//! computed eagerly; [`Tensor::backward`] runs one reverse sweep and leaves
//! gradients on every node that requires them. Gradients accumulate, so a
//! tensor consumed by several ops receives the sum of its adjoints.
//!
//! All arithmetic is f64 with fixed accumulation order; identical inputs
//! produce bit-identical outputs.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_named, save_named};

use std::cell::RefCell;
use std::cmp::Ordering;

use crate::error::TensorError;
use crate::matrix::Matrix;
use crate::rng::Rng;

/// Smoothing added under the square root of the pairwise L2 norm so the
/// distance is differentiable at zero (the self-loop diagonal always hits
/// it). Shifts e^0 by less than 1e-6.
pub const PAIR_NORM_EPS: f64 = 1e-12;

type Result<T> = std::result::Result<T, TensorError>;

enum Op {
    Leaf,
    Matmul(usize, usize),
    Add(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Exp(usize),
    Sqrt(usize),
    Scale(usize, f64),
    AddScalar(usize),
    Tanh(usize),
    Relu(usize),
    Transpose(usize),
    RowSum(usize),
    ConcatCols(Vec<usize>),
    SliceRows {
        src: usize,
        start: usize,
    },
    Reshape(usize),
    BroadcastAdd {
        col: usize,
        row: usize,
    },
    AddRow {
        x: usize,
        bias: usize,
    },
    DivRows {
        x: usize,
        d: usize,
    },
    DivCols {
        x: usize,
        d: usize,
    },
    PairNorms(usize),
    PairSqDists(usize),
    MaxPoolRows2 {
        src: usize,
        arg_rows: Vec<usize>,
    },
    SortPool {
        src: usize,
        kept: Vec<usize>,
    },
    Dropout {
        src: usize,
        mask: Vec<f64>,
    },
    CrossEntropy {
        logits: usize,
        softmax: Vec<f64>,
        label: usize,
    },
}

struct Node {
    value: Matrix,
    grad: Option<Matrix>,
    op: Op,
    needs_grad: bool,
}

/// Recorder for one differentiable computation.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Tensor<'t> {
    tape: &'t Tape,
    idx: usize,
}

impl std::fmt::Debug for Tensor<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (r, c) = self.shape();
        write!(f, "Tensor#{} [{r}x{c}]", self.idx)
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Constant input; no gradient is tracked for it.
    pub fn leaf(&self, value: Matrix) -> Tensor<'_> {
        self.push(value, Op::Leaf, false)
    }

    /// Differentiable input (a parameter).
    pub fn var(&self, value: Matrix) -> Tensor<'_> {
        self.push(value, Op::Leaf, true)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn push(&self, value: Matrix, op: Op, needs_grad: bool) -> Tensor<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            grad: None,
            op,
            needs_grad,
        });
        Tensor {
            tape: self,
            idx: nodes.len() - 1,
        }
    }

    fn needs(&self, idx: usize) -> bool {
        self.nodes.borrow()[idx].needs_grad
    }

    /// Column-wise concatenation; all parts must share the row count.
    pub fn concat_cols(&self, parts: &[Tensor<'_>]) -> Result<Tensor<'_>> {
        assert!(!parts.is_empty(), "concat_cols of nothing");
        let rows = parts[0].rows();
        let mut cols = 0;
        for p in parts {
            if p.rows() != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: parts[0].shape(),
                    rhs: p.shape(),
                });
            }
            cols += p.cols();
        }
        let mut out = Matrix::zeros(rows, cols);
        {
            let nodes = self.nodes.borrow();
            let mut offset = 0;
            for p in parts {
                let v = &nodes[p.idx].value;
                for i in 0..rows {
                    for j in 0..v.cols() {
                        out[(i, offset + j)] = v[(i, j)];
                    }
                }
                offset += v.cols();
            }
        }
        let needs = parts.iter().any(|p| self.needs(p.idx));
        Ok(self.push(
            out,
            Op::ConcatCols(parts.iter().map(|p| p.idx).collect()),
            needs,
        ))
    }
}

impl<'t> Tensor<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.idx].value.shape()
    }

    pub fn rows(&self) -> usize {
        self.shape().0
    }

    pub fn cols(&self) -> usize {
        self.shape().1
    }

    /// Clone of the forward value.
    pub fn value(&self) -> Matrix {
        self.tape.nodes.borrow()[self.idx].value.clone()
    }

    /// Scalar value of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        let nodes = self.tape.nodes.borrow();
        let v = &nodes[self.idx].value;
        assert_eq!(v.shape(), (1, 1), "item() on non-scalar");
        v[(0, 0)]
    }

    /// Accumulated gradient, if this node required one and backward ran.
    pub fn grad(&self) -> Option<Matrix> {
        self.tape.nodes.borrow()[self.idx].grad.clone()
    }

    fn unary(&self, op: impl FnOnce(usize) -> Op, f: impl FnOnce(&Matrix) -> Matrix) -> Tensor<'t> {
        let (value, needs) = {
            let nodes = self.tape.nodes.borrow();
            let n = &nodes[self.idx];
            (f(&n.value), n.needs_grad)
        };
        self.tape.push(value, op(self.idx), needs)
    }

    pub fn matmul(&self, o: Tensor<'t>) -> Result<Tensor<'t>> {
        if self.cols() != o.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: o.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            nodes[self.idx].value.matmul(&nodes[o.idx].value)
        };
        let needs = self.tape.needs(self.idx) || self.tape.needs(o.idx);
        Ok(self.tape.push(value, Op::Matmul(self.idx, o.idx), needs))
    }

    pub fn add(&self, o: Tensor<'t>) -> Result<Tensor<'t>> {
        if self.shape() != o.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs: self.shape(),
                rhs: o.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.idx].value, &nodes[o.idx].value);
            let mut out = a.clone();
            for (x, y) in out.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
            out
        };
        let needs = self.tape.needs(self.idx) || self.tape.needs(o.idx);
        Ok(self.tape.push(value, Op::Add(self.idx, o.idx), needs))
    }

    pub fn mul(&self, o: Tensor<'t>) -> Result<Tensor<'t>> {
        if self.shape() != o.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: self.shape(),
                rhs: o.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.idx].value, &nodes[o.idx].value);
            let mut out = a.clone();
            for (x, y) in out.data_mut().iter_mut().zip(b.data()) {
                *x *= y;
            }
            out
        };
        let needs = self.tape.needs(self.idx) || self.tape.needs(o.idx);
        Ok(self.tape.push(value, Op::Mul(self.idx, o.idx), needs))
    }

    pub fn neg(&self) -> Tensor<'t> {
        self.unary(Op::Neg, |m| m.map(|x| -x))
    }

    pub fn exp(&self) -> Result<Tensor<'t>> {
        let t = self.unary(Op::Exp, |m| m.map(f64::exp));
        if !self.tape.nodes.borrow()[t.idx].value.is_finite() {
            return Err(TensorError::NonFinite { op: "exp" });
        }
        Ok(t)
    }

    pub fn sqrt(&self) -> Tensor<'t> {
        self.unary(Op::Sqrt, |m| m.map(f64::sqrt))
    }

    pub fn scale(&self, c: f64) -> Tensor<'t> {
        self.unary(|i| Op::Scale(i, c), |m| m.map(|x| c * x))
    }

    pub fn add_scalar(&self, c: f64) -> Tensor<'t> {
        self.unary(Op::AddScalar, |m| m.map(|x| x + c))
    }

    pub fn tanh(&self) -> Tensor<'t> {
        self.unary(Op::Tanh, |m| m.map(f64::tanh))
    }

    pub fn relu(&self) -> Tensor<'t> {
        self.unary(Op::Relu, |m| m.map(|x| if x > 0.0 { x } else { 0.0 }))
    }

    pub fn transpose(&self) -> Tensor<'t> {
        self.unary(Op::Transpose, Matrix::transpose)
    }

    /// Row sums as an n x 1 column.
    pub fn row_sum(&self) -> Tensor<'t> {
        self.unary(Op::RowSum, |m| {
            let mut out = Matrix::zeros(m.rows(), 1);
            for i in 0..m.rows() {
                let mut acc = 0.0;
                for j in 0..m.cols() {
                    acc += m[(i, j)];
                }
                out[(i, 0)] = acc;
            }
            out
        })
    }

    /// Sum of all entries as a 1x1 tensor.
    pub fn sum_all(&self) -> Result<Tensor<'t>> {
        let (r, c) = self.shape();
        Ok(self.reshape(1, r * c)?.row_sum())
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Result<Tensor<'t>> {
        let (rows, cols) = self.shape();
        if start >= end || end > rows {
            return Err(TensorError::InvalidArgument(format!(
                "slice_rows {start}..{end} of {rows} rows"
            )));
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let m = &nodes[self.idx].value;
            let mut out = Matrix::zeros(end - start, cols);
            for i in start..end {
                for j in 0..cols {
                    out[(i - start, j)] = m[(i, j)];
                }
            }
            out
        };
        let needs = self.tape.needs(self.idx);
        Ok(self.tape.push(
            value,
            Op::SliceRows {
                src: self.idx,
                start,
            },
            needs,
        ))
    }

    /// Row-major reinterpretation with the same element count.
    pub fn reshape(&self, rows: usize, cols: usize) -> Result<Tensor<'t>> {
        let (r, c) = self.shape();
        if r * c != rows * cols {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: (r, c),
                rhs: (rows, cols),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            Matrix::from_vec(rows, cols, nodes[self.idx].value.data().to_vec())
        };
        let needs = self.tape.needs(self.idx);
        Ok(self.tape.push(value, Op::Reshape(self.idx), needs))
    }

    /// `out[i][j] = self[i][0] + row[0][j]`; self must be n x 1, row 1 x m.
    pub fn broadcast_add(&self, row: Tensor<'t>) -> Result<Tensor<'t>> {
        if self.cols() != 1 || row.rows() != 1 {
            return Err(TensorError::ShapeMismatch {
                op: "broadcast_add",
                lhs: self.shape(),
                rhs: row.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let col_v = &nodes[self.idx].value;
            let row_v = &nodes[row.idx].value;
            let (n, m) = (col_v.rows(), row_v.cols());
            let mut out = Matrix::zeros(n, m);
            for i in 0..n {
                for j in 0..m {
                    out[(i, j)] = col_v[(i, 0)] + row_v[(0, j)];
                }
            }
            out
        };
        let needs = self.tape.needs(self.idx) || self.tape.needs(row.idx);
        Ok(self.tape.push(
            value,
            Op::BroadcastAdd {
                col: self.idx,
                row: row.idx,
            },
            needs,
        ))
    }

    /// Add a 1 x m bias row to every row of an n x m tensor.
    pub fn add_row(&self, bias: Tensor<'t>) -> Result<Tensor<'t>> {
        if bias.rows() != 1 || bias.cols() != self.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "add_row",
                lhs: self.shape(),
                rhs: bias.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let x = &nodes[self.idx].value;
            let b = &nodes[bias.idx].value;
            let mut out = x.clone();
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    out[(i, j)] += b[(0, j)];
                }
            }
            out
        };
        let needs = self.tape.needs(self.idx) || self.tape.needs(bias.idx);
        Ok(self.tape.push(
            value,
            Op::AddRow {
                x: self.idx,
                bias: bias.idx,
            },
            needs,
        ))
    }

    /// Divide row i by `d[i]`; d must be n x 1.
    pub fn div_rows(&self, d: Tensor<'t>) -> Result<Tensor<'t>> {
        if d.cols() != 1 || d.rows() != self.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "div_rows",
                lhs: self.shape(),
                rhs: d.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let x = &nodes[self.idx].value;
            let dv = &nodes[d.idx].value;
            let mut out = x.clone();
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    out[(i, j)] /= dv[(i, 0)];
                }
            }
            out
        };
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: "div_rows" });
        }
        let needs = self.tape.needs(self.idx) || self.tape.needs(d.idx);
        Ok(self.tape.push(
            value,
            Op::DivRows {
                x: self.idx,
                d: d.idx,
            },
            needs,
        ))
    }

    /// Divide column j by `d[j]`; d must be m x 1 for an n x m tensor.
    pub fn div_cols(&self, d: Tensor<'t>) -> Result<Tensor<'t>> {
        if d.cols() != 1 || d.rows() != self.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "div_cols",
                lhs: self.shape(),
                rhs: d.shape(),
            });
        }
        let value = {
            let nodes = self.tape.nodes.borrow();
            let x = &nodes[self.idx].value;
            let dv = &nodes[d.idx].value;
            let mut out = x.clone();
            for i in 0..x.rows() {
                for j in 0..x.cols() {
                    out[(i, j)] /= dv[(j, 0)];
                }
            }
            out
        };
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: "div_cols" });
        }
        let needs = self.tape.needs(self.idx) || self.tape.needs(d.idx);
        Ok(self.tape.push(
            value,
            Op::DivCols {
                x: self.idx,
                d: d.idx,
            },
            needs,
        ))
    }

    /// Pairwise L2 norms between rows:
    /// `out[w][q] = sqrt(sum_c (x[w][c] - x[q][c])^2 + PAIR_NORM_EPS)`.
    /// Differentiable everywhere, including the zero-distance diagonal.
    pub fn pair_norms(&self) -> Tensor<'t> {
        self.unary(Op::PairNorms, |m| {
            let n = m.rows();
            let mut out = Matrix::zeros(n, n);
            for w in 0..n {
                for q in 0..n {
                    let mut acc = 0.0;
                    for c in 0..m.cols() {
                        let d = m[(w, c)] - m[(q, c)];
                        acc += d * d;
                    }
                    out[(w, q)] = (acc + PAIR_NORM_EPS).sqrt();
                }
            }
            out
        })
    }

    /// Pairwise squared L2 distances between rows (no smoothing; already
    /// differentiable at zero).
    pub fn pair_sq_dists(&self) -> Tensor<'t> {
        self.unary(Op::PairSqDists, |m| {
            let n = m.rows();
            let mut out = Matrix::zeros(n, n);
            for w in 0..n {
                for q in 0..n {
                    let mut acc = 0.0;
                    for c in 0..m.cols() {
                        let d = m[(w, c)] - m[(q, c)];
                        acc += d * d;
                    }
                    out[(w, q)] = acc;
                }
            }
            out
        })
    }

    /// Max over adjacent row pairs (window 2, stride 2); an odd trailing row
    /// is dropped. Gradients flow to the winning row; ties pick the first.
    pub fn maxpool_rows2(&self) -> Result<Tensor<'t>> {
        let (rows, cols) = self.shape();
        if rows < 2 {
            return Err(TensorError::InvalidArgument(format!(
                "maxpool_rows2 needs at least 2 rows, got {rows}"
            )));
        }
        let out_rows = rows / 2;
        let (value, arg_rows) = {
            let nodes = self.tape.nodes.borrow();
            let m = &nodes[self.idx].value;
            let mut out = Matrix::zeros(out_rows, cols);
            let mut arg = vec![0usize; out_rows * cols];
            for r in 0..out_rows {
                for j in 0..cols {
                    let a = m[(2 * r, j)];
                    let b = m[(2 * r + 1, j)];
                    if b > a {
                        out[(r, j)] = b;
                        arg[r * cols + j] = 2 * r + 1;
                    } else {
                        out[(r, j)] = a;
                        arg[r * cols + j] = 2 * r;
                    }
                }
            }
            (out, arg)
        };
        let needs = self.tape.needs(self.idx);
        Ok(self.tape.push(
            value,
            Op::MaxPoolRows2 {
                src: self.idx,
                arg_rows,
            },
            needs,
        ))
    }

    /// SortPooling: rows sorted descending by the last column, ties broken
    /// by the preceding columns in turn and finally by original index
    /// ascending; the first `z` rows are kept and short inputs are padded
    /// with zero rows. Gradients flow to the selected rows only.
    pub fn sort_pool(&self, z: usize) -> Tensor<'t> {
        assert!(z >= 1, "sort_pool keep-count must be >= 1");
        let (value, kept) = {
            let nodes = self.tape.nodes.borrow();
            let m = &nodes[self.idx].value;
            let (n, cols) = m.shape();
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| {
                for c in (0..cols).rev() {
                    match m[(b, c)].partial_cmp(&m[(a, c)]).expect("finite sort keys") {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                a.cmp(&b)
            });
            let kept: Vec<usize> = idx.into_iter().take(z.min(n)).collect();
            let mut out = Matrix::zeros(z, cols);
            for (r, &src) in kept.iter().enumerate() {
                for j in 0..cols {
                    out[(r, j)] = m[(src, j)];
                }
            }
            (out, kept)
        };
        let needs = self.tape.needs(self.idx);
        self.tape.push(
            value,
            Op::SortPool {
                src: self.idx,
                kept,
            },
            needs,
        )
    }

    /// Inverted dropout: zero each entry with probability `rate` and scale
    /// survivors by 1/(1-rate). Call only in training mode.
    pub fn dropout(&self, rate: f64, rng: &mut Rng) -> Result<Tensor<'t>> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        let keep_scale = 1.0 / (1.0 - rate);
        let (value, mask) = {
            let nodes = self.tape.nodes.borrow();
            let m = &nodes[self.idx].value;
            let mask: Vec<f64> = (0..m.data().len())
                .map(|_| {
                    if rng.next_f64() < rate {
                        0.0
                    } else {
                        keep_scale
                    }
                })
                .collect();
            let mut out = m.clone();
            for (x, &k) in out.data_mut().iter_mut().zip(&mask) {
                *x *= k;
            }
            (out, mask)
        };
        let needs = self.tape.needs(self.idx);
        Ok(self.tape.push(
            value,
            Op::Dropout {
                src: self.idx,
                mask,
            },
            needs,
        ))
    }

    /// Cross-entropy of 1 x C logits against a class index, computed with
    /// max subtraction. Returns a 1 x 1 loss.
    pub fn softmax_cross_entropy(&self, label: usize) -> Result<Tensor<'t>> {
        let (r, c) = self.shape();
        if r != 1 || c < 2 {
            return Err(TensorError::InvalidArgument(format!(
                "softmax_cross_entropy expects 1 x C logits with C >= 2, got {r} x {c}"
            )));
        }
        if label >= c {
            return Err(TensorError::LabelOutOfRange { label, classes: c });
        }
        let (loss, softmax) = {
            let nodes = self.tape.nodes.borrow();
            let logits = &nodes[self.idx].value;
            let max = logits
                .data()
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.data().iter().map(|&x| (x - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let softmax: Vec<f64> = exps.iter().map(|&e| e / z).collect();
            let loss = z.ln() - (logits[(0, label)] - max);
            (loss, softmax)
        };
        if !loss.is_finite() {
            return Err(TensorError::NonFinite {
                op: "softmax_cross_entropy",
            });
        }
        let needs = self.tape.needs(self.idx);
        Ok(self.tape.push(
            Matrix::filled(1, 1, loss),
            Op::CrossEntropy {
                logits: self.idx,
                softmax,
                label,
            },
            needs,
        ))
    }

    /// Reverse sweep from a scalar. Gradients accumulate on every node with
    /// `needs_grad`; run once per tape.
    pub fn backward(&self) -> Result<()> {
        let mut nodes = self.tape.nodes.borrow_mut();
        {
            let node = &mut nodes[self.idx];
            if node.value.shape() != (1, 1) {
                return Err(TensorError::InvalidArgument(format!(
                    "backward needs a scalar, got {:?}",
                    node.value.shape()
                )));
            }
            node.grad = Some(Matrix::filled(1, 1, 1.0));
        }
        for i in (0..=self.idx).rev() {
            if nodes[i].needs_grad && nodes[i].grad.is_some() {
                backprop(&mut nodes, i);
            }
        }
        Ok(())
    }
}

fn ensure_grad(node: &mut Node) -> &mut Matrix {
    if node.grad.is_none() {
        node.grad = Some(Matrix::zeros(node.value.rows(), node.value.cols()));
    }
    node.grad.as_mut().unwrap()
}

fn add_into(node: &mut Node, contrib: &Matrix) {
    if !node.needs_grad {
        return;
    }
    let g = ensure_grad(node);
    for (x, y) in g.data_mut().iter_mut().zip(contrib.data()) {
        *x += y;
    }
}

/// Propagate the adjoint of node `i` into its parents. Parents always have
/// smaller indices, so the slice can be split at `i`. Contributions are
/// computed first and applied afterwards, which keeps a tensor fed to both
/// sides of a binary op (e.g. `x * x`) correct.
fn backprop(nodes: &mut [Node], i: usize) {
    let (before, after) = nodes.split_at_mut(i);
    let node = &after[0];
    let g = node.grad.as_ref().expect("grad present");

    match &node.op {
        Op::Leaf => {}

        Op::Matmul(a, b) => {
            let (a, b) = (*a, *b);
            let ga = if before[a].needs_grad {
                Some(g.matmul(&before[b].value.transpose()))
            } else {
                None
            };
            let gb = if before[b].needs_grad {
                Some(before[a].value.transpose().matmul(g))
            } else {
                None
            };
            if let Some(ga) = ga {
                add_into(&mut before[a], &ga);
            }
            if let Some(gb) = gb {
                add_into(&mut before[b], &gb);
            }
        }

        Op::Add(a, b) => {
            let (a, b) = (*a, *b);
            let g = g.clone();
            add_into(&mut before[a], &g);
            add_into(&mut before[b], &g);
        }

        Op::Mul(a, b) => {
            let (a, b) = (*a, *b);
            let ga = {
                let mut m = g.clone();
                for (x, y) in m.data_mut().iter_mut().zip(before[b].value.data()) {
                    *x *= y;
                }
                m
            };
            let gb = {
                let mut m = g.clone();
                for (x, y) in m.data_mut().iter_mut().zip(before[a].value.data()) {
                    *x *= y;
                }
                m
            };
            add_into(&mut before[a], &ga);
            add_into(&mut before[b], &gb);
        }

        Op::Neg(a) => {
            let contrib = g.map(|x| -x);
            add_into(&mut before[*a], &contrib);
        }

        Op::Exp(a) => {
            // d/dx e^x = e^x = forward output.
            let mut contrib = g.clone();
            for (x, y) in contrib.data_mut().iter_mut().zip(node.value.data()) {
                *x *= y;
            }
            add_into(&mut before[*a], &contrib);
        }

        Op::Sqrt(a) => {
            let mut contrib = g.clone();
            for (x, y) in contrib.data_mut().iter_mut().zip(node.value.data()) {
                *x /= 2.0 * y;
            }
            add_into(&mut before[*a], &contrib);
        }

        Op::Scale(a, c) => {
            let c = *c;
            let contrib = g.map(|x| c * x);
            add_into(&mut before[*a], &contrib);
        }

        Op::AddScalar(a) => {
            let contrib = g.clone();
            add_into(&mut before[*a], &contrib);
        }

        Op::Tanh(a) => {
            let mut contrib = g.clone();
            for (x, y) in contrib.data_mut().iter_mut().zip(node.value.data()) {
                *x *= 1.0 - y * y;
            }
            add_into(&mut before[*a], &contrib);
        }

        Op::Relu(a) => {
            let mut contrib = g.clone();
            for (x, y) in contrib.data_mut().iter_mut().zip(before[*a].value.data()) {
                *x *= if *y > 0.0 { 1.0 } else { 0.0 };
            }
            add_into(&mut before[*a], &contrib);
        }

        Op::Transpose(a) => {
            let contrib = g.transpose();
            add_into(&mut before[*a], &contrib);
        }

        Op::RowSum(a) => {
            let src = &before[*a].value;
            let mut contrib = Matrix::zeros(src.rows(), src.cols());
            for i in 0..src.rows() {
                for j in 0..src.cols() {
                    contrib[(i, j)] = g[(i, 0)];
                }
            }
            add_into(&mut before[*a], &contrib);
        }

        Op::ConcatCols(parts) => {
            let parts = parts.clone();
            let mut offset = 0;
            for p in parts {
                let (rows, cols) = before[p].value.shape();
                let mut contrib = Matrix::zeros(rows, cols);
                for i in 0..rows {
                    for j in 0..cols {
                        contrib[(i, j)] = g[(i, offset + j)];
                    }
                }
                add_into(&mut before[p], &contrib);
                offset += cols;
            }
        }

        Op::SliceRows { src, start } => {
            let (src, start) = (*src, *start);
            let (rows, cols) = before[src].value.shape();
            let mut contrib = Matrix::zeros(rows, cols);
            for i in 0..g.rows() {
                for j in 0..cols {
                    contrib[(start + i, j)] = g[(i, j)];
                }
            }
            add_into(&mut before[src], &contrib);
        }

        Op::Reshape(a) => {
            let (rows, cols) = before[*a].value.shape();
            let contrib = Matrix::from_vec(rows, cols, g.data().to_vec());
            add_into(&mut before[*a], &contrib);
        }

        Op::BroadcastAdd { col, row } => {
            let (col, row) = (*col, *row);
            let n = g.rows();
            let m = g.cols();
            let mut gcol = Matrix::zeros(n, 1);
            let mut grow = Matrix::zeros(1, m);
            for i in 0..n {
                for j in 0..m {
                    gcol[(i, 0)] += g[(i, j)];
                    grow[(0, j)] += g[(i, j)];
                }
            }
            add_into(&mut before[col], &gcol);
            add_into(&mut before[row], &grow);
        }

        Op::AddRow { x, bias } => {
            let (x, bias) = (*x, *bias);
            let gx = g.clone();
            let mut gb = Matrix::zeros(1, g.cols());
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    gb[(0, j)] += g[(i, j)];
                }
            }
            add_into(&mut before[x], &gx);
            add_into(&mut before[bias], &gb);
        }

        Op::DivRows { x, d } => {
            let (x, d) = (*x, *d);
            let xv = &before[x].value;
            let dv = &before[d].value;
            let mut gx = Matrix::zeros(xv.rows(), xv.cols());
            let mut gd = Matrix::zeros(dv.rows(), 1);
            for i in 0..xv.rows() {
                let di = dv[(i, 0)];
                for j in 0..xv.cols() {
                    gx[(i, j)] = g[(i, j)] / di;
                    gd[(i, 0)] -= g[(i, j)] * xv[(i, j)] / (di * di);
                }
            }
            add_into(&mut before[x], &gx);
            add_into(&mut before[d], &gd);
        }

        Op::DivCols { x, d } => {
            let (x, d) = (*x, *d);
            let xv = &before[x].value;
            let dv = &before[d].value;
            let mut gx = Matrix::zeros(xv.rows(), xv.cols());
            let mut gd = Matrix::zeros(dv.rows(), 1);
            for i in 0..xv.rows() {
                for j in 0..xv.cols() {
                    let dj = dv[(j, 0)];
                    gx[(i, j)] = g[(i, j)] / dj;
                    gd[(j, 0)] -= g[(i, j)] * xv[(i, j)] / (dj * dj);
                }
            }
            add_into(&mut before[x], &gx);
            add_into(&mut before[d], &gd);
        }

        Op::PairNorms(a) => {
            let a = *a;
            let xv = &before[a].value;
            let n = xv.rows();
            let mut contrib = Matrix::zeros(n, xv.cols());
            for w in 0..n {
                for q in 0..n {
                    let coeff = g[(w, q)] / node.value[(w, q)];
                    if coeff == 0.0 {
                        continue;
                    }
                    for c in 0..xv.cols() {
                        let d = xv[(w, c)] - xv[(q, c)];
                        contrib[(w, c)] += coeff * d;
                        contrib[(q, c)] -= coeff * d;
                    }
                }
            }
            add_into(&mut before[a], &contrib);
        }

        Op::PairSqDists(a) => {
            let a = *a;
            let xv = &before[a].value;
            let n = xv.rows();
            let mut contrib = Matrix::zeros(n, xv.cols());
            for w in 0..n {
                for q in 0..n {
                    let coeff = 2.0 * g[(w, q)];
                    if coeff == 0.0 {
                        continue;
                    }
                    for c in 0..xv.cols() {
                        let d = xv[(w, c)] - xv[(q, c)];
                        contrib[(w, c)] += coeff * d;
                        contrib[(q, c)] -= coeff * d;
                    }
                }
            }
            add_into(&mut before[a], &contrib);
        }

        Op::MaxPoolRows2 { src, arg_rows } => {
            let src = *src;
            let (rows, cols) = before[src].value.shape();
            let mut contrib = Matrix::zeros(rows, cols);
            for r in 0..g.rows() {
                for j in 0..cols {
                    contrib[(arg_rows[r * cols + j], j)] += g[(r, j)];
                }
            }
            add_into(&mut before[src], &contrib);
        }

        Op::SortPool { src, kept } => {
            let src = *src;
            let (rows, cols) = before[src].value.shape();
            let mut contrib = Matrix::zeros(rows, cols);
            for (r, &s) in kept.iter().enumerate() {
                for j in 0..cols {
                    contrib[(s, j)] += g[(r, j)];
                }
            }
            add_into(&mut before[src], &contrib);
        }

        Op::Dropout { src, mask } => {
            let src = *src;
            let mut contrib = g.clone();
            for (x, &k) in contrib.data_mut().iter_mut().zip(mask) {
                *x *= k;
            }
            add_into(&mut before[src], &contrib);
        }

        Op::CrossEntropy {
            logits,
            softmax,
            label,
        } => {
            let (logits, label) = (*logits, *label);
            let scale = g[(0, 0)];
            let mut contrib = Matrix::zeros(1, softmax.len());
            for (j, &s) in softmax.iter().enumerate() {
                let one_hot = if j == label { 1.0 } else { 0.0 };
                contrib[(0, j)] = scale * (s - one_hot);
            }
            add_into(&mut before[logits], &contrib);
        }
    }
}
