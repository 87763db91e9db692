//! Minimal reverse-mode automatic differentiation over dense 2-D f64 arrays.
//!
//! Graphs are built per forward pass on one thread (`Tensor` is deliberately
//! not `Send`); parameters live outside the graph as named [`Arr`] values and
//! enter each graph as named leaves, so independent graphs can be evaluated
//! in parallel while gradient accumulation stays in a fixed order.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Dense row-major 2-D array.
#[derive(Debug, Clone, PartialEq)]
pub struct Arr {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Arr {
    pub fn zeros(rows: usize, cols: usize) -> Arr {
        Arr { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Arr {
        assert_eq!(rows * cols, data.len());
        Arr { rows, cols, data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn scalar(v: f64) -> Arr {
        Arr { rows: 1, cols: 1, data: vec![v] }
    }
}

/// Named parameter collection; BTreeMap keeps iteration deterministic.
pub type ParamStore = BTreeMap<String, Arr>;
/// Gradients keyed like the parameters that produced them.
pub type GradMap = BTreeMap<String, Vec<f64>>;

enum Op {
    Leaf { name: Option<String> },
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    AddRowVec(Tensor, Tensor),
    MulRowVec(Tensor, Tensor),
    Scale(Tensor, f64),
    Matmul(Tensor, Tensor),
    /// C = A · Bᵀ with A [m,k], B [n,k].
    MatmulTransB(Tensor, Tensor),
    SoftmaxRows(Tensor),
    LeakyRelu(Tensor, f64),
    Exp(Tensor),
    Ln(Tensor),
    SumAll(Tensor),
    MeanRowsMasked(Tensor, Vec<f64>),
    L2NormalizeRows(Tensor, f64),
    LayerNormRows(Tensor, f64),
    Dropout(Tensor, Vec<f64>),
    Clip(Tensor, f64, f64),
    Sanitize(Tensor),
    IndexScalar(Tensor, usize),
    ConcatScalars(Vec<Tensor>),
    ConcatCols(Tensor, Tensor),
    SliceCols(Tensor, usize, usize),
}

struct Node {
    id: u64,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    requires_grad: bool,
    grad: RefCell<Option<Vec<f64>>>,
    op: Op,
}

/// Handle to a graph node.
#[derive(Clone)]
pub struct Tensor(Rc<Node>);

impl Tensor {
    fn make(rows: usize, cols: usize, values: Vec<f64>, requires_grad: bool, op: Op) -> Tensor {
        debug_assert_eq!(rows * cols, values.len());
        Tensor(Rc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            rows,
            cols,
            values,
            requires_grad,
            grad: RefCell::new(None),
            op,
        }))
    }

    /// Constant leaf (no gradient).
    pub fn constant(rows: usize, cols: usize, values: Vec<f64>) -> Tensor {
        Tensor::make(rows, cols, values, false, Op::Leaf { name: None })
    }

    pub fn scalar_const(v: f64) -> Tensor {
        Tensor::constant(1, 1, vec![v])
    }

    /// Named trainable leaf initialized from a parameter array.
    pub fn param(name: &str, arr: &Arr) -> Tensor {
        Tensor::make(
            arr.rows,
            arr.cols,
            arr.data.clone(),
            true,
            Op::Leaf { name: Some(name.to_string()) },
        )
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn value_scalar(&self) -> f64 {
        debug_assert_eq!(self.0.values.len(), 1);
        self.0.values[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.0.requires_grad
    }

    fn same_shape(&self, o: &Tensor) -> Result<()> {
        if self.rows() != o.rows() || self.cols() != o.cols() {
            return Err(Error::Shape(format!(
                "shape mismatch: [{},{}] vs [{},{}]",
                self.rows(),
                self.cols(),
                o.rows(),
                o.cols()
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Tensor) -> Result<Tensor> {
        self.same_shape(o)?;
        let values = self.values().iter().zip(o.values()).map(|(a, b)| a + b).collect();
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad() || o.requires_grad(),
            Op::Add(self.clone(), o.clone()),
        ))
    }

    pub fn sub(&self, o: &Tensor) -> Result<Tensor> {
        self.same_shape(o)?;
        let values = self.values().iter().zip(o.values()).map(|(a, b)| a - b).collect();
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad() || o.requires_grad(),
            Op::Sub(self.clone(), o.clone()),
        ))
    }

    pub fn mul(&self, o: &Tensor) -> Result<Tensor> {
        self.same_shape(o)?;
        let values = self.values().iter().zip(o.values()).map(|(a, b)| a * b).collect();
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad() || o.requires_grad(),
            Op::Mul(self.clone(), o.clone()),
        ))
    }

    /// Adds a [1, D] row vector to every row of a [T, D] tensor.
    pub fn add_row_vec(&self, v: &Tensor) -> Result<Tensor> {
        if v.rows() != 1 || v.cols() != self.cols() {
            return Err(Error::Shape(format!(
                "add_row_vec: vector [{},{}] does not broadcast over [{},{}]",
                v.rows(),
                v.cols(),
                self.rows(),
                self.cols()
            )));
        }
        let d = self.cols();
        let mut values = self.values().to_vec();
        for r in 0..self.rows() {
            for c in 0..d {
                values[r * d + c] += v.values()[c];
            }
        }
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad() || v.requires_grad(),
            Op::AddRowVec(self.clone(), v.clone()),
        ))
    }

    /// Multiplies every row of a [T, D] tensor by a [1, D] row vector.
    pub fn mul_row_vec(&self, v: &Tensor) -> Result<Tensor> {
        if v.rows() != 1 || v.cols() != self.cols() {
            return Err(Error::Shape("mul_row_vec: bad vector shape".into()));
        }
        let d = self.cols();
        let mut values = self.values().to_vec();
        for r in 0..self.rows() {
            for c in 0..d {
                values[r * d + c] *= v.values()[c];
            }
        }
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad() || v.requires_grad(),
            Op::MulRowVec(self.clone(), v.clone()),
        ))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let values = self.values().iter().map(|v| v * c).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::Scale(self.clone(), c))
    }

    pub fn matmul(&self, o: &Tensor) -> Result<Tensor> {
        if self.cols() != o.rows() {
            return Err(Error::Shape(format!(
                "matmul: [{},{}] · [{},{}]",
                self.rows(),
                self.cols(),
                o.rows(),
                o.cols()
            )));
        }
        let (m, k, n) = (self.rows(), self.cols(), o.cols());
        let mut out = vec![0.0; m * n];
        matmul_ikj(self.values(), o.values(), &mut out, m, k, n);
        Ok(Tensor::make(
            m,
            n,
            out,
            self.requires_grad() || o.requires_grad(),
            Op::Matmul(self.clone(), o.clone()),
        ))
    }

    /// self · oᵀ where self is [m, k] and o is [n, k].
    pub fn matmul_trans_b(&self, o: &Tensor) -> Result<Tensor> {
        if self.cols() != o.cols() {
            return Err(Error::Shape(format!(
                "matmul_trans_b: [{},{}] · [{},{}]ᵀ",
                self.rows(),
                self.cols(),
                o.rows(),
                o.cols()
            )));
        }
        let (m, k, n) = (self.rows(), self.cols(), o.rows());
        let a = self.values();
        let b = o.values();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            for j in 0..n {
                let brow = &b[j * k..(j + 1) * k];
                let mut s = 0.0;
                for t in 0..k {
                    s += arow[t] * brow[t];
                }
                out[i * n + j] = s;
            }
        }
        Ok(Tensor::make(
            m,
            n,
            out,
            self.requires_grad() || o.requires_grad(),
            Op::MatmulTransB(self.clone(), o.clone()),
        ))
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&self) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        let mut values = vec![0.0; m * n];
        for r in 0..m {
            let row = &self.values()[r * n..(r + 1) * n];
            let mx = row.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let mut sum = 0.0;
            for (j, v) in row.iter().enumerate() {
                let e = (v - mx).exp();
                values[r * n + j] = e;
                sum += e;
            }
            let inv = 1.0 / sum;
            for j in 0..n {
                values[r * n + j] *= inv;
            }
        }
        Tensor::make(m, n, values, self.requires_grad(), Op::SoftmaxRows(self.clone()))
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        let values = self.values().iter().map(|v| if *v > 0.0 { *v } else { slope * v }).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::LeakyRelu(self.clone(), slope))
    }

    pub fn exp(&self) -> Tensor {
        let values = self.values().iter().map(|v| v.exp()).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::Exp(self.clone()))
    }

    pub fn ln(&self) -> Tensor {
        let values = self.values().iter().map(|v| v.ln()).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::Ln(self.clone()))
    }

    pub fn sum_all(&self) -> Tensor {
        let s: f64 = self.values().iter().sum();
        Tensor::make(1, 1, vec![s], self.requires_grad(), Op::SumAll(self.clone()))
    }

    /// Mean over rows weighted by a 0/1 mask; a fully masked input yields a
    /// zero row.
    pub fn mean_rows_masked(&self, mask: &[f64]) -> Result<Tensor> {
        if mask.len() != self.rows() {
            return Err(Error::Shape(format!(
                "mask length {} vs {} rows",
                mask.len(),
                self.rows()
            )));
        }
        let d = self.cols();
        let total: f64 = mask.iter().sum();
        let mut out = vec![0.0; d];
        if total > 0.0 {
            for (r, m) in mask.iter().enumerate() {
                if *m != 0.0 {
                    for c in 0..d {
                        out[c] += m * self.values()[r * d + c];
                    }
                }
            }
            let inv = 1.0 / total;
            for v in &mut out {
                *v *= inv;
            }
        }
        Ok(Tensor::make(
            1,
            d,
            out,
            self.requires_grad(),
            Op::MeanRowsMasked(self.clone(), mask.to_vec()),
        ))
    }

    /// Per-row ℓ2 normalization with an ε floor; zero rows stay zero.
    pub fn l2_normalize_rows(&self, eps: f64) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        let mut values = vec![0.0; m * n];
        for r in 0..m {
            let row = &self.values()[r * n..(r + 1) * n];
            let norm: f64 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let inv = 1.0 / norm.max(eps);
            for j in 0..n {
                values[r * n + j] = row[j] * inv;
            }
        }
        Tensor::make(m, n, values, self.requires_grad(), Op::L2NormalizeRows(self.clone(), eps))
    }

    /// Per-row layer normalization (no affine; apply gain/bias separately).
    pub fn layer_norm_rows(&self, eps: f64) -> Tensor {
        let (m, n) = (self.rows(), self.cols());
        let mut values = vec![0.0; m * n];
        for r in 0..m {
            let row = &self.values()[r * n..(r + 1) * n];
            let mean: f64 = row.iter().sum::<f64>() / n as f64;
            let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            for j in 0..n {
                values[r * n + j] = (row[j] - mean) * inv;
            }
        }
        Tensor::make(m, n, values, self.requires_grad(), Op::LayerNormRows(self.clone(), eps))
    }

    /// Applies a precomputed dropout mask whose entries are 0 or 1/(1−p).
    pub fn dropout_mask(&self, mask: Vec<f64>) -> Result<Tensor> {
        if mask.len() != self.values().len() {
            return Err(Error::Shape("dropout mask length mismatch".into()));
        }
        let values = self.values().iter().zip(&mask).map(|(v, m)| v * m).collect();
        Ok(Tensor::make(
            self.rows(),
            self.cols(),
            values,
            self.requires_grad(),
            Op::Dropout(self.clone(), mask),
        ))
    }

    /// Clamps values to [lo, hi]; the gradient passes only inside the range.
    pub fn clip(&self, lo: f64, hi: f64) -> Tensor {
        let values = self.values().iter().map(|v| v.clamp(lo, hi)).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::Clip(self.clone(), lo, hi))
    }

    /// Replaces non-finite values with 0; the gradient is blocked there.
    pub fn sanitize(&self) -> Tensor {
        let values = self.values().iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
        Tensor::make(self.rows(), self.cols(), values, self.requires_grad(), Op::Sanitize(self.clone()))
    }

    pub fn index_scalar(&self, idx: usize) -> Result<Tensor> {
        if idx >= self.values().len() {
            return Err(Error::Shape(format!(
                "index {idx} out of bounds for {} values",
                self.values().len()
            )));
        }
        Ok(Tensor::make(
            1,
            1,
            vec![self.values()[idx]],
            self.requires_grad(),
            Op::IndexScalar(self.clone(), idx),
        ))
    }

    /// Concatenates scalar tensors into a [1, n] row.
    pub fn concat_scalars(items: &[Tensor]) -> Result<Tensor> {
        if items.is_empty() {
            return Err(Error::Shape("concat of zero scalars".into()));
        }
        let mut values = Vec::with_capacity(items.len());
        let mut requires = false;
        for t in items {
            if t.values().len() != 1 {
                return Err(Error::Shape("concat_scalars expects scalars".into()));
            }
            values.push(t.values()[0]);
            requires |= t.requires_grad();
        }
        Ok(Tensor::make(1, values.len(), values, requires, Op::ConcatScalars(items.to_vec())))
    }

    /// Copies columns [start, start+len) into a new [rows, len] tensor.
    pub fn slice_cols(&self, start: usize, len: usize) -> Result<Tensor> {
        if start + len > self.cols() {
            return Err(Error::Shape(format!(
                "slice_cols [{start}, {}) out of {} columns",
                start + len,
                self.cols()
            )));
        }
        let (m, n) = (self.rows(), self.cols());
        let mut values = Vec::with_capacity(m * len);
        for r in 0..m {
            values.extend_from_slice(&self.values()[r * n + start..r * n + start + len]);
        }
        Ok(Tensor::make(
            m,
            len,
            values,
            self.requires_grad(),
            Op::SliceCols(self.clone(), start, len),
        ))
    }

    /// Concatenates two equal-row tensors along columns.
    pub fn concat_cols(&self, o: &Tensor) -> Result<Tensor> {
        if self.rows() != o.rows() {
            return Err(Error::Shape("concat_cols row mismatch".into()));
        }
        let (m, n1, n2) = (self.rows(), self.cols(), o.cols());
        let mut values = Vec::with_capacity(m * (n1 + n2));
        for r in 0..m {
            values.extend_from_slice(&self.values()[r * n1..(r + 1) * n1]);
            values.extend_from_slice(&o.values()[r * n2..(r + 1) * n2]);
        }
        Ok(Tensor::make(
            m,
            n1 + n2,
            values,
            self.requires_grad() || o.requires_grad(),
            Op::ConcatCols(self.clone(), o.clone()),
        ))
    }
}

/// C += A·B with A [m,k], B [k,n]; j-inner loop for vectorization.
fn matmul_ikj(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for t in 0..k {
            let av = a[i * k + t];
            if av == 0.0 {
                continue;
            }
            let brow = &b[t * n..(t + 1) * n];
            for j in 0..n {
                crow[j] += av * brow[j];
            }
        }
    }
}

fn accumulate(node: &Tensor, delta: &[f64]) {
    if !node.0.requires_grad {
        return;
    }
    let mut slot = node.0.grad.borrow_mut();
    match slot.as_mut() {
        Some(g) => {
            for (gi, di) in g.iter_mut().zip(delta) {
                *gi += di;
            }
        }
        None => *slot = Some(delta.to_vec()),
    }
}

fn collect_nodes(root: &Tensor, seen: &mut BTreeMap<u64, Tensor>) {
    if seen.contains_key(&root.0.id) || !root.0.requires_grad {
        return;
    }
    seen.insert(root.0.id, root.clone());
    let mut visit = |t: &Tensor| collect_nodes(t, seen);
    match &root.0.op {
        Op::Leaf { .. } => {}
        Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Matmul(a, b)
        | Op::MatmulTransB(a, b) | Op::AddRowVec(a, b) | Op::MulRowVec(a, b)
        | Op::ConcatCols(a, b) => {
            visit(a);
            visit(b);
        }
        Op::Scale(a, _)
        | Op::SoftmaxRows(a)
        | Op::LeakyRelu(a, _)
        | Op::Exp(a)
        | Op::Ln(a)
        | Op::SumAll(a)
        | Op::MeanRowsMasked(a, _)
        | Op::L2NormalizeRows(a, _)
        | Op::LayerNormRows(a, _)
        | Op::Dropout(a, _)
        | Op::Clip(a, _, _)
        | Op::Sanitize(a)
        | Op::IndexScalar(a, _)
        | Op::SliceCols(a, _, _) => visit(a),
        Op::ConcatScalars(items) => {
            for t in items {
                visit(t);
            }
        }
    }
}

/// Reverse accumulation from a scalar loss; returns gradients of every named
/// parameter leaf reachable from the loss.
pub fn backward(loss: &Tensor) -> Result<GradMap> {
    if loss.values().len() != 1 {
        return Err(Error::Shape(format!(
            "backward expects a scalar loss, got [{},{}]",
            loss.rows(),
            loss.cols()
        )));
    }
    let mut nodes: BTreeMap<u64, Tensor> = BTreeMap::new();
    collect_nodes(loss, &mut nodes);
    if !loss.0.requires_grad {
        return Ok(GradMap::new());
    }
    *loss.0.grad.borrow_mut() = Some(vec![1.0]);

    let mut grads = GradMap::new();
    // Construction ids are monotone within a graph: descending id order is a
    // valid reverse topological order.
    for (_, node) in nodes.iter().rev() {
        let grad = match node.0.grad.borrow_mut().take() {
            Some(g) => g,
            None => continue, // not on a path that influenced the loss
        };
        match &node.0.op {
            Op::Leaf { name } => {
                if let Some(n) = name {
                    grads
                        .entry(n.clone())
                        .and_modify(|g| {
                            for (gi, di) in g.iter_mut().zip(&grad) {
                                *gi += di;
                            }
                        })
                        .or_insert(grad);
                }
            }
            Op::Add(a, b) => {
                accumulate(a, &grad);
                accumulate(b, &grad);
            }
            Op::Sub(a, b) => {
                accumulate(a, &grad);
                let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
                accumulate(b, &neg);
            }
            Op::Mul(a, b) => {
                if a.0.requires_grad {
                    let da: Vec<f64> = grad.iter().zip(b.values()).map(|(g, v)| g * v).collect();
                    accumulate(a, &da);
                }
                if b.0.requires_grad {
                    let db: Vec<f64> = grad.iter().zip(a.values()).map(|(g, v)| g * v).collect();
                    accumulate(b, &db);
                }
            }
            Op::AddRowVec(a, v) => {
                accumulate(a, &grad);
                if v.0.requires_grad {
                    let d = a.cols();
                    let mut dv = vec![0.0; d];
                    for r in 0..a.rows() {
                        for c in 0..d {
                            dv[c] += grad[r * d + c];
                        }
                    }
                    accumulate(v, &dv);
                }
            }
            Op::MulRowVec(a, v) => {
                let d = a.cols();
                if a.0.requires_grad {
                    let mut da = vec![0.0; a.values().len()];
                    for r in 0..a.rows() {
                        for c in 0..d {
                            da[r * d + c] = grad[r * d + c] * v.values()[c];
                        }
                    }
                    accumulate(a, &da);
                }
                if v.0.requires_grad {
                    let mut dv = vec![0.0; d];
                    for r in 0..a.rows() {
                        for c in 0..d {
                            dv[c] += grad[r * d + c] * a.values()[r * d + c];
                        }
                    }
                    accumulate(v, &dv);
                }
            }
            Op::Scale(a, c) => {
                let da: Vec<f64> = grad.iter().map(|g| g * c).collect();
                accumulate(a, &da);
            }
            Op::Matmul(a, b) => {
                let (m, k, n) = (a.rows(), a.cols(), b.cols());
                if a.0.requires_grad {
                    // dA = dC · Bᵀ
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        let grow = &grad[i * n..(i + 1) * n];
                        let darow = &mut da[i * k..(i + 1) * k];
                        for t in 0..k {
                            let brow = &b.values()[t * n..(t + 1) * n];
                            let mut s = 0.0;
                            for j in 0..n {
                                s += grow[j] * brow[j];
                            }
                            darow[t] = s;
                        }
                    }
                    accumulate(a, &da);
                }
                if b.0.requires_grad {
                    // dB = Aᵀ · dC
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        let grow = &grad[i * n..(i + 1) * n];
                        for t in 0..k {
                            let av = a.values()[i * k + t];
                            if av == 0.0 {
                                continue;
                            }
                            let dbrow = &mut db[t * n..(t + 1) * n];
                            for j in 0..n {
                                dbrow[j] += av * grow[j];
                            }
                        }
                    }
                    accumulate(b, &db);
                }
            }
            Op::MatmulTransB(a, b) => {
                // C = A·Bᵀ, A [m,k], B [n,k], C [m,n]
                let (m, k, n) = (a.rows(), a.cols(), b.rows());
                if a.0.requires_grad {
                    // dA = dC · B
                    let mut da = vec![0.0; m * k];
                    matmul_ikj(&grad, b.values(), &mut da, m, n, k);
                    accumulate(a, &da);
                }
                if b.0.requires_grad {
                    // dB = dCᵀ · A
                    let mut db = vec![0.0; n * k];
                    for i in 0..m {
                        let arow = &a.values()[i * k..(i + 1) * k];
                        for j in 0..n {
                            let g = grad[i * n + j];
                            if g == 0.0 {
                                continue;
                            }
                            let dbrow = &mut db[j * k..(j + 1) * k];
                            for t in 0..k {
                                dbrow[t] += g * arow[t];
                            }
                        }
                    }
                    accumulate(b, &db);
                }
            }
            Op::SoftmaxRows(a) => {
                let (m, n) = (node.0.rows, node.0.cols);
                let y = &node.0.values;
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    let yrow = &y[r * n..(r + 1) * n];
                    let grow = &grad[r * n..(r + 1) * n];
                    let dot: f64 = yrow.iter().zip(grow).map(|(yv, gv)| yv * gv).sum();
                    for j in 0..n {
                        da[r * n + j] = yrow[j] * (grow[j] - dot);
                    }
                }
                accumulate(a, &da);
            }
            Op::LeakyRelu(a, slope) => {
                let da: Vec<f64> = grad
                    .iter()
                    .zip(a.values())
                    .map(|(g, x)| if *x > 0.0 { *g } else { g * slope })
                    .collect();
                accumulate(a, &da);
            }
            Op::Exp(a) => {
                let da: Vec<f64> = grad.iter().zip(&node.0.values).map(|(g, y)| g * y).collect();
                accumulate(a, &da);
            }
            Op::Ln(a) => {
                let da: Vec<f64> = grad.iter().zip(a.values()).map(|(g, x)| g / x).collect();
                accumulate(a, &da);
            }
            Op::SumAll(a) => {
                let da = vec![grad[0]; a.values().len()];
                accumulate(a, &da);
            }
            Op::MeanRowsMasked(a, mask) => {
                let d = a.cols();
                let total: f64 = mask.iter().sum();
                let mut da = vec![0.0; a.values().len()];
                if total > 0.0 {
                    let inv = 1.0 / total;
                    for (r, m) in mask.iter().enumerate() {
                        if *m != 0.0 {
                            for c in 0..d {
                                da[r * d + c] = grad[c] * m * inv;
                            }
                        }
                    }
                }
                accumulate(a, &da);
            }
            Op::L2NormalizeRows(a, eps) => {
                let (m, n) = (a.rows(), a.cols());
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    let xrow = &a.values()[r * n..(r + 1) * n];
                    let yrow = &node.0.values[r * n..(r + 1) * n];
                    let grow = &grad[r * n..(r + 1) * n];
                    let norm: f64 = xrow.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > *eps {
                        let dot: f64 = yrow.iter().zip(grow).map(|(y, g)| y * g).sum();
                        let inv = 1.0 / norm;
                        for j in 0..n {
                            da[r * n + j] = (grow[j] - yrow[j] * dot) * inv;
                        }
                    } else {
                        let inv = 1.0 / eps;
                        for j in 0..n {
                            da[r * n + j] = grow[j] * inv;
                        }
                    }
                }
                accumulate(a, &da);
            }
            Op::LayerNormRows(a, eps) => {
                let (m, n) = (a.rows(), a.cols());
                let nf = n as f64;
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    let xrow = &a.values()[r * n..(r + 1) * n];
                    let yrow = &node.0.values[r * n..(r + 1) * n];
                    let grow = &grad[r * n..(r + 1) * n];
                    let mean: f64 = xrow.iter().sum::<f64>() / nf;
                    let var: f64 = xrow.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / nf;
                    let inv = 1.0 / (var + eps).sqrt();
                    let gmean: f64 = grow.iter().sum::<f64>() / nf;
                    let gydot: f64 = grow.iter().zip(yrow).map(|(g, y)| g * y).sum::<f64>() / nf;
                    for j in 0..n {
                        da[r * n + j] = inv * (grow[j] - gmean - yrow[j] * gydot);
                    }
                }
                accumulate(a, &da);
            }
            Op::Dropout(a, mask) => {
                let da: Vec<f64> = grad.iter().zip(mask).map(|(g, m)| g * m).collect();
                accumulate(a, &da);
            }
            Op::Clip(a, lo, hi) => {
                let da: Vec<f64> = grad
                    .iter()
                    .zip(a.values())
                    .map(|(g, x)| if *x >= *lo && *x <= *hi { *g } else { 0.0 })
                    .collect();
                accumulate(a, &da);
            }
            Op::Sanitize(a) => {
                let da: Vec<f64> = grad
                    .iter()
                    .zip(a.values())
                    .map(|(g, x)| if x.is_finite() { *g } else { 0.0 })
                    .collect();
                accumulate(a, &da);
            }
            Op::IndexScalar(a, idx) => {
                let mut da = vec![0.0; a.values().len()];
                da[*idx] = grad[0];
                accumulate(a, &da);
            }
            Op::ConcatScalars(items) => {
                for (i, t) in items.iter().enumerate() {
                    accumulate(t, &[grad[i]]);
                }
            }
            Op::ConcatCols(a, b) => {
                let (m, n1, n2) = (a.rows(), a.cols(), b.cols());
                if a.0.requires_grad {
                    let mut da = vec![0.0; m * n1];
                    for r in 0..m {
                        da[r * n1..(r + 1) * n1]
                            .copy_from_slice(&grad[r * (n1 + n2)..r * (n1 + n2) + n1]);
                    }
                    accumulate(a, &da);
                }
                if b.0.requires_grad {
                    let mut db = vec![0.0; m * n2];
                    for r in 0..m {
                        db[r * n2..(r + 1) * n2]
                            .copy_from_slice(&grad[r * (n1 + n2) + n1..(r + 1) * (n1 + n2)]);
                    }
                    accumulate(b, &db);
                }
            }
            Op::SliceCols(a, start, len) => {
                let (m, n) = (a.rows(), a.cols());
                let mut da = vec![0.0; m * n];
                for r in 0..m {
                    da[r * n + start..r * n + start + len]
                        .copy_from_slice(&grad[r * len..(r + 1) * len]);
                }
                accumulate(a, &da);
            }
        }
    }
    Ok(grads)
}
