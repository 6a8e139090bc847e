//! Reverse-mode tape over `f64` vectors and matrices.
//!
//! Nodes are evaluated eagerly as they are created; [`Tape::backward`]
//! walks the tape in reverse and accumulates parameter gradients into a
//! [`Grads`] buffer aligned with the backing [`ParamStore`].
//!
//! Shapes are `(rows, cols)`, row-major.  Column vectors are `(n, 1)` and
//! scalars `(1, 1)`.  Shape mismatches are programming errors and panic;
//! the model-level builders validate dimensions up front and return errors.

use crate::params::{BlockId, Grads, ParamStore};

/// Scores are clamped to `[BCE_EPS, 1 - BCE_EPS]` before the log loss.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    Constant,
    /// `n_rows` consecutive rows of a parameter block, starting at `row`.
    Param { block: BlockId, row: usize, n_rows: usize },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    AddConst(NodeId),
    MatVec(NodeId, NodeId),
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    ConcatVec(Vec<NodeId>),
    StackRows(Vec<NodeId>),
    ColsFromVecs(Vec<NodeId>),
    FlattenCols(NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    RowSoftmax(NodeId),
    RowRenorm(NodeId),
    Dot(NodeId, NodeId),
    SumList(Vec<NodeId>),
    MaxList(Vec<NodeId>),
    /// scalar * tensor
    BroadcastMul(NodeId, NodeId),
    /// Binary cross-entropy of `sigmoid(logit)` against a constant label.
    BceWithLogit { logit: NodeId, label: f64 },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    /// Empty for `Param` nodes; their values live in the store.
    value: Vec<f64>,
}

pub struct Tape<'a> {
    store: &'a ParamStore,
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'a> Tape<'a> {
    pub fn new(store: &'a ParamStore) -> Self {
        Tape { store, nodes: Vec::with_capacity(256) }
    }

    pub fn store(&self) -> &ParamStore {
        self.store
    }

    pub fn rows(&self, id: NodeId) -> usize {
        self.nodes[id.0].rows
    }

    pub fn cols(&self, id: NodeId) -> usize {
        self.nodes[id.0].cols
    }

    pub fn len(&self, id: NodeId) -> usize {
        let n = &self.nodes[id.0];
        n.rows * n.cols
    }

    /// Node value as a flat row-major slice.
    pub fn value(&self, id: NodeId) -> &[f64] {
        let n = &self.nodes[id.0];
        match n.op {
            Op::Param { block, row, n_rows } => {
                let b = self.store.block(block);
                &b.value[row * b.cols..(row + n_rows) * b.cols]
            }
            _ => &n.value,
        }
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let n = &self.nodes[id.0];
        assert_eq!((n.rows, n.cols), (1, 1), "scalar() on non-scalar node");
        self.value(id)[0]
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node { op, rows, cols, value });
        NodeId(self.nodes.len() - 1)
    }

    // ─── Leaves ───

    pub fn constant(&mut self, rows: usize, cols: usize, value: Vec<f64>) -> NodeId {
        assert_eq!(value.len(), rows * cols, "constant value length");
        self.push(Op::Constant, rows, cols, value)
    }

    pub fn const_vec(&mut self, value: &[f64]) -> NodeId {
        self.constant(value.len(), 1, value.to_vec())
    }

    pub fn const_scalar(&mut self, x: f64) -> NodeId {
        self.constant(1, 1, vec![x])
    }

    pub fn zeros(&mut self, n: usize) -> NodeId {
        self.constant(n, 1, vec![0.0; n])
    }

    /// Whole parameter block, with the block's shape.
    pub fn param(&mut self, block: BlockId) -> NodeId {
        let b = self.store.block(block);
        let (rows, cols) = (b.rows, b.cols);
        self.push(Op::Param { block, row: 0, n_rows: rows }, rows, cols, Vec::new())
    }

    /// One row of a parameter block, as a column vector.
    pub fn param_row(&mut self, block: BlockId, row: usize) -> NodeId {
        let b = self.store.block(block);
        assert!(row < b.rows, "row {row} out of range for block '{}'", b.name);
        let cols = b.cols;
        self.push(Op::Param { block, row, n_rows: 1 }, cols, 1, Vec::new())
    }

    /// Detached copy of a node's current value (no gradient flows back).
    pub fn detach(&mut self, id: NodeId) -> NodeId {
        let (rows, cols) = (self.rows(id), self.cols(id));
        let value = self.value(id).to_vec();
        self.push(Op::Constant, rows, cols, value)
    }

    // ─── Elementwise and scalar arithmetic ───

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    fn binary_same_shape(
        &mut self,
        a: NodeId,
        b: NodeId,
        what: &str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> NodeId {
        let (ra, ca) = (self.rows(a), self.cols(a));
        let (rb, cb) = (self.rows(b), self.cols(b));
        assert_eq!((ra, ca), (rb, cb), "{what}: shape mismatch {ra}x{ca} vs {rb}x{cb}");
        let value = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        self.push(op, ra, ca, value)
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let (r, c) = (self.rows(a), self.cols(a));
        let value = self.value(a).iter().map(|&x| x * k).collect();
        self.push(Op::Scale(a, k), r, c, value)
    }

    pub fn add_const(&mut self, a: NodeId, k: f64) -> NodeId {
        let (r, c) = (self.rows(a), self.cols(a));
        let value = self.value(a).iter().map(|&x| x + k).collect();
        self.push(Op::AddConst(a), r, c, value)
    }

    // ─── Linear algebra ───

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let (m, n) = (self.rows(w), self.cols(w));
        assert_eq!(
            (self.rows(x), self.cols(x)),
            (n, 1),
            "matvec: {m}x{n} times {}x{}",
            self.rows(x),
            self.cols(x)
        );
        let mut out = vec![0.0; m];
        {
            let wv = self.value(w);
            let xv = self.value(x);
            for i in 0..m {
                let row = &wv[i * n..(i + 1) * n];
                out[i] = row.iter().zip(xv).map(|(&a, &b)| a * b).sum();
            }
        }
        self.push(Op::MatVec(w, x), m, 1, out)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (m, n) = (self.rows(a), self.cols(a));
        let (n2, p) = (self.rows(b), self.cols(b));
        assert_eq!(n, n2, "matmul: {m}x{n} times {n2}x{p}");
        let mut out = vec![0.0; m * p];
        {
            let av = self.value(a);
            let bv = self.value(b);
            for i in 0..m {
                for k in 0..n {
                    let aik = av[i * n + k];
                    if aik == 0.0 {
                        continue;
                    }
                    for j in 0..p {
                        out[i * p + j] += aik * bv[k * p + j];
                    }
                }
            }
        }
        self.push(Op::MatMul(a, b), m, p, out)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let (m, n) = (self.rows(a), self.cols(a));
        let av = self.value(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av[i * n + j];
            }
        }
        self.push(Op::Transpose(a), n, m, out)
    }

    // ─── Structure ───

    pub fn concat_vec(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "concat_vec: empty input");
        let mut value = Vec::new();
        for &p in parts {
            assert_eq!(self.cols(p), 1, "concat_vec: inputs must be column vectors");
            value.extend_from_slice(self.value(p));
        }
        let n = value.len();
        self.push(Op::ConcatVec(parts.to_vec()), n, 1, value)
    }

    /// k length-n column vectors as the rows of a (k, n) matrix.
    pub fn stack_rows(&mut self, rows: &[NodeId]) -> NodeId {
        assert!(!rows.is_empty(), "stack_rows: empty input");
        let n = self.rows(rows[0]);
        let mut value = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            assert_eq!((self.rows(r), self.cols(r)), (n, 1), "stack_rows: ragged input");
            value.extend_from_slice(self.value(r));
        }
        self.push(Op::StackRows(rows.to_vec()), rows.len(), n, value)
    }

    /// k length-d column vectors as the columns of a (d, k) matrix.
    pub fn cols_from_vecs(&mut self, cols: &[NodeId]) -> NodeId {
        assert!(!cols.is_empty(), "cols_from_vecs: empty input");
        let d = self.rows(cols[0]);
        let k = cols.len();
        let mut value = vec![0.0; d * k];
        for (c, &v) in cols.iter().enumerate() {
            assert_eq!((self.rows(v), self.cols(v)), (d, 1), "cols_from_vecs: ragged input");
            for (r, &x) in self.value(v).iter().enumerate() {
                value[r * k + c] = x;
            }
        }
        self.push(Op::ColsFromVecs(cols.to_vec()), d, k, value)
    }

    /// (d, k) matrix to a (d*k, 1) vector, columns concatenated in order.
    pub fn flatten_cols(&mut self, a: NodeId) -> NodeId {
        let (d, k) = (self.rows(a), self.cols(a));
        let av = self.value(a);
        let mut value = vec![0.0; d * k];
        for c in 0..k {
            for r in 0..d {
                value[c * d + r] = av[r * k + c];
            }
        }
        self.push(Op::FlattenCols(a), d * k, 1, value)
    }

    // ─── Nonlinearities ───

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let (r, c) = (self.rows(a), self.cols(a));
        let value = self.value(a).iter().map(|&x| x.max(0.0)).collect();
        self.push(Op::Relu(a), r, c, value)
    }

    pub fn sigmoid_node(&mut self, a: NodeId) -> NodeId {
        let (r, c) = (self.rows(a), self.cols(a));
        let value = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(Op::Sigmoid(a), r, c, value)
    }

    /// Softmax over each row of a matrix.
    pub fn row_softmax(&mut self, a: NodeId) -> NodeId {
        let (m, n) = (self.rows(a), self.cols(a));
        let av = self.value(a);
        let mut value = vec![0.0; m * n];
        for i in 0..m {
            let row = &av[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..n {
                let e = (row[j] - max).exp();
                value[i * n + j] = e;
                sum += e;
            }
            for j in 0..n {
                value[i * n + j] /= sum;
            }
        }
        self.push(Op::RowSoftmax(a), m, n, value)
    }

    /// Divides each row by its sum.  Rows must have a nonzero sum.
    pub fn row_renorm(&mut self, a: NodeId) -> NodeId {
        let (m, n) = (self.rows(a), self.cols(a));
        let av = self.value(a);
        let mut value = vec![0.0; m * n];
        for i in 0..m {
            let row = &av[i * n..(i + 1) * n];
            let sum: f64 = row.iter().sum();
            assert!(sum != 0.0, "row_renorm: zero row sum");
            for j in 0..n {
                value[i * n + j] = row[j] / sum;
            }
        }
        self.push(Op::RowRenorm(a), m, n, value)
    }

    // ─── Reductions ───

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let n = self.len(a);
        assert_eq!(n, self.len(b), "dot: length mismatch");
        let value: f64 = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| x * y).sum();
        self.push(Op::Dot(a, b), 1, 1, vec![value])
    }

    pub fn sum_list(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "sum_list: empty input");
        let (r, c) = (self.rows(parts[0]), self.cols(parts[0]));
        let mut value = vec![0.0; r * c];
        for &p in parts {
            assert_eq!((self.rows(p), self.cols(p)), (r, c), "sum_list: ragged input");
            for (o, &x) in value.iter_mut().zip(self.value(p)) {
                *o += x;
            }
        }
        self.push(Op::SumList(parts.to_vec()), r, c, value)
    }

    /// Coordinate-wise maximum over a non-empty list of same-shape tensors.
    /// Ties route the gradient to the earliest input.
    pub fn max_list(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty(), "max_list: empty input");
        let (r, c) = (self.rows(parts[0]), self.cols(parts[0]));
        let mut value = self.value(parts[0]).to_vec();
        for &p in &parts[1..] {
            assert_eq!((self.rows(p), self.cols(p)), (r, c), "max_list: ragged input");
            for (o, &x) in value.iter_mut().zip(self.value(p)) {
                if x > *o {
                    *o = x;
                }
            }
        }
        self.push(Op::MaxList(parts.to_vec()), r, c, value)
    }

    /// scalar (1,1) times any tensor.
    pub fn broadcast_mul(&mut self, s: NodeId, a: NodeId) -> NodeId {
        assert_eq!((self.rows(s), self.cols(s)), (1, 1), "broadcast_mul: scalar expected");
        let k = self.value(s)[0];
        let (r, c) = (self.rows(a), self.cols(a));
        let value = self.value(a).iter().map(|&x| x * k).collect();
        self.push(Op::BroadcastMul(s, a), r, c, value)
    }

    /// `-(y ln p + (1-y) ln(1-p))` with `p = sigmoid(logit)` clamped to
    /// `[BCE_EPS, 1-BCE_EPS]`.
    pub fn bce_with_logit(&mut self, logit: NodeId, label: f64) -> NodeId {
        assert_eq!((self.rows(logit), self.cols(logit)), (1, 1), "bce_with_logit: scalar logit");
        assert!(label == 0.0 || label == 1.0, "bce_with_logit: label must be 0 or 1");
        let p = sigmoid(self.value(logit)[0]).clamp(BCE_EPS, 1.0 - BCE_EPS);
        let loss = -(label * p.ln() + (1.0 - label) * (1.0 - p).ln());
        self.push(Op::BceWithLogit { logit, label }, 1, 1, vec![loss])
    }

    // ─── Backward ───

    /// Accumulates d(root)/d(params) into `grads`.  `root` must be scalar.
    pub fn backward(&self, root: NodeId, grads: &mut Grads) {
        assert_eq!(
            (self.rows(root), self.cols(root)),
            (1, 1),
            "backward: root must be scalar"
        );
        assert_eq!(grads.by_block.len(), self.store.len(), "grads not aligned with store");
        let mut adj: Vec<Vec<f64>> = vec![Vec::new(); self.nodes.len()];
        adj[root.0] = vec![1.0];

        for idx in (0..=root.0).rev() {
            if adj[idx].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut adj[idx]);
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param { block, row, n_rows: _ } => {
                    let cols = self.store.block(*block).cols;
                    let dst = &mut grads.by_block[block.0];
                    let start = row * cols;
                    for (i, &gi) in g.iter().enumerate() {
                        dst[start + i] += gi;
                    }
                }
                Op::Add(a, b) => {
                    self.accum(&mut adj, *a, &g);
                    self.accum(&mut adj, *b, &g);
                }
                Op::Sub(a, b) => {
                    self.accum(&mut adj, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|&x| -x).collect();
                    self.accum(&mut adj, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let da: Vec<f64> = g.iter().zip(self.value(*b)).map(|(&gi, &bi)| gi * bi).collect();
                    let db: Vec<f64> = g.iter().zip(self.value(*a)).map(|(&gi, &ai)| gi * ai).collect();
                    self.accum(&mut adj, *a, &da);
                    self.accum(&mut adj, *b, &db);
                }
                Op::Scale(a, k) => {
                    let da: Vec<f64> = g.iter().map(|&x| x * k).collect();
                    self.accum(&mut adj, *a, &da);
                }
                Op::AddConst(a) => {
                    self.accum(&mut adj, *a, &g);
                }
                Op::MatVec(w, x) => {
                    let (m, n) = (self.rows(*w), self.cols(*w));
                    let wv = self.value(*w);
                    let xv = self.value(*x);
                    let mut dw = vec![0.0; m * n];
                    let mut dx = vec![0.0; n];
                    for i in 0..m {
                        let gi = g[i];
                        if gi == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            dw[i * n + j] += gi * xv[j];
                            dx[j] += gi * wv[i * n + j];
                        }
                    }
                    self.accum(&mut adj, *w, &dw);
                    self.accum(&mut adj, *x, &dx);
                }
                Op::MatMul(a, b) => {
                    let (m, n) = (self.rows(*a), self.cols(*a));
                    let p = self.cols(*b);
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let mut da = vec![0.0; m * n];
                    let mut db = vec![0.0; n * p];
                    for i in 0..m {
                        for j in 0..n {
                            let mut s = 0.0;
                            for k in 0..p {
                                s += g[i * p + k] * bv[j * p + k];
                            }
                            da[i * n + j] = s;
                        }
                    }
                    for j in 0..n {
                        for k in 0..p {
                            let mut s = 0.0;
                            for i in 0..m {
                                s += av[i * n + j] * g[i * p + k];
                            }
                            db[j * p + k] = s;
                        }
                    }
                    self.accum(&mut adj, *a, &da);
                    self.accum(&mut adj, *b, &db);
                }
                Op::Transpose(a) => {
                    let (m, n) = (self.rows(*a), self.cols(*a));
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] = g[j * m + i];
                        }
                    }
                    self.accum(&mut adj, *a, &da);
                }
                Op::ConcatVec(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.len(p);
                        self.accum(&mut adj, p, &g[off..off + n]);
                        off += n;
                    }
                }
                Op::StackRows(rows) => {
                    let n = node.cols;
                    for (i, &r) in rows.iter().enumerate() {
                        self.accum(&mut adj, r, &g[i * n..(i + 1) * n]);
                    }
                }
                Op::ColsFromVecs(cols) => {
                    let d = node.rows;
                    let k = node.cols;
                    for (c, &v) in cols.iter().enumerate() {
                        let dv: Vec<f64> = (0..d).map(|r| g[r * k + c]).collect();
                        self.accum(&mut adj, v, &dv);
                    }
                }
                Op::FlattenCols(a) => {
                    let (d, k) = (self.rows(*a), self.cols(*a));
                    let mut da = vec![0.0; d * k];
                    for c in 0..k {
                        for r in 0..d {
                            da[r * k + c] = g[c * d + r];
                        }
                    }
                    self.accum(&mut adj, *a, &da);
                }
                Op::Relu(a) => {
                    let da: Vec<f64> = g
                        .iter()
                        .zip(self.value(*a))
                        .map(|(&gi, &x)| if x > 0.0 { gi } else { 0.0 })
                        .collect();
                    self.accum(&mut adj, *a, &da);
                }
                Op::Sigmoid(a) => {
                    let da: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(&gi, &y)| gi * y * (1.0 - y))
                        .collect();
                    self.accum(&mut adj, *a, &da);
                }
                Op::RowSoftmax(a) => {
                    let (m, n) = (node.rows, node.cols);
                    let y = &node.value;
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        let yr = &y[i * n..(i + 1) * n];
                        let gr = &g[i * n..(i + 1) * n];
                        let dot: f64 = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for j in 0..n {
                            da[i * n + j] = yr[j] * (gr[j] - dot);
                        }
                    }
                    self.accum(&mut adj, *a, &da);
                }
                Op::RowRenorm(a) => {
                    let (m, n) = (node.rows, node.cols);
                    let y = &node.value;
                    let xv = self.value(*a);
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        let sum: f64 = xv[i * n..(i + 1) * n].iter().sum();
                        let yr = &y[i * n..(i + 1) * n];
                        let gr = &g[i * n..(i + 1) * n];
                        let dot: f64 = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                        for j in 0..n {
                            da[i * n + j] = (gr[j] - dot) / sum;
                        }
                    }
                    self.accum(&mut adj, *a, &da);
                }
                Op::Dot(a, b) => {
                    let gs = g[0];
                    let da: Vec<f64> = self.value(*b).iter().map(|&x| gs * x).collect();
                    let db: Vec<f64> = self.value(*a).iter().map(|&x| gs * x).collect();
                    self.accum(&mut adj, *a, &da);
                    self.accum(&mut adj, *b, &db);
                }
                Op::SumList(parts) => {
                    for &p in parts {
                        self.accum(&mut adj, p, &g);
                    }
                }
                Op::MaxList(parts) => {
                    let n = node.rows * node.cols;
                    let mut routed = vec![false; n];
                    // first input achieving the max wins each coordinate
                    for &p in parts {
                        let pv = self.value(p);
                        let mut dp = vec![0.0; n];
                        let mut any = false;
                        for i in 0..n {
                            if !routed[i] && pv[i] == node.value[i] {
                                routed[i] = true;
                                dp[i] = g[i];
                                any = true;
                            }
                        }
                        if any {
                            self.accum(&mut adj, p, &dp);
                        }
                    }
                }
                Op::BroadcastMul(s, a) => {
                    let k = self.value(*s)[0];
                    let ds: f64 = g.iter().zip(self.value(*a)).map(|(&gi, &ai)| gi * ai).sum();
                    let da: Vec<f64> = g.iter().map(|&gi| gi * k).collect();
                    self.accum(&mut adj, *s, &[ds]);
                    self.accum(&mut adj, *a, &da);
                }
                Op::BceWithLogit { logit, label } => {
                    let x = self.value(*logit)[0];
                    let p = sigmoid(x);
                    let d = if p < BCE_EPS || p > 1.0 - BCE_EPS {
                        0.0 // clamped: the loss is locally constant in the logit
                    } else {
                        p - label
                    };
                    self.accum(&mut adj, *logit, &[g[0] * d]);
                }
            }
        }
    }

    fn accum(&self, adj: &mut [Vec<f64>], id: NodeId, g: &[f64]) {
        let slot = &mut adj[id.0];
        if slot.is_empty() {
            *slot = g.to_vec();
        } else {
            for (o, &x) in slot.iter_mut().zip(g) {
                *o += x;
            }
        }
    }
}
