//! Expression graphs over dense matrices with exact reverse-mode gradients.
//!
//! An [`ExprGraph`] is built once from named inputs and operations, then
//! evaluated against [`Bindings`]. Nodes can only reference nodes created
//! before them, so insertion order is a topological order and the backward
//! pass is a single reverse sweep.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::dense::{log_softmax_into, softmax_into};
use super::{AutodiffError, DenseMat, SparseMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Left operand of a sparse-dense product.
#[derive(Clone, Debug)]
pub enum SparseSource {
    /// Looked up in the bindings on every evaluation.
    Named(String),
    Fixed(Arc<SparseMat>),
}

#[derive(Clone, Debug)]
enum Op {
    Input(String),
    Const(Arc<DenseMat>),
    MatMul(NodeId, NodeId),
    SpMM(SparseSource, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    /// Adds a 1 x c row to every row.
    AddRow(NodeId, NodeId),
    Relu(NodeId),
    Softmax(NodeId),
    LogSoftmax(NodeId),
    Log(NodeId),
    Abs(NodeId),
    /// Column means over a subset of rows; 1 x c.
    MeanRows(NodeId, Arc<Vec<usize>>),
    SelectRows(NodeId, Arc<Vec<usize>>),
    Sum(NodeId),
    Concat(NodeId, NodeId),
    /// Per-row squared Euclidean distance; n x 1.
    SqDist(NodeId, NodeId),
    /// Per-row `1 - cos(a_i, b_i)`; n x 1.
    CosDist(NodeId, NodeId),
    /// Per-row `KL(softmax(p_i) || softmax(q_i))`; n x 1.
    Kl(NodeId, NodeId),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Const(_) => "const",
            Op::MatMul(..) => "matmul",
            Op::SpMM(..) => "spmm",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddRow(..) => "add_row",
            Op::Relu(_) => "relu",
            Op::Softmax(_) => "softmax",
            Op::LogSoftmax(_) => "log_softmax",
            Op::Log(_) => "log",
            Op::Abs(_) => "abs",
            Op::MeanRows(..) => "mean_rows",
            Op::SelectRows(..) => "select_rows",
            Op::Sum(_) => "sum",
            Op::Concat(..) => "concat",
            Op::SqDist(..) => "sq_dist",
            Op::CosDist(..) => "cos_dist",
            Op::Kl(..) => "kl",
        }
    }
}

/// Named dense and sparse values for one evaluation.
#[derive(Clone, Debug, Default)]
pub struct Bindings<'a> {
    dense: BTreeMap<String, &'a DenseMat>,
    sparse: BTreeMap<String, &'a SparseMat>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dense(mut self, name: impl Into<String>, value: &'a DenseMat) -> Self {
        self.dense.insert(name.into(), value);
        self
    }

    pub fn sparse(mut self, name: impl Into<String>, value: &'a SparseMat) -> Self {
        self.sparse.insert(name.into(), value);
        self
    }

    pub fn set_dense(&mut self, name: impl Into<String>, value: &'a DenseMat) {
        self.dense.insert(name.into(), value);
    }

    pub fn get_dense(&self, name: &str) -> Option<&'a DenseMat> {
        self.dense.get(name).copied()
    }

    pub fn dense_names(&self) -> impl Iterator<Item = &str> {
        self.dense.keys().map(String::as_str)
    }
}

/// Forward values of every node from one evaluation.
#[derive(Debug)]
pub struct Evaluation {
    values: Vec<DenseMat>,
}

impl Evaluation {
    pub fn value(&self, node: NodeId) -> &DenseMat {
        &self.values[node.0]
    }
}

/// Result of a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub value: f64,
    pub grads: BTreeMap<String, DenseMat>,
}

impl Gradients {
    pub fn get(&self, name: &str) -> Option<&DenseMat> {
        self.grads.get(name)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExprGraph {
    nodes: Vec<Op>,
    inputs: BTreeMap<String, NodeId>,
    root: Option<NodeId>,
}

impl ExprGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op) -> NodeId {
        let check = |id: &NodeId| assert!(id.0 < self.nodes.len(), "operand from another graph");
        match &op {
            Op::Input(_) | Op::Const(_) => {}
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::Concat(a, b)
            | Op::SqDist(a, b)
            | Op::CosDist(a, b)
            | Op::Kl(a, b) => {
                check(a);
                check(b);
            }
            Op::SpMM(_, a)
            | Op::Scale(a, _)
            | Op::Relu(a)
            | Op::Softmax(a)
            | Op::LogSoftmax(a)
            | Op::Log(a)
            | Op::Abs(a)
            | Op::MeanRows(a, _)
            | Op::SelectRows(a, _)
            | Op::Sum(a) => check(a),
        }
        self.nodes.push(op);
        NodeId(self.nodes.len() - 1)
    }

    /// Named dense input. Asking for the same name twice returns the same node.
    pub fn input(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.inputs.get(name) {
            return id;
        }
        let id = self.push(Op::Input(name.to_string()));
        self.inputs.insert(name.to_string(), id);
        id
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.keys().map(String::as_str)
    }

    pub fn constant(&mut self, value: DenseMat) -> NodeId {
        self.push(Op::Const(Arc::new(value)))
    }

    pub fn constant_shared(&mut self, value: Arc<DenseMat>) -> NodeId {
        self.push(Op::Const(value))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::MatMul(a, b))
    }

    pub fn spmm(&mut self, s: SparseSource, x: NodeId) -> NodeId {
        self.push(Op::SpMM(s, x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        self.push(Op::Scale(a, s))
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        self.push(Op::AddRow(a, row))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Relu(a))
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: NodeId) -> NodeId {
        self.push(Op::LogSoftmax(a))
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Log(a))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Abs(a))
    }

    pub fn mean_rows(&mut self, a: NodeId, rows: Arc<Vec<usize>>) -> NodeId {
        self.push(Op::MeanRows(a, rows))
    }

    pub fn select_rows(&mut self, a: NodeId, rows: Arc<Vec<usize>>) -> NodeId {
        self.push(Op::SelectRows(a, rows))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        self.push(Op::Sum(a))
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::Concat(a, b))
    }

    pub fn sq_dist(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::SqDist(a, b))
    }

    pub fn cos_dist(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Op::CosDist(a, b))
    }

    pub fn kl(&mut self, p_logits: NodeId, q_logits: NodeId) -> NodeId {
        self.push(Op::Kl(p_logits, q_logits))
    }

    pub fn set_root(&mut self, node: NodeId) {
        self.root = Some(node);
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    /// Value at the root.
    pub fn forward(&self, bindings: &Bindings<'_>) -> Result<DenseMat, AutodiffError> {
        let root = self.root.ok_or(AutodiffError::NoRoot)?;
        let mut eval = self.evaluate(bindings)?;
        Ok(eval.values.swap_remove(root.0))
    }

    /// Evaluates every node.
    pub fn evaluate(&self, bindings: &Bindings<'_>) -> Result<Evaluation, AutodiffError> {
        let mut values: Vec<DenseMat> = Vec::with_capacity(self.nodes.len());
        for (idx, op) in self.nodes.iter().enumerate() {
            let v = self.eval_node(idx, op, &values, bindings)?;
            if !v.is_finite() {
                return Err(AutodiffError::NonFiniteValue { node: idx, op: op.name() });
            }
            values.push(v);
        }
        Ok(Evaluation { values })
    }

    fn resolve_sparse<'b>(
        &'b self,
        src: &'b SparseSource,
        bindings: &Bindings<'b>,
    ) -> Result<&'b SparseMat, AutodiffError> {
        match src {
            SparseSource::Named(name) => {
                bindings.sparse.get(name).copied().ok_or_else(|| AutodiffError::Unbound(name.clone()))
            }
            SparseSource::Fixed(m) => Ok(m),
        }
    }

    fn eval_node(
        &self,
        idx: usize,
        op: &Op,
        vals: &[DenseMat],
        bindings: &Bindings<'_>,
    ) -> Result<DenseMat, AutodiffError> {
        let shape_err = |detail: String| AutodiffError::ShapeMismatch { node: idx, op: op.name(), detail };
        let same_shape = |a: &DenseMat, b: &DenseMat| -> Result<(), AutodiffError> {
            if a.shape() == b.shape() {
                Ok(())
            } else {
                Err(shape_err(format!("{:?} vs {:?}", a.shape(), b.shape())))
            }
        };
        let check_rows = |a: &DenseMat, rows: &[usize]| -> Result<(), AutodiffError> {
            match rows.iter().find(|&&r| r >= a.rows()) {
                Some(r) => Err(shape_err(format!("row index {r} out of range for {} rows", a.rows()))),
                None => Ok(()),
            }
        };
        Ok(match op {
            Op::Input(name) => {
                let v = bindings.get_dense(name).ok_or_else(|| AutodiffError::Unbound(name.clone()))?;
                if !v.is_finite() {
                    return Err(AutodiffError::NonFiniteInput(name.clone()));
                }
                v.clone()
            }
            Op::Const(m) => {
                if !m.is_finite() {
                    return Err(AutodiffError::NonFiniteInput(format!("constant node {idx}")));
                }
                (**m).clone()
            }
            Op::MatMul(a, b) => {
                let (a, b) = (&vals[a.0], &vals[b.0]);
                if a.cols() != b.rows() {
                    return Err(shape_err(format!("{:?} * {:?}", a.shape(), b.shape())));
                }
                a.matmul(b)?
            }
            Op::SpMM(src, x) => {
                let s = self.resolve_sparse(src, bindings)?;
                let x = &vals[x.0];
                if s.cols() != x.rows() {
                    return Err(shape_err(format!("sparse {}x{} * {:?}", s.rows(), s.cols(), x.shape())));
                }
                s.matmul_dense(x)?
            }
            Op::Add(a, b) => {
                same_shape(&vals[a.0], &vals[b.0])?;
                vals[a.0].zip_map(&vals[b.0], |x, y| x + y)
            }
            Op::Sub(a, b) => {
                same_shape(&vals[a.0], &vals[b.0])?;
                vals[a.0].zip_map(&vals[b.0], |x, y| x - y)
            }
            Op::Mul(a, b) => {
                same_shape(&vals[a.0], &vals[b.0])?;
                vals[a.0].zip_map(&vals[b.0], |x, y| x * y)
            }
            Op::Scale(a, s) => vals[a.0].scale(*s),
            Op::AddRow(a, row) => {
                let (a, row) = (&vals[a.0], &vals[row.0]);
                if row.rows() != 1 || row.cols() != a.cols() {
                    return Err(shape_err(format!("row {:?} onto {:?}", row.shape(), a.shape())));
                }
                let mut out = a.clone();
                for r in 0..out.rows() {
                    for (o, b) in out.row_mut(r).iter_mut().zip(row.data()) {
                        *o += b;
                    }
                }
                out
            }
            Op::Relu(a) => vals[a.0].map(|v| if v > 0.0 { v } else { 0.0 }),
            Op::Softmax(a) => vals[a.0].row_softmax(),
            Op::LogSoftmax(a) => vals[a.0].row_log_softmax(),
            Op::Log(a) => vals[a.0].map(f64::ln),
            Op::Abs(a) => vals[a.0].map(f64::abs),
            Op::MeanRows(a, rows) => {
                let a = &vals[a.0];
                if rows.is_empty() {
                    return Err(shape_err("mean over an empty row set".into()));
                }
                check_rows(a, rows)?;
                let mut out = DenseMat::zeros(1, a.cols());
                for &r in rows.iter() {
                    for (o, v) in out.data_mut().iter_mut().zip(a.row(r)) {
                        *o += v;
                    }
                }
                out.scale(1.0 / rows.len() as f64)
            }
            Op::SelectRows(a, rows) => {
                check_rows(&vals[a.0], rows)?;
                vals[a.0].select_rows(rows)
            }
            Op::Sum(a) => DenseMat::scalar(vals[a.0].sum()),
            Op::Concat(a, b) => {
                let (a, b) = (&vals[a.0], &vals[b.0]);
                if a.rows() != b.rows() {
                    return Err(shape_err(format!("{:?} beside {:?}", a.shape(), b.shape())));
                }
                a.hconcat(b)?
            }
            Op::SqDist(a, b) => {
                same_shape(&vals[a.0], &vals[b.0])?;
                let (a, b) = (&vals[a.0], &vals[b.0]);
                let mut out = DenseMat::zeros(a.rows(), 1);
                for r in 0..a.rows() {
                    let d: f64 = a.row(r).iter().zip(b.row(r)).map(|(x, y)| (x - y) * (x - y)).sum();
                    out.set(r, 0, d);
                }
                out
            }
            Op::CosDist(a, b) => {
                same_shape(&vals[a.0], &vals[b.0])?;
                let (a, b) = (&vals[a.0], &vals[b.0]);
                let mut out = DenseMat::zeros(a.rows(), 1);
                for r in 0..a.rows() {
                    let stats = CosStats::of(a.row(r), b.row(r));
                    out.set(r, 0, 1.0 - stats.cos());
                }
                out
            }
            Op::Kl(p, q) => {
                same_shape(&vals[p.0], &vals[q.0])?;
                let (p, q) = (&vals[p.0], &vals[q.0]);
                let c = p.cols();
                let mut out = DenseMat::zeros(p.rows(), 1);
                let (mut lp, mut lq) = (vec![0.0; c], vec![0.0; c]);
                for r in 0..p.rows() {
                    log_softmax_into(p.row(r), &mut lp);
                    log_softmax_into(q.row(r), &mut lq);
                    let kl: f64 = lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum();
                    out.set(r, 0, kl);
                }
                out
            }
        })
    }

    /// Gradient of the scalar root with respect to every named dense input.
    /// Inputs that do not reach the root get a zero matrix. Sparse operands
    /// are treated as constants.
    pub fn backward(&self, bindings: &Bindings<'_>) -> Result<Gradients, AutodiffError> {
        let root = self.root.ok_or(AutodiffError::NoRoot)?;
        let eval = self.evaluate(bindings)?;
        self.backward_from(&eval, root, bindings)
    }

    /// Backward pass reusing an existing evaluation.
    pub fn backward_from(
        &self,
        eval: &Evaluation,
        root: NodeId,
        bindings: &Bindings<'_>,
    ) -> Result<Gradients, AutodiffError> {
        let vals = &eval.values;
        let root_val = &vals[root.0];
        let value = root_val
            .as_scalar()
            .ok_or(AutodiffError::NonScalarRoot { rows: root_val.rows(), cols: root_val.cols() })?;

        let mut grads: Vec<Option<DenseMat>> = vec![None; root.0 + 1];
        grads[root.0] = Some(DenseMat::scalar(1.0));

        fn acc(slot: &mut Option<DenseMat>, g: DenseMat) {
            match slot {
                Some(existing) => existing.add_assign(&g),
                None => *slot = Some(g),
            }
        }

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let op = &self.nodes[idx];
            match op {
                Op::Input(_) | Op::Const(_) => {
                    grads[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(&vals[b.0])?;
                    let gb = vals[a.0].t_matmul(&g)?;
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::SpMM(src, x) => {
                    let s = self.resolve_sparse(src, bindings)?;
                    acc(&mut grads[x.0], s.t_matmul_dense(&g)?);
                }
                Op::Add(a, b) => {
                    acc(&mut grads[a.0], g.clone());
                    acc(&mut grads[b.0], g);
                }
                Op::Sub(a, b) => {
                    acc(&mut grads[b.0], g.scale(-1.0));
                    acc(&mut grads[a.0], g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(&vals[b.0], |x, y| x * y);
                    let gb = g.zip_map(&vals[a.0], |x, y| x * y);
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Scale(a, s) => acc(&mut grads[a.0], g.scale(*s)),
                Op::AddRow(a, row) => {
                    acc(&mut grads[row.0], g.column_means().scale(g.rows() as f64));
                    acc(&mut grads[a.0], g);
                }
                Op::Relu(a) => {
                    let ga = g.zip_map(&vals[a.0], |gv, x| if x > 0.0 { gv } else { 0.0 });
                    acc(&mut grads[a.0], ga);
                }
                Op::Softmax(a) => {
                    let p = &vals[idx];
                    let mut ga = DenseMat::zeros(p.rows(), p.cols());
                    for r in 0..p.rows() {
                        let (pr, gr) = (p.row(r), g.row(r));
                        let dot: f64 = pr.iter().zip(gr).map(|(x, y)| x * y).sum();
                        for ((o, &pv), &gv) in ga.row_mut(r).iter_mut().zip(pr).zip(gr) {
                            *o = pv * (gv - dot);
                        }
                    }
                    acc(&mut grads[a.0], ga);
                }
                Op::LogSoftmax(a) => {
                    let ls = &vals[idx];
                    let mut ga = DenseMat::zeros(ls.rows(), ls.cols());
                    for r in 0..ls.rows() {
                        let gr = g.row(r);
                        let total: f64 = gr.iter().sum();
                        for ((o, &l), &gv) in ga.row_mut(r).iter_mut().zip(ls.row(r)).zip(gr) {
                            *o = gv - l.exp() * total;
                        }
                    }
                    acc(&mut grads[a.0], ga);
                }
                Op::Log(a) => acc(&mut grads[a.0], g.zip_map(&vals[a.0], |gv, x| gv / x)),
                Op::Abs(a) => {
                    let ga = g.zip_map(&vals[a.0], |gv, x| {
                        if x > 0.0 {
                            gv
                        } else if x < 0.0 {
                            -gv
                        } else {
                            0.0
                        }
                    });
                    acc(&mut grads[a.0], ga);
                }
                Op::MeanRows(a, rows) => {
                    let src = &vals[a.0];
                    let mut ga = DenseMat::zeros(src.rows(), src.cols());
                    let inv = 1.0 / rows.len() as f64;
                    for &r in rows.iter() {
                        for (o, gv) in ga.row_mut(r).iter_mut().zip(g.data()) {
                            *o += gv * inv;
                        }
                    }
                    acc(&mut grads[a.0], ga);
                }
                Op::SelectRows(a, rows) => {
                    let src = &vals[a.0];
                    let mut ga = DenseMat::zeros(src.rows(), src.cols());
                    for (k, &r) in rows.iter().enumerate() {
                        for (o, gv) in ga.row_mut(r).iter_mut().zip(g.row(k)) {
                            *o += gv;
                        }
                    }
                    acc(&mut grads[a.0], ga);
                }
                Op::Sum(a) => {
                    let (r, c) = vals[a.0].shape();
                    acc(&mut grads[a.0], DenseMat::filled(r, c, g.data()[0]));
                }
                Op::Concat(a, b) => {
                    let ca = vals[a.0].cols();
                    let cb = vals[b.0].cols();
                    let mut ga = DenseMat::zeros(g.rows(), ca);
                    let mut gb = DenseMat::zeros(g.rows(), cb);
                    for r in 0..g.rows() {
                        let row = g.row(r);
                        ga.row_mut(r).copy_from_slice(&row[..ca]);
                        gb.row_mut(r).copy_from_slice(&row[ca..]);
                    }
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::SqDist(a, b) => {
                    let (av, bv) = (&vals[a.0], &vals[b.0]);
                    let mut ga = DenseMat::zeros(av.rows(), av.cols());
                    for r in 0..av.rows() {
                        let s = 2.0 * g.get(r, 0);
                        for ((o, x), y) in ga.row_mut(r).iter_mut().zip(av.row(r)).zip(bv.row(r)) {
                            *o = s * (x - y);
                        }
                    }
                    acc(&mut grads[b.0], ga.scale(-1.0));
                    acc(&mut grads[a.0], ga);
                }
                Op::CosDist(a, b) => {
                    let (av, bv) = (&vals[a.0], &vals[b.0]);
                    let mut ga = DenseMat::zeros(av.rows(), av.cols());
                    let mut gb = DenseMat::zeros(av.rows(), av.cols());
                    for r in 0..av.rows() {
                        let (x, y) = (av.row(r), bv.row(r));
                        let st = CosStats::of(x, y);
                        if st.na == 0.0 || st.nb == 0.0 {
                            continue;
                        }
                        let gr = -g.get(r, 0);
                        let inv = 1.0 / (st.na * st.nb);
                        let cos = st.cos();
                        for (k, (o_a, o_b)) in ga.row_mut(r).iter_mut().zip(gb.row_mut(r)).enumerate() {
                            *o_a = gr * (y[k] * inv - cos * x[k] / (st.na * st.na));
                            *o_b = gr * (x[k] * inv - cos * y[k] / (st.nb * st.nb));
                        }
                    }
                    acc(&mut grads[a.0], ga);
                    acc(&mut grads[b.0], gb);
                }
                Op::Kl(p, q) => {
                    let (pv, qv) = (&vals[p.0], &vals[q.0]);
                    let c = pv.cols();
                    let mut gp = DenseMat::zeros(pv.rows(), c);
                    let mut gq = DenseMat::zeros(pv.rows(), c);
                    let (mut lp, mut lq, mut sq) = (vec![0.0; c], vec![0.0; c], vec![0.0; c]);
                    for r in 0..pv.rows() {
                        log_softmax_into(pv.row(r), &mut lp);
                        log_softmax_into(qv.row(r), &mut lq);
                        softmax_into(qv.row(r), &mut sq);
                        let kl = vals[idx].get(r, 0);
                        let gr = g.get(r, 0);
                        for k in 0..c {
                            let pk = lp[k].exp();
                            gp.set(r, k, gr * pk * (lp[k] - lq[k] - kl));
                            gq.set(r, k, gr * (sq[k] - pk));
                        }
                    }
                    acc(&mut grads[p.0], gp);
                    acc(&mut grads[q.0], gq);
                }
            }
        }

        let mut out = BTreeMap::new();
        for (name, id) in &self.inputs {
            let g = match id.0 <= root.0 {
                true => grads[id.0].take(),
                false => None,
            };
            let g = match g {
                Some(g) => g,
                None => {
                    let v = bindings.get_dense(name).ok_or_else(|| AutodiffError::Unbound(name.clone()))?;
                    DenseMat::zeros(v.rows(), v.cols())
                }
            };
            out.insert(name.clone(), g);
        }
        Ok(Gradients { value, grads: out })
    }
}

struct CosStats {
    dot: f64,
    na: f64,
    nb: f64,
}

impl CosStats {
    fn of(a: &[f64], b: &[f64]) -> Self {
        let mut dot = 0.0;
        let mut sa = 0.0;
        let mut sb = 0.0;
        for (x, y) in a.iter().zip(b) {
            dot += x * y;
            sa += x * x;
            sb += y * y;
        }
        Self { dot, na: sa.sqrt(), nb: sb.sqrt() }
    }

    /// Zero vectors count as orthogonal.
    fn cos(&self) -> f64 {
        if self.na == 0.0 || self.nb == 0.0 {
            0.0
        } else {
            self.dot / (self.na * self.nb)
        }
    }
}
