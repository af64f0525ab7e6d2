//! Reverse-mode differentiation over a linear tape of vector-valued nodes.

use crate::error::{Error, Result};
use crate::nn::params::{Grads, ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Const,
    Param(ParamId),
    /// matrix `(r, c)` times vector `c`
    MatVec(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Scale(Var, f64),
    Clamp(Var, f64, f64),
    Slice(Var, usize),
    Concat(Vec<Var>),
    Dot(Var, Var),
    Sum(Var),
    /// `log softmax(logits)[index]` over the unmasked entries
    LogSoftmaxPick(Var, Vec<bool>, usize),
}

struct Node {
    op: Op,
    /// Empty for parameter nodes, whose value lives in the store.
    value: Vec<f64>,
    shape: (usize, usize),
}

pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: Vec<Option<Var>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
            param_vars: vec![None; params.len()],
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Vec<f64>, shape: (usize, usize)) -> Var {
        self.nodes.push(Node { op, value, shape });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => &self.params.get(id).data,
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].shape
    }

    pub fn constant(&mut self, data: Vec<f64>) -> Var {
        let n = data.len();
        self.push(Op::Const, data, (n, 1))
    }

    pub fn scalar_const(&mut self, v: f64) -> Var {
        self.constant(vec![v])
    }

    /// One tape node per parameter, created on first use.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_vars[id.0] {
            return v;
        }
        let shape = self.params.get(id).shape;
        let v = self.push(Op::Param(id), Vec::new(), shape);
        self.param_vars[id.0] = Some(v);
        v
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<usize> {
        let (la, lb) = (self.value(a).len(), self.value(b).len());
        if la != lb {
            return Err(Error::ShapeMismatch(format!("{what}: {la} vs {lb}")));
        }
        Ok(la)
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (r, c) = self.shape(w);
        let xv = self.value(x);
        if xv.len() != c {
            return Err(Error::ShapeMismatch(format!(
                "matvec: ({r}, {c}) times {}",
                xv.len()
            )));
        }
        let wv = self.value(w);
        let out = (0..r)
            .map(|i| {
                wv[i * c..(i + 1) * c]
                    .iter()
                    .zip(xv)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(self.push(Op::MatVec(w, x), out, (r, 1)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let n = self.same_len(a, b, "add")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(Op::Add(a, b), out, (n, 1)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let n = self.same_len(a, b, "sub")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(Op::Sub(a, b), out, (n, 1)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let n = self.same_len(a, b, "mul")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(Op::Mul(a, b), out, (n, 1)))
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out: Vec<f64> = self.value(a).iter().map(|&x| f(x)).collect();
        let n = out.len();
        self.push(op, out, (n, 1))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn scale(&mut self, a: Var, f: f64) -> Var {
        self.unary(a, Op::Scale(a, f), |x| x * f)
    }

    /// Gradient flows only where `lo < x < hi`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let v = self.value(a);
        if start + len > v.len() {
            return Err(Error::ShapeMismatch(format!(
                "slice {start}..{} of {}",
                start + len,
                v.len()
            )));
        }
        let out = v[start..start + len].to_vec();
        Ok(self.push(Op::Slice(a, start), out, (len, 1)))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let out: Vec<f64> = parts.iter().flat_map(|&p| self.value(p).to_vec()).collect();
        let n = out.len();
        self.push(Op::Concat(parts.to_vec()), out, (n, 1))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "dot")?;
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .sum();
        Ok(self.push(Op::Dot(a, b), vec![out], (1, 1)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(Op::Sum(a), vec![s], (1, 1))
    }

    /// Probabilities of the masked softmax (masked entries are 0).
    pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
        let max = logits
            .iter()
            .zip(mask)
            .filter(|(_, &m)| !m)
            .map(|(&l, _)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = logits
            .iter()
            .zip(mask)
            .map(|(&l, &m)| if m { 0.0 } else { (l - max).exp() })
            .collect();
        let z: f64 = p.iter().sum();
        for v in &mut p {
            *v /= z;
        }
        p
    }

    /// `log p[index]` where `p` is the softmax of `logits` with masked entries removed.
    pub fn log_softmax_pick(&mut self, logits: Var, mask: Vec<bool>, index: usize) -> Result<Var> {
        let l = self.value(logits);
        if mask.len() != l.len() || index >= l.len() || mask[index] {
            return Err(Error::ShapeMismatch(format!(
                "log_softmax_pick: index {index}, {} logits, {} mask entries",
                l.len(),
                mask.len()
            )));
        }
        let max = l
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| !m)
            .map(|(&x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + l.iter()
                .zip(&mask)
                .filter(|(_, &m)| !m)
                .map(|(&x, _)| (x - max).exp())
                .sum::<f64>()
                .ln();
        let out = l[index] - lse;
        Ok(self.push(Op::LogSoftmaxPick(logits, mask, index), vec![out], (1, 1)))
    }

    /// Propagates `seed * d(root)` back to every node, accumulating parameter
    /// gradients into `grads`. Returns the adjoint of every node.
    pub fn backward(&self, root: Var, seed: f64, grads: &mut Grads) -> Vec<Vec<f64>> {
        let mut adj: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if i <= root.0 {
                    vec![0.0; n.shape.0 * n.shape.1]
                } else {
                    Vec::new()
                }
            })
            .collect();
        for v in &mut adj[root.0] {
            *v = seed;
        }
        for i in (0..=root.0).rev() {
            if adj[i].iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = std::mem::take(&mut adj[i]);
            let node = &self.nodes[i];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => {
                    for (a, b) in grads.get_mut(*id).data.iter_mut().zip(&g) {
                        *a += b;
                    }
                }
                Op::MatVec(w, x) => {
                    let (r, c) = self.shape(*w);
                    let wv = self.value(*w);
                    let xv = self.value(*x).to_vec();
                    let mut gx = vec![0.0; c];
                    for (row, &gi) in g.iter().enumerate().take(r) {
                        if gi == 0.0 {
                            continue;
                        }
                        for (gxk, &wk) in gx.iter_mut().zip(&wv[row * c..(row + 1) * c]) {
                            *gxk += gi * wk;
                        }
                    }
                    let gw = &mut adj[w.0];
                    for (row, &gi) in g.iter().enumerate().take(r) {
                        if gi == 0.0 {
                            continue;
                        }
                        for (gwk, &xk) in gw[row * c..(row + 1) * c].iter_mut().zip(&xv) {
                            *gwk += gi * xk;
                        }
                    }
                    acc(&mut adj[x.0], &gx);
                }
                Op::Add(a, b) => {
                    acc(&mut adj[a.0], &g);
                    acc(&mut adj[b.0], &g);
                }
                Op::Sub(a, b) => {
                    acc(&mut adj[a.0], &g);
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    acc(&mut adj[b.0], &neg);
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> = g.iter().zip(self.value(*b)).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.iter().zip(self.value(*a)).map(|(x, y)| x * y).collect();
                    acc(&mut adj[a.0], &ga);
                    acc(&mut adj[b.0], &gb);
                }
                Op::Tanh(a) => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, y)| g * (1.0 - y * y))
                        .collect();
                    acc(&mut adj[a.0], &ga);
                }
                Op::Sigmoid(a) => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(&node.value)
                        .map(|(g, y)| g * y * (1.0 - y))
                        .collect();
                    acc(&mut adj[a.0], &ga);
                }
                Op::Exp(a) => {
                    let ga: Vec<f64> = g.iter().zip(&node.value).map(|(g, y)| g * y).collect();
                    acc(&mut adj[a.0], &ga);
                }
                Op::Scale(a, f) => {
                    let ga: Vec<f64> = g.iter().map(|v| v * f).collect();
                    acc(&mut adj[a.0], &ga);
                }
                Op::Clamp(a, lo, hi) => {
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(self.value(*a))
                        .map(|(&g, &x)| if x > *lo && x < *hi { g } else { 0.0 })
                        .collect();
                    acc(&mut adj[a.0], &ga);
                }
                Op::Slice(a, start) => {
                    let target = &mut adj[a.0];
                    for (k, gv) in g.iter().enumerate() {
                        target[start + k] += gv;
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.value(*p).len();
                        acc(&mut adj[p.0], &g[off..off + n]);
                        off += n;
                    }
                }
                Op::Dot(a, b) => {
                    let s = g[0];
                    let ga: Vec<f64> = self.value(*b).iter().map(|y| s * y).collect();
                    let gb: Vec<f64> = self.value(*a).iter().map(|x| s * x).collect();
                    acc(&mut adj[a.0], &ga);
                    acc(&mut adj[b.0], &gb);
                }
                Op::Sum(a) => {
                    let n = self.value(*a).len();
                    acc(&mut adj[a.0], &vec![g[0]; n]);
                }
                Op::LogSoftmaxPick(logits, mask, index) => {
                    let p = Self::masked_softmax(self.value(*logits), mask);
                    let gl: Vec<f64> = p
                        .iter()
                        .enumerate()
                        .map(|(j, &pj)| {
                            let ind = if j == *index { 1.0 } else { 0.0 };
                            if mask[j] {
                                0.0
                            } else {
                                g[0] * (ind - pj)
                            }
                        })
                        .collect();
                    acc(&mut adj[logits.0], &gl);
                }
            }
            adj[i] = g;
        }
        adj
    }
}

fn acc(target: &mut [f64], g: &[f64]) {
    for (t, v) in target.iter_mut().zip(g) {
        *t += v;
    }
}
