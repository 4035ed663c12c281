use super::tensor::split_axis;
use super::{AutodiffError, Tensor};

/// Handle to a value recorded on a [`Tape`].
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
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    MatMul(Var, Var),
    Conv1d { input: Var, kernel: Var, bias: Option<Var> },
    Relu(Var),
    Softmax { x: Var, axis: usize },
    Concat { parts: Vec<Var>, axis: usize },
    Slice { x: Var, axis: usize, start: usize },
    Sum(Var),
    SumAxis { x: Var, axis: usize },
    Mean(Var),
    Log(Var),
    Reshape(Var),
    Expand(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Records primitive operations in execution order so that
/// [`Tape::backward`] can visit them in exact reverse.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

type Result<T> = std::result::Result<T, AutodiffError>;

fn mismatch(op: &'static str, a: &[usize], b: &[usize]) -> AutodiffError {
    AutodiffError::ShapeMismatch { op, left: a.to_vec(), right: b.to_vec() }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Trainable input; receives a gradient on backward.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that is held constant under differentiation.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of the last `backward` loss with respect to `v`, if `v` is
    /// tracked and the loss depends on it.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        self.grads[v.0]
            .as_ref()
            .map(|g| Tensor::new(self.shape(v).to_vec(), g.clone()).expect("grad mirrors value shape"))
    }

    fn binary(&mut self, op: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(mismatch(op, ta.shape(), tb.shape()));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| f(*x, *y)).collect();
        Tensor::new(ta.shape().to_vec(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("add", a, b, |x, y| x + y)?;
        let rg = self.tracked(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("sub", a, b, |x, y| x - y)?;
        let rg = self.tracked(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.binary("mul", a, b, |x, y| x * y)?;
        let rg = self.tracked(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let value = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v * c).collect()).unwrap();
        let rg = self.tracked(&[x]);
        self.push(value, Op::Scale(x, c), rg)
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Var {
        let t = self.value(x);
        let value = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v + c).collect()).unwrap();
        let rg = self.tracked(&[x]);
        self.push(value, Op::AddScalar(x), rg)
    }

    /// `(m, k) x (k, n) -> (m, n)`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0] {
            return Err(mismatch("matmul", ta.shape(), tb.shape()));
        }
        let (m, k, n) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            for p in 0..k {
                let av = ta.data()[r * k + p];
                let brow = &tb.data()[p * n..(p + 1) * n];
                for (o, bv) in out[r * n..(r + 1) * n].iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
        let value = Tensor::new(vec![m, n], out)?;
        let rg = self.tracked(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// Convolution along the last (time) axis only, independently for every
    /// asset row.
    ///
    /// `input` is `(C_in, n, t)` or `(B, C_in, n, t)`, `kernel` is
    /// `(C_out, C_in, k)` and `bias` is `(C_out)`. The result is
    /// `([B,] C_out, n, t - k + 1)`.
    pub fn conv1d_over_time(&mut self, input: Var, kernel: Var, bias: Option<Var>) -> Result<Var> {
        let x = self.value(input);
        let w = self.value(kernel);
        let (batch, dims) = match x.rank() {
            3 => (1, x.shape()),
            4 => (x.shape()[0], &x.shape()[1..]),
            _ => return Err(mismatch("conv1d_over_time", x.shape(), w.shape())),
        };
        let (c_in, n, t) = (dims[0], dims[1], dims[2]);
        if w.rank() != 3 || w.shape()[1] != c_in || w.shape()[2] == 0 || w.shape()[2] > t {
            return Err(mismatch("conv1d_over_time", x.shape(), w.shape()));
        }
        let (c_out, k) = (w.shape()[0], w.shape()[2]);
        let bias_data = match bias {
            Some(b) => {
                let tb = self.value(b);
                if tb.shape() != [c_out] {
                    return Err(mismatch("conv1d_over_time bias", w.shape(), tb.shape()));
                }
                Some(tb.data())
            }
            None => None,
        };
        let t_out = t - k + 1;
        let mut out = vec![0.0; batch * c_out * n * t_out];
        let (xd, wd) = (x.data(), w.data());
        for b in 0..batch {
            for co in 0..c_out {
                for i in 0..n {
                    let o0 = ((b * c_out + co) * n + i) * t_out;
                    let row = &mut out[o0..o0 + t_out];
                    if let Some(bd) = bias_data {
                        row.fill(bd[co]);
                    }
                    for ci in 0..c_in {
                        let x0 = ((b * c_in + ci) * n + i) * t;
                        let xrow = &xd[x0..x0 + t];
                        for s in 0..k {
                            let wv = wd[(co * c_in + ci) * k + s];
                            for (o, xv) in row.iter_mut().zip(&xrow[s..s + t_out]) {
                                *o += wv * xv;
                            }
                        }
                    }
                }
            }
        }
        let shape = if x.rank() == 3 { vec![c_out, n, t_out] } else { vec![batch, c_out, n, t_out] };
        let value = Tensor::new(shape, out)?;
        let mut deps = vec![input, kernel];
        deps.extend(bias);
        let rg = self.tracked(&deps);
        Ok(self.push(value, Op::Conv1d { input, kernel, bias }, rg))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let value = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v.max(0.0)).collect()).unwrap();
        let rg = self.tracked(&[x]);
        self.push(value, Op::Relu(x), rg)
    }

    /// Softmax along `axis`, computed with max subtraction.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let t = self.value(x);
        if axis >= t.rank() {
            return Err(AutodiffError::InvalidAxis { axis, shape: t.shape().to_vec() });
        }
        let (outer, len, inner) = split_axis(t.shape(), axis);
        let mut out = t.data().to_vec();
        for o in 0..outer {
            for inn in 0..inner {
                let idx = |a: usize| (o * len + a) * inner + inn;
                let max = (0..len).map(|a| out[idx(a)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for a in 0..len {
                    let e = (out[idx(a)] - max).exp();
                    out[idx(a)] = e;
                    total += e;
                }
                for a in 0..len {
                    out[idx(a)] /= total;
                }
            }
        }
        let value = Tensor::new(t.shape().to_vec(), out)?;
        let rg = self.tracked(&[x]);
        Ok(self.push(value, Op::Softmax { x, axis }, rg))
    }

    /// Joins tensors along `axis`; all other extents must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.value(*parts.first().ok_or(AutodiffError::EmptyConcat)?).shape().to_vec();
        if axis >= first.len() {
            return Err(AutodiffError::InvalidAxis { axis, shape: first });
        }
        let mut total = 0;
        for p in parts {
            let s = self.shape(*p);
            let compatible = s.len() == first.len()
                && s.iter().zip(&first).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                return Err(mismatch("concat", &first, s));
            }
            total += s[axis];
        }
        let mut shape = first.clone();
        shape[axis] = total;
        let (outer, _, inner) = split_axis(&shape, axis);
        let mut out = Vec::with_capacity(shape.iter().product());
        for o in 0..outer {
            for p in parts {
                let t = self.value(*p);
                let chunk = t.shape()[axis] * inner;
                out.extend_from_slice(&t.data()[o * chunk..(o + 1) * chunk]);
            }
        }
        let value = Tensor::new(shape, out)?;
        let rg = self.tracked(parts);
        Ok(self.push(value, Op::Concat { parts: parts.to_vec(), axis }, rg))
    }

    /// Entries `start..start + len` along `axis`.
    pub fn slice(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        if axis >= t.rank() {
            return Err(AutodiffError::InvalidAxis { axis, shape: t.shape().to_vec() });
        }
        if start + len > t.shape()[axis] {
            return Err(AutodiffError::SliceOutOfRange { axis, start, len, shape: t.shape().to_vec() });
        }
        let (outer, full, inner) = split_axis(t.shape(), axis);
        let mut out = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * full + start) * inner;
            out.extend_from_slice(&t.data()[base..base + len * inner]);
        }
        let mut shape = t.shape().to_vec();
        shape[axis] = len;
        let value = Tensor::new(shape, out)?;
        let rg = self.tracked(&[x]);
        Ok(self.push(value, Op::Slice { x, axis, start }, rg))
    }

    /// Sum of all entries, as a rank-0 tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum();
        let rg = self.tracked(&[x]);
        self.push(Tensor::scalar(total), Op::Sum(x), rg)
    }

    /// Sums out `axis`, removing it from the shape.
    pub fn sum_axis(&mut self, x: Var, axis: usize) -> Result<Var> {
        let t = self.value(x);
        if axis >= t.rank() {
            return Err(AutodiffError::InvalidAxis { axis, shape: t.shape().to_vec() });
        }
        let (outer, len, inner) = split_axis(t.shape(), axis);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for a in 0..len {
                let src = &t.data()[(o * len + a) * inner..(o * len + a + 1) * inner];
                for (dst, v) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                    *dst += v;
                }
            }
        }
        let mut shape = t.shape().to_vec();
        shape.remove(axis);
        let value = Tensor::new(shape, out)?;
        let rg = self.tracked(&[x]);
        Ok(self.push(value, Op::SumAxis { x, axis }, rg))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let m = t.data().iter().sum::<f64>() / t.len() as f64;
        let rg = self.tracked(&[x]);
        self.push(Tensor::scalar(m), Op::Mean(x), rg)
    }

    /// Natural logarithm.
    pub fn log(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let value = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v.ln()).collect()).unwrap();
        let rg = self.tracked(&[x]);
        self.push(value, Op::Log(x), rg)
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).reshaped(shape.to_vec())?;
        let rg = self.tracked(&[x]);
        Ok(self.push(value, Op::Reshape(x), rg))
    }

    /// Repeats a one-element tensor to fill `shape`.
    pub fn expand(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(x);
        if t.len() != 1 {
            return Err(mismatch("expand", t.shape(), shape));
        }
        let value = Tensor::full(shape, t.data()[0]);
        let rg = self.tracked(&[x]);
        Ok(self.push(value, Op::Expand(x), rg))
    }

    /// Reverse pass from a one-element `loss`. Gradients from previous calls
    /// are discarded; fan-out contributions accumulate additively.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let shape = self.shape(loss).to_vec();
        if shape.iter().product::<usize>() != 1 {
            return Err(AutodiffError::NonScalarLoss(shape));
        }
        self.grads.iter_mut().for_each(|g| *g = None);
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        self.grads[loss.0] = Some(vec![1.0]);
        for idx in (0..=loss.0).rev() {
            let Some(g) = self.grads[idx].take() else { continue };
            if self.nodes[idx].requires_grad {
                self.propagate(idx, &g);
            }
            self.grads[idx] = Some(g);
        }
        Ok(())
    }

    fn propagate(&mut self, idx: usize, g: &[f64]) {
        let Tape { nodes, grads } = self;
        let node = &nodes[idx];
        let out = node.value.data();
        macro_rules! sink {
            ($v:expr) => {
                grad_slot(nodes, grads, $v)
            };
        }
        let val = |v: Var| nodes[v.0].value.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if let Some(ga) = sink!(*a) {
                    ga.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
                if let Some(gb) = sink!(*b) {
                    gb.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
            }
            Op::Sub(a, b) => {
                if let Some(ga) = sink!(*a) {
                    ga.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
                if let Some(gb) = sink!(*b) {
                    gb.iter_mut().zip(g).for_each(|(d, s)| *d -= s);
                }
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                if let Some(ga) = sink!(*a) {
                    for ((d, s), y) in ga.iter_mut().zip(g).zip(vb) {
                        *d += s * y;
                    }
                }
                if let Some(gb) = sink!(*b) {
                    for ((d, s), x) in gb.iter_mut().zip(g).zip(va) {
                        *d += s * x;
                    }
                }
            }
            Op::Scale(x, c) => {
                if let Some(gx) = sink!(*x) {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += c * s);
                }
            }
            Op::AddScalar(x) | Op::Reshape(x) => {
                if let Some(gx) = sink!(*x) {
                    gx.iter_mut().zip(g).for_each(|(d, s)| *d += s);
                }
            }
            Op::MatMul(a, b) => {
                let (sa, sb) = (nodes[a.0].value.shape(), nodes[b.0].value.shape());
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                let (va, vb) = (val(*a), val(*b));
                if let Some(ga) = sink!(*a) {
                    for r in 0..m {
                        for p in 0..k {
                            ga[r * k + p] += (0..n).map(|c| g[r * n + c] * vb[p * n + c]).sum::<f64>();
                        }
                    }
                }
                if let Some(gb) = sink!(*b) {
                    for p in 0..k {
                        for c in 0..n {
                            gb[p * n + c] += (0..m).map(|r| va[r * k + p] * g[r * n + c]).sum::<f64>();
                        }
                    }
                }
            }
            Op::Conv1d { input, kernel, bias } => {
                let xs = nodes[input.0].value.shape();
                let (batch, dims) = if xs.len() == 4 { (xs[0], &xs[1..]) } else { (1, xs) };
                let (c_in, n, t) = (dims[0], dims[1], dims[2]);
                let ws = nodes[kernel.0].value.shape();
                let (c_out, k) = (ws[0], ws[2]);
                let t_out = t - k + 1;
                let (xd, wd) = (val(*input), val(*kernel));
                if let Some(gx) = sink!(*input) {
                    for b in 0..batch {
                        for co in 0..c_out {
                            for i in 0..n {
                                let grow = &g[((b * c_out + co) * n + i) * t_out..][..t_out];
                                for ci in 0..c_in {
                                    let x0 = ((b * c_in + ci) * n + i) * t;
                                    for s in 0..k {
                                        let wv = wd[(co * c_in + ci) * k + s];
                                        for (d, gv) in gx[x0 + s..x0 + s + t_out].iter_mut().zip(grow) {
                                            *d += wv * gv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                if let Some(gw) = sink!(*kernel) {
                    for b in 0..batch {
                        for co in 0..c_out {
                            for i in 0..n {
                                let grow = &g[((b * c_out + co) * n + i) * t_out..][..t_out];
                                for ci in 0..c_in {
                                    let x0 = ((b * c_in + ci) * n + i) * t;
                                    for s in 0..k {
                                        let xrow = &xd[x0 + s..x0 + s + t_out];
                                        gw[(co * c_in + ci) * k + s] +=
                                            grow.iter().zip(xrow).map(|(a, b)| a * b).sum::<f64>();
                                    }
                                }
                            }
                        }
                    }
                }
                if let Some(bias) = bias {
                    if let Some(gb) = sink!(*bias) {
                        for b in 0..batch {
                            for (co, d) in gb.iter_mut().enumerate() {
                                let start = (b * c_out + co) * n * t_out;
                                *d += g[start..start + n * t_out].iter().sum::<f64>();
                            }
                        }
                    }
                }
            }
            Op::Relu(x) => {
                let vx = val(*x);
                if let Some(gx) = sink!(*x) {
                    for ((d, s), xv) in gx.iter_mut().zip(g).zip(vx) {
                        if *xv > 0.0 {
                            *d += s;
                        }
                    }
                }
            }
            Op::Softmax { x, axis } => {
                let (outer, len, inner) = split_axis(node.value.shape(), *axis);
                if let Some(gx) = sink!(*x) {
                    for o in 0..outer {
                        for inn in 0..inner {
                            let idx = |a: usize| (o * len + a) * inner + inn;
                            let dot: f64 = (0..len).map(|a| g[idx(a)] * out[idx(a)]).sum();
                            for a in 0..len {
                                gx[idx(a)] += out[idx(a)] * (g[idx(a)] - dot);
                            }
                        }
                    }
                }
            }
            Op::Concat { parts, axis } => {
                let (outer, total, inner) = split_axis(node.value.shape(), *axis);
                let mut offset = 0;
                for p in parts {
                    let width = nodes[p.0].value.shape()[*axis];
                    if let Some(gp) = sink!(*p) {
                        for o in 0..outer {
                            let src = &g[(o * total + offset) * inner..][..width * inner];
                            let dst = &mut gp[o * width * inner..][..width * inner];
                            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                        }
                    }
                    offset += width;
                }
            }
            Op::Slice { x, axis, start } => {
                let full = nodes[x.0].value.shape()[*axis];
                let (outer, len, inner) = split_axis(node.value.shape(), *axis);
                if let Some(gx) = sink!(*x) {
                    for o in 0..outer {
                        let src = &g[o * len * inner..][..len * inner];
                        let dst = &mut gx[(o * full + start) * inner..][..len * inner];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                    }
                }
            }
            Op::Sum(x) | Op::Expand(x) => {
                let total: f64 = g.iter().sum();
                let is_sum = matches!(node.op, Op::Sum(_));
                if let Some(gx) = sink!(*x) {
                    if is_sum {
                        gx.iter_mut().for_each(|d| *d += total);
                    } else {
                        gx[0] += total;
                    }
                }
            }
            Op::SumAxis { x, axis } => {
                let (outer, len, inner) = split_axis(nodes[x.0].value.shape(), *axis);
                if let Some(gx) = sink!(*x) {
                    for o in 0..outer {
                        let src = &g[o * inner..(o + 1) * inner];
                        for a in 0..len {
                            let dst = &mut gx[(o * len + a) * inner..][..inner];
                            dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                        }
                    }
                }
            }
            Op::Mean(x) => {
                let n = nodes[x.0].value.len() as f64;
                if let Some(gx) = sink!(*x) {
                    gx.iter_mut().for_each(|d| *d += g[0] / n);
                }
            }
            Op::Log(x) => {
                let vx = val(*x);
                if let Some(gx) = sink!(*x) {
                    for ((d, s), xv) in gx.iter_mut().zip(g).zip(vx) {
                        *d += s / xv;
                    }
                }
            }
        }
    }
}

fn grad_slot<'a>(nodes: &[Node], grads: &'a mut [Option<Vec<f64>>], v: Var) -> Option<&'a mut Vec<f64>> {
    if !nodes[v.0].requires_grad {
        return None;
    }
    let len = nodes[v.0].value.len();
    Some(grads[v.0].get_or_insert_with(|| vec![0.0; len]))
}
