//! Minimal reverse-mode automatic differentiation over vector nodes.
//!
//! The tape records a fixed set of operations during a forward pass
//! (define-by-run), then propagates gradients backward. Scalars are
//! length-1 nodes. Data-dependent branches (the origin guard in the
//! exp/log maps, the ball clamp, the `atanh` argument clamp) are resolved
//! at build time, so the recorded graph is always branch-free.
//!
//! Node values live in one flat arena (`vals`) addressed by per-node
//! spans; backward fills a parallel arena of the same shape. This keeps
//! the per-op cost at a couple of arena extensions instead of a heap
//! allocation per node, which matters because training builds one tape
//! per triple.
//!
//! Forward arithmetic reuses the same slice kernels as the scoring hot
//! path; only the vector-Jacobian products live here.

use crate::algebra::{
    complex_mul_into, complex_normalize_into, quat_mul_into, quat_normalize_into,
};
use crate::hyperbolic::{softplus, ATANH_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    /// Elementwise sum of two equal-length nodes.
    Add(usize, usize),
    Sub(usize, usize),
    Neg(usize),
    /// Vector times a length-1 scalar node.
    Scale(usize, usize),
    /// Inner product, yields a scalar node.
    Dot(usize, usize),
    /// Euclidean norm, yields a scalar node.
    Norm(usize),
    Sqrt(usize),
    Tanh(usize),
    /// `atanh` of a clamped argument; `clamped` freezes the gradient.
    Atanh {
        x: usize,
        clamped: bool,
    },
    Softplus(usize),
    Recip(usize),
    AddConst(usize),
    MulConst(usize, f64),
    /// Blockwise Hamilton product.
    QuatMul(usize, usize),
    QuatNormalize(usize),
    /// Pairwise complex product.
    ComplexMul(usize, usize),
    ComplexNormalize(usize),
}

pub struct Tape {
    /// Value arena; node `i` occupies `offsets[i]..offsets[i] + lens[i]`.
    vals: Vec<f64>,
    offsets: Vec<usize>,
    lens: Vec<usize>,
    ops: Vec<Op>,
}

impl Tape {
    pub fn new() -> Self {
        Self::with_capacity(64, 1024)
    }

    /// Pre-sizes the arenas; `nodes` and `elements` are estimates.
    pub fn with_capacity(nodes: usize, elements: usize) -> Self {
        Self {
            vals: Vec::with_capacity(elements),
            offsets: Vec::with_capacity(nodes),
            lens: Vec::with_capacity(nodes),
            ops: Vec::with_capacity(nodes),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.vals[self.offsets[id.0]..self.offsets[id.0] + self.lens[id.0]]
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.lens[id.0], 1);
        self.vals[self.offsets[id.0]]
    }

    /// Registers a node whose value was just appended to `vals`.
    fn finish(&mut self, offset: usize, op: Op) -> NodeId {
        self.offsets.push(offset);
        self.lens.push(self.vals.len() - offset);
        self.ops.push(op);
        NodeId(self.ops.len() - 1)
    }

    pub fn leaf(&mut self, value: &[f64]) -> NodeId {
        let offset = self.vals.len();
        self.vals.extend_from_slice(value);
        self.finish(offset, Op::Leaf)
    }

    pub fn scalar_leaf(&mut self, value: f64) -> NodeId {
        let offset = self.vals.len();
        self.vals.push(value);
        self.finish(offset, Op::Leaf)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.lens[a.0], self.lens[b.0]);
        let (oa, ob, n) = (self.offsets[a.0], self.offsets[b.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = self.vals[oa + i] + self.vals[ob + i];
            self.vals.push(v);
        }
        self.finish(offset, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.lens[a.0], self.lens[b.0]);
        let (oa, ob, n) = (self.offsets[a.0], self.offsets[b.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = self.vals[oa + i] - self.vals[ob + i];
            self.vals.push(v);
        }
        self.finish(offset, Op::Sub(a.0, b.0))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let (oa, n) = (self.offsets[a.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = -self.vals[oa + i];
            self.vals.push(v);
        }
        self.finish(offset, Op::Neg(a.0))
    }

    pub fn scale(&mut self, a: NodeId, s: NodeId) -> NodeId {
        debug_assert_eq!(self.lens[s.0], 1);
        let f = self.vals[self.offsets[s.0]];
        let (oa, n) = (self.offsets[a.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = self.vals[oa + i] * f;
            self.vals.push(v);
        }
        self.finish(offset, Op::Scale(a.0, s.0))
    }

    /// Scalar product of two scalar nodes.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.lens[a.0], 1);
        self.scale(b, a)
    }

    pub fn dot(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.lens[a.0], self.lens[b.0]);
        let (oa, ob, n) = (self.offsets[a.0], self.offsets[b.0], self.lens[a.0]);
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vals[oa + i] * self.vals[ob + i];
        }
        let offset = self.vals.len();
        self.vals.push(acc);
        self.finish(offset, Op::Dot(a.0, b.0))
    }

    pub fn norm(&mut self, a: NodeId) -> NodeId {
        let (oa, n) = (self.offsets[a.0], self.lens[a.0]);
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.vals[oa + i] * self.vals[oa + i];
        }
        let offset = self.vals.len();
        self.vals.push(acc.sqrt());
        self.finish(offset, Op::Norm(a.0))
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let v = self.scalar(a).sqrt();
        let offset = self.vals.len();
        self.vals.push(v);
        self.finish(offset, Op::Sqrt(a.0))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.scalar(a).tanh();
        let offset = self.vals.len();
        self.vals.push(v);
        self.finish(offset, Op::Tanh(a.0))
    }

    /// `atanh` with the argument clamped to `1 − 1e-15`; in the clamped
    /// regime the output is constant, so no gradient flows.
    pub fn atanh(&mut self, a: NodeId) -> NodeId {
        let x = self.scalar(a);
        let clamped = x > 1.0 - ATANH_EPS;
        let v = x.min(1.0 - ATANH_EPS).atanh();
        let offset = self.vals.len();
        self.vals.push(v);
        self.finish(offset, Op::Atanh { x: a.0, clamped })
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        let v = softplus(self.scalar(a));
        let offset = self.vals.len();
        self.vals.push(v);
        self.finish(offset, Op::Softplus(a.0))
    }

    pub fn recip(&mut self, a: NodeId) -> NodeId {
        let v = 1.0 / self.scalar(a);
        let offset = self.vals.len();
        self.vals.push(v);
        self.finish(offset, Op::Recip(a.0))
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let (oa, n) = (self.offsets[a.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = self.vals[oa + i] + c;
            self.vals.push(v);
        }
        self.finish(offset, Op::AddConst(a.0))
    }

    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let (oa, n) = (self.offsets[a.0], self.lens[a.0]);
        let offset = self.vals.len();
        self.vals.reserve(n);
        for i in 0..n {
            let v = self.vals[oa + i] * c;
            self.vals.push(v);
        }
        self.finish(offset, Op::MulConst(a.0, c))
    }

    pub fn quat_mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let n = self.lens[a.0];
        let offset = self.vals.len();
        self.vals.resize(offset + n, 0.0);
        let (head, out) = self.vals.split_at_mut(offset);
        quat_mul_into(
            out,
            &head[self.offsets[a.0]..self.offsets[a.0] + n],
            &head[self.offsets[b.0]..self.offsets[b.0] + n],
        );
        self.finish(offset, Op::QuatMul(a.0, b.0))
    }

    pub fn quat_normalize(&mut self, a: NodeId) -> NodeId {
        let n = self.lens[a.0];
        let offset = self.vals.len();
        self.vals.resize(offset + n, 0.0);
        let (head, out) = self.vals.split_at_mut(offset);
        quat_normalize_into(out, &head[self.offsets[a.0]..self.offsets[a.0] + n])
            .expect("zero-norm quaternion block on tape");
        self.finish(offset, Op::QuatNormalize(a.0))
    }

    pub fn complex_mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let n = self.lens[a.0];
        let offset = self.vals.len();
        self.vals.resize(offset + n, 0.0);
        let (head, out) = self.vals.split_at_mut(offset);
        complex_mul_into(
            out,
            &head[self.offsets[a.0]..self.offsets[a.0] + n],
            &head[self.offsets[b.0]..self.offsets[b.0] + n],
        );
        self.finish(offset, Op::ComplexMul(a.0, b.0))
    }

    pub fn complex_normalize(&mut self, a: NodeId) -> NodeId {
        let n = self.lens[a.0];
        let offset = self.vals.len();
        self.vals.resize(offset + n, 0.0);
        let (head, out) = self.vals.split_at_mut(offset);
        complex_normalize_into(out, &head[self.offsets[a.0]..self.offsets[a.0] + n])
            .expect("zero-norm complex pair on tape");
        self.finish(offset, Op::ComplexNormalize(a.0))
    }

    /// Propagates gradients from the scalar node `out` back to every node.
    pub fn backward(&self, out: NodeId) -> Gradients<'_> {
        let mut grads = vec![0.0; self.vals.len()];
        grads[self.offsets[out.0]] = 1.0;

        for (idx, op) in self.ops.iter().enumerate().rev() {
            let (o_out, n_out) = (self.offsets[idx], self.lens[idx]);
            match *op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    let (oa, ob) = (self.offsets[a], self.offsets[b]);
                    for i in 0..n_out {
                        let g = grads[o_out + i];
                        grads[oa + i] += g;
                        grads[ob + i] += g;
                    }
                }
                Op::Sub(a, b) => {
                    let (oa, ob) = (self.offsets[a], self.offsets[b]);
                    for i in 0..n_out {
                        let g = grads[o_out + i];
                        grads[oa + i] += g;
                        grads[ob + i] -= g;
                    }
                }
                Op::Neg(a) => {
                    let oa = self.offsets[a];
                    for i in 0..n_out {
                        grads[oa + i] -= grads[o_out + i];
                    }
                }
                Op::Scale(a, s) => {
                    let (oa, os) = (self.offsets[a], self.offsets[s]);
                    let f = self.vals[os];
                    let mut contrib = 0.0;
                    for i in 0..n_out {
                        let g = grads[o_out + i];
                        grads[oa + i] += g * f;
                        contrib += g * self.vals[oa + i];
                    }
                    grads[os] += contrib;
                }
                Op::Dot(a, b) => {
                    let g = grads[o_out];
                    let (oa, ob, n) = (self.offsets[a], self.offsets[b], self.lens[a]);
                    for i in 0..n {
                        grads[oa + i] += g * self.vals[ob + i];
                    }
                    for i in 0..n {
                        grads[ob + i] += g * self.vals[oa + i];
                    }
                }
                Op::Norm(a) => {
                    let g = grads[o_out];
                    let norm = self.vals[o_out];
                    if norm > 1e-15 {
                        let f = g / norm;
                        let (oa, n) = (self.offsets[a], self.lens[a]);
                        for i in 0..n {
                            grads[oa + i] += f * self.vals[oa + i];
                        }
                    }
                }
                Op::Sqrt(a) => {
                    let out_v = self.vals[o_out];
                    if out_v > 0.0 {
                        grads[self.offsets[a]] += grads[o_out] / (2.0 * out_v);
                    }
                }
                Op::Tanh(a) => {
                    let out_v = self.vals[o_out];
                    grads[self.offsets[a]] += grads[o_out] * (1.0 - out_v * out_v);
                }
                Op::Atanh { x, clamped } => {
                    if !clamped {
                        let xv = self.vals[self.offsets[x]];
                        grads[self.offsets[x]] += grads[o_out] / (1.0 - xv * xv);
                    }
                }
                Op::Softplus(a) => {
                    let xv = self.vals[self.offsets[a]];
                    // σ(x), computed stably on both sides.
                    let sig = if xv >= 0.0 {
                        1.0 / (1.0 + (-xv).exp())
                    } else {
                        let e = xv.exp();
                        e / (1.0 + e)
                    };
                    grads[self.offsets[a]] += grads[o_out] * sig;
                }
                Op::Recip(a) => {
                    let xv = self.vals[self.offsets[a]];
                    grads[self.offsets[a]] -= grads[o_out] / (xv * xv);
                }
                Op::AddConst(a) => {
                    let oa = self.offsets[a];
                    for i in 0..n_out {
                        grads[oa + i] += grads[o_out + i];
                    }
                }
                Op::MulConst(a, c) => {
                    let oa = self.offsets[a];
                    for i in 0..n_out {
                        grads[oa + i] += grads[o_out + i] * c;
                    }
                }
                Op::QuatMul(a, b) => {
                    let (oa, ob) = (self.offsets[a], self.offsets[b]);
                    for i in (0..n_out).step_by(4) {
                        let (ga, gb, gc, gd) = (
                            grads[o_out + i],
                            grads[o_out + i + 1],
                            grads[o_out + i + 2],
                            grads[o_out + i + 3],
                        );
                        let (a2, b2, c2, d2) = (
                            self.vals[ob + i],
                            self.vals[ob + i + 1],
                            self.vals[ob + i + 2],
                            self.vals[ob + i + 3],
                        );
                        grads[oa + i] += ga * a2 + gb * b2 + gc * c2 + gd * d2;
                        grads[oa + i + 1] += -ga * b2 + gb * a2 - gc * d2 + gd * c2;
                        grads[oa + i + 2] += -ga * c2 + gb * d2 + gc * a2 - gd * b2;
                        grads[oa + i + 3] += -ga * d2 - gb * c2 + gc * b2 + gd * a2;
                        let (a1, b1, c1, d1) = (
                            self.vals[oa + i],
                            self.vals[oa + i + 1],
                            self.vals[oa + i + 2],
                            self.vals[oa + i + 3],
                        );
                        grads[ob + i] += ga * a1 + gb * b1 + gc * c1 + gd * d1;
                        grads[ob + i + 1] += -ga * b1 + gb * a1 + gc * d1 - gd * c1;
                        grads[ob + i + 2] += -ga * c1 - gb * d1 + gc * a1 + gd * b1;
                        grads[ob + i + 3] += -ga * d1 + gb * c1 - gc * b1 + gd * a1;
                    }
                }
                Op::QuatNormalize(a) => {
                    let oa = self.offsets[a];
                    for i in (0..n_out).step_by(4) {
                        let mut norm_sq = 0.0;
                        let mut gdotu = 0.0;
                        for j in 0..4 {
                            let q = self.vals[oa + i + j];
                            norm_sq += q * q;
                            gdotu += grads[o_out + i + j] * self.vals[o_out + i + j];
                        }
                        let norm = norm_sq.sqrt();
                        for j in 0..4 {
                            grads[oa + i + j] +=
                                (grads[o_out + i + j] - gdotu * self.vals[o_out + i + j]) / norm;
                        }
                    }
                }
                Op::ComplexMul(a, b) => {
                    let (oa, ob) = (self.offsets[a], self.offsets[b]);
                    for i in (0..n_out).step_by(2) {
                        let (gr, gi) = (grads[o_out + i], grads[o_out + i + 1]);
                        let (cr, ci) = (self.vals[ob + i], self.vals[ob + i + 1]);
                        grads[oa + i] += gr * cr + gi * ci;
                        grads[oa + i + 1] += -gr * ci + gi * cr;
                        let (er, ei) = (self.vals[oa + i], self.vals[oa + i + 1]);
                        grads[ob + i] += gr * er + gi * ei;
                        grads[ob + i + 1] += -gr * ei + gi * er;
                    }
                }
                Op::ComplexNormalize(a) => {
                    let oa = self.offsets[a];
                    for i in (0..n_out).step_by(2) {
                        let (c_re, c_im) = (self.vals[oa + i], self.vals[oa + i + 1]);
                        let norm = (c_re * c_re + c_im * c_im).sqrt();
                        let gdotu = grads[o_out + i] * self.vals[o_out + i]
                            + grads[o_out + i + 1] * self.vals[o_out + i + 1];
                        for j in 0..2 {
                            grads[oa + i + j] +=
                                (grads[o_out + i + j] - gdotu * self.vals[o_out + i + j]) / norm;
                        }
                    }
                }
            }
        }

        Gradients {
            grads,
            offsets: &self.offsets,
            lens: &self.lens,
        }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

pub struct Gradients<'t> {
    grads: Vec<f64>,
    offsets: &'t [usize],
    lens: &'t [usize],
}

impl Gradients<'_> {
    pub fn get(&self, id: NodeId) -> &[f64] {
        &self.grads[self.offsets[id.0]..self.offsets[id.0] + self.lens[id.0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of `f`'s gradient with respect to one leaf.
    fn check_gradient(build: impl Fn(&mut Tape, NodeId) -> NodeId, input: Vec<f64>) {
        let h = 1e-6;
        let mut tape = Tape::new();
        let x = tape.leaf(&input);
        let out = build(&mut tape, x);
        assert_eq!(tape.value(out).len(), 1, "output must be scalar");
        let grads = tape.backward(out);
        let analytic = grads.get(x).to_vec();

        for i in 0..input.len() {
            let eval = |delta: f64| -> f64 {
                let mut bumped = input.clone();
                bumped[i] += delta;
                let mut t = Tape::new();
                let x = t.leaf(&bumped);
                let out = build(&mut t, x);
                t.scalar(out)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-3);
            let rel = (analytic[i] - fd).abs() / denom;
            assert!(
                rel < 1e-6,
                "component {i}: analytic {} vs fd {fd}",
                analytic[i]
            );
        }
    }

    #[test]
    fn elementwise_and_scalar_ops() {
        check_gradient(
            |t, x| {
                let n = t.neg(x);
                let s = t.sub(x, n); // 2x
                let d = t.dot(s, s); // 4‖x‖²
                t.add_const(d, 3.0)
            },
            vec![0.5, -1.2, 2.0],
        );
    }

    #[test]
    fn norm_sqrt_tanh_chain() {
        check_gradient(
            |t, x| {
                let n = t.norm(x);
                let r = t.sqrt(n);
                t.tanh(r)
            },
            vec![0.7, -0.4, 0.9, 1.3],
        );
    }

    #[test]
    fn atanh_softplus_recip_chain() {
        check_gradient(
            |t, x| {
                let n = t.norm(x);
                let scaled = t.mul_const(n, 0.3);
                let a = t.atanh(scaled);
                let sp = t.softplus(a);
                t.recip(sp)
            },
            vec![0.4, -0.2, 0.35],
        );
    }

    #[test]
    fn atanh_clamp_freezes_gradient() {
        let mut tape = Tape::new();
        let x = tape.scalar_leaf(1.5);
        let a = tape.atanh(x);
        assert!(tape.scalar(a).is_finite());
        let grads = tape.backward(a);
        assert_eq!(grads.get(x), &[0.0]);
    }

    #[test]
    fn scale_couples_both_arguments() {
        check_gradient(
            |t, x| {
                let n = t.norm(x);
                let scaled = t.scale(x, n); // x·‖x‖
                let d = t.dot(scaled, scaled);
                t.mul_const(d, 0.5)
            },
            vec![0.8, -0.3, 0.2],
        );
    }

    #[test]
    fn quaternion_ops() {
        check_gradient(
            |t, x| {
                let qn = t.quat_normalize(x);
                let prod = t.quat_mul(x, qn);
                t.dot(prod, prod)
            },
            vec![0.9, -0.4, 0.3, 1.1, -0.6, 0.8, 0.2, -1.0],
        );
    }

    #[test]
    fn complex_ops() {
        check_gradient(
            |t, x| {
                let cn = t.complex_normalize(x);
                let prod = t.complex_mul(x, cn);
                let n = t.norm(prod);
                t.softplus(n)
            },
            vec![0.7, -0.2, 1.4, 0.5],
        );
    }

    #[test]
    fn fan_out_accumulates() {
        // f(x) = ⟨x,x⟩ + ⟨x,x⟩: gradient 4x.
        let mut tape = Tape::new();
        let x = tape.leaf(&[1.5, -2.0]);
        let d1 = tape.dot(x, x);
        let d2 = tape.dot(x, x);
        let out = tape.add(d1, d2);
        let grads = tape.backward(out);
        assert_eq!(grads.get(x), &[6.0, -8.0]);
    }

    #[test]
    fn two_leaves_get_independent_gradients() {
        let mut tape = Tape::new();
        let a = tape.leaf(&[1.0, 2.0]);
        let b = tape.leaf(&[3.0, -1.0]);
        let out = tape.dot(a, b);
        let grads = tape.backward(out);
        assert_eq!(grads.get(a), &[3.0, -1.0]);
        assert_eq!(grads.get(b), &[1.0, 2.0]);
    }
}
