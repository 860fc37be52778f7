//! Training: cross-entropy loss over uniformly sampled tail negatives,
//! analytic gradients, Adam/Adagrad steps, and the epoch loop.
//!
//! Every parameter lives in the tangent space at the origin, so plain
//! Euclidean optimizers apply directly. Gradients come from a per-triple
//! reverse-mode tape over the scoring operations; the finite-difference
//! check in this module is the correctness gate for all of the geometry
//! calculus.
//!
//! The loss for one triple with true tail `t` and sampled negatives `t'` is
//!
//! ```text
//! L = log(1 + exp(-s(h,r,t))) + Σ log(1 + exp(s(h,r,t')))
//! ```
//!
//! and a batch contributes the mean of its per-triple losses.

pub mod tape;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{Dataset, Triple};
use crate::eval::{self, EvalError, RankMode};
use crate::hyperbolic::{norm, BALL_BOUNDARY_EPS, ZERO_EPS};
use crate::models::{
    init_model, ModelError, ModelKind, ModelState, ParamTensors, Rotation, ScoreVariant,
    TENSOR_NAMES,
};
use tape::{NodeId, Tape};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const ADAGRAD_EPS: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("shape mismatch in tensor {tensor}: {left} vs {right}")]
    ShapeMismatch {
        tensor: &'static str,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Adagrad,
}

impl OptimizerKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Some(OptimizerKind::Adam),
            "adagrad" => Some(OptimizerKind::Adagrad),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Adagrad => "adagrad",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub variant: ScoreVariant,
    pub dim: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub negatives: usize,
    pub max_epochs: usize,
    /// Validate (and snapshot the best state) every this many epochs.
    pub validate_every: usize,
    /// Stop after this many validations without MRR improvement.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, dim: usize) -> Self {
        Self {
            kind,
            variant: kind.default_variant(),
            dim,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 500,
            negatives: 50,
            max_epochs: 500,
            validate_every: 5,
            patience: 10,
            seed: 0,
        }
    }
}

/// Per-parameter accumulators; shapes mirror the model tensors exactly.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    /// First moment (Adam only).
    pub m: ParamTensors,
    /// Second moment (Adam) or squared-gradient sum (Adagrad).
    pub v: ParamTensors,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, params: &ParamTensors) -> Self {
        Self {
            kind,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// Draws `n` tail ids uniformly from all entities except the true tail.
/// Duplicates are allowed. Returns an empty list when no candidate exists.
pub fn sample_negatives(
    rng: &mut impl Rng,
    n_entities: usize,
    true_tail: usize,
    n: usize,
) -> Vec<usize> {
    if n_entities < 2 {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let raw = rng.random_range(0..n_entities - 1);
            if raw >= true_tail {
                raw + 1
            } else {
                raw
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Score graph construction on the tape
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum ParamRef {
    Entity(usize),
    Bias(usize),
    RotE(usize),
    TransE(usize),
    RotH(usize),
    TransH(usize),
    Curv(usize),
}

/// Per-parameter gradient contributions from one triple's tape.
type Contributions = Vec<(ParamRef, Vec<f64>)>;

struct TripleTape {
    tape: Tape,
    leaves: Vec<(NodeId, ParamRef)>,
}

impl TripleTape {
    /// Arena sized for one triple: the head transform plus one score
    /// subgraph per candidate tail.
    fn new(dim: usize, candidates: usize) -> Self {
        let nodes = 70 + 40 * candidates;
        Self {
            tape: Tape::with_capacity(nodes, nodes * (dim / 2 + 1)),
            leaves: Vec::with_capacity(8 + 2 * candidates),
        }
    }

    fn entity(&mut self, state: &ModelState, v: usize) -> NodeId {
        let id = self.tape.leaf(state.entity_row(v));
        self.leaves.push((id, ParamRef::Entity(v)));
        id
    }

    fn bias(&mut self, state: &ModelState, v: usize) -> NodeId {
        let id = self.tape.scalar_leaf(state.params.entity_bias[v]);
        self.leaves.push((id, ParamRef::Bias(v)));
        id
    }
}

struct RelNodes {
    rot_e: Option<NodeId>,
    trans_e: Option<NodeId>,
    rot_h: Option<NodeId>,
    trans_h: Option<NodeId>,
    curv: Option<NodeId>,
}

fn relation_leaves(tt: &mut TripleTape, state: &ModelState, r: usize) -> RelNodes {
    let spec = state.kind.spec();
    let mut nodes = RelNodes {
        rot_e: None,
        trans_e: None,
        rot_h: None,
        trans_h: None,
        curv: None,
    };
    if spec.rot_e != Rotation::None {
        let id = tt.tape.leaf(state.rot_e_row(r));
        tt.leaves.push((id, ParamRef::RotE(r)));
        nodes.rot_e = Some(id);
    }
    if spec.trans_e {
        let id = tt.tape.leaf(state.trans_e_row(r));
        tt.leaves.push((id, ParamRef::TransE(r)));
        nodes.trans_e = Some(id);
    }
    if spec.rot_h != Rotation::None {
        let id = tt.tape.leaf(state.rot_h_row(r));
        tt.leaves.push((id, ParamRef::RotH(r)));
        nodes.rot_h = Some(id);
    }
    if spec.trans_h {
        let id = tt.tape.leaf(state.trans_h_row(r));
        tt.leaves.push((id, ParamRef::TransH(r)));
        nodes.trans_h = Some(id);
    }
    if spec.hyperbolic {
        let id = tt.tape.scalar_leaf(state.params.curv_raw[r]);
        tt.leaves.push((id, ParamRef::Curv(r)));
        nodes.curv = Some(id);
    }
    nodes
}

#[derive(Clone, Copy)]
struct BallCtx {
    xi: NodeId,
    sqrt_xi: NodeId,
}

enum HeadNode {
    Euclid(NodeId),
    Inner(NodeId),
    Ball { point: NodeId, ctx: BallCtx },
}

/// Rescale into the ball when the point reaches the guard radius; the
/// gradient flows through the rescale factor.
fn clamp_graph(tape: &mut Tape, x: NodeId, ctx: BallCtx) -> NodeId {
    let reach = tape.scalar(ctx.sqrt_xi) * norm(tape.value(x));
    if reach < 1.0 - BALL_BOUNDARY_EPS {
        return x;
    }
    let n = tape.norm(x);
    let prod = tape.mul(ctx.sqrt_xi, n);
    let inv = tape.recip(prod);
    let factor = tape.mul_const(inv, 1.0 - BALL_BOUNDARY_EPS);
    tape.scale(x, factor)
}

fn exp0_graph(tape: &mut Tape, v: NodeId, ctx: BallCtx) -> NodeId {
    let n = tape.norm(v);
    if tape.scalar(n) < ZERO_EPS {
        // exp0 is the identity to first order at the origin.
        return v;
    }
    let arg = tape.mul(ctx.sqrt_xi, n);
    let th = tape.tanh(arg);
    let inv = tape.recip(arg);
    let factor = tape.mul(th, inv);
    let out = tape.scale(v, factor);
    clamp_graph(tape, out, ctx)
}

fn log0_graph(tape: &mut Tape, y: NodeId, ctx: BallCtx) -> NodeId {
    let n = tape.norm(y);
    if tape.scalar(n) < ZERO_EPS {
        return y;
    }
    let z = tape.mul(ctx.sqrt_xi, n);
    let at = tape.atanh(z);
    let inv = tape.recip(z);
    let factor = tape.mul(at, inv);
    tape.scale(y, factor)
}

fn mobius_graph(tape: &mut Tape, x: NodeId, y: NodeId, ctx: BallCtx) -> NodeId {
    let x2 = tape.dot(x, x);
    let y2 = tape.dot(y, y);
    let xy = tape.dot(x, y);
    let xi_xy = tape.mul(ctx.xi, xy);
    let two_xi_xy = tape.mul_const(xi_xy, 2.0);
    let xi_y2 = tape.mul(ctx.xi, y2);
    let a_sum = tape.add(two_xi_xy, xi_y2);
    let a = tape.add_const(a_sum, 1.0);
    let xi_x2 = tape.mul(ctx.xi, x2);
    let neg_xi_x2 = tape.neg(xi_x2);
    let b = tape.add_const(neg_xi_x2, 1.0);
    let xi_sq = tape.mul(ctx.xi, ctx.xi);
    let x2y2 = tape.mul(x2, y2);
    let den_term = tape.mul(xi_sq, x2y2);
    let den_sum = tape.add(two_xi_xy, den_term);
    let den = tape.add_const(den_sum, 1.0);
    let ax = tape.scale(x, a);
    let by = tape.scale(y, b);
    let num = tape.add(ax, by);
    let inv_den = tape.recip(den);
    let out = tape.scale(num, inv_den);
    clamp_graph(tape, out, ctx)
}

fn hyp_dist_graph(tape: &mut Tape, x: NodeId, y: NodeId, ctx: BallCtx) -> NodeId {
    let neg = tape.neg(x);
    let m = mobius_graph(tape, neg, y, ctx);
    let n = tape.norm(m);
    let z = tape.mul(ctx.sqrt_xi, n);
    let at = tape.atanh(z);
    let inv = tape.recip(ctx.sqrt_xi);
    let two_inv = tape.mul_const(inv, 2.0);
    tape.mul(two_inv, at)
}

fn build_head(
    tape: &mut Tape,
    kind: ModelKind,
    variant: ScoreVariant,
    e_h: NodeId,
    rel: &RelNodes,
) -> HeadNode {
    let spec = kind.spec();
    let mut cur = e_h;
    match spec.rot_e {
        Rotation::None => {}
        Rotation::Complex => {
            let cn = tape.complex_normalize(rel.rot_e.expect("rot_e leaf"));
            cur = tape.complex_mul(cur, cn);
        }
        Rotation::Quaternion => {
            let qn = tape.quat_normalize(rel.rot_e.expect("rot_e leaf"));
            cur = tape.quat_mul(cur, qn);
        }
    }
    if spec.trans_e {
        cur = tape.add(cur, rel.trans_e.expect("trans_e leaf"));
    }
    if !spec.hyperbolic {
        return if variant == ScoreVariant::InnerProduct {
            HeadNode::Inner(cur)
        } else {
            HeadNode::Euclid(cur)
        };
    }

    let xi = tape.softplus(rel.curv.expect("curvature leaf"));
    let sqrt_xi = tape.sqrt(xi);
    let ctx = BallCtx { xi, sqrt_xi };
    let mut ball = exp0_graph(tape, cur, ctx);
    match spec.rot_h {
        Rotation::None => {}
        Rotation::Complex => {
            let cn = tape.complex_normalize(rel.rot_h.expect("rot_h leaf"));
            ball = tape.complex_mul(ball, cn);
        }
        Rotation::Quaternion => {
            let qn = tape.quat_normalize(rel.rot_h.expect("rot_h leaf"));
            ball = tape.quat_mul(ball, qn);
        }
    }
    if spec.trans_h {
        let b_r = exp0_graph(tape, rel.trans_h.expect("trans_h leaf"), ctx);
        ball = mobius_graph(tape, ball, b_r, ctx);
    }
    if variant == ScoreVariant::ProjectInnerProduct {
        HeadNode::Inner(log0_graph(tape, ball, ctx))
    } else {
        HeadNode::Ball { point: ball, ctx }
    }
}

fn tail_score(tape: &mut Tape, head: &HeadNode, e_t: NodeId, b_h: NodeId, b_t: NodeId) -> NodeId {
    let raw = match head {
        HeadNode::Euclid(p) => {
            let diff = tape.sub(*p, e_t);
            let d = tape.norm(diff);
            tape.neg(d)
        }
        HeadNode::Inner(p) => tape.dot(*p, e_t),
        HeadNode::Ball { point, ctx } => {
            let b_tail = exp0_graph(tape, e_t, *ctx);
            let d = hyp_dist_graph(tape, *point, b_tail, *ctx);
            let d_sq = tape.mul(d, d);
            tape.neg(d_sq)
        }
    };
    let with_h = tape.add(raw, b_h);
    tape.add(with_h, b_t)
}

/// Forward (and optionally backward) pass for one triple and its negatives.
/// Returns the triple's loss and, when requested, the per-parameter
/// gradient contributions.
fn triple_pass(
    state: &ModelState,
    variant: ScoreVariant,
    triple: &Triple,
    negatives: &[usize],
    want_grads: bool,
) -> (f64, Contributions) {
    let mut tt = TripleTape::new(state.dim, 1 + negatives.len());
    let e_h = tt.entity(state, triple.h());
    let b_h = tt.bias(state, triple.h());
    let rel = relation_leaves(&mut tt, state, triple.r());
    let head = build_head(&mut tt.tape, state.kind, variant, e_h, &rel);

    // Positive term: log(1 + exp(-s)).
    let e_t = tt.entity(state, triple.t());
    let b_t = tt.bias(state, triple.t());
    let s_pos = tail_score(&mut tt.tape, &head, e_t, b_h, b_t);
    let neg_s = tt.tape.neg(s_pos);
    let mut loss = tt.tape.softplus(neg_s);

    // Negative terms: log(1 + exp(s)).
    for &neg_id in negatives {
        let e_n = tt.entity(state, neg_id);
        let b_n = tt.bias(state, neg_id);
        let s_neg = tail_score(&mut tt.tape, &head, e_n, b_h, b_n);
        let term = tt.tape.softplus(s_neg);
        loss = tt.tape.add(loss, term);
    }

    let loss_value = tt.tape.scalar(loss);
    if !want_grads {
        return (loss_value, Vec::new());
    }
    let grads = tt.tape.backward(loss);
    let contributions = tt
        .leaves
        .iter()
        .map(|(id, param)| (*param, grads.get(*id).to_vec()))
        .collect();
    (loss_value, contributions)
}

/// One training batch: each triple paired with its sampled negatives.
pub type Batch = [(Triple, Vec<usize>)];

/// Mean loss over the batch, computed on the same graph the gradients use.
pub fn batch_loss(state: &ModelState, batch: &Batch, variant: ScoreVariant) -> f64 {
    let total: f64 = batch
        .par_iter()
        .map(|(t, negs)| triple_pass(state, variant, t, negs, false).0)
        .sum();
    total / batch.len() as f64
}

/// Analytic gradients of the mean batch loss for every parameter. Returns
/// `(loss, gradients)`; gradient tensors mirror the state's shapes, and
/// parameters untouched by the batch keep exactly zero gradient.
pub fn gradients(state: &ModelState, batch: &Batch, variant: ScoreVariant) -> (f64, ParamTensors) {
    let per_triple: Vec<(f64, Contributions)> = batch
        .par_iter()
        .map(|(t, negs)| triple_pass(state, variant, t, negs, true))
        .collect();

    let mut grads = state.params.zeros_like();
    let mut loss_sum = 0.0;
    let dim = state.dim;
    for (loss, contributions) in per_triple {
        loss_sum += loss;
        for (param, g) in contributions {
            match param {
                ParamRef::Entity(v) => {
                    add_into(&mut grads.entity[v * dim..(v + 1) * dim], &g);
                }
                ParamRef::Bias(v) => grads.entity_bias[v] += g[0],
                ParamRef::RotE(r) => {
                    add_into(&mut grads.rot_e[r * dim..(r + 1) * dim], &g);
                }
                ParamRef::TransE(r) => {
                    add_into(&mut grads.trans_e[r * dim..(r + 1) * dim], &g);
                }
                ParamRef::RotH(r) => {
                    add_into(&mut grads.rot_h[r * dim..(r + 1) * dim], &g);
                }
                ParamRef::TransH(r) => {
                    add_into(&mut grads.trans_h[r * dim..(r + 1) * dim], &g);
                }
                ParamRef::Curv(r) => grads.curv_raw[r] += g[0],
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    for tensor in grads.as_list_mut() {
        for g in tensor.iter_mut() {
            *g *= scale;
        }
    }
    (loss_sum * scale, grads)
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Applies one optimizer update in place. `lr = 0` leaves parameters
/// bitwise unchanged.
pub fn optimizer_step(
    state: &mut ModelState,
    opt: &mut OptimizerState,
    grads: &ParamTensors,
    lr: f64,
) -> Result<(), TrainError> {
    for ((name, p), g) in TENSOR_NAMES
        .iter()
        .zip(state.params.as_list())
        .zip(grads.as_list())
    {
        if p.len() != g.len() {
            return Err(TrainError::ShapeMismatch {
                tensor: name,
                left: p.len(),
                right: g.len(),
            });
        }
    }
    opt.step += 1;
    match opt.kind {
        OptimizerKind::Adam => {
            let t = opt.step as f64;
            let bc1 = 1.0 - ADAM_BETA1.powf(t);
            let bc2 = 1.0 - ADAM_BETA2.powf(t);
            for ((p, g), (m, v)) in state
                .params
                .as_list_mut()
                .into_iter()
                .zip(grads.as_list())
                .zip(opt.m.as_list_mut().into_iter().zip(opt.v.as_list_mut()))
            {
                for i in 0..p.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
        OptimizerKind::Adagrad => {
            for ((p, g), v) in state
                .params
                .as_list_mut()
                .into_iter()
                .zip(grads.as_list())
                .zip(opt.v.as_list_mut())
            {
                for i in 0..p.len() {
                    v[i] += g[i] * g[i];
                    p[i] -= lr * g[i] / (v[i] + ADAGRAD_EPS).sqrt();
                }
            }
        }
    }
    Ok(())
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the best validation MRR (the final state when no
    /// validation ran).
    pub best: ModelState,
    pub final_state: ModelState,
    pub best_mrr: Option<f64>,
    pub log: Vec<EpochRecord>,
}

/// Trains from a fresh initialization; see [`train_with_progress`].
pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome, TrainError> {
    train_with_progress(config, dataset, |_| {})
}

/// Epoch loop over shuffled train batches with periodic filtered-MRR
/// validation, best-snapshot tracking, and patience-based early stopping.
pub fn train_with_progress(
    config: &TrainConfig,
    dataset: &Dataset,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome, TrainError> {
    let mut state = init_model(
        config.kind,
        dataset.n_entities(),
        dataset.n_relations(),
        config.dim,
        config.seed,
    )?;
    let mut opt = OptimizerState::new(config.optimizer, &state.params);
    let mut rng = StdRng::seed_from_u64(config.seed.wrapping_add(0x9E37_79B9_7F4A_7C15));

    let mut best: Option<(f64, ModelState)> = None;
    let mut stale_validations = 0usize;
    let mut log = Vec::new();
    let n_entities = dataset.n_entities();
    let mut order: Vec<usize> = (0..dataset.train.len()).collect();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_weighted = 0.0;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<(Triple, Vec<usize>)> = chunk
                .iter()
                .map(|&i| {
                    let t = dataset.train[i];
                    let negs = sample_negatives(&mut rng, n_entities, t.t(), config.negatives);
                    (t, negs)
                })
                .collect();
            let (loss, grads) = gradients(&state, &batch, config.variant);
            optimizer_step(&mut state, &mut opt, &grads, config.learning_rate)?;
            loss_weighted += loss * batch.len() as f64;
        }
        let epoch_loss = loss_weighted / dataset.train.len() as f64;

        let mut record = EpochRecord {
            epoch,
            loss: epoch_loss,
            valid_mrr: None,
        };
        let validate = config.validate_every > 0
            && epoch % config.validate_every == 0
            && !dataset.valid.is_empty();
        if validate {
            let metrics = eval::evaluate(&state, dataset, &dataset.valid, RankMode::Filtered)?;
            record.valid_mrr = Some(metrics.mrr);
            let improved = best.as_ref().is_none_or(|(mrr, _)| metrics.mrr > *mrr);
            if improved {
                best = Some((metrics.mrr, state.clone()));
                stale_validations = 0;
            } else {
                stale_validations += 1;
            }
        }
        progress(&record);
        log.push(record);
        if stale_validations >= config.patience {
            break;
        }
    }

    let (best_mrr, best_state) = match best {
        Some((mrr, s)) => (Some(mrr), s),
        None => (None, state.clone()),
    };
    Ok(TrainOutcome {
        best: best_state,
        final_state: state,
        best_mrr,
        log,
    })
}

/// Writes the log as line-delimited `epoch<TAB>loss<TAB>mrr` records; the
/// MRR column reads `NA` on epochs without validation.
pub fn write_training_log(path: &std::path::Path, log: &[EpochRecord]) -> std::io::Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    for rec in log {
        match rec.valid_mrr {
            Some(mrr) => writeln!(file, "{}\t{:.6}\t{:.6}", rec.epoch, rec.loss, mrr)?,
            None => writeln!(file, "{}\t{:.6}\tNA", rec.epoch, rec.loss)?,
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Finite-difference gradient gate
// ---------------------------------------------------------------------------

/// Result of the central-difference comparison for one kind and variant.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub kind: ModelKind,
    pub variant: ScoreVariant,
    pub dim: usize,
    pub max_rel_err: f64,
    pub params_checked: usize,
}

/// Compares analytic gradients against central finite differences
/// (`h = 1e-6`) on random small instances. The relative error uses
/// `max(|analytic|, |fd|, 1e-3)` as the denominator so that parameters
/// with near-zero gradients are compared absolutely at `1e-8`.
pub fn finite_difference_check(
    kind: ModelKind,
    variant: ScoreVariant,
    dim: usize,
    draws: usize,
    seed: u64,
) -> GradCheckReport {
    const H: f64 = 1e-6;
    let n_entities = 5;
    let n_relations = 2;
    let mut max_rel = 0.0f64;
    let mut params_checked = 0usize;

    for draw in 0..draws {
        let draw_seed = seed
            .wrapping_add(draw as u64)
            .wrapping_mul(0x5851_F42D_4C95_7F2D);
        let mut state = init_model(kind, n_entities, n_relations, dim, draw_seed).unwrap();
        let mut rng = StdRng::seed_from_u64(draw_seed ^ 0xC0FF_EE00);
        // Rescale rows to dimension-independent norms: far enough from the
        // origin to exercise the geometry, far enough from the boundary to
        // keep the finite-difference quotient clean.
        let spread_rows = |tensor: &mut [f64], lo: f64, hi: f64, rng: &mut StdRng| {
            for row in tensor.chunks_mut(dim) {
                let target = rng.random_range(lo..hi);
                let n = norm(row).max(1e-12);
                for v in row.iter_mut() {
                    *v *= target / n;
                }
            }
        };
        spread_rows(&mut state.params.entity, 0.05, 0.5, &mut rng);
        spread_rows(&mut state.params.trans_e, 0.05, 0.3, &mut rng);
        spread_rows(&mut state.params.trans_h, 0.05, 0.3, &mut rng);
        for b in state.params.entity_bias.iter_mut() {
            *b = rng.random_range(-0.2..0.2);
        }
        for c in state.params.curv_raw.iter_mut() {
            *c = rng.random_range(0.1..1.2);
        }

        let batch: Vec<(Triple, Vec<usize>)> = (0..2)
            .map(|_| {
                let h = rng.random_range(0..n_entities) as u32;
                let r = rng.random_range(0..n_relations) as u32;
                let t = rng.random_range(0..n_entities) as u32;
                let negs = sample_negatives(&mut rng, n_entities, t as usize, 2);
                (Triple::new(h, r, t), negs)
            })
            .collect();

        let (_, analytic) = gradients(&state, &batch, variant);
        let total = state.params.total_len();
        params_checked += total;
        let flat_analytic: Vec<f64> = analytic
            .as_list()
            .iter()
            .flat_map(|t| t.iter().copied())
            .collect();
        for (idx, &a) in flat_analytic.iter().enumerate() {
            let mut plus = state.clone();
            plus.params.add_flat(idx, H);
            let lp = batch_loss(&plus, &batch, variant);
            let mut minus = state.clone();
            minus.params.add_flat(idx, -H);
            let lm = batch_loss(&minus, &batch, variant);
            let fd = (lp - lm) / (2.0 * H);
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-3);
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }

    GradCheckReport {
        kind,
        variant,
        dim,
        max_rel_err: max_rel,
        params_checked,
    }
}

/// Every `(kind, variant)` pair the gradient gate must cover.
pub fn all_kind_variants() -> Vec<(ModelKind, ScoreVariant)> {
    crate::models::ALL_KINDS
        .iter()
        .flat_map(|&k| k.legal_variants().iter().map(move |&v| (k, v)))
        .collect()
}
