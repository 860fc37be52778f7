//! Parameter storage and scoring for the component and composite models.
//!
//! Every model combines up to four per-relation tensors — a Euclidean
//! rotation, a Euclidean translation, a hyperbolic rotation, and a
//! hyperbolic translation — plus a raw curvature for the hyperbolic kinds.
//! All parameters are stored as tangent-space (plain Euclidean) values;
//! hyperbolic kinds map entities into the ball with the exponential map at
//! score time and compare with the squared ball distance. Euclidean kinds
//! use the plain distance, except the quaternion model whose default score
//! is the rotated-head / tail inner product. Every score carries the two
//! entity biases `b_h + b_t`.

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::algebra::{
    complex_mul_into, complex_normalize_into, dot, quat_mul_into, quat_normalize_into, AlgebraError,
};
use crate::hyperbolic::{
    exp0_into, hyp_dist, log0_into, mobius_into, raw_from_curvature, softplus,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension {dim} is not divisible by {required} as required by {kind}")]
    BadDimension {
        kind: ModelKind,
        dim: usize,
        required: usize,
    },
    #[error("unknown {what} id {id} (count {count})")]
    UnknownId {
        what: &'static str,
        id: usize,
        count: usize,
    },
    #[error("scoring variant {variant} is not defined for {kind}")]
    IllegalVariant {
        kind: ModelKind,
        variant: ScoreVariant,
    },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Rotation flavor of a pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rotation {
    None,
    Complex,
    Quaternion,
}

/// Which tensors a [`ModelKind`] allocates and where its score lives.
#[derive(Debug, Clone, Copy)]
pub struct KindSpec {
    pub rot_e: Rotation,
    pub trans_e: bool,
    pub rot_h: Rotation,
    pub trans_h: bool,
    pub hyperbolic: bool,
}

/// The component models and the composite chains built from them.
///
/// Naming follows operation-then-space: `T` translation, `Rot` 2D rotation,
/// `Quat` 3D rotation; `E` Euclidean, `H` hyperbolic (Poincaré ball). The
/// canonical string forms are `TE`, `2E`, `3E`, `TH`, `2H`, `3H`, `2E-TE`,
/// `3E-TE`, `3H-TH`, `2E-TE-2H-TH`, and `3E-TE-3H-TH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// `TE`: translation in Euclidean space.
    TransE,
    /// `2E`: 2D rotation in Euclidean space.
    RotE,
    /// `3E`: quaternion rotation in Euclidean space.
    QuatE,
    /// `TH`: translation in the ball.
    TransH,
    /// `2H`: 2D rotation in the ball.
    RotH,
    /// `3H`: quaternion rotation in the ball.
    QuatH,
    /// `2E-TE`: 2D rotation then translation, Euclidean.
    RotTransE,
    /// `3E-TE`: quaternion rotation then translation, Euclidean.
    QuatTransE,
    /// `3H-TH`: quaternion rotation then Möbius translation in the ball.
    QuatTransH,
    /// `2E-TE-2H-TH`: Euclidean 2D stage feeding a hyperbolic 2D stage.
    RotTransEh,
    /// `3E-TE-3H-TH`: Euclidean quaternion stage feeding a hyperbolic one.
    QuatTransEh,
}

pub const ALL_KINDS: [ModelKind; 11] = [
    ModelKind::TransE,
    ModelKind::RotE,
    ModelKind::QuatE,
    ModelKind::TransH,
    ModelKind::RotH,
    ModelKind::QuatH,
    ModelKind::RotTransE,
    ModelKind::QuatTransE,
    ModelKind::QuatTransH,
    ModelKind::RotTransEh,
    ModelKind::QuatTransEh,
];

impl ModelKind {
    pub fn spec(self) -> KindSpec {
        use ModelKind::*;
        use Rotation::*;
        match self {
            TransE => KindSpec {
                rot_e: None,
                trans_e: true,
                rot_h: None,
                trans_h: false,
                hyperbolic: false,
            },
            RotE => KindSpec {
                rot_e: Complex,
                trans_e: false,
                rot_h: None,
                trans_h: false,
                hyperbolic: false,
            },
            QuatE => KindSpec {
                rot_e: Quaternion,
                trans_e: false,
                rot_h: None,
                trans_h: false,
                hyperbolic: false,
            },
            TransH => KindSpec {
                rot_e: None,
                trans_e: false,
                rot_h: None,
                trans_h: true,
                hyperbolic: true,
            },
            RotH => KindSpec {
                rot_e: None,
                trans_e: false,
                rot_h: Complex,
                trans_h: false,
                hyperbolic: true,
            },
            QuatH => KindSpec {
                rot_e: None,
                trans_e: false,
                rot_h: Quaternion,
                trans_h: false,
                hyperbolic: true,
            },
            RotTransE => KindSpec {
                rot_e: Complex,
                trans_e: true,
                rot_h: None,
                trans_h: false,
                hyperbolic: false,
            },
            QuatTransE => KindSpec {
                rot_e: Quaternion,
                trans_e: true,
                rot_h: None,
                trans_h: false,
                hyperbolic: false,
            },
            QuatTransH => KindSpec {
                rot_e: None,
                trans_e: false,
                rot_h: Quaternion,
                trans_h: true,
                hyperbolic: true,
            },
            RotTransEh => KindSpec {
                rot_e: Complex,
                trans_e: true,
                rot_h: Complex,
                trans_h: true,
                hyperbolic: true,
            },
            QuatTransEh => KindSpec {
                rot_e: Quaternion,
                trans_e: true,
                rot_h: Quaternion,
                trans_h: true,
                hyperbolic: true,
            },
        }
    }

    /// Canonical short name as used on the command line and in manifests.
    pub fn name(self) -> &'static str {
        use ModelKind::*;
        match self {
            TransE => "TE",
            RotE => "2E",
            QuatE => "3E",
            TransH => "TH",
            RotH => "2H",
            QuatH => "3H",
            RotTransE => "2E-TE",
            QuatTransE => "3E-TE",
            QuatTransH => "3H-TH",
            RotTransEh => "2E-TE-2H-TH",
            QuatTransEh => "3E-TE-3H-TH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect::<String>()
            .to_ascii_uppercase();
        use ModelKind::*;
        Some(match norm.as_str() {
            "TE" => TransE,
            "2E" => RotE,
            "3E" => QuatE,
            "TH" => TransH,
            "2H" => RotH,
            "3H" => QuatH,
            "2ETE" => RotTransE,
            "3ETE" => QuatTransE,
            "3HTH" => QuatTransH,
            "2ETE2HTH" => RotTransEh,
            "3ETE3HTH" => QuatTransEh,
            _ => return None,
        })
    }

    /// Smallest block size the embedding dimension must divide by.
    pub fn dim_divisor(self) -> usize {
        let spec = self.spec();
        let mut d = 1;
        for rot in [spec.rot_e, spec.rot_h] {
            d = d.max(match rot {
                Rotation::None => 1,
                Rotation::Complex => 2,
                Rotation::Quaternion => 4,
            });
        }
        d
    }

    /// The kind's native scoring family.
    pub fn default_variant(self) -> ScoreVariant {
        if self == ModelKind::QuatE {
            ScoreVariant::InnerProduct
        } else if self.spec().hyperbolic {
            ScoreVariant::HyperbolicDistance
        } else {
            ScoreVariant::EuclideanDistance
        }
    }

    /// Scoring variants defined for this kind.
    pub fn legal_variants(self) -> &'static [ScoreVariant] {
        use ScoreVariant::*;
        match self {
            ModelKind::QuatE => &[InnerProduct, EuclideanDistance],
            ModelKind::QuatTransH => &[HyperbolicDistance, ProjectInnerProduct],
            k if k.spec().hyperbolic => &[HyperbolicDistance],
            _ => &[EuclideanDistance],
        }
    }

    /// Relation degrees of freedom per dimension, as a fraction `num/den`.
    ///
    /// Translation contributes `k`, a 2D rotation `k/2` (unit modulus per
    /// pair) and a 3D rotation `3k/4` (unit norm per block).
    pub fn relation_dof_fraction(self) -> (u64, u64) {
        let spec = self.spec();
        // Accumulate over stages with denominator 4.
        let mut num = 0u64;
        for rot in [spec.rot_e, spec.rot_h] {
            num += match rot {
                Rotation::None => 0,
                Rotation::Complex => 2,
                Rotation::Quaternion => 3,
            };
        }
        if spec.trans_e {
            num += 4;
        }
        if spec.trans_h {
            num += 4;
        }
        (num, 4)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scoring-function variants; most kinds admit only their native one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreVariant {
    HyperbolicDistance,
    EuclideanDistance,
    InnerProduct,
    ProjectInnerProduct,
}

impl ScoreVariant {
    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::HyperbolicDistance => "hyperbolic-distance",
            ScoreVariant::EuclideanDistance => "euclidean-distance",
            ScoreVariant::InnerProduct => "inner-product",
            ScoreVariant::ProjectInnerProduct => "project-inner-product",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hyperbolic-distance" | "hyperbolic" => Some(ScoreVariant::HyperbolicDistance),
            "euclidean-distance" | "euclidean" => Some(ScoreVariant::EuclideanDistance),
            "inner-product" | "inner" => Some(ScoreVariant::InnerProduct),
            "project-inner-product" | "project" => Some(ScoreVariant::ProjectInnerProduct),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The seven parameter tensors, in checkpoint order. Tensors a kind does
/// not use are empty. Gradients and optimizer moments reuse this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensors {
    /// `n_e × k` entity embeddings (tangent space).
    pub entity: Vec<f64>,
    /// `n_e` per-entity score biases.
    pub entity_bias: Vec<f64>,
    /// `n_r × k` Euclidean-stage rotation parameters (raw, unnormalized).
    pub rot_e: Vec<f64>,
    /// `n_r × k` Euclidean-stage translations.
    pub trans_e: Vec<f64>,
    /// `n_r × k` hyperbolic-stage rotation parameters (raw, unnormalized).
    pub rot_h: Vec<f64>,
    /// `n_r × k` hyperbolic-stage translations (tangent space).
    pub trans_h: Vec<f64>,
    /// `n_r` raw curvatures; `ξ_r = softplus(raw)`.
    pub curv_raw: Vec<f64>,
}

pub const TENSOR_NAMES: [&str; 7] = [
    "entity",
    "entity_bias",
    "rot_e",
    "trans_e",
    "rot_h",
    "trans_h",
    "curv_raw",
];

impl ParamTensors {
    pub fn zeros_like(&self) -> Self {
        Self {
            entity: vec![0.0; self.entity.len()],
            entity_bias: vec![0.0; self.entity_bias.len()],
            rot_e: vec![0.0; self.rot_e.len()],
            trans_e: vec![0.0; self.trans_e.len()],
            rot_h: vec![0.0; self.rot_h.len()],
            trans_h: vec![0.0; self.trans_h.len()],
            curv_raw: vec![0.0; self.curv_raw.len()],
        }
    }

    pub fn as_list(&self) -> [&Vec<f64>; 7] {
        [
            &self.entity,
            &self.entity_bias,
            &self.rot_e,
            &self.trans_e,
            &self.rot_h,
            &self.trans_h,
            &self.curv_raw,
        ]
    }

    pub fn as_list_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [
            &mut self.entity,
            &mut self.entity_bias,
            &mut self.rot_e,
            &mut self.trans_e,
            &mut self.rot_h,
            &mut self.trans_h,
            &mut self.curv_raw,
        ]
    }

    pub fn total_len(&self) -> usize {
        self.as_list().iter().map(|t| t.len()).sum()
    }

    /// Flat-index access across all tensors, in [`TENSOR_NAMES`] order.
    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for t in self.as_list() {
            if idx < t.len() {
                return t[idx];
            }
            idx -= t.len();
        }
        panic!("flat index out of range");
    }

    pub fn add_flat(&mut self, mut idx: usize, delta: f64) {
        for t in self.as_list_mut() {
            if idx < t.len() {
                t[idx] += delta;
                return;
            }
            idx -= t.len();
        }
        panic!("flat index out of range");
    }
}

/// Full trainable state of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub kind: ModelKind,
    pub dim: usize,
    pub n_entities: usize,
    pub n_relations: usize,
    pub seed: u64,
    pub params: ParamTensors,
}

impl ModelState {
    pub fn entity_row(&self, v: usize) -> &[f64] {
        &self.params.entity[v * self.dim..(v + 1) * self.dim]
    }

    pub fn entity_row_mut(&mut self, v: usize) -> &mut [f64] {
        &mut self.params.entity[v * self.dim..(v + 1) * self.dim]
    }

    pub fn rot_e_row(&self, r: usize) -> &[f64] {
        &self.params.rot_e[r * self.dim..(r + 1) * self.dim]
    }

    pub fn trans_e_row(&self, r: usize) -> &[f64] {
        &self.params.trans_e[r * self.dim..(r + 1) * self.dim]
    }

    pub fn rot_h_row(&self, r: usize) -> &[f64] {
        &self.params.rot_h[r * self.dim..(r + 1) * self.dim]
    }

    pub fn trans_h_row(&self, r: usize) -> &[f64] {
        &self.params.trans_h[r * self.dim..(r + 1) * self.dim]
    }

    /// Per-relation curvature `ξ_r = softplus(raw)`.
    pub fn curvature(&self, r: usize) -> f64 {
        softplus(self.params.curv_raw[r])
    }

    fn check_entity(&self, v: usize) -> Result<(), ModelError> {
        if v >= self.n_entities {
            return Err(ModelError::UnknownId {
                what: "entity",
                id: v,
                count: self.n_entities,
            });
        }
        Ok(())
    }

    fn check_relation(&self, r: usize) -> Result<(), ModelError> {
        if r >= self.n_relations {
            return Err(ModelError::UnknownId {
                what: "relation",
                id: r,
                count: self.n_relations,
            });
        }
        Ok(())
    }
}

/// Allocates and randomly initializes a model.
///
/// Entities and translations start at `Normal(0, 1e-3²)`, raw rotation
/// components at `Normal(0, 1)`, biases at zero, and every relation
/// curvature at `ξ_r = 1`. The draw order is fixed, so equal seeds give
/// bitwise-equal states.
pub fn init_model(
    kind: ModelKind,
    n_entities: usize,
    n_relations: usize,
    dim: usize,
    seed: u64,
) -> Result<ModelState, ModelError> {
    let divisor = kind.dim_divisor();
    if !dim.is_multiple_of(divisor) {
        return Err(ModelError::BadDimension {
            kind,
            dim,
            required: divisor,
        });
    }
    let spec = kind.spec();
    let mut rng = StdRng::seed_from_u64(seed);
    let small = Normal::new(0.0, 1e-3).expect("valid stddev");
    let unit = Normal::new(0.0, 1.0).expect("valid stddev");
    let draw = |n: usize, dist: &Normal<f64>, rng: &mut StdRng| -> Vec<f64> {
        (0..n).map(|_| dist.sample(rng)).collect()
    };

    let entity = draw(n_entities * dim, &small, &mut rng);
    let rot_e = if spec.rot_e != Rotation::None {
        draw(n_relations * dim, &unit, &mut rng)
    } else {
        Vec::new()
    };
    let trans_e = if spec.trans_e {
        draw(n_relations * dim, &small, &mut rng)
    } else {
        Vec::new()
    };
    let rot_h = if spec.rot_h != Rotation::None {
        draw(n_relations * dim, &unit, &mut rng)
    } else {
        Vec::new()
    };
    let trans_h = if spec.trans_h {
        draw(n_relations * dim, &small, &mut rng)
    } else {
        Vec::new()
    };
    let curv_raw = if spec.hyperbolic {
        vec![raw_from_curvature(1.0); n_relations]
    } else {
        Vec::new()
    };

    Ok(ModelState {
        kind,
        dim,
        n_entities,
        n_relations,
        seed,
        params: ParamTensors {
            entity,
            entity_bias: vec![0.0; n_entities],
            rot_e,
            trans_e,
            rot_h,
            trans_h,
            curv_raw,
        },
    })
}

/// Head representation after the relation transform, ready to score tails.
pub(crate) enum TransformedHead {
    /// Compare with the raw tail embedding via `-‖x − e_t‖`.
    EuclidPoint(Vec<f64>),
    /// Score is `⟨x, e_t⟩`.
    InnerVec(Vec<f64>),
    /// Compare with `exp0(e_t)` via `-d(x, ·)²`.
    Ball { point: Vec<f64>, xi: f64 },
}

/// Applies the relation transform of `kind`/`variant` to the head entity.
pub(crate) fn transform_head(
    state: &ModelState,
    h: usize,
    r: usize,
    variant: ScoreVariant,
) -> Result<TransformedHead, ModelError> {
    let spec = state.kind.spec();
    let dim = state.dim;
    let mut cur = state.entity_row(h).to_vec();
    let mut scratch = vec![0.0; dim];

    // Euclidean stage.
    match spec.rot_e {
        Rotation::None => {}
        Rotation::Complex => {
            complex_normalize_into(&mut scratch, state.rot_e_row(r))?;
            let rotated = rotate_complex(&cur, &scratch);
            cur = rotated;
        }
        Rotation::Quaternion => {
            quat_normalize_into(&mut scratch, state.rot_e_row(r))?;
            let rotated = rotate_quat(&cur, &scratch);
            cur = rotated;
        }
    }
    if spec.trans_e {
        for (c, t) in cur.iter_mut().zip(state.trans_e_row(r)) {
            *c += t;
        }
    }

    if !spec.hyperbolic {
        return Ok(match variant {
            ScoreVariant::InnerProduct => TransformedHead::InnerVec(cur),
            _ => TransformedHead::EuclidPoint(cur),
        });
    }

    // Hyperbolic stage: map into the ball, rotate, Möbius-translate.
    let xi = state.curvature(r);
    let mut ball = vec![0.0; dim];
    exp0_into(&mut ball, &cur, xi);
    match spec.rot_h {
        Rotation::None => {}
        Rotation::Complex => {
            complex_normalize_into(&mut scratch, state.rot_h_row(r))?;
            ball = rotate_complex(&ball, &scratch);
        }
        Rotation::Quaternion => {
            quat_normalize_into(&mut scratch, state.rot_h_row(r))?;
            ball = rotate_quat(&ball, &scratch);
        }
    }
    if spec.trans_h {
        let mut b_r = vec![0.0; dim];
        exp0_into(&mut b_r, state.trans_h_row(r), xi);
        let mut sum = vec![0.0; dim];
        mobius_into(&mut sum, &ball, &b_r, xi);
        ball = sum;
    }

    if variant == ScoreVariant::ProjectInnerProduct {
        let mut tangent = vec![0.0; dim];
        log0_into(&mut tangent, &ball, xi);
        return Ok(TransformedHead::InnerVec(tangent));
    }
    Ok(TransformedHead::Ball { point: ball, xi })
}

fn rotate_complex(v: &[f64], c_normalized: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    complex_mul_into(&mut out, v, c_normalized);
    out
}

fn rotate_quat(v: &[f64], q_normalized: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    quat_mul_into(&mut out, v, q_normalized);
    out
}

pub(crate) fn score_tail(state: &ModelState, head: &TransformedHead, h: usize, t: usize) -> f64 {
    let bias = state.params.entity_bias[h] + state.params.entity_bias[t];
    let e_t = state.entity_row(t);
    match head {
        TransformedHead::EuclidPoint(p) => {
            let d_sq: f64 = p.iter().zip(e_t).map(|(a, b)| (a - b) * (a - b)).sum();
            -d_sq.sqrt() + bias
        }
        TransformedHead::InnerVec(p) => dot(p, e_t) + bias,
        TransformedHead::Ball { point, xi } => {
            let mut b_t = vec![0.0; e_t.len()];
            exp0_into(&mut b_t, e_t, *xi);
            let d = hyp_dist(point, &b_t, *xi);
            -d * d + bias
        }
    }
}

/// Scores `(h, r, t)` for every tail in `tails` under the kind's default
/// scoring function. Higher is better.
pub fn score(
    state: &ModelState,
    h: usize,
    r: usize,
    tails: &[usize],
) -> Result<Vec<f64>, ModelError> {
    score_variant(state, h, r, tails, state.kind.default_variant())
}

/// Scores under an explicit scoring variant.
pub fn score_variant(
    state: &ModelState,
    h: usize,
    r: usize,
    tails: &[usize],
    variant: ScoreVariant,
) -> Result<Vec<f64>, ModelError> {
    if !state.kind.legal_variants().contains(&variant) {
        return Err(ModelError::IllegalVariant {
            kind: state.kind,
            variant,
        });
    }
    state.check_entity(h)?;
    state.check_relation(r)?;
    for &t in tails {
        state.check_entity(t)?;
    }
    let head = transform_head(state, h, r, variant)?;
    Ok(tails
        .iter()
        .map(|&t| score_tail(state, &head, h, t))
        .collect())
}

/// Single-triple convenience wrapper around [`score`].
pub fn score_one(state: &ModelState, h: usize, r: usize, t: usize) -> Result<f64, ModelError> {
    Ok(score(state, h, r, &[t])?[0])
}

/// Total entity plus relation embedding parameters, rounded to the nearest
/// integer: `n_e·k + n_r·f·k` where `f` counts relation degrees of freedom
/// (translation `1`, 2D rotation `1/2`, 3D rotation `3/4` per stage).
/// Entity biases and curvatures are not included.
pub fn param_count(kind: ModelKind, n_entities: usize, n_relations: usize, dim: usize) -> u64 {
    let (num, den) = kind.relation_dof_fraction();
    let entity = n_entities as u128 * dim as u128;
    let relation_scaled = n_relations as u128 * dim as u128 * num as u128;
    // Round half-up in exact integer arithmetic.
    let relation = (relation_scaled + den as u128 / 2) / den as u128;
    (entity + relation) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_state(kind: ModelKind, dim: usize, seed: u64) -> ModelState {
        init_model(kind, 6, 3, dim, seed).unwrap()
    }

    /// Spreads parameters out so geometry is exercised away from the origin.
    fn widen(state: &mut ModelState) {
        for v in state.params.entity.iter_mut() {
            *v *= 150.0;
        }
        for v in state.params.trans_e.iter_mut() {
            *v *= 150.0;
        }
        for v in state.params.trans_h.iter_mut() {
            *v *= 150.0;
        }
        for (i, b) in state.params.entity_bias.iter_mut().enumerate() {
            *b = 0.01 * i as f64;
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(ModelKind::QuatTransH, 10, 4, 8, 7).unwrap();
        let b = init_model(ModelKind::QuatTransH, 10, 4, 8, 7).unwrap();
        assert_eq!(a, b);
        let c = init_model(ModelKind::QuatTransH, 10, 4, 8, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn allocation_matches_kind() {
        // TE allocates only the Euclidean translation.
        let te = small_state(ModelKind::TransE, 4, 0);
        assert!(te.params.rot_e.is_empty());
        assert!(!te.params.trans_e.is_empty());
        assert!(te.params.rot_h.is_empty());
        assert!(te.params.trans_h.is_empty());
        assert!(te.params.curv_raw.is_empty());

        // 3E-TE-3H-TH allocates all four relation tensors plus curvature.
        let full = small_state(ModelKind::QuatTransEh, 4, 0);
        assert!(!full.params.rot_e.is_empty());
        assert!(!full.params.trans_e.is_empty());
        assert!(!full.params.rot_h.is_empty());
        assert!(!full.params.trans_h.is_empty());
        assert_eq!(full.params.curv_raw.len(), 3);

        // Curvature starts at ξ = 1.
        assert!((full.curvature(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn init_rejects_bad_dimension() {
        assert!(matches!(
            init_model(ModelKind::QuatE, 4, 2, 6, 0).unwrap_err(),
            ModelError::BadDimension { required: 4, .. }
        ));
        assert!(matches!(
            init_model(ModelKind::RotE, 4, 2, 3, 0).unwrap_err(),
            ModelError::BadDimension { required: 2, .. }
        ));
        assert!(init_model(ModelKind::TransE, 4, 2, 3, 0).is_ok());
    }

    #[test]
    fn te_exact_translation_scores_zero() {
        let mut state = small_state(ModelKind::TransE, 4, 1);
        state
            .entity_row_mut(0)
            .copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        state
            .entity_row_mut(1)
            .copy_from_slice(&[1.0, 1.0, 0.0, 0.0]);
        state.params.trans_e[0..4].copy_from_slice(&[0.0, 1.0, 0.0, 0.0]);
        state.params.entity_bias.fill(0.0);
        assert_eq!(score_one(&state, 0, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn identity_3hth_scores_zero_on_equal_entities() {
        let mut state = small_state(ModelKind::QuatTransH, 4, 2);
        let row: Vec<f64> = vec![0.02, -0.03, 0.01, 0.04];
        state.entity_row_mut(0).copy_from_slice(&row);
        state.entity_row_mut(1).copy_from_slice(&row);
        state.params.rot_h[0..4].copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        state.params.trans_h[0..4].fill(0.0);
        state.params.entity_bias.fill(0.0);
        let s = score_one(&state, 0, 0, 1).unwrap();
        assert!(s.abs() < 1e-24, "s = {s}");
    }

    #[test]
    fn unknown_ids_are_rejected() {
        let state = small_state(ModelKind::TransE, 4, 3);
        assert!(matches!(
            score_one(&state, 99, 0, 1).unwrap_err(),
            ModelError::UnknownId { what: "entity", .. }
        ));
        assert!(matches!(
            score_one(&state, 0, 99, 1).unwrap_err(),
            ModelError::UnknownId {
                what: "relation",
                ..
            }
        ));
        assert!(matches!(
            score_one(&state, 0, 0, 99).unwrap_err(),
            ModelError::UnknownId { what: "entity", .. }
        ));
    }

    #[test]
    fn illegal_variants_are_rejected() {
        let te = small_state(ModelKind::TransE, 4, 4);
        assert!(matches!(
            score_variant(&te, 0, 0, &[1], ScoreVariant::InnerProduct).unwrap_err(),
            ModelError::IllegalVariant { .. }
        ));
        let hth = small_state(ModelKind::QuatTransH, 4, 4);
        assert!(matches!(
            score_variant(&hth, 0, 0, &[1], ScoreVariant::EuclideanDistance).unwrap_err(),
            ModelError::IllegalVariant { .. }
        ));
        assert!(score_variant(&hth, 0, 0, &[1], ScoreVariant::ProjectInnerProduct).is_ok());
    }

    #[test]
    fn reduction_3hth_with_zero_translation_equals_3h() {
        let mut full = small_state(ModelKind::QuatTransH, 8, 5);
        widen(&mut full);
        full.params.trans_h.fill(0.0);
        let mut plain = small_state(ModelKind::QuatH, 8, 99);
        plain.params.entity = full.params.entity.clone();
        plain.params.entity_bias = full.params.entity_bias.clone();
        plain.params.rot_h = full.params.rot_h.clone();
        plain.params.curv_raw = full.params.curv_raw.clone();
        for h in 0..4 {
            for r in 0..3 {
                let a = score_one(&full, h, r, 5).unwrap();
                let b = score_one(&plain, h, r, 5).unwrap();
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn reduction_3hth_with_identity_rotation_equals_th() {
        let mut full = small_state(ModelKind::QuatTransH, 8, 6);
        widen(&mut full);
        for block in full.params.rot_h.chunks_mut(4) {
            block.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        }
        let mut plain = small_state(ModelKind::TransH, 8, 98);
        plain.params.entity = full.params.entity.clone();
        plain.params.entity_bias = full.params.entity_bias.clone();
        plain.params.trans_h = full.params.trans_h.clone();
        plain.params.curv_raw = full.params.curv_raw.clone();
        for h in 0..4 {
            let a = score_one(&full, h, 1, 5).unwrap();
            let b = score_one(&plain, h, 1, 5).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reduction_2ete_with_identity_rotation_equals_te() {
        let mut full = small_state(ModelKind::RotTransE, 8, 7);
        widen(&mut full);
        for pair in full.params.rot_e.chunks_mut(2) {
            pair.copy_from_slice(&[1.0, 0.0]);
        }
        let mut plain = small_state(ModelKind::TransE, 8, 97);
        plain.params.entity = full.params.entity.clone();
        plain.params.entity_bias = full.params.entity_bias.clone();
        plain.params.trans_e = full.params.trans_e.clone();
        for h in 0..4 {
            let a = score_one(&full, h, 2, 5).unwrap();
            let b = score_one(&plain, h, 2, 5).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_relation_witness_for_2e() {
        // All phases π: every complex pair is (-1, 0).
        let mut state = small_state(ModelKind::RotE, 4, 8);
        widen(&mut state);
        for pair in state.params.rot_e.chunks_mut(2) {
            pair.copy_from_slice(&[-1.0, 0.0]);
        }
        for h in 0..3 {
            let forward = score_one(&state, h, 0, h + 3).unwrap();
            let backward = score_one(&state, h + 3, 0, h).unwrap();
            assert_eq!(forward, backward);
        }
    }

    #[test]
    fn composition_order_matters_for_3e_not_2e() {
        // Two 3E relations: pure i and pure j rotations on every block.
        let mut state = init_model(ModelKind::QuatE, 4, 2, 8, 9).unwrap();
        widen(&mut state);
        for block in state.params.rot_e[0..8].chunks_mut(4) {
            block.copy_from_slice(&[0.0, 1.0, 0.0, 0.0]);
        }
        for block in state.params.rot_e[8..16].chunks_mut(4) {
            block.copy_from_slice(&[0.0, 0.0, 1.0, 0.0]);
        }
        let compose = |state: &ModelState, first: usize, second: usize| -> Vec<f64> {
            let h1 = match transform_head(state, 0, first, ScoreVariant::InnerProduct).unwrap() {
                TransformedHead::InnerVec(v) => v,
                _ => unreachable!(),
            };
            let mut tmp = state.clone();
            tmp.entity_row_mut(0).copy_from_slice(&h1);
            match transform_head(&tmp, 0, second, ScoreVariant::InnerProduct).unwrap() {
                TransformedHead::InnerVec(v) => v,
                _ => unreachable!(),
            }
        };
        let ij = compose(&state, 0, 1);
        let ji = compose(&state, 1, 0);
        let gap = ij
            .iter()
            .zip(&ji)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap > 0.1, "3E composition gap = {gap}");

        // The 2E analogue commutes.
        let mut state2 = init_model(ModelKind::RotE, 4, 2, 8, 10).unwrap();
        widen(&mut state2);
        let compose2 = |state: &ModelState, first: usize, second: usize| -> Vec<f64> {
            let h1 = match transform_head(state, 0, first, ScoreVariant::EuclideanDistance).unwrap()
            {
                TransformedHead::EuclidPoint(v) => v,
                _ => unreachable!(),
            };
            let mut tmp = state.clone();
            tmp.entity_row_mut(0).copy_from_slice(&h1);
            match transform_head(&tmp, 0, second, ScoreVariant::EuclideanDistance).unwrap() {
                TransformedHead::EuclidPoint(v) => v,
                _ => unreachable!(),
            }
        };
        let ab = compose2(&state2, 0, 1);
        let ba = compose2(&state2, 1, 0);
        let gap2 = ab
            .iter()
            .zip(&ba)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap2 < 1e-12, "2E composition gap = {gap2}");
    }

    #[test]
    fn inner_product_variant_edge_cases() {
        let mut state = small_state(ModelKind::QuatE, 4, 11);
        // Zero tail leaves only the biases.
        state.entity_row_mut(1).fill(0.0);
        state.params.entity_bias[0] = 0.25;
        state.params.entity_bias[1] = -0.05;
        let s = score_variant(&state, 0, 0, &[1], ScoreVariant::InnerProduct).unwrap()[0];
        assert!((s - 0.2).abs() < 1e-15);

        // Identity rotation, identical unit head and tail: ‖e‖² + biases.
        let e = [0.5, 0.5, 0.5, 0.5];
        state.entity_row_mut(2).copy_from_slice(&e);
        state.entity_row_mut(3).copy_from_slice(&e);
        state.params.rot_e[0..4].copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        state.params.entity_bias[2] = 0.0;
        state.params.entity_bias[3] = 0.0;
        let s = score_variant(&state, 2, 0, &[3], ScoreVariant::InnerProduct).unwrap()[0];
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_limit_matches_euclidean_composite() {
        // 3H-TH at ξ = 1e-8 collapses to -4 · d_{3E-TE}² + biases.
        let mut hyp = small_state(ModelKind::QuatTransH, 8, 12);
        widen(&mut hyp);
        hyp.params.curv_raw.fill(raw_from_curvature(1e-8));
        let mut euc = small_state(ModelKind::QuatTransE, 8, 96);
        euc.params.entity = hyp.params.entity.clone();
        euc.params.entity_bias = hyp.params.entity_bias.clone();
        euc.params.rot_e = hyp.params.rot_h.clone();
        euc.params.trans_e = hyp.params.trans_h.clone();
        for h in 0..4 {
            for r in 0..3 {
                let s_h = score_one(&hyp, h, r, 5).unwrap();
                let bias = hyp.params.entity_bias[h] + hyp.params.entity_bias[5];
                let d_e = bias - score_one(&euc, h, r, 5).unwrap();
                let expected = -4.0 * d_e * d_e + bias;
                let rel = (s_h - expected).abs() / expected.abs().max(1e-9);
                assert!(rel < 1e-3, "rel err {rel}");
            }
        }
    }

    #[test]
    fn scores_stay_finite_at_the_boundary() {
        for kind in ALL_KINDS {
            let mut state = small_state(kind, 8, 13);
            // Head far outside any reasonable range: exp map clamps it.
            for v in state.entity_row_mut(0) {
                *v = 1e6;
            }
            for &variant in kind.legal_variants() {
                let s = score_variant(&state, 0, 0, &[1], variant).unwrap()[0];
                assert!(s.is_finite(), "{kind} {variant} gave {s}");
            }
        }
    }

    #[test]
    fn param_count_matches_reference_table() {
        // FB15K-237: 14,541 entities, 237 relations.
        assert_eq!(param_count(ModelKind::TransE, 14541, 237, 1), 14778);
        assert_eq!(param_count(ModelKind::RotE, 14541, 237, 1), 14660);
        assert_eq!(param_count(ModelKind::QuatE, 14541, 237, 1), 14719);
        assert_eq!(param_count(ModelKind::QuatTransH, 14541, 237, 1), 14956);
        assert_eq!(param_count(ModelKind::RotTransEh, 14541, 237, 1), 15252);
        assert_eq!(param_count(ModelKind::QuatTransEh, 14541, 237, 1), 15371);
        // FB15K: 14,951 entities, 1,345 relations.
        assert_eq!(param_count(ModelKind::TransE, 14951, 1345, 1), 16296);
        assert_eq!(param_count(ModelKind::QuatTransH, 14951, 1345, 1), 17305);
        assert_eq!(param_count(ModelKind::QuatTransEh, 14951, 1345, 1), 19659);
        // Degenerate dimension.
        assert_eq!(param_count(ModelKind::QuatTransH, 14951, 1345, 0), 0);
    }

    #[test]
    fn kind_names_roundtrip() {
        for kind in ALL_KINDS {
            assert_eq!(ModelKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(ModelKind::parse("3hth"), Some(ModelKind::QuatTransH));
        assert_eq!(ModelKind::parse("2e-te-2h-th"), Some(ModelKind::RotTransEh));
        assert_eq!(ModelKind::parse("bogus"), None);
    }

    // Straight-line scalar oracle for the scoring variants, written against
    // the formulas directly rather than the shared kernels.
    mod oracle {
        pub fn quat_normalize(q: &[f64]) -> Vec<f64> {
            let mut out = q.to_vec();
            for i in (0..q.len()).step_by(4) {
                let n =
                    (q[i] * q[i] + q[i + 1] * q[i + 1] + q[i + 2] * q[i + 2] + q[i + 3] * q[i + 3])
                        .sqrt();
                for j in 0..4 {
                    out[i + j] = q[i + j] / n;
                }
            }
            out
        }

        pub fn quat_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; a.len()];
            for i in (0..a.len()).step_by(4) {
                let (w1, x1, y1, z1) = (a[i], a[i + 1], a[i + 2], a[i + 3]);
                let (w2, x2, y2, z2) = (b[i], b[i + 1], b[i + 2], b[i + 3]);
                out[i] = w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2;
                out[i + 1] = w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2;
                out[i + 2] = w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2;
                out[i + 3] = w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2;
            }
            out
        }

        pub fn exp0(v: &[f64], xi: f64) -> Vec<f64> {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-15 {
                return v.to_vec();
            }
            let f = (xi.sqrt() * n).tanh() / (xi.sqrt() * n);
            v.iter().map(|x| x * f).collect()
        }

        pub fn log0(y: &[f64], xi: f64) -> Vec<f64> {
            let n = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-15 {
                return y.to_vec();
            }
            let f = (xi.sqrt() * n).atanh() / (xi.sqrt() * n);
            y.iter().map(|x| x * f).collect()
        }

        pub fn mobius(x: &[f64], y: &[f64], xi: f64) -> Vec<f64> {
            let x2: f64 = x.iter().map(|v| v * v).sum();
            let y2: f64 = y.iter().map(|v| v * v).sum();
            let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let a = 1.0 + 2.0 * xi * xy + xi * y2;
            let b = 1.0 - xi * x2;
            let den = 1.0 + 2.0 * xi * xy + xi * xi * x2 * y2;
            x.iter()
                .zip(y)
                .map(|(xc, yc)| (a * xc + b * yc) / den)
                .collect()
        }

        pub fn dist(x: &[f64], y: &[f64], xi: f64) -> f64 {
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let m = mobius(&neg, y, xi);
            let n = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            2.0 / xi.sqrt() * (xi.sqrt() * n).atanh()
        }
    }

    #[test]
    fn variant_scores_match_straight_line_oracle() {
        // QuatE, both variants.
        let mut q = small_state(ModelKind::QuatE, 8, 14);
        widen(&mut q);
        for h in 0..4 {
            for r in 0..3 {
                let rotated =
                    oracle::quat_mul(q.entity_row(h), &oracle::quat_normalize(q.rot_e_row(r)));
                let e_t = q.entity_row(5);
                let bias = q.params.entity_bias[h] + q.params.entity_bias[5];

                let inner: f64 = rotated.iter().zip(e_t).map(|(a, b)| a * b).sum();
                let got = score_variant(&q, h, r, &[5], ScoreVariant::InnerProduct).unwrap()[0];
                assert!((got - (inner + bias)).abs() < 1e-12);

                let d: f64 = rotated
                    .iter()
                    .zip(e_t)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let got =
                    score_variant(&q, h, r, &[5], ScoreVariant::EuclideanDistance).unwrap()[0];
                assert!((got - (-d + bias)).abs() < 1e-12);
            }
        }

        // 3H-TH, both variants.
        let mut s = small_state(ModelKind::QuatTransH, 8, 15);
        widen(&mut s);
        for h in 0..4 {
            for r in 0..3 {
                let xi = s.curvature(r);
                let b_h = oracle::exp0(s.entity_row(h), xi);
                let rotated = oracle::quat_mul(&b_h, &oracle::quat_normalize(s.rot_h_row(r)));
                let b_r = oracle::exp0(s.trans_h_row(r), xi);
                let transformed = oracle::mobius(&rotated, &b_r, xi);
                let bias = s.params.entity_bias[h] + s.params.entity_bias[5];

                let b_t = oracle::exp0(s.entity_row(5), xi);
                let d = oracle::dist(&transformed, &b_t, xi);
                let got =
                    score_variant(&s, h, r, &[5], ScoreVariant::HyperbolicDistance).unwrap()[0];
                assert!((got - (-d * d + bias)).abs() < 1e-12, "hyp mismatch");

                let proj = oracle::log0(&transformed, xi);
                let inner: f64 = proj.iter().zip(s.entity_row(5)).map(|(a, b)| a * b).sum();
                let got =
                    score_variant(&s, h, r, &[5], ScoreVariant::ProjectInnerProduct).unwrap()[0];
                assert!((got - (inner + bias)).abs() < 1e-12, "project mismatch");
            }
        }
    }
}
