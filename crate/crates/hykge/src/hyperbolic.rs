//! Poincaré-ball geometry with per-relation curvature.
//!
//! The ball of curvature `-ξ` (`ξ > 0`) is `B = { x : ξ‖x‖² < 1 }`. The
//! module provides the origin exponential and logarithmic maps
//!
//! ```text
//! exp0(v) = tanh(√ξ‖v‖) · v / (√ξ‖v‖)
//! log0(y) = atanh(√ξ‖y‖) · y / (√ξ‖y‖)
//! ```
//!
//! Möbius addition
//!
//! ```text
//! x ⊕ y = [(1 + 2ξ⟨x,y⟩ + ξ‖y‖²) x + (1 − ξ‖x‖²) y]
//!         / [1 + 2ξ⟨x,y⟩ + ξ²‖x‖²‖y‖²]
//! ```
//!
//! and the induced distance `d(x,y) = (2/√ξ) atanh(√ξ‖(−x) ⊕ y‖)`, plus
//! the general-point maps with conformal factor `λ_x = 2/(1 − ξ‖x‖²)`.
//!
//! Numerical guards: results of `exp` and `⊕` are rescaled to radius
//! `(1 − 1e-5)/√ξ` whenever they land closer to the boundary than that,
//! `atanh` arguments are clamped to `1 − 1e-15`, and norms below `1e-15`
//! short-circuit the removable singularity at the origin.

use thiserror::Error;

/// Points with `√ξ‖x‖ ≥ 1 − BALL_BOUNDARY_EPS` are rescaled inward.
pub const BALL_BOUNDARY_EPS: f64 = 1e-5;
/// `atanh` arguments are clamped to at most `1 − ATANH_EPS`.
pub const ATANH_EPS: f64 = 1e-15;
/// Norms below this are treated as exactly zero in the exp/log maps.
pub const ZERO_EPS: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum HyperbolicError {
    #[error("point lies outside the ball of curvature -{curvature}: ξ‖x‖² = {xi_norm_sq}")]
    PointOutsideBall { curvature: f64, xi_norm_sq: f64 },
    #[error("curvature mismatch: {left} vs {right}")]
    CurvatureMismatch { left: f64, right: f64 },
    #[error("curvature must be positive, got {0}")]
    NonPositiveCurvature(f64),
    #[error("non-finite component in input vector")]
    NonFinite,
}

/// A point strictly inside the Poincaré ball of curvature `-ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    data: Vec<f64>,
    curvature: f64,
}

impl BallPoint {
    pub fn new(data: Vec<f64>, curvature: f64) -> Result<Self, HyperbolicError> {
        if curvature <= 0.0 {
            return Err(HyperbolicError::NonPositiveCurvature(curvature));
        }
        let xi_norm_sq = curvature * norm_sq(&data);
        // NaN must also fail this guard.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(xi_norm_sq < 1.0) {
            return Err(HyperbolicError::PointOutsideBall {
                curvature,
                xi_norm_sq,
            });
        }
        Ok(Self { data, curvature })
    }

    pub fn origin(dim: usize, curvature: f64) -> Self {
        Self {
            data: vec![0.0; dim],
            curvature,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    /// The point `-x`, which lies in the same ball.
    pub fn negated(&self) -> Self {
        Self {
            data: self.data.iter().map(|v| -v).collect(),
            curvature: self.curvature,
        }
    }
}

/// A vector in the tangent space at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    data: Vec<f64>,
}

impl TangentVector {
    pub fn new(data: Vec<f64>) -> Result<Self, HyperbolicError> {
        if data.iter().any(|v| !v.is_finite()) {
            return Err(HyperbolicError::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: vec![0.0; dim],
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Maps a trainable raw curvature to `ξ = softplus(c) > 0`.
pub fn curvature_from_raw(c: f64) -> f64 {
    softplus(c)
}

/// Inverse of [`curvature_from_raw`]; `raw_from_curvature(1.0) ≈ 0.5413`.
pub fn raw_from_curvature(xi: f64) -> f64 {
    // softplus⁻¹(y) = ln(e^y − 1)
    (xi.exp() - 1.0).ln()
}

/// Exponential map at the origin; the result is clamped into the ball.
pub fn exp_map_zero(v: &TangentVector, curvature: f64) -> Result<BallPoint, HyperbolicError> {
    if curvature <= 0.0 {
        return Err(HyperbolicError::NonPositiveCurvature(curvature));
    }
    let mut out = vec![0.0; v.data.len()];
    exp0_into(&mut out, &v.data, curvature);
    Ok(BallPoint {
        data: out,
        curvature,
    })
}

/// Logarithmic map at the origin.
pub fn log_map_zero(y: &BallPoint) -> TangentVector {
    let mut out = vec![0.0; y.data.len()];
    log0_into(&mut out, &y.data, y.curvature);
    TangentVector { data: out }
}

/// Möbius addition `x ⊕ y`; the result is clamped into the ball.
pub fn mobius_add(x: &BallPoint, y: &BallPoint) -> Result<BallPoint, HyperbolicError> {
    if x.curvature != y.curvature {
        return Err(HyperbolicError::CurvatureMismatch {
            left: x.curvature,
            right: y.curvature,
        });
    }
    let mut out = vec![0.0; x.data.len()];
    mobius_into(&mut out, &x.data, &y.data, x.curvature);
    Ok(BallPoint {
        data: out,
        curvature: x.curvature,
    })
}

/// Hyperbolic distance `(2/√ξ) atanh(√ξ‖(−x) ⊕ y‖)`.
pub fn hyp_distance(x: &BallPoint, y: &BallPoint) -> Result<f64, HyperbolicError> {
    if x.curvature != y.curvature {
        return Err(HyperbolicError::CurvatureMismatch {
            left: x.curvature,
            right: y.curvature,
        });
    }
    Ok(hyp_dist(&x.data, &y.data, x.curvature))
}

/// Exponential map at a general base point `x`.
pub fn exp_map_at(x: &BallPoint, v: &TangentVector) -> BallPoint {
    let xi = x.curvature;
    let n = norm(&v.data);
    if n < ZERO_EPS {
        return x.clone();
    }
    let sqrt_xi = xi.sqrt();
    let lambda = 2.0 / (1.0 - xi * norm_sq(&x.data));
    let factor = (sqrt_xi * lambda * n / 2.0).tanh() / (sqrt_xi * n);
    let scaled: Vec<f64> = v.data.iter().map(|c| c * factor).collect();
    let mut out = vec![0.0; x.data.len()];
    mobius_into(&mut out, &x.data, &scaled, xi);
    BallPoint {
        data: out,
        curvature: xi,
    }
}

/// Logarithmic map at a general base point `x`.
pub fn log_map_at(x: &BallPoint, y: &BallPoint) -> Result<TangentVector, HyperbolicError> {
    if x.curvature != y.curvature {
        return Err(HyperbolicError::CurvatureMismatch {
            left: x.curvature,
            right: y.curvature,
        });
    }
    let xi = x.curvature;
    let neg_x: Vec<f64> = x.data.iter().map(|v| -v).collect();
    let mut delta = vec![0.0; x.data.len()];
    mobius_into(&mut delta, &neg_x, &y.data, xi);
    let n = norm(&delta);
    if n < ZERO_EPS {
        return Ok(TangentVector::zeros(x.data.len()));
    }
    let sqrt_xi = xi.sqrt();
    let lambda = 2.0 / (1.0 - xi * norm_sq(&x.data));
    let arg = (sqrt_xi * n).min(1.0 - ATANH_EPS);
    let factor = 2.0 / (sqrt_xi * lambda) * arg.atanh() / n;
    Ok(TangentVector {
        data: delta.iter().map(|c| c * factor).collect(),
    })
}

// ---------------------------------------------------------------------------
// Slice kernels shared with the scoring hot path.
// ---------------------------------------------------------------------------

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

/// Numerically stable `ln(1 + exp(x))`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Rescales `x` to radius `(1 − 1e-5)/√ξ` when it sits at or beyond it.
pub(crate) fn clamp_ball(x: &mut [f64], xi: f64) {
    let sqrt_xi = xi.sqrt();
    let n = norm(x);
    if sqrt_xi * n >= 1.0 - BALL_BOUNDARY_EPS {
        let factor = (1.0 - BALL_BOUNDARY_EPS) / (sqrt_xi * n);
        for c in x.iter_mut() {
            *c *= factor;
        }
    }
}

pub(crate) fn exp0_into(out: &mut [f64], v: &[f64], xi: f64) {
    let n = norm(v);
    if n < ZERO_EPS {
        out.copy_from_slice(v);
        return;
    }
    let arg = xi.sqrt() * n;
    let factor = arg.tanh() / arg;
    for (o, c) in out.iter_mut().zip(v) {
        *o = c * factor;
    }
    clamp_ball(out, xi);
}

pub(crate) fn log0_into(out: &mut [f64], y: &[f64], xi: f64) {
    let n = norm(y);
    if n < ZERO_EPS {
        out.copy_from_slice(y);
        return;
    }
    let arg = (xi.sqrt() * n).min(1.0 - ATANH_EPS);
    let factor = arg.atanh() / (xi.sqrt() * n);
    for (o, c) in out.iter_mut().zip(y) {
        *o = c * factor;
    }
}

pub(crate) fn mobius_into(out: &mut [f64], x: &[f64], y: &[f64], xi: f64) {
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let a = 1.0 + 2.0 * xi * xy + xi * y2;
    let b = 1.0 - xi * x2;
    let den = 1.0 + 2.0 * xi * xy + xi * xi * x2 * y2;
    for ((o, xc), yc) in out.iter_mut().zip(x).zip(y) {
        *o = (a * xc + b * yc) / den;
    }
    clamp_ball(out, xi);
}

pub(crate) fn hyp_dist(x: &[f64], y: &[f64], xi: f64) -> f64 {
    let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
    let mut m = vec![0.0; x.len()];
    mobius_into(&mut m, &neg_x, y, xi);
    let sqrt_xi = xi.sqrt();
    let arg = (sqrt_xi * norm(&m)).min(1.0 - ATANH_EPS);
    2.0 / sqrt_xi * arg.atanh()
}
