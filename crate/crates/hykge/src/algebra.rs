//! Blockwise quaternion and complex algebra over embedding vectors.
//!
//! A length-`k` real vector is read either as `k/4` quaternion blocks
//! `(a, b, c, d)` or as `k/2` complex pairs `(re, im)`. Rotations act
//! block by block: the Hamilton product
//!
//! ```text
//! q1 ⊗ q2 = (a1a2 − b1b2 − c1c2 − d1d2)
//!         + (a1b2 + b1a2 + c1d2 − d1c2) i
//!         + (a1c2 − b1d2 + c1a2 + d1b2) j
//!         + (a1d2 + b1c2 − c1b2 + d1a2) k
//! ```
//!
//! for quaternions, and per-pair complex multiplication for 2D rotation.
//! Rotation parameters are normalized per block (unit quaternion) or per
//! pair (unit modulus), so applying them preserves block norms.

use thiserror::Error;

/// Per-block norms below this are treated as degenerate.
pub const ZERO_NORM_EPS: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("length {len} is not divisible by 4")]
    NotDivisibleBy4 { len: usize },
    #[error("length {len} is not divisible by 2")]
    NotDivisibleBy2 { len: usize },
    #[error("zero-norm quaternion block at block index {block}")]
    ZeroNormBlock { block: usize },
    #[error("zero-norm complex pair at pair index {pair}")]
    ZeroNormPair { pair: usize },
}

/// Real vector interpreted as quaternion blocks `(a, b, c, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuatVector {
    data: Vec<f64>,
}

impl QuatVector {
    pub fn new(data: Vec<f64>) -> Result<Self, AlgebraError> {
        if !data.len().is_multiple_of(4) {
            return Err(AlgebraError::NotDivisibleBy4 { len: data.len() });
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }
}

/// Real vector interpreted as complex pairs `(re, im)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<f64>,
}

impl ComplexVector {
    pub fn new(data: Vec<f64>) -> Result<Self, AlgebraError> {
        if !data.len().is_multiple_of(2) {
            return Err(AlgebraError::NotDivisibleBy2 { len: data.len() });
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }
}

/// Blockwise Hamilton product `q1 ⊗ q2`. Non-commutative.
pub fn quat_hamilton_product(q1: &QuatVector, q2: &QuatVector) -> Result<QuatVector, AlgebraError> {
    if q1.data.len() != q2.data.len() {
        return Err(AlgebraError::LengthMismatch {
            left: q1.data.len(),
            right: q2.data.len(),
        });
    }
    let mut out = vec![0.0; q1.data.len()];
    quat_mul_into(&mut out, &q1.data, &q2.data);
    Ok(QuatVector { data: out })
}

/// Divides each quaternion block by its Euclidean 4-norm.
pub fn quat_normalize(q: &QuatVector) -> Result<QuatVector, AlgebraError> {
    let mut out = vec![0.0; q.data.len()];
    quat_normalize_into(&mut out, &q.data)?;
    Ok(QuatVector { data: out })
}

/// Sum over all components of elementwise products.
pub fn quat_dot(q1: &QuatVector, q2: &QuatVector) -> Result<f64, AlgebraError> {
    if q1.data.len() != q2.data.len() {
        return Err(AlgebraError::LengthMismatch {
            left: q1.data.len(),
            right: q2.data.len(),
        });
    }
    Ok(dot(&q1.data, &q2.data))
}

/// Per-pair complex multiplication `e ∘ c`. The rotation argument is
/// expected to be normalized already (see [`complex_normalize`]).
pub fn complex_rotate(e: &ComplexVector, c: &ComplexVector) -> Result<ComplexVector, AlgebraError> {
    if e.data.len() != c.data.len() {
        return Err(AlgebraError::LengthMismatch {
            left: e.data.len(),
            right: c.data.len(),
        });
    }
    let mut out = vec![0.0; e.data.len()];
    complex_mul_into(&mut out, &e.data, &c.data);
    Ok(ComplexVector { data: out })
}

/// Divides each complex pair by its modulus.
pub fn complex_normalize(c: &ComplexVector) -> Result<ComplexVector, AlgebraError> {
    let mut out = vec![0.0; c.data.len()];
    complex_normalize_into(&mut out, &c.data)?;
    Ok(ComplexVector { data: out })
}

// ---------------------------------------------------------------------------
// Slice kernels. These carry the arithmetic shared by the checked public API,
// the scoring hot path, and the autodiff tape's forward pass.
// ---------------------------------------------------------------------------

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn quat_mul_into(out: &mut [f64], q1: &[f64], q2: &[f64]) {
    debug_assert_eq!(q1.len(), q2.len());
    debug_assert_eq!(out.len(), q1.len());
    for i in (0..q1.len()).step_by(4) {
        let (a1, b1, c1, d1) = (q1[i], q1[i + 1], q1[i + 2], q1[i + 3]);
        let (a2, b2, c2, d2) = (q2[i], q2[i + 1], q2[i + 2], q2[i + 3]);
        out[i] = a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2;
        out[i + 1] = a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2;
        out[i + 2] = a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2;
        out[i + 3] = a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2;
    }
}

pub(crate) fn quat_normalize_into(out: &mut [f64], q: &[f64]) -> Result<(), AlgebraError> {
    debug_assert_eq!(out.len(), q.len());
    for (block, i) in (0..q.len()).step_by(4).enumerate() {
        let n =
            (q[i] * q[i] + q[i + 1] * q[i + 1] + q[i + 2] * q[i + 2] + q[i + 3] * q[i + 3]).sqrt();
        if n <= ZERO_NORM_EPS {
            return Err(AlgebraError::ZeroNormBlock { block });
        }
        out[i] = q[i] / n;
        out[i + 1] = q[i + 1] / n;
        out[i + 2] = q[i + 2] / n;
        out[i + 3] = q[i + 3] / n;
    }
    Ok(())
}

pub(crate) fn complex_mul_into(out: &mut [f64], e: &[f64], c: &[f64]) {
    debug_assert_eq!(e.len(), c.len());
    debug_assert_eq!(out.len(), e.len());
    for i in (0..e.len()).step_by(2) {
        let (re, im) = (e[i], e[i + 1]);
        let (cr, ci) = (c[i], c[i + 1]);
        out[i] = re * cr - im * ci;
        out[i + 1] = re * ci + im * cr;
    }
}

pub(crate) fn complex_normalize_into(out: &mut [f64], c: &[f64]) -> Result<(), AlgebraError> {
    debug_assert_eq!(out.len(), c.len());
    for (pair, i) in (0..c.len()).step_by(2).enumerate() {
        let n = (c[i] * c[i] + c[i + 1] * c[i + 1]).sqrt();
        if n <= ZERO_NORM_EPS {
            return Err(AlgebraError::ZeroNormPair { pair });
        }
        out[i] = c[i] / n;
        out[i + 1] = c[i + 1] / n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quat(v: &[f64]) -> QuatVector {
        QuatVector::new(v.to_vec()).unwrap()
    }

    fn cplx(v: &[f64]) -> ComplexVector {
        ComplexVector::new(v.to_vec()).unwrap()
    }

    fn block_norms(v: &[f64], block: usize) -> Vec<f64> {
        v.chunks(block)
            .map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }

    #[test]
    fn hamilton_ij_equals_k() {
        let i = quat(&[0.0, 1.0, 0.0, 0.0]);
        let j = quat(&[0.0, 0.0, 1.0, 0.0]);
        let k = quat_hamilton_product(&i, &j).unwrap();
        assert_eq!(k.data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn hamilton_identity_is_neutral() {
        let q = quat(&[0.3, -1.2, 0.7, 2.5, 1.0, 0.0, -0.5, 0.25]);
        let one = quat(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let out = quat_hamilton_product(&q, &one).unwrap();
        assert_eq!(out.data(), q.data());
    }

    #[test]
    fn hamilton_rejects_length_mismatch() {
        let a = quat(&[1.0, 0.0, 0.0, 0.0]);
        let b = quat(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            quat_hamilton_product(&a, &b).unwrap_err(),
            AlgebraError::LengthMismatch { left: 4, right: 8 }
        );
    }

    #[test]
    fn quat_vector_rejects_bad_length() {
        assert_eq!(
            QuatVector::new(vec![1.0; 6]).unwrap_err(),
            AlgebraError::NotDivisibleBy4 { len: 6 }
        );
        assert_eq!(
            ComplexVector::new(vec![1.0; 3]).unwrap_err(),
            AlgebraError::NotDivisibleBy2 { len: 3 }
        );
    }

    #[test]
    fn normalize_ones_block() {
        let q = quat(&[1.0, 1.0, 1.0, 1.0]);
        let n = quat_normalize(&q).unwrap();
        assert_eq!(n.data(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn normalize_scalar_quaternion() {
        let q = quat(&[2.0, 0.0, 0.0, 0.0]);
        let n = quat_normalize(&q).unwrap();
        assert_eq!(n.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_is_idempotent_on_unit_blocks() {
        let q = quat(&[0.5, 0.5, 0.5, 0.5]);
        let n = quat_normalize(&q).unwrap();
        for (a, b) in n.data().iter().zip(q.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_rejects_zero_block() {
        let q = quat(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(
            quat_normalize(&q).unwrap_err(),
            AlgebraError::ZeroNormBlock { block: 1 }
        );
    }

    #[test]
    fn dot_examples() {
        let a = quat(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(quat_dot(&a, &a).unwrap(), 4.0);
        let z = quat(&[0.0; 4]);
        assert_eq!(quat_dot(&a, &z).unwrap(), 0.0);
        // 1*4 + 2*3 + 3*2 + 4*1 = 20
        let b = quat(&[1.0, 2.0, 3.0, 4.0]);
        let c = quat(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(quat_dot(&b, &c).unwrap(), 20.0);
    }

    #[test]
    fn complex_rotate_examples() {
        // 90 degree rotation of the real unit.
        let e = cplx(&[1.0, 0.0]);
        let c = cplx(&[0.0, 1.0]);
        assert_eq!(complex_rotate(&e, &c).unwrap().data(), &[0.0, 1.0]);

        // Identity rotation.
        let e = cplx(&[0.3, -0.7, 1.5, 2.0]);
        let id = cplx(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(complex_rotate(&e, &id).unwrap().data(), e.data());

        // (0.6 + 0.8i)^2 = -0.28 + 0.96i
        let z = cplx(&[0.6, 0.8]);
        let sq = complex_rotate(&z, &z).unwrap();
        assert!((sq.data()[0] - -0.28).abs() < 1e-15);
        assert!((sq.data()[1] - 0.96).abs() < 1e-15);
    }

    #[test]
    fn complex_normalize_rejects_zero_pair() {
        let c = cplx(&[0.0, 0.0]);
        assert_eq!(
            complex_normalize(&c).unwrap_err(),
            AlgebraError::ZeroNormPair { pair: 0 }
        );
    }

    #[test]
    fn non_commutativity_witness() {
        // i ⊗ j = k while j ⊗ i = -k: the gap is 2 in the infinity norm.
        let i = quat(&[0.0, 1.0, 0.0, 0.0]);
        let j = quat(&[0.0, 0.0, 1.0, 0.0]);
        let ij = quat_hamilton_product(&i, &j).unwrap();
        let ji = quat_hamilton_product(&j, &i).unwrap();
        let gap = ij
            .data()
            .iter()
            .zip(ji.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap > 0.5, "gap = {gap}");
    }

    proptest! {
        #[test]
        fn unit_block_product_has_unit_norm(
            a in prop::collection::vec(-1.0f64..1.0, 8),
            b in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            prop_assume!(block_norms(&a, 4).iter().all(|n| *n > 1e-3));
            prop_assume!(block_norms(&b, 4).iter().all(|n| *n > 1e-3));
            let q1 = quat_normalize(&quat(&a)).unwrap();
            let q2 = quat_normalize(&quat(&b)).unwrap();
            let p = quat_hamilton_product(&q1, &q2).unwrap();
            for n in block_norms(p.data(), 4) {
                prop_assert!((n - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn hamilton_product_is_associative(
            a in prop::collection::vec(-2.0f64..2.0, 8),
            b in prop::collection::vec(-2.0f64..2.0, 8),
            c in prop::collection::vec(-2.0f64..2.0, 8),
        ) {
            let (qa, qb, qc) = (quat(&a), quat(&b), quat(&c));
            let left = quat_hamilton_product(&quat_hamilton_product(&qa, &qb).unwrap(), &qc).unwrap();
            let right = quat_hamilton_product(&qa, &quat_hamilton_product(&qb, &qc).unwrap()).unwrap();
            for (l, r) in left.data().iter().zip(right.data()) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }

        #[test]
        fn rotation_preserves_norms(
            e in prop::collection::vec(-2.0f64..2.0, 8),
            r in prop::collection::vec(-1.0f64..1.0, 8),
        ) {
            prop_assume!(block_norms(&r, 4).iter().all(|n| *n > 1e-3));
            prop_assume!(block_norms(&r, 2).iter().all(|n| *n > 1e-3));

            // Quaternion: per-block norms preserved.
            let q = quat_normalize(&quat(&r)).unwrap();
            let rotated = quat_hamilton_product(&quat(&e), &q).unwrap();
            for (before, after) in block_norms(&e, 4).iter().zip(block_norms(rotated.data(), 4)) {
                prop_assert!((before - after).abs() < 1e-12);
            }

            // Complex: per-pair moduli preserved.
            let c = complex_normalize(&cplx(&r)).unwrap();
            let rotated = complex_rotate(&cplx(&e), &c).unwrap();
            for (before, after) in block_norms(&e, 2).iter().zip(block_norms(rotated.data(), 2)) {
                prop_assert!((before - after).abs() < 1e-12);
            }
        }

        #[test]
        fn complex_rotations_commute(
            e in prop::collection::vec(-2.0f64..2.0, 6),
            c1 in prop::collection::vec(-1.0f64..1.0, 6),
            c2 in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let (e, c1, c2) = (cplx(&e), cplx(&c1), cplx(&c2));
            let ab = complex_rotate(&complex_rotate(&e, &c1).unwrap(), &c2).unwrap();
            let ba = complex_rotate(&complex_rotate(&e, &c2).unwrap(), &c1).unwrap();
            for (l, r) in ab.data().iter().zip(ba.data()) {
                prop_assert!((l - r).abs() < 1e-12);
            }
        }
    }
}
