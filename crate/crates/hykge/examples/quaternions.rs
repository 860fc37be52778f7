//! Blockwise quaternion and complex rotation algebra: the Hamilton
//! product, its non-commutativity (the property that lets a model express
//! order-dependent relation composition), and norm preservation under
//! normalized rotations.
//!
//! ```bash
//! cargo run --example quaternions
//! ```

use hykge::algebra::{
    complex_normalize, complex_rotate, quat_dot, quat_hamilton_product, quat_normalize,
    ComplexVector, QuatVector,
};

fn quat(v: &[f64]) -> QuatVector {
    QuatVector::new(v.to_vec()).unwrap()
}

fn main() {
    // Hamilton's rules on the unit imaginaries.
    let i = quat(&[0.0, 1.0, 0.0, 0.0]);
    let j = quat(&[0.0, 0.0, 1.0, 0.0]);
    let ij = quat_hamilton_product(&i, &j).unwrap();
    let ji = quat_hamilton_product(&j, &i).unwrap();
    println!("i ⊗ j = {:?}   (= k)", ij.data());
    println!(
        "j ⊗ i = {:?}   (= -k): the product is non-commutative",
        ji.data()
    );

    // Composing two rotations in opposite orders moves an embedding to
    // different places.
    let e = quat(&[0.3, -0.7, 0.5, 0.2]);
    let a = quat_normalize(&quat(&[1.0, 2.0, 0.0, -1.0])).unwrap();
    let b = quat_normalize(&quat(&[0.5, 0.0, 1.5, 1.0])).unwrap();
    let e_ab = quat_hamilton_product(&quat_hamilton_product(&e, &a).unwrap(), &b).unwrap();
    let e_ba = quat_hamilton_product(&quat_hamilton_product(&e, &b).unwrap(), &a).unwrap();
    println!("\n(e ⊗ a) ⊗ b = {:?}", e_ab.data());
    println!("(e ⊗ b) ⊗ a = {:?}", e_ba.data());

    // Normalized rotations preserve the per-block norm.
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!(
        "\n‖e‖ = {:.6}, ‖e ⊗ a ⊗ b‖ = {:.6}",
        norm(e.data()),
        norm(e_ab.data())
    );

    // Dot product used by the quaternion inner-product score.
    println!(
        "(1,2,3,4)·(4,3,2,1) = {}",
        quat_dot(&quat(&[1.0, 2.0, 3.0, 4.0]), &quat(&[4.0, 3.0, 2.0, 1.0])).unwrap()
    );

    // The 2D analogue: unit-modulus complex pairs rotate in the plane and
    // commute, which is why plain 2D rotations cannot express
    // order-dependent composition.
    let e2 = ComplexVector::new(vec![1.0, 0.0, 0.6, 0.8]).unwrap();
    let c1 = complex_normalize(&ComplexVector::new(vec![1.0, 1.0, 0.0, 1.0]).unwrap()).unwrap();
    let c2 = complex_normalize(&ComplexVector::new(vec![0.5, -1.0, 1.0, 0.3]).unwrap()).unwrap();
    let r12 = complex_rotate(&complex_rotate(&e2, &c1).unwrap(), &c2).unwrap();
    let r21 = complex_rotate(&complex_rotate(&e2, &c2).unwrap(), &c1).unwrap();
    println!("\n2D rotations commute:");
    println!("  (e ∘ c1) ∘ c2 = {:?}", r12.data());
    println!("  (e ∘ c2) ∘ c1 = {:?}", r21.data());
}
