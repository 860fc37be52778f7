//! Tour of the Poincaré-ball primitives: exponential/logarithmic maps,
//! Möbius addition, hyperbolic distance, and the flat limit in which the
//! ball degenerates to Euclidean space.
//!
//! ```bash
//! cargo run --example geometry
//! ```

use hykge::hyperbolic::{
    curvature_from_raw, exp_map_zero, hyp_distance, log_map_zero, mobius_add, raw_from_curvature,
    BallPoint, TangentVector,
};

fn main() {
    let xi = 1.0;

    // Tangent vectors map into the ball and back.
    let v = TangentVector::new(vec![0.6, -0.3, 0.2]).unwrap();
    let p = exp_map_zero(&v, xi).unwrap();
    let back = log_map_zero(&p);
    println!("v          = {:?}", v.data());
    println!("exp0(v)    = {:?}", p.data());
    println!("log0(exp0) = {:?}", back.data());

    // Möbius addition is the ball's translation; 0 is its identity and
    // -x its inverse.
    let x = BallPoint::new(vec![0.3, 0.0, 0.0], xi).unwrap();
    let y = BallPoint::new(vec![0.4, 0.0, 0.0], xi).unwrap();
    let sum = mobius_add(&x, &y).unwrap();
    println!(
        "\nx ⊕ y      = {:?}  (collinear: (0.3+0.4)/(1+0.12) = 0.625)",
        sum.data()
    );
    let zero = mobius_add(&x, &x.negated()).unwrap();
    println!("x ⊕ (-x)   = {:?}", zero.data());

    // Distances grow without bound toward the boundary.
    let origin = BallPoint::origin(3, xi);
    for r in [0.1, 0.5, 0.9, 0.99, 0.999] {
        let q = BallPoint::new(vec![r, 0.0, 0.0], xi).unwrap();
        println!(
            "d(0, {r:<5}) = {:>8.4}   (Euclidean would be {r})",
            hyp_distance(&origin, &q).unwrap()
        );
    }

    // Curvature is trained through a softplus reparametrization.
    let raw = raw_from_curvature(1.0);
    println!("\nsoftplus({raw:.6}) = {:.6}", curvature_from_raw(raw));

    // As ξ → 0 the geometry flattens: distance approaches 2‖x − y‖ and
    // Möbius addition approaches vector addition.
    let a = TangentVector::new(vec![0.8, -0.4, 1.2]).unwrap();
    let b = TangentVector::new(vec![-0.2, 0.9, 0.5]).unwrap();
    let euclid: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    println!("\nflat limit (2‖a − b‖ = {:.6}):", 2.0 * euclid);
    for xi in [1.0, 0.1, 1e-4, 1e-8] {
        let pa = exp_map_zero(&a, xi).unwrap();
        let pb = exp_map_zero(&b, xi).unwrap();
        println!(
            "  ξ = {xi:<8.0e} d = {:.6}",
            hyp_distance(&pa, &pb).unwrap()
        );
    }
}
