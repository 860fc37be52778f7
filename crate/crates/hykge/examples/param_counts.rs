//! Prints the parameter-count formula for every model kind on the two
//! Freebase benchmarks: entity embeddings plus relation degrees of
//! freedom (translation k, 2D rotation k/2, 3D rotation 3k/4 per stage).
//!
//! ```bash
//! cargo run --example param_counts
//! ```

use hykge::models::{param_count, ALL_KINDS};

fn main() {
    let datasets = [
        ("FB15K-237", 14_541usize, 237usize),
        ("FB15K", 14_951, 1_345),
    ];
    println!(
        "{:<12} {:>10} {:>18} {:>18}",
        "kind", "dof/k", "FB15K-237 (k=1)", "FB15K (k=1)"
    );
    for kind in ALL_KINDS {
        let (num, den) = kind.relation_dof_fraction();
        let counts: Vec<u64> = datasets
            .iter()
            .map(|&(_, e, r)| param_count(kind, e, r, 1))
            .collect();
        println!(
            "{:<12} {:>7}/{:<2} {:>18} {:>18}",
            kind.name(),
            num,
            den,
            counts[0],
            counts[1]
        );
    }
    println!("\nat k = 32 for FB15K:");
    for kind in ALL_KINDS {
        println!(
            "{:<12} {:>12}",
            kind.name(),
            param_count(kind, 14_951, 1_345, 32)
        );
    }
}
