//! Verifies the analytic gradients against central finite differences for
//! every model kind and scoring variant. This is the correctness gate for
//! the geometry calculus; the CLI exposes the same suite as
//! `hykge gradcheck`.
//!
//! ```bash
//! cargo run --release --example gradcheck [dim] [draws]
//! ```

use hykge::training::{all_kind_variants, finite_difference_check};

fn main() {
    let mut args = std::env::args().skip(1);
    let dim: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(8);
    let draws: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);

    println!("central differences, h = 1e-6, dim = {dim}, {draws} draws per pair\n");
    let mut worst: f64 = 0.0;
    for (kind, variant) in all_kind_variants() {
        let report = finite_difference_check(kind, variant, dim, draws, 7);
        println!(
            "{:<12} {:<22} max rel err {:.3e}  ({} params checked)",
            kind.name(),
            variant.name(),
            report.max_rel_err,
            report.params_checked
        );
        worst = worst.max(report.max_rel_err);
    }
    println!("\nworst: {worst:.3e} (tolerance 1e-5)");
    assert!(worst < 1e-5);
}
