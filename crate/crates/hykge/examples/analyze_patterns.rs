//! Dataset analytics on a toy graph exhibiting every relation pattern:
//! hierarchy scores, symmetry/antisymmetry/inversion/composition
//! detection, multiplicity counting, cardinality categories, and
//! relation frequencies.
//!
//! ```bash
//! cargo run --example analyze_patterns
//! ```

use hykge::analysis::{
    classify_complex, classify_multiplicity, classify_patterns, khs_adjacency_per_relation,
    khs_per_relation, relation_frequency, PatternThresholds, SplitSelection,
};
use hykge::data::{Dataset, RawTriples};

fn toy_kg() -> (RawTriples, RawTriples) {
    let mut train: RawTriples = Vec::new();
    // A hierarchy: ancestor chains (antisymmetric, Khs 1).
    for i in 0..30 {
        train.push((format!("h{i}"), "reports_to".into(), format!("h{}", i / 2)));
    }
    // A symmetric relation.
    for i in 0..15 {
        train.push((format!("a{i}"), "married_to".into(), format!("b{i}")));
        train.push((format!("b{i}"), "married_to".into(), format!("a{i}")));
    }
    // An inversion pair.
    for i in 0..15 {
        train.push((format!("x{i}"), "owns".into(), format!("y{i}")));
        train.push((format!("y{i}"), "owned_by".into(), format!("x{i}")));
    }
    // Composition: located_in ∘ located_in => located_in (transitive),
    // plus multiplicity: capital_of holds alongside located_in.
    for c in 0..20 {
        train.push((
            format!("city{c}"),
            "located_in".into(),
            format!("region{}", c % 5),
        ));
        train.push((
            format!("region{}", c % 5),
            "located_in".into(),
            "country".into(),
        ));
        train.push((format!("city{c}"), "located_in".into(), "country".into()));
        if c % 5 == 0 {
            train.push((
                format!("city{c}"),
                "capital_of".into(),
                format!("region{}", c % 5),
            ));
        }
    }
    let test: RawTriples = vec![
        ("a0".into(), "married_to".into(), "b1".into()),
        ("x1".into(), "owns".into(), "y2".into()),
        ("city1".into(), "located_in".into(), "region2".into()),
    ];
    (train, test)
}

fn main() {
    let (train, test) = toy_kg();
    let dataset = Dataset::build(train, Vec::new(), test).unwrap();
    let name = |r: u32| dataset.vocab.relation_name(r).to_string();

    println!("hierarchy scores (dyad on train / transitive closure):");
    let dyad = khs_adjacency_per_relation(&dataset, SplitSelection::Train);
    let closure = khs_per_relation(&dataset, SplitSelection::Train);
    for (&r, &d) in &dyad {
        println!(
            "  {:<12} dyad {:.3}  closure {:.3}",
            name(r),
            d,
            closure[&r]
        );
    }

    let report = classify_patterns(&dataset, &PatternThresholds::default());
    println!("\npattern classification:");
    for (&r, info) in &report.per_relation {
        let partners: Vec<String> = info.inverse_partners.iter().map(|&p| name(p)).collect();
        println!(
            "  {:<12} pairs {:>3}  reverse {:.2}  symmetric {:<5} antisymmetric {:<5} inverses {:?}",
            name(r),
            info.pairs,
            info.reverse_fraction,
            info.symmetric,
            info.antisymmetric,
            partners
        );
    }
    for w in &report.compositions {
        println!(
            "  composition: {} ∘ {} => {}  ({} paths, {:.0}% closed)",
            name(w.premise_first),
            name(w.premise_second),
            name(w.conclusion),
            w.paths,
            w.closed_fraction * 100.0
        );
    }

    let mult = classify_multiplicity(&dataset.train, true);
    println!(
        "\nmultiplicity: {} of {} train triples ({:.2}%)",
        mult.count,
        dataset.train.len(),
        mult.fraction * 100.0
    );

    println!("\ncardinality categories:");
    for (r, cat) in classify_complex(&dataset, 1.5) {
        println!("  {:<12} {}", name(r), cat.name());
    }

    println!("\ntrain relation frequencies:");
    for (r, (count, fraction)) in relation_frequency(&dataset.train).unwrap() {
        println!("  {:<12} {count:>4} ({:.1}%)", name(r), fraction * 100.0);
    }
}
