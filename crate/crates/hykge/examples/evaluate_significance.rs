//! Trains two different models on the same toy graph, compares their
//! filtered metrics, and runs the paired t-test over per-query reciprocal
//! ranks to decide whether the difference is significant.
//!
//! ```bash
//! cargo run --release --example evaluate_significance
//! ```

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use hykge::data::{Dataset, RawTriples};
use hykge::eval::{self, paired_t_test, Metrics, RankMode};
use hykge::models::{ModelKind, ModelState};
use hykge::training::{self, TrainConfig};

/// Two-generation family forest with asymmetric and symmetric relations.
fn family_kg() -> RawTriples {
    let mut triples: RawTriples = Vec::new();
    for f in 0..40 {
        let parent = format!("p{f}");
        for c in 0..3 {
            let child = format!("c{f}_{c}");
            triples.push((parent.clone(), "parent_of".into(), child.clone()));
            triples.push((child, "child_of".into(), parent.clone()));
        }
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    triples.push((format!("c{f}_{a}"), "sibling".into(), format!("c{f}_{b}")));
                }
            }
        }
    }
    triples
}

fn train(kind: ModelKind, dataset: &Dataset) -> ModelState {
    let mut config = TrainConfig::new(kind, 16);
    config.learning_rate = 2e-3;
    config.batch_size = 32;
    config.negatives = 20;
    config.max_epochs = 60;
    config.validate_every = 10;
    config.patience = 100;
    config.seed = 3;
    training::train(&config, dataset).unwrap().best
}

fn main() {
    let mut triples = family_kg();
    triples.shuffle(&mut StdRng::seed_from_u64(99));
    let held = triples.split_off(triples.len() - 60);
    let (valid, test) = held.split_at(30);
    let dataset = Dataset::build(triples, valid.to_vec(), test.to_vec()).unwrap();
    println!(
        "family KG: {} train / {} valid / {} test triples, {} entities",
        dataset.train.len(),
        dataset.valid.len(),
        dataset.test.len(),
        dataset.n_entities()
    );

    let ball = train(ModelKind::QuatTransH, &dataset);
    let flat = train(ModelKind::TransE, &dataset);

    let rows = vec![
        (
            "3H-TH".to_string(),
            eval::evaluate(&ball, &dataset, &dataset.test, RankMode::Filtered).unwrap(),
        ),
        (
            "TE".to_string(),
            eval::evaluate(&flat, &dataset, &dataset.test, RankMode::Filtered).unwrap(),
        ),
    ];
    println!("\n{}", eval::metrics_table(&rows));

    // Per-query reciprocal ranks feed the paired test.
    let rr = |state: &ModelState| -> Vec<f64> {
        eval::ranks(state, &dataset, &dataset.test, RankMode::Filtered)
            .unwrap()
            .into_iter()
            .map(|r| 1.0 / r)
            .collect()
    };
    match paired_t_test(&rr(&ball), &rr(&flat)) {
        Ok(t) => println!(
            "paired t-test: mean diff {:+.4}, std {:.4}, se {:.4}, t {:.3}, df {}, p {:.3e}",
            t.mean_diff, t.std, t.se, t.t, t.df, t.p_two_sided
        ),
        Err(e) => println!("paired t-test unavailable: {e}"),
    }

    // Filtered ranking can only improve on raw ranking.
    let raw: Metrics = eval::evaluate(&ball, &dataset, &dataset.test, RankMode::Raw).unwrap();
    println!(
        "\n3H-TH filtered MRR {:.4} vs raw MRR {:.4}",
        rows[0].1.mrr, raw.mrr
    );
}
