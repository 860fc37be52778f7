//! Trains the quaternion-rotation-plus-translation ball model (3H-TH) on a
//! synthetic 127-node binary tree and reports filtered link-prediction
//! metrics on a 10% held-out split.
//!
//! The toy graph carries the relation patterns the model family targets:
//! `child_of` / `parent_of` form an inversion pair, `sibling` is symmetric,
//! and `grandparent_of` is the composition `child_of⁻¹ ∘ child_of⁻¹`.
//!
//! ```bash
//! cargo run --release --example train_hierarchy [epochs] [batch_size]
//! ```

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use hykge::data::{Dataset, RawTriples};
use hykge::eval::{self, RankMode};
use hykge::models::ModelKind;
use hykge::training::{self, OptimizerKind, TrainConfig};

fn binary_tree_kg() -> RawTriples {
    let name = |i: usize| format!("n{i:03}");
    let mut triples: RawTriples = Vec::new();
    for child in 2..=127usize {
        let parent = child / 2;
        triples.push((name(child), "child_of".into(), name(parent)));
        triples.push((name(parent), "parent_of".into(), name(child)));
    }
    for parent in 1..=63usize {
        triples.push((name(2 * parent), "sibling".into(), name(2 * parent + 1)));
        triples.push((name(2 * parent + 1), "sibling".into(), name(2 * parent)));
    }
    for grandchild in 4..=127usize {
        triples.push((
            name(grandchild / 4),
            "grandparent_of".into(),
            name(grandchild),
        ));
    }
    triples
}

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let batch_size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(16);

    let mut triples = binary_tree_kg();
    let mut rng = StdRng::seed_from_u64(404);
    triples.shuffle(&mut rng);
    let held_out = triples.split_off(triples.len() - triples.len() / 10);
    println!(
        "tree KG: {} train triples, {} held out",
        triples.len(),
        held_out.len()
    );
    let dataset = Dataset::build(triples, held_out.clone(), held_out).expect("dataset");

    let mut config = TrainConfig::new(ModelKind::QuatTransH, 32);
    config.optimizer = OptimizerKind::Adam;
    config.learning_rate = 1e-3;
    config.negatives = 50;
    config.batch_size = batch_size;
    config.max_epochs = epochs;
    config.validate_every = 10;
    config.patience = usize::MAX;
    config.seed = 7;

    let start = std::time::Instant::now();
    let outcome = training::train_with_progress(&config, &dataset, |rec| {
        if let Some(mrr) = rec.valid_mrr {
            println!(
                "epoch {:>4}  loss {:.4}  valid MRR {:.4}",
                rec.epoch, rec.loss, mrr
            );
        }
    })
    .expect("training");
    println!("trained in {:?}", start.elapsed());

    let metrics = eval::evaluate(&outcome.best, &dataset, &dataset.test, RankMode::Filtered)
        .expect("evaluation");
    println!(
        "held-out filtered: MRR {:.4}  H@1 {:.4}  H@3 {:.4}  H@10 {:.4}  (n = {})",
        metrics.mrr, metrics.hits1, metrics.hits3, metrics.hits10, metrics.n
    );

    let per_rel =
        eval::per_relation_metrics(&outcome.best, &dataset, &dataset.test, RankMode::Filtered)
            .expect("per-relation metrics");
    let rows: Vec<(String, eval::Metrics)> = per_rel
        .into_iter()
        .map(|(r, m)| (dataset.vocab.relation_name(r).to_string(), m))
        .collect();
    println!("{}", eval::metrics_table(&rows));
}
