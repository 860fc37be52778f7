//! Scores one triple under every model kind, shows the scoring variants,
//! and demonstrates the reduction lattice: the composite ball model
//! collapses to its component models when one stage is neutral.
//!
//! ```bash
//! cargo run --example score_models
//! ```

use hykge::models::{init_model, score_one, score_variant, ModelKind, ScoreVariant, ALL_KINDS};

fn main() {
    println!("{:<12} {:>12}   default scoring family", "kind", "s(h,r,t)");
    for kind in ALL_KINDS {
        let mut state = init_model(kind, 6, 2, 8, 42).unwrap();
        // Spread the tiny init so the scores are not all near zero.
        for v in state.params.entity.iter_mut() {
            *v *= 200.0;
        }
        let s = score_one(&state, 0, 0, 1).unwrap();
        println!("{:<12} {s:>12.6}   {}", kind.name(), kind.default_variant());
    }

    // The quaternion Euclidean model admits two scoring functions.
    let mut q = init_model(ModelKind::QuatE, 6, 2, 8, 42).unwrap();
    for v in q.params.entity.iter_mut() {
        *v *= 200.0;
    }
    println!("\n3E variants on the same state:");
    for variant in [ScoreVariant::InnerProduct, ScoreVariant::EuclideanDistance] {
        let s = score_variant(&q, 0, 0, &[1], variant).unwrap()[0];
        println!("  {variant:<22} {s:>12.6}");
    }

    // Reduction lattice: 3H-TH with zero translation is exactly 3H, and
    // with identity rotation exactly TH.
    let mut full = init_model(ModelKind::QuatTransH, 6, 2, 8, 7).unwrap();
    for v in full.params.entity.iter_mut() {
        *v *= 200.0;
    }
    for v in full.params.trans_h.iter_mut() {
        *v *= 200.0;
    }

    let mut no_translation = full.clone();
    no_translation.params.trans_h.fill(0.0);
    let mut rot_only = init_model(ModelKind::QuatH, 6, 2, 8, 7).unwrap();
    rot_only.params.entity = no_translation.params.entity.clone();
    rot_only.params.entity_bias = no_translation.params.entity_bias.clone();
    rot_only.params.rot_h = no_translation.params.rot_h.clone();
    rot_only.params.curv_raw = no_translation.params.curv_raw.clone();
    println!(
        "\n3H-TH, e_r = 0:   {:.12}\n3H, same params:  {:.12}",
        score_one(&no_translation, 0, 0, 1).unwrap(),
        score_one(&rot_only, 0, 0, 1).unwrap()
    );

    let mut no_rotation = full.clone();
    for block in no_rotation.params.rot_h.chunks_mut(4) {
        block.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
    }
    let mut trans_only = init_model(ModelKind::TransH, 6, 2, 8, 7).unwrap();
    trans_only.params.entity = no_rotation.params.entity.clone();
    trans_only.params.entity_bias = no_rotation.params.entity_bias.clone();
    trans_only.params.trans_h = no_rotation.params.trans_h.clone();
    trans_only.params.curv_raw = no_rotation.params.curv_raw.clone();
    println!(
        "3H-TH, q_r = 1:   {:.12}\nTH, same params:  {:.12}",
        score_one(&no_rotation, 0, 0, 1).unwrap(),
        score_one(&trans_only, 0, 0, 1).unwrap()
    );
}
