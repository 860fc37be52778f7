//! Ranking-based link prediction metrics and the paired significance test.
//!
//! For a query `(h, r, ?)` every entity is scored as a tail candidate.
//! Filtered mode removes candidates known true for `(h, r)` in any split
//! (never the query's own tail). Ties take the mean rank:
//! `rank = 1 + #strictly_greater + #equal / 2`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::data::{Dataset, Triple};
use crate::models::{self, ModelError, ModelState};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot evaluate an empty split")]
    EmptySplit,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero variance: all paired differences are identical")]
    ZeroVariance,
    #[error("paired test needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Whether known true tails are removed from the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    Filtered,
    Raw,
}

impl RankMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "filtered" => Some(RankMode::Filtered),
            "raw" => Some(RankMode::Raw),
            _ => None,
        }
    }
}

/// MRR and Hits@{1,3,10} over a set of queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub n: usize,
}

impl Metrics {
    pub fn from_ranks(ranks: &[f64]) -> Metrics {
        let n = ranks.len();
        let mut inv_sum = 0.0;
        let (mut h1, mut h3, mut h10) = (0usize, 0usize, 0usize);
        for &r in ranks {
            inv_sum += 1.0 / r;
            if r <= 1.0 {
                h1 += 1;
            }
            if r <= 3.0 {
                h3 += 1;
            }
            if r <= 10.0 {
                h10 += 1;
            }
        }
        let denom = n as f64;
        Metrics {
            mrr: inv_sum / denom,
            hits1: h1 as f64 / denom,
            hits3: h3 as f64 / denom,
            hits10: h10 as f64 / denom,
            n,
        }
    }
}

/// Mean-rank position of `true_tail`'s score among the unfiltered candidates.
///
/// `filtered_out` must be sorted; it never contains the true tail itself.
pub(crate) fn rank_given_scores(scores: &[f64], true_tail: usize, filtered_out: &[u32]) -> f64 {
    let s_true = scores[true_tail];
    let mut greater = 0usize;
    let mut equal = 0usize;
    let mut skip = filtered_out.iter().peekable();
    for (i, &s) in scores.iter().enumerate() {
        while let Some(&&f) = skip.peek() {
            if (f as usize) < i {
                skip.next();
            } else {
                break;
            }
        }
        if i == true_tail {
            continue;
        }
        if skip.peek() == Some(&&(i as u32)) {
            continue;
        }
        if s > s_true {
            greater += 1;
        } else if s == s_true {
            equal += 1;
        }
    }
    1.0 + greater as f64 + equal as f64 / 2.0
}

fn filtered_competitors(dataset: &Dataset, triple: &Triple, mode: RankMode) -> Vec<u32> {
    match mode {
        RankMode::Raw => Vec::new(),
        RankMode::Filtered => dataset
            .known_tails(triple.head, triple.relation)
            .iter()
            .copied()
            .filter(|&t| t != triple.tail)
            .collect(),
    }
}

/// Fractional rank of the true tail among all entities.
pub fn rank_tail(
    state: &ModelState,
    dataset: &Dataset,
    triple: &Triple,
    mode: RankMode,
) -> Result<f64, EvalError> {
    let all: Vec<usize> = (0..state.n_entities).collect();
    let scores = models::score(state, triple.h(), triple.r(), &all)?;
    let filtered = filtered_competitors(dataset, triple, mode);
    Ok(rank_given_scores(&scores, triple.t(), &filtered))
}

/// Fractional ranks for every triple of the split, in split order.
pub fn ranks(
    state: &ModelState,
    dataset: &Dataset,
    split: &[Triple],
    mode: RankMode,
) -> Result<Vec<f64>, EvalError> {
    split
        .par_iter()
        .map(|t| rank_tail(state, dataset, t, mode))
        .collect()
}

/// Tail-prediction metrics over a split.
pub fn evaluate(
    state: &ModelState,
    dataset: &Dataset,
    split: &[Triple],
    mode: RankMode,
) -> Result<Metrics, EvalError> {
    if split.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    Ok(Metrics::from_ranks(&ranks(state, dataset, split, mode)?))
}

/// Metrics averaged over both query directions. The dataset and model must
/// carry reciprocal relations (relation `r + n_r/2` reverses relation `r`),
/// as produced by [`Dataset::with_reciprocals`]. Each triple contributes a
/// `(h, r, ?)` and a `(t, r⁻¹, ?)` query.
pub fn evaluate_both_directions(
    state: &ModelState,
    dataset: &Dataset,
    split: &[Triple],
    mode: RankMode,
) -> Result<Metrics, EvalError> {
    if split.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let half = (dataset.n_relations() / 2) as u32;
    let queries: Vec<Triple> = split
        .iter()
        .flat_map(|t| [*t, Triple::new(t.tail, t.relation + half, t.head)])
        .collect();
    Ok(Metrics::from_ranks(&ranks(state, dataset, &queries, mode)?))
}

/// Per-relation metrics over the split; relations absent from the split are
/// absent from the map.
pub fn per_relation_metrics(
    state: &ModelState,
    dataset: &Dataset,
    split: &[Triple],
    mode: RankMode,
) -> Result<BTreeMap<u32, Metrics>, EvalError> {
    let all_ranks = ranks(state, dataset, split, mode)?;
    let mut by_relation: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (t, r) in split.iter().zip(all_ranks) {
        by_relation.entry(t.relation).or_default().push(r);
    }
    Ok(by_relation
        .into_iter()
        .map(|(rel, rs)| (rel, Metrics::from_ranks(&rs)))
        .collect())
}

// ---------------------------------------------------------------------------
// Paired Student t-test over per-query reciprocal ranks.
// ---------------------------------------------------------------------------

/// Statistics of the per-query differences `x − y` and the two-sided p.
#[derive(Debug, Clone, Copy)]
pub struct PairedTTest {
    pub mean_diff: f64,
    pub std: f64,
    pub var: f64,
    pub se: f64,
    pub t: f64,
    pub df: usize,
    pub p_two_sided: f64,
}

/// Paired t-test on two equal-length vectors of reciprocal ranks.
pub fn paired_t_test(rr_x: &[f64], rr_y: &[f64]) -> Result<PairedTTest, EvalError> {
    if rr_x.len() != rr_y.len() {
        return Err(EvalError::LengthMismatch {
            left: rr_x.len(),
            right: rr_y.len(),
        });
    }
    let n = rr_x.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples(n));
    }
    let diffs: Vec<f64> = rr_x.iter().zip(rr_y).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let std = var.sqrt();
    let se = std / (n as f64).sqrt();
    let t = mean / se;
    let df = n - 1;
    // Two-sided p = I_{ν/(ν+t²)}(ν/2, 1/2).
    let nu = df as f64;
    let x = nu / (nu + t * t);
    let p = incomplete_beta(nu / 2.0, 0.5, x);
    Ok(PairedTTest {
        mean_diff: mean,
        std,
        var,
        se,
        t,
        df,
        p_two_sided: p,
    })
}

/// Regularized incomplete beta `I_x(a, b)` via the Lentz continued fraction.
fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;
        let aa = m_f * (b - m_f) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m_f) * (qab + m_f) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation of `ln Γ(x)` for `x > 0`.
#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

// ---------------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------------

/// Aligned plain-text table of named metric rows.
pub fn metrics_table(rows: &[(String, Metrics)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _)| n.len())
        .chain(["slice".len()])
        .max()
        .unwrap_or(5);
    let mut out = format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>8}  {:>8}\n",
        "slice", "MRR", "H@1", "H@3", "H@10", "n"
    );
    for (name, m) in rows {
        out.push_str(&format!(
            "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8.4}  {:>8}\n",
            name, m.mrr, m.hits1, m.hits3, m.hits10, m.n
        ));
    }
    out
}

/// CSV with columns `slice,MRR,H@1,H@3,H@10,n`.
pub fn metrics_csv(rows: &[(String, Metrics)]) -> String {
    let mut out = String::from("slice,MRR,H@1,H@3,H@10,n\n");
    for (name, m) in rows {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{}\n",
            name, m.mrr, m.hits1, m.hits3, m.hits10, m.n
        ));
    }
    out
}
