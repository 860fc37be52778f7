//! Dataset-level relation-pattern analytics.
//!
//! Per relation this module measures hierarchy (the Krackhardt hierarchy
//! score over the relation's digraph), detects symmetry / antisymmetry /
//! inversion / composition under configurable thresholds, counts
//! multiplicity triples (the same entity pair connected by more than one
//! relation), buckets relations into 1-1 / 1-n / n-1 / n-n categories, and
//! tabulates relation frequencies.
//!
//! The Khs of a digraph is the fraction of ordered reachable pairs
//! `(u, v)`, `u ≠ v`, for which `v` cannot reach `u` back: 1 on trees and
//! DAGs, 0 on fully symmetric graphs. Mutually reachable pairs are exactly
//! the pairs inside one strongly connected component, so the score is
//! computed from per-node reach counts and an SCC decomposition.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::data::{Dataset, Triple};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("relation digraph has no edges")]
    EmptyGraph,
    #[error("cannot analyze an empty split")]
    EmptySplit,
}

/// A single relation's directed graph over entity ids.
#[derive(Debug, Clone)]
pub struct RelationDigraph {
    pub relation: u32,
    /// Deduplicated directed edges.
    pub edges: Vec<(u32, u32)>,
}

impl RelationDigraph {
    pub fn from_triples<'a>(
        relation: u32,
        triples: impl IntoIterator<Item = &'a Triple>,
    ) -> RelationDigraph {
        let triples = triples.into_iter();
        let mut edges: Vec<(u32, u32)> = triples
            .filter(|t| t.relation == relation)
            .map(|t| (t.head, t.tail))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        RelationDigraph { relation, edges }
    }
}

/// Which splits feed a dataset-level analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitSelection {
    Train,
    Valid,
    Test,
    /// Train plus valid: the graph visible before test time.
    TrainValid,
    /// Union of train, valid, and test.
    All,
}

impl SplitSelection {
    pub fn triples(self, dataset: &Dataset) -> Vec<&Triple> {
        match self {
            SplitSelection::Train => dataset.train.iter().collect(),
            SplitSelection::Valid => dataset.valid.iter().collect(),
            SplitSelection::Test => dataset.test.iter().collect(),
            SplitSelection::TrainValid => dataset.train.iter().chain(&dataset.valid).collect(),
            SplitSelection::All => dataset
                .train
                .iter()
                .chain(&dataset.valid)
                .chain(&dataset.test)
                .collect(),
        }
    }
}

/// Krackhardt hierarchy score of a relation digraph.
pub fn khs(graph: &RelationDigraph) -> Result<f64, AnalysisError> {
    if graph.edges.is_empty() {
        return Err(AnalysisError::EmptyGraph);
    }
    // Dense node indexing.
    let mut nodes: Vec<u32> = graph.edges.iter().flat_map(|&(h, t)| [h, t]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let index: HashMap<u32, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let n = nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(h, t) in &graph.edges {
        adj[index[&h]].push(index[&t]);
    }

    // Reachable ordered pairs via BFS from every node (u ≠ v).
    let mut reachable_pairs: u64 = 0;
    let mut stamp = vec![u32::MAX; n];
    let mut queue = Vec::new();
    for start in 0..n {
        queue.clear();
        queue.push(start);
        stamp[start] = start as u32;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &v in &adj[u] {
                if stamp[v] != start as u32 {
                    stamp[v] = start as u32;
                    queue.push(v);
                }
            }
        }
        // The start node was stamped up front; subtract it back out.
        reachable_pairs += (queue.len() - 1) as u64;
    }
    if reachable_pairs == 0 {
        // Only self-loops: vacuously hierarchical.
        return Ok(1.0);
    }

    // Mutually reachable pairs are pairs within one SCC.
    let scc_sizes = tarjan_scc_sizes(&adj);
    let mutual: u64 = scc_sizes.iter().map(|&s| (s as u64) * (s as u64 - 1)).sum();
    Ok(1.0 - mutual as f64 / reachable_pairs as f64)
}

/// Sizes of the strongly connected components (iterative Tarjan).
fn tarjan_scc_sizes(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut sizes = Vec::new();
    let mut next_index = 0usize;

    // Explicit DFS frames: (node, child offset).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (u, ref mut child)) = frames.last_mut() {
            if *child < adj[u].len() {
                let v = adj[u][*child];
                *child += 1;
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    lowlink[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    frames.push((v, 0));
                } else if on_stack[v] {
                    lowlink[u] = lowlink[u].min(index[v]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[u]);
                }
                if lowlink[u] == index[u] {
                    let mut size = 0;
                    loop {
                        let w = stack.pop().expect("SCC stack underflow");
                        on_stack[w] = false;
                        size += 1;
                        if w == u {
                            break;
                        }
                    }
                    sizes.push(size);
                }
            }
        }
    }
    sizes
}

/// Dyad-level hierarchy score: the fraction of directed edges `(u, v)`
/// whose reverse `(v, u)` is absent. This is the convention behind the
/// reference per-relation tables (computed there on the train split);
/// it agrees with [`khs`] on DAGs and on symmetric graphs but judges
/// asymmetry edge by edge rather than through the transitive closure.
pub fn khs_adjacency(graph: &RelationDigraph) -> Result<f64, AnalysisError> {
    if graph.edges.is_empty() {
        return Err(AnalysisError::EmptyGraph);
    }
    let edges: HashSet<(u32, u32)> = graph.edges.iter().copied().collect();
    let asymmetric = graph
        .edges
        .iter()
        .filter(|&&(h, t)| !edges.contains(&(t, h)))
        .count();
    Ok(asymmetric as f64 / graph.edges.len() as f64)
}

/// Khs for every relation present in the selected splits.
pub fn khs_per_relation(dataset: &Dataset, selection: SplitSelection) -> BTreeMap<u32, f64> {
    per_relation_score(dataset, selection, khs)
}

/// [`khs_adjacency`] for every relation present in the selected splits.
pub fn khs_adjacency_per_relation(
    dataset: &Dataset,
    selection: SplitSelection,
) -> BTreeMap<u32, f64> {
    per_relation_score(dataset, selection, khs_adjacency)
}

fn per_relation_score(
    dataset: &Dataset,
    selection: SplitSelection,
    score: impl Fn(&RelationDigraph) -> Result<f64, AnalysisError>,
) -> BTreeMap<u32, f64> {
    let triples = selection.triples(dataset);
    let mut relations: Vec<u32> = triples.iter().map(|t| t.relation).collect();
    relations.sort_unstable();
    relations.dedup();
    relations
        .into_iter()
        .filter_map(|r| {
            let graph = RelationDigraph::from_triples(r, triples.iter().copied());
            score(&graph).ok().map(|s| (r, s))
        })
        .collect()
}

/// Multiplicity extraction over one split.
#[derive(Debug, Clone)]
pub struct MultiplicityReport {
    /// Indices into the analyzed split, in split order.
    pub triple_indices: Vec<usize>,
    pub count: usize,
    pub fraction: f64,
    /// Whether the `(h, t)` pair was treated as directed.
    pub directed: bool,
}

/// A triple `(h, r, t)` is a multiplicity triple when another relation
/// `r' ≠ r` connects the same pair. The directed reading keys pairs as
/// `(h, t)`; the undirected variant merges `(h, t)` with `(t, h)`.
pub fn classify_multiplicity(split: &[Triple], directed: bool) -> MultiplicityReport {
    let mut relations_on_pair: HashMap<(u32, u32), HashSet<u32>> = HashMap::new();
    let key = |t: &Triple| {
        if directed || t.head <= t.tail {
            (t.head, t.tail)
        } else {
            (t.tail, t.head)
        }
    };
    for t in split {
        relations_on_pair
            .entry(key(t))
            .or_default()
            .insert(t.relation);
    }
    let triple_indices: Vec<usize> = split
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            relations_on_pair
                .get(&key(t))
                .map(|rels| rels.iter().any(|&r| r != t.relation))
                .unwrap_or(false)
        })
        .map(|(i, _)| i)
        .collect();
    let count = triple_indices.len();
    let fraction = if split.is_empty() {
        0.0
    } else {
        count as f64 / split.len() as f64
    };
    MultiplicityReport {
        triple_indices,
        count,
        fraction,
        directed,
    }
}

/// Cardinality category of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexCategory {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl ComplexCategory {
    pub fn name(self) -> &'static str {
        match self {
            ComplexCategory::OneToOne => "1-1",
            ComplexCategory::OneToMany => "1-n",
            ComplexCategory::ManyToOne => "n-1",
            ComplexCategory::ManyToMany => "n-n",
        }
    }
}

/// Buckets every train relation by its average tails-per-head and
/// heads-per-tail; a side is "n" when its average strictly exceeds the
/// threshold (1.5 by convention).
pub fn classify_complex(dataset: &Dataset, threshold: f64) -> BTreeMap<u32, ComplexCategory> {
    let mut count: HashMap<u32, usize> = HashMap::new();
    let mut heads: HashMap<u32, HashSet<u32>> = HashMap::new();
    let mut tails: HashMap<u32, HashSet<u32>> = HashMap::new();
    for t in &dataset.train {
        *count.entry(t.relation).or_default() += 1;
        heads.entry(t.relation).or_default().insert(t.head);
        tails.entry(t.relation).or_default().insert(t.tail);
    }
    count
        .into_iter()
        .map(|(r, n)| {
            let tails_per_head = n as f64 / heads[&r].len() as f64;
            let heads_per_tail = n as f64 / tails[&r].len() as f64;
            let category = match (tails_per_head > threshold, heads_per_tail > threshold) {
                (false, false) => ComplexCategory::OneToOne,
                (true, false) => ComplexCategory::OneToMany,
                (false, true) => ComplexCategory::ManyToOne,
                (true, true) => ComplexCategory::ManyToMany,
            };
            (r, category)
        })
        .collect()
}

/// Thresholds of the pattern classifiers.
#[derive(Debug, Clone)]
pub struct PatternThresholds {
    /// Reverse-present fraction at or above which a relation is symmetric.
    pub symmetry: f64,
    /// Reverse-present fraction at or below which it is antisymmetric.
    pub antisymmetry: f64,
    /// Minimum distinct pairs for the (anti)symmetry call.
    pub support: usize,
    /// Cross-reverse fraction (both ways) for an inversion pair.
    pub inversion: f64,
    /// Fraction of 2-paths closed by the conclusion relation.
    pub composition: f64,
    /// Minimum 2-path instances for a composition witness.
    pub composition_support: usize,
    /// Per-(r1, r2) cap on enumerated 2-paths; keeps hub-heavy datasets
    /// tractable. Enumeration order is deterministic.
    pub composition_path_cap: usize,
}

impl Default for PatternThresholds {
    fn default() -> Self {
        Self {
            symmetry: 0.8,
            antisymmetry: 0.05,
            support: 10,
            inversion: 0.8,
            composition: 0.5,
            composition_support: 50,
            composition_path_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelationPatternInfo {
    /// Distinct `(h, t)` pairs of the relation in the train split.
    pub pairs: usize,
    /// Fraction of pairs whose reverse pair is present for the relation.
    pub reverse_fraction: f64,
    pub symmetric: bool,
    pub antisymmetric: bool,
    /// Relations forming an inversion pair with this one.
    pub inverse_partners: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct CompositionWitness {
    pub premise_first: u32,
    pub premise_second: u32,
    pub conclusion: u32,
    pub paths: usize,
    pub closed_fraction: f64,
}

/// Test-split slice membership per pattern, as indices into the test split.
#[derive(Debug, Clone, Default)]
pub struct PatternSlices {
    pub symmetry: Vec<usize>,
    pub antisymmetry: Vec<usize>,
    pub inversion: Vec<usize>,
    pub composition: Vec<usize>,
    pub multiplicity: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PatternReport {
    pub per_relation: BTreeMap<u32, RelationPatternInfo>,
    pub compositions: Vec<CompositionWitness>,
    pub slices: PatternSlices,
}

/// Classifies relation patterns on the train split and slices the test
/// split accordingly. Symmetry, antisymmetry, and inversion membership is
/// relation-level; the composition slice collects test triples whose
/// relation concludes some witness; the multiplicity slice is triple-level
/// on the test split (directed pairs).
pub fn classify_patterns(dataset: &Dataset, thresholds: &PatternThresholds) -> PatternReport {
    // Distinct directed pairs per relation.
    let mut pairs_by_rel: BTreeMap<u32, HashSet<(u32, u32)>> = BTreeMap::new();
    for t in &dataset.train {
        pairs_by_rel
            .entry(t.relation)
            .or_default()
            .insert((t.head, t.tail));
    }

    let mut per_relation: BTreeMap<u32, RelationPatternInfo> = BTreeMap::new();
    for (&r, pairs) in &pairs_by_rel {
        let reversed = pairs
            .iter()
            .filter(|&&(h, t)| pairs.contains(&(t, h)))
            .count();
        let fraction = reversed as f64 / pairs.len() as f64;
        let supported = pairs.len() >= thresholds.support;
        per_relation.insert(
            r,
            RelationPatternInfo {
                pairs: pairs.len(),
                reverse_fraction: fraction,
                symmetric: supported && fraction >= thresholds.symmetry,
                antisymmetric: supported && fraction <= thresholds.antisymmetry,
                inverse_partners: Vec::new(),
            },
        );
    }

    // Inversion: r2 is a partner of r1 when most r1 pairs appear reversed
    // in r2 and vice versa.
    let rels: Vec<u32> = pairs_by_rel.keys().copied().collect();
    for (i, &r1) in rels.iter().enumerate() {
        for &r2 in &rels[i + 1..] {
            let p1 = &pairs_by_rel[&r1];
            let p2 = &pairs_by_rel[&r2];
            if p1.len() < thresholds.support || p2.len() < thresholds.support {
                continue;
            }
            let f12 =
                p1.iter().filter(|&&(h, t)| p2.contains(&(t, h))).count() as f64 / p1.len() as f64;
            let f21 =
                p2.iter().filter(|&&(h, t)| p1.contains(&(t, h))).count() as f64 / p2.len() as f64;
            if f12 >= thresholds.inversion && f21 >= thresholds.inversion {
                per_relation.get_mut(&r1).unwrap().inverse_partners.push(r2);
                per_relation.get_mut(&r2).unwrap().inverse_partners.push(r1);
            }
        }
    }

    let compositions = find_compositions(dataset, &pairs_by_rel, thresholds);

    // Test-split slices.
    let symmetric_rels: HashSet<u32> = per_relation
        .iter()
        .filter(|(_, info)| info.symmetric)
        .map(|(&r, _)| r)
        .collect();
    let antisymmetric_rels: HashSet<u32> = per_relation
        .iter()
        .filter(|(_, info)| info.antisymmetric)
        .map(|(&r, _)| r)
        .collect();
    let inversion_rels: HashSet<u32> = per_relation
        .iter()
        .filter(|(_, info)| !info.inverse_partners.is_empty())
        .map(|(&r, _)| r)
        .collect();
    let composition_rels: HashSet<u32> = compositions.iter().map(|w| w.conclusion).collect();

    let mut slices = PatternSlices {
        multiplicity: classify_multiplicity(&dataset.test, true).triple_indices,
        ..Default::default()
    };
    for (i, t) in dataset.test.iter().enumerate() {
        if symmetric_rels.contains(&t.relation) {
            slices.symmetry.push(i);
        }
        if antisymmetric_rels.contains(&t.relation) {
            slices.antisymmetry.push(i);
        }
        if inversion_rels.contains(&t.relation) {
            slices.inversion.push(i);
        }
        if composition_rels.contains(&t.relation) {
            slices.composition.push(i);
        }
    }

    PatternReport {
        per_relation,
        compositions,
        slices,
    }
}

fn find_compositions(
    dataset: &Dataset,
    pairs_by_rel: &BTreeMap<u32, HashSet<(u32, u32)>>,
    thresholds: &PatternThresholds,
) -> Vec<CompositionWitness> {
    // Outgoing edges per (node, relation) and relations per pair.
    let mut out_by_node_rel: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut in_by_node_rel: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut rels_on_pair: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for (&r, pairs) in pairs_by_rel {
        for &(h, t) in pairs {
            out_by_node_rel.entry((h, r)).or_default().push(t);
            in_by_node_rel.entry((t, r)).or_default().push(h);
            rels_on_pair.entry((h, t)).or_default().push(r);
        }
    }
    for v in out_by_node_rel.values_mut() {
        v.sort_unstable();
    }
    for v in in_by_node_rel.values_mut() {
        v.sort_unstable();
    }
    for v in rels_on_pair.values_mut() {
        v.sort_unstable();
        v.dedup();
    }

    // Relation pairs that actually meet at some middle node.
    let mut rel_pairs: HashSet<(u32, u32)> = HashSet::new();
    let mut mids: Vec<u32> = in_by_node_rel.keys().map(|&(n, _)| n).collect();
    mids.sort_unstable();
    mids.dedup();
    let rels: Vec<u32> = pairs_by_rel.keys().copied().collect();
    for &mid in &mids {
        let incoming: Vec<u32> = rels
            .iter()
            .copied()
            .filter(|&r| in_by_node_rel.contains_key(&(mid, r)))
            .collect();
        let outgoing: Vec<u32> = rels
            .iter()
            .copied()
            .filter(|&r| out_by_node_rel.contains_key(&(mid, r)))
            .collect();
        for &r1 in &incoming {
            for &r2 in &outgoing {
                rel_pairs.insert((r1, r2));
            }
        }
    }
    let mut rel_pairs: Vec<(u32, u32)> = rel_pairs.into_iter().collect();
    rel_pairs.sort_unstable();

    let n_relations = dataset.n_relations();
    let mut witnesses = Vec::new();
    for (r1, r2) in rel_pairs {
        // Enumerate 2-paths h -r1-> mid -r2-> t, capped deterministically.
        let mut paths = 0usize;
        let mut closed = vec![0usize; n_relations];
        'outer: for &mid in &mids {
            let Some(heads) = in_by_node_rel.get(&(mid, r1)) else {
                continue;
            };
            let Some(tails) = out_by_node_rel.get(&(mid, r2)) else {
                continue;
            };
            for &h in heads {
                for &t in tails {
                    if h == t {
                        continue;
                    }
                    paths += 1;
                    if let Some(rels) = rels_on_pair.get(&(h, t)) {
                        for &r3 in rels {
                            closed[r3 as usize] += 1;
                        }
                    }
                    if paths >= thresholds.composition_path_cap {
                        break 'outer;
                    }
                }
            }
        }
        if paths < thresholds.composition_support {
            continue;
        }
        for (r3, &hits) in closed.iter().enumerate() {
            let fraction = hits as f64 / paths as f64;
            if fraction >= thresholds.composition {
                witnesses.push(CompositionWitness {
                    premise_first: r1,
                    premise_second: r2,
                    conclusion: r3 as u32,
                    paths,
                    closed_fraction: fraction,
                });
            }
        }
    }
    witnesses
}

/// Exact counts and recomputed fractions per relation of a split.
pub fn relation_frequency(split: &[Triple]) -> Result<BTreeMap<u32, (usize, f64)>, AnalysisError> {
    if split.is_empty() {
        return Err(AnalysisError::EmptySplit);
    }
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for t in split {
        *counts.entry(t.relation).or_default() += 1;
    }
    let total = split.len() as f64;
    Ok(counts
        .into_iter()
        .map(|(r, c)| (r, (c, c as f64 / total)))
        .collect())
}
