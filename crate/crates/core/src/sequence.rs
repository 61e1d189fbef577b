//! Graph-sequence statistics: null-partition marking, discrete and limit
//! measure estimation per Hintikka chain, and stabilization diagnostics.
//!
//! The discrete measure assigns each depth-D chain the stable vertex count
//! along the tail of the sequence (possibly "infinite" when counts keep
//! growing), the limit measure assigns the exact vertex fraction in the
//! last graph. Both are estimates from a finite window; anything that fails
//! to stabilize is reported as unstable, never guessed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, RootedKTree, VertexId};
use crate::hintikka::{ChainPrefix, HintikkaError, TypeInterner, TypeTrie};

pub type Rational = Ratio<i64>;

pub fn ratio_to_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn ratio_from_string(s: &str) -> Option<Rational> {
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num.trim().parse().ok()?;
        let d: i64 = den.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        Some(Rational::new(n, d))
    } else if let Some((int, frac)) = s.split_once('.') {
        // Decimal notation, e.g. 0.25.
        let int_part: i64 = if int.is_empty() { 0 } else { int.trim().parse().ok()? };
        let digits = frac.trim();
        if digits.is_empty() || digits.len() > 12 {
            return None;
        }
        let num: i64 = digits.parse().ok()?;
        let den = 10i64.pow(digits.len() as u32);
        Some(Rational::new(int_part * den + num, den))
    } else {
        let n: i64 = s.trim().parse().ok()?;
        Some(Rational::from_integer(n))
    }
}

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("sequence of length {len} is shorter than the window {window}")]
    TooShort { len: usize, window: usize },
    #[error("window must be at least 2")]
    WindowTooSmall,
    #[error("graphs disagree on arity k")]
    MixedArity,
    #[error("graph orders must be strictly increasing (position {0})")]
    NonIncreasing(usize),
    #[error("graphs must be unmarked before marking")]
    AlreadyMarked,
    #[error("graph {graph}: marking exceeded the cap of {cap} marks")]
    MarkCap { graph: usize, cap: usize },
    #[error("graph {graph}: marks below k0 = {k0} have gaps")]
    MissingMarks { graph: usize, k0: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Hintikka(#[from] HintikkaError),
}

/// Ordered collection of rooted k-trees with strictly increasing orders and
/// a shared arity.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    graphs: Vec<RootedKTree>,
}

impl GraphSequence {
    pub fn new(graphs: Vec<RootedKTree>) -> Result<GraphSequence, SequenceError> {
        if graphs.is_empty() {
            return Err(SequenceError::TooShort { len: 0, window: 1 });
        }
        let k = graphs[0].k();
        if graphs.iter().any(|g| g.k() != k) {
            return Err(SequenceError::MixedArity);
        }
        for i in 1..graphs.len() {
            if graphs[i].n() <= graphs[i - 1].n() {
                return Err(SequenceError::NonIncreasing(i));
            }
        }
        Ok(GraphSequence { graphs })
    }

    pub fn graphs(&self) -> &[RootedKTree] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn k(&self) -> usize {
        self.graphs[0].k()
    }
}

// ---------------------------------------------------------------------------
// Null-partition marking
// ---------------------------------------------------------------------------

/// Marking decisions per graph, in greedy order.
#[derive(Debug, Clone, Serialize)]
pub struct MarkingPlan {
    pub epsilon: String,
    pub radius: u32,
    /// Per graph: `(mark index, vertex)` in assignment order.
    pub assignments: Vec<Vec<(u32, VertexId)>>,
    pub mark_counts: Vec<usize>,
}

pub const DEFAULT_MARK_CAP: usize = 64;

fn component_sizes(g: &RootedKTree, removed: &BTreeSet<VertexId>) -> Vec<usize> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n as VertexId {
        if seen[start as usize] || removed.contains(&start) {
            continue;
        }
        let mut size = 0usize;
        let mut queue = VecDeque::from([start]);
        seen[start as usize] = true;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in g.neighbors(v) {
                if !seen[w as usize] && !removed.contains(&w) {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

fn largest_component(g: &RootedKTree, removed: &BTreeSet<VertexId>) -> usize {
    component_sizes(g, removed).into_iter().max().unwrap_or(0)
}

/// Greedily marks vertices of every graph until each residual component has
/// at most `epsilon * n` vertices: each step takes the vertex minimizing
/// the largest remaining component, tie-broken by larger degree and then
/// smaller id. Mark indices follow the greedy order.
pub fn mark_null_partition(
    seq: &GraphSequence,
    epsilon: Rational,
    radius: u32,
    cap: usize,
) -> Result<(GraphSequence, MarkingPlan), SequenceError> {
    if seq.graphs().iter().any(|g| !g.marks().is_empty()) {
        return Err(SequenceError::AlreadyMarked);
    }
    let mut marked_graphs = Vec::with_capacity(seq.len());
    let mut assignments = Vec::with_capacity(seq.len());
    let mut mark_counts = Vec::with_capacity(seq.len());
    for (gi, g) in seq.graphs().iter().enumerate() {
        let n = g.n();
        let bound_ok = |size: usize| {
            // size <= epsilon * n  <=>  size * den <= num * n
            (size as i64) * epsilon.denom() <= epsilon.numer() * n as i64
        };
        let mut removed: BTreeSet<VertexId> = BTreeSet::new();
        let mut plan: Vec<(u32, VertexId)> = Vec::new();
        while !bound_ok(largest_component(g, &removed)) {
            if plan.len() >= cap {
                return Err(SequenceError::MarkCap { graph: gi, cap });
            }
            let mut best: Option<(usize, usize, VertexId)> = None; // (worst, -deg, id)
            for v in 0..n as VertexId {
                if removed.contains(&v) {
                    continue;
                }
                removed.insert(v);
                let worst = largest_component(g, &removed);
                removed.remove(&v);
                let deg = g.neighbors(v).len();
                let candidate = (worst, usize::MAX - deg, v);
                if best.is_none_or(|b| candidate < b) {
                    best = Some(candidate);
                }
            }
            let (_, _, pick) = best.expect("graph has unmarked vertices");
            removed.insert(pick);
            plan.push((plan.len() as u32 + 1, pick));
        }
        marked_graphs.push(g.with_marks(&plan)?);
        mark_counts.push(plan.len());
        assignments.push(plan);
    }
    let plan = MarkingPlan {
        epsilon: ratio_to_string(&epsilon),
        radius,
        assignments,
        mark_counts,
    };
    Ok((GraphSequence { graphs: marked_graphs }, plan))
}

/// Whether the depth-D chain of each marked vertex `c_j` is the same in
/// every graph that carries mark j.
pub fn mark_type_stability(
    seq: &GraphSequence,
    depth: u8,
    interner: &mut TypeInterner,
) -> Result<BTreeMap<u32, bool>, SequenceError> {
    let trie = TypeTrie::build(seq.graphs(), depth, interner)?;
    let mut out = BTreeMap::new();
    let all_marks: BTreeSet<u32> = seq
        .graphs()
        .iter()
        .flat_map(|g| g.marks().keys().copied())
        .collect();
    for j in all_marks {
        let mut chains: Vec<ChainPrefix> = Vec::new();
        for (gi, g) in seq.graphs().iter().enumerate() {
            if let Some(v) = g.vertex_with_mark(j) {
                chains.push(trie.chains[gi][v as usize].clone());
            }
        }
        out.insert(j, chains.windows(2).all(|w| w[0] == w[1]));
    }
    Ok(out)
}

/// Per-graph largest residual component after removing `c_1..c_{k0}`, and
/// the smallest index from which the epsilon bound holds onward.
#[derive(Debug, Clone, Serialize)]
pub struct NullPartitionReport {
    /// Largest component fraction per graph; `None` when marks are missing.
    pub fractions: Vec<Option<String>>,
    /// Index (0-based) of the first graph from which every later graph
    /// satisfies the bound; `None` when no such index exists.
    pub settled_from: Option<usize>,
}

pub fn check_null_partitioned(
    seq: &GraphSequence,
    epsilon: Rational,
    k0: u32,
) -> Result<NullPartitionReport, SequenceError> {
    let mut fractions: Vec<Option<Rational>> = Vec::with_capacity(seq.len());
    for (gi, g) in seq.graphs().iter().enumerate() {
        let have: BTreeSet<u32> = g.marks().keys().copied().filter(|&j| j <= k0).collect();
        let complete = (1..=k0).all(|j| have.contains(&j));
        if !complete {
            // Gaps below the largest present mark are malformed input.
            if let Some(&max_present) = have.iter().max() {
                if (1..max_present).any(|j| !have.contains(&j)) {
                    return Err(SequenceError::MissingMarks { graph: gi, k0 });
                }
            }
            fractions.push(None);
            continue;
        }
        let removed: BTreeSet<VertexId> = (1..=k0)
            .map(|j| g.vertex_with_mark(j).unwrap())
            .collect();
        let worst = largest_component(g, &removed);
        fractions.push(Some(Rational::new(worst as i64, g.n() as i64)));
    }
    let ok = |f: &Option<Rational>| f.as_ref().is_some_and(|r| *r <= epsilon);
    let mut settled_from = None;
    for start in (0..seq.len()).rev() {
        if ok(&fractions[start]) {
            settled_from = Some(start);
        } else {
            break;
        }
    }
    Ok(NullPartitionReport {
        fractions: fractions
            .iter()
            .map(|f| f.as_ref().map(ratio_to_string))
            .collect(),
        settled_from,
    })
}

// ---------------------------------------------------------------------------
// Measure estimation
// ---------------------------------------------------------------------------

/// Discrete-measure verdict for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NuValue {
    Finite(u64),
    Infinite,
    Unstable,
}

impl NuValue {
    pub fn as_str(&self) -> String {
        match self {
            NuValue::Finite(c) => c.to_string(),
            NuValue::Infinite => "inf".into(),
            NuValue::Unstable => "unstable".into(),
        }
    }

    pub fn parse(s: &str) -> Option<NuValue> {
        match s {
            "inf" => Some(NuValue::Infinite),
            "unstable" => Some(NuValue::Unstable),
            _ => s.parse::<u64>().ok().map(NuValue::Finite),
        }
    }
}

/// Estimates at one depth: chain -> discrete count, limit fraction, and the
/// max fraction variation over the trailing window.
#[derive(Debug, Clone, Default)]
pub struct DepthTable {
    pub nu: BTreeMap<ChainPrefix, NuValue>,
    pub mu: BTreeMap<ChainPrefix, Rational>,
    pub variation: BTreeMap<ChainPrefix, Rational>,
}

/// Empirical discrete and limit measures per chain, at every depth up to D.
#[derive(Debug, Clone)]
pub struct MeasureEstimate {
    pub depth: u8,
    pub window: usize,
    pub growth_factor: u64,
    pub orders: Vec<usize>,
    /// `tables[d-1]` holds the depth-d table.
    pub tables: Vec<DepthTable>,
    /// Depth-D chains with infinite count and positive limit fraction.
    pub support: Vec<ChainPrefix>,
    /// Depth-D chains with finite count but positive last fraction: their
    /// mass vanishes in the limit.
    pub vanishing: Vec<ChainPrefix>,
}

pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_GROWTH_FACTOR: u64 = 4;

/// Realized chains at one depth, with per-graph counts.
fn chain_counts(trie: &TypeTrie, d: u8) -> BTreeMap<ChainPrefix, Vec<u64>> {
    let graphs = trie.chains.len();
    let mut counts: BTreeMap<ChainPrefix, Vec<u64>> = BTreeMap::new();
    for (gi, per_vertex) in trie.chains.iter().enumerate() {
        for chain in per_vertex {
            let prefix = chain[..d as usize].to_vec();
            counts.entry(prefix).or_insert_with(|| vec![0; graphs])[gi] += 1;
        }
    }
    counts
}

/// Estimates measures from the type trie of a marked sequence.
///
/// Per chain: the count is `Finite(c)` when the last `window` graphs all
/// count exactly c; `Infinite` when counts are nondecreasing along the
/// whole sequence and the last count exceeds `growth_factor` times the
/// count at the window start (and is at least 2); `Unstable` otherwise.
/// The limit fraction is the exact count fraction in the last graph.
pub fn estimate_measures(
    seq: &GraphSequence,
    depth: u8,
    window: usize,
    growth_factor: u64,
    interner: &mut TypeInterner,
) -> Result<(MeasureEstimate, TypeTrie), SequenceError> {
    if window < 2 {
        return Err(SequenceError::WindowTooSmall);
    }
    if seq.len() < window {
        return Err(SequenceError::TooShort {
            len: seq.len(),
            window,
        });
    }
    let trie = TypeTrie::build(seq.graphs(), depth, interner)?;
    let orders: Vec<usize> = seq.graphs().iter().map(|g| g.n()).collect();
    let len = orders.len();
    let last_n = orders[len - 1] as i64;

    let mut tables = Vec::with_capacity(depth as usize);
    let mut support = Vec::new();
    let mut vanishing = Vec::new();
    for d in 1..=depth {
        let mut table = DepthTable::default();
        for (prefix, counts) in chain_counts(&trie, d) {
            let tail = &counts[len - window..];
            let nu = if tail.windows(2).all(|w| w[0] == w[1]) {
                NuValue::Finite(tail[0])
            } else if counts.windows(2).all(|w| w[0] <= w[1])
                && counts[len - 1] >= 2
                && counts[len - 1] > growth_factor * tail[0]
            {
                NuValue::Infinite
            } else {
                NuValue::Unstable
            };
            let mu = Rational::new(counts[len - 1] as i64, last_n);
            let mut variation = Rational::new(0, 1);
            for pair in (len - window..len).collect::<Vec<_>>().windows(2) {
                let a = Rational::new(counts[pair[0]] as i64, orders[pair[0]] as i64);
                let b = Rational::new(counts[pair[1]] as i64, orders[pair[1]] as i64);
                let diff = if a > b { a - b } else { b - a };
                if diff > variation {
                    variation = diff;
                }
            }
            if d == depth && mu > Rational::new(0, 1) {
                match nu {
                    NuValue::Infinite => support.push(prefix.clone()),
                    NuValue::Finite(_) => vanishing.push(prefix.clone()),
                    NuValue::Unstable => {}
                }
            }
            table.nu.insert(prefix.clone(), nu);
            table.mu.insert(prefix.clone(), mu);
            table.variation.insert(prefix, variation);
        }
        tables.push(table);
    }
    Ok((
        MeasureEstimate {
            depth,
            window,
            growth_factor,
            orders,
            tables,
            support,
            vanishing,
        },
        trie,
    ))
}

impl MeasureEstimate {
    pub fn table(&self, d: u8) -> &DepthTable {
        &self.tables[d as usize - 1]
    }

    /// Exact sum of the depth-D limit fractions; equals one by construction.
    pub fn mu_total(&self) -> Rational {
        self.table(self.depth)
            .mu
            .values()
            .fold(Rational::new(0, 1), |acc, r| acc + r)
    }
}

// ---------------------------------------------------------------------------
// Serialized form (fingerprint chains)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuresFileEntry {
    pub chain: Vec<String>,
    pub nu: String,
    pub mu: String,
    pub variation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuresFileTable {
    pub depth: u8,
    pub entries: Vec<MeasuresFileEntry>,
}

/// JSON-serializable measures, with chains written as fingerprint chains so
/// files from different runs and machines are comparable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuresFile {
    pub depth: u8,
    pub window: usize,
    pub growth_factor: u64,
    pub orders: Vec<usize>,
    pub tables: Vec<MeasuresFileTable>,
    pub support: Vec<Vec<String>>,
    pub vanishing: Vec<Vec<String>>,
}

fn chain_fps(chain: &ChainPrefix, interner: &TypeInterner) -> Vec<String> {
    chain.iter().map(|&t| interner.fingerprint_hex(t)).collect()
}

impl MeasureEstimate {
    pub fn to_file(&self, interner: &TypeInterner) -> MeasuresFile {
        let tables = self
            .tables
            .iter()
            .enumerate()
            .map(|(i, t)| MeasuresFileTable {
                depth: i as u8 + 1,
                entries: t
                    .nu
                    .iter()
                    .map(|(chain, nu)| MeasuresFileEntry {
                        chain: chain_fps(chain, interner),
                        nu: nu.as_str(),
                        mu: ratio_to_string(&t.mu[chain]),
                        variation: ratio_to_string(&t.variation[chain]),
                    })
                    .collect(),
            })
            .collect();
        MeasuresFile {
            depth: self.depth,
            window: self.window,
            growth_factor: self.growth_factor,
            orders: self.orders.clone(),
            tables,
            support: self.support.iter().map(|c| chain_fps(c, interner)).collect(),
            vanishing: self
                .vanishing
                .iter()
                .map(|c| chain_fps(c, interner))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    fn seq(graphs: Vec<RootedKTree>) -> GraphSequence {
        GraphSequence::new(graphs).unwrap()
    }

    fn frac(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn star_marking_takes_the_center() {
        let s = seq(families::star_family(&[6, 10]));
        let (marked, plan) =
            mark_null_partition(&s, frac(1, 2), 1, DEFAULT_MARK_CAP).unwrap();
        assert_eq!(plan.mark_counts, vec![1, 1]);
        for g in marked.graphs() {
            assert_eq!(g.vertex_with_mark(1), Some(0));
        }
        // Residual components are singletons: 1/n <= 1/6 holds everywhere.
        let report = check_null_partitioned(&marked, frac(1, 6), 1).unwrap();
        assert_eq!(report.settled_from, Some(0));
    }

    #[test]
    fn path_marking_reaches_the_bound() {
        let s = seq(families::path_family(&[16, 32]));
        let (marked, plan) =
            mark_null_partition(&s, frac(1, 4), 1, DEFAULT_MARK_CAP).unwrap();
        // The myopic greedy needs a few more cuts than the three optimal
        // quartile ones, but must land within the bound with its own marks.
        for (gi, count) in plan.mark_counts.iter().enumerate() {
            assert!((3..=15).contains(count), "graph {gi} used {count} marks");
        }
        // Each graph satisfies the bound under its own mark prefix.
        for (gi, &count) in plan.mark_counts.iter().enumerate() {
            let single = seq(vec![marked.graphs()[gi].clone()]);
            let report = check_null_partitioned(&single, frac(1, 4), count as u32).unwrap();
            assert_eq!(report.settled_from, Some(0), "graph {gi}");
        }
    }

    #[test]
    fn small_components_need_no_marks() {
        // Valid single k-trees cannot be disconnected, but the marking only
        // looks at components: a graph whose components are already small
        // receives zero marks. Use a star with epsilon = 1 (trivial bound).
        let s = seq(families::star_family(&[5, 7]));
        let (_, plan) = mark_null_partition(&s, frac(1, 1), 1, 4).unwrap();
        assert_eq!(plan.mark_counts, vec![0, 0]);
    }

    #[test]
    fn cap_exceeded_is_an_error() {
        let s = seq(families::path_family(&[32, 64]));
        match mark_null_partition(&s, frac(1, 32), 1, 2) {
            Err(SequenceError::MarkCap { cap: 2, .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn unmarked_check_fails() {
        let s = seq(families::path_family(&[16, 32]));
        let report = check_null_partitioned(&s, frac(1, 4), 2).unwrap();
        assert_eq!(report.settled_from, None);
        assert!(report.fractions.iter().all(|f| f.is_none()));
    }

    #[test]
    fn path_measures() {
        let mut interner = TypeInterner::new();
        let s = seq(families::path_family(&[8, 16, 32]));
        let (est, _trie) = estimate_measures(&s, 1, 3, 4, &mut interner).unwrap();
        let table = est.table(1);
        // Depth 1 on an oriented chain: head end (no parent), tail end (no
        // child), interior. Head and tail have stable count 1, interior
        // grows.
        let nus: Vec<NuValue> = table.nu.values().copied().collect();
        assert_eq!(
            nus.iter()
                .filter(|v| matches!(v, NuValue::Finite(1)))
                .count(),
            2
        );
        assert_eq!(
            nus.iter()
                .filter(|v| matches!(v, NuValue::Infinite))
                .count(),
            1
        );
        // mu of the interior type is (n-2)/n for the last graph.
        let inf_chain = table
            .nu
            .iter()
            .find(|(_, v)| matches!(v, NuValue::Infinite))
            .map(|(c, _)| c.clone())
            .unwrap();
        assert_eq!(table.mu[&inf_chain], frac(30, 32));
        assert_eq!(est.mu_total(), frac(1, 1));
        assert_eq!(est.support.len(), 1);
        assert_eq!(est.vanishing.len(), 2);
    }

    #[test]
    fn constant_distribution_has_zero_variation() {
        // Stars only grow in the leaf type; the center fraction shrinks but
        // leaf fractions converge. Use identical star shapes of growing
        // size and check the interior diagnostics stay small; exact zero
        // variation needs identical graphs, which the strictly-increasing
        // rule forbids, so check the leaf variation bound instead.
        let mut interner = TypeInterner::new();
        let s = seq(families::star_family(&[10, 20, 40]));
        let (est, _) = estimate_measures(&s, 1, 3, 4, &mut interner).unwrap();
        for (chain, var) in &est.table(1).variation {
            let _ = chain;
            assert!(*var <= frac(1, 10), "variation {var} too large");
        }
    }

    #[test]
    fn star_support_is_the_leaf_type() {
        let mut interner = TypeInterner::new();
        let s = seq(families::star_family(&[4, 8, 16]));
        let (est, trie) = estimate_measures(&s, 2, 3, 4, &mut interner).unwrap();
        assert_eq!(est.support.len(), 1);
        // The support chain is the leaf type: count 15 in S_16.
        let leaf_chain = &est.support[0];
        assert_eq!(trie.count_in(2, leaf_chain[1]), 15);
        // Center: nu = 1, mu -> 0 flagged as vanishing.
        assert_eq!(est.vanishing.len(), 1);
        let center_chain = &est.vanishing[0];
        assert_eq!(est.table(2).nu[center_chain], NuValue::Finite(1));
    }

    #[test]
    fn window_too_large_is_an_error() {
        let mut interner = TypeInterner::new();
        let s = seq(families::path_family(&[8, 16]));
        assert!(matches!(
            estimate_measures(&s, 1, 3, 4, &mut interner),
            Err(SequenceError::TooShort { .. })
        ));
    }

    #[test]
    fn measures_file_roundtrip_is_stable() {
        let mut interner = TypeInterner::new();
        let s = seq(families::path_family(&[8, 16, 32]));
        let (est, _) = estimate_measures(&s, 2, 2, 4, &mut interner).unwrap();
        let file = est.to_file(&interner);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: MeasuresFile = serde_json::from_str(&json).unwrap();
        assert_eq!(file, back);
        // Recomputing in a fresh interner yields the same fingerprints.
        let mut interner2 = TypeInterner::new();
        let (est2, _) = estimate_measures(&s, 2, 2, 4, &mut interner2).unwrap();
        assert_eq!(est2.to_file(&interner2), file);
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!(ratio_from_string("1/4"), Some(frac(1, 4)));
        assert_eq!(ratio_from_string("0.25"), Some(frac(1, 4)));
        assert_eq!(ratio_from_string("2"), Some(frac(2, 1)));
        assert_eq!(ratio_from_string("1/0"), None);
    }
}
