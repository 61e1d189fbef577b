//! Canonical d-Hintikka types, the type trie, and Hanf-threshold
//! equivalence.
//!
//! The d-type of a vertex is the canonical form of the recursive signature
//! `sig_0(tuple) = atomic type` (all i-edges with colors, equalities, and
//! marks `U_j`, `j <= d`), `sig_r(tuple) = (sig_0(tuple), { sig_{r-1}(tuple
//! + w) : w adjacent to a pebbled vertex })`, evaluated on the singleton
//! tuple. Two vertices get the same [`TypeId`] exactly when the duplicator
//! wins the d-round localized game between them; the game solver in
//! [`crate::logic`] is the independent oracle for that identity.
//!
//! Types intern into small handles valid for one [`TypeInterner`]. Each
//! carries a content fingerprint that is stable across runs and machines, so
//! histograms printed from different processes can be compared.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::graph::{EdgeColor, RootedKTree, VertexId};

#[derive(Debug, Error)]
pub enum HintikkaError {
    #[error("histograms have different depths ({0} vs {1})")]
    DepthMismatch(u8, u8),
    #[error("prefix has no registered witnesses")]
    NoWitnesses,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("graphs disagree on arity k")]
    MixedArity,
    #[error("type restriction conflict: one {d}-type maps to two {dm1}-types")]
    RestrictionConflict { d: u8, dm1: u8 },
}

/// Canonical identifier of a d-Hintikka type, valid per [`TypeInterner`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId {
    pub depth: u8,
    sig: u32,
}

/// A root-to-depth-d path in the type tree: `chain[i]` is the type at depth
/// i+1, each entry restricting to the previous one.
pub type ChainPrefix = Vec<TypeId>;

const FNV_OFFSET: u128 = 0x6c62272e07bb014262b821756295c58d;
const FNV_PRIME: u128 = 0x0000000001000000000000000000013b;

fn fnv1a128(init: u128, bytes: &[u8]) -> u128 {
    let mut h = init;
    for &b in bytes {
        h ^= b as u128;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

struct SigNode {
    fp: u128,
}

/// Intern table for recursive signatures. Insert-if-absent; a handle is
/// meaningful only together with the interner that produced it.
#[derive(Default)]
pub struct TypeInterner {
    sigs: Vec<SigNode>,
    index: HashMap<(Vec<u8>, Vec<u32>), u32>,
}

impl TypeInterner {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, atoms: Vec<u8>, children: Vec<u32>) -> u32 {
        if let Some(&id) = self.index.get(&(atoms.clone(), children.clone())) {
            return id;
        }
        // Content fingerprint: atoms then child fingerprints in sorted
        // order, so it does not depend on interning order.
        let mut child_fps: Vec<u128> = children.iter().map(|&c| self.sigs[c as usize].fp).collect();
        child_fps.sort_unstable();
        let mut fp = fnv1a128(FNV_OFFSET, &[0x5f]);
        fp = fnv1a128(fp, &(atoms.len() as u64).to_le_bytes());
        fp = fnv1a128(fp, &atoms);
        for cf in child_fps {
            fp = fnv1a128(fp, &cf.to_le_bytes());
        }
        let id = self.sigs.len() as u32;
        self.sigs.push(SigNode { fp });
        self.index.insert((atoms, children), id);
        id
    }

    /// Stable 128-bit content fingerprint of a type (depth included).
    pub fn fingerprint(&self, t: TypeId) -> u128 {
        let mut fp = fnv1a128(FNV_OFFSET, &[t.depth]);
        fp = fnv1a128(fp, &self.sigs[t.sig as usize].fp.to_le_bytes());
        fp
    }

    pub fn fingerprint_hex(&self, t: TypeId) -> String {
        format!("{:032x}", self.fingerprint(t))
    }
}

fn atomic_key(t: &RootedKTree, tuple: &[VertexId], cap: u8) -> Vec<u8> {
    let mut out = Vec::with_capacity(tuple.len() * 6);
    for &v in tuple {
        let marks: Vec<u32> = t
            .marks_of(v)
            .into_iter()
            .filter(|&j| j <= cap as u32)
            .collect();
        out.push(marks.len() as u8);
        for j in marks {
            out.extend_from_slice(&j.to_le_bytes());
        }
    }
    for p in 0..tuple.len() {
        for q in p + 1..tuple.len() {
            out.push(if tuple[p] == tuple[q] { 1 } else { 0 });
            out.push(edge_code(t, tuple[p], tuple[q]));
            out.push(edge_code(t, tuple[q], tuple[p]));
        }
    }
    out
}

fn edge_code(t: &RootedKTree, a: VertexId, b: VertexId) -> u8 {
    match t.edge(a, b) {
        None => 0,
        Some((i, color)) => 1 + (i - 1) * 2 + color.code(),
    }
}

struct SigCtx<'a> {
    graph: &'a RootedKTree,
    cap: u8,
    memo: HashMap<(u8, Vec<VertexId>), u32>,
}

fn sig(ctx: &mut SigCtx, interner: &mut TypeInterner, tuple: &mut Vec<VertexId>, r: u8) -> u32 {
    let key = (r, tuple.clone());
    if let Some(&id) = ctx.memo.get(&key) {
        return id;
    }
    let atoms = atomic_key(ctx.graph, tuple, ctx.cap);
    let children = if r == 0 {
        Vec::new()
    } else {
        let mut moves: Vec<VertexId> = tuple
            .iter()
            .flat_map(|&v| ctx.graph.neighbors(v).iter().copied())
            .collect();
        moves.sort_unstable();
        moves.dedup();
        let mut set = BTreeSet::new();
        for w in moves {
            tuple.push(w);
            let child = sig(ctx, interner, tuple, r - 1);
            tuple.pop();
            set.insert(child);
        }
        set.into_iter().collect()
    };
    let id = interner.intern(atoms, children);
    ctx.memo.insert(key, id);
    id
}

/// The d-Hintikka type of a single vertex.
pub fn vertex_type(t: &RootedKTree, v: VertexId, d: u8, interner: &mut TypeInterner) -> TypeId {
    assert!(d >= 1, "depth must be at least 1");
    let mut ctx = SigCtx {
        graph: t,
        cap: d,
        memo: HashMap::new(),
    };
    TypeId {
        depth: d,
        sig: sig(&mut ctx, interner, &mut vec![v], d),
    }
}

/// Types of every vertex at one depth, sharing one signature memo.
pub fn graph_types(t: &RootedKTree, d: u8, interner: &mut TypeInterner) -> Vec<TypeId> {
    assert!(d >= 1, "depth must be at least 1");
    let mut ctx = SigCtx {
        graph: t,
        cap: d,
        memo: HashMap::new(),
    };
    (0..t.n() as VertexId)
        .map(|v| TypeId {
            depth: d,
            sig: sig(&mut ctx, interner, &mut vec![v], d),
        })
        .collect()
}

/// Per-vertex chains `(type_1, ..., type_D)`.
pub fn graph_chains(t: &RootedKTree, depth: u8, interner: &mut TypeInterner) -> Vec<ChainPrefix> {
    let mut chains = vec![Vec::with_capacity(depth as usize); t.n()];
    for d in 1..=depth {
        for (v, ty) in graph_types(t, d, interner).into_iter().enumerate() {
            chains[v].push(ty);
        }
    }
    chains
}

/// Counts of each d-type; values sum to the number of vertices.
pub fn type_histogram(
    t: &RootedKTree,
    d: u8,
    interner: &mut TypeInterner,
) -> BTreeMap<TypeId, u64> {
    let mut hist = BTreeMap::new();
    for ty in graph_types(t, d, interner) {
        *hist.entry(ty).or_insert(0) += 1;
    }
    hist
}

/// Hanf-threshold comparison: true when every type has either equal counts
/// in both histograms or count at least `gamma` in both.
pub fn hanf_equivalent(
    h: &BTreeMap<TypeId, u64>,
    h2: &BTreeMap<TypeId, u64>,
    gamma: u64,
) -> Result<bool, HintikkaError> {
    if let (Some((a, _)), Some((b, _))) = (h.iter().next(), h2.iter().next()) {
        if a.depth != b.depth {
            return Err(HintikkaError::DepthMismatch(a.depth, b.depth));
        }
    }
    let keys: BTreeSet<TypeId> = h.keys().chain(h2.keys()).copied().collect();
    for ty in keys {
        let a = h.get(&ty).copied().unwrap_or(0);
        let b = h2.get(&ty).copied().unwrap_or(0);
        if a != b && (a < gamma || b < gamma) {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Type trie over a graph sequence
// ---------------------------------------------------------------------------

/// The realized part of the type tree over a sequence of graphs, with a
/// witness registry per node.
pub struct TypeTrie {
    pub depth: u8,
    pub k: usize,
    /// `chains[g][v]` = chain of vertex v in graph g.
    pub chains: Vec<Vec<ChainPrefix>>,
    /// Registered witnesses per type (all depths).
    pub witnesses: BTreeMap<TypeId, Vec<(usize, VertexId)>>,
    /// Each depth-d type to its unique depth-(d-1) restriction.
    pub prefix_link: BTreeMap<TypeId, TypeId>,
}

impl TypeTrie {
    /// Computes chains for every vertex of every graph and registers the
    /// witnesses. Graphs must share the arity k.
    pub fn build(
        graphs: &[RootedKTree],
        depth: u8,
        interner: &mut TypeInterner,
    ) -> Result<TypeTrie, HintikkaError> {
        if depth == 0 {
            return Err(HintikkaError::ZeroDepth);
        }
        let k = graphs.first().map(|g| g.k()).unwrap_or(1);
        if graphs.iter().any(|g| g.k() != k) {
            return Err(HintikkaError::MixedArity);
        }
        let mut trie = TypeTrie {
            depth,
            k,
            chains: Vec::with_capacity(graphs.len()),
            witnesses: BTreeMap::new(),
            prefix_link: BTreeMap::new(),
        };
        for (gi, g) in graphs.iter().enumerate() {
            let chains = graph_chains(g, depth, interner);
            for (v, chain) in chains.iter().enumerate() {
                for (di, &ty) in chain.iter().enumerate() {
                    trie.witnesses
                        .entry(ty)
                        .or_default()
                        .push((gi, v as VertexId));
                    if di > 0 {
                        let below = chain[di - 1];
                        if let Some(prev) = trie.prefix_link.insert(ty, below) {
                            if prev != below {
                                return Err(HintikkaError::RestrictionConflict {
                                    d: ty.depth,
                                    dm1: below.depth,
                                });
                            }
                        }
                    }
                }
            }
            trie.chains.push(chains);
        }
        Ok(trie)
    }

    /// The chain `(type_1, ..., type_d)` ending at `ty`.
    pub fn chain_of(&self, ty: TypeId) -> ChainPrefix {
        let mut out = vec![ty];
        let mut cur = ty;
        while let Some(&below) = self.prefix_link.get(&cur) {
            out.push(below);
            cur = below;
        }
        out.reverse();
        out
    }

    /// All realized types at one depth, in deterministic order.
    pub fn types_at_depth(&self, d: u8) -> Vec<TypeId> {
        self.witnesses
            .keys()
            .copied()
            .filter(|t| t.depth == d)
            .collect()
    }

    /// Count of vertices of type `ty` in graph `g`.
    pub fn count_in(&self, g: usize, ty: TypeId) -> u64 {
        self.chains[g]
            .iter()
            .filter(|chain| chain.get(ty.depth as usize - 1) == Some(&ty))
            .count() as u64
    }
}

// ---------------------------------------------------------------------------
// Implied profiles
// ---------------------------------------------------------------------------

/// Exact child count or unbounded growth along the witness sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ChildCount {
    Exact(u64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentInfo {
    /// Chain of the i-parent at depth one less than the profiled prefix
    /// (empty at depth 1, where nothing further is determined).
    pub chain: ChainPrefix,
    pub color: EdgeColor,
}

/// Everything a type is observed to promise about its carriers: parent
/// types, child counts, marks, tournament membership, and bounded
/// parent-to-parent path existence. Extracted from witnesses; any witness
/// disagreement is surfaced in `unstable` rather than resolved silently.
#[derive(Debug, Clone)]
pub struct ImpliedProfile {
    pub depth: u8,
    /// Slot i-1 describes the i-parent, `None` when absent.
    pub parents: Vec<Option<ParentInfo>>,
    /// `(i, child chain at depth-1)` to its count.
    pub child_counts: BTreeMap<(u8, ChainPrefix), ChildCount>,
    /// Marks `U_j`, `j <= depth`, carried by every witness.
    pub marks: Vec<u32>,
    pub initial_tournament: bool,
    /// `(i', i'') -> i`: the i''-parent is the i-parent of the i'-parent.
    pub parent_relation: BTreeMap<(u8, u8), u8>,
    /// `(i', i'', A-mask) -> a path of length <= L using only A-edges exists
    /// from the i'-parent to the i''-parent.
    pub parent_paths: BTreeMap<(u8, u8, u16), bool>,
    /// Names of fields whose witnesses disagreed.
    pub unstable: Vec<String>,
}

/// Reads the profile of a prefix off its registered witnesses. `growth`
/// controls when a nondecreasing child-count series counts as unbounded:
/// final count at least `growth` times the first (and at least 2).
pub fn implied_profile(
    trie: &TypeTrie,
    graphs: &[RootedKTree],
    prefix: &[TypeId],
    path_bound: u8,
    growth: u64,
) -> Result<ImpliedProfile, HintikkaError> {
    let ty = *prefix.last().ok_or(HintikkaError::ZeroDepth)?;
    let depth = prefix.len() as u8;
    let witnesses = trie.witnesses.get(&ty).ok_or(HintikkaError::NoWitnesses)?;
    if witnesses.is_empty() {
        return Err(HintikkaError::NoWitnesses);
    }
    let k = trie.k;
    let mut unstable: Vec<String> = Vec::new();

    // Parent slots and colors.
    let mut parents: Vec<Option<ParentInfo>> = Vec::with_capacity(k);
    for i in 1..=k as u8 {
        let mut per_witness: Vec<Option<ParentInfo>> = Vec::new();
        for &(g, v) in witnesses.iter() {
            let info = graphs[g].parent_entry(v, i).map(|(w, color)| ParentInfo {
                chain: trie.chains[g][w as usize][..depth as usize - 1].to_vec(),
                color,
            });
            per_witness.push(info);
        }
        let first = per_witness[0].clone();
        if per_witness.iter().any(|p| *p != first) {
            unstable.push(format!("parent[{i}]"));
        }
        parents.push(first);
    }

    // Child counts per (i, child chain at depth-1), aggregated per graph.
    let mut series: BTreeMap<(u8, ChainPrefix), BTreeMap<usize, Vec<u64>>> = BTreeMap::new();
    for &(g, v) in witnesses.iter() {
        let mut counts: BTreeMap<(u8, ChainPrefix), u64> = BTreeMap::new();
        for &(u, i, _) in graphs[g].children_of(v) {
            let chain = trie.chains[g][u as usize][..depth as usize - 1].to_vec();
            *counts.entry((i, chain)).or_insert(0) += 1;
        }
        for (key, c) in counts {
            series.entry(key).or_default().entry(g).or_default().push(c);
        }
    }
    let mut child_counts = BTreeMap::new();
    for (key, per_graph) in series {
        let mut graph_vals: Vec<u64> = Vec::new();
        let mut within_conflict = false;
        for (&g, vals) in &per_graph {
            // Witnesses in graph g with no such child at all count as zero.
            let with_type = witnesses.iter().filter(|&&(wg, _)| wg == g).count();
            let mut vals = vals.clone();
            vals.extend(std::iter::repeat_n(0, with_type - vals.len()));
            if vals.windows(2).any(|w| w[0] != w[1]) {
                within_conflict = true;
            }
            graph_vals.push(vals[0]);
        }
        let last = *graph_vals.last().unwrap();
        let verdict = if within_conflict {
            unstable.push(format!("child_count[{}, depth {}]", key.0, depth - 1));
            ChildCount::Exact(graph_vals[0])
        } else if graph_vals.windows(2).all(|w| w[0] == w[1]) {
            ChildCount::Exact(graph_vals[0])
        } else if graph_vals.windows(2).all(|w| w[0] <= w[1])
            && last >= 2
            && last >= growth * graph_vals[0].max(1)
        {
            ChildCount::Infinite
        } else {
            unstable.push(format!("child_count[{}, depth {}]", key.0, depth - 1));
            ChildCount::Exact(last)
        };
        child_counts.insert(key, verdict);
    }

    // Marks visible at this depth.
    let (g0, v0) = witnesses[0];
    let marks: Vec<u32> = graphs[g0]
        .marks_of(v0)
        .into_iter()
        .filter(|&j| j <= depth as u32)
        .collect();
    for &(g, v) in witnesses.iter().skip(1) {
        let got: Vec<u32> = graphs[g]
            .marks_of(v)
            .into_iter()
            .filter(|&j| j <= depth as u32)
            .collect();
        if got != marks {
            unstable.push("marks".into());
            break;
        }
    }

    // Initial-tournament membership.
    let initial = graphs[g0].parent_count(v0) < k;
    if witnesses
        .iter()
        .any(|&(g, v)| (graphs[g].parent_count(v) < k) != initial)
    {
        unstable.push("initial_tournament".into());
    }

    // Parent-to-parent relation and bounded path table.
    let mut parent_relation: BTreeMap<(u8, u8), u8> = BTreeMap::new();
    let mut parent_paths: BTreeMap<(u8, u8, u16), bool> = BTreeMap::new();
    let filled: Vec<u8> = (1..=k as u8)
        .filter(|&i| parents[i as usize - 1].is_some())
        .collect();
    for &i1 in &filled {
        for &i2 in &filled {
            if i1 == i2 {
                continue;
            }
            if i1 < i2 {
                let mut rel: Option<u8> = None;
                let mut stable = true;
                for &(g, v) in witnesses.iter() {
                    let w1 = graphs[g].i_parent(v, i1).unwrap();
                    let w2 = graphs[g].i_parent(v, i2).unwrap();
                    let got = graphs[g]
                        .parent_list(w1)
                        .find(|&(_, w, _)| w == w2)
                        .map(|(i, _, _)| i);
                    match (rel, got) {
                        (None, Some(i)) => rel = Some(i),
                        (Some(a), Some(b)) if a == b => {}
                        _ => {
                            stable = false;
                            break;
                        }
                    }
                }
                if let (true, Some(i)) = (stable, rel) {
                    parent_relation.insert((i1, i2), i);
                } else if !stable {
                    unstable.push(format!("parent_relation[{i1},{i2}]"));
                }
            }
            for mask in 1u16..(1 << k) {
                let mut verdict: Option<bool> = None;
                let mut stable = true;
                for &(g, v) in witnesses.iter() {
                    let w1 = graphs[g].i_parent(v, i1).unwrap();
                    let w2 = graphs[g].i_parent(v, i2).unwrap();
                    let got = a_edge_path_exists(&graphs[g], w1, w2, mask, path_bound);
                    match verdict {
                        None => verdict = Some(got),
                        Some(prev) if prev == got => {}
                        _ => {
                            stable = false;
                            break;
                        }
                    }
                }
                if stable {
                    parent_paths.insert((i1, i2, mask), verdict.unwrap());
                } else {
                    unstable.push(format!("parent_path[{i1},{i2},{mask:#b}]"));
                }
            }
        }
    }

    Ok(ImpliedProfile {
        depth,
        parents,
        child_counts,
        marks,
        initial_tournament: initial,
        parent_relation,
        parent_paths,
        unstable,
    })
}

/// Directed path from `from` to `to` of length in `[1, bound]` using only
/// i-edges with `i` in the mask (bit i-1).
pub fn a_edge_path_exists(
    g: &RootedKTree,
    from: VertexId,
    to: VertexId,
    mask: u16,
    bound: u8,
) -> bool {
    let mut dist: BTreeMap<VertexId, u8> = BTreeMap::new();
    let mut queue = VecDeque::from([(from, 0u8)]);
    dist.insert(from, 0);
    while let Some((v, d)) = queue.pop_front() {
        if d == bound {
            continue;
        }
        for (i, w, _) in g.parent_list(v) {
            if mask & (1 << (i - 1)) == 0 {
                continue;
            }
            if w == to {
                return true;
            }
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                queue.push_back((w, d + 1));
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::graph::RootedKTree;
    use crate::logic::{local_ef_winner, GameWinner};

    fn p3_mid() -> RootedKTree {
        RootedKTree::from_parts(
            3,
            1,
            &[(0, 1, 1, EdgeColor::Kept), (2, 1, 1, EdgeColor::Kept)],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn p3_histogram_matches_game_oracle() {
        let t = p3_mid();
        let mut interner = TypeInterner::new();
        let hist = type_histogram(&t, 1, &mut interner);
        let counts: Vec<u64> = hist.values().copied().collect();
        assert_eq!(counts.iter().sum::<u64>(), 3);
        assert_eq!(hist.len(), 2);
        assert!(counts.contains(&2) && counts.contains(&1));
        // Ends a and c agree, b differs; the game agrees.
        assert_eq!(local_ef_winner(&t, 0, &t, 2, 1), GameWinner::Duplicator);
        assert_eq!(local_ef_winner(&t, 0, &t, 1, 1), GameWinner::Spoiler);
    }

    #[test]
    fn tournament_types_are_distinct() {
        // Transitive tournament on 3 vertices with k = 2.
        let t = RootedKTree::from_parts(
            3,
            2,
            &[
                (1, 1, 0, EdgeColor::Kept),
                (2, 1, 1, EdgeColor::Kept),
                (2, 2, 0, EdgeColor::Kept),
            ],
            &[],
        )
        .unwrap();
        let mut interner = TypeInterner::new();
        let hist = type_histogram(&t, 1, &mut interner);
        assert_eq!(hist.len(), 3);
    }

    #[test]
    fn prefix_property() {
        let mut interner = TypeInterner::new();
        for seed in 0..20 {
            let t = crate::graph::generate_random_rooted_ktree(8, 2, seed);
            let deep = graph_types(&t, 3, &mut interner);
            let shallow = graph_types(&t, 2, &mut interner);
            // Same 3-type implies same 2-type.
            for v in 0..t.n() {
                for u in 0..t.n() {
                    if deep[v] == deep[u] {
                        assert_eq!(shallow[v], shallow[u]);
                    }
                }
            }
        }
    }

    #[test]
    fn histogram_is_isomorphism_invariant() {
        let mut interner = TypeInterner::new();
        let t = crate::graph::generate_random_rooted_ktree(9, 2, 3);
        // Relabel vertices by reversal.
        let n = t.n();
        let perm = |v: VertexId| (n - 1 - v as usize) as VertexId;
        let mut entries = Vec::new();
        for v in 0..n as VertexId {
            for (i, w, c) in t.parent_list(v) {
                entries.push((perm(v), i, perm(w), c));
            }
        }
        let shuffled = RootedKTree::from_parts(n, 2, &entries, &[]).unwrap();
        let h1 = type_histogram(&t, 2, &mut interner);
        let h2 = type_histogram(&shuffled, 2, &mut interner);
        assert_eq!(h1, h2);
    }

    #[test]
    fn disjoint_union_doubles_counts() {
        let t = families::path_chain(4);
        let double = crate::graph::disjoint_union(&t, &t).unwrap();
        let mut interner = TypeInterner::new();
        let h1 = type_histogram(&t, 2, &mut interner);
        let h2 = type_histogram(&double, 2, &mut interner);
        assert_eq!(h1.len(), h2.len());
        for (ty, c) in h1 {
            assert_eq!(h2.get(&ty), Some(&(2 * c)));
        }
    }

    #[test]
    fn hanf_rules() {
        let mut interner = TypeInterner::new();
        let h5 = type_histogram(&families::star(6), 1, &mut interner);
        assert!(hanf_equivalent(&h5, &h5, 10).unwrap());
        // Star leaf counts 5 vs 7: equal-or-large rule.
        let h7 = type_histogram(&families::star(8), 1, &mut interner);
        assert!(hanf_equivalent(&h5, &h7, 5).unwrap());
        assert!(!hanf_equivalent(&h5, &h7, 8).unwrap());
        // Depth mismatch is an error.
        let d2 = type_histogram(&families::star(6), 2, &mut interner);
        assert!(matches!(
            hanf_equivalent(&h5, &d2, 2),
            Err(HintikkaError::DepthMismatch(_, _))
        ));
    }

    #[test]
    fn hanf_is_reflexive_symmetric_and_monotone() {
        let mut interner = TypeInterner::new();
        let graphs: Vec<RootedKTree> = (0..12)
            .map(|s| crate::graph::generate_random_rooted_ktree(3 + (s as usize % 6), 2, s))
            .collect();
        let hists: Vec<BTreeMap<TypeId, u64>> = graphs
            .iter()
            .map(|g| type_histogram(g, 2, &mut interner))
            .collect();
        for a in &hists {
            for gamma in 1..=5 {
                assert!(hanf_equivalent(a, a, gamma).unwrap());
            }
            for b in &hists {
                for gamma in 1..=5 {
                    let ab = hanf_equivalent(a, b, gamma).unwrap();
                    let ba = hanf_equivalent(b, a, gamma).unwrap();
                    assert_eq!(ab, ba);
                    // Shrinking the threshold can only keep or gain pairs.
                    if ab {
                        assert!(hanf_equivalent(a, b, gamma.saturating_sub(1).max(1)).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn fingerprints_stable_across_interners() {
        let t = families::binary_in_tree(3);
        let mut a = TypeInterner::new();
        let mut b = TypeInterner::new();
        // Different interning orders, same fingerprints.
        let ta = vertex_type(&t, 0, 3, &mut a);
        let _ = graph_types(&t, 2, &mut b);
        let tb = vertex_type(&t, 0, 3, &mut b);
        assert_eq!(a.fingerprint(ta), b.fingerprint(tb));
    }

    #[test]
    fn profile_of_growing_paths() {
        let graphs = families::path_family(&[5, 9, 17]);
        let mut interner = TypeInterner::new();
        let trie = TypeTrie::build(&graphs, 2, &mut interner).unwrap();
        // Deep-interior type: vertex 8 of P_17 is far from both ends.
        let mid_ty = trie.chains[2][8].clone();
        let profile = implied_profile(&trie, &graphs, &mid_ty, 4, 4).unwrap();
        assert!(profile.unstable.is_empty(), "{:?}", profile.unstable);
        assert!(!profile.initial_tournament);
        // Exactly one 1-child of the interior 1-type.
        let counts: Vec<ChildCount> = profile.child_counts.values().copied().collect();
        assert_eq!(counts, vec![ChildCount::Exact(1)]);
    }

    #[test]
    fn profile_of_growing_stars_is_infinite() {
        let graphs = families::star_family(&[4, 8, 16]);
        let mut interner = TypeInterner::new();
        let trie = TypeTrie::build(&graphs, 2, &mut interner).unwrap();
        // Center of the last star.
        let center_ty = trie.chains[2][0].clone();
        let profile = implied_profile(&trie, &graphs, &center_ty, 4, 4).unwrap();
        assert!(profile.initial_tournament);
        let counts: Vec<ChildCount> = profile.child_counts.values().copied().collect();
        assert_eq!(counts, vec![ChildCount::Infinite]);
    }

    #[test]
    fn profile_requires_witnesses() {
        let graphs = families::path_family(&[4]);
        let mut interner = TypeInterner::new();
        let trie = TypeTrie::build(&graphs, 2, &mut interner).unwrap();
        let bogus = vec![TypeId { depth: 1, sig: 999 }];
        assert!(matches!(
            implied_profile(&trie, &graphs, &bogus, 4, 4),
            Err(HintikkaError::NoWitnesses)
        ));
    }
}
