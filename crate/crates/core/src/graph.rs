//! Marked, 2-edge-colored rooted k-trees.
//!
//! A rooted k-tree is built recursively: a transitive tournament on at most
//! k vertices is a rooted k-tree, and a new vertex may be attached by
//! directed edges to k existing vertices that form a transitive tournament.
//! If the parents of `v` lie on the directed path `w_1 -> w_2 -> ... -> w_k`,
//! then `w_i` is the *i-parent* of `v`. Edges carry one of two colors, `Kept`
//! or `Fill`, recording whether the edge belongs to an encoded original graph
//! or was added during completion. Unary marks `U_j` single out at most one
//! vertex each.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex index, dense in `[0, n)` within a single graph.
pub type VertexId = u32;

/// Edge color: `Kept` edges belong to the encoded original graph, `Fill`
/// edges were added to complete it to a k-tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeColor {
    Kept,
    Fill,
}

impl EdgeColor {
    pub fn code(self) -> u8 {
        match self {
            EdgeColor::Kept => 0,
            EdgeColor::Fill => 1,
        }
    }

    pub fn from_code(c: u64) -> Option<EdgeColor> {
        match c {
            0 => Some(EdgeColor::Kept),
            1 => Some(EdgeColor::Fill),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex {v} out of range (n = {n})")]
    VertexRange { v: u64, n: usize },
    #[error("parent index {i} out of range (k = {k})")]
    ParentRange { i: u64, k: usize },
    #[error("duplicate parent slot {i} for vertex {v}")]
    DuplicateSlot { v: VertexId, i: u8 },
    #[error("mark {j} assigned to more than one vertex")]
    DuplicateMark { j: u32 },
    #[error("mark index 0 (marks are 1-based)")]
    MarkZero,
    #[error("{0}")]
    Invalid(String),
}

/// One violated structural rule, with witness vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub witnesses: Vec<VertexId>,
}

/// Result of [`RootedKTree::validate`]: empty violation list means the
/// structure satisfies the recursive rooted-k-tree definition.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

/// A directed, indexed-parent, 2-edge-colored, vertex-marked graph.
///
/// Immutable after construction. The structure can represent arbitrary
/// parent assignments; [`RootedKTree::validate`] checks the actual
/// rooted-k-tree invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedKTree {
    n: usize,
    k: usize,
    /// `parents[v][i-1]` is the i-parent slot of `v`.
    parents: Vec<Vec<Option<(VertexId, EdgeColor)>>>,
    /// Mark index (1-based) to the unique marked vertex.
    marks: BTreeMap<u32, VertexId>,
    /// `children[w]` lists `(v, i, color)` with `w` the i-parent of `v`.
    children: Vec<Vec<(VertexId, u8, EdgeColor)>>,
    /// Deduplicated undirected adjacency.
    neighbors: Vec<Vec<VertexId>>,
}

impl RootedKTree {
    /// Assembles a graph from explicit parent entries `(v, i, w, color)`
    /// meaning `w` is the i-parent of `v`.
    ///
    /// Rejects malformed input (out-of-range ids, duplicate slots, duplicate
    /// marks); structural rule violations are left to [`Self::validate`].
    pub fn from_parts(
        n: usize,
        k: usize,
        entries: &[(VertexId, u8, VertexId, EdgeColor)],
        marks: &[(u32, VertexId)],
    ) -> Result<RootedKTree, GraphError> {
        if k == 0 {
            return Err(GraphError::Invalid("k must be at least 1".into()));
        }
        let mut parents = vec![vec![None; k]; n];
        for &(v, i, w, color) in entries {
            if (v as usize) >= n {
                return Err(GraphError::VertexRange { v: v as u64, n });
            }
            if (w as usize) >= n {
                return Err(GraphError::VertexRange { v: w as u64, n });
            }
            if i == 0 || (i as usize) > k {
                return Err(GraphError::ParentRange { i: i as u64, k });
            }
            let slot = &mut parents[v as usize][i as usize - 1];
            if slot.is_some() {
                return Err(GraphError::DuplicateSlot { v, i });
            }
            *slot = Some((w, color));
        }
        let mut mark_map = BTreeMap::new();
        for &(j, v) in marks {
            if j == 0 {
                return Err(GraphError::MarkZero);
            }
            if (v as usize) >= n {
                return Err(GraphError::VertexRange { v: v as u64, n });
            }
            if mark_map.insert(j, v).is_some() {
                return Err(GraphError::DuplicateMark { j });
            }
        }
        Ok(Self::assemble(n, k, parents, mark_map))
    }

    fn assemble(
        n: usize,
        k: usize,
        parents: Vec<Vec<Option<(VertexId, EdgeColor)>>>,
        marks: BTreeMap<u32, VertexId>,
    ) -> RootedKTree {
        let mut children = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for (v, slots) in parents.iter().enumerate() {
            for (idx, slot) in slots.iter().enumerate() {
                if let Some((w, color)) = *slot {
                    children[w as usize].push((v as VertexId, idx as u8 + 1, color));
                    neighbors[v].push(w);
                    neighbors[w as usize].push(v as VertexId);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        for list in &mut children {
            list.sort_unstable();
        }
        RootedKTree {
            n,
            k,
            parents,
            marks,
            children,
            neighbors,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The i-parent of `v`, if the slot is filled. `i` is 1-based.
    pub fn i_parent(&self, v: VertexId, i: u8) -> Option<VertexId> {
        self.parent_entry(v, i).map(|(w, _)| w)
    }

    pub fn parent_entry(&self, v: VertexId, i: u8) -> Option<(VertexId, EdgeColor)> {
        if i == 0 || i as usize > self.k {
            return None;
        }
        self.parents[v as usize][i as usize - 1]
    }

    /// Filled parent slots of `v` as `(i, parent, color)` in slot order.
    pub fn parent_list(&self, v: VertexId) -> impl Iterator<Item = (u8, VertexId, EdgeColor)> + '_ {
        self.parents[v as usize]
            .iter()
            .enumerate()
            .filter_map(|(idx, slot)| slot.map(|(w, c)| (idx as u8 + 1, w, c)))
    }

    pub fn parent_count(&self, v: VertexId) -> usize {
        self.parents[v as usize].iter().flatten().count()
    }

    /// All `u` whose i-parent is `v`.
    pub fn i_children(&self, v: VertexId, i: u8) -> Vec<VertexId> {
        self.children[v as usize]
            .iter()
            .filter(|&&(_, idx, _)| idx == i)
            .map(|&(u, _, _)| u)
            .collect()
    }

    /// All `(u, i, color)` with `v` the i-parent of `u`.
    pub fn children_of(&self, v: VertexId) -> &[(VertexId, u8, EdgeColor)] {
        &self.children[v as usize]
    }

    /// Vertices adjacent to `v` through any i-edge, in either direction.
    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[v as usize]
    }

    /// Directed edge lookup: `Some((i, color))` when `w` is the i-parent of `v`.
    pub fn edge(&self, v: VertexId, w: VertexId) -> Option<(u8, EdgeColor)> {
        self.parents[v as usize]
            .iter()
            .enumerate()
            .find_map(|(idx, slot)| match slot {
                Some((p, c)) if *p == w => Some((idx as u8 + 1, *c)),
                _ => None,
            })
    }

    pub fn marks(&self) -> &BTreeMap<u32, VertexId> {
        &self.marks
    }

    pub fn vertex_with_mark(&self, j: u32) -> Option<VertexId> {
        self.marks.get(&j).copied()
    }

    /// Marks carried by `v`, ascending.
    pub fn marks_of(&self, v: VertexId) -> Vec<u32> {
        self.marks
            .iter()
            .filter(|&(_, &u)| u == v)
            .map(|(&j, _)| j)
            .collect()
    }

    /// Returns a copy with the given marks (replacing existing ones).
    pub fn with_marks(&self, marks: &[(u32, VertexId)]) -> Result<RootedKTree, GraphError> {
        let mut mark_map = BTreeMap::new();
        for &(j, v) in marks {
            if j == 0 {
                return Err(GraphError::MarkZero);
            }
            if (v as usize) >= self.n {
                return Err(GraphError::VertexRange { v: v as u64, n: self.n });
            }
            if mark_map.insert(j, v).is_some() {
                return Err(GraphError::DuplicateMark { j });
            }
        }
        let mut out = self.clone();
        out.marks = mark_map;
        Ok(out)
    }

    /// Checks every rooted-k-tree invariant and reports each violated rule
    /// with witness vertices.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_parent_slots(&mut report);
        self.check_acyclic(&mut report);
        self.check_parent_tournament(&mut report);
        self.check_initial_tournament(&mut report);
        self.check_marks(&mut report);
        report
    }

    fn check_parent_slots(&self, report: &mut ValidationReport) {
        for v in 0..self.n as VertexId {
            let slots = &self.parents[v as usize];
            let filled: Vec<usize> = (0..self.k).filter(|&i| slots[i].is_some()).collect();
            let contiguous = filled.iter().enumerate().all(|(pos, &i)| pos == i);
            let mut targets: Vec<VertexId> =
                slots.iter().flatten().map(|&(w, _)| w).collect();
            targets.sort_unstable();
            let distinct = targets.windows(2).all(|w| w[0] != w[1]);
            let self_loop = slots.iter().flatten().any(|&(w, _)| w == v);
            if !contiguous || !distinct || self_loop {
                report.violations.push(Violation {
                    rule: "parent-slots",
                    witnesses: vec![v],
                });
            }
        }
    }

    fn check_acyclic(&self, report: &mut ValidationReport) {
        // Iterative DFS over the parent digraph; 0 = new, 1 = open, 2 = done.
        let mut state = vec![0u8; self.n];
        for start in 0..self.n as VertexId {
            if state[start as usize] != 0 {
                continue;
            }
            let mut stack = vec![(start, 0usize)];
            state[start as usize] = 1;
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                let slots = &self.parents[v as usize];
                let mut advanced = false;
                while *next < slots.len() {
                    let idx = *next;
                    *next += 1;
                    if let Some((w, _)) = slots[idx] {
                        match state[w as usize] {
                            0 => {
                                state[w as usize] = 1;
                                stack.push((w, 0));
                                advanced = true;
                                break;
                            }
                            1 => {
                                report.violations.push(Violation {
                                    rule: "acyclicity",
                                    witnesses: vec![v, w],
                                });
                                return;
                            }
                            _ => {}
                        }
                    }
                }
                if !advanced && stack.last().map(|&(u, _)| u) == Some(v) {
                    state[v as usize] = 2;
                    stack.pop();
                }
            }
        }
    }

    fn check_parent_tournament(&self, report: &mut ValidationReport) {
        for v in 0..self.n as VertexId {
            let list: Vec<(u8, VertexId)> =
                self.parent_list(v).map(|(i, w, _)| (i, w)).collect();
            for a in 0..list.len() {
                for b in a + 1..list.len() {
                    let (_, w) = list[a];
                    let (i2, w2) = list[b];
                    let ok = self
                        .parent_list(w)
                        .any(|(i3, w3, _)| w3 == w2 && i3 <= i2);
                    if !ok {
                        report.violations.push(Violation {
                            rule: "parent-tournament",
                            witnesses: vec![v, w, w2],
                        });
                    }
                }
            }
        }
    }

    fn check_initial_tournament(&self, report: &mut ValidationReport) {
        let mut initial: Vec<VertexId> = (0..self.n as VertexId)
            .filter(|&v| self.parent_count(v) < self.k)
            .collect();
        if initial.len() > self.k {
            report.violations.push(Violation {
                rule: "initial-tournament",
                witnesses: initial,
            });
            return;
        }
        // Sorted by descending parent count the set must read t-1, t-2, ..., 0
        // and the i-parent of the vertex in position a must sit in position a+i.
        initial.sort_by_key(|&v| std::cmp::Reverse((self.parent_count(v), v)));
        let t = initial.len();
        for (pos, &v) in initial.iter().enumerate() {
            if self.parent_count(v) != t - 1 - pos {
                report.violations.push(Violation {
                    rule: "initial-tournament",
                    witnesses: initial.clone(),
                });
                return;
            }
            for (i, w, _) in self.parent_list(v) {
                if initial.get(pos + i as usize) != Some(&w) {
                    report.violations.push(Violation {
                        rule: "initial-tournament",
                        witnesses: vec![v, w],
                    });
                    return;
                }
            }
        }
    }

    fn check_marks(&self, report: &mut ValidationReport) {
        let mut seen: BTreeMap<VertexId, u32> = BTreeMap::new();
        for (&j, &v) in &self.marks {
            if seen.insert(v, j).is_some() {
                report.violations.push(Violation {
                    rule: "mark-uniqueness",
                    witnesses: vec![v],
                });
            }
        }
    }
}

/// Plain undirected simple graph, the encoder input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainGraph {
    n: usize,
    edges: Vec<(VertexId, VertexId)>,
    adj: Vec<Vec<VertexId>>,
}

impl PlainGraph {
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<PlainGraph, GraphError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut adj = vec![Vec::new(); n];
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if (u as usize) >= n {
                return Err(GraphError::VertexRange { v: u as u64, n });
            }
            if (v as usize) >= n {
                return Err(GraphError::VertexRange { v: v as u64, n });
            }
            if u == v {
                return Err(GraphError::Invalid(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(GraphError::Invalid(format!(
                    "duplicate edge {} {}",
                    e.0, e.1
                )));
            }
            norm.push(e);
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        norm.sort_unstable();
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(PlainGraph { n, edges: norm, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Normalized edge list, `(min, max)` sorted.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn adj(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v as usize]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v as usize].len()
    }
}

/// Undirected kept-edge subgraph of a rooted k-tree, with orientation and
/// fill edges forgotten. This is the encoder round-trip inverse.
pub fn kept_subgraph(t: &RootedKTree) -> PlainGraph {
    let mut edges = Vec::new();
    for v in 0..t.n() as VertexId {
        for (_, w, color) in t.parent_list(v) {
            if color == EdgeColor::Kept {
                edges.push((v.min(w), v.max(w)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    PlainGraph::from_edges(t.n(), &edges).expect("kept subgraph is simple")
}

/// Disjoint union with `b`'s vertex ids shifted by `a.n()`. Both inputs
/// must be unmarked and share the arity k. The result is not a valid rooted
/// k-tree (two initial tournaments); it is still useful for type
/// statistics, which are local.
pub fn disjoint_union(a: &RootedKTree, b: &RootedKTree) -> Result<RootedKTree, GraphError> {
    if a.k() != b.k() {
        return Err(GraphError::Invalid("arity mismatch in disjoint union".into()));
    }
    if !a.marks().is_empty() || !b.marks().is_empty() {
        return Err(GraphError::Invalid(
            "disjoint union of marked graphs is ambiguous".into(),
        ));
    }
    let shift = a.n() as VertexId;
    let mut entries = Vec::new();
    for v in 0..a.n() as VertexId {
        for (i, w, c) in a.parent_list(v) {
            entries.push((v, i, w, c));
        }
    }
    for v in 0..b.n() as VertexId {
        for (i, w, c) in b.parent_list(v) {
            entries.push((v + shift, i, w + shift, c));
        }
    }
    RootedKTree::from_parts(a.n() + b.n(), a.k(), &entries, &[])
}

/// Either graph file payload.
#[derive(Debug, Clone)]
pub enum GraphFile {
    KTree(RootedKTree),
    Plain(PlainGraph),
}

/// Parses the line-oriented text format.
///
/// ```text
/// # comment
/// ktree <n> <k>
/// p <v> <i> <w> <c>    # w is the i-parent of v, c in {0=KEPT, 1=FILL}
/// m <j> <v>            # vertex v satisfies U_j
/// ```
///
/// or, for plain graphs:
///
/// ```text
/// graph <n>
/// e <u> <v>
/// ```
pub fn parse_graph_file(text: &str) -> Result<GraphFile, GraphError> {
    let mut header: Option<(bool, usize, usize)> = None;
    let mut parent_entries = Vec::new();
    let mut mark_entries = Vec::new();
    let mut edge_entries: Vec<(VertexId, VertexId)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| GraphError::Parse { line, msg };
        let num = |s: &str| -> Result<u64, GraphError> {
            s.parse::<u64>()
                .map_err(|_| err(format!("expected integer, got `{s}`")))
        };
        match fields[0] {
            "ktree" => {
                if fields.len() != 3 {
                    return Err(err("expected `ktree <n> <k>`".into()));
                }
                if header.is_some() {
                    return Err(err("duplicate header".into()));
                }
                header = Some((true, num(fields[1])? as usize, num(fields[2])? as usize));
            }
            "graph" => {
                if fields.len() != 2 {
                    return Err(err("expected `graph <n>`".into()));
                }
                if header.is_some() {
                    return Err(err("duplicate header".into()));
                }
                header = Some((false, num(fields[1])? as usize, 0));
            }
            "p" => {
                if fields.len() != 5 {
                    return Err(err("expected `p <v> <i> <w> <c>`".into()));
                }
                let v = num(fields[1])?;
                let i = num(fields[2])?;
                let w = num(fields[3])?;
                let c = EdgeColor::from_code(num(fields[4])?)
                    .ok_or_else(|| err(format!("bad color `{}`", fields[4])))?;
                if i == 0 || i > u8::MAX as u64 {
                    return Err(GraphError::ParentRange { i, k: 0 });
                }
                parent_entries.push((v as VertexId, i as u8, w as VertexId, c));
            }
            "m" => {
                if fields.len() != 3 {
                    return Err(err("expected `m <j> <v>`".into()));
                }
                mark_entries.push((num(fields[1])? as u32, num(fields[2])? as VertexId));
            }
            "e" => {
                if fields.len() != 3 {
                    return Err(err("expected `e <u> <v>`".into()));
                }
                edge_entries.push((num(fields[1])? as VertexId, num(fields[2])? as VertexId));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    match header {
        Some((true, n, k)) => {
            if !edge_entries.is_empty() {
                return Err(GraphError::Invalid(
                    "`e` lines are not allowed in a ktree file".into(),
                ));
            }
            Ok(GraphFile::KTree(RootedKTree::from_parts(
                n,
                k,
                &parent_entries,
                &mark_entries,
            )?))
        }
        Some((false, n, _)) => {
            if !parent_entries.is_empty() || !mark_entries.is_empty() {
                return Err(GraphError::Invalid(
                    "`p`/`m` lines are not allowed in a plain graph file".into(),
                ));
            }
            Ok(GraphFile::Plain(PlainGraph::from_edges(n, &edge_entries)?))
        }
        None => Err(GraphError::Invalid("missing header line".into())),
    }
}

pub fn parse_ktree(text: &str) -> Result<RootedKTree, GraphError> {
    match parse_graph_file(text)? {
        GraphFile::KTree(t) => Ok(t),
        GraphFile::Plain(_) => Err(GraphError::Invalid(
            "expected a ktree file, found a plain graph".into(),
        )),
    }
}

pub fn parse_plain_graph(text: &str) -> Result<PlainGraph, GraphError> {
    match parse_graph_file(text)? {
        GraphFile::Plain(g) => Ok(g),
        GraphFile::KTree(_) => Err(GraphError::Invalid(
            "expected a plain graph file, found a ktree".into(),
        )),
    }
}

pub fn format_ktree(t: &RootedKTree) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ktree {} {}", t.n(), t.k());
    for v in 0..t.n() as VertexId {
        for (i, w, color) in t.parent_list(v) {
            let _ = writeln!(out, "p {v} {i} {w} {}", color.code());
        }
    }
    for (&j, &v) in t.marks() {
        let _ = writeln!(out, "m {j} {v}");
    }
    out
}

pub fn format_plain_graph(g: &PlainGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {}", g.n());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "e {u} {v}");
    }
    out
}

/// Builds a random rooted k-tree with `n` vertices by the recursive
/// definition: start from the transitive tournament on `min(n, k)` vertices,
/// then attach each new vertex to a parent clique chosen uniformly at
/// random. Deterministic per seed. All edges are colored `Kept`.
pub fn generate_random_rooted_ktree(n: usize, k: usize, seed: u64) -> RootedKTree {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    assert!(n >= 1 && k >= 1, "need n >= 1 and k >= 1");

    let t = n.min(k);
    let mut entries: Vec<(VertexId, u8, VertexId, EdgeColor)> = Vec::new();
    // Tournament on vertices 0..t, oriented from later to earlier: the
    // i-parent of vertex a is a - i.
    for a in 0..t {
        for i in 1..=a {
            entries.push((a as VertexId, i as u8, (a - i) as VertexId, EdgeColor::Kept));
        }
    }
    // Parent cliques as directed paths c_1 -> c_2 -> ... -> c_k.
    let mut cliques: Vec<Vec<VertexId>> = Vec::new();
    if t == k {
        cliques.push((0..k as VertexId).rev().collect());
    }
    for v in t..n {
        let pick = crate::rng_util::uniform_index(&mut rng, cliques.len());
        let clique = cliques[pick].clone();
        for (idx, &w) in clique.iter().enumerate() {
            entries.push((v as VertexId, idx as u8 + 1, w, EdgeColor::Kept));
        }
        for drop in 0..k {
            let mut fresh = Vec::with_capacity(k);
            fresh.push(v as VertexId);
            for (idx, &w) in clique.iter().enumerate() {
                if idx != drop {
                    fresh.push(w);
                }
            }
            cliques.push(fresh);
        }
    }
    RootedKTree::from_parts(n, k, &entries, &[]).expect("generator output is well-formed")
}
