//! Exact tree decompositions and encoding of bounded tree-width graphs as
//! 2-edge-colored rooted k-trees.
//!
//! The solver does branch and bound over elimination orders, so it is meant
//! for desk-scale inputs (n <= 64). The encoder turns a width-<=k
//! decomposition into a rooted k-tree whose kept edges recover the input
//! graph exactly; the completion is deterministic, so sequence statistics
//! downstream are reproducible.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::graph::{EdgeColor, GraphError, PlainGraph, RootedKTree, VertexId};

#[derive(Debug, Error)]
pub enum DecompError {
    #[error("graph has no width-{k} tree decomposition")]
    Infeasible { k: usize },
    #[error("node budget {budget} exhausted before a decision was reached")]
    Timeout { budget: u64 },
    #[error("graph too large for the exact solver (n = {n}, limit 64)")]
    TooLarge { n: usize },
    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("bag of size {size} exceeds width bound {k}")]
    WidthOverflow { size: usize, k: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A rooted tree decomposition: bags of vertices, adjacency among bag
/// indices, and a root bag.
#[derive(Debug, Clone)]
pub struct TreeDecomposition {
    pub bags: Vec<BTreeSet<VertexId>>,
    pub tree: Vec<Vec<usize>>,
    pub root: usize,
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }
}

/// Independent validity check: tree shape, coverage of vertices and edges,
/// per-vertex connectivity, and the width bound.
pub fn validate_decomposition(
    g: &PlainGraph,
    td: &TreeDecomposition,
    k: usize,
) -> Result<(), DecompError> {
    let b = td.bags.len();
    let fail = |msg: String| Err(DecompError::InvalidDecomposition(msg));
    if b == 0 {
        return fail("no bags".into());
    }
    if td.tree.len() != b {
        return fail("tree adjacency has wrong length".into());
    }
    if td.root >= b {
        return fail("root out of range".into());
    }
    let mut edge_count = 0usize;
    for (i, nbrs) in td.tree.iter().enumerate() {
        for &j in nbrs {
            if j >= b {
                return fail(format!("tree neighbor {j} out of range"));
            }
            if !td.tree[j].contains(&i) {
                return fail(format!("tree edge {i}-{j} not symmetric"));
            }
            edge_count += 1;
        }
    }
    if edge_count != 2 * (b - 1) {
        return fail("tree does not have exactly bags-1 edges".into());
    }
    // Connectivity of the bag tree.
    let mut seen = vec![false; b];
    let mut queue = VecDeque::from([td.root]);
    seen[td.root] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &td.tree[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return fail("bag tree is disconnected".into());
    }
    for bag in &td.bags {
        if bag.len() > k + 1 {
            return Err(DecompError::WidthOverflow { size: bag.len(), k });
        }
        if let Some(&v) = bag.iter().next_back() {
            if v as usize >= g.n() {
                return fail(format!("bag vertex {v} out of range"));
            }
        }
    }
    // Vertex coverage and per-vertex connectivity.
    for v in 0..g.n() as VertexId {
        let holders: Vec<usize> = (0..b).filter(|&i| td.bags[i].contains(&v)).collect();
        if holders.is_empty() {
            return fail(format!("vertex {v} is in no bag"));
        }
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut queue = VecDeque::from([holders[0]]);
        seen.insert(holders[0]);
        while let Some(i) = queue.pop_front() {
            for &j in &td.tree[i] {
                if td.bags[j].contains(&v) && seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
        if seen.len() != holders.len() {
            return fail(format!("bags containing vertex {v} are not connected"));
        }
    }
    for &(u, v) in g.edges() {
        if !td.bags.iter().any(|bag| bag.contains(&u) && bag.contains(&v)) {
            return fail(format!("edge {u}-{v} is in no bag"));
        }
    }
    Ok(())
}

/// Parses the decomposition text format:
///
/// ```text
/// td <bags> <root>
/// b <idx> <v>...      # bag contents
/// t <i> <j>           # tree edge
/// ```
pub fn parse_decomposition(text: &str) -> Result<TreeDecomposition, DecompError> {
    let mut header: Option<(usize, usize)> = None;
    let mut bags: Vec<BTreeSet<VertexId>> = Vec::new();
    let mut tree: Vec<Vec<usize>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let bad = |msg: &str| {
            DecompError::InvalidDecomposition(format!("line {}: {msg}", lineno + 1))
        };
        let num = |s: &str| -> Result<usize, DecompError> {
            s.parse().map_err(|_| bad("expected an integer"))
        };
        match fields[0] {
            "td" => {
                if fields.len() != 3 || header.is_some() {
                    return Err(bad("expected a single `td <bags> <root>`"));
                }
                let n = num(fields[1])?;
                header = Some((n, num(fields[2])?));
                bags = vec![BTreeSet::new(); n];
                tree = vec![Vec::new(); n];
            }
            "b" => {
                if fields.len() < 2 {
                    return Err(bad("expected `b <idx> <v>...`"));
                }
                let idx = num(fields[1])?;
                if idx >= bags.len() {
                    return Err(bad("bag index out of range"));
                }
                for f in &fields[2..] {
                    bags[idx].insert(num(f)? as VertexId);
                }
            }
            "t" => {
                if fields.len() != 3 {
                    return Err(bad("expected `t <i> <j>`"));
                }
                let (i, j) = (num(fields[1])?, num(fields[2])?);
                if i >= tree.len() || j >= tree.len() {
                    return Err(bad("tree edge out of range"));
                }
                tree[i].push(j);
                tree[j].push(i);
            }
            other => return Err(bad(&format!("unknown directive `{other}`"))),
        }
    }
    let (count, root) = header.ok_or_else(|| {
        DecompError::InvalidDecomposition("missing `td` header".into())
    })?;
    if root >= count {
        return Err(DecompError::InvalidDecomposition("root out of range".into()));
    }
    Ok(TreeDecomposition { bags, tree, root })
}

pub fn format_decomposition(td: &TreeDecomposition) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "td {} {}", td.bags.len(), td.root);
    for (i, bag) in td.bags.iter().enumerate() {
        let vs: Vec<String> = bag.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "b {i} {}", vs.join(" "));
    }
    for (i, nbrs) in td.tree.iter().enumerate() {
        for &j in nbrs {
            if i < j {
                let _ = writeln!(out, "t {i} {j}");
            }
        }
    }
    out
}

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Finds a width-<=k tree decomposition by branch and bound over
/// elimination orders, or reports that none exists. The search eliminates
/// only vertices of current degree <= k, takes simplicial vertices without
/// branching, and memoizes failed residual graphs.
pub fn exact_tree_decomposition(
    g: &PlainGraph,
    k: usize,
    budget: u64,
) -> Result<TreeDecomposition, DecompError> {
    let n = g.n();
    if n == 0 {
        return Err(DecompError::InvalidDecomposition("empty graph".into()));
    }
    if n > 64 {
        return Err(DecompError::TooLarge { n });
    }
    if n <= k + 1 {
        // Everything fits in one bag.
        return Ok(TreeDecomposition {
            bags: vec![(0..n as VertexId).collect()],
            tree: vec![vec![]],
            root: 0,
        });
    }

    let mut adj: Vec<u64> = vec![0; n];
    for &(u, v) in g.edges() {
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    let mut search = Search {
        k,
        budget,
        visited: 0,
        failed: HashSet::new(),
        order: Vec::with_capacity(n),
    };
    match search.run(adj.clone(), all) {
        SearchOutcome::Found => {
            let order = search.order.clone();
            Ok(decomposition_from_order(g, &order, k))
        }
        SearchOutcome::Exhausted => Err(DecompError::Infeasible { k }),
        SearchOutcome::Budget => Err(DecompError::Timeout { budget }),
    }
}

enum SearchOutcome {
    Found,
    Exhausted,
    Budget,
}

struct Search {
    k: usize,
    budget: u64,
    visited: u64,
    failed: HashSet<u64>,
    order: Vec<VertexId>,
}

impl Search {
    fn run(&mut self, mut adj: Vec<u64>, alive: u64) -> SearchOutcome {
        if alive.count_ones() as usize <= self.k + 1 {
            // Remaining vertices fit in a single bag; any order works.
            let mut rest = alive;
            while rest != 0 {
                let v = rest.trailing_zeros();
                self.order.push(v);
                rest &= rest - 1;
            }
            return SearchOutcome::Found;
        }
        self.visited += 1;
        if self.visited > self.budget {
            return SearchOutcome::Budget;
        }
        if self.failed.contains(&alive) {
            return SearchOutcome::Exhausted;
        }

        let mut candidates: Vec<(u32, u32)> = Vec::new(); // (degree, vertex)
        let mut rest = alive;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            let nbrs = adj[v as usize] & alive;
            let deg = nbrs.count_ones();
            if deg as usize <= self.k {
                if is_clique(&adj, nbrs) {
                    // A simplicial vertex of degree <= k is always safe to
                    // eliminate first; no branching needed.
                    self.order.push(v);
                    eliminate(&mut adj, alive, v);
                    let out = self.run(adj, alive & !(1 << v));
                    if matches!(out, SearchOutcome::Exhausted) {
                        self.order.pop();
                        self.failed.insert(alive);
                    }
                    return out;
                }
                candidates.push((deg, v));
            }
        }
        if candidates.is_empty() {
            self.failed.insert(alive);
            return SearchOutcome::Exhausted;
        }
        candidates.sort_unstable();
        for (_, v) in candidates {
            self.order.push(v);
            let saved = eliminate(&mut adj, alive, v);
            match self.run(adj.clone(), alive & !(1 << v)) {
                SearchOutcome::Found => return SearchOutcome::Found,
                SearchOutcome::Budget => return SearchOutcome::Budget,
                SearchOutcome::Exhausted => {
                    restore(&mut adj, v, saved);
                    self.order.pop();
                }
            }
        }
        self.failed.insert(alive);
        SearchOutcome::Exhausted
    }

}

fn is_clique(adj: &[u64], set: u64) -> bool {
    let mut rest = set;
    while rest != 0 {
        let v = rest.trailing_zeros();
        rest &= rest - 1;
        if set & !(adj[v as usize] | (1 << v)) != 0 {
            return false;
        }
    }
    true
}

/// Eliminates `v`: turns its live neighborhood into a clique. Returns the
/// pre-edit rows so the caller can restore.
fn eliminate(adj: &mut [u64], alive: u64, v: u32) -> Vec<(u32, u64)> {
    let nbrs = adj[v as usize] & alive & !(1 << v);
    let mut saved = Vec::new();
    let mut rest = nbrs;
    while rest != 0 {
        let u = rest.trailing_zeros();
        rest &= rest - 1;
        saved.push((u, adj[u as usize]));
        adj[u as usize] |= nbrs & !(1 << u);
    }
    saved
}

fn restore(adj: &mut [u64], _v: u32, saved: Vec<(u32, u64)>) {
    for (u, row) in saved {
        adj[u as usize] = row;
    }
}

/// Builds the decomposition from a (k-bounded) elimination order: the bag of
/// `v` is `v` plus its later fill-neighbors; the parent bag is the bag of
/// the earliest-eliminated later neighbor.
fn decomposition_from_order(g: &PlainGraph, order: &[VertexId], _k: usize) -> TreeDecomposition {
    let n = g.n();
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i;
    }
    let mut adj: Vec<BTreeSet<VertexId>> = vec![BTreeSet::new(); n];
    for &(u, v) in g.edges() {
        adj[u as usize].insert(v);
        adj[v as usize].insert(u);
    }
    let mut bags: Vec<BTreeSet<VertexId>> = vec![BTreeSet::new(); n];
    for (i, &v) in order.iter().enumerate() {
        let later: Vec<VertexId> = adj[v as usize]
            .iter()
            .copied()
            .filter(|&u| pos[u as usize] > i)
            .collect();
        let mut bag: BTreeSet<VertexId> = later.iter().copied().collect();
        bag.insert(v);
        bags[i] = bag;
        for a in 0..later.len() {
            for b in a + 1..later.len() {
                adj[later[a] as usize].insert(later[b]);
                adj[later[b] as usize].insert(later[a]);
            }
        }
    }
    let mut tree = vec![Vec::new(); n];
    for i in 0..n - 1 {
        let parent = bags[i]
            .iter()
            .filter(|&&u| pos[u as usize] > i)
            .map(|&u| pos[u as usize])
            .min()
            .unwrap_or(i + 1);
        tree[i].push(parent);
        tree[parent].push(i);
    }
    TreeDecomposition {
        bags,
        tree,
        root: n - 1,
    }
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

struct SmoothNode {
    bag: BTreeSet<VertexId>,
    nbrs: BTreeSet<usize>,
    alive: bool,
}

/// Encodes `g` as a rooted k-tree using the given decomposition.
///
/// Bags are processed root-first; within a bag, unplaced vertices go in id
/// order. Bags are first padded to exactly k+1 vertices from their parent
/// (the root from its children) and stretched so that adjacent bags differ
/// in one vertex, which makes every parent set a clique of size exactly k.
/// Edges of `g` come out `Kept`, completion edges `Fill`.
pub fn encode_as_rooted_ktree(
    g: &PlainGraph,
    td: &TreeDecomposition,
    k: usize,
) -> Result<RootedKTree, DecompError> {
    validate_decomposition(g, td, k)?;
    let n = g.n();
    if n <= k {
        // The whole graph fits in the initial tournament.
        let mut entries = Vec::new();
        for v in 1..n {
            for i in 1..=v {
                let w = (v - i) as VertexId;
                let color = if g.has_edge(v as VertexId, w) {
                    EdgeColor::Kept
                } else {
                    EdgeColor::Fill
                };
                entries.push((v as VertexId, i as u8, w, color));
            }
        }
        return Ok(RootedKTree::from_parts(n, k, &entries, &[])?);
    }

    let mut nodes: Vec<SmoothNode> = td
        .bags
        .iter()
        .enumerate()
        .map(|(i, bag)| SmoothNode {
            bag: bag.clone(),
            nbrs: td.tree[i].iter().copied().collect(),
            alive: true,
        })
        .collect();
    let mut root = td.root;

    contract_subset_bags(&mut nodes, &mut root);
    pad_root(&mut nodes, &mut root, k);

    // Pad non-root bags from their parents, BFS order.
    loop {
        let (order, parent_of) = bfs_parents(&nodes, root);
        let mut changed = false;
        for &i in &order {
            if i == root {
                continue;
            }
            let p = parent_of[&i];
            while nodes[i].bag.len() < k + 1 {
                let pick = nodes[p]
                    .bag
                    .difference(&nodes[i].bag)
                    .next()
                    .copied()
                    .expect("parent bag has k+1 vertices");
                nodes[i].bag.insert(pick);
                changed = true;
            }
            if nodes[i].bag == nodes[p].bag {
                // Fully absorbed; splice it away.
                let nbrs: Vec<usize> = nodes[i].nbrs.iter().copied().collect();
                for x in nbrs {
                    nodes[x].nbrs.remove(&i);
                    if x != p {
                        nodes[x].nbrs.insert(p);
                        nodes[p].nbrs.insert(x);
                    }
                }
                nodes[p].nbrs.remove(&i);
                nodes[i].alive = false;
                nodes[i].nbrs.clear();
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    // Stretch: make adjacent bags differ by exactly one vertex.
    let (_, parent_of) = bfs_parents(&nodes, root);
    for (child, parent) in parent_of {
        let removals: Vec<VertexId> = nodes[parent]
            .bag
            .difference(&nodes[child].bag)
            .copied()
            .collect();
        let additions: Vec<VertexId> = nodes[child]
            .bag
            .difference(&nodes[parent].bag)
            .copied()
            .collect();
        debug_assert_eq!(removals.len(), additions.len());
        if removals.len() <= 1 {
            continue;
        }
        // Break the edge and insert a chain of single-swap bags.
        nodes[parent].nbrs.remove(&child);
        nodes[child].nbrs.remove(&parent);
        let mut prev = parent;
        let mut cur = nodes[parent].bag.clone();
        for j in 0..removals.len() - 1 {
            cur.remove(&removals[j]);
            cur.insert(additions[j]);
            let idx = nodes.len();
            nodes.push(SmoothNode {
                bag: cur.clone(),
                nbrs: BTreeSet::from([prev]),
                alive: true,
            });
            nodes[prev].nbrs.insert(idx);
            prev = idx;
        }
        nodes[prev].nbrs.insert(child);
        nodes[child].nbrs.insert(prev);
    }

    place_vertices(g, &nodes, root, k)
}

fn contract_subset_bags(nodes: &mut [SmoothNode], root: &mut usize) {
    loop {
        let mut action: Option<(usize, usize)> = None;
        'outer: for i in 0..nodes.len() {
            if !nodes[i].alive {
                continue;
            }
            for &j in &nodes[i].nbrs {
                if nodes[i].bag.is_subset(&nodes[j].bag) {
                    action = Some((i, j));
                    break 'outer;
                }
            }
        }
        let Some((i, j)) = action else { break };
        let nbrs: Vec<usize> = nodes[i].nbrs.iter().copied().collect();
        for x in nbrs {
            nodes[x].nbrs.remove(&i);
            if x != j {
                nodes[x].nbrs.insert(j);
                nodes[j].nbrs.insert(x);
            }
        }
        nodes[i].alive = false;
        nodes[i].nbrs.clear();
        if *root == i {
            *root = j;
        }
    }
}

fn pad_root(nodes: &mut [SmoothNode], root: &mut usize, k: usize) {
    loop {
        if nodes[*root].bag.len() > k {
            break;
        }
        let pick = nodes[*root]
            .nbrs
            .iter()
            .flat_map(|&c| nodes[c].bag.difference(&nodes[*root].bag))
            .min()
            .copied();
        match pick {
            Some(v) => {
                nodes[*root].bag.insert(v);
            }
            None => {
                // Every neighbor bag is a subset of the root now.
                let before: Vec<usize> = nodes[*root].nbrs.iter().copied().collect();
                let mut contracted = false;
                for c in before {
                    if nodes[c].bag.is_subset(&nodes[*root].bag) {
                        let nbrs: Vec<usize> = nodes[c].nbrs.iter().copied().collect();
                        for x in nbrs {
                            nodes[x].nbrs.remove(&c);
                            if x != *root {
                                nodes[x].nbrs.insert(*root);
                                nodes[*root].nbrs.insert(x);
                            }
                        }
                        nodes[*root].nbrs.remove(&c);
                        nodes[c].alive = false;
                        nodes[c].nbrs.clear();
                        contracted = true;
                    }
                }
                assert!(
                    contracted,
                    "root padding stalled; n > k so more vertices must exist"
                );
            }
        }
    }
}

fn bfs_order(nodes: &[SmoothNode], root: usize) -> Vec<usize> {
    bfs_parents(nodes, root).0
}

fn bfs_parents(nodes: &[SmoothNode], root: usize) -> (Vec<usize>, BTreeMap<usize, usize>) {
    let mut order = Vec::new();
    let mut parent = BTreeMap::new();
    let mut seen = vec![false; nodes.len()];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &j in &nodes[i].nbrs {
            if !seen[j] && nodes[j].alive {
                seen[j] = true;
                parent.insert(j, i);
                queue.push_back(j);
            }
        }
    }
    (order, parent)
}

fn place_vertices(
    g: &PlainGraph,
    nodes: &[SmoothNode],
    root: usize,
    k: usize,
) -> Result<RootedKTree, DecompError> {
    let n = g.n();
    let mut entries: Vec<(VertexId, u8, VertexId, EdgeColor)> = Vec::new();
    let mut pos: Vec<Option<usize>> = vec![None; n];
    let mut placed = 0usize;

    let place = |v: VertexId,
                     parents: &[VertexId],
                     pos: &mut Vec<Option<usize>>,
                     placed: &mut usize,
                     entries: &mut Vec<(VertexId, u8, VertexId, EdgeColor)>| {
        let mut ordered: Vec<VertexId> = parents.to_vec();
        ordered.sort_by_key(|&w| std::cmp::Reverse(pos[w as usize].expect("parent placed")));
        for (idx, &w) in ordered.iter().enumerate() {
            let color = if g.has_edge(v, w) {
                EdgeColor::Kept
            } else {
                EdgeColor::Fill
            };
            entries.push((v, idx as u8 + 1, w, color));
        }
        pos[v as usize] = Some(*placed);
        *placed += 1;
    };

    let order = bfs_order(nodes, root);
    for (step, &i) in order.iter().enumerate() {
        let bag: Vec<VertexId> = nodes[i].bag.iter().copied().collect();
        if step == 0 {
            let mut so_far: Vec<VertexId> = Vec::new();
            for &v in &bag {
                place(v, &so_far, &mut pos, &mut placed, &mut entries);
                so_far.push(v);
            }
        } else {
            let fresh: Vec<VertexId> = bag
                .iter()
                .copied()
                .filter(|&v| pos[v as usize].is_none())
                .collect();
            if fresh.is_empty() {
                continue;
            }
            if fresh.len() > 1 {
                return Err(DecompError::InvalidDecomposition(format!(
                    "smoothed bag introduces {} new vertices",
                    fresh.len()
                )));
            }
            let v = fresh[0];
            let parents: Vec<VertexId> =
                bag.iter().copied().filter(|&w| w != v).collect();
            debug_assert_eq!(parents.len(), k);
            place(v, &parents, &mut pos, &mut placed, &mut entries);
        }
    }
    if placed != n {
        return Err(DecompError::InvalidDecomposition(format!(
            "only {placed} of {n} vertices were placed"
        )));
    }
    let t = RootedKTree::from_parts(n, k, &entries, &[])?;
    // The kept subgraph must recover the input exactly.
    let kept = crate::graph::kept_subgraph(&t);
    if kept.edges() != g.edges() {
        return Err(DecompError::InvalidDecomposition(
            "kept subgraph does not match the input graph".into(),
        ));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::kept_subgraph;

    fn path(n: usize) -> PlainGraph {
        let edges: Vec<(VertexId, VertexId)> =
            (1..n).map(|v| ((v - 1) as VertexId, v as VertexId)).collect();
        PlainGraph::from_edges(n, &edges).unwrap()
    }

    fn cycle(n: usize) -> PlainGraph {
        let mut edges: Vec<(VertexId, VertexId)> =
            (1..n).map(|v| ((v - 1) as VertexId, v as VertexId)).collect();
        edges.push((n as VertexId - 1, 0));
        PlainGraph::from_edges(n, &edges).unwrap()
    }

    fn complete(n: usize) -> PlainGraph {
        let mut edges = Vec::new();
        for u in 0..n as VertexId {
            for v in u + 1..n as VertexId {
                edges.push((u, v));
            }
        }
        PlainGraph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn path_has_width_one_decomposition() {
        let g = path(5);
        let td = exact_tree_decomposition(&g, 1, DEFAULT_NODE_BUDGET).unwrap();
        validate_decomposition(&g, &td, 1).unwrap();
        // Every bag is an edge or smaller.
        assert!(td.bags.iter().all(|b| b.len() <= 2));
    }

    #[test]
    fn k4_is_infeasible_at_width_two() {
        let g = complete(4);
        match exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET) {
            Err(DecompError::Infeasible { k: 2 }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn random_two_tree_subgraph_is_feasible() {
        // Random subgraphs of random 2-trees keep tree-width <= 2.
        for seed in 0..10 {
            let t = crate::graph::generate_random_rooted_ktree(20, 2, seed);
            let full = kept_subgraph(&t);
            let edges: Vec<(VertexId, VertexId)> = full
                .edges()
                .iter()
                .enumerate()
                .filter(|(i, _)| (i + seed as usize) % 3 != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = PlainGraph::from_edges(20, &edges).unwrap();
            let td = exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET).unwrap();
            validate_decomposition(&g, &td, 2).unwrap();
        }
    }

    #[test]
    fn timeout_is_distinct_from_infeasible() {
        let g = cycle(12);
        match exact_tree_decomposition(&g, 2, 1) {
            Err(DecompError::Timeout { budget: 1 }) => {}
            other => panic!("expected timeout, got {other:?}"),
        }
        // With no budget pressure the same instance is feasible.
        assert!(exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET).is_ok());
    }

    #[test]
    fn encode_path_as_one_tree() {
        let g = path(3);
        let td = exact_tree_decomposition(&g, 1, DEFAULT_NODE_BUDGET).unwrap();
        let t = encode_as_rooted_ktree(&g, &td, 1).unwrap();
        assert!(t.validate().ok());
        // No fill edges in a tree.
        for v in 0..t.n() as VertexId {
            for (_, _, color) in t.parent_list(v) {
                assert_eq!(color, EdgeColor::Kept);
            }
        }
        assert_eq!(kept_subgraph(&t).edges(), g.edges());
    }

    #[test]
    fn encode_cycle_has_one_fill_edge() {
        let g = cycle(4);
        let td = exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET).unwrap();
        let t = encode_as_rooted_ktree(&g, &td, 2).unwrap();
        assert!(t.validate().ok(), "{:?}", t.validate());
        let fills: usize = (0..t.n() as VertexId)
            .flat_map(|v| t.parent_list(v).collect::<Vec<_>>())
            .filter(|&(_, _, c)| c == EdgeColor::Fill)
            .count();
        // A 2-tree on 4 vertices has 2n-3 = 5 edges; C4 has 4.
        assert_eq!(fills, 1);
        assert_eq!(kept_subgraph(&t).edges(), g.edges());
    }

    #[test]
    fn encode_roundtrip_on_random_subgraphs() {
        for seed in 0..20 {
            let base = crate::graph::generate_random_rooted_ktree(14, 2, 100 + seed);
            let full = kept_subgraph(&base);
            let edges: Vec<(VertexId, VertexId)> = full
                .edges()
                .iter()
                .enumerate()
                .filter(|(i, _)| (i + seed as usize) % 4 != 1)
                .map(|(_, &e)| e)
                .collect();
            let g = PlainGraph::from_edges(14, &edges).unwrap();
            let td = exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET).unwrap();
            let t = encode_as_rooted_ktree(&g, &td, 2).unwrap();
            let report = t.validate();
            assert!(report.ok(), "seed {seed}: {report:?}");
            assert_eq!(kept_subgraph(&t).edges(), g.edges(), "seed {seed}");
            let few_parents = (0..t.n() as VertexId)
                .filter(|&v| t.parent_count(v) < 2)
                .count();
            assert!(few_parents <= 2);
        }
    }

    #[test]
    fn small_graph_fits_in_tournament() {
        let g = PlainGraph::from_edges(2, &[(0, 1)]).unwrap();
        let td = exact_tree_decomposition(&g, 3, DEFAULT_NODE_BUDGET).unwrap();
        let t = encode_as_rooted_ktree(&g, &td, 3).unwrap();
        assert!(t.validate().ok());
        assert_eq!(kept_subgraph(&t).edges(), g.edges());
    }

    #[test]
    fn decomposition_text_roundtrip() {
        let g = path(6);
        let td = exact_tree_decomposition(&g, 1, DEFAULT_NODE_BUDGET).unwrap();
        let text = format_decomposition(&td);
        let back = parse_decomposition(&text).unwrap();
        validate_decomposition(&g, &back, 1).unwrap();
        assert_eq!(format_decomposition(&back), text);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        /// The encoder must accept any valid decomposition, not just the
        /// solver's shape: re-rooted and redundant-bag variants still give
        /// a valid k-tree whose kept subgraph is the input.
        #[test]
        fn encoder_accepts_mutated_decompositions(
            seed in 0u64..400,
            new_root in 0usize..8,
            dup in 0usize..8,
        ) {
            let base = crate::graph::generate_random_rooted_ktree(12, 2, 7000 + seed);
            let full = kept_subgraph(&base);
            let edges: Vec<(VertexId, VertexId)> = full
                .edges()
                .iter()
                .enumerate()
                .filter(|(i, _)| (i + seed as usize) % 4 != 2)
                .map(|(_, &e)| e)
                .collect();
            let g = PlainGraph::from_edges(12, &edges).unwrap();
            let mut td = exact_tree_decomposition(&g, 2, DEFAULT_NODE_BUDGET).unwrap();
            // Re-root anywhere and hang a duplicate bag off another.
            td.root = new_root % td.bags.len();
            let from = dup % td.bags.len();
            let idx = td.bags.len();
            td.bags.push(td.bags[from].clone());
            td.tree.push(vec![from]);
            td.tree[from].push(idx);
            validate_decomposition(&g, &td, 2).unwrap();
            let t = encode_as_rooted_ktree(&g, &td, 2).unwrap();
            let report = t.validate();
            proptest::prop_assert!(report.ok(), "{report:?}");
            let kept = kept_subgraph(&t);
            proptest::prop_assert_eq!(kept.edges(), g.edges());
        }
    }
}
