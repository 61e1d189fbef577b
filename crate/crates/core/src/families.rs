//! Deterministic graph families used as verification corpora.
//!
//! Each generator produces a valid rooted k-tree; the growing sequences
//! (`*_family`) have strictly increasing orders so they can be fed straight
//! into sequence statistics.

use crate::graph::{EdgeColor, RootedKTree, VertexId};

type Entry = (VertexId, u8, VertexId, EdgeColor);

fn build(n: usize, k: usize, entries: Vec<Entry>) -> RootedKTree {
    RootedKTree::from_parts(n, k, &entries, &[]).expect("family generator is well-formed")
}

/// Directed chain `v_{n-1} -> ... -> v_1 -> v_0`: each vertex's 1-parent is
/// its predecessor. A rooted 1-tree realization of the path P_n.
pub fn path_chain(n: usize) -> RootedKTree {
    let entries = (1..n)
        .map(|v| (v as VertexId, 1, (v - 1) as VertexId, EdgeColor::Kept))
        .collect();
    build(n, 1, entries)
}

/// Star S_n rooted at the center: every leaf's 1-parent is vertex 0.
pub fn star(n: usize) -> RootedKTree {
    let entries = (1..n)
        .map(|v| (v as VertexId, 1, 0, EdgeColor::Kept))
        .collect();
    build(n, 1, entries)
}

/// Complete binary in-tree of the given height (height 0 is a single
/// vertex): edges point from each vertex to its tree parent. Vertices are
/// numbered level by level, so vertex v > 0 has 1-parent (v-1)/2.
pub fn binary_in_tree(height: u32) -> RootedKTree {
    let n = (1usize << (height + 1)) - 1;
    let entries = (1..n)
        .map(|v| (v as VertexId, 1, ((v - 1) / 2) as VertexId, EdgeColor::Kept))
        .collect();
    build(n, 1, entries)
}

/// Two-level in-star: `hubs` hub vertices point to a single apex, and each
/// hub carries `leaves_per_hub` leaves pointing to it. Both hub and leaf
/// counts grow along the family, which makes the leaf -> hub edges lead to a
/// type of unbounded count.
pub fn two_level_star(hubs: usize, leaves_per_hub: usize) -> RootedKTree {
    let n = 1 + hubs + hubs * leaves_per_hub;
    let mut entries = Vec::new();
    for h in 0..hubs {
        entries.push(((1 + h) as VertexId, 1, 0, EdgeColor::Kept));
    }
    for h in 0..hubs {
        for l in 0..leaves_per_hub {
            let v = 1 + hubs + h * leaves_per_hub + l;
            entries.push((v as VertexId, 1, (1 + h) as VertexId, EdgeColor::Kept));
        }
    }
    build(n, 1, entries)
}

/// Caterpillar: a spine chain with exactly one leaf hanging off every spine
/// vertex. Spine edges are `Fill`, leaf edges `Kept`, so removing the fill
/// color leaves a perfect matching between leaves and spine vertices.
pub fn caterpillar(spine: usize) -> RootedKTree {
    let n = 2 * spine;
    let mut entries = Vec::new();
    for s in 1..spine {
        entries.push((s as VertexId, 1, (s - 1) as VertexId, EdgeColor::Fill));
    }
    for s in 0..spine {
        entries.push(((spine + s) as VertexId, 1, s as VertexId, EdgeColor::Kept));
    }
    build(n, 1, entries)
}

/// Perfect matching with a star backbone: `hubs` hub vertices point to an
/// apex through `Fill` edges, and each hub carries exactly one leaf through
/// a `Kept` edge. Hub and leaf types have exactly equal counts, so the
/// matching inequality is tight on both sides; removing the fill color
/// leaves the bare matching.
pub fn matched_star(hubs: usize) -> RootedKTree {
    let n = 1 + 2 * hubs;
    let mut entries = Vec::new();
    for h in 0..hubs {
        entries.push(((1 + h) as VertexId, 1, 0, EdgeColor::Fill));
        entries.push(((1 + hubs + h) as VertexId, 1, (1 + h) as VertexId, EdgeColor::Kept));
    }
    build(n, 1, entries)
}

pub fn matched_star_family(hub_counts: &[usize]) -> Vec<RootedKTree> {
    hub_counts.iter().map(|&h| matched_star(h)).collect()
}

/// Comb-shaped 2-tree: an apex `d` (vertex 0), a spine `c_1, ..., c_s`
/// where `c_1`'s 1-parent is the apex and every later spine vertex has
/// 1-parent the previous spine vertex and 2-parent the apex, plus one tooth
/// per spine vertex attached to the clique `{c_j, apex}`.
///
/// From a spine vertex there are several all-important routes to its
/// 2-parent (the apex): the direct 2-edge and routes through 1-edges, which
/// is exactly the situation the parent maps must agree on.
pub fn comb(spine: usize) -> RootedKTree {
    assert!(spine >= 2);
    let n = 1 + 2 * spine;
    let mut entries = Vec::new();
    // Spine: c_j is vertex j, apex is vertex 0.
    entries.push((1, 1, 0, EdgeColor::Kept));
    for j in 2..=spine {
        entries.push((j as VertexId, 1, (j - 1) as VertexId, EdgeColor::Kept));
        entries.push((j as VertexId, 2, 0, EdgeColor::Fill));
    }
    // Teeth: tooth of c_j is vertex spine + j.
    for j in 1..=spine {
        entries.push(((spine + j) as VertexId, 1, j as VertexId, EdgeColor::Kept));
        entries.push(((spine + j) as VertexId, 2, 0, EdgeColor::Fill));
    }
    build(n, 2, entries)
}

/// Triangle stack ("2-path"): v_j has 1-parent v_{j-1} and 2-parent v_{j-2}.
/// Every 2-edge here has a 1-edge detour, so all long-range parent routes
/// rewrite to chains of 1-edges.
pub fn triangle_stack(n: usize) -> RootedKTree {
    let mut entries = Vec::new();
    if n >= 2 {
        entries.push((1, 1, 0, EdgeColor::Kept));
    }
    for v in 2..n {
        entries.push((v as VertexId, 1, (v - 1) as VertexId, EdgeColor::Kept));
        entries.push((v as VertexId, 2, (v - 2) as VertexId, EdgeColor::Kept));
    }
    build(n, 2, entries)
}

pub fn path_family(sizes: &[usize]) -> Vec<RootedKTree> {
    sizes.iter().map(|&n| path_chain(n)).collect()
}

pub fn star_family(sizes: &[usize]) -> Vec<RootedKTree> {
    sizes.iter().map(|&n| star(n)).collect()
}

pub fn binary_in_tree_family(heights: &[u32]) -> Vec<RootedKTree> {
    heights.iter().map(|&h| binary_in_tree(h)).collect()
}

pub fn caterpillar_family(spines: &[usize]) -> Vec<RootedKTree> {
    spines.iter().map(|&s| caterpillar(s)).collect()
}

pub fn comb_family(spines: &[usize]) -> Vec<RootedKTree> {
    spines.iter().map(|&s| comb(s)).collect()
}

pub fn two_level_star_family(params: &[(usize, usize)]) -> Vec<RootedKTree> {
    params.iter().map(|&(h, l)| two_level_star(h, l)).collect()
}
