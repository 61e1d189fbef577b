//! Executable finite-depth limit machine.
//!
//! The machine realizes the limit object of a convergent sequence as far as
//! a truncation depth D allows. Its vertex set has an atomic part (chains
//! with finite count, one atom per index) and a continuum part (chains with
//! unbounded count, each carrying 2k+1 exact coordinates). Parent maps
//! replay type-level templates of important edges with three coordinate
//! update rules; all arithmetic is exact, so structural checks downstream
//! compare values bit for bit.
//!
//! Depth bookkeeping: a chain only determines its i-parent's chain to depth
//! one less, so every parent step shortens the prefix by the path length.
//! Templates record heads at the decayed depths, and comparisons between
//! vertices happen at their common depth. The residual depth of every
//! returned parent is visible in its chain record.
//!
//! Type-level facts are extracted from witnesses under a universal reading:
//! a detour or a template counts as implied by a chain only when every
//! registered witness realizes it within the search bounds. Classification
//! conflicts between witnesses abort the build with a diagnostic instead of
//! guessing.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyadic::{zeta, Dyadic, TorusCoord};
use crate::graph::{EdgeColor, RootedKTree, VertexId};
use crate::hintikka::{
    implied_profile, ChainPrefix, ChildCount, HintikkaError, TypeInterner, TypeTrie,
};
use crate::rng_util;
use crate::sequence::{GraphSequence, MeasureEstimate, NuValue};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("chain {chain} has no {index}-parent")]
    NoParent { chain: usize, index: u8 },
    #[error("chain {chain} is at depth 1; the parent prefix is not determined")]
    DepthExhausted { chain: usize },
    #[error("unstable classification: {0}")]
    Unstable(String),
    #[error("no important path for chain {chain}, index {index} within bounds{}",
            if *.disagreement { " (witnesses disagree)" } else { "" })]
    NoImportantPath {
        chain: usize,
        index: u8,
        disagreement: bool,
    },
    #[error("no templates cached for chain {chain}, index {index}")]
    MissingTemplates { chain: usize, index: u8 },
    #[error("sampling support is empty")]
    EmptySupport,
    #[error("measures do not match the graphs: {0}")]
    BadMeasures(String),
    #[error("invalid machine file: {0}")]
    BadMachine(String),
    #[error(transparent)]
    Hintikka(#[from] HintikkaError),
}

/// Edge classification: the head of an i-edge from this chain has exactly m
/// i-children of the same chain (finitary) or unboundedly many (infinitary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeClass {
    Finitary(u64),
    Infinitary,
}

/// One step of an important-path template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathStep {
    /// Parent index of the edge.
    pub index: u8,
    pub class: EdgeClass,
    /// Chain record of the head, at depth one less than the tail.
    pub head: usize,
    /// Whether the head has a higher-indexed finitary important edge, which
    /// selects between the two finitary update rules.
    pub higher_finitary: bool,
}

/// Type-level description of a path of important edges driving a parent map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathTemplate {
    pub steps: Vec<PathStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentSlot {
    /// Chain record of the parent prefix (depth one less); `None` at depth 1.
    pub chain: Option<usize>,
    pub color: EdgeColor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildCountEntry {
    pub index: u8,
    /// Chain record of the child prefix at depth one less.
    pub chain: usize,
    pub count: ChildCount,
}

/// Classification and templates for the i-edges out of one chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeData {
    pub class: EdgeClass,
    pub important: bool,
    /// All important-path templates found within bounds, shortest first.
    pub templates: Vec<PathTemplate>,
}

/// One realized chain prefix with everything the machine knows about it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainInfo {
    /// Fingerprints of the types along the chain, depth 1 first.
    pub fps: Vec<String>,
    pub depth: u8,
    pub nu: NuValue,
    /// Limit fraction in the last graph, as an exact "p/q" string.
    pub mu: String,
    /// This chain shortened by one (its own prefix record).
    pub restriction: Option<usize>,
    pub marks: Vec<u32>,
    pub initial_tournament: bool,
    pub parents: Vec<Option<ParentSlot>>,
    /// `(i', i'', i)`: the i''-parent is the i-parent of the i'-parent.
    pub parent_relation: Vec<(u8, u8, u8)>,
    pub child_counts: Vec<ChildCountEntry>,
    /// Per parent index i (slot i-1), when computed during the build.
    pub edges: Vec<Option<EdgeData>>,
    pub profile_unstable: Vec<String>,
}

/// Self-contained finite-depth limit machine. Serializes to a single JSON
/// document; sampling and parent evaluation need nothing else.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitMachine {
    pub k: u8,
    pub depth: u8,
    pub path_bound: u8,
    pub template_cap: usize,
    pub growth_factor: u64,
    pub orders: Vec<usize>,
    pub chains: Vec<ChainInfo>,
    /// Depth-D chains with infinite count and positive limit mass.
    pub support: Vec<usize>,
    /// Integer sampling weights of the support chains (counts in the last
    /// graph); their ratios are the exact limit fractions.
    pub support_weights: Vec<u64>,
}

/// A vertex of the machine: an atom of a finite-count chain, or a continuum
/// point with 2k+1 exact coordinates `(n_0, h_1, n_1, ..., h_k, n_k)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitVertex {
    Finite {
        chain: usize,
        /// 1-based index within the chain's count.
        index: u64,
    },
    Continuum {
        chain: usize,
        /// `n[0] = n_0`, `n[t] = n_t`; length k+1.
        n: Vec<Dyadic>,
        /// `h[t-1] = h_t`; length k.
        h: Vec<TorusCoord>,
    },
}

impl LimitVertex {
    pub fn chain(&self) -> usize {
        match self {
            LimitVertex::Finite { chain, .. } | LimitVertex::Continuum { chain, .. } => *chain,
        }
    }

    pub fn render(&self, machine: &LimitMachine) -> String {
        match self {
            LimitVertex::Finite { chain, index } => {
                format!("finite {} #{index}", machine.chains[*chain].fps.last().unwrap())
            }
            LimitVertex::Continuum { chain, n, h } => {
                let mut coords = vec![n[0].to_string()];
                for t in 1..n.len() {
                    coords.push(h[t - 1].to_string());
                    coords.push(n[t].to_string());
                }
                format!(
                    "continuum {} ({})",
                    machine.chains[*chain].fps.last().unwrap(),
                    coords.join(", ")
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildParams {
    pub path_bound: u8,
    pub template_cap: usize,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            path_bound: 6,
            template_cap: 8,
        }
    }
}

// ---------------------------------------------------------------------------
// Build
// ---------------------------------------------------------------------------

struct Builder<'a> {
    graphs: &'a [RootedKTree],
    trie: &'a TypeTrie,
    measures: &'a MeasureEstimate,
    params: &'a BuildParams,
    chains: Vec<ChainPrefix>,
    chain_index: BTreeMap<ChainPrefix, usize>,
    class_cache: BTreeMap<(usize, u8), EdgeClass>,
    important_cache: BTreeMap<(usize, u8), bool>,
    template_cache: BTreeMap<(usize, u8), Vec<PathTemplate>>,
    nu: Vec<NuValue>,
}

impl<'a> Builder<'a> {
    fn witnesses(&self, chain: usize) -> Vec<(usize, VertexId)> {
        let ty = *self.chains[chain].last().unwrap();
        self.trie
            .witnesses
            .get(&ty)
            .cloned()
            .unwrap_or_default()
    }

    fn chain_of_vertex(&self, g: usize, v: VertexId, depth: u8) -> usize {
        let prefix = self.trie.chains[g][v as usize][..depth as usize].to_vec();
        self.chain_index[&prefix]
    }

    /// Multiplicity classification of the i-edges out of `chain`.
    fn ensure_class(&mut self, chain: usize, i: u8) -> Result<EdgeClass, LimitError> {
        if let Some(&c) = self.class_cache.get(&(chain, i)) {
            return Ok(c);
        }
        let depth = self.chains[chain].len();
        let prefix = self.chains[chain].clone();
        // Count, per witness, how many i-children of the witness's i-parent
        // share the witness's chain; group by graph.
        let mut per_graph: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for (g, v) in self.witnesses(chain) {
            let Some(w) = self.graphs[g].i_parent(v, i) else {
                return Err(LimitError::NoParent { chain, index: i });
            };
            let m = self.graphs[g]
                .i_children(w, i)
                .into_iter()
                .filter(|&u| self.trie.chains[g][u as usize][..depth] == prefix[..])
                .count() as u64;
            per_graph.entry(g).or_default().push(m);
        }
        let mut series: Vec<u64> = Vec::new();
        for (g, vals) in &per_graph {
            if vals.windows(2).any(|w| w[0] != w[1]) {
                return Err(LimitError::Unstable(format!(
                    "edge multiplicity of chain {chain} index {i} differs between witnesses in graph {g}: {vals:?}"
                )));
            }
            series.push(vals[0]);
        }
        let last = *series.last().unwrap();
        let class = if series.windows(2).all(|w| w[0] == w[1]) {
            EdgeClass::Finitary(series[0])
        } else if series.windows(2).all(|w| w[0] <= w[1])
            && last >= 2
            && last > self.measures.growth_factor * series[0]
        {
            EdgeClass::Infinitary
        } else {
            return Err(LimitError::Unstable(format!(
                "edge multiplicity of chain {chain} index {i} neither stabilizes nor grows: {series:?}"
            )));
        };
        self.class_cache.insert((chain, i), class);
        Ok(class)
    }

    /// Whether the i-edge out of `chain` is important: no detour exists that
    /// every witness realizes within the path bound. Unlike template
    /// enumeration, the detour length is not capped by the chain depth;
    /// importance is a plain fact about the type.
    fn ensure_important(&mut self, chain: usize, i: u8) -> Result<bool, LimitError> {
        if let Some(&b) = self.important_cache.get(&(chain, i)) {
            return Ok(b);
        }
        let class = self.ensure_class(chain, i)?;
        let depth = self.chains[chain].len() as u8;
        let cap = self.params.path_bound;
        let witnesses = self.witnesses(chain);
        let mut all_have_detour = !witnesses.is_empty();
        for &(g, v) in &witnesses {
            let target = self.graphs[g].i_parent(v, i).unwrap();
            if !self.witness_has_detour(g, v, target, i, class, depth, cap)? {
                all_have_detour = false;
                break;
            }
        }
        self.important_cache.insert((chain, i), !all_have_detour);
        Ok(!all_have_detour)
    }

    /// Detour search on one witness: a path of length in [2, cap] from `v`
    /// to `target` such that, for a finitary edge, every path edge has a
    /// smaller index, and for an infinitary edge, every infinitary path
    /// edge has a smaller index.
    #[allow(clippy::too_many_arguments)]
    fn witness_has_detour(
        &mut self,
        g: usize,
        v: VertexId,
        target: VertexId,
        i: u8,
        class: EdgeClass,
        depth: u8,
        cap: u8,
    ) -> Result<bool, LimitError> {
        if cap < 2 {
            return Ok(false);
        }
        let k = self.graphs[g].k() as u8;
        // DFS over directed paths; the tail of the j-th edge sits at decayed
        // depth `depth - (j - 1)`.
        let mut stack: Vec<(VertexId, u8)> = vec![(v, 0)];
        while let Some((cur, steps_done)) = stack.pop() {
            if steps_done == cap {
                continue;
            }
            let tail_depth = depth.saturating_sub(steps_done);
            for edge_index in 1..=k {
                let Some(w) = self.graphs[g].i_parent(cur, edge_index) else {
                    continue;
                };
                let allowed = match class {
                    EdgeClass::Finitary(_) => edge_index < i,
                    EdgeClass::Infinitary => {
                        if edge_index < i {
                            true
                        } else {
                            // Classify at the decayed depth where it is
                            // type-determined, at full depth on the floor.
                            let d = if tail_depth >= 2 {
                                tail_depth
                            } else {
                                self.trie.depth
                            };
                            let tail_chain = self.chain_of_vertex(g, cur, d);
                            matches!(
                                self.ensure_class(tail_chain, edge_index)?,
                                EdgeClass::Finitary(_)
                            )
                        }
                    }
                };
                if !allowed {
                    continue;
                }
                let new_len = steps_done + 1;
                if w == target {
                    if new_len >= 2 {
                        return Ok(true);
                    }
                    continue;
                }
                if new_len < cap {
                    stack.push((w, new_len));
                }
            }
        }
        Ok(false)
    }

    /// All important-path templates from `chain` to its i-parent realized by
    /// every witness, shortest first, capped.
    fn ensure_templates(&mut self, chain: usize, i: u8) -> Result<Vec<PathTemplate>, LimitError> {
        if let Some(t) = self.template_cache.get(&(chain, i)) {
            return Ok(t.clone());
        }
        let depth = self.chains[chain].len() as u8;
        if depth < 2 {
            return Err(LimitError::DepthExhausted { chain });
        }
        let cap = self.params.path_bound.min(depth - 1);
        let witnesses = self.witnesses(chain);
        let mut common: Option<BTreeSet<PathTemplate>> = None;
        let mut any_nonempty = false;
        for &(g, v) in &witnesses {
            let target = self.graphs[g].i_parent(v, i).ok_or(LimitError::NoParent {
                chain,
                index: i,
            })?;
            let set = self.witness_templates(g, v, target, depth, cap)?;
            any_nonempty |= !set.is_empty();
            common = Some(match common {
                None => set,
                Some(prev) => prev.intersection(&set).cloned().collect(),
            });
        }
        let common = common.unwrap_or_default();
        if common.is_empty() {
            // Distinguish the truncation frontier (important routes exist
            // but their heads would sit below depth 1, or the witnesses
            // disagree on the recorded fields) from genuine absence within
            // the path bound.
            let mut every_witness_routed = !witnesses.is_empty();
            for &(g, v) in &witnesses {
                let target = self.graphs[g].i_parent(v, i).unwrap();
                if !self.witness_has_important_route(g, v, target, depth)? {
                    every_witness_routed = false;
                    break;
                }
            }
            if every_witness_routed {
                self.template_cache.insert((chain, i), Vec::new());
                return Ok(Vec::new());
            }
            return Err(LimitError::NoImportantPath {
                chain,
                index: i,
                disagreement: any_nonempty,
            });
        }
        let mut sorted: Vec<PathTemplate> = common.into_iter().collect();
        sorted.sort_by_key(|t| (t.steps.len(), t.steps.clone()));
        sorted.truncate(self.params.template_cap);
        self.template_cache.insert((chain, i), sorted.clone());
        Ok(sorted)
    }

    /// Important paths from `v` to `target` on one witness, lifted to
    /// type level.
    fn witness_templates(
        &mut self,
        g: usize,
        v: VertexId,
        target: VertexId,
        depth: u8,
        cap: u8,
    ) -> Result<BTreeSet<PathTemplate>, LimitError> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(VertexId, u8, Vec<PathStep>)> = vec![(v, 0, Vec::new())];
        while let Some((cur, steps_done, steps)) = stack.pop() {
            if steps_done == cap {
                continue;
            }
            let tail_depth = depth - steps_done;
            if tail_depth < 2 {
                continue;
            }
            let tail_chain = self.chain_of_vertex(g, cur, tail_depth);
            for edge_index in 1..=self.graphs[g].k() as u8 {
                let Some(w) = self.graphs[g].i_parent(cur, edge_index) else {
                    continue;
                };
                if !self.ensure_important(tail_chain, edge_index)? {
                    continue;
                }
                let class = self.ensure_class(tail_chain, edge_index)?;
                let head_depth = tail_depth - 1;
                let head_chain = self.chain_of_vertex(g, w, head_depth);
                let higher_finitary = if matches!(class, EdgeClass::Finitary(_)) {
                    self.head_has_higher_finitary_important(head_chain, g, w, edge_index)?
                } else {
                    false
                };
                let step = PathStep {
                    index: edge_index,
                    class,
                    head: head_chain,
                    higher_finitary,
                };
                let mut new_steps = steps.clone();
                new_steps.push(step);
                if w == target {
                    out.insert(PathTemplate { steps: new_steps });
                } else {
                    stack.push((w, steps_done + 1, new_steps));
                }
            }
        }
        Ok(out)
    }

    /// Whether the head of a finitary step has a higher-indexed finitary
    /// important edge. Above the depth floor this is a fact of the decayed
    /// head chain; at depth 1 the decayed view pools too much, so the flag
    /// is read off this witness's concrete head at full depth (template
    /// intersection across witnesses arbitrates any disagreement).
    /// Whether this witness reaches its target along important edges
    /// within the path bound, regardless of whether the heads can be
    /// recorded at decayed depths.
    fn witness_has_important_route(
        &mut self,
        g: usize,
        v: VertexId,
        target: VertexId,
        depth: u8,
    ) -> Result<bool, LimitError> {
        let cap = self.params.path_bound;
        let mut stack: Vec<(VertexId, u8)> = vec![(v, 0)];
        while let Some((cur, steps_done)) = stack.pop() {
            if steps_done == cap {
                continue;
            }
            let tail_depth = depth.saturating_sub(steps_done);
            let key_depth = if tail_depth >= 2 {
                tail_depth
            } else {
                self.trie.depth
            };
            let tail_chain = self.chain_of_vertex(g, cur, key_depth);
            for edge_index in 1..=self.graphs[g].k() as u8 {
                let Some(w) = self.graphs[g].i_parent(cur, edge_index) else {
                    continue;
                };
                if !self.ensure_important(tail_chain, edge_index)? {
                    continue;
                }
                if w == target {
                    return Ok(true);
                }
                stack.push((w, steps_done + 1));
            }
        }
        Ok(false)
    }

    fn head_has_higher_finitary_important(
        &mut self,
        head_chain: usize,
        g: usize,
        head_vertex: VertexId,
        index: u8,
    ) -> Result<bool, LimitError> {
        let depth = self.chains[head_chain].len() as u8;
        let key_chain = if depth >= 2 {
            head_chain
        } else {
            self.chain_of_vertex(g, head_vertex, self.trie.depth)
        };
        let k = self.trie.k as u8;
        for i2 in index + 1..=k {
            if self.graphs[g].i_parent(head_vertex, i2).is_none() {
                continue;
            }
            if matches!(self.ensure_class(key_chain, i2)?, EdgeClass::Finitary(_))
                && self.ensure_important(key_chain, i2)?
            {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Builds the machine from a sequence, its measures, and its type trie.
/// Templates and classifications are computed for every continuum chain
/// reachable from the sampling support and stored in the machine, which is
/// then self-contained.
pub fn build_machine(
    seq: &GraphSequence,
    measures: &MeasureEstimate,
    trie: &TypeTrie,
    interner: &TypeInterner,
    params: &BuildParams,
) -> Result<LimitMachine, LimitError> {
    let graphs = seq.graphs();
    let depth = measures.depth;
    let k = trie.k as u8;

    // Deterministic chain arena: all realized prefixes, shallow depths first.
    let mut chains: Vec<ChainPrefix> = Vec::new();
    let mut chain_index: BTreeMap<ChainPrefix, usize> = BTreeMap::new();
    for d in 1..=depth {
        let mut seen: BTreeSet<ChainPrefix> = BTreeSet::new();
        for per_vertex in &trie.chains {
            for chain in per_vertex {
                seen.insert(chain[..d as usize].to_vec());
            }
        }
        for prefix in seen {
            let idx = chains.len();
            chains.push(prefix.clone());
            chain_index.insert(prefix, idx);
        }
    }

    let nu: Vec<NuValue> = chains
        .iter()
        .map(|prefix| measures.table(prefix.len() as u8).nu[prefix])
        .collect();

    let mut builder = Builder {
        graphs,
        trie,
        measures,
        params,
        chains: chains.clone(),
        chain_index: chain_index.clone(),
        class_cache: BTreeMap::new(),
        important_cache: BTreeMap::new(),
        template_cache: BTreeMap::new(),
        nu: nu.clone(),
    };

    // Support (depth-D infinite chains with positive mass) and weights.
    let mut support = Vec::new();
    let mut support_weights = Vec::new();
    let last = graphs.len() - 1;
    for prefix in &measures.support {
        let idx = chain_index[prefix];
        support.push(idx);
        support_weights.push(trie.count_in(last, *prefix.last().unwrap()));
    }

    // Closure: compute edge data for every continuum chain reachable from
    // the support through template heads.
    let mut queue: VecDeque<usize> = support.iter().copied().collect();
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut edge_data: BTreeMap<(usize, u8), EdgeData> = BTreeMap::new();
    while let Some(c) = queue.pop_front() {
        if !visited.insert(c) {
            continue;
        }
        if chains[c].len() < 2 {
            continue; // depth exhausted; no further parent structure
        }
        let (g0, v0) = match builder.witnesses(c).first() {
            Some(&w) => w,
            None => continue,
        };
        for i in 1..=k {
            if graphs[g0].i_parent(v0, i).is_none() {
                continue;
            }
            let class = builder.ensure_class(c, i)?;
            let important = builder.ensure_important(c, i)?;
            let templates = builder.ensure_templates(c, i)?;
            for t in &templates {
                for step in &t.steps {
                    if builder.nu[step.head] == NuValue::Infinite {
                        queue.push_back(step.head);
                    }
                }
            }
            edge_data.insert(
                (c, i),
                EdgeData {
                    class,
                    important,
                    templates,
                },
            );
        }
    }

    // Freeze chain records.
    let mut records = Vec::with_capacity(chains.len());
    for (idx, prefix) in chains.iter().enumerate() {
        let d = prefix.len() as u8;
        let profile =
            implied_profile(trie, graphs, prefix, params.path_bound, measures.growth_factor)?;
        let parents: Vec<Option<ParentSlot>> = profile
            .parents
            .iter()
            .map(|slot| {
                slot.as_ref().map(|p| ParentSlot {
                    chain: if d >= 2 {
                        Some(chain_index[&p.chain])
                    } else {
                        None
                    },
                    color: p.color,
                })
            })
            .collect();
        let child_counts: Vec<ChildCountEntry> = if d >= 2 {
            profile
                .child_counts
                .iter()
                .map(|(&(i, ref chain), &count)| ChildCountEntry {
                    index: i,
                    chain: chain_index[chain],
                    count,
                })
                .collect()
        } else {
            Vec::new()
        };
        let parent_relation: Vec<(u8, u8, u8)> = profile
            .parent_relation
            .iter()
            .map(|(&(a, b), &i)| (a, b, i))
            .collect();
        let edges: Vec<Option<EdgeData>> = (1..=k)
            .map(|i| edge_data.get(&(idx, i)).cloned())
            .collect();
        let mu = measures.table(d).mu[prefix];
        records.push(ChainInfo {
            fps: prefix.iter().map(|&t| interner.fingerprint_hex(t)).collect(),
            depth: d,
            nu: nu[idx],
            mu: crate::sequence::ratio_to_string(&mu),
            restriction: if d >= 2 {
                Some(chain_index[&prefix[..d as usize - 1].to_vec()])
            } else {
                None
            },
            marks: profile.marks.clone(),
            initial_tournament: profile.initial_tournament,
            parents,
            parent_relation,
            child_counts,
            edges,
            profile_unstable: profile.unstable.clone(),
        });
    }

    Ok(LimitMachine {
        k,
        depth,
        path_bound: params.path_bound,
        template_cap: params.template_cap,
        growth_factor: measures.growth_factor,
        orders: measures.orders.clone(),
        chains: records,
        support,
        support_weights,
    })
}

// ---------------------------------------------------------------------------
// Machine operations
// ---------------------------------------------------------------------------

impl LimitMachine {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }

    pub fn from_json(text: &str) -> Result<LimitMachine, LimitError> {
        let machine: LimitMachine =
            serde_json::from_str(text).map_err(|e| LimitError::BadMachine(e.to_string()))?;
        machine.check_indices()?;
        Ok(machine)
    }

    /// Sanity of a deserialized machine: every cross-reference lands inside
    /// the chain arena with consistent depths.
    fn check_indices(&self) -> Result<(), LimitError> {
        let bad = |msg: String| Err(LimitError::BadMachine(msg));
        let len = self.chains.len();
        if self.support.len() != self.support_weights.len() {
            return bad("support and weight lists differ in length".into());
        }
        for &c in &self.support {
            if c >= len {
                return bad(format!("support chain {c} out of range"));
            }
            if self.chains[c].depth != self.depth {
                return bad(format!("support chain {c} has the wrong depth"));
            }
        }
        for (idx, info) in self.chains.iter().enumerate() {
            if info.fps.len() != info.depth as usize || info.depth == 0 {
                return bad(format!("chain {idx}: fingerprint chain length mismatch"));
            }
            if let Some(r) = info.restriction {
                if r >= len || self.chains[r].depth + 1 != info.depth {
                    return bad(format!("chain {idx}: bad restriction link"));
                }
            } else if info.depth != 1 {
                return bad(format!("chain {idx}: missing restriction link"));
            }
            let refs = info
                .parents
                .iter()
                .flatten()
                .filter_map(|s| s.chain)
                .chain(info.child_counts.iter().map(|e| e.chain))
                .chain(
                    info.edges
                        .iter()
                        .flatten()
                        .flat_map(|e| e.templates.iter())
                        .flat_map(|t| t.steps.iter().map(|s| s.head)),
                );
            for r in refs {
                if r >= len {
                    return bad(format!("chain {idx}: reference {r} out of range"));
                }
            }
        }
        Ok(())
    }

    /// Truncates a chain record to a shallower depth.
    pub fn truncate_chain(&self, mut chain: usize, depth: u8) -> usize {
        while self.chains[chain].depth > depth {
            chain = self.chains[chain]
                .restriction
                .expect("depth >= 1 prefix exists");
        }
        chain
    }

    /// Chain lookup by fingerprint chain.
    pub fn chain_by_fps(&self, fps: &[String]) -> Option<usize> {
        self.chains.iter().position(|c| c.fps == fps)
    }

    /// Draws a continuum vertex: a support chain with probability
    /// proportional to its limit mass, and 2k+1 fresh 64-bit coordinates
    /// (order: n_0, h_1, n_1, ..., h_k, n_k).
    pub fn sample_vertex(&self, rng: &mut impl RngCore) -> Result<LimitVertex, LimitError> {
        if self.support.is_empty() {
            return Err(LimitError::EmptySupport);
        }
        let total: u64 = self.support_weights.iter().sum();
        let mut r = rng_util::uniform_u64(rng, total);
        let mut chain = self.support[0];
        for (&c, &w) in self.support.iter().zip(&self.support_weights) {
            if r < w {
                chain = c;
                break;
            }
            r -= w;
        }
        let n0 = Dyadic::from_u64(rng.next_u64());
        let mut n = vec![n0];
        let mut h = Vec::with_capacity(self.k as usize);
        for _ in 0..self.k {
            h.push(TorusCoord::from_dyadic(Dyadic::from_u64(rng.next_u64())));
            n.push(Dyadic::from_u64(rng.next_u64()));
        }
        Ok(LimitVertex::Continuum { chain, n, h })
    }

    fn nu_finite(&self, chain: usize) -> Result<u64, LimitError> {
        match self.chains[chain].nu {
            NuValue::Finite(c) if c > 0 => Ok(c),
            NuValue::Finite(_) => Err(LimitError::Unstable(format!(
                "chain {chain} has zero count in the last graph"
            ))),
            NuValue::Infinite => Err(LimitError::Unstable(format!(
                "chain {chain} expected finite, found infinite"
            ))),
            NuValue::Unstable => Err(LimitError::Unstable(format!(
                "chain {chain} count is unstable"
            ))),
        }
    }

    /// The i-parent of a machine vertex.
    ///
    /// Atomic vertices use the index rule `m' = ceil(m * nu' / nu)` on the
    /// implied parent prefix. Continuum vertices replay the first stored
    /// important-path template step by step; when the path continues past
    /// the last infinite-count head, the result drops into the atomic part
    /// with index `1 + floor(nu' * n_k)`.
    pub fn parent(&self, v: &LimitVertex, i: u8) -> Result<LimitVertex, LimitError> {
        match v {
            LimitVertex::Finite { chain, index } => {
                let info = &self.chains[*chain];
                let slot = info
                    .parents
                    .get(i as usize - 1)
                    .and_then(|s| s.as_ref())
                    .ok_or(LimitError::NoParent {
                        chain: *chain,
                        index: i,
                    })?;
                let parent_chain = slot.chain.ok_or(LimitError::DepthExhausted {
                    chain: *chain,
                })?;
                let nu_child = self.nu_finite(*chain)?;
                let nu_parent = self.nu_finite(parent_chain)?;
                let m2 = (index * nu_parent).div_ceil(nu_child);
                Ok(LimitVertex::Finite {
                    chain: parent_chain,
                    index: m2,
                })
            }
            LimitVertex::Continuum { chain, n, h } => {
                let info = &self.chains[*chain];
                if info
                    .parents
                    .get(i as usize - 1)
                    .and_then(|s| s.as_ref())
                    .is_none()
                {
                    return Err(LimitError::NoParent {
                        chain: *chain,
                        index: i,
                    });
                }
                let edge = info
                    .edges
                    .get(i as usize - 1)
                    .and_then(|e| e.as_ref())
                    .ok_or(LimitError::MissingTemplates {
                        chain: *chain,
                        index: i,
                    })?;
                let template = edge.templates.first().ok_or(LimitError::MissingTemplates {
                    chain: *chain,
                    index: i,
                })?;
                self.replay(template, n.clone(), h.clone())
            }
        }
    }

    /// Replays a template from the given coordinates.
    pub fn replay(
        &self,
        template: &PathTemplate,
        mut n: Vec<Dyadic>,
        mut h: Vec<TorusCoord>,
    ) -> Result<LimitVertex, LimitError> {
        let ell = template.steps.len();
        let mut ell_inf = 0usize;
        for (j, step) in template.steps.iter().enumerate() {
            match self.chains[step.head].nu {
                NuValue::Infinite => ell_inf = j + 1,
                NuValue::Finite(_) => {}
                NuValue::Unstable => {
                    return Err(LimitError::Unstable(format!(
                        "template head {} has unstable count",
                        step.head
                    )))
                }
            }
        }
        for step in &template.steps[..ell_inf] {
            let ip = step.index as usize;
            match step.class {
                EdgeClass::Infinitary => {
                    let parts = zeta(2 * ip, &n[ip]);
                    n[0] = parts[0].clone();
                    for t in 1..ip {
                        h[t - 1] = TorusCoord::from_dyadic(parts[2 * t - 1].clone());
                        n[t] = parts[2 * t].clone();
                    }
                    h[ip - 1] = h[ip - 1].add_sqrt2();
                    n[ip] = parts[2 * ip - 1].clone();
                }
                EdgeClass::Finitary(m) => {
                    n[0] = n[0].mul_mod1(m);
                    if !step.higher_finitary {
                        h[ip - 1] = h[ip - 1].add_sqrt2();
                    }
                }
            }
        }
        let last_head = template.steps[ell - 1].head;
        if ell == ell_inf {
            Ok(LimitVertex::Continuum {
                chain: last_head,
                n,
                h,
            })
        } else {
            let nu_parent = self.nu_finite(last_head)?;
            let k = self.k as usize;
            Ok(LimitVertex::Finite {
                chain: last_head,
                index: 1 + n[k].floor_mul(nu_parent),
            })
        }
    }

    /// Compares two vertices at their common chain depth; coordinates and
    /// atomic indices must agree exactly.
    pub fn same_vertex(&self, a: &LimitVertex, b: &LimitVertex) -> bool {
        match (a, b) {
            (
                LimitVertex::Finite { chain: c1, index: i1 },
                LimitVertex::Finite { chain: c2, index: i2 },
            ) => {
                let d = self.chains[*c1].depth.min(self.chains[*c2].depth);
                self.truncate_chain(*c1, d) == self.truncate_chain(*c2, d) && i1 == i2
            }
            (
                LimitVertex::Continuum { chain: c1, n: n1, h: h1 },
                LimitVertex::Continuum { chain: c2, n: n2, h: h2 },
            ) => {
                let d = self.chains[*c1].depth.min(self.chains[*c2].depth);
                self.truncate_chain(*c1, d) == self.truncate_chain(*c2, d)
                    && n1 == n2
                    && h1 == h2
            }
            _ => false,
        }
    }

    /// All atomic vertices: every finite-count depth-D chain contributes one
    /// atom per index.
    pub fn finite_atoms(&self) -> Vec<LimitVertex> {
        let mut out = Vec::new();
        for (idx, info) in self.chains.iter().enumerate() {
            if info.depth != self.depth {
                continue;
            }
            if let NuValue::Finite(c) = info.nu {
                for m in 1..=c {
                    out.push(LimitVertex::Finite {
                        chain: idx,
                        index: m,
                    });
                }
            }
        }
        out
    }

    /// Child-count lookup: exact number of i-children of this chain whose
    /// chains restrict into `child`, when the profile pins it.
    pub fn child_count(&self, chain: usize, i: u8, child: usize) -> Option<ChildCount> {
        self.chains[chain]
            .child_counts
            .iter()
            .find(|e| e.index == i && e.chain == child)
            .map(|e| e.count)
    }

    /// Stored classification of the i-edges out of a chain.
    pub fn classify_edge(&self, chain: usize, i: u8) -> Result<EdgeClass, LimitError> {
        self.chains[chain]
            .edges
            .get(i as usize - 1)
            .and_then(|e| e.as_ref())
            .map(|e| e.class)
            .ok_or(LimitError::MissingTemplates { chain, index: i })
    }

    /// The template the parent map replays for `(chain, i)`: the first of
    /// the stored important-path templates.
    pub fn important_path(&self, chain: usize, i: u8) -> Result<&PathTemplate, LimitError> {
        self.chains[chain]
            .edges
            .get(i as usize - 1)
            .and_then(|e| e.as_ref())
            .and_then(|e| e.templates.first())
            .ok_or(LimitError::MissingTemplates { chain, index: i })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use crate::hintikka::TypeInterner;
    use crate::sequence::{estimate_measures, GraphSequence};

    fn machine_for(
        graphs: Vec<RootedKTree>,
        depth: u8,
        window: usize,
        params: &BuildParams,
    ) -> LimitMachine {
        let mut interner = TypeInterner::new();
        let seq = GraphSequence::new(graphs).unwrap();
        let (measures, trie) =
            estimate_measures(&seq, depth, window, 4, &mut interner).unwrap();
        build_machine(&seq, &measures, &trie, &interner, params).unwrap()
    }

    fn sampled(machine: &LimitMachine, seed: u64) -> LimitVertex {
        let mut rng = rng_util::derive_rng(seed, 1);
        machine.sample_vertex(&mut rng).unwrap()
    }

    #[test]
    fn path_machine_basics() {
        let machine = machine_for(
            families::path_family(&[8, 16, 32]),
            3,
            3,
            &BuildParams::default(),
        );
        assert_eq!(machine.support.len(), 1);
        let v = sampled(&machine, 7);
        // Interior parent: single finitary(1) step staying in the continuum.
        let p = machine.parent(&v, 1).unwrap();
        match &p {
            LimitVertex::Continuum { chain, .. } => {
                assert_eq!(machine.chains[*chain].depth, 2);
                assert_eq!(machine.chains[*chain].nu, NuValue::Infinite);
            }
            other => panic!("expected continuum parent, got {other:?}"),
        }
        // Finitary(1) with no higher edges shifts h_1 by sqrt(2).
        let (
            LimitVertex::Continuum { h: h0, n: n0, .. },
            LimitVertex::Continuum { h: h1, n: n1, .. },
        ) = (&v, &p)
        else {
            unreachable!()
        };
        assert_eq!(h1[0].c, h0[0].c + 1);
        assert_eq!(h1[0].q, h0[0].q);
        assert_eq!(n1, n0); // multiplication by m = 1
    }

    #[test]
    fn two_level_star_exercises_the_zeta_rule() {
        let machine = machine_for(
            families::two_level_star_family(&[(3, 3), (8, 8), (17, 17)]),
            3,
            3,
            &BuildParams::default(),
        );
        // Sample until a leaf-type vertex comes up (mass ~ leaves).
        let mut leaf = None;
        for seed in 0..50 {
            let v = sampled(&machine, seed);
            let info = &machine.chains[v.chain()];
            // Leaves have a 1-parent of infinite count (the hubs).
            if let Some(Some(slot)) = info.parents.first().map(|s| s.as_ref()) {
                let pc = slot.chain.unwrap();
                if machine.chains[pc].nu == NuValue::Infinite {
                    leaf = Some(v);
                    break;
                }
            }
        }
        let leaf = leaf.expect("leaf vertex sampled");
        let LimitVertex::Continuum { n, h, .. } = leaf.clone() else {
            unreachable!()
        };
        let p = machine.parent(&leaf, 1).unwrap();
        let LimitVertex::Continuum { n: pn, h: ph, chain } = p else {
            panic!("hub parent is continuum")
        };
        assert_eq!(machine.chains[chain].nu, NuValue::Infinite);
        // Infinitary rule at i' = 1: (n0', h1', n1') = (z1(n1), h1 + r2, z2(n1)).
        let parts = zeta(2, &n[1]);
        assert_eq!(pn[0], parts[0]);
        assert_eq!(pn[1], parts[1]);
        assert_eq!(ph[0].c, h[0].c + 1);
    }

    #[test]
    fn crossing_into_the_atomic_part() {
        // Star: leaf -> center crosses immediately (center count 1).
        let machine =
            machine_for(families::star_family(&[4, 8, 17]), 3, 3, &BuildParams::default());
        let v = sampled(&machine, 3);
        let p = machine.parent(&v, 1).unwrap();
        match p {
            LimitVertex::Finite { chain, index } => {
                assert_eq!(machine.chains[chain].nu, NuValue::Finite(1));
                assert_eq!(index, 1);
            }
            other => panic!("expected atomic parent, got {other:?}"),
        }
    }

    #[test]
    fn finite_ceiling_rule() {
        let machine = machine_for(
            families::binary_in_tree_family(&[4, 6, 9]),
            3,
            2,
            &BuildParams::default(),
        );
        // Find a finite depth-3 chain of count 4 whose parent has count 2.
        let four = machine
            .chains
            .iter()
            .position(|c| c.depth == 3 && c.nu == NuValue::Finite(4))
            .expect("level-2 chain");
        let v = LimitVertex::Finite {
            chain: four,
            index: 3,
        };
        let p = machine.parent(&v, 1).unwrap();
        match p {
            LimitVertex::Finite { chain, index } => {
                assert_eq!(machine.chains[chain].nu, NuValue::Finite(2));
                assert_eq!(index, 2); // ceil(3 * 2 / 4)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comb_has_multiple_templates() {
        let params = BuildParams {
            path_bound: 3,
            template_cap: 8,
        };
        let machine = machine_for(families::comb_family(&[10, 20, 48]), 3, 3, &params);
        // A spine chain in the support whose 2-edge has both the direct and
        // the routed template.
        let mut exercised = false;
        for &c in &machine.support {
            let info = &machine.chains[c];
            if let Some(Some(edge)) = info.edges.get(1).map(|e| e.as_ref()) {
                if edge.templates.len() >= 2 {
                    exercised = true;
                    // All templates agree on the resulting parent.
                    let mut rng = rng_util::derive_rng(5, 2);
                    let LimitVertex::Continuum { n, h, .. } =
                        machine.sample_vertex(&mut rng).unwrap()
                    else {
                        unreachable!()
                    };
                    let results: Vec<LimitVertex> = edge
                        .templates
                        .iter()
                        .map(|t| machine.replay(t, n.clone(), h.clone()).unwrap())
                        .collect();
                    for w in results.windows(2) {
                        assert!(
                            machine.same_vertex(&w[0], &w[1]),
                            "templates disagree: {:?} vs {:?}",
                            w[0],
                            w[1]
                        );
                    }
                }
            }
        }
        assert!(exercised, "no support chain offered two templates");
    }

    #[test]
    fn sampling_is_deterministic_and_weighted() {
        let machine =
            machine_for(families::star_family(&[4, 8, 17]), 2, 3, &BuildParams::default());
        let a = sampled(&machine, 9);
        let b = sampled(&machine, 9);
        assert_eq!(a, b);
        // Support of the star family is the leaf type only.
        assert_eq!(machine.support.len(), 1);
    }

    #[test]
    fn machine_roundtrips_through_json() {
        let machine = machine_for(
            families::path_family(&[8, 16, 32]),
            3,
            3,
            &BuildParams::default(),
        );
        let json = machine.to_json();
        let back = LimitMachine::from_json(&json).unwrap();
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn tampered_machine_files_are_rejected() {
        let machine = machine_for(
            families::path_family(&[8, 16, 32]),
            3,
            3,
            &BuildParams::default(),
        );
        let mut broken = machine.clone();
        broken.support.push(broken.chains.len() + 7);
        broken.support_weights.push(1);
        assert!(LimitMachine::from_json(&broken.to_json()).is_err());
        let mut broken = machine.clone();
        if let Some(slot) = broken.chains[0].parents.iter_mut().flatten().next() {
            slot.chain = Some(usize::MAX);
        } else {
            broken.chains[0].restriction = Some(usize::MAX);
        }
        assert!(LimitMachine::from_json(&broken.to_json()).is_err());
    }

    #[test]
    fn edge_accessors_expose_the_stored_data() {
        let machine = machine_for(
            families::path_family(&[8, 16, 32]),
            3,
            3,
            &BuildParams::default(),
        );
        let c = machine.support[0];
        assert_eq!(machine.classify_edge(c, 1).unwrap(), EdgeClass::Finitary(1));
        let template = machine.important_path(c, 1).unwrap();
        assert_eq!(template.steps.len(), 1);
        assert!(matches!(
            machine.classify_edge(c, 2),
            Err(LimitError::MissingTemplates { .. })
        ));
    }

    #[test]
    fn atoms_enumerate_finite_counts() {
        let machine = machine_for(
            families::path_family(&[8, 16, 32]),
            3,
            3,
            &BuildParams::default(),
        );
        let atoms = machine.finite_atoms();
        // Depth-3 finite chains of the chain family: positions 0, 1, 2 from
        // the head end and from the tail end, count 1 each.
        assert_eq!(atoms.len(), 6);
    }
}
