//! Runnable checks for every structural property the limit machine
//! promises: parent-map path independence, edge consistency, acyclicity,
//! measure semipreservation, the mass transport inequality, and
//! distribution fidelity. Exact checks tolerate nothing; statistical checks
//! use seeded Monte Carlo with 3-sigma tolerances and document their
//! estimator variance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph::{EdgeColor, VertexId};
use crate::hintikka::{ChildCount, TypeId, TypeTrie};
use crate::limit::{LimitError, LimitMachine, LimitVertex};
use crate::rng_util;
use crate::sequence::{GraphSequence, NuValue, Rational};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("definable set `{0}` is empty")]
    EmptySet(String),
}

/// A union of basic sets: membership of a machine vertex is decided by
/// restricting its chain to each member's depth.
#[derive(Debug, Clone)]
pub struct DefinableSet {
    pub name: String,
    /// Machine chain indices; the basic set of each chain.
    pub chains: Vec<usize>,
}

impl DefinableSet {
    pub fn new(name: impl Into<String>, chains: Vec<usize>) -> DefinableSet {
        DefinableSet {
            name: name.into(),
            chains,
        }
    }

    /// Membership; `None` when the vertex's residual depth is too shallow
    /// to decide.
    pub fn contains(&self, machine: &LimitMachine, v: &LimitVertex) -> Option<bool> {
        let vc = v.chain();
        let vd = machine.chains[vc].depth;
        let mut undecided = false;
        for &c in &self.chains {
            let d = machine.chains[c].depth;
            if d > vd {
                undecided = true;
                continue;
            }
            if machine.truncate_chain(vc, d) == c {
                return Some(true);
            }
        }
        if undecided {
            None
        } else {
            Some(false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of one check, with enough numbers to audit the tolerance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: u64,
    pub statistic: String,
    pub tolerance: String,
    pub verdict: Verdict,
    pub counterexample: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn line(&self) -> String {
        let status = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        let mut s = format!(
            "{status} {} (samples {}, statistic {}, tolerance {})",
            self.name, self.samples, self.statistic, self.tolerance
        );
        if let Some(ce) = &self.counterexample {
            s.push_str(&format!("; counterexample: {ce}"));
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

/// Chi-squared quantile at the two-sided 3-sigma level (p ~ 0.0027):
/// exact for one and two degrees of freedom, Wilson-Hilferty above.
pub fn chi2_threshold(dof: u64) -> f64 {
    match dof {
        0 => 0.0,
        1 => 9.0,                     // chi2_1 = Z^2
        2 => -2.0 * 0.0027f64.ln(),   // exponential tail
        _ => {
            let v = dof as f64;
            let z = 3.0;
            let t = 1.0 - 2.0 / (9.0 * v) + z * (2.0 / (9.0 * v)).sqrt();
            v * t * t * t
        }
    }
}

/// Kolmogorov-Smirnov statistic of samples against the uniform [0,1) law.
pub fn ks_statistic(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let lo = (x - i as f64 / n).abs();
        let hi = ((i + 1) as f64 / n - x).abs();
        d = d.max(lo).max(hi);
    }
    d
}

/// 3-sigma-equivalent KS threshold: P(sqrt(n) D > 1.82) ~ 0.0027.
pub fn ks_threshold(n: usize) -> f64 {
    1.82 / (n as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Exact structural checks
// ---------------------------------------------------------------------------

/// Replays every stored template (up to `cap`) for each sampled vertex and
/// each parent index; any coordinate-exact disagreement fails.
pub fn check_path_independence(
    machine: &LimitMachine,
    samples: u64,
    cap: usize,
    seed: u64,
) -> CheckReport {
    let mut rng = rng_util::derive_rng(seed, 0x70617468);
    let mut multi = 0u64;
    let mut checked = 0u64;
    for _ in 0..samples {
        let v = match machine.sample_vertex(&mut rng) {
            Ok(v) => v,
            Err(e) => return error_report("path-independence", samples, e),
        };
        let LimitVertex::Continuum { chain, n, h } = &v else {
            continue;
        };
        for i in 1..=machine.k {
            let Some(Some(edge)) = machine.chains[*chain].edges.get(i as usize - 1).map(|e| e.as_ref())
            else {
                continue;
            };
            let templates = &edge.templates[..edge.templates.len().min(cap)];
            if templates.len() > 1 {
                multi += 1;
            }
            let mut results = Vec::with_capacity(templates.len());
            for t in templates {
                match machine.replay(t, n.clone(), h.clone()) {
                    Ok(r) => results.push(r),
                    Err(e) => return error_report("path-independence", samples, e),
                }
            }
            checked += 1;
            for pair in results.windows(2) {
                if !machine.same_vertex(&pair[0], &pair[1]) {
                    return CheckReport {
                        name: "path-independence".into(),
                        samples,
                        statistic: format!("{checked} parent evaluations"),
                        tolerance: "exact".into(),
                        verdict: Verdict::Fail,
                        counterexample: Some(format!(
                            "vertex {} index {i}: {} != {}",
                            v.render(machine),
                            pair[0].render(machine),
                            pair[1].render(machine)
                        )),
                    };
                }
            }
        }
    }
    CheckReport {
        name: "path-independence".into(),
        samples,
        statistic: format!("{checked} parent evaluations, {multi} with multiple templates"),
        tolerance: "exact".into(),
        verdict: Verdict::Pass,
        counterexample: None,
    }
}

/// Random parent walks must never revisit an exact vertex, and the atomic
/// digraph must admit a topological order.
pub fn check_acyclicity(
    machine: &LimitMachine,
    samples: u64,
    walk_len: u32,
    seed: u64,
) -> CheckReport {
    // Exhaustive part: atoms of every finite-count chain, parent edges by
    // the ceiling rule.
    let mut atoms: Vec<(usize, u64)> = Vec::new();
    for (idx, info) in machine.chains.iter().enumerate() {
        if let NuValue::Finite(c) = info.nu {
            for m in 1..=c {
                atoms.push((idx, m));
            }
        }
    }
    let index_of: BTreeMap<(usize, u64), usize> =
        atoms.iter().copied().enumerate().map(|(i, a)| (a, i)).collect();
    let mut out_deg = vec![0usize; atoms.len()];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); atoms.len()];
    for (ai, &(chain, m)) in atoms.iter().enumerate() {
        for i in 1..=machine.k {
            let v = LimitVertex::Finite { chain, index: m };
            let Ok(p) = machine.parent(&v, i) else { continue };
            let LimitVertex::Finite { chain: pc, index: pm } = p else {
                continue;
            };
            if let Some(&pi) = index_of.get(&(pc, pm)) {
                out_deg[ai] += 1;
                preds[pi].push(ai);
            }
        }
    }
    // Kahn peeling from sinks along parent edges.
    let mut queue: VecDeque<usize> = (0..atoms.len()).filter(|&a| out_deg[a] == 0).collect();
    let mut peeled = 0usize;
    while let Some(a) = queue.pop_front() {
        peeled += 1;
        for &b in &preds[a] {
            out_deg[b] -= 1;
            if out_deg[b] == 0 {
                queue.push_back(b);
            }
        }
    }
    if peeled != atoms.len() {
        let stuck = (0..atoms.len()).find(|&a| out_deg[a] > 0).unwrap();
        return CheckReport {
            name: "acyclicity".into(),
            samples,
            statistic: format!("{} atoms, {} peeled", atoms.len(), peeled),
            tolerance: "exact".into(),
            verdict: Verdict::Fail,
            counterexample: Some(format!(
                "atomic digraph has a cycle through chain {} index {}",
                atoms[stuck].0, atoms[stuck].1
            )),
        };
    }

    // Sampled walks.
    let mut rng = rng_util::derive_rng(seed, 0x6379636c);
    let mut steps_taken = 0u64;
    for _ in 0..samples {
        let mut v = match machine.sample_vertex(&mut rng) {
            Ok(v) => v,
            Err(e) => return error_report("acyclicity", samples, e),
        };
        let mut visited = vec![v.clone()];
        for _ in 0..walk_len {
            let available: Vec<u8> = (1..=machine.k)
                .filter(|&i| {
                    machine.chains[v.chain()]
                        .parents
                        .get(i as usize - 1)
                        .is_some_and(|s| s.is_some())
                })
                .collect();
            if available.is_empty() {
                break;
            }
            let i = available[rng_util::uniform_index(&mut rng, available.len())];
            match machine.parent(&v, i) {
                Ok(p) => {
                    steps_taken += 1;
                    if visited.iter().any(|w| machine.same_vertex(w, &p)) {
                        return CheckReport {
                            name: "acyclicity".into(),
                            samples,
                            statistic: format!("{steps_taken} walk steps"),
                            tolerance: "exact".into(),
                            verdict: Verdict::Fail,
                            counterexample: Some(format!(
                                "walk revisits {}",
                                p.render(machine)
                            )),
                        };
                    }
                    visited.push(p.clone());
                    v = p;
                }
                Err(LimitError::DepthExhausted { .. })
                | Err(LimitError::MissingTemplates { .. }) => break,
                Err(e) => return error_report("acyclicity", samples, e),
            }
        }
    }
    CheckReport {
        name: "acyclicity".into(),
        samples,
        statistic: format!("{} atoms acyclic, {steps_taken} walk steps", atoms.len()),
        tolerance: "exact".into(),
        verdict: Verdict::Pass,
        counterexample: None,
    }
}

/// For sampled w and parent indices i' < i'', the i''-parent must equal the
/// i-parent of the i'-parent, where i comes from w's profile.
pub fn check_edge_consistency(machine: &LimitMachine, samples: u64, seed: u64) -> CheckReport {
    let mut rng = rng_util::derive_rng(seed, 0x65646765);
    let mut checked = 0u64;
    let mut skipped_depth = 0u64;
    for _ in 0..samples {
        let v = match machine.sample_vertex(&mut rng) {
            Ok(v) => v,
            Err(e) => return error_report("edge-consistency", samples, e),
        };
        let info = &machine.chains[v.chain()];
        for &(i1, i2, i) in &info.parent_relation {
            let w1 = match machine.parent(&v, i1) {
                Ok(w) => w,
                Err(LimitError::MissingTemplates { .. }) => continue,
                Err(e) => return error_report("edge-consistency", samples, e),
            };
            let w2 = match machine.parent(&v, i2) {
                Ok(w) => w,
                Err(LimitError::MissingTemplates { .. }) => continue,
                Err(e) => return error_report("edge-consistency", samples, e),
            };
            let z = match machine.parent(&w1, i) {
                Ok(z) => z,
                Err(LimitError::DepthExhausted { .. })
                | Err(LimitError::MissingTemplates { .. }) => {
                    skipped_depth += 1;
                    continue;
                }
                Err(e) => return error_report("edge-consistency", samples, e),
            };
            checked += 1;
            if !machine.same_vertex(&z, &w2) {
                return CheckReport {
                    name: "edge-consistency".into(),
                    samples,
                    statistic: format!("{checked} triples"),
                    tolerance: "exact".into(),
                    verdict: Verdict::Fail,
                    counterexample: Some(format!(
                        "w = {}; parent({i1})'s {i}-parent {} != {i2}-parent {}",
                        v.render(machine),
                        z.render(machine),
                        w2.render(machine)
                    )),
                };
            }
        }
    }
    CheckReport {
        name: "edge-consistency".into(),
        samples,
        statistic: format!("{checked} triples checked, {skipped_depth} skipped at depth floor"),
        tolerance: "exact".into(),
        verdict: Verdict::Pass,
        counterexample: None,
    }
}

// ---------------------------------------------------------------------------
// Statistical checks
// ---------------------------------------------------------------------------

fn error_report(name: &str, samples: u64, e: impl std::fmt::Display) -> CheckReport {
    CheckReport {
        name: name.into(),
        samples,
        statistic: "error".into(),
        tolerance: "exact".into(),
        verdict: Verdict::Fail,
        counterexample: Some(e.to_string()),
    }
}

/// Validates from profiles that every Y-chain has exactly `d` i-children in
/// X, then Monte Carlo compares mu(g_i^{-1}(Y) and X) against d * mu(Y).
pub fn check_measure_semipreserving(
    machine: &LimitMachine,
    x: &DefinableSet,
    y: &DefinableSet,
    i: u8,
    d: u64,
    samples: u64,
    seed: u64,
) -> Result<CheckReport, VerifyError> {
    // Precondition from the profiles.
    for &yc in &y.chains {
        let mut total: u64 = 0;
        for entry in &machine.chains[yc].child_counts {
            if entry.index != i {
                continue;
            }
            let child_depth = machine.chains[entry.chain].depth;
            let in_x = x.chains.iter().any(|&xc| {
                let xd = machine.chains[xc].depth;
                xd <= child_depth && machine.truncate_chain(entry.chain, xd) == xc
            });
            if in_x {
                match entry.count {
                    ChildCount::Exact(c) => total += c,
                    ChildCount::Infinite => {
                        return Err(VerifyError::Precondition(format!(
                            "chain {yc} has unboundedly many {i}-children in {}",
                            x.name
                        )))
                    }
                }
            }
        }
        if total != d {
            return Err(VerifyError::Precondition(format!(
                "chain {yc} has {total} {i}-children in {}, expected {d}",
                x.name
            )));
        }
    }

    // Two independent sample streams.
    let mut rng_a = rng_util::derive_rng(seed, 0x73656d69);
    let mut rng_b = rng_util::derive_rng(seed, 0x73656d6a);
    let mut hits_a = 0u64;
    let mut hits_b = 0u64;
    let mut undecided = 0u64;
    for _ in 0..samples {
        let v = machine.sample_vertex(&mut rng_a)?;
        if x.contains(machine, &v) == Some(true) {
            let p = machine.parent(&v, i)?;
            match y.contains(machine, &p) {
                Some(true) => hits_a += 1,
                Some(false) => {}
                None => undecided += 1,
            }
        }
        let w = machine.sample_vertex(&mut rng_b)?;
        if y.contains(machine, &w) == Some(true) {
            hits_b += 1;
        }
    }
    if undecided > 0 {
        return Err(VerifyError::Precondition(format!(
            "{undecided} parents have residual depth too shallow to decide membership in {}",
            y.name
        )));
    }
    let n = samples as f64;
    let pa = hits_a as f64 / n;
    let pb = hits_b as f64 / n;
    let stat = (pa - d as f64 * pb).abs();
    let sigma = (pa * (1.0 - pa) / n + (d * d) as f64 * pb * (1.0 - pb) / n).sqrt();
    let tol = 3.0 * sigma;
    let pass = if sigma == 0.0 { stat == 0.0 } else { stat <= tol };
    Ok(CheckReport {
        name: format!("measure-semipreserving[{} -> {}, i={i}, d={d}]", x.name, y.name),
        samples,
        statistic: format!("|{pa:.6} - {d}*{pb:.6}| = {stat:.6}"),
        tolerance: format!("3sigma = {tol:.6}"),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        counterexample: None,
    })
}

/// Validates the degree bounds between A and B from the profiles, then
/// Monte Carlo checks `a * mu(A) <= b * mu(B)` within 3 sigma. With a color
/// filter, only edges of that color count as adjacencies.
#[allow(clippy::too_many_arguments)]
pub fn check_sfmtp(
    machine: &LimitMachine,
    a_set: &DefinableSet,
    b_set: &DefinableSet,
    a: u64,
    b: u64,
    samples: u64,
    seed: u64,
    color: Option<EdgeColor>,
) -> Result<CheckReport, VerifyError> {
    // Both sets must sit at a common depth with room for one refinement
    // level, which is where the profiles pin neighbor counts.
    let set_depth = {
        let mut depths: BTreeSet<u8> = BTreeSet::new();
        for &c in a_set.chains.iter().chain(&b_set.chains) {
            depths.insert(machine.chains[c].depth);
        }
        match (depths.len(), depths.iter().next()) {
            (1, Some(&d)) if d < machine.depth => d,
            _ => {
                return Err(VerifyError::Precondition(format!(
                    "sets {} and {} must share one depth below {}",
                    a_set.name, b_set.name, machine.depth
                )))
            }
        }
    };
    // Neighbor count of a depth-(set_depth + 1) chain inside a target set.
    let neighbors_in = |c: usize, target: &DefinableSet| -> (u64, bool) {
        let info = &machine.chains[c];
        let mut count = 0u64;
        let mut infinite = false;
        for slot in info.parents.iter().flatten() {
            if color.is_some_and(|col| slot.color != col) {
                continue;
            }
            if let Some(pc) = slot.chain {
                if target.chains.contains(&pc) {
                    count += 1;
                }
            }
        }
        for entry in &info.child_counts {
            let edge_color = machine.chains[entry.chain]
                .parents
                .get(entry.index as usize - 1)
                .and_then(|s| s.as_ref())
                .map(|s| s.color);
            if color.is_some() && edge_color != color {
                continue;
            }
            if target.chains.contains(&entry.chain) {
                match entry.count {
                    ChildCount::Exact(c) => count += c,
                    ChildCount::Infinite => infinite = true,
                }
            }
        }
        (count, infinite)
    };
    let refinements = |set: &DefinableSet| -> Vec<usize> {
        (0..machine.chains.len())
            .filter(|&c| {
                machine.chains[c].depth == set_depth + 1
                    && set
                        .chains
                        .contains(&machine.truncate_chain(c, set_depth))
            })
            .collect()
    };
    for ac in refinements(a_set) {
        let (count, infinite) = neighbors_in(ac, b_set);
        if !infinite && count < a {
            return Err(VerifyError::Precondition(format!(
                "refinement {ac} of {} has only {count} neighbors in {}, needs >= {a}",
                a_set.name, b_set.name
            )));
        }
    }
    for bc in refinements(b_set) {
        let (count, infinite) = neighbors_in(bc, a_set);
        if infinite || count > b {
            return Err(VerifyError::Precondition(format!(
                "refinement {bc} of {} exceeds {b} neighbors in {}",
                b_set.name, a_set.name
            )));
        }
    }

    let mut rng_a = rng_util::derive_rng(seed, 0x73666d74);
    let mut rng_b = rng_util::derive_rng(seed, 0x73666d75);
    let mut hits_a = 0u64;
    let mut hits_b = 0u64;
    for _ in 0..samples {
        let v = machine.sample_vertex(&mut rng_a)?;
        if a_set.contains(machine, &v) == Some(true) {
            hits_a += 1;
        }
        let w = machine.sample_vertex(&mut rng_b)?;
        if b_set.contains(machine, &w) == Some(true) {
            hits_b += 1;
        }
    }
    let n = samples as f64;
    let pa = hits_a as f64 / n;
    let pb = hits_b as f64 / n;
    let lhs = a as f64 * pa;
    let rhs = b as f64 * pb;
    let sigma =
        ((a * a) as f64 * pa * (1.0 - pa) / n + (b * b) as f64 * pb * (1.0 - pb) / n).sqrt();
    let pass = lhs <= rhs + 3.0 * sigma;
    Ok(CheckReport {
        name: format!(
            "sfmtp[{}({a}) <= {}({b}){}]",
            a_set.name,
            b_set.name,
            match color {
                Some(EdgeColor::Kept) => ", kept only",
                Some(EdgeColor::Fill) => ", fill only",
                None => "",
            }
        ),
        samples,
        statistic: format!("{lhs:.6} vs {rhs:.6}"),
        tolerance: format!("3sigma = {:.6}", 3.0 * sigma),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        counterexample: None,
    })
}

/// Chi-squared comparison of sampled chains against the stored limit
/// fractions, plus an exact recount of the atomic part.
pub fn compare_type_distribution(
    machine: &LimitMachine,
    samples: u64,
    seed: u64,
) -> CheckReport {
    // Exact atomic part first.
    let atoms = machine.finite_atoms();
    let mut per_chain: BTreeMap<usize, u64> = BTreeMap::new();
    for a in &atoms {
        if let LimitVertex::Finite { chain, .. } = a {
            *per_chain.entry(*chain).or_insert(0) += 1;
        }
    }
    for (idx, info) in machine.chains.iter().enumerate() {
        if info.depth != machine.depth {
            continue;
        }
        if let NuValue::Finite(c) = info.nu {
            let got = per_chain.get(&idx).copied().unwrap_or(0);
            if got != c {
                return CheckReport {
                    name: "type-distribution".into(),
                    samples,
                    statistic: format!("chain {idx}: {got} atoms"),
                    tolerance: "exact atomic counts".into(),
                    verdict: Verdict::Fail,
                    counterexample: Some(format!("expected {c} atoms for chain {idx}")),
                };
            }
        }
    }

    // Sampled continuum part.
    let mut rng = rng_util::derive_rng(seed, 0x64697374);
    let mut observed: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..samples {
        match machine.sample_vertex(&mut rng) {
            Ok(v) => *observed.entry(v.chain()).or_insert(0) += 1,
            Err(e) => return error_report("type-distribution", samples, e),
        }
    }
    // Expectations come from the recorded limit fractions, renormalized
    // over the support; the sampler's weights are checked against them.
    let mut mus: Vec<f64> = Vec::with_capacity(machine.support.len());
    for &chain in &machine.support {
        let mu = crate::sequence::ratio_from_string(&machine.chains[chain].mu)
            .expect("machine stores valid fractions");
        mus.push(*mu.numer() as f64 / *mu.denom() as f64);
    }
    let mu_total: f64 = mus.iter().sum();
    let mut chi2 = 0.0f64;
    for (&chain, &mu) in machine.support.iter().zip(&mus) {
        let expect = samples as f64 * mu / mu_total;
        let got = observed.get(&chain).copied().unwrap_or(0) as f64;
        if expect > 0.0 {
            chi2 += (got - expect) * (got - expect) / expect;
        }
    }
    let dof = machine.support.len().saturating_sub(1) as u64;
    let threshold = chi2_threshold(dof);
    let pass = if dof == 0 {
        observed.len() <= 1 && chi2 == 0.0
    } else {
        chi2 <= threshold
    };
    CheckReport {
        name: "type-distribution".into(),
        samples,
        statistic: format!("chi2 = {chi2:.4}, dof = {dof}; atomic counts exact"),
        tolerance: format!("chi2 <= {threshold:.4}"),
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        counterexample: None,
    }
}

// ---------------------------------------------------------------------------
// Residuality diagnostic (sequence side)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct ResidualityReport {
    /// Per graph: fraction of unmarked vertices within distance r of the
    /// witness, over n.
    pub fractions: Vec<String>,
    pub monotone_decreasing: bool,
}

/// Mass of the r-ball around a witness of the given type after deleting all
/// marked vertices, per graph. The trend toward zero is reported, not
/// asserted.
pub fn residuality_diagnostic(
    seq: &GraphSequence,
    trie: &TypeTrie,
    ty: TypeId,
    r: u32,
) -> Result<ResidualityReport, VerifyError> {
    let mut fractions: Vec<Rational> = Vec::new();
    for (gi, g) in seq.graphs().iter().enumerate() {
        let witness = trie.chains[gi]
            .iter()
            .position(|chain| chain.get(ty.depth as usize - 1) == Some(&ty))
            .ok_or_else(|| {
                VerifyError::Precondition(format!("graph {gi} has no witness of the type"))
            })? as VertexId;
        let marked: BTreeSet<VertexId> = g.marks().values().copied().collect();
        let mut dist: BTreeMap<VertexId, u32> = BTreeMap::new();
        let mut ball = 0u64;
        if !marked.contains(&witness) {
            dist.insert(witness, 0);
            ball += 1;
            let mut queue = VecDeque::from([witness]);
            while let Some(v) = queue.pop_front() {
                let d = dist[&v];
                if d == r {
                    continue;
                }
                for &w in g.neighbors(v) {
                    if marked.contains(&w) || dist.contains_key(&w) {
                        continue;
                    }
                    dist.insert(w, d + 1);
                    ball += 1;
                    queue.push_back(w);
                }
            }
        }
        fractions.push(Rational::new(ball as i64, g.n() as i64));
    }
    let monotone = fractions.windows(2).all(|w| w[1] < w[0]);
    Ok(ResidualityReport {
        fractions: fractions
            .iter()
            .map(crate::sequence::ratio_to_string)
            .collect(),
        monotone_decreasing: monotone,
    })
}

// ---------------------------------------------------------------------------
// Suite
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub samples: u64,
    pub walk_len: u32,
    pub template_cap: usize,
    pub seed: u64,
    /// Restrict the derived mass-transport instances to one edge color.
    pub color_filter: Option<EdgeColor>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            samples: 10_000,
            walk_len: 16,
            template_cap: 8,
            seed: 0,
            color_filter: None,
        }
    }
}

/// Mass-transport instances read off the machine itself: pairs of chains
/// one level below the sampling depth whose refinement profiles pin a lower
/// bound on one side and an upper bound on the other.
fn derived_sfmtp_instances(
    machine: &LimitMachine,
    color: Option<EdgeColor>,
    cap: usize,
) -> Vec<(usize, usize, u64, u64)> {
    let ds = machine.depth - 1;
    if ds == 0 {
        return Vec::new();
    }
    let at_depth: Vec<usize> = (0..machine.chains.len())
        .filter(|&c| machine.chains[c].depth == ds && machine.chains[c].nu == NuValue::Infinite)
        .collect();
    let refinements = |c: usize| -> Vec<usize> {
        (0..machine.chains.len())
            .filter(|&r| {
                machine.chains[r].depth == ds + 1 && machine.truncate_chain(r, ds) == c
            })
            .collect()
    };
    let neighbors_in = |r: usize, target: usize| -> Option<u64> {
        // Colored neighbor count of refinement r inside basic(target);
        // None when unbounded.
        let info = &machine.chains[r];
        let mut count = 0u64;
        for slot in info.parents.iter().flatten() {
            if color.is_some_and(|col| slot.color != col) {
                continue;
            }
            if slot.chain == Some(target) {
                count += 1;
            }
        }
        for entry in &info.child_counts {
            if entry.chain != target {
                continue;
            }
            let edge_color = machine.chains[entry.chain]
                .parents
                .get(entry.index as usize - 1)
                .and_then(|s| s.as_ref())
                .map(|s| s.color);
            if color.is_some() && edge_color != color {
                continue;
            }
            match entry.count {
                ChildCount::Exact(c) => count += c,
                ChildCount::Infinite => return None,
            }
        }
        Some(count)
    };
    let mut out = Vec::new();
    for &x in &at_depth {
        for &y in &at_depth {
            if x == y || out.len() >= cap {
                continue;
            }
            let mut a_min: Option<u64> = None;
            for r in refinements(x) {
                let c = neighbors_in(r, y).unwrap_or(u64::MAX);
                a_min = Some(a_min.map_or(c, |m: u64| m.min(c)));
            }
            let mut b_max: Option<u64> = Some(0);
            for r in refinements(y) {
                match neighbors_in(r, x) {
                    Some(c) => b_max = b_max.map(|m| m.max(c)),
                    None => b_max = None,
                }
            }
            match (a_min, b_max) {
                (Some(a), Some(b)) if a >= 1 && b >= 1 => out.push((x, y, a, b)),
                _ => {}
            }
        }
    }
    out
}

/// Runs every check that needs no user-chosen sets, plus semipreservation
/// and mass-transport checks derived from the machine's own profiles.
pub fn run_suite(machine: &LimitMachine, cfg: &SuiteConfig) -> Vec<CheckReport> {
    let mut reports = vec![
        check_path_independence(machine, cfg.samples, cfg.template_cap, cfg.seed),
        check_edge_consistency(machine, cfg.samples, cfg.seed),
        check_acyclicity(machine, cfg.samples, cfg.walk_len, cfg.seed),
        compare_type_distribution(machine, cfg.samples, cfg.seed),
    ];
    // Auto-derived semipreservation instances: continuum chains with an
    // exactly pinned child count of a continuum child chain.
    let mut derived = 0;
    for (idx, info) in machine.chains.iter().enumerate() {
        if derived >= 4 {
            break;
        }
        if info.nu != NuValue::Infinite || info.depth + 1 != machine.depth {
            continue;
        }
        let mut by_index: BTreeMap<u8, u64> = BTreeMap::new();
        let mut child_of: BTreeMap<u8, usize> = BTreeMap::new();
        for e in &info.child_counts {
            if machine.chains[e.chain].nu == NuValue::Infinite {
                if let ChildCount::Exact(c) = e.count {
                    *by_index.entry(e.index).or_insert(0) += c;
                    child_of.insert(e.index, e.chain);
                }
            }
        }
        for (i, d) in by_index {
            if d == 0 {
                continue;
            }
            // Only a single child chain keeps the X set a basic set.
            let kids: Vec<&crate::limit::ChildCountEntry> = info
                .child_counts
                .iter()
                .filter(|e| e.index == i && machine.chains[e.chain].nu == NuValue::Infinite)
                .collect();
            if kids.len() != 1 {
                continue;
            }
            // Parents of sampled X-vertices must keep residual depth at
            // least Y's depth, i.e. the stored templates for edge i of
            // every deepest chain inside X have length one.
            let x_chain = kids[0].chain;
            let shallow = machine.support.iter().any(|&c| {
                machine.truncate_chain(c, machine.chains[x_chain].depth) == x_chain
                    && machine.chains[c]
                        .edges
                        .get(i as usize - 1)
                        .and_then(|e| e.as_ref())
                        .is_none_or(|e| {
                            e.templates.is_empty()
                                || e.templates.iter().any(|t| t.steps.len() > 1)
                        })
            });
            if shallow {
                continue;
            }
            let x = DefinableSet::new(format!("children-of-{idx}"), vec![x_chain]);
            let y = DefinableSet::new(format!("chain-{idx}"), vec![idx]);
            match check_measure_semipreserving(machine, &x, &y, i, d, cfg.samples, cfg.seed) {
                Ok(report) => {
                    reports.push(report);
                    derived += 1;
                }
                Err(VerifyError::Precondition(_)) => {}
                Err(e) => {
                    reports.push(error_report("measure-semipreserving", cfg.samples, e));
                    derived += 1;
                }
            }
            if derived >= 4 {
                break;
            }
        }
    }
    for (x, y, a, b) in derived_sfmtp_instances(machine, cfg.color_filter, 4) {
        let a_set = DefinableSet::new(format!("chain-{x}"), vec![x]);
        let b_set = DefinableSet::new(format!("chain-{y}"), vec![y]);
        match check_sfmtp(
            machine,
            &a_set,
            &b_set,
            a,
            b,
            cfg.samples,
            cfg.seed,
            cfg.color_filter,
        ) {
            Ok(report) => reports.push(report),
            Err(VerifyError::Precondition(_)) => {}
            Err(e) => reports.push(error_report("sfmtp", cfg.samples, e)),
        }
    }
    reports
}

// ---------------------------------------------------------------------------
// Fault injection (test surface)
// ---------------------------------------------------------------------------

/// Deliberate corruptions used to prove that the FAIL paths of every check
/// actually fire.
pub mod faults {
    use super::*;
    

    /// Redirects the final head of a second stored template back to the
    /// tail chain, so one replay route lands on a different vertex.
    pub fn corrupt_template(machine: &mut LimitMachine) -> Option<usize> {
        let support = machine.support.clone();
        for &c in &support {
            for slot in machine.chains[c].edges.iter_mut().flatten() {
                if slot.templates.len() >= 2 {
                    slot.templates[1].steps.last_mut().unwrap().head = c;
                    return Some(c);
                }
            }
        }
        None
    }

    /// Points an atomic parent slot back at its own chain, forcing a cycle
    /// in the atomic digraph.
    pub fn force_finite_cycle(machine: &mut LimitMachine) -> Option<usize> {
        for idx in 0..machine.chains.len() {
            if let NuValue::Finite(c) = machine.chains[idx].nu {
                if c == 0 {
                    continue;
                }
                if let Some(slot) = machine.chains[idx].parents.iter_mut().flatten().next() {
                    slot.chain = Some(idx);
                    return Some(idx);
                }
            }
        }
        None
    }

    /// Desynchronizes the two routes of an edge-consistency triple: the
    /// template behind `parent(parent(w, i'), i)` is redirected so it no
    /// longer lands on the i''-parent.
    pub fn corrupt_consistency_route(machine: &mut LimitMachine) -> Option<usize> {
        let support = machine.support.clone();
        for &c in &support {
            for &(i1, _, i) in &machine.chains[c].parent_relation.clone() {
                let Some(Some(slot)) = machine.chains[c].parents.get(i1 as usize - 1).map(|s| s.as_ref())
                else {
                    continue;
                };
                let Some(w1c) = slot.chain else { continue };
                let has_template = machine.chains[w1c]
                    .edges
                    .get(i as usize - 1)
                    .and_then(|e| e.as_ref())
                    .is_some_and(|e| !e.templates.is_empty());
                if !has_template {
                    continue;
                }
                let edge = machine.chains[w1c].edges[i as usize - 1].as_mut().unwrap();
                edge.templates[0].steps.last_mut().unwrap().head = w1c;
                return Some(w1c);
            }
        }
        None
    }

    /// Skews the sampling weights so the sampled distribution no longer
    /// matches the recorded fractions.
    pub fn skew_weights(machine: &mut LimitMachine) -> bool {
        if machine.support_weights.len() < 2 {
            return false;
        }
        machine.support_weights[0] *= 5;
        true
    }
}
