//! First-order formulas over the k+2-relation signature of 2-edge-colored
//! rooted marked k-trees, their evaluation, Stone pairings, and
//! Ehrenfeucht-Fraisse game oracles.
//!
//! The signature has binary relations `E_i(x, y)` ("y is the i-parent of
//! x"), `kept(x, y)` and `fill(x, y)` for the edge coloring (same
//! orientation), unary marks `U_j(x)`, and equality. Quantifiers come in a
//! plain form and a local form `forall_z x` / `exists_z x` that ranges over
//! the neighbors of `z` (any relation, either direction).

use std::collections::BTreeMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::graph::{RootedKTree, VertexId};
use crate::rng_util;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

/// Formula AST. Variables are interned as indices into [`Formula::vars`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// `E_i(x, y)`: y is the i-parent of x.
    Edge { i: u8, x: usize, y: usize },
    /// `kept(x, y)`: some i-edge from x to y has color Kept.
    Kept { x: usize, y: usize },
    /// `fill(x, y)`: some i-edge from x to y has color Fill.
    Fill { x: usize, y: usize },
    /// `U_j(x)`.
    Mark { j: u32, x: usize },
    Eq { x: usize, y: usize },
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    /// `anchor == None` is a plain quantifier; `Some(z)` restricts the bound
    /// variable to neighbors of `z`.
    Quant {
        q: Quantifier,
        anchor: Option<usize>,
        var: usize,
        body: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub root: Node,
    /// Variable names; indices into this table appear in the AST.
    pub vars: Vec<String>,
    /// Free variables, sorted by name. Tuple enumeration order.
    pub free: Vec<usize>,
    pub depth: u32,
    pub local: bool,
    /// Largest mark index mentioned (0 when none).
    pub max_mark: u32,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("relation index 0 at byte {pos} (indices are 1-based)")]
    ZeroIndex { pos: usize },
}

#[derive(Debug, Error)]
pub enum LogicError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("edge index {i} exceeds graph arity k = {k}")]
    Arity { i: u8, k: usize },
    #[error("enumeration budget {budget} exceeded ({needed} tuples); pass a sampling plan")]
    Budget { budget: u64, needed: u128 },
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: Vec<String>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{}`", c as char))
        }
    }

    fn word(&mut self) -> Option<(usize, String)> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.src.len()
            && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
        {
            end += 1;
        }
        if end == start {
            return None;
        }
        self.pos = end;
        Some((start, String::from_utf8_lossy(&self.src[start..end]).into()))
    }

    fn var_index(&mut self, name: &str) -> usize {
        if let Some(i) = self.vars.iter().position(|v| v == name) {
            i
        } else {
            self.vars.push(name.to_string());
            self.vars.len() - 1
        }
    }

    fn formula(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.conjunct()?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let rhs = self.conjunct()?;
            lhs = Node::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunct(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'!') => {
                self.pos += 1;
                Ok(Node::Not(Box::new(self.unary()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.formula()?;
                self.eat(b')')?;
                Ok(inner)
            }
            Some(_) => self.word_form(),
            None => self.err("unexpected end of formula"),
        }
    }

    fn word_form(&mut self) -> Result<Node, ParseError> {
        let Some((start, word)) = self.word() else {
            return self.err("expected atom or quantifier");
        };
        // Quantifiers: the body is everything to the right of the dot.
        for (kw, q) in [("forall", Quantifier::Forall), ("exists", Quantifier::Exists)] {
            if word == kw || word.starts_with(&format!("{kw}_")) {
                let anchor = if word == kw {
                    None
                } else {
                    let name = &word[kw.len() + 1..];
                    if name.is_empty() {
                        return self.err("missing anchor variable after `_`");
                    }
                    Some(self.var_index(name))
                };
                let Some((_, var_name)) = self.word() else {
                    return self.err("expected bound variable");
                };
                let var = self.var_index(&var_name);
                self.eat(b'.')?;
                let body = self.formula()?;
                return Ok(Node::Quant {
                    q,
                    anchor,
                    var,
                    body: Box::new(body),
                });
            }
        }
        // Relation atoms.
        if let Some(rest) = word.strip_prefix('E') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let i: u64 = rest.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: "bad edge index".into(),
                })?;
                if i == 0 {
                    return Err(ParseError::ZeroIndex { pos: start });
                }
                if i > u8::MAX as u64 {
                    return self.err("edge index too large");
                }
                let (x, y) = self.pair()?;
                return Ok(Node::Edge { i: i as u8, x, y });
            }
        }
        if let Some(rest) = word.strip_prefix('U') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let j: u64 = rest.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    msg: "bad mark index".into(),
                })?;
                if j == 0 {
                    return Err(ParseError::ZeroIndex { pos: start });
                }
                self.eat(b'(')?;
                let Some((_, x)) = self.word() else {
                    return self.err("expected variable");
                };
                let x = self.var_index(&x);
                self.eat(b')')?;
                return Ok(Node::Mark { j: j as u32, x });
            }
        }
        if word == "kept" || word == "fill" {
            let (x, y) = self.pair()?;
            return Ok(if word == "kept" {
                Node::Kept { x, y }
            } else {
                Node::Fill { x, y }
            });
        }
        // Otherwise it must be a variable followed by `= var`.
        let x = self.var_index(&word);
        self.eat(b'=')?;
        let Some((_, rhs)) = self.word() else {
            return self.err("expected variable after `=`");
        };
        let y = self.var_index(&rhs);
        Ok(Node::Eq { x, y })
    }

    fn pair(&mut self) -> Result<(usize, usize), ParseError> {
        self.eat(b'(')?;
        let Some((_, x)) = self.word() else {
            return self.err("expected variable");
        };
        let x = self.var_index(&x);
        self.eat(b',')?;
        let Some((_, y)) = self.word() else {
            return self.err("expected variable");
        };
        let y = self.var_index(&y);
        self.eat(b')')?;
        Ok((x, y))
    }
}

fn node_stats(node: &Node, bound: &mut Vec<usize>, free: &mut Vec<usize>) -> (u32, bool, u32) {
    match node {
        Node::Edge { x, y, .. } | Node::Kept { x, y } | Node::Fill { x, y } | Node::Eq { x, y } => {
            for &v in [x, y].iter() {
                if !bound.contains(v) && !free.contains(v) {
                    free.push(*v);
                }
            }
            let mark = 0;
            (0, true, mark)
        }
        Node::Mark { j, x } => {
            if !bound.contains(x) && !free.contains(x) {
                free.push(*x);
            }
            (0, true, *j)
        }
        Node::Not(inner) => node_stats(inner, bound, free),
        Node::And(a, b) | Node::Or(a, b) => {
            let (d1, l1, m1) = node_stats(a, bound, free);
            let (d2, l2, m2) = node_stats(b, bound, free);
            (d1.max(d2), l1 && l2, m1.max(m2))
        }
        Node::Quant {
            anchor, var, body, ..
        } => {
            if let Some(a) = anchor {
                if !bound.contains(a) && !free.contains(a) {
                    free.push(*a);
                }
            }
            bound.push(*var);
            let (d, l, m) = node_stats(body, bound, free);
            bound.pop();
            (d + 1, l && anchor.is_some(), m)
        }
    }
}

/// Parses the ASCII grammar: atoms `E<i>(x,y)`, `kept(x,y)`, `fill(x,y)`,
/// `U<j>(x)`, `x=y`; connectives `!`, `&`, `|`; quantifiers `forall x .`,
/// `exists x .` and local `forall_z x .`, `exists_z x .`; parentheses.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: Vec::new(),
    };
    let root = p.formula()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input");
    }
    let vars = p.vars;
    let mut free = Vec::new();
    let (depth, local, max_mark) = node_stats(&root, &mut Vec::new(), &mut free);
    free.sort_by(|&a, &b| vars[a].cmp(&vars[b]));
    Ok(Formula {
        root,
        vars,
        free,
        depth,
        local,
        max_mark,
    })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Partial map from variable names to vertices.
pub type Assignment = BTreeMap<String, VertexId>;

pub fn evaluate(t: &RootedKTree, f: &Formula, asg: &Assignment) -> Result<bool, LogicError> {
    let mut env: Vec<Option<VertexId>> = vec![None; f.vars.len()];
    for (idx, name) in f.vars.iter().enumerate() {
        if let Some(&v) = asg.get(name) {
            env[idx] = Some(v);
        }
    }
    for &fv in &f.free {
        if env[fv].is_none() {
            return Err(LogicError::Unbound(f.vars[fv].clone()));
        }
    }
    eval_node(t, &f.root, &mut env, &f.vars)
}

fn get(env: &[Option<VertexId>], vars: &[String], x: usize) -> Result<VertexId, LogicError> {
    env[x].ok_or_else(|| LogicError::Unbound(vars[x].clone()))
}

fn eval_node(
    t: &RootedKTree,
    node: &Node,
    env: &mut Vec<Option<VertexId>>,
    vars: &[String],
) -> Result<bool, LogicError> {
    match node {
        Node::Edge { i, x, y } => {
            let (a, b) = (get(env, vars, *x)?, get(env, vars, *y)?);
            Ok(t.i_parent(a, *i) == Some(b))
        }
        Node::Kept { x, y } => {
            let (a, b) = (get(env, vars, *x)?, get(env, vars, *y)?);
            Ok(matches!(t.edge(a, b), Some((_, crate::graph::EdgeColor::Kept))))
        }
        Node::Fill { x, y } => {
            let (a, b) = (get(env, vars, *x)?, get(env, vars, *y)?);
            Ok(matches!(t.edge(a, b), Some((_, crate::graph::EdgeColor::Fill))))
        }
        Node::Mark { j, x } => {
            let a = get(env, vars, *x)?;
            Ok(t.vertex_with_mark(*j) == Some(a))
        }
        Node::Eq { x, y } => Ok(get(env, vars, *x)? == get(env, vars, *y)?),
        Node::Not(inner) => Ok(!eval_node(t, inner, env, vars)?),
        Node::And(a, b) => Ok(eval_node(t, a, env, vars)? && eval_node(t, b, env, vars)?),
        Node::Or(a, b) => Ok(eval_node(t, a, env, vars)? || eval_node(t, b, env, vars)?),
        Node::Quant {
            q,
            anchor,
            var,
            body,
        } => {
            let domain: Vec<VertexId> = match anchor {
                Some(z) => t.neighbors(get(env, vars, *z)?).to_vec(),
                None => (0..t.n() as VertexId).collect(),
            };
            let saved = env[*var];
            let mut result = *q == Quantifier::Forall;
            for w in domain {
                env[*var] = Some(w);
                let got = eval_node(t, body, env, vars)?;
                match q {
                    Quantifier::Forall if !got => {
                        result = false;
                        break;
                    }
                    Quantifier::Exists if got => {
                        result = true;
                        break;
                    }
                    _ => {}
                }
            }
            env[*var] = saved;
            Ok(result)
        }
    }
}

// ---------------------------------------------------------------------------
// Stone pairings
// ---------------------------------------------------------------------------

/// Result of a Stone pairing computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StonePairing {
    pub value: Rational,
    /// False when the value is a sampled estimate rather than an exact count.
    pub exact: bool,
    /// Tuples enumerated or samples drawn.
    pub tuples: u64,
}

pub const DEFAULT_TUPLE_BUDGET: u64 = 50_000_000;

/// Probability that a uniformly chosen tuple of vertices (ordered, with
/// repetition) satisfies the formula: `|sat| / n^l` as an exact rational.
pub fn stone_pairing(t: &RootedKTree, f: &Formula) -> Result<StonePairing, LogicError> {
    stone_pairing_with(t, f, DEFAULT_TUPLE_BUDGET, None)
}

/// Like [`stone_pairing`], with an explicit enumeration budget and an
/// optional `(samples, seed)` fallback used when the budget is exceeded.
pub fn stone_pairing_with(
    t: &RootedKTree,
    f: &Formula,
    budget: u64,
    sampling: Option<(u64, u64)>,
) -> Result<StonePairing, LogicError> {
    check_arity(t, f)?;
    let l = f.free.len() as u32;
    let n = t.n() as u128;
    let total = n.checked_pow(l).unwrap_or(u128::MAX);
    if total > budget as u128 {
        let Some((samples, seed)) = sampling else {
            return Err(LogicError::Budget {
                budget,
                needed: total,
            });
        };
        let mut rng = rng_util::derive_rng(seed, 0x73746f6e65);
        let mut env: Vec<Option<VertexId>> = vec![None; f.vars.len()];
        let mut hits: u64 = 0;
        for _ in 0..samples {
            for &fv in &f.free {
                env[fv] = Some(rng_util::uniform_u64(&mut rng, t.n() as u64) as VertexId);
            }
            if eval_node(t, &f.root, &mut env, &f.vars)? {
                hits += 1;
            }
        }
        return Ok(StonePairing {
            value: Rational::new(hits as i64, samples as i64),
            exact: false,
            tuples: samples,
        });
    }

    let mut env: Vec<Option<VertexId>> = vec![None; f.vars.len()];
    let mut hits: i64 = 0;
    let mut idx = vec![0u32; f.free.len()];
    let mut count: u64 = 0;
    loop {
        for (slot, &fv) in f.free.iter().enumerate() {
            env[fv] = Some(idx[slot]);
        }
        if eval_node(t, &f.root, &mut env, &f.vars)? {
            hits += 1;
        }
        count += 1;
        // Odometer increment.
        let mut carry = true;
        for slot in (0..idx.len()).rev() {
            idx[slot] += 1;
            if (idx[slot] as usize) < t.n() {
                carry = false;
                break;
            }
            idx[slot] = 0;
        }
        if idx.is_empty() || carry {
            break;
        }
    }
    debug_assert_eq!(count as u128, total);
    Ok(StonePairing {
        value: Rational::new(hits, total as i64),
        exact: true,
        tuples: count,
    })
}

fn check_arity(t: &RootedKTree, f: &Formula) -> Result<(), LogicError> {
    fn walk(node: &Node, k: usize) -> Result<(), LogicError> {
        match node {
            Node::Edge { i, .. } if *i as usize > k => Err(LogicError::Arity { i: *i, k }),
            Node::Not(a) => walk(a, k),
            Node::And(a, b) | Node::Or(a, b) => {
                walk(a, k)?;
                walk(b, k)
            }
            Node::Quant { body, .. } => walk(body, k),
            _ => Ok(()),
        }
    }
    walk(&f.root, t.k())
}

// ---------------------------------------------------------------------------
// Ehrenfeucht-Fraisse games
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameWinner {
    Duplicator,
    Spoiler,
}

/// Solver for the localized game between two structures. Positions start
/// from one pebble per side; each spoiler move must be adjacent to an
/// already pebbled vertex of its structure, and the win condition is a
/// partial isomorphism preserving the i-parent relations, edge colors, and
/// marks `U_j` with `j <= mark_cap`.
///
/// The memo table is shared across queries against the same structure pair
/// and round count.
pub struct LocalEfSolver<'a> {
    a: &'a RootedKTree,
    b: &'a RootedKTree,
    mark_cap: u32,
    local: bool,
    memo: std::collections::HashMap<(Vec<VertexId>, Vec<VertexId>, u8), bool>,
}

impl<'a> LocalEfSolver<'a> {
    pub fn new(a: &'a RootedKTree, b: &'a RootedKTree, mark_cap: u32) -> Self {
        LocalEfSolver {
            a,
            b,
            mark_cap,
            local: true,
            memo: std::collections::HashMap::new(),
        }
    }

    fn global(a: &'a RootedKTree, b: &'a RootedKTree, mark_cap: u32) -> Self {
        LocalEfSolver {
            a,
            b,
            mark_cap,
            local: false,
            memo: std::collections::HashMap::new(),
        }
    }

    pub fn winner(&mut self, u: VertexId, v: VertexId, rounds: u8) -> GameWinner {
        if self.dup_wins(vec![u], vec![v], rounds) {
            GameWinner::Duplicator
        } else {
            GameWinner::Spoiler
        }
    }

    fn dup_wins(&mut self, ta: Vec<VertexId>, tb: Vec<VertexId>, r: u8) -> bool {
        if !tuples_match(self.a, self.b, &ta, &tb, self.mark_cap) {
            return false;
        }
        if r == 0 {
            return true;
        }
        let key = (ta.clone(), tb.clone(), r);
        if let Some(&cached) = self.memo.get(&key) {
            return cached;
        }
        let moves_a = self.moves(self.a, &ta);
        let moves_b = self.moves(self.b, &tb);
        let mut ok = true;
        // Spoiler plays in A, duplicator answers in B.
        'outer_a: for &wa in &moves_a {
            let mut ta2 = ta.clone();
            ta2.push(wa);
            for &wb in &moves_b {
                let mut tb2 = tb.clone();
                tb2.push(wb);
                if self.dup_wins(ta2.clone(), tb2, r - 1) {
                    continue 'outer_a;
                }
            }
            ok = false;
            break;
        }
        if ok {
            // Spoiler plays in B.
            'outer_b: for &wb in &moves_b {
                let mut tb2 = tb.clone();
                tb2.push(wb);
                for &wa in &moves_a {
                    let mut ta2 = ta.clone();
                    ta2.push(wa);
                    if self.dup_wins(ta2, tb2.clone(), r - 1) {
                        continue 'outer_b;
                    }
                }
                ok = false;
                break;
            }
        }
        self.memo.insert(key, ok);
        ok
    }

    fn moves(&self, g: &RootedKTree, tuple: &[VertexId]) -> Vec<VertexId> {
        if self.local {
            let mut out: Vec<VertexId> = tuple
                .iter()
                .flat_map(|&v| g.neighbors(v).iter().copied())
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        } else {
            (0..g.n() as VertexId).collect()
        }
    }
}

/// Atomic-type agreement of two pebble tuples: equality pattern, directed
/// i-edges with colors, and marks up to `mark_cap`.
fn tuples_match(
    a: &RootedKTree,
    b: &RootedKTree,
    ta: &[VertexId],
    tb: &[VertexId],
    mark_cap: u32,
) -> bool {
    debug_assert_eq!(ta.len(), tb.len());
    let m = ta.len();
    for p in 0..m {
        let marks_a: Vec<u32> = a
            .marks_of(ta[p])
            .into_iter()
            .filter(|&j| j <= mark_cap)
            .collect();
        let marks_b: Vec<u32> = b
            .marks_of(tb[p])
            .into_iter()
            .filter(|&j| j <= mark_cap)
            .collect();
        if marks_a != marks_b {
            return false;
        }
        for q in 0..m {
            if p == q {
                continue;
            }
            if (ta[p] == ta[q]) != (tb[p] == tb[q]) {
                return false;
            }
            if a.edge(ta[p], ta[q]) != b.edge(tb[p], tb[q]) {
                return false;
            }
        }
    }
    true
}

/// Winner of the d-round localized game from pebbles `(u)` and `(u2)`.
/// Duplicator wins exactly when the two vertices have the same d-Hintikka
/// type (marks `U_j` with `j > d` are invisible).
pub fn local_ef_winner(
    t: &RootedKTree,
    u: VertexId,
    t2: &RootedKTree,
    u2: VertexId,
    d: u8,
) -> GameWinner {
    LocalEfSolver::new(t, t2, d as u32).winner(u, u2, d)
}

/// True when the duplicator wins the unrestricted d-round game, i.e. the two
/// structures satisfy the same sentences of quantifier depth d (marks
/// restricted to `U_j`, `j <= d`).
pub fn global_ef_equivalent(t: &RootedKTree, t2: &RootedKTree, d: u8) -> bool {
    let mut solver = LocalEfSolver::global(t, t2, d as u32);
    solver.dup_wins(Vec::new(), Vec::new(), d)
}
