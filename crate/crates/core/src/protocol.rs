//! Two-party evaluation protocol for prenex formulas over a split word.
//!
//! Alice holds `u`, Bob holds `v`, and both know the formula and `|u·v|`.
//! They agree on a padding length `N` and evaluate the formula on
//! `u·e^N·v`: every quantifier is split three ways over Alice's, the
//! neutral, and Bob's region, with region boundaries driven by the link
//! graph of the predicate family so that no tuple of a family predicate can
//! straddle two regions. Alice expands her quantifiers, partially evaluates
//! the leaves, deduplicates, and sends Bob a tree whose size is bounded in
//! terms of the formula alone; Bob expands the rest and answers.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::evaluator::{holds_on, EvalEnv, EvalError};
use crate::formula::{
    constant_fold, to_prenex, Formula, NormalizeError, PrenexFormula, Quantifier, Var,
};
use crate::linkgraph::{LinkContext, LinkError};
use crate::par;
use crate::predicates::{PredicateError, PredicateFamily, PredicateRegistry};
use crate::words::{Alphabet, Word};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("padding bounds violated at history {history:?}: ({l}, {r}) not inside ({lo}, {hi})")]
    AssumptionViolated { history: String, l: i64, r: i64, lo: u64, hi: u64 },
    #[error("parameters exceed the universe cap {cap} (quantifiers {k}, |u| = {len_u})")]
    UniverseTooLarge { cap: u64, k: usize, len_u: u64 },
    #[error("too many quantifiers: {0} (at most {1} supported)")]
    TooManyQuantifiers(usize, usize),
    #[error("message references position {pos} outside the receiver's view")]
    PositionOutOfView { pos: u64 },
    #[error("no sender length is consistent with total length {total_len}")]
    InconsistentLengths { total_len: u64 },
    #[error("protocol result {result} disagrees with the oracle {oracle}")]
    OracleMismatch { result: bool, oracle: bool },
}

const MAX_QUANTIFIERS: usize = 8;
/// Default cap on `|u·e^N·v|`; parameter chains beyond it are rejected
/// rather than scanned.
pub const DEFAULT_UNIVERSE_CAP: u64 = 1 << 17;

/// Position classes, ordered left to right on the padded word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosClass {
    Alice,
    Neutral,
    Bob,
}

impl PosClass {
    pub const ALL: [PosClass; 3] = [PosClass::Alice, PosClass::Neutral, PosClass::Bob];

    pub fn letter(self) -> char {
        match self {
            PosClass::Alice => 'A',
            PosClass::Neutral => 'N',
            PosClass::Bob => 'B',
        }
    }
}

/// Annotations of the quantifiers enclosing a node, outermost first.
pub type TypeHistory = Vec<PosClass>;

pub fn history_string(h: &[PosClass]) -> String {
    if h.is_empty() {
        "-".to_string()
    } else {
        h.iter().map(|c| c.letter()).collect()
    }
}

/// Shared protocol parameters, computable by both parties from the formula,
/// the family, and the word lengths.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolParams {
    pub k: usize,
    pub n_total: u64,
    pub l0: u64,
    pub r0: u64,
    #[serde(rename = "n")]
    pub pad: u64,
    pub len_u: u64,
    pub len_v: u64,
    pub neutral: char,
    #[serde(skip)]
    bounds: BTreeMap<TypeHistory, (u64, u64)>,
}

impl ProtocolParams {
    pub fn total_len(&self) -> u64 {
        self.len_u + self.pad + self.len_v
    }

    /// Region bounds under a type history: positions `<= l` belong to the
    /// sender, positions `>= r` to the receiver, the rest are neutral.
    pub fn zone_bounds(&self, history: &[PosClass]) -> (u64, u64) {
        self.bounds[history]
    }
}

/// Computes `l0`, `r0` and the padding length for the formula, and
/// validates that every reachable bound stays strictly inside the padding.
/// The `cap` bounds the padded word length; parameter chains that escape it
/// are rejected early.
pub fn protocol_params(
    phi: &PrenexFormula,
    len_u: u64,
    len_v: u64,
    ctx: &LinkContext,
    neutral: char,
    cap: u64,
) -> Result<ProtocolParams, ProtocolError> {
    params_for_lengths(phi.quantifier_count(), len_u, len_v, ctx, neutral, cap)
}

fn params_for_lengths(
    k: usize,
    len_u: u64,
    len_v: u64,
    ctx: &LinkContext,
    neutral: char,
    cap: u64,
) -> Result<ProtocolParams, ProtocolError> {
    if k > MAX_QUANTIFIERS {
        return Err(ProtocolError::TooManyQuantifiers(k, MAX_QUANTIFIERS));
    }
    let n_total = (1u64 << k) - 1;
    let too_large = || ProtocolError::UniverseTooLarge { cap, k, len_u };
    let l0 = ctx.iterate_right_capped(n_total + 1, len_u, cap)?.ok_or_else(too_large)?;
    let l_max = ctx.iterate_right_capped(n_total, l0, cap)?.ok_or_else(too_large)?;
    let r0 = ctx.iterate_right_capped(n_total + 1, l_max, cap)?.ok_or_else(too_large)?;
    let pad = ctx.iterate_right_capped(n_total + 1, r0, cap)?.ok_or_else(too_large)?;
    if len_u + pad + len_v > cap {
        return Err(too_large());
    }

    let mut params = ProtocolParams {
        k,
        n_total,
        l0,
        r0,
        pad,
        len_u,
        len_v,
        neutral,
        bounds: BTreeMap::new(),
    };
    validate_bounds(&mut params, ctx, &mut Vec::new(), l0 as i64, r0 as i64)?;
    Ok(params)
}

/// Walks every history of length at most `k`, recording bounds and checking
/// `len_u < l < r < len_u + pad` throughout.
fn validate_bounds(
    params: &mut ProtocolParams,
    ctx: &LinkContext,
    history: &mut TypeHistory,
    l: i64,
    r: i64,
) -> Result<(), ProtocolError> {
    let (lo, hi) = (params.len_u, params.len_u + params.pad);
    if !(l > lo as i64 && l < r && r < hi as i64) {
        return Err(ProtocolError::AssumptionViolated {
            history: history_string(history),
            l,
            r,
            lo,
            hi,
        });
    }
    params.bounds.insert(history.clone(), (l as u64, r as u64));
    if history.len() == params.k {
        return Ok(());
    }
    let step = history.len() + 1;
    let n = 1u64 << (params.k - step);
    for class in PosClass::ALL {
        history.push(class);
        let underflow = |history: &TypeHistory| ProtocolError::AssumptionViolated {
            history: history_string(history),
            l: -1,
            r,
            lo,
            hi,
        };
        let (nl, nr) = match class {
            PosClass::Alice => (ctx.iterate_right(n, l as u64)? as i64, r),
            PosClass::Neutral => {
                let nl = ctx.iterate_left(n, l as u64).map_err(|_| underflow(history))?;
                (nl, ctx.iterate_right(n, r as u64)? as i64)
            }
            PosClass::Bob => {
                let nr = ctx.iterate_left(n, r as u64).map_err(|_| underflow(history))?;
                (l, nr)
            }
        };
        validate_bounds(params, ctx, history, nl, nr)?;
        history.pop();
    }
    Ok(())
}

/// The prenex formula with every quantifier split over the three position
/// classes: `forall` becomes a conjunction of three annotated quantifiers,
/// `exists` a disjunction. Each node carries the history of the
/// annotations above it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnnTree {
    /// Joins the three class branches of one quantifier; conjunctive for
    /// `forall`, disjunctive for `exists`.
    Join(Quantifier, Vec<AnnTree>),
    Quant {
        q: Quantifier,
        class: PosClass,
        var: Var,
        history: TypeHistory,
        child: Box<AnnTree>,
    },
    Matrix(Formula),
}

/// Builds the annotated tree of a prenex formula: three branches per
/// quantifier, leaves holding the matrix.
pub fn annotate_prenex(phi: &PrenexFormula) -> AnnTree {
    fn build(prefix: &[(Quantifier, Var)], matrix: &Formula, history: &mut TypeHistory) -> AnnTree {
        match prefix.first() {
            None => AnnTree::Matrix(matrix.clone()),
            Some((q, var)) => {
                let mut branches = Vec::with_capacity(3);
                for class in PosClass::ALL {
                    let node_history = history.clone();
                    history.push(class);
                    let child = build(&prefix[1..], matrix, history);
                    history.pop();
                    branches.push(AnnTree::Quant {
                        q: *q,
                        class,
                        var: var.clone(),
                        history: node_history,
                        child: Box::new(child),
                    });
                }
                AnnTree::Join(*q, branches)
            }
        }
    }
    build(&phi.prefix, &phi.matrix, &mut Vec::new())
}

/// The tree Alice sends: her quantifiers are expanded away, leaves are
/// partially evaluated and free of her variables, children of every node
/// are deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum MessageTree {
    Const(bool),
    Leaf(Formula),
    And(Vec<MessageTree>),
    Or(Vec<MessageTree>),
    Quant {
        q: Quantifier,
        class: PosClass,
        var: Var,
        history: TypeHistory,
        child: Box<MessageTree>,
    },
}

impl MessageTree {
    /// Canonical wire form: node tag, history string, sorted children.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            MessageTree::Const(true) => out.push_str("#t"),
            MessageTree::Const(false) => out.push_str("#f"),
            MessageTree::Leaf(f) => {
                out.push_str("(leaf {");
                out.push_str(&f.to_string());
                out.push_str("})");
            }
            MessageTree::And(cs) | MessageTree::Or(cs) => {
                out.push_str(if matches!(self, MessageTree::And(..)) { "(and" } else { "(or" });
                for c in cs {
                    out.push(' ');
                    c.write(out);
                }
                out.push(')');
            }
            MessageTree::Quant { q, class, var, history, child } => {
                out.push('(');
                out.push_str(match q {
                    Quantifier::Exists => "ex",
                    Quantifier::Forall => "all",
                });
                out.push(' ');
                out.push(class.letter());
                out.push(' ');
                out.push_str(&history_string(history));
                out.push(' ');
                out.push_str(var.name());
                out.push(' ');
                child.write(out);
                out.push(')');
            }
        }
    }

    /// Depth counting quantifier and connective levels.
    pub fn depth(&self) -> usize {
        match self {
            MessageTree::Const(_) | MessageTree::Leaf(_) => 1,
            MessageTree::And(cs) | MessageTree::Or(cs) => {
                1 + cs.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            MessageTree::Quant { child, .. } => 1 + child.depth(),
        }
    }

    /// Variables occurring in leaves that are not bound by an enclosing
    /// quantifier node of the message. Empty for a well-formed message:
    /// all sender variables have been eliminated.
    pub fn unbound_leaf_variables(&self) -> Vec<Var> {
        fn walk(t: &MessageTree, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
            match t {
                MessageTree::Const(_) => {}
                MessageTree::Leaf(f) => {
                    for v in f.free_variables() {
                        if !bound.contains(&v) && !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
                MessageTree::And(cs) | MessageTree::Or(cs) => {
                    cs.iter().for_each(|c| walk(c, bound, out));
                }
                MessageTree::Quant { var, child, .. } => {
                    bound.push(var.clone());
                    walk(child, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }
}

/// An Alice-to-Bob message: the simplified tree plus the quantifier count
/// of the source formula (a property of the formula, not of the inputs).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub quantifier_count: usize,
    pub tree: MessageTree,
}

impl Message {
    pub fn serialize(&self) -> String {
        format!("k={} {}", self.quantifier_count, self.tree.serialize())
    }

    pub fn byte_len(&self) -> usize {
        self.serialize().len()
    }
}

/// Combines message children under a connective: flattens same-kind nodes,
/// folds constants, sorts and deduplicates.
fn combine(q: Quantifier, children: Vec<MessageTree>) -> MessageTree {
    let conjunctive = q == Quantifier::Forall;
    let mut flat = Vec::with_capacity(children.len());
    for c in children {
        match c {
            MessageTree::Const(b) => {
                if b == conjunctive {
                    continue; // identity element
                }
                return MessageTree::Const(b); // absorbing element
            }
            MessageTree::And(cs) if conjunctive => flat.extend(cs),
            MessageTree::Or(cs) if !conjunctive => flat.extend(cs),
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();
    match flat.len() {
        0 => MessageTree::Const(conjunctive),
        1 => flat.into_iter().next().unwrap(),
        _ => {
            if conjunctive {
                MessageTree::And(flat)
            } else {
                MessageTree::Or(flat)
            }
        }
    }
}

struct AliceScope<'a> {
    u: &'a Word,
    params: &'a ProtocolParams,
    family: &'a PredicateFamily,
    values: Vec<(Var, u64)>,
    classes: Vec<(Var, PosClass)>,
}

impl AliceScope<'_> {
    fn class_of(&self, v: &Var) -> Option<PosClass> {
        self.classes.iter().rev().find(|(w, _)| w == v).map(|(_, c)| *c)
    }

    fn value_of(&self, v: &Var) -> Option<u64> {
        self.values.iter().rev().find(|(w, _)| w == v).map(|(_, p)| *p)
    }

    /// Letter at a position Alice can see: her word, then padding.
    fn letter(&self, pos: u64) -> char {
        if pos < self.u.len() {
            self.u.letter(pos)
        } else {
            debug_assert!(pos < self.params.len_u + self.params.pad);
            self.params.neutral
        }
    }
}

/// Alice's round: expands her quantifiers over `[0, l]` per the bounds of
/// each node's history, partially evaluates leaves, and simplifies.
pub fn alice_round(
    u: &Word,
    params: &ProtocolParams,
    family: &PredicateFamily,
    tree: &AnnTree,
) -> Result<Message, ProtocolError> {
    debug_assert_eq!(u.len(), params.len_u);
    let mut scope = AliceScope { u, params, family, values: Vec::new(), classes: Vec::new() };
    let tree = alice_walk(tree, &mut scope)?;
    Ok(Message { quantifier_count: params.k, tree })
}

fn alice_walk(tree: &AnnTree, scope: &mut AliceScope) -> Result<MessageTree, ProtocolError> {
    Ok(match tree {
        AnnTree::Join(q, branches) => {
            let mut children = Vec::with_capacity(branches.len());
            for b in branches {
                children.push(alice_walk(b, scope)?);
            }
            combine(*q, children)
        }
        AnnTree::Quant { q, class: PosClass::Alice, var, history, child } => {
            let (l, _) = scope.params.zone_bounds(history);
            let mut children = Vec::with_capacity((l + 1) as usize);
            scope.classes.push((var.clone(), PosClass::Alice));
            for pos in 0..=l {
                scope.values.push((var.clone(), pos));
                let msg = alice_walk(child, scope);
                scope.values.pop();
                children.push(msg?);
            }
            scope.classes.pop();
            combine(*q, children)
        }
        AnnTree::Quant { q, class, var, history, child } => {
            scope.classes.push((var.clone(), *class));
            let msg = alice_walk(child, scope);
            scope.classes.pop();
            MessageTree::Quant {
                q: *q,
                class: *class,
                var: var.clone(),
                history: history.clone(),
                child: Box::new(msg?),
            }
        }
        AnnTree::Matrix(psi) => {
            let folded = constant_fold(&partial_eval(psi, scope)?);
            match folded {
                Formula::True => MessageTree::Const(true),
                Formula::False => MessageTree::Const(false),
                f => MessageTree::Leaf(f),
            }
        }
    })
}

/// Replaces each atom of the matrix by itself, true, or false according to
/// the sender's knowledge: atoms over her variables are computed; a
/// numerical atom mixing classes is false (its positions cannot share a
/// tuple); an order atom mixing classes is decided by the class order;
/// atoms entirely over neutral or receiver variables stay symbolic.
fn partial_eval(f: &Formula, scope: &AliceScope) -> Result<Formula, ProtocolError> {
    let konst = |b: bool| if b { Formula::True } else { Formula::False };
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Letter(l, v) => match scope.class_of(v) {
            Some(PosClass::Alice) => {
                let pos = scope.value_of(v).expect("sender variables carry values");
                konst(scope.letter(pos) == *l)
            }
            _ => f.clone(),
        },
        Formula::Order(op, x, y) => {
            if x == y {
                return Ok(konst(op.apply(0, 0)));
            }
            let (cx, cy) = (scope.class_of(x), scope.class_of(y));
            match (cx, cy) {
                (Some(PosClass::Alice), Some(PosClass::Alice)) => {
                    let (px, py) = (scope.value_of(x).unwrap(), scope.value_of(y).unwrap());
                    konst(op.apply(px, py))
                }
                (Some(cx), Some(cy)) if cx != cy => {
                    // Positions of distinct classes are strictly ordered by
                    // class, so <, <= and = all reduce to the class order.
                    konst(match op {
                        crate::formula::OrderOp::Eq => false,
                        _ => cx < cy,
                    })
                }
                _ => f.clone(),
            }
        }
        Formula::Pred(name, args) => {
            let classes: Vec<PosClass> = args
                .iter()
                .map(|a| scope.class_of(a).expect("prenex formulas bind every variable"))
                .collect();
            if classes.iter().all(|&c| c == PosClass::Alice) {
                let def = scope
                    .family
                    .get(name)
                    .ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
                let tuple: Vec<u64> = args.iter().map(|a| scope.value_of(a).unwrap()).collect();
                konst(def.contains(&tuple, Some(scope.params.total_len()))?)
            } else if classes.windows(2).any(|w| w[0] != w[1]) {
                konst(false)
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => Formula::not(partial_eval(g, scope)?),
        Formula::And(cs) => {
            Formula::And(cs.iter().map(|c| partial_eval(c, scope)).collect::<Result<_, _>>()?)
        }
        Formula::Or(cs) => {
            Formula::Or(cs.iter().map(|c| partial_eval(c, scope)).collect::<Result<_, _>>()?)
        }
        Formula::Implies(l, r) => {
            Formula::implies(partial_eval(l, scope)?, partial_eval(r, scope)?)
        }
        Formula::Exists(..) | Formula::Forall(..) => {
            unreachable!("matrix of a prenex formula is quantifier-free")
        }
    })
}

struct BobScope<'a> {
    v: &'a Word,
    params: &'a ProtocolParams,
    family: &'a PredicateFamily,
    values: Vec<(Var, u64)>,
}

impl BobScope<'_> {
    fn letter(&self, pos: u64) -> Result<char, ProtocolError> {
        let pad_end = self.params.len_u + self.params.pad;
        if pos < self.params.len_u || pos >= self.params.total_len() {
            Err(ProtocolError::PositionOutOfView { pos })
        } else if pos < pad_end {
            Ok(self.params.neutral)
        } else {
            Ok(self.v.letter(pos - pad_end))
        }
    }

    fn value_of(&self, v: &Var) -> Result<u64, ProtocolError> {
        self.values
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, p)| *p)
            .ok_or_else(|| EvalError::UnboundVariable(v.0.clone()).into())
    }
}

/// Bob's round: derives the sender length from the total length, expands
/// neutral and receiver quantifiers per the stored histories, and fully
/// evaluates the leaves (neutral positions carry the neutral letter).
pub fn bob_round(
    v: &Word,
    total_len: u64,
    message: &Message,
    ctx: &LinkContext,
    neutral: char,
) -> Result<bool, ProtocolError> {
    let k = message.quantifier_count;
    let len_u = derive_sender_len(k, total_len, v.len(), ctx)?;
    let params = params_for_lengths(k, len_u, v.len(), ctx, neutral, total_len.max(1))?;
    let mut scope = BobScope { v, params: &params, family: ctx.family(), values: Vec::new() };
    bob_eval(&message.tree, &mut scope)
}

/// Finds the sender length `m` with `m + pad(m) + len_v == total_len`.
/// `m + pad(m)` is strictly increasing, so binary search applies.
fn derive_sender_len(
    k: usize,
    total_len: u64,
    len_v: u64,
    ctx: &LinkContext,
) -> Result<u64, ProtocolError> {
    if k > MAX_QUANTIFIERS {
        return Err(ProtocolError::TooManyQuantifiers(k, MAX_QUANTIFIERS));
    }
    let n_total = (1u64 << k) - 1;
    let padded = |m: u64| -> Result<Option<u64>, ProtocolError> {
        let cap = total_len;
        let mut cur = Some(m);
        for steps in [n_total + 1, n_total, n_total + 1, n_total + 1] {
            cur = match cur {
                Some(p) => ctx.iterate_right_capped(steps, p, cap)?,
                None => return Ok(None),
            };
        }
        // The chain above ends at the padding length.
        Ok(cur.and_then(|pad| m.checked_add(pad)))
    };
    let target = total_len
        .checked_sub(len_v)
        .ok_or(ProtocolError::InconsistentLengths { total_len })?;
    let (mut lo, mut hi) = (0u64, target);
    while lo <= hi {
        let mid = lo + (hi - lo) / 2;
        match padded(mid)? {
            Some(p) if p == target => return Ok(mid),
            Some(p) if p < target => lo = mid + 1,
            _ => {
                if mid == 0 {
                    break;
                }
                hi = mid - 1;
            }
        }
    }
    Err(ProtocolError::InconsistentLengths { total_len })
}

fn bob_eval(tree: &MessageTree, scope: &mut BobScope) -> Result<bool, ProtocolError> {
    Ok(match tree {
        MessageTree::Const(b) => *b,
        MessageTree::Leaf(f) => bob_leaf(f, scope)?,
        MessageTree::And(cs) => {
            for c in cs {
                if !bob_eval(c, scope)? {
                    return Ok(false);
                }
            }
            true
        }
        MessageTree::Or(cs) => {
            for c in cs {
                if bob_eval(c, scope)? {
                    return Ok(true);
                }
            }
            false
        }
        MessageTree::Quant { q, class, var, history, child } => {
            let (l, r) = scope.params.zone_bounds(history);
            let (start, end) = match class {
                PosClass::Neutral => (l + 1, r - 1),
                PosClass::Bob => (r, scope.params.total_len() - 1),
                PosClass::Alice => return Err(ProtocolError::PositionOutOfView { pos: l }),
            };
            let conjunctive = *q == Quantifier::Forall;
            let mut acc = conjunctive;
            for pos in start..=end {
                scope.values.push((var.clone(), pos));
                let r = bob_eval(child, scope);
                scope.values.pop();
                if r? != conjunctive {
                    acc = !conjunctive;
                    break;
                }
            }
            acc
        }
    })
}

fn bob_leaf(f: &Formula, scope: &BobScope) -> Result<bool, ProtocolError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Letter(l, v) => scope.letter(scope.value_of(v)?)? == *l,
        Formula::Order(op, x, y) => op.apply(scope.value_of(x)?, scope.value_of(y)?),
        Formula::Pred(name, args) => {
            let def = scope
                .family
                .get(name)
                .ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
            let tuple: Vec<u64> =
                args.iter().map(|a| scope.value_of(a)).collect::<Result<_, _>>()?;
            def.contains(&tuple, Some(scope.params.total_len()))?
        }
        Formula::Not(g) => !bob_leaf(g, scope)?,
        Formula::And(cs) => {
            for c in cs {
                if !bob_leaf(c, scope)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(cs) => {
            for c in cs {
                if bob_leaf(c, scope)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(l, r) => !bob_leaf(l, scope)? || bob_leaf(r, scope)?,
        Formula::Exists(..) | Formula::Forall(..) => {
            unreachable!("message leaves are quantifier-free")
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRound {
    pub speaker: String,
    pub payload_bits: usize,
}

/// Full record of one protocol run.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub params: ProtocolParams,
    pub message: String,
    pub message_bytes: usize,
    pub result: bool,
    pub oracle_result: Option<bool>,
    pub rounds: Option<Vec<TraceRound>>,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub with_oracle: bool,
    pub universe_cap: u64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { with_oracle: true, universe_cap: DEFAULT_UNIVERSE_CAP, trace: true }
    }
}

/// Runs the whole protocol on a closed formula: prenexing, parameter
/// agreement, Alice's round, the message, Bob's round. With the oracle
/// enabled the result is checked against direct evaluation of the padded
/// word; a disagreement is an error.
pub fn run_protocol(
    phi: &Formula,
    u: &Word,
    v: &Word,
    family: &PredicateFamily,
    neutral: char,
    with_oracle: bool,
) -> Result<Transcript, ProtocolError> {
    let ctx = LinkContext::new(family.clone());
    run_protocol_with(phi, u, v, &ctx, neutral, &RunOptions { with_oracle, ..Default::default() })
}

/// [`run_protocol`] with a reusable link context and explicit options.
pub fn run_protocol_with(
    phi: &Formula,
    u: &Word,
    v: &Word,
    ctx: &LinkContext,
    neutral: char,
    opts: &RunOptions,
) -> Result<Transcript, ProtocolError> {
    let prenex = to_prenex(phi)?;
    let params = protocol_params(&prenex, u.len(), v.len(), ctx, neutral, opts.universe_cap)?;
    let annotated = annotate_prenex(&prenex);
    let message = alice_round(u, &params, ctx.family(), &annotated)?;
    let serialized = message.serialize();
    let result = bob_round(v, params.total_len(), &message, ctx, neutral)?;

    let oracle_result = if opts.with_oracle {
        let oracle = oracle_answer(phi, u, v, &params, ctx.family())?;
        if oracle != result {
            return Err(ProtocolError::OracleMismatch { result, oracle });
        }
        Some(oracle)
    } else {
        None
    };

    let rounds = opts.trace.then(|| {
        vec![
            TraceRound { speaker: "alice".into(), payload_bits: serialized.len() * 8 },
            TraceRound { speaker: "bob".into(), payload_bits: 1 },
        ]
    });

    Ok(Transcript {
        params,
        message_bytes: serialized.len(),
        message: serialized,
        result,
        oracle_result,
        rounds,
    })
}

/// Direct evaluation of the formula on the padded word `u·e^N·v`.
pub fn oracle_answer(
    phi: &Formula,
    u: &Word,
    v: &Word,
    params: &ProtocolParams,
    family: &PredicateFamily,
) -> Result<bool, ProtocolError> {
    let w = u.concat_padded(params.neutral, params.pad, v);
    let mut letters: std::collections::BTreeSet<char> = phi.letters();
    letters.extend(w.symbols().iter().copied());
    letters.insert(params.neutral);
    let alphabet = Alphabet::new(letters).expect("letters are validated lowercase");
    let mut registry = PredicateRegistry::new();
    for def in family.defs() {
        registry.insert(def.clone());
    }
    let env = EvalEnv::new(alphabet, registry);
    Ok(holds_on(phi, &w, &env)?)
}

/// Structural bound on the serialized message size, computed from the
/// formula alone: (number of distinct folded matrices) x (node count of
/// the annotated tree) x (per-node byte bound). Deliberately loose.
pub fn message_size_bound(phi: &PrenexFormula) -> u64 {
    let k = phi.quantifier_count() as u32;
    let atoms = phi.matrix.atom_count() as u32;
    let distinct_leaves = 3u64.saturating_pow(atoms).saturating_add(2);
    let mut shape_nodes = 3u64.saturating_pow(k); // leaf slots
    for i in 0..=k {
        shape_nodes = shape_nodes.saturating_add(2 * 3u64.saturating_pow(i));
    }
    let leaf_bytes = {
        let worst = replace_atoms(&phi.matrix, &Formula::False);
        worst.to_string().len().max(phi.matrix.to_string().len()) as u64 + 16
    };
    let var_bytes = phi.prefix.iter().map(|(_, v)| v.name().len()).max().unwrap_or(1) as u64;
    let node_bytes = leaf_bytes.max(16 + k as u64 + var_bytes);
    distinct_leaves.saturating_mul(shape_nodes).saturating_mul(node_bytes)
}

fn replace_atoms(f: &Formula, with: &Formula) -> Formula {
    match f {
        Formula::Letter(..) | Formula::Order(..) | Formula::Pred(..) => with.clone(),
        Formula::Not(g) => Formula::not(replace_atoms(g, with)),
        Formula::And(cs) => Formula::And(cs.iter().map(|c| replace_atoms(c, with)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| replace_atoms(c, with)).collect()),
        Formula::Implies(l, r) => Formula::implies(replace_atoms(l, with), replace_atoms(r, with)),
        Formula::Exists(v, b) => Formula::Exists(v.clone(), Box::new(replace_atoms(b, with))),
        Formula::Forall(v, b) => Formula::Forall(v.clone(), Box::new(replace_atoms(b, with))),
        _ => f.clone(),
    }
}

/// Number of equivalence classes of "same membership for every suffix of
/// length `p`" among prefixes of length at most `max_prefix_len`, computed
/// by exhaustive suffix probing.
pub fn nerode_classes(
    member: impl Fn(&Word) -> Result<bool, EvalError> + Sync + Send,
    p: usize,
    max_prefix_len: usize,
    alphabet: &Alphabet,
    budget: u64,
) -> Result<usize, EvalError> {
    nerode_impl(member, p, max_prefix_len, alphabet, budget, false)
}

/// Sequential reference variant of [`nerode_classes`].
pub fn nerode_classes_seq(
    member: impl Fn(&Word) -> Result<bool, EvalError> + Sync + Send,
    p: usize,
    max_prefix_len: usize,
    alphabet: &Alphabet,
    budget: u64,
) -> Result<usize, EvalError> {
    nerode_impl(member, p, max_prefix_len, alphabet, budget, true)
}

fn nerode_impl(
    member: impl Fn(&Word) -> Result<bool, EvalError> + Sync + Send,
    p: usize,
    max_prefix_len: usize,
    alphabet: &Alphabet,
    budget: u64,
    sequential: bool,
) -> Result<usize, EvalError> {
    let suffixes = alphabet.count_words(p).ok_or(EvalError::BudgetExceeded { len: p })?;
    let mut prefix_count = 0u64;
    let mut offsets = Vec::new();
    for len in 0..=max_prefix_len {
        offsets.push((len, prefix_count));
        let c = alphabet.count_words(len).ok_or(EvalError::BudgetExceeded { len })?;
        prefix_count += c;
    }
    if prefix_count.saturating_mul(suffixes) > budget {
        return Err(EvalError::BudgetExceeded { len: max_prefix_len });
    }
    let prefix_at = |i: u64| -> Word {
        let (len, off) = offsets
            .iter()
            .rev()
            .find(|&&(_, off)| off <= i)
            .copied()
            .expect("index within prefix count");
        alphabet.word_at(len, i - off)
    };
    let signature = |i: u64| -> Result<Vec<bool>, EvalError> {
        let prefix = prefix_at(i);
        let mut sig = Vec::with_capacity(suffixes as usize);
        for s in 0..suffixes {
            let w = prefix.concat(&alphabet.word_at(p, s));
            sig.push(member(&w)?);
        }
        Ok(sig)
    };
    let sigs = if sequential {
        par::try_map_range_seq(prefix_count, signature)?
    } else {
        par::try_map_range(prefix_count, signature)?
    };
    let classes: std::collections::BTreeSet<Vec<bool>> = sigs.into_iter().collect();
    Ok(classes.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;
    use crate::predicates::PredicateDef;

    fn succ_ctx() -> LinkContext {
        LinkContext::new(PredicateFamily::new(vec![PredicateDef::succ()]).unwrap())
    }

    fn prenex(text: &str) -> PrenexFormula {
        to_prenex(&parse_formula(text).unwrap()).unwrap()
    }

    #[test]
    fn params_for_succ_family() {
        // right(p) = p + 2 for the successor family.
        let ctx = succ_ctx();
        let phi = prenex("exists x. a(x)");
        let params = protocol_params(&phi, 3, 5, &ctx, 'c', 1 << 17).unwrap();
        assert_eq!((params.l0, params.r0, params.pad), (7, 13, 17));
        assert_eq!(params.zone_bounds(&[]), (7, 13));
        assert_eq!(params.zone_bounds(&[PosClass::Alice]), (9, 13));
        assert_eq!(params.zone_bounds(&[PosClass::Neutral]), (5, 15));
        assert_eq!(params.zone_bounds(&[PosClass::Bob]), (7, 11));
    }

    #[test]
    fn params_quantifier_free() {
        let ctx = succ_ctx();
        let phi = prenex("true");
        let params = protocol_params(&phi, 2, 2, &ctx, 'c', 1 << 17).unwrap();
        assert_eq!(params.k, 0);
        assert_eq!(params.n_total, 0);
        assert!(params.l0 > 2 && params.r0 > params.l0 && params.pad > params.r0);
    }

    #[test]
    fn annotation_shape() {
        let phi = prenex("exists x. forall y. (a(x) & (x < y -> b(y)))");
        let tree = annotate_prenex(&phi);
        fn count(t: &AnnTree, leaves: &mut usize) {
            match t {
                AnnTree::Matrix(_) => *leaves += 1,
                AnnTree::Join(_, cs) => cs.iter().for_each(|c| count(c, leaves)),
                AnnTree::Quant { child, .. } => count(child, leaves),
            }
        }
        let mut leaves = 0;
        count(&tree, &mut leaves);
        assert_eq!(leaves, 9);
        match &tree {
            AnnTree::Join(Quantifier::Exists, branches) => assert_eq!(branches.len(), 3),
            other => panic!("expected a 3-way join, got {other:?}"),
        }
    }

    #[test]
    fn annotation_k0() {
        let phi = prenex("true");
        assert_eq!(annotate_prenex(&phi), AnnTree::Matrix(Formula::True));
    }

    #[test]
    fn combine_dedups() {
        let a = MessageTree::Leaf(parse_formula("b(y)").unwrap());
        let b = MessageTree::Leaf(parse_formula("b(y)").unwrap());
        match combine(Quantifier::Exists, vec![a.clone(), b]) {
            MessageTree::Leaf(_) => {}
            other => panic!("expected the duplicates to collapse, got {other:?}"),
        }
        assert_eq!(combine(Quantifier::Exists, vec![MessageTree::Const(false), a.clone()]), a);
        assert_eq!(
            combine(Quantifier::Forall, vec![MessageTree::Const(false), a]),
            MessageTree::Const(false)
        );
    }

    #[test]
    fn toy_run_is_sound() {
        let phi = parse_formula("exists x. forall y. (a(x) & (x < y -> b(y)))").unwrap();
        let ab = Alphabet::new(['a', 'b', 'c']).unwrap();
        let family = PredicateFamily::new(vec![PredicateDef::succ()]).unwrap();
        let t =
            run_protocol(&phi, &ab.word("aa").unwrap(), &ab.word("bb").unwrap(), &family, 'b', true)
                .unwrap();
        assert!(t.result);
        assert_eq!(t.oracle_result, Some(true));

        let t =
            run_protocol(&phi, &ab.word("ac").unwrap(), &ab.word("cb").unwrap(), &family, 'b', true)
                .unwrap();
        assert!(!t.result);
    }

    #[test]
    fn empty_inputs() {
        let phi = parse_formula("exists x. a(x)").unwrap();
        let ab = Alphabet::new(['a', 'b']).unwrap();
        let family = PredicateFamily::empty();
        let t = run_protocol(&phi, &Word::empty(), &Word::empty(), &family, 'b', true).unwrap();
        // The padded word is all neutral letters, so the formula is false.
        assert!(!t.result);
        assert_eq!(t.oracle_result, Some(false));
        let ok =
            run_protocol(&phi, &ab.word("a").unwrap(), &Word::empty(), &family, 'b', true).unwrap();
        assert!(ok.result);
    }

    #[test]
    fn message_is_free_of_sender_variables() {
        let phi = parse_formula("exists x. forall y. (a(x) & (x < y -> b(y)))").unwrap();
        let ab = Alphabet::new(['a', 'b', 'c']).unwrap();
        let family = PredicateFamily::new(vec![PredicateDef::succ()]).unwrap();
        let ctx = LinkContext::new(family);
        let prenexed = to_prenex(&phi).unwrap();
        let params = protocol_params(&prenexed, 2, 2, &ctx, 'b', 1 << 17).unwrap();
        let msg = alice_round(
            &ab.word("aa").unwrap(),
            &params,
            ctx.family(),
            &annotate_prenex(&prenexed),
        )
        .unwrap();
        assert!(msg.tree.unbound_leaf_variables().is_empty());
        // One join and one quantifier node per level, plus the leaf.
        assert!(msg.tree.depth() <= 2 * prenexed.quantifier_count() + 1);
        assert!(msg.byte_len() as u64 <= message_size_bound(&prenexed));
    }

    #[test]
    fn nerode_examples() {
        let ab = Alphabet::new(['a', 'b']).unwrap();
        let env = EvalEnv::with_alphabet(ab.clone());
        let contains_a = parse_formula("exists x. a(x)").unwrap();
        let n =
            nerode_classes(|w| holds_on(&contains_a, w, &env), 2, 6, &ab, 1 << 22).unwrap();
        assert_eq!(n, 2);

        let all = parse_formula("true").unwrap();
        let n = nerode_classes(|w| holds_on(&all, w, &env), 3, 5, &ab, 1 << 22).unwrap();
        assert_eq!(n, 1);

        // Even length over a single letter.
        let single = Alphabet::new(['a']).unwrap();
        let n = nerode_classes(|w| Ok(w.len() % 2 == 0), 3, 8, &single, 1 << 22).unwrap();
        assert_eq!(n, 2);
        let seq = nerode_classes_seq(|w| Ok(w.len() % 2 == 0), 3, 8, &single, 1 << 22).unwrap();
        assert_eq!(seq, 2);
    }

    #[test]
    fn sender_length_is_recovered() {
        let ctx = succ_ctx();
        for (k, len_u, len_v) in [(0, 0, 0), (1, 3, 5), (2, 6, 1), (3, 4, 4)] {
            let params = params_for_lengths(k, len_u, len_v, &ctx, 'c', 1 << 17).unwrap();
            let derived = derive_sender_len(k, params.total_len(), len_v, &ctx).unwrap();
            assert_eq!(derived, len_u);
        }
    }
}
