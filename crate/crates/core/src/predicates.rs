//! Unvaried numerical predicates.
//!
//! A predicate is a set `E ⊆ ℕ^k`; on a universe of size `n` it is
//! interpreted as `E ∩ [n]^k`. Finite-degree predicates additionally support
//! `tuples_containing`: the exact, finite set of tuples a value occurs in.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{check_nondecreasing_unbounded, ExprError, IntExpr};
use crate::formula::{Formula, Var};

/// Scan cap for enumerations backed by expression inversion.
const ENUM_SCAN_CAP: u64 = 1 << 22;
/// Range of the empirical monotonicity check for rule-defined predicates.
const MONOTONE_CHECK_LIMIT: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum PredicateError {
    #[error("predicate {name}: expected {expected} arguments, got {got}")]
    ArityMismatch { name: String, expected: usize, got: usize },
    #[error("predicate {0} is not flagged finite-degree")]
    NotFiniteDegree(String),
    #[error("predicate {0}: {1}")]
    BadDefinition(String, String),
    #[error("predicate {name}: enumeration for {value} exceeds the scan cap")]
    EnumerationTooLarge { name: String, value: u64 },
    #[error("predicate {name}: a tuple containing {value} does not fit in 64 bits")]
    EnumerationOverflow { name: String, value: u64 },
    #[error(
        "predicate {name}: enumeration and membership disagree at {value} \
         (enumerated-but-not-member {missing:?}, member-but-not-enumerated {extra:?})"
    )]
    EnumerationMismatch {
        name: String,
        value: u64,
        missing: Option<Vec<u64>>,
        extra: Option<Vec<u64>>,
    },
    #[error("duplicate predicate name {0}")]
    DuplicateName(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("evaluation inside a predicate failed: {0}")]
    InnerEval(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Leq,
    Lt,
    Eq,
    Plus,
    Times,
    Msb0,
    Bit,
    Pow2,
}

impl Builtin {
    pub fn arity(self) -> usize {
        match self {
            Builtin::Leq | Builtin::Lt | Builtin::Eq | Builtin::Msb0 | Builtin::Bit => 2,
            Builtin::Plus | Builtin::Times => 3,
            Builtin::Pow2 => 1,
        }
    }

    /// Whether the builtin is a finite-degree predicate.
    pub fn finite_degree(self) -> bool {
        matches!(self, Builtin::Eq | Builtin::Pow2)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Builtin::Leq => "leq",
            Builtin::Lt => "lt",
            Builtin::Eq => "eq",
            Builtin::Plus => "plus",
            Builtin::Times => "times",
            Builtin::Msb0 => "msb0",
            Builtin::Bit => "bit",
            Builtin::Pow2 => "pow2",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "leq" => Builtin::Leq,
            "lt" => Builtin::Lt,
            "eq" => Builtin::Eq,
            "plus" => Builtin::Plus,
            "times" => Builtin::Times,
            "msb0" => Builtin::Msb0,
            "bit" => Builtin::Bit,
            "pow2" => Builtin::Pow2,
            _ => return None,
        })
    }

    fn contains(self, t: &[u64]) -> bool {
        match self {
            Builtin::Leq => t[0] <= t[1],
            Builtin::Lt => t[0] < t[1],
            Builtin::Eq => t[0] == t[1],
            Builtin::Plus => t[0].checked_add(t[1]) == Some(t[2]),
            Builtin::Times => t[0].checked_mul(t[1]) == Some(t[2]),
            Builtin::Msb0 => t[0] >= 1 && t[1] == t[0] - (1u64 << t[0].ilog2()),
            Builtin::Bit => t[1] < 64 && (t[0] >> t[1]) & 1 == 1,
            Builtin::Pow2 => t[0].is_power_of_two(),
        }
    }
}

/// Graph of a counting bound, decided semantically: `(c, c') ∈ F` iff `c'`
/// is the largest value for which the stored formula holds with the two
/// distinguished variables set to `c` and `c'`.
#[derive(Debug, Clone)]
pub struct CountGraphDef {
    pub formula: Box<Formula>,
    pub count_var: Var,
    pub value_var: Var,
    pub registry: Box<PredicateRegistry>,
    cache: Arc<Mutex<std::collections::BTreeMap<(u64, u64), bool>>>,
}

impl CountGraphDef {
    pub fn new(formula: Formula, count_var: Var, value_var: Var, registry: PredicateRegistry) -> Self {
        CountGraphDef {
            formula: Box::new(formula),
            count_var,
            value_var,
            registry: Box::new(registry),
            cache: Arc::new(Mutex::new(Default::default())),
        }
    }

    /// Truth of the stored formula at `(c, c')`, evaluated over a padding
    /// universe just large enough to hold both values. Sound because the
    /// formula only uses unvaried predicates and no letter atoms range
    /// beyond the relativization.
    fn holds(&self, name: &str, c: u64, cp: u64) -> Result<bool, PredicateError> {
        if let Some(&v) = self.cache.lock().unwrap().get(&(c, cp)) {
            return Ok(v);
        }
        let universe = c.max(cp) + 1;
        let alphabet = crate::words::Alphabet::new(['z']).expect("fixed alphabet");
        let word = crate::words::Word::from_symbols(vec![
            'z';
            usize::try_from(universe)
                .expect("universe too large")
        ]);
        let env = crate::evaluator::EvalEnv::new(alphabet, (*self.registry).clone());
        let mut asg = crate::evaluator::Assignment::new();
        asg.bind(self.count_var.clone(), c);
        asg.bind(self.value_var.clone(), cp);
        let v = crate::evaluator::evaluate(&self.formula, &word, &asg, &env)
            .map_err(|e| PredicateError::InnerEval(format!("{name}: {e}")))?;
        self.cache.lock().unwrap().insert((c, cp), v);
        Ok(v)
    }
}

#[derive(Debug, Clone)]
pub enum PredicateKind {
    Builtin(Builtin),
    /// Explicit finite tuple table.
    Tuples(Vec<Vec<u64>>),
    /// `{(e_1(x), ..., e_k(x)) : x ∈ ℕ}`, one expression per coordinate.
    Rule(Vec<IntExpr>),
    /// `{(x, e(x)) : x ∈ ℕ}`.
    FunctionGraph(IntExpr),
    /// `(x, y)` accepted iff both share the same most significant bit and
    /// the bits of `x` are contained in those of `y`.
    AndMsb,
    /// Base predicate consulted after translating each argument from the
    /// work zone to its assigned zone. Rejects argument tuples that do not
    /// share a most significant bit, which makes it finite-degree.
    Wrapped { base: Box<PredicateDef>, zones: Vec<u8> },
    /// `{(x, y) : bit (y - f(x)) of x is set}` for a nondecreasing,
    /// unbounded shift `f`.
    BitShifted(IntExpr),
    /// See [`CountGraphDef`].
    CountGraph(CountGraphDef),
}

#[derive(Debug, Clone)]
pub struct PredicateDef {
    name: String,
    arity: usize,
    kind: PredicateKind,
    finite_degree: bool,
}

impl PredicateDef {
    pub fn new(
        name: impl Into<String>,
        kind: PredicateKind,
        finite_degree: bool,
    ) -> Result<Self, PredicateError> {
        let name = name.into();
        let arity = match &kind {
            PredicateKind::Builtin(b) => {
                if finite_degree && !b.finite_degree() {
                    return Err(PredicateError::BadDefinition(
                        name,
                        format!("builtin {} cannot be finite-degree", b.tag()),
                    ));
                }
                b.arity()
            }
            PredicateKind::Tuples(tuples) => {
                let arity = tuples.first().map(|t| t.len()).unwrap_or(1);
                if arity == 0 || tuples.iter().any(|t| t.len() != arity) {
                    return Err(PredicateError::BadDefinition(
                        name,
                        "tuples must be nonempty and of equal arity".into(),
                    ));
                }
                arity
            }
            PredicateKind::Rule(exprs) => {
                if exprs.is_empty() {
                    return Err(PredicateError::BadDefinition(name, "rule needs coordinates".into()));
                }
                // Membership inverts coordinates by binary search, so the
                // monotonicity requirement applies whether or not the
                // predicate is flagged finite-degree.
                for e in exprs {
                    check_nondecreasing_unbounded(e, MONOTONE_CHECK_LIMIT)
                        .map_err(|m| PredicateError::BadDefinition(name.clone(), m))?;
                }
                exprs.len()
            }
            PredicateKind::FunctionGraph(e) => {
                if finite_degree {
                    check_nondecreasing_unbounded(e, MONOTONE_CHECK_LIMIT)
                        .map_err(|m| PredicateError::BadDefinition(name.clone(), m))?;
                }
                2
            }
            PredicateKind::AndMsb => 2,
            PredicateKind::Wrapped { base, zones } => {
                if zones.len() != base.arity || zones.iter().any(|&z| !(1..=4).contains(&z)) {
                    return Err(PredicateError::BadDefinition(
                        name,
                        "zone vector must match base arity with zones in 1..=4".into(),
                    ));
                }
                base.arity
            }
            PredicateKind::BitShifted(e) => {
                check_nondecreasing_unbounded(e, MONOTONE_CHECK_LIMIT)
                    .map_err(|m| PredicateError::BadDefinition(name.clone(), m))?;
                2
            }
            PredicateKind::CountGraph(_) => 2,
        };
        Ok(PredicateDef { name, arity, kind, finite_degree })
    }

    pub fn builtin(name: impl Into<String>, b: Builtin) -> Self {
        PredicateDef::new(name, PredicateKind::Builtin(b), b.finite_degree())
            .expect("builtin definitions are valid")
    }

    /// The successor relation `{(x, x+1)}`.
    pub fn succ() -> Self {
        PredicateDef::new(
            "succ",
            PredicateKind::Rule(vec![IntExpr::parse("x").unwrap(), IntExpr::parse("x+1").unwrap()]),
            true,
        )
        .expect("succ is valid")
    }

    /// The doubling graph `{(x, 2x)}`.
    pub fn double() -> Self {
        PredicateDef::new("double", PredicateKind::FunctionGraph(IntExpr::parse("2*x").unwrap()), true)
            .expect("double is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> &PredicateKind {
        &self.kind
    }

    pub fn finite_degree(&self) -> bool {
        self.finite_degree
    }

    /// Membership of a tuple, with the `[n]^k` clipping applied when a
    /// universe size is supplied.
    pub fn contains(&self, tuple: &[u64], universe: Option<u64>) -> Result<bool, PredicateError> {
        if tuple.len() != self.arity {
            return Err(PredicateError::ArityMismatch {
                name: self.name.clone(),
                expected: self.arity,
                got: tuple.len(),
            });
        }
        if let Some(n) = universe {
            if tuple.iter().any(|&t| t >= n) {
                return Ok(false);
            }
        }
        self.contains_unclipped(tuple)
    }

    fn contains_unclipped(&self, t: &[u64]) -> Result<bool, PredicateError> {
        Ok(match &self.kind {
            PredicateKind::Builtin(b) => b.contains(t),
            PredicateKind::Tuples(tuples) => tuples.iter().any(|row| row == t),
            PredicateKind::Rule(exprs) => {
                // Invert the first strictly informative coordinate, then
                // check the rest pointwise over the matching interval.
                let (lo, hi) = invert_nondecreasing(&exprs[0], t[0], &self.name)?;
                let mut x = lo;
                let mut found = false;
                while x <= hi {
                    if exprs.iter().zip(t).all(|(e, &want)| e.eval(x as u128) == Ok(want as u128)) {
                        found = true;
                        break;
                    }
                    x += 1;
                }
                found
            }
            PredicateKind::FunctionGraph(e) => e.eval(t[0] as u128).ok() == Some(t[1] as u128),
            PredicateKind::AndMsb => {
                t[0] >= 1 && t[1] >= 1 && t[0].ilog2() == t[1].ilog2() && t[0] & t[1] == t[0]
            }
            PredicateKind::Wrapped { base, zones } => {
                if t.iter().any(|&x| x == 0) {
                    return Ok(false);
                }
                let log = t[0].ilog2();
                if t.iter().any(|&x| x.ilog2() != log) {
                    return Ok(false);
                }
                let m = 1u64 << log;
                let mut translated = Vec::with_capacity(t.len());
                for (&x, &z) in t.iter().zip(zones) {
                    translated.push(match z {
                        1 => x - m,
                        2 => x,
                        3 => match x.checked_add(m) {
                            Some(v) => v,
                            None => return Ok(false),
                        },
                        _ => match x.checked_add(2 * m) {
                            Some(v) => v,
                            None => return Ok(false),
                        },
                    });
                }
                base.contains(&translated, None)?
            }
            PredicateKind::BitShifted(f) => {
                let shift = f
                    .eval(t[0] as u128)
                    .map_err(|e| PredicateError::BadDefinition(self.name.clone(), e.to_string()))?;
                match (t[1] as u128).checked_sub(shift) {
                    Some(j) if j < 64 => (t[0] >> j) & 1 == 1,
                    _ => false,
                }
            }
            PredicateKind::CountGraph(def) => {
                // The value is a count over a universe restricted below the
                // first argument, so it cannot exceed it.
                if t[1] > t[0] || !def.holds(&self.name, t[0], t[1])? {
                    return Ok(false);
                }
                // Maximality among the admissible values.
                for cp in (t[1] + 1)..=t[0] {
                    if def.holds(&self.name, t[0], cp)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    /// The finite set of tuples in which `n` occurs, in sorted order.
    pub fn tuples_containing(&self, n: u64) -> Result<Vec<Vec<u64>>, PredicateError> {
        if !self.finite_degree {
            return Err(PredicateError::NotFiniteDegree(self.name.clone()));
        }
        let mut out: BTreeSet<Vec<u64>> = BTreeSet::new();
        match &self.kind {
            PredicateKind::Builtin(Builtin::Eq) => {
                out.insert(vec![n, n]);
            }
            PredicateKind::Builtin(Builtin::Pow2) => {
                if n.is_power_of_two() {
                    out.insert(vec![n]);
                }
            }
            PredicateKind::Builtin(_) => unreachable!("checked at construction"),
            PredicateKind::Tuples(tuples) => {
                for t in tuples {
                    if t.contains(&n) {
                        out.insert(t.clone());
                    }
                }
            }
            PredicateKind::Rule(exprs) => {
                for e in exprs {
                    let (lo, hi) = invert_nondecreasing(e, n, &self.name)?;
                    for x in lo..=hi {
                        if e.eval(x as u128) == Ok(n as u128) {
                            let tuple = self.rule_tuple_at(exprs, x)?;
                            if let Some(tuple) = tuple {
                                out.insert(tuple);
                            }
                        }
                    }
                }
            }
            PredicateKind::FunctionGraph(e) => {
                let at_n = e
                    .eval(n as u128)
                    .map_err(|e| PredicateError::BadDefinition(self.name.clone(), e.to_string()))?;
                match u64::try_from(at_n) {
                    Ok(v) => {
                        out.insert(vec![n, v]);
                    }
                    Err(_) => {
                        return Err(PredicateError::EnumerationOverflow {
                            name: self.name.clone(),
                            value: n,
                        })
                    }
                }
                let (lo, hi) = invert_nondecreasing(e, n, &self.name)?;
                for x in lo..=hi {
                    if e.eval(x as u128) == Ok(n as u128) {
                        out.insert(vec![x, n]);
                    }
                }
            }
            PredicateKind::AndMsb => {
                if n >= 1 {
                    let (lo, hi) = dyadic_block(n);
                    for y in lo..=hi {
                        if n & y == n {
                            out.insert(vec![n, y]);
                        }
                        if y & n == y {
                            out.insert(vec![y, n]);
                        }
                    }
                }
            }
            PredicateKind::Wrapped { .. } => {
                if n >= 1 {
                    let (lo, hi) = dyadic_block(n);
                    let block = hi - lo + 1;
                    let others = self.arity as u32 - 1;
                    if block.checked_pow(others).map_or(true, |c| c > ENUM_SCAN_CAP) {
                        return Err(PredicateError::EnumerationTooLarge {
                            name: self.name.clone(),
                            value: n,
                        });
                    }
                    for slot in 0..self.arity {
                        let mut tuple = vec![lo; self.arity];
                        tuple[slot] = n;
                        loop {
                            if self.contains_unclipped(&tuple)? {
                                out.insert(tuple.clone());
                            }
                            // Odometer over the coordinates other than `slot`.
                            let mut done = true;
                            for i in (0..self.arity).rev() {
                                if i == slot {
                                    continue;
                                }
                                if tuple[i] < hi {
                                    tuple[i] += 1;
                                    done = false;
                                    break;
                                }
                                tuple[i] = lo;
                            }
                            if done {
                                break;
                            }
                        }
                    }
                }
            }
            PredicateKind::BitShifted(f) => {
                let err = |e: ExprError| PredicateError::BadDefinition(self.name.clone(), e.to_string());
                let fn_ = f.eval(n as u128).map_err(err)?;
                for j in 0..64 {
                    if (n >> j) & 1 == 1 {
                        if let Ok(y) = u64::try_from(fn_ + j as u128) {
                            out.insert(vec![n, y]);
                        } else {
                            return Err(PredicateError::EnumerationOverflow {
                                name: self.name.clone(),
                                value: n,
                            });
                        }
                    }
                }
                // Pairs (x, n): requires f(x) <= n, a finite prefix.
                let mut x = 0u64;
                loop {
                    let fx = f.eval(x as u128).map_err(err)?;
                    if fx > n as u128 {
                        break;
                    }
                    let j = n as u128 - fx;
                    if j < 64 && (x >> (j as u32)) & 1 == 1 {
                        out.insert(vec![x, n]);
                    }
                    x += 1;
                    if x > ENUM_SCAN_CAP {
                        return Err(PredicateError::EnumerationTooLarge {
                            name: self.name.clone(),
                            value: n,
                        });
                    }
                }
            }
            PredicateKind::CountGraph(_) => unreachable!("count graphs are not finite-degree"),
        }
        Ok(out.into_iter().collect())
    }

    fn rule_tuple_at(&self, exprs: &[IntExpr], x: u64) -> Result<Option<Vec<u64>>, PredicateError> {
        let mut tuple = Vec::with_capacity(exprs.len());
        for e in exprs {
            let v = e
                .eval(x as u128)
                .map_err(|e| PredicateError::BadDefinition(self.name.clone(), e.to_string()))?;
            match u64::try_from(v) {
                Ok(v) => tuple.push(v),
                Err(_) => return Ok(None),
            }
        }
        Ok(Some(tuple))
    }

    /// Window for the brute-force degree check: tuples containing `n` can
    /// only involve coordinates up to this bound.
    pub fn degree_window(&self, n: u64) -> Result<u64, PredicateError> {
        Ok(match &self.kind {
            PredicateKind::Builtin(_) => n + 2,
            PredicateKind::Tuples(tuples) => {
                tuples.iter().flatten().copied().max().unwrap_or(0).max(n) + 1
            }
            PredicateKind::Rule(_) | PredicateKind::FunctionGraph(_) => {
                let exprs: Vec<&IntExpr> = match &self.kind {
                    PredicateKind::Rule(es) => es.iter().collect(),
                    PredicateKind::FunctionGraph(e) => vec![e],
                    _ => unreachable!(),
                };
                let mut w = n + 1;
                for e in &exprs {
                    let (_, hi) = invert_nondecreasing(e, n, &self.name)?;
                    w = w.max(hi + 1);
                    for x in [n, hi] {
                        if let Ok(Some(v)) = e.eval_u64(x) {
                            w = w.max(v + 1);
                        }
                    }
                }
                w
            }
            PredicateKind::AndMsb | PredicateKind::Wrapped { .. } => {
                if n == 0 {
                    2
                } else {
                    dyadic_block(n).1 + 1
                }
            }
            PredicateKind::BitShifted(f) => {
                let fn_ = f
                    .eval(n as u128)
                    .map_err(|e| PredicateError::BadDefinition(self.name.clone(), e.to_string()))?;
                let top = u64::try_from(fn_ + 64).map_err(|_| PredicateError::EnumerationOverflow {
                    name: self.name.clone(),
                    value: n,
                })?;
                // Generators x with f(x) <= n are bounded by inversion.
                let (_, hi) = invert_nondecreasing(f, n, &self.name)?;
                top.max(hi + 1).max(n + 1)
            }
            PredicateKind::CountGraph(_) => {
                return Err(PredicateError::NotFiniteDegree(self.name.clone()))
            }
        })
    }
}

/// Dyadic block `[2^⌊log n⌋, 2^(⌊log n⌋+1) - 1]` of `n ≥ 1`.
fn dyadic_block(n: u64) -> (u64, u64) {
    let m = 1u64 << n.ilog2();
    (m, 2 * m - 1)
}

/// For a nondecreasing expression, the `x`-interval (possibly empty, then
/// `(1, 0)`) on which `e(x)` could equal `n`, found by doubling and binary
/// search.
fn invert_nondecreasing(e: &IntExpr, n: u64, name: &str) -> Result<(u64, u64), PredicateError> {
    let err = |e: ExprError| PredicateError::BadDefinition(name.to_string(), e.to_string());
    let n = n as u128;
    // Find hi with e(hi) > n.
    let mut hi = 1u64;
    loop {
        if e.eval(hi as u128).map_err(err)? > n {
            break;
        }
        match hi.checked_mul(2) {
            Some(next) if next <= ENUM_SCAN_CAP * 4 => hi = next,
            _ => {
                return Err(PredicateError::EnumerationTooLarge {
                    name: name.to_string(),
                    value: n as u64,
                })
            }
        }
    }
    // First x with e(x) > n.
    let mut lo = 0u64;
    let mut above = hi;
    while lo < above {
        let mid = lo + (above - lo) / 2;
        if e.eval(mid as u128).map_err(err)? > n {
            above = mid;
        } else {
            lo = mid + 1;
        }
    }
    let upper = match above.checked_sub(1) {
        Some(u) => u,
        None => return Ok((1, 0)), // e(0) > n already
    };
    // First x with e(x) >= n.
    let mut lo2 = 0u64;
    let mut at = above;
    while lo2 < at {
        let mid = lo2 + (at - lo2) / 2;
        if e.eval(mid as u128).map_err(err)? >= n {
            at = mid;
        } else {
            lo2 = mid + 1;
        }
    }
    if at > upper {
        return Ok((1, 0));
    }
    if upper - at > ENUM_SCAN_CAP {
        return Err(PredicateError::EnumerationTooLarge { name: name.to_string(), value: n as u64 });
    }
    Ok((at, upper))
}

/// Report of a finite-degree verification run.
#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub name: String,
    pub upto: u64,
    pub max_degree: usize,
    pub max_degree_at: u64,
}

/// Cross-checks `tuples_containing` against a brute-force window scan of
/// membership for every value up to `upto`, and reports the maximum degree.
pub fn verify_finite_degree(p: &PredicateDef, upto: u64) -> Result<FdReport, PredicateError> {
    if !p.finite_degree() {
        return Err(PredicateError::NotFiniteDegree(p.name().to_string()));
    }
    let check_one = |n: u64| -> Result<usize, PredicateError> {
        let enumerated: BTreeSet<Vec<u64>> = p.tuples_containing(n)?.into_iter().collect();
        let w = p.degree_window(n)?;
        let brute = brute_tuples_containing(p, n, w)?;
        if enumerated != brute {
            let missing = enumerated.difference(&brute).next().cloned();
            let extra = brute.difference(&enumerated).next().cloned();
            return Err(PredicateError::EnumerationMismatch {
                name: p.name().to_string(),
                value: n,
                missing,
                extra,
            });
        }
        Ok(enumerated.len())
    };

    let degrees = crate::par::try_map_range(upto + 1, |n| check_one(n))?;
    let (max_degree_at, max_degree) = degrees
        .iter()
        .enumerate()
        .max_by_key(|(i, d)| (**d, std::cmp::Reverse(*i)))
        .map(|(i, d)| (i as u64, *d))
        .unwrap_or((0, 0));
    Ok(FdReport { name: p.name().to_string(), upto, max_degree, max_degree_at })
}

/// All tuples containing `n` with every coordinate in `[0, window]`, found
/// by direct membership tests.
fn brute_tuples_containing(
    p: &PredicateDef,
    n: u64,
    window: u64,
) -> Result<BTreeSet<Vec<u64>>, PredicateError> {
    let k = p.arity();
    let others = (k - 1) as u32;
    if (window + 1).checked_pow(others).map_or(true, |c| c > ENUM_SCAN_CAP) {
        return Err(PredicateError::EnumerationTooLarge { name: p.name().to_string(), value: n });
    }
    let mut out = BTreeSet::new();
    for slot in 0..k {
        let mut tuple = vec![0u64; k];
        tuple[slot] = n;
        loop {
            if p.contains(&tuple, None)? {
                out.insert(tuple.clone());
            }
            let mut done = true;
            for i in (0..k).rev() {
                if i == slot {
                    continue;
                }
                if tuple[i] < window {
                    tuple[i] += 1;
                    done = false;
                    break;
                }
                tuple[i] = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok(out)
}

/// A named collection of finite-degree predicates.
#[derive(Debug, Clone, Default)]
pub struct PredicateFamily {
    defs: Vec<PredicateDef>,
}

impl PredicateFamily {
    pub fn new(defs: Vec<PredicateDef>) -> Result<Self, PredicateError> {
        for d in &defs {
            if !d.finite_degree() {
                return Err(PredicateError::NotFiniteDegree(d.name().to_string()));
            }
        }
        Ok(PredicateFamily { defs })
    }

    pub fn empty() -> Self {
        PredicateFamily { defs: Vec::new() }
    }

    pub fn defs(&self) -> &[PredicateDef] {
        &self.defs
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDef> {
        self.defs.iter().find(|d| d.name() == name)
    }
}

/// Name-keyed predicate registry backing formula evaluation.
#[derive(Debug, Clone, Default)]
pub struct PredicateRegistry {
    defs: std::collections::BTreeMap<String, PredicateDef>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, def: PredicateDef) -> Result<(), PredicateError> {
        if self.defs.contains_key(def.name()) {
            return Err(PredicateError::DuplicateName(def.name().to_string()));
        }
        self.defs.insert(def.name().to_string(), def);
        Ok(())
    }

    /// Inserts or replaces.
    pub fn insert(&mut self, def: PredicateDef) {
        self.defs.insert(def.name().to_string(), def);
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDef> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    pub fn defs(&self) -> impl Iterator<Item = &PredicateDef> {
        self.defs.values()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn merged(&self, other: &PredicateRegistry) -> PredicateRegistry {
        let mut out = self.clone();
        for def in other.defs.values() {
            out.insert(def.clone());
        }
        out
    }
}

// --- Registry file format -------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RegistryFile {
    predicates: Vec<PredicateSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredicateSpec {
    name: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    arity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finite_degree: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples: Option<Vec<Vec<u64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuples_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<Box<PredicateSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zones: Option<Vec<u8>>,
}

fn def_from_spec(spec: &PredicateSpec) -> Result<PredicateDef, PredicateError> {
    let bad = |m: &str| PredicateError::BadDefinition(spec.name.clone(), m.to_string());
    let (kind, default_fd) = match spec.kind.as_str() {
        "builtin" => {
            let tag = spec.tag.as_deref().ok_or_else(|| bad("builtin needs a tag"))?;
            let b = Builtin::from_tag(tag).ok_or_else(|| bad("unknown builtin tag"))?;
            (PredicateKind::Builtin(b), b.finite_degree())
        }
        "table" => {
            if let Some(tuples) = &spec.tuples {
                (PredicateKind::Tuples(tuples.clone()), true)
            } else if let Some(rule) = &spec.tuples_rule {
                let exprs = rule
                    .split(',')
                    .map(IntExpr::parse)
                    .collect::<Result<Vec<_>, _>>()?;
                (PredicateKind::Rule(exprs), false)
            } else {
                return Err(bad("table needs either tuples or tuples_rule"));
            }
        }
        "function_graph" => {
            let e = spec.expr.as_deref().ok_or_else(|| bad("function_graph needs expr"))?;
            (PredicateKind::FunctionGraph(IntExpr::parse(e)?), false)
        }
        "and_msb" => (PredicateKind::AndMsb, true),
        "bit_shifted" => {
            let e = spec.expr.as_deref().ok_or_else(|| bad("bit_shifted needs expr"))?;
            (PredicateKind::BitShifted(IntExpr::parse(e)?), true)
        }
        "wrapped" => {
            let base = spec.base.as_deref().ok_or_else(|| bad("wrapped needs base"))?;
            let zones = spec.zones.clone().ok_or_else(|| bad("wrapped needs zones"))?;
            let base = def_from_spec(base)?;
            (PredicateKind::Wrapped { base: Box::new(base), zones }, true)
        }
        other => return Err(bad(&format!("unknown kind {other:?}"))),
    };
    let fd = spec.finite_degree.unwrap_or(default_fd);
    let def = PredicateDef::new(spec.name.clone(), kind, fd)?;
    if let Some(arity) = spec.arity {
        if arity != def.arity() {
            return Err(PredicateError::BadDefinition(
                spec.name.clone(),
                format!("declared arity {arity} does not match kind arity {}", def.arity()),
            ));
        }
    }
    Ok(def)
}

fn spec_from_def(def: &PredicateDef) -> PredicateSpec {
    let mut spec = PredicateSpec {
        name: def.name().to_string(),
        kind: String::new(),
        arity: Some(def.arity()),
        finite_degree: Some(def.finite_degree()),
        tag: None,
        expr: None,
        tuples: None,
        tuples_rule: None,
        base: None,
        zones: None,
    };
    match def.kind() {
        PredicateKind::Builtin(b) => {
            spec.kind = "builtin".into();
            spec.tag = Some(b.tag().to_string());
        }
        PredicateKind::Tuples(tuples) => {
            spec.kind = "table".into();
            spec.tuples = Some(tuples.clone());
        }
        PredicateKind::Rule(exprs) => {
            spec.kind = "table".into();
            spec.tuples_rule =
                Some(exprs.iter().map(|e| e.src().to_string()).collect::<Vec<_>>().join(","));
        }
        PredicateKind::FunctionGraph(e) => {
            spec.kind = "function_graph".into();
            spec.expr = Some(e.src().to_string());
        }
        PredicateKind::AndMsb => spec.kind = "and_msb".into(),
        PredicateKind::Wrapped { base, zones } => {
            spec.kind = "wrapped".into();
            spec.base = Some(Box::new(spec_from_def(base)));
            spec.zones = Some(zones.clone());
        }
        PredicateKind::BitShifted(e) => {
            spec.kind = "bit_shifted".into();
            spec.expr = Some(e.src().to_string());
        }
        PredicateKind::CountGraph(_) => {
            // Decided semantically; not representable in the file format.
            spec.kind = "count_graph".into();
        }
    }
    spec
}

impl PredicateRegistry {
    pub fn from_json(text: &str) -> Result<Self, PredicateError> {
        let file: RegistryFile = serde_json::from_str(text)
            .map_err(|e| PredicateError::BadDefinition("<registry>".into(), e.to_string()))?;
        let mut reg = PredicateRegistry::new();
        for spec in &file.predicates {
            reg.register(def_from_spec(spec)?)?;
        }
        Ok(reg)
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile { predicates: self.defs.values().map(spec_from_def).collect() };
        serde_json::to_string_pretty(&file).expect("registry serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb0_membership() {
        let msb0 = PredicateDef::builtin("MSB0", Builtin::Msb0);
        assert!(msb0.contains(&[6, 2], None).unwrap());
        assert!(msb0.contains(&[8, 0], None).unwrap());
        assert!(!msb0.contains(&[6, 3], None).unwrap());
        assert!(!msb0.contains(&[0, 0], None).unwrap());
    }

    #[test]
    fn universe_clipping() {
        let plus = PredicateDef::builtin("PLUS", Builtin::Plus);
        assert!(plus.contains(&[2, 3, 5], None).unwrap());
        assert!(!plus.contains(&[2, 3, 5], Some(4)).unwrap());
        assert!(plus.contains(&[2, 3, 5], Some(6)).unwrap());
    }

    #[test]
    fn arity_checked() {
        let plus = PredicateDef::builtin("PLUS", Builtin::Plus);
        assert!(matches!(
            plus.contains(&[1, 2], None),
            Err(PredicateError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn succ_enumeration() {
        let succ = PredicateDef::succ();
        assert_eq!(succ.tuples_containing(5).unwrap(), vec![vec![4, 5], vec![5, 6]]);
        assert_eq!(succ.tuples_containing(0).unwrap(), vec![vec![0, 1]]);
    }

    #[test]
    fn pow2_enumeration() {
        let pow2 = PredicateDef::builtin("POW2", Builtin::Pow2);
        assert_eq!(pow2.tuples_containing(8).unwrap(), vec![vec![8]]);
        assert!(pow2.tuples_containing(6).unwrap().is_empty());
    }

    #[test]
    fn double_enumeration() {
        let double = PredicateDef::double();
        assert_eq!(double.tuples_containing(6).unwrap(), vec![vec![3, 6], vec![6, 12]]);
    }

    #[test]
    fn msb0_is_not_finite_degree() {
        let msb0 = PredicateDef::builtin("MSB0", Builtin::Msb0);
        assert!(matches!(
            msb0.tuples_containing(4),
            Err(PredicateError::NotFiniteDegree(_))
        ));
        assert!(matches!(verify_finite_degree(&msb0, 10), Err(PredicateError::NotFiniteDegree(_))));
        assert!(PredicateDef::new("M", PredicateKind::Builtin(Builtin::Msb0), true).is_err());
    }

    #[test]
    fn verify_degrees() {
        let succ = PredicateDef::succ();
        let report = verify_finite_degree(&succ, 100).unwrap();
        assert_eq!(report.max_degree, 2);
        let pow2 = PredicateDef::builtin("POW2", Builtin::Pow2);
        assert_eq!(verify_finite_degree(&pow2, 100).unwrap().max_degree, 1);
    }

    #[test]
    fn registry_round_trip() {
        let json = r#"{"predicates":[
            {"name":"succ","kind":"table","arity":2,"finite_degree":true,"tuples_rule":"x,x+1"},
            {"name":"double","kind":"function_graph","expr":"2*x","finite_degree":true},
            {"name":"MSB0","kind":"builtin","tag":"msb0"},
            {"name":"T","kind":"table","tuples":[[0,1],[2,3]]}
        ]}"#;
        let reg = PredicateRegistry::from_json(json).unwrap();
        assert!(reg.get("succ").unwrap().finite_degree());
        assert_eq!(reg.get("double").unwrap().arity(), 2);
        assert!(!reg.get("MSB0").unwrap().finite_degree());
        assert!(reg.get("T").unwrap().contains(&[2, 3], None).unwrap());
        let again = PredicateRegistry::from_json(&reg.to_json()).unwrap();
        assert_eq!(
            again.names().collect::<Vec<_>>(),
            vec!["MSB0", "T", "double", "succ"]
        );
    }

    #[test]
    fn family_requires_finite_degree() {
        assert!(PredicateFamily::new(vec![PredicateDef::succ()]).is_ok());
        assert!(PredicateFamily::new(vec![PredicateDef::builtin("MSB0", Builtin::Msb0)]).is_err());
    }
}
