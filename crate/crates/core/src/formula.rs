//! First-order formulas over words: letter predicates, order atoms, and named
//! numerical predicate atoms.
//!
//! `And`/`Or` are n-ary so that child deduplication is a set operation.
//! `Implies` is kept as a distinct node so printed formulas preserve their
//! source shape; it is desugared only by [`to_nnf`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A first-order variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrderOp {
    Lt,
    Le,
    Eq,
}

impl OrderOp {
    pub fn apply(self, a: u64, b: u64) -> bool {
        match self {
            OrderOp::Lt => a < b,
            OrderOp::Le => a <= b,
            OrderOp::Eq => a == b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            OrderOp::Lt => "<",
            OrderOp::Le => "<=",
            OrderOp::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn dual(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Exists => "exists",
            Quantifier::Forall => "forall",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    /// `a(x)`: position `x` carries the letter.
    Letter(char, Var),
    /// `x < y`, `x <= y`, `x = y`.
    Order(OrderOp, Var, Var),
    /// Named numerical predicate applied to position variables.
    Pred(String, Vec<Var>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    /// N-ary conjunction; collapses the empty and singleton cases.
    pub fn and(children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::True,
            1 => children.into_iter().next().unwrap(),
            _ => Formula::And(children),
        }
    }

    /// N-ary disjunction; collapses the empty and singleton cases.
    pub fn or(children: Vec<Formula>) -> Formula {
        match children.len() {
            0 => Formula::False,
            1 => children.into_iter().next().unwrap(),
            _ => Formula::Or(children),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn exists(var: impl Into<Var>, body: Formula) -> Formula {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<Var>, body: Formula) -> Formula {
        Formula::Forall(var.into(), Box::new(body))
    }

    pub fn letter(l: char, var: impl Into<Var>) -> Formula {
        Formula::Letter(l, var.into())
    }

    pub fn order(op: OrderOp, a: impl Into<Var>, b: impl Into<Var>) -> Formula {
        Formula::Order(op, a.into(), b.into())
    }

    pub fn pred(name: impl Into<String>, args: Vec<Var>) -> Formula {
        Formula::Pred(name.into(), args)
    }

    pub fn quantify(q: Quantifier, var: Var, body: Formula) -> Formula {
        match q {
            Quantifier::Exists => Formula::Exists(var, Box::new(body)),
            Quantifier::Forall => Formula::Forall(var, Box::new(body)),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Letter(..) | Formula::Order(..) | Formula::Pred(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(|c| c.is_quantifier_free()),
            Formula::Implies(l, r) => l.is_quantifier_free() && r.is_quantifier_free(),
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// Set of variables with a free occurrence.
    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut free = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut free);
        free
    }

    fn collect_free(&self, bound: &mut Vec<Var>, free: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Letter(_, v) => {
                if !bound.contains(v) {
                    free.insert(v.clone());
                }
            }
            Formula::Order(_, a, b) => {
                for v in [a, b] {
                    if !bound.contains(v) {
                        free.insert(v.clone());
                    }
                }
            }
            Formula::Pred(_, args) => {
                for v in args {
                    if !bound.contains(v) {
                        free.insert(v.clone());
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, free),
            Formula::And(cs) | Formula::Or(cs) => {
                for c in cs {
                    c.collect_free(bound, free);
                }
            }
            Formula::Implies(l, r) => {
                l.collect_free(bound, free);
                r.collect_free(bound, free);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                bound.push(v.clone());
                body.collect_free(bound, free);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_variables().is_empty()
    }

    /// All variable names occurring anywhere (free or bound).
    pub fn all_variable_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.0.clone());
        });
        out
    }

    fn visit_vars(&self, f: &mut impl FnMut(&Var)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Letter(_, v) => f(v),
            Formula::Order(_, a, b) => {
                f(a);
                f(b);
            }
            Formula::Pred(_, args) => args.iter().for_each(&mut *f),
            Formula::Not(g) => g.visit_vars(f),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.visit_vars(f)),
            Formula::Implies(l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                f(v);
                body.visit_vars(f);
            }
        }
    }

    /// All letters mentioned by letter atoms.
    pub fn letters(&self) -> BTreeSet<char> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Letter(l, _) = f {
                out.insert(*l);
            }
        });
        out
    }

    /// All predicate names mentioned by predicate atoms, with arities.
    pub fn predicate_uses(&self) -> BTreeSet<(String, usize)> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Pred(name, args) = f {
                out.insert((name.clone(), args.len()));
            }
        });
        out
    }

    /// Number of atoms (letter, order, predicate).
    pub fn atom_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| {
            if matches!(f, Formula::Letter(..) | Formula::Order(..) | Formula::Pred(..)) {
                n += 1;
            }
        });
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(g) => g.visit(f),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.visit(f)),
            Formula::Implies(l, r) => {
                l.visit(f);
                r.visit(f);
            }
            Formula::Exists(_, body) | Formula::Forall(_, body) => body.visit(f),
            _ => {}
        }
    }

    /// Replaces every free occurrence of `var` by `to` (a variable renaming;
    /// capture is the caller's concern).
    pub fn rename_free(&self, var: &Var, to: &Var) -> Formula {
        let r = |v: &Var| if v == var { to.clone() } else { v.clone() };
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Letter(l, v) => Formula::Letter(*l, r(v)),
            Formula::Order(op, a, b) => Formula::Order(*op, r(a), r(b)),
            Formula::Pred(name, args) => Formula::Pred(name.clone(), args.iter().map(r).collect()),
            Formula::Not(g) => Formula::not(g.rename_free(var, to)),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.rename_free(var, to)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.rename_free(var, to)).collect()),
            Formula::Implies(l, rhs) => {
                Formula::implies(l.rename_free(var, to), rhs.rename_free(var, to))
            }
            Formula::Exists(v, body) if v != var => {
                Formula::Exists(v.clone(), Box::new(body.rename_free(var, to)))
            }
            Formula::Forall(v, body) if v != var => {
                Formula::Forall(v.clone(), Box::new(body.rename_free(var, to)))
            }
            Formula::Exists(..) | Formula::Forall(..) => self.clone(),
        }
    }
}

/// Removes boolean constants under connectives. The result is logically
/// equivalent and idempotent under repeated folding. Quantifier bodies are
/// folded but a quantifier over a constant body is kept: `exists x. true`
/// is not equivalent to `true` on the empty word.
pub fn constant_fold(f: &Formula) -> Formula {
    match f {
        Formula::True
        | Formula::False
        | Formula::Letter(..)
        | Formula::Order(..)
        | Formula::Pred(..) => f.clone(),
        Formula::Not(g) => match constant_fold(g) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => Formula::not(g),
        },
        Formula::And(cs) => {
            let mut out = Vec::new();
            for c in cs {
                match constant_fold(c) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    c => out.push(c),
                }
            }
            Formula::and(out)
        }
        Formula::Or(cs) => {
            let mut out = Vec::new();
            for c in cs {
                match constant_fold(c) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    c => out.push(c),
                }
            }
            Formula::or(out)
        }
        Formula::Implies(l, r) => match (constant_fold(l), constant_fold(r)) {
            (Formula::False, _) => Formula::True,
            (_, Formula::True) => Formula::True,
            (Formula::True, r) => r,
            (l, Formula::False) => match l {
                Formula::Not(inner) => *inner,
                l => Formula::not(l),
            },
            (l, r) => Formula::implies(l, r),
        },
        Formula::Exists(v, body) => Formula::Exists(v.clone(), Box::new(constant_fold(body))),
        Formula::Forall(v, body) => Formula::Forall(v.clone(), Box::new(constant_fold(body))),
    }
}

/// Negation normal form: `Implies` desugared, negations pushed to atoms.
pub fn to_nnf(f: &Formula) -> Formula {
    fn nnf(f: &Formula, negate: bool) -> Formula {
        match f {
            Formula::True => {
                if negate {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::False => {
                if negate {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::Letter(..) | Formula::Order(..) | Formula::Pred(..) => {
                if negate {
                    Formula::not(f.clone())
                } else {
                    f.clone()
                }
            }
            Formula::Not(g) => nnf(g, !negate),
            Formula::And(cs) => {
                let children = cs.iter().map(|c| nnf(c, negate)).collect();
                if negate {
                    Formula::or(children)
                } else {
                    Formula::and(children)
                }
            }
            Formula::Or(cs) => {
                let children = cs.iter().map(|c| nnf(c, negate)).collect();
                if negate {
                    Formula::and(children)
                } else {
                    Formula::or(children)
                }
            }
            Formula::Implies(l, r) => {
                // l -> r == !l | r
                if negate {
                    Formula::and(vec![nnf(l, false), nnf(r, true)])
                } else {
                    Formula::or(vec![nnf(l, true), nnf(r, false)])
                }
            }
            Formula::Exists(v, body) => {
                let q = if negate { Quantifier::Forall } else { Quantifier::Exists };
                Formula::quantify(q, v.clone(), nnf(body, negate))
            }
            Formula::Forall(v, body) => {
                let q = if negate { Quantifier::Exists } else { Quantifier::Forall };
                Formula::quantify(q, v.clone(), nnf(body, negate))
            }
        }
    }
    nnf(f, false)
}

/// Canonical form used for deduplication: nested `And`/`Or` of the same kind
/// are flattened, children sorted by the structural order and deduplicated.
pub fn canonical(f: &Formula) -> Formula {
    fn flatten(kind_and: bool, c: Formula, out: &mut Vec<Formula>) {
        match (kind_and, c) {
            (true, Formula::And(cs)) => cs.into_iter().for_each(|c| flatten(true, c, out)),
            (false, Formula::Or(cs)) => cs.into_iter().for_each(|c| flatten(false, c, out)),
            (_, other) => out.push(other),
        }
    }
    match f {
        Formula::And(cs) | Formula::Or(cs) => {
            let is_and = matches!(f, Formula::And(..));
            let mut out = Vec::new();
            for c in cs {
                flatten(is_and, canonical(c), &mut out);
            }
            out.sort();
            out.dedup();
            if is_and {
                Formula::and(out)
            } else {
                Formula::or(out)
            }
        }
        Formula::Not(g) => Formula::not(canonical(g)),
        Formula::Implies(l, r) => Formula::implies(canonical(l), canonical(r)),
        Formula::Exists(v, body) => Formula::Exists(v.clone(), Box::new(canonical(body))),
        Formula::Forall(v, body) => Formula::Forall(v.clone(), Box::new(canonical(body))),
        _ => f.clone(),
    }
}

/// Value of a closed formula on the empty word. Atoms are unreachable there:
/// in a closed formula every atom sits under the quantifiers binding its
/// variables, and quantifiers resolve immediately over the empty universe.
pub fn eval_on_empty_word(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Exists(..) => false,
        Formula::Forall(..) => true,
        Formula::Not(g) => !eval_on_empty_word(g),
        Formula::And(cs) => cs.iter().all(eval_on_empty_word),
        Formula::Or(cs) => cs.iter().any(eval_on_empty_word),
        Formula::Implies(l, r) => !eval_on_empty_word(l) || eval_on_empty_word(r),
        Formula::Letter(..) | Formula::Order(..) | Formula::Pred(..) => {
            unreachable!("atom outside quantifier scope in a closed formula")
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("formula is not closed: free variables {0:?}")]
    OpenFormula(Vec<String>),
}

/// A formula in prenex normal form: a quantifier prefix over a
/// quantifier-free matrix, all prefix variables distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrenexFormula {
    pub prefix: Vec<(Quantifier, Var)>,
    pub matrix: Formula,
}

impl PrenexFormula {
    pub fn quantifier_count(&self) -> usize {
        self.prefix.len()
    }

    /// Rebuilds the plain formula `Q1 x1. ... Qk xk. matrix`.
    pub fn to_formula(&self) -> Formula {
        let mut f = self.matrix.clone();
        for (q, v) in self.prefix.iter().rev() {
            f = Formula::quantify(*q, v.clone(), f);
        }
        f
    }
}

impl fmt::Display for PrenexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// Supplies fresh variable names of the form `v1, v2, ...` skipping a set of
/// reserved names.
pub struct VarSupply {
    used: BTreeSet<String>,
    counter: u64,
}

impl VarSupply {
    pub fn new(reserved: impl IntoIterator<Item = String>) -> Self {
        VarSupply { used: reserved.into_iter().collect(), counter: 0 }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    /// Fresh variable with the given prefix (`prefix1`, `prefix2`, ...).
    pub fn fresh(&mut self, prefix: &str) -> Var {
        loop {
            self.counter += 1;
            let name = format!("{}{}", prefix, self.counter);
            if self.used.insert(name.clone()) {
                return Var(name);
            }
        }
    }
}

/// Converts a closed formula to prenex normal form.
///
/// Bound variables are first renamed apart, then prefixes are pulled out
/// through connectives (flipping under negation and on the left of an
/// implication). If pulling an `exists` to the front would change the value
/// on the empty word, a vacuous quantifier is prepended to restore it; this
/// is the only case where the quantifier count grows beyond renaming.
pub fn to_prenex(f: &Formula) -> Result<PrenexFormula, NormalizeError> {
    let free = f.free_variables();
    if !free.is_empty() {
        return Err(NormalizeError::OpenFormula(
            free.into_iter().map(|v| v.0).collect(),
        ));
    }

    let mut supply = VarSupply::new(f.all_variable_names());
    let mut bound_once = BTreeSet::new();
    let renamed = rename_apart(f, &mut supply, &mut bound_once, &mut Vec::new());

    let mut pn = pull_quantifiers(&renamed);

    if !pn.prefix.is_empty() {
        let want = eval_on_empty_word(f);
        let got = pn.prefix[0].0 == Quantifier::Forall;
        if want != got {
            let q = if want { Quantifier::Forall } else { Quantifier::Exists };
            pn.prefix.insert(0, (q, supply.fresh("v")));
        }
    }
    Ok(pn)
}

fn rename_apart(
    f: &Formula,
    supply: &mut VarSupply,
    bound_once: &mut BTreeSet<String>,
    scope: &mut Vec<(Var, Var)>,
) -> Formula {
    let lookup = |scope: &[(Var, Var)], v: &Var| -> Var {
        scope
            .iter()
            .rev()
            .find(|(from, _)| from == v)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| v.clone())
    };
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Letter(l, v) => Formula::Letter(*l, lookup(scope, v)),
        Formula::Order(op, a, b) => Formula::Order(*op, lookup(scope, a), lookup(scope, b)),
        Formula::Pred(name, args) => {
            Formula::Pred(name.clone(), args.iter().map(|v| lookup(scope, v)).collect())
        }
        Formula::Not(g) => Formula::not(rename_apart(g, supply, bound_once, scope)),
        Formula::And(cs) => Formula::And(
            cs.iter().map(|c| rename_apart(c, supply, bound_once, scope)).collect(),
        ),
        Formula::Or(cs) => {
            Formula::Or(cs.iter().map(|c| rename_apart(c, supply, bound_once, scope)).collect())
        }
        Formula::Implies(l, r) => Formula::implies(
            rename_apart(l, supply, bound_once, scope),
            rename_apart(r, supply, bound_once, scope),
        ),
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            // Keep the original name the first time it is bound.
            let fresh = if bound_once.insert(v.0.clone()) {
                v.clone()
            } else {
                supply.fresh(&v.0)
            };
            scope.push((v.clone(), fresh.clone()));
            let body = rename_apart(body, supply, bound_once, scope);
            scope.pop();
            match f {
                Formula::Exists(..) => Formula::Exists(fresh, Box::new(body)),
                _ => Formula::Forall(fresh, Box::new(body)),
            }
        }
    }
}

/// Pulls quantifier prefixes to the front. Assumes bound variables are
/// renamed apart, so prefixes of siblings can be concatenated.
fn pull_quantifiers(f: &Formula) -> PrenexFormula {
    match f {
        Formula::True
        | Formula::False
        | Formula::Letter(..)
        | Formula::Order(..)
        | Formula::Pred(..) => PrenexFormula { prefix: Vec::new(), matrix: f.clone() },
        Formula::Not(g) => {
            let inner = pull_quantifiers(g);
            if inner.prefix.is_empty() {
                return PrenexFormula { prefix: Vec::new(), matrix: Formula::not(inner.matrix) };
            }
            PrenexFormula {
                prefix: inner.prefix.into_iter().map(|(q, v)| (q.dual(), v)).collect(),
                matrix: Formula::not(inner.matrix),
            }
        }
        Formula::And(cs) | Formula::Or(cs) => {
            let mut prefix = Vec::new();
            let mut matrices = Vec::new();
            for c in cs {
                let p = pull_quantifiers(c);
                prefix.extend(p.prefix);
                matrices.push(p.matrix);
            }
            let matrix = match f {
                Formula::And(..) => Formula::and(matrices),
                _ => Formula::or(matrices),
            };
            PrenexFormula { prefix, matrix }
        }
        Formula::Implies(l, r) => {
            let pl = pull_quantifiers(l);
            let pr = pull_quantifiers(r);
            let mut prefix: Vec<(Quantifier, Var)> =
                pl.prefix.into_iter().map(|(q, v)| (q.dual(), v)).collect();
            prefix.extend(pr.prefix);
            PrenexFormula { prefix, matrix: Formula::implies(pl.matrix, pr.matrix) }
        }
        Formula::Exists(v, body) => {
            let mut inner = pull_quantifiers(body);
            inner.prefix.insert(0, (Quantifier::Exists, v.clone()));
            inner
        }
        Formula::Forall(v, body) => {
            let mut inner = pull_quantifiers(body);
            inner.prefix.insert(0, (Quantifier::Forall, v.clone()));
            inner
        }
    }
}

// Printing. Parenthesization is canonical: n-ary connectives and implications
// print inside parentheses, quantifiers extend to the right, negation binds
// tightest. Output re-parses to a structurally identical tree.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Letter(l, v) => write!(f, "{l}({v})"),
            Formula::Order(op, a, b) => write!(f, "{a} {} {b}", op.symbol()),
            Formula::Pred(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::Not(g) => match g.as_ref() {
                // These already print self-delimiting.
                Formula::True
                | Formula::False
                | Formula::Letter(..)
                | Formula::Pred(..)
                | Formula::Not(..)
                | Formula::And(..)
                | Formula::Or(..)
                | Formula::Implies(..) => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Formula::And(cs) => {
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write_operand(f, c)?;
                }
                f.write_str(")")
            }
            Formula::Or(cs) => {
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write_operand(f, c)?;
                }
                f.write_str(")")
            }
            Formula::Implies(l, r) => {
                f.write_str("(")?;
                write_operand(f, l)?;
                f.write_str(" -> ")?;
                // The right-hand side of `->` may be a whole formula.
                match r.as_ref() {
                    Formula::Exists(..) | Formula::Forall(..) => write!(f, "{r}")?,
                    _ => write_operand(f, r)?,
                }
                f.write_str(")")
            }
            Formula::Exists(v, body) => write!(f, "exists {v}. {body}"),
            Formula::Forall(v, body) => write!(f, "forall {v}. {body}"),
        }
    }
}

/// Writes a connective operand, parenthesizing the forms the grammar does not
/// allow bare in operand position.
fn write_operand(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
    match g {
        Formula::And(..) | Formula::Or(..) | Formula::Implies(..) => write!(f, "{g}"),
        Formula::Exists(..) | Formula::Forall(..) => write!(f, "({g})"),
        _ => write!(f, "{g}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a_x() -> Formula {
        Formula::letter('a', "x")
    }

    #[test]
    fn free_variables_cases() {
        assert!(a_x().free_variables().contains(&Var::new("x")));
        let f = Formula::exists("x", Formula::order(OrderOp::Lt, "x", "y"));
        let free = f.free_variables();
        assert_eq!(free.len(), 1);
        assert!(free.contains(&Var::new("y")));
    }

    #[test]
    fn fold_identity_and_absorbing() {
        let f = Formula::And(vec![Formula::True, a_x()]);
        assert_eq!(constant_fold(&f), a_x());
        let g = Formula::Or(vec![Formula::True, Formula::letter('b', "y")]);
        assert_eq!(constant_fold(&g), Formula::True);
        let h = Formula::implies(Formula::False, Formula::False);
        assert_eq!(constant_fold(&h), Formula::True);
    }

    #[test]
    fn fold_is_idempotent_on_samples() {
        let samples = vec![
            Formula::implies(a_x(), Formula::False),
            Formula::And(vec![Formula::Or(vec![Formula::False, a_x()]), Formula::True]),
            Formula::not(Formula::not(Formula::True)),
        ];
        for f in samples {
            let once = constant_fold(&f);
            assert_eq!(constant_fold(&once), once);
        }
    }

    #[test]
    fn prenex_negated_exists() {
        let f = Formula::not(Formula::exists("x", a_x()));
        let p = to_prenex(&f).unwrap();
        assert_eq!(p.prefix, vec![(Quantifier::Forall, Var::new("x"))]);
        assert_eq!(p.matrix, Formula::not(a_x()));
    }

    #[test]
    fn prenex_renames_apart() {
        let f = Formula::And(vec![
            Formula::exists("x", a_x()),
            Formula::exists("x", Formula::letter('b', "x")),
        ]);
        let p = to_prenex(&f).unwrap();
        assert_eq!(p.prefix.len(), 2);
        assert_ne!(p.prefix[0].1, p.prefix[1].1);
    }

    #[test]
    fn prenex_rejects_open() {
        assert!(to_prenex(&a_x()).is_err());
    }

    #[test]
    fn prenex_fixes_empty_word_value() {
        // (exists x. a(x)) | (forall y. b(y)): true on the empty word, but a
        // naive prefix concatenation starts with `exists`.
        let f = Formula::Or(vec![
            Formula::exists("x", a_x()),
            Formula::forall("y", Formula::letter('b', "y")),
        ]);
        assert!(eval_on_empty_word(&f));
        let p = to_prenex(&f).unwrap();
        assert_eq!(p.prefix[0].0, Quantifier::Forall);
        assert!(eval_on_empty_word(&p.to_formula()));
    }

    #[test]
    fn canonical_dedups_and_flattens() {
        let f = Formula::Or(vec![
            Formula::Or(vec![a_x(), Formula::letter('b', "y")]),
            a_x(),
        ]);
        let c = canonical(&f);
        match c {
            Formula::Or(cs) => assert_eq!(cs.len(), 2),
            other => panic!("expected Or, got {other:?}"),
        }
    }

    #[test]
    fn display_forms() {
        assert_eq!(Formula::True.to_string(), "true");
        let f = Formula::And(vec![a_x(), Formula::letter('b', "y")]);
        assert_eq!(f.to_string(), "(a(x) & b(y))");
        let toy = Formula::exists(
            "x",
            Formula::forall(
                "y",
                Formula::And(vec![
                    a_x(),
                    Formula::implies(
                        Formula::order(OrderOp::Lt, "x", "y"),
                        Formula::letter('b', "y"),
                    ),
                ]),
            ),
        );
        assert_eq!(toy.to_string(), "exists x. forall y. (a(x) & (x < y -> b(y)))");
    }
}
