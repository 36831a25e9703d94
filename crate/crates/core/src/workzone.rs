//! Rewrites formulas over arbitrary unvaried predicates into formulas over
//! order, `MSB0` and finite-degree predicates only.
//!
//! The universe is cut into four contiguous zones sized by the closest
//! power of two at least the universe length; the second zone (the work
//! zone) is where all quantification happens. A work-zone position is one
//! with exactly one strictly greater power of two below the universe
//! length, and each zone's positions are images of work-zone positions
//! under translations that rewrite the leading bits. Numerical predicates
//! are replaced by wrapped variants that translate their arguments first
//! and reject argument tuples with distinct leading bits, which makes them
//! finite-degree. Universes of size less than four are handled by an
//! explicit enumeration disjunct.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::evaluator::{holds_on, EvalEnv, EvalError};
use crate::formula::{Formula, OrderOp, Var, VarSupply};
use crate::predicates::{Builtin, PredicateDef, PredicateError, PredicateKind, PredicateRegistry};
use crate::words::Word;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("universe length {0} is below the minimum of 4")]
    UniverseTooSmall(u64),
    #[error("formula must be closed, free variables: {0:?}")]
    NotClosed(Vec<String>),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub const WORK_PRED: &str = "POW2";
pub const MSB_PRED: &str = "MSB0";

/// The four contiguous zones of a universe of size `l >= 4`, as half-open
/// ranges. Zones one and two have exact power-of-two size; three and four
/// may be truncated or empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneLayout {
    pub universe: u64,
    /// Exponent of the closest power of two at least the universe size.
    pub exp: u32,
    pub zones: [(u64, u64); 4],
}

/// Computes the zone layout for a universe of size `l >= 4`.
pub fn zone_layout(l: u64) -> Result<ZoneLayout, TransformError> {
    if l < 4 {
        return Err(TransformError::UniverseTooSmall(l));
    }
    let exp = 64 - (l - 1).leading_zeros();
    let q = 1u64 << (exp - 2);
    let clip = |x: u64| x.min(l);
    let zones = [(0, q), (q, 2 * q), (2 * q, clip(3 * q)), (clip(3 * q), l)];
    Ok(ZoneLayout { universe: l, exp, zones })
}

impl ZoneLayout {
    /// Zone index (1-4) of a position.
    pub fn zone_of(&self, pos: u64) -> Option<u8> {
        self.zones
            .iter()
            .position(|&(lo, hi)| lo <= pos && pos < hi)
            .map(|i| (i + 1) as u8)
    }

    /// The work zone.
    pub fn work_zone(&self) -> (u64, u64) {
        self.zones[1]
    }

    /// Arithmetic translation of a work-zone position to zone `i`, if it
    /// lands inside the universe.
    pub fn translate(&self, x: u64, zone: u8) -> Option<u64> {
        let (lo, hi) = self.work_zone();
        if !(lo <= x && x < hi) {
            return None;
        }
        let m = 1u64 << (self.exp - 2);
        let y = match zone {
            1 => x - m,
            2 => x,
            3 => x + m,
            4 => x + 2 * m,
            _ => return None,
        };
        (y < self.universe).then_some(y)
    }
}

/// The universe-generic zone formulas: `work` has one free variable, the
/// translations have two.
#[derive(Debug, Clone)]
pub struct ZoneFormulas {
    pub work: Formula,
    pub trans: [Formula; 4],
}

/// `work(x)`: there is exactly one power of two strictly above `x` in the
/// universe.
fn work_formula(x: &Var, supply: &mut VarSupply) -> Formula {
    let p = supply.fresh("p");
    let q = supply.fresh("q");
    Formula::exists(
        p.clone(),
        Formula::And(vec![
            Formula::pred(WORK_PRED, vec![p.clone()]),
            Formula::Order(OrderOp::Lt, x.clone(), p.clone()),
            Formula::forall(
                q.clone(),
                Formula::implies(
                    Formula::And(vec![
                        Formula::pred(WORK_PRED, vec![q.clone()]),
                        Formula::Order(OrderOp::Lt, x.clone(), q.clone()),
                    ]),
                    Formula::Order(OrderOp::Eq, q, p),
                ),
            ),
        ]),
    )
}

/// The translation relation between a work-zone `x` and its zone-`i` image
/// `y`, without the work-zone guard (callers conjoin it as needed):
/// zone 1 drops the leading bit, zone 2 is the identity, zone 3 replaces it
/// by the next power (shared `MSB0` image above `x`), zone 4 adds it back
/// on top (`MSB0` sends `y` to `x`).
fn translation_formula(zone: u8, x: &Var, y: &Var, supply: &mut VarSupply) -> Formula {
    match zone {
        1 => Formula::pred(MSB_PRED, vec![x.clone(), y.clone()]),
        2 => Formula::Order(OrderOp::Eq, x.clone(), y.clone()),
        3 => {
            let z = supply.fresh("z");
            Formula::And(vec![
                Formula::Order(OrderOp::Lt, x.clone(), y.clone()),
                Formula::exists(
                    z.clone(),
                    Formula::And(vec![
                        Formula::pred(MSB_PRED, vec![x.clone(), z.clone()]),
                        Formula::pred(MSB_PRED, vec![y.clone(), z]),
                    ]),
                ),
            ])
        }
        4 => Formula::pred(MSB_PRED, vec![y.clone(), x.clone()]),
        _ => unreachable!("zones are 1-4"),
    }
}

/// Builds `work` (free variable `x`) and the four guarded translation
/// formulas (free variables `x`, `y`).
pub fn build_zone_formulas() -> ZoneFormulas {
    let mut supply = VarSupply::new(["x".to_string(), "y".to_string()]);
    let x = Var::new("x");
    let y = Var::new("y");
    let work = work_formula(&x, &mut supply);
    let trans = [1u8, 2, 3, 4].map(|i| {
        Formula::And(vec![
            work_formula(&x, &mut supply),
            translation_formula(i, &x, &y, &mut supply),
        ])
    });
    ZoneFormulas { work, trans }
}

/// Registry entries the zone formulas depend on.
pub fn zone_support_registry() -> PredicateRegistry {
    let mut reg = PredicateRegistry::new();
    reg.insert(PredicateDef::builtin(WORK_PRED, Builtin::Pow2));
    reg.insert(PredicateDef::builtin(MSB_PRED, Builtin::Msb0));
    reg
}

/// Wraps a predicate for zone-translated arguments: the wrapped predicate
/// holds on a tuple iff all entries share the same leading bit and the
/// base predicate holds on the translated entries. The result is
/// finite-degree regardless of the base.
pub fn wrap_predicate(base: &PredicateDef, zones: &[u8]) -> Result<PredicateDef, PredicateError> {
    let name = wrapped_name(base.name(), zones);
    PredicateDef::new(
        name,
        PredicateKind::Wrapped { base: Box::new(base.clone()), zones: zones.to_vec() },
        true,
    )
}

pub fn wrapped_name(base: &str, zones: &[u8]) -> String {
    let digits: String = zones.iter().map(|z| char::from(b'0' + z)).collect();
    format!("{base}_w{digits}")
}

/// Result of the rewriting: the output formula (small-universe disjunct
/// included), the registry to evaluate it (wrapped predicates plus the
/// zone support and the original entries), and the small-universe disjunct
/// itself.
#[derive(Debug, Clone)]
pub struct TransformResult {
    pub formula: Formula,
    pub registry: PredicateRegistry,
    pub smallcase: Formula,
    pub wrapped_names: Vec<String>,
}

/// Rewrites a closed formula over unvaried predicates into one over order,
/// `MSB0`, powers of two, and wrapped finite-degree predicates, equivalent
/// on every word. Universes of size at least four go through the zone
/// construction; smaller ones are matched by the explicit enumeration in
/// `smallcase`.
pub fn workzone_transform(f: &Formula, env: &EvalEnv) -> Result<TransformResult, TransformError> {
    let free = f.free_variables();
    if !free.is_empty() {
        return Err(TransformError::NotClosed(free.into_iter().map(|v| v.0).collect()));
    }
    for (name, arity) in f.predicate_uses() {
        match env.registry.get(&name) {
            None => return Err(TransformError::UnknownPredicate(name)),
            Some(def) if def.arity() != arity => {
                return Err(PredicateError::ArityMismatch {
                    name,
                    expected: def.arity(),
                    got: arity,
                }
                .into())
            }
            Some(_) => {}
        }
    }

    let mut supply = VarSupply::new(f.all_variable_names());
    let mut wrapped: BTreeMap<String, PredicateDef> = BTreeMap::new();
    let mut zones: Vec<(Var, u8)> = Vec::new();
    let body = rewrite(f, env, &mut zones, &mut wrapped, &mut supply)?;

    let gate = min_length_four(&mut supply);
    let smallcase = small_universe_disjunct(f, env, &mut supply)?;
    let formula =
        Formula::or(vec![Formula::and(vec![gate, body]), smallcase.clone()]);

    let mut registry = env.registry.merged(&zone_support_registry());
    let mut wrapped_names = Vec::new();
    for (name, def) in wrapped {
        wrapped_names.push(name);
        registry.insert(def);
    }
    Ok(TransformResult { formula, registry, smallcase, wrapped_names })
}

fn rewrite(
    f: &Formula,
    env: &EvalEnv,
    zones: &mut Vec<(Var, u8)>,
    wrapped: &mut BTreeMap<String, PredicateDef>,
    supply: &mut VarSupply,
) -> Result<Formula, TransformError> {
    let zone_of = |zones: &[(Var, u8)], v: &Var| -> u8 {
        zones
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, z)| *z)
            .expect("closed input binds every variable")
    };
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Letter(l, v) => {
            let zone = zone_of(zones, v);
            if zone == 2 {
                f.clone()
            } else {
                let t = supply.fresh("t");
                Formula::exists(
                    t.clone(),
                    Formula::And(vec![
                        translation_formula(zone, v, &t, supply),
                        Formula::Letter(*l, t),
                    ]),
                )
            }
        }
        Formula::Order(op, a, b) => {
            let (za, zb) = (zone_of(zones, a), zone_of(zones, b));
            if za == zb {
                // Translations within one zone preserve order and equality.
                f.clone()
            } else {
                // Distinct zones occupy disjoint ordered blocks.
                let holds = match op {
                    OrderOp::Eq => false,
                    OrderOp::Lt | OrderOp::Le => za < zb,
                };
                if holds {
                    Formula::True
                } else {
                    Formula::False
                }
            }
        }
        Formula::Pred(name, args) => {
            let zs: Vec<u8> = args.iter().map(|a| zone_of(zones, a)).collect();
            let base = env
                .registry
                .get(name)
                .ok_or_else(|| TransformError::UnknownPredicate(name.clone()))?;
            let def = wrap_predicate(base, &zs)?;
            let wname = def.name().to_string();
            wrapped.entry(wname.clone()).or_insert(def);
            Formula::Pred(wname, args.clone())
        }
        Formula::Not(g) => Formula::not(rewrite(g, env, zones, wrapped, supply)?),
        Formula::And(cs) => Formula::And(
            cs.iter().map(|c| rewrite(c, env, zones, wrapped, supply)).collect::<Result<_, _>>()?,
        ),
        Formula::Or(cs) => Formula::Or(
            cs.iter().map(|c| rewrite(c, env, zones, wrapped, supply)).collect::<Result<_, _>>()?,
        ),
        Formula::Implies(l, r) => Formula::implies(
            rewrite(l, env, zones, wrapped, supply)?,
            rewrite(r, env, zones, wrapped, supply)?,
        ),
        Formula::Exists(v, body) => {
            let mut branches = Vec::with_capacity(4);
            for zone in 1..=4u8 {
                zones.push((v.clone(), zone));
                let inner = rewrite(body, env, zones, wrapped, supply);
                zones.pop();
                let t = supply.fresh("t");
                let guard =
                    Formula::exists(t.clone(), translation_formula(zone, v, &t, supply));
                branches.push(Formula::And(vec![guard, inner?]));
            }
            Formula::exists(
                v.clone(),
                Formula::And(vec![work_formula(v, supply), Formula::Or(branches)]),
            )
        }
        Formula::Forall(v, body) => {
            let mut branches = Vec::with_capacity(4);
            for zone in 1..=4u8 {
                zones.push((v.clone(), zone));
                let inner = rewrite(body, env, zones, wrapped, supply);
                zones.pop();
                let t = supply.fresh("t");
                let guard =
                    Formula::exists(t.clone(), translation_formula(zone, v, &t, supply));
                branches.push(Formula::implies(guard, inner?));
            }
            Formula::forall(
                v.clone(),
                Formula::implies(work_formula(v, supply), Formula::And(branches)),
            )
        }
    })
}

/// `FO[<=, POW2]` gate true exactly on universes of size at least four:
/// some position lies strictly above two distinct powers of two.
fn min_length_four(supply: &mut VarSupply) -> Formula {
    let p = supply.fresh("g");
    let q = supply.fresh("g");
    let y = supply.fresh("g");
    Formula::exists(
        p.clone(),
        Formula::And(vec![
            Formula::pred(WORK_PRED, vec![p.clone()]),
            Formula::exists(
                q.clone(),
                Formula::And(vec![
                    Formula::pred(WORK_PRED, vec![q.clone()]),
                    Formula::Order(OrderOp::Lt, p.clone(), q.clone()),
                    Formula::exists(
                        y.clone(),
                        Formula::Order(OrderOp::Lt, q.clone(), y.clone()),
                    ),
                ]),
            ),
        ]),
    )
}

/// Disjunct enumerating, for each length below four, the exact words the
/// input formula accepts.
fn small_universe_disjunct(
    f: &Formula,
    env: &EvalEnv,
    supply: &mut VarSupply,
) -> Result<Formula, TransformError> {
    let mut cases = Vec::new();
    for len in 0..4usize {
        let count = env.alphabet.count_words(len).expect("tiny word space");
        for i in 0..count {
            let w = env.alphabet.word_at(len, i);
            if holds_on(f, &w, env)? {
                cases.push(exact_word_formula(&w, supply));
            }
        }
    }
    Ok(Formula::or(cases))
}

/// Matches exactly one word: the positions exist in order with the right
/// letters and no others.
fn exact_word_formula(w: &Word, supply: &mut VarSupply) -> Formula {
    if w.is_empty() {
        return Formula::forall(supply.fresh("s"), Formula::False);
    }
    let vars: Vec<Var> = (0..w.len()).map(|_| supply.fresh("s")).collect();
    let closure_var = supply.fresh("s");
    let mut parts = Vec::new();
    for pair in vars.windows(2) {
        parts.push(Formula::Order(OrderOp::Lt, pair[0].clone(), pair[1].clone()));
    }
    for (i, v) in vars.iter().enumerate() {
        parts.push(Formula::Letter(w.letter(i as u64), v.clone()));
    }
    parts.push(Formula::forall(
        closure_var.clone(),
        Formula::or(
            vars.iter()
                .map(|v| Formula::Order(OrderOp::Eq, closure_var.clone(), v.clone()))
                .collect(),
        ),
    ));
    let mut out = Formula::and(parts);
    for v in vars.into_iter().rev() {
        out = Formula::exists(v, out);
    }
    out
}

/// Syntactic check that every quantifier over one of the given variables
/// is immediately guarded by the work-zone formula, as the rewriting
/// promises for the variables of the source formula.
pub fn workzone_guards_ok(f: &Formula, original_vars: &std::collections::BTreeSet<Var>) -> bool {
    fn is_work_guard(f: &Formula, x: &Var) -> bool {
        // exists p. (POW2(p) & x < p & forall q. ((POW2(q) & x < q) -> q = p))
        let Formula::Exists(p, body) = f else { return false };
        let Formula::And(parts) = body.as_ref() else { return false };
        if parts.len() != 3 {
            return false;
        }
        matches!(&parts[0], Formula::Pred(n, args) if n == WORK_PRED && args == &[p.clone()])
            && matches!(&parts[1], Formula::Order(OrderOp::Lt, a, b) if a == x && b == p)
            && matches!(&parts[2], Formula::Forall(..))
    }
    fn walk(f: &Formula, originals: &std::collections::BTreeSet<Var>) -> bool {
        match f {
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let guarded = if originals.contains(v) {
                    match body.as_ref() {
                        Formula::And(parts) => {
                            parts.first().is_some_and(|g| is_work_guard(g, v))
                        }
                        Formula::Implies(l, _) => is_work_guard(l, v),
                        _ => false,
                    }
                } else {
                    true
                };
                guarded && walk(body, originals)
            }
            Formula::Not(g) => walk(g, originals),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(|c| walk(c, originals)),
            Formula::Implies(l, r) => walk(l, originals) && walk(r, originals),
            _ => true,
        }
    }
    walk(f, original_vars)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{equivalent_up_to, Assignment, SearchBudget};
    use crate::parse::parse_formula;
    use crate::words::Alphabet;

    #[test]
    fn layout_examples() {
        let l = zone_layout(30).unwrap();
        assert_eq!(l.zones, [(0, 8), (8, 16), (16, 24), (24, 30)]);
        let l = zone_layout(16).unwrap();
        assert_eq!(l.zones, [(0, 4), (4, 8), (8, 12), (12, 16)]);
        let l = zone_layout(17).unwrap();
        assert_eq!(l.zones, [(0, 8), (8, 16), (16, 17), (17, 17)]);
        assert!(matches!(zone_layout(3), Err(TransformError::UniverseTooSmall(3))));
    }

    #[test]
    fn arithmetic_translations() {
        let l = zone_layout(30).unwrap();
        assert_eq!(l.translate(13, 3), Some(21));
        assert_eq!(l.translate(13, 1), Some(5));
        assert_eq!(l.translate(13, 2), Some(13));
        assert_eq!(l.translate(13, 4), Some(29));
        assert_eq!(l.translate(14, 4), None); // 30 is outside [0, 30)
        assert_eq!(l.translate(3, 3), None); // not in the work zone
    }

    fn zone_env() -> EvalEnv {
        EvalEnv::new(Alphabet::new(['a', 'b']).unwrap(), zone_support_registry())
    }

    /// Evaluates a zone formula on a padding word of the given length.
    fn formula_holds(f: &Formula, len: u64, binds: &[(&str, u64)]) -> bool {
        let env = zone_env();
        let w = Word::from_symbols(vec!['a'; len as usize]);
        let mut a = Assignment::new();
        for (name, pos) in binds {
            a.bind(Var::new(*name), *pos);
        }
        crate::evaluator::evaluate(f, &w, &a, &env).unwrap()
    }

    #[test]
    fn zone_formulas_match_arithmetic_at_30() {
        let zf = build_zone_formulas();
        assert!(formula_holds(&zf.trans[2], 30, &[("x", 13), ("y", 21)]));
        assert!(formula_holds(&zf.trans[0], 30, &[("x", 13), ("y", 5)]));
        assert!(formula_holds(&zf.trans[1], 30, &[("x", 13), ("y", 13)]));
        assert!(!formula_holds(&zf.trans[2], 30, &[("x", 13), ("y", 22)]));
        // work zone membership
        assert!(formula_holds(&zf.work, 30, &[("x", 13)]));
        assert!(!formula_holds(&zf.work, 30, &[("x", 7)]));
        assert!(!formula_holds(&zf.work, 30, &[("x", 16)]));
    }

    #[test]
    fn wrapped_bit_examples() {
        let bit = PredicateDef::builtin("BITrel", Builtin::Bit);
        let w = wrap_predicate(&bit, &[2, 1]).unwrap();
        assert_eq!(w.name(), "BITrel_w21");
        // Same leading bit: 5 and 6; zone-1 image of 6 is 2; bit 2 of 5 is 1.
        assert!(w.contains(&[5, 6], None).unwrap());
        // 5 and 9 do not share the leading bit.
        assert!(!w.contains(&[5, 9], None).unwrap());
        assert!(w.finite_degree());
    }

    #[test]
    fn wrapped_identity_zones() {
        let leq = PredicateDef::builtin("LEQ", Builtin::Leq);
        let w = wrap_predicate(&leq, &[2, 2]).unwrap();
        assert!(w.contains(&[5, 7], None).unwrap());
        assert!(!w.contains(&[7, 5], None).unwrap());
        // Restricted to same leading bit.
        assert!(!w.contains(&[5, 9], None).unwrap());
    }

    #[test]
    fn transform_trivial_formulas() {
        let env = zone_env();
        let t = workzone_transform(&Formula::True, &env).unwrap();
        // True plus a small-case disjunct accepting every short word.
        for len in 0..6 {
            let w = Word::from_symbols(vec!['a'; len]);
            assert!(holds_on(&t.formula, &w, &EvalEnv::new(env.alphabet.clone(), t.registry.clone())).unwrap());
        }
    }

    #[test]
    fn transform_exists_letter() {
        let env = zone_env();
        let f = parse_formula("exists x. a(x)").unwrap();
        let t = workzone_transform(&f, &env).unwrap();
        let tenv = EvalEnv::new(env.alphabet.clone(), t.registry.clone());
        // The rewritten formula only mentions the allowed vocabulary.
        for (name, _) in t.formula.predicate_uses() {
            assert!(
                name == WORK_PRED || name == MSB_PRED || t.wrapped_names.contains(&name),
                "unexpected predicate {name}"
            );
        }
        let report = equivalent_up_to(
            &f,
            &t.formula,
            &env.alphabet,
            9,
            &tenv,
            &SearchBudget { exhaustive_cap: 1 << 10, samples_per_len: 200, seed: 7 },
        )
        .unwrap();
        assert_eq!(report.counterexample.map(|w| w.to_string()), None);
        // Original variables are quantified only under a work-zone guard.
        let originals = [Var::new("x")].into_iter().collect();
        assert!(workzone_guards_ok(&t.formula, &originals));
    }
}
