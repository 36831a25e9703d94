//! Executable definability constructions: the `MSB0`-from-a-function-graph
//! chain, the set-encoding witness built from one finite-degree predicate,
//! and the counting-to-summing machinery.

use serde::Serialize;
use thiserror::Error;

use crate::evaluator::{evaluate, Assignment, EvalEnv, EvalError};
use crate::expr::IntExpr;
use crate::formula::{Formula, OrderOp, Var, VarSupply};
use crate::predicates::{
    Builtin, CountGraphDef, PredicateDef, PredicateError, PredicateKind, PredicateRegistry,
};
use crate::words::{Alphabet, Word};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("parameter {0} exceeds the supported budget {1}")]
    OutOfBudget(u64, u64),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

// --- Power-of-two detection and MSB0 from a function graph ----------------

/// Growth function whose graph jumps exactly at powers of two, with the
/// value at zero forced to zero.
pub const GROWTH_EXPR: &str = "min(x,1)*pow(2,floorlog2(x)*floorlog2(x))";

/// The definability chain from the graph predicate `F`: a power-of-two
/// formula (`f` jumps at `x` iff `x` is a power of two) and an `MSB0`
/// formula built from it with addition.
#[derive(Debug, Clone)]
pub struct MsbChain {
    /// Free variable `x`: `x` is a power of two.
    pub power_formula: Formula,
    /// Free variables `x`, `y`: `y` equals `x` minus its leading bit.
    pub msb_formula: Formula,
    pub registry: PredicateRegistry,
}

/// Builds the chain. `F` is the graph of [`GROWTH_EXPR`]; `PLUS` is the
/// addition relation.
pub fn build_msbz_via_f() -> MsbChain {
    let mut registry = PredicateRegistry::new();
    registry.insert(
        PredicateDef::new(
            "F",
            PredicateKind::FunctionGraph(IntExpr::parse(GROWTH_EXPR).expect("fixed expression")),
            true,
        )
        .expect("growth graph is a valid definition"),
    );
    registry.insert(PredicateDef::builtin("PLUS", Builtin::Plus));

    let x = Var::new("x");
    let mut supply = VarSupply::new(["x".into(), "y".into()]);
    let power_formula = power_of_two_formula(&x, &mut supply);

    // y + p = x for p the greatest power of two at most x.
    let y = Var::new("y");
    let p = supply.fresh("p");
    let q = supply.fresh("q");
    let msb_formula = Formula::exists(
        p.clone(),
        Formula::And(vec![
            Formula::pred("PLUS", vec![y, p.clone(), x.clone()]),
            Formula::Order(OrderOp::Le, p.clone(), x.clone()),
            power_of_two_formula(&p, &mut supply),
            Formula::forall(
                q.clone(),
                Formula::implies(
                    Formula::And(vec![
                        Formula::Order(OrderOp::Lt, p.clone(), q.clone()),
                        Formula::Order(OrderOp::Le, q.clone(), x.clone()),
                    ]),
                    Formula::not(power_of_two_formula(&q, &mut supply)),
                ),
            ),
        ]),
    );
    MsbChain { power_formula, msb_formula, registry }
}

/// `x` is a power of two iff `f` jumps at `x`: the `F`-values of `x` and
/// its predecessor differ.
fn power_of_two_formula(x: &Var, supply: &mut VarSupply) -> Formula {
    let p = supply.fresh("w");
    let w = supply.fresh("w");
    let a = supply.fresh("w");
    let b = supply.fresh("w");
    Formula::exists(
        p.clone(),
        Formula::And(vec![
            Formula::Order(OrderOp::Lt, p.clone(), x.clone()),
            Formula::forall(
                w.clone(),
                Formula::implies(
                    Formula::Order(OrderOp::Lt, w.clone(), x.clone()),
                    Formula::Order(OrderOp::Le, w, p.clone()),
                ),
            ),
            Formula::exists(
                a.clone(),
                Formula::And(vec![
                    Formula::pred("F", vec![p.clone(), a.clone()]),
                    Formula::exists(
                        b.clone(),
                        Formula::And(vec![
                            Formula::pred("F", vec![x.clone(), b.clone()]),
                            Formula::not(Formula::Order(OrderOp::Eq, a, b)),
                        ]),
                    ),
                ]),
            ),
        ]),
    )
}

/// Agreement report between the chain formulas and the builtin predicates
/// over a padded universe. Mismatch lists are capped; `complete` is false
/// when a scan stopped early.
#[derive(Debug, Clone, Serialize)]
pub struct ChainAgreement {
    pub universe: u64,
    pub range: (u64, u64),
    pub power_checked: u64,
    pub power_mismatches: Vec<u64>,
    pub msb_pairs_checked: u64,
    pub msb_mismatches: Vec<(u64, u64)>,
    pub complete: bool,
}

impl ChainAgreement {
    pub fn passed(&self) -> bool {
        self.power_mismatches.is_empty() && self.msb_mismatches.is_empty() && self.complete
    }
}

const MISMATCH_CAP: usize = 8;

/// Compares the chain formulas against the `pow2` and `msb0` builtins for
/// arguments in `[lo, hi]`, evaluating over a padding word of the given
/// universe size. Stops after [`MISMATCH_CAP`] mismatches per scan.
pub fn msb_chain_agreement(
    chain: &MsbChain,
    lo: u64,
    hi: u64,
    universe: u64,
) -> Result<ChainAgreement, ConstructionError> {
    let alphabet = Alphabet::new(['z']).expect("fixed alphabet");
    let word = Word::from_symbols(vec!['z'; universe as usize]);
    let env = EvalEnv::new(alphabet, chain.registry.clone());
    let pow2 = PredicateDef::builtin("POW2", Builtin::Pow2);
    let msb0 = PredicateDef::builtin("MSB0", Builtin::Msb0);

    let mut out = ChainAgreement {
        universe,
        range: (lo, hi),
        power_checked: 0,
        power_mismatches: Vec::new(),
        msb_pairs_checked: 0,
        msb_mismatches: Vec::new(),
        complete: true,
    };

    let x = Var::new("x");
    let y = Var::new("y");
    for v in lo..=hi {
        let mut a = Assignment::new();
        a.bind(x.clone(), v);
        let formula = evaluate(&chain.power_formula, &word, &a, &env)?;
        let builtin = pow2.contains(&[v], Some(universe))?;
        out.power_checked += 1;
        if formula != builtin {
            out.power_mismatches.push(v);
            if out.power_mismatches.len() >= MISMATCH_CAP {
                out.complete = false;
                return Ok(out);
            }
        }
    }
    'pairs: for m in lo..=hi {
        for n in 0..=hi {
            let mut a = Assignment::new();
            a.bind(x.clone(), m);
            a.bind(y.clone(), n);
            let formula = evaluate(&chain.msb_formula, &word, &a, &env)?;
            let builtin = msb0.contains(&[m, n], Some(universe))?;
            out.msb_pairs_checked += 1;
            if formula != builtin {
                out.msb_mismatches.push((m, n));
                if out.msb_mismatches.len() >= MISMATCH_CAP {
                    out.complete = false;
                    break 'pairs;
                }
            }
        }
    }
    Ok(out)
}

// --- Set encoding with a single finite-degree predicate -------------------

/// Witness that one finite-degree binary predicate encodes arbitrary
/// subsets: `a[i]` carries a high bit plus bit `i`, `b[mask]` carries the
/// high bit plus the mask, and the predicate holds on `(a[i], b[mask])`
/// exactly when bit `i` is in the mask.
#[derive(Debug, Clone)]
pub struct IndependenceWitness {
    pub n: u32,
    pub a: Vec<u64>,
    /// Indexed by subset mask.
    pub b: Vec<u64>,
    pub predicate: PredicateDef,
}

const WITNESS_BUDGET: u32 = 16;
const CHECK_BUDGET: u32 = 12;

pub fn independence_witness(n: u32) -> Result<IndependenceWitness, ConstructionError> {
    if n == 0 || n > WITNESS_BUDGET {
        return Err(ConstructionError::OutOfBudget(n as u64, WITNESS_BUDGET as u64));
    }
    let high = 1u64 << n;
    let a = (0..n).map(|i| high + (1 << i)).collect();
    let b = (0..high).map(|mask| high + mask).collect();
    let predicate = PredicateDef::new("ANDMSB", PredicateKind::AndMsb, true)?;
    Ok(IndependenceWitness { n, a, b, predicate })
}

/// Exhaustively checks the witness over every subset of `[n]` and index.
pub fn check_independence(n: u32) -> Result<bool, ConstructionError> {
    if n > CHECK_BUDGET {
        return Err(ConstructionError::OutOfBudget(n as u64, CHECK_BUDGET as u64));
    }
    let w = independence_witness(n)?;
    let checks = crate::par::try_map_range(1u64 << n, |mask| -> Result<bool, ConstructionError> {
        for (i, &ai) in w.a.iter().enumerate() {
            let member = w.predicate.contains(&[ai, w.b[mask as usize]], None)?;
            if member != ((mask >> i) & 1 == 1) {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(checks.into_iter().all(|ok| ok))
}

// --- Counting and summing --------------------------------------------------

/// Letters of the binary alphabet used by counting formulas.
pub const ZERO_LETTER: char = 'z';
pub const ONE_LETTER: char = 'o';

/// A formula with one free counting variable: it holds iff the variable's
/// position equals the number of one-letters and stays within the bound.
#[derive(Debug, Clone)]
pub struct CountFormula {
    pub formula: Formula,
    pub count_var: Var,
    pub kmax: u64,
}

impl CountFormula {
    /// The counting bound in oracle form.
    pub fn bound(&self, c: u64) -> u64 {
        c.min(self.kmax)
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new([ZERO_LETTER, ONE_LETTER]).expect("fixed alphabet")
    }
}

const COUNT_BUDGET: u64 = 4;

/// Builds the constant-bounded counting formula: a disjunction over each
/// admissible count of "exactly that many ones" and "the count variable
/// sits at that position".
pub fn count_up_to_const(kmax: u64) -> Result<CountFormula, ConstructionError> {
    if kmax > COUNT_BUDGET {
        return Err(ConstructionError::OutOfBudget(kmax, COUNT_BUDGET));
    }
    let c = Var::new("c");
    let mut supply = VarSupply::new(["c".into()]);
    let mut cases = Vec::new();
    for j in 0..=kmax {
        cases.push(Formula::and(vec![
            exactly_j_ones(j, &mut supply),
            position_equals(&c, j, &mut supply),
        ]));
    }
    Ok(CountFormula { formula: Formula::or(cases), count_var: c, kmax })
}

/// Exactly `j` positions carry the one-letter.
fn exactly_j_ones(j: u64, supply: &mut VarSupply) -> Formula {
    let vars: Vec<Var> = (0..j).map(|_| supply.fresh("n")).collect();
    let closure = supply.fresh("n");
    let mut parts = Vec::new();
    for pair in vars.windows(2) {
        parts.push(Formula::Order(OrderOp::Lt, pair[0].clone(), pair[1].clone()));
    }
    for v in &vars {
        parts.push(Formula::Letter(ONE_LETTER, v.clone()));
    }
    parts.push(Formula::forall(
        closure.clone(),
        Formula::implies(
            Formula::Letter(ONE_LETTER, closure.clone()),
            Formula::or(
                vars.iter()
                    .map(|v| Formula::Order(OrderOp::Eq, closure.clone(), v.clone()))
                    .collect(),
            ),
        ),
    ));
    let mut out = Formula::and(parts);
    for v in vars.into_iter().rev() {
        out = Formula::exists(v, out);
    }
    out
}

/// The position held by `c` has exactly `j` positions below it.
fn position_equals(c: &Var, j: u64, supply: &mut VarSupply) -> Formula {
    let vars: Vec<Var> = (0..j).map(|_| supply.fresh("m")).collect();
    let closure = supply.fresh("m");
    let mut parts = Vec::new();
    for pair in vars.windows(2) {
        parts.push(Formula::Order(OrderOp::Lt, pair[0].clone(), pair[1].clone()));
    }
    for v in &vars {
        parts.push(Formula::Order(OrderOp::Lt, v.clone(), c.clone()));
    }
    parts.push(Formula::forall(
        closure.clone(),
        Formula::implies(
            Formula::Order(OrderOp::Lt, closure.clone(), c.clone()),
            Formula::or(
                vars.iter()
                    .map(|v| Formula::Order(OrderOp::Eq, closure.clone(), v.clone()))
                    .collect(),
            ),
        ),
    ));
    let mut out = Formula::and(parts);
    for v in vars.into_iter().rev() {
        out = Formula::exists(v, out);
    }
    out
}

/// Builds the graph predicate of the counting bound from the counting
/// formula alone: quantifications are relativized below the first argument,
/// letters are forced to ones below the second, and membership picks the
/// maximal consistent value. Decided semantically at query time.
pub fn graph_from_count(count: &CountFormula) -> Result<PredicateDef, ConstructionError> {
    let c = Var::new("gc");
    let cp = Var::new("gv");
    let relativized = relativize_and_force(&count.formula, &count.count_var, &c, &cp);
    let def = PredicateDef::new(
        "F",
        PredicateKind::CountGraph(CountGraphDef::new(relativized, c, cp, PredicateRegistry::new())),
        false,
    )?;
    Ok(def)
}

/// Rewrites the counting formula into its two-argument form: the free
/// counting variable becomes `value_var`, quantifiers range below
/// `limit_var`, and letter atoms become comparisons with `value_var`.
fn relativize_and_force(f: &Formula, count_var: &Var, limit_var: &Var, value_var: &Var) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Letter(l, v) => {
            let v = if v == count_var { value_var.clone() } else { v.clone() };
            let ones = Formula::Order(OrderOp::Lt, v, value_var.clone());
            match *l {
                ONE_LETTER => ones,
                _ => Formula::not(ones),
            }
        }
        Formula::Order(op, a, b) => {
            let ren = |v: &Var| if v == count_var { value_var.clone() } else { v.clone() };
            Formula::Order(*op, ren(a), ren(b))
        }
        Formula::Pred(name, args) => {
            let ren = |v: &Var| if v == count_var { value_var.clone() } else { v.clone() };
            Formula::Pred(name.clone(), args.iter().map(ren).collect())
        }
        Formula::Not(g) => {
            Formula::not(relativize_and_force(g, count_var, limit_var, value_var))
        }
        Formula::And(cs) => Formula::And(
            cs.iter().map(|c| relativize_and_force(c, count_var, limit_var, value_var)).collect(),
        ),
        Formula::Or(cs) => Formula::Or(
            cs.iter().map(|c| relativize_and_force(c, count_var, limit_var, value_var)).collect(),
        ),
        Formula::Implies(l, r) => Formula::implies(
            relativize_and_force(l, count_var, limit_var, value_var),
            relativize_and_force(r, count_var, limit_var, value_var),
        ),
        Formula::Exists(v, body) => Formula::Exists(
            v.clone(),
            Box::new(Formula::And(vec![
                Formula::Order(OrderOp::Lt, v.clone(), limit_var.clone()),
                relativize_and_force(body, count_var, limit_var, value_var),
            ])),
        ),
        Formula::Forall(v, body) => Formula::Forall(
            v.clone(),
            Box::new(Formula::implies(
                Formula::Order(OrderOp::Lt, v.clone(), limit_var.clone()),
                relativize_and_force(body, count_var, limit_var, value_var),
            ))),
    }
}

/// The summing construction extracted from a counting formula.
#[derive(Debug, Clone)]
pub struct SumConstruction {
    /// The counting formula with its letters replaced by interval tests:
    /// free variables `a`, `b` and the original counting variable.
    pub interval_formula: Formula,
    /// Graph predicate of the counting bound.
    pub graph: PredicateDef,
    /// `psi(a, b, c)`: `a = b + bound(c)`.
    pub sum_formula: Formula,
    pub registry: PredicateRegistry,
}

/// Derives the summing formula `a = b + bound(c)` from a counting formula:
/// letters are reinterpreted as membership in `[b, a)`, and the bound's
/// graph predicate ties the count to an addition.
pub fn sum_from_count(count: &CountFormula) -> Result<SumConstruction, ConstructionError> {
    let a = Var::new("a");
    let b = Var::new("b");
    let interval_formula = force_interval_letters(&count.formula, &a, &b);

    let graph = graph_from_count(count)?;
    let mut registry = PredicateRegistry::new();
    registry.insert(graph.clone());
    registry.insert(PredicateDef::builtin("PLUS", Builtin::Plus));

    let cp = Var::new("cp");
    let sum_formula = Formula::exists(
        cp.clone(),
        Formula::And(vec![
            Formula::pred("F", vec![count.count_var.clone(), cp.clone()]),
            Formula::pred("PLUS", vec![b, cp, a]),
        ]),
    );
    Ok(SumConstruction { interval_formula, graph, sum_formula, registry })
}

/// Replaces one-letter atoms by `b <= p < a` and zero-letter atoms by the
/// negation.
fn force_interval_letters(f: &Formula, a: &Var, b: &Var) -> Formula {
    match f {
        Formula::Letter(l, v) => {
            let inside = Formula::And(vec![
                Formula::Order(OrderOp::Le, b.clone(), v.clone()),
                Formula::Order(OrderOp::Lt, v.clone(), a.clone()),
            ]);
            match *l {
                ONE_LETTER => inside,
                _ => Formula::not(inside),
            }
        }
        Formula::Not(g) => Formula::not(force_interval_letters(g, a, b)),
        Formula::And(cs) => {
            Formula::And(cs.iter().map(|c| force_interval_letters(c, a, b)).collect())
        }
        Formula::Or(cs) => {
            Formula::Or(cs.iter().map(|c| force_interval_letters(c, a, b)).collect())
        }
        Formula::Implies(l, r) => {
            Formula::implies(force_interval_letters(l, a, b), force_interval_letters(r, a, b))
        }
        Formula::Exists(v, body) => {
            Formula::Exists(v.clone(), Box::new(force_interval_letters(body, a, b)))
        }
        Formula::Forall(v, body) => {
            Formula::Forall(v.clone(), Box::new(force_interval_letters(body, a, b)))
        }
        _ => f.clone(),
    }
}

/// Shifted bit predicate: `(x, y)` holds iff bit `y - f(x)` of `x` is set;
/// finite-degree for nondecreasing unbounded `f`.
pub fn bit_translate(shift: &str) -> Result<PredicateDef, ConstructionError> {
    let expr = IntExpr::parse(shift).map_err(PredicateError::from)?;
    Ok(PredicateDef::new("BITP", PredicateKind::BitShifted(expr), true)?)
}

/// Checks the recovery identity behind the shifted predicate: plain bit
/// lookup agrees with the shifted predicate probed at `y + f(x)`.
pub fn bit_shift_identity(shift: &str, max: u64) -> Result<bool, ConstructionError> {
    let bitp = bit_translate(shift)?;
    let expr = IntExpr::parse(shift).map_err(PredicateError::from)?;
    let bit = PredicateDef::builtin("BIT", Builtin::Bit);
    for x in 0..=max {
        let fx = expr
            .eval_u64(x)
            .map_err(PredicateError::from)?
            .ok_or(ConstructionError::OutOfBudget(x, max))?;
        for y in 0..=max {
            let direct = bit.contains(&[x, y], None)?;
            let via = match fx.checked_add(y) {
                Some(z) => bitp.contains(&[x, z], None)?,
                None => false,
            };
            if direct != via {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::holds_on;

    #[test]
    fn growth_function_values() {
        let e = IntExpr::parse(GROWTH_EXPR).unwrap();
        assert_eq!(e.eval(0).unwrap(), 0);
        assert_eq!(e.eval(1).unwrap(), 1);
        assert_eq!(e.eval(2).unwrap(), 2);
        assert_eq!(e.eval(3).unwrap(), 2);
        assert_eq!(e.eval(7).unwrap(), 16);
        assert_eq!(e.eval(8).unwrap(), 512);
    }

    #[test]
    fn chain_examples() {
        let chain = build_msbz_via_f();
        let agree = msb_chain_agreement(&chain, 1, 12, 513).unwrap();
        assert!(agree.passed(), "{agree:?}");
    }

    #[test]
    fn chain_power_detection_on_small_values() {
        let chain = build_msbz_via_f();
        let alphabet = Alphabet::new(['z']).unwrap();
        let env = EvalEnv::new(alphabet, chain.registry.clone());
        let word = Word::from_symbols(vec!['z'; 513]);
        let holds = |v: u64| {
            let mut a = Assignment::new();
            a.bind(Var::new("x"), v);
            evaluate(&chain.power_formula, &word, &a, &env).unwrap()
        };
        assert!(holds(8)); // f(7) = 16, f(8) = 512
        assert!(!holds(3)); // f(2) = f(3) = 2
        assert!(holds(1));
        assert!(!holds(0));
    }

    #[test]
    fn witness_examples() {
        let w = independence_witness(3).unwrap();
        assert_eq!(w.a, vec![9, 10, 12]);
        assert_eq!(w.b[0b101], 13);
        assert!(w.predicate.contains(&[9, 13], None).unwrap());
        assert!(!w.predicate.contains(&[10, 13], None).unwrap());
        let w1 = independence_witness(1).unwrap();
        assert_eq!(w1.b[0], 2);
        assert!(!w1.predicate.contains(&[3, 2], None).unwrap());
    }

    #[test]
    fn independence_small() {
        assert!(check_independence(1).unwrap());
        assert!(check_independence(5).unwrap());
        assert!(check_independence(13).is_err());
    }

    #[test]
    fn count_formula_examples() {
        let count = count_up_to_const(2).unwrap();
        let env = EvalEnv::with_alphabet(count.alphabet());
        let holds = |text: &str, c: u64| {
            let w = env.alphabet.word(text).unwrap();
            let mut a = Assignment::new();
            a.bind(count.count_var.clone(), c);
            evaluate(&count.formula, &w, &a, &env).unwrap()
        };
        assert!(holds("ozo", 2));
        assert!(holds("zzz", 0));
        assert!(!holds("ooz", 1));
        assert!(!holds("ooo", 2)); // three ones exceed the bound
        // A count value beyond the universe is an assignment error.
        let w = env.alphabet.word("ooo").unwrap();
        let mut a = Assignment::new();
        a.bind(count.count_var.clone(), 3);
        assert!(matches!(
            evaluate(&count.formula, &w, &a, &env),
            Err(EvalError::PositionOutOfRange { pos: 3, .. })
        ));
    }

    #[test]
    fn count_invariant_brute_force() {
        let count = count_up_to_const(2).unwrap();
        let env = EvalEnv::with_alphabet(count.alphabet());
        for len in 0..=6usize {
            for i in 0..env.alphabet.count_words(len).unwrap() {
                let w = env.alphabet.word_at(len, i);
                let ones = w.symbols().iter().filter(|&&s| s == ONE_LETTER).count() as u64;
                for c in 0..w.len() {
                    let mut a = Assignment::new();
                    a.bind(count.count_var.clone(), c);
                    let got = evaluate(&count.formula, &w, &a, &env).unwrap();
                    let want = c <= count.kmax && c == ones;
                    assert_eq!(got, want, "word {w} c={c}");
                }
            }
        }
    }

    #[test]
    fn graph_examples() {
        let count = count_up_to_const(2).unwrap();
        let f = graph_from_count(&count).unwrap();
        assert!(f.contains(&[0, 0], None).unwrap());
        assert!(f.contains(&[1, 1], None).unwrap());
        assert!(!f.contains(&[1, 0], None).unwrap());
        assert!(f.contains(&[5, 2], None).unwrap());
        for cp in [0u64, 1, 3, 4, 5] {
            assert!(!f.contains(&[5, cp], None).unwrap(), "F(5, {cp}) should fail");
        }
    }

    #[test]
    fn sum_examples() {
        let count = count_up_to_const(2).unwrap();
        let sum = sum_from_count(&count).unwrap();
        let env = EvalEnv::new(count.alphabet(), sum.registry.clone());
        let w = Word::from_symbols(vec![ZERO_LETTER; 8]);
        let holds = |a: u64, b: u64, c: u64| {
            let mut asg = Assignment::new();
            asg.bind(Var::new("a"), a);
            asg.bind(Var::new("b"), b);
            asg.bind(count.count_var.clone(), c);
            evaluate(&sum.sum_formula, &w, &asg, &env).unwrap()
        };
        assert!(holds(5, 3, 7)); // bound(7) = 2
        assert!(!holds(5, 3, 1)); // bound(1) = 1
        assert!(holds(3, 3, 0));
    }

    #[test]
    fn interval_formula_expresses_bounded_difference() {
        let count = count_up_to_const(2).unwrap();
        let sum = sum_from_count(&count).unwrap();
        let env = EvalEnv::with_alphabet(count.alphabet());
        let w = Word::from_symbols(vec![ZERO_LETTER; 7]);
        for a in 0..w.len() {
            for b in 0..=a {
                for c in 0..w.len() {
                    let mut asg = Assignment::new();
                    asg.bind(Var::new("a"), a);
                    asg.bind(Var::new("b"), b);
                    asg.bind(count.count_var.clone(), c);
                    let got = evaluate(&sum.interval_formula, &w, &asg, &env).unwrap();
                    let want = c <= count.kmax && a == b + c;
                    assert_eq!(got, want, "a={a} b={b} c={c}");
                }
            }
        }
    }

    #[test]
    fn bit_shift_examples() {
        let bitp = bit_translate("x").unwrap();
        assert!(bitp.contains(&[5, 5], None).unwrap()); // bit 0 of 5
        assert!(!bitp.contains(&[5, 6], None).unwrap()); // bit 1 of 5
        assert!(bitp.contains(&[5, 7], None).unwrap()); // bit 2 of 5
        assert!(bit_shift_identity("x", 64).unwrap());
    }
}
