//! Brute-force model checking of formulas on words.
//!
//! This is the ground truth the rewriting passes and the protocol are
//! verified against: plain Tarskian semantics with quantifiers ranging over
//! word positions and numerical predicates clipped to the universe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formula::{Formula, Var};
use crate::par;
use crate::predicates::{PredicateError, PredicateRegistry};
use crate::words::{Alphabet, Word};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(String),
    #[error("assigned position {pos} is outside the universe of size {len}")]
    PositionOutOfRange { pos: u64, len: u64 },
    #[error("formula must be closed, free variables: {0:?}")]
    NotClosed(Vec<String>),
    #[error("word-space budget exceeded at length {len} and sampling is disabled")]
    BudgetExceeded { len: usize },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

/// Partial map from variables to positions, used as a scope stack.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    stack: Vec<(Var, u64)>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn bind(&mut self, var: Var, pos: u64) {
        self.stack.push((var, pos));
    }

    pub fn unbind(&mut self) {
        self.stack.pop();
    }

    pub fn get(&self, var: &Var) -> Option<u64> {
        self.stack.iter().rev().find(|(v, _)| v == var).map(|(_, p)| *p)
    }

    pub fn entries(&self) -> &[(Var, u64)] {
        &self.stack
    }
}

/// Evaluation environment: alphabet plus the predicate registry resolving
/// named numerical atoms.
#[derive(Debug, Clone)]
pub struct EvalEnv {
    pub alphabet: Alphabet,
    pub registry: PredicateRegistry,
}

impl EvalEnv {
    pub fn new(alphabet: Alphabet, registry: PredicateRegistry) -> Self {
        EvalEnv { alphabet, registry }
    }

    pub fn with_alphabet(alphabet: Alphabet) -> Self {
        EvalEnv { alphabet, registry: PredicateRegistry::new() }
    }
}

/// Evaluates `f` on `w` under the assignment `a`.
///
/// Free variables of `f` must be assigned, and assigned positions of free
/// variables must lie inside the universe.
pub fn evaluate(f: &Formula, w: &Word, a: &Assignment, env: &EvalEnv) -> Result<bool, EvalError> {
    for var in f.free_variables() {
        match a.get(&var) {
            None => return Err(EvalError::UnboundVariable(var.0)),
            Some(pos) if pos >= w.len() => {
                return Err(EvalError::PositionOutOfRange { pos, len: w.len() })
            }
            Some(_) => {}
        }
    }
    let mut scope = a.clone();
    eval_rec(f, w, &mut scope, env)
}

fn eval_rec(f: &Formula, w: &Word, scope: &mut Assignment, env: &EvalEnv) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Letter(l, v) => {
            let pos = lookup(scope, v)?;
            w.letter(pos) == *l
        }
        Formula::Order(op, x, y) => op.apply(lookup(scope, x)?, lookup(scope, y)?),
        Formula::Pred(name, args) => {
            let def = env
                .registry
                .get(name)
                .ok_or_else(|| EvalError::UnknownPredicate(name.clone()))?;
            let mut tuple = Vec::with_capacity(args.len());
            for a in args {
                tuple.push(lookup(scope, a)?);
            }
            def.contains(&tuple, Some(w.len()))?
        }
        Formula::Not(g) => !eval_rec(g, w, scope, env)?,
        Formula::And(cs) => {
            for c in cs {
                if !eval_rec(c, w, scope, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(cs) => {
            for c in cs {
                if eval_rec(c, w, scope, env)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(l, r) => !eval_rec(l, w, scope, env)? || eval_rec(r, w, scope, env)?,
        Formula::Exists(v, body) => {
            let mut found = false;
            for pos in 0..w.len() {
                scope.bind(v.clone(), pos);
                let r = eval_rec(body, w, scope, env);
                scope.unbind();
                if r? {
                    found = true;
                    break;
                }
            }
            found
        }
        Formula::Forall(v, body) => {
            let mut holds = true;
            for pos in 0..w.len() {
                scope.bind(v.clone(), pos);
                let r = eval_rec(body, w, scope, env);
                scope.unbind();
                if !r? {
                    holds = false;
                    break;
                }
            }
            holds
        }
    })
}

fn lookup(scope: &Assignment, v: &Var) -> Result<u64, EvalError> {
    scope.get(v).ok_or_else(|| EvalError::UnboundVariable(v.0.clone()))
}

/// Evaluates a closed formula on a word.
pub fn holds_on(f: &Formula, w: &Word, env: &EvalEnv) -> Result<bool, EvalError> {
    evaluate(f, w, &Assignment::new(), env)
}

/// Search budget for word-space explorations.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudget {
    /// Lengths are searched exhaustively while `|A|^len` stays within this.
    pub exhaustive_cap: u64,
    /// Number of uniform random samples per length beyond the cap; zero
    /// makes longer lengths an error.
    pub samples_per_len: u32,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { exhaustive_cap: 1 << 14, samples_per_len: 2000, seed: 0 }
    }
}

/// Outcome of an equivalence search.
#[derive(Debug, Clone)]
pub struct EquivReport {
    pub counterexample: Option<Word>,
    /// Lengths checked exhaustively.
    pub exhaustive_upto: Option<usize>,
    /// Total number of sampled words beyond the exhaustive range.
    pub sampled: u64,
}

/// Searches for a word on which the two closed formulas disagree. Lengths
/// are scanned in increasing order; within the exhaustive range the
/// counterexample returned is the lexicographically first of the shortest
/// length.
pub fn equivalent_up_to(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    max_len: usize,
    env: &EvalEnv,
    budget: &SearchBudget,
) -> Result<EquivReport, EvalError> {
    search_disagreement(f, g, alphabet, max_len, env, budget, |n, check| {
        par::find_min_index(n, check)
    })
}

/// Sequential reference variant of [`equivalent_up_to`].
pub fn equivalent_up_to_seq(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    max_len: usize,
    env: &EvalEnv,
    budget: &SearchBudget,
) -> Result<EquivReport, EvalError> {
    search_disagreement(f, g, alphabet, max_len, env, budget, |n, check| {
        par::find_min_index_seq(n, check)
    })
}

fn search_disagreement(
    f: &Formula,
    g: &Formula,
    alphabet: &Alphabet,
    max_len: usize,
    env: &EvalEnv,
    budget: &SearchBudget,
    driver: impl Fn(
        u64,
        &(dyn Fn(u64) -> Result<bool, EvalError> + Sync),
    ) -> Result<Option<u64>, EvalError>,
) -> Result<EquivReport, EvalError> {
    for h in [f, g] {
        let free = h.free_variables();
        if !free.is_empty() {
            return Err(EvalError::NotClosed(free.into_iter().map(|v| v.0).collect()));
        }
    }
    let mut exhaustive_upto = None;
    let mut sampled = 0u64;
    for len in 0..=max_len {
        let count = alphabet.count_words(len);
        let exhaustive = count.is_some_and(|c| c <= budget.exhaustive_cap);
        if exhaustive {
            let count = count.unwrap();
            let differs = |i: u64| -> Result<bool, EvalError> {
                let w = alphabet.word_at(len, i);
                Ok(holds_on(f, &w, env)? != holds_on(g, &w, env)?)
            };
            if let Some(i) = driver(count, &differs)? {
                return Ok(EquivReport {
                    counterexample: Some(alphabet.word_at(len, i)),
                    exhaustive_upto,
                    sampled,
                });
            }
            exhaustive_upto = Some(len);
        } else {
            if budget.samples_per_len == 0 {
                return Err(EvalError::BudgetExceeded { len });
            }
            let differs = |i: u64| -> Result<bool, EvalError> {
                let w = sample_word(alphabet, len, budget.seed, i);
                Ok(holds_on(f, &w, env)? != holds_on(g, &w, env)?)
            };
            let n = budget.samples_per_len as u64;
            if let Some(i) = driver(n, &differs)? {
                sampled += i + 1;
                return Ok(EquivReport {
                    counterexample: Some(sample_word(alphabet, len, budget.seed, i)),
                    exhaustive_upto,
                    sampled,
                });
            }
            sampled += n;
        }
    }
    Ok(EquivReport { counterexample: None, exhaustive_upto, sampled })
}

/// Deterministic uniform sample: the `i`-th sampled word of a given length
/// under a seed, independent of evaluation order.
fn sample_word(alphabet: &Alphabet, len: usize, seed: u64, i: u64) -> Word {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (len as u64).wrapping_mul(0x9E3779B97F4A7C15) ^ i);
    let letters = alphabet.letters();
    let symbols = (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
    Word::from_symbols(symbols)
}

/// A witness that a letter is not neutral: inserting it at `position` into
/// `word` changes membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeutralViolation {
    pub word: Word,
    pub modified: Word,
    pub position: usize,
}

/// Checks whether `letter` is neutral for the language of the closed
/// formula `f`, over all words of length at most `max_len` and all single
/// insertions. Single deletions are the same pairs read in the other
/// direction, so insertions cover both. Returns the first violating pair in
/// (length, word, position) order.
pub fn check_neutral_letter(
    f: &Formula,
    letter: char,
    max_len: usize,
    env: &EvalEnv,
) -> Result<Option<NeutralViolation>, EvalError> {
    let free = f.free_variables();
    if !free.is_empty() {
        return Err(EvalError::NotClosed(free.into_iter().map(|v| v.0).collect()));
    }
    let alphabet = &env.alphabet;
    for len in 0..=max_len {
        let count = alphabet
            .count_words(len)
            .ok_or(EvalError::BudgetExceeded { len })?;
        let slots = (len + 1) as u64;
        let violated = |idx: u64| -> Result<bool, EvalError> {
            let w = alphabet.word_at(len, idx / slots);
            let pos = (idx % slots) as usize;
            let modified = w.insert(pos, letter);
            Ok(holds_on(f, &w, env)? != holds_on(f, &modified, env)?)
        };
        if let Some(idx) = par::find_min_index(count * slots, violated)? {
            let w = alphabet.word_at(len, idx / slots);
            let pos = (idx % slots) as usize;
            let modified = w.insert(pos, letter);
            return Ok(Some(NeutralViolation { word: w, modified, position: pos }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_formula;

    fn env_ab() -> EvalEnv {
        EvalEnv::with_alphabet(Alphabet::new(['a', 'b']).unwrap())
    }

    fn env_abc() -> EvalEnv {
        EvalEnv::with_alphabet(Alphabet::new(['a', 'b', 'c']).unwrap())
    }

    fn toy() -> Formula {
        parse_formula("exists x. forall y. (a(x) & (x < y -> b(y)))").unwrap()
    }

    #[test]
    fn toy_formula_examples() {
        let env = env_abc();
        let w = env.alphabet.word("aabb").unwrap();
        assert!(holds_on(&toy(), &w, &env).unwrap());
        let w = env.alphabet.word("acb").unwrap();
        assert!(!holds_on(&toy(), &w, &env).unwrap());
    }

    #[test]
    fn exists_on_empty_word() {
        let env = env_ab();
        let f = parse_formula("exists x. a(x)").unwrap();
        assert!(!holds_on(&f, &Word::empty(), &env).unwrap());
        let g = parse_formula("forall x. a(x)").unwrap();
        assert!(holds_on(&g, &Word::empty(), &env).unwrap());
    }

    #[test]
    fn error_paths() {
        let env = env_ab();
        let open = parse_formula("a(x)").unwrap();
        let w = env.alphabet.word("a").unwrap();
        assert!(matches!(
            holds_on(&open, &w, &env),
            Err(EvalError::UnboundVariable(_))
        ));
        let mut a = Assignment::new();
        a.bind("x".into(), 3);
        assert!(matches!(
            evaluate(&open, &w, &a, &env),
            Err(EvalError::PositionOutOfRange { pos: 3, .. })
        ));
        let unknown = parse_formula("exists x. P(x)").unwrap();
        assert!(matches!(
            holds_on(&unknown, &w, &env),
            Err(EvalError::UnknownPredicate(_))
        ));
    }

    #[test]
    fn equivalence_examples() {
        let env = env_ab();
        let f = parse_formula("exists x. a(x)").unwrap();
        let budget = SearchBudget::default();
        let r = equivalent_up_to(&f, &f, &env.alphabet, 6, &env, &budget).unwrap();
        assert!(r.counterexample.is_none());

        let g = parse_formula("!(forall x. !a(x))").unwrap();
        let r = equivalent_up_to(&f, &g, &env.alphabet, 8, &env, &budget).unwrap();
        assert!(r.counterexample.is_none());

        let t = parse_formula("true").unwrap();
        let r = equivalent_up_to(&f, &t, &env.alphabet, 8, &env, &budget).unwrap();
        assert_eq!(r.counterexample, Some(Word::empty()));
    }

    #[test]
    fn seq_parallel_agree() {
        let env = env_ab();
        let f = parse_formula("exists x. (a(x) & !(exists y. x < y))").unwrap();
        let g = parse_formula("exists x. a(x)").unwrap();
        let budget = SearchBudget::default();
        let a = equivalent_up_to(&f, &g, &env.alphabet, 6, &env, &budget).unwrap();
        let b = equivalent_up_to_seq(&f, &g, &env.alphabet, 6, &env, &budget).unwrap();
        assert_eq!(a.counterexample, b.counterexample);
        assert!(a.counterexample.is_some());
    }

    #[test]
    fn neutral_letter_examples() {
        let env = env_ab();
        let f = parse_formula("exists x. a(x)").unwrap();
        assert_eq!(check_neutral_letter(&f, 'b', 5, &env).unwrap(), None);

        // "ends with an a": inserting b after the final a breaks membership.
        let g = parse_formula("exists x. (a(x) & !(exists y. x < y))").unwrap();
        let v = check_neutral_letter(&g, 'b', 5, &env).unwrap().unwrap();
        assert_eq!(v.word, env.alphabet.word("a").unwrap());
        assert_eq!(v.modified, env.alphabet.word("ab").unwrap());
        assert_eq!(v.position, 1);
    }
}
