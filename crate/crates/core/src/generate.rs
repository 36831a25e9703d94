//! Seeded random generation of formulas and words for property tests and
//! sweeps. All generation is driven by an explicit ChaCha stream so a seed
//! fully determines the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::{Formula, OrderOp, Quantifier, Var};
use crate::words::{Alphabet, Word};

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Settings for random formula generation.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub letters: Vec<char>,
    /// Named predicates with arities, usable as atoms.
    pub predicates: Vec<(String, usize)>,
    pub max_depth: usize,
    pub max_quantifiers: usize,
}

impl GenConfig {
    pub fn new(letters: &[char]) -> Self {
        GenConfig {
            letters: letters.to_vec(),
            predicates: Vec::new(),
            max_depth: 6,
            max_quantifiers: 3,
        }
    }

    pub fn with_predicates(mut self, preds: &[(&str, usize)]) -> Self {
        self.predicates = preds.iter().map(|(n, a)| (n.to_string(), *a)).collect();
        self
    }
}

const ORDER_OPS: [OrderOp; 3] = [OrderOp::Lt, OrderOp::Le, OrderOp::Eq];

fn pick_var(rng: &mut ChaCha8Rng, scope: &[Var]) -> Var {
    scope[rng.gen_range(0..scope.len())].clone()
}

fn atom(rng: &mut ChaCha8Rng, cfg: &GenConfig, scope: &[Var]) -> Formula {
    if scope.is_empty() {
        return if rng.gen_bool(0.5) { Formula::True } else { Formula::False };
    }
    let has_preds = !cfg.predicates.is_empty();
    match rng.gen_range(0..if has_preds { 3 } else { 2 }) {
        0 => {
            let l = cfg.letters[rng.gen_range(0..cfg.letters.len())];
            Formula::Letter(l, pick_var(rng, scope))
        }
        1 => {
            let op = ORDER_OPS[rng.gen_range(0..3)];
            Formula::Order(op, pick_var(rng, scope), pick_var(rng, scope))
        }
        _ => {
            let (name, arity) = &cfg.predicates[rng.gen_range(0..cfg.predicates.len())];
            let args = (0..*arity).map(|_| pick_var(rng, scope)).collect();
            Formula::Pred(name.clone(), args)
        }
    }
}

/// A random formula, not necessarily closed; used for printer round-trips.
pub fn random_formula(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Formula {
    let vars: Vec<Var> = ["x", "y", "z", "w"].iter().map(|s| Var::new(*s)).collect();
    gen_tree(rng, cfg, &vars, cfg.max_depth, &mut cfg.max_quantifiers.clone())
}

/// A random closed formula: atoms only use bound variables.
pub fn random_closed_formula(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Formula {
    let mut quant_budget = cfg.max_quantifiers;
    let f = gen_closed(rng, cfg, &mut Vec::new(), cfg.max_depth, &mut quant_budget);
    debug_assert!(f.is_closed());
    f
}

fn gen_tree(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    scope: &[Var],
    depth: usize,
    quants: &mut usize,
) -> Formula {
    if depth == 0 {
        return atom(rng, cfg, scope);
    }
    match rng.gen_range(0..8) {
        0 | 1 => atom(rng, cfg, scope),
        2 => Formula::not(gen_tree(rng, cfg, scope, depth - 1, quants)),
        3 => {
            let n = rng.gen_range(2..=3);
            Formula::And((0..n).map(|_| gen_tree(rng, cfg, scope, depth - 1, quants)).collect())
        }
        4 => {
            let n = rng.gen_range(2..=3);
            Formula::Or((0..n).map(|_| gen_tree(rng, cfg, scope, depth - 1, quants)).collect())
        }
        5 => Formula::implies(
            gen_tree(rng, cfg, scope, depth - 1, quants),
            gen_tree(rng, cfg, scope, depth - 1, quants),
        ),
        6 if *quants > 0 => {
            *quants -= 1;
            let var = Var::new(format!("q{}", *quants));
            let mut inner: Vec<Var> = scope.to_vec();
            inner.push(var.clone());
            let body = gen_tree(rng, cfg, &inner, depth - 1, quants);
            let q = if rng.gen_bool(0.5) { Quantifier::Exists } else { Quantifier::Forall };
            Formula::quantify(q, var, body)
        }
        _ => {
            if rng.gen_bool(0.1) {
                if rng.gen_bool(0.5) {
                    Formula::True
                } else {
                    Formula::False
                }
            } else {
                atom(rng, cfg, scope)
            }
        }
    }
}

fn gen_closed(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    scope: &mut Vec<Var>,
    depth: usize,
    quants: &mut usize,
) -> Formula {
    let can_quant = *quants > 0;
    if depth == 0 || (!can_quant && scope.is_empty()) {
        return atom(rng, cfg, scope);
    }
    let choice = rng.gen_range(0..10);
    match choice {
        0..=2 if can_quant => {
            *quants -= 1;
            let var = Var::new(format!("v{}", scope.len()));
            scope.push(var.clone());
            let body = gen_closed(rng, cfg, scope, depth - 1, quants);
            scope.pop();
            let q = if rng.gen_bool(0.6) { Quantifier::Exists } else { Quantifier::Forall };
            Formula::quantify(q, var, body)
        }
        3 => Formula::not(gen_closed(rng, cfg, scope, depth - 1, quants)),
        4 | 5 => {
            let n = rng.gen_range(2..=3);
            Formula::And((0..n).map(|_| gen_closed(rng, cfg, scope, depth - 1, quants)).collect())
        }
        6 | 7 => {
            let n = rng.gen_range(2..=3);
            Formula::Or((0..n).map(|_| gen_closed(rng, cfg, scope, depth - 1, quants)).collect())
        }
        8 => Formula::implies(
            gen_closed(rng, cfg, scope, depth - 1, quants),
            gen_closed(rng, cfg, scope, depth - 1, quants),
        ),
        _ => atom(rng, cfg, scope),
    }
}

/// A random closed prenex formula with at most `max_quantifiers`
/// quantifiers, distinct variables, and a quantifier-free matrix over the
/// configured atoms.
pub fn random_prenex_formula(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Formula {
    let k = rng.gen_range(0..=cfg.max_quantifiers);
    let vars: Vec<Var> = (0..k).map(|i| Var::new(format!("v{i}"))).collect();
    let matrix_depth = rng.gen_range(1..=3);
    let matrix = gen_matrix(rng, cfg, &vars, matrix_depth);
    let mut f = matrix;
    for var in vars.into_iter().rev() {
        let q = if rng.gen_bool(0.5) { Quantifier::Exists } else { Quantifier::Forall };
        f = Formula::quantify(q, var, f);
    }
    f
}

fn gen_matrix(rng: &mut ChaCha8Rng, cfg: &GenConfig, scope: &[Var], depth: usize) -> Formula {
    if depth == 0 {
        return atom(rng, cfg, scope);
    }
    match rng.gen_range(0..6) {
        0 => Formula::not(gen_matrix(rng, cfg, scope, depth - 1)),
        1 | 2 => {
            let n = rng.gen_range(2..=3);
            Formula::And((0..n).map(|_| gen_matrix(rng, cfg, scope, depth - 1)).collect())
        }
        3 | 4 => {
            let n = rng.gen_range(2..=3);
            Formula::Or((0..n).map(|_| gen_matrix(rng, cfg, scope, depth - 1)).collect())
        }
        _ => Formula::implies(
            gen_matrix(rng, cfg, scope, depth - 1),
            gen_matrix(rng, cfg, scope, depth - 1),
        ),
    }
}

/// A uniform random word of length in `0..=max_len`.
pub fn random_word(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    random_word_of_len(rng, alphabet, len)
}

pub fn random_word_of_len(rng: &mut ChaCha8Rng, alphabet: &Alphabet, len: usize) -> Word {
    let letters = alphabet.letters();
    Word::from_symbols((0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic() {
        let cfg = GenConfig::new(&['a', 'b']).with_predicates(&[("succ", 2)]);
        let a: Vec<Formula> =
            (0..20).map(|i| random_formula(&mut rng_for(i), &cfg)).collect();
        let b: Vec<Formula> =
            (0..20).map(|i| random_formula(&mut rng_for(i), &cfg)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_formulas_are_closed() {
        let cfg = GenConfig::new(&['a', 'b']);
        for seed in 0..100 {
            let f = random_closed_formula(&mut rng_for(seed), &cfg);
            assert!(f.is_closed(), "open formula from seed {seed}: {f}");
        }
    }

    #[test]
    fn prenex_formulas_are_prenex_and_closed() {
        let cfg = GenConfig::new(&['a', 'b', 'c']).with_predicates(&[("succ", 2)]);
        for seed in 0..100 {
            let f = random_prenex_formula(&mut rng_for(seed), &cfg);
            assert!(f.is_closed());
            let p = crate::formula::to_prenex(&f).unwrap();
            assert!(p.quantifier_count() <= cfg.max_quantifiers + 1);
        }
    }
}
