//! The link graph of a finite-degree predicate family.
//!
//! Two values are adjacent iff some tuple of the family spans both, where a
//! tuple spans the interval between its smallest and largest coordinates
//! (plus self-loops). `left(p)`/`right(p)` are the nearest non-neighbors
//! below and above `p`; they always satisfy `left(p) < p < right(p)` and are
//! nondecreasing.

use std::collections::HashMap;
use std::sync::Mutex;

use thiserror::Error;

use crate::predicates::{PredicateError, PredicateFamily};

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("left iteration went below zero at step {step} starting from {start}")]
    Underflow { start: u64, step: u64 },
    #[error("iteration exceeded the cap {cap}")]
    CapExceeded { cap: u64 },
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDir {
    Left,
    Right,
}

/// Memoizing context for link-graph queries. Answers are pure functions of
/// the family and the queried value; the cache is transparent and safe for
/// concurrent use.
#[derive(Debug)]
pub struct LinkContext {
    family: PredicateFamily,
    memo: Mutex<HashMap<u64, (i64, u64)>>,
}

impl LinkContext {
    pub fn new(family: PredicateFamily) -> Self {
        LinkContext { family, memo: Mutex::new(HashMap::new()) }
    }

    pub fn family(&self) -> &PredicateFamily {
        &self.family
    }

    /// `(left(p), right(p))`. `left(p)` is `-1` when the smallest neighbor
    /// of `p` is 0; callers relying on positions reject that case later.
    pub fn bounds(&self, p: u64) -> Result<(i64, u64), LinkError> {
        if let Some(&b) = self.memo.lock().unwrap().get(&p) {
            return Ok(b);
        }
        // Every spanning pair (a, b) with a <= p <= b satisfies a <= p, so
        // scanning tuples containing m for m in 0..=p discovers all of them.
        let mut min_n = p;
        let mut max_n = p;
        for m in 0..=p {
            for def in self.family.defs() {
                for tuple in def.tuples_containing(m)? {
                    for (i, &a) in tuple.iter().enumerate() {
                        for &b in &tuple[i + 1..] {
                            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                            if lo <= p && p <= hi {
                                min_n = min_n.min(lo);
                                max_n = max_n.max(hi);
                            }
                        }
                    }
                }
            }
        }
        let out = (min_n as i64 - 1, max_n + 1);
        self.memo.lock().unwrap().insert(p, out);
        Ok(out)
    }

    pub fn left(&self, p: u64) -> Result<i64, LinkError> {
        Ok(self.bounds(p)?.0)
    }

    pub fn right(&self, p: u64) -> Result<u64, LinkError> {
        Ok(self.bounds(p)?.1)
    }

    /// n-fold composition. A left iteration that reaches -1 with steps
    /// remaining is an underflow error; reaching -1 on the final step is
    /// reported as -1.
    pub fn iterate(&self, dir: LinkDir, n: u64, p: u64) -> Result<i64, LinkError> {
        match dir {
            LinkDir::Right => self.iterate_right(n, p).map(|v| v as i64),
            LinkDir::Left => self.iterate_left(n, p),
        }
    }

    pub fn iterate_right(&self, n: u64, p: u64) -> Result<u64, LinkError> {
        let mut cur = p;
        for _ in 0..n {
            cur = self.right(cur)?;
        }
        Ok(cur)
    }

    /// Like [`iterate_right`](Self::iterate_right) but gives up once the
    /// value exceeds `cap`; used to detect infeasible parameter choices
    /// before paying for the full scan.
    pub fn iterate_right_capped(&self, n: u64, p: u64, cap: u64) -> Result<Option<u64>, LinkError> {
        let mut cur = p;
        for _ in 0..n {
            if cur > cap {
                return Ok(None);
            }
            cur = self.right(cur)?;
        }
        Ok(if cur > cap { None } else { Some(cur) })
    }

    pub fn iterate_left(&self, n: u64, p: u64) -> Result<i64, LinkError> {
        let mut cur = p as i64;
        for step in 0..n {
            if cur < 0 {
                return Err(LinkError::Underflow { start: p, step });
            }
            cur = self.left(cur as u64)?;
        }
        Ok(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::{Builtin, PredicateDef};

    fn ctx(defs: Vec<PredicateDef>) -> LinkContext {
        LinkContext::new(PredicateFamily::new(defs).unwrap())
    }

    #[test]
    fn succ_bounds() {
        let c = ctx(vec![PredicateDef::succ()]);
        assert_eq!(c.bounds(5).unwrap(), (3, 7));
        assert_eq!(c.bounds(0).unwrap(), (-1, 2));
    }

    #[test]
    fn double_bounds() {
        let c = ctx(vec![PredicateDef::double()]);
        // Neighbors of 6 are spanned by (3,6), (4,8), (5,10), (6,12).
        assert_eq!(c.bounds(6).unwrap(), (2, 13));
    }

    #[test]
    fn monadic_predicates_only_self_loop() {
        let c = ctx(vec![PredicateDef::builtin("POW2", Builtin::Pow2)]);
        assert_eq!(c.bounds(5).unwrap(), (4, 6));
    }

    #[test]
    fn empty_family() {
        let c = ctx(vec![]);
        assert_eq!(c.bounds(7).unwrap(), (6, 8));
    }

    #[test]
    fn iteration() {
        let c = ctx(vec![PredicateDef::succ()]);
        assert_eq!(c.iterate_right(2, 3).unwrap(), 7);
        assert_eq!(c.iterate(LinkDir::Right, 0, 9).unwrap(), 9);
        // One left step after two right steps does not fall back below
        // right(3).
        let l = c.iterate_left(1, c.iterate_right(2, 3).unwrap()).unwrap();
        assert_eq!(l, 5);
        assert!(l >= c.right(3).unwrap() as i64);
    }

    #[test]
    fn left_underflow() {
        let c = ctx(vec![PredicateDef::succ()]);
        // left(1) = -1, so a second step underflows.
        assert_eq!(c.iterate_left(1, 1).unwrap(), -1);
        assert!(matches!(c.iterate_left(2, 1), Err(LinkError::Underflow { .. })));
    }

    #[test]
    fn capped_iteration() {
        let c = ctx(vec![PredicateDef::double()]);
        assert_eq!(c.iterate_right_capped(3, 6, 1000).unwrap(), Some(55));
        assert_eq!(c.iterate_right_capped(20, 6, 1000).unwrap(), None);
    }
}
