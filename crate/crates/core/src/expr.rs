//! Small integer expression language for predicate definitions.
//!
//! Grammar: infix `+ - *` plus the functions `pow`, `floordiv`, `floorlog2`,
//! `min`, `max`, numeric literals and the single variable `x`. Values are
//! nonnegative: subtraction saturates at zero and `floorlog2(0) = 0`.
//! Evaluation is done in 128 bits with overflow checking.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("expression syntax error at byte {0}: {1}")]
    Syntax(usize, String),
    #[error("arithmetic overflow evaluating {0:?}")]
    Overflow(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Const(u128),
    Var,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    FloorDiv(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    FloorLog2(Box<Node>),
    Min(Box<Node>, Box<Node>),
    Max(Box<Node>, Box<Node>),
}

/// A parsed unary integer expression in the variable `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntExpr {
    src: String,
    node: Node,
}

impl IntExpr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let mut p = ExprParser { bytes: src.as_bytes(), pos: 0 };
        p.skip_ws();
        let node = p.expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(ExprError::Syntax(p.pos, "trailing input".into()));
        }
        Ok(IntExpr { src: src.to_string(), node })
    }

    pub fn src(&self) -> &str {
        &self.src
    }

    pub fn eval(&self, x: u128) -> Result<u128, ExprError> {
        self.node.eval(x).ok_or_else(|| ExprError::Overflow(self.src.clone()))
    }

    /// Evaluates at a `u64` point, requiring the result to fit in `u64`.
    pub fn eval_u64(&self, x: u64) -> Result<Option<u64>, ExprError> {
        let v = self.eval(x as u128)?;
        Ok(u64::try_from(v).ok())
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.src)
    }
}

impl Node {
    fn eval(&self, x: u128) -> Option<u128> {
        Some(match self {
            Node::Const(c) => *c,
            Node::Var => x,
            Node::Add(a, b) => a.eval(x)?.checked_add(b.eval(x)?)?,
            Node::Sub(a, b) => a.eval(x)?.saturating_sub(b.eval(x)?),
            Node::Mul(a, b) => a.eval(x)?.checked_mul(b.eval(x)?)?,
            Node::FloorDiv(a, b) => {
                let d = b.eval(x)?;
                if d == 0 {
                    return None;
                }
                a.eval(x)? / d
            }
            Node::Pow(a, b) => {
                let base = a.eval(x)?;
                let exp = u32::try_from(b.eval(x)?).ok()?;
                base.checked_pow(exp)?
            }
            Node::FloorLog2(a) => {
                let v = a.eval(x)?;
                if v == 0 {
                    0
                } else {
                    v.ilog2() as u128
                }
            }
            Node::Min(a, b) => a.eval(x)?.min(b.eval(x)?),
            Node::Max(a, b) => a.eval(x)?.max(b.eval(x)?),
        })
    }
}

struct ExprParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> Result<(), ExprError> {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ExprError::Syntax(self.pos, format!("expected {:?}", b as char)))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.atom()?;
        loop {
            self.skip_ws();
            if self.peek() == Some(b'*') {
                self.pos += 1;
                lhs = Node::Mul(Box::new(lhs), Box::new(self.atom()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.eat(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                text.parse::<u128>()
                    .map(Node::Const)
                    .map_err(|_| ExprError::Syntax(start, "number too large".into()))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                match name {
                    "x" => Ok(Node::Var),
                    "pow" | "floordiv" | "min" | "max" => {
                        self.eat(b'(')?;
                        let a = self.expr()?;
                        self.eat(b',')?;
                        let b = self.expr()?;
                        self.eat(b')')?;
                        let (a, b) = (Box::new(a), Box::new(b));
                        Ok(match name {
                            "pow" => Node::Pow(a, b),
                            "floordiv" => Node::FloorDiv(a, b),
                            "min" => Node::Min(a, b),
                            _ => Node::Max(a, b),
                        })
                    }
                    "floorlog2" => {
                        self.eat(b'(')?;
                        let a = self.expr()?;
                        self.eat(b')')?;
                        Ok(Node::FloorLog2(Box::new(a)))
                    }
                    other => Err(ExprError::Syntax(start, format!("unknown name {other:?}"))),
                }
            }
            _ => Err(ExprError::Syntax(self.pos, "expected expression".into())),
        }
    }
}

/// Checks that an expression is nondecreasing on a sampled range up to
/// `limit` and still growing past the midpoint. Enumeration of the tuples of
/// rule-defined predicates relies on this. Overflow at a sample point is
/// taken as "beyond range": fine as long as no finite value follows.
pub fn check_nondecreasing_unbounded(e: &IntExpr, limit: u64) -> Result<(), String> {
    let mut points: Vec<u64> = (0..=limit.min(2048)).collect();
    let mut p = 4096u64;
    while p < limit {
        points.push(p);
        p = p.saturating_mul(2);
    }
    points.push(limit);
    points.sort_unstable();
    points.dedup();
    let mut prev: Option<u128> = None;
    let mut prev_x = 0u64;
    let mut overflowed = false;
    for &x in &points {
        match e.eval(x as u128) {
            Ok(v) => {
                if overflowed {
                    return Err(format!(
                        "expression {e} yields a finite value at x={x} after overflowing earlier"
                    ));
                }
                if prev.is_some_and(|p| v < p) {
                    return Err(format!(
                        "expression {e} decreases between x={prev_x} and x={x}"
                    ));
                }
                prev = Some(v);
                prev_x = x;
            }
            Err(ExprError::Overflow(_)) => overflowed = true,
            Err(err) => return Err(err.to_string()),
        }
    }
    if !overflowed {
        let last = prev.unwrap_or(0);
        let half = e.eval((limit / 2) as u128).map_err(|err| err.to_string())?;
        if last <= half && last <= 1 {
            return Err(format!("expression {e} looks bounded on [0, {limit}]"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let e = IntExpr::parse("2*x + 1").unwrap();
        assert_eq!(e.eval(5).unwrap(), 11);
        let e = IntExpr::parse("x - 7").unwrap();
        assert_eq!(e.eval(3).unwrap(), 0); // saturating
        let e = IntExpr::parse("floordiv(x, 2)").unwrap();
        assert_eq!(e.eval(9).unwrap(), 4);
    }

    #[test]
    fn log_square_growth() {
        // 2^(floorlog2(x)^2), forced to 0 at x = 0.
        let e = IntExpr::parse("min(x,1)*pow(2,floorlog2(x)*floorlog2(x))").unwrap();
        assert_eq!(e.eval(0).unwrap(), 0);
        assert_eq!(e.eval(1).unwrap(), 1);
        assert_eq!(e.eval(7).unwrap(), 16);
        assert_eq!(e.eval(8).unwrap(), 512);
        assert_eq!(e.eval(512).unwrap(), 1u128 << 81);
    }

    #[test]
    fn overflow_is_an_error() {
        let e = IntExpr::parse("pow(2, x)").unwrap();
        assert!(e.eval(127).is_ok());
        assert!(e.eval(128).is_err());
    }

    #[test]
    fn monotonicity_check() {
        let ok = IntExpr::parse("x + 1").unwrap();
        assert!(check_nondecreasing_unbounded(&ok, 1 << 16).is_ok());
        let bad = IntExpr::parse("max(10, 10) - x").unwrap();
        assert!(check_nondecreasing_unbounded(&bad, 1 << 16).is_err());
    }
}
