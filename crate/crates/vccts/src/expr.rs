//! Integer and boolean expressions with a standard evaluator.
//!
//! The value domain is fixed to integers; operators are `+`, `-`, `*` on
//! integers and `not`, `and`, `=`, `<` on booleans.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Data values.
pub type Val = i64;

/// An environment: a partial map from data variables to values. It is never
/// mutated during process evolution; execution substitutes values instead.
pub type Env = BTreeMap<String, Val>;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Expr {
    Val(Val),
    Var(String),
    Bin(Op, Box<Expr>, Box<Expr>),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BExpr {
    True,
    False,
    Not(Box<BExpr>),
    And(Box<BExpr>, Box<BExpr>),
    Eq(Expr, Expr),
    Lt(Expr, Expr),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EvalError {
    /// An unbound data variable was encountered.
    Unbound(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound(x) => write!(f, "unbound data variable `{x}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn bin(op: Op, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Val(_) => {}
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Bin(_, a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    pub fn fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn is_closed(&self) -> bool {
        self.fv().is_empty()
    }

    /// Capture-free substitution of `e` for every occurrence of `x`.
    pub fn subst(&self, x: &str, e: &Expr) -> Expr {
        match self {
            Expr::Val(v) => Expr::Val(*v),
            Expr::Var(y) if y == x => e.clone(),
            Expr::Var(y) => Expr::Var(y.clone()),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst(x, e), b.subst(x, e)),
        }
    }

    /// Simultaneous substitution.
    pub fn subst_map(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Val(v) => Expr::Val(*v),
            Expr::Var(y) => map.get(y).cloned().unwrap_or_else(|| Expr::Var(y.clone())),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.subst_map(map), b.subst_map(map)),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<Val, EvalError> {
        match self {
            Expr::Val(v) => Ok(*v),
            Expr::Var(x) => env.get(x).copied().ok_or_else(|| EvalError::Unbound(x.clone())),
            Expr::Bin(op, a, b) => {
                let a = a.eval(env)?;
                let b = b.eval(env)?;
                Ok(match op {
                    Op::Add => a.wrapping_add(b),
                    Op::Sub => a.wrapping_sub(b),
                    Op::Mul => a.wrapping_mul(b),
                })
            }
        }
    }
}

impl BExpr {
    pub fn not(b: BExpr) -> BExpr {
        BExpr::Not(Box::new(b))
    }

    pub fn and(a: BExpr, b: BExpr) -> BExpr {
        BExpr::And(Box::new(a), Box::new(b))
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BExpr::True | BExpr::False => {}
            BExpr::Not(b) => b.free_vars(out),
            BExpr::And(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            BExpr::Eq(a, b) | BExpr::Lt(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    pub fn fv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.free_vars(&mut s);
        s
    }

    pub fn subst(&self, x: &str, e: &Expr) -> BExpr {
        match self {
            BExpr::True => BExpr::True,
            BExpr::False => BExpr::False,
            BExpr::Not(b) => BExpr::not(b.subst(x, e)),
            BExpr::And(a, b) => BExpr::and(a.subst(x, e), b.subst(x, e)),
            BExpr::Eq(a, b) => BExpr::Eq(a.subst(x, e), b.subst(x, e)),
            BExpr::Lt(a, b) => BExpr::Lt(a.subst(x, e), b.subst(x, e)),
        }
    }

    pub fn subst_map(&self, map: &BTreeMap<String, Expr>) -> BExpr {
        match self {
            BExpr::True => BExpr::True,
            BExpr::False => BExpr::False,
            BExpr::Not(b) => BExpr::not(b.subst_map(map)),
            BExpr::And(a, b) => BExpr::and(a.subst_map(map), b.subst_map(map)),
            BExpr::Eq(a, b) => BExpr::Eq(a.subst_map(map), b.subst_map(map)),
            BExpr::Lt(a, b) => BExpr::Lt(a.subst_map(map), b.subst_map(map)),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<bool, EvalError> {
        match self {
            BExpr::True => Ok(true),
            BExpr::False => Ok(false),
            BExpr::Not(b) => Ok(!b.eval(env)?),
            BExpr::And(a, b) => Ok(a.eval(env)? && b.eval(env)?),
            BExpr::Eq(a, b) => Ok(a.eval(env)? == b.eval(env)?),
            BExpr::Lt(a, b) => Ok(a.eval(env)? < b.eval(env)?),
        }
    }
}

fn prec(op: Op) -> u8 {
    match op {
        Op::Add | Op::Sub => 1,
        Op::Mul => 2,
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, p: u8) -> fmt::Result {
        match self {
            Expr::Val(v) => {
                if *v < 0 {
                    write!(f, "({v})")
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Bin(op, a, b) => {
                let q = prec(*op);
                if q < p {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, q)?;
                let s = match op {
                    Op::Add => " + ",
                    Op::Sub => " - ",
                    Op::Mul => " * ",
                };
                write!(f, "{s}")?;
                // left-assoc: right operand needs strictly higher binding
                b.fmt_prec(f, q + 1)?;
                if q < p {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for BExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BExpr::True => write!(f, "true"),
            BExpr::False => write!(f, "false"),
            BExpr::Not(b) => write!(f, "not ({b})"),
            BExpr::And(a, b) => write!(f, "({a}) and ({b})"),
            BExpr::Eq(a, b) => write!(f, "{a} = {b}"),
            BExpr::Lt(a, b) => write!(f, "{a} < {b}"),
        }
    }
}

/// Shorthand used across tests and translation: variable lists to an env.
pub fn env_of(pairs: &[(&str, Val)]) -> Env {
    pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_arith() {
        let e = Expr::bin(Op::Add, Expr::Val(1), Expr::Val(2));
        assert_eq!(e.eval(&Env::new()), Ok(3));
        let r = Expr::var("r");
        assert_eq!(r.eval(&env_of(&[("r", 5)])), Ok(5));
        assert_eq!(r.eval(&Env::new()), Err(EvalError::Unbound("r".into())));
    }

    #[test]
    fn eval_bool() {
        let b = BExpr::not(BExpr::Eq(Expr::Val(1), Expr::Val(2)));
        assert_eq!(b.eval(&Env::new()), Ok(true));
        let b = BExpr::and(BExpr::True, BExpr::Lt(Expr::Val(3), Expr::Val(2)));
        assert_eq!(b.eval(&Env::new()), Ok(false));
    }

    #[test]
    fn subst_then_env_matches_extended_env() {
        // closing e{v/x} under rho equals closing e under rho[x -> v]
        let e = Expr::bin(Op::Mul, Expr::var("x"), Expr::bin(Op::Add, Expr::var("y"), Expr::Val(1)));
        let rho = env_of(&[("y", 3)]);
        let mut rho_x = rho.clone();
        rho_x.insert("x".into(), 4);
        let closed = e.subst("x", &Expr::Val(4));
        assert_eq!(closed.eval(&rho), e.eval(&rho_x));
    }

    #[test]
    fn display_round_shape() {
        let e = Expr::bin(
            Op::Mul,
            Expr::bin(Op::Add, Expr::var("x"), Expr::Val(2)),
            Expr::Val(3),
        );
        assert_eq!(alloc::format!("{e}"), "(x + 2) * 3");
    }
}
