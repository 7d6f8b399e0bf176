//! Scalar symbolic expressions over named real coordinates.
//!
//! Expressions are immutable trees behind `Arc`, built through smart
//! constructors that fold exact constants and drop neutral elements. The
//! printer emits text in the grammar accepted by [`parse`], and re-parsing
//! printed output reproduces the same tree.

mod chart;
mod diff;
mod normal;
mod parse;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use chart::{Chart, Interval};
pub use normal::{normalize, normalize_bounded, normalize_guarded};
pub use parse::{parse, parse_expr};
pub use zero::{is_identically_zero, ZeroOptions, ZeroTest};

use crate::error::{Error, Result};

/// Unary functions admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
            Func::Sqrt => x.sqrt(),
        }
    }

    /// Value at an argument where it is exactly representable, used to
    /// fold things like `exp(0)` without losing exactness.
    pub(crate) fn exact_at(self, x: f64) -> Option<f64> {
        match (self, x) {
            (Func::Sin | Func::Sinh | Func::Sqrt, v) if v == 0.0 => Some(0.0),
            (Func::Cos | Func::Cosh | Func::Exp, v) if v == 0.0 => Some(1.0),
            (Func::Log, v) if v == 1.0 => Some(0.0),
            (Func::Sqrt, v) if v == 1.0 => Some(1.0),
            _ => None,
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Arc<str>),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, i32),
    Neg(Expr),
    Call(Func, Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

/// Largest magnitude at which f64 integer arithmetic is still exact.
const EXACT_INT: f64 = 1125899906842624.0; // 2^50

fn small_int(x: f64) -> bool {
    x.fract() == 0.0 && x.abs() < EXACT_INT
}

impl Expr {
    fn wrap(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(x: f64) -> Expr {
        // -0.0 prints as "-0", keep a single zero
        Expr::wrap(Node::Num(if x == 0.0 { 0.0 } else { x }))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::wrap(Node::Var(Arc::from(name)))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.node() {
            Node::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), Some(y)) if small_int(x) && small_int(y) => Expr::num(x + y),
            _ => Expr::wrap(Node::Add(a, b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (_, Some(y)) if y == 0.0 => a,
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (Some(x), Some(y)) if small_int(x) && small_int(y) => Expr::num(x - y),
            _ => Expr::wrap(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), Some(y)) if small_int(x) && small_int(y) && (x * y).abs() < EXACT_INT => {
                Expr::num(x * y)
            }
            _ => Expr::wrap(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_num(), b.as_num()) {
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), Some(y)) if small_int(x) && small_int(y) && y != 0.0 && x % y == 0.0 => {
                Expr::num(x / y)
            }
            _ => Expr::wrap(Node::Div(a, b)),
        }
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return a;
        }
        if let Some(x) = a.as_num() {
            if x == 0.0 && n > 0 {
                return Expr::zero();
            }
            if x == 1.0 {
                return Expr::one();
            }
            if n > 0 && small_int(x) {
                let v = x.powi(n);
                if v.abs() < EXACT_INT {
                    return Expr::num(v);
                }
            }
        }
        Expr::wrap(Node::Pow(a, n))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Num(x) => Expr::num(-x),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(a)),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        if let Some(v) = a.as_num().and_then(|x| f.exact_at(x)) {
            return Expr::num(v);
        }
        Expr::wrap(Node::Call(f, a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::call(Func::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::call(Func::Cos, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::call(Func::Exp, a)
    }
    pub fn log(a: Expr) -> Expr {
        Expr::call(Func::Log, a)
    }
    pub fn sqrt(a: Expr) -> Expr {
        Expr::call(Func::Sqrt, a)
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::mul(Expr::num(c), self.clone())
    }

    /// Sum of an iterator; the empty sum is zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// Names of all variables occurring in the tree.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Var(v) => &**v == name,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(name) || b.depends_on(name)
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => a.depends_on(name),
        }
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
        }
    }

    /// Denominators and `log`/`sqrt` arguments: the places where the
    /// expression may fail to be defined.
    pub fn singular_sets(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out
    }

    fn collect_singular(&self, out: &mut Vec<Expr>) {
        match self.node() {
            Node::Num(_) | Node::Var(_) => {}
            Node::Div(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
                if b.as_num().is_none() && !out.contains(b) {
                    out.push(b.clone());
                }
            }
            Node::Pow(a, n) => {
                a.collect_singular(out);
                if *n < 0 && a.as_num().is_none() && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
            }
            Node::Neg(a) => a.collect_singular(out),
            Node::Call(f, a) => {
                a.collect_singular(out);
                if matches!(f, Func::Log | Func::Sqrt) && a.as_num().is_none() && !out.contains(a)
                {
                    out.push(a.clone());
                }
            }
        }
    }

    /// Replace variables by expressions. Unmapped variables are kept.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(v) => map.get(&**v).cloned().unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Node::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Node::Mul(a, b) => Expr::mul(a.substitute(map), b.substitute(map)),
            Node::Div(a, b) => Expr::div(a.substitute(map), b.substitute(map)),
            Node::Pow(a, n) => Expr::powi(a.substitute(map), *n),
            Node::Neg(a) => Expr::neg(a.substitute(map)),
            Node::Call(f, a) => Expr::call(*f, a.substitute(map)),
        }
    }

    /// Evaluate with a name lookup. Unbound names are an error; non-finite
    /// results are returned as is.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self.node() {
            Node::Num(x) => *x,
            Node::Var(v) => lookup(v).ok_or_else(|| Error::UndeclaredVariable(v.to_string()))?,
            Node::Add(a, b) => a.eval_with(lookup)? + b.eval_with(lookup)?,
            Node::Sub(a, b) => a.eval_with(lookup)? - b.eval_with(lookup)?,
            Node::Mul(a, b) => a.eval_with(lookup)? * b.eval_with(lookup)?,
            Node::Div(a, b) => a.eval_with(lookup)? / b.eval_with(lookup)?,
            Node::Pow(a, n) => a.eval_with(lookup)?.powi(*n),
            Node::Neg(a) => -a.eval_with(lookup)?,
            Node::Call(f, a) => f.apply(a.eval_with(lookup)?),
        })
    }

    /// Evaluate at a point given as parallel name/value slices.
    pub fn eval(&self, names: &[String], values: &[f64]) -> Result<f64> {
        self.eval_with(&|v| names.iter().position(|n| n == v).map(|i| values[i]))
    }

    /// Compile against an ordered coordinate list for repeated evaluation.
    pub fn compile(&self, names: &[String]) -> Result<Compiled> {
        let mut ops = Vec::with_capacity(self.size());
        self.emit(names, &mut ops)?;
        Ok(Compiled { ops })
    }

    fn emit(&self, names: &[String], ops: &mut Vec<Op>) -> Result<()> {
        match self.node() {
            Node::Num(x) => ops.push(Op::Num(*x)),
            Node::Var(v) => {
                let i = names
                    .iter()
                    .position(|n| **n == **v)
                    .ok_or_else(|| Error::UndeclaredVariable(v.to_string()))?;
                ops.push(Op::Var(i));
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.emit(names, ops)?;
                b.emit(names, ops)?;
                ops.push(match self.node() {
                    Node::Add(..) => Op::Add,
                    Node::Sub(..) => Op::Sub,
                    Node::Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
            }
            Node::Pow(a, n) => {
                a.emit(names, ops)?;
                ops.push(Op::Pow(*n));
            }
            Node::Neg(a) => {
                a.emit(names, ops)?;
                ops.push(Op::Neg);
            }
            Node::Call(f, a) => {
                a.emit(names, ops)?;
                ops.push(Op::Call(*f));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Num(f64),
    Var(usize),
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Neg,
    Call(Func),
}

/// Postfix program with variables resolved to slot indices.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: Vec<Op>,
}

impl Compiled {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut stack: Vec<f64> = Vec::with_capacity(16);
        for op in &self.ops {
            match *op {
                Op::Num(v) => stack.push(v),
                Op::Var(i) => stack.push(x[i]),
                Op::Pow(n) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(n));
                }
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(f.apply(a));
                }
                _ => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => a / b,
                    });
                }
            }
        }
        stack.pop().unwrap_or(f64::NAN)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl<'a> ops::Add<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self.clone(), rhs.clone())
    }
}

impl<'a> ops::Sub<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self.clone(), rhs.clone())
    }
}

impl<'a> ops::Mul<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self.clone(), rhs.clone())
    }
}

impl<'a> ops::Div<&'a Expr> for &'a Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self.clone(), rhs.clone())
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::num(x)
    }
}

// Printing. Precedence: sums 1, products 2, everything tighter is an atom
// for the purposes of operand placement.
fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Num(x) if *x < 0.0 => 3,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_finite() {
        write!(f, "{x}")
    } else if x.is_nan() {
        write!(f, "(0/0)")
    } else if x > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(x) => write_num(f, *x),
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) | Node::Sub(a, b) => {
                let op = if matches!(self.node(), Node::Add(..)) { "+" } else { "-" };
                write_operand(f, a, false)?;
                write!(f, " {op} ")?;
                write_operand(f, b, prec(b) <= 1)
            }
            Node::Mul(a, b) | Node::Div(a, b) => {
                let op = if matches!(self.node(), Node::Mul(..)) { "*" } else { "/" };
                write_operand(f, a, prec(a) < 2)?;
                write!(f, "{op}")?;
                write_operand(f, b, prec(b) <= 2)
            }
            Node::Pow(a, n) => {
                write_operand(f, a, prec(a) < 5)?;
                write!(f, "^{n}")
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                // a leading '-' on the operand would fold into a constant
                write_operand(f, a, prec(a) < 5)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Symbolic partial derivative.
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    diff::derivative(e, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var("x")
    }

    #[test]
    fn constructors_fold_neutral_elements() {
        assert_eq!(Expr::add(x(), Expr::zero()), x());
        assert_eq!(Expr::mul(Expr::one(), x()), x());
        assert!(Expr::mul(x(), Expr::zero()).is_zero());
        assert_eq!(Expr::neg(Expr::neg(x())), x());
        assert_eq!(Expr::powi(x(), 1), x());
        assert_eq!(Expr::exp(Expr::zero()).as_num(), Some(1.0));
    }

    #[test]
    fn inexact_quotients_are_not_folded() {
        let third = Expr::div(Expr::num(1.0), Expr::num(3.0));
        assert!(third.as_num().is_none());
        assert_eq!(Expr::div(Expr::num(6.0), Expr::num(3.0)).as_num(), Some(2.0));
    }

    #[test]
    fn printing_parenthesizes_structure() {
        let e = Expr::sub(x(), Expr::add(x(), Expr::one()));
        assert_eq!(e.to_string(), "x - (x + 1)");
        let p = Expr::powi(Expr::neg(x()), 2);
        assert_eq!(p.to_string(), "(-x)^2");
        let q = Expr::neg(Expr::powi(x(), 2));
        assert_eq!(q.to_string(), "-(x^2)");
        assert_eq!(Expr::powi(Expr::num(-2.5), 2).to_string(), "(-2.5)^2");
    }

    #[test]
    fn compiled_matches_tree_eval() {
        let e = parse("sin(x)*y - 3/(x + y)^2").unwrap();
        let names = vec!["x".to_string(), "y".to_string()];
        let c = e.compile(&names).unwrap();
        for &(a, b) in &[(0.3, 0.7), (1.5, -0.2), (-2.0, 4.0)] {
            let direct = e.eval(&names, &[a, b]).unwrap();
            assert_eq!(c.eval(&[a, b]), direct);
        }
    }

    #[test]
    fn substitution_replaces_variables() {
        let e = parse("1/x").unwrap();
        let mut m = BTreeMap::new();
        m.insert("x".to_string(), parse("1/h").unwrap());
        let s = normalize(&e.substitute(&m));
        assert_eq!(s.to_string(), "h");
    }

    #[test]
    fn singular_sets_report_denominators() {
        let e = parse("log(y) + 1/x").unwrap();
        let s: Vec<String> = e.singular_sets().iter().map(|g| g.to_string()).collect();
        assert_eq!(s, vec!["y", "x"]);
    }
}
