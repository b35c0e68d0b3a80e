//! Symbolic expressions over real arithmetic.
//!
//! An [`Expression`] is an immutable tree shared through `Arc`, bound to an
//! ordered list of variable names. Evaluation takes the variable values in
//! the same order. Every closed form used by the construction (generating
//! functions, tie functions and all of their derivatives) lives here.

mod diff;
mod parse;
mod print;
mod simplify;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl UnaryOp {
    pub(crate) fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// A node of the expression tree. Variables are indices into the owning
/// expression's variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Unary(UnaryOp, Arc<Node>),
    Binary(BinaryOp, Arc<Node>, Arc<Node>),
    /// Integer power.
    Pow(Arc<Node>, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogOfNonPositive => "ln of non-positive argument",
            DomainErrorKind::SqrtOfNegative => "sqrt of negative argument",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{kind} in `{subtree}`")]
    Domain {
        kind: DomainErrorKind,
        subtree: String,
    },
    #[error("expected {expected} variable values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("no value bound for variable `{0}`")]
    Unbound(String),
}

/// Immutable symbolic expression bound to a list of variable names.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Arc<Node>,
    vars: Arc<[String]>,
}

impl Expression {
    /// Parses infix source text. See the module docs of `parse` for the
    /// grammar.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, ParseError> {
        let vars: Arc<[String]> = variables.iter().map(|s| s.to_string()).collect();
        parse::parse(source, vars)
    }

    pub fn constant(value: f64, vars: Arc<[String]>) -> Self {
        Self::from_node(Node::Const(value), vars)
    }

    /// The `index`-th declared variable as an expression.
    pub fn variable(index: usize, vars: Arc<[String]>) -> Self {
        assert!(index < vars.len(), "variable index out of range");
        Self::from_node(Node::Var(index), vars)
    }

    pub(crate) fn from_node(node: Node, vars: Arc<[String]>) -> Self {
        Self {
            root: Arc::new(node),
            vars,
        }
    }

    pub(crate) fn from_arc(root: Arc<Node>, vars: Arc<[String]>) -> Self {
        Self { root, vars }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub(crate) fn vars_arc(&self) -> Arc<[String]> {
        Arc::clone(&self.vars)
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Sorted indices of the variables that actually occur in the tree.
    pub fn referenced_variables(&self) -> Vec<usize> {
        let mut seen = vec![false; self.vars.len()];
        mark_vars(&self.root, &mut seen);
        seen.iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.root {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Evaluates at `point`, given in declared-variable order.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        if point.len() != self.vars.len() {
            return Err(EvalError::Arity {
                expected: self.vars.len(),
                got: point.len(),
            });
        }
        eval_node(&self.root, point, &self.vars)
    }

    /// Evaluates with values looked up by variable name.
    pub fn eval_map(&self, point: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let values = self
            .vars
            .iter()
            .map(|name| {
                point
                    .get(name)
                    .copied()
                    .ok_or_else(|| EvalError::Unbound(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        eval_node(&self.root, &values, &self.vars)
    }

    /// Exact symbolic derivative with respect to the variable `index`,
    /// simplified.
    pub fn derivative(&self, index: usize) -> Expression {
        let d = diff::derivative(&self.root, index);
        Expression::from_arc(simplify::simplify(&d), self.vars_arc())
    }

    /// Derivative with respect to a variable given by name; `None` if the
    /// name is not declared.
    pub fn differentiate(&self, var: &str) -> Option<Expression> {
        self.variable_index(var).map(|i| self.derivative(i))
    }

    pub fn simplify(&self) -> Expression {
        Expression::from_arc(simplify::simplify(&self.root), self.vars_arc())
    }

    /// Rebinds the expression to a new variable list; `map[i]` is the new
    /// index of old variable `i`.
    pub fn remap(&self, vars: Arc<[String]>, map: &[usize]) -> Expression {
        assert_eq!(map.len(), self.vars.len());
        Expression::from_arc(remap_node(&self.root, map), vars)
    }

    /// Replaces every occurrence of variable `index` with a constant.
    pub fn substitute(&self, index: usize, value: f64) -> Expression {
        Expression::from_arc(substitute_node(&self.root, index, value), self.vars_arc())
            .simplify()
    }

    fn binary(&self, op: BinaryOp, rhs: &Expression) -> Expression {
        assert!(
            self.vars == rhs.vars || *self.vars == *rhs.vars,
            "expressions bound to different variable lists"
        );
        Expression::from_node(
            Node::Binary(op, Arc::clone(&self.root), Arc::clone(&rhs.root)),
            self.vars_arc(),
        )
    }

    pub fn unary(&self, op: UnaryOp) -> Expression {
        Expression::from_node(Node::Unary(op, Arc::clone(&self.root)), self.vars_arc())
    }

    pub fn powi(&self, exponent: i32) -> Expression {
        Expression::from_node(Node::Pow(Arc::clone(&self.root), exponent), self.vars_arc())
    }

    pub fn scale(&self, factor: f64) -> Expression {
        Expression::constant(factor, self.vars_arc()) * self
    }

    pub fn add_const(&self, c: f64) -> Expression {
        self + &Expression::constant(c, self.vars_arc())
    }
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.vars == other.vars && self.root == other.root
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                self.binary($op, rhs)
            }
        }
        impl std::ops::$trait<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                self.binary($op, &rhs)
            }
        }
        impl std::ops::$trait<&Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                self.binary($op, rhs)
            }
        }
    };
}

impl_binop!(Add, add, BinaryOp::Add);
impl_binop!(Sub, sub, BinaryOp::Sub);
impl_binop!(Mul, mul, BinaryOp::Mul);
impl_binop!(Div, div, BinaryOp::Div);

impl std::ops::Neg for &Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        self.unary(UnaryOp::Neg)
    }
}

impl std::ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        self.unary(UnaryOp::Neg)
    }
}

fn domain(kind: DomainErrorKind, node: &Node, vars: &[String]) -> EvalError {
    EvalError::Domain {
        kind,
        subtree: print::node_to_string(node, vars),
    }
}

fn eval_node(node: &Node, point: &[f64], vars: &[String]) -> Result<f64, EvalError> {
    Ok(match node {
        Node::Const(c) => *c,
        Node::Var(i) => point[*i],
        Node::Unary(op, a) => {
            let x = eval_node(a, point, vars)?;
            match op {
                UnaryOp::Neg => -x,
                UnaryOp::Exp => x.exp(),
                UnaryOp::Ln => {
                    if x <= 0.0 {
                        return Err(domain(DomainErrorKind::LogOfNonPositive, node, vars));
                    }
                    x.ln()
                }
                UnaryOp::Sin => x.sin(),
                UnaryOp::Cos => x.cos(),
                UnaryOp::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(DomainErrorKind::SqrtOfNegative, node, vars));
                    }
                    x.sqrt()
                }
            }
        }
        Node::Binary(op, a, b) => {
            let x = eval_node(a, point, vars)?;
            let y = eval_node(b, point, vars)?;
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y == 0.0 {
                        return Err(domain(DomainErrorKind::DivisionByZero, node, vars));
                    }
                    x / y
                }
            }
        }
        Node::Pow(a, n) => {
            let x = eval_node(a, point, vars)?;
            if *n < 0 && x == 0.0 {
                return Err(domain(DomainErrorKind::DivisionByZero, node, vars));
            }
            x.powi(*n)
        }
    })
}

fn mark_vars(node: &Node, seen: &mut [bool]) {
    match node {
        Node::Const(_) => {}
        Node::Var(i) => seen[*i] = true,
        Node::Unary(_, a) | Node::Pow(a, _) => mark_vars(a, seen),
        Node::Binary(_, a, b) => {
            mark_vars(a, seen);
            mark_vars(b, seen);
        }
    }
}

fn remap_node(node: &Node, map: &[usize]) -> Arc<Node> {
    Arc::new(match node {
        Node::Const(c) => Node::Const(*c),
        Node::Var(i) => Node::Var(map[*i]),
        Node::Unary(op, a) => Node::Unary(*op, remap_node(a, map)),
        Node::Binary(op, a, b) => Node::Binary(*op, remap_node(a, map), remap_node(b, map)),
        Node::Pow(a, n) => Node::Pow(remap_node(a, map), *n),
    })
}

fn substitute_node(node: &Node, index: usize, value: f64) -> Arc<Node> {
    Arc::new(match node {
        Node::Const(c) => Node::Const(*c),
        Node::Var(i) if *i == index => Node::Const(value),
        Node::Var(i) => Node::Var(*i),
        Node::Unary(op, a) => Node::Unary(*op, substitute_node(a, index, value)),
        Node::Binary(op, a, b) => Node::Binary(
            *op,
            substitute_node(a, index, value),
            substitute_node(b, index, value),
        ),
        Node::Pow(a, n) => Node::Pow(substitute_node(a, index, value), *n),
    })
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::node_to_string(&self.root, &self.vars))
    }
}

/// Central finite difference of `e` along variable `index` at `point`.
pub fn central_difference(
    e: &Expression,
    index: usize,
    point: &[f64],
    h: f64,
) -> Result<f64, EvalError> {
    let mut p = point.to_vec();
    p[index] = point[index] + h;
    let fp = e.eval(&p)?;
    p[index] = point[index] - h;
    let fm = e.eval(&p)?;
    Ok((fp - fm) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Arc<[String]> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn evaluates_generating_function_at_point() {
        let e = Expression::parse("(x^2 - y^2)/2", &["x", "y"]).unwrap();
        assert_eq!(e.eval(&[2.0, 1.0]).unwrap(), 1.5);
        let half_square = Expression::parse("x^2/2", &["x"]).unwrap();
        assert_eq!(half_square.eval(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn reports_domain_errors_with_subtree() {
        let e = Expression::parse("1/x", &["x"]).unwrap();
        match e.eval(&[0.0]) {
            Err(EvalError::Domain { kind, subtree }) => {
                assert_eq!(kind, DomainErrorKind::DivisionByZero);
                assert_eq!(subtree, "1 / x");
            }
            other => panic!("unexpected {other:?}"),
        }
        let l = Expression::parse("2 + ln(x - 1)", &["x"]).unwrap();
        assert!(matches!(
            l.eval(&[1.0]),
            Err(EvalError::Domain {
                kind: DomainErrorKind::LogOfNonPositive,
                ..
            })
        ));
        let s = Expression::parse("sqrt(x)", &["x"]).unwrap();
        assert!(s.eval(&[-1e-300]).is_err());
        let p = Expression::parse("x^(-2)", &["x"]).unwrap();
        assert!(p.eval(&[0.0]).is_err());
    }

    #[test]
    fn eval_map_binds_by_name() {
        let e = Expression::parse("x*y + z", &["x", "y", "z"]).unwrap();
        let mut m = HashMap::new();
        m.insert("x".to_string(), 2.0);
        m.insert("y".to_string(), 3.0);
        assert!(matches!(e.eval_map(&m), Err(EvalError::Unbound(ref n)) if n == "z"));
        m.insert("z".to_string(), 1.0);
        assert_eq!(e.eval_map(&m).unwrap(), 7.0);
    }

    #[test]
    fn referenced_variables_and_remap() {
        let e = Expression::parse("y^2 + 1", &["x", "y"]).unwrap();
        assert_eq!(e.referenced_variables(), vec![1]);
        let lifted = e.remap(vars(&["a", "b", "c"]), &[0, 2]);
        assert_eq!(lifted.eval(&[9.0, 9.0, 3.0]).unwrap(), 10.0);
        assert_eq!(lifted.to_string(), "c^2 + 1");
    }

    #[test]
    fn operator_builders_compose() {
        let v = vars(&["x"]);
        let x = Expression::variable(0, v.clone());
        let e = (&x * &x).scale(3.0) - Expression::constant(1.0, v);
        assert_eq!(e.eval(&[2.0]).unwrap(), 11.0);
        assert_eq!(e.substitute(0, 2.0).as_constant(), Some(11.0));
    }
}
