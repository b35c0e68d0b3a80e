//! Bottom-up simplification: constant folding, identity elimination and
//! collection of like terms in flattened sums and products. Quotients are
//! never cancelled, so removable singularities survive simplification.

use std::sync::Arc;

use super::{BinaryOp, Node, UnaryOp};

pub(super) fn simplify(node: &Arc<Node>) -> Arc<Node> {
    match &**node {
        Node::Const(_) | Node::Var(_) => Arc::clone(node),
        Node::Unary(op, a) => simplify_unary(*op, simplify(a)),
        Node::Binary(op, a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match op {
                BinaryOp::Add | BinaryOp::Sub => {
                    let mut acc = SumAcc::default();
                    acc.collect(&a, 1.0);
                    acc.collect(&b, if *op == BinaryOp::Add { 1.0 } else { -1.0 });
                    acc.build()
                }
                BinaryOp::Mul => {
                    let mut acc = ProductAcc::new();
                    acc.collect(&a);
                    acc.collect(&b);
                    acc.build()
                }
                BinaryOp::Div => simplify_div(a, b),
            }
        }
        Node::Pow(a, n) => simplify_pow(simplify(a), *n),
    }
}

fn constant(node: &Node) -> Option<f64> {
    match node {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn folded(v: f64) -> Option<Arc<Node>> {
    v.is_finite().then(|| Arc::new(Node::Const(v)))
}

fn simplify_unary(op: UnaryOp, a: Arc<Node>) -> Arc<Node> {
    if let Some(x) = constant(&a) {
        let v = match op {
            UnaryOp::Neg => Some(-x),
            UnaryOp::Exp => Some(x.exp()),
            UnaryOp::Ln => (x > 0.0).then(|| x.ln()),
            UnaryOp::Sin => Some(x.sin()),
            UnaryOp::Cos => Some(x.cos()),
            UnaryOp::Sqrt => (x >= 0.0).then(|| x.sqrt()),
        };
        if let Some(node) = v.and_then(folded) {
            return node;
        }
    }
    if op == UnaryOp::Neg {
        if let Node::Unary(UnaryOp::Neg, inner) = &*a {
            return Arc::clone(inner);
        }
        if matches!(&*a, Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..)) {
            let mut acc = SumAcc::default();
            acc.collect(&a, -1.0);
            return acc.build();
        }
        let mut acc = ProductAcc::new();
        acc.coef = -1.0;
        acc.collect(&a);
        return acc.build();
    }
    Arc::new(Node::Unary(op, a))
}

fn simplify_div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (constant(&a), constant(&b)) {
        (_, Some(d)) if d == 0.0 => Arc::new(Node::Binary(BinaryOp::Div, a, b)),
        (Some(n), Some(d)) => folded(n / d).unwrap_or_else(|| Arc::new(Node::Binary(BinaryOp::Div, a, b))),
        (Some(n), None) if n == 0.0 => Arc::new(Node::Const(0.0)),
        (_, Some(d)) => {
            let mut acc = ProductAcc::new();
            acc.collect(&a);
            acc.coef /= d;
            acc.build()
        }
        _ => Arc::new(Node::Binary(BinaryOp::Div, a, b)),
    }
}

fn simplify_pow(a: Arc<Node>, n: i32) -> Arc<Node> {
    if n == 0 {
        return Arc::new(Node::Const(1.0));
    }
    if n == 1 {
        return a;
    }
    if let Some(x) = constant(&a) {
        if !(x == 0.0 && n < 0) {
            if let Some(node) = folded(x.powi(n)) {
                return node;
            }
        }
    }
    if let Node::Pow(inner, m) = &*a {
        if let Some(k) = m.checked_mul(n) {
            return simplify_pow(Arc::clone(inner), k);
        }
    }
    Arc::new(Node::Pow(a, n))
}

#[derive(Default)]
struct SumAcc {
    constant: f64,
    terms: Vec<(f64, Arc<Node>)>,
}

impl SumAcc {
    fn collect(&mut self, node: &Arc<Node>, coef: f64) {
        match &**node {
            Node::Const(c) => self.constant += coef * c,
            Node::Binary(BinaryOp::Add, a, b) => {
                self.collect(a, coef);
                self.collect(b, coef);
            }
            Node::Binary(BinaryOp::Sub, a, b) => {
                self.collect(a, coef);
                self.collect(b, -coef);
            }
            Node::Unary(UnaryOp::Neg, a) => self.collect(a, -coef),
            Node::Binary(BinaryOp::Mul, a, b) if constant(a).is_some() => {
                self.push(b, coef * constant(a).unwrap_or(1.0));
            }
            _ => self.push(node, coef),
        }
    }

    fn push(&mut self, term: &Arc<Node>, coef: f64) {
        match self.terms.iter_mut().find(|(_, t)| **t == **term) {
            Some((c, _)) => *c += coef,
            None => self.terms.push((coef, Arc::clone(term))),
        }
    }

    fn build(self) -> Arc<Node> {
        let mut out: Option<Arc<Node>> = None;
        for (coef, term) in self.terms.into_iter().filter(|(c, _)| *c != 0.0) {
            out = Some(match out {
                None => scaled(coef, term),
                Some(acc) if coef < 0.0 => {
                    Arc::new(Node::Binary(BinaryOp::Sub, acc, scaled(-coef, term)))
                }
                Some(acc) => Arc::new(Node::Binary(BinaryOp::Add, acc, scaled(coef, term))),
            });
        }
        let c = self.constant;
        match out {
            None => Arc::new(Node::Const(c)),
            Some(acc) if c == 0.0 => acc,
            Some(acc) if c < 0.0 => {
                Arc::new(Node::Binary(BinaryOp::Sub, acc, Arc::new(Node::Const(-c))))
            }
            Some(acc) => Arc::new(Node::Binary(BinaryOp::Add, acc, Arc::new(Node::Const(c)))),
        }
    }
}

fn scaled(coef: f64, term: Arc<Node>) -> Arc<Node> {
    if coef == 1.0 {
        term
    } else if coef == -1.0 {
        Arc::new(Node::Unary(UnaryOp::Neg, term))
    } else {
        Arc::new(Node::Binary(BinaryOp::Mul, Arc::new(Node::Const(coef)), term))
    }
}

struct ProductAcc {
    coef: f64,
    factors: Vec<(Arc<Node>, i32)>,
}

impl ProductAcc {
    fn new() -> Self {
        Self {
            coef: 1.0,
            factors: Vec::new(),
        }
    }

    fn collect(&mut self, node: &Arc<Node>) {
        match &**node {
            Node::Const(c) => self.coef *= c,
            Node::Binary(BinaryOp::Mul, a, b) => {
                self.collect(a);
                self.collect(b);
            }
            Node::Unary(UnaryOp::Neg, a) => {
                self.coef = -self.coef;
                self.collect(a);
            }
            Node::Pow(base, n) => self.push(base, *n),
            _ => self.push(node, 1),
        }
    }

    fn push(&mut self, base: &Arc<Node>, power: i32) {
        match self.factors.iter_mut().find(|(b, _)| **b == **base) {
            Some((_, p)) => *p = p.saturating_add(power),
            None => self.factors.push((Arc::clone(base), power)),
        }
    }

    fn build(self) -> Arc<Node> {
        if self.coef == 0.0 {
            return Arc::new(Node::Const(0.0));
        }
        let mut out: Option<Arc<Node>> = None;
        for (base, p) in self.factors.into_iter().filter(|(_, p)| *p != 0) {
            let f = if p == 1 { base } else { Arc::new(Node::Pow(base, p)) };
            out = Some(match out {
                None => f,
                Some(acc) => Arc::new(Node::Binary(BinaryOp::Mul, acc, f)),
            });
        }
        match out {
            None => Arc::new(Node::Const(self.coef)),
            Some(acc) => scaled(self.coef, acc),
        }
    }
}
