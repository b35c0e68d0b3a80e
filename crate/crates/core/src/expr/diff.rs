use std::sync::Arc;

use super::{BinaryOp, Node, UnaryOp};

fn c(v: f64) -> Arc<Node> {
    Arc::new(Node::Const(v))
}

fn bin(op: BinaryOp, a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    Arc::new(Node::Binary(op, a, b))
}

fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    bin(BinaryOp::Mul, a, b)
}

fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    bin(BinaryOp::Div, a, b)
}

/// Unsimplified derivative of `node` with respect to variable `var`.
pub(super) fn derivative(node: &Arc<Node>, var: usize) -> Arc<Node> {
    match &**node {
        Node::Const(_) => c(0.0),
        Node::Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
        Node::Unary(op, a) => {
            let da = derivative(a, var);
            match op {
                UnaryOp::Neg => Arc::new(Node::Unary(UnaryOp::Neg, da)),
                UnaryOp::Exp => mul(Arc::clone(node), da),
                UnaryOp::Ln => div(da, Arc::clone(a)),
                UnaryOp::Sin => mul(Arc::new(Node::Unary(UnaryOp::Cos, Arc::clone(a))), da),
                UnaryOp::Cos => Arc::new(Node::Unary(
                    UnaryOp::Neg,
                    mul(Arc::new(Node::Unary(UnaryOp::Sin, Arc::clone(a))), da),
                )),
                UnaryOp::Sqrt => div(da, mul(c(2.0), Arc::clone(node))),
            }
        }
        Node::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            match op {
                BinaryOp::Add => bin(BinaryOp::Add, da, db),
                BinaryOp::Sub => bin(BinaryOp::Sub, da, db),
                BinaryOp::Mul => bin(
                    BinaryOp::Add,
                    mul(da, Arc::clone(b)),
                    mul(Arc::clone(a), db),
                ),
                BinaryOp::Div => div(
                    bin(
                        BinaryOp::Sub,
                        mul(da, Arc::clone(b)),
                        mul(Arc::clone(a), db),
                    ),
                    Arc::new(Node::Pow(Arc::clone(b), 2)),
                ),
            }
        }
        Node::Pow(a, n) => match *n {
            0 => c(0.0),
            1 => derivative(a, var),
            n => mul(
                mul(c(n as f64), Arc::new(Node::Pow(Arc::clone(a), n - 1))),
                derivative(a, var),
            ),
        },
    }
}
