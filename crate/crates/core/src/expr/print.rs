//! Canonical printer. Output is accepted by the parser and re-parses to the
//! identical tree (right operands are always parenthesized when they bind no
//! tighter than their parent, so associativity is never relied upon).

use std::fmt::Write;

use super::{BinaryOp, Node, UnaryOp};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Const(c) if c.is_sign_negative() => PREC_NEG,
        Node::Const(_) | Node::Var(_) => PREC_ATOM,
        Node::Unary(UnaryOp::Neg, _) => PREC_NEG,
        Node::Unary(..) => PREC_ATOM,
        Node::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => PREC_ADD,
        Node::Binary(..) => PREC_MUL,
        Node::Pow(..) => PREC_POW,
    }
}

pub(crate) fn node_to_string(node: &Node, vars: &[String]) -> String {
    let mut out = String::new();
    write_node(&mut out, node, vars);
    out
}

fn write_number(out: &mut String, c: f64) {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        let _ = write!(out, "{}", c as i64);
    } else {
        let _ = write!(out, "{c:?}");
    }
}

fn write_child(out: &mut String, node: &Node, vars: &[String], min_prec: u8) {
    if precedence(node) < min_prec {
        out.push('(');
        write_node(out, node, vars);
        out.push(')');
    } else {
        write_node(out, node, vars);
    }
}

fn write_node(out: &mut String, node: &Node, vars: &[String]) {
    match node {
        Node::Const(c) => {
            if c.is_sign_negative() && *c != 0.0 {
                out.push('-');
                write_number(out, -c);
            } else {
                write_number(out, c.abs());
            }
        }
        Node::Var(i) => out.push_str(&vars[*i]),
        Node::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            write_child(out, a, vars, PREC_NEG + 1);
        }
        Node::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            write_node(out, a, vars);
            out.push(')');
        }
        Node::Binary(op, a, b) => {
            let (prec, sym) = match op {
                BinaryOp::Add => (PREC_ADD, " + "),
                BinaryOp::Sub => (PREC_ADD, " - "),
                BinaryOp::Mul => (PREC_MUL, " * "),
                BinaryOp::Div => (PREC_MUL, " / "),
            };
            write_child(out, a, vars, prec);
            out.push_str(sym);
            write_child(out, b, vars, prec + 1);
        }
        Node::Pow(a, n) => {
            write_child(out, a, vars, PREC_ATOM);
            if *n < 0 {
                let _ = write!(out, "^({n})");
            } else {
                let _ = write!(out, "^{n}");
            }
        }
    }
}
