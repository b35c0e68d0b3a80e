//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= ['-'] INT | '(' ['-'] INT ')'
//! primary := NUMBER | 'pi' | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! Implicit multiplication is rejected; `^` takes integer exponents only.

use std::sync::Arc;

use thiserror::Error;

use super::{BinaryOp, Expression, Node, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("invalid variable list: {0}")]
    InvalidVariables(String),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                Some(*offset)
            }
            ParseError::InvalidVariables(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => return self.number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < bytes.len() && bytes[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < bytes.len() && (bytes[p] == b'+' || bytes[p] == b'-') {
                p += 1;
            }
            if p < bytes.len() && bytes[p].is_ascii_digit() {
                self.pos = p;
                digits(&mut self.pos);
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(|v| (Tok::Num(v), start))
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    vars: Arc<[String]>,
}

pub(super) fn parse(source: &str, vars: Arc<[String]>) -> Result<Expression, ParseError> {
    if vars.is_empty() {
        return Err(ParseError::InvalidVariables("no variables declared".into()));
    }
    for (i, v) in vars.iter().enumerate() {
        let valid = v
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && v.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid || UnaryOp::from_name(v).is_some() || v == "pi" {
            return Err(ParseError::InvalidVariables(format!("`{v}` is not a usable name")));
        }
        if vars[..i].contains(v) {
            return Err(ParseError::InvalidVariables(format!("`{v}` declared twice")));
        }
    }
    let mut lexer = Lexer { src: source, pos: 0 };
    let (tok, offset) = lexer.next_token()?;
    let mut p = Parser {
        lexer,
        tok,
        offset,
        vars,
    };
    let node = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    Ok(Expression::from_arc(node, p.vars))
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self) -> ParseError {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            t => format!("unexpected token {t:?}"),
        };
        ParseError::Syntax {
            offset: self.offset,
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.tok == tok {
            self.bump()
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Arc::new(Node::Binary(op, lhs, rhs));
        }
    }

    fn term(&mut self) -> Result<Arc<Node>, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                Tok::Num(_) | Tok::Ident(_) | Tok::LParen => {
                    return Err(ParseError::Syntax {
                        offset: self.offset,
                        message: "implicit multiplication is not allowed".into(),
                    })
                }
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Arc::new(Node::Binary(op, lhs, rhs));
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>, ParseError> {
        if self.tok == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Arc::new(Node::Unary(UnaryOp::Neg, inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Arc<Node>, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let n = self.exponent()?;
        Ok(Arc::new(Node::Pow(base, n)))
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let parenthesized = self.tok == Tok::LParen;
        if parenthesized {
            self.bump()?;
        }
        let negative = self.tok == Tok::Minus;
        if negative {
            self.bump()?;
        }
        let offset = self.offset;
        let value = match self.tok {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => {
                return Err(ParseError::Syntax {
                    offset,
                    message: "integer exponent expected".into(),
                })
            }
        };
        // reject `x^2.0` and `x^2e0`: only plain digit runs count as integers
        let text = &self.lexer.src[offset..self.lexer.pos];
        if !text.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ParseError::Syntax {
                offset,
                message: "integer exponent expected".into(),
            });
        }
        self.bump()?;
        if parenthesized {
            self.expect(Tok::RParen)?;
        }
        Ok(if negative { -value } else { value })
    }

    fn primary(&mut self) -> Result<Arc<Node>, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Arc::new(Node::Const(v)))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                self.bump()?;
                if let Some(op) = UnaryOp::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Arc::new(Node::Unary(op, arg)));
                }
                if name == "pi" {
                    return Ok(Arc::new(Node::Const(std::f64::consts::PI)));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Arc::new(Node::Var(i))),
                    None => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}
