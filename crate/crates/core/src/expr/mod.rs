//! Scalar expressions over ambient coordinates `x1..xN`.
//!
//! Objectives and constraints are written in a small arithmetic language:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          right-associative, constant exponent
//! atom   := number | xK | func '(' expr ')' | 'gdist' '(' c1, ..., cN ')' | '(' expr ')'
//! func   := sin cos tan sinh cosh tanh exp log sqrt abs
//! ```
//!
//! `gdist(c1,...,cN)` is the geodesic distance from the evaluation point to
//! the fixed point with ambient coordinates `c`, measured on the manifold the
//! expression is evaluated on.

mod eval;
mod parser;

use std::fmt;

use thiserror::Error;

pub use eval::{riemannian_grad, FD_STEP};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {expected} near `{excerpt}`")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("evaluation error at byte {offset}: {message}")]
pub struct EvalError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Number(f64),
    /// Zero-based ambient coordinate index (`x1` is 0).
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    Gdist(Vec<f64>),
}

/// AST node with the byte offset it was parsed from.
///
/// Equality compares structure only; offsets are location metadata.
#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub offset: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        use NodeKind::*;
        match (&self.kind, &other.kind) {
            (Number(a), Number(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) => a == b,
            (Neg(a), Neg(b)) => a == b,
            (Binary(o1, l1, r1), Binary(o2, l2, r2)) => o1 == o2 && l1 == l2 && r1 == r2,
            (Call(f1, a1), Call(f2, a2)) => f1 == f2 && a1 == a2,
            (Gdist(a), Gdist(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Node {
    pub(crate) fn is_constant(&self) -> bool {
        match &self.kind {
            NodeKind::Number(_) => true,
            NodeKind::Var(_) | NodeKind::Gdist(_) => false,
            NodeKind::Neg(a) | NodeKind::Call(_, a) => a.is_constant(),
            NodeKind::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Number(v) => write!(f, "{v:?}"),
            NodeKind::Var(i) => write!(f, "x{}", i + 1),
            NodeKind::Neg(a) => write!(f, "(-{a})"),
            NodeKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            NodeKind::Call(func, a) => write!(f, "{}({a})", func.name()),
            NodeKind::Gdist(c) => {
                f.write_str("gdist(")?;
                for (i, v) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed expression bound to an ambient dimension.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    ambient_dim: usize,
    source: String,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_dim == other.ambient_dim && self.root == other.root
    }
}

impl Expr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// The text this expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Fully parenthesized canonical text; reparses to an identical AST.
    pub fn canonical(&self) -> String {
        self.root.to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
