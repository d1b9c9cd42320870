use super::eval::eval_node;
use super::{BinOp, Expr, Func, Node, NodeKind, ParseError};
use crate::manifold::ManifoldKind;

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
    Comma,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::End => "end of input".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
    }
}

fn error(src: &str, offset: usize, expected: impl Into<String>) -> ParseError {
    let offset = offset.min(src.len());
    let end = (offset..=src.len()).find(|&i| i >= offset + 12 || i == src.len()).unwrap_or(src.len());
    let end = (end..=src.len()).find(|&i| src.is_char_boundary(i)).unwrap_or(src.len());
    ParseError { offset, expected: expected.into(), excerpt: src[offset..end].to_string() }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        out.push((Tok::Num(v), start));
                        continue;
                    }
                    _ => return Err(error(src, start, "a finite decimal number")),
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => return Err(error(src, start, "an operator, number, identifier or parenthesis")),
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ambient_dim: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<usize, ParseError> {
        if *self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(error(self.src, self.offset(), format!("{what}, found {}", describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.term()?;
            lhs = Node { kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), offset };
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let (_, offset) = self.bump();
            let rhs = self.unary()?;
            lhs = Node { kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)), offset };
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            let (_, offset) = self.bump();
            let inner = self.unary()?;
            return Ok(Node { kind: NodeKind::Neg(Box::new(inner)), offset });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let (_, offset) = self.bump();
        let exp_offset = self.offset();
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(error(self.src, exp_offset, "a constant exponent"));
        }
        Ok(Node { kind: NodeKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)), offset })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node { kind: NodeKind::Number(v), offset })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                self.identifier(&name, offset)
            }
            other => Err(error(
                self.src,
                offset,
                format!("a number, variable, function call or `(`, found {}", describe(&other)),
            )),
        }
    }

    fn identifier(&mut self, name: &str, offset: usize) -> Result<Node, ParseError> {
        if let Some(index) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if index == 0 || index > self.ambient_dim {
                return Err(error(
                    self.src,
                    offset,
                    format!("a variable between x1 and x{}", self.ambient_dim),
                ));
            }
            return Ok(Node { kind: NodeKind::Var(index - 1), offset });
        }
        if name == "gdist" {
            return self.gdist(offset);
        }
        let Some(func) = Func::from_name(name) else {
            return Err(error(self.src, offset, format!("a known variable or function, found `{name}`")));
        };
        self.expect(Tok::LParen, "`(` after function name")?;
        let arg = self.expr()?;
        self.expect(Tok::RParen, "`)` (functions take exactly one argument)")?;
        Ok(Node { kind: NodeKind::Call(func, Box::new(arg)), offset })
    }

    fn gdist(&mut self, offset: usize) -> Result<Node, ParseError> {
        self.expect(Tok::LParen, "`(` after gdist")?;
        let mut coords = Vec::with_capacity(self.ambient_dim);
        loop {
            let arg_offset = self.offset();
            let arg = self.expr()?;
            if !arg.is_constant() {
                return Err(error(self.src, arg_offset, "a constant gdist coordinate"));
            }
            let v = eval_node(&arg, ManifoldKind::Euclidean, &[])
                .map_err(|e| error(self.src, e.offset, format!("a finite constant ({})", e.message)))?;
            coords.push(v);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    let close = self.offset();
                    self.bump();
                    if coords.len() != self.ambient_dim {
                        return Err(error(
                            self.src,
                            close,
                            format!("{} gdist coordinates, got {}", self.ambient_dim, coords.len()),
                        ));
                    }
                    return Ok(Node { kind: NodeKind::Gdist(coords), offset });
                }
                other => {
                    return Err(error(
                        self.src,
                        self.offset(),
                        format!("`,` or `)` in gdist, found {}", describe(other)),
                    ))
                }
            }
        }
    }
}

/// Parses `source` into an expression over `x1..x{ambient_dim}`.
pub fn parse(source: &str, ambient_dim: usize) -> Result<Expr, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { src: source, toks, pos: 0, ambient_dim };
    if *p.peek() == Tok::End {
        return Err(error(source, 0, "an expression"));
    }
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(error(source, p.offset(), format!("end of input, found {}", describe(p.peek()))));
    }
    Ok(Expr { root, ambient_dim, source: source.to_string() })
}
