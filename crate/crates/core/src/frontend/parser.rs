//! Recursive-descent parser.

use super::ast::*;
use super::error::FrontendError;
use super::lexer::{tokenize, Tok};
use crate::ir::UnaryOp;

pub fn parse(src: &str) -> Result<SurfaceProgram, FrontendError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut decls = Vec::new();
    while p.peek() != &Tok::Eof {
        decls.push(p.decl()?);
    }
    Ok(SurfaceProgram { decls })
}

/// Parses a single expression (the whole input must be consumed).
pub fn parse_expr(src: &str) -> Result<Expr, FrontendError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

fn math_func(name: &str) -> Option<Func> {
    Some(match name {
        "sqrt" => Func::Math(UnaryOp::Sqrt),
        "exp" => Func::Math(UnaryOp::Exp),
        "sin" => Func::Math(UnaryOp::Sin),
        "cos" => Func::Math(UnaryOp::Cos),
        "tan" => Func::Math(UnaryOp::Tan),
        "asin" => Func::Math(UnaryOp::Asin),
        "acos" => Func::Math(UnaryOp::Acos),
        "atan" => Func::Math(UnaryOp::Atan),
        "trace" => Func::Trace,
        "transpose" => Func::Transpose,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, what: &str) -> Result<T, FrontendError> {
        Err(FrontendError::syntax(self.span(), format!("expected {what}, found {}", self.peek().describe())))
    }

    fn expect(&mut self, t: &Tok) -> Result<Span, FrontendError> {
        if self.peek() == t {
            Ok(self.bump().1)
        } else if t == &Tok::Eof {
            self.error("end of input")
        } else {
            self.error(&format!("`{}`", t.symbol()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("an identifier"),
        }
    }

    fn nat(&mut self) -> Result<usize, FrontendError> {
        match *self.peek() {
            Tok::Num(v, false) if v >= 0.0 && v.fract() == 0.0 => {
                self.bump();
                Ok(v as usize)
            }
            _ => self.error("a natural number"),
        }
    }

    fn real(&mut self) -> Result<f64, FrontendError> {
        let neg = if self.peek() == &Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match *self.peek() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.error("a number"),
        }
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T, FrontendError>) -> Result<Vec<T>, FrontendError> {
        self.expect(&Tok::LBrack)?;
        let mut out = Vec::new();
        if self.peek() != &Tok::RBrack {
            out.push(item(self)?);
            while self.peek() == &Tok::Comma {
                self.bump();
                out.push(item(self)?);
            }
        }
        self.expect(&Tok::RBrack)?;
        Ok(out)
    }

    fn ty(&mut self) -> Result<TypeExpr, FrontendError> {
        let name = self.ident()?;
        match name.as_str() {
            "tensor" => Ok(TypeExpr::Tensor(self.list(Self::nat)?)),
            "field" => {
                self.expect(&Tok::Hash)?;
                let k = self.nat()? as u32;
                self.expect(&Tok::LParen)?;
                let dim = self.nat()?;
                self.expect(&Tok::RParen)?;
                let shape = self.list(Self::nat)?;
                Ok(TypeExpr::Field { k, dim, shape })
            }
            "image" => {
                self.expect(&Tok::LParen)?;
                let dim = self.nat()?;
                self.expect(&Tok::RParen)?;
                let shape = self.list(Self::nat)?;
                Ok(TypeExpr::Image { dim, shape })
            }
            _ => {
                self.pos -= 1;
                self.error("a type")
            }
        }
    }

    fn decl(&mut self) -> Result<Decl, FrontendError> {
        let span = self.span();
        if self.is_word("input") {
            self.bump();
            let ty = self.ty()?;
            let name = self.ident()?;
            let default = if self.peek() == &Tok::Assign {
                self.bump();
                Some(self.expr()?)
            } else {
                None
            };
            self.expect(&Tok::Semi)?;
            return Ok(Decl::Input { ty, name, default, span });
        }
        if self.is_word("output") {
            self.bump();
            let ty = self.ty()?;
            let name = self.ident()?;
            self.expect(&Tok::Assign)?;
            let value = self.expr()?;
            let domain = if self.is_word("over") {
                self.bump();
                Some(self.domain()?)
            } else {
                None
            };
            self.expect(&Tok::Semi)?;
            return Ok(Decl::Output { ty, name, value, domain, span });
        }
        if !(self.is_word("tensor") || self.is_word("field") || self.is_word("image")) {
            return self.error("a declaration");
        }
        let ty = self.ty()?;
        let name = self.ident()?;
        self.expect(&Tok::Assign)?;
        let value = self.expr()?;
        self.expect(&Tok::Semi)?;
        Ok(Decl::Let { ty, name, value, span })
    }

    fn domain(&mut self) -> Result<DomainSpec, FrontendError> {
        if self.is_word("grid") {
            self.bump();
            self.expect(&Tok::LParen)?;
            let lo = self.list(Self::real)?;
            self.expect(&Tok::Comma)?;
            let hi = self.list(Self::real)?;
            self.expect(&Tok::Comma)?;
            let counts = self.list(Self::nat)?;
            self.expect(&Tok::RParen)?;
            Ok(DomainSpec::Grid { lo, hi, counts })
        } else if self.is_word("points") {
            self.bump();
            self.expect(&Tok::LParen)?;
            let file = match self.peek().clone() {
                Tok::Str(s) => {
                    self.bump();
                    s
                }
                _ => return self.error("a file name string"),
            };
            self.expect(&Tok::RParen)?;
            Ok(DomainSpec::Points(file))
        } else {
            self.error("`grid` or `points`")
        }
    }

    pub fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let span = self.bump().1;
            let rhs = self.multiplicative()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn mul_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Dot => BinOp::Dot,
            Tok::Outer => BinOp::Outer,
            Tok::Cross => BinOp::Cross,
            Tok::Conv => BinOp::Conv,
            Tok::Ident(w) => match w.as_str() {
                "dot" => BinOp::Dot,
                "outer" => BinOp::Outer,
                "cross" => BinOp::Cross,
                "conv" => BinOp::Conv,
                _ => return None,
            },
            _ => return None,
        })
    }

    fn multiplicative(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.mul_op() {
            let span = self.bump().1;
            let rhs = self.unary()?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        if self.peek() == &Tok::Minus {
            let span = self.bump().1;
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.prefix()?;
        loop {
            match self.peek() {
                Tok::LParen => {
                    let span = self.bump().1;
                    let x = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    e = Expr::new(ExprKind::Probe(Box::new(e), Box::new(x)), span);
                }
                Tok::LBrack => {
                    let span = self.span();
                    let ix = self.list(Self::nat)?;
                    if ix.is_empty() {
                        return Err(FrontendError::syntax(span, "empty index list"));
                    }
                    e = Expr::new(ExprKind::Index(Box::new(e), ix), span);
                }
                _ => return Ok(e),
            }
        }
    }

    fn prefix(&mut self) -> Result<Expr, FrontendError> {
        let op = match self.peek() {
            Tok::Nabla => Some(DiffOp::Grad),
            Tok::NablaCross => Some(DiffOp::Curl),
            Tok::NablaDot => Some(DiffOp::Div),
            Tok::NablaOuter => Some(DiffOp::Outer),
            Tok::Ident(w) => match w.as_str() {
                "grad" => Some(DiffOp::Grad),
                "curl" => Some(DiffOp::Curl),
                "div" => Some(DiffOp::Div),
                _ => None,
            },
            _ => None,
        };
        match op {
            Some(op) => {
                let span = self.bump().1;
                let e = self.prefix()?;
                Ok(Expr::new(ExprKind::Diff(op, Box::new(e)), span))
            }
            None => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(v, real) => {
                self.bump();
                Ok(Expr::new(ExprKind::Num(v, real), span))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Bar => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::Bar)?;
                Ok(Expr::new(ExprKind::Norm(Box::new(e)), span))
            }
            Tok::LBrack => {
                let items = self.list(Self::expr)?;
                if items.is_empty() {
                    return Err(FrontendError::syntax(span, "empty tensor literal"));
                }
                Ok(Expr::new(ExprKind::TensorLit(items), span))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = math_func(&name) {
                    self.expect(&Tok::LParen)?;
                    let e = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    return Ok(Expr::new(ExprKind::Call(f, vec![e]), span));
                }
                match name.as_str() {
                    "norm" => {
                        self.expect(&Tok::LParen)?;
                        let e = self.expr()?;
                        self.expect(&Tok::RParen)?;
                        Ok(Expr::new(ExprKind::Norm(Box::new(e)), span))
                    }
                    "pow" => {
                        self.expect(&Tok::LParen)?;
                        let e = self.expr()?;
                        self.expect(&Tok::Comma)?;
                        let neg = if self.peek() == &Tok::Minus {
                            self.bump();
                            true
                        } else {
                            false
                        };
                        let n = self.nat()? as i32;
                        self.expect(&Tok::RParen)?;
                        Ok(Expr::new(ExprKind::Pow(Box::new(e), if neg { -n } else { n }), span))
                    }
                    "identity" => {
                        self.expect(&Tok::LBrack)?;
                        let arg = match self.peek().clone() {
                            Tok::Ident(s) => {
                                self.bump();
                                IdentityArg::Like(s)
                            }
                            _ => IdentityArg::Size(self.nat()?),
                        };
                        self.expect(&Tok::RBrack)?;
                        Ok(Expr::new(ExprKind::Identity(arg), span))
                    }
                    _ => Ok(Expr::new(ExprKind::Ident(name), span)),
                }
            }
            _ => self.error("an expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_definition() {
        let p = parse("field#2(3)[] E = -∇(|∇F|) • ∇F/|∇F|;").unwrap();
        let Decl::Let { ty, name, value, .. } = &p.decls[0] else { panic!() };
        assert_eq!(ty, &TypeExpr::Field { k: 2, dim: 3, shape: vec![] });
        assert_eq!(name, "E");
        assert!(matches!(value.kind, ExprKind::Binary(BinOp::Div, _, _)));
    }

    #[test]
    fn helicity_definition() {
        let p = parse("field#3(3)[] H = (V/|V|) • (∇×V/|∇×V|);").unwrap();
        let Decl::Let { value, .. } = &p.decls[0] else { panic!() };
        let ExprKind::Binary(BinOp::Dot, _, rhs) = &value.kind else { panic!() };
        let ExprKind::Binary(BinOp::Div, curl, _) = &rhs.kind else { panic!() };
        assert!(matches!(curl.kind, ExprKind::Diff(DiffOp::Curl, _)));
    }

    #[test]
    fn empty_expression_is_a_syntax_error() {
        assert!(matches!(parse("tensor[3] x = ;"), Err(FrontendError::Syntax { line: 1, col: 15, .. })));
    }

    #[test]
    fn probe_binds_after_gradient() {
        let e = parse_expr("∇F(pos)").unwrap();
        let ExprKind::Probe(f, _) = &e.kind else { panic!() };
        assert!(matches!(f.kind, ExprKind::Diff(DiffOp::Grad, _)));
    }

    #[test]
    fn ascii_aliases_match_unicode() {
        let a = parse_expr("grad F dot curl G + norm(x) cross y").unwrap().strip_spans();
        let b = parse_expr("∇F • ∇×G + |x| × y").unwrap().strip_spans();
        assert_eq!(a, b);
    }
}
