//! Fully parenthesized printer for surface programs; `parse` reads its output back.

use super::ast::*;
use crate::ir::UnaryOp;

fn dims(s: &[usize]) -> String {
    s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn reals(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

pub fn print_type(t: &TypeExpr) -> String {
    match t {
        TypeExpr::Tensor(s) => format!("tensor[{}]", dims(s)),
        TypeExpr::Field { k, dim, shape } => format!("field#{k}({dim})[{}]", dims(shape)),
        TypeExpr::Image { dim, shape } => format!("image({dim})[{}]", dims(shape)),
    }
}

pub fn print_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Num(v, true) => format!("{v:?}"),
        ExprKind::Num(v, false) => format!("{}", *v as u64),
        ExprKind::Ident(s) => s.clone(),
        ExprKind::TensorLit(es) => format!("[{}]", es.iter().map(print_expr).collect::<Vec<_>>().join(", ")),
        ExprKind::Neg(x) => format!("-({})", print_expr(x)),
        ExprKind::Binary(op, a, b) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Dot => "•",
                BinOp::Outer => "⊗",
                BinOp::Cross => "×",
                BinOp::Conv => "⊛",
            };
            format!("({}) {sym} ({})", print_expr(a), print_expr(b))
        }
        ExprKind::Diff(op, x) => {
            let sym = match op {
                DiffOp::Grad => "∇",
                DiffOp::Curl => "∇×",
                DiffOp::Div => "∇•",
                DiffOp::Outer => "∇⊗",
            };
            format!("{sym}({})", print_expr(x))
        }
        ExprKind::Call(f, args) => {
            let name = match f {
                Func::Math(UnaryOp::Neg) => "neg".to_string(),
                Func::Math(op) => op.name(),
                Func::Trace => "trace".into(),
                Func::Transpose => "transpose".into(),
            };
            format!("{name}({})", args.iter().map(print_expr).collect::<Vec<_>>().join(", "))
        }
        ExprKind::Pow(x, n) => format!("pow({}, {n})", print_expr(x)),
        ExprKind::Norm(x) => format!("|{}|", print_expr(x)),
        ExprKind::Identity(IdentityArg::Size(n)) => format!("identity[{n}]"),
        ExprKind::Identity(IdentityArg::Like(s)) => format!("identity[{s}]"),
        ExprKind::Probe(f, x) => format!("({})({})", print_expr(f), print_expr(x)),
        ExprKind::Index(x, ix) => format!("({})[{}]", print_expr(x), dims(ix)),
    }
}

pub fn print_program(p: &SurfaceProgram) -> String {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            Decl::Input { ty, name, default, .. } => {
                out += &format!("input {} {name}", print_type(ty));
                if let Some(e) = default {
                    out += &format!(" = {}", print_expr(e));
                }
            }
            Decl::Let { ty, name, value, .. } => out += &format!("{} {name} = {}", print_type(ty), print_expr(value)),
            Decl::Output { ty, name, value, domain, .. } => {
                out += &format!("output {} {name} = {}", print_type(ty), print_expr(value));
                match domain {
                    Some(DomainSpec::Grid { lo, hi, counts }) => {
                        out += &format!(" over grid([{}], [{}], [{}])", reals(lo), reals(hi), dims(counts))
                    }
                    Some(DomainSpec::Points(f)) => out += &format!(" over points({f:?})"),
                    None => {}
                }
            }
        }
        out += ";\n";
    }
    out
}
