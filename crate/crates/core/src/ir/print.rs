//! Pretty printer (λ(params)⟨body⟩_{σ} notation, with an ASCII fallback) and
//! the S-expression dump used by golden tests. The pretty printer shows
//! constant indices 1-based; the S-expression dump is 0-based like the IR.

use std::fmt::Write;

use super::expr::{BinaryOp, EinOp, Expr, Index, IndexVar, ParamKind, UnaryOp};

const NAMES: [&str; 10] = ["i", "j", "k", "l", "m", "n", "p", "q", "r", "s"];

pub fn var_name(v: IndexVar) -> String {
    match NAMES.get(v.0 as usize) {
        Some(n) => (*n).to_string(),
        None => format!("i{}", v.0),
    }
}

fn param_name(op: &EinOp, p: usize) -> String {
    let prefix = match op.params.get(p) {
        Some(ParamKind::Tensor(_)) => "T",
        Some(ParamKind::Field { .. }) => "F",
        Some(ParamKind::Image { .. }) => "V",
        Some(ParamKind::Kernel(_)) => "H",
        None => "?",
    };
    format!("{prefix}{p}")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Unicode,
    Ascii,
}

pub fn pretty(op: &EinOp, style: Style) -> String {
    let params: Vec<String> = (0..op.params.len()).map(|p| param_name(op, p)).collect();
    let map: Vec<String> = op
        .index_map
        .iter()
        .map(|&(v, b)| match style {
            Style::Unicode => format!("{}≤{}", var_name(v), b),
            Style::Ascii => format!("{}<={}", var_name(v), b),
        })
        .collect();
    let body = Printer { op, style }.expr(&op.body);
    match style {
        Style::Unicode => format!("λ({})⟨{}⟩_{{{}}}", params.join(","), body, map.join(",")),
        Style::Ascii => format!("lambda({})<{}>_{{{}}}", params.join(","), body, map.join(",")),
    }
}

struct Printer<'a> {
    op: &'a EinOp,
    style: Style,
}

impl Printer<'_> {
    fn ix(&self, i: Index) -> String {
        match i {
            Index::Var(v) => var_name(v),
            Index::Const(c) => (c + 1).to_string(),
        }
    }

    fn ixs(&self, is: &[Index]) -> String {
        is.iter().map(|&i| self.ix(i)).collect::<Vec<_>>().join(",")
    }

    fn sub(&self, is: &[Index]) -> String {
        if is.is_empty() {
            String::new()
        } else {
            format!("_{{{}}}", self.ixs(is))
        }
    }

    fn expr(&self, e: &Expr) -> String {
        let uni = self.style == Style::Unicode;
        match e {
            Expr::Const(c) => format!("{c}"),
            Expr::Tensor { param, indices } | Expr::Field { param, indices } => {
                format!("{}{}", param_name(self.op, *param), self.sub(indices))
            }
            Expr::Delta(a, b) => format!("{}{}", if uni { "δ" } else { "delta" }, self.sub(&[*a, *b])),
            Expr::Epsilon2(a, b) => format!("{}{}", if uni { "ε" } else { "eps" }, self.sub(&[*a, *b])),
            Expr::Epsilon3(a, b, c) => format!("{}{}", if uni { "ε" } else { "eps" }, self.sub(&[*a, *b, *c])),
            Expr::Unary(UnaryOp::Neg, x) => format!("-{}", self.atom(x)),
            Expr::Unary(UnaryOp::Sqrt, x) if uni => format!("√({})", self.expr(x)),
            Expr::Unary(UnaryOp::Pow(n), x) => format!("{}^{}", self.atom(x), n),
            Expr::Unary(op, x) => format!("{}({})", op.name(), self.expr(x)),
            Expr::Binary(op, a, b) => {
                let sym = match (op, uni) {
                    (BinaryOp::Mul, true) => "·",
                    (op, _) => op.symbol(),
                };
                format!("{}{}{}", self.atom(a), sym, self.atom(b))
            }
            Expr::Sum { var, bound, body } => {
                if uni {
                    format!("Σ_{{{}≤{}}}{}", var_name(*var), bound, self.atom(body))
                } else {
                    format!("sum_{{{}<={}}}{}", var_name(*var), bound, self.atom(body))
                }
            }
            Expr::Probe { field, pos } => format!("{}@{}", self.atom(field), param_name(self.op, *pos)),
            Expr::Lift(x) => format!("lift({})", self.expr(x)),
            Expr::Conv { image, comps, kernel, derivs } => {
                let h = param_name(self.op, *kernel);
                let hd = if derivs.is_empty() { h } else { format!("{h}^{{{}}}", self.ixs(derivs)) };
                format!("{}{}{}{}", param_name(self.op, *image), self.sub(comps), if uni { "⊛" } else { "(*)" }, hd)
            }
            Expr::Partial { axis, body } => {
                format!("{}_{}{}", if uni { "∂" } else { "d" }, self.ix(*axis), self.atom(body))
            }
            Expr::Voxel { image, base, offsets, comps, shift } => format!(
                "{}[{}+({})+{}]{}",
                param_name(self.op, *image),
                param_name(self.op, *base),
                self.ixs(offsets),
                shift,
                self.sub(comps)
            ),
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => format!(
                "{}^({})[{}_{} - ({}+{})]",
                param_name(self.op, *kernel),
                self.ixs(derivs),
                param_name(self.op, *frac),
                axis + 1,
                self.ix(*offset),
                shift
            ),
        }
    }

    fn atom(&self, e: &Expr) -> String {
        match e {
            Expr::Binary(..) | Expr::Sum { .. } => format!("({})", self.expr(e)),
            _ => self.expr(e),
        }
    }
}

fn sx_ix(i: Index) -> String {
    match i {
        Index::Var(v) => format!("i{}", v.0),
        Index::Const(c) => format!("#{c}"),
    }
}

fn sx_ixs(is: &[Index]) -> String {
    let parts: Vec<String> = is.iter().map(|&i| sx_ix(i)).collect();
    format!("({})", parts.join(" "))
}

fn sx_kind(k: &ParamKind) -> String {
    let dims = |s: &[usize]| s.iter().map(|d| format!(" {d}")).collect::<String>();
    match k {
        ParamKind::Tensor(s) => format!("(tensor{})", dims(s)),
        ParamKind::Field { k, dim, shape } => format!("(field {k} {dim}{})", dims(shape)),
        ParamKind::Image { dim, shape } => format!("(image {dim}{})", dims(shape)),
        ParamKind::Kernel(kk) => format!("(kernel {kk})"),
    }
}

/// Canonical S-expression for an expression tree.
pub fn sexpr_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_sx(e, &mut s);
    s
}

fn write_sx(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => {
            let _ = write!(out, "(const {c:?})");
        }
        Expr::Tensor { param, indices } => {
            let _ = write!(out, "(T {param} {})", sx_ixs(indices));
        }
        Expr::Field { param, indices } => {
            let _ = write!(out, "(F {param} {})", sx_ixs(indices));
        }
        Expr::Delta(a, b) => {
            let _ = write!(out, "(delta {} {})", sx_ix(*a), sx_ix(*b));
        }
        Expr::Epsilon2(a, b) => {
            let _ = write!(out, "(eps {} {})", sx_ix(*a), sx_ix(*b));
        }
        Expr::Epsilon3(a, b, c) => {
            let _ = write!(out, "(eps {} {} {})", sx_ix(*a), sx_ix(*b), sx_ix(*c));
        }
        Expr::Unary(op, x) => {
            let _ = write!(out, "({} ", op.name());
            write_sx(x, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let _ = write!(out, "({} ", op.symbol());
            write_sx(a, out);
            out.push(' ');
            write_sx(b, out);
            out.push(')');
        }
        Expr::Sum { var, bound, body } => {
            let _ = write!(out, "(sum i{} {bound} ", var.0);
            write_sx(body, out);
            out.push(')');
        }
        Expr::Probe { field, pos } => {
            let _ = write!(out, "(probe {pos} ");
            write_sx(field, out);
            out.push(')');
        }
        Expr::Lift(x) => {
            out.push_str("(lift ");
            write_sx(x, out);
            out.push(')');
        }
        Expr::Conv { image, comps, kernel, derivs } => {
            let _ = write!(out, "(conv {image} {kernel} {} {})", sx_ixs(comps), sx_ixs(derivs));
        }
        Expr::Partial { axis, body } => {
            let _ = write!(out, "(partial {} ", sx_ix(*axis));
            write_sx(body, out);
            out.push(')');
        }
        Expr::Voxel { image, base, offsets, comps, shift } => {
            let _ = write!(out, "(voxel {image} {base} {shift} {} {})", sx_ixs(offsets), sx_ixs(comps));
        }
        Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => {
            let _ = write!(
                out,
                "(kweight {kernel} {frac} {axis} {shift} {} {})",
                sx_ix(*offset),
                sx_ixs(derivs)
            );
        }
    }
}

/// S-expression dump of a whole operator.
pub fn sexpr(op: &EinOp) -> String {
    let params: Vec<String> = op.params.iter().map(sx_kind).collect();
    let map: Vec<String> = op.index_map.iter().map(|(v, b)| format!("(i{} {b})", v.0)).collect();
    format!("(ein (params {}) (map {}) {})", params.join(" "), map.join(" "), sexpr_expr(&op.body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_product_rendering() {
        let i = IndexVar(0);
        let body = Expr::sum(i, 3, Expr::mul(Expr::tensor(0, vec![Index::Var(i)]), Expr::tensor(1, vec![Index::Var(i)])));
        let op = EinOp::new(vec![ParamKind::Tensor(vec![3]), ParamKind::Tensor(vec![3])], body, vec![]);
        assert_eq!(pretty(&op, Style::Unicode), "λ(T0,T1)⟨Σ_{i≤3}(T0_{i}·T1_{i})⟩_{}");
        assert_eq!(pretty(&op, Style::Ascii), "lambda(T0,T1)<sum_{i<=3}(T0_{i}*T1_{i})>_{}");
        assert_eq!(
            sexpr(&op),
            "(ein (params (tensor 3) (tensor 3)) (map ) (sum i0 3 (* (T 0 (i0)) (T 1 (i0)))))"
        );
    }

    #[test]
    fn constants_print_one_based() {
        let op = EinOp::new(vec![ParamKind::Tensor(vec![3, 3])], Expr::tensor(0, vec![Index::Const(0), Index::Const(2)]), vec![]);
        assert_eq!(pretty(&op, Style::Ascii), "lambda(T0)<T0_{1,3}>_{}");
    }
}
