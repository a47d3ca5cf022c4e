use crate::ir::Expr;

/// Normal form of a tensor-valued body: no derivatives, field leaves or lifts;
/// every probe sits directly on a convolution and every convolution is probed.
pub fn is_normal(e: &Expr) -> bool {
    match e {
        Expr::Partial { .. } | Expr::Field { .. } | Expr::Lift(_) | Expr::Conv { .. } => false,
        Expr::Probe { field, .. } => matches!(**field, Expr::Conv { .. }),
        other => other.children().iter().all(|c| is_normal(c)),
    }
}

/// The first offending subterm, for diagnostics.
pub fn first_violation(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Partial { .. } | Expr::Field { .. } | Expr::Lift(_) | Expr::Conv { .. } => Some(e),
        Expr::Probe { field, .. } if !matches!(**field, Expr::Conv { .. }) => Some(e),
        Expr::Probe { .. } => None,
        other => other.children().into_iter().find_map(first_violation),
    }
}
