//! C99 serialization of a [`ScalarProgram`].
//!
//! Every output `o` of a program named `name` becomes
//!
//! ```c
//! void name_o(const double* img_X, const double* img_X_meta, ...,
//!             const double* in_Y, ..., const double* pos, double* out);
//! ```
//!
//! with one `img_`/`img_..._meta` pair per image input and one `in_` array per
//! tensor input, in declaration order. Image data is stored with components
//! fastest, then axis 0, 1, 2. `meta` holds the sizes, the row-major
//! world-to-image matrix `A` and the offset `b` (`d + d² + d` doubles). When a
//! stencil leaves the image under the error policy every output is set to NaN.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::ir::{BinaryOp, InputKind, UnaryOp};
use crate::lowering::{LowOp, ScalarProgram};
use crate::runtime::{Border, KernelKind};

fn literal(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn kernel_fn(kind: KernelKind, order: u32) -> String {
    format!("ein_{}_d{order}", kind.name())
}

fn emit_kernel(out: &mut String, kind: KernelKind, order: u32) {
    let _ = writeln!(out, "static double {}(double t)\n{{\n    double m = floor(t);", kernel_fn(kind, order));
    for piece in kind.kernel().derivative_pieces(order) {
        let mut poly = String::from("0.0");
        for &c in piece.coeffs.iter().rev() {
            poly = format!("({poly} * t + {})", literal(c));
        }
        let _ = writeln!(out, "    if (m == {}) return {poly};", literal(piece.start as f64));
    }
    out.push_str("    return 0.0;\n}\n\n");
}

const LOAD_HELPER: &str = "static int ein_load(const double* data, const double* meta, int dim, int ncomp,
                    const double* base, const long* off, int comp, int clamp, double* out)
{
    long flat = 0;
    long stride = ncomp;
    int a;
    for (a = 0; a < dim; a++) {
        long size = (long)meta[a];
        long i = (long)base[a] + off[a];
        if (i < 0 || i >= size) {
            if (!clamp) return 0;
            i = i < 0 ? 0 : size - 1;
        }
        flat += i * stride;
        stride *= size;
    }
    *out = data[flat + comp];
    return 1;
}

";

const POWI_HELPER: &str = "static double ein_powi(double x, int n)
{
    double r = 1.0;
    int k = n < 0 ? -n : n;
    while (k-- > 0) r *= x;
    return n < 0 ? 1.0 / r : r;
}

";

fn unary(op: UnaryOp, x: &str) -> String {
    match op {
        UnaryOp::Neg => format!("-{x}"),
        UnaryOp::Sqrt => format!("sqrt({x})"),
        UnaryOp::Exp => format!("exp({x})"),
        UnaryOp::Pow(n) => format!("ein_powi({x}, {n})"),
        UnaryOp::Sin => format!("sin({x})"),
        UnaryOp::Cos => format!("cos({x})"),
        UnaryOp::Tan => format!("tan({x})"),
        UnaryOp::Asin => format!("asin({x})"),
        UnaryOp::Acos => format!("acos({x})"),
        UnaryOp::Atan => format!("atan({x})"),
    }
}

/// Parameter list of every emitted function.
pub fn c_params(prog: &ScalarProgram) -> Vec<String> {
    let mut ps = Vec::new();
    for inp in &prog.inputs {
        match inp.kind {
            InputKind::Image { .. } => {
                ps.push(format!("const double* img_{}", inp.name));
                ps.push(format!("const double* img_{}_meta", inp.name));
            }
            InputKind::Tensor { .. } => ps.push(format!("const double* in_{}", inp.name)),
        }
    }
    ps.push("const double* pos".into());
    ps.push("double* out".into());
    ps
}

fn live_for(prog: &ScalarProgram, regs: &[u32]) -> Vec<bool> {
    let mut live = vec![false; prog.instrs.len()];
    for &r in regs {
        live[r as usize] = true;
    }
    for i in (0..prog.instrs.len()).rev() {
        if live[i] {
            for r in prog.instrs[i].op.operands() {
                live[r as usize] = true;
            }
        }
    }
    live
}

/// Emits a self-contained C99 translation unit, one function per output.
pub fn emit_c(prog: &ScalarProgram, name: &str, border: Border) -> String {
    let mut out = String::from("#include <math.h>\n\n");
    let kernels: BTreeSet<(KernelKind, u32)> = prog
        .instrs
        .iter()
        .filter_map(|i| match i.op {
            LowOp::Kernel { kind, order, .. } => Some((kind, order)),
            _ => None,
        })
        .collect();
    for &(k, o) in &kernels {
        emit_kernel(&mut out, k, o);
    }
    if prog.instrs.iter().any(|i| matches!(i.op, LowOp::Load { .. })) {
        out.push_str(LOAD_HELPER);
    }
    if prog.instrs.iter().any(|i| matches!(i.op, LowOp::Unary(UnaryOp::Pow(_), _))) {
        out.push_str(POWI_HELPER);
    }
    let clamp = i32::from(border == Border::Clamp);
    let params = c_params(prog);
    let meta = |input: usize| format!("img_{}_meta", prog.inputs[input].name);
    let dim_of = |input: usize| match &prog.inputs[input].kind {
        InputKind::Image { dim, shape } => (*dim, shape.iter().product::<usize>()),
        InputKind::Tensor { .. } => (0, 0),
    };
    for o in &prog.outputs {
        let live = live_for(prog, &o.regs);
        let _ = writeln!(out, "void {name}_{}({})\n{{", o.name, params.join(", "));
        for p in &params {
            let pname = p.rsplit(['*', ' ']).next().unwrap_or("");
            let _ = writeln!(out, "    (void){pname};");
        }
        let mut has_load = false;
        for (r, ins) in prog.instrs.iter().enumerate() {
            if !live[r] {
                continue;
            }
            let reg = |x: &u32| format!("r{x}");
            let rhs = match &ins.op {
                LowOp::Const(b) => literal(f64::from_bits(*b)),
                LowOp::Pos(i) => format!("pos[{i}]"),
                LowOp::Input { input, index } => format!("in_{}[{index}]", prog.inputs[*input].name),
                LowOp::ImageA { input, i, j } => {
                    let d = dim_of(*input).0;
                    format!("{}[{}]", meta(*input), d + i * d + j)
                }
                LowOp::ImageB { input, i } => {
                    let d = dim_of(*input).0;
                    format!("{}[{}]", meta(*input), d + d * d + i)
                }
                LowOp::Floor(x) => format!("floor({})", reg(x)),
                LowOp::Load { input, base, offsets, comp } => {
                    has_load = true;
                    let (d, ncomp) = dim_of(*input);
                    let b: Vec<String> = base.iter().map(reg).collect();
                    let offs: Vec<String> = offsets.iter().map(|o| o.to_string()).collect();
                    let _ = writeln!(
                        out,
                        "    double r{r};\n    {{\n        const double b[{d}] = {{{}}};\n        const long o[{d}] = {{{}}};\n        \
                         if (!ein_load(img_{}, {}, {d}, {ncomp}, b, o, {comp}, {clamp}, &r{r})) goto oob;\n    }}",
                        b.join(", "),
                        offs.join(", "),
                        prog.inputs[*input].name,
                        meta(*input),
                    );
                    continue;
                }
                LowOp::Kernel { kind, order, arg } => format!("{}({})", kernel_fn(*kind, *order), reg(arg)),
                LowOp::Unary(op, x) => unary(*op, &reg(x)),
                LowOp::Binary(op, a, b) => {
                    let sym = match op {
                        BinaryOp::Add => "+",
                        BinaryOp::Sub => "-",
                        BinaryOp::Mul => "*",
                        BinaryOp::Div => "/",
                    };
                    format!("{} {sym} {}", reg(a), reg(b))
                }
            };
            let _ = writeln!(out, "    double r{r} = {rhs};");
        }
        for (k, &x) in o.regs.iter().enumerate() {
            let _ = writeln!(out, "    out[{k}] = r{x};");
        }
        out.push_str("    return;\n");
        if has_load {
            let _ = writeln!(out, "oob:\n    {{\n        int k;\n        for (k = 0; k < {}; k++) out[k] = NAN;\n    }}", o.regs.len());
        }
        out.push_str("}\n\n");
    }
    out
}

fn c_array(name: &str, v: &[f64]) -> String {
    let body: Vec<String> = v.iter().map(|&x| literal(x)).collect();
    let body = if body.is_empty() { "0.0".to_string() } else { body.join(", ") };
    format!("static const double {name}[] = {{{body}}};\n")
}

/// A `main` that evaluates every output of `prog` (emitted as `name`) at
/// `points` with the given inputs baked in, printing one value per line.
pub fn emit_c_driver(prog: &ScalarProgram, name: &str, inputs: &[crate::eval::InputValue<f64>], points: &[Vec<f64>]) -> String {
    use crate::eval::InputValue;
    let mut out = String::from("#include <stdio.h>\n\n");
    let mut args = Vec::new();
    for (k, (decl, val)) in prog.inputs.iter().zip(inputs).enumerate() {
        match val {
            InputValue::Image(img) => {
                let mut meta: Vec<f64> = img.sizes.iter().map(|&s| s as f64).collect();
                meta.extend(&img.a);
                meta.extend(&img.b);
                out.push_str(&c_array(&format!("data{k}"), &img.data));
                out.push_str(&c_array(&format!("meta{k}"), &meta));
                args.push(format!("data{k}"));
                args.push(format!("meta{k}"));
            }
            InputValue::Tensor(t) => {
                out.push_str(&c_array(&format!("data{k}"), t));
                args.push(format!("data{k}"));
            }
        }
        let _ = decl;
    }
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    out.push_str(&c_array("points", &flat));
    for o in &prog.outputs {
        let _ = writeln!(out, "void {name}_{}({});", o.name, c_params(prog).join(", "));
    }
    let width = prog.outputs.iter().map(|o| o.regs.len()).max().unwrap_or(0).max(1);
    let _ = writeln!(out, "\nint main(void)\n{{\n    double out[{width}];\n    int p, k;\n    for (p = 0; p < {}; p++) {{", points.len());
    for o in &prog.outputs {
        let mut call = args.clone();
        call.push(format!("points + p * {}", prog.pos_dim));
        call.push("out".into());
        let _ = writeln!(
            out,
            "        {name}_{}({});\n        for (k = 0; k < {}; k++) printf(\"%.17g\\n\", out[k]);",
            o.name,
            call.join(", "),
            o.regs.len()
        );
    }
    out.push_str("    }\n    return 0;\n}\n");
    out
}
