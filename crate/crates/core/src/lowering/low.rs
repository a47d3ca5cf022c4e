//! Straight-line scalar code: every index map and summation is unrolled.

use std::collections::HashMap;
use std::fmt::Write;

use crate::ir::{BinaryOp, Domain, EinOp, Expr, Index, IndexVar, InputDecl, Prim, Program, Rhs, UnaryOp, Var};
use crate::runtime::KernelKind;

use super::LowerError;

pub type Reg = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LowOp {
    /// Bit pattern of an `f64` literal.
    Const(u64),
    Pos(usize),
    Input { input: usize, index: usize },
    ImageA { input: usize, i: usize, j: usize },
    ImageB { input: usize, i: usize },
    Floor(Reg),
    /// `V[base_a + offsets_a, comp]`; `base` holds floored image coordinates.
    Load { input: usize, base: Vec<Reg>, offsets: Vec<i64>, comp: usize },
    Kernel { kind: KernelKind, order: u32, arg: Reg },
    Unary(UnaryOp, Reg),
    Binary(BinaryOp, Reg, Reg),
}

impl LowOp {
    pub fn constant(v: f64) -> LowOp {
        LowOp::Const(v.to_bits())
    }

    pub fn operands(&self) -> Vec<Reg> {
        match self {
            LowOp::Floor(r) | LowOp::Unary(_, r) | LowOp::Kernel { arg: r, .. } => vec![*r],
            LowOp::Binary(_, a, b) => vec![*a, *b],
            LowOp::Load { base, .. } => base.clone(),
            _ => vec![],
        }
    }

    fn map_operands(&self, f: impl Fn(Reg) -> Reg) -> LowOp {
        match self {
            LowOp::Floor(r) => LowOp::Floor(f(*r)),
            LowOp::Unary(op, r) => LowOp::Unary(*op, f(*r)),
            LowOp::Kernel { kind, order, arg } => LowOp::Kernel { kind: *kind, order: *order, arg: f(*arg) },
            LowOp::Binary(op, a, b) => LowOp::Binary(*op, f(*a), f(*b)),
            LowOp::Load { input, base, offsets, comp } => LowOp::Load {
                input: *input,
                base: base.iter().map(|&r| f(r)).collect(),
                offsets: offsets.clone(),
                comp: *comp,
            },
            other => other.clone(),
        }
    }
}

/// One instruction; `group` identifies the MidIR assignment it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Instr {
    pub op: LowOp,
    pub group: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowOutput {
    pub name: String,
    pub shape: Vec<usize>,
    pub regs: Vec<Reg>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarProgram {
    pub inputs: Vec<InputDecl>,
    pub pos_dim: usize,
    pub instrs: Vec<Instr>,
    pub outputs: Vec<LowOutput>,
    /// Names of the instruction groups (source assignment of each group id).
    pub groups: Vec<String>,
    pub domain: Option<Domain>,
}

impl ScalarProgram {
    pub fn node_count(&self) -> usize {
        self.instrs.len()
    }

    pub fn count(&self, pred: impl Fn(&LowOp) -> bool) -> usize {
        self.instrs.iter().filter(|i| pred(&i.op)).count()
    }

    pub fn dump(&self) -> String {
        let mut out = String::from("(low\n");
        for (r, ins) in self.instrs.iter().enumerate() {
            let _ = writeln!(out, "  (r{r} {} {})", sexpr_op(&ins.op), ins.group);
        }
        for o in &self.outputs {
            let regs: Vec<String> = o.regs.iter().map(|r| format!("r{r}")).collect();
            let _ = writeln!(out, "  (output {} {:?} {})", o.name, o.shape, regs.join(" "));
        }
        out.push(')');
        out
    }
}

fn sexpr_op(op: &LowOp) -> String {
    match op {
        LowOp::Const(b) => format!("(const {:?})", f64::from_bits(*b)),
        LowOp::Pos(i) => format!("(pos {i})"),
        LowOp::Input { input, index } => format!("(input {input} {index})"),
        LowOp::ImageA { input, i, j } => format!("(image-a {input} {i} {j})"),
        LowOp::ImageB { input, i } => format!("(image-b {input} {i})"),
        LowOp::Floor(r) => format!("(floor r{r})"),
        LowOp::Load { input, base, offsets, comp } => {
            let b: Vec<String> = base.iter().map(|r| format!("r{r}")).collect();
            format!("(load {input} ({}) {offsets:?} {comp})", b.join(" "))
        }
        LowOp::Kernel { kind, order, arg } => format!("(kernel {kind} {order} r{arg})"),
        LowOp::Unary(op, r) => format!("({} r{r})", op.name()),
        LowOp::Binary(op, a, b) => format!("({} r{a} r{b})", op.symbol()),
    }
}

#[derive(Clone, Debug)]
enum LowVal {
    Tensor(Vec<Reg>),
    Image(usize),
    Kernel(KernelKind),
}

struct Emitter {
    instrs: Vec<Instr>,
    group: u32,
    budget: usize,
}

impl Emitter {
    fn emit(&mut self, op: LowOp) -> Result<Reg, LowerError> {
        if self.instrs.len() >= self.budget {
            return Err(LowerError::BudgetExceeded { budget: self.budget });
        }
        self.instrs.push(Instr { op, group: self.group });
        Ok((self.instrs.len() - 1) as Reg)
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Lowers one operator. Every body node is emitted once per valuation of its
/// free indices, so subterms invariant in a summation index are not repeated
/// for each of its values.
struct OpLowering<'a> {
    op: &'a EinOp,
    args: Vec<LowVal>,
    free: HashMap<*const Expr, Vec<IndexVar>>,
    memo: HashMap<(*const Expr, Vec<usize>), Reg>,
}

fn collect_free(e: &Expr, out: &mut HashMap<*const Expr, Vec<IndexVar>>) {
    out.insert(e as *const Expr, e.free_vars().into_iter().collect());
    for c in e.children() {
        collect_free(c, out);
    }
}

impl OpLowering<'_> {
    fn tensor(&self, p: usize) -> Result<&[Reg], LowerError> {
        match &self.args[p] {
            LowVal::Tensor(r) => Ok(r),
            _ => Err(LowerError::Malformed(format!("parameter {p} is not a tensor"))),
        }
    }

    fn ix(val: &HashMap<IndexVar, usize>, i: Index) -> usize {
        match i {
            Index::Const(c) => c,
            Index::Var(v) => val[&v],
        }
    }

    fn expr(&mut self, e: &Expr, val: &mut HashMap<IndexVar, usize>, em: &mut Emitter) -> Result<Reg, LowerError> {
        let key = (e as *const Expr, self.free[&(e as *const Expr)].iter().map(|v| val[v]).collect::<Vec<_>>());
        if let Some(&r) = self.memo.get(&key) {
            return Ok(r);
        }
        let r = self.expr_uncached(e, val, em)?;
        self.memo.insert(key, r);
        Ok(r)
    }

    fn expr_uncached(&mut self, e: &Expr, val: &mut HashMap<IndexVar, usize>, em: &mut Emitter) -> Result<Reg, LowerError> {
        let ix = |i: Index, val: &HashMap<IndexVar, usize>| Self::ix(val, i);
        match e {
            Expr::Const(c) => em.emit(LowOp::constant(*c)),
            Expr::Tensor { param, indices } => {
                let shape = self.op.params[*param].shape();
                let st = strides(shape);
                let flat: usize = indices.iter().zip(&st).map(|(&i, s)| ix(i, val) * s).sum();
                Ok(self.tensor(*param)?[flat])
            }
            Expr::Delta(a, b) => em.emit(LowOp::constant(if ix(*a, val) == ix(*b, val) { 1.0 } else { 0.0 })),
            Expr::Epsilon2(a, b) => em.emit(LowOp::constant(crate::eval::levi_civita(&[ix(*a, val), ix(*b, val)]))),
            Expr::Epsilon3(a, b, c) => {
                em.emit(LowOp::constant(crate::eval::levi_civita(&[ix(*a, val), ix(*b, val), ix(*c, val)])))
            }
            Expr::Unary(op, x) => {
                let r = self.expr(x, val, em)?;
                em.emit(LowOp::Unary(*op, r))
            }
            Expr::Binary(op, a, b) => {
                let x = self.expr(a, val, em)?;
                let y = self.expr(b, val, em)?;
                em.emit(LowOp::Binary(*op, x, y))
            }
            Expr::Sum { var, bound, body } => {
                let old = val.insert(*var, 0);
                let mut acc = self.expr(body, val, em)?;
                for x in 1..*bound {
                    val.insert(*var, x);
                    let r = self.expr(body, val, em)?;
                    acc = em.emit(LowOp::Binary(BinaryOp::Add, acc, r))?;
                }
                match old {
                    Some(o) => val.insert(*var, o),
                    None => val.remove(var),
                };
                Ok(acc)
            }
            Expr::Voxel { image, base, offsets, comps, shift } => {
                let LowVal::Image(input) = self.args[*image] else {
                    return Err(LowerError::Malformed("voxel of a non-image".into()));
                };
                let crate::ir::ParamKind::Image { shape, .. } = &self.op.params[*image] else {
                    return Err(LowerError::Malformed("voxel of a non-image".into()));
                };
                let st = strides(shape);
                let comp = comps.iter().zip(&st).map(|(&i, s)| ix(i, val) * s).sum();
                let base = self.tensor(*base)?.to_vec();
                let offsets = offsets.iter().map(|&o| ix(o, val) as i64 + shift).collect();
                em.emit(LowOp::Load { input, base, offsets, comp })
            }
            Expr::KernelWeight { kernel, frac, axis, derivs, offset, shift } => {
                let LowVal::Kernel(kind) = self.args[*kernel] else {
                    return Err(LowerError::Malformed("kernel weight of a non-kernel".into()));
                };
                let order = derivs.iter().filter(|&&d| ix(d, val) == *axis).count() as u32;
                let f = self.tensor(*frac)?[*axis];
                let c = em.emit(LowOp::constant((ix(*offset, val) as i64 + shift) as f64))?;
                let t = em.emit(LowOp::Binary(BinaryOp::Sub, f, c))?;
                em.emit(LowOp::Kernel { kind, order, arg: t })
            }
            other => Err(LowerError::Malformed(format!("{} cannot be scalarized", crate::ir::sexpr_expr(other)))),
        }
    }
}

/// Unrolls a MidIR program into a [`ScalarProgram`]; sharing across operators is left to [`value_number_low`].
pub fn lower_mid_to_low(prog: &Program, budget: usize) -> Result<ScalarProgram, LowerError> {
    let mut em = Emitter { instrs: Vec::new(), group: 0, budget };
    let mut env: HashMap<Var, LowVal> = HashMap::new();
    let mut groups = Vec::new();
    for (g, s) in prog.stmts.iter().enumerate() {
        em.group = g as u32;
        groups.push(s.name.clone().unwrap_or_else(|| s.lhs.to_string()));
        let v = match &s.rhs {
            Rhs::Prim(p) => match p {
                Prim::LoadImage { input } => LowVal::Image(*input),
                Prim::LoadKernel(k) => LowVal::Kernel(*k),
                Prim::ConstTensor { data, .. } => {
                    LowVal::Tensor(data.iter().map(|&c| em.emit(LowOp::constant(c))).collect::<Result<_, _>>()?)
                }
                Prim::TensorInput { input } => {
                    let n: usize = s.ty.shape().iter().product();
                    LowVal::Tensor((0..n).map(|index| em.emit(LowOp::Input { input: *input, index })).collect::<Result<_, _>>()?)
                }
                Prim::Position => {
                    LowVal::Tensor((0..prog.pos_dim).map(|i| em.emit(LowOp::Pos(i))).collect::<Result<_, _>>()?)
                }
                Prim::TransformMatrix { image } => {
                    let LowVal::Image(input) = env[image] else { return Err(LowerError::Malformed("matrix of a non-image".into())) };
                    let d = s.ty.shape()[0];
                    let mut regs = Vec::with_capacity(d * d);
                    for i in 0..d {
                        for j in 0..d {
                            regs.push(em.emit(LowOp::ImageA { input, i, j })?);
                        }
                    }
                    LowVal::Tensor(regs)
                }
                Prim::WorldToImage { image, pos } => {
                    let LowVal::Image(input) = env[image] else { return Err(LowerError::Malformed("transform of a non-image".into())) };
                    let LowVal::Tensor(p) = env[pos].clone() else { return Err(LowerError::Malformed("position is not a tensor".into())) };
                    let d = p.len();
                    let mut regs = Vec::with_capacity(d);
                    for i in 0..d {
                        let mut acc = em.emit(LowOp::ImageB { input, i })?;
                        for (j, &pj) in p.iter().enumerate() {
                            let a = em.emit(LowOp::ImageA { input, i, j })?;
                            let m = em.emit(LowOp::Binary(BinaryOp::Mul, a, pj))?;
                            acc = em.emit(LowOp::Binary(BinaryOp::Add, acc, m))?;
                        }
                        regs.push(acc);
                    }
                    LowVal::Tensor(regs)
                }
                Prim::Floor(x) => {
                    let LowVal::Tensor(r) = env[x].clone() else { return Err(LowerError::Malformed("floor of a non-tensor".into())) };
                    LowVal::Tensor(r.iter().map(|&r| em.emit(LowOp::Floor(r))).collect::<Result<_, _>>()?)
                }
            },
            Rhs::Ein(app) => {
                let mut free = HashMap::new();
                collect_free(&app.op.body, &mut free);
                let args = app.args.iter().map(|a| env[a].clone()).collect();
                let mut lo = OpLowering { op: &app.op, args, free, memo: HashMap::new() };
                let shape = app.op.shape();
                let total: usize = shape.iter().product();
                let mut regs = Vec::with_capacity(total);
                let mut val = HashMap::new();
                for flat in 0..total {
                    let mut rem = flat;
                    for (&(v, _), &b) in app.op.index_map.iter().zip(&shape).rev() {
                        val.insert(v, rem % b);
                        rem /= b;
                    }
                    regs.push(lo.expr(&app.op.body, &mut val, &mut em)?);
                }
                LowVal::Tensor(regs)
            }
        };
        env.insert(s.lhs, v);
    }
    let outputs = prog
        .outputs
        .iter()
        .map(|o| match &env[&o.var] {
            LowVal::Tensor(regs) => Ok(LowOutput { name: o.name.clone(), shape: o.shape.clone(), regs: regs.clone() }),
            _ => Err(LowerError::Malformed(format!("output {} is not a tensor", o.name))),
        })
        .collect::<Result<_, _>>()?;
    Ok(ScalarProgram {
        inputs: prog.inputs.clone(),
        pos_dim: prog.pos_dim,
        instrs: em.instrs,
        outputs,
        groups,
        domain: prog.domain.clone(),
    })
}

fn fold(op: &LowOp, instrs: &[Instr]) -> Option<LowOp> {
    let c = |r: Reg| match instrs[r as usize].op {
        LowOp::Const(b) => Some(f64::from_bits(b)),
        _ => None,
    };
    match op {
        LowOp::Binary(bop, a, b) => {
            let v = bop.apply(c(*a)?, c(*b)?);
            v.is_finite().then(|| LowOp::constant(v))
        }
        LowOp::Unary(u, a) => {
            let v = u.apply(c(*a)?);
            v.is_finite().then(|| LowOp::constant(v))
        }
        LowOp::Floor(a) => Some(LowOp::constant(c(*a)?.floor())),
        _ => None,
    }
}

/// Identity laws that leave a value unchanged: `x+0`, `0+x`, `x−0`, `x·1`, `1·x`, `x/1`.
fn passthrough(op: &LowOp, instrs: &[Instr]) -> Option<Reg> {
    let is = |r: Reg, v: f64| matches!(instrs[r as usize].op, LowOp::Const(b) if f64::from_bits(b) == v);
    match *op {
        LowOp::Binary(BinaryOp::Add, a, b) if is(b, 0.0) => Some(a),
        LowOp::Binary(BinaryOp::Add, a, b) if is(a, 0.0) => Some(b),
        LowOp::Binary(BinaryOp::Sub, a, b) if is(b, 0.0) => Some(a),
        LowOp::Binary(BinaryOp::Mul, a, b) if is(b, 1.0) => Some(a),
        LowOp::Binary(BinaryOp::Mul, a, b) if is(a, 1.0) => Some(b),
        LowOp::Binary(BinaryOp::Div, a, b) if is(b, 1.0) => Some(a),
        _ => None,
    }
}

struct Numbering {
    out: Vec<Instr>,
    table: HashMap<LowOp, Reg>,
}

impl Numbering {
    fn emit(&mut self, mut op: LowOp, group: u32) -> Reg {
        if let LowOp::Binary(bop @ (BinaryOp::Add | BinaryOp::Mul), a, b) = op {
            if a > b {
                op = LowOp::Binary(bop, b, a);
            }
        }
        if let Some(r) = passthrough(&op, &self.out) {
            return r;
        }
        if let Some(f) = fold(&op, &self.out) {
            op = f;
        }
        let out = &mut self.out;
        *self.table.entry(op.clone()).or_insert_with(|| {
            out.push(Instr { op, group });
            (out.len() - 1) as Reg
        })
    }
}

fn chain_op(op: &LowOp) -> Option<(BinaryOp, Reg, Reg)> {
    match *op {
        LowOp::Binary(b @ (BinaryOp::Add | BinaryOp::Mul), x, y) => Some((b, x, y)),
        _ => None,
    }
}

/// Hash-consing value numbering with constant folding and dead-code removal.
///
/// Chains of `+` (or `·`) whose inner links have a single use are flattened
/// and rebuilt with their terms sorted, so sums of the same terms in a
/// different order share one chain. Merging can leave more links with a
/// single use, so numbering repeats until the program stops changing.
pub fn value_number_low(p: &ScalarProgram) -> ScalarProgram {
    let mut cur = number_once(p);
    for _ in 0..16 {
        let next = number_once(&cur);
        if next.instrs.len() == cur.instrs.len() && next.dump() == cur.dump() {
            break;
        }
        cur = next;
    }
    cur
}

fn number_once(p: &ScalarProgram) -> ScalarProgram {
    let n = p.instrs.len();
    let mut uses = vec![0u32; n];
    for ins in &p.instrs {
        for r in ins.op.operands() {
            uses[r as usize] += 1;
        }
    }
    for o in &p.outputs {
        for &r in &o.regs {
            uses[r as usize] += 1;
        }
    }
    let mut absorbed = vec![false; n];
    for ins in &p.instrs {
        if let Some((op, x, y)) = chain_op(&ins.op) {
            for o in [x, y] {
                if uses[o as usize] == 1 && chain_op(&p.instrs[o as usize].op).is_some_and(|c| c.0 == op) {
                    absorbed[o as usize] = true;
                }
            }
        }
    }
    let mut vn = Numbering { out: Vec::with_capacity(n), table: HashMap::new() };
    let mut remap: Vec<Reg> = Vec::with_capacity(n);
    let mut terms: Vec<Vec<Reg>> = vec![Vec::new(); n];
    for (i, ins) in p.instrs.iter().enumerate() {
        if let Some((op, x, y)) = chain_op(&ins.op) {
            let mut ts = Vec::new();
            for o in [x, y] {
                if absorbed[o as usize] {
                    ts.append(&mut terms[o as usize]);
                } else {
                    ts.push(remap[o as usize]);
                }
            }
            if absorbed[i] {
                terms[i] = ts;
                remap.push(Reg::MAX);
                continue;
            }
            ts.sort_unstable();
            let mut acc = ts[0];
            for &t in &ts[1..] {
                acc = vn.emit(LowOp::Binary(op, acc, t), ins.group);
            }
            remap.push(acc);
            continue;
        }
        let op = ins.op.map_operands(|r| remap[r as usize]);
        remap.push(vn.emit(op, ins.group));
    }
    let outputs: Vec<LowOutput> = p
        .outputs
        .iter()
        .map(|o| LowOutput { regs: o.regs.iter().map(|&r| remap[r as usize]).collect(), ..o.clone() })
        .collect();
    dead_code(ScalarProgram { instrs: vn.out, outputs, ..p.clone() })
}

/// Drops instructions no output depends on.
pub fn dead_code(p: ScalarProgram) -> ScalarProgram {
    let mut live = vec![false; p.instrs.len()];
    for o in &p.outputs {
        for &r in &o.regs {
            live[r as usize] = true;
        }
    }
    for i in (0..p.instrs.len()).rev() {
        if live[i] {
            for r in p.instrs[i].op.operands() {
                live[r as usize] = true;
            }
        }
    }
    let mut remap = vec![0 as Reg; p.instrs.len()];
    let mut instrs = Vec::new();
    for (i, ins) in p.instrs.iter().enumerate() {
        if live[i] {
            remap[i] = instrs.len() as Reg;
            instrs.push(Instr { op: ins.op.map_operands(|r| remap[r as usize]), group: ins.group });
        }
    }
    let outputs = p
        .outputs
        .iter()
        .map(|o| LowOutput { regs: o.regs.iter().map(|&r| remap[r as usize]).collect(), ..o.clone() })
        .collect();
    ScalarProgram { instrs, outputs, ..p }
}
