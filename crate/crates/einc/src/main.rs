use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ein_core::eval::InputValue;
use ein_core::exec::{emit_c, run, ExecError, RunOptions};
use ein_core::ir::{Domain, InputKind};
use ein_core::pipeline::{compile_with_report, Artifacts, PipelineError, Stage};
use ein_core::runtime::nrrd::nrrd_bytes;
use ein_core::runtime::points::{grid_points, parse_points, to_csv};
use ein_core::runtime::{load_nrrd, Border};
use ein_core::size::PassConfig;

#[derive(Parser)]
#[command(name = "einc", version, about = "Compiler for the EIN tensor-field language")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a program and report IR sizes.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        passes: Passes,
        /// Write the program as C99 source.
        #[arg(long, value_name = "OUT.c")]
        emit_c: Option<PathBuf>,
        /// Write the pipeline report as JSON.
        #[arg(long, value_name = "OUT.json")]
        stats: Option<PathBuf>,
        /// Print every rewrite rule application to stderr.
        #[arg(long)]
        trace_rewrites: bool,
    },
    /// Compile a program and evaluate it at a set of positions.
    Run {
        file: PathBuf,
        /// Input binding: an NRRD path for images, comma-separated values for tensors.
        #[arg(long = "input", value_name = "NAME=VALUE")]
        inputs: Vec<String>,
        /// Regular grid: lo, hi and counts, `d` values each, comma-separated.
        #[arg(long, conflicts_with = "points")]
        grid: Option<String>,
        /// Point file with one whitespace-separated position per line.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "nrrd")]
        format: Format,
        #[arg(long, value_enum, default_value = "error")]
        border: BorderArg,
        /// Let division by zero produce infinities or NaN.
        #[arg(long)]
        ieee: bool,
        #[command(flatten)]
        passes: Passes,
    },
    /// Print the program at one pipeline stage.
    DumpIr {
        file: PathBuf,
        /// simple, high, high-norm, mid, mid-opt or low.
        #[arg(long)]
        stage: String,
        #[command(flatten)]
        passes: Passes,
    },
}

#[derive(Args, Clone)]
struct Passes {
    #[arg(long)]
    no_split: bool,
    #[arg(long)]
    no_slice: bool,
    /// Disable summation binding.
    #[arg(long)]
    no_shift: bool,
    #[arg(long)]
    no_vn: bool,
    #[arg(long, value_name = "N")]
    split_budget: Option<usize>,
}

impl Passes {
    fn config(&self) -> PassConfig {
        let d = PassConfig::default();
        PassConfig {
            enable_split: !self.no_split,
            enable_slice: !self.no_slice,
            enable_shift: !self.no_shift,
            enable_vn: !self.no_vn,
            split_budget: self.split_budget.unwrap_or(d.split_budget),
            ..d
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Nrrd,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum BorderArg {
    Error,
    Clamp,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = if e.is_internal() { 2 } else { 1 };
        Failure { code, err: anyhow!(e) }
    }
}

impl From<ExecError> for Failure {
    fn from(e: ExecError) -> Self {
        Failure { code: 1, err: anyhow!(e) }
    }
}

fn read_source(file: &Path) -> Result<String, Failure> {
    Ok(std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?)
}

fn build(file: &Path, cfg: &PassConfig, trace: bool) -> Result<(Artifacts, ein_core::pipeline::PipelineReport), Failure> {
    let src = read_source(file)?;
    let mut printer = |rule: &str, before: &ein_core::ir::Expr, after: &ein_core::ir::Expr| {
        eprintln!("{rule}: {} => {}", ein_core::ir::sexpr_expr(before), ein_core::ir::sexpr_expr(after));
    };
    let tracer: Option<&mut ein_core::transform::Tracer<'_>> = if trace { Some(&mut printer) } else { None };
    let (report, res) = compile_with_report(&src, cfg, tracer);
    Ok((res?, report))
}

fn cmd_compile(
    file: &Path,
    passes: &Passes,
    emit: Option<&Path>,
    stats: Option<&Path>,
    trace: bool,
) -> Result<(), Failure> {
    let cfg = passes.config();
    let src = read_source(file)?;
    let mut printer = |rule: &str, before: &ein_core::ir::Expr, after: &ein_core::ir::Expr| {
        eprintln!("{rule}: {} => {}", ein_core::ir::sexpr_expr(before), ein_core::ir::sexpr_expr(after));
    };
    let tracer: Option<&mut ein_core::transform::Tracer<'_>> = if trace { Some(&mut printer) } else { None };
    let (report, res) = compile_with_report(&src, &cfg, tracer);
    if let Some(path) = stats {
        std::fs::write(path, report.to_json()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let art = res?;
    for s in &report.sizes {
        println!("{:<10} {}", s.stage, s.nodes);
    }
    if let Some(path) = emit {
        let name = file.file_stem().map_or("prog".into(), |s| c_ident(&s.to_string_lossy()));
        std::fs::write(path, emit_c(&art.low, &name, Border::Error)).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn c_ident(s: &str) -> String {
    let mut out: String = s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    if out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}

fn parse_values(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number `{x}`"))).collect()
}

fn bind_inputs(art: &Artifacts, bindings: &[String]) -> anyhow::Result<Vec<InputValue<f64>>> {
    let mut given = std::collections::HashMap::new();
    for b in bindings {
        let (name, value) = b.split_once('=').ok_or_else(|| anyhow!("input binding `{b}` is not NAME=VALUE"))?;
        given.insert(name.to_string(), value.to_string());
    }
    for name in given.keys() {
        if !art.low.inputs.iter().any(|d| &d.name == name) {
            bail!("the program has no input named `{name}`");
        }
    }
    art.low
        .inputs
        .iter()
        .map(|decl| match (&decl.kind, given.get(&decl.name)) {
            (InputKind::Image { .. }, Some(path)) => {
                let img = load_nrrd::<f64>(Path::new(path)).with_context(|| format!("input {}", decl.name))?;
                Ok(InputValue::Image(Arc::new(img)))
            }
            (InputKind::Tensor { .. }, Some(v)) => Ok(InputValue::Tensor(parse_values(v)?)),
            (InputKind::Tensor { default: Some(d), .. }, None) => Ok(InputValue::Tensor(d.clone())),
            (_, None) => bail!("input `{}` is not bound", decl.name),
        })
        .collect()
}

/// Positions and, for grids, the grid counts.
fn positions(
    art: &Artifacts,
    file: &Path,
    grid: Option<&str>,
    points: Option<&Path>,
) -> anyhow::Result<(Vec<Vec<f64>>, Option<Vec<usize>>)> {
    let d = art.low.pos_dim;
    let from_grid = |lo: &[f64], hi: &[f64], counts: &[usize]| -> anyhow::Result<_> {
        Ok((grid_points(lo, hi, counts)?, Some(counts.to_vec())))
    };
    let from_file = |path: &Path| -> anyhow::Result<_> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Ok((parse_points(&text, d)?, None))
    };
    if let Some(g) = grid {
        let v = parse_values(g)?;
        if v.len() != 3 * d {
            bail!("--grid needs {} values (lo, hi and counts for {d} axes)", 3 * d);
        }
        let counts: Vec<usize> = v[2 * d..].iter().map(|&c| c as usize).collect();
        return from_grid(&v[..d], &v[d..2 * d], &counts);
    }
    if let Some(p) = points {
        return from_file(p);
    }
    match &art.low.domain {
        Some(Domain::Grid { lo, hi, counts }) => from_grid(lo, hi, counts),
        Some(Domain::Points(p)) => from_file(&file.parent().unwrap_or(Path::new(".")).join(p)),
        None => bail!("no positions: pass --grid or --points"),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    file: &Path,
    passes: &Passes,
    inputs: &[String],
    grid: Option<&str>,
    points: Option<&Path>,
    output: &Path,
    format: Format,
    border: BorderArg,
    ieee: bool,
) -> Result<(), Failure> {
    let (art, _) = build(file, &passes.config(), false)?;
    let values = bind_inputs(&art, inputs)?;
    let (pts, counts) = positions(&art, file, grid, points)?;
    let border = match border {
        BorderArg::Error => Border::Error,
        BorderArg::Clamp => Border::Clamp,
    };
    let res = run(&art.low, &values, &pts, RunOptions { border, ieee })?;
    let rows: Vec<Vec<f64>> = res.into_iter().map(|per| per.into_iter().flatten().collect()).collect();
    let bytes = match format {
        Format::Csv => {
            let mut names = Vec::new();
            for o in &art.low.outputs {
                if o.regs.len() == 1 {
                    names.push(o.name.clone());
                } else {
                    names.extend((0..o.regs.len()).map(|k| format!("{}[{k}]", o.name)));
                }
            }
            to_csv(&names, &pts, &rows).into_bytes()
        }
        Format::Nrrd => {
            let sizes = counts.unwrap_or_else(|| vec![pts.len()]);
            let ncomp = art.low.outputs.iter().map(|o| o.regs.len()).sum();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            nrrd_bytes(&sizes, ncomp, &flat)
        }
    };
    std::fs::write(output, bytes).with_context(|| format!("cannot write {}", output.display()))?;
    Ok(())
}

fn cmd_dump(file: &Path, stage: &str, passes: &Passes) -> Result<(), Failure> {
    let stage: Stage = stage.parse().map_err(|e: String| anyhow!(e))?;
    let (art, _) = build(file, &passes.config(), false)?;
    println!("{}", art.dump(stage));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Compile { file, passes, emit_c, stats, trace_rewrites } => {
            cmd_compile(file, passes, emit_c.as_deref(), stats.as_deref(), *trace_rewrites)
        }
        Cmd::Run { file, inputs, grid, points, output, format, border, ieee, passes } => cmd_run(
            file,
            passes,
            inputs,
            grid.as_deref(),
            points.as_deref(),
            output,
            *format,
            *border,
            *ieee,
        ),
        Cmd::DumpIr { file, stage, passes } => cmd_dump(file, stage, passes),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
