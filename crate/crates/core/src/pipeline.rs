//! End-to-end driver from source text to a [`ScalarProgram`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::{compile_source, FrontendError, SimpleProgram};
use crate::ir::{Program, Rhs};
use crate::lowering::{dead_code, lower_high_to_mid, lower_mid_to_low, value_number_low, LowerError, ScalarProgram};
use crate::size::{measure_ir_size, slice, split, summation_bind, value_number, PassConfig, Placement};
use crate::transform::{transform_high, TransformError, Tracer};
use crate::translate::{translate_program, TranslateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("frontend: {0}")]
    Frontend(#[from] FrontendError),
    #[error("translate: {0}")]
    Translate(#[from] TranslateError),
    #[error("transform-high: {0}")]
    Transform(#[from] TransformError),
    #[error("lowering: {0}")]
    Lower(#[from] LowerError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Frontend(_) => "frontend",
            PipelineError::Translate(_) => "translate",
            PipelineError::Transform(_) => "transform-high",
            PipelineError::Lower(_) => "lowering",
        }
    }

    /// True for failures that indicate a compiler bug rather than a bad program.
    pub fn is_internal(&self) -> bool {
        match self {
            PipelineError::Transform(_) => true,
            PipelineError::Lower(e) => matches!(e, LowerError::NotNormal(_) | LowerError::Malformed(_)),
            _ => false,
        }
    }
}

/// Points at which an intermediate program can be dumped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Simple,
    High,
    HighNorm,
    Mid,
    MidOpt,
    Low,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Simple, Stage::High, Stage::HighNorm, Stage::Mid, Stage::MidOpt, Stage::Low];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simple => "simple",
            Stage::High => "high",
            Stage::HighNorm => "high-norm",
            Stage::Mid => "mid",
            Stage::MidOpt => "mid-opt",
            Stage::Low => "low",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage `{s}` (expected one of simple, high, high-norm, mid, mid-opt, low)"))
    }
}

/// Names of the six size measurement points, in pipeline order.
pub const SIZE_POINTS: [&str; 6] = ["high", "high-norm", "mid", "mid-opt", "low", "low-vn"];

#[derive(Clone, Debug, Serialize)]
pub struct StageSize {
    pub stage: &'static str,
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PassTiming {
    pub pass: &'static str,
    pub millis: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PipelineReport {
    pub success: bool,
    pub error: Option<String>,
    pub config: Option<PassConfig>,
    pub sizes: Vec<StageSize>,
    pub timings: Vec<PassTiming>,
}

impl PipelineReport {
    pub fn size(&self, stage: &str) -> Option<usize> {
        self.sizes.iter().find(|s| s.stage == stage).map(|s| s.nodes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn record(&mut self, stage: &'static str, nodes: usize) {
        self.sizes.push(StageSize { stage, nodes });
    }
}

/// Every intermediate program of one compilation.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub simple: SimpleProgram,
    pub high: Program,
    pub high_norm: Program,
    pub mid: Program,
    pub mid_opt: Program,
    pub low_raw: ScalarProgram,
    pub low: ScalarProgram,
}

impl Artifacts {
    pub fn dump(&self, stage: Stage) -> String {
        match stage {
            Stage::Simple => self.simple.sexpr(),
            Stage::High => self.high.sexpr(),
            Stage::HighNorm => self.high_norm.sexpr(),
            Stage::Mid => self.mid.sexpr(),
            Stage::MidOpt => self.mid_opt.sexpr(),
            Stage::Low => self.low.dump(),
        }
    }
}

struct Timer<'r> {
    report: &'r mut PipelineReport,
}

impl Timer<'_> {
    fn time<R>(&mut self, pass: &'static str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.report.timings.push(PassTiming { pass, millis: t.elapsed().as_secs_f64() * 1e3 });
        r
    }
}

fn bind_all(prog: &mut Program) {
    for s in &mut prog.stmts {
        if let Rhs::Ein(app) = &mut s.rhs {
            app.op = summation_bind(&app.op);
        }
    }
}

fn size_passes(prog: &mut Program, cfg: &PassConfig, at: Placement, t: &mut Timer<'_>) {
    if cfg.enable_split && cfg.placement == at {
        t.time("split", || split(prog, cfg.split_budget));
    }
}

/// Runs the whole pipeline and returns the report alongside the result.
pub fn compile_with_report(
    src: &str,
    cfg: &PassConfig,
    tracer: Option<&mut Tracer<'_>>,
) -> (PipelineReport, Result<Artifacts, PipelineError>) {
    let mut report = PipelineReport { config: Some(cfg.clone()), ..Default::default() };
    let result = run_stages(src, cfg, tracer, &mut report);
    report.success = result.is_ok();
    if let Err(e) = &result {
        report.error = Some(e.to_string());
    }
    (report, result)
}

pub fn compile(src: &str, cfg: &PassConfig) -> Result<Artifacts, PipelineError> {
    compile_with_report(src, cfg, None).1
}

fn run_stages(
    src: &str,
    cfg: &PassConfig,
    tracer: Option<&mut Tracer<'_>>,
    report: &mut PipelineReport,
) -> Result<Artifacts, PipelineError> {
    let mut t = Timer { report };
    let simple = t.time("frontend", || compile_source(src))?;
    let high = t.time("translate", || translate_program(&simple))?;
    t.report.record("high", measure_ir_size(&high));

    let mut high_norm = high.clone();
    t.time("transform-high", || transform_high(&mut high_norm, tracer))?;
    t.report.record("high-norm", measure_ir_size(&high_norm));

    let mut mid = high_norm.clone();
    if cfg.enable_slice {
        t.time("slice", || slice(&mut mid));
    }
    size_passes(&mut mid, cfg, Placement::High, &mut t);
    if cfg.enable_vn && cfg.placement == Placement::High {
        t.time("value-number-high", || value_number(&mut mid));
    }
    t.time("lower-high-to-mid", || lower_high_to_mid(&mut mid))?;
    t.report.record("mid", measure_ir_size(&mid));

    let mut mid_opt = mid.clone();
    if cfg.enable_shift {
        t.time("summation-bind", || bind_all(&mut mid_opt));
    }
    size_passes(&mut mid_opt, cfg, Placement::Mid, &mut t);
    if cfg.enable_vn {
        t.time("value-number-mid", || value_number(&mut mid_opt));
    }
    t.report.record("mid-opt", measure_ir_size(&mid_opt));

    let low_raw = t.time("lower-mid-to-low", || lower_mid_to_low(&mid_opt, cfg.node_budget))?;
    t.report.record("low", low_raw.node_count());
    let low = if cfg.enable_vn {
        t.time("value-number-low", || value_number_low(&low_raw))
    } else {
        dead_code(low_raw.clone())
    };
    t.report.record("low-vn", low.node_count());

    Ok(Artifacts { simple, high, high_norm, mid, mid_opt, low_raw, low })
}
