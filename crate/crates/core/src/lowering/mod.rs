//! HighIR → MidIR (probe expansion) and MidIR → LowIR (scalarization).

mod low;
mod mid;

use thiserror::Error;

use crate::runtime::KernelKind;

pub use low::{dead_code, lower_mid_to_low, value_number_low, Instr, LowOp, LowOutput, Reg, ScalarProgram};
pub use mid::{lower_high_to_mid, recon_expr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowerError {
    #[error("kernel {kernel} cannot be differentiated {order} times")]
    ContinuityExceeded { kernel: KernelKind, order: u32 },
    #[error("raw LowIR exceeds the node budget of {budget}")]
    BudgetExceeded { budget: usize },
    #[error("{0} is not in normal form")]
    NotNormal(String),
    #[error("malformed MidIR: {0}")]
    Malformed(String),
}

#[cfg(test)]
mod tests;
