//! Size-control passes: Split, Slice, Summation Binding and value numbering.

mod bind;
mod slice;
mod split;
mod vn;

pub use bind::summation_bind;
pub use slice::slice;
pub use split::{split, split_op};
pub use vn::{canonical_op, value_number};

use serde::{Deserialize, Serialize};

use crate::ir::Program;

/// Where Split runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    High,
    Mid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassConfig {
    pub enable_split: bool,
    pub enable_slice: bool,
    /// Summation binding (index-invariant factors shifted out of sums).
    pub enable_shift: bool,
    pub enable_vn: bool,
    /// Body node count above which Split triggers.
    pub split_budget: usize,
    /// LowIR instruction limit for raw lowering.
    pub node_budget: usize,
    pub placement: Placement,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            enable_split: true,
            enable_slice: true,
            enable_shift: true,
            enable_vn: true,
            split_budget: 64,
            node_budget: 100_000,
            placement: Placement::Mid,
        }
    }
}

/// Total body nodes across a program (one per primitive).
pub fn measure_ir_size(prog: &Program) -> usize {
    prog.node_count()
}
