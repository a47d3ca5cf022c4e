//! Back ends for [`ScalarProgram`](crate::lowering::ScalarProgram): an interpreter and a C emitter.

mod c;
mod run;

pub use c::{c_params, emit_c, emit_c_driver};
pub use run::{check_bindings, run, run_point, ExecError, RunOptions};

#[cfg(test)]
mod tests;
