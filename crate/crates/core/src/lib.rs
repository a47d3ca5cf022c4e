//! Compiler core for a small tensor-field language built on the EIN
//! index-notation IR.

pub mod ir;
pub mod lowering;
pub mod pipeline;
pub mod eval;
pub mod exec;
pub mod frontend;
pub mod runtime;
pub mod size;
pub mod transform;
pub mod translate;
mod scalar;
#[cfg(test)]
mod testutil;

pub use scalar::Scalar;

pub type Image64 = runtime::Image<f64>;
pub type Image32 = runtime::Image<f32>;
pub type Tensor64 = eval::Tensor<f64>;
pub type Tensor32 = eval::Tensor<f32>;
pub type Input64 = eval::InputValue<f64>;
pub type Input32 = eval::InputValue<f32>;
