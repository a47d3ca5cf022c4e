//! Reconstruction kernels, images, file formats and the brute-force probe.

pub mod image;
pub mod kernel;
pub mod nrrd;
pub mod oracle;
pub mod points;

pub use image::{Border, Image, ImageError};
pub use kernel::{Kernel, KernelError, KernelKind};
pub use nrrd::{load_nrrd, NrrdError};
pub use oracle::{oracle_probe, ProbeError};
