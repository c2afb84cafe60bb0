pub mod cli;
pub mod error;
pub mod games;
pub mod geometry;
pub mod operators;
pub mod quasiconvex;
pub mod quasiopt;
pub mod qvi;
pub mod stability;
pub mod vi_solvers;

pub use error::{Error, Result};
