//! Std companion to `symfd-core`: problem files, CSV and Matrix Market output,
//! a rayon-backed executor and the `symfd` command line.

pub mod cli;
pub mod output;
pub mod parallel;
pub mod problem_file;

pub use parallel::RayonExecutor;
