//! Library half of the `stnmf` command: sweep specs and the sweep runner.

pub mod sweep;

pub use sweep::{run_sweep, Method, SweepOutput, SweepSpec};
