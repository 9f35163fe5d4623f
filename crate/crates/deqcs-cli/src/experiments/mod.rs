//! Experiment implementations, one module per subcommand.

pub mod assumptions;
pub mod common;
pub mod evaluate;
pub mod generate;
pub mod sgf;
pub mod sparsity;
pub mod sweep;
pub mod theory;
pub mod train;
