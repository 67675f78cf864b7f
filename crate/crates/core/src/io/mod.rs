//! Configuration, checkpoints and CSV output.

pub mod checkpoint;
pub mod config;
pub mod csv;

pub use checkpoint::{
    read_checkpoint, read_limit_checkpoint, write_checkpoint, write_limit_checkpoint,
};
pub use config::{load_config, parse_config, RunConfig};
