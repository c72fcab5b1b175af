//! File formats, canned experiments and the `bridgebench` command line on
//! top of [`bridgebench_core`].

pub mod cli;
pub mod config;
pub mod experiments;
pub mod table;
