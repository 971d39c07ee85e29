pub mod amr;
pub mod cli;
pub mod config;
pub mod decoder;
pub mod eval;
pub mod features;
pub mod learning;
pub mod source_graph;
