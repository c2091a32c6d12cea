pub mod catalog;
pub mod config;
pub mod error;
pub mod run;
pub mod tasks;

pub use dflab_core as core;
