pub mod classifiers;
pub mod cli;
pub mod config;
pub mod control;
pub mod data;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod learning;
pub mod pathway;

pub use error::{Error, Result};
