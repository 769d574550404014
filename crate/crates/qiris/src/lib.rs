pub mod cli;
pub mod experiment;
pub mod formats;
pub mod runtime;
