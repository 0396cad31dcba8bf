//! Command-line front end for `pwexp`: data ingestion, model fitting, the
//! simulation study and output files.

pub mod cli;
pub mod data;
pub mod fit;
pub mod output;
pub mod simulate;
