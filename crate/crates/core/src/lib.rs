pub mod augment;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod kg;
pub mod lexicon;
pub mod parser;
pub mod preprocess;
pub mod qa;
pub mod reconstruct;
pub mod tree;

pub use error::{Error, Result};
