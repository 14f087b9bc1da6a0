pub mod cli;
pub mod error;
pub mod gradflow;
pub mod grading;
pub mod hybrid;
pub mod model;
pub mod rsindex;
pub mod selftest;
pub mod symlin;
pub mod z2complex;

pub use error::{Error, Result};
