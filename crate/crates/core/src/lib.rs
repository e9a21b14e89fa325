pub mod dynamics;
pub mod error;
pub mod fockspace;
pub mod observables;
pub mod quadrature;
pub mod runner;
pub mod selftest;
pub mod specfun;

pub use error::{Error, Result};
