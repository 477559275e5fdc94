//! Pair production of scalar bosons in time-dependent, arbitrarily polarized
//! electric fields, via the scalar quantum Vlasov equation.

pub mod config;
pub mod error;
pub mod export;
pub mod field;
pub mod integrator;
pub mod quadrature;
pub mod qve;
pub mod rk;
pub mod run;
pub mod semiclassical;
pub mod sweep;

pub use error::{Error, Result};
