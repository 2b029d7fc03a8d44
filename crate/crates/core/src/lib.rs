//! Spin-lattice to continuous-variable compiler: bosonization, Trotterization,
//! gate decomposition, truncated Fock-space verification and Hafnian-based
//! moment estimation.

pub mod bosonize;
pub mod circuit;
pub mod cli;
pub mod error;
pub mod gbs;
pub mod json;
pub mod model;
pub mod simulate;
pub mod trotter;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
pub type CVec = nalgebra::DVector<C64>;
