// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dno;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod geometry;
pub mod initial;
pub mod io;
pub mod krylov;
pub mod paradiff;
pub mod spectral;
pub mod symbols;
pub mod twophase;
pub mod verify;

pub use error::{Error, Result};
pub use spectral::{Field, Grid};
