#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chart;
pub mod cli;
pub mod connection;
pub mod cost;
pub mod error;
pub mod flows;
pub mod geodesics;
pub mod hessian;
pub mod infogeo;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod sampling;
pub mod tolerance;
pub mod verify;
pub mod weights;

pub use chart::{transform, Chart, ChartPoint};
pub use error::{GeoError, Result};
pub use linalg::SymMatrix;
pub use weights::WeightVector;
