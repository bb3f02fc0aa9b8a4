//! Weighted M-adic cube constructions on `[0,1]^n`, the grid path metrics
//! they induce, and executable checks of the quantitative estimates that
//! control those metrics.

pub mod cube;
pub mod error;
pub mod exact;
pub mod heatmap;
pub mod metric;
pub mod params;
pub mod rng;
pub mod stochastic;
pub mod verify;
pub mod weight;

pub use dashu::rational::RBig;
pub use error::{Error, Result};
pub use params::{Attenuation, Params};
