//! Periodic coarse-grained measurements of phase-space quadratures and
//! their mutual unbiasedness.

pub mod angle;
pub mod config;
pub mod error;
pub mod frft;
pub mod grid;
pub mod mub;
pub mod optics;
pub mod pcg;
pub mod reference;
pub mod scenario;
pub mod stats;
