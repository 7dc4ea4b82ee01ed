//! Robust trajectory density estimation.
//!
//! Counts how many trajectory passes cross a neighborhood, using a count
//! over nested squares that is stable under small curvature-bounded
//! perturbations and sandwiched between two disk counts. The counts are
//! accumulated over a hierarchical 2^d-tree ([`tree::TredTree`]) built
//! offline or updated one trajectory at a time, and the finest-scale bins
//! above a threshold give density-based subsamples and level sets.
//!
//! Modules:
//! - [`trajectory`]: polyline trajectories, curvature, time-delay embedding
//! - [`counts`]: maximal intervals, disk/square/robust counts, perturbations
//! - [`tree`]: the hierarchical count structure and its text dump
//! - [`oracle`]: dense-grid baseline, maxmin landmarks, k-NN filtering
//! - [`raster`]: dense grids and portable-anymap export
//! - [`synth`]: synthetic shapes, noise, and street-grid GPS traces
//! - [`mapkit`]: trace ingestion, skeleton graphs, map-quality metrics

pub mod counts;
pub mod error;
pub mod mapkit;
pub mod oracle;
pub mod point;
pub mod raster;
pub mod synth;
pub mod trajectory;
pub mod tree;

pub use error::{Error, Result};
pub use point::Point;
pub use raster::Raster;
pub use trajectory::{CurvatureBound, ParamInterval, Trajectory};
pub use tree::{Bin, TredParams, TredTree};
