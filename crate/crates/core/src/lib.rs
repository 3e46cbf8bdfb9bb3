//! Density level sets from samples.
//!
//! The crate covers the whole pipeline: Gaussian kernel density estimation
//! ([`kernel_density`]), level-set extraction and set distances
//! ([`geometry`]), bootstrap confidence sets and simultaneous pointwise level
//! tests ([`inference`]), mean-shift basins of attraction
//! ([`mode_clustering`]), tomographic cluster-graph rendering
//! ([`visualization`]) and the simulation drivers used to check coverage
//! ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod inference;
pub mod kernel_density;
pub mod mode_clustering;
pub mod points;
pub mod seed;
pub mod visualization;

pub use error::{Error, Result};
pub use kernel_density::{silverman_bandwidth, DensityModel, GridSpec, GridValues, Kernel, SampleSet};
pub use points::PointSet;
