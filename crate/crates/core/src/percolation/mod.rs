//! Site percolation on hypercubic lattices: sampling, cluster labeling and
//! single-pass sweeps over the occupation count.

mod config;
mod forest;
mod labeling;
mod sweep;

pub use config::Configuration;
pub use labeling::{label_clusters, ClusterLabeling};
pub use sweep::{
    binomial_weights, canonical_convolve, estimate_threshold, first_spanning_counts,
    newman_ziff_sweep, spanning_curve, write_curves_csv, MicrocanonicalCurve, NewmanZiff,
    Observable, ThresholdEstimate,
};
