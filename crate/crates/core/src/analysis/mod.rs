//! Empirical cluster statistics: census, correlation functions, radii of
//! gyration, exponent fits and an exact enumeration reference.

mod census;
mod correlation;
mod fits;
mod oracle;

pub use census::{census, census_with_shapes, mean_cluster_size, percolation_strength, ClusterCensus, ClusterShape};
pub use correlation::{
    chemical_correlation, chemical_correlation_length, euclidean_correlation_length,
    radius_of_gyration, radius_of_gyration_pairwise, CorrelationEstimate, Origins,
};
pub use fits::{
    fit_exponential_cutoff, fit_fractal_dimension, fit_power_law, hurwitz_zeta, CutoffFit,
    FractalFit, PowerLawFit, MIN_FRACTAL_PAIRS, MIN_POWER_LAW_SAMPLES,
};
#[cfg(test)]
pub(crate) use fits::least_squares;
pub use oracle::{exact_enumeration, CountMoments, ExactStatistics, MAX_ORACLE_SITES};
