//! Poincaré series, critical exponents and Patterson–Sullivan measures at
//! finite scale.

pub mod experiments;
pub mod exponent;
pub mod measure;
pub mod sample;

pub use experiments::{
    cartan_table, concavity_probe, entropy_gap_report, finiteness_audit, length_phi, length_phi_limit,
    sample_from_table, ConcavityRow, ConcavityTable, Condition, EntropyGapOptions, EntropyGapReport, EnvelopeFit,
    FinitenessReport,
};
pub use exponent::{
    classifier_exponent, completeness_cutoff, counting_exponent, critical_exponent, radius_sweep, shell_slope, ExponentEstimate,
    WindowPolicy, CLASSIFIER_BINS, SLOPE_THRESHOLD,
};
pub use measure::{
    band_median, measure_from_sample, patterson_measure, ps_residual, ps_residuals, Atom, AtomicMeasure,
    ResidualBand, ResidualReport,
};
pub use sample::{
    phi_counts, phi_counts_cyclic, phi_counts_with_flags, poincare_by_radius, truncated_poincare, PhiSample,
};
