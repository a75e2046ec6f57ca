//! Limit sets, limit cones, transversality and multiplicative estimates,
//! sampled from word balls.

pub mod cone;
pub mod probes;
pub mod set;

pub use cone::{
    default_cone_cutoff, functional_positivity_check, jordan_direction_angles, limit_cone_sample, ConeSample,
    PositivityReport,
};
pub use probes::{
    multiplicative_probe, sine_bound, sine_bounds, MultiplicativeBand, MultiplicativeOptions, MultiplicativeReport,
    SineBound, SINE_BOUND_TOLERANCE,
};
pub use set::{
    limit_set_sample, north_south_probe, random_flags, transversality_audit, AuditOptions, LimitPoint,
    LimitSetSample, NorthSouthReport, NorthSouthRow, TransversalityReport, HISTOGRAM_BINS, MERGE_TOLERANCE,
};
