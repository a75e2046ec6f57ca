//! Critical exponents of integrals of powers of rational functions.

pub mod poly;
pub mod quadrature;
pub mod unipotent;

pub use poly::{poly, MultiPoly, RationalFactor, RationalProduct};
pub use quadrature::{
    growth_exponent_fit, integral_critical_exponent, positivity_properness_probe, shell_integrals, Classification,
    GrowthFit, IntegralEstimate, ProbeOptions, PropernessReport, ShellOptions, BISECTION_STEPS, MAX_DIMENSION,
};
pub use unipotent::{
    elementary, series_integral_sandwich, unipotent_log_bound, unipotent_weight_polynomials, LogBoundOptions, LogBoundReport,
    SandwichRow, SandwichTable, WeightPolynomial,
};
