//! Relative equilibria: closed forms, multistart search, classification
//! and the census against the generic lower bound.

mod classify;
mod closed_form;
mod search;

pub use classify::{
    classify, classify_with, detect_shapes, pivot_reduced_hessian, EquilibriumClass, ShapeTag, CERTIFY_TOL,
    NONDEGENERACY_RTOL, SHAPE_TOL,
};
pub use closed_form::{lagrange_triangle, moulton, polygon, polygon_constant, polygon_with_center, two_body};
pub use search::{
    census_from, find_equilibria, palmore_census, palmore_lower_bound, polish, reduce_outcomes, run_start,
    sample_starts, CensusReport, DescentObjective, IndexBin, SearchDiagnostics, SearchOptions, SearchResult,
    StartOutcome, RNG_ALGORITHM,
};
