//! Plan-driven estimation, true-error references and simulation studies.

pub mod estimate;
pub mod study;

pub use estimate::{
    approximate_true_ge, design_of, estimate_ge, estimate_ge_multi, true_ge_multi, GeEstimate, Weighting,
};
pub use study::{
    run_study, setting_id, CustomSource, ExperimentResult, ExperimentSpec, Generator, MethodSpec, ResultRow,
    StudyKind, TrueGeSpec,
};
