//! Step functions, their analytic approximants and the closed-form maps built from them.

mod magnitude;
mod plane;
mod profile;

pub use magnitude::IteratedLog;
pub use plane::{
    complexify, derivative, in_strip, jacobian_defect, jacobian_defect_direct, Axis, BlockSlide, ComplexPoint, Coord, FnMapping,
    Mapping, PlaneMap, Shear,
};
pub use profile::{
    a0_threshold, bad_set_contains, dexp_neg, dexp_neg_complex, lipschitz_log_bound, step_eval,
    AnalyticProfile, Overflow, ProfileRecord, StepProfile,
};
