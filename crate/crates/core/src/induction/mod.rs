//! The induction: stages `f_n = H_n T_(omega_n) H_n^-1`, their advance by one
//! block-slide conjugacy and a rational correction of the rotation vector,
//! and the audit of the induction hypotheses.

mod audit;
mod feasibility;
mod manifest;
mod rational;
mod schedule;
mod stage;
mod steps;

pub use audit::{audit_stage, orbit_length};
pub use feasibility::{required_r, FeasibilityReport, ThresholdInputs};
pub use manifest::{
    load_run, load_stage, rational_identity_holds, stage_file_name, verify_run, write_run, Manifest, RunStatus, MANIFEST_FILE,
};
pub use rational::{decimal, RationalVector};
pub use schedule::{Mode, StageOverride, StageSchedule};
pub use stage::{Lattice, LemmaRecord, Separation, Stage, StageMaps};
pub use steps::{
    advance_stage, choose_eta, conjugacy_derivative_bound, derivative_norm, epsilon_n_search, feasibility,
    find_separation_time, g_gamma, init_stage1, kappa_search, prepare_advance, separation_margin, sigma_n,
    strip_radius, EpsilonSearch, EtaChoice, KappaSearch, Prepared, SEPARATION,
};
