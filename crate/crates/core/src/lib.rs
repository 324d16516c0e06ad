//! qsteer: deciding Einstein-Podolsky-Rosen steerability of two-qubit states.
//!
//! The core test is conditional-state purity: when some measurement
//! direction on Alice's side leaves Bob with two *different pure* conditional
//! states, no local-hidden-state model can reproduce both that setting and a
//! second one, so the state is steerable outright — no inequality needed.
//! The crate provides:
//!
//! - [`steering`]: conditional states, the canonical block decomposition,
//!   the Bloch-sphere search for a qualifying direction, and the
//!   second-setting rule for a two-setting demonstration;
//! - [`lhs`]: hidden-state feasibility of two-setting assemblages by
//!   alternating projections, exposing one-way (asymmetric) steering;
//! - [`inequality`]: the pure-conditional steering inequality with its
//!   analytic bound, and the N-setting linear inequality with a
//!   brute-forced bound;
//! - [`scan`]: (V, theta) parameter sweeps over the built-in families with
//!   deterministic CSV output;
//! - [`linalg`], [`state`], [`optimize`]: the small dense complex matrix
//!   toolkit, validated qubit states, and sphere-search helpers behind it.

// index loops mirror the textbook matrix formulas throughout
#![allow(clippy::needless_range_loop)]

pub mod inequality;
pub mod lhs;
pub mod linalg;
pub mod optimize;
pub mod scan;
pub mod state;
pub mod steering;

pub use inequality::{
    avn_inequality, avn_inequality_phase_max, avn_inequality_with_nb, default_directions,
    linear_inequality_bound, linear_inequality_value, parse_directions, AvnInequalityResult,
    InequalityError, LinearInequalityResult,
};
pub use lhs::{
    assemblage_from_state, asymmetric_steering_scan, lhs_feasible, lhs_feasible_with, Assemblage,
    FeasibilityResult, LhsError, LhsModel, SolverConfig, SteeringParty,
};
pub use linalg::{BlochVector, Matrix2, Matrix4, C64};
pub use scan::{render_csv, run_scan, AnalysisKind, Family, ScanConfig, ScanError, ScanRecord};
pub use state::{
    family_color_noise, family_test_state, is_ppt_separable, random_state, PureQubit, QubitState,
    StateError, StateInput, TwoQubitState,
};
pub use steering::{
    canonical_decomposition, choose_second_setting, conditional_pair, find_avn_direction,
    find_avn_direction_with, verify_equivalence_chain, CanonicalDecomposition, SearchConfig,
    SecondSetting, SteeringError, SteeringVerdict, Tolerances,
};
