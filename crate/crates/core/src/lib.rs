//! Heat-kernel smoothing of nonsmooth objectives and continuation of the
//! minimizing branches of `P_t f` across scales.
//!
//! * [`objective`]: piecewise-analytic objectives, the example catalog and
//!   checks of the growth, profile and tail assumptions.
//! * [`smoothing`]: `P_t f` and its derivatives in closed form or by quadrature.
//! * [`continuation`]: Newton polishing and predictor–corrector branch tracing.
//! * [`sweep`]: global minimizers across scales and branch switches.
//! * [`scaling`]: power-law fits against the predicted exponents.
//! * [`acceptance`]: the numbered end-to-end checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod continuation;
pub mod objective;
pub mod scaling;
pub mod smoothing;
pub mod sweep;

pub use continuation::{
    branch_energy_check, continuation_rhs, detect_terminal, newton_polish, trace_branch, Branch, BranchPoint,
    ContinuationError, EnergyRecord, Predictor, TerminalReport, Termination, TraceConfig,
};
pub use objective::{
    catalog_keys, check_growth, check_tail, estimate_omega, make_builtin, GridSpec, GrowthCheck, Objective1D,
    ObjectiveError, Params, Piece, SeparableObjective,
};
pub use scaling::{fit_power_law, hessian_rate, localization_rate, value_rate, ScalingError, ScalingFit};
pub use smoothing::{
    caloric_polynomial, psi_profile, quadrature_convolve, smooth_abs, smooth_eval, Jet1D, QuadratureSpec, SmoothedJet,
    SmoothingError,
};
pub use sweep::{
    find_switch_time, geometric_grid, global_minimize, sweep_minimizers, BranchSwitch, MinimizerRecord, SearchWindow,
    SweepError, SweepResult,
};
