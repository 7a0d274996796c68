//! Layer-by-layer construction of the map `F = F_0 + Σ G_ℓ`.

mod construction;
mod schedule;
mod state;
mod step;
mod target;

pub use construction::{
    probe_points, run_construction, u_cap, u_value, ConstructionSetup, Diagnostics,
    InitialDiagnostics, ProbeSet, StepDiagnostics,
};
pub use schedule::{
    decay_exponent, eta_from_eps, hurwitz_zeta, make_schedule, solve_budget, Schedule,
    ScheduleCheck,
};
pub use state::{eval_F, h_norm_sqr, peak_exp, Checkpoint, ClampCounts, MapState, Step};
pub use step::{
    build_step, count_i, select_t, select_t_from_samples, shell_grid, MIN_SHELL,
};
pub use target::{norm_beta, TargetSignature};

pub(crate) use target::norm_beta_unchecked;
