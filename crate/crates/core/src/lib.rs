//! Free-recall dynamics of a modular working-memory attractor network.
//!
//! The network has `N` hypercolumns of two minicolumns each, coupled over a
//! complete graph with homogeneous weight `ω`. This crate holds the pure
//! numerical core:
//!
//! * [`model`]: softmax outputs and the vector fields of the full network and
//!   of the two-dimensional difference system valid on the synchronized set.
//! * [`integrator`]: fixed-step RK4, trajectories and crossing detection.
//! * [`analysis`]: synchronization bounds, the Lyapunov function, equilibria,
//!   Jacobians and the Hopf point with its cubic coefficient.
//! * [`classify`]: attractor classification by simulation, `κ` sweeps and the
//!   full-network recall run.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod classify;
pub mod error;
pub mod integrator;
pub mod model;

pub use analysis::{
    char_poly_coeffs, corollary_check, cubic_coefficient, find_equilibria, hopf_report,
    jacobian_at, lyapunov_value, sync_bounds, sync_error, CharPoly, CorollaryReport, Equilibrium,
    HopfReport, SyncBounds,
};
pub use classify::{
    classify_regime, detect_limit_cycle, recall_demo, refine_transition, sweep_kappa,
    ClassifierSettings, LimitCycle, RecallDemo, Regime, RegimeReport, SweepResult, Transition,
};
pub use error::{Error, Result};
pub use integrator::{
    detect_crossings, integrate, integrate_network, integrate_reduced, rk4_step, Direction,
    IntegrationConfig, Trajectory,
};
pub use model::{
    network_rhs, output_difference, project_reduced, reduced_rhs, softmax, Hypercolumn,
    NetworkParams, NetworkState, Output, ReducedParams, ReducedState,
};
