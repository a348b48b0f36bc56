//! Sweeps with grid points evaluated on the rayon pool. Results are identical to
//! the sequential versions in `freerecall_core::classify`.

use rayon::prelude::*;

use freerecall_core::classify::kappa_grid;
use freerecall_core::{
    classify_regime, refine_transition, ClassifierSettings, ReducedParams, Result, SweepResult,
    Transition,
};

pub fn sweep_kappa(
    range: (f64, f64),
    step: f64,
    g_a: f64,
    tau: f64,
    settings: &ClassifierSettings,
) -> Result<SweepResult> {
    let base = ReducedParams::new(range.0, g_a, tau)?;
    let reports = kappa_grid(range.0, range.1, step)?
        .into_par_iter()
        .map(|k| classify_regime(&base.with_kappa(k), settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::from_reports(reports))
}

/// Refines every bracket of `sweep` concurrently, preserving order.
pub fn refine_all(
    sweep: &SweepResult,
    g_a: f64,
    tau: f64,
    settings: &ClassifierSettings,
    width: f64,
) -> Result<Vec<Transition>> {
    sweep
        .transitions
        .par_iter()
        .map(|t| refine_transition(t, g_a, tau, settings, width))
        .collect()
}
