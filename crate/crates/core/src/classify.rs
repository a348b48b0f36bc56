//! Simulation-based attractor classification of the reduced system, κ sweeps,
//! and the full-network recall demonstration.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    corollary_check, find_equilibria, sync_error, CorollaryReport, Equilibrium, STABILITY_MARGIN,
};
use crate::error::{domain, Error, Result};
use crate::integrator::{
    crossings_in, integrate_network, Direction, IntegrationConfig, Rk4, Trajectory,
    DEFAULT_REDUCED_DT,
};
use crate::model::{
    reduced_rhs, softmax_pair, Hypercolumn, NetworkParams, NetworkState, ReducedParams,
    ReducedState,
};

/// Peak-to-peak `d` below this is not an oscillation.
pub const AMPLITUDE_FLOOR: f64 = 1e-2;
/// Largest accepted `(max - min)/mean` of successive periods.
pub const PERIOD_SPREAD_LIMIT: f64 = 0.02;
/// Relative change of the squared per-period amplitude across the window below
/// which the oscillation is taken as settled without extrapolation.
pub const STATIONARY_DRIFT: f64 = 1e-2;
pub const DEFAULT_HORIZON: f64 = 500.0;
/// Leading fraction of the horizon discarded as transient.
pub const TRANSIENT_FRACTION: f64 = 0.5;
/// A trial whose final state is this close to an equilibrium is counted as converged to it.
pub const CONVERGENCE_RADIUS: f64 = 1e-3;
/// Half-width of the `d` range of the initial-condition box; `e` spans `[-g_a, g_a]`.
pub const SAMPLE_BOX_D: f64 = 8.0;
pub const MIN_TRIALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LimitCycle {
    /// Peak-to-peak excursion of `d` over the last full period of the run.
    pub amplitude_d: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TrialOutcome {
    LimitCycle(LimitCycle),
    Equilibrium { d_star: f64, e_star: f64 },
    Unsettled { d: f64, e: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialSummary {
    pub initial: ReducedState,
    pub outcome: TrialOutcome,
}

/// Integrates the reduced system over `horizon` and reports the attractor it settled on.
pub fn probe_attractor(
    params: &ReducedParams,
    initial: ReducedState,
    horizon: f64,
    equilibria: &[Equilibrium],
) -> Result<TrialOutcome> {
    let dt = DEFAULT_REDUCED_DT;
    let config = IntegrationConfig::new(dt, horizon, 1)?;
    let n_steps = config.n_steps();
    let first_kept = libm::ceil(TRANSIENT_FRACTION * n_steps as f64) as usize;

    let mut rhs = |x: &[f64], dx: &mut [f64]| {
        let r = reduced_rhs(ReducedState::new(x[0], x[1]), params);
        dx[0] = r.d;
        dx[1] = r.e;
    };
    let mut rk = Rk4::new(2);
    let mut x = initial.to_array();
    let mut window = Vec::with_capacity(n_steps + 1 - first_kept.min(n_steps));
    if first_kept == 0 {
        window.push(x[0]);
    }
    for step in 1..=n_steps {
        rk.step(&mut rhs, &mut x, dt, (step - 1) as f64 * dt)?;
        if step >= first_kept {
            window.push(x[0]);
        }
    }
    let t0 = first_kept as f64 * dt;
    if let Some(cycle) = cycle_in_window(&window, t0, dt) {
        return Ok(TrialOutcome::LimitCycle(cycle));
    }
    let end = ReducedState::new(x[0], x[1]);
    Ok(equilibria
        .iter()
        .find(|eq| {
            ReducedState::new(end.d - eq.d_star, end.e - eq.e_star).norm() < CONVERGENCE_RADIUS
        })
        .map_or(
            TrialOutcome::Unsettled { d: end.d, e: end.e },
            |eq| TrialOutcome::Equilibrium {
                d_star: eq.d_star,
                e_star: eq.e_star,
            },
        ))
}

fn peak_to_peak(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Limit of the squared amplitude `u` of a slowly drifting oscillation.
///
/// Fits the per-period growth rate `ln(u_{k+1}/u_k)/T_k = b + c u` by least
/// squares, the truncated amplitude equation near a Hopf point. The limit is
/// `-b/c` when `b > 0 > c`, unbounded when `b > 0 <= c`, and zero otherwise.
fn extrapolated_square_amplitude(u: &[f64], mid: &[f64]) -> f64 {
    let m = u.len() - 1;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..m {
        let x = 0.5 * (u[k] + u[k + 1]);
        let y = libm::log(u[k + 1] / u[k]) / (mid[k + 1] - mid[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let n = m as f64;
    let var = sxx - sx * sx / n;
    let (b, c) = if var > 0.0 {
        let c = (sxy - sx * sy / n) / var;
        ((sy - c * sx) / n, c)
    } else {
        (sy / n, 0.0)
    };
    match (b > 0.0, c < 0.0) {
        (true, true) => -b / c,
        (true, false) => f64::INFINITY,
        _ => 0.0,
    }
}

/// Sustained, regular oscillation test on uniformly sampled `d` values starting at `t0`.
fn cycle_in_window(d: &[f64], t0: f64, dt: f64) -> Option<LimitCycle> {
    if d.len() < 4 {
        return None;
    }
    let (lo, hi) = peak_to_peak(d);
    if hi - lo <= AMPLITUDE_FLOOR {
        return None;
    }
    let level = if lo < 0.0 && hi > 0.0 {
        0.0
    } else {
        d.iter().sum::<f64>() / d.len() as f64
    };
    let times: Vec<f64> = (0..d.len()).map(|k| t0 + k as f64 * dt).collect();
    let ups = crossings_in(&times, d.iter().copied(), level, Direction::Up);
    if ups.len() < 4 {
        return None;
    }
    let periods: Vec<f64> = ups.windows(2).map(|w| w[1] - w[0]).collect();
    let (pmin, pmax) = peak_to_peak(&periods);
    let mean = periods.iter().sum::<f64>() / periods.len() as f64;
    if (pmax - pmin) / mean >= PERIOD_SPREAD_LIMIT {
        return None;
    }

    // Squared peak-to-peak amplitude of each full period between up-crossings.
    let index = |t: f64| (libm::ceil((t - t0) / dt) as usize).min(d.len());
    let u: Vec<f64> = ups
        .windows(2)
        .map(|w| {
            let (a, b) = peak_to_peak(&d[index(w[0])..index(w[1])]);
            (b - a) * (b - a)
        })
        .collect();
    let mid: Vec<f64> = ups.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let last = u[u.len() - 1];
    let drift = libm::fabs(libm::log(last / u[0]));
    if drift >= STATIONARY_DRIFT
        && extrapolated_square_amplitude(&u, &mid) <= AMPLITUDE_FLOOR * AMPLITUDE_FLOOR
    {
        return None;
    }
    Some(LimitCycle {
        amplitude_d: libm::sqrt(last),
        period: mean,
    })
}

/// Sustained oscillation reached from `initial`, if any.
pub fn detect_limit_cycle(
    params: &ReducedParams,
    initial: ReducedState,
    horizon: f64,
) -> Result<Option<LimitCycle>> {
    match probe_attractor(params, initial, horizon, &[])? {
        TrialOutcome::LimitCycle(c) => Ok(Some(c)),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    UniqueStableFixedPoint,
    StableLimitCycle,
    Coexistence,
    BistableFixedPoints,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::UniqueStableFixedPoint => "UniqueStableFixedPoint",
            Regime::StableLimitCycle => "StableLimitCycle",
            Regime::Coexistence => "Coexistence",
            Regime::BistableFixedPoints => "BistableFixedPoints",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierSettings {
    pub trial_count: usize,
    pub seed: u64,
    pub horizon: f64,
}

impl ClassifierSettings {
    pub fn new(trial_count: usize, seed: u64) -> Result<Self> {
        Self {
            trial_count,
            seed,
            horizon: DEFAULT_HORIZON,
        }
        .validated()
    }

    pub fn with_horizon(self, horizon: f64) -> Result<Self> {
        Self { horizon, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.trial_count < MIN_TRIALS {
            return Err(domain(
                "trial_count",
                format!("must be at least {MIN_TRIALS}, got {}", self.trial_count),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon >= 10.0) {
            return Err(domain(
                "horizon",
                format!("must be finite and at least 10, got {}", self.horizon),
            ));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegimeReport {
    pub kappa: f64,
    pub regime: Regime,
    pub equilibria: Vec<Equilibrium>,
    pub limit_cycle: Option<LimitCycle>,
    pub evidence: Vec<TrialSummary>,
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    x
}

fn wrap_unit(x: f64) -> f64 {
    x - libm::floor(x)
}

/// Randomly shifted 2-D Halton points in `d ∈ [-8, 8]`, `e ∈ [-g_a, g_a]`.
pub fn sample_initial_conditions(count: usize, g_a: f64, seed: u64) -> Vec<ReducedState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; 2] = [rng.random(), rng.random()];
    (1..=count as u64)
        .map(|k| {
            let u = wrap_unit(radical_inverse(k, 2) + shift[0]);
            let v = wrap_unit(radical_inverse(k, 3) + shift[1]);
            ReducedState::new(SAMPLE_BOX_D * (2.0 * u - 1.0), g_a * (2.0 * v - 1.0))
        })
        .collect()
}

/// Combines equilibrium stability with sampled trajectories into a regime label.
pub fn classify_regime(params: &ReducedParams, settings: &ClassifierSettings) -> Result<RegimeReport> {
    let settings = settings.validated()?;
    let equilibria = find_equilibria(params);
    let mut evidence = Vec::with_capacity(settings.trial_count);
    for initial in sample_initial_conditions(settings.trial_count, params.g_a, settings.seed) {
        let outcome = probe_attractor(params, initial, settings.horizon, &equilibria)?;
        evidence.push(TrialSummary { initial, outcome });
    }
    assemble_report(params.kappa, equilibria, evidence)
}

fn assemble_report(
    kappa: f64,
    equilibria: Vec<Equilibrium>,
    evidence: Vec<TrialSummary>,
) -> Result<RegimeReport> {
    let limit_cycle = evidence
        .iter()
        .filter_map(|t| match t.outcome {
            TrialOutcome::LimitCycle(c) => Some(c),
            _ => None,
        })
        .max_by(|a, b| a.amplitude_d.total_cmp(&b.amplitude_d));
    let origin = equilibria[0];
    let nonzero_stable = equilibria.iter().any(|e| !e.is_origin() && e.stable);
    let cycle = limit_cycle.is_some();

    let regime = match (cycle, nonzero_stable) {
        (true, true) => Some(Regime::Coexistence),
        (false, true) => Some(Regime::BistableFixedPoints),
        (true, false) if !origin.stable => Some(Regime::StableLimitCycle),
        // at the Hopf point the origin still attracts through the negative cubic term
        (false, false) if origin.leading_real_part() <= STABILITY_MARGIN => {
            Some(Regime::UniqueStableFixedPoint)
        }
        _ => None,
    };
    let report = RegimeReport {
        kappa,
        regime: regime.unwrap_or(Regime::UniqueStableFixedPoint),
        equilibria,
        limit_cycle,
        evidence,
    };
    match regime {
        Some(_) => Ok(report),
        None => Err(Error::Classification(format!(
            "cycle found: {cycle}, origin stable: {}, nonzero stable: {nonzero_stable}; {report:?}",
            origin.stable
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub kappa_low: f64,
    pub kappa_high: f64,
    pub from: Regime,
    pub to: Regime,
}

impl Transition {
    pub fn width(&self) -> f64 {
        self.kappa_high - self.kappa_low
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.kappa_low + self.kappa_high)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub grid: Vec<RegimeReport>,
    pub transitions: Vec<Transition>,
}

impl SweepResult {
    /// Sorts reports by `κ` and brackets every change of regime between neighbours.
    pub fn from_reports(mut grid: Vec<RegimeReport>) -> Self {
        grid.sort_by(|a, b| a.kappa.total_cmp(&b.kappa));
        let transitions = grid
            .windows(2)
            .filter(|w| w[0].regime != w[1].regime)
            .map(|w| Transition {
                kappa_low: w[0].kappa,
                kappa_high: w[1].kappa,
                from: w[0].regime,
                to: w[1].regime,
            })
            .collect();
        Self { grid, transitions }
    }

    /// Regimes in grid order with consecutive repeats removed.
    pub fn regime_sequence(&self) -> Vec<Regime> {
        let mut seq: Vec<Regime> = Vec::new();
        for r in &self.grid {
            if seq.last() != Some(&r.regime) {
                seq.push(r.regime);
            }
        }
        seq
    }

    pub fn transition(&self, from: Regime, to: Regime) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.from == from && t.to == to)
    }
}

/// `min, min + step, ...` up to and including `max` (within rounding).
pub fn kappa_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(domain("kappa_step", format!("must be positive, got {step}")));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err(domain(
            "kappa_range",
            format!("need finite min <= max, got [{min}, {max}]"),
        ));
    }
    let n = libm::floor((max - min) / step + 1e-9) as usize;
    Ok((0..=n).map(|i| min + i as f64 * step).collect())
}

pub fn sweep_kappa(
    range: (f64, f64),
    step: f64,
    g_a: f64,
    tau: f64,
    settings: &ClassifierSettings,
) -> Result<SweepResult> {
    let base = ReducedParams::new(range.0, g_a, tau)?;
    let reports = kappa_grid(range.0, range.1, step)?
        .into_iter()
        .map(|k| classify_regime(&base.with_kappa(k), settings))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult::from_reports(reports))
}

/// Shrinks a bracket by bisection on the classifier until it is at most `width` wide.
/// Midpoints classified as anything other than `from` move the upper end.
pub fn refine_transition(
    transition: &Transition,
    g_a: f64,
    tau: f64,
    settings: &ClassifierSettings,
    width: f64,
) -> Result<Transition> {
    if !(width.is_finite() && width > 0.0) {
        return Err(domain("width", format!("must be positive, got {width}")));
    }
    let base = ReducedParams::new(transition.kappa_low, g_a, tau)?;
    let mut t = *transition;
    while t.width() > width {
        let mid = t.midpoint();
        let regime = classify_regime(&base.with_kappa(mid), settings)?.regime;
        if regime == t.from {
            t.kappa_low = mid;
        } else {
            t.kappa_high = mid;
        }
    }
    Ok(t)
}

/// Data behind the synchronization-error, activation and output/adaptation plots
/// of a full-network recall run.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallDemo {
    pub trajectory: Trajectory<NetworkParams>,
    pub sync_error: Vec<f64>,
    /// Softmax outputs per sample, one row per hypercolumn.
    pub outputs: Vec<Vec<[f64; 2]>>,
    pub corollary: CorollaryReport,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlternationSummary {
    /// Up-crossings of `s_11 - s_12` through zero after the settling time.
    pub crossings: Vec<f64>,
    pub mean_period: Option<f64>,
    /// Smallest per-period maximum of `o_11` and `o_12`.
    pub min_peak: f64,
    /// Largest per-period minimum of `o_11` and `o_12`.
    pub max_trough: f64,
}

impl AlternationSummary {
    pub fn periods(&self) -> usize {
        self.crossings.len().saturating_sub(1)
    }

    /// At least two full periods, each with both outputs rising above `high` and falling below `low`.
    pub fn alternates(&self, high: f64, low: f64) -> bool {
        self.periods() >= 2 && self.min_peak > high && self.max_trough < low
    }
}

/// Seeded initial state with every `s` and `a` entry uniform in `[-1, 1]`.
pub fn random_network_state(n_hypercolumns: usize, seed: u64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..n_hypercolumns)
        .map(|_| {
            let mut v = [0.0; 4];
            for x in &mut v {
                *x = rng.random_range(-1.0..=1.0);
            }
            Hypercolumn::new([v[0], v[1]], [v[2], v[3]])
        })
        .collect();
    NetworkState::new(columns).expect("uniform samples are finite")
}

impl RecallDemo {
    /// Output alternation of hypercolumn 1 over whole periods starting after `settle_time`.
    pub fn alternation(&self, settle_time: f64) -> AlternationSummary {
        let traj = &self.trajectory;
        let start = traj.index_at(settle_time);
        let times = &traj.times()[start..];
        let d = traj.states().skip(start).map(|x| x[0] - x[1]);
        let crossings = crossings_in(times, d, 0.0, Direction::Up);

        let mut min_peak = f64::INFINITY;
        let mut max_trough = f64::NEG_INFINITY;
        for w in crossings.windows(2) {
            let lo = traj.index_at(w[0]);
            let hi = traj.index_at(w[1]);
            for j in 0..2 {
                let (trough, peak) = peak_to_peak(
                    &self.outputs[lo..hi].iter().map(|o| o[0][j]).collect::<Vec<_>>(),
                );
                min_peak = min_peak.min(peak);
                max_trough = max_trough.max(trough);
            }
        }
        let mean_period = (crossings.len() >= 2).then(|| {
            (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64
        });
        AlternationSummary {
            crossings,
            mean_period,
            min_peak,
            max_trough,
        }
    }
}

/// Integrates the full network from seeded random initial conditions in `[-1, 1]`.
pub fn recall_demo(
    params: &NetworkParams,
    config: &IntegrationConfig,
    seed: u64,
) -> Result<RecallDemo> {
    let corollary = corollary_check(
        params.n_hypercolumns(),
        params.omega(),
        params.g_a(),
        params.tau(),
    )?;
    let warning = (!corollary.all_satisfied()).then(|| {
        format!(
            "coupling conditions not all met (sync: {}, unique equilibrium: {}, limit-cycle necessary: {})",
            corollary.sync_condition, corollary.unique_equilibrium, corollary.limit_cycle_necessary
        )
    });
    let initial = random_network_state(params.n_hypercolumns(), seed);
    let trajectory = integrate_network(params, &initial, config)?;
    let sync_error = sync_error(&trajectory);
    let outputs = trajectory
        .states()
        .map(|x| {
            x.chunks_exact(4)
                .map(|c| softmax_pair([c[0], c[1]]))
                .collect()
        })
        .collect();
    Ok(RecallDemo {
        trajectory,
        sync_error,
        outputs,
        corollary,
        warning,
    })
}
