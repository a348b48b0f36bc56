//! Subcommand definitions and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use freerecall_core::analysis::{hopf_report, CorollaryReport, HopfReport, SyncBounds};
use freerecall_core::classify::AlternationSummary;
use freerecall_core::{
    classify_regime, corollary_check, find_equilibria, integrate_network, integrate_reduced,
    recall_demo, sync_bounds, sync_error, Equilibrium, NetworkParams, ReducedParams, RegimeReport,
    SweepResult, Transition,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{
    write_recall_datasets, write_reduced_csv, write_report_json, write_trajectory_csv, RecallFiles,
};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(name = "freerecall", version, about = "Free-recall dynamics of a modular attractor network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat TOML file with any of the flag names (underscored) as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunConfig,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overridden_by(self.run.clone()))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synchronization bounds and the combined coupling conditions.
    SyncCheck(Common),
    /// Integrate the full network from seeded random initial conditions.
    Simulate(Common),
    /// Integrate the reduced (d, e) system.
    Reduce(Common),
    /// Equilibria of the reduced system with eigenvalues.
    Equilibria(Common),
    /// Classify the attractor regime at one kappa.
    Classify(Common),
    /// Classify over a kappa grid and refine the regime transitions.
    Sweep(Common),
    /// Full-network recall run with all plot datasets.
    RecallDemo(Common),
}

fn fmt_complex(re: f64, im: f64) -> String {
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        let sign = if im < 0.0 { '-' } else { '+' };
        format!("{re:.6}{sign}{:.6}i", im.abs())
    }
}

#[derive(Debug, Serialize)]
struct SyncCheckReport {
    params: NetworkParams,
    sync_bounds: SyncBounds,
    corollary: CorollaryReport,
    hopf: HopfReport,
    all_satisfied: bool,
}

#[derive(Debug, Serialize)]
struct EquilibriaReport {
    params: ReducedParams,
    equilibria: Vec<Equilibrium>,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    g_a: f64,
    tau: f64,
    sweep: SweepResult,
    refined_transitions: Vec<Transition>,
}

#[derive(Debug, Serialize)]
struct RecallSummary {
    params: NetworkParams,
    seed: u64,
    corollary: CorollaryReport,
    warning: Option<String>,
    final_sync_error: f64,
    alternation: AlternationSummary,
    files: RecallFiles,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::SyncCheck(c) => sync_check(&c.resolve()?, out),
        Command::Simulate(c) => simulate(&c.resolve()?, out),
        Command::Reduce(c) => reduce(&c.resolve()?, out),
        Command::Equilibria(c) => equilibria(&c.resolve()?, out),
        Command::Classify(c) => classify(&c.resolve()?, out),
        Command::Sweep(c) => sweep(&c.resolve()?, out),
        Command::RecallDemo(c) => recall(&c.resolve()?, out),
    }
}

/// Parses `args`, runs, and returns the process exit status. Errors go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    return 0;
                }
                _ => 1,
            };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn w(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "satisfied"
    } else {
        "NOT satisfied"
    }
}

fn sync_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.network_params()?;
    let bounds = sync_bounds(params.g_a(), params.tau())?;
    let corollary = corollary_check(params.n_hypercolumns(), params.omega(), params.g_a(), params.tau())?;
    let hopf = hopf_report(params.g_a(), params.tau())?;
    w(out, format_args!("sync bounds: ({:.4}, {:.4})", bounds.omega_min, bounds.omega_max))?;
    w(out, format_args!("  omega_min = {}", bounds.omega_min))?;
    w(out, format_args!("  omega_max = {}", bounds.omega_max))?;
    w(out, format_args!("omega = {}, kappa = {}", params.omega(), corollary.kappa))?;
    w(out, format_args!("(i)   synchronization g_a/tau < omega < g_a/(tau-1): {}", yes_no(corollary.sync_condition)))?;
    w(
        out,
        format_args!(
            "(ii)  unique equilibrium omega < {}: {}",
            corollary.unique_equilibrium_bound,
            yes_no(corollary.unique_equilibrium)
        ),
    )?;
    w(
        out,
        format_args!(
            "(iii) limit cycle necessary g_a > 2/tau and omega > {}: {}",
            corollary.limit_cycle_omega_threshold,
            yes_no(corollary.limit_cycle_necessary)
        ),
    )?;
    w(
        out,
        format_args!(
            "hopf point kappa* = {}, frequency = {}, cubic coefficient = {}",
            hopf.kappa_star,
            hopf.frequency,
            hopf.cubic_coefficient.map_or("n/a".to_string(), |a| a.to_string())
        ),
    )?;
    let all = corollary.all_satisfied();
    if all {
        w(out, format_args!("all conditions satisfied"))?;
    } else {
        w(out, format_args!("some conditions not satisfied"))?;
    }
    if let Some(path) = &cfg.report {
        write_report_json(
            &SyncCheckReport {
                params,
                sync_bounds: bounds,
                corollary,
                hopf,
                all_satisfied: all,
            },
            path,
        )?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.network_params()?;
    let integration = cfg.network_integration()?;
    let initial = freerecall_core::classify::random_network_state(params.n_hypercolumns(), cfg.seed());
    let traj = integrate_network(&params, &initial, &integration)?;
    let path = cfg.output_or("trajectory.csv");
    write_trajectory_csv(&traj, &path)?;
    let err = sync_error(&traj);
    w(out, format_args!("wrote {} samples to {}", traj.len(), path.display()))?;
    w(out, format_args!("final sync error = {}", err[err.len() - 1]))
}

fn reduce(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.reduced_params()?;
    let integration = cfg.reduced_integration()?;
    let traj = integrate_reduced(&params, cfg.reduced_initial()?, &integration)?;
    let path = cfg.output_or("reduced.csv");
    write_reduced_csv(&traj, &path)?;
    w(out, format_args!("wrote {} samples to {}", traj.len(), path.display()))
}

fn equilibria(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.reduced_params()?;
    let eqs = find_equilibria(&params);
    w(out, format_args!("kappa = {}, g_a = {}, tau = {}", params.kappa, params.g_a, params.tau))?;
    w(out, format_args!("d_star\te_star\tlambda_1\tlambda_2\tstable\tmarginal"))?;
    for e in &eqs {
        w(
            out,
            format_args!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.d_star,
                e.e_star,
                fmt_complex(e.eigenvalues[0].re, e.eigenvalues[0].im),
                fmt_complex(e.eigenvalues[1].re, e.eigenvalues[1].im),
                e.stable,
                e.marginal
            ),
        )?;
    }
    if let Some(path) = &cfg.report {
        write_report_json(
            &EquilibriaReport {
                params,
                equilibria: eqs,
            },
            path,
        )?;
    }
    Ok(())
}

fn classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.reduced_params()?;
    let report: RegimeReport = classify_regime(&params, &cfg.classifier()?)?;
    let path = cfg.output_or("regime.json");
    write_report_json(&report, &path)?;
    w(out, format_args!("kappa = {}: {}", report.kappa, report.regime))?;
    if let Some(c) = report.limit_cycle {
        w(out, format_args!("limit cycle: amplitude_d = {}, period = {}", c.amplitude_d, c.period))?;
    }
    w(out, format_args!("wrote {}", path.display()))
}

fn sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let base = cfg.reduced_params()?;
    let settings = cfg.classifier()?;
    let (min, max, step) = cfg.kappa_range()?;
    let result = parallel::sweep_kappa((min, max), step, base.g_a, base.tau, &settings)?;
    let refined = match cfg.refine_width()? {
        Some(width) => parallel::refine_all(&result, base.g_a, base.tau, &settings, width)?,
        None => Vec::new(),
    };
    let names: Vec<&str> = result.regime_sequence().into_iter().map(|r| r.name()).collect();
    w(out, format_args!("regimes: {}", names.join(" -> ")))?;
    for t in refined.iter().chain(if refined.is_empty() { &result.transitions[..] } else { &[] }) {
        w(out, format_args!("{} -> {} in [{}, {}]", t.from, t.to, t.kappa_low, t.kappa_high))?;
    }
    let path = cfg.output_or("sweep.json");
    write_report_json(
        &SweepReport {
            g_a: base.g_a,
            tau: base.tau,
            sweep: result,
            refined_transitions: refined,
        },
        &path,
    )?;
    w(out, format_args!("wrote {}", path.display()))
}

/// Settling time after which alternation is judged: the second half of the run.
pub fn settle_time(t_end: f64) -> f64 {
    0.5 * t_end
}

fn recall(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let params = cfg.network_params()?;
    let integration = cfg.network_integration()?;
    let demo = recall_demo(&params, &integration, cfg.seed())?;
    if let Some(warning) = &demo.warning {
        w(out, format_args!("warning: {warning}"))?;
    }
    let dir = cfg.output_or("recall-demo");
    let files = write_recall_datasets(&demo, &dir)?;
    let alternation = demo.alternation(settle_time(integration.t_end()));
    let final_sync_error = demo.sync_error[demo.sync_error.len() - 1];
    w(out, format_args!("final sync error = {final_sync_error}"))?;
    w(
        out,
        format_args!(
            "hypercolumn 1: {} periods, mean period {}, min peak {}, max trough {}",
            alternation.periods(),
            alternation.mean_period.map_or("n/a".into(), |p| p.to_string()),
            alternation.min_peak,
            alternation.max_trough
        ),
    )?;
    let summary = RecallSummary {
        params,
        seed: cfg.seed(),
        corollary: demo.corollary,
        warning: demo.warning.clone(),
        final_sync_error,
        alternation,
        files,
    };
    let path = dir.join("summary.json");
    write_report_json(&summary, &path)?;
    w(out, format_args!("wrote datasets to {}", dir.display()))
}
