//! Run configuration.
//!
//! Values are resolved in three layers: built-in defaults, then a flat TOML
//! file, then command-line flags. Later layers win.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use freerecall_core::classify::kappa_grid;
use freerecall_core::integrator::{DEFAULT_NETWORK_DT, DEFAULT_REDUCED_DT};
use freerecall_core::{ClassifierSettings, IntegrationConfig, NetworkParams, ReducedParams, ReducedState};

use crate::error::{CliError, Result};

/// Every tunable value; each is optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Number of hypercolumns N.
    #[arg(long = "n")]
    pub n_hypercolumns: Option<usize>,
    /// Coupling weight ω.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Adaptation gain g_a.
    #[arg(long = "g-a")]
    pub g_a: Option<f64>,
    /// Adaptation time constant τ (> 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Effective coupling κ for the reduced system; defaults to (N-1)ω.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,

    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long = "record-stride")]
    pub record_stride: Option<usize>,
    /// Initial d for `reduce`.
    #[arg(long, allow_hyphen_values = true)]
    pub d0: Option<f64>,
    /// Initial e for `reduce`.
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<f64>,

    #[arg(long = "trial-count")]
    pub trial_count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long = "kappa-min", allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long = "kappa-max", allow_hyphen_values = true)]
    pub kappa_max: Option<f64>,
    #[arg(long = "kappa-step")]
    pub kappa_step: Option<f64>,
    /// Bracket width for transition refinement; 0 disables refinement.
    #[arg(long = "refine-width")]
    pub refine_width: Option<f64>,

    /// Output file (or directory for `recall-demo`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Optional machine-readable report file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($base:ident, $top:ident; $($f:ident),* $(,)?) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

pub const DEFAULT_N: usize = 12;
pub const DEFAULT_OMEGA: f64 = 1.8;
pub const DEFAULT_G_A: f64 = 97.0;
pub const DEFAULT_TAU: f64 = 54.0;
pub const DEFAULT_NETWORK_T_END: f64 = 1000.0;
pub const DEFAULT_REDUCED_T_END: f64 = 500.0;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_TRIALS: usize = 16;
pub const DEFAULT_REFINE_WIDTH: f64 = 1e-3;

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config file: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// `self` overridden by every value present in `top`.
    pub fn overridden_by(self, top: RunConfig) -> Self {
        let base = self;
        merge_fields!(base, top;
            n_hypercolumns, omega, g_a, tau, kappa, dt, t_end, record_stride, d0, e0,
            trial_count, seed, horizon, kappa_min, kappa_max, kappa_step, refine_width,
            output, report,
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn network_params(&self) -> Result<NetworkParams> {
        NetworkParams::new(
            self.n_hypercolumns.unwrap_or(DEFAULT_N),
            self.omega.unwrap_or(DEFAULT_OMEGA),
            self.g_a.unwrap_or(DEFAULT_G_A),
            self.tau.unwrap_or(DEFAULT_TAU),
        )
        .map_err(Into::into)
    }

    /// Reduced parameters; `kappa` falls back to `(N-1)ω`.
    pub fn reduced_params(&self) -> Result<ReducedParams> {
        let g_a = self.g_a.unwrap_or(DEFAULT_G_A);
        let tau = self.tau.unwrap_or(DEFAULT_TAU);
        let kappa = match self.kappa {
            Some(k) => k,
            None => self.network_params()?.kappa(),
        };
        ReducedParams::new(kappa, g_a, tau).map_err(Into::into)
    }

    pub fn network_integration(&self) -> Result<IntegrationConfig> {
        self.integration(DEFAULT_NETWORK_DT, DEFAULT_NETWORK_T_END)
    }

    pub fn reduced_integration(&self) -> Result<IntegrationConfig> {
        self.integration(DEFAULT_REDUCED_DT, DEFAULT_REDUCED_T_END)
    }

    fn integration(&self, dt: f64, t_end: f64) -> Result<IntegrationConfig> {
        IntegrationConfig::new(
            self.dt.unwrap_or(dt),
            self.t_end.unwrap_or(t_end),
            self.record_stride.unwrap_or(DEFAULT_STRIDE),
        )
        .map_err(Into::into)
    }

    pub fn reduced_initial(&self) -> Result<ReducedState> {
        let d = self.d0.unwrap_or(0.1);
        let e = self.e0.unwrap_or(0.0);
        for (field, v) in [("d0", d), ("e0", e)] {
            if !v.is_finite() {
                return Err(CliError::Validation(format!("{field}: must be finite, got {v}")));
            }
        }
        Ok(ReducedState::new(d, e))
    }

    pub fn classifier(&self) -> Result<ClassifierSettings> {
        let s = ClassifierSettings::new(self.trial_count.unwrap_or(DEFAULT_TRIALS), self.seed())?;
        match self.horizon {
            Some(h) => s.with_horizon(h).map_err(Into::into),
            None => Ok(s),
        }
    }

    pub fn kappa_range(&self) -> Result<(f64, f64, f64)> {
        let min = self.kappa_min.unwrap_or(2.0);
        let max = self.kappa_max.unwrap_or(15.0);
        let step = self.kappa_step.unwrap_or(0.1);
        kappa_grid(min, max, step)?;
        Ok((min, max, step))
    }

    pub fn refine_width(&self) -> Result<Option<f64>> {
        match self.refine_width.unwrap_or(DEFAULT_REFINE_WIDTH) {
            0.0 => Ok(None),
            w if w.is_finite() && w > 0.0 => Ok(Some(w)),
            w => Err(CliError::Validation(format!(
                "refine_width: must be >= 0, got {w}"
            ))),
        }
    }

    pub fn output_or(&self, default: &str) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(default))
    }
}
