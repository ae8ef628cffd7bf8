//! Experiment configuration: a strict JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use bolax_core::field::{make_field, random_analytic_field, EXPONENT_CAP};
use bolax_core::flows::{standard_state, trap_state, FlowConfig, FlowKind};
use bolax_core::intertwine::MIN_STEPS;
use bolax_core::lax::default_kappa;
use bolax_core::snapshot::read_json;
use bolax_core::verify::VerifyConfig;
use bolax_core::{Field, LatticeSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable consulted for the output directory when neither the flag nor
/// the file sets one.
pub const OUT_ENV: &str = "BOLAX_OUT";
pub const DEFAULT_OUT: &str = "bolax-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub n: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial state; positive modes are mirrored into a real field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `0.05 e^{ix} + 0.01 i e^{2ix} + c.c.`
    #[default]
    Standard,
    Modes { modes: Vec<ModeSpec> },
    /// Random analytic field; the seed defaults to the top-level seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        amplitude: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    /// `2a cos x` with `|u_+|_{rho,1} = fraction * x_max`.
    Trap { fraction: f64 },
    Snapshot { path: PathBuf },
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowSpec {
    #[default]
    Bo,
    /// `kappa` defaults to `max(100 C_1 |u0|_{rho,1}, 8N)`.
    HKappa {
        #[serde(default)]
        kappa: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Root-finding and series tolerance for the geometric constants.
    pub constants: f64,
    /// Claimed terminal-state tolerance for the step-halving audit of `simulate`.
    pub halving: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { constants: 1e-10, halving: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub flow: FlowSpec,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_probes")]
    pub lambda_probes: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_steps")]
    pub intertwine_steps: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    1.0
}
fn default_record_every() -> usize {
    50
}
fn default_kappas() -> Vec<f64> {
    vec![250.0, 500.0, 1000.0, 2000.0]
}
fn default_probes() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}
fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    20
}
fn default_steps() -> usize {
    512
}

/// Values given on the command line; each one beats the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub n_max: Option<usize>,
    pub rho: Option<f64>,
    pub kappa: Vec<f64>,
}

/// Reads, overrides and validates a configuration file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config_str(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if let InitialData::Snapshot { path: snap } = &mut cfg.initial {
        if snap.is_relative() {
            if let Some(dir) = path.parent() {
                *snap = dir.join(&*snap);
            }
        }
    }
    apply_overrides(&mut cfg, overrides);
    cfg.validate()?;
    Ok(cfg)
}

/// Strict parse without overrides or validation; errors carry line and column.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn apply_overrides(cfg: &mut ExperimentConfig, o: &Overrides) {
    if let Some(out) = &o.out {
        cfg.output_dir = Some(out.clone());
    }
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = o.dt {
        cfg.dt = dt;
    }
    if let Some(t) = o.t_end {
        cfg.t_end = t;
    }
    if let Some(n) = o.n_max {
        cfg.lattice.n_max = n;
    }
    if let Some(rho) = o.rho {
        cfg.lattice.rho = rho;
    }
    if !o.kappa.is_empty() {
        cfg.kappas = o.kappa.clone();
        if let FlowSpec::HKappa { kappa } = &mut cfg.flow {
            *kappa = Some(o.kappa[o.kappa.len() - 1]);
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid `{field}`: {msg}"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.lattice.validate().map_err(|e| invalid("lattice", e))?;
        let exponent = 2.0 * self.lattice.rho * self.lattice.n_max as f64;
        if exponent > EXPONENT_CAP {
            return Err(invalid("lattice", format!("2 rho n_max = {exponent} exceeds {EXPONENT_CAP}")));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if self.record_every < 1 {
            return Err(invalid("record_every", "must be at least 1"));
        }
        if self.kappas.len() < 2 || self.kappas.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(invalid("kappas", "need at least two positive values"));
        }
        if self.kappas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("kappas", "must be strictly ascending"));
        }
        if self.lambda_probes.iter().any(|l| !l.is_finite()) {
            return Err(invalid("lambda_probes", "must be finite"));
        }
        if self.samples < 1 {
            return Err(invalid("samples", "must be at least 1"));
        }
        if self.intertwine_steps < MIN_STEPS {
            return Err(invalid("intertwine_steps", format!("must be at least {MIN_STEPS}")));
        }
        if !(self.tolerances.constants > 0.0) {
            return Err(invalid("tolerances.constants", "must be positive"));
        }
        if let Some(h) = self.tolerances.halving {
            if !(h > 0.0) {
                return Err(invalid("tolerances.halving", "must be positive"));
            }
        }
        if let FlowSpec::HKappa { kappa: Some(k) } = self.flow {
            if !(k > 0.0 && k.is_finite()) {
                return Err(invalid("flow.kappa", "must be positive"));
            }
        }
        match &self.initial {
            InitialData::Random { amplitude, margin, .. } if !(*amplitude > 0.0 && *margin > 0.0) => {
                return Err(invalid("initial", "amplitude and margin must be positive"));
            }
            InitialData::Trap { fraction } if !(*fraction >= 0.0) => {
                return Err(invalid("initial.fraction", "must be nonnegative"));
            }
            InitialData::Snapshot { path } if !path.exists() => {
                return Err(invalid("initial.path", format!("{} does not exist", path.display())));
            }
            _ => {}
        }
        Ok(())
    }

    /// Output directory: flag or file, then the environment, then the default.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn initial_state(&self) -> Result<Field, CliError> {
        let spec = self.lattice;
        let field = match &self.initial {
            InitialData::Standard => standard_state(spec.n_max, spec.rho),
            InitialData::Modes { modes } => {
                let list: Vec<(i64, Complex64)> = modes.iter().map(|m| (m.n, Complex64::new(m.re, m.im))).collect();
                make_field(&list, &spec, true)
            }
            InitialData::Random { seed, amplitude, margin } => {
                random_analytic_field(seed.unwrap_or(self.seed), &spec, *amplitude, *margin)
            }
            InitialData::Trap { fraction } => trap_state(spec.n_max, spec.rho, *fraction),
            InitialData::Snapshot { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                read_json(&text).map(|(u, _)| u.resized(spec.n_max))
            }
        };
        field.map_err(|e| CliError::Config(format!("initial data: {e}")))
    }

    pub fn flow_kind(&self, u0: &Field) -> Result<FlowKind, CliError> {
        match self.flow {
            FlowSpec::Bo => Ok(FlowKind::Bo),
            FlowSpec::HKappa { kappa: Some(kappa) } => Ok(FlowKind::HKappa { kappa }),
            FlowSpec::HKappa { kappa: None } => default_kappa(u0, self.lattice.rho)
                .map(|kappa| FlowKind::HKappa { kappa })
                .map_err(|e| CliError::module("default_kappa", e)),
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        let mut f = FlowConfig::new(self.dt, self.t_end, self.record_every, self.lattice);
        f.lambda_probes = self.lambda_probes.clone();
        f.halving_tol = self.tolerances.halving;
        f
    }

    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            n_max: self.lattice.n_max,
            rho: self.lattice.rho,
            seed: self.seed,
            samples: self.samples,
            dt: self.dt,
            t_end: self.t_end,
            kappas: self.kappas.clone(),
            intertwine_steps: self.intertwine_steps,
            lambda_probes: self.lambda_probes.clone(),
        }
    }
}
