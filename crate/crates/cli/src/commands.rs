//! Command bodies. Each writes its artifacts under the output directory and returns a
//! printable summary with the exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bolax_core::flows::{evolve, kappa_convergence, trap_experiment};
use bolax_core::snapshot::write_json;
use bolax_core::spectral::geometric_constants;
use bolax_core::verify::run_suite;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{parse_config, ExperimentConfig};
use crate::{CliError, Command, EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_PASS};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: u8,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Provenance block shared by every artifact. Deliberately free of timestamps and
/// paths, so identical inputs give identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub lattice: Value,
    pub tolerances: Value,
}

impl Metadata {
    pub fn new(command: &'static str, cfg: &ExperimentConfig) -> Self {
        Metadata {
            tool: "bolax",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: config_hash(cfg),
            lattice: json!(cfg.lattice),
            tolerances: json!(cfg.tolerances),
        }
    }

    /// `# key: value` lines for the head of a CSV file.
    pub fn csv_preamble(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: {}", self.tool);
        let _ = writeln!(out, "# version: {}", self.version);
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# config_hash: {}", self.config_hash);
        let _ = writeln!(out, "# lattice: {}", self.lattice);
        let _ = writeln!(out, "# tolerances: {}", self.tolerances);
        out
    }
}

/// SHA-256 of the resolved configuration, output directory excluded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output_dir = None;
    let text = serde_json::to_string(&c).expect("config serializes");
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn json_with_metadata(meta: &Metadata, body: impl Serialize) -> Result<String, CliError> {
    let mut v = json!({ "metadata": meta });
    match serde_json::to_value(body).map_err(|e| CliError::Io(e.to_string()))? {
        Value::Object(map) => v.as_object_mut().expect("object").extend(map),
        other => {
            v["result"] = other;
        }
    }
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    let args = command.args();
    let cfg = parse_config(&args.config, &args.overrides())?;
    match command {
        Command::Constants(_) => constants(&cfg),
        Command::Verify(_) => verify(&cfg),
        Command::Simulate(_) => simulate(&cfg),
        Command::Converge(_) => converge(&cfg),
        Command::Trap(_) => trap(&cfg),
    }
}

pub fn constants(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let g = geometric_constants(cfg.tolerances.constants).map_err(|e| CliError::module("constants", e))?;
    let meta = Metadata::new("constants", cfg);
    let path = write_file(&cfg.output_dir(), "constants.json", &json_with_metadata(&meta, g)?)?;
    let summary = format!(
        "c1 = {:.12}\nc2 = {:.12}\nx_max = {:.12}\nA_max = {:.12}\nwrote {}\n",
        g.c1,
        g.c2,
        g.x_max,
        g.a_max,
        path.display()
    );
    Ok(Outcome { exit_code: EXIT_PASS, summary, files: vec![path] })
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let report = run_suite(&cfg.verify_config()).map_err(|e| CliError::module("verify", e))?;
    let meta = Metadata::new("verify", cfg);
    let path = write_file(&cfg.output_dir(), "verify.json", &json_with_metadata(&meta, &report)?)?;
    let mut summary = String::new();
    for c in &report.checks {
        let status = if c.passed { "PASS" } else if c.aborted { "ABORT" } else { "FAIL" };
        let _ = match &c.error {
            Some(err) => writeln!(summary, "{status} {}: {err}", c.name),
            None => writeln!(summary, "{status} {}: {:.3e} (limit {:.3e})", c.name, c.value, c.limit),
        };
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(summary, "{passed}/{} checks passed\nwrote {}", report.checks.len(), path.display());
    let exit_code = if report.checks.iter().any(|c| c.aborted) {
        EXIT_NUMERICAL
    } else if report.passed {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(Outcome { exit_code, summary, files: vec![path] })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_state()?;
    let kind = cfg.flow_kind(&u0)?;
    let run = evolve(&u0, kind, &cfg.flow_config()).map_err(|e| CliError::module("simulate", e))?;
    let meta = Metadata::new("simulate", cfg);
    let dir = cfg.output_dir();

    let mut csv = meta.csv_preamble();
    let _ = writeln!(csv, "# flow: {}", kind.label());
    csv.push_str(&run.report.to_csv());
    let csv_path = write_file(&dir, "simulate.csv", &csv)?;

    let last = run.trajectory.last().expect("trajectory holds the initial state");
    let snap = write_json(last, &cfg.lattice).map_err(|e| CliError::module("snapshot", e))?;
    let snap_path = write_file(&dir, "final_state.json", &(snap + "\n"))?;

    let r = &run.report;
    let mut summary = format!("flow {} over {} records\n", kind.label(), r.len());
    let _ = writeln!(summary, "momentum drift {:.3e}", r.momentum_drift());
    let _ = writeln!(summary, "energy drift {:.3e}", r.energy_drift());
    let _ = writeln!(summary, "spectral energy drift {:.3e}", r.exp_energy_drift());
    let _ = writeln!(summary, "beta drift {:.3e}", r.beta_drift());
    let _ = writeln!(summary, "eigenvalue drift {:.3e}", r.eigen_drift());
    let _ = writeln!(summary, "wrote {}\nwrote {}", csv_path.display(), snap_path.display());
    Ok(Outcome { exit_code: EXIT_PASS, summary, files: vec![csv_path, snap_path] })
}

pub fn converge(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_state()?;
    let conv =
        kappa_convergence(&u0, &cfg.kappas, &cfg.flow_config()).map_err(|e| CliError::module("converge", e))?;
    let meta = Metadata::new("converge", cfg);

    let mut csv = meta.csv_preamble();
    csv.push_str("kappa,reference,dt,sup_l2,sup_rho_eps,ratio_l2\n");
    let ratios = conv.l2_ratios();
    for (k, p) in conv.pairs.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { format!("{:.16e}", ratios[k - 1]) };
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{ratio}",
            p.kappa, p.kappa_next, conv.dts[k], p.distance.sup_l2, p.distance.sup_rho_eps
        );
    }
    let last = conv.kappas.len() - 1;
    let _ = writeln!(
        csv,
        "{:.16e},bo,{:.16e},{:.16e},{:.16e},",
        conv.kappas[last], conv.dts[last], conv.to_bo.sup_l2, conv.to_bo.sup_rho_eps
    );
    let path = write_file(&cfg.output_dir(), "converge.csv", &csv)?;

    let mut summary = String::new();
    for p in &conv.pairs {
        let _ = writeln!(summary, "kappa {} vs {}: sup L2 {:.3e}", p.kappa, p.kappa_next, p.distance.sup_l2);
    }
    let _ = writeln!(summary, "halving ratios {:?}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());
    let _ = writeln!(summary, "kappa {} vs bo: sup L2 {:.3e}", conv.kappas[last], conv.to_bo.sup_l2);
    let _ = writeln!(summary, "rate constant C = {:.4e}", conv.rate_constant());
    let _ = writeln!(summary, "wrote {}", path.display());
    Ok(Outcome { exit_code: EXIT_PASS, summary, files: vec![path] })
}

pub fn trap(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u0 = cfg.initial_state()?;
    let kind = cfg.flow_kind(&u0)?;
    let report = trap_experiment(&u0, cfg.lattice.rho, kind, &cfg.flow_config())
        .map_err(|e| CliError::module("trap", e))?;
    let meta = Metadata::new("trap", cfg);
    let mut body = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    body["flow"] = json!(kind);
    let path = write_file(&cfg.output_dir(), "trap.json", &json_with_metadata(&meta, body)?)?;

    let mut summary = format!(
        "A = {:.6e} (A_max {:.6e})\nX_max = {:.6e}\nsup |u_+|_(rho,1) = {:.6e}\n",
        report.a, report.a_max, report.x_root, report.sup_norm
    );
    let _ = writeln!(summary, "trapped: {}\nbounds hold: {}", report.trapped, report.bounds_ok);
    let _ = writeln!(summary, "wrote {}", path.display());
    let exit_code = if report.trapped && report.bounds_ok {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    };
    Ok(Outcome { exit_code, summary, files: vec![path] })
}
