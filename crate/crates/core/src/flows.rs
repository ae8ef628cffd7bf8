//! The BO flow `u_t = -H u_xx - (1/2)(u^2)_x` and the regularized flows
//! `u_t = -(kappa/2) u_x + (kappa^2/2) (m + conj(m) - |m|^2)_x` on the truncated lattice,
//! integrated with classical RK4, plus invariant tracking and the convergence and
//! trapping experiments built on top.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SmallnessViolation};
use crate::field::{analytic_norm, classic_invariants, l2_norm, make_field, Field, LatticeSpec};
use crate::lax::{beta, gauge_m, gradient_from_gauge, ResolventMethod};
use crate::par;
use crate::spectral::{
    exp_energy, exp_energy_of, geometric_constants, spectral_data, stable_root, transcendental_bounds_from,
    GeometricConstants,
};

/// Largest tolerated conjugate-symmetry defect of a recorded snapshot.
pub const SYMMETRY_DRIFT_LIMIT: f64 = 1e-10;
/// Step halving may change the terminal state by this multiple of the claimed tolerance.
pub const HALVING_FACTOR: f64 = 20.0;
/// Relative allowance on `sup |u_+|_{rho,1} <= X_max`.
pub const TRAP_TOLERANCE: f64 = 1e-4;
/// Number of lowest eigenvalues tracked by default.
pub const DEFAULT_EIG_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowKind {
    Bo,
    HKappa { kappa: f64 },
}

impl FlowKind {
    fn validate(&self) -> Result<()> {
        match self {
            FlowKind::HKappa { kappa } if !(*kappa > 0.0) => {
                Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FlowKind::Bo => "bo".into(),
            FlowKind::HKappa { kappa } => format!("h_kappa({kappa})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub lattice: LatticeSpec,
    pub lambda_probes: Vec<f64>,
    pub eig_count: usize,
    /// Abort once `|u|_{rho,1}` exceeds this; `None` means `10 x_max`.
    pub norm_limit: Option<f64>,
    /// Run the dt/2 audit with this claimed tolerance on the terminal state.
    pub halving_tol: Option<f64>,
}

impl FlowConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize, lattice: LatticeSpec) -> Self {
        FlowConfig {
            dt,
            t_end,
            record_every,
            lattice,
            lambda_probes: vec![1.0, 10.0],
            eig_count: DEFAULT_EIG_COUNT,
            norm_limit: None,
            halving_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.record_every < 1 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the step actually taken (`t_end` is hit exactly).
    pub fn steps(&self) -> (usize, f64) {
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, self.dt)
        } else {
            (steps, self.t_end / steps as f64)
        }
    }
}

/// `V(u)` for the chosen flow; real-valued and zero-mean.
pub fn vector_field(u: &Field, kind: FlowKind) -> Result<Field> {
    u.require_real_zero_mean()?;
    match kind {
        FlowKind::Bo => bo_field(u),
        FlowKind::HKappa { kappa } => {
            kind.validate()?;
            let m = gauge_m(u, kappa, ResolventMethod::Direct)?;
            let grad = gradient_from_gauge(&m, u.n_max());
            Ok(u
                .derivative()
                .scale(-0.5 * kappa)
                .add_scaled(0.5 * kappa * kappa, &grad.derivative()))
        }
    }
}

fn bo_field(u: &Field) -> Result<Field> {
    // -H d_xx has multiplier -i n|n|
    let linear = u.imag_multiplier(|n| -((n * n.abs()) as f64));
    Ok(linear.add_scaled(-0.5, &u.multiply(u)?.derivative()))
}

/// `R_kappa(u) = V_kappa(u) - V_BO(u)`.
pub fn residual_field(u: &Field, kappa: f64) -> Result<Field> {
    Ok(&vector_field(u, FlowKind::HKappa { kappa })? - &vector_field(u, FlowKind::Bo)?)
}

/// Norms of `R_kappa(u)` along a kappa sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub kappa: f64,
    pub norm_rho_eps: f64,
    pub norm_l2: f64,
}

/// `|R_kappa(u)|_{rho - eps, 1}` and `|R_kappa(u)|_{L^2}` for each kappa, `eps = rho/6`.
pub fn residual_sweep(u: &Field, kappas: &[f64], rho: f64) -> Result<Vec<ResidualPoint>> {
    let eps = convergence_epsilon(rho);
    par::map(kappas, |&kappa| {
        let r = residual_field(u, kappa)?;
        Ok(ResidualPoint {
            kappa,
            norm_rho_eps: analytic_norm(&r, rho - eps, 1.0)?,
            norm_l2: l2_norm(&r),
        })
    })
    .into_iter()
    .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

/// `eps = rho / 6`, the loss of analyticity radius used for convergence norms.
pub fn convergence_epsilon(rho: f64) -> f64 {
    rho / 6.0
}

fn rk4_step(u: &Field, dt: f64, kind: FlowKind) -> Result<Field> {
    let k1 = vector_field(u, kind)?;
    let k2 = vector_field(&u.add_scaled(0.5 * dt, &k1), kind)?;
    let k3 = vector_field(&u.add_scaled(0.5 * dt, &k2), kind)?;
    let k4 = vector_field(&u.add_scaled(dt, &k3), kind)?;
    Ok(u
        .add_scaled(dt / 6.0, &k1)
        .add_scaled(dt / 3.0, &k2)
        .add_scaled(dt / 3.0, &k3)
        .add_scaled(dt / 6.0, &k4))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct InvariantReport {
    pub times: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub exp_energy: Vec<f64>,
    /// `|u_+|_{rho,1}`.
    pub norm_rho1: Vec<f64>,
    /// `|u|_{rho,1}` over all modes.
    pub norm_full: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// `beta_probes[t][k] = beta(lambda_k; u(t))`.
    pub beta_probes: Vec<Vec<f64>>,
    /// Lowest eigenvalues of the Lax matrix, one row per recorded time.
    pub eigenvalues: Vec<Vec<f64>>,
}

/// `max_t |x(t) - x(0)| / |x(0)|` (absolute when `x(0) = 0`).
pub fn relative_drift(series: &[f64]) -> f64 {
    let Some(&x0) = series.first() else { return 0.0 };
    let scale = if x0 != 0.0 { x0.abs() } else { 1.0 };
    series.iter().map(|x| (x - x0).abs() / scale).fold(0.0, f64::max)
}

fn column_drift(rows: &[Vec<f64>]) -> f64 {
    let Some(first) = rows.first() else { return 0.0 };
    (0..first.len())
        .map(|k| relative_drift(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .fold(0.0, f64::max)
}

impl InvariantReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn record(&mut self, u: &Field, t: f64, cfg: &FlowConfig) -> Result<()> {
        let n = u.n_max();
        let rho = cfg.lattice.rho;
        let classic = classic_invariants(u)?;
        let spec = spectral_data(u, n)?;
        let betas = cfg
            .lambda_probes
            .iter()
            .map(|&l| beta(u, l, ResolventMethod::Direct))
            .collect::<Result<Vec<_>>>()?;
        self.times.push(t);
        self.momentum.push(classic.momentum);
        self.energy.push(classic.energy);
        self.exp_energy.push(exp_energy_of(&spec, rho)?);
        self.norm_rho1.push(analytic_norm(&u.positive_part(), rho, 1.0)?);
        self.norm_full.push(analytic_norm(u, rho, 1.0)?);
        self.beta_probes.push(betas);
        self.eigenvalues
            .push(spec.eigenvalues.iter().take(cfg.eig_count).copied().collect());
        Ok(())
    }

    pub fn momentum_drift(&self) -> f64 {
        relative_drift(&self.momentum)
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(&self.energy)
    }

    pub fn exp_energy_drift(&self) -> f64 {
        relative_drift(&self.exp_energy)
    }

    /// Largest relative drift over the beta probes.
    pub fn beta_drift(&self) -> f64 {
        column_drift(&self.beta_probes)
    }

    /// Largest relative drift over the tracked eigenvalues.
    pub fn eigen_drift(&self) -> f64 {
        column_drift(&self.eigenvalues)
    }

    pub fn csv_header(&self) -> String {
        let mut cols: Vec<String> = ["t", "P", "H_BO", "E_rho", "norm_rho1"].iter().map(|s| s.to_string()).collect();
        cols.extend((1..=self.lambdas.len()).map(|k| format!("beta_l{k}")));
        let k = self.eigenvalues.first().map_or(0, |r| r.len());
        cols.extend((1..=k).map(|j| format!("eig_{j}")));
        cols.join(",")
    }

    /// Header line plus one row per record, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for i in 0..self.len() {
            let mut row = vec![
                self.times[i],
                self.momentum[i],
                self.energy[i],
                self.exp_energy[i],
                self.norm_rho1[i],
            ];
            row.extend(&self.beta_probes[i]);
            row.extend(&self.eigenvalues[i]);
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// State at each recorded time.
    pub trajectory: Vec<Field>,
    pub report: InvariantReport,
}

fn check_snapshot(u: &mut Field, t: f64) -> Result<()> {
    let drift = u.symmetry_defect();
    if !(drift < SYMMETRY_DRIFT_LIMIT) {
        return Err(Error::SymmetryDrift { t, drift });
    }
    u.symmetrize();
    u.require_real_zero_mean()
}

fn norm_limit(cfg: &FlowConfig) -> Result<f64> {
    match cfg.norm_limit {
        Some(l) => Ok(l),
        None => Ok(10.0 * geometric_constants(1e-10)?.x_max),
    }
}

fn integrate_to_end(u0: &Field, kind: FlowKind, steps: usize, dt: f64, limit: f64, rho: f64) -> Result<Field> {
    let mut u = u0.clone();
    for k in 1..=steps {
        u = rk4_step(&u, dt, kind)?;
        guard_norm(&u, k as f64 * dt, limit, rho)?;
    }
    Ok(u)
}

fn guard_norm(u: &Field, t: f64, limit: f64, rho: f64) -> Result<()> {
    let norm = analytic_norm(u, rho, 1.0)?;
    if norm > limit || !norm.is_finite() {
        Err(Error::NormExplosion { t, norm, limit })
    } else {
        Ok(())
    }
}

/// RK4 integration of `u_t = V(u)` from `u0` (resized onto `cfg.lattice`).
pub fn evolve(u0: &Field, kind: FlowKind, cfg: &FlowConfig) -> Result<Evolution> {
    cfg.validate()?;
    kind.validate()?;
    let rho = cfg.lattice.rho;
    let mut u = u0.resized(cfg.lattice.n_max);
    u.require_real_zero_mean()?;
    let limit = norm_limit(cfg)?;
    let (steps, dt) = cfg.steps();

    let mut report = InvariantReport {
        lambdas: cfg.lambda_probes.clone(),
        ..Default::default()
    };
    let mut trajectory = Vec::new();
    let start = u.clone();
    check_snapshot(&mut u, 0.0)?;
    report.record(&u, 0.0, cfg)?;
    trajectory.push(u.clone());
    for k in 1..=steps {
        let t = k as f64 * dt;
        u = rk4_step(&u, dt, kind)?;
        guard_norm(&u, t, limit, rho)?;
        if k % cfg.record_every == 0 || k == steps {
            check_snapshot(&mut u, t)?;
            report.record(&u, t, cfg)?;
            trajectory.push(u.clone());
        }
    }

    if let Some(tol) = cfg.halving_tol {
        let fine = integrate_to_end(&start, kind, 2 * steps, 0.5 * dt, limit, rho)?;
        let change = l2_norm(&(&fine - &u));
        let allowed = HALVING_FACTOR * tol;
        if !(change <= allowed) {
            return Err(Error::StepHalving { change, limit: allowed });
        }
    }
    Ok(Evolution { trajectory, report })
}

/// Sup-in-time distances between two trajectories sampled at the same times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryDistance {
    pub sup_l2: f64,
    pub sup_rho_eps: f64,
}

pub fn trajectory_distance(a: &[Field], b: &[Field], rho: f64) -> Result<TrajectoryDistance> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "trajectories have {} and {} snapshots",
            a.len(),
            b.len()
        )));
    }
    let eps = convergence_epsilon(rho);
    let mut d = TrajectoryDistance { sup_l2: 0.0, sup_rho_eps: 0.0 };
    for (x, y) in a.iter().zip(b) {
        let diff = x - y;
        d.sup_l2 = d.sup_l2.max(l2_norm(&diff));
        d.sup_rho_eps = d.sup_rho_eps.max(analytic_norm(&diff, rho - eps, 1.0)?);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaPair {
    pub kappa: f64,
    pub kappa_next: f64,
    pub distance: TrajectoryDistance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaConvergence {
    pub times: Vec<f64>,
    pub kappas: Vec<f64>,
    /// Time step used for each kappa run.
    pub dts: Vec<f64>,
    pub pairs: Vec<KappaPair>,
    /// Largest-kappa trajectory against the direct BO trajectory.
    pub to_bo: TrajectoryDistance,
}

impl KappaConvergence {
    /// `d_{k+1} / d_k` of the sup-in-time `L^2` pair distances.
    pub fn l2_ratios(&self) -> Vec<f64> {
        self.pairs
            .windows(2)
            .map(|w| w[1].distance.sup_l2 / w[0].distance.sup_l2)
            .collect()
    }

    /// `C` with `|u^kappa - u^{2 kappa}| ~ C / (2 kappa)`, read off the sweep.
    pub fn rate_constant(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| 2.0 * p.kappa * p.distance.sup_l2)
            .fold(0.0, f64::max)
    }
}

/// Time step for a regularized run: the record interval of `cfg` split into at least
/// `ceil(interval kappa N)` substeps, so `dt <= 1/(kappa N)`.
pub fn kappa_substeps(cfg: &FlowConfig, kappa: f64) -> (usize, f64) {
    let (_, dt) = cfg.steps();
    let interval = dt * cfg.record_every as f64;
    let need = (interval * kappa * cfg.lattice.n_max as f64 - 1e-9).ceil().max(1.0) as usize;
    let sub = need.max(cfg.record_every);
    (sub, interval / sub as f64)
}

/// Runs the regularized flows for every kappa (concurrently) and the BO flow, all
/// recorded at the record times of `cfg`.
pub fn kappa_convergence(u0: &Field, kappas: &[f64], cfg: &FlowConfig) -> Result<KappaConvergence> {
    cfg.validate()?;
    if kappas.len() < 2 || kappas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("need at least two strictly ascending kappas".into()));
    }
    let (steps, _) = cfg.steps();
    if steps % cfg.record_every != 0 {
        return Err(Error::InvalidParameter(format!(
            "{steps} steps is not a multiple of record_every = {}",
            cfg.record_every
        )));
    }
    let mut jobs: Vec<(FlowKind, FlowConfig)> = kappas
        .iter()
        .map(|&kappa| {
            let (sub, dt) = kappa_substeps(cfg, kappa);
            let mut c = cfg.clone();
            c.dt = dt;
            c.record_every = sub;
            c.halving_tol = None;
            (FlowKind::HKappa { kappa }, c)
        })
        .collect();
    jobs.push((FlowKind::Bo, FlowConfig { halving_tol: None, ..cfg.clone() }));

    let runs = par::map(&jobs, |(kind, c)| evolve(u0, *kind, c))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rho = cfg.lattice.rho;
    let times = runs[0].report.times.clone();
    for r in &runs {
        let same = r.report.times.len() == times.len()
            && r.report.times.iter().zip(&times).all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0));
        if !same {
            return Err(Error::InvalidParameter("runs were recorded at different times".into()));
        }
    }
    let mut pairs = Vec::with_capacity(kappas.len() - 1);
    for k in 0..kappas.len() - 1 {
        pairs.push(KappaPair {
            kappa: kappas[k],
            kappa_next: kappas[k + 1],
            distance: trajectory_distance(&runs[k].trajectory, &runs[k + 1].trajectory, rho)?,
        });
    }
    let last = kappas.len() - 1;
    let to_bo = trajectory_distance(&runs[last].trajectory, &runs[last + 1].trajectory, rho)?;
    Ok(KappaConvergence {
        times,
        kappas: kappas.to_vec(),
        dts: jobs.iter().take(kappas.len()).map(|(_, c)| c.dt).collect(),
        pairs,
        to_bo,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapReport {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "X_max")]
    pub x_root: f64,
    pub sup_norm: f64,
    pub trapped: bool,
    pub x_max: f64,
    #[serde(rename = "A_max")]
    pub a_max: f64,
    pub initial_norm: f64,
    pub exp_energy_drift: f64,
    /// Both transcendental bounds held at every recorded snapshot.
    pub bounds_ok: bool,
    /// Smallest `(E^{1/2} - lower, upper - E^{1/2})` over the snapshots.
    pub min_slack: (f64, f64),
}

/// Checks the smallness conditions, runs the flow and compares the sup of
/// `|u_+(t)|_{rho,1}` with the stable root `X_max` of `f(X) = E_rho(u0)^{1/2}`.
pub fn trap_experiment(u0: &Field, rho: f64, kind: FlowKind, cfg: &FlowConfig) -> Result<TrapReport> {
    let consts = geometric_constants(1e-10)?;
    let mut cfg = cfg.clone();
    cfg.lattice.rho = rho;
    cfg.validate()?;
    let u0 = u0.resized(cfg.lattice.n_max);
    u0.require_real_zero_mean()?;

    let (a, initial_norm) = smallness(&u0, rho, &consts)?;
    let x_root = stable_root(a, &consts)?;
    let run = evolve(&u0, kind, &cfg)?;
    let sup_norm = run.report.norm_rho1.iter().copied().fold(0.0, f64::max);

    let mut bounds_ok = true;
    let mut min_slack = (f64::INFINITY, f64::INFINITY);
    for (u, e) in run.trajectory.iter().zip(&run.report.exp_energy) {
        let b = transcendental_bounds_from(u, rho, *e, &consts)?;
        bounds_ok &= b.lower_ok && b.upper_ok;
        min_slack = (min_slack.0.min(b.slack.0), min_slack.1.min(b.slack.1));
    }
    Ok(TrapReport {
        a,
        x_root,
        sup_norm,
        trapped: sup_norm <= x_root * (1.0 + TRAP_TOLERANCE),
        x_max: consts.x_max,
        a_max: consts.a_max,
        initial_norm,
        exp_energy_drift: run.report.exp_energy_drift(),
        bounds_ok,
        min_slack,
    })
}

/// `(E_rho(u0)^{1/2}, |u0_+|_{rho,1})`, or which smallness condition fails.
pub fn smallness(u0: &Field, rho: f64, consts: &GeometricConstants) -> Result<(f64, f64)> {
    let a = exp_energy(u0, rho, u0.n_max())?.max(0.0).sqrt();
    let norm = analytic_norm(&u0.positive_part(), rho, 1.0)?;
    let energy_bad = !(a < consts.a_max);
    let norm_bad = !(norm <= consts.x_max);
    match (energy_bad, norm_bad) {
        (true, true) => Err(Error::Smallness(SmallnessViolation::Both)),
        (true, false) => Err(Error::Smallness(SmallnessViolation::Energy)),
        (false, true) => Err(Error::Smallness(SmallnessViolation::Norm)),
        (false, false) => Ok((a, norm)),
    }
}

/// The small reference state `0.05 e^{ix} + 0.01 i e^{2ix} + c.c.`.
pub fn standard_state(n_max: usize, rho: f64) -> Result<Field> {
    let spec = LatticeSpec::new(n_max, rho, 1.0)?;
    make_field(
        &[(1, Complex64::new(0.05, 0.0)), (2, Complex64::new(0.0, 0.01))],
        &spec,
        true,
    )
}

/// `2a cos x` with `a` chosen so that `|u_+|_{rho,1} = fraction * x_max`.
pub fn trap_state(n_max: usize, rho: f64, fraction: f64) -> Result<Field> {
    let x_max = geometric_constants(1e-10)?.x_max;
    // |u_+|_{rho,1}^2 = <1>^2 a^2 e^{2 rho} = 2 a^2 e^{2 rho}
    let a = fraction * x_max / (std::f64::consts::SQRT_2 * rho.exp());
    make_field(&[(1, Complex64::new(a, 0.0))], &LatticeSpec::new(n_max, rho, 1.0)?, true)
}
