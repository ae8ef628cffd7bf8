use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which half of the trapping smallness condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallnessViolation {
    /// `E_rho(u0)^{1/2} >= A_max`
    Energy,
    /// `|u0_+|_{rho,1} > x_max`
    Norm,
    Both,
}

impl std::fmt::Display for SmallnessViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SmallnessViolation::Energy => f.write_str("spectral energy condition E^(1/2) < A_max"),
            SmallnessViolation::Norm => f.write_str("norm condition |u0_+|_{rho,1} <= x_max"),
            SmallnessViolation::Both => f.write_str(
                "spectral energy condition E^(1/2) < A_max and norm condition |u0_+|_{rho,1} <= x_max",
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {n} lies outside the lattice of radius {n_max}")]
    IndexOutOfRange { n: i64, n_max: usize },

    #[error("mode {0} supplied more than once")]
    DuplicateIndex(i64),

    #[error("symmetrized construction takes positive modes only, got {0}")]
    NonPositiveMode(i64),

    #[error("lattice mismatch: radius {left} vs {right}")]
    LatticeMismatch { left: usize, right: usize },

    #[error("lattice radius {have} too small, need at least {need}")]
    LatticeTooSmall { need: usize, have: usize },

    #[error("exponent {exponent} exceeds the overflow cap {cap}")]
    ExponentCap { exponent: f64, cap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field must be real-valued with zero mean")]
    NotRealZeroMean,

    #[error("field is flagged real-valued but coefficient {n} breaks conjugate symmetry")]
    SymmetryBroken { n: i64 },

    #[error("series over <k>^(-2s) diverges for s = {0} (need s > 1/2)")]
    SeriesDiverges(f64),

    #[error("resolvent system (L + {kappa}) is singular")]
    Singular { kappa: f64 },

    #[error("Neumann contraction fails: kappa = {kappa} <= C_s |u| = {bound}")]
    NotContractive { kappa: f64, bound: f64 },

    #[error("Neumann series not converged after {terms} terms (last term norm {last})")]
    NeumannDiverged { terms: usize, last: f64 },

    #[error("inner product expected real, imaginary part {imag}")]
    NotReal { imag: f64 },

    #[error("eigensolver residual {residual} exceeds {tol}")]
    EigenResidual { residual: f64, tol: f64 },

    #[error("spectral parameter {lambda} hits the spectrum (lowest eigenvalue {nu_min})")]
    PoleHit { lambda: f64, nu_min: f64 },

    #[error("{name}: closed form and series differ by {err} (tolerance {tol})")]
    SeriesMismatch { name: &'static str, err: f64, tol: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("A = {a} outside [0, A_max = {a_max}): no trapping region")]
    NoTrapping { a: f64, a_max: f64 },

    #[error("intertwiner self-check: doubling steps moved W(rho/2) by {change} (limit {limit})")]
    IntertwinerSelfCheck { change: f64, limit: f64 },

    #[error("step-halving self-check: terminal states differ by {change} (limit {limit})")]
    StepHalving { change: f64, limit: f64 },

    #[error("norm explosion at t = {t}: |u|_(rho,1) = {norm} > {limit}")]
    NormExplosion { t: f64, norm: f64, limit: f64 },

    #[error("conjugate-symmetry drift {drift} at t = {t}")]
    SymmetryDrift { t: f64, drift: f64 },

    #[error("smallness violated: {0}")]
    Smallness(SmallnessViolation),

    #[error("snapshot format: {0}")]
    Snapshot(String),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical_abort(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::NeumannDiverged { .. }
                | Error::EigenResidual { .. }
                | Error::IntertwinerSelfCheck { .. }
                | Error::StepHalving { .. }
                | Error::NormExplosion { .. }
                | Error::SymmetryDrift { .. }
                | Error::NotReal { .. }
                | Error::RootFinding(_)
                | Error::SeriesMismatch { .. }
        )
    }
}
