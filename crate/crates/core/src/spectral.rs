//! Spectral measure of `u_+` for the Lax matrix, the exponential spectral energy and
//! the geometric constants of the trapping argument.

use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::field::{analytic_norm, l2_norm, Field, EXPONENT_CAP};
use crate::lax::{lax_matrix, to_vector};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianEigen};
use crate::series::{sum_fixed, sum_with_tail, SeriesSum};

/// Relative residual accepted from the dense eigensolver.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// Eigenvalues `nu_1 <= ... <= nu_N`, weights `w_j = |<phi_j, u_+>|^2`, eigenbasis.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
    pub basis: CMatrix,
}

impl SpectralData {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigen(&self) -> HermitianEigen {
        HermitianEigen {
            values: self.eigenvalues.clone(),
            vectors: self.basis.clone(),
        }
    }

    /// `sum_j w_j g(nu_j)`.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.weights)
            .map(|(nu, w)| w * g(*nu))
            .sum()
    }
}

/// Hermitian eigendecomposition of `lax_matrix(u, size)` and the measure of `u_+`.
pub fn spectral_data(u: &Field, size: usize) -> Result<SpectralData> {
    let lax = lax_matrix(u, size)?;
    let eig = hermitian_eigen(lax.entries(), EIGEN_RESIDUAL_TOL)?;
    let plus = to_vector(&u.resized(size).positive_part());
    let weights = (0..size)
        .map(|j| eig.vectors.column(j).dotc(&plus).norm_sqr())
        .collect();
    Ok(SpectralData {
        eigenvalues: eig.values,
        weights,
        basis: eig.vectors,
    })
}

/// Stieltjes transform `sum_j w_j / (nu_j + lambda)`.
pub fn beta_via_measure(spec: &SpectralData, lambda: f64) -> Result<f64> {
    let nu_min = spec.eigenvalues.first().copied().unwrap_or(f64::INFINITY);
    if !(lambda > -nu_min) {
        return Err(Error::PoleHit { lambda, nu_min });
    }
    Ok(spec.integrate(|nu| 1.0 / (nu + lambda)))
}

/// Integrand `e^{rho nu} (1 + nu^2 / 4)` of the exponential spectral energy.
#[inline]
pub fn energy_density(rho: f64, nu: f64) -> f64 {
    (rho * nu).exp() * (1.0 + 0.25 * nu * nu)
}

/// `E_rho = sum_j w_j e^{rho nu_j} (1 + nu_j^2/4)` from precomputed spectral data.
pub fn exp_energy_of(spec: &SpectralData, rho: f64) -> Result<f64> {
    if let Some(top) = spec.eigenvalues.last() {
        let exponent = rho * top;
        if exponent > EXPONENT_CAP {
            return Err(Error::ExponentCap {
                exponent,
                cap: EXPONENT_CAP,
            });
        }
    }
    Ok(spec.integrate(|nu| energy_density(rho, nu)))
}

/// Exponential spectral energy of `u` with an `N x N` Lax matrix.
pub fn exp_energy(u: &Field, rho: f64, size: usize) -> Result<f64> {
    exp_energy_of(&spectral_data(u, size)?, rho)
}

/// `E_rho` at size `N` together with its value at `2N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyWithConvergence {
    pub value: f64,
    pub doubled: f64,
    /// `|E(2N) - E(N)| / E(N)` (absolute when `E(N) = 0`).
    pub self_convergence: f64,
}

pub fn exp_energy_checked(u: &Field, rho: f64, size: usize) -> Result<EnergyWithConvergence> {
    let value = exp_energy(u, rho, size)?;
    let doubled = exp_energy(&u.resized(u.n_max().max(2 * size)), rho, 2 * size)?;
    let diff = (doubled - value).abs();
    Ok(EnergyWithConvergence {
        value,
        doubled,
        self_convergence: if value > 0.0 { diff / value } else { diff },
    })
}

/// Errors of the partial series against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub c1_err: f64,
    pub c2_err: f64,
}

/// `c1`, `c2`, and the maximum `A_max = f(x_max)` of the bounding function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricConstants {
    pub c1: f64,
    pub c2: f64,
    pub x_max: f64,
    #[serde(rename = "A_max")]
    pub a_max: f64,
    pub series_check: SeriesCheck,
}

impl GeometricConstants {
    /// `b = (sqrt 2 / 2) c2`, the quadratic coefficient inside `f`.
    pub fn b(&self) -> f64 {
        FRAC_1_SQRT_2 * self.c2
    }

    /// Positive zero `1/b` of `f`.
    pub fn zero_crossing(&self) -> f64 {
        1.0 / self.b()
    }
}

/// `pi coth(pi) - 1 = sum_{n != 0} <n>^{-2}`.
pub fn c2_closed_sq() -> f64 {
    PI / PI.tanh() - 1.0
}

/// `4 c1^2 = pi^2/6 - (pi coth(pi) - 1)/2 = sum_{m >= 1} m^{-2} <m>^{-2}`.
pub fn c1_closed_sq_times4() -> f64 {
    PI * PI / 6.0 - 0.5 * c2_closed_sq()
}

fn c2_term(k: u64) -> f64 {
    let x = k as f64;
    1.0 / (1.0 + x * x)
}

// int_a^inf dx/(1+x^2) = atan(1/a)
fn c2_tail(k: u64) -> (f64, f64) {
    let a = k as f64;
    ((1.0 / (a + 1.0)).atan(), (1.0 / a).atan())
}

fn c1_term(k: u64) -> f64 {
    let x = k as f64;
    1.0 / (x * x * (1.0 + x * x))
}

// int_a^inf dx/(x^2(1+x^2)) = 1/a - atan(1/a)
fn c1_tail(k: u64) -> (f64, f64) {
    let g = |a: f64| 1.0 / a - (1.0 / a).atan();
    let a = k as f64;
    (g(a + 1.0), g(a))
}

/// One-sided sums `sum_{n >= 1} <n>^{-2}` and `sum_{m >= 1} m^{-2}<m>^{-2}` to `tol`.
pub fn constant_series(tol: f64) -> (SeriesSum, SeriesSum) {
    (
        sum_with_tail(c2_term, c2_tail, tol, 100_000_000),
        sum_with_tail(c1_term, c1_tail, tol, 100_000_000),
    )
}

/// Same sums with exactly `terms` terms plus the bracketed tail.
pub fn constant_series_fixed(terms: usize) -> (SeriesSum, SeriesSum) {
    (sum_fixed(c2_term, c2_tail, terms), sum_fixed(c1_term, c1_tail, terms))
}

/// `f(x) = (1/sqrt 2) e^{-c1 x} (x - (sqrt 2 / 2) c2 x^2)`.
pub fn bounding_f(x: f64, consts: &GeometricConstants) -> f64 {
    bounding_f_raw(x, consts.c1, consts.b())
}

fn bounding_f_raw(x: f64, c1: f64, b: f64) -> f64 {
    FRAC_1_SQRT_2 * (-c1 * x).exp() * (x - b * x * x)
}

/// `f'(x) = (1/sqrt 2) e^{-c1 x} ((1 - 2 b x) - c1 (x - b x^2))`.
pub fn bounding_f_prime(x: f64, consts: &GeometricConstants) -> f64 {
    bounding_f_prime_raw(x, consts.c1, consts.b())
}

fn bounding_f_prime_raw(x: f64, c1: f64, b: f64) -> f64 {
    FRAC_1_SQRT_2 * (-c1 * x).exp() * ((1.0 - 2.0 * b * x) - c1 * (x - b * x * x))
}

/// Bisection on `[lo, hi]` for a sign change of `g`; returns the midpoint once the
/// bracket is narrower than `tol`.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::RootFinding(format!(
            "no sign change on [{lo}, {hi}]: g = {g_lo}, {g_hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form constants, cross-checked against their series, with `x_max` found by
/// bisection on `f'` over `[0, 1/b]`.
pub fn geometric_constants(tol: f64) -> Result<GeometricConstants> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let c2 = c2_closed_sq().sqrt();
    let c1 = 0.5 * c1_closed_sq_times4().sqrt();

    let (s2, s1) = constant_series(tol.min(1e-10) * 0.25);
    let c2_series = (2.0 * s2.value).sqrt();
    let c1_series = 0.5 * s1.value.sqrt();
    let c2_err = (c2_series - c2).abs();
    let c1_err = (c1_series - c1).abs();
    if c2_err > tol {
        return Err(Error::SeriesMismatch { name: "c2", err: c2_err, tol });
    }
    if c1_err > tol {
        return Err(Error::SeriesMismatch { name: "c1", err: c1_err, tol });
    }

    let b = FRAC_1_SQRT_2 * c2;
    let x_max = bisect(|x| bounding_f_prime_raw(x, c1, b), 0.0, 1.0 / b, tol.min(1e-12))?;
    let a_max = bounding_f_raw(x_max, c1, b);
    Ok(GeometricConstants {
        c1,
        c2,
        x_max,
        a_max,
        series_check: SeriesCheck { c1_err, c2_err },
    })
}

/// Tolerance on `X` for [`stable_root`].
pub const STABLE_ROOT_TOL: f64 = 1e-12;

/// Root `X` of `f(X) = A` on `[0, x_max]`, where `f` is increasing.
pub fn stable_root(a: f64, consts: &GeometricConstants) -> Result<f64> {
    if !(a >= 0.0 && a < consts.a_max) {
        return Err(Error::NoTrapping { a, a_max: consts.a_max });
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    bisect(|x| bounding_f(x, consts) - a, 0.0, consts.x_max, STABLE_ROOT_TOL)
}

/// Both sides of the two-sided estimate between `E_rho^{1/2}` and `|v_+|_{rho,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranscendentalBounds {
    pub norm_plus: f64,
    pub energy_sqrt: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `E^{1/2} - lower` and `upper - E^{1/2}`.
    pub slack: (f64, f64),
}

/// Relative rounding allowance applied to both comparisons.
pub const BOUNDS_ROUNDING: f64 = 1e-12;

pub fn transcendental_bounds_report(u: &Field, rho: f64, consts: &GeometricConstants) -> Result<TranscendentalBounds> {
    let energy = exp_energy(u, rho, u.n_max())?;
    transcendental_bounds_from(u, rho, energy, consts)
}

/// Same report with a precomputed `E_rho(u)`.
pub fn transcendental_bounds_from(
    u: &Field,
    rho: f64,
    energy: f64,
    consts: &GeometricConstants,
) -> Result<TranscendentalBounds> {
    let x = analytic_norm(&u.positive_part(), rho, 1.0)?;
    let e = energy.max(0.0).sqrt();
    let half_c2 = FRAC_1_SQRT_2 * consts.c2;
    let lower = FRAC_1_SQRT_2 * (-consts.c1 * x).exp() * (x - half_c2 * x * x);
    let upper = (consts.c1 * x).exp() * (SQRT_2 * x + half_c2 * x * x);
    let allowance = BOUNDS_ROUNDING * e.max(f64::MIN_POSITIVE);
    Ok(TranscendentalBounds {
        norm_plus: x,
        energy_sqrt: e,
        lower,
        upper,
        lower_ok: lower <= e + allowance,
        upper_ok: e <= upper + allowance,
        slack: (e - lower, upper - e),
    })
}

/// `|u_+|_{L^2}^2`, the total mass of the spectral measure.
pub fn measure_mass(u: &Field) -> f64 {
    l2_norm(&u.positive_part()).powi(2)
}
