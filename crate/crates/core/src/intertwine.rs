//! The intertwining operator `W(tau) = e^{tau L_0} e^{-tau L_v}` as the solution of
//! `W' = -Q(tau) W`, `W(0) = I`, with `Q(tau)_jk = v^(j-k) e^{2 tau (j-k)}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{analytic_norm, Field, EXPONENT_CAP};
use crate::lax::{free_eigenvalue, lax_matrix, to_vector};
use crate::linalg::{functional_calculus, hermitian_eigen, spectral_norm, CMatrix, CVector};
use crate::spectral::{geometric_constants, EIGEN_RESIDUAL_TOL};

/// Minimum number of uniform steps accepted by [`solve_intertwiner`].
pub const MIN_STEPS: usize = 16;

/// Limit on `|W_{2M}(rho/2) - W_M(rho/2)|_2` in the Richardson self-check.
pub const SELF_CHECK_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedToeplitz {
    pub tau: f64,
    pub entries: CMatrix,
}

/// `Q(tau)_jk = v^(j-k) e^{2 tau (j-k)}` on `j, k = 1..=size`.
pub fn q_matrix(v: &Field, tau: f64, size: usize) -> Result<WeightedToeplitz> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be nonnegative, got {tau}")));
    }
    let exponent = 2.0 * tau * size.saturating_sub(1) as f64;
    if exponent > EXPONENT_CAP {
        return Err(Error::ExponentCap { exponent, cap: EXPONENT_CAP });
    }
    let toeplitz = lax_matrix(v, size)?;
    let mut entries = toeplitz.toeplitz();
    weight_in_place(&mut entries, tau);
    Ok(WeightedToeplitz { tau, entries })
}

// Q(tau) = D T D^{-1} with D = diag(e^{2 tau j}).
fn weight_in_place(t: &mut CMatrix, tau: f64) {
    let n = t.nrows();
    for r in 0..n {
        for c in 0..n {
            if r != c {
                t[(r, c)] *= (2.0 * tau * (r as f64 - c as f64)).exp();
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IntertwinerSolution {
    pub grid: Vec<f64>,
    pub w: Vec<CMatrix>,
    pub w_inv: Vec<CMatrix>,
    /// `(|W(tau_i)|_2, |W(tau_i)^{-1}|_2)`.
    pub op_norms: Vec<(f64, f64)>,
}

impl IntertwinerSolution {
    pub fn terminal(&self) -> (&CMatrix, &CMatrix) {
        (self.w.last().expect("grid is nonempty"), self.w_inv.last().expect("grid is nonempty"))
    }

    /// `max_i |W(tau_i) W_inv(tau_i) - I|_2`.
    pub fn inverse_defect(&self) -> f64 {
        let n = self.w[0].nrows();
        let id = CMatrix::identity(n, n);
        self.w
            .iter()
            .zip(&self.w_inv)
            .map(|(w, wi)| spectral_norm(&(w * wi - &id)))
            .fold(0.0, f64::max)
    }

    /// `max_i max(|W|, |W^{-1}|)`.
    pub fn max_op_norm(&self) -> f64 {
        self.op_norms.iter().fold(0.0f64, |m, (a, b)| m.max(*a).max(*b))
    }
}

fn cx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Classical RK4 for `W' = -Q W` and `(W^{-1})' = W^{-1} Q` on a uniform grid over
/// `[0, rho/2]`, without the self-check.
pub fn integrate_intertwiner(v: &Field, rho: f64, size: usize, steps: usize) -> Result<IntertwinerSolution> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be nonnegative, got {rho}")));
    }
    let t_end = 0.5 * rho;
    // Validates the lattice and the exponent cap at the far end of the grid.
    q_matrix(v, t_end, size)?;
    let toeplitz = lax_matrix(v, size)?.toeplitz();
    let q_at = |tau: f64| {
        let mut q = toeplitz.clone();
        weight_in_place(&mut q, tau);
        q
    };

    let h = t_end / steps as f64;
    let id = CMatrix::identity(size, size);
    let mut w = id.clone();
    let mut wi = id;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut ws = Vec::with_capacity(steps + 1);
    let mut wis = Vec::with_capacity(steps + 1);
    grid.push(0.0);
    ws.push(w.clone());
    wis.push(wi.clone());
    for i in 0..steps {
        let tau = i as f64 * h;
        let (q0, qm, q1) = (q_at(tau), q_at(tau + 0.5 * h), q_at(tau + h));

        let k1 = -(&q0 * &w);
        let k2 = -(&qm * (&w + &k1 * cx(0.5 * h)));
        let k3 = -(&qm * (&w + &k2 * cx(0.5 * h)));
        let k4 = -(&q1 * (&w + &k3 * cx(h)));
        w += (k1 + (k2 + k3) * cx(2.0) + k4) * cx(h / 6.0);

        let l1 = &wi * &q0;
        let l2 = (&wi + &l1 * cx(0.5 * h)) * &qm;
        let l3 = (&wi + &l2 * cx(0.5 * h)) * &qm;
        let l4 = (&wi + &l3 * cx(h)) * &q1;
        wi += (l1 + (l2 + l3) * cx(2.0) + l4) * cx(h / 6.0);

        grid.push(if i + 1 == steps { t_end } else { (i + 1) as f64 * h });
        ws.push(w.clone());
        wis.push(wi.clone());
    }
    let op_norms = ws.iter().zip(&wis).map(|(a, b)| (spectral_norm(a), spectral_norm(b))).collect();
    Ok(IntertwinerSolution { grid, w: ws, w_inv: wis, op_norms })
}

/// [`integrate_intertwiner`] plus the step-doubling self-check on `W(rho/2)`.
pub fn solve_intertwiner(v: &Field, rho: f64, size: usize, steps: usize) -> Result<IntertwinerSolution> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_STEPS} steps, got {steps}")));
    }
    let sol = integrate_intertwiner(v, rho, size, steps)?;
    let fine = integrate_intertwiner(v, rho, size, 2 * steps)?;
    let change = spectral_norm(&(fine.terminal().0 - sol.terminal().0));
    if !(change < SELF_CHECK_LIMIT) {
        return Err(Error::IntertwinerSelfCheck { change, limit: SELF_CHECK_LIMIT });
    }
    Ok(sol)
}

/// `e^{-tau L_v}` by functional calculus on the eigendecomposition.
pub fn perturbed_semigroup(v: &Field, tau: f64, size: usize) -> Result<CMatrix> {
    let lax = lax_matrix(v, size)?;
    let eig = hermitian_eigen(lax.entries(), EIGEN_RESIDUAL_TOL)?;
    Ok(functional_calculus(&eig, |nu| (-tau * nu).exp()))
}

fn free_semigroup(tau: f64, size: usize) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_fn(size, |j, _| cx((tau * free_eigenvalue(j + 1)).exp())))
}

/// `|e^{-(rho/2) L_0} W(rho/2) - e^{-(rho/2) L_v}|_2` for a given solution.
pub fn intertwine_residual_of(v: &Field, rho: f64, sol: &IntertwinerSolution) -> Result<f64> {
    let size = sol.w[0].nrows();
    let tau = 0.5 * rho;
    let lhs = free_semigroup(-tau, size) * sol.terminal().0;
    let rhs = perturbed_semigroup(v, tau, size)?;
    Ok(spectral_norm(&(lhs - rhs)))
}

/// Residual of the semigroup identity after a checked solve with `steps` steps.
pub fn intertwine_residual(v: &Field, rho: f64, size: usize, steps: usize) -> Result<f64> {
    let sol = solve_intertwiner(v, rho, size, steps)?;
    intertwine_residual_of(v, rho, &sol)
}

/// Residual without the self-check, for order-of-convergence measurements at coarse
/// step counts.
pub fn intertwine_residual_unchecked(v: &Field, rho: f64, size: usize, steps: usize) -> Result<f64> {
    let sol = integrate_intertwiner(v, rho, size, steps)?;
    intertwine_residual_of(v, rho, &sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorIdentity {
    /// `|L_0 psi_0 + Q psi_0 - W L_v psi_v|` on modes `1..N-1` at `tau = rho/2`.
    pub lhs_minus_rhs_norm: f64,
    /// `E_rho^{1/2}` from `psi_v = W^{-1} psi_0 = e^{(rho/2) L_v} v_+`.
    pub energy_sqrt_via_psi: f64,
}

/// Checks `L_0 psi_0(tau) = -Q(tau) psi_0(tau) + W(tau) L_v psi_v(tau)` at `tau = rho/2`
/// with `psi_0 = e^{tau L_0} v_+` and `psi_v = W^{-1} psi_0`.
pub fn vector_identity_check(v: &Field, rho: f64, size: usize, steps: usize) -> Result<VectorIdentity> {
    let sol = solve_intertwiner(v, rho, size, steps)?;
    vector_identity_of(v, rho, &sol)
}

pub fn vector_identity_of(v: &Field, rho: f64, sol: &IntertwinerSolution) -> Result<VectorIdentity> {
    let size = sol.w[0].nrows();
    let tau = 0.5 * rho;
    let (w, wi) = sol.terminal();
    let lv = lax_matrix(v, size)?.into_entries();
    let q = q_matrix(v, tau, size)?.entries;
    let l0 = CMatrix::from_diagonal(&CVector::from_fn(size, |j, _| cx(free_eigenvalue(j + 1))));

    let plus = to_vector(&v.resized(size).positive_part());
    let psi0 = free_semigroup(tau, size) * plus;
    let psi_v = wi * &psi0;
    let lhs = &l0 * &psi0;
    let rhs = -(&q * &psi0) + w * (&lv * &psi_v);
    let diff = lhs - rhs;
    let interior = diff.rows(0, size.saturating_sub(1)).norm();

    let half_l = &lv * &psi_v * cx(0.5);
    let energy = psi_v.norm_squared() + half_l.norm_squared();
    Ok(VectorIdentity {
        lhs_minus_rhs_norm: interior,
        energy_sqrt_via_psi: energy.sqrt(),
    })
}

/// Composite Simpson value of `int_0^{rho/2} |Q(tau)|_2 dtau` with `panels` (even) panels,
/// and the bound `c1 |v_+|_{rho,1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratedQ {
    pub integral: f64,
    pub bound: f64,
}

pub fn integrated_q_norm(v: &Field, rho: f64, size: usize, panels: usize) -> Result<IntegratedQ> {
    let panels = panels.max(2) + panels % 2;
    let h = 0.5 * rho / panels as f64;
    let mut acc = 0.0;
    for i in 0..=panels {
        let q = spectral_norm(&q_matrix(v, i as f64 * h, size)?.entries);
        let weight = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += weight * q;
    }
    let c1 = geometric_constants(1e-10)?.c1;
    Ok(IntegratedQ {
        integral: acc * h / 3.0,
        bound: c1 * analytic_norm(&v.positive_part(), rho, 1.0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, LatticeSpec};
    use crate::linalg::max_abs;

    fn cos_field(a: f64, n: usize) -> Field {
        make_field(&[(1, Complex64::new(a, 0.0))], &LatticeSpec::new(n, 0.5, 1.0).unwrap(), true).unwrap()
    }

    #[test]
    fn q_of_two_cos() {
        let q = q_matrix(&cos_field(1.0, 4), 0.1, 4).unwrap().entries;
        assert!((q[(1, 0)].re - 0.2f64.exp()).abs() < 1e-15);
        assert!((q[(0, 1)].re - (-0.2f64).exp()).abs() < 1e-15);
        assert_eq!(q[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(q[(2, 0)], Complex64::new(0.0, 0.0));
        assert!(max_abs(&q_matrix(&Field::zeros(4), 0.1, 4).unwrap().entries) == 0.0);
    }

    #[test]
    fn zero_potential_gives_identity() {
        let sol = solve_intertwiner(&Field::zeros(8), 0.5, 8, 16).unwrap();
        for w in &sol.w {
            assert_eq!(w, &CMatrix::identity(8, 8));
        }
        assert!(intertwine_residual(&Field::zeros(8), 0.5, 8, 16).unwrap() < 1e-15);
    }

    #[test]
    fn scalar_case() {
        let sol = solve_intertwiner(&cos_field(0.3, 4), 0.5, 1, 16).unwrap();
        assert!(sol.w.iter().all(|w| w[(0, 0)] == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn identity_and_inverse() {
        let v = cos_field(0.05, 32);
        let sol = solve_intertwiner(&v, 0.5, 32, 128).unwrap();
        assert_eq!(sol.w[0], CMatrix::identity(32, 32));
        assert!(sol.inverse_defect() < 1e-12);
        assert!(intertwine_residual_of(&v, 0.5, &sol).unwrap() < 1e-10);
        let vi = vector_identity_of(&v, 0.5, &sol).unwrap();
        assert!(vi.lhs_minus_rhs_norm < 1e-12);
    }

    #[test]
    fn rejects_few_steps() {
        assert!(solve_intertwiner(&cos_field(0.05, 8), 0.5, 8, 8).is_err());
    }

    #[test]
    fn exponent_cap() {
        assert!(matches!(q_matrix(&cos_field(0.05, 400), 1.0, 400), Err(Error::ExponentCap { .. })));
    }
}
