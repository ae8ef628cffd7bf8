//! The Lax operator on positive frequencies, its resolvent and the resolvent gauge.
//!
//! On `{1, ..., N}` the operator `L_u f = -2i f' + C_+(u f)` is the Hermitian matrix
//! `L_jk = 2j delta_jk + u^(j - k)`. The gauge is `m(kappa, u) = (L_u + kappa)^{-1} u_+`
//! and the generating functional is `beta(kappa; u) = <u_+, m>`.

use nalgebra::LU;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{algebra_constant, analytic_norm, inner_l2, Field, PositiveField};
use crate::linalg::{CMatrix, CVector};

/// Hermitian matrix of `L_u` on the modes `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxMatrix {
    entries: CMatrix,
}

impl LaxMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// `max |L - L^*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.size();
        let mut d = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                d = d.max((self.entries[(j, k)] - self.entries[(k, j)].conj()).norm());
            }
        }
        d
    }

    /// `L f` for a Hardy-space state of the same size.
    pub fn apply(&self, f: &PositiveField) -> PositiveField {
        let v = &self.entries * to_vector(f);
        from_vector(&v)
    }

    /// Toeplitz part `T_u = L_u - L_0`.
    pub fn toeplitz(&self) -> CMatrix {
        let mut t = self.entries.clone();
        for j in 0..self.size() {
            t[(j, j)] -= Complex64::new(free_eigenvalue(j + 1), 0.0);
        }
        t
    }
}

/// Diagonal entry `2n` of the free operator.
#[inline]
pub fn free_eigenvalue(n: usize) -> f64 {
    2.0 * n as f64
}

pub(crate) fn to_vector(f: &PositiveField) -> CVector {
    CVector::from_column_slice(f.as_slice())
}

pub(crate) fn from_vector(v: &CVector) -> PositiveField {
    PositiveField::from_vec(v.iter().copied().collect())
}

/// Builds `L_jk = 2j delta_jk + u^(j-k)` for `j, k = 1..=size`.
pub fn lax_matrix(u: &Field, size: usize) -> Result<LaxMatrix> {
    u.require_real_zero_mean()?;
    if size < 1 {
        return Err(Error::InvalidParameter("Lax matrix size must be positive".into()));
    }
    if u.n_max() + 1 < size {
        return Err(Error::LatticeTooSmall {
            need: size - 1,
            have: u.n_max(),
        });
    }
    let entries = CMatrix::from_fn(size, size, |r, c| {
        let d = r as i64 - c as i64;
        let diag = if d == 0 { free_eigenvalue(r + 1) } else { 0.0 };
        u.coeff(d) + diag
    });
    Ok(LaxMatrix { entries })
}

/// Weight of the `rho, s` norm used by the Neumann stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormWeight {
    pub rho: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolventMethod {
    /// Dense LU solve.
    Direct,
    /// Partial sums of `R_0 sum_j (-1)^j (T_u R_0)^j`, stopped once a term's norm drops
    /// below `tol`.
    Neumann {
        max_terms: usize,
        tol: f64,
        weight: NormWeight,
    },
}

impl ResolventMethod {
    pub fn neumann(tol: f64, rho: f64, s: f64) -> Self {
        ResolventMethod::Neumann {
            max_terms: 10_000,
            tol,
            weight: NormWeight { rho, s },
        }
    }

    fn validate(&self) -> Result<()> {
        if let ResolventMethod::Neumann { max_terms, tol, .. } = self {
            if *max_terms < 1 || !(*tol > 0.0) {
                return Err(Error::InvalidParameter(
                    "Neumann method needs max_terms >= 1 and tol > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Resolvent application result with the number of Neumann terms used (1 for direct).
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub solution: PositiveField,
    pub terms: usize,
}

/// `(L_u + kappa)` factored once for repeated solves.
pub struct Resolvent {
    kappa: f64,
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Resolvent {
    pub fn new(lax: &LaxMatrix, kappa: f64) -> Result<Self> {
        let mut shifted = lax.entries.clone();
        for j in 0..shifted.nrows() {
            shifted[(j, j)] += Complex64::new(kappa, 0.0);
        }
        let lu = shifted.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular { kappa });
        }
        Ok(Resolvent { kappa, lu })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn solve(&self, rhs: &PositiveField) -> Result<PositiveField> {
        let x = self
            .lu
            .solve(&to_vector(rhs))
            .ok_or(Error::Singular { kappa: self.kappa })?;
        if x.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Singular { kappa: self.kappa });
        }
        Ok(from_vector(&x))
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    Ok(())
}

/// Solves `(L_u + kappa) x = rhs` with the chosen method.
pub fn resolvent_apply(u: &Field, kappa: f64, rhs: &PositiveField, method: ResolventMethod) -> Result<PositiveField> {
    resolvent_apply_counted(u, kappa, rhs, method).map(|r| r.solution)
}

/// [`resolvent_apply`] that also reports the Neumann term count.
pub fn resolvent_apply_counted(
    u: &Field,
    kappa: f64,
    rhs: &PositiveField,
    method: ResolventMethod,
) -> Result<Resolved> {
    check_kappa(kappa)?;
    method.validate()?;
    let size = rhs.n_max();
    let lax = lax_matrix(u, size)?;
    match method {
        ResolventMethod::Direct => Ok(Resolved {
            solution: Resolvent::new(&lax, kappa)?.solve(rhs)?,
            terms: 1,
        }),
        ResolventMethod::Neumann {
            max_terms,
            tol,
            weight,
        } => {
            let bound = algebra_constant(weight.s)? * analytic_norm(u, weight.rho, weight.s)?;
            if !(kappa > bound) {
                return Err(Error::NotContractive { kappa, bound });
            }
            neumann_sum(&lax, kappa, rhs, max_terms, tol, weight)
        }
    }
}

fn neumann_sum(
    lax: &LaxMatrix,
    kappa: f64,
    rhs: &PositiveField,
    max_terms: usize,
    tol: f64,
    weight: NormWeight,
) -> Result<Resolved> {
    let toeplitz = lax.toeplitz();
    let free: Vec<f64> = (1..=lax.size()).map(|n| 1.0 / (free_eigenvalue(n) + kappa)).collect();
    let free_apply = |v: &CVector| -> CVector {
        CVector::from_iterator(v.len(), v.iter().zip(&free).map(|(c, r)| c * *r))
    };
    let mut term = free_apply(&to_vector(rhs));
    let mut total = term.clone();
    for j in 1..=max_terms {
        let term_norm = analytic_norm(&from_vector(&term), weight.rho, weight.s)?;
        if term_norm < tol {
            return Ok(Resolved {
                solution: from_vector(&total),
                terms: j,
            });
        }
        if j == max_terms {
            return Err(Error::NeumannDiverged {
                terms: j,
                last: term_norm,
            });
        }
        term = -free_apply(&(&toeplitz * &term));
        total += &term;
    }
    unreachable!("loop returns on its last iteration")
}

/// Resolvent gauge `m(kappa, u) = (L_u + kappa)^{-1} u_+` on the lattice of `u`.
pub fn gauge_m(u: &Field, kappa: f64, method: ResolventMethod) -> Result<PositiveField> {
    resolvent_apply(u, kappa, &u.positive_part(), method)
}

/// Norms of `d_x m + (i/2)(kappa m + C_+(u (m - 1)))` on modes `1..N-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeResidual {
    /// `rho, 1` norm of the residual restricted to interior modes.
    pub norm_rho1: f64,
    pub max_modulus: f64,
}

/// Residual of the algebraic identity for `d_x m` (direct solve).
pub fn gauge_identity_residual(u: &Field, kappa: f64, rho: f64) -> Result<GaugeResidual> {
    let n_max = u.n_max();
    let m = gauge_m(u, kappa, ResolventMethod::Direct)?;
    let m_minus_one = &m.to_field(n_max) - &Field::constant(n_max, 1.0);
    let product = u.multiply(&m_minus_one)?;
    let half_i = Complex64::new(0.0, 0.5);
    let interior: Vec<Complex64> = (1..n_max as i64)
        .map(|n| {
            let dm = Complex64::new(0.0, n as f64) * m.coeff(n);
            dm + half_i * (m.coeff(n) * kappa + product.coeff(n))
        })
        .collect();
    let residual = PositiveField::from_vec(interior);
    Ok(GaugeResidual {
        norm_rho1: analytic_norm(&residual, rho, 1.0)?,
        max_modulus: residual.max_modulus(),
    })
}

/// Absolute floor for the imaginary part of `<u_+, R u_+>`.
pub const BETA_IMAG_TOL: f64 = 1e-12;

/// `beta(lambda; u) = <u_+, (L_u + lambda)^{-1} u_+>`, checked to be real.
///
/// `lambda` may be negative as long as it stays above `-nu_min`; for `lambda <= 0` this is
/// checked on the lowest eigenvalue of `L_u + lambda`, and only the direct method applies.
pub fn beta(u: &Field, lambda: f64, method: ResolventMethod) -> Result<f64> {
    let plus = u.positive_part();
    if lambda > 0.0 {
        let m = resolvent_apply(u, lambda, &plus, method)?;
        return real_part_checked(inner_l2(&plus, &m)?);
    }
    if !lambda.is_finite() || method != ResolventMethod::Direct {
        return Err(Error::InvalidParameter(format!(
            "beta at lambda = {lambda} needs the direct method"
        )));
    }
    let lax = lax_matrix(u, plus.n_max())?;
    let mut shifted = lax.entries.clone();
    for j in 0..shifted.nrows() {
        shifted[(j, j)] += Complex64::new(lambda, 0.0);
    }
    // complex Cholesky takes square roots of negative pivots without complaint
    let lowest = shifted.symmetric_eigenvalues().min();
    if !(lowest > 0.0) {
        return Err(Error::PoleHit { lambda, nu_min: lowest - lambda });
    }
    beta_with(&Resolvent::new(&lax, lambda)?, u)
}

/// `beta` for a pre-factored resolvent of `u`.
pub fn beta_with(resolvent: &Resolvent, u: &Field) -> Result<f64> {
    let plus = u.positive_part();
    let m = resolvent.solve(&plus)?;
    real_part_checked(inner_l2(&plus, &m)?)
}

fn real_part_checked(z: Complex64) -> Result<f64> {
    if z.im.abs() > BETA_IMAG_TOL * z.re.abs().max(1.0) {
        Err(Error::NotReal { imag: z.im })
    } else {
        Ok(z.re)
    }
}

/// `L^2` gradient `m + conj(m) - |m|^2` of `beta(kappa; .)`; the zero mode is kept.
pub fn beta_gradient(u: &Field, kappa: f64) -> Result<Field> {
    let m = gauge_m(u, kappa, ResolventMethod::Direct)?;
    Ok(gradient_from_gauge(&m, u.n_max()))
}

pub(crate) fn gradient_from_gauge(m: &PositiveField, n_max: usize) -> Field {
    &m.real_extension(n_max) - &m.abs_sq(n_max)
}

/// `max(100 C_1 |u0|_{rho,1}, 8N)`.
pub fn default_kappa(u0: &Field, rho: f64) -> Result<f64> {
    let c1 = algebra_constant(1.0)?;
    Ok((100.0 * c1 * analytic_norm(u0, rho, 1.0)?).max(8.0 * u0.n_max() as f64))
}
