//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// `max_{jk} |a_jk|`.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: CMatrix,
}

/// Dense Hermitian eigendecomposition with the residual check
/// `max_j |A phi_j - nu_j phi_j| <= tol * |A|`.
pub fn hermitian_eigen(a: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut residual = 0.0f64;
    for (j, nu) in values.iter().enumerate() {
        let phi = vectors.column(j);
        let r = a * phi - phi * Complex64::new(*nu, 0.0);
        residual = residual.max(r.norm());
    }
    if !(residual <= tol * scale) {
        return Err(Error::EigenResidual {
            residual,
            tol: tol * scale,
        });
    }
    Ok(HermitianEigen { values, vectors })
}

/// `Phi diag(g(nu)) Phi^*`.
pub fn functional_calculus(eig: &HermitianEigen, g: impl Fn(f64) -> f64) -> CMatrix {
    let mut scaled = eig.vectors.clone();
    for (j, nu) in eig.values.iter().enumerate() {
        let w = g(*nu);
        scaled.column_mut(j).scale_mut(w);
    }
    scaled * eig.vectors.adjoint()
}
