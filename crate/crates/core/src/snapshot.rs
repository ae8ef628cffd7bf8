//! JSON snapshots of a field: lattice parameters, flags and the nonzero coefficients.
//!
//! Doubles are written in shortest round-trip form, so `read(write(u)) == u` bit for bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, LatticeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotCoeff {
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub n_max: usize,
    pub rho: f64,
    pub s: f64,
    pub real_valued: bool,
    pub zero_mean: bool,
    /// Omitted modes are zero.
    pub coeffs: Vec<SnapshotCoeff>,
}

impl Snapshot {
    pub fn from_field(u: &Field, rho: f64, s: f64) -> Result<Self> {
        let n_max = u.n_max() as i64;
        let mut coeffs = Vec::new();
        for n in -n_max..=n_max {
            let c = u.coeff(n);
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::Snapshot(format!("coefficient {n} is not finite")));
            }
            if c.re.to_bits() != 0 || c.im.to_bits() != 0 {
                coeffs.push(SnapshotCoeff { n, re: c.re, im: c.im });
            }
        }
        Ok(Snapshot {
            n_max: u.n_max(),
            rho,
            s,
            real_valued: u.is_real_valued(),
            zero_mean: u.is_zero_mean(),
            coeffs,
        })
    }

    /// Rebuilds the field and checks the stated flags against the coefficients.
    pub fn to_field(&self) -> Result<(Field, LatticeSpec)> {
        let spec = LatticeSpec::new(self.n_max, self.rho, self.s)?;
        let n_max = self.n_max as i64;
        let mut dense = vec![Complex64::new(0.0, 0.0); 2 * self.n_max + 1];
        let mut seen = vec![false; dense.len()];
        for c in &self.coeffs {
            if c.n.abs() > n_max {
                return Err(Error::IndexOutOfRange { n: c.n, n_max: self.n_max });
            }
            let i = (c.n + n_max) as usize;
            if seen[i] {
                return Err(Error::DuplicateIndex(c.n));
            }
            seen[i] = true;
            dense[i] = Complex64::new(c.re, c.im);
        }
        let u = Field::from_dense(self.n_max, dense)?;
        if self.real_valued && !u.is_real_valued() {
            let n = (1..=n_max)
                .find(|&n| u.coeff(-n) != u.coeff(n).conj())
                .unwrap_or(0);
            return Err(Error::SymmetryBroken { n });
        }
        if self.zero_mean && !u.is_zero_mean() {
            return Err(Error::Snapshot("flagged zero_mean but coefficient 0 is nonzero".into()));
        }
        Ok((u, spec))
    }
}

pub fn write_json(u: &Field, spec: &LatticeSpec) -> Result<String> {
    let snap = Snapshot::from_field(u, spec.rho, spec.s)?;
    serde_json::to_string_pretty(&snap).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn read_json(text: &str) -> Result<(Field, LatticeSpec)> {
    let snap: Snapshot = serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
    snap.to_field()
}
