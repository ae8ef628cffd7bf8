//! Truncated Fourier fields on the torus and the weighted norms used throughout.
//!
//! A [`Field`] stores coefficients `u^(n)` for `n` in `-N..=N`. A [`PositiveField`]
//! stores `n` in `1..=N` only and models states of the Hardy space.
//!
//! Real-valued fields are kept exactly conjugate symmetric: every operation that
//! preserves reality computes the non-negative half and mirrors it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::series::{sum_with_tail, SeriesSum};

/// Largest allowed exponent `2 rho |n|` (or `rho nu`) before refusing to evaluate.
pub const EXPONENT_CAP: f64 = 600.0;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn default_s() -> f64 {
    1.0
}

/// Truncation radius, analyticity radius and smoothness index of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n_max: usize,
    pub rho: f64,
    #[serde(default = "default_s")]
    pub s: f64,
}

impl LatticeSpec {
    pub fn new(n_max: usize, rho: f64, s: f64) -> Result<Self> {
        let spec = LatticeSpec { n_max, rho, s };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::InvalidParameter(format!("rho must be >= 0, got {}", self.rho)));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidParameter(format!("s must be >= 0, got {}", self.s)));
        }
        Ok(())
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }
}

/// `<n>^2 = 1 + n^2`.
#[inline]
pub fn japanese_sq(n: i64) -> f64 {
    1.0 + (n as f64) * (n as f64)
}

#[inline]
fn sobolev_weight(n: i64, s: f64) -> f64 {
    let j = japanese_sq(n);
    if s == 1.0 {
        j
    } else if s == 0.0 {
        1.0
    } else {
        j.powf(s)
    }
}

/// Anything that exposes Fourier modes `(n, coefficient)`.
pub trait FourierModes {
    /// Largest `|n|` that can carry a coefficient.
    fn radius(&self) -> usize;
    fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_;
}

/// Frequency projection selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n_max: usize,
    coeffs: Vec<Complex64>,
    real_valued: bool,
}

impl Field {
    pub fn zeros(n_max: usize) -> Self {
        Field {
            n_max,
            coeffs: vec![ZERO; 2 * n_max + 1],
            real_valued: true,
        }
    }

    /// Field holding only the constant `c` in its zero mode.
    pub fn constant(n_max: usize, c: f64) -> Self {
        let mut f = Field::zeros(n_max);
        f.coeffs[n_max] = Complex64::new(c, 0.0);
        f
    }

    /// Builds a field from the dense coefficient vector `coeffs[n + n_max]`; the
    /// real-valued flag is detected exactly.
    pub fn from_dense(n_max: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != 2 * n_max + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                2 * n_max + 1,
                coeffs.len()
            )));
        }
        let mut f = Field {
            n_max,
            coeffs,
            real_valued: false,
        };
        f.real_valued = f.symmetry_defect() == 0.0;
        Ok(f)
    }

    /// Builds a field from the non-negative half; negative modes are conjugates.
    fn from_half(n_max: usize, half: &[Complex64]) -> Self {
        debug_assert_eq!(half.len(), n_max + 1);
        let mut coeffs = vec![ZERO; 2 * n_max + 1];
        coeffs[n_max] = Complex64::new(half[0].re, 0.0);
        for n in 1..=n_max {
            coeffs[n_max + n] = half[n];
            coeffs[n_max - n] = half[n].conj();
        }
        Field {
            n_max,
            coeffs,
            real_valued: true,
        }
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    #[inline]
    pub fn is_zero_mean(&self) -> bool {
        self.coeffs[self.n_max] == ZERO
    }

    /// Coefficient at `n`; zero outside the lattice.
    #[inline]
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            ZERO
        } else {
            self.coeffs[(n + self.n_max as i64) as usize]
        }
    }

    pub fn dense(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Overwrites one coefficient. Clears the real-valued flag unless `n == 0` with a
    /// real value; use [`Field::set_real_mode`] to keep symmetry.
    pub fn set_coeff(&mut self, n: i64, value: Complex64) -> Result<()> {
        self.check_index(n)?;
        self.coeffs[(n + self.n_max as i64) as usize] = value;
        if !(n == 0 && value.im == 0.0) {
            self.real_valued = self.symmetry_defect() == 0.0;
        }
        Ok(())
    }

    /// Sets `u^(n) = value` and `u^(-n) = conj(value)`.
    pub fn set_real_mode(&mut self, n: i64, value: Complex64) -> Result<()> {
        self.check_index(n)?;
        let k = n.unsigned_abs() as usize;
        let v = if n >= 0 { value } else { value.conj() };
        if k == 0 {
            self.coeffs[self.n_max] = Complex64::new(v.re, 0.0);
            if v.im != 0.0 {
                self.coeffs[self.n_max].im = v.im;
                self.real_valued = false;
            }
        } else {
            self.coeffs[self.n_max + k] = v;
            self.coeffs[self.n_max - k] = v.conj();
        }
        Ok(())
    }

    fn check_index(&self, n: i64) -> Result<()> {
        if n.unsigned_abs() as usize > self.n_max {
            Err(Error::IndexOutOfRange { n, n_max: self.n_max })
        } else {
            Ok(())
        }
    }

    /// `max_n |u^(-n) - conj(u^(n))|`, including the imaginary part of the zero mode.
    pub fn symmetry_defect(&self) -> f64 {
        let n_max = self.n_max;
        let mut d = self.coeffs[n_max].im.abs();
        for n in 1..=n_max {
            d = d.max((self.coeffs[n_max - n] - self.coeffs[n_max + n].conj()).norm());
        }
        d
    }

    /// Replaces the field by its conjugate-symmetric part and marks it real.
    pub fn symmetrize(&mut self) {
        let n_max = self.n_max;
        self.coeffs[n_max].im = 0.0;
        for n in 1..=n_max {
            let avg = (self.coeffs[n_max + n] + self.coeffs[n_max - n].conj()) * 0.5;
            self.coeffs[n_max + n] = avg;
            self.coeffs[n_max - n] = avg.conj();
        }
        self.real_valued = true;
    }

    /// Requires the real-valued flag and a vanishing zero mode.
    pub fn require_real_zero_mean(&self) -> Result<()> {
        if self.real_valued && self.is_zero_mean() {
            Ok(())
        } else {
            Err(Error::NotRealZeroMean)
        }
    }

    /// Same coefficients on a lattice of radius `n_max` (truncates or zero-pads).
    pub fn resized(&self, n_max: usize) -> Field {
        let mut out = Field::zeros(n_max);
        let m = n_max.min(self.n_max) as i64;
        for n in -m..=m {
            out.coeffs[(n + n_max as i64) as usize] = self.coeff(n);
        }
        out.real_valued = self.real_valued;
        out
    }

    pub fn project(&self, sign: Sign) -> Field {
        let mut out = Field::zeros(self.n_max);
        let n_max = self.n_max;
        match sign {
            Sign::Plus => out.coeffs[n_max + 1..].copy_from_slice(&self.coeffs[n_max + 1..]),
            Sign::Minus => out.coeffs[..n_max].copy_from_slice(&self.coeffs[..n_max]),
            Sign::Zero => out.coeffs[n_max] = self.coeffs[n_max],
        }
        out.real_valued = match sign {
            Sign::Zero => self.coeffs[n_max].im == 0.0,
            _ => out.coeffs.iter().all(|c| *c == ZERO),
        };
        out
    }

    /// `C_+ u` as a Hardy-space state.
    pub fn positive_part(&self) -> PositiveField {
        PositiveField {
            coeffs: self.coeffs[self.n_max + 1..].to_vec(),
        }
    }

    fn map_multiplier(&self, mul: impl Fn(i64, Complex64) -> Complex64) -> Field {
        let n_max = self.n_max as i64;
        let coeffs = (-n_max..=n_max)
            .zip(self.coeffs.iter())
            .map(|(n, &c)| mul(n, c))
            .collect();
        Field {
            n_max: self.n_max,
            coeffs,
            real_valued: self.real_valued,
        }
    }

    /// Periodic Hilbert transform, multiplier `-i sgn(n)`.
    pub fn hilbert(&self) -> Field {
        self.map_multiplier(|n, c| match n.signum() {
            1 => Complex64::new(c.im, -c.re),
            -1 => Complex64::new(-c.im, c.re),
            _ => ZERO,
        })
    }

    /// Spatial derivative, multiplier `i n`.
    pub fn derivative(&self) -> Field {
        self.map_multiplier(|n, c| {
            let k = n as f64;
            Complex64::new(-k * c.im, k * c.re)
        })
    }

    /// Arbitrary real Fourier multiplier `n -> sym(n)`.
    pub fn real_multiplier(&self, sym: impl Fn(i64) -> f64) -> Field {
        self.map_multiplier(|n, c| c * sym(n))
    }

    /// Imaginary multiplier `n -> i sym(n)`; real fields stay real when `sym` is odd.
    pub fn imag_multiplier(&self, sym: impl Fn(i64) -> f64) -> Field {
        self.map_multiplier(|n, c| {
            let k = sym(n);
            Complex64::new(-k * c.im, k * c.re)
        })
    }

    /// Pointwise complex conjugate of the function (`n -> conj(u^(-n))`).
    pub fn conj(&self) -> Field {
        let mut coeffs: Vec<Complex64> = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        if self.real_valued {
            coeffs.copy_from_slice(&self.coeffs);
        }
        Field {
            n_max: self.n_max,
            coeffs,
            real_valued: self.real_valued,
        }
    }

    /// Exact product on the doubled lattice `{-2N, ..., 2N}`.
    pub fn multiply_full(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        Ok(convolve(self, other, 2 * self.n_max))
    }

    /// Exact convolution restricted to `{-N, ..., N}`; the zero mode is kept.
    pub fn multiply(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        Ok(convolve(self, other, self.n_max))
    }

    fn check_same(&self, other: &Field) -> Result<()> {
        if self.n_max != other.n_max {
            Err(Error::LatticeMismatch {
                left: self.n_max,
                right: other.n_max,
            })
        } else {
            Ok(())
        }
    }

    /// `self + a * other`, preserving exact symmetry when both are real.
    pub fn add_scaled(&self, a: f64, other: &Field) -> Field {
        assert_eq!(self.n_max, other.n_max, "lattice mismatch in add_scaled");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        Field {
            n_max: self.n_max,
            coeffs,
            real_valued: self.real_valued && other.real_valued,
        }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map_multiplier(|_, c| c * a)
    }

    /// Largest coefficient modulus.
    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Pointwise values on a uniform grid `x_j = 2 pi j / points` (direct summation).
    pub fn sample(&self, points: usize) -> Vec<Complex64> {
        let n_max = self.n_max as i64;
        (0..points)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / points as f64;
                (-n_max..=n_max)
                    .map(|n| self.coeff(n) * Complex64::from_polar(1.0, n as f64 * x))
                    .sum()
            })
            .collect()
    }
}

impl FourierModes for Field {
    fn radius(&self) -> usize {
        self.n_max
    }

    fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n_max = self.n_max as i64;
        (-n_max..=n_max).zip(self.coeffs.iter().copied())
    }
}

fn convolve(f: &Field, g: &Field, out_max: usize) -> Field {
    let n = f.n_max as i64;
    let out_i = out_max as i64;
    let coeff_at = |k: i64| -> Complex64 {
        // sum over j of f(k - j) g(j) with |j| <= n and |k - j| <= n
        let lo = (k - n).max(-n);
        let hi = (k + n).min(n);
        let mut acc = ZERO;
        for j in lo..=hi {
            acc += f.coeffs[(k - j + n) as usize] * g.coeffs[(j + n) as usize];
        }
        acc
    };
    if f.real_valued && g.real_valued {
        let half: Vec<Complex64> = (0..=out_i).map(coeff_at).collect();
        Field::from_half(out_max, &half)
    } else {
        let coeffs = (-out_i..=out_i).map(coeff_at).collect();
        Field {
            n_max: out_max,
            coeffs,
            real_valued: false,
        }
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, a: f64) -> Field {
        self.scale(a)
    }
}

/// Coefficients on `{1, ..., N}`: the Hardy-space states `u_+`, `m`, `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveField {
    coeffs: Vec<Complex64>,
}

impl PositiveField {
    pub fn zeros(n_max: usize) -> Self {
        PositiveField {
            coeffs: vec![ZERO; n_max],
        }
    }

    /// `coeffs[j]` is the coefficient of `e^{i (j+1) x}`.
    pub fn from_vec(coeffs: Vec<Complex64>) -> Self {
        PositiveField { coeffs }
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient at `n`; zero unless `1 <= n <= N`.
    #[inline]
    pub fn coeff(&self, n: i64) -> Complex64 {
        if n >= 1 && (n as usize) <= self.coeffs.len() {
            self.coeffs[n as usize - 1]
        } else {
            ZERO
        }
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Embeds into a full field of radius `n_max` (extra modes dropped).
    pub fn to_field(&self, n_max: usize) -> Field {
        let mut coeffs = vec![ZERO; 2 * n_max + 1];
        for (j, c) in self.coeffs.iter().enumerate().take(n_max) {
            coeffs[n_max + j + 1] = *c;
        }
        let real_valued = coeffs.iter().all(|c| *c == ZERO);
        Field {
            n_max,
            coeffs,
            real_valued,
        }
    }

    /// `m + conj(m)` as a real field: `n -> m(n)` for `n > 0`, `conj(m(-n))` for `n < 0`.
    pub fn real_extension(&self, n_max: usize) -> Field {
        let mut half = vec![ZERO; n_max + 1];
        let m = n_max.min(self.coeffs.len());
        half[1..=m].copy_from_slice(&self.coeffs[..m]);
        Field::from_half(n_max, &half)
    }

    /// `|m|^2` for a positive-frequency `m`, exact on `{-(N-1), ..., N-1}` and
    /// returned on a lattice of radius `n_max`.
    pub fn abs_sq(&self, n_max: usize) -> Field {
        let len = self.coeffs.len();
        let mut half = vec![ZERO; n_max + 1];
        for (d, slot) in half.iter_mut().enumerate().take(len.min(n_max + 1)) {
            let mut acc = ZERO;
            for k in 0..len - d {
                acc += self.coeffs[k + d] * self.coeffs[k].conj();
            }
            *slot = acc;
        }
        Field::from_half(n_max, &half)
    }

    pub fn scale(&self, a: Complex64) -> PositiveField {
        PositiveField {
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn add_scaled(&self, a: Complex64, other: &PositiveField) -> PositiveField {
        assert_eq!(self.n_max(), other.n_max(), "lattice mismatch in add_scaled");
        PositiveField {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl FourierModes for PositiveField {
    fn radius(&self) -> usize {
        self.coeffs.len()
    }

    fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(|(j, c)| (j as i64 + 1, *c))
    }
}

/// Builds a field from explicit modes. With `symmetrize`, only `n > 0` may be given
/// and the negative modes are filled by conjugation.
pub fn make_field(modes: &[(i64, Complex64)], spec: &LatticeSpec, symmetrize: bool) -> Result<Field> {
    spec.validate()?;
    let mut f = Field::zeros(spec.n_max);
    let mut seen = std::collections::BTreeSet::new();
    for &(n, value) in modes {
        if n.unsigned_abs() as usize > spec.n_max {
            return Err(Error::IndexOutOfRange { n, n_max: spec.n_max });
        }
        if !seen.insert(n) {
            return Err(Error::DuplicateIndex(n));
        }
        if symmetrize && n <= 0 {
            return Err(Error::NonPositiveMode(n));
        }
        f.coeffs[(n + spec.n_max as i64) as usize] = value;
    }
    if symmetrize {
        for n in 1..=spec.n_max {
            f.coeffs[spec.n_max - n] = f.coeffs[spec.n_max + n].conj();
        }
        f.real_valued = true;
    } else {
        f.real_valued = f.symmetry_defect() == 0.0;
    }
    Ok(f)
}

fn check_exponent(rho: f64, n_max: usize) -> Result<()> {
    let exponent = 2.0 * rho * n_max as f64;
    if exponent > EXPONENT_CAP {
        Err(Error::ExponentCap {
            exponent,
            cap: EXPONENT_CAP,
        })
    } else {
        Ok(())
    }
}

/// Squared analytic Sobolev norm `sum_{n != 0} <n>^{2s} |u^(n)|^2 e^{2 rho |n|}`.
pub fn analytic_norm_sq<F: FourierModes>(f: &F, rho: f64, s: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be >= 0, got {rho}")));
    }
    check_exponent(rho, f.radius())?;
    Ok(f
        .modes()
        .filter(|(n, _)| *n != 0)
        .map(|(n, c)| sobolev_weight(n, s) * c.norm_sqr() * (2.0 * rho * n.abs() as f64).exp())
        .sum())
}

/// Analytic Sobolev norm `|u|_{rho,s}`; the zero mode is excluded.
pub fn analytic_norm<F: FourierModes>(f: &F, rho: f64, s: f64) -> Result<f64> {
    analytic_norm_sq(f, rho, s).map(f64::sqrt)
}

/// Normalized `L^2` inner product `sum_n f^(n) conj(g^(n))`.
pub fn inner_l2<F: FourierModes>(f: &F, g: &F) -> Result<Complex64> {
    if f.radius() != g.radius() {
        return Err(Error::LatticeMismatch {
            left: f.radius(),
            right: g.radius(),
        });
    }
    Ok(f.modes().zip(g.modes()).map(|((_, a), (_, b))| a * b.conj()).sum())
}

/// `|f|_{L^2}` (normalized measure, zero mode included).
pub fn l2_norm<F: FourierModes>(f: &F) -> f64 {
    f.modes().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Momentum and energy of a real zero-mean state, normalized measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicInvariants {
    pub momentum: f64,
    pub energy: f64,
}

/// `P = 1/2 sum |u^(n)|^2` and `H = 1/2 sum |n| |u^(n)|^2 + 1/6 sum_{n+m+k=0} u^(n) u^(m) u^(k)`.
pub fn classic_invariants(u: &Field) -> Result<ClassicInvariants> {
    u.require_real_zero_mean()?;
    let n_max = u.n_max as i64;
    let mut momentum = 0.0;
    let mut quadratic = 0.0;
    for n in -n_max..=n_max {
        let w = u.coeff(n).norm_sqr();
        momentum += w;
        quadratic += n.abs() as f64 * w;
    }
    let square = u.multiply(u)?;
    let cubic: Complex64 = (-n_max..=n_max).map(|n| u.coeff(n) * square.coeff(-n)).sum();
    Ok(ClassicInvariants {
        momentum: 0.5 * momentum,
        energy: 0.5 * quadratic + cubic.re / 6.0,
    })
}

/// `sum_{k in Z} <k>^{-2s}` with its bracketed tail.
pub fn japanese_zeta(s: f64, tol: f64) -> Result<SeriesSum> {
    if !(s > 0.5) {
        return Err(Error::SeriesDiverges(s));
    }
    let p = 2.0 * s - 1.0;
    let term = move |k: u64| {
        let j = 1.0 + (k as f64) * (k as f64);
        if s == 1.0 {
            1.0 / j
        } else if s == 2.0 {
            1.0 / (j * j)
        } else {
            j.powf(-s)
        }
    };
    // int_a^inf (1+x^2)^{-s} dx lies in [(1 + a^{-2})^{-s}, 1] * a^{1-2s} / (2s-1)
    let tail = move |k: u64| {
        let a = k as f64;
        let b = a + 1.0;
        let hi = a.powf(-p) / p;
        let lo = (1.0 + 1.0 / (b * b)).powf(-s) * b.powf(-p) / p;
        (lo, hi)
    };
    let one_sided = sum_with_tail(term, tail, 0.5 * tol, 200_000_000);
    Ok(SeriesSum {
        value: 1.0 + 2.0 * one_sided.value,
        error_bound: 2.0 * one_sided.error_bound,
        terms: one_sided.terms,
    })
}

/// Banach-algebra constant `C_s = 2^{s+1} (sum_k <k>^{-2s})^{1/2}`.
pub fn algebra_constant(s: f64) -> Result<f64> {
    let z = japanese_zeta(s, 1e-12)?;
    Ok(2f64.powf(s + 1.0) * z.value.sqrt())
}

/// Deterministic real zero-mean field with
/// `|u^(n)| <= amplitude e^{-(rho + margin)|n|} / <n>^2`.
pub fn random_analytic_field(seed: u64, spec: &LatticeSpec, amplitude: f64, decay_margin: f64) -> Result<Field> {
    spec.validate()?;
    if !(amplitude > 0.0) || !(decay_margin > 0.0) {
        return Err(Error::InvalidParameter(
            "amplitude and decay_margin must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut half = vec![ZERO; spec.n_max + 1];
    for (n, slot) in half.iter_mut().enumerate().skip(1) {
        let envelope = amplitude * (-(spec.rho + decay_margin) * n as f64).exp() / japanese_sq(n as i64);
        let radius: f64 = rng.random::<f64>() * envelope;
        let phase: f64 = rng.random::<f64>() * 2.0 * PI;
        *slot = Complex64::from_polar(radius, phase);
    }
    Ok(Field::from_half(spec.n_max, &half))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> LatticeSpec {
        LatticeSpec::new(n, 0.5, 1.0).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_cos(n: usize) -> Field {
        make_field(&[(1, c(1.0, 0.0))], &spec(n), true).unwrap()
    }

    #[test]
    fn make_field_single_mode() {
        let u = two_cos(4);
        assert_eq!(u.coeff(1), c(1.0, 0.0));
        assert_eq!(u.coeff(-1), c(1.0, 0.0));
        assert!(u.is_real_valued() && u.is_zero_mean());
        let vals = u.sample(8);
        assert!((vals[0].re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn make_field_minus_sine() {
        let u = make_field(&[(1, c(0.0, 0.5))], &spec(4), true).unwrap();
        assert_eq!(u.coeff(-1), c(0.0, -0.5));
        // u(pi/2) = -sin(pi/2)
        let vals = u.sample(4);
        assert!((vals[1].re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn make_field_errors() {
        let s = spec(3);
        assert_eq!(
            make_field(&[(4, c(1.0, 0.0))], &s, false),
            Err(Error::IndexOutOfRange { n: 4, n_max: 3 })
        );
        assert_eq!(
            make_field(&[(2, c(1.0, 0.0)), (2, c(0.0, 1.0))], &s, false),
            Err(Error::DuplicateIndex(2))
        );
        assert_eq!(make_field(&[(-1, c(1.0, 0.0))], &s, true), Err(Error::NonPositiveMode(-1)));
        let empty = make_field(&[], &s, true).unwrap();
        assert_eq!(empty, Field::zeros(3));
    }

    #[test]
    fn norm_single_mode() {
        let u = two_cos(8);
        let n = analytic_norm(&u, 0.5, 1.0).unwrap();
        assert!((n * n - 4.0 * 1f64.exp()).abs() < 1e-13);
        assert!((n - 3.2974425414002564).abs() < 1e-12);
        assert!((analytic_norm(&u, 0.0, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(analytic_norm(&Field::zeros(8), 0.3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn norm_exponent_cap() {
        let u = Field::zeros(100);
        assert!(analytic_norm(&u, 3.0, 1.0).is_ok());
        assert!(matches!(analytic_norm(&u, 3.01, 1.0), Err(Error::ExponentCap { .. })));
    }

    #[test]
    fn projections() {
        let u = two_cos(4);
        let p = u.project(Sign::Plus);
        assert_eq!(p.coeff(1), c(1.0, 0.0));
        assert_eq!(p.coeff(-1), ZERO);
        assert_eq!(u.project(Sign::Zero), Field::zeros(4));
        let k = Field::constant(4, 3.0);
        assert_eq!(k.project(Sign::Zero).coeff(0), c(3.0, 0.0));
        assert_eq!(u.positive_part().as_slice()[0], c(1.0, 0.0));
    }

    #[test]
    fn hilbert_and_derivative() {
        let u = two_cos(4);
        let h = u.hilbert();
        assert_eq!(h.coeff(1), c(0.0, -1.0));
        assert_eq!(h.coeff(-1), c(0.0, 1.0));
        assert_eq!(h.hilbert(), -&u);
        let d = u.derivative();
        assert_eq!(d.coeff(1), c(0.0, 1.0));
        assert!(d.is_zero_mean() && d.is_real_valued());
        assert_eq!(Field::zeros(3).hilbert(), Field::zeros(3));
        assert_eq!(Field::zeros(3).derivative(), Field::zeros(3));
    }

    #[test]
    fn products() {
        let s = spec(4);
        let e1 = make_field(&[(1, c(1.0, 0.0))], &s, false).unwrap();
        let sq = e1.multiply(&e1).unwrap();
        assert_eq!(sq.coeff(2), c(1.0, 0.0));
        assert_eq!(sq.max_modulus(), 1.0);
        let u = two_cos(4);
        let u2 = u.multiply(&u).unwrap();
        assert_eq!(u2.coeff(0), c(2.0, 0.0));
        assert_eq!(u2.coeff(2), c(1.0, 0.0));
        assert_eq!(u2.coeff(-2), c(1.0, 0.0));
        assert!(!u2.is_zero_mean() && u2.is_real_valued());
        assert!(matches!(u.multiply(&Field::zeros(5)), Err(Error::LatticeMismatch { .. })));
    }

    #[test]
    fn inner_products() {
        let u = two_cos(4);
        assert_eq!(inner_l2(&u, &u).unwrap(), c(2.0, 0.0));
        assert_eq!(inner_l2(&u, &Field::zeros(4)).unwrap(), ZERO);
        let s = spec(4);
        let e1 = make_field(&[(1, c(1.0, 0.0))], &s, false).unwrap();
        let e2 = make_field(&[(2, c(1.0, 0.0))], &s, false).unwrap();
        assert_eq!(inner_l2(&e1, &e2).unwrap(), ZERO);
    }

    #[test]
    fn invariants_single_mode() {
        let inv = classic_invariants(&two_cos(6)).unwrap();
        assert!((inv.momentum - 1.0).abs() < 1e-15);
        assert!((inv.energy - 1.0).abs() < 1e-15);
        let z = classic_invariants(&Field::zeros(3)).unwrap();
        assert_eq!((z.momentum, z.energy), (0.0, 0.0));
        assert_eq!(
            classic_invariants(&Field::constant(3, 1.0)),
            Err(Error::NotRealZeroMean)
        );
    }

    #[test]
    fn algebra_constant_s1() {
        let c1 = algebra_constant(1.0).unwrap();
        let closed = 4.0 * (PI / PI.tanh()).sqrt();
        assert!((c1 - closed).abs() < 1e-10, "{c1} vs {closed}");
        assert!((c1 - 7.10307).abs() < 1e-5);
        assert_eq!(algebra_constant(0.5), Err(Error::SeriesDiverges(0.5)));
    }

    #[test]
    fn algebra_constant_large_s() {
        let s = 30.0;
        let expected = 2f64.powf(s + 1.0) * (1.0 + 2.0 * 2f64.powf(-s)).sqrt();
        let got = algebra_constant(s).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-9);
    }

    #[test]
    fn random_fields_deterministic_and_bounded() {
        let s = spec(24);
        let a = random_analytic_field(7, &s, 0.3, 0.2).unwrap();
        let b = random_analytic_field(7, &s, 0.3, 0.2).unwrap();
        assert_eq!(a, b);
        assert!(a.is_real_valued() && a.is_zero_mean());
        assert_eq!(a.symmetry_defect(), 0.0);
        for n in 1..=24i64 {
            let env = 0.3 * (-(0.7) * n as f64).exp() / japanese_sq(n);
            assert!(a.coeff(n).norm() <= env * (1.0 + 1e-15));
        }
        assert_ne!(a, random_analytic_field(8, &s, 0.3, 0.2).unwrap());
    }

    #[test]
    fn resize_pads_and_truncates() {
        let u = two_cos(3).add_scaled(1.0, &make_field(&[(3, c(0.1, 0.2))], &spec(3), true).unwrap());
        let big = u.resized(6);
        assert_eq!(big.coeff(3), c(0.1, 0.2));
        assert_eq!(big.coeff(6), ZERO);
        assert!(big.is_real_valued());
        let small = u.resized(2);
        assert_eq!(small.coeff(3), ZERO);
        assert_eq!(small.coeff(-1), c(1.0, 0.0));
    }
}
