//! Hypothesis Gram matrix `G_rs = (c²)^δ(r,s)` and its spectrum.
//!
//! The closed form gives `k+1` distinct eigenvalues
//! `λ_j = (1-c²)^j ₂F₁(j-k, -n+k+j; 1; c²)` with multiplicities
//! `C(n, j) - C(n, j-1)`; the direct route diagonalizes the explicit matrix.

use nalgebra::DMatrix;
use num::{One, ToPrimitive};

use crate::combinatorics::{hypergeometric_terminating, rat, to_f64, Rational};
use crate::error::{Error, Result};
use crate::johnson::{capped_size, class_count, multiplicity, SchemeBasis, DEFAULT_SIZE_CAP};
use crate::linalg::{psd_sqrt, symmetric_eigenvalues};

/// A known-states detection task: `n` preparations, `k` anomalies, overlap `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub n: u32,
    pub k: u32,
    pub c: f64,
    /// Exact `c²` when the caller supplied a rational overlap.
    pub c_squared_exact: Option<Rational>,
}

impl ProblemInstance {
    pub fn new(n: u32, k: u32, c: f64) -> Result<Self> {
        validate_nk(n, k)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InvalidParameter(format!("overlap c = {c} outside [0, 1]")));
        }
        Ok(Self { n, k, c, c_squared_exact: None })
    }

    /// Instance with an exact rational `c²`.
    pub fn with_exact_c_squared(n: u32, k: u32, c_squared: Rational) -> Result<Self> {
        validate_nk(n, k)?;
        if c_squared < rat(0) || c_squared > rat(1) {
            return Err(Error::InvalidParameter(format!("c² = {c_squared} outside [0, 1]")));
        }
        let c = to_f64(&c_squared).sqrt();
        Ok(Self { n, k, c, c_squared_exact: Some(c_squared) })
    }

    pub fn c_squared(&self) -> f64 {
        match &self.c_squared_exact {
            Some(z) => to_f64(z),
            None => self.c * self.c,
        }
    }

    /// Number of hypotheses `N = C(n, k)`, saturating at `u128::MAX`.
    pub fn size(&self) -> u128 {
        crate::combinatorics::binomial_u128(self.n as u64, self.k as u64).unwrap_or(u128::MAX)
    }
}

fn validate_nk(n: u32, k: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// One distinct eigenvalue with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEntry {
    pub index: u32,
    pub eigenvalue: f64,
    pub multiplicity: u128,
}

/// Distinct Gram eigenvalues `λ_0 > λ_1 > ... ` (for `0 < c < 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub entries: Vec<SpectralEntry>,
}

impl Spectrum {
    pub fn size(&self) -> u128 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn trace(&self) -> f64 {
        self.entries.iter().map(|e| e.multiplicity as f64 * e.eigenvalue).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.iter().map(|e| e.eigenvalue).fold(f64::INFINITY, f64::min)
    }

    /// Full eigenvalue multiset, descending.
    pub fn expanded(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.eigenvalue, e.multiplicity as usize))
            .collect();
        out.sort_by(|a, b| b.total_cmp(a));
        out
    }
}

/// Exact counterpart of [`SpectralEntry`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectralEntry {
    pub index: u32,
    pub eigenvalue: Rational,
    pub multiplicity: u128,
}

fn multiplicity_u128(n: u32, j: u32) -> Result<u128> {
    multiplicity(n, j)
        .to_u128()
        .ok_or_else(|| Error::InvalidParameter(format!("multiplicity C({n},{j}) overflows")))
}

/// `₂F₁(-a, -b; 1; z)` for non-negative integers `a, b`; every term is
/// non-negative for `z >= 0`.
pub(crate) fn hyp2f1_neg_f64(a: u64, b: u64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    for m in 0..a.min(b) {
        let num = (a - m) as f64 * (b - m) as f64;
        let den = ((m + 1) * (m + 1)) as f64;
        term *= num / den * z;
        sum += term;
    }
    sum
}

/// Gram eigenvalue `λ_j` in floating point.
pub fn gram_eigenvalue(n: u32, k: u32, j: u32, c_squared: f64) -> f64 {
    let k = class_count(n, k);
    (1.0 - c_squared).powi(j as i32) * hyp2f1_neg_f64((k - j) as u64, (n - k - j) as u64, c_squared)
}

/// Closed-form spectrum. For `k > n/2` the complementary problem
/// `(n, n-k)` is used, which has the same Gram matrix.
pub fn closed_form_spectrum(instance: &ProblemInstance) -> Result<Spectrum> {
    let (n, k) = (instance.n, class_count(instance.n, instance.k));
    let z = instance.c_squared();
    let entries = (0..=k)
        .map(|j| {
            Ok(SpectralEntry {
                index: j,
                eigenvalue: gram_eigenvalue(n, k, j, z),
                multiplicity: multiplicity_u128(n, j)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { entries })
}

/// Closed-form spectrum over exact rationals at rational `c²`.
pub fn closed_form_spectrum_exact(
    n: u32,
    k: u32,
    c_squared: &Rational,
) -> Result<Vec<ExactSpectralEntry>> {
    validate_nk(n, k)?;
    let k = class_count(n, k);
    let (ni, ki) = (n as i64, k as i64);
    let one_minus = Rational::one() - c_squared;
    (0..=k)
        .map(|j| {
            let ji = j as i64;
            let series = hypergeometric_terminating(
                &[rat(ji - ki), rat(-ni + ki + ji)],
                &[rat(1)],
                c_squared,
            )?;
            let mut scale = Rational::one();
            for _ in 0..j {
                scale *= &one_minus;
            }
            Ok(ExactSpectralEntry {
                index: j,
                eigenvalue: scale * series,
                multiplicity: multiplicity_u128(n, j)?,
            })
        })
        .collect()
}

/// Explicit Gram matrix in lexicographic pattern order.
pub fn gram_matrix(instance: &ProblemInstance) -> Result<DMatrix<f64>> {
    gram_matrix_with_cap(instance, DEFAULT_SIZE_CAP)
}

pub fn gram_matrix_with_cap(instance: &ProblemInstance, cap: usize) -> Result<DMatrix<f64>> {
    capped_size(instance.n, instance.k, cap)?;
    let basis = SchemeBasis::with_cap(instance.n, instance.k, cap)?;
    let z = instance.c_squared();
    let powers: Vec<f64> = (0..=basis.classes()).map(|i| z.powi(i as i32)).collect();
    Ok(basis.combine(&powers))
}

/// All eigenvalues of a symmetric matrix from the dense solver, descending.
pub fn direct_spectrum(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    symmetric_eigenvalues(matrix)
}

/// Symmetric PSD square root; eigenvalues down to `-1e-10` are clamped.
pub fn matrix_sqrt(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    psd_sqrt(gram)
}
