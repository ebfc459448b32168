//! Minimum-error and unambiguous identification of the anomaly pattern.

use std::fmt;

use nalgebra::DMatrix;
use crate::combinatorics::{binomial_f64, Rational};
use crate::error::{Error, Result};
use crate::gram::{closed_form_spectrum, gram_matrix, ProblemInstance};
use crate::johnson::{class_count, eigenmatrices, projector_element, SchemeBasis};
use crate::linalg::{frobenius, min_eigenvalue};

/// Tolerance used by the certificate checks.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-10;
/// `k/n` above which the large-n expansion is flagged.
pub const ASYMPTOTIC_REGIME_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Asymptotic,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed-form",
            Method::Asymptotic => "asymptotic",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub value: f64,
    pub method: Method,
    pub instance: ProblemInstance,
}

/// Optimal minimum-error success probability `(Σ_j m_j √λ_j / N)²`.
pub fn min_error_success(instance: &ProblemInstance) -> Result<ProtocolResult> {
    let spectrum = closed_form_spectrum(instance)?;
    let size = spectrum.size() as f64;
    let amplitude: f64 = spectrum
        .entries
        .iter()
        .map(|e| e.multiplicity as f64 / size * e.eigenvalue.max(0.0).sqrt())
        .sum();
    Ok(ProtocolResult {
        value: amplitude * amplitude,
        method: Method::ClosedForm,
        instance: instance.clone(),
    })
}

/// Warning text when `k/n` leaves the regime of the large-n expansion.
pub fn asymptotic_regime_warning(instance: &ProblemInstance) -> Option<String> {
    let ratio = instance.k as f64 / instance.n as f64;
    (ratio > ASYMPTOTIC_REGIME_LIMIT).then(|| {
        format!(
            "k/n = {ratio:.3} exceeds {ASYMPTOTIC_REGIME_LIMIT}; the large-n expansion is unreliable"
        )
    })
}

/// Two leading terms `(1-c²)^k + 2kc(1-c²)^(k-1/2)/√n`, never clamped.
pub fn min_error_asymptotic(instance: &ProblemInstance) -> Result<ProtocolResult> {
    if instance.k >= instance.n {
        return Err(Error::InvalidParameter(format!(
            "asymptotic expansion needs k < n (k = {}, n = {})",
            instance.k, instance.n
        )));
    }
    if let Some(w) = asymptotic_regime_warning(instance) {
        log::warn!("{w}");
    }
    let (k, c) = (instance.k as f64, instance.c);
    let one_minus = instance.c_squared().mul_add(-1.0, 1.0);
    let correction = if instance.k == 0 {
        0.0
    } else {
        2.0 * k * c * one_minus.powf(k - 0.5) / (instance.n as f64).sqrt()
    };
    Ok(ProtocolResult {
        value: one_minus.powf(k) + correction,
        method: Method::Asymptotic,
        instance: instance.clone(),
    })
}

/// Hand-expanded success probabilities for one, two and three anomalies.
pub fn explicit_success_k123(instance: &ProblemInstance) -> Result<ProtocolResult> {
    let k = instance.k;
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("explicit formulas cover k in 1..=3, got {k}")));
    }
    if instance.n < 2 * k - 1 {
        return Err(Error::InvalidParameter(format!(
            "explicit formula for k = {k} needs n >= {}",
            2 * k - 1
        )));
    }
    let n = instance.n as f64;
    let ni = instance.n as i64;
    let z = instance.c_squared();
    let w = 1.0 - z;
    let b = binomial_f64;
    let amplitude = match k {
        1 => ((n - 1.0) * w.sqrt() + (1.0 + (n - 1.0) * z).sqrt()) / n,
        2 => {
            (n - 3.0) / (n - 1.0) * w
                + 2.0 / n * w.sqrt() * (1.0 + (n - 3.0) * z).sqrt()
                + 2.0 / (n * (n - 1.0))
                    * (1.0 + 2.0 * b(ni - 2, 1) * z + b(ni - 2, 2) * z * z).sqrt()
        }
        _ => {
            (n - 5.0) / (n - 2.0) * w.powf(1.5)
                + 3.0 * (n - 3.0) / ((n - 1.0) * (n - 2.0)) * w * (1.0 + (n - 5.0) * z).sqrt()
                + 6.0 / (n * (n - 2.0))
                    * w.sqrt()
                    * (1.0 + 2.0 * b(ni - 4, 1) * z + b(ni - 4, 2) * z * z).sqrt()
                + 6.0 / (n * (n - 1.0) * (n - 2.0))
                    * (1.0
                        + 3.0 * b(ni - 3, 1) * z
                        + 3.0 * b(ni - 3, 2) * z * z
                        + b(ni - 3, 3) * z * z * z)
                        .sqrt()
        }
    };
    Ok(ProtocolResult {
        value: amplitude * amplitude,
        method: Method::ClosedForm,
        instance: instance.clone(),
    })
}

/// Optimal zero-error success probability: the smallest Gram eigenvalue,
/// `(1-c²)^min(k, n-k)`.
pub fn unambiguous_success(instance: &ProblemInstance) -> Result<ProtocolResult> {
    let exponent = class_count(instance.n, instance.k) as i32;
    Ok(ProtocolResult {
        value: (1.0 - instance.c_squared()).powi(exponent),
        method: Method::ClosedForm,
        instance: instance.clone(),
    })
}

/// Outcome of checking the primal ansatz `Γ = λ_min 1` and the dual witness
/// `Y = (N/m_k) E_k` of the zero-error program.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Smallest eigenvalue of `G - λ_min 1`.
    pub primal_min_eigenvalue: f64,
    /// Smallest eigenvalue of `Y`.
    pub dual_min_eigenvalue: f64,
    /// `max_r |Y_rr - 1|`.
    pub dual_diagonal_deviation: f64,
    /// Set for `c ∈ {0, 1}` or `N = 1`, which are resolved analytically.
    pub degenerate: bool,
}

impl CertificateReport {
    pub fn certified(&self, tolerance: f64) -> bool {
        self.primal_feasible && self.dual_feasible && self.gap <= tolerance
    }
}

/// Diagonal of the dual witness, `q_k(0) / m_k`, in exact arithmetic.
pub fn dual_witness_diagonal_exact(n: u32, k: u32) -> Result<Rational> {
    let eig = eigenmatrices(n, k)?;
    let last = eig.classes();
    Ok(&eig.q[0][last] / &eig.multiplicities()[last])
}

/// Checks optimality of `(1-c²)^k` for the unambiguous program by building
/// both certificates explicitly.
pub fn verify_unambiguous_certificates(instance: &ProblemInstance) -> Result<CertificateReport> {
    let primal_value = unambiguous_success(instance)?.value;
    let z = instance.c_squared();
    if z == 0.0 || z == 1.0 || instance.size() == 1 {
        // G = 1 or G = J: Γ = λ_min 1 is tight and Y = (N/m_k) E_k has unit
        // diagonal with Tr(G Y)/N = λ_min.
        return Ok(CertificateReport {
            primal_feasible: true,
            dual_feasible: true,
            primal_value,
            dual_value: primal_value,
            gap: 0.0,
            primal_min_eigenvalue: 0.0,
            dual_min_eigenvalue: 0.0,
            dual_diagonal_deviation: 0.0,
            degenerate: true,
        });
    }

    let gram = gram_matrix(instance)?;
    let size = gram.nrows();
    let tol = CERTIFICATE_TOLERANCE * frobenius(&gram).max(1.0);

    let shifted = &gram - DMatrix::identity(size, size) * primal_value;
    let primal_min_eigenvalue = min_eigenvalue(&shifted)?;
    let primal_feasible = primal_min_eigenvalue >= -tol && primal_value >= 0.0;

    let eig = eigenmatrices(instance.n, instance.k)?;
    let last = eig.classes();
    let basis = SchemeBasis::new(instance.n, instance.k)?;
    let mut witness = projector_element(&eig, last);
    let scale = eig.size() / &eig.multiplicities()[last];
    for c in witness.coeffs.iter_mut() {
        *c *= &scale;
    }
    let y = basis.combine(&witness.to_f64());
    let dual_min_eigenvalue = min_eigenvalue(&y)?;
    let dual_diagonal_deviation =
        (0..size).map(|r| (y[(r, r)] - 1.0).abs()).fold(0.0, f64::max);
    let dual_value = (&gram * &y).trace() / size as f64;
    let dual_feasible = dual_min_eigenvalue >= -tol && dual_diagonal_deviation <= CERTIFICATE_TOLERANCE;

    Ok(CertificateReport {
        primal_feasible,
        dual_feasible,
        primal_value,
        dual_value,
        gap: (primal_value - dual_value).abs(),
        primal_min_eigenvalue,
        dual_min_eigenvalue,
        dual_diagonal_deviation,
        degenerate: false,
    })
}
