//! Verification suites: closed forms against the scheme algebra and the
//! brute-force oracles.

use std::fmt;
use std::str::FromStr;

use num::Zero;
use serde::Serialize;

use crate::combinatorics::{to_f64, Rational};
use crate::error::{Error, Result};
use crate::gram::{closed_form_spectrum, direct_spectrum, gram_matrix, ProblemInstance};
use crate::johnson::{
    all_nonnegative_integers, dual_hahn_polynomial, eigenmatrices, hahn_polynomial,
    projector_element, verify_bose_mesner_closure, AlgebraElement, SchemeBasis,
};
use crate::linalg::min_eigenvalue;
use crate::oracle::{sample_measurement, srm_oracle_for, universal_success_oracle};
use crate::protocols::{
    explicit_success_k123, min_error_success, unambiguous_success, verify_unambiguous_certificates,
};
use crate::sweep::Check;
use crate::universal::{
    average_known_success, universal_asymptote, universal_success, UniversalInstance,
    DEFAULT_QUADRATURE_POINTS,
};

pub const OVERLAP_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    All,
    Scheme,
    Gram,
    Detection,
    Universal,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Scheme => "scheme",
            Scope::Gram => "gram",
            Scope::Detection => "detection",
            Scope::Universal => "universal",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Scope::All),
            "scheme" => Ok(Scope::Scheme),
            "gram" => Ok(Scope::Gram),
            "detection" => Ok(Scope::Detection),
            "universal" => Ok(Scope::Universal),
            other => Err(Error::InvalidParameter(format!("unknown verify scope '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub scope: Scope,
    pub max_n: u32,
    /// Seed for the sampled-measurement check.
    pub seed: u64,
    /// Multiplies every numerical tolerance.
    pub tol_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { scope: Scope::All, max_n: 9, seed: 0, tol_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scope: String,
    pub max_n: u32,
    pub seed: u64,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// `(n, k)` with `k <= min(kmax, n/2)`.
fn grid(max_n: u32, cap_n: u32, kmax: u32) -> impl Iterator<Item = (u32, u32)> {
    (1..=max_n.min(cap_n)).flat_map(move |n| (0..=kmax.min(n / 2)).map(move |k| (n, k)))
}

fn is_exact_identity(m: &[Vec<Rational>], scale: &Rational) -> bool {
    m.iter().enumerate().all(|(a, row)| {
        row.iter().enumerate().all(|(b, v)| if a == b { v == scale } else { v.is_zero() })
    })
}

fn exact_check(name: &str, instance: String, ok: bool) -> Check {
    Check::new(name, instance, if ok { 0.0 } else { 1.0 }, 0.0)
}

fn scheme_checks(cfg: &VerifyConfig) -> Vec<Check> {
    let mut checks = Vec::new();
    for (n, k) in grid(cfg.max_n, 8, 4) {
        let inst = format!("n={n},k={k}");
        let basis = match SchemeBasis::new(n, k) {
            Ok(b) => b,
            Err(e) => {
                checks.push(Check::from_result("scheme_basis", inst, Err(e)));
                continue;
            }
        };
        let numbers = match verify_bose_mesner_closure(&basis) {
            Ok(x) => x,
            Err(e) => {
                checks.push(Check::from_result("bose_mesner_closure", inst, Err(e)));
                continue;
            }
        };
        checks.push(exact_check("bose_mesner_closure", inst.clone(), true));

        let eig = match eigenmatrices(n, k) {
            Ok(e) => e,
            Err(e) => {
                checks.push(Check::from_result("eigenmatrices", inst, Err(e)));
                continue;
            }
        };
        checks.push(exact_check("pq_identity", inst.clone(), is_exact_identity(&eig.product(), &eig.size())));
        checks.push(exact_check(
            "valencies_multiplicities_integral",
            inst.clone(),
            all_nonnegative_integers(&eig.valencies()) && all_nonnegative_integers(&eig.multiplicities()),
        ));

        let d = eig.classes() + 1;
        let projectors: Vec<AlgebraElement> = (0..d).map(|j| projector_element(&eig, j)).collect();
        let mut ok = true;
        for (j, ej) in projectors.iter().enumerate() {
            for (l, el) in projectors.iter().enumerate() {
                let prod = ej.mul(el, &numbers);
                let want = if j == l { ej.clone() } else { AlgebraElement { coeffs: vec![Rational::zero(); d] } };
                ok &= prod == want;
            }
        }
        checks.push(exact_check("projector_idempotent_orthogonal", inst.clone(), ok));
        let total = projectors.iter().skip(1).fold(projectors[0].clone(), |acc, e| acc.add(e));
        checks.push(exact_check("projector_completeness", inst.clone(), total == AlgebraElement::identity(d - 1)));
        let traces_ok = projectors
            .iter()
            .zip(eig.multiplicities())
            .all(|(e, m)| e.trace(basis.size()) == m);
        checks.push(exact_check("projector_rank", inst.clone(), traces_ok));

        let kr = eig.classes() as u32;
        let mut duality = true;
        for i in 0..=kr {
            for j in 0..=kr {
                match (hahn_polynomial(j, i, n, kr), dual_hahn_polynomial(i, j, n, kr)) {
                    (Ok(a), Ok(b)) => duality &= a == b,
                    _ => duality = false,
                }
            }
        }
        checks.push(exact_check("hahn_dual_hahn_duality", inst, duality));
    }
    checks
}

fn gram_checks(cfg: &VerifyConfig) -> Vec<Check> {
    let tol = 1e-9 * cfg.tol_scale;
    let mut checks = Vec::new();
    for (n, k) in grid(cfg.max_n, 9, 4) {
        for c in OVERLAP_GRID {
            let inst = format!("n={n},k={k},c={c}");
            let result = (|| {
                let pi = ProblemInstance::new(n, k, c)?;
                let closed = closed_form_spectrum(&pi)?.expanded();
                let direct = direct_spectrum(&gram_matrix(&pi)?)?;
                let residual = closed.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                Ok((if closed.len() == direct.len() { residual } else { f64::INFINITY }, tol))
            })();
            checks.push(Check::from_result("spectrum_closed_vs_direct", inst, result));
        }
    }
    checks
}

fn detection_checks(cfg: &VerifyConfig) -> Vec<Check> {
    let tol = 1e-10 * cfg.tol_scale;
    let mut checks = Vec::new();
    for (n, k) in grid(cfg.max_n, 9, 4) {
        for c in OVERLAP_GRID {
            let inst = format!("n={n},k={k},c={c}");
            let pi = match ProblemInstance::new(n, k, c) {
                Ok(p) => p,
                Err(e) => {
                    checks.push(Check::from_result("instance", inst, Err(e)));
                    continue;
                }
            };
            checks.push(Check::from_result(
                "minerr_vs_srm_oracle",
                inst.clone(),
                (|| {
                    let closed = min_error_success(&pi)?.value;
                    let oracle = srm_oracle_for(&pi)?;
                    Ok(((closed - oracle.success).abs().max((closed - oracle.vector_success).abs()), tol))
                })(),
            ));
            checks.push(Check::from_result(
                "unambiguous_vs_min_eigenvalue",
                inst.clone(),
                (|| {
                    let value = unambiguous_success(&pi)?.value;
                    let lo = min_eigenvalue(&gram_matrix(&pi)?)?;
                    Ok(((value - lo).abs(), tol))
                })(),
            ));
            checks.push(Check::from_result(
                "unambiguous_certificates",
                inst,
                (|| {
                    let report = verify_unambiguous_certificates(&pi)?;
                    let residual = if report.primal_feasible && report.dual_feasible { report.gap } else { f64::INFINITY };
                    Ok((residual, tol))
                })(),
            ));
        }
    }
    for k in 1..=3u32 {
        let result = (|| {
            let mut worst = 0.0f64;
            for n in (2 * k - 1)..=60 {
                for c in OVERLAP_GRID {
                    let pi = ProblemInstance::new(n, k, c)?;
                    let diff = explicit_success_k123(&pi)?.value - min_error_success(&pi)?.value;
                    worst = worst.max(diff.abs());
                }
            }
            Ok((worst, 1e-12 * cfg.tol_scale))
        })();
        checks.push(Check::from_result("explicit_formula_vs_spectrum", format!("k={k},n<=60"), result));
    }
    if cfg.max_n >= 4 {
        let shots = 200_000u64;
        let result = (|| {
            let pi = ProblemInstance::new(4, 2, 0.5)?;
            let oracle = srm_oracle_for(&pi)?;
            let joint = oracle.joint_distribution()?;
            let counts = sample_measurement(&joint, cfg.seed, shots)?;
            let outcomes = pi.size() as usize + 1;
            let hits: u64 = (0..pi.size() as usize).map(|r| counts[r * outcomes + r]).sum();
            let p = oracle.success;
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            Ok(((hits as f64 / shots as f64 - p).abs() / sigma, 5.0 * cfg.tol_scale.max(1.0)))
        })();
        checks.push(Check::from_result("sampled_srm_success_sigmas", format!("n=4,k=2,c=0.5,seed={}", cfg.seed), result));
    }
    checks
}

fn universal_checks(cfg: &VerifyConfig) -> Vec<Check> {
    let tol = 1e-8 * cfg.tol_scale;
    let mut checks = Vec::new();
    for (d, cap) in [(2u32, 6u32), (3, 4)] {
        for n in 2..=cfg.max_n.min(cap) {
            let kmax = if d == 2 { n / 2 } else { 2.min(n / 2) };
            for k in 0..=kmax {
                let inst = format!("n={n},k={k},d={d}");
                checks.push(Check::from_result(
                    "universal_vs_density_oracle",
                    inst,
                    (|| {
                        let ui = UniversalInstance::new(n, k, d)?;
                        let oracle = universal_success_oracle(&ui)?;
                        if !oracle.holevo_satisfied() {
                            return Ok((f64::INFINITY, tol));
                        }
                        Ok(((oracle.success - universal_success(&ui)?).abs(), tol))
                    })(),
                ));
            }
        }
    }
    checks.push(Check::from_result(
        "universal_pair_is_half",
        "n=2,k=1,d=2",
        (|| {
            let exact = crate::universal::universal_success_exact(&UniversalInstance::new(2, 1, 2)?)?;
            Ok(((to_f64(&(exact - Rational::new(1.into(), 2.into())))).abs(), 0.0))
        })(),
    ));
    for k in 1..=3u32 {
        checks.push(Check::from_result(
            "universal_large_n_limit",
            format!("n=500,k={k},d=2"),
            (|| {
                let v = universal_success(&UniversalInstance::new(500, k, 2)?)?;
                Ok(((v - universal_asymptote(k, 2)?).abs(), 0.01))
            })(),
        ));
    }
    for d in 2..=4u32 {
        for k in 0..=4u32 {
            checks.push(Check::from_result(
                "average_overlap_quadrature",
                format!("k={k},d={d}"),
                (|| {
                    let v = average_known_success(k, d, DEFAULT_QUADRATURE_POINTS)?;
                    Ok(((v - universal_asymptote(k, d)?).abs(), tol))
                })(),
            ));
        }
    }
    checks
}

/// Runs the suites selected by `cfg.scope`.
pub fn run_verification(cfg: &VerifyConfig) -> Result<Report> {
    if cfg.tol_scale.is_nan() || cfg.tol_scale < 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance scale {} must be >= 0", cfg.tol_scale)));
    }
    let mut checks = Vec::new();
    let all = cfg.scope == Scope::All;
    if all || cfg.scope == Scope::Scheme {
        checks.extend(scheme_checks(cfg));
    }
    if all || cfg.scope == Scope::Gram {
        checks.extend(gram_checks(cfg));
    }
    if all || cfg.scope == Scope::Detection {
        checks.extend(detection_checks(cfg));
    }
    if all || cfg.scope == Scope::Universal {
        checks.extend(universal_checks(cfg));
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let summary = Summary {
        scope: cfg.scope.name().to_string(),
        max_n: cfg.max_n,
        seed: cfg.seed,
        total: checks.len(),
        passed,
        failed: checks.len() - passed,
    };
    Ok(Report { checks, summary })
}
