//! Dense symmetric and Hermitian eigen-machinery.
//!
//! Real symmetric matrices are diagonalized by cyclic Jacobi rotations.
//! Hermitian matrices with a non-zero imaginary part go through the real
//! embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is the Hermitian one with
//! every eigenvalue doubled and which maps matrix functions onto matrix
//! functions.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Convergence threshold: off-diagonal norm relative to the Frobenius norm.
pub const JACOBI_RELATIVE_TOLERANCE: f64 = 1e-12;
/// Eigenvalues at or above `-PSD_CLAMP` are treated as zero when taking roots.
pub const PSD_CLAMP: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

pub type C64 = Complex<f64>;

/// Eigenvalues (descending) and matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// Rebuilds `V f(D) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        &scaled * v.transpose()
    }
}

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok(())
}

/// Largest `|a_ij - a_ji|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Largest `|h_ij - conj(h_ji)|`.
pub fn hermitian_asymmetry(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    worst
}

fn symmetry_tolerance(max_abs: f64) -> f64 {
    1e-12 * max_abs.max(1.0)
}

/// Full eigendecomposition of a real symmetric matrix by cyclic Jacobi.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    jacobi(a, true)
}

/// Eigenvalues only, descending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(jacobi(a, false)?.eigenvalues)
}

fn jacobi(input: &DMatrix<f64>, want_vectors: bool) -> Result<SymmetricEigen> {
    check_square(input.nrows(), input.ncols())?;
    let n = input.nrows();
    let max_abs = input.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let asym = asymmetry(input);
    if asym > symmetry_tolerance(max_abs) {
        return Err(Error::NotSymmetric(asym));
    }

    // row-major working copy, symmetrized
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (input[(i, j)] + input[(j, i)]);
        }
    }
    // eigenvectors stored by rows: row r of `v` is eigenvector r
    let mut v = if want_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    } else {
        Vec::new()
    };

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off == 0.0 || converged {
            converged = true;
            break;
        }
        // one more sweep after reaching the tolerance: convergence is
        // quadratic, so this takes the residual down to roundoff
        converged = off <= JACOBI_RELATIVE_TOLERANCE * frob;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let h = a[r * n + q];
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                if want_vectors {
                    for r in 0..n {
                        let g = v[p * n + r];
                        let h = v[q * n + r];
                        v[p * n + r] = g - s * (h + g * tau);
                        v[q * n + r] = h + s * (g - h * tau);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NotConverged(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = if want_vectors {
        DMatrix::from_fn(n, n, |row, col| v[order[col] * n + row])
    } else {
        DMatrix::zeros(0, 0)
    };
    Ok(SymmetricEigen { eigenvalues, eigenvectors })
}

/// Smallest eigenvalue of a real symmetric matrix (`+inf` for an empty matrix).
pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.last().copied().unwrap_or(f64::INFINITY))
}

/// Square root of a PSD matrix; eigenvalues in `[-PSD_CLAMP, 0)` are clamped.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(a)?;
    if let Some(&lo) = eig.eigenvalues.last() {
        if lo < -PSD_CLAMP {
            return Err(Error::NegativeEigenvalue(lo));
        }
    }
    let floor = roundoff_floor(&eig.eigenvalues);
    Ok(eig.map(|x| if x > floor { x.sqrt() } else { 0.0 }))
}

/// Magnitude below which an eigenvalue is indistinguishable from zero.
pub fn roundoff_floor(eigenvalues: &[f64]) -> f64 {
    let top = eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    eigenvalues.len() as f64 * f64::EPSILON * top
}

/// Frobenius norm.
pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn is_real(h: &DMatrix<C64>) -> bool {
    h.iter().all(|z| z.im == 0.0)
}

fn embed(h: &DMatrix<C64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn check_hermitian(h: &DMatrix<C64>) -> Result<()> {
    check_square(h.nrows(), h.ncols())?;
    let max_abs = h.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let asym = hermitian_asymmetry(h);
    if asym > symmetry_tolerance(max_abs) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    if is_real(h) {
        return symmetric_eigenvalues(&h.map(|z| z.re));
    }
    let doubled = symmetric_eigenvalues(&embed(h))?;
    Ok(doubled.into_iter().step_by(2).collect())
}

/// `f(H)` for Hermitian `H`, along with the eigenvalues of `H` (descending).
pub fn hermitian_function(
    h: &DMatrix<C64>,
    f: impl Fn(f64) -> f64,
) -> Result<(DMatrix<C64>, Vec<f64>)> {
    check_hermitian(h)?;
    let n = h.nrows();
    if is_real(h) {
        let eig = symmetric_eigen(&h.map(|z| z.re))?;
        let out = eig.map(f).map(|x| C64::new(x, 0.0));
        return Ok((out, eig.eigenvalues));
    }
    let eig = symmetric_eigen(&embed(h))?;
    let big = eig.map(f);
    let out = DMatrix::from_fn(n, n, |i, j| C64::new(big[(i, j)], big[(i + n, j)]));
    Ok((out, eig.eigenvalues.into_iter().step_by(2).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_all_ones() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert!(symmetric_eigenvalues(&id).unwrap().iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let ones = DMatrix::<f64>::from_element(6, 6, 1.0);
        let ev = symmetric_eigenvalues(&ones).unwrap();
        assert!((ev[0] - 6.0).abs() < 1e-12);
        assert!(ev[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigen(&a), Err(Error::NotSymmetric(_))));
        let b = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(symmetric_eigen(&b), Err(Error::NotSquare { .. })));
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(psd_sqrt(&neg), Err(Error::NegativeEigenvalue(_))));
    }

    #[test]
    fn sqrt_of_all_ones_is_rank_one() {
        let n = 7;
        let ones = DMatrix::<f64>::from_element(n, n, 1.0);
        let s = psd_sqrt(&ones).unwrap();
        let want = &ones / (n as f64).sqrt();
        assert!(frobenius(&(s - want)) < 1e-12);
    }

    #[test]
    fn complex_hermitian_through_embedding() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let h = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        );
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        let (s, _) = hermitian_function(&h, f64::sqrt).unwrap();
        let back = &s * &s;
        assert!((back - h).iter().all(|z| z.norm() < 1e-12));
    }

    fn symmetric_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec(-5.0f64..5.0, n * n).prop_map(move |vals| {
                let m = DMatrix::from_vec(n, n, vals);
                (&m + m.transpose()) * 0.5
            })
        })
    }

    proptest! {
        #[test]
        fn decomposition_reconstructs(a in symmetric_strategy()) {
            let eig = symmetric_eigen(&a).unwrap();
            let back = eig.map(|x| x);
            prop_assert!(frobenius(&(back - &a)) <= 1e-10 * frobenius(&a).max(1.0));
            let v = &eig.eigenvectors;
            let n = a.nrows();
            prop_assert!(frobenius(&(v.transpose() * v - DMatrix::identity(n, n))) < 1e-10);
            prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let trace: f64 = eig.eigenvalues.iter().sum();
            prop_assert!((trace - a.trace()).abs() < 1e-9);
        }

        #[test]
        fn psd_sqrt_squares_back(a in symmetric_strategy()) {
            let g = &a * a.transpose();
            let s = psd_sqrt(&g).unwrap();
            prop_assert!(frobenius(&(&s * &s - &g)) <= 1e-9 * frobenius(&g).max(1.0));
        }
    }
}
