//! The Johnson association scheme on k-subsets of an n-set.
//!
//! Distance-indexed adjacency matrices `A_i` (`A_i[r][s] = 1` iff
//! `δ(r, s) = i`), Hahn and dual Hahn polynomials, the eigenmatrices `P`/`Q`
//! and the primitive idempotents `E_j` of the Bose-Mesner algebra.
//!
//! Eigenvalue index `j` runs so that `E_0 = J/N` and `E_j` has rank
//! `C(n, j) - C(n, j-1)`. For `k > n/2` the scheme is isomorphic to the one on
//! `(n-k)`-subsets (complementation preserves `δ`), and only
//! `min(k, n-k) + 1` classes are non-empty.

use nalgebra::DMatrix;
use num::{BigInt, One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{
    binomial_int, binomial_u128, distance_unchecked, enumerate_patterns, hypergeometric_terminating,
    multiplicity_int, rat, AnomalyPattern, Rational,
};
use crate::error::{Error, Result};

/// Default cap on the number of vertices `N = C(n, k)`.
pub const DEFAULT_SIZE_CAP: usize = 5000;

/// Number of non-trivial distance classes, `min(k, n-k)`.
pub fn class_count(n: u32, k: u32) -> u32 {
    k.min(n.saturating_sub(k))
}

fn check_nk(n: u32, k: u32) -> Result<()> {
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Number of k-subsets within the size cap, or a [`Error::SizeCap`].
pub(crate) fn capped_size(n: u32, k: u32, cap: usize) -> Result<usize> {
    check_nk(n, k)?;
    let size = binomial_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::SizeCap { what: "C(n, k)", requested: size, cap: cap as u128 });
    }
    Ok(size as usize)
}

/// Square 0/1 matrix stored as row bit-sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    size: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(size: usize) -> Self {
        let words = size.div_ceil(64);
        Self { size, words, bits: vec![0; size * words] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, r: usize, s: usize) -> bool {
        self.bits[r * self.words + s / 64] >> (s % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, s: usize) {
        self.bits[r * self.words + s / 64] |= 1 << (s % 64);
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words..(r + 1) * self.words]
    }

    pub fn row_sum(&self, r: usize) -> u64 {
        self.row(r).iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|r| (0..r).all(|s| self.get(r, s) == self.get(s, r)))
    }

    /// `Σ_u self[r][u] · other[u][s]` for symmetric `other`.
    fn product_entry(&self, other: &BitMatrix, r: usize, s: usize) -> u64 {
        self.row(r)
            .iter()
            .zip(other.row(s))
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size, self.size, |r, s| if self.get(r, s) { 1.0 } else { 0.0 })
    }
}

/// Distance-class adjacency matrices of the Johnson scheme in lexicographic
/// pattern order.
#[derive(Debug, Clone)]
pub struct SchemeBasis {
    n: u32,
    k: u32,
    patterns: Vec<AnomalyPattern>,
    distances: Vec<u8>,
    adjacency: Vec<BitMatrix>,
}

impl SchemeBasis {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        Self::with_cap(n, k, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(n: u32, k: u32, cap: usize) -> Result<Self> {
        let size = capped_size(n, k, cap)?;
        let patterns = enumerate_patterns(n, k)?;
        let classes = class_count(n, k) as usize;
        let mut adjacency = vec![BitMatrix::zeros(size); classes + 1];
        let mut distances = vec![0u8; size * size];
        for (r, pr) in patterns.iter().enumerate() {
            for (s, ps) in patterns.iter().enumerate() {
                let d = distance_unchecked(pr.positions(), ps.positions()) as usize;
                distances[r * size + s] = d as u8;
                adjacency[d].set(r, s);
            }
        }
        Ok(Self { n, k, patterns, distances, adjacency })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Number of vertices `N`.
    pub fn size(&self) -> usize {
        self.patterns.len()
    }

    /// Number of non-trivial classes; `adjacency()` has one more entry.
    pub fn classes(&self) -> usize {
        self.adjacency.len() - 1
    }

    pub fn patterns(&self) -> &[AnomalyPattern] {
        &self.patterns
    }

    pub fn adjacency(&self) -> &[BitMatrix] {
        &self.adjacency
    }

    /// `δ(r, s)` by vertex index.
    pub fn distance(&self, r: usize, s: usize) -> usize {
        self.distances[r * self.size() + s] as usize
    }

    /// `Σ_i coeffs[i] A_i` as a dense matrix.
    pub fn combine(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let size = self.size();
        DMatrix::from_fn(size, size, |r, s| coeffs.get(self.distance(r, s)).copied().unwrap_or(0.0))
    }
}

/// `A_i` for the Johnson scheme J(n, k); zero for `i > min(k, n-k)`.
pub fn adjacency_matrix(n: u32, k: u32, i: u32) -> Result<BitMatrix> {
    check_nk(n, k)?;
    if i > k {
        return Err(Error::InvalidParameter(format!("class {i} exceeds k = {k}")));
    }
    let basis = SchemeBasis::new(n, k)?;
    Ok(basis.adjacency.get(i as usize).cloned().unwrap_or_else(|| BitMatrix::zeros(basis.size())))
}

/// Valency `k_i = C(k, i) C(n-k, i)`.
pub fn valency(n: u32, k: u32, i: u32) -> BigInt {
    binomial_int(k as i64, i as i64) * binomial_int(n as i64 - k as i64, i as i64)
}

/// Multiplicity `m_j = C(n, j) - C(n, j-1)`.
pub fn multiplicity(n: u32, j: u32) -> BigInt {
    multiplicity_int(n as u64, j as u64)
}

/// Hahn polynomial `Q_j(x; α, β, N) = ₃F₂(-j, j+α+β+1, -x; α+1, -N; 1)`.
pub fn hahn(j: u32, x: u32, alpha: i64, beta: i64, big_n: i64) -> Result<Rational> {
    hypergeometric_terminating(
        &[rat(-(j as i64)), rat(j as i64 + alpha + beta + 1), rat(-(x as i64))],
        &[rat(alpha + 1), rat(-big_n)],
        &rat(1),
    )
}

/// Dual Hahn polynomial `R_i(λ(x); γ, δ, M) = ₃F₂(-i, -x, x+γ+δ+1; γ+1, -M; 1)`.
pub fn dual_hahn(i: u32, x: u32, gamma: i64, delta: i64, big_m: i64) -> Result<Rational> {
    hypergeometric_terminating(
        &[rat(-(i as i64)), rat(-(x as i64)), rat(x as i64 + gamma + delta + 1)],
        &[rat(gamma + 1), rat(-big_m)],
        &rat(1),
    )
}

fn check_degree(what: &str, deg: u32, x: u32, k: u32) -> Result<()> {
    if deg > k {
        return Err(Error::InvalidParameter(format!("{what} degree {deg} exceeds k = {k}")));
    }
    if x > k {
        return Err(Error::InvalidParameter(format!("{what} argument {x} exceeds k = {k}")));
    }
    Ok(())
}

/// Johnson-scheme Hahn polynomial `Q_j(x; -n+k-1, -k-1, k)`.
///
/// `p_i(j) = k_i Q_j(i)` and `q_j(i) = m_j Q_j(i)`; `Q_j(0) = 1`.
pub fn hahn_polynomial(j: u32, x: u32, n: u32, k: u32) -> Result<Rational> {
    check_nk(n, k)?;
    check_degree("Hahn", j, x, k)?;
    let (n, k) = (n as i64, k as i64);
    hahn(j, x, -n + k - 1, -k - 1, k)
}

/// Johnson-scheme dual Hahn polynomial `R_i(λ(x))`, with parameters
/// `(γ, δ, M) = (-n+k-1, -k-1, k)` so that `R_i(λ(j)) = Q_j(i)`.
pub fn dual_hahn_polynomial(i: u32, x: u32, n: u32, k: u32) -> Result<Rational> {
    check_nk(n, k)?;
    check_degree("dual Hahn", i, x, k)?;
    let (n, k) = (n as i64, k as i64);
    dual_hahn(i, x, -n + k - 1, -k - 1, k)
}

/// Eigenvalue of `A_i` on `E_j` through the polynomial expansion of `A_i` in
/// `A_1 + k`: `(-1)^i C(k, i) R_i(λ(k-j); 0, n-2k, k)`.
pub fn adjacency_eigenvalue_via_dual_hahn(i: u32, j: u32, n: u32, k: u32) -> Result<Rational> {
    check_nk(n, k)?;
    check_degree("dual Hahn", i, j, k)?;
    let (ni, ki) = (n as i64, k as i64);
    let r = dual_hahn(i, k - j, 0, ni - 2 * ki, ki)?;
    let sign = if i.is_multiple_of(2) { rat(1) } else { rat(-1) };
    Ok(sign * Rational::from_integer(binomial_int(ki, i as i64)) * r)
}

/// Eigenmatrices of the scheme, indexed over `0..=min(k, n-k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenmatrices {
    pub n: u32,
    pub k: u32,
    /// `p[j][i] = p_i(j)`, the eigenvalue of `A_i` on `E_j`.
    pub p: Vec<Vec<Rational>>,
    /// `q[i][j] = q_j(i)`, so `E_j = (1/N) Σ_i q_j(i) A_i`.
    pub q: Vec<Vec<Rational>>,
}

impl Eigenmatrices {
    pub fn classes(&self) -> usize {
        self.p.len() - 1
    }

    /// `C(n, k)` as a rational.
    pub fn size(&self) -> Rational {
        Rational::from_integer(binomial_int(self.n as i64, self.k as i64))
    }

    /// Valencies `k_i` (row 0 of `P`).
    pub fn valencies(&self) -> Vec<Rational> {
        self.p[0].clone()
    }

    /// Multiplicities `m_j` (row 0 of `Q`).
    pub fn multiplicities(&self) -> Vec<Rational> {
        self.q[0].clone()
    }

    /// `P · Q` computed exactly.
    pub fn product(&self) -> Vec<Vec<Rational>> {
        let d = self.p.len();
        (0..d)
            .map(|j| {
                (0..d)
                    .map(|l| (0..d).map(|i| &self.p[j][i] * &self.q[i][l]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Exact `P` and `Q`.
pub fn eigenmatrices(n: u32, k: u32) -> Result<Eigenmatrices> {
    check_nk(n, k)?;
    let kr = class_count(n, k);
    let d = kr as usize + 1;
    let mut p = vec![vec![Rational::zero(); d]; d];
    let mut q = vec![vec![Rational::zero(); d]; d];
    for j in 0..=kr {
        for i in 0..=kr {
            let hahn = hahn_polynomial(j, i, n, kr)?;
            p[j as usize][i as usize] = Rational::from_integer(valency(n, kr, i)) * &hahn;
            q[i as usize][j as usize] = Rational::from_integer(multiplicity(n, j)) * hahn;
        }
    }
    Ok(Eigenmatrices { n, k, p, q })
}

/// Structure constants `p_ij^l` with `A_i A_j = Σ_l p_ij^l A_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionNumbers {
    table: Vec<Vec<Vec<u64>>>,
}

impl IntersectionNumbers {
    pub fn get(&self, i: usize, j: usize, l: usize) -> u64 {
        self.table[i][j][l]
    }

    pub fn classes(&self) -> usize {
        self.table.len() - 1
    }
}

/// Multiplies every pair of adjacency matrices and decomposes the product back
/// into the basis, failing if any product leaves the span or the matrices do
/// not commute.
pub fn verify_bose_mesner_closure(basis: &SchemeBasis) -> Result<IntersectionNumbers> {
    let d = basis.classes() + 1;
    let size = basis.size();
    let adj = basis.adjacency();
    let mut table = vec![vec![vec![0u64; d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut seen: Vec<Option<u64>> = vec![None; d];
            for r in 0..size {
                for s in 0..size {
                    let ij = adj[i].product_entry(&adj[j], r, s);
                    let ji = adj[j].product_entry(&adj[i], r, s);
                    if ij != ji {
                        return Err(Error::ClosureFailure(format!(
                            "A_{i} A_{j} != A_{j} A_{i} at ({r}, {s})"
                        )));
                    }
                    let l = basis.distance(r, s);
                    match seen[l] {
                        None => seen[l] = Some(ij),
                        Some(v) if v != ij => {
                            return Err(Error::ClosureFailure(format!(
                                "A_{i} A_{j} not constant on class {l}: {v} vs {ij}"
                            )))
                        }
                        Some(_) => {}
                    }
                }
            }
            for l in 0..d {
                table[i][j][l] = seen[l].unwrap_or(0);
            }
        }
    }
    Ok(IntersectionNumbers { table })
}

/// An element `Σ_i c_i A_i` of the Bose-Mesner algebra with exact coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub coeffs: Vec<Rational>,
}

impl AlgebraElement {
    pub fn identity(classes: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); classes + 1];
        coeffs[0] = Rational::one();
        Self { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    /// Product through the intersection numbers.
    pub fn mul(&self, other: &Self, numbers: &IntersectionNumbers) -> Self {
        let d = self.coeffs.len();
        let mut out = vec![Rational::zero(); d];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                for (l, slot) in out.iter_mut().enumerate() {
                    let p = numbers.get(i, j, l);
                    if p != 0 {
                        *slot += &ab * Rational::from_integer(BigInt::from(p));
                    }
                }
            }
        }
        Self { coeffs: out }
    }

    /// Trace: only `A_0` has a non-zero diagonal.
    pub fn trace(&self, size: usize) -> Rational {
        &self.coeffs[0] * Rational::from_integer(BigInt::from(size))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Exact coefficients of `E_j = (1/N) Σ_i q_j(i) A_i`.
pub fn projector_element(eig: &Eigenmatrices, j: usize) -> AlgebraElement {
    let size = eig.size();
    AlgebraElement { coeffs: eig.q.iter().map(|row| &row[j] / &size).collect() }
}

/// Dense `E_j` for J(n, k).
pub fn scheme_projector(n: u32, k: u32, j: u32) -> Result<DMatrix<f64>> {
    let eig = eigenmatrices(n, k)?;
    if j as usize > eig.classes() {
        return Err(Error::InvalidParameter(format!(
            "projector index {j} exceeds {}",
            eig.classes()
        )));
    }
    let basis = SchemeBasis::new(n, k)?;
    Ok(basis.combine(&projector_element(&eig, j as usize).to_f64()))
}

/// Returns true when every value is a non-negative integer.
pub fn all_nonnegative_integers(values: &[Rational]) -> bool {
    values.iter().all(|v| v.is_integer() && !v.is_negative())
}
