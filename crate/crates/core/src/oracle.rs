//! Brute-force reference computations on explicit states.
//!
//! Everything here materializes vectors or matrices of dimension `d^n` and is
//! meant for small instances, as an independent check on the closed forms.

use nalgebra::DMatrix;
use num::ToPrimitive;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::combinatorics::{binomial_u128, enumerate_patterns, AnomalyPattern};
use crate::error::{Error, Result};
use crate::gram::ProblemInstance;
use crate::linalg::{
    hermitian_eigenvalues, hermitian_function, symmetric_eigen, symmetric_eigenvalues,
    roundoff_floor, C64, PSD_CLAMP,
};
use crate::universal::{symmetric_dimension, UniversalInstance};

/// Largest `n` for which qubit hypothesis states are built.
pub const MAX_STATE_QUBITS: u32 = 14;
/// Cap on `N² · 2^n` when forming overlaps and measurement vectors.
pub const MAX_OVERLAP_WORK: u128 = 2_000_000_000;
/// Cap on `d^m` for symmetric projectors.
pub const MAX_PROJECTOR_DIM: u128 = 4096;
/// Cap on `d^n` for the universal oracle, which diagonalizes `d^n × d^n`.
pub const MAX_UNIVERSAL_DIM: u128 = 1024;
/// Eigenvalues of `ρ/N` above this are in the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
/// Eigenvalues of `ρ/N` between this and `SUPPORT_THRESHOLD` are ambiguous.
pub const SUPPORT_FLOOR: f64 = 1e-12;
/// Holevo conditions are accepted down to this eigenvalue.
pub const HOLEVO_TOLERANCE: f64 = 1e-9;

const NORM_TOLERANCE: f64 = 1e-10;
const SAMPLE_CHUNK: u64 = 1 << 16;

/// Unit vector in `C^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidState(format!(
                "dimension mismatch {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let eigenvalues = hermitian_eigenvalues(&matrix)?;
        let trace: C64 = matrix.trace();
        if (trace.re - 1.0).abs() > NORM_TOLERANCE || trace.im.abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        if let Some(&lo) = eigenvalues.last() {
            if lo < -PSD_CLAMP {
                return Err(Error::NegativeEigenvalue(lo));
            }
        }
        Ok(Self { matrix })
    }

    pub fn pure(state: &StateVector) -> Self {
        let a = state.amplitudes();
        let d = a.len();
        Self { matrix: DMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj()) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// Positive operators summing to the identity.
#[derive(Debug, Clone)]
pub struct Povm {
    elements: Vec<DMatrix<C64>>,
}

impl Povm {
    pub fn new(elements: Vec<DMatrix<C64>>, tolerance: f64) -> Result<Self> {
        let d = elements
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| Error::InvalidState("empty POVM".into()))?;
        let mut total = DMatrix::<C64>::zeros(d, d);
        for e in &elements {
            if let Some(&lo) = hermitian_eigenvalues(e)?.last() {
                if lo < -tolerance {
                    return Err(Error::NegativeEigenvalue(lo));
                }
            }
            total += e;
        }
        let residual = (total - DMatrix::<C64>::identity(d, d)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if residual > tolerance {
            return Err(Error::InvalidState(format!("POVM elements sum to identity only within {residual:e}")));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[DMatrix<C64>] {
        &self.elements
    }

    /// Outcome probabilities `Tr(E_i ρ)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements.iter().map(|e| (e * rho.matrix()).trace().re).collect()
    }
}

fn check_state_instance(instance: &ProblemInstance) -> Result<()> {
    if instance.n > MAX_STATE_QUBITS {
        return Err(Error::SizeCap {
            what: "qubits in explicit states",
            requested: instance.n as u128,
            cap: MAX_STATE_QUBITS as u128,
        });
    }
    Ok(())
}

/// `|Ψ_r⟩ = ⊗_i φ_{r_i}` with `φ0 = |0⟩`, `φ1 = c|0⟩ + √(1-c²)|1⟩`.
/// Position 1 is the most significant qubit.
pub fn hypothesis_state(instance: &ProblemInstance, pattern: &AnomalyPattern) -> Result<StateVector> {
    check_state_instance(instance)?;
    if pattern.n() != instance.n || pattern.k() != instance.k {
        return Err(Error::PatternMismatch(format!(
            "pattern {pattern} does not belong to n = {}, k = {}",
            instance.n, instance.k
        )));
    }
    let c = instance.c_squared().sqrt();
    let s = (1.0 - instance.c_squared()).max(0.0).sqrt();
    let mut amps = vec![C64::new(1.0, 0.0)];
    for position in 1..=instance.n {
        let local = if pattern.contains(position) { [c, s] } else { [1.0, 0.0] };
        amps = amps
            .iter()
            .flat_map(|a| local.iter().map(move |l| a * *l))
            .collect();
    }
    StateVector::new(amps)
}

/// All hypothesis states in lexicographic pattern order.
pub fn hypothesis_states(instance: &ProblemInstance) -> Result<Vec<StateVector>> {
    check_state_instance(instance)?;
    enumerate_patterns(instance.n, instance.k)?
        .iter()
        .map(|p| hypothesis_state(instance, p))
        .collect()
}

fn check_overlap_work(count: usize, dim: usize) -> Result<()> {
    let work = (count as u128) * (count as u128) * (dim as u128);
    if work > MAX_OVERLAP_WORK {
        return Err(Error::SizeCap { what: "overlap work N^2 D", requested: work, cap: MAX_OVERLAP_WORK });
    }
    Ok(())
}

/// `G_rs = ⟨Ψ_r|Ψ_s⟩`.
pub fn gram_from_states(states: &[StateVector]) -> Result<DMatrix<C64>> {
    let count = states.len();
    let dim = states.first().map_or(0, |s| s.dim());
    if states.iter().any(|s| s.dim() != dim) {
        return Err(Error::InvalidState("states have different dimensions".into()));
    }
    check_overlap_work(count, dim)?;
    let rows: Vec<Vec<C64>> = states
        .par_iter()
        .map(|a| states.iter().map(|b| inner(a.amplitudes(), b.amplitudes())).collect())
        .collect();
    Ok(DMatrix::from_fn(count, count, |r, s| rows[r][s]))
}

/// Square-root measurement evaluated on explicit states.
#[derive(Debug, Clone)]
pub struct SrmOracle {
    /// `(1/N) Σ_r |(G^{1/2})_rr|²`.
    pub success: f64,
    /// `|(G^{1/2})_rr|²` per hypothesis.
    pub conditional: Vec<f64>,
    pub sqrt_gram: DMatrix<C64>,
    /// Gram eigenvalues in `[-1e-10, 0)` that were clamped to zero.
    pub clamped: usize,
    /// Measurement vectors `m_r = Σ_s (G^{-1/2})_sr Ψ_s`.
    pub measurement_vectors: Vec<Vec<C64>>,
    /// `‖M†M - Π_G‖_F`, with `Π_G` the projector onto the support of `G`.
    pub completeness_residual: f64,
    /// `(1/N) Σ_r |⟨m_r|Ψ_r⟩|²`, computed from the vectors.
    pub vector_success: f64,
}

impl SrmOracle {
    /// `P(s | r) = |(G^{1/2})_sr|²` for `s` in pattern order, then the
    /// inconclusive remainder.
    pub fn outcome_distribution(&self, true_index: usize) -> Result<Vec<f64>> {
        let count = self.sqrt_gram.nrows();
        if true_index >= count {
            return Err(Error::InvalidParameter(format!("hypothesis {true_index} out of range")));
        }
        let mut probs: Vec<f64> = (0..count).map(|s| self.sqrt_gram[(s, true_index)].norm_sqr()).collect();
        let rest = 1.0 - probs.iter().sum::<f64>();
        probs.push(rest.max(0.0));
        Ok(probs)
    }

    /// Joint distribution of (true hypothesis, outcome) under a uniform prior,
    /// flattened row-major with `N + 1` outcomes per hypothesis.
    pub fn joint_distribution(&self) -> Result<Vec<f64>> {
        let count = self.sqrt_gram.nrows();
        let mut joint = Vec::with_capacity(count * (count + 1));
        for r in 0..count {
            joint.extend(self.outcome_distribution(r)?.into_iter().map(|p| p / count as f64));
        }
        Ok(joint)
    }

    /// Dense POVM `{|m_r⟩⟨m_r|} ∪ {1 - Σ_r |m_r⟩⟨m_r|}`.
    pub fn dense_povm(&self) -> Result<Povm> {
        let dim = self.measurement_vectors.first().map_or(0, Vec::len);
        if dim as u128 > MAX_PROJECTOR_DIM {
            return Err(Error::SizeCap { what: "POVM dimension", requested: dim as u128, cap: MAX_PROJECTOR_DIM });
        }
        let mut elements: Vec<DMatrix<C64>> = self
            .measurement_vectors
            .iter()
            .map(|m| DMatrix::from_fn(dim, dim, |i, j| m[i] * m[j].conj()))
            .collect();
        let mut rest = DMatrix::<C64>::identity(dim, dim);
        for e in &elements {
            rest -= e;
        }
        elements.push(rest);
        Povm::new(elements, 1e-8)
    }
}

/// Square-root measurement on the given states.
pub fn srm_success_oracle(states: &[StateVector]) -> Result<SrmOracle> {
    let gram = gram_from_states(states)?;
    let count = gram.nrows();
    if count == 0 {
        return Err(Error::InvalidState("no hypotheses".into()));
    }
    let eigenvalues = hermitian_eigenvalues(&gram)?;
    let floor = roundoff_floor(&eigenvalues);
    let (sqrt_gram, _) = hermitian_function(&gram, |x| if x > floor { x.sqrt() } else { 0.0 })?;
    if let Some(&lo) = eigenvalues.last() {
        if lo < -PSD_CLAMP {
            return Err(Error::NegativeEigenvalue(lo));
        }
    }
    let clamped = eigenvalues.iter().filter(|&&x| x < 0.0).count();
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(1.0);
    let cutoff = PSD_CLAMP * top;
    let (inv_sqrt, _) = hermitian_function(&gram, |x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 })?;
    let (support, _) = hermitian_function(&gram, |x| if x > cutoff { 1.0 } else { 0.0 })?;

    let conditional: Vec<f64> = (0..count).map(|r| sqrt_gram[(r, r)].norm_sqr()).collect();
    let success = conditional.iter().sum::<f64>() / count as f64;

    let dim = states[0].dim();
    let measurement_vectors: Vec<Vec<C64>> = (0..count)
        .into_par_iter()
        .map(|r| {
            let mut m = vec![C64::new(0.0, 0.0); dim];
            for (s, state) in states.iter().enumerate() {
                let coeff = inv_sqrt[(s, r)];
                for (mi, a) in m.iter_mut().zip(state.amplitudes()) {
                    *mi += coeff * a;
                }
            }
            m
        })
        .collect();
    let overlaps = DMatrix::from_fn(count, count, |r, s| inner(&measurement_vectors[r], &measurement_vectors[s]));
    let completeness_residual = (overlaps - support).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let vector_success = measurement_vectors
        .iter()
        .zip(states)
        .map(|(m, psi)| inner(m, psi.amplitudes()).norm_sqr())
        .sum::<f64>()
        / count as f64;

    Ok(SrmOracle {
        success,
        conditional,
        sqrt_gram,
        clamped,
        measurement_vectors,
        completeness_residual,
        vector_success,
    })
}

/// Convenience wrapper: build the qubit states and run the square-root measurement.
pub fn srm_oracle_for(instance: &ProblemInstance) -> Result<SrmOracle> {
    srm_success_oracle(&hypothesis_states(instance)?)
}

fn pow_checked(d: u32, m: u32, what: &'static str, cap: u128) -> Result<usize> {
    let dim = (d as u128).checked_pow(m).unwrap_or(u128::MAX);
    if dim > cap {
        return Err(Error::SizeCap { what, requested: dim, cap });
    }
    Ok(dim as usize)
}

fn digits(mut index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut out = vec![0; m];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn type_of(index: usize, d: usize, m: usize) -> Vec<usize> {
    let mut counts = vec![0; d];
    for digit in digits(index, d, m) {
        counts[digit] += 1;
    }
    counts
}

/// Projector onto the symmetric subspace of `(C^d)^{⊗m}`.
///
/// Averaging a basis vector over all permutations spreads it uniformly over
/// its orbit, so `P_xy = 1/|orbit(x)|` when `x` and `y` carry the same digit
/// multiset and zero otherwise. For `m = 0` this is the 1×1 identity.
pub fn symmetric_projector(m: u32, d: u32) -> Result<DMatrix<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("local dimension must be positive".into()));
    }
    let dim = pow_checked(d, m, "symmetric projector dimension", MAX_PROJECTOR_DIM)?;
    let (du, mu) = (d as usize, m as usize);
    let types: Vec<Vec<usize>> = (0..dim).map(|x| type_of(x, du, mu)).collect();
    let mut orbit_size = std::collections::HashMap::new();
    for t in &types {
        *orbit_size.entry(t.clone()).or_insert(0usize) += 1;
    }
    Ok(DMatrix::from_fn(dim, dim, |x, y| {
        if types[x] == types[y] {
            1.0 / orbit_size[&types[x]] as f64
        } else {
            0.0
        }
    }))
}

/// `ρ_σ = c_k P_sym(σ) ⊗ P_sym(σ̄)` on `(C^d)^{⊗n}`, with
/// `c_k = 1/(C(k+d-1, d-1) C(n-k+d-1, d-1))`.
pub fn universal_hypothesis(pattern: &AnomalyPattern, d: u32) -> Result<DMatrix<f64>> {
    let (n, k) = (pattern.n(), pattern.k());
    let dim = pow_checked(d, n, "universal state dimension", MAX_PROJECTOR_DIM)?;
    let inside = symmetric_projector(k, d)?;
    let outside = symmetric_projector(n - k, d)?;
    let ck = 1.0
        / (symmetric_dimension(k, d) * symmetric_dimension(n - k, d))
            .to_f64()
            .unwrap_or(f64::INFINITY);
    let du = d as usize;
    // split each basis index into (anomalous digits, reference digits)
    let split: Vec<(usize, usize)> = (0..dim)
        .map(|x| {
            let (mut a, mut b) = (0usize, 0usize);
            for (pos, digit) in digits(x, du, n as usize).into_iter().enumerate() {
                if pattern.contains(pos as u32 + 1) {
                    a = a * du + digit;
                } else {
                    b = b * du + digit;
                }
            }
            (a, b)
        })
        .collect();
    Ok(DMatrix::from_fn(dim, dim, |x, y| {
        let (xa, xb) = split[x];
        let (ya, yb) = split[y];
        ck * inside[(xa, ya)] * outside[(xb, yb)]
    }))
}

/// Worst `λ_min(Y - H_σ)` over the weighted hypotheses `H_σ`, after
/// symmetrizing `Y`. Optimality requires it to be non-negative.
pub fn holevo_check(y: &DMatrix<f64>, weighted_hypotheses: &[DMatrix<f64>]) -> Result<f64> {
    let sym = (y + y.transpose()) * 0.5;
    let mut worst = f64::INFINITY;
    for h in weighted_hypotheses {
        let lo = symmetric_eigenvalues(&(&sym - h))?.last().copied().unwrap_or(f64::INFINITY);
        worst = worst.min(lo);
    }
    Ok(worst)
}

/// Pretty-good measurement on the universal hypotheses.
#[derive(Debug, Clone)]
pub struct UniversalOracle {
    pub success: f64,
    /// Eigenvalues of `ρ = Σ_σ ρ_σ`, descending.
    pub rho_eigenvalues: Vec<f64>,
    pub support_rank: usize,
    /// Worst Holevo eigenvalue `λ_min(Y - ρ_σ/N)`.
    pub holevo_min_eigenvalue: f64,
}

impl UniversalOracle {
    pub fn holevo_satisfied(&self) -> bool {
        self.holevo_min_eigenvalue >= -HOLEVO_TOLERANCE
    }
}

/// Builds all `ρ_σ`, measures with `Π_σ = R ρ_σ R`, `R = ρ^{-1/2}` on the
/// support of `ρ`, and checks the Holevo conditions of `Y = Σ_σ ρ_σ Π_σ / N`.
pub fn universal_success_oracle(instance: &UniversalInstance) -> Result<UniversalOracle> {
    let UniversalInstance { n, k, d } = *instance;
    let dim = pow_checked(d, n, "universal oracle dimension", MAX_UNIVERSAL_DIM)?;
    let count = binomial_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    let hypotheses: Vec<DMatrix<f64>> = enumerate_patterns(n, k)?
        .par_iter()
        .map(|p| universal_hypothesis(p, d))
        .collect::<Result<_>>()?;
    let size = count as f64;
    let mut rho = DMatrix::<f64>::zeros(dim, dim);
    for h in &hypotheses {
        rho += h;
    }
    let eig = symmetric_eigen(&rho)?;
    for &lam in &eig.eigenvalues {
        let scaled = lam / size;
        if scaled > SUPPORT_FLOOR && scaled <= SUPPORT_THRESHOLD {
            return Err(Error::SupportAmbiguity(scaled));
        }
    }
    let support_rank = eig.eigenvalues.iter().filter(|&&l| l / size > SUPPORT_THRESHOLD).count();
    let r = eig.map(|l| if l / size > SUPPORT_THRESHOLD { 1.0 / l.sqrt() } else { 0.0 });

    let products: Vec<DMatrix<f64>> = hypotheses
        .par_iter()
        .map(|h| {
            let pi = &r * h * &r;
            h * pi / size
        })
        .collect();
    let mut y = DMatrix::<f64>::zeros(dim, dim);
    for p in &products {
        y += p;
    }
    let success = y.trace();
    let weighted: Vec<DMatrix<f64>> = hypotheses.iter().map(|h| h / size).collect();
    let holevo_min_eigenvalue = holevo_check(&y, &weighted)?;

    Ok(UniversalOracle {
        success,
        rho_eigenvalues: eig.eigenvalues,
        support_rank,
        holevo_min_eigenvalue,
    })
}

fn validate_distribution(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("no outcomes".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < -1e-12) {
        return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    Ok(probs.iter().map(|p| p.max(0.0)).collect())
}

/// Draws `shots` outcomes and returns per-outcome counts. Shots are split
/// into fixed chunks, each with its own ChaCha8 stream derived from `seed`,
/// so the counts do not depend on the thread count.
pub fn sample_measurement(probs: &[f64], seed: u64, shots: u64) -> Result<Vec<u64>> {
    let weights = validate_distribution(probs)?;
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let chunks = shots.div_ceil(SAMPLE_CHUNK);
    let outcomes = weights.len();
    let counts = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let this = SAMPLE_CHUNK.min(shots - chunk * SAMPLE_CHUNK);
            let mut local = vec![0u64; outcomes];
            for _ in 0..this {
                local[dist.sample(&mut rng)] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; outcomes],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::gram_matrix;
    use crate::protocols::min_error_success;
    use crate::universal::{average_state_blocks, universal_success};
    use num::ToPrimitive;

    fn inst(n: u32, k: u32, c: f64) -> ProblemInstance {
        ProblemInstance::new(n, k, c).unwrap()
    }

    #[test]
    fn state_and_density_validation() {
        assert!(StateVector::new(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).is_err());
        let plus = StateVector::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let rho = DensityMatrix::pure(&plus);
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        assert!(DensityMatrix::new(rho.matrix() * C64::new(2.0, 0.0)).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::NegativeEigenvalue(_))));
        assert!(plus.inner(&StateVector::new(vec![C64::new(1.0, 0.0)]).unwrap()).is_err());
    }

    #[test]
    fn hypothesis_state_layout() {
        let i = inst(3, 1, 0.6);
        let p = AnomalyPattern::new(3, [2]).unwrap();
        let psi = hypothesis_state(&i, &p).unwrap();
        // |0⟩ ⊗ (0.6|0⟩ + 0.8|1⟩) ⊗ |0⟩
        let a = psi.amplitudes();
        assert!((a[0].re - 0.6).abs() < 1e-15);
        assert!((a[2].re - 0.8).abs() < 1e-15);
        assert_eq!(a.iter().filter(|z| z.norm() > 0.0).count(), 2);
        assert!(hypothesis_state(&i, &AnomalyPattern::new(4, [2]).unwrap()).is_err());
        assert!(hypothesis_state(&inst(15, 1, 0.5), &AnomalyPattern::new(15, [1]).unwrap()).is_err());
    }

    #[test]
    fn explicit_states_reproduce_the_gram_matrix() {
        for n in 1..=10u32 {
            for k in 0..=n.min(4) {
                for &c in &[0.0, 0.3, 0.77, 1.0] {
                    let i = inst(n, k, c);
                    let g = gram_from_states(&hypothesis_states(&i).unwrap()).unwrap();
                    let want = gram_matrix(&i).unwrap();
                    let diff = g.iter().zip(want.iter()).map(|(a, b)| (a - C64::new(*b, 0.0)).norm()).fold(0.0, f64::max);
                    assert!(diff < 1e-12, "n={n} k={k} c={c}: {diff}");
                }
            }
        }
    }

    #[test]
    fn srm_matches_closed_form() {
        for (n, k) in [(3, 1), (4, 2), (5, 2), (6, 3), (7, 2), (8, 3)] {
            for &c in &[0.1, 0.5, 0.9] {
                let i = inst(n, k, c);
                let o = srm_oracle_for(&i).unwrap();
                let want = min_error_success(&i).unwrap().value;
                assert!((o.success - want).abs() < 1e-10, "n={n} k={k} c={c}");
                assert!((o.vector_success - want).abs() < 1e-10);
                assert!(o.completeness_residual < 1e-9);
                // uniform conditional success for a symmetric ensemble
                assert!(o.conditional.iter().all(|p| (p - want).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn srm_two_qubits_one_anomaly() {
        for &c in &[0.0, 0.2, 0.5, 0.8, 1.0] {
            let o = srm_oracle_for(&inst(2, 1, c)).unwrap();
            let c4: f64 = c * c * c * c;
            assert!((o.success - 0.5 * (1.0 + (1.0 - c4).sqrt())).abs() < 1e-12);
        }
    }

    #[test]
    fn srm_povm_is_complete() {
        let o = srm_oracle_for(&inst(4, 2, 0.5)).unwrap();
        let povm = o.dense_povm().unwrap();
        assert_eq!(povm.elements().len(), 7);
        let psi = hypothesis_state(&inst(4, 2, 0.5), &AnomalyPattern::new(4, [1, 3]).unwrap()).unwrap();
        let probs = povm.probabilities(&DensityMatrix::pure(&psi));
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((probs[1] - o.conditional[1]).abs() < 1e-10);
    }

    #[test]
    fn srm_handles_identical_states() {
        let o = srm_oracle_for(&inst(4, 2, 1.0)).unwrap();
        assert!((o.success - 1.0 / 6.0).abs() < 1e-12);
        assert!(o.completeness_residual < 1e-9);
    }

    fn brute_symmetrizer(m: usize, d: usize) -> DMatrix<f64> {
        fn perms(m: usize) -> Vec<Vec<usize>> {
            if m == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(m - 1) {
                for slot in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(slot, m - 1);
                    out.push(q);
                }
            }
            out
        }
        let dim = d.pow(m as u32);
        let all = perms(m);
        let mut acc = DMatrix::<f64>::zeros(dim, dim);
        for p in &all {
            for x in 0..dim {
                let dx = digits(x, d, m);
                let y = p.iter().fold(0, |acc, &src| acc * d + dx[src]);
                acc[(y, x)] += 1.0;
            }
        }
        acc / all.len() as f64
    }

    #[test]
    fn symmetric_projector_matches_permutation_average() {
        for (m, d) in [(0, 2), (1, 3), (2, 2), (3, 2), (3, 3), (4, 2), (5, 2)] {
            let p = symmetric_projector(m, d).unwrap();
            let brute = brute_symmetrizer(m as usize, d as usize);
            assert!((&p - &brute).abs().max() < 1e-14, "m={m} d={d}");
            assert!((&p * &p - &p).abs().max() < 1e-13);
            let rank = symmetric_dimension(m, d).to_f64().unwrap();
            assert!((p.trace() - rank).abs() < 1e-12);
        }
        assert!(symmetric_projector(13, 2).is_err());
    }

    #[test]
    fn universal_hypotheses_are_states() {
        let p = AnomalyPattern::new(4, [2, 4]).unwrap();
        let rho = universal_hypothesis(&p, 2).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(symmetric_eigenvalues(&rho).unwrap().last().unwrap() > &-1e-12);
    }

    #[test]
    fn universal_oracle_matches_closed_form() {
        for (n, k, d) in [(2, 1, 2), (3, 1, 2), (4, 1, 2), (4, 2, 2), (5, 2, 2), (6, 2, 2), (6, 3, 2), (3, 1, 3), (4, 2, 3)] {
            let ui = UniversalInstance::new(n, k, d).unwrap();
            let o = universal_success_oracle(&ui).unwrap();
            let want = universal_success(&ui).unwrap();
            assert!((o.success - want).abs() < 1e-10, "n={n} k={k} d={d}: {} vs {want}", o.success);
            assert!(o.holevo_satisfied(), "{}", o.holevo_min_eigenvalue);

            let mut expected: Vec<f64> = Vec::new();
            for (w, b) in average_state_blocks(&ui).unwrap() {
                expected.extend(std::iter::repeat_n(crate::combinatorics::to_f64(&w), b as usize));
            }
            let dim = o.rho_eigenvalues.len();
            expected.resize(dim, 0.0);
            expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (a, b) in o.rho_eigenvalues.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sampler_is_deterministic_and_validates() {
        let probs = [0.2, 0.3, 0.5];
        let a = sample_measurement(&probs, 7, 200_000).unwrap();
        assert_eq!(a, sample_measurement(&probs, 7, 200_000).unwrap());
        assert_ne!(a, sample_measurement(&probs, 8, 200_000).unwrap());
        assert_eq!(a.iter().sum::<u64>(), 200_000);
        assert!(sample_measurement(&[0.5, 0.6], 1, 10).is_err());
        assert!(sample_measurement(&[1.5, -0.5], 1, 10).is_err());
        assert!(sample_measurement(&[], 1, 10).is_err());
        assert_eq!(sample_measurement(&[1.0], 1, 0).unwrap(), vec![0]);
    }

    #[test]
    fn sampled_srm_success_rate() {
        let i = inst(4, 2, 0.5);
        let o = srm_oracle_for(&i).unwrap();
        let shots = 1_000_000u64;
        let counts = sample_measurement(&o.joint_distribution().unwrap(), 42, shots).unwrap();
        let outcomes = 7;
        let hits: u64 = (0..6).map(|r| counts[r * outcomes + r]).sum();
        let p = 0.947_662_716_996;
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((hits as f64 / shots as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn sampled_uniform_counts() {
        let outcomes = 10;
        let shots = 1_000_000u64;
        let counts = sample_measurement(&vec![0.1; outcomes], 2024, shots).unwrap();
        let mean = shots as f64 / outcomes as f64;
        let sigma = (shots as f64 * 0.1 * 0.9).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - mean).abs() < 5.0 * sigma), "{counts:?}");
    }
}
