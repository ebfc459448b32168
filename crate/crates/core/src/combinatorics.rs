//! Exact integer and rational primitives.
//!
//! Binomials, k-subsets of `{1..n}` (the anomaly patterns) with lexicographic
//! rank/unrank, the subset distance, rising Pochhammer symbols and terminating
//! hypergeometric series evaluated over arbitrary-precision rationals.

use std::fmt;

use num::{BigInt, BigRational, BigUint, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Hard limit on how many patterns [`enumerate_patterns`] will materialize.
pub const MAX_ENUMERATED_PATTERNS: u128 = 10_000_000;

/// Exact binomial coefficient `C(n, r)`, zero when `r < 0` or `r > n`.
pub fn binomial(n: i64, r: i64) -> Result<BigUint> {
    if n < 0 {
        return Err(Error::InvalidParameter(format!("binomial with negative n = {n}")));
    }
    if r < 0 || r > n {
        return Ok(BigUint::zero());
    }
    let r = r.min(n - r) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    Ok(acc)
}

/// `C(n, r)` as a signed big integer; out-of-range `r` and negative `n` give 0.
pub(crate) fn binomial_int(n: i64, r: i64) -> BigInt {
    binomial(n, r).map(BigInt::from).unwrap_or_default()
}

/// `C(n, r)` in `u128`, `None` on overflow.
pub fn binomial_u128(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r as u128 {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = acc.checked_mul(n as u128 - i)? / (i + 1);
    }
    Some(acc)
}

/// `C(n, r)` as `f64`, zero outside `0 <= r <= n`.
pub(crate) fn binomial_f64(n: i64, r: i64) -> f64 {
    if n < 0 || r < 0 || r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Multiplicity `C(n, j) - C(n, j-1)`.
pub(crate) fn multiplicity_int(n: u64, j: u64) -> BigInt {
    binomial_int(n as i64, j as i64) - binomial_int(n as i64, j as i64 - 1)
}

/// A k-subset of `{1..n}` marking the anomaly positions of one hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnomalyPattern {
    n: u32,
    positions: Vec<u32>,
}

impl AnomalyPattern {
    /// Builds a pattern from arbitrary-order positions in `[1, n]`.
    pub fn new(n: u32, positions: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut positions: Vec<u32> = positions.into_iter().collect();
        positions.sort_unstable();
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("repeated anomaly position".into()));
        }
        if let Some(&p) = positions.iter().find(|&&p| p == 0 || p > n) {
            return Err(Error::InvalidParameter(format!("position {p} outside [1, {n}]")));
        }
        Ok(Self { n, positions })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.positions.len() as u32
    }

    /// Sorted, 1-based positions.
    pub fn positions(&self) -> &[u32] {
        &self.positions
    }

    pub fn contains(&self, position: u32) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    /// Indicator string of length n (`true` at anomaly positions).
    pub fn indicator(&self) -> Vec<bool> {
        let mut bits = vec![false; self.n as usize];
        for &p in &self.positions {
            bits[p as usize - 1] = true;
        }
        bits
    }

    /// Position of this pattern in the lexicographic order of all k-subsets.
    pub fn rank(&self) -> u128 {
        let n = self.n as u64;
        let k = self.positions.len() as u64;
        let mut rank = 0u128;
        let mut prev = 0u64;
        for (i, &p) in self.positions.iter().enumerate() {
            for v in prev + 1..p as u64 {
                rank += binomial_u128(n - v, k - i as u64 - 1).unwrap_or(u128::MAX);
            }
            prev = p as u64;
        }
        rank
    }

    /// Inverse of [`AnomalyPattern::rank`].
    pub fn unrank(n: u32, k: u32, mut rank: u128) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
        }
        let total = binomial_u128(n as u64, k as u64)
            .ok_or_else(|| Error::InvalidParameter("C(n, k) overflows u128".into()))?;
        if rank >= total {
            return Err(Error::InvalidParameter(format!("rank {rank} >= C({n}, {k}) = {total}")));
        }
        let mut positions = Vec::with_capacity(k as usize);
        let mut v = 1u64;
        for i in 0..k as u64 {
            loop {
                let block = binomial_u128(n as u64 - v, k as u64 - i - 1).unwrap_or(u128::MAX);
                if rank < block {
                    break;
                }
                rank -= block;
                v += 1;
            }
            positions.push(v as u32);
            v += 1;
        }
        Ok(Self { n, positions })
    }
}

impl fmt::Display for AnomalyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.positions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

/// All k-subsets of `{1..n}` in lexicographic order.
pub fn enumerate_patterns(n: u32, k: u32) -> Result<Vec<AnomalyPattern>> {
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    let total = binomial_u128(n as u64, k as u64).unwrap_or(u128::MAX);
    if total > MAX_ENUMERATED_PATTERNS {
        return Err(Error::SizeCap {
            what: "pattern enumeration",
            requested: total,
            cap: MAX_ENUMERATED_PATTERNS,
        });
    }
    let k = k as usize;
    let mut out = Vec::with_capacity(total as usize);
    let mut current: Vec<u32> = (1..=k as u32).collect();
    loop {
        out.push(AnomalyPattern { n, positions: current.clone() });
        // advance to the next combination in lexicographic order
        let mut i = k;
        while i > 0 && current[i - 1] == n - (k - i) as u32 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        current[i - 1] += 1;
        for j in i..k {
            current[j] = current[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Subset distance `k - |r ∩ s|`.
pub fn pattern_distance(r: &AnomalyPattern, s: &AnomalyPattern) -> Result<u32> {
    if r.k() != s.k() || r.n() != s.n() {
        return Err(Error::PatternMismatch(format!(
            "patterns {r} (n={}) and {s} (n={}) differ in ground set or cardinality",
            r.n(),
            s.n()
        )));
    }
    Ok(distance_unchecked(r.positions(), s.positions()))
}

/// Distance between two sorted equal-length position lists.
pub(crate) fn distance_unchecked(r: &[u32], s: &[u32]) -> u32 {
    let (mut i, mut j, mut common) = (0, 0, 0u32);
    while i < r.len() && j < s.len() {
        match r[i].cmp(&s[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    r.len() as u32 - common
}

/// Rising Pochhammer symbol `(a)_m = a (a+1) ... (a+m-1)`, with `(a)_0 = 1`.
pub fn pochhammer_rising(a: &Rational, m: u32) -> Rational {
    let mut acc = Rational::one();
    let mut factor = a.clone();
    for _ in 0..m {
        acc *= &factor;
        factor += Rational::one();
    }
    acc
}

/// Returns `Some(M)` when `a = -M` for a non-negative integer `M`.
fn non_positive_integer(a: &Rational) -> Option<u64> {
    if a.is_integer() && !a.is_positive() {
        (-a.to_integer()).to_u64()
    } else {
        None
    }
}

/// Exact value of a terminating generalized hypergeometric series
/// `pFq(a_1..a_p; b_1..b_q; z) = Σ_m Π(a_i)_m / Π(b_j)_m · z^m / m!`.
///
/// The sum stops at the smallest `M` for which some numerator equals `-M`.
pub fn hypergeometric_terminating(
    numerators: &[Rational],
    denominators: &[Rational],
    z: &Rational,
) -> Result<Rational> {
    let last = numerators
        .iter()
        .filter_map(non_positive_integer)
        .min()
        .ok_or(Error::NonTerminating)?;
    // (b)_m for m <= last involves factors b, b+1, ..., b+last-1
    for b in denominators {
        if let Some(zero_at) = non_positive_integer(b) {
            if zero_at < last {
                return Err(Error::ZeroDenominator(b.to_string()));
            }
        }
    }

    let mut sum = Rational::one();
    let mut term = Rational::one();
    for m in 0..last {
        let step = Rational::from_integer(BigInt::from(m));
        let mut ratio = z.clone() / Rational::from_integer(BigInt::from(m + 1));
        for a in numerators {
            ratio *= a + &step;
        }
        for b in denominators {
            ratio /= b + &step;
        }
        term *= ratio;
        sum += &term;
    }
    Ok(sum)
}

/// Shorthand for an integer-valued rational.
pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Shorthand for `num / den`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Lossy conversion at output boundaries.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
