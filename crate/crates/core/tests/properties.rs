use nalgebra::DMatrix;
use num::{BigInt, ToPrimitive};
use proptest::prelude::*;

use qanomaly::combinatorics::{
    binomial, hypergeometric_terminating, pattern_distance, rat, to_f64, AnomalyPattern, Rational,
};
use qanomaly::gram::{closed_form_spectrum, closed_form_spectrum_exact, gram_matrix, matrix_sqrt, ProblemInstance};
use qanomaly::johnson::{adjacency_matrix, class_count, eigenmatrices, scheme_projector};
use qanomaly::linalg::{frobenius, symmetric_eigenvalues};
use qanomaly::oracle::{gram_from_states, hypothesis_states, sample_measurement};
use qanomaly::protocols::{min_error_success, unambiguous_success};
use qanomaly::universal::{universal_terms, UniversalInstance};

fn nk(max_n: u32, max_k: u32) -> impl Strategy<Value = (u32, u32)> {
    (1..=max_n).prop_flat_map(move |n| (Just(n), 0..=n.min(max_k)))
}

#[test]
fn adjacency_spectra_match_the_eigenmatrix() {
    for n in 1..=8u32 {
        for k in 0..=n.min(4) {
            let eig = eigenmatrices(n, k).unwrap();
            let d = eig.classes() + 1;
            for i in 0..d {
                let a = adjacency_matrix(n, k, i as u32).unwrap().to_dense();
                let mut dense = symmetric_eigenvalues(&a).unwrap();
                let mut want: Vec<f64> = Vec::new();
                for j in 0..d {
                    let m = eig.multiplicities()[j].to_integer().to_usize().unwrap();
                    want.extend(std::iter::repeat_n(to_f64(&eig.p[j][i]), m));
                }
                dense.sort_by(f64::total_cmp);
                want.sort_by(f64::total_cmp);
                assert_eq!(dense.len(), want.len());
                for (x, y) in dense.iter().zip(&want) {
                    assert!((x - y).abs() < 1e-9, "n={n} k={k} i={i}");
                }
            }
        }
    }
}

#[test]
fn projector_numerical_rank_is_the_multiplicity() {
    for (n, k) in [(6, 2), (7, 3), (8, 4), (8, 1)] {
        let eig = eigenmatrices(n, k).unwrap();
        for j in 0..=eig.classes() {
            let e = scheme_projector(n, k, j as u32).unwrap();
            let rank = symmetric_eigenvalues(&e).unwrap().iter().filter(|&&x| x > 1e-8).count();
            assert_eq!(rank as u128, eig.multiplicities()[j].to_integer().to_u128().unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vandermonde((n, k) in nk(20, 20)) {
        let n = n as i64;
        let k = k as i64;
        let lhs: num::BigUint = (0..=k).map(|i| binomial(k, i).unwrap() * binomial(n - k, i).unwrap()).sum();
        prop_assert_eq!(lhs, binomial(n, k).unwrap());
    }

    #[test]
    fn distance_is_a_metric((n, k) in nk(14, 7), a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let size = binomial(n as i64, k as i64).unwrap().to_u64().unwrap();
        let pick = |x: u64| AnomalyPattern::unrank(n, k, (x % size) as u128).unwrap();
        let (r, s, t) = (pick(a), pick(b), pick(c));
        let rs = pattern_distance(&r, &s).unwrap();
        prop_assert_eq!(rs, pattern_distance(&s, &r).unwrap());
        prop_assert_eq!(rs == 0, r == s);
        prop_assert!(pattern_distance(&r, &t).unwrap() <= rs + pattern_distance(&s, &t).unwrap());
        prop_assert_eq!(AnomalyPattern::unrank(n, k, r.rank()).unwrap(), r);
    }

    #[test]
    fn chu_vandermonde_sum(m in 0i64..12, b in -20i64..0, c in 1i64..15) {
        // ₂F₁(-m, b; c; 1) = (c-b)_m / (c)_m
        let value = hypergeometric_terminating(&[rat(-m), rat(b)], &[rat(c)], &rat(1)).unwrap();
        let mut want = Rational::from_integer(BigInt::from(1));
        for i in 0..m {
            want = want * rat(c - b + i) / rat(c + i);
        }
        prop_assert_eq!(value, want);
    }

    #[test]
    fn gram_is_reconstructed_from_projectors((n, k) in nk(8, 4), c in 0.0f64..=1.0) {
        let inst = ProblemInstance::new(n, k, c).unwrap();
        let g = gram_matrix(&inst).unwrap();
        let spectrum = closed_form_spectrum(&inst).unwrap();
        let mut rebuilt = DMatrix::<f64>::zeros(g.nrows(), g.ncols());
        for e in &spectrum.entries {
            rebuilt += scheme_projector(n, k, e.index).unwrap() * e.eigenvalue;
        }
        prop_assert!(frobenius(&(rebuilt - g)) < 1e-10);
    }

    #[test]
    fn top_eigenvalue_is_the_row_sum((n, k) in nk(14, 7), p in 0i64..=50, q in 1i64..=50) {
        prop_assume!(p <= q);
        let z = Rational::new(BigInt::from(p * p), BigInt::from(q * q));
        let spec = closed_form_spectrum_exact(n, k, &z).unwrap();
        let kr = class_count(n, k) as i64;
        let n = n as i64;
        // row sum: Σ_i k_i z^i
        let mut row = Rational::from_integer(BigInt::from(0));
        let mut zi = Rational::from_integer(BigInt::from(1));
        for i in 0..=kr {
            let ki = Rational::from_integer(BigInt::from(binomial(kr, i).unwrap() * binomial(n - kr, i).unwrap()));
            row += ki * &zi;
            zi *= &z;
        }
        prop_assert_eq!(&spec[0].eigenvalue, &row);
    }

    #[test]
    fn srm_trace_formula((n, k) in nk(8, 4), c in 0.0f64..=1.0) {
        let inst = ProblemInstance::new(n, k, c).unwrap();
        let s = matrix_sqrt(&gram_matrix(&inst).unwrap()).unwrap();
        let size = s.nrows() as f64;
        let via_trace = (s.trace() / size).powi(2);
        prop_assert!((via_trace - min_error_success(&inst).unwrap().value).abs() < 1e-12);
    }

    #[test]
    fn min_error_dominates_zero_error((n, k) in nk(12, 4), c in 0.0f64..=1.0) {
        let inst = ProblemInstance::new(n, k, c).unwrap();
        let me = min_error_success(&inst).unwrap().value;
        let ua = unambiguous_success(&inst).unwrap().value;
        prop_assert!(me >= ua - 1e-14);
        prop_assert!(me <= 1.0 + 1e-14);
    }

    #[test]
    fn min_error_decreases_with_overlap((n, k) in nk(30, 5), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = min_error_success(&ProblemInstance::new(n, k, lo).unwrap()).unwrap().value;
        let p_hi = min_error_success(&ProblemInstance::new(n, k, hi).unwrap()).unwrap().value;
        prop_assert!(p_hi <= p_lo + 1e-13);
    }

    #[test]
    fn universal_terms_form_a_probability(n in 1u32..80, kf in 0.0f64..=1.0, d in 2u32..7) {
        let k = ((n / 2) as f64 * kf) as u32;
        let terms = universal_terms(&UniversalInstance::new(n, k, d).unwrap()).unwrap();
        prop_assert!(terms.iter().all(|t| *t >= rat(0)));
        let total: Rational = terms.iter().sum();
        prop_assert!(total <= rat(1));
    }

    #[test]
    fn explicit_states_reproduce_gram((n, k) in nk(9, 4), c in 0.0f64..=1.0) {
        let inst = ProblemInstance::new(n, k, c).unwrap();
        let from_states = gram_from_states(&hypothesis_states(&inst).unwrap()).unwrap();
        let g = gram_matrix(&inst).unwrap();
        let diff = from_states.iter().zip(g.iter()).map(|(a, b)| (a.re - b).abs() + a.im.abs()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), shots in 0u64..200_000) {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let a = sample_measurement(&probs, seed, shots).unwrap();
        prop_assert_eq!(a.iter().sum::<u64>(), shots);
        prop_assert_eq!(a, sample_measurement(&probs, seed, shots).unwrap());
    }
}
