use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spacelike_core::identities::{ellipticity_value, lemma33_weights};
use spacelike_core::oracle::{
    elem_sym_kronecker, elem_sym_principal_minors, elem_sym_subsets, finite_difference_gradient, random_gamma_k,
    random_matrix, random_spd, random_symmetric_with_spectrum,
};
use spacelike_core::symfunc::{
    binomial, elem_sym_all, elem_sym_matrix, elem_sym_trace_recurrence, elem_sym_values, gauss_map_residual,
    lemma24_margins, newton_maclaurin_margin, newton_tensor, quotient_normalization, rescale_values, SquareMatrix,
    SymVector,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=6).prop_flat_map(|n| prop::collection::vec(-3.0f64..3.0, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sk_is_permutation_invariant(lambda in vec_strategy(), rot in 0usize..6) {
        let s = elem_sym_values(&SymVector::new(lambda.clone()).unwrap());
        let mut p = lambda.clone();
        p.rotate_left(rot % lambda.len());
        p.swap(0, lambda.len() - 1);
        let q = elem_sym_values(&SymVector::new(p).unwrap());
        for k in 0..s.len() {
            prop_assert!(rel(s[k], q[k]) < 1e-12);
        }
    }

    #[test]
    fn sk_is_homogeneous(lambda in vec_strategy(), t in -2.0f64..2.0) {
        let s = elem_sym_values(&SymVector::new(lambda.clone()).unwrap());
        let scaled: Vec<f64> = lambda.iter().map(|x| t * x).collect();
        let q = elem_sym_values(&SymVector::new(scaled).unwrap());
        for k in 0..s.len() {
            prop_assert!(rel(q[k], t.powi(k as i32) * s[k]) < 1e-11);
        }
    }

    #[test]
    fn sk_matches_subset_enumeration(lambda in vec_strategy()) {
        let s = elem_sym_values(&SymVector::new(lambda.clone()).unwrap());
        let o = elem_sym_subsets(&lambda);
        for k in 0..s.len() {
            prop_assert!(rel(s[k], o[k]) < 1e-12);
        }
    }

    #[test]
    fn matrix_sk_matches_minors_and_kronecker(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n);
        let sa = SquareMatrix::new(a.clone()).unwrap();
        let all = elem_sym_all(&sa);
        let rec = elem_sym_trace_recurrence(&sa);
        for k in 0..=n {
            let minors = elem_sym_principal_minors(&a, k);
            prop_assert!(rel(elem_sym_matrix(&sa, k).unwrap(), minors) < 1e-10);
            prop_assert!(rel(all[k], minors) < 1e-10);
            prop_assert!(rel(rec[k], minors) < 1e-10);
            if n <= 4 {
                prop_assert!(rel(elem_sym_kronecker(&a, k), minors) < 1e-10);
            }
        }
    }

    #[test]
    fn newton_tensor_is_the_gradient(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=5) {
        prop_assume!(k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut rng, n);
        let t = newton_tensor(&SquareMatrix::new(a.clone()).unwrap(), k).unwrap();
        let fd = finite_difference_gradient(&a, k, 1e-6);
        let scale = 1.0 + fd.norm();
        prop_assert!((t.as_matrix() - fd).norm() / scale < 1e-6);
    }

    #[test]
    fn gauss_map_on_spd(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SquareMatrix::new(random_spd(&mut rng, n)).unwrap();
        prop_assert!(gauss_map_residual(&a).unwrap() < 1e-8);
    }

    #[test]
    fn newton_maclaurin_in_gamma_k(seed in any::<u64>(), n in 2usize..=6, k in 1usize..=6) {
        prop_assume!(k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = SymVector::new(random_gamma_k(&mut rng, n, k)).unwrap();
        for l in 0..k {
            for r in (l + 1)..=k {
                for s in 0..r.min(l + 1) {
                    let m = newton_maclaurin_margin(&lambda, k, l, r, s).unwrap();
                    prop_assert!(m >= -1e-10, "k={} l={} r={} s={} margin={}", k, l, r, s, m);
                }
            }
        }
    }

    #[test]
    fn cone_product_margins_in_gamma_k(seed in any::<u64>(), n in 2usize..=6, k in 1usize..=6, l in 0usize..6) {
        prop_assume!(l < k && k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = random_gamma_k(&mut rng, n, k);
        let a = SquareMatrix::new(random_symmetric_with_spectrum(&mut rng, &lambda)).unwrap();
        let m = lemma24_margins(&a, k, l).unwrap();
        prop_assert!(m.min() >= -1e-10, "{:?}", m);
    }

    #[test]
    fn weight_and_ellipticity_signs(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=5, l in 0usize..5) {
        prop_assume!(l < k && k <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = random_gamma_k(&mut rng, n, k);
        let vals = elem_sym_values(&SymVector::new(lambda).unwrap());
        let t = quotient_normalization(&vals, n, k, l);
        let v = rescale_values(&vals, t);
        let (m, q) = lemma33_weights(&v, k, l);
        prop_assert!(m > 0.0);
        prop_assert!(m - q <= 1e-10, "M={} Q={}", m, q);
        prop_assert!(ellipticity_value(&v, k, l, 1.0) >= -1e-10);
    }
}

#[test]
fn equality_cases_have_zero_margins() {
    for n in 2..=6 {
        let lambda = SymVector::new(vec![0.7; n]).unwrap();
        for k in 1..=n {
            for l in 0..k {
                assert!(newton_maclaurin_margin(&lambda, k, l, k, l).unwrap().abs() < 1e-12);
                let m = lemma24_margins(&SquareMatrix::identity(n).scaled(0.7), k, l).unwrap();
                for v in m.as_array() {
                    assert!(v.abs() < 1e-12, "n={n} k={k} l={l} {m:?}");
                }
                let vals: Vec<f64> = (0..=n).map(|i| binomial(n, i)).collect();
                let (m, q) = lemma33_weights(&vals, k, l);
                assert!(m > 0.0 && (m - q).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn symmetric_inverse_round_trip() {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 3.0, 0.25, 0.0, 0.25, 1.5]);
    assert!(gauss_map_residual(&SquareMatrix::new(a).unwrap()).unwrap() < 1e-13);
}
