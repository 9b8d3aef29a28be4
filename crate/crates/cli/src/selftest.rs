//! Randomized algebraic checks against the brute-force oracles.

use nalgebra::DMatrix;
use rand::Rng;
use spacelike_core::identities::lemma33_weights;
use spacelike_core::oracle::{
    elem_sym_principal_minors, random_gamma_k, random_matrix, random_spd, random_symmetric_with_spectrum,
};
use spacelike_core::symfunc::{
    elem_sym_all, elem_sym_matrix, elem_sym_values, gauss_map_residual, lemma24_margins, newton_maclaurin_margin,
    newton_tensor, quotient_normalization, rescale_values, SquareMatrix, SymVector,
};

/// `(n, k, l)` triples for the cone inequalities.
pub const CONE_TRIPLES: [(usize, usize, usize); 9] =
    [(2, 1, 0), (2, 2, 1), (3, 2, 1), (3, 3, 1), (4, 2, 1), (4, 3, 1), (4, 4, 2), (5, 3, 2), (6, 4, 2)];

pub const LEMMA33_TRIPLES: [(usize, usize, usize); 3] = [(3, 2, 1), (4, 2, 1), (4, 3, 1)];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    /// Largest error, or most negative margin negated.
    pub worst: f64,
    pub tol: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(name: &'static str, samples: usize, worst: f64, tol: f64) -> Self {
        Self { name, samples, worst, tol, pass: worst <= tol }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: samples={} worst={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst,
            self.tol
        )
    }
}

fn contract(a: &SquareMatrix, b: &DMatrix<f64>) -> f64 {
    a.as_matrix().component_mul(b).sum()
}

/// `elem_sym_matrix` against principal minors, and the three contractions of
/// the Newton tensor, on `cases` random matrices with `n ∈ {2,…,6}`.
/// Errors are relative to `max(|exact|, ‖A‖_F^k)`.
pub fn check_elem_sym<R: Rng>(rng: &mut R, cases: usize) -> [CheckResult; 2] {
    let (mut worst_s, mut worst_c) = (0.0_f64, 0.0_f64);
    for i in 0..cases {
        let n = 2 + i % 5;
        let m = random_matrix(rng, n);
        let a = SquareMatrix::new(m.clone()).expect("finite matrix");
        let norm = m.norm();
        let s = elem_sym_all(&a);
        let sq = &m * &m;
        for k in 0..=n {
            let exact = elem_sym_principal_minors(&m, k);
            let scale = exact.abs().max(norm.powi(k as i32)).max(f64::MIN_POSITIVE);
            let got = elem_sym_matrix(&a, k).expect("k in range");
            worst_s = worst_s.max((got - exact).abs() / scale);
            if k == 0 {
                continue;
            }
            let t = newton_tensor(&a, k).expect("k in range");
            let id = DMatrix::identity(n, n);
            let next = if k < n { s[k + 1] } else { 0.0 };
            let checks = [
                (contract(&t, &id), (n - k + 1) as f64 * s[k - 1], k - 1),
                (contract(&t, &m), k as f64 * s[k], k),
                (contract(&t, &sq), s[1] * s[k] - (k + 1) as f64 * next, k + 1),
            ];
            for (lhs, rhs, deg) in checks {
                let scale = rhs.abs().max(norm.powi(deg as i32)).max(f64::MIN_POSITIVE);
                worst_c = worst_c.max((lhs - rhs).abs() / scale);
            }
        }
    }
    [
        CheckResult::new("elem_sym_vs_minors", cases, worst_s, 1e-10),
        CheckResult::new("newton_tensor_contractions", cases, worst_c, 1e-10),
    ]
}

pub fn check_gauss_map<R: Rng>(rng: &mut R, cases: usize) -> CheckResult {
    let mut worst = 0.0_f64;
    for i in 0..cases {
        let n = 2 + i % 5;
        let a = SquareMatrix::new(random_spd(rng, n)).expect("finite matrix");
        worst = worst.max(gauss_map_residual(&a).unwrap_or(f64::INFINITY));
    }
    CheckResult::new("gauss_map_spd", cases, worst, 1e-8)
}

/// Newton–MacLaurin and cone-product margins over [`CONE_TRIPLES`], plus the
/// constant-vector equality cases.
pub fn check_cone_inequalities<R: Rng>(rng: &mut R, cases: usize) -> [CheckResult; 3] {
    let (mut worst_nm, mut worst_24, mut worst_eq) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &(n, k, l) in &CONE_TRIPLES {
        for _ in 0..cases {
            let lambda = random_gamma_k(rng, n, k);
            let v = SymVector::new(lambda.clone()).expect("finite");
            for r in (l + 1)..=k {
                for s in 0..=l.min(r - 1) {
                    let m = newton_maclaurin_margin(&v, k, l, r, s).unwrap_or(f64::NEG_INFINITY);
                    worst_nm = worst_nm.max(-m);
                }
            }
            let a = SquareMatrix::new(random_symmetric_with_spectrum(rng, &lambda)).expect("finite");
            let m = lemma24_margins(&a, k, l).map(|m| m.min()).unwrap_or(f64::NEG_INFINITY);
            worst_24 = worst_24.max(-m);
        }
        let c = rng.random_range(0.1..3.0);
        let v = SymVector::new(vec![c; n]).expect("finite");
        worst_eq = worst_eq.max(newton_maclaurin_margin(&v, k, l, k, l).map(f64::abs).unwrap_or(f64::INFINITY));
        let m = lemma24_margins(&SquareMatrix::identity(n).scaled(c), k, l).expect("identity is in every cone");
        for x in m.as_array() {
            worst_eq = worst_eq.max(x.abs());
        }
    }
    let total = cases * CONE_TRIPLES.len();
    [
        CheckResult::new("newton_maclaurin_margins", total, worst_nm, 1e-10),
        CheckResult::new("lemma24_margins", total, worst_24, 1e-10),
        CheckResult::new("equality_cases", CONE_TRIPLES.len(), worst_eq, 1e-12),
    ]
}

/// `M > 0` and `M − Q ≤ 0` after normalizing to the quotient constraint.
/// `worst` is `max(M − Q, −min M)`.
pub fn check_lemma33<R: Rng>(rng: &mut R, cases: usize) -> CheckResult {
    let mut worst = f64::NEG_INFINITY;
    for &(n, k, l) in &LEMMA33_TRIPLES {
        for _ in 0..cases {
            let lambda = random_gamma_k(rng, n, k);
            let vals = elem_sym_values(&SymVector::new(lambda).expect("finite"));
            let t = quotient_normalization(&vals, n, k, l);
            let (m, q) = lemma33_weights(&rescale_values(&vals, t), k, l);
            let m_term = if m > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
            worst = worst.max(m - q).max(m_term);
        }
    }
    CheckResult::new("lemma33_signs", cases * LEMMA33_TRIPLES.len(), worst, 1e-10)
}

pub fn run_all<R: Rng>(rng: &mut R, cases: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.extend(check_elem_sym(rng, cases));
    out.push(check_gauss_map(rng, cases));
    out.extend(check_cone_inequalities(rng, cases));
    out.push(check_lemma33(rng, cases));
    out
}
