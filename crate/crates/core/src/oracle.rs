//! Brute-force reference implementations.
//!
//! Everything here is exponential-time and deliberately shares no code with
//! the production paths in [`crate::symfunc`]: subsets are enumerated by
//! bitmask, determinants by the Leibniz permutation expansion. Used by the
//! test suites and by the `selftest` command.

use nalgebra::DMatrix;
use rand::Rng;

/// `[S₀..Sₙ]` by enumerating every subset of the entries.
pub fn elem_sym_subsets(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n + 1];
    for mask in 0u64..(1u64 << n) {
        let prod: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product();
        s[mask.count_ones() as usize] += prod;
    }
    s
}

/// Every permutation of `0..k` paired with its sign.
pub fn signed_permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(k: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<(Vec<usize>, f64)>) {
        if current.len() == k {
            out.push((current.clone(), permutation_sign(current)));
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                current.push(i);
                rec(k, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    rec(k, &mut current, &mut used, &mut out);
    out
}

/// Sign of a permutation given as an image list, by counting inversions.
pub fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Leibniz expansion of the determinant.
pub fn leibniz_det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    signed_permutations(n).into_iter().map(|(p, sign)| sign * (0..n).map(|i| m[(i, p[i])]).product::<f64>()).sum()
}

/// `S_k(A)` as the sum of all `k×k` principal minors.
pub fn elem_sym_principal_minors(a: &DMatrix<f64>, k: usize) -> f64 {
    let n = a.nrows();
    if k == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = DMatrix::from_fn(k, k, |r, c| a[(idx[r], idx[c])]);
        total += leibniz_det(&sub);
    }
    total
}

/// Generalized Kronecker symbol `δ^{i₁…i_k}_{j₁…j_k}`: the sign of the
/// permutation taking the lower multi-index onto the upper one when both
/// consist of the same distinct indices, and zero otherwise.
pub fn generalized_kronecker(upper: &[usize], lower: &[usize]) -> f64 {
    let k = upper.len();
    if lower.len() != k {
        return 0.0;
    }
    for i in 0..k {
        if upper[i + 1..].contains(&upper[i]) || lower[i + 1..].contains(&lower[i]) {
            return 0.0;
        }
    }
    // position of each lower index within the upper list
    let mut perm = Vec::with_capacity(k);
    for j in lower {
        match upper.iter().position(|i| i == j) {
            Some(p) => perm.push(p),
            None => return 0.0,
        }
    }
    permutation_sign(&perm)
}

fn ordered_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for t in &out {
            for i in 0..n {
                if !t.contains(&i) {
                    let mut u = t.clone();
                    u.push(i);
                    next.push(u);
                }
            }
        }
        out = next;
    }
    out
}

/// `S_k(A) = (1/k!) δ^{i₁…i_k}_{j₁…j_k} a^{i₁}_{j₁} ⋯ a^{i_k}_{j_k}`, summing over
/// multi-indices of distinct entries (the symbol vanishes otherwise).
pub fn elem_sym_kronecker(a: &DMatrix<f64>, k: usize) -> f64 {
    let n = a.nrows();
    if k == 0 {
        return 1.0;
    }
    let tuples = ordered_tuples(n, k);
    let mut total = 0.0;
    for up in &tuples {
        for lo in &tuples {
            let d = generalized_kronecker(up, lo);
            if d != 0.0 {
                total += d * (0..k).map(|m| a[(up[m], lo[m])]).product::<f64>();
            }
        }
    }
    let factorial: f64 = (1..=k).map(|x| x as f64).product();
    total / factorial
}

/// Central finite differences of the principal-minor `S_k` with respect to
/// each entry, `G[(i, j)] ≈ ∂S_k/∂A[(i, j)]`.
pub fn finite_difference_gradient(a: &DMatrix<f64>, k: usize, step: f64) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut plus = a.clone();
        let mut minus = a.clone();
        plus[(i, j)] += step;
        minus[(i, j)] -= step;
        (elem_sym_principal_minors(&plus, k) - elem_sym_principal_minors(&minus, k)) / (2.0 * step)
    })
}

/// Composite Simpson rule on `[a, b]` with `panels` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    sum * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Perimeter of the ellipse with semi-axes `a`, `b` by adaptive quadrature of
/// the arclength element.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let f = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    4.0 * adaptive_simpson(&f, 0.0, std::f64::consts::FRAC_PI_2, 1e-13)
}

/// Matrix with entries uniform in `[−1, 1]`.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

/// `MMᵀ + δI` with `δ ∈ [0.1, 1]`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = random_matrix(rng, n);
    let delta = rng.random_range(0.1..1.0);
    &m * m.transpose() + DMatrix::identity(n, n) * delta
}

/// Eigenvalue vector in `Γ_k`: entries uniform in `[−1, 2]`, shifted along
/// `(1,…,1)` in steps of `1/8` until every `S_j`, `j ≤ k`, is positive.
pub fn random_gamma_k<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<f64> {
    let mut lambda: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
    loop {
        let s = elem_sym_subsets(&lambda);
        let scale = 1.0 + lambda.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (1..=k).all(|j| s[j] > 1e-6 * scale.powi(j as i32)) {
            return lambda;
        }
        for x in &mut lambda {
            *x += 0.125;
        }
    }
}

/// Symmetric matrix `QΛQᵀ` with the given spectrum and a random rotation.
pub fn random_symmetric_with_spectrum<R: Rng>(rng: &mut R, lambda: &[f64]) -> DMatrix<f64> {
    let n = lambda.len();
    let q = random_matrix(rng, n).qr().q();
    &q * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lambda)) * q.transpose()
}
