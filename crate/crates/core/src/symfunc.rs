//! Elementary symmetric functions of vectors and matrices.
//!
//! `S_k(λ)` is the sum over all `k`-subsets of the products of entries;
//! for a matrix `A` it is evaluated on the spectrum, `S_k(A) = S_k(λ(A))`.
//! The module also provides the Newton tensor `∂S_k/∂A`, the Gårding cone
//! test, the Newton–MacLaurin margins and the quotient derivative
//! `∂(S_k/S_l)/∂A`.
//!
//! Index convention: a [`SquareMatrix`] stores `A[(r, c)] = a^r_c` (row is the
//! upper index). The Newton tensor is returned in the same layout as the
//! derivative, `N[(i, j)] = ∂S_k / ∂A[(i, j)]`, so that the contraction
//! `Σ_ij N[(i, j)] A[(i, j)] = k S_k`.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Relative tolerance used for the symmetry flag of [`SquareMatrix`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Gårding cone positivity threshold: `S_i > CONE_TOL * (1 + |λ|^i)`.
pub const CONE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("empty input")]
    Empty,
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("index {name}={value} outside [{lo}, {hi}]")]
    IndexOutOfRange { name: &'static str, value: usize, lo: usize, hi: usize },
    #[error("index constraint violated: {0}")]
    IndexConstraint(String),
    #[error("input not in the Gårding cone Γ_{k} (k_max = {k_max})")]
    NotInCone { k: usize, k_max: usize },
    #[error("S_{l} vanishes; quotient undefined")]
    VanishingDenominator { l: usize },
    #[error("matrix is singular")]
    Singular,
}

/// An ordered list of real scalars `λ₁..λₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymVector(Vec<f64>);

impl SymVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, SymError> {
        if entries.is_empty() {
            return Err(SymError::Empty);
        }
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(SymError::NonFinite(i));
        }
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl TryFrom<&[f64]> for SymVector {
    type Error = SymError;

    fn try_from(value: &[f64]) -> Result<Self, Self::Error> {
        Self::new(value.to_vec())
    }
}

/// A real `n×n` matrix together with a cached symmetry flag.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    data: DMatrix<f64>,
    symmetric: bool,
}

impl SquareMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self, SymError> {
        if data.nrows() != data.ncols() {
            return Err(SymError::NotSquare { rows: data.nrows(), cols: data.ncols() });
        }
        if data.nrows() == 0 {
            return Err(SymError::Empty);
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(SymError::NonFinite(i));
        }
        let symmetric = is_symmetric(&data);
        Ok(Self { data, symmetric })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SymError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(SymError::NotSquare { rows: n, cols: rows.first().map_or(0, Vec::len) });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self, SymError> {
        let n = diag.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn identity(n: usize) -> Self {
        Self { data: DMatrix::identity(n, n), symmetric: true }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { data: &self.data * t, symmetric: self.symmetric }
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        let data = (&self.data + self.data.transpose()) * 0.5;
        Self { data, symmetric: true }
    }

    /// Eigenvalues of a symmetric matrix in ascending order; `None` otherwise.
    pub fn symmetric_eigenvalues(&self) -> Option<Vec<f64>> {
        if !self.symmetric {
            return None;
        }
        let sym = (&self.data + self.data.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Some(ev)
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOL * scale))
}

/// `S₀..Sₙ` together with the largest `k` such that `S₁..S_k > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GardingFlags {
    pub k_max: usize,
    pub values: Vec<f64>,
}

impl GardingFlags {
    pub fn in_cone(&self, k: usize) -> bool {
        self.k_max >= k
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `[S₀, S₁, …, Sₙ]` by multiplying out `∏(1 + λᵢ t)`.
pub fn elem_sym_values(lambda: &SymVector) -> Vec<f64> {
    elem_sym_slice(lambda.entries())
}

pub(crate) fn elem_sym_slice(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n + 1];
    s[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            s[k] += l * s[k - 1];
        }
    }
    s
}

/// `[S₀(A), …, Sₙ(A)]`: eigenvalues for symmetric input, trace recurrence
/// otherwise.
pub fn elem_sym_all(a: &SquareMatrix) -> Vec<f64> {
    match a.symmetric_eigenvalues() {
        Some(ev) => elem_sym_slice(&ev),
        None => elem_sym_trace_recurrence(a),
    }
}

/// `[S₀(A), …, Sₙ(A)]` from the Faddeev–LeVerrier recurrence
/// `T₀ = I`, `S_m = tr(A T_{m−1})/m`, `T_m = S_m I − A T_{m−1}`.
/// Valid for any square matrix.
pub fn elem_sym_trace_recurrence(a: &SquareMatrix) -> Vec<f64> {
    let n = a.dim();
    let m = a.as_matrix();
    let mut s = vec![0.0; n + 1];
    s[0] = 1.0;
    let mut t = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        let at = m * &t;
        s[k] = at.trace() / k as f64;
        t = DMatrix::identity(n, n) * s[k] - at;
    }
    s
}

pub fn elem_sym_matrix(a: &SquareMatrix, k: usize) -> Result<f64, SymError> {
    let n = a.dim();
    check_range("k", k, 0, n)?;
    Ok(elem_sym_all(a)[k])
}

fn check_range(name: &'static str, value: usize, lo: usize, hi: usize) -> Result<(), SymError> {
    if value < lo || value > hi {
        Err(SymError::IndexOutOfRange { name, value, lo, hi })
    } else {
        Ok(())
    }
}

/// Newton tensor `N = ∂S_k/∂A` for `1 ≤ k ≤ n`.
///
/// Built from `T₀ = I`, `T_m = S_m I − T_{m−1} A`; then `N = T_{k−1}ᵀ`.
pub fn newton_tensor(a: &SquareMatrix, k: usize) -> Result<SquareMatrix, SymError> {
    let n = a.dim();
    check_range("k", k, 1, n)?;
    let s = elem_sym_all(a);
    let m = a.as_matrix();
    let mut t = DMatrix::<f64>::identity(n, n);
    for sm in s.iter().take(k).skip(1) {
        t = DMatrix::identity(n, n) * *sm - &t * m;
    }
    let data = t.transpose();
    let symmetric = a.is_symmetric() || is_symmetric(&data);
    Ok(SquareMatrix { data, symmetric })
}

/// Newton tensor with `N = 0` for `k = 0` (derivative of the constant `S₀`).
fn newton_tensor_or_zero(a: &SquareMatrix, k: usize) -> Result<DMatrix<f64>, SymError> {
    if k == 0 {
        Ok(DMatrix::zeros(a.dim(), a.dim()))
    } else {
        newton_tensor(a, k).map(SquareMatrix::into_matrix)
    }
}

pub fn garding_membership(lambda: &SymVector) -> GardingFlags {
    garding_from_values(elem_sym_values(lambda), lambda.norm())
}

pub(crate) fn garding_from_values(values: Vec<f64>, norm: f64) -> GardingFlags {
    let mut k_max = 0;
    for (i, s) in values.iter().enumerate().skip(1) {
        if *s > CONE_TOL * (1.0 + norm.powi(i as i32)) {
            k_max = i;
        } else {
            break;
        }
    }
    GardingFlags { k_max, values }
}

/// Gårding flags of a matrix from its elementary symmetric values.
pub fn garding_membership_matrix(a: &SquareMatrix) -> GardingFlags {
    let norm = a.as_matrix().norm();
    garding_from_values(elem_sym_all(a), norm)
}

/// `RHS^{1} − LHS^{1}` of the generalized Newton–MacLaurin inequality
/// `((S_k/C(n,k)) / (S_l/C(n,l)))^{1/(k−l)} ≤ ((S_r/C(n,r)) / (S_s/C(n,s)))^{1/(r−s)}`.
pub fn newton_maclaurin_margin(lambda: &SymVector, k: usize, l: usize, r: usize, s: usize) -> Result<f64, SymError> {
    let n = lambda.dim();
    if !(l < k && k <= n) {
        return Err(SymError::IndexConstraint(format!("need 0 <= l < k <= n, got l={l}, k={k}, n={n}")));
    }
    if !(s < r && r <= n) {
        return Err(SymError::IndexConstraint(format!("need 0 <= s < r <= n, got s={s}, r={r}, n={n}")));
    }
    if r > k || s > l {
        return Err(SymError::IndexConstraint(format!("need r <= k and s <= l, got r={r}, k={k}, s={s}, l={l}")));
    }
    let flags = garding_membership(lambda);
    if !flags.in_cone(k) {
        return Err(SymError::NotInCone { k, k_max: flags.k_max });
    }
    let sv = &flags.values;
    let normalized = |i: usize| sv[i] / binomial(n, i);
    let lhs = (normalized(k) / normalized(l)).powf(1.0 / (k - l) as f64);
    let rhs = (normalized(r) / normalized(s)).powf(1.0 / (r - s) as f64);
    Ok(rhs - lhs)
}

/// The four one-sided bounds on neighbouring quotients after rescaling `A`
/// so that `S_k/S_l = C(n,k)/C(n,l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientMargins {
    /// `S_{k−1}/S_k − k/(n−k+1)`
    pub lower_k: f64,
    /// `S_{l+1}/S_l − (n−l)/(l+1)`
    pub lower_l: f64,
    /// `(n−k)/(k+1) − S_{k+1}/S_k`
    pub upper_k: f64,
    /// `l/(n−l+1) − S_{l−1}/S_l`
    pub upper_l: f64,
    /// The scale factor `t` applied to `A`.
    pub scale: f64,
}

impl QuotientMargins {
    pub fn as_array(&self) -> [f64; 4] {
        [self.lower_k, self.lower_l, self.upper_k, self.upper_l]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Scale `t > 0` with `S_k(tA)/S_l(tA) = C(n,k)/C(n,l)`.
pub fn quotient_normalization(values: &[f64], n: usize, k: usize, l: usize) -> f64 {
    let target = binomial(n, k) / binomial(n, l);
    (target * values[l] / values[k]).powf(1.0 / (k - l) as f64)
}

/// Elementary symmetric values of `tA` given those of `A`.
pub fn rescale_values(values: &[f64], t: f64) -> Vec<f64> {
    values.iter().enumerate().map(|(j, s)| s * t.powi(j as i32)).collect()
}

pub fn lemma24_margins(a: &SquareMatrix, k: usize, l: usize) -> Result<QuotientMargins, SymError> {
    let n = a.dim();
    if !(l < k && k <= n) {
        return Err(SymError::IndexConstraint(format!("need 0 <= l < k <= n, got l={l}, k={k}, n={n}")));
    }
    let flags = garding_membership_matrix(a);
    if !flags.in_cone(k) {
        return Err(SymError::NotInCone { k, k_max: flags.k_max });
    }
    let t = quotient_normalization(&flags.values, n, k, l);
    Ok(quotient_margins_from_values(&rescale_values(&flags.values, t), n, k, l, t))
}

pub(crate) fn quotient_margins_from_values(sv: &[f64], n: usize, k: usize, l: usize, scale: f64) -> QuotientMargins {
    let get = |i: isize| -> f64 {
        if i < 0 || i as usize > n {
            0.0
        } else {
            sv[i as usize]
        }
    };
    let (ki, li) = (k as isize, l as isize);
    let nf = n as f64;
    let (kf, lf) = (k as f64, l as f64);
    QuotientMargins {
        lower_k: get(ki - 1) / get(ki) - kf / (nf - kf + 1.0),
        lower_l: get(li + 1) / get(li) - (nf - lf) / (lf + 1.0),
        upper_k: (nf - kf) / (kf + 1.0) - get(ki + 1) / get(ki),
        upper_l: lf / (nf - lf + 1.0) - get(li - 1) / get(li),
        scale,
    }
}

/// `F^j_i = ∂(S_k/S_l)/∂A = F (N_k/S_k − N_l/S_l)` in the derivative layout.
pub fn quotient_derivative(a: &SquareMatrix, k: usize, l: usize) -> Result<SquareMatrix, SymError> {
    let n = a.dim();
    if !(l < k && k <= n) {
        return Err(SymError::IndexConstraint(format!("need 0 <= l < k <= n, got l={l}, k={k}, n={n}")));
    }
    let s = elem_sym_all(a);
    let scale = 1.0 + a.as_matrix().norm().powi(l as i32);
    if s[l].abs() <= CONE_TOL * scale {
        return Err(SymError::VanishingDenominator { l });
    }
    let f = s[k] / s[l];
    let nk = newton_tensor_or_zero(a, k)?;
    let nl = newton_tensor_or_zero(a, l)?;
    SquareMatrix::new((nk / s[k] - nl / s[l]) * f)
}

/// Residual of `S_k(A) S_n(B) = S_{n−k}(B)` with `B = A⁻¹`, maximized over
/// `k` and measured relative to `max(1, |S_k(A) S_n(B)|, |S_{n−k}(B)|)`.
pub fn gauss_map_residual(a: &SquareMatrix) -> Result<f64, SymError> {
    let n = a.dim();
    let inv = a.as_matrix().clone().try_inverse().ok_or(SymError::Singular)?;
    if inv.iter().any(|x| !x.is_finite()) {
        return Err(SymError::Singular);
    }
    let b = SquareMatrix::new(inv)?;
    // symmetric inverse can lose the flag through roundoff
    let b = if a.is_symmetric() { b.symmetrized() } else { b };
    let sa = elem_sym_all(a);
    let sb = elem_sym_all(&b);
    let mut worst = 0.0_f64;
    for k in 0..=n {
        let lhs = sa[k] * sb[n];
        let rhs = sb[n - k];
        let scale = 1.0_f64.max(lhs.abs()).max(rhs.abs());
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}
