//! Geometry of a spacelike graph `x₃ = u(x)` over a planar grid.
//!
//! Conventions: `w = √(1 − |Du|²)`, `g_ij = δ_ij − u_i u_j`,
//! `g^ij = δ_ij + u_i u_j / w²`, `h_ij = u_ij / w` and the shape operator
//! `A = (h^j_i)`, stored with the upper index as the row. Symmetric 2×2
//! tensors are packed as `[xx, xy, yy]`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainPreset, PolarGrid};
use crate::stencil::Derivs;
use crate::symfunc::{self, SquareMatrix, SymError};

/// Default spacelike margin: admissible graphs satisfy `|Du| ≤ 1 − ε`.
pub const SPACELIKE_EPS: f64 = 1e-6;

/// Dimension of the graph's base for every grid-based surface.
pub const GRID_DIM: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("surface is not spacelike at node {node}: |Du| = {grad_norm}")]
    SpacelikeViolation { node: usize, grad_norm: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cap requires theta0 < -1, got {0}")]
    CapParameter(f64),
    #[error("cap requires a disk of radius {expected} centered at the apex, got {got}")]
    CapDomain { expected: f64, got: String },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Lorentzian product `x₁y₁ + … + x_n y_n − x_{n+1} y_{n+1}`.
pub fn minkowski_inner(x: &[f64], y: &[f64]) -> Result<f64, GeomError> {
    if x.len() != y.len() {
        return Err(GeomError::LengthMismatch { expected: x.len(), got: y.len() });
    }
    let Some((last, head)) = x.split_last() else {
        return Ok(0.0);
    };
    let space: f64 = head.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok(space - last * y[y.len() - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceSource {
    /// Closed-form derivatives.
    Analytic,
    /// Output of the Newton solver, finite-differenced.
    Solved,
    /// Samples from any other origin, finite-differenced.
    Sampled,
}

#[derive(Debug, Clone)]
pub struct GraphSurface {
    grid: Arc<PolarGrid>,
    u: Vec<f64>,
    du: Vec<[f64; 2]>,
    d2u: Vec<[f64; 3]>,
    w: Vec<f64>,
    source: SurfaceSource,
}

/// Finite-difference gradient and Hessian of nodal samples.
pub fn differentiate(u: &[f64], grid: &PolarGrid) -> (Vec<[f64; 2]>, Vec<[f64; 3]>) {
    let d = grid.differentiator().derivs(u);
    (d.iter().map(|d| d.grad).collect(), d.iter().map(|d| d.hess).collect())
}

/// Index of the first node with `|Du| > 1 − eps`, with that norm.
pub fn first_timelike(du: &[[f64; 2]], eps: f64) -> Option<(usize, f64)> {
    du.iter().map(|g| g[0].hypot(g[1])).enumerate().find(|(_, n)| !(*n <= 1.0 - eps))
}

impl GraphSurface {
    /// Differentiates the samples on the grid and checks the spacelike margin.
    pub fn from_samples(grid: Arc<PolarGrid>, u: Vec<f64>, source: SurfaceSource) -> Result<Self, GeomError> {
        Self::from_samples_with_margin(grid, u, source, SPACELIKE_EPS)
    }

    pub fn from_samples_with_margin(
        grid: Arc<PolarGrid>,
        u: Vec<f64>,
        source: SurfaceSource,
        eps: f64,
    ) -> Result<Self, GeomError> {
        if u.len() != grid.len() {
            return Err(GeomError::LengthMismatch { expected: grid.len(), got: u.len() });
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite(i));
        }
        let offset = u[0];
        let v: Vec<f64> = u.iter().map(|x| x - offset).collect();
        let (du, d2u) = differentiate(&v, &grid);
        Self::assemble(grid, u, du, d2u, source, eps)
    }

    /// Surface with heights `offset + v`, differentiating `v` so that the
    /// derivatives keep the precision of the small representation.
    pub fn from_offset_samples(
        grid: Arc<PolarGrid>,
        v: Vec<f64>,
        offset: f64,
        source: SurfaceSource,
        eps: f64,
    ) -> Result<Self, GeomError> {
        if v.len() != grid.len() {
            return Err(GeomError::LengthMismatch { expected: grid.len(), got: v.len() });
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(GeomError::NonFinite(i));
        }
        let (du, d2u) = differentiate(&v, &grid);
        let u = v.iter().map(|x| x + offset).collect();
        Self::assemble(grid, u, du, d2u, source, eps)
    }

    /// Surface from a closed form `f(x) -> (u, Du, D²u)`.
    pub fn analytic<F>(grid: Arc<PolarGrid>, f: F) -> Result<Self, GeomError>
    where
        F: Fn([f64; 2]) -> (f64, [f64; 2], [f64; 3]) + Sync,
    {
        let vals: Vec<_> = grid.points().par_iter().map(|p| f(*p)).collect();
        let u = vals.iter().map(|v| v.0).collect();
        let du = vals.iter().map(|v| v.1).collect();
        let d2u = vals.iter().map(|v| v.2).collect();
        Self::assemble(grid, u, du, d2u, SurfaceSource::Analytic, SPACELIKE_EPS)
    }

    fn assemble(
        grid: Arc<PolarGrid>,
        u: Vec<f64>,
        du: Vec<[f64; 2]>,
        d2u: Vec<[f64; 3]>,
        source: SurfaceSource,
        eps: f64,
    ) -> Result<Self, GeomError> {
        if let Some((node, grad_norm)) = first_timelike(&du, eps) {
            return Err(GeomError::SpacelikeViolation { node, grad_norm });
        }
        let w = du.iter().map(|g| (1.0 - g[0] * g[0] - g[1] * g[1]).sqrt()).collect();
        Ok(Self { grid, u, du, d2u, w, source })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn du(&self) -> &[[f64; 2]] {
        &self.du
    }

    pub fn d2u(&self) -> &[[f64; 3]] {
        &self.d2u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn source(&self) -> SurfaceSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn derivs(&self, i: usize) -> Derivs {
        Derivs { grad: self.du[i], hess: self.d2u[i] }
    }

    /// Angle function `θ = −1/w`.
    pub fn angle(&self, i: usize) -> f64 {
        -1.0 / self.w[i]
    }

    pub fn min_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mean of `u` over the boundary ring.
    pub fn boundary_value(&self) -> f64 {
        let n = self.grid.n_phi() as f64;
        self.grid.boundary_nodes().map(|i| self.u[i]).sum::<f64>() / n
    }

    /// `|Du|` at the boundary nodes, indexed by angle.
    pub fn boundary_slope(&self) -> Vec<f64> {
        self.grid.boundary_nodes().map(|i| self.du[i][0].hypot(self.du[i][1])).collect()
    }
}

/// `u = c + θ₀ + √(1 + |x − a|²)` with closed-form derivatives, over a
/// disk of radius `√(θ₀² − 1)` centered at `a`.
pub fn hyperboloid_cap(c: f64, theta0: f64, a: [f64; 2], grid: Arc<PolarGrid>) -> Result<GraphSurface, GeomError> {
    if !(theta0 < -1.0) {
        return Err(GeomError::CapParameter(theta0));
    }
    let radius = (theta0 * theta0 - 1.0).sqrt();
    let dom = grid.domain();
    let ok = match dom.preset() {
        DomainPreset::Disk { radius: r } => {
            (r - radius).abs() <= 1e-10
                && (dom.center()[0] - a[0]).abs() <= 1e-10
                && (dom.center()[1] - a[1]).abs() <= 1e-10
        }
        _ => false,
    };
    if !ok {
        return Err(GeomError::CapDomain {
            expected: radius,
            got: format!("{:?} at {:?}", dom.preset(), dom.center()),
        });
    }
    GraphSurface::analytic(grid, move |x| cap_jet(c, theta0, a, x))
}

/// Height, gradient and Hessian of the cap at `x`.
pub fn cap_jet(c: f64, theta0: f64, a: [f64; 2], x: [f64; 2]) -> (f64, [f64; 2], [f64; 3]) {
    let (dx, dy) = (x[0] - a[0], x[1] - a[1]);
    let q = 1.0 + dx * dx + dy * dy;
    let r = q.sqrt();
    let r3 = q * r;
    (c + theta0 + r, [dx / r, dy / r], [1.0 / r - dx * dx / r3, -dx * dy / r3, 1.0 / r - dy * dy / r3])
}

#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub g: Vec<[f64; 3]>,
    pub g_inv: Vec<[f64; 3]>,
    pub h: Vec<[f64; 3]>,
    /// `shape[i][j][m] = h^j_m`.
    pub shape: Vec<[[f64; 2]; 2]>,
    /// Principal curvatures, ascending.
    pub lambda: Vec<[f64; 2]>,
    /// `[S₀, S₁, S₂]`.
    pub s: Vec<[f64; 3]>,
    pub hbar_sq: Vec<f64>,
    /// Largest `k` with `A ∈ Γ_k`.
    pub k_max: Vec<usize>,
}

impl CurvatureField {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn dim(&self) -> usize {
        GRID_DIM
    }

    pub fn shape_matrix(&self, i: usize) -> SquareMatrix {
        let a = &self.shape[i];
        SquareMatrix::from_rows(&[vec![a[0][0], a[0][1]], vec![a[1][0], a[1][1]]]).expect("finite 2x2 shape operator")
    }

    /// `S_k` at node `i`, with `S_k = 0` outside `0..=2`.
    pub fn s_k(&self, i: usize, k: isize) -> f64 {
        if (0..=2).contains(&k) {
            self.s[i][k as usize]
        } else {
            0.0
        }
    }
}

fn sym2_eigen(m: [f64; 3]) -> [f64; 2] {
    let mean = 0.5 * (m[0] + m[2]);
    let half = 0.5 * (m[0] - m[2]);
    let rad = half.hypot(m[1]);
    [mean - rad, mean + rad]
}

/// Metric, inverse metric, second fundamental form, shape operator and
/// principal curvatures at one node.
type NodeCurvature = ([f64; 3], [f64; 3], [f64; 3], [[f64; 2]; 2], [f64; 2]);

fn curvature_at(du: [f64; 2], d2u: [f64; 3], w: f64) -> NodeCurvature {
    let (p, q) = (du[0], du[1]);
    let w2 = w * w;
    let g = [1.0 - p * p, -p * q, 1.0 - q * q];
    let gi = [1.0 + p * p / w2, p * q / w2, 1.0 + q * q / w2];
    let h = [d2u[0] / w, d2u[1] / w, d2u[2] / w];
    let shape = [
        [gi[0] * h[0] + gi[1] * h[1], gi[0] * h[1] + gi[1] * h[2]],
        [gi[1] * h[0] + gi[2] * h[1], gi[1] * h[1] + gi[2] * h[2]],
    ];
    // C = sqrt(g^{-1}) = I + (1/w − 1) p̂p̂ᵀ
    let n2 = p * p + q * q;
    let c = if n2 > 0.0 {
        let f = (1.0 / w - 1.0) / n2;
        [1.0 + f * p * p, f * p * q, 1.0 + f * q * q]
    } else {
        [1.0, 0.0, 1.0]
    };
    // M = C h C
    let ch = [
        [c[0] * h[0] + c[1] * h[1], c[0] * h[1] + c[1] * h[2]],
        [c[1] * h[0] + c[2] * h[1], c[1] * h[1] + c[2] * h[2]],
    ];
    let m = [ch[0][0] * c[0] + ch[0][1] * c[1], ch[0][0] * c[1] + ch[0][1] * c[2], ch[1][0] * c[1] + ch[1][1] * c[2]];
    (g, gi, h, shape, sym2_eigen(m))
}

pub fn curvature_field(surf: &GraphSurface) -> CurvatureField {
    let n = surf.len();
    let per: Vec<_> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (g, gi, h, shape, lambda) = curvature_at(surf.du[i], surf.d2u[i], surf.w[i]);
            let s = [1.0, lambda[0] + lambda[1], lambda[0] * lambda[1]];
            let tr_a2 = shape[0][0] * shape[0][0] + 2.0 * shape[0][1] * shape[1][0] + shape[1][1] * shape[1][1];
            let hbar_sq = (tr_a2 - s[1] * s[1] / 2.0).max(0.0);
            let norm = lambda[0].hypot(lambda[1]);
            let k_max = symfunc::garding_from_values(s.to_vec(), norm).k_max;
            (g, gi, h, shape, lambda, s, hbar_sq, k_max)
        })
        .collect();
    let mut cf = CurvatureField {
        g: Vec::with_capacity(n),
        g_inv: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        shape: Vec::with_capacity(n),
        lambda: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        hbar_sq: Vec::with_capacity(n),
        k_max: Vec::with_capacity(n),
    };
    for (g, gi, h, shape, lambda, s, hb, k) in per {
        cf.g.push(g);
        cf.g_inv.push(gi);
        cf.h.push(h);
        cf.shape.push(shape);
        cf.lambda.push(lambda);
        cf.s.push(s);
        cf.hbar_sq.push(hb);
        cf.k_max.push(k);
    }
    cf
}

/// Max over nodes of `| |h̄|² − ((n−1)/n·S₁² − 2S₂) |`, where `|h̄|²` comes
/// from `tr(A²)` and the `S_k` from the spectrum.
pub fn trace_free_identity_check(cf: &CurvatureField) -> f64 {
    let n = cf.dim() as f64;
    (0..cf.len())
        .map(|i| {
            let a = &cf.shape[i];
            let tr_a2 = a[0][0] * a[0][0] + 2.0 * a[0][1] * a[1][0] + a[1][1] * a[1][1];
            let s = cf.s[i];
            let hbar = tr_a2 - s[1] * s[1] / n;
            let scale = 1.0_f64.max(tr_a2.abs());
            (hbar - ((n - 1.0) / n * s[1] * s[1] - 2.0 * s[2])).abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Max of `|g^{ij} g_{jk} − δ^i_k|` over nodes.
pub fn metric_inverse_residual(cf: &CurvatureField) -> f64 {
    cf.g.iter()
        .zip(&cf.g_inv)
        .map(|(g, gi)| {
            let e00 = gi[0] * g[0] + gi[1] * g[1] - 1.0;
            let e01 = gi[0] * g[1] + gi[1] * g[2];
            let e11 = gi[1] * g[1] + gi[2] * g[2] - 1.0;
            e00.abs().max(e01.abs()).max(e11.abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct PFieldGraph {
    pub p: Vec<f64>,
    pub dp: Vec<[f64; 2]>,
    pub grad_sq_metric: Vec<f64>,
    pub grad_sq_euclid: Vec<f64>,
}

/// `P = −u + 1/w` and `P_i = −u_i + h^s_i u_s`.
pub fn p_field_graph(surf: &GraphSurface, cf: &CurvatureField) -> PFieldGraph {
    let n = surf.len();
    let mut pf = PFieldGraph {
        p: Vec::with_capacity(n),
        dp: Vec::with_capacity(n),
        grad_sq_metric: Vec::with_capacity(n),
        grad_sq_euclid: Vec::with_capacity(n),
    };
    for i in 0..n {
        let du = surf.du[i];
        let a = &cf.shape[i];
        let dp = [-du[0] + a[0][0] * du[0] + a[1][0] * du[1], -du[1] + a[0][1] * du[0] + a[1][1] * du[1]];
        let gi = cf.g_inv[i];
        pf.p.push(-surf.u[i] + 1.0 / surf.w[i]);
        pf.grad_sq_metric.push(gi[0] * dp[0] * dp[0] + 2.0 * gi[1] * dp[0] * dp[1] + gi[2] * dp[1] * dp[1]);
        pf.grad_sq_euclid.push(dp[0] * dp[0] + dp[1] * dp[1]);
        pf.dp.push(dp);
    }
    pf
}

#[derive(Debug, Clone)]
pub struct PFieldConvex {
    /// `φ = (x, u(x))`.
    pub position: Vec<[f64; 3]>,
    pub phi_phi: Vec<f64>,
    pub phi_normal: Vec<f64>,
    pub p: Vec<f64>,
    /// Whether `φ` and `e₃` both lie in the closed upper causal cone, where
    /// `⟨φ, e₃⟩ < 0` is guaranteed.
    pub causal_config: Vec<bool>,
}

/// `P = ½⟨φ,φ⟩ − ⟨φ,e₃⟩` with `e₃ = (Du, 1)/w`.
pub fn p_field_convex(surf: &GraphSurface) -> PFieldConvex {
    let n = surf.len();
    let mut pf = PFieldConvex {
        position: Vec::with_capacity(n),
        phi_phi: Vec::with_capacity(n),
        phi_normal: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        causal_config: Vec::with_capacity(n),
    };
    for i in 0..n {
        let x = surf.grid.points()[i];
        let phi = [x[0], x[1], surf.u[i]];
        let w = surf.w[i];
        let e = [surf.du[i][0] / w, surf.du[i][1] / w, 1.0 / w];
        let pp = minkowski_inner(&phi, &phi).expect("equal lengths");
        let pe = minkowski_inner(&phi, &e).expect("equal lengths");
        pf.position.push(phi);
        pf.phi_phi.push(pp);
        pf.phi_normal.push(pe);
        pf.p.push(0.5 * pp - pe);
        pf.causal_config.push(phi[2] > 0.0 && pp <= 0.0);
    }
    pf
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaReport {
    pub k: usize,
    pub per_node: Vec<bool>,
    pub all: bool,
}

pub fn gamma_k_report(cf: &CurvatureField, k: usize) -> GammaReport {
    let per_node: Vec<bool> = cf.k_max.iter().map(|&m| m >= k).collect();
    let all = per_node.iter().all(|b| *b);
    GammaReport { k, per_node, all }
}

fn component_gradients(cf: &CurvatureField, grid: &PolarGrid) -> [[Vec<[f64; 2]>; 2]; 2] {
    let diff = grid.differentiator();
    let field = |j: usize, m: usize| -> Vec<[f64; 2]> {
        let v: Vec<f64> = cf.shape.iter().map(|a| a[j][m]).collect();
        diff.gradient(&v)
    };
    [[field(0, 0), field(0, 1)], [field(1, 0), field(1, 1)]]
}

/// Max over interior nodes of `|∂_m h^j_i − ∂_i h^j_m|`, differencing the
/// shape-operator field on the grid.
pub fn codazzi_residual(cf: &CurvatureField, grid: &PolarGrid) -> f64 {
    let d = component_gradients(cf, grid);
    (0..grid.len())
        .filter(|&i| !grid.is_boundary(i))
        .map(|i| {
            // ∂₂ h^j_1 − ∂₁ h^j_2 for j = 1, 2
            (0..2).map(|j| (d[j][0][i][1] - d[j][1][i][0]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Max over interior nodes and `j` of `|Σ_i ∂_i (S_k)^i_j|` for `k ∈ {1, 2}`.
pub fn newton_divergence_residual(cf: &CurvatureField, grid: &PolarGrid, k: usize) -> f64 {
    assert!((1..=2).contains(&k), "k must be 1 or 2 on planar grids");
    if k == 1 {
        // (S₁)^i_j = δ^i_j
        return 0.0;
    }
    let d = component_gradients(cf, grid);
    let diff = grid.differentiator();
    let ds1 = diff.gradient(&cf.s.iter().map(|s| s[1]).collect::<Vec<_>>());
    // (S₂)^i_j = S₁ δ^i_j − h^i_j
    (0..grid.len())
        .filter(|&i| !grid.is_boundary(i))
        .map(|n| (0..2).map(|j| (ds1[n][j] - d[0][j][n][0] - d[1][j][n][1]).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_grid, StarDomain};
    use std::f64::consts::SQRT_2;

    fn disk_grid(r: f64, n_r: usize) -> Arc<PolarGrid> {
        Arc::new(make_grid(&StarDomain::disk(r).unwrap(), n_r, 2 * n_r).unwrap())
    }

    #[test]
    fn minkowski_examples() {
        assert_eq!(minkowski_inner(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap(), -1.0);
        assert_eq!(minkowski_inner(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(minkowski_inner(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(minkowski_inner(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cap_examples() {
        let g = disk_grid(1.0, 16);
        let cap = hyperboloid_cap(0.0, -SQRT_2, [0.0, 0.0], g.clone()).unwrap();
        assert!((cap_jet(0.0, -SQRT_2, [0.0; 2], [0.0; 2]).0 - (1.0 - SQRT_2)).abs() < 1e-15);
        for i in g.boundary_nodes() {
            assert!(cap.u()[i].abs() < 1e-12);
            let s = cap.du()[i][0].hypot(cap.du()[i][1]);
            assert!((s - 1.0 / SQRT_2).abs() < 1e-12);
            assert!((cap.angle(i) + SQRT_2).abs() < 1e-12);
        }
        let cf = curvature_field(&cap);
        for i in 0..cap.len() {
            let a = cf.shape[i];
            assert!((a[0][0] - 1.0).abs() < 1e-10 && a[0][1].abs() < 1e-10);
            assert!(a[1][0].abs() < 1e-10 && (a[1][1] - 1.0).abs() < 1e-10);
            assert!((cf.s[i][1] - 2.0).abs() < 1e-10 && (cf.s[i][2] - 1.0).abs() < 1e-10);
            assert!(cf.hbar_sq[i] < 1e-10);
        }
        assert!(gamma_k_report(&cf, 2).all);
        let pf = p_field_graph(&cap, &cf);
        for i in 0..cap.len() {
            assert!((pf.p[i] - SQRT_2).abs() < 1e-12);
            assert!(pf.dp[i][0].abs() < 1e-12 && pf.dp[i][1].abs() < 1e-12);
        }
    }

    #[test]
    fn cap_parameter_errors() {
        let g = disk_grid(1.0, 8);
        assert_eq!(hyperboloid_cap(0.0, -1.0, [0.0; 2], g.clone()).unwrap_err(), GeomError::CapParameter(-1.0));
        assert!(matches!(hyperboloid_cap(0.0, -2.0, [0.0; 2], g.clone()), Err(GeomError::CapDomain { .. })));
        assert!(matches!(hyperboloid_cap(0.0, -SQRT_2, [0.1, 0.0], g), Err(GeomError::CapDomain { .. })));
        let g3 = disk_grid(3f64.sqrt(), 8);
        assert!(hyperboloid_cap(1.0, -2.0, [0.0; 2], g3).is_ok());
    }

    #[test]
    fn flat_and_tilted() {
        let g = disk_grid(2.0, 10);
        let flat = GraphSurface::from_samples(g.clone(), vec![0.7; g.len()], SurfaceSource::Sampled).unwrap();
        let cf = curvature_field(&flat);
        let pf = p_field_graph(&flat, &cf);
        for i in 0..flat.len() {
            assert!(cf.s[i][1].abs() < 1e-9 && cf.s[i][2].abs() < 1e-9);
            assert!((pf.p[i] - (1.0 - 0.7)).abs() < 1e-12);
        }
        assert!(!gamma_k_report(&cf, 1).all);
        let u: Vec<f64> = g.points().iter().map(|p| 0.3 * p[0]).collect();
        let tilted = GraphSurface::from_samples(g.clone(), u, SurfaceSource::Sampled).unwrap();
        let cf = curvature_field(&tilted);
        for i in 0..tilted.len() {
            assert!((cf.g[i][0] - 0.91).abs() < 1e-12);
            for r in cf.shape[i] {
                assert!(r[0].abs() < 1e-8 && r[1].abs() < 1e-8);
            }
        }
        let pc = p_field_convex(&tilted);
        let spread =
            pc.p.iter().copied().fold(f64::NEG_INFINITY, f64::max) - pc.p.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread > 0.1);
    }

    #[test]
    fn timelike_samples_rejected() {
        let g = disk_grid(1.0, 8);
        let u: Vec<f64> = g.points().iter().map(|p| 1.5 * p[0]).collect();
        assert!(matches!(
            GraphSurface::from_samples(g, u, SurfaceSource::Sampled),
            Err(GeomError::SpacelikeViolation { .. })
        ));
    }

    #[test]
    fn trace_free_identity_examples() {
        let mk = |lambda: [f64; 2]| CurvatureField {
            g: vec![[1.0, 0.0, 1.0]],
            g_inv: vec![[1.0, 0.0, 1.0]],
            h: vec![[lambda[0], 0.0, lambda[1]]],
            shape: vec![[[lambda[0], 0.0], [0.0, lambda[1]]]],
            lambda: vec![lambda],
            s: vec![[1.0, lambda[0] + lambda[1], lambda[0] * lambda[1]]],
            hbar_sq: vec![0.0],
            k_max: vec![2],
        };
        assert!(trace_free_identity_check(&mk([1.0, 2.0])) < 1e-15);
        assert!(trace_free_identity_check(&mk([1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn unit_hyperboloid_convex_p() {
        let g = disk_grid(1.0, 12);
        let surf = GraphSurface::analytic(g, |x| cap_jet(SQRT_2, -SQRT_2, [0.0; 2], x)).unwrap();
        let pc = p_field_convex(&surf);
        for i in 0..surf.len() {
            assert!((pc.phi_phi[i] + 1.0).abs() < 1e-12);
            assert!((pc.phi_normal[i] + 1.0).abs() < 1e-12);
            assert!((pc.p[i] - 0.5).abs() < 1e-12);
            assert!(pc.causal_config[i]);
        }
    }

    #[test]
    fn sampled_cap_converges_at_second_order() {
        let mut errs = Vec::new();
        let mut shape_errs = Vec::new();
        for n_r in [16, 32] {
            let g = disk_grid(1.0, n_r);
            let exact = hyperboloid_cap(0.0, -SQRT_2, [0.0; 2], g.clone()).unwrap();
            let sampled = GraphSurface::from_samples(g, exact.u().to_vec(), SurfaceSource::Sampled).unwrap();
            let mut e: f64 = 0.0;
            for i in 0..exact.len() {
                for a in 0..2 {
                    e = e.max((exact.du()[i][a] - sampled.du()[i][a]).abs());
                }
                for a in 0..3 {
                    e = e.max((exact.d2u()[i][a] - sampled.d2u()[i][a]).abs());
                }
            }
            errs.push(e);
            let cf = curvature_field(&sampled);
            assert!(trace_free_identity_check(&cf) < 1e-10);
            assert!(metric_inverse_residual(&cf) < 1e-10);
            let se = cf
                .shape
                .iter()
                .map(|a| (a[0][0] - 1.0).abs().max(a[0][1].abs()).max(a[1][0].abs()).max((a[1][1] - 1.0).abs()))
                .fold(0.0, f64::max);
            shape_errs.push(se);
        }
        assert!((errs[0] / errs[1]).log2() >= 1.8, "{errs:?}");
        assert!((shape_errs[0] / shape_errs[1]).log2() >= 1.8, "{shape_errs:?}");
    }

    fn wavy(x: [f64; 2]) -> (f64, [f64; 2], [f64; 3]) {
        // a non-umbilic spacelike graph
        let (a, b) = (0.25, 0.15);
        let u = a * x[0] * x[0] + b * x[0] * x[1] * x[1] + 0.1 * x[1];
        let du = [2.0 * a * x[0] + b * x[1] * x[1], 2.0 * b * x[0] * x[1] + 0.1];
        let d2u = [2.0 * a, 2.0 * b * x[1], 2.0 * b * x[0]];
        (u, du, d2u)
    }

    #[test]
    fn codazzi_and_newton_divergence_vanish_under_refinement() {
        let mut cod = Vec::new();
        let mut div = Vec::new();
        for n_r in [16, 32] {
            let g = Arc::new(make_grid(&StarDomain::ellipse(1.0, 1.2).unwrap(), n_r, 2 * n_r).unwrap());
            let surf = GraphSurface::analytic(g.clone(), wavy).unwrap();
            let cf = curvature_field(&surf);
            cod.push(codazzi_residual(&cf, &g));
            div.push(newton_divergence_residual(&cf, &g, 2));
            assert_eq!(newton_divergence_residual(&cf, &g, 1), 0.0);
            let cap_g = disk_grid(1.0, n_r);
            let cap = hyperboloid_cap(0.0, -SQRT_2, [0.0; 2], cap_g.clone()).unwrap();
            let sampled = GraphSurface::from_samples(cap_g.clone(), cap.u().to_vec(), SurfaceSource::Sampled).unwrap();
            let ccf = curvature_field(&sampled);
            assert!(codazzi_residual(&ccf, &cap_g) < 0.1);
        }
        assert!((cod[0] / cod[1]).log2() >= 1.0, "{cod:?}");
        assert!((div[0] / div[1]).log2() >= 1.0, "{div:?}");
    }

    #[test]
    fn angle_function_bound() {
        let g = Arc::new(make_grid(&StarDomain::ellipse(1.0, 1.2).unwrap(), 12, 24).unwrap());
        let surf = GraphSurface::analytic(g, wavy).unwrap();
        for i in 0..surf.len() {
            assert!(surf.angle(i) <= -1.0);
        }
    }
}
