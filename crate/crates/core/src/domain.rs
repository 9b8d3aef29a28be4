//! Star-shaped planar domains, their mapped polar grids and boundary
//! geometry.
//!
//! A domain is described by a positive, 2π-periodic boundary radius `ρ(φ)`
//! about a center. Grid nodes sit at `x = center + R(s, φ)·(cos φ, sin φ)`
//! with `R(s, φ) = s·E(φ) + s²·O(φ)`, where `E` and `O` are the parts of `ρ`
//! that are even and odd under `φ ↦ φ + π`. For domains symmetric about the
//! center (disks, ellipses) this is the plain polar map `R = s·ρ(φ)`; the odd
//! part is bent so that the map continues smoothly through the center, which
//! is what the cross-center finite-difference stencils rely on.
//!
//! The radial nodes are staggered, `s_j = (j + ½)·Δs` with `Δs = 1/(n_r − ½)`,
//! so the last ring lies on `∂Ω` and no node sits on the center.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stencil::Differentiator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("radius parameter {name}={value} must be positive")]
    NonPositiveRadius { name: &'static str, value: f64 },
    #[error("Fourier boundary radius is not positive (min sampled value {min})")]
    NonPositiveFourier { min: f64 },
    #[error("grid too small: n_r={n_r} (>= 8), n_phi={n_phi} (>= 16, even)")]
    GridTooSmall { n_r: usize, n_phi: usize },
    #[error("grid path requires ambient dimension 2, got {0}")]
    AmbientDimension(usize),
    #[error("polar map folds over (min radial derivative {0})")]
    FoldedMap(f64),
    #[error("ambient dimension must be at least 2, got {0}")]
    BadDimension(usize),
}

/// Truncated Fourier series `ρ(φ) = mean + Σ_m (cos_m cos mφ + sin_m sin mφ)`,
/// with `cos[m−1]`, `sin[m−1]` holding the coefficients of mode `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    pub mean: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierCoeffs {
    /// `mean + amplitude·cos(mode·φ)`.
    pub fn single_mode(mean: f64, mode: usize, amplitude: f64) -> Self {
        let mut cos = vec![0.0; mode.max(1)];
        if mode >= 1 {
            cos[mode - 1] = amplitude;
        }
        Self { mean, cos, sin: Vec::new() }
    }
}

/// Boundary radius presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainPreset {
    Disk { radius: f64 },
    Ellipse { a: f64, b: f64 },
    Fourier(FourierCoeffs),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarDomain {
    center: [f64; 2],
    preset: DomainPreset,
    n_ambient: usize,
}

/// Angular sample count used to validate Fourier radii.
const FOURIER_CHECK_SAMPLES: usize = 4096;

pub fn make_domain(preset: DomainPreset, center: [f64; 2]) -> Result<StarDomain, DomainError> {
    match &preset {
        DomainPreset::Disk { radius } => positive("radius", *radius)?,
        DomainPreset::Ellipse { a, b } => {
            positive("a", *a)?;
            positive("b", *b)?;
        }
        DomainPreset::Fourier(c) => {
            let min = (0..FOURIER_CHECK_SAMPLES)
                .map(|i| fourier_eval(c, 2.0 * PI * i as f64 / FOURIER_CHECK_SAMPLES as f64).0)
                .fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(DomainError::NonPositiveFourier { min });
            }
        }
    }
    Ok(StarDomain { center, preset, n_ambient: 2 })
}

fn positive(name: &'static str, value: f64) -> Result<(), DomainError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DomainError::NonPositiveRadius { name, value })
    }
}

fn fourier_eval(c: &FourierCoeffs, phi: f64) -> (f64, f64, f64) {
    let (mut r, mut d1, mut d2) = (c.mean, 0.0, 0.0);
    for (i, a) in c.cos.iter().enumerate() {
        let m = (i + 1) as f64;
        let (s, co) = (m * phi).sin_cos();
        r += a * co;
        d1 -= a * m * s;
        d2 -= a * m * m * co;
    }
    for (i, b) in c.sin.iter().enumerate() {
        let m = (i + 1) as f64;
        let (s, co) = (m * phi).sin_cos();
        r += b * s;
        d1 += b * m * co;
        d2 -= b * m * m * s;
    }
    (r, d1, d2)
}

impl StarDomain {
    pub fn disk(radius: f64) -> Result<Self, DomainError> {
        make_domain(DomainPreset::Disk { radius }, [0.0, 0.0])
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self, DomainError> {
        make_domain(DomainPreset::Ellipse { a, b }, [0.0, 0.0])
    }

    pub fn fourier(coeffs: FourierCoeffs) -> Result<Self, DomainError> {
        make_domain(DomainPreset::Fourier(coeffs), [0.0, 0.0])
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    /// Ambient dimension used by the radial (ball) path and the reference
    /// constants. Grids are only built for dimension 2.
    pub fn with_ambient_dim(mut self, n: usize) -> Result<Self, DomainError> {
        if n < 2 {
            return Err(DomainError::BadDimension(n));
        }
        self.n_ambient = n;
        Ok(self)
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn preset(&self) -> &DomainPreset {
        &self.preset
    }

    pub fn n_ambient(&self) -> usize {
        self.n_ambient
    }

    /// `(ρ, ρ′, ρ″)` at angle `phi`.
    pub fn rho_derivs(&self, phi: f64) -> (f64, f64, f64) {
        match &self.preset {
            DomainPreset::Disk { radius } => (*radius, 0.0, 0.0),
            DomainPreset::Ellipse { a, b } => {
                let d = a * a - b * b;
                let (s, c) = phi.sin_cos();
                let q = b * b * c * c + a * a * s * s;
                let q1 = d * (2.0 * phi).sin();
                let q2 = 2.0 * d * (2.0 * phi).cos();
                let ab = a * b;
                let r = ab / q.sqrt();
                let r1 = -0.5 * ab * q.powf(-1.5) * q1;
                let r2 = 0.75 * ab * q.powf(-2.5) * q1 * q1 - 0.5 * ab * q.powf(-1.5) * q2;
                (r, r1, r2)
            }
            DomainPreset::Fourier(c) => fourier_eval(c, phi),
        }
    }

    pub fn rho(&self, phi: f64) -> f64 {
        self.rho_derivs(phi).0
    }

    /// Radial map `R(s, φ)` with its derivatives
    /// `(R, R_s, R_φ)`; see the module docs.
    pub fn radial_map(&self, s: f64, phi: f64) -> (f64, f64, f64) {
        let (rp, rp1, _) = self.rho_derivs(phi);
        let (rm, rm1, _) = self.rho_derivs(phi + PI);
        let (even, odd) = (0.5 * (rp + rm), 0.5 * (rp - rm));
        let (even1, odd1) = (0.5 * (rp1 + rm1), 0.5 * (rp1 - rm1));
        (s * even + s * s * odd, even + 2.0 * s * odd, s * even1 + s * s * odd1)
    }

    /// Physical point at mapped coordinates `(s, φ)`.
    pub fn map_point(&self, s: f64, phi: f64) -> [f64; 2] {
        let (r, _, _) = self.radial_map(s, phi);
        let (sn, cs) = phi.sin_cos();
        [self.center[0] + r * cs, self.center[1] + r * sn]
    }

    /// Exact area for the closed-form presets.
    pub fn exact_area(&self) -> Option<f64> {
        match &self.preset {
            DomainPreset::Disk { radius } => Some(PI * radius * radius),
            DomainPreset::Ellipse { a, b } => Some(PI * a * b),
            DomainPreset::Fourier(c) => {
                // ½∮ρ² dφ
                let sq: f64 = c.cos.iter().chain(&c.sin).map(|x| x * x).sum();
                Some(PI * (c.mean * c.mean + 0.5 * sq))
            }
        }
    }
}

/// Tensor-product grid in mapped coordinates with quadrature weights.
#[derive(Debug)]
pub struct PolarGrid {
    domain: StarDomain,
    n_r: usize,
    n_phi: usize,
    ds: f64,
    dphi: f64,
    points: Vec<[f64; 2]>,
    jacobian: Vec<f64>,
    interior_weights: Vec<f64>,
    boundary_weights: Vec<f64>,
    differentiator: OnceLock<Differentiator>,
}

impl Clone for PolarGrid {
    fn clone(&self) -> Self {
        Self {
            domain: self.domain.clone(),
            n_r: self.n_r,
            n_phi: self.n_phi,
            ds: self.ds,
            dphi: self.dphi,
            points: self.points.clone(),
            jacobian: self.jacobian.clone(),
            interior_weights: self.interior_weights.clone(),
            boundary_weights: self.boundary_weights.clone(),
            differentiator: OnceLock::new(),
        }
    }
}

pub fn make_grid(dom: &StarDomain, n_r: usize, n_phi: usize) -> Result<PolarGrid, DomainError> {
    if n_r < 8 || n_phi < 16 || !n_phi.is_multiple_of(2) {
        return Err(DomainError::GridTooSmall { n_r, n_phi });
    }
    if dom.n_ambient != 2 {
        return Err(DomainError::AmbientDimension(dom.n_ambient));
    }
    let ds = 1.0 / (n_r as f64 - 0.5);
    let dphi = 2.0 * PI / n_phi as f64;
    let mut points = Vec::with_capacity(n_r * n_phi);
    let mut jacobian = Vec::with_capacity(n_r * n_phi);
    let mut interior_weights = Vec::with_capacity(n_r * n_phi);
    let mut min_rs = f64::INFINITY;
    for j in 0..n_r {
        let s = (j as f64 + 0.5) * ds;
        // trapezoid in s; the segment [0, s_0] contributes s_0/2 because the
        // Jacobian vanishes at the center
        let ws = if j == 0 {
            0.75 * ds
        } else if j == n_r - 1 {
            0.5 * ds
        } else {
            ds
        };
        for k in 0..n_phi {
            let phi = k as f64 * dphi;
            let (r, r_s, _) = dom.radial_map(s, phi);
            min_rs = min_rs.min(r_s);
            let det = r * r_s;
            points.push(dom.map_point(s, phi));
            jacobian.push(det);
            interior_weights.push(ws * dphi * det);
        }
    }
    // the fold check also covers s = 1 where R_s is extremal for odd parts
    for k in 0..4 * n_phi {
        let phi = k as f64 * dphi / 4.0;
        min_rs = min_rs.min(dom.radial_map(1.0, phi).1);
    }
    if !(min_rs > 0.0) {
        return Err(DomainError::FoldedMap(min_rs));
    }
    let boundary_weights = (0..n_phi)
        .map(|k| {
            let (r, r1, _) = dom.rho_derivs(k as f64 * dphi);
            dphi * (r * r + r1 * r1).sqrt()
        })
        .collect();
    Ok(PolarGrid {
        domain: dom.clone(),
        n_r,
        n_phi,
        ds,
        dphi,
        points,
        jacobian,
        interior_weights,
        boundary_weights,
        differentiator: OnceLock::new(),
    })
}

impl PolarGrid {
    pub fn domain(&self) -> &StarDomain {
        &self.domain
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn dphi(&self) -> f64 {
        self.dphi
    }

    /// A representative mesh width, `max(Δs, Δφ)·ρ_max`-free: just `Δs`.
    pub fn h(&self) -> f64 {
        self.ds
    }

    pub fn index(&self, ring: usize, k: usize) -> usize {
        ring * self.n_phi + k
    }

    /// `(ring, angular index)` of a node.
    pub fn ring_and_angle(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_phi, idx % self.n_phi)
    }

    pub fn s(&self, ring: usize) -> f64 {
        (ring as f64 + 0.5) * self.ds
    }

    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * self.dphi
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        idx / self.n_phi == self.n_r - 1
    }

    pub fn boundary_index(&self, k: usize) -> usize {
        self.index(self.n_r - 1, k)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_phi).map(move |k| self.boundary_index(k))
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    pub fn interior_weights(&self) -> &[f64] {
        &self.interior_weights
    }

    /// Arclength weights, indexed by angular position on the boundary ring.
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().zip(&self.interior_weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate_fn<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        (0..self.len()).map(|i| f(i) * self.interior_weights[i]).sum()
    }

    /// Boundary integral of per-boundary-node values (indexed by angle).
    pub fn integrate_boundary(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_phi);
        values.iter().zip(&self.boundary_weights).map(|(v, w)| v * w).sum()
    }

    pub fn area(&self) -> f64 {
        self.interior_weights.iter().sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_weights.iter().sum()
    }

    /// Finite-difference operators on this grid, built on first use.
    pub fn differentiator(&self) -> &Differentiator {
        self.differentiator.get_or_init(|| Differentiator::new(self))
    }
}

/// Per-boundary-node geometry of `∂Ω`, indexed by angular position.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    pub normal: Vec<[f64; 2]>,
    pub curvature: Vec<f64>,
    pub arclength: Vec<f64>,
}

impl BoundaryGeometry {
    /// Mean curvature of `∂Ω`; for planar domains the curve curvature.
    pub fn mean_curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn min_curvature(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn boundary_geometry(dom: &StarDomain, n_phi: usize) -> BoundaryGeometry {
    let dphi = 2.0 * PI / n_phi as f64;
    let mut normal = Vec::with_capacity(n_phi);
    let mut curvature = Vec::with_capacity(n_phi);
    let mut arclength = Vec::with_capacity(n_phi);
    for k in 0..n_phi {
        let phi = k as f64 * dphi;
        let (r, r1, r2) = dom.rho_derivs(phi);
        let (s, c) = phi.sin_cos();
        let speed = (r * r + r1 * r1).sqrt();
        // tangent (r1 c − r s, r1 s + r c) rotated clockwise
        normal.push([(r1 * s + r * c) / speed, (r * s - r1 * c) / speed]);
        curvature.push((r * r + 2.0 * r1 * r1 - r * r2) / speed.powi(3));
        arclength.push(speed);
    }
    BoundaryGeometry { normal, curvature, arclength }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    pub area: f64,
    pub perimeter: f64,
    pub r0: f64,
    pub h0: f64,
}

/// `|Ω|`, `|∂Ω|`, `R₀ = n|Ω|/|∂Ω|` and `H₀ = 1/R₀` from the grid quadrature.
pub fn reference_constants(dom: &StarDomain, grid: &PolarGrid) -> ReferenceConstants {
    let area = grid.area();
    let perimeter = grid.perimeter();
    let r0 = dom.n_ambient() as f64 * area / perimeter;
    ReferenceConstants { area, perimeter, r0, h0: 1.0 / r0 }
}

/// Reference constants of the ball of radius `radius` in `ℝⁿ` (closed form).
pub fn ball_reference_constants(radius: f64, n: usize) -> ReferenceConstants {
    let nf = n as f64;
    // ω_n = π^{n/2}/Γ(n/2 + 1), via the recursion ω_n = 2π/n · ω_{n−2}
    let mut omega = if n.is_multiple_of(2) { 1.0 } else { 2.0 };
    let mut m = if n.is_multiple_of(2) { 0 } else { 1 };
    while m < n {
        m += 2;
        omega *= 2.0 * PI / m as f64;
    }
    let area = omega * radius.powi(n as i32);
    let perimeter = nf * omega * radius.powi(n as i32 - 1);
    let r0 = nf * area / perimeter;
    ReferenceConstants { area, perimeter, r0, h0: 1.0 / r0 }
}
