//! Damped Newton solver for `div(Du/√(1 − |Du|²)) = H` with `u = c` on `∂Ω`,
//! plus the exact radial solution.
//!
//! The discrete operator at an interior node is `tr A` computed from the
//! finite-difference gradient and Hessian, identical to
//! [`crate::graphgeom::curvature_field`]. Boundary rows impose `u − c`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::banded::{BandError, BandMatrix};
use crate::domain::PolarGrid;
use crate::graphgeom::{first_timelike, GeomError, GraphSurface, SurfaceSource, GRID_DIM, SPACELIKE_EPS};
use crate::stencil::Derivs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialGuess {
    Flat,
    /// `c + scale·(√(1+r²s²) − √(1+r²))` in the mapped radius `s`, with `r`
    /// the inscribed radius; equals `c` on `∂Ω`.
    ScaledCap {
        scale: f64,
    },
    Custom {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Right-hand side; `None` means the base dimension `n`.
    pub target_rhs: Option<f64>,
    pub boundary_value: f64,
    pub max_newton_iters: usize,
    pub residual_tol: f64,
    pub damping: f64,
    pub spacelike_eps: f64,
    pub min_step: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            target_rhs: None,
            boundary_value: 0.0,
            max_newton_iters: 50,
            residual_tol: 1e-10,
            damping: 0.5,
            spacelike_eps: SPACELIKE_EPS,
            min_step: 1e-8,
            initial_guess: InitialGuess::Flat,
        }
    }
}

impl SolverConfig {
    pub fn rhs(&self) -> f64 {
        self.target_rhs.unwrap_or(GRID_DIM as f64)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.residual_tol > 0.0) {
            return bad("residual_tol must be positive");
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return bad("damping must lie in (0, 1)");
        }
        if !(self.spacelike_eps > 0.0 && self.spacelike_eps < 1.0) {
            return bad("spacelike_eps must lie in (0, 1)");
        }
        if !(self.min_step > 0.0 && self.min_step < 1.0) {
            return bad("min_step must lie in (0, 1)");
        }
        if !self.boundary_value.is_finite() || !self.rhs().is_finite() {
            return bad("boundary value and rhs must be finite");
        }
        if let InitialGuess::ScaledCap { scale } = self.initial_guess {
            if !(scale > 0.0 && scale <= 1.0) {
                return bad("scaled cap factor must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Max-norm residual before each step and after the last.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    pub damping_events: usize,
    pub min_w: f64,
    pub converged: bool,
    pub rhs: f64,
    pub boundary_value: f64,
    pub surface: GraphSurface,
}

impl SolveReport {
    /// Flat key/value record.
    pub fn to_record(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("converged".into(), json!(self.converged));
        m.insert("iterations".into(), json!(self.iterations));
        m.insert("final_residual".into(), json!(self.final_residual));
        m.insert("damping_events".into(), json!(self.damping_events));
        m.insert("min_w".into(), json!(self.min_w));
        m.insert("rhs".into(), json!(self.rhs));
        m.insert("boundary_value".into(), json!(self.boundary_value));
        m.insert("n_r".into(), json!(self.surface.grid().n_r()));
        m.insert("n_phi".into(), json!(self.surface.grid().n_phi()));
        m.insert(
            "residual_history".into(),
            json!(self.residual_history.iter().map(|r| format!("{r:.6e}")).collect::<Vec<_>>().join(";")),
        );
        m
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial guess rejected: {0}")]
    InitialGuess(GeomError),
    #[error("Newton iteration did not converge in {} iterations (residual {:.3e})", .0.iterations, .0.final_residual)]
    NonConvergence(Box<SolveReport>),
    #[error("no admissible spacelike step above the minimum step length (residual {:.3e})", .0.final_residual)]
    SpacelikeBreakdown(Box<SolveReport>),
    #[error("linear solve failed: {0}")]
    Linear(#[from] BandError),
}

impl SolveError {
    /// Last accepted iterate, when the failure happened during iteration.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            SolveError::NonConvergence(r) | SolveError::SpacelikeBreakdown(r) => Some(r),
            _ => None,
        }
    }
}

/// `tr A = g^{ij} u_ij / w` from a gradient and packed Hessian.
pub fn mean_curvature_trace(d: &Derivs) -> f64 {
    let [p, q] = d.grad;
    let [hxx, hxy, hyy] = d.hess;
    let w2 = 1.0 - p * p - q * q;
    let w = w2.sqrt();
    ((1.0 + p * p / w2) * hxx + 2.0 * p * q / w2 * hxy + (1.0 + q * q / w2) * hyy) / w
}

/// `S₁ − rhs` at interior nodes, zero at boundary nodes.
pub fn cmc_residual(surf: &GraphSurface, rhs: f64) -> Vec<f64> {
    let grid = surf.grid();
    (0..surf.len())
        .map(|i| if grid.is_boundary(i) { 0.0 } else { mean_curvature_trace(&surf.derivs(i)) - rhs })
        .collect()
}

/// Position of node `(ring, k)` in the banded ordering. Angles are
/// interleaved `0, 1, n−1, 2, n−2, …` so that periodic neighbors stay close.
fn band_position(grid: &PolarGrid, idx: usize) -> usize {
    let n = grid.n_phi();
    let (ring, k) = grid.ring_and_angle(idx);
    let pos = if k == 0 {
        0
    } else if k <= n / 2 {
        2 * k - 1
    } else {
        2 * (n - k)
    };
    ring * n + pos
}

struct System<'a> {
    grid: &'a PolarGrid,
    rhs: f64,
    c: f64,
    perm: Vec<usize>,
    kl: usize,
    ku: usize,
}

impl<'a> System<'a> {
    fn new(grid: &'a PolarGrid, rhs: f64, c: f64) -> Self {
        let perm: Vec<usize> = (0..grid.len()).map(|i| band_position(grid, i)).collect();
        let diff = grid.differentiator();
        let (mut kl, mut ku) = (0, 0);
        for i in 0..grid.len() {
            if grid.is_boundary(i) {
                continue;
            }
            for &q in &diff.stencil(i).neighbors {
                let (r, c) = (perm[i], perm[q]);
                if c > r {
                    ku = ku.max(c - r);
                } else {
                    kl = kl.max(r - c);
                }
            }
        }
        Self { grid, rhs, c, perm, kl, ku }
    }

    fn residual(&self, v: &[f64], offset: f64, d: &[Derivs]) -> Vec<f64> {
        let target = self.c - offset;
        (0..v.len())
            .into_par_iter()
            .map(|i| if self.grid.is_boundary(i) { v[i] - target } else { mean_curvature_trace(&d[i]) - self.rhs })
            .collect()
    }

    fn jacobian(&self, d: &[Derivs]) -> Result<BandMatrix, BandError> {
        let diff = self.grid.differentiator();
        let n = self.grid.len();
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                if self.grid.is_boundary(i) {
                    return vec![(i, 1.0)];
                }
                let [p0, p1] = d[i].grad;
                let [hxx, hxy, hyy] = d[i].hess;
                let w2 = 1.0 - p0 * p0 - p1 * p1;
                let w = w2.sqrt();
                let (w3, w5) = (w2 * w, w2 * w2 * w);
                // a^{ij} = δ/w + p_i p_j / w³
                let a = [1.0 / w + p0 * p0 / w3, p0 * p1 / w3, 1.0 / w + p1 * p1 / w3];
                // b_k = ∂a^{ij}/∂p_k u_ij
                let tr = hxx + hyy;
                let hp = [hxx * p0 + hxy * p1, hxy * p0 + hyy * p1];
                let php = p0 * hp[0] + p1 * hp[1];
                let b = [
                    p0 * tr / w3 + 2.0 * hp[0] / w3 + 3.0 * php * p0 / w5,
                    p1 * tr / w3 + 2.0 * hp[1] / w3 + 3.0 * php * p1 / w5,
                ];
                let st = diff.stencil(i);
                st.neighbors
                    .iter()
                    .enumerate()
                    .map(|(m, &q)| {
                        let h = st.hess[m];
                        let g = st.grad[m];
                        (q, a[0] * h[0] + 2.0 * a[1] * h[1] + a[2] * h[2] + b[0] * g[0] + b[1] * g[1])
                    })
                    .collect()
            })
            .collect();
        let mut jac = BandMatrix::zeros(n, self.kl, self.ku);
        for (i, row) in rows.into_iter().enumerate() {
            for (q, v) in row {
                jac.add(self.perm[i], self.perm[q], v)?;
            }
        }
        Ok(jac)
    }

    fn newton_step(&self, d: &[Derivs], f: &[f64]) -> Result<Vec<f64>, BandError> {
        let lu = self.jacobian(d)?.factor()?;
        let mut b = vec![0.0; f.len()];
        for (i, v) in f.iter().enumerate() {
            b[self.perm[i]] = -v;
        }
        lu.solve(&mut b)?;
        Ok((0..f.len()).map(|i| b[self.perm[i]]).collect())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn initial_values(grid: &PolarGrid, cfg: &SolverConfig) -> Result<Vec<f64>, SolveError> {
    let c = cfg.boundary_value;
    match &cfg.initial_guess {
        InitialGuess::Flat => Ok(vec![c; grid.len()]),
        InitialGuess::ScaledCap { scale } => {
            // cap profile in the mapped radius s, with the inscribed radius
            let r_in = (0..grid.n_phi()).map(|k| grid.domain().rho(grid.phi(k))).fold(f64::INFINITY, f64::min);
            Ok((0..grid.len())
                .map(|i| {
                    let s = grid.s(grid.ring_and_angle(i).0).min(1.0);
                    c + scale * ((1.0 + r_in * r_in * s * s).sqrt() - (1.0 + r_in * r_in).sqrt())
                })
                .collect())
        }
        InitialGuess::Custom { values } => {
            if values.len() != grid.len() {
                return Err(SolveError::InitialGuess(GeomError::LengthMismatch {
                    expected: grid.len(),
                    got: values.len(),
                }));
            }
            Ok(values.clone())
        }
    }
}

pub fn newton_solve(grid: Arc<PolarGrid>, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let rhs = cfg.rhs();
    let c = cfg.boundary_value;
    let sys = System::new(&grid, rhs, c);
    let diff = grid.differentiator();

    // The iterate is held as `offset + v` with `v` zero at the first node.
    // Values near the center then carry full relative precision, which the
    // strongly scaled angular stencils there need to resolve 1e-10.
    let u0 = initial_values(&grid, cfg)?;
    let mut offset = u0[0];
    let mut v: Vec<f64> = u0.iter().map(|x| x - offset).collect();
    let mut d = diff.derivs(&v);
    if let Some((node, grad_norm)) = first_timelike(&d.iter().map(|x| x.grad).collect::<Vec<_>>(), cfg.spacelike_eps) {
        return Err(SolveError::InitialGuess(GeomError::SpacelikeViolation { node, grad_norm }));
    }
    let mut f = sys.residual(&v, offset, &d);
    let mut history = vec![max_abs(&f)];
    let mut damping_events = 0;
    let mut iterations = 0;
    let mut breakdown = false;

    while *history.last().unwrap() > cfg.residual_tol && iterations < cfg.max_newton_iters {
        let delta = sys.newton_step(&d, &f)?;
        let norm0 = l2(&f);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha >= cfg.min_step {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + alpha * b).collect();
            let td = diff.derivs(&trial);
            let spacelike = first_timelike(&td.iter().map(|x| x.grad).collect::<Vec<_>>(), cfg.spacelike_eps).is_none();
            if spacelike {
                let tf = sys.residual(&trial, offset, &td);
                if l2(&tf) < norm0 {
                    accepted = Some((trial, td, tf));
                    break;
                }
            }
            alpha *= cfg.damping;
            damping_events += 1;
        }
        iterations += 1;
        match accepted {
            Some((nv, nd, nf)) => {
                let shift = nv[0];
                offset += shift;
                v = nv.iter().map(|x| x - shift).collect();
                d = nd;
                f = nf;
                history.push(max_abs(&f));
            }
            None => {
                breakdown = true;
                break;
            }
        }
    }

    let final_residual = *history.last().unwrap();
    let surface = GraphSurface::from_offset_samples(grid.clone(), v, offset, SurfaceSource::Solved, cfg.spacelike_eps)
        .map_err(SolveError::InitialGuess)?;
    let report = SolveReport {
        iterations,
        residual_history: history,
        final_residual,
        damping_events,
        min_w: surface.min_w(),
        converged: final_residual <= cfg.residual_tol,
        rhs,
        boundary_value: c,
        surface,
    };
    if report.converged {
        Ok(report)
    } else if breakdown {
        Err(SolveError::SpacelikeBreakdown(Box::new(report)))
    } else {
        Err(SolveError::NonConvergence(Box::new(report)))
    }
}

/// `u(r) = c − √(1+R²) + √(1+r²)`, the rotationally symmetric solution of
/// `(r^{n−1} u′/w)′ = n r^{n−1}` on the ball of radius `R` in `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radius: f64,
    pub n: usize,
    pub c: f64,
}

pub fn radial_exact(radius: f64, n: usize, c: f64) -> Result<RadialProfile, SolveError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(SolveError::InvalidConfig(format!("radius must be positive, got {radius}")));
    }
    Ok(RadialProfile { radius, n, c })
}

impl RadialProfile {
    pub fn u(&self, r: f64) -> f64 {
        self.c - (1.0 + self.radius * self.radius).sqrt() + (1.0 + r * r).sqrt()
    }

    pub fn du(&self, r: f64) -> f64 {
        r / (1.0 + r * r).sqrt()
    }

    pub fn w(&self, r: f64) -> f64 {
        1.0 / (1.0 + r * r).sqrt()
    }

    /// `u′/w`, equal to `r`.
    pub fn flux(&self, r: f64) -> f64 {
        self.du(r) / self.w(r)
    }

    /// `θ = −1/w` at `r = R`.
    pub fn boundary_angle(&self) -> f64 {
        -(1.0 + self.radius * self.radius).sqrt()
    }

    /// Equivalent cap parameter `θ₀ = −√(1+R²)`.
    pub fn theta0(&self) -> f64 {
        self.boundary_angle()
    }
}
