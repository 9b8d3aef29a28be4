//! Norms, measured constants and inequality margins of the quantitative
//! rigidity estimates, plus domain-family sweeps.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmc_solver::{newton_solve, SolveError, SolverConfig};
use crate::domain::{make_grid, DomainError, FourierCoeffs, StarDomain};
use crate::graphgeom::{GraphSurface, GRID_DIM};
use crate::identities::{eval_fundamental, GradientFlag, IdentityInput};

/// Margin tolerance as a multiple of the fundamental identity residual.
pub const TOL_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("empty sweep family")]
    EmptyFamily,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub area: f64,
    pub perimeter: f64,
    pub r0: f64,
    pub h0: f64,
    /// `(∫|h̄|² dx)^{1/2}`.
    pub hbar_l2: f64,
    /// `‖H₀ − H_∂Ω‖` in `L¹(∂Ω)`.
    pub def_l1: f64,
    pub def_inf: f64,
    /// `∫1/H_∂Ω dσ − n|Ω|`; NaN without mean convexity.
    pub hk_deficit: f64,
    /// `sup_∂Ω 1/w`.
    pub k_const: f64,
    /// `1 − sup_∂Ω |Du|`.
    pub theta: f64,
    pub h_min: f64,
    pub bound53: f64,
    pub margin53: f64,
    /// `((n−1)∫1/H dσ − n|Ω|)^{1/2}`.
    pub bound54a: f64,
    pub margin54a: f64,
    /// `((n−1)(∫1/H dσ − n|Ω|))^{1/2}`.
    pub bound54a_alt: f64,
    pub margin54a_alt: f64,
    /// `√(n−1)·‖1/H_∂Ω − √(θ²−1)‖^{1/2}_{L¹}`.
    pub bound54b: f64,
    pub margin54b: f64,
    pub bound54c: f64,
    pub margin54c: f64,
    /// `‖h̄‖_{L²}/‖H₀ − H_∂Ω‖^{1/2}_{L¹}`, zero when both vanish.
    pub rho: f64,
    /// Absolute residual of the fundamental identity (default flag).
    pub identity_residual: f64,
    pub tol: f64,
    pub mean_convex: bool,
}

impl StabilityReport {
    /// Stability margins that must be nonnegative within `tol`.
    pub fn margins(&self) -> Vec<(&'static str, f64)> {
        let mut m = vec![("margin53", self.margin53)];
        if self.mean_convex {
            m.push(("margin54a", self.margin54a));
            m.push(("margin54b", self.margin54b));
            m.push(("margin54c", self.margin54c));
        }
        m
    }

    pub fn margins_ok(&self) -> bool {
        self.margins().iter().all(|(_, v)| *v >= -self.tol)
    }
}

/// Square root with negatives below `−1e−12·scale` treated as roundoff.
fn sqrt_or_nan(x: f64, scale: f64) -> f64 {
    if x >= -1e-12 * scale {
        x.max(0.0).sqrt()
    } else {
        f64::NAN
    }
}

pub fn stability_report(surf: &GraphSurface) -> StabilityReport {
    let input = IdentityInput::new(surf).without_cmc_check();
    let grid = surf.grid();
    let n = GRID_DIM as f64;
    let rc = input.constants;
    let kap = &input.geometry.curvature;
    let hbar_l2 = grid.integrate(&input.cf.hbar_sq).max(0.0).sqrt();
    let dev: Vec<f64> = kap.iter().map(|k| (rc.h0 - k).abs()).collect();
    let def_l1 = grid.integrate_boundary(&dev);
    let def_inf = dev.iter().copied().fold(0.0, f64::max);
    let bnodes: Vec<usize> = grid.boundary_nodes().collect();
    let k_const = bnodes.iter().map(|&i| 1.0 / surf.w()[i]).fold(0.0, f64::max);
    let slope_max = surf.boundary_slope().into_iter().fold(0.0, f64::max);
    let theta = 1.0 - slope_max;
    let h_min = input.geometry.min_curvature();
    let mean_convex = h_min > 0.0;
    let bound53 = (n - 1.0).sqrt() * k_const * (1.0 - theta) * def_l1.sqrt();
    let fund = eval_fundamental(&input, GradientFlag::default());
    let (hk_deficit, bound54a, bound54a_alt, bound54b, bound54c) = if mean_convex {
        let inv: Vec<f64> = kap.iter().map(|k| 1.0 / k).collect();
        let int_inv = grid.integrate_boundary(&inv);
        let deficit = int_inv - n * rc.area;
        // √(θ²−1) with θ = −1/w equals |Du|/w on ∂Ω
        let gap: Vec<f64> = bnodes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let th = surf.angle(i);
                (inv[k] - (th * th - 1.0).max(0.0).sqrt()).abs()
            })
            .collect();
        (
            deficit,
            sqrt_or_nan((n - 1.0) * int_inv - n * rc.area, n * rc.area),
            sqrt_or_nan((n - 1.0) * deficit, n * rc.area),
            (n - 1.0).sqrt() * grid.integrate_boundary(&gap).sqrt(),
            (n * (n - 1.0) * rc.area / h_min).sqrt() * def_inf.sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    };
    let rho = if def_l1 > 1e-12 * rc.perimeter { hbar_l2 / def_l1.sqrt() } else { 0.0 };
    StabilityReport {
        area: rc.area,
        perimeter: rc.perimeter,
        r0: rc.r0,
        h0: rc.h0,
        hbar_l2,
        def_l1,
        def_inf,
        hk_deficit,
        k_const,
        theta,
        h_min,
        bound53,
        margin53: bound53 - hbar_l2,
        bound54a,
        margin54a: bound54a - hbar_l2,
        bound54a_alt,
        margin54a_alt: bound54a_alt - hbar_l2,
        bound54b,
        margin54b: bound54b - hbar_l2,
        bound54c,
        margin54c: bound54c - hbar_l2,
        rho,
        identity_residual: fund.residual,
        tol: TOL_FACTOR * fund.residual,
        mean_convex,
    }
}

/// A one-parameter family of domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SweepFamily {
    /// Ellipses with semi-axes `(1, ratio)`.
    Ellipse {
        ratios: Vec<f64>,
    },
    /// `ρ = 1 + amplitude·Σ_m (a_m cos mφ + b_m sin mφ)` with unit-norm
    /// `(a_m, b_m)` drawn once from `seed`.
    Fourier {
        amplitudes: Vec<f64>,
        modes: Vec<usize>,
        seed: u64,
    },
    Disk {
        radius: f64,
    },
}

impl SweepFamily {
    /// `b/a ∈ {1.0, 1.05, …, 1.5}`.
    pub fn default_ellipse() -> Self {
        SweepFamily::Ellipse { ratios: (0..=10).map(|i| 1.0 + 0.05 * i as f64).collect() }
    }

    pub fn members(&self) -> Result<Vec<(f64, StarDomain)>, StabilityError> {
        let out = match self {
            SweepFamily::Ellipse { ratios } => ratios
                .iter()
                .map(|&r| Ok((r, StarDomain::ellipse(1.0, r)?)))
                .collect::<Result<Vec<_>, DomainError>>()?,
            SweepFamily::Fourier { amplitudes, modes, seed } => {
                let top = modes.iter().copied().max().unwrap_or(0);
                let mut cos = vec![0.0; top];
                let mut sin = vec![0.0; top];
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for &m in modes {
                    if m == 0 {
                        continue;
                    }
                    let t = rng.random_range(0.0..2.0 * PI);
                    cos[m - 1] += t.cos();
                    sin[m - 1] += t.sin();
                }
                amplitudes
                    .iter()
                    .map(|&a| {
                        let c = FourierCoeffs {
                            mean: 1.0,
                            cos: cos.iter().map(|v| a * v).collect(),
                            sin: sin.iter().map(|v| a * v).collect(),
                        };
                        Ok((a, StarDomain::fourier(c)?))
                    })
                    .collect::<Result<Vec<_>, DomainError>>()?
            }
            SweepFamily::Disk { radius } => vec![(*radius, StarDomain::disk(*radius)?)],
        };
        if out.is_empty() {
            return Err(StabilityError::EmptyFamily);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub converged: bool,
    pub iterations: usize,
    pub report: Result<StabilityReport, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n_r: usize,
    pub n_phi: usize,
}

/// Solves and reports every member concurrently; rows keep family order.
pub fn domain_sweep(
    family: &SweepFamily,
    grid: SweepGrid,
    cfg: &SolverConfig,
) -> Result<Vec<SweepRow>, StabilityError> {
    let members = family.members()?;
    Ok(members
        .into_par_iter()
        .map(|(param, dom)| {
            let g = match make_grid(&dom, grid.n_r, grid.n_phi) {
                Ok(g) => Arc::new(g),
                Err(e) => return SweepRow { param, converged: false, iterations: 0, report: Err(e.to_string()) },
            };
            match newton_solve(g, cfg) {
                Ok(rep) => SweepRow {
                    param,
                    converged: true,
                    iterations: rep.iterations,
                    report: Ok(stability_report(&rep.surface)),
                },
                Err(e) => SweepRow {
                    param,
                    converged: false,
                    iterations: e.report().map(|r| r.iterations).unwrap_or(0),
                    report: Err(e.to_string()),
                },
            }
        })
        .collect())
}

pub const CSV_COLUMNS: [&str; 18] = [
    "family_param",
    "area",
    "perimeter",
    "R0",
    "H0",
    "hbar_L2",
    "defL1",
    "defInf",
    "hk_deficit",
    "K",
    "Theta",
    "bound53",
    "margin53",
    "bound54a",
    "margin54a",
    "bound54c",
    "margin54c",
    "converged",
];

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// Sweep table with the fixed column set; failed members get NaN fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for row in rows {
        let vals: Vec<String> = match &row.report {
            Ok(r) => [
                r.area,
                r.perimeter,
                r.r0,
                r.h0,
                r.hbar_l2,
                r.def_l1,
                r.def_inf,
                r.hk_deficit,
                r.k_const,
                r.theta,
                r.bound53,
                r.margin53,
                r.bound54a,
                r.margin54a,
                r.bound54c,
                r.margin54c,
            ]
            .iter()
            .map(|v| fmt(*v))
            .collect(),
            Err(_) => vec!["NaN".to_string(); 16],
        };
        out.push_str(&format!("{},{},{}\n", fmt(row.param), vals.join(","), row.converged));
    }
    out
}

/// Two-column `(param, value)` series for plotting, one per quantity.
pub fn plot_series(rows: &[SweepRow]) -> Vec<(&'static str, String)> {
    type Getter = fn(&StabilityReport) -> f64;
    let fields: [(&'static str, Getter); 13] = [
        ("hbar_L2", |r| r.hbar_l2),
        ("defL1", |r| r.def_l1),
        ("defInf", |r| r.def_inf),
        ("hk_deficit", |r| r.hk_deficit),
        ("K", |r| r.k_const),
        ("Theta", |r| r.theta),
        ("rho", |r| r.rho),
        ("bound53", |r| r.bound53),
        ("margin53", |r| r.margin53),
        ("margin54a", |r| r.margin54a),
        ("margin54a_alt", |r| r.margin54a_alt),
        ("margin54b", |r| r.margin54b),
        ("margin54c", |r| r.margin54c),
    ];
    fields
        .iter()
        .map(|(name, get)| {
            let mut s = format!("# param {name}\n");
            for row in rows {
                if let Ok(r) = &row.report {
                    s.push_str(&format!("{} {}\n", fmt(row.param), fmt(get(r))));
                }
            }
            (*name, s)
        })
        .collect()
}

/// Log-log slope of `‖h̄‖²_{L²}` against `‖H₀ − H_∂Ω‖_{L¹}` over rows with
/// both positive.
pub fn scaling_slope(rows: &[SweepRow]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.report.as_ref().ok())
        .filter(|r| r.def_l1 > 1e-12 * r.perimeter && r.hbar_l2 > 0.0)
        .map(|r| (r.def_l1, r.hbar_l2 * r.hbar_l2))
        .unzip();
    if x.len() < 2 {
        return None;
    }
    Some(crate::fit_loglog_slope(&x, &y))
}
