//! Curvature machinery, P-functions and integral identities for spacelike
//! graphs in Minkowski space.
//!
//! * [`symfunc`]: elementary symmetric functions, Newton tensors, Gårding
//!   cones and the Newton–MacLaurin family of inequalities.
//! * [`domain`]: star-shaped domains, mapped polar grids, quadrature.
//! * [`graphgeom`]: metric, second fundamental form and P-functions of a
//!   sampled graph.
//! * [`cmc_solver`]: damped Newton solver for the constant mean curvature
//!   Dirichlet problem.
//! * [`identities`]: integral identities evaluated by quadrature.
//! * [`stability`]: quantitative rigidity bounds and domain sweeps.

// negated comparisons reject NaN; index loops walk several arrays at once
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod cmc_solver;
pub mod domain;
pub mod dump;
pub mod graphgeom;
pub mod identities;
pub mod oracle;
pub mod stability;
pub mod stencil;
pub mod symfunc;

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_loglog_slope(h: &[f64], err: &[f64]) -> f64 {
    assert_eq!(h.len(), err.len());
    let pts: Vec<(f64, f64)> = h.iter().zip(err).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
