//! Integral identities and pointwise inequalities for CMC graphs with a
//! level boundary, evaluated by quadrature on the grid.
//!
//! Notation on `∂Ω`: `X = |Du|/w`, `κ = H_∂Ω`. With `P = −u + 1/w` the
//! volume integrand is `|∇P|² + (P + c)|h̄|²/w`, where `|∇P|²` depends on the
//! [`GradientFlag`]. The simplified boundary integrand is `(n−1)(1 − κX)X`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::domain::{boundary_geometry, reference_constants, BoundaryGeometry, ReferenceConstants};
use crate::graphgeom::{curvature_field, p_field_graph, CurvatureField, GraphSurface, PFieldGraph, GRID_DIM};
use crate::symfunc::{self, binomial, SquareMatrix, SymError};

/// Default tolerance on `max |S₁ − n|` for a surface to count as a solution.
pub const DEFAULT_CMC_TOL: f64 = 1e-2;

/// Default tolerance on `|S_k/S_l − C(n,k)/C(n,l)|` for the quotient check.
pub const DEFAULT_QUOTIENT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error("boundary is not strictly mean convex (min curvature {0})")]
    NotMeanConvex(f64),
    #[error("quotient constraint S_{k}/S_{l} = C(n,{k})/C(n,{l}) violated by {deviation:.3e}")]
    QuotientViolated { k: usize, l: usize, deviation: f64 },
    #[error("shape operator leaves Gamma_{k} at node {node}")]
    GammaViolation { k: usize, node: usize },
    #[error("need 0 <= l < k <= {n}, got k={k}, l={l}")]
    Indices { n: usize, k: usize, l: usize },
    #[error(transparent)]
    Sym(#[from] SymError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityId {
    Fundamental54,
    SoapBubble55,
    HeintzeKarcher56,
    HkDeficit57,
    Lemma33,
}

impl IdentityId {
    pub fn as_str(&self) -> &'static str {
        match self {
            IdentityId::Fundamental54 => "fundamental_54",
            IdentityId::SoapBubble55 => "soap_bubble_55",
            IdentityId::HeintzeKarcher56 => "heintze_karcher_56",
            IdentityId::HkDeficit57 => "hk_deficit_57",
            IdentityId::Lemma33 => "lemma_33",
        }
    }
}

/// How `|∇P|²` and the measure are read in the volume term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientFlag {
    /// `Σ P_i²` against `dx`.
    Euclid,
    /// `g^{ij} P_i P_j` against `dx`.
    Metric,
    /// `g^{ij} P_i P_j` and `(P+c)|h̄|²/w` against the induced area `w dx`;
    /// the boundary flux picks up the matching factor `1/w`.
    #[default]
    Riemannian,
}

impl GradientFlag {
    pub const ALL: [GradientFlag; 3] = [GradientFlag::Euclid, GradientFlag::Metric, GradientFlag::Riemannian];

    pub fn as_str(&self) -> &'static str {
        match self {
            GradientFlag::Euclid => "euclid",
            GradientFlag::Metric => "metric",
            GradientFlag::Riemannian => "riemannian",
        }
    }
}

impl fmt::Display for GradientFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GradientFlag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclid" | "euclidean" => Ok(GradientFlag::Euclid),
            "metric" => Ok(GradientFlag::Metric),
            "riemannian" => Ok(GradientFlag::Riemannian),
            other => Err(format!("unknown gradient flag '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub id: IdentityId,
    pub flag: Option<GradientFlag>,
    pub terms: Vec<(String, f64)>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    pub relative_residual: f64,
    /// False when the surface fails the identity's precondition.
    pub valid: bool,
    pub notes: Vec<String>,
    pub n_r: usize,
    pub n_phi: usize,
}

impl IdentityReport {
    fn new(input: &IdentityInput<'_>, id: IdentityId, flag: Option<GradientFlag>, lhs: f64, rhs: f64) -> Self {
        let residual = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs()).max(GRID_DIM as f64 * input.constants.area);
        let mut r = Self {
            id,
            flag,
            terms: Vec::new(),
            lhs,
            rhs,
            residual,
            scale,
            relative_residual: residual / scale,
            valid: true,
            notes: Vec::new(),
            n_r: input.surf.grid().n_r(),
            n_phi: input.surf.grid().n_phi(),
        };
        if let Some(dev) = input.cmc_deviation() {
            if dev > input.cmc_tol {
                r.valid = false;
                r.notes.push(format!("not a CMC solution: max|S1-n| = {dev:.3e}"));
            }
        }
        r
    }

    fn term(mut self, name: &str, value: f64) -> Self {
        self.terms.push((name.to_string(), value));
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|t| t.1)
    }

    pub fn to_record(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("id".into(), json!(self.id.as_str()));
        m.insert("flag".into(), json!(self.flag.map(|f| f.as_str()).unwrap_or("none")));
        m.insert("valid".into(), json!(self.valid));
        m.insert("lhs".into(), json!(self.lhs));
        m.insert("rhs".into(), json!(self.rhs));
        m.insert("residual".into(), json!(self.residual));
        m.insert("scale".into(), json!(self.scale));
        m.insert("relative_residual".into(), json!(self.relative_residual));
        m.insert("n_r".into(), json!(self.n_r));
        m.insert("n_phi".into(), json!(self.n_phi));
        for (name, v) in &self.terms {
            m.insert(format!("term.{name}"), json!(v));
        }
        m.insert("notes".into(), json!(self.notes.join("; ")));
        m
    }
}

/// A surface with the derived fields every identity needs.
pub struct IdentityInput<'a> {
    pub surf: &'a GraphSurface,
    pub cf: CurvatureField,
    pub pf: PFieldGraph,
    pub geometry: BoundaryGeometry,
    pub constants: ReferenceConstants,
    /// Boundary value `c`, the mean of `u` on the boundary ring.
    pub c: f64,
    /// Right-hand side of the CMC equation; `None` skips the check.
    pub rhs: Option<f64>,
    pub cmc_tol: f64,
}

impl<'a> IdentityInput<'a> {
    pub fn new(surf: &'a GraphSurface) -> Self {
        let cf = curvature_field(surf);
        let pf = p_field_graph(surf, &cf);
        let grid = surf.grid();
        Self {
            surf,
            geometry: boundary_geometry(grid.domain(), grid.n_phi()),
            constants: reference_constants(grid.domain(), grid),
            c: surf.boundary_value(),
            cf,
            pf,
            rhs: Some(GRID_DIM as f64),
            cmc_tol: DEFAULT_CMC_TOL,
        }
    }

    pub fn with_cmc_tol(mut self, tol: f64) -> Self {
        self.cmc_tol = tol;
        self
    }

    pub fn without_cmc_check(mut self) -> Self {
        self.rhs = None;
        self
    }

    /// `max |S₁ − rhs|` over interior nodes.
    pub fn cmc_deviation(&self) -> Option<f64> {
        let rhs = self.rhs?;
        let grid = self.surf.grid();
        Some(
            (0..grid.len())
                .filter(|&i| !grid.is_boundary(i))
                .map(|i| (self.cf.s[i][1] - rhs).abs())
                .fold(0.0, f64::max),
        )
    }

    fn n(&self) -> f64 {
        GRID_DIM as f64
    }

    /// `X = |Du|/w` per boundary node.
    pub fn boundary_x(&self) -> Vec<f64> {
        self.surf
            .grid()
            .boundary_nodes()
            .map(|i| {
                let d = self.surf.du()[i];
                d[0].hypot(d[1]) / self.surf.w()[i]
            })
            .collect()
    }

    /// Volume integrand of the fundamental identity at node `i`.
    pub fn volume_integrand(&self, i: usize, flag: GradientFlag) -> f64 {
        let pc = self.pf.p[i] + self.c;
        let hb = self.cf.hbar_sq[i];
        let w = self.surf.w()[i];
        match flag {
            GradientFlag::Euclid => self.pf.grad_sq_euclid[i] + pc * hb / w,
            GradientFlag::Metric => self.pf.grad_sq_metric[i] + pc * hb / w,
            GradientFlag::Riemannian => w * self.pf.grad_sq_metric[i] + pc * hb,
        }
    }

    pub fn volume_term(&self, flag: GradientFlag) -> f64 {
        self.surf.grid().integrate_fn(|i| self.volume_integrand(i, flag))
    }

    /// `∫ (P+c) ∂_ν P dσ` (or its Riemannian flux) from the nodal `P_i`.
    pub fn boundary_raw(&self, flag: GradientFlag) -> f64 {
        let grid = self.surf.grid();
        let vals: Vec<f64> = (0..grid.n_phi())
            .map(|k| {
                let i = grid.boundary_index(k);
                let nu = self.geometry.normal[k];
                let dp = self.pf.dp[i];
                let pc = self.pf.p[i] + self.c;
                match flag {
                    GradientFlag::Euclid | GradientFlag::Metric => pc * (dp[0] * nu[0] + dp[1] * nu[1]),
                    GradientFlag::Riemannian => {
                        let gi = self.cf.g_inv[i];
                        let gp = [gi[0] * dp[0] + gi[1] * dp[1], gi[1] * dp[0] + gi[2] * dp[1]];
                        pc * self.surf.w()[i] * (gp[0] * nu[0] + gp[1] * nu[1])
                    }
                }
            })
            .collect();
        grid.integrate_boundary(&vals)
    }

    /// `∫ (n−1)(1 − κX)X dσ`, divided by `w` for the Riemannian flag.
    pub fn boundary_simplified(&self, flag: GradientFlag) -> f64 {
        let grid = self.surf.grid();
        let x = self.boundary_x();
        let n = self.n();
        let vals: Vec<f64> = (0..grid.n_phi())
            .map(|k| {
                let v = (n - 1.0) * (1.0 - self.geometry.curvature[k] * x[k]) * x[k];
                match flag {
                    GradientFlag::Riemannian => v / self.surf.w()[grid.boundary_index(k)],
                    _ => v,
                }
            })
            .collect();
        grid.integrate_boundary(&vals)
    }
}

/// Fundamental identity: volume term against the simplified boundary form.
pub fn eval_fundamental(input: &IdentityInput<'_>, flag: GradientFlag) -> IdentityReport {
    let vol = input.volume_term(flag);
    let raw = input.boundary_raw(flag);
    let simp = input.boundary_simplified(flag);
    let grad: f64 = input.surf.grid().integrate_fn(|i| match flag {
        GradientFlag::Euclid => input.pf.grad_sq_euclid[i],
        GradientFlag::Metric => input.pf.grad_sq_metric[i],
        GradientFlag::Riemannian => input.surf.w()[i] * input.pf.grad_sq_metric[i],
    });
    IdentityReport::new(input, IdentityId::Fundamental54, Some(flag), vol, simp)
        .term("gradient", grad)
        .term("curvature", vol - grad)
        .term("volume", vol)
        .term("boundary_raw", raw)
        .term("boundary_simplified", simp)
        .term("raw_minus_simplified", (raw - simp).abs())
}

/// Soap-bubble identity: `V/(n−1) + (1/R₀)∫(X − R₀)² = ∫(H₀ − κ)X²`.
pub fn eval_soap_bubble(input: &IdentityInput<'_>, flag: GradientFlag) -> IdentityReport {
    let grid = input.surf.grid();
    let n = input.n();
    let rc = input.constants;
    let x = input.boundary_x();
    let vol = input.volume_term(flag) / (n - 1.0);
    let sq: Vec<f64> = x.iter().map(|v| (v - rc.r0).powi(2)).collect();
    let term2 = grid.integrate_boundary(&sq) / rc.r0;
    let def: Vec<f64> = (0..x.len()).map(|k| (rc.h0 - input.geometry.curvature[k]) * x[k] * x[k]).collect();
    let rhs = grid.integrate_boundary(&def);
    let hb_part =
        grid.integrate_fn(|i| (input.pf.p[i] + input.c) * input.cf.hbar_sq[i] / input.surf.w()[i]) / (n - 1.0);
    let min_hb = input.cf.hbar_sq.iter().copied().fold(f64::INFINITY, f64::min);
    let min_pc = (0..input.surf.len()).map(|i| input.pf.p[i] + input.c).fold(f64::INFINITY, f64::min);
    let mut r = IdentityReport::new(input, IdentityId::SoapBubble55, Some(flag), vol + term2, rhs)
        .term("volume_over_n_minus_1", vol)
        .term("boundary_spread", term2)
        .term("curvature_deficit", rhs)
        .term("hbar_part", hb_part)
        .term("min_hbar_sq", min_hb)
        .term("min_p_plus_c", min_pc)
        .term("x_flux_minus_n_area", grid.integrate_boundary(&x) - n * rc.area);
    if vol < 0.0 {
        r.notes.push("volume term negative".into());
    }
    r
}

/// Heintze–Karcher identity:
/// `V/(n−1) + ∫(1 − Xκ)²/κ dσ = ∫1/κ dσ − n|Ω|`.
pub fn eval_heintze_karcher(input: &IdentityInput<'_>, flag: GradientFlag) -> Result<IdentityReport, IdentityError> {
    let min_k = input.geometry.min_curvature();
    if !(min_k > 0.0) {
        return Err(IdentityError::NotMeanConvex(min_k));
    }
    let grid = input.surf.grid();
    let n = input.n();
    let x = input.boundary_x();
    let kap = &input.geometry.curvature;
    let vol = input.volume_term(flag) / (n - 1.0);
    let t2: Vec<f64> = (0..x.len()).map(|k| (1.0 - x[k] * kap[k]).powi(2) / kap[k]).collect();
    let term2 = grid.integrate_boundary(&t2);
    let deficit = hk_deficit(input);
    Ok(IdentityReport::new(input, IdentityId::HeintzeKarcher56, Some(flag), vol + term2, deficit)
        .term("volume_over_n_minus_1", vol)
        .term("umbilic_defect", term2)
        .term("deficit", deficit))
}

fn hk_deficit(input: &IdentityInput<'_>) -> f64 {
    let inv: Vec<f64> = input.geometry.curvature.iter().map(|k| 1.0 / k).collect();
    input.surf.grid().integrate_boundary(&inv) - input.n() * input.constants.area
}

/// Heintze–Karcher inequality `∫1/κ dσ ≥ n|Ω|`; the residual is the amount
/// of violation, zero when the inequality holds.
pub fn eval_hk_deficit(input: &IdentityInput<'_>) -> Result<IdentityReport, IdentityError> {
    let min_k = input.geometry.min_curvature();
    if !(min_k > 0.0) {
        return Err(IdentityError::NotMeanConvex(min_k));
    }
    let deficit = hk_deficit(input);
    let n_area = input.n() * input.constants.area;
    let mut r = IdentityReport::new(input, IdentityId::HkDeficit57, None, deficit + n_area, n_area)
        .term("deficit", deficit)
        .term("min_boundary_curvature", min_k);
    // geometric inequality; it does not depend on the surface
    r.valid = true;
    r.notes.clear();
    r.residual = (-deficit).max(0.0);
    r.relative_residual = r.residual / r.scale;
    Ok(r)
}

/// `M = k C(n,l) S_k − l C(n,k) S_l` and
/// `Q = (n−k+1) C(n,l) S_{k−1} − (n−l+1) C(n,k) S_{l−1}` from `[S₀..Sₙ]`.
pub fn lemma33_weights(values: &[f64], k: usize, l: usize) -> (f64, f64) {
    let n = values.len() - 1;
    let get = |i: isize| {
        if i < 0 || i as usize > n {
            0.0
        } else {
            values[i as usize]
        }
    };
    let (kf, lf, nf) = (k as f64, l as f64, n as f64);
    let (cnk, cnl) = (binomial(n, k), binomial(n, l));
    let m = kf * cnl * get(k as isize) - lf * cnk * get(l as isize);
    let q = (nf - kf + 1.0) * cnl * get(k as isize - 1) - (nf - lf + 1.0) * cnk * get(l as isize - 1);
    (m, q)
}

/// Weighted integral identity on a quotient-constrained surface, in the grouped form
/// `∫ M (u − c) + Q (θ + 1/w_b) dx = 0` with `w_b = √(1 − c₂²)`.
pub fn eval_lemma33(
    input: &IdentityInput<'_>,
    k: usize,
    l: usize,
    quotient_tol: f64,
) -> Result<IdentityReport, IdentityError> {
    let n = GRID_DIM;
    if !(l < k && k <= n) {
        return Err(IdentityError::Indices { n, k, l });
    }
    let target = binomial(n, k) / binomial(n, l);
    let mut worst: f64 = 0.0;
    for s in &input.cf.s {
        worst = worst.max((s[k] / s[l] - target).abs());
    }
    if !(worst <= quotient_tol) {
        return Err(IdentityError::QuotientViolated { k, l, deviation: worst });
    }
    let grid = input.surf.grid();
    let slope = input.surf.boundary_slope();
    let c2 = slope.iter().sum::<f64>() / slope.len() as f64;
    let inv_wb = 1.0 / (1.0 - c2 * c2).sqrt();
    let (mut min_m, mut min_q, mut max_mq) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut m_vals = Vec::with_capacity(grid.len());
    let mut q_vals = Vec::with_capacity(grid.len());
    for s in &input.cf.s {
        let (m, q) = lemma33_weights(s, k, l);
        min_m = min_m.min(m);
        min_q = min_q.min(q);
        max_mq = max_mq.max(m - q);
        m_vals.push(m);
        q_vals.push(q);
    }
    let u = input.surf.u();
    let c = input.c;
    let m_int = grid.integrate_fn(|i| m_vals[i] * (u[i] - c));
    let q_theta = grid.integrate_fn(|i| q_vals[i] * input.surf.angle(i));
    let q_int = grid.integrate_fn(|i| q_vals[i] * (input.surf.angle(i) + inv_wb));
    let mut r = IdentityReport::new(input, IdentityId::Lemma33, None, m_int, -q_int)
        .term("m_integral", m_int)
        .term("q_integral", q_int)
        .term("statement_form", m_int + q_theta)
        .term("min_m", min_m)
        .term("min_q", min_q)
        .term("max_m_minus_q", max_mq)
        .term("boundary_inv_w", inv_wb);
    // the quotient constraint replaces the CMC precondition here
    r.valid = true;
    r.notes.clear();
    r.scale = m_int.abs().max(q_int.abs()).max(n as f64 * input.constants.area);
    r.relative_residual = r.residual / r.scale;
    Ok(r)
}

/// `(k − l + (k+1)S_{k+1}/S_k − (l+1)S_{l+1}/S_l)·(−1/w)` from `[S₀..Sₙ]`.
pub fn ellipticity_value(values: &[f64], k: usize, l: usize, w: f64) -> f64 {
    let n = values.len() - 1;
    let get = |i: usize| if i > n { 0.0 } else { values[i] };
    let bracket = (k as f64 - l as f64) + (k + 1) as f64 * get(k + 1) / get(k) - (l + 1) as f64 * get(l + 1) / get(l);
    -bracket / w
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub min_value: f64,
    /// Whether the quotient constraint holds to tolerance, so that the
    /// minimum is expected to be nonnegative.
    pub quotient_constrained: bool,
    pub values: Vec<f64>,
}

pub fn pointwise_ellipticity(
    surf: &GraphSurface,
    cf: &CurvatureField,
    k: usize,
    l: usize,
    quotient_tol: f64,
) -> Result<EllipticityReport, IdentityError> {
    let n = GRID_DIM;
    if !(l < k && k <= n) {
        return Err(IdentityError::Indices { n, k, l });
    }
    if let Some(node) = cf.k_max.iter().position(|&m| m < k) {
        return Err(IdentityError::GammaViolation { k, node });
    }
    let target = binomial(n, k) / binomial(n, l);
    let mut constrained = true;
    let values: Vec<f64> = (0..cf.len())
        .map(|i| {
            let s = &cf.s[i];
            if (s[k] / s[l] - target).abs() > quotient_tol {
                constrained = false;
            }
            ellipticity_value(s, k, l, surf.w()[i])
        })
        .collect();
    Ok(EllipticityReport {
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        quotient_constrained: constrained,
        values,
    })
}

/// Residual of `S_k(A) S_n(A⁻¹) = S_{n−k}(A⁻¹)`, maximized over `k`.
pub fn gauss_map_identity(a: &SquareMatrix) -> Result<f64, IdentityError> {
    Ok(symfunc::gauss_map_residual(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmc_solver::{newton_solve, SolverConfig};
    use crate::domain::{make_grid, PolarGrid, StarDomain};
    use crate::graphgeom::{hyperboloid_cap, SurfaceSource};
    use std::f64::consts::SQRT_2;
    use std::sync::Arc;

    fn cap(n_r: usize) -> GraphSurface {
        let g = Arc::new(make_grid(&StarDomain::disk(1.0).unwrap(), n_r, 2 * n_r).unwrap());
        hyperboloid_cap(0.0, -SQRT_2, [0.0; 2], g).unwrap()
    }

    #[test]
    fn analytic_cap_identities_vanish() {
        let surf = cap(32);
        let input = IdentityInput::new(&surf);
        for flag in GradientFlag::ALL {
            let f = eval_fundamental(&input, flag);
            assert!(f.valid);
            assert!(f.lhs.abs() < 1e-12, "{f:?}");
            assert!(f.rhs.abs() < 1e-6 && f.get("boundary_raw").unwrap().abs() < 1e-12, "{f:?}");
            let sb = eval_soap_bubble(&input, flag);
            for (name, v) in &sb.terms {
                assert!(v.abs() < 1e-6 || name.starts_with("min_"), "{name} {v}");
            }
            let hk = eval_heintze_karcher(&input, flag).unwrap();
            assert!(hk.residual < 1e-6 && hk.get("deficit").unwrap().abs() < 1e-6);
            assert!(hk.get("umbilic_defect").unwrap().abs() < 1e-12);
        }
        let d = eval_hk_deficit(&input).unwrap();
        assert!(d.get("deficit").unwrap().abs() < 1e-6 && d.residual < 1e-6);
    }

    #[test]
    fn flat_surface_is_flagged_invalid() {
        let g = Arc::new(make_grid(&StarDomain::disk(1.0).unwrap(), 12, 24).unwrap());
        let flat = GraphSurface::from_samples(g.clone(), vec![0.0; g.len()], SurfaceSource::Sampled).unwrap();
        let input = IdentityInput::new(&flat);
        let r = eval_fundamental(&input, GradientFlag::Euclid);
        assert!(!r.valid);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn weighted_identity_on_caps() {
        let surf = cap(24);
        let input = IdentityInput::new(&surf);
        for (k, l) in [(2, 1), (1, 0), (2, 0)] {
            let r = eval_lemma33(&input, k, l, DEFAULT_QUOTIENT_TOL).unwrap();
            assert!(r.residual < 1e-10, "{r:?}");
            assert!(r.get("min_m").unwrap() > 0.0);
            assert!(r.get("max_m_minus_q").unwrap() <= 1e-10);
        }
        // statement form without the boundary constant does not vanish
        let r = eval_lemma33(&input, 1, 0, DEFAULT_QUOTIENT_TOL).unwrap();
        assert!(r.get("statement_form").unwrap().abs() > 1.0);
        let flat_g = Arc::new(make_grid(&StarDomain::disk(1.0).unwrap(), 12, 24).unwrap());
        let wavy = GraphSurface::analytic(flat_g, |x| (0.1 * x[0] * x[0], [0.2 * x[0], 0.0], [0.2, 0.0, 0.0])).unwrap();
        let wi = IdentityInput::new(&wavy);
        assert!(matches!(eval_lemma33(&wi, 2, 1, 1e-6), Err(IdentityError::QuotientViolated { .. })));
    }

    #[test]
    fn weight_pair_examples() {
        // λ = (1,1), (k,l) = (2,1): M = (k−l)C(n,l)S_k = 2, Q = 1·2·2 − 2·1·1 = 2
        let (m, q) = lemma33_weights(&[1.0, 2.0, 1.0], 2, 1);
        assert!((m - 2.0).abs() < 1e-15 && (q - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ellipticity_examples() {
        assert!(ellipticity_value(&[1.0, 2.0, 1.0], 1, 0, 0.7).abs() < 1e-15);
        // λ = (1,2): bracket = 1 + 2·2/3 − 3 = −2/3
        let v = ellipticity_value(&[1.0, 3.0, 2.0], 1, 0, 0.5);
        assert!((v - (2.0 / 3.0) / 0.5).abs() < 1e-14);
        for n in 2..6 {
            let vals: Vec<f64> = (0..=n).map(|i| binomial(n, i)).collect();
            for k in 1..n {
                for l in 0..k {
                    assert!(ellipticity_value(&vals, k, l, 1.0).abs() < 1e-12);
                }
            }
        }
        let surf = cap(16);
        let cf = curvature_field(&surf);
        let r = pointwise_ellipticity(&surf, &cf, 1, 0, 1e-6).unwrap();
        assert!(r.quotient_constrained && r.min_value.abs() < 1e-10);
    }

    #[test]
    fn gauss_map_examples() {
        let a = SquareMatrix::diagonal(&[1.0, 2.0]).unwrap();
        assert!(gauss_map_identity(&a).unwrap() < 1e-15);
        assert!(gauss_map_identity(&SquareMatrix::identity(4)).unwrap() < 1e-15);
        assert!(gauss_map_identity(&SquareMatrix::diagonal(&[1.0, 0.0]).unwrap()).is_err());
    }

    fn solved(dom: &StarDomain, n_r: usize) -> GraphSurface {
        let g: Arc<PolarGrid> = Arc::new(make_grid(dom, n_r, 2 * n_r).unwrap());
        newton_solve(g, &SolverConfig::default()).unwrap().surface
    }

    #[test]
    fn solved_ellipse_signs() {
        let dom = StarDomain::ellipse(1.0, 1.2).unwrap();
        let surf = solved(&dom, 24);
        let input = IdentityInput::new(&surf);
        let sb = eval_soap_bubble(&input, GradientFlag::Euclid);
        assert!(sb.valid);
        assert!(sb.get("volume_over_n_minus_1").unwrap() > 0.0);
        assert!(sb.get("boundary_spread").unwrap() > 0.0);
        assert!(sb.get("curvature_deficit").unwrap() > 0.0);
        assert!(sb.get("x_flux_minus_n_area").unwrap().abs() < 1e-2);
        assert!(input.geometry.curvature.iter().any(|k| *k < input.constants.h0));
        let d = eval_hk_deficit(&input).unwrap();
        assert!(d.get("deficit").unwrap() > 0.1);
    }
}
