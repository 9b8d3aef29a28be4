//! Run configuration: a TOML key/value file, then command-line flags, then
//! `--set key=value` pairs, merged in that order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spacelike_core::cmc_solver::{InitialGuess, SolverConfig};
use spacelike_core::domain::{make_domain, DomainPreset, FourierCoeffs, StarDomain};
use spacelike_core::graphgeom::SPACELIKE_EPS;
use spacelike_core::stability::{SweepFamily, SweepGrid};
use thiserror::Error;
use toml::{Table, Value};

pub const MAX_N_R: usize = 256;
pub const MAX_N_PHI: usize = 512;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {msg}")]
    Read { path: PathBuf, msg: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("bad override '{0}', expected key=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `disk`, `ellipse` or `fourier`.
    pub domain: String,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
    pub fourier_mean: f64,
    pub fourier_cos: Vec<f64>,
    pub fourier_sin: Vec<f64>,
    pub center: [f64; 2],
    pub n_r: usize,
    pub n_phi: usize,

    /// `cap`, `flat` or `radial`.
    pub surface: String,
    pub theta0: f64,
    /// Derive the cap radius from `theta0`.
    pub radius_auto: bool,
    pub c: f64,

    pub rhs: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    pub damping: f64,
    pub min_step: f64,
    /// `flat` or `scaled_cap`.
    pub initial_guess: String,
    pub cap_scale: f64,

    pub input: Option<PathBuf>,
    /// Subset of `54, 55, 56, 57, l33, 212, ellipticity`.
    pub ids: Vec<String>,
    /// `euclid`, `metric`, `riemannian`, `both` or `all`.
    pub flag: String,
    pub verify_tol: f64,
    pub cmc_tol: f64,
    /// Tolerance on the `S_k/S_l` constraint for `l33` and `ellipticity`.
    pub quotient_tol: f64,
    pub k: usize,
    pub l: usize,

    /// `ellipse`, `fourier` or `disk`.
    pub family: String,
    pub ratios: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub modes: Vec<usize>,

    pub out_dir: PathBuf,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub cases: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: "disk".into(),
            radius: 1.0,
            a: 1.0,
            b: 1.0,
            fourier_mean: 1.0,
            fourier_cos: Vec::new(),
            fourier_sin: Vec::new(),
            center: [0.0, 0.0],
            n_r: 32,
            n_phi: 64,
            surface: "cap".into(),
            theta0: -std::f64::consts::SQRT_2,
            radius_auto: false,
            c: 0.0,
            rhs: None,
            max_iters: 50,
            tol: 1e-10,
            damping: 0.5,
            min_step: 1e-8,
            initial_guess: "flat".into(),
            cap_scale: 1.0,
            input: None,
            ids: vec!["54".into()],
            flag: "riemannian".into(),
            verify_tol: 1e-2,
            cmc_tol: 1e-2,
            quotient_tol: 1e-2,
            k: 1,
            l: 0,
            family: "ellipse".into(),
            ratios: (0..=10).map(|i| 1.0 + 0.05 * i as f64).collect(),
            amplitudes: vec![0.005, 0.01, 0.02, 0.04, 0.08],
            modes: vec![2, 3],
            out_dir: PathBuf::from("."),
            output: None,
            seed: 0,
            cases: 1000,
        }
    }
}

/// Reads the optional file, applies `flags` then `sets`, and validates.
pub fn load(path: Option<&Path>, flags: Table, sets: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Read { path: p.to_path_buf(), msg: e.to_string() })?;
            text.parse::<Table>().map_err(|e| ConfigError::Parse(e.to_string()))?
        }
        None => Table::new(),
    };
    table.extend(flags);
    for s in sets {
        let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.clone()))?;
        table.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    let cfg: RunConfig =
        Value::Table(table).try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// A TOML literal, or a bare string when the text is not one.
pub fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_r < 8 || self.n_r > MAX_N_R {
            return invalid(format!("n_r must lie in [8, {MAX_N_R}], got {}", self.n_r));
        }
        if self.n_phi < 16 || self.n_phi > MAX_N_PHI || !self.n_phi.is_multiple_of(2) {
            return invalid(format!("n_phi must be even and lie in [16, {MAX_N_PHI}], got {}", self.n_phi));
        }
        if !["cap", "flat", "radial"].contains(&self.surface.as_str()) {
            return invalid(format!("unknown surface '{}'", self.surface));
        }
        if !["flat", "scaled_cap"].contains(&self.initial_guess.as_str()) {
            return invalid(format!("unknown initial guess '{}'", self.initial_guess));
        }
        if !["euclid", "metric", "riemannian", "both", "all"].contains(&self.flag.as_str()) {
            return invalid(format!("unknown flag '{}'", self.flag));
        }
        for id in &self.ids {
            if !["54", "55", "56", "57", "l33", "212", "ellipticity"].contains(&id.as_str()) {
                return invalid(format!("unknown identity id '{id}'"));
            }
        }
        if !(self.verify_tol > 0.0 && self.cmc_tol > 0.0 && self.quotient_tol > 0.0) {
            return invalid("tolerances must be positive");
        }
        if self.cases == 0 {
            return invalid("cases must be positive");
        }
        Ok(())
    }

    /// The configured domain; `cap` with `radius_auto` uses `√(θ₀² − 1)`.
    pub fn star_domain(&self) -> Result<StarDomain, ConfigError> {
        let preset = match self.domain.as_str() {
            "disk" => DomainPreset::Disk { radius: self.disk_radius()? },
            "ellipse" => DomainPreset::Ellipse { a: self.a, b: self.b },
            "fourier" => DomainPreset::Fourier(FourierCoeffs {
                mean: self.fourier_mean,
                cos: self.fourier_cos.clone(),
                sin: self.fourier_sin.clone(),
            }),
            other => return invalid(format!("unknown domain '{other}'")),
        };
        make_domain(preset, self.center).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn disk_radius(&self) -> Result<f64, ConfigError> {
        if self.radius_auto {
            if !(self.theta0 < -1.0) {
                return invalid(format!("radius auto needs theta0 < -1, got {}", self.theta0));
            }
            Ok((self.theta0 * self.theta0 - 1.0).sqrt())
        } else {
            Ok(self.radius)
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, ConfigError> {
        let cfg = SolverConfig {
            target_rhs: self.rhs,
            boundary_value: self.c,
            max_newton_iters: self.max_iters,
            residual_tol: self.tol,
            damping: self.damping,
            spacelike_eps: SPACELIKE_EPS,
            min_step: self.min_step,
            initial_guess: match self.initial_guess.as_str() {
                "scaled_cap" => InitialGuess::ScaledCap { scale: self.cap_scale },
                _ => InitialGuess::Flat,
            },
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn sweep_family(&self) -> Result<SweepFamily, ConfigError> {
        match self.family.as_str() {
            "ellipse" => Ok(SweepFamily::Ellipse { ratios: self.ratios.clone() }),
            "fourier" => Ok(SweepFamily::Fourier {
                amplitudes: self.amplitudes.clone(),
                modes: self.modes.clone(),
                seed: self.seed,
            }),
            "disk" => Ok(SweepFamily::Disk { radius: self.radius }),
            other => invalid(format!("unknown sweep family '{other}'")),
        }
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid { n_r: self.n_r, n_phi: self.n_phi }
    }

    /// SHA-256 of the canonical JSON form without output locations, hex
    /// encoded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("out_dir");
            m.remove("output");
        }
        let json = v.to_string();
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn output_path(&self, default_name: &str) -> PathBuf {
        self.output.clone().unwrap_or_else(|| self.out_dir.join(default_name))
    }
}
