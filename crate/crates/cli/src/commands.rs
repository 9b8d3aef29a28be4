//! Subcommand bodies. Each returns the process exit code.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use spacelike_core::cmc_solver::{newton_solve, radial_exact, SolveError, SolveReport};
use spacelike_core::domain::{make_grid, DomainPreset, PolarGrid};
use spacelike_core::dump::{header_lines, read_surface, write_surface};
use spacelike_core::graphgeom::{hyperboloid_cap, GraphSurface, GRID_DIM};
use spacelike_core::identities::{
    eval_fundamental, eval_heintze_karcher, eval_hk_deficit, eval_lemma33, eval_soap_bubble, gauss_map_identity,
    pointwise_ellipticity, GradientFlag, IdentityInput,
};
use spacelike_core::stability::{domain_sweep, plot_series, scaling_slope, sweep_csv};

use crate::config::RunConfig;
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_BREAKDOWN: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Tolerance for the Gauss-map identity on shape operators.
const GAUSS_MAP_TOL: f64 = 1e-8;

fn config_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_CONFIG
}

/// Provenance header shared by every output file.
pub fn provenance(cfg: &RunConfig, command: &str, n_r: usize, n_phi: usize) -> Vec<(String, String)> {
    vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), command.into()),
        ("config_hash".into(), cfg.hash()),
        ("seed".into(), cfg.seed.to_string()),
        ("n_r".into(), n_r.to_string()),
        ("n_phi".into(), n_phi.to_string()),
    ]
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        }
    }
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes a surface dump; the grid keys come from the dump itself.
fn write_dump(
    cfg: &RunConfig,
    command: &str,
    surf: &GraphSurface,
    extra: &[(String, String)],
    path: &Path,
) -> Result<(), String> {
    let mut head: Vec<(String, String)> = provenance(cfg, command, surf.grid().n_r(), surf.grid().n_phi())
        .into_iter()
        .filter(|(k, _)| k != "n_r" && k != "n_phi")
        .collect();
    head.extend_from_slice(extra);
    write_file(path, &write_surface(surf, &head))
}

fn grid_for(cfg: &RunConfig) -> Result<Arc<PolarGrid>, String> {
    let dom = cfg.star_domain().map_err(|e| e.to_string())?;
    make_grid(&dom, cfg.n_r, cfg.n_phi).map(Arc::new).map_err(|e| e.to_string())
}

pub fn gen(cfg: &RunConfig) -> i32 {
    let mut cfg = cfg.clone();
    if cfg.surface != "flat" {
        cfg.domain = "disk".into();
    }
    let grid = match grid_for(&cfg) {
        Ok(g) => g,
        Err(e) => return config_error(e),
    };
    let surf = match cfg.surface.as_str() {
        "cap" => hyperboloid_cap(cfg.c, cfg.theta0, cfg.center, grid).map_err(|e| e.to_string()),
        "radial" => {
            let radius = match cfg.disk_radius() {
                Ok(r) => r,
                Err(e) => return config_error(e),
            };
            radial_exact(radius, GRID_DIM, cfg.c)
                .map_err(|e| e.to_string())
                .and_then(|p| hyperboloid_cap(cfg.c, p.theta0(), cfg.center, grid).map_err(|e| e.to_string()))
        }
        _ => {
            let c = cfg.c;
            GraphSurface::analytic(grid, move |_| (c, [0.0; 2], [0.0; 3])).map_err(|e| e.to_string())
        }
    };
    let surf = match surf {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let path = cfg.output_path("surface.csv");
    let extra = vec![("surface".to_string(), cfg.surface.clone())];
    if let Err(e) = write_dump(&cfg, "gen", &surf, &extra, &path) {
        return config_error(e);
    }
    println!("wrote {} ({} nodes, source {:?})", path.display(), surf.len(), surf.source());
    EXIT_OK
}

/// Max nodal error against the radial solution on a disk, if applicable.
fn oracle_error(cfg: &RunConfig, report: &SolveReport) -> Option<f64> {
    let grid = report.surface.grid();
    let DomainPreset::Disk { radius } = grid.domain().preset() else {
        return None;
    };
    if (report.rhs - GRID_DIM as f64).abs() > 0.0 {
        return None;
    }
    let prof = radial_exact(*radius, GRID_DIM, cfg.c).ok()?;
    let c = grid.domain().center();
    Some(
        grid.points()
            .iter()
            .zip(report.surface.u())
            .map(|(p, u)| (u - prof.u((p[0] - c[0]).hypot(p[1] - c[1]))).abs())
            .fold(0.0, f64::max),
    )
}

fn report_json(cfg: &RunConfig, report: &SolveReport, status: &str) -> String {
    let mut rec = Map::new();
    for (k, v) in provenance(cfg, "solve", report.surface.grid().n_r(), report.surface.grid().n_phi()) {
        rec.insert(k, json!(v));
    }
    rec.insert("status".into(), json!(status));
    rec.extend(report.to_record());
    if let Some(err) = oracle_error(cfg, report) {
        rec.insert("oracle_max_error".into(), json!(err));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(rec)).expect("record serializes");
    s.push('\n');
    s
}

pub fn solve(cfg: &RunConfig) -> i32 {
    let grid = match grid_for(cfg) {
        Ok(g) => g,
        Err(e) => return config_error(e),
    };
    let solver = match cfg.solver() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let (report, status, code) = match newton_solve(grid, &solver) {
        Ok(r) => (r, "converged", EXIT_OK),
        Err(SolveError::NonConvergence(r)) => (*r, "non_convergence", EXIT_NONCONVERGENCE),
        Err(SolveError::SpacelikeBreakdown(r)) => (*r, "spacelike_breakdown", EXIT_BREAKDOWN),
        Err(e @ (SolveError::InvalidConfig(_) | SolveError::InitialGuess(_))) => return config_error(e),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NONCONVERGENCE;
        }
    };
    let surf_path = cfg.output_path("surface.csv");
    let extra = vec![
        ("status".to_string(), status.to_string()),
        ("iterations".to_string(), report.iterations.to_string()),
        ("final_residual".to_string(), format!("{:.6e}", report.final_residual)),
    ];
    if let Err(e) = write_dump(cfg, "solve", &report.surface, &extra, &surf_path) {
        return config_error(e);
    }
    let json_path = cfg.out_dir.join("solve_report.json");
    if let Err(e) = write_file(&json_path, &report_json(cfg, &report, status)) {
        return config_error(e);
    }
    println!(
        "{status}: iterations={} residual={:.3e} min_w={:.4}",
        report.iterations, report.final_residual, report.min_w
    );
    if let Some(err) = oracle_error(cfg, &report) {
        println!("radial oracle max error {err:.3e}");
    }
    println!("wrote {} and {}", surf_path.display(), json_path.display());
    code
}

/// One verification row.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub pass: bool,
    pub record: Map<String, Value>,
}

fn flags_for(sel: &str) -> Vec<GradientFlag> {
    match sel {
        "euclid" => vec![GradientFlag::Euclid],
        "metric" => vec![GradientFlag::Metric],
        "riemannian" => vec![GradientFlag::Riemannian],
        "both" => vec![GradientFlag::Euclid, GradientFlag::Metric],
        _ => GradientFlag::ALL.to_vec(),
    }
}

fn failure(id: &str, msg: String) -> VerifyRow {
    let mut rec = Map::new();
    rec.insert("id".into(), json!(id));
    rec.insert("valid".into(), json!(false));
    rec.insert("notes".into(), json!(msg));
    VerifyRow { pass: false, record: rec }
}

fn identity_row(r: spacelike_core::identities::IdentityReport, tol: f64) -> VerifyRow {
    let pass = r.valid && r.relative_residual <= tol;
    VerifyRow { pass, record: r.to_record() }
}

/// Evaluates the selected identities on one surface.
pub fn verify_rows(cfg: &RunConfig, surf: &GraphSurface) -> Vec<VerifyRow> {
    let input = IdentityInput::new(surf).with_cmc_tol(cfg.cmc_tol);
    let tol = cfg.verify_tol;
    let flags = flags_for(&cfg.flag);
    let mut rows = Vec::new();
    for id in &cfg.ids {
        match id.as_str() {
            "54" => rows.extend(flags.iter().map(|f| identity_row(eval_fundamental(&input, *f), tol))),
            "55" => rows.extend(flags.iter().map(|f| identity_row(eval_soap_bubble(&input, *f), tol))),
            "56" => {
                for f in &flags {
                    rows.push(match eval_heintze_karcher(&input, *f) {
                        Ok(r) => identity_row(r, tol),
                        Err(e) => failure("heintze_karcher_56", e.to_string()),
                    });
                }
            }
            "57" => rows.push(match eval_hk_deficit(&input) {
                Ok(r) => identity_row(r, tol),
                Err(e) => failure("hk_deficit_57", e.to_string()),
            }),
            "l33" => rows.push(match eval_lemma33(&input, cfg.k, cfg.l, cfg.quotient_tol) {
                Ok(r) => identity_row(r, tol),
                Err(e) => failure("lemma_33", e.to_string()),
            }),
            "212" => {
                let mut worst = 0.0_f64;
                let mut err = None;
                for i in 0..surf.len() {
                    match gauss_map_identity(&input.cf.shape_matrix(i)) {
                        Ok(r) => worst = worst.max(r),
                        Err(e) => {
                            err = Some(format!("node {i}: {e}"));
                            break;
                        }
                    }
                }
                rows.push(match err {
                    Some(msg) => failure("gauss_map_212", msg),
                    None => {
                        let mut rec = Map::new();
                        rec.insert("id".into(), json!("gauss_map_212"));
                        rec.insert("valid".into(), json!(true));
                        rec.insert("residual".into(), json!(worst));
                        VerifyRow { pass: worst <= GAUSS_MAP_TOL, record: rec }
                    }
                });
            }
            _ => rows.push(match pointwise_ellipticity(surf, &input.cf, cfg.k, cfg.l, cfg.quotient_tol) {
                Ok(r) => {
                    let mut rec = Map::new();
                    rec.insert("id".into(), json!("ellipticity"));
                    rec.insert("valid".into(), json!(r.quotient_constrained));
                    rec.insert("min_value".into(), json!(r.min_value));
                    rec.insert("k".into(), json!(cfg.k));
                    rec.insert("l".into(), json!(cfg.l));
                    if !r.quotient_constrained {
                        rec.insert("notes".into(), json!("quotient constraint fails; sign not asserted"));
                    }
                    VerifyRow { pass: !r.quotient_constrained || r.min_value >= -tol, record: rec }
                }
                Err(e) => failure("ellipticity", e.to_string()),
            }),
        }
    }
    for row in &mut rows {
        row.record.insert("pass".into(), json!(row.pass));
        row.record.entry("n_r").or_insert(json!(surf.grid().n_r()));
        row.record.entry("n_phi").or_insert(json!(surf.grid().n_phi()));
    }
    rows
}

pub const VERIFY_COLUMNS: [&str; 12] =
    ["id", "flag", "pass", "valid", "lhs", "rhs", "residual", "scale", "relative_residual", "n_r", "n_phi", "notes"];

fn csv_field(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => {
            if s.contains(',') || s.contains('"') {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        }
        Some(other) => other.to_string(),
    }
}

pub fn verify(cfg: &RunConfig) -> i32 {
    let Some(input) = &cfg.input else {
        return config_error("verify needs an input surface (--input)");
    };
    let text = match fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => return config_error(format!("cannot read {}: {e}", input.display())),
    };
    let surf = match read_surface(&text) {
        Ok(s) => s,
        Err(e) => return config_error(format!("{}: {e}", input.display())),
    };
    let rows = verify_rows(cfg, &surf);
    let mut csv = header_lines(&provenance(cfg, "verify", surf.grid().n_r(), surf.grid().n_phi()));
    csv.push_str(&VERIFY_COLUMNS.join(","));
    csv.push('\n');
    let mut jsonl = String::new();
    for row in &rows {
        let line: Vec<String> = VERIFY_COLUMNS.iter().map(|c| csv_field(row.record.get(*c))).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
        jsonl.push_str(&serde_json::to_string(&row.record).expect("record serializes"));
        jsonl.push('\n');
        println!(
            "{} {} flag={} rel_residual={} {}",
            if row.pass { "PASS" } else { "FAIL" },
            csv_field(row.record.get("id")),
            csv_field(row.record.get("flag")),
            csv_field(
                row.record.get("relative_residual").or(row.record.get("residual")).or(row.record.get("min_value"))
            ),
            csv_field(row.record.get("notes")),
        );
    }
    let csv_path = cfg.output_path("identities.csv");
    let json_path = cfg.out_dir.join("identities.jsonl");
    if let Err(e) = write_file(&csv_path, &csv).and_then(|_| write_file(&json_path, &jsonl)) {
        return config_error(e);
    }
    if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

pub fn sweep(cfg: &RunConfig) -> i32 {
    let family = match cfg.sweep_family() {
        Ok(f) => f,
        Err(e) => return config_error(e),
    };
    let solver = match cfg.solver() {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let rows = match domain_sweep(&family, cfg.sweep_grid(), &solver) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let head = provenance(cfg, "sweep", cfg.n_r, cfg.n_phi);
    let mut csv = header_lines(&head);
    csv.push_str(&format!("# family={}\n", cfg.family));
    csv.push_str(&sweep_csv(&rows));
    let csv_path = cfg.output_path("sweep.csv");
    if let Err(e) = write_file(&csv_path, &csv) {
        return config_error(e);
    }
    for (name, series) in plot_series(&rows) {
        let text = header_lines(&head) + &series;
        if let Err(e) = write_file(&cfg.out_dir.join("plot").join(format!("{name}.dat")), &text) {
            return config_error(e);
        }
    }
    let mut ok = true;
    for row in &rows {
        match &row.report {
            Ok(r) => {
                let good = r.margins_ok();
                ok &= good;
                println!(
                    "{} param={:.4} hbar_L2={:.4e} defL1={:.4e} rho={:.4} margin53={:.3e} tol={:.2e}",
                    if good { "PASS" } else { "FAIL" },
                    row.param,
                    r.hbar_l2,
                    r.def_l1,
                    r.rho,
                    r.margin53,
                    r.tol
                );
            }
            Err(e) => {
                ok = false;
                println!("FAIL param={:.4} {e}", row.param);
            }
        }
    }
    if let Some(slope) = scaling_slope(&rows) {
        println!("log-log slope of hbar_L2^2 vs defL1: {slope:.4}");
    }
    println!("wrote {}", csv_path.display());
    if ok {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}

pub fn selftest(cfg: &RunConfig) -> i32 {
    println!("seed={} cases={}", cfg.seed, cfg.cases);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let results = selftest::run_all(&mut rng, cfg.cases);
    for r in &results {
        println!("{}", r.line());
    }
    if results.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    }
}
