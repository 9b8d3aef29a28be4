//! Command-line front end: `gen`, `solve`, `verify`, `sweep`, `selftest`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 Newton non-convergence,
//! 4 spacelike breakdown, 5 verification failure.

// negated comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod selftest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::commands::EXIT_CONFIG;

#[derive(Debug, Parser)]
#[command(name = "spacelike", version, about = "CMC spacelike graphs: solve, verify identities, sweep domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an exact cap, radial solution or flat surface.
    Gen(GenArgs),
    /// Solve the CMC Dirichlet problem.
    Solve(CommonArgs),
    /// Evaluate identities on a surface dump.
    Verify(VerifyArgs),
    /// Stability sweep over a domain family.
    Sweep(SweepArgs),
    /// Randomized algebraic checks against brute-force oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML key/value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// disk, ellipse or fourier.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long = "n-r")]
    pub n_r: Option<i64>,
    #[arg(long = "n-phi")]
    pub n_phi: Option<i64>,
    /// Boundary value.
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Primary output file (defaults to a fixed name in the output directory).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<i64>,
    /// Override any configuration key, e.g. `--set tol=1e-9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, group = "kind")]
    pub cap: bool,
    #[arg(long, group = "kind")]
    pub flat: bool,
    #[arg(long, group = "kind")]
    pub radial: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Disk radius, or `auto` for `√(θ₀² − 1)`.
    #[arg(long = "R")]
    pub big_r: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// 54, 55, 56, 57, l33, 212 or ellipticity; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    pub id: Vec<String>,
    /// euclid, metric, riemannian, both (euclid and metric) or all.
    #[arg(long)]
    pub flag: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub k: Option<i64>,
    #[arg(long)]
    pub l: Option<i64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ellipse, fourier or disk.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ratios: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub cases: Option<i64>,
}

fn put<T: Into<Value>>(t: &mut Table, key: &str, v: Option<T>) {
    if let Some(v) = v {
        t.insert(key.into(), v.into());
    }
}

fn path_value(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.to_string_lossy().into_owned())
}

impl CommonArgs {
    fn table(&self) -> Table {
        let mut t = Table::new();
        put(&mut t, "domain", self.domain.clone());
        put(&mut t, "radius", self.radius);
        put(&mut t, "a", self.a);
        put(&mut t, "b", self.b);
        put(&mut t, "n_r", self.n_r);
        put(&mut t, "n_phi", self.n_phi);
        put(&mut t, "c", self.c);
        put(&mut t, "out_dir", path_value(self.out_dir.clone()));
        put(&mut t, "output", path_value(self.output.clone()));
        put(&mut t, "seed", self.seed);
        t
    }
}

fn seq<T: Into<Value> + Clone>(v: &[T]) -> Option<Value> {
    (!v.is_empty()).then(|| Value::Array(v.iter().cloned().map(Into::into).collect()))
}

/// Resolves the subcommand arguments into a configuration and runs it.
pub fn dispatch(command: Command) -> i32 {
    let (common, flags, run): (&CommonArgs, Table, fn(&config::RunConfig) -> i32) = match &command {
        Command::Gen(g) => {
            let mut t = Table::new();
            let kind = if g.flat {
                Some("flat")
            } else if g.radial {
                Some("radial")
            } else if g.cap {
                Some("cap")
            } else {
                None
            };
            put(&mut t, "surface", kind);
            put(&mut t, "theta0", g.theta0);
            match g.big_r.as_deref() {
                Some("auto") => put(&mut t, "radius_auto", Some(true)),
                Some(r) => match r.parse::<f64>() {
                    Ok(r) => put(&mut t, "radius", Some(r)),
                    Err(_) => {
                        eprintln!("error: --R expects a number or 'auto', got '{r}'");
                        return EXIT_CONFIG;
                    }
                },
                None => {}
            }
            (&g.common, t, commands::gen)
        }
        Command::Solve(c) => (c, Table::new(), commands::solve),
        Command::Verify(v) => {
            let mut t = Table::new();
            put(&mut t, "input", path_value(v.input.clone()));
            put(&mut t, "ids", seq(&v.id));
            put(&mut t, "flag", v.flag.clone());
            put(&mut t, "verify_tol", v.tol);
            put(&mut t, "k", v.k);
            put(&mut t, "l", v.l);
            (&v.common, t, commands::verify)
        }
        Command::Sweep(s) => {
            let mut t = Table::new();
            put(&mut t, "family", s.family.clone());
            put(&mut t, "ratios", seq(&s.ratios));
            put(&mut t, "amplitudes", seq(&s.amplitudes));
            (&s.common, t, commands::sweep)
        }
        Command::Selftest(s) => {
            let mut t = Table::new();
            put(&mut t, "cases", s.cases);
            (&s.common, t, commands::selftest)
        }
    };
    let mut merged = common.table();
    merged.extend(flags);
    match config::load(common.config.as_deref(), merged, &common.set) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            code
        }
    }
}
