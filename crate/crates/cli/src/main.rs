//! `starforms verify|sweep|chain|moments --config <path> --out <path>`
//!
//! Exit codes: 0 pass, 1 failed check, 2 configuration error, 3 I/O error.
//! `STARFORMS_WORKERS` sets the size of the worker pool.

mod config;
mod error;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use starforms::chain::GlueReport;
use starforms::sweep::run_sweep;
use starforms::verify::{run_chain_case, run_verify};
use starforms::Mollifier;

use config::RunConfig;
use error::CliError;
use output::{num, write_csv, write_text};

type Handler = fn(&RunConfig, &Path) -> Result<(), CliError>;

const WORKERS_VAR: &str = "STARFORMS_WORKERS";

#[derive(Parser)]
#[command(
    name = "starforms",
    version,
    about = "Property suites, sweeps and chain experiments for regularized homotopy operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Debug, clap::Args)]
struct Paths {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Report (verify) or CSV file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run every property suite and write a residual report.
    Verify(Paths),
    /// Bound-shape sweep over a cigar family.
    Sweep(Paths),
    /// Chain gluing experiments.
    Chain(Paths),
    /// Mollifier moment table.
    Moments(Paths),
}

fn init_workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(WORKERS_VAR) else {
        return Ok(());
    };
    let workers: usize = raw.trim().parse().ok().filter(|&w| w > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{WORKERS_VAR} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let report = run_verify(&cfg.verify()?)?;
    let mut text = String::new();
    for c in &report.checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        writeln!(
            text,
            "{status} {} residual={} tolerance={}",
            c.key(),
            num(c.residual),
            num(c.tolerance)
        )
        .expect("string write");
    }
    let failed: Vec<String> = report.failures().map(|c| c.key()).collect();
    writeln!(
        text,
        "{} of {} checks passed",
        report.checks.len() - failed.len(),
        report.checks.len()
    )
    .expect("string write");
    write_text(out, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "failing invariants: {}",
            failed.join(", ")
        )))
    }
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let series = run_sweep(&cfg.sweep()?)?;
    let header = [
        "n",
        "ell",
        "kind",
        "R",
        "rho",
        "vol_ratio",
        "kappa",
        "bound",
        "empirical",
        "seed",
        "ensemble",
    ];
    let mut rows = Vec::new();
    for s in &series {
        for row in &s.rows {
            let r = &row.report;
            rows.push(vec![
                r.n.to_string(),
                r.l.to_string(),
                r.kind.name().to_string(),
                num(0.5 * r.stats.diameter),
                num(0.5 * r.stats.ball_diameter),
                num(r.stats.ratio_vol),
                num(r.kappa),
                num(r.bound_value),
                num(r.empirical_ratio),
                r.seed.to_string(),
                r.ensemble.to_string(),
            ]);
        }
    }
    write_csv(out, &header.map(String::from), &rows)?;
    let failed: Vec<String> = series
        .iter()
        .filter(|s| !s.passed())
        .map(|s| {
            let mut why = Vec::new();
            if !s.violations.is_empty() {
                why.push(format!("bound exceeded at {:?}", s.violations));
            }
            if !s.empirical_monotone {
                why.push("empirical not nondecreasing".to_string());
            }
            if !s.bound_monotone {
                why.push("bound not nondecreasing".to_string());
            }
            format!("sweep.{}_l{} ({})", s.kind.name(), s.l, why.join("; "))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "failing series: {}",
            failed.join(", ")
        )))
    }
}

fn chain(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let plan = cfg.chain()?;
    let s = &plan.section;
    let mut cases: Vec<(usize, usize, bool)> = Vec::new();
    for &l in &s.degrees {
        cases.extend(s.links.iter().map(|&links| (links, l, false)));
    }
    cases.extend(s.bc_links.iter().map(|&links| (links, 1, true)));
    let reports: Vec<GlueReport> = cases
        .par_iter()
        .map(|&(links, l, bc)| {
            run_chain_case(&plan.spec, links, l, bc, &plan.glue, s.poly_degree, s.seed)
        })
        .collect::<Result<_, _>>()?;

    let header = [
        "N",
        "ell",
        "mode",
        "max_dv_residual",
        "max_interface_jump",
        "v_h1",
        "chain_bound",
        "C_T",
        "C_S",
        "C_P",
        "seed",
    ];
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.links.to_string(),
                r.l.to_string(),
                r.mode().to_string(),
                num(r.max_dv_residual),
                num(r.max_interface_jump),
                num(r.ratio()),
                num(r.chain_bound),
                num(r.constants.c_t),
                num(r.constants.c_s),
                num(r.constants.c_p),
                r.seed.to_string(),
            ]
        })
        .collect();
    write_csv(out, &header.map(String::from), &rows)?;

    let tol = &plan.tolerances;
    let mut failed = Vec::new();
    for r in &reports {
        let tag = format!("chain.{}_N{}_l{}", r.mode(), r.links, r.l);
        let mut checks = vec![("h1_over_bound", r.ratio(), r.chain_bound)];
        if r.bc {
            checks.push(("dv_relative", r.max_dv_residual, tol.glue_bc_dv));
            checks.push(("overlap_trace", r.overlap_trace, 1.0));
            checks.push(("output_trace", r.output_trace, 1.0));
        } else {
            checks.push(("dv", r.max_dv_residual, tol.glue_dv));
            checks.push(("interface_jump", r.max_interface_jump, tol.glue_jump));
            checks.push(("constancy_std", r.constancy_std, tol.glue_constancy));
        }
        failed.extend(
            checks
                .into_iter()
                .filter(|c| c.1.is_nan() || c.1 > c.2)
                .map(|c| format!("{tag}_{}", c.0)),
        );
    }
    for &l in &s.degrees {
        let bounds: Vec<f64> = reports
            .iter()
            .filter(|r| !r.bc && r.l == l)
            .map(|r| r.chain_bound)
            .collect();
        if let Some(&first) = bounds.first() {
            if bounds.iter().any(|b| (b - first).abs() > 1e-12 * first) {
                failed.push(format!("chain.no-bc_l{l}_bound_independent_of_N"));
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "failing invariants: {}",
            failed.join(", ")
        )))
    }
}

fn moments(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let m = cfg.moments()?;
    let n = m.center.len();
    let mollifier = Mollifier::build(&m.center, m.radius, m.max_degree, m.quad_order)?;
    let mut header: Vec<String> = (1..=n).map(|i| format!("alpha_{i}")).collect();
    header.push("value".to_string());
    let rows: Vec<Vec<String>> = mollifier
        .moment_table()
        .map(|(alpha, value)| {
            let mut row: Vec<String> = alpha[..n].iter().map(|a| a.to_string()).collect();
            row.push(num(value));
            row
        })
        .collect();
    write_csv(out, &header, &rows)
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_workers()?;
    let (paths, run): (&Paths, Handler) = match &cli.command {
        Command::Verify(p) => (p, verify),
        Command::Sweep(p) => (p, sweep),
        Command::Chain(p) => (p, chain),
        Command::Moments(p) => (p, moments),
    };
    let cfg = RunConfig::load(&paths.config)?;
    run(&cfg, &paths.out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("starforms: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
