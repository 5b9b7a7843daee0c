//! `lattice-vortex`: run single-domain solves, exhaustion experiments and
//! the verification suites.
//!
//! Exit codes: 0 success, 2 usage error, 3 solver failure, 4 a
//! verification suite or exhaustion certificate failed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use lattice_vortex::chern_simons::MonotoneIteration;
use lattice_vortex::config::{ExhaustConfig, RunConfig};
use lattice_vortex::io;
use lattice_vortex::verify::{run_suite, Suite, SuiteResult, VerifyOptions};
use lattice_vortex::{run_exhaustion, Backend, Error, LatticeDomain, ModelParams, ShiftedLaplacianSystem};
use rayon::prelude::*;
use serde_json::Value;

const EXIT_USAGE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "lattice-vortex", version, about = "Lattice Chern-Simons vortex solver")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Linear solver backend, overriding the configuration.
    #[arg(long, global = true, value_parser = parse_backend)]
    backend: Option<Backend>,
    /// Also write the assembled linear system in COO format.
    #[arg(long, global = true)]
    dump_matrix: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve on a single domain.
    Solve { config: PathBuf },
    /// Solve on a sequence of nested domains.
    Exhaust { config: PathBuf },
    /// Run the randomized property suites.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Box half-widths, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "2,3,5")]
        sizes: Vec<u64>,
        /// Break the Laplacian used by the checks.
        #[arg(long)]
        fault_inject: bool,
    },
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse::<Backend>().map_err(|e| e.to_string())
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: format!("usage error: {e}"),
        }
    }

    fn solver(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: format!("solver error: {e}"),
        }
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Json(_) | Error::Io(_)
    )
}

fn classify(e: Error) -> Failure {
    if is_usage(&e) {
        Failure::usage(e)
    } else {
        Failure::solver(e)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::solver(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut w = create(path)?;
    let text = serde_json::to_string_pretty(value).map_err(Failure::solver)?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(Failure::solver)
}

fn with_writer(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> lattice_vortex::Result<()>,
) -> Result<(), Failure> {
    let mut w = create(path)?;
    f(&mut w).map_err(Failure::solver)?;
    w.flush().map_err(Failure::solver)
}

fn prepare_out(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::solver(format!("{}: {e}", out.display())))
}

fn dump_matrix(path: &Path, domain: &Arc<LatticeDomain>, params: &ModelParams) -> Result<(), Failure> {
    let system = ShiftedLaplacianSystem::assemble(domain.clone(), params.shift).map_err(Failure::solver)?;
    let mut w = create(path)?;
    system.write_coo(&mut w).and_then(|_| w.flush()).map_err(Failure::solver)
}

fn cmd_solve(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let config = RunConfig::from_path(config).map_err(Failure::usage)?;
    let mut setup = config.setup().map_err(Failure::usage)?;
    if let Some(b) = cli.backend {
        setup.params = setup.params.with_backend(b);
    }
    let params = setup.params;
    prepare_out(&cli.out)?;
    if cli.dump_matrix {
        dump_matrix(&cli.out.join("matrix.coo"), &setup.domain, &params)?;
    }

    let mut scheme =
        MonotoneIteration::new(setup.domain.clone(), &setup.vortices, &params).map_err(classify)?;
    let mut failure = None;
    while !scheme.is_converged() {
        if scheme.trace().len() >= params.max_outer_iterations {
            let last = scheme.trace().last();
            failure = Some(Error::NotConverged {
                iterations: scheme.trace().len(),
                last_change: last.map_or(f64::NAN, |r| r.sup_change),
                residual: last.map_or(f64::NAN, |r| r.residual_inf),
            });
            break;
        }
        if let Err(e) = scheme.step() {
            failure = Some(e);
            break;
        }
    }

    with_writer(&cli.out.join("trace.csv"), |w| io::write_trace_csv(scheme.trace(), w))?;
    if let Some(e) = failure {
        let kind = match &e {
            Error::NotConverged { .. } => "not_converged",
            Error::MonotonicityBreakdown { .. } => "monotonicity_breakdown",
            Error::LinearSolve { .. } | Error::NotPositiveDefinite { .. } | Error::Singular { .. } => {
                "linear_solve"
            }
            _ => "solver",
        };
        write_json(&cli.out.join("summary.json"), &io::failure_summary(kind, &e, Some(scheme.trace())))?;
        return Err(Failure::solver(e));
    }
    let solution = scheme.run(|_, _| {}).map_err(Failure::solver)?;
    with_writer(&cli.out.join("solution.csv"), |w| io::write_field_csv(&solution.field, w))?;
    write_json(&cli.out.join("summary.json"), &io::solve_summary(&solution, params.p))?;
    println!(
        "converged in {} iterations, residual {}",
        solution.iterations(),
        io::fmt17(solution.residual_inf())
    );
    Ok(())
}

fn cmd_exhaust(cli: &Cli, config: &Path) -> Result<(), Failure> {
    let config = ExhaustConfig::from_path(config).map_err(Failure::usage)?;
    let mut setup = config.setup().map_err(Failure::usage)?;
    if let Some(b) = cli.backend {
        setup.params = setup.params.with_backend(b);
    }
    prepare_out(&cli.out)?;
    if cli.dump_matrix {
        let domains = setup.schedule.domains().map_err(Failure::usage)?;
        for (r, d) in setup.schedule.radii.iter().zip(&domains) {
            dump_matrix(&cli.out.join(format!("matrix_r{r}.coo")), d, &setup.params)?;
        }
    }
    let estimate = match run_exhaustion(&setup.schedule, &setup.params, &setup.options) {
        Ok(e) => e,
        Err(e) => {
            write_json(&cli.out.join("report.json"), &io::failure_summary("exhaustion", &e, None))?;
            return Err(classify(e));
        }
    };
    write_json(&cli.out.join("report.json"), &io::exhaustion_report(&estimate))?;
    with_writer(&cli.out.join("decay.csv"), |w| io::write_decay_csv(estimate.decay_profile(), w))?;
    with_writer(&cli.out.join("solution.csv"), |w| io::write_field_csv(&estimate.finest_field, w))?;
    for (r, g) in setup.schedule.radii.iter().skip(1).zip(&estimate.inter_domain_gaps) {
        println!("radius {r}: gap {}", io::fmt17(*g));
    }
    if estimate.certificate.certified() {
        println!("certified");
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CHECK,
            message: format!("certificate failed: {:?}", estimate.certificate),
        })
    }
}

fn print_table(results: &[SuiteResult]) {
    println!("{:<20} {:>7} {:>12}  {:<6} detail", "suite", "cases", "worst", "result");
    for r in results {
        println!(
            "{:<20} {:>7} {:>12.4e}  {:<6} {}",
            r.suite.name(),
            r.cases,
            r.worst,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
    }
}

fn cmd_verify(seed: u64, sizes: &[u64], fault_inject: bool) -> Result<(), Failure> {
    let mut opts = VerifyOptions::new(seed, sizes.to_vec()).map_err(Failure::usage)?;
    opts.corrupt_laplacian = fault_inject;
    println!("seed {seed}, sizes {sizes:?}");
    let results: Vec<SuiteResult> = Suite::ALL.par_iter().map(|&s| run_suite(s, &opts)).collect();
    print_table(&results);
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.suite.name()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CHECK,
            message: format!("failed suites: {}", failed.join(", ")),
        })
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("LATTICE_VORTEX_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::usage(format!("LATTICE_VORTEX_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(Failure::solver)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Solve { config } => cmd_solve(cli, config),
        Command::Exhaust { config } => cmd_exhaust(cli, config),
        Command::Verify {
            seed,
            sizes,
            fault_inject,
        } => cmd_verify(*seed, sizes, *fault_inject),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
