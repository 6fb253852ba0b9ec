//! `facloc`: generate instances, solve, verify certificates, benchmark.

mod bench;
mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use facloc::instance::gen_euclidean;
use facloc::io::{self, Params, SolutionFile};
use facloc::lp_rounding::LpSolution;
use facloc::oracle::exact_facloc;
use facloc::runner::{self, Algo};
use facloc::{Ctx, Error, Result};

#[derive(Parser)]
#[command(
    name = "facloc",
    version,
    about = "Approximate metric facility location, k-center, k-median and k-means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random Euclidean instance.
    Gen(GenArgs),
    /// Run one algorithm and write its solution with certificate and counters.
    Solve(SolveArgs),
    /// Re-check a solution file, or run invariant and oracle sweeps.
    Verify(verify::VerifyArgs),
    /// Sweep sizes, eps and seeds; one CSV row per run.
    Bench(bench::BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n_f: usize,
    #[arg(long)]
    n_c: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.1)]
    cost_min: f64,
    #[arg(long, default_value_t = 1.0)]
    cost_max: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the exact optimum as an integral LP solution.
    #[arg(long)]
    lp_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long)]
    algo: Algo,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Fractional LP solution for lp-round.
    #[arg(long)]
    lp: Option<PathBuf>,
    /// Solution file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print counters and wall time to stderr.
    #[arg(long)]
    stats: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Parse { .. } | Error::Validation { .. } | Error::Io { .. } => 3,
        Error::SizeCap { .. } => 4,
        Error::Certificate(_) => 5,
        Error::Internal(_) => 1,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => io::write_text(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let inst = gen_euclidean(a.n_f, a.n_c, a.dim, (a.cost_min, a.cost_max), a.seed)?;
    emit(a.out.as_deref(), &io::instance_to_string(&inst))?;
    if let Some(p) = &a.lp_out {
        let opt = exact_facloc(&inst)?;
        io::write_lp(p, &LpSolution::from_open_set(&inst, &opt.set)?)?;
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let ctx = Ctx::with_workers(a.workers)?;
    let inst = io::read_instance(&a.instance)?;
    let lp = a.lp.as_deref().map(|p| io::read_lp(p, &inst)).transpose()?;
    let params = Params {
        eps: a.eps,
        alpha: a.alpha,
        k: a.k,
        seed: a.seed,
    };
    let start = Instant::now();
    let sol = runner::solve(&ctx, &inst, a.algo, &params, lp.as_ref())?;
    let wall = start.elapsed();
    emit(a.out.as_deref(), &io::solution_to_string(&sol))?;
    if a.stats {
        let c = &sol.counters;
        eprintln!(
            "algo={} cost={} rounds={} subselection_rounds={} dominator_rounds={} primitive_calls={} workers={} wall_ms={:.3}",
            sol.algo,
            sol.costs.total,
            c.rounds,
            c.subselection_rounds,
            c.dominator_rounds,
            c.primitive_calls,
            ctx.workers(),
            wall.as_secs_f64() * 1e3
        );
    }
    // check what was written, read back from disk when there is a file
    let written: SolutionFile = match &a.out {
        Some(p) => io::read_solution(p)?,
        None => sol,
    };
    runner::verify_solution(&ctx, &inst, &written)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
