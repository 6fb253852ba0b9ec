use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use facloc::centers::{CenterInstance, Objective};
use facloc::instance::gen_euclidean;
use facloc::io::{self, Params};
use facloc::lp_rounding::LpSolution;
use facloc::oracle::{exact_facloc, exact_kobjective};
use facloc::runner::{self, Algo};
use facloc::{Ctx, Error, FLInstance, Result};
use serde::Serialize;

#[derive(Args)]
pub struct BenchArgs {
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "greedy,pd")]
    algo: Vec<Algo>,
    /// Comma-separated `n_fxn_c` sizes of generated instances.
    #[arg(long, value_delimiter = ',', default_value = "4x8")]
    sizes: Vec<String>,
    /// Fixed instance instead of generated ones.
    #[arg(long, conflicts_with = "sizes")]
    instance: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    eps: Vec<f64>,
    /// Seeds `seed..seed+seeds`.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    alpha: Option<f64>,
    /// Fill `oracle_opt` and `ratio` by exact enumeration.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// CSV file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One CSV row; field order is the column order.
#[derive(Serialize)]
struct Row {
    algo: String,
    n_f: usize,
    n_c: usize,
    k: Option<usize>,
    eps: f64,
    seed: u64,
    cost: f64,
    oracle_opt: Option<f64>,
    ratio: Option<f64>,
    rounds: usize,
    subselection_rounds: usize,
    primitive_calls: u64,
    wall_ms: f64,
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("size `{s}` is not of the form NFxNC"));
    let (a, b) = s.split_once('x').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn optimum(inst: &FLInstance, algo: Algo, k: usize) -> Result<f64> {
    let obj = match algo {
        Algo::Kcenter => Objective::Center,
        Algo::Kmedian => Objective::Median,
        Algo::Kmeans => Objective::Means,
        _ => return Ok(exact_facloc(inst)?.cost),
    };
    let cinst = CenterInstance::from_fl(inst, k)?;
    Ok(exact_kobjective(&cinst, k, obj)?.cost)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let ctx = Ctx::with_workers(a.workers)?;
    let mut cases: Vec<(FLInstance, u64)> = Vec::new();
    match &a.instance {
        Some(p) => {
            let inst = io::read_instance(p)?;
            cases.extend((a.seed..a.seed + a.seeds).map(|s| (inst.clone(), s)));
        }
        None => {
            for size in &a.sizes {
                let (n_f, n_c) = parse_size(size)?;
                for s in a.seed..a.seed + a.seeds {
                    cases.push((gen_euclidean(n_f, n_c, 2, (0.1, 1.0), s)?, s));
                }
            }
        }
    }

    let mut out = csv::Writer::from_writer(Vec::new());
    for (inst, seed) in &cases {
        let lp = if a.algo.contains(&Algo::LpRound) {
            let opt = exact_facloc(inst)?;
            Some(LpSolution::from_open_set(inst, &opt.set)?)
        } else {
            None
        };
        for &algo in &a.algo {
            let k = algo.needs_k().then_some(a.k);
            let opt = if a.oracle {
                Some(optimum(inst, algo, a.k)?)
            } else {
                None
            };
            for &eps in &a.eps {
                let params = Params {
                    eps: Some(eps),
                    alpha: a.alpha,
                    k,
                    seed: *seed,
                };
                let start = Instant::now();
                let sol = runner::solve(&ctx, inst, algo, &params, lp.as_ref())?;
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let cost = sol.costs.total;
                out.serialize(Row {
                    algo: algo.name().into(),
                    n_f: inst.n_f(),
                    n_c: inst.n_c(),
                    k,
                    eps,
                    seed: *seed,
                    cost,
                    oracle_opt: opt,
                    ratio: opt.map(|o| if o > 0.0 { cost / o } else { 1.0 }),
                    rounds: sol.counters.rounds,
                    subselection_rounds: sol.counters.subselection_rounds,
                    primitive_calls: sol.counters.primitive_calls,
                    wall_ms,
                })
                .map_err(|e| Error::Internal(e.to_string()))?;
            }
        }
    }
    let bytes = out
        .into_inner()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?;
    match &a.out {
        Some(p) => io::write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
