use std::path::PathBuf;

use clap::Args;
use facloc::centers::{CenterInstance, Objective};
use facloc::dominator::{max_dom, max_u_dom, Bipartite, Graph};
use facloc::instance::gen_euclidean;
use facloc::io::{self, Params};
use facloc::lp_rounding::LpSolution;
use facloc::oracle::{check_dominator, check_u_dominator, exact_facloc, exact_kobjective};
use facloc::primitives::derive_seed;
use facloc::runner::{self, Algo};
use facloc::{Ctx, Error, FLInstance, Result};

#[derive(Args)]
pub struct VerifyArgs {
    /// Instance to check against; random instances when absent.
    instance: Option<PathBuf>,
    /// Solution file to re-check.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Compare every algorithm with the exact optimum.
    #[arg(long)]
    oracle: bool,
    /// Random instances per sweep.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

/// Multiplicative guarantee of each algorithm; the facility-location ones
/// also get `3 opt/m` of additive slack (`gamma <= opt`).
fn ratio_bound(algo: Algo, eps: f64) -> f64 {
    match algo {
        Algo::Greedy => 6.0 + eps,
        Algo::Pd => 3.0 * (1.0 + eps),
        Algo::LpRound => 4.0 * (1.0 + eps),
        Algo::Kcenter => 2.0,
        Algo::Kmedian => 5.0 + eps,
        Algo::Kmeans => 81.0 + eps,
    }
}

#[derive(Default)]
struct Tally {
    runs: usize,
    worst: f64,
    failures: Vec<String>,
}

fn oracle_value(inst: &FLInstance, algo: Algo, k: usize) -> Result<f64> {
    if !algo.needs_k() {
        return Ok(exact_facloc(inst)?.cost);
    }
    let cinst = CenterInstance::from_fl(inst, k)?;
    let obj = match algo {
        Algo::Kcenter => Objective::Center,
        Algo::Kmedian => Objective::Median,
        _ => Objective::Means,
    };
    Ok(exact_kobjective(&cinst, k, obj)?.cost)
}

fn check_instance(
    ctx: &Ctx,
    inst: &FLInstance,
    a: &VerifyArgs,
    seed: u64,
    tallies: &mut [(Algo, Tally)],
) -> Result<()> {
    let lp = if inst.n_f() <= facloc::oracle::MAX_EXACT_FACILITIES {
        let opt = exact_facloc(inst)?;
        Some(LpSolution::from_open_set(inst, &opt.set)?)
    } else {
        None
    };
    for (algo, tally) in tallies.iter_mut() {
        let algo = *algo;
        if algo == Algo::LpRound && lp.is_none() {
            continue;
        }
        let k = algo.needs_k().then_some(a.k.min(inst.n_c()));
        let params = Params {
            eps: a.eps,
            alpha: None,
            k,
            seed,
        };
        let sol = runner::solve(ctx, inst, algo, &params, lp.as_ref())?;
        tally.runs += 1;
        if let Err(e) = runner::verify_solution(ctx, inst, &sol) {
            tally.failures.push(format!("seed {seed}: {e}"));
        }
        if a.oracle {
            let opt = oracle_value(inst, algo, k.unwrap_or(0))?;
            let slack = if algo.needs_k() {
                0.0
            } else {
                3.0 * opt / inst.m() as f64
            };
            let bound = ratio_bound(algo, a.eps.unwrap_or(runner::DEFAULT_EPS)) * opt + slack;
            let ratio = if opt > 0.0 {
                sol.costs.total / opt
            } else {
                1.0
            };
            tally.worst = tally.worst.max(ratio);
            if sol.costs.total > bound * (1.0 + 1e-9) {
                tally.failures.push(format!(
                    "seed {seed}: cost {} above {bound}",
                    sol.costs.total
                ));
            }
        }
    }
    Ok(())
}

fn dominator_sweep(ctx: &Ctx, trials: usize, seed: u64) -> usize {
    let mut failures = 0;
    for t in 0..trials as u64 {
        let s = derive_seed(seed, "verify-graph", t);
        let g = Graph::random(
            8 + (t as usize * 7) % 40,
            [0.1, 0.3, 0.5][t as usize % 3],
            s,
        );
        if !check_dominator(&g, &max_dom(ctx, &g, s).set) {
            failures += 1;
        }
        let h = Bipartite::random(4 + t as usize % 20, 4 + (t as usize * 3) % 20, 0.3, s);
        if !check_u_dominator(&h, &max_u_dom(ctx, &h, s).set) {
            failures += 1;
        }
    }
    failures
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let ctx = Ctx::with_workers(a.workers)?;
    if let Some(sp) = &a.solution {
        let ip = a.instance.as_ref().ok_or_else(|| {
            Error::InvalidArgument("verify --solution needs the instance file".into())
        })?;
        let inst = io::read_instance(ip)?;
        let sol = io::read_solution(sp)?;
        runner::verify_solution(&ctx, &inst, &sol)?;
        println!(
            "ok: {} solution with cost {} passes its certificate",
            sol.algo, sol.costs.total
        );
        return Ok(());
    }

    let mut tallies: Vec<(Algo, Tally)> = Algo::ALL
        .into_iter()
        .map(|x| (x, Tally::default()))
        .collect();
    let mut dom_failures = 0;
    match &a.instance {
        Some(p) => {
            let inst = io::read_instance(p)?;
            check_instance(&ctx, &inst, a, a.seed, &mut tallies)?;
        }
        None => {
            for t in 0..a.trials as u64 {
                let s = derive_seed(a.seed, "verify-instance", t);
                let inst = gen_euclidean(2 + t as usize % 5, 4 + t as usize % 7, 2, (0.1, 1.0), s)?;
                check_instance(&ctx, &inst, a, s, &mut tallies)?;
            }
            dom_failures = dominator_sweep(&ctx, a.trials, a.seed);
            println!(
                "dominator checks: {} graphs, {dom_failures} failures",
                2 * a.trials
            );
        }
    }
    let mut failed = dom_failures;
    for (algo, t) in &tallies {
        if t.runs == 0 {
            continue;
        }
        if a.oracle {
            println!(
                "{algo}: {} runs, max ratio {:.4} (bound {:.2}), {} failures",
                t.runs,
                t.worst,
                ratio_bound(*algo, a.eps.unwrap_or(runner::DEFAULT_EPS)),
                t.failures.len()
            );
        } else {
            println!(
                "{algo}: {} runs, {} certificate failures",
                t.runs,
                t.failures.len()
            );
        }
        for f in &t.failures {
            println!("  {f}");
        }
        failed += t.failures.len();
    }
    if failed > 0 {
        return Err(Error::Certificate(format!("{failed} checks failed")));
    }
    Ok(())
}
