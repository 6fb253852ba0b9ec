//! One entry point per algorithm producing a [`SolutionFile`], and the
//! certificate checks that re-verify such a file against its instance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::centers::{
    find_improving_swap, kcenter_solve, local_search_solve, radius, CenterInstance, Objective,
    SwapState,
};
use crate::error::{Error, Result};
use crate::greedy::{greedy_dual_check, greedy_solve};
use crate::instance::{gamma_bounds, FLInstance, Solution};
use crate::io::{Certificate, Costs, Counters, Params, SolutionFile, FORMAT_VERSION};
use crate::lp_rounding::{connection_bound_of, lp_round_solve, LpSolution, DEFAULT_ALPHA};
use crate::oracle::k_cost;
use crate::primal_dual::{contribution_graph, pd_dual_check, pd_solve};
use crate::primitives::Ctx;
use crate::tol;

pub const DEFAULT_EPS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Greedy,
    Pd,
    LpRound,
    Kcenter,
    Kmedian,
    Kmeans,
}

impl Algo {
    pub const ALL: [Algo; 6] = [
        Algo::Greedy,
        Algo::Pd,
        Algo::LpRound,
        Algo::Kcenter,
        Algo::Kmedian,
        Algo::Kmeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Greedy => "greedy",
            Algo::Pd => "pd",
            Algo::LpRound => "lp-round",
            Algo::Kcenter => "kcenter",
            Algo::Kmedian => "kmedian",
            Algo::Kmeans => "kmeans",
        }
    }

    pub fn needs_k(self) -> bool {
        matches!(self, Algo::Kcenter | Algo::Kmedian | Algo::Kmeans)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

fn fl_file(
    algo: Algo,
    params: Params,
    sol: &Solution,
    counters: Counters,
    certificate: Certificate,
) -> SolutionFile {
    SolutionFile {
        version: FORMAT_VERSION,
        algo: algo.name().into(),
        params,
        open: sol.open.clone(),
        assign: sol.assign.clone(),
        costs: Costs {
            facility: sol.facility_cost,
            connection: sol.connection_cost,
            total: sol.total,
        },
        objective: None,
        counters,
        certificate,
    }
}

fn nearest_assignment(cinst: &CenterInstance, centers: &[usize]) -> Vec<usize> {
    (0..cinst.n())
        .map(|j| {
            *centers
                .iter()
                .min_by(|&&a, &&b| cinst.d(j, a).total_cmp(&cinst.d(j, b)).then(a.cmp(&b)))
                .expect("nonempty center set")
        })
        .collect()
}

fn k_file(
    algo: Algo,
    params: Params,
    centers: Vec<usize>,
    assign: Vec<usize>,
    value: f64,
    counters: Counters,
    certificate: Certificate,
) -> SolutionFile {
    SolutionFile {
        version: FORMAT_VERSION,
        algo: algo.name().into(),
        params,
        open: centers,
        assign,
        costs: Costs {
            facility: 0.0,
            connection: value,
            total: value,
        },
        objective: Some(value),
        counters,
        certificate,
    }
}

/// Run `algo`. `lp` is required for `lp-round`; `params.k` for the
/// clustering problems.
pub fn solve(
    ctx: &Ctx,
    inst: &FLInstance,
    algo: Algo,
    params: &Params,
    lp: Option<&LpSolution>,
) -> Result<SolutionFile> {
    let eps = params.eps.unwrap_or(DEFAULT_EPS);
    let seed = params.seed;
    let mut params = params.clone();
    params.eps = Some(eps);
    let calls0 = ctx.calls();
    let out = match algo {
        Algo::Greedy => {
            let run = greedy_solve(ctx, inst, eps, seed)?;
            let counters = Counters {
                rounds: run.outer_rounds,
                subselection_rounds: run.total_subselection_rounds(),
                dominator_rounds: run.total_subselection_rounds(),
                primitive_calls: ctx.calls() - calls0,
            };
            let cert = Certificate::Greedy {
                alpha: run.alpha.clone(),
                gamma: run.gamma,
                eps,
            };
            fl_file(algo, params, &run.solution, counters, cert)
        }
        Algo::Pd => {
            let run = pd_solve(ctx, inst, eps, seed)?;
            let counters = Counters {
                rounds: run.iterations,
                subselection_rounds: 0,
                dominator_rounds: run.dominator_rounds,
                primitive_calls: ctx.calls() - calls0,
            };
            let cert = Certificate::PrimalDual {
                alpha: run.alpha.clone(),
                tentative: run.tentative.clone(),
                gamma: run.gamma,
                eps,
            };
            fl_file(algo, params, &run.solution, counters, cert)
        }
        Algo::LpRound => {
            let lp =
                lp.ok_or_else(|| Error::invalid("lp-round needs a fractional solution (--lp)"))?;
            let alpha = params.alpha.unwrap_or(DEFAULT_ALPHA);
            params.alpha = Some(alpha);
            let (flp, run) = lp_round_solve(ctx, inst, lp, alpha, eps, seed)?;
            let counters = Counters {
                rounds: run.rounds,
                subselection_rounds: 0,
                dominator_rounds: run.dominator_rounds,
                primitive_calls: ctx.calls() - calls0,
            };
            let cert = Certificate::LpRound {
                alpha,
                eps,
                theta: flp.theta,
                y: flp.y_orig.clone(),
                delta: flp.delta.clone(),
                cheapest: run.cheapest.clone(),
                round_of: run.round_of.clone(),
            };
            fl_file(algo, params, &run.solution, counters, cert)
        }
        Algo::Kcenter => {
            let k = params.k.ok_or_else(|| Error::invalid("kcenter needs k"))?;
            let cinst = CenterInstance::from_fl(inst, k)?;
            let run = kcenter_solve(ctx, &cinst, seed);
            let counters = Counters {
                rounds: run.probes.len(),
                subselection_rounds: 0,
                dominator_rounds: run.rounds,
                primitive_calls: ctx.calls() - calls0,
            };
            let assign = nearest_assignment(&cinst, &run.centers);
            let cert = Certificate::KCenter {
                threshold_index: run.threshold_index,
                threshold: run.threshold,
                radius: run.radius,
            };
            k_file(
                algo,
                params,
                run.centers,
                assign,
                run.radius,
                counters,
                cert,
            )
        }
        Algo::Kmedian | Algo::Kmeans => {
            let objective = if algo == Algo::Kmedian {
                Objective::Median
            } else {
                Objective::Means
            };
            let k = params
                .k
                .ok_or_else(|| Error::invalid(format!("{algo} needs k")))?;
            let cinst = CenterInstance::from_fl(inst, k)?;
            let run = local_search_solve(ctx, &cinst, eps, objective, seed)?;
            let counters = Counters {
                rounds: run.rounds,
                subselection_rounds: 0,
                dominator_rounds: run.kcenter.rounds,
                primitive_calls: ctx.calls() - calls0,
            };
            let cert = Certificate::LocalSearch {
                objective,
                eps,
                beta: run.beta,
                history: run.history.clone(),
            };
            k_file(
                algo,
                params,
                run.centers,
                run.assign,
                run.cost,
                counters,
                cert,
            )
        }
    };
    Ok(out)
}

fn fail(msg: impl Into<String>) -> Error {
    Error::Certificate(msg.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(fail(msg()))
    }
}

fn costs_match(a: &Costs, b: &Solution) -> bool {
    tol::approx_eq(a.facility, b.facility_cost)
        && tol::approx_eq(a.connection, b.connection_cost)
        && tol::approx_eq(a.total, b.total)
}

/// Re-check `sol` against `inst`. Failures are [`Error::Certificate`].
pub fn verify_solution(ctx: &Ctx, inst: &FLInstance, sol: &SolutionFile) -> Result<()> {
    let algo: Algo = sol.algo.parse()?;
    ensure(sol.assign.len() == inst.n_c(), || {
        format!("assignment has {} entries", sol.assign.len())
    })?;
    match &sol.certificate {
        Certificate::Greedy { alpha, gamma, eps } => {
            ensure(algo == Algo::Greedy, || {
                "greedy certificate on another algorithm".into()
            })?;
            let s = fl_solution(inst, sol)?;
            check_gamma(ctx, inst, *gamma)?;
            ensure(alpha.len() == inst.n_c(), || {
                "alpha has the wrong length".into()
            })?;
            let dual = greedy_dual_check(inst, alpha, 3.0);
            ensure(dual.feasible, || {
                format!(
                    "alpha/3 infeasible at facility {} (slack {})",
                    dual.worst_facility, dual.worst_slack
                )
            })?;
            let sum_alpha: f64 = alpha.iter().sum();
            let rhs = 2.0 * (1.0 + eps).powi(2) * sum_alpha + gamma / inst.m() as f64;
            ensure(tol::leq(s.total, rhs), || {
                format!("cost {} exceeds the dual ledger {rhs}", s.total)
            })
        }
        Certificate::PrimalDual {
            alpha,
            tentative,
            gamma,
            eps,
        } => {
            ensure(algo == Algo::Pd, || {
                "primal-dual certificate on another algorithm".into()
            })?;
            let s = fl_solution(inst, sol)?;
            check_gamma(ctx, inst, *gamma)?;
            ensure(alpha.len() == inst.n_c(), || {
                "alpha has the wrong length".into()
            })?;
            ensure(tentative.iter().all(|&i| i < inst.n_f()), || {
                "tentative facility out of range".into()
            })?;
            let h = contribution_graph(inst, alpha, tentative, *eps);
            let check = pd_dual_check(inst, &s, alpha, &h, *gamma, *eps);
            ensure(check.contributions.feasible, || {
                format!(
                    "contributions exceed the cost of facility {} (slack {})",
                    check.contributions.worst_facility, check.contributions.worst_slack
                )
            })?;
            ensure(check.ledger_ok(), || {
                format!("ledger {} exceeds {}", check.ledger_lhs, check.ledger_rhs)
            })
        }
        Certificate::LpRound {
            alpha,
            eps,
            theta,
            y,
            delta,
            cheapest,
            round_of,
        } => {
            ensure(algo == Algo::LpRound, || {
                "lp certificate on another algorithm".into()
            })?;
            let s = fl_solution(inst, sol)?;
            let n_c = inst.n_c();
            ensure(
                y.len() == inst.n_f()
                    && delta.len() == n_c
                    && cheapest.len() == n_c
                    && round_of.len() == n_c,
                || "certificate vectors have the wrong length".into(),
            )?;
            ensure(cheapest.iter().all(|&i| i < inst.n_f()), || {
                "cheapest facility out of range".into()
            })?;
            for j in 0..n_c {
                let bound = connection_bound_of(
                    *alpha,
                    *eps,
                    *theta,
                    inst.m(),
                    delta[j],
                    s.is_open(cheapest[j]),
                    round_of[j] == 0,
                );
                let d = inst.d(j, s.assign[j]);
                ensure(tol::leq(d, bound), || {
                    format!("client {j} connects at {d} > {bound}")
                })?;
            }
            let fy: f64 = (0..inst.n_f()).map(|i| inst.cost(i) * y[i]).sum();
            let cap = (1.0 + 1.0 / alpha) * fy;
            ensure(tol::leq(s.facility_cost, cap), || {
                format!("facility cost {} exceeds {cap}", s.facility_cost)
            })
        }
        Certificate::KCenter {
            threshold_index,
            threshold,
            radius: r,
        } => {
            ensure(algo == Algo::Kcenter, || {
                "k-center certificate on another algorithm".into()
            })?;
            let k = sol.params.k.ok_or_else(|| fail("k missing from params"))?;
            let cinst = CenterInstance::from_fl(inst, k)?;
            check_centers(&cinst, sol)?;
            ensure(sol.open.len() <= k, || {
                format!("{} centers for k = {k}", sol.open.len())
            })?;
            let ds = cinst.distance_set();
            ensure(ds.get(*threshold_index) == Some(threshold), || {
                "threshold is not a pairwise distance".into()
            })?;
            let actual = radius(&cinst, &sol.open);
            ensure(tol::approx_eq(actual, *r), || {
                format!("radius is {actual}, recorded {r}")
            })?;
            ensure(tol::leq(actual, 2.0 * threshold), || {
                format!("radius {actual} exceeds twice {threshold}")
            })
        }
        Certificate::LocalSearch {
            objective,
            eps,
            beta,
            history,
        } => {
            ensure(matches!(algo, Algo::Kmedian | Algo::Kmeans), || {
                "local-search certificate on another algorithm".into()
            })?;
            let k = sol.params.k.ok_or_else(|| fail("k missing from params"))?;
            let cinst = CenterInstance::from_fl(inst, k)?;
            check_centers(&cinst, sol)?;
            let value = k_cost(&cinst, &sol.open, *objective);
            let last = *history.last().ok_or_else(|| fail("empty history"))?;
            ensure(tol::approx_eq(value, last), || {
                format!("objective is {value}, recorded {last}")
            })?;
            for w in history.windows(2) {
                let limit = (1.0 - beta / k as f64) * w[0];
                ensure(w[1] < w[0] && tol::leq(w[1], limit), || {
                    format!("swap from {} to {} misses the factor", w[0], w[1])
                })?;
            }
            let (_, ranks) = ctx.sort_rows(cinst.dist_matrix());
            let state = SwapState::new(ctx, &cinst, &ranks, &sol.open, *objective, *eps)?;
            match find_improving_swap(ctx, &cinst, &state) {
                None => Ok(()),
                Some(s) => Err(fail(format!(
                    "swap {} -> {} still improves to {}",
                    s.out, s.inn, s.new_cost
                ))),
            }
        }
    }
}

fn fl_solution(inst: &FLInstance, sol: &SolutionFile) -> Result<Solution> {
    let s = Solution::from_assignment(inst, sol.open.clone(), sol.assign.clone(), 0, 0)
        .map_err(|e| fail(e.to_string()))?;
    ensure(costs_match(&sol.costs, &s), || {
        format!("recorded costs differ from {}", s.total)
    })?;
    Ok(s)
}

fn check_gamma(ctx: &Ctx, inst: &FLInstance, gamma: f64) -> Result<()> {
    let g = gamma_bounds(ctx, inst)?.gamma;
    ensure(g == gamma, || format!("gamma is {g}, recorded {gamma}"))
}

fn check_centers(cinst: &CenterInstance, sol: &SolutionFile) -> Result<()> {
    let n = cinst.n();
    ensure(sol.open.iter().all(|&c| c < n), || {
        "center out of range".into()
    })?;
    ensure(sol.assign.iter().all(|a| sol.open.contains(a)), || {
        "point assigned to a non-center".into()
    })?;
    for (j, &c) in sol.assign.iter().enumerate() {
        let best = sol
            .open
            .iter()
            .map(|&o| cinst.d(j, o))
            .fold(f64::INFINITY, f64::min);
        ensure(cinst.d(j, c) == best, || {
            format!("point {j} is not at its nearest center")
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::e2;
    use crate::instance::gen_euclidean;

    fn params(k: Option<usize>) -> Params {
        Params {
            eps: None,
            alpha: None,
            k,
            seed: 3,
        }
    }

    #[test]
    fn names_parse_back() {
        for a in Algo::ALL {
            assert_eq!(a.name().parse::<Algo>().unwrap(), a);
        }
        assert!("simplex".parse::<Algo>().is_err());
    }

    #[test]
    fn every_algorithm_verifies() {
        let ctx = Ctx::default();
        let inst = gen_euclidean(5, 9, 2, (0.2, 1.0), 4).unwrap();
        let lp = LpSolution::from_open_set(&inst, &[0, 2]).unwrap();
        for a in Algo::ALL {
            let k = a.needs_k().then_some(3);
            let sol = solve(&ctx, &inst, a, &params(k), Some(&lp)).unwrap();
            verify_solution(&ctx, &inst, &sol).unwrap_or_else(|e| panic!("{a}: {e}"));
        }
    }

    #[test]
    fn pd_on_e2_stays_within_the_slack() {
        let ctx = Ctx::default();
        let sol = solve(&ctx, &e2(), Algo::Pd, &params(None), None).unwrap();
        assert!(sol.costs.total <= 9.3);
    }

    #[test]
    fn tampered_files_fail() {
        let ctx = Ctx::default();
        let inst = gen_euclidean(4, 8, 2, (0.2, 1.0), 1).unwrap();
        let sol = solve(&ctx, &inst, Algo::Greedy, &params(None), None).unwrap();
        let mut bad = sol.clone();
        if let Certificate::Greedy { alpha, .. } = &mut bad.certificate {
            alpha.iter_mut().for_each(|a| *a *= 10.0);
        }
        assert!(matches!(
            verify_solution(&ctx, &inst, &bad),
            Err(Error::Certificate(_))
        ));
        let mut bad = sol;
        bad.costs.total += 1.0;
        assert!(matches!(
            verify_solution(&ctx, &inst, &bad),
            Err(Error::Certificate(_))
        ));

        let sol = solve(&ctx, &inst, Algo::Kmedian, &params(Some(2)), None).unwrap();
        let mut bad = sol.clone();
        let closed = (0..inst.n_c()).find(|c| !sol.open.contains(c)).unwrap();
        bad.open[0] = closed;
        bad.assign = (0..inst.n_c()).map(|_| bad.open[0]).collect();
        assert!(verify_solution(&ctx, &inst, &bad).is_err());
    }

    #[test]
    fn missing_inputs_are_usage_errors() {
        let ctx = Ctx::default();
        let inst = e2();
        assert!(matches!(
            solve(&ctx, &inst, Algo::LpRound, &params(None), None),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            solve(&ctx, &inst, Algo::Kcenter, &params(None), None),
            Err(Error::InvalidArgument(_))
        ));
    }
}
