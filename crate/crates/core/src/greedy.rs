//! Parallel greedy facility location.
//!
//! Every outer round computes each facility's cheapest maximal star over the
//! remaining clients, takes the facilities priced within `(1 + eps)` of the
//! cheapest, and opens a subset of them by randomized subselection. A client
//! removed in a round with threshold `tau` gets dual value `alpha_j = tau`.

use crate::error::{Error, Result};
use crate::instance::{gamma_bounds, FLInstance, Solution};
use crate::primitives::{
    derive_seed, key_index, rank_key, Ctx, DenseMatrix, RankIndex, ReduceOp, Scan,
};
use crate::tol;

pub const DEFAULT_EPS: f64 = 0.1;

/// Cheapest maximal star of one facility: its price and client count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Star {
    pub price: f64,
    pub size: usize,
}

/// Smallest `k` with `p_k < p_{k+1}`, where `p_k = (f + d_1 + ... + d_k)/k`,
/// or the full length when prices never rise. `None` for an empty list.
pub fn cheapest_maximal_star(f: f64, sorted: &[f64]) -> Option<Star> {
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    for (k, &d) in sorted.iter().enumerate() {
        sum += d;
        let p = (f + sum) / (k + 1) as f64;
        if let Some(pp) = prev {
            if tol::strictly_less(pp, p) {
                return Some(Star { price: pp, size: k });
            }
        }
        prev = Some(p);
    }
    prev.map(|price| Star {
        price,
        size: sorted.len(),
    })
}

/// Cheapest maximal stars of all facilities over the alive clients.
#[derive(Debug, Clone)]
pub struct StarTable {
    /// `None` when no client remains.
    pub stars: Vec<Option<Star>>,
    /// Inclusive count of alive clients along each presorted row.
    count: DenseMatrix,
}

impl StarTable {
    /// Whether alive client `j` belongs to facility `i`'s star.
    pub fn contains(&self, ranks: &RankIndex, alive: &[bool], i: usize, j: usize) -> bool {
        match self.stars[i] {
            Some(s) => alive[j] && self.count.get(i, ranks.rank_of(i, j)) as usize <= s.size,
            None => false,
        }
    }
}

/// All stars at once: a masked copy of the presorted rows, two row scans,
/// and two row reductions.
pub fn batched_stars(
    ctx: &Ctx,
    f: &[f64],
    sorted: &DenseMatrix,
    ranks: &RankIndex,
    alive: &[bool],
) -> StarTable {
    let (n_f, n_c) = (sorted.rows(), sorted.cols());
    let live = ctx.map_matrix(n_f, n_c, |i, k| {
        if alive[ranks.column_at(i, k)] {
            1.0
        } else {
            0.0
        }
    });
    let dist = ctx.map_matrix(n_f, n_c, |i, k| live.get(i, k) * sorted.get(i, k));
    let count = ctx.prefix_sum_rows(&live, ReduceOp::Sum, Scan::Inclusive);
    let sums = ctx.prefix_sum_rows(&dist, ReduceOp::Sum, Scan::Inclusive);
    let n_alive = alive.iter().filter(|&&a| a).count();
    let stop: Vec<usize> = ctx.row_reduce_with(n_f, n_c, ReduceOp::Min, |i, k| {
        let c = count.get(i, k) as usize;
        if live.get(i, k) == 0.0 || c < 2 {
            return usize::MAX;
        }
        let s = sums.get(i, k);
        let prev = (f[i] + s - dist.get(i, k)) / (c - 1) as f64;
        let cur = (f[i] + s) / c as f64;
        if tol::strictly_less(prev, cur) {
            c - 1
        } else {
            usize::MAX
        }
    });
    let size: Vec<usize> = stop
        .iter()
        .map(|&s| if s == usize::MAX { n_alive } else { s })
        .collect();
    let price: Vec<f64> = ctx.row_reduce_with(n_f, n_c, ReduceOp::Min, |i, k| {
        let c = count.get(i, k) as usize;
        if live.get(i, k) == 1.0 && c == size[i] {
            (f[i] + sums.get(i, k)) / c as f64
        } else {
            f64::INFINITY
        }
    });
    let stars = size
        .iter()
        .zip(&price)
        .map(|(&size, &price)| (size > 0).then_some(Star { price, size }))
        .collect();
    StarTable { stars, count }
}

/// Output of a greedy run.
#[derive(Debug, Clone)]
pub struct GreedyRun {
    pub solution: Solution,
    /// `tau` of the round that removed each client; `0` for preprocessing.
    pub alpha: Vec<f64>,
    pub eps: f64,
    pub gamma: f64,
    /// Facilities opened by preprocessing.
    pub preprocessed: Vec<usize>,
    pub outer_rounds: usize,
    /// Subselection rounds of each outer round.
    pub subselection_rounds: Vec<usize>,
    /// `tau` of each outer round.
    pub tau: Vec<f64>,
    /// Smallest `chosen / deg` ratio over main-loop openings.
    pub min_paid_fraction: f64,
}

impl GreedyRun {
    pub fn max_subselection_rounds(&self) -> usize {
        self.subselection_rounds.iter().copied().max().unwrap_or(0)
    }

    pub fn total_subselection_rounds(&self) -> usize {
        self.subselection_rounds.iter().sum()
    }
}

/// `ceil(log_{1+eps}(m^3)) + 2`.
pub fn outer_round_bound(m: usize, eps: f64) -> usize {
    (3.0 * (m as f64).ln() / eps.ln_1p()).ceil() as usize + 2
}

/// `10 log_{1+eps} m`.
pub fn subselection_round_bound(m: usize, eps: f64) -> f64 {
    10.0 * (m as f64).ln() / eps.ln_1p()
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps = {eps} outside (0, 1]")));
    }
    Ok(())
}

/// Mutable algorithm state shared by preprocessing and the main loop.
struct State {
    f: Vec<f64>,
    alive: Vec<bool>,
    opened: Vec<bool>,
    alpha: Vec<f64>,
    pi: Vec<usize>,
}

/// Result of preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub opened: Vec<usize>,
    pub removed: Vec<usize>,
    /// Costs after preprocessing: opened facilities are free.
    pub residual_costs: Vec<f64>,
    /// Assignment of removed clients, `usize::MAX` elsewhere.
    pub assign: Vec<usize>,
}

fn preprocess_state(
    ctx: &Ctx,
    inst: &FLInstance,
    gamma: f64,
    sorted: &DenseMatrix,
    ranks: &RankIndex,
) -> State {
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let m = inst.m() as f64;
    let bound = gamma / (m * m);
    let mut st = State {
        f: inst.facility_costs().to_vec(),
        alive: vec![true; n_c],
        opened: vec![false; n_f],
        alpha: vec![0.0; n_c],
        pi: vec![usize::MAX; n_c],
    };
    let table = batched_stars(ctx, &st.f, sorted, ranks, &st.alive);
    let cheap: Vec<bool> = ctx.map(n_f, |i| {
        table.stars[i].is_some_and(|s| tol::leq(s.price, bound))
    });
    let opener: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
        if cheap[i] && table.contains(ranks, &st.alive, i, j) {
            i
        } else {
            usize::MAX
        }
    });
    for i in (0..n_f).filter(|&i| cheap[i]) {
        st.opened[i] = true;
        st.f[i] = 0.0;
    }
    for (j, &o) in opener.iter().enumerate() {
        if o != usize::MAX {
            st.alive[j] = false;
            st.pi[j] = o;
        }
    }
    st
}

/// Open every facility whose cheapest star costs at most `gamma/m^2`, and
/// remove that star's clients.
pub fn greedy_preprocess(ctx: &Ctx, inst: &FLInstance) -> Result<Preprocessed> {
    let g = gamma_bounds(ctx, inst)?;
    let (sorted, ranks) = ctx.sort_rows(inst.dist_matrix());
    let st = preprocess_state(ctx, inst, g.gamma, &sorted, &ranks);
    Ok(Preprocessed {
        opened: (0..inst.n_f()).filter(|&i| st.opened[i]).collect(),
        removed: (0..inst.n_c()).filter(|&j| !st.alive[j]).collect(),
        residual_costs: st.f,
        assign: st.pi,
    })
}

/// Randomized facility subselection at a fixed `tau`. `in_play` marks the
/// candidate set and is emptied on return. Returns the number of rounds and
/// the smallest paid fraction among openings.
#[allow(clippy::too_many_arguments)]
fn subselect(
    ctx: &Ctx,
    inst: &FLInstance,
    st: &mut State,
    in_play: &mut [bool],
    within: &crate::primitives::BitMatrix,
    tau: f64,
    eps: f64,
    seed: u64,
) -> (usize, f64) {
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let thr = tau * (1.0 + eps);
    let mut rounds = 0;
    let mut paid = f64::INFINITY;
    while in_play.iter().any(|&b| b) {
        let labels = ctx.random_labels(n_f, seed, rounds as u64);
        rounds += 1;
        let keys: Vec<u128> = (0..n_f)
            .map(|i| {
                if in_play[i] {
                    rank_key(labels[i], i)
                } else {
                    u128::MAX
                }
            })
            .collect();
        let edge = |i: usize, j: usize| in_play[i] && st.alive[j] && within.get(i, j);
        let phi: Vec<u128> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
            if edge(i, j) {
                keys[i]
            } else {
                u128::MAX
            }
        });
        let deg: Vec<usize> =
            ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| usize::from(edge(i, j)));
        let chosen: Vec<usize> = ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| {
            usize::from(edge(i, j) && key_index(phi[j]) == i && phi[j] != u128::MAX)
        });
        let open_now: Vec<bool> = ctx.map(n_f, |i| {
            in_play[i]
                && deg[i] > 0
                && tol::geq(chosen[i] as f64, deg[i] as f64 / (2.0 * (1.0 + eps)))
        });
        let nearest_open: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
            if open_now[i] && edge(i, j) {
                i
            } else {
                usize::MAX
            }
        });
        for i in (0..n_f).filter(|&i| open_now[i]) {
            paid = paid.min(chosen[i] as f64 / deg[i] as f64);
            st.opened[i] = true;
            st.f[i] = 0.0;
        }
        for j in 0..n_c {
            if nearest_open[j] == usize::MAX {
                continue;
            }
            st.alive[j] = false;
            st.alpha[j] = tau;
            let favourite = key_index(phi[j]);
            st.pi[j] = if phi[j] != u128::MAX && open_now[favourite] {
                favourite
            } else {
                nearest_open[j]
            };
        }
        // prune by the average over the remaining neighbors
        let edge = |i: usize, j: usize| in_play[i] && st.alive[j] && within.get(i, j);
        let deg: Vec<usize> =
            ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| usize::from(edge(i, j)));
        let sum_d: Vec<f64> = ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| {
            if edge(i, j) {
                inst.d(j, i)
            } else {
                0.0
            }
        });
        let keep: Vec<bool> = ctx.map(n_f, |i| {
            in_play[i] && deg[i] > 0 && !tol::gt((st.f[i] + sum_d[i]) / deg[i] as f64, thr)
        });
        in_play.copy_from_slice(&keep);
    }
    (rounds, paid)
}

pub fn greedy_solve(ctx: &Ctx, inst: &FLInstance, eps: f64, seed: u64) -> Result<GreedyRun> {
    check_eps(eps)?;
    let calls0 = ctx.calls();
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let gamma = gamma_bounds(ctx, inst)?.gamma;
    let (sorted, ranks) = ctx.sort_rows(inst.dist_matrix());
    let mut st = preprocess_state(ctx, inst, gamma, &sorted, &ranks);
    let preprocessed: Vec<usize> = (0..n_f).filter(|&i| st.opened[i]).collect();
    let mut tau_hist = Vec::new();
    let mut sub_rounds = Vec::new();
    let mut paid = f64::INFINITY;
    while st.alive.iter().any(|&a| a) {
        let table = batched_stars(ctx, &st.f, &sorted, &ranks, &st.alive);
        let prices: Vec<f64> = table
            .stars
            .iter()
            .map(|s| s.map_or(f64::INFINITY, |s| s.price))
            .collect();
        let tau = ctx.reduce(&prices, ReduceOp::Min)?;
        let thr = tau * (1.0 + eps);
        let mut in_play: Vec<bool> = ctx.map(n_f, |i| tol::leq(prices[i], thr));
        let within = ctx.map_bits(n_f, n_c, |i, j| tol::leq(inst.d(j, i), thr));
        let round_seed = derive_seed(seed, "greedy", tau_hist.len() as u64);
        tau_hist.push(tau);
        let (r, p) = subselect(
            ctx,
            inst,
            &mut st,
            &mut in_play,
            &within,
            tau,
            eps,
            round_seed,
        );
        sub_rounds.push(r);
        paid = paid.min(p);
    }
    let open: Vec<usize> = (0..n_f).filter(|&i| st.opened[i]).collect();
    let outer_rounds = tau_hist.len();
    let solution =
        Solution::from_assignment(inst, open, st.pi, outer_rounds, ctx.calls() - calls0)?;
    Ok(GreedyRun {
        solution,
        alpha: st.alpha,
        eps,
        gamma,
        preprocessed,
        outer_rounds,
        subselection_rounds: sub_rounds,
        tau: tau_hist,
        min_paid_fraction: paid,
    })
}

/// Outcome of a dual-feasibility scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualCheck {
    pub feasible: bool,
    /// Facility with the smallest `f_i - sum_j max(0, alpha_j/divisor - d(j, i))`.
    pub worst_facility: usize,
    pub worst_slack: f64,
}

/// Check that `alpha / divisor` is feasible for the facility-location dual,
/// against the original facility costs.
pub fn greedy_dual_check(inst: &FLInstance, alpha: &[f64], divisor: f64) -> DualCheck {
    let mut worst = (usize::MAX, f64::INFINITY);
    let mut feasible = alpha.iter().all(|&a| a >= 0.0);
    for i in 0..inst.n_f() {
        let load: f64 = alpha
            .iter()
            .enumerate()
            .map(|(j, &a)| (a / divisor - inst.d(j, i)).max(0.0))
            .sum();
        let slack = inst.cost(i) - load;
        feasible &= tol::leq(load, inst.cost(i));
        if slack < worst.1 {
            worst = (i, slack);
        }
    }
    DualCheck {
        feasible,
        worst_facility: worst.0,
        worst_slack: worst.1,
    }
}

/// Both sides of `sum_{F_A} f_i + sum_j d(j, pi_j) <= 2(1+eps)^2 sum_j alpha_j + gamma/m`.
pub fn greedy_ledger(inst: &FLInstance, run: &GreedyRun) -> (f64, f64) {
    let sum_alpha: f64 = run.alpha.iter().sum();
    let rhs = 2.0 * (1.0 + run.eps).powi(2) * sum_alpha + run.gamma / inst.m() as f64;
    (run.solution.total, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::{e2, single_pair};
    use crate::instance::gen_euclidean;
    use crate::oracle::exact_facloc;
    use proptest::prelude::*;

    #[test]
    fn star_examples() {
        assert_eq!(
            cheapest_maximal_star(0.0, &[1.0, 2.0]),
            Some(Star {
                price: 1.0,
                size: 1
            })
        );
        assert_eq!(
            cheapest_maximal_star(0.0, &[1.0, 1.0, 1.0]),
            Some(Star {
                price: 1.0,
                size: 3
            })
        );
        assert_eq!(
            cheapest_maximal_star(4.0, &[1.0, 1.0, 10.0]),
            Some(Star {
                price: 3.0,
                size: 2
            })
        );
        assert_eq!(cheapest_maximal_star(4.0, &[]), None);
    }

    #[test]
    fn star_membership_matches_price() {
        // a client is in the star iff its distance is at most the price
        let f = 4.0;
        let d = [1.0, 1.0, 10.0];
        let s = cheapest_maximal_star(f, &d).unwrap();
        for (k, &x) in d.iter().enumerate() {
            assert_eq!(k < s.size, tol::leq(x, s.price));
        }
        let paid: f64 = d.iter().map(|&x| (s.price - x).max(0.0)).sum();
        assert!(tol::approx_eq(paid, f));
    }

    fn table_for(inst: &FLInstance, alive: &[bool]) -> (StarTable, RankIndex) {
        let ctx = Ctx::default();
        let (sorted, ranks) = ctx.sort_rows(inst.dist_matrix());
        (
            batched_stars(&ctx, inst.facility_costs(), &sorted, &ranks, alive),
            ranks,
        )
    }

    proptest! {
        #[test]
        fn batched_stars_match_the_scalar_scan(seed in 0u64..500, mask in 0u32..1024) {
            let inst = gen_euclidean(4, 10, 2, (0.0, 2.0), seed).unwrap();
            let alive: Vec<bool> = (0..10).map(|j| mask >> j & 1 == 1).collect();
            let (table, ranks) = table_for(&inst, &alive);
            for i in 0..4 {
                let mut ds: Vec<f64> = (0..10).filter(|&j| alive[j]).map(|j| inst.d(j, i)).collect();
                ds.sort_by(f64::total_cmp);
                let want = cheapest_maximal_star(inst.cost(i), &ds);
                match (table.stars[i], want) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        prop_assert_eq!(a.size, b.size);
                        prop_assert!((a.price - b.price).abs() <= 1e-12 * b.price.max(1.0));
                        let members = (0..10).filter(|&j| table.contains(&ranks, &alive, i, j)).count();
                        prop_assert_eq!(members, a.size);
                        // every member pays into the star exactly the opening cost
                        let paid: f64 = (0..10)
                            .filter(|&j| alive[j])
                            .map(|j| (a.price - inst.d(j, i)).max(0.0))
                            .sum();
                        prop_assert!(tol::approx_eq(paid, inst.cost(i)));
                    }
                    other => prop_assert!(false, "mismatch {:?}", other),
                }
            }
        }
    }

    #[test]
    fn e2_preprocessing_opens_nothing() {
        let ctx = Ctx::default();
        let p = greedy_preprocess(&ctx, &e2()).unwrap();
        assert!(p.opened.is_empty());
        assert!(p.removed.is_empty());
    }

    #[test]
    fn free_colocated_facility_opens_in_preprocessing() {
        let ctx = Ctx::default();
        // facility 0 is free and sits on client 0; facility 1 is far and expensive
        let inst = FLInstance::from_client_rows(vec![0.0, 50.0], &[vec![0.0, 9.0], vec![7.0, 1.0]])
            .unwrap();
        let p = greedy_preprocess(&ctx, &inst).unwrap();
        assert_eq!(p.opened, vec![0]);
        assert_eq!(p.removed, vec![0]);
        assert_eq!(p.assign[0], 0);
        // what remains is priced above the preprocessing bound
        let g = gamma_bounds(&ctx, &inst).unwrap().gamma;
        let alive = vec![false, true];
        let ctx = Ctx::default();
        let (sorted, ranks) = ctx.sort_rows(inst.dist_matrix());
        let t = batched_stars(&ctx, &p.residual_costs, &sorted, &ranks, &alive);
        for s in t.stars.iter().flatten() {
            assert!(s.price > g / 16.0);
        }
    }

    #[test]
    fn single_pair_costs_one() {
        let ctx = Ctx::default();
        let inst = single_pair(1.0, 0.0);
        let run = greedy_solve(&ctx, &inst, 0.1, 0).unwrap();
        assert_eq!(run.solution.total, 1.0);
        assert!(greedy_dual_check(&inst, &run.alpha, 3.0).feasible);
    }

    #[test]
    fn e2_reaches_the_optimum() {
        let ctx = Ctx::default();
        let inst = e2();
        let run = greedy_solve(&ctx, &inst, 0.1, 5).unwrap();
        assert_eq!(run.solution.total, 3.0);
        assert!(run.solution.total <= 6.1 * 3.0);
        assert!(greedy_dual_check(&inst, &run.alpha, 3.0).feasible);
        let (lhs, rhs) = greedy_ledger(&inst, &run);
        assert!(tol::leq(lhs, rhs));
    }

    #[test]
    fn inflated_duals_are_rejected() {
        let inst = e2();
        let check = greedy_dual_check(&inst, &[6.0, 6.0, 6.0], 1.0);
        assert!(!check.feasible);
        assert!(check.worst_slack < 0.0);
    }

    #[test]
    fn doubled_duals_from_a_run_are_rejected() {
        let ctx = Ctx::default();
        let inst = e2();
        let run = greedy_solve(&ctx, &inst, 0.1, 1).unwrap();
        let doubled: Vec<f64> = run.alpha.iter().map(|a| 2.0 * a).collect();
        assert!(greedy_dual_check(&inst, &run.alpha, 1.0).feasible);
        assert!(!greedy_dual_check(&inst, &doubled, 1.0).feasible);
    }

    #[test]
    fn single_facility_opens_in_one_subselection_round() {
        let ctx = Ctx::default();
        let inst =
            FLInstance::from_client_rows(vec![2.0], &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let run = greedy_solve(&ctx, &inst, 0.1, 3).unwrap();
        assert_eq!(run.outer_rounds, 1);
        assert_eq!(run.subselection_rounds, vec![1]);
        assert_eq!(run.solution.open, vec![0]);
    }

    #[test]
    fn twin_facilities_open_the_label_winner() {
        let ctx = Ctx::default();
        // identical twins: every client sees both at the same distance
        let rows = vec![vec![1.0, 1.0]; 4];
        let inst = FLInstance::from_client_rows(vec![2.0, 2.0], &rows).unwrap();
        for seed in 0..20 {
            let run = greedy_solve(&ctx, &inst, 0.1, seed).unwrap();
            assert_eq!(run.solution.open.len(), 1);
            assert_eq!(run.subselection_rounds, vec![1]);
            assert!(run.alpha.iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn invariants_on_random_instances() {
        let ctx = Ctx::default();
        for seed in 0..30 {
            let inst = gen_euclidean(5, 9, 2, (0.1, 1.5), seed).unwrap();
            let run = greedy_solve(&ctx, &inst, 0.1, seed).unwrap();
            let opt = exact_facloc(&inst).unwrap().cost;
            assert!(run.solution.total <= 6.1 * opt);
            assert!(greedy_dual_check(&inst, &run.alpha, 3.0).feasible);
            let (lhs, rhs) = greedy_ledger(&inst, &run);
            assert!(tol::leq(lhs, rhs), "seed {seed}: {lhs} > {rhs}");
            assert!(run.tau.windows(2).all(|w| w[0] <= w[1]));
            assert!(run.min_paid_fraction >= 1.0 / 2.2 - 1e-12);
            assert!(run.outer_rounds <= outer_round_bound(inst.m(), 0.1));
        }
    }

    #[test]
    fn rejects_bad_eps() {
        let ctx = Ctx::default();
        assert!(greedy_solve(&ctx, &e2(), 0.0, 0).is_err());
        assert!(greedy_solve(&ctx, &e2(), 1.5, 0).is_err());
    }
}
