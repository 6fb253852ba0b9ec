//! Parallel primal-dual facility location.
//!
//! Dual values of unfrozen clients climb the geometric ladder
//! `t_l = (gamma/m^2)(1+eps)^l`. A facility opens tentatively once the
//! relaxed contributions `(1+eps) alpha_j - d(j, i)` cover its cost, and
//! clients freeze when they reach an open facility. A maximal U-dominator set
//! of the contribution graph `H` then picks the facilities to keep.

use crate::dominator::{max_u_dom, Bipartite};
use crate::error::{Error, Result};
use crate::greedy::{check_eps, DualCheck};
use crate::instance::{gamma_bounds, FLInstance, Solution};
use crate::primitives::{derive_seed, BitMatrix, Ctx, ReduceOp};
use crate::tol;

pub const DEFAULT_EPS: f64 = 0.1;

/// Iteration stamp of free facilities and freely connected clients.
pub const PRE: i64 = -1;

const MAX_ITERATIONS: usize = 100_000;

/// How a client's facility was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connection {
    /// Within `gamma/m^2` of a free facility.
    Free,
    /// Contributes to a kept facility.
    Edge,
    /// A kept facility is among its witnesses.
    Witness,
    /// A free facility is among its witnesses.
    FreeWitness,
    /// Through a witness and a client, frozen no later than this one, shared
    /// with a kept facility.
    Indirect,
    /// As [`Connection::Indirect`], but the only shared client froze later,
    /// so `d(j, pi_j) <= 3(1+eps) alpha_j` is not implied.
    IndirectLate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdOptions {
    /// Evaluate the per-facility contribution bound after every iteration.
    pub check_each_iteration: bool,
}

impl Default for PdOptions {
    fn default() -> Self {
        Self {
            check_each_iteration: cfg!(debug_assertions),
        }
    }
}

/// Free facilities and the clients they serve at no dual cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PdPreprocessed {
    pub free: Vec<bool>,
    pub freely_connected: Vec<bool>,
    /// Lowest-index free facility within reach, `usize::MAX` elsewhere.
    pub assign: Vec<usize>,
    pub start: f64,
}

pub fn pd_preprocess(ctx: &Ctx, inst: &FLInstance, gamma: f64) -> PdPreprocessed {
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let m = inst.m() as f64;
    let t0 = gamma / (m * m);
    let load: Vec<f64> =
        ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| (t0 - inst.d(j, i)).max(0.0));
    let free: Vec<bool> = ctx.map(n_f, |i| tol::geq(load[i], inst.cost(i)));
    let assign: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
        if free[i] && tol::leq(inst.d(j, i), t0) {
            i
        } else {
            usize::MAX
        }
    });
    PdPreprocessed {
        freely_connected: assign.iter().map(|&a| a != usize::MAX).collect(),
        free,
        assign,
        start: t0,
    }
}

/// Full output of a primal-dual run.
#[derive(Debug, Clone)]
pub struct PdRun {
    pub solution: Solution,
    pub alpha: Vec<f64>,
    pub eps: f64,
    pub gamma: f64,
    /// Free facilities, ascending.
    pub free: Vec<usize>,
    /// Facilities opened by the main loop, ascending.
    pub tentative: Vec<usize>,
    /// Kept tentative facilities, ascending.
    pub selected: Vec<usize>,
    /// `H` over all facilities; rows outside the tentative set are empty.
    pub h: BitMatrix,
    /// Iteration each facility opened ([`PRE`] for free ones, `None` if never).
    pub open_iter: Vec<Option<i64>>,
    /// Iteration each client froze ([`PRE`] when freely connected).
    pub freeze_iter: Vec<i64>,
    pub connection: Vec<Connection>,
    pub iterations: usize,
    /// Primitive calls spent inside the main loop.
    pub main_loop_calls: u64,
    /// Rounds of the U-dominator computation.
    pub dominator_rounds: usize,
    /// Per-iteration contribution-bound failures `(iteration, facility, slack)`.
    pub iteration_violations: Vec<(usize, usize, f64)>,
    pub checked_each_iteration: bool,
}

/// `3 log_{1+eps} m + 2`.
pub fn iteration_bound(m: usize, eps: f64) -> f64 {
    3.0 * (m as f64).ln() / eps.ln_1p() + 2.0
}

/// Worst facility of `sum_{j in Gamma_H(i)} max(0, alpha_j - d(j, i)) <= f_i`.
fn contribution_check(inst: &FLInstance, alpha: &[f64], h: &BitMatrix) -> DualCheck {
    let mut out = DualCheck {
        feasible: true,
        worst_facility: usize::MAX,
        worst_slack: f64::INFINITY,
    };
    for i in 0..inst.n_f() {
        let load: f64 = h
            .row_ones(i)
            .map(|j| (alpha[j] - inst.d(j, i)).max(0.0))
            .sum();
        out.feasible &= tol::leq(load, inst.cost(i));
        let slack = inst.cost(i) - load;
        if slack < out.worst_slack {
            out.worst_slack = slack;
            out.worst_facility = i;
        }
    }
    out
}

pub fn pd_solve(ctx: &Ctx, inst: &FLInstance, eps: f64, seed: u64) -> Result<PdRun> {
    pd_solve_with(ctx, inst, eps, seed, PdOptions::default())
}

pub fn pd_solve_with(
    ctx: &Ctx,
    inst: &FLInstance,
    eps: f64,
    seed: u64,
    opts: PdOptions,
) -> Result<PdRun> {
    check_eps(eps)?;
    let calls0 = ctx.calls();
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let gamma = gamma_bounds(ctx, inst)?.gamma;
    let pre = pd_preprocess(ctx, inst, gamma);
    let grow = 1.0 + eps;

    let mut alpha = vec![0.0; n_c];
    let mut frozen = pre.freely_connected.clone();
    let mut freeze_iter: Vec<i64> = frozen
        .iter()
        .map(|&f| if f { PRE } else { i64::MAX })
        .collect();
    let mut open_iter: Vec<Option<i64>> = pre.free.iter().map(|&f| f.then_some(PRE)).collect();
    let mut h = BitMatrix::new(n_f, n_c);
    let mut violations = Vec::new();

    let loop_calls0 = ctx.calls();
    let mut iterations = 0;
    while frozen.iter().any(|&f| !f) && open_iter.iter().any(Option::is_none) {
        if iterations >= MAX_ITERATIONS {
            return Err(Error::Internal(
                "primal-dual ladder did not terminate".into(),
            ));
        }
        let l = iterations as i64;
        let t = pre.start * grow.powi(iterations as i32);
        alpha = ctx.map(n_c, |j| if frozen[j] { alpha[j] } else { t });
        let load: Vec<f64> = ctx.row_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| {
            (grow * alpha[j] - inst.d(j, i)).max(0.0)
        });
        open_iter = ctx.map(n_f, |i| match open_iter[i] {
            None if tol::geq(load[i], inst.cost(i)) => Some(l),
            o => o,
        });
        let reach: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Max, |i, j| {
            usize::from(open_iter[i].is_some() && tol::geq(grow * alpha[j], inst.d(j, i)))
        });
        let newly: Vec<bool> = ctx.map(n_c, |j| !frozen[j] && reach[j] == 1);
        h = ctx.map_bits(n_f, n_c, |i, j| {
            h.get(i, j)
                || (open_iter[i].is_some_and(|o| o >= 0) && tol::gt(grow * alpha[j], inst.d(j, i)))
        });
        for j in (0..n_c).filter(|&j| newly[j]) {
            frozen[j] = true;
            freeze_iter[j] = l;
        }
        iterations += 1;
        if opts.check_each_iteration {
            let c = contribution_check(inst, &alpha, &h);
            if !c.feasible {
                violations.push((iterations - 1, c.worst_facility, c.worst_slack));
            }
        }
    }
    let main_loop_calls = ctx.calls() - loop_calls0;

    // every facility is open: the rest reach their nearest one
    let tail = iterations as i64;
    let nearest: Vec<f64> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| inst.d(j, i));
    for j in 0..n_c {
        if !frozen[j] {
            alpha[j] = nearest[j];
            frozen[j] = true;
            freeze_iter[j] = tail;
        }
    }
    h = ctx.map_bits(n_f, n_c, |i, j| {
        h.get(i, j)
            || (open_iter[i].is_some_and(|o| o >= 0) && tol::gt(grow * alpha[j], inst.d(j, i)))
    });

    let tentative: Vec<usize> = (0..n_f)
        .filter(|&i| open_iter[i].is_some_and(|o| o >= 0))
        .collect();
    let free: Vec<usize> = (0..n_f).filter(|&i| pre.free[i]).collect();
    let mut sub = BitMatrix::new(tentative.len(), n_c);
    for (u, &i) in tentative.iter().enumerate() {
        for j in h.row_ones(i) {
            sub.set(u, j, true);
        }
    }
    let dom = max_u_dom(ctx, &Bipartite::from_bits(sub), derive_seed(seed, "pd", 0));
    let selected: Vec<usize> = dom.set.iter().map(|&u| tentative[u]).collect();
    let mut kept = vec![false; n_f];
    for &i in &selected {
        kept[i] = true;
    }

    let witness = |j: usize, i: usize| {
        open_iter[i].is_some_and(|o| o <= freeze_iter[j]) && tol::geq(grow * alpha[j], inst.d(j, i))
    };
    let lowest = |pred: &dyn Fn(usize) -> bool| (0..n_f).find(|&i| pred(i));
    let picks: Vec<Option<(usize, Connection)>> = ctx.map(n_c, |j| {
        if pre.freely_connected[j] {
            return Some((pre.assign[j], Connection::Free));
        }
        if let Some(i) = lowest(&|i| kept[i] && h.get(i, j)) {
            return Some((i, Connection::Edge));
        }
        if let Some(i) = lowest(&|i| kept[i] && witness(j, i)) {
            return Some((i, Connection::Witness));
        }
        if let Some(i) = lowest(&|i| pre.free[i] && witness(j, i)) {
            return Some((i, Connection::FreeWitness));
        }
        let shares = |via: usize, i: usize, early: bool| {
            h.row_ones(via)
                .any(|k| h.get(i, k) && (!early || freeze_iter[k] <= freeze_iter[j]))
        };
        let vias: Vec<usize> = (0..n_f)
            .filter(|&i| open_iter[i].is_some_and(|o| o >= 0) && witness(j, i))
            .collect();
        for &via in &vias {
            if let Some(i) = lowest(&|i| kept[i] && shares(via, i, true)) {
                return Some((i, Connection::Indirect));
            }
        }
        let via = *vias.first()?;
        lowest(&|i| kept[i] && shares(via, i, false)).map(|i| (i, Connection::IndirectLate))
    });
    let mut assign = Vec::with_capacity(n_c);
    let mut connection = Vec::with_capacity(n_c);
    for (j, p) in picks.into_iter().enumerate() {
        let (i, c) =
            p.ok_or_else(|| Error::Internal(format!("client {j} has no facility to connect to")))?;
        assign.push(i);
        connection.push(c);
    }
    let open: Vec<usize> = selected.iter().chain(&free).copied().collect();
    let solution = Solution::from_assignment(inst, open, assign, iterations, ctx.calls() - calls0)?;
    Ok(PdRun {
        solution,
        alpha,
        eps,
        gamma,
        free,
        tentative,
        selected,
        h,
        open_iter,
        freeze_iter,
        connection,
        iterations,
        main_loop_calls,
        dominator_rounds: dom.rounds,
        iteration_violations: violations,
        checked_each_iteration: opts.check_each_iteration,
    })
}

/// Certificate outcome for a primal-dual run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdCheck {
    /// Contribution bound over `Gamma_H(i)` for every facility.
    pub contributions: DualCheck,
    pub ledger_lhs: f64,
    pub ledger_rhs: f64,
}

impl PdCheck {
    pub fn ledger_ok(&self) -> bool {
        tol::leq(self.ledger_lhs, self.ledger_rhs)
    }

    pub fn passed(&self) -> bool {
        self.contributions.feasible && self.ledger_ok()
    }
}

/// Check the contribution bound and
/// `3 sum_{F_A} f_i + sum_j d(j, pi_j) <= 3 gamma/m + 3(1+eps) sum_j alpha_j`.
pub fn pd_dual_check(
    inst: &FLInstance,
    solution: &Solution,
    alpha: &[f64],
    h: &BitMatrix,
    gamma: f64,
    eps: f64,
) -> PdCheck {
    let sum_alpha: f64 = alpha.iter().sum();
    PdCheck {
        contributions: contribution_check(inst, alpha, h),
        ledger_lhs: 3.0 * solution.facility_cost + solution.connection_cost,
        ledger_rhs: 3.0 * gamma / inst.m() as f64 + 3.0 * (1.0 + eps) * sum_alpha,
    }
}

/// Rebuild `H` from final duals and the tentative set.
pub fn contribution_graph(
    inst: &FLInstance,
    alpha: &[f64],
    tentative: &[usize],
    eps: f64,
) -> BitMatrix {
    let mut h = BitMatrix::new(inst.n_f(), inst.n_c());
    for &i in tentative {
        for (j, &a) in alpha.iter().enumerate() {
            if tol::gt((1.0 + eps) * a, inst.d(j, i)) {
                h.set(i, j, true);
            }
        }
    }
    h
}

impl PdRun {
    pub fn check(&self, inst: &FLInstance) -> PdCheck {
        pd_dual_check(
            inst,
            &self.solution,
            &self.alpha,
            &self.h,
            self.gamma,
            self.eps,
        )
    }
}
