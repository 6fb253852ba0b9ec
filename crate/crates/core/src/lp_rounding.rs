//! Filtering and round-synchronous rounding of a fractional facility-location
//! LP solution. The LP itself is an input.

use crate::dominator::{max_u_dom, Bipartite};
use crate::error::{Error, Result};
use crate::greedy::check_eps;
use crate::instance::{FLInstance, Solution};
use crate::primitives::{derive_seed, BitMatrix, Ctx, DenseMatrix, ReduceOp};
use crate::tol;

/// Tolerance of the LP feasibility checks on load.
pub const LP_TOL: f64 = 1e-7;
pub const DEFAULT_ALPHA: f64 = 1.0 / 3.0;
pub const DEFAULT_EPS: f64 = 0.1;

/// Fractional solution `(x, y)` with objective `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// `n_f x n_c`, `x[i][j]`.
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub theta: f64,
}

impl LpSolution {
    /// Validate `sum_i x_ij = 1` and `0 <= x_ij <= y_i <= 1`, then compute
    /// `theta = sum d x + sum f y`.
    pub fn new(inst: &FLInstance, x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        let (n_f, n_c) = (inst.n_f(), inst.n_c());
        if x.rows() != n_f || x.cols() != n_c {
            return Err(Error::validation(
                "x",
                format!("shape {}x{} does not match {n_f}x{n_c}", x.rows(), x.cols()),
            ));
        }
        if y.len() != n_f {
            return Err(Error::validation(
                "y",
                format!("length {} does not match n_f = {n_f}", y.len()),
            ));
        }
        for (i, &v) in y.iter().enumerate() {
            if !(-LP_TOL..=1.0 + LP_TOL).contains(&v) {
                return Err(Error::validation(
                    "y",
                    format!("0 <= y[{i}] <= 1 violated: {v}"),
                ));
            }
        }
        for j in 0..n_c {
            let mut sum = 0.0;
            for (i, &yi) in y.iter().enumerate() {
                let v = x.get(i, j);
                if v < -LP_TOL {
                    return Err(Error::validation(
                        "x",
                        format!("x[{i}][{j}] = {v} is negative"),
                    ));
                }
                if v > yi + LP_TOL {
                    return Err(Error::validation(
                        "x",
                        format!("x[{i}][{j}] = {v} exceeds y[{i}] = {yi}"),
                    ));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > LP_TOL {
                return Err(Error::validation(
                    "x",
                    format!("client {j} is assigned {sum}, not 1"),
                ));
            }
        }
        let mut theta = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            theta += inst.cost(i) * yi;
            for j in 0..n_c {
                theta += inst.d(j, i) * x.get(i, j);
            }
        }
        Ok(Self { x, y, theta })
    }

    /// The integral point of an assignment.
    pub fn from_integral(inst: &FLInstance, open: &[usize], assign: &[usize]) -> Result<Self> {
        let mut x = DenseMatrix::zeros(inst.n_f(), inst.n_c());
        let mut y = vec![0.0; inst.n_f()];
        for &i in open {
            y[i] = 1.0;
        }
        for (j, &i) in assign.iter().enumerate() {
            x.set(i, j, 1.0);
        }
        Self::new(inst, x, y)
    }

    /// Integral point of an open set, every client at its nearest facility.
    pub fn from_open_set(inst: &FLInstance, open: &[usize]) -> Result<Self> {
        let assign: Vec<usize> = (0..inst.n_c())
            .map(|j| {
                *open
                    .iter()
                    .min_by(|&&a, &&b| inst.d(j, a).total_cmp(&inst.d(j, b)))
                    .expect("nonempty open set")
            })
            .collect();
        Self::from_integral(inst, open, &assign)
    }
}

/// Filtered solution: short neighborhoods `B_j` carrying all of `x'`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredLp {
    pub alpha: f64,
    pub theta: f64,
    /// `delta_j = sum_i d(j, i) x_ij`.
    pub delta: Vec<f64>,
    /// `i in B_j` iff `d(j, i) <= (1 + alpha) delta_j`; `n_f x n_c`.
    pub b: BitMatrix,
    pub mass: Vec<f64>,
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    /// Original openings, kept for the facility-cost bound.
    pub y_orig: Vec<f64>,
}

pub fn filter(ctx: &Ctx, inst: &FLInstance, lp: &LpSolution, alpha: f64) -> Result<FilteredLp> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let delta: Vec<f64> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| {
        inst.d(j, i) * lp.x.get(i, j)
    });
    let b = ctx.map_bits(n_f, n_c, |i, j| inst.d(j, i) <= (1.0 + alpha) * delta[j]);
    let mass: Vec<f64> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Sum, |i, j| {
        if b.get(i, j) {
            lp.x.get(i, j)
        } else {
            0.0
        }
    });
    let x = ctx.map_matrix(n_f, n_c, |i, j| {
        if b.get(i, j) {
            lp.x.get(i, j) / mass[j]
        } else {
            0.0
        }
    });
    let y = ctx.map(n_f, |i| (1.0f64).min((1.0 + 1.0 / alpha) * lp.y[i]));
    Ok(FilteredLp {
        alpha,
        theta: lp.theta,
        delta,
        b,
        mass,
        x,
        y,
        y_orig: lp.y.clone(),
    })
}

/// Outcome of rounding.
#[derive(Debug, Clone)]
pub struct LpRun {
    pub solution: Solution,
    pub rounds: usize,
    /// Cheapest facility of each `B_j`, ties to the lowest index.
    pub cheapest: Vec<usize>,
    /// Round in which each client was processed.
    pub round_of: Vec<usize>,
    /// Clients whose `B_j` was claimed, in selection order.
    pub selected: Vec<usize>,
    /// `tau` of each round.
    pub tau: Vec<f64>,
    /// Per round: `(sum_{opened} f_i, sum_{claimed} y'_i f_i)`.
    pub facility_rounds: Vec<(f64, f64)>,
    pub dominator_rounds: usize,
    pub alpha: f64,
    pub eps: f64,
    pub theta: f64,
}

/// `ceil(log_{1+eps}(m^3)) + 2`.
pub fn round_bound(m: usize, eps: f64) -> usize {
    (3.0 * (m as f64).ln() / eps.ln_1p()).ceil() as usize + 2
}

pub fn lp_round(
    ctx: &Ctx,
    inst: &FLInstance,
    flp: &FilteredLp,
    eps: f64,
    seed: u64,
) -> Result<LpRun> {
    check_eps(eps)?;
    let calls0 = ctx.calls();
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let m = inst.m() as f64;
    let b = &flp.b;
    let low_cost: Vec<f64> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
        if b.get(i, j) {
            inst.cost(i)
        } else {
            f64::INFINITY
        }
    });
    let cheapest: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Min, |i, j| {
        if b.get(i, j) && inst.cost(i) == low_cost[j] {
            i
        } else {
            usize::MAX
        }
    });
    if let Some(j) = cheapest.iter().position(|&i| i == usize::MAX) {
        return Err(Error::Internal(format!(
            "client {j} has an empty neighborhood"
        )));
    }

    let mut done = vec![false; n_c];
    let mut round_of = vec![usize::MAX; n_c];
    let mut claimed = vec![false; n_f];
    let mut opened = vec![false; n_f];
    let mut selected = Vec::new();
    let mut tau_hist = Vec::new();
    let mut facility_rounds = Vec::new();
    let mut dominator_rounds = 0;
    while done.iter().any(|&d| !d) {
        let r = tau_hist.len();
        let live: Vec<f64> = ctx.map(n_c, |j| if done[j] { f64::INFINITY } else { flp.delta[j] });
        let tau = ctx.reduce(&live, ReduceOp::Min)?;
        let mut cut = (1.0 + eps) * tau;
        if r == 0 {
            cut = cut.max(flp.theta / (m * m));
        }
        let in_s: Vec<bool> = ctx.map(n_c, |j| !done[j] && flp.delta[j] <= cut);
        let blocked: Vec<usize> = ctx.col_reduce_with(n_f, n_c, ReduceOp::Max, |i, j| {
            usize::from(b.get(i, j) && claimed[i])
        });
        let free_s: Vec<usize> = (0..n_c).filter(|&j| in_s[j] && blocked[j] == 0).collect();
        let mut h = BitMatrix::new(free_s.len(), n_f);
        for (u, &j) in free_s.iter().enumerate() {
            for i in 0..n_f {
                if b.get(i, j) {
                    h.set(u, i, true);
                }
            }
        }
        let dom = max_u_dom(
            ctx,
            &Bipartite::from_bits(h),
            derive_seed(seed, "lp-round", r as u64),
        );
        dominator_rounds += dom.rounds;
        let mut opened_cost = 0.0;
        let mut newly_open = vec![false; n_f];
        let mut claim_mass = 0.0;
        for &u in &dom.set {
            let j = free_s[u];
            selected.push(j);
            let i = cheapest[j];
            if !opened[i] && !newly_open[i] {
                newly_open[i] = true;
                opened_cost += inst.cost(i);
            }
            for i in (0..n_f).filter(|&i| b.get(i, j)) {
                claimed[i] = true;
                claim_mass += flp.y[i] * inst.cost(i);
            }
        }
        for i in 0..n_f {
            opened[i] |= newly_open[i];
        }
        facility_rounds.push((opened_cost, claim_mass));
        for j in (0..n_c).filter(|&j| in_s[j]) {
            done[j] = true;
            round_of[j] = r;
        }
        tau_hist.push(tau);
    }

    // pi_j = i_j when open, else i_{j'} for the lowest-index earlier-or-same-round
    // selected client j' whose neighborhood meets B_j
    let mut chosen = vec![false; n_c];
    for &j in &selected {
        chosen[j] = true;
    }
    let assign: Vec<usize> = ctx.map(n_c, |j| {
        if opened[cheapest[j]] {
            return cheapest[j];
        }
        (0..n_c)
            .find(|&k| {
                chosen[k]
                    && round_of[k] <= round_of[j]
                    && (0..n_f).any(|i| b.get(i, j) && b.get(i, k))
            })
            .map_or(usize::MAX, |k| cheapest[k])
    });
    if let Some(j) = assign.iter().position(|&i| i == usize::MAX) {
        return Err(Error::Internal(format!(
            "client {j} has no blocking neighbor"
        )));
    }
    let open: Vec<usize> = (0..n_f).filter(|&i| opened[i]).collect();
    let rounds = tau_hist.len();
    let solution = Solution::from_assignment(inst, open, assign, rounds, ctx.calls() - calls0)?;
    Ok(LpRun {
        solution,
        rounds,
        cheapest,
        round_of,
        selected,
        tau: tau_hist,
        facility_rounds,
        dominator_rounds,
        alpha: flp.alpha,
        eps,
        theta: flp.theta,
    })
}

pub fn lp_round_solve(
    ctx: &Ctx,
    inst: &FLInstance,
    lp: &LpSolution,
    alpha: f64,
    eps: f64,
    seed: u64,
) -> Result<(FilteredLp, LpRun)> {
    let flp = filter(ctx, inst, lp, alpha)?;
    let run = lp_round(ctx, inst, &flp, eps, seed)?;
    Ok((flp, run))
}

/// Per-client connection bound: `(1+alpha) delta_j` when `i_j` is open,
/// otherwise `3(1+alpha)(1+eps) delta_j`. Clients processed in the first
/// round also get `2(1+alpha) theta/m^2`, the reach of the neighbors that
/// joined the first round only through the `theta/m^2` floor.
pub fn connection_bound(inst: &FLInstance, flp: &FilteredLp, run: &LpRun, j: usize) -> f64 {
    connection_bound_of(
        run.alpha,
        run.eps,
        flp.theta,
        inst.m(),
        flp.delta[j],
        run.solution.is_open(run.cheapest[j]),
        run.round_of[j] == 0,
    )
}

/// [`connection_bound`] from its raw ingredients.
pub fn connection_bound_of(
    alpha: f64,
    eps: f64,
    theta: f64,
    m: usize,
    delta: f64,
    cheapest_open: bool,
    first_round: bool,
) -> f64 {
    let a = 1.0 + alpha;
    if cheapest_open {
        return a * delta;
    }
    let m = m as f64;
    let floor = if first_round {
        2.0 * a * theta / (m * m)
    } else {
        0.0
    };
    3.0 * a * (1.0 + eps) * delta + floor
}

/// Certificate summary of a rounding run.
#[derive(Debug, Clone, PartialEq)]
pub struct LpCheck {
    /// Rounds where opened cost exceeded the claimed fractional cost.
    pub facility_round_failures: Vec<usize>,
    /// Clients whose connection exceeded their bound.
    pub connection_failures: Vec<usize>,
    /// `sum_{F_A} f_i` against `(1 + 1/alpha) sum_i f_i y_i`.
    pub facility_total: (f64, f64),
    /// Total cost against `4(1+eps) theta + theta/m` (the balanced bound for
    /// `alpha = 1/3`; reported for other `alpha` too).
    pub total: (f64, f64),
}

impl LpCheck {
    pub fn passed(&self) -> bool {
        self.facility_round_failures.is_empty()
            && self.connection_failures.is_empty()
            && tol::leq(self.facility_total.0, self.facility_total.1)
    }
}

pub fn lp_check(inst: &FLInstance, flp: &FilteredLp, run: &LpRun) -> LpCheck {
    let facility_round_failures = run
        .facility_rounds
        .iter()
        .enumerate()
        .filter(|(_, (open, claim))| !tol::leq(*open, *claim))
        .map(|(r, _)| r)
        .collect();
    let connection_failures = (0..inst.n_c())
        .filter(|&j| {
            !tol::leq(
                inst.d(j, run.solution.assign[j]),
                connection_bound(inst, flp, run, j),
            )
        })
        .collect();
    let fy: f64 = (0..inst.n_f()).map(|i| inst.cost(i) * flp.y_orig[i]).sum();
    LpCheck {
        facility_round_failures,
        connection_failures,
        facility_total: (run.solution.facility_cost, (1.0 + 1.0 / run.alpha) * fy),
        total: (
            run.solution.total,
            4.0 * (1.0 + run.eps) * run.theta + run.theta / inst.m() as f64,
        ),
    }
}
