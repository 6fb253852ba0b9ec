//! k-center by binary search over threshold graphs, and local search for
//! k-median / k-means seeded from the k-center answer.

use serde::{Deserialize, Serialize};

use crate::dominator::{max_dom, Graph};
use crate::error::{Error, Result};
use crate::instance::{euclidean, FLInstance};
use crate::primitives::{derive_seed, Ctx, DenseMatrix, RankIndex, ReduceOp};

/// Which clustering objective to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Median,
    Means,
    Center,
}

impl Objective {
    /// Per-client cost of distance `d`.
    #[inline]
    pub fn cost(self, d: f64) -> f64 {
        match self {
            Objective::Means => d * d,
            _ => d,
        }
    }
}

/// `n` points with a symmetric distance matrix and a center budget `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterInstance {
    dist: DenseMatrix,
    k: usize,
}

impl CenterInstance {
    pub fn new(dist: DenseMatrix, k: usize) -> Result<Self> {
        let n = dist.rows();
        if n == 0 || dist.cols() != n {
            return Err(Error::validation(
                "dist",
                format!("need a nonempty square matrix, got {}x{}", n, dist.cols()),
            ));
        }
        for a in 0..n {
            if dist.get(a, a) != 0.0 {
                return Err(Error::validation(
                    "dist",
                    format!("nonzero diagonal at {a}"),
                ));
            }
            for b in 0..n {
                let v = dist.get(a, b);
                if v < 0.0 {
                    return Err(Error::validation(
                        "dist",
                        format!("negative distance at ({a}, {b})"),
                    ));
                }
                if v != dist.get(b, a) {
                    return Err(Error::validation(
                        "dist",
                        format!("asymmetric at ({a}, {b})"),
                    ));
                }
            }
        }
        Self::check_k(n, k)?;
        Ok(Self { dist, k })
    }

    fn check_k(n: usize, k: usize) -> Result<()> {
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k = {k} outside 1..={n}")));
        }
        Ok(())
    }

    pub fn from_points(points: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = points.len();
        let mut dist = DenseMatrix::zeros(n, n);
        for a in 0..n {
            for b in a + 1..n {
                let d = euclidean(&points[a], &points[b]);
                dist.set(a, b, d);
                dist.set(b, a, d);
            }
        }
        Self::new(dist, k)
    }

    pub fn on_line(xs: &[f64], k: usize) -> Result<Self> {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Self::from_points(&pts, k)
    }

    /// Clustering view of a facility-location instance: its client points
    /// when coordinates exist, otherwise its distance matrix when that is
    /// square, symmetric and zero on the diagonal.
    pub fn from_fl(inst: &FLInstance, k: usize) -> Result<Self> {
        if let Some(p) = inst.points() {
            return Self::from_points(&p.clients, k);
        }
        if inst.n_f() != inst.n_c() {
            return Err(Error::validation(
                "dist",
                "clustering needs client coordinates or a square point-to-point matrix",
            ));
        }
        Self::new(inst.dist_matrix().clone(), k)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.dist.rows()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.dist.get(a, b)
    }

    pub fn dist_matrix(&self) -> &DenseMatrix {
        &self.dist
    }

    /// Sorted distinct distances, `0` first.
    pub fn distance_set(&self) -> Vec<f64> {
        let mut v = self.dist.as_slice().to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Result of the k-center search.
#[derive(Debug, Clone, PartialEq)]
pub struct KCenterRun {
    pub centers: Vec<usize>,
    pub radius: f64,
    /// Index into [`CenterInstance::distance_set`] of the accepted threshold.
    pub threshold_index: usize,
    pub threshold: f64,
    /// Every probe `(index, dominator size)` in evaluation order.
    pub probes: Vec<(usize, usize)>,
    /// Dominator rounds summed over probes.
    pub rounds: usize,
}

impl KCenterRun {
    pub fn probe_size(&self, index: usize) -> Option<usize> {
        self.probes.iter().find(|p| p.0 == index).map(|p| p.1)
    }
}

/// Threshold graph: `a ~ b` iff `a != b` and `d(a, b) <= t`.
pub fn threshold_graph(ctx: &Ctx, cinst: &CenterInstance, t: f64) -> Graph {
    let n = cinst.n();
    let bits = ctx.map_bits(n, n, |a, b| a != b && cinst.d(a, b) <= t);
    Graph::from_bits(bits)
}

/// Radius of `centers`: the largest distance from a point to its nearest
/// center.
pub fn radius(cinst: &CenterInstance, centers: &[usize]) -> f64 {
    (0..cinst.n())
        .map(|j| {
            centers
                .iter()
                .map(|&c| cinst.d(j, c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn kcenter_solve(ctx: &Ctx, cinst: &CenterInstance, seed: u64) -> KCenterRun {
    let ds = cinst.distance_set();
    let k = cinst.k();
    let mut probes = Vec::new();
    let mut rounds = 0;
    let mut probe = |t: usize| {
        let g = threshold_graph(ctx, cinst, ds[t]);
        let run = max_dom(ctx, &g, derive_seed(seed, "kcenter", t as u64));
        rounds += run.rounds;
        probes.push((t, run.set.len()));
        run.set
    };
    // invariant: the probe at `hi` passes, the probe at `lo - 1` failed
    let (mut lo, mut hi) = (0, ds.len() - 1);
    let mut best = probe(hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let set = probe(mid);
        if set.len() <= k {
            hi = mid;
            best = set;
        } else {
            lo = mid + 1;
        }
    }
    KCenterRun {
        radius: radius(cinst, &best),
        centers: best,
        threshold_index: hi,
        threshold: ds[hi],
        probes,
        rounds,
    }
}

/// Local-search state: open centers, nearest and second-nearest open center
/// per client, and the current objective.
#[derive(Debug, Clone)]
pub struct SwapState {
    pub open: Vec<usize>,
    is_open: Vec<bool>,
    pub phi: Vec<usize>,
    second: Vec<Option<usize>>,
    pub cost: f64,
    pub objective: Objective,
    pub beta: f64,
}

/// A candidate exchange of open center `out` for closed point `inn`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swap {
    pub out: usize,
    pub inn: usize,
    pub new_cost: f64,
}

impl SwapState {
    pub fn new(
        ctx: &Ctx,
        cinst: &CenterInstance,
        ranks: &RankIndex,
        centers: &[usize],
        objective: Objective,
        eps: f64,
    ) -> Result<Self> {
        if objective == Objective::Center {
            return Err(Error::invalid("local search handles median and means only"));
        }
        let n = cinst.n();
        let mut open = centers.to_vec();
        open.sort_unstable();
        open.dedup();
        if open.len() != cinst.k() || open.iter().any(|&c| c >= n) {
            return Err(Error::invalid(format!(
                "need {} distinct centers",
                cinst.k()
            )));
        }
        let mut is_open = vec![false; n];
        for &c in &open {
            is_open[c] = true;
        }
        let mut s = Self {
            open,
            is_open,
            phi: vec![0; n],
            second: vec![None; n],
            cost: 0.0,
            objective,
            beta: eps / (1.0 + eps),
        };
        s.refresh(ctx, cinst, ranks);
        Ok(s)
    }

    fn refresh(&mut self, ctx: &Ctx, cinst: &CenterInstance, ranks: &RankIndex) {
        let n = cinst.n();
        let nearest: Vec<(usize, Option<usize>)> = ctx.map(n, |j| {
            let mut it = ranks
                .row_order(j)
                .iter()
                .copied()
                .filter(|&c| self.is_open[c]);
            let first = it.next().expect("at least one open center");
            (first, it.next())
        });
        for (j, (a, b)) in nearest.into_iter().enumerate() {
            self.phi[j] = a;
            self.second[j] = b;
        }
        let costs: Vec<f64> = (0..n)
            .map(|j| self.objective.cost(cinst.d(j, self.phi[j])))
            .collect();
        self.cost = ctx.reduce(&costs, ReduceOp::Sum).unwrap_or(0.0);
    }

    /// Objective of `open - out + inn` for client `j`.
    #[inline]
    fn client_cost_after(&self, cinst: &CenterInstance, j: usize, out: usize, inn: usize) -> f64 {
        let keep = if self.phi[j] == out {
            self.second[j].map_or(f64::INFINITY, |s| cinst.d(j, s))
        } else {
            cinst.d(j, self.phi[j])
        };
        self.objective.cost(keep.min(cinst.d(j, inn)))
    }

    fn closed(&self) -> Vec<usize> {
        (0..self.is_open.len())
            .filter(|&c| !self.is_open[c])
            .collect()
    }

    /// Objective after every swap `(out, inn)`, in lexicographic order.
    pub fn evaluate_swaps(&self, ctx: &Ctx, cinst: &CenterInstance) -> Vec<Swap> {
        let closed = self.closed();
        let pairs: Vec<(usize, usize)> = self
            .open
            .iter()
            .flat_map(|&o| closed.iter().map(move |&c| (o, c)))
            .collect();
        let totals: Vec<f64> =
            ctx.row_reduce_with(pairs.len(), cinst.n(), ReduceOp::Sum, |s, j| {
                let (o, c) = pairs[s];
                self.client_cost_after(cinst, j, o, c)
            });
        pairs
            .into_iter()
            .zip(totals)
            .map(|((out, inn), new_cost)| Swap { out, inn, new_cost })
            .collect()
    }

    /// Acceptance threshold `(1 - beta/k) * cost`.
    pub fn threshold(&self) -> f64 {
        (1.0 - self.beta / self.open.len() as f64) * self.cost
    }

    pub fn apply(&mut self, ctx: &Ctx, cinst: &CenterInstance, ranks: &RankIndex, swap: Swap) {
        self.is_open[swap.out] = false;
        self.is_open[swap.inn] = true;
        let pos = self
            .open
            .iter()
            .position(|&c| c == swap.out)
            .expect("out is open");
        self.open[pos] = swap.inn;
        self.open.sort_unstable();
        self.refresh(ctx, cinst, ranks);
    }
}

/// Best swap whose objective falls below `(1 - beta/k)` times the current
/// one; ties go to the lexicographically smallest `(out, inn)`.
pub fn find_improving_swap(ctx: &Ctx, cinst: &CenterInstance, state: &SwapState) -> Option<Swap> {
    let limit = state.threshold();
    state
        .evaluate_swaps(ctx, cinst)
        .into_iter()
        .filter(|s| s.new_cost < limit)
        .fold(None, |best: Option<Swap>, s| match best {
            Some(b) if b.new_cost <= s.new_cost => Some(b),
            _ => Some(s),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchRun {
    pub centers: Vec<usize>,
    pub assign: Vec<usize>,
    pub cost: f64,
    pub objective: Objective,
    /// Accepted swaps.
    pub rounds: usize,
    /// `ceil(3k ln n / ln(1/(1-beta))) + 1`; exceeding it is flagged only.
    pub round_cap: usize,
    pub over_cap: bool,
    /// Objective before the first swap and after each accepted swap.
    pub history: Vec<f64>,
    pub beta: f64,
    pub kcenter: KCenterRun,
}

pub fn local_search_round_cap(n: usize, k: usize, eps: f64) -> usize {
    let beta = eps / (1.0 + eps);
    (3.0 * k as f64 * (n as f64).ln() / (1.0 / (1.0 - beta)).ln()).ceil() as usize + 1
}

pub fn local_search_solve(
    ctx: &Ctx,
    cinst: &CenterInstance,
    eps: f64,
    objective: Objective,
    seed: u64,
) -> Result<LocalSearchRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps = {eps} outside (0, 1)")));
    }
    if objective == Objective::Center {
        return Err(Error::invalid("local search handles median and means only"));
    }
    let kc = kcenter_solve(ctx, cinst, seed);
    let mut start = kc.centers.clone();
    // a smaller dominator set is padded with the lowest-index remaining points
    for c in 0..cinst.n() {
        if start.len() >= cinst.k() {
            break;
        }
        if !start.contains(&c) {
            start.push(c);
        }
    }
    let (_, ranks) = ctx.sort_rows(cinst.dist_matrix());
    let mut state = SwapState::new(ctx, cinst, &ranks, &start, objective, eps)?;
    let mut history = vec![state.cost];
    while let Some(swap) = find_improving_swap(ctx, cinst, &state) {
        state.apply(ctx, cinst, &ranks, swap);
        history.push(state.cost);
    }
    let rounds = history.len() - 1;
    let round_cap = local_search_round_cap(cinst.n(), cinst.k(), eps);
    Ok(LocalSearchRun {
        centers: state.open.clone(),
        assign: state.phi.clone(),
        cost: state.cost,
        objective,
        rounds,
        round_cap,
        over_cap: rounds > round_cap,
        history,
        beta: state.beta,
        kcenter: kc,
    })
}
