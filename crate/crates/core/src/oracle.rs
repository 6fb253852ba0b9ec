//! Brute-force ground truth: exact facility location by subset enumeration,
//! exact k-objectives over k-subsets, and explicit dominator-set checks.

use itertools::Itertools;
use rayon::prelude::*;

use crate::centers::{CenterInstance, Objective};
use crate::dominator::{Bipartite, Graph};
use crate::error::{Error, Result};
use crate::instance::FLInstance;

/// Largest facility count accepted by [`exact_facloc`].
pub const MAX_EXACT_FACILITIES: usize = 20;
/// Largest number of k-subsets accepted by [`exact_kobjective`].
pub const MAX_K_SUBSETS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Exact {
    pub cost: f64,
    /// Optimal set, ascending.
    pub set: Vec<usize>,
}

fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask >> b & 1 == 1).collect()
}

fn better(a: &Exact, b: &Exact) -> bool {
    a.cost < b.cost || (a.cost == b.cost && a.set < b.set)
}

fn pick(a: Exact, b: Exact) -> Exact {
    if better(&b, &a) {
        b
    } else {
        a
    }
}

/// Minimum of `sum_{i in S} f_i + sum_j d(j, S)` over nonempty `S`. Ties go to
/// the lexicographically smallest set.
pub fn exact_facloc(inst: &FLInstance) -> Result<Exact> {
    let n_f = inst.n_f();
    if n_f > MAX_EXACT_FACILITIES {
        return Err(Error::SizeCap {
            what: "facility count".into(),
            size: n_f as u128,
            limit: MAX_EXACT_FACILITIES as u128,
        });
    }
    let best = (1u64..1 << n_f)
        .into_par_iter()
        .map(|mask| {
            let set = members(mask);
            Exact {
                cost: inst.facloc_cost(&set),
                set,
            }
        })
        .reduce_with(pick)
        .ok_or_else(|| Error::invalid("instance has no facilities"))?;
    Ok(best)
}

/// Number of `k`-subsets of `n`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Value of `objective` for the center set `centers`.
pub fn k_cost(cinst: &CenterInstance, centers: &[usize], objective: Objective) -> f64 {
    let per_point = (0..cinst.n()).map(|j| {
        centers
            .iter()
            .map(|&c| cinst.d(j, c))
            .fold(f64::INFINITY, f64::min)
    });
    match objective {
        Objective::Median => per_point.sum(),
        Objective::Means => per_point.map(|d| d * d).sum(),
        Objective::Center => per_point.fold(0.0, f64::max),
    }
}

/// Exact optimum of `objective` over all `k`-subsets of the points.
pub fn exact_kobjective(cinst: &CenterInstance, k: usize, objective: Objective) -> Result<Exact> {
    let n = cinst.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} outside 1..={n}")));
    }
    let count = binomial(n, k);
    if count > MAX_K_SUBSETS {
        return Err(Error::SizeCap {
            what: "k-subset count".into(),
            size: count,
            limit: MAX_K_SUBSETS,
        });
    }
    let subsets: Vec<Vec<usize>> = (0..n).combinations(k).collect();
    let best = subsets
        .into_par_iter()
        .map(|set| Exact {
            cost: k_cost(cinst, &set, objective),
            set,
        })
        .reduce_with(pick)
        .expect("at least one subset");
    Ok(best)
}

fn independent_and_maximal(
    n: usize,
    set: &[usize],
    conflict: impl Fn(usize, usize) -> bool,
) -> bool {
    let mut inside = vec![false; n];
    for &v in set {
        if v >= n || inside[v] {
            return false;
        }
        inside[v] = true;
    }
    for (&a, &b) in set.iter().tuple_combinations() {
        if conflict(a, b) {
            return false;
        }
    }
    (0..n).all(|v| inside[v] || set.iter().any(|&s| conflict(v, s)))
}

/// Build `G^2` and check that `set` is a maximal independent set in it.
pub fn check_dominator(g: &Graph, set: &[usize]) -> bool {
    let n = g.n();
    let mut square = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            square[a * n + b] = a != b
                && (g.has_edge(a, b) || (0..n).any(|c| g.has_edge(a, c) && g.has_edge(c, b)));
        }
    }
    independent_and_maximal(n, set, |a, b| square[a * n + b])
}

/// Build the shared-neighbor graph on `U` and check that `set` is a maximal
/// independent set in it.
pub fn check_u_dominator(h: &Bipartite, set: &[usize]) -> bool {
    let n = h.u_count();
    let mut shared = vec![false; n * n];
    for a in 0..n {
        for b in 0..n {
            shared[a * n + b] =
                a != b && (0..h.v_count()).any(|v| h.has_edge(a, v) && h.has_edge(b, v));
        }
    }
    independent_and_maximal(n, set, |a, b| shared[a * n + b])
}
