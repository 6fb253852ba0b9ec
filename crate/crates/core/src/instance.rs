//! Facility-location instances, generators, metric validation and the
//! per-client cheapest-serve bounds on the optimum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primitives::{Ctx, DenseMatrix, ReduceOp};
use crate::tol;

/// Optional coordinates for geometrically generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    pub facilities: Vec<Vec<f64>>,
    pub clients: Vec<Vec<f64>>,
}

/// Facilities with opening costs, clients, and the facility-by-client
/// distance matrix. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FLInstance {
    facility_costs: Vec<f64>,
    /// `n_f x n_c`, row `i` holds `d(j, i)` for every client `j`.
    dist: DenseMatrix,
    points: Option<Points>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl FLInstance {
    /// Build from costs and a facility-major distance matrix.
    pub fn new(facility_costs: Vec<f64>, dist: DenseMatrix) -> Result<Self> {
        let inst = Self {
            facility_costs,
            dist,
            points: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Build from costs and client-major rows `dist[j][i]`.
    pub fn from_client_rows(facility_costs: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let n_f = facility_costs.len();
        if let Some((j, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_f) {
            return Err(Error::validation(
                "dist",
                format!(
                    "row {j} has {} entries, expected n_f = {n_f}",
                    rows[j].len()
                ),
            ));
        }
        let n_c = rows.len();
        let mut m = DenseMatrix::zeros(n_f, n_c);
        for (j, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Self::check_entries(&facility_costs, rows.iter().flatten().copied())?;
        Self::new(facility_costs, m)
    }

    /// Build from coordinates; distances are Euclidean.
    pub fn from_points(facility_costs: Vec<f64>, points: Points) -> Result<Self> {
        if facility_costs.len() != points.facilities.len() {
            return Err(Error::validation(
                "points.facilities",
                "count differs from facility_costs",
            ));
        }
        let (n_f, n_c) = (points.facilities.len(), points.clients.len());
        let mut m = DenseMatrix::zeros(n_f, n_c);
        for (i, fp) in points.facilities.iter().enumerate() {
            for (j, cp) in points.clients.iter().enumerate() {
                m.set(i, j, euclidean(fp, cp));
            }
        }
        let inst = Self {
            facility_costs,
            dist: m,
            points: Some(points),
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Facilities and clients on the real line.
    pub fn on_line(facility_x: &[f64], facility_costs: &[f64], client_x: &[f64]) -> Result<Self> {
        Self::from_points(
            facility_costs.to_vec(),
            Points {
                facilities: facility_x.iter().map(|&x| vec![x]).collect(),
                clients: client_x.iter().map(|&x| vec![x]).collect(),
            },
        )
    }

    pub(crate) fn with_points(mut self, points: Option<Points>) -> Result<Self> {
        self.points = points;
        self.validate()?;
        Ok(self)
    }

    fn check_entries(costs: &[f64], dists: impl Iterator<Item = f64>) -> Result<()> {
        if let Some(i) = costs.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::validation(
                "facility_costs",
                format!(
                    "cost of facility {i} is {} (must be finite and >= 0)",
                    costs[i]
                ),
            ));
        }
        for d in dists {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::validation(
                    "dist",
                    format!("distance {d} is negative or not finite"),
                ));
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.facility_costs.is_empty() {
            return Err(Error::validation(
                "n_f",
                "at least one facility is required",
            ));
        }
        if self.dist.cols() == 0 {
            return Err(Error::validation("n_c", "at least one client is required"));
        }
        if self.dist.rows() != self.facility_costs.len() {
            return Err(Error::validation(
                "dist",
                "row count differs from facility_costs",
            ));
        }
        Self::check_entries(&self.facility_costs, self.dist.as_slice().iter().copied())?;
        if let Some(p) = &self.points {
            if p.facilities.len() != self.n_f() || p.clients.len() != self.n_c() {
                return Err(Error::validation(
                    "points",
                    "point counts do not match n_f/n_c",
                ));
            }
            for (i, fp) in p.facilities.iter().enumerate() {
                for (j, cp) in p.clients.iter().enumerate() {
                    let e = euclidean(fp, cp);
                    let d = self.d(j, i);
                    if (e - d).abs() > 1e-12 * e.abs().max(d.abs()).max(1.0) {
                        return Err(Error::validation(
                            "dist",
                            format!("d({j}, {i}) = {d} disagrees with coordinates ({e})"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_f(&self) -> usize {
        self.facility_costs.len()
    }

    #[inline]
    pub fn n_c(&self) -> usize {
        self.dist.cols()
    }

    /// Problem size `n_f * n_c`.
    #[inline]
    pub fn m(&self) -> usize {
        self.n_f() * self.n_c()
    }

    #[inline]
    pub fn cost(&self, facility: usize) -> f64 {
        self.facility_costs[facility]
    }

    pub fn facility_costs(&self) -> &[f64] {
        &self.facility_costs
    }

    /// Distance between client `j` and facility `i`.
    #[inline]
    pub fn d(&self, client: usize, facility: usize) -> f64 {
        self.dist.get(facility, client)
    }

    /// Facility-major distance matrix.
    pub fn dist_matrix(&self) -> &DenseMatrix {
        &self.dist
    }

    pub fn points(&self) -> Option<&Points> {
        self.points.as_ref()
    }

    /// Client-major rows `dist[j][i]`.
    pub fn client_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_c())
            .map(|j| (0..self.n_f()).map(|i| self.d(j, i)).collect())
            .collect()
    }

    /// Distance from client `j` to the nearest facility in `open`.
    pub fn d_to_set(&self, client: usize, open: &[usize]) -> f64 {
        open.iter()
            .map(|&i| self.d(client, i))
            .fold(f64::INFINITY, f64::min)
    }

    /// Facility-location objective of an open set, each client served by its
    /// nearest open facility.
    pub fn facloc_cost(&self, open: &[usize]) -> f64 {
        let fac: f64 = open.iter().map(|&i| self.cost(i)).sum();
        let conn: f64 = (0..self.n_c()).map(|j| self.d_to_set(j, open)).sum();
        fac + conn
    }
}

/// Uniform points in the unit `dim`-cube with facility costs uniform in
/// `cost_range`.
pub fn gen_euclidean(
    n_f: usize,
    n_c: usize,
    dim: usize,
    cost_range: (f64, f64),
    seed: u64,
) -> Result<FLInstance> {
    if n_f == 0 || n_c == 0 || dim == 0 {
        return Err(Error::invalid("n_f, n_c and dim must all be >= 1"));
    }
    let (lo, hi) = cost_range;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
        return Err(Error::invalid(format!(
            "cost range [{lo}, {hi}] must satisfy 0 <= lo <= hi"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.random::<f64>()).collect();
    let facilities: Vec<Vec<f64>> = (0..n_f).map(|_| point(&mut rng)).collect();
    let clients: Vec<Vec<f64>> = (0..n_c).map(|_| point(&mut rng)).collect();
    let costs = (0..n_f)
        .map(|_| {
            if hi > lo {
                rng.random_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect();
    FLInstance::from_points(
        costs,
        Points {
            facilities,
            clients,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointId {
    Facility(usize),
    Client(usize),
}

/// Result of a triangle-inequality scan: `(a, b, c)` violates
/// `d(a, c) <= d(a, b) + d(b, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCheck {
    pub holds: bool,
    pub violation: Option<(PointId, PointId, PointId)>,
}

/// Triangle check over all ordered triples of distinct points of a square
/// matrix, additive slack `1e-9`. Returns the first violating triple in
/// lexicographic `(a, b, c)` order.
pub fn verify_metric_matrix(m: &DenseMatrix) -> Option<(usize, usize, usize)> {
    let n = m.rows();
    for a in 0..n {
        for b in 0..n {
            if b == a {
                continue;
            }
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                if m.get(a, c) > m.get(a, b) + m.get(b, c) + tol::METRIC_ABS {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

/// Square distance matrix over facilities followed by clients. With
/// coordinates, every pair is Euclidean. Without them, same-side distances
/// are the shortest two-hop path through the other side, the tightest values
/// any metric extending the bipartite distances can take.
pub fn combined_distances(inst: &FLInstance) -> DenseMatrix {
    let (n_f, n_c) = (inst.n_f(), inst.n_c());
    let n = n_f + n_c;
    let mut m = DenseMatrix::zeros(n, n);
    if let Some(p) = inst.points() {
        let all: Vec<&Vec<f64>> = p.facilities.iter().chain(&p.clients).collect();
        for a in 0..n {
            for b in 0..n {
                m.set(a, b, euclidean(all[a], all[b]));
            }
        }
        return m;
    }
    for i in 0..n_f {
        for j in 0..n_c {
            m.set(i, n_f + j, inst.d(j, i));
            m.set(n_f + j, i, inst.d(j, i));
        }
    }
    for a in 0..n_f {
        for b in 0..n_f {
            if a != b {
                let v = (0..n_c)
                    .map(|j| inst.d(j, a) + inst.d(j, b))
                    .fold(f64::INFINITY, f64::min);
                m.set(a, b, v);
            }
        }
    }
    for a in 0..n_c {
        for b in 0..n_c {
            if a != b {
                let v = (0..n_f)
                    .map(|i| inst.d(a, i) + inst.d(b, i))
                    .fold(f64::INFINITY, f64::min);
                m.set(n_f + a, n_f + b, v);
            }
        }
    }
    m
}

/// O(n^3) triangle-inequality check over facilities and clients together.
pub fn verify_metric(inst: &FLInstance) -> MetricCheck {
    let n_f = inst.n_f();
    let id = |k: usize| {
        if k < n_f {
            PointId::Facility(k)
        } else {
            PointId::Client(k - n_f)
        }
    };
    match verify_metric_matrix(&combined_distances(inst)) {
        None => MetricCheck {
            holds: true,
            violation: None,
        },
        Some((a, b, c)) => MetricCheck {
            holds: false,
            violation: Some((id(a), id(b), id(c))),
        },
    }
}

/// `gamma_j = min_i (f_i + d(j, i))` and `gamma = max_j gamma_j`; together
/// they bracket the optimum as `gamma <= opt <= sum_j gamma_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaBounds {
    pub gamma_j: Vec<f64>,
    pub gamma: f64,
    pub sum_gamma: f64,
}

pub fn gamma_bounds(ctx: &Ctx, inst: &FLInstance) -> Result<GammaBounds> {
    if inst.n_f() == 0 {
        return Err(Error::invalid("gamma bounds need at least one facility"));
    }
    let gamma_j: Vec<f64> = ctx.col_reduce_with(inst.n_f(), inst.n_c(), ReduceOp::Min, |i, j| {
        inst.cost(i) + inst.d(j, i)
    });
    let gamma = ctx.reduce(&gamma_j, ReduceOp::Max)?;
    let sum_gamma = ctx.reduce(&gamma_j, ReduceOp::Sum)?;
    Ok(GammaBounds {
        gamma_j,
        gamma,
        sum_gamma,
    })
}

/// Open facility set, client assignment, and the cost split. Costs always use
/// the original facility costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub open: Vec<usize>,
    pub assign: Vec<usize>,
    pub facility_cost: f64,
    pub connection_cost: f64,
    pub total: f64,
    pub rounds: usize,
    pub primitive_calls: u64,
}

impl Solution {
    /// Cost an assignment. `open` is sorted and deduplicated; every assigned
    /// facility must be open.
    pub fn from_assignment(
        inst: &FLInstance,
        mut open: Vec<usize>,
        assign: Vec<usize>,
        rounds: usize,
        primitive_calls: u64,
    ) -> Result<Self> {
        open.sort_unstable();
        open.dedup();
        if assign.len() != inst.n_c() {
            return Err(Error::Internal(format!(
                "assignment covers {} of {} clients",
                assign.len(),
                inst.n_c()
            )));
        }
        if let Some(&i) = open.iter().find(|&&i| i >= inst.n_f()) {
            return Err(Error::Internal(format!("open facility {i} out of range")));
        }
        if let Some(j) = assign.iter().position(|i| open.binary_search(i).is_err()) {
            return Err(Error::Internal(format!(
                "client {j} assigned to facility {} which is not open",
                assign[j]
            )));
        }
        let facility_cost: f64 = open.iter().map(|&i| inst.cost(i)).sum();
        let connection_cost: f64 = assign.iter().enumerate().map(|(j, &i)| inst.d(j, i)).sum();
        Ok(Self {
            open,
            assign,
            facility_cost,
            connection_cost,
            total: facility_cost + connection_cost,
            rounds,
            primitive_calls,
        })
    }

    /// Objective with every client reassigned to its nearest open facility;
    /// never exceeds `total`.
    pub fn facloc_cost(&self, inst: &FLInstance) -> f64 {
        inst.facloc_cost(&self.open)
    }

    pub fn is_open(&self, facility: usize) -> bool {
        self.open.binary_search(&facility).is_ok()
    }
}
