//! JSON files for instances, fractional LP solutions and solve reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::centers::Objective;
use crate::error::{Error, Result};
use crate::instance::{FLInstance, Points};
use crate::lp_rounding::{LpSolution, LP_TOL};
use crate::primitives::DenseMatrix;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub n_f: usize,
    pub n_c: usize,
    pub facility_costs: Vec<f64>,
    /// Client-major: `dist[j][i]`.
    pub dist: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Points>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpFile {
    pub version: u32,
    /// Facility-major: `x[i][j]`.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub facility: f64,
    pub connection: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub rounds: usize,
    pub subselection_rounds: usize,
    pub dominator_rounds: usize,
    pub primitive_calls: u64,
}

/// Evidence re-checked by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Greedy {
        alpha: Vec<f64>,
        gamma: f64,
        eps: f64,
    },
    PrimalDual {
        alpha: Vec<f64>,
        tentative: Vec<usize>,
        gamma: f64,
        eps: f64,
    },
    LpRound {
        alpha: f64,
        eps: f64,
        theta: f64,
        y: Vec<f64>,
        delta: Vec<f64>,
        cheapest: Vec<usize>,
        round_of: Vec<usize>,
    },
    KCenter {
        threshold_index: usize,
        threshold: f64,
        radius: f64,
    },
    LocalSearch {
        objective: Objective,
        eps: f64,
        beta: f64,
        history: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub version: u32,
    pub algo: String,
    pub params: Params,
    pub open: Vec<usize>,
    pub assign: Vec<usize>,
    pub costs: Costs,
    /// k-problem objective value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub counters: Counters,
    pub certificate: Certificate,
}

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(p) => msg[..p].to_string(),
        None => msg.to_string(),
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::validation(
            "version",
            format!("unsupported version {v}"),
        ));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl InstanceFile {
    pub fn from_instance(inst: &FLInstance) -> Self {
        Self {
            version: FORMAT_VERSION,
            n_f: inst.n_f(),
            n_c: inst.n_c(),
            facility_costs: inst.facility_costs().to_vec(),
            dist: inst.client_rows(),
            points: inst.points().cloned(),
        }
    }

    pub fn into_instance(self) -> Result<FLInstance> {
        check_version(self.version)?;
        if self.facility_costs.len() != self.n_f {
            return Err(Error::validation(
                "facility_costs",
                format!(
                    "{} entries, expected n_f = {}",
                    self.facility_costs.len(),
                    self.n_f
                ),
            ));
        }
        if self.dist.len() != self.n_c {
            return Err(Error::validation(
                "dist",
                format!("{} rows, expected n_c = {}", self.dist.len(), self.n_c),
            ));
        }
        FLInstance::from_client_rows(self.facility_costs, &self.dist)?.with_points(self.points)
    }
}

pub fn instance_to_string(inst: &FLInstance) -> String {
    to_json(&InstanceFile::from_instance(inst))
}

/// `path` only labels errors.
pub fn instance_from_str(text: &str, path: &Path) -> Result<FLInstance> {
    parse::<InstanceFile>(text, path)?.into_instance()
}

pub fn read_instance(path: &Path) -> Result<FLInstance> {
    instance_from_str(&read_text(path)?, path)
}

pub fn write_instance(path: &Path, inst: &FLInstance) -> Result<()> {
    write_text(path, &instance_to_string(inst))
}

pub fn lp_to_string(lp: &LpSolution) -> String {
    to_json(&LpFile {
        version: FORMAT_VERSION,
        x: lp.x.to_rows(),
        y: lp.y.clone(),
        theta: lp.theta,
    })
}

/// Parse and validate against `inst`; the declared `theta` must match the
/// recomputed objective.
pub fn lp_from_str(text: &str, inst: &FLInstance, path: &Path) -> Result<LpSolution> {
    let file: LpFile = parse(text, path)?;
    check_version(file.version)?;
    if file.x.len() != inst.n_f() {
        return Err(Error::validation(
            "x",
            format!("{} rows, expected n_f = {}", file.x.len(), inst.n_f()),
        ));
    }
    if let Some(i) = file.x.iter().position(|r| r.len() != inst.n_c()) {
        return Err(Error::validation(
            "x",
            format!("row {i} does not have n_c = {} entries", inst.n_c()),
        ));
    }
    let x = DenseMatrix::from_rows(&file.x)?;
    let lp = LpSolution::new(inst, x, file.y)?;
    if (lp.theta - file.theta).abs() > LP_TOL * lp.theta.abs().max(1.0) {
        return Err(Error::validation(
            "theta",
            format!(
                "declared {} but the solution costs {}",
                file.theta, lp.theta
            ),
        ));
    }
    Ok(lp)
}

pub fn read_lp(path: &Path, inst: &FLInstance) -> Result<LpSolution> {
    lp_from_str(&read_text(path)?, inst, path)
}

pub fn write_lp(path: &Path, lp: &LpSolution) -> Result<()> {
    write_text(path, &lp_to_string(lp))
}

pub fn solution_to_string(sol: &SolutionFile) -> String {
    to_json(sol)
}

pub fn solution_from_str(text: &str, path: &Path) -> Result<SolutionFile> {
    let sol: SolutionFile = parse(text, path)?;
    check_version(sol.version)?;
    Ok(sol)
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    solution_from_str(&read_text(path)?, path)
}

pub fn write_solution(path: &Path, sol: &SolutionFile) -> Result<()> {
    write_text(path, &solution_to_string(sol))
}

/// Label for in-memory parsing.
pub fn memory_path() -> PathBuf {
    PathBuf::from("<memory>")
}
