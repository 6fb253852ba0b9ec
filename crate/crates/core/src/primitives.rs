//! Data-parallel matrix primitives.
//!
//! Every algorithm in the crate is expressed as a sequence of calls into this
//! layer: parallel loops over vectors and matrices, row/column reductions
//! (optionally fused with a distribution step), prefix sums, stable row sorts
//! and seeded label generation.
//!
//! All reductions use a fixed-shape binary tree whose split points depend only
//! on the input length, so results are bit-identical for any worker count.
//! Each public call on [`Ctx`] increments the invocation counter exactly once.

use std::fmt::Debug;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Leaf size of the reduction tree. Leaves are folded left to right.
const LEAF: usize = 128;

/// Block size of the two-level scan.
const SCAN_BLOCK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Sum,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scan {
    #[default]
    Exclusive,
    Inclusive,
}

/// Element type usable with the reduction and scan primitives.
pub trait Scalar: Copy + Send + Sync + PartialOrd + Debug {
    fn identity(op: ReduceOp) -> Self;
    fn plus(self, other: Self) -> Self;
}

impl Scalar for f64 {
    fn identity(op: ReduceOp) -> Self {
        match op {
            ReduceOp::Sum => 0.0,
            ReduceOp::Min => f64::INFINITY,
            ReduceOp::Max => f64::NEG_INFINITY,
        }
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
}

macro_rules! int_scalar {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            fn identity(op: ReduceOp) -> Self {
                match op {
                    ReduceOp::Sum => 0,
                    ReduceOp::Min => <$t>::MAX,
                    ReduceOp::Max => <$t>::MIN,
                }
            }
            fn plus(self, other: Self) -> Self {
                self.wrapping_add(other)
            }
        }
    )*};
}
int_scalar!(u64, usize, u128);

#[inline]
pub fn combine<T: Scalar>(op: ReduceOp, a: T, b: T) -> T {
    match op {
        ReduceOp::Sum => a.plus(b),
        ReduceOp::Min => {
            if b < a {
                b
            } else {
                a
            }
        }
        ReduceOp::Max => {
            if b > a {
                b
            } else {
                a
            }
        }
    }
}

fn tree_reduce<T, F>(lo: usize, hi: usize, op: ReduceOp, f: &F) -> T
where
    T: Scalar,
    F: Fn(usize) -> T + Sync,
{
    if hi - lo <= LEAF {
        (lo..hi).fold(T::identity(op), |acc, k| combine(op, acc, f(k)))
    } else {
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(
            || tree_reduce(lo, mid, op, f),
            || tree_reduce(mid, hi, op, f),
        );
        combine(op, a, b)
    }
}

fn scan_slice<T: Scalar>(values: &[T], op: ReduceOp, kind: Scan) -> Vec<T> {
    let totals: Vec<T> = values
        .par_chunks(SCAN_BLOCK)
        .map(|block| {
            block
                .iter()
                .fold(T::identity(op), |acc, &x| combine(op, acc, x))
        })
        .collect();
    let mut offsets = Vec::with_capacity(totals.len());
    let mut running = T::identity(op);
    for t in &totals {
        offsets.push(running);
        running = combine(op, running, *t);
    }
    let mut out = vec![T::identity(op); values.len()];
    out.par_chunks_mut(SCAN_BLOCK)
        .zip(values.par_chunks(SCAN_BLOCK))
        .zip(offsets.par_iter())
        .for_each(|((dst, src), &offset)| {
            let mut acc = offset;
            for (d, &x) in dst.iter_mut().zip(src) {
                match kind {
                    Scan::Exclusive => {
                        *d = acc;
                        acc = combine(op, acc, x);
                    }
                    Scan::Inclusive => {
                        acc = combine(op, acc, x);
                        *d = acc;
                    }
                }
            }
        });
    out
}

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows * cols != values.len() {
            return Err(Error::invalid(format!(
                "matrix shape {rows}x{cols} does not match {} values",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "matrix entry ({}, {}) is not finite",
                k / cols.max(1),
                k % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

/// Packed boolean matrix used for adjacency and edge masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(64);
        Self {
            rows,
            cols,
            words_per_row,
            words: vec![0; rows * words_per_row],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        let w = self.words[r * self.words_per_row + c / 64];
        (w >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let w = &mut self.words[r * self.words_per_row + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    pub fn row_count(&self, r: usize) -> usize {
        self.words[r * self.words_per_row..(r + 1) * self.words_per_row]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Column indices set in row `r`, ascending.
    pub fn row_ones(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cols).filter(move |&c| self.get(r, c))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Per-row sorting permutation together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankIndex {
    cols: usize,
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl RankIndex {
    /// Original column at sorted position `k` of row `r`.
    #[inline]
    pub fn column_at(&self, r: usize, k: usize) -> usize {
        self.order[r * self.cols + k]
    }

    /// Sorted position of original column `c` in row `r`.
    #[inline]
    pub fn rank_of(&self, r: usize, c: usize) -> usize {
        self.rank[r * self.cols + c]
    }

    pub fn row_order(&self, r: usize) -> &[usize] {
        &self.order[r * self.cols..(r + 1) * self.cols]
    }
}

/// Ordering key combining a random label with the node index, so that equal
/// labels still compare strictly.
#[inline]
pub fn rank_key(label: u64, index: usize) -> u128 {
    ((label as u128) << 64) | index as u128
}

#[inline]
pub fn key_index(key: u128) -> usize {
    (key & u64::MAX as u128) as usize
}

/// Execution context: worker pool plus the primitive-call counter.
pub struct Ctx {
    pool: Option<rayon::ThreadPool>,
    workers: usize,
    calls: AtomicU64,
}

impl Default for Ctx {
    fn default() -> Self {
        Self {
            pool: None,
            workers: rayon::current_num_threads(),
            calls: AtomicU64::new(0),
        }
    }
}

impl Debug for Ctx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ctx")
            .field("workers", &self.workers)
            .field("calls", &self.calls())
            .finish()
    }
}

impl Ctx {
    /// Context with a dedicated pool of `workers` threads. Zero selects the
    /// global rayon pool.
    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Ok(Self::default());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
        Ok(Self {
            pool: Some(pool),
            workers,
            calls: AtomicU64::new(0),
        })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Number of primitive invocations so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Parallel loop over `0..n`.
    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.run(|| (0..n).into_par_iter().map(f).collect())
    }

    /// Parallel loop over every matrix cell.
    pub fn map_matrix<F>(&self, rows: usize, cols: usize, f: F) -> DenseMatrix
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let values = self.run(|| {
            (0..rows * cols)
                .into_par_iter()
                .map(|k| f(k / cols, k % cols))
                .collect()
        });
        DenseMatrix { rows, cols, values }
    }

    /// Parallel loop producing a bit matrix.
    pub fn map_bits<F>(&self, rows: usize, cols: usize, f: F) -> BitMatrix
    where
        F: Fn(usize, usize) -> bool + Sync + Send,
    {
        let mut out = BitMatrix::new(rows, cols);
        let wpr = out.words_per_row;
        self.run(|| {
            out.words
                .par_chunks_mut(wpr.max(1))
                .enumerate()
                .for_each(|(r, words)| {
                    if wpr == 0 {
                        return;
                    }
                    for c in 0..cols {
                        if f(r, c) {
                            words[c / 64] |= 1 << (c % 64);
                        }
                    }
                })
        });
        out
    }

    /// Reduce a vector with a fixed-shape tree.
    pub fn reduce<T: Scalar>(&self, values: &[T], op: ReduceOp) -> Result<T> {
        if values.is_empty() {
            return Err(Error::invalid("reduction over an empty vector"));
        }
        Ok(self.run(|| tree_reduce(0, values.len(), op, &|k| values[k])))
    }

    /// Reduce every row of `m`.
    pub fn reduce_rows(&self, m: &DenseMatrix, op: ReduceOp) -> Result<Vec<f64>> {
        if m.is_empty() {
            return Err(Error::invalid("row reduction over an empty matrix"));
        }
        Ok(self.row_reduce_with(m.rows, m.cols, op, |r, c| m.get(r, c)))
    }

    /// Reduce every column of `m`.
    pub fn reduce_cols(&self, m: &DenseMatrix, op: ReduceOp) -> Result<Vec<f64>> {
        if m.is_empty() {
            return Err(Error::invalid("column reduction over an empty matrix"));
        }
        Ok(self.col_reduce_with(m.rows, m.cols, op, |r, c| m.get(r, c)))
    }

    /// `out[r] = op_{c} f(r, c)`: a distribution across the row followed by a
    /// row reduction, fused into one pass.
    pub fn row_reduce_with<T, F>(&self, rows: usize, cols: usize, op: ReduceOp, f: F) -> Vec<T>
    where
        T: Scalar,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        self.run(|| {
            (0..rows)
                .into_par_iter()
                .map(|r| tree_reduce(0, cols, op, &|c| f(r, c)))
                .collect()
        })
    }

    /// `out[c] = op_{r} f(r, c)`.
    pub fn col_reduce_with<T, F>(&self, rows: usize, cols: usize, op: ReduceOp, f: F) -> Vec<T>
    where
        T: Scalar,
        F: Fn(usize, usize) -> T + Sync + Send,
    {
        self.run(|| {
            (0..cols)
                .into_par_iter()
                .map(|c| tree_reduce(0, rows, op, &|r| f(r, c)))
                .collect()
        })
    }

    /// Prefix scan of a vector (exclusive unless `Scan::Inclusive`).
    pub fn prefix_sum<T: Scalar>(&self, values: &[T], op: ReduceOp, kind: Scan) -> Vec<T> {
        self.run(|| scan_slice(values, op, kind))
    }

    /// Prefix scan of every row.
    pub fn prefix_sum_rows(&self, m: &DenseMatrix, op: ReduceOp, kind: Scan) -> DenseMatrix {
        let cols = m.cols;
        let values = self.run(|| {
            let mut out = vec![0.0; m.values.len()];
            if cols > 0 {
                out.par_chunks_mut(cols)
                    .zip(m.values.par_chunks(cols))
                    .for_each(|(dst, src)| dst.copy_from_slice(&scan_slice(src, op, kind)));
            }
            out
        });
        DenseMatrix {
            rows: m.rows,
            cols,
            values,
        }
    }

    /// Stable sort of every row, returning the sorted matrix and the rank index.
    pub fn sort_rows(&self, m: &DenseMatrix) -> (DenseMatrix, RankIndex) {
        let (rows, cols) = (m.rows, m.cols);
        let orders: Vec<Vec<usize>> = self.run(|| {
            (0..rows)
                .into_par_iter()
                .map(|r| {
                    let row = m.row(r);
                    let mut idx: Vec<usize> = (0..cols).collect();
                    idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
                    idx
                })
                .collect()
        });
        let mut sorted = Vec::with_capacity(rows * cols);
        let mut order = Vec::with_capacity(rows * cols);
        let mut rank = vec![0; rows * cols];
        for (r, idx) in orders.into_iter().enumerate() {
            for (k, &c) in idx.iter().enumerate() {
                sorted.push(m.get(r, c));
                rank[r * cols + c] = k;
            }
            order.extend(idx);
        }
        (
            DenseMatrix {
                rows,
                cols,
                values: sorted,
            },
            RankIndex { cols, order, rank },
        )
    }

    pub fn transpose(&self, m: &DenseMatrix) -> DenseMatrix {
        let (rows, cols) = (m.rows, m.cols);
        let values = self.run(|| {
            (0..rows * cols)
                .into_par_iter()
                .map(|k| m.get(k % rows, k / rows))
                .collect()
        });
        DenseMatrix {
            rows: cols,
            cols: rows,
            values,
        }
    }

    /// `n` labels drawn uniformly from `{1, ..., 2n^4}`, keyed by
    /// `(seed, round_tag)`. Collisions are left in place; callers totalize
    /// the order with [`rank_key`].
    pub fn random_labels(&self, n: usize, seed: u64, round_tag: u64) -> Vec<u64> {
        self.run(|| label_stream(n, seed, round_tag))
    }
}

fn label_stream(n: usize, seed: u64, round_tag: u64) -> Vec<u64> {
    let n4 = (n as u128).pow(4).saturating_mul(2);
    let upper = u64::try_from(n4).unwrap_or(u64::MAX).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round_tag);
    (0..n).map(|_| rng.random_range(1..=upper)).collect()
}

/// Derive a sub-seed from `(seed, tag, round)` so that one user seed
/// reproduces every randomized step.
pub fn derive_seed(seed: u64, tag: &str, round: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(seed ^ mix64(h ^ mix64(round.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..rows * cols)
            .map(|_| rng.random_range(-5.0..5.0))
            .collect();
        DenseMatrix::new(rows, cols, values).unwrap()
    }

    #[test]
    fn reduce_rows_and_cols() {
        let ctx = Ctx::default();
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(ctx.reduce_rows(&m, ReduceOp::Sum).unwrap(), vec![3.0, 7.0]);
        assert_eq!(ctx.reduce_cols(&m, ReduceOp::Min).unwrap(), vec![1.0, 2.0]);
        assert_eq!(ctx.reduce_cols(&m, ReduceOp::Max).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn empty_reduction_is_rejected() {
        let ctx = Ctx::default();
        let m = DenseMatrix::zeros(0, 0);
        assert!(matches!(
            ctx.reduce_rows(&m, ReduceOp::Sum),
            Err(Error::InvalidArgument(_))
        ));
        assert!(ctx.reduce::<f64>(&[], ReduceOp::Min).is_err());
    }

    #[test]
    fn reductions_identical_across_worker_counts() {
        let m = random_matrix(7, 5, 11);
        let one = Ctx::with_workers(1).unwrap();
        let eight = Ctx::with_workers(8).unwrap();
        let a = one.reduce_rows(&m, ReduceOp::Sum).unwrap();
        let b = eight.reduce_rows(&m, ReduceOp::Sum).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        // long vector exercises the tree above the leaf size
        let v: Vec<f64> = random_matrix(1, 10_000, 3).as_slice().to_vec();
        let s1 = one.reduce(&v, ReduceOp::Sum).unwrap();
        let s8 = eight.reduce(&v, ReduceOp::Sum).unwrap();
        assert_eq!(s1.to_bits(), s8.to_bits());
        let left: f64 = v.iter().sum();
        let scale: f64 = v.iter().map(|x| x.abs()).sum();
        assert!((s1 - left).abs() <= 1e-12 * scale);
    }

    #[test]
    fn prefix_sum_examples() {
        let ctx = Ctx::default();
        assert_eq!(
            ctx.prefix_sum(&[1.0, 1.0, 1.0, 1.0], ReduceOp::Sum, Scan::Exclusive),
            vec![0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(
            ctx.prefix_sum(&[5.0], ReduceOp::Sum, Scan::Exclusive),
            vec![0.0]
        );
        assert_eq!(
            ctx.prefix_sum(&[3u64, 1, 2], ReduceOp::Min, Scan::Inclusive),
            vec![3, 1, 1]
        );
    }

    #[test]
    fn prefix_sum_matches_sequential_scan_across_blocks() {
        let ctx = Ctx::with_workers(4).unwrap();
        let v: Vec<f64> = random_matrix(1, 3 * SCAN_BLOCK + 17, 5).as_slice().to_vec();
        let got = ctx.prefix_sum(&v, ReduceOp::Sum, Scan::Inclusive);
        let mut acc = 0.0;
        for (k, x) in v.iter().enumerate() {
            acc += x;
            assert!((got[k] - acc).abs() <= 1e-9);
        }
        let mx = ctx.prefix_sum(&v, ReduceOp::Max, Scan::Inclusive);
        let mut best = f64::NEG_INFINITY;
        for (k, x) in v.iter().enumerate() {
            best = best.max(*x);
            assert_eq!(mx[k], best);
        }
    }

    #[test]
    fn sort_rows_examples() {
        let ctx = Ctx::default();
        let m = DenseMatrix::from_rows(&[vec![3.0, 1.0, 2.0], vec![2.0, 2.0, 1.0]]).unwrap();
        let (s, idx) = ctx.sort_rows(&m);
        assert_eq!(s.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(idx.row_order(0), &[1, 2, 0]);
        assert_eq!(s.row(1), &[1.0, 2.0, 2.0]);
        assert_eq!(idx.row_order(1), &[2, 0, 1]);
        for r in 0..2 {
            for c in 0..3 {
                assert_eq!(idx.column_at(r, idx.rank_of(r, c)), c);
            }
        }
    }

    #[test]
    fn labels_are_deterministic_and_in_range() {
        let ctx = Ctx::default();
        let one = ctx.random_labels(1, 7, 0);
        assert!(one[0] == 1 || one[0] == 2);
        assert_eq!(ctx.random_labels(50, 9, 3), ctx.random_labels(50, 9, 3));
        assert_ne!(ctx.random_labels(50, 9, 3), ctx.random_labels(50, 9, 4));
        let bound = 2 * 50u64.pow(4);
        assert!(ctx
            .random_labels(50, 1, 1)
            .iter()
            .all(|&l| (1..=bound).contains(&l)));
    }

    #[test]
    fn min_label_winner_is_uniform() {
        // chi-square sanity with 63 degrees of freedom; the 99.9% quantile is ~103.4
        let ctx = Ctx::default();
        let n = 64;
        let trials = 10_000;
        let mut wins = vec![0usize; n];
        for t in 0..trials {
            let labels = ctx.random_labels(n, 2024, t as u64);
            let w = (0..n).min_by_key(|&i| rank_key(labels[i], i)).unwrap();
            wins[w] += 1;
        }
        let expected = trials as f64 / n as f64;
        let chi2: f64 = wins
            .iter()
            .map(|&w| (w as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 103.4, "chi-square {chi2}");
    }

    #[test]
    fn every_call_counts_once() {
        let ctx = Ctx::default();
        let m = random_matrix(3, 3, 1);
        let before = ctx.calls();
        ctx.reduce_rows(&m, ReduceOp::Sum).unwrap();
        ctx.sort_rows(&m);
        ctx.prefix_sum_rows(&m, ReduceOp::Sum, Scan::Exclusive);
        ctx.random_labels(4, 1, 1);
        ctx.transpose(&m);
        assert_eq!(ctx.calls() - before, 5);
    }

    #[test]
    fn bit_matrix_roundtrip() {
        let ctx = Ctx::default();
        let b = ctx.map_bits(3, 70, |r, c| (r + c) % 3 == 0);
        for r in 0..3 {
            for c in 0..70 {
                assert_eq!(b.get(r, c), (r + c) % 3 == 0);
            }
        }
        assert_eq!(b.row_count(0), (0..70).filter(|c| c % 3 == 0).count());
    }

    #[test]
    fn transpose_swaps_axes() {
        let ctx = Ctx::default();
        let m = random_matrix(3, 4, 2);
        let t = ctx.transpose(&m);
        for r in 0..3 {
            for c in 0..4 {
                assert_eq!(m.get(r, c), t.get(c, r));
            }
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
        assert_eq!(derive_seed(5, "x", 2), derive_seed(5, "x", 2));
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn row_prefix_matches_reference(rows in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 1..40), 1..6)) {
            let cols = rows[0].len();
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|mut r| { r.resize(cols, 0.5); r }).collect();
            let m = DenseMatrix::from_rows(&rows).unwrap();
            let ctx = Ctx::with_workers(3).unwrap();
            let got = ctx.prefix_sum_rows(&m, ReduceOp::Sum, Scan::Exclusive);
            for (r, row) in rows.iter().enumerate() {
                let mut acc = 0.0;
                for (c, x) in row.iter().enumerate() {
                    prop_assert!((got.get(r, c) - acc).abs() <= 1e-12 * acc.abs().max(1.0));
                    acc += x;
                }
            }
        }

        #[test]
        fn sort_rows_matches_stable_reference(row in prop::collection::vec(0u8..6, 1..30)) {
            let vals: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            let m = DenseMatrix::new(1, vals.len(), vals.clone()).unwrap();
            let (s, idx) = Ctx::default().sort_rows(&m);
            let mut reference: Vec<usize> = (0..vals.len()).collect();
            reference.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
            prop_assert_eq!(idx.row_order(0), &reference[..]);
            prop_assert!(s.row(0).windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
