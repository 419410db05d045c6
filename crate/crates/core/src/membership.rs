//! Soft membership matrices, community covers, and the thresholding
//! strategies that turn the former into the latter.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Dense row-major `rows × cols` matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest absolute entry-wise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `n × k` matrix of propagation probabilities: entry `(v, c)` is the
/// probability that node `v` belongs to community `c`. Entries lie in
/// `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix(Matrix);

impl MembershipMatrix {
    /// Wraps a matrix after checking every entry lies in `[0, 1]`.
    pub fn new(m: Matrix) -> Result<Self> {
        if m.cols == 0 {
            return Err(Error::DimensionMismatch("membership matrix needs k >= 1".into()));
        }
        if let Some(x) = m.data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("membership entry {x} outside [0, 1]")));
        }
        Ok(MembershipMatrix(m))
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        MembershipMatrix(Matrix::filled(n, k, 1.0 / k as f64))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.rows
    }

    pub fn k(&self) -> usize {
        self.0.cols
    }

    #[inline]
    pub fn get(&self, v: NodeId, c: usize) -> f64 {
        self.0.get(v, c)
    }

    #[inline]
    pub fn row(&self, v: NodeId) -> &[f64] {
        self.0.row(v)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Index of the largest entry in row `v`; ties go to the lowest index.
    pub fn argmax(&self, v: NodeId) -> usize {
        argmax(self.row(v))
    }

    /// Whether every row sums to one within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        (0..self.n()).all(|v| (self.row(v).iter().sum::<f64>() - 1.0).abs() <= tol)
    }

    /// Column `c` of the output is column `perm[c]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.k());
        let mut out = Matrix::zeros(self.n(), self.k());
        for v in 0..self.n() {
            for (c, &src) in perm.iter().enumerate() {
                out.set(v, c, self.get(v, src));
            }
        }
        MembershipMatrix(out)
    }

    /// Writes CSV with header `node,c0,...,c{k-1}` and one row per node,
    /// keyed by the node's external label.
    pub fn write_csv<W: Write>(&self, g: &Graph, mut out: W) -> std::io::Result<()> {
        write!(out, "node")?;
        for c in 0..self.k() {
            write!(out, ",c{c}")?;
        }
        writeln!(out)?;
        for v in 0..self.n() {
            write!(out, "{}", g.label(v))?;
            for x in self.row(v) {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (c, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = c;
        }
    }
    best
}

/// Scales each row of a nonnegative matrix to sum to one. All-zero rows
/// become the uniform row `1/k`.
pub fn normalize_rows(mut raw: Matrix) -> Result<MembershipMatrix> {
    if raw.cols == 0 {
        return Err(Error::DimensionMismatch("cannot normalize a matrix with k = 0".into()));
    }
    if let Some(x) = raw.data.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Domain(format!("cannot normalize entry {x}")));
    }
    let uniform = 1.0 / raw.cols as f64;
    for r in 0..raw.rows {
        let row = raw.row_mut(r);
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|x| *x /= sum);
        } else {
            row.fill(uniform);
        }
    }
    Ok(MembershipMatrix(raw))
}

/// A list of `k` node sets. Sets may overlap and need not cover every node;
/// empty sets are allowed and kept so community indices stay aligned with
/// membership columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityCover {
    communities: Vec<Vec<NodeId>>,
}

impl CommunityCover {
    /// Sorts and deduplicates each community and checks ids are `< n`.
    pub fn new(mut communities: Vec<Vec<NodeId>>, n: usize) -> Result<Self> {
        if communities.is_empty() {
            return Err(Error::EmptyInput("cover with no communities".into()));
        }
        for c in &mut communities {
            c.sort_unstable();
            c.dedup();
            if let Some(&bad) = c.last().filter(|&&v| v >= n) {
                return Err(Error::OutOfRange { index: bad, n });
            }
        }
        let empties = communities.iter().filter(|c| c.is_empty()).count();
        if empties > 0 {
            log::debug!("cover has {empties} empty communities");
        }
        Ok(CommunityCover { communities })
    }

    /// Partition from one label per node; labels must be `< k`.
    pub fn from_labels(labels: &[usize], k: usize) -> Result<Self> {
        let mut communities = vec![Vec::new(); k.max(1)];
        for (v, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::OutOfRange { index: l, n: k });
            }
            communities[l].push(v);
        }
        Ok(CommunityCover { communities })
    }

    pub fn communities(&self) -> &[Vec<NodeId>] {
        &self.communities
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn empty_count(&self) -> usize {
        self.communities.iter().filter(|c| c.is_empty()).count()
    }

    /// Copy with empty communities removed.
    pub fn without_empty(&self) -> Self {
        CommunityCover {
            communities: self
                .communities
                .iter()
                .filter(|c| !c.is_empty())
                .cloned()
                .collect(),
        }
    }

    /// For each node in `0..n`, the indices of communities containing it.
    pub fn memberships(&self, n: usize) -> Vec<Vec<usize>> {
        let mut per_node = vec![Vec::new(); n];
        for (c, members) in self.communities.iter().enumerate() {
            for &v in members {
                per_node[v].push(c);
            }
        }
        per_node
    }

    /// Every node belongs to exactly one community.
    pub fn is_partition(&self, n: usize) -> bool {
        let mut seen = vec![0u32; n];
        for &v in self.communities.iter().flatten() {
            if v >= n {
                return false;
            }
            seen[v] += 1;
        }
        seen.iter().all(|&s| s == 1)
    }

    /// Every node belongs to at least one community.
    pub fn covers(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &v in self.communities.iter().flatten() {
            seen[v] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// Communities reordered so that output community `c` is input
    /// community `perm[c]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        CommunityCover {
            communities: perm.iter().map(|&src| self.communities[src].clone()).collect(),
        }
    }

    /// Reduces an overlapping cover to a partition: each multi-member node
    /// keeps the community holding most of its neighbors (ties to the lowest
    /// index); uncovered nodes stay uncovered.
    pub fn dominant_partition(&self, g: &Graph) -> Self {
        let per_node = self.memberships(g.n());
        let mut communities = vec![Vec::new(); self.len()];
        for (v, mine) in per_node.iter().enumerate() {
            let chosen = match mine.as_slice() {
                [] => continue,
                [only] => *only,
                several => {
                    let score = |c: usize| {
                        g.neighbors(v)
                            .iter()
                            .filter(|u| self.communities[c].binary_search(u).is_ok())
                            .count()
                    };
                    let mut best = several[0];
                    let mut best_score = score(best);
                    for &c in &several[1..] {
                        let s = score(c);
                        if s > best_score {
                            best = c;
                            best_score = s;
                        }
                    }
                    best
                }
            };
            communities[chosen].push(v);
        }
        CommunityCover { communities }
    }
}

/// How soft memberships are cut into communities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ThresholdStrategy {
    /// Each node joins only its most probable community.
    Maximum,
    /// Node joins `c` when its probability is at least the column mean.
    #[default]
    AverageOfAll,
    /// Node joins `c` when its probability is at least its neighbors' mean.
    AverageOfNeighbors,
    /// Node joins `c` when its probability is at least `t`, `t` in `(0, 1]`.
    Fixed(f64),
}

impl ThresholdStrategy {
    pub fn validate(self) -> Result<Self> {
        match self {
            ThresholdStrategy::Fixed(t) if !(t > 0.0 && t <= 1.0) => Err(Error::InvalidConfig(
                format!("fixed threshold {t} outside (0, 1]"),
            )),
            s => Ok(s),
        }
    }
}

impl fmt::Display for ThresholdStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdStrategy::Maximum => f.write_str("max"),
            ThresholdStrategy::AverageOfAll => f.write_str("avg-all"),
            ThresholdStrategy::AverageOfNeighbors => f.write_str("avg-nbr"),
            ThresholdStrategy::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

impl FromStr for ThresholdStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let strategy = match s {
            "max" | "maximum" => ThresholdStrategy::Maximum,
            "avg-all" => ThresholdStrategy::AverageOfAll,
            "avg-nbr" => ThresholdStrategy::AverageOfNeighbors,
            other => {
                let t = other
                    .strip_prefix("fixed:")
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "unknown threshold `{other}` (expected max, avg-all, avg-nbr or fixed:<t>)"
                        ))
                    })?;
                ThresholdStrategy::Fixed(t)
            }
        };
        strategy.validate()
    }
}

impl TryFrom<String> for ThresholdStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ThresholdStrategy> for String {
    fn from(s: ThresholdStrategy) -> String {
        s.to_string()
    }
}

/// Cuts `p` into a cover. Every node ends up in at least one community:
/// nodes that meet no threshold fall back to their argmax community. A zero
/// probability never meets a relative threshold.
pub fn threshold_assign(
    p: &MembershipMatrix,
    g: &Graph,
    strategy: ThresholdStrategy,
) -> Result<CommunityCover> {
    threshold_assign_counted(p, g, strategy).map(|(cover, _)| cover)
}

/// [`threshold_assign`] that also returns how many nodes needed the argmax
/// fallback.
pub fn threshold_assign_counted(
    p: &MembershipMatrix,
    g: &Graph,
    strategy: ThresholdStrategy,
) -> Result<(CommunityCover, usize)> {
    let strategy = strategy.validate()?;
    let (n, k) = (p.n(), p.k());
    if g.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "membership matrix has {n} rows but graph has {} nodes",
            g.n()
        )));
    }

    let column_means: Vec<f64> = match strategy {
        ThresholdStrategy::AverageOfAll => {
            let mut sums = vec![0.0; k];
            for v in 0..n {
                for (s, x) in sums.iter_mut().zip(p.row(v)) {
                    *s += x;
                }
            }
            sums.into_iter().map(|s| s / n as f64).collect()
        }
        _ => Vec::new(),
    };

    let mut communities = vec![Vec::new(); k];
    let mut fallbacks = 0;
    let mut neighbor_mean = vec![0.0; k];
    for v in 0..n {
        let row = p.row(v);
        let mut joined = false;
        match strategy {
            ThresholdStrategy::Maximum => {}
            ThresholdStrategy::AverageOfAll => {
                for c in 0..k {
                    if row[c] > 0.0 && row[c] >= column_means[c] {
                        communities[c].push(v);
                        joined = true;
                    }
                }
            }
            ThresholdStrategy::AverageOfNeighbors => {
                let nbrs = g.neighbors(v);
                if !nbrs.is_empty() {
                    neighbor_mean.fill(0.0);
                    for &u in nbrs {
                        for (s, x) in neighbor_mean.iter_mut().zip(p.row(u)) {
                            *s += x;
                        }
                    }
                    let deg = nbrs.len() as f64;
                    for c in 0..k {
                        if row[c] > 0.0 && row[c] >= neighbor_mean[c] / deg {
                            communities[c].push(v);
                            joined = true;
                        }
                    }
                }
            }
            ThresholdStrategy::Fixed(t) => {
                for c in 0..k {
                    if row[c] >= t {
                        communities[c].push(v);
                        joined = true;
                    }
                }
            }
        }
        if !joined {
            if strategy != ThresholdStrategy::Maximum {
                fallbacks += 1;
            }
            communities[argmax(row)].push(v);
        }
    }
    if fallbacks > 0 {
        log::debug!("{fallbacks} nodes assigned by argmax fallback");
    }
    Ok((CommunityCover { communities }, fallbacks))
}
