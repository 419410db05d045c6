//! Initial membership matrices.
//!
//! Edge clustering embeds every edge `{u, v}` as the unit vector
//! `(e_u + e_v) / sqrt(2)` over the node set and groups edges with spherical
//! k-means. A node's initial membership in community `c` is the fraction of
//! its incident edges that landed in cluster `c`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::{Matrix, MembershipMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    #[default]
    #[serde(alias = "edge")]
    EdgeClustering,
    Equal,
}

impl std::str::FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge" | "edge-clustering" => Ok(InitMethod::EdgeClustering),
            "equal" => Ok(InitMethod::Equal),
            other => Err(Error::InvalidConfig(format!(
                "unknown init method `{other}` (expected edge or equal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub method: InitMethod,
    pub k: usize,
    pub seed: u64,
    pub kmeans_max_iter: usize,
    pub kmeans_restarts: usize,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            method: InitMethod::EdgeClustering,
            k: 2,
            seed: 0,
            kmeans_max_iter: 100,
            kmeans_restarts: 3,
        }
    }
}

impl InitConfig {
    pub fn new(method: InitMethod, k: usize, seed: u64) -> Self {
        InitConfig {
            method,
            k,
            seed,
            ..InitConfig::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.k > n {
            return Err(Error::InvalidConfig(format!(
                "k = {} exceeds node count {n}",
                self.k
            )));
        }
        if self.kmeans_max_iter == 0 || self.kmeans_restarts == 0 {
            return Err(Error::InvalidConfig(
                "k-means needs at least one iteration and one restart".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the initial membership matrix with the configured method.
pub fn initialize(g: &Graph, cfg: &InitConfig) -> Result<MembershipMatrix> {
    match cfg.method {
        InitMethod::EdgeClustering => init_edge_clustering(g, cfg),
        InitMethod::Equal => init_equal(g, cfg),
    }
}

/// Every entry `1/k`.
pub fn init_equal(g: &Graph, cfg: &InitConfig) -> Result<MembershipMatrix> {
    cfg.validate(g.n())?;
    Ok(MembershipMatrix::uniform(g.n(), cfg.k))
}

pub fn init_edge_clustering(g: &Graph, cfg: &InitConfig) -> Result<MembershipMatrix> {
    cfg.validate(g.n())?;
    let k = cfg.k;
    if g.m() < k {
        return Err(Error::InvalidConfig(format!(
            "edge clustering needs at least k edges: graph has {} edges but k = {k}; use a smaller k",
            g.m()
        )));
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let labels = spherical_kmeans(g, &edges, cfg);

    let mut counts = Matrix::zeros(g.n(), k);
    for (&(u, v), &c) in edges.iter().zip(&labels) {
        counts.set(u, c, counts.get(u, c) + 1.0);
        counts.set(v, c, counts.get(v, c) + 1.0);
    }
    let uniform = 1.0 / k as f64;
    for v in 0..g.n() {
        let deg = g.degree(v) as f64;
        let row = counts.row_mut(v);
        if deg == 0.0 {
            row.fill(uniform);
        } else {
            row.iter_mut().for_each(|x| *x /= deg);
        }
    }
    MembershipMatrix::new(counts)
}

/// Cluster labels in `0..k` for each edge, best of `kmeans_restarts` runs
/// by total cosine similarity.
pub(crate) fn spherical_kmeans(g: &Graph, edges: &[(usize, usize)], cfg: &InitConfig) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for restart in 0..cfg.kmeans_restarts {
        let (objective, labels) = lloyd(g, edges, cfg.k, cfg.kmeans_max_iter, &mut rng);
        log::debug!("edge k-means restart {restart}: objective {objective:.6}");
        if best.as_ref().is_none_or(|(b, _)| objective > *b) {
            best = Some((objective, labels));
        }
    }
    best.expect("at least one restart").1
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Normalized sum of the edge vectors of every edge touching `(u, v)`, as a
/// dense node vector. A lone edge cannot tell its own block from any other
/// edge it shares no endpoint with; its one-hop neighborhood can.
fn neighborhood_center(g: &Graph, (u, v): (usize, usize)) -> Vec<f64> {
    let mut w = vec![0.0; g.n()];
    // Edges at u, then edges at v except (u, v) itself.
    for (end, other) in [(u, v), (v, u)] {
        for &x in g.neighbors(end) {
            if end == v && x == other {
                continue;
            }
            w[end] += INV_SQRT2;
            w[x] += INV_SQRT2;
        }
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    w
}

fn cosine_to(center: &[f64], (a, b): (usize, usize)) -> f64 {
    (center[a] + center[b]) * INV_SQRT2
}

/// Greedy k-means++ over edges with squared chord distance `2 - 2 cos`.
/// Returns dense unit centroids, one per cluster.
fn seed_centers(g: &Graph, edges: &[(usize, usize)], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = edges.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let first = neighborhood_center(g, edges[rng.random_range(0..m)]);
    let mut dist: Vec<f64> = edges.iter().map(|&e| 2.0 - 2.0 * cosine_to(&first, e)).collect();
    let mut centers = vec![first];

    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = m - 1;
                for (i, &d) in dist.iter().enumerate() {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                }
                pick
            } else {
                rng.random_range(0..m)
            };
            let center = neighborhood_center(g, edges[cand]);
            let updated: Vec<f64> = edges
                .par_iter()
                .zip(&dist)
                .map(|(&e, &d)| d.min(2.0 - 2.0 * cosine_to(&center, e)))
                .collect();
            let potential: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(p, _, _)| potential < *p) {
                best = Some((potential, center, updated));
            }
        }
        let (_, center, updated) = best.expect("at least one trial");
        centers.push(center);
        dist = updated;
    }
    centers
}

const UNASSIGNED: usize = usize::MAX;

/// One spherical k-means run. Centroids are stored node-major (`n × k`) so
/// scoring an edge reads two contiguous rows. Edges orthogonal to every
/// centroid stay unassigned until a centroid reaches them.
fn lloyd(
    g: &Graph,
    edges: &[(usize, usize)],
    k: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<usize>) {
    let n = g.n();
    let mut centroids = Matrix::zeros(n, k);
    for (c, center) in seed_centers(g, edges, k, rng).iter().enumerate() {
        for (u, &x) in center.iter().enumerate() {
            if x != 0.0 {
                centroids.set(u, c, x);
            }
        }
    }

    let score = |centroids: &Matrix, (u, v): (usize, usize)| -> (usize, f64) {
        let (ru, rv) = (centroids.row(u), centroids.row(v));
        let mut best = (UNASSIGNED, 0.0);
        for c in 0..k {
            let s = (ru[c] + rv[c]) * INV_SQRT2;
            if s > best.1 {
                best = (c, s);
            }
        }
        best
    };

    let mut labels = vec![UNASSIGNED; edges.len()];
    let mut scores = vec![0.0; edges.len()];
    for iter in 0..max_iter {
        let assigned: Vec<(usize, f64)> = edges.par_iter().map(|&e| score(&centroids, e)).collect();
        let mut changed = 0;
        for (i, (c, s)) in assigned.into_iter().enumerate() {
            if labels[i] != c {
                changed += 1;
                labels[i] = c;
            }
            scores[i] = s;
        }

        let mut sizes = vec![0usize; k];
        for &c in labels.iter().filter(|&&c| c != UNASSIGNED) {
            sizes[c] += 1;
        }
        if sizes.contains(&0) {
            changed += refill_empty(&mut labels, &mut sizes, &scores);
        }

        if changed == 0 && iter > 0 {
            break;
        }

        centroids.as_mut_slice().fill(0.0);
        for (&(u, v), &c) in edges.iter().zip(&labels) {
            if c != UNASSIGNED {
                centroids.set(u, c, centroids.get(u, c) + INV_SQRT2);
                centroids.set(v, c, centroids.get(v, c) + INV_SQRT2);
            }
        }
        let mut norms = vec![0.0; k];
        for u in 0..n {
            for (acc, x) in norms.iter_mut().zip(centroids.row(u)) {
                *acc += x * x;
            }
        }
        let inv: Vec<f64> = norms
            .into_iter()
            .map(|s| if s > 0.0 { 1.0 / s.sqrt() } else { 0.0 })
            .collect();
        for u in 0..n {
            for (x, f) in centroids.row_mut(u).iter_mut().zip(&inv) {
                *x *= f;
            }
        }
    }

    // Whatever no centroid reached joins the smallest cluster.
    let mut sizes = vec![0usize; k];
    for &c in labels.iter().filter(|&&c| c != UNASSIGNED) {
        sizes[c] += 1;
    }
    for l in labels.iter_mut().filter(|l| **l == UNASSIGNED) {
        let c = (0..k).min_by_key(|&c| (sizes[c], c)).expect("k >= 1");
        *l = c;
        sizes[c] += 1;
    }

    let objective = edges
        .iter()
        .zip(&labels)
        .map(|(&(u, v), &c)| (centroids.get(u, c) + centroids.get(v, c)) * INV_SQRT2)
        .sum();
    (objective, labels)
}

/// Moves the worst-fitting edges into empty clusters, never emptying a
/// donor. Returns the number of moved edges.
fn refill_empty(labels: &mut [usize], sizes: &mut [usize], scores: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut donors = order.into_iter();
    let mut moved = 0;
    for c in 0..sizes.len() {
        if sizes[c] > 0 {
            continue;
        }
        for e in donors.by_ref() {
            let from = labels[e];
            if from == UNASSIGNED || sizes[from] > 1 {
                if from != UNASSIGNED {
                    sizes[from] -= 1;
                }
                labels[e] = c;
                sizes[c] = 1;
                moved += 1;
                break;
            }
        }
    }
    moved
}
