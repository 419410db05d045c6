//! LFR-style generator: power-law degrees and community sizes, a mixing
//! parameter `mu`, and a fixed number of nodes belonging to exactly two
//! communities. Edges are wired by stub matching with rejection rounds.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{power_law, power_law_mean};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::CommunityCover;

/// Largest-to-smallest community size ratio of the size distribution.
const SIZE_SPREAD: f64 = 2.5;
const MATCH_ROUNDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LfrLiteParams {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub avg_degree: f64,
    pub max_degree: usize,
    pub overlap_nodes: usize,
    #[serde(default = "default_memberships")]
    pub overlap_memberships: usize,
    #[serde(default = "default_degree_exponent")]
    pub degree_exponent: f64,
    #[serde(default = "default_size_exponent")]
    pub size_exponent: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_memberships() -> usize {
    2
}

fn default_degree_exponent() -> f64 {
    2.5
}

fn default_size_exponent() -> f64 {
    1.5
}

impl LfrLiteParams {
    /// 100 nodes, 4 communities, `mu = 0.1`, 10 overlapping nodes, about
    /// 725 edges.
    pub fn sparse_regime(seed: u64) -> Self {
        LfrLiteParams {
            n: 100,
            k: 4,
            mu: 0.1,
            avg_degree: 14.5,
            max_degree: 30,
            overlap_nodes: 10,
            overlap_memberships: 2,
            degree_exponent: 2.5,
            size_exponent: 1.5,
            seed,
        }
    }

    /// 100 nodes, 6 communities, `mu = 0.3`, 20 overlapping nodes.
    pub fn dense_regime(seed: u64) -> Self {
        LfrLiteParams {
            n: 100,
            k: 6,
            mu: 0.3,
            avg_degree: 19.0,
            max_degree: 35,
            overlap_nodes: 20,
            ..Self::sparse_regime(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n < 2 {
            return bad("LFR-lite needs at least two nodes".into());
        }
        if self.k == 0 {
            return bad("LFR-lite needs k >= 1".into());
        }
        if !(0.0..1.0).contains(&self.mu) {
            return bad(format!("mixing parameter {} outside [0, 1)", self.mu));
        }
        if self.overlap_nodes > self.n {
            return bad(format!(
                "overlap_nodes {} exceeds n {}",
                self.overlap_nodes, self.n
            ));
        }
        if self.overlap_memberships != 2 {
            return bad("overlapping nodes belong to exactly 2 communities".into());
        }
        if self.overlap_nodes > 0 && self.k < 2 {
            return bad("overlapping nodes need k >= 2".into());
        }
        if self.avg_degree.is_nan() || self.avg_degree < 1.0 || self.max_degree as f64 <= self.avg_degree {
            return bad(format!(
                "need 1 <= avg_degree < max_degree, got {} and {}",
                self.avg_degree, self.max_degree
            ));
        }
        if self.max_degree >= self.n {
            return bad(format!("max_degree {} must be below n {}", self.max_degree, self.n));
        }
        if self.degree_exponent <= 1.0 || self.size_exponent <= 0.0 {
            return bad("power-law exponents must exceed 1 (degrees) and 0 (sizes)".into());
        }
        Ok(())
    }
}

/// Lower cutoff of the degree power law that hits the requested mean.
fn min_degree_for_mean(exponent: f64, mean: f64, hi: f64) -> Result<f64> {
    if power_law_mean(exponent, 1.0, hi) > mean {
        return Err(Error::Infeasible(format!(
            "average degree {mean} unreachable with exponent {exponent} and max degree {hi}"
        )));
    }
    let (mut lo, mut up) = (1.0, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + up);
        if power_law_mean(exponent, mid, hi) < mean {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(0.5 * (lo + up))
}

/// Splits `total` slots into `weights.len()` integer sizes proportional to
/// the weights (largest remainder), each at least one.
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|x| (x.floor() as usize).max(1)).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut assigned: usize = sizes.iter().sum();
    let mut i = 0;
    while assigned < total {
        sizes[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    while assigned > total {
        let big = (0..sizes.len()).max_by_key(|&c| (sizes[c], usize::MAX - c)).unwrap();
        sizes[big] -= 1;
        assigned -= 1;
    }
    sizes
}

/// Pairs up stubs, rejecting self-loops, existing edges and pairs that fail
/// `allowed`. Rejected stubs are reshuffled for a limited number of rounds;
/// leftovers are dropped.
fn match_stubs<R: Rng>(
    rng: &mut R,
    mut stubs: Vec<usize>,
    edges: &mut HashSet<(usize, usize)>,
    allowed: impl Fn(usize, usize) -> bool,
) -> usize {
    let mut dropped = 0;
    for _ in 0..MATCH_ROUNDS {
        if stubs.len() < 2 {
            break;
        }
        stubs.shuffle(rng);
        let mut rejected = Vec::new();
        let mut it = stubs.chunks_exact(2);
        for pair in it.by_ref() {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !allowed(u, v) || !edges.insert((u, v)) {
                rejected.extend_from_slice(pair);
            }
        }
        rejected.extend_from_slice(it.remainder());
        if rejected.len() == stubs.len() {
            stubs = rejected;
            break;
        }
        stubs = rejected;
    }
    dropped += stubs.len();
    dropped
}

/// Generates an LFR-lite network and its ground-truth cover.
pub fn generate_lfr_lite(params: &LfrLiteParams) -> Result<(Graph, CommunityCover)> {
    params.validate()?;
    let p = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let slots = p.n + p.overlap_nodes;
    if p.k > slots {
        return Err(Error::Infeasible(format!(
            "{} communities cannot be filled from {slots} membership slots",
            p.k
        )));
    }

    // Degrees.
    let hi = p.max_degree as f64;
    let lo = min_degree_for_mean(p.degree_exponent, p.avg_degree, hi)?;
    let degrees: Vec<usize> = (0..p.n)
        .map(|_| (power_law(&mut rng, p.degree_exponent, lo, hi).round() as usize).clamp(1, p.max_degree))
        .collect();

    // Community sizes, consuming exactly n + overlap_nodes slots.
    let weights: Vec<f64> = (0..p.k)
        .map(|_| power_law(&mut rng, p.size_exponent, 1.0, SIZE_SPREAD))
        .collect();
    let sizes = apportion(&weights, slots);
    if sizes.iter().sum::<usize>() != slots {
        return Err(Error::Infeasible(format!(
            "cannot split {slots} slots into {} communities of size >= 1",
            p.k
        )));
    }
    if p.overlap_nodes > 0 && sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Infeasible("overlapping nodes need two non-empty communities".into()));
    }

    // Memberships: which nodes overlap, then place nodes with high internal
    // degree first into communities large enough to host their stubs.
    let mut nodes: Vec<usize> = (0..p.n).collect();
    nodes.shuffle(&mut rng);
    let mut n_memberships = vec![1usize; p.n];
    for &v in &nodes[..p.overlap_nodes] {
        n_memberships[v] = 2;
    }
    let external: Vec<usize> = degrees
        .iter()
        .map(|&d| ((p.mu * d as f64).round() as usize).min(d))
        .collect();
    let internal: Vec<usize> = degrees.iter().zip(&external).map(|(d, e)| d - e).collect();

    let mut order: Vec<usize> = (0..p.n).collect();
    order.shuffle(&mut rng);
    // Overlapping nodes first: they need two distinct open communities.
    order.sort_by_key(|&v| {
        (
            std::cmp::Reverse(n_memberships[v]),
            std::cmp::Reverse(internal[v].div_ceil(n_memberships[v])),
        )
    });

    let mut capacity = sizes.clone();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); p.k];
    let mut node_comms: Vec<Vec<usize>> = vec![Vec::new(); p.n];
    for &v in &order {
        let need = internal[v].div_ceil(n_memberships[v]);
        for _ in 0..n_memberships[v] {
            let open: Vec<usize> = (0..p.k)
                .filter(|&c| capacity[c] > 0 && !node_comms[v].contains(&c))
                .collect();
            if open.is_empty() {
                return Err(Error::Infeasible(format!(
                    "no community left for node {v}; reduce overlap_nodes or increase k"
                )));
            }
            // Prefer communities where the node's stubs fit; otherwise the
            // largest open one.
            let fitting: Vec<usize> = open.iter().copied().filter(|&c| sizes[c] > need).collect();
            let c = if fitting.is_empty() {
                *open.iter().max_by_key(|&&c| (sizes[c], std::cmp::Reverse(c))).unwrap()
            } else {
                // Weight by remaining capacity so large communities fill evenly.
                let total: usize = fitting.iter().map(|&c| capacity[c]).sum();
                let mut target = rng.random_range(0..total);
                let mut pick = fitting[0];
                for &c in &fitting {
                    if target < capacity[c] {
                        pick = c;
                        break;
                    }
                    target -= capacity[c];
                }
                pick
            };
            capacity[c] -= 1;
            members[c].push(v);
            node_comms[v].push(c);
        }
    }

    // Wiring: internal stubs inside each community, then external stubs
    // between nodes sharing no community.
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let mut surplus = vec![0usize; p.n];
    let mut dropped = 0;
    for (c, list) in members.iter().enumerate() {
        let mut stubs = Vec::new();
        for &v in list {
            let share = internal[v] / n_memberships[v]
                + usize::from(node_comms[v][0] == c && internal[v] % n_memberships[v] == 1);
            let fit = share.min(list.len() - 1);
            surplus[v] += share - fit;
            stubs.extend(std::iter::repeat_n(v, fit));
        }
        dropped += match_stubs(&mut rng, stubs, &mut edges, |_, _| true);
    }
    let shares_community =
        |u: usize, v: usize| node_comms[u].iter().any(|c| node_comms[v].contains(c));
    let mut stubs = Vec::new();
    for v in 0..p.n {
        stubs.extend(std::iter::repeat_n(v, external[v] + surplus[v]));
    }
    dropped += match_stubs(&mut rng, stubs, &mut edges, |u, v| !shares_community(u, v));
    if dropped > 0 {
        log::debug!("LFR-lite dropped {dropped} unmatched stubs");
    }

    let mut edge_list: Vec<(usize, usize)> = edges.into_iter().collect();
    edge_list.sort_unstable();
    let (graph, _) = Graph::from_edges(p.n, edge_list);
    let truth = CommunityCover::new(members, p.n)?;
    Ok((graph, truth))
}
