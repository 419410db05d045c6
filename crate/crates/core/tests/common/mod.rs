//! Brute-force reference implementations and random fixtures shared by the
//! integration suites. Everything here works on dense adjacency matrices and
//! plain nested vectors so it shares no code with the library kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use iedc_core::{CommunityCover, Graph, MembershipMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub graph: Graph,
    pub adj: Vec<Vec<bool>>,
    pub p: Vec<Vec<f64>>,
}

impl Fixture {
    pub fn membership(&self) -> MembershipMatrix {
        MembershipMatrix::from_rows(&self.p).unwrap()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random graph with at least one edge plus a random row-stochastic matrix,
/// sometimes with exact zeros and isolated nodes.
pub fn random_fixture(rng: &mut ChaCha8Rng, max_n: usize, max_k: usize) -> Fixture {
    let n = rng.random_range(2..=max_n);
    let k = rng.random_range(1..=max_k);
    let density = rng.random_range(0.05..0.9);
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(density) {
                adj[u][v] = true;
                adj[v][u] = true;
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        adj[0][1] = true;
        adj[1][0] = true;
        edges.push((0, 1));
    }
    let (graph, _) = Graph::from_edges(n, edges);
    let p = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..k)
                .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
                .collect();
            let s: f64 = row.iter().sum();
            if s == 0.0 {
                row[rng.random_range(0..k)] = 1.0;
            } else {
                row.iter_mut().for_each(|x| *x /= s);
            }
            row
        })
        .collect();
    Fixture { graph, adj, p }
}

pub fn random_cover(rng: &mut ChaCha8Rng, n: usize, k: usize, overlap: f64) -> CommunityCover {
    let mut communities = vec![Vec::new(); k];
    for v in 0..n {
        communities[rng.random_range(0..k)].push(v);
        for c in communities.iter_mut() {
            if rng.random_bool(overlap) && c.last() != Some(&v) {
                c.push(v);
            }
        }
    }
    CommunityCover::new(communities, n).unwrap()
}

fn degree(adj: &[Vec<bool>], v: usize) -> usize {
    adj[v].iter().filter(|&&e| e).count()
}

pub fn naive_ia(adj: &[Vec<bool>], p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let k = p[0].len();
    (0..n)
        .map(|v| {
            let d = degree(adj, v);
            if d == 0 {
                return p[v].clone();
            }
            (0..k)
                .map(|c| (0..n).filter(|&u| adj[v][u]).map(|u| p[u][c]).sum::<f64>() / d as f64)
                .collect()
        })
        .collect()
}

/// The literal double sum over neighbors and communities.
pub fn naive_ea(adj: &[Vec<bool>], p: &[Vec<f64>], beta: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let k = p[0].len();
    (0..n)
        .map(|v| {
            let d = degree(adj, v);
            (0..k)
                .map(|ci| {
                    if d == 0 {
                        return 0.0;
                    }
                    let mut s = 0.0;
                    for u in (0..n).filter(|&u| adj[v][u]) {
                        for cj in 0..k {
                            s += p[u][cj] * beta[ci][cj];
                        }
                    }
                    s / d as f64
                })
                .collect()
        })
        .collect()
}

fn pair_term(p: &[Vec<f64>], u: usize, v: usize, x: usize, y: usize) -> f64 {
    (p[u][x] * p[v][y]).max(p[u][y] * p[v][x])
}

pub fn naive_rho(adj: &[Vec<bool>], p: &[Vec<f64>]) -> f64 {
    let n = adj.len();
    let k = p[0].len();
    let (mut non_edge, mut all) = (0.0, 0.0);
    for u in 0..n {
        for v in (u + 1)..n {
            for x in 0..k {
                for y in 0..k {
                    let t = pair_term(p, u, v, x, y);
                    all += t;
                    if !adj[u][v] {
                        non_edge += t;
                    }
                }
            }
        }
    }
    non_edge / all
}

pub fn naive_beta(adj: &[Vec<bool>], p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let k = p[0].len();
    let rho = naive_rho(adj, p);
    let mut beta = vec![vec![0.0; k]; k];
    for x in 0..k {
        for y in 0..k {
            let (mut edge, mut all) = (0.0, 0.0);
            for u in 0..n {
                for v in (u + 1)..n {
                    let t = pair_term(p, u, v, x, y);
                    all += t;
                    if adj[u][v] {
                        edge += t;
                    }
                }
            }
            beta[x][y] = if all == 0.0 { 0.0 } else { edge / ((1.0 - rho) * all) };
        }
    }
    beta
}

pub fn max_diff(a: &[Vec<f64>], b: &iedc_core::Matrix) -> f64 {
    let mut worst: f64 = 0.0;
    for (r, row) in a.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            worst = worst.max((x - b.get(r, c)).abs());
        }
    }
    worst
}

pub fn as_rows(m: &iedc_core::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn xlogx(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Partition NMI from the contingency table, arithmetic-mean normalized.
pub fn naive_nmi_partition(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut table = vec![vec![0.0; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1.0;
    }
    let ra: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let rb: Vec<f64> = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let ha: f64 = ra.iter().map(|&c| xlogx(c / n)).sum();
    let hb: f64 = rb.iter().map(|&c| xlogx(c / n)).sum();
    if ha == 0.0 || hb == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let pij = table[i][j] / n;
            if pij > 0.0 {
                mi += pij * (pij / (ra[i] / n * rb[j] / n)).log2();
            }
        }
    }
    mi / (0.5 * (ha + hb))
}

/// Overlapping NMI straight from the per-node binary membership vectors.
pub fn naive_nmi_overlapping(a: &[Vec<usize>], b: &[Vec<usize>], n: usize) -> f64 {
    let indicator = |c: &[usize]| -> Vec<bool> {
        let mut x = vec![false; n];
        for &v in c {
            x[v] = true;
        }
        x
    };
    let a: Vec<Vec<bool>> = a.iter().filter(|c| !c.is_empty()).map(|c| indicator(c)).collect();
    let b: Vec<Vec<bool>> = b.iter().filter(|c| !c.is_empty()).map(|c| indicator(c)).collect();
    let entropy = |x: &[bool]| {
        let p = x.iter().filter(|&&t| t).count() as f64 / n as f64;
        xlogx(p) + xlogx(1.0 - p)
    };
    let side = |xs: &[Vec<bool>], ys: &[Vec<bool>]| -> f64 {
        let mut total = 0.0;
        for x in xs {
            let hx = entropy(x);
            if hx == 0.0 {
                total += if ys.iter().any(|y| y.iter().all(|&t| t)) { 0.0 } else { 1.0 };
                continue;
            }
            let mut best = hx;
            for y in ys {
                let mut counts = [[0.0f64; 2]; 2];
                for v in 0..n {
                    counts[x[v] as usize][y[v] as usize] += 1.0;
                }
                let q = |i: usize, j: usize| counts[i][j] / n as f64;
                if xlogx(q(1, 1)) + xlogx(q(0, 0)) < xlogx(q(0, 1)) + xlogx(q(1, 0)) {
                    continue;
                }
                let joint = xlogx(q(0, 0)) + xlogx(q(0, 1)) + xlogx(q(1, 0)) + xlogx(q(1, 1));
                best = best.min(joint - entropy(y));
            }
            total += (best / hx).clamp(0.0, 1.0);
        }
        total / xs.len() as f64
    };
    1.0 - 0.5 * (side(&a, &b) + side(&b, &a))
}

/// Modularity by accumulating over every ordered node pair.
pub fn naive_modularity(adj: &[Vec<bool>], labels: &[usize]) -> f64 {
    let n = adj.len();
    let two_m: f64 = (0..n).map(|v| degree(adj, v) as f64).sum();
    let mut q = 0.0;
    for u in 0..n {
        for v in 0..n {
            if labels[u] == labels[v] {
                let a = if adj[u][v] { 1.0 } else { 0.0 };
                q += a - degree(adj, u) as f64 * degree(adj, v) as f64 / two_m;
            }
        }
    }
    q / two_m
}

pub fn naive_conductance(adj: &[Vec<bool>], set: &[usize]) -> f64 {
    let n = adj.len();
    let mut inside = vec![false; n];
    for &v in set {
        inside[v] = true;
    }
    let mut cut = 0.0;
    let (mut vol_in, mut vol_out) = (0.0, 0.0);
    for u in 0..n {
        for v in 0..n {
            if adj[u][v] {
                if inside[u] {
                    vol_in += 1.0;
                    if !inside[v] {
                        cut += 1.0;
                    }
                } else {
                    vol_out += 1.0;
                }
            }
        }
    }
    let denom = f64::min(vol_in, vol_out);
    if denom == 0.0 {
        0.0
    } else {
        cut / denom
    }
}
