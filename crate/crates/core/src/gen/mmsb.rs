use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dirichlet_symmetric;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::membership::{argmax, CommunityCover, Matrix, MembershipMatrix};

/// Mixed-membership stochastic block model parameters. The block matrix has
/// `beta_in` on the diagonal and `beta_out` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmsbParams {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub beta_in: f64,
    pub beta_out: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MmsbParams {
    /// 100 nodes, 5 communities, `alpha = 0.003`: about 1000 edges and
    /// dominant-partition modularity around 0.7.
    pub fn sparse_regime(seed: u64) -> Self {
        MmsbParams {
            n: 100,
            k: 5,
            alpha: 0.003,
            beta_in: 1.0,
            beta_out: 0.012,
            seed,
        }
    }

    /// 100 nodes, 5 communities, `alpha = 0.03`: about 1250 edges and
    /// modularity around 0.37.
    pub fn dense_regime(seed: u64) -> Self {
        MmsbParams {
            n: 100,
            k: 5,
            alpha: 0.03,
            beta_in: 0.85,
            beta_out: 0.10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig("MMSB needs at least two nodes".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig("MMSB needs k >= 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta_in > 0.0 && self.beta_in <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta_in must lie in (0, 1], got {}",
                self.beta_in
            )));
        }
        if !(self.beta_out >= 0.0 && self.beta_out < self.beta_in) {
            return Err(Error::InvalidConfig(format!(
                "beta_out must lie in [0, beta_in), got {}",
                self.beta_out
            )));
        }
        Ok(())
    }
}

fn sample_index<R: Rng>(rng: &mut R, cdf: &[f64]) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Draws an MMSB network. Returns the graph, the ground-truth cover (node
/// `v` joins every community with `pi_v[c] >= 1/k`, or its dominant one),
/// and the membership vectors `pi` as soft truth.
///
/// Each unordered pair `(p, q)` draws a sender community from `pi_p` and a
/// receiver community from `pi_q`; the edge appears with probability
/// `beta_in` when they match and `beta_out` otherwise. Row `p` uses its own
/// RNG stream, so the output does not depend on the thread count.
pub fn generate_mmsb(params: &MmsbParams) -> Result<(Graph, CommunityCover, MembershipMatrix)> {
    params.validate()?;
    let MmsbParams { n, k, alpha, beta_in, beta_out, seed } = *params;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pis: Vec<Vec<f64>> = (0..n).map(|_| dirichlet_symmetric(&mut rng, alpha, k)).collect();
    let cdfs: Vec<Vec<f64>> = pis
        .iter()
        .map(|pi| {
            pi.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let rows: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64 + 1);
            let mut out = Vec::new();
            for q in (p + 1)..n {
                let sender = sample_index(&mut rng, &cdfs[p]);
                let receiver = sample_index(&mut rng, &cdfs[q]);
                let prob = if sender == receiver { beta_in } else { beta_out };
                if rng.random::<f64>() < prob {
                    out.push((p, q));
                }
            }
            out
        })
        .collect();
    let (graph, _) = Graph::from_edges(n, rows.into_iter().flatten());

    let share = 1.0 / k as f64;
    let mut communities = vec![Vec::new(); k];
    for (v, pi) in pis.iter().enumerate() {
        let mut any = false;
        for (c, &x) in pi.iter().enumerate() {
            if x >= share {
                communities[c].push(v);
                any = true;
            }
        }
        if !any {
            communities[argmax(pi)].push(v);
        }
    }
    let truth = CommunityCover::new(communities, n)?;
    let soft = MembershipMatrix::new(Matrix::from_vec(n, k, pis.concat())?)?;
    Ok((graph, truth, soft))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::NetworkStats;

    #[test]
    fn tiny_alpha_gives_partition() {
        let params = MmsbParams {
            n: 60,
            k: 4,
            alpha: 1e-6,
            beta_in: 0.5,
            beta_out: 0.0,
            seed: 3,
        };
        let (g, truth, soft) = generate_mmsb(&params).unwrap();
        assert!(truth.is_partition(g.n()));
        assert!(soft.is_row_stochastic(1e-12));
        // no cross-community edges when beta_out = 0
        let memberships = truth.memberships(g.n());
        assert!(g.edges().all(|(u, v)| memberships[u] == memberships[v]));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_mmsb(&MmsbParams::sparse_regime(5)).unwrap();
        let b = generate_mmsb(&MmsbParams::sparse_regime(5)).unwrap();
        let c = generate_mmsb(&MmsbParams::sparse_regime(6)).unwrap();
        let edges = |g: &Graph| g.edges().collect::<Vec<_>>();
        assert_eq!(edges(&a.0), edges(&b.0));
        assert_eq!(a.1, b.1);
        assert_ne!(edges(&a.0), edges(&c.0));
    }

    #[test]
    fn regimes_differ_in_modularity() {
        let sparse = generate_mmsb(&MmsbParams::sparse_regime(1)).unwrap();
        let dense = generate_mmsb(&MmsbParams::dense_regime(1)).unwrap();
        let s = NetworkStats::measure(&sparse.0, &sparse.1);
        let d = NetworkStats::measure(&dense.0, &dense.1);
        assert!(s.modularity > d.modularity, "{s:?} vs {d:?}");
    }

    #[test]
    fn invalid_params() {
        let mut p = MmsbParams::sparse_regime(0);
        p.beta_in = 0.0;
        assert!(generate_mmsb(&p).is_err());
        let mut p = MmsbParams::sparse_regime(0);
        p.beta_out = p.beta_in;
        assert!(generate_mmsb(&p).is_err());
        let mut p = MmsbParams::sparse_regime(0);
        p.k = 1;
        assert!(generate_mmsb(&p).is_err());
    }
}
