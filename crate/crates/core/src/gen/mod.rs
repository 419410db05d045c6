//! Synthetic benchmark networks with planted communities.

mod lfr;
mod mmsb;

pub use lfr::{generate_lfr_lite, LfrLiteParams};
pub use mmsb::{generate_mmsb, MmsbParams};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::graph::Graph;
use crate::membership::CommunityCover;
use crate::metrics::modularity;

/// Realized statistics of a generated network, recorded alongside the
/// parameters in generator metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkStats {
    pub n: usize,
    pub m: usize,
    pub communities: usize,
    /// Nodes belonging to two or more ground-truth communities.
    pub overlap_nodes: usize,
    /// Modularity of the dominant partition of the ground truth.
    pub modularity: f64,
    /// Fraction of edges whose endpoints share no community.
    pub mixing: f64,
}

impl NetworkStats {
    pub fn measure(g: &Graph, truth: &CommunityCover) -> Self {
        let memberships = truth.memberships(g.n());
        let overlap_nodes = memberships.iter().filter(|m| m.len() >= 2).count();
        let part = truth.dominant_partition(g);
        let modularity = modularity(g, &part).unwrap_or(0.0);
        let crossing = g
            .edges()
            .filter(|&(u, v)| !memberships[u].iter().any(|c| memberships[v].contains(c)))
            .count();
        NetworkStats {
            n: g.n(),
            m: g.m(),
            communities: truth.len() - truth.empty_count(),
            overlap_nodes,
            modularity,
            mixing: if g.m() == 0 { 0.0 } else { crossing as f64 / g.m() as f64 },
        }
    }
}

/// Dirichlet(`alpha`·1) draw computed in log space so that very small
/// concentrations give (numerically) one-hot vectors instead of 0/0.
pub(crate) fn dirichlet_symmetric<R: Rng + ?Sized>(rng: &mut R, alpha: f64, k: usize) -> Vec<f64> {
    let (shape, boost) = if alpha < 1.0 { (alpha + 1.0, true) } else { (alpha, false) };
    let gamma = Gamma::new(shape, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let mut lg = g.max(f64::MIN_POSITIVE).ln();
            if boost {
                // Gamma(a) = Gamma(a + 1) * U^(1/a)
                let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                lg += u.ln() / alpha;
            }
            lg
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Continuous power law `x^-exponent` on `[lo, hi]`, by inverse transform.
pub(crate) fn power_law<R: Rng + ?Sized>(rng: &mut R, exponent: f64, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    if (exponent - 1.0).abs() < 1e-12 {
        return lo * (hi / lo).powf(u);
    }
    let e = 1.0 - exponent;
    let (a, b) = (lo.powf(e), hi.powf(e));
    (a + u * (b - a)).powf(1.0 / e)
}

/// Mean of the continuous power law `x^-exponent` on `[lo, hi]`.
pub(crate) fn power_law_mean(exponent: f64, lo: f64, hi: f64) -> f64 {
    let moment = |p: f64| {
        // ∫ x^(p - exponent) dx over [lo, hi]
        let e = p + 1.0 - exponent;
        if e.abs() < 1e-12 {
            (hi / lo).ln()
        } else {
            (hi.powf(e) - lo.powf(e)) / e
        }
    };
    moment(1.0) / moment(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirichlet_is_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for alpha in [1e-6, 0.003, 0.5, 1.0, 5.0] {
            for _ in 0..50 {
                let pi = dirichlet_symmetric(&mut rng, alpha, 5);
                assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(pi.iter().all(|x| x.is_finite() && *x >= 0.0));
            }
        }
        let pi = dirichlet_symmetric(&mut rng, 1e-6, 5);
        assert_eq!(pi.iter().filter(|&&x| x > 1e-12).count(), 1);
    }

    #[test]
    fn power_law_mean_matches_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (lo, hi, exp) = (3.0, 30.0, 2.5);
        let samples = 200_000;
        let sum: f64 = (0..samples).map(|_| power_law(&mut rng, exp, lo, hi)).sum();
        let empirical = sum / samples as f64;
        assert!((empirical - power_law_mean(exp, lo, hi)).abs() < 0.05);
    }
}
