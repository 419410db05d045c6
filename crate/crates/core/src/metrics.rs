//! Cover quality metrics: partition NMI, overlapping NMI, best-match F1,
//! modularity and conductance.
//!
//! Empty communities carry no information and are ignored by the
//! cover-comparison metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::membership::CommunityCover;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MetricReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modularity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_conductance: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub per_community_conductance: Vec<f64>,
}

/// Which metrics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Nmi,
    F1,
    Modularity,
    Conductance,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nmi" => Ok(Metric::Nmi),
            "f1" => Ok(Metric::F1),
            "modularity" => Ok(Metric::Modularity),
            "conductance" => Ok(Metric::Conductance),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

pub const ALL_METRICS: [Metric; 4] = [Metric::Nmi, Metric::F1, Metric::Modularity, Metric::Conductance];

/// Computes the requested metrics of `detected`. NMI and F1 need `truth`.
/// NMI is the overlapping variant (it equals 1 for identical covers either
/// way); modularity uses the dominant partition of `detected`.
pub fn evaluate(
    g: &Graph,
    detected: &CommunityCover,
    truth: Option<&CommunityCover>,
    metrics: &[Metric],
) -> Result<MetricReport> {
    let mut report = MetricReport::default();
    for metric in metrics {
        match metric {
            Metric::Nmi => {
                let truth = truth.ok_or_else(|| Error::InvalidConfig("NMI needs a truth cover".into()))?;
                report.nmi = Some(nmi_overlapping(detected, truth, g.n())?);
            }
            Metric::F1 => {
                let truth = truth.ok_or_else(|| Error::InvalidConfig("F1 needs a truth cover".into()))?;
                report.f1 = Some(f1_score(detected, truth)?);
            }
            Metric::Modularity => {
                let part = if detected.is_partition(g.n()) {
                    detected.clone()
                } else {
                    detected.dominant_partition(g)
                };
                report.modularity = Some(modularity(g, &part)?);
            }
            Metric::Conductance => {
                let per: Vec<f64> = detected
                    .communities()
                    .iter()
                    .filter(|c| !c.is_empty())
                    .map(|c| conductance(g, c))
                    .collect::<Result<_>>()?;
                report.avg_conductance = Some(mean(&per));
                report.per_community_conductance = per;
            }
        }
    }
    Ok(report)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn partition_labels(cover: &CommunityCover, n: usize, which: &'static str) -> Result<Vec<usize>> {
    let mut labels = vec![usize::MAX; n];
    for (c, members) in cover.without_empty().communities().iter().enumerate() {
        for &v in members {
            if v >= n {
                return Err(Error::OutOfRange { index: v, n });
            }
            if labels[v] != usize::MAX {
                return Err(Error::NotAPartition(
                    which,
                    format!("node {v} is in several communities; use nmi_overlapping"),
                ));
            }
            labels[v] = c;
        }
    }
    if let Some(v) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::NotAPartition(
            which,
            format!("node {v} is in no community; use nmi_overlapping"),
        ));
    }
    Ok(labels)
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Shannon NMI of two partitions of `0..n`, normalized by the arithmetic
/// mean of the two entropies. Zero when either partition is a single block.
pub fn nmi_partition(a: &CommunityCover, b: &CommunityCover, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput("NMI over zero nodes".into()));
    }
    let la = partition_labels(a, n, "nmi_partition")?;
    let lb = partition_labels(b, n, "nmi_partition")?;
    let ka = la.iter().max().map_or(0, |m| m + 1);
    let kb = lb.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in la.iter().zip(&lb) {
        joint[x * kb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let nf = n as f64;
    let ha = entropy_of_counts(ca.iter().copied(), nf);
    let hb = entropy_of_counts(cb.iter().copied(), nf);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let nxy = joint[x * kb + y];
            if nxy > 0 {
                let pxy = nxy as f64 / nf;
                mi += pxy * (nxy as f64 * nf / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Entropy of the binary membership variable of a set of `size` nodes.
fn binary_entropy(size: usize, n: f64) -> f64 {
    let p = size as f64 / n;
    h(p) + h(1.0 - p)
}

fn intersection_size(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Mean over communities `x` of `H(x | Y) / H(x)`, where `H(x | Y)` is the
/// smallest conditional entropy of `x`'s membership variable given any
/// community of `Y` that passes the matching constraint
/// `h(p11) + h(p00) >= h(p01) + h(p10)`; unmatched communities score 1.
fn normalized_conditional_entropy(xs: &[Vec<NodeId>], ys: &[Vec<NodeId>], n: usize) -> f64 {
    let nf = n as f64;
    let total: f64 = xs
        .iter()
        .map(|x| {
            let hx = binary_entropy(x.len(), nf);
            if hx == 0.0 {
                // x is the whole node set: only an identical community explains it.
                return if ys.iter().any(|y| y.len() == x.len()) { 0.0 } else { 1.0 };
            }
            let mut best = hx;
            for y in ys {
                let n11 = intersection_size(x, y);
                let n10 = x.len() - n11;
                let n01 = y.len() - n11;
                let n00 = n - n11 - n10 - n01;
                let (p11, p10, p01, p00) =
                    (n11 as f64 / nf, n10 as f64 / nf, n01 as f64 / nf, n00 as f64 / nf);
                if h(p11) + h(p00) < h(p01) + h(p10) {
                    continue;
                }
                let joint = h(p11) + h(p10) + h(p01) + h(p00);
                let cond = joint - binary_entropy(y.len(), nf);
                best = best.min(cond);
            }
            (best / hx).clamp(0.0, 1.0)
        })
        .sum();
    total / xs.len() as f64
}

/// Overlapping NMI built from per-node binary membership variables:
/// `1 - (H(A|B)_norm + H(B|A)_norm) / 2`.
pub fn nmi_overlapping(a: &CommunityCover, b: &CommunityCover, n: usize) -> Result<f64> {
    let a = a.without_empty();
    let b = b.without_empty();
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("NMI of an empty cover".into()));
    }
    if n == 0 {
        return Err(Error::EmptyInput("NMI over zero nodes".into()));
    }
    let ab = normalized_conditional_entropy(a.communities(), b.communities(), n);
    let ba = normalized_conditional_entropy(b.communities(), a.communities(), n);
    Ok((1.0 - 0.5 * (ab + ba)).clamp(0.0, 1.0))
}

fn set_f1(a: &[NodeId], b: &[NodeId]) -> f64 {
    let common = intersection_size(a, b);
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / a.len() as f64;
    let recall = common as f64 / b.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn best_match_mean(xs: &[Vec<NodeId>], ys: &[Vec<NodeId>]) -> f64 {
    xs.iter()
        .map(|x| ys.iter().map(|y| set_f1(x, y)).fold(0.0, f64::max))
        .sum::<f64>()
        / xs.len() as f64
}

/// Symmetric average best-match F1.
pub fn f1_score(detected: &CommunityCover, truth: &CommunityCover) -> Result<f64> {
    let d = detected.without_empty();
    let t = truth.without_empty();
    if d.is_empty() || t.is_empty() {
        return Err(Error::EmptyInput("F1 of an empty cover".into()));
    }
    Ok(0.5 * (best_match_mean(d.communities(), t.communities())
        + best_match_mean(t.communities(), d.communities())))
}

/// Newman modularity `Σ_c (e_c/m - (d_c/2m)^2)` of a non-overlapping cover.
/// Nodes outside every community contribute nothing.
pub fn modularity(g: &Graph, p: &CommunityCover) -> Result<f64> {
    let mut label = vec![usize::MAX; g.n()];
    for (c, members) in p.communities().iter().enumerate() {
        for &v in members {
            if label[v] != usize::MAX {
                return Err(Error::NotAPartition(
                    "modularity",
                    format!("node {v} is in several communities"),
                ));
            }
            label[v] = c;
        }
    }
    let m = g.m() as f64;
    if m == 0.0 {
        return Ok(0.0);
    }
    let mut internal = vec![0usize; p.len()];
    let mut volume = vec![0usize; p.len()];
    for v in 0..g.n() {
        let c = label[v];
        if c == usize::MAX {
            continue;
        }
        volume[c] += g.degree(v);
        internal[c] += g.neighbors(v).iter().filter(|&&u| label[u] == c).count();
    }
    Ok(internal
        .iter()
        .zip(&volume)
        .map(|(&e2, &d)| e2 as f64 / (2.0 * m) - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// `cut(c) / min(vol(c), vol(V \ c))`; zero when the denominator is zero.
pub fn conductance(g: &Graph, c: &[NodeId]) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::EmptyInput("conductance of an empty set".into()));
    }
    let mut inside = vec![false; g.n()];
    for &v in c {
        if v >= g.n() {
            return Err(Error::OutOfRange { index: v, n: g.n() });
        }
        inside[v] = true;
    }
    let (mut cut, mut vol) = (0usize, 0usize);
    for v in (0..g.n()).filter(|&v| inside[v]) {
        vol += g.degree(v);
        cut += g.neighbors(v).iter().filter(|&&u| !inside[u]).count();
    }
    let rest = 2 * g.m() - vol;
    let denom = vol.min(rest);
    Ok(if denom == 0 { 0.0 } else { cut as f64 / denom as f64 })
}

/// Mean conductance over the non-empty communities of `cover`.
pub fn avg_conductance(g: &Graph, cover: &CommunityCover) -> Result<f64> {
    let per: Vec<f64> = cover
        .communities()
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| conductance(g, c))
        .collect::<Result<_>>()?;
    if per.is_empty() {
        return Err(Error::EmptyInput("cover has no non-empty community".into()));
    }
    Ok(mean(&per))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(sets: &[&[usize]], n: usize) -> CommunityCover {
        CommunityCover::new(sets.iter().map(|s| s.to_vec()).collect(), n).unwrap()
    }

    fn two_triangles() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).0
    }

    #[test]
    fn partition_nmi_basics() {
        let a = cover(&[&[0, 1], &[2, 3]], 4);
        let b = cover(&[&[0, 2], &[1, 3]], 4);
        assert!((nmi_partition(&a, &a, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(nmi_partition(&a, &b, 4).unwrap().abs() < 1e-12);
        let single = cover(&[&[0, 1, 2, 3]], 4);
        assert_eq!(nmi_partition(&single, &a, 4).unwrap(), 0.0);
    }

    #[test]
    fn partition_nmi_rejects_overlap_and_gaps() {
        let overlap = cover(&[&[0, 1], &[1, 2, 3]], 4);
        let gap = cover(&[&[0, 1], &[2]], 4);
        let ok = cover(&[&[0, 1], &[2, 3]], 4);
        assert!(matches!(nmi_partition(&overlap, &ok, 4), Err(Error::NotAPartition(..))));
        assert!(matches!(nmi_partition(&ok, &gap, 4), Err(Error::NotAPartition(..))));
    }

    #[test]
    fn overlapping_nmi_basics() {
        let a = cover(&[&[0, 1, 2], &[2, 3, 4], &[5, 6]], 8);
        assert!((nmi_overlapping(&a, &a, 8).unwrap() - 1.0).abs() < 1e-12);
        let permuted = a.permute(&[2, 0, 1]);
        assert!((nmi_overlapping(&a, &permuted, 8).unwrap() - 1.0).abs() < 1e-12);
        let independent = (cover(&[&[0, 1], &[2, 3]], 4), cover(&[&[0, 2], &[1, 3]], 4));
        assert!(nmi_overlapping(&independent.0, &independent.1, 4).unwrap().abs() < 1e-12);
        let empty = CommunityCover::new(vec![vec![]], 4).unwrap();
        assert!(nmi_overlapping(&empty, &a, 8).is_err());
    }

    #[test]
    fn nmi_variants_agree_at_the_extremes() {
        let a = cover(&[&[0, 1, 2], &[3, 4, 5], &[6, 7]], 8);
        let same = a.permute(&[1, 2, 0]);
        assert!((nmi_partition(&a, &same, 8).unwrap() - nmi_overlapping(&a, &same, 8).unwrap()).abs() < 1e-9);
        let (x, y) = (cover(&[&[0, 1], &[2, 3]], 4), cover(&[&[0, 2], &[1, 3]], 4));
        assert!((nmi_partition(&x, &y, 4).unwrap() - nmi_overlapping(&x, &y, 4).unwrap()).abs() < 1e-9);
        // In between the two normalizations differ.
        let b = cover(&[&[0, 1, 2, 3], &[4, 5], &[6, 7]], 8);
        let gap = (nmi_partition(&a, &b, 8).unwrap() - nmi_overlapping(&a, &b, 8).unwrap()).abs();
        assert!(gap > 1e-3);
    }

    #[test]
    fn f1_cases() {
        let a = cover(&[&[1, 2, 3]], 5);
        let b = cover(&[&[1, 2, 4]], 5);
        assert!((f1_score(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1_score(&a, &a).unwrap(), 1.0);
        let far = cover(&[&[0, 4]], 5);
        assert_eq!(f1_score(&a, &far).unwrap(), 0.0);
        assert_eq!(f1_score(&a, &b).unwrap(), f1_score(&b, &a).unwrap());
    }

    #[test]
    fn modularity_cases() {
        let g = two_triangles();
        let split = cover(&[&[0, 1, 2], &[3, 4, 5]], 6);
        assert!((modularity(&g, &split).unwrap() - 0.5).abs() < 1e-12);
        let whole = cover(&[&[0, 1, 2, 3, 4, 5]], 6);
        assert!(modularity(&g, &whole).unwrap().abs() < 1e-12);
        let overlap = cover(&[&[0, 1, 2, 3], &[3, 4, 5]], 6);
        assert!(matches!(modularity(&g, &overlap), Err(Error::NotAPartition(..))));
    }

    #[test]
    fn conductance_cases() {
        let (cycle, _) = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!((conductance(&cycle, &[0, 1]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(conductance(&cycle, &[0, 1, 2, 3]).unwrap(), 0.0);
        let g = two_triangles();
        assert_eq!(conductance(&g, &[0, 1, 2]).unwrap(), 0.0);
        assert!(conductance(&g, &[]).is_err());
        let split = cover(&[&[0, 1, 2], &[3, 4, 5]], 6);
        assert_eq!(avg_conductance(&g, &split).unwrap(), 0.0);
        assert_eq!(avg_conductance(&g, &cover(&[&[0, 1, 2, 3, 4, 5]], 6)).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_identity() {
        let g = two_triangles();
        let split = cover(&[&[0, 1, 2], &[3, 4, 5]], 6);
        let r = evaluate(&g, &split, Some(&split), &ALL_METRICS).unwrap();
        assert_eq!(r.nmi, Some(1.0));
        assert_eq!(r.f1, Some(1.0));
        assert!((r.modularity.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(r.avg_conductance, Some(0.0));
        assert!(evaluate(&g, &split, None, &[Metric::Nmi]).is_err());
    }
}
