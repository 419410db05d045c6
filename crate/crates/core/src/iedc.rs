//! Detection by internal and external association.
//!
//! Each iteration mixes two views of a node's neighborhood:
//!
//! * internal association: the mean membership of its neighbors in a
//!   community,
//! * external association: the neighbors' memberships in every community,
//!   weighted by the community-pair interaction matrix `beta`,
//!
//! with per-community importance weights `p1`/`p2`, and renormalizes rows.
//! `beta`, the sparsity factor `rho`, and the weights are estimated from the
//! initial matrix (and optionally refreshed every iteration).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::init::{initialize, InitConfig};
use crate::membership::{
    normalize_rows, threshold_assign_counted, CommunityCover, Matrix, MembershipMatrix,
    ThresholdStrategy,
};

/// Rows per rayon task in the per-node kernels.
const ROW_CHUNK: usize = 256;

/// Symmetric `k × k` community interaction strengths and the sparsity factor
/// they were estimated with.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub beta: Matrix,
    pub rho: f64,
}

impl InteractionMatrix {
    pub fn k(&self) -> usize {
        self.beta.rows()
    }
}

/// Per-community weights on internal (`p1`) and external (`p2`)
/// association; `p1[c] + p2[c] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceWeights {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IedcConfig {
    pub max_iter: usize,
    /// Stop once the largest entry change of the membership matrix drops
    /// below this.
    pub tol: f64,
    /// Re-estimate `beta`, `rho` and the weights after every update.
    pub refresh_model: bool,
    pub threshold: ThresholdStrategy,
}

impl Default for IedcConfig {
    fn default() -> Self {
        IedcConfig {
            max_iter: 50,
            tol: 1e-6,
            refresh_model: false,
            threshold: ThresholdStrategy::AverageOfAll,
        }
    }
}

impl IedcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        self.threshold.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub cover: CommunityCover,
    pub final_p: MembershipMatrix,
    pub iterations_run: usize,
    pub converged: bool,
    pub model: InteractionMatrix,
    pub weights: ImportanceWeights,
    /// Nodes placed by the argmax fallback in the final thresholding.
    pub fallback_nodes: usize,
}

fn check_shape(p: &MembershipMatrix, g: &Graph) -> Result<()> {
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "membership matrix has {} rows but graph has {} nodes",
            p.n(),
            g.n()
        )));
    }
    Ok(())
}

/// Mean neighbor membership per community. Isolated nodes copy their own
/// row.
pub fn internal_association(p: &MembershipMatrix, g: &Graph) -> Result<Matrix> {
    check_shape(p, g)?;
    let k = p.k();
    let mut ia = Matrix::zeros(g.n(), k);
    ia.as_mut_slice()
        .par_chunks_mut(k * ROW_CHUNK)
        .enumerate()
        .for_each(|(chunk, rows)| {
            for (i, out) in rows.chunks_mut(k).enumerate() {
                let v = chunk * ROW_CHUNK + i;
                let nbrs = g.neighbors(v);
                if nbrs.is_empty() {
                    out.copy_from_slice(p.row(v));
                    continue;
                }
                for &u in nbrs {
                    for (o, x) in out.iter_mut().zip(p.row(u)) {
                        *o += x;
                    }
                }
                let inv = 1.0 / nbrs.len() as f64;
                out.iter_mut().for_each(|o| *o *= inv);
            }
        });
    Ok(ia)
}

/// `EA[v][c] = (1/|N(v)|) Σ_{u ∈ N(v)} Σ_{c'} P(u|c') β[c][c']`, zero for
/// isolated nodes.
pub fn external_association(
    p: &MembershipMatrix,
    g: &Graph,
    im: &InteractionMatrix,
) -> Result<Matrix> {
    let ia = internal_association(p, g)?;
    external_from_internal(&ia, g, im)
}

/// The neighbor average commutes with the `beta` product, so the external
/// association is the internal association times `beta`.
fn external_from_internal(ia: &Matrix, g: &Graph, im: &InteractionMatrix) -> Result<Matrix> {
    let k = ia.cols();
    if im.k() != k {
        return Err(Error::DimensionMismatch(format!(
            "interaction matrix is {}x{} but memberships have k = {k}",
            im.k(),
            im.k()
        )));
    }
    if !im.beta.is_finite() {
        return Err(Error::Numerical("interaction matrix has non-finite entries".into()));
    }
    let beta = &im.beta;
    let mut ea = Matrix::zeros(ia.rows(), k);
    ea.as_mut_slice()
        .par_chunks_mut(k * ROW_CHUNK)
        .enumerate()
        .for_each(|(chunk, rows)| {
            for (i, out) in rows.chunks_mut(k).enumerate() {
                let v = chunk * ROW_CHUNK + i;
                if g.degree(v) == 0 {
                    continue;
                }
                let nbr_mean = ia.row(v);
                for (c, o) in out.iter_mut().enumerate() {
                    *o = beta
                        .row(c)
                        .iter()
                        .zip(nbr_mean)
                        .map(|(b, x)| b * x)
                        .sum();
                }
            }
        });
    Ok(ea)
}

/// Pairwise membership-product mass for every community pair `(x, y)`:
/// `max(P(i|x) P(j|y), P(i|y) P(j|x))` summed over edges and over all
/// unordered distinct node pairs. Both matrices are symmetric.
struct PairMass {
    edges: Matrix,
    all: Matrix,
}

fn pair_mass(p: &MembershipMatrix, g: &Graph) -> PairMass {
    let k = p.k();
    let n = p.n();
    let edge_list: Vec<(usize, usize)> = g.edges().collect();

    let upper: Vec<(usize, usize)> = (0..k).flat_map(|x| (x..k).map(move |y| (x, y))).collect();

    let edge_sums: Vec<f64> = upper
        .par_iter()
        .map(|&(x, y)| {
            edge_list
                .iter()
                .map(|&(i, j)| {
                    let (ri, rj) = (p.row(i), p.row(j));
                    (ri[x] * rj[y]).max(ri[y] * rj[x])
                })
                .sum()
        })
        .collect();

    let all_sums: Vec<f64> = upper
        .par_iter()
        .map(|&(x, y)| {
            if x == y {
                // max(a_i a_j, a_i a_j) factorizes over pairs.
                let (s, sq) = (0..n).fold((0.0, 0.0), |(s, sq), v| {
                    let a = p.get(v, x);
                    (s + a, sq + a * a)
                });
                0.5 * (s * s - sq)
            } else {
                all_pairs_max_product(p, x, y)
            }
        })
        .collect();

    let mut edges = Matrix::zeros(k, k);
    let mut all = Matrix::zeros(k, k);
    for (idx, &(x, y)) in upper.iter().enumerate() {
        for (mat, val) in [(&mut edges, edge_sums[idx]), (&mut all, all_sums[idx])] {
            mat.set(x, y, val);
            mat.set(y, x, val);
        }
    }
    PairMass { edges, all }
}

/// `Σ_{i<j} max(a_i b_j, a_j b_i)` with `a = P(·|x)`, `b = P(·|y)`, in
/// `O(n log n)`. After sorting nodes by the ratio `a/b`, the larger product
/// of any pair is `b_i a_j` for `i` ordered before `j`.
fn all_pairs_max_product(p: &MembershipMatrix, x: usize, y: usize) -> f64 {
    let mut order: Vec<(f64, usize)> = (0..p.n())
        .map(|v| (p.get(v, x).atan2(p.get(v, y)), v))
        .collect();
    order.sort_unstable_by(|l, r| l.0.total_cmp(&r.0).then(l.1.cmp(&r.1)));
    let mut prefix_b = 0.0;
    let mut total = 0.0;
    for &(_, v) in &order {
        total += p.get(v, x) * prefix_b;
        prefix_b += p.get(v, y);
    }
    total
}

fn rho_from_mass(mass: &PairMass) -> Result<f64> {
    let total_all: f64 = mass.all.as_slice().iter().sum();
    let total_edge: f64 = mass.edges.as_slice().iter().sum();
    if total_all.is_nan() || total_all <= 0.0 {
        return Err(Error::DegenerateModel(
            "membership mass over node pairs is zero".into(),
        ));
    }
    Ok(((total_all - total_edge) / total_all).clamp(0.0, 1.0))
}

/// Fraction of pairwise membership mass carried by non-adjacent pairs.
pub fn sparsity_rho(p: &MembershipMatrix, g: &Graph) -> Result<f64> {
    check_shape(p, g)?;
    if g.n() < 2 {
        return Err(Error::InvalidConfig("sparsity factor needs at least two nodes".into()));
    }
    rho_from_mass(&pair_mass(p, g))
}

/// Maximum-likelihood interaction matrix. The all-pairs denominator is
/// split into the edge sum plus the non-edge complement, the complement being
/// taken from the full pair sum rather than enumerating non-edges.
pub fn interaction_matrix(p: &MembershipMatrix, g: &Graph) -> Result<InteractionMatrix> {
    check_shape(p, g)?;
    if g.n() < 2 {
        return Err(Error::InvalidConfig("interaction matrix needs at least two nodes".into()));
    }
    if g.m() == 0 {
        return Err(Error::DegenerateModel(
            "graph has no edges, sparsity factor is 1".into(),
        ));
    }
    let mass = pair_mass(p, g);
    let rho = rho_from_mass(&mass)?;
    if rho >= 1.0 {
        return Err(Error::DegenerateModel(
            "no membership mass on edges, sparsity factor is 1".into(),
        ));
    }
    let k = p.k();
    let mut beta = Matrix::zeros(k, k);
    let scale = 1.0 - rho;
    for x in 0..k {
        for y in x..k {
            let edge = mass.edges.get(x, y);
            let non_edge = (mass.all.get(x, y) - edge).max(0.0);
            let denom = scale * (edge + non_edge);
            let b = if denom > 0.0 { edge / denom } else { 0.0 };
            beta.set(x, y, b);
            beta.set(y, x, b);
        }
    }
    Ok(InteractionMatrix { beta, rho })
}

/// Per-community weights from the ratio of internal to boundary edges:
/// `p1 = internal / (internal + boundary)`, `p2 = 1 - p1`.
pub fn importance_weights(cover: &CommunityCover, g: &Graph) -> ImportanceWeights {
    let k = cover.len();
    let mut p1 = Vec::with_capacity(k);
    let mut p2 = Vec::with_capacity(k);
    let mut inside = vec![false; g.n()];
    for (c, members) in cover.communities().iter().enumerate() {
        if members.is_empty() {
            log::warn!("community {c} is empty; using equal importance weights");
            p1.push(0.5);
            p2.push(0.5);
            continue;
        }
        for &v in members {
            inside[v] = true;
        }
        let (mut internal_half, mut boundary) = (0usize, 0usize);
        for &v in members {
            for &u in g.neighbors(v) {
                if inside[u] {
                    internal_half += 1;
                } else {
                    boundary += 1;
                }
            }
        }
        for &v in members {
            inside[v] = false;
        }
        let internal = internal_half / 2;
        let w1 = match (internal, boundary) {
            (_, 0) => 1.0,
            (0, _) => 0.0,
            (i, b) => i as f64 / (i + b) as f64,
        };
        p1.push(w1);
        p2.push(1.0 - w1);
    }
    ImportanceWeights { p1, p2 }
}

/// `p1[c] · IA + p2[c] · EA`, row-normalized.
pub fn update_propagation(
    ia: &Matrix,
    ea: &Matrix,
    w: &ImportanceWeights,
) -> Result<MembershipMatrix> {
    let k = ia.cols();
    if (ea.rows(), ea.cols()) != (ia.rows(), k) || w.p1.len() != k || w.p2.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "IA {}x{}, EA {}x{}, {} weights",
            ia.rows(),
            k,
            ea.rows(),
            ea.cols(),
            w.p1.len()
        )));
    }
    let mut raw = Matrix::zeros(ia.rows(), k);
    raw.as_mut_slice()
        .par_chunks_mut(k * ROW_CHUNK)
        .zip(ia.as_slice().par_chunks(k * ROW_CHUNK))
        .zip(ea.as_slice().par_chunks(k * ROW_CHUNK))
        .for_each(|((out, ia), ea)| {
            for (i, o) in out.iter_mut().enumerate() {
                let c = i % k;
                *o = w.p1[c] * ia[i] + w.p2[c] * ea[i];
            }
        });
    normalize_rows(raw)
}

struct Model {
    interaction: InteractionMatrix,
    weights: ImportanceWeights,
}

fn estimate_model(p: &MembershipMatrix, g: &Graph, cfg: &IedcConfig) -> Result<Model> {
    let interaction = interaction_matrix(p, g)?;
    let (cover, _) = threshold_assign_counted(p, g, cfg.threshold)?;
    let weights = importance_weights(&cover, g);
    Ok(Model {
        interaction,
        weights,
    })
}

/// Runs the iterative update from `p0` and thresholds the final matrix.
pub fn run_iedc(g: &Graph, p0: MembershipMatrix, cfg: &IedcConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    check_shape(&p0, g)?;
    if !p0.is_row_stochastic(1e-6) {
        return Err(Error::Domain("initial membership rows must sum to 1".into()));
    }

    let mut model = estimate_model(&p0, g, cfg)?;
    let mut p = p0;
    let mut iterations_run = 0;
    let mut converged = false;

    while iterations_run < cfg.max_iter {
        iterations_run += 1;
        let ia = internal_association(&p, g)?;
        let ea = external_from_internal(&ia, g, &model.interaction)?;
        let next = update_propagation(&ia, &ea, &model.weights)?;
        if !next.matrix().is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite membership after iteration {iterations_run}"
            )));
        }
        let delta = next.matrix().max_abs_diff(p.matrix());
        log::trace!("iteration {iterations_run}: max change {delta:e}");
        p = next;
        if delta < cfg.tol {
            converged = true;
            break;
        }
        if cfg.refresh_model {
            model = estimate_model(&p, g, cfg)?;
        }
    }

    let (cover, fallback_nodes) = threshold_assign_counted(&p, g, cfg.threshold)?;
    Ok(DetectionResult {
        cover,
        final_p: p,
        iterations_run,
        converged,
        model: model.interaction,
        weights: model.weights,
        fallback_nodes,
    })
}

/// Initialization followed by [`run_iedc`].
pub fn detect(g: &Graph, init: &InitConfig, cfg: &IedcConfig) -> Result<DetectionResult> {
    let p0 = initialize(g, init)?;
    run_iedc(g, p0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disjoint_triangles() -> Graph {
        Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).0
    }

    fn triangle_indicator() -> MembershipMatrix {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|v| if v < 3 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
            .collect();
        MembershipMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn internal_association_on_path() {
        let (g, _) = Graph::from_edges(3, [(0, 1), (1, 2)]);
        let p = MembershipMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]])
            .unwrap();
        let ia = internal_association(&p, &g).unwrap();
        assert_eq!(ia.row(1), &[0.5, 0.5]);
        assert_eq!(ia.row(0), &[0.5, 0.5]);
        assert_eq!(ia.row(2), &[0.5, 0.5]);
    }

    #[test]
    fn internal_association_saturates_and_copies_isolated() {
        let (g, _) = Graph::from_edges(4, [(0, 1), (0, 2)]);
        let p = MembershipMatrix::from_rows(&[
            vec![0.5, 0.5],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.3, 0.7],
        ])
        .unwrap();
        let ia = internal_association(&p, &g).unwrap();
        assert_eq!(ia.row(0), &[1.0, 0.0]);
        assert_eq!(ia.row(3), &[0.3, 0.7]);
        let ea = external_association(
            &p,
            &g,
            &InteractionMatrix {
                beta: Matrix::filled(2, 2, 1.0),
                rho: 0.0,
            },
        )
        .unwrap();
        assert_eq!(ea.row(3), &[0.0, 0.0]);
    }

    #[test]
    fn rho_extremes() {
        let complete = Graph::from_edges(4, (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v)))).0;
        let p = MembershipMatrix::from_rows(&[
            vec![0.2, 0.8],
            vec![0.6, 0.4],
            vec![0.5, 0.5],
            vec![0.9, 0.1],
        ])
        .unwrap();
        assert!(sparsity_rho(&p, &complete).unwrap().abs() < 1e-12);
        let edgeless = Graph::from_edges(4, []).0;
        assert_eq!(sparsity_rho(&p, &edgeless).unwrap(), 1.0);
        assert!(matches!(
            interaction_matrix(&p, &edgeless),
            Err(Error::DegenerateModel(_))
        ));
        let single = Graph::from_edges(1, []).0;
        assert!(sparsity_rho(&MembershipMatrix::uniform(1, 1), &single).is_err());
    }

    #[test]
    fn beta_on_triangles_and_single_edge() {
        let im = interaction_matrix(&triangle_indicator(), &disjoint_triangles()).unwrap();
        assert_eq!(im.beta.get(0, 1), 0.0);
        assert_eq!(im.beta.get(1, 0), 0.0);
        assert!(im.beta.get(0, 0) > 0.0);

        let (edge, _) = Graph::from_edges(2, [(0, 1)]);
        let im = interaction_matrix(&MembershipMatrix::uniform(2, 1), &edge).unwrap();
        assert_eq!(im.rho, 0.0);
        assert_eq!(im.beta.get(0, 0), 1.0);
    }

    #[test]
    fn weights_by_hand() {
        // Community {0,1,2} with internal edges 01, 12, 02 and boundary 2-3.
        let (g, _) = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]);
        let cover = CommunityCover::new(vec![vec![0, 1, 2], vec![3], vec![]], 4).unwrap();
        let w = importance_weights(&cover, &g);
        assert_eq!((w.p1[0], w.p2[0]), (0.75, 0.25));
        assert_eq!((w.p1[1], w.p2[1]), (0.0, 1.0));
        assert_eq!((w.p1[2], w.p2[2]), (0.5, 0.5));

        let cover = CommunityCover::new(vec![(0..6).collect()], 6).unwrap();
        let w = importance_weights(&cover, &disjoint_triangles());
        assert_eq!((w.p1[0], w.p2[0]), (1.0, 0.0));
    }

    #[test]
    fn degenerate_weights_select_one_view() {
        let ia = Matrix::from_rows(&[vec![0.2, 0.6], vec![0.5, 0.5]]).unwrap();
        let ea = Matrix::from_rows(&[vec![3.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let only_ia = ImportanceWeights {
            p1: vec![1.0, 1.0],
            p2: vec![0.0, 0.0],
        };
        let p = update_propagation(&ia, &ea, &only_ia).unwrap();
        assert_eq!(p, normalize_rows(ia.clone()).unwrap());
        let only_ea = ImportanceWeights {
            p1: vec![0.0, 0.0],
            p2: vec![1.0, 1.0],
        };
        let p = update_propagation(&ia, &ea, &only_ea).unwrap();
        assert_eq!(p, normalize_rows(ea.clone()).unwrap());
        assert!(update_propagation(&ia, &Matrix::zeros(3, 2), &only_ea).is_err());
    }

    #[test]
    fn indicator_is_a_fixed_point() {
        let g = disjoint_triangles();
        let p0 = triangle_indicator();
        let result = run_iedc(&g, p0.clone(), &IedcConfig::default()).unwrap();
        assert_eq!(result.final_p, p0);
        assert!(result.converged);
        assert_eq!(result.iterations_run, 1);
        assert_eq!(result.cover.communities(), &[vec![0, 1, 2], vec![3, 4, 5]]);
        assert_eq!(result.weights.p1, vec![1.0, 1.0]);
    }

    #[test]
    fn single_community() {
        let g = disjoint_triangles();
        let result = run_iedc(&g, MembershipMatrix::uniform(6, 1), &IedcConfig::default()).unwrap();
        assert_eq!(result.iterations_run, 1);
        assert_eq!(result.cover.communities(), &[vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = disjoint_triangles();
        let cfg = IedcConfig {
            max_iter: 0,
            ..IedcConfig::default()
        };
        assert!(run_iedc(&g, triangle_indicator(), &cfg).is_err());
        let half = MembershipMatrix::new(Matrix::filled(6, 2, 0.25)).unwrap();
        assert!(run_iedc(&g, half, &IedcConfig::default()).is_err());
    }
}
