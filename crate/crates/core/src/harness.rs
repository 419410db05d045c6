//! Experiment orchestration: overlap-anchored subnetwork sampling,
//! conductance sweeps over `k`, and seeded benchmark suites.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gen::{generate_lfr_lite, generate_mmsb, LfrLiteParams, MmsbParams};
use crate::graph::{load_cover, load_edge_list, Graph, NodeId};
use crate::iedc::{detect, IedcConfig};
use crate::init::{InitConfig, InitMethod};
use crate::membership::CommunityCover;
use crate::metrics::{avg_conductance, evaluate, f1_score, nmi_overlapping, Metric, MetricReport};

/// A sampled subnetwork and where it came from.
#[derive(Debug, Clone)]
pub struct Subnetwork {
    pub graph: Graph,
    pub cover: CommunityCover,
    /// Anchor node id in the source graph.
    pub anchor: NodeId,
    /// Source-graph id of each subnetwork node, ascending.
    pub nodes: Vec<NodeId>,
}

/// Picks a node with at least two memberships uniformly at random and
/// returns the subgraph induced by every node sharing a community with it.
/// The cover is restricted to that node set with empty communities dropped.
pub fn sample_overlap_subnetwork(
    g: &Graph,
    truth: &CommunityCover,
    seed: u64,
) -> Result<Subnetwork> {
    let memberships = truth.memberships(g.n());
    let candidates: Vec<NodeId> = (0..g.n()).filter(|&v| memberships[v].len() >= 2).collect();
    if candidates.is_empty() {
        return Err(Error::Domain(
            "no node belongs to two or more communities".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor = candidates[rng.random_range(0..candidates.len())];

    let mut nodes: Vec<NodeId> = memberships[anchor]
        .iter()
        .flat_map(|&c| truth.communities()[c].iter().copied())
        .collect();
    nodes.sort_unstable();
    nodes.dedup();

    let (graph, new_to_old) = g.induced_subgraph(&nodes)?;
    let mut old_to_new = vec![usize::MAX; g.n()];
    for (new, &old) in new_to_old.iter().enumerate() {
        old_to_new[old] = new;
    }
    let restricted: Vec<Vec<NodeId>> = truth
        .communities()
        .iter()
        .map(|c| {
            c.iter()
                .filter_map(|&v| Some(old_to_new[v]).filter(|&x| x != usize::MAX))
                .collect::<Vec<_>>()
        })
        .filter(|c| !c.is_empty())
        .collect();
    let cover = CommunityCover::new(restricted, graph.n())?;
    Ok(Subnetwork {
        graph,
        cover,
        anchor,
        nodes: new_to_old,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub avg_conductance: Option<f64>,
    pub nmi: Option<f64>,
    pub f1: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// The `k` with the smallest average conductance (first on ties).
    pub fn argmin_conductance(&self) -> Option<usize> {
        self.rows
            .iter()
            .filter_map(|r| r.avg_conductance.map(|c| (r.k, c)))
            .fold(None, |best: Option<(usize, f64)>, (k, c)| match best {
                Some((_, b)) if b <= c => best,
                _ => Some((k, c)),
            })
            .map(|(k, _)| k)
    }

    /// Plot-ready CSV; timing is included only on request so repeated runs
    /// are byte-identical.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("k,avg_conductance,nmi,f1,iterations");
        if timing {
            out.push_str(",wall_time_ms");
        }
        out.push_str(",error\n");
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.k,
                opt(r.avg_conductance),
                opt(r.nmi),
                opt(r.f1),
                r.iterations.map(|i| i.to_string()).unwrap_or_default()
            );
            if timing {
                let _ = write!(out, ",{:.3}", r.wall_time_ms);
            }
            let _ = writeln!(out, ",{}", csv_field(r.error.as_deref().unwrap_or("")));
        }
        out
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Runs detection at every `k` and records average conductance (plus NMI
/// and F1 against `truth` when given). Failing `k` values are recorded in
/// their row instead of aborting the sweep.
pub fn conductance_sweep(
    g: &Graph,
    k_range: &[usize],
    cfg: &IedcConfig,
    init: &InitConfig,
    truth: Option<&CommunityCover>,
) -> Result<SweepResult> {
    if k_range.is_empty() {
        return Err(Error::InvalidConfig("empty k range".into()));
    }
    cfg.validate()?;
    let rows = k_range
        .iter()
        .map(|&k| {
            let started = Instant::now();
            let outcome = (|| -> Result<(f64, Option<f64>, Option<f64>, usize)> {
                let init = InitConfig { k, ..*init };
                let result = detect(g, &init, cfg)?;
                let cond = avg_conductance(g, &result.cover)?;
                let (nmi, f1) = match truth {
                    Some(t) => (
                        Some(nmi_overlapping(&result.cover, t, g.n())?),
                        Some(f1_score(&result.cover, t)?),
                    ),
                    None => (None, None),
                };
                Ok((cond, nmi, f1, result.iterations_run))
            })();
            let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Ok((cond, nmi, f1, iters)) => SweepRow {
                    k,
                    avg_conductance: Some(cond),
                    nmi,
                    f1,
                    iterations: Some(iters),
                    wall_time_ms,
                    error: None,
                },
                Err(e) => {
                    log::warn!("sweep k = {k} failed: {e}");
                    SweepRow {
                        k,
                        avg_conductance: None,
                        nmi: None,
                        f1: None,
                        iterations: None,
                        wall_time_ms,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    Ok(SweepResult { rows })
}

/// Benchmark network generator kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Mmsb,
    LfrLite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub graph: PathBuf,
    pub truth: PathBuf,
}

/// One suite entry: a network source, detector settings, seeds and metrics.
/// Exactly one of `model` (with `params`) or `fixture` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub name: String,
    #[serde(default)]
    pub model: Option<ModelKind>,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
    #[serde(default)]
    pub fixture: Option<Fixture>,
    /// Community count for detection; defaults to the ground-truth count.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub init: InitMethod,
    #[serde(default)]
    pub detect: IedcConfig,
    pub seeds: Vec<u64>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    /// Score each seed on overlap-anchored subnetworks instead of the
    /// whole network, averaging over `subnetworks` samples.
    #[serde(default)]
    pub sample: bool,
    #[serde(default = "default_subnetworks")]
    pub subnetworks: usize,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::Nmi, Metric::F1]
}

fn default_subnetworks() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSuite {
    pub entries: Vec<BenchEntry>,
}

impl BenchSuite {
    /// Parses a suite from JSON, or TOML when the text is not JSON.
    pub fn parse(text: &str) -> Result<Self> {
        let suite: BenchSuite = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(json_err) => toml::from_str(text).map_err(|toml_err| {
                Error::Suite(format!("not valid JSON ({json_err}) or TOML ({toml_err})"))
            })?,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut suite = Self::parse(&std::fs::read_to_string(path)?)?;
        // Fixture paths are relative to the suite file.
        if let Some(dir) = path.parent() {
            for entry in &mut suite.entries {
                if let Some(f) = entry.fixture.as_mut() {
                    f.graph = dir.join(&f.graph);
                    f.truth = dir.join(&f.truth);
                }
            }
        }
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::Suite("suite has no entries".into()));
        }
        for e in &self.entries {
            if e.seeds.is_empty() {
                return Err(Error::Suite(format!("entry `{}` has no seeds", e.name)));
            }
            match (&e.model, &e.fixture) {
                (Some(_), None) if e.params.is_some() => {}
                (Some(_), None) => {
                    return Err(Error::Suite(format!("entry `{}` has a model but no params", e.name)))
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(Error::Suite(format!(
                        "entry `{}` needs exactly one of `model` or `fixture`",
                        e.name
                    )))
                }
            }
            if e.sample && e.subnetworks == 0 {
                return Err(Error::Suite(format!("entry `{}` samples zero subnetworks", e.name)));
            }
            e.detect.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub entry: String,
    pub seed: u64,
    pub k: Option<usize>,
    pub nmi: Option<f64>,
    pub f1: Option<f64>,
    pub modularity: Option<f64>,
    pub avg_conductance: Option<f64>,
    pub iterations: Option<f64>,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stddev = if count > 1 {
            (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary { count, mean, stddev })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub entry: String,
    pub runs: usize,
    pub failures: usize,
    pub metrics: BTreeMap<String, Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub suite: BenchSuite,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

const METRIC_COLUMNS: [&str; 5] = ["nmi", "f1", "modularity", "avg_conductance", "iterations"];

impl BenchRow {
    fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "nmi" => self.nmi,
            "f1" => self.f1,
            "modularity" => self.modularity,
            "avg_conductance" => self.avg_conductance,
            "iterations" => self.iterations,
            _ => None,
        }
    }
}

impl BenchReport {
    /// One row per run.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("entry,seed,k,nmi,f1,modularity,avg_conductance,iterations");
        if timing {
            out.push_str(",wall_time_ms");
        }
        out.push_str(",error\n");
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(&r.entry),
                r.seed,
                r.k.map(|k| k.to_string()).unwrap_or_default(),
                opt(r.nmi),
                opt(r.f1),
                opt(r.modularity),
                opt(r.avg_conductance),
                opt(r.iterations)
            );
            if timing {
                let _ = write!(out, ",{:.3}", r.wall_time_ms);
            }
            let _ = writeln!(out, ",{}", csv_field(r.error.as_deref().unwrap_or("")));
        }
        out
    }

    /// Nested report with the suite definition, rows and aggregates.
    pub fn to_json(&self, timing: bool) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if !timing {
            if let Some(rows) = value.get_mut("rows").and_then(|r| r.as_array_mut()) {
                for row in rows {
                    if let Some(obj) = row.as_object_mut() {
                        obj.remove("wall_time_ms");
                    }
                }
            }
        }
        value
    }
}

struct Network {
    graph: Graph,
    truth: CommunityCover,
}

fn load_fixture(f: &Fixture) -> Result<Network> {
    let (graph, _) = load_edge_list(BufReader::new(File::open(&f.graph)?))?;
    let truth = load_cover(BufReader::new(File::open(&f.truth)?), &graph)?;
    Ok(Network { graph, truth })
}

fn build_network(entry: &BenchEntry, seed: u64, fixture: Option<&Result<Network>>) -> Result<Network> {
    match (entry.model, fixture) {
        (_, Some(Ok(net))) => Ok(Network {
            graph: net.graph.clone(),
            truth: net.truth.clone(),
        }),
        (_, Some(Err(e))) => Err(Error::Suite(format!("fixture: {e}"))),
        (Some(kind), None) => {
            let mut params = entry.params.clone().unwrap_or(serde_json::Value::Null);
            if let Some(obj) = params.as_object_mut() {
                obj.insert("seed".into(), seed.into());
            }
            let bad = |e: serde_json::Error| Error::Suite(format!("entry `{}` params: {e}", entry.name));
            match kind {
                ModelKind::Mmsb => {
                    let p: MmsbParams = serde_json::from_value(params).map_err(bad)?;
                    let (graph, truth, _) = generate_mmsb(&p)?;
                    Ok(Network { graph, truth })
                }
                ModelKind::LfrLite => {
                    let p: LfrLiteParams = serde_json::from_value(params).map_err(bad)?;
                    let (graph, truth) = generate_lfr_lite(&p)?;
                    Ok(Network { graph, truth })
                }
            }
        }
        (None, None) => Err(Error::Suite(format!("entry `{}` has no network source", entry.name))),
    }
}

/// Detects on `g` and scores against `truth`. Returns the metric report,
/// the `k` used and the iteration count.
fn score_once(
    g: &Graph,
    truth: &CommunityCover,
    entry: &BenchEntry,
    seed: u64,
) -> Result<(MetricReport, usize, usize)> {
    let k = entry.k.unwrap_or_else(|| truth.len() - truth.empty_count());
    let init = InitConfig::new(entry.init, k, seed);
    let result = detect(g, &init, &entry.detect)?;
    let report = evaluate(g, &result.cover, Some(truth), &entry.metrics)?;
    Ok((report, k, result.iterations_run))
}

fn run_job(entry: &BenchEntry, seed: u64, fixture: Option<&Result<Network>>) -> BenchRow {
    let started = Instant::now();
    let outcome = (|| -> Result<(MetricReport, usize, f64)> {
        let net = build_network(entry, seed, fixture)?;
        if !entry.sample {
            let (report, k, iters) = score_once(&net.graph, &net.truth, entry, seed)?;
            return Ok((report, k, iters as f64));
        }
        // Average over sampled subnetworks; k then follows each sample's truth.
        let mut sampler = ChaCha8Rng::seed_from_u64(seed);
        let mut reports = Vec::with_capacity(entry.subnetworks);
        let mut iters = 0.0;
        for _ in 0..entry.subnetworks {
            let sub = sample_overlap_subnetwork(&net.graph, &net.truth, sampler.random())?;
            let (report, _, it) = score_once(&sub.graph, &sub.cover, entry, seed)?;
            reports.push(report);
            iters += it as f64;
        }
        let avg = |f: fn(&MetricReport) -> Option<f64>| -> Option<f64> {
            let vals: Vec<f64> = reports.iter().filter_map(f).collect();
            Summary::of(&vals).map(|s| s.mean)
        };
        let merged = MetricReport {
            nmi: avg(|r| r.nmi),
            f1: avg(|r| r.f1),
            modularity: avg(|r| r.modularity),
            avg_conductance: avg(|r| r.avg_conductance),
            per_community_conductance: Vec::new(),
        };
        Ok((merged, 0, iters / entry.subnetworks as f64))
    })();
    let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((r, k, iters)) => BenchRow {
            entry: entry.name.clone(),
            seed,
            k: (k > 0).then_some(k),
            nmi: r.nmi,
            f1: r.f1,
            modularity: r.modularity,
            avg_conductance: r.avg_conductance,
            iterations: Some(iters),
            wall_time_ms,
            error: None,
        },
        Err(e) => BenchRow {
            entry: entry.name.clone(),
            seed,
            k: None,
            nmi: None,
            f1: None,
            modularity: None,
            avg_conductance: None,
            iterations: None,
            wall_time_ms,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every (entry, seed) job and aggregates per entry. Jobs run in
/// parallel; rows come back in suite order.
pub fn run_benchmark(suite: &BenchSuite) -> Result<BenchReport> {
    suite.validate()?;
    let fixtures: Vec<Option<Result<Network>>> = suite
        .entries
        .iter()
        .map(|e| e.fixture.as_ref().map(load_fixture))
        .collect();
    let jobs: Vec<(usize, u64)> = suite
        .entries
        .iter()
        .enumerate()
        .flat_map(|(i, e)| e.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(i, seed)| run_job(&suite.entries[i], seed, fixtures[i].as_ref()))
        .collect();

    let aggregates = suite
        .entries
        .iter()
        .map(|e| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.entry == e.name).collect();
            let failures = mine.iter().filter(|r| r.error.is_some()).count();
            let metrics = METRIC_COLUMNS
                .iter()
                .filter_map(|&name| {
                    let vals: Vec<f64> = mine.iter().filter_map(|r| r.metric(name)).collect();
                    Summary::of(&vals).map(|s| (name.to_owned(), s))
                })
                .collect();
            Aggregate {
                entry: e.name.clone(),
                runs: mine.len(),
                failures,
                metrics,
            }
        })
        .collect();
    Ok(BenchReport {
        suite: suite.clone(),
        rows,
        aggregates,
    })
}
