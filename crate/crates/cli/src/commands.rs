use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use iedc_core::gen::{generate_lfr_lite, generate_mmsb, LfrLiteParams, MmsbParams, NetworkStats};
use iedc_core::harness::{conductance_sweep, run_benchmark, sample_overlap_subnetwork, BenchSuite};
use iedc_core::metrics::evaluate;
use iedc_core::{
    detect, load_cover, load_edge_list, write_cover, CommunityCover, Graph, IedcConfig, InitConfig,
};
use serde_json::json;

use crate::args::*;
use crate::output::{emit, fmt_opt, json, write_atomic};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Detect(a) => detect_cmd(a, cli.format),
        Command::Generate(a) => generate_cmd(a, cli.format),
        Command::Evaluate(a) => evaluate_cmd(a, cli.format),
        Command::Sweep(a) => sweep_cmd(a, cli.format),
        Command::Sample(a) => sample_cmd(a, cli.format),
        Command::Bench(a) => bench_cmd(a, cli.format),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<Graph> {
    let (g, report) = load_edge_list(open(path)?)
        .map_err(|e| CliError::User(format!("{}: {e}", path.display())))?;
    if report.duplicate_edges + report.self_loops + report.weighted_lines > 0 {
        log::info!(
            "{}: ignored {} duplicate edges, {} self-loops, weights on {} lines",
            path.display(),
            report.duplicate_edges,
            report.self_loops,
            report.weighted_lines
        );
    }
    Ok(g)
}

fn read_cover(path: &Path, g: &Graph) -> Result<CommunityCover> {
    load_cover(open(path)?, g).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn iedc_config(a: &AlgoArgs) -> Result<IedcConfig> {
    let cfg = IedcConfig {
        max_iter: a.max_iter,
        tol: a.tol,
        refresh_model: a.refresh_model,
        threshold: a.threshold,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn labelled(cover: &CommunityCover, g: &Graph) -> Vec<Vec<String>> {
    cover
        .communities()
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| c.iter().map(|&v| g.label(v).to_owned()).collect())
        .collect()
}

fn detect_cmd(a: &DetectArgs, format: Format) -> Result<()> {
    let cfg = iedc_config(&a.algo)?;
    let g = read_graph(&a.graph)?;
    let init = InitConfig::new(a.algo.init, a.k, a.algo.seed);
    init.validate(g.n())?;
    let result = detect(&g, &init, &cfg)?;

    if let Some(path) = &a.out_cover {
        write_atomic(path, |w| write_cover(&result.cover, &g, w))?;
    }
    if let Some(path) = &a.out_probs {
        write_atomic(path, |w| result.final_p.write_csv(&g, w))?;
    }

    let communities = labelled(&result.cover, &g);
    let text = match format {
        Format::Json => {
            let beta: Vec<Vec<f64>> = (0..result.model.k()).map(|r| result.model.beta.row(r).to_vec()).collect();
            json(&json!({
                "nodes": g.n(),
                "edges": g.m(),
                "k": a.k,
                "iterations": result.iterations_run,
                "converged": result.converged,
                "fallback_nodes": result.fallback_nodes,
                "rho": result.model.rho,
                "beta": beta,
                "p1": result.weights.p1,
                "p2": result.weights.p2,
                "communities": communities,
            }))
        }
        Format::Csv => {
            let mut s = String::from("node,community\n");
            for (c, members) in communities.iter().enumerate() {
                for label in members {
                    let _ = writeln!(s, "{label},{c}");
                }
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "{} communities after {} iterations ({})\n",
                communities.len(),
                result.iterations_run,
                if result.converged { "converged" } else { "iteration limit" }
            );
            for members in &communities {
                let _ = writeln!(s, "{}", members.join(" "));
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(())
}

fn generate_cmd(a: &GenerateArgs, format: Format) -> Result<()> {
    let (g, truth, params) = match a.model {
        Model::Mmsb => {
            let lfr_only = [
                ("--mu", a.mu.is_some()),
                ("--avg-degree", a.avg_degree.is_some()),
                ("--max-degree", a.max_degree.is_some()),
                ("--overlap", a.overlap.is_some()),
            ];
            if let Some((flag, _)) = lfr_only.iter().find(|(_, set)| *set) {
                return Err(CliError::User(format!("{flag} applies to --model lfr-lite only")));
            }
            let base = match a.preset {
                Preset::Sparse => MmsbParams::sparse_regime(a.seed),
                Preset::Dense => MmsbParams::dense_regime(a.seed),
            };
            let p = MmsbParams {
                n: a.n.unwrap_or(base.n),
                k: a.k.unwrap_or(base.k),
                alpha: a.alpha.unwrap_or(base.alpha),
                beta_in: a.beta_in.unwrap_or(base.beta_in),
                beta_out: a.beta_out.unwrap_or(base.beta_out),
                seed: a.seed,
            };
            let (g, truth, _) = generate_mmsb(&p)?;
            (g, truth, serde_json::to_value(p).expect("params serialize"))
        }
        Model::LfrLite => {
            let mmsb_only = [
                ("--alpha", a.alpha.is_some()),
                ("--beta-in", a.beta_in.is_some()),
                ("--beta-out", a.beta_out.is_some()),
            ];
            if let Some((flag, _)) = mmsb_only.iter().find(|(_, set)| *set) {
                return Err(CliError::User(format!("{flag} applies to --model mmsb only")));
            }
            let base = match a.preset {
                Preset::Sparse => LfrLiteParams::sparse_regime(a.seed),
                Preset::Dense => LfrLiteParams::dense_regime(a.seed),
            };
            let p = LfrLiteParams {
                n: a.n.unwrap_or(base.n),
                k: a.k.unwrap_or(base.k),
                mu: a.mu.unwrap_or(base.mu),
                avg_degree: a.avg_degree.unwrap_or(base.avg_degree),
                max_degree: a.max_degree.unwrap_or(base.max_degree),
                overlap_nodes: a.overlap.unwrap_or(base.overlap_nodes),
                ..base
            };
            let (g, truth) = generate_lfr_lite(&p)?;
            (g, truth, serde_json::to_value(p).expect("params serialize"))
        }
    };

    let stats = NetworkStats::measure(&g, &truth);
    let model = match a.model {
        Model::Mmsb => "mmsb",
        Model::LfrLite => "lfr-lite",
    };
    let meta = json!({ "model": model, "params": params, "stats": stats });
    write_atomic(&a.out_graph, |w| g.write_edge_list(w))?;
    write_atomic(&a.out_truth, |w| write_cover(&truth, &g, w))?;
    if let Some(path) = &a.meta {
        let text = json(&meta);
        write_atomic(path, |w| w.write_all(text.as_bytes()))?;
    }
    let text = match format {
        Format::Json => json(&meta),
        Format::Csv => format!(
            "n,m,communities,overlap_nodes,modularity,mixing\n{},{},{},{},{},{}\n",
            stats.n, stats.m, stats.communities, stats.overlap_nodes, stats.modularity, stats.mixing
        ),
        Format::Text => format!(
            "{model}: {} nodes, {} edges, {} communities, {} overlapping nodes, modularity {:.4}, mixing {:.4}\n",
            stats.n, stats.m, stats.communities, stats.overlap_nodes, stats.modularity, stats.mixing
        ),
    };
    emit(None, &text)?;
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, format: Format) -> Result<()> {
    let needs_truth = a
        .metrics
        .iter()
        .any(|m| matches!(m, iedc_core::metrics::Metric::Nmi | iedc_core::metrics::Metric::F1));
    if needs_truth && a.truth.is_none() {
        return Err(CliError::User("nmi and f1 need --truth".into()));
    }
    let g = read_graph(&a.graph)?;
    let detected = read_cover(&a.detected, &g)?;
    let truth = a.truth.as_deref().map(|p| read_cover(p, &g)).transpose()?;
    let report = evaluate(&g, &detected, truth.as_ref(), &a.metrics)?;

    let rows = [
        ("nmi", report.nmi),
        ("f1", report.f1),
        ("modularity", report.modularity),
        ("avg_conductance", report.avg_conductance),
    ];
    let text = match format {
        Format::Json => json(&serde_json::to_value(&report).expect("report serializes")),
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for (name, value) in rows.iter().filter(|(_, v)| v.is_some()) {
                let _ = writeln!(s, "{name},{}", fmt_opt(*value));
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (name, value) in rows.iter().filter(|(_, v)| v.is_some()) {
                let _ = writeln!(s, "{name:<16} {:.6}", value.unwrap());
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(())
}

fn sweep_cmd(a: &SweepArgs, format: Format) -> Result<()> {
    if a.k_min == 0 || a.k_min > a.k_max {
        return Err(CliError::User(format!(
            "invalid k range {}..={}",
            a.k_min, a.k_max
        )));
    }
    let cfg = iedc_config(&a.algo)?;
    let g = read_graph(&a.graph)?;
    let truth = a.truth.as_deref().map(|p| read_cover(p, &g)).transpose()?;
    let ks: Vec<usize> = (a.k_min..=a.k_max).collect();
    let init = InitConfig::new(a.algo.init, a.k_min, a.algo.seed);
    let sweep = conductance_sweep(&g, &ks, &cfg, &init, truth.as_ref())?;

    let text = match format {
        Format::Csv => sweep.to_csv(a.timing),
        Format::Json => {
            let mut value = serde_json::to_value(&sweep).expect("sweep serializes");
            if !a.timing {
                for row in value["rows"].as_array_mut().into_iter().flatten() {
                    row.as_object_mut().map(|o| o.remove("wall_time_ms"));
                }
            }
            value["argmin_conductance"] = json!(sweep.argmin_conductance());
            json(&value)
        }
        Format::Text => {
            let mut s = String::from("   k  avg_conductance\n");
            for r in &sweep.rows {
                match (&r.avg_conductance, &r.error) {
                    (Some(c), _) => {
                        let _ = writeln!(s, "{:>4}  {c:.6}", r.k);
                    }
                    (None, err) => {
                        let _ = writeln!(s, "{:>4}  failed: {}", r.k, err.as_deref().unwrap_or("unknown"));
                    }
                }
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(())
}

fn sample_cmd(a: &SampleArgs, format: Format) -> Result<()> {
    let g = read_graph(&a.graph)?;
    let truth = read_cover(&a.truth, &g)?;
    let sub = sample_overlap_subnetwork(&g, &truth, a.seed)?;
    write_atomic(&a.out_graph, |w| sub.graph.write_edge_list(w))?;
    write_atomic(&a.out_truth, |w| write_cover(&sub.cover, &sub.graph, w))?;
    let anchor = g.label(sub.anchor);
    let text = match format {
        Format::Json => json(&json!({
            "anchor": anchor,
            "nodes": sub.graph.n(),
            "edges": sub.graph.m(),
            "communities": sub.cover.len(),
        })),
        Format::Csv => format!(
            "anchor,nodes,edges,communities\n{anchor},{},{},{}\n",
            sub.graph.n(),
            sub.graph.m(),
            sub.cover.len()
        ),
        Format::Text => format!(
            "anchor {anchor}: {} nodes, {} edges, {} communities\n",
            sub.graph.n(),
            sub.graph.m(),
            sub.cover.len()
        ),
    };
    emit(None, &text)?;
    Ok(())
}

fn bench_cmd(a: &BenchArgs, format: Format) -> Result<()> {
    let suite = BenchSuite::load(&a.suite).map_err(|e| CliError::User(format!("{}: {e}", a.suite.display())))?;
    let report = run_benchmark(&suite)?;
    let text = match format {
        Format::Csv => report.to_csv(a.timing),
        Format::Json => json(&report.to_json(a.timing)),
        Format::Text => {
            let mut s = String::new();
            for agg in &report.aggregates {
                let _ = writeln!(s, "{} ({} runs, {} failed)", agg.entry, agg.runs, agg.failures);
                for (name, summary) in &agg.metrics {
                    let _ = writeln!(s, "  {name:<16} {:.6} +/- {:.6}", summary.mean, summary.stddev);
                }
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(())
}
