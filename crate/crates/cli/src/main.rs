//! `dqalab`: configuration-driven experiment runner.

mod config;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use serde::Serialize;

use config::{Config, Manifest, SCHEMA_VERSION};
use run::{Output, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Anneal,
    Reverse,
    Walk,
    Gluedtrees,
    Qaoa,
    Optimize,
    Baseline,
    Spectrum,
    InstanceGen,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Anneal => "anneal",
            Kind::Reverse => "reverse",
            Kind::Walk => "walk",
            Kind::Gluedtrees => "gluedtrees",
            Kind::Qaoa => "qaoa",
            Kind::Optimize => "optimize",
            Kind::Baseline => "baseline",
            Kind::Spectrum => "spectrum",
            Kind::InstanceGen => "instance-gen",
        }
    }
}

/// Run a transverse-field Ising annealing experiment described by a TOML config.
#[derive(Debug, Parser)]
#[command(name = "dqalab", version)]
struct Cli {
    /// Experiment kind.
    kind: Kind,
    /// Config file (TOML), or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads across instances and anneal times.
    #[arg(long, env = "DQALAB_THREADS")]
    threads: Option<usize>,
    /// Check the config and exit without running.
    #[arg(long)]
    validate_only: bool,
}

enum Failure {
    Schema,
    Numeric(dqalab::Error),
    Io(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Serialize)]
struct MetricSummary {
    metric: String,
    #[serde(rename = "T")]
    time: Option<f64>,
    count: usize,
    mean: f64,
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct Summary {
    kind: String,
    instances: usize,
    rows: usize,
    metrics: Vec<MetricSummary>,
}

fn summarize(kind: &str, instances: usize, rows: &[Row]) -> Summary {
    let mut metrics: Vec<MetricSummary> = Vec::new();
    for r in rows {
        let found = metrics.iter_mut().find(|m| m.metric == r.metric && m.time == r.time);
        match found {
            Some(m) => {
                m.count += 1;
                m.mean += r.value;
                m.min = m.min.min(r.value);
                m.max = m.max.max(r.value);
            }
            None => metrics.push(MetricSummary {
                metric: r.metric.clone(),
                time: r.time,
                count: 1,
                mean: r.value,
                min: r.value,
                max: r.value,
            }),
        }
    }
    for m in &mut metrics {
        m.mean /= m.count as f64;
    }
    Summary { kind: kind.into(), instances, rows: rows.len(), metrics }
}

fn results_csv(rows: &[Row]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "seed", "T", "metric", "value"])?;
    for r in rows {
        let time = r.time.map(|t| t.to_string()).unwrap_or_default();
        w.write_record([r.instance.as_str(), &r.seed.to_string(), &time, &r.metric, &r.value.to_string()])?;
    }
    Ok(w.into_inner()?)
}

fn write(dir: &Path, rel: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn threads(requested: Option<usize>) -> usize {
    requested
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let kind = cli.kind.name();
    let loaded = config::load(&cli.config, kind).with_context(|| format!("reading {}", cli.config.display()))?;
    eprint!("{}", loaded.report);
    if !loaded.report.is_valid() {
        return Err(Failure::Schema);
    }
    if cli.validate_only {
        println!("{}: valid ({} warnings)", loaded.report.source, loaded.report.warnings.len());
        return Ok(());
    }
    let base = cli.config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let mut cfg: Config = loaded.config;
    cfg.kind = Some(kind.to_string());
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(path) = &cfg.instance.path {
        let resolved = base.join(path);
        cfg.instance.path = Some(fs::canonicalize(&resolved).unwrap_or(resolved).display().to_string());
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dqalab-out"));
    cfg.out = Some(out_dir.display().to_string());

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads(cli.threads))
        .build()
        .context("building the worker pool")?;
    let (instances, output): (usize, Output) = pool
        .install(|| {
            let instances = run::build_instances(&cfg, &base)?;
            Ok((instances.len(), run::execute(&cfg, kind, &instances)?))
        })
        .map_err(Failure::Numeric)?;

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write(&out_dir, "results.csv", &results_csv(&output.rows)?)?;
    let summary = serde_json::to_string_pretty(&summarize(kind, instances, &output.rows)).context("summary")?;
    write(&out_dir, "summary.json", summary.as_bytes())?;
    let mut artifacts = vec!["results.csv".to_string(), "summary.json".to_string()];
    for (rel, content) in &output.files {
        write(&out_dir, rel, content.as_bytes())?;
        artifacts.push(rel.clone());
    }
    let manifest = Manifest {
        tool: "dqalab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        schema: SCHEMA_VERSION,
        kind: kind.into(),
        config: cfg,
        artifacts,
    };
    write(&out_dir, "manifest.json", serde_json::to_string_pretty(&manifest).context("manifest")?.as_bytes())?;
    println!("{}: {} rows from {instances} instances", out_dir.display(), output.rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Schema) => ExitCode::from(2),
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
