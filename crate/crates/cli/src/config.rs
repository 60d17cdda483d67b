//! Experiment configuration: TOML schema, typed view and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Version of the configuration schema written to every manifest.
pub const SCHEMA_VERSION: u32 = 1;

pub const KINDS: [&str; 9] =
    ["anneal", "reverse", "walk", "gluedtrees", "qaoa", "optimize", "baseline", "spectrum", "instance-gen"];

pub const GENERATORS: [&str; 7] = ["max2sat", "sk", "rem", "maxcut3", "spike", "glued-trees", "inline"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub schema: u32,
    pub kind: Option<String>,
    pub seed: u64,
    /// Anneal durations: evolution time for quantum kinds, sweeps for `baseline`.
    #[serde(rename = "T")]
    pub t: Option<Vec<f64>>,
    pub out: Option<String>,
    /// Metrics to keep; empty keeps every metric of the kind.
    pub observables: Vec<String>,
    pub instance: InstanceSpec,
    pub schedule: ScheduleSpec,
    pub anneal: AnnealSpec,
    pub reverse: ReverseSpec,
    pub walk: WalkSpec,
    pub gluedtrees: GluedTreesSpec,
    pub qaoa: QaoaSpec,
    pub optimize: OptimizeSpec,
    pub baseline: BaselineSpec,
    pub spectrum: SpectrumSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            kind: None,
            seed: 0,
            t: None,
            out: None,
            observables: Vec::new(),
            instance: InstanceSpec::default(),
            schedule: ScheduleSpec::default(),
            anneal: AnnealSpec::default(),
            reverse: ReverseSpec::default(),
            walk: WalkSpec::default(),
            gluedtrees: GluedTreesSpec::default(),
            qaoa: QaoaSpec::default(),
            optimize: OptimizeSpec::default(),
            baseline: BaselineSpec::default(),
            spectrum: SpectrumSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub generator: Option<String>,
    /// SpinProblem JSON document, relative to the config file.
    pub path: Option<String>,
    pub n: Option<usize>,
    pub clauses: Option<usize>,
    pub depth: Option<usize>,
    /// Number of instances; instance `k` uses seed `seed + k`.
    pub count: usize,
    /// Keep drawing until the instance has a unique ground state.
    pub unique_ground: bool,
    pub h: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            generator: None,
            path: None,
            n: None,
            clauses: None,
            depth: None,
            count: 1,
            unique_ground: false,
            h: Vec::new(),
            couplings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    /// `linear`, `fourier` or `pause`.
    pub kind: String,
    pub coefficients: Vec<f64>,
    pub pause_at: f64,
    pub pause_fraction: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { kind: "linear".into(), coefficients: Vec::new(), pause_at: 0.5, pause_fraction: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSpec {
    /// `ground` (uniform superposition) or `excited`.
    pub init: String,
    pub tolerance: f64,
}

impl Default for AnnealSpec {
    fn default() -> Self {
        Self { init: "ground".into(), tolerance: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReverseSpec {
    /// `sombrero` or `dwave`.
    pub protocol: String,
    pub peak: f64,
    pub s_target: f64,
    pub pause_fraction: f64,
    pub cycles: usize,
    pub reinitialize: bool,
}

impl Default for ReverseSpec {
    fn default() -> Self {
        Self {
            protocol: "sombrero".into(),
            peak: 1.0,
            s_target: 0.5,
            pause_fraction: 0.0,
            cycles: 10,
            reinitialize: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkSpec {
    /// Hopping rate; the width-matching heuristic when absent.
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GluedTreesSpec {
    pub walkers: usize,
}

impl Default for GluedTreesSpec {
    fn default() -> Self {
        Self { walkers: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaoaSpec {
    pub p: Vec<usize>,
    pub restarts: usize,
}

impl Default for QaoaSpec {
    fn default() -> Self {
        Self { p: vec![1], restarts: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeSpec {
    pub segments: usize,
    pub iterations: usize,
    pub step: f64,
    pub init: f64,
    pub bang_tolerance: f64,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        Self { segments: 40, iterations: 300, step: 1.0, init: 0.5, bang_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineSpec {
    /// `sa` or `svmc`.
    pub method: String,
    pub repetitions: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    /// SVMC inverse temperature.
    pub beta: f64,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self { method: "sa".into(), repetitions: 100, beta_initial: 0.1, beta_final: 5.0, beta: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumSpec {
    /// Band size `d`: the gap reported is `E_d - E_{d-1}`.
    pub levels: usize,
    pub grid_points: usize,
    pub resolution: f64,
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        Self { levels: 1, grid_points: 21, resolution: 1e-4 }
    }
}

/// Known keys per table, for unknown-key warnings.
fn known_keys(table: &str) -> Option<&'static [&'static str]> {
    Some(match table {
        "" => &[
            "schema", "kind", "seed", "T", "out", "observables", "instance", "schedule", "anneal", "reverse", "walk",
            "gluedtrees", "qaoa", "optimize", "baseline", "spectrum",
        ],
        "instance" => &["generator", "path", "n", "clauses", "depth", "count", "unique_ground", "h", "couplings"],
        "schedule" => &["kind", "coefficients", "pause_at", "pause_fraction"],
        "anneal" => &["init", "tolerance"],
        "reverse" => &["protocol", "peak", "s_target", "pause_fraction", "cycles", "reinitialize"],
        "walk" => &["gamma"],
        "gluedtrees" => &["walkers"],
        "qaoa" => &["p", "restarts"],
        "optimize" => &["segments", "iterations", "step", "init", "bang_tolerance"],
        "baseline" => &["method", "repetitions", "beta_initial", "beta_final", "beta"],
        "spectrum" => &["levels", "grid_points", "resolution"],
        _ => return None,
    })
}

/// A validation finding anchored to a line of the source document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub source: String,
    pub issues: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for w in &self.warnings {
            writeln!(f, "{}:{}: warning: {}", self.source, w.line, w.message)?;
        }
        for i in &self.issues {
            writeln!(f, "{}:{}: error: {}", self.source, i.line, i.message)?;
        }
        Ok(())
    }
}

/// Line lookup for keys of a flat `[table]` / `key = value` document.
struct Locator<'a> {
    text: &'a str,
}

impl<'a> Locator<'a> {
    fn line_of_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    /// Line of `key` inside `table` (`""` is the root), else of the table
    /// header, else line 1.
    fn key(&self, table: &str, key: &str) -> usize {
        let mut current = String::new();
        let mut header = None;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[') {
                current = name.trim_end_matches(']').trim().to_string();
                if current == table {
                    header = Some(i + 1);
                }
                let full = if table.is_empty() { key.to_string() } else { format!("{table}.{key}") };
                if current == full {
                    return i + 1;
                }
                continue;
            }
            if current == table {
                let lhs = line.split('=').next().unwrap_or("").trim().trim_matches('"');
                if line.contains('=') && lhs == key {
                    return i + 1;
                }
            }
        }
        header.unwrap_or(1)
    }
}

/// A parsed configuration with its validation report.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub report: Report,
}

/// Manifest document: the resolved configuration and the producing version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub schema: u32,
    pub kind: String,
    pub config: Config,
    pub artifacts: Vec<String>,
}

/// Parse and validate a config file for `kind`. A `.json` file is read as a manifest.
pub fn load(path: &Path, kind: &str) -> std::io::Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    let source = path.display().to_string();
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(load_manifest(&text, source, kind));
    }
    Ok(load_toml(&text, source, kind))
}

fn load_manifest(text: &str, source: String, kind: &str) -> Loaded {
    let mut report = Report { source, ..Report::default() };
    match serde_json::from_str::<Manifest>(text) {
        Ok(m) => {
            let mut config = m.config;
            if config.kind.is_none() {
                config.kind = Some(m.kind);
            }
            check(&config, kind, &mut report, |_, _| 1);
            Loaded { config, report }
        }
        Err(e) => {
            report.issues.push(Finding { line: e.line().max(1), message: format!("invalid manifest: {e}") });
            Loaded { config: Config::default(), report }
        }
    }
}

pub fn load_toml(text: &str, source: String, kind: &str) -> Loaded {
    let loc = Locator { text };
    let mut report = Report { source, ..Report::default() };
    let table = match toml::from_str::<toml::Table>(text) {
        Ok(t) => t,
        Err(e) => {
            let line = e.span().map_or(1, |s| loc.line_of_offset(s.start));
            report.issues.push(Finding { line, message: e.message().trim().to_string() });
            return Loaded { config: Config::default(), report };
        }
    };
    for (key, value) in &table {
        match known_keys("").unwrap().contains(&key.as_str()) {
            false => report.warnings.push(Finding {
                line: loc.key("", key),
                message: format!("unknown key `{key}` ignored"),
            }),
            true => {
                if let (Some(known), Some(sub)) = (known_keys(key), value.as_table()) {
                    for k in sub.keys().filter(|k| !known.contains(&k.as_str())) {
                        report.warnings.push(Finding {
                            line: loc.key(key, k),
                            message: format!("unknown key `{key}.{k}` ignored"),
                        });
                    }
                }
            }
        }
    }
    let config = match toml::from_str::<Config>(text) {
        Ok(c) => c,
        Err(e) => {
            let line = e.span().map_or(1, |s| loc.line_of_offset(s.start));
            report.issues.push(Finding { line, message: e.message().trim().to_string() });
            return Loaded { config: Config::default(), report };
        }
    };
    check(&config, kind, &mut report, |t, k| loc.key(t, k));
    Loaded { config, report }
}

fn needs_time(kind: &str) -> bool {
    matches!(kind, "anneal" | "reverse" | "walk" | "gluedtrees" | "optimize" | "baseline")
}

/// Generators each kind accepts.
fn accepts(kind: &str, generator: &str) -> bool {
    match kind {
        "gluedtrees" => generator == "glued-trees",
        "instance-gen" => true,
        "baseline" => matches!(generator, "max2sat" | "sk" | "maxcut3" | "inline"),
        "anneal" => generator != "glued-trees",
        _ => !matches!(generator, "glued-trees" | "spike"),
    }
}

/// Semantic checks; `at(table, key)` anchors a finding.
fn check(c: &Config, kind: &str, report: &mut Report, at: impl Fn(&str, &str) -> usize) {
    let mut issue = |table: &str, key: &str, message: String| {
        report.issues.push(Finding { line: at(table, key), message });
    };
    if c.schema != SCHEMA_VERSION {
        issue("", "schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", c.schema));
    }
    if let Some(k) = &c.kind {
        if !KINDS.contains(&k.as_str()) {
            issue("", "kind", format!("invalid kind `{k}`; expected one of {}", KINDS.join(", ")));
        } else if k != kind {
            issue("", "kind", format!("config kind `{k}` does not match subcommand `{kind}`"));
        }
    }
    match &c.t {
        None if needs_time(kind) => issue("", "T", format!("missing required field `T` for kind `{kind}`")),
        Some(ts) if ts.is_empty() && needs_time(kind) => issue("", "T", "field `T` must not be empty".into()),
        Some(ts) => {
            if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                issue("", "T", "every entry of `T` must be positive and finite".into());
            }
            if kind == "baseline" && ts.iter().any(|t| t.fract() != 0.0) {
                issue("", "T", "`T` counts sweeps for kind `baseline` and must hold integers".into());
            }
        }
        None => {}
    }
    let inst = &c.instance;
    match (&inst.generator, &inst.path) {
        (None, None) => issue("instance", "generator", "missing field `instance.generator` or `instance.path`".into()),
        (Some(_), Some(_)) => {
            issue("instance", "path", "`instance.generator` and `instance.path` are mutually exclusive".into())
        }
        (Some(g), None) => {
            if !GENERATORS.contains(&g.as_str()) {
                issue("instance", "generator", format!("unknown generator `{g}`; expected one of {}", GENERATORS.join(", ")));
            } else if !accepts(kind, g) {
                issue("instance", "generator", format!("generator `{g}` is not supported by kind `{kind}`"));
            } else {
                match g.as_str() {
                    "glued-trees" if inst.depth.is_none() => {
                        issue("instance", "depth", "missing field `instance.depth`".into())
                    }
                    "inline" if inst.h.is_empty() => issue("instance", "h", "missing field `instance.h`".into()),
                    "glued-trees" | "inline" => {}
                    _ if inst.n.is_none() => issue("instance", "n", format!("missing field `instance.n` for `{g}`")),
                    _ => {}
                }
                if g == "max2sat" && inst.clauses.is_none() {
                    issue("instance", "clauses", "missing field `instance.clauses`".into());
                }
            }
        }
        (None, Some(_)) => {
            if kind == "gluedtrees" {
                issue("instance", "path", "kind `gluedtrees` needs `instance.generator = \"glued-trees\"`".into());
            }
        }
    }
    if inst.count == 0 {
        issue("instance", "count", "`instance.count` must be at least 1".into());
    }
    let choice = |value: &str, allowed: &[&str]| allowed.contains(&value);
    if !choice(&c.schedule.kind, &["linear", "fourier", "pause"]) {
        issue("schedule", "kind", format!("unknown schedule kind `{}`", c.schedule.kind));
    }
    if !choice(&c.anneal.init, &["ground", "excited"]) {
        issue("anneal", "init", format!("unknown initial state `{}`", c.anneal.init));
    }
    if !choice(&c.reverse.protocol, &["sombrero", "dwave"]) {
        issue("reverse", "protocol", format!("unknown protocol `{}`", c.reverse.protocol));
    }
    if !choice(&c.baseline.method, &["sa", "svmc"]) {
        issue("baseline", "method", format!("unknown method `{}`", c.baseline.method));
    }
    if kind == "qaoa" && (c.qaoa.p.is_empty() || c.qaoa.p.contains(&0)) {
        issue("qaoa", "p", "`qaoa.p` must list positive depths".into());
    }
    for o in c.observables.iter().filter(|o| !metrics_of(kind).contains(&o.as_str())) {
        issue("", "observables", format!("unknown observable `{o}` for kind `{kind}`; available: {}", metrics_of(kind).join(", ")));
    }
    if kind == "spectrum" && c.spectrum.grid_points < 2 {
        issue("spectrum", "grid_points", "`spectrum.grid_points` must be at least 2".into());
    }
}

/// Metric names each kind can emit, in output order.
pub fn metrics_of(kind: &str) -> &'static [&'static str] {
    match kind {
        "anneal" => &["success_probability", "residual_energy", "tts"],
        "reverse" => &["final_energy", "best_energy", "success_fraction"],
        "walk" => &["success_probability", "hopping_rate"],
        "gluedtrees" => &["exit_probability", "classical_hit_fraction"],
        "qaoa" => &["energy", "success_probability", "total_time"],
        "optimize" => &["energy", "success_probability", "start_bang", "end_bang", "interior_smoothness"],
        "baseline" => &["best_energy", "success_fraction"],
        "spectrum" => &["min_gap", "min_gap_s"],
        "instance-gen" => &["n", "ground_energy", "ground_degeneracy"],
        _ => &[],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "T = [1.0]\n\n[instance]\ngenerator = \"sk\"\nn = 4\n";

    fn lines(r: &[Finding]) -> Vec<usize> {
        r.iter().map(|f| f.line).collect()
    }

    #[test]
    fn valid_config_has_no_findings() {
        let l = load_toml(BASE, "c".into(), "anneal");
        assert!(l.report.is_valid());
        assert!(l.report.warnings.is_empty());
        assert_eq!(l.config.t, Some(vec![1.0]));
        assert_eq!(l.config.instance.n, Some(4));
        assert_eq!(l.config.optimize, OptimizeSpec::default());
    }

    #[test]
    fn missing_fields_are_named_and_anchored() {
        let l = load_toml("[instance]\ngenerator = \"max2sat\"\nn = 4\n", "c".into(), "anneal");
        let messages: Vec<&str> = l.report.issues.iter().map(|f| f.message.as_str()).collect();
        assert!(messages.iter().any(|m| m.contains("`T`")));
        assert!(messages.iter().any(|m| m.contains("`instance.clauses`")));
        assert_eq!(lines(&l.report.issues), vec![1, 1]);
        assert!(load_toml("[instance]\ngenerator = \"sk\"\nn = 4\n", "c".into(), "spectrum").report.is_valid());
    }

    #[test]
    fn unknown_keys_warn_with_their_line() {
        let text = format!("{BASE}shade = 2\n\n[extras]\nx = 1\n");
        let l = load_toml(&text, "c".into(), "anneal");
        assert!(l.report.is_valid());
        assert_eq!(lines(&l.report.warnings), vec![8, 6]);
        assert!(l.report.to_string().contains("c:8: warning: unknown key `extras`"));
    }

    #[test]
    fn kind_and_generator_mismatches_are_issues() {
        let l = load_toml(&format!("kind = \"walk\"\n{BASE}"), "c".into(), "anneal");
        assert_eq!(lines(&l.report.issues), vec![1]);
        let l = load_toml(BASE, "c".into(), "gluedtrees");
        assert!(l.report.issues[0].message.contains("not supported"));
        assert_eq!(l.report.issues[0].line, 4);
        let l = load_toml("T = [1.5]\n[instance]\ngenerator = \"sk\"\nn = 4\n", "c".into(), "baseline");
        assert!(l.report.issues[0].message.contains("integers"));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let l = load_toml("T = [1.0\n\n[instance]\n", "c".into(), "anneal");
        assert!(!l.report.is_valid());
        assert!(l.report.issues[0].line >= 1);
        let l = load_toml("seed = -1\n", "c".into(), "spectrum");
        assert_eq!(lines(&l.report.issues), vec![1]);
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = load_toml(BASE, "c".into(), "anneal").config;
        let back: Config = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
