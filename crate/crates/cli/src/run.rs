//! Instance construction and per-kind experiment execution.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use dqalab::baselines::{simulated_annealing, svmc_with, AnnealerConfig, SvmcConfig};
use dqalab::evolve::{
    evolve_symmetric, excited_transverse_init, iterated_reverse_run, propagate, qaoa_evolve, quench_evolve,
    PropagateOptions, QuantumState, ReverseProtocol, ReverseRunConfig,
};
use dqalab::baselines::classical_walk_glued_trees;
use dqalab::instances::{gen_glued_trees, gen_max2sat, gen_maxcut_3regular, gen_rem, gen_sk, GluedTreesGraph};
use dqalab::ising::{hypercube_walk_hamiltonian, DiagonalCost, SpinProblem, SymmetricProblem};
use dqalab::metrics::{
    heuristic_gamma, residual_energy, success_probability, symmetric_success_probability, tts, TTS_TARGET,
};
use dqalab::path::{GluedTreesAssembler, TimAssembler};
use dqalab::schedule::{qaoa_to_schedule, Schedule};
use dqalab::schedule_opt::{
    bang_fraction, evolve_control, optimize_qaoa_angles, optimize_qaoa_budget, optimize_schedule_gd, ControlVector,
};
use dqalab::spectral::{min_gap, MinGapOptions};
use dqalab::{Error, Result};

use crate::config::{metrics_of, Config};

pub enum Material {
    Spin { problem: SpinProblem, cost: DiagonalCost },
    Diagonal(DiagonalCost),
    Symmetric(SymmetricProblem),
    Graph(GluedTreesGraph),
}

pub struct Instance {
    pub name: String,
    pub seed: u64,
    pub material: Material,
}

impl Instance {
    fn cost(&self) -> Result<&DiagonalCost> {
        match &self.material {
            Material::Spin { cost, .. } | Material::Diagonal(cost) => Ok(cost),
            _ => Err(Error::Contract(format!("instance `{}` has no computational-basis cost", self.name))),
        }
    }

    fn problem(&self) -> Result<&SpinProblem> {
        match &self.material {
            Material::Spin { problem, .. } => Ok(problem),
            _ => Err(Error::Contract(format!("instance `{}` is not an Ising problem", self.name))),
        }
    }
}

/// One output row before formatting; `metric` may carry a depth suffix of `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub instance: String,
    pub seed: u64,
    pub time: Option<f64>,
    pub base: &'static str,
    pub metric: String,
    pub value: f64,
}

/// Rows plus extra files, relative to the output directory.
#[derive(Debug, Default)]
pub struct Output {
    pub rows: Vec<Row>,
    pub files: Vec<(String, String)>,
}

fn spin(name: String, seed: u64, problem: SpinProblem) -> Result<Instance> {
    let cost = DiagonalCost::from_problem(&problem)?;
    Ok(Instance { name, seed, material: Material::Spin { problem, cost } })
}

fn unique_ground(inst: &Instance) -> Result<bool> {
    Ok(match &inst.material {
        Material::Spin { cost, .. } | Material::Diagonal(cost) => cost.ground_set()?.1.len() == 1,
        Material::Symmetric(sp) => sp.ground_weights().1.len() == 1,
        Material::Graph(_) => true,
    })
}

fn generate(c: &Config, generator: &str, seed: u64) -> Result<Instance> {
    let spec = &c.instance;
    let n = spec.n.unwrap_or(0);
    match generator {
        "max2sat" => {
            let m = spec.clauses.unwrap_or(0);
            spin(format!("max2sat-n{n}-m{m}-s{seed}"), seed, gen_max2sat(n, m, seed)?.problem)
        }
        "sk" => spin(format!("sk-n{n}-s{seed}"), seed, gen_sk(n, seed)?),
        "maxcut3" => spin(format!("maxcut3-n{n}-s{seed}"), seed, gen_maxcut_3regular(n, seed)?),
        "rem" => Ok(Instance { name: format!("rem-n{n}-s{seed}"), seed, material: Material::Diagonal(gen_rem(n, seed)?) }),
        "spike" => Ok(Instance {
            name: format!("spike-n{n}"),
            seed,
            material: Material::Symmetric(SymmetricProblem::spike(n)?),
        }),
        "glued-trees" => {
            let d = spec.depth.unwrap_or(0);
            Ok(Instance { name: format!("glued-trees-d{d}-s{seed}"), seed, material: Material::Graph(gen_glued_trees(d, seed)?) })
        }
        other => Err(Error::Contract(format!("unknown generator `{other}`"))),
    }
}

/// Instances described by the config; `base` resolves relative file paths.
pub fn build_instances(c: &Config, base: &Path) -> Result<Vec<Instance>> {
    let spec = &c.instance;
    if let Some(path) = &spec.path {
        let text = std::fs::read_to_string(base.join(path))
            .map_err(|e| Error::Serde(format!("cannot read instance file {path}: {e}")))?;
        let problem = SpinProblem::from_json(&text)?;
        let name = if problem.name.is_empty() {
            Path::new(path).file_stem().map_or("instance".into(), |s| s.to_string_lossy().into_owned())
        } else {
            problem.name.clone()
        };
        return Ok(vec![spin(name, c.seed, problem)?]);
    }
    let generator = spec.generator.as_deref().unwrap_or("");
    if generator == "inline" {
        let mut problem = SpinProblem::new(spec.h.len(), spec.h.clone())?.with_name("inline");
        for &(i, j, v) in &spec.couplings {
            problem.set_coupling(i, j, v)?;
        }
        return Ok(vec![spin("inline".into(), c.seed, problem)?]);
    }
    let mut out = Vec::with_capacity(spec.count);
    let mut seed = c.seed;
    let mut tries = 0usize;
    while out.len() < spec.count {
        let inst = generate(c, generator, seed)?;
        seed += 1;
        tries += 1;
        if !spec.unique_ground || unique_ground(&inst)? {
            out.push(inst);
        } else if tries > 1000 * spec.count {
            return Err(Error::Numeric(format!("no unique-ground `{generator}` instance in {tries} draws")));
        }
    }
    Ok(out)
}

fn schedule(c: &Config, total_time: f64) -> Result<Schedule> {
    let s = &c.schedule;
    match s.kind.as_str() {
        "fourier" => Schedule::fourier(&s.coefficients, total_time),
        "pause" => Schedule::linear_forward(total_time)?.with_pause(s.pause_at, s.pause_fraction),
        _ => Schedule::linear_forward(total_time),
    }
}

struct Emit<'a> {
    inst: &'a Instance,
    time: Option<f64>,
    rows: Vec<Row>,
}

impl<'a> Emit<'a> {
    fn new(inst: &'a Instance, time: Option<f64>) -> Self {
        Self { inst, time, rows: Vec::new() }
    }

    fn push(&mut self, base: &'static str, value: f64) {
        self.suffixed(base, String::new(), value);
    }

    fn suffixed(&mut self, base: &'static str, suffix: String, value: f64) {
        self.rows.push(Row {
            instance: self.inst.name.clone(),
            seed: self.inst.seed,
            time: self.time,
            base,
            metric: format!("{base}{suffix}"),
            value,
        });
    }
}

fn anneal(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let sched = schedule(c, t)?;
    let opts = PropagateOptions::default().with_tolerance(Some(c.anneal.tolerance));
    let excited = c.anneal.init == "excited";
    let mut e = Emit::new(inst, Some(t));
    let (p, residual) = match &inst.material {
        Material::Symmetric(sp) => {
            if excited {
                return Err(Error::Contract("excited initialization needs the full computational basis".into()));
            }
            let traj = evolve_symmetric(sp, &sched, &QuantumState::symmetric_uniform(sp.n()), &opts)?;
            let probs = traj.final_state().probabilities();
            let mean: f64 = probs.iter().zip(sp.costs()).map(|(p, f)| p * f).sum();
            (symmetric_success_probability(traj.final_state(), sp)?, (mean - sp.ground_weights().0).max(0.0))
        }
        _ => {
            let cost = inst.cost()?;
            let psi0 = if excited { excited_transverse_init(cost)?.state } else { QuantumState::uniform(cost.n())? };
            let traj = propagate(&TimAssembler::from_cost(cost)?, &sched, &psi0, &opts)?;
            (success_probability(traj.final_state(), cost)?, residual_energy(traj.final_state(), cost)?)
        }
    };
    e.push("success_probability", p);
    e.push("residual_energy", residual);
    e.push("tts", tts(t, p, TTS_TARGET)?);
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn reverse(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let cost = inst.cost()?;
    let r = &c.reverse;
    let protocol = match r.protocol.as_str() {
        "dwave" => ReverseProtocol::DWave { s_target: r.s_target, pause_fraction: r.pause_fraction },
        _ => ReverseProtocol::Sombrero { peak: r.peak },
    };
    let mut cfg = ReverseRunConfig::new(protocol, t);
    cfg.reinitialize = r.reinitialize;
    cfg.options = PropagateOptions::default().with_tolerance(Some(c.anneal.tolerance));
    let records = iterated_reverse_run(cost, &cfg, r.cycles, inst.seed)?;
    let ground = cost.ground_set()?.0;
    let last = records.last().expect("at least one cycle");
    let hits = records.iter().filter(|rec| (rec.energy - ground).abs() <= 1e-9 * ground.abs().max(1.0)).count();
    let mut e = Emit::new(inst, Some(t));
    e.push("final_energy", last.energy);
    e.push("best_energy", last.best_energy);
    e.push("success_fraction", hits as f64 / records.len() as f64);
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn walk(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let cost = inst.cost()?;
    let gamma = match c.walk.gamma {
        Some(g) => g,
        None => heuristic_gamma(cost)?,
    };
    let h = hypercube_walk_hamiltonian(cost, gamma)?;
    let state = quench_evolve(&h, t, &QuantumState::uniform(cost.n())?)?;
    let mut e = Emit::new(inst, Some(t));
    e.push("success_probability", success_probability(&state, cost)?);
    e.push("hopping_rate", gamma);
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn glued_trees(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let Material::Graph(g) = &inst.material else {
        return Err(Error::Contract(format!("instance `{}` is not a glued-trees graph", inst.name)));
    };
    let asm = GluedTreesAssembler::new(g.adjacency.clone(), g.entrance, g.exit)?;
    let psi0 = QuantumState::basis_state(dqalab::evolve::Basis::Graph { vertices: g.vertex_count() }, g.entrance)?;
    let opts = PropagateOptions::default().with_tolerance(Some(c.anneal.tolerance));
    let traj = propagate(&asm, &Schedule::linear_forward(t)?, &psi0, &opts)?;
    let steps = t.round() as usize;
    let classical = classical_walk_glued_trees(g, steps, c.gluedtrees.walkers, inst.seed)?;
    let mut e = Emit::new(inst, Some(t));
    e.push("exit_probability", traj.final_state().amplitudes()[g.exit].norm_sqr());
    e.push("classical_hit_fraction", classical.hit_fraction);
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn qaoa(c: &Config, inst: &Instance, t: Option<f64>) -> Result<Output> {
    let cost = inst.cost()?;
    let mut e = Emit::new(inst, t);
    for &p in &c.qaoa.p {
        let best = match t {
            Some(budget) => optimize_qaoa_budget(cost, p, budget, c.qaoa.restarts, inst.seed)?,
            None => optimize_qaoa_angles(cost, p, c.qaoa.restarts, inst.seed)?,
        };
        let state = qaoa_evolve(cost, &best.gammas, &best.betas)?;
        let suffix = format!("_p{p}");
        e.suffixed("energy", suffix.clone(), best.value);
        e.suffixed("success_probability", suffix.clone(), success_probability(&state, cost)?);
        let total = qaoa_to_schedule(&best.gammas, &best.betas).map_or(0.0, |s| s.total_time);
        e.suffixed("total_time", suffix, total);
    }
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn optimize(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let cost = inst.cost()?;
    let o = &c.optimize;
    let init = ControlVector::constant(o.segments, o.init)?;
    let best = optimize_schedule_gd(cost, t, &init, o.iterations, o.step)?;
    let state = evolve_control(cost, &best.control, t)?;
    let bangs = bang_fraction(&best.control, o.bang_tolerance)?;
    let mut e = Emit::new(inst, Some(t));
    e.push("energy", *best.trace.last().expect("nonempty trace"));
    e.push("success_probability", success_probability(&state, cost)?);
    e.push("start_bang", f64::from(u8::from(bangs.start_bang)));
    e.push("end_bang", f64::from(u8::from(bangs.end_bang)));
    e.push("interior_smoothness", bangs.interior_smoothness);
    let file = format!("controls/{}_T{t}.csv", inst.name);
    Ok(Output { rows: e.rows, files: vec![(file, best.control.to_csv(t))] })
}

fn baseline(c: &Config, inst: &Instance, t: f64) -> Result<Output> {
    let problem = inst.problem()?;
    let b = &c.baseline;
    let sweeps = t as usize;
    let mut e = Emit::new(inst, Some(t));
    if b.method == "svmc" {
        let out = svmc_with(problem, &schedule(c, 1.0)?, &SvmcConfig { sweeps, beta: b.beta, seed: inst.seed })?;
        let ground = inst.cost()?.ground_set()?.0;
        e.push("best_energy", out.energy);
        e.push("success_fraction", f64::from(u8::from((out.energy - ground).abs() <= 1e-9 * ground.abs().max(1.0))));
    } else {
        let cfg = AnnealerConfig {
            sweeps,
            beta_initial: b.beta_initial,
            beta_final: b.beta_final,
            repetitions: b.repetitions,
            seed: inst.seed,
            ..AnnealerConfig::default()
        };
        let out = simulated_annealing(problem, &cfg)?;
        e.push("best_energy", out.best_energy);
        if let Some(f) = out.success_fraction {
            e.push("success_fraction", f);
        }
    }
    Ok(Output { rows: e.rows, files: Vec::new() })
}

fn spectrum(c: &Config, inst: &Instance) -> Result<Output> {
    let s = &c.spectrum;
    let grid: Vec<f64> = (0..s.grid_points).map(|k| k as f64 / (s.grid_points - 1) as f64).collect();
    let sched = schedule(c, 1.0)?;
    let opts = MinGapOptions::new(s.resolution);
    let r = match &inst.material {
        Material::Symmetric(sp) => {
            min_gap(&dqalab::path::SymmetricAssembler::new(sp.clone()), &sched, s.levels, &grid, &opts)?
        }
        _ => min_gap(&TimAssembler::from_cost(inst.cost()?)?, &sched, s.levels, &grid, &opts)?,
    };
    let mut e = Emit::new(inst, None);
    e.push("min_gap", r.global.gap);
    e.push("min_gap_s", r.global.s);
    Ok(Output { rows: e.rows, files: vec![(format!("spectrum/{}.csv", inst.name), r.coarse.to_csv())] })
}

#[derive(Serialize)]
struct CostDoc<'a> {
    n: usize,
    energies: &'a [f64],
}

fn instance_gen(inst: &Instance) -> Result<Output> {
    let mut e = Emit::new(inst, None);
    let doc = match &inst.material {
        Material::Spin { problem, cost } => {
            let (g, set) = cost.ground_set()?;
            e.push("n", problem.n() as f64);
            e.push("ground_energy", g);
            e.push("ground_degeneracy", set.len() as f64);
            problem.to_json()?
        }
        Material::Diagonal(cost) => {
            let (g, set) = cost.ground_set()?;
            e.push("n", cost.n() as f64);
            e.push("ground_energy", g);
            e.push("ground_degeneracy", set.len() as f64);
            serde_json::to_string_pretty(&CostDoc { n: cost.n(), energies: &cost.materialize()? })?
        }
        Material::Symmetric(sp) => {
            let (g, weights) = sp.ground_weights();
            e.push("n", sp.n() as f64);
            e.push("ground_energy", g);
            let degeneracy: f64 = weights.iter().map(|&w| binomial(sp.n(), w)).sum();
            e.push("ground_degeneracy", degeneracy);
            serde_json::to_string_pretty(&CostDoc { n: sp.n(), energies: sp.costs() })?
        }
        Material::Graph(g) => {
            e.push("n", g.vertex_count() as f64);
            serde_json::to_string_pretty(&g.to_doc())?
        }
    };
    Ok(Output { rows: e.rows, files: vec![(format!("instances/{}.json", inst.name), doc)] })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Run every work item of `kind` in the current thread pool, in input order.
pub fn execute(c: &Config, kind: &str, instances: &[Instance]) -> Result<Output> {
    let times: Vec<Option<f64>> = match (&c.t, kind) {
        (_, "spectrum" | "instance-gen") => vec![None],
        (Some(ts), _) if !ts.is_empty() => ts.iter().map(|&t| Some(t)).collect(),
        _ => vec![None],
    };
    let items: Vec<(&Instance, Option<f64>)> =
        instances.iter().flat_map(|inst| times.iter().map(move |&t| (inst, t))).collect();
    let need = |t: Option<f64>| t.ok_or_else(|| Error::Contract(format!("kind `{kind}` needs T")));
    let parts = items
        .par_iter()
        .map(|&(inst, t)| match kind {
            "anneal" => anneal(c, inst, need(t)?),
            "reverse" => reverse(c, inst, need(t)?),
            "walk" => walk(c, inst, need(t)?),
            "gluedtrees" => glued_trees(c, inst, need(t)?),
            "qaoa" => qaoa(c, inst, t),
            "optimize" => optimize(c, inst, need(t)?),
            "baseline" => baseline(c, inst, need(t)?),
            "spectrum" => spectrum(c, inst),
            "instance-gen" => instance_gen(inst),
            other => Err(Error::Contract(format!("unknown kind `{other}`"))),
        })
        .collect::<Result<Vec<Output>>>()?;
    let keep = |r: &Row| c.observables.is_empty() || c.observables.iter().any(|o| o == r.base);
    let mut out = Output::default();
    for part in parts {
        out.rows.extend(part.rows.into_iter().filter(keep));
        out.files.extend(part.files);
    }
    debug_assert!(out.rows.iter().all(|r| metrics_of(kind).contains(&r.base)));
    Ok(out)
}
