//! Classical comparators: simulated annealing, spin-vector Monte Carlo,
//! exhaustive search and random walks on glued trees.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::instances::{seeded_rng, GluedTreesGraph};
use crate::ising::{bits_to_spins, config_from_index, DiagonalCost, SpinProblem, MAX_MATERIALIZED_QUBITS};
use crate::schedule::Schedule;

pub const SA_RNG_ID: &str = "simulated-annealing/v1";
pub const SVMC_RNG_ID: &str = "svmc/v1";
pub const WALK_RNG_ID: &str = "glued-trees-walk/v1";

/// Default inverse temperature of [`svmc`].
pub const SVMC_BETA: f64 = 5.0;

/// Energies within this distance of the exact minimum count as ground.
const GROUND_TOL: f64 = 1e-9;

fn rep_rng(id: &str, seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(id, seed);
    rng.set_stream(stream);
    rng
}

/// Exact ground energy and every configuration attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub energy: f64,
    pub configs: Vec<Vec<u8>>,
}

/// Exhaustive scan over all `2^n` configurations.
pub fn brute_force(problem: &SpinProblem) -> Result<GroundTruth> {
    let (energy, set) = DiagonalCost::from_problem(problem)?.ground_set()?;
    let configs = set.into_iter().map(|x| config_from_index(x, problem.n())).collect();
    Ok(GroundTruth { energy, configs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    Geometric,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealerConfig {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    #[serde(default)]
    pub ramp: Ramp,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for AnnealerConfig {
    fn default() -> Self {
        Self { sweeps: 1000, beta_initial: 0.1, beta_final: 5.0, ramp: Ramp::Geometric, repetitions: 100, seed: 0 }
    }
}

impl AnnealerConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(self.sweeps >= 1, || "at least one sweep is required".into())?;
        ensure(self.repetitions >= 1, || "at least one repetition is required".into())?;
        ensure(self.beta_initial > 0.0 && self.beta_initial.is_finite(), || {
            format!("initial inverse temperature {} must be positive", self.beta_initial)
        })?;
        ensure(self.beta_final >= self.beta_initial, || {
            format!("final inverse temperature {} is below the initial {}", self.beta_final, self.beta_initial)
        })
    }

    /// Inverse temperature of sweep `k`.
    pub fn beta(&self, k: usize) -> f64 {
        if self.sweeps == 1 {
            return self.beta_final;
        }
        let f = k as f64 / (self.sweeps - 1) as f64;
        match self.ramp {
            Ramp::Geometric => self.beta_initial * (self.beta_final / self.beta_initial).powf(f),
            Ramp::Linear => self.beta_initial + (self.beta_final - self.beta_initial) * f,
        }
    }
}

/// Best outcome of one simulated-annealing repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub energy: f64,
    pub config: Vec<u8>,
    /// Best energy seen so far after each sweep.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSummary {
    pub best_energy: f64,
    pub best_config: Vec<u8>,
    /// Exact minimum when `n` is small enough to enumerate.
    pub ground_energy: Option<f64>,
    /// Fraction of repetitions whose best energy is the exact minimum.
    pub success_fraction: Option<f64>,
    pub repetitions: Vec<Repetition>,
}

/// Dense couplings for local-field updates.
struct Couplings {
    n: usize,
    h: Vec<f64>,
    j: Vec<f64>,
}

impl Couplings {
    fn new(problem: &SpinProblem) -> Self {
        let n = problem.n();
        let mut j = vec![0.0; n * n];
        for (a, b, v) in problem.couplings() {
            j[a * n + b] = v;
            j[b * n + a] = v;
        }
        Self { n, h: problem.fields().to_vec(), j }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.j[i * self.n..(i + 1) * self.n]
    }

    fn energy(&self, z: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            e -= self.h[i] * z[i];
            for k in i + 1..self.n {
                e -= self.j[i * self.n + k] * z[i] * z[k];
            }
        }
        e
    }
}

fn spins_to_bits(z: &[f64]) -> Vec<u8> {
    z.iter().map(|&s| u8::from(s < 0.0)).collect()
}

/// Single-spin-flip Metropolis over the configured inverse-temperature ramp.
pub fn simulated_annealing(problem: &SpinProblem, cfg: &AnnealerConfig) -> Result<AnnealSummary> {
    cfg.validate()?;
    let n = problem.n();
    let c = Couplings::new(problem);
    let ground_energy = if n <= MAX_MATERIALIZED_QUBITS { Some(brute_force(problem)?.energy) } else { None };
    let repetitions: Vec<Repetition> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(SA_RNG_ID, cfg.seed, rep as u64);
            let mut z: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            let mut field: Vec<f64> = (0..n).map(|i| c.h[i] + dot(c.row(i), &z)).collect();
            let mut energy = c.energy(&z);
            let mut best = (energy, z.clone());
            let mut trace = Vec::with_capacity(cfg.sweeps);
            for k in 0..cfg.sweeps {
                let beta = cfg.beta(k);
                for i in 0..n {
                    let delta = 2.0 * z[i] * field[i];
                    if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                        z[i] = -z[i];
                        energy += delta;
                        let zi = z[i];
                        for (f, &jv) in field.iter_mut().zip(c.row(i)) {
                            *f += 2.0 * jv * zi;
                        }
                        if energy < best.0 {
                            best = (energy, z.clone());
                        }
                    }
                }
                trace.push(best.0);
            }
            let exact = c.energy(&best.1);
            Repetition { energy: exact, config: spins_to_bits(&best.1), trace }
        })
        .collect();
    let best = repetitions
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .expect("at least one repetition");
    let success_fraction = ground_energy.map(|g| {
        let tol = GROUND_TOL * (1.0 + g.abs());
        repetitions.iter().filter(|r| r.energy - g <= tol).count() as f64 / repetitions.len() as f64
    });
    Ok(AnnealSummary {
        best_energy: best.energy,
        best_config: best.config.clone(),
        ground_energy,
        success_fraction,
        repetitions,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Planar rotor angles `theta_i` in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotorState {
    pub angles: Vec<f64>,
}

impl RotorState {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        ensure(angles.iter().all(|a| (0.0..=std::f64::consts::PI).contains(a)), || {
            "rotor angles must lie in [0, pi]".into()
        })?;
        Ok(Self { angles })
    }

    /// Bit 0 where `cos theta >= 0`, matching `z = +1`.
    pub fn round(&self) -> Vec<u8> {
        self.angles.iter().map(|a| u8::from(a.cos() < 0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmcConfig {
    pub sweeps: usize,
    pub beta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmcOutcome {
    pub config: Vec<u8>,
    /// Classical cost of the rounded configuration.
    pub energy: f64,
    pub rotors: RotorState,
    pub acceptance_rate: f64,
}

/// [`svmc_with`] at inverse temperature [`SVMC_BETA`].
pub fn svmc(problem: &SpinProblem, schedule: &Schedule, sweeps: usize, seed: u64) -> Result<SvmcOutcome> {
    svmc_with(problem, schedule, &SvmcConfig { sweeps, beta: SVMC_BETA, seed })
}

/// Metropolis dynamics of planar rotors under
/// `E = -A(s) sum sin theta_i - B(s) (sum h_i cos theta_i + sum J_ij cos theta_i cos theta_j)`,
/// with sweep `k` of `S` evaluated at `s = (k + 1/2) / S` and proposals drawn
/// uniformly from `[0, pi]`.
pub fn svmc_with(problem: &SpinProblem, schedule: &Schedule, cfg: &SvmcConfig) -> Result<SvmcOutcome> {
    ensure(cfg.sweeps >= 1, || "at least one sweep is required".into())?;
    ensure(cfg.beta > 0.0 && cfg.beta.is_finite(), || format!("inverse temperature {} must be positive", cfg.beta))?;
    let n = problem.n();
    let c = Couplings::new(problem);
    let mut rng = seeded_rng(SVMC_RNG_ID, cfg.seed);
    let pi = std::f64::consts::PI;
    let mut theta: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * pi).collect();
    let mut cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let mut accepted = 0usize;
    for k in 0..cfg.sweeps {
        let ctl = schedule.controls((k as f64 + 0.5) / cfg.sweeps as f64);
        for i in 0..n {
            let proposal = rng.gen::<f64>() * pi;
            let local = c.h[i] + dot(c.row(i), &cos);
            let (nc, oc) = (proposal.cos(), cos[i]);
            let delta = -ctl.a * (proposal.sin() - theta[i].sin()) - ctl.b * local * (nc - oc);
            if delta <= 0.0 || rng.gen::<f64>() < (-cfg.beta * delta).exp() {
                theta[i] = proposal;
                cos[i] = nc;
                accepted += 1;
            }
        }
    }
    let rotors = RotorState { angles: theta };
    let config = rotors.round();
    let z: Vec<f64> = bits_to_spins(&config).iter().map(|&s| s as f64).collect();
    Ok(SvmcOutcome {
        energy: c.energy(&z),
        config,
        rotors,
        acceptance_rate: accepted as f64 / (cfg.sweeps * n.max(1)) as f64,
    })
}

/// Outcome of independent uniform random walks from the entrance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkOutcome {
    /// Fraction of walkers that visited the exit within the step budget.
    pub hit_fraction: f64,
    /// Fraction at the exit, averaged over the last two steps to cancel the
    /// bipartite parity of the graph.
    pub final_occupation: f64,
}

/// Discrete-time uniform random walks on a glued-trees graph.
pub fn classical_walk_glued_trees(graph: &GluedTreesGraph, steps: usize, walkers: usize, seed: u64) -> Result<WalkOutcome> {
    ensure(walkers >= 1, || "at least one walker is required".into())?;
    if steps == 0 {
        return Ok(WalkOutcome { hit_fraction: 0.0, final_occupation: 0.0 });
    }
    let adj = &graph.adjacency;
    let counts: Vec<(usize, usize)> = (0..walkers)
        .into_par_iter()
        .map(|w| {
            let mut rng = rep_rng(WALK_RNG_ID, seed, w as u64);
            let mut v = graph.entrance;
            let mut hit = false;
            let mut at_end = 0;
            for t in 1..=steps {
                let nb = adj.neighbors(v);
                v = nb[rng.gen_range(0..nb.len())];
                if v == graph.exit {
                    hit = true;
                    if t + 1 >= steps {
                        at_end += 1;
                    }
                }
            }
            (usize::from(hit), at_end)
        })
        .collect();
    let hits: usize = counts.iter().map(|c| c.0).sum();
    let end: usize = counts.iter().map(|c| c.1).sum();
    let window = steps.min(2) as f64;
    Ok(WalkOutcome {
        hit_fraction: hits as f64 / walkers as f64,
        final_occupation: end as f64 / (walkers as f64 * window),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_glued_trees;
    use crate::ising::cost_energy;
    use crate::schedule::ControlFunction;
    use rand::SeedableRng;

    fn random_problem(n: usize, seed: u64) -> SpinProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = SpinProblem::new(n, (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < 0.5 {
                    p.set_coupling(i, j, rng.gen::<f64>() * 2.0 - 1.0).unwrap();
                }
            }
        }
        p
    }

    #[test]
    fn brute_force_examples() {
        let mut pair = SpinProblem::zero(2).unwrap();
        pair.set_coupling(0, 1, 1.0).unwrap();
        let g = brute_force(&pair).unwrap();
        assert_eq!(g.energy, -1.0);
        assert_eq!(g.configs, vec![vec![0, 0], vec![1, 1]]);
        let g = brute_force(&SpinProblem::new(2, vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(g.energy, -2.0);
        assert_eq!(g.configs, vec![vec![0, 0]]);
        assert!(brute_force(&SpinProblem::zero(25).unwrap()).is_err());
    }

    /// Independent recount through `cost_energy` on every assignment.
    #[test]
    fn brute_force_matches_recount() {
        for seed in 0..100 {
            let p = random_problem(10, seed);
            let g = brute_force(&p).unwrap();
            let mut best = f64::INFINITY;
            let mut all = Vec::new();
            for x in 0..1usize << 10 {
                let cfg: Vec<u8> = (0..10).map(|i| ((x >> (9 - i)) & 1) as u8).collect();
                let e = cost_energy(&p, &cfg).unwrap();
                if e < best - 1e-9 {
                    best = e;
                    all.clear();
                }
                if (e - best).abs() <= 1e-9 {
                    all.push(cfg);
                }
            }
            assert!((g.energy - best).abs() < 1e-12);
            assert_eq!(g.configs, all);
        }
    }

    fn chain(n: usize) -> SpinProblem {
        let mut p = SpinProblem::zero(n).unwrap();
        for i in 0..n - 1 {
            p.set_coupling(i, i + 1, 1.0).unwrap();
        }
        p
    }

    #[test]
    fn sa_solves_ferromagnetic_chain() {
        let cfg = AnnealerConfig { sweeps: 500, repetitions: 200, seed: 3, ..Default::default() };
        let r = simulated_annealing(&chain(8), &cfg).unwrap();
        assert_eq!(r.ground_energy, Some(-7.0));
        assert!(r.success_fraction.unwrap() > 0.99);
        for rep in &r.repetitions {
            assert!(rep.trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn zero_temperature_sweep_never_raises_energy() {
        let p = random_problem(12, 9);
        let cfg = AnnealerConfig { sweeps: 1, beta_initial: 1e12, beta_final: 1e12, repetitions: 20, ..Default::default() };
        let r = simulated_annealing(&p, &cfg).unwrap();
        let c = Couplings::new(&p);
        for (rep, out) in r.repetitions.iter().enumerate() {
            let mut rng = rep_rng(SA_RNG_ID, cfg.seed, rep as u64);
            let z: Vec<f64> = (0..12).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            assert!(out.energy <= c.energy(&z) + 1e-12);
        }
    }

    #[test]
    fn sa_is_deterministic_and_validates() {
        let p = random_problem(10, 2);
        let cfg = AnnealerConfig { sweeps: 50, repetitions: 8, seed: 11, ..Default::default() };
        assert_eq!(simulated_annealing(&p, &cfg).unwrap(), simulated_annealing(&p, &cfg).unwrap());
        let bad = AnnealerConfig { beta_final: 0.01, ..cfg.clone() };
        assert!(simulated_annealing(&p, &bad).is_err());
        let bad = AnnealerConfig { sweeps: 0, ..cfg };
        assert!(simulated_annealing(&p, &bad).is_err());
    }

    #[test]
    fn ramps_hit_endpoints() {
        for ramp in [Ramp::Geometric, Ramp::Linear] {
            let cfg = AnnealerConfig { sweeps: 11, ramp, ..Default::default() };
            assert!((cfg.beta(0) - 0.1).abs() < 1e-15);
            assert!((cfg.beta(10) - 5.0).abs() < 1e-12);
        }
    }

    fn constant_schedule(a: f64, b: f64) -> Schedule {
        Schedule::new(ControlFunction::Constant { value: a }, ControlFunction::Constant { value: b }, 1.0).unwrap()
    }

    #[test]
    fn svmc_transverse_only_favours_equator() {
        let p = random_problem(6, 1);
        let out = svmc_with(&p, &constant_schedule(1.0, 0.0), &SvmcConfig { sweeps: 400, beta: 20.0, seed: 5 }).unwrap();
        let mean_sin: f64 = out.rotors.angles.iter().map(|t| t.sin()).sum::<f64>() / 6.0;
        assert!(mean_sin > 0.9, "mean sin theta {mean_sin}");
    }

    /// Two-rotor oracle: the aligned fraction of the rounded configuration
    /// under the stationary density `exp(beta cos a cos b)` on `[0, pi]^2`.
    #[test]
    fn svmc_ferromagnetic_pair_aligns() {
        let mut pair = SpinProblem::zero(2).unwrap();
        pair.set_coupling(0, 1, 1.0).unwrap();
        let beta = 3.0;
        let grid = 400;
        let mut aligned = 0.0;
        let mut total = 0.0;
        for i in 0..grid {
            for j in 0..grid {
                let a = (i as f64 + 0.5) * std::f64::consts::PI / grid as f64;
                let b = (j as f64 + 0.5) * std::f64::consts::PI / grid as f64;
                let w = (beta * a.cos() * b.cos()).exp();
                total += w;
                if (a.cos() >= 0.0) == (b.cos() >= 0.0) {
                    aligned += w;
                }
            }
        }
        let want = aligned / total;
        let runs = 2000;
        let hits = (0..runs)
            .filter(|&seed| {
                let out = svmc_with(&pair, &constant_schedule(0.0, 1.0), &SvmcConfig { sweeps: 20, beta, seed }).unwrap();
                out.config[0] == out.config[1]
            })
            .count() as f64
            / runs as f64;
        assert!(want > 0.7);
        assert!((hits - want).abs() < 0.04, "{hits} vs {want}");
    }

    #[test]
    fn svmc_is_deterministic() {
        let p = random_problem(5, 4);
        let s = Schedule::linear_forward(1.0).unwrap();
        assert_eq!(svmc(&p, &s, 30, 7).unwrap(), svmc(&p, &s, 30, 7).unwrap());
        assert!(RotorState::new(vec![4.0]).is_err());
    }

    #[test]
    fn walk_occupation_approaches_stationary() {
        let g = gen_glued_trees(1, 0).unwrap();
        let out = classical_walk_glued_trees(&g, 1001, 20000, 1).unwrap();
        let want = g.adjacency.degree(g.exit) as f64 / (2 * g.adjacency.edge_count()) as f64;
        assert!((out.final_occupation - want).abs() < 0.01, "{} vs {want}", out.final_occupation);
        assert!(out.hit_fraction > 0.99);
        let none = classical_walk_glued_trees(&g, 0, 10, 1).unwrap();
        assert_eq!(none.hit_fraction, 0.0);
    }

    #[test]
    fn walk_hit_fraction_falls_with_depth() {
        let mut last = f64::INFINITY;
        for d in 2..=6 {
            let g = gen_glued_trees(d, 3).unwrap();
            let budget = 4 * d * d;
            let f = classical_walk_glued_trees(&g, budget, 4000, 2).unwrap().hit_fraction;
            assert!(f < last, "depth {d}: {f} after {last}");
            last = f;
        }
    }
}
