//! Iterated reverse annealing with Born-rule measurement between cycles.

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use super::{propagate, Basis, PropagateOptions, QuantumState};
use crate::error::{ensure, Error, Result};
use crate::instances::seeded_rng;
use crate::ising::{config_from_index, index_from_config, DiagonalCost};
use crate::path::ReverseAssembler;
use crate::schedule::Schedule;

pub const REVERSE_RNG_ID: &str = "reverse-anneal/v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReverseProtocol {
    /// `A = peak sin^2(pi s)`, `B = s`, `C = 1 - s` with `H_init` built from
    /// the current configuration.
    Sombrero { peak: f64 },
    /// Piecewise-linear excursion from `s = 1` to `s_target` and back.
    DWave { s_target: f64, pause_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseRunConfig {
    pub protocol: ReverseProtocol,
    pub total_time: f64,
    /// Start every cycle from the initial configuration instead of the last outcome.
    pub reinitialize: bool,
    /// Starting configuration; all zeros when `None`.
    pub initial: Option<Vec<u8>>,
    pub options: PropagateOptions,
}

impl ReverseRunConfig {
    pub fn new(protocol: ReverseProtocol, total_time: f64) -> Self {
        Self {
            protocol,
            total_time,
            reinitialize: false,
            initial: None,
            options: PropagateOptions::default(),
        }
    }

    pub fn schedule(&self) -> Result<Schedule> {
        match self.protocol {
            ReverseProtocol::Sombrero { peak } => Schedule::sombrero(self.total_time, peak),
            ReverseProtocol::DWave { s_target, pause_fraction } => {
                Schedule::reverse_dwave(s_target, pause_fraction, self.reinitialize, self.total_time)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub start: Vec<u8>,
    pub outcome: Vec<u8>,
    pub energy: f64,
    pub best_energy: f64,
}

/// Run `cycles` reverse anneals, measuring in the computational basis after each.
pub fn iterated_reverse_run(
    cost: &DiagonalCost,
    cfg: &ReverseRunConfig,
    cycles: usize,
    seed: u64,
) -> Result<Vec<CycleRecord>> {
    ensure(cycles >= 1, || "at least one cycle is required".into())?;
    let n = cost.n();
    let initial = cfg.initial.clone().unwrap_or_else(|| vec![0; n]);
    ensure(initial.len() == n, || format!("initial configuration has {} bits, problem has {n}", initial.len()))?;
    ensure(initial.iter().all(|&b| b <= 1), || "configuration bits must be 0 or 1".into())?;
    let schedule = cfg.schedule()?;
    let mut rng = seeded_rng(REVERSE_RNG_ID, seed);
    let mut current = initial.clone();
    let mut best = f64::INFINITY;
    let mut records = Vec::with_capacity(cycles);
    for cycle in 0..cycles {
        let start = if cfg.reinitialize { initial.clone() } else { current.clone() };
        let asm = ReverseAssembler::new(cost, &start)?;
        let psi0 = QuantumState::basis_state(Basis::Computational { n }, index_from_config(&start))?;
        let traj = propagate(&asm, &schedule, &psi0, &cfg.options)?;
        let probs = traj.final_state().probabilities();
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::Numeric(format!("measurement distribution: {e}")))?;
        let x = dist.sample(&mut rng);
        let energy = cost.energy(x);
        best = best.min(energy);
        current = config_from_index(x, n);
        records.push(CycleRecord { cycle, start, outcome: current.clone(), energy, best_energy: best });
    }
    Ok(records)
}
