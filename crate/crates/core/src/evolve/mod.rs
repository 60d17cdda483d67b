//! Time evolution: schedule-driven propagation, quenches, QAOA circuits and
//! reverse-annealing drivers.
//!
//! Schedules are expressed in `s = t / T`, so a state obeys
//! `d psi / ds = -i T H(s) psi`.

mod circuits;
pub mod expm;
mod reverse;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::ising::{check_materializable, LinearOp, SymmetricProblem};
use crate::path::{Assembler, SymmetricAssembler};
use crate::schedule::Schedule;

pub use circuits::{excited_transverse_init, qaoa_evolve, ExcitedInit};
pub use expm::{expm_apply, Workspace};
pub use reverse::{iterated_reverse_run, CycleRecord, ReverseProtocol, ReverseRunConfig};

/// Relative per-step norm change treated as an integrator failure.
pub const NORM_DRIFT_LIMIT: f64 = 1e-9;

/// Which basis the amplitudes are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `2^n` computational basis states.
    Computational { n: usize },
    /// `n + 1` Dicke states labeled by Hamming weight.
    Symmetric { n: usize },
    /// Vertices of a graph.
    Graph { vertices: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Computational { n } => 1usize << n,
            Basis::Symmetric { n } => n + 1,
            Basis::Graph { vertices } => vertices,
        }
    }
}

/// A unit-norm amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: Vec<Complex64>,
    basis: Basis,
}

impl QuantumState {
    pub fn new(amps: Vec<Complex64>, basis: Basis) -> Result<Self> {
        ensure(amps.len() == basis.dim(), || {
            format!("{} amplitudes for a basis of dimension {}", amps.len(), basis.dim())
        })?;
        let norm = norm(&amps);
        ensure((norm - 1.0).abs() <= NORM_DRIFT_LIMIT, || format!("state norm {norm} differs from 1"))?;
        Ok(Self { amps, basis })
    }

    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        if let Basis::Computational { n } = basis {
            check_materializable(n)?;
        }
        ensure(index < basis.dim(), || format!("basis index {index} out of range"))?;
        let mut amps = vec![Complex64::default(); basis.dim()];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, basis })
    }

    /// `|+>^n`, the ground state of `H_X`.
    pub fn uniform(n: usize) -> Result<Self> {
        check_materializable(n)?;
        let dim = 1usize << n;
        let a = Complex64::new((dim as f64).powf(-0.5), 0.0);
        Ok(Self { amps: vec![a; dim], basis: Basis::Computational { n } })
    }

    /// Ground state of the reduced `H_X` in the Hamming-weight basis.
    pub fn symmetric_uniform(n: usize) -> Self {
        let ln_binom = |w: usize| {
            let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
            lf(n) - lf(w) - lf(n - w)
        };
        let scale = -(n as f64) * std::f64::consts::LN_2;
        let amps = (0..=n).map(|w| Complex64::new((0.5 * (ln_binom(w) + scale)).exp(), 0.0)).collect();
        Self { amps, basis: Basis::Symmetric { n } }
    }

    /// Real amplitudes, normalized here.
    pub fn from_real(v: &[f64], basis: Basis) -> Result<Self> {
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        ensure(nrm > 0.0, || "zero vector".into())?;
        Self::new(v.iter().map(|x| Complex64::new(x / nrm, 0.0)).collect(), basis)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        inner(&self.amps, &other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn conj(&self) -> QuantumState {
        Self { amps: self.amps.iter().map(|a| a.conj()).collect(), basis: self.basis }
    }
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fourth-order commutator-free Magnus: two exponentials per step built
    /// from `H` at the two Gauss points.
    #[default]
    Cf4,
    /// Second-order exponential midpoint rule.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOptions {
    pub method: Method,
    /// Step-halving target: the final states of runs with `N` and `2N` steps
    /// must differ by less than this in norm. `None` runs once with the initial step count.
    pub tolerance: Option<f64>,
    /// Initial step count; estimated from `T` and the spectral width when `None`.
    pub steps: Option<usize>,
    pub max_steps: usize,
    /// Points of `s` where observables (and optionally states) are recorded.
    /// `0` and `1` are always included.
    pub record: Vec<f64>,
    pub store_states: bool,
    /// Fail when the norm changes by more than [`NORM_DRIFT_LIMIT`] in one step.
    pub check_norm: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            method: Method::Cf4,
            tolerance: Some(1e-7),
            steps: None,
            max_steps: 1 << 20,
            record: vec![0.0, 1.0],
            store_states: false,
            check_norm: true,
        }
    }
}

impl PropagateOptions {
    pub fn recording(mut self, grid: Vec<f64>, store_states: bool) -> Self {
        self.record = grid;
        self.store_states = store_states;
        self
    }

    pub fn with_tolerance(mut self, tolerance: Option<f64>) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// States and observables along a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Vec<f64>,
    states: Option<Vec<Vec<Complex64>>>,
    norms: Vec<f64>,
    energies: Vec<f64>,
    final_state: QuantumState,
    schedule: Schedule,
    steps: usize,
    step_error: Option<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn states(&self) -> Result<&[Vec<Complex64>]> {
        self.states
            .as_deref()
            .ok_or_else(|| Error::Contract("trajectory was recorded without states".into()))
    }

    /// `||psi(s)||` at each grid point.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `<psi(s)|H(s)|psi(s)>` at each grid point.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn final_state(&self) -> &QuantumState {
        &self.final_state
    }

    pub fn into_final_state(self) -> QuantumState {
        self.final_state
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn total_time(&self) -> f64 {
        self.schedule.total_time()
    }

    /// Steps used by the accepted run.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `||psi_N - psi_{2N}||` of the accepted step-halving pair.
    pub fn step_error(&self) -> Option<f64> {
        self.step_error
    }

    /// CSV with columns `s,observable,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,observable,value\n");
        for ((s, n), e) in self.grid.iter().zip(&self.norms).zip(&self.energies) {
            out.push_str(&format!("{s},norm,{n}\n{s},energy,{e}\n"));
        }
        out
    }
}

const CF4_ALPHA1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const CF4_ALPHA2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9;

struct Run {
    final_amps: Vec<Complex64>,
    states: Option<Vec<Vec<Complex64>>>,
    norms: Vec<f64>,
    energies: Vec<f64>,
}

fn normalized_grid(record: &[f64]) -> Result<Vec<f64>> {
    for &s in record {
        ensure((0.0..=1.0).contains(&s), || format!("record point {s} outside [0, 1]"))?;
    }
    let mut grid: Vec<f64> = record.to_vec();
    grid.push(0.0);
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

fn initial_steps(asm: &dyn Assembler, schedule: &Schedule, segments: usize) -> Result<usize> {
    let mut width: f64 = 0.0;
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let (lo, hi) = asm.at(schedule, s)?.spectral_bounds();
        width = width.max(hi - lo);
    }
    let est = 2.0 * (schedule.total_time() * width).sqrt();
    Ok((est.ceil() as usize).max(8).max(segments))
}

fn run_fixed(
    asm: &dyn Assembler,
    schedule: &Schedule,
    psi0: &[Complex64],
    knots: &[f64],
    grid: &[f64],
    steps: usize,
    opts: &PropagateOptions,
) -> Result<Run> {
    let t = schedule.total_time();
    let dim = psi0.len();
    let mut psi = psi0.to_vec();
    let mut next = vec![Complex64::default(); dim];
    let mut ws = Workspace::default();
    let mut run = Run {
        final_amps: Vec::new(),
        states: opts.store_states.then(Vec::new),
        norms: Vec::new(),
        energies: Vec::new(),
    };
    let record = |s: f64, psi: &[Complex64], run: &mut Run| -> Result<()> {
        if grid.iter().any(|&g| (g - s).abs() < 1e-14) {
            let h = asm.at(schedule, s)?;
            run.norms.push(norm(psi));
            run.energies.push(h.expectation(psi));
            if let Some(st) = run.states.as_mut() {
                st.push(psi.to_vec());
            }
        }
        Ok(())
    };
    record(0.0, &psi, &mut run)?;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = ((steps as f64 * (b - a)).round() as usize).max(1);
        let ds = (b - a) / m as f64;
        for j in 0..m {
            let s0 = a + j as f64 * ds;
            let before = norm(&psi);
            match opts.method {
                Method::Midpoint => {
                    let h = asm.at(schedule, s0 + 0.5 * ds)?;
                    expm_apply(&h, t * ds, &psi, &mut next, &mut ws)?;
                    std::mem::swap(&mut psi, &mut next);
                }
                Method::Cf4 => {
                    let h1 = asm.at(schedule, s0 + (0.5 - GAUSS_OFFSET) * ds)?;
                    let h2 = asm.at(schedule, s0 + (0.5 + GAUSS_OFFSET) * ds)?;
                    let first = LinearOp::combine(&[(CF4_ALPHA2, &h1), (CF4_ALPHA1, &h2)])?;
                    let second = LinearOp::combine(&[(CF4_ALPHA1, &h1), (CF4_ALPHA2, &h2)])?;
                    expm_apply(&first, t * ds, &psi, &mut next, &mut ws)?;
                    expm_apply(&second, t * ds, &next, &mut psi, &mut ws)?;
                }
            }
            if opts.check_norm {
                let after = norm(&psi);
                if !((after - before).abs() <= NORM_DRIFT_LIMIT * before.max(f64::MIN_POSITIVE)) {
                    return Err(Error::Integrator(format!(
                        "norm drifted from {before} to {after} in one step at s = {s0}"
                    )));
                }
            }
        }
        record(b, &psi, &mut run)?;
    }
    run.final_amps = psi;
    Ok(run)
}

fn propagate_amplitudes(
    asm: &dyn Assembler,
    schedule: &Schedule,
    psi0: &[Complex64],
    opts: &PropagateOptions,
) -> Result<(Run, usize, Option<f64>)> {
    ensure(psi0.len() == asm.dim(), || {
        format!("initial state has dimension {}, Hamiltonian has {}", psi0.len(), asm.dim())
    })?;
    let grid = normalized_grid(&opts.record)?;
    let mut knots = grid.clone();
    knots.extend(schedule.breakpoints());
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    if *knots.last().unwrap() != 1.0 {
        *knots.last_mut().unwrap() = 1.0;
    }
    let mut steps = match opts.steps {
        Some(n) => n.max(1),
        None => initial_steps(asm, schedule, knots.len() - 1)?,
    };
    let Some(tol) = opts.tolerance else {
        let run = run_fixed(asm, schedule, psi0, &knots, &grid, steps, opts)?;
        return Ok((run, steps, None));
    };
    let mut coarse = run_fixed(asm, schedule, psi0, &knots, &grid, steps, opts)?;
    loop {
        if 2 * steps > opts.max_steps {
            return Err(Error::Integrator(format!(
                "step-halving did not reach tolerance {tol} within {} steps",
                opts.max_steps
            )));
        }
        let fine = run_fixed(asm, schedule, psi0, &knots, &grid, 2 * steps, opts)?;
        let diff = coarse
            .final_amps
            .iter()
            .zip(&fine.final_amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        steps *= 2;
        if diff <= tol {
            return Ok((fine, steps, Some(diff)));
        }
        coarse = fine;
    }
}

/// Propagate `psi0` through `H(s)` from `s = 0` to `1` with total time `T`.
pub fn propagate(
    asm: &dyn Assembler,
    schedule: &Schedule,
    psi0: &QuantumState,
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    let (run, steps, step_error) = propagate_amplitudes(asm, schedule, psi0.amplitudes(), opts)?;
    let final_state = QuantumState { amps: run.final_amps, basis: psi0.basis() };
    Ok(Trajectory {
        grid: normalized_grid(&opts.record)?,
        states: run.states,
        norms: run.norms,
        energies: run.energies,
        final_state,
        schedule: schedule.clone(),
        steps,
        step_error,
    })
}

/// Propagate an arbitrary (not necessarily normalized) amplitude vector.
pub fn propagate_raw(
    asm: &dyn Assembler,
    schedule: &Schedule,
    psi0: &[Complex64],
    opts: &PropagateOptions,
) -> Result<Vec<Complex64>> {
    Ok(propagate_amplitudes(asm, schedule, psi0, opts)?.0.final_amps)
}

/// `exp(-i T H) psi0`.
pub fn quench_evolve(h: &LinearOp, total_time: f64, psi0: &QuantumState) -> Result<QuantumState> {
    ensure(h.is_hermitian(), || "quench requires a Hermitian operator".into())?;
    ensure(total_time.is_finite(), || "non-finite evolution time".into())?;
    ensure(psi0.dim() == h.dim(), || "state and operator dimensions differ".into())?;
    let mut out = vec![Complex64::default(); h.dim()];
    expm_apply(h, total_time, psi0.amplitudes(), &mut out, &mut Workspace::default())?;
    let drift = (norm(&out) - psi0.norm()).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::Integrator(format!("norm drift {drift} in quench")));
    }
    Ok(QuantumState { amps: out, basis: psi0.basis() })
}

/// [`propagate`] in the `(n + 1)`-dimensional Hamming-weight basis.
pub fn evolve_symmetric(
    problem: &SymmetricProblem,
    schedule: &Schedule,
    psi0: &QuantumState,
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    ensure(psi0.basis() == Basis::Symmetric { n: problem.n() }, || {
        "initial state must be in the symmetric basis of the problem".into()
    })?;
    propagate(&SymmetricAssembler::new(problem.clone()), schedule, psi0, opts)
}

#[cfg(test)]
mod tests;
