//! Ising cost functions and the Hamiltonians built from them.
//!
//! Conventions: bit 0 is the `Z = +1` eigenstate, bit 1 is `Z = -1`, and the
//! computational-basis index is the big-endian bit string, so qubit `i` is
//! bit `n - 1 - i` of the index.

mod operator;
mod symmetric;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use operator::{Adjacency, Hopping, LinearOp, DENSE_LIMIT};
pub use symmetric::{dicke_basis_state, lift_symmetric, spike_cost, symmetric_reduce, SymmetricProblem};

use crate::error::{contract, ensure, Error, Result};

/// Largest qubit count for which a diagonal is enumerated exhaustively.
pub const MAX_MATERIALIZED_QUBITS: usize = 24;

/// Bit of qubit `i` in basis index `x` of an `n`-qubit register.
#[inline]
pub fn bit(x: usize, n: usize, i: usize) -> u8 {
    ((x >> (n - 1 - i)) & 1) as u8
}

/// `+1` for bit 0, `-1` for bit 1.
#[inline]
pub fn spin(x: usize, n: usize, i: usize) -> f64 {
    1.0 - 2.0 * bit(x, n, i) as f64
}

pub fn config_from_index(x: usize, n: usize) -> Vec<u8> {
    (0..n).map(|i| bit(x, n, i)).collect()
}

pub fn index_from_config(config: &[u8]) -> usize {
    config.iter().fold(0usize, |acc, &b| (acc << 1) | (b as usize & 1))
}

/// Longitudinal fields and pairwise couplings of an Ising cost function.
///
/// `H_Z = -sum_i h_i Z_i - sum_{i<j} J_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinProblem {
    n: usize,
    h: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
    pub name: String,
}

/// On-disk form of a [`SpinProblem`]: `{"n": 3, "h": [..], "J": [[i, j, v], ..], "name": ".."}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinProblemDoc {
    pub n: usize,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(rename = "J", default)]
    pub j: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub name: String,
}

impl SpinProblem {
    pub fn new(n: usize, h: Vec<f64>) -> Result<Self> {
        ensure(n >= 1, || "spin problem needs at least one qubit".into())?;
        ensure(h.len() == n, || format!("expected {n} local fields, got {}", h.len()))?;
        Ok(Self { n, h, couplings: BTreeMap::new(), name: String::new() })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n])
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Set `J_ij` (order of `i`, `j` irrelevant). Replaces an existing value.
    pub fn set_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let key = self.pair(i, j)?;
        self.couplings.insert(key, value);
        Ok(())
    }

    /// `J_ij += value`.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let key = self.pair(i, j)?;
        *self.couplings.entry(key).or_insert(0.0) += value;
        Ok(())
    }

    pub fn add_field(&mut self, i: usize, value: f64) -> Result<()> {
        ensure(i < self.n, || format!("vertex {i} out of range"))?;
        self.h[i] += value;
        Ok(())
    }

    fn pair(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        ensure(i < self.n && j < self.n, || format!("pair ({i}, {j}) out of range for n = {}", self.n))?;
        ensure(i != j, || format!("self coupling at vertex {i}"))?;
        Ok((i.min(j), i.max(j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(&(i.min(j), i.max(j))).copied().unwrap_or(0.0)
    }

    /// Couplings with `i < j`, in lexicographic order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.couplings.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn coupling_count(&self) -> usize {
        self.couplings.len()
    }

    /// Energy of a computational basis index.
    pub fn energy_of_index(&self, x: usize) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for (i, &h) in self.h.iter().enumerate() {
            e -= h * spin(x, n, i);
        }
        for (&(i, j), &v) in &self.couplings {
            e -= v * spin(x, n, i) * spin(x, n, j);
        }
        e
    }

    pub fn to_doc(&self) -> SpinProblemDoc {
        SpinProblemDoc {
            n: self.n,
            h: self.h.clone(),
            j: self.couplings().collect(),
            name: self.name.clone(),
        }
    }

    pub fn from_doc(doc: &SpinProblemDoc) -> Result<Self> {
        let h = if doc.h.is_empty() { vec![0.0; doc.n] } else { doc.h.clone() };
        let mut p = SpinProblem::new(doc.n, h)?;
        for &(i, j, v) in &doc.j {
            let key = p.pair(i, j)?;
            if p.couplings.insert(key, v).is_some() {
                return Err(contract(format!("pair ({i}, {j}) listed twice")));
            }
        }
        p.name = doc.name.clone();
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpinProblemDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }
}

/// `-sum h_i z_i - sum J_ij z_i z_j` for a bit configuration.
pub fn cost_energy(problem: &SpinProblem, config: &[u8]) -> Result<f64> {
    ensure(config.len() == problem.n(), || {
        format!("configuration has {} bits, problem has {} qubits", config.len(), problem.n())
    })?;
    ensure(config.iter().all(|&b| b <= 1), || "configuration entries must be 0 or 1".into())?;
    Ok(problem.energy_of_index(index_from_config(config)))
}

/// `-(1/n) (sum_i z_i)^p`.
pub fn p_spin_cost(n: usize, p: u32, config: &[u8]) -> Result<f64> {
    ensure(p >= 1, || "p must be a positive integer".into())?;
    ensure(config.len() == n && n > 0, || format!("configuration length {} != n = {n}", config.len()))?;
    let m: f64 = config.iter().map(|&b| 1.0 - 2.0 * b as f64).sum();
    Ok(-m.powi(p as i32) / n as f64)
}

type Evaluator = dyn Fn(&[u8]) -> f64 + Send + Sync;

/// A cost function that is diagonal in the computational basis.
#[derive(Clone)]
pub enum DiagonalCost {
    /// Energies indexed by basis state; length `2^n`.
    Materialized { n: usize, energies: Arc<[f64]> },
    /// Lazily evaluated cost of a bit configuration.
    Evaluator { n: usize, eval: Arc<Evaluator> },
}

impl std::fmt::Debug for DiagonalCost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiagonalCost::Materialized { n, .. } => write!(f, "DiagonalCost::Materialized(n = {n})"),
            DiagonalCost::Evaluator { n, .. } => write!(f, "DiagonalCost::Evaluator(n = {n})"),
        }
    }
}

impl DiagonalCost {
    pub fn from_energies(energies: Vec<f64>) -> Result<Self> {
        let len = energies.len();
        ensure(len >= 2 && len.is_power_of_two(), || format!("length {len} is not 2^n with n >= 1"))?;
        let n = len.trailing_zeros() as usize;
        Ok(DiagonalCost::Materialized { n, energies: energies.into() })
    }

    pub fn from_fn(n: usize, f: impl Fn(&[u8]) -> f64 + Send + Sync + 'static) -> Self {
        DiagonalCost::Evaluator { n, eval: Arc::new(f) }
    }

    /// Enumerate the Ising energies of every basis state.
    pub fn from_problem(problem: &SpinProblem) -> Result<Self> {
        let n = problem.n();
        check_materializable(n)?;
        let dim = 1usize << n;
        let mut energies = vec![0.0; dim];
        for (x, e) in energies.iter_mut().enumerate() {
            *e = problem.energy_of_index(x);
        }
        Ok(DiagonalCost::Materialized { n, energies: energies.into() })
    }

    pub fn p_spin(n: usize, p: u32) -> Result<Self> {
        check_materializable(n)?;
        ensure(p >= 1, || "p must be a positive integer".into())?;
        let energies: Vec<f64> = (0..1usize << n)
            .map(|x| {
                let m = n as f64 - 2.0 * x.count_ones() as f64;
                -m.powi(p as i32) / n as f64
            })
            .collect();
        Ok(DiagonalCost::Materialized { n, energies: energies.into() })
    }

    pub fn zero(n: usize) -> Result<Self> {
        check_materializable(n)?;
        Ok(DiagonalCost::Materialized { n, energies: vec![0.0; 1 << n].into() })
    }

    pub fn n(&self) -> usize {
        match self {
            DiagonalCost::Materialized { n, .. } | DiagonalCost::Evaluator { n, .. } => *n,
        }
    }

    pub fn energy(&self, x: usize) -> f64 {
        match self {
            DiagonalCost::Materialized { energies, .. } => energies[x],
            DiagonalCost::Evaluator { n, eval } => eval(&config_from_index(x, *n)),
        }
    }

    /// Energies of every basis state.
    pub fn materialize(&self) -> Result<Arc<[f64]>> {
        match self {
            DiagonalCost::Materialized { energies, .. } => Ok(energies.clone()),
            DiagonalCost::Evaluator { n, eval } => {
                check_materializable(*n)?;
                let v: Vec<f64> = (0..1usize << n).map(|x| eval(&config_from_index(x, *n))).collect();
                Ok(v.into())
            }
        }
    }

    /// Exact minimum energy and all basis indices attaining it (within `1e-9`).
    pub fn ground_set(&self) -> Result<(f64, Vec<usize>)> {
        let e = self.materialize()?;
        Ok(ground_set_of(&e))
    }
}

pub(crate) fn ground_set_of(energies: &[f64]) -> (f64, Vec<usize>) {
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + min.abs());
    let set = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - min <= tol)
        .map(|(x, _)| x)
        .collect();
    (min, set)
}

pub(crate) fn check_materializable(n: usize) -> Result<()> {
    if n == 0 {
        return Err(contract("zero qubits"));
    }
    if n > MAX_MATERIALIZED_QUBITS {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the exhaustive limit of {MAX_MATERIALIZED_QUBITS}"
        )));
    }
    Ok(())
}

/// `H_X = -sum_i X_i`.
pub fn transverse_field(n: usize) -> Result<LinearOp> {
    check_materializable(n)?;
    LinearOp::new(vec![0.0; 1 << n], 1.0, Hopping::Transverse { n })
}

/// `a H_X + b H_Z` for an Ising problem.
pub fn assemble_tim(problem: &SpinProblem, a: f64, b: f64) -> Result<LinearOp> {
    let cost = DiagonalCost::from_problem(problem)?;
    assemble_diagonal(&cost, a, b)
}

/// `a H_X + b H_Z` for any diagonal cost.
pub fn assemble_diagonal(cost: &DiagonalCost, a: f64, b: f64) -> Result<LinearOp> {
    let e = cost.materialize()?;
    let diag = e.iter().map(|x| b * x).collect();
    LinearOp::new(diag, a, Hopping::Transverse { n: cost.n() })
}

/// Hypercube quantum-walk Hamiltonian `gamma (n I + H_X) + H_C`.
pub fn hypercube_walk_hamiltonian(cost: &DiagonalCost, gamma: f64) -> Result<LinearOp> {
    ensure(gamma > 0.0, || format!("hopping rate must be positive, got {gamma}"))?;
    let n = cost.n();
    let e = cost.materialize()?;
    let shift = gamma * n as f64;
    let diag = e.iter().map(|x| x + shift).collect();
    LinearOp::new(diag, gamma, Hopping::Transverse { n })
}

/// Glued-trees interpolation `(1-s) H_0 + s(1-s) A + s H_1` with
/// `H_0 = -|entrance><entrance|` and `H_1 = -|exit><exit|`.
pub fn glued_trees_hamiltonian(
    adjacency: &Arc<Adjacency>,
    entrance: usize,
    exit: usize,
    s: f64,
) -> Result<LinearOp> {
    ensure((0.0..=1.0).contains(&s), || format!("s = {s} outside [0, 1]"))?;
    glued_trees_general(adjacency, entrance, exit, 1.0 - s, s)
}

/// `a H_0 + a b A + b H_1`; equals the glued-trees interpolation at `a = 1 - s`, `b = s`.
pub(crate) fn glued_trees_general(
    adjacency: &Arc<Adjacency>,
    entrance: usize,
    exit: usize,
    a: f64,
    b: f64,
) -> Result<LinearOp> {
    let dim = adjacency.vertex_count();
    ensure(entrance < dim && exit < dim, || format!("entrance/exit outside graph of {dim} vertices"))?;
    ensure(entrance != exit, || "entrance and exit coincide".into())?;
    let mut diag = vec![0.0; dim];
    diag[entrance] -= a;
    diag[exit] -= b;
    LinearOp::new(diag, a * b, Hopping::Graph(adjacency.clone()))
}

/// `H_init = -sum_i s_i Z_i` for a `+-1` initial configuration, as a diagonal.
pub fn init_hamiltonian_diag(init_spins: &[i8]) -> Result<Vec<f64>> {
    let n = init_spins.len();
    check_materializable(n)?;
    ensure(init_spins.iter().all(|&s| s == 1 || s == -1), || "initial spins must be +1 or -1".into())?;
    Ok((0..1usize << n)
        .map(|x| -(0..n).map(|i| init_spins[i] as f64 * spin(x, n, i)).sum::<f64>())
        .collect())
}

/// Adiabatic reverse annealing Hamiltonian
/// `Gamma lambda a H_X + b H_Z + (1 - lambda) c H_init`.
#[allow(clippy::too_many_arguments)]
pub fn ara_hamiltonian(
    problem: &SpinProblem,
    init_spins: &[i8],
    gamma: f64,
    lambda: f64,
    c: f64,
    a: f64,
    b: f64,
) -> Result<LinearOp> {
    ensure(init_spins.len() == problem.n(), || "initial configuration length mismatch".into())?;
    ensure((0.0..=1.0).contains(&lambda), || format!("lambda = {lambda} outside [0, 1]"))?;
    let hz = DiagonalCost::from_problem(problem)?.materialize()?;
    let hinit = init_hamiltonian_diag(init_spins)?;
    let diag = hz
        .iter()
        .zip(&hinit)
        .map(|(z, i)| b * z + (1.0 - lambda) * c * i)
        .collect();
    LinearOp::new(diag, gamma * lambda * a, Hopping::Transverse { n: problem.n() })
}

/// Convert bits to `+-1` spins (bit 0 -> +1).
pub fn bits_to_spins(config: &[u8]) -> Vec<i8> {
    config.iter().map(|&b| if b == 0 { 1 } else { -1 }).collect()
}
