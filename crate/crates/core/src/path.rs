//! Hamiltonian paths: maps from control values to operators.
//!
//! An [`Assembler`] turns the instantaneous [`Controls`] of a schedule into a
//! [`LinearOp`]. All operators produced by one assembler share a hopping
//! structure, so integrators can combine them linearly.

use std::sync::Arc;

use crate::error::{ensure, Result};
use crate::ising::{
    bits_to_spins, init_hamiltonian_diag, symmetric_reduce, Adjacency, DiagonalCost, Hopping, LinearOp,
    SpinProblem, SymmetricProblem,
};
use crate::schedule::{Controls, Schedule};

pub trait Assembler: Send + Sync {
    fn dim(&self) -> usize;

    fn assemble(&self, c: &Controls) -> Result<LinearOp>;

    /// `(dH/ds, d^2H/ds^2)` given the controls and their first and second
    /// derivatives. The default is exact for assemblers linear in the controls.
    fn derivatives(&self, _c: &Controls, d1: &Controls, d2: &Controls) -> Result<(LinearOp, LinearOp)> {
        Ok((self.assemble(d1)?, self.assemble(d2)?))
    }

    /// `H(s)` along a schedule.
    fn at(&self, schedule: &Schedule, s: f64) -> Result<LinearOp> {
        self.assemble(&schedule.controls(s))
    }
}

/// `A H_X + B H_Z` over the full `2^n` space.
#[derive(Debug, Clone)]
pub struct TimAssembler {
    n: usize,
    energies: Arc<[f64]>,
}

impl TimAssembler {
    pub fn new(problem: &SpinProblem) -> Result<Self> {
        Self::from_cost(&DiagonalCost::from_problem(problem)?)
    }

    pub fn from_cost(cost: &DiagonalCost) -> Result<Self> {
        Ok(Self { n: cost.n(), energies: cost.materialize()? })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

impl Assembler for TimAssembler {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn assemble(&self, c: &Controls) -> Result<LinearOp> {
        let diag = self.energies.iter().map(|e| c.b * e).collect();
        LinearOp::new(diag, c.a, Hopping::Transverse { n: self.n })
    }
}

/// `A H_X + B H_Z + C H_init` with `H_init = -sum_i s_i Z_i` for a classical
/// starting configuration; the Hamiltonian of sombrero reverse annealing.
#[derive(Debug, Clone)]
pub struct ReverseAssembler {
    n: usize,
    energies: Arc<[f64]>,
    init: Vec<f64>,
}

impl ReverseAssembler {
    /// `init_bits` uses the bit convention of the cost (bit 0 is spin up).
    pub fn new(cost: &DiagonalCost, init_bits: &[u8]) -> Result<Self> {
        ensure(init_bits.len() == cost.n(), || {
            format!("initial configuration has {} bits, problem has {}", init_bits.len(), cost.n())
        })?;
        Ok(Self {
            n: cost.n(),
            energies: cost.materialize()?,
            init: init_hamiltonian_diag(&bits_to_spins(init_bits))?,
        })
    }
}

impl Assembler for ReverseAssembler {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn assemble(&self, c: &Controls) -> Result<LinearOp> {
        let diag = self.energies.iter().zip(&self.init).map(|(e, i)| c.b * e + c.c * i).collect();
        LinearOp::new(diag, c.a, Hopping::Transverse { n: self.n })
    }
}

/// `Gamma lambda A H_X + B H_Z + (1 - lambda) C H_init`.
#[derive(Debug, Clone)]
pub struct AraAssembler {
    n: usize,
    gamma: f64,
    energies: Arc<[f64]>,
    init: Vec<f64>,
}

impl AraAssembler {
    pub fn new(cost: &DiagonalCost, init_bits: &[u8], gamma: f64) -> Result<Self> {
        ensure(gamma.is_finite(), || "transverse prefactor must be finite".into())?;
        let inner = ReverseAssembler::new(cost, init_bits)?;
        Ok(Self { n: inner.n, gamma, energies: inner.energies, init: inner.init })
    }

    fn combine(&self, x: f64, b: f64, ci: f64) -> Result<LinearOp> {
        let diag = self.energies.iter().zip(&self.init).map(|(e, i)| b * e + ci * i).collect();
        LinearOp::new(diag, self.gamma * x, Hopping::Transverse { n: self.n })
    }
}

impl Assembler for AraAssembler {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn assemble(&self, c: &Controls) -> Result<LinearOp> {
        self.combine(c.lambda * c.a, c.b, (1.0 - c.lambda) * c.c)
    }

    fn derivatives(&self, c: &Controls, d1: &Controls, d2: &Controls) -> Result<(LinearOp, LinearOp)> {
        let h1 = self.combine(
            d1.lambda * c.a + c.lambda * d1.a,
            d1.b,
            (1.0 - c.lambda) * d1.c - d1.lambda * c.c,
        )?;
        let h2 = self.combine(
            d2.lambda * c.a + 2.0 * d1.lambda * d1.a + c.lambda * d2.a,
            d2.b,
            (1.0 - c.lambda) * d2.c - 2.0 * d1.lambda * d1.c - d2.lambda * c.c,
        )?;
        Ok((h1, h2))
    }
}

/// `A H_X + B H_Z` restricted to the Hamming-weight basis.
#[derive(Debug, Clone)]
pub struct SymmetricAssembler {
    problem: SymmetricProblem,
}

impl SymmetricAssembler {
    pub fn new(problem: SymmetricProblem) -> Self {
        Self { problem }
    }

    pub fn problem(&self) -> &SymmetricProblem {
        &self.problem
    }
}

impl Assembler for SymmetricAssembler {
    fn dim(&self) -> usize {
        self.problem.n() + 1
    }

    fn assemble(&self, c: &Controls) -> Result<LinearOp> {
        Ok(symmetric_reduce(&self.problem, c.a, c.b))
    }
}

/// `A H_0 + A B adj + B H_1` with `H_0 = -|entrance><entrance|`,
/// `H_1 = -|exit><exit|`; with `A = 1 - s`, `B = s` this is the glued-trees
/// interpolation.
#[derive(Debug, Clone)]
pub struct GluedTreesAssembler {
    adjacency: Arc<Adjacency>,
    entrance: usize,
    exit: usize,
}

impl GluedTreesAssembler {
    pub fn new(adjacency: Arc<Adjacency>, entrance: usize, exit: usize) -> Result<Self> {
        crate::ising::glued_trees_general(&adjacency, entrance, exit, 1.0, 0.0)?;
        Ok(Self { adjacency, entrance, exit })
    }

    fn combine(&self, x0: f64, xa: f64, x1: f64) -> Result<LinearOp> {
        let mut diag = vec![0.0; self.adjacency.vertex_count()];
        diag[self.entrance] -= x0;
        diag[self.exit] -= x1;
        LinearOp::new(diag, xa, Hopping::Graph(self.adjacency.clone()))
    }
}

impl Assembler for GluedTreesAssembler {
    fn dim(&self) -> usize {
        self.adjacency.vertex_count()
    }

    fn assemble(&self, c: &Controls) -> Result<LinearOp> {
        self.combine(c.a, c.a * c.b, c.b)
    }

    fn derivatives(&self, c: &Controls, d1: &Controls, d2: &Controls) -> Result<(LinearOp, LinearOp)> {
        let h1 = self.combine(d1.a, d1.a * c.b + c.a * d1.b, d1.b)?;
        let h2 = self.combine(d2.a, d2.a * c.b + 2.0 * d1.a * d1.b + c.a * d2.b, d2.b)?;
        Ok((h1, h2))
    }
}

/// A fixed operator regardless of the controls.
#[derive(Debug, Clone)]
pub struct ConstantAssembler {
    op: LinearOp,
}

impl ConstantAssembler {
    pub fn new(op: LinearOp) -> Self {
        Self { op }
    }
}

impl Assembler for ConstantAssembler {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn assemble(&self, _c: &Controls) -> Result<LinearOp> {
        Ok(self.op.clone())
    }

    fn derivatives(&self, _c: &Controls, _d1: &Controls, _d2: &Controls) -> Result<(LinearOp, LinearOp)> {
        let zero = self.op.scaled(0.0);
        Ok((zero.clone(), zero))
    }
}
