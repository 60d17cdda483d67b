//! Seeded problem generators.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed.
//! The random stream is ChaCha8 keyed by the seed mixed with a per-generator
//! identifier, so two generators given the same seed never share a stream.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::ising::{check_materializable, Adjacency, DiagonalCost, SpinProblem};
use crate::path::TimAssembler;
use crate::schedule::Schedule;
use crate::spectral::{min_gap, MinGapOptions};

/// Seed plus the identifier of the algorithm that consumed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSeed {
    pub seed: u64,
    pub algorithm: String,
}

impl InstanceSeed {
    pub fn new(algorithm: &str, seed: u64) -> Self {
        Self { seed, algorithm: algorithm.to_string() }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        seeded_rng(&self.algorithm, self.seed)
    }
}

pub const MAX2SAT_ID: &str = "max2sat/v1";
pub const SK_ID: &str = "sk/v1";
pub const REM_ID: &str = "rem/v1";
pub const GLUED_TREES_ID: &str = "glued-trees/v1";
pub const MAXCUT3_ID: &str = "maxcut-3reg/v1";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic RNG for `(algorithm, seed)`.
pub fn seeded_rng(algorithm: &str, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ fnv1a(algorithm.as_bytes()))
}

/// A two-literal clause; `negated[k]` flips literal `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub vars: [usize; 2],
    pub negated: [bool; 2],
}

impl Clause {
    fn literal(&self, k: usize, config: &[u8]) -> bool {
        (config[self.vars[k]] == 1) != self.negated[k]
    }

    pub fn is_violated(&self, config: &[u8]) -> bool {
        !self.literal(0, config) && !self.literal(1, config)
    }
}

/// A MAX-2-SAT instance and its Ising encoding.
///
/// `cost_energy(problem, x) + offset` equals the number of violated clauses.
#[derive(Debug, Clone, PartialEq)]
pub struct Max2Sat {
    pub problem: SpinProblem,
    pub clauses: Vec<Clause>,
    pub offset: f64,
    pub seed: InstanceSeed,
}

impl Max2Sat {
    pub fn violated(&self, config: &[u8]) -> usize {
        self.clauses.iter().filter(|c| c.is_violated(config)).count()
    }

    /// Append one clause and its penalty `(1 - t_i)(1 - t_j) / 4`, where
    /// `t = -z` for a plain literal and `t = z` for a negated one.
    fn push(&mut self, clause: Clause) -> Result<()> {
        let sign = |neg: bool| if neg { 1.0 } else { -1.0 };
        let (si, sj) = (sign(clause.negated[0]), sign(clause.negated[1]));
        let [i, j] = clause.vars;
        // -h z - J z z convention
        self.problem.add_field(i, si / 4.0)?;
        self.problem.add_field(j, sj / 4.0)?;
        self.problem.add_coupling(i, j, -si * sj / 4.0)?;
        self.offset += 0.25;
        self.clauses.push(clause);
        Ok(())
    }

    /// Encode an explicit clause list.
    pub fn from_clauses(n: usize, clauses: &[Clause]) -> Result<Self> {
        let mut inst = Max2Sat {
            problem: SpinProblem::zero(n)?,
            clauses: Vec::new(),
            offset: 0.0,
            seed: InstanceSeed::new("explicit", 0),
        };
        for &c in clauses {
            ensure(c.vars[0] != c.vars[1], || "clause literals must use distinct variables".into())?;
            inst.push(c)?;
        }
        Ok(inst)
    }
}

/// Random MAX-2-SAT with `m` clauses over `n` variables.
pub fn gen_max2sat(n: usize, m: usize, seed: u64) -> Result<Max2Sat> {
    ensure(n >= 2, || format!("MAX-2-SAT needs n >= 2, got {n}"))?;
    ensure(m >= 1, || "MAX-2-SAT needs at least one clause".into())?;
    let id = InstanceSeed::new(MAX2SAT_ID, seed);
    let mut rng = id.rng();
    let mut clauses = Vec::with_capacity(m);
    for _ in 0..m {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        clauses.push(Clause { vars: [i, j], negated: [rng.gen(), rng.gen()] });
    }
    let mut inst = Max2Sat::from_clauses(n, &clauses)?;
    inst.problem.name = format!("max2sat-n{n}-m{m}-s{seed}");
    inst.seed = id;
    Ok(inst)
}

/// Sherrington-Kirkpatrick couplings `J_ij ~ N(0, 1) / sqrt(n)`, no fields.
pub fn gen_sk(n: usize, seed: u64) -> Result<SpinProblem> {
    ensure(n >= 2, || format!("SK model needs n >= 2, got {n}"))?;
    let mut rng = seeded_rng(SK_ID, seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut p = SpinProblem::zero(n)?.with_name(format!("sk-n{n}-s{seed}"));
    for i in 0..n {
        for j in i + 1..n {
            let g: f64 = rng.sample(StandardNormal);
            p.set_coupling(i, j, g * scale)?;
        }
    }
    Ok(p)
}

/// Random energy model: `2^n` i.i.d. standard normal energies.
pub fn gen_rem(n: usize, seed: u64) -> Result<DiagonalCost> {
    check_materializable(n)?;
    let mut rng = seeded_rng(REM_ID, seed);
    let e: Vec<f64> = (0..1usize << n).map(|_| rng.sample(StandardNormal)).collect();
    DiagonalCost::from_energies(e)
}

/// Random 3-regular MaxCut instance: `J = -1` on every edge, `h = 0`.
pub fn gen_maxcut_3regular(n: usize, seed: u64) -> Result<SpinProblem> {
    ensure(n >= 4 && n % 2 == 0, || format!("3-regular graphs need even n >= 4, got {n}"))?;
    let mut rng = seeded_rng(MAXCUT3_ID, seed);
    // configuration model with rejection of loops and multi-edges
    for _ in 0..10_000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(3 * n / 2);
        let mut ok = true;
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || edges.contains(&(u, v)) {
                ok = false;
                break;
            }
            edges.push((u, v));
        }
        if ok {
            let mut p = SpinProblem::zero(n)?.with_name(format!("maxcut3-n{n}-s{seed}"));
            for (u, v) in edges {
                p.set_coupling(u, v, -1.0)?;
            }
            return Ok(p);
        }
    }
    Err(Error::Numeric("failed to sample a simple 3-regular graph".into()))
}

/// Two complete binary trees of depth `d` glued leaf-to-leaf by a random cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedTreesGraph {
    pub depth: usize,
    pub adjacency: Arc<Adjacency>,
    pub entrance: usize,
    pub exit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GluedTreesDoc {
    pub depth: usize,
    pub vertices: usize,
    pub entrance: usize,
    pub exit: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GluedTreesGraph {
    pub fn vertex_count(&self) -> usize {
        self.adjacency.vertex_count()
    }

    fn tree_size(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    /// Distance-from-entrance column, `0..=2d+1`.
    pub fn column(&self, v: usize) -> usize {
        let t = self.tree_size();
        let level = |k: usize| (usize::BITS - 1 - (k + 1).leading_zeros()) as usize;
        if v < t {
            level(v)
        } else {
            2 * self.depth + 1 - level(v - t)
        }
    }

    pub fn to_doc(&self) -> GluedTreesDoc {
        GluedTreesDoc {
            depth: self.depth,
            vertices: self.vertex_count(),
            entrance: self.entrance,
            exit: self.exit,
            edges: self.adjacency.edges(),
        }
    }

    pub fn from_doc(doc: &GluedTreesDoc) -> Result<Self> {
        let adjacency = Arc::new(Adjacency::from_edges(doc.vertices, &doc.edges)?);
        let g = GluedTreesGraph { depth: doc.depth, adjacency, entrance: doc.entrance, exit: doc.exit };
        g.check()?;
        Ok(g)
    }

    /// Structural invariants: vertex count, degrees, entrance/exit degree 2.
    pub fn check(&self) -> Result<()> {
        let expect = 2 * self.tree_size();
        ensure(self.vertex_count() == expect, || {
            format!("expected {expect} vertices, found {}", self.vertex_count())
        })?;
        for v in 0..self.vertex_count() {
            let deg = self.adjacency.degree(v);
            if v == self.entrance || v == self.exit {
                ensure(deg == 2, || format!("terminal vertex {v} has degree {deg}"))?;
            } else {
                ensure(deg == 3, || format!("vertex {v} has degree {deg}"))?;
            }
        }
        Ok(())
    }
}

/// Glued-trees graph of depth `d >= 1`. Left tree vertices are `0..t` in
/// breadth-first order (root 0 is the entrance), right tree `t..2t` (root `t`
/// is the exit).
pub fn gen_glued_trees(d: usize, seed: u64) -> Result<GluedTreesGraph> {
    ensure(d >= 1, || "glued trees need depth >= 1".into())?;
    ensure(d <= 20, || format!("depth {d} is too large"))?;
    let mut rng = seeded_rng(GLUED_TREES_ID, seed);
    let t = (1usize << (d + 1)) - 1;
    let mut edges = Vec::with_capacity(2 * t + (2 << d));
    for offset in [0, t] {
        for k in 1..t {
            edges.push((offset + (k - 1) / 2, offset + k));
        }
    }
    let first_leaf = (1usize << d) - 1;
    let mut left: Vec<usize> = (first_leaf..t).collect();
    let mut right: Vec<usize> = (first_leaf + t..2 * t).collect();
    left.shuffle(&mut rng);
    right.shuffle(&mut rng);
    let leaves = left.len();
    for k in 0..leaves {
        edges.push((left[k], right[k]));
        edges.push((right[k], left[(k + 1) % leaves]));
    }
    let adjacency = Arc::new(Adjacency::from_edges(2 * t, &edges)?);
    let g = GluedTreesGraph { depth: d, adjacency, entrance: 0, exit: t };
    g.check()?;
    Ok(g)
}

/// Minimum gaps and the subset that falls below a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct HardnessReport {
    /// `(s*, gap*)` of each input problem along the linear forward schedule.
    pub min_gaps: Vec<(f64, f64)>,
    /// Indices of problems whose minimum gap is below the threshold.
    pub selected: Vec<usize>,
}

/// Minimum `E_1 - E_0` along `A = 1 - s`, `B = s`, and the problems below `gap_threshold`.
pub fn hardness_filter(
    problems: &[SpinProblem],
    gap_threshold: f64,
    grid: &[f64],
    opts: &MinGapOptions,
) -> Result<HardnessReport> {
    for p in problems {
        ensure(p.n() <= 16, || format!("hardness filter limited to n <= 16, got {}", p.n()))?;
    }
    let schedule = Schedule::linear_forward(1.0)?;
    let min_gaps = problems
        .par_iter()
        .map(|p| {
            let asm = TimAssembler::new(p)?;
            let r = min_gap(&asm, &schedule, 1, grid, opts)?;
            Ok((r.global.s, r.global.gap))
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = min_gaps
        .iter()
        .enumerate()
        .filter(|(_, (_, g))| *g < gap_threshold)
        .map(|(k, _)| k)
        .collect();
    Ok(HardnessReport { min_gaps, selected })
}

/// Threshold below which `ceil(q * len)` of `values` lie: the midpoint between
/// the k-th and (k+1)-th order statistics, so a strict `<` selects exactly k.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    if k < v.len() {
        0.5 * (v[k - 1] + v[k])
    } else {
        v[k - 1] + 1.0
    }
}
