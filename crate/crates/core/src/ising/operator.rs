//! Structured real-symmetric operators.
//!
//! Every Hamiltonian in this crate is a real diagonal plus a scalar multiple of
//! one fixed off-diagonal "hopping" structure: the transverse field, a graph
//! adjacency matrix, or the reduced transverse field in the Hamming-weight
//! basis. Storing that split keeps `apply` at `O(dim * degree)` and lets time
//! steppers form linear combinations of operators at different `s` cheaply.

use std::ops::{AddAssign, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{contract, Error, Result};

/// Largest dimension that will be materialized as a dense matrix.
pub const DENSE_LIMIT: usize = 1 << 14;

/// Sparse symmetric 0/1 adjacency structure stored as neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    /// Build from an undirected edge list. Duplicate edges and self loops are rejected.
    pub fn from_edges(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); vertices];
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(contract(format!("edge ({u}, {v}) out of range for {vertices} vertices")));
            }
            if u == v {
                return Err(contract(format!("self loop at vertex {u}")));
            }
            if neighbors[u].contains(&v) {
                return Err(contract(format!("duplicate edge ({u}, {v})")));
            }
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { neighbors })
    }

    pub fn vertex_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.neighbors.iter().enumerate() {
            for &v in list {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// The off-diagonal structure shared by a family of operators.
#[derive(Debug, Clone)]
pub enum Hopping {
    /// `H_X = -sum_i X_i` on `n` qubits.
    Transverse { n: usize },
    /// A graph adjacency matrix (entries +1 on edges).
    Graph(Arc<Adjacency>),
    /// `H_X` restricted to the permutation-symmetric subspace of `n` qubits,
    /// `off[w] = <w+1|H_X|w> = -sqrt((w+1)(n-w))`.
    Dicke { n: usize, off: Arc<[f64]> },
}

impl Hopping {
    pub fn dicke(n: usize) -> Self {
        let off: Vec<f64> = (0..n)
            .map(|w| -(((w + 1) * (n - w)) as f64).sqrt())
            .collect();
        Hopping::Dicke { n, off: off.into() }
    }

    pub fn dim(&self) -> usize {
        match self {
            Hopping::Transverse { n } => 1usize << n,
            Hopping::Graph(adj) => adj.vertex_count(),
            Hopping::Dicke { n, .. } => n + 1,
        }
    }

    fn same_structure(&self, other: &Hopping) -> bool {
        match (self, other) {
            (Hopping::Transverse { n: a }, Hopping::Transverse { n: b }) => a == b,
            (Hopping::Graph(a), Hopping::Graph(b)) => Arc::ptr_eq(a, b) || a == b,
            (Hopping::Dicke { n: a, .. }, Hopping::Dicke { n: b, .. }) => a == b,
            _ => false,
        }
    }

    /// Largest absolute row sum, used for Gershgorin bounds.
    fn max_row_sum(&self) -> f64 {
        match self {
            Hopping::Transverse { n } => *n as f64,
            Hopping::Graph(adj) => (0..adj.vertex_count())
                .map(|v| adj.degree(v))
                .max()
                .unwrap_or(0) as f64,
            Hopping::Dicke { off, .. } => {
                let len = off.len();
                (0..=len)
                    .map(|w| {
                        let below = if w > 0 { off[w - 1].abs() } else { 0.0 };
                        let above = if w < len { off[w].abs() } else { 0.0 };
                        below + above
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `y += coeff * Hop * x`.
    fn accumulate<T>(&self, coeff: f64, x: &[T], y: &mut [T])
    where
        T: Copy + AddAssign + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        match self {
            Hopping::Transverse { n } => {
                let neg = -coeff;
                // Low bits are handled block by block while the block is in cache.
                let low = (*n).min(CACHE_BLOCK_BITS);
                let first = if low >= 3 { 3 } else { 0 };
                for (xb, yb) in x.chunks_exact(1 << low).zip(y.chunks_exact_mut(1 << low)) {
                    if first == 3 {
                        for (c, o) in xb.chunks_exact(8).zip(yb.chunks_exact_mut(8)) {
                            for j in 0..8 {
                                let mut acc = c[j ^ 1];
                                acc += c[j ^ 2];
                                acc += c[j ^ 4];
                                o[j] += acc * neg;
                            }
                        }
                    }
                    for k in first..low {
                        butterfly(1 << k, neg, xb, yb);
                    }
                }
                for k in low..*n {
                    butterfly(1 << k, neg, x, y);
                }
            }
            Hopping::Graph(adj) => {
                for (v, yv) in y.iter_mut().enumerate() {
                    let mut acc = T::default();
                    for &u in adj.neighbors(v) {
                        acc += x[u];
                    }
                    *yv += acc * coeff;
                }
            }
            Hopping::Dicke { off, .. } => {
                let last = off.len();
                for w in 0..=last {
                    let mut acc = T::default();
                    if w > 0 {
                        acc += x[w - 1] * off[w - 1];
                    }
                    if w < last {
                        acc += x[w + 1] * off[w];
                    }
                    y[w] += acc * coeff;
                }
            }
        }
    }

    fn write_dense(&self, coeff: f64, m: &mut DMatrix<f64>) {
        match self {
            Hopping::Transverse { n } => {
                for i in 0..m.nrows() {
                    for k in 0..*n {
                        m[(i, i ^ (1usize << k))] -= coeff;
                    }
                }
            }
            Hopping::Graph(adj) => {
                for v in 0..adj.vertex_count() {
                    for &u in adj.neighbors(v) {
                        m[(v, u)] += coeff;
                    }
                }
            }
            Hopping::Dicke { off, .. } => {
                for (w, &o) in off.iter().enumerate() {
                    m[(w + 1, w)] += coeff * o;
                    m[(w, w + 1)] += coeff * o;
                }
            }
        }
    }
}

const CACHE_BLOCK_BITS: usize = 11;

/// `y[i] += w x[i ^ half]` for a power-of-two `half`.
fn butterfly<T>(half: usize, w: f64, x: &[T], y: &mut [T])
where
    T: Copy + AddAssign + Mul<f64, Output = T>,
{
    for (xb, yb) in x.chunks_exact(2 * half).zip(y.chunks_exact_mut(2 * half)) {
        let (x0, x1) = xb.split_at(half);
        let (y0, y1) = yb.split_at_mut(half);
        for (yi, &xi) in y0.iter_mut().zip(x1) {
            *yi += xi * w;
        }
        for (yi, &xi) in y1.iter_mut().zip(x0) {
            *yi += xi * w;
        }
    }
}

/// A Hermitian operator `diag + coeff * Hop`.
#[derive(Debug, Clone)]
pub struct LinearOp {
    diag: Vec<f64>,
    hopping: Option<(f64, Hopping)>,
    hermitian: bool,
}

impl LinearOp {
    pub fn diagonal(diag: Vec<f64>) -> Self {
        Self { diag, hopping: None, hermitian: true }
    }

    /// `diag + coeff * hopping`. The diagonal length must match the hopping dimension.
    pub fn new(diag: Vec<f64>, coeff: f64, hopping: Hopping) -> Result<Self> {
        if diag.len() != hopping.dim() {
            return Err(contract(format!(
                "diagonal length {} does not match hopping dimension {}",
                diag.len(),
                hopping.dim()
            )));
        }
        Ok(Self { diag, hopping: Some((coeff, hopping)), hermitian: true })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn hopping(&self) -> Option<(f64, &Hopping)> {
        self.hopping.as_ref().map(|(c, h)| (*c, h))
    }

    pub fn is_diagonal(&self) -> bool {
        self.hopping.as_ref().is_none_or(|(c, _)| *c == 0.0)
    }

    fn apply_generic<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + AddAssign + Sub<Output = T> + Mul<f64, Output = T> + Default,
    {
        assert_eq!(x.len(), self.dim(), "operator dimension mismatch");
        assert_eq!(y.len(), self.dim(), "operator dimension mismatch");
        for ((yi, &xi), &d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * d;
        }
        if let Some((coeff, hop)) = &self.hopping {
            if *coeff != 0.0 {
                hop.accumulate(*coeff, x, y);
            }
        }
    }

    /// `y = H x` on complex amplitudes.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.apply_generic(x, y);
    }

    /// `y = H x` on real vectors.
    pub fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        self.apply_generic(x, y);
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::default(); self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// `<x|H|x>` (not normalized by `<x|x>`).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let hx = self.apply_vec(x);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense materialization, refused above [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::Resource(format!("dense materialization of dimension {dim}")));
        }
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        if let Some((coeff, hop)) = &self.hopping {
            hop.write_dense(*coeff, &mut m);
        }
        Ok(m)
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let radius = self
            .hopping
            .as_ref()
            .map(|(c, h)| c.abs() * h.max_row_sum())
            .unwrap_or(0.0);
        let (lo, hi) = self
            .diag
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| (lo.min(d), hi.max(d)));
        (lo - radius, hi + radius)
    }

    /// Upper bound on the spectral norm from the Gershgorin disc.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.spectral_bounds();
        lo.abs().max(hi.abs())
    }

    /// Linear combination `sum_k w_k H_k` of operators sharing one hopping structure.
    pub fn combine(terms: &[(f64, &LinearOp)]) -> Result<LinearOp> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| contract("empty operator combination"))?;
        let dim = first.dim();
        let mut diag = vec![0.0; dim];
        let mut hopping: Option<(f64, Hopping)> = None;
        for &(w, op) in terms {
            if op.dim() != dim {
                return Err(contract("operator dimensions differ in combination"));
            }
            for (d, &x) in diag.iter_mut().zip(&op.diag) {
                *d += w * x;
            }
            if let Some((c, h)) = &op.hopping {
                match &mut hopping {
                    None => hopping = Some((w * c, h.clone())),
                    Some((acc, existing)) => {
                        if !existing.same_structure(h) {
                            return Err(contract("operators have different hopping structures"));
                        }
                        *acc += w * c;
                    }
                }
            }
        }
        Ok(LinearOp { diag, hopping, hermitian: true })
    }

    pub fn scaled(&self, w: f64) -> LinearOp {
        LinearOp {
            diag: self.diag.iter().map(|d| d * w).collect(),
            hopping: self.hopping.as_ref().map(|(c, h)| (c * w, h.clone())),
            hermitian: self.hermitian,
        }
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> LinearOp {
        LinearOp {
            diag: self.diag.iter().map(|d| d + shift).collect(),
            hopping: self.hopping.clone(),
            hermitian: self.hermitian,
        }
    }
}
