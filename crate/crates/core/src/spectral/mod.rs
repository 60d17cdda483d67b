//! Instantaneous spectra, gaps, the adiabatic error bound and thermal states.

pub mod lanczos;
mod thermal;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::evolve::Trajectory;
use crate::ising::LinearOp;
use crate::path::Assembler;
use crate::schedule::Schedule;

pub use lanczos::{lowest_eigenpairs, LanczosOptions};
pub use thermal::{beta_for_target, ground_projector, thermal_state, trace_distance, ThermalState};

/// Largest dimension solved densely when the solver is [`Solver::Auto`].
pub const DENSE_EIGEN_LIMIT: usize = 256;

/// Default residual above which an eigenpair is reported as unconverged.
pub const RESIDUAL_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense below [`DENSE_EIGEN_LIMIT`] or when most of the spectrum is requested.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub solver: Solver,
    pub lanczos: LanczosOptions,
    /// Largest accepted `||H v - E v||`.
    pub residual_limit: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { solver: Solver::Auto, lanczos: LanczosOptions::default(), residual_limit: RESIDUAL_LIMIT }
    }
}

/// Lowest eigenpairs of one operator, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `||H v - E v||` per pair.
    pub residuals: Vec<f64>,
}

impl Spectrum {
    /// `E_d - E_{d-1}`.
    pub fn gap(&self, d: usize) -> f64 {
        self.values[d] - self.values[d - 1]
    }

    /// `E_{d-1} - E_0`.
    pub fn band_width(&self, d: usize) -> f64 {
        self.values[d - 1] - self.values[0]
    }

    /// `<v_k | psi>` for a complex state.
    pub fn overlap(&self, k: usize, psi: &[Complex64]) -> Complex64 {
        self.vectors[k].iter().zip(psi).map(|(v, p)| p * v).sum()
    }
}

/// A [`Spectrum`] of `H(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub s: f64,
    pub spectrum: Spectrum,
}

pub fn spectrum_at(h: &LinearOp, k: usize) -> Result<Spectrum> {
    spectrum_with(h, k, &EigenOptions::default(), &[])
}

/// Lowest `k` eigenpairs; `guesses` warm-start the iterative solver.
pub fn spectrum_with(h: &LinearOp, k: usize, opts: &EigenOptions, guesses: &[Vec<f64>]) -> Result<Spectrum> {
    let dim = h.dim();
    ensure(k >= 1 && k <= dim, || format!("requested {k} levels of a {dim}-dimensional operator"))?;
    let dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => h.is_diagonal() || dim <= DENSE_EIGEN_LIMIT || 4 * k > dim,
    };
    let (values, vectors) = if dense {
        dense_lowest(h, k)?
    } else {
        lowest_eigenpairs(h, k, guesses, &opts.lanczos)?
    };
    let mut work = vec![0.0; dim];
    let residuals: Vec<f64> = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| lanczos::residual(h, e, v, &mut work))
        .collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if !(worst < opts.residual_limit) {
        return Err(Error::NotConverged { worst_residual: worst });
    }
    Ok(Spectrum { values, vectors, residuals })
}

fn dense_lowest(h: &LinearOp, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if h.is_diagonal() {
        let d = h.diag();
        let mut idx: Vec<usize> = (0..d.len()).collect();
        idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        idx.truncate(k);
        let vals = idx.iter().map(|&i| d[i]).collect();
        let vecs = idx
            .iter()
            .map(|&i| {
                let mut v = vec![0.0; d.len()];
                v[i] = 1.0;
                v
            })
            .collect();
        return Ok((vals, vecs));
    }
    let eig = h.to_dense()?.symmetric_eigen();
    let mut idx: Vec<usize> = (0..h.dim()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    idx.truncate(k);
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect();
    Ok((vals, vecs))
}

pub fn frame_at(
    asm: &dyn Assembler,
    schedule: &Schedule,
    s: f64,
    k: usize,
    opts: &EigenOptions,
    guesses: &[Vec<f64>],
) -> Result<SpectralFrame> {
    let h = asm.at(schedule, s)?;
    Ok(SpectralFrame { s, spectrum: spectrum_with(&h, k, opts, guesses)? })
}

/// Band gap `Delta(s) = E_d - E_{d-1}` and band width `delta(s) = E_{d-1} - E_0` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub s: Vec<f64>,
    pub gap: Vec<f64>,
    pub band_width: Vec<f64>,
}

impl GapProfile {
    /// CSV with columns `s,gap,band_width`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,gap,band_width\n");
        for ((s, g), w) in self.s.iter().zip(&self.gap).zip(&self.band_width) {
            out.push_str(&format!("{s},{g},{w}\n"));
        }
        out
    }
}

pub fn gap_profile(asm: &dyn Assembler, schedule: &Schedule, grid: &[f64], d: usize) -> Result<GapProfile> {
    gap_profile_with(asm, schedule, grid, d, &EigenOptions::default())
}

pub fn gap_profile_with(
    asm: &dyn Assembler,
    schedule: &Schedule,
    grid: &[f64],
    d: usize,
    opts: &EigenOptions,
) -> Result<GapProfile> {
    ensure(d >= 1, || "band must hold at least one level".into())?;
    ensure(d < asm.dim(), || format!("band of {d} levels leaves no gap in dimension {}", asm.dim()))?;
    let mut profile = GapProfile { s: Vec::new(), gap: Vec::new(), band_width: Vec::new() };
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    for &s in grid {
        let f = frame_at(asm, schedule, s, d + 1, opts, &guesses)?;
        profile.s.push(s);
        profile.gap.push(f.spectrum.gap(d));
        profile.band_width.push(f.spectrum.band_width(d));
        guesses = f.spectrum.vectors;
    }
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinGapOptions {
    /// Golden-section termination width in `s`.
    pub resolution: f64,
    pub eigen: EigenOptions,
}

impl MinGapOptions {
    pub fn new(resolution: f64) -> Self {
        Self { resolution, eigen: EigenOptions::default() }
    }
}

impl Default for MinGapOptions {
    fn default() -> Self {
        Self::new(1e-5)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub s: f64,
    pub gap: f64,
    /// The minimum sits on an end of the scanned interval.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinGapResult {
    pub global: GapPoint,
    /// Every refined local minimum of the coarse scan, in order of `s`.
    pub local: Vec<GapPoint>,
    pub coarse: GapProfile,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Coarse scan of `Delta(s)` followed by golden-section refinement of every
/// coarse local minimum.
pub fn min_gap(
    asm: &dyn Assembler,
    schedule: &Schedule,
    d: usize,
    coarse_grid: &[f64],
    opts: &MinGapOptions,
) -> Result<MinGapResult> {
    ensure(coarse_grid.len() >= 2, || "coarse grid needs at least two points".into())?;
    ensure(coarse_grid.windows(2).all(|w| w[0] < w[1]), || "coarse grid must be increasing".into())?;
    ensure(opts.resolution > 0.0, || "refinement resolution must be positive".into())?;
    let resolution = opts.resolution;
    let coarse = gap_profile_with(asm, schedule, coarse_grid, d, &opts.eigen)?;
    let g = &coarse.gap;
    let last = g.len() - 1;
    let mut local = Vec::new();
    for i in 0..=last {
        let left_ok = i == 0 || g[i] < g[i - 1];
        let right_ok = i == last || g[i] <= g[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = coarse_grid[i.saturating_sub(1)];
        let hi = coarse_grid[(i + 1).min(last)];
        let mut best = (coarse_grid[i], g[i]);
        let mut guesses: Vec<Vec<f64>> = Vec::new();
        let eval = |s: f64, guesses: &mut Vec<Vec<f64>>| -> Result<f64> {
            let f = frame_at(asm, schedule, s, d + 1, &opts.eigen, guesses)?;
            let gap = f.spectrum.gap(d);
            *guesses = f.spectrum.vectors;
            Ok(gap)
        };
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - GOLDEN * (b - a);
        let mut x2 = a + GOLDEN * (b - a);
        let mut f1 = eval(x1, &mut guesses)?;
        let mut f2 = eval(x2, &mut guesses)?;
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best.1 {
                best = (x, f);
            }
        }
        while b - a > resolution {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - GOLDEN * (b - a);
                f1 = eval(x1, &mut guesses)?;
                if f1 < best.1 {
                    best = (x1, f1);
                }
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + GOLDEN * (b - a);
                f2 = eval(x2, &mut guesses)?;
                if f2 < best.1 {
                    best = (x2, f2);
                }
            }
        }
        let boundary = (i == 0 || i == last) && best.0 == coarse_grid[i];
        local.push(GapPoint { s: best.0, gap: best.1, boundary });
    }
    let global = *local
        .iter()
        .min_by(|a, b| a.gap.total_cmp(&b.gap))
        .ok_or_else(|| Error::Numeric("gap scan produced no minimum".into()))?;
    Ok(MinGapResult { global, local, coarse })
}

/// Spectral norm by power iteration (exact for diagonal operators).
pub fn spectral_norm(op: &LinearOp, max_iter: usize, rel_tol: f64) -> f64 {
    if op.is_diagonal() {
        return op.diag().iter().fold(0.0, |m, d| m.max(d.abs()));
    }
    let dim = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6e6f_726d);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nv = lanczos::norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; dim];
    let mut est = 0.0;
    for _ in 0..max_iter {
        op.apply_real(&v, &mut w);
        let next = lanczos::norm(&w);
        if next == 0.0 {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / next;
        }
        let done = (next - est).abs() <= rel_tol * next;
        est = next;
        if done {
            break;
        }
    }
    est
}

/// The adiabatic error bound `xi(s)` and its ingredients on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiProfile {
    pub s: Vec<f64>,
    pub xi: Vec<f64>,
    pub gap: Vec<f64>,
    pub norm_h1: Vec<f64>,
    pub norm_h2: Vec<f64>,
}

/// The adiabatic error bound
/// `xi(s) = d||H'||/Delta^2 (0) + d||H'||/Delta^2 (s)
///        + int_0^s (d||H''||/Delta^2 + 7 d sqrt(d) ||H'||^2/Delta^3) ds'`
/// with derivatives in `s`, spectral norms by power iteration and the
/// integral by the trapezoid rule on `grid`, which must start at 0.
pub fn adiabatic_xi(asm: &dyn Assembler, schedule: &Schedule, d: usize, grid: &[f64]) -> Result<XiProfile> {
    ensure(!grid.is_empty() && grid[0] == 0.0, || "quadrature grid must start at s = 0".into())?;
    ensure(grid.windows(2).all(|w| w[0] < w[1]), || "quadrature grid must be increasing".into())?;
    ensure(d >= 1 && d < asm.dim(), || format!("invalid band size {d}"))?;
    if !schedule.is_smooth() {
        schedule.control_derivatives(0.5, 1)?;
        return Err(Error::NotDifferentiable("schedule".into()));
    }
    let opts = EigenOptions::default();
    let df = d as f64;
    let mut out = XiProfile { s: Vec::new(), xi: Vec::new(), gap: Vec::new(), norm_h1: Vec::new(), norm_h2: Vec::new() };
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    let mut integrand = Vec::with_capacity(grid.len());
    for &s in grid {
        let f = frame_at(asm, schedule, s, d + 1, &opts, &guesses)?;
        let gap = f.spectrum.gap(d);
        if !(gap >= 1e-12) {
            return Err(Error::SingularGap { s, gap });
        }
        guesses = f.spectrum.vectors;
        let c = schedule.controls(s);
        let d1 = schedule.control_derivatives(s, 1)?;
        let d2 = schedule.control_derivatives(s, 2)?;
        let (h1, h2) = asm.derivatives(&c, &d1, &d2)?;
        let n1 = spectral_norm(&h1, 200, 1e-8);
        let n2 = spectral_norm(&h2, 200, 1e-8);
        integrand.push(df * n2 / (gap * gap) + 7.0 * df * df.sqrt() * n1 * n1 / gap.powi(3));
        out.s.push(s);
        out.gap.push(gap);
        out.norm_h1.push(n1);
        out.norm_h2.push(n2);
    }
    let boundary0 = df * out.norm_h1[0] / out.gap[0].powi(2);
    let mut integral = 0.0;
    for i in 0..grid.len() {
        if i > 0 {
            integral += 0.5 * (integrand[i] + integrand[i - 1]) * (grid[i] - grid[i - 1]);
        }
        let boundary = df * out.norm_h1[i] / out.gap[i].powi(2);
        out.xi.push(boundary0 + boundary + integral);
    }
    Ok(out)
}

/// `1 - sum_{k<d} |<phi_k(s)|psi(s)>|^2` at every stored grid point.
pub fn leakage(trajectory: &Trajectory, asm: &dyn Assembler, d: usize) -> Result<Vec<f64>> {
    let states = trajectory.states()?;
    let schedule = trajectory.schedule();
    let opts = EigenOptions::default();
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::with_capacity(states.len());
    for (&s, psi) in trajectory.grid().iter().zip(states) {
        let f = frame_at(asm, schedule, s, d, &opts, &guesses)?;
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let inside: f64 = (0..d).map(|k| f.spectrum.overlap(k, psi).norm_sqr()).sum();
        out.push((norm2 - inside).max(0.0));
        guesses = f.spectrum.vectors;
    }
    Ok(out)
}

/// Per-level populations with eigenvector tracking diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    pub s: Vec<f64>,
    pub levels: Vec<usize>,
    /// `values[j][i]`: population of `levels[j]` at `s[i]`.
    pub values: Vec<Vec<f64>>,
    /// Frames where maximal-overlap matching with the previous frame was
    /// ambiguous or reordered levels.
    pub flagged: Vec<bool>,
}

impl Populations {
    /// CSV with columns `s,observable,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,observable,value\n");
        for (i, s) in self.s.iter().enumerate() {
            for (j, l) in self.levels.iter().enumerate() {
                out.push_str(&format!("{s},population_{l},{}\n", self.values[j][i]));
            }
        }
        out
    }
}

/// `|<phi_k(s)|psi(s)>|^2` for the requested energy-ordered levels.
pub fn populations(trajectory: &Trajectory, asm: &dyn Assembler, levels: &[usize]) -> Result<Populations> {
    ensure(!levels.is_empty(), || "no levels requested".into())?;
    let k = levels.iter().max().unwrap() + 1;
    ensure(k <= asm.dim(), || format!("level {} exceeds dimension {}", k - 1, asm.dim()))?;
    let states = trajectory.states()?;
    let schedule = trajectory.schedule();
    let opts = EigenOptions::default();
    let mut out = Populations {
        s: trajectory.grid().to_vec(),
        levels: levels.to_vec(),
        values: vec![Vec::with_capacity(states.len()); levels.len()],
        flagged: Vec::with_capacity(states.len()),
    };
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for (&s, psi) in trajectory.grid().iter().zip(states) {
        let mut f = frame_at(asm, schedule, s, k, &opts, prev.as_deref().unwrap_or(&[]))?;
        let flagged = match &prev {
            Some(p) => track(p, &mut f.spectrum.vectors),
            None => false,
        };
        out.flagged.push(flagged);
        for (j, &l) in levels.iter().enumerate() {
            out.values[j].push(f.spectrum.overlap(l, psi).norm_sqr());
        }
        prev = Some(f.spectrum.vectors);
    }
    Ok(out)
}

/// Align eigenvector signs with the previous frame by maximal overlap; returns
/// true when the matching is ambiguous (overlap matrix condition number above
/// 10) or is not the identity.
fn track(prev: &[Vec<f64>], cur: &mut [Vec<f64>]) -> bool {
    let k = cur.len();
    let overlaps = DMatrix::from_fn(k, k, |i, j| lanczos::dot(&prev[i], &cur[j]));
    let mut flagged = false;
    for j in 0..k {
        let best = (0..k)
            .max_by(|&a, &b| overlaps[(a, j)].abs().total_cmp(&overlaps[(b, j)].abs()))
            .unwrap_or(j);
        if best != j {
            flagged = true;
        }
        if overlaps[(j, j)] < 0.0 {
            cur[j].iter_mut().for_each(|x| *x = -*x);
        }
    }
    let sv = overlaps.abs().singular_values();
    let (hi, lo) = sv.iter().fold((0.0f64, f64::INFINITY), |(h, l), &x| (h.max(x), l.min(x)));
    flagged || !(hi <= 10.0 * lo)
}
