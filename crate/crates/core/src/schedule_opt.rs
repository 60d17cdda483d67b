//! Optimal-control search over piecewise-constant schedules and QAOA angles.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::evolve::{expm_apply, qaoa_evolve, QuantumState, Workspace};
use crate::instances::seeded_rng;
use crate::ising::{assemble_diagonal, DiagonalCost};

pub const QAOA_RNG_ID: &str = "qaoa-angles/v1";

/// Central finite-difference step of the schedule gradient.
pub const FD_STEP: f64 = 1e-4;

/// Piecewise-constant control `u_k` on `m` equal slices; `H = u H_X + (1 - u) H_Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    values: Vec<f64>,
}

impl ControlVector {
    /// Values are clamped into `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure(!values.is_empty(), || "empty control vector".into())?;
        ensure(values.iter().all(|v| v.is_finite()), || "control values must be finite".into())?;
        Ok(Self { values: values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() })
    }

    pub fn constant(m: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; m])
    }

    /// Linear ramp from `H_X` to `H_Z`, sampled at slice midpoints.
    pub fn linear(m: usize) -> Result<Self> {
        Self::new((0..m).map(|k| 1.0 - (k as f64 + 0.5) / m as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `t,u`: one row per slice start plus the final time.
    pub fn to_csv(&self, total_time: f64) -> String {
        let m = self.values.len();
        let mut out = String::from("t,u\n");
        for (k, u) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{u}", total_time * k as f64 / m as f64);
        }
        let _ = writeln!(out, "{total_time},{}", self.values[m - 1]);
        out
    }
}

/// Final state of `|+>^n` under the piecewise-constant control.
pub fn evolve_control(cost: &DiagonalCost, u: &ControlVector, total_time: f64) -> Result<QuantumState> {
    ensure(total_time >= 0.0 && total_time.is_finite(), || format!("invalid total time {total_time}"))?;
    let n = cost.n();
    let tau = total_time / u.len() as f64;
    let psi0 = QuantumState::uniform(n)?;
    let mut cur = psi0.amplitudes().to_vec();
    let mut next = vec![Complex64::default(); cur.len()];
    let mut ws = Workspace::default();
    for &uk in u.values() {
        let h = assemble_diagonal(cost, uk, 1.0 - uk)?;
        expm_apply(&h, tau, &cur, &mut next, &mut ws)?;
        std::mem::swap(&mut cur, &mut next);
    }
    QuantumState::new(cur, psi0.basis())
}

fn expectation(state: &QuantumState, energies: &[f64]) -> f64 {
    state.probabilities().iter().zip(energies).map(|(p, e)| p * e).sum()
}

/// Final `<H_Z>` under the control.
pub fn control_objective(cost: &DiagonalCost, u: &ControlVector, total_time: f64) -> Result<f64> {
    let e = cost.materialize()?;
    Ok(expectation(&evolve_control(cost, u, total_time)?, &e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptimum {
    pub control: ControlVector,
    /// Objective before the first step and after every accepted or rejected step.
    pub trace: Vec<f64>,
}

/// Projected gradient descent on `<H_Z>` with central finite differences and a
/// backtracking line search. The step grows by 1.5 after each success and is
/// halved until it decreases the objective; the search stops when it falls
/// below `1e-8` of the initial step.
pub fn optimize_schedule_gd(
    cost: &DiagonalCost,
    total_time: f64,
    init: &ControlVector,
    iters: usize,
    step: f64,
) -> Result<ScheduleOptimum> {
    ensure(init.len() >= 2, || format!("need at least two control slices, got {}", init.len()))?;
    ensure(step > 0.0 && step.is_finite(), || format!("step {step} must be positive"))?;
    let objective = |u: &ControlVector| control_objective(cost, u, total_time);
    let mut u = init.clone();
    let mut f = objective(&u)?;
    let mut trace = vec![f];
    let mut alpha = step;
    for _ in 0..iters {
        let grad = (0..u.len())
            .into_par_iter()
            .map(|k| {
                let mut up = u.values.clone();
                let mut dn = u.values.clone();
                up[k] += FD_STEP;
                dn[k] -= FD_STEP;
                let fp = objective(&ControlVector { values: up })?;
                let fm = objective(&ControlVector { values: dn })?;
                Ok((fp - fm) / (2.0 * FD_STEP))
            })
            .collect::<Result<Vec<f64>>>()?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite schedule gradient".into()));
        }
        let mut accepted = false;
        while alpha >= step * 1e-8 {
            let trial = ControlVector::new(u.values.iter().zip(&grad).map(|(v, g)| v - alpha * g).collect())?;
            if trial == u {
                break;
            }
            let ft = objective(&trial)?;
            if ft < f {
                u = trial;
                f = ft;
                alpha *= 1.5;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        trace.push(f);
        if !accepted {
            break;
        }
    }
    Ok(ScheduleOptimum { control: u, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaOptimum {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Achieved `<H_Z>`.
    pub value: f64,
}

fn qaoa_value(cost: &DiagonalCost, energies: &[f64], angles: &[f64]) -> Result<f64> {
    let p = angles.len() / 2;
    Ok(expectation(&qaoa_evolve(cost, &angles[..p], &angles[p..])?, energies))
}

/// Coordinate descent with a shrinking step from `start`; `project` maps a
/// trial point onto the feasible set.
fn coordinate_descent(
    start: Vec<f64>,
    step: f64,
    f: &dyn Fn(&[f64]) -> Result<f64>,
    project: &dyn Fn(&mut Vec<f64>),
) -> Result<(Vec<f64>, f64)> {
    let mut x = start;
    project(&mut x);
    let mut fx = f(&x)?;
    let mut h = step;
    while h > 1e-7 {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] += dir * h;
                project(&mut y);
                let fy = f(&y)?;
                if fy < fx - 1e-15 {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((x, fx))
}

/// Best of `restarts` coordinate-descent runs over `(gamma, beta)`; the first
/// run starts at zero angles, the rest at seeded random angles in `[-pi, pi]`.
pub fn optimize_qaoa_angles(cost: &DiagonalCost, p: usize, restarts: usize, seed: u64) -> Result<QaoaOptimum> {
    ensure(p >= 1, || "QAOA depth must be at least 1".into())?;
    ensure(restarts >= 1, || "at least one restart is required".into())?;
    let energies = cost.materialize()?;
    let mut rng = seeded_rng(QAOA_RNG_ID, seed);
    let pi = std::f64::consts::PI;
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|r| {
            if r == 0 {
                vec![0.0; 2 * p]
            } else {
                (0..2 * p).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * pi).collect()
            }
        })
        .collect();
    let f = |a: &[f64]| qaoa_value(cost, &energies, a);
    let runs = starts
        .into_par_iter()
        .map(|s| coordinate_descent(s, 0.5, &f, &|_| {}))
        .collect::<Result<Vec<_>>>()?;
    let (best, value) = best_run(runs);
    Ok(QaoaOptimum { gammas: best[..p].to_vec(), betas: best[p..].to_vec(), value })
}

fn best_run(runs: Vec<(Vec<f64>, f64)>) -> (Vec<f64>, f64) {
    runs.into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one run")
}

/// QAOA optimum restricted to nonnegative angles with `sum(gamma + beta) = budget`,
/// i.e. the bang-bang schedules of total time `budget` with `2p` bangs.
pub fn optimize_qaoa_budget(
    cost: &DiagonalCost,
    p: usize,
    budget: f64,
    restarts: usize,
    seed: u64,
) -> Result<QaoaOptimum> {
    ensure(p >= 1, || "QAOA depth must be at least 1".into())?;
    ensure(restarts >= 1, || "at least one restart is required".into())?;
    ensure(budget > 0.0 && budget.is_finite(), || format!("time budget {budget} must be positive"))?;
    let energies = cost.materialize()?;
    let mut rng = seeded_rng(QAOA_RNG_ID, seed ^ 0x6275_6467);
    let starts: Vec<Vec<f64>> = (0..restarts)
        .map(|r| {
            if r == 0 {
                vec![budget / (2 * p) as f64; 2 * p]
            } else {
                (0..2 * p).map(|_| rng.gen::<f64>() * budget).collect()
            }
        })
        .collect();
    let project = |x: &mut Vec<f64>| {
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = x.iter().sum();
        if total > 0.0 {
            x.iter_mut().for_each(|v| *v *= budget / total);
        } else {
            let even = budget / x.len() as f64;
            x.iter_mut().for_each(|v| *v = even);
        }
    };
    let f = |a: &[f64]| qaoa_value(cost, &energies, a);
    let runs = starts
        .into_par_iter()
        .map(|s| coordinate_descent(s, 0.25 * budget, &f, &project))
        .collect::<Result<Vec<_>>>()?;
    let (best, value) = best_run(runs);
    Ok(QaoaOptimum { gammas: best[..p].to_vec(), betas: best[p..].to_vec(), value })
}

/// Bang structure of a control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangReport {
    /// `u_1 >= 1 - tol`.
    pub start_bang: bool,
    /// `u_m <= tol`.
    pub end_bang: bool,
    /// Largest adjacent difference among the interior values `u_2 .. u_{m-1}`.
    pub interior_smoothness: f64,
}

pub fn bang_fraction(u: &ControlVector, tol: f64) -> Result<BangReport> {
    ensure(tol > 0.0 && tol < 0.5, || format!("bang tolerance {tol} outside (0, 0.5)"))?;
    let v = u.values();
    let m = v.len();
    let interior = if m > 2 { &v[1..m - 1] } else { &v[0..0] };
    let interior_smoothness = interior.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(BangReport { start_bang: v[0] >= 1.0 - tol, end_bang: v[m - 1] <= tol, interior_smoothness })
}
