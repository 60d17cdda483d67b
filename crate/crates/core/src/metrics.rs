//! Success probability, residual energy, time-to-solution and scaling fits.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::evolve::{expm_apply, Basis, QuantumState, Workspace};
use crate::ising::{DiagonalCost, LinearOp, SymmetricProblem};

/// Default start of the late-time window, in inverse energy units.
pub const LATE_WINDOW_START: f64 = 100.0;
/// Default number of samples in the late-time window.
pub const LATE_SAMPLES: usize = 32;
/// Default success target of [`tts`].
pub const TTS_TARGET: f64 = 0.99;

/// Outcome of one anneal of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub instance: String,
    pub seed: u64,
    pub total_time: f64,
    pub success: f64,
    pub residual: f64,
}

impl RunResult {
    pub fn new(instance: impl Into<String>, seed: u64, total_time: f64, success: f64, residual: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&success), || format!("success probability {success} outside [0, 1]"))?;
        ensure(residual >= -1e-9, || format!("negative residual energy {residual}"))?;
        Ok(Self { instance: instance.into(), seed, total_time, success, residual })
    }

    /// Measure a final state against its cost.
    pub fn measure(
        instance: impl Into<String>,
        seed: u64,
        total_time: f64,
        state: &QuantumState,
        cost: &DiagonalCost,
    ) -> Result<Self> {
        let success = success_probability(state, cost)?.min(1.0);
        Self::new(instance, seed, total_time, success, residual_energy(state, cost)?)
    }

    pub fn tts(&self) -> Result<f64> {
        tts(self.total_time, self.success, TTS_TARGET)
    }
}

fn full_basis(state: &QuantumState, cost: &DiagonalCost) -> Result<()> {
    ensure(state.basis() == Basis::Computational { n: cost.n() }, || {
        format!("state in {:?} does not match a {}-qubit cost", state.basis(), cost.n())
    })
}

/// Probability mass on the exact minimizers of `cost`.
pub fn success_probability(state: &QuantumState, cost: &DiagonalCost) -> Result<f64> {
    full_basis(state, cost)?;
    let (_, ground) = cost.ground_set()?;
    let amps = state.amplitudes();
    Ok(ground.iter().map(|&x| amps[x].norm_sqr()).sum())
}

/// `<psi|H_Z|psi> - E_min`.
pub fn residual_energy(state: &QuantumState, cost: &DiagonalCost) -> Result<f64> {
    full_basis(state, cost)?;
    let (emin, _) = cost.ground_set()?;
    let energies = cost.materialize()?;
    let mean: f64 = state.probabilities().iter().zip(energies.iter()).map(|(p, e)| p * e).sum();
    Ok(mean - emin)
}

/// Probability mass on the minimizing Hamming weights of a symmetric problem.
pub fn symmetric_success_probability(state: &QuantumState, problem: &SymmetricProblem) -> Result<f64> {
    ensure(state.basis() == Basis::Symmetric { n: problem.n() }, || {
        format!("state in {:?} does not match a symmetric {}-qubit problem", state.basis(), problem.n())
    })?;
    let (_, weights) = problem.ground_weights();
    let amps = state.amplitudes();
    Ok(weights.iter().map(|&w| amps[w].norm_sqr()).sum())
}

/// Expected total time to reach the ground state with probability `target`
/// by independent repetitions of a run of length `T` succeeding with `p`.
/// `p = 1` gives `T`; `p = 0` gives infinity.
pub fn tts(total_time: f64, p: f64, target: f64) -> Result<f64> {
    ensure((0.0..=1.0).contains(&p), || format!("success probability {p} outside [0, 1]"))?;
    ensure(target > 0.0 && target < 1.0, || format!("target {target} outside (0, 1)"))?;
    ensure(total_time >= 0.0, || format!("negative run time {total_time}"))?;
    if p >= target {
        return Ok(total_time);
    }
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(total_time * (1.0 - target).ln() / (1.0 - p).ln())
}

/// Mean success probability of `exp(-i t H) psi0` over `samples` equally spaced
/// times covering `window` inclusively.
pub fn late_time_success(
    h: &LinearOp,
    psi0: &QuantumState,
    window: (f64, f64),
    samples: usize,
    cost: &DiagonalCost,
) -> Result<f64> {
    let (lo, hi) = window;
    ensure(lo < hi && lo >= 0.0, || format!("late-time window ({lo}, {hi}) is not an increasing nonnegative interval"))?;
    ensure(samples >= 2, || format!("need at least two samples, got {samples}"))?;
    ensure(h.is_hermitian(), || "late-time evolution requires a Hermitian operator".into())?;
    full_basis(psi0, cost)?;
    ensure(h.dim() == psi0.dim(), || "state and operator dimensions differ".into())?;
    let (_, ground) = cost.ground_set()?;
    let mut ws = Workspace::default();
    let mut cur = psi0.amplitudes().to_vec();
    let mut next = vec![Complex64::default(); cur.len()];
    let dt = (hi - lo) / (samples - 1) as f64;
    let mut total = 0.0;
    let mut t = 0.0;
    for k in 0..samples {
        let target = lo + k as f64 * dt;
        expm_apply(h, target - t, &cur, &mut next, &mut ws)?;
        std::mem::swap(&mut cur, &mut next);
        t = target;
        total += ground.iter().map(|&x| cur[x].norm_sqr()).sum::<f64>();
    }
    Ok((total / samples as f64).clamp(0.0, 1.0))
}

/// Least-squares slope of `-log2 P` against `n`, with its standard error.
pub fn fit_alpha(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    ensure(points.len() >= 3, || format!("need at least three points, got {}", points.len()))?;
    for &(n, p) in points {
        ensure(p > 0.0 && p.is_finite(), || format!("probability {p} at n = {n} is not positive"))?;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.1.log2()).collect();
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let my = ys.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    ensure(sxx > 0.0, || "all points share the same n".into())?;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (sse / (len - 2.0) / sxx).sqrt();
    Ok((slope, stderr))
}

/// Hopping rate for the hypercube walk: `(E_max - E_min) / (2n)`, so the
/// spectrum `[0, 2n gamma]` of `gamma L` spans the same width as `H_C`.
pub fn heuristic_gamma(cost: &DiagonalCost) -> Result<f64> {
    let n = cost.n();
    ensure(n >= 1, || "empty problem".into())?;
    let e = cost.materialize()?;
    let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gamma = (hi - lo) / (2.0 * n as f64);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Numeric(format!("heuristic hopping rate {gamma} for a flat cost")));
    }
    Ok(gamma)
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// CSV in long format with columns `instance,seed,T,metric,value`.
pub fn results_to_csv(results: &[RunResult]) -> String {
    let mut out = String::from("instance,seed,T,metric,value\n");
    for r in results {
        for (metric, value) in [("success_probability", r.success), ("residual_energy", r.residual)] {
            let _ = writeln!(out, "{},{},{},{metric},{value}", r.instance, r.seed, r.total_time);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::QuantumState;
    use crate::ising::{hypercube_walk_hamiltonian, SpinProblem};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field_cost(n: usize) -> DiagonalCost {
        DiagonalCost::from_problem(&SpinProblem::new(n, vec![1.0; n]).unwrap()).unwrap()
    }

    #[test]
    fn success_of_simple_states() {
        let cost = field_cost(3);
        let ground = QuantumState::basis_state(Basis::Computational { n: 3 }, 0).unwrap();
        assert_abs_diff_eq!(success_probability(&ground, &cost).unwrap(), 1.0);
        assert_abs_diff_eq!(residual_energy(&ground, &cost).unwrap(), 0.0);
        let uniform = QuantumState::uniform(3).unwrap();
        assert_abs_diff_eq!(success_probability(&uniform, &cost).unwrap(), 0.125, epsilon = 1e-15);
        let mut pair = SpinProblem::zero(3).unwrap();
        pair.set_coupling(0, 1, 1.0).unwrap();
        pair.add_field(2, 1.0).unwrap();
        let pair = DiagonalCost::from_problem(&pair).unwrap();
        assert_abs_diff_eq!(success_probability(&uniform, &pair).unwrap(), 0.25, epsilon = 1e-15);
        let sym = QuantumState::symmetric_uniform(3);
        assert!(success_probability(&sym, &cost).is_err());
    }

    #[test]
    fn residual_of_uniform_two_level_cost() {
        let cost = DiagonalCost::from_energies(vec![0.0, 2.0]).unwrap();
        let uniform = QuantumState::uniform(1).unwrap();
        assert_abs_diff_eq!(residual_energy(&uniform, &cost).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tts_examples() {
        assert_abs_diff_eq!(tts(10.0, 0.99, 0.99).unwrap(), 10.0);
        assert_abs_diff_eq!(tts(10.0, 0.5, 0.99).unwrap(), 66.438_561_897_747_24, epsilon = 1e-10);
        assert_abs_diff_eq!(tts(7.0, 1.0, 0.99).unwrap(), 7.0);
        assert!(tts(7.0, 0.0, 0.99).unwrap().is_infinite());
        assert!(tts(7.0, 1.5, 0.99).is_err());
        assert!((tts(7.0, 0.989_999, 0.99).unwrap() - 7.0).abs() < 1e-3);
    }

    #[test]
    fn late_time_frozen_for_diagonal_h() {
        let cost = field_cost(2);
        let h = LinearOp::diagonal(cost.materialize().unwrap().to_vec());
        let psi = QuantumState::uniform(2).unwrap();
        let p = late_time_success(&h, &psi, (1.0, 7.0), 5, &cost).unwrap();
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
        assert!(late_time_success(&h, &psi, (7.0, 1.0), 5, &cost).is_err());
        assert!(late_time_success(&h, &psi, (1.0, 7.0), 1, &cost).is_err());
    }

    /// Infinite-time average `sum_k |<g|phi_k>|^2 |<phi_k|psi0>|^2` from a dense
    /// eigendecomposition (no degeneracies in this instance).
    #[test]
    fn late_time_matches_spectral_average() {
        let cost = DiagonalCost::from_energies(vec![-1.0, 0.3, 0.7, 1.9]).unwrap();
        let h = hypercube_walk_hamiltonian(&cost, 0.6).unwrap();
        let eig = h.to_dense().unwrap().symmetric_eigen();
        let want: f64 = (0..4)
            .map(|k| {
                let v = eig.eigenvectors.column(k);
                let overlap: f64 = v.iter().sum::<f64>() * 0.5;
                v[0].powi(2) * overlap.powi(2)
            })
            .sum();
        let psi = QuantumState::uniform(2).unwrap();
        let got = late_time_success(&h, &psi, (1000.0, 21000.0), 4001, &cost).unwrap();
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }

    #[test]
    fn fit_alpha_examples() {
        let exact: Vec<(f64, f64)> = (5..12).map(|n| (n as f64, 2f64.powi(-n))).collect();
        let (a, se) = fit_alpha(&exact).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
        assert!(se < 1e-12);
        let half: Vec<(f64, f64)> = (5..12).map(|n| (n as f64, 2f64.powf(-0.5 * n as f64))).collect();
        assert_abs_diff_eq!(fit_alpha(&half).unwrap().0, 0.5, epsilon = 1e-12);
        assert!(fit_alpha(&[(1.0, 0.5), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_alpha(&exact[..2]).is_err());
    }

    #[test]
    fn fit_alpha_recovers_noisy_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut hits = 0;
        for _ in 0..50 {
            let pts: Vec<(f64, f64)> = (5..12)
                .map(|n| {
                    let noise: f64 = (rng.gen::<f64>() - 0.5) * 0.2;
                    (n as f64, 2f64.powf(-(0.417 * n as f64 + 0.3 + noise)))
                })
                .collect();
            let (a, se) = fit_alpha(&pts).unwrap();
            if (a - 0.417).abs() <= 2.0 * se {
                hits += 1;
            }
        }
        assert!(hits >= 40, "{hits} of 50 within two standard errors");
    }

    #[test]
    fn heuristic_gamma_scales_with_cost() {
        let c = field_cost(3);
        let g = heuristic_gamma(&c).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-15);
        let doubled = DiagonalCost::from_energies(c.materialize().unwrap().iter().map(|e| 2.0 * e).collect()).unwrap();
        assert_abs_diff_eq!(heuristic_gamma(&doubled).unwrap(), 2.0 * g, epsilon = 1e-15);
        assert!(heuristic_gamma(&DiagonalCost::zero(2).unwrap()).is_err());
    }

    #[test]
    fn quantiles_and_csv() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_abs_diff_eq!(quantile(&v, 0.5), 2.5);
        assert_abs_diff_eq!(quantile(&v, 0.0), 1.0);
        assert_abs_diff_eq!(quantile(&v, 1.0), 4.0);
        assert!(quantile(&[], 0.5).is_nan());
        let r = RunResult::new("a", 3, 10.0, 0.25, 0.5).unwrap();
        assert_eq!(
            results_to_csv(&[r]),
            "instance,seed,T,metric,value\na,3,10,success_probability,0.25\na,3,10,residual_energy,0.5\n"
        );
        assert!(RunResult::new("a", 0, 1.0, 1.2, 0.0).is_err());
        assert!(RunResult::new("a", 0, 1.0, 0.2, -1.0).is_err());
    }

    #[test]
    fn symmetric_success_on_spike() {
        let sp = SymmetricProblem::spike(8).unwrap();
        let (_, w) = sp.ground_weights();
        let s = QuantumState::basis_state(Basis::Symmetric { n: 8 }, w[0]).unwrap();
        assert_abs_diff_eq!(symmetric_success_probability(&s, &sp).unwrap(), 1.0);
    }

    fn random_state(n: usize, seed: u64) -> QuantumState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..1 << n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect::<Vec<_>>();
        let nrm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        QuantumState::new(amps.iter().map(|a| a / nrm).collect(), Basis::Computational { n }).unwrap()
    }

    proptest! {
        #[test]
        fn residual_is_nonnegative_and_success_complements(seed in 0u64..1000, n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
            let mut p = SpinProblem::new(n, (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    p.set_coupling(i, j, rng.gen::<f64>() - 0.5).unwrap();
                }
            }
            let cost = DiagonalCost::from_problem(&p).unwrap();
            let psi = random_state(n, seed);
            prop_assert!(residual_energy(&psi, &cost).unwrap() >= -1e-12);
            let (_, ground) = cost.ground_set().unwrap();
            let outside: f64 = psi.probabilities().iter().enumerate().filter(|(x, _)| !ground.contains(x)).map(|(_, p)| p).sum();
            prop_assert!((success_probability(&psi, &cost).unwrap() + outside - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tts_is_monotone(t in 0.1f64..100.0, p in 0.01f64..0.98, dp in 0.001f64..0.01, dt in 0.1f64..10.0) {
            let base = tts(t, p, 0.99).unwrap();
            prop_assert!(tts(t, p + dp, 0.99).unwrap() <= base);
            prop_assert!(tts(t + dt, p, 0.99).unwrap() >= base);
        }
    }
}
