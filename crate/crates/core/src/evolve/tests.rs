use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::ising::{assemble_tim, lift_symmetric, transverse_field, DiagonalCost, Hopping, SpinProblem};
use crate::path::{ConstantAssembler, TimAssembler};

fn random_problem(n: usize, seed: u64) -> SpinProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = SpinProblem::new(n, (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).unwrap();
    for i in 0..n {
        for j in i + 1..n {
            p.set_coupling(i, j, rng.gen::<f64>() * 2.0 - 1.0).unwrap();
        }
    }
    p
}

fn random_amplitudes(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let nrm = norm(&v);
    v.into_iter().map(|a| a / nrm).collect()
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn single_qubit() -> TimAssembler {
    TimAssembler::new(&SpinProblem::new(1, vec![1.0]).unwrap()).unwrap()
}

#[test]
fn state_construction_checks_norm_and_dimension() {
    let basis = Basis::Computational { n: 1 };
    assert!(QuantumState::new(vec![Complex64::new(1.0, 0.0)], basis).is_err());
    assert!(QuantumState::new(vec![Complex64::new(1.0, 0.0); 2], basis).is_err());
    assert!(QuantumState::basis_state(basis, 2).is_err());
    let s = QuantumState::symmetric_uniform(6);
    assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-14);
    assert_eq!(s.dim(), 7);
}

#[test]
fn diagonal_hamiltonian_only_adds_phases() {
    let energies = vec![0.3, -1.2, 2.5, 0.0, 1.1, -0.4, 0.7, 3.0];
    let asm = ConstantAssembler::new(LinearOp::diagonal(energies.clone()));
    let amps = random_amplitudes(8, 1);
    let psi0 = QuantumState::new(amps.clone(), Basis::Computational { n: 3 }).unwrap();
    let t = 7.3;
    let schedule = Schedule::linear_forward(t).unwrap();
    let out = propagate(&asm, &schedule, &psi0, &PropagateOptions::default()).unwrap();
    for ((a, b), e) in out.final_state().amplitudes().iter().zip(&amps).zip(&energies) {
        assert!((a - b * Complex64::from_polar(1.0, -t * e)).norm() < 1e-12);
    }
}

#[test]
fn slow_single_qubit_anneal_is_adiabatic() {
    let schedule = Schedule::linear_forward(200.0).unwrap();
    let out = propagate(&single_qubit(), &schedule, &QuantumState::uniform(1).unwrap(), &PropagateOptions::default())
        .unwrap();
    // h = +1 puts the ground state at z = +1, index 0.
    assert!(out.final_state().probabilities()[0] > 0.999);
    assert!(out.step_error().unwrap() <= 1e-7);
}

#[test]
fn fast_single_qubit_anneal_is_a_quench() {
    let schedule = Schedule::linear_forward(0.01).unwrap();
    let psi0 = QuantumState::uniform(1).unwrap();
    let out = propagate(&single_qubit(), &schedule, &psi0, &PropagateOptions::default()).unwrap();
    assert!(out.final_state().fidelity(&psi0) > 0.999);
}

#[test]
fn midpoint_rule_is_second_order() {
    let asm = TimAssembler::new(&random_problem(3, 5)).unwrap();
    let schedule = Schedule::linear_forward(5.0).unwrap();
    let psi0 = QuantumState::uniform(3).unwrap();
    let run = |steps| {
        let opts = PropagateOptions::default().with_method(Method::Midpoint).with_tolerance(None).with_steps(steps);
        propagate(&asm, &schedule, &psi0, &opts).unwrap().into_final_state().into_amplitudes()
    };
    let (a, b, c) = (run(40), run(80), run(160));
    let ratio = distance(&a, &b) / distance(&b, &c);
    assert!(ratio >= 3.8, "halving ratio {ratio}");
}

#[test]
fn cf4_is_fourth_order() {
    let asm = TimAssembler::new(&random_problem(3, 6)).unwrap();
    let schedule = Schedule::linear_forward(5.0).unwrap();
    let psi0 = QuantumState::uniform(3).unwrap();
    let run = |steps| {
        let opts = PropagateOptions::default().with_tolerance(None).with_steps(steps);
        propagate(&asm, &schedule, &psi0, &opts).unwrap().into_final_state().into_amplitudes()
    };
    let (a, b, c) = (run(10), run(20), run(40));
    let ratio = distance(&a, &b) / distance(&b, &c);
    assert!(ratio >= 14.0, "halving ratio {ratio}");
}

#[test]
fn methods_agree_at_tolerance() {
    let asm = TimAssembler::new(&random_problem(4, 8)).unwrap();
    let schedule = Schedule::linear_forward(12.0).unwrap();
    let psi0 = QuantumState::uniform(4).unwrap();
    let opts = PropagateOptions::default().with_tolerance(Some(1e-9));
    let a = propagate(&asm, &schedule, &psi0, &opts).unwrap();
    let b = propagate(&asm, &schedule, &psi0, &opts.clone().with_method(Method::Midpoint)).unwrap();
    assert!(a.final_state().fidelity(b.final_state()) > 1.0 - 1e-12);
}

#[test]
fn constant_hamiltonian_conserves_energy() {
    let h = assemble_tim(&random_problem(4, 11), 0.7, 0.3).unwrap();
    let asm = ConstantAssembler::new(h);
    let psi0 = QuantumState::new(random_amplitudes(16, 3), Basis::Computational { n: 4 }).unwrap();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let schedule = Schedule::linear_forward(30.0).unwrap();
    let out = propagate(&asm, &schedule, &psi0, &PropagateOptions::default().recording(grid, false)).unwrap();
    let e0 = out.energies()[0];
    assert_eq!(out.energies().len(), 21);
    for (&e, &n) in out.energies().iter().zip(out.norms()) {
        assert!((e - e0).abs() < 1e-8);
        assert!((n - 1.0).abs() < 1e-9);
    }
}

#[test]
fn recorded_states_match_grid() {
    let grid = vec![0.1, 0.5, 0.25];
    let opts = PropagateOptions::default().recording(grid, true);
    let out = propagate(&single_qubit(), &Schedule::linear_forward(3.0).unwrap(), &QuantumState::uniform(1).unwrap(), &opts)
        .unwrap();
    assert_eq!(out.grid(), &[0.0, 0.1, 0.25, 0.5, 1.0]);
    let states = out.states().unwrap();
    assert_eq!(states.len(), 5);
    assert!(distance(&states[4], out.final_state().amplitudes()) < 1e-15);
    assert!(out.to_csv().starts_with("s,observable,value\n0,norm,"));
    let bare = propagate(&single_qubit(), &Schedule::linear_forward(3.0).unwrap(), &QuantumState::uniform(1).unwrap(), &PropagateOptions::default())
        .unwrap();
    assert!(bare.states().is_err());
}

#[test]
fn propagation_rejects_bad_inputs() {
    let psi = QuantumState::uniform(2).unwrap();
    let schedule = Schedule::linear_forward(1.0).unwrap();
    assert!(matches!(
        propagate(&single_qubit(), &schedule, &psi, &PropagateOptions::default()),
        Err(Error::Contract(_))
    ));
    let opts = PropagateOptions::default().recording(vec![1.5], false);
    assert!(propagate(&single_qubit(), &schedule, &QuantumState::uniform(1).unwrap(), &opts).is_err());
    let tight = PropagateOptions { max_steps: 16, tolerance: Some(1e-14), ..PropagateOptions::default() };
    let asm = TimAssembler::new(&random_problem(3, 2)).unwrap();
    let long = Schedule::linear_forward(50.0).unwrap();
    assert!(matches!(
        propagate(&asm, &long, &QuantumState::uniform(3).unwrap(), &tight),
        Err(Error::Integrator(_))
    ));
}

#[test]
fn pause_under_constant_hamiltonian_keeps_populations() {
    let problem = random_problem(3, 21);
    let asm = TimAssembler::new(&problem).unwrap();
    let (s_pause, fraction) = (0.5, 0.4);
    let schedule = Schedule::linear_forward(4.0).unwrap().with_pause(s_pause, fraction).unwrap();
    let (start, end) = (s_pause / (1.0 + fraction), (s_pause + fraction) / (1.0 + fraction));
    let opts = PropagateOptions::default().recording(vec![start, end], true).with_tolerance(Some(1e-10));
    let out = propagate(&asm, &schedule, &QuantumState::uniform(3).unwrap(), &opts).unwrap();
    let states = out.states().unwrap();
    let eig = assemble_tim(&problem, 0.5, 0.5).unwrap().to_dense().unwrap().symmetric_eigen();
    for k in 0..8 {
        let v = eig.eigenvectors.column(k);
        let pop = |psi: &[Complex64]| psi.iter().enumerate().map(|(i, a)| a * v[i]).sum::<Complex64>().norm_sqr();
        assert_abs_diff_eq!(pop(&states[1]), pop(&states[2]), epsilon = 1e-9);
    }
}

#[test]
fn quench_examples() {
    let psi0 = QuantumState::new(random_amplitudes(4, 4), Basis::Computational { n: 2 }).unwrap();
    let h = transverse_field(2).unwrap();
    assert_eq!(quench_evolve(&h, 0.0, &psi0).unwrap(), psi0);
    let minus_x = transverse_field(1).unwrap();
    let zero = QuantumState::basis_state(Basis::Computational { n: 1 }, 0).unwrap();
    // H_X = -X, so -X is the transverse field itself.
    let out = quench_evolve(&minus_x, std::f64::consts::FRAC_PI_2, &zero).unwrap();
    assert!(out.amplitudes()[0].norm() < 1e-14);
    assert_abs_diff_eq!(out.amplitudes()[1].norm(), 1.0, epsilon = 1e-14);
    assert!(quench_evolve(&h, 1.0, &zero).is_err());
}

#[test]
fn quench_matches_dense_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let n = 6;
    let diag: Vec<f64> = (0..1 << n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let h = LinearOp::new(diag, 0.9, Hopping::Transverse { n }).unwrap();
    let psi0 = QuantumState::new(random_amplitudes(1 << n, 5), Basis::Computational { n }).unwrap();
    let t = 4.2;
    let eig = h.to_dense().unwrap().symmetric_eigen();
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -t * e)));
    let want = &v * phases * v.transpose() * nalgebra::DVector::from_column_slice(psi0.amplitudes());
    let got = quench_evolve(&h, t, &psi0).unwrap();
    assert!(distance(got.amplitudes(), want.as_slice()) < 1e-10);
}

#[test]
fn symmetric_evolution_matches_full_space() {
    for n in [4usize, 8, 12] {
        let sp = SymmetricProblem::spike(n).unwrap();
        let schedule = Schedule::linear_forward(6.0).unwrap();
        let opts = PropagateOptions::default().with_tolerance(Some(1e-10));
        let reduced = evolve_symmetric(&sp, &schedule, &QuantumState::symmetric_uniform(n), &opts).unwrap();
        let asm = TimAssembler::from_cost(&sp.to_diagonal_cost().unwrap()).unwrap();
        let full = propagate(&asm, &schedule, &QuantumState::uniform(n).unwrap(), &opts).unwrap();
        let lifted = lift_symmetric(reduced.final_state().amplitudes()).unwrap();
        let overlap: Complex64 = inner(&lifted, full.final_state().amplitudes());
        assert!(overlap.norm_sqr() > 1.0 - 1e-8, "n = {n}: {}", overlap.norm_sqr());
    }
    let sp = SymmetricProblem::spike(4).unwrap();
    let schedule = Schedule::linear_forward(1.0).unwrap();
    assert!(evolve_symmetric(&sp, &schedule, &QuantumState::uniform(4).unwrap(), &PropagateOptions::default()).is_err());
}

#[test]
fn large_spike_runs_in_reduced_basis() {
    let n = 1024;
    let sp = SymmetricProblem::spike(n).unwrap();
    let schedule = Schedule::linear_forward(10.0).unwrap();
    let started = std::time::Instant::now();
    let out = evolve_symmetric(&sp, &schedule, &QuantumState::symmetric_uniform(n), &PropagateOptions::default()).unwrap();
    assert!(started.elapsed().as_secs_f64() < 30.0);
    assert_abs_diff_eq!(out.final_state().norm(), 1.0, epsilon = 1e-8);
}

#[test]
fn zero_cost_keeps_transverse_ground_state() {
    let sp = SymmetricProblem::new(10, vec![0.0; 11]).unwrap();
    let psi0 = QuantumState::symmetric_uniform(10);
    for t in [0.5, 20.0] {
        let out = evolve_symmetric(&sp, &Schedule::linear_forward(t).unwrap(), &psi0, &PropagateOptions::default()).unwrap();
        assert!(out.final_state().fidelity(&psi0) > 1.0 - 1e-7);
    }
}

#[test]
fn reverse_run_examples() {
    let cost = DiagonalCost::from_problem(&random_problem(8, 40)).unwrap();
    let mut cfg = ReverseRunConfig::new(ReverseProtocol::Sombrero { peak: 0.0 }, 5.0);
    cfg.initial = Some(vec![1, 0, 1, 1, 0, 0, 1, 0]);
    let quenched = iterated_reverse_run(&cost, &cfg, 3, 9).unwrap();
    for r in &quenched {
        assert_eq!(r.outcome, cfg.initial.clone().unwrap());
    }
    assert!(iterated_reverse_run(&cost, &cfg, 0, 9).is_err());

    cfg.protocol = ReverseProtocol::Sombrero { peak: 1.5 };
    let single = iterated_reverse_run(&cost, &cfg, 1, 9).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].start, cfg.initial.clone().unwrap());

    let trace = iterated_reverse_run(&cost, &cfg, 20, 4).unwrap();
    assert_eq!(trace.len(), 20);
    for w in trace.windows(2) {
        assert!(w[1].best_energy <= w[0].best_energy);
        assert_eq!(w[1].start, w[0].outcome);
    }
    assert_eq!(trace, iterated_reverse_run(&cost, &cfg, 20, 4).unwrap());

    cfg.reinitialize = true;
    cfg.protocol = ReverseProtocol::DWave { s_target: 0.4, pause_fraction: 0.2 };
    let reinit = iterated_reverse_run(&cost, &cfg, 6, 4).unwrap();
    for r in &reinit {
        assert_eq!(r.start, cfg.initial.clone().unwrap());
        assert_abs_diff_eq!(r.energy, cost.energy(crate::ising::index_from_config(&r.outcome)), epsilon = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_is_linear(seed in 0u64..1000, alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let asm = TimAssembler::new(&random_problem(3, seed)).unwrap();
        let schedule = Schedule::linear_forward(3.0).unwrap();
        let opts = PropagateOptions::default().with_tolerance(None).with_steps(64);
        let (p1, p2) = (random_amplitudes(8, seed + 1), random_amplitudes(8, seed + 2));
        let mix: Vec<Complex64> = p1.iter().zip(&p2).map(|(a, b)| a * alpha + b * beta).collect();
        let u1 = propagate_raw(&asm, &schedule, &p1, &opts).unwrap();
        let u2 = propagate_raw(&asm, &schedule, &p2, &opts).unwrap();
        let um = propagate_raw(&asm, &schedule, &mix, &opts).unwrap();
        let want: Vec<Complex64> = u1.iter().zip(&u2).map(|(a, b)| a * alpha + b * beta).collect();
        prop_assert!(distance(&um, &want) < 1e-8);
    }

    #[test]
    fn propagation_preserves_norm(seed in 0u64..1000, t in 0.1f64..40.0) {
        let asm = TimAssembler::new(&random_problem(3, seed)).unwrap();
        let psi0 = QuantumState::new(random_amplitudes(8, seed), Basis::Computational { n: 3 }).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let out = propagate(&asm, &Schedule::linear_forward(t).unwrap(), &psi0, &PropagateOptions::default().recording(grid, false)).unwrap();
        for n in out.norms() {
            prop_assert!((n - 1.0).abs() < 1e-9);
        }
    }
}
