//! Exact gate-level evolutions and special initial states.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Basis, QuantumState};
use crate::error::{ensure, Result};
use crate::ising::{spin, DiagonalCost};

/// `prod_i exp(i beta_i H_X) exp(i gamma_i H_Z)` applied to `|+>^n`, layer 1 first.
///
/// `exp(i beta H_X)` with `H_X = -sum X` is `prod_q (cos beta - i sin beta X_q)`,
/// applied qubit by qubit; `exp(i gamma H_Z)` is a diagonal phase.
pub fn qaoa_evolve(cost: &DiagonalCost, gammas: &[f64], betas: &[f64]) -> Result<QuantumState> {
    ensure(gammas.len() == betas.len(), || {
        format!("{} gammas but {} betas", gammas.len(), betas.len())
    })?;
    let n = cost.n();
    let energies = cost.materialize()?;
    let mut psi = QuantumState::uniform(n)?.into_amplitudes();
    for (&gamma, &beta) in gammas.iter().zip(betas) {
        for (a, &e) in psi.iter_mut().zip(energies.iter()) {
            *a *= Complex64::from_polar(1.0, gamma * e);
        }
        apply_mixer(&mut psi, n, beta);
    }
    QuantumState::new(psi, Basis::Computational { n })
}

/// `exp(-i beta sum_q X_q)` in place.
fn apply_mixer(psi: &mut [Complex64], n: usize, beta: f64) {
    let (c, s) = (beta.cos(), beta.sin());
    let mis = Complex64::new(0.0, -s);
    for q in 0..n {
        let mask = 1usize << q;
        for x in 0..psi.len() {
            if x & mask == 0 {
                let (a, b) = (psi[x], psi[x | mask]);
                psi[x] = a * c + b * mis;
                psi[x | mask] = b * c + a * mis;
            }
        }
    }
}

/// Lowest state of the cost projected into the first excited level of `H_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedInit {
    pub state: QuantumState,
    /// Lowest eigenvalue of the projected cost.
    pub energy: f64,
    /// The lowest projected eigenvalue was degenerate; the first eigenvector
    /// in solver order was returned.
    pub degenerate: bool,
}

/// Degenerate first-order perturbation theory in the `n`-fold degenerate first
/// excited level of `H_X`, spanned by `Z_j |+>^n` (qubit `j` flipped to `|->`).
/// The projected cost is `M_jk = 2^-n sum_x E(x) z_j(x) z_k(x)`; its lowest
/// eigenvector `c` gives `psi(x) = 2^(-n/2) sum_j c_j z_j(x)`.
pub fn excited_transverse_init(cost: &DiagonalCost) -> Result<ExcitedInit> {
    let n = cost.n();
    ensure(n >= 2, || format!("excited-state initialization needs n >= 2, got {n}"))?;
    let energies = cost.materialize()?;
    let dim = energies.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut z = vec![0.0; n];
    for (x, &e) in energies.iter().enumerate() {
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = spin(x, n, j);
        }
        for j in 0..n {
            let ez = e * z[j];
            for k in j..n {
                m[(j, k)] += ez * z[k];
            }
        }
    }
    for j in 0..n {
        for k in j..n {
            m[(j, k)] /= dim as f64;
            m[(k, j)] = m[(j, k)];
        }
    }
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let lowest = eig.eigenvalues[order[0]];
    let scale = lowest.abs().max(1.0);
    let degenerate = (eig.eigenvalues[order[1]] - lowest).abs() <= 1e-10 * scale;
    let c = eig.eigenvectors.column(order[0]);
    let amp = (dim as f64).powf(-0.5);
    let psi: Vec<f64> = (0..dim)
        .map(|x| amp * (0..n).map(|j| c[j] * spin(x, n, j)).sum::<f64>())
        .collect();
    Ok(ExcitedInit {
        state: QuantumState::from_real(&psi, Basis::Computational { n })?,
        energy: lowest,
        degenerate,
    })
}
