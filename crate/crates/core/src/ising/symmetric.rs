//! Permutation-symmetric problems and their reduction to the Hamming-weight basis.

use num_complex::Complex64;

use super::operator::{Hopping, LinearOp};
use super::{check_materializable, DiagonalCost};
use crate::error::{ensure, Result};

/// A cost that depends only on the Hamming weight of the bit string.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricProblem {
    n: usize,
    f: Vec<f64>,
}

impl SymmetricProblem {
    /// `f[w]` for `w = 0..=n`.
    pub fn new(n: usize, f: Vec<f64>) -> Result<Self> {
        ensure(n >= 1, || "symmetric problem needs at least one qubit".into())?;
        ensure(f.len() == n + 1, || format!("cost table must have n + 1 = {} entries, got {}", n + 1, f.len()))?;
        ensure(f.iter().all(|x| x.is_finite()), || "cost table must be finite".into())?;
        Ok(Self { n, f })
    }

    /// Hamming weight with a spike of height `n` at `w = n/4`.
    pub fn spike(n: usize) -> Result<Self> {
        let f = (0..=n).map(|w| spike_cost(n, w)).collect::<Result<Vec<_>>>()?;
        Self::new(n, f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cost(&self, w: usize) -> f64 {
        self.f[w]
    }

    pub fn costs(&self) -> &[f64] {
        &self.f
    }

    /// Minimum cost and the weights attaining it.
    pub fn ground_weights(&self) -> (f64, Vec<usize>) {
        super::ground_set_of(&self.f)
    }

    /// The same cost as a full-space diagonal `f(|x|)`.
    pub fn to_diagonal_cost(&self) -> Result<DiagonalCost> {
        check_materializable(self.n)?;
        let e = (0..1usize << self.n).map(|x| self.f[x.count_ones() as usize]).collect();
        DiagonalCost::from_energies(e)
    }
}

/// `f(w) = w` except `f(n/4) = n`.
pub fn spike_cost(n: usize, w: usize) -> Result<f64> {
    ensure(n > 0 && n % 4 == 0, || format!("spike problem needs n divisible by 4, got {n}"))?;
    ensure(w <= n, || format!("weight {w} exceeds n = {n}"))?;
    Ok(if w == n / 4 { n as f64 } else { w as f64 })
}

/// `a H_X + b H_Z` restricted to the symmetric subspace (dimension `n + 1`).
pub fn symmetric_reduce(sp: &SymmetricProblem, a: f64, b: f64) -> LinearOp {
    let diag = sp.f.iter().map(|x| b * x).collect();
    LinearOp::new(diag, a, Hopping::dicke(sp.n)).expect("dicke hopping has dimension n + 1")
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let lf = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

/// Normalized Dicke state of weight `w` in the full `2^n` basis.
pub fn dicke_basis_state(n: usize, w: usize) -> Result<Vec<Complex64>> {
    check_materializable(n)?;
    ensure(w <= n, || format!("weight {w} exceeds n = {n}"))?;
    let amp = (-0.5 * ln_binomial(n, w)).exp();
    Ok((0..1usize << n)
        .map(|x| {
            if x.count_ones() as usize == w {
                Complex64::new(amp, 0.0)
            } else {
                Complex64::default()
            }
        })
        .collect())
}

/// Embed a symmetric-basis amplitude vector into the full computational basis.
pub fn lift_symmetric(amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
    ensure(!amplitudes.is_empty(), || "empty amplitude vector".into())?;
    let n = amplitudes.len() - 1;
    check_materializable(n)?;
    let scale: Vec<f64> = (0..=n).map(|w| (-0.5 * ln_binomial(n, w)).exp()).collect();
    Ok((0..1usize << n)
        .map(|x| {
            let w = x.count_ones() as usize;
            amplitudes[w] * scale[w]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{assemble_diagonal, transverse_field};
    use approx::assert_abs_diff_eq;

    fn sorted_eigenvalues(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn spike_examples() {
        assert_eq!(spike_cost(8, 3).unwrap(), 3.0);
        assert_eq!(spike_cost(8, 2).unwrap(), 8.0);
        assert_eq!(spike_cost(8, 0).unwrap(), 0.0);
        assert!(spike_cost(6, 1).is_err());
        assert!(spike_cost(8, 9).is_err());
        let sp = SymmetricProblem::spike(8).unwrap();
        assert_eq!(sp.ground_weights(), (0.0, vec![0]));
    }

    #[test]
    fn reduced_transverse_field_matches_full_space() {
        let sp = SymmetricProblem::new(2, vec![0.0; 3]).unwrap();
        let red = symmetric_reduce(&sp, 1.0, 0.0);
        let m = red.to_dense().unwrap();
        assert_abs_diff_eq!(m[(1, 0)], -2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(2, 1)], -2f64.sqrt(), epsilon = 1e-15);
        let ev = sorted_eigenvalues(m);
        let full = sorted_eigenvalues(transverse_field(2).unwrap().to_dense().unwrap());
        assert_abs_diff_eq!(ev[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[0], full[0], epsilon = 1e-12);
    }

    #[test]
    fn pure_diagonal_reduction() {
        let sp = SymmetricProblem::new(3, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let red = symmetric_reduce(&sp, 0.0, 2.0);
        assert!(red.is_diagonal());
        assert_eq!(red.diag(), &[2.0, 4.0, 6.0, 8.0]);
    }

    /// Rayleigh-Ritz of the full-space operator in the lifted Dicke basis must
    /// reproduce the reduced matrix, and every reduced eigenpair lifts to a
    /// full-space eigenpair.
    #[test]
    fn spike_reduction_is_exact_at_n12() {
        let n = 12;
        let sp = SymmetricProblem::spike(n).unwrap();
        let full = assemble_diagonal(&sp.to_diagonal_cost().unwrap(), 0.5, 0.5).unwrap();
        let red = symmetric_reduce(&sp, 0.5, 0.5);
        let basis: Vec<Vec<Complex64>> = (0..=n).map(|w| dicke_basis_state(n, w).unwrap()).collect();
        let red_dense = red.to_dense().unwrap();
        for (j, bj) in basis.iter().enumerate() {
            let hb = full.apply_vec(bj);
            for (i, bi) in basis.iter().enumerate() {
                let elem: Complex64 = bi.iter().zip(&hb).map(|(a, b)| a.conj() * b).sum();
                assert_abs_diff_eq!(elem.re, red_dense[(i, j)], epsilon = 1e-10);
            }
        }
        let eig = red_dense.symmetric_eigen();
        for k in 0..=n {
            let v: Vec<Complex64> = eig.eigenvectors.column(k).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let lifted = lift_symmetric(&v).unwrap();
            let hv = full.apply_vec(&lifted);
            let resid: f64 = hv
                .iter()
                .zip(&lifted)
                .map(|(a, b)| (a - b * eig.eigenvalues[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-10, "eigenpair {k} residual {resid}");
        }
    }

    #[test]
    fn reduced_spectrum_is_subset_of_full_spectrum() {
        for n in [3usize, 5, 8] {
            let f: Vec<f64> = (0..=n).map(|w| ((w * 7) % 5) as f64 - 1.5).collect();
            let sp = SymmetricProblem::new(n, f).unwrap();
            let full = sorted_eigenvalues(
                assemble_diagonal(&sp.to_diagonal_cost().unwrap(), 0.8, 0.6).unwrap().to_dense().unwrap(),
            );
            let red = sorted_eigenvalues(symmetric_reduce(&sp, 0.8, 0.6).to_dense().unwrap());
            let mut used = vec![false; full.len()];
            for e in red {
                let hit = full
                    .iter()
                    .enumerate()
                    .position(|(k, &x)| !used[k] && (x - e).abs() < 1e-10)
                    .unwrap_or_else(|| panic!("reduced eigenvalue {e} missing at n = {n}"));
                used[hit] = true;
            }
        }
    }

    #[test]
    fn lifted_states_are_normalized() {
        for w in 0..=6 {
            let d = dicke_basis_state(6, w).unwrap();
            let norm: f64 = d.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }
}
