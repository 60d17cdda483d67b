//! Gibbs states and trace distance.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Error, Result};
use crate::ising::LinearOp;

/// Largest dimension for dense thermal states.
pub const THERMAL_LIMIT: usize = 1 << 12;

/// `rho = exp(-beta H) / Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    pub rho: DMatrix<f64>,
    pub beta: f64,
    /// `ln Z`, kept in log form because `Z` itself overflows easily.
    pub log_partition: f64,
    /// Eigenvalue-ordered Boltzmann weights `exp(-beta E_k) / Z`.
    pub weights: Vec<f64>,
}

impl ThermalState {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }
}

fn check_dim(h: &LinearOp) -> Result<()> {
    ensure(h.dim() <= THERMAL_LIMIT, || {
        format!("thermal states limited to dimension {THERMAL_LIMIT}, got {}", h.dim())
    })
}

pub fn thermal_state(h: &LinearOp, beta: f64) -> Result<ThermalState> {
    check_dim(h)?;
    ensure(beta >= 0.0, || format!("inverse temperature must be nonnegative, got {beta}"))?;
    let eig = h.to_dense()?.symmetric_eigen();
    let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = eig.eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
    let sum: f64 = shifted.iter().sum();
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::Numeric(format!("Boltzmann weights overflow at beta = {beta}")));
    }
    let weights: Vec<f64> = shifted.iter().map(|w| w / sum).collect();
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&DVector::from_column_slice(&weights));
    let rho = &scaled * v.transpose();
    let rho = (&rho + rho.transpose()) * 0.5;
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    Ok(ThermalState {
        rho,
        beta,
        log_partition: sum.ln() - beta * e0,
        weights: order.iter().map(|&i| weights[i]).collect(),
    })
}

/// `|g><g|` for the lowest eigenvector of `h`.
pub fn ground_projector(h: &LinearOp) -> Result<DMatrix<f64>> {
    check_dim(h)?;
    let eig = h.to_dense()?.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    let g = eig.eigenvectors.column(k);
    Ok(&g * g.transpose())
}

/// `beta = (n ln 2 + ln(1/delta)) / Delta`: enough to bring the Gibbs state within
/// trace distance `delta` of the ground state when the gap is `Delta`.
pub fn beta_for_target(gap: f64, n: usize, delta_tol: f64) -> Result<f64> {
    ensure(gap > 0.0, || format!("gap must be positive, got {gap}"))?;
    ensure(delta_tol > 0.0 && delta_tol < 1.0, || format!("tolerance {delta_tol} outside (0, 1)"))?;
    Ok((n as f64 * std::f64::consts::LN_2 - delta_tol.ln()) / gap)
}

/// `(1/2) ||rho - sigma||_1` from the eigenvalues of the difference.
pub fn trace_distance(rho: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    ensure(rho.shape() == sigma.shape(), || "density matrices differ in shape".into())?;
    ensure(rho.is_square(), || "density matrix must be square".into())?;
    let diff = rho - sigma;
    let diff = (&diff + diff.transpose()) * 0.5;
    Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::transverse_field;
    use approx::assert_abs_diff_eq;

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let h = transverse_field(3).unwrap();
        let t = thermal_state(&h, 0.0).unwrap();
        let mixed = DMatrix::<f64>::identity(8, 8) / 8.0;
        assert!((&t.rho - mixed).abs().max() < 1e-12);
        assert_abs_diff_eq!(t.log_partition, 8f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn low_temperature_approaches_ground_projector() {
        let h = LinearOp::diagonal(vec![0.3, -1.0, 2.0, 0.0]);
        let t = thermal_state(&h, 200.0).unwrap();
        let p = ground_projector(&h).unwrap();
        assert!((&t.rho - p).abs().max() < 1e-10);
    }

    #[test]
    fn two_level_boltzmann_weights() {
        let h = LinearOp::diagonal(vec![0.0, 1.0]);
        let t = thermal_state(&h, 3f64.ln()).unwrap();
        assert_abs_diff_eq!(t.rho[(0, 0)], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rho[(1, 1)], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rho.trace(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_formula() {
        let b = beta_for_target(1.0, 10, 0.01).unwrap();
        assert_abs_diff_eq!(b, 10.0 * 2f64.ln() + 100f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(b, 11.5366, epsilon = 1e-4);
        assert_abs_diff_eq!(beta_for_target(2.0, 10, 0.01).unwrap(), b / 2.0, epsilon = 1e-12);
        assert!(beta_for_target(0.0, 1, 0.1).is_err());
        assert!(beta_for_target(1.0, 1, 1.0).is_err());
    }

    /// Two-level oracle: with gap 1 the trace distance to the ground projector
    /// is the excited-state weight `1 / (1 + e^beta)`.
    #[test]
    fn single_qubit_thermal_bound() {
        let h = transverse_field(1).unwrap();
        let beta = beta_for_target(2.0, 1, 0.01).unwrap();
        let t = thermal_state(&h, beta).unwrap();
        let d = trace_distance(&t.rho, &ground_projector(&h).unwrap()).unwrap();
        assert_abs_diff_eq!(d, 1.0 / (1.0 + (2.0 * beta).exp()), epsilon = 1e-12);
        assert!(d <= 0.01);
    }

    #[test]
    fn trace_distance_examples() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.75, 0.25]));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        assert_abs_diff_eq!(trace_distance(&a, &a).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&b, &c).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&a, &b).unwrap(), 0.25, epsilon = 1e-15);
        assert!(trace_distance(&a, &DMatrix::zeros(3, 3)).is_err());
    }
}
