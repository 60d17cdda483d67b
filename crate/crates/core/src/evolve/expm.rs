//! `exp(-i tau H) psi` by Chebyshev expansion.
//!
//! With `H = c + r Ht` and the spectrum of `Ht` inside `[-1, 1]`,
//! `exp(-i tau H) = exp(-i tau c) sum_k (2 - delta_k0) (-i)^k J_k(tau r) T_k(Ht)`.
//! The series is cut where the Bessel tail bound
//! `2 sum_{k>K} |J_k(x)| <= 2 (x/2)^(K+1) / (K+1)! / (1 - x / (2(K+2)))`
//! drops below [`TRUNCATION`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ising::LinearOp;

/// Bound on the discarded tail of the expansion, relative to `||psi||`.
pub const TRUNCATION: f64 = 1e-15;

/// Scratch buffers reused across calls.
#[derive(Debug, Default)]
pub struct Workspace {
    t0: Vec<Complex64>,
    t1: Vec<Complex64>,
    t2: Vec<Complex64>,
}

impl Workspace {
    fn resize(&mut self, dim: usize) {
        for v in [&mut self.t0, &mut self.t1, &mut self.t2] {
            v.resize(dim, Complex64::default());
        }
    }
}

/// Number of terms beyond `J_0` so that the tail bound is below `eps`.
pub fn truncation_order(x: f64, eps: f64) -> usize {
    let x = x.abs();
    if x == 0.0 {
        return 0;
    }
    let half_ln = (x / 2.0).ln();
    let mut ln_fact = 0.0;
    let mut k = 0usize;
    loop {
        ln_fact += ((k + 1) as f64).ln();
        let ratio = x / (2.0 * (k + 2) as f64);
        if ratio < 0.5 {
            let ln_tail = std::f64::consts::LN_2 + (k + 1) as f64 * half_ln - ln_fact - (1.0 - ratio).ln();
            if ln_tail < eps.ln() {
                return k;
            }
        }
        k += 1;
    }
}

/// `J_0(x) ..= J_order(x)` for `x >= 0` by Miller's backward recurrence.
pub fn bessel_j(order: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; order + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = order.max(x.ceil() as usize);
    let start = top + 16 + (40.0 * top as f64).sqrt() as usize;
    let start = start + start % 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-30;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&j) {
        *o = v / norm;
    }
    out
}

/// `out = exp(-i tau H) psi`.
pub fn expm_apply(
    op: &LinearOp,
    tau: f64,
    psi: &[Complex64],
    out: &mut [Complex64],
    ws: &mut Workspace,
) -> Result<()> {
    let dim = op.dim();
    if psi.len() != dim || out.len() != dim {
        return Err(Error::Contract(format!("state of length {} for operator of dimension {dim}", psi.len())));
    }
    if tau == 0.0 {
        out.copy_from_slice(psi);
        return Ok(());
    }
    if op.is_diagonal() {
        for ((o, p), &d) in out.iter_mut().zip(psi).zip(op.diag()) {
            *o = p * Complex64::from_polar(1.0, -tau * d);
        }
        return Ok(());
    }
    let (lo, hi) = op.spectral_bounds();
    let center = 0.5 * (lo + hi);
    let radius = 0.5 * (hi - lo);
    if radius == 0.0 {
        let global = Complex64::from_polar(1.0, -tau * center);
        for (o, p) in out.iter_mut().zip(psi) {
            *o = p * global;
        }
        return Ok(());
    }
    let x = tau * radius;
    let order = truncation_order(x, TRUNCATION);
    let mut coeffs = bessel_j(order, x.abs());
    if x < 0.0 {
        coeffs.iter_mut().skip(1).step_by(2).for_each(|c| *c = -*c);
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric(format!("Bessel coefficients overflow at argument {x}")));
    }
    let phase = |k: usize| match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    ws.resize(dim);
    let Workspace { t0, t1, t2 } = ws;
    let inv_r = 1.0 / radius;
    // t0 = psi, t1 = Ht psi
    t0.copy_from_slice(psi);
    op.apply(psi, t1);
    for (a, p) in t1.iter_mut().zip(psi) {
        *a = (*a - p * center) * inv_r;
    }
    let a0 = Complex64::new(coeffs[0], 0.0);
    for (o, p) in out.iter_mut().zip(psi) {
        *o = p * a0;
    }
    if order >= 1 {
        let a1 = phase(1) * (2.0 * coeffs[1]);
        for (o, t) in out.iter_mut().zip(t1.iter()) {
            *o += t * a1;
        }
    }
    for (k, &c) in coeffs.iter().enumerate().skip(2) {
        op.apply(t1, t2);
        let ak = phase(k) * (2.0 * c);
        for (((n, cur), prev), o) in t2.iter_mut().zip(t1.iter()).zip(t0.iter()).zip(out.iter_mut()) {
            *n = (*n - cur * center) * (2.0 * inv_r) - prev;
            *o += *n * ak;
        }
        std::mem::swap(t0, t1);
        std::mem::swap(t1, t2);
    }
    let global = Complex64::from_polar(1.0, -tau * center);
    out.iter_mut().for_each(|o| *o *= global);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{transverse_field, Hopping};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j(3, 1.0);
        assert_abs_diff_eq!(j[0], 0.765_197_686_557_966_6, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1], 0.440_050_585_744_933_5, epsilon = 1e-15);
        assert_abs_diff_eq!(j[3], 0.019_563_353_982_668_4, epsilon = 1e-15);
        let j = bessel_j(120, 50.0);
        assert_abs_diff_eq!(j[0], 0.055_812_327_669_251_6, epsilon = 1e-13);
        let squares = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        assert_abs_diff_eq!(squares, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn truncation_bound_controls_tail() {
        for &x in &[0.01, 1.0, 10.0, 200.0] {
            let k = truncation_order(x, TRUNCATION);
            let j = bessel_j(k + 40, x);
            let tail: f64 = j[k + 1..].iter().map(|v| 2.0 * v.abs()).sum();
            assert!(tail < TRUNCATION, "x = {x}: tail {tail}");
        }
    }

    /// `exp(-i t X)` on one qubit is `cos t - i sin t X`.
    #[test]
    fn rabi_rotation() {
        let h = transverse_field(1).unwrap().scaled(-1.0);
        let psi = [Complex64::new(1.0, 0.0), Complex64::default()];
        let mut out = [Complex64::default(); 2];
        let t = std::f64::consts::FRAC_PI_2;
        expm_apply(&h, t, &psi, &mut out, &mut Workspace::default()).unwrap();
        assert_abs_diff_eq!(out[0].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1].re, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1].im, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn agrees_with_eigendecomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 6;
        let diag: Vec<f64> = (0..1 << n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let h = LinearOp::new(diag, 0.7, Hopping::Transverse { n }).unwrap();
        let psi: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let eig = h.to_dense().unwrap().symmetric_eigen();
        for &t in &[0.3, -2.0, 17.5] {
            let mut out = vec![Complex64::default(); 1 << n];
            expm_apply(&h, t, &psi, &mut out, &mut Workspace::default()).unwrap();
            let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::from_polar(1.0, -t * e)));
            let u = &v * phases * v.transpose();
            let want = u * nalgebra::DVector::from_vec(psi.clone());
            for (a, b) in out.iter().zip(want.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }
}
