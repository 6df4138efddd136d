use num_complex::Complex64;
use serde::Serialize;

use super::{tridiagonal_eigen, TightBindingMatrix, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvolveMethod {
    /// Spectral decomposition; the reference.
    ExactDiag,
    /// Truncated Taylor series of `exp(-i H dt)` over substeps with
    /// `|H| dt <= 1/2`, checking the norm after every substep.
    CheckedStepper,
}

const NORM_TOLERANCE: f64 = 1e-12;
const STEPPER_DRIFT_LIMIT: f64 = 1e-9;

/// `exp(-i H t) psi0` (units with hbar = 1).
pub fn evolve(h: &TightBindingMatrix, psi0: &[Complex64], t: f64, method: EvolveMethod) -> Result<Vec<Complex64>> {
    h.check_dim(DEFAULT_DIM_CAP)?;
    if psi0.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.len(),
        });
    }
    let norm_sqr: f64 = psi0.iter().map(|a| a.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr });
    }
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    match method {
        EvolveMethod::ExactDiag => Ok(exact_diag(h, psi0, t)),
        EvolveMethod::CheckedStepper => taylor_stepper(h, psi0, t),
    }
}

fn exact_diag(h: &TightBindingMatrix, psi0: &[Complex64], t: f64) -> Vec<Complex64> {
    let n = h.dim();
    let eig = tridiagonal_eigen(&h.diagonal, &h.off_diagonal());
    let mut out = vec![Complex64::default(); n];
    for m in 0..n {
        let overlap: Complex64 = (0..n).map(|i| psi0[i] * eig.component(i, m)).sum();
        let phase = Complex64::from_polar(1.0, -eig.values[m] * t);
        let coeff = overlap * phase;
        for (i, o) in out.iter_mut().enumerate() {
            *o += coeff * eig.component(i, m);
        }
    }
    out
}

fn taylor_stepper(h: &TightBindingMatrix, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    let bound = h.norm_bound().max(f64::MIN_POSITIVE);
    let substeps = (t.abs() * bound / 0.5).ceil().max(1.0) as usize;
    let dt = t / substeps as f64;
    let minus_i_dt = Complex64::new(0.0, -dt);
    let mut psi = psi0.to_vec();
    for _ in 0..substeps {
        let mut term = psi.clone();
        let mut next = psi.clone();
        for order in 1..=60 {
            term = h.apply(&term);
            let factor = minus_i_dt / order as f64;
            let mut term_norm = 0.0;
            for (x, acc) in term.iter_mut().zip(next.iter_mut()) {
                *x *= factor;
                *acc += *x;
                term_norm += x.norm_sqr();
            }
            if term_norm < 1e-36 {
                break;
            }
        }
        psi = next;
        let drift = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
        if drift > STEPPER_DRIFT_LIMIT {
            return Err(Error::Resource(format!("Taylor stepper norm drift {drift:e}")));
        }
    }
    Ok(psi)
}
