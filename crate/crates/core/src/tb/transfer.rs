//! Transfer matrices and lead-to-lead scattering.
//!
//! The eigenvalue equation at a site with left bond `h_l` and right bond
//! `h_r` reads `psi_{n+1} = ((2K - E) psi_n - h_l psi_{n-1}) / h_r`.

use std::ops::Mul;

use num_complex::Complex64;
use serde::Serialize;

use super::{check_k_gamma, word_hoppings};
use crate::error::{Error, Result};

/// Maps `(psi_n, psi_{n-1})` to `(psi_{n+1}, psi_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix([[1.0, 0.0], [0.0, 1.0]]);

    /// Matrix across one site, `det = left_hop / right_hop`.
    pub fn site(energy: f64, k: f64, left_hop: f64, right_hop: f64) -> Self {
        TransferMatrix([[(2.0 * k - energy) / right_hop, -left_hop / right_hop], [1.0, 0.0]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [v[0] * m[0][0] + v[1] * m[0][1], v[0] * m[1][0] + v[1] * m[1][1]]
    }

    pub fn inverse(&self) -> Self {
        let m = &self.0;
        let det = self.det();
        TransferMatrix([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix(out)
    }
}

/// Product over the interior sites of a chain with bond hoppings
/// `hoppings`: site `s` (for `s = 1..len`) sits between bonds `s - 1` and
/// `s`. The determinant telescopes to `hoppings[0] / hoppings[len - 1]`.
pub fn transfer_product(hoppings: &[f64], energy: f64, k: f64) -> TransferMatrix {
    hoppings.windows(2).fold(TransferMatrix::IDENTITY, |acc, w| {
        TransferMatrix::site(energy, k, w[0], w[1]) * acc
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scattering {
    pub transmission: f64,
    pub reflection: f64,
}

/// Transmission and reflection probabilities for a plane wave of energy
/// `energy` sent through the word's bonds between two uniform leads of
/// hopping `k`.
pub fn scattering(bits: &[u8], energy: f64, k: f64, gamma: f64) -> Result<Scattering> {
    check_k_gamma(k, gamma)?;
    let band_top = 4.0 * k;
    if !(energy > 0.0 && energy < band_top) {
        return Err(Error::OutOfBand { energy, band_top });
    }
    // Lead dispersion E = 2K(1 - cos q).
    let q = ((2.0 * k - energy) / (2.0 * k)).acos();
    let eiq = Complex64::from_polar(1.0, q);

    let mut hops = Vec::with_capacity(bits.len() + 2);
    hops.push(k);
    hops.extend(word_hoppings(bits, k, gamma));
    hops.push(k);
    // Unit outgoing wave on the right, propagated back site by site to
    // the left lead. Inverting the full product instead would need its
    // determinant, which cancels catastrophically inside spectral gaps.
    // The pair is renormalized as it grows; `log_scale` keeps the factor.
    let diag = 2.0 * k - energy;
    let (mut psi0, mut psi_m1) = (eiq, Complex64::new(1.0, 0.0));
    let mut log_scale = 0.0;
    for w in hops.windows(2).rev() {
        let prev = (psi_m1 * diag - psi0 * w[1]) / w[0];
        psi0 = psi_m1;
        psi_m1 = prev;
        let size = psi0.norm().max(psi_m1.norm());
        if size > 1e100 {
            psi0 /= size;
            psi_m1 /= size;
            log_scale += size.ln();
        }
    }
    // psi_n = A e^{iqn} + B e^{-iqn} on the left lead.
    let incident = (psi_m1 - psi0 * eiq) / Complex64::new(0.0, -2.0 * q.sin());
    let reflected = psi0 - incident;
    let inc = incident.norm_sqr();
    Ok(Scattering {
        transmission: (-inc.ln() - 2.0 * log_scale).exp(),
        reflection: reflected.norm_sqr() / inc,
    })
}

/// `|t|^2` for [`scattering`].
pub fn transmission(bits: &[u8], energy: f64, k: f64, gamma: f64) -> Result<f64> {
    scattering(bits, energy, k, gamma).map(|s| s.transmission)
}
