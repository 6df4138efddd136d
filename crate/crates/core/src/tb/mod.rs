//! Tight-binding chains built from potential words.
//!
//! `H = K(2 - U - U^dagger) + V` on an open chain of `N = len(word) + 1`
//! path sites: the diagonal is `2K` everywhere and bond `b` hops with
//! amplitude `K`, or `K gamma` where the word has a 1.

mod eigen;
mod evolve;
mod transfer;

pub use eigen::{bisection_eigenvalues, sturm_count, tridiagonal_eigen, EigenDecomposition};
pub use evolve::{evolve, EvolveMethod};
pub use transfer::{scattering, transfer_product, transmission, Scattering, TransferMatrix};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Largest chain [`spectrum`] and [`evolve`] accept by default.
pub const DEFAULT_DIM_CAP: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Boundary {
    Open,
}

/// Real symmetric tridiagonal Hamiltonian with off-diagonal `-hopping[b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightBindingMatrix {
    pub k: f64,
    pub gamma: f64,
    pub diagonal: Vec<f64>,
    pub hoppings: Vec<f64>,
    pub boundary: Boundary,
}

pub(crate) fn check_k_gamma(k: f64, gamma: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(invalid(format!("energy scale K = {k} must be positive")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma {gamma} outside (0, 1]")));
    }
    Ok(())
}

/// Bond hoppings for a word: `K` for 0, `K gamma` for 1.
pub fn word_hoppings(bits: &[u8], k: f64, gamma: f64) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { k } else { k * gamma }).collect()
}

/// Chain for `bits` with open ends. An empty word gives the single site
/// `[2K]`.
pub fn build_hamiltonian(bits: &[u8], k: f64, gamma: f64, boundary: Boundary) -> Result<TightBindingMatrix> {
    check_k_gamma(k, gamma)?;
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(invalid(format!("word symbol {b} is not a bit")));
    }
    Ok(TightBindingMatrix {
        k,
        gamma,
        diagonal: vec![2.0 * k; bits.len() + 1],
        hoppings: word_hoppings(bits, k, gamma),
        boundary,
    })
}

impl TightBindingMatrix {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Matrix entries just off the diagonal.
    pub fn off_diagonal(&self) -> Vec<f64> {
        self.hoppings.iter().map(|h| -h).collect()
    }

    /// `2K(1 - gamma)` on weighted bonds, 0 elsewhere.
    pub fn potential_heights(&self) -> Vec<f64> {
        self.hoppings
            .iter()
            .map(|&h| if h < self.k { 2.0 * (self.k - h) } else { 0.0 })
            .collect()
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let mut out: Vec<Complex64> = psi.iter().zip(&self.diagonal).map(|(p, d)| p * d).collect();
        for b in 0..n.saturating_sub(1) {
            let h = self.hoppings[b];
            out[b] -= psi[b + 1] * h;
            out[b + 1] -= psi[b] * h;
        }
        out
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        self.apply(psi).iter().zip(psi).map(|(h, p)| (p.conj() * h).re).sum()
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let left = if i > 0 { self.hoppings[i - 1].abs() } else { 0.0 };
                let right = self.hoppings.get(i).map_or(0.0, |h| h.abs());
                self.diagonal[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i];
        }
        for (b, &h) in self.hoppings.iter().enumerate() {
            m[b][b + 1] = -h;
            m[b + 1][b] = -h;
        }
        m
    }

    pub fn check_dim(&self, cap: usize) -> Result<()> {
        if self.dim() > cap {
            return Err(Error::Resource(format!(
                "chain of {} sites exceeds the cap of {cap}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// All eigenvalues in ascending order.
pub fn spectrum(h: &TightBindingMatrix) -> Result<Vec<f64>> {
    spectrum_with_cap(h, DEFAULT_DIM_CAP)
}

pub fn spectrum_with_cap(h: &TightBindingMatrix, cap: usize) -> Result<Vec<f64>> {
    h.check_dim(cap)?;
    Ok(bisection_eigenvalues(&h.diagonal, &h.off_diagonal()))
}

/// Eigenvalues `2K(1 - cos(pi m / (N + 1)))`, `m = 1..N`, of the uniform
/// open chain.
pub fn free_chain_spectrum(n: usize, k: f64) -> Vec<f64> {
    (1..=n)
        .map(|m| 2.0 * k * (1.0 - (std::f64::consts::PI * m as f64 / (n as f64 + 1.0)).cos()))
        .collect()
}
