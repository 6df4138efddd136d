//! Weighted quantum Turing machines on a one-dimensional qubit lattice.
//!
//! A step operator built from weighted elementary terms traces distinct
//! paths through the computation basis. Each path carries a
//! tight-binding Hamiltonian whose bond hoppings drop from `K` to
//! `K gamma` wherever a weighted term fired. For the counting machine the
//! resulting bond-potential word is predicted by the trailing-ones
//! sequence `R` and its block expansion; this crate simulates the machine,
//! builds the prediction independently, and provides spectra, dynamics and
//! transmission for the resulting chains.
//!
//! - [`lattice`]: basis states `|l, j, S>` and superpositions.
//! - [`step`]: step operators, adjoints, `T = UD`, distinct-path checks.
//! - [`counting`]: the seven-term counting machine and its initial states.
//! - [`path`]: unfolding paths and extracting potential words.
//! - [`substitution`]: `R`, its substitution rule and word expansion.
//! - [`tb`]: Hamiltonian, spectrum, evolution, transfer matrices.
//! - [`verify`]: the oracle suite behind `gqtm verify`.

pub mod counting;
pub mod error;
pub mod lattice;
pub mod path;
pub mod step;
pub mod substitution;
pub mod tb;
pub mod verify;

pub use error::{Error, Result};
