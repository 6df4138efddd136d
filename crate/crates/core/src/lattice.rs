//! Computation-basis states `|l, j, S>` and superpositions over them.
//!
//! A state is a head internal state `l`, a head lattice site `j`, and a
//! qubit configuration `S` in which all but finitely many sites hold the
//! blank symbol 0.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Lattice site index.
pub type Site = i64;

/// Qubit symbol. The counting machine uses the ternary alphabet {0, 1, 2}.
pub type Symbol = u8;

/// Head internal state.
pub type HeadState = u8;

pub const BLANK: Symbol = 0;
pub const MARKER: Symbol = 2;

/// Finite-support qubit configuration.
///
/// Entries are kept sorted by site and never hold [`BLANK`], so two
/// configurations are equal exactly when they describe the same lattice.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct QubitConfig {
    entries: Vec<(Site, Symbol)>,
}

impl QubitConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, site: Site) -> Symbol {
        match self.entries.binary_search_by_key(&site, |&(s, _)| s) {
            Ok(i) => self.entries[i].1,
            Err(_) => BLANK,
        }
    }

    pub fn set(&mut self, site: Site, symbol: Symbol) {
        match self.entries.binary_search_by_key(&site, |&(s, _)| s) {
            Ok(i) if symbol == BLANK => {
                self.entries.remove(i);
            }
            Ok(i) => self.entries[i].1 = symbol,
            Err(_) if symbol == BLANK => {}
            Err(i) => self.entries.insert(i, (site, symbol)),
        }
    }

    /// Non-blank sites in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (Site, Symbol)> + '_ {
        self.entries.iter().copied()
    }

    /// Number of non-blank sites.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_blank(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sites holding `symbol` (which must not be blank), ascending.
    pub fn sites_with(&self, symbol: Symbol) -> Vec<Site> {
        self.iter()
            .filter(|&(_, s)| s == symbol)
            .map(|(site, _)| site)
            .collect()
    }

    pub fn translated(&self, offset: Site) -> Self {
        Self {
            entries: self.entries.iter().map(|&(s, v)| (s + offset, v)).collect(),
        }
    }
}

impl FromIterator<(Site, Symbol)> for QubitConfig {
    fn from_iter<I: IntoIterator<Item = (Site, Symbol)>>(iter: I) -> Self {
        let mut config = QubitConfig::new();
        for (site, symbol) in iter {
            config.set(site, symbol);
        }
        config
    }
}

/// One computation-basis element `|l, j, S>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BasisState {
    pub head_state: HeadState,
    pub head_site: Site,
    pub qubits: QubitConfig,
}

impl BasisState {
    pub fn new(head_state: HeadState, head_site: Site, qubits: QubitConfig) -> Self {
        Self {
            head_state,
            head_site,
            qubits,
        }
    }

    /// Symbol under the head.
    pub fn read(&self) -> Symbol {
        self.qubits.get(self.head_site)
    }

    /// The same state shifted rigidly along the lattice.
    pub fn translated(&self, offset: Site) -> Self {
        Self {
            head_state: self.head_state,
            head_site: self.head_site + offset,
            qubits: self.qubits.translated(offset),
        }
    }
}

/// Finite superposition of basis states.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaveFunction {
    amplitudes: BTreeMap<BasisState, Complex64>,
    prune_threshold: f64,
}

impl WaveFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(state: BasisState) -> Self {
        let mut psi = Self::zero();
        psi.add(state, Complex64::new(1.0, 0.0));
        psi
    }

    /// Amplitudes with magnitude strictly below `threshold` are dropped on
    /// insertion. The default of 0 keeps everything.
    pub fn with_prune_threshold(mut self, threshold: f64) -> Self {
        self.prune_threshold = threshold;
        self.amplitudes.retain(|_, a| a.norm() >= threshold);
        self
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune_threshold
    }

    /// Adds `amplitude` to the coefficient of `state`.
    pub fn add(&mut self, state: BasisState, amplitude: Complex64) {
        match self.amplitudes.entry(state) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += amplitude;
                if e.get().norm() < self.prune_threshold {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if amplitude.norm() >= self.prune_threshold {
                    e.insert(amplitude);
                }
            }
        }
    }

    pub fn amplitude(&self, state: &BasisState) -> Complex64 {
        self.amplitudes.get(state).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// `<self | other>`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        small
            .amplitudes
            .iter()
            .filter_map(|(b, a)| large.amplitudes.get(b).map(|c| (a, c)))
            .map(|(a, c)| if conj_small { a.conj() * c } else { c.conj() * a })
            .sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            amplitudes: self.amplitudes.iter().map(|(b, a)| (b.clone(), a * factor)).collect(),
            prune_threshold: self.prune_threshold,
        }
    }
}

impl FromIterator<(BasisState, Complex64)> for WaveFunction {
    fn from_iter<I: IntoIterator<Item = (BasisState, Complex64)>>(iter: I) -> Self {
        let mut psi = WaveFunction::zero();
        for (b, a) in iter {
            psi.add(b, a);
        }
        psi
    }
}

/// Places markers at site 0 and then cumulatively at each spacing.
///
/// Spacing `n + 1` leaves room for an `n`-digit counter between two
/// neighbouring markers.
pub fn make_marker_lattice(spacings: &[Site]) -> Result<QubitConfig> {
    if spacings.is_empty() {
        return Err(invalid("marker spacings must be nonempty"));
    }
    if let Some(bad) = spacings.iter().find(|&&s| s < 1) {
        return Err(invalid(format!("marker spacing {bad} is not positive")));
    }
    let mut config = QubitConfig::new();
    let mut site = 0;
    config.set(site, MARKER);
    for &spacing in spacings {
        site += spacing;
        config.set(site, MARKER);
    }
    Ok(config)
}

/// A lone marker at site 0: the unbounded enumeration layout.
pub fn single_marker_lattice() -> QubitConfig {
    std::iter::once((0, MARKER)).collect()
}

/// Reads the binary counter strictly between two markers. The digit just
/// left of `right_marker` is the least significant bit.
pub fn decode_between_markers(config: &QubitConfig, left_marker: Site, right_marker: Site) -> Result<u64> {
    for site in [left_marker, right_marker] {
        if config.get(site) != MARKER {
            return Err(Error::MalformedCounter(format!("site {site} does not hold a marker")));
        }
    }
    if right_marker <= left_marker {
        return Err(invalid("right marker must lie to the right of the left marker"));
    }
    if right_marker - left_marker - 1 > 64 {
        return Err(Error::MalformedCounter(format!(
            "{} digits do not fit in 64 bits",
            right_marker - left_marker - 1
        )));
    }
    let mut value = 0u64;
    for site in left_marker + 1..right_marker {
        let bit = match config.get(site) {
            0 => 0,
            1 => 1,
            s => {
                return Err(Error::MalformedCounter(format!(
                    "symbol {s} at site {site} between markers"
                )))
            }
        };
        value |= bit << (right_marker - 1 - site);
    }
    Ok(value)
}

/// Normalized superposition of the listed states. Repeated states add.
pub fn wave_packet(states: &[(BasisState, Complex64)]) -> Result<WaveFunction> {
    if states.is_empty() {
        return Err(invalid("wave packet needs at least one state"));
    }
    let psi: WaveFunction = states.iter().cloned().collect();
    let norm_sqr = psi.norm_sqr();
    if norm_sqr == 0.0 {
        return Err(Error::DegenerateState);
    }
    Ok(psi.scaled(Complex64::new(norm_sqr.sqrt().recip(), 0.0)))
}

/// Unnormalized Gaussian envelope `exp(-(x - center)^2 / (2 width^2))`
/// sampled at `sites`.
pub fn gaussian_profile(sites: &[Site], center: f64, width: f64) -> Vec<f64> {
    sites
        .iter()
        .map(|&s| {
            let x = s as f64 - center;
            (-x * x / (2.0 * width * width)).exp()
        })
        .collect()
}
