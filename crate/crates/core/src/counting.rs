//! The seven-term counting machine and its standard initial states.
//!
//! Head states: 0 walks right looking for a marker, 1 walks right to the
//! units marker, 2 carries leftward while adding one. Between two markers
//! at sites `a` and `a + n + 1` the machine enumerates every `n`-digit
//! binary number, least significant digit at `a + n`, then restores the
//! blank counter and leaves to the right in head state 1.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{
    decode_between_markers, gaussian_profile, make_marker_lattice, single_marker_lattice, wave_packet, BasisState,
    QubitConfig, Site, WaveFunction, MARKER,
};
use crate::path::{potential_word, unfold_path, PotentialWord};
use crate::step::{Move, QubitTransform, StepOperator, StepTerm};
use crate::substitution::{expanded_len, r_direct};

pub const HEAD_STATES: u8 = 3;
pub const QUBIT_SYMBOLS: u8 = 3;

/// 1-based id of the only weighted term (head 2 reads 1).
pub const WEIGHTED_TERM_ID: usize = 5;

/// The counting step operator; term `k` of the returned list carries id
/// `k + 1`.
pub fn build_counting_t(gamma: f64) -> Result<StepOperator> {
    use Move::{Left, Right};
    use QubitTransform::{Exchange01, Identity};
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma {gamma} outside (0, 1]")));
    }
    let terms = vec![
        StepTerm::unit(0, 0, 0, Identity, Right),
        StepTerm::unit(0, 2, 1, Identity, Right),
        StepTerm::unit(1, 0, 0, Identity, Right),
        StepTerm::unit(1, 2, 1, Identity, Left),
        StepTerm::new(2, 1, 0, Exchange01, Left, gamma)?,
        StepTerm::unit(2, 0, -1, Exchange01, Right),
        StepTerm::unit(2, 2, 1, Identity, Right),
    ];
    StepOperator::new(terms, HEAD_STATES, QUBIT_SYMBOLS)
}

/// Marker arrangement on the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MarkerLayout {
    /// Consecutive counters of `n_i` digits each: markers at 0,
    /// `n_1 + 1`, `n_1 + n_2 + 2`, ...
    Counters(Vec<u32>),
    /// One marker at site 0; the counter grows leftward without bound.
    SingleMarker,
}

impl MarkerLayout {
    pub fn counter(n: u32) -> Self {
        MarkerLayout::Counters(vec![n])
    }

    pub fn lattice(&self) -> Result<QubitConfig> {
        match self {
            MarkerLayout::Counters(ns) => {
                if let Some(&bad) = ns.iter().find(|&&n| n < 1) {
                    return Err(invalid(format!("counter width {bad} must be at least 1")));
                }
                let spacings: Vec<Site> = ns.iter().map(|&n| n as Site + 1).collect();
                make_marker_lattice(&spacings)
            }
            MarkerLayout::SingleMarker => Ok(single_marker_lattice()),
        }
    }

    /// Marker sites, ascending.
    pub fn marker_sites(&self) -> Vec<Site> {
        match self {
            MarkerLayout::Counters(ns) => std::iter::once(0)
                .chain(ns.iter().scan(0, |site, &n| {
                    *site += n as Site + 1;
                    Some(*site)
                }))
                .collect(),
            MarkerLayout::SingleMarker => vec![0],
        }
    }

    /// Head state 1 sitting on the first units marker.
    pub fn units_seed(&self) -> Result<BasisState> {
        let site = match self {
            MarkerLayout::Counters(ns) => ns
                .first()
                .map(|&n| n as Site + 1)
                .ok_or_else(|| invalid("no counters"))?,
            MarkerLayout::SingleMarker => 0,
        };
        Ok(BasisState::new(1, site, self.lattice()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingMachineConfig {
    pub gamma: f64,
    /// Energy scale of the derived tight-binding chain.
    pub k: f64,
    pub layout: MarkerLayout,
}

impl CountingMachineConfig {
    pub fn new(gamma: f64, k: f64, layout: MarkerLayout) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid(format!("gamma {gamma} outside (0, 1]")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("energy scale K = {k} must be positive")));
        }
        layout.lattice()?;
        Ok(Self { gamma, k, layout })
    }

    pub fn operator(&self) -> StepOperator {
        build_counting_t(self.gamma).expect("gamma validated on construction")
    }

    /// Potential height `2K(1 - gamma)` carried by each weighted bond.
    pub fn potential_height(&self) -> f64 {
        2.0 * self.k * (1.0 - self.gamma)
    }
}

/// Where the head starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HeadVariant {
    /// Gaussian packet in head state 0 over sites `-width..=-1`.
    PacketLeftHead0 { width: usize },
    /// Head state 1 on the units marker at `n + 1`.
    AtUnitsMarkerHead1,
}

pub fn initial_state_counting(n: u32, head: HeadVariant) -> Result<WaveFunction> {
    if n < 1 {
        return Err(invalid("counter width n must be at least 1"));
    }
    let layout = MarkerLayout::counter(n);
    match head {
        HeadVariant::AtUnitsMarkerHead1 => Ok(WaveFunction::basis(layout.units_seed()?)),
        HeadVariant::PacketLeftHead0 { width } => {
            if width == 0 {
                return Err(invalid("packet width must be at least 1"));
            }
            let qubits = layout.lattice()?;
            let sites: Vec<Site> = (-(width as Site)..0).collect();
            let center = -(width as f64 + 1.0) / 2.0;
            let profile = gaussian_profile(&sites, center, (width as f64 / 4.0).max(1.0));
            let states: Vec<_> = sites
                .iter()
                .zip(profile)
                .map(|(&j, a)| (BasisState::new(0, j, qubits.clone()), Complex64::new(a, 0.0)))
                .collect();
            wave_packet(&states)
        }
    }
}

/// Steps taken to add one to a counter holding `j`: walk left over the
/// `R(j)` trailing ones and back.
pub fn increment_cost(j: u64) -> usize {
    2 * r_direct(j) as usize + 2
}

/// Step budget that comfortably covers a full enumeration of `n` digits
/// and the restoration sweep.
pub fn safe_step_bound(n: u32) -> usize {
    let sum: usize = (0..1u64 << n).map(increment_cost).sum();
    2 * sum + 4 * (n as usize + 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub step: usize,
    pub counter: u64,
    /// Term about to act (always term 4 on the units marker).
    pub term_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationTrace {
    pub entries: Vec<TraceEntry>,
    /// Step at which the blank counter is back and the head has left in
    /// state 1 past the units marker.
    pub restored_at: usize,
    pub weighted_steps: usize,
    pub final_state: BasisState,
}

impl EnumerationTrace {
    pub fn counters(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.counter).collect()
    }
}

/// Runs the machine from the units-marker seed, logging the counter each
/// time the head stands on the units marker in state 1.
pub fn enumeration_trace(n: u32, gamma: f64, max_steps: usize) -> Result<EnumerationTrace> {
    if n < 1 {
        return Err(invalid("counter width n must be at least 1"));
    }
    let op = build_counting_t(gamma)?;
    let layout = MarkerLayout::counter(n);
    let units = n as Site + 1;
    let initial = layout.lattice()?;
    let mut state = layout.units_seed()?;
    let mut entries = Vec::new();
    let mut weighted_steps = 0;
    for step in 0..=max_steps {
        if state.head_state == 1 && state.head_site == units {
            let counter = decode_between_markers(&state.qubits, 0, units)?;
            let term = op.term_for(state.head_state, state.read()).map_or(0, |i| i + 1);
            entries.push(TraceEntry {
                step,
                counter,
                term_id: term,
            });
        }
        if state.head_state == 1 && state.head_site > units && state.qubits == initial {
            return Ok(EnumerationTrace {
                entries,
                restored_at: step,
                weighted_steps,
                final_state: state,
            });
        }
        if step == max_steps {
            break;
        }
        let idx = op.step_in_place(&mut state).ok_or_else(|| Error::CorruptedOperator {
            site: state.head_site,
            detail: "counting run annihilated".into(),
        })?;
        if op.terms()[idx].weight < 1.0 {
            weighted_steps += 1;
        }
    }
    Err(Error::Horizon {
        steps: max_steps,
        goal: "restoring the initial lattice",
    })
}

/// Steps from the units seed until every counter has been run through and
/// the head has left the rightmost marker in state 1.
pub fn steps_until_restored(op: &StepOperator, layout: &MarkerLayout, max_steps: usize) -> Result<usize> {
    let MarkerLayout::Counters(_) = layout else {
        return Err(invalid("a single-marker run never restores"));
    };
    let last = *layout.marker_sites().last().expect("at least two markers");
    let initial = layout.lattice()?;
    let mut state = layout.units_seed()?;
    for step in 0..=max_steps {
        if state.head_state == 1 && state.head_site > last && state.qubits == initial {
            return Ok(step);
        }
        if step < max_steps && op.step_in_place(&mut state).is_none() {
            return Err(Error::CorruptedOperator {
                site: state.head_site,
                detail: "counting run annihilated".into(),
            });
        }
    }
    Err(Error::Horizon {
        steps: max_steps,
        goal: "restoring the initial lattice",
    })
}

/// Budget for [`steps_until_restored`] on a multi-counter layout.
pub fn layout_step_bound(layout: &MarkerLayout) -> usize {
    match layout {
        MarkerLayout::Counters(ns) => {
            ns.iter().map(|&n| safe_step_bound(n)).sum::<usize>() + 4 * layout.marker_sites().len()
        }
        MarkerLayout::SingleMarker => usize::MAX,
    }
}

/// Potential word of the path from the units seed up to restoration, or
/// the first `limit` steps of the unbounded single-marker run.
pub fn simulated_word(config: &CountingMachineConfig, limit: Option<usize>) -> Result<PotentialWord> {
    let op = config.operator();
    let steps = match (&config.layout, limit) {
        (_, Some(limit)) => limit,
        (MarkerLayout::Counters(_), None) => {
            steps_until_restored(&op, &config.layout, layout_step_bound(&config.layout))?
        }
        (MarkerLayout::SingleMarker, None) => {
            return Err(invalid("the single-marker run needs an explicit step limit"))
        }
    };
    let path = unfold_path(&op, &config.layout.units_seed()?, 0, steps)?;
    Ok(potential_word(&path))
}

/// Step index at which the head, in state 1, first stands on each units
/// marker of a multi-counter layout.
pub fn counter_start_steps(op: &StepOperator, layout: &MarkerLayout, max_steps: usize) -> Result<Vec<usize>> {
    let markers = layout.marker_sites();
    let units: Vec<Site> = markers[1..].to_vec();
    let mut starts = Vec::with_capacity(units.len());
    let mut state = layout.units_seed()?;
    for step in 0..=max_steps {
        if state.head_state == 1 && state.read() == MARKER && units.get(starts.len()) == Some(&state.head_site) {
            starts.push(step);
            if starts.len() == units.len() {
                return Ok(starts);
            }
        }
        if step < max_steps && op.step_in_place(&mut state).is_none() {
            break;
        }
    }
    Err(Error::Horizon {
        steps: max_steps,
        goal: "reaching every units marker",
    })
}

/// Zeros the machine inserts between consecutive counters' expanded
/// blocks, measured by running it: the distance between arrivals at
/// neighbouring units markers minus the block length.
pub fn measure_gaps(layout: &MarkerLayout, gamma: f64) -> Result<Vec<usize>> {
    let MarkerLayout::Counters(ns) = layout else {
        return Err(invalid("gaps exist only between bounded counters"));
    };
    let op = build_counting_t(gamma)?;
    let starts = counter_start_steps(&op, layout, layout_step_bound(layout))?;
    Ok(starts
        .windows(2)
        .zip(ns)
        .map(|(w, &n)| w[1] - w[0] - expanded_len(n))
        .collect())
}

/// Gaps predicted without running the machine: one overflow step past
/// the restored block, then a walk over the next counter's digits.
pub fn predicted_gaps(counters: &[u32]) -> Vec<usize> {
    counters.iter().skip(1).map(|&n| n as usize + 1).collect()
}
