//! Step operators `T = sum_{l,s} gamma_{l,s} W_{l,s}` acting on the
//! computation basis, their adjoints, the split `T = U D`, and empirical
//! checks that iterating `T` traces distinct paths.
//!
//! Every elementary term reads the head state and the qubit under the
//! head, rewrites that qubit, moves the head one site, and cyclically
//! shifts the head state, in that order.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{BasisState, HeadState, Site, Symbol, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Move {
    Right,
    Left,
}

impl Move {
    pub fn delta(self) -> Site {
        match self {
            Move::Right => 1,
            Move::Left => -1,
        }
    }
}

/// Qubit rewrite applied at the head site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum QubitTransform {
    Identity,
    /// Swaps 0 and 1; every other symbol is left alone.
    Exchange01,
}

impl QubitTransform {
    pub fn apply(self, s: Symbol) -> Symbol {
        match (self, s) {
            (QubitTransform::Exchange01, 0) => 1,
            (QubitTransform::Exchange01, 1) => 0,
            (_, s) => s,
        }
    }

    /// Both transforms are involutions.
    pub fn inverse(self) -> Self {
        self
    }
}

/// One weighted elementary term.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepTerm {
    pub read_head: HeadState,
    pub read_qubit: Symbol,
    /// Cyclic shift applied to the head state, taken mod the number of
    /// head states.
    pub head_shift: i32,
    pub qubit_transform: QubitTransform,
    pub movement: Move,
    pub weight: f64,
}

impl StepTerm {
    pub fn new(
        read_head: HeadState,
        read_qubit: Symbol,
        head_shift: i32,
        qubit_transform: QubitTransform,
        movement: Move,
        weight: f64,
    ) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self {
            read_head,
            read_qubit,
            head_shift,
            qubit_transform,
            movement,
            weight,
        })
    }

    /// Same as [`StepTerm::new`] with weight 1.
    pub fn unit(
        read_head: HeadState,
        read_qubit: Symbol,
        head_shift: i32,
        qubit_transform: QubitTransform,
        movement: Move,
    ) -> Self {
        Self {
            read_head,
            read_qubit,
            head_shift,
            qubit_transform,
            movement,
            weight: 1.0,
        }
    }

    fn written(&self) -> Symbol {
        self.qubit_transform.apply(self.read_qubit)
    }

    fn image_head(&self, head_states: HeadState) -> HeadState {
        (self.read_head as i64 + self.head_shift as i64).rem_euclid(head_states as i64) as HeadState
    }

    pub fn matches(&self, state: &BasisState) -> bool {
        state.head_state == self.read_head && state.read() == self.read_qubit
    }

    /// Whether `state` lies in the range of this term, i.e. the adjoint
    /// does not annihilate it.
    pub fn adjoint_matches(&self, state: &BasisState, head_states: HeadState) -> bool {
        state.head_state == self.image_head(head_states)
            && state.qubits.get(state.head_site - self.movement.delta()) == self.written()
    }

    /// `T_{l,s} |state>` as an image state and its weight, or `None` when
    /// the projectors annihilate `state`.
    pub fn apply(&self, state: &BasisState, head_states: HeadState) -> Option<(BasisState, f64)> {
        if !self.matches(state) {
            return None;
        }
        let mut image = state.clone();
        self.apply_in_place(&mut image, head_states);
        Some((image, self.weight))
    }

    /// `T_{l,s}^dagger |state>`.
    pub fn apply_adjoint(&self, state: &BasisState, head_states: HeadState) -> Option<(BasisState, f64)> {
        if !self.adjoint_matches(state, head_states) {
            return None;
        }
        let mut pre = state.clone();
        self.unapply_in_place(&mut pre);
        Some((pre, self.weight))
    }

    fn apply_in_place(&self, state: &mut BasisState, head_states: HeadState) {
        let j = state.head_site;
        let written = self.written();
        if written != self.read_qubit {
            state.qubits.set(j, written);
        }
        state.head_site = j + self.movement.delta();
        state.head_state = self.image_head(head_states);
    }

    fn unapply_in_place(&self, state: &mut BasisState) {
        let j = state.head_site - self.movement.delta();
        if self.written() != self.read_qubit {
            state.qubits.set(j, self.read_qubit);
        }
        state.head_site = j;
        state.head_state = self.read_head;
    }
}

fn check_weight(weight: f64) -> Result<()> {
    if weight > 0.0 && weight <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("term weight {weight} outside (0, 1]")))
    }
}

/// The full step operator: a finite term list with at most one term per
/// `(head state, read symbol)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOperator {
    terms: Vec<StepTerm>,
    head_states: HeadState,
    qubit_symbols: Symbol,
    lookup: Vec<Option<usize>>,
}

impl StepOperator {
    /// `head_states` and `qubit_symbols` are the alphabet sizes; states and
    /// symbols are `0..size`.
    pub fn new(terms: Vec<StepTerm>, head_states: HeadState, qubit_symbols: Symbol) -> Result<Self> {
        if head_states == 0 || qubit_symbols == 0 {
            return Err(invalid("alphabets must be nonempty"));
        }
        let mut lookup = vec![None; head_states as usize * qubit_symbols as usize];
        for (idx, term) in terms.iter().enumerate() {
            check_weight(term.weight)?;
            if term.read_head >= head_states || term.read_qubit >= qubit_symbols {
                return Err(invalid(format!("term {} reads outside the alphabets", idx + 1)));
            }
            if term.written() >= qubit_symbols {
                return Err(invalid(format!("term {} writes outside the qubit alphabet", idx + 1)));
            }
            let slot = &mut lookup[term.read_head as usize * qubit_symbols as usize + term.read_qubit as usize];
            if let Some(prev) = slot {
                return Err(invalid(format!(
                    "terms {} and {} both read head {} / qubit {}",
                    *prev + 1,
                    idx + 1,
                    term.read_head,
                    term.read_qubit
                )));
            }
            *slot = Some(idx);
        }
        Ok(Self {
            terms,
            head_states,
            qubit_symbols,
            lookup,
        })
    }

    pub fn terms(&self) -> &[StepTerm] {
        &self.terms
    }

    pub fn head_states(&self) -> HeadState {
        self.head_states
    }

    pub fn qubit_symbols(&self) -> Symbol {
        self.qubit_symbols
    }

    /// Index of the term reading `(head, qubit)`.
    pub fn term_for(&self, head: HeadState, qubit: Symbol) -> Option<usize> {
        if head >= self.head_states || qubit >= self.qubit_symbols {
            return None;
        }
        self.lookup[head as usize * self.qubit_symbols as usize + qubit as usize]
    }

    /// The term `idx` applied to `state`.
    pub fn apply_term(&self, idx: usize, state: &BasisState) -> Option<(BasisState, f64)> {
        self.terms[idx].apply(state, self.head_states)
    }

    /// The unique forward image of `state` together with the term index.
    pub fn successor(&self, state: &BasisState) -> Option<(usize, BasisState, f64)> {
        let idx = self.term_for(state.head_state, state.read())?;
        self.apply_term(idx, state).map(|(b, w)| (idx, b, w))
    }

    /// Advances `state` by one step; returns the index of the term used.
    pub fn step_in_place(&self, state: &mut BasisState) -> Option<usize> {
        let idx = self.term_for(state.head_state, state.read())?;
        self.terms[idx].apply_in_place(state, self.head_states);
        Some(idx)
    }

    /// Reverses the step made by term `idx`. The caller must have checked
    /// that the adjoint of that term does not annihilate `state`.
    pub fn unstep_in_place(&self, idx: usize, state: &mut BasisState) {
        debug_assert!(self.terms[idx].adjoint_matches(state, self.head_states));
        self.terms[idx].unapply_in_place(state);
    }

    /// Terms whose read condition holds at `state`, found by scanning every
    /// term rather than through the lookup table.
    pub fn matching_terms(&self, state: &BasisState) -> impl Iterator<Item = usize> + '_ {
        let head = state.head_state;
        let read = state.read();
        self.terms
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.read_head == head && t.read_qubit == read)
            .map(|(i, _)| i)
    }

    /// Terms whose adjoint does not annihilate `state`.
    pub fn preimage_terms<'a>(&'a self, state: &'a BasisState) -> impl Iterator<Item = usize> + 'a {
        self.terms
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.adjoint_matches(state, self.head_states))
            .map(|(i, _)| i)
    }

    /// All states mapped onto `state` by one step.
    pub fn predecessors(&self, state: &BasisState) -> Vec<(usize, BasisState, f64)> {
        self.terms
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.apply_adjoint(state, self.head_states).map(|(b, w)| (i, b, w)))
            .collect()
    }

    /// The same terms with every weight set to 1.
    pub fn with_unit_weights(&self) -> Self {
        let mut op = self.clone();
        for t in &mut op.terms {
            t.weight = 1.0;
        }
        op
    }
}

/// `T psi`, summing amplitudes that land on the same state.
pub fn apply_t(op: &StepOperator, psi: &WaveFunction) -> WaveFunction {
    let mut out = WaveFunction::zero().with_prune_threshold(psi.prune_threshold());
    for (b, a) in psi.iter() {
        for t in op.terms() {
            if let Some((image, w)) = t.apply(b, op.head_states()) {
                out.add(image, a * w);
            }
        }
    }
    out
}

/// `T^dagger psi`.
pub fn apply_t_adjoint(op: &StepOperator, psi: &WaveFunction) -> WaveFunction {
    let mut out = WaveFunction::zero().with_prune_threshold(psi.prune_threshold());
    for (b, a) in psi.iter() {
        for t in op.terms() {
            if let Some((pre, w)) = t.apply_adjoint(b, op.head_states()) {
                out.add(pre, a * Complex64::new(w, 0.0));
            }
        }
    }
    out
}

/// `T = U D`: `U` carries the shifts, `D` the diagonal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct UdDecomposition {
    pub unitary: StepOperator,
    weights: Vec<f64>,
}

impl UdDecomposition {
    /// `gamma_{l, S(j)}` for `state`: the weight of the term reading it, or
    /// 1 when no term does.
    pub fn d_value(&self, state: &BasisState) -> f64 {
        self.unitary
            .term_for(state.head_state, state.read())
            .map_or(1.0, |idx| self.weights[idx])
    }
}

pub fn decompose_ud(op: &StepOperator) -> UdDecomposition {
    UdDecomposition {
        unitary: op.with_unit_weights(),
        weights: op.terms().iter().map(|t| t.weight).collect(),
    }
}

/// Shape of the shift a path belongs to, as far as the explored horizon
/// can tell. "At horizon" means no annihilation was seen within the step
/// budget, not that the path is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathClass {
    BiInfiniteAtHorizon,
    /// Starts at a state with no preimage and runs forward to the horizon.
    HalfInfiniteForward,
    /// Ends at an annihilated state and runs backward to the horizon.
    HalfInfiniteBackward,
    /// Terminates in both directions; the payload counts steps (bonds).
    Finite(usize),
    /// Returns to the seed after the given number of steps.
    Cyclic(usize),
}

impl fmt::Display for PathClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathClass::BiInfiniteAtHorizon => write!(f, "bi-infinite (at horizon)"),
            PathClass::HalfInfiniteForward => write!(f, "half-infinite forward (at horizon)"),
            PathClass::HalfInfiniteBackward => write!(f, "half-infinite backward (at horizon)"),
            PathClass::Finite(n) => write!(f, "finite, length {n}"),
            PathClass::Cyclic(m) => write!(f, "cyclic, length {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WalkEnd {
    Annihilated(usize),
    ReturnedToSeed(usize),
    Horizon,
    /// Backward walk stopped at a state with several preimages.
    Ambiguous(usize),
}

/// Violations found while walking paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// More than one term reads the state.
    Branch { state: BasisState, terms: Vec<usize> },
    /// Several distinct states step onto `state`.
    Join {
        state: BasisState,
        predecessors: Vec<BasisState>,
    },
    /// A path revisits a state other than by cycling back to its seed, or
    /// two seeds' paths meet without coinciding.
    Intersection {
        state: BasisState,
        seed: usize,
        positions: (i64, i64),
        other_seed: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub seed: usize,
    pub class: PathClass,
    pub forward_steps: usize,
    pub backward_steps: usize,
    /// Earlier seed whose path this one coincides with.
    pub same_path_as: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistinctPathReport {
    pub passed: bool,
    pub max_steps: usize,
    pub paths: Vec<PathSummary>,
    pub violations: Vec<Violation>,
}

const MAX_VIOLATIONS_PER_WALK: usize = 16;

struct Walk {
    end: WalkEnd,
    steps: usize,
    /// (fingerprint, signed path position) of every visited state except
    /// the seed.
    prints: Vec<(u64, i64)>,
    violations: Vec<Violation>,
}

fn fingerprint(state: &BasisState) -> u64 {
    let mut h = DefaultHasher::new();
    state.hash(&mut h);
    h.finish()
}

fn local_violations(op: &StepOperator, state: &BasisState, out: &mut Vec<Violation>) {
    let terms: Vec<usize> = op.matching_terms(state).collect();
    if terms.len() > 1 {
        out.push(Violation::Branch {
            state: state.clone(),
            terms,
        });
    }
    if op.preimage_terms(state).nth(1).is_some() {
        out.push(Violation::Join {
            state: state.clone(),
            predecessors: op.predecessors(state).into_iter().map(|(_, b, _)| b).collect(),
        });
    }
}

fn walk(op: &StepOperator, seed: &BasisState, dir: Direction, max_steps: usize, record: bool) -> Walk {
    let mut state = seed.clone();
    let mut prints = Vec::new();
    let mut violations = Vec::new();
    let sign = if dir == Direction::Forward { 1 } else { -1 };
    if record {
        local_violations(op, &state, &mut violations);
    }
    for k in 1..=max_steps {
        let moved = match dir {
            Direction::Forward => op.step_in_place(&mut state).is_some(),
            Direction::Backward => {
                let mut pre = op.preimage_terms(&state);
                match (pre.next(), pre.next()) {
                    (None, _) => false,
                    (Some(idx), None) => {
                        drop(pre);
                        op.unstep_in_place(idx, &mut state);
                        true
                    }
                    (Some(_), Some(_)) => {
                        return Walk {
                            end: WalkEnd::Ambiguous(k - 1),
                            steps: k - 1,
                            prints,
                            violations,
                        }
                    }
                }
            }
        };
        if !moved {
            return Walk {
                end: WalkEnd::Annihilated(k - 1),
                steps: k - 1,
                prints,
                violations,
            };
        }
        if state == *seed {
            return Walk {
                end: WalkEnd::ReturnedToSeed(k),
                steps: k,
                prints,
                violations,
            };
        }
        if record {
            prints.push((fingerprint(&state), sign * k as i64));
            if violations.len() < MAX_VIOLATIONS_PER_WALK {
                local_violations(op, &state, &mut violations);
            }
        }
    }
    Walk {
        end: WalkEnd::Horizon,
        steps: max_steps,
        prints,
        violations,
    }
}

/// The state `position` steps from `seed` along its path (negative means
/// backward), or `None` if the path ends or forks before reaching it.
pub fn state_at(op: &StepOperator, seed: &BasisState, position: i64) -> Option<BasisState> {
    let mut state = seed.clone();
    for _ in 0..position.unsigned_abs() {
        if position > 0 {
            op.step_in_place(&mut state)?;
        } else {
            let mut pre = op.preimage_terms(&state);
            let idx = pre.next()?;
            if pre.next().is_some() {
                return None;
            }
            drop(pre);
            op.unstep_in_place(idx, &mut state);
        }
    }
    Some(state)
}

fn class_of(back: WalkEnd, fwd: WalkEnd) -> PathClass {
    match (back, fwd) {
        (_, WalkEnd::ReturnedToSeed(m)) | (WalkEnd::ReturnedToSeed(m), _) => PathClass::Cyclic(m),
        (WalkEnd::Annihilated(b), WalkEnd::Annihilated(f)) => PathClass::Finite(b + f),
        (WalkEnd::Annihilated(_), _) => PathClass::HalfInfiniteForward,
        (_, WalkEnd::Annihilated(_)) => PathClass::HalfInfiniteBackward,
        _ => PathClass::BiInfiniteAtHorizon,
    }
}

/// Classifies the path through `seed` by walking at most `max_steps` in
/// each direction.
pub fn classify_path(op: &StepOperator, seed: &BasisState, max_steps: usize) -> Result<PathClass> {
    if max_steps == 0 {
        return Err(invalid("max_steps must be at least 1"));
    }
    let fwd = walk(op, seed, Direction::Forward, max_steps, false);
    if let WalkEnd::ReturnedToSeed(m) = fwd.end {
        return Ok(PathClass::Cyclic(m));
    }
    let back = walk(op, seed, Direction::Backward, max_steps, false);
    if let WalkEnd::Ambiguous(k) = back.end {
        let state = state_at(op, seed, -(k as i64)).unwrap_or_else(|| seed.clone());
        return Err(Error::CorruptedOperator {
            site: state.head_site,
            detail: format!("several preimages {k} steps behind the seed"),
        });
    }
    Ok(class_of(back.end, fwd.end))
}

/// Walks `U` and `U^dagger` from every seed for up to `max_steps` in each
/// direction and checks that the visited states form non-branching,
/// non-joining, non-intersecting chains.
///
/// Visited states are remembered by 64-bit fingerprint; every fingerprint
/// collision is settled by regenerating both states and comparing them
/// exactly.
pub fn verify_distinct_paths(op: &StepOperator, seeds: &[BasisState], max_steps: usize) -> Result<DistinctPathReport> {
    if max_steps == 0 {
        return Err(invalid("max_steps must be at least 1"));
    }
    let unitary = op.with_unit_weights();
    let mut paths = Vec::with_capacity(seeds.len());
    let mut violations = Vec::new();
    let mut prints_per_seed: Vec<Vec<(u64, i64)>> = Vec::with_capacity(seeds.len());

    for (idx, seed) in seeds.iter().enumerate() {
        let fwd = walk(&unitary, seed, Direction::Forward, max_steps, true);
        let back = if matches!(fwd.end, WalkEnd::ReturnedToSeed(_)) {
            Walk {
                end: WalkEnd::Annihilated(0),
                steps: 0,
                prints: Vec::new(),
                violations: Vec::new(),
            }
        } else {
            walk(&unitary, seed, Direction::Backward, max_steps, true)
        };
        violations.extend(fwd.violations);
        violations.extend(back.violations);

        let mut prints = fwd.prints;
        prints.extend(back.prints);
        prints.push((fingerprint(seed), 0));
        prints.sort_unstable();
        for pair in prints.windows(2) {
            let ((fa, pa), (fb, pb)) = (pair[0], pair[1]);
            if fa != fb {
                continue;
            }
            let Some(a) = state_at(&unitary, seed, pa) else {
                continue;
            };
            if Some(&a) == state_at(&unitary, seed, pb).as_ref() {
                violations.push(Violation::Intersection {
                    state: a,
                    seed: idx,
                    positions: (pa, pb),
                    other_seed: None,
                });
            }
        }

        paths.push(PathSummary {
            seed: idx,
            class: class_of(back.end, fwd.end),
            forward_steps: fwd.steps,
            backward_steps: back.steps,
            same_path_as: None,
        });
        prints_per_seed.push(prints);
    }

    for b in 1..seeds.len() {
        for a in 0..b {
            if paths[a].same_path_as.is_some() {
                continue;
            }
            let Some((pa, pb)) = shared_state(&unitary, seeds, a, b, &prints_per_seed[a], &prints_per_seed[b]) else {
                continue;
            };
            // Same path iff walking a's path to b's offset lands on b's seed.
            let offset = pa - pb;
            let coincide = state_at(&unitary, &seeds[a], offset).as_ref() == Some(&seeds[b]);
            if coincide {
                paths[b].same_path_as = Some(a);
            } else {
                violations.push(Violation::Intersection {
                    state: state_at(&unitary, &seeds[a], pa).expect("visited state is reachable"),
                    seed: a,
                    positions: (pa, pb),
                    other_seed: Some(b),
                });
            }
            break;
        }
    }

    Ok(DistinctPathReport {
        passed: violations.is_empty(),
        max_steps,
        paths,
        violations,
    })
}

/// First exactly-confirmed state shared by two seeds' explored paths, as
/// positions along each.
fn shared_state(
    op: &StepOperator,
    seeds: &[BasisState],
    a: usize,
    b: usize,
    prints_a: &[(u64, i64)],
    prints_b: &[(u64, i64)],
) -> Option<(i64, i64)> {
    let (mut i, mut j) = (0, 0);
    while i < prints_a.len() && j < prints_b.len() {
        let (fa, pa) = prints_a[i];
        let (fb, pb) = prints_b[j];
        match fa.cmp(&fb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let sa = state_at(op, &seeds[a], pa);
                if sa.is_some() && sa == state_at(op, &seeds[b], pb) {
                    return Some((pa, pb));
                }
                j += 1;
            }
        }
    }
    None
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::lattice::{make_marker_lattice, QubitConfig, MARKER};

    /// Two head states on a two-site lattice; every term flips the qubit
    /// under the head and bounces between sites 0 and 1.
    pub(crate) fn four_cycle() -> StepOperator {
        use Move::*;
        use QubitTransform::Exchange01;
        StepOperator::new(
            vec![
                StepTerm::unit(0, 0, 1, Exchange01, Right),
                StepTerm::unit(1, 0, 1, Exchange01, Left),
                StepTerm::unit(0, 1, 1, Exchange01, Right),
                StepTerm::unit(1, 1, 1, Exchange01, Left),
            ],
            2,
            2,
        )
        .unwrap()
    }

    fn counting_like() -> StepOperator {
        crate::counting::build_counting_t(0.5).unwrap()
    }

    #[test]
    fn exchange_fixes_marker() {
        assert_eq!(QubitTransform::Exchange01.apply(0), 1);
        assert_eq!(QubitTransform::Exchange01.apply(1), 0);
        assert_eq!(QubitTransform::Exchange01.apply(MARKER), MARKER);
        assert_eq!(QubitTransform::Identity.apply(1), 1);
    }

    #[test]
    fn apply_term_examples() {
        let op = counting_like();
        let s = make_marker_lattice(&[7]).unwrap();
        // Term 4: head 1 reads the marker, turns to head 2, moves left.
        let t4 = &op.terms()[3];
        let (img, w) = t4.apply(&BasisState::new(1, 7, s.clone()), 3).unwrap();
        assert_eq!(img, BasisState::new(2, 6, s.clone()));
        assert_eq!(w, 1.0);
        assert!(t4.apply(&BasisState::new(0, 7, s.clone()), 3).is_none());

        // Term 5: head 2 reads 1, flips it to 0, moves left with weight gamma.
        let mut s1 = QubitConfig::new();
        s1.set(3, 1);
        let t5 = &op.terms()[4];
        let (img, w) = t5.apply(&BasisState::new(2, 3, s1), 3).unwrap();
        assert_eq!(img, BasisState::new(2, 2, QubitConfig::new()));
        assert_eq!(w, 0.5);
    }

    #[test]
    fn operator_rejects_duplicate_reads_and_bad_weights() {
        let t = StepTerm::unit(0, 0, 0, QubitTransform::Identity, Move::Right);
        assert!(StepOperator::new(vec![t.clone(), t.clone()], 1, 1).is_err());
        assert!(StepTerm::new(0, 0, 0, QubitTransform::Identity, Move::Right, 0.0).is_err());
        assert!(StepTerm::new(0, 0, 0, QubitTransform::Identity, Move::Right, 1.5).is_err());
        let mut bad = t.clone();
        bad.weight = -0.1;
        assert!(StepOperator::new(vec![bad], 1, 1).is_err());
        let oob = StepTerm::unit(2, 0, 0, QubitTransform::Identity, Move::Right);
        assert!(StepOperator::new(vec![oob], 2, 1).is_err());
    }

    #[test]
    fn apply_t_examples() {
        let op = counting_like();
        let s = make_marker_lattice(&[3]).unwrap();
        let psi = WaveFunction::basis(BasisState::new(1, 3, s.clone()));
        let out = apply_t(&op, &psi);
        assert_eq!(out.len(), 1);
        assert_eq!(
            out.amplitude(&BasisState::new(2, 2, s.clone())),
            Complex64::new(1.0, 0.0)
        );

        // Head 0 reading 1 has no term.
        let mut s1 = s.clone();
        s1.set(1, 1);
        let dead = WaveFunction::basis(BasisState::new(0, 1, s1.clone()));
        assert!(apply_t(&op, &dead).is_empty());

        let weighted = WaveFunction::basis(BasisState::new(2, 1, s1));
        let out = apply_t(&op, &weighted);
        assert_eq!(out.len(), 1);
        assert!((out.norm_sqr() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn adjoint_inverts_unit_steps() {
        let op = counting_like();
        let s = make_marker_lattice(&[3]).unwrap();
        let b = BasisState::new(1, 3, s.clone());
        let psi = WaveFunction::basis(b.clone());
        let back = apply_t_adjoint(&op, &apply_t(&op, &psi));
        assert_eq!(back, psi);

        // Head 0 only ever arrives from a blank or a marker on its left.
        let mut s1 = QubitConfig::new();
        s1.set(4, 1);
        let orphan = WaveFunction::basis(BasisState::new(0, 5, s1));
        assert!(apply_t_adjoint(&op, &orphan).is_empty());
    }

    #[test]
    fn ud_for_unit_weights_is_trivial() {
        let op = crate::counting::build_counting_t(1.0).unwrap();
        let ud = decompose_ud(&op);
        assert_eq!(ud.unitary, op);
        let s = make_marker_lattice(&[3]).unwrap();
        for head in 0..3 {
            for site in -1..5 {
                assert_eq!(ud.d_value(&BasisState::new(head, site, s.clone())), 1.0);
            }
        }
    }

    #[test]
    fn ud_weights_sit_on_read_one() {
        let op = counting_like();
        let ud = decompose_ud(&op);
        let mut s = QubitConfig::new();
        s.set(0, 1);
        s.set(1, 2);
        for head in 0..3u8 {
            for site in -1..3 {
                let b = BasisState::new(head, site, s.clone());
                let expect = if head == 2 && b.read() == 1 { 0.5 } else { 1.0 };
                assert_eq!(ud.d_value(&b), expect);
            }
        }
    }

    #[test]
    fn four_cycle_is_cyclic() {
        let op = four_cycle();
        let seed = BasisState::new(0, 0, QubitConfig::new());
        assert_eq!(classify_path(&op, &seed, 100).unwrap(), PathClass::Cyclic(4));
        let report = verify_distinct_paths(&op, &[seed], 100).unwrap();
        assert!(report.passed, "{:?}", report.violations);
        assert_eq!(report.paths[0].class, PathClass::Cyclic(4));
        assert_eq!(report.paths[0].class.to_string(), "cyclic, length 4");
    }

    #[test]
    fn lone_state_is_finite_zero() {
        let op = StepOperator::new(
            vec![StepTerm::unit(1, 1, 0, QubitTransform::Identity, Move::Right)],
            2,
            2,
        )
        .unwrap();
        let seed = BasisState::new(0, 0, QubitConfig::new());
        assert_eq!(classify_path(&op, &seed, 10).unwrap(), PathClass::Finite(0));
    }

    #[test]
    fn half_infinite_classes() {
        // Head 0 walks right on blanks; head 1 reads blank and becomes 0.
        let op = StepOperator::new(
            vec![
                StepTerm::unit(0, 0, 0, QubitTransform::Identity, Move::Right),
                StepTerm::unit(1, 1, -1, QubitTransform::Identity, Move::Right),
            ],
            2,
            2,
        )
        .unwrap();
        let mut s = QubitConfig::new();
        s.set(0, 1);
        // |1,0> with S(0)=1 has no preimage and runs right forever as head 0.
        let start = BasisState::new(1, 0, s);
        assert_eq!(classify_path(&op, &start, 50).unwrap(), PathClass::HalfInfiniteForward);
        let mirrored = StepOperator::new(
            vec![StepTerm::unit(0, 0, 0, QubitTransform::Identity, Move::Right)],
            2,
            2,
        )
        .unwrap();
        let mut s = QubitConfig::new();
        s.set(0, 1);
        // Head 0 arriving at a 1 is annihilated; behind it stretch blanks.
        let end = BasisState::new(0, 0, s);
        assert_eq!(
            classify_path(&mirrored, &end, 50).unwrap(),
            PathClass::HalfInfiniteBackward
        );
    }

    #[test]
    fn state_at_walks_both_ways() {
        let op = counting_like();
        let seed = BasisState::new(1, 3, make_marker_lattice(&[3]).unwrap());
        let ahead = state_at(&op, &seed, 5).unwrap();
        assert_eq!(state_at(&op, &ahead, -5).unwrap(), seed);
    }

    mod properties {
        use super::*;
        use crate::counting::{build_counting_t, MarkerLayout};
        use proptest::prelude::*;

        /// A random operator with at most one term per read pair, plus a
        /// handful of basis states over its alphabets.
        fn arb_case() -> impl Strategy<Value = (StepOperator, Vec<BasisState>)> {
            (1u8..=3, 2u8..=3).prop_flat_map(|(heads, symbols)| {
                let slot = proptest::option::of((-1i32..=1, any::<bool>(), any::<bool>(), 0.05f64..=1.0));
                let state =
                    (0..heads, -3i64..=3, proptest::collection::vec(0..symbols, 9)).prop_map(|(l, j, cells)| {
                        let qubits = cells.into_iter().enumerate().map(|(i, s)| (i as Site - 4, s)).collect();
                        BasisState::new(l, j, qubits)
                    });
                (
                    proptest::collection::vec(slot, (heads * symbols) as usize),
                    proptest::collection::vec(state, 1..6),
                )
                    .prop_map(move |(slots, states)| {
                        let mut terms = Vec::new();
                        for (i, slot) in slots.into_iter().enumerate() {
                            let Some((shift, exchange, right, weight)) = slot else {
                                continue;
                            };
                            let transform = if exchange {
                                QubitTransform::Exchange01
                            } else {
                                QubitTransform::Identity
                            };
                            let movement = if right { Move::Right } else { Move::Left };
                            let (l, s) = ((i / symbols as usize) as u8, (i % symbols as usize) as u8);
                            terms.push(StepTerm::new(l, s, shift, transform, movement, weight).unwrap());
                        }
                        (StepOperator::new(terms, heads, symbols).unwrap(), states)
                    })
            })
        }

        fn superposition(states: &[BasisState], coeffs: &[(f64, f64)]) -> WaveFunction {
            states
                .iter()
                .zip(coeffs)
                .map(|(b, &(re, im))| (b.clone(), Complex64::new(re, im)))
                .collect()
        }

        proptest! {
            #[test]
            fn basis_states_have_at_most_one_image((op, states) in arb_case()) {
                for b in &states {
                    let image = apply_t(&op, &WaveFunction::basis(b.clone()));
                    prop_assert!(image.len() <= 1);
                    for (_, a) in image.iter() {
                        prop_assert!(a.im == 0.0 && a.re > 0.0 && a.re <= 1.0);
                    }
                }
            }

            #[test]
            fn adjoint_identity(
                (op, states) in arb_case(),
                c1 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
                c2 in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
            ) {
                let phi = superposition(&states, &c1);
                // psi lives on preimages of phi's states so the overlap is
                // usually non-trivial.
                let mut psi = apply_t_adjoint(&op.with_unit_weights(), &phi);
                for (b, a) in superposition(&states, &c2).iter() {
                    psi.add(b.clone(), *a);
                }
                let lhs = apply_t_adjoint(&op, &phi).inner(&psi);
                let rhs = phi.inner(&apply_t(&op, &psi));
                prop_assert!((lhs - rhs).norm() <= 1e-12, "{lhs} vs {rhs}");
            }

            #[test]
            fn ud_factorization_is_exact((op, states) in arb_case()) {
                let ud = decompose_ud(&op);
                for b in &states {
                    let delta = WaveFunction::basis(b.clone());
                    let t = apply_t(&op, &delta);
                    let u = apply_t(&ud.unitary, &delta).scaled(Complex64::new(ud.d_value(b), 0.0));
                    prop_assert_eq!(t.len(), u.len());
                    for (s, a) in t.iter() {
                        prop_assert!((a - u.amplitude(s)).norm() <= 1e-15);
                    }
                }
            }

            #[test]
            fn unitary_part_shifts_along_paths(gamma in 0.05f64..=1.0, n in 1u32..=5, steps in 1usize..400) {
                let op = build_counting_t(gamma).unwrap();
                let u = decompose_ud(&op).unitary;
                let mut state = MarkerLayout::counter(n).units_seed().unwrap();
                for _ in 0..steps {
                    let image = apply_t(&u, &WaveFunction::basis(state.clone()));
                    prop_assert!((image.norm_sqr() - 1.0).abs() <= 1e-15);
                    op.step_in_place(&mut state).unwrap();
                    prop_assert!((image.amplitude(&state).re - 1.0).abs() <= 1e-15);
                }
            }
        }
    }
}
