//! Unfolding a computation into a straight chain of path states and
//! reading off the bond potentials of the resulting tight-binding chain.
//!
//! The head moves back and forth over the lattice, but successive states
//! along a path are distinct basis states, so the run is a line. A bond
//! between path positions `k` and `k + 1` carries a potential exactly when
//! the step across it used a term of weight below 1.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::BasisState;
use crate::step::{PathClass, StepOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStep {
    /// 1-based term id.
    pub term_id: usize,
    pub weight: f64,
}

/// An unfolded stretch of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    /// Path states, position 0 being the furthest back reached.
    pub states: Vec<BasisState>,
    /// `steps[k]` takes `states[k]` to `states[k + 1]`.
    pub steps: Vec<PathStep>,
    /// Position of the seed inside `states`.
    pub seed_position: usize,
    pub termination: PathClass,
}

/// Walks `U^dagger` up to `back_steps` times and `U` up to `fwd_steps`
/// times from `seed`, stopping early where the path ends or cycles back
/// to the seed.
pub fn unfold_path(op: &StepOperator, seed: &BasisState, back_steps: usize, fwd_steps: usize) -> Result<PathRecord> {
    let corrupted = |state: &BasisState, what: &str| Error::CorruptedOperator {
        site: state.head_site,
        detail: what.to_string(),
    };

    let mut behind = Vec::new();
    let mut back_ended = false;
    let mut cyclic = None;
    let mut state = seed.clone();
    for k in 1..=back_steps {
        let mut pre = op.preimage_terms(&state);
        let Some(idx) = pre.next() else {
            back_ended = true;
            break;
        };
        if pre.next().is_some() {
            return Err(corrupted(&state, "path joins: several preimages"));
        }
        drop(pre);
        op.unstep_in_place(idx, &mut state);
        if state == *seed {
            cyclic = Some(k);
            break;
        }
        behind.push((state.clone(), idx));
    }

    let mut states = Vec::with_capacity(behind.len() + fwd_steps + 1);
    let mut steps = Vec::with_capacity(behind.len() + fwd_steps);
    for (prev, idx) in behind.iter().rev() {
        states.push(prev.clone());
        steps.push(PathStep {
            term_id: idx + 1,
            weight: op.terms()[*idx].weight,
        });
    }
    let seed_position = states.len();
    states.push(seed.clone());

    let mut fwd_ended = false;
    let mut state = seed.clone();
    for k in 1..=fwd_steps {
        if cyclic.is_some() {
            break;
        }
        if op.matching_terms(&state).nth(1).is_some() {
            return Err(corrupted(&state, "path branches: several terms read this state"));
        }
        let Some(idx) = op.step_in_place(&mut state) else {
            fwd_ended = true;
            break;
        };
        if op.preimage_terms(&state).nth(1).is_some() {
            return Err(corrupted(&state, "path joins: several preimages"));
        }
        steps.push(PathStep {
            term_id: idx + 1,
            weight: op.terms()[idx].weight,
        });
        if state == *seed {
            cyclic = Some(k);
            break;
        }
        states.push(state.clone());
    }

    let termination = match cyclic {
        Some(m) => PathClass::Cyclic(m),
        None => match (back_ended, fwd_ended) {
            (true, true) => PathClass::Finite(steps.len()),
            (true, false) => PathClass::HalfInfiniteForward,
            (false, true) => PathClass::HalfInfiniteBackward,
            (false, false) => PathClass::BiInfiniteAtHorizon,
        },
    };
    Ok(PathRecord {
        states,
        steps,
        seed_position,
        termination,
    })
}

impl PathRecord {
    pub fn term_ids(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.term_id).collect()
    }
}

/// Bond-potential word over a path: `bits[k] == 1` iff step `k` was
/// weighted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PotentialWord {
    pub bits: Vec<u8>,
}

impl PotentialWord {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

impl fmt::Display for PotentialWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_to_string(&self.bits))
    }
}

pub fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// Parses a `0`/`1` string.
pub fn bits_from_str(s: &str) -> Option<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(0),
            '1' => Some(1),
            _ => None,
        })
        .collect()
}

pub fn potential_word(path: &PathRecord) -> PotentialWord {
    PotentialWord {
        bits: path.steps.iter().map(|s| u8::from(s.weight < 1.0)).collect(),
    }
}

/// Run-length form of a binary word: each one-run with the zero gap in
/// front of it, plus the zeros after the last one-run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunProfile {
    /// `(gap, run)` pairs.
    pub runs: Vec<(usize, usize)>,
    pub trailing_gap: usize,
}

impl RunProfile {
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }
}

pub fn run_profile(bits: &[u8]) -> RunProfile {
    let mut runs = Vec::new();
    let mut gap = 0;
    let mut run = 0;
    for &b in bits {
        if b == 0 {
            if run > 0 {
                runs.push((gap, run));
                gap = 0;
                run = 0;
            }
            gap += 1;
        } else {
            run += 1;
        }
    }
    if run > 0 {
        runs.push((gap, run));
        gap = 0;
    }
    RunProfile {
        runs,
        trailing_gap: gap,
    }
}

/// `bits` with trailing zeros removed.
pub fn strip_trailing_zeros(bits: &[u8]) -> &[u8] {
    let end = bits.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    &bits[..end]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{build_counting_t, MarkerLayout};
    use crate::lattice::QubitConfig;
    use crate::step::{Move, QubitTransform, StepTerm};

    fn word(s: &str) -> Vec<u8> {
        bits_from_str(s).unwrap()
    }

    #[test]
    fn n2_run_unfolds_to_fifteen_steps() {
        let op = build_counting_t(0.5).unwrap();
        let seed = MarkerLayout::counter(2).units_seed().unwrap();
        let path = unfold_path(&op, &seed, 0, 15).unwrap();
        assert_eq!(path.steps.len(), 15);
        assert_eq!(path.seed_position, 0);
        assert_eq!(potential_word(&path).to_string(), "000100000110000");
        assert_eq!(path.term_ids(), vec![4, 6, 4, 5, 6, 3, 4, 6, 4, 5, 5, 7, 1, 1, 2]);
        for (k, step) in path.steps.iter().enumerate() {
            let (next, w) = op.apply_term(step.term_id - 1, &path.states[k]).unwrap();
            if k + 1 < path.states.len() {
                assert_eq!(next, path.states[k + 1]);
            }
            assert_eq!(w, step.weight);
        }
    }

    #[test]
    fn backward_unfold_reaches_the_head_zero_tail() {
        let op = build_counting_t(0.5).unwrap();
        let seed = MarkerLayout::counter(2).units_seed().unwrap();
        let path = unfold_path(&op, &seed, 6, 3).unwrap();
        assert_eq!(path.seed_position, 6);
        assert_eq!(path.states[path.seed_position], seed);
        // Back over sites 2, 1 in head state 1, the marker step, then head 0.
        assert_eq!(&path.term_ids()[..6], &[1, 1, 1, 2, 3, 3]);
        assert_eq!(path.states[0].head_state, 0);
        assert_eq!(path.states[0].head_site, -3);
        assert_eq!(path.termination, PathClass::BiInfiniteAtHorizon);
    }

    #[test]
    fn isolated_seed_gives_empty_word() {
        let op = StepOperator::new(
            vec![StepTerm::unit(1, 1, 0, QubitTransform::Identity, Move::Right)],
            2,
            2,
        )
        .unwrap();
        let seed = BasisState::new(0, 0, QubitConfig::new());
        let path = unfold_path(&op, &seed, 10, 10).unwrap();
        assert_eq!(path.states, vec![seed]);
        assert!(potential_word(&path).is_empty());
        assert_eq!(path.termination, PathClass::Finite(0));
    }

    #[test]
    fn translated_seed_has_same_terms() {
        let op = build_counting_t(0.5).unwrap();
        let seed = MarkerLayout::counter(3).units_seed().unwrap();
        let base = unfold_path(&op, &seed, 20, 60).unwrap();
        let moved = unfold_path(&op, &seed.translated(5), 20, 60).unwrap();
        assert_eq!(base.term_ids(), moved.term_ids());
        assert_eq!(potential_word(&base), potential_word(&moved));
    }

    #[test]
    fn unit_gamma_word_is_blank() {
        let op = build_counting_t(1.0).unwrap();
        let seed = MarkerLayout::counter(4).units_seed().unwrap();
        let path = unfold_path(&op, &seed, 10, 200).unwrap();
        assert_eq!(potential_word(&path).ones(), 0);
    }

    #[test]
    fn corrupted_operator_is_reported() {
        // Adds a head-1 read-1 step right: the state after a term-6 write
        // now has two preimages.
        let mut terms = build_counting_t(0.5).unwrap().terms().to_vec();
        terms.push(StepTerm::unit(1, 1, 0, QubitTransform::Identity, Move::Right));
        let op = StepOperator::new(terms, 3, 3).unwrap();
        let seed = MarkerLayout::counter(2).units_seed().unwrap();
        assert!(matches!(
            unfold_path(&op, &seed, 0, 20),
            Err(Error::CorruptedOperator { .. })
        ));
    }

    #[test]
    fn cyclic_unfold_stops_at_seed() {
        let op = crate::step::tests::four_cycle();
        let seed = BasisState::new(0, 0, QubitConfig::new());
        let path = unfold_path(&op, &seed, 0, 100).unwrap();
        assert_eq!(path.termination, PathClass::Cyclic(4));
        assert_eq!(path.steps.len(), 4);
        assert_eq!(path.states.len(), 4);
    }

    #[test]
    fn run_profile_examples() {
        let p = run_profile(&word("000100000110000"));
        assert_eq!(p.runs, vec![(3, 1), (5, 2)]);
        assert_eq!(p.trailing_gap, 4);

        let p = run_profile(&word("0000000"));
        assert!(p.runs.is_empty());
        assert_eq!(p.trailing_gap, 7);

        let p = run_profile(&word("101"));
        assert_eq!(p.runs, vec![(0, 1), (1, 1)]);
        assert_eq!(p.trailing_gap, 0);

        let p = run_profile(&[]);
        assert_eq!(p, RunProfile::default());
    }

    #[test]
    fn strip_trailing() {
        assert_eq!(strip_trailing_zeros(&word("0101000")), &word("0101")[..]);
        assert!(strip_trailing_zeros(&word("000")).is_empty());
    }

    proptest::proptest! {
        #[test]
        fn unfolding_is_deterministic_and_translation_blind(
            n in 1u32..=6,
            shift in -12i64..=12,
            back in 0usize..60,
            fwd in 0usize..600,
            gamma in 0.05f64..1.0,
        ) {
            let op = build_counting_t(gamma).unwrap();
            let seed = MarkerLayout::counter(n).units_seed().unwrap();
            let a = unfold_path(&op, &seed, back, fwd).unwrap();
            let b = unfold_path(&op, &seed, back, fwd).unwrap();
            proptest::prop_assert_eq!(&a, &b);
            let moved = unfold_path(&op, &seed.translated(shift), back, fwd).unwrap();
            proptest::prop_assert_eq!(potential_word(&moved), potential_word(&a));
        }
    }

    #[test]
    fn word_weight_matches_trailing_ones_sum() {
        let op = build_counting_t(0.5).unwrap();
        for n in 1..=8u32 {
            let seed = MarkerLayout::counter(n).units_seed().unwrap();
            let steps = crate::counting::safe_step_bound(n);
            let word = potential_word(&unfold_path(&op, &seed, 0, steps).unwrap());
            let sum: usize = (0..1u64 << n).map(|j| crate::substitution::r_direct(j) as usize).sum();
            assert_eq!(word.ones(), sum);
            let weighted = path_weight_steps(&unfold_path(&op, &seed, 0, steps).unwrap());
            assert_eq!(weighted, sum);
        }
    }

    fn path_weight_steps(path: &PathRecord) -> usize {
        path.term_ids()
            .iter()
            .filter(|&&id| id == crate::counting::WEIGHTED_TERM_ID)
            .count()
    }
}
