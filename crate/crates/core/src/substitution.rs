//! Machine-free construction of the counting machine's potential word.
//!
//! `R(j)` is the number of trailing one-bits of `j`. Its prefixes obey
//! `R_n = S_{n-1} n`, `S_n = R_n S_{n-1}` with `S_0 = 0`, and the infinite
//! sequence is a fixed point of `n -> 0, n + 1`. Expanding each entry by
//! `0 -> 00` and `n -> 0 1^n 0^(n+1)` gives the bond-potential word.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of entries [`r_prefix`] may allocate.
pub const DEFAULT_PREFIX_BUDGET: usize = 1 << 26;

/// Trailing one-bits of `j`.
pub fn r_direct(j: u64) -> u32 {
    j.trailing_ones()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RSequence {
    pub entries: Vec<u32>,
}

impl RSequence {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `R_n`, the first `2^n` entries of `R`, built by the two-sequence
/// recursion.
pub fn r_prefix(n: u32) -> Result<RSequence> {
    r_prefix_with_budget(n, DEFAULT_PREFIX_BUDGET)
}

pub fn r_prefix_with_budget(n: u32, max_entries: usize) -> Result<RSequence> {
    let len = 1usize
        .checked_shl(n)
        .filter(|&l| l <= max_entries)
        .ok_or_else(|| Error::Resource(format!("R_{n} needs 2^{n} entries, budget is {max_entries}")))?;
    // s holds S_{k-1}; R_k = S_{k-1} k and S_k = R_k S_{k-1}.
    let mut s = vec![0u32];
    let mut r = vec![0u32];
    for k in 1..=n {
        r = s.clone();
        r.push(k);
        let mut next_s = Vec::with_capacity(r.len() + s.len());
        next_s.extend_from_slice(&r);
        next_s.extend_from_slice(&s);
        s = next_s;
    }
    debug_assert_eq!(r.len(), len);
    Ok(RSequence { entries: r })
}

/// One application of `n -> 0, n + 1` to every entry.
pub fn substitution_step(seq: &RSequence) -> RSequence {
    RSequence {
        entries: seq.entries.iter().flat_map(|&n| [0, n + 1]).collect(),
    }
}

/// How an [`ExpandedWord`] was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Expansion,
    MultiMarker { counters: Vec<u32>, gaps: Vec<usize> },
    Stream { limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedWord {
    pub bits: Vec<u8>,
    pub provenance: Provenance,
}

/// Appends the word block for one entry.
pub fn expand_entry(n: u32, out: &mut Vec<u8>) {
    if n == 0 {
        out.extend_from_slice(&[0, 0]);
    } else {
        out.push(0);
        out.extend(std::iter::repeat_n(1, n as usize));
        out.extend(std::iter::repeat_n(0, n as usize + 1));
    }
}

pub fn block_len(n: u32) -> usize {
    if n == 0 {
        2
    } else {
        2 * n as usize + 2
    }
}

pub fn expand(seq: &RSequence) -> ExpandedWord {
    let mut bits = Vec::with_capacity(seq.entries.iter().map(|&n| block_len(n)).sum());
    for &n in &seq.entries {
        expand_entry(n, &mut bits);
    }
    ExpandedWord {
        bits,
        provenance: Provenance::Expansion,
    }
}

/// Length of `expand(r_prefix(n))`.
pub fn expanded_len(n: u32) -> usize {
    (0..1u64 << n).map(|j| block_len(r_direct(j))).sum()
}

/// Word for consecutive counters of `counters[i]` digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiMarkerWord {
    pub word: ExpandedWord,
    /// Bit ranges of the expanded blocks, one per counter.
    pub blocks: Vec<std::ops::Range<usize>>,
    pub gaps: Vec<usize>,
}

/// Concatenates `expand(r_prefix(n_i))` with `gaps[i]` zeros after block
/// `i`. The gap lengths come from running the machine.
pub fn multi_marker_word(counters: &[u32], gaps: &[usize]) -> Result<MultiMarkerWord> {
    if counters.is_empty() {
        return Err(Error::InvalidArgument("at least one counter is required".into()));
    }
    if gaps.len() + 1 != counters.len() {
        return Err(Error::InvalidArgument(format!(
            "{} counters need {} gaps, got {}",
            counters.len(),
            counters.len() - 1,
            gaps.len()
        )));
    }
    let mut bits = Vec::new();
    let mut blocks = Vec::with_capacity(counters.len());
    for (i, &n) in counters.iter().enumerate() {
        let start = bits.len();
        bits.extend(expand(&r_prefix(n)?).bits);
        blocks.push(start..bits.len());
        if let Some(&gap) = gaps.get(i) {
            bits.extend(std::iter::repeat_n(0, gap));
        }
    }
    Ok(MultiMarkerWord {
        word: ExpandedWord {
            bits,
            provenance: Provenance::MultiMarker {
                counters: counters.to_vec(),
                gaps: gaps.to_vec(),
            },
        },
        blocks,
        gaps: gaps.to_vec(),
    })
}

/// Unbounded stream of `R` grown by the prefix recursion: once `R_k` has
/// been emitted, `R_{k+1}` continues with `R_k` minus its last entry and
/// then `k + 1`.
#[derive(Debug, Clone, Default)]
pub struct RStream {
    history: Vec<u32>,
    /// Order of the last completed prefix `R_k`.
    order: u32,
}

impl RStream {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Iterator for RStream {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let j = self.history.len();
        let value = if j == 0 {
            0
        } else {
            let half = 1usize << self.order;
            if j + 1 == 2 * half {
                self.order += 1;
                self.order
            } else {
                self.history[j - half]
            }
        };
        self.history.push(value);
        Some(value)
    }
}

/// Lazy bit stream of the infinite word.
#[derive(Debug, Clone, Default)]
pub struct WordStream {
    entries: RStream,
    block: Vec<u8>,
    pos: usize,
}

impl WordStream {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Iterator for WordStream {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        if self.pos == self.block.len() {
            self.block.clear();
            self.pos = 0;
            expand_entry(self.entries.next()?, &mut self.block);
        }
        self.pos += 1;
        Some(self.block[self.pos - 1])
    }
}

/// First `limit` bits of the single-marker potential word.
pub fn stream_word(limit: usize) -> Result<ExpandedWord> {
    if limit < 1 {
        return Err(Error::InvalidArgument("limit must be at least 1".into()));
    }
    Ok(ExpandedWord {
        bits: WordStream::new().take(limit).collect(),
        provenance: Provenance::Stream { limit },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PeriodWitness {
    pub period: usize,
    pub offset: usize,
}

/// Smallest period `p <= max_period` such that `bits[i] == bits[i + p]` for
/// every `i >= offset` with `offset <= offset_budget`. The periodic tail
/// must span at least two full periods to count.
pub fn is_eventually_periodic(bits: &[u8], max_period: usize, offset_budget: usize) -> Option<PeriodWitness> {
    let len = bits.len();
    for p in 1..=max_period.min(len / 2) {
        // Smallest offset past the last mismatch at shift p.
        let offset = (0..len - p)
            .rev()
            .find(|&i| bits[i] != bits[i + p])
            .map_or(0, |i| i + 1);
        if offset <= offset_budget && len - offset >= 2 * p {
            return Some(PeriodWitness { period: p, offset });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factor {
    pub start: usize,
    pub bits: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorReport {
    pub max_len: usize,
    /// Distinct first-half factors checked, summed over lengths.
    pub checked: usize,
    /// First-half factors occurring only once in the whole prefix.
    pub singletons: Vec<Factor>,
}

impl FactorReport {
    pub fn all_recur(&self) -> bool {
        self.singletons.is_empty()
    }
}

/// For every length `L <= max_len` (capped at 64), checks that each
/// distinct factor lying inside the first half of `bits` occurs at least
/// twice in all of `bits`.
pub fn factor_recurrence(bits: &[u8], max_len: usize) -> FactorReport {
    use std::collections::HashMap;

    let half = bits.len() / 2;
    let max_len = max_len.min(64);
    let mut checked = 0;
    let mut singletons = Vec::new();
    for l in 1..=max_len.min(bits.len()) {
        let mask = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
        // (count, first start) keyed by the packed factor.
        let mut seen: HashMap<u64, (usize, usize)> = HashMap::new();
        let mut key = 0u64;
        for (i, &b) in bits.iter().enumerate() {
            key = ((key << 1) | b as u64) & mask;
            if i + 1 >= l {
                let e = seen.entry(key).or_insert((0, i + 1 - l));
                e.0 += 1;
            }
        }
        let mut first_half: Vec<(usize, u64)> = seen
            .iter()
            .filter(|(_, &(_, start))| start + l <= half)
            .map(|(&k, &(_, start))| (start, k))
            .collect();
        first_half.sort_unstable();
        checked += first_half.len();
        for (start, k) in first_half {
            if seen[&k].0 < 2 {
                singletons.push(Factor {
                    start,
                    bits: crate::path::bits_to_string(&bits[start..start + l]),
                });
            }
        }
    }
    FactorReport {
        max_len,
        checked,
        singletons,
    }
}
