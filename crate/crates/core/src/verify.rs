//! Cross-checks between the simulated machine and the independent
//! constructions of its potential word.

use std::str::FromStr;

use serde::Serialize;

use crate::counting::{
    build_counting_t, enumeration_trace, measure_gaps, safe_step_bound, simulated_word, CountingMachineConfig,
    MarkerLayout,
};
use crate::error::{invalid, Error, Result};
use crate::path::{potential_word, run_profile, strip_trailing_zeros, unfold_path};
use crate::step::verify_distinct_paths;
use crate::substitution::{
    expand, expanded_len, is_eventually_periodic, multi_marker_word, r_direct, r_prefix, stream_word,
    substitution_step, RSequence,
};
use crate::tb::{
    build_hamiltonian, free_chain_spectrum, scattering, spectrum, transfer_product, word_hoppings, Boundary,
};

/// Which oracle output gets one entry corrupted before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FaultTarget {
    /// Bit of the simulated word for the largest `n`.
    Simulation,
    /// Bit of the expanded `R` prefix for the largest `n`.
    Expansion,
    /// Entry of the direct trailing-ones sequence.
    RDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Fault {
    pub target: FaultTarget,
    pub index: usize,
}

impl FromStr for Fault {
    type Err = Error;

    /// `simulation:IDX`, `expansion:IDX` or `r-direct:IDX`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, idx) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("fault `{s}` is not TARGET:INDEX")))?;
        let target = match name {
            "simulation" => FaultTarget::Simulation,
            "expansion" => FaultTarget::Expansion,
            "r-direct" => FaultTarget::RDirect,
            other => return Err(invalid(format!("unknown fault target `{other}`"))),
        };
        let index = idx.parse().map_err(|_| invalid(format!("bad fault index `{idx}`")))?;
        Ok(Fault { target, index })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub n_max: u32,
    pub gamma: f64,
    /// Step horizon of the distinct-path check.
    pub path_horizon: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n_max: 10,
            gamma: 0.5,
            path_horizon: 100_000,
            fault: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// First position where two oracles disagree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub options: VerifyOptions,
    pub checks: Vec<CheckResult>,
}

fn pass(name: &'static str, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed: true,
        detail,
        mismatch_index: None,
    }
}

fn fail(name: &'static str, detail: String, mismatch_index: Option<usize>) -> CheckResult {
    CheckResult {
        name,
        passed: false,
        detail,
        mismatch_index,
    }
}

/// First index where the slices differ, counting a length difference as
/// a mismatch at the shorter length.
pub fn first_mismatch<T: PartialEq>(a: &[T], b: &[T]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn flip_bit(bits: &mut [u8], index: usize) -> Result<()> {
    let len = bits.len();
    let b = bits
        .get_mut(index)
        .ok_or_else(|| invalid(format!("fault index {index} beyond word of length {len}")))?;
    *b ^= 1;
    Ok(())
}

fn fault_on(opts: &VerifyOptions, target: FaultTarget) -> Option<usize> {
    opts.fault.filter(|f| f.target == target).map(|f| f.index)
}

fn check_simulation(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "simulation_matches_expansion";
    for n in 1..=opts.n_max {
        let config = CountingMachineConfig::new(opts.gamma, 1.0, MarkerLayout::counter(n))?;
        let mut sim = simulated_word(&config, None)?.bits;
        let mut exp = expand(&r_prefix(n)?).bits;
        if n == opts.n_max {
            if let Some(i) = fault_on(opts, FaultTarget::Simulation) {
                flip_bit(&mut sim, i)?;
            }
            if let Some(i) = fault_on(opts, FaultTarget::Expansion) {
                flip_bit(&mut exp, i)?;
            }
        }
        let (s, e) = (strip_trailing_zeros(&sim), strip_trailing_zeros(&exp));
        if let Some(i) = first_mismatch(s, e) {
            return Ok(fail(
                NAME,
                format!("n = {n}: simulated and expanded words differ at bit {i}"),
                Some(i),
            ));
        }
    }
    Ok(pass(NAME, format!("n = 1..={}", opts.n_max)))
}

fn check_enumeration(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "counter_enumeration";
    for n in 1..=opts.n_max {
        let trace = enumeration_trace(n, opts.gamma, safe_step_bound(n))?;
        let counters = trace.counters();
        let expect: Vec<u64> = (0..1u64 << n).collect();
        if let Some(i) = first_mismatch(&counters, &expect) {
            return Ok(fail(NAME, format!("n = {n}: visit {i} out of order"), Some(i)));
        }
        let weighted: usize = expect.iter().map(|&j| r_direct(j) as usize).sum();
        if trace.weighted_steps != weighted {
            return Ok(fail(
                NAME,
                format!("n = {n}: {} weighted steps, expected {weighted}", trace.weighted_steps),
                None,
            ));
        }
    }
    Ok(pass(NAME, format!("n = 1..={}", opts.n_max)))
}

fn check_r_oracles(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "r_sequence_oracles";
    let levels = (opts.n_max + 4).min(16);
    let recursive = r_prefix(levels)?;
    let mut direct: Vec<u32> = (0..recursive.len() as u64).map(r_direct).collect();
    if let Some(i) = fault_on(opts, FaultTarget::RDirect) {
        let len = direct.len();
        let e = direct
            .get_mut(i)
            .ok_or_else(|| invalid(format!("fault index {i} beyond sequence of length {len}")))?;
        *e += 1;
    }
    if let Some(i) = first_mismatch(&direct, &recursive.entries) {
        return Ok(fail(
            NAME,
            format!("direct and recursive R differ at entry {i}"),
            Some(i),
        ));
    }
    let mut seq = RSequence { entries: vec![0] };
    for n in 0..levels {
        seq = substitution_step(&seq);
        let target = r_prefix(n + 1)?;
        if let Some(i) = first_mismatch(&seq.entries, &target.entries) {
            return Ok(fail(
                NAME,
                format!("substitution fixed point breaks at level {}", n + 1),
                Some(i),
            ));
        }
    }
    let stream = stream_word(expanded_len(levels))?.bits;
    let built = expand(&recursive).bits;
    if let Some(i) = first_mismatch(&stream, &built) {
        return Ok(fail(
            NAME,
            format!("streamed and expanded words differ at bit {i}"),
            Some(i),
        ));
    }
    Ok(pass(NAME, format!("{} entries, levels 0..={levels}", recursive.len())))
}

fn check_counts(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "run_and_ones_counts";
    let top = (opts.n_max + 4).min(16);
    let word = stream_word(expanded_len(top))?.bits;
    for n in 1..=top {
        let prefix = &word[..expanded_len(n)];
        let ones = prefix.iter().filter(|&&b| b == 1).count();
        let runs = run_profile(prefix).run_count();
        if ones != (1 << n) - 1 || runs != 1 << (n - 1) {
            return Ok(fail(NAME, format!("n = {n}: {ones} ones in {runs} runs"), None));
        }
    }
    Ok(pass(NAME, format!("n = 1..={top}")))
}

fn check_multi_marker(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "multi_marker_construction";
    let layouts: [&[u32]; 3] = [&[3, 3, 3], &[1, 2, 3], &[4, 2]];
    for ns in layouts {
        let layout = MarkerLayout::Counters(ns.to_vec());
        let gaps = measure_gaps(&layout, opts.gamma)?;
        let built = multi_marker_word(ns, &gaps)?;
        let config = CountingMachineConfig::new(opts.gamma, 1.0, layout)?;
        let sim = simulated_word(&config, None)?;
        let (s, b) = (strip_trailing_zeros(&sim.bits), strip_trailing_zeros(&built.word.bits));
        if let Some(i) = first_mismatch(s, b) {
            return Ok(fail(NAME, format!("counters {ns:?}: words differ at bit {i}"), Some(i)));
        }
    }
    let ns = [3u32; 6];
    let gaps = measure_gaps(&MarkerLayout::Counters(ns.to_vec()), opts.gamma)?;
    let word = multi_marker_word(&ns, &gaps)?.word.bits;
    let profile = run_profile(strip_trailing_zeros(&word));
    if profile.run_count() != 4 * ns.len() {
        return Ok(fail(
            NAME,
            format!("{} runs over six 3-digit counters", profile.run_count()),
            None,
        ));
    }
    let block = expanded_len(3) + gaps[0];
    let witness = is_eventually_periodic(&word, word.len() / 2, word.len() / 2);
    match witness {
        Some(w) if w.period == block => Ok(pass(NAME, format!("equal counters repeat with period {}", w.period))),
        other => Ok(fail(NAME, format!("equal counters gave {other:?}"), None)),
    }
}

fn check_translation(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "translation_invariance";
    let op = build_counting_t(opts.gamma)?;
    for n in 1..=opts.n_max.min(8) {
        let seed = MarkerLayout::counter(n).units_seed()?;
        let steps = safe_step_bound(n);
        let base = potential_word(&unfold_path(&op, &seed, 0, steps)?).bits;
        for shift in [-5, -1, 1, 5] {
            let moved = potential_word(&unfold_path(&op, &seed.translated(shift), 0, steps)?).bits;
            if let Some(i) = first_mismatch(&base, &moved) {
                return Ok(fail(NAME, format!("n = {n}, shift {shift}: bit {i} differs"), Some(i)));
            }
        }
    }
    Ok(pass(
        NAME,
        format!("n = 1..={}, shifts -5, -1, 1, 5", opts.n_max.min(8)),
    ))
}

fn check_distinct_paths(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "distinct_paths";
    let op = build_counting_t(opts.gamma)?;
    let mut seeds = Vec::new();
    for n in 1..=opts.n_max {
        seeds.push(MarkerLayout::counter(n).units_seed()?);
    }
    seeds.push(MarkerLayout::SingleMarker.units_seed()?);
    let report = verify_distinct_paths(&op, &seeds, opts.path_horizon)?;
    if report.passed {
        Ok(pass(
            NAME,
            format!("{} seeds to horizon {}", seeds.len(), opts.path_horizon),
        ))
    } else {
        Ok(fail(NAME, format!("{:?}", report.violations.first()), None))
    }
}

fn check_single_marker(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "single_marker_prefix";
    let len = expanded_len(opts.n_max);
    let config = CountingMachineConfig::new(opts.gamma, 1.0, MarkerLayout::SingleMarker)?;
    let sim = simulated_word(&config, Some(len))?.bits;
    let stream = stream_word(len)?.bits;
    match first_mismatch(&sim, &stream) {
        Some(i) => Ok(fail(
            NAME,
            format!("unbounded run departs from the stream at bit {i}"),
            Some(i),
        )),
        None => Ok(pass(NAME, format!("first {len} bits"))),
    }
}

/// Runs every check; `passed` is the conjunction.
fn check_numerics(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "chain_numerics";
    let k = 1.0;
    let free = spectrum(&build_hamiltonian(&[0; 40], k, 1.0, Boundary::Open)?)?;
    let exact = free_chain_spectrum(41, k);
    let spec_err = free.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if spec_err > 1e-9 {
        return Ok(fail(NAME, format!("free chain spectrum off by {spec_err:e}"), None));
    }
    let word = expand(&r_prefix(opts.n_max.min(8))?).bits;
    let hops = word_hoppings(&word, k, opts.gamma);
    let mut worst_flux: f64 = 0.0;
    let mut worst_det: f64 = 0.0;
    for i in 1..40 {
        let e = 0.1 * i as f64;
        let s = scattering(&word, e, k, opts.gamma)?;
        worst_flux = worst_flux.max((s.transmission + s.reflection - 1.0).abs());
        let m = transfer_product(&hops, e, k);
        let [[a, b], [c, d]] = m.0;
        let scale = 1f64.max((a * d).abs() + (b * c).abs());
        worst_det = worst_det.max((m.det() - hops[0] / hops[hops.len() - 1]).abs() / scale);
    }
    if worst_flux > 1e-10 {
        return Ok(fail(NAME, format!("|t|^2 + |r|^2 off by {worst_flux:e}"), None));
    }
    if worst_det > 1e-12 {
        return Ok(fail(NAME, format!("transfer determinant off by {worst_det:e}"), None));
    }
    Ok(pass(
        NAME,
        format!("spectrum {spec_err:.1e}, flux {worst_flux:.1e}, determinant {worst_det:.1e}"),
    ))
}

fn check_aperiodic(opts: &VerifyOptions) -> Result<CheckResult> {
    const NAME: &str = "stream_aperiodic";
    let len = expanded_len(opts.n_max.max(8));
    let bits = stream_word(len)?.bits;
    let max_period = 64.min(len / 4);
    match is_eventually_periodic(&bits, max_period, len / 2) {
        Some(w) => Ok(fail(NAME, format!("stream prefix looks periodic: {w:?}"), None)),
        None => Ok(pass(NAME, format!("no period up to {max_period} in {len} bits"))),
    }
}

pub fn run_verification(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.n_max < 1 || opts.n_max > 16 {
        return Err(invalid(format!("n_max {} outside 1..=16", opts.n_max)));
    }
    let checks = vec![
        check_simulation(opts)?,
        check_enumeration(opts)?,
        check_r_oracles(opts)?,
        check_counts(opts)?,
        check_multi_marker(opts)?,
        check_translation(opts)?,
        check_distinct_paths(opts)?,
        check_single_marker(opts)?,
        check_numerics(opts)?,
        check_aperiodic(opts)?,
    ];
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        options: opts.clone(),
        checks,
    })
}
