//! `gqtm`: potential words of the counting machine, the oracle suite, and
//! tight-binding numerics on the resulting chains.
//!
//! Data go to stdout unless `--out PREFIX` is given, in which case they
//! are written to `PREFIX.<kind>` files next to `PREFIX.manifest.json`.
//! Exit codes: 0 success, 1 verification failure, 2 usage or parameter
//! error, 3 step or size budget exhausted.

mod manifest;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use gqtm_core::counting::{
    build_counting_t, layout_step_bound, predicted_gaps, simulated_word, steps_until_restored, CountingMachineConfig,
    MarkerLayout,
};
use gqtm_core::lattice::gaussian_profile;
use gqtm_core::path::{bits_to_string, run_profile, RunProfile};
use gqtm_core::substitution::{expand, multi_marker_word, r_prefix, stream_word};
use gqtm_core::tb::{
    build_hamiltonian, evolve, scattering, spectrum_with_cap, Boundary, EvolveMethod, DEFAULT_DIM_CAP,
};
use gqtm_core::verify::{run_verification, Fault, VerifyOptions};
use gqtm_core::Error;

use manifest::OutputSet;

const STEP_BUDGET_VAR: &str = "GQTM_STEP_BUDGET";
const MAX_SITES_VAR: &str = "GQTM_MAX_SITES";
const DEFAULT_STEP_BUDGET: usize = 1 << 28;

#[derive(Parser)]
#[command(
    name = "gqtm",
    version,
    about = "Counting-machine potential words and chain numerics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the bond-potential word of a marker layout.
    Word {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long, value_enum, default_value_t = Source::Simulate)]
        source: Source,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the oracle suite; exit 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        /// Step horizon for the distinct-path check.
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        /// Corrupt one oracle output: `simulation:IDX`, `expansion:IDX`
        /// or `r-direct:IDX`.
        #[arg(long)]
        inject_fault: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Eigenvalues of the chain built from the simulated word.
    Spectrum {
        #[command(flatten)]
        layout: LayoutArgs,
        /// Chain length in sites; the word is the first `sites - 1` steps
        /// of the path.
        #[arg(long)]
        sites: Option<usize>,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Lead-to-lead transmission through the chain over an energy grid.
    Transmit {
        #[command(flatten)]
        layout: LayoutArgs,
        /// `START:STOP:STEP`, inclusive of STOP when it lies on the grid.
        #[arg(long)]
        energies: String,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Site probabilities of a Gaussian packet evolving on the chain.
    Evolve {
        #[command(flatten)]
        layout: LayoutArgs,
        /// Final time.
        #[arg(long)]
        t: f64,
        /// Number of equally spaced output times, including 0 and `t`.
        #[arg(long, default_value_t = 11)]
        frames: usize,
        /// Packet centre site; defaults to a quarter of the chain.
        #[arg(long)]
        center: Option<f64>,
        #[arg(long, default_value_t = 4.0)]
        width: f64,
        /// Carrier wavenumber.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        momentum: f64,
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Serialize, Clone)]
struct LayoutArgs {
    /// Counter widths, comma separated; several give consecutive counters.
    #[arg(long, value_delimiter = ',', conflicts_with = "single_marker")]
    n: Vec<u32>,
    /// One marker and an unbounded counter; needs `--limit`.
    #[arg(long)]
    single_marker: bool,
    /// Number of path steps (word bits) to emit.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

#[derive(Args, Serialize, Clone)]
struct ChainArgs {
    /// Hopping energy scale.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Write `PREFIX.*` files and a manifest instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Source {
    Simulate,
    Substitution,
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Method {
    Exact,
    Stepper,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Budget(String),
    Verification,
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Horizon { .. } | Error::Resource(_) | Error::CorruptedOperator { .. } => {
                Failure::Budget(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn env_usize(var: &str, default: usize) -> CliResult<usize> {
    match std::env::var(var) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{var}={v} is not a non-negative integer"))),
        Err(_) => Ok(default),
    }
}

impl LayoutArgs {
    /// The numeric commands fall back to one 6-digit counter.
    fn or_default_counter(self) -> Self {
        if self.n.is_empty() && !self.single_marker {
            LayoutArgs { n: vec![6], ..self }
        } else {
            self
        }
    }

    fn layout(&self) -> CliResult<MarkerLayout> {
        match (self.single_marker, self.n.is_empty()) {
            (true, _) => Ok(MarkerLayout::SingleMarker),
            (false, false) => Ok(MarkerLayout::Counters(self.n.clone())),
            (false, true) => Err(Failure::Usage("give --n or --single-marker".into())),
        }
    }

    /// Word bits from the machine, `limit` overriding `--limit`.
    fn simulate(&self, limit: Option<usize>) -> CliResult<Vec<u8>> {
        let layout = self.layout()?;
        let budget = env_usize(STEP_BUDGET_VAR, DEFAULT_STEP_BUDGET)?;
        let config = CountingMachineConfig::new(self.gamma, 1.0, layout.clone())?;
        let steps = match (limit.or(self.limit), &layout) {
            (Some(l), _) => l,
            (None, MarkerLayout::SingleMarker) => {
                return Err(Failure::Usage("--single-marker needs --limit".into()));
            }
            (None, MarkerLayout::Counters(_)) => {
                let op = build_counting_t(self.gamma)?;
                steps_until_restored(&op, &layout, layout_step_bound(&layout).min(budget))?
            }
        };
        if steps > budget {
            return Err(Failure::Budget(format!(
                "{steps} steps exceed {STEP_BUDGET_VAR}={budget}"
            )));
        }
        Ok(simulated_word(&config, Some(steps))?.bits)
    }

    fn construct(&self) -> CliResult<Vec<u8>> {
        let budget = env_usize(STEP_BUDGET_VAR, DEFAULT_STEP_BUDGET)?;
        let mut bits = match self.layout()? {
            MarkerLayout::SingleMarker => {
                let limit = self
                    .limit
                    .ok_or_else(|| Failure::Usage("--single-marker needs --limit".into()))?;
                if limit > budget {
                    return Err(Failure::Budget(format!(
                        "{limit} bits exceed {STEP_BUDGET_VAR}={budget}"
                    )));
                }
                stream_word(limit)?.bits
            }
            MarkerLayout::Counters(ns) => match ns.as_slice() {
                [n] => expand(&r_prefix(*n)?).bits,
                _ => multi_marker_word(&ns, &predicted_gaps(&ns))?.word.bits,
            },
        };
        if let Some(limit) = self.limit {
            bits.truncate(limit);
        }
        Ok(bits)
    }
}

#[derive(Serialize)]
struct WordProfile {
    length: usize,
    ones: usize,
    run_count: usize,
    #[serde(flatten)]
    profile: RunProfile,
}

/// Prints to stdout, or writes under the prefix and records a manifest.
fn emit(
    out: &OutArgs,
    command: &str,
    params: serde_json::Value,
    files: &[(&str, Vec<u8>)],
    started: (SystemTime, Instant),
) -> CliResult<()> {
    match &out.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&files[0].1)?;
        }
        Some(prefix) => {
            let mut set = OutputSet::new(prefix);
            for (suffix, data) in files {
                set.write(suffix, data)?;
            }
            set.finish(command, params, started.0, started.1.elapsed())?;
        }
    }
    Ok(())
}

fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Failure::Usage(format!("energy grid `{spec}` is not START:STOP:STEP"));
    let [a, b, step] = parts.as_slice() else {
        return Err(bad());
    };
    let (a, b, step): (f64, f64, f64) = (
        a.parse().map_err(|_| bad())?,
        b.parse().map_err(|_| bad())?,
        step.parse().map_err(|_| bad())?,
    );
    if !(step > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
        return Err(bad());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

fn chain(layout: &LayoutArgs, chain: &ChainArgs, bits: &[u8]) -> CliResult<gqtm_core::tb::TightBindingMatrix> {
    let h = build_hamiltonian(bits, chain.k, layout.gamma, Boundary::Open)?;
    h.check_dim(env_usize(MAX_SITES_VAR, DEFAULT_DIM_CAP)?)?;
    Ok(h)
}

fn run(cli: Cli) -> CliResult<()> {
    let started = (SystemTime::now(), Instant::now());
    match cli.command {
        Command::Word { layout, source, out } => {
            let bits = match source {
                Source::Simulate => layout.simulate(None)?,
                Source::Substitution => layout.construct()?,
            };
            let profile = run_profile(&bits);
            let summary = WordProfile {
                length: bits.len(),
                ones: bits.iter().filter(|&&b| b == 1).count(),
                run_count: profile.run_count(),
                profile,
            };
            let mut text = bits_to_string(&bits);
            text.push('\n');
            let mut json = serde_json::to_vec_pretty(&summary).expect("profile serializes");
            json.push(b'\n');
            let params = json!({ "layout": layout, "source": source });
            emit(
                &out,
                "word",
                params,
                &[(".word.txt", text.into_bytes()), (".profile.json", json)],
                started,
            )
        }
        Command::Verify {
            n_max,
            gamma,
            horizon,
            inject_fault,
            out,
        } => {
            let fault = inject_fault.as_deref().map(str::parse::<Fault>).transpose()?;
            let opts = VerifyOptions {
                n_max,
                gamma,
                path_horizon: horizon,
                fault,
            };
            let report = run_verification(&opts)?;
            let mut json = serde_json::to_vec_pretty(&report).expect("report serializes");
            json.push(b'\n');
            emit(&out, "verify", json!(opts), &[(".verify.json", json)], started)?;
            let secs = started.1.elapsed().as_secs_f64();
            if report.passed {
                eprintln!("PASS ({} checks, {secs:.2} s)", report.checks.len());
                Ok(())
            } else {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    eprintln!("FAIL {}: {}", c.name, c.detail);
                }
                Err(Failure::Verification)
            }
        }
        Command::Spectrum {
            layout,
            sites,
            chain: ch,
            out,
        } => {
            let limit = match sites {
                Some(0) => return Err(Failure::Usage("--sites must be at least 1".into())),
                Some(s) => Some(s - 1),
                None => None,
            };
            let layout = layout.or_default_counter();
            let bits = layout.simulate(limit)?;
            let h = chain(&layout, &ch, &bits)?;
            let values = spectrum_with_cap(&h, env_usize(MAX_SITES_VAR, DEFAULT_DIM_CAP)?)?;
            let mut csv = String::from("index,eigenvalue\n");
            for (i, v) in values.iter().enumerate() {
                writeln!(csv, "{i},{v}").unwrap();
            }
            let params = json!({ "layout": layout, "sites": h.dim(), "chain": ch });
            emit(
                &out,
                "spectrum",
                params,
                &[(".spectrum.csv", csv.into_bytes())],
                started,
            )
        }
        Command::Transmit {
            layout,
            energies,
            chain: ch,
            out,
        } => {
            let grid = parse_grid(&energies)?;
            let layout = layout.or_default_counter();
            let bits = layout.simulate(None)?;
            let mut csv = String::from("energy,transmission\n");
            for e in &grid {
                let s = scattering(&bits, *e, ch.k, layout.gamma)?;
                writeln!(csv, "{e},{}", s.transmission).unwrap();
            }
            let params = json!({ "layout": layout, "energies": energies, "chain": ch, "bonds": bits.len() });
            emit(
                &out,
                "transmit",
                params,
                &[(".transmit.csv", csv.into_bytes())],
                started,
            )
        }
        Command::Evolve {
            layout,
            t,
            frames,
            center,
            width,
            momentum,
            method,
            chain: ch,
            out,
        } => {
            if frames < 1 || !t.is_finite() || !(width > 0.0) {
                return Err(Failure::Usage(
                    "need --frames >= 1, finite --t and positive --width".into(),
                ));
            }
            let layout = layout.or_default_counter();
            let bits = layout.simulate(None)?;
            let h = chain(&layout, &ch, &bits)?;
            let n = h.dim();
            let centre = center.unwrap_or(n as f64 / 4.0);
            let sites: Vec<i64> = (0..n as i64).collect();
            let envelope = gaussian_profile(&sites, centre, width);
            let norm = envelope.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Failure::Usage("packet does not overlap the chain".into()));
            }
            let psi0: Vec<Complex64> = envelope
                .iter()
                .zip(&sites)
                .map(|(a, &s)| Complex64::from_polar(a / norm, momentum * s as f64))
                .collect();
            let method = match method {
                Method::Exact => EvolveMethod::ExactDiag,
                Method::Stepper => EvolveMethod::CheckedStepper,
            };
            let mut csv = String::from("time,site,probability\n");
            for f in 0..frames {
                let time = if frames == 1 {
                    t
                } else {
                    t * f as f64 / (frames - 1) as f64
                };
                let psi = evolve(&h, &psi0, time, method)?;
                for (site, a) in psi.iter().enumerate() {
                    writeln!(csv, "{time},{site},{}", a.norm_sqr()).unwrap();
                }
            }
            let params = json!({
                "layout": layout, "t": t, "frames": frames, "center": centre, "width": width,
                "momentum": momentum, "method": format!("{method:?}"), "chain": ch, "sites": n,
            });
            emit(&out, "evolve", params, &[(".evolve.csv", csv.into_bytes())], started)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
