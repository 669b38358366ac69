//! `ncpb` — batch driver for the Poisson-boundary toolkit.
//!
//! Four commands tie the library together: `analyze` runs the full boundary
//! pipeline on a channel file, `verify` runs the rigidity theorem harness on
//! explicit or seeded random instances, `boundary-rep` decides unique UCP
//! extension for a generator family, and `toeplitz` emits the exact-model
//! demos (counter-example certificate, symbol-map certificate, norm table).
//!
//! Exit codes are exhaustive and mutually exclusive: 0 success, 1 input
//! error, 2 consistency failure, 3 inconclusive.  All randomness flows from
//! the single `--seed` flag through seeded ChaCha streams, and reports carry
//! no timestamps, so identical invocations produce identical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ncpb_core::boundary;
use ncpb_core::cpmap::ChannelJson;
use ncpb_core::harness::{
    self, InstanceJson, Profile, SuiteSummary, TheoremVerdict, VerdictStatus,
};
use ncpb_core::numeric::{c, CMat, Tolerance};
use ncpb_core::sdp::SdpOptions;
use ncpb_core::toeplitz::{
    counterexample_certificate, norm_table, symbol_map_certificate, LaurentPoly, ToeplitzElement,
};
use ncpb_core::Error;

#[derive(Parser)]
#[command(
    name = "ncpb",
    about = "Noncommutative Poisson boundaries, UCP rigidity checks, and exact Toeplitz demos",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunFlags,
}

/// Run-wide configuration shared by every command.
#[derive(Args, Clone)]
struct RunFlags {
    /// Master seed for all randomized work.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Equality tolerance (eq_tol) for residual checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Feasibility tolerance for semidefinite checks.
    #[arg(long, global = true)]
    feas_tol: Option<f64>,
    /// Resolution for uniqueness gap certification.
    #[arg(long, global = true)]
    unique_tol: Option<f64>,
    /// Iteration cap per feasibility solve.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Print per-instance progress to stderr.
    #[arg(long, global = true)]
    trace: bool,
    /// Write the JSON (or CSV) report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl RunFlags {
    fn tolerance(&self) -> Result<Tolerance, CliError> {
        let mut t = Tolerance::default();
        if let Some(eq) = self.tol {
            if !(eq > 0.0) {
                return Err(CliError::input("--tol must be positive"));
            }
            t.eq_tol = eq;
        }
        Ok(t)
    }

    fn sdp_options(&self) -> Result<SdpOptions, CliError> {
        let mut o = SdpOptions {
            seed: self.seed,
            ..SdpOptions::default()
        };
        if let Some(f) = self.feas_tol {
            if !(f > 0.0) {
                return Err(CliError::input("--feas-tol must be positive"));
            }
            o.feas_tol = f;
        }
        if let Some(u) = self.unique_tol {
            if !(u > 0.0) {
                return Err(CliError::input("--unique-tol must be positive"));
            }
            o.unique_tol = u;
        }
        if let Some(m) = self.max_iter {
            if m == 0 {
                return Err(CliError::input("--max-iter must be positive"));
            }
            o.max_iter = m;
        }
        Ok(o)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full boundary pipeline on one channel: fixed points, ergodic
    /// projection residuals, boundary blocks, multiplicative domain, symbol
    /// map.
    Analyze {
        /// Channel JSON: {"dim": n, "kraus": [...]} or {"dim": n, "choi": [...]}.
        channel_file: PathBuf,
    },
    /// Rigidity theorem harness over instances from a file or a seeded
    /// random family.
    Verify {
        /// Instance JSON file (single instance or array of instances).
        instance_file: Option<PathBuf>,
        /// Number of random instances to draw instead of reading a file.
        #[arg(long)]
        random: Option<usize>,
        /// Random profile: random-kraus-ucp | unitary-conjugation | pinching
        /// | simple-B | block-B.
        #[arg(long, default_value = "simple-B")]
        profile: String,
        /// Ambient dimension for random instances.
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Unique-UCP-extension check for an operator system given by
    /// generators.
    BoundaryRep {
        /// Generators JSON: {"dim": n, "generators": [matrix, ...]}.
        generators_file: PathBuf,
    },
    /// Exact Toeplitz-model demos.
    Toeplitz {
        #[command(subcommand)]
        demo: ToeplitzDemo,
    },
}

#[derive(Subcommand)]
enum ToeplitzDemo {
    /// Certificate for the fixed-point counter-example: phi kills 1 - s s*
    /// but fixes every Toeplitz operator.
    Counterexample {
        /// Number of random Brown-Halmos probe symbols.
        #[arg(long, default_value_t = 50)]
        symbols: usize,
    },
    /// Certificate that the symbol map is a *-homomorphism with UCP section.
    SymbolMap {
        /// Number of random probe pairs.
        #[arg(long, default_value_t = 12)]
        probes: usize,
    },
    /// CSV table of truncated versus essential norms.
    NormTable {
        /// Window sizes, e.g. --n 8 --n 64 --n 512 or --n 8,64,512.
        #[arg(long = "n", short = 'N', value_delimiter = ',', required = true)]
        windows: Vec<usize>,
        /// Symbol coefficients as k=re,im (repeatable); default z + zbar.
        #[arg(long = "coeff")]
        coeffs: Vec<String>,
    },
}

/// Internal error wrapper deciding the process exit code.
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        Self {
            message: msg.into(),
            code: 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_) => 1,
            Error::Consistency(_) => 2,
            Error::Numeric(_) => 3,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("malformed JSON in {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("serialization failed: {e}")))?;
    emit(out, &body)
}

fn status_exit(status: VerdictStatus) -> u8 {
    match status {
        VerdictStatus::Consistent | VerdictStatus::HypothesisViolated => 0,
        VerdictStatus::Inconclusive => 3,
        VerdictStatus::ConsistencyFailure => 2,
    }
}

fn cmd_analyze(flags: &RunFlags, channel_file: &Path) -> Result<u8, CliError> {
    let wire: ChannelJson = read_json(channel_file)?;
    let channel = wire.to_channel()?;
    let tol = flags.tolerance()?;
    let (_, _, report) = boundary::analyze(&channel, &tol)?;
    emit_json(&flags.out, &report)?;
    eprintln!(
        "boundary: dim {} fixed {} blocks {:?}",
        report.ambient_dim, report.fixed_point_dim, report.boundary_blocks
    );
    Ok(0)
}

#[derive(Serialize)]
struct VerifyReport {
    summary: SuiteSummary,
    verdicts: Vec<TheoremVerdict>,
}

/// Accepts either one instance object or an array of them.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum InstanceFile {
    One(InstanceJson),
    Many(Vec<InstanceJson>),
}

fn cmd_verify(
    flags: &RunFlags,
    instance_file: Option<&Path>,
    random: Option<usize>,
    profile: &str,
    dim: usize,
) -> Result<u8, CliError> {
    let tol = flags.tolerance()?;
    let opts = flags.sdp_options()?;
    let verdicts: Vec<TheoremVerdict> = match (instance_file, random) {
        (Some(path), None) => {
            let wires = match read_json::<InstanceFile>(path)? {
                InstanceFile::One(w) => vec![w],
                InstanceFile::Many(ws) => ws,
            };
            let mut out = Vec::with_capacity(wires.len());
            for (i, w) in wires.iter().enumerate() {
                if flags.trace {
                    eprintln!("instance {i}");
                }
                out.push(harness::check_theorem(&w.to_instance(&tol)?, &tol, &opts)?);
            }
            out
        }
        (None, Some(count)) => {
            let profile: Profile = profile
                .parse()
                .map_err(|e: Error| CliError::input(e.to_string()))?;
            let seeds: Vec<u64> = (0..count as u64).map(|i| flags.seed ^ i).collect();
            if flags.trace {
                eprintln!("verifying {count} random {profile:?} instances at n = {dim}");
            }
            harness::verify_batch(&seeds, profile, dim, &tol, &opts)?
        }
        _ => {
            return Err(CliError::input(
                "pass exactly one of an instance file or --random N",
            ))
        }
    };
    let summary = SuiteSummary::from_verdicts(&verdicts);
    eprintln!(
        "verify: {} instances, {} consistent, {} hypothesis-violated, {} inconclusive, {} failures",
        summary.total,
        summary.consistent,
        summary.hypothesis_violated,
        summary.inconclusive,
        summary.consistency_failures
    );
    let code = if summary.consistency_failures > 0 {
        2
    } else if summary.inconclusive > 0 {
        3
    } else {
        0
    };
    emit_json(&flags.out, &VerifyReport { summary, verdicts })?;
    Ok(code)
}

#[derive(serde::Deserialize)]
struct GeneratorsJson {
    dim: usize,
    generators: Vec<Vec<Vec<[f64; 2]>>>,
}

fn rows_to_mat(dim: usize, rows: &[Vec<[f64; 2]>]) -> Result<CMat, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::input("generator matrix does not match dim"));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

fn cmd_boundary_rep(flags: &RunFlags, generators_file: &Path) -> Result<u8, CliError> {
    let wire: GeneratorsJson = read_json(generators_file)?;
    let gens: Vec<CMat> = wire
        .generators
        .iter()
        .map(|rows| rows_to_mat(wire.dim, rows))
        .collect::<Result<_, _>>()?;
    let tol = flags.tolerance()?;
    let opts = flags.sdp_options()?;
    let verdict = harness::boundary_representation_check(&gens, &tol, &opts)?;
    eprintln!(
        "boundary-rep: irreducible {} unique {} gap >= {:.3e}",
        verdict.irreducible, verdict.unique_extension, verdict.uniqueness_gap_lower
    );
    let code = status_exit(verdict.status);
    emit_json(&flags.out, &verdict)?;
    Ok(code)
}

fn parse_symbol(coeffs: &[String]) -> Result<LaurentPoly, CliError> {
    if coeffs.is_empty() {
        return Ok(LaurentPoly::z().add(&LaurentPoly::z_bar()));
    }
    let mut f = LaurentPoly::zero();
    for spec in coeffs {
        let (k, rest) = spec
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("bad --coeff {spec}: expected k=re,im")))?;
        let (re, im) = rest
            .split_once(',')
            .ok_or_else(|| CliError::input(format!("bad --coeff {spec}: expected k=re,im")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::input(format!("bad number in --coeff {spec}: {e}")))
        };
        let k = k
            .trim()
            .parse::<i64>()
            .map_err(|e| CliError::input(format!("bad degree in --coeff {spec}: {e}")))?;
        f = f.add(&LaurentPoly::monomial(k, c(parse(re)?, parse(im)?)));
    }
    Ok(f)
}

fn cmd_toeplitz(flags: &RunFlags, demo: &ToeplitzDemo) -> Result<u8, CliError> {
    match demo {
        ToeplitzDemo::Counterexample { symbols } => {
            let cert = counterexample_certificate(flags.seed, *symbols)?;
            let code = if cert.all_pass { 0 } else { 2 };
            emit_json(&flags.out, &cert)?;
            Ok(code)
        }
        ToeplitzDemo::SymbolMap { probes } => {
            let cert = symbol_map_certificate(flags.seed, *probes)?;
            let code = if cert.all_pass { 0 } else { 2 };
            emit_json(&flags.out, &cert)?;
            Ok(code)
        }
        ToeplitzDemo::NormTable { windows, coeffs } => {
            let f = parse_symbol(coeffs)?;
            let x = ToeplitzElement::toeplitz(f);
            let rows = norm_table(&x, windows)?;
            let mut csv = String::from("N,truncated_norm,essential_norm,gap\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{:.12e},{:.12e},{:.12e}\n",
                    r.n, r.truncated_norm, r.essential_norm, r.gap
                ));
            }
            emit(&flags.out, csv.trim_end())?;
            Ok(0)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Analyze { channel_file } => cmd_analyze(&cli.run, channel_file),
        Command::Verify {
            instance_file,
            random,
            profile,
            dim,
        } => cmd_verify(&cli.run, instance_file.as_deref(), *random, profile, *dim),
        Command::BoundaryRep { generators_file } => cmd_boundary_rep(&cli.run, generators_file),
        Command::Toeplitz { demo } => cmd_toeplitz(&cli.run, demo),
    }
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for consistency failures, so command-line
    // parse errors must map to the input-error code 1 instead of clap's
    // default 2 (help and version still exit 0).
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
