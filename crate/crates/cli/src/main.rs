//! Command-line front end: every library operation behind JSON-in/JSON-out
//! subcommands with a strict exit-code contract.
//!
//! Exit codes: 0 success (and property holds), 1 well-formed input whose
//! mathematical property does not hold, 2 input or usage error, 3 an explicit
//! internal bound was exceeded. Payload JSON goes to standard output (and to
//! `--out` when given); diagnostics go to standard error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use hamshift::aluthge::{aluthge_classify, AluthgeResult};
use hamshift::flatness::{
    detect_k_jumping, jumping_type, propagate, JumpingType, PropagateOptions,
};
use hamshift::measure::{
    abs_support, conv_square_root, moments_of, mult_convolve, t_weight,
};
use hamshift::model::{AtomicCharge, MomentSequence, SupportSet, WeightSequence};
use hamshift::recursion::recover_measure;
use hamshift::scalar::{Mode, Scalar, DEFAULT_EPS};
use hamshift::sweep::{run_fib, run_four_atoms, run_parity, run_thm21, Thm21Tuple};
use hamshift::{classify, moments_to_weights, Error};

#[derive(Parser)]
#[command(name = "hamshift", version, about = "Hankel/moment analysis of weighted shifts")]
struct Cli {
    /// Arithmetic mode for classification kernels.
    #[arg(long, global = true, default_value = "exact", value_parser = ["exact", "approx"])]
    mode: String,
    /// Tolerance for approximate comparisons (with --mode approx).
    #[arg(long, global = true, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Also write the payload JSON to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn mode(&self) -> Mode {
        if self.mode == "approx" {
            Mode::Approx { eps: self.eps }
        } else {
            Mode::Exact
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Shift-level analysis.
    #[command(subcommand)]
    Shift(ShiftCmd),
    /// Atomic-charge algebra.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Jumping-flatness operations.
    #[command(subcommand)]
    Flatness(FlatnessCmd),
    /// Theorem sweeps.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args)]
struct ShiftInput {
    /// Weight-sequence JSON file ({"weights_sq": [...], "tail": ...?}).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Moment-sequence JSON file ({"gamma": [...]}).
    #[arg(long)]
    moments: Option<PathBuf>,
}

impl ShiftInput {
    fn weight_sequence(&self, horizon: usize) -> Result<WeightSequence, CliError> {
        match (&self.weights, &self.moments) {
            (Some(path), None) => read_json(path),
            (None, Some(path)) => {
                let g: MomentSequence = read_json(path)?;
                Ok(moments_to_weights(&g)?)
            }
            _ => Err(CliError::usage(
                "exactly one of --weights or --moments is required",
            )),
        }
        .and_then(|w| {
            if w.is_finite_horizon() && w.prefix_len() < horizon {
                Err(CliError::from(Error::InsufficientWeights {
                    needed: horizon,
                    available: w.prefix_len(),
                }))
            } else {
                Ok(w)
            }
        })
    }
}

#[derive(Subcommand)]
enum ShiftCmd {
    /// Truncated H(n)/H~(n) classification of the shift's moment sequence.
    Analyze {
        #[command(flatten)]
        input: ShiftInput,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Aluthge transform: exact squared weights/moments, certified
    /// classification, and the representing measure when recoverable.
    Aluthge {
        #[command(flatten)]
        input: ShiftInput,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Moments and squared weights of the shift of a normalized measure.
    FromMeasure {
        /// Atomic-charge JSON file.
        file: PathBuf,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Recover the finitely atomic representing charge of a moment sequence.
    Recover {
        #[arg(long)]
        moments: PathBuf,
    },
}

#[derive(Subcommand)]
enum MeasureCmd {
    /// Raw moment list of a charge.
    Moments {
        file: PathBuf,
        #[arg(short, default_value_t = 12)]
        n: usize,
    },
    /// Multiplicative convolution of two charges.
    Convolve { a: PathBuf, b: PathBuf },
    /// t-weighting: atom (l, d) -> (l, l*d).
    Tmul { file: PathBuf },
    /// Absolute support set.
    AbsSupport { file: PathBuf },
    /// Convolution square root over a candidate support.
    Sqrtconv {
        rho: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
    },
}

#[derive(Subcommand)]
enum FlatnessCmd {
    /// k-jumping detection over the weight horizon.
    Detect {
        #[arg(long)]
        weights: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Type I / type II dichotomy for 2-jumping shifts.
    Type {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        horizon: usize,
    },
    /// Constructive propagation replay.
    Propagate {
        #[arg(long)]
        moments: PathBuf,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        n0: usize,
        #[arg(long)]
        horizon: usize,
        /// Use the literal (k-1)n'_0 inner offset instead of even rounding.
        #[arg(long)]
        raw_inner_offset: bool,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Transform classification vs. the r = 0, p = q predicate on a grid file.
    Thm21 {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Negative-atom obstruction sweep (seeded).
    Fib {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 10)]
        violators: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Four-atom obstruction sweep (seeded).
    FourAtoms {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
    /// Planted propagation sweep with parity consistency.
    Parity {
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long, default_value_t = 4)]
        n0_max: usize,
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        horizon: usize,
    },
}

/// Payload plus the mathematical verdict driving the exit code.
struct Outcome {
    payload: serde_json::Value,
    property_holds: bool,
}

impl Outcome {
    fn ok(payload: serde_json::Value) -> Self {
        Outcome {
            payload,
            property_holds: true,
        }
    }

    fn verdict(payload: serde_json::Value, holds: bool) -> Self {
        Outcome {
            payload,
            property_holds: holds,
        }
    }
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(msg: &str) -> Self {
        CliError {
            message: msg.into(),
            code: 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::SearchSpaceTooLarge(_) | Error::Undecidable(_) => 3,
            _ => 2,
        };
        CliError {
            message: e.to_string(),
            code,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        message: format!("cannot read {}: {e}", path.display()),
        code: 2,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError {
        message: format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ),
        code: 2,
    })
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("serializable payload")
}

fn approximate_weights(w: &WeightSequence) -> WeightSequence {
    WeightSequence {
        weights_sq: w
            .weights_sq
            .iter()
            .map(|s| Scalar::Approx(s.to_f64()))
            .collect(),
        tail: w.tail.clone(),
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Shift(cmd) => run_shift(cli, cmd),
        Command::Measure(cmd) => run_measure(cmd),
        Command::Flatness(cmd) => run_flatness(cmd),
        Command::Verify(cmd) => run_verify(cmd),
    }
}

fn run_shift(cli: &Cli, cmd: &ShiftCmd) -> Result<Outcome, CliError> {
    match cmd {
        ShiftCmd::Analyze {
            input,
            max_n,
            horizon,
        } => {
            let w = input.weight_sequence(*horizon)?;
            let w = if matches!(cli.mode(), Mode::Approx { .. }) {
                approximate_weights(&w)
            } else {
                w
            };
            let gamma = w.moments(*horizon)?;
            let report = classify(&gamma, *max_n, *horizon, cli.mode())?;
            let holds = report.subnormal_truncated;
            Ok(Outcome::verdict(to_value(&report), holds))
        }
        ShiftCmd::Aluthge {
            input,
            max_n,
            horizon,
        } => {
            let w = input.weight_sequence(*horizon + 1)?;
            let result: AluthgeResult = aluthge_classify(&w, *max_n, *horizon)?;
            let holds = result.classification.subnormal_truncated;
            Ok(Outcome::verdict(to_value(&result), holds))
        }
        ShiftCmd::FromMeasure { file, horizon } => {
            let mu: AtomicCharge = read_json(file)?;
            let moments = moments_of(&mu, *horizon);
            let g = MomentSequence::new(moments).map_err(CliError::from)?;
            let w = moments_to_weights(&g)?;
            Ok(Outcome::ok(json!({
                "gamma": to_value(&g)["gamma"],
                "weights_sq": to_value(&w)["weights_sq"],
            })))
        }
        ShiftCmd::Recover { moments } => {
            let g: MomentSequence = read_json(moments)?;
            match recover_measure(&g)? {
                Some(mu) => {
                    let signed = !mu.is_measure();
                    Ok(Outcome::ok(json!({
                        "measure": to_value(&mu),
                        "signed": signed,
                    })))
                }
                None => Ok(Outcome::verdict(
                    json!({ "measure": null }),
                    false,
                )),
            }
        }
    }
}

fn run_measure(cmd: &MeasureCmd) -> Result<Outcome, CliError> {
    match cmd {
        MeasureCmd::Moments { file, n } => {
            let mu: AtomicCharge = read_json(file)?;
            Ok(Outcome::ok(json!({ "moments": to_value(&moments_of(&mu, *n)) })))
        }
        MeasureCmd::Convolve { a, b } => {
            let x: AtomicCharge = read_json(a)?;
            let y: AtomicCharge = read_json(b)?;
            Ok(Outcome::ok(to_value(&mult_convolve(&x, &y))))
        }
        MeasureCmd::Tmul { file } => {
            let mu: AtomicCharge = read_json(file)?;
            Ok(Outcome::ok(to_value(&t_weight(&mu))))
        }
        MeasureCmd::AbsSupport { file } => {
            let mu: AtomicCharge = read_json(file)?;
            Ok(Outcome::ok(to_value(&abs_support(&mu))))
        }
        MeasureCmd::Sqrtconv { rho, candidates } => {
            let rho: AtomicCharge = read_json(rho)?;
            let cands: SupportSet = read_json(candidates)?;
            match conv_square_root(&rho, &cands)? {
                Some(nu) => Ok(Outcome::ok(json!({ "root": to_value(&nu) }))),
                None => Ok(Outcome::verdict(json!({ "root": null }), false)),
            }
        }
    }
}

fn run_flatness(cmd: &FlatnessCmd) -> Result<Outcome, CliError> {
    match cmd {
        FlatnessCmd::Detect {
            weights,
            k,
            horizon,
        } => {
            let w: WeightSequence = read_json(weights)?;
            let jumping = detect_k_jumping(&w, *k, *horizon)?;
            Ok(Outcome::verdict(
                json!({ "k": k, "horizon": horizon, "k_jumping": jumping }),
                jumping,
            ))
        }
        FlatnessCmd::Type { weights, horizon } => {
            let w: WeightSequence = read_json(weights)?;
            match jumping_type(&w, *horizon) {
                Ok(t) => Ok(Outcome::verdict(
                    json!({ "type": to_value(&t) }),
                    t != JumpingType::NotJumping,
                )),
                Err(Error::ShapeMismatch(msg)) => Ok(Outcome::verdict(
                    json!({ "type": "outside-dichotomy", "detail": msg }),
                    false,
                )),
                Err(e) => Err(e.into()),
            }
        }
        FlatnessCmd::Propagate {
            moments,
            k,
            n0,
            horizon,
            raw_inner_offset,
        } => {
            let g: MomentSequence = read_json(moments)?;
            let opts = PropagateOptions {
                raw_inner_offset: *raw_inner_offset,
            };
            match propagate(&g, *k, *n0, *horizon, opts) {
                Ok(report) => Ok(Outcome::ok(to_value(&report))),
                // a broken replay step is a mathematical outcome, not an
                // operational failure
                Err(e @ Error::PropagationStep { .. }) => Ok(Outcome::verdict(
                    json!({ "error": e.to_string() }),
                    false,
                )),
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn run_verify(cmd: &VerifyCmd) -> Result<Outcome, CliError> {
    match cmd {
        VerifyCmd::Thm21 {
            grid,
            max_n,
            horizon,
        } => {
            #[derive(serde::Deserialize)]
            struct Grid {
                tuples: Vec<Thm21Tuple>,
            }
            let grid: Grid = read_json(grid)?;
            let report = run_thm21(&grid.tuples, *max_n, *horizon)?;
            let holds = report.all_agree;
            Ok(Outcome::verdict(to_value(&report), holds))
        }
        VerifyCmd::Fib {
            trials,
            violators,
            seed,
            max_n,
            horizon,
        } => {
            let report = run_fib(*trials, *violators, *seed, *max_n, *horizon)?;
            let holds = report.all_failed;
            Ok(Outcome::verdict(to_value(&report), holds))
        }
        VerifyCmd::FourAtoms {
            trials,
            seed,
            max_n,
            horizon,
        } => {
            let report = run_four_atoms(*trials, *seed, *max_n, *horizon)?;
            let holds = report.all_failed;
            Ok(Outcome::verdict(to_value(&report), holds))
        }
        VerifyCmd::Parity {
            k_max,
            n0_max,
            instances,
            seed,
            horizon,
        } => {
            let report = run_parity(*k_max, *n0_max, *instances, *seed, *horizon)?;
            let holds = report.all_consistent;
            Ok(Outcome::verdict(to_value(&report), holds))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.payload)
                .expect("payload serializes");
            println!("{text}");
            if let Some(path) = &cli.out {
                if let Err(e) = fs::write(path, format!("{text}\n")) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if outcome.property_holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
