//! The `segloss` command line: `eval`, `gradcheck`, `fit` and `dt`.
//!
//! Exit codes: 0 on success, 1 when the command ran but something failed
//! (a pair error, a gradient over tolerance, an empty distance source), 2 on
//! usage errors such as bad flags, unknown losses or missing input paths.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::field::{MaskField, ProbField};
use crate::format::g17;
use crate::geometry::{check_threshold, edt_exact, extract_boundary};
use crate::gradients::{fit_logits, gradient_check};
use crate::io::{build_manifest, read_pgm, read_prediction, write_float_grid, GridFormat, Pair};
use crate::loss::{LossKind, LossSpec};
use crate::metrics::{confusion, metric_report};
use crate::report::{evaluate_pair, EvalConfig, EvalReport, PairReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const LOSS_HELP: &str = "Loss specs as `name` or `name:key=value,...`, e.g. `dice` or \
`tversky:alpha=0.3,beta=0.7`. Several specs may be separated by spaces or commas. \
For tversky and focal_tversky, alpha weights false positives and beta false negatives.";

#[derive(Debug, Parser)]
#[command(
    name = "segloss",
    version,
    about = "Segmentation losses, gradients and batch evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score predictions against ground truth and write a JSON report.
    Eval(EvalArgs),
    /// Compare analytic gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Fit a logit field to a mask by gradient descent on one loss.
    Fit(FitArgs),
    /// Euclidean distance transform of a PGM mask.
    Dt(DtArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Prediction file (.csv, .slf or .pgm) or directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Truth mask (.pgm) or directory of them, paired with predictions by file stem.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, num_args = 1.., value_name = "SPEC", help = LOSS_HELP)]
    losses: Vec<String>,
    /// Threshold for the hard metrics; values at or above it are foreground.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, num_args = 1.., value_name = "SPEC", help = LOSS_HELP, required_unless_present = "all")]
    loss: Vec<String>,
    /// Check all fourteen losses with default parameters.
    #[arg(long, conflicts_with = "loss")]
    all: bool,
    /// Field size as HxW.
    #[arg(long, default_value = "8x8", value_parser = parse_size)]
    size: (usize, usize),
    /// Number of random pairs, seeded 0..n.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Target mask (.pgm).
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_name = "SPEC", help = LOSS_HELP)]
    loss: String,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Per-pixel step size.
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write `step,loss` rows, one per step, to this CSV file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DtSource {
    /// Distances to the nearest foreground pixel.
    Region,
    /// Distances to the nearest pixel of the foreground outline.
    Boundary,
}

#[derive(Debug, Args)]
struct DtArgs {
    /// Input mask (.pgm).
    #[arg(long = "in", value_name = "PGM")]
    input: PathBuf,
    /// Output grid (.csv or .slf).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DtSource::Region)]
    of: DtSource,
}

fn parse_size(text: &str) -> Result<(usize, usize), String> {
    let (h, w) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got `{text}`"))?;
    let dim = |s: &str| match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{s}` is not a positive integer")),
    };
    Ok((dim(h)?, dim(w)?))
}

/// Splits loss arguments into specs. Commas separate specs too, except that a
/// `key=value` piece without a loss name continues the previous spec, so
/// `dice,tversky:alpha=0.5,beta=0.5` is two specs.
pub fn split_loss_list<S: AsRef<str>>(args: &[S]) -> Vec<String> {
    let mut specs: Vec<String> = Vec::new();
    for arg in args {
        let mut continues = false;
        for piece in arg
            .as_ref()
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
        {
            let is_param = piece.contains('=') && !piece.contains(':');
            match specs.last_mut() {
                Some(last) if is_param && continues => {
                    last.push(',');
                    last.push_str(piece);
                }
                _ => specs.push(piece.to_string()),
            }
            continues = true;
        }
    }
    specs
}

fn parse_specs(args: &[String]) -> Result<Vec<(String, LossSpec)>, Error> {
    let mut out: Vec<(String, LossSpec)> = Vec::new();
    for label in split_loss_list(args) {
        let spec = LossSpec::parse(&label)?;
        if !out.iter().any(|(l, _)| *l == label) {
            out.push((label, spec));
        }
    }
    Ok(out)
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let outcome = match cli.command {
        Command::Eval(a) => cmd_eval(a, stdout, stderr),
        Command::Gradcheck(a) => cmd_gradcheck(a, stdout),
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Dt(a) => cmd_dt(a),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure { code, message }) => {
            let _ = writeln!(stderr, "error: {message}");
            code
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn failure(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: message.to_string(),
    }
}

fn described(e: &Error) -> String {
    format!("{}: {e}", e.class())
}

fn usage_err(e: Error) -> Failure {
    usage(described(&e))
}

fn failure_err(e: Error) -> Failure {
    failure(described(&e))
}

type Outcome = Result<i32, Failure>;

fn require_file(path: &Path, what: &str) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!(
            "{what} `{}` is not a readable file",
            path.display()
        )))
    }
}

fn cmd_eval(args: EvalArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Outcome {
    check_threshold(args.threshold).map_err(usage_err)?;
    let losses = if args.losses.is_empty() {
        EvalConfig::all_defaults(args.threshold).losses
    } else {
        parse_specs(&args.losses).map_err(usage_err)?
    };
    let config = EvalConfig {
        losses,
        threshold: args.threshold,
    };

    let pairs = if args.pred.is_dir() && args.truth.is_dir() {
        let manifest = build_manifest(&args.pred, &args.truth).map_err(usage_err)?;
        for w in &manifest.warnings {
            let _ = writeln!(stderr, "warning: {w}");
        }
        manifest.pairs
    } else if args.pred.is_file() && args.truth.is_file() {
        vec![Pair {
            stem: String::new(),
            pred: args.pred.clone(),
            truth: args.truth.clone(),
        }]
    } else {
        return Err(usage(
            "--pred and --truth must both be files or both be directories",
        ));
    };

    let reports: Vec<PairReport> = pairs
        .iter()
        .map(|pair| {
            let (pred, truth) = (
                pair.pred.display().to_string(),
                pair.truth.display().to_string(),
            );
            let scored = read_prediction(&pair.pred)
                .and_then(|p| Ok((p, read_pgm(&pair.truth)?)))
                .and_then(|(p, y)| evaluate_pair(pred.clone(), truth.clone(), &p, &y, &config));
            scored.unwrap_or_else(|e| {
                let _ = writeln!(stderr, "error: {pred} vs {truth}: {}", described(&e));
                PairReport::failed(pred, truth, &e)
            })
        })
        .collect();

    let report = EvalReport::new(&config, reports);
    let json = report.to_json().map_err(failure_err)?;
    match &args.out {
        Some(path) => fs::write(path, &json).map_err(|e| failure_err(Error::io(path, e)))?,
        None => stdout.write_all(json.as_bytes()).map_err(failure)?,
    }
    Ok(if report.has_errors() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

fn cmd_gradcheck(args: GradcheckArgs, stdout: &mut dyn Write) -> Outcome {
    if !(args.tol >= 0.0 && args.tol.is_finite()) {
        return Err(usage(format!(
            "--tol must be a finite value >= 0, got {}",
            args.tol
        )));
    }
    let specs = if args.all {
        LossKind::ALL
            .iter()
            .map(|&k| (k.name().to_string(), LossSpec::default_for(k)))
            .collect()
    } else {
        parse_specs(&args.loss).map_err(usage_err)?
    };
    let (h, w) = args.size;
    let width = specs.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    let mut all_ok = true;
    for (label, spec) in &specs {
        let err = gradient_check(spec, h, w, args.seeds).map_err(failure_err)?;
        let ok = err < args.tol;
        all_ok &= ok;
        let verdict = if ok { "ok" } else { "FAIL" };
        writeln!(
            stdout,
            "{label:<width$}  max_rel_err {}  {verdict}",
            g17(err)
        )
        .map_err(failure)?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_fit(args: FitArgs, stdout: &mut dyn Write) -> Outcome {
    let spec = LossSpec::parse(&args.loss).map_err(usage_err)?;
    if !(args.lr > 0.0 && args.lr.is_finite()) {
        return Err(usage(format!(
            "--lr must be a finite value > 0, got {}",
            args.lr
        )));
    }
    require_file(&args.truth, "truth mask")?;
    let y = read_pgm(&args.truth).map_err(failure_err)?;
    let fit =
        fit_logits(&y, &spec, args.steps as usize, args.lr, args.seed).map_err(failure_err)?;

    if let Some(path) = &args.trace {
        let mut csv = String::new();
        for (step, loss) in fit.loss_trace.iter().enumerate() {
            csv.push_str(&format!("{step},{}\n", g17(*loss)));
        }
        fs::write(path, csv).map_err(|e| failure_err(Error::io(path, e)))?;
    }
    let hard_dice = hard_dice(&fit.final_p, &y);
    let hard_dice = hard_dice.map_or_else(|| "undefined".to_string(), g17);
    writeln!(stdout, "loss {spec}").map_err(failure)?;
    writeln!(stdout, "steps {}", fit.steps_taken).map_err(failure)?;
    writeln!(stdout, "final_loss {}", g17(fit.final_loss)).map_err(failure)?;
    writeln!(stdout, "hard_dice {hard_dice}").map_err(failure)?;
    Ok(EXIT_OK)
}

fn hard_dice(p: &ProbField, y: &MaskField) -> Option<f64> {
    confusion(p, y, 0.5)
        .ok()
        .and_then(|c| metric_report(&c).dice)
}

fn cmd_dt(args: DtArgs) -> Outcome {
    GridFormat::from_path(&args.out).map_err(usage_err)?;
    require_file(&args.input, "input mask")?;
    let mask = read_pgm(&args.input).map_err(failure_err)?;
    let source = match args.of {
        DtSource::Region => mask,
        DtSource::Boundary => extract_boundary(&mask),
    };
    let distances = edt_exact(&source).map_err(failure_err)?;
    write_float_grid(&distances, &args.out).map_err(failure_err)?;
    Ok(EXIT_OK)
}
