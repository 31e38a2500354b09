//! The `laplace-gate` command line.
//!
//! Subcommands: `check` (admissibility verdict), `invert` (axis inversion
//! to CSV + JSON), `solve` (transform-route convolution solve), `pairs`
//! (reference catalog listing and round-trip check).
//!
//! Exit codes: 0 success/admissible, 1 usage or evaluation error,
//! 2 inadmissible, 3 inconclusive, 4 requested tolerance unachievable.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use crate::admissibility::{assess, ProbeSettings, Verdict};
use crate::analytic_core::{catalog, TailBound, TimeSignal, TransformFunction};
use crate::expr::{laplace_closed_form, monomials, parse_expr};
use crate::forward::laplace_of_signal;
use crate::hypersingular::{solve, SolveError, SolveSettings};
use crate::inversion::{
    invert, truncation_bound, verify_conclusions, InversionSettings, DEFAULT_CHECK_TOL,
    DEFAULT_NEGATIVE_T,
};
use crate::report::{fmt_number, signal_points, write_csv, Envelope};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INADMISSIBLE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_TOL_UNACHIEVABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "laplace-gate",
    version,
    about = "Certify, invert and exploit Laplace transforms of bounded causal signals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalFlags,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalFlags {
    /// Target error per output point.
    #[arg(long, global = true, default_value_t = 2e-5)]
    pub tol: f64,
    /// Seed for the analyticity probe loops.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Upper end of the decay-fit window.
    #[arg(long = "eta-max", global = true, default_value_t = 1e4)]
    pub eta_max: f64,
    /// Cap on the inversion truncation frequency.
    #[arg(long = "h-max", global = true, default_value_t = 1e6)]
    pub h_max: f64,
    /// Emit the JSON report on stdout instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write CSV output to this file (JSON then goes to stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Proceed even when the admissibility verdict is not `admissible`.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test the sufficient conditions on a transform expression in `p`.
    Check {
        /// Transform expression, e.g. "1/(p+1)^2".
        expr: String,
    },
    /// Invert a transform expression on a time grid.
    Invert {
        expr: String,
        /// Time grid as start:end:step.
        #[arg(long, default_value = "0:10:0.05", allow_hyphen_values = true)]
        t: String,
    },
    /// Solve q + (1/Γ(λ)) ∫ (t-τ)^{λ-1} q dτ = f through the transform domain.
    Solve {
        /// Kernel exponent λ, nonzero with |λ| < 2 (λ = -0.25 is the
        /// hyper-singular case of interest).
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        /// Right-hand side f(t) as a sum of c*t^a*exp(b*t) terms.
        #[arg(long)]
        f: Option<String>,
        /// Alternatively: CSV samples of f (columns t,re[,im]).
        #[arg(long = "f-csv")]
        f_csv: Option<PathBuf>,
        /// Declared tail envelope for --f-csv, e.g. "4*exp(-0.9*t)".
        #[arg(long)]
        tail: Option<String>,
        /// Time grid as start:end:step.
        #[arg(long, default_value = "0:10:0.02", allow_hyphen_values = true)]
        t: String,
        /// Comma-separated residual sample points on the positive real axis.
        #[arg(long = "residual-p", default_value = "0.5,1,2,4")]
        residual_p: String,
    },
    /// List the reference catalog or run its round-trip check.
    Pairs {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        roundtrip: bool,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type CliResult = Result<i32, Failure>;

pub fn run(cli: Cli) -> i32 {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match &cli.command {
        Command::Check { expr } => run_check(expr, &cli.global, &mut out),
        Command::Invert { expr, t } => run_invert(expr, t, &cli.global, &mut out),
        Command::Solve {
            lambda,
            f,
            f_csv,
            tail,
            t,
            residual_p,
        } => run_solve(
            *lambda,
            f.as_deref(),
            f_csv.as_deref(),
            tail.as_deref(),
            t,
            residual_p,
            &cli.global,
            &mut out,
        ),
        Command::Pairs { list, roundtrip } => run_pairs(*list, *roundtrip, &cli.global, &mut out),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("laplace-gate: {}", f.message);
            f.code
        }
    };
    if out.flush().is_err() {
        return EXIT_ERROR;
    }
    code
}

fn probe_settings(flags: &GlobalFlags) -> ProbeSettings {
    ProbeSettings {
        eta_max: flags.eta_max,
        seed: flags.seed,
        ..ProbeSettings::default()
    }
}

fn inversion_settings(flags: &GlobalFlags) -> InversionSettings {
    InversionSettings {
        tol: flags.tol,
        h_max: flags.h_max,
        force: flags.force,
        ..InversionSettings::default()
    }
}

fn settings_json(flags: &GlobalFlags, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({
        "tol": flags.tol,
        "seed": flags.seed,
        "eta_max": flags.eta_max,
        "h_max": flags.h_max,
        "force": flags.force,
    });
    if let (Some(obj), Some(extra_obj)) = (v.as_object_mut(), extra.as_object()) {
        for (k, val) in extra_obj {
            obj.insert(k.clone(), val.clone());
        }
    }
    v
}

fn parse_transform(expr: &str) -> Result<TransformFunction, Failure> {
    let ast = parse_expr(expr, "p")
        .map_err(|e| Failure::new(EXIT_ERROR, format!("in \"{expr}\": {e}")))?;
    Ok(ast.into_transform(expr))
}

fn parse_t_range(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::new(
            EXIT_ERROR,
            format!("--t expects start:end:step, got \"{spec}\""),
        ));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Failure::new(EXIT_ERROR, format!("bad number \"{s}\" in --t")))
        })
        .collect::<Result<_, _>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start {
        return Err(Failure::new(
            EXIT_ERROR,
            "--t requires step > 0 and end ≥ start",
        ));
    }
    let n = ((end - start) / step).round() as usize;
    let mut grid: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    // snap the final point onto the requested end
    if let Some(last) = grid.last_mut() {
        if (*last - end).abs() <= 1e-9 * step {
            *last = end;
        }
    }
    grid.retain(|&t| t <= end + 1e-9 * step);
    Ok(grid)
}

fn verdict_exit(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Admissible => EXIT_OK,
        Verdict::Inadmissible => EXIT_INADMISSIBLE,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn verdict_name(verdict: Verdict) -> &'static str {
    match verdict {
        Verdict::Admissible => "admissible",
        Verdict::Inadmissible => "inadmissible",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn run_check(expr: &str, flags: &GlobalFlags, out: &mut impl Write) -> CliResult {
    let f = parse_transform(expr)?;
    let report = assess(&f, &probe_settings(flags));
    let verdict = report.verdict;
    let mut env = Envelope::new(
        "check",
        settings_json(flags, json!({ "expr": expr })),
        verdict_name(verdict),
    );
    env.report = Some(report);
    out.write_all(env.to_json().as_bytes())
        .map_err(io_failure)?;
    Ok(verdict_exit(verdict))
}

#[allow(clippy::too_many_arguments)]
fn run_invert(expr: &str, t_spec: &str, flags: &GlobalFlags, out: &mut impl Write) -> CliResult {
    let f = parse_transform(expr)?;
    let t_grid = parse_t_range(t_spec)?;
    let report = assess(&f, &probe_settings(flags));
    let settings = inversion_settings(flags);

    let settings_value = settings_json(flags, json!({ "expr": expr, "t": t_spec }));
    if report.verdict != Verdict::Admissible && !flags.force {
        let verdict = report.verdict;
        let mut env = Envelope::new("invert", settings_value, verdict_name(verdict));
        env.report = Some(report);
        out.write_all(env.to_json().as_bytes())
            .map_err(io_failure)?;
        return Ok(verdict_exit(verdict));
    }

    let signal = invert(&f, &t_grid, &settings, &report)
        .map_err(|e| Failure::new(EXIT_ERROR, e.to_string()))?;
    let negatives: Vec<f64> = DEFAULT_NEGATIVE_T.to_vec();
    let record = verify_conclusions(&f, &signal, &negatives, &settings, &report, DEFAULT_CHECK_TOL)
        .map_err(|e| Failure::new(EXIT_ERROR, e.to_string()))?;

    let (h_trunc, achieved) = match (report.c_hat, report.b_hat) {
        (Some(c), Some(b)) if b > 1.0 => truncation_bound(c, b, settings.tol / 2.0, settings.h_max)
            .unwrap_or((settings.h_max, f64::NAN)),
        _ => (settings.h_max, f64::NAN),
    };

    let mut env = Envelope::new("invert", settings_value, verdict_name(report.verdict));
    env.signals = Some(json!({
        "points": signal_points(&signal),
        "sup_estimate": signal.sup_estimate,
        "low_confidence": signal.low_confidence,
        "h_truncation": h_trunc,
        "achieved_tail": achieved,
        "verification": record,
    }));
    env.report = Some(report);

    write_outputs(flags, out, &signal, env)?;
    Ok(EXIT_OK)
}

/// CSV/JSON routing shared by invert and solve: `--out FILE` writes the CSV
/// to the file and the JSON to stdout; `--json` writes JSON to stdout;
/// otherwise stdout carries the CSV.
fn write_outputs(
    flags: &GlobalFlags,
    out: &mut impl Write,
    signal: &TimeSignal,
    env: Envelope,
) -> Result<(), Failure> {
    match (&flags.out, flags.json) {
        (Some(path), _) => {
            let mut file = BufWriter::new(File::create(path).map_err(|e| {
                Failure::new(EXIT_ERROR, format!("cannot write {}: {e}", path.display()))
            })?);
            write_csv(&mut file, signal).map_err(io_failure)?;
            file.flush().map_err(io_failure)?;
            out.write_all(env.to_json().as_bytes()).map_err(io_failure)
        }
        (None, true) => out.write_all(env.to_json().as_bytes()).map_err(io_failure),
        (None, false) => write_csv(out, signal).map_err(io_failure),
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::new(EXIT_ERROR, format!("i/o error: {e}"))
}

fn parse_residual_p(spec: &str) -> Result<Vec<Complex64>, Failure> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(|x| Complex64::new(x, 0.0))
                .map_err(|_| {
                    Failure::new(EXIT_ERROR, format!("bad number \"{s}\" in --residual-p"))
                })
        })
        .collect()
}

/// Recognize a declared tail envelope: a single monomial `M*exp(-g*t)` or
/// `M*t^-r` with positive `M`.
fn parse_tail(spec: &str) -> Result<TailBound, Failure> {
    let ast = parse_expr(spec, "t")
        .map_err(|e| Failure::new(EXIT_ERROR, format!("in --tail \"{spec}\": {e}")))?;
    let terms = monomials(&ast).map_err(|e| {
        Failure::new(
            EXIT_ERROR,
            format!("--tail must be M*exp(-g*t) or M*t^-r: {e}"),
        )
    })?;
    if terms.len() != 1 || terms[0].coeff <= 0.0 {
        return Err(Failure::new(
            EXIT_ERROR,
            "--tail must be a single positive term M*exp(-g*t) or M*t^-r",
        ));
    }
    let m = terms[0];
    if m.power == 0.0 {
        Ok(TailBound::Exponential {
            scale: m.coeff,
            rate: -m.rate,
        })
    } else if m.rate == 0.0 && m.power < 0.0 {
        Ok(TailBound::Polynomial {
            scale: m.coeff,
            power: -m.power,
        })
    } else {
        Err(Failure::new(
            EXIT_ERROR,
            "--tail must be a single term M*exp(-g*t) or M*t^-r",
        ))
    }
}

fn read_signal_csv(path: &Path, tail: TailBound) -> Result<TimeSignal, Failure> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Failure::new(EXIT_ERROR, format!("cannot read {}: {e}", path.display())))?;
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
        match parsed {
            None if t.is_empty() => continue, // header row
            None => {
                return Err(Failure::new(
                    EXIT_ERROR,
                    format!("{}:{}: unparseable row", path.display(), lineno + 1),
                ))
            }
            Some(nums) if nums.len() >= 2 => {
                t.push(nums[0]);
                v.push(Complex64::new(nums[1], *nums.get(2).unwrap_or(&0.0)));
            }
            Some(_) => {
                return Err(Failure::new(
                    EXIT_ERROR,
                    format!("{}:{}: need columns t,re[,im]", path.display(), lineno + 1),
                ))
            }
        }
    }
    let mut sig = TimeSignal::new(t, v)
        .map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", path.display())))?;
    sig.tail_bound = Some(tail);
    Ok(sig)
}

#[allow(clippy::too_many_arguments)]
fn run_solve(
    lambda: f64,
    f_expr: Option<&str>,
    f_csv: Option<&Path>,
    tail: Option<&str>,
    t_spec: &str,
    residual_spec: &str,
    flags: &GlobalFlags,
    out: &mut impl Write,
) -> CliResult {
    if lambda == 0.0 || !(lambda.abs() < 2.0) {
        return Err(Failure::new(
            EXIT_ERROR,
            "lambda must be nonzero with |lambda| < 2",
        ));
    }
    let t_grid = parse_t_range(t_spec)?;
    if t_grid.first() != Some(&0.0) {
        return Err(Failure::new(EXIT_ERROR, "solve requires a grid starting at 0"));
    }
    let residual_p = parse_residual_p(residual_spec)?;

    let (f_transform, f_desc) = match (f_expr, f_csv) {
        (Some(expr), None) => {
            let ast = parse_expr(expr, "t")
                .map_err(|e| Failure::new(EXIT_ERROR, format!("in --f \"{expr}\": {e}")))?;
            let tf = laplace_closed_form(&ast, format!("L[{expr}]"))
                .map_err(|e| Failure::new(EXIT_ERROR, format!("--f \"{expr}\": {e}")))?;
            (tf, expr.to_string())
        }
        (None, Some(path)) => {
            let tail = tail.ok_or_else(|| {
                Failure::new(EXIT_ERROR, "--f-csv requires a --tail declaration")
            })?;
            let bound = parse_tail(tail)?;
            let sig = read_signal_csv(path, bound)?;
            let label = format!("L[{}]", path.display());
            let tf = TransformFunction::new(label, move |p| {
                laplace_of_signal(&sig, p, 1e-9)
                    .map(|st| st.value)
                    .map_err(|_| crate::analytic_core::EvalError::NonFinite)
            });
            (tf, path.display().to_string())
        }
        (Some(_), Some(_)) => {
            return Err(Failure::new(EXIT_ERROR, "--f and --f-csv are mutually exclusive"))
        }
        (None, None) => {
            return Err(Failure::new(EXIT_ERROR, "solve needs --f EXPR or --f-csv FILE"))
        }
    };

    let settings = SolveSettings {
        inversion: inversion_settings(flags),
        probe: probe_settings(flags),
        ..SolveSettings::default()
    };

    let settings_value = settings_json(
        flags,
        json!({ "lambda": lambda, "f": f_desc, "t": t_spec, "residual_p": residual_spec }),
    );

    match solve(&f_transform, lambda, &t_grid, &settings, &residual_p) {
        Ok(result) => {
            let verdict = result.q_report.verdict;
            let mut env = Envelope::new("solve", settings_value, verdict_name(verdict));
            env.signals = Some(json!({
                "points": signal_points(&result.q),
                "q0_magnitude": result.q0_magnitude,
                "sup_estimate": result.sup_estimate,
                "verified": result.verified,
                "low_confidence": result.q.low_confidence,
            }));
            env.residuals = Some(result.residuals.clone());
            env.report = Some(result.q_report.clone());
            write_outputs(flags, out, &result.q, env)?;
            Ok(EXIT_OK)
        }
        Err(SolveError::NotAdmissible { verdict, report }) => {
            let mut env = Envelope::new("solve", settings_value, verdict_name(verdict));
            env.report = Some(*report);
            out.write_all(env.to_json().as_bytes())
                .map_err(io_failure)?;
            Ok(verdict_exit(verdict))
        }
        Err(e) => Err(Failure::new(EXIT_ERROR, e.to_string())),
    }
}

fn run_pairs(list: bool, roundtrip: bool, flags: &GlobalFlags, out: &mut impl Write) -> CliResult {
    let do_roundtrip = roundtrip;
    let do_list = list || !roundtrip;
    let pairs = catalog();

    if do_list {
        let header = format!("{:<12} {:>6} {:>12} transform", "name", "b", "admissible");
        writeln!(out, "{header}").map_err(io_failure)?;
        for p in &pairs {
            writeln!(
                out,
                "{:<12} {:>6} {:>12} {}",
                p.name, p.b_true, p.admissible, p.transform.label
            )
            .map_err(io_failure)?;
        }
    }

    if do_roundtrip {
        let settings = inversion_settings(flags);
        // fail fast when the cap makes the requested tolerance unachievable
        for p in pairs.iter().filter(|p| p.admissible) {
            let (c, b) = p.transform.decay_hint.unwrap_or((1.0, p.b_true));
            let (h, achieved) = truncation_bound(c, b, settings.tol / 2.0, settings.h_max)
                .map_err(|e| Failure::new(EXIT_ERROR, e.to_string()))?;
            if h >= settings.h_max && achieved > settings.tol / 2.0 {
                return Err(Failure::new(
                    EXIT_TOL_UNACHIEVABLE,
                    format!(
                        "tolerance {} unachievable with h_max {} for pair {} (tail bound {achieved:.3e})",
                        settings.tol, settings.h_max, p.name
                    ),
                ));
            }
        }
        let mut worst_overall = 0.0f64;
        for p in pairs.iter().filter(|p| p.admissible) {
            let report = assess(&p.transform, &probe_settings(flags));
            if report.verdict != Verdict::Admissible {
                return Err(Failure::new(
                    EXIT_ERROR,
                    format!("catalog pair {} unexpectedly judged {:?}", p.name, report.verdict),
                ));
            }
            let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
            let signal = invert(&p.transform, &grid, &settings, &report)
                .map_err(|e| Failure::new(EXIT_ERROR, e.to_string()))?;
            let mut worst = 0.0f64;
            for (t, v) in grid.iter().zip(&signal.values) {
                worst = worst.max((v - (p.f_closed)(*t)).norm());
            }
            writeln!(out, "{:<12} roundtrip max error {}", p.name, fmt_number(worst))
                .map_err(io_failure)?;
            worst_overall = worst_overall.max(worst);
        }
        let gate = settings.tol.max(1e-4);
        if worst_overall > gate {
            return Err(Failure::new(
                EXIT_ERROR,
                format!("round-trip error {worst_overall:.3e} exceeds {gate:.1e}"),
            ));
        }
    }
    Ok(EXIT_OK)
}
