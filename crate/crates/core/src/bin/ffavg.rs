use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use ffavg::experiments::{
    default_primes, emit_report, render_json, run_sweep, run_verify_fourier, ExtremizerSpec, Format, JPolicy,
    SweepConfig,
};
use ffavg::exponent::Rational;
use ffavg::operators::{
    adjoint_delta_ratio, extremizer, maximal_bounded, opnorm_lower_bound, predicted_exponents, region_membership,
    PredictedGrowth, PreparedOperator, RatioMeasurement, Target,
};
use ffavg::spectral::{decompose, omega_multiplier_norm, omega_sup, omega_sup_bound};
use ffavg::{par, Error, Exponent, ExponentPair, FieldCtx, Tolerances};

#[derive(Parser)]
#[command(name = "ffavg", version, about = "Averaging operators over product varieties in F_q^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exact Fourier formula, decay, decomposition and Omega bounds.
    VerifyFourier(VerifyArgs),
    /// Decompose one surface measure and report residual and bounds.
    Decompose(DecomposeArgs),
    /// Measure one ratio, or a lower bound for the operator norm.
    Ratio(RatioArgs),
    /// Sweep averaging-operator ratios over primes.
    SweepAveraging(SweepArgs),
    /// Sweep maximal-operator ratios over primes.
    SweepMaximal(SweepArgs),
    /// Region membership and predicted growth rates for (p, r).
    Region(RegionArgs),
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Comma-separated primes.
    #[arg(long, default_value = "3,5,7,11,13")]
    primes: String,
    /// Single prime; overrides --primes.
    #[arg(long)]
    q: Option<u32>,
    /// Integer or "all".
    #[arg(long, default_value = "all")]
    j: String,
    #[arg(long, default_value_t = 1e-6)]
    tol_abs: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    j: u32,
    #[arg(long, default_value_t = 1e-6)]
    tol_abs: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long)]
    q: u32,
    #[arg(long)]
    d: usize,
    /// averaging or maximal.
    #[arg(long, default_value = "averaging")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    j: u32,
    /// Exponent p, e.g. 3/2 or inf.
    #[arg(long)]
    p: String,
    /// Exponent r (ignored for maximal, which uses r = p).
    #[arg(long)]
    r: Option<String>,
    /// Extremizer tag, or "suite" for the best lower bound.
    #[arg(long, default_value = "delta_zero")]
    extremizer: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate-ascent rounds used with --extremizer suite.
    #[arg(long, default_value_t = 0)]
    budget: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Comma-separated primes; defaults depend on d.
    #[arg(long)]
    primes: Option<String>,
    /// Integer or "all" (averaging only).
    #[arg(long, default_value = "all")]
    j: String,
    /// Comma-separated exponents p.
    #[arg(long)]
    p: Option<String>,
    /// Comma-separated exponents r, paired with --p (averaging only).
    #[arg(long)]
    r: Option<String>,
    /// Comma-separated extremizer tags, or "suite".
    #[arg(long, default_value = "suite")]
    extremizer: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol_abs: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    p: String,
    #[arg(long)]
    r: String,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn parse_primes(s: &str) -> Result<Vec<u32>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| config_err(format!("bad prime {t:?}"))))
        .collect()
}

fn parse_exponents(s: &str) -> Result<Vec<Exponent>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Exponent>().map_err(config_err))
        .collect()
}

fn parse_exponent(s: &str) -> Result<Exponent, Error> {
    s.parse().map_err(config_err)
}

fn tolerances(abs: f64) -> Result<Tolerances, Error> {
    if !(abs >= 0.0 && abs.is_finite()) {
        return Err(config_err("--tol-abs must be a nonnegative number"));
    }
    Ok(Tolerances {
        abs,
        ..Tolerances::default()
    })
}

fn field(q: u32) -> Result<Arc<FieldCtx>, Error> {
    FieldCtx::new(q as u64).map(Arc::new).map_err(config_err)
}

fn write_text(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<i32, Error> {
    let format: Format = a.output.format.parse()?;
    let primes = match a.q {
        Some(q) => vec![q],
        None => parse_primes(&a.primes)?,
    };
    let mut config = SweepConfig::averaging(a.d, primes, Vec::new(), a.j.parse()?, 0);
    config.extremizers.clear();
    config.tolerances = tolerances(a.tol_abs)?;
    let report = run_verify_fourier(config)?;
    emit_report(&report, format, a.output.out.as_deref())?;
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct DecomposeSummary {
    q: u32,
    d: usize,
    j: u32,
    residual: f64,
    residual_bound: f64,
    tail_coefficients: Vec<f64>,
    omega_sup: f64,
    omega_sup_bound: f64,
    multiplier_norm: f64,
    passed: bool,
}

fn decompose_cmd(a: DecomposeArgs) -> Result<i32, Error> {
    let ctx = field(a.q)?;
    let tol = tolerances(a.tol_abs)?;
    if a.j.is_multiple_of(a.q) {
        return Err(config_err(format!("j = {} is zero modulo {}", a.j, a.q)));
    }
    let dec = decompose(&ctx, a.d, a.j).map_err(config_err)?;
    let residual_bound = tol.abs * a.q as f64;
    let (sup, sup_ok) = match omega_sup(&dec, tol) {
        Ok(v) => (v, true),
        Err(Error::BoundViolation(v)) => (v.value, false),
        Err(e) => return Err(e),
    };
    let summary = DecomposeSummary {
        q: dec.q,
        d: dec.d,
        j: dec.j,
        residual: dec.residual,
        residual_bound,
        tail_coefficients: dec.tail_coefficients.clone(),
        omega_sup: sup,
        omega_sup_bound: omega_sup_bound(dec.q, dec.d),
        multiplier_norm: omega_multiplier_norm(&dec),
        passed: sup_ok && dec.residual <= residual_bound,
    };
    write_text(&render_json(&summary)?, a.out.as_ref())?;
    Ok(if summary.passed { 0 } else { 1 })
}

#[derive(Serialize)]
struct LowerBoundReport {
    q: u32,
    d: usize,
    target: String,
    exponents: ExponentPair,
    budget: usize,
    seed: u64,
    ratio: f64,
    extremizer: String,
}

fn ratio_cmd(a: RatioArgs) -> Result<i32, Error> {
    let format: Format = a.output.format.parse()?;
    let ctx = field(a.q)?;
    let p = parse_exponent(&a.p)?;
    let target = match a.mode.as_str() {
        "averaging" => {
            if a.j.is_multiple_of(a.q) {
                return Err(config_err(format!("j = {} is zero modulo {}", a.j, a.q)));
            }
            Target::Averaging(a.j)
        }
        "maximal" => Target::Maximal,
        other => return Err(config_err(format!("unknown mode {other:?}"))),
    };
    let r = match (&a.r, target) {
        (_, Target::Maximal) => p,
        (Some(r), _) => parse_exponent(r)?,
        (None, _) => return Err(config_err("--r is required for averaging")),
    };
    let pr = ExponentPair::new(p, r);
    ffavg::grid::grid_size(a.q, a.d).map_err(config_err)?;

    if a.extremizer == "suite" {
        let lb = opnorm_lower_bound(&ctx, a.d, target, pr, a.budget, a.seed).map_err(config_err)?;
        let report = LowerBoundReport {
            q: a.q,
            d: a.d,
            target: a.mode.clone(),
            exponents: target.effective_pair(pr),
            budget: a.budget,
            seed: a.seed,
            ratio: lb.ratio,
            extremizer: lb.extremizer,
        };
        write_text(&render_json(&report)?, a.output.out.as_ref())?;
        return Ok(0);
    }

    let spec: ExtremizerSpec = a.extremizer.parse()?;
    let m: RatioMeasurement = match spec {
        ExtremizerSpec::AdjointDeltaZero => match target {
            Target::Averaging(j) => adjoint_delta_ratio(&ctx, a.d, j, pr)?,
            Target::Maximal => return Err(config_err("adjoint_delta_zero applies to averaging only")),
        },
        _ => {
            let kind = match spec {
                ExtremizerSpec::Fixed(k) => k,
                _ => ffavg::operators::ExtremizerKind::VarietyIndicator(target.j().unwrap_or(1)),
            };
            let f = extremizer(&ctx, a.d, kind).map_err(config_err)?;
            PreparedOperator::new(&ctx, a.d, target)?.ratio(&f, pr, &spec.tag())?
        }
    };
    let text = match format {
        Format::Json => render_json(&m)?,
        Format::Csv => ffavg::experiments::render_csv(std::slice::from_ref(&m))?,
    };
    write_text(&text, a.output.out.as_ref())?;
    Ok(0)
}

fn sweep_cmd(a: SweepArgs, maximal: bool) -> Result<i32, Error> {
    let format: Format = a.output.format.parse()?;
    let d = a.d;
    if d == 0 {
        return Err(config_err("d must be at least 1"));
    }
    let primes = match &a.primes {
        Some(s) => parse_primes(s)?,
        None => default_primes(d),
    };
    let extremizers = ExtremizerSpec::parse_list(&a.extremizer, a.seed)?;
    let mut config = if maximal {
        if a.r.is_some() {
            return Err(config_err("sweep-maximal takes --p only (r = p)"));
        }
        let ps = match &a.p {
            Some(s) => parse_exponents(s)?,
            None if d >= 2 => vec![Exponent::from_value(Rational::new(d as i64, d as i64 - 1))?],
            None => return Err(config_err("--p is required for d = 1")),
        };
        SweepConfig::maximal(d, primes, ps, a.seed)
    } else {
        let pairs = match (&a.p, &a.r) {
            (Some(p), Some(r)) => {
                let ps = parse_exponents(p)?;
                let rs = parse_exponents(r)?;
                if ps.len() != rs.len() && ps.len() != 1 && rs.len() != 1 {
                    return Err(config_err("--p and --r lists must have equal length"));
                }
                let n = ps.len().max(rs.len());
                (0..n)
                    .map(|i| ExponentPair::new(ps[i.min(ps.len() - 1)], rs[i.min(rs.len() - 1)]))
                    .collect()
            }
            (None, None) => {
                let di = d as i64;
                vec![ExponentPair::from_inv(Rational::new(di, di + 1), Rational::new(1, di + 1))?]
            }
            _ => return Err(config_err("--p and --r must be given together")),
        };
        let j_policy: JPolicy = a.j.parse()?;
        SweepConfig::averaging(d, primes, pairs, j_policy, a.seed)
    };
    config.extremizers = extremizers;
    config.tolerances = tolerances(a.tol_abs)?;
    let report = run_sweep(config)?;
    emit_report(&report, format, a.output.out.as_deref())?;
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct RegionReport {
    d: usize,
    exponents: ExponentPair,
    #[serde(serialize_with = "ser_rational")]
    inv_p: Rational,
    #[serde(serialize_with = "ser_rational")]
    inv_r: Rational,
    region_membership: bool,
    maximal_bounded: bool,
    predicted: PredictedGrowth,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

fn region_cmd(a: RegionArgs) -> Result<i32, Error> {
    if a.d == 0 {
        return Err(config_err("d must be at least 1"));
    }
    let pr = ExponentPair::new(parse_exponent(&a.p)?, parse_exponent(&a.r)?);
    let report = RegionReport {
        d: a.d,
        exponents: pr,
        inv_p: pr.inv_p(),
        inv_r: pr.inv_r(),
        region_membership: region_membership(a.d, pr),
        maximal_bounded: maximal_bounded(a.d, pr.p),
        predicted: predicted_exponents(a.d, pr),
    };
    write_text(&render_json(&report)?, None)?;
    Ok(0)
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::BoundViolation(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    par::init_from_env();
    let result = match cli.command {
        Command::VerifyFourier(a) => verify(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Ratio(a) => ratio_cmd(a),
        Command::SweepAveraging(a) => sweep_cmd(a, false),
        Command::SweepMaximal(a) => sweep_cmd(a, true),
        Command::Region(a) => region_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

