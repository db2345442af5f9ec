//! Prime sweeps, log-log slope fits, verdicts and report emission.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{BoundViolation, Error, Result};
use crate::exponent::{ratio_f64, Exponent, ExponentPair, Rational};
use crate::field::{odd_primes_between, Elem, FieldCtx};
use crate::grid::{self, lp_norm, GridFunction};
use crate::operators::{
    extremizer, maximal_bounded, predicted_exponents, region_membership, AveragingOperator,
    ExtremizerKind, MaximalOperator, Mode, RatioMeasurement, ADJOINT_DELTA_TAG,
};
use crate::par;
use crate::spectral::{
    decay_bound, decay_certificate, decompose, nk_hat_norm, omega_multiplier_norm, omega_sup,
    omega_sup_bound, spectral_table,
};
use crate::variety::reflected_j;
use crate::Tolerances;

/// Slopes at or below this are classified as bounded.
pub const BOUNDED_SLOPE: f64 = 0.1;
/// Allowed shortfall of an unbounded slope below the predicted growth.
pub const UNBOUNDED_MARGIN: f64 = 0.15;
/// Minimum number of primes for a slope fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JPolicy {
    All,
    Fixed(Elem),
}

impl FromStr for JPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(JPolicy::All),
            other => other
                .parse()
                .map(JPolicy::Fixed)
                .map_err(|_| Error::Config(format!("--j expects an integer or \"all\", got {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Averaging { j_policy: JPolicy },
    Maximal,
}

impl SweepMode {
    pub fn mode(&self) -> Mode {
        match self {
            SweepMode::Averaging { .. } => Mode::Averaging,
            SweepMode::Maximal => Mode::Maximal,
        }
    }
}

/// A test function as named in a sweep configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtremizerSpec {
    Fixed(ExtremizerKind),
    /// Indicator of the row's own variety (`Pi_1` for maximal sweeps).
    VarietyIndicator,
    /// `delta_0` pushed through the adjoint at the dual exponents.
    AdjointDeltaZero,
}

impl ExtremizerSpec {
    pub fn tag(&self) -> String {
        match self {
            ExtremizerSpec::Fixed(k) => k.tag(),
            ExtremizerSpec::VarietyIndicator => "variety_indicator".into(),
            ExtremizerSpec::AdjointDeltaZero => ADJOINT_DELTA_TAG.into(),
        }
    }

    /// `delta_zero, variety_indicator, union_indicator`, three random sign
    /// patterns and two random nonnegative functions.
    pub fn default_suite(seed: u64) -> Vec<ExtremizerSpec> {
        let mut v = vec![
            ExtremizerSpec::Fixed(ExtremizerKind::DeltaZero),
            ExtremizerSpec::VarietyIndicator,
            ExtremizerSpec::Fixed(ExtremizerKind::UnionIndicator),
        ];
        v.extend((0..3).map(|k| ExtremizerSpec::Fixed(ExtremizerKind::RandomSign(seed + k))));
        v.extend((0..2).map(|k| ExtremizerSpec::Fixed(ExtremizerKind::RandomNonneg(seed + k))));
        v
    }

    /// Parses a comma-separated list; `suite` expands to [`Self::default_suite`].
    pub fn parse_list(s: &str, seed: u64) -> Result<Vec<ExtremizerSpec>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if item == "suite" {
                out.extend(Self::default_suite(seed));
            } else {
                out.push(item.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no extremizers given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for ExtremizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for ExtremizerSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "variety_indicator" => Ok(ExtremizerSpec::VarietyIndicator),
            t if t == ADJOINT_DELTA_TAG => Ok(ExtremizerSpec::AdjointDeltaZero),
            t => t
                .parse()
                .map(ExtremizerSpec::Fixed)
                .map_err(|_| Error::Config(format!("unknown extremizer {t:?}"))),
        }
    }
}

impl Serialize for ExtremizerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExtremizerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub primes: Vec<u32>,
    pub d: usize,
    pub pairs: Vec<ExponentPair>,
    pub extremizers: Vec<ExtremizerSpec>,
    pub mode: SweepMode,
    pub seed: u64,
    pub tolerances: Tolerances,
}

/// `{5, 7, ..}` with `q^d <= 2^21` and at most 61, 31 and 19 for `d = 2, 3, 4`.
pub fn default_primes(d: usize) -> Vec<u32> {
    let hi = match d {
        0..=2 => 61,
        3 => 31,
        _ => 19,
    };
    odd_primes_between(5, hi)
        .into_iter()
        .filter(|&q| grid::grid_size(q, d).is_ok())
        .collect()
}

impl SweepConfig {
    pub fn averaging(d: usize, primes: Vec<u32>, pairs: Vec<ExponentPair>, j_policy: JPolicy, seed: u64) -> Self {
        SweepConfig {
            primes,
            d,
            pairs,
            extremizers: ExtremizerSpec::default_suite(seed),
            mode: SweepMode::Averaging { j_policy },
            seed,
            tolerances: Tolerances::default(),
        }
    }

    pub fn maximal(d: usize, primes: Vec<u32>, ps: Vec<Exponent>, seed: u64) -> Self {
        SweepConfig {
            primes,
            d,
            pairs: ps.into_iter().map(ExponentPair::diagonal).collect(),
            extremizers: ExtremizerSpec::default_suite(seed),
            mode: SweepMode::Maximal,
            seed,
            tolerances: Tolerances::default(),
        }
    }

    /// Checks the primes, grid sizes, `j` and extremizers; sorts and
    /// deduplicates the primes.
    pub fn validate(&mut self) -> Result<Vec<Arc<FieldCtx>>> {
        if self.d == 0 {
            return Err(Error::Config("d must be at least 1".into()));
        }
        if self.primes.is_empty() {
            return Err(Error::Config("at least one prime is required".into()));
        }
        self.primes.sort_unstable();
        self.primes.dedup();
        let mut ctxs = Vec::with_capacity(self.primes.len());
        for &q in &self.primes {
            let ctx = FieldCtx::new(q as u64).map_err(|e| Error::Config(e.to_string()))?;
            grid::grid_size(q, self.d).map_err(|e| Error::Config(e.to_string()))?;
            if let SweepMode::Averaging { j_policy: JPolicy::Fixed(j) } = self.mode {
                if j % q == 0 {
                    return Err(Error::Config(format!("j = {j} is zero modulo {q}")));
                }
            }
            ctxs.push(Arc::new(ctx));
        }
        if self.mode == SweepMode::Maximal {
            if self.extremizers.contains(&ExtremizerSpec::AdjointDeltaZero) {
                return Err(Error::Config(format!("{ADJOINT_DELTA_TAG} applies to averaging sweeps only")));
            }
            if self.pairs.iter().any(|pr| pr.p != pr.r) {
                return Err(Error::Config("maximal sweeps use r = p".into()));
            }
        }
        for spec in &self.extremizers {
            if let ExtremizerSpec::Fixed(ExtremizerKind::VarietyIndicator(j)) = spec {
                if let Some(q) = self.primes.iter().find(|&&q| j % q == 0) {
                    return Err(Error::Config(format!("variety_indicator_{j} is empty for q = {q}")));
                }
            }
        }
        if !(self.tolerances.abs >= 0.0 && self.tolerances.rel >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        Ok(ctxs)
    }

    fn js(&self, q: u32) -> Vec<Elem> {
        match self.mode {
            SweepMode::Averaging { j_policy: JPolicy::All } => (1..q).collect(),
            SweepMode::Averaging { j_policy: JPolicy::Fixed(j) } => vec![j % q],
            SweepMode::Maximal => vec![0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedSlope {
    /// `ratio` for sweeps, `decay_max` for Fourier verification.
    pub quantity: String,
    pub pairs: Option<ExponentPair>,
    /// Extremizer tag, or `all` for the maximum over the suite.
    pub extremizer: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub max_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Bounded,
    Unbounded,
    Inconclusive,
}

impl Classification {
    /// Bounded at slope `<= 0.1`; unbounded at slope `>= predicted - 0.15`
    /// (and above the bounded threshold).
    pub fn of(slope: f64, predicted: f64) -> Self {
        if slope <= BOUNDED_SLOPE {
            Classification::Bounded
        } else if slope >= predicted - UNBOUNDED_MARGIN {
            Classification::Unbounded
        } else {
            Classification::Inconclusive
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pairs: ExponentPair,
    /// Slope of the per-prime maximum over every `j` and extremizer.
    pub slope: f64,
    pub max_ratio: f64,
    /// Region membership for averaging sweeps, `p >= d/(d-1)` for maximal.
    pub region_membership: bool,
    /// Largest growth rate predicted for the extremizers that were run.
    #[serde(with = "crate::operators::rational_str")]
    pub predicted_exponent: Rational,
    pub classification: Classification,
    pub matches_theory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCheck {
    pub q: u32,
    pub d: usize,
    pub j: Elem,
    pub closed_form_residual: f64,
    pub decay_max: f64,
    pub normalized_constant: f64,
    pub decay_bound: f64,
    pub decomposition_residual: f64,
    pub omega_sup: f64,
    pub omega_sup_over_q: f64,
    pub omega_sup_bound: f64,
    pub multiplier_norm: f64,
    /// `||(1_{N_k})^||_{L^((d+1)/2)}` for `k = 1..=d`.
    pub nk_hat_norms: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<RatioMeasurement>,
    pub fitted_slopes: Vec<FittedSlope>,
    pub verdicts: Vec<Verdict>,
    pub fourier_checks: Vec<FourierCheck>,
    pub check_failures: Vec<BoundViolation>,
}

impl SweepReport {
    fn empty(config: SweepConfig) -> Self {
        SweepReport {
            config,
            rows: Vec::new(),
            fitted_slopes: Vec::new(),
            verdicts: Vec::new(),
            fourier_checks: Vec::new(),
            check_failures: Vec::new(),
        }
    }

    /// 0 when nothing failed and every verdict matches, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.check_failures.is_empty() && self.verdicts.iter().all(|v| v.matches_theory) {
            0
        } else {
            1
        }
    }
}

/// Least squares of `log ratio` against `log q`; returns
/// `(slope, intercept, rms residual)`.
pub fn fit_slope(points: &[(u32, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!(
            "{} points, need at least {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    if let Some(&(q, r)) = points.iter().find(|&&(_, r)| !(r > 0.0 && r.is_finite())) {
        return Err(Error::DegenerateFit(format!("ratio {r} at q = {q}")));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(q, r)| ((q as f64).ln(), r.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all primes are equal".into()));
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok((slope, intercept, (sse / n).sqrt()))
}

/// Per-prime maxima of `value` over the selected entries, in prime order.
fn per_prime_max<T>(primes: &[u32], items: &[T], q_of: impl Fn(&T) -> u32, value: impl Fn(&T) -> Option<f64>) -> Vec<(u32, f64)> {
    primes
        .iter()
        .filter_map(|&q| {
            items
                .iter()
                .filter(|t| q_of(t) == q)
                .filter_map(&value)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
                .map(|m| (q, m))
        })
        .collect()
}

fn fitted(quantity: &str, pairs: Option<ExponentPair>, extremizer: &str, points: &[(u32, f64)]) -> Result<FittedSlope> {
    let (slope, intercept, residual) = fit_slope(points)?;
    Ok(FittedSlope {
        quantity: quantity.into(),
        pairs,
        extremizer: extremizer.into(),
        slope,
        intercept,
        residual,
        max_value: points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    })
}

fn violation(check: &str, q: u32, d: usize, j: Option<Elem>, value: f64, bound: f64) -> BoundViolation {
    BoundViolation {
        check: check.into(),
        q,
        d,
        j,
        value,
        bound,
    }
}

fn exceeds(value: f64, bound: f64, tol: Tolerances) -> bool {
    value.is_nan() || value > bound * (1.0 + tol.rel) + tol.abs
}

/// Runs the exact-formula, decay, decomposition, `Omega_j` and `N_k` checks
/// for every prime and `j`; pairs and extremizers are ignored.
pub fn run_verify_fourier(mut config: SweepConfig) -> Result<SweepReport> {
    let ctxs = config.validate()?;
    let d = config.d;
    let tol = config.tolerances;
    let mut tasks = Vec::new();
    for ctx in &ctxs {
        let js = match config.mode {
            SweepMode::Maximal => (1..ctx.q()).collect(),
            _ => config.js(ctx.q()),
        };
        tasks.extend(js.into_iter().map(|j| (Arc::clone(ctx), j)));
    }
    let critical = Exponent::from_value(Rational::new(d as i64 + 1, 2))?;
    let nk: Vec<Result<(Vec<f64>, Vec<BoundViolation>)>> = par::map_slice(&ctxs, |ctx| {
        let mut values = Vec::with_capacity(d);
        let mut fails = Vec::new();
        for k in 1..=d {
            match nk_hat_norm(ctx, d, k, critical, tol) {
                Ok(v) => values.push(v),
                Err(Error::BoundViolation(v)) => {
                    values.push(v.value);
                    fails.push(*v);
                }
                Err(e) => return Err(e),
            }
        }
        Ok((values, fails))
    });
    let nk = nk.into_iter().collect::<Result<Vec<_>>>()?;

    let results = par::map_slice(&tasks, |(ctx, j)| -> Result<(FourierCheck, Vec<BoundViolation>)> {
        let (q, j) = (ctx.q(), *j);
        let mut fails = Vec::new();
        let table = spectral_table(ctx, d, j)?;
        if exceeds(table.closed_form_residual, 0.0, Tolerances { abs: tol.abs, rel: 0.0 }) {
            fails.push(violation("closed_form", q, d, Some(j), table.closed_form_residual, tol.abs));
        }
        let normalized_constant = match decay_certificate(&table, tol) {
            Ok(c) => c.normalized_constant,
            Err(Error::BoundViolation(v)) => {
                fails.push(*v);
                table.decay_max * (q as f64).powf((d as f64 - 1.0) / 2.0)
            }
            Err(e) => return Err(e),
        };
        let dec = decompose(ctx, d, j)?;
        if exceeds(dec.residual, 0.0, Tolerances { abs: tol.abs * q as f64, rel: 0.0 }) {
            fails.push(violation("decomposition", q, d, Some(j), dec.residual, tol.abs * q as f64));
        }
        let sup = match omega_sup(&dec, tol) {
            Ok(v) => v,
            Err(Error::BoundViolation(v)) => {
                fails.push(*v);
                dec.omega.max_abs()
            }
            Err(e) => return Err(e),
        };
        let multiplier_norm = omega_multiplier_norm(&dec);
        if (multiplier_norm - table.decay_max).abs() > tol.abs + tol.rel * table.decay_max {
            fails.push(violation(
                "omega_multiplier",
                q,
                d,
                Some(j),
                multiplier_norm,
                table.decay_max,
            ));
        }
        let idx = ctxs.iter().position(|c| c.q() == q).expect("prime in config");
        let nk_hat_norms = nk[idx].0.clone();
        Ok((
            FourierCheck {
                q,
                d,
                j,
                closed_form_residual: table.closed_form_residual,
                decay_max: table.decay_max,
                normalized_constant,
                decay_bound: decay_bound(q, d),
                decomposition_residual: dec.residual,
                omega_sup: sup,
                omega_sup_over_q: sup / q as f64,
                omega_sup_bound: omega_sup_bound(q, d),
                multiplier_norm,
                nk_hat_norms,
            },
            fails,
        ))
    });

    let mut report = SweepReport::empty(config);
    for r in results {
        let (check, fails) = r?;
        report.fourier_checks.push(check);
        report.check_failures.extend(fails);
    }
    for (_, fails) in nk {
        report.check_failures.extend(fails);
    }
    if report.config.primes.len() >= MIN_FIT_POINTS && d >= 2 {
        let pts = per_prime_max(&report.config.primes, &report.fourier_checks, |c| c.q, |c| Some(c.decay_max));
        report.fitted_slopes.push(fitted("decay_max", None, "all", &pts)?);
    }
    Ok(report)
}

/// Output of `T f` for one extremizer, reused across all exponent pairs.
struct Evaluated {
    tag: String,
    input: GridFunction,
    output: GridFunction,
    adjoint: bool,
}

fn evaluate_group(
    config: &SweepConfig,
    ctx: &Arc<FieldCtx>,
    j: Elem,
) -> Result<Vec<Evaluated>> {
    let d = config.d;
    let mut out = Vec::with_capacity(config.extremizers.len());
    match config.mode {
        SweepMode::Averaging { .. } => {
            let op = AveragingOperator::new(ctx, d, j)?;
            let mut adjoint_op = None;
            for spec in &config.extremizers {
                let (kind, adjoint) = match spec {
                    ExtremizerSpec::Fixed(k) => (*k, false),
                    ExtremizerSpec::VarietyIndicator => (ExtremizerKind::VarietyIndicator(j), false),
                    ExtremizerSpec::AdjointDeltaZero => (ExtremizerKind::DeltaZero, true),
                };
                let input = extremizer(ctx, d, kind)?;
                let output = if adjoint {
                    if adjoint_op.is_none() {
                        adjoint_op = Some(AveragingOperator::new(ctx, d, reflected_j(ctx, d, j))?);
                    }
                    adjoint_op.as_ref().expect("built above").apply(&input)?
                } else {
                    op.apply(&input)?
                };
                out.push(Evaluated {
                    tag: spec.tag(),
                    input,
                    output,
                    adjoint,
                });
            }
        }
        SweepMode::Maximal => {
            let op = MaximalOperator::new(ctx, d)?;
            for spec in &config.extremizers {
                let kind = match spec {
                    ExtremizerSpec::Fixed(k) => *k,
                    ExtremizerSpec::VarietyIndicator => ExtremizerKind::VarietyIndicator(1),
                    ExtremizerSpec::AdjointDeltaZero => {
                        return Err(Error::Config(format!("{ADJOINT_DELTA_TAG} applies to averaging sweeps only")))
                    }
                };
                let input = extremizer(ctx, d, kind)?;
                let output = op.apply(&input)?;
                out.push(Evaluated {
                    tag: spec.tag(),
                    input,
                    output,
                    adjoint: false,
                });
            }
        }
    }
    Ok(out)
}

/// `||T f||_r / ||f||_p` (or the dual-exponent ratio for adjoint rows).
fn row_ratio(e: &Evaluated, pr: ExponentPair) -> Result<f64> {
    let eff = if e.adjoint { pr.dual() } else { pr };
    let denom = lp_norm(&e.input, eff.p).value;
    if denom == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(lp_norm(&e.output, eff.r).value / denom)
}

/// Measures every `(q, j, extremizer, pair)` ratio, fits slopes per pair and
/// extremizer and classifies each pair.
///
/// Groups `(q, j)` are evaluated in parallel; rows are assembled in
/// `(q, j, extremizer, pair)` order, so output does not depend on scheduling.
pub fn run_sweep(mut config: SweepConfig) -> Result<SweepReport> {
    let ctxs = config.validate()?;
    if config.pairs.is_empty() {
        return Err(Error::Config("at least one exponent pair is required".into()));
    }
    if config.extremizers.is_empty() {
        return Err(Error::Config("at least one extremizer is required".into()));
    }
    let d = config.d;
    let mode = config.mode.mode();
    let groups: Vec<(Arc<FieldCtx>, Elem)> = ctxs
        .iter()
        .flat_map(|ctx| config.js(ctx.q()).into_iter().map(move |j| (Arc::clone(ctx), j)))
        .collect();

    let results = par::map_slice(&groups, |(ctx, j)| -> Result<(Vec<RatioMeasurement>, Vec<BoundViolation>)> {
        let q = ctx.q();
        let j_field = (mode == Mode::Averaging).then_some(*j);
        let mut rows = Vec::new();
        let mut fails = Vec::new();
        // ||T f||_inf <= q^d / |Pi| ||f||_1 <= q^d / |Pi| ||f||_p for every T here.
        let trivial = (q as f64).powi(d as i32) / ((q - 1) as f64).powi(d as i32 - 1);
        for e in evaluate_group(&config, ctx, *j)? {
            for &pr in &config.pairs {
                let ratio = row_ratio(&e, pr)?;
                if exceeds(ratio, trivial, config.tolerances) {
                    fails.push(violation(&format!("trivial_bound({})", e.tag), q, d, j_field, ratio, trivial));
                }
                rows.push(RatioMeasurement {
                    q,
                    d,
                    mode,
                    j: j_field,
                    exponents: pr,
                    extremizer: e.tag.clone(),
                    ratio,
                });
            }
        }
        Ok((rows, fails))
    });

    let mut report = SweepReport::empty(config);
    for r in results {
        let (rows, fails) = r?;
        report.rows.extend(rows);
        report.check_failures.extend(fails);
    }
    if report.config.primes.len() < MIN_FIT_POINTS {
        return Ok(report);
    }

    let primes = report.config.primes.clone();
    for &pr in &report.config.pairs {
        for spec in &report.config.extremizers {
            let tag = spec.tag();
            let pts = per_prime_max(&primes, &report.rows, |r| r.q, |r| {
                (r.exponents == pr && r.extremizer == tag).then_some(r.ratio)
            });
            report.fitted_slopes.push(fitted("ratio", Some(pr), &tag, &pts)?);
        }
        let pts = per_prime_max(&primes, &report.rows, |r| r.q, |r| (r.exponents == pr).then_some(r.ratio));
        let all = fitted("ratio", Some(pr), "all", &pts)?;
        report.fitted_slopes.push(all.clone());
        report.verdicts.push(verdict(&report.config, pr, &all));
    }
    Ok(report)
}

fn verdict(config: &SweepConfig, pr: ExponentPair, fit: &FittedSlope) -> Verdict {
    let d = config.d;
    let growth = predicted_exponents(d, pr);
    let has = |s: ExtremizerSpec| config.extremizers.contains(&s);
    let delta = has(ExtremizerSpec::Fixed(ExtremizerKind::DeltaZero));
    let mut predicted = Rational::from_integer(0);
    let expected_bounded = match config.mode {
        SweepMode::Averaging { .. } => {
            if delta {
                predicted = predicted.max(growth.delta_growth);
            }
            if has(ExtremizerSpec::AdjointDeltaZero) {
                predicted = predicted.max(growth.adjoint_growth);
            }
            region_membership(d, pr)
        }
        SweepMode::Maximal => {
            if delta {
                predicted = predicted.max(growth.maximal_growth);
            }
            maximal_bounded(d, pr.p)
        }
    };
    let classification = Classification::of(fit.slope, ratio_f64(predicted));
    let matches_theory = if expected_bounded {
        classification == Classification::Bounded
    } else {
        classification == Classification::Unbounded
    };
    Verdict {
        pairs: pr,
        slope: fit.slope,
        max_ratio: fit.max_value,
        region_membership: expected_bounded,
        predicted_exponent: predicted,
        classification,
        matches_theory,
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "q", "d", "mode", "j", "p_num", "p_den", "r_num", "r_den", "extremizer", "ratio",
];

/// `x` rounded to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn fmt_sig12(x: f64) -> String {
    if x.is_finite() {
        format!("{}", round_sig12(x))
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig12(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// The report as pretty JSON with floats rounded to 12 significant digits.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// The ratio rows as CSV; infinite exponents are written as `1/0`.
pub fn render_csv(rows: &[RatioMeasurement]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let (pn, pd) = r.exponents.p.value_parts();
        let (rn, rd) = r.exponents.r.value_parts();
        w.write_record([
            r.q.to_string(),
            r.d.to_string(),
            r.mode.to_string(),
            r.j.map(|j| j.to_string()).unwrap_or_default(),
            pn.to_string(),
            pd.to_string(),
            rn.to_string(),
            rd.to_string(),
            r.extremizer.clone(),
            fmt_sig12(r.ratio),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_report(report: &SweepReport, format: Format) -> Result<String> {
    match format {
        Format::Json => render_json(report),
        Format::Csv => render_csv(&report.rows),
    }
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_report(report: &SweepReport, format: Format, path: Option<&Path>) -> Result<()> {
    let text = render_report(report, format)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
