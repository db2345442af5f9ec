//! Averaging operators `A_j f = f * dmu_j`, the maximal operator
//! `M f = sup_j |A_j f|`, test functions, `L^p -> L^r` ratios and the
//! boundedness region.

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponent::{Exponent, ExponentPair, Rational};
use crate::field::{Elem, FieldCtx};
use crate::grid::{self, convolve_with_spectrum, hat_transform, lp_norm, vee_transform, GridFunction};
use crate::par;
use crate::variety::{
    coordinate_product, product_variety, reflected_j, surface_measure, unit_torus_indicator,
    VarietySupport,
};

/// `f -> f * dmu_j` with the spectrum of `dmu_j` cached.
#[derive(Clone, Debug)]
pub struct AveragingOperator {
    support: VarietySupport,
    spectrum: GridFunction,
}

impl AveragingOperator {
    pub fn new(ctx: &Arc<FieldCtx>, d: usize, j: Elem) -> Result<Self> {
        let support = product_variety(ctx, d, j)?;
        let spectrum = vee_transform(&surface_measure(&support)?.density);
        Ok(AveragingOperator { support, spectrum })
    }

    pub fn j(&self) -> Elem {
        self.support.j()
    }

    pub fn support(&self) -> &VarietySupport {
        &self.support
    }

    /// `(dmu_j)^vee`.
    pub fn spectrum(&self) -> &GridFunction {
        &self.spectrum
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        convolve_with_spectrum(f, &self.spectrum)
    }
}

/// `A_j f` via the Fourier path.
pub fn average(f: &GridFunction, j: Elem) -> Result<GridFunction> {
    AveragingOperator::new(f.ctx(), f.d(), j)?.apply(f)
}

/// `A_j f(x) = |Pi_j|^-1 sum_{y in Pi_j} f(x - y)`, summed directly.
pub fn average_direct(f: &GridFunction, j: Elem) -> Result<GridFunction> {
    let ctx = f.ctx();
    let d = f.d();
    let q = ctx.q();
    let pts = product_variety(ctx, d, j)?.points();
    let inv = 1.0 / pts.len() as f64;
    GridFunction::from_fn(Arc::clone(ctx), d, |x| {
        let mut diff = vec![0; d];
        let s: Complex64 = pts
            .iter()
            .map(|y| {
                for k in 0..d {
                    diff[k] = ctx.sub(x[k], y[k]);
                }
                f.get(grid::encode(&diff, q))
            })
            .sum();
        s * inv
    })
}

/// `M f(x) = max_{j != 0} |A_j f(x)|`.
#[derive(Clone, Debug)]
pub struct MaximalOperator {
    ops: Vec<AveragingOperator>,
}

impl MaximalOperator {
    pub fn new(ctx: &Arc<FieldCtx>, d: usize) -> Result<Self> {
        let ops = (1..ctx.q())
            .map(|j| AveragingOperator::new(ctx, d, j))
            .collect::<Result<_>>()?;
        Ok(MaximalOperator { ops })
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let fv = vee_transform(f);
        let mut best = vec![0.0f64; f.len()];
        for op in &self.ops {
            let aj = hat_transform(&fv.mul(op.spectrum())?);
            for (b, v) in best.iter_mut().zip(aj.values()) {
                *b = b.max(v.norm());
            }
        }
        GridFunction::new(
            Arc::clone(f.ctx()),
            f.d(),
            best.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

pub fn maximal_average(f: &GridFunction) -> Result<GridFunction> {
    MaximalOperator::new(f.ctx(), f.d())?.apply(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Averaging,
    Maximal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Averaging => "averaging",
            Mode::Maximal => "maximal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Averaging(Elem),
    Maximal,
}

impl Target {
    pub fn mode(&self) -> Mode {
        match self {
            Target::Averaging(_) => Mode::Averaging,
            Target::Maximal => Mode::Maximal,
        }
    }

    pub fn j(&self) -> Option<Elem> {
        match self {
            Target::Averaging(j) => Some(*j),
            Target::Maximal => None,
        }
    }

    /// The exponents actually measured: the maximal operator is `L^p -> L^p`.
    pub fn effective_pair(&self, pr: ExponentPair) -> ExponentPair {
        match self {
            Target::Averaging(_) => pr,
            Target::Maximal => ExponentPair::diagonal(pr.p),
        }
    }
}

/// Named test functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtremizerKind {
    DeltaZero,
    VarietyIndicator(Elem),
    UnionIndicator,
    Constant,
    RandomSign(u64),
    RandomNonneg(u64),
}

impl ExtremizerKind {
    pub fn tag(&self) -> String {
        match self {
            ExtremizerKind::DeltaZero => "delta_zero".into(),
            ExtremizerKind::VarietyIndicator(j) => format!("variety_indicator_{j}"),
            ExtremizerKind::UnionIndicator => "union_indicator".into(),
            ExtremizerKind::Constant => "constant".into(),
            ExtremizerKind::RandomSign(s) => format!("random_sign_{s}"),
            ExtremizerKind::RandomNonneg(s) => format!("random_nonneg_{s}"),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        !matches!(self, ExtremizerKind::RandomSign(_))
    }
}

impl fmt::Display for ExtremizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for ExtremizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |rest: &str| rest.parse::<u64>().map_err(|_| Error::BadKind(s.to_string()));
        match s {
            "delta_zero" => Ok(ExtremizerKind::DeltaZero),
            "union_indicator" => Ok(ExtremizerKind::UnionIndicator),
            "constant" => Ok(ExtremizerKind::Constant),
            _ => {
                if let Some(rest) = s.strip_prefix("variety_indicator_") {
                    Ok(ExtremizerKind::VarietyIndicator(num(rest)? as Elem))
                } else if let Some(rest) = s.strip_prefix("random_sign_") {
                    Ok(ExtremizerKind::RandomSign(num(rest)?))
                } else if let Some(rest) = s.strip_prefix("random_nonneg_") {
                    Ok(ExtremizerKind::RandomNonneg(num(rest)?))
                } else {
                    Err(Error::BadKind(s.to_string()))
                }
            }
        }
    }
}

pub fn extremizer(ctx: &Arc<FieldCtx>, d: usize, kind: ExtremizerKind) -> Result<GridFunction> {
    let n = grid::grid_size(ctx.q(), d)?;
    let real = |v: Vec<f64>| {
        GridFunction::new(
            Arc::clone(ctx),
            d,
            v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
        )
    };
    match kind {
        ExtremizerKind::DeltaZero => GridFunction::indicator(Arc::clone(ctx), d, &[0]),
        ExtremizerKind::VarietyIndicator(j) => product_variety(ctx, d, j)
            .map_err(|_| Error::BadKind(kind.tag()))?
            .indicator(),
        ExtremizerKind::UnionIndicator => unit_torus_indicator(ctx, d),
        ExtremizerKind::Constant => GridFunction::constant(Arc::clone(ctx), d, Complex64::new(1.0, 0.0)),
        ExtremizerKind::RandomSign(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            real((0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect())
        }
        ExtremizerKind::RandomNonneg(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            real((0..n).map(|_| rng.gen::<f64>()).collect())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioMeasurement {
    pub q: u32,
    pub d: usize,
    pub mode: Mode,
    pub j: Option<Elem>,
    pub exponents: ExponentPair,
    pub extremizer: String,
    pub ratio: f64,
}

/// `||f||_p` with a zero check.
fn input_norm(f: &GridFunction, p: Exponent) -> Result<f64> {
    let n = lp_norm(f, p).value;
    if n == 0.0 || f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(n)
}

/// `||T f||_r / ||f||_p` for `T = A_j` or `T = M` (with `r = p`).
pub fn ratio(f: &GridFunction, target: Target, pr: ExponentPair, tag: &str) -> Result<RatioMeasurement> {
    let pr = target.effective_pair(pr);
    let denom = input_norm(f, pr.p)?;
    let out = match target {
        Target::Averaging(j) => average(f, j)?,
        Target::Maximal => maximal_average(f)?,
    };
    Ok(measurement(f, target, pr, tag, lp_norm(&out, pr.r).value / denom))
}

fn measurement(f: &GridFunction, target: Target, pr: ExponentPair, tag: &str, ratio: f64) -> RatioMeasurement {
    RatioMeasurement {
        q: f.q(),
        d: f.d(),
        mode: target.mode(),
        j: target.j().map(|j| j % f.q()),
        exponents: pr,
        extremizer: tag.to_string(),
        ratio,
    }
}

/// Precomputed operator used for repeated ratio measurements.
#[derive(Clone, Debug)]
pub enum PreparedOperator {
    Averaging(AveragingOperator),
    Maximal(MaximalOperator),
}

impl PreparedOperator {
    pub fn new(ctx: &Arc<FieldCtx>, d: usize, target: Target) -> Result<Self> {
        Ok(match target {
            Target::Averaging(j) => PreparedOperator::Averaging(AveragingOperator::new(ctx, d, j)?),
            Target::Maximal => PreparedOperator::Maximal(MaximalOperator::new(ctx, d)?),
        })
    }

    pub fn target(&self) -> Target {
        match self {
            PreparedOperator::Averaging(op) => Target::Averaging(op.j()),
            PreparedOperator::Maximal(_) => Target::Maximal,
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            PreparedOperator::Averaging(op) => op.apply(f),
            PreparedOperator::Maximal(op) => op.apply(f),
        }
    }

    pub fn ratio(&self, f: &GridFunction, pr: ExponentPair, tag: &str) -> Result<RatioMeasurement> {
        let target = self.target();
        let pr = target.effective_pair(pr);
        let denom = input_norm(f, pr.p)?;
        let out = self.apply(f)?;
        Ok(measurement(f, target, pr, tag, lp_norm(&out, pr.r).value / denom))
    }
}

/// Tag used for the dual test: `delta_0` against the adjoint operator.
pub const ADJOINT_DELTA_TAG: &str = "adjoint_delta_zero";

/// `||A_j' delta_0||_{p'} / ||delta_0||_{r'}` with `j' = (-1)^d j`.
///
/// `A_j'` is the adjoint of `A_j` for the normalised pairing, so this is a
/// lower bound for the `L^p -> L^r` norm of `A_j`. The returned measurement
/// carries the original `(p, r)` and the averaging index `j`.
pub fn adjoint_delta_ratio(ctx: &Arc<FieldCtx>, d: usize, j: Elem, pr: ExponentPair) -> Result<RatioMeasurement> {
    let delta = extremizer(ctx, d, ExtremizerKind::DeltaZero)?;
    let jr = reflected_j(ctx, d, j % ctx.q());
    let mut m = ratio(&delta, Target::Averaging(jr), pr.dual(), ADJOINT_DELTA_TAG)?;
    m.exponents = pr;
    m.j = Some(j % ctx.q());
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub ratio: f64,
    pub extremizer: String,
}

/// Test functions tried by [`opnorm_lower_bound`] before the ascent phase.
pub fn extremizer_suite(ctx: &FieldCtx, d: usize, target: Target, seed: u64) -> Vec<ExtremizerKind> {
    let j = target.j().unwrap_or(1) % ctx.q();
    let j = if j == 0 { 1 } else { j };
    let mut suite = vec![
        ExtremizerKind::DeltaZero,
        ExtremizerKind::VarietyIndicator(j),
        ExtremizerKind::VarietyIndicator(reflected_j(ctx, d, j)),
        ExtremizerKind::UnionIndicator,
        ExtremizerKind::Constant,
    ];
    suite.extend((0..3).map(|k| ExtremizerKind::RandomSign(seed + k)));
    suite.extend((0..2).map(|k| ExtremizerKind::RandomNonneg(seed + k)));
    suite.dedup();
    suite
}

/// Lower bound for the operator norm: the best ratio over the extremizer
/// suite (plus the adjoint `delta_0` test for averaging operators), refined
/// by `budget` rounds of coordinate ascent over nonnegative functions.
///
/// Each round tries raising every coordinate by the current step and keeps
/// the strictly best candidate (lowest index on ties); a round without
/// improvement halves the step. The result never decreases with `budget`.
pub fn opnorm_lower_bound(
    ctx: &Arc<FieldCtx>,
    d: usize,
    target: Target,
    pr: ExponentPair,
    budget: usize,
    seed: u64,
) -> Result<LowerBound> {
    let pr = target.effective_pair(pr);
    let op = PreparedOperator::new(ctx, d, target)?;
    let mut best = LowerBound {
        ratio: f64::NEG_INFINITY,
        extremizer: String::new(),
    };
    let mut best_nonneg: Option<(f64, GridFunction, String)> = None;
    for kind in extremizer_suite(ctx, d, target, seed) {
        let f = extremizer(ctx, d, kind)?;
        let m = op.ratio(&f, pr, &kind.tag())?;
        if m.ratio > best.ratio {
            best = LowerBound {
                ratio: m.ratio,
                extremizer: m.extremizer.clone(),
            };
        }
        if kind.is_nonnegative() && best_nonneg.as_ref().is_none_or(|(r, _, _)| m.ratio > *r) {
            best_nonneg = Some((m.ratio, f, m.extremizer));
        }
    }
    if let Target::Averaging(j) = target {
        let m = adjoint_delta_ratio(ctx, d, j, pr)?;
        if m.ratio > best.ratio {
            best = LowerBound {
                ratio: m.ratio,
                extremizer: m.extremizer,
            };
        }
    }

    if budget > 0 {
        let (start_ratio, start, tag) = best_nonneg.expect("suite has nonnegative members");
        let mut ascent = Ascent::new(ctx, d, target, pr, &start)?;
        debug_assert!((ascent.ratio() - start_ratio).abs() <= 1e-9 * start_ratio.max(1.0));
        let improved = ascent.run(budget);
        if improved && ascent.ratio() > best.ratio {
            best = LowerBound {
                ratio: ascent.ratio(),
                extremizer: format!("ascent({tag})"),
            };
        }
    }
    Ok(best)
}

/// Coordinate ascent state for a nonnegative real input.
struct Ascent {
    q: u32,
    d: usize,
    pr: ExponentPair,
    /// Torus points `y` with their variety index `prod(y)`, restricted to
    /// `Pi_j` for a single averaging operator.
    offsets: Vec<(Vec<Elem>, usize)>,
    maximal: bool,
    inv_card: f64,
    f: Vec<f64>,
    /// `A_j f` for every tracked `j` (one row for a single operator).
    averages: Vec<Vec<f64>>,
    out: Vec<f64>,
    in_sum: f64,
    out_sum: f64,
    ctx: Arc<FieldCtx>,
}

impl Ascent {
    fn new(ctx: &Arc<FieldCtx>, d: usize, target: Target, pr: ExponentPair, start: &GridFunction) -> Result<Self> {
        let q = ctx.q();
        let f: Vec<f64> = start.values().iter().map(|v| v.re.max(0.0)).collect();
        let start = GridFunction::new(
            Arc::clone(ctx),
            d,
            f.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )?;
        let (offsets, averages, maximal) = match target {
            Target::Averaging(j) => {
                let op = AveragingOperator::new(ctx, d, j)?;
                let offsets = op.support().points().into_iter().map(|y| (y, 0)).collect();
                let avg = op.apply(&start)?.values().iter().map(|v| v.re).collect();
                (offsets, vec![avg], false)
            }
            Target::Maximal => {
                let torus = unit_torus_indicator(ctx, d)?;
                let offsets = (0..torus.len())
                    .filter(|&i| torus.get(i).re == 1.0)
                    .map(|i| {
                        let y = torus.point_of(i);
                        let jy = coordinate_product(ctx, &y) as usize - 1;
                        (y, jy)
                    })
                    .collect();
                let avgs = (1..q)
                    .map(|j| {
                        Ok(AveragingOperator::new(ctx, d, j)?
                            .apply(&start)?
                            .values()
                            .iter()
                            .map(|v| v.re)
                            .collect())
                    })
                    .collect::<Result<Vec<Vec<f64>>>>()?;
                (offsets, avgs, true)
            }
        };
        let inv_card = 1.0 / ((q - 1) as f64).powi(d as i32 - 1);
        let mut a = Ascent {
            q,
            d,
            pr,
            offsets,
            maximal,
            inv_card,
            f,
            averages,
            out: Vec::new(),
            in_sum: 0.0,
            out_sum: 0.0,
            ctx: Arc::clone(ctx),
        };
        a.refresh();
        Ok(a)
    }

    fn refresh(&mut self) {
        self.out = if self.maximal {
            (0..self.f.len())
                .map(|x| self.averages.iter().map(|a| a[x]).fold(0.0, f64::max))
                .collect()
        } else {
            self.averages[0].clone()
        };
        self.in_sum = agg(&self.f, self.pr.p);
        self.out_sum = agg(&self.out, self.pr.r);
    }

    fn norm_from(&self, sum: f64, s: Exponent) -> f64 {
        if s.is_infinite() {
            sum
        } else {
            (sum / self.f.len() as f64).powf(s.inv_f64())
        }
    }

    fn ratio(&self) -> f64 {
        self.norm_from(self.out_sum, self.pr.r) / self.norm_from(self.in_sum, self.pr.p)
    }

    fn affected(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut base = vec![0; self.d];
        grid::decode(i, self.q, &mut base);
        let ctx = &self.ctx;
        let q = self.q;
        self.offsets.iter().map(move |(y, jy)| {
            let x: Vec<Elem> = base.iter().zip(y).map(|(&b, &c)| ctx.add(b, c)).collect();
            (grid::encode(&x, q), *jy)
        })
    }

    fn candidate_ratio(&self, i: usize, h: f64) -> f64 {
        let inc = h * self.inv_card;
        let in_sum = bump(self.in_sum, self.f[i], self.f[i] + h, self.pr.p);
        let mut out_sum = self.out_sum;
        for (x, jy) in self.affected(i) {
            let old = self.out[x];
            let new = if self.maximal {
                old.max(self.averages[jy][x] + inc)
            } else {
                old + inc
            };
            out_sum = bump(out_sum, old, new, self.pr.r);
        }
        self.norm_from(out_sum, self.pr.r) / self.norm_from(in_sum, self.pr.p)
    }

    fn accept(&mut self, i: usize, h: f64) {
        let inc = h * self.inv_card;
        let updates: Vec<(usize, usize)> = self.affected(i).collect();
        for (x, jy) in updates {
            let row = if self.maximal { jy } else { 0 };
            self.averages[row][x] += inc;
        }
        self.f[i] += h;
        self.refresh();
    }

    /// Runs `budget` rounds; returns whether any step was accepted.
    fn run(&mut self, budget: usize) -> bool {
        let mut step = self.f.iter().cloned().fold(0.0, f64::max);
        if step == 0.0 {
            step = 1.0;
        }
        let mut improved = false;
        for _ in 0..budget {
            let current = self.ratio();
            let scores = par::map_range(self.f.len(), |i| self.candidate_ratio(i, step));
            let mut pick: Option<(usize, f64)> = None;
            for (i, &r) in scores.iter().enumerate() {
                if r > current * (1.0 + 1e-12) && pick.is_none_or(|(_, b)| r > b) {
                    pick = Some((i, r));
                }
            }
            match pick {
                Some((i, _)) => {
                    self.accept(i, step);
                    improved = true;
                }
                None => step *= 0.5,
            }
        }
        improved
    }
}

/// `sum |v|^s`, or `max |v|` for `s = inf`.
fn agg(v: &[f64], s: Exponent) -> f64 {
    if s.is_infinite() {
        v.iter().cloned().fold(0.0, f64::max)
    } else {
        let sf = s.value_f64();
        v.iter().map(|x| x.abs().powf(sf)).sum()
    }
}

/// Updates an aggregate when one entry moves from `old` to `new >= old`.
fn bump(sum: f64, old: f64, new: f64, s: Exponent) -> f64 {
    if s.is_infinite() {
        sum.max(new)
    } else {
        let sf = s.value_f64();
        sum - old.powf(sf) + new.powf(sf)
    }
}

/// Vertices of the boundedness region, counter-clockwise.
pub fn region_vertices(d: usize) -> [(Rational, Rational); 4] {
    let d = d as i64;
    [
        (Rational::zero(), Rational::zero()),
        (Rational::new(d, d + 1), Rational::new(1, d + 1)),
        (Rational::one(), Rational::one()),
        (Rational::zero(), Rational::one()),
    ]
}

/// Whether `(1/p, 1/r)` satisfies both necessary conditions
/// `1/r >= d/p - d + 1` and `1/r >= 1/(d p)`, in exact arithmetic.
pub fn region_membership(d: usize, pr: ExponentPair) -> bool {
    let dd = Rational::from_integer(d as i64);
    let (ip, ir) = (pr.inv_p(), pr.inv_r());
    ir >= dd * ip - dd + Rational::one() && ir >= ip / dd
}

/// Whether the maximal estimate is expected at `p`: `p >= d/(d-1)`, i.e.
/// `1/p <= (d-1)/d`.
pub fn maximal_bounded(d: usize, p: Exponent) -> bool {
    p.inv() <= Rational::new(d as i64 - 1, d as i64)
}

/// Predicted `log q` growth rates of the `delta_0` ratios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedGrowth {
    /// `d/p - 1/r - d + 1`: single averaging operator.
    #[serde(with = "rational_str")]
    pub delta_growth: Rational,
    /// `d/p - d + 1`: maximal operator at `L^p -> L^p`.
    #[serde(with = "rational_str")]
    pub maximal_growth: Rational,
    /// `1/p - d/r`: the adjoint test at the dual exponents.
    #[serde(with = "rational_str")]
    pub adjoint_growth: Rational,
}

pub fn predicted_exponents(d: usize, pr: ExponentPair) -> PredictedGrowth {
    let dd = Rational::from_integer(d as i64);
    let one = Rational::one();
    let (ip, ir) = (pr.inv_p(), pr.inv_r());
    PredictedGrowth {
        delta_growth: dd * ip - ir - dd + one,
        maximal_growth: dd * ip - dd + one,
        adjoint_growth: ip - dd * ir,
    }
}

pub(crate) mod rational_str {
    use crate::exponent::{parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::ratio_f64;
    use crate::grid::lp_norm;

    fn ctx(q: u64) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(q).unwrap())
    }

    fn pair(a: i64, b: i64, c: i64, e: i64) -> ExponentPair {
        ExponentPair::inv_parts(a, b, c, e).unwrap()
    }

    #[test]
    fn average_of_delta_is_normalised_indicator() {
        for (q, d, j) in [(3u64, 2usize, 1u32), (5, 2, 2), (5, 3, 4)] {
            let k = ctx(q);
            let delta = extremizer(&k, d, ExtremizerKind::DeltaZero).unwrap();
            let out = average(&delta, j).unwrap();
            let v = product_variety(&k, d, j).unwrap();
            let want = v.indicator().unwrap().scale(1.0 / v.len() as f64);
            assert!(out.max_abs_diff(&want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn average_fourier_matches_direct() {
        let k = ctx(5);
        for seed in 0..4 {
            let f = extremizer(&k, 2, ExtremizerKind::RandomSign(seed)).unwrap();
            for j in 1..5 {
                let a = average(&f, j).unwrap();
                let b = average_direct(&f, j).unwrap();
                assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
            }
        }
        let f = extremizer(&k, 3, ExtremizerKind::RandomNonneg(9)).unwrap();
        assert!(average(&f, 3).unwrap().max_abs_diff(&average_direct(&f, 3).unwrap()).unwrap() < 1e-12);
        assert!(matches!(average(&f, 0), Err(Error::ZeroJ)));
    }

    #[test]
    fn constants_are_fixed() {
        let k = ctx(7);
        let c = GridFunction::constant(Arc::clone(&k), 2, Complex64::new(2.5, 0.0)).unwrap();
        let a = average(&c, 3).unwrap();
        assert!(a.values().iter().all(|v| (v - Complex64::new(2.5, 0.0)).norm() < 1e-12));
        let one = extremizer(&k, 2, ExtremizerKind::Constant).unwrap();
        let m = maximal_average(&one).unwrap();
        assert!(m.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn maximal_of_delta_small_case() {
        let k = ctx(3);
        let delta = extremizer(&k, 2, ExtremizerKind::DeltaZero).unwrap();
        let m = maximal_average(&delta).unwrap();
        let want = unit_torus_indicator(&k, 2).unwrap().scale(0.5);
        assert!(m.max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn maximal_dominates_each_average() {
        let k = ctx(5);
        let f = extremizer(&k, 2, ExtremizerKind::RandomSign(4)).unwrap();
        let m = maximal_average(&f).unwrap();
        for j in 1..5 {
            let a = average(&f, j).unwrap();
            for (mv, av) in m.values().iter().zip(a.values()) {
                assert!(mv.re + 1e-12 >= av.norm());
            }
        }
        assert!(m.max_imag() == 0.0);
    }

    #[test]
    fn extremizer_examples() {
        let k = ctx(3);
        let d = extremizer(&k, 2, ExtremizerKind::DeltaZero).unwrap();
        assert_eq!(d.get(0).re, 1.0);
        assert_eq!(d.values().iter().filter(|v| v.re != 0.0).count(), 1);
        let u = extremizer(&k, 2, ExtremizerKind::UnionIndicator).unwrap();
        let on: Vec<Vec<Elem>> = (0..9).filter(|&i| u.get(i).re == 1.0).map(|i| u.point_of(i)).collect();
        assert_eq!(on, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let a = extremizer(&k, 2, ExtremizerKind::RandomSign(5)).unwrap();
        let b = extremizer(&k, 2, ExtremizerKind::RandomSign(5)).unwrap();
        assert!(a.values().iter().all(|v| v.re.abs() == 1.0 && v.im == 0.0));
        assert_eq!(a.values(), b.values());
        assert!(extremizer(&k, 2, ExtremizerKind::VarietyIndicator(0)).is_err());
        assert!("bogus".parse::<ExtremizerKind>().is_err());
        for kind in [
            ExtremizerKind::DeltaZero,
            ExtremizerKind::VarietyIndicator(2),
            ExtremizerKind::RandomNonneg(11),
        ] {
            assert_eq!(kind.tag().parse::<ExtremizerKind>().unwrap(), kind);
        }
    }

    #[test]
    fn ratio_examples() {
        let k = ctx(3);
        let delta = extremizer(&k, 2, ExtremizerKind::DeltaZero).unwrap();
        let p2 = ExponentPair::diagonal(Exponent::integer(2).unwrap());
        let m = ratio(&delta, Target::Maximal, p2, "delta_zero").unwrap();
        assert!((m.ratio - 1.0).abs() < 1e-12);
        assert_eq!(m.j, None);

        let one = extremizer(&k, 2, ExtremizerKind::Constant).unwrap();
        for pr in [pair(1, 2, 1, 3), pair(0, 1, 1, 1), pair(2, 3, 1, 3)] {
            assert!((ratio(&one, Target::Averaging(1), pr, "c").unwrap().ratio - 1.0).abs() < 1e-12);
        }

        let zero = GridFunction::zeros(Arc::clone(&k), 2).unwrap();
        assert!(matches!(ratio(&zero, Target::Averaging(1), p2, "z"), Err(Error::ZeroFunction)));
    }

    #[test]
    fn delta_ratio_closed_form() {
        // ratio = q^(d/p - d/r) |Pi|^(1/r - 1) for the single operator.
        for (q, d) in [(5u64, 2usize), (7, 3)] {
            let k = ctx(q);
            let delta = extremizer(&k, d, ExtremizerKind::DeltaZero).unwrap();
            for pr in [pair(2, 3, 1, 3), pair(1, 1, 1, 4), pair(1, 2, 1, 5), pair(3, 4, 1, 4)] {
                let got = ratio(&delta, Target::Averaging(2), pr, "delta_zero").unwrap().ratio;
                let (ip, ir) = (ratio_f64(pr.inv_p()), ratio_f64(pr.inv_r()));
                let card = ((q - 1) as f64).powi(d as i32 - 1);
                let want = (q as f64).powf(d as f64 * (ip - ir)) * card.powf(ir - 1.0);
                assert!((got - want).abs() <= 1e-9 * want);
            }
        }
    }

    #[test]
    fn positivity_and_translation() {
        let k = ctx(5);
        let f = extremizer(&k, 2, ExtremizerKind::RandomNonneg(1)).unwrap();
        assert!(average(&f, 2).unwrap().values().iter().all(|v| v.re >= -1e-12));
        assert!(maximal_average(&f).unwrap().values().iter().all(|v| v.re >= 0.0));
        let g = extremizer(&k, 2, ExtremizerKind::RandomSign(2)).unwrap();
        for a in [[1, 0], [3, 4], [2, 2]] {
            let lhs = average(&g.translate(&a), 3).unwrap();
            let rhs = average(&g, 3).unwrap().translate(&a);
            assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn adjoint_pairing() {
        for (q, d) in [(5u64, 2usize), (5, 3), (7, 3)] {
            let k = ctx(q);
            let f = extremizer(&k, d, ExtremizerKind::RandomSign(1)).unwrap();
            let g = extremizer(&k, d, ExtremizerKind::RandomNonneg(2)).unwrap();
            for j in 1..q as Elem {
                let lhs = average(&f, j).unwrap().dot(&g).unwrap();
                let rhs = f.dot(&average(&g, reflected_j(&k, d, j)).unwrap()).unwrap();
                assert!((lhs - rhs).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn region_examples() {
        for d in 1..6usize {
            let v = region_vertices(d)[1];
            let pr = ExponentPair::from_inv(v.0, v.1).unwrap();
            assert!(region_membership(d, pr));
            assert_eq!(predicted_exponents(d, pr).delta_growth, Rational::zero());
            assert!(!region_membership(d, pair(1, 1, 0, 1)));
        }
        assert!(region_membership(2, pair(1, 2, 1, 2)));
        assert!(region_membership(2, pair(1, 1, 1, 1)));
        assert!(region_membership(2, pair(0, 1, 0, 1)));
        assert!(!region_membership(2, pair(1, 1, 1, 4)));
        assert!(!region_membership(2, pair(1, 2, 0, 1)));
    }

    /// Point-in-convex-polygon by cross products in exact arithmetic.
    fn hull_oracle(d: usize, pr: ExponentPair) -> bool {
        let v = region_vertices(d);
        let (x, y) = (pr.inv_p(), pr.inv_r());
        (0..4).all(|i| {
            let (ax, ay) = v[i];
            let (bx, by) = v[(i + 1) % 4];
            (bx - ax) * (y - ay) - (by - ay) * (x - ax) >= Rational::zero()
        })
    }

    #[test]
    fn region_matches_hull_on_lattice() {
        for d in 1..5usize {
            for den in [12i64, 35, 60] {
                for a in 0..=den {
                    for b in 0..=den {
                        let pr = pair(a, den, b, den);
                        assert_eq!(region_membership(d, pr), hull_oracle(d, pr), "d={d} {a}/{den} {b}/{den}");
                    }
                }
            }
        }
    }

    #[test]
    fn predicted_growth_examples() {
        let p = Exponent::from_value(Rational::new(2, 1)).unwrap();
        assert_eq!(predicted_exponents(2, ExponentPair::diagonal(p)).maximal_growth, Rational::zero());
        let p3 = Exponent::from_value(Rational::new(3, 2)).unwrap();
        assert_eq!(predicted_exponents(3, ExponentPair::diagonal(p3)).maximal_growth, Rational::zero());
        assert_eq!(predicted_exponents(2, pair(1, 1, 1, 1)).delta_growth, Rational::zero());
        assert_eq!(predicted_exponents(2, pair(1, 1, 1, 4)).delta_growth, Rational::new(3, 4));
        assert_eq!(predicted_exponents(2, pair(1, 2, 0, 1)).adjoint_growth, Rational::new(1, 2));
        assert!(maximal_bounded(2, p));
        assert!(!maximal_bounded(2, Exponent::from_value(Rational::new(4, 3)).unwrap()));
    }

    #[test]
    fn lower_bounds_at_solvable_exponents() {
        let k = ctx(5);
        let tol = 1e-6;
        for d in [2usize, 3] {
            for j in [1u32, 3] {
                let l1 = opnorm_lower_bound(&k, d, Target::Averaging(j), pair(1, 1, 1, 1), 4, 0).unwrap();
                assert!((l1.ratio - 1.0).abs() <= tol, "{l1:?}");
                let linf = opnorm_lower_bound(&k, d, Target::Averaging(j), pair(0, 1, 0, 1), 4, 0).unwrap();
                assert!((linf.ratio - 1.0).abs() <= tol);
                let l2 = opnorm_lower_bound(&k, d, Target::Averaging(j), pair(1, 2, 1, 2), 4, 0).unwrap();
                assert!((l2.ratio - 1.0).abs() <= 1e-3 && l2.ratio <= 1.0 + tol);
            }
        }
    }

    #[test]
    fn ascent_is_monotone_in_budget() {
        let k = ctx(5);
        let pr = pair(3, 4, 1, 4);
        let mut last = 0.0;
        for budget in [0usize, 1, 3, 6] {
            let lb = opnorm_lower_bound(&k, 2, Target::Averaging(1), pr, budget, 0).unwrap();
            assert!(lb.ratio >= last);
            last = lb.ratio;
        }
        let again = opnorm_lower_bound(&k, 2, Target::Averaging(1), pr, 6, 0).unwrap();
        assert_eq!(again.ratio, last);

        let mut last = 0.0;
        for budget in [0usize, 2, 4] {
            let p = Exponent::from_value(Rational::new(4, 3)).unwrap();
            let lb = opnorm_lower_bound(&k, 2, Target::Maximal, ExponentPair::diagonal(p), budget, 0).unwrap();
            assert!(lb.ratio >= last);
            last = lb.ratio;
        }
    }

    #[test]
    fn ascent_incremental_ratio_is_exact() {
        let k = ctx(5);
        for target in [Target::Averaging(2), Target::Maximal] {
            let pr = target.effective_pair(pair(2, 3, 1, 3));
            let start = extremizer(&k, 2, ExtremizerKind::RandomNonneg(3)).unwrap();
            let mut a = Ascent::new(&k, 2, target, pr, &start).unwrap();
            a.run(3);
            let f = GridFunction::new(
                Arc::clone(&k),
                2,
                a.f.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            )
            .unwrap();
            let direct = ratio(&f, target, pr, "x").unwrap().ratio;
            assert!((direct - a.ratio()).abs() <= 1e-9 * direct, "{target:?} {direct} {}", a.ratio());
            assert!((lp_norm(&f, pr.p).value - a.norm_from(a.in_sum, pr.p)).abs() < 1e-9);
        }
    }
}
