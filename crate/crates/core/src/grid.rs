//! Dense complex-valued functions on `F_q^d`.
//!
//! Points are stored lexicographically: `x <-> sum_i x_i q^(d-1-i)`. The same
//! index set carries both space-side functions (`f`, densities, kernels) and
//! frequency-side functions (`f^vee`, indicators of `N_k`).
//!
//! Two transforms are provided, matching the conventions used throughout:
//!
//! * `vee`: `f^vee(m) = q^-d sum_x f(x) chi(m.x)` (space to frequency),
//! * `hat`: `F^(x) = sum_m F(m) chi(-m.x)` (frequency to space),
//!
//! so that `(F^)^vee = F`, `||f||_L2 = ||f^vee||_l2` and
//! `(f * g)^vee = f^vee g^vee` for the normalised convolution.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::field::{Elem, FieldCtx};
use crate::par;

/// Largest number of grid points accepted.
pub const MAX_POINTS: usize = 1 << 21;

/// Number of points `q^d`, or `GridTooLarge` when it exceeds [`MAX_POINTS`].
pub fn grid_size(q: u32, d: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut n: usize = 1;
    for _ in 0..d {
        n = n
            .checked_mul(q as usize)
            .filter(|&n| n <= MAX_POINTS)
            .ok_or(Error::GridTooLarge { q, d })?;
    }
    Ok(n)
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    ctx: Arc<FieldCtx>,
    d: usize,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(ctx: Arc<FieldCtx>, d: usize, values: Vec<Complex64>) -> Result<Self> {
        let n = grid_size(ctx.q(), d)?;
        if values.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GridFunction { ctx, d, values })
    }

    pub fn zeros(ctx: Arc<FieldCtx>, d: usize) -> Result<Self> {
        let n = grid_size(ctx.q(), d)?;
        Ok(GridFunction {
            ctx,
            d,
            values: vec![Complex64::new(0.0, 0.0); n],
        })
    }

    pub fn constant(ctx: Arc<FieldCtx>, d: usize, c: Complex64) -> Result<Self> {
        let n = grid_size(ctx.q(), d)?;
        Ok(GridFunction {
            ctx,
            d,
            values: vec![c; n],
        })
    }

    /// Builds a function by evaluating `f` at every point.
    pub fn from_fn<F>(ctx: Arc<FieldCtx>, d: usize, f: F) -> Result<Self>
    where
        F: Fn(&[Elem]) -> Complex64 + Sync + Send,
    {
        let n = grid_size(ctx.q(), d)?;
        let q = ctx.q();
        let values = par::map_range(n, |idx| {
            let mut pt = vec![0; d];
            decode(idx, q, &mut pt);
            f(&pt)
        });
        GridFunction::new(ctx, d, values)
    }

    /// Indicator of a set of point indices.
    pub fn indicator(ctx: Arc<FieldCtx>, d: usize, indices: &[usize]) -> Result<Self> {
        let mut g = GridFunction::zeros(ctx, d)?;
        for &i in indices {
            g.values[i] = Complex64::new(1.0, 0.0);
        }
        Ok(g)
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn q(&self) -> u32 {
        self.ctx.q()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> Complex64 {
        self.values[idx]
    }

    pub fn at(&self, point: &[Elem]) -> Complex64 {
        self.values[self.index_of(point)]
    }

    pub fn index_of(&self, point: &[Elem]) -> usize {
        encode(point, self.q())
    }

    pub fn point_of(&self, idx: usize) -> Vec<Elem> {
        let mut pt = vec![0; self.d];
        decode(idx, self.q(), &mut pt);
        pt
    }

    pub fn same_shape(&self, other: &GridFunction) -> bool {
        self.q() == other.q() && self.d == other.d
    }

    fn require_same_shape(&self, other: &GridFunction) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "(q={}, d={}) vs (q={}, d={})",
                self.q(),
                self.d,
                other.q(),
                other.d
            )))
        }
    }

    fn with_values(&self, values: Vec<Complex64>) -> GridFunction {
        GridFunction {
            ctx: Arc::clone(&self.ctx),
            d: self.d,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        self.require_same_shape(other)?;
        Ok(self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| v * c)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn conj(&self) -> GridFunction {
        self.map(|v| v.conj())
    }

    pub fn abs(&self) -> GridFunction {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    /// `x -> f(x - a)`.
    pub fn translate(&self, a: &[Elem]) -> GridFunction {
        let ctx = &self.ctx;
        let q = ctx.q();
        let d = self.d;
        let values = par::map_range(self.len(), |idx| {
            let mut pt = vec![0; d];
            decode(idx, q, &mut pt);
            for (x, &s) in pt.iter_mut().zip(a) {
                *x = ctx.sub(*x, s);
            }
            self.values[encode(&pt, q)]
        });
        self.with_values(values)
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> GridFunction {
        let q = self.q();
        let d = self.d;
        let values = par::map_range(self.len(), |idx| {
            let mut pt = vec![0; d];
            decode(idx, q, &mut pt);
            for x in pt.iter_mut() {
                *x = self.ctx.neg(*x);
            }
            self.values[encode(&pt, q)]
        });
        self.with_values(values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.require_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Unnormalised pairing `sum_x f(x) conj(g(x))`.
    pub fn dot(&self, other: &GridFunction) -> Result<Complex64> {
        self.require_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum())
    }
}

/// Lexicographic index of a point.
#[inline]
pub fn encode(point: &[Elem], q: u32) -> usize {
    point
        .iter()
        .fold(0usize, |acc, &x| acc * q as usize + x as usize)
}

/// Writes the coordinates of `idx` into `out` (length `d`).
#[inline]
pub fn decode(mut idx: usize, q: u32, out: &mut [Elem]) {
    let q = q as usize;
    for slot in out.iter_mut().rev() {
        *slot = (idx % q) as Elem;
        idx /= q;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Normalised counting measure `q^-d sum_x`.
    Space,
    /// Plain counting measure `sum_m`.
    Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub exponent: Exponent,
    pub side: Side,
}

fn power_sum(values: &[Complex64], s: Exponent) -> f64 {
    let sf = s.value_f64();
    if sf == 1.0 {
        values.iter().map(|v| v.norm()).sum()
    } else if sf == 2.0 {
        values.iter().map(|v| v.norm_sqr()).sum()
    } else {
        values.iter().map(|v| v.norm().powf(sf)).sum()
    }
}

/// `(q^-d sum_x |f(x)|^s)^(1/s)`, or `max |f|` for `s = inf`.
pub fn lp_norm(f: &GridFunction, s: Exponent) -> NormValue {
    let value = if s.is_infinite() {
        f.max_abs()
    } else {
        let mean = power_sum(&f.values, s) / f.len() as f64;
        mean.powf(s.inv_f64())
    };
    NormValue {
        value,
        exponent: s,
        side: Side::Space,
    }
}

/// `(sum_m |F(m)|^s)^(1/s)` with no normalisation, or `max |F|` for `s = inf`.
pub fn counting_norm(f: &GridFunction, s: Exponent) -> NormValue {
    let value = if s.is_infinite() {
        f.max_abs()
    } else {
        power_sum(&f.values, s).powf(s.inv_f64())
    };
    NormValue {
        value,
        exponent: s,
        side: Side::Frequency,
    }
}

/// One 1-D character sum along `axis` for every point.
///
/// `sign = +1` computes `sum_t v(..t..) chi(m_axis t)`, `-1` uses `chi(-m t)`.
fn axis_pass(ctx: &FieldCtx, d: usize, input: &[Complex64], axis: usize, sign: i32) -> Vec<Complex64> {
    let q = ctx.q() as usize;
    let stride = q.pow((d - 1 - axis) as u32);
    let roots = ctx.roots();
    par::map_range(input.len(), |idx| {
        let c = (idx / stride) % q;
        let base = idx - c * stride;
        let step = if sign > 0 { c } else { (q - c) % q };
        let mut k = 0usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..q {
            acc += input[base + t * stride] * roots[k];
            k += step;
            if k >= q {
                k -= q;
            }
        }
        acc
    })
}

/// `f^vee(m) = q^-d sum_x f(x) chi(m.x)`, computed as `d` passes of 1-D sums.
pub fn vee_transform(f: &GridFunction) -> GridFunction {
    let mut values = f.values.clone();
    for axis in 0..f.d {
        values = axis_pass(&f.ctx, f.d, &values, axis, 1);
    }
    let norm = 1.0 / f.len() as f64;
    values.iter_mut().for_each(|v| *v *= norm);
    f.with_values(values)
}

/// `F^(x) = sum_m F(m) chi(-m.x)`; the inverse of [`vee_transform`].
pub fn hat_transform(f: &GridFunction) -> GridFunction {
    let mut values = f.values.clone();
    for axis in 0..f.d {
        values = axis_pass(&f.ctx, f.d, &values, axis, -1);
    }
    f.with_values(values)
}

/// Normalised convolution `(f * g)(x) = q^-d sum_y f(x - y) g(y)` via the
/// convolution theorem.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.require_same_shape(g)?;
    let spectrum = vee_transform(f).mul(&vee_transform(g))?;
    Ok(hat_transform(&spectrum))
}

/// Convolution with a kernel whose `vee` spectrum is already known.
pub fn convolve_with_spectrum(f: &GridFunction, kernel_vee: &GridFunction) -> Result<GridFunction> {
    let spectrum = vee_transform(f).mul(kernel_vee)?;
    Ok(hat_transform(&spectrum))
}

/// Direct `O(q^(2d))` convolution; the reference for [`convolve`].
pub fn convolve_direct(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    f.require_same_shape(g)?;
    let q = f.q();
    let d = f.d;
    let ctx = &f.ctx;
    let support: Vec<(Vec<Elem>, Complex64)> = (0..g.len())
        .filter(|&i| g.values[i] != Complex64::new(0.0, 0.0))
        .map(|i| (g.point_of(i), g.values[i]))
        .collect();
    let norm = 1.0 / f.len() as f64;
    let values = par::map_range(f.len(), |idx| {
        let mut x = vec![0; d];
        decode(idx, q, &mut x);
        let mut diff = vec![0; d];
        let mut acc = Complex64::new(0.0, 0.0);
        for (y, gy) in &support {
            for k in 0..d {
                diff[k] = ctx.sub(x[k], y[k]);
            }
            acc += f.values[encode(&diff, q)] * gy;
        }
        acc * norm
    });
    Ok(f.with_values(values))
}
