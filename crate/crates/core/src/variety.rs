//! Product varieties `Pi_j = {x : x_1 x_2 ... x_d = j}`, their normalised
//! surface measures and the frequency classes `N_k = {m : l_m = k}`, where
//! `l_m` counts the zero coordinates of `m`.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Elem, FieldCtx};
use crate::grid::{self, GridFunction};

#[derive(Clone, Debug)]
pub struct VarietySupport {
    ctx: Arc<FieldCtx>,
    d: usize,
    j: Elem,
    /// Lexicographically sorted point indices.
    indices: Vec<usize>,
    label: String,
}

impl VarietySupport {
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn j(&self) -> Elem {
        self.j
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn points(&self) -> Vec<Vec<Elem>> {
        let q = self.ctx.q();
        self.indices
            .iter()
            .map(|&i| {
                let mut pt = vec![0; self.d];
                grid::decode(i, q, &mut pt);
                pt
            })
            .collect()
    }

    pub fn contains(&self, point: &[Elem]) -> bool {
        self.indices
            .binary_search(&grid::encode(point, self.ctx.q()))
            .is_ok()
    }

    pub fn indicator(&self) -> Result<GridFunction> {
        GridFunction::indicator(Arc::clone(&self.ctx), self.d, &self.indices)
    }
}

/// Product of the coordinates of `x` in `F_q`.
pub fn coordinate_product(ctx: &FieldCtx, x: &[Elem]) -> Elem {
    x.iter().fold(1, |acc, &v| ctx.mul(acc, v))
}

/// Enumerates `Pi_j` by choosing `x_1..x_{d-1}` among the units and solving for
/// `x_d`; there are exactly `(q-1)^(d-1)` points.
pub fn product_variety(ctx: &Arc<FieldCtx>, d: usize, j: Elem) -> Result<VarietySupport> {
    let q = ctx.q();
    grid::grid_size(q, d)?;
    let j = j % q;
    if j == 0 {
        return Err(Error::ZeroJ);
    }
    let units = (q - 1) as usize;
    let count = units.pow((d - 1) as u32);
    let mut head = vec![1 as Elem; d - 1];
    let mut indices = Vec::with_capacity(count);
    let mut point = vec![0; d];
    for mut t in 0..count {
        for slot in head.iter_mut().rev() {
            *slot = (t % units) as Elem + 1;
            t /= units;
        }
        let prod = coordinate_product(ctx, &head);
        point[..d - 1].copy_from_slice(&head);
        point[d - 1] = ctx.mul(j, ctx.inv(prod)?);
        indices.push(grid::encode(&point, q));
    }
    indices.sort_unstable();
    Ok(VarietySupport {
        ctx: Arc::clone(ctx),
        d,
        j,
        indices,
        label: format!("Pi_{j}"),
    })
}

/// Normalised surface measure stored as a density `q^d / |V|` on `V`, so that
/// `convolve(f, density)(x) = |V|^-1 sum_{y in V} f(x - y)`.
#[derive(Clone, Debug)]
pub struct Measure {
    pub density: GridFunction,
    pub support: VarietySupport,
}

pub fn surface_measure(v: &VarietySupport) -> Result<Measure> {
    if v.is_empty() {
        return Err(Error::EmptyVariety);
    }
    let mut values = GridFunction::zeros(Arc::clone(&v.ctx), v.d)?.into_values();
    let weight = values.len() as f64 / v.len() as f64;
    for &i in &v.indices {
        values[i] = Complex64::new(weight, 0.0);
    }
    Ok(Measure {
        density: GridFunction::new(Arc::clone(&v.ctx), v.d, values)?,
        support: v.clone(),
    })
}

/// `l_m`: the number of zero coordinates.
pub fn zero_count(m: &[Elem]) -> usize {
    m.iter().filter(|&&x| x == 0).count()
}

/// Frequency-side indicator of `N_k`.
pub fn zero_pattern_indicator(ctx: &Arc<FieldCtx>, d: usize, k: usize) -> Result<GridFunction> {
    if k > d {
        return Err(Error::BadK { k, d });
    }
    GridFunction::from_fn(Arc::clone(ctx), d, |m| {
        if zero_count(m) == k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// `|N_k| = C(d, k) (q-1)^(d-k)`.
pub fn zero_pattern_count(q: u32, d: usize, k: usize) -> u64 {
    binomial(d, k) * ((q - 1) as u64).pow((d - k) as u32)
}

/// `j'` with `-Pi_j = Pi_j'`, namely `(-1)^d j`.
pub fn reflected_j(ctx: &FieldCtx, d: usize, j: Elem) -> Elem {
    if d.is_multiple_of(2) {
        j
    } else {
        ctx.neg(j)
    }
}

/// Indicator of `(F_q^*)^d`, the disjoint union of all `Pi_j`.
pub fn unit_torus_indicator(ctx: &Arc<FieldCtx>, d: usize) -> Result<GridFunction> {
    zero_pattern_indicator(ctx, d, 0)
}
