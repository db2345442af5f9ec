//! Fourier analysis of the surface measure `dmu_j` on `Pi_j`.
//!
//! For a frequency `m` with `l_m >= 1` zero coordinates the transform is
//! exact: `(dmu_j)^vee(m) = (-1)^(d - l_m) (q-1)^-(d - l_m)`. On `N_0` it is a
//! normalised hyper-Kloosterman sum,
//! `(dmu_j)^vee(m) = Kl_d(j m_1...m_d) / (q-1)^(d-1)`, which obeys
//! `|Kl_d| <= d q^((d-1)/2)`.
//!
//! Splitting the spectrum along `N_0` and the `N_k`, `k >= 1`, gives
//! `dmu_j = Omega_j + sum_k c_k (1_{N_k})^` with `Omega_j^vee = 1_{N_0} dmu_j^vee`
//! and `c_k = (-1)^(d-k) (q-1)^(k-d)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{BoundViolation, Error, Result};
use crate::exponent::{Exponent, Rational};
use crate::field::{Elem, FieldCtx};
use crate::grid::{self, convolve, hat_transform, lp_norm, vee_transform, GridFunction};
use crate::variety::{product_variety, surface_measure, zero_count, zero_pattern_indicator};
use crate::Tolerances;

/// `(-1)^(d-l) (q-1)^-(d-l)`, the value of `(dmu_j)^vee` on `N_l` for `l >= 1`.
pub fn closed_form_value(q: u32, d: usize, zeros: usize) -> f64 {
    let e = (d - zeros) as i32;
    let sign = if e % 2 == 0 { 1.0 } else { -1.0 };
    sign * ((q - 1) as f64).powi(-e)
}

/// `d q^((d-1)/2) / (q-1)^(d-1)`: the decay bound on `N_0`.
pub fn decay_bound(q: u32, d: usize) -> f64 {
    let q = q as f64;
    d as f64 * q.powf((d as f64 - 1.0) / 2.0) / (q - 1.0).powi(d as i32 - 1)
}

/// `2^d (q-1)`: what the triangle-inequality chain for `sup |Omega_j|`
/// evaluates to exactly.
pub fn omega_sup_bound(q: u32, d: usize) -> f64 {
    2f64.powi(d as i32) * (q - 1) as f64
}

/// `2 q^(d-k)`: the bound checked for `||(1_{N_k})^||_{L^((d+1)/2)}`.
pub fn nk_hat_bound(q: u32, d: usize, k: usize) -> f64 {
    2.0 * (q as f64).powi((d - k) as i32)
}

/// Hyper-Kloosterman sum `sum_{x_1...x_d = a} chi(x_1 + ... + x_d)`, summed
/// directly over the variety.
pub fn hyper_kloosterman(ctx: &Arc<FieldCtx>, d: usize, a: Elem) -> Result<Complex64> {
    let v = product_variety(ctx, d, a)?;
    Ok(v
        .points()
        .iter()
        .map(|x| ctx.chi(x.iter().fold(0, |s, &c| ctx.add(s, c))))
        .sum())
}

#[derive(Clone, Debug)]
pub struct SpectralTable {
    pub q: u32,
    pub d: usize,
    pub j: Elem,
    pub vee_values: GridFunction,
    /// Max deviation from the closed form over `l_m >= 1`.
    pub closed_form_residual: f64,
    /// Max `|(dmu_j)^vee(m)|` over `l_m = 0`.
    pub decay_max: f64,
}

pub fn spectral_table(ctx: &Arc<FieldCtx>, d: usize, j: Elem) -> Result<SpectralTable> {
    let measure = surface_measure(&product_variety(ctx, d, j)?)?;
    let vee_values = vee_transform(&measure.density);
    let q = ctx.q();
    let mut residual: f64 = 0.0;
    let mut decay: f64 = 0.0;
    let mut m = vec![0; d];
    for (idx, v) in vee_values.values().iter().enumerate() {
        grid::decode(idx, q, &mut m);
        let zeros = zero_count(&m);
        if zeros == 0 {
            decay = decay.max(v.norm());
        } else {
            let want = closed_form_value(q, d, zeros);
            residual = residual.max((v - Complex64::new(want, 0.0)).norm());
        }
    }
    Ok(SpectralTable {
        q,
        d,
        j: j % q,
        vee_values,
        closed_form_residual: residual,
        decay_max: decay,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub decay_max: f64,
    /// `decay_max * q^((d-1)/2)`.
    pub normalized_constant: f64,
    pub bound: f64,
}

/// Checks `decay_max <= d q^((d-1)/2) / (q-1)^(d-1)`.
pub fn decay_certificate(table: &SpectralTable, tol: Tolerances) -> Result<DecayCertificate> {
    let bound = decay_bound(table.q, table.d);
    let cert = DecayCertificate {
        decay_max: table.decay_max,
        normalized_constant: table.decay_max * (table.q as f64).powf((table.d as f64 - 1.0) / 2.0),
        bound,
    };
    if table.decay_max > bound * (1.0 + tol.rel) + tol.abs {
        return Err(BoundViolation {
            check: "decay".into(),
            q: table.q,
            d: table.d,
            j: Some(table.j),
            value: table.decay_max,
            bound,
        }
        .into());
    }
    Ok(cert)
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub q: u32,
    pub d: usize,
    pub j: Elem,
    /// `Omega_j = (1_{N_0})^ * dmu_j`, space side.
    pub omega: GridFunction,
    /// `c_k = (-1)^(d-k) (q-1)^(k-d)` for `k = 1..=d`.
    pub tail_coefficients: Vec<f64>,
    /// Max pointwise `|dmu_j - Omega_j - sum_k c_k (1_{N_k})^|`.
    pub residual: f64,
}

pub fn decompose(ctx: &Arc<FieldCtx>, d: usize, j: Elem) -> Result<Decomposition> {
    let measure = surface_measure(&product_variety(ctx, d, j)?)?;
    let spectrum = vee_transform(&measure.density);
    let n0 = zero_pattern_indicator(ctx, d, 0)?;
    let omega = hat_transform(&spectrum.mul(&n0)?);

    let q = ctx.q();
    let tail_coefficients: Vec<f64> = (1..=d).map(|k| closed_form_value(q, d, k)).collect();
    let mut recon = omega.clone();
    for (k, &c) in (1..=d).zip(&tail_coefficients) {
        let nk_hat = hat_transform(&zero_pattern_indicator(ctx, d, k)?);
        recon = recon.add(&nk_hat.scale(c))?;
    }
    let residual = measure.density.max_abs_diff(&recon)?;
    Ok(Decomposition {
        q,
        d,
        j: j % q,
        omega,
        tail_coefficients,
        residual,
    })
}

/// `max_x |Omega_j(x)|`, checked against `2^d (q-1)`.
pub fn omega_sup(dec: &Decomposition, tol: Tolerances) -> Result<f64> {
    let value = dec.omega.max_abs();
    let bound = omega_sup_bound(dec.q, dec.d);
    if value > bound * (1.0 + tol.rel) + tol.abs {
        return Err(BoundViolation {
            check: "omega_sup".into(),
            q: dec.q,
            d: dec.d,
            j: Some(dec.j),
            value,
            bound,
        }
        .into());
    }
    Ok(value)
}

/// `||(1_{N_k})^||_{L^s}`; at `s = (d+1)/2` with `k >= 1` the value is checked
/// against `2 q^(d-k)`.
pub fn nk_hat_norm(
    ctx: &Arc<FieldCtx>,
    d: usize,
    k: usize,
    s: Exponent,
    tol: Tolerances,
) -> Result<f64> {
    let nk = zero_pattern_indicator(ctx, d, k)?;
    let value = lp_norm(&hat_transform(&nk), s).value;
    let critical = Exponent::from_value(Rational::new(d as i64 + 1, 2)).ok();
    if k >= 1 && critical == Some(s) {
        let bound = nk_hat_bound(ctx.q(), d, k);
        if value > bound * (1.0 + tol.rel) + tol.abs {
            return Err(BoundViolation {
                check: format!("nk_hat_norm(k={k})"),
                q: ctx.q(),
                d,
                j: None,
                value,
                bound,
            }
            .into());
        }
    }
    Ok(value)
}

/// The exact `L^2 -> L^2` norm of `f -> f * Omega_j`: the largest modulus of
/// its multiplier `1_{N_0} (dmu_j)^vee`.
pub fn omega_multiplier_norm(dec: &Decomposition) -> f64 {
    vee_transform(&dec.omega).max_abs()
}

/// Power-iteration estimate of the `L^2 -> L^2` norm of `f -> f * Omega_j`,
/// applying the operator and its adjoint by convolution. The returned value
/// is `||T v|| / ||v||` for the final iterate, hence a lower bound.
pub fn omega_l2_norm_estimate(dec: &Decomposition, seed: u64, max_iter: usize) -> Result<f64> {
    let omega = &dec.omega;
    let adjoint_kernel = omega.reflect().conj();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..omega.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut v = GridFunction::new(Arc::clone(omega.ctx()), omega.d(), values)?;
    let two = Exponent::integer(2)?;
    let mut estimate: f64 = 0.0;
    for _ in 0..max_iter {
        let nv = lp_norm(&v, two).value;
        if nv == 0.0 {
            return Err(Error::ZeroFunction);
        }
        v = v.scale(1.0 / nv);
        let tv = convolve(&v, omega)?;
        let next = lp_norm(&tv, two).value;
        let converged = (next - estimate).abs() <= 1e-13 * next.max(f64::MIN_POSITIVE);
        estimate = next;
        if converged {
            break;
        }
        v = convolve(&tv, &adjoint_kernel)?;
    }
    Ok(estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{convolve_direct, counting_norm};
    use crate::variety::{coordinate_product, zero_pattern_count};

    fn ctx(q: u64) -> Arc<FieldCtx> {
        Arc::new(FieldCtx::new(q).unwrap())
    }

    /// `(dmu_j)^vee(m)` straight from the definition: the mean of
    /// `chi(m.x)` over the points of `Pi_j`.
    fn direct_coefficient(ctx: &Arc<FieldCtx>, d: usize, j: Elem, m: &[Elem]) -> Complex64 {
        let v = product_variety(ctx, d, j).unwrap();
        let pts = v.points();
        let s: Complex64 = pts
            .iter()
            .map(|x| {
                let dot = m.iter().zip(x).fold(0, |a, (&mi, &xi)| ctx.add(a, ctx.mul(mi, xi)));
                ctx.chi(dot)
            })
            .sum();
        s / pts.len() as f64
    }

    #[test]
    fn small_table_values() {
        let k = ctx(3);
        let t = spectral_table(&k, 2, 1).unwrap();
        assert!((t.vee_values.at(&[0, 0]) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((t.vee_values.at(&[1, 0]).re + 0.5).abs() < 1e-12);
        assert!((direct_coefficient(&k, 2, 1, &[1, 0]).re + 0.5).abs() < 1e-12);
        assert!((t.vee_values.at(&[1, 1]) - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        assert!(0.5 <= decay_bound(3, 2));
        // m = (1, 2): both points of Pi_1 give m.x = 0, so the coefficient is 1.
        assert!((t.vee_values.at(&[1, 2]) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((t.decay_max - 1.0).abs() < 1e-12);
        assert!(t.closed_form_residual < 1e-12);
    }

    #[test]
    fn small_decay_certificate() {
        let k = ctx(3);
        let t = spectral_table(&k, 2, 1).unwrap();
        let cert = decay_certificate(&t, Tolerances::default()).unwrap();
        assert!((cert.decay_max - 1.0).abs() < 1e-12);
        assert!((cert.normalized_constant - 3f64.sqrt()).abs() < 1e-12);
        assert!((cert.bound - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_dimension_one() {
        for q in [3u64, 5, 7] {
            let k = ctx(q);
            for j in 1..q as Elem {
                let t = spectral_table(&k, 1, j).unwrap();
                assert!(t.vee_values.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
                assert_eq!(decay_bound(q as u32, 1), 1.0);
                decay_certificate(&t, Tolerances::default()).unwrap();
            }
        }
    }

    #[test]
    fn table_matches_direct_sums_and_kloosterman() {
        for (q, d) in [(5u64, 2usize), (5, 3), (7, 2)] {
            let k = ctx(q);
            for j in 1..q as Elem {
                let t = spectral_table(&k, d, j).unwrap();
                for idx in 0..t.vee_values.len() {
                    let m = t.vee_values.point_of(idx);
                    let want = direct_coefficient(&k, d, j, &m);
                    assert!((t.vee_values.get(idx) - want).norm() < 1e-12);
                    if zero_count(&m) == 0 {
                        let a = k.mul(j, coordinate_product(&k, &m));
                        let kl = hyper_kloosterman(&k, d, a).unwrap();
                        let scaled = kl / ((q - 1) as f64).powi(d as i32 - 1);
                        assert!((t.vee_values.get(idx) - scaled).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn value_depends_only_on_zero_count() {
        let k = ctx(7);
        let t = spectral_table(&k, 3, 2).unwrap();
        for idx in 0..t.vee_values.len() {
            let m = t.vee_values.point_of(idx);
            let z = zero_count(&m);
            if z > 0 {
                let want = closed_form_value(7, 3, z);
                assert!((t.vee_values.get(idx).re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decomposition_small_case() {
        let k = ctx(3);
        let dec = decompose(&k, 2, 1).unwrap();
        assert_eq!(dec.tail_coefficients, vec![-0.5, 1.0]);
        assert!(dec.residual < 1e-9);
        let omega_spec = vee_transform(&dec.omega);
        for idx in 0..omega_spec.len() {
            if zero_count(&omega_spec.point_of(idx)) > 0 {
                assert!(omega_spec.get(idx).norm() < 1e-12);
            }
        }
        assert!(dec.omega.max_imag() < 1e-12);
        let sup = omega_sup(&dec, Tolerances::default()).unwrap();
        assert!(sup <= 8.0);
    }

    #[test]
    fn omega_matches_convolution_oracle() {
        for (q, d, j) in [(3u64, 2usize, 1u32), (5, 2, 3), (5, 3, 2)] {
            let k = ctx(q);
            let dec = decompose(&k, d, j).unwrap();
            let n0_hat = hat_transform(&zero_pattern_indicator(&k, d, 0).unwrap());
            let mu = surface_measure(&product_variety(&k, d, j).unwrap()).unwrap();
            let oracle = convolve_direct(&n0_hat, &mu.density).unwrap();
            assert!(dec.omega.max_abs_diff(&oracle).unwrap() < 1e-9);
        }
    }

    #[test]
    fn decomposition_residuals() {
        for (q, d) in [(3u64, 2usize), (5, 2), (7, 2), (3, 3), (5, 3), (7, 3)] {
            let k = ctx(q);
            for j in 1..q as Elem {
                let dec = decompose(&k, d, j).unwrap();
                assert!(dec.residual <= 1e-6 * q as f64, "q={q} d={d} j={j}");
                omega_sup(&dec, Tolerances::default()).unwrap();
            }
        }
    }

    #[test]
    fn nk_hat_norms() {
        let tol = Tolerances::default();
        for (q, d) in [(3u64, 2usize), (5, 2), (5, 3)] {
            let k = ctx(q);
            for s in ["1", "3/2", "2", "inf"] {
                let s: Exponent = s.parse().unwrap();
                assert!((nk_hat_norm(&k, d, d, s, tol).unwrap() - 1.0).abs() < 1e-9);
            }
        }
        let k = ctx(3);
        let n1 = hat_transform(&zero_pattern_indicator(&k, 2, 1).unwrap());
        assert!(n1.max_abs() <= 4.0 + 1e-12);

        // Plancherel: ||(1_{N_k})^||_L2 = |N_k|^(1/2).
        let k = ctx(5);
        let two = Exponent::integer(2).unwrap();
        let got = nk_hat_norm(&k, 3, 1, two, tol).unwrap();
        let ind = zero_pattern_indicator(&k, 3, 1).unwrap();
        assert!((got - counting_norm(&ind, two).value).abs() < 1e-9);
        assert!((got - (zero_pattern_count(5, 3, 1) as f64).sqrt()).abs() < 1e-9);
        assert!(matches!(nk_hat_norm(&k, 3, 4, two, tol), Err(Error::BadK { .. })));
    }

    #[test]
    fn violations_are_reported() {
        let k = ctx(5);
        let mut t = spectral_table(&k, 2, 1).unwrap();
        t.decay_max = 10.0;
        match decay_certificate(&t, Tolerances::default()) {
            Err(Error::BoundViolation(v)) => {
                assert_eq!(v.check, "decay");
                assert_eq!(v.value, 10.0);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn l2_multiplier_estimate() {
        for (q, d, j) in [(5u64, 2usize, 1u32), (7, 2, 3), (5, 3, 2)] {
            let k = ctx(q);
            let dec = decompose(&k, d, j).unwrap();
            let t = spectral_table(&k, d, j).unwrap();
            let exact = omega_multiplier_norm(&dec);
            assert!((exact - t.decay_max).abs() < 1e-12);
            let est = omega_l2_norm_estimate(&dec, 0, 2000).unwrap();
            assert!((est - exact).abs() <= 1e-3 * exact, "q={q} est={est} exact={exact}");
            assert!(est <= exact * (1.0 + 1e-9));
        }
    }
}
