//! Arithmetic in `F_q` for an odd prime `q`, plus the additive character
//! `chi(a) = exp(2 pi i a / q)`.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Field elements are canonical residues in `0..q`.
pub type Elem = u32;

/// Largest modulus accepted; keeps every product of two residues in `u64`.
pub const MAX_MODULUS: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Neg,
    Inv,
}

/// Immutable context for `F_q`: modulus, unit inverses and the character table.
#[derive(Clone, Debug)]
pub struct FieldCtx {
    q: u32,
    inverse: Vec<Elem>,
    roots: Vec<Complex64>,
}

/// Deterministic trial division.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut k = 3u64;
    while k * k <= n {
        if n.is_multiple_of(k) {
            return false;
        }
        k += 2;
    }
    true
}

/// Odd primes in `lo..=hi`, ascending.
pub fn odd_primes_between(lo: u64, hi: u64) -> Vec<u32> {
    (lo.max(3)..=hi)
        .filter(|&n| n % 2 == 1 && is_prime(n))
        .map(|n| n as u32)
        .collect()
}

impl FieldCtx {
    pub fn new(q: u64) -> Result<Self> {
        // Powers of two are fields of characteristic 2; reject them as such.
        if q >= 2 && q.is_power_of_two() {
            return Err(Error::EvenCharacteristic(q));
        }
        if q < 3 {
            return Err(Error::ModulusTooSmall(q));
        }
        if !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        if q > MAX_MODULUS {
            return Err(Error::Config(format!("modulus {q} exceeds {MAX_MODULUS}")));
        }
        let q32 = q as u32;

        // Inverses via a^(q-2); q is small so this is cheap.
        let mut inverse = vec![0; q as usize];
        for a in 1..q32 {
            inverse[a as usize] = pow_mod(a, q32 - 2, q32);
        }

        let roots = (0..q)
            .map(|a| Complex64::cis(TAU * a as f64 / q as f64))
            .collect();

        Ok(FieldCtx {
            q: q32,
            inverse,
            roots,
        })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Number of units, `q - 1`.
    #[inline]
    pub fn units(&self) -> u32 {
        self.q - 1
    }

    #[inline]
    pub fn reduce(&self, a: u64) -> Elem {
        (a % self.q as u64) as Elem
    }

    /// Reduces a signed integer into `0..q`.
    #[inline]
    pub fn reduce_signed(&self, a: i64) -> Elem {
        a.rem_euclid(self.q as i64) as Elem
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let s = a + b;
        if s >= self.q {
            s - self.q
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        if a >= b {
            a - b
        } else {
            a + self.q - b
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        ((a as u64 * b as u64) % self.q as u64) as Elem
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        Ok(self.inverse[a as usize])
    }

    /// Checked dispatch over the four basic operations; `b` is ignored for
    /// unary operations.
    pub fn arith(&self, op: ArithOp, a: Elem, b: Option<Elem>) -> Result<Elem> {
        self.check(a)?;
        let b = match op {
            ArithOp::Add | ArithOp::Mul => {
                let b = b.ok_or_else(|| Error::Config(format!("{op:?} needs two operands")))?;
                self.check(b)?;
                b
            }
            ArithOp::Neg | ArithOp::Inv => 0,
        };
        match op {
            ArithOp::Add => Ok(self.add(a, b)),
            ArithOp::Mul => Ok(self.mul(a, b)),
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Inv => self.inv(a),
        }
    }

    fn check(&self, a: Elem) -> Result<()> {
        if a >= self.q {
            return Err(Error::ElementOutOfRange {
                value: a as u64,
                q: self.q,
            });
        }
        Ok(())
    }

    /// `chi(a) = exp(2 pi i a / q)` for a canonical residue `a`.
    #[inline]
    pub fn chi(&self, a: Elem) -> Complex64 {
        self.roots[a as usize]
    }

    /// The full character table, indexed by residue.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }
}

fn pow_mod(base: u32, mut exp: u32, m: u32) -> u32 {
    let m64 = m as u64;
    let mut acc = 1u64;
    let mut b = base as u64 % m64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m64;
        }
        b = b * b % m64;
        exp >>= 1;
    }
    acc as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU_ABS: f64 = 1e-9;

    fn trial_division_oracle(n: u64) -> bool {
        n >= 2 && (2..n).all(|k| !n.is_multiple_of(k))
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(FieldCtx::new(2), Err(Error::EvenCharacteristic(2))));
        assert!(matches!(FieldCtx::new(9), Err(Error::NotPrime(9))));
        assert!(matches!(FieldCtx::new(4), Err(Error::EvenCharacteristic(4))));
        assert!(matches!(FieldCtx::new(1), Err(Error::ModulusTooSmall(1))));
        assert!(matches!(FieldCtx::new(15), Err(Error::NotPrime(15))));
    }

    #[test]
    fn primality_matches_oracle() {
        for n in 0..500 {
            assert_eq!(is_prime(n), trial_division_oracle(n), "n = {n}");
        }
    }

    #[test]
    fn small_field() {
        let f = FieldCtx::new(3).unwrap();
        assert_eq!(f.units(), 2);
        assert_eq!(f.inv(2).unwrap(), 2);
        assert_eq!(f.inv(1).unwrap(), 1);
    }

    #[test]
    fn arith_examples() {
        let f7 = FieldCtx::new(7).unwrap();
        assert_eq!(f7.arith(ArithOp::Mul, 3, Some(5)).unwrap(), 1);
        let exhaustive = (1..7).find(|&x| (3 * x) % 7 == 1).unwrap();
        assert_eq!(f7.arith(ArithOp::Inv, 3, None).unwrap(), exhaustive);
        assert_eq!(f7.arith(ArithOp::Add, 6, Some(5)).unwrap(), 4);
        assert_eq!(f7.arith(ArithOp::Neg, 0, None).unwrap(), 0);
        let f5 = FieldCtx::new(5).unwrap();
        assert!(matches!(f5.arith(ArithOp::Inv, 0, None), Err(Error::ZeroInverse)));
        assert!(f5.arith(ArithOp::Add, 5, Some(1)).is_err());
    }

    #[test]
    fn inverse_table_and_involution() {
        for q in odd_primes_between(3, 101) {
            let f = FieldCtx::new(q as u64).unwrap();
            for a in 1..q {
                let ia = f.inv(a).unwrap();
                assert_eq!(f.mul(a, ia), 1);
                assert_eq!(f.inv(ia).unwrap(), a);
            }
        }
    }

    #[test]
    fn character_values() {
        let f = FieldCtx::new(3).unwrap();
        assert!((f.chi(0) - Complex64::new(1.0, 0.0)).norm() < TAU_ABS);
        let w = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        assert!((f.chi(1) - w).norm() < TAU_ABS);

        let f5 = FieldCtx::new(5).unwrap();
        let s: Complex64 = (0..5).map(|a| f5.chi(f5.mul(2, a))).sum();
        assert!(s.norm() < TAU_ABS);
    }

    #[test]
    fn character_homomorphism_and_orthogonality() {
        for q in [3u32, 5, 7, 11, 13, 31] {
            let f = FieldCtx::new(q as u64).unwrap();
            for a in 0..q {
                assert!((f.chi(a).norm() - 1.0).abs() < TAU_ABS);
                assert!((f.chi(f.neg(a)) - f.chi(a).conj()).norm() < TAU_ABS);
                for b in 0..q {
                    let lhs = f.chi(f.add(a, b));
                    assert!((lhs - f.chi(a) * f.chi(b)).norm() < TAU_ABS);
                }
            }
            for m in 0..q {
                let s: Complex64 = (0..q).map(|a| f.chi(f.mul(m, a))).sum();
                let expected = if m == 0 { q as f64 } else { 0.0 };
                assert!((s - expected).norm() < TAU_ABS);
            }
        }
    }

    #[test]
    fn signed_reduction() {
        let f = FieldCtx::new(7).unwrap();
        assert_eq!(f.reduce_signed(-1), 6);
        assert_eq!(f.reduce_signed(-14), 0);
        assert_eq!(f.sub(2, 5), 4);
        assert_eq!(odd_primes_between(3, 20), vec![3, 5, 7, 11, 13, 17, 19]);
    }
}
