//! Exponents in Z[1/p]: rationals of the form `num / p^den_pow`.
//!
//! Values are kept normalized (`den_pow == 0` or `p ∤ num`), so equality is
//! structural and the base-p digit expansion used by the support engine is
//! canonical.

use crate::error::{ClassError, Result};
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Exponent {
    p: u32,
    num: i128,
    den_pow: u32,
}

fn checked_pow(p: u32, e: u32) -> Result<i128> {
    let mut acc: i128 = 1;
    for _ in 0..e {
        acc = acc
            .checked_mul(p as i128)
            .ok_or_else(|| ClassError::ExponentOverflow(format!("p^{e}")))?;
    }
    Ok(acc)
}

impl Exponent {
    /// `num / p^den_pow`, normalized.
    pub fn new(p: u32, num: i128, den_pow: u32) -> Self {
        debug_assert!(p >= 2);
        let mut num = num;
        let mut den_pow = den_pow;
        if num == 0 {
            den_pow = 0;
        } else {
            while den_pow > 0 && num % (p as i128) == 0 {
                num /= p as i128;
                den_pow -= 1;
            }
        }
        Exponent { p, num, den_pow }
    }

    pub fn zero(p: u32) -> Self {
        Exponent { p, num: 0, den_pow: 0 }
    }

    pub fn integer(p: u32, n: i128) -> Self {
        Exponent::new(p, n, 0)
    }

    /// Parses a rational `num/den`; fails unless `den` is a power of p.
    pub fn from_ratio(p: u32, num: i128, den: i128) -> Result<Self> {
        if den <= 0 {
            return Err(ClassError::NotInClass(format!("denominator {den} must be positive")));
        }
        let mut d = den;
        let mut e = 0u32;
        while d % (p as i128) == 0 {
            d /= p as i128;
            e += 1;
        }
        if d != 1 {
            return Err(ClassError::NotInClass(format!(
                "exponent {num}/{den} not in Z[1/{p}]"
            )));
        }
        Ok(Exponent::new(p, num, e))
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn num(&self) -> i128 {
        self.num
    }
    pub fn den_pow(&self) -> u32 {
        self.den_pow
    }
    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
    pub fn is_negative(&self) -> bool {
        self.num < 0
    }
    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    /// p-adic valuation; `None` for zero.
    pub fn vp(&self) -> Option<i64> {
        if self.num == 0 {
            return None;
        }
        if self.den_pow > 0 {
            return Some(-(self.den_pow as i64));
        }
        let mut n = self.num;
        let mut v = 0i64;
        while n % (self.p as i128) == 0 {
            n /= self.p as i128;
            v += 1;
        }
        Some(v)
    }

    fn common(self, other: Self) -> Result<(i128, i128, u32)> {
        assert_eq!(self.p, other.p, "mixed characteristics");
        let e = self.den_pow.max(other.den_pow);
        let a = self
            .num
            .checked_mul(checked_pow(self.p, e - self.den_pow)?)
            .ok_or_else(|| ClassError::ExponentOverflow("add".into()))?;
        let b = other
            .num
            .checked_mul(checked_pow(self.p, e - other.den_pow)?)
            .ok_or_else(|| ClassError::ExponentOverflow("add".into()))?;
        Ok((a, b, e))
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        let (a, b, e) = self.common(other)?;
        let s = a
            .checked_add(b)
            .ok_or_else(|| ClassError::ExponentOverflow("add".into()))?;
        Ok(Exponent::new(self.p, s, e))
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(other.neg())
    }

    pub fn add(self, other: Self) -> Self {
        self.checked_add(other).expect("exponent overflow")
    }

    pub fn sub(self, other: Self) -> Self {
        self.checked_sub(other).expect("exponent overflow")
    }

    pub fn neg(self) -> Self {
        Exponent { p: self.p, num: -self.num, den_pow: self.den_pow }
    }

    pub fn mul_int(self, k: i128) -> Self {
        Exponent::new(self.p, self.num.checked_mul(k).expect("exponent overflow"), self.den_pow)
    }

    /// Multiplies by `p^k` (k may be negative).
    pub fn mul_ppow(self, k: i64) -> Self {
        if self.num == 0 {
            return self;
        }
        if k >= 0 {
            let extra = (k as u32).min(self.den_pow);
            let rest = k as u32 - extra;
            let num = self
                .num
                .checked_mul(checked_pow(self.p, rest).expect("exponent overflow"))
                .expect("exponent overflow");
            Exponent::new(self.p, num, self.den_pow - extra)
        } else {
            Exponent::new(self.p, self.num, self.den_pow + ((-k) as u32))
        }
    }

    pub fn cmp_exact(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.common(*other).expect("exponent overflow");
        a.cmp(&b)
    }

    /// Base-p digit expansion of |num|: digit at position `den_pow - i` of
    /// p^{-(den_pow - i)} ... returned as (offset, digits) with `digits[j]`
    /// the digit of p^{j - offset_from_deepest}. Concretely: the value is
    /// `sign * Σ_j digits[j] * p^(j - den_pow)` with digits[0] != 0.
    pub fn magnitude_digits(&self) -> (i64, Vec<u32>) {
        let mut n = self.num.unsigned_abs();
        let mut digits = Vec::new();
        while n > 0 {
            digits.push((n % self.p as u128) as u32);
            n /= self.p as u128;
        }
        (-(self.den_pow as i64), digits)
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_exact(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_exact(other)
    }
}

impl fmt::Debug for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        <Self as fmt::Display>::fmt(self, f)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den_pow == 0 {
            write!(f, "{}", self.num)
        } else if self.den_pow == 1 {
            write!(f, "{}/p", self.num)
        } else {
            write!(f, "{}/p^{}", self.num, self.den_pow)
        }
    }
}

/// A valuation value: either a finite exponent or +infinity (for the zero
/// series).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(Exponent),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<Exponent> {
        match self {
            Valuation::Finite(q) => Some(q),
            Valuation::Infinity => None,
        }
    }
    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinity)
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (Valuation::Infinity, Valuation::Infinity) => Ordering::Equal,
            (Valuation::Infinity, Valuation::Finite(_)) => Ordering::Greater,
            (Valuation::Finite(_), Valuation::Infinity) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        })
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(q) => write!(f, "{q}"),
            Valuation::Infinity => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        let q = Exponent::new(3, 9, 3);
        assert_eq!(q.num(), 1);
        assert_eq!(q.den_pow(), 1);
        assert_eq!(Exponent::new(5, 0, 7), Exponent::zero(5));
    }

    #[test]
    fn ordering_matches_rationals() {
        let p = 2;
        let a = Exponent::new(p, -1, 1); // -1/2
        let b = Exponent::new(p, -1, 2); // -1/4
        let c = Exponent::new(p, -3, 2); // -3/4
        assert!(a < b);
        assert!(c < a);
        assert!(c < b);
    }

    #[test]
    fn arithmetic() {
        let p = 2;
        let a = Exponent::new(p, -1, 1);
        let b = Exponent::new(p, -1, 2);
        assert_eq!(a.add(b), Exponent::new(p, -3, 2));
        assert_eq!(a.sub(a), Exponent::zero(p));
        assert_eq!(a.mul_ppow(-1), Exponent::new(p, -1, 2));
        assert_eq!(a.mul_ppow(1), Exponent::integer(p, -1));
    }

    #[test]
    fn ratio_rejects_non_p_denominator() {
        assert!(Exponent::from_ratio(2, 1, 3).is_err());
        assert_eq!(Exponent::from_ratio(2, 1, 4).unwrap(), Exponent::new(2, 1, 2));
    }

    #[test]
    fn digits() {
        let q = Exponent::new(2, -3, 2); // -3/4 -> digits 1,1 at positions -2,-1
        let (off, digits) = q.magnitude_digits();
        assert_eq!(off, -2);
        assert_eq!(digits, vec![1, 1]);
    }

    #[test]
    fn vp() {
        assert_eq!(Exponent::new(2, -3, 2).vp(), Some(-2));
        assert_eq!(Exponent::new(2, 12, 0).vp(), Some(2));
        assert_eq!(Exponent::zero(2).vp(), None);
    }
}
