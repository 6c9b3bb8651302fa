//! t-integers, t-factorials and Gaussian binomials as integer Laurent
//! polynomials in one formal variable `t`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Integer Laurent polynomial `sum c_e t^e`. Zero coefficients are never stored,
/// so the zero polynomial is the empty map.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LaurentIntPoly {
    terms: BTreeMap<i64, BigInt>,
}

impl LaurentIntPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(1, 0)
    }

    /// `c * t^e`.
    pub fn monomial(c: impl Into<BigInt>, e: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c.into());
        p
    }

    /// Builds from `(exponent, coefficient)` pairs, merging repeats.
    pub fn from_terms<I, C>(it: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c.into());
        }
        p
    }

    /// Dense constructor, `coeffs[i]` multiplies `t^i`.
    pub fn from_coeffs<C: Into<BigInt> + Clone>(coeffs: &[C]) -> Self {
        Self::from_terms(coeffs.iter().cloned().enumerate().map(|(i, c)| (i as i64, c)))
    }

    fn add_term(&mut self, e: i64, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: i64) -> BigInt {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigInt)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect() }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(e, x)| (*e, x * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Value at `t = 1`.
    pub fn eval_one(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Value at an integer point; negative powers need `t = +-1`.
    pub fn eval_int(&self, t: &BigInt) -> Option<BigInt> {
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            if *e < 0 {
                if t.abs() != BigInt::one() {
                    return None;
                }
                acc += c * num_traits::pow(t.clone(), e.unsigned_abs() as usize);
            } else {
                acc += c * num_traits::pow(t.clone(), *e as usize);
            }
        }
        Some(acc)
    }

    /// Exact quotient `self / d`, or `None` when the division leaves a remainder.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let (dlo, dhi) = (d.min_exp()?, d.max_exp()?);
        let lead = d.coeff(dhi);
        let mut rem = self.clone();
        let mut q = Self::zero();
        while let Some(hi) = rem.max_exp() {
            let lo = rem.min_exp().unwrap();
            if hi - lo < dhi - dlo {
                return None;
            }
            let (qc, r) = rem.coeff(hi).div_rem(&lead);
            if !r.is_zero() {
                return None;
            }
            let step = Self::monomial(qc, hi - dhi);
            rem = &rem - &(&step * d);
            q = &q + &step;
        }
        Some(q)
    }
}

impl fmt::Display for LaurentIntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            match (*e, a.is_one()) {
                (0, _) => write!(f, "{a}")?,
                (1, true) => write!(f, "t")?,
                (1, false) => write!(f, "{a}*t")?,
                (_, true) => write!(f, "t^{e}")?,
                (_, false) => write!(f, "{a}*t^{e}")?,
            }
        }
        Ok(())
    }
}

impl Add for &LaurentIntPoly {
    type Output = LaurentIntPoly;
    fn add(self, rhs: &LaurentIntPoly) -> LaurentIntPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &LaurentIntPoly {
    type Output = LaurentIntPoly;
    fn sub(self, rhs: &LaurentIntPoly) -> LaurentIntPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Mul for &LaurentIntPoly {
    type Output = LaurentIntPoly;
    fn mul(self, rhs: &LaurentIntPoly) -> LaurentIntPoly {
        let mut out = LaurentIntPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea + eb, ca * cb);
            }
        }
        out
    }
}

impl Neg for &LaurentIntPoly {
    type Output = LaurentIntPoly;
    fn neg(self) -> LaurentIntPoly {
        LaurentIntPoly { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentIntPoly {
            type Output = LaurentIntPoly;
            fn $m(self, rhs: LaurentIntPoly) -> LaurentIntPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[derive(Serialize, Deserialize)]
struct TermsWire {
    terms: Vec<(i64, String)>,
}

impl Serialize for LaurentIntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TermsWire { terms: self.terms.iter().map(|(e, c)| (*e, c.to_string())).collect() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentIntPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = TermsWire::deserialize(d)?;
        let mut p = LaurentIntPoly::zero();
        for (e, c) in w.terms {
            let c: BigInt = c.parse().map_err(|_| de::Error::custom(format!("bad coefficient {c:?}")))?;
            p.add_term(e, c);
        }
        Ok(p)
    }
}

/// `(m)_t = t^{m-1} + ... + t + 1`, zero for `m = 0`.
pub fn t_integer(m: u32) -> LaurentIntPoly {
    LaurentIntPoly::from_terms((0..m as i64).map(|e| (e, 1)))
}

/// `(m)!_t = (m)_t (m-1)_t ... (1)_t`, with `(0)!_t = 1`.
pub fn t_factorial(m: u32) -> LaurentIntPoly {
    (1..=m).fold(LaurentIntPoly::one(), |acc, k| &acc * &t_integer(k))
}

/// Gaussian binomial coefficient, built row by row from
/// `binom(n,m) = binom(n-1,m-1) + t^m binom(n-1,m)`.
pub fn t_binomial(n: i64, m: i64) -> Result<LaurentIntPoly, Error> {
    if n < 0 || m < 0 || m > n {
        return Err(Error::Domain(format!("t_binomial needs 0 <= m <= n, got n={n}, m={m}")));
    }
    Ok(t_binomial_row(n as usize).swap_remove(m as usize))
}

/// The whole row `binom(n, 0..=n)`.
pub fn t_binomial_row(n: usize) -> Vec<LaurentIntPoly> {
    let mut row = vec![LaurentIntPoly::one()];
    for k in 1..=n {
        let mut next = Vec::with_capacity(k + 1);
        next.push(LaurentIntPoly::one());
        for m in 1..k {
            next.push(&row[m - 1] + &row[m].shift(m as i64));
        }
        next.push(LaurentIntPoly::one());
        row = next;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> LaurentIntPoly {
        LaurentIntPoly::from_coeffs(c)
    }

    #[test]
    fn small_values() {
        assert_eq!(t_integer(3), p(&[1, 1, 1]));
        assert_eq!(t_integer(1), p(&[1]));
        assert!(t_integer(0).is_zero());
        assert_eq!(t_factorial(0), p(&[1]));
        assert_eq!(t_factorial(2), p(&[1, 1]));
        assert_eq!(t_factorial(3), p(&[1, 2, 2, 1]));
        assert_eq!(t_binomial(2, 1).unwrap(), p(&[1, 1]));
        assert_eq!(t_binomial(4, 2).unwrap(), p(&[1, 1, 2, 1, 1]));
        for n in 0..6 {
            assert_eq!(t_binomial(n, 0).unwrap(), p(&[1]));
            assert_eq!(t_binomial(n, n).unwrap(), p(&[1]));
        }
        assert!(t_binomial(2, 3).is_err());
        assert!(t_binomial(-1, 0).is_err());
    }

    #[test]
    fn other_pascal_rule() {
        for n in 2..=20i64 {
            for m in 1..n {
                let lhs = t_binomial(n, m).unwrap();
                let rhs = &t_binomial(n - 1, m).unwrap() + &t_binomial(n - 1, m - 1).unwrap().shift(n - m);
                assert_eq!(lhs, rhs, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn factorial_quotient_oracle() {
        for n in 0..=12u32 {
            for m in 0..=n {
                let den = &t_factorial(m) * &t_factorial(n - m);
                let q = t_factorial(n).div_exact(&den).expect("exact");
                assert_eq!(q, t_binomial(n as i64, m as i64).unwrap());
            }
        }
    }

    #[test]
    fn json_shape() {
        let s = serde_json::to_string(&p(&[1, 0, -3])).unwrap();
        assert_eq!(s, r#"{"terms":[[0,"1"],[2,"-3"]]}"#);
        let back: LaurentIntPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p(&[1, 0, -3]));
    }

    #[test]
    fn display() {
        assert_eq!(p(&[1, -1, 0, 2]).to_string(), "2*t^3 - t + 1");
        assert_eq!(LaurentIntPoly::monomial(-1, -2).to_string(), "-t^-2");
    }
}
