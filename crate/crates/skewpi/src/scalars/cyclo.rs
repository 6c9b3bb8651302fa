//! Q(zeta_r) as rational polynomials reduced modulo the cyclotomic polynomial.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::qarith::LaurentIntPoly;

/// `Phi_r` via the Moebius product `prod_{d | r} (x^d - 1)^{mu(r/d)}`.
pub fn cyclotomic_poly(r: u64) -> Result<LaurentIntPoly> {
    if r == 0 {
        return Err(Error::Domain("cyclotomic polynomial of order 0".into()));
    }
    let mut num = LaurentIntPoly::one();
    let mut den = LaurentIntPoly::one();
    for d in 1..=r {
        if r % d != 0 {
            continue;
        }
        let f = LaurentIntPoly::from_terms([(d as i64, 1), (0, -1)]);
        match moebius(r / d) {
            1 => num = &num * &f,
            -1 => den = &den * &f,
            _ => {}
        }
    }
    num.div_exact(&den).ok_or_else(|| Error::Invariant("cyclotomic quotient not exact".into()))
}

fn moebius(mut n: u64) -> i32 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

pub fn euler_phi(r: u64) -> u64 {
    (1..=r).filter(|k| num_integer::gcd(*k, r) == 1).count() as u64
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct CycField {
    pub r: u64,
    /// Monic modulus, low degree first.
    modulus: Vec<BigRational>,
}

impl CycField {
    pub fn new(r: u64) -> Result<Arc<Self>> {
        let phi = cyclotomic_poly(r)?;
        let deg = phi.max_exp().unwrap() as usize;
        let modulus = (0..=deg as i64).map(|e| BigRational::from_integer(phi.coeff(e))).collect();
        Ok(Arc::new(Self { r, modulus }))
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }
}

/// Element of Q(zeta_r); `coeffs[i]` multiplies `zeta^i`, always `degree()` long.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycElem {
    pub field: Arc<CycField>,
    coeffs: Vec<BigRational>,
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let z = BigRational::zero();
    trim((0..n).map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).collect())
}

/// Quotient and remainder in Q[x]; `b` nonzero and trimmed.
fn poly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lb = b.last().unwrap().clone();
    let mut q = vec![BigRational::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / &lb;
        for (i, y) in b.iter().enumerate() {
            r[shift + i] -= &c * y;
        }
        q[shift] = c;
        r = trim(r);
    }
    (trim(q), r)
}

impl CycElem {
    pub fn from_poly(field: &Arc<CycField>, p: &[BigRational]) -> Self {
        let (_, mut r) = poly_divrem(p, &field.modulus);
        r.resize(field.degree(), BigRational::zero());
        Self { field: field.clone(), coeffs: r }
    }

    pub fn from_int(field: &Arc<CycField>, n: i64) -> Self {
        Self::from_poly(field, &[BigRational::from_integer(BigInt::from(n))])
    }

    pub fn from_rational(field: &Arc<CycField>, c: BigRational) -> Self {
        Self::from_poly(field, &[c])
    }

    /// `zeta^k` for any integer `k`.
    pub fn gen_pow(field: &Arc<CycField>, k: i64) -> Self {
        let k = k.rem_euclid(field.r as i64) as usize;
        let mut p = vec![BigRational::zero(); k + 1];
        p[k] = BigRational::one();
        Self::from_poly(field, &p)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(i, c)| if i == 0 { c.is_one() } else { c.is_zero() })
    }

    pub fn add(&self, o: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Self { field: self.field.clone(), coeffs }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a - b).collect();
        Self { field: self.field.clone(), coeffs }
    }

    pub fn neg(&self) -> Self {
        Self { field: self.field.clone(), coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::from_poly(&self.field, &poly_mul(&self.coeffs, &o.coeffs))
    }

    /// Inverse by the extended Euclidean algorithm against the modulus.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (mut r0, mut r1) = (self.field.modulus.clone(), trim(self.coeffs.clone()));
        let (mut s0, mut s1) = (Vec::new(), vec![BigRational::one()]);
        while r1.len() > 1 {
            let (q, r) = poly_divrem(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        // r1 is a nonzero constant because the modulus is irreducible.
        let c = r1[0].recip();
        let s: Vec<BigRational> = s1.iter().map(|x| x * &c).collect();
        Ok(Self::from_poly(&self.field, &s))
    }

    pub fn fmt_with(&self, name: &str, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<(usize, &BigRational)> =
            self.coeffs.iter().enumerate().rev().filter(|(_, c)| !c.is_zero()).collect();
        if nz.is_empty() {
            return write!(f, "0");
        }
        for (k, (i, c)) in nz.iter().enumerate() {
            let a = c.abs();
            if k == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            let coef = if a.is_integer() { a.to_integer().to_string() } else { format!("{}/{}", a.numer(), a.denom()) };
            match (*i, a.is_one()) {
                (0, _) => write!(f, "{coef}")?,
                (1, true) => write!(f, "{name}")?,
                (1, false) => write!(f, "{coef}*{name}")?,
                (_, true) => write!(f, "{name}^{i}")?,
                (_, false) => write!(f, "{coef}*{name}^{i}")?,
            }
        }
        Ok(())
    }
}
