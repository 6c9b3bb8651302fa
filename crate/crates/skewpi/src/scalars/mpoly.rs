//! Sparse multivariate polynomials over Q with nonnegative exponents, plus the
//! gcd needed to keep rational functions reduced.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Exps = Vec<u32>;

/// Terms keyed by exponent vector; `BTreeMap` order on `Vec<u32>` is the lex
/// order with the first variable most significant, so the last key leads.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MPoly {
    nv: usize,
    terms: BTreeMap<Exps, BigRational>,
}

impl MPoly {
    pub fn zero(nv: usize) -> Self {
        Self { nv, terms: BTreeMap::new() }
    }

    pub fn constant(nv: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nv);
        p.add_term(vec![0; nv], c);
        p
    }

    pub fn one(nv: usize) -> Self {
        Self::constant(nv, BigRational::one())
    }

    pub fn var(nv: usize, i: usize) -> Self {
        let mut e = vec![0; nv];
        e[i] = 1;
        Self::monomial(e, BigRational::one())
    }

    pub fn monomial(e: Exps, c: BigRational) -> Self {
        let mut p = Self::zero(e.len());
        p.add_term(e, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nv
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exps, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Exps, c: BigRational) {
        debug_assert_eq!(e.len(), self.nv);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value if the polynomial has no variables.
    pub fn as_const(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|x| *x == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn lead(&self) -> Option<(&Exps, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn lead_coeff(&self) -> BigRational {
        self.lead().map(|(_, c)| c.clone()).unwrap_or_else(BigRational::zero)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nv);
        }
        Self { nv: self.nv, terms: self.terms.iter().map(|(e, x)| (e.clone(), x * c)).collect() }
    }

    /// Scaled so the leading coefficient is 1; zero stays zero.
    pub fn monic(&self) -> Self {
        match self.lead() {
            Some((_, c)) if !c.is_one() => self.scale(&c.recip()),
            _ => self.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        Self { nv: self.nv, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        let (big, small) = if self.len() >= o.len() { (self, o) } else { (o, self) };
        let mut out = big.clone();
        for (e, c) in &small.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.nv);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.nv);
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn mul_monomial(&self, m: &[u32]) -> Self {
        Self {
            nv: self.nv,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(m).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Caller guarantees every term is divisible by `m`.
    fn div_monomial(&self, m: &[u32]) -> Self {
        Self {
            nv: self.nv,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(m).map(|(a, b)| a - b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Componentwise minimum exponent over all terms.
    pub fn monomial_content(&self) -> Exps {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return vec![0; self.nv] };
        let mut m = first.clone();
        for e in it {
            for (a, b) in m.iter_mut().zip(e) {
                *a = (*a).min(*b);
            }
        }
        m
    }

    pub fn vars_used(&self) -> Vec<bool> {
        let mut used = vec![false; self.nv];
        for e in self.terms.keys() {
            for (u, x) in used.iter_mut().zip(e) {
                *u |= *x > 0;
            }
        }
        used
    }

    pub fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Coefficient of `v^k` as a polynomial free of `v`.
    fn coeff_in(&self, v: usize, k: u32) -> Self {
        let mut out = Self::zero(self.nv);
        for (e, c) in &self.terms {
            if e[v] == k {
                let mut e2 = e.clone();
                e2[v] = 0;
                out.terms.insert(e2, c.clone());
            }
        }
        out
    }

    /// Groups terms by their exponents on the variables in `mask`; each
    /// group is returned with those exponents cleared.
    fn split_on(&self, mask: &[bool]) -> Vec<Self> {
        let mut groups: BTreeMap<Exps, Self> = BTreeMap::new();
        for (e, c) in &self.terms {
            let key: Exps = e.iter().zip(mask).map(|(x, m)| if *m { *x } else { 0 }).collect();
            let rest: Exps = e.iter().zip(mask).map(|(x, m)| if *m { 0 } else { *x }).collect();
            groups.entry(key).or_insert_with(|| Self::zero(self.nv)).terms.insert(rest, c.clone());
        }
        groups.into_values().collect()
    }

    /// Exact quotient, or `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let (de, dc) = d.lead()?;
        let (de, dc) = (de.clone(), dc.clone());
        if d.len() == 1 {
            let mut out = Self::zero(self.nv);
            for (e, c) in &self.terms {
                if e.iter().zip(&de).any(|(a, b)| a < b) {
                    return None;
                }
                out.terms.insert(e.iter().zip(&de).map(|(a, b)| a - b).collect(), c / &dc);
            }
            return Some(out);
        }
        let mut rem = self.clone();
        let mut q = Self::zero(self.nv);
        while let Some((re, rc)) = rem.lead() {
            if re.iter().zip(&de).any(|(a, b)| a < b) {
                return None;
            }
            let te: Exps = re.iter().zip(&de).map(|(a, b)| a - b).collect();
            let tc = rc / &dc;
            rem = rem.sub(&d.mul_monomial(&te).scale(&tc));
            q.add_term(te, tc);
        }
        Some(q)
    }

    /// Substitutes values for all variables in a commutative target.
    pub fn eval_with<T, F>(&self, one: T, coeff: F, vals: &[T]) -> T
    where
        T: Clone + std::ops::Add<Output = T> + std::ops::Mul<Output = T>,
        F: Fn(&BigRational) -> T,
    {
        let mut acc: Option<T> = None;
        for (e, c) in &self.terms {
            let mut t = coeff(c);
            for (i, k) in e.iter().enumerate() {
                for _ in 0..*k {
                    t = t * vals[i].clone();
                }
            }
            acc = Some(match acc {
                None => t,
                Some(a) => a + t,
            });
        }
        acc.unwrap_or_else(|| coeff(&BigRational::zero()) * one)
    }

    pub fn fmt_with(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let a = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c.is_negative() { '-' } else { '+' })?;
            }
            let mut factors: Vec<String> = Vec::new();
            let constant = e.iter().all(|x| *x == 0);
            if !a.is_one() || constant {
                factors.push(if a.is_integer() { a.to_integer().to_string() } else { format!("{}/{}", a.numer(), a.denom()) });
            }
            for (k, x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => factors.push(names[k].clone()),
                    _ => factors.push(format!("{}^{}", names[k], x)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Greatest common divisor, normalized to leading coefficient 1.
pub fn gcd(a: &MPoly, b: &MPoly) -> MPoly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    let (ma, mb) = (a.monomial_content(), b.monomial_content());
    let m: Exps = ma.iter().zip(&mb).map(|(x, y)| *x.min(y)).collect();
    let g = gcd_no_monomial(&a.div_monomial(&ma), &b.div_monomial(&mb));
    g.mul_monomial(&m)
}

fn gcd_no_monomial(a: &MPoly, b: &MPoly) -> MPoly {
    let nv = a.nv;
    if a.as_const().is_some() || b.as_const().is_some() {
        return MPoly::one(nv);
    }
    if a == b {
        return a.monic();
    }
    let (va, vb) = (a.vars_used(), b.vars_used());
    // A common factor only involves variables both sides use, so extra
    // variables on one side can be split off as coefficients.
    let extra_a: Vec<bool> = va.iter().zip(&vb).map(|(x, y)| *x && !*y).collect();
    if extra_a.iter().any(|x| *x) {
        return gcd_with_parts(b, a.split_on(&extra_a));
    }
    let extra_b: Vec<bool> = vb.iter().zip(&va).map(|(x, y)| *x && !*y).collect();
    if extra_b.iter().any(|x| *x) {
        return gcd_with_parts(a, b.split_on(&extra_b));
    }
    let v = va.iter().position(|x| *x).expect("nonconstant");
    let (ca, cb) = (content_in(a, v), content_in(b, v));
    let c = gcd(&ca, &cb);
    let (mut r0, mut r1) = (a.div_exact(&ca).unwrap(), b.div_exact(&cb).unwrap());
    if r0.degree_in(v) < r1.degree_in(v) {
        std::mem::swap(&mut r0, &mut r1);
    }
    loop {
        let r = prem(&r0, &r1, v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            return c.monic();
        }
        r0 = r1;
        r1 = primitive_in(&r, v);
    }
    primitive_in(&r1, v).mul(&c).monic()
}

fn gcd_with_parts(b: &MPoly, parts: Vec<MPoly>) -> MPoly {
    let mut g = b.clone();
    for p in parts {
        g = gcd(&g, &p);
        if g.as_const().is_some() {
            return MPoly::one(b.nv);
        }
    }
    g.monic()
}

fn content_in(a: &MPoly, v: usize) -> MPoly {
    let d = a.degree_in(v);
    let mut g = MPoly::zero(a.nv);
    for k in (0..=d).rev() {
        let c = a.coeff_in(v, k);
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.as_const().is_some() {
            return MPoly::one(a.nv);
        }
    }
    g
}

fn primitive_in(a: &MPoly, v: usize) -> MPoly {
    let c = content_in(a, v);
    a.div_exact(&c).expect("content divides").monic()
}

/// Pseudo-remainder of `a` by `b` viewed as polynomials in `v`.
fn prem(a: &MPoly, b: &MPoly, v: usize) -> MPoly {
    let db = b.degree_in(v);
    let lb = b.coeff_in(v, db);
    let mut r = a.clone();
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < db {
            break;
        }
        let lr = r.coeff_in(v, dr);
        let mut shift = vec![0; a.nv];
        shift[v] = dr - db;
        r = r.mul(&lb).sub(&b.mul_monomial(&shift).mul(&lr));
    }
    r
}

#[cfg(test)]
pub(crate) fn rat(n: i64) -> BigRational {
    BigRational::from_integer(num_bigint::BigInt::from(n))
}
