//! Integer matrices, Smith normal form and the PI-degree of a quantum torus
//! at a root of unity.

use std::fmt;

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qarith::LaurentIntPoly;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixWire", into = "MatrixWire")]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<BigInt>>,
}

#[derive(Serialize, Deserialize)]
struct MatrixWire {
    rows: usize,
    cols: usize,
    #[serde(with = "crate::bigjson::matrix")]
    entries: Vec<Vec<BigInt>>,
}

impl TryFrom<MatrixWire> for IntMatrix {
    type Error = Error;
    fn try_from(w: MatrixWire) -> Result<Self> {
        if w.entries.len() != w.rows || w.entries.iter().any(|r| r.len() != w.cols) {
            return Err(Error::Parse(format!("entries do not form a {}x{} matrix", w.rows, w.cols)));
        }
        Ok(Self { rows: w.rows, cols: w.cols, entries: w.entries })
    }
}

impl From<IntMatrix> for MatrixWire {
    fn from(m: IntMatrix) -> Self {
        Self { rows: m.rows, cols: m.cols, entries: m.entries }
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![vec![BigInt::zero(); cols]; rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i][i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        MatrixWire { rows: rows.len(), cols, entries: rows }.try_into()
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|x| BigInt::from(*x)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i][j] = v;
    }

    pub fn entries(&self) -> &[Vec<BigInt>] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_skew_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| self.entries[i][j] == -&self.entries[j][i]))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j][i] = self.entries[i][j].clone();
            }
        }
        t
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Usage(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.entries[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    out.entries[i][j] += a * &o.entries[k][j];
                }
            }
        }
        Ok(out)
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt> {
        if !self.is_square() {
            return Err(Error::Invariant("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.entries.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|i| !a[*i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        self.entries.swap(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for r in &mut self.entries {
            r.swap(i, j);
        }
    }

    /// row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: &BigInt) {
        for k in 0..self.cols {
            let v = &self.entries[j][k] * c;
            self.entries[i][k] += v;
        }
    }

    /// col_i += c * col_j
    fn add_col(&mut self, i: usize, j: usize, c: &BigInt) {
        for r in &mut self.entries {
            let v = &r[j] * c;
            r[i] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for x in &mut self.entries[i] {
            *x = -&*x;
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.entries.iter().flatten().map(|x| x.to_string().len()).max().unwrap_or(1);
        for r in &self.entries {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:>w$}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub s: IntMatrix,
    pub v: IntMatrix,
}

impl SmithForm {
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols)).map(|i| self.s.entries[i][i].clone()).collect()
    }
}

/// Smith normal form `U A V = S` with unimodular `U`, `V`.
///
/// The pivot is always the entry of least absolute value in the remaining
/// block, first in row-major order, so the output is deterministic.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SmithForm> {
    let (m, n) = (a.rows, a.cols);
    let mut s = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);
    for t in 0..m.min(n) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..m {
                for j in t..n {
                    let x = &s.entries[i][j];
                    if !x.is_zero() && best.is_none_or(|(bi, bj)| x.abs() < s.entries[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return finish(a, u, s, v);
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);
            let p = s.entries[t][t].clone();
            let mut dirty = false;
            for i in t + 1..m {
                let (q, r) = s.entries[i][t].div_rem(&p);
                if !q.is_zero() {
                    s.add_row(i, t, &-&q);
                    u.add_row(i, t, &-&q);
                }
                dirty |= !r.is_zero();
            }
            for j in t + 1..n {
                let (q, r) = s.entries[t][j].div_rem(&p);
                if !q.is_zero() {
                    s.add_col(j, t, &-&q);
                    v.add_col(j, t, &-&q);
                }
                dirty |= !r.is_zero();
            }
            if dirty {
                continue;
            }
            let bad = (t + 1..m).find(|i| (t + 1..n).any(|j| !s.entries[*i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    s.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if s.entries[t][t].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    finish(a, u, s, v)
}

fn finish(a: &IntMatrix, u: IntMatrix, s: IntMatrix, v: IntMatrix) -> Result<SmithForm> {
    if u.mul(a)?.mul(&v)? != s {
        return Err(Error::Invariant("U A V != S".into()));
    }
    for (name, w) in [("U", &u), ("V", &v)] {
        if w.determinant()?.abs() != BigInt::one() {
            return Err(Error::Invariant(format!("{name} is not unimodular")));
        }
    }
    for i in 0..s.rows {
        for j in 0..s.cols {
            if i != j && !s.entries[i][j].is_zero() {
                return Err(Error::Invariant("S is not diagonal".into()));
            }
        }
    }
    let d: Vec<&BigInt> = (0..s.rows.min(s.cols)).map(|i| &s.entries[i][i]).collect();
    for w in d.windows(2) {
        let ok = if w[0].is_zero() { w[1].is_zero() } else { w[1].is_multiple_of(w[0]) };
        if !ok || w[0].is_negative() {
            return Err(Error::Invariant("invariant factors do not form a divisibility chain".into()));
        }
    }
    Ok(SmithForm { u, s, v })
}

/// `|image(Z^n -> (Z/l)^n)|` of the matrix, from its invariant factors.
pub fn image_cardinality(snf: &SmithForm, ell: u64) -> Result<BigInt> {
    if ell == 0 {
        return Err(Error::Domain("modulus must be positive".into()));
    }
    let l = BigInt::from(ell);
    let mut h = BigInt::one();
    for d in snf.invariant_factors() {
        // gcd(0, l) = l, which contributes a factor of 1
        h *= &l / d.gcd(&l);
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiDegreeReport {
    pub ell: u64,
    #[serde(with = "crate::bigjson::vec")]
    pub invariant_factors: Vec<BigInt>,
    #[serde(with = "crate::bigjson")]
    pub h: BigInt,
    #[serde(with = "crate::bigjson")]
    pub pi_degree: BigInt,
}

/// PI-degree `sqrt(h)` of the quantum torus with skew-symmetric exponent
/// matrix `m` at a primitive `ell`-th root of unity.
pub fn pi_degree(m: &IntMatrix, ell: u64) -> Result<PiDegreeReport> {
    if !m.is_skew_symmetric() {
        return Err(Error::Domain("matrix is not skew-symmetric".into()));
    }
    pi_degree_from_snf(&smith_normal_form(m)?, ell)
}

/// [`pi_degree`] for a Smith form already computed from a skew-symmetric
/// matrix.
pub fn pi_degree_from_snf(snf: &SmithForm, ell: u64) -> Result<PiDegreeReport> {
    let h = image_cardinality(snf, ell)?;
    let root = Roots::sqrt(&h);
    if &root * &root != h {
        return Err(Error::Invariant(format!("h = {h} is not a perfect square")));
    }
    Ok(PiDegreeReport { ell, invariant_factors: snf.invariant_factors(), h, pi_degree: root })
}

pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// `|{A x mod l : x in (Z/l)^n}|` by enumeration.
pub fn brute_force_image(m: &IntMatrix, ell: u64) -> Result<u64> {
    if ell == 0 {
        return Err(Error::Domain("modulus must be positive".into()));
    }
    let n = m.cols as u32;
    let total = ell.checked_pow(n).filter(|t| *t <= BRUTE_FORCE_LIMIT);
    let out_total = ell.checked_pow(m.rows as u32).filter(|t| *t <= BRUTE_FORCE_LIMIT);
    let (Some(total), Some(out_total)) = (total, out_total) else {
        return Err(Error::BoundExceeded(format!("{ell}^{n} exceeds {BRUTE_FORCE_LIMIT}")));
    };
    let l = ell as i64;
    let a: Vec<Vec<i64>> = m
        .entries
        .iter()
        .map(|r| r.iter().map(|x| x.mod_floor(&BigInt::from(l)).to_i64().unwrap()).collect())
        .collect();
    let code = |mut idx: u64| -> u64 {
        let mut x = vec![0i64; n as usize];
        for xi in x.iter_mut() {
            *xi = (idx % ell) as i64;
            idx /= ell;
        }
        a.iter().fold(0u64, |acc, row| {
            let y = row.iter().zip(&x).map(|(p, q)| p * q).sum::<i64>().rem_euclid(l);
            acc * ell + y as u64
        })
    };
    Ok(count_codes(total, out_total, code))
}

#[cfg(feature = "parallel")]
fn count_codes<F: Fn(u64) -> u64 + Sync>(total: u64, space: u64, code: F) -> u64 {
    use rayon::prelude::*;
    use std::sync::atomic::{AtomicU64, Ordering};
    let bits: Vec<AtomicU64> = (0..space.div_ceil(64)).map(|_| AtomicU64::new(0)).collect();
    (0..total).into_par_iter().for_each(|i| {
        let c = code(i);
        bits[(c / 64) as usize].fetch_or(1 << (c % 64), Ordering::Relaxed);
    });
    bits.iter().map(|w| w.load(Ordering::Relaxed).count_ones() as u64).sum()
}

#[cfg(not(feature = "parallel"))]
fn count_codes<F: Fn(u64) -> u64>(total: u64, space: u64, code: F) -> u64 {
    let mut bits = vec![0u64; space.div_ceil(64) as usize];
    for i in 0..total {
        let c = code(i);
        bits[(c / 64) as usize] |= 1 << (c % 64);
    }
    bits.iter().map(|w| w.count_ones() as u64).sum()
}

/// `det(x I - A)` by the Faddeev-LeVerrier recursion.
pub fn charpoly(a: &IntMatrix) -> Result<LaurentIntPoly> {
    if !a.is_square() {
        return Err(Error::Invariant("characteristic polynomial of a non-square matrix".into()));
    }
    let n = a.rows;
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut mk = IntMatrix::zeros(n, n);
    for k in 1..=n {
        let mut next = a.mul(&mk)?;
        for i in 0..n {
            next.entries[i][i] += &coeffs[n - k + 1];
        }
        let am = a.mul(&next)?;
        let tr: BigInt = (0..n).map(|i| am.entries[i][i].clone()).sum();
        let (q, r) = (-tr).div_rem(&BigInt::from(k));
        if !r.is_zero() {
            return Err(Error::Invariant("non-integral trace quotient".into()));
        }
        coeffs[n - k] = q;
        mk = next;
    }
    Ok(LaurentIntPoly::from_terms(coeffs.into_iter().enumerate().map(|(i, c)| (i as i64, c))))
}
