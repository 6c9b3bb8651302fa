//! Iterated skew polynomial rings `k[x_1][x_2; tau_2, delta_2]...[x_N; tau_N, delta_N]`
//! with `tau_i(x_j) = lambda_ij x_j`, and their higher q-skew derivations.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalars::{mpoly, t_binomial_at, t_factorial_at, FieldDesc, Scalar, ScalarField};

pub type Exps = Vec<i64>;

pub const DEFAULT_MAX_INDEX: usize = 64;

/// Normally ordered element: exponent vector to nonzero coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OreElement {
    terms: BTreeMap<Exps, Scalar>,
}

impl OreElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(e: Exps, c: Scalar) -> Self {
        let mut out = Self::zero();
        out.add_term(e, c);
        out
    }

    pub fn from_terms<I: IntoIterator<Item = (Exps, Scalar)>>(it: I) -> Self {
        let mut out = Self::zero();
        for (e, c) in it {
            out.add_term(e, c);
        }
        out
    }

    pub fn add_term(&mut self, e: Exps, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(slot) => {
                let s = &*slot + &c;
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *slot = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exps, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &[i64]) -> Option<&Scalar> {
        self.terms.get(e)
    }

    /// Lexicographically largest monomial and its coefficient.
    pub fn lead(&self) -> Option<(&Exps, &Scalar)> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
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

    pub fn neg(&self) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }
    }

    fn add_scaled(&mut self, o: &Self, s: &Scalar) {
        for (e, c) in &o.terms {
            self.add_term(e.clone(), c * s);
        }
    }

    /// Divides by the coefficient of the lexicographically largest monomial.
    pub fn monic(&self) -> Result<Self> {
        match self.lead() {
            None => Ok(Self::zero()),
            Some((_, c)) => Ok(self.scale(&c.inv()?)),
        }
    }

    /// Largest variable index with a nonzero exponent.
    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(|e| e.iter().rposition(|x| *x != 0)).max()
    }

    pub fn has_negative_exponent(&self) -> bool {
        self.terms.keys().any(|e| e.iter().any(|x| *x < 0))
    }

    pub fn map_coeffs<F: Fn(&Scalar) -> Result<Scalar>>(&self, f: F) -> Result<Self> {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c)?);
        }
        Ok(out)
    }
}

/// Generic presentation a spec specializes from, with the values its
/// parameters take in the spec's field.
#[derive(Clone, Debug)]
pub struct Lift {
    pub spec: Arc<OreSpec>,
    pub values: Vec<Scalar>,
}

type HdTable = Vec<Vec<OreElement>>;

#[derive(Default)]
struct Caches {
    delta: RwLock<HashMap<(usize, Exps), OreElement>>,
    table: RwLock<HashMap<usize, Result<Arc<HdTable>>>>,
    hd: RwLock<HashMap<(usize, usize, Exps), OreElement>>,
}

/// Presentation of an iterated skew polynomial ring.
///
/// `lambda[i][j]` for `j < i` is the scalar with `tau_i(x_j) = lambda_ij x_j`;
/// `delta[i][j]` is `delta_i(x_j)`.
pub struct OreSpec {
    pub field: ScalarField,
    pub vars: Vec<String>,
    pub lambda: Vec<Vec<Scalar>>,
    pub qskew: Vec<Scalar>,
    pub delta: Vec<Vec<OreElement>>,
    pub invertible: Vec<bool>,
    pub lift: Option<Lift>,
    pub max_index: usize,
    delta_zero: Vec<bool>,
    cache: Caches,
}

impl Clone for OreSpec {
    fn clone(&self) -> Self {
        Self {
            field: self.field.clone(),
            vars: self.vars.clone(),
            lambda: self.lambda.clone(),
            qskew: self.qskew.clone(),
            delta: self.delta.clone(),
            invertible: self.invertible.clone(),
            lift: self.lift.clone(),
            max_index: self.max_index,
            delta_zero: self.delta_zero.clone(),
            cache: Caches::default(),
        }
    }
}

impl fmt::Debug for OreSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OreSpec")
            .field("field", &self.field.to_string())
            .field("vars", &self.vars)
            .field("invertible", &self.invertible)
            .field("lift", &self.lift.is_some())
            .finish_non_exhaustive()
    }
}

impl OreSpec {
    /// Validates and builds. `delta[i]` may be shorter than `i`; missing
    /// entries are zero.
    pub fn new(
        field: ScalarField,
        vars: Vec<String>,
        lambda: Vec<Vec<Scalar>>,
        qskew: Vec<Scalar>,
        delta: Vec<Vec<OreElement>>,
        invertible: Vec<bool>,
    ) -> Result<Self> {
        let n = vars.len();
        if lambda.len() != n || lambda.iter().any(|r| r.len() != n) {
            return Err(Error::Usage(format!("lambda must be {n}x{n}")));
        }
        if qskew.len() != n || invertible.len() != n || delta.len() > n {
            return Err(Error::Usage("qskew, delta and invertible must have one entry per variable".into()));
        }
        for i in 0..n {
            if !lambda[i][i].is_one() {
                return Err(Error::Domain(format!("lambda[{i}][{i}] must be 1")));
            }
            for j in 0..i {
                if !(&lambda[i][j] * &lambda[j][i]).is_one() {
                    return Err(Error::Domain(format!("lambda is not multiplicatively antisymmetric at ({i},{j})")));
                }
            }
        }
        let mut table = vec![vec![OreElement::zero(); n]; n];
        for (i, row) in delta.into_iter().enumerate() {
            for (j, d) in row.into_iter().enumerate() {
                if d.is_zero() {
                    continue;
                }
                if j >= i {
                    return Err(Error::Domain(format!("delta of {} on {} is not below it", vars[i], vars[j])));
                }
                if d.terms().any(|(e, _)| e.len() != n) {
                    return Err(Error::Usage("exponent vector length mismatch".into()));
                }
                if d.max_var().is_some_and(|m| m >= i) {
                    return Err(Error::Domain(format!("delta_{}({}) mentions a variable not below {}", vars[i], vars[j], vars[i])));
                }
                table[i][j] = d;
            }
        }
        for j in 0..n {
            if invertible[j] {
                for i in j + 1..n {
                    if !table[i][j].is_zero() {
                        return Err(Error::Domain(format!(
                            "invertible {} must scalar-commute with later variables, but delta_{} of it is nonzero",
                            vars[j], vars[i]
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            for d in &table[i] {
                for (e, _) in d.terms() {
                    if e.iter().enumerate().any(|(k, x)| *x < 0 && !invertible[k]) {
                        return Err(Error::Domain("negative exponent on a non-invertible variable".into()));
                    }
                }
            }
        }
        let delta_zero = table.iter().map(|r| r.iter().all(|d| d.is_zero())).collect();
        Ok(Self {
            field,
            vars,
            lambda,
            qskew,
            delta: table,
            invertible,
            lift: None,
            max_index: DEFAULT_MAX_INDEX,
            delta_zero,
            cache: Caches::default(),
        })
    }

    /// Attaches a generic presentation; `values` are the lift parameters
    /// evaluated in this spec's field. Checks that the lift specializes to
    /// this spec's data.
    pub fn with_lift(mut self, lift_spec: Arc<OreSpec>, values: Vec<Scalar>) -> Result<Self> {
        let n = self.n();
        if lift_spec.n() != n {
            return Err(Error::Usage("lift has a different number of variables".into()));
        }
        if values.len() != lift_spec.field.param_names().len() {
            return Err(Error::Usage("one value per lift parameter is required".into()));
        }
        let sp = |c: &Scalar| c.specialize(&self.field, &values);
        for i in 0..n {
            if sp(&lift_spec.qskew[i])? != self.qskew[i] {
                return Err(Error::Domain(format!("lift qskew of {} does not specialize correctly", self.vars[i])));
            }
            for j in 0..n {
                if sp(&lift_spec.lambda[i][j])? != self.lambda[i][j] {
                    return Err(Error::Domain(format!("lift lambda[{i}][{j}] does not specialize correctly")));
                }
                if lift_spec.delta[i][j].map_coeffs(sp)? != self.delta[i][j] {
                    return Err(Error::Domain(format!("lift delta_{}({}) does not specialize correctly", self.vars[i], self.vars[j])));
                }
            }
        }
        self.lift = Some(Lift { spec: lift_spec, values });
        Ok(self)
    }

    pub fn with_max_index(mut self, m: usize) -> Self {
        self.max_index = m;
        if let Some(l) = &mut self.lift {
            let mut s = (*l.spec).clone();
            s.max_index = m;
            l.spec = Arc::new(s);
        }
        self
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v == name).ok_or_else(|| Error::Usage(format!("unknown variable {name:?}")))
    }

    pub fn delta_is_zero(&self, i: usize) -> bool {
        self.delta_zero[i]
    }

    pub fn unit_exps(&self) -> Exps {
        vec![0; self.n()]
    }

    pub fn one(&self) -> OreElement {
        OreElement::monomial(self.unit_exps(), self.field.one())
    }

    pub fn constant(&self, c: Scalar) -> OreElement {
        OreElement::monomial(self.unit_exps(), c)
    }

    /// `x_i^p`.
    pub fn var_pow(&self, i: usize, p: i64) -> OreElement {
        let mut e = self.unit_exps();
        e[i] = p;
        OreElement::monomial(e, self.field.one())
    }

    pub fn var(&self, i: usize) -> OreElement {
        self.var_pow(i, 1)
    }

    pub fn mono(&self, e: Exps) -> OreElement {
        OreElement::monomial(e, self.field.one())
    }

    /// Same presentation with `x_i` allowed negative exponents.
    pub fn localized(&self, i: usize) -> Result<Self> {
        let mut inv = self.invertible.clone();
        inv[i] = true;
        self.rebuilt(self.lambda.clone(), self.qskew.clone(), self.delta.clone(), inv, self.vars.clone())
    }

    pub(crate) fn rebuilt(
        &self,
        lambda: Vec<Vec<Scalar>>,
        qskew: Vec<Scalar>,
        delta: Vec<Vec<OreElement>>,
        invertible: Vec<bool>,
        vars: Vec<String>,
    ) -> Result<Self> {
        let mut s = Self::new(self.field.clone(), vars, lambda, qskew, delta, invertible)?;
        s.lift = self.lift.clone();
        s.max_index = self.max_index;
        Ok(s)
    }

    fn check_shape(&self, a: &OreElement) -> Result<()> {
        let n = self.n();
        for (e, _) in a.terms() {
            if e.len() != n {
                return Err(Error::Usage(format!("element has {} exponents, ring has {n} variables", e.len())));
            }
            if let Some(k) = e.iter().enumerate().position(|(k, x)| *x < 0 && !self.invertible[k]) {
                return Err(Error::Domain(format!("negative power of non-invertible {}", self.vars[k])));
            }
        }
        Ok(())
    }

    fn check_below(&self, r: &OreElement, i: usize) -> Result<()> {
        self.check_shape(r)?;
        if r.max_var().is_some_and(|m| m >= i) {
            return Err(Error::Domain(format!("element must only involve variables before {}", self.vars[i])));
        }
        Ok(())
    }

    /// Scalar `prod_{j<i} lambda_ij^{m e_j}`, the factor `tau_i^m` puts on `x^e`.
    pub fn tau_factor(&self, i: usize, e: &[i64], m: i64) -> Scalar {
        let mut f = self.field.one();
        for j in 0..i {
            let p = e[j] * m;
            if p != 0 {
                f = &f * &self.lambda[i][j].pow(p).expect("lambda entries are units");
            }
        }
        f
    }

    /// `tau_i^m(r)` for `r` below `x_i`.
    pub fn tau(&self, i: usize, m: i64, r: &OreElement) -> Result<OreElement> {
        self.check_below(r, i)?;
        Ok(self.tau_unchecked(i, m, r))
    }

    fn tau_unchecked(&self, i: usize, m: i64, r: &OreElement) -> OreElement {
        if m == 0 {
            return r.clone();
        }
        OreElement { terms: r.terms().map(|(e, c)| (e.clone(), c * &self.tau_factor(i, e, m))).collect() }
    }

    /// Normally ordered product.
    pub fn mul(&self, a: &OreElement, b: &OreElement) -> Result<OreElement> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        let mut out = OreElement::zero();
        for (ea, ca) in a.terms() {
            let mut cur = b.clone();
            for k in (0..self.n()).rev() {
                let p = ea[k];
                for _ in 0..p.unsigned_abs() {
                    cur = self.left_mul_gen(k, p < 0, &cur)?;
                }
            }
            out.add_scaled(&cur, ca);
        }
        Ok(out)
    }

    pub fn pow(&self, a: &OreElement, p: u32) -> Result<OreElement> {
        let mut acc = self.one();
        for _ in 0..p {
            acc = self.mul(&acc, a)?;
        }
        Ok(acc)
    }

    /// `x_k * l` (or `x_k^{-1} * l`), using `x_k L = tau_k(L) x_k + delta_k(L)`
    /// on the part of each monomial below `x_k`.
    fn left_mul_gen(&self, k: usize, inverse: bool, l: &OreElement) -> Result<OreElement> {
        let mut out = OreElement::zero();
        let step = if inverse { -1 } else { 1 };
        for (e, c) in l.terms() {
            if e[..k].iter().all(|x| *x == 0) {
                let mut e2 = e.clone();
                e2[k] += step;
                out.add_term(e2, c.clone());
                continue;
            }
            if !inverse || self.delta_zero[k] {
                let mut e2 = e.clone();
                e2[k] += step;
                out.add_term(e2, c * &self.tau_factor(k, e, step));
                if !inverse && !self.delta_zero[k] {
                    let mut low = e.clone();
                    low[k..].iter_mut().for_each(|x| *x = 0);
                    for (de, dc) in self.delta_mono(k, &low)?.terms() {
                        let mut e3 = e.clone();
                        e3[..k].copy_from_slice(&de[..k]);
                        out.add_term(e3, c * dc);
                    }
                }
                continue;
            }
            // x^{-1} L = sum_i (-1)^i tau^{-1}((delta tau^{-1})^i L) x^{-1-i}
            let mut low = e.clone();
            low[k..].iter_mut().for_each(|x| *x = 0);
            let mut cur = self.mono(low);
            let mut i = 0usize;
            while !cur.is_zero() {
                if i > self.max_index {
                    return Err(Error::NotLocallyNilpotent(self.max_index));
                }
                let t = self.tau_unchecked(k, -1, &cur);
                let sign = if i % 2 == 0 { c.clone() } else { -c };
                for (te, tc) in t.terms() {
                    let mut e3 = e.clone();
                    e3[..k].copy_from_slice(&te[..k]);
                    e3[k] = e[k] - 1 - i as i64;
                    out.add_term(e3, &sign * tc);
                }
                cur = self.apply_delta_unchecked(k, &t)?;
                i += 1;
            }
        }
        Ok(out)
    }

    /// `delta_i(r)` by linearity and `delta(uv) = tau(u) delta(v) + delta(u) v`.
    pub fn apply_delta(&self, i: usize, r: &OreElement) -> Result<OreElement> {
        self.check_below(r, i)?;
        self.apply_delta_unchecked(i, r)
    }

    fn apply_delta_unchecked(&self, i: usize, r: &OreElement) -> Result<OreElement> {
        let mut out = OreElement::zero();
        if self.delta_zero[i] {
            return Ok(out);
        }
        for (e, c) in r.terms() {
            out.add_scaled(&self.delta_mono(i, e)?, c);
        }
        Ok(out)
    }

    fn delta_mono(&self, i: usize, e: &Exps) -> Result<OreElement> {
        if let Some(v) = self.cache.delta.read().unwrap().get(&(i, e.clone())) {
            return Ok(v.clone());
        }
        let Some(j) = e.iter().position(|x| *x != 0) else {
            return Ok(OreElement::zero());
        };
        let mut v = e.clone();
        let out = if e[j] > 0 {
            v[j] -= 1;
            let dv = self.delta_mono(i, &v)?;
            let t1 = self.left_mul_gen(j, false, &dv)?.scale(&self.lambda[i][j]);
            let t2 = if self.delta[i][j].is_zero() { OreElement::zero() } else { self.mul(&self.delta[i][j], &self.mono(v))? };
            t1.add(&t2)
        } else {
            if !self.delta[i][j].is_zero() {
                return Err(Error::Domain(format!("delta_{} of the inverted {} is undefined here", self.vars[i], self.vars[j])));
            }
            v[j] += 1;
            let dv = self.delta_mono(i, &v)?;
            self.left_mul_gen(j, true, &dv)?.scale(&self.lambda[i][j].inv()?)
        };
        self.cache.delta.write().unwrap().insert((i, e.clone()), out.clone());
        Ok(out)
    }

    /// Verifies `delta_i tau_i = q_i tau_i delta_i` on the generators below `x_i`
    /// and returns `q_i`.
    pub fn check_qskew(&self, i: usize) -> Result<Scalar> {
        let q = &self.qskew[i];
        for j in 0..i {
            let d = &self.delta[i][j];
            let lhs = d.scale(&self.lambda[i][j]);
            let rhs = self.tau_unchecked(i, 1, d).scale(q);
            if lhs != rhs {
                return Err(Error::Verification(format!(
                    "delta tau != ({q}) tau delta on {} for {}",
                    self.vars[j], self.vars[i]
                )));
            }
        }
        Ok(q.clone())
    }

    /// The table `d_n(x_j) = delta^n(x_j) / (n)!_{q_i}` for `j < i`, built in the
    /// generic lift and specialized.
    fn hd_table(&self, i: usize) -> Result<Arc<HdTable>> {
        if let Some(t) = self.cache.table.read().unwrap().get(&i) {
            return t.clone();
        }
        let t = self.build_hd_table(i).map(Arc::new);
        self.cache.table.write().unwrap().insert(i, t.clone());
        t
    }

    fn build_hd_table(&self, i: usize) -> Result<HdTable> {
        if self.delta_zero[i] {
            return Ok((0..i).map(|j| vec![self.var(j)]).collect());
        }
        if let Some(lift) = &self.lift {
            let generic = lift.spec.hd_table(i)?;
            let target = &self.field;
            return generic
                .iter()
                .map(|row| row.iter().map(|d| d.map_coeffs(|c| c.specialize(target, &lift.values))).collect())
                .collect();
        }
        let generic = matches!(self.field, ScalarField::Generic(_));
        let q = &self.qskew[i];
        let mut table = Vec::with_capacity(i);
        for j in 0..i {
            let mut row = vec![self.var(j)];
            let mut cur = self.var(j);
            for n in 1.. {
                cur = self.apply_delta_unchecked(i, &cur)?;
                if cur.is_zero() {
                    break;
                }
                if n > self.max_index {
                    return Err(Error::NotLocallyNilpotent(self.max_index));
                }
                let fact = t_factorial_at(q, n as u32);
                if fact.is_zero() {
                    return Err(Error::Usage(format!(
                        "({n})! vanishes for {}; a generic lift is required",
                        self.vars[i]
                    )));
                }
                let dn = cur.scale(&fact.inv()?);
                if generic {
                    extension_certificate(&fact, &dn, n, &self.vars[j])?;
                }
                row.push(dn);
            }
            table.push(row);
        }
        Ok(table)
    }

    /// `d_n(r)` for the higher derivation attached to `x_i`.
    pub fn apply_hd(&self, i: usize, n: usize, r: &OreElement) -> Result<OreElement> {
        self.check_below(r, i)?;
        self.apply_hd_unchecked(i, n, r)
    }

    fn apply_hd_unchecked(&self, i: usize, n: usize, r: &OreElement) -> Result<OreElement> {
        if n == 0 {
            return Ok(r.clone());
        }
        let mut out = OreElement::zero();
        for (e, c) in r.terms() {
            out.add_scaled(&self.hd_mono(i, n, e)?, c);
        }
        Ok(out)
    }

    fn hd_mono(&self, i: usize, n: usize, e: &Exps) -> Result<OreElement> {
        if n == 0 {
            return Ok(self.mono(e.clone()));
        }
        let key = (i, n, e.clone());
        if let Some(v) = self.cache.hd.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let Some(j) = e.iter().position(|x| *x != 0) else {
            return Ok(OreElement::zero());
        };
        let table = self.hd_table(i)?;
        let mut v = e.clone();
        let out = if e[j] > 0 {
            v[j] -= 1;
            let mut acc = OreElement::zero();
            for (a, da) in table[j].iter().enumerate().take(n + 1) {
                let dv = self.hd_mono(i, n - a, &v)?;
                if dv.is_zero() {
                    continue;
                }
                let t = self.tau_unchecked(i, (n - a) as i64, da);
                acc = acc.add(&self.mul(&t, &dv)?);
            }
            acc
        } else {
            if table[j].len() > 1 {
                return Err(Error::Domain(format!("higher derivation of the inverted {} is undefined here", self.vars[j])));
            }
            v[j] += 1;
            let dv = self.hd_mono(i, n, &v)?;
            let s = self.lambda[i][j].pow(-(n as i64))?;
            self.left_mul_gen(j, true, &dv)?.scale(&s)
        };
        self.cache.hd.write().unwrap().insert(key, out.clone());
        Ok(out)
    }

    pub fn format(&self, a: &OreElement) -> String {
        format_element(&self.vars, a)
    }

    pub fn parse_element(&self, s: &str) -> Result<OreElement> {
        crate::ore::parse::parse_element(self, s)
    }
}

/// Rejects `d_n` whose coefficients keep a factor of the numerator of `(n)!`;
/// such a factor vanishes at some root of unity and the extension would not
/// survive specialization.
fn extension_certificate(fact: &Scalar, dn: &OreElement, n: usize, var: &str) -> Result<()> {
    let Some((fnum, _)) = fact.as_fraction() else { return Ok(()) };
    for (_, c) in dn.terms() {
        let (_, den) = c.as_fraction().expect("generic field");
        if den.as_const().is_some() {
            continue;
        }
        // a monomial common factor is a unit of the Laurent ring
        if mpoly::gcd(den, fnum).len() > 1 {
            return Err(Error::NotExtendable(format!("delta^{n}({var}) is not divisible by ({n})!")));
        }
    }
    Ok(())
}

pub fn format_element(vars: &[String], a: &OreElement) -> String {
    if a.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (e, c)) in a.terms().rev().enumerate() {
        let mono: Vec<String> = e
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != 0)
            .map(|(i, x)| if *x == 1 { vars[i].clone() } else { format!("{}^{}", vars[i], x) })
            .collect();
        let cs = c.to_string();
        let (neg, body) = match cs.strip_prefix('-') {
            Some(rest) if !rest.contains([' ', '/']) || c.as_rational().is_some() => (true, rest.to_string()),
            _ => (false, cs.clone()),
        };
        let simple = !body.contains([' ', '/', '*']);
        let coef = if simple { body.clone() } else { format!("({body})") };
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        match (mono.is_empty(), body == "1") {
            (true, _) => out.push_str(&coef),
            (false, true) => out.push_str(&mono.join("*")),
            (false, false) => {
                out.push_str(&coef);
                out.push('*');
                out.push_str(&mono.join("*"));
            }
        }
    }
    out
}

/// Accessor for the higher q-skew derivation `{d_n}` extending `delta_i`.
pub struct HigherDerivation<'a> {
    pub spec: &'a OreSpec,
    pub target: usize,
}

/// Builds the higher derivation of `x_i`, failing when the generator table
/// cannot be formed.
pub fn higher_derivation(spec: &OreSpec, i: usize) -> Result<HigherDerivation<'_>> {
    if i >= spec.n() {
        return Err(Error::Usage(format!("variable index {i} out of range")));
    }
    spec.hd_table(i)?;
    Ok(HigherDerivation { spec, target: i })
}

impl HigherDerivation<'_> {
    pub fn apply(&self, n: usize, r: &OreElement) -> Result<OreElement> {
        self.spec.apply_hd(self.target, n, r)
    }

    /// `d_n(x_j)` for `j` below the target, zero past the table.
    pub fn generator_image(&self, j: usize, n: usize) -> Result<OreElement> {
        let t = self.spec.hd_table(self.target)?;
        Ok(t[j].get(n).cloned().unwrap_or_default())
    }

    /// Smallest `m` with `d_n(r) = 0` for `m <= n <= m + 4`.
    pub fn nilpotence_index(&self, r: &OreElement) -> Result<usize> {
        let cap = self.spec.max_index;
        let mut n = 0;
        while n <= cap {
            if (n..n + 5).try_fold(true, |ok, k| Ok::<_, Error>(ok && self.apply(k, r)?.is_zero()))? {
                return Ok(n);
            }
            n += 1;
        }
        Err(Error::NotLocallyNilpotent(cap))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HdReport {
    pub nilpotence: Vec<usize>,
    pub failures: Vec<String>,
}

impl HdReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the defining identities of an iterative, locally nilpotent higher
/// q-skew derivation on the samples (and on their pairwise products).
pub fn check_hd_properties(hd: &HigherDerivation<'_>, samples: &[OreElement]) -> Result<HdReport> {
    let spec = hd.spec;
    let i = hd.target;
    let q = &spec.qskew[i];
    let mut rep = HdReport::default();
    let mut idx = Vec::new();
    for r in samples {
        let m = hd.nilpotence_index(r)?;
        idx.push(m);
        rep.nilpotence.push(m);
        if hd.apply(0, r)? != *r {
            rep.failures.push(format!("d_0 != id on {}", spec.format(r)));
        }
        for n in 0..=m + 1 {
            let lhs = hd.apply(n, &spec.tau(i, 1, r)?)?;
            let rhs = spec.tau(i, 1, &hd.apply(n, r)?)?.scale(&q.pow(n as i64)?);
            if lhs != rhs {
                rep.failures.push(format!("d_{n} tau != q^{n} tau d_{n} on {}", spec.format(r)));
            }
        }
        for a in 0..=m {
            for b in 0..=m - a {
                let lhs = hd.apply(a, &hd.apply(b, r)?)?;
                let c = t_binomial_at(q, (a + b) as u32, b as u32);
                let rhs = hd.apply(a + b, r)?.scale(&c);
                if lhs != rhs {
                    rep.failures.push(format!("d_{a} d_{b} != binom({}, {b}) d_{} on {}", a + b, a + b, spec.format(r)));
                }
            }
        }
    }
    for (x, r) in samples.iter().enumerate() {
        for (y, s) in samples.iter().enumerate() {
            let rs = spec.mul(r, s)?;
            for n in 0..=idx[x] + idx[y] {
                let lhs = hd.apply(n, &rs)?;
                let mut rhs = OreElement::zero();
                for a in 0..=n {
                    let t = spec.tau(i, (n - a) as i64, &hd.apply(a, r)?)?;
                    rhs = rhs.add(&spec.mul(&t, &hd.apply(n - a, s)?)?);
                }
                if lhs != rhs {
                    rep.failures.push(format!("product rule fails for d_{n} on ({}) * ({})", spec.format(r), spec.format(s)));
                }
            }
        }
    }
    Ok(rep)
}

// JSON ------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TermWire {
    pub coeff: String,
    pub exponents: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ElementWire {
    pub terms: Vec<TermWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DeltaWire {
    pub var: String,
    pub of: String,
    pub terms: Vec<TermWire>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LiftWire {
    pub spec: SpecWire,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpecWire {
    pub field: FieldDesc,
    pub vars: Vec<String>,
    pub lambda: Vec<Vec<String>>,
    pub qskew: Vec<String>,
    #[serde(default)]
    pub delta: Vec<DeltaWire>,
    #[serde(default)]
    pub invertible: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<Box<LiftWire>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_index: Option<usize>,
}

pub fn element_to_wire(a: &OreElement) -> ElementWire {
    ElementWire {
        terms: a.terms().map(|(e, c)| TermWire { coeff: c.to_string(), exponents: e.clone() }).collect(),
    }
}

pub fn element_from_wire(field: &ScalarField, w: &ElementWire) -> Result<OreElement> {
    terms_from_wire(field, &w.terms)
}

fn terms_from_wire(field: &ScalarField, ts: &[TermWire]) -> Result<OreElement> {
    let mut out = OreElement::zero();
    for t in ts {
        out.add_term(t.exponents.clone(), field.parse(&t.coeff)?);
    }
    Ok(out)
}

impl OreSpec {
    pub fn to_wire(&self) -> SpecWire {
        let n = self.n();
        let mut delta = Vec::new();
        for i in 0..n {
            for j in 0..i {
                if !self.delta[i][j].is_zero() {
                    delta.push(DeltaWire {
                        var: self.vars[i].clone(),
                        of: self.vars[j].clone(),
                        terms: element_to_wire(&self.delta[i][j]).terms,
                    });
                }
            }
        }
        SpecWire {
            field: FieldDesc::of(&self.field),
            vars: self.vars.clone(),
            lambda: self.lambda.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
            qskew: self.qskew.iter().map(|c| c.to_string()).collect(),
            delta,
            invertible: (0..n).filter(|i| self.invertible[*i]).collect(),
            lift: self.lift.as_ref().map(|l| {
                Box::new(LiftWire { spec: l.spec.to_wire(), values: l.values.iter().map(|c| c.to_string()).collect() })
            }),
            max_index: (self.max_index != DEFAULT_MAX_INDEX).then_some(self.max_index),
        }
    }

    pub fn from_wire(w: &SpecWire) -> Result<Self> {
        let field = w.field.build()?;
        let n = w.vars.len();
        let parse_all = |v: &[String]| v.iter().map(|s| field.parse(s)).collect::<Result<Vec<_>>>();
        let lambda = w.lambda.iter().map(|r| parse_all(r)).collect::<Result<Vec<_>>>()?;
        let qskew = parse_all(&w.qskew)?;
        let index = |name: &str| {
            w.vars.iter().position(|v| v == name).ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))
        };
        let mut delta = vec![vec![OreElement::zero(); n]; n];
        for d in &w.delta {
            let (i, j) = (index(&d.var)?, index(&d.of)?);
            delta[i][j] = terms_from_wire(&field, &d.terms)?;
        }
        let mut invertible = vec![false; n];
        for &i in &w.invertible {
            *invertible.get_mut(i).ok_or_else(|| Error::Parse(format!("invertible index {i} out of range")))? = true;
        }
        let mut spec = Self::new(field.clone(), w.vars.clone(), lambda, qskew, delta, invertible)?;
        if let Some(m) = w.max_index {
            spec.max_index = m;
        }
        if let Some(l) = &w.lift {
            let ls = Self::from_wire(&l.spec)?;
            let values = parse_all(&l.values)?;
            spec = spec.with_lift(Arc::new(ls), values)?;
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_wire()).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: SpecWire = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_wire(&w)
    }
}

/// Convenience builder used by the family constructors and tests.
pub struct SpecBuilder {
    field: ScalarField,
    vars: Vec<String>,
    lambda: Vec<Vec<Scalar>>,
    qskew: Vec<Scalar>,
    delta: Vec<Vec<OreElement>>,
}

impl SpecBuilder {
    pub fn new<S: AsRef<str>>(field: &ScalarField, vars: &[S]) -> Self {
        let n = vars.len();
        let one = field.one();
        Self {
            field: field.clone(),
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
            lambda: vec![vec![one.clone(); n]; n],
            qskew: vec![one; n],
            delta: vec![vec![OreElement::zero(); n]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// Sets `tau_i(x_j) = c x_j` for `j < i`.
    pub fn tau(&mut self, i: usize, j: usize, c: Scalar) -> Result<&mut Self> {
        assert!(j < i, "tau_i(x_j) needs j < i");
        self.lambda[j][i] = c.inv()?;
        self.lambda[i][j] = c;
        Ok(self)
    }

    pub fn delta(&mut self, i: usize, j: usize, d: OreElement) -> &mut Self {
        self.delta[i][j] = d;
        self
    }

    pub fn qskew(&mut self, i: usize, q: Scalar) -> &mut Self {
        self.qskew[i] = q;
        self
    }

    pub fn mono(&self, e: &[(usize, i64)], c: Scalar) -> OreElement {
        let mut x = vec![0; self.n()];
        for (i, p) in e {
            x[*i] += p;
        }
        OreElement::monomial(x, c)
    }

    pub fn build(self) -> Result<OreSpec> {
        let n = self.n();
        OreSpec::new(self.field, self.vars, self.lambda, self.qskew, self.delta, vec![false; n])
    }
}

mod parse {
    //! Reader for ring elements: scalar expressions and variable names with
    //! `+ - *`, `^` (integer exponents, negative only on invertible variables).

    use super::{OreElement, OreSpec};
    use crate::error::{Error, Result};

    pub fn parse_element(spec: &OreSpec, s: &str) -> Result<OreElement> {
        let mut p = P { s: s.as_bytes(), pos: 0, spec };
        let v = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(Error::Parse(format!("trailing input in {s:?}")));
        }
        Ok(v)
    }

    struct P<'a> {
        s: &'a [u8],
        pos: usize,
        spec: &'a OreSpec,
    }

    impl P<'_> {
        fn ws(&mut self) {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }

        fn peek(&mut self) -> Option<u8> {
            self.ws();
            self.s.get(self.pos).copied()
        }

        fn err(&self, m: &str) -> Error {
            Error::Parse(format!("{m} at offset {}", self.pos))
        }

        fn expr(&mut self) -> Result<OreElement> {
            let mut acc = self.term()?;
            while let Some(c @ (b'+' | b'-')) = self.peek() {
                self.pos += 1;
                let t = self.term()?;
                acc = if c == b'+' { acc.add(&t) } else { acc.sub(&t) };
            }
            Ok(acc)
        }

        fn term(&mut self) -> Result<OreElement> {
            let mut acc = self.factor()?;
            loop {
                match self.peek() {
                    Some(b'*') => {
                        self.pos += 1;
                        let f = self.factor()?;
                        acc = self.spec.mul(&acc, &f)?;
                    }
                    Some(b'/') => {
                        self.pos += 1;
                        let f = self.factor()?;
                        let c = constant_of(&f).ok_or_else(|| self.err("can only divide by scalars"))?;
                        acc = acc.scale(&c.inv()?);
                    }
                    _ => return Ok(acc),
                }
            }
        }

        fn factor(&mut self) -> Result<OreElement> {
            if self.peek() == Some(b'-') {
                self.pos += 1;
                return Ok(self.factor()?.neg());
            }
            let base = self.atom()?;
            if self.peek() != Some(b'^') {
                return Ok(base);
            }
            self.pos += 1;
            let mut neg = false;
            let paren = self.peek() == Some(b'(');
            if paren {
                self.pos += 1;
            }
            if self.peek() == Some(b'-') {
                self.pos += 1;
                neg = true;
            }
            self.ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let k: i64 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("expected exponent"))?;
            if paren {
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
            }
            let k = if neg { -k } else { k };
            if let Some(c) = constant_of(&base) {
                return Ok(self.spec.constant(c.pow(k)?));
            }
            if k < 0 {
                if base.len() == 1 {
                    let (e, c) = base.terms().next().unwrap();
                    if c.is_one() && e.iter().filter(|x| **x != 0).count() == 1 {
                        return Ok(self.spec.mono(e.iter().map(|x| x * k).collect()));
                    }
                }
                return Err(self.err("negative powers only of single variables"));
            }
            self.spec.pow(&base, k as u32)
        }

        fn atom(&mut self) -> Result<OreElement> {
            match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let v = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.err("expected ')'"));
                    }
                    self.pos += 1;
                    Ok(v)
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = self.pos;
                    while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let t = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                    Ok(self.spec.constant(self.spec.field.parse(t)?))
                }
                Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                    let start = self.pos;
                    while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                        self.pos += 1;
                    }
                    let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                    if let Ok(i) = self.spec.var_index(name) {
                        return Ok(self.spec.var(i));
                    }
                    Ok(self.spec.constant(self.spec.field.param(name)?))
                }
                _ => Err(self.err("unexpected input")),
            }
        }
    }

    fn constant_of(a: &OreElement) -> Option<crate::scalars::Scalar> {
        if a.is_zero() {
            return None;
        }
        if a.len() != 1 {
            return None;
        }
        let (e, c) = a.terms().next().unwrap();
        e.iter().all(|x| *x == 0).then(|| c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a1(field: &ScalarField) -> OreSpec {
        let q = field.param("q").unwrap();
        let mut b = SpecBuilder::new(field, &["y", "x"]);
        b.tau(1, 0, q.clone()).unwrap();
        let one = b.mono(&[], field.one());
        b.delta(1, 0, one).qskew(1, q);
        b.build().unwrap()
    }

    #[test]
    fn weyl_relation_products() {
        let f = ScalarField::generic(&["q"]);
        let s = a1(&f);
        let p = |t: &str| s.parse_element(t).unwrap();
        assert_eq!(s.mul(&p("x"), &p("y")).unwrap(), p("q*y*x + 1"));
        assert_eq!(s.mul(&p("y"), &p("y")).unwrap(), p("y^2"));
        assert_eq!(s.mul(&p("x^2"), &p("y")).unwrap(), p("q^2*y*x^2 + (1 + q)*x"));
    }

    #[test]
    fn delta_values() {
        let f = ScalarField::generic(&["q"]);
        let s = a1(&f);
        let p = |t: &str| s.parse_element(t).unwrap();
        assert_eq!(s.apply_delta(1, &p("y")).unwrap(), p("1"));
        assert!(s.apply_delta(1, &p("1")).unwrap().is_zero());
        assert_eq!(s.apply_delta(1, &p("y^2")).unwrap(), p("(1 + q)*y"));
        assert!(s.apply_delta(1, &p("x")).is_err());
        assert_eq!(s.check_qskew(1).unwrap(), f.param("q").unwrap());
    }

    #[test]
    fn qskew_failure_is_reported() {
        let f = ScalarField::generic(&["q"]);
        let q = f.param("q").unwrap();
        let mut b = SpecBuilder::new(&f, &["y", "x"]);
        b.tau(1, 0, q.clone()).unwrap();
        let y = b.mono(&[(0, 1)], f.one());
        b.delta(1, 0, y).qskew(1, &f.from_int(2) * &q);
        let s = b.build().unwrap();
        assert!(matches!(s.check_qskew(1), Err(Error::Verification(m)) if m.contains('y')));
    }

    #[test]
    fn inverse_of_localized_variable() {
        let f = ScalarField::generic(&["q"]);
        let s = a1(&f).localized(1).unwrap();
        let x = s.var(1);
        let xi = s.var_pow(1, -1);
        let y = s.var(0);
        assert_eq!(s.mul(&x, &xi).unwrap(), s.one());
        assert_eq!(s.mul(&xi, &x).unwrap(), s.one());
        let l = s.mul(&xi, &y).unwrap();
        assert_eq!(s.mul(&x, &l).unwrap(), y);
        let y3 = s.pow(&y, 3).unwrap();
        let l3 = s.mul(&xi, &y3).unwrap();
        assert_eq!(s.mul(&x, &l3).unwrap(), y3);
    }

    #[test]
    fn higher_derivation_at_root_of_unity() {
        let g = ScalarField::generic(&["q"]);
        let lift = Arc::new(a1(&g));
        for l in 2..=5u64 {
            let c = ScalarField::cyclotomic(l).unwrap();
            let s = a1(&c).with_lift(lift.clone(), vec![c.generator()]).unwrap();
            let hd = higher_derivation(&s, 1).unwrap();
            for i in 0..=(2 * l as usize) {
                let yi = s.pow(&s.var(0), i as u32).unwrap();
                assert_eq!(hd.apply(i, &yi).unwrap(), s.one(), "l={l} i={i}");
                assert!(hd.apply(i + 1, &yi).unwrap().is_zero());
            }
            let y = s.var(0);
            assert!(hd.apply(2, &y).unwrap().is_zero());
            let y3 = s.pow(&y, 3).unwrap();
            let rep = check_hd_properties(&hd, &[y.clone(), y3, s.one()]).unwrap();
            assert!(rep.passed(), "{:?}", rep.failures);
            assert_eq!(rep.nilpotence, vec![2, 4, 1]);
        }
    }

    #[test]
    fn without_lift_the_division_is_refused() {
        let c = ScalarField::cyclotomic(2).unwrap();
        let q = c.generator();
        let mut b = SpecBuilder::new(&c, &["y", "z", "x"]);
        b.tau(2, 0, q.clone()).unwrap();
        b.tau(2, 1, q.clone()).unwrap();
        let yz = b.mono(&[(0, 1), (1, 1)], c.one());
        b.delta(2, 0, b.mono(&[], c.one())).delta(2, 1, yz).qskew(2, q);
        let s = b.build().unwrap();
        let r = higher_derivation(&s, 2);
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = ScalarField::generic(&["q"]);
        let lift = Arc::new(a1(&g));
        let c = ScalarField::cyclotomic(3).unwrap();
        let s = a1(&c).with_lift(lift, vec![c.generator()]).unwrap();
        let j = s.to_json();
        let back = OreSpec::from_json(&j).unwrap();
        assert_eq!(back.to_json(), j);
        assert_eq!(back.lambda, s.lambda);
        assert_eq!(back.delta, s.delta);
    }
}
