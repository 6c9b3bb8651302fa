//! Concrete families of iterated skew polynomial rings: their Ore
//! presentations, exponent matrices and closed-form PI degrees.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ore::{OreElement, OreSpec, SpecBuilder};
use crate::pidegree::IntMatrix;
use crate::scalars::{FieldMode, Scalar, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    EuclideanOdd,
    EuclideanEven,
    WeylSingle,
    WeylMulti,
    MatricesSingle,
    MatricesMulti,
    Symplectic,
    Kpq,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 8] = [
        Self::EuclideanOdd,
        Self::EuclideanEven,
        Self::WeylSingle,
        Self::WeylMulti,
        Self::MatricesSingle,
        Self::MatricesMulti,
        Self::Symplectic,
        Self::Kpq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::EuclideanOdd => "euclidean-odd",
            Self::EuclideanEven => "euclidean-even",
            Self::WeylSingle => "weyl-single",
            Self::WeylMulti => "weyl-multi",
            Self::MatricesSingle => "matrices-single",
            Self::MatricesMulti => "matrices-multi",
            Self::Symplectic => "symplectic",
            Self::Kpq => "kpq",
        }
    }

    /// Families determined by a single root of unity.
    pub fn is_single(self) -> bool {
        !matches!(self, Self::WeylMulti | Self::MatricesMulti | Self::Kpq)
    }

    pub fn min_n(self) -> usize {
        match self {
            Self::EuclideanEven => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown family {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilyId {
    pub kind: FamilyKind,
    pub n: usize,
}

impl FamilyId {
    pub fn new(kind: FamilyKind, n: usize) -> Result<Self> {
        if n < kind.min_n() {
            return Err(Error::Domain(format!("{kind} needs n >= {}", kind.min_n())));
        }
        if n > 9 && matches!(kind, FamilyKind::WeylMulti | FamilyKind::MatricesMulti | FamilyKind::Kpq) {
            return Err(Error::Domain("multi-parameter families support n <= 9".into()));
        }
        Ok(Self { kind, n })
    }

    /// Number of generators.
    pub fn rank(&self) -> usize {
        match self.kind {
            FamilyKind::EuclideanOdd => 2 * self.n + 1,
            FamilyKind::MatricesSingle | FamilyKind::MatricesMulti => self.n * self.n,
            _ => 2 * self.n,
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={})", self.kind, self.n)
    }
}

/// Parameters written as powers of one primitive `r`-th root of unity `q`:
/// `q_i = q^{b_i}`, `p_i = q^{c_i}`, `gamma_ij` (or `p_ij` for matrices)
/// `= q^{bmat[i][j]}`, `lambda = q^{lam}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentAssignment {
    pub r: u64,
    #[serde(default)]
    pub b: Vec<i64>,
    #[serde(default)]
    pub c: Vec<i64>,
    #[serde(default)]
    pub bmat: Vec<Vec<i64>>,
    #[serde(default)]
    pub lam: i64,
}

impl ExponentAssignment {
    /// The assignment a single-parameter family is a specialization of.
    pub fn canonical(kind: FamilyKind, n: usize, r: u64) -> Self {
        let anti = |upper: i64| -> Vec<Vec<i64>> {
            (0..n).map(|i| (0..n).map(|j| (j as i64 - i as i64).signum() * upper).collect()).collect()
        };
        let zero = ExponentAssignment { r, b: vec![0; n], c: vec![0; n], bmat: anti(0), lam: 0 };
        match kind {
            FamilyKind::WeylSingle => ExponentAssignment { b: vec![1; n], ..zero },
            FamilyKind::Symplectic => ExponentAssignment { b: vec![-2; n], bmat: anti(1), ..zero },
            FamilyKind::EuclideanEven => ExponentAssignment { c: vec![-2; n], bmat: anti(-1), ..zero },
            FamilyKind::MatricesSingle => ExponentAssignment { lam: -2, bmat: anti(-1), ..zero },
            _ => zero,
        }
    }

    fn validate(&self, id: &FamilyId) -> Result<()> {
        let n = id.n;
        if self.r == 0 {
            return Err(Error::Domain("r must be positive".into()));
        }
        if self.bmat.len() != n || self.bmat.iter().any(|row| row.len() != n) {
            return Err(Error::Usage(format!("bmat must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                if self.bmat[i][j] != -self.bmat[j][i] {
                    return Err(Error::Domain("bmat must be skew-symmetric".into()));
                }
            }
        }
        let need_b = matches!(id.kind, FamilyKind::WeylMulti | FamilyKind::Kpq);
        if need_b && self.b.len() != n {
            return Err(Error::Usage(format!("b must have {n} entries")));
        }
        if id.kind == FamilyKind::Kpq {
            if self.c.len() != n {
                return Err(Error::Usage(format!("c must have {n} entries")));
            }
            let r = self.r as i64;
            if (0..n).any(|i| (self.b[i] - self.c[i]).rem_euclid(r) == 0) {
                return Err(Error::Domain("p_i = q_i at this root of unity".into()));
            }
        }
        Ok(())
    }
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Parameter names of the generic presentation, in field order.
pub fn family_params(id: &FamilyId) -> Vec<String> {
    let n = id.n;
    let gs = |p: &'static str| upper_pairs(n).map(move |(i, j)| format!("{p}{}{}", i + 1, j + 1));
    match id.kind {
        FamilyKind::EuclideanOdd => vec!["s".into()],
        FamilyKind::WeylMulti => (1..=n).map(|i| format!("q{i}")).chain(gs("g")).collect(),
        FamilyKind::Kpq => (1..=n).map(|i| format!("q{i}")).chain((1..=n).map(|i| format!("p{i}"))).chain(gs("g")).collect(),
        FamilyKind::MatricesMulti => std::iter::once("lam".to_string()).chain(gs("p")).collect(),
        _ => vec!["q".into()],
    }
}

pub fn generic_field(id: &FamilyId) -> ScalarField {
    match id.kind {
        FamilyKind::EuclideanOdd => ScalarField::generic_with_sqrt::<&str>(&[]),
        _ => ScalarField::generic(&family_params(id)),
    }
}

/// Exponents of the root of unity substituted for each parameter of
/// [`family_params`].
pub fn param_exponents(id: &FamilyId, a: &ExponentAssignment) -> Result<Vec<i64>> {
    let n = id.n;
    if id.kind.is_single() {
        return Ok(vec![1]);
    }
    a.validate(id)?;
    let g = upper_pairs(n).map(|(i, j)| a.bmat[i][j]);
    Ok(match id.kind {
        FamilyKind::WeylMulti => a.b.iter().copied().chain(g).collect(),
        FamilyKind::Kpq => a.b.iter().chain(&a.c).copied().chain(g).collect(),
        FamilyKind::MatricesMulti => std::iter::once(a.lam).chain(g).collect(),
        _ => unreachable!(),
    })
}

/// Field the family is specialized into at order `r`; the odd Euclidean
/// family needs a square root of `q`, so it uses `Q(zeta_{2r})`.
pub fn root_field(id: &FamilyId, r: u64) -> Result<ScalarField> {
    match id.kind {
        FamilyKind::EuclideanOdd => ScalarField::cyclotomic(2 * r),
        _ => ScalarField::cyclotomic(r),
    }
}

// Exponent matrices ------------------------------------------------------

fn skew_from_upper(n: usize, f: impl Fn(usize, usize) -> i64) -> Result<IntMatrix> {
    let mut rows = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = f(i, j);
            rows[i][j] = v;
            rows[j][i] = -v;
        }
    }
    IntMatrix::from_i64(&rows)
}

/// Matrix for the `y_i, x_i` families from the q-exponents of
/// `q_i, p_i, gamma_ij`.
fn kpq_matrix(n: usize, b: &[i64], c: &[i64], g: &[Vec<i64>]) -> Result<IntMatrix> {
    skew_from_upper(2 * n, |u, v| {
        let (i, ti) = (u / 2, u % 2);
        let (j, tj) = (v / 2, v % 2);
        if i == j {
            return -b[i];
        }
        // i < j
        match (ti, tj) {
            (0, 0) => g[i][j],
            (0, 1) => g[j][i] - b[i],
            (1, 0) => g[j][i] + c[j],
            _ => b[i] + g[i][j] - c[j],
        }
    })
}

fn matrices_matrix(n: usize, lam: i64, p: &[Vec<i64>]) -> Result<IntMatrix> {
    skew_from_upper(n * n, |u, v| {
        let (i, a) = (u / n, u % n);
        let (j, b) = (v / n, v % n);
        if i == j {
            return p[b][a];
        }
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => p[i][j] - lam,
            std::cmp::Ordering::Less => p[i][j] + p[b][a],
            std::cmp::Ordering::Greater => p[i][j] + p[b][a] - lam,
        }
    })
}

fn euclidean_odd_matrix(n: usize) -> Result<IntMatrix> {
    // 1-based: w is 1, y_i is 2i, x_i is 2i+1
    skew_from_upper(2 * n + 1, |u, v| {
        let (a, b) = (u + 1, v + 1);
        if a > 1 && a / 2 == b / 2 {
            0
        } else if b % 2 == 0 {
            1
        } else {
            -1
        }
    })
}

/// Skew-symmetric exponent matrix of the associated quantum torus:
/// entry `(i, j)` is the exponent of `q` in `x_i x_j = q^{m_ij} x_j x_i`.
pub fn family_matrix(id: &FamilyId, assign: Option<&ExponentAssignment>) -> Result<IntMatrix> {
    let n = id.n;
    let canon;
    let a = if id.kind.is_single() {
        canon = ExponentAssignment::canonical(id.kind, n, 0);
        &canon
    } else {
        let a = assign.ok_or_else(|| Error::Usage(format!("{} needs an exponent assignment", id.kind)))?;
        a.validate(id)?;
        a
    };
    match id.kind {
        FamilyKind::EuclideanOdd => euclidean_odd_matrix(n),
        FamilyKind::WeylSingle | FamilyKind::WeylMulti => kpq_matrix(n, &a.b, &vec![0; n], &a.bmat),
        FamilyKind::Kpq | FamilyKind::Symplectic | FamilyKind::EuclideanEven => kpq_matrix(n, &a.b, &a.c, &a.bmat),
        FamilyKind::MatricesSingle | FamilyKind::MatricesMulti => matrices_matrix(n, a.lam, &a.bmat),
    }
}

// Ore presentations ------------------------------------------------------

struct Params {
    field: ScalarField,
}

impl Params {
    fn p(&self, name: &str) -> Scalar {
        self.field.param(name).expect("family parameter")
    }
    fn int(&self, k: i64) -> Scalar {
        self.field.from_int(k)
    }
}

/// `y_1, x_1, ..., y_n, x_n` with `sigma_i(y_j) = gamma_ij y_j`,
/// `sigma_i(x_j) = p_i^{-1} gamma_ji x_j`, `tau_i(y_j) = q_j gamma_ji y_j`,
/// `tau_i(x_j) = q_j^{-1} p_i gamma_ij x_j`, `tau_i(y_i) = q_i y_i` and
/// `delta_i(y_i) = [1 +] sum_{l<i} (q_l - p_l) y_l x_l`.
fn kpq_spec(
    field: &ScalarField,
    q: &[Scalar],
    p: &[Scalar],
    g: &dyn Fn(usize, usize) -> Scalar,
    with_one: bool,
) -> Result<OreSpec> {
    let n = q.len();
    let vars: Vec<String> = (1..=n).flat_map(|i| [format!("y{i}"), format!("x{i}")]).collect();
    let mut b = SpecBuilder::new(field, &vars);
    let one = field.one();
    for i in 0..n {
        let (yi, xi) = (2 * i, 2 * i + 1);
        let pinv = p[i].inv()?;
        for j in 0..i {
            let (yj, xj) = (2 * j, 2 * j + 1);
            b.tau(yi, yj, g(i, j))?;
            b.tau(yi, xj, &pinv * &g(j, i))?;
            b.tau(xi, yj, &q[j] * &g(j, i))?;
            b.tau(xi, xj, &(&q[j].inv()? * &p[i]) * &g(i, j))?;
        }
        b.tau(xi, yi, q[i].clone())?;
        let mut d = if with_one { b.mono(&[], one.clone()) } else { OreElement::zero() };
        for l in 0..i {
            d = d.add(&b.mono(&[(2 * l, 1), (2 * l + 1, 1)], &q[l] - &p[l]));
        }
        b.delta(xi, yi, d);
        b.qskew(xi, q[i].div(&p[i])?);
    }
    b.build()
}

fn euclidean_odd_spec(field: &ScalarField, n: usize) -> Result<OreSpec> {
    let s = field.param("s")?;
    let q = &s * &s;
    let qi = q.inv()?;
    let mut vars = vec!["w".to_string()];
    vars.extend((1..=n).flat_map(|i| [format!("y{i}"), format!("x{i}")]));
    let mut b = SpecBuilder::new(field, &vars);
    for i in 0..n {
        let (yi, xi) = (2 * i + 1, 2 * i + 2);
        b.tau(yi, 0, qi.clone())?;
        b.tau(xi, 0, q.clone())?;
        for j in 0..i {
            let (yj, xj) = (2 * j + 1, 2 * j + 2);
            b.tau(yi, yj, qi.clone())?;
            b.tau(yi, xj, qi.clone())?;
            b.tau(xi, yj, q.clone())?;
            b.tau(xi, xj, q.clone())?;
        }
        b.tau(xi, yi, field.one())?;
        let mut d = b.mono(&[(0, 2)], &s - &s.pow(3)?);
        let c = &field.one() - &q.pow(2)?;
        for l in 0..i {
            d = d.add(&b.mono(&[(2 * l + 1, 1), (2 * l + 2, 1)], c.clone()));
        }
        b.delta(xi, yi, d);
        b.qskew(xi, q.pow(-2)?);
    }
    b.build()
}

/// Variables `x_ij` in lexicographic order. For `(i, j) < (l, m)`:
/// `tau_lm(x_ij)` is `p_li p_jm x_ij` when `l > i, m > j`, `lambda p_li p_jm
/// x_ij` when `l > i, m <= j`, `p_jm x_ij` when `l = i`; and
/// `delta_lm(x_ij) = (lambda - 1) p_li x_im x_lj` when `l > i, m > j`.
fn matrices_spec(field: &ScalarField, n: usize, lam: &Scalar, p: &dyn Fn(usize, usize) -> Scalar) -> Result<OreSpec> {
    let idx = |i: usize, j: usize| i * n + j;
    let vars: Vec<String> = (0..n * n).map(|k| format!("x{}{}", k / n + 1, k % n + 1)).collect();
    let mut b = SpecBuilder::new(field, &vars);
    for l in 0..n {
        for m in 0..n {
            let t = idx(l, m);
            for u in 0..t {
                let (i, j) = (u / n, u % n);
                let c = if l > i {
                    let base = &p(l, i) * &p(j, m);
                    if m > j {
                        let coef = &(lam - &field.one()) * &p(l, i);
                        let d = b.mono(&[(idx(i, m), 1), (idx(l, j), 1)], coef);
                        b.delta(t, u, d);
                        base
                    } else {
                        lam * &base
                    }
                } else {
                    p(j, m)
                };
                b.tau(t, u, c)?;
            }
            b.qskew(t, lam.inv()?);
        }
    }
    b.build()
}

/// Generic presentation over [`generic_field`].
pub fn generic_spec(id: &FamilyId) -> Result<OreSpec> {
    let field = generic_field(id);
    build_over(id, &field)
}

fn build_over(id: &FamilyId, field: &ScalarField) -> Result<OreSpec> {
    let n = id.n;
    let pr = Params { field: field.clone() };
    match id.kind {
        FamilyKind::EuclideanOdd => euclidean_odd_spec(field, n),
        FamilyKind::WeylMulti | FamilyKind::Kpq => {
            let q: Vec<Scalar> = (1..=n).map(|i| pr.p(&format!("q{i}"))).collect();
            let p: Vec<Scalar> = if id.kind == FamilyKind::Kpq {
                (1..=n).map(|i| pr.p(&format!("p{i}"))).collect()
            } else {
                vec![field.one(); n]
            };
            let g = |i: usize, j: usize| match i.cmp(&j) {
                std::cmp::Ordering::Equal => pr.int(1),
                std::cmp::Ordering::Less => pr.p(&format!("g{}{}", i + 1, j + 1)),
                std::cmp::Ordering::Greater => pr.p(&format!("g{}{}", j + 1, i + 1)).inv().expect("unit"),
            };
            kpq_spec(field, &q, &p, &g, id.kind == FamilyKind::WeylMulti)
        }
        FamilyKind::WeylSingle | FamilyKind::Symplectic | FamilyKind::EuclideanEven => {
            let qq = pr.p("q");
            let a = ExponentAssignment::canonical(id.kind, n, 0);
            let pw = |e: i64| qq.pow(e).expect("unit");
            let q: Vec<Scalar> = a.b.iter().map(|e| pw(*e)).collect();
            let p: Vec<Scalar> = a.c.iter().map(|e| pw(*e)).collect();
            let g = |i: usize, j: usize| pw(a.bmat[i][j]);
            kpq_spec(field, &q, &p, &g, id.kind == FamilyKind::WeylSingle)
        }
        FamilyKind::MatricesMulti => {
            let lam = pr.p("lam");
            let p = |i: usize, j: usize| match i.cmp(&j) {
                std::cmp::Ordering::Equal => pr.int(1),
                std::cmp::Ordering::Less => pr.p(&format!("p{}{}", i + 1, j + 1)),
                std::cmp::Ordering::Greater => pr.p(&format!("p{}{}", j + 1, i + 1)).inv().expect("unit"),
            };
            matrices_spec(field, n, &lam, &p)
        }
        FamilyKind::MatricesSingle => {
            let qq = pr.p("q");
            let a = ExponentAssignment::canonical(id.kind, n, 0);
            let p = |i: usize, j: usize| qq.pow(a.bmat[i][j]).expect("unit");
            matrices_spec(field, n, &qq.pow(a.lam)?, &p)
        }
    }
}

/// The family's presentation over `field`.
///
/// A generic field must carry exactly the family's parameters (see
/// [`family_params`]). Over `Q(zeta_m)` each parameter becomes a power of
/// `zeta_m` as given by `assign` (single-parameter families put `q = zeta_m`,
/// or `s = zeta_m` for the odd Euclidean family), and the result carries the
/// generic presentation as its lift.
pub fn family_ore_spec(id: &FamilyId, field: &ScalarField, assign: Option<&ExponentAssignment>) -> Result<OreSpec> {
    let generic = generic_spec(id)?;
    match field.mode() {
        FieldMode::Generic | FieldMode::GenericWithSqrt => {
            let want = generic.field.param_names();
            if field.param_names() != want || field.mode() != generic.field.mode() {
                return Err(Error::Domain(format!("{} needs a generic field in {:?}", id.kind, want)));
            }
            build_over(id, field)
        }
        FieldMode::Cyclotomic(_) => {
            let exps = if id.kind.is_single() {
                vec![1]
            } else {
                let a = assign.ok_or_else(|| Error::Usage(format!("{} needs an exponent assignment", id.kind)))?;
                param_exponents(id, a)?
            };
            let z = field.generator();
            let values = exps.iter().map(|e| z.pow(*e)).collect::<Result<Vec<_>>>()?;
            specialize_spec(&generic, field, values)
        }
    }
}

/// Presentation of the family at the root of unity described by `assign`.
pub fn family_ore_spec_at(id: &FamilyId, assign: &ExponentAssignment) -> Result<OreSpec> {
    let field = root_field(id, assign.r)?;
    family_ore_spec(id, &field, Some(assign))
}

/// Evaluates every coefficient of a generic presentation and attaches it as lift.
pub fn specialize_spec(generic: &OreSpec, target: &ScalarField, values: Vec<Scalar>) -> Result<OreSpec> {
    let sp = |c: &Scalar| c.specialize(target, &values);
    let lambda = generic.lambda.iter().map(|r| r.iter().map(sp).collect()).collect::<Result<Vec<Vec<_>>>>()?;
    let qskew = generic.qskew.iter().map(sp).collect::<Result<Vec<_>>>()?;
    let delta = generic
        .delta
        .iter()
        .map(|r| r.iter().map(|d| d.map_coeffs(sp)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let spec = OreSpec::new(target.clone(), generic.vars.clone(), lambda, qskew, delta, generic.invertible.clone())?;
    spec.with_lift(Arc::new(generic.clone()), values)
}

/// Reads `lambda` back as a matrix of q-exponents and compares it with
/// [`family_matrix`]: exactly over the generic field (weighting each
/// parameter by its assigned exponent), modulo `r` over a cyclotomic field.
pub fn lambda_matches_family(lambda: &[Vec<Scalar>], id: &FamilyId, assign: Option<&ExponentAssignment>) -> Result<bool> {
    let canon;
    let a = match assign {
        Some(a) => a,
        None => {
            canon = ExponentAssignment::canonical(id.kind, id.n, 0);
            &canon
        }
    };
    let expect = family_matrix(id, Some(a))?;
    let field = lambda[0][0].field();
    let step = if id.kind == FamilyKind::EuclideanOdd { 2 } else { 1 };
    let n = lambda.len();
    if n != expect.rows() {
        return Ok(false);
    }
    match field.mode() {
        FieldMode::Cyclotomic(m) => {
            let z = field.generator();
            let powers: Vec<Scalar> = (0..m as i64).map(|k| z.pow(k)).collect::<Result<_>>()?;
            let r = (m / step as u64) as i64;
            for i in 0..n {
                for j in 0..n {
                    let Some(k) = powers.iter().position(|p| *p == lambda[i][j]) else { return Ok(false) };
                    if k as i64 % step != 0 {
                        return Ok(false);
                    }
                    let e = BigInt::from(k as i64 / step - expect.get(i, j).clone());
                    if !(e % BigInt::from(r)).is_zero() {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        _ => {
            let w = param_exponents(id, a)?;
            for i in 0..n {
                for j in 0..n {
                    let Some((c, e)) = lambda[i][j].as_monomial() else { return Ok(false) };
                    if !c.is_one() {
                        return Ok(false);
                    }
                    let tot: i64 = e.iter().zip(&w).map(|(x, y)| x * y).sum();
                    if tot % step != 0 || BigInt::from(tot / step) != *expect.get(i, j) {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

// Closed forms -----------------------------------------------------------

fn pow(b: u64, e: usize) -> BigInt {
    num_traits::pow(BigInt::from(b), e)
}

fn two_pow(e: usize) -> BigInt {
    BigInt::one() << e
}

/// Closed-form PI degree at a primitive `r`-th root of unity.
pub fn closed_form_pidegree(kind: FamilyKind, n: usize, r: u64) -> Result<BigInt> {
    if r < 2 {
        return Err(Error::Domain("r must be at least 2".into()));
    }
    if n < kind.min_n() {
        return Err(Error::Domain(format!("{kind} needs n >= {}", kind.min_n())));
    }
    let odd = r % 2 == 1;
    let four = r % 4 == 0;
    let v = match kind {
        FamilyKind::EuclideanOdd => {
            let base = pow(r, n);
            if odd {
                base
            } else if !four {
                base / two_pow(n / 2)
            } else {
                base / two_pow(n - 1)
            }
        }
        FamilyKind::WeylSingle => pow(r, n),
        FamilyKind::MatricesSingle => {
            let base = pow(r, n * (n - 1) / 2);
            if odd {
                base
            } else {
                base / two_pow((n - 1) * n.saturating_sub(2) / 2)
            }
        }
        FamilyKind::EuclideanEven => {
            let base = pow(r, n - 1);
            if odd {
                base
            } else if !four {
                base / two_pow((n - 1) / 2)
            } else {
                base / two_pow(n - 2)
            }
        }
        FamilyKind::Symplectic => {
            let base = pow(r, n);
            if odd {
                base
            } else if !four {
                base / two_pow(n.div_ceil(2))
            } else {
                base / two_pow(n)
            }
        }
        k => return Err(Error::NoClosedForm(format!("{k} has no closed form"))),
    };
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(kind: FamilyKind, n: usize) -> FamilyId {
        FamilyId::new(kind, n).unwrap()
    }

    fn rows(m: &IntMatrix) -> Vec<Vec<i64>> {
        m.entries().iter().map(|r| r.iter().map(|x| i64::try_from(x).unwrap()).collect()).collect()
    }

    #[test]
    fn small_matrices() {
        assert_eq!(rows(&family_matrix(&id(FamilyKind::EuclideanOdd, 1), None).unwrap()), vec![
            vec![0, 1, -1],
            vec![-1, 0, 0],
            vec![1, 0, 0]
        ]);
        assert_eq!(rows(&family_matrix(&id(FamilyKind::Symplectic, 1), None).unwrap()), vec![vec![0, 2], vec![-2, 0]]);
        assert_eq!(rows(&family_matrix(&id(FamilyKind::WeylSingle, 1), None).unwrap()), vec![vec![0, -1], vec![1, 0]]);
        let s3 = rows(&family_matrix(&id(FamilyKind::Symplectic, 3), None).unwrap());
        assert_eq!(s3[0], vec![0, 2, 1, 1, 1, 1]);
    }

    #[test]
    fn matrices_single_blocks() {
        for n in 2..=4 {
            let m = rows(&family_matrix(&id(FamilyKind::MatricesSingle, n), None).unwrap());
            for u in 0..n * n {
                for v in 0..n * n {
                    let (i, a, j, b) = (u / n, u % n, v / n, v % n);
                    let want = if i == j {
                        (b as i64 - a as i64).signum()
                    } else if a == b {
                        (j as i64 - i as i64).signum()
                    } else {
                        0
                    };
                    assert_eq!(m[u][v], want, "n={n} ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_pidegree(FamilyKind::EuclideanOdd, 3, 5).unwrap(), BigInt::from(125));
        assert_eq!(closed_form_pidegree(FamilyKind::Symplectic, 2, 4).unwrap(), BigInt::from(4));
        assert!(matches!(closed_form_pidegree(FamilyKind::Kpq, 2, 4), Err(Error::NoClosedForm(_))));
        assert!(closed_form_pidegree(FamilyKind::EuclideanEven, 1, 4).is_err());
    }

    #[test]
    fn generic_lambda_matches_matrix() {
        for kind in FamilyKind::ALL {
            let fid = id(kind, 2);
            let spec = generic_spec(&fid).unwrap();
            let a = ExponentAssignment {
                r: 7,
                b: vec![2, 3],
                c: vec![5, 1],
                bmat: vec![vec![0, 4], vec![-4, 0]],
                lam: 3,
            };
            let a = if kind.is_single() { None } else { Some(&a) };
            assert!(lambda_matches_family(&spec.lambda, &fid, a).unwrap(), "{kind}");
            for i in 0..spec.n() {
                if !spec.delta_is_zero(i) {
                    spec.check_qskew(i).unwrap();
                }
            }
        }
    }

    #[test]
    fn field_checks() {
        let fid = id(FamilyKind::EuclideanOdd, 1);
        assert!(matches!(family_ore_spec(&fid, &ScalarField::generic(&["q"]), None), Err(Error::Domain(_))));
        let c = ScalarField::cyclotomic(10).unwrap();
        let spec = family_ore_spec(&fid, &c, None).unwrap();
        assert!(lambda_matches_family(&spec.lambda, &fid, None).unwrap());
        let k = id(FamilyKind::Kpq, 2);
        assert!(family_ore_spec(&k, &c, None).is_err());
        let bad = ExponentAssignment { r: 5, b: vec![1, 2], c: vec![1, 3], bmat: vec![vec![0, 1], vec![-1, 0]], lam: 0 };
        assert!(matches!(family_ore_spec_at(&k, &bad), Err(Error::Domain(_))));
    }
}
