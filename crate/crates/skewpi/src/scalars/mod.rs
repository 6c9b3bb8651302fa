//! Coefficient fields: rational functions in named parameters (optionally with
//! `s` standing for a square root of `q`) and cyclotomic fields Q(zeta_r).

pub mod cyclo;
pub mod mpoly;
mod parse;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use cyclo::{cyclotomic_poly, euler_phi, CycElem, CycField};
pub use mpoly::MPoly;
pub use parse::parse_scalar;

use crate::error::{Error, Result};
use crate::qarith::LaurentIntPoly;

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct GenericField {
    pub names: Vec<String>,
    /// Index of `s` when `q` is read as `s^2`.
    pub sqrt: Option<usize>,
}

/// Field descriptor, shared read-only.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ScalarField {
    Generic(Arc<GenericField>),
    Cyclotomic(Arc<CycField>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldMode {
    Generic,
    GenericWithSqrt,
    Cyclotomic(u64),
}

impl ScalarField {
    /// Rational functions in the given parameter names.
    pub fn generic<S: AsRef<str>>(names: &[S]) -> Self {
        let names = names.iter().map(|s| s.as_ref().to_string()).collect();
        Self::Generic(Arc::new(GenericField { names, sqrt: None }))
    }

    /// Rational functions in `s` and `extra`, where the name `q` means `s^2`.
    pub fn generic_with_sqrt<S: AsRef<str>>(extra: &[S]) -> Self {
        let mut names = vec!["s".to_string()];
        names.extend(extra.iter().map(|s| s.as_ref().to_string()));
        Self::Generic(Arc::new(GenericField { names, sqrt: Some(0) }))
    }

    pub fn cyclotomic(r: u64) -> Result<Self> {
        Ok(Self::Cyclotomic(CycField::new(r)?))
    }

    pub fn mode(&self) -> FieldMode {
        match self {
            Self::Generic(g) if g.sqrt.is_some() => FieldMode::GenericWithSqrt,
            Self::Generic(_) => FieldMode::Generic,
            Self::Cyclotomic(c) => FieldMode::Cyclotomic(c.r),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            Self::Generic(g) => g.names.clone(),
            Self::Cyclotomic(_) => vec!["z".into()],
        }
    }

    pub fn from_rational(&self, c: BigRational) -> Scalar {
        match self {
            Self::Generic(g) => Scalar::Rat(RatFunc {
                field: g.clone(),
                num: MPoly::constant(g.names.len(), c),
                den: MPoly::one(g.names.len()),
            }),
            Self::Cyclotomic(f) => Scalar::Cyc(CycElem::from_rational(f, c)),
        }
    }

    pub fn from_int(&self, n: i64) -> Scalar {
        self.from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero(&self) -> Scalar {
        self.from_int(0)
    }

    pub fn one(&self) -> Scalar {
        self.from_int(1)
    }

    /// The named parameter; in sqrt mode `q` is `s^2`, in cyclotomic mode
    /// `z` and `q` both name the generator.
    pub fn param(&self, name: &str) -> Result<Scalar> {
        match self {
            Self::Generic(g) => {
                let nv = g.names.len();
                if let Some(i) = g.names.iter().position(|n| n == name) {
                    return Ok(Scalar::Rat(RatFunc { field: g.clone(), num: MPoly::var(nv, i), den: MPoly::one(nv) }));
                }
                match (name, g.sqrt) {
                    ("q", Some(s)) => {
                        Ok(Scalar::Rat(RatFunc { field: g.clone(), num: MPoly::var(nv, s).pow(2), den: MPoly::one(nv) }))
                    }
                    _ => Err(Error::Parse(format!("unknown parameter {name:?}"))),
                }
            }
            Self::Cyclotomic(f) => match name {
                "z" | "q" => Ok(Scalar::Cyc(CycElem::gen_pow(f, 1))),
                _ => Err(Error::Parse(format!("unknown name {name:?} in cyclotomic field"))),
            },
        }
    }

    /// The field generator: the first parameter, or zeta in cyclotomic mode.
    pub fn generator(&self) -> Scalar {
        match self {
            Self::Generic(g) => self.param(&g.names[0]).expect("first parameter"),
            Self::Cyclotomic(f) => Scalar::Cyc(CycElem::gen_pow(f, 1)),
        }
    }

    pub fn parse(&self, s: &str) -> Result<Scalar> {
        parse_scalar(self, s)
    }

    /// Substitutes the generator for `t`.
    pub fn evaluate_at_root(&self, p: &LaurentIntPoly) -> Scalar {
        evaluate_at_root(p, self)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Generic(g) if g.sqrt.is_some() => write!(f, "generic-sqrt({})", g.names.join(",")),
            Self::Generic(g) => write!(f, "generic({})", g.names.join(",")),
            Self::Cyclotomic(c) => write!(f, "cyclotomic({})", c.r),
        }
    }
}

/// JSON form of a field descriptor.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FieldDesc {
    Generic { params: Vec<String> },
    GenericSqrt { params: Vec<String> },
    Cyclotomic { r: u64 },
}

impl FieldDesc {
    pub fn build(&self) -> Result<ScalarField> {
        match self {
            Self::Generic { params } => Ok(ScalarField::generic(params)),
            Self::GenericSqrt { params } => {
                let extra: Vec<&String> = params.iter().filter(|p| p.as_str() != "s").collect();
                Ok(ScalarField::generic_with_sqrt(&extra))
            }
            Self::Cyclotomic { r } => ScalarField::cyclotomic(*r),
        }
    }

    pub fn of(field: &ScalarField) -> Self {
        match field {
            ScalarField::Generic(g) if g.sqrt.is_some() => Self::GenericSqrt { params: g.names.clone() },
            ScalarField::Generic(g) => Self::Generic { params: g.names.clone() },
            ScalarField::Cyclotomic(c) => Self::Cyclotomic { r: c.r },
        }
    }
}

/// Reduced fraction `num / den` with monic `den`.
#[derive(Clone, Debug)]
pub struct RatFunc {
    field: Arc<GenericField>,
    num: MPoly,
    den: MPoly,
}

impl PartialEq for RatFunc {
    fn eq(&self, o: &Self) -> bool {
        self.num == o.num && self.den == o.den
    }
}
impl Eq for RatFunc {}
impl Hash for RatFunc {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.num.hash(h);
        self.den.hash(h);
    }
}

impl RatFunc {
    fn new(field: &Arc<GenericField>, num: MPoly, den: MPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let nv = num.nvars();
        if num.is_zero() {
            return Ok(Self { field: field.clone(), num, den: MPoly::one(nv) });
        }
        let (num, den) = if den.as_const().is_some() {
            (num, den)
        } else {
            let g = mpoly::gcd(&num, &den);
            if g.is_one() {
                (num, den)
            } else {
                (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
            }
        };
        let lc = den.lead_coeff();
        if lc.is_one() {
            Ok(Self { field: field.clone(), num, den })
        } else {
            let inv = lc.recip();
            Ok(Self { field: field.clone(), num: num.scale(&inv), den: den.scale(&inv) })
        }
    }

    pub fn numer(&self) -> &MPoly {
        &self.num
    }

    pub fn denom(&self) -> &MPoly {
        &self.den
    }

    fn add(&self, o: &Self) -> Self {
        if self.den.is_one() && o.den.is_one() {
            return Self { field: self.field.clone(), num: self.num.add(&o.num), den: self.den.clone() };
        }
        if self.den == o.den {
            return Self::new(&self.field, self.num.add(&o.num), self.den.clone()).unwrap();
        }
        let g = mpoly::gcd(&self.den, &o.den);
        let (a, b) = (self.den.div_exact(&g).unwrap(), o.den.div_exact(&g).unwrap());
        let num = self.num.mul(&b).add(&o.num.mul(&a));
        Self::new(&self.field, num, self.den.mul(&b)).unwrap()
    }

    fn mul(&self, o: &Self) -> Self {
        if self.den.is_one() && o.den.is_one() {
            return Self { field: self.field.clone(), num: self.num.mul(&o.num), den: self.den.clone() };
        }
        if self.num.is_zero() || o.num.is_zero() {
            return Self { field: self.field.clone(), num: MPoly::zero(self.num.nvars()), den: MPoly::one(self.num.nvars()) };
        }
        let g1 = mpoly::gcd(&self.num, &o.den);
        let g2 = mpoly::gcd(&o.num, &self.den);
        let num = self.num.div_exact(&g1).unwrap().mul(&o.num.div_exact(&g2).unwrap());
        let den = self.den.div_exact(&g2).unwrap().mul(&o.den.div_exact(&g1).unwrap());
        let lc = den.lead_coeff();
        if lc.is_one() {
            Self { field: self.field.clone(), num, den }
        } else {
            let inv = lc.recip();
            Self { field: self.field.clone(), num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    fn inv(&self) -> Result<Self> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let lc = self.num.lead_coeff().recip();
        Ok(Self { field: self.field.clone(), num: self.den.scale(&lc), den: self.num.scale(&lc) })
    }

    fn neg(&self) -> Self {
        Self { field: self.field.clone(), num: self.num.neg(), den: self.den.clone() }
    }
}

/// An element of a [`ScalarField`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rat(RatFunc),
    Cyc(CycElem),
}

impl Scalar {
    pub fn field(&self) -> ScalarField {
        match self {
            Self::Rat(r) => ScalarField::Generic(r.field.clone()),
            Self::Cyc(c) => ScalarField::Cyclotomic(c.field.clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Rat(r) => r.num.is_zero(),
            Self::Cyc(c) => c.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Self::Rat(r) => r.den.is_one() && r.num.is_one(),
            Self::Cyc(c) => c.is_one(),
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match self {
            Self::Rat(r) => Ok(Self::Rat(r.inv()?)),
            Self::Cyc(c) => Ok(Self::Cyc(c.inv()?)),
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self * &o.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let mut acc = self.field().one();
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &b;
            }
            k >>= 1;
            if k > 0 {
                b = &b * &b;
            }
        }
        Ok(acc)
    }

    /// For a generic scalar `c * prod p_i^{e_i}` returns `(c, e)`.
    pub fn as_monomial(&self) -> Option<(BigRational, Vec<i64>)> {
        let Self::Rat(r) = self else { return None };
        if r.num.len() != 1 || r.den.len() != 1 {
            return None;
        }
        let (ne, nc) = r.num.lead().unwrap();
        let (de, _) = r.den.lead().unwrap();
        Some((nc.clone(), ne.iter().zip(de).map(|(a, b)| *a as i64 - *b as i64).collect()))
    }

    /// The rational value of a constant scalar.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            Self::Rat(r) => r.den.is_one().then(|| r.num.as_const()).flatten(),
            Self::Cyc(c) => c.coeffs()[1..].iter().all(|x| x.is_zero()).then(|| c.coeffs()[0].clone()),
        }
    }

    /// Substitutes `vals[i]` for the i-th parameter of a generic scalar.
    pub fn specialize(&self, target: &ScalarField, vals: &[Scalar]) -> Result<Scalar> {
        match self {
            Self::Rat(r) => {
                let conv = |c: &BigRational| target.from_rational(c.clone());
                let one = target.one();
                let n = r.num.eval_with(one.clone(), conv, vals);
                let d = r.den.eval_with(one, conv, vals);
                if d.is_zero() {
                    return Err(Error::Domain(format!("denominator {} vanishes under specialization", self.denom_string())));
                }
                n.div(&d)
            }
            Self::Cyc(_) => Err(Error::Usage("only generic scalars can be specialized".into())),
        }
    }

    fn denom_string(&self) -> String {
        match self {
            Self::Rat(r) => format!("{}", Poly(&r.den, &r.field.names)),
            Self::Cyc(_) => "1".into(),
        }
    }

    /// Numerator and denominator of a generic scalar.
    pub fn as_fraction(&self) -> Option<(&MPoly, &MPoly)> {
        match self {
            Self::Rat(r) => Some((&r.num, &r.den)),
            Self::Cyc(_) => None,
        }
    }

    /// Builds a generic scalar from polynomials over the field's parameters.
    pub fn from_fraction(field: &ScalarField, num: MPoly, den: MPoly) -> Result<Self> {
        match field {
            ScalarField::Generic(g) => Ok(Self::Rat(RatFunc::new(g, num, den)?)),
            ScalarField::Cyclotomic(_) => Err(Error::Usage("fraction form needs a generic field".into())),
        }
    }
}

struct Poly<'a>(&'a MPoly, &'a [String]);
impl fmt::Display for Poly<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt_with(self.1, f)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rat(r) => {
                let names = &r.field.names;
                if r.den.is_one() {
                    return r.num.fmt_with(names, f);
                }
                let wrap_num = r.num.len() > 1;
                let wrap_den = r.den.len() > 1 || r.den.lead().is_some_and(|(e, _)| e.iter().filter(|k| **k > 0).count() > 1);
                if wrap_num {
                    write!(f, "({})", Poly(&r.num, names))?;
                } else {
                    write!(f, "{}", Poly(&r.num, names))?;
                }
                if wrap_den {
                    write!(f, "/({})", Poly(&r.den, names))
                } else {
                    write!(f, "/{}", Poly(&r.den, names))
                }
            }
            Self::Cyc(c) => c.fmt_with("z", f),
        }
    }
}

fn same_field(a: &Scalar, b: &Scalar) {
    debug_assert!(
        match (a, b) {
            (Scalar::Rat(x), Scalar::Rat(y)) => Arc::ptr_eq(&x.field, &y.field) || x.field == y.field,
            (Scalar::Cyc(x), Scalar::Cyc(y)) => x.field.r == y.field.r,
            _ => false,
        },
        "scalars from different fields"
    );
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        same_field(self, o);
        match (self, o) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a.add(b)),
            (Scalar::Cyc(a), Scalar::Cyc(b)) => Scalar::Cyc(a.add(b)),
            _ => panic!("scalars from different fields"),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        self + &(-o)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        same_field(self, o);
        match (self, o) {
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a.mul(b)),
            (Scalar::Cyc(a), Scalar::Cyc(b)) => Scalar::Cyc(a.mul(b)),
            _ => panic!("scalars from different fields"),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rat(a) => Scalar::Rat(a.neg()),
            Scalar::Cyc(a) => Scalar::Cyc(a.neg()),
        }
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

/// `a^{-1}` with an error on zero.
pub fn scalar_invert(a: &Scalar) -> Result<Scalar> {
    a.inv()
}

/// Substitutes the field generator for `t` and reduces.
pub fn evaluate_at_root(p: &LaurentIntPoly, field: &ScalarField) -> Scalar {
    let g = field.generator();
    let mut acc = field.zero();
    for (e, c) in p.terms() {
        let ge = g.pow(e).expect("generator is a unit");
        acc = &acc + &(&field.from_rational(BigRational::from_integer(c.clone())) * &ge);
    }
    acc
}

/// `(m)_t` evaluated at `t`.
pub fn t_integer_at(t: &Scalar, m: u32) -> Scalar {
    let f = t.field();
    let mut acc = f.zero();
    let mut pw = f.one();
    for _ in 0..m {
        acc = &acc + &pw;
        pw = &pw * t;
    }
    acc
}

/// `(m)!_t` evaluated at `t`.
pub fn t_factorial_at(t: &Scalar, m: u32) -> Scalar {
    (1..=m).fold(t.field().one(), |acc, k| &acc * &t_integer_at(t, k))
}

/// `binom(n, m)_t` evaluated at `t`.
pub fn t_binomial_at(t: &Scalar, n: u32, m: u32) -> Scalar {
    let p = crate::qarith::t_binomial(n as i64, m as i64).expect("m <= n");
    let f = t.field();
    let mut acc = f.zero();
    for (e, c) in p.terms() {
        acc = &acc + &(&f.from_rational(BigRational::from_integer(c.clone())) * &t.pow(e).expect("unit"));
    }
    acc
}
