//! Self-check suites run by `pideg verify`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{
    family_matrix, family_ore_spec_at, generic_spec, lambda_matches_family, ExponentAssignment, FamilyId, FamilyKind,
};
use crate::ore::{check_hd_properties, higher_derivation, OreElement, OreSpec};
use crate::pidegree::{brute_force_image, charpoly, image_cardinality, pi_degree, smith_normal_form, IntMatrix};
use crate::qarith::{t_binomial, t_factorial, t_integer, LaurentIntPoly};
use crate::removal::{f_image, iterate_removal, recover, reorder_variables, rewrite_element, times_last_inverse};
use crate::sample::{random_element, random_scalar};
use crate::scalars::{evaluate_at_root, ScalarField};
use crate::sweep::{sweep, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Qarith,
    Scalars,
    Ore,
    Removal,
    Pidegree,
    Families,
    All,
}

impl Suite {
    const NAMES: [(&'static str, Suite); 7] = [
        ("qarith", Suite::Qarith),
        ("scalars", Suite::Scalars),
        ("ore", Suite::Ore),
        ("removal", Suite::Removal),
        ("pidegree", Suite::Pidegree),
        ("families", Suite::Families),
        ("all", Suite::All),
    ];
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES.iter().find(|(n, _)| *n == s).map(|(_, v)| *v).ok_or_else(|| Error::Usage(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(Self::NAMES.iter().find(|(_, v)| v == self).unwrap().0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

type Outcome = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lift<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

struct Runner {
    suite: Suite,
    out: Vec<Check>,
}

impl Runner {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Outcome) {
        let res = f();
        self.out.push(Check {
            suite: self.suite.to_string(),
            name: name.to_string(),
            passed: res.is_ok(),
            detail: res.err().unwrap_or_default(),
        });
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    if suite == Suite::All {
        return Suite::NAMES[..6].iter().flat_map(|(_, s)| run_suite(*s, seed)).collect();
    }
    let mut r = Runner { suite, out: Vec::new() };
    match suite {
        Suite::Qarith => qarith(&mut r),
        Suite::Scalars => scalars(&mut r, seed),
        Suite::Ore => ore(&mut r, seed),
        Suite::Removal => removal(&mut r, seed),
        Suite::Pidegree => pidegree(&mut r, seed),
        Suite::Families => families(&mut r),
        Suite::All => unreachable!(),
    }
    r.out
}

fn qarith(r: &mut Runner) {
    r.check("pascal identities n <= 20", || {
        for n in 1..=20i64 {
            for m in 1..n {
                let b = lift(t_binomial(n, m))?;
                let (a1, a0) = (lift(t_binomial(n - 1, m - 1))?, lift(t_binomial(n - 1, m))?);
                ensure(b == &a1 + &a0.shift(m), || format!("first rule n={n} m={m}"))?;
                ensure(b == &a1.shift(n - m) + &a0, || format!("second rule n={n} m={m}"))?;
            }
        }
        Ok(())
    });
    r.check("binomials at t = 1", || {
        for n in 0..=20u32 {
            let mut c = BigInt::one();
            for m in 0..=n {
                ensure(lift(t_binomial(n as i64, m as i64))?.eval_one() == c, || format!("({n} {m})"))?;
                c = c * (n - m) / (m + 1);
            }
        }
        Ok(())
    });
    r.check("binomials vanish at roots of unity", || {
        for l in 2..=8u64 {
            let f = lift(ScalarField::cyclotomic(l))?;
            for i in 1..l {
                ensure(evaluate_at_root(&lift(t_binomial(l as i64, i as i64))?, &f).is_zero(), || format!("l={l} i={i}"))?;
            }
        }
        Ok(())
    });
    r.check("factorial is a product of integers", || {
        let mut acc = LaurentIntPoly::one();
        for n in 1..=12u32 {
            acc = &acc * &t_integer(n);
            ensure(t_factorial(n) == acc, || format!("n={n}"))?;
        }
        Ok(())
    });
}

fn scalars(r: &mut Runner, seed: u64) {
    let fields = [ScalarField::generic(&["q", "p"]), ScalarField::cyclotomic(12).unwrap(), ScalarField::generic_with_sqrt(&["g"])];
    for f in fields {
        r.check(&format!("field axioms in {f}"), || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let (a, b, c) = (random_scalar(&f, &mut rng), random_scalar(&f, &mut rng), random_scalar(&f, &mut rng));
                let c = &c + &a;
                ensure(&(&a * &b) * &c == &a * &(&b * &c), || "associativity".into())?;
                ensure(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || "distributivity".into())?;
                if !c.is_zero() {
                    ensure((&c * &lift(c.inv())?).is_one(), || format!("inverse of {c}"))?;
                }
                let back = lift(f.parse(&c.to_string()))?;
                ensure(back == c, || format!("display round trip of {c}"))?;
            }
            Ok(())
        });
    }
}

fn two(kind: FamilyKind) -> FamilyId {
    FamilyId::new(kind, 2).expect("n = 2 is valid for every family")
}

fn assignment(r: u64) -> ExponentAssignment {
    ExponentAssignment { r, b: vec![1, 2], c: vec![3, 4], bmat: vec![vec![0, 2], vec![-2, 0]], lam: 2 }
}

fn family_specs(r: Option<u64>) -> Result<Vec<(FamilyId, OreSpec)>> {
    FamilyKind::ALL
        .iter()
        .map(|k| {
            let id = two(*k);
            let spec = match r {
                None => generic_spec(&id)?,
                Some(r) => family_ore_spec_at(&id, &assignment(r))?,
            };
            Ok((id, spec))
        })
        .collect()
}

fn a1(field: Option<u64>) -> Result<OreSpec> {
    let id = FamilyId::new(FamilyKind::WeylSingle, 1)?;
    match field {
        None => generic_spec(&id),
        Some(r) => family_ore_spec_at(&id, &ExponentAssignment::canonical(id.kind, 1, r)),
    }
}

fn ore(r: &mut Runner, seed: u64) {
    r.check("quantum Weyl products", || {
        let s = lift(a1(None))?;
        let p = |t: &str| lift(s.parse_element(t));
        ensure(lift(s.mul(&p("x1")?, &p("y1")?))? == p("q*y1*x1 + 1")?, || "x y".into())?;
        ensure(lift(s.mul(&p("x1^2")?, &p("y1")?))? == p("q^2*y1*x1^2 + (1 + q)*x1")?, || "x^2 y".into())?;
        ensure(lift(s.apply_delta(1, &p("y1^2")?))? == p("(1 + q)*y1")?, || "delta(y^2)".into())?;
        ensure(lift(s.check_qskew(1))? == lift(s.field.param("q"))?, || "q-skew parameter".into())
    });
    for field in [None, Some(5)] {
        let label = field.map_or("generic".to_string(), |r| format!("r = {r}"));
        r.check(&format!("associativity, 200 triples per family ({label})"), || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (id, s) in lift(family_specs(field))? {
                let n = s.n();
                for _ in 0..200 {
                    let a = random_element(&s, &mut rng, n, 2, 2);
                    let b = random_element(&s, &mut rng, n, 2, 2);
                    let c = random_element(&s, &mut rng, n, 2, 2);
                    let lhs = lift(s.mul(&lift(s.mul(&a, &b))?, &c))?;
                    let rhs = lift(s.mul(&a, &lift(s.mul(&b, &c))?))?;
                    ensure(lhs == rhs, || format!("{id}: ({}) ({}) ({})", s.format(&a), s.format(&b), s.format(&c)))?;
                }
            }
            Ok(())
        });
    }
    r.check("q-skew parameters of the families", || {
        for (id, s) in lift(family_specs(None))? {
            let f = &s.field;
            for i in 0..s.n() {
                if s.delta_is_zero(i) {
                    continue;
                }
                let got = lift(s.check_qskew(i))?;
                let want = match id.kind {
                    FamilyKind::EuclideanOdd => lift(lift(f.param("q"))?.pow(-2))?,
                    FamilyKind::WeylMulti => lift(f.param(&format!("q{}", i / 2 + 1)))?,
                    FamilyKind::Kpq => lift(lift(f.param(&format!("q{}", i / 2 + 1)))?.div(&lift(f.param(&format!("p{}", i / 2 + 1)))?))?,
                    FamilyKind::MatricesMulti => lift(lift(f.param("lam"))?.inv())?,
                    FamilyKind::MatricesSingle | FamilyKind::EuclideanEven => lift(lift(f.param("q"))?.pow(2))?,
                    FamilyKind::Symplectic => lift(lift(f.param("q"))?.pow(-2))?,
                    FamilyKind::WeylSingle => lift(f.param("q"))?,
                };
                ensure(got == want, || format!("{id} variable {}: {got}", s.vars[i]))?;
            }
        }
        Ok(())
    });
    r.check("divisibility certificate: d_n(y^n) = 1 generically, n <= 6", || {
        let s = lift(a1(None))?;
        let hd = lift(higher_derivation(&s, 1))?;
        for n in 0..=6u32 {
            let y = lift(s.pow(&s.var(0), n))?;
            ensure(lift(hd.apply(n as usize, &y))? == s.one(), || format!("n={n}"))?;
        }
        for (id, s) in lift(family_specs(None))? {
            for i in 0..s.n() {
                lift(higher_derivation(&s, i)).map_err(|e| format!("{id}: {e}"))?;
            }
        }
        Ok(())
    });
    r.check("higher derivations at roots of unity", || {
        for l in 2..=6u64 {
            let s = lift(a1(Some(l)))?;
            let hd = lift(higher_derivation(&s, 1))?;
            for i in 0..=2 * l as u32 {
                let y = lift(s.pow(&s.var(0), i))?;
                ensure(lift(hd.apply(i as usize, &y))? == s.one(), || format!("l={l} d_{i}(y^{i})"))?;
            }
            let y3 = lift(s.pow(&s.var(0), 3))?;
            ensure(lift(hd.nilpotence_index(&y3))? == 4, || "nilpotence index of y^3".into())?;
            let rep = lift(check_hd_properties(&hd, &[s.var(0), y3, s.one()]))?;
            ensure(rep.passed(), || rep.failures.join("; "))?;
        }
        Ok(())
    });
}

fn removal(r: &mut Runner, seed: u64) {
    r.check("quantum Weyl: f(y) = y + (q-1)^-1 x^-1", || {
        let s = lift(a1(None))?;
        let loc = lift(s.localized(1))?;
        let want = lift(loc.parse_element("y1 + 1/(q - 1)*x1^-1"))?;
        ensure(lift(f_image(&s, &s.var(0)))? == want, || "image of y".into())?;
        ensure(matches!(reorder_variables(&s, &[1, 0]), Err(Error::NotReorderable(_))), || "reorder should fail".into())
    });
    r.check("A2: images and Ore generators", || {
        let s = lift(generic_spec(&two(FamilyKind::WeylMulti)))?;
        let res = lift(iterate_removal(&s))?;
        let loc = |sp: &OreSpec, k: usize, t: &str| lift(lift(sp.localized(k))?.parse_element(t));
        let phi = &res.steps[0].images[2];
        ensure(*phi == loc(&s, 3, "y2 + 1/(q2 - 1)*((q1 - 1)*y1*x1 + 1)*x2^-1")?, || format!("Phi(y2) = {}", s.format(phi)))?;
        let step3 = &res.steps[2];
        let psi = &step3.images[step3.vars.iter().position(|v| v == "y1").unwrap()];
        let s3 = lift(OreSpec::new(
            s.field.clone(),
            step3.vars.clone(),
            s.lambda.clone(),
            s.qskew.clone(),
            vec![],
            vec![true; 4],
        ))?;
        ensure(*psi == lift(s3.parse_element("y1 + 1/(q1 - 1)*x1^-1"))?, || "Psi(y1)".into())?;
        let want = ["x2", "y2*x2*(q2 - 1) + y1*x1*(q1 - 1) + 1", "x1", "y1*x1*(q1 - 1) + 1"];
        ensure(res.ore_generators.len() == 4, || "four generators".into())?;
        for (g, w) in res.ore_generators.iter().zip(want) {
            let w = lift(lift(s.parse_element(w))?.monic())?;
            ensure(*g == w, || format!("generator {}", s.format(g)))?;
        }
        Ok(())
    });
    for field in [None, Some(4)] {
        let label = field.map_or("generic".to_string(), |r| format!("r = {r}"));
        r.check(&format!("f is a homomorphism, 20 pairs per family ({label})"), || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for (id, s) in lift(family_specs(field))? {
                let k = s.n() - 1;
                let loc = lift(s.localized(k))?;
                let x = loc.var(k);
                for _ in 0..20 {
                    let a = random_element(&s, &mut rng, k, 3, 2);
                    let b = random_element(&s, &mut rng, k, 3, 2);
                    let fab = lift(f_image(&s, &lift(s.mul(&a, &b))?))?;
                    let fafb = lift(loc.mul(&lift(f_image(&s, &a))?, &lift(f_image(&s, &b))?))?;
                    ensure(fab == fafb, || format!("{id}: f(ab) on {} , {}", s.format(&a), s.format(&b)))?;
                    let lhs = lift(loc.mul(&x, &lift(f_image(&s, &a))?))?;
                    let rhs = lift(loc.mul(&lift(f_image(&s, &lift(s.tau(k, 1, &a))?))?, &x))?;
                    ensure(lhs == rhs, || format!("{id}: x f(a) on {}", s.format(&a)))?;
                }
            }
            Ok(())
        });
    }
    r.check("x^m f(r) = f(tau^m r) x^m, recovery, x x^-1 = 1", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (id, s) in lift(family_specs(None))? {
            let k = s.n() - 1;
            let loc = lift(s.localized(k))?;
            ensure(lift(loc.mul(&loc.var(k), &loc.var_pow(k, -1)))? == loc.one(), || format!("{id}: x x^-1"))?;
            for _ in 0..5 {
                let a = random_element(&s, &mut rng, k, 3, 2);
                let fa = lift(f_image(&s, &a))?;
                for m in -2i64..=2 {
                    let xm = loc.var_pow(k, m);
                    let lhs = lift(loc.mul(&xm, &fa))?;
                    let rhs = lift(loc.mul(&lift(f_image(&s, &lift(s.tau(k, m, &a))?))?, &xm))?;
                    ensure(lhs == rhs, || format!("{id}: m={m}"))?;
                }
                let mut back = OreElement::zero();
                for (m, c) in lift(recover(&s, &a))? {
                    back = back.add(&times_last_inverse(&lift(f_image(&s, &c))?, k, m));
                }
                ensure(back == a, || format!("{id}: recovery of {}", s.format(&a)))?;
            }
        }
        Ok(())
    });
    r.check("reordering preserves products", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = lift(generic_spec(&two(FamilyKind::WeylMulti)))?;
        let (t, _) = lift(crate::removal::remove_last_derivation(&s))?;
        let perm = [3, 0, 1, 2];
        let u = lift(reorder_variables(&t, &perm))?;
        for _ in 0..20 {
            let a = random_element(&t, &mut rng, 4, 3, 2);
            let b = random_element(&t, &mut rng, 4, 3, 2);
            let lhs = lift(rewrite_element(&t, &perm, &lift(t.mul(&a, &b))?))?;
            let rhs = lift(u.mul(&lift(rewrite_element(&t, &perm, &a))?, &lift(rewrite_element(&t, &perm, &b))?))?;
            ensure(lhs == rhs, || format!("{} * {}", t.format(&a), t.format(&b)))?;
        }
        Ok(())
    });
}

fn pidegree(r: &mut Runner, seed: u64) {
    r.check("worked examples", || {
        let m = lift(IntMatrix::from_i64(&[vec![0, 2], vec![-2, 0]]))?;
        let snf = lift(smith_normal_form(&m))?;
        ensure(lift(image_cardinality(&snf, 3))? == BigInt::from(9), || "l=3".into())?;
        ensure(lift(image_cardinality(&snf, 4))? == BigInt::from(4), || "l=4".into())?;
        let z = IntMatrix::zeros(4, 4);
        ensure(lift(pi_degree(&z, 7))?.pi_degree == BigInt::one(), || "zero matrix".into())
    });
    r.check("image cardinality against enumeration", || {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let l = rng.gen_range(1..=8u64);
            let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-5..=5)).collect()).collect();
            let m = lift(IntMatrix::from_i64(&rows))?;
            let h = lift(image_cardinality(&lift(smith_normal_form(&m))?, l))?;
            let b = lift(brute_force_image(&m, l))?;
            ensure(h == BigInt::from(b), || format!("{rows:?} l={l}"))?;
        }
        Ok(())
    });
    r.check("characteristic polynomials of A_n", || {
        let x = LaurentIntPoly::monomial(1, 1);
        let one = LaurentIntPoly::one();
        for n in 1..=6usize {
            let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (j as i64 - i as i64).signum()).collect()).collect();
            let chi = lift(charpoly(&lift(IntMatrix::from_i64(&rows))?))?;
            let two = (&(&x + &one).pow(n as u32) + &(&x - &one).pow(n as u32)).div_exact(&LaurentIntPoly::from_coeffs(&[2]));
            ensure(Some(chi) == two, || format!("n={n}"))?;
        }
        Ok(())
    });
}

fn families(r: &mut Runner) {
    let grid: [(FamilyKind, Vec<usize>); 5] = [
        (FamilyKind::EuclideanOdd, (1..=5).collect()),
        (FamilyKind::WeylSingle, (1..=4).collect()),
        (FamilyKind::MatricesSingle, vec![2, 3]),
        (FamilyKind::Symplectic, (1..=4).collect()),
        (FamilyKind::EuclideanEven, (2..=5).collect()),
    ];
    for (kind, ns) in grid {
        r.check(&format!("{kind}: closed form over r = 2..13"), || {
            let rows = lift(sweep(kind, &ns, &(2..=13).collect::<Vec<_>>(), Strategy::default()))?;
            let bad: Vec<String> = rows.iter().filter(|x| x.mismatch()).map(|x| format!("n={} r={}", x.n, x.r)).collect();
            ensure(bad.is_empty(), || bad.join(", "))
        });
    }
    r.check("iterated removal ends at the family matrix", || {
        for field in [None, Some(7)] {
            for (id, s) in lift(family_specs(field))? {
                let res = lift(iterate_removal(&s)).map_err(|e| format!("{id}: {e}"))?;
                let a = assignment(7);
                let a = (!id.kind.is_single()).then_some(&a);
                ensure(lift(lambda_matches_family(&res.lambda_final, &id, a))?, || format!("{id} {field:?}"))?;
                ensure(lift(family_matrix(&id, a))?.is_skew_symmetric(), || format!("{id} matrix"))?;
            }
        }
        Ok(())
    });
}

/// Number of failed checks.
pub fn failures(checks: &[Check]) -> usize {
    checks.iter().filter(|c| !c.passed).count()
}
