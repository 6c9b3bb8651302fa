//! Acceptance criteria, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skewpi::families::{
    family_matrix, family_ore_spec_at, generic_spec, ExponentAssignment, FamilyId, FamilyKind,
};
use skewpi::ore::{higher_derivation, OreElement, OreSpec};
use skewpi::pidegree::{brute_force_image, charpoly, image_cardinality, pi_degree, smith_normal_form, IntMatrix};
use skewpi::qarith::{t_binomial, LaurentIntPoly};
use skewpi::removal::{f_image, iterate_removal};
use skewpi::sample::random_element;
use skewpi::scalars::Scalar;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, summary: String) -> Outcome {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(format!("{summary} in {t:.2?}"))
}

// Oracles -----------------------------------------------------------------

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn inv_mod(a: i128, m: i128) -> i128 {
    let (mut r0, mut r1, mut s0, mut s1) = (a.rem_euclid(m), m, 1i128, 0i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    assert_eq!(r0, 1, "not a unit");
    s0.rem_euclid(m)
}

/// Size of the row span of `m` in `(Z/ell)^N`, by elimination over each
/// local ring `Z/p^e`.
fn local_image_size(m: &[Vec<i64>], ell: u64) -> u128 {
    let mut total: u128 = 1;
    for (p, e) in factor(ell) {
        let (p, pe) = (p as i128, (p as i128).pow(e));
        let val = |x: i128| -> u32 {
            let mut x = x.rem_euclid(pe);
            if x == 0 {
                return e;
            }
            let mut v = 0;
            while x % p == 0 {
                x /= p;
                v += 1;
            }
            v
        };
        let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| (x as i128).rem_euclid(pe)).collect()).collect();
        loop {
            let mut best: Option<(usize, usize, u32)> = None;
            for (i, row) in a.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    let v = val(x);
                    if v < e && best.map_or(true, |b| v < b.2) {
                        best = Some((i, j, v));
                    }
                }
            }
            let Some((pi, pj, v)) = best else { break };
            total *= (pe / p.pow(v)) as u128;
            let u = inv_mod(a[pi][pj] / p.pow(v), pe);
            for x in a[pi].iter_mut() {
                *x = (*x * u).rem_euclid(pe);
            }
            let pivot_row = a[pi].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i != pi {
                    let f = row[pj] / p.pow(v);
                    for (x, y) in row.iter_mut().zip(&pivot_row) {
                        *x = (*x - f * y).rem_euclid(pe);
                    }
                }
            }
            a.remove(pi);
            for row in a.iter_mut() {
                row.remove(pj);
            }
        }
    }
    total
}

fn ipow(b: u64, e: usize) -> u128 {
    (b as u128).pow(e as u32)
}

fn closed_form(kind: FamilyKind, n: usize, r: u64) -> u128 {
    let three = |base: u128, mid: usize, four: usize| -> u128 {
        if r % 2 == 1 {
            base
        } else if r % 4 != 0 {
            base >> mid
        } else {
            base >> four
        }
    };
    match kind {
        FamilyKind::EuclideanOdd => three(ipow(r, n), n / 2, n - 1),
        FamilyKind::WeylSingle => ipow(r, n),
        FamilyKind::MatricesSingle => {
            let base = ipow(r, n * (n - 1) / 2);
            if r % 2 == 1 {
                base
            } else {
                base >> ((n - 1) * (n - 2) / 2)
            }
        }
        FamilyKind::EuclideanEven => three(ipow(r, n - 1), (n - 1) / 2, n - 2),
        FamilyKind::Symplectic => three(ipow(r, n), (n + 1) / 2, n),
        _ => unreachable!(),
    }
}

fn small(m: &IntMatrix) -> Vec<Vec<i64>> {
    m.entries().iter().map(|r| r.iter().map(|x| x.to_i64().unwrap()).collect()).collect()
}

fn isqrt(h: u128) -> Option<u128> {
    let s = (h as f64).sqrt().round() as u128;
    (s.saturating_sub(1)..=s + 1).find(|x| x * x == h)
}

/// PI degrees of a single-parameter family against the closed form and
/// against the local-ring image count.
fn family_grid(kind: FamilyKind, ns: impl Iterator<Item = usize>, rs: std::ops::RangeInclusive<u64>) -> Result<usize, String> {
    let mut cells = 0;
    for n in ns {
        let id = FamilyId::new(kind, n).map_err(|e| e.to_string())?;
        let m = family_matrix(&id, None).map_err(|e| e.to_string())?;
        let entries = small(&m);
        for r in rs.clone() {
            let rep = pi_degree(&m, r).map_err(|e| e.to_string())?;
            let want = closed_form(kind, n, r);
            let h = local_image_size(&entries, r);
            ensure(rep.pi_degree == BigInt::from(want), || format!("{kind} n={n} r={r}: {} vs {want}", rep.pi_degree))?;
            ensure(rep.h == BigInt::from(h) && isqrt(h) == Some(want), || format!("{kind} n={n} r={r}: h={} oracle {h}", rep.h))?;
            cells += 1;
        }
    }
    Ok(cells)
}

// Criteria ----------------------------------------------------------------

fn c1() -> Outcome {
    let t = Instant::now();
    let cells = family_grid(FamilyKind::EuclideanOdd, 1..=5, 2..=13)?;
    within(t, Duration::from_secs(5), format!("{cells} cells"))
}

fn c2() -> Outcome {
    let t = Instant::now();
    let cells = family_grid(FamilyKind::WeylSingle, 1..=4, 2..=10)?;
    within(t, Duration::from_secs(5), format!("{cells} cells"))
}

fn c3() -> Outcome {
    let t = Instant::now();
    let cells = family_grid(FamilyKind::MatricesSingle, 2..=3, 2..=9)?;
    within(t, Duration::from_secs(10), format!("{cells} cells"))
}

fn c4() -> Outcome {
    let t = Instant::now();
    let a = family_grid(FamilyKind::Symplectic, 1..=4, 2..=13)?;
    let b = family_grid(FamilyKind::EuclideanEven, 2..=5, 2..=13)?;
    within(t, Duration::from_secs(10), format!("{} cells", a + b))
}

fn shape(parts: &[(i64, usize)]) -> Vec<BigInt> {
    let mut v: Vec<BigInt> = parts.iter().flat_map(|&(d, k)| std::iter::repeat(BigInt::from(d)).take(k)).collect();
    v.sort();
    v
}

fn c5() -> Outcome {
    let mut checked = 0;
    for n in 1..=5usize {
        let mut cases = vec![
            (
                FamilyKind::EuclideanOdd,
                if n % 2 == 1 { shape(&[(1, n + 1), (4, n - 1), (0, 1)]) } else { shape(&[(1, n), (2, 2), (4, n - 2), (0, 1)]) },
            ),
            (
                FamilyKind::Symplectic,
                if n % 2 == 0 { shape(&[(1, n), (4, n)]) } else { shape(&[(1, n - 1), (2, 2), (4, n - 1)]) },
            ),
        ];
        if n >= 2 {
            cases.push((
                FamilyKind::EuclideanEven,
                if n % 2 == 0 { shape(&[(1, n), (4, n - 2), (0, 2)]) } else { shape(&[(1, n - 1), (2, 2), (4, n - 3), (0, 2)]) },
            ));
        }
        for (kind, want) in cases {
            let m = family_matrix(&FamilyId::new(kind, n).unwrap(), None).map_err(|e| e.to_string())?;
            let mut got = smith_normal_form(&m).map_err(|e| e.to_string())?.invariant_factors();
            got.sort();
            ensure(got == want, || format!("{kind} n={n}: {got:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} Smith forms"))
}

fn elem(spec_vars: &[String], terms: &[(&[(&str, i64)], Scalar)]) -> OreElement {
    OreElement::from_terms(terms.iter().map(|(mono, c)| {
        let mut e = vec![0i64; spec_vars.len()];
        for (v, p) in mono.iter() {
            e[spec_vars.iter().position(|x| x == v).unwrap()] = *p;
        }
        (e, c.clone())
    }))
}

/// `a = c b` for some nonzero scalar `c`.
fn proportional(a: &OreElement, b: &OreElement) -> bool {
    let (Some((ea, ca)), Some((eb, cb))) = (a.lead(), b.lead()) else { return false };
    if ea != eb {
        return false;
    }
    let c = ca.div(cb).unwrap();
    a.sub(&b.scale(&c)).is_zero()
}

fn c6() -> Outcome {
    let spec = generic_spec(&FamilyId::new(FamilyKind::WeylMulti, 2).unwrap()).map_err(|e| e.to_string())?;
    let f = &spec.field;
    let (q1, q2) = (f.param("q1").unwrap(), f.param("q2").unwrap());
    let one = f.one();
    let (q1m, q2m) = (&q1 - &one, &q2 - &one);
    let vars = spec.vars.clone();
    ensure(vars == ["y1", "x1", "y2", "x2"], || format!("variable order {vars:?}"))?;
    let res = iterate_removal(&spec).map_err(|e| e.to_string())?;

    let expected = [
        elem(&vars, &[(&[("x2", 1)], one.clone())]),
        elem(&vars, &[(&[("x1", 1)], one.clone())]),
        elem(&vars, &[(&[("y2", 1), ("x2", 1)], q2m.clone()), (&[("y1", 1), ("x1", 1)], q1m.clone()), (&[], one.clone())]),
        elem(&vars, &[(&[("y1", 1), ("x1", 1)], q1m.clone()), (&[], one.clone())]),
    ];
    ensure(res.ore_generators.len() == 4, || format!("{} generators", res.ore_generators.len()))?;
    for p in &expected {
        ensure(res.ore_generators.iter().any(|g| proportional(g, p)), || format!("missing {}", spec.format(p)))?;
    }

    // Phi: first step, removing x2.
    let phi = &res.steps[0];
    ensure(phi.vars == vars, || "first step order".into())?;
    let q2i = q2m.inv().unwrap();
    let want_y2 = elem(
        &vars,
        &[
            (&[("y2", 1)], one.clone()),
            (&[("y1", 1), ("x1", 1), ("x2", -1)], &q2i * &q1m),
            (&[("x2", -1)], q2i.clone()),
        ],
    );
    for (v, img) in vars.iter().zip(&phi.images) {
        let want = if v == "y2" { want_y2.clone() } else { elem(&vars, &[(&[(v, 1)], one.clone())]) };
        ensure(*img == want, || format!("Phi({v}) = {}", spec.format(img)))?;
    }

    // Psi: the step removing x1.
    let psi = res.steps.iter().find(|s| s.removed == "x1" && !s.identity).ok_or("no step removes x1")?;
    let pv = psi.vars.clone();
    let q1i = q1m.inv().unwrap();
    for (v, img) in pv.iter().zip(&psi.images) {
        let want = if v == "y1" {
            elem(&pv, &[(&[("y1", 1)], one.clone()), (&[("x1", -1)], q1i.clone())])
        } else {
            elem(&pv, &[(&[(v, 1)], one.clone())])
        };
        ensure(*img == want, || format!("Psi({v}) wrong"))?;
    }
    Ok("four generators, Phi and Psi images".into())
}

fn multi_assignment(r: u64) -> ExponentAssignment {
    ExponentAssignment { r, b: vec![1, 2], c: vec![3, 4], bmat: vec![vec![0, 1], vec![-1, 0]], lam: 2 }
}

fn homomorphism_on(spec: &OreSpec, rng: &mut ChaCha8Rng, pairs: usize) -> Result<(), String> {
    let k = spec.n() - 1;
    let loc = spec.localized(k).map_err(|e| e.to_string())?;
    let x = loc.var(k);
    let f = |a: &OreElement| f_image(spec, a).map_err(|e| e.to_string());
    let mul = |s: &OreSpec, a: &OreElement, b: &OreElement| s.mul(a, b).map_err(|e| e.to_string());
    for _ in 0..pairs {
        let a = random_element(spec, rng, k, 3, 3);
        let b = random_element(spec, rng, k, 3, 3);
        let ab = mul(spec, &a, &b)?;
        ensure(f(&ab)? == mul(&loc, &f(&a)?, &f(&b)?)?, || format!("f(rs) for {} and {}", spec.format(&a), spec.format(&b)))?;
        let ta = spec.tau(k, 1, &a).map_err(|e| e.to_string())?;
        ensure(mul(&loc, &x, &f(&a)?)? == mul(&loc, &f(&ta)?, &x)?, || format!("x f(r) for {}", spec.format(&a)))?;
    }
    Ok(())
}

fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut specs = 0;
    for kind in FamilyKind::ALL {
        let id = FamilyId::new(kind, 2).unwrap();
        let mut list = vec![("generic".to_string(), generic_spec(&id).map_err(|e| e.to_string())?)];
        for r in [3, 4, 5] {
            let a = if kind.is_single() { ExponentAssignment::canonical(kind, 2, r) } else { multi_assignment(r) };
            list.push((format!("r={r}"), family_ore_spec_at(&id, &a).map_err(|e| e.to_string())?));
        }
        for (label, spec) in list {
            homomorphism_on(&spec, &mut rng, 100).map_err(|e| format!("{id} {label}: {e}"))?;
            specs += 1;
        }
    }
    Ok(format!("{specs} presentations x 100 pairs"))
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.gen_range(1..=4usize);
        let ell = rng.gen_range(1..=8u64);
        let mut rows = vec![vec![0i64; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.gen_range(-9..=9);
                rows[i][j] = v;
                rows[j][i] = -v;
            }
        }
        let m = IntMatrix::from_i64(&rows).unwrap();
        let h = image_cardinality(&smith_normal_form(&m).unwrap(), ell).unwrap();
        let brute = brute_force_image(&m, ell).unwrap();
        let local = local_image_size(&rows, ell);
        ensure(h == BigInt::from(brute) && brute as u128 == local, || format!("{rows:?} ell={ell}: {h} {brute} {local}"))?;
    }
    Ok("200 matrices".into())
}

type Poly = Vec<i128>;

fn trim(mut p: Poly) -> Poly {
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

fn pmul(a: &[i128], b: &[i128]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// Quotient and remainder by a monic divisor.
fn pdivmod(a: &[i128], d: &[i128]) -> (Poly, Poly) {
    let mut r = a.to_vec();
    let dl = d.len() - 1;
    if r.len() <= dl {
        return (vec![], trim(r));
    }
    let mut q = vec![0; r.len() - dl];
    for i in (0..q.len()).rev() {
        let c = r[i + dl];
        q[i] = c;
        for (j, y) in d.iter().enumerate() {
            r[i + j] -= c * y;
        }
    }
    (trim(q), trim(r))
}

fn one_minus_t_pow(k: usize) -> Poly {
    let mut p = vec![0; k + 1];
    p[0] = 1;
    p[k] = -1;
    p
}

fn gauss_product(n: usize, m: usize) -> Poly {
    let mut num = vec![1];
    let mut den = vec![1];
    for i in 1..=m {
        num = pmul(&num, &one_minus_t_pow(n - m + i));
        den = pmul(&den, &one_minus_t_pow(i));
    }
    let den: Poly = den.iter().map(|c| c * den.last().unwrap().signum()).collect();
    let sign = if m % 2 == 1 { -1 } else { 1 };
    let (q, r) = pdivmod(&num, &den);
    assert!(r.is_empty());
    q.into_iter().map(|c| c * sign).collect()
}

fn cyclotomic_poly(l: usize) -> Poly {
    let mut p = one_minus_t_pow(l).into_iter().map(|c| -c).collect::<Poly>();
    for d in (1..l).filter(|d| l % d == 0) {
        p = pdivmod(&p, &cyclotomic_poly(d)).0;
    }
    p
}

fn to_poly(p: &LaurentIntPoly) -> Poly {
    assert!(p.min_exp().map_or(true, |e| e >= 0));
    let mut out = vec![0; p.max_exp().map_or(0, |e| e as usize + 1)];
    for (e, c) in p.terms() {
        out[e as usize] = c.to_i128().unwrap();
    }
    trim(out)
}

fn c9() -> Outcome {
    let b = |n: usize, m: usize| to_poly(&t_binomial(n as i64, m as i64).unwrap());
    let shift = |p: Poly, k: usize| -> Poly { trim([vec![0; k], p].concat()) };
    let add = |a: Poly, c: Poly| -> Poly {
        let mut out = vec![0; a.len().max(c.len())];
        for (i, x) in a.iter().enumerate() {
            out[i] += x;
        }
        for (i, x) in c.iter().enumerate() {
            out[i] += x;
        }
        trim(out)
    };
    let mut pascal = 0;
    for n in 1..=20 {
        for m in 0..=n {
            ensure(b(n, m) == gauss_product(n, m), || format!("({n} {m}) differs from the product formula"))?;
        }
        for m in 1..n {
            ensure(b(n, m) == add(b(n - 1, m - 1), shift(b(n - 1, m), m)), || format!("first rule ({n} {m})"))?;
            ensure(b(n, m) == add(shift(b(n - 1, m - 1), n - m), b(n - 1, m)), || format!("second rule ({n} {m})"))?;
            pascal += 1;
        }
    }
    for l in 2..=8 {
        let phi = cyclotomic_poly(l);
        for i in 1..l {
            ensure(pdivmod(&b(l, i), &phi).1.is_empty(), || format!("({l} {i}) at a primitive {l}-th root"))?;
        }
        let id = FamilyId::new(FamilyKind::WeylSingle, 1).unwrap();
        let spec = family_ore_spec_at(&id, &ExponentAssignment::canonical(id.kind, 1, l as u64)).map_err(|e| e.to_string())?;
        let hd = higher_derivation(&spec, 1).map_err(|e| e.to_string())?;
        for i in 0..=2 * l as u32 {
            let y = spec.pow(&spec.var(0), i).unwrap();
            ensure(hd.apply(i as usize, &y).map_err(|e| e.to_string())? == spec.one(), || format!("d_{i}(y^{i}) at order {l}"))?;
        }
    }
    Ok(format!("{pascal} Pascal pairs, roots of order 2..8"))
}

fn a_n(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| (j as i64 - i as i64).signum()).collect()).collect()
}

fn c10() -> Outcome {
    let binom_row = |n: usize| -> Vec<i128> {
        let mut row = vec![1i128];
        for k in 0..n {
            row.push(row[k] * (n - k) as i128 / (k + 1) as i128);
        }
        row
    };
    let closed = |n: usize| -> Poly {
        // half of (x+1)^n + (x-1)^n
        let row = binom_row(n);
        trim((0..=n).map(|k| if (n - k) % 2 == 0 { row[k] } else { 0 }).collect())
    };
    let x_minus_1_pow = |n: usize| -> Poly {
        let row = binom_row(n);
        (0..=n).map(|k| if (n - k) % 2 == 0 { row[k] } else { -row[k] }).collect()
    };
    for n in 1..=6 {
        let a = a_n(n);
        let chi = to_poly(&charpoly(&IntMatrix::from_i64(&a).unwrap()).unwrap());
        ensure(chi == closed(n), || format!("chi_{n} = {chi:?}"))?;
        if n >= 3 {
            let mut rec = pmul(&closed(n - 1), &[1, 1]);
            for (i, c) in x_minus_1_pow(n - 1).iter().enumerate() {
                rec[i] -= c;
            }
            let rec = trim(rec);
            ensure(chi == rec, || format!("recursion at n={n}"))?;
        }
        // chi_n(A_n) = 0
        let mut acc = vec![vec![0i128; n]; n];
        for c in chi.iter().rev() {
            let mut next = vec![vec![0i128; n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).map(|k| acc[i][k] * a[k][j] as i128).sum::<i128>() + if i == j { *c } else { 0 };
                }
            }
            acc = next;
        }
        ensure(acc.iter().flatten().all(|x| x.is_zero()), || format!("chi_{n}(A_{n}) is not zero"))?;
    }
    Ok("n = 1..6".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quantum Euclidean odd: PI degree matches closed form", c1),
        ("quantized Weyl single parameter: PI degree r^n", c2),
        ("quantum matrices single parameter: PI degree closed form", c3),
        ("quantum Euclidean even and symplectic: PI degree closed forms", c4),
        ("Smith form shapes for n <= 5", c5),
        ("second multiparameter quantized Weyl algebra: Ore generators and images", c6),
        ("derivation-removing map is a homomorphism", c7),
        ("image cardinality equals enumeration", c8),
        ("q-arithmetic identities", c9),
        ("characteristic polynomial identity and recursion", c10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
