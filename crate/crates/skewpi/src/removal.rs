//! Deleting derivations: the embedding `f: R[x; tau] -> A S^{-1}`, variable
//! reordering, and the iteration that ends in a quantum torus.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ore::{element_to_wire, higher_derivation, ElementWire, OreElement, OreSpec};
use crate::scalars::{FieldDesc, Scalar};

/// `q^{n(n+1)/2} (q - 1)^{-n}`.
fn coefficient(q: &Scalar, n: usize) -> Result<Scalar> {
    let n = n as i64;
    let qm1 = q - &q.field().one();
    Ok(&q.pow(n * (n + 1) / 2)? * &qm1.pow(-n)?)
}

const EXTRA_ZEROS: usize = 4;

/// Multiplicative order of `q`, if it is at most `cap`.
fn root_order(q: &Scalar, cap: usize) -> Option<usize> {
    let mut p = q.clone();
    for m in 1..=cap {
        if p.is_one() {
            return Some(m);
        }
        p = &p * q;
    }
    None
}

/// `d_n(tau^{-n} r)` for `n = 0, 1, ...` until the series provably stops.
///
/// When the q-skew parameter has order `l`, iterativity gives
/// `d_{al+b} = d_b d_{al}` and `d_{(a+1)l} = d_l d_{al} / (a+1)`, so the terms
/// vanish for good from the first zero at a multiple of `l` (any zero when
/// `l` is infinite). A few further terms are checked as a guard.
fn series_terms(spec: &OreSpec, k: usize, r: &OreElement) -> Result<Vec<OreElement>> {
    let hd = higher_derivation(spec, k)?;
    let ell = root_order(&spec.check_qskew(k)?, spec.max_index).unwrap_or(1);
    let term = |n: usize| -> Result<OreElement> { hd.apply(n, &spec.tau(k, -(n as i64), r)?) };
    let mut out = Vec::new();
    for n in 0.. {
        if n > spec.max_index {
            return Err(Error::NotLocallyNilpotent(spec.max_index));
        }
        let t = term(n)?;
        if t.is_zero() && n % ell == 0 {
            for m in n + 1..=n + EXTRA_ZEROS {
                if !term(m)?.is_zero() {
                    return Err(Error::Invariant(format!("d_{m} nonzero after d_{n} vanished")));
                }
            }
            break;
        }
        out.push(t);
    }
    while out.last().is_some_and(|t| t.is_zero()) {
        out.pop();
    }
    Ok(out)
}

/// Checks that the last variable carries a removable derivation and returns
/// its q-skew parameter, or `None` when the derivation is zero.
fn removable(spec: &OreSpec) -> Result<Option<Scalar>> {
    let k = spec.n().checked_sub(1).ok_or_else(|| Error::Usage("empty presentation".into()))?;
    if spec.delta_is_zero(k) {
        return Ok(None);
    }
    let q = spec.check_qskew(k)?;
    if q.is_one() {
        return Err(Error::NotRemovable(format!("{} has q-skew parameter 1", spec.vars[k])));
    }
    Ok(Some(q))
}

/// `f(r) = sum_n q^{n(n+1)/2} (q-1)^{-n} d_n(tau^{-n} r) x^{-n}` for `r` in the
/// subalgebra below the last variable `x`. The result lives in the
/// presentation localized at `x`.
pub fn f_image(spec: &OreSpec, r: &OreElement) -> Result<OreElement> {
    let Some(q) = removable(spec)? else {
        return Ok(r.clone());
    };
    let k = spec.n() - 1;
    spec.tau(k, 0, r)?;
    let mut out = OreElement::zero();
    for (n, t) in series_terms(spec, k, r)?.into_iter().enumerate() {
        let c = coefficient(&q, n)?;
        for (e, a) in t.terms() {
            let mut e = e.clone();
            e[k] -= n as i64;
            out.add_term(e, a * &c);
        }
    }
    Ok(out)
}

/// Writes `r` as `sum_m f(a_m) x^{-m}`; returns the `a_m`.
pub fn recover(spec: &OreSpec, r: &OreElement) -> Result<BTreeMap<usize, OreElement>> {
    let mut out = BTreeMap::new();
    if r.is_zero() {
        return Ok(out);
    }
    out.insert(0, r.clone());
    let Some(q) = removable(spec)? else {
        return Ok(out);
    };
    let k = spec.n() - 1;
    for (n, s) in series_terms(spec, k, r)?.into_iter().enumerate().skip(1) {
        let c = coefficient(&q, n)?;
        for (m, a) in recover(spec, &s)? {
            let slot = out.entry(m + n).or_insert_with(OreElement::zero);
            *slot = slot.sub(&a.scale(&c));
        }
    }
    out.retain(|_, a| !a.is_zero());
    Ok(out)
}

/// `x^{-m}` on the right: the last variable is outermost, so this only
/// shifts its exponent.
pub fn times_last_inverse(a: &OreElement, k: usize, m: usize) -> OreElement {
    OreElement::from_terms(a.terms().map(|(e, c)| {
        let mut e = e.clone();
        e[k] -= m as i64;
        (e, c.clone())
    }))
}

#[derive(Clone, Debug)]
pub struct RemovalStep {
    /// Variable order of the presentation the step acted on.
    pub vars: Vec<String>,
    pub removed: String,
    /// True when the last variable had no derivation to remove.
    pub identity: bool,
    /// `f(x_j)` for each variable, in the localized presentation.
    pub images: Vec<OreElement>,
    /// Numerator, in the original algebra, of the element inverted at this
    /// step; `None` when it could not be expressed there.
    pub ore_generator: Option<OreElement>,
}

/// Zeroes the last derivation and makes the last variable invertible.
fn strip_last(spec: &OreSpec) -> Result<OreSpec> {
    let k = spec.n() - 1;
    let mut delta = spec.delta.clone();
    delta[k].iter_mut().for_each(|d| *d = OreElement::zero());
    let mut inv = spec.invertible.clone();
    inv[k] = true;
    let mut out = OreSpec::new(spec.field.clone(), spec.vars.clone(), spec.lambda.clone(), spec.qskew.clone(), delta, inv)?;
    out.max_index = spec.max_index;
    if let Some(l) = &spec.lift {
        out = out.with_lift(std::sync::Arc::new(strip_last(&l.spec)?), l.values.clone())?;
    }
    Ok(out)
}

/// One deletion step: the presentation with the last derivation removed
/// (the last variable now invertible) and the images of the generators.
pub fn remove_last_derivation(spec: &OreSpec) -> Result<(OreSpec, RemovalStep)> {
    let k = spec.n().checked_sub(1).ok_or_else(|| Error::Usage("empty presentation".into()))?;
    let identity = removable(spec)?.is_none();
    let mut images = Vec::with_capacity(k + 1);
    for j in 0..k {
        images.push(if identity { spec.var(j) } else { f_image(spec, &spec.var(j))? });
    }
    images.push(spec.var(k));
    let next = strip_last(spec)?;
    let step = RemovalStep {
        vars: spec.vars.clone(),
        removed: spec.vars[k].clone(),
        identity,
        images,
        ore_generator: Some(spec.var(k)),
    };
    Ok((next, step))
}

fn check_perm(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    if perm.len() != n {
        return Err(Error::Usage("permutation has the wrong length".into()));
    }
    let mut pos = vec![usize::MAX; n];
    for (a, &old) in perm.iter().enumerate() {
        if old >= n || pos[old] != usize::MAX {
            return Err(Error::Usage("not a permutation".into()));
        }
        pos[old] = a;
    }
    Ok(pos)
}

/// Re-expresses `r` in the order where new variable `a` is old `perm[a]`.
/// Each pair of variables that changes relative order must commute up to
/// the scalar `lambda`.
pub fn rewrite_element(spec: &OreSpec, perm: &[usize], r: &OreElement) -> Result<OreElement> {
    let n = spec.n();
    let pos = check_perm(perm, n)?;
    let mut out = OreElement::zero();
    for (e, c) in r.terms() {
        let mut f = c.clone();
        for u in 0..n {
            for v in u + 1..n {
                if pos[u] < pos[v] || e[u] == 0 || e[v] == 0 {
                    continue;
                }
                if !spec.delta[v][u].is_zero() {
                    return Err(Error::NotReorderable(format!("{} cannot move past {}", spec.vars[v], spec.vars[u])));
                }
                // x_u^a x_v^b = lambda_uv^{ab} x_v^b x_u^a
                f = &f * &spec.lambda[u][v].pow(e[u] * e[v])?;
            }
        }
        out.add_term(perm.iter().map(|&o| e[o]).collect(), f);
    }
    Ok(out)
}

/// The same algebra presented with variables in the order `perm` (new
/// position `a` holds old variable `perm[a]`).
pub fn reorder_variables(spec: &OreSpec, perm: &[usize]) -> Result<OreSpec> {
    let n = spec.n();
    let pos = check_perm(perm, n)?;
    for u in 0..n {
        for v in u + 1..n {
            if pos[u] > pos[v] && !spec.delta[v][u].is_zero() {
                return Err(Error::NotReorderable(format!("{} cannot move past {}", spec.vars[v], spec.vars[u])));
            }
        }
    }
    let lambda = perm.iter().map(|&i| perm.iter().map(|&j| spec.lambda[i][j].clone()).collect()).collect();
    let qskew = perm.iter().map(|&i| spec.qskew[i].clone()).collect();
    let invertible = perm.iter().map(|&i| spec.invertible[i]).collect();
    let vars = perm.iter().map(|&i| spec.vars[i].clone()).collect();
    let mut delta = vec![vec![OreElement::zero(); n]; n];
    for a in 0..n {
        for b in 0..a {
            let (i, j) = (perm[a], perm[b]);
            if j > i || spec.delta[i][j].is_zero() {
                continue;
            }
            let d = rewrite_element(spec, perm, &spec.delta[i][j])?;
            if d.max_var().is_some_and(|m| m >= a) {
                return Err(Error::NotReorderable(format!(
                    "delta_{}({}) involves variables placed after {}",
                    spec.vars[i], spec.vars[j], spec.vars[i]
                )));
            }
            delta[a][b] = d;
        }
    }
    let mut out = OreSpec::new(spec.field.clone(), vars, lambda, qskew, delta, invertible)?;
    out.max_index = spec.max_index;
    if let Some(l) = &spec.lift {
        out = out.with_lift(std::sync::Arc::new(reorder_variables(&l.spec, perm)?), l.values.clone())?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RemovalResult {
    pub vars: Vec<String>,
    pub lambda_final: Vec<Vec<Scalar>>,
    pub steps: Vec<RemovalStep>,
    pub ore_generators: Vec<OreElement>,
    pub final_spec: OreSpec,
}

/// Tracks what each current variable means in the original algebra,
/// localized at the variables inverted so far.
struct Meanings {
    orig: OreSpec,
    of: Vec<Option<OreElement>>,
}

impl Meanings {
    /// Inverse of a monomial meaning, localizing the original algebra at the
    /// variables it involves.
    fn inverse(&mut self, m: &OreElement) -> Option<OreElement> {
        if m.len() != 1 {
            return None;
        }
        let (e, c) = m.terms().next()?;
        for (i, x) in e.iter().enumerate() {
            if *x != 0 && !self.orig.invertible[i] {
                let loc = self.orig.localized(i).ok()?;
                let old = std::mem::replace(&mut self.orig, loc);
                drop(old);
            }
        }
        let mut acc = self.orig.constant(c.inv().ok()?);
        for (i, x) in e.iter().enumerate() {
            if *x != 0 {
                acc = self.orig.mul(&self.orig.var_pow(i, -x), &acc).ok()?;
            }
        }
        Some(acc)
    }

    fn substitute(&self, r: &OreElement, k: usize, inv_k: Option<&OreElement>) -> Option<OreElement> {
        let mut out = OreElement::zero();
        for (e, c) in r.terms() {
            let mut t = self.orig.constant(c.clone());
            for (i, x) in e.iter().enumerate() {
                let base = match (*x < 0, i == k) {
                    (false, _) => self.of[i].as_ref()?,
                    (true, true) => inv_k?,
                    (true, false) => return None,
                };
                for _ in 0..x.unsigned_abs() {
                    t = self.orig.mul(&t, base).ok()?;
                }
            }
            out = out.add(&t);
        }
        Some(out)
    }

    /// Right-multiplies by powers of inverted variables until no negative
    /// exponent is left, then normalizes the leading coefficient.
    fn numerator(&self, m: &OreElement) -> Option<OreElement> {
        let mut cur = m.clone();
        for _ in 0..=self.orig.max_index {
            let n = self.orig.n();
            let Some(i) = (0..n).find(|i| cur.terms().any(|(e, _)| e[*i] < 0)) else {
                return cur.monic().ok();
            };
            let p = cur.terms().map(|(e, _)| -e[i]).max().unwrap_or(0);
            cur = self.orig.mul(&cur, &self.orig.var_pow(i, p)).ok()?;
        }
        None
    }
}

/// Removes the derivations from the last variable down, moving each freed
/// variable to the front, until the presentation is a quantum torus in the
/// original variable order.
pub fn iterate_removal(spec: &OreSpec) -> Result<RemovalResult> {
    let n = spec.n();
    let mut cur = spec.clone();
    let mut mean = Meanings { orig: spec.clone(), of: (0..n).map(|i| Some(spec.var(i))).collect() };
    let mut steps = Vec::with_capacity(n);
    let perm: Vec<usize> = std::iter::once(n - 1).chain(0..n - 1).collect();
    for _ in 0..n {
        let k = n - 1;
        let (next, mut step) = remove_last_derivation(&cur)?;
        let needs_inv = step.images.iter().any(|e| e.has_negative_exponent());
        let inv_k = match (&mean.of[k], needs_inv) {
            (Some(m), true) => {
                let m = m.clone();
                mean.inverse(&m)
            }
            _ => None,
        };
        let mut of = mean.of.clone();
        for j in 0..k {
            if step.images[j] != cur.var(j) {
                of[j] = mean.substitute(&step.images[j], k, inv_k.as_ref());
            }
        }
        step.ore_generator = mean.of[k].as_ref().and_then(|m| mean.numerator(m));
        mean.of = perm.iter().map(|&i| of[i].clone()).collect();
        cur = reorder_variables(&next, &perm)?;
        steps.push(step);
    }
    let ore_generators = steps.iter().filter_map(|s| s.ore_generator.clone()).collect();
    Ok(RemovalResult {
        vars: spec.vars.clone(),
        lambda_final: cur.lambda.clone(),
        steps,
        ore_generators,
        final_spec: cur,
    })
}

#[derive(Serialize)]
struct ImageOut {
    var: String,
    text: String,
    #[serde(flatten)]
    terms: ElementWire,
}

#[derive(Serialize)]
struct StepOut {
    removed: String,
    identity: bool,
    order: Vec<String>,
    images: Vec<ImageOut>,
    ore_generator: Option<String>,
}

#[derive(Serialize)]
struct ResultOut {
    field: FieldDesc,
    vars: Vec<String>,
    lambda_final: Vec<Vec<String>>,
    steps: Vec<StepOut>,
    ore_generators: Vec<String>,
}

impl RemovalResult {
    pub fn to_json(&self) -> String {
        let fmt = |vars: &[String], e: &OreElement| crate::ore::format_element(vars, e);
        let out = ResultOut {
            field: FieldDesc::of(&self.final_spec.field),
            vars: self.vars.clone(),
            lambda_final: self.lambda_final.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
            steps: self
                .steps
                .iter()
                .map(|s| StepOut {
                    removed: s.removed.clone(),
                    identity: s.identity,
                    order: s.vars.clone(),
                    images: s
                        .vars
                        .iter()
                        .zip(&s.images)
                        .map(|(v, e)| ImageOut { var: v.clone(), text: fmt(&s.vars, e), terms: element_to_wire(e) })
                        .collect(),
                    ore_generator: s.ore_generator.as_ref().map(|g| fmt(&self.vars, g)),
                })
                .collect(),
            ore_generators: self.ore_generators.iter().map(|g| fmt(&self.vars, g)).collect(),
        };
        serde_json::to_string_pretty(&out).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, st) in self.steps.iter().enumerate() {
            s += &format!("step {}: {} ({})\n", i + 1, st.removed, if st.identity { "no derivation" } else { "removed" });
            for (j, (v, e)) in st.vars.iter().zip(&st.images).enumerate() {
                let is_var = e.len() == 1
                    && e.lead().is_some_and(|(x, c)| c.is_one() && x.iter().enumerate().all(|(i, p)| *p == (i == j) as i64));
                if !is_var {
                    s += &format!("  {v} -> {}\n", crate::ore::format_element(&st.vars, e));
                }
            }
        }
        s += "ore generators:\n";
        for g in &self.ore_generators {
            s += &format!("  {}\n", crate::ore::format_element(&self.vars, g));
        }
        s += "lambda:\n";
        for r in &self.lambda_final {
            s += &format!("  [{}]\n", r.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{generic_spec, FamilyId, FamilyKind};

    fn a1() -> OreSpec {
        generic_spec(&FamilyId::new(FamilyKind::WeylSingle, 1).unwrap()).unwrap()
    }

    #[test]
    fn quantum_weyl_image() {
        let s = a1();
        let y = s.var(0);
        let want = s.parse_element("y1").unwrap().add(&s.localized(1).unwrap().parse_element("1/(q - 1)*x1^-1").unwrap());
        assert_eq!(f_image(&s, &y).unwrap(), want);
        let (next, step) = remove_last_derivation(&s).unwrap();
        assert!(!step.identity);
        let q = s.field.param("q").unwrap();
        assert_eq!(next.lambda[0][1], q.inv().unwrap());
        assert_eq!(next.lambda[1][0], q);
        assert!(next.delta_is_zero(1));
        assert!(matches!(reorder_variables(&s, &[1, 0]), Err(Error::NotReorderable(_))));
    }

    #[test]
    fn recovery_round_trip() {
        let s = a1();
        let loc = s.localized(1).unwrap();
        for d in 0..4 {
            let r = s.pow(&s.var(0), d).unwrap();
            let parts = recover(&s, &r).unwrap();
            let mut back = OreElement::zero();
            for (m, a) in parts {
                back = back.add(&times_last_inverse(&f_image(&s, &a).unwrap(), 1, m));
            }
            assert_eq!(back, r, "y^{d}");
            let fr = f_image(&s, &r).unwrap();
            let x = loc.var(1);
            let lhs = loc.mul(&x, &fr).unwrap();
            let rhs = loc.mul(&f_image(&s, &s.tau(1, 1, &r).unwrap()).unwrap(), &x).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn series_skips_interior_zeros_at_roots_of_unity() {
        use crate::families::{family_ore_spec_at, ExponentAssignment};
        // at q = -1, d_1(y^2) vanishes but d_2(y^2) = 1
        let id = FamilyId::new(FamilyKind::WeylSingle, 1).unwrap();
        let s = family_ore_spec_at(&id, &ExponentAssignment::canonical(id.kind, 1, 2)).unwrap();
        let loc = s.localized(1).unwrap();
        for k in 1..=5 {
            let yk = s.pow(&s.var(0), k).unwrap();
            let fy = f_image(&s, &s.var(0)).unwrap();
            assert_eq!(f_image(&s, &yk).unwrap(), loc.pow(&fy, k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn identity_step() {
        let s = generic_spec(&FamilyId::new(FamilyKind::Kpq, 1).unwrap()).unwrap();
        let (_, step) = remove_last_derivation(&s).unwrap();
        assert!(step.identity);
        assert_eq!(step.images, vec![s.var(0), s.var(1)]);
    }
}
