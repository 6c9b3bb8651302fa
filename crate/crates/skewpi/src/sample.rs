//! Seeded random scalars and ring elements for property checks.

use rand::Rng;

use crate::ore::{OreElement, OreSpec};
use crate::scalars::{FieldMode, Scalar, ScalarField};

/// A small nonzero scalar: an integer times a parameter power (generic) or
/// a short integer combination of powers of zeta (cyclotomic).
pub fn random_scalar<R: Rng>(field: &ScalarField, rng: &mut R) -> Scalar {
    loop {
        let s = match field.mode() {
            FieldMode::Cyclotomic(_) => {
                let z = field.generator();
                let mut acc = field.zero();
                for _ in 0..rng.gen_range(1..=2) {
                    let t = z.pow(rng.gen_range(0..6)).expect("unit");
                    acc = &acc + &(&field.from_int(rng.gen_range(-2..=2)) * &t);
                }
                acc
            }
            _ => {
                let names = field.param_names();
                let p = field.param(&names[rng.gen_range(0..names.len())]).expect("param");
                let c = field.from_int(rng.gen_range(-3..=3));
                &c * &p.pow(rng.gen_range(-1..=1)).expect("unit")
            }
        };
        if !s.is_zero() {
            return s;
        }
    }
}

/// Random element in the first `nvars` variables with nonnegative exponents
/// of total degree at most `max_deg`.
pub fn random_element<R: Rng>(spec: &OreSpec, rng: &mut R, nvars: usize, max_deg: u32, max_terms: usize) -> OreElement {
    let mut out = OreElement::zero();
    let terms = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..terms {
        let mut e = vec![0i64; spec.n()];
        if nvars > 0 {
            let deg = rng.gen_range(0..=max_deg);
            for _ in 0..deg {
                e[rng.gen_range(0..nvars)] += 1;
            }
        }
        out.add_term(e, random_scalar(&spec.field, rng));
    }
    if out.is_zero() {
        return spec.one();
    }
    out
}
