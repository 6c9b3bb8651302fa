use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skewpi::families::{family_ore_spec_at, generic_spec, ExponentAssignment, FamilyId, FamilyKind};
use skewpi::ore::{element_from_wire, element_to_wire, OreSpec};
use skewpi::pidegree::{image_cardinality, pi_degree, smith_normal_form, IntMatrix};
use skewpi::removal::{iterate_removal, remove_last_derivation, reorder_variables, rewrite_element};
use skewpi::sample::random_element;
use skewpi::sweep::{self, sweep, to_csv};

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-12i64..=12, c), r))
}

fn skew() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(-8i64..=8, n * (n - 1) / 2).prop_map(move |upper| {
            let mut m = vec![vec![0; n]; n];
            let mut it = upper.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let v = it.next().unwrap();
                    m[i][j] = v;
                    m[j][i] = -v;
                }
            }
            m
        })
    })
}

fn spec_for(kind: FamilyKind, r: Option<u64>) -> OreSpec {
    let id = FamilyId::new(kind, 2).unwrap();
    match r {
        None => generic_spec(&id).unwrap(),
        Some(r) => {
            let a = if kind.is_single() {
                ExponentAssignment::canonical(kind, 2, r)
            } else {
                ExponentAssignment { r, b: vec![1, 2], c: vec![3, 4], bmat: vec![vec![0, 1], vec![-1, 0]], lam: 2 }
            };
            family_ore_spec_at(&id, &a).unwrap()
        }
    }
}

fn kinds() -> impl Strategy<Value = FamilyKind> {
    prop::sample::select(FamilyKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smith_form_is_a_certified_factorization(rows in matrix()) {
        let a = IntMatrix::from_i64(&rows).unwrap();
        let snf = smith_normal_form(&a).unwrap();
        prop_assert_eq!(snf.u.mul(&a).unwrap().mul(&snf.v).unwrap(), snf.s.clone());
        prop_assert!(snf.u.determinant().unwrap().abs().is_one());
        prop_assert!(snf.v.determinant().unwrap().abs().is_one());
        let d = snf.invariant_factors();
        for w in d.windows(2) {
            prop_assert!(w[1].is_zero() || (!w[0].is_zero() && (&w[1] % &w[0]).is_zero()));
        }
    }

    #[test]
    fn skew_matrices_give_square_h(rows in skew(), ell in 1u64..=30) {
        let a = IntMatrix::from_i64(&rows).unwrap();
        let rep = pi_degree(&a, ell).unwrap();
        prop_assert_eq!(&rep.pi_degree * &rep.pi_degree, rep.h.clone());
        let d = rep.invariant_factors;
        for pair in d.chunks(2).filter(|c| c.len() == 2) {
            prop_assert_eq!(&pair[0], &pair[1]);
        }
        prop_assert!(rep.h <= BigInt::from(ell).pow(rows.len() as u32));
    }

    #[test]
    fn image_is_invariant_under_transposition(rows in matrix(), ell in 1u64..=12) {
        let a = IntMatrix::from_i64(&rows).unwrap();
        let h = image_cardinality(&smith_normal_form(&a).unwrap(), ell).unwrap();
        let ht = image_cardinality(&smith_normal_form(&a.transpose()).unwrap(), ell).unwrap();
        prop_assert_eq!(h, ht);
    }

    #[test]
    fn matrix_json_round_trip(rows in matrix()) {
        let a = IntMatrix::from_i64(&rows).unwrap();
        let back: IntMatrix = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn element_and_spec_json_round_trip(kind in kinds(), r in prop::option::of(3u64..=6), seed in any::<u64>()) {
        let spec = spec_for(kind, r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_element(&spec, &mut rng, spec.n(), 3, 4);
        let w = serde_json::to_string(&element_to_wire(&a)).unwrap();
        let back = element_from_wire(&spec.field, &serde_json::from_str(&w).unwrap()).unwrap();
        prop_assert_eq!(&back, &a);
        let again = OreSpec::from_json(&spec.to_json()).unwrap();
        prop_assert_eq!(again.to_json(), spec.to_json());
        let b = random_element(&spec, &mut rng, spec.n(), 2, 3);
        prop_assert_eq!(again.mul(&a, &b).unwrap(), spec.mul(&a, &b).unwrap());
    }

    #[test]
    fn reordering_preserves_products(kind in kinds(), seed in any::<u64>()) {
        let spec = spec_for(kind, None);
        let (t, _) = remove_last_derivation(&spec).unwrap();
        let n = t.n();
        let perm: Vec<usize> = std::iter::once(n - 1).chain(0..n - 1).collect();
        let u = match reorder_variables(&t, &perm) {
            Ok(u) => u,
            Err(_) => return Ok(()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_element(&t, &mut rng, n, 2, 3);
        let b = random_element(&t, &mut rng, n, 2, 3);
        let lhs = rewrite_element(&t, &perm, &t.mul(&a, &b).unwrap()).unwrap();
        let rhs = u.mul(&rewrite_element(&t, &perm, &a).unwrap(), &rewrite_element(&t, &perm, &b).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn parallel_and_sequential_sweeps_agree() {
    for kind in FamilyKind::ALL.into_iter().filter(|k| k.is_single()) {
        let ns: Vec<usize> = (kind.min_n()..=4).collect();
        let rs: Vec<u64> = (2..=13).collect();
        let p = sweep(kind, &ns, &rs, sweep::Strategy::Parallel).unwrap();
        let s = sweep(kind, &ns, &rs, sweep::Strategy::Sequential).unwrap();
        assert_eq!(p, s);
        assert_eq!(to_csv(&p), to_csv(&s));
        assert!(p.iter().all(|row| row.matches == Some(true)));
    }
}

#[test]
fn sweep_input_order_does_not_matter() {
    let a = sweep(FamilyKind::Symplectic, &[3, 1, 2, 1], &[7, 2, 5], sweep::Strategy::default()).unwrap();
    let b = sweep(FamilyKind::Symplectic, &[1, 2, 3], &[2, 5, 7], sweep::Strategy::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn removal_results_serialize_deterministically() {
    let spec = spec_for(FamilyKind::Kpq, Some(5));
    let a = iterate_removal(&spec).unwrap().to_json();
    let b = iterate_removal(&spec).unwrap().to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!(v["ore_generators"].as_array().unwrap().len() <= spec.n());
}
