use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use orbirig::cellmodel::{CellModel, MapKind};
use orbirig::charpair::CharacteristicPair;
use orbirig::exactalg::{smith_normal_form, solve_mod, IntMatrix, Modulus};
use orbirig::properiso::{check_proper_iso, compose, invert, proper_isos, ProperIso};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-6i64..=6, cols), rows)
}

// every x in (Z/m)^k, for tiny k and m
fn all_vectors(k: usize, m: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| (0..m).map(move |x| [v.clone(), vec![x]].concat()))
            .collect();
    }
    out
}

fn apply(a: &[Vec<i64>], x: &[i64], m: i64) -> Vec<i64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum::<i64>().rem_euclid(m))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn smith_form_is_a_diagonal_factorisation(rows in matrix(3, 4)) {
        let m = IntMatrix::from_rows(&rows);
        let snf = smith_normal_form(&m);
        let prod = snf.u.checked_mul(&m).unwrap().checked_mul(&snf.v).unwrap();
        prop_assert_eq!(&prod, &snf.d);
        prop_assert!(snf.u.is_unimodular() && snf.v.is_unimodular());
        let diag = snf.diagonal();
        for w in diag.windows(2) {
            prop_assert!(!w[0].is_negative());
            prop_assert!(w[1].is_zero() || (!w[0].is_zero() && w[1].is_multiple_of(&w[0])));
        }
    }

    #[test]
    fn solve_mod_agrees_with_exhaustive_search(rows in matrix(2, 3), rhs in prop::collection::vec(-6i64..=6, 2), m in 2i64..=6) {
        let a = IntMatrix::from_rows(&rows);
        let b: Vec<BigInt> = rhs.iter().map(|&x| BigInt::from(x)).collect();
        let want: Vec<i64> = rhs.iter().map(|x| x.rem_euclid(m)).collect();
        let exists = all_vectors(3, m).iter().any(|x| apply(&rows, x, m) == want);
        let got = solve_mod(&a, &b, Modulus::Finite(m as u64)).unwrap();
        prop_assert_eq!(got.is_some(), exists);
        if let Some(x) = got {
            let x: Vec<i64> = x.iter().map(|v| i64::try_from(v).unwrap()).collect();
            prop_assert_eq!(apply(&rows, &x, m), want);
        }
    }

    #[test]
    fn pair_invariants_survive_relabeling_and_basis_change(
        facets in prop::collection::vec((-5i64..=5, -5i64..=5), 3..=6),
        shift in 0usize..6,
        basis in prop::sample::select(vec![[1i64, 0, 0, 1], [0, 1, 1, 0], [1, 1, 0, 1], [2, 1, 1, 1], [1, 0, 3, -1]]),
    ) {
        let facets: Vec<[i64; 2]> = facets.into_iter().map(|(a, b)| [a, b]).collect();
        let pair = CharacteristicPair::new(facets.clone());
        prop_assume!(pair.validate().is_valid());
        let inv = pair.invariants().unwrap();

        let m = facets.len();
        let rotated: Vec<[i64; 2]> = (0..m).map(|i| facets[(i + shift) % m]).collect();
        let rot = CharacteristicPair::new(rotated).invariants().unwrap();
        prop_assert_eq!(rot.g, inv.g);
        let mut a = rot.vertex_dets.clone();
        let mut b = inv.vertex_dets.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);

        let [p, q, r, s] = basis;
        let moved: Vec<[i64; 2]> = facets.iter().map(|f| [p * f[0] + q * f[1], r * f[0] + s * f[1]]).collect();
        let mv = CharacteristicPair::new(moved).invariants().unwrap();
        prop_assert_eq!(mv.g, inv.g);
        prop_assert_eq!(mv.vertex_dets, inv.vertex_dets);
    }

    #[test]
    fn cup_products_are_symmetric_and_bilinear(
        a in -4i64..=4, b in 0i64..6, c in 0i64..12,
        x in prop::collection::vec(0i64..6, 2), y in prop::collection::vec(0i64..6, 2), z in prop::collection::vec(0i64..6, 2),
    ) {
        let m = CellModel::rank_one(6, a, b, c);
        let f = Modulus::Finite(6);
        let e = |v: &[i64]| m.element(f, 2, v).unwrap();
        let (x, y, z) = (e(&x), e(&y), e(&z));
        prop_assert_eq!(m.cup(&x, &y).unwrap(), m.cup(&y, &x).unwrap());
        let lhs = m.cup(&x, &m.add(&y, &z).unwrap()).unwrap();
        let rhs = m.add(&m.cup(&x, &y).unwrap(), &m.cup(&x, &z).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn reduction_then_inclusion_is_multiplication(a in -4i64..=4, b in 0i64..4, c in 0i64..8, x in prop::collection::vec(0i64..8, 2)) {
        // Z/8 -> Z/4 -> Z/8 multiplies by 2
        let m = CellModel::rank_one(4, a, b, c);
        let (f8, f4) = (Modulus::Finite(8), Modulus::Finite(4));
        let x = m.element(f8, 2, &x).unwrap();
        let down = m.coefficient_map(MapKind::Reduce, f8, f4, &x).unwrap();
        let back = m.coefficient_map(MapKind::Include, f4, f8, &down).unwrap();
        prop_assert_eq!(back, m.scale(2, &x).unwrap());
    }
}

#[test]
fn isos_form_a_groupoid() {
    let models: Vec<CellModel> = (0..8).map(|c| CellModel::rank_one(4, 2, 1, c)).collect();
    for x in &models {
        for xp in &models {
            for phi in proper_isos(x, xp, 1).unwrap() {
                let inv = invert(&phi);
                assert!(check_proper_iso(&inv, xp, x).unwrap().is_empty());
                let round = compose(&phi, &inv).unwrap();
                assert_eq!(round, ProperIso::identity(1, 4), "{phi:?}");
            }
        }
    }
}

#[test]
fn malformed_isos_are_rejected_not_panicking() {
    let x = CellModel::from_rows(2, 4, vec![vec![0, 0], vec![0, 0]], vec![0, 0], 0).unwrap();
    let mut iso = ProperIso::identity(2, 4);
    iso.s = vec![vec![1, 0], vec![0]];
    assert!(check_proper_iso(&iso, &x, &x).is_err());
    let mut iso = ProperIso::identity(2, 4);
    iso.d = vec![0];
    assert!(check_proper_iso(&iso, &x, &x).is_err());
    let iso = ProperIso::identity(1, 4);
    assert!(check_proper_iso(&iso, &x, &x).is_err());
}
