mod common;

use dimforge::dimgroup::{interpolate, DimElem, DimGroupParams};
use dimforge::orderauto::{classify_residues, commutation_obstruction, enumerate_classes_by_images, Obstruction};
use dimforge::pell::{residue_sieve, solve_norm_equation, SieveOutcome};
use dimforge::quad::{QuadRat, RingParams};
use dimforge::sunits::positive_unit_generators;
use num_bigint::BigInt;
use proptest::prelude::*;

fn standard() -> DimGroupParams {
    DimGroupParams::standard()
}

fn unit_rings() -> impl Strategy<Value = RingParams> {
    prop::sample::select(vec![(3u64, 5u64), (3, 7), (3, 2), (3, 11), (5, 2), (17, 2), (10, 3), (2, 7), (7, 3)])
        .prop_map(|(d, p)| RingParams::new(d, p).unwrap())
}

fn dim_elem() -> impl Strategy<Value = DimElem> {
    (-1i64..2, -10_000i64..10_000, -10_000i64..10_000, -20i64..20, -20i64..20)
        .prop_map(|(i, j, k, t, u)| DimElem::new(standard(), i, j, k, j + 9 * t, k + 3 * u).unwrap())
}

proptest! {
    #[test]
    fn norm_equation_solutions_are_genuine(d in 2u64..60, n in -40i64..40) {
        prop_assume!(n != 0 && !dimforge::quad::is_perfect_square(d));
        let v = solve_norm_equation(d, n).unwrap();
        for (x, y) in &v.solutions {
            prop_assert_eq!(x * x - BigInt::from(d) * y * y, BigInt::from(n));
        }
        if let Some(c) = &v.certificate {
            prop_assert!(c.replay().is_ok());
        }
        prop_assert_eq!(v.is_solvable(), common::brute_norm_solution(d as i64, n, 2_000).is_some());
    }

    #[test]
    fn sieve_impossible_means_no_small_solution(d in 2i64..40, n in -30i64..30, m in 2u64..40) {
        prop_assume!(n != 0);
        if residue_sieve(d, n, m) == SieveOutcome::Impossible {
            prop_assert!(common::brute_norm_solution(d, n, 500).is_none());
        }
    }

    #[test]
    fn unit_exponents_round_trip(ring in unit_rings(), raw in prop::collection::vec(-3i64..4, 3)) {
        let g = positive_unit_generators(ring).unwrap();
        let exps = &raw[..g.rank()];
        let x = g.element(exps);
        prop_assert!(x.is_positive() && x.is_unit());
        prop_assert_eq!(g.exponents(&x), Some(exps.to_vec()));
    }

    #[test]
    fn interpolation_sits_between(a in dim_elem(), b in dim_elem(), c in dim_elem(), d in dim_elem()) {
        let lower = [a, b];
        let upper = [&c + &DimElem::order_unit(standard()).scale(1_000_000_000), d.clone()];
        match interpolate(&lower, &upper) {
            Some(m) => {
                prop_assert!(lower.iter().all(|x| x.le(&m)));
                prop_assert!(upper.iter().all(|y| m.le(y)));
            }
            None => prop_assert!(lower.iter().any(|x| upper.iter().any(|y| !x.le(y)))),
        }
    }

    #[test]
    fn unperforation(e in dim_elem(), n in 1i64..50) {
        prop_assert_eq!(e.scale(n).is_positive(), e.is_positive());
    }

    #[test]
    fn classification_routes_agree(a in -3i64..4, b in -3i64..4) {
        let five = QuadRat::from_int(standard().ring(), 5);
        let eps = QuadRat::new(standard().ring(), 2, 1, 0);
        let l = &five.pow(a).unwrap() * &eps.pow(b).unwrap();
        let fast = classify_residues(standard(), &l, 9).unwrap();
        prop_assert_eq!(&fast, &enumerate_classes_by_images(standard(), &l, 9));
        let inv = l.invert().unwrap();
        let (lj, lk) = common::step_numerators(l.j(), l.k(), l.e(), 5, 6);
        let (ij, ik) = common::step_numerators(inv.j(), inv.k(), inv.e(), 5, 6);
        let mut brute = common::brute_classes((&lj, &lk), (&ij, &ik), 3, 9, 3, 9);
        brute.sort();
        let mut mine: Vec<([u64; 4], i8)> = fast.iter().map(|c| (c.entries, c.det_sign)).collect();
        mine.sort();
        prop_assert_eq!(mine, brute);
    }
}

#[test]
fn integral_units_lie_in_the_group() {
    // Every integral j + k√d with norm ±p^n found by brute force is, up to
    // sign, a product of the computed generators.
    for (d, p) in [(3u64, 5u64), (3, 11), (3, 2), (10, 3), (2, 7)] {
        let ring = RingParams::new(d, p).unwrap();
        let g = positive_unit_generators(ring).unwrap();
        let powers: Vec<i128> = (0..12).map(|n| (p as i128).pow(n)).collect();
        let mut hits = 0;
        for k in -150i128..=150 {
            for j in -600i128..=600 {
                let norm = (j * j - d as i128 * k * k).abs();
                if norm == 0 || !powers.contains(&norm) {
                    continue;
                }
                let mut x = QuadRat::new(ring, j as i64, k as i64, 0);
                if !x.is_positive() {
                    x = -x;
                }
                assert!(g.contains(&x), "{} not in group for d={d} p={p}", x.pretty());
                hits += 1;
            }
        }
        assert!(hits > 4, "d={d} p={p}: only {hits} units found");
    }
}

#[test]
fn dyadic_positive_units_are_powers_of_two() {
    // Oracle for the {2:inf} case: a/2^e with odd a is a unit of Z[1/2]
    // only when a = 1.
    let ring = RingParams::new(3, 2).unwrap();
    for a in 1i64..500 {
        for e in 0..8 {
            let x = QuadRat::new(ring, a, 0, e);
            let odd = a >> a.trailing_zeros();
            assert_eq!(x.is_unit(), odd == 1, "{a}/2^{e}");
        }
    }
    let n = "2:inf".parse().unwrap();
    assert_eq!(dimforge::fungroup::uhf_fundamental_group(&n), vec![2]);
}

#[test]
fn identity_class_set_is_pinned() {
    let one = QuadRat::one(standard().ring());
    let classes: Vec<String> = classify_residues(standard(), &one, 9).unwrap().iter().map(|c| c.to_string()).collect();
    assert_eq!(
        classes,
        ["[[1,0],[0,1]] mod 9 det=+1", "[[1,0],[3,1]] mod 9 det=+1", "[[1,0],[6,1]] mod 9 det=+1"]
    );
}

#[test]
fn escalated_modulus_still_obstructs() {
    let five = QuadRat::from_int(standard().ring(), 5);
    let eps = QuadRat::new(standard().ring(), 2, 1, 0);
    let v = commutation_obstruction(standard(), &five, &eps, 27).unwrap();
    assert!(matches!(v, Obstruction::Impossible(_)));
}
