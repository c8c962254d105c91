//! Randomized structural invariants: exact linear algebra round trips,
//! subgroup-count oracles, coinvariant exactness, and the one-way
//! implications between the paired decision questions.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;

use norm_tori::abelian::{enumerate_subgroups, FiniteAbelianGroup, Subgroup};
use norm_tori::global::{decide_a, decide_a_circ, make_field};
use norm_tori::lattice::{build_torus_modules, coinvariants};
use norm_tori::local::{
    decide_r_circ, decide_r_oracle, inertia_shape_of, InertiaShape,
    LocalExtensionDescriptor,
};
use norm_tori::matrix::{
    hermite_col, kernel_basis, lattice_contains, lattice_eq, lattice_intersection,
    smith_normal_form, IntMat,
};
use norm_tori::units::{hilbert_symbol, Place};
use norm_tori::verdict::Status;

fn small_matrix() -> impl Strategy<Value = IntMat> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(-20i64..=20, c), r)
            .prop_map(|rows| IntMat::from_rows(&rows))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn snf_round_trip(a in small_matrix()) {
        let snf = smith_normal_form(&a);
        // u·a·v = d with unimodular transforms.
        prop_assert_eq!(snf.u.mul(&a).mul(&snf.v), snf.d.clone());
        let pm1 = |d: BigInt| d.clone() * d == BigInt::one();
        prop_assert!(pm1(snf.u.det()));
        prop_assert!(pm1(snf.v.det()));
        // Diagonal, non-negative, divisibility chain.
        let diag = snf.diag();
        for i in 0..snf.d.rows() {
            for j in 0..snf.d.cols() {
                if i != j {
                    prop_assert!(snf.d.get(i, j).is_zero());
                }
            }
        }
        for w in diag.windows(2) {
            prop_assert!(w[0] >= BigInt::zero());
            if !w[0].is_zero() {
                prop_assert!((&w[1] % &w[0]).is_zero());
            } else {
                prop_assert!(w[1].is_zero());
            }
        }
    }

    #[test]
    fn kernel_and_hermite_are_lattice_consistent(a in small_matrix()) {
        let k = kernel_basis(&a);
        // Every kernel column maps to zero.
        prop_assert!(a.mul(&k).is_zero());
        // Hermite form spans the same lattice as the original columns.
        let h = hermite_col(&a);
        prop_assert!(lattice_eq(&h, &a));
        // A lattice intersected with itself is itself.
        prop_assert!(lattice_eq(&lattice_intersection(&a, &a), &a));
    }

    #[test]
    fn column_combinations_stay_in_lattice(
        a in small_matrix(),
        coeffs in proptest::collection::vec(-3i64..=3, 4),
    ) {
        let v: Vec<i64> = (0..a.rows()).map(|_| 0).collect();
        let mut acc = IntMat::col_from(&v);
        for (j, &c) in coeffs.iter().take(a.cols()).enumerate() {
            let col = a.column(j);
            let mut scaled = IntMat::zeros(a.rows(), 1);
            for i in 0..a.rows() {
                scaled.set(i, 0, col.get(i, 0) * BigInt::from(c));
            }
            acc = acc.add(&scaled);
        }
        prop_assert!(lattice_contains(&hermite_col(&a), &acc) || a.cols() == 0);
    }
}

/// Gaussian binomial [n choose k]_2.
fn gauss_binom_2(n: u32, k: u32) -> u64 {
    let q = |e: u32| 2u64.pow(e) - 1;
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num *= q(n - i);
        den *= q(i + 1);
    }
    num / den
}

#[test]
fn subgroup_counts_match_counting_oracles() {
    // Elementary abelian: Σ_k [n choose k]_2 subgroups.
    for n in 1..=4u32 {
        let g = FiniteAbelianGroup::new(vec![2; n as usize]).unwrap();
        let expected: u64 = (0..=n).map(|k| gauss_binom_2(n, k)).sum();
        assert_eq!(enumerate_subgroups(&g).unwrap().len() as u64, expected, "rank {n}");
    }
    // Cyclic: one subgroup per divisor.
    for (order, divisors) in [(8u64, 4usize), (12, 6), (16, 5), (36, 9)] {
        let g = FiniteAbelianGroup::cyclic(order);
        assert_eq!(enumerate_subgroups(&g).unwrap().len(), divisors, "order {order}");
    }
    // ℤ/2 × ℤ/4 has 8 subgroups.
    let g = FiniteAbelianGroup::new(vec![2, 4]).unwrap();
    assert_eq!(enumerate_subgroups(&g).unwrap().len(), 8);
}

/// All (group, h_plus, inertia) triples over a fixed list of small shapes.
fn small_local_data() -> Vec<(FiniteAbelianGroup, Subgroup, Subgroup)> {
    let mut out = Vec::new();
    for shape in [vec![2u64], vec![4], vec![8], vec![2, 2], vec![2, 4], vec![2, 8], vec![4, 4]] {
        let g = FiniteAbelianGroup::new(shape).unwrap();
        let subs = enumerate_subgroups(&g).unwrap();
        for hp in subs.iter().filter(|s| s.order() <= 2) {
            for inr in &subs {
                if matches!(inertia_shape_of(inr), InertiaShape::Unsupported) {
                    continue;
                }
                out.push((g.clone(), hp.clone(), inr.clone()));
            }
        }
    }
    out
}

#[test]
fn coinvariant_sequence_is_exact() {
    // (T¹)_I → T_I → ℤ → 0: the composite with ν vanishes and the quotient
    // of T_I by the image of (T¹)_I is infinite cyclic.
    for (g, hp, inr) in small_local_data() {
        for r in 1..=2usize {
            let tm = build_torus_modules(&g, &hp, r).unwrap();
            let a = coinvariants(&tm.t, &inr).unwrap();
            let a1 = coinvariants(&tm.t1, &inr).unwrap();
            let nu = tm.t.nu_star.clone().expect("T carries the norm character");
            assert!(nu.mul(&tm.embedding.matrix).is_zero(), "ν ∘ emb ≠ 0");
            let psi = a.project(&tm.embedding.matrix.mul(&a1.lift));
            let gens = psi.hstack(&a.relation_lattice());
            let snf = smith_normal_form(&gens);
            let nontrivial: Vec<BigInt> = snf
                .diag()
                .into_iter()
                .filter(|d| !d.is_one() && !d.is_zero())
                .collect();
            let rank = snf.rank();
            // Cokernel = ℤ^{coords − rank} × ∏ ℤ/dᵢ must be exactly ℤ.
            assert_eq!(a.coords() - rank, 1, "free rank of coker ≠ 1 for {g:?}");
            assert!(nontrivial.is_empty(), "coker has torsion {nontrivial:?} for {g:?}");
        }
    }
}

#[test]
fn coinvariant_torsion_tracks_quadratic_layer_ramification() {
    for (g, hp, inr) in small_local_data() {
        if hp.order() != 2 {
            continue;
        }
        let ramified = hp.is_subset_of(&inr);
        let tm = build_torus_modules(&g, &hp, 1).unwrap();
        let tors = coinvariants(&tm.t, &inr).unwrap().torsion_factors();
        if ramified {
            // Ramified quadratic layer: torsion is elementary 2-torsion.
            assert!(
                tors.iter().all(|d| *d == BigInt::from(2)),
                "non-2 torsion {tors:?} in ramified shape {g:?}"
            );
        } else {
            // Unramified quadratic layer: torsion-free coinvariants.
            assert!(tors.is_empty(), "torsion {tors:?} in unramified shape {g:?}");
        }
    }
}

#[test]
fn kernel_question_affirmative_implies_full_question_affirmative() {
    // (R°) ⇒ (R) on every descriptor over the small shapes.
    for (g, hp, inr) in small_local_data() {
        let sigma = match g.elements().unwrap().into_iter().find(|s| {
            Subgroup::new(&g, vec![s.clone()]).unwrap().join(&inr).unwrap().order()
                == g.order()
        }) {
            Some(s) => s,
            None => continue,
        };
        for p in [2u64, 3] {
            let d = match LocalExtensionDescriptor::new(
                g.clone(),
                hp.clone(),
                inr.clone(),
                sigma.clone(),
                1,
                p,
            ) {
                Ok(d) => d,
                Err(_) => continue,
            };
            let circ = decide_r_circ(&d).unwrap();
            if circ.status == Status::Affirmative {
                assert_eq!(
                    decide_r_oracle(&d).unwrap().status,
                    Status::Affirmative,
                    "R° affirmative but R not on {d:?}"
                );
            }
        }
    }
}

#[test]
fn global_kernel_affirmative_implies_global_affirmative() {
    // (A°) ⇒ (A) sampled over small cyclotomic subfields and primes.
    let fields = [
        (4u64, vec![]),
        (3, vec![]),
        (8, vec![]),
        (5, vec![]),
        (20, vec![11u64]),
        (7, vec![2]),
        (13, vec![3]),
        (16, vec![7]),
        (40, vec![19, 31]),
    ];
    for (m, h) in fields {
        let f = match make_field(m, &h) {
            Ok(f) if f.is_cm() => f,
            _ => continue,
        };
        for p in [2u64, 3, 5, 7, 11, 13] {
            let circ = decide_a_circ(&f, p).unwrap();
            if circ.status == Status::Affirmative {
                assert_eq!(
                    decide_a(&f, p).unwrap().status,
                    Status::Affirmative,
                    "A° affirmative but A not at m={m} p={p}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn hilbert_symbol_is_symmetric_and_bimultiplicative(
        a in (1i64..=50).prop_map(|x| if x % 2 == 0 { -x / 2 } else { x }),
        b in 1i64..=50,
        c in 1i64..=50,
    ) {
        let places: Vec<Place> =
            [2u64, 3, 5, 7, 11].into_iter().map(Place::Finite).chain([Place::Real]).collect();
        for pl in places {
            prop_assert_eq!(hilbert_symbol(a, b, pl), hilbert_symbol(b, a, pl));
            prop_assert_eq!(
                hilbert_symbol(a, b * c, pl),
                hilbert_symbol(a, b, pl) * hilbert_symbol(a, c, pl)
            );
        }
    }
}
