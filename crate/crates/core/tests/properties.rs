//! Property tests for the structural invariants of the library.

use num_complex::Complex64;
use proptest::prelude::*;

use hodgeloc::fixtures;
use hodgeloc::hodge::{align_mhs, hodge_decomposition, hodge_gram, weil_operator};
use hodgeloc::matrix::{bilinear, Matrix};
use hodgeloc::nilpotent::{cone_weight_filtration, position, splitting_grading, weight_filtration, CONE_SEED};
use hodgeloc::orbits::{limiting_mhs, limiting_mhs_report, NilpotentOrbit};
use hodgeloc::scalar::{gi, rat};
use hodgeloc::sl2::{check_imaginary_scaling, partial_weight_filtrations};
use hodgeloc::unipotent::{exp_nilpotent, log_unipotent};
use hodgeloc::{Cf64, Field, GaussRat, Rational, Subspace};

fn rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix<Rational>> {
    prop::collection::vec(rational(), rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn invertible(n: usize) -> impl Strategy<Value = Matrix<Rational>> {
    matrix(n, n).prop_filter("invertible", |m| !m.determinant().is_zero())
}

/// A nilpotent `P J P⁻¹` for a Jordan matrix with the given block sizes.
fn conjugated_jordan(blocks: &[usize], p: &Matrix<Rational>) -> Matrix<Rational> {
    let n = p.rows();
    let mut j = Matrix::<Rational>::zeros(n, n);
    let mut s = 0;
    for &k in blocks {
        for i in 0..k.saturating_sub(1) {
            j.set(s + i + 1, s + i, rat(1, 1));
        }
        s += k;
    }
    &(p * &j) * &p.inverse().unwrap()
}

fn blocks_and_conjugator(max: usize) -> impl Strategy<Value = (Vec<usize>, Matrix<Rational>)> {
    prop::collection::vec(1usize..=4, 1..=4)
        .prop_filter("dimension", move |b| b.iter().sum::<usize>() <= max)
        .prop_flat_map(|b| {
            let n = b.iter().sum();
            (Just(b), invertible(n))
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn echelon_form_is_canonical(basis in matrix(3, 5), change in invertible(3)) {
        let a = Subspace::row_space(&basis);
        let b = Subspace::row_space(&(&change * &basis));
        prop_assert_eq!(a.basis(), b.basis());
    }

    #[test]
    fn dimension_formula(a in matrix(3, 6), b in matrix(4, 6)) {
        let (sa, sb) = (Subspace::row_space(&a), Subspace::row_space(&b));
        let sum = sa.sum(&sb).unwrap();
        let meet = sa.intersect(&sb).unwrap();
        prop_assert_eq!(sum.dim() + meet.dim(), sa.dim() + sb.dim());
    }

    #[test]
    fn exp_and_log_are_inverse((blocks, p) in blocks_and_conjugator(12)) {
        let n = conjugated_jordan(&blocks, &p);
        let g = exp_nilpotent(&n).unwrap();
        prop_assert_eq!(&log_unipotent(&g).unwrap(), &n);
        prop_assert_eq!(exp_nilpotent(&log_unipotent(&g).unwrap()).unwrap(), g);
    }

    #[test]
    fn promotion_commutes_with_products_and_inverses(a in invertible(4), b in matrix(4, 4)) {
        let exact = &a.inverse().unwrap() * &b;
        let af: Matrix<Cf64> = a.promote();
        let bf: Matrix<Cf64> = b.promote();
        let float = &af.inverse().unwrap() * &bf;
        let promoted: Matrix<Cf64> = exact.promote();
        let scale = promoted.entries().iter().map(|x| x.0.norm()).fold(1.0, f64::max);
        let err = (&float - &promoted).entries().iter().map(|x| x.0.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale, "relative error {}", err / scale);
    }

    #[test]
    fn weight_filtration_axioms((blocks, p) in blocks_and_conjugator(12)) {
        let n = conjugated_jordan(&blocks, &p);
        let w = weight_filtration(&n).unwrap();
        let (lo, hi) = w.range();
        for l in lo..=hi {
            prop_assert!(w.get(l).image(&n).dim() <= w.get(l - 2).dim());
            prop_assert!(w.get(l - 2).contains_subspace(&w.get(l).image(&n)));
        }
        for l in 0..=hi {
            let image = w.get(l).image(&n.pow(l as u32)).sum(&w.get(-l - 1)).unwrap();
            prop_assert_eq!(image, w.get(-l));
        }
        // block of size k contributes weights k−1, k−3, …, 1−k
        for l in lo..=hi {
            let expected: usize = blocks.iter().map(|&k| {
                let top = k as i32 - 1;
                (0..k as i32).filter(|i| top - 2 * i == l).count()
            }).sum();
            prop_assert_eq!(w.graded_dim(l), expected);
        }
    }

    #[test]
    fn cone_filtration_ignores_scaling_and_order(c1 in 1i64..=5, c2 in 1i64..=5) {
        let rep = fixtures::tensor_ee();
        let gens = rep.lowering();
        let base = cone_weight_filtration(&gens, CONE_SEED).unwrap().filtration;
        let scaled = vec![gens[1].scale(&rat(c2, 3)), gens[0].scale(&rat(c1, 2))];
        let other = cone_weight_filtration(&scaled, CONE_SEED + 1).unwrap().filtration;
        prop_assert_eq!(base, other);
    }

    #[test]
    fn align_mhs_tends_to_identity(seed in 0u64..64) {
        let orbit = fixtures::elliptic().to_orbit().unwrap();
        let w = orbit.limiting_weight_filtration().unwrap();
        let f = orbit.limiting_filtration().clone();
        let n = orbit.rank();
        let a = (seed % 5) as i64 + 1;
        let x = Matrix::from_fn(n, n, |i, j| if i == 1 && j == 0 { gi(a, -(seed as i64 % 3)) } else { GaussRat::zero() });
        let mut ratios = Vec::new();
        for e in [2u32, 4, 6] {
            let eps = rat(1, 10i64.pow(e));
            let u = exp_nilpotent(&x.scale(&GaussRat::from_rational(&eps))).unwrap();
            let f2 = f.transform(&u);
            let g = align_mhs(&w, &f, &f2).unwrap();
            prop_assert_eq!(&f.transform(&g), &f2);
            prop_assert_eq!(&w.transform(&g), &w);
            let dev = (&g - &Matrix::identity(n)).entries().iter().map(|z| z.magnitude()).fold(0.0, f64::max);
            ratios.push(dev / 10f64.powi(-(e as i32)));
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
        prop_assert!(hi <= 10.0 * lo.max(1e-300) || hi < 1e-9, "ratios {:?}", ratios);
    }

    #[test]
    fn random_reps_are_valid_sl2_models(seed in 0u64..200) {
        let rep = fixtures::random_weight_zero(seed).unwrap();
        rep.check().unwrap();
        let m = limiting_mhs(&rep.to_orbit().unwrap()).unwrap();
        m.bigrading.verify_splitting(&m.w, &m.f).unwrap();
        // each ĥ_i has Y_j-degree 0 for j < i
        for (i, t) in rep.triples().iter().enumerate() {
            for s in &rep.triples()[..i] {
                prop_assert!(s.grading.commutator(&t.lowering).is_zero());
            }
        }
    }

    #[test]
    fn imaginary_scaling_at_squares(a in 1i64..=6, b in 1i64..=6, c in 1i64..=6, d in 1i64..=6) {
        let rep = fixtures::tensor_ee();
        let y = vec![rat(a * a, b * b), rat(c * c, d * d)];
        let exact = check_imaginary_scaling(&rep, &y).unwrap();
        prop_assert!(exact.exact && exact.passed);
        let y2 = vec![rat(a + 1, b), rat(2 * c + 1, d)];
        prop_assert!(check_imaginary_scaling(&rep, &y2).unwrap().passed);
    }
}

#[test]
fn hodge_pieces_are_conjugate_and_q_equals_h_on_classes() {
    for fx in fixtures::standard_suite() {
        let rep = fx.rep;
        let f = rep.f_sharp().unwrap();
        let w = rep.weight();
        let dec = hodge_decomposition(&f, w).unwrap();
        for (idx, piece) in dec.pieces() {
            let mirror = dec.piece(&[idx[1], idx[0]]);
            assert_eq!(piece.conjugate(), mirror, "{}: V^{:?}", fx.name, idx);
        }
        if w == 0 {
            let c = weil_operator(&f, 0).unwrap();
            let h = hodge_gram(rep.lattice().form(), &c);
            let classes = dec.piece(&[0, 0]).intersect(&dec.piece(&[0, 0]).conjugate()).unwrap();
            for v in classes.basis_vectors() {
                if let Some(real) = v.iter().map(|x| x.to_rational()).collect::<Option<Vec<Rational>>>() {
                    let q = bilinear(rep.lattice().form(), &real, &real);
                    let hv = hodgeloc::hodge::hermitian(&h, &v, &v);
                    assert_eq!(hv, GaussRat::from_rational(&q), "{}", fx.name);
                }
            }
        }
    }
}

#[test]
fn splitting_grading_recovers_every_filtration() {
    for rep in [fixtures::tensor_ee(), fixtures::tensor_e_sym2()] {
        let ws = partial_weight_filtrations(&rep).unwrap();
        let a = splitting_grading(&ws).unwrap();
        for (j, wj) in ws.iter().enumerate() {
            let (lo, hi) = wj.range();
            for w in lo..=hi {
                let sum = a.sum_where(|l| l[..=j].iter().sum::<i32>() <= w);
                assert_eq!(sum, wj.get(w), "W^{} at {}", j + 1, w);
            }
        }
    }
}

#[test]
fn position_does_not_depend_on_the_splitting() {
    let rep = fixtures::tensor_e_sym2();
    let ws = partial_weight_filtrations(&rep).unwrap();
    let a = splitting_grading(&ws).unwrap();
    let b = rep.weight_grading().unwrap().grading().clone();
    let n = rep.rank();
    for k in 0..n {
        let e: Vec<Rational> = (0..n).map(|i| rat((i == k) as i64, 1)).collect();
        let mixed: Vec<Rational> = (0..n).map(|i| rat(i as i64 + 1, (k + 1) as i64)).collect();
        for u in [e, mixed] {
            assert_eq!(position(&u, &a).unwrap(), position(&u, &b).unwrap());
        }
    }
}

#[test]
fn orbit_evaluation_is_equivariant() {
    for (name, orbit) in fixtures::orbit_suite().unwrap() {
        let r = orbit.r();
        let z: Vec<GaussRat> = (0..r).map(|j| GaussRat::new(rat(j as i64 + 1, 3), rat(2, 1))).collect();
        let base = orbit.evaluate(&z).unwrap();
        for j in 0..r {
            let mut shifted = z.clone();
            shifted[j] = shifted[j].clone() + GaussRat::one();
            let g = exp_nilpotent(&orbit.generators()[j].map(GaussRat::from_rational)).unwrap();
            assert_eq!(
                orbit.evaluate(&shifted).unwrap(),
                base.transform(&g),
                "{name}, generator {j}"
            );
        }
    }
}

#[test]
fn float_and_exact_orbit_evaluation_agree() {
    let orbit = fixtures::sym(3).to_orbit().unwrap();
    let z = [GaussRat::new(rat(1, 3), rat(5, 2))];
    let exact = orbit.evaluate(&z).unwrap().promote::<Cf64>();
    let float = orbit.evaluate_float(&[Complex64::new(1.0 / 3.0, 2.5)]).unwrap();
    assert_eq!(exact, float);
}

#[test]
fn sign_flipped_form_fails_the_limiting_checks() {
    let orbit = fixtures::elliptic().to_orbit().unwrap();
    let flipped = hodgeloc::hodge::PolarizedLattice::new(orbit.lattice().form().scale(&rat(-1, 1)), 1).unwrap();
    if let Ok(bad) = NilpotentOrbit::new(
        flipped,
        orbit.generators().to_vec(),
        orbit.limiting_filtration().clone(),
    ) {
        assert!(!limiting_mhs_report(&bad).passed())
    }
}
