use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use proptest::prelude::*;

use hallflag_core::ampleness::{classify_matrix_space, convex_feasibility, decompose_into_component, gl_convex_decomposition, MatrixSpaceSpec, Verdict};
use hallflag_core::flags::{lie_flag, poly_lie_bracket, x_var, AffineMap, Frame, PolyField, XPoly};
use hallflag_core::freelie::{self, hall_basis, is_hall_element, maximal_growth_vector, witt_dimension_big, BracketExpr};
use hallflag_core::frontend::{catalog_frame, parse_frame};
use hallflag_core::jetalg::{self, derive, DiffPoly, JetParams, JetVar, MultiIndexUnord};
use hallflag_core::linalg::{self, EchelonBasis, Matrix};
use hallflag_core::poly::Monomial;
use hallflag_core::rational::{fmt_rational, parse_rational, q, sign, Q};

fn rational() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(proptest::collection::vec(rational(), cols), rows)
}

fn square() -> impl Strategy<Value = Matrix> {
    (2usize..=4).prop_flat_map(|n| matrix(n, n))
}

fn xpoly(n: usize) -> impl Strategy<Value = XPoly> {
    proptest::collection::vec((rational(), proptest::collection::vec(0u32..=2, n)), 0..4).prop_map(move |terms| {
        let mut p = XPoly::zero();
        for (c, exps) in terms {
            let m = Monomial::from_factors(exps.into_iter().enumerate().filter(|(_, e)| *e > 0));
            p.add_term(m, c);
        }
        p
    })
}

fn field(n: usize) -> impl Strategy<Value = PolyField> {
    proptest::collection::vec(xpoly(n), n).prop_map(PolyField::new)
}

fn tree(k: usize, max_len: usize) -> impl Strategy<Value = BracketExpr> {
    let leaf = (0..k).prop_map(BracketExpr::leaf);
    leaf.prop_recursive(3, max_len as u32, 2, |inner| (inner.clone(), inner).prop_map(|(a, b)| BracketExpr::node(a, b)))
        .prop_filter("length bound", move |e| e.len() <= max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // necklace identity: Σ_{d | l} d·W(k, d) = k^l
    #[test]
    fn witt_necklace_identity(k in 1u64..=7, l in 1u32..=12) {
        let mut sum = BigInt::zero();
        for d in 1..=l {
            if l % d == 0 {
                sum += witt_dimension_big(k, d).unwrap() * BigInt::from(d);
            }
        }
        prop_assert_eq!(sum, BigInt::from(k).pow(l));
    }

    #[test]
    fn mgv_shape(k in 2u64..=6, extra in 1u64..=200) {
        let n = k + extra;
        let gv = maximal_growth_vector(k, n).unwrap();
        prop_assert_eq!(*gv.entries.last().unwrap(), n);
        prop_assert_eq!(gv.step, gv.entries.len());
        let mut cum = 0u64;
        for (i, w) in gv.entries.windows(2).enumerate() {
            prop_assert!(w[0] < w[1]);
            cum += freelie::witt_dimension(k, i as u32 + 1).unwrap();
            prop_assert_eq!(w[0], cum);
        }
    }

    #[test]
    fn hall_membership_matches_generation(e in tree(3, 5)) {
        let h = hall_basis(3, 5).unwrap();
        prop_assert_eq!(is_hall_element(&e, &h), h.contains(&e));
    }

    #[test]
    fn rational_text_round_trip(x in rational()) {
        prop_assert_eq!(parse_rational(&fmt_rational(&x)), Some(x));
    }

    #[test]
    fn poly_ring_laws(a in xpoly(2), b in xpoly(2), c in xpoly(2)) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!((&(&a * &b)).partial(&0), &(&a.partial(&0) * &b) + &(&a * &b.partial(&0)));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn rank_and_determinant(a in square(), b_seed in square()) {
        let n = a.len();
        let b: Matrix = b_seed.into_iter().map(|r| r.into_iter().chain(std::iter::repeat(Q::zero())).take(n).collect()).chain(std::iter::repeat(vec![Q::zero(); n])).take(n).collect();
        prop_assert_eq!(linalg::rank(&a), linalg::rank(&linalg::transpose(&a)));
        prop_assert_eq!(linalg::determinant(&linalg::mat_mul(&a, &b)), linalg::determinant(&a) * linalg::determinant(&b));
        prop_assert_eq!(linalg::determinant(&a).is_zero(), linalg::rank(&a) < n);
        let mut eb = EchelonBasis::new();
        for row in &a {
            eb.insert(row);
        }
        prop_assert_eq!(eb.rank(), linalg::rank(&a));
    }

    #[test]
    fn bracket_of_fields_is_antisymmetric_and_jacobi(x in field(2), y in field(2), z in field(2)) {
        prop_assert!(poly_lie_bracket(&x, &y).add(&poly_lie_bracket(&y, &x)).is_zero());
        let j = poly_lie_bracket(&x, &poly_lie_bracket(&y, &z))
            .add(&poly_lie_bracket(&y, &poly_lie_bracket(&z, &x)))
            .add(&poly_lie_bracket(&z, &poly_lie_bracket(&x, &y)));
        prop_assert!(j.is_zero());
    }

    #[test]
    fn derivations_commute(f in 0usize..2, c in 0usize..2, a in 0usize..2, b in 0usize..2, g in 0usize..2) {
        let p = JetParams::new(2, 2, 4).unwrap();
        let u = DiffPoly::var(p, JetVar::new(f, c, MultiIndexUnord::from_dirs(&[a]))).unwrap();
        let v = DiffPoly::var(p, JetVar::base(g, c)).unwrap();
        let poly = u.mul(&v);
        let ab = derive(&derive(&poly, a).unwrap(), b).unwrap();
        let ba = derive(&derive(&poly, b).unwrap(), a).unwrap();
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn frame_text_round_trip(fields in proptest::collection::vec(field(3), 1..=3)) {
        let fr = Frame::new(3, fields).unwrap();
        let back = parse_frame(&fr.to_text()).unwrap();
        prop_assert_eq!(back, fr);
    }

    #[test]
    fn flag_dims_monotone(p in proptest::collection::vec(rational(), 3), e in 0u32..=2) {
        let x = x_var(0).pow(e);
        let f2 = PolyField::new(vec![XPoly::zero(), XPoly::one(), x]);
        let fr = Frame::new(3, vec![PolyField::coordinate(3, 0), f2]).unwrap();
        let rep = lie_flag(&fr, &p, Some(4)).unwrap();
        prop_assert!(rep.dims.windows(2).all(|w| w[0] <= w[1]));
        // the only non-regular points are on x1 = 0 for the quadratic field, where the flag is (2, 2, 3)
        let singular = e == 2 && p[0].is_zero();
        prop_assert_eq!(rep.regular, !singular);
        if rep.regular {
            if let Some(pos) = rep.dims.windows(2).position(|w| w[0] == w[1]) {
                prop_assert!(rep.dims[pos..].iter().all(|&d| d == rep.dims[pos]));
            }
        } else {
            prop_assert_eq!(&rep.dims, &vec![2, 2, 3]);
        }
    }

    #[test]
    fn affine_invariance_engel(lin in matrix(4, 4), shift in proptest::collection::vec(rational(), 4), p in proptest::collection::vec(rational(), 4)) {
        prop_assume!(!linalg::determinant(&lin).is_zero());
        let fr = catalog_frame("engel").unwrap();
        let a = AffineMap { linear: lin, shift };
        let pushed = hallflag_core::flags::pushforward(&fr, &a).unwrap();
        prop_assert_eq!(lie_flag(&pushed, &a.apply(&p), None).unwrap().dims, lie_flag(&fr, &p, None).unwrap().dims);
    }

    #[test]
    fn frame_change_invariance_cartan(g in matrix(2, 2), p in proptest::collection::vec(rational(), 5)) {
        prop_assume!(!linalg::determinant(&g).is_zero());
        let fr = catalog_frame("cartan").unwrap();
        prop_assert_eq!(lie_flag(&fr.change(&g).unwrap(), &p, None).unwrap().dims, lie_flag(&fr, &p, None).unwrap().dims);
    }

    #[test]
    fn gl_decomposition_verifies(m in square()) {
        let d = sign(&linalg::determinant(&m));
        let w = gl_convex_decomposition(&m).unwrap();
        let ok = w.verify(&m, |x| {
            let s = sign(&linalg::determinant(x));
            s != 0 && (d == 0 || s == -d)
        });
        prop_assert!(ok);
        for target in [1i8, -1] {
            let c = decompose_into_component(&m, target).unwrap();
            let ok = c.verify(&m, |x| sign(&linalg::determinant(x)) == target);
            prop_assert!(ok);
        }
    }

    #[test]
    fn square_classification_matches_free_count(n in 2usize..=4, fixed in 0usize..=4) {
        prop_assume!(fixed <= n);
        let cols: Vec<Vec<Q>> = (0..fixed).map(|j| (0..n).map(|i| if i == j { Q::one() } else { Q::zero() }).collect()).collect();
        let v = classify_matrix_space(&MatrixSpaceSpec::from_columns(n, n, &cols)).unwrap();
        let expect = match n - fixed {
            0 => Verdict::TriviallyAmpleFull,
            1 => Verdict::NotAmpleHyperplane,
            _ => Verdict::AmpleNonThin,
        };
        prop_assert_eq!(v, expect);
    }

    #[test]
    fn feasibility_certificates(points in proptest::collection::vec(proptest::collection::vec(rational(), 2), 1..6), w in proptest::collection::vec(1u32..5, 6)) {
        let total: u32 = w[..points.len()].iter().sum();
        let target: Vec<Q> = (0..2).map(|c| points.iter().zip(&w).map(|(p, &wi)| &p[c] * q(wi as i64, total as i64)).fold(Q::zero(), |a, b| a + b)).collect();
        let lambda = convex_feasibility(&points, &target).expect("target is a convex combination");
        prop_assert_eq!(lambda.iter().fold(Q::zero(), |a, b| a + b), Q::one());
        prop_assert!(lambda.iter().all(|x| *x >= Q::zero()));
        for c in 0..2 {
            let s = points.iter().zip(&lambda).fold(Q::zero(), |a, (p, l)| a + &p[c] * l);
            prop_assert_eq!(&s, &target[c]);
        }
    }

    #[test]
    fn symbol_matches_classical_on_random_frames(fields in proptest::collection::vec(field(2), 2), p in proptest::collection::vec(rational(), 2)) {
        let fr = Frame::new(2, fields).unwrap();
        let jet = jetalg::jet_of_frame(&fr, &p, 2).unwrap();
        for idx in [vec![0, 1], vec![1, 0, 1], vec![0, 0, 1]] {
            let sym = jetalg::bracket(&idx, jet.params).unwrap();
            prop_assert_eq!(jetalg::evaluate(&sym, &jet).unwrap(), fr.bracket_field(&idx).eval(&p));
        }
    }
}
