use eigenkit_core::cech::{laurent_split, Chart, ChartElement};
use eigenkit_core::laind::{delta_i, monomial_basis, torus_act, InducedFunction};
use eigenkit_core::padic::{Matrix, PadicContext, PadicScalar, Poly};
use eigenkit_core::spectral::{fredholm_series, newton_slopes, CompactOperatorModel, Tail};
use eigenkit_core::weight::{eval_character, involution, Character};
use num_rational::Ratio;
use proptest::prelude::*;

fn ctx() -> PadicContext {
    PadicContext::new(5, 1, 20).unwrap()
}

fn unit() -> impl Strategy<Value = i64> {
    (-10_000i64..10_000).prop_filter("unit", |x| x % 5 != 0)
}

fn scalar(x: i64) -> PadicScalar {
    PadicScalar::from_i64(ctx(), x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_ring_axioms(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000, c in -1_000i64..1_000) {
        let (x, y, z) = (scalar(a), scalar(b), scalar(c));
        prop_assert_eq!(&(&x + &y) * &z, &(&x * &z) + &(&y * &z));
        prop_assert_eq!(&x * &y, scalar(a * b % 95_367_431_640_625));
        prop_assert_eq!(&(&x - &y) + &y, x.clone());
        if b % 5 != 0 {
            prop_assert_eq!(&x.checked_div(&y).unwrap() * &y, x);
        }
    }

    #[test]
    fn character_is_multiplicative(k in prop::collection::vec(-6i64..6, 1..4), s in prop::collection::vec(unit(), 3), t in prop::collection::vec(unit(), 3)) {
        let g = k.len();
        let kappa = Character::algebraic(ctx(), &k).unwrap();
        let ss: Vec<_> = s[..g].iter().map(|&x| scalar(x)).collect();
        let ts: Vec<_> = t[..g].iter().map(|&x| scalar(x)).collect();
        let st: Vec<_> = ss.iter().zip(&ts).map(|(a, b)| a * b).collect();
        let lhs = eval_character(&kappa, &st).unwrap();
        let rhs = &eval_character(&kappa, &ss).unwrap() * &eval_character(&kappa, &ts).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn involution_is_an_involution(k in prop::collection::vec(-6i64..6, 1..4)) {
        let kappa = Character::algebraic(ctx(), &k).unwrap();
        prop_assert_eq!(involution(&involution(&kappa)).to_record(), kappa.to_record());
    }

    #[test]
    fn torus_action_is_an_action(k in (0i64..5, 0i64..5), s in prop::collection::vec(unit(), 2), t in prop::collection::vec(unit(), 2), m in 0u32..6) {
        let kappa = Character::algebraic(ctx(), &[k.0.max(k.1), k.0.min(k.1)]).unwrap();
        let f = InducedFunction::monomial(&kappa, 8, &[m]);
        let ss: Vec<_> = s.iter().map(|&x| scalar(x)).collect();
        let ts: Vec<_> = t.iter().map(|&x| scalar(x)).collect();
        let st: Vec<_> = ss.iter().zip(&ts).map(|(a, b)| a * b).collect();
        let twice = torus_act(&ss, &torus_act(&ts, &f).unwrap()).unwrap();
        prop_assert_eq!(twice, torus_act(&st, &f).unwrap());
    }

    #[test]
    fn delta_commutes_with_torus(s in prop::collection::vec(unit(), 3), m in prop::collection::vec(0u32..3, 3)) {
        let kappa = Character::algebraic(ctx(), &[2, 1, 0]).unwrap();
        let f = InducedFunction::monomial(&kappa, 6, &m);
        let ss: Vec<_> = s.iter().map(|&x| scalar(x)).collect();
        for i in 1..3 {
            let a = delta_i(i, &torus_act(&ss, &f).unwrap()).unwrap();
            let b = torus_act(&ss, &delta_i(i, &f).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn fredholm_is_multiplicative(a in prop::collection::vec(-20i64..20, 9), b in prop::collection::vec(-20i64..20, 4)) {
        let c = ctx();
        let ra: Vec<Vec<i64>> = (0..3).map(|i| (0..3).map(|j| a[3 * i + j] * 5i64.pow(j as u32)).collect()).collect();
        let rb: Vec<Vec<i64>> = (0..2).map(|i| (0..2).map(|j| b[2 * i + j] * 5i64.pow(j as u32 + 1)).collect()).collect();
        let ma = Matrix::from_i64(c, &ra);
        let mb = Matrix::from_i64(c, &rb);
        let sum = ma.direct_sum(&mb, &PadicScalar::zero(c));
        let series = |m: Matrix<PadicScalar>| fredholm_series(&CompactOperatorModel::new(m, Tail::Exact).unwrap(), None).unwrap();
        let pa = Poly::new(c, series(ma).coeffs().to_vec());
        let pb = Poly::new(c, series(mb).coeffs().to_vec());
        let prod = pa.mul(&pb);
        let ps = series(sum);
        for (k, x) in ps.coeffs().iter().enumerate() {
            prop_assert_eq!(x.clone(), prod.coeff(k), "coefficient {}", k);
        }
    }

    #[test]
    fn diagonal_slopes_are_valuations(v in prop::collection::vec(0u32..4, 1..7)) {
        // total valuation stays below the cap so the top coefficient is visible
        let c = ctx();
        let d: Vec<PadicScalar> = v.iter().map(|&k| &PadicScalar::p_pow(c, k as i64) * &scalar(3)).collect();
        let p = fredholm_series(&CompactOperatorModel::new(Matrix::diagonal(c, &d), Tail::Exact).unwrap(), None).unwrap();
        let mut want: Vec<Ratio<i64>> = v.iter().map(|&k| Ratio::from(k as i64)).collect();
        want.sort();
        prop_assert_eq!(newton_slopes(&p).unwrap().slope_multiset(), want);
    }

    #[test]
    fn laurent_split_reconstructs(terms in prop::collection::vec((-8i64..8, -50i64..50), 0..10), scale in unit()) {
        let c = ctx();
        let g = ChartElement::from_i64_terms(c, Chart::Both, &terms).unwrap();
        let (plus, minus) = laurent_split(&g).unwrap();
        let back = plus.restrict(Chart::Both).unwrap().checked_sub(&minus.restrict(Chart::Both).unwrap()).unwrap();
        prop_assert_eq!(&back, &g);
        // linear, and idempotent on each half
        let s = scalar(scale);
        let (ps, ms) = laurent_split(&g.scale(&s)).unwrap();
        prop_assert_eq!(ps, plus.scale(&s));
        prop_assert_eq!(ms, minus.scale(&s));
        let (pp, pm) = laurent_split(&plus.restrict(Chart::Both).unwrap()).unwrap();
        prop_assert_eq!(pp, plus.clone());
        prop_assert!(pm.is_zero());
        // the parts are no larger than g
        let vg = g.valuation_pi();
        for part in [plus.valuation_pi(), minus.valuation_pi()] {
            if let (Some(a), Some(b)) = (part, vg) {
                prop_assert!(a >= b);
            }
        }
    }
}

#[test]
fn monomial_basis_counts() {
    // number of monomials of degree ≤ D in n variables is C(n + D, n)
    for (n, d, want) in [(1usize, 5u32, 6usize), (3, 4, 35), (6, 2, 28)] {
        assert_eq!(monomial_basis(n, d).len(), want);
    }
}
