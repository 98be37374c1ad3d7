//! Randomized structural properties of the arithmetic kernels.

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use nscartan::cusps::MpPoint;
use nscartan::cyclo::CycloInt;
use nscartan::gl2::Mat2;
use nscartan::units::bernoulli2;
use nscartan::{PrimeContext, QExp};

const TEST_PRIMES: [u32; 4] = [5, 11, 13, 23];

fn prime() -> impl Strategy<Value = u32> {
    prop::sample::select(TEST_PRIMES.as_slice())
}

proptest! {
    #[test]
    fn bernoulli2_is_symmetric_about_one_half(n in -1000i64..1000, d in 1i64..1000) {
        let x = BigRational::new(BigInt::from(n), BigInt::from(d));
        let one = BigRational::new(BigInt::from(1), BigInt::from(1));
        prop_assert_eq!(bernoulli2(&x), bernoulli2(&(one - &x)));
    }

    #[test]
    fn matrix_inverse_and_associativity(
        p in prime(),
        e in prop::array::uniform12(0u32..1000),
    ) {
        let ctx = PrimeContext::new(p).unwrap();
        let m = |i: usize| Mat2::new(e[i] % p, e[i + 1] % p, e[i + 2] % p, e[i + 3] % p);
        let (a, b, c) = (m(0), m(4), m(8));
        prop_assert_eq!(
            a.mul(&ctx, &b).mul(&ctx, &c),
            a.mul(&ctx, &b.mul(&ctx, &c)),
            "associativity"
        );
        if a.det(&ctx) != 0 {
            let inv = a.inverse(&ctx).unwrap();
            prop_assert_eq!(a.mul(&ctx, &inv), Mat2::IDENTITY);
            prop_assert_eq!(inv.mul(&ctx, &a), Mat2::IDENTITY);
        } else {
            prop_assert!(a.inverse(&ctx).is_err());
        }
    }

    #[test]
    fn point_normalization_is_idempotent_and_sign_invariant(
        p in prime(),
        a in 0u32..1000,
        b in 0u32..1000,
    ) {
        let (a, b) = (a % p, b % p);
        prop_assume!(a != 0 || b != 0);
        let ctx = PrimeContext::new(p).unwrap();
        let v = MpPoint::normalized(p, a, b);
        prop_assert_eq!(MpPoint::normalized(p, v.a, v.b), v, "idempotent");
        let neg = MpPoint::normalized(p, ctx.neg(a), ctx.neg(b));
        prop_assert_eq!(neg, v, "sign classes collapse");
        // canonical representative: first nonzero coordinate in 1..=(p-1)/2
        let lead = if v.a != 0 { v.a } else { v.b };
        prop_assert!(lead >= 1 && lead <= (p - 1) / 2);
    }

    #[test]
    fn zeta_rotation_has_period_p(p in prime(), j in 0u32..1000, coeffs in prop::collection::vec(-50i64..50, 4)) {
        let j = j % p;
        let mut x = CycloInt::zero(p);
        for (i, c) in coeffs.iter().enumerate() {
            x = x.add(&CycloInt::zeta_pow(p, i as u32).mul(&CycloInt::from_integer(p, BigInt::from(*c))));
        }
        let mut rotated = x.clone();
        for _ in 0..p {
            rotated = rotated.mul(&CycloInt::zeta_pow(p, j));
        }
        // zeta^{jp} = 1
        prop_assert_eq!(rotated, x);
    }

    #[test]
    fn series_product_truncates_to_shorter_factor(
        p in prime(),
        t1 in 1usize..40,
        t2 in 1usize..40,
        j in 0u32..100,
        e in 1usize..6,
    ) {
        let mut a = QExp::one_exact(p, t1);
        a.mul_one_minus_zeta_q(j % p, e, 3);
        let b = QExp::one_exact(p, t2);
        let prod = a.mul(&b);
        prop_assert_eq!(prod.trunc(), t1.min(t2));
        prop_assert_eq!(prod.base_exp(), a.base_exp());
    }

    #[test]
    fn branch_roots_grow_with_p_and_b(
        p1 in 100.0f64..1e7,
        dp in 1.0f64..1e6,
        b in 1.0f64..50.0,
        db in 0.5f64..20.0,
    ) {
        let a = 1.2;
        let l1 = nscartan::runge::solve_branch(p1, a, b).unwrap();
        let l2 = nscartan::runge::solve_branch(p1 + dp, a, b).unwrap();
        prop_assert!(l2 > l1, "monotone in p: {l1} vs {l2}");
        let l3 = nscartan::runge::solve_branch(p1, a, b + db).unwrap();
        prop_assert!(l3 > l1, "monotone in B: {l1} vs {l3}");
        // defining residual
        prop_assert!((l1 * l1 - a * l1 - b * p1).abs() <= 1e-12 * l1 * l1);
    }
}
