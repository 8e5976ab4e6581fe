use num_bigint::BigInt;
use proptest::prelude::*;

use motivic_forge::grothendieck::{class_of, Exponent, MotivicElement};
use motivic_forge::parse::parse_motivic_expression;

fn element() -> impl Strategy<Value = MotivicElement> {
    (1u32..=3, prop::collection::vec((-6i64..=6, -4i64..=4), 0..5)).prop_map(|(m, terms)| {
        MotivicElement::from_terms(m, terms.into_iter().map(|(k, c)| (Exponent::new(k, m as i64), BigInt::from(c))))
            .unwrap()
    })
}

fn integral() -> impl Strategy<Value = MotivicElement> {
    (prop::collection::vec(-5i64..=5, 1..5), -3i64..=3)
        .prop_map(|(c, s)| MotivicElement::from_coeffs(&c).shift(Exponent::from_integer(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ring_axioms(a in element(), b in element(), c in element()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!((&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &a * &b + &a * &c);
        prop_assert_eq!(&a - &a, MotivicElement::zero());
        prop_assert_eq!(&a * &MotivicElement::one(), a.clone());
    }

    #[test]
    fn exact_division_inverts_multiplication(a in element(), b in element()) {
        prop_assume!(!b.is_zero());
        prop_assert_eq!((&a * &b).exact_div(&b).unwrap(), a);
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in integral(), b in integral(), q in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let ev = |x: &MotivicElement| x.evaluate_at(q).unwrap();
        prop_assert_eq!(ev(&(&a + &b)), ev(&a) + ev(&b));
        prop_assert_eq!(ev(&(&a * &b)), ev(&a) * ev(&b));
    }

    #[test]
    fn parse_print_round_trip(a in element()) {
        let printed = a.to_string();
        let back = parse_motivic_expression(&printed).unwrap();
        prop_assert_eq!(&back, &a);
        prop_assert_eq!(back.to_string(), printed);
    }
}

#[test]
fn general_linear_is_special_linear_times_torus() {
    for r in 1..=5 {
        let gl = class_of("GL", &[r]).unwrap();
        let sl = class_of("SL", &[r]).unwrap();
        assert_eq!(gl, &sl * &MotivicElement::torus(), "r = {r}");
        assert_eq!(gl.exact_div(&MotivicElement::torus()).unwrap(), sl);
    }
}
