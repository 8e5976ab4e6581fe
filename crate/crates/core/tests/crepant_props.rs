use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use motivic_forge::crepant::{
    build_crepant_stack, decompose_discrepancy, k_calculus, DivisorSum, KOperation, PullbackTable, RankConvention,
    ResolutionData,
};

fn discrepancy() -> impl Strategy<Value = BigRational> {
    discrepancy_with(1000)
}

fn discrepancy_with(max_den: i64) -> impl Strategy<Value = BigRational> {
    (1i64..=max_den).prop_flat_map(|d| (-d + 1..=4 * d).prop_map(move |n| BigRational::new(n.into(), d.into())))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

const LABELS: [&str; 3] = ["A", "B", "C"];

fn divisor_sum(labels: &'static [&'static str]) -> impl Strategy<Value = DivisorSum> {
    prop::collection::vec((-6i64..=6, 1i64..=4), labels.len())
        .prop_map(move |cs| DivisorSum::from_terms(labels.iter().zip(cs).map(|(l, (n, d))| (*l, q(n, d)))))
}

/// A table sending each label of `from` to a combination of labels of `to`.
fn table(from: &'static [&'static str], to: &'static [&'static str]) -> impl Strategy<Value = PullbackTable> {
    prop::collection::vec(divisor_sum(to), from.len()).prop_map(move |images| {
        let mut t = PullbackTable::new();
        for (l, img) in from.iter().zip(images) {
            t.insert(*l, img);
        }
        t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decompose_then_recompose(m in discrepancy()) {
        let (r, d) = decompose_discrepancy(&m).unwrap();
        prop_assert_eq!(q(r as i64, d as i64) - BigRational::one(), m.clone());
        prop_assert_eq!(r.gcd(&d), 1);
    }

    #[test]
    fn certificate_convention_is_always_crepant(ms in prop::collection::vec(discrepancy_with(12), 0..8)) {
        let index = ms.iter().fold(BigInt::one(), |acc, m| acc.lcm(m.denom()));
        let input = ResolutionData {
            name: "random".into(),
            gorenstein_index: u32::try_from(index).unwrap(),
            divisors: ms.iter().enumerate().map(|(i, m)| (format!("E{i}"), m.clone())).collect(),
        };
        let desc = build_crepant_stack(&input, RankConvention::Certificate).unwrap();
        prop_assert!(desc.crepant);
        prop_assert!(desc.certificate.iter().all(|c| c.passes && c.lhs.is_zero()));
        let literal = build_crepant_stack(&input, RankConvention::PaperLiteral).unwrap();
        prop_assert_eq!(literal.crepant, ms.is_empty());
    }

    #[test]
    fn composition_is_associative(
        kxy in divisor_sum(&LABELS),
        kyz in divisor_sum(&LABELS),
        kzw in divisor_sum(&LABELS),
        f in table(&LABELS, &LABELS),
        g in table(&LABELS, &LABELS),
    ) {
        // X -f-> Y -g-> Z -> W
        let compose = |k_upper: &DivisorSum, table: &PullbackTable, k_lower: &DivisorSum| {
            k_calculus(&KOperation::Composition { k_upper: k_upper.clone(), table: table.clone(), k_lower: k_lower.clone() })
                .unwrap()
        };
        let left = compose(&compose(&kxy, &f, &kyz), &g.then(&f).unwrap(), &kzw);
        let right = compose(&kxy, &f, &compose(&kyz, &g, &kzw));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn pullback_distributes_over_sums(a in divisor_sum(&LABELS), b in divisor_sum(&LABELS), t in table(&LABELS, &LABELS)) {
        let pa = t.pullback(&a).unwrap();
        let pb = t.pullback(&b).unwrap();
        prop_assert_eq!(t.pullback(&a.add(&b)).unwrap(), pa.add(&pb));
        let id = PullbackTable::identity(LABELS);
        prop_assert_eq!(id.pullback(&a).unwrap(), a);
    }
}

#[test]
fn empty_resolution_is_crepant() {
    let input = ResolutionData { name: "smooth".into(), gorenstein_index: 1, divisors: vec![] };
    let desc = build_crepant_stack(&input, RankConvention::Certificate).unwrap();
    assert!(desc.crepant);
    assert!(BigRational::zero().is_zero());
}
