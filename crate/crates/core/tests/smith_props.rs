use proptest::prelude::*;

use motivic_forge::scalar::{Fp, PrimeField};
use motivic_forge::series::{SeriesMatrix, TruncatedSeries};
use motivic_forge::smith::{fitting_order_by_minors, fitting_order_by_smith, smith_normal_form_partial};

const PREC: usize = 10;

fn field() -> PrimeField {
    PrimeField::new(5).unwrap()
}

fn series(c: &[i64]) -> TruncatedSeries<Fp> {
    TruncatedSeries::from_i64s(&field(), c, PREC)
}

fn build(rows: usize, cols: usize, entries: &[Vec<i64>]) -> SeriesMatrix<Fp> {
    let rows = (0..rows).map(|i| (0..cols).map(|j| series(&entries[i * cols + j])).collect()).collect();
    SeriesMatrix::from_rows(&field(), PREC, rows).unwrap()
}

/// Entries with a bias toward divisibility by `t`.
fn matrix() -> impl Strategy<Value = SeriesMatrix<Fp>> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
        prop::collection::vec((0usize..4, prop::collection::vec(0i64..5, 3)), r * c).prop_map(move |raw| {
            let entries: Vec<Vec<i64>> = raw
                .into_iter()
                .map(|(shift, mut coeffs)| {
                    let mut v = vec![0; shift];
                    v.append(&mut coeffs);
                    v
                })
                .collect();
            build(r, c, &entries)
        })
    })
}

/// Unit lower triangular times unit upper triangular.
fn unimodular(n: usize, seed: &[i64]) -> SeriesMatrix<Fp> {
    let mut k = 0;
    let mut next = || {
        k += 1;
        series(&[seed[k % seed.len()], seed[(k * 7) % seed.len()]])
    };
    let mut lo = vec![vec![series(&[]); n]; n];
    let mut up = vec![vec![series(&[]); n]; n];
    for i in 0..n {
        lo[i][i] = series(&[1]);
        up[i][i] = series(&[1]);
        for j in 0..i {
            lo[i][j] = next();
            up[j][i] = next();
        }
    }
    let lo = SeriesMatrix::from_rows(&field(), PREC, lo).unwrap();
    let up = SeriesMatrix::from_rows(&field(), PREC, up).unwrap();
    lo.mul(&up).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn invariant_factors_survive_unimodular_changes(m in matrix(), seed in prop::collection::vec(0i64..5, 1..12)) {
        let p = unimodular(m.rows(), &seed);
        let q = unimodular(m.cols(), &seed[1..].iter().chain(&seed[..1]).copied().collect::<Vec<_>>());
        let moved = p.mul(&m).unwrap().mul(&q).unwrap();
        let a = smith_normal_form_partial(&m);
        let b = smith_normal_form_partial(&moved);
        prop_assert_eq!(a.invariant_valuations, b.invariant_valuations);
        prop_assert_eq!(a.rank, b.rank);
        prop_assert_eq!(a.certified, b.certified);
    }

    #[test]
    fn minors_agree_with_smith_form(m in matrix()) {
        for j in 0..=m.rows() {
            prop_assert_eq!(fitting_order_by_minors(&m, j), fitting_order_by_smith(&m, j), "j = {}", j);
        }
    }
}
