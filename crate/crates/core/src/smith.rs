//! Smith normal form over `k[[t]]` at finite precision, Fitting-ideal orders,
//! and torsion lengths of complexes of free modules.
//!
//! Elimination always pivots on an entry of globally minimal valuation. With
//! that choice every row or column operation is exact modulo `t^N`: the
//! quotient `a / pivot` is only known modulo `t^{N - v}`, but it multiplies
//! entries of valuation at least `v`.

use rayon::prelude::*;
use serde::Serialize;

use crate::scalar::Scalar;
use crate::series::{Result, SeriesError, SeriesMatrix, TruncatedSeries, Valuation};

/// Largest minor size evaluated by enumeration; bigger Fitting ideals go through the Smith form.
pub const MAX_MINOR_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmithReport {
    /// Valuations of the nonzero invariant factors, nondecreasing.
    pub invariant_valuations: Vec<u32>,
    /// Number of invariant factors found below the precision.
    pub rank: usize,
    /// True when no block indistinguishable from zero was left over,
    /// so `rank` is the true rank.
    pub certified: bool,
    pub precision: usize,
    /// Shape of the trailing block that vanished modulo `t^N`.
    pub unresolved: (usize, usize),
}

impl SmithReport {
    /// Sum of the `s` smallest invariant valuations, `None` when fewer than `s` are known.
    pub fn leading_sum(&self, s: usize) -> Option<u64> {
        (s <= self.invariant_valuations.len())
            .then(|| self.invariant_valuations[..s].iter().map(|&v| v as u64).sum())
    }

    /// Length of the torsion part of the cokernel.
    pub fn torsion_length(&self) -> u64 {
        self.invariant_valuations.iter().map(|&v| v as u64).sum()
    }
}

/// Diagonalizes without failing; uncertified when a zero block remains.
pub fn smith_normal_form_partial<S: Scalar>(m: &SeriesMatrix<S>) -> SmithReport {
    let (rows, cols, n) = (m.rows(), m.cols(), m.precision());
    let mut a: Vec<Vec<TruncatedSeries<S>>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let mut pivots = Vec::new();
    let steps = rows.min(cols);
    let mut k = 0;
    while k < steps {
        let mut best: Option<(u32, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, e) in row.iter().enumerate().skip(k) {
                if let Valuation::Exact(v) = e.valuation() {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        let vu = v as usize;
        let unit_inv = a[k][k].shift_down(vu).inverse().expect("pivot has exact valuation");
        for i in k + 1..rows {
            if a[i][k].is_zero() {
                continue;
            }
            let c = a[i][k].shift_down(vu).mul(&unit_inv).pad(n);
            for j in k..cols {
                let sub = c.mul(&a[k][j]);
                a[i][j] = a[i][j].sub(&sub);
            }
        }
        for j in k + 1..cols {
            if a[k][j].is_zero() {
                continue;
            }
            let c = a[k][j].shift_down(vu).mul(&unit_inv).pad(n);
            let sub = c.mul(&a[k][k]);
            a[k][j] = a[k][j].sub(&sub);
        }
        pivots.push(v);
        k += 1;
    }
    let unresolved = if k < steps { (rows - k, cols - k) } else { (0, 0) };
    SmithReport {
        rank: pivots.len(),
        invariant_valuations: pivots,
        certified: k == steps,
        precision: n,
        unresolved,
    }
}

/// Smith normal form; fails when a block indistinguishable from zero blocks certification.
pub fn smith_normal_form<S: Scalar>(m: &SeriesMatrix<S>) -> Result<SmithReport> {
    let report = smith_normal_form_partial(m);
    if !report.certified {
        return Err(SeriesError::InsufficientPrecision(format!(
            "{}x{} block vanishes modulo t^{}",
            report.unresolved.0, report.unresolved.1, report.precision
        )));
    }
    Ok(report)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Size of the minors defining `Fitt_j` of the cokernel of a `b x a` matrix;
/// `None` means the ideal is the unit ideal.
fn minor_size(rows: usize, j: usize) -> Option<usize> {
    (j < rows).then(|| rows - j)
}

/// `ord_t Fitt_j(coker M)` as the minimum valuation over all `(b-j) x (b-j)` minors.
pub fn fitting_order_by_minors<S: Scalar>(m: &SeriesMatrix<S>, j: usize) -> Valuation {
    let n = m.precision();
    let Some(s) = minor_size(m.rows(), j) else {
        return Valuation::Exact(0);
    };
    if s > m.cols() {
        return Valuation::AtLeast(n as u32);
    }
    let row_sets = combinations(m.rows(), s);
    let col_sets = combinations(m.cols(), s);
    let pairs: Vec<(&Vec<usize>, &Vec<usize>)> =
        row_sets.iter().flat_map(|r| col_sets.iter().map(move |c| (r, c))).collect();
    pairs
        .par_iter()
        .map(|(r, c)| m.submatrix(r, c).determinant().expect("square").valuation())
        .reduce(|| Valuation::AtLeast(n as u32), Valuation::min)
}

/// `ord_t Fitt_j(coker M)` from the invariant factors: the sum of the `b - j` smallest.
pub fn fitting_order_by_smith<S: Scalar>(m: &SeriesMatrix<S>, j: usize) -> Valuation {
    let n = m.precision();
    let Some(s) = minor_size(m.rows(), j) else {
        return Valuation::Exact(0);
    };
    if s > m.cols() {
        return Valuation::AtLeast(n as u32);
    }
    let report = smith_normal_form_partial(m);
    match report.leading_sum(s) {
        Some(v) => Valuation::capped(v, n),
        // a missing invariant factor has valuation >= N, hence so does every s-minor
        None => Valuation::AtLeast(n as u32),
    }
}

/// Order of `Fitt_j` of the module presented by `M: R^a -> R^b`.
///
/// Values at or above the precision are reported as `AtLeast(N)` by both
/// routes. Minors are enumerated up to [`MAX_MINOR_SIZE`].
pub fn fitting_order<S: Scalar>(m: &SeriesMatrix<S>, j: usize) -> Valuation {
    match minor_size(m.rows(), j) {
        Some(s) if s > MAX_MINOR_SIZE => fitting_order_by_smith(m, j),
        _ => fitting_order_by_minors(m, j),
    }
}

/// Both sides of the torsion-length identities for a complex `R^a -> R^{a+b} -> R^b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TorsionLengthReport {
    pub a: usize,
    pub b: usize,
    /// Length of `ker(beta) / im(alpha)`.
    pub dim_q: u64,
    /// Length of `coker(beta)`.
    pub dim_coker_beta: u64,
    /// `ord_t Fitt_b(coker alpha)`.
    pub fitting_alpha: Valuation,
    /// `ord_t Fitt_0(coker beta)`.
    pub fitting_beta: Valuation,
}

impl TorsionLengthReport {
    pub fn holds(&self) -> bool {
        let n = u32::MAX as usize;
        Valuation::capped(self.dim_q, n) == self.fitting_alpha
            && Valuation::capped(self.dim_coker_beta, n) == self.fitting_beta
    }
}

fn check_composes_to_zero<S: Scalar>(first: &SeriesMatrix<S>, second: &SeriesMatrix<S>, at: usize) -> Result<()> {
    if second.cols() != first.rows() {
        return Err(SeriesError::ShapeMismatch(format!(
            "map {at} has {} rows but map {} has {} columns",
            first.rows(),
            at + 1,
            second.cols()
        )));
    }
    if !second.mul(first)?.is_zero() {
        return Err(SeriesError::NotAComplex(at));
    }
    Ok(())
}

/// Computes the lengths of `Q = ker(beta)/im(alpha)` and `coker(beta)` from the
/// Smith forms, alongside the Fitting orders computed from minors.
///
/// `alpha` is `(a+b) x a`, `beta` is `b x (a+b)`.
pub fn torsion_length_check<S: Scalar>(
    alpha: &SeriesMatrix<S>,
    beta: &SeriesMatrix<S>,
    a: usize,
    b: usize,
) -> Result<TorsionLengthReport> {
    if alpha.rows() != a + b || alpha.cols() != a || beta.rows() != b || beta.cols() != a + b {
        return Err(SeriesError::ShapeMismatch(format!(
            "expected alpha {}x{a} and beta {b}x{}, got {}x{} and {}x{}",
            a + b,
            a + b,
            alpha.rows(),
            alpha.cols(),
            beta.rows(),
            beta.cols()
        )));
    }
    check_composes_to_zero(alpha, beta, 0)?;
    let sa = smith_normal_form_partial(alpha);
    let sb = smith_normal_form_partial(beta);
    for (rep, want, idx) in [(&sa, a, 0usize), (&sb, b, 1)] {
        if rep.rank < want {
            return Err(if rep.certified {
                SeriesError::NotTorsion(idx)
            } else {
                SeriesError::InsufficientPrecision(format!("rank of map {idx} not certified"))
            });
        }
    }
    Ok(TorsionLengthReport {
        a,
        b,
        dim_q: sa.torsion_length(),
        dim_coker_beta: sb.torsion_length(),
        fitting_alpha: fitting_order(alpha, b),
        fitting_beta: fitting_order(beta, 0),
    })
}

/// Alternating sum of cohomology lengths of a complex of free modules whose
/// first object sits in degree `first_degree`.
///
/// `maps[i]` goes from object `i` to object `i + 1` (so it has
/// `dim(object i)` columns). All cohomology must be torsion; the length of
/// `H` at an object is then the torsion length of the cokernel of the
/// incoming map.
pub fn euler_valuation_from<S: Scalar>(maps: &[SeriesMatrix<S>], first_degree: i32) -> Result<i64> {
    if maps.is_empty() {
        return Ok(0);
    }
    for i in 1..maps.len() {
        check_composes_to_zero(&maps[i - 1], &maps[i], i - 1)?;
    }
    let reports: Vec<SmithReport> = maps.iter().map(smith_normal_form).collect::<Result<_>>()?;
    let dims: Vec<usize> = std::iter::once(maps[0].cols()).chain(maps.iter().map(SeriesMatrix::rows)).collect();
    let mut total = 0i64;
    for (obj, &dim) in dims.iter().enumerate() {
        let incoming = if obj == 0 { 0 } else { reports[obj - 1].rank };
        let outgoing = reports.get(obj).map_or(0, |r| r.rank);
        if incoming + outgoing != dim {
            return Err(SeriesError::NotTorsion(obj));
        }
        let len = if obj == 0 { 0 } else { reports[obj - 1].torsion_length() as i64 };
        let degree = first_degree + obj as i32;
        total += if degree.rem_euclid(2) == 0 { len } else { -len };
    }
    Ok(total)
}

/// [`euler_valuation_from`] with the first object in degree `-1`.
pub fn euler_valuation<S: Scalar>(maps: &[SeriesMatrix<S>]) -> Result<i64> {
    euler_valuation_from(maps, -1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Fp, PrimeField, Rationals, Q};

    fn qm(precision: usize, e: &[Vec<Vec<i64>>]) -> SeriesMatrix<Q> {
        SeriesMatrix::from_i64_polys(&Rationals, precision, e)
    }

    #[test]
    fn diagonal_snf() {
        let m = qm(16, &[vec![vec![0, 1], vec![]], vec![vec![], vec![0, 0, 1]]]);
        let r = smith_normal_form(&m).unwrap();
        assert_eq!(r.invariant_valuations, vec![1, 2]);
        assert!(r.certified);
    }

    #[test]
    fn non_diagonal_snf() {
        // [[t, t], [t, 2t]]
        let m = qm(16, &[vec![vec![0, 1], vec![0, 1]], vec![vec![0, 1], vec![0, 2]]]);
        assert_eq!(smith_normal_form(&m).unwrap().invariant_valuations, vec![1, 1]);
    }

    #[test]
    fn snf_insufficient_precision() {
        let m = qm(4, &[vec![vec![0, 0, 0, 0, 0, 0, 0, 1]]]);
        assert!(matches!(smith_normal_form(&m), Err(SeriesError::InsufficientPrecision(_))));
        let partial = smith_normal_form_partial(&m);
        assert!(!partial.certified);
        assert_eq!(partial.unresolved, (1, 1));
    }

    #[test]
    fn fitting_examples() {
        // column (1, 0, 0, t)
        let col = qm(16, &[vec![vec![1]], vec![vec![]], vec![vec![]], vec![vec![0, 1]]]);
        assert_eq!(fitting_order(&col, 3), Valuation::Exact(0));
        assert_eq!(fitting_order_by_smith(&col, 3), Valuation::Exact(0));

        let sq = qm(16, &[vec![vec![0, 0, 1]]]);
        assert_eq!(fitting_order(&sq, 0), Valuation::Exact(2));

        // d1 of diag(t, 1)
        let d1 = qm(
            16,
            &[
                vec![vec![0, 1], vec![], vec![], vec![-1]],
                vec![vec![], vec![1], vec![], vec![]],
                vec![vec![], vec![], vec![0, 1], vec![]],
            ],
        );
        assert_eq!(fitting_order_by_minors(&d1, 0), Valuation::Exact(1));
        assert_eq!(fitting_order_by_smith(&d1, 0), Valuation::Exact(1));
    }

    #[test]
    fn fitting_conventions() {
        let m = qm(8, &[vec![vec![0, 1]], vec![vec![0, 0, 1]]]);
        // j >= rows: unit ideal
        assert_eq!(fitting_order(&m, 2), Valuation::Exact(0));
        // 2x2 minors of a 2x1 matrix: zero ideal
        assert_eq!(fitting_order(&m, 0), Valuation::AtLeast(8));
        assert_eq!(fitting_order_by_smith(&m, 0), Valuation::AtLeast(8));
    }

    #[test]
    fn torsion_lengths_small() {
        // alpha = (t, 0)^T, beta = (0, t^2)
        let alpha = qm(16, &[vec![vec![0, 1]], vec![vec![]]]);
        let beta = qm(16, &[vec![vec![], vec![0, 0, 1]]]);
        let r = torsion_length_check(&alpha, &beta, 1, 1).unwrap();
        assert_eq!(r.dim_q, 1);
        assert_eq!(r.dim_coker_beta, 2);
        assert!(r.holds());
    }

    #[test]
    fn torsion_lengths_trivial() {
        let alpha = qm(16, &[vec![vec![1]]]);
        let beta = SeriesMatrix::<Q>::empty(&Rationals, 0, 1, 16);
        let r = torsion_length_check(&alpha, &beta, 1, 0).unwrap();
        assert_eq!((r.dim_q, r.dim_coker_beta), (0, 0));
        assert!(r.holds());
    }

    #[test]
    fn torsion_lengths_errors() {
        let alpha = qm(16, &[vec![vec![1]], vec![vec![]]]);
        let beta = qm(16, &[vec![vec![1], vec![1]]]);
        assert!(matches!(torsion_length_check(&alpha, &beta, 1, 1), Err(SeriesError::NotAComplex(0))));
        let beta = qm(16, &[vec![vec![], vec![]]]);
        assert!(matches!(
            torsion_length_check(&alpha, &beta, 1, 1),
            Err(SeriesError::InsufficientPrecision(_))
        ));
    }

    #[test]
    fn euler_examples() {
        let single = vec![qm(16, &[vec![vec![0, 0, 1]]])];
        assert_eq!(euler_valuation(&single).unwrap(), 2);

        let alpha = qm(16, &[vec![vec![0, 1]], vec![vec![]]]);
        let beta = qm(16, &[vec![vec![], vec![0, 1]]]);
        // H^0 has length 1, H^1 has length 1
        assert_eq!(euler_valuation(&[alpha.clone(), beta.clone()]).unwrap(), 0);
        assert_eq!(euler_valuation_from(&[alpha, beta], 0).unwrap(), 0);

        assert_eq!(euler_valuation::<Q>(&[]).unwrap(), 0);
    }

    #[test]
    fn euler_rejects_non_torsion() {
        // R --t--> R^2 has a free cokernel summand
        let alpha = qm(16, &[vec![vec![0, 1]], vec![vec![]]]);
        assert!(matches!(euler_valuation(&[alpha]), Err(SeriesError::NotTorsion(1))));
    }

    #[test]
    fn snf_over_prime_field() {
        let f = PrimeField::new(5).unwrap();
        // [[t, t], [t, 6t]] = [[t,t],[t,t]] over F_5: rank 1
        let m = SeriesMatrix::<Fp>::from_i64_polys(
            &f,
            8,
            &[vec![vec![0, 1], vec![0, 1]], vec![vec![0, 1], vec![0, 6]]],
        );
        let r = smith_normal_form_partial(&m);
        assert_eq!(r.invariant_valuations, vec![1]);
        assert!(!r.certified);
    }
}
