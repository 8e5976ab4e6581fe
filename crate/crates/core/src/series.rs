//! Power series modulo `t^N` and matrices over them.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::scalar::Scalar;

/// Working precision used when none is given.
pub const DEFAULT_PRECISION: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("operands live over different base fields")]
    BaseMismatch,
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix entries must share one precision")]
    PrecisionMismatch,
    #[error("series is not a unit")]
    NotAUnit,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("maps do not compose to zero at working precision (position {0})")]
    NotAComplex(usize),
    #[error("cohomology is not torsion at object {0}")]
    NotTorsion(usize),
    #[error("cannot parse series literal `{text}` at offset {offset}: {reason}")]
    Parse { text: String, offset: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// `t`-adic valuation of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Exact(u32),
    /// Every known coefficient vanishes.
    AtLeast(u32),
}

impl Valuation {
    pub fn exact(self) -> Option<u32> {
        match self {
            Valuation::Exact(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Valuation::Exact(_))
    }

    /// Order of an ideal generated by two elements.
    pub fn min(self, other: Valuation) -> Valuation {
        use Valuation::*;
        match (self, other) {
            (Exact(a), Exact(b)) => Exact(a.min(b)),
            (Exact(a), AtLeast(b)) | (AtLeast(b), Exact(a)) => {
                if a < b {
                    Exact(a)
                } else {
                    AtLeast(b)
                }
            }
            (AtLeast(a), AtLeast(b)) => AtLeast(a.min(b)),
        }
    }

    /// Caps an exact value at the precision `n`.
    pub fn capped(v: u64, n: usize) -> Valuation {
        if v < n as u64 {
            Valuation::Exact(v as u32)
        } else {
            Valuation::AtLeast(n as u32)
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(v) => write!(f, "{v}"),
            Valuation::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// Exact values as numbers, lower bounds as `">=N"`.
impl serde::Serialize for Valuation {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
        match self {
            Valuation::Exact(v) => s.serialize_u32(*v),
            Valuation::AtLeast(_) => s.collect_str(self),
        }
    }
}

/// `c_0 + c_1 t + ... + c_{N-1} t^{N-1} mod t^N`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TruncatedSeries<S: Scalar> {
    base: S::Base,
    coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn zero(base: &S::Base, precision: usize) -> Self {
        assert!(precision >= 1, "precision must be at least 1");
        Self { base: base.clone(), coeffs: vec![S::zero(base); precision] }
    }

    pub fn one(base: &S::Base, precision: usize) -> Self {
        Self::constant(S::one(base), precision)
    }

    pub fn constant(c: S, precision: usize) -> Self {
        let mut s = Self::zero(&c.base(), precision);
        s.coeffs[0] = c;
        s
    }

    /// `c * t^k`, zero when `k >= precision`.
    pub fn monomial(c: S, k: usize, precision: usize) -> Self {
        let mut s = Self::zero(&c.base(), precision);
        if k < precision {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn t_pow(base: &S::Base, k: usize, precision: usize) -> Self {
        Self::monomial(S::one(base), k, precision)
    }

    /// Coefficients beyond `precision` are dropped, missing ones are zero.
    pub fn from_coeffs(base: &S::Base, coeffs: Vec<S>, precision: usize) -> Self {
        let mut s = Self::zero(base, precision);
        for (i, c) in coeffs.into_iter().enumerate().take(precision) {
            s.coeffs[i] = c;
        }
        s
    }

    pub fn from_i64s(base: &S::Base, coeffs: &[i64], precision: usize) -> Self {
        let v = coeffs.iter().map(|&c| S::from_i64(base, c)).collect();
        Self::from_coeffs(base, v, precision)
    }

    pub fn base(&self) -> &S::Base {
        &self.base
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &S {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(S::is_zero)
    }

    pub fn valuation(&self) -> Valuation {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(v) => Valuation::Exact(v as u32),
            None => Valuation::AtLeast(self.precision() as u32),
        }
    }

    pub fn is_unit(&self) -> bool {
        !self.coeffs[0].is_zero()
    }

    pub fn truncate(&self, precision: usize) -> Self {
        assert!(precision >= 1 && precision <= self.precision());
        Self { base: self.base.clone(), coeffs: self.coeffs[..precision].to_vec() }
    }

    /// Same series at a larger precision with unknown coefficients set to zero.
    pub fn pad(&self, precision: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(precision.max(self.precision()), S::zero(&self.base));
        Self { base: self.base.clone(), coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, S::add)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, S::sub)
    }

    fn zip(&self, o: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        debug_assert_eq!(self.base, o.base);
        let n = self.precision().min(o.precision());
        let coeffs = (0..n).map(|i| f(&self.coeffs[i], &o.coeffs[i])).collect();
        Self { base: self.base.clone(), coeffs }
    }

    pub fn neg(&self) -> Self {
        Self { base: self.base.clone(), coeffs: self.coeffs.iter().map(S::neg).collect() }
    }

    pub fn scale(&self, c: &S) -> Self {
        Self { base: self.base.clone(), coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert_eq!(self.base, o.base);
        let n = self.precision().min(o.precision());
        let mut out = vec![S::zero(&self.base); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n - i) {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        Self { base: self.base.clone(), coeffs: out }
    }

    /// Multiplicative inverse of a unit series.
    pub fn inverse(&self) -> Result<Self> {
        let c0inv = self.coeffs[0].inv().ok_or(SeriesError::NotAUnit)?;
        let n = self.precision();
        let mut out = vec![S::zero(&self.base); n];
        out[0] = c0inv.clone();
        for k in 1..n {
            let mut acc = S::zero(&self.base);
            for j in 1..=k {
                acc = acc.add(&self.coeffs[j].mul(&out[k - j]));
            }
            out[k] = acc.neg().mul(&c0inv);
        }
        Ok(Self { base: self.base.clone(), coeffs: out })
    }

    /// Divides by `t^v`, assuming the first `v` coefficients vanish.
    /// The result has precision `N - v`.
    pub fn shift_down(&self, v: usize) -> Self {
        debug_assert!(self.coeffs[..v].iter().all(S::is_zero));
        Self { base: self.base.clone(), coeffs: self.coeffs[v..].to_vec() }
    }

    /// Multiplies by `t^k` keeping the precision.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.precision();
        let mut out = vec![S::zero(&self.base); n];
        for i in 0..n.saturating_sub(k) {
            out[i + k] = self.coeffs[i].clone();
        }
        Self { base: self.base.clone(), coeffs: out }
    }

    /// Substitutes `t -> u t` for a scalar `u`.
    pub fn rescale_variable(&self, u: &S) -> Self {
        let mut p = S::one(&self.base);
        let mut coeffs = Vec::with_capacity(self.precision());
        for c in &self.coeffs {
            coeffs.push(c.mul(&p));
            p = p.mul(u);
        }
        Self { base: self.base.clone(), coeffs }
    }

    /// Parses `sum of c*t^k` terms, e.g. `2 + t - 3*t^4`. Integer or `p/q` coefficients.
    pub fn parse(base: &S::Base, text: &str, precision: usize) -> Result<Self> {
        if precision == 0 {
            return Err(SeriesError::ZeroPrecision);
        }
        SeriesLiteral { text, pos: 0 }.parse(base, precision)
    }
}

struct SeriesLiteral<'a> {
    text: &'a str,
    pos: usize,
}

impl SeriesLiteral<'_> {
    fn err(&self, reason: &str) -> SeriesError {
        SeriesError::Parse { text: self.text.to_string(), offset: self.pos, reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> Option<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().expect("ascii digits"))
    }

    fn parse<S: Scalar>(mut self, base: &S::Base, precision: usize) -> Result<TruncatedSeries<S>> {
        let mut out = TruncatedSeries::<S>::zero(base, precision);
        let mut first = true;
        loop {
            self.skip_ws();
            if self.pos == self.text.len() {
                if first {
                    return Err(self.err("empty literal"));
                }
                break;
            }
            let negative = if self.eat('-') {
                true
            } else if self.eat('+') {
                if first {
                    return Err(self.err("leading '+'"));
                }
                false
            } else if first {
                false
            } else {
                return Err(self.err("expected '+' or '-'"));
            };
            first = false;
            let (num, den, k) = self.term()?;
            let num = if negative { -num } else { num };
            let c = S::from_ratio(base, &num, &den).ok_or_else(|| self.err("denominator vanishes in the base field"))?;
            if k < precision {
                out.coeffs[k] = out.coeffs[k].add(&c);
            }
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<(BigInt, BigInt, usize)> {
        let coef = self.digits();
        let mut den = BigInt::from(1);
        if coef.is_some() && self.eat('/') {
            den = self.digits().ok_or_else(|| self.err("expected denominator"))?;
        }
        let has_t = if coef.is_some() {
            if self.eat('*') {
                if !self.eat('t') {
                    return Err(self.err("expected 't' after '*'"));
                }
                true
            } else {
                self.eat('t')
            }
        } else if self.eat('t') {
            true
        } else {
            return Err(self.err("expected a coefficient or 't'"));
        };
        let mut k = 0usize;
        if has_t {
            k = 1;
            if self.eat('^') {
                let e = self.digits().ok_or_else(|| self.err("expected exponent"))?;
                k = e.try_into().map_err(|_| self.err("exponent too large"))?;
            }
        }
        Ok((coef.unwrap_or_else(|| BigInt::from(1)), den, k))
    }
}

impl<S: Scalar> fmt::Display for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if wrote {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*t")?,
                _ => write!(f, "{c}*t^{k}")?,
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.precision())
    }
}

/// Rectangular matrix of series sharing one base field and precision.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SeriesMatrix<S: Scalar> {
    base: S::Base,
    precision: usize,
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> SeriesMatrix<S> {
    pub fn zero(base: &S::Base, rows: usize, cols: usize, precision: usize) -> Self {
        Self {
            base: base.clone(),
            precision,
            rows,
            cols,
            entries: vec![TruncatedSeries::zero(base, precision); rows * cols],
        }
    }

    pub fn identity(base: &S::Base, n: usize, precision: usize) -> Self {
        let mut m = Self::zero(base, n, n, precision);
        for i in 0..n {
            m.set(i, i, TruncatedSeries::one(base, precision));
        }
        m
    }

    /// Builds a matrix from rows; every entry must share the base field and precision.
    pub fn from_rows(base: &S::Base, precision: usize, rows: Vec<Vec<TruncatedSeries<S>>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            if row.len() != ncols {
                return Err(SeriesError::ShapeMismatch("ragged rows".into()));
            }
            for e in row {
                if e.base() != base {
                    return Err(SeriesError::BaseMismatch);
                }
                if e.precision() != precision {
                    return Err(SeriesError::PrecisionMismatch);
                }
                entries.push(e);
            }
        }
        Ok(Self { base: base.clone(), precision, rows: nrows, cols: ncols, entries })
    }

    /// Matrix from integer polynomial coefficient lists, `entries[i][j][k]` multiplying `t^k`.
    pub fn from_i64_polys(base: &S::Base, precision: usize, entries: &[Vec<Vec<i64>>]) -> Self {
        let rows = entries
            .iter()
            .map(|row| row.iter().map(|c| TruncatedSeries::from_i64s(base, c, precision)).collect())
            .collect();
        Self::from_rows(base, precision, rows).expect("uniform by construction")
    }

    /// An empty `rows x 0` or `0 x cols` matrix.
    pub fn empty(base: &S::Base, rows: usize, cols: usize, precision: usize) -> Self {
        assert!(rows == 0 || cols == 0);
        Self::zero(base, rows, cols, precision)
    }

    pub fn base(&self) -> &S::Base {
        &self.base
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncatedSeries<S> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: TruncatedSeries<S>) {
        debug_assert_eq!(v.precision(), self.precision);
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[TruncatedSeries<S>] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(TruncatedSeries::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(&self.base, self.cols, self.rows, self.precision);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(SeriesError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        if self.base != o.base {
            return Err(SeriesError::BaseMismatch);
        }
        let n = self.precision.min(o.precision);
        let mut out = Self::zero(&self.base, self.rows, o.cols, n);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = TruncatedSeries::zero(&self.base, n);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn map_entries(&self, f: impl Fn(&TruncatedSeries<S>) -> TruncatedSeries<S>) -> Self {
        let entries: Vec<_> = self.entries.iter().map(f).collect();
        let precision = entries.first().map_or(self.precision, TruncatedSeries::precision);
        Self { base: self.base.clone(), precision, rows: self.rows, cols: self.cols, entries }
    }

    /// Submatrix on the given row and column indices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zero(&self.base, rows.len(), cols.len(), self.precision);
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                out.set(a, b, self.get(i, j).clone());
            }
        }
        out
    }

    /// Determinant by cofactor expansion; intended for small blocks.
    pub fn determinant(&self) -> Result<TruncatedSeries<S>> {
        if self.rows != self.cols {
            return Err(SeriesError::ShapeMismatch("determinant of a non-square matrix".into()));
        }
        let idx: Vec<usize> = (0..self.cols).collect();
        Ok(self.det_rec(0, &idx))
    }

    fn det_rec(&self, row: usize, cols: &[usize]) -> TruncatedSeries<S> {
        if cols.is_empty() {
            return TruncatedSeries::one(&self.base, self.precision);
        }
        let mut acc = TruncatedSeries::zero(&self.base, self.precision);
        let mut rest = Vec::with_capacity(cols.len() - 1);
        for (k, &c) in cols.iter().enumerate() {
            let e = self.get(row, c);
            if e.is_zero() {
                continue;
            }
            rest.clear();
            rest.extend(cols.iter().copied().filter(|&x| x != c));
            let term = e.mul(&self.det_rec(row + 1, &rest));
            acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        acc
    }
}

impl<S: Scalar> fmt::Display for SeriesMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
