//! Arc pullbacks of the cotangent-type complex of a quotient-stack cover and their heights.
//!
//! Two families are built in.
//!
//! * `slr(r)`: `X~ = A^{r^2}` (matrices `A`) over `[A^{r^2}/SL_r]`, mapping to
//!   `Y = A^1` by `det`. The complex along an arc is
//!   `R --d0--> R^{r^2} --d1--> R^{r^2-1}` in degrees `-1, 0, 1`, where `d0` is
//!   the signed cofactor column `d det / d a_ij` (row-major, index `i*r + j`)
//!   and row `k` of `d1` is `xi_k * A` flattened row-major.
//!   The `sl_r` basis `xi_k` is `E_ii - E_{i+1,i+1}` for `i = 0..r-2`, followed by
//!   `E_ij` (`i != j`) in row-major order. For `r = 2` that is `h, e, f`.
//! * `hypersurface(f)`: `Y = {f = 0}` in `A^{d+1}`, covered by a polynomial map
//!   `pi: A^d -> Y`. The complex is
//!   `R --grad f--> R^{d+1} --Jac pi--> R^d --> 0` in degrees `-2, -1, 0, 1`.
//!
//! Heights are Fitting orders: `ht0 = ord Fitt_{r_f}(coker d0)`,
//! `ht1 = ord Fitt_0(coker d1)` and, for hypersurfaces,
//! `ht_minus1 = ord Fitt_d(coker grad f)`, the Jacobian order along `pi o phi`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::crepant::DivisorSum;
use crate::scalar::{Fp, PrimeField, Scalar};
use crate::series::{SeriesError, SeriesMatrix, TruncatedSeries, Valuation};
use crate::smith::{euler_valuation_from, fitting_order};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeightsError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("arc is not generic: {0}")]
    NotGeneric(String),
    #[error("arc does not lie on the target: f(pi(phi)) has valuation {0}")]
    NotOnTarget(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("component order must be positive, got {0}")]
    ZeroComponentOrder(i64),
    #[error("no ideal attached to divisor label `{0}`")]
    UnknownLabel(String),
    #[error("coefficient {0} is not defined over the base field")]
    BadCoefficient(String),
    #[error("parse error in `{text}` at offset {offset}: {reason}")]
    Parse { text: String, offset: usize, reason: String },
    #[error("invalid arc: {0}")]
    BadArc(String),
}

pub type Result<T> = std::result::Result<T, HeightsError>;

/// Multivariate polynomial with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, BigRational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigRational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self { nvars: self.nvars, terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.nvars), |acc, _| acc.mul(self))
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                out.add_term(e2, c * BigInt::from(e[i]));
            }
        }
        out
    }

    /// Substitutes `subs[i]` for variable `i`.
    pub fn compose(&self, subs: &[Polynomial]) -> Self {
        let nv = subs.first().map_or(0, Polynomial::nvars);
        let mut out = Self::zero(nv);
        for (e, c) in &self.terms {
            let mut term = Self::constant(nv, c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&subs[i].pow(k));
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Evaluates along series coordinates.
    pub fn eval<S: Scalar>(&self, base: &S::Base, coords: &[TruncatedSeries<S>], precision: usize) -> Result<TruncatedSeries<S>> {
        if coords.len() != self.nvars {
            return Err(HeightsError::BadArc(format!("expected {} coordinates, got {}", self.nvars, coords.len())));
        }
        let mut powers: Vec<Vec<TruncatedSeries<S>>> = coords.iter().map(|c| vec![TruncatedSeries::one(base, precision), c.pad(precision).truncate(precision)]).collect();
        let mut acc = TruncatedSeries::zero(base, precision);
        for (e, c) in &self.terms {
            let coeff = S::from_ratio(base, c.numer(), c.denom()).ok_or_else(|| HeightsError::BadCoefficient(c.to_string()))?;
            let mut term = TruncatedSeries::constant(coeff, precision);
            for (i, &k) in e.iter().enumerate() {
                let k = k as usize;
                while powers[i].len() <= k {
                    let next = powers[i].last().unwrap().mul(&powers[i][1]);
                    powers[i].push(next);
                }
                if k > 0 {
                    term = term.mul(&powers[i][k]);
                }
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Determinant of the generic `r x r` matrix in variables `a_ij`, index `i*r + j`.
    pub fn determinant(r: usize) -> Self {
        let nv = r * r;
        let mut out = Self::zero(nv);
        for perm in permutations(r) {
            let mut e = vec![0u32; nv];
            for (i, &j) in perm.iter().enumerate() {
                e[i * r + j] = 1;
            }
            let sign = if inversions(&perm) % 2 == 0 { 1 } else { -1 };
            out.add_term(e, BigRational::from_integer(sign.into()));
        }
        out
    }

    /// Parses `+ - * ^ ( )`, integer or `p/q` constants and the given variable names.
    /// Juxtaposition multiplies.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Self> {
        let mut p = PolyParser { text, pos: 0, vars };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }

    pub fn display_with(&self, vars: &[&str]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            s.push_str(match (k, neg) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            });
            let mag = c.abs();
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { vars[i].to_string() } else { format!("{}^{k}", vars[i]) })
                .collect();
            match (mono.is_empty(), mag.is_one()) {
                (true, _) => s.push_str(&mag.to_string()),
                (false, true) => s.push_str(&mono.join("*")),
                (false, false) if mag.is_integer() => s.push_str(&format!("{mag}*{}", mono.join("*"))),
                (false, false) => s.push_str(&format!("({mag})*{}", mono.join("*"))),
            }
        }
        s
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn inversions(p: &[usize]) -> usize {
    (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count()
}

struct PolyParser<'a> {
    text: &'a str,
    pos: usize,
    vars: &'a [&'a str],
}

impl PolyParser<'_> {
    fn err(&self, reason: &str) -> HeightsError {
        HeightsError::Parse { text: self.text.to_string(), offset: self.pos, reason: reason.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn nv(&self) -> usize {
        self.vars.len()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        let mut acc = if self.peek() == Some('-') {
            self.pos += 1;
            self.term()?.neg()
        } else {
            self.term()?
        };
        loop {
            self.skip_ws();
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some('-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.power()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(c) if c == '(' || c.is_ascii_alphanumeric() || c == '_' => acc = acc.mul(&self.power()?),
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        self.skip_ws();
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let k = self.digits().ok_or_else(|| self.err("expected a nonnegative integer exponent"))?;
        let k: u32 = k.to_u32().ok_or_else(|| self.err("exponent too large"))?;
        Ok(base.pow(k))
    }

    fn digits(&mut self) -> Option<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].parse().unwrap())
    }

    fn atom(&mut self) -> Result<Polynomial> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.digits().unwrap();
                let mut d = BigInt::one();
                if self.peek() == Some('/') {
                    self.pos += 1;
                    d = self.digits().ok_or_else(|| self.err("expected a denominator"))?;
                    if d.is_zero() {
                        return Err(self.err("zero denominator"));
                    }
                }
                Ok(Polynomial::constant(self.nv(), BigRational::new(n, d)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                match self.vars.iter().position(|v| *v == name) {
                    Some(i) => Ok(Polynomial::var(self.nv(), i)),
                    None => {
                        self.pos = start;
                        Err(self.err(&format!("unknown variable `{name}`")))
                    }
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// Supported covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Slr { r: usize },
    Hypersurface {
        /// Defining equation in `d + 1` variables.
        f: Polynomial,
        /// Components of `pi`, each in `d` variables.
        cover: Vec<Polynomial>,
    },
}

impl Family {
    pub fn slr(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(HeightsError::UnsupportedFamily("slr(0)".into()));
        }
        Ok(Family::Slr { r })
    }

    /// Checks shapes and that `f o pi` vanishes identically.
    pub fn hypersurface(f: Polynomial, cover: Vec<Polynomial>) -> Result<Self> {
        let d = f.nvars().checked_sub(1).ok_or_else(|| HeightsError::UnsupportedFamily("f has no variables".into()))?;
        if d == 0 || cover.len() != d + 1 || cover.iter().any(|c| c.nvars() != d) {
            return Err(HeightsError::UnsupportedFamily(format!(
                "hypersurface in A^{} needs {} cover components in {d} variables",
                d + 1,
                d + 1
            )));
        }
        if !f.compose(&cover).is_zero() {
            return Err(HeightsError::NotOnTarget("the cover does not land on f = 0".into()));
        }
        Ok(Family::Hypersurface { f, cover })
    }

    pub fn name(&self) -> String {
        match self {
            Family::Slr { r } => format!("slr({r})"),
            Family::Hypersurface { f, .. } => format!("hypersurface(A^{})", f.nvars()),
        }
    }

    /// Number of arc coordinates on the cover.
    pub fn cover_dim(&self) -> usize {
        match self {
            Family::Slr { r } => r * r,
            Family::Hypersurface { cover, .. } => cover[0].nvars(),
        }
    }

    /// `dim X~ - dim X`.
    pub fn fiber_dim(&self) -> usize {
        match self {
            Family::Slr { r } => r * r - 1,
            Family::Hypersurface { .. } => 0,
        }
    }

    pub fn base_dim(&self) -> usize {
        match self {
            Family::Slr { .. } => 1,
            Family::Hypersurface { cover, .. } => cover[0].nvars(),
        }
    }

    /// Ideals of the named divisors on the cover.
    /// `slr`: `D` and `D'` are both cut out by `det`. `hypersurface`: `D` is the
    /// origin of the source, generated by the coordinates.
    pub fn default_divisors(&self) -> BTreeMap<String, Vec<Polynomial>> {
        let mut m = BTreeMap::new();
        match self {
            Family::Slr { r } => {
                m.insert("D".to_string(), vec![Polynomial::determinant(*r)]);
                m.insert("D'".to_string(), vec![Polynomial::determinant(*r)]);
            }
            Family::Hypersurface { cover, .. } => {
                let d = cover[0].nvars();
                m.insert("D".to_string(), (0..d).map(|i| Polynomial::var(d, i)).collect());
            }
        }
        m
    }
}

/// An arc `phi~` on the cover, stored as coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcOnCover<S: Scalar> {
    pub family: Family,
    base: S::Base,
    precision: usize,
    coords: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> ArcOnCover<S> {
    pub fn new(family: Family, base: &S::Base, precision: usize, coords: Vec<TruncatedSeries<S>>) -> Result<Self> {
        if precision == 0 {
            return Err(SeriesError::ZeroPrecision.into());
        }
        if coords.len() != family.cover_dim() {
            return Err(HeightsError::BadArc(format!(
                "{} needs {} coordinates, got {}",
                family.name(),
                family.cover_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| c.base() != base) {
            return Err(SeriesError::BaseMismatch.into());
        }
        let coords = coords.into_iter().map(|c| c.pad(precision).truncate(precision)).collect();
        Ok(Self { family, base: base.clone(), precision, coords })
    }

    pub fn slr(a: &SeriesMatrix<S>) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(HeightsError::BadArc("slr arcs are square matrices".into()));
        }
        let r = a.rows();
        let coords = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).map(|(i, j)| a.get(i, j).clone()).collect();
        Self::new(Family::slr(r)?, a.base(), a.precision(), coords)
    }

    pub fn base(&self) -> &S::Base {
        &self.base
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn coords(&self) -> &[TruncatedSeries<S>] {
        &self.coords
    }

    /// The matrix `A(t)` of an `slr` arc.
    pub fn matrix(&self) -> Option<SeriesMatrix<S>> {
        let Family::Slr { r } = self.family else { return None };
        let rows = (0..r).map(|i| self.coords[i * r..(i + 1) * r].to_vec()).collect();
        Some(SeriesMatrix::from_rows(&self.base, self.precision, rows).expect("square"))
    }

    /// `t -> u t`.
    pub fn rescale(&self, u: &S) -> Self {
        Self { coords: self.coords.iter().map(|c| c.rescale_variable(u)).collect(), ..self.clone() }
    }

    /// The image arc `psi = pi o phi` in the ambient space of `Y`.
    pub fn image(&self) -> Result<Vec<TruncatedSeries<S>>> {
        match &self.family {
            Family::Slr { .. } => Ok(vec![self.matrix().unwrap().determinant()?]),
            Family::Hypersurface { cover, .. } => {
                cover.iter().map(|c| c.eval(&self.base, &self.coords, self.precision)).collect()
            }
        }
    }
}

/// Arc pullback of the complex; `conormal` is present only for hypersurfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexPresentation<S: Scalar> {
    pub conormal: Option<SeriesMatrix<S>>,
    pub d0: SeriesMatrix<S>,
    pub d1: SeriesMatrix<S>,
    pub fiber_dim: usize,
    pub base_dim: usize,
}

impl<S: Scalar> ComplexPresentation<S> {
    /// Consecutive maps and the degree of their first source.
    pub fn maps(&self) -> (Vec<SeriesMatrix<S>>, i32) {
        match &self.conormal {
            Some(c) => (vec![c.clone(), self.d0.clone(), self.d1.clone()], -2),
            None => (vec![self.d0.clone(), self.d1.clone()], -1),
        }
    }

    pub fn euler_valuation(&self) -> Result<i64> {
        let (maps, first) = self.maps();
        Ok(euler_valuation_from(&maps, first)?)
    }
}

/// `E_ii - E_{i+1,i+1}` first, then `E_ij` for `i != j` row-major.
pub fn sl_basis(r: usize) -> Vec<Vec<(usize, usize, i64)>> {
    let mut out: Vec<Vec<(usize, usize, i64)>> = (0..r.saturating_sub(1)).map(|i| vec![(i, i, 1), (i + 1, i + 1, -1)]).collect();
    for i in 0..r {
        for j in 0..r {
            if i != j {
                out.push(vec![(i, j, 1)]);
            }
        }
    }
    out
}

pub fn build_presentation<S: Scalar>(arc: &ArcOnCover<S>) -> Result<ComplexPresentation<S>> {
    let (base, n) = (&arc.base, arc.precision);
    match &arc.family {
        Family::Slr { r } => {
            let r = *r;
            let a = arc.matrix().unwrap();
            let mut d0 = SeriesMatrix::zero(base, r * r, 1, n);
            let idx: Vec<usize> = (0..r).collect();
            for i in 0..r {
                for j in 0..r {
                    let rows: Vec<usize> = idx.iter().copied().filter(|&x| x != i).collect();
                    let cols: Vec<usize> = idx.iter().copied().filter(|&x| x != j).collect();
                    let minor = a.submatrix(&rows, &cols).determinant()?;
                    d0.set(i * r + j, 0, if (i + j) % 2 == 0 { minor } else { minor.neg() });
                }
            }
            let basis = sl_basis(r);
            let mut d1 = SeriesMatrix::zero(base, basis.len(), r * r, n);
            for (k, xi) in basis.iter().enumerate() {
                // (xi A)_{pq} = sum over entries (p, s, c) of c * A_{sq}
                for &(p, s, c) in xi {
                    for q in 0..r {
                        let cell = d1.get(k, p * r + q).add(&a.get(s, q).scale(&S::from_i64(base, c)));
                        d1.set(k, p * r + q, cell);
                    }
                }
            }
            Ok(ComplexPresentation { conormal: None, d0, d1, fiber_dim: r * r - 1, base_dim: 1 })
        }
        Family::Hypersurface { f, cover } => {
            let psi = arc.image()?;
            let fv = f.eval(base, &psi, n)?;
            if !fv.is_zero() {
                return Err(HeightsError::NotOnTarget(fv.valuation().to_string()));
            }
            let d = cover[0].nvars();
            let mut conormal = SeriesMatrix::zero(base, d + 1, 1, n);
            for i in 0..=d {
                conormal.set(i, 0, f.partial(i).eval(base, &psi, n)?);
            }
            let mut d0 = SeriesMatrix::zero(base, d, d + 1, n);
            for (i, comp) in cover.iter().enumerate() {
                for j in 0..d {
                    d0.set(j, i, comp.partial(j).eval(base, &arc.coords, n)?);
                }
            }
            let d1 = SeriesMatrix::empty(base, 0, d, n);
            Ok(ComplexPresentation { conormal: Some(conormal), d0, d1, fiber_dim: 0, base_dim: d })
        }
    }
}

/// Heights as raw Fitting orders, possibly `AtLeast(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartialHeights {
    pub ht_minus1: Valuation,
    pub ht0: Valuation,
    pub ht1: Valuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HeightProfile {
    pub ht_minus1: u32,
    pub ht0: u32,
    pub ht1: u32,
}

impl HeightProfile {
    pub fn alternating_sum(&self) -> i64 {
        -(self.ht_minus1 as i64) + self.ht0 as i64 - self.ht1 as i64
    }
}

impl fmt::Display for HeightProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.ht_minus1, self.ht0, self.ht1)
    }
}

pub fn height_profile_partial<S: Scalar>(pres: &ComplexPresentation<S>) -> PartialHeights {
    PartialHeights {
        ht_minus1: pres.conormal.as_ref().map_or(Valuation::Exact(0), |c| fitting_order(c, pres.base_dim)),
        ht0: fitting_order(&pres.d0, pres.fiber_dim),
        ht1: fitting_order(&pres.d1, 0),
    }
}

pub fn height_profile<S: Scalar>(pres: &ComplexPresentation<S>) -> Result<HeightProfile> {
    let p = height_profile_partial(pres);
    let get = |v: Valuation, name: &str| {
        v.exact().ok_or_else(|| HeightsError::InsufficientPrecision(format!("{name} is {v}")))
    };
    Ok(HeightProfile { ht_minus1: get(p.ht_minus1, "ht_minus1")?, ht0: get(p.ht0, "ht0")?, ht1: get(p.ht1, "ht1")? })
}

/// Minimum valuation of the generators along the arc. The empty list is the zero ideal.
pub fn ord_along_arc<S: Scalar>(ideal: &[Polynomial], arc: &ArcOnCover<S>) -> Result<Valuation> {
    let mut best = Valuation::AtLeast(arc.precision as u32);
    for g in ideal {
        best = best.min(g.eval(&arc.base, &arc.coords, arc.precision)?.valuation());
    }
    Ok(best)
}

/// Rejects arcs contained in the exceptional locus to working precision.
pub fn check_generic<S: Scalar>(arc: &ArcOnCover<S>, pres: &ComplexPresentation<S>) -> Result<()> {
    match &arc.family {
        Family::Slr { .. } => {
            let det = arc.matrix().unwrap().determinant()?;
            if det.is_zero() {
                return Err(HeightsError::NotGeneric("det A(t) vanishes to working precision".into()));
            }
        }
        Family::Hypersurface { .. } => {
            if pres.conormal.as_ref().is_some_and(SeriesMatrix::is_zero) {
                return Err(HeightsError::NotGeneric("the image arc lies in the singular locus".into()));
            }
            if !fitting_order(&pres.d0, 0).is_exact() {
                return Err(HeightsError::NotGeneric("the arc lies in the ramification locus of the cover".into()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderTerm {
    pub label: String,
    pub coefficient: String,
    pub order: u32,
}

/// Both sides of `ord_{mK} = m ht0 - m ht1 - m ht_minus1` and the Euler-characteristic form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeyIdentityReport {
    pub family: String,
    pub gorenstein_index: u32,
    pub k: String,
    pub profile: HeightProfile,
    pub orders: Vec<OrderTerm>,
    /// `m * sum c_D ord_D`.
    pub lhs: String,
    /// `m ht0 - m ht1 - m ht_minus1`.
    pub rhs: i64,
    pub euler_valuation: i64,
    pub passes: bool,
    pub euler_matches: bool,
}

pub fn check_key_identity<S: Scalar>(arc: &ArcOnCover<S>, m: u32, k: &DivisorSum) -> Result<KeyIdentityReport> {
    check_key_identity_with(arc, m, k, &arc.family.default_divisors())
}

pub fn check_key_identity_with<S: Scalar>(
    arc: &ArcOnCover<S>,
    m: u32,
    k: &DivisorSum,
    divisors: &BTreeMap<String, Vec<Polynomial>>,
) -> Result<KeyIdentityReport> {
    let pres = build_presentation(arc)?;
    check_generic(arc, &pres)?;
    let profile = height_profile(&pres)?;
    let mut orders = Vec::new();
    let mut sum = BigRational::zero();
    for (label, c) in k.terms() {
        let ideal = divisors.get(label).ok_or_else(|| HeightsError::UnknownLabel(label.clone()))?;
        let v = ord_along_arc(ideal, arc)?;
        let v = v.exact().ok_or_else(|| HeightsError::InsufficientPrecision(format!("ord of {label} is {v}")))?;
        sum += c * BigInt::from(v);
        orders.push(OrderTerm { label: label.clone(), coefficient: c.to_string(), order: v });
    }
    let mm = BigInt::from(m);
    let lhs = sum * BigRational::from_integer(mm);
    let rhs = m as i64 * profile.alternating_sum();
    let euler = pres.euler_valuation()?;
    Ok(KeyIdentityReport {
        family: arc.family.name(),
        gorenstein_index: m,
        k: k.to_string(),
        profile,
        orders,
        passes: lhs == BigRational::from_integer(rhs.into()),
        lhs: lhs.to_string(),
        rhs,
        euler_valuation: euler,
        euler_matches: euler == profile.alternating_sum(),
    })
}

/// `ord_target / ord_component`.
pub fn infer_multiplicity(ord_target: i64, ord_component: i64) -> Result<BigRational> {
    if ord_component <= 0 {
        return Err(HeightsError::ZeroComponentOrder(ord_component));
    }
    Ok(BigRational::new(ord_target.into(), ord_component.into()))
}

fn random_poly(field: PrimeField, precision: usize, degree: usize, rng: &mut ChaCha8Rng) -> TruncatedSeries<Fp> {
    let p = field.modulus() as i64;
    let coeffs: Vec<i64> = (0..=degree.min(precision - 1)).map(|_| rng.gen_range(0..p)).collect();
    TruncatedSeries::from_i64s(&field, &coeffs, precision)
}

fn random_unit(field: PrimeField, precision: usize, rng: &mut ChaCha8Rng) -> TruncatedSeries<Fp> {
    let p = field.modulus() as i64;
    let mut u = random_poly(field, precision, 3, rng);
    let c0 = Fp::new(field, rng.gen_range(1..p));
    let mut coeffs = u.coeffs().to_vec();
    coeffs[0] = c0;
    u = TruncatedSeries::from_coeffs(&field, coeffs, precision);
    u
}

/// Product of random unit lower and upper triangular polynomial matrices.
fn random_unimodular(r: usize, field: PrimeField, precision: usize, rng: &mut ChaCha8Rng) -> SeriesMatrix<Fp> {
    let mut lower = SeriesMatrix::identity(&field, r, precision);
    let mut upper = SeriesMatrix::identity(&field, r, precision);
    for i in 0..r {
        for j in 0..i {
            lower.set(i, j, random_poly(field, precision, 2, rng));
            upper.set(j, i, random_poly(field, precision, 2, rng));
        }
    }
    lower.mul(&upper).expect("square")
}

/// A random `slr(r)` arc over `F_p` with `val(det) = v`.
///
/// Even draws are `E1 diag(t^{e_i} u_i) E2` with `E1, E2` unimodular and
/// `sum e_i = v`; odd draws are rejection-sampled from matrices with entries of
/// random valuation.
pub fn random_slr_arc(r: usize, v: u32, field: PrimeField, precision: usize, rng: &mut ChaCha8Rng) -> SeriesMatrix<Fp> {
    if rng.gen_bool(0.5) {
        let mut e = vec![0usize; r];
        for _ in 0..v {
            e[rng.gen_range(0..r)] += 1;
        }
        let mut diag = SeriesMatrix::zero(&field, r, r, precision);
        for i in 0..r {
            diag.set(i, i, random_unit(field, precision, rng).shift_up(e[i]));
        }
        let e1 = random_unimodular(r, field, precision, rng);
        let e2 = random_unimodular(r, field, precision, rng);
        return e1.mul(&diag).and_then(|m| m.mul(&e2)).expect("square");
    }
    loop {
        let mut a = SeriesMatrix::zero(&field, r, r, precision);
        for i in 0..r {
            for j in 0..r {
                let shift = rng.gen_range(0..=2usize);
                a.set(i, j, random_poly(field, precision, 3, rng).shift_up(shift));
            }
        }
        if a.determinant().expect("square").valuation() == Valuation::Exact(v) {
            return a;
        }
    }
}

/// `count` seeded arcs with `val(det)` drawn uniformly from `1..=max_val`.
pub fn sample_slr_arcs(r: usize, count: usize, seed: u64, field: PrimeField, precision: usize, max_val: u32) -> Vec<SeriesMatrix<Fp>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let v = rng.gen_range(1..=max_val);
            random_slr_arc(r, v, field, precision, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchEntry {
    pub index: usize,
    pub det_valuation: u32,
    pub profile: HeightProfile,
    pub euler_valuation: i64,
    pub identity_holds: bool,
    pub euler_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub r: usize,
    pub seed: u64,
    pub prime: u32,
    pub precision: usize,
    pub entries: Vec<BatchEntry>,
    pub all_pass: bool,
}

/// Checks `ht0 - ht1 = (1 - r) val(det A)` and the Euler form on seeded random arcs.
pub fn batch_check(r: usize, count: usize, seed: u64, field: PrimeField, precision: usize) -> Result<BatchReport> {
    let max_val = 4;
    let arcs = sample_slr_arcs(r, count, seed, field, precision, max_val);
    let k = DivisorSum::single("D", BigRational::from_integer(BigInt::from(1 - r as i64)));
    let entries: Vec<BatchEntry> = arcs
        .par_iter()
        .enumerate()
        .map(|(index, a)| {
            let arc = ArcOnCover::slr(a)?;
            let rep = check_key_identity(&arc, 1, &k)?;
            Ok(BatchEntry {
                index,
                det_valuation: rep.orders[0].order,
                profile: rep.profile,
                euler_valuation: rep.euler_valuation,
                identity_holds: rep.passes,
                euler_matches: rep.euler_matches,
            })
        })
        .collect::<Result<_>>()?;
    let all_pass = entries.iter().all(|e| e.identity_holds && e.euler_matches);
    Ok(BatchReport { r, seed, prime: field.modulus(), precision, entries, all_pass })
}
