//! Laurent polynomials in the Lefschetz class `L` with exponents in `(1/m)Z`.
//!
//! Every measure computed by this crate is a [`MotivicElement`]: a finite
//! integer combination of powers `L^{k/m}`. The completion of the
//! Grothendieck ring is never formed; cylinder measures in scope all have
//! closed Laurent form, and limits are replaced by an explicit stabilization
//! check in [`crate::jets::measure_from_level`].
//!
//! The point-counting realization `L -> q` ([`MotivicElement::evaluate_at`])
//! is the numerical oracle used against finite-field enumeration.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exponent of `L`; its denominator divides the element's index.
pub type Exponent = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotivicError {
    #[error("exponent {exponent} is not a multiple of 1/{index}")]
    ExponentOutsideIndex { exponent: Exponent, index: u32 },
    #[error("index must be a positive integer")]
    ZeroIndex,
    #[error("division by zero")]
    DivisionByZero,
    #[error("no Laurent polynomial quotient exists")]
    NotDivisible,
    #[error("element is not a unit, negative power undefined")]
    NotInvertible,
    #[error("fractional power requires a monomial L^e, got a general element")]
    FractionalPowerOfNonMonomial,
    #[error("point-count realization undefined for fractional exponent {0}")]
    FractionalExponent(Exponent),
    #[error("realization needs q >= 2, got {0}")]
    InvalidBase(u64),
    #[error("quotient is not a pure power of L")]
    NoShift,
    #[error("unknown builtin class `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameters for builtin `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
}

pub type Result<T> = std::result::Result<T, MotivicError>;

/// Element of `Z[L^{1/m}, L^{-1/m}]` in canonical form.
///
/// Equality compares term maps only; the declared index is a bound on
/// exponent denominators and does not participate.
#[derive(Clone, Debug)]
pub struct MotivicElement {
    index: u32,
    terms: BTreeMap<Exponent, BigInt>,
}

impl PartialEq for MotivicElement {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for MotivicElement {}

fn lcm_index(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

impl MotivicElement {
    pub fn zero() -> Self {
        Self { index: 1, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(1)
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(c, Exponent::zero())
    }

    /// The Lefschetz class `L`.
    pub fn lefschetz() -> Self {
        Self::monomial(1, Exponent::one())
    }

    /// `L - 1`, the class of the torus.
    pub fn torus() -> Self {
        Self::lefschetz() - Self::one()
    }

    /// `c * L^e`. The index is taken as the denominator of `e`.
    pub fn monomial(c: impl Into<BigInt>, e: Exponent) -> Self {
        let c = c.into();
        let index = *e.denom() as u32;
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        Self { index, terms }
    }

    /// `L^e`.
    pub fn l_pow(e: impl Into<Exponent>) -> Self {
        Self::monomial(1, e.into())
    }

    /// Builds an element with declared index `m` from `(exponent, coefficient)` pairs.
    pub fn from_terms<I>(index: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, BigInt)>,
    {
        if index == 0 {
            return Err(MotivicError::ZeroIndex);
        }
        let mut out = Self { index, terms: BTreeMap::new() };
        for (e, c) in terms {
            if index as i64 % e.denom() != 0 {
                return Err(MotivicError::ExponentOutsideIndex { exponent: e, index });
            }
            out.add_term(e, c);
        }
        Ok(out)
    }

    /// Integer-coefficient polynomial in `L`, `coeffs[i]` multiplying `L^i`.
    pub fn from_coeffs<C: Into<BigInt> + Clone>(coeffs: &[C]) -> Self {
        let mut out = Self::zero();
        for (i, c) in coeffs.iter().enumerate() {
            out.add_term(Exponent::from_integer(i as i64), c.clone().into());
        }
        out
    }

    /// Raises the declared index to a multiple of `m`.
    pub fn with_index(mut self, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(MotivicError::ZeroIndex);
        }
        self.index = lcm_index(self.index, m);
        Ok(self)
    }

    fn add_term(&mut self, e: Exponent, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let ix = *e.denom() as u32;
        self.index = lcm_index(self.index, ix);
        let slot = self.terms.entry(e).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: Exponent) -> BigInt {
        self.terms.get(&e).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Returns `(c, e)` when the element is the single term `c * L^e`.
    pub fn as_monomial(&self) -> Option<(&BigInt, Exponent)> {
        if self.terms.len() != 1 {
            return None;
        }
        self.terms.iter().next().map(|(e, c)| (c, *e))
    }

    pub fn max_exponent(&self) -> Option<Exponent> {
        self.terms.keys().next_back().copied()
    }

    pub fn min_exponent(&self) -> Option<Exponent> {
        self.terms.keys().next().copied()
    }

    /// Multiplies by `L^s`.
    pub fn shift(&self, s: Exponent) -> Self {
        let index = lcm_index(self.index, *s.denom() as u32);
        let terms = self.terms.iter().map(|(e, c)| (*e + s, c.clone())).collect();
        Self { index, terms }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one().with_index(self.index).expect("index is positive");
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Integer power; negative powers exist only for the units `±L^e`.
    pub fn pow_int(&self, k: i64) -> Result<Self> {
        if k >= 0 {
            return Ok(self.pow(k as u32));
        }
        match self.as_monomial() {
            Some((c, e)) if c.abs().is_one() => {
                let sign = if c.is_negative() && k % 2 != 0 { -1 } else { 1 };
                Ok(Self::monomial(sign, e * Exponent::from_integer(k)).with_index(self.index)?)
            }
            _ => Err(MotivicError::NotInvertible),
        }
    }

    /// Rational power of a monomial `L^e`, giving `L^{e*p}`.
    pub fn pow_rational(&self, p: Exponent) -> Result<Self> {
        if p.is_integer() {
            return self.pow_int(p.to_integer());
        }
        match self.as_monomial() {
            Some((c, e)) if c.is_one() => Ok(Self::l_pow(e * p).with_index(self.index)?),
            _ => Err(MotivicError::FractionalPowerOfNonMonomial),
        }
    }

    /// Exponents scaled to integers over the common denominator `m`,
    /// shifted so the lowest one is zero. Returns `(shift, dense coefficients)`.
    fn to_dense(&self, m: u32) -> (i64, Vec<BigInt>) {
        let scale = |e: &Exponent| -> i64 { (*e * Exponent::from_integer(m as i64)).to_integer() };
        let lo = self.terms.keys().next().map(scale).unwrap_or(0);
        let hi = self.terms.keys().next_back().map(scale).unwrap_or(0);
        let mut dense = vec![BigInt::zero(); (hi - lo + 1) as usize];
        for (e, c) in &self.terms {
            dense[(scale(e) - lo) as usize] = c.clone();
        }
        (lo, dense)
    }

    fn from_dense(m: u32, shift: i64, dense: &[BigInt]) -> Self {
        let mut out = Self { index: m, terms: BTreeMap::new() };
        for (i, c) in dense.iter().enumerate() {
            out.add_term(Exponent::new(shift + i as i64, m as i64), c.clone());
        }
        out.index = m;
        out
    }

    /// Exact quotient in the Laurent ring: returns `q` with `q * b == self`.
    pub fn exact_div(&self, b: &MotivicElement) -> Result<Self> {
        if b.is_zero() {
            return Err(MotivicError::DivisionByZero);
        }
        let m = lcm_index(self.index, b.index);
        if self.is_zero() {
            return Ok(Self::zero().with_index(m)?);
        }
        let (sa, mut num) = self.to_dense(m);
        let (sb, den) = b.to_dense(m);
        if num.len() < den.len() {
            return Err(MotivicError::NotDivisible);
        }
        // den[0] != 0 and the lowest exponents are factored out, so the
        // Laurent quotient exists iff den divides num in Z[x].
        let lead = den.last().expect("nonzero divisor");
        let qlen = num.len() - den.len() + 1;
        let mut quot = vec![BigInt::zero(); qlen];
        for k in (0..qlen).rev() {
            let top = &num[k + den.len() - 1];
            if top.is_zero() {
                continue;
            }
            let (qk, rem) = top.div_rem(lead);
            if !rem.is_zero() {
                return Err(MotivicError::NotDivisible);
            }
            for (j, d) in den.iter().enumerate() {
                num[k + j] -= &qk * d;
            }
            quot[k] = qk;
        }
        if num.iter().any(|c| !c.is_zero()) {
            return Err(MotivicError::NotDivisible);
        }
        Ok(Self::from_dense(m, sa - sb, &quot))
    }

    /// Point-count realization `L -> q`. Defined only for integral exponents.
    pub fn evaluate_at(&self, q: u64) -> Result<BigRational> {
        if q < 2 {
            return Err(MotivicError::InvalidBase(q));
        }
        let qq = BigRational::from_integer(BigInt::from(q));
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            if !e.is_integer() {
                return Err(MotivicError::FractionalExponent(*e));
            }
            let k = e.to_integer();
            let p = if k >= 0 {
                num_traits::pow(qq.clone(), k as usize)
            } else {
                num_traits::pow(qq.clone(), (-k) as usize).recip()
            };
            acc += p * BigRational::from_integer(c.clone());
        }
        Ok(acc)
    }

    /// The unique `s` with `self = L^s * rhs`.
    pub fn solve_l_shift(&self, rhs: &MotivicElement) -> Result<Exponent> {
        if self.is_zero() || rhs.is_zero() {
            return Err(MotivicError::NoShift);
        }
        let q = self.exact_div(rhs).map_err(|_| MotivicError::NoShift)?;
        match q.as_monomial() {
            Some((c, e)) if c.is_one() => Ok(e),
            _ => Err(MotivicError::NoShift),
        }
    }

    fn combine(&self, other: &Self, sign: i32) -> Self {
        let mut out = self.clone();
        out.index = lcm_index(self.index, other.index);
        for (e, c) in &other.terms {
            let c = if sign < 0 { -c.clone() } else { c.clone() };
            out.add_term(*e, c);
        }
        out
    }

    fn product(&self, other: &Self) -> Self {
        let mut out = Self { index: lcm_index(self.index, other.index), terms: BTreeMap::new() };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(*ea + *eb, ca * cb);
            }
        }
        out.index = lcm_index(self.index, other.index);
        out
    }
}

impl Default for MotivicElement {
    fn default() -> Self {
        Self::zero()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl<'a> $tr<&'a MotivicElement> for &'a MotivicElement {
            type Output = MotivicElement;
            fn $method(self, rhs: &'a MotivicElement) -> MotivicElement {
                $body(self, rhs)
            }
        }
        impl $tr<MotivicElement> for MotivicElement {
            type Output = MotivicElement;
            fn $method(self, rhs: MotivicElement) -> MotivicElement {
                $body(&self, &rhs)
            }
        }
        impl<'a> $tr<&'a MotivicElement> for MotivicElement {
            type Output = MotivicElement;
            fn $method(self, rhs: &'a MotivicElement) -> MotivicElement {
                $body(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &MotivicElement, b: &MotivicElement| a.combine(b, 1));
forward_binop!(Sub, sub, |a: &MotivicElement, b: &MotivicElement| a.combine(b, -1));
forward_binop!(Mul, mul, |a: &MotivicElement, b: &MotivicElement| a.product(b));

impl Neg for MotivicElement {
    type Output = MotivicElement;
    fn neg(self) -> MotivicElement {
        MotivicElement::zero().with_index(self.index).expect("positive") - self
    }
}

impl Neg for &MotivicElement {
    type Output = MotivicElement;
    fn neg(self) -> MotivicElement {
        -(self.clone())
    }
}

fn fmt_exponent(e: &Exponent) -> String {
    if e.is_integer() {
        e.to_integer().to_string()
    } else {
        format!("({}/{})", e.numer(), e.denom())
    }
}

/// Canonical text form, highest exponent first, e.g. `L^3 - L` or `-L^(1/2) + 2`.
/// The output is accepted by [`crate::parse::parse_motivic_expression`].
impl fmt::Display for MotivicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            if e.is_zero() {
                write!(f, "{mag}")?;
                continue;
            }
            if !mag.is_one() {
                write!(f, "{mag}*")?;
            }
            if e.is_one() {
                write!(f, "L")?;
            } else {
                write!(f, "L^{}", fmt_exponent(e))?;
            }
        }
        Ok(())
    }
}

/// Builtin classes of smooth groups and affine spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuiltinClass {
    /// `A^n`, also the additive group `G_a^n`.
    AffineSpace(u32),
    /// `G_m`.
    Torus,
    GeneralLinear(u32),
    SpecialLinear(u32),
    /// Level-`n` jet group of a smooth builtin group.
    JetGroup(Box<BuiltinClass>, u32),
}

fn parse_param(name: &str, raw: &str) -> Result<u32> {
    raw.parse::<u32>().map_err(|_| MotivicError::InvalidParameter {
        name: name.to_string(),
        reason: format!("expected a non-negative integer, got `{raw}`"),
    })
}

fn arity(name: &str, args: &[&str], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(MotivicError::InvalidParameter {
            name: name.to_string(),
            reason: format!("expected {n} argument(s), got {}", args.len()),
        });
    }
    Ok(())
}

impl BuiltinClass {
    /// Resolves a builtin from its symbol and textual arguments.
    ///
    /// Accepted symbols: `A`/`affine_space n`, `Gm`/`torus`, `GL`/`general_linear r`,
    /// `SL`/`special_linear r`, and `J`/`jet_group <group...> n` where the last
    /// argument is the jet level.
    pub fn parse(name: &str, args: &[&str]) -> Result<Self> {
        let class = match name {
            "A" | "affine_space" => {
                arity(name, args, 1)?;
                BuiltinClass::AffineSpace(parse_param(name, args[0])?)
            }
            "Gm" | "torus" => {
                arity(name, args, 0)?;
                BuiltinClass::Torus
            }
            "GL" | "general_linear" => {
                arity(name, args, 1)?;
                BuiltinClass::GeneralLinear(parse_param(name, args[0])?)
            }
            "SL" | "special_linear" => {
                arity(name, args, 1)?;
                BuiltinClass::SpecialLinear(parse_param(name, args[0])?)
            }
            "J" | "jet_group" => {
                let Some((level, group)) = args.split_last() else {
                    return Err(MotivicError::InvalidParameter {
                        name: name.to_string(),
                        reason: "expected a group and a level".into(),
                    });
                };
                let Some((gname, gargs)) = group.split_first() else {
                    return Err(MotivicError::InvalidParameter {
                        name: name.to_string(),
                        reason: "missing group".into(),
                    });
                };
                let inner = BuiltinClass::parse(gname, gargs)?;
                BuiltinClass::JetGroup(Box::new(inner), parse_param(name, level)?)
            }
            other => return Err(MotivicError::UnknownBuiltin(other.to_string())),
        };
        class.validate()?;
        Ok(class)
    }

    fn validate(&self) -> Result<()> {
        match self {
            BuiltinClass::GeneralLinear(0) | BuiltinClass::SpecialLinear(0) => {
                Err(MotivicError::InvalidParameter {
                    name: self.symbol().into(),
                    reason: "rank must be at least 1".into(),
                })
            }
            BuiltinClass::JetGroup(g, _) => match **g {
                BuiltinClass::JetGroup(..) => Err(MotivicError::InvalidParameter {
                    name: "jet_group".into(),
                    reason: "jet group of a jet group is not a builtin".into(),
                }),
                _ => g.validate(),
            },
            _ => Ok(()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            BuiltinClass::AffineSpace(_) => "A",
            BuiltinClass::Torus => "Gm",
            BuiltinClass::GeneralLinear(_) => "GL",
            BuiltinClass::SpecialLinear(_) => "SL",
            BuiltinClass::JetGroup(..) => "J",
        }
    }

    pub fn dimension(&self) -> u64 {
        match self {
            BuiltinClass::AffineSpace(n) => *n as u64,
            BuiltinClass::Torus => 1,
            BuiltinClass::GeneralLinear(r) => (*r as u64).pow(2),
            BuiltinClass::SpecialLinear(r) => (*r as u64).pow(2) - 1,
            BuiltinClass::JetGroup(g, n) => (*n as u64 + 1) * g.dimension(),
        }
    }

    /// Class in the Grothendieck ring.
    pub fn class(&self) -> Result<MotivicElement> {
        self.validate()?;
        let l = MotivicElement::lefschetz();
        Ok(match self {
            BuiltinClass::AffineSpace(n) => MotivicElement::l_pow(*n as i64),
            BuiltinClass::Torus => MotivicElement::torus(),
            BuiltinClass::GeneralLinear(r) => general_linear_class(*r),
            BuiltinClass::SpecialLinear(r) => general_linear_class(*r)
                .exact_div(&(l - MotivicElement::one()))
                .expect("L - 1 divides e(GL_r)"),
            BuiltinClass::JetGroup(g, n) => {
                g.class()? * MotivicElement::l_pow((*n as u64 * g.dimension()) as i64)
            }
        })
    }
}

/// `prod_{i<r} (L^r - L^i)`.
fn general_linear_class(r: u32) -> MotivicElement {
    let lr = MotivicElement::l_pow(r as i64);
    (0..r).fold(MotivicElement::one(), |acc, i| acc * (&lr - &MotivicElement::l_pow(i as i64)))
}

/// Class of a builtin by symbol and integer parameters, e.g. `class_of("SL", &[2])`.
pub fn class_of(name: &str, params: &[i64]) -> Result<MotivicElement> {
    let owned: Vec<String> = params.iter().map(|p| p.to_string()).collect();
    let args: Vec<&str> = owned.iter().map(String::as_str).collect();
    BuiltinClass::parse(name, &args)?.class()
}

/// Convenience for tests and reports: exponent as `i64` when integral.
pub fn integral_exponent(e: Exponent) -> Option<i64> {
    e.is_integer().then(|| e.to_integer())
}

/// Evaluates at `q` and returns an `i64` when the value is integral and fits.
pub fn evaluate_integral(a: &MotivicElement, q: u64) -> Result<Option<i64>> {
    let v = a.evaluate_at(q)?;
    Ok(if v.is_integer() { v.to_integer().to_i64() } else { None })
}
