//! Coefficient fields for truncated power series: small prime fields and the rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Largest prime accepted as a base field.
pub const MAX_PRIME: u32 = 97;

/// A field whose elements carry enough information to recover the field.
pub trait Scalar: Clone + PartialEq + Eq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    type Base: Clone + PartialEq + Eq + fmt::Debug + Send + Sync + 'static;

    fn zero(base: &Self::Base) -> Self;
    fn from_i64(base: &Self::Base, v: i64) -> Self;
    /// `n/d` in the field, `None` when `d` vanishes there.
    fn from_ratio(base: &Self::Base, n: &BigInt, d: &BigInt) -> Option<Self>;
    fn base(&self) -> Self::Base;
    fn base_name(base: &Self::Base) -> String;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;

    fn one(base: &Self::Base) -> Self {
        Self::from_i64(base, 1)
    }
}

/// The prime field `F_p`, `p <= 97`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField(u32);

impl PrimeField {
    pub fn new(p: u32) -> Option<Self> {
        (p >= 2 && p <= MAX_PRIME && is_prime(p)).then_some(Self(p))
    }

    pub fn modulus(self) -> u32 {
        self.0
    }
}

pub fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    v: u32,
    p: u32,
}

impl Fp {
    pub fn new(field: PrimeField, v: i64) -> Self {
        let p = field.0 as i64;
        Self { v: v.rem_euclid(p) as u32, p: field.0 }
    }

    pub fn value(self) -> u32 {
        self.v
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl Scalar for Fp {
    type Base = PrimeField;

    fn zero(base: &PrimeField) -> Self {
        Self { v: 0, p: base.0 }
    }

    fn from_i64(base: &PrimeField, v: i64) -> Self {
        Fp::new(*base, v)
    }

    fn from_ratio(base: &PrimeField, n: &BigInt, d: &BigInt) -> Option<Self> {
        let p = BigInt::from(base.0);
        let nn = n.mod_floor(&p).to_i64()?;
        let dd = d.mod_floor(&p).to_i64()?;
        Fp::new(*base, dd).inv().map(|di| Fp::new(*base, nn).mul(&di))
    }

    fn base(&self) -> PrimeField {
        PrimeField(self.p)
    }

    fn base_name(base: &PrimeField) -> String {
        format!("F_{}", base.0)
    }

    fn add(&self, o: &Self) -> Self {
        Self { v: (self.v + o.v) % self.p, p: self.p }
    }

    fn sub(&self, o: &Self) -> Self {
        Self { v: (self.v + self.p - o.v) % self.p, p: self.p }
    }

    fn mul(&self, o: &Self) -> Self {
        Self { v: (self.v * o.v) % self.p, p: self.p }
    }

    fn neg(&self) -> Self {
        Self { v: (self.p - self.v) % self.p, p: self.p }
    }

    fn inv(&self) -> Option<Self> {
        if self.v == 0 {
            return None;
        }
        // Fermat: v^(p-2)
        let (mut acc, mut b, mut e) = (1u32, self.v, self.p - 2);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % self.p;
            }
            b = b * b % self.p;
            e >>= 1;
        }
        Some(Self { v: acc, p: self.p })
    }

    fn is_zero(&self) -> bool {
        self.v == 0
    }
}

/// Marker for the field of rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rationals;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Q(pub BigRational);

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Scalar for Q {
    type Base = Rationals;

    fn zero(_: &Rationals) -> Self {
        Q(BigRational::zero())
    }

    fn from_i64(_: &Rationals, v: i64) -> Self {
        Q(BigRational::from_integer(v.into()))
    }

    fn from_ratio(_: &Rationals, n: &BigInt, d: &BigInt) -> Option<Self> {
        (!d.is_zero()).then(|| Q(BigRational::new(n.clone(), d.clone())))
    }

    fn base(&self) -> Rationals {
        Rationals
    }

    fn base_name(_: &Rationals) -> String {
        "Q".into()
    }

    fn add(&self, o: &Self) -> Self {
        Q(&self.0 + &o.0)
    }

    fn sub(&self, o: &Self) -> Self {
        Q(&self.0 - &o.0)
    }

    fn mul(&self, o: &Self) -> Self {
        Q(&self.0 * &o.0)
    }

    fn neg(&self) -> Self {
        Q(-&self.0)
    }

    fn inv(&self) -> Option<Self> {
        (!self.0.is_zero()).then(|| Q(self.0.recip()))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl Q {
    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }
}
