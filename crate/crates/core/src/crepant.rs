//! Formal divisor calculus and crepant stack descriptors for SNC resolution data.
//!
//! Divisors are ledgers: finite `Q`-linear combinations of labels. Pullbacks
//! are driven by explicit multiplicity tables rather than geometry.
//!
//! Given a resolution `Z -> Y` with exceptional components `D_i` and
//! discrepancies `m_i > -1`, write `m_i + 1 = r_i / d_i`. The descriptor
//! stacks a framed-bundle factor of rank `rho_i` with a `d_i`-th root on each
//! `D_i`. Its relative canonical divisor over `Z` is `sum (d_i - rho_i) D_i'`
//! on the reduced preimages `D_i'`, and `pi^* D_i = d_i D_i'` because the
//! section `(det beta_i)^{d_i}` vanishes to order `d_i` there. Crepancy over
//! `Y` is the vanishing of `(d_i - rho_i) + m_i d_i` for every `i`, which
//! holds exactly when `rho_i = r_i`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrepantError {
    #[error("discrepancy {0} of `{1}` is not > -1 (not log-terminal)")]
    NotLogTerminal(String, String),
    #[error("unknown divisor label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate divisor label `{0}`")]
    DuplicateLabel(String),
    #[error("gorenstein index must be >= 1")]
    ZeroIndex,
    #[error("{index} * {discrepancy} is not an integer for `{label}`")]
    IndexMismatch { label: String, discrepancy: String, index: u32 },
    #[error("invalid rational `{0}`")]
    BadRational(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("crepancy certificate failed: {0}")]
    CertificateFailed(String),
}

pub type Result<T> = std::result::Result<T, CrepantError>;

/// Parses `p/q`, `p` or `-p/q`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || CrepantError::BadRational(text.to_string());
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Formal `Q`-linear combination of labeled prime divisors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DivisorSum {
    terms: BTreeMap<String, BigRational>,
}

impl DivisorSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(label: impl Into<String>, coefficient: BigRational) -> Self {
        let mut s = Self::zero();
        s.add_term(label, coefficient);
        s
    }

    pub fn from_terms<I, L>(terms: I) -> Self
    where
        I: IntoIterator<Item = (L, BigRational)>,
        L: Into<String>,
    {
        let mut s = Self::zero();
        for (l, c) in terms {
            s.add_term(l, c);
        }
        s
    }

    pub fn add_term(&mut self, label: impl Into<String>, coefficient: BigRational) {
        if coefficient.is_zero() {
            return;
        }
        let label = label.into();
        let slot = self.terms.entry(label.clone()).or_insert_with(BigRational::zero);
        *slot += coefficient;
        if slot.is_zero() {
            self.terms.remove(&label);
        }
    }

    pub fn coefficient(&self, label: &str) -> BigRational {
        self.terms.get(label).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&String, &BigRational)> {
        self.terms.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &String> {
        self.terms.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (l, c) in &o.terms {
            out.add_term(l.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_terms(self.terms.iter().map(|(l, x)| (l.clone(), x * c)))
    }
}

impl fmt::Display for DivisorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (l, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mag = c.abs();
            if mag.is_one() {
                write!(f, "{l}")?;
            } else if mag.is_integer() {
                write!(f, "{mag}*{l}")?;
            } else {
                write!(f, "({mag})*{l}")?;
            }
        }
        Ok(())
    }
}

/// Pullback multiplicities: each source label maps to a combination of target labels.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PullbackTable {
    map: BTreeMap<String, DivisorSum>,
}

impl PullbackTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn identity<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        let mut t = Self::new();
        for l in labels {
            t.insert(l, DivisorSum::single(l, BigRational::one()));
        }
        t
    }

    pub fn insert(&mut self, label: impl Into<String>, image: DivisorSum) -> &mut Self {
        self.map.insert(label.into(), image);
        self
    }

    /// `label -> multiplicity * target`.
    pub fn with(mut self, label: &str, multiplicity: BigRational, target: &str) -> Self {
        self.insert(label, DivisorSum::single(target, multiplicity));
        self
    }

    pub fn pullback(&self, divisor: &DivisorSum) -> Result<DivisorSum> {
        let mut out = DivisorSum::zero();
        for (l, c) in divisor.terms() {
            let image = self.map.get(l).ok_or_else(|| CrepantError::UnknownLabel(l.clone()))?;
            out = out.add(&image.scale(c));
        }
        Ok(out)
    }

    /// Table of `(g o f)^* = f^* o g^*`, with `self = g^*` applied first.
    pub fn then(&self, next: &PullbackTable) -> Result<PullbackTable> {
        let mut out = PullbackTable::new();
        for (l, img) in &self.map {
            out.insert(l.clone(), next.pullback(img)?);
        }
        Ok(out)
    }
}

/// One step of relative-canonical-divisor bookkeeping.
#[derive(Debug, Clone)]
pub enum KOperation {
    /// `K_{X'/Y'} = Psi^* K_{X/Y}` for a base change.
    Pullback { table: PullbackTable, k: DivisorSum },
    /// `K_{prod X_i / prod X_i'} = sum p_i^* K_{X_i/X_i'}`.
    Product { factors: Vec<(PullbackTable, DivisorSum)> },
    /// `K_{X/Z} = K_{X/Y} + pi^* K_{Y/Z}`.
    Composition { k_upper: DivisorSum, table: PullbackTable, k_lower: DivisorSum },
}

pub fn k_calculus(op: &KOperation) -> Result<DivisorSum> {
    match op {
        KOperation::Pullback { table, k } => table.pullback(k),
        KOperation::Product { factors } => factors
            .iter()
            .try_fold(DivisorSum::zero(), |acc, (t, k)| Ok(acc.add(&t.pullback(k)?))),
        KOperation::Composition { k_upper, table, k_lower } => Ok(k_upper.add(&table.pullback(k_lower)?)),
    }
}

/// Writes `m + 1 = r / d` in lowest terms.
pub fn decompose_discrepancy(m: &BigRational) -> Result<(u64, u64)> {
    decompose_discrepancy_scaled(m, 1)
}

/// Non-reduced representation `m + 1 = (k r) / (k d)`.
pub fn decompose_discrepancy_scaled(m: &BigRational, k: u64) -> Result<(u64, u64)> {
    let shifted = m + BigRational::one();
    if !shifted.is_positive() {
        return Err(CrepantError::NotLogTerminal(m.to_string(), String::new()));
    }
    let out = |x: &BigInt| {
        (x * BigInt::from(k))
            .to_u64()
            .ok_or_else(|| CrepantError::OutOfRange(format!("{x} * {k}")))
    };
    Ok((out(shifted.numer())?, out(shifted.denom())?))
}

/// Label of the reduced exceptional divisor of a framed-bundle stack.
pub const FRAMED_DIVISOR: &str = "D";

/// Label of `det_d^* D'` for the `d`-th root twist.
pub fn root_pullback_label(d: u64) -> String {
    format!("det_{d}^*D'")
}

/// `K = (1 - r) D` for the rank-`r` framed-bundle stack over `[A^1/G_m]`.
pub fn canonical_framed(r: u64) -> DivisorSum {
    DivisorSum::single(FRAMED_DIVISOR, BigRational::from_integer(1 - BigInt::from(r)))
}

/// `K = (1 - r/d) det_d^* D'` for the framed-bundle stack composed with the `d`-th root.
pub fn canonical_root(r: u64, d: u64) -> DivisorSum {
    let c = BigRational::one() - BigRational::new(r.into(), d.into());
    DivisorSum::single(root_pullback_label(d), c)
}

/// Reduced-preimage bookkeeping `det_d^* D' = d D`.
pub fn root_multiplicity_table(d: u64) -> PullbackTable {
    PullbackTable::new().with(&root_pullback_label(d), BigRational::from_integer(d.into()), FRAMED_DIVISOR)
}

/// Log resolution data: exceptional components and their discrepancies.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionData {
    pub name: String,
    pub gorenstein_index: u32,
    pub divisors: Vec<(String, BigRational)>,
}

impl ResolutionData {
    pub fn validate(&self) -> Result<()> {
        if self.gorenstein_index == 0 {
            return Err(CrepantError::ZeroIndex);
        }
        let mut seen = BTreeSet::new();
        let index = BigRational::from_integer(self.gorenstein_index.into());
        for (label, m) in &self.divisors {
            if !seen.insert(label) {
                return Err(CrepantError::DuplicateLabel(label.clone()));
            }
            if m <= &-BigRational::one() {
                return Err(CrepantError::NotLogTerminal(m.to_string(), label.clone()));
            }
            if !(m * &index).is_integer() {
                return Err(CrepantError::IndexMismatch {
                    label: label.clone(),
                    discrepancy: m.to_string(),
                    index: self.gorenstein_index,
                });
            }
        }
        Ok(())
    }

    /// `K_{Z/Y} = sum m_i D_i`.
    pub fn discrepancy_divisor(&self) -> DivisorSum {
        DivisorSum::from_terms(self.divisors.iter().map(|(l, m)| (l.clone(), m.clone())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankConvention {
    /// Framed bundles of rank `r_i`; the crepancy ledger closes.
    Certificate,
    /// Framed bundles of rank `r_i + 1`, as written in the construction.
    PaperLiteral,
}

impl RankConvention {
    pub fn rank(self, r: u64) -> u64 {
        match self {
            RankConvention::Certificate => r,
            RankConvention::PaperLiteral => r + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RankConvention::Certificate => "certificate",
            RankConvention::PaperLiteral => "paper-literal",
        }
    }
}

impl std::str::FromStr for RankConvention {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "certificate" => Ok(RankConvention::Certificate),
            "paper-literal" => Ok(RankConvention::PaperLiteral),
            other => Err(format!("unknown convention `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackFactor {
    pub label: String,
    pub discrepancy: BigRational,
    pub r: u64,
    pub d: u64,
    pub rank: u64,
    /// Coefficient `1 - rank/d` on `det_d^* D'`.
    pub coefficient: BigRational,
}

impl StackFactor {
    /// Label of the reduced preimage of `D_i` on the stack.
    pub fn reduced_label(&self) -> String {
        reduced_label(&self.label)
    }

    /// `(d - rank) + m d`: coefficient of the reduced preimage in `K_{X/Y}`.
    pub fn residual(&self) -> BigRational {
        let d = BigRational::from_integer(self.d.into());
        (&d - BigRational::from_integer(self.rank.into())) + &self.discrepancy * &d
    }
}

pub fn reduced_label(label: &str) -> String {
    format!("{label}_red")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateLine {
    pub label: String,
    pub lhs: BigRational,
    pub passes: bool,
}

/// Constructive crepant stack over a log resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackDescriptor {
    pub name: String,
    pub convention: RankConvention,
    pub factors: Vec<StackFactor>,
    pub certificate: Vec<CertificateLine>,
    pub crepant: bool,
    pub warnings: Vec<String>,
}

impl StackDescriptor {
    /// `K_{X/Z} = sum (d_i - rank_i) D_i'` over the reduced preimages.
    pub fn relative_canonical(&self) -> DivisorSum {
        DivisorSum::from_terms(self.factors.iter().map(|f| {
            let c = BigInt::from(f.d) - BigInt::from(f.rank);
            (f.reduced_label(), BigRational::from_integer(c))
        }))
    }

    /// `pi^* D_i = d_i D_i'`.
    pub fn pullback_table(&self) -> PullbackTable {
        let mut t = PullbackTable::new();
        for f in &self.factors {
            t.insert(
                f.label.clone(),
                DivisorSum::single(f.reduced_label(), BigRational::from_integer(f.d.into())),
            );
        }
        t
    }

    /// `X = Z x_{[A^1/G_m]^n} (M_{rank_1} x ... x M_{rank_n})`.
    pub fn fiber_product(&self) -> String {
        if self.factors.is_empty() {
            return format!("X = Z ({} is already smooth, no exceptional components)", self.name);
        }
        let ms: Vec<String> = self
            .factors
            .iter()
            .map(|f| format!("M_{}^(d={})", f.rank, f.d))
            .collect();
        format!(
            "X = Z x_[A^1/G_m]^{} ({}), each M_rank mapping by the d-th power of det",
            self.factors.len(),
            ms.join(" x ")
        )
    }

    /// Moduli description of `X` over `Z`.
    pub fn moduli_interpretation(&self) -> String {
        if self.factors.is_empty() {
            return "X = Z: no data beyond a point of Z".into();
        }
        let mut parts = vec![format!(
            "X parameterizes tuples ({{E_i}}, {{beta_i}}, {{iota_i}}) for i = 1..{} over Z:",
            self.factors.len()
        )];
        for (i, f) in self.factors.iter().enumerate() {
            let i = i + 1;
            parts.push(format!(
                "[{i}: {label}] E_{i} a vector bundle of rank {rank}; beta_{i}: O^{rank} -> E_{i}; \
                 iota_{i}: det(E_{i})^(x{d}) ~= O({label}) with iota_{i} o det(beta_{i})^(x{d}) sending 1 to f_{i}",
                label = f.label,
                rank = f.rank,
                d = f.d
            ));
        }
        parts.join(" ")
    }

    pub fn require_certified(&self) -> Result<()> {
        let failing: Vec<String> = self
            .certificate
            .iter()
            .filter(|c| !c.passes)
            .map(|c| format!("{}: residual {}", c.label, c.lhs))
            .collect();
        if failing.is_empty() && self.crepant {
            Ok(())
        } else {
            Err(CrepantError::CertificateFailed(failing.join(", ")))
        }
    }
}

/// Builds the stack descriptor with lowest-terms `(r_i, d_i)`.
pub fn build_crepant_stack(input: &ResolutionData, convention: RankConvention) -> Result<StackDescriptor> {
    build_crepant_stack_with(input, convention, |_| 1)
}

/// As [`build_crepant_stack`], scaling each `(r_i, d_i)` by `scale(label)`.
pub fn build_crepant_stack_with(
    input: &ResolutionData,
    convention: RankConvention,
    scale: impl Fn(&str) -> u64,
) -> Result<StackDescriptor> {
    input.validate()?;
    let mut factors = Vec::with_capacity(input.divisors.len());
    for (label, m) in &input.divisors {
        let (r, d) = decompose_discrepancy_scaled(m, scale(label).max(1))
            .map_err(|_| CrepantError::NotLogTerminal(m.to_string(), label.clone()))?;
        let rank = convention.rank(r);
        let coefficient = BigRational::one() - BigRational::new(rank.into(), d.into());
        factors.push(StackFactor { label: label.clone(), discrepancy: m.clone(), r, d, rank, coefficient });
    }
    let certificate: Vec<CertificateLine> = factors
        .iter()
        .map(|f| {
            let lhs = f.residual();
            CertificateLine { label: f.label.clone(), passes: lhs.is_zero(), lhs }
        })
        .collect();
    let mut descriptor = StackDescriptor {
        name: input.name.clone(),
        convention,
        factors,
        certificate,
        crepant: false,
        warnings: Vec::new(),
    };
    let ledger = check_crepancy(&descriptor, &input.discrepancy_divisor())?;
    descriptor.crepant = ledger.crepant;
    if convention == RankConvention::PaperLiteral {
        descriptor.warnings.push(
            "paper-literal convention uses rank r_i + 1; under reduced-preimage multiplicities \
             the crepancy ledger leaves a residual of -1 per divisor"
                .into(),
        );
    }
    Ok(descriptor)
}

/// Outcome of composing the stack's canonical divisor with the resolution's.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrepancyLedger {
    pub k_stack_over_resolution: DivisorSum,
    pub pulled_back_discrepancy: DivisorSum,
    pub total: DivisorSum,
    pub crepant: bool,
}

/// `K_{X/Y} = K_{X/Z} + pi^* K_{Z/Y}`; crepant when it vanishes identically.
pub fn check_crepancy(descriptor: &StackDescriptor, resolution_k: &DivisorSum) -> Result<CrepancyLedger> {
    let k_upper = descriptor.relative_canonical();
    let table = descriptor.pullback_table();
    let pulled = table.pullback(resolution_k)?;
    let total = k_calculus(&KOperation::Composition {
        k_upper: k_upper.clone(),
        table,
        k_lower: resolution_k.clone(),
    })?;
    Ok(CrepancyLedger {
        k_stack_over_resolution: k_upper,
        pulled_back_discrepancy: pulled,
        crepant: total.is_zero(),
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn single(m: BigRational) -> ResolutionData {
        let gorenstein_index = m.denom().to_u32().unwrap();
        ResolutionData { name: "test".into(), gorenstein_index, divisors: vec![("E".into(), m)] }
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_discrepancy(&q(-1, 2)).unwrap(), (1, 2));
        assert_eq!(decompose_discrepancy(&q(0, 1)).unwrap(), (1, 1));
        assert_eq!(decompose_discrepancy(&q(1, 3)).unwrap(), (4, 3));
        assert!(matches!(decompose_discrepancy(&q(-1, 1)), Err(CrepantError::NotLogTerminal(..))));
        assert!(matches!(decompose_discrepancy(&q(-3, 2)), Err(CrepantError::NotLogTerminal(..))));
        assert_eq!(decompose_discrepancy_scaled(&q(-1, 2), 3).unwrap(), (3, 6));
    }

    #[test]
    fn framed_bundle_canonical() {
        assert_eq!(canonical_framed(2), DivisorSum::single("D", q(-1, 1)));
        assert!(canonical_framed(1).is_zero());
        assert_eq!(canonical_framed(3), DivisorSum::single("D", q(-2, 1)));
    }

    #[test]
    fn root_twist_canonical() {
        assert_eq!(canonical_root(2, 3), DivisorSum::single("det_3^*D'", q(1, 3)));
        assert_eq!(canonical_root(1, 2), DivisorSum::single("det_2^*D'", q(1, 2)));
        for r in 1..6 {
            let reduced = root_multiplicity_table(1).pullback(&canonical_root(r, 1)).unwrap();
            assert_eq!(reduced, canonical_framed(r));
        }
        // (1 - r/d) det_d^* D' = (d - r) D
        let reduced = root_multiplicity_table(3).pullback(&canonical_root(2, 3)).unwrap();
        assert_eq!(reduced, DivisorSum::single("D", q(1, 1)));
    }

    #[test]
    fn composition_cancels() {
        // K_{X/Z} = -D_red, K_{Z/Y} = (-1/2) D with D -> 2 D_red
        let k = k_calculus(&KOperation::Composition {
            k_upper: DivisorSum::single("D_red", q(1, 1)),
            table: PullbackTable::new().with("D", q(2, 1), "D_red"),
            k_lower: DivisorSum::single("D", q(-1, 2)),
        })
        .unwrap();
        assert!(k.is_zero());
    }

    #[test]
    fn product_and_identity() {
        let k1 = canonical_framed(2);
        let t1 = PullbackTable::new().with("D", q(1, 1), "D1");
        let t2 = PullbackTable::new().with("D", q(1, 1), "D2");
        let k = k_calculus(&KOperation::Product { factors: vec![(t1, k1.clone()), (t2, k1.clone())] }).unwrap();
        assert_eq!(k, DivisorSum::from_terms([("D1", q(-1, 1)), ("D2", q(-1, 1))]));
        let id = PullbackTable::identity(["D"]);
        assert_eq!(k_calculus(&KOperation::Pullback { table: id, k: k1.clone() }).unwrap(), k1);
        let missing = PullbackTable::new();
        assert!(matches!(missing.pullback(&k1), Err(CrepantError::UnknownLabel(_))));
    }

    #[test]
    fn descriptor_half() {
        let d = build_crepant_stack(&single(q(-1, 2)), RankConvention::Certificate).unwrap();
        let f = &d.factors[0];
        assert_eq!((f.r, f.d, f.rank), (1, 2, 1));
        assert_eq!(f.coefficient, q(1, 2));
        assert!(d.certificate[0].passes);
        assert!(d.crepant);
        d.require_certified().unwrap();
    }

    #[test]
    fn descriptor_crepant_divisor() {
        let d = build_crepant_stack(&single(q(0, 1)), RankConvention::Certificate).unwrap();
        let f = &d.factors[0];
        assert_eq!((f.rank, f.d), (1, 1));
        assert!(f.coefficient.is_zero());
        assert!(d.crepant);
    }

    #[test]
    fn descriptor_rank_two() {
        let d = build_crepant_stack(&single(q(1, 1)), RankConvention::Certificate).unwrap();
        let f = &d.factors[0];
        assert_eq!((f.r, f.d, f.rank), (2, 1, 2));
        assert_eq!(d.relative_canonical(), DivisorSum::single("E_red", q(-1, 1)));
        assert!(d.crepant);
    }

    #[test]
    fn paper_literal_leaves_residual() {
        let input = single(q(-1, 2));
        let d = build_crepant_stack(&input, RankConvention::PaperLiteral).unwrap();
        assert!(!d.crepant);
        assert_eq!(d.certificate[0].lhs, q(-1, 1));
        assert!(!d.warnings.is_empty());
        assert!(matches!(d.require_certified(), Err(CrepantError::CertificateFailed(_))));
    }

    #[test]
    fn corrupted_rank_is_caught() {
        let input = single(q(-1, 2));
        let mut d = build_crepant_stack(&input, RankConvention::Certificate).unwrap();
        d.factors[0].rank += 1;
        let ledger = check_crepancy(&d, &input.discrepancy_divisor()).unwrap();
        assert!(!ledger.crepant);
        assert_eq!(ledger.total, DivisorSum::single("E_red", q(-1, 1)));
    }

    #[test]
    fn empty_resolution_is_crepant() {
        let input = ResolutionData { name: "smooth".into(), gorenstein_index: 1, divisors: vec![] };
        let d = build_crepant_stack(&input, RankConvention::Certificate).unwrap();
        assert!(d.crepant);
        assert!(check_crepancy(&d, &DivisorSum::zero()).unwrap().crepant);
    }

    #[test]
    fn input_validation() {
        let dup = ResolutionData {
            name: "x".into(),
            gorenstein_index: 2,
            divisors: vec![("E".into(), q(-1, 2)), ("E".into(), q(0, 1))],
        };
        assert!(matches!(dup.validate(), Err(CrepantError::DuplicateLabel(_))));
        let idx = ResolutionData { name: "x".into(), gorenstein_index: 1, divisors: vec![("E".into(), q(-1, 2))] };
        assert!(matches!(idx.validate(), Err(CrepantError::IndexMismatch { .. })));
        let lt = ResolutionData { name: "x".into(), gorenstein_index: 1, divisors: vec![("E".into(), q(-1, 1))] };
        assert!(matches!(
            build_crepant_stack(&lt, RankConvention::Certificate),
            Err(CrepantError::NotLogTerminal(..))
        ));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-2/3").unwrap(), q(-2, 3));
        assert_eq!(parse_rational(" 4 ").unwrap(), q(4, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn display() {
        let d = DivisorSum::from_terms([("D'", q(-1, 1)), ("E", q(1, 2))]);
        assert_eq!(d.to_string(), "-D' + (1/2)*E");
    }
}
