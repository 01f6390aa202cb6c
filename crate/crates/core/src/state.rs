//! GHZ-diagonal states and the `rho_{n,k}` / `rho_{n,k,m}` families.
//!
//! A GHZ-diagonal state on `n` qubits is stored as its eigenvalue table over
//! the `2^(n-1)` sectors `span{|i>, |~i>}`. Each sector is labelled by its
//! representative index, the member of `{i, 2^n-1-i}` whose leading bit
//! (qubit 1, the most significant bit) is zero.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;

/// Largest qubit count for which sector tables are materialized.
pub const MAX_STATE_QUBITS: u32 = 20;

pub(crate) fn check_qubits(n: u32) -> Result<()> {
    if n < 2 {
        return Err(domain(format!("need at least 2 qubits, got n = {n}")));
    }
    if n > MAX_STATE_QUBITS {
        return Err(Error::SizeLimit { what: "sector table", n, limit: MAX_STATE_QUBITS });
    }
    Ok(())
}

#[inline]
pub(crate) fn all_ones(n: u32) -> u64 {
    (1u64 << n) - 1
}

#[inline]
pub(crate) fn sector_count(n: u32) -> usize {
    1usize << (n - 1)
}

/// `min(r, 2^n - 1 - r)`: the representative of the sector containing `|r>`.
#[inline]
pub fn canonical(n: u32, raw: u64) -> u64 {
    raw.min(all_ones(n) ^ raw)
}

/// Number of ones of the sector's lighter member, `min(#1(i), n - #1(i))`.
#[inline]
pub fn sector_ones(n: u32, i: u64) -> u32 {
    let ones = i.count_ones();
    ones.min(n - ones)
}

#[inline]
pub(crate) fn raw_weight(n: u32, r: u64) -> i64 {
    n as i64 - 2 * r.count_ones() as i64
}

/// Sector label with the leading-zero representative convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RepIndex {
    n: u32,
    value: u64,
}

impl RepIndex {
    pub fn new(n: u32, value: u64) -> Result<Self> {
        if !(1..=63).contains(&n) {
            return Err(domain(format!("unsupported qubit count {n}")));
        }
        if value >= 1u64 << (n - 1) {
            return Err(domain(format!(
                "index {value} is not a representative for n = {n} (must be < {})",
                1u64 << (n - 1)
            )));
        }
        Ok(Self { n, value })
    }

    /// Canonicalize any raw basis index `r in [0, 2^n)`.
    pub fn canonical(n: u32, raw: u64) -> Result<Self> {
        if !(1..=63).contains(&n) || raw > all_ones(n) {
            return Err(domain(format!("raw index {raw} out of range for n = {n}")));
        }
        Ok(Self { n, value: canonical(n, raw) })
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn value(self) -> u64 {
        self.value
    }

    /// Raw index of the partner basis state `|~i>`.
    pub fn complement(self) -> u64 {
        all_ones(self.n) ^ self.value
    }

    pub fn ones(self) -> u32 {
        self.value.count_ones()
    }

    /// `#0(i) - #1(i)` over the n-bit representation.
    pub fn weight(self) -> i64 {
        raw_weight(self.n, self.value)
    }

    pub fn bits(self) -> String {
        format!("{:0width$b}", self.value, width = self.n as usize)
    }
}

impl fmt::Display for RepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Sector weight `w_i = #0(i) - #1(i)` of a representative index.
pub fn weight(n: u32, i: u64) -> Result<i64> {
    RepIndex::new(n, i).map(RepIndex::weight)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// `sum_{j=0}^{upto} C(n, j)`, built incrementally so large `n` stays linear
/// in the number of terms.
pub fn binomial_prefix_sum(n: u64, upto: u64) -> BigUint {
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for j in 0..upto.min(n) {
        term *= n - j;
        term /= j + 1;
        total += &term;
    }
    total
}

/// `1 / sum_{i=0}^{k} C(n, i)`.
pub fn binom_normalizer(n: u64, k: u64) -> Result<BigRational> {
    if k > n {
        return Err(domain(format!("normalizer needs 0 <= k <= n, got n = {n}, k = {k}")));
    }
    Ok(BigRational::new(1.into(), binomial_prefix_sum(n, k).into()))
}

/// Eigenvalue table of a GHZ-diagonal state.
///
/// Sector `i` holds `(lambda_i^+, lambda_i^-)`, the weights of
/// `|phi_i^+-> = (|i> +- |~i>)/sqrt(2)`. Entries are nonnegative and sum to
/// one (exactly for rational scalars, within [`Scalar::tolerance`] for floats).
#[derive(Clone, Debug, PartialEq)]
pub struct GhzDiagonalState<S: Scalar> {
    n: u32,
    plus: Vec<S>,
    minus: Vec<S>,
}

impl<S: Scalar> GhzDiagonalState<S> {
    pub fn from_sectors(n: u32, plus: Vec<S>, minus: Vec<S>) -> Result<Self> {
        check_qubits(n)?;
        let count = sector_count(n);
        if plus.len() != count || minus.len() != count {
            return Err(domain(format!(
                "expected {count} sector entries for n = {n}, got {} / {}",
                plus.len(),
                minus.len()
            )));
        }
        if let Some(i) = (0..count).find(|&i| plus[i].is_negative() || minus[i].is_negative()) {
            return Err(domain(format!("negative eigenvalue in sector {i}")));
        }
        let state = Self { n, plus, minus };
        let trace = state.trace();
        if !trace.approx_eq(&S::one()) {
            return Err(Error::Normalization { trace: trace.to_string() });
        }
        Ok(state)
    }

    /// Build from a per-sector closure `i -> (lambda_i^+, lambda_i^-)`.
    pub fn from_fn(n: u32, mut f: impl FnMut(u64) -> (S, S)) -> Result<Self> {
        check_qubits(n)?;
        let (plus, minus) = (0..sector_count(n) as u64).map(&mut f).unzip();
        Self::from_sectors(n, plus, minus)
    }

    /// `|phi_0^+>`, the GHZ state.
    pub fn pure_ghz(n: u32) -> Result<Self> {
        Self::from_fn(n, |i| if i == 0 { (S::one(), S::zero()) } else { (S::zero(), S::zero()) })
    }

    /// The identity over `2^n`.
    pub fn maximally_mixed(n: u32) -> Result<Self> {
        check_qubits(n)?;
        let w = S::one() / S::from_int(1i64 << n);
        Self::from_fn(n, |_| (w.clone(), w.clone()))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn sector_count(&self) -> usize {
        self.plus.len()
    }

    pub fn lambda_plus(&self, i: usize) -> &S {
        &self.plus[i]
    }

    pub fn lambda_minus(&self, i: usize) -> &S {
        &self.minus[i]
    }

    /// `lambda_i^+ + lambda_i^-`, twice the diagonal entry of sector `i`.
    pub fn sector_sum(&self, i: usize) -> S {
        self.plus[i].clone() + self.minus[i].clone()
    }

    /// `lambda_i^+ - lambda_i^-`, twice the antidiagonal entry of sector `i`.
    pub fn coherence(&self, i: usize) -> S {
        self.plus[i].clone() - self.minus[i].clone()
    }

    pub fn sectors(&self) -> impl Iterator<Item = (u64, &S, &S)> + '_ {
        self.plus.iter().zip(&self.minus).enumerate().map(|(i, (p, m))| (i as u64, p, m))
    }

    pub fn trace(&self) -> S {
        self.plus.iter().chain(&self.minus).fold(S::zero(), |acc, x| acc + x.clone())
    }

    /// Swap `lambda^+` and `lambda^-` in one sector.
    pub fn with_sector_swapped(&self, i: usize) -> Self {
        let mut out = self.clone();
        std::mem::swap(&mut out.plus[i], &mut out.minus[i]);
        out
    }

    /// Relabel sectors so that `lambda_i^+ >= lambda_i^-` everywhere.
    pub fn canonically_ordered(&self) -> Self {
        let mut out = self.clone();
        for i in 0..out.plus.len() {
            if out.plus[i] < out.minus[i] {
                std::mem::swap(&mut out.plus[i], &mut out.minus[i]);
            }
        }
        out
    }

    pub fn to_f64(&self) -> GhzDiagonalState<f64> {
        GhzDiagonalState {
            n: self.n,
            plus: self.plus.iter().map(Scalar::to_f64_lossy).collect(),
            minus: self.minus.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

impl GhzDiagonalState<BigRational> {
    pub fn cast<T: Scalar>(&self) -> GhzDiagonalState<T> {
        GhzDiagonalState {
            n: self.n,
            plus: self.plus.iter().map(T::from_rational).collect(),
            minus: self.minus.iter().map(T::from_rational).collect(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WireEntry {
    i: u64,
    lp: String,
    lm: String,
}

#[derive(Serialize, Deserialize)]
struct WireState {
    n: u32,
    entries: Vec<WireEntry>,
}

/// Serializes as `{"n": .., "entries": [{"i": .., "lp": "p/q", "lm": "p/q"}]}`,
/// listing only sectors with a nonzero eigenvalue.
impl<S: Scalar> Serialize for GhzDiagonalState<S> {
    fn serialize<Z: Serializer>(&self, serializer: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let entries = self
            .sectors()
            .filter(|(_, p, m)| !p.is_zero() || !m.is_zero())
            .map(|(i, p, m)| WireEntry { i, lp: p.to_wire(), lm: m.to_wire() })
            .collect();
        WireState { n: self.n, entries }.serialize(serializer)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for GhzDiagonalState<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = WireState::deserialize(deserializer)?;
        check_qubits(wire.n).map_err(D::Error::custom)?;
        let count = sector_count(wire.n);
        let mut plus = vec![S::zero(); count];
        let mut minus = vec![S::zero(); count];
        for entry in wire.entries {
            let i = RepIndex::new(wire.n, entry.i).map_err(D::Error::custom)?.value() as usize;
            let parse = |s: &str| {
                S::from_wire(s).ok_or_else(|| D::Error::custom(format!("bad number {s:?}")))
            };
            plus[i] = parse(&entry.lp)?;
            minus[i] = parse(&entry.lm)?;
        }
        Self::from_sectors(wire.n, plus, minus).map_err(D::Error::custom)
    }
}

/// Parameters of the `rho_{n,k,m}` family (`m = 0` is `rho_{n,k}`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FamilyParams {
    pub n: u32,
    pub k: u32,
    pub m: u32,
}

impl FamilyParams {
    pub fn new(n: u32, k: u32, m: u32) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("need at least 2 qubits, got n = {n}")));
        }
        if k < 1 {
            return Err(domain("k must be at least 1"));
        }
        if 2 * k >= n {
            return Err(domain(format!("k must satisfy k < n/2, got n = {n}, k = {k}")));
        }
        if k + m > n - k {
            return Err(domain(format!("mixing width too large: k + m = {} > n - k = {}", k + m, n - k)));
        }
        Ok(Self { n, k, m })
    }

    pub fn nk(n: u32, k: u32) -> Result<Self> {
        Self::new(n, k, 0)
    }

    /// Highest `#1` level carrying the mixed `Q^{+-}` weight.
    pub fn mixing_top(&self) -> u32 {
        self.k + self.m
    }

    /// `lambda' = 1 / sum_{j=0}^{k+m} C(n, j)`.
    pub fn lambda(&self) -> BigRational {
        BigRational::new(1.into(), binomial_prefix_sum(self.n as u64, self.mixing_top() as u64).into())
    }
}

/// Sector statistics of a family member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyCounts {
    /// Sectors with `lambda^+ = lambda`, `lambda^- = 0`.
    pub pure_plus: u64,
    /// Sectors with `lambda^+ = lambda^- = lambda/2`.
    pub mixed: u64,
}

fn family_counts(params: &FamilyParams) -> FamilyCounts {
    let mut counts = FamilyCounts { pure_plus: 0, mixed: 0 };
    for i in 0..sector_count(params.n) as u64 {
        let s = sector_ones(params.n, i);
        if s < params.k {
            counts.pure_plus += 1;
        } else if s <= params.mixing_top() {
            counts.mixed += 1;
        }
    }
    counts
}

/// Build `rho_{n,k,m}`: `lambda'` on sectors whose lighter member has fewer
/// than `k` ones, `lambda'/2` on both signs for `k..=k+m` ones, zero otherwise.
///
/// The normalization is checked by exact sector counting; a parameter set
/// whose mixed levels collide under complementation is rejected rather than
/// renormalized.
pub fn build_family<S: Scalar>(params: FamilyParams) -> Result<GhzDiagonalState<S>> {
    check_qubits(params.n)?;
    let counts = family_counts(&params);
    let expected = binomial_prefix_sum(params.n as u64, params.mixing_top() as u64);
    let actual = BigUint::from(counts.pure_plus + counts.mixed);
    if actual != expected {
        let trace = BigRational::new(actual.into(), expected.into());
        return Err(Error::Normalization { trace: trace.to_string() });
    }
    let lambda = S::from_rational(&params.lambda());
    let half = lambda.clone() / S::from_int(2);
    let (n, k, top) = (params.n, params.k, params.mixing_top());
    let plus = (0..sector_count(n) as u64)
        .map(|i| match sector_ones(n, i) {
            s if s < k => lambda.clone(),
            s if s <= top => half.clone(),
            _ => S::zero(),
        })
        .collect();
    let minus = (0..sector_count(n) as u64)
        .map(|i| match sector_ones(n, i) {
            s if s >= k && s <= top => half.clone(),
            _ => S::zero(),
        })
        .collect();
    // Exact counting above already fixed the trace; skip the float re-check.
    Ok(GhzDiagonalState { n, plus, minus })
}

pub fn build_rho_nk<S: Scalar>(n: u32, k: u32) -> Result<GhzDiagonalState<S>> {
    build_family(FamilyParams::nk(n, k)?)
}

pub fn build_rho_nkm<S: Scalar>(n: u32, k: u32, m: u32) -> Result<GhzDiagonalState<S>> {
    build_family(FamilyParams::new(n, k, m)?)
}

/// Pure-plus and mixed sector counts of a family member.
pub fn count_family_sectors(params: FamilyParams) -> FamilyCounts {
    family_counts(&params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    type Q = BigRational;

    #[test]
    fn weights_of_four_qubit_representatives() {
        assert_eq!(weight(4, 0).unwrap(), 4);
        assert_eq!(weight(4, 1).unwrap(), 2);
        assert_eq!(weight(4, 2).unwrap(), 2);
        assert_eq!(weight(4, 3).unwrap(), 0);
        assert!(weight(4, 8).is_err());
    }

    #[test]
    fn canonicalization() {
        assert_eq!(canonical(4, 8), 7);
        assert_eq!(canonical(4, 7), 7);
        assert_eq!(canonical(4, 13), 2);
        assert_eq!(RepIndex::canonical(4, 15).unwrap().value(), 0);
        assert!(RepIndex::canonical(4, 16).is_err());
        assert_eq!(RepIndex::new(4, 2).unwrap().bits(), "0010");
        assert_eq!(RepIndex::new(4, 2).unwrap().complement(), 0b1101);
    }

    #[test]
    fn normalizer_values() {
        assert_eq!(binom_normalizer(4, 2).unwrap(), ratio(1, 11));
        assert_eq!(binom_normalizer(9, 0).unwrap(), ratio(1, 1));
        assert_eq!(binom_normalizer(7, 2).unwrap(), ratio(1, 29));
        assert!(binom_normalizer(3, 4).is_err());
        // 10^4 qubits: no overflow, digits grow as expected.
        let big = binomial_prefix_sum(10_000, 2_500);
        assert!(big.bits() > 8000);
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![BigUint::one()];
        for n in 1..=30u64 {
            let mut next = vec![BigUint::one(); n as usize + 1];
            for j in 1..n as usize {
                next[j] = &row[j - 1] + &row[j];
            }
            row = next;
            for (j, v) in row.iter().enumerate() {
                assert_eq!(&binomial(n, j as u64), v);
            }
        }
    }

    #[test]
    fn rho_6_2_counts_and_weights() {
        let state = build_rho_nk::<Q>(6, 2).unwrap();
        let lam = ratio(1, 22);
        let pure: Vec<_> = state.sectors().filter(|(_, p, m)| **p == lam && m.is_zero()).collect();
        let mixed: Vec<_> = state.sectors().filter(|(_, p, m)| **p == lam.clone() / ratio(2, 1) && p == m).collect();
        assert_eq!(pure.len(), 7);
        assert_eq!(mixed.len(), 15);
        assert_eq!(state.trace(), ratio(1, 1));
    }

    #[test]
    fn rho_nk_rejects_k_at_or_above_half() {
        assert!(matches!(build_rho_nk::<Q>(4, 2), Err(Error::Domain(_))));
        assert!(matches!(build_rho_nk::<Q>(4, 3), Err(Error::Domain(_))));
        assert!(matches!(build_rho_nk::<Q>(5, 0), Err(Error::Domain(_))));
        assert!(build_rho_nk::<Q>(5, 2).is_ok());
    }

    #[test]
    fn rho_nkm_normalizer_and_reduction() {
        let params = FamilyParams::new(8, 2, 1).unwrap();
        assert_eq!(params.lambda(), ratio(1, 93));
        let state = build_family::<Q>(params).unwrap();
        assert_eq!(state.trace(), ratio(1, 1));
        for n in 3..=11 {
            for k in 1..n {
                if 2 * k >= n {
                    continue;
                }
                assert_eq!(build_rho_nkm::<Q>(n, k, 0).unwrap(), build_rho_nk::<Q>(n, k).unwrap());
            }
        }
    }

    #[test]
    fn rho_nkm_collision_is_a_normalization_error() {
        // k + m = n/2: the top mixed level pairs with itself under complement.
        assert!(matches!(build_rho_nkm::<Q>(8, 2, 2), Err(Error::Normalization { .. })));
        assert!(matches!(build_rho_nkm::<Q>(8, 2, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn float_family_is_normalized() {
        let s = build_rho_nk::<f64>(9, 3).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-12);
        let s = build_rho_nkm::<f32>(10, 2, 1).unwrap();
        assert!((s.trace() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn from_sectors_validation() {
        assert!(GhzDiagonalState::<Q>::from_sectors(2, vec![ratio(1, 2), ratio(1, 2)], vec![Q::zero(); 2]).is_ok());
        assert!(matches!(
            GhzDiagonalState::<Q>::from_sectors(2, vec![ratio(1, 2), ratio(1, 3)], vec![Q::zero(); 2]),
            Err(Error::Normalization { .. })
        ));
        assert!(GhzDiagonalState::<Q>::from_sectors(2, vec![ratio(3, 2), Q::zero()], vec![ratio(-1, 2), Q::zero()]).is_err());
        assert!(GhzDiagonalState::<Q>::from_sectors(2, vec![Q::one()], vec![Q::zero()]).is_err());
        assert!(GhzDiagonalState::<Q>::pure_ghz(1).is_err());
        assert!(matches!(GhzDiagonalState::<Q>::pure_ghz(30), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn canonical_ordering_swaps_only_where_needed() {
        let s = GhzDiagonalState::<Q>::from_sectors(2, vec![ratio(1, 4), ratio(1, 2)], vec![ratio(1, 4), Q::zero()])
            .unwrap()
            .with_sector_swapped(1);
        assert_eq!(s.lambda_plus(1), &Q::zero());
        let c = s.canonically_ordered();
        assert_eq!(c.lambda_plus(1), &ratio(1, 2));
        assert_eq!(c.lambda_plus(0), &ratio(1, 4));
    }

    #[test]
    fn json_schema_round_trip() {
        let state = build_rho_nkm::<Q>(8, 2, 1).unwrap();
        let json = serde_json::to_value(&state).unwrap();
        assert_eq!(json["n"], 8);
        assert_eq!(json["entries"][0]["i"], 0);
        assert_eq!(json["entries"][0]["lp"], "1/93");
        assert_eq!(json["entries"][0]["lm"], "0/1");
        let back: GhzDiagonalState<Q> = serde_json::from_value(json).unwrap();
        assert_eq!(back, state);

        let bad = r#"{"n": 2, "entries": [{"i": 0, "lp": "1/2", "lm": "0"}]}"#;
        assert!(serde_json::from_str::<GhzDiagonalState<Q>>(bad).is_err());
        let bad_index = r#"{"n": 2, "entries": [{"i": 3, "lp": "1", "lm": "0"}]}"#;
        assert!(serde_json::from_str::<GhzDiagonalState<Q>>(bad_index).is_err());
    }
}
