//! Full-correlation tensor `T_{k_1..k_n} = Tr[sigma_{k_1} x ... x sigma_{k_n} rho]`
//! of GHZ-diagonal states and its squared Hilbert-Schmidt norm.
//!
//! Only two tuple classes can be nonzero. A tuple mixing `z` with `x`/`y`
//! flips a proper subset of qubits, which maps the diagonal/antidiagonal
//! support off itself. All-`z` tuples read the diagonal. An all-`{x,y}`
//! tuple with `y` positions `Y` gives
//! `(-1)^{|Y|/2} sum_i delta_i (-1)^{#1(i & Y)}` for even `|Y|` and zero for
//! odd `|Y|`, so the whole block is one Walsh-Hadamard transform of the
//! coherence vector.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::dense::{check_dense, to_dense};
use crate::error::{domain, Error, Result};
use crate::qfi::{qfi_ghz_diagonal, separability_test, SeparabilityVerdict};
use crate::scalar::{CompensatedSum, Scalar};
use crate::state::GhzDiagonalState;

/// Hard cap for the tensor computations.
pub const BELL_MAX_QUBITS: u32 = 16;

/// Cap for the `3^n` dense enumeration.
pub const BRUTE_FORCE_MAX_QUBITS: u32 = 6;

/// Entries below this are treated as zero by the dense enumeration.
const BRUTE_FORCE_ZERO: f64 = 1e-12;

fn check_bell(n: u32) -> Result<()> {
    if n > BELL_MAX_QUBITS {
        return Err(Error::SizeLimit { what: "correlation tensor", n, limit: BELL_MAX_QUBITS });
    }
    Ok(())
}

/// Pauli indices `1 = x, 2 = y, 3 = z`, position 0 acting on qubit 1.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliTuple(Vec<u8>);

impl PauliTuple {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if indices.is_empty() {
            return Err(domain("empty Pauli tuple"));
        }
        if let Some(bad) = indices.iter().find(|&&k| !(1..=3).contains(&k)) {
            return Err(domain(format!("Pauli index {bad} outside 1..=3")));
        }
        Ok(Self(indices))
    }

    pub fn all_z(n: u32) -> Self {
        Self(vec![3; n as usize])
    }

    /// The all-`{x,y}` tuple with `y` on the bits set in `y_mask`.
    pub fn from_y_mask(n: u32, y_mask: u64) -> Self {
        Self((1..=n).map(|q| if y_mask >> (n - q) & 1 == 1 { 2 } else { 1 }).collect())
    }

    pub fn n(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn indices(&self) -> &[u8] {
        &self.0
    }

    fn mask_of(&self, index: u8) -> u64 {
        let n = self.n();
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k == index)
            .fold(0, |m, (pos, _)| m | 1 << (n - 1 - pos as u32))
    }

    pub fn y_mask(&self) -> u64 {
        self.mask_of(2)
    }

    pub fn is_all_z(&self) -> bool {
        self.0.iter().all(|&k| k == 3)
    }

    pub fn has_no_z(&self) -> bool {
        self.0.iter().all(|&k| k != 3)
    }

    /// Enumerates all `3^n` tuples in lexicographic order.
    pub fn all(n: u32) -> impl Iterator<Item = PauliTuple> {
        let total = 3u64.pow(n);
        (0..total).map(move |mut code| {
            let mut idx = vec![0u8; n as usize];
            for slot in idx.iter_mut().rev() {
                *slot = (code % 3) as u8 + 1;
                code /= 3;
            }
            PauliTuple(idx)
        })
    }
}

impl fmt::Display for PauliTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &k in &self.0 {
            f.write_str(["x", "y", "z"][k as usize - 1])?;
        }
        Ok(())
    }
}

impl FromStr for PauliTuple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indices = s
            .chars()
            .map(|c| match c.to_ascii_lowercase() {
                'x' | '1' => Ok(1),
                'y' | '2' => Ok(2),
                'z' | '3' => Ok(3),
                other => Err(Error::Parse(format!("bad Pauli label {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        PauliTuple::new(indices)
    }
}

impl Serialize for PauliTuple {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.collect_str(self)
    }
}

fn parity_sign<S: Scalar>(bits: u64) -> S {
    if bits.count_ones().is_multiple_of(2) { S::one() } else { -S::one() }
}

fn all_z_value<S: Scalar>(state: &GhzDiagonalState<S>) -> S {
    // |i> and |~i> have opposite z-parity for odd n.
    if state.n() % 2 == 1 {
        return S::zero();
    }
    let mut acc = CompensatedSum::default();
    for i in 0..state.sector_count() {
        acc.add(parity_sign::<S>(i as u64) * state.sector_sum(i));
    }
    acc.total()
}

fn xy_phase<S: Scalar>(y_count: u32) -> S {
    if y_count.is_multiple_of(4) { S::one() } else { -S::one() }
}

/// `Tr[sigma_{k_1} x ... x sigma_{k_n} rho]` without dense matrices.
pub fn pauli_expectation<S: Scalar>(state: &GhzDiagonalState<S>, tuple: &PauliTuple) -> Result<S> {
    if tuple.n() != state.n() {
        return Err(domain(format!("tuple acts on {} qubits, state has {}", tuple.n(), state.n())));
    }
    if tuple.is_all_z() {
        return Ok(all_z_value(state));
    }
    if !tuple.has_no_z() {
        return Ok(S::zero());
    }
    let y = tuple.y_mask();
    if y.count_ones() % 2 == 1 {
        return Ok(S::zero());
    }
    let mut acc = CompensatedSum::default();
    for i in 0..state.sector_count() {
        acc.add(parity_sign::<S>(i as u64 & y) * state.coherence(i));
    }
    Ok(xy_phase::<S>(y.count_ones()) * acc.total())
}

/// In-place Walsh-Hadamard transform: `out[y] = sum_i v[i] (-1)^{#1(i & y)}`.
fn walsh_hadamard<S: Scalar>(values: &mut [S]) {
    let len = values.len();
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for j in block..block + half {
                let a = values[j].clone();
                let b = values[j + half].clone();
                values[j] = a.clone() + b.clone();
                values[j + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Nonzero tensor elements with the squared Hilbert-Schmidt norm.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTensorSummary<S: Scalar> {
    pub n: u32,
    pub nonzero_elements: BTreeMap<PauliTuple, S>,
    pub hs_norm_sq: S,
    /// `hs_norm_sq <= 1`, which guarantees the correlation Bell condition.
    pub bell_upper_bound_satisfied: bool,
}

impl<S: Scalar> CorrelationTensorSummary<S> {
    fn from_elements(n: u32, elements: BTreeMap<PauliTuple, S>) -> Self {
        let mut acc = CompensatedSum::default();
        for v in elements.values() {
            acc.add(v.clone() * v.clone());
        }
        let hs_norm_sq = acc.total();
        let bell_upper_bound_satisfied = !(hs_norm_sq > S::one() + S::tolerance());
        Self { n, nonzero_elements: elements, hs_norm_sq, bell_upper_bound_satisfied }
    }

    pub fn get(&self, tuple: &PauliTuple) -> S {
        self.nonzero_elements.get(tuple).cloned().unwrap_or_else(S::zero)
    }
}

impl<S: Scalar> Serialize for CorrelationTensorSummary<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        struct Elements<'a, S: Scalar>(&'a BTreeMap<PauliTuple, S>);
        impl<S: Scalar> Serialize for Elements<'_, S> {
            fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, &v.to_wire())?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("nonzero_elements", &Elements(&self.nonzero_elements))?;
        map.serialize_entry("hs_norm_sq", &self.hs_norm_sq.to_wire())?;
        map.serialize_entry("bell_upper_bound_satisfied", &self.bell_upper_bound_satisfied)?;
        map.end()
    }
}

/// `{x,y}`-block values indexed by the low `n-1` bits of the `y` mask; the
/// top bit is fixed by the parity requirement.
fn xy_block<S: Scalar>(state: &GhzDiagonalState<S>) -> Vec<(u64, S)> {
    let n = state.n();
    let mut values: Vec<S> = (0..state.sector_count()).map(|i| state.coherence(i)).collect();
    walsh_hadamard(&mut values);
    let top = 1u64 << (n - 1);
    values
        .into_iter()
        .enumerate()
        .map(|(low, h)| {
            let low = low as u64;
            let y = if low.count_ones() % 2 == 1 { low | top } else { low };
            let v = xy_phase::<S>(y.count_ones()) * h;
            (y, v)
        })
        .collect()
}

/// Structure-exploiting tensor: the `2^(n-1)` even-`y` tuples plus the
/// all-`z` tuple for even `n`. Exact for rational scalars.
pub fn correlation_tensor<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<CorrelationTensorSummary<S>> {
    let n = state.n();
    check_bell(n)?;
    let mut elements = BTreeMap::new();
    for (y, v) in xy_block(state) {
        if !v.is_zero() {
            elements.insert(PauliTuple::from_y_mask(n, y), v);
        }
    }
    let z = all_z_value(state);
    if !z.is_zero() {
        elements.insert(PauliTuple::all_z(n), z);
    }
    Ok(CorrelationTensorSummary::from_elements(n, elements))
}

/// `sum over all 3^n tuples of T^2`.
pub fn hs_norm_sq<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<S> {
    check_bell(state.n())?;
    let mut acc = CompensatedSum::default();
    for (_, v) in xy_block(state) {
        acc.add(v.clone() * v);
    }
    let z = all_z_value(state);
    acc.add(z.clone() * z);
    Ok(acc.total())
}

/// The same sum restricted to all-`{x,y}` tuples (the all-`z` term dropped).
pub fn xy_block_norm_sq<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<S> {
    check_bell(state.n())?;
    let mut acc = CompensatedSum::default();
    for (_, v) in xy_block(state) {
        acc.add(v.clone() * v);
    }
    Ok(acc.total())
}

fn pauli_2x2(k: u8) -> DMatrix<Complex64> {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    match k {
        1 => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        2 => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        _ => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Dense Kronecker product `sigma_{k_1} x ... x sigma_{k_n}`.
pub fn pauli_operator(tuple: &PauliTuple) -> DMatrix<Complex64> {
    tuple
        .indices()
        .iter()
        .fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, &k| acc.kronecker(&pauli_2x2(k)))
}

/// Oracle: every one of the `3^n` tuples as a dense trace.
pub fn brute_force_tensor<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<CorrelationTensorSummary<f64>> {
    let n = state.n();
    if n > BRUTE_FORCE_MAX_QUBITS {
        return Err(Error::SizeLimit { what: "brute-force correlation tensor", n, limit: BRUTE_FORCE_MAX_QUBITS });
    }
    check_dense(n)?;
    let rho = to_dense(state)?;
    let mut elements = BTreeMap::new();
    for tuple in PauliTuple::all(n) {
        let op = pauli_operator(&tuple);
        let value = rho.expectation(&crate::dense::DenseMatrix(op));
        if value.norm() > BRUTE_FORCE_ZERO {
            elements.insert(tuple, value.re);
        }
    }
    Ok(CorrelationTensorSummary::from_elements(n, elements))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectionVerdict {
    QfiOnly,
    Both,
    Neither,
    BellOnly,
}

impl DetectionVerdict {
    pub fn label(self) -> &'static str {
        match self {
            DetectionVerdict::QfiOnly => "QFI-only detection",
            DetectionVerdict::Both => "both",
            DetectionVerdict::Neither => "neither",
            DetectionVerdict::BellOnly => "Bell-only",
        }
    }
}

impl fmt::Display for DetectionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for DetectionVerdict {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectionRow<S: Scalar> {
    pub n: u32,
    pub f_q: S,
    pub f_q_over_n: S,
    pub hs_norm_sq: S,
    pub xy_block_norm_sq: S,
    pub verdict: DetectionVerdict,
}

/// QFI witness (`F_Q > n`) against the correlation bound (`hs_norm_sq < 1`).
pub fn detection_comparison<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<DetectionRow<S>> {
    let n = state.n();
    let f_q = qfi_ghz_diagonal(state);
    let hs = hs_norm_sq(state)?;
    let qfi_detects = separability_test(&f_q, n) == SeparabilityVerdict::Entangled;
    let bell_silent = hs < S::one() - S::tolerance();
    let verdict = match (qfi_detects, bell_silent) {
        (true, true) => DetectionVerdict::QfiOnly,
        (true, false) => DetectionVerdict::Both,
        (false, true) => DetectionVerdict::Neither,
        (false, false) => DetectionVerdict::BellOnly,
    };
    Ok(DetectionRow {
        n,
        f_q_over_n: f_q.clone() / S::from_int(n as i64),
        f_q,
        xy_block_norm_sq: xy_block_norm_sq(state)?,
        hs_norm_sq: hs,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use crate::state::build_rho_nk;
    use num_rational::BigRational;
    use num_traits::Zero;

    type Q = BigRational;

    fn bell() -> GhzDiagonalState<Q> {
        GhzDiagonalState::pure_ghz(2).unwrap()
    }

    #[test]
    fn tuple_parsing_and_display() {
        let t: PauliTuple = "xyZ".parse().unwrap();
        assert_eq!(t.indices(), &[1, 2, 3]);
        assert_eq!(t.to_string(), "xyz");
        assert_eq!("123".parse::<PauliTuple>().unwrap(), t);
        assert!("xa".parse::<PauliTuple>().is_err());
        assert!("".parse::<PauliTuple>().is_err());
        assert!(PauliTuple::new(vec![0, 1]).is_err());
        assert_eq!(PauliTuple::from_y_mask(4, 0b0110).to_string(), "xyyx");
        assert_eq!(PauliTuple::from_y_mask(4, 0b0110).y_mask(), 0b0110);
        assert_eq!(PauliTuple::all(3).count(), 27);
    }

    #[test]
    fn bell_state_correlations() {
        let s = bell();
        let e = |t: &str| pauli_expectation(&s, &t.parse().unwrap()).unwrap();
        assert_eq!(e("xx"), ratio(1, 1));
        assert_eq!(e("yy"), ratio(-1, 1));
        assert_eq!(e("zz"), ratio(1, 1));
        assert_eq!(e("xy"), ratio(0, 1));
        assert_eq!(e("xz"), ratio(0, 1));
        let summary = correlation_tensor(&s).unwrap();
        assert_eq!(summary.nonzero_elements.len(), 3);
        assert_eq!(summary.hs_norm_sq, ratio(3, 1));
        assert!(!summary.bell_upper_bound_satisfied);
        assert_eq!(hs_norm_sq(&s).unwrap(), ratio(3, 1));
    }

    #[test]
    fn mixed_tuples_vanish() {
        let s = build_rho_nk::<Q>(7, 2).unwrap();
        for t in ["zxxxxxx", "xxxxxxz", "yzyxxyy", "zzzzzzx"] {
            assert!(pauli_expectation(&s, &t.parse().unwrap()).unwrap().is_zero());
        }
        assert!(pauli_expectation(&s, &PauliTuple::all_z(7)).unwrap().is_zero());
        assert!(pauli_expectation(&s, &"xx".parse().unwrap()).is_err());
    }

    #[test]
    fn walsh_hadamard_matches_direct_sum() {
        let s = build_rho_nk::<Q>(6, 2).unwrap();
        let fast = correlation_tensor(&s).unwrap();
        for y in 0..64u64 {
            let t = PauliTuple::from_y_mask(6, y);
            assert_eq!(fast.get(&t), pauli_expectation(&s, &t).unwrap(), "{t}");
        }
    }

    #[test]
    fn frozen_norms() {
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(7, 2).unwrap()).unwrap(), ratio(512, 841));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(8, 2).unwrap()).unwrap(), ratio(1593, 1369));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(8, 3).unwrap()).unwrap(), ratio(1987, 2883));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(9, 3).unwrap()).unwrap(), ratio(2944, 4225));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(10, 3).unwrap()).unwrap(), ratio(203, 176));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(6, 2).unwrap()).unwrap(), ratio(81, 121));
        assert_eq!(hs_norm_sq(&build_rho_nk::<Q>(5, 2).unwrap()).unwrap(), ratio(3, 8));
        let f = hs_norm_sq(&build_rho_nk::<f64>(8, 2).unwrap()).unwrap();
        assert!((f - 1593.0 / 1369.0).abs() < 1e-12);
        assert!(xy_block_norm_sq(&build_rho_nk::<f64>(8, 2).unwrap()).unwrap() < 1.0);
    }

    #[test]
    fn maximally_mixed_has_empty_tensor() {
        let s = GhzDiagonalState::<Q>::maximally_mixed(5).unwrap();
        let t = correlation_tensor(&s).unwrap();
        assert!(t.nonzero_elements.is_empty());
        assert!(t.hs_norm_sq.is_zero());
    }

    #[test]
    fn brute_force_agrees_on_small_states() {
        for (n, k) in [(3, 1), (4, 1), (5, 1), (5, 2), (6, 2)] {
            let s = build_rho_nk::<Q>(n, k).unwrap();
            let fast = correlation_tensor(&s).unwrap();
            let slow = brute_force_tensor(&s).unwrap();
            assert_eq!(fast.nonzero_elements.len(), slow.nonzero_elements.len(), "({n},{k})");
            for (t, v) in &slow.nonzero_elements {
                assert!((fast.get(t).to_f64_lossy() - v).abs() < 1e-10, "({n},{k}) {t}");
            }
        }
        assert!(brute_force_tensor(&build_rho_nk::<Q>(7, 2).unwrap()).is_err());
    }

    #[test]
    fn size_cap() {
        let s = GhzDiagonalState::<f64>::pure_ghz(17).unwrap();
        assert!(matches!(hs_norm_sq(&s), Err(Error::SizeLimit { .. })));
        assert!(hs_norm_sq(&GhzDiagonalState::<f64>::pure_ghz(16).unwrap()).is_ok());
    }

    #[test]
    fn detection_verdicts() {
        let v = |n, k| detection_comparison(&build_rho_nk::<Q>(n, k).unwrap()).unwrap().verdict;
        assert_eq!(v(7, 2), DetectionVerdict::QfiOnly);
        assert_eq!(v(9, 3), DetectionVerdict::QfiOnly);
        assert_eq!(v(8, 3), DetectionVerdict::QfiOnly);
        // The all-z term pushes these over 1.
        assert_eq!(v(8, 2), DetectionVerdict::Both);
        assert_eq!(v(10, 3), DetectionVerdict::Both);
        let ghz = detection_comparison(&GhzDiagonalState::<Q>::pure_ghz(3).unwrap()).unwrap();
        assert_eq!(ghz.verdict, DetectionVerdict::Both);
        let mixed = detection_comparison(&GhzDiagonalState::<Q>::maximally_mixed(3).unwrap()).unwrap();
        assert_eq!(mixed.verdict, DetectionVerdict::Neither);
        assert_eq!(DetectionVerdict::QfiOnly.to_string(), "QFI-only detection");
    }

    #[test]
    fn summary_json() {
        let json = serde_json::to_value(correlation_tensor(&bell()).unwrap()).unwrap();
        assert_eq!(json["hs_norm_sq"], "3/1");
        assert_eq!(json["nonzero_elements"]["yy"], "-1/1");
        assert_eq!(json["bell_upper_bound_satisfied"], false);
    }
}
