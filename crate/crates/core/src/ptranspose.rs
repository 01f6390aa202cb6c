//! Closed-form partial transposition of GHZ-diagonal states.
//!
//! Transposing the qubits in a mask `M` keeps the diagonal and moves the
//! antidiagonal entry of row `r` to row `r ^ M`. The result is again
//! diagonal-antidiagonal, so sector `i` of the transposed state carries
//! `(s_i, delta_j)` with `j = canon(i ^ M)` and eigenvalues
//! `(s_i +- delta_j) / 2`, where `s = lambda^+ + lambda^-` and
//! `delta = lambda^+ - lambda^-`.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dense::{to_dense, DenseMatrix};
use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::state::{all_ones, canonical, GhzDiagonalState, RepIndex};

/// Qubit count up to which [`cut_classification`] enumerates every subset.
pub const EXHAUSTIVE_SUBSET_LIMIT: u32 = 12;

/// Subsets drawn per cut size above [`EXHAUSTIVE_SUBSET_LIMIT`].
pub const SAMPLED_SUBSETS_PER_CUT: usize = 256;

const SAMPLING_SEED: u64 = 0x5eed_c075;

/// Nonempty proper subset of qubits, stored as an n-bit mask in which qubit
/// `q` (1-based) is bit `n - q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QubitSubset {
    n: u32,
    mask: u64,
}

impl QubitSubset {
    pub fn from_mask(n: u32, mask: u64) -> Result<Self> {
        if !(2..=63).contains(&n) {
            return Err(domain(format!("unsupported qubit count {n}")));
        }
        if mask == 0 || mask >= all_ones(n) {
            return Err(domain(format!("mask {mask:#b} is not a nonempty proper subset of {n} qubits")));
        }
        Ok(Self { n, mask })
    }

    /// Build from 1-based qubit labels.
    pub fn from_qubits(n: u32, qubits: &[u32]) -> Result<Self> {
        let mut mask = 0u64;
        for &q in qubits {
            if q == 0 || q > n {
                return Err(domain(format!("qubit label {q} outside 1..={n}")));
            }
            mask |= 1u64 << (n - q);
        }
        Self::from_mask(n, mask)
    }

    pub fn single(n: u32, qubit: u32) -> Result<Self> {
        Self::from_qubits(n, &[qubit])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn size(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn qubits(&self) -> Vec<u32> {
        (1..=self.n).filter(|q| self.mask >> (self.n - q) & 1 == 1).collect()
    }

    pub fn complement(&self) -> Self {
        Self { n: self.n, mask: all_ones(self.n) ^ self.mask }
    }
}

/// Sector whose coherence lands in sector `i` after transposing `subset`.
pub fn transpose_partner(i: RepIndex, subset: QubitSubset) -> Result<RepIndex> {
    if i.n() != subset.n() {
        return Err(domain("index and subset disagree on the qubit count"));
    }
    RepIndex::new(i.n(), canonical(i.n(), i.value() ^ subset.mask()))
}

/// Representatives constraining sector `j` under single-qubit transpositions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaSet {
    pub j: RepIndex,
    pub members: BTreeSet<RepIndex>,
}

/// `{NOT_{2..n}(j)} U {NOT_k(j) | k = 1..n}`, canonicalized. `NOT_1(j)` and
/// `NOT_{2..n}(j)` are complements, so they name the same sector.
pub fn omega_set(j: RepIndex) -> OmegaSet {
    let n = j.n();
    let rest = all_ones(n - 1);
    let mut members = BTreeSet::new();
    members.insert(RepIndex::canonical(n, j.value() ^ rest).expect("in range"));
    for q in 1..=n {
        members.insert(RepIndex::canonical(n, j.value() ^ (1u64 << (n - q))).expect("in range"));
    }
    OmegaSet { j, members }
}

/// Eigenvalue pairs `(Lambda_i^{S+}, Lambda_i^{S-})` of a partial transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct PtSpectrum<S: Scalar> {
    pub subset: QubitSubset,
    pub pairs: Vec<(S, S)>,
}

impl<S: Scalar> PtSpectrum<S> {
    pub fn min(&self) -> S {
        let mut values = self.pairs.iter().flat_map(|(a, b)| [a, b]);
        let first = values.next().expect("nonempty spectrum").clone();
        values.fold(first, |acc, x| if *x < acc { x.clone() } else { acc })
    }

    pub fn trace(&self) -> S {
        self.pairs.iter().fold(S::zero(), |acc, (a, b)| acc + a.clone() + b.clone())
    }

    /// All `2^n` eigenvalues, sorted.
    pub fn sorted_values(&self) -> Vec<S> {
        let mut v: Vec<S> = self.pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        v.sort_by(|a, b| a.partial_cmp(b).expect("ordered scalars"));
        v
    }
}

fn check_subset<S: Scalar>(state: &GhzDiagonalState<S>, subset: QubitSubset) -> Result<()> {
    if state.n() != subset.n() {
        return Err(domain(format!("state has {} qubits, subset is over {}", state.n(), subset.n())));
    }
    Ok(())
}

/// Exact spectrum of the partial transpose; no matrix is built.
pub fn pt_spectrum<S: Scalar>(state: &GhzDiagonalState<S>, subset: QubitSubset) -> Result<PtSpectrum<S>> {
    check_subset(state, subset)?;
    let n = state.n();
    let two = S::from_int(2);
    let pairs = (0..state.sector_count() as u64)
        .map(|i| {
            let j = canonical(n, i ^ subset.mask()) as usize;
            let s = state.sector_sum(i as usize);
            let d = state.coherence(j);
            ((s.clone() + d.clone()) / two.clone(), (s - d) / two.clone())
        })
        .collect();
    Ok(PtSpectrum { subset, pairs })
}

/// Smallest eigenvalue of the partial transpose; negative certifies NPPT.
pub fn min_pt_eigenvalue<S: Scalar>(state: &GhzDiagonalState<S>, subset: QubitSubset) -> Result<S> {
    check_subset(state, subset)?;
    let n = state.n();
    let two = S::from_int(2);
    let mut best: Option<S> = None;
    for i in 0..state.sector_count() as u64 {
        let j = canonical(n, i ^ subset.mask()) as usize;
        let low = (state.sector_sum(i as usize) - state.coherence(j).abs()) / two.clone();
        if best.as_ref().is_none_or(|b| low < *b) {
            best = Some(low);
        }
    }
    Ok(best.expect("at least one sector"))
}

/// Violation of the single-qubit condition: `s_i < |delta_j|` with `i` in `Omega_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PptWitness {
    pub j: u64,
    pub i: u64,
}

/// Result of the `min_{i in Omega_j} s_i >= |delta_j|` check.
///
/// Passing means every single-qubit partial transpose is positive, i.e. no
/// `1:(n-1)` cut is distillable, so two-party entanglement cannot be
/// unlocked; hence the name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NonUnlockableCertificate {
    pub holds: bool,
    pub witness: Option<PptWitness>,
}

pub fn ppt_single_qubit_certificate<S: Scalar>(state: &GhzDiagonalState<S>) -> NonUnlockableCertificate {
    let n = state.n();
    for j in 0..state.sector_count() as u64 {
        let delta = state.coherence(j as usize).abs();
        let omega = omega_set(RepIndex::new(n, j).expect("representative"));
        // Lexicographically smallest violating member.
        if let Some(i) = omega.members.iter().find(|i| !state.sector_sum(i.value() as usize).approx_ge(&delta)) {
            return NonUnlockableCertificate { holds: false, witness: Some(PptWitness { j, i: i.value() }) };
        }
    }
    NonUnlockableCertificate { holds: true, witness: None }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PptStatus {
    Ppt,
    Nppt,
}

/// One row of a cut table: every subset of `cut_size` qubits (or a sample for
/// large `n`) was transposed; `witness_mask` is the first NPPT subset found in
/// lexicographic order of qubit labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CutRow {
    pub cut_size: u32,
    pub status: PptStatus,
    pub witness_mask: Option<u64>,
    pub exhaustive: bool,
    pub subsets_checked: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutTable {
    pub n: u32,
    pub rows: Vec<CutRow>,
}

impl CutTable {
    pub fn status(&self, cut_size: u32) -> Option<PptStatus> {
        self.rows.iter().find(|r| r.cut_size == cut_size).map(|r| r.status)
    }
}

/// Subsets of `size` qubits; the flag is `false` when the list is a sample.
pub fn subsets_of_size(n: u32, size: u32) -> (Vec<QubitSubset>, bool) {
    if n <= EXHAUSTIVE_SUBSET_LIMIT {
        let all = (1..=n)
            .combinations(size as usize)
            .map(|qs| QubitSubset::from_qubits(n, &qs).expect("valid subset"))
            .collect();
        return (all, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    rng.set_stream(size as u64);
    let mut picked: Vec<QubitSubset> = (0..SAMPLED_SUBSETS_PER_CUT)
        .map(|_| {
            let qs: Vec<u32> = sample(&mut rng, n as usize, size as usize).iter().map(|q| q as u32 + 1).collect();
            QubitSubset::from_qubits(n, &qs).expect("valid subset")
        })
        .collect();
    picked.sort_by_key(|s| std::cmp::Reverse(s.mask()));
    picked.dedup();
    (picked, false)
}

/// PPT/NPPT per cut size `1..=n/2`. PT over a subset and over its complement
/// share a spectrum, so larger sizes carry no extra information.
pub fn cut_classification<S: Scalar>(state: &GhzDiagonalState<S>) -> CutTable {
    classify_cuts(state, 1..=state.n() / 2)
}

pub fn classify_cuts<S: Scalar>(state: &GhzDiagonalState<S>, sizes: impl IntoIterator<Item = u32>) -> CutTable {
    let n = state.n();
    let rows = sizes
        .into_iter()
        .filter(|&m| m >= 1 && m < n)
        .map(|cut_size| {
            let (subsets, exhaustive) = subsets_of_size(n, cut_size);
            let witness = subsets
                .par_iter()
                .find_first(|s| !min_pt_eigenvalue(state, **s).expect("matching n").approx_ge(&S::zero()));
            CutRow {
                cut_size,
                status: if witness.is_some() { PptStatus::Nppt } else { PptStatus::Ppt },
                witness_mask: witness.map(|s| s.mask()),
                exhaustive,
                subsets_checked: subsets.len() as u64,
            }
        })
        .collect();
    CutTable { n, rows }
}

/// Dense element-wise partial transpose, for validating [`pt_spectrum`].
pub fn pt_dense_oracle<S: Scalar>(state: &GhzDiagonalState<S>, subset: QubitSubset) -> Result<DenseMatrix> {
    check_subset(state, subset)?;
    Ok(to_dense(state)?.partial_transpose(subset.mask()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DiagAntidiag;
    use crate::scalar::ratio;
    use crate::state::{build_rho_nk, build_rho_nkm, sector_ones};
    use num_rational::BigRational;
    use num_traits::{Signed, Zero};

    type Q = BigRational;

    fn rep(n: u32, v: u64) -> RepIndex {
        RepIndex::new(n, v).unwrap()
    }

    #[test]
    fn partner_examples() {
        let q1 = QubitSubset::single(4, 1).unwrap();
        let q4 = QubitSubset::single(4, 4).unwrap();
        assert_eq!(transpose_partner(rep(4, 0), q1).unwrap().value(), 7);
        assert_eq!(transpose_partner(rep(4, 0), q4).unwrap().value(), 1);
        for n in 2..=7 {
            for mask in 1..all_ones(n) {
                let s = QubitSubset::from_mask(n, mask).unwrap();
                for i in 0..1u64 << (n - 1) {
                    let p = transpose_partner(rep(n, i), s).unwrap();
                    assert_eq!(transpose_partner(p, s).unwrap().value(), i);
                }
            }
        }
    }

    #[test]
    fn partner_for_first_qubit_is_flip_of_the_rest() {
        // NOT_{2..n}(j) for the first qubit, NOT_k(j) elsewhere.
        for n in 2..=8u32 {
            for j in 0..1u64 << (n - 1) {
                let first = transpose_partner(rep(n, j), QubitSubset::single(n, 1).unwrap()).unwrap();
                assert_eq!(first.value(), j ^ all_ones(n - 1));
                for q in 2..=n {
                    let p = transpose_partner(rep(n, j), QubitSubset::single(n, q).unwrap()).unwrap();
                    assert_eq!(p.value(), j ^ (1 << (n - q)));
                }
            }
        }
    }

    #[test]
    fn subset_validation() {
        assert!(QubitSubset::from_mask(4, 0).is_err());
        assert!(QubitSubset::from_mask(4, 15).is_err());
        assert!(QubitSubset::from_qubits(4, &[5]).is_err());
        let s = QubitSubset::from_qubits(5, &[1, 4]).unwrap();
        assert_eq!(s.mask(), 0b10010);
        assert_eq!(s.qubits(), vec![1, 4]);
        assert_eq!(s.complement().qubits(), vec![2, 3, 5]);
    }

    #[test]
    fn omega_examples() {
        let vals = |j| omega_set(rep(4, j)).members.iter().map(|r| r.value()).collect::<Vec<_>>();
        assert_eq!(vals(0), vec![1, 2, 4, 7]);
        assert_eq!(vals(7), vec![0, 3, 5, 6]);
    }

    #[test]
    fn omega_members_are_one_flip_away_in_ones_count() {
        for n in 2..=10u32 {
            for j in 0..1u64 << (n - 1) {
                let oj = j.count_ones() as i64;
                let set = omega_set(rep(n, j));
                assert!(set.members.len() <= n as usize);
                for m in &set.members {
                    let om = m.ones() as i64;
                    assert!((om - oj).abs() == 1 || (n as i64 - om - oj).abs() == 1);
                }
            }
        }
    }

    #[test]
    fn bell_state_partial_transpose() {
        let bell = GhzDiagonalState::<Q>::pure_ghz(2).unwrap();
        let spec = pt_spectrum(&bell, QubitSubset::single(2, 2).unwrap()).unwrap();
        assert_eq!(spec.pairs[0], (ratio(1, 2), ratio(1, 2)));
        assert_eq!(spec.pairs[1], (ratio(1, 2), ratio(-1, 2)));
        assert_eq!(spec.trace(), ratio(1, 1));
        assert_eq!(spec.min(), ratio(-1, 2));
    }

    #[test]
    fn family_is_single_qubit_ppt() {
        for n in 3..=12u32 {
            for k in 1..n {
                if 2 * k >= n {
                    continue;
                }
                let s = build_rho_nk::<Q>(n, k).unwrap();
                assert!(ppt_single_qubit_certificate(&s).holds, "({n},{k})");
                for q in 1..=n {
                    assert!(!min_pt_eigenvalue(&s, QubitSubset::single(n, q).unwrap()).unwrap().is_negative());
                }
            }
        }
    }

    #[test]
    fn pure_ghz_fails_with_witness_at_zero() {
        for n in 2..=8 {
            let cert = ppt_single_qubit_certificate(&GhzDiagonalState::<Q>::pure_ghz(n).unwrap());
            assert!(!cert.holds);
            assert_eq!(cert.witness.unwrap().j, 0);
            let table = cut_classification(&GhzDiagonalState::<Q>::pure_ghz(n).unwrap());
            assert!(table.rows.iter().all(|r| r.status == PptStatus::Nppt));
        }
    }

    #[test]
    fn uniform_and_diagonal_states_are_ppt_everywhere() {
        let mixed = GhzDiagonalState::<Q>::maximally_mixed(5).unwrap();
        assert!(ppt_single_qubit_certificate(&mixed).holds);
        // lambda^+ = lambda^- in every sector: zero antidiagonal.
        let diag = GhzDiagonalState::<Q>::from_fn(5, |i| {
            let w = ratio(i as i64 + 1, 2 * 136);
            (w.clone(), w)
        })
        .unwrap();
        for mask in 1..31 {
            let s = QubitSubset::from_mask(5, mask).unwrap();
            assert!(!min_pt_eigenvalue(&diag, s).unwrap().is_negative());
        }
    }

    #[test]
    fn rho_6_2_cut_table() {
        let table = cut_classification(&build_rho_nk::<Q>(6, 2).unwrap());
        let statuses: Vec<_> = table.rows.iter().map(|r| (r.cut_size, r.status)).collect();
        assert_eq!(statuses, vec![(1, PptStatus::Ppt), (2, PptStatus::Nppt), (3, PptStatus::Nppt)]);
        assert_eq!(table.rows[0].witness_mask, None);
        let w = table.rows[1].witness_mask.unwrap();
        let s = QubitSubset::from_mask(6, w).unwrap();
        assert!(min_pt_eigenvalue(&build_rho_nk::<Q>(6, 2).unwrap(), s).unwrap() < Q::zero());
        assert!(table.rows.iter().all(|r| r.exhaustive));
    }

    #[test]
    fn nkm_family_ppt_up_to_mixing_width_plus_one() {
        for n in 5..=9u32 {
            for k in 1..n {
                for m in 1..n {
                    let Ok(state) = build_rho_nkm::<Q>(n, k, m) else { continue };
                    let table = classify_cuts(&state, 1..=(m + 1).min(n / 2));
                    assert!(table.rows.iter().all(|r| r.status == PptStatus::Ppt), "({n},{k},{m})");
                }
            }
        }
    }

    #[test]
    fn sampled_cuts_above_exhaustive_limit() {
        let table = classify_cuts(&build_rho_nk::<f64>(14, 3).unwrap(), [1, 2]);
        assert!(table.rows.iter().all(|r| !r.exhaustive && r.subsets_checked > 0));
        assert_eq!(table.rows[0].status, PptStatus::Ppt);
        assert_eq!(table.rows[1].status, PptStatus::Nppt);
        let again = classify_cuts(&build_rho_nk::<f64>(14, 3).unwrap(), [1, 2]);
        assert_eq!(table, again);
    }

    #[test]
    fn spectrum_matches_exact_diag_antidiag_transpose() {
        let state = build_rho_nkm::<Q>(7, 1, 1).unwrap();
        for mask in 1..all_ones(7) {
            let subset = QubitSubset::from_mask(7, mask).unwrap();
            let mut exact = DiagAntidiag::from_state(&state).partial_transpose(mask).block_eigenvalues().unwrap();
            exact.sort();
            assert_eq!(pt_spectrum(&state, subset).unwrap().sorted_values(), exact);
        }
    }

    #[test]
    fn complement_subset_has_same_spectrum() {
        let state = build_rho_nk::<Q>(7, 2).unwrap();
        for mask in 1..all_ones(7) {
            let s = QubitSubset::from_mask(7, mask).unwrap();
            assert_eq!(
                pt_spectrum(&state, s).unwrap().sorted_values(),
                pt_spectrum(&state, s.complement()).unwrap().sorted_values()
            );
        }
    }

    #[test]
    fn nppt_needs_a_zero_weight_sector_within_reach() {
        // rho_{n,k}: NPPT at cut 2 iff some sector with k+1 ones is unpopulated.
        for n in 5..=11u32 {
            for k in 1..n {
                if 2 * k >= n {
                    continue;
                }
                let table = classify_cuts(&build_rho_nk::<Q>(n, k).unwrap(), [2]);
                let expect = sector_ones(n, (1u64 << (k + 1)) - 1) > k;
                assert_eq!(table.rows[0].status == PptStatus::Nppt, expect, "({n},{k})");
            }
        }
    }
}
