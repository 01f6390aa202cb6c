//! Quantum Fisher information for phase shifts generated by
//! `Z = (sigma_z^(1) + ... + sigma_z^(n)) / 2`.
//!
//! Three independent routes are provided: the general spectral formula on a
//! dense eigendecomposition, the sector formula for GHZ-diagonal states, and
//! closed forms for the `rho_{n,k}` / `rho_{n,k,m}` families.

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dense::{check_dense, DenseMatrix};
use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;
use crate::state::{all_ones, binomial, binomial_prefix_sum, raw_weight, FamilyParams, GhzDiagonalState};

/// Tolerance for the normalization and orthonormality checks of [`qfi_spectral`].
pub const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Pairs with `lambda_i + lambda_j` at or below this are outside the support.
pub const SUPPORT_CUTOFF: f64 = 1e-14;

/// The collective generator `Z`, diagonal in the computational basis with
/// entry `(#0(r) - #1(r)) / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhaseGenerator {
    pub n: u32,
}

impl PhaseGenerator {
    pub fn new(n: u32) -> Self {
        Self { n }
    }

    pub fn eigenvalue(&self, r: u64) -> f64 {
        raw_weight(self.n, r) as f64 / 2.0
    }

    pub fn exact_eigenvalue(&self, r: u64) -> BigRational {
        BigRational::new(raw_weight(self.n, r).into(), 2.into())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..=all_ones(self.n)).map(|r| self.eigenvalue(r)).collect()
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        check_dense(self.n)?;
        let diag = self.diagonal();
        let dim = diag.len();
        Ok(DenseMatrix(DMatrix::from_fn(dim, dim, |r, c| {
            if r == c { Complex64::new(diag[r], 0.0) } else { Complex64::new(0.0, 0.0) }
        })))
    }
}

/// `F_Q = 2 sum_{i,j} (l_i - l_j)^2 / (l_i + l_j) |<i|Z|j>|^2` over an
/// eigendecomposition with eigenvector columns.
pub fn qfi_spectral(values: &[f64], vectors: &DMatrix<Complex64>, generator: &PhaseGenerator) -> Result<f64> {
    let dim = 1usize << generator.n;
    if vectors.nrows() != dim || vectors.ncols() != values.len() {
        return Err(Error::Spectral(format!(
            "shape mismatch: {} values, {}x{} vectors, generator dimension {dim}",
            values.len(),
            vectors.nrows(),
            vectors.ncols()
        )));
    }
    if let Some(v) = values.iter().find(|&&v| v < -SPECTRAL_TOLERANCE) {
        return Err(Error::Spectral(format!("negative eigenvalue {v:e}")));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > SPECTRAL_TOLERANCE {
        return Err(Error::Spectral(format!("eigenvalues sum to {total}, not 1")));
    }
    let gram = vectors.adjoint() * vectors;
    let worst = (0..gram.nrows())
        .flat_map(|r| (0..gram.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| (gram[(r, c)] - if r == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    if worst > SPECTRAL_TOLERANCE {
        return Err(Error::Spectral(format!("eigenvectors not orthonormal (deviation {worst:e})")));
    }

    let z = generator.diagonal();
    let mut zv = vectors.clone();
    for (r, mut row) in zv.row_iter_mut().enumerate() {
        row *= Complex64::new(z[r], 0.0);
    }
    let elements = vectors.adjoint() * zv;
    let lam: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let mut total = 0.0;
    for i in 0..lam.len() {
        for j in 0..lam.len() {
            let sum = lam[i] + lam[j];
            if sum <= SUPPORT_CUTOFF {
                continue;
            }
            let diff = lam[i] - lam[j];
            total += diff * diff / sum * elements[(i, j)].norm_sqr();
        }
    }
    Ok(2.0 * total)
}

/// Spectral QFI of a dense state (Hermitian eigensolver, then [`qfi_spectral`]).
pub fn qfi_dense(state: &DenseMatrix, generator: &PhaseGenerator) -> Result<f64> {
    let eig = state.hermitian_eigen()?;
    qfi_spectral(&eig.values, &eig.vectors, generator)
}

/// `F_Q = sum_i w_i^2 (lambda_i^+ - lambda_i^-)^2 / (lambda_i^+ + lambda_i^-)`.
pub fn qfi_ghz_diagonal<S: Scalar>(state: &GhzDiagonalState<S>) -> S {
    let n = state.n();
    let mut total = S::zero();
    for i in 0..state.sector_count() {
        let sum = state.sector_sum(i);
        if sum.is_zero() {
            continue;
        }
        let delta = state.coherence(i);
        let w = S::from_int(raw_weight(n, i as u64));
        total = total + w.clone() * w * delta.clone() * delta / sum;
    }
    total
}

fn check_nk(n: u64, k: u64) -> Result<()> {
    if k < 1 || 2 * k >= n {
        return Err(domain(format!("closed forms need 1 <= k < n/2, got n = {n}, k = {k}")));
    }
    Ok(())
}

fn weighted_sum(n: u64, k: u64) -> BigUint {
    // sum_{j<k} (n-2j)^2 C(n,j)
    let mut term = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..k {
        let w = n - 2 * j;
        total += &term * (w * w);
        term *= n - j;
        term /= j + 1;
    }
    total
}

/// `lambda sum_{j=0}^{k-1} (n - 2j)^2 C(n, j)` with `lambda = 1/sum_{j<=k} C(n,j)`.
pub fn qfi_closed_nk(n: u64, k: u64) -> Result<BigRational> {
    check_nk(n, k)?;
    Ok(BigRational::new(weighted_sum(n, k).into(), binomial_prefix_sum(n, k).into()))
}

/// Closed form for `rho_{n,k,m}`: the same numerator, normalizer up to `k + m`.
pub fn qfi_closed_family(params: FamilyParams) -> BigRational {
    let (n, k) = (params.n as u64, params.k as u64);
    BigRational::new(weighted_sum(n, k).into(), binomial_prefix_sum(n, params.mixing_top() as u64).into())
}

/// `(n - 2k)^2 k / (n + 1)`.
pub fn qfi_lower_bound_nk(n: u64, k: u64) -> Result<BigRational> {
    check_nk(n, k)?;
    let gap = BigInt::from(n - 2 * k);
    Ok(BigRational::new(&gap * &gap * BigInt::from(k), BigInt::from(n + 1)))
}

/// `(n-2k)^2 k(k+1)...(k+m) / [m (n-k)(n-k-1)...(n-k-m)]`, products as printed.
pub fn qfi_lower_bound_nkm(n: u64, k: u64, m: u64) -> Result<BigRational> {
    check_nk(n, k)?;
    if m < 1 {
        return Err(domain("mixing width m must be at least 1"));
    }
    if k + m > n - k {
        return Err(domain(format!("k + m = {} exceeds n - k = {}", k + m, n - k)));
    }
    let gap = BigInt::from(n - 2 * k);
    let mut num = &gap * &gap;
    let mut den = BigInt::from(m);
    for t in 0..=m {
        num *= k + t;
        den *= n - k - t;
    }
    Ok(BigRational::new(num, den))
}

/// `S_{n,k} = sum_{j<k} C(n,j) / sum_{j<=k} C(n,j)`.
pub fn s_nk(n: u64, k: u64) -> Result<BigRational> {
    if k < 1 || k > n {
        return Err(domain(format!("S_(n,k) needs 1 <= k <= n, got n = {n}, k = {k}")));
    }
    Ok(BigRational::new(binomial_prefix_sum(n, k - 1).into(), binomial_prefix_sum(n, k).into()))
}

/// `1 + C(n,k)/C(n,k-1) = (n+1)/k`, the bound on `1/S_{n,k}`.
pub fn s_nk_inverse_bound(n: u64, k: u64) -> Result<BigRational> {
    if k < 1 || k > n {
        return Err(domain(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let ratio = BigRational::new(binomial(n, k).into(), binomial(n, k - 1).into());
    Ok(BigRational::one() + ratio)
}

/// `F_Q^{n,k} / (n k)`.
pub fn nk_limit_ratio(n: u64, k: u64) -> Result<BigRational> {
    Ok(qfi_closed_nk(n, k)? / BigRational::from_integer(BigInt::from(n * k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparabilityVerdict {
    /// `F_Q > n`: no separable state reaches this value.
    Entangled,
    /// `F_Q <= n`; separability is never claimed.
    Inconclusive,
}

pub fn separability_test<S: Scalar>(f_q: &S, n: u32) -> SeparabilityVerdict {
    let bound = S::from_int(n as i64);
    if *f_q > bound.clone() + S::tolerance() {
        SeparabilityVerdict::Entangled
    } else {
        SeparabilityVerdict::Inconclusive
    }
}

/// `k = round(a n)` (half rounds up), clipped into `[1, ceil(n/2) - 1]`.
pub fn scan_k(n: u64, a: &BigRational) -> Result<u64> {
    if !a.is_positive() || *a >= BigRational::new(1.into(), 2.into()) {
        return Err(domain(format!("scaling ratio must satisfy 0 < a < 1/2, got {a}")));
    }
    let top = n.div_ceil(2).saturating_sub(1);
    if top < 1 {
        return Err(domain(format!("no valid k for n = {n}")));
    }
    let scaled = a * BigRational::from_integer(BigInt::from(n)) + BigRational::new(1.into(), 2.into());
    let rounded: u64 = scaled.floor().to_integer().try_into().unwrap_or(u64::MAX);
    Ok(rounded.clamp(1, top))
}

mod rational_text {
    use num_rational::BigRational;
    use serde::Serializer;

    use crate::scalar::Scalar;

    pub fn serialize<Z: Serializer>(value: &BigRational, s: Z) -> Result<Z::Ok, Z::Error> {
        s.serialize_str(&value.to_wire())
    }

    pub mod option {
        use super::*;

        pub fn serialize<Z: Serializer>(value: &Option<BigRational>, s: Z) -> Result<Z::Ok, Z::Error> {
            match value {
                Some(v) => s.serialize_some(&v.to_wire()),
                None => s.serialize_none(),
            }
        }
    }
}

/// QFI value with the family bounds and scaling ratios, all exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QfiReport {
    pub n: u64,
    pub k: u64,
    pub m: Option<u64>,
    #[serde(with = "rational_text::option")]
    pub a: Option<BigRational>,
    #[serde(with = "rational_text")]
    pub f_q: BigRational,
    /// `f_q / n`.
    #[serde(with = "rational_text")]
    pub snl_ratio: BigRational,
    /// `(n-2k)^2 k/(n+1)`; only for `m = 0`, where it bounds `f_q`.
    #[serde(with = "rational_text::option")]
    pub bound_13: Option<BigRational>,
    /// Mixed-family bound; only for `m >= 1`.
    #[serde(with = "rational_text::option")]
    pub bound_25: Option<BigRational>,
    #[serde(with = "rational_text")]
    pub s_nk: BigRational,
    /// `f_q / (a (1-2a) n^2)`.
    #[serde(with = "rational_text::option")]
    pub ratio_paper15: Option<BigRational>,
    /// `f_q / (a (1-2a)^2 n^2)`, the normalization implied by the lower bound.
    #[serde(with = "rational_text::option")]
    pub ratio_13asymptotic: Option<BigRational>,
    pub verdict: SeparabilityVerdict,
}

fn verdict_exact(f_q: &BigRational, n: u64) -> SeparabilityVerdict {
    if *f_q > BigRational::from_integer(BigInt::from(n)) {
        SeparabilityVerdict::Entangled
    } else {
        SeparabilityVerdict::Inconclusive
    }
}

/// Report for `rho_{n,k}` (`m = 0`) or `rho_{n,k,m}`; needs no state table,
/// so `n` is unbounded.
pub fn qfi_report(n: u64, k: u64, m: u64) -> Result<QfiReport> {
    check_nk(n, k)?;
    let small = |v: u64| u32::try_from(v).map_err(|_| domain(format!("{v} out of range")));
    let params = FamilyParams::new(small(n)?, small(k)?, small(m)?)?;
    let f_q = qfi_closed_family(params);
    let nq = BigRational::from_integer(BigInt::from(n));
    Ok(QfiReport {
        n,
        k,
        m: (m > 0).then_some(m),
        a: None,
        snl_ratio: &f_q / &nq,
        bound_13: if m == 0 { Some(qfi_lower_bound_nk(n, k)?) } else { None },
        bound_25: if m > 0 { Some(qfi_lower_bound_nkm(n, k, m)?) } else { None },
        s_nk: s_nk(n, k)?,
        ratio_paper15: None,
        ratio_13asymptotic: None,
        verdict: verdict_exact(&f_q, n),
        f_q,
    })
}

/// Report for `k = round(a n)`, including both scaling normalizations. Only
/// `bound_13 <= f_q` is a theorem; the ratios are reported as computed.
pub fn asymptotic_report(n: u64, a: &BigRational) -> Result<QfiReport> {
    let k = scan_k(n, a)?;
    let mut report = qfi_report(n, k, 0)?;
    let n2 = BigRational::from_integer(BigInt::from(n) * BigInt::from(n));
    let one_minus = BigRational::one() - a * BigRational::from_integer(2.into());
    report.ratio_paper15 = Some(&report.f_q / (a * &one_minus * &n2));
    report.ratio_13asymptotic = Some(&report.f_q / (a * &one_minus * &one_minus * &n2));
    report.a = Some(a.clone());
    Ok(report)
}
