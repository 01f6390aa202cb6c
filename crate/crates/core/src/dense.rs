//! Dense and diagonal-antidiagonal realizations of GHZ-diagonal states.
//!
//! The dense matrices are floating-point oracles for the sector-level
//! algorithms; the diagonal-antidiagonal form is the exact computational-basis
//! picture and stays generic over the scalar.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::scalar::Scalar;
use crate::state::{all_ones, GhzDiagonalState, RepIndex, Sign};

/// Default cap on the qubit count of dense oracles (matrix side `2^12`).
pub const DEFAULT_DENSE_LIMIT: u32 = 12;

/// Environment override for [`DEFAULT_DENSE_LIMIT`].
pub const DENSE_LIMIT_ENV: &str = "GHZMETRO_DENSE_LIMIT";

pub fn dense_limit() -> u32 {
    std::env::var(DENSE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DENSE_LIMIT)
}

pub(crate) fn check_dense(n: u32) -> Result<()> {
    let limit = dense_limit();
    if n > limit {
        return Err(Error::SizeLimit { what: "dense matrix", n, limit });
    }
    Ok(())
}

/// Swap the bits selected by `mask` between a row and a column index.
#[inline]
pub(crate) fn transpose_bits(row: u64, col: u64, mask: u64) -> (u64, u64) {
    let diff = (row ^ col) & mask;
    (row ^ diff, col ^ diff)
}

/// Complex square matrix used by the numerical oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(pub DMatrix<Complex64>);

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.0;
        (0..m.nrows()).all(|r| (0..=r).all(|c| (m[(r, c)] - m[(c, r)].conj()).norm() <= tol))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Element-wise partial transposition of the qubits in `mask`
    /// (bit `n - q` for qubit `q`, qubit 1 being the most significant).
    pub fn partial_transpose(&self, mask: u64) -> Self {
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            for r in 0..dim {
                let v = self.0[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    let (r2, c2) = transpose_bits(r as u64, c as u64, mask);
                    out[(r2 as usize, c2 as usize)] = v;
                }
            }
        }
        Self(out)
    }

    /// Hermitian eigen-decomposition, sorted ascending.
    ///
    /// Backed by faer: nalgebra's implicit QR produces NaNs on some of the
    /// highly degenerate sparse partial transposes.
    pub fn hermitian_eigen(&self) -> Result<EigenDecomposition> {
        let dim = self.dim();
        let m = faer::Mat::<Complex64>::from_fn(dim, dim, |r, c| self.0[(r, c)]);
        let evd = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Spectral(format!("eigensolver failed: {e:?}")))?;
        let (s, u) = (evd.S().column_vector(), evd.U());
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
        let values = order.iter().map(|&i| s[i].re).collect();
        let vectors = DMatrix::from_fn(dim, dim, |r, c| u[(r, order[c])]);
        Ok(EigenDecomposition { values, vectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.hermitian_eigen()?.values)
    }

    /// `Tr[op * self]`.
    pub fn expectation(&self, op: &DenseMatrix) -> Complex64 {
        let dim = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                acc += op.0[(r, c)] * self.0[(c, r)];
            }
        }
        acc
    }

    pub fn conjugate_by(&self, unitary: &DenseMatrix) -> Self {
        Self(&unitary.0 * &self.0 * unitary.0.adjoint())
    }
}

/// `(|i> +- |~i>)/sqrt(2)` as a column of length `2^n`.
pub fn ghz_basis_vector(i: RepIndex, sign: Sign) -> Result<DVector<Complex64>> {
    let n = i.n();
    check_dense(n)?;
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::zeros(1usize << n);
    v[i.value() as usize] = Complex64::new(amp, 0.0);
    v[i.complement() as usize] = Complex64::new(if sign == Sign::Plus { amp } else { -amp }, 0.0);
    Ok(v)
}

/// Dense `2^n x 2^n` matrix of a GHZ-diagonal state.
pub fn to_dense<S: Scalar>(state: &GhzDiagonalState<S>) -> Result<DenseMatrix> {
    check_dense(state.n())?;
    let sparse = DiagAntidiag::from_state(state);
    let dim = sparse.dim();
    let mut m = DMatrix::zeros(dim, dim);
    let flip = all_ones(state.n()) as usize;
    for r in 0..dim {
        m[(r, r)] = Complex64::new(sparse.diag[r].to_f64_lossy(), 0.0);
        m[(r, flip ^ r)] = Complex64::new(sparse.anti[r].to_f64_lossy(), 0.0);
    }
    Ok(DenseMatrix(m))
}

/// Exact computational-basis form of a real diagonal-antidiagonal matrix:
/// `diag[r] = rho_{r,r}` and `anti[r] = rho_{r, 2^n-1-r}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagAntidiag<S: Scalar> {
    pub n: u32,
    pub diag: Vec<S>,
    pub anti: Vec<S>,
}

impl<S: Scalar> DiagAntidiag<S> {
    pub fn from_state(state: &GhzDiagonalState<S>) -> Self {
        let n = state.n();
        let dim = 1usize << n;
        let flip = all_ones(n) as usize;
        let two = S::from_int(2);
        let mut diag = vec![S::zero(); dim];
        let mut anti = vec![S::zero(); dim];
        for i in 0..state.sector_count() {
            let d = state.sector_sum(i) / two.clone();
            let c = state.coherence(i) / two.clone();
            diag[i] = d.clone();
            diag[flip ^ i] = d;
            anti[i] = c.clone();
            anti[flip ^ i] = c;
        }
        Self { n, diag, anti }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Partial transposition over `mask`: diagonal entries stay, the
    /// antidiagonal entry at row `r` moves to row `r ^ mask`.
    pub fn partial_transpose(&self, mask: u64) -> Self {
        let mut anti = vec![S::zero(); self.dim()];
        for (r, v) in self.anti.iter().enumerate() {
            anti[r ^ mask as usize] = v.clone();
        }
        Self { n: self.n, diag: self.diag.clone(), anti }
    }

    /// Eigenvalues `d +- c` of every `{r, ~r}` block; exact for rational scalars.
    /// Requires the block to be symmetric (`anti[r] == anti[~r]`).
    pub fn block_eigenvalues(&self) -> Result<Vec<S>> {
        let flip = all_ones(self.n) as usize;
        let mut out = Vec::with_capacity(self.dim());
        for r in 0..self.dim() / 2 {
            let (d1, d2) = (&self.diag[r], &self.diag[flip ^ r]);
            let (c1, c2) = (&self.anti[r], &self.anti[flip ^ r]);
            if !d1.approx_eq(d2) || !c1.approx_eq(c2) {
                return Err(domain(format!("block {r} is not of the form [[d, c], [c, d]]")));
            }
            out.push(d1.clone() + c1.clone());
            out.push(d1.clone() - c1.clone());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::build_rho_nk;
    use num_rational::BigRational;

    #[test]
    fn ghz_basis_vectors() {
        let v = ghz_basis_vector(RepIndex::new(4, 2).unwrap(), Sign::Plus).unwrap();
        let nz: Vec<usize> = (0..16).filter(|&r| v[r].norm() > 0.0).collect();
        assert_eq!(nz, vec![0b0010, 0b1101]);
        assert!((v.norm() - 1.0).abs() < 1e-15);

        let bell = ghz_basis_vector(RepIndex::new(2, 0).unwrap(), Sign::Plus).unwrap();
        assert!((bell[0].re - bell[3].re).abs() < 1e-15 && bell[1].norm() == 0.0);

        for i in 0..8 {
            let r = RepIndex::new(4, i).unwrap();
            let p = ghz_basis_vector(r, Sign::Plus).unwrap();
            let m = ghz_basis_vector(r, Sign::Minus).unwrap();
            assert!(p.dotc(&m).norm() < 1e-15);
        }
    }

    #[test]
    fn dense_entries_follow_sector_formulas() {
        let state = build_rho_nk::<BigRational>(6, 2).unwrap();
        let d = to_dense(&state).unwrap();
        assert!(d.is_hermitian(0.0));
        assert!((d.trace().re - 1.0).abs() < 1e-14);
        // Sector 0 is pure plus with lambda = 1/22.
        assert!((d.get(0, 0).re - 1.0 / 44.0).abs() < 1e-15);
        assert!((d.get(0, 63).re - 1.0 / 44.0).abs() < 1e-15);
        // Zero outside diagonal and antidiagonal.
        let off = (0..64).flat_map(|r| (0..64).map(move |c| (r, c))).filter(|&(r, c)| r != c && r + c != 63);
        assert!(off.into_iter().all(|(r, c)| d.get(r, c).norm() == 0.0));
    }

    #[test]
    fn maximally_mixed_is_scaled_identity() {
        let d = to_dense(&GhzDiagonalState::<f64>::maximally_mixed(3).unwrap()).unwrap();
        let id = DenseMatrix(DMatrix::identity(8, 8).map(|x: f64| Complex64::new(x / 8.0, 0.0)));
        assert!(d.max_abs_diff(&id) < 1e-16);
    }

    #[test]
    fn exact_block_spectrum_recovers_eigenvalue_table() {
        let state = build_rho_nk::<BigRational>(7, 2).unwrap();
        let mut blocks = DiagAntidiag::from_state(&state).block_eigenvalues().unwrap();
        let mut table: Vec<BigRational> = state.sectors().flat_map(|(_, p, m)| [p.clone(), m.clone()]).collect();
        blocks.sort();
        table.sort();
        assert_eq!(blocks, table);
    }

    #[test]
    fn dense_eigenvalues_recover_eigenvalue_table() {
        let state = build_rho_nk::<f64>(5, 2).unwrap();
        let eig = to_dense(&state).unwrap().eigenvalues().unwrap();
        let mut table: Vec<f64> = state.sectors().flat_map(|(_, p, m)| [*p, *m]).collect();
        table.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&table) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_twice_is_identity() {
        let d = to_dense(&build_rho_nk::<f64>(5, 2).unwrap()).unwrap();
        for mask in 1..31u64 {
            assert_eq!(d.partial_transpose(mask).partial_transpose(mask), d);
        }
        let exact = DiagAntidiag::from_state(&build_rho_nk::<BigRational>(5, 2).unwrap());
        assert_eq!(exact.partial_transpose(0b00110).partial_transpose(0b00110), exact);
        assert!(exact.partial_transpose(0).anti.iter().zip(&exact.anti).all(|(a, b)| a == b));
    }

    #[test]
    fn dense_limit_is_enforced() {
        assert!(matches!(check_dense(DEFAULT_DENSE_LIMIT + 1), Err(Error::SizeLimit { .. })) || std::env::var(DENSE_LIMIT_ENV).is_ok());
        assert!(check_dense(4).is_ok());
    }
}
