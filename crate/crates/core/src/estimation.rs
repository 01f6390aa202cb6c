//! Phase estimation with GHZ-diagonal probes: evolution under
//! `U = exp(-i theta Z)`, outcome statistics of two parity measurements,
//! classical Fisher information and a seeded Monte Carlo MLE experiment.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bell::{pauli_operator, PauliTuple};
use crate::dense::{check_dense, to_dense, DenseMatrix};
use crate::error::{domain, Error, Result};
use crate::qfi::{qfi_ghz_diagonal, PhaseGenerator};
use crate::scalar::Scalar;
use crate::state::{raw_weight, FamilyParams, GhzDiagonalState, RepIndex, Sign};

/// Probabilities below this count as zero in the Fisher sum.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Largest `|dP/dtheta|` accepted at a zero-probability outcome.
pub const ZERO_DERIVATIVE: f64 = 1e-9;

pub const MIN_SHOTS: u64 = 100;

/// Grid resolution of the likelihood scan inside the bracket.
pub const MLE_GRID_POINTS: usize = 513;

pub const MLE_TOLERANCE: f64 = 1e-8;

/// Name of the pinned generator recorded in every run.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Phase `theta` applied through the collective generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSetting {
    pub theta: f64,
    pub generator: PhaseGenerator,
}

impl PhaseSetting {
    pub fn new(n: u32, theta: f64) -> Self {
        Self { theta, generator: PhaseGenerator::new(n) }
    }

    /// Diagonal of `exp(-i theta Z)` in the computational basis.
    pub fn unitary(&self) -> Result<DenseMatrix> {
        check_dense(self.generator.n)?;
        let diag = self.generator.diagonal();
        let dim = diag.len();
        Ok(DenseMatrix(DMatrix::from_fn(dim, dim, |r, c| {
            if r == c { Complex64::from_polar(1.0, -self.theta * diag[r]) } else { Complex64::new(0.0, 0.0) }
        })))
    }
}

/// One sector of an evolved state: `rho_{ii} = rho_{~i~i} = population` and
/// `rho_{i,~i} = coherence`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolvedSector {
    pub index: u64,
    pub weight: i64,
    pub population: f64,
    pub coherence: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolvedState {
    pub n: u32,
    pub theta: f64,
    pub sectors: Vec<EvolvedSector>,
}

impl EvolvedState {
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let flip = dim - 1;
        let mut m = DMatrix::zeros(dim, dim);
        for s in &self.sectors {
            let i = s.index as usize;
            m[(i, i)] = Complex64::new(s.population, 0.0);
            m[(flip ^ i, flip ^ i)] = Complex64::new(s.population, 0.0);
            m[(i, flip ^ i)] = s.coherence;
            m[(flip ^ i, i)] = s.coherence.conj();
        }
        Ok(DenseMatrix(m))
    }
}

/// The antidiagonal entry of sector `i` picks up `exp(-i theta w_i)`;
/// populations are untouched.
pub fn evolve<S: Scalar>(state: &GhzDiagonalState<S>, theta: f64) -> EvolvedState {
    let n = state.n();
    let sectors = (0..state.sector_count())
        .map(|i| {
            let w = raw_weight(n, i as u64);
            EvolvedSector {
                index: i as u64,
                weight: w,
                population: state.sector_sum(i).to_f64_lossy() / 2.0,
                coherence: Complex64::from_polar(state.coherence(i).to_f64_lossy() / 2.0, -theta * w as f64),
            }
        })
        .collect();
    EvolvedState { n, theta, sectors }
}

/// `U rho U^dagger` on the dense matrix.
pub fn evolve_dense<S: Scalar>(state: &GhzDiagonalState<S>, theta: f64) -> Result<DenseMatrix> {
    let u = PhaseSetting::new(state.n(), theta).unitary()?;
    Ok(to_dense(state)?.conjugate_by(&u))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasurementModel {
    /// `sigma_x^{x n}` with outcomes `+-1`.
    GlobalParity,
    /// Project onto a sector, then measure `|i> <-> |~i>` parity inside it.
    SectorParity,
}

impl MeasurementModel {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementModel::GlobalParity => "global-parity",
            MeasurementModel::SectorParity => "sector-parity",
        }
    }
}

impl fmt::Display for MeasurementModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasurementModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global-parity" | "global" => Ok(MeasurementModel::GlobalParity),
            "sector-parity" | "sector" => Ok(MeasurementModel::SectorParity),
            other => Err(Error::Parse(format!("unknown measurement model {other:?}"))),
        }
    }
}

impl Serialize for MeasurementModel {
    fn serialize<Z: serde::Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Parity(Sign),
    Sector(u64, Sign),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sym = |s: &Sign| if *s == Sign::Plus { '+' } else { '-' };
        match self {
            Outcome::Parity(s) => write!(f, "{}", sym(s)),
            Outcome::Sector(i, s) => write!(f, "({i},{})", sym(s)),
        }
    }
}

/// Outcomes in a fixed order with `P`, `dP/dtheta` and `d2P/dtheta2`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeTable {
    pub model: MeasurementModel,
    pub theta: f64,
    pub outcomes: Vec<Outcome>,
    pub probabilities: Vec<f64>,
    pub first_derivatives: Vec<f64>,
    pub second_derivatives: Vec<f64>,
}

impl OutcomeTable {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Float copy of the sector data the statistics depend on.
#[derive(Clone, Debug)]
struct Probe {
    weights: Vec<f64>,
    sums: Vec<f64>,
    deltas: Vec<f64>,
}

impl Probe {
    fn new<S: Scalar>(state: &GhzDiagonalState<S>) -> Self {
        let n = state.n();
        let count = state.sector_count();
        Self {
            weights: (0..count).map(|i| raw_weight(n, i as u64) as f64).collect(),
            sums: (0..count).map(|i| state.sector_sum(i).to_f64_lossy()).collect(),
            deltas: (0..count).map(|i| state.coherence(i).to_f64_lossy()).collect(),
        }
    }

    fn max_phase_weight(&self) -> Option<f64> {
        self.weights
            .iter()
            .zip(&self.deltas)
            .filter(|(w, d)| **d != 0.0 && **w != 0.0)
            .map(|(w, _)| w.abs())
            .reduce(f64::max)
    }

    fn outcomes(&self, model: MeasurementModel) -> Vec<Outcome> {
        match model {
            MeasurementModel::GlobalParity => vec![Outcome::Parity(Sign::Plus), Outcome::Parity(Sign::Minus)],
            MeasurementModel::SectorParity => (0..self.sums.len() as u64)
                .flat_map(|i| [Outcome::Sector(i, Sign::Plus), Outcome::Sector(i, Sign::Minus)])
                .collect(),
        }
    }

    /// `(P, P', P'')` in outcome order.
    fn table(&self, model: MeasurementModel, theta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        match model {
            MeasurementModel::GlobalParity => {
                let (mut e, mut de, mut d2e) = (0.0, 0.0, 0.0);
                for ((w, d), _) in self.weights.iter().zip(&self.deltas).zip(&self.sums) {
                    let (s, c) = (w * theta).sin_cos();
                    e += d * c;
                    de -= d * w * s;
                    d2e -= d * w * w * c;
                }
                (
                    vec![(1.0 + e) / 2.0, (1.0 - e) / 2.0],
                    vec![de / 2.0, -de / 2.0],
                    vec![d2e / 2.0, -d2e / 2.0],
                )
            }
            MeasurementModel::SectorParity => {
                let len = 2 * self.sums.len();
                let (mut p, mut dp, mut d2p) = (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
                for ((w, d), s) in self.weights.iter().zip(&self.deltas).zip(&self.sums) {
                    let (sn, c) = (w * theta).sin_cos();
                    for sign in [1.0, -1.0] {
                        p.push((s + sign * d * c) / 2.0);
                        dp.push(-sign * d * w * sn / 2.0);
                        d2p.push(-sign * d * w * w * c / 2.0);
                    }
                }
                (p, dp, d2p)
            }
        }
    }

    fn probabilities(&self, model: MeasurementModel, theta: f64) -> Vec<f64> {
        self.table(model, theta).0
    }
}

pub fn outcome_distribution<S: Scalar>(state: &GhzDiagonalState<S>, theta: f64, model: MeasurementModel) -> OutcomeTable {
    let probe = Probe::new(state);
    let (probabilities, first_derivatives, second_derivatives) = probe.table(model, theta);
    OutcomeTable { model, theta, outcomes: probe.outcomes(model), probabilities, first_derivatives, second_derivatives }
}

/// Born-rule probabilities `Tr[rho(theta) E]` from the dense evolved state.
pub fn outcome_distribution_dense<S: Scalar>(
    state: &GhzDiagonalState<S>,
    theta: f64,
    model: MeasurementModel,
) -> Result<Vec<f64>> {
    let n = state.n();
    let rho = evolve_dense(state, theta)?;
    match model {
        MeasurementModel::GlobalParity => {
            let x = pauli_operator(&PauliTuple::new(vec![1; n as usize])?);
            let e = rho.expectation(&DenseMatrix(x)).re;
            Ok(vec![(1.0 + e) / 2.0, (1.0 - e) / 2.0])
        }
        MeasurementModel::SectorParity => {
            let mut out = Vec::with_capacity(state.sector_count() * 2);
            for i in 0..state.sector_count() as u64 {
                for sign in [Sign::Plus, Sign::Minus] {
                    let v = crate::dense::ghz_basis_vector(RepIndex::new(n, i)?, sign)?;
                    out.push((v.adjoint() * &rho.0 * &v)[(0, 0)].re);
                }
            }
            Ok(out)
        }
    }
}

fn fisher_from_table(theta: f64, outcomes: &[Outcome], p: &[f64], dp: &[f64], d2p: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (idx, (&prob, &deriv)) in p.iter().zip(dp).enumerate() {
        if prob < ZERO_PROBABILITY {
            if deriv.abs() > ZERO_DERIVATIVE {
                return Err(Error::SingularPoint {
                    theta,
                    outcome: outcomes[idx].to_string(),
                    probability: prob,
                    derivative: deriv,
                });
            }
            // P ~ P'' t^2 / 2 near a double zero, so P'^2 / P -> 2 P''.
            total += 2.0 * d2p[idx].max(0.0);
        } else {
            total += deriv * deriv / prob;
        }
    }
    Ok(total)
}

/// `F(theta) = sum_mu (dP/dtheta)^2 / P` with analytic derivatives.
pub fn classical_fisher<S: Scalar>(state: &GhzDiagonalState<S>, theta: f64, model: MeasurementModel) -> Result<f64> {
    let t = outcome_distribution(state, theta, model);
    fisher_from_table(theta, &t.outcomes, &t.probabilities, &t.first_derivatives, &t.second_derivatives)
}

/// Central finite differences of `P` with step `h`.
pub fn probability_derivative_fd<S: Scalar>(
    state: &GhzDiagonalState<S>,
    theta: f64,
    model: MeasurementModel,
    h: f64,
) -> Vec<f64> {
    let probe = Probe::new(state);
    let up = probe.probabilities(model, theta + h);
    let down = probe.probabilities(model, theta - h);
    up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Same Fisher sum with finite-difference first derivatives (cross-check).
pub fn classical_fisher_fd<S: Scalar>(state: &GhzDiagonalState<S>, theta: f64, model: MeasurementModel, h: f64) -> Result<f64> {
    let t = outcome_distribution(state, theta, model);
    let dp = probability_derivative_fd(state, theta, model, h);
    fisher_from_table(theta, &t.outcomes, &t.probabilities, &dp, &t.second_derivatives)
}

/// Description of the probe recorded in a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateParams {
    pub family: String,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
}

impl StateParams {
    pub fn custom(n: u32) -> Self {
        Self { family: "custom".into(), n, k: None, m: None }
    }

    pub fn ghz(n: u32) -> Self {
        Self { family: "ghz".into(), n, k: None, m: None }
    }

    pub fn family(p: FamilyParams) -> Self {
        if p.m == 0 {
            Self { family: "rho_nk".into(), n: p.n, k: Some(p.k), m: None }
        } else {
            Self { family: "rho_nkm".into(), n: p.n, k: Some(p.k), m: Some(p.m) }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationRun {
    pub state_params: StateParams,
    pub model: MeasurementModel,
    pub theta_true: f64,
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub rng: &'static str,
    /// Stream `r` of the seeded generator drives repetition `r`.
    pub rng_stream: &'static str,
    pub bracket: (f64, f64),
    pub estimates: Vec<f64>,
    pub mean_estimate: f64,
    /// `sqrt(<(theta_hat - theta_true)^2>)`.
    pub empirical_std: f64,
    /// 95% chi-square interval for the true deviation.
    pub empirical_std_ci95: (f64, f64),
    pub crlb: f64,
    pub fisher_classical: f64,
    pub fisher_quantum: f64,
}

impl EstimationRun {
    /// Cramér-Rao consistency: the interval for the deviation reaches the bound.
    pub fn respects_crlb(&self) -> bool {
        self.empirical_std_ci95.1 >= self.crlb
    }
}

/// `[m pi / w, (m+1) pi / w]` containing `theta`, between consecutive
/// stationary points of the fastest fringe.
pub fn mle_bracket(w_max: f64, theta: f64) -> (f64, f64) {
    let period = PI / w_max;
    let m = (theta / period).floor();
    (m * period, (m + 1.0) * period)
}

fn log_likelihood(probe: &Probe, model: MeasurementModel, counts: &[(usize, u64)], theta: f64) -> f64 {
    let p = probe.probabilities(model, theta);
    let mut total = 0.0;
    for &(idx, c) in counts {
        let q = p[idx];
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += c as f64 * q.ln();
    }
    total
}

fn maximize(probe: &Probe, model: MeasurementModel, counts: &[(usize, u64)], lo: f64, hi: f64) -> Result<f64> {
    let step = (hi - lo) / (MLE_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..MLE_GRID_POINTS).map(|j| lo + step * j as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&t| log_likelihood(probe, model, counts, t)).collect();
    let last = values.len() - 1;
    let peaks: Vec<usize> = (0..values.len())
        .filter(|&j| {
            values[j].is_finite()
                && (j == 0 || values[j] >= values[j - 1])
                && (j == last || values[j] >= values[j + 1])
        })
        .collect();
    let best = *peaks
        .iter()
        .max_by(|&&a, &&b| values[a].total_cmp(&values[b]))
        .ok_or(Error::DegenerateLikelihood { count: 0, lo, hi })?;
    let scale = values[best].abs().max(1.0);
    // Plateaus register as neighbouring peaks; only separated ones count.
    let mut rivals = 0;
    let mut prev: Option<usize> = None;
    for &j in &peaks {
        let separate = prev.is_none_or(|p| j > p + 1);
        if separate && (values[j] - values[best]).abs() <= 1e-9 * scale {
            rivals += 1;
        }
        prev = Some(j);
    }
    if rivals > 1 {
        return Err(Error::DegenerateLikelihood { count: rivals, lo, hi });
    }

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(last)]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| log_likelihood(probe, model, counts, t);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > MLE_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let mid = (a + b) / 2.0;
    // The refinement may not beat an endpoint maximum.
    Ok(if values[best] > f(mid) { grid[best] } else { mid })
}

fn sample_counts(cdf: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<(usize, u64)> {
    let mut counts = vec![0u64; cdf.len()];
    let total = *cdf.last().expect("nonempty outcome set");
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    counts.into_iter().enumerate().filter(|(_, c)| *c > 0).collect()
}

/// `repetitions` independent experiments of `shots` outcomes each, one MLE
/// per experiment. Repetition `r` uses stream `r` of `ChaCha8(seed)`.
pub fn run_monte_carlo<S: Scalar>(
    state: &GhzDiagonalState<S>,
    theta_true: f64,
    model: MeasurementModel,
    shots: u64,
    repetitions: usize,
    seed: u64,
) -> Result<EstimationRun> {
    if shots < MIN_SHOTS {
        return Err(domain(format!("need at least {MIN_SHOTS} shots, got {shots}")));
    }
    if repetitions < 2 {
        return Err(domain("need at least 2 repetitions"));
    }
    if !theta_true.is_finite() {
        return Err(domain("theta must be finite"));
    }
    let probe = Probe::new(state);
    let w_max = probe.max_phase_weight().ok_or_else(|| domain("probe carries no phase information"))?;
    let (lo, hi) = mle_bracket(w_max, theta_true);
    let fisher_classical = classical_fisher(state, theta_true, model)?;
    if fisher_classical <= 0.0 {
        return Err(domain(format!("classical Fisher information vanishes at theta = {theta_true}")));
    }

    let mut acc = 0.0;
    let cdf: Vec<f64> = probe
        .probabilities(model, theta_true)
        .iter()
        .map(|p| {
            acc += p.max(0.0);
            acc
        })
        .collect();

    let estimates = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let counts = sample_counts(&cdf, shots, &mut rng);
            maximize(&probe, model, &counts, lo, hi)
        })
        .collect::<Result<Vec<f64>>>()?;

    let reps = repetitions as f64;
    let mean_estimate = estimates.iter().sum::<f64>() / reps;
    let msd = estimates.iter().map(|t| (t - theta_true).powi(2)).sum::<f64>() / reps;
    let empirical_std = msd.sqrt();
    let chi = ChiSquared::new(reps).map_err(|e| domain(e.to_string()))?;
    let ci = (
        empirical_std * (reps / chi.inverse_cdf(0.975)).sqrt(),
        empirical_std * (reps / chi.inverse_cdf(0.025)).sqrt(),
    );

    Ok(EstimationRun {
        state_params: StateParams::custom(state.n()),
        model,
        theta_true,
        shots,
        repetitions,
        seed,
        rng: RNG_ALGORITHM,
        rng_stream: "repetition index",
        bracket: (lo, hi),
        estimates,
        mean_estimate,
        empirical_std,
        empirical_std_ci95: ci,
        crlb: 1.0 / (shots as f64 * fisher_classical).sqrt(),
        fisher_classical,
        fisher_quantum: qfi_ghz_diagonal(state).to_f64_lossy(),
    })
}
