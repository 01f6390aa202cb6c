use std::ops::RangeInclusive;

use clap::Args;
use ghzmetro::bell::{
    brute_force_tensor, correlation_tensor, detection_comparison, BELL_MAX_QUBITS, BRUTE_FORCE_MAX_QUBITS,
};
use ghzmetro::dense::{dense_limit, to_dense};
use ghzmetro::estimation::{outcome_distribution, outcome_distribution_dense, run_monte_carlo, MeasurementModel, StateParams};
use ghzmetro::ptranspose::{
    classify_cuts, min_pt_eigenvalue, ppt_single_qubit_certificate, pt_dense_oracle, subsets_of_size, QubitSubset,
};
use ghzmetro::qfi::{asymptotic_report, qfi_closed_nk, qfi_dense, qfi_ghz_diagonal, qfi_report, PhaseGenerator, QfiReport};
use ghzmetro::state::{build_family, count_family_sectors};
use ghzmetro::{Error, Exact, ExactState, FamilyParams, GhzDiagonalState, Scalar};
use serde_json::json;

use crate::output::{Cell, Report, Table};
use crate::{Common, Failure, StateArgs};

/// Agreement required of every dense cross-check.
const ORACLE_TOLERANCE: f64 = 1e-9;

pub struct Outcome {
    pub report: Report,
    pub seed: Option<u64>,
    pub cross_check_failure: Option<String>,
}

impl Outcome {
    fn new(report: Report) -> Self {
        Self { report, seed: None, cross_check_failure: None }
    }

    /// Records a deviation and flags the run when it exceeds the tolerance.
    fn oracle(&mut self, what: &str, deviation: f64) {
        self.report.note(&format!("oracle_{what}_max_deviation"), deviation);
        if deviation > ORACLE_TOLERANCE && self.cross_check_failure.is_none() {
            self.cross_check_failure = Some(format!("{what} deviates by {deviation:e} (tolerance {ORACLE_TOLERANCE:e})"));
        }
    }

    fn oracle_skipped(&mut self, why: String) {
        self.report.note("oracle", why);
    }
}

/// `7`, `4..10` or `4..=10`, both ends inclusive.
pub fn parse_range(text: &str) -> Result<RangeInclusive<u64>, String> {
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad number {s:?} in range {text:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
        None => {
            let v = num(text)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {text:?}"));
    }
    Ok(lo..=hi)
}

fn parse_fraction(text: &str) -> Result<Exact, String> {
    Exact::from_wire(text).ok_or_else(|| format!("expected a fraction like 1/4, got {text:?}"))
}

fn u32_of(v: u64) -> Result<u32, Failure> {
    u32::try_from(v).map_err(|_| Failure::Usage(format!("{v} is out of range")))
}

struct Selected {
    state: ExactState,
    params: StateParams,
    family: Option<FamilyParams>,
}

impl Selected {
    fn k_cell(&self) -> Cell {
        self.family.map(|p| p.k).into()
    }

    fn m_cell(&self) -> Cell {
        self.family.map(|p| p.m).into()
    }
}

fn select(a: &StateArgs) -> Result<Selected, Failure> {
    if a.ghz {
        return Ok(Selected { state: GhzDiagonalState::pure_ghz(a.n)?, params: StateParams::ghz(a.n), family: None });
    }
    let k = a.k.ok_or_else(|| Failure::Usage("--k is required unless --ghz is given".into()))?;
    let params = FamilyParams::new(a.n, k, a.m)?;
    Ok(Selected { state: build_family(params)?, params: StateParams::family(params), family: Some(params) })
}

fn bits(n: u32, i: u64) -> String {
    format!("{i:0width$b}", width = n as usize)
}

pub fn state(a: &StateArgs, _c: &Common) -> Result<Outcome, Failure> {
    let sel = select(a)?;
    let s = &sel.state;
    let n = s.n();
    let mut table = Table::new(&["i", "bits", "ones", "weight", "lambda_plus", "lambda_minus"]);
    let mut zero_sectors = 0u64;
    let zero = Exact::from_int(0);
    for (i, plus, minus) in s.sectors() {
        if *plus == zero && *minus == zero {
            zero_sectors += 1;
            continue;
        }
        let ones = ghzmetro::state::sector_ones(n, i);
        table.push(vec![
            i.into(),
            bits(n, i).into(),
            ones.into(),
            ghzmetro::state::weight(n, i)?.into(),
            plus.clone().into(),
            minus.clone().into(),
        ]);
    }
    let mut report = Report { table, ..Default::default() };
    report.note("family", sel.params.family.clone());
    report.note("n", n);
    report.note("k", sel.k_cell());
    report.note("m", sel.m_cell());
    let trace = s.trace();
    report.note("normalized", if trace == Exact::from_int(1) { "true" } else { "false" });
    report.note("trace", trace);
    if let Some(p) = sel.family {
        let counts = count_family_sectors(p);
        report.note("lambda", p.lambda());
        report.note("pure_plus_sectors", counts.pure_plus);
        report.note("mixed_sectors", counts.mixed);
    }
    report.note("zero_sectors", zero_sectors);
    report.payload = Some(json!({ "state_params": sel.params, "state": s }));
    Ok(Outcome::new(report))
}

#[derive(Args, Debug)]
pub struct QfiArgs {
    /// Qubit count or inclusive range (`7`, `8..120`).
    #[arg(long, value_parser = parse_range)]
    pub n: RangeInclusive<u64>,
    #[arg(long, conflicts_with = "a", required_unless_present = "a")]
    pub k: Option<u64>,
    /// Scaling ratio: `k = round(a n)`.
    #[arg(long, value_parser = parse_fraction)]
    pub a: Option<Exact>,
    #[arg(long, default_value_t = 0, conflicts_with = "a")]
    pub m: u64,
}

fn qfi_row(r: &QfiReport) -> Vec<Cell> {
    vec![
        r.n.into(),
        r.k.into(),
        r.m.unwrap_or(0).into(),
        r.a.clone().into(),
        r.f_q.clone().into(),
        r.snl_ratio.clone().into(),
        r.bound_13.clone().into(),
        r.bound_25.clone().into(),
        r.s_nk.clone().into(),
        r.ratio_paper15.clone().into(),
        r.ratio_13asymptotic.clone().into(),
        format!("{:?}", r.verdict).to_lowercase().into(),
    ]
}

pub fn qfi(a: &QfiArgs, c: &Common) -> Result<Outcome, Failure> {
    let single = a.n.start() == a.n.end();
    let mut reports = Vec::new();
    let mut skipped = 0;
    for n in a.n.clone() {
        let r = match (&a.a, a.k) {
            (Some(ratio), _) => asymptotic_report(n, ratio),
            (None, Some(k)) => qfi_report(n, k, a.m),
            (None, None) => unreachable!("clap requires --k or --a"),
        };
        match r {
            Ok(r) => reports.push(r),
            Err(e) if single => return Err(e.into()),
            Err(_) => skipped += 1,
        }
    }
    let mut table = Table::new(&[
        "n", "k", "m", "a", "f_q", "f_q_over_n", "bound_13", "bound_25", "s_nk", "ratio_paper15", "ratio_13asymptotic",
        "verdict",
    ]);
    reports.sort_by(|x, y| (x.n, x.k, &x.a, x.m).cmp(&(y.n, y.k, &y.a, y.m)));
    for r in &reports {
        table.push(qfi_row(r));
    }
    let mut out = Outcome::new(Report { table, ..Default::default() });
    if skipped > 0 {
        out.report.note("skipped_invalid_cells", skipped as u64);
    }
    if c.oracle {
        let limit = dense_limit() as u64;
        let mut worst = 0.0f64;
        let mut checked = 0;
        for r in reports.iter().filter(|r| r.n <= limit) {
            let params = FamilyParams::new(u32_of(r.n)?, u32_of(r.k)?, u32_of(r.m.unwrap_or(0))?)?;
            let state: ExactState = build_family(params)?;
            let sector = qfi_ghz_diagonal(&state);
            if sector != r.f_q {
                out.cross_check_failure = Some(format!("sector formula {sector} differs from closed form {}", r.f_q));
            }
            let dense = qfi_dense(&to_dense(&state)?, &PhaseGenerator::new(state.n()))?;
            worst = worst.max((dense - r.f_q.to_f64_lossy()).abs());
            checked += 1;
        }
        if checked > 0 {
            out.oracle("spectral_qfi", worst);
        } else {
            out.oracle_skipped(format!("no cell within the dense limit n <= {limit}"));
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct PptArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// `all` or a comma-separated list of cut sizes.
    #[arg(long, default_value = "all")]
    pub cuts: String,
}

fn parse_cuts(text: &str, n: u32) -> Result<Vec<u32>, Failure> {
    if text == "all" {
        return Ok((1..=n / 2).collect());
    }
    let mut sizes = text
        .split(',')
        .map(|s| s.trim().parse::<u32>().map_err(|_| Failure::Usage(format!("bad cut size {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(bad) = sizes.iter().find(|&&s| s == 0 || s >= n) {
        return Err(Failure::Lib(Error::Domain(format!("cut size {bad} must be in 1..{n}"))));
    }
    sizes.sort_unstable();
    sizes.dedup();
    Ok(sizes)
}

fn qubit_list(n: u32, mask: u64) -> String {
    QubitSubset::from_mask(n, mask).map(|s| s.qubits().iter().map(u32::to_string).collect::<Vec<_>>().join(" ")).unwrap_or_default()
}

pub fn ppt(a: &PptArgs, c: &Common) -> Result<Outcome, Failure> {
    let sel = select(&a.state)?;
    let s = &sel.state;
    let n = s.n();
    let sizes = parse_cuts(&a.cuts, n)?;
    let cut_table = classify_cuts(s, sizes);
    let mut table = Table::new(&["cut_size", "status", "witness_qubits", "exhaustive", "subsets_checked"]);
    for r in &cut_table.rows {
        table.push(vec![
            r.cut_size.into(),
            format!("{:?}", r.status).to_uppercase().into(),
            r.witness_mask.map(|m| qubit_list(n, m)).into(),
            (if r.exhaustive { "true" } else { "false" }).into(),
            r.subsets_checked.into(),
        ]);
    }
    let mut report = Report { table, ..Default::default() };
    let cert = ppt_single_qubit_certificate(s);
    report.note("single_qubit_certificate", if cert.holds { "holds" } else { "fails" });
    if let Some(w) = cert.witness {
        report.note("certificate_witness", format!("j={} i={}", w.j, w.i));
    }
    report.payload = Some(json!({ "state_params": sel.params, "cuts": cut_table, "certificate_holds": cert.holds }));
    let mut out = Outcome::new(report);
    if c.oracle {
        if n > dense_limit() {
            out.oracle_skipped(format!("n = {n} exceeds the dense limit {}", dense_limit()));
        } else {
            let mut worst = 0.0f64;
            for r in &cut_table.rows {
                let subset = match r.witness_mask {
                    Some(m) => QubitSubset::from_mask(n, m)?,
                    None => subsets_of_size(n, r.cut_size).0[0],
                };
                let exact = min_pt_eigenvalue(s, subset)?.to_f64_lossy();
                let dense = pt_dense_oracle(s, subset)?.eigenvalues()?[0];
                worst = worst.max((exact - dense).abs());
            }
            out.oracle("min_pt_eigenvalue", worst);
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct BellArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// List the nonzero tensor elements instead of the summary row.
    #[arg(long)]
    pub elements: bool,
}

pub fn bell(a: &BellArgs, c: &Common) -> Result<Outcome, Failure> {
    let sel = select(&a.state)?;
    let s = &sel.state;
    let n = s.n();
    let summary = correlation_tensor(s)?;
    let row = detection_comparison(s)?;
    let table = if a.elements {
        let mut t = Table::new(&["tuple", "value"]);
        for (k, v) in &summary.nonzero_elements {
            t.push(vec![k.to_string().into(), v.clone().into()]);
        }
        t
    } else {
        let mut t = Table::new(&["n", "k", "m", "f_q", "f_q_over_n", "hs_norm_sq", "xy_block_norm_sq", "verdict"]);
        t.push(vec![
            n.into(),
            sel.k_cell(),
            sel.m_cell(),
            row.f_q.clone().into(),
            row.f_q_over_n.clone().into(),
            row.hs_norm_sq.clone().into(),
            row.xy_block_norm_sq.clone().into(),
            row.verdict.label().into(),
        ]);
        t
    };
    let mut report = Report { table, ..Default::default() };
    report.note("nonzero_elements", summary.nonzero_elements.len());
    report.note("bell_upper_bound_satisfied", if summary.bell_upper_bound_satisfied { "true" } else { "false" });
    report.payload = Some(json!({ "state_params": sel.params, "tensor": summary }));
    let mut out = Outcome::new(report);
    if c.oracle {
        if n > BRUTE_FORCE_MAX_QUBITS {
            out.oracle_skipped(format!("brute-force tensor needs n <= {BRUTE_FORCE_MAX_QUBITS}"));
        } else {
            let slow = brute_force_tensor(s)?;
            let worst = ghzmetro::bell::PauliTuple::all(n)
                .map(|t| (summary.get(&t).to_f64_lossy() - slow.get(&t)).abs())
                .fold(0.0, f64::max);
            out.oracle("correlation_tensor", worst);
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 200)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "global-parity")]
    pub model: MeasurementModel,
}

pub fn estimate(a: &EstimateArgs, c: &Common) -> Result<Outcome, Failure> {
    let sel = select(&a.state)?;
    let probe = sel.state.cast::<f64>();
    let mut run = run_monte_carlo(&probe, a.theta, a.model, a.shots, a.repetitions, a.seed)?;
    run.state_params = sel.params.clone();
    let mut table = Table::new(&[
        "n", "k", "m", "model", "theta_true", "shots", "repetitions", "empirical_std", "std_ci95_low", "std_ci95_high",
        "crlb", "fisher_classical", "fisher_quantum",
    ]);
    table.push(vec![
        probe.n().into(),
        sel.k_cell(),
        sel.m_cell(),
        a.model.name().into(),
        run.theta_true.into(),
        run.shots.into(),
        run.repetitions.into(),
        run.empirical_std.into(),
        run.empirical_std_ci95.0.into(),
        run.empirical_std_ci95.1.into(),
        run.crlb.into(),
        run.fisher_classical.into(),
        run.fisher_quantum.into(),
    ]);
    let mut report = Report { table, ..Default::default() };
    report.note("rng", run.rng);
    report.note("rng_stream", run.rng_stream);
    report.note("respects_crlb", if run.respects_crlb() { "true" } else { "false" });
    report.payload = Some(serde_json::to_value(&run).expect("plain struct"));
    let mut out = Outcome::new(report);
    out.seed = Some(a.seed);
    if c.oracle {
        if probe.n() > dense_limit() {
            out.oracle_skipped(format!("n = {} exceeds the dense limit {}", probe.n(), dense_limit()));
        } else {
            let fast = outcome_distribution(&probe, a.theta, a.model).probabilities;
            let dense = outcome_distribution_dense(&probe, a.theta, a.model)?;
            let worst = fast.iter().zip(&dense).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            out.oracle("born_rule", worst);
        }
    }
    Ok(out)
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    pub id: u8,
    /// Inclusive qubit range; defaults depend on the figure.
    #[arg(long, value_parser = parse_range, conflicts_with = "n_max")]
    pub n: Option<RangeInclusive<u64>>,
    /// Upper end of the default range.
    #[arg(long)]
    pub n_max: Option<u64>,
    /// Comma-separated `k` values (figures 2 and 4).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u64>,
    /// Comma-separated scaling ratios (figure 3).
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction)]
    pub a: Vec<Exact>,
}

fn figure_range(a: &FigureArgs, lo: u64, hi: u64) -> RangeInclusive<u64> {
    match (&a.n, a.n_max) {
        (Some(r), _) => r.clone(),
        (None, Some(top)) => lo..=top,
        (None, None) => lo..=hi,
    }
}

pub fn figure(a: &FigureArgs, c: &Common) -> Result<Outcome, Failure> {
    let pick_k = || if a.k.is_empty() { vec![2, 3] } else { a.k.clone() };
    match a.id {
        2 => {
            let mut cells: Vec<(u64, u64)> = Vec::new();
            for k in pick_k() {
                cells.extend(figure_range(a, 2 * k + 1, 60).filter(|n| 2 * k < *n).map(|n| (n, k)));
            }
            cells.sort_unstable();
            let mut table = Table::new(&["n", "k", "f_q", "n_times_k", "ratio"]);
            for (n, k) in cells {
                let f = qfi_closed_nk(n, k)?;
                let nk = Exact::from_int((n * k) as i64);
                table.push(vec![n.into(), k.into(), f.clone().into(), (n * k).into(), (f / nk).into()]);
            }
            Ok(Outcome::new(Report { table, ..Default::default() }))
        }
        3 => {
            let ratios = if a.a.is_empty() {
                vec![ghzmetro::ratio(1, 8), ghzmetro::ratio(1, 4), ghzmetro::ratio(3, 8)]
            } else {
                a.a.clone()
            };
            let mut reports = Vec::new();
            for ratio in &ratios {
                for n in figure_range(a, 8, 120) {
                    reports.push(asymptotic_report(n, ratio)?);
                }
            }
            reports.sort_by(|x, y| (x.n, x.k, &x.a).cmp(&(y.n, y.k, &y.a)));
            let mut table =
                Table::new(&["n", "a", "k", "f_q", "bound13", "ratio_paper15", "ratio_13asymptotic"]);
            for r in reports {
                table.push(vec![
                    r.n.into(),
                    r.a.into(),
                    r.k.into(),
                    r.f_q.into(),
                    r.bound_13.into(),
                    r.ratio_paper15.into(),
                    r.ratio_13asymptotic.into(),
                ]);
            }
            Ok(Outcome::new(Report { table, ..Default::default() }))
        }
        _ => {
            let range = figure_range(a, 4, 16);
            if *range.end() > BELL_MAX_QUBITS as u64 {
                return Err(Error::SizeLimit { what: "figure 4 correlation tensor", n: u32_of(*range.end())?, limit: BELL_MAX_QUBITS }.into());
            }
            let mut cells: Vec<(u64, u64)> = Vec::new();
            for k in pick_k() {
                cells.extend(range.clone().filter(|n| 2 * k < *n).map(|n| (n, k)));
            }
            cells.sort_unstable();
            let mut table = Table::new(&["n", "k", "f_q_over_n", "hs_norm_sq", "verdict"]);
            let mut worst: Option<f64> = None;
            for (n, k) in cells {
                let state: ExactState = ghzmetro::build_rho_nk(u32_of(n)?, u32_of(k)?)?;
                let row = detection_comparison(&state)?;
                if c.oracle && n <= BRUTE_FORCE_MAX_QUBITS as u64 {
                    let slow = brute_force_tensor(&state)?.hs_norm_sq;
                    let dev = (slow - row.hs_norm_sq.to_f64_lossy()).abs();
                    worst = Some(worst.unwrap_or(0.0).max(dev));
                }
                table.push(vec![n.into(), k.into(), row.f_q_over_n.into(), row.hs_norm_sq.into(), row.verdict.label().into()]);
            }
            let mut out = Outcome::new(Report { table, ..Default::default() });
            if c.oracle {
                match worst {
                    Some(w) => out.oracle("hs_norm_sq", w),
                    None => out.oracle_skipped(format!("brute-force tensor needs n <= {BRUTE_FORCE_MAX_QUBITS}")),
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("7").unwrap(), 7..=7);
        assert_eq!(parse_range("4..10").unwrap(), 4..=10);
        assert_eq!(parse_range("4..=10").unwrap(), 4..=10);
        assert!(parse_range("10..4").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn cut_lists() {
        assert_eq!(parse_cuts("all", 7).unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_cuts("3,1,3", 7).unwrap(), vec![1, 3]);
        assert!(parse_cuts("0", 7).is_err());
        assert!(parse_cuts("7", 7).is_err());
    }
}
