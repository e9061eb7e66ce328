//! End-to-end runs: Werner-parameter sweeps scored by fidelity, purity and
//! concurrence; polarization correlation scans; reconstruction of a single
//! counts file.
//!
//! Every run is a pure function of its configuration and seed. Sweep cells
//! run in parallel, each on its own derived random stream, and records are
//! returned in `(eta, mean_pairs, trial)` order.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    concurrence, concurrence_werner_theory, fidelity, purity, purity_werner_theory,
};
use crate::povm::two_qubit_povm;
use crate::reconstruct::{estimate, EstimatorConfig};
use crate::simulate::{
    angle_grid, correlation_scan, simulate_counts, simulate_counts_with, CorrelationScan,
    CountMode, CountsFile, RandomSource,
};
use crate::states::{werner_two_qubit, WernerParameter};

pub const SWEEP_HEADER: &str = "eta,mean_pairs,trial,fidelity,purity_est,purity_true,\
concurrence_est,concurrence_true,chi2,evaluations,converged";

pub const SUMMARY_HEADER: &str = "eta,mean_pairs,trials,fidelity_mean,fidelity_min,fidelity_max,\
purity_est_mean,purity_est_min,purity_est_max,purity_true,concurrence_est_mean,\
concurrence_est_min,concurrence_est_max,concurrence_true,converged_fraction";

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub eta_grid: Vec<f64>,
    pub mean_pairs_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub estimator: EstimatorConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            eta_grid: eta_grid(0.0, 1.0, 0.02).expect("valid default grid"),
            mean_pairs_list: vec![10.0, 100.0, 1000.0],
            trials: 10,
            seed: 0,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl SweepConfig {
    /// One trial per cell, as in a single pass over the grid.
    pub fn paper_mode(mut self) -> Self {
        self.trials = 1;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_grid.is_empty() {
            return Err(Error::ParameterOutOfRange {
                name: "eta grid size",
                value: 0.0,
            });
        }
        for &eta in &self.eta_grid {
            WernerParameter::new(eta)?;
        }
        if self.mean_pairs_list.is_empty() {
            return Err(Error::ParameterOutOfRange {
                name: "mean_pairs list size",
                value: 0.0,
            });
        }
        if let Some(&bad) = self
            .mean_pairs_list
            .iter()
            .find(|n| !n.is_finite() || **n <= 0.0)
        {
            return Err(Error::ParameterOutOfRange {
                name: "mean_pairs",
                value: bad,
            });
        }
        if self.trials == 0 {
            return Err(Error::ParameterOutOfRange {
                name: "trials",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// `start, start + step, ...` up to and including `end`, with values rounded
/// to 12 decimals so the grid prints cleanly.
pub fn eta_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::ParameterOutOfRange {
            name: "eta step",
            value: step,
        });
    }
    if !(start.is_finite() && end.is_finite()) || end < start {
        return Err(Error::ParameterOutOfRange {
            name: "eta end",
            value: end,
        });
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .map(|x| x.min(end))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub eta: f64,
    pub mean_pairs: f64,
    pub trial: usize,
    pub fidelity: f64,
    pub purity_estimated: f64,
    pub purity_true: f64,
    pub concurrence_estimated: f64,
    pub concurrence_true: f64,
    pub chi2: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl SweepRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.eta,
            self.mean_pairs,
            self.trial,
            self.fidelity,
            self.purity_estimated,
            self.purity_true,
            self.concurrence_estimated,
            self.concurrence_true,
            self.chi2,
            self.evaluations,
            self.converged
        )
    }
}

/// Simulate, reconstruct and score one experiment.
pub fn run_cell(
    eta: WernerParameter,
    mean_pairs: f64,
    trial: usize,
    rng: &mut RandomSource,
    estimator: &EstimatorConfig,
) -> Result<SweepRecord> {
    let povm = two_qubit_povm();
    let rho = werner_two_qubit(eta);
    let counts = simulate_counts(&rho, &povm, mean_pairs, rng)?;
    let result = estimate(&counts, &povm, estimator)?;
    Ok(SweepRecord {
        eta: eta.value(),
        mean_pairs,
        trial,
        fidelity: fidelity(&result.sigma, &rho)?,
        purity_estimated: purity(&result.sigma),
        purity_true: purity_werner_theory(eta),
        concurrence_estimated: concurrence(&result.sigma)?,
        concurrence_true: concurrence_werner_theory(eta),
        chi2: result.chi2,
        evaluations: result.evaluations,
        converged: result.converged,
    })
}

/// One record per `(eta, mean_pairs, trial)`; cell `(i, j, k)` draws from
/// the stream derived from `(seed, i, j, k)`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..config.eta_grid.len())
        .flat_map(|e| {
            (0..config.mean_pairs_list.len())
                .flat_map(move |n| (0..config.trials).map(move |t| (e, n, t)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(e, n, t)| {
            let mut rng = RandomSource::derive(config.seed, &[e as u64, n as u64, t as u64]);
            run_cell(
                WernerParameter::new(config.eta_grid[e])?,
                config.mean_pairs_list[n],
                t,
                &mut rng,
                &config.estimator,
            )
        })
        .collect()
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Statistics over the trials of one `(eta, mean_pairs)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub eta: f64,
    pub mean_pairs: f64,
    pub trials: usize,
    pub fidelity: Stats,
    pub purity_estimated: Stats,
    pub purity_true: f64,
    pub concurrence_estimated: Stats,
    pub concurrence_true: f64,
    pub converged_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut sum, mut n) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
        Self {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

/// Groups consecutive records sharing `(eta, mean_pairs)`, as produced by
/// [`run_sweep`].
pub fn summarize(records: &[SweepRecord]) -> Vec<CellSummary> {
    records
        .chunk_by(|a, b| a.eta == b.eta && a.mean_pairs == b.mean_pairs)
        .map(|cell| CellSummary {
            eta: cell[0].eta,
            mean_pairs: cell[0].mean_pairs,
            trials: cell.len(),
            fidelity: Stats::of(cell.iter().map(|r| r.fidelity)),
            purity_estimated: Stats::of(cell.iter().map(|r| r.purity_estimated)),
            purity_true: cell[0].purity_true,
            concurrence_estimated: Stats::of(cell.iter().map(|r| r.concurrence_estimated)),
            concurrence_true: cell[0].concurrence_true,
            converged_fraction: cell.iter().filter(|r| r.converged).count() as f64
                / cell.len() as f64,
        })
        .collect()
}

pub fn summary_csv(summaries: &[CellSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.eta,
            s.mean_pairs,
            s.trials,
            s.fidelity.mean,
            s.fidelity.min,
            s.fidelity.max,
            s.purity_estimated.mean,
            s.purity_estimated.min,
            s.purity_estimated.max,
            s.purity_true,
            s.concurrence_estimated.mean,
            s.concurrence_estimated.min,
            s.concurrence_estimated.max,
            s.concurrence_true,
            s.converged_fraction
        )
        .expect("writing to String");
    }
    out
}

/// Correlation scan over `0..=360` degrees in `angle_step_deg` steps.
pub fn run_correlation(
    eta: WernerParameter,
    mean_pairs: f64,
    angle_step_deg: f64,
    seed: u64,
) -> Result<CorrelationScan> {
    let angles = angle_grid(angle_step_deg)?;
    correlation_scan(eta, mean_pairs, &angles, &mut RandomSource::new(seed))
}

/// File name used for a scan when several are written to one directory.
pub fn correlation_file_name(eta: f64, mean_pairs: f64) -> String {
    format!("correlation_eta{eta}_n{mean_pairs}.csv")
}

/// One simulated counts file for `rho_W(eta)`.
pub fn run_simulate(
    eta: WernerParameter,
    mean_pairs: f64,
    seed: u64,
    mode: CountMode,
) -> Result<CountsFile> {
    let counts = simulate_counts_with(
        &werner_two_qubit(eta),
        &two_qubit_povm(),
        mean_pairs,
        &mut RandomSource::new(seed),
        mode,
    )?;
    Ok(CountsFile {
        counts,
        seed: Some(seed),
        eta: Some(eta.value()),
    })
}

/// Figures of merit of an estimate against a reference Werner state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceMetrics {
    pub reference_eta: f64,
    pub fidelity: f64,
    pub purity_estimated: f64,
    pub purity_reference: f64,
    pub concurrence_estimated: f64,
    pub concurrence_reference: f64,
}

/// Estimated-state document: the matrix as `[re, im]` pairs plus fit metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateReport {
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub chi2: f64,
    pub evaluations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<ReferenceMetrics>,
}

impl StateReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Reconstructs the state behind a counts file.
pub fn run_single(
    counts: &CountsFile,
    estimator: &EstimatorConfig,
    reference_eta: Option<WernerParameter>,
) -> Result<StateReport> {
    let povm = two_qubit_povm();
    let result = estimate(&counts.counts, &povm, estimator)?;
    let matrix = result
        .sigma
        .matrix()
        .rows()
        .map(|row| row.iter().map(|z| [z.re + 0.0, z.im + 0.0]).collect())
        .collect();
    let metrics = reference_eta
        .map(|eta| -> Result<ReferenceMetrics> {
            let reference = werner_two_qubit(eta);
            Ok(ReferenceMetrics {
                reference_eta: eta.value(),
                fidelity: fidelity(&result.sigma, &reference)?,
                purity_estimated: purity(&result.sigma),
                purity_reference: purity(&reference),
                concurrence_estimated: concurrence(&result.sigma)?,
                concurrence_reference: concurrence_werner_theory(eta),
            })
        })
        .transpose()?;
    Ok(StateReport {
        matrix,
        chi2: result.chi2,
        evaluations: result.evaluations,
        converged: result.converged,
        metrics,
    })
}
