use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchConfig, EstimatorSpec, ExperimentConfig, SignalSpec};
use super::lp_loss;
use crate::error::{Error, Result};
use crate::model_select::{select_k, usable_sigma, PenaltyFamily, PenaltySpec};
use crate::pava::isotonic_fit;
use crate::reduced_iso::{fit_k, ReducedPath};
use crate::scalar::CompensatedSum;
use crate::segment_dp::{segment_fit_k, segment_select_k, DEFAULT_K_MAX};
use crate::signals::{
    lower_bound_signal, max_lower_bound_ell, ramp_signal, sample_noise_with, staircase_signal,
    stream_rng,
};
use crate::stepfn::{FitResult, Series};
use crate::unimodal::unimodal_aggregate;

/// One row of a [`RiskTable`]: an estimator at one grid cell and loss exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub experiment: String,
    pub n: usize,
    pub true_k: usize,
    pub signal: String,
    pub noise: String,
    pub estimator: String,
    pub p: f64,
    pub replications: usize,
    /// Mean of `sum |theta_hat - theta|^p`.
    pub mean_loss: f64,
    /// Sample standard deviation of the loss over `sqrt(replications)`.
    pub std_error: f64,
    pub mean_k_hat: f64,
    /// Mean wall-clock seconds per fit; empty unless timing was requested.
    pub mean_runtime: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskTable {
    pub rows: Vec<RiskRow>,
}

impl RiskTable {
    pub fn find(&self, experiment: &str, n: usize, estimator: &str, p: f64) -> Option<&RiskRow> {
        self.rows
            .iter()
            .find(|r| r.experiment == experiment && r.n == n && r.estimator == estimator && r.p == p)
    }
}

/// Execution knobs that do not change results (apart from the runtime column).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub timing: bool,
}

/// One estimator applied to one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    /// Loss for each configured exponent, in config order.
    pub losses: Vec<f64>,
    /// Selected piece count for adaptive estimators, otherwise pieces used.
    pub k_hat: usize,
    /// Residual against the observed data.
    pub sse: f64,
    pub runtime: Option<f64>,
}

/// Every estimator applied to one noisy draw, in config order.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    pub estimates: Vec<EstimateOutcome>,
}

fn unimodal_signal(n: usize, k: usize, delta: f64) -> Result<Vec<f64>> {
    let up = k.div_ceil(2);
    let mut levels: Vec<f64> = (0..up).map(|j| j as f64 * delta).collect();
    let peak = (up as f64 - 1.0) * delta;
    levels.extend((0..k - up).map(|j| peak - (j as f64 + 0.5) * delta));
    let pattern = staircase_signal(n, k, 1.0)?;
    Ok(pattern.iter().map(|&j| levels[j as usize]).collect())
}

fn draw_signal<R: Rng>(spec: &SignalSpec, n: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    match *spec {
        SignalSpec::Staircase { k, delta } => staircase_signal(n, k, delta),
        SignalSpec::LowerBound { alpha, ell } => {
            let ell = ell.unwrap_or_else(|| rng.random_range(1..=max_lower_bound_ell(n)));
            lower_bound_signal(n, ell, alpha, sigma)
        }
        SignalSpec::Ramp { total_variation } => Ok(ramp_signal(n, total_variation)),
        SignalSpec::Unimodal { k, delta } => unimodal_signal(n, k, delta),
    }
}

fn penalty_spec(
    family: PenaltyFamily,
    c_tau: Option<f64>,
    tau: Option<f64>,
    known_sigma: bool,
    sigma: f64,
) -> PenaltySpec<f64> {
    let mut spec = PenaltySpec::new(family);
    if let Some(c) = c_tau {
        spec = spec.with_c_tau(c);
    }
    if let Some(t) = tau {
        spec = spec.with_tau(t);
    }
    if known_sigma {
        spec = spec.with_sigma(sigma);
    }
    spec
}

fn apply_estimator(
    est: &EstimatorSpec,
    x: &Series<f64>,
    true_k: usize,
    sigma: f64,
    seed: u64,
) -> Result<FitResult<f64>> {
    let n = x.len();
    let k_or_true = |k: &Option<usize>| k.unwrap_or(true_k).min(n);
    match est {
        EstimatorSpec::Iso => isotonic_fit(x),
        EstimatorSpec::Reduced { k } => fit_k(x, k_or_true(k)),
        EstimatorSpec::Auto { c_tau, tau, known_sigma } => {
            let spec = penalty_spec(PenaltyFamily::Plain, *c_tau, *tau, *known_sigma, sigma);
            select_k(&ReducedPath::build(x)?, x, &spec)
        }
        EstimatorSpec::AutoModified { c_tau, tau, known_sigma } => {
            let spec = penalty_spec(PenaltyFamily::Modified, *c_tau, *tau, *known_sigma, sigma);
            select_k(&ReducedPath::build(x)?, x, &spec)
        }
        EstimatorSpec::Segment { k } => segment_fit_k(x, k_or_true(k)),
        EstimatorSpec::AutoSegment { c_tau, tau, known_sigma, k_max } => {
            let spec = penalty_spec(PenaltyFamily::Segment, *c_tau, *tau, *known_sigma, sigma);
            let tau = spec.resolve(x)?.tau;
            segment_select_k(x, tau, k_max.unwrap_or(DEFAULT_K_MAX).min(n))
        }
        EstimatorSpec::Unimodal { k, known_sigma } => {
            let s = if *known_sigma { sigma } else { usable_sigma(x) };
            Ok(unimodal_aggregate(x, k_or_true(k), s, seed)?.result)
        }
    }
}

/// Runs the replications of one grid cell (`n = cfg.n[cell]`).
///
/// Replication `r` draws from the stream `(experiment, cell, r)` of the master
/// seed; all estimators see the same draw. Output is in replication order and
/// independent of the thread count.
pub fn run_replications(
    master_seed: u64,
    experiment: usize,
    cfg: &ExperimentConfig,
    cell: usize,
    options: &RunOptions,
) -> Result<Vec<Replication>> {
    let n = *cfg
        .n
        .get(cell)
        .ok_or_else(|| Error::Argument(format!("cell {cell} outside the n grid")))?;
    let law = cfg.noise.law()?;
    let sigma = cfg.noise.sigma;
    let true_k = cfg.signal.true_k(n);

    let one = |r: usize| -> Result<Replication> {
        let mut rng = stream_rng(master_seed, &[experiment as u64, cell as u64, r as u64]);
        let theta = draw_signal(&cfg.signal, n, sigma, &mut rng)?;
        let noise = sample_noise_with(law, n, sigma, &mut rng)?;
        let est_seed: u64 = rng.random();
        let x = Series::new(theta.iter().zip(&noise).map(|(a, b)| a + b).collect())?;
        let mut estimates = Vec::with_capacity(cfg.estimators.len());
        for est in &cfg.estimators {
            let start = options.timing.then(Instant::now);
            let fit = apply_estimator(est, &x, true_k, sigma, est_seed)?;
            let runtime = start.map(|t| t.elapsed().as_secs_f64());
            let fitted = fit.fitted();
            estimates.push(EstimateOutcome {
                losses: cfg.p.iter().map(|&p| lp_loss(&fitted, &theta, p)).collect::<Result<_>>()?,
                k_hat: fit.k_selected.unwrap_or(fit.k_used),
                sse: fit.sse,
                runtime,
            });
        }
        Ok(Replication { index: r, estimates })
    };

    let run = || -> Result<Vec<Replication>> {
        (0..cfg.replications).into_par_iter().map(one).collect()
    };
    match options.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Mean and standard error (`sd / sqrt(R)`, with the `R - 1` denominator).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum<f64>>().value() / r;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum<f64>>()
        .value();
    (mean, (ss / (r - 1.0)).sqrt() / r.sqrt())
}

/// Collapses replications of one cell into table rows (estimator-major, then `p`).
pub fn summarize(
    experiment_id: &str,
    cfg: &ExperimentConfig,
    n: usize,
    reps: &[Replication],
) -> Result<Vec<RiskRow>> {
    let law = cfg.noise.law()?;
    let mut rows = Vec::new();
    for (e, est) in cfg.estimators.iter().enumerate() {
        let k_hats: Vec<f64> = reps.iter().map(|r| r.estimates[e].k_hat as f64).collect();
        let (mean_k_hat, _) = mean_and_se(&k_hats);
        let runtimes: Option<Vec<f64>> = reps.iter().map(|r| r.estimates[e].runtime).collect();
        let mean_runtime = runtimes.map(|t| mean_and_se(&t).0);
        for (pi, &p) in cfg.p.iter().enumerate() {
            let losses: Vec<f64> = reps.iter().map(|r| r.estimates[e].losses[pi]).collect();
            let (mean_loss, std_error) = mean_and_se(&losses);
            rows.push(RiskRow {
                experiment: experiment_id.to_string(),
                n,
                true_k: cfg.signal.true_k(n),
                signal: cfg.signal.label(),
                noise: format!("{}(sigma={})", law.label(), cfg.noise.sigma),
                estimator: est.name(),
                p,
                replications: reps.len(),
                mean_loss,
                std_error,
                mean_k_hat,
                mean_runtime,
            });
        }
    }
    Ok(rows)
}

/// Runs every grid cell of experiment number `index` of a config.
pub fn run_experiment(
    master_seed: u64,
    index: usize,
    cfg: &ExperimentConfig,
    options: &RunOptions,
) -> Result<RiskTable> {
    cfg.validate(&format!("experiment[{index}]"))?;
    let mut rows = Vec::new();
    for (cell, &n) in cfg.n.iter().enumerate() {
        let reps = run_replications(master_seed, index, cfg, cell, options)?;
        rows.extend(summarize(&cfg.id, cfg, n, &reps)?);
    }
    Ok(RiskTable { rows })
}

/// Runs all experiments of a config, concatenating their rows.
pub fn run_config(cfg: &BenchConfig, threads: Option<usize>) -> Result<RiskTable> {
    let options = RunOptions {
        threads,
        timing: cfg.timing,
    };
    let mut table = RiskTable::default();
    for (i, e) in cfg.experiments.iter().enumerate() {
        table.rows.extend(run_experiment(cfg.master_seed, i, e, &options)?.rows);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_small() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn unimodal_signal_shape() {
        let s = unimodal_signal(10, 4, 2.0).unwrap();
        assert_eq!(s, vec![0.0, 0.0, 2.0, 2.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let s = unimodal_signal(6, 3, 1.0).unwrap();
        assert_eq!(s, vec![0.0, 0.0, 1.0, 1.0, 0.5, 0.5]);
    }
}
