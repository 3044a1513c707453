use std::path::Path;

use ddqmc::estimators::susceptibility::{check_fields, susceptibility};
use ddqmc::estimators::{initiator_extrapolate, Extrapolation, InitiatorPoint, SusceptibilityResult};
use ddqmc::oracle::GoldenRecord;
use ddqmc::{EngineParams, Observable, RunOutput, Simulation, XyzModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{ensure_dir, write_json, CsvWriter};

pub const TIMESERIES: &str = "timeseries.csv";
pub const SUMMARY: &str = "summary.json";

/// Blocked estimate of one observable over the measurement phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub observable: Observable,
    pub mean: Option<f64>,
    pub error: Option<f64>,
    pub reliable: bool,
    /// Imaginary part of the ratio; zero up to noise for Hermitian observables.
    pub imaginary: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub estimates: Vec<Estimate>,
    pub steps: u64,
    pub engaged_at: Option<u64>,
    pub mean_shift: Option<f64>,
    pub mean_shift_last_half: Option<f64>,
    pub mean_occupied: f64,
    pub final_n_diag: u64,
    pub final_n_total: u64,
    pub runtime_secs: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl RunSummary {
    pub fn from_output(seed: u64, out: &RunOutput<f64>) -> Self {
        let estimates = out
            .observables
            .iter()
            .zip(&out.accumulators)
            .map(|(&observable, acc)| {
                let b = acc.blocked();
                Estimate {
                    observable,
                    mean: acc.estimate(),
                    error: finite(b.error),
                    reliable: b.reliable,
                    imaginary: acc.imaginary_part(),
                    samples: acc.len(),
                }
            })
            .collect();
        RunSummary {
            seed,
            estimates,
            steps: out.steps,
            engaged_at: out.engaged_at,
            mean_shift: out.mean_shift(),
            mean_shift_last_half: out.mean_shift_last_half(),
            mean_occupied: out.mean_occupied,
            final_n_diag: out.final_n_diag,
            final_n_total: out.final_n_total,
            runtime_secs: out.runtime_secs,
        }
    }

    pub fn estimate(&self, obs: Observable) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.observable == obs)
    }
}

/// Run one simulation, streaming every step to `csv` when given.
pub fn simulate(
    model: &XyzModel<f64>,
    params: &EngineParams<f64>,
    observables: &[Observable],
    csv: Option<&Path>,
) -> Result<RunOutput<f64>, CliError> {
    let mut sim = Simulation::new(model, params.clone(), observables)?;
    let mut writer = csv.map(|p| CsvWriter::create(p, observables)).transpose()?;
    while let Some(record) = sim.advance()? {
        if let Some(w) = writer.as_mut() {
            w.write(&record)?;
        }
    }
    Ok(sim.finish())
}

/// Single run: `timeseries.csv` and `summary.json` in `out`.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunSummary, CliError> {
    ensure_dir(out)?;
    let model = cfg.model()?;
    let params = cfg.params();
    let output = simulate(&model, &params, &cfg.observables, Some(&out.join(TIMESERIES)))?;
    let summary = RunSummary::from_output(params.seed, &output);
    write_json(&out.join(SUMMARY), &summary)?;
    log::info!("run finished in {:.1}s", summary.runtime_secs);
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub jy: f64,
    pub observable: Observable,
    pub estimate: Option<f64>,
    pub error: Option<f64>,
}

fn job_config(cfg: &RunConfig, job: usize) -> RunConfig {
    let mut c = cfg.clone();
    c.engine.seed = cfg.engine.seed.wrapping_add(job as u64);
    c
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One run per `Jy`, job `k` in `out/jy_<k>` with seed offset `k`; merged
/// table in `out/sweep.csv`.
pub fn cmd_sweep(cfg: &RunConfig, jys: &[f64], out: &Path) -> Result<Vec<SweepRow>, CliError> {
    ensure_dir(out)?;
    let summaries: Vec<RunSummary> = jys
        .par_iter()
        .enumerate()
        .map(|(job, &jy)| {
            let mut c = job_config(cfg, job);
            c.model.jy = jy;
            c.validate()?;
            cmd_run(&c, &out.join(format!("jy_{job}")))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut text = String::from("jy,observable,estimate,error\n");
    for (&jy, s) in jys.iter().zip(&summaries) {
        for e in &s.estimates {
            text.push_str(&format!("{jy},{},{},{}\n", e.observable, opt(e.mean), opt(e.error)));
            rows.push(SweepRow {
                jy,
                observable: e.observable,
                estimate: e.mean,
                error: e.error,
            });
        }
    }
    let path = out.join("sweep.csv");
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityReport {
    pub fields: Vec<f64>,
    pub initiator_limits: Vec<f64>,
    pub results: Vec<SusceptibilityResult<f64>>,
    /// `chi_av` extrapolated to zero initiator limit, when several limits ran.
    pub chi_av_extrapolated: Option<Extrapolation<f64>>,
}

/// Seven-run field protocol, optionally repeated per initiator limit and
/// extrapolated. Writes `susceptibility.json`.
pub fn cmd_susceptibility(cfg: &RunConfig, fields: &[f64], out: &Path) -> Result<SusceptibilityReport, CliError> {
    check_fields(fields).map_err(|e| CliError::Config(e.to_string()))?;
    ensure_dir(out)?;
    let model = cfg.model()?;
    let limits = cfg.initiator_limits.clone().unwrap_or_else(|| vec![cfg.engine.i_limit]);
    let results: Vec<SusceptibilityResult<f64>> = limits
        .par_iter()
        .enumerate()
        .map(|(k, &limit)| {
            let mut params = cfg.params();
            params.initiator_limit = limit;
            // seven jobs per limit, seeds never overlap between limits
            params.seed = params.seed.wrapping_add(7 * k as u64);
            susceptibility(&model, &params, fields).map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;
    let chi_av_extrapolated = if limits.len() >= 2 {
        let points: Vec<InitiatorPoint<f64>> = limits
            .iter()
            .zip(&results)
            .map(|(&limit, r)| InitiatorPoint {
                limit,
                estimate: r.chi_av,
                error: r.chi_av_err,
            })
            .collect();
        Some(initiator_extrapolate(&points, cfg.extrapolate_lowest)?)
    } else {
        None
    };
    let report = SusceptibilityReport {
        fields: fields.to_vec(),
        initiator_limits: limits,
        results,
        chi_av_extrapolated,
    };
    write_json(&out.join("susceptibility.json"), &report)?;
    Ok(report)
}

/// Dense steady state; writes `exact.json`.
pub fn cmd_exact(cfg: &RunConfig, out: &Path) -> Result<GoldenRecord, CliError> {
    ensure_dir(out)?;
    let record = GoldenRecord::compute(&cfg.model()?)?;
    write_json(&out.join("exact.json"), &record)?;
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableExtrapolation {
    pub observable: Observable,
    pub points: Vec<InitiatorPoint<f64>>,
    pub fit: Option<Extrapolation<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    pub runs: Vec<RunSummary>,
    pub observables: Vec<ObservableExtrapolation>,
}

/// One run per initiator limit (job `k` in `out/ilimit_<k>`), then a linear
/// fit to zero limit per observable. A lone limit of 0 is a plain run with no
/// fit. Writes `extrapolation.json`.
pub fn cmd_extrapolate(cfg: &RunConfig, limits: &[f64], out: &Path) -> Result<ExtrapolationReport, CliError> {
    let plain = limits == [0.0];
    if limits.len() < 2 && !plain {
        return Err(CliError::Config("initiator_limits: need at least two values".into()));
    }
    if let Some(bad) = limits.iter().find(|l| !(**l >= 0.0)) {
        return Err(CliError::Config(format!("initiator_limits: {bad} must be >= 0")));
    }
    ensure_dir(out)?;
    let runs: Vec<RunSummary> = limits
        .par_iter()
        .enumerate()
        .map(|(job, &limit)| {
            let mut c = job_config(cfg, job);
            c.engine.i_limit = limit;
            cmd_run(&c, &out.join(format!("ilimit_{job}")))
        })
        .collect::<Result<_, _>>()?;
    let mut observables = Vec::new();
    for &obs in &cfg.observables {
        let points = limits
            .iter()
            .zip(&runs)
            .map(|(&limit, r)| {
                let e = r.estimate(obs).expect("observable was measured");
                match (e.mean, e.error) {
                    (Some(estimate), Some(error)) => Ok(InitiatorPoint { limit, estimate, error }),
                    _ => Err(CliError::Config(format!(
                        "no measurement data for {obs} at I_limit {limit}; increase measurement_steps"
                    ))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let fit = if plain {
            None
        } else {
            Some(initiator_extrapolate(&points, cfg.extrapolate_lowest)?)
        };
        observables.push(ObservableExtrapolation {
            observable: obs,
            points,
            fit,
        });
    }
    let report = ExtrapolationReport { runs, observables };
    write_json(&out.join("extrapolation.json"), &report)?;
    Ok(report)
}
