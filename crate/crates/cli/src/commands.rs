//! The computations behind each subcommand, free of file handling so they can
//! be driven in-process.

use rayon::prelude::*;
use serde::Serialize;

use ottokz_core::analysis::{
    adiabatic_limit, amplitude_at_exponent, default_window, efficiency_bound, eta_at_max_power,
    fit_kz_exponent, predicted_work_exponent, w_infinity, AdiabaticLimit, MaxPowerPrediction, WInfMethod,
};
use ottokz_core::cycle::{run_cycle, CycleTotals, RunDiagnostics};
use ottokz_core::{BoundResult64, CycleConfig64, CycleRecord64, ScalingFit64};

use crate::config::{ResolvedConfig, SweepAxis, WInfSource};
use crate::error::CliError;
use crate::format::{cell, sci};

/// Runs `f` on a pool of `jobs` workers, or on the global pool for `None`.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn resolve_w_inf(source: WInfSource, cycle: &CycleConfig64) -> ottokz_core::Result<f64> {
    match source {
        WInfSource::Numeric => w_infinity(cycle, WInfMethod::Numeric),
        WInfSource::Analytic => w_infinity(cycle, WInfMethod::Analytic),
        WInfSource::Value(v) => Ok(v),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub totals: CycleTotals<f64>,
    pub diagnostics: RunDiagnostics<f64>,
    pub adiabatic: Option<AdiabaticLimit<f64>>,
    /// Why `adiabatic` is missing, when it is.
    pub adiabatic_error: Option<String>,
}

pub fn run(cfg: &ResolvedConfig) -> Result<(CycleRecord64, RunReport), CliError> {
    let record = run_cycle(&cfg.cycle)?;
    let (adiabatic, adiabatic_error) = match adiabatic_limit(&cfg.cycle) {
        Ok(a) => (Some(a), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = RunReport {
        totals: record.totals.clone(),
        diagnostics: record.diagnostics,
        adiabatic,
        adiabatic_error,
    };
    Ok((record, report))
}

/// Per-mode rows: `k, E_A, E_B, E_C, E_D, E_A_ground, E_D_ground, Q_in, Q_out, W, class`.
pub fn modes_csv(record: &CycleRecord64) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "E_A", "E_B", "E_C", "E_D", "E_A_ground", "E_D_ground", "Q_in", "Q_out", "W", "class"])?;
    for m in &record.per_mode {
        let nums = [m.k, m.e_a, m.e_b, m.e_c, m.e_d, m.e_a_ground, m.e_d_ground, m.q_in, m.q_out, m.w];
        let mut row: Vec<String> = nums.iter().map(|v| sci(*v)).collect();
        row.push(m.class.as_str().to_string());
        w.write_record(&row)?;
    }
    finish(w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub totals: Result<CycleTotals<f64>, String>,
    pub diagnostics: Option<RunDiagnostics<f64>>,
    pub w_inf: Option<f64>,
    pub eta_max: Option<f64>,
}

/// One cycle per grid point, returned in grid order whatever the scheduling.
/// A failing point is recorded in its row and the sweep carries on.
pub fn sweep(cfg: &ResolvedConfig, jobs: Option<usize>) -> Result<(SweepAxis, Vec<SweepRow>), CliError> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("the config has no [sweep] section".into()))?;
    let grid = spec.grid()?;
    let axis = spec.axis;
    let shared_w_inf = match axis {
        SweepAxis::Tau2 => Some(w_inf_or_log(cfg, &cfg.cycle)),
        SweepAxis::H2 => None,
    };
    let rows = with_jobs(jobs, || {
        grid.par_iter()
            .map(|&value| {
                let cycle = cfg.cycle_at(axis, value);
                let w_inf = shared_w_inf.unwrap_or_else(|| w_inf_or_log(cfg, &cycle));
                let eta_max = efficiency_bound(&cycle).ok().map(|b| b.eta_max);
                let run = run_cycle(&cycle).map_err(|e| {
                    log::warn!("{} = {value}: {e}", axis.as_str());
                    e.to_string()
                });
                SweepRow {
                    value,
                    diagnostics: run.as_ref().ok().map(|r| r.diagnostics),
                    totals: run.map(|r| r.totals),
                    w_inf,
                    eta_max,
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok((axis, rows))
}

fn w_inf_or_log(cfg: &ResolvedConfig, cycle: &CycleConfig64) -> Option<f64> {
    match resolve_w_inf(cfg.fit.w_inf, cycle) {
        Ok(w) => Some(w),
        Err(e) => {
            log::info!("W_inf unavailable at h2 = {}: {e}", cycle.h2);
            None
        }
    }
}

pub const SWEEP_COLUMNS: [&str; 10] = ["W", "Q_in", "Q_out", "eta", "P", "W_inf", "W_minus_W_inf", "eta_max", "class", "error"];

pub fn sweep_csv(axis: SweepAxis, rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![axis.as_str()];
    header.extend(SWEEP_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![sci(r.value)];
        match &r.totals {
            Ok(t) => {
                for v in [Some(t.w), Some(t.q_in), Some(t.q_out), t.eta, Some(t.power), r.w_inf] {
                    row.push(cell(v));
                }
                row.push(cell(r.w_inf.map(|wi| t.w - wi)));
                row.push(cell(r.eta_max));
                row.push(t.class.as_str().to_string());
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(cell(r.w_inf));
                row.push(String::new());
                row.push(cell(r.eta_max));
                row.push(String::new());
                row.push(e.clone());
            }
        }
        w.write_record(&row)?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Internal(e.to_string()))
}

/// `(τ₂, W)` pairs from a sweep CSV, skipping rows that carry an error.
pub fn read_sweep_points(data: &[u8]) -> Result<Vec<(f64, f64)>, CliError> {
    let mut r = csv::Reader::from_reader(data);
    let headers = r.headers().map_err(|e| CliError::Fit(format!("unreadable sweep CSV: {e}")))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Fit(format!("sweep CSV has no `{name}` column")))
    };
    let (t_col, w_col) = (col("tau2")?, col("W")?);
    let e_col = headers.iter().position(|h| h == "error");
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Fit(format!("sweep CSV row {}: {e}", i + 1)))?;
        if e_col.and_then(|c| rec.get(c)).is_some_and(|e| !e.is_empty()) {
            continue;
        }
        let parse = |c: usize| -> Result<f64, CliError> {
            let s = rec.get(c).unwrap_or("");
            s.parse()
                .map_err(|_| CliError::Fit(format!("sweep CSV row {}: `{s}` is not a number", i + 1)))
        };
        points.push((parse(t_col)?, parse(w_col)?));
    }
    Ok(points)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub fit: ScalingFit64,
    pub deviation: f64,
    pub w_inf: f64,
    pub w_inf_source: String,
    /// Analytic chain with the amplitude refitted at the predicted exponent.
    pub max_power: Option<MaxPowerChain>,
    /// Same chain with the amplitude of the free fit.
    pub max_power_free_amplitude: Option<MaxPowerChain>,
    pub max_power_error: Option<String>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxPowerChain {
    pub amplitude: f64,
    #[serde(flatten)]
    pub prediction: MaxPowerPrediction<f64>,
}

pub fn fit(cfg: &ResolvedConfig, points: &[(f64, f64)]) -> Result<FitReport, CliError> {
    let w_inf = resolve_w_inf(cfg.fit.w_inf, &cfg.cycle)?;
    let window = match cfg.fit.window {
        Some(w) => w,
        None => default_window(points, w_inf).map_err(|e| CliError::Fit(e.to_string()))?,
    };
    let e = &cfg.fit.exponents;
    let fit = fit_kz_exponent(points, w_inf, window, e).map_err(|e| CliError::Fit(e.to_string()))?;
    let chain = |amplitude: f64| -> ottokz_core::Result<MaxPowerChain> {
        Ok(MaxPowerChain {
            amplitude,
            prediction: eta_at_max_power(&cfg.cycle, w_inf, amplitude, e)?,
        })
    };
    let pinned = amplitude_at_exponent(points, w_inf, window, predicted_work_exponent(e))
        .map_err(|e| CliError::Fit(e.to_string()))?;
    let (max_power, max_power_free_amplitude, max_power_error) = match (chain(pinned), chain(fit.amplitude)) {
        (Ok(a), Ok(b)) => (Some(a), Some(b), None),
        (Err(err), _) | (_, Err(err)) => (None, None, Some(err.to_string())),
    };
    Ok(FitReport {
        deviation: fit.deviation(),
        fit,
        w_inf,
        w_inf_source: match cfg.fit.w_inf {
            WInfSource::Numeric => "numeric".into(),
            WInfSource::Analytic => "analytic".into(),
            WInfSource::Value(_) => "value".into(),
        },
        max_power,
        max_power_free_amplitude,
        max_power_error,
    })
}

pub fn bound(cfg: &ResolvedConfig) -> Result<BoundResult64, CliError> {
    Ok(efficiency_bound(&cfg.cycle)?)
}
