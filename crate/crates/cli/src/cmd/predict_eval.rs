//! `predict-eval`: replay predictors over traces at every viable second and
//! tabulate the signed relative errors.

use rayon::prelude::*;

use hals_core::predictor::{evaluate_predictor, PredictionRecord, PredictorSpec};
use hals_core::ThroughputTrace;

use super::{cell, write_csv};
use crate::config::{echo_config, ensure_out_dir, materialize_traces, CommonArgs};
use crate::fail::{data, internal, Failure};

#[derive(Debug, clap::Args)]
pub struct PredictEvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Prediction horizons in seconds (overrides the config).
    #[arg(long, num_args = 1.., value_delimiter = ',',
          value_parser = clap::value_parser!(u64).range(1..))]
    pub horizons: Vec<u64>,
}

const THRESHOLDS: [f64; 3] = [0.2, 0.5, 1.0];

pub fn run(args: &PredictEvalArgs) -> Result<(), Failure> {
    let mut config = args.common.resolve()?;
    if !args.horizons.is_empty() {
        config.horizons = args.horizons.clone();
    }
    if config.horizons.is_empty() || config.horizons.contains(&0) {
        return Err(data("config: horizons must be a non-empty list of positive seconds".into()));
    }
    let specs: Vec<PredictorSpec> = config
        .predictors
        .iter()
        .map(|s| s.parse().map_err(|e| data(format!("config: predictor '{s}': {e}"))))
        .collect::<Result<_, _>>()?;
    if specs.is_empty() {
        return Err(data("config: predictors must be a non-empty list".into()));
    }
    let traces = materialize_traces(&mut config)?;
    ensure_out_dir(&args.common.out)?;

    // One unit per (trace, predictor, horizon), evaluated in parallel but
    // collected in order so the output bytes do not depend on scheduling.
    let units: Vec<(&ThroughputTrace, &PredictorSpec, u64)> = traces
        .iter()
        .flat_map(|t| specs.iter().flat_map(move |s| config.horizons.iter().map(move |&h| (t, s, h))))
        .collect();
    let rho_min = config.adaptation.rho_min_bps;
    let evaluated: Vec<Vec<PredictionRecord>> = units
        .par_iter()
        .map(|(trace, spec, h)| {
            evaluate_predictor(trace, spec, *h, rho_min).map_err(|e| {
                data(format!("trace '{}', predictor {spec}, horizon {h} s: {e}", trace.id()))
            })
        })
        .collect::<Result<_, _>>()?;

    let mut record_rows: Vec<Vec<String>> = Vec::new();
    let mut summary_rows: Vec<Vec<String>> = Vec::new();
    for ((trace, spec, h), records) in units.iter().zip(&evaluated) {
        for r in records {
            record_rows.push(vec![
                trace.id().to_string(),
                spec.to_string(),
                h.to_string(),
                r.t_issued_s.to_string(),
                cell(r.rho_hat_bps),
                cell(r.rho_actual_bps),
                cell(r.signed_error),
            ]);
        }
        for side in ["under", "over"] {
            let magnitudes: Vec<f64> = records
                .iter()
                .map(|r| r.signed_error)
                .filter(|&e| if side == "under" { e <= 0.0 } else { e > 0.0 })
                .map(f64::abs)
                .collect();
            summary_rows.push(summary_row(trace.id(), spec, *h, side, &magnitudes)?);
        }
    }

    write_csv(
        &args.common.out.join("prediction_records.csv"),
        &["trace_id", "predictor", "horizon_s", "t_issued", "rho_hat", "rho_actual", "signed_error"],
        &record_rows,
    )?;
    write_csv(
        &args.common.out.join("prediction_summary.csv"),
        &["trace_id", "predictor", "horizon_s", "side", "n", "frac_lt_0.2", "frac_lt_0.5", "frac_lt_1.0"],
        &summary_rows,
    )?;

    echo_config(&args.common.out, &config)?;
    println!(
        "evaluated {} predictors x {} horizons over {} traces -> {}",
        specs.len(),
        config.horizons.len(),
        traces.len(),
        args.common.out.display()
    );
    Ok(())
}

/// Fraction of errors below each threshold; enforced nondecreasing across
/// the thresholds as a self-check on every emitted row.
fn summary_row(
    trace_id: &str,
    spec: &PredictorSpec,
    horizon: u64,
    side: &str,
    magnitudes: &[f64],
) -> Result<Vec<String>, Failure> {
    let n = magnitudes.len();
    let mut row = vec![trace_id.to_string(), spec.to_string(), horizon.to_string(), side.into(), n.to_string()];
    if n == 0 {
        row.extend([String::new(), String::new(), String::new()]);
        return Ok(row);
    }
    let mut last = -1.0;
    for threshold in THRESHOLDS {
        let frac = magnitudes.iter().filter(|&&m| m < threshold).count() as f64 / n as f64;
        if frac < last {
            return Err(internal(format!(
                "threshold fractions decreased ({last} -> {frac}) for {trace_id}/{spec}/h{horizon}/{side}"
            )));
        }
        last = frac;
        row.push(cell(frac));
    }
    Ok(row)
}
