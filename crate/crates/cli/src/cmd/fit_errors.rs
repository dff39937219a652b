//! `fit-errors`: fit the four distribution families to prediction errors
//! collected by `predict-eval`, per (trace, predictor, horizon, side).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use hals_core::error_model::{fit_distribution, ks_distance, ErrorModelError, Family, FamilyParams};

use super::{cell, write_csv};
use crate::config::{echo_config, ensure_out_dir, write_output, CommonArgs, ExperimentConfig};
use crate::fail::{data, internal, usage, Failure};

#[derive(Debug, clap::Args)]
pub struct FitErrorsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Prediction-records CSVs produced by `predict-eval`.
    #[arg(required = true, value_name = "RECORDS_CSV", num_args = 1..)]
    pub records: Vec<PathBuf>,
}

const FAMILIES: [Family; 4] = [Family::Exponential, Family::Normal, Family::Logistic, Family::Lomax];

/// Grouping key; `over` sorts after `under` so report order is stable.
type GroupKey = (String, String, u64, bool);

#[derive(Debug, Serialize)]
struct FamilyFit {
    family: Family,
    params: FamilyParams,
    ks_distance: f64,
}

#[derive(Debug, Serialize)]
struct GroupReport {
    trace_id: String,
    predictor: String,
    horizon_s: u64,
    side: &'static str,
    n_samples: usize,
    n_in_fit_range: usize,
    /// True when too few samples fall in the fit range (< 8): no fit is
    /// attempted and the online pipeline would use its built-in prior.
    fallback: bool,
    fits: Vec<FamilyFit>,
    best: Option<Family>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    under_fit_range: (f64, f64),
    over_fit_range: (f64, f64),
    groups: Vec<GroupReport>,
}

pub fn run(args: &FitErrorsArgs) -> Result<(), Failure> {
    if !args.common.traces.is_empty() {
        return Err(usage("fit-errors reads prediction-records CSVs, not traces; pass them as positional arguments"));
    }
    let config = args.common.resolve()?;
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for path in &args.records {
        collect_records(path, &mut groups)?;
    }
    ensure_out_dir(&args.common.out)?;

    let grouped: Vec<(GroupKey, Vec<f64>)> = groups.into_iter().collect();
    let reports: Vec<GroupReport> = grouped
        .par_iter()
        .map(|(key, samples)| fit_group(key, samples, &config))
        .collect::<Result<_, _>>()?;

    let mut ecdf_rows: Vec<Vec<String>> = Vec::new();
    for ((trace_id, predictor, horizon, over), samples) in &grouped {
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("validated finite"));
        let n = sorted.len();
        for (i, v) in sorted.into_iter().enumerate() {
            ecdf_rows.push(vec![
                trace_id.clone(),
                predictor.clone(),
                horizon.to_string(),
                if *over { "over" } else { "under" }.to_string(),
                cell(v),
                cell((i + 1) as f64 / n as f64),
            ]);
        }
    }
    write_csv(
        &args.common.out.join("error_ecdf.csv"),
        &["trace_id", "predictor", "horizon_s", "side", "value", "cum_fraction"],
        &ecdf_rows,
    )?;

    let fallbacks = reports.iter().filter(|r| r.fallback).count();
    for r in reports.iter().filter(|r| r.fallback) {
        eprintln!(
            "warning: {}/{}/h{}/{}: only {} of {} samples fall in the fit range (need 8); \
             flagged as fallback",
            r.trace_id, r.predictor, r.horizon_s, r.side, r.n_in_fit_range, r.n_samples
        );
    }

    let report = FitReport {
        under_fit_range: config.under_fit_range,
        over_fit_range: config.over_fit_range,
        groups: reports,
    };
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| internal(format!("cannot serialize fit report: {e}")))?;
    write_output(&args.common.out.join("fit_report.json"), text + "\n")?;

    echo_config(&args.common.out, &config)?;
    println!(
        "fitted {} groups ({} flagged fallback) -> {}",
        report.groups.len(),
        fallbacks,
        args.common.out.display()
    );
    Ok(())
}

/// Reads one records CSV, validates the error column and buckets the error
/// magnitudes by (trace, predictor, horizon, side). Zero errors count as
/// underestimations, matching the online model.
fn collect_records(path: &Path, groups: &mut BTreeMap<GroupKey, Vec<f64>>) -> Result<(), Failure> {
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| data(format!("cannot read records '{name}': {e}")))?;
    let headers = reader.headers().map_err(|e| data(format!("'{name}': {e}")))?.clone();
    let col = |want: &str| {
        headers
            .iter()
            .position(|h| h == want)
            .ok_or_else(|| data(format!("'{name}': missing column '{want}'")))
    };
    let (c_trace, c_pred, c_h, c_err) =
        (col("trace_id")?, col("predictor")?, col("horizon_s")?, col("signed_error")?);

    for row in reader.records() {
        let row = row.map_err(|e| data(format!("'{name}': {e}")))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| {
            row.get(i).ok_or_else(|| data(format!("'{name}' line {line}: short row")))
        };
        let horizon: u64 = field(c_h)?
            .parse()
            .map_err(|_| data(format!("'{name}' line {line}: horizon_s is not an unsigned integer")))?;
        let e: f64 = field(c_err)?
            .parse()
            .map_err(|_| data(format!("'{name}' line {line}: signed_error is not a number")))?;
        if !e.is_finite() || e <= -1.0 {
            return Err(data(format!(
                "'{name}' line {line}: signed_error must be finite and greater than -1, got {e}"
            )));
        }
        let key = (field(c_trace)?.to_string(), field(c_pred)?.to_string(), horizon, e > 0.0);
        groups.entry(key).or_default().push(e.abs());
    }
    Ok(())
}

fn fit_group(
    key: &GroupKey,
    samples: &[f64],
    config: &ExperimentConfig,
) -> Result<GroupReport, Failure> {
    let (trace_id, predictor, horizon, over) = key;
    // Same truncations as the online error model: underestimation
    // magnitudes live on [0, 1], overestimations on [0, inf).
    let (truncation, fit_range) = if *over {
        ((0.0, f64::INFINITY), config.over_fit_range)
    } else {
        ((0.0, 1.0), config.under_fit_range)
    };
    let lo = fit_range.0.max(truncation.0);
    let hi = fit_range.1.min(truncation.1);
    let n_in_fit_range = samples.iter().filter(|x| (lo..=hi).contains(x)).count();

    let mut fits: Vec<FamilyFit> = Vec::with_capacity(FAMILIES.len());
    let mut fallback = false;
    for family in FAMILIES {
        match fit_distribution(samples, family, truncation, fit_range) {
            Ok(dist) => {
                let ks = ks_distance(samples, &dist).map_err(|e| {
                    internal(format!("KS distance failed for {trace_id}/{predictor}: {e}"))
                })?;
                fits.push(FamilyFit { family, params: dist.params(), ks_distance: ks });
            }
            // The in-range sample count is family-independent, so the first
            // shortage tells us no family can be fitted.
            Err(ErrorModelError::TooFewSamples { .. }) => {
                fallback = true;
                fits.clear();
                break;
            }
            Err(e) => {
                return Err(internal(format!(
                    "fitting {family:?} to {trace_id}/{predictor}/h{horizon}: {e}"
                )))
            }
        }
    }
    let best = fits
        .iter()
        .fold(None::<&FamilyFit>, |best, f| match best {
            Some(b) if b.ks_distance <= f.ks_distance => Some(b),
            _ => Some(f),
        })
        .map(|f| f.family);
    Ok(GroupReport {
        trace_id: trace_id.clone(),
        predictor: predictor.clone(),
        horizon_s: *horizon,
        side: if *over { "over" } else { "under" },
        n_samples: samples.len(),
        n_in_fit_range,
        fallback,
        fits,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn collect_records_groups_by_side() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "trace_id,predictor,horizon_s,t_issued,rho_hat,rho_actual,signed_error").unwrap();
        writeln!(f, "a,ses:4,3,10,1.0,2.0,-0.5").unwrap();
        writeln!(f, "a,ses:4,3,11,3.0,2.0,0.5").unwrap();
        writeln!(f, "a,ses:4,3,12,2.0,2.0,0").unwrap();
        let mut groups = BTreeMap::new();
        collect_records(f.path(), &mut groups).unwrap();
        let under = groups.get(&("a".into(), "ses:4".into(), 3, false)).unwrap();
        let over = groups.get(&("a".into(), "ses:4".into(), 3, true)).unwrap();
        assert_eq!(under, &[0.5, 0.0]);
        assert_eq!(over, &[0.5]);
    }

    #[test]
    fn collect_records_rejects_bad_rows_with_line_numbers() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "trace_id,predictor,horizon_s,t_issued,rho_hat,rho_actual,signed_error").unwrap();
        writeln!(f, "a,ses:4,3,10,1.0,2.0,-1.5").unwrap();
        let mut groups = BTreeMap::new();
        let err = collect_records(f.path(), &mut groups).unwrap_err();
        assert_eq!(err.code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn missing_column_is_a_data_error() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        writeln!(f, "trace_id,predictor,horizon_s").unwrap();
        writeln!(f, "a,ses:4,3").unwrap();
        let err = collect_records(f.path(), &mut BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("signed_error"), "{err}");
    }
}
