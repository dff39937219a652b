//! `stats`: per-trace throughput statistics over a sliding window, plus the
//! distribution of each statistic across the trace set.

use hals_core::trace::{statistics, window, TraceStatistics};

use super::{cell, opt_cell, write_csv};
use crate::config::{echo_config, ensure_out_dir, materialize_traces, CommonArgs};
use crate::fail::{data, Failure};

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run(args: &StatsArgs) -> Result<(), Failure> {
    let mut config = args.common.resolve()?;
    let traces = materialize_traces(&mut config)?;
    ensure_out_dir(&args.common.out)?;

    let w = config.stats_window_s;
    let mut stats: Vec<(String, TraceStatistics)> = Vec::with_capacity(traces.len());
    for trace in &traces {
        let series =
            window(trace, w).map_err(|e| data(format!("trace '{}': {e}", trace.id())))?;
        let s = statistics(&series).map_err(|e| data(format!("trace '{}': {e}", trace.id())))?;
        stats.push((trace.id().to_string(), s));
    }

    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|(id, s)| {
            vec![
                id.clone(),
                w.to_string(),
                cell(s.median_bps),
                cell(s.cv),
                opt_cell(s.acf1),
                opt_cell(s.acf1_diff),
            ]
        })
        .collect();
    write_csv(
        &args.common.out.join("stats.csv"),
        &["trace_id", "window_s", "median_bps", "cv", "acf1", "acf1_diff"],
        &rows,
    )?;

    // One empirical CDF per statistic, across traces: the compact view of
    // how spread out the trace set is.
    let columns: [(&str, fn(&TraceStatistics) -> Option<f64>); 4] = [
        ("median_bps", |s| Some(s.median_bps)),
        ("cv", |s| Some(s.cv)),
        ("acf1", |s| s.acf1),
        ("acf1_diff", |s| s.acf1_diff),
    ];
    let mut ecdf_rows: Vec<Vec<String>> = Vec::new();
    for (name, get) in columns {
        let mut values: Vec<f64> = stats.iter().filter_map(|(_, s)| get(s)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
        let n = values.len();
        for (i, v) in values.into_iter().enumerate() {
            ecdf_rows.push(vec![name.to_string(), cell(v), cell((i + 1) as f64 / n as f64)]);
        }
    }
    write_csv(
        &args.common.out.join("stats_ecdf.csv"),
        &["statistic", "value", "cum_fraction"],
        &ecdf_rows,
    )?;

    echo_config(&args.common.out, &config)?;
    println!(
        "wrote statistics for {} traces (window {w} s) to {}",
        traces.len(),
        args.common.out.display()
    );
    Ok(())
}
