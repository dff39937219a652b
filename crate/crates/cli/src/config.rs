//! Experiment configuration: JSON schema, flag overrides and resolution
//! into concrete traces, manifests and policies.
//!
//! A config file supplies any subset of the fields; missing ones take the
//! defaults below, and command-line flags override the file. Commands write
//! the fully resolved configuration into their output directory, so any run
//! can be reproduced from `config.json` plus the input files it names.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hals_core::adaptation::{
    generate_manifest, AdaptationConfig, ManifestGenSpec, Representation, StreamManifest,
};
use hals_core::error_model::{OVER_FIT_RANGE, UNDER_FIT_RANGE};
use hals_core::sim::{FixedMarginPolicy, LowestPolicy, OraclePolicy, Policy, UtilityPolicy};
use hals_core::trace::synth::{bundled_suite, generate_trace, SyntheticTraceSpec};
use hals_core::ThroughputTrace;

use crate::fail::{data, internal, usage, Failure};
use crate::tracefile;

/// One trace input: either a `t,bytes` CSV on disk or a synthetic spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceSource {
    Path(String),
    Synth(SyntheticTraceSpec),
}

/// Explicit manifest content: exact per-segment sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestContent {
    pub tau_s: f64,
    pub representations: Vec<Representation>,
    /// `segment_sizes[i][j]` is the size of segment `i` in representation
    /// `j`, in bits.
    pub segment_sizes: Vec<Vec<u64>>,
}

/// Manifest generator recipe with every field optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifestSpecFile {
    pub tau_s: f64,
    pub n_segments: usize,
    pub representations: Vec<Representation>,
    /// Coefficient of variation of segment sizes around the mean rate.
    pub vbr_cv: f64,
    /// Seed for the size noise; separate from the master seed so the stream
    /// stays fixed while experiment seeds vary.
    pub seed: u64,
}

impl Default for ManifestSpecFile {
    fn default() -> Self {
        let d = ManifestGenSpec::default();
        ManifestSpecFile {
            tau_s: d.tau_s,
            n_segments: d.n_segments,
            representations: d.representations,
            vbr_cv: d.vbr_cv,
            seed: d.seed,
        }
    }
}

impl ManifestSpecFile {
    fn to_gen_spec(&self) -> ManifestGenSpec {
        ManifestGenSpec {
            tau_s: self.tau_s,
            n_segments: self.n_segments,
            representations: self.representations.clone(),
            vbr_cv: self.vbr_cv,
            seed: self.seed,
        }
    }
}

/// Where the stream manifest comes from: a JSON file (holding either of the
/// two object forms), explicit inline content, or an inline generator spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestSource {
    Path(String),
    Explicit(ManifestContent),
    Generate(ManifestSpecFile),
}

/// The full experiment configuration. Defaults reproduce the bundled
/// evaluation setup: ten high-variation synthetic traces, a 900-segment
/// stream with the ten-step 100-4200 kbps ladder, and the standard
/// adaptation parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every run is a pure function of the config (including
    /// the per-trace seeds inside synthetic specs) and this value.
    pub seed: u64,
    /// Trace inputs in evaluation order; empty means the bundled synthetic
    /// suite.
    pub traces: Vec<TraceSource>,
    pub manifest: ManifestSource,
    pub adaptation: AdaptationConfig,
    /// Policy names for `simulate`: `lowest`, `margin-<m>` with the pick
    /// fraction m in (0, 1], `utility`, `oracle`.
    pub policies: Vec<String>,
    /// Predictor specs for `predict-eval`: `sma:<n>:<ar|gm|hm>`, `ses:<n>`,
    /// `linext:<n>`, `hw:<n>`.
    pub predictors: Vec<String>,
    /// Prediction horizons in seconds for `predict-eval`.
    pub horizons: Vec<u64>,
    /// Sliding-window length for `stats`, seconds.
    pub stats_window_s: u64,
    /// Fit range for overestimation errors in `fit-errors`.
    pub over_fit_range: (f64, f64),
    /// Fit range for underestimation magnitudes in `fit-errors`.
    pub under_fit_range: (f64, f64),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            traces: Vec::new(),
            manifest: ManifestSource::Generate(ManifestSpecFile::default()),
            adaptation: AdaptationConfig::default(),
            policies: [
                "lowest",
                "margin-0.7",
                "margin-0.8",
                "margin-0.9",
                "utility",
                "oracle",
            ]
            .map(String::from)
            .to_vec(),
            predictors: ["sma:1:ar", "sma:4:ar", "ses:4", "linext:2", "hw:4"]
                .map(String::from)
                .to_vec(),
            horizons: vec![1, 3, 9],
            stats_window_s: 1,
            over_fit_range: OVER_FIT_RANGE,
            under_fit_range: UNDER_FIT_RANGE,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let name = path.display();
    let raw = fs::read(path).map_err(|e| data(format!("cannot read config '{name}': {e}")))?;
    serde_json::from_slice(&raw).map_err(|e| data(format!("config '{name}': {e}")))
}

/// Flags shared by every subcommand.
#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// JSON config file; individual flags override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, value_name = "DIR", default_value = "hals-out")]
    pub out: PathBuf,
    /// Trace CSV files (overrides the config's trace list).
    #[arg(long, value_name = "FILE", num_args = 1.., value_delimiter = ',')]
    pub traces: Vec<PathBuf>,
}

impl CommonArgs {
    /// Loads the config (or defaults) and applies the shared overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if !self.traces.is_empty() {
            config.traces = self
                .traces
                .iter()
                .map(|p| TraceSource::Path(p.display().to_string()))
                .collect();
        }
        Ok(config)
    }
}

/// Fills an empty trace list with the bundled suite, loads every source and
/// checks that ids are unique (they name output files).
pub fn materialize_traces(config: &mut ExperimentConfig) -> Result<Vec<ThroughputTrace>, Failure> {
    if config.traces.is_empty() {
        config.traces = bundled_suite().into_iter().map(TraceSource::Synth).collect();
    }
    let mut traces = Vec::with_capacity(config.traces.len());
    for source in &config.traces {
        let trace = match source {
            TraceSource::Path(p) => tracefile::load(Path::new(p))?,
            TraceSource::Synth(spec) => generate_trace(spec)
                .map_err(|e| data(format!("synthetic trace '{}': {e}", spec.id)))?,
        };
        traces.push(trace);
    }
    for i in 1..traces.len() {
        if traces[..i].iter().any(|t| t.id() == traces[i].id()) {
            return Err(data(format!("duplicate trace id '{}'", traces[i].id())));
        }
    }
    Ok(traces)
}

pub fn build_manifest(config: &ExperimentConfig) -> Result<StreamManifest, Failure> {
    match &config.manifest {
        ManifestSource::Path(p) => load_manifest_file(Path::new(p)),
        ManifestSource::Explicit(content) => StreamManifest::new(
            content.tau_s,
            content.representations.clone(),
            content.segment_sizes.clone(),
        )
        .map_err(|e| data(format!("manifest: {e}"))),
        ManifestSource::Generate(spec) => generate_manifest(&spec.to_gen_spec())
            .map_err(|e| data(format!("manifest spec: {e}"))),
    }
}

fn load_manifest_file(path: &Path) -> Result<StreamManifest, Failure> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum FileContent {
        Explicit(ManifestContent),
        Generate(ManifestSpecFile),
    }
    let name = path.display();
    let raw = fs::read(path).map_err(|e| data(format!("cannot read manifest '{name}': {e}")))?;
    let content: FileContent =
        serde_json::from_slice(&raw).map_err(|e| data(format!("manifest '{name}': {e}")))?;
    match content {
        FileContent::Explicit(c) => {
            StreamManifest::new(c.tau_s, c.representations, c.segment_sizes)
                .map_err(|e| data(format!("manifest '{name}': {e}")))
        }
        FileContent::Generate(spec) => generate_manifest(&spec.to_gen_spec())
            .map_err(|e| data(format!("manifest '{name}': {e}"))),
    }
}

/// Builds a policy from its name; `margin-<m>` takes the pick fraction `m`
/// in (0, 1].
pub fn build_policy(name: &str) -> Result<Box<dyn Policy>, String> {
    match name {
        "lowest" => Ok(Box::new(LowestPolicy)),
        "utility" => Ok(Box::new(UtilityPolicy::new())),
        "oracle" => Ok(Box::new(OraclePolicy::new())),
        _ => {
            let margin = name
                .strip_prefix("margin-")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| {
                    format!("unknown policy '{name}' (expected lowest, margin-<m>, utility or oracle)")
                })?;
            if !(margin > 0.0 && margin <= 1.0) {
                return Err(format!("policy '{name}': margin must lie in (0, 1]"));
            }
            Ok(Box::new(FixedMarginPolicy::new(margin)))
        }
    }
}

/// Applies `--policies`/`--margins` on top of the config. A bare `margin`
/// entry in `--policies` expands over the margins list; `--margins` alone
/// swaps the margin set into the standard line-up.
pub fn apply_policy_flags(
    config: &mut ExperimentConfig,
    policies: &[String],
    margins: &[f64],
) -> Result<(), Failure> {
    for &m in margins {
        if !(m > 0.0 && m <= 1.0) || !m.is_finite() {
            return Err(usage(format!("--margins: margin {m} must lie in (0, 1]")));
        }
    }
    let margin_names = || -> Vec<String> {
        let defaults = [0.7, 0.8, 0.9];
        let ms: &[f64] = if margins.is_empty() { &defaults } else { margins };
        ms.iter().map(|m| format!("margin-{m}")).collect()
    };
    if !policies.is_empty() {
        let mut resolved = Vec::new();
        for name in policies {
            if name == "margin" {
                resolved.extend(margin_names());
            } else {
                build_policy(name).map_err(|e| usage(format!("--policies: {e}")))?;
                resolved.push(name.clone());
            }
        }
        config.policies = resolved;
    } else if !margins.is_empty() {
        let mut resolved = vec!["lowest".to_string()];
        resolved.extend(margin_names());
        resolved.push("utility".into());
        resolved.push("oracle".into());
        config.policies = resolved;
    }
    Ok(())
}

/// Writes the fully resolved config into the output directory.
pub fn echo_config(out_dir: &Path, config: &ExperimentConfig) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(config)
        .map_err(|e| internal(format!("cannot serialize config: {e}")))?;
    write_output(&out_dir.join("config.json"), text + "\n")
}

/// Creates the directory (if needed) and reports IO problems as internal.
pub fn ensure_out_dir(out_dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out_dir)
        .map_err(|e| internal(format!("cannot create output directory '{}': {e}", out_dir.display())))
}

pub fn write_output(path: &Path, content: impl AsRef<[u8]>) -> Result<(), Failure> {
    fs::write(path, content)
        .map_err(|e| internal(format!("cannot write '{}': {e}", path.display())))
}

/// File-system-safe version of a trace or policy id used in output names.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}
