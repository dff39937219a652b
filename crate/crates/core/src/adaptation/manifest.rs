//! Stream manifests: representation ladders and per-segment sizes.

use alloc::vec::Vec;
use core::fmt;

use libm::{exp, round, sqrt};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::AdaptError;
use crate::trace::synth::standard_normal;

/// One entry of the representation ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Representation {
    /// Mean media bit rate over the whole stream, bits per second.
    pub mmbr_bps: f64,
    /// Mean luma PSNR used as the quality proxy, dB.
    pub psnr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifestError {
    EmptyLadder,
    /// Mean rates must increase strictly with the representation index.
    UnsortedRates,
    /// PSNR must increase strictly with the representation index.
    NonIncreasingPsnr,
    NoSegments,
    /// A size row does not have one entry per representation.
    RowWidth { segment: usize },
    ZeroSize { segment: usize, rep: usize },
    /// Mean segment rate of a representation strays more than 1 % from its
    /// declared mean rate.
    MeanRateMismatch { rep: usize },
    InvalidTau,
    InvalidSpec { reason: &'static str },
}

impl fmt::Display for ManifestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestError::EmptyLadder => write!(f, "manifest needs at least one representation"),
            ManifestError::UnsortedRates => {
                write!(f, "representation mean rates must be strictly increasing")
            }
            ManifestError::NonIncreasingPsnr => {
                write!(f, "representation PSNR values must be strictly increasing")
            }
            ManifestError::NoSegments => write!(f, "manifest needs at least one segment"),
            ManifestError::RowWidth { segment } => {
                write!(f, "segment {segment} does not list one size per representation")
            }
            ManifestError::ZeroSize { segment, rep } => {
                write!(f, "segment {segment}, representation {rep} has zero size")
            }
            ManifestError::MeanRateMismatch { rep } => write!(
                f,
                "mean segment rate of representation {rep} deviates more than 1 % from its declared rate"
            ),
            ManifestError::InvalidTau => write!(f, "segment duration must be positive and finite"),
            ManifestError::InvalidSpec { reason } => write!(f, "invalid manifest spec: {reason}"),
        }
    }
}

impl core::error::Error for ManifestError {}

/// Segmented stream description: duration, ladder, and exact per-segment
/// sizes for every representation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StreamManifest {
    tau_s: f64,
    representations: Vec<Representation>,
    /// `segment_sizes_bits[i][j]` is the size of segment `i` in
    /// representation `j`, in bits.
    segment_sizes_bits: Vec<Vec<u64>>,
}

impl StreamManifest {
    pub fn new(
        tau_s: f64,
        representations: Vec<Representation>,
        segment_sizes_bits: Vec<Vec<u64>>,
    ) -> Result<Self, ManifestError> {
        if !(tau_s > 0.0) || !tau_s.is_finite() {
            return Err(ManifestError::InvalidTau);
        }
        if representations.is_empty() {
            return Err(ManifestError::EmptyLadder);
        }
        let m = representations.len();
        for w in representations.windows(2) {
            if !(w[1].mmbr_bps > w[0].mmbr_bps) {
                return Err(ManifestError::UnsortedRates);
            }
            if !(w[1].psnr_db > w[0].psnr_db) {
                return Err(ManifestError::NonIncreasingPsnr);
            }
        }
        if segment_sizes_bits.is_empty() {
            return Err(ManifestError::NoSegments);
        }
        for (i, row) in segment_sizes_bits.iter().enumerate() {
            if row.len() != m {
                return Err(ManifestError::RowWidth { segment: i });
            }
            for (j, &s) in row.iter().enumerate() {
                if s == 0 {
                    return Err(ManifestError::ZeroSize { segment: i, rep: j });
                }
            }
        }
        let n = segment_sizes_bits.len() as f64;
        for (j, rep) in representations.iter().enumerate() {
            let total: f64 = segment_sizes_bits.iter().map(|row| row[j] as f64).sum();
            let mean_rate = total / (n * tau_s);
            if !(mean_rate / rep.mmbr_bps - 1.0).abs().is_finite()
                || (mean_rate / rep.mmbr_bps - 1.0).abs() > 0.01
            {
                return Err(ManifestError::MeanRateMismatch { rep: j });
            }
        }
        Ok(StreamManifest { tau_s, representations, segment_sizes_bits })
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_s
    }

    pub fn representations(&self) -> &[Representation] {
        &self.representations
    }

    pub fn n_representations(&self) -> usize {
        self.representations.len()
    }

    pub fn n_segments(&self) -> usize {
        self.segment_sizes_bits.len()
    }

    /// Size of segment `i` in representation `j`, bits.
    pub fn size_bits(&self, segment: usize, rep: usize) -> u64 {
        self.segment_sizes_bits[segment][rep]
    }

    /// Per-representation sizes of one segment.
    pub fn sizes_of(&self, segment: usize) -> &[u64] {
        &self.segment_sizes_bits[segment]
    }

    pub fn segment_sizes(&self) -> &[Vec<u64>] {
        &self.segment_sizes_bits
    }

    /// PSNR mapped affinely to `[0, 1]`: the lowest representation scores 0,
    /// the highest 1. Affine changes of the PSNR scale leave this unchanged.
    pub fn quality_scores(&self) -> Result<Vec<f64>, AdaptError> {
        let lo = self.representations.first().expect("non-empty ladder").psnr_db;
        let hi = self.representations.last().expect("non-empty ladder").psnr_db;
        if !(hi > lo) {
            return Err(AdaptError::DegeneratePsnrRange);
        }
        Ok(self.representations.iter().map(|r| (r.psnr_db - lo) / (hi - lo)).collect())
    }
}

/// Ten representations from 100 kbit/s to 4.2 Mbit/s with geometrically
/// spaced rates and PSNR rising linearly from 30 dB to 42 dB.
pub fn default_ladder() -> Vec<Representation> {
    let m = 10usize;
    let ratio = 42.0f64;
    (0..m)
        .map(|j| Representation {
            mmbr_bps: 1e5 * exp((j as f64 / (m - 1) as f64) * libm::log(ratio)),
            psnr_db: 30.0 + 12.0 * j as f64 / (m - 1) as f64,
        })
        .collect()
}

/// Recipe for a synthetic manifest.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ManifestGenSpec {
    pub tau_s: f64,
    pub n_segments: usize,
    pub representations: Vec<Representation>,
    /// Coefficient of variation of segment sizes around the mean rate;
    /// zero produces constant-bit-rate segments. The same relative size
    /// fluctuation applies to every representation of a segment, mimicking
    /// scene complexity.
    pub vbr_cv: f64,
    pub seed: u64,
}

impl Default for ManifestGenSpec {
    fn default() -> Self {
        ManifestGenSpec {
            tau_s: 2.0,
            n_segments: 900,
            representations: default_ladder(),
            vbr_cv: 0.0,
            seed: 0,
        }
    }
}

/// Builds a manifest whose per-representation mean segment rates match the
/// ladder exactly (up to integer rounding of sizes).
pub fn generate_manifest(spec: &ManifestGenSpec) -> Result<StreamManifest, ManifestError> {
    if !(spec.tau_s > 0.0) || !spec.tau_s.is_finite() {
        return Err(ManifestError::InvalidTau);
    }
    if spec.n_segments == 0 {
        return Err(ManifestError::NoSegments);
    }
    if spec.representations.is_empty() {
        return Err(ManifestError::EmptyLadder);
    }
    if !(spec.vbr_cv >= 0.0) || spec.vbr_cv > 2.0 {
        return Err(ManifestError::InvalidSpec { reason: "vbr_cv must lie in [0, 2]" });
    }

    let n = spec.n_segments;
    let mut factors = alloc::vec![1.0f64; n];
    if spec.vbr_cv > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let sigma2 = libm::log(1.0 + spec.vbr_cv * spec.vbr_cv);
        let sigma = sqrt(sigma2);
        for f in factors.iter_mut() {
            *f = exp(sigma * standard_normal(&mut rng) - 0.5 * sigma2);
        }
        // Normalizing by the realized mean pins every representation's mean
        // segment rate to its declared rate regardless of sampling noise.
        let mean: f64 = factors.iter().sum::<f64>() / n as f64;
        for f in factors.iter_mut() {
            *f /= mean;
        }
    }

    let sizes: Vec<Vec<u64>> = factors
        .iter()
        .map(|&f| {
            spec.representations
                .iter()
                .map(|r| round(spec.tau_s * r.mmbr_bps * f).max(1.0) as u64)
                .collect()
        })
        .collect();
    StreamManifest::new(spec.tau_s, spec.representations.clone(), sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_reps() -> Vec<Representation> {
        vec![
            Representation { mmbr_bps: 1e5, psnr_db: 30.0 },
            Representation { mmbr_bps: 5e5, psnr_db: 38.0 },
        ]
    }

    #[test]
    fn default_ladder_spans_declared_range() {
        let ladder = default_ladder();
        assert_eq!(ladder.len(), 10);
        assert!((ladder[0].mmbr_bps - 1e5).abs() < 1e-6);
        assert!((ladder[9].mmbr_bps - 4.2e6).abs() < 1e-4);
        assert!((ladder[0].psnr_db - 30.0).abs() < 1e-12);
        assert!((ladder[9].psnr_db - 42.0).abs() < 1e-12);
        for w in ladder.windows(2) {
            assert!(w[1].mmbr_bps > w[0].mmbr_bps);
            assert!(w[1].psnr_db > w[0].psnr_db);
            // Geometric spacing: constant ratio between neighbours.
            let r = w[1].mmbr_bps / w[0].mmbr_bps;
            assert!((r - libm::pow(42.0, 1.0 / 9.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn cbr_manifest_matches_declared_rates() {
        let spec = ManifestGenSpec { n_segments: 25, ..ManifestGenSpec::default() };
        let manifest = generate_manifest(&spec).unwrap();
        assert_eq!(manifest.n_segments(), 25);
        assert_eq!(manifest.n_representations(), 10);
        for (j, rep) in manifest.representations().iter().enumerate() {
            let expected = round(2.0 * rep.mmbr_bps) as u64;
            for i in 0..manifest.n_segments() {
                assert_eq!(manifest.size_bits(i, j), expected);
            }
        }
    }

    #[test]
    fn vbr_manifest_keeps_exact_mean_rate() {
        let spec = ManifestGenSpec {
            n_segments: 200,
            vbr_cv: 0.5,
            seed: 7,
            ..ManifestGenSpec::default()
        };
        let manifest = generate_manifest(&spec).unwrap();
        for (j, rep) in manifest.representations().iter().enumerate() {
            let total: f64 = (0..manifest.n_segments())
                .map(|i| manifest.size_bits(i, j) as f64)
                .sum();
            let mean_rate = total / (manifest.n_segments() as f64 * manifest.tau_s());
            assert!(
                (mean_rate / rep.mmbr_bps - 1.0).abs() < 1e-6,
                "rep {j}: {mean_rate} vs {}",
                rep.mmbr_bps
            );
        }
        // Size fluctuation is shared across representations of a segment.
        let ref_row = manifest.sizes_of(0);
        let other_row = manifest.sizes_of(1);
        let ratio0 = other_row[0] as f64 / ref_row[0] as f64;
        let ratio9 = other_row[9] as f64 / ref_row[9] as f64;
        assert!((ratio0 - ratio9).abs() < 1e-3);
        assert_eq!(manifest, generate_manifest(&spec).unwrap());
    }

    #[test]
    fn vbr_factor_spread_tracks_requested_cv() {
        let spec = ManifestGenSpec {
            n_segments: 2000,
            vbr_cv: 0.4,
            seed: 3,
            ..ManifestGenSpec::default()
        };
        let manifest = generate_manifest(&spec).unwrap();
        let sizes: Vec<f64> = (0..manifest.n_segments())
            .map(|i| manifest.size_bits(i, 9) as f64)
            .collect();
        let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
        let var = sizes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (sizes.len() - 1) as f64;
        let cv = sqrt(var) / mean;
        assert!((cv - 0.4).abs() < 0.1, "realized cv {cv}");
    }

    #[test]
    fn validation_rejects_malformed_manifests() {
        let reps = two_reps();
        let tau = 2.0;
        let good_row = vec![round(tau * 1e5) as u64, round(tau * 5e5) as u64];

        assert_eq!(
            StreamManifest::new(tau, vec![], vec![good_row.clone()]),
            Err(ManifestError::EmptyLadder)
        );
        assert_eq!(
            StreamManifest::new(0.0, reps.clone(), vec![good_row.clone()]),
            Err(ManifestError::InvalidTau)
        );
        assert_eq!(
            StreamManifest::new(tau, reps.clone(), vec![]),
            Err(ManifestError::NoSegments)
        );

        let mut swapped = reps.clone();
        swapped.swap(0, 1);
        assert_eq!(
            StreamManifest::new(tau, swapped, vec![good_row.clone()]),
            Err(ManifestError::UnsortedRates)
        );

        let mut flat_psnr = reps.clone();
        flat_psnr[1].psnr_db = flat_psnr[0].psnr_db;
        assert_eq!(
            StreamManifest::new(tau, flat_psnr, vec![good_row.clone()]),
            Err(ManifestError::NonIncreasingPsnr)
        );

        assert_eq!(
            StreamManifest::new(tau, reps.clone(), vec![vec![1, 2, 3]]),
            Err(ManifestError::RowWidth { segment: 0 })
        );
        assert_eq!(
            StreamManifest::new(tau, reps.clone(), vec![vec![0, 10]]),
            Err(ManifestError::ZeroSize { segment: 0, rep: 0 })
        );

        // 5 % off the declared mean rate in representation 1.
        let off_row = vec![round(tau * 1e5) as u64, round(tau * 5e5 * 1.05) as u64];
        assert_eq!(
            StreamManifest::new(tau, reps, vec![off_row]),
            Err(ManifestError::MeanRateMismatch { rep: 1 })
        );
    }

    #[test]
    fn quality_scores_are_affine_psnr() {
        let reps = vec![
            Representation { mmbr_bps: 1e5, psnr_db: 30.0 },
            Representation { mmbr_bps: 2e5, psnr_db: 35.0 },
            Representation { mmbr_bps: 4e5, psnr_db: 40.0 },
        ];
        let sizes = vec![vec![200_000, 400_000, 800_000]];
        let manifest = StreamManifest::new(2.0, reps, sizes).unwrap();
        let q = manifest.quality_scores().unwrap();
        assert_eq!(q, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn single_representation_has_no_quality_mapping() {
        let reps = vec![Representation { mmbr_bps: 1e5, psnr_db: 30.0 }];
        let manifest = StreamManifest::new(2.0, reps, vec![vec![200_000]]).unwrap();
        assert_eq!(manifest.quality_scores(), Err(AdaptError::DegeneratePsnrRange));
    }
}
