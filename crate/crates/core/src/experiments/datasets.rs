//! Dataset builders for the classification and tracking experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Labeled planar samples: 1 inside the centered disk, 0 outside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskDataset {
    pub samples: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub radius: f64,
    pub seed: u64,
}

impl DiskDataset {
    /// Draws `n` points uniformly from [-1, 1]^2, reproducibly.
    pub fn generate(n: usize, radius: f64, seed: u64) -> Result<DiskDataset> {
        if n == 0 {
            return Err(CoreError::InvalidSpec("need at least one sample".into()));
        }
        if !(radius > 0.0 && radius < 1.0) {
            return Err(CoreError::InvalidSpec(format!(
                "disk radius must lie in (0, 1), got {radius}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x = rng.gen_range(-1.0..=1.0);
            let y = rng.gen_range(-1.0..=1.0);
            labels.push(f64::from(u8::from(x * x + y * y <= radius * radius)));
            samples.push(vec![x, y]);
        }
        Ok(DiskDataset { samples, labels, radius, seed })
    }
}

/// The scalar family of target curves a tracking run learns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MKind {
    /// y(t) = sin(x t)
    SinXT,
    /// y(t) = sin(0.25 x t)
    SinQuarterXT,
}

impl MKind {
    pub fn eval(self, x: f64, t: f64) -> f64 {
        match self {
            MKind::SinXT => (x * t).sin(),
            MKind::SinQuarterXT => (0.25 * x * t).sin(),
        }
    }
}

/// Scalar sources with their target curves sampled on the scoring grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackingDataset {
    pub sources: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub kind: MKind,
}

impl TrackingDataset {
    /// Sources i/(n+1) for i = 1..=n, strictly inside (0, 1), with their
    /// target curves evaluated at `track_times`.
    pub fn equispaced(kind: MKind, n: usize, track_times: &[f64]) -> Result<TrackingDataset> {
        if n == 0 || track_times.is_empty() {
            return Err(CoreError::InvalidSpec(
                "need at least one source and one scoring time".into(),
            ));
        }
        let sources: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let curves = sources
            .iter()
            .map(|&x| track_times.iter().map(|&t| kind.eval(x, t)).collect())
            .collect();
        Ok(TrackingDataset { sources, curves, kind })
    }
}
