//! Zero-span spectrum-analyzer traces and their segment statistics.
//!
//! A displayed point averages `samples_per_point` squared Gaussian quadrature
//! samples (χ² with one degree of freedom each, mean `n`); the average is drawn
//! directly as `χ²(M)/M`. Successive points
//! then pass a one-pole video filter `y_k = ρ·y_{k−1} + (1 − ρ)·x_k`. A trace is
//! reduced to `N` (mean of all points) and `ΔN` (sample standard deviation of
//! the segment means).

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseMeasurement, Technique};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcquisitionConfig {
    pub points_per_trace: usize,
    pub segment_length: usize,
    pub samples_per_point: usize,
    pub point_correlation: f64,
    pub rng_seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            points_per_trace: 460,
            segment_length: 10,
            samples_per_point: 300,
            point_correlation: 0.5,
            rng_seed: 0,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 2 || self.points_per_trace < 2 * self.segment_length {
            return Err(Error::param(
                "segment_length",
                "need at least two segments of ≥ 2 points",
            ));
        }
        if !self.points_per_trace.is_multiple_of(self.segment_length) {
            return Err(Error::param(
                "points_per_trace",
                format!(
                    "{} is not divisible by {}",
                    self.points_per_trace, self.segment_length
                ),
            ));
        }
        if self.samples_per_point == 0 {
            return Err(Error::param("samples_per_point", "must be ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.point_correlation) {
            return Err(Error::param(
                "point_correlation",
                format!("{} is outside [0, 1)", self.point_correlation),
            ));
        }
        Ok(())
    }

    pub fn segments(&self) -> usize {
        self.points_per_trace / self.segment_length
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self { rng_seed, ..*self }
    }

    /// Points discarded while the video filter settles.
    fn burn_in(&self) -> usize {
        let rho = self.point_correlation;
        if rho == 0.0 {
            0
        } else {
            ((1e-12f64).ln() / rho.ln()).ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub values: Vec<f64>,
    pub config: AcquisitionConfig,
    pub true_n: f64,
}

/// Generates one trace whose points have mean `n_true`.
pub fn simulate_trace(n_true: f64, cfg: &AcquisitionConfig) -> Result<Trace> {
    if !(n_true.is_finite() && n_true > 0.0) {
        return Err(Error::param("n_true", format!("{n_true} must be > 0")));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let m = cfg.samples_per_point as f64;
    // mean of `m` squared standard normals
    let chi2 = ChiSquared::new(m).map_err(|e| Error::param("samples_per_point", e.to_string()))?;
    let mut draw_point = || chi2.sample(&mut rng) / m;
    let rho = cfg.point_correlation;
    let mut y = draw_point();
    for _ in 0..cfg.burn_in() {
        y = rho * y + (1.0 - rho) * draw_point();
    }
    let mut values = Vec::with_capacity(cfg.points_per_trace);
    for k in 0..cfg.points_per_trace {
        if k > 0 || cfg.burn_in() > 0 {
            y = rho * y + (1.0 - rho) * draw_point();
        }
        values.push(y);
    }
    // unit trace scaled last, so traces with equal seeds are exactly proportional
    for v in &mut values {
        *v *= n_true;
    }
    Ok(Trace {
        values,
        config: *cfg,
        true_n: n_true,
    })
}

pub fn segment_means(trace: &Trace) -> Result<Vec<f64>> {
    let len = trace.config.segment_length;
    if len == 0 || !trace.values.len().is_multiple_of(len) || trace.values.len() / len < 2 {
        return Err(Error::param(
            "trace",
            format!(
                "{} points cannot be split into segments of {len}",
                trace.values.len()
            ),
        ));
    }
    Ok(trace
        .values
        .chunks(len)
        .map(|s| s.iter().sum::<f64>() / len as f64)
        .collect())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// `N` = mean of all points, `ΔN` = standard deviation of the segment means.
pub fn segment_stats(trace: &Trace, technique: Technique) -> Result<NoiseMeasurement> {
    let seg = segment_means(trace)?;
    Ok(NoiseMeasurement {
        n: mean(&trace.values),
        delta_n: sample_std(&seg),
        valid: true,
        technique,
    })
}

/// `n_series` independent traces, each reduced by [`segment_stats`]. Series
/// `i` uses the stream `derive(cfg.rng_seed, "series", i)`.
pub fn measure_series(
    n_true: f64,
    cfg: &AcquisitionConfig,
    n_series: usize,
    technique: Technique,
) -> Result<Vec<NoiseMeasurement>> {
    if n_series == 0 {
        return Err(Error::param("n_series", "must be ≥ 1"));
    }
    (0..n_series)
        .map(|i| {
            let c = cfg.with_seed(seed::derive(cfg.rng_seed, "series", i as u64));
            segment_stats(&simulate_trace(n_true, &c)?, technique)
        })
        .collect()
}

/// Expected `ΔN` for a trace of true power `n`, from χ² statistics and the
/// AR(1) autocovariance of the filtered points.
pub fn predicted_delta_n(n: f64, cfg: &AcquisitionConfig) -> f64 {
    let rho = cfg.point_correlation;
    let l = cfg.segment_length as f64;
    let k = cfg.segments() as f64;
    let var_x = 2.0 * n * n / cfg.samples_per_point as f64;
    let var_y = var_x * (1.0 - rho) / (1.0 + rho);
    // covariance of two segment sums `lag` segments apart (lag ≥ 1)
    let cross = |lag: f64| {
        if rho == 0.0 {
            return 0.0;
        }
        var_y * rho.powf((lag - 1.0) * l + 1.0) * (1.0 - rho.powf(l)).powi(2) / (1.0 - rho).powi(2)
    };
    let within = if rho == 0.0 {
        var_y * l
    } else {
        var_y
            * (l * (1.0 + rho) / (1.0 - rho)
                - 2.0 * rho * (1.0 - rho.powf(l)) / (1.0 - rho).powi(2))
    };
    let var_seg = within / (l * l);
    let mut off = 0.0;
    for lag in 1..cfg.segments() {
        off += 2.0 * (k - lag as f64) * cross(lag as f64) / (l * l);
    }
    let expected_s2 = var_seg - off / (k * (k - 1.0));
    expected_s2.max(0.0).sqrt()
}

pub fn write_trace_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut body = String::from("index,value\n");
    for (k, v) in trace.values.iter().enumerate() {
        body.push_str(&format!("{k},{v}\n"));
    }
    file.write_all(body.as_bytes())
        .map_err(|e| Error::io(path, e))
}
