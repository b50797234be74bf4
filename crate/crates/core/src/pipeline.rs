//! End-to-end runs driven by a [`RunConfig`]: the bow-tie overlap sweep, the
//! alphabet test and squeezing calibration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitmap::{Bitmap, WeightMap};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimation::{
    self, AlphabetReport, AlphabetSetup, AngleCalibration, Enhancement, NoiseCurve,
};
use crate::gaussian;
use crate::noise::{self, NoiseMeasurement, Technique, TwinBeamParams};
use crate::scene::{self, BowTie};
use crate::seed;
use crate::trace::{self, mean, sample_std};

/// All series measured at one LO rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub angle_deg: f64,
    pub overlap: f64,
    pub classical_true: f64,
    pub quantum_true: f64,
    pub classical: Vec<NoiseMeasurement>,
    pub quantum: Vec<NoiseMeasurement>,
}

impl SweepPoint {
    pub fn series(&self, technique: Technique) -> &[NoiseMeasurement] {
        match technique {
            Technique::Classical => &self.classical,
            Technique::Quantum => &self.quantum,
        }
    }

    /// Series average, with the per-trace `ΔN` averaged as well.
    pub fn averaged(&self, technique: Technique) -> NoiseMeasurement {
        let s = self.series(technique);
        let ns: Vec<f64> = s.iter().map(|m| m.n).collect();
        let dns: Vec<f64> = s.iter().map(|m| m.delta_n).collect();
        NoiseMeasurement {
            n: mean(&ns),
            delta_n: mean(&dns),
            valid: s.iter().all(|m| m.valid),
            technique,
        }
    }

    /// Standard error of the series-averaged `N`.
    pub fn standard_error(&self, technique: Technique) -> f64 {
        let ns: Vec<f64> = self.series(technique).iter().map(|m| m.n).collect();
        sample_std(&ns) / (ns.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub curve: NoiseCurve,
    /// One-sigma coefficient uncertainties from the series scatter.
    pub coeff_sigma: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaORow {
    pub angle_deg: f64,
    pub overlap: f64,
    pub technique: Technique,
    pub series: usize,
    pub delta_n: f64,
    /// `None` where the fitted slope is below the floor.
    pub delta_o: Option<f64>,
    pub delta_angle_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub r: f64,
    pub points: Vec<SweepPoint>,
    pub classical_fit: FitSummary,
    pub quantum_fit: FitSummary,
    pub delta_o: Vec<DeltaORow>,
    pub enhancement: Enhancement,
    pub angle_enhancement: Option<Enhancement>,
    /// Overlap where the fitted quantum curve crosses the SNL.
    pub o_cross: Option<f64>,
}

fn fit_summary(points: &[SweepPoint], technique: Technique) -> Result<FitSummary> {
    let data: Vec<(f64, NoiseMeasurement)> = points
        .iter()
        .map(|p| (p.overlap, p.averaged(technique)))
        .collect();
    let curve = estimation::fit_noise_curve(&data)?;
    let mut order: Vec<&SweepPoint> = points.iter().collect();
    order.sort_by(|a, b| a.overlap.total_cmp(&b.overlap));
    let sigmas: Vec<f64> = order.iter().map(|p| p.standard_error(technique)).collect();
    let cov = curve.coefficient_covariance(&sigmas)?;
    let coeff_sigma = [
        cov[0][0].sqrt(),
        cov[1][1].sqrt(),
        cov[2][2].sqrt(),
        cov[3][3].sqrt(),
    ];
    Ok(FitSummary { curve, coeff_sigma })
}

/// LO bow ties rotated through the configured angles against a fixed bow-tie
/// mask; every angle is measured `series` times with each technique, the two
/// techniques sharing one random stream per angle.
pub fn run_sweep(cfg: &RunConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let params = cfg.params()?;
    let weights = cfg.weights()?;
    sweep_with(cfg, &params, weights.as_ref())
}

/// As [`run_sweep`] with explicit source parameters and beam profile.
pub fn sweep_with(
    cfg: &RunConfig,
    params: &TwinBeamParams,
    weights: Option<&WeightMap>,
) -> Result<SweepReport> {
    params.validate()?;
    let size = cfg.scene.grid_size;
    let alpha = cfg.half_angle();
    let radius = cfg.scene.radius;
    let grid = cfg.grid()?;
    let acq = cfg.acquisition.trace_config();
    acq.validate()?;
    let series = cfg.acquisition.series;
    if let Some(w) = weights {
        if w.width() != size || w.height() != size {
            return Err(Error::DimensionMismatch(w.width(), w.height(), size, size));
        }
    }
    let mask = scene::bowtie(0.0, alpha, radius, size, size)?;

    let points = cfg
        .acquisition
        .angles_deg
        .par_iter()
        .enumerate()
        .map(|(k, &angle_deg)| -> Result<SweepPoint> {
            let lo = BowTie {
                rotation: angle_deg.to_radians(),
                half_angle: alpha,
                radius,
            }
            .rasterize(size, size)?;
            let decomp = match weights {
                Some(w) => scene::decompose_weighted(&lo, &mask, &grid, w)?,
                None => scene::decompose(&lo, &mask, &grid)?,
            };
            let classical_true = noise::classical_noise(&decomp, params)?;
            let quantum_true = noise::quantum_noise(&decomp, params)?;
            // both techniques draw from the same per-angle stream
            let c = acq.with_seed(seed::derive(acq.rng_seed, "sweep", k as u64));
            let run = |technique: Technique, n_true: f64| {
                trace::measure_series(n_true, &c, series, technique)
            };
            Ok(SweepPoint {
                angle_deg,
                overlap: decomp.overlap(),
                classical_true,
                quantum_true,
                classical: run(Technique::Classical, classical_true)?,
                quantum: run(Technique::Quantum, quantum_true)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let classical_fit = fit_summary(&points, Technique::Classical)?;
    let quantum_fit = fit_summary(&points, Technique::Quantum)?;

    let calibration = {
        let mut samples: Vec<(f64, f64)> = points
            .iter()
            .map(|p| (p.angle_deg.to_radians(), p.overlap))
            .collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        AngleCalibration::from_lookup(samples).ok()
    };

    let mut delta_o = Vec::new();
    let mut by_technique: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut by_technique_angle: [Vec<(f64, f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for p in &points {
        for (ti, technique) in Technique::BOTH.into_iter().enumerate() {
            let curve = match technique {
                Technique::Classical => &classical_fit.curve,
                Technique::Quantum => &quantum_fit.curve,
            };
            for (s, m) in p.series(technique).iter().enumerate() {
                let dob = estimation::overlap_uncertainty(curve, p.overlap, m.delta_n).ok();
                let delta_angle_deg = match (dob, &calibration) {
                    (Some(d), Some(cal)) => Some(
                        cal.angle_uncertainty(p.angle_deg.to_radians(), d)
                            .to_degrees(),
                    ),
                    _ => None,
                };
                if let Some(d) = dob {
                    by_technique[ti].push((p.overlap, d));
                    by_technique_angle[ti].push((p.angle_deg.to_radians(), p.overlap, d));
                }
                delta_o.push(DeltaORow {
                    angle_deg: p.angle_deg,
                    overlap: p.overlap,
                    technique,
                    series: s,
                    delta_n: m.delta_n,
                    delta_o: dob,
                    delta_angle_deg,
                });
            }
        }
    }
    let enhancement = estimation::enhancement(&by_technique[0], &by_technique[1])?;
    let angle_enhancement = calibration.as_ref().and_then(|cal| {
        estimation::angle_enhancement(cal, &by_technique_angle[0], &by_technique_angle[1]).ok()
    });
    let o_cross = quantum_fit.curve.crossing(noise::snl_difference());

    Ok(SweepReport {
        r: params.r,
        points,
        classical_fit,
        quantum_fit,
        delta_o,
        enhancement,
        angle_enhancement,
        o_cross,
    })
}

/// Alphabet test with the configured font and a mask shaped like `mask_letter`.
pub fn run_alphabet(cfg: &RunConfig, mask_letter: char) -> Result<AlphabetReport> {
    cfg.validate()?;
    let font = cfg.font()?;
    let size = cfg.scene.grid_size;
    let mask = font.glyph_in_grid(mask_letter, size, size)?;
    alphabet_with_mask(cfg, &cfg.params()?, &mask)
}

/// Alphabet test against an arbitrary mask bitmap.
pub fn alphabet_with_mask(
    cfg: &RunConfig,
    params: &TwinBeamParams,
    mask: &Bitmap,
) -> Result<AlphabetReport> {
    let setup = AlphabetSetup {
        grid_size: cfg.scene.grid_size,
        grid: cfg.grid()?,
        acquisition: cfg.acquisition.trace_config(),
        lo_power_per_pixel: cfg.scene.lo_power_per_pixel,
    };
    estimation::alphabet_gun(mask, &cfg.font()?, params, &setup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target_db: f64,
    pub r: f64,
    /// Detected noise at full overlap, dB relative to the SNL.
    pub detected_db: f64,
    pub params: TwinBeamParams,
    pub config: RunConfig,
}

/// Solves for the `r` that reproduces `target_db` of detected squeezing at
/// full overlap with the configured losses and lock noise.
pub fn run_calibrate(cfg: &RunConfig, target_db: f64) -> Result<Calibration> {
    cfg.validate()?;
    let s = &cfg.source;
    let r = gaussian::r_for_detected_db(target_db, s.t_probe, s.t_conj, s.lock_noise)?;
    let mut config = cfg.with_r(r);
    config.source.squeezing_db = target_db.abs();
    let params = config.params()?;
    let detected_db = gaussian::to_db(gaussian::detected_variance(
        r,
        s.t_probe,
        s.t_conj,
        s.lock_noise,
    )?);
    Ok(Calibration {
        target_db: -target_db.abs(),
        r,
        detected_db,
        params,
        config,
    })
}
