//! Analysis of noise-versus-overlap data: the two-stage cubic fit, the
//! overlap uncertainty `ΔO = ΔN / |dN/dO|`, enhancement factors, the
//! angle↔overlap calibration, and the deviation ranking of the alphabet test.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitmap::{Bitmap, WeightMap};
use crate::error::{Error, Result};
use crate::font::Font;
use crate::noise::{self, NoiseMeasurement, Technique, TwinBeamParams};
use crate::scene::{self, BowTie, CoherenceGrid};
use crate::seed;
use crate::trace::{self, mean, sample_std, AcquisitionConfig};

/// Below this `|dN/dO|` (SNL per unit overlap) a point is reported as insensitive.
pub const SLOPE_FLOOR: f64 = 1e-3;
/// Only points above this overlap enter the extrapolation line.
pub const LINE_FIT_MIN_OVERLAP: f64 = 0.8;
/// Enhancement factors average over overlaps at or above this value.
pub const ENHANCEMENT_MIN_OVERLAP: f64 = 0.9;

/// Least-squares polynomial coefficients (ascending powers) together with the
/// linear map from the ordinates to the coefficients.
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let design = DMatrix::from_fn(xs.len(), degree + 1, |i, j| xs[i].powi(j as i32));
    let pinv = design
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let coeffs = &pinv * DVector::from_column_slice(ys);
    Ok((coeffs.iter().copied().collect(), pinv))
}

fn distinct(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Fitted `N(O)` for one technique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurve {
    pub technique: Technique,
    /// Sorted by overlap.
    pub points: Vec<(f64, NoiseMeasurement)>,
    /// `(intercept, slope)` of the line through the points with `O > 0.8`.
    pub line: (f64, f64),
    /// The line evaluated at `O = 1`, appended to the cubic fit.
    pub synthetic_point: f64,
    /// Cubic coefficients, ascending powers of `O`.
    pub coeffs: [f64; 4],
    pub residual_rms: f64,
    /// Rows map the observed `n` values (in `points` order) to `coeffs`.
    response: Vec<Vec<f64>>,
}

/// Linear fit on the high-overlap points, extrapolated to `O = 1`; that point
/// is added to the data and a cubic is fitted by unweighted least squares.
pub fn fit_noise_curve(points: &[(f64, NoiseMeasurement)]) -> Result<NoiseCurve> {
    if points.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "{} points, need at least 5",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.iter().any(|(o, _)| !(0.0..=1.0).contains(o)) {
        return Err(Error::param("overlap", "overlaps must lie in [0, 1]"));
    }
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Degenerate("repeated overlap value".into()));
    }
    let technique = pts[0].1.technique;
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.n).collect();

    let high: Vec<usize> = (0..xs.len())
        .filter(|&k| xs[k] > LINE_FIT_MIN_OVERLAP)
        .collect();
    if high.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} points above O = {LINE_FIT_MIN_OVERLAP}, need at least 2",
            high.len()
        )));
    }
    let hx: Vec<f64> = high.iter().map(|&k| xs[k]).collect();
    let hy: Vec<f64> = high.iter().map(|&k| ys[k]).collect();
    let (line, line_map) = polyfit(&hx, &hy, 1)?;
    let synthetic_point = line[0] + line[1];

    let mut ax = xs.clone();
    ax.push(1.0);
    if distinct(&ax) < 4 {
        return Err(Error::Degenerate(
            "cubic needs at least 4 distinct overlaps".into(),
        ));
    }
    let mut ay = ys.clone();
    ay.push(synthetic_point);
    let (cubic, cubic_map) = polyfit(&ax, &ay, 3)?;
    let coeffs = [cubic[0], cubic[1], cubic[2], cubic[3]];

    // d(synthetic)/d(y_k) for every observed point
    let n = xs.len();
    let mut synth_row = vec![0.0; n];
    for (j, &k) in high.iter().enumerate() {
        synth_row[k] = line_map[(0, j)] + line_map[(1, j)];
    }
    let response = (0..4)
        .map(|c| {
            (0..n)
                .map(|k| cubic_map[(c, k)] + cubic_map[(c, n)] * synth_row[k])
                .collect()
        })
        .collect();

    let resid: Vec<f64> = ax
        .iter()
        .zip(&ay)
        .map(|(&x, &y)| y - poly(&coeffs, x))
        .collect();
    let residual_rms = (resid.iter().map(|r| r * r).sum::<f64>() / resid.len() as f64).sqrt();

    Ok(NoiseCurve {
        technique,
        points: pts,
        line: (line[0], line[1]),
        synthetic_point,
        coeffs,
        residual_rms,
        response,
    })
}

fn poly(c: &[f64; 4], x: f64) -> f64 {
    c[0] + x * (c[1] + x * (c[2] + x * c[3]))
}

impl NoiseCurve {
    pub fn eval(&self, o: f64) -> f64 {
        poly(&self.coeffs, o)
    }

    pub fn slope(&self, o: f64) -> f64 {
        let c = &self.coeffs;
        c[1] + o * (2.0 * c[2] + 3.0 * o * c[3])
    }

    /// Coefficient covariance for independent per-point uncertainties
    /// `sigmas` (same order as `points`), propagated through both fit stages.
    pub fn coefficient_covariance(&self, sigmas: &[f64]) -> Result<[[f64; 4]; 4]> {
        if sigmas.len() != self.points.len() {
            return Err(Error::param(
                "sigmas",
                format!("{} values for {} points", sigmas.len(), self.points.len()),
            ));
        }
        let mut cov = [[0.0; 4]; 4];
        for (a, row_a) in self.response.iter().enumerate() {
            for (b, row_b) in self.response.iter().enumerate() {
                cov[a][b] = row_a
                    .iter()
                    .zip(row_b)
                    .zip(sigmas)
                    .map(|((x, y), s)| x * y * s * s)
                    .sum();
            }
        }
        Ok(cov)
    }

    /// Overlap in `[0, 1]` where the fitted curve crosses `level`, if any.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        const STEPS: usize = 10_000;
        let f = |o: f64| self.eval(o) - level;
        let mut prev = f(0.0);
        for k in 1..=STEPS {
            let o = k as f64 / STEPS as f64;
            let cur = f(o);
            if prev == 0.0 {
                return Some((k - 1) as f64 / STEPS as f64);
            }
            if prev.signum() != cur.signum() {
                let (mut lo, mut hi) = ((k - 1) as f64 / STEPS as f64, o);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid).signum() == f(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            prev = cur;
        }
        None
    }
}

/// `ΔO_est = ΔN / |dN/dO|` at overlap `o`.
pub fn overlap_uncertainty(curve: &NoiseCurve, o: f64, delta_n: f64) -> Result<f64> {
    let slope = curve.slope(o).abs();
    if slope < SLOPE_FLOOR {
        return Err(Error::InsensitivePoint {
            overlap: o,
            slope,
            floor: SLOPE_FLOOR,
        });
    }
    Ok(delta_n / slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    pub factor: f64,
    pub sigma: f64,
    pub classical_points: usize,
    pub quantum_points: usize,
}

fn mean_and_sem(values: &[f64]) -> (f64, f64) {
    (
        mean(values),
        sample_std(values) / (values.len() as f64).sqrt(),
    )
}

/// Ratio of mean classical to mean quantum uncertainty over `O ≥ 0.9`.
pub fn enhancement(classical: &[(f64, f64)], quantum: &[(f64, f64)]) -> Result<Enhancement> {
    let pick = |xs: &[(f64, f64)]| -> Vec<f64> {
        xs.iter()
            .filter(|(o, _)| *o >= ENHANCEMENT_MIN_OVERLAP)
            .map(|&(_, d)| d)
            .collect()
    };
    let (c, q) = (pick(classical), pick(quantum));
    if c.is_empty() || q.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no points with O ≥ {ENHANCEMENT_MIN_OVERLAP}"
        )));
    }
    let (mc, sc) = mean_and_sem(&c);
    let (mq, sq) = mean_and_sem(&q);
    let factor = mc / mq;
    let sigma = factor * ((sc / mc).powi(2) + (sq / mq).powi(2)).sqrt();
    Ok(Enhancement {
        factor,
        sigma,
        classical_points: c.len(),
        quantum_points: q.len(),
    })
}

/// Overlap as a function of bow-tie rotation on the `δ ≥ 0` branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleCalibration {
    angles: Vec<f64>,
    overlaps: Vec<f64>,
}

impl AngleCalibration {
    /// Lookup table of `(δ, O)`; overlaps must fall strictly as `δ` grows.
    pub fn from_lookup(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(
                "calibration needs at least 2 samples".into(),
            ));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 >= w[0].1 {
                return Err(Error::NonMonotone(w[1].0));
            }
        }
        let (angles, overlaps) = samples.into_iter().unzip();
        Ok(Self { angles, overlaps })
    }

    /// Ideal wedges: `O(δ) = 1 − δ/(2α)` for `0 ≤ δ ≤ 2α`.
    pub fn ideal_wedge(half_angle: f64, samples: usize) -> Result<Self> {
        let n = samples.max(2);
        Self::from_lookup(
            (0..n)
                .map(|k| {
                    let d = 2.0 * half_angle * k as f64 / (n - 1) as f64;
                    (d, 1.0 - d / (2.0 * half_angle))
                })
                .collect(),
        )
    }

    /// Rasterized bow ties against a fixed mask at `δ = 0`, optionally with a
    /// beam intensity profile.
    pub fn from_bowtie(
        half_angle: f64,
        radius: f64,
        size: usize,
        weights: Option<&WeightMap>,
        angles: &[f64],
    ) -> Result<Self> {
        let mask = scene::bowtie(0.0, half_angle, radius, size, size)?;
        let samples = angles
            .iter()
            .map(|&d| {
                let lo = BowTie {
                    rotation: d,
                    half_angle,
                    radius,
                }
                .rasterize(size, size)?;
                let o = match weights {
                    Some(w) => scene::overlap_weighted(&lo, &mask, w)?,
                    None => scene::overlap(&lo, &mask)?,
                };
                Ok((d, o))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_lookup(samples)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.angles
            .iter()
            .copied()
            .zip(self.overlaps.iter().copied())
    }

    pub fn overlap_at(&self, delta: f64) -> f64 {
        let d = delta.abs();
        let k = self
            .angles
            .partition_point(|&a| a <= d)
            .clamp(1, self.angles.len() - 1);
        let (a0, a1) = (self.angles[k - 1], self.angles[k]);
        let (o0, o1) = (self.overlaps[k - 1], self.overlaps[k]);
        o0 + (o1 - o0) * (d - a0) / (a1 - a0)
    }

    /// Inverse map on the calibrated branch.
    pub fn angle_for_overlap(&self, o: f64) -> f64 {
        // overlaps are strictly decreasing
        let k = self
            .overlaps
            .partition_point(|&x| x > o)
            .clamp(1, self.overlaps.len() - 1);
        let (a0, a1) = (self.angles[k - 1], self.angles[k]);
        let (o0, o1) = (self.overlaps[k - 1], self.overlaps[k]);
        a0 + (a1 - a0) * (o - o0) / (o1 - o0)
    }

    /// `dO/dδ` from a least-squares line through the three nearest samples
    /// on either side.
    pub fn slope_at(&self, delta: f64) -> f64 {
        let d = delta.abs();
        let centre = self.angles.partition_point(|&a| a < d);
        let lo = centre.saturating_sub(3);
        let hi = (centre + 3).min(self.angles.len());
        let (lo, hi) = if hi - lo < 2 {
            (0, self.angles.len().min(2))
        } else {
            (lo, hi)
        };
        let xs = &self.angles[lo..hi];
        let ys = &self.overlaps[lo..hi];
        let mx = mean(xs);
        let my = mean(ys);
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    /// `Δδ = ΔO / |dO/dδ|`.
    pub fn angle_uncertainty(&self, delta: f64, delta_o: f64) -> f64 {
        delta_o / self.slope_at(delta).abs()
    }
}

/// Enhancement in the angle domain: each `(δ, O, ΔO)` is converted to `Δδ`
/// with the calibration slope before averaging over `O ≥ 0.9`.
pub fn angle_enhancement(
    cal: &AngleCalibration,
    classical: &[(f64, f64, f64)],
    quantum: &[(f64, f64, f64)],
) -> Result<Enhancement> {
    let convert = |xs: &[(f64, f64, f64)]| -> Vec<(f64, f64)> {
        xs.iter()
            .map(|&(d, o, dob)| (o, cal.angle_uncertainty(d, dob)))
            .collect()
    };
    enhancement(&convert(classical), &convert(quantum))
}

/// Deviation `D = N_masked / N_baseline` with first-order ratio propagation.
pub fn deviation(masked: &NoiseMeasurement, baseline: &NoiseMeasurement) -> (f64, f64) {
    let d = masked.n / baseline.n;
    let sigma =
        d * ((masked.delta_n / masked.n).powi(2) + (baseline.delta_n / baseline.n).powi(2)).sqrt();
    (d, sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub letter: char,
    pub technique: Technique,
    pub lo_pixels: usize,
    pub overlap: f64,
    pub baseline: NoiseMeasurement,
    pub masked: NoiseMeasurement,
    pub d: f64,
    pub sigma_d: f64,
    pub valid: bool,
    /// Masked noise below the shot-noise limit.
    pub sub_snl: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub technique: Technique,
    /// Valid letters, best guess first.
    pub order: Vec<char>,
    pub best: char,
    pub runner_up: Option<char>,
    /// `|D_best − D_runner| / √(σ_best² + σ_runner²)`.
    pub sigma_separation: Option<f64>,
}

/// Classical guesses maximize `D` (excess noise kept); quantum guesses
/// minimize it (squeezing kept).
pub fn rank(records: &[DeviationRecord], technique: Technique) -> Result<Ranking> {
    let mut valid: Vec<&DeviationRecord> = records
        .iter()
        .filter(|r| r.valid && r.technique == technique)
        .collect();
    if valid.is_empty() {
        return Err(Error::AllLettersInvalid);
    }
    valid.sort_by(|a, b| {
        let ord = match technique {
            Technique::Classical => b.d.total_cmp(&a.d),
            Technique::Quantum => a.d.total_cmp(&b.d),
        };
        ord.then(a.letter.cmp(&b.letter))
    });
    let best = valid[0];
    let runner = valid.get(1).copied();
    let sigma_separation = runner.map(|r| (best.d - r.d).abs() / best.sigma_d.hypot(r.sigma_d));
    Ok(Ranking {
        technique,
        order: valid.iter().map(|r| r.letter).collect(),
        best: best.letter,
        runner_up: runner.map(|r| r.letter),
        sigma_separation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphabetSetup {
    pub grid_size: usize,
    pub grid: CoherenceGrid,
    pub acquisition: AcquisitionConfig,
    pub lo_power_per_pixel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetReport {
    pub records: Vec<DeviationRecord>,
    /// Letters that failed the LO power check, with the reason.
    pub excluded: Vec<(char, String)>,
    pub classical: Ranking,
    pub quantum: Ranking,
    pub sub_snl_letters: Vec<char>,
}

/// Records for one letter and its exclusion reason, if any.
type LetterOutcome = (Vec<DeviationRecord>, Option<(char, String)>);

fn simulated_measurement(
    n_true: f64,
    acq: &AcquisitionConfig,
    stream: &str,
    technique: Technique,
    valid: bool,
) -> Result<NoiseMeasurement> {
    let cfg = acq.with_seed(seed::derive(acq.rng_seed, stream, 0));
    let mut m = trace::segment_stats(&trace::simulate_trace(n_true, &cfg)?, technique)?;
    m.valid = valid;
    Ok(m)
}

/// Every letter of `font` is tried as the LO shape against `mask`: one
/// unmasked baseline trace and one masked trace per technique. The two
/// techniques share random streams, so their budgets are matched pairwise.
pub fn alphabet_gun(
    mask: &Bitmap,
    font: &Font,
    params: &TwinBeamParams,
    setup: &AlphabetSetup,
) -> Result<AlphabetReport> {
    params.validate()?;
    setup.acquisition.validate()?;
    let size = setup.grid_size;
    let open = Bitmap::ones(size, size)?;
    let letters: Vec<char> = font.letters().collect();
    let per_letter = letters
        .par_iter()
        .map(|&letter| -> Result<LetterOutcome> {
            let lo = font.glyph_in_grid(letter, size, size)?;
            let valid = noise::lo_power_check(&lo, params, setup.lo_power_per_pixel);
            let excluded = (!valid).then(|| {
                let power = lo.count() as f64 * setup.lo_power_per_pixel;
                (
                    letter,
                    format!(
                        "LO power {power:.4} below electronic floor {:.4}",
                        params.electronic_floor
                    ),
                )
            });
            let base_decomp = scene::decompose(&lo, &open, &setup.grid)?;
            let mask_decomp = scene::decompose(&lo, mask, &setup.grid)?;
            let overlap = mask_decomp.overlap();
            let mut out = Vec::with_capacity(2);
            for technique in Technique::BOTH {
                let tag = format!("alphabet/{letter}");
                let baseline = simulated_measurement(
                    noise::noise(technique, &base_decomp, params)?,
                    &setup.acquisition,
                    &format!("{tag}/baseline"),
                    technique,
                    valid,
                )?;
                let masked = simulated_measurement(
                    noise::noise(technique, &mask_decomp, params)?,
                    &setup.acquisition,
                    &format!("{tag}/masked"),
                    technique,
                    valid,
                )?;
                let (d, sigma_d) = deviation(&masked, &baseline);
                out.push(DeviationRecord {
                    letter,
                    technique,
                    lo_pixels: lo.count(),
                    overlap,
                    baseline,
                    masked,
                    d,
                    sigma_d,
                    valid,
                    sub_snl: technique == Technique::Quantum && masked.n < 1.0,
                });
            }
            Ok((out, excluded))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for (recs, ex) in per_letter {
        records.extend(recs);
        excluded.extend(ex);
    }
    let classical = rank(&records, Technique::Classical)?;
    let quantum = rank(&records, Technique::Quantum)?;
    let sub_snl_letters = records
        .iter()
        .filter(|r| r.valid && r.sub_snl)
        .map(|r| r.letter)
        .collect();
    Ok(AlphabetReport {
        records,
        excluded,
        classical,
        quantum,
        sub_snl_letters,
    })
}
