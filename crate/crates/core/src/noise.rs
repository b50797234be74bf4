//! Detected noise power, in shot-noise units, for the single-beam (classical)
//! and twin-beam difference (quantum) techniques.
//!
//! Every coherence cell is an independent squeezed pair. The conjugate half
//! passes the mask cell with power transmission `Tᵢ` and the detection chain
//! with `t_conj`; both are one beam-splitter loss `t_conj·Tᵢ`. The cell's noise
//! is read from the covariance matrix and the cells are summed with their LO
//! weights.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};
use crate::gaussian::{CovMatrix, QuadratureSpec, CONJUGATE, PROBE};
use crate::scene::CellDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Classical,
    Quantum,
}

impl Technique {
    pub const BOTH: [Technique; 2] = [Technique::Classical, Technique::Quantum];

    pub fn as_str(&self) -> &'static str {
        match self {
            Technique::Classical => "classical",
            Technique::Quantum => "quantum",
        }
    }
}

/// Source and detection-chain calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwinBeamParams {
    pub r: f64,
    pub t_probe: f64,
    pub t_conj: f64,
    /// Additive technical noise of the phase lock, SNL units, quantum only.
    pub lock_noise: f64,
    /// LO power (relative units) below which a measurement is not trusted.
    pub electronic_floor: f64,
}

impl TwinBeamParams {
    pub const DEFAULT_LOCK_NOISE: f64 = 0.02;

    /// Lossless, noiseless source with squeezing `r`.
    pub fn ideal(r: f64) -> Self {
        Self {
            r,
            t_probe: 1.0,
            t_conj: 1.0,
            lock_noise: 0.0,
            electronic_floor: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::param(
                "r",
                format!("{} must be finite and ≥ 0", self.r),
            ));
        }
        for (name, t) in [("t_probe", self.t_probe), ("t_conj", self.t_conj)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::param(name, format!("{t} is outside [0, 1]")));
            }
        }
        if !(self.lock_noise.is_finite() && self.lock_noise >= 0.0) {
            return Err(Error::param(
                "lock_noise",
                format!("{} must be ≥ 0", self.lock_noise),
            ));
        }
        if !(self.electronic_floor.is_finite() && self.electronic_floor >= 0.0) {
            return Err(Error::param(
                "electronic_floor",
                format!("{} must be ≥ 0", self.electronic_floor),
            ));
        }
        Ok(())
    }
}

/// A noise power `n` (SNL = 1) with its standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeasurement {
    pub n: f64,
    pub delta_n: f64,
    pub valid: bool,
    pub technique: Technique,
}

/// Two-beam shot-noise reference: joint variance of two vacua.
pub fn snl_difference() -> f64 {
    CovMatrix::vacuum(2)
        .and_then(|v| v.joint_quad_variance(0.0, PI))
        .expect("two-mode vacuum")
}

/// Single-beam shot-noise reference: one vacuum quadrature.
pub fn snl_single() -> f64 {
    CovMatrix::vacuum(1)
        .and_then(|v| v.quad_variance(QuadratureSpec::new(0, 0.0)))
        .expect("one-mode vacuum")
}

fn conjugate_cell(params: &TwinBeamParams, transmission: f64) -> Result<CovMatrix> {
    CovMatrix::two_mode_squeezed(params.r)?
        .apply_loss(PROBE, params.t_probe)?
        .apply_loss(CONJUGATE, params.t_conj * transmission)
}

/// Locked joint-quadrature noise of one cell, SNL units.
pub fn quantum_cell_noise(params: &TwinBeamParams, transmission: f64) -> Result<f64> {
    let (v, _) = conjugate_cell(params, transmission)?.locked_joint_variance()?;
    Ok(v / snl_difference())
}

/// Conjugate-only quadrature noise of one cell, SNL units.
pub fn classical_cell_noise(params: &TwinBeamParams, transmission: f64) -> Result<f64> {
    let v =
        conjugate_cell(params, transmission)?.quad_variance(QuadratureSpec::new(CONJUGATE, 0.0))?;
    Ok(v / snl_single())
}

fn weighted_sum(
    decomp: &CellDecomposition,
    params: &TwinBeamParams,
    cell: fn(&TwinBeamParams, f64) -> Result<f64>,
) -> Result<f64> {
    params.validate()?;
    // binary masks produce only a handful of distinct transmissions
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut total = 0.0;
    for c in decomp.cells() {
        let key = c.transmission.to_bits();
        let v = match cache.get(&key) {
            Some(&v) => v,
            None => {
                let v = cell(params, c.transmission)?;
                cache.insert(key, v);
                v
            }
        };
        total += c.weight * v;
    }
    Ok(total)
}

/// Twin-beam difference noise `N = Σ wᵢ·Vᵢ/V_SNL + lock_noise`.
pub fn quantum_noise(decomp: &CellDecomposition, params: &TwinBeamParams) -> Result<f64> {
    Ok(weighted_sum(decomp, params, quantum_cell_noise)? + params.lock_noise)
}

/// Conjugate-alone excess noise `N = Σ wᵢ·Varᵢ/V_SNL`.
pub fn classical_noise(decomp: &CellDecomposition, params: &TwinBeamParams) -> Result<f64> {
    weighted_sum(decomp, params, classical_cell_noise)
}

pub fn noise(
    technique: Technique,
    decomp: &CellDecomposition,
    params: &TwinBeamParams,
) -> Result<f64> {
    match technique {
        Technique::Classical => classical_noise(decomp, params),
        Technique::Quantum => quantum_noise(decomp, params),
    }
}

/// Whether the LO is bright enough to lift the detector above its
/// electronic floor.
pub fn lo_power_check(lo: &Bitmap, params: &TwinBeamParams, power_per_pixel: f64) -> bool {
    let pixels = lo.count();
    pixels > 0 && pixels as f64 * power_per_pixel >= params.electronic_floor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Cell;
    use approx::assert_abs_diff_eq;

    const R_22: f64 = 0.253_284_360_229_345;

    fn binary(o: f64) -> CellDecomposition {
        CellDecomposition::new(
            vec![
                Cell {
                    weight: o,
                    transmission: 1.0,
                },
                Cell {
                    weight: 1.0 - o,
                    transmission: 0.0,
                },
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn references_come_from_vacuum() {
        assert_abs_diff_eq!(snl_difference(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(snl_single(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn no_squeezing_sits_at_snl() {
        let mut p = TwinBeamParams::ideal(0.0);
        for o in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(quantum_noise(&binary(o), &p).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(
                classical_noise(&binary(o), &p).unwrap(),
                1.0,
                epsilon = 1e-12
            );
        }
        p.lock_noise = 0.02;
        assert_abs_diff_eq!(
            quantum_noise(&binary(0.5), &p).unwrap(),
            1.02,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            classical_noise(&binary(0.5), &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn binary_cells_follow_closed_form() {
        let p = TwinBeamParams::ideal(R_22);
        let q = (-2.0 * R_22).exp();
        let c = R_22.cosh().powi(2);
        for o in [0.0, 0.25, 0.5, 1.0] {
            let n = quantum_noise(&binary(o), &p).unwrap();
            assert_abs_diff_eq!(n, o * q + (1.0 - o) * c, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            quantum_noise(&binary(1.0), &p).unwrap(),
            10f64.powf(-0.22),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            quantum_noise(&binary(0.0), &p).unwrap(),
            1.065_536_623_378,
            epsilon = 1e-9
        );
    }

    #[test]
    fn classical_is_affine_in_overlap() {
        let p = TwinBeamParams::ideal(R_22);
        let cosh2r = (2.0 * R_22).cosh();
        for o in [0.0, 0.4, 1.0] {
            let n = classical_noise(&binary(o), &p).unwrap();
            assert_abs_diff_eq!(n, 1.0 + o * (cosh2r - 1.0), epsilon = 1e-12);
        }
        assert_eq!(classical_noise(&binary(0.0), &p).unwrap(), 1.0);
    }

    #[test]
    fn fractional_cell_lies_below_affine_chord() {
        let p = TwinBeamParams::ideal(0.6);
        let half = quantum_noise(&CellDecomposition::single(0.5).unwrap(), &p).unwrap();
        let chord = quantum_noise(&binary(0.5), &p).unwrap();
        assert!(half < chord, "{half} vs {chord}");
    }

    #[test]
    fn invalid_params_propagate() {
        let mut p = TwinBeamParams::ideal(0.2);
        p.t_conj = 1.5;
        assert!(quantum_noise(&binary(0.5), &p).is_err());
        p.t_conj = 1.0;
        p.lock_noise = -0.1;
        assert!(classical_noise(&binary(0.5), &p).is_err());
    }

    #[test]
    fn lo_power_threshold() {
        let mut p = TwinBeamParams::ideal(0.2);
        let lo = Bitmap::from_fn(4, 4, |x, _| x == 0).unwrap();
        assert!(lo_power_check(&lo, &p, 0.0));
        assert!(!lo_power_check(&Bitmap::zeros(4, 4).unwrap(), &p, 1.0));
        p.electronic_floor = 5.0;
        assert!(!lo_power_check(&lo, &p, 1.0));
        assert!(lo_power_check(&lo, &p, 1.25));
    }
}
