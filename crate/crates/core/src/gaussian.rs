//! Covariance-matrix algebra for one- and two-mode Gaussian states.
//!
//! Quadratures are ordered `(x_0, y_0, x_1, y_1)` and normalized so that the
//! vacuum has variance 1/2 in every quadrature (`[x, y] = i`). For the twin-beam
//! states used throughout the crate, mode 0 is the probe and mode 1 the
//! conjugate.

use std::f64::consts::{LN_10, PI, TAU};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROBE: usize = 0;
pub const CONJUGATE: usize = 1;

/// Variance of one vacuum quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

const SYMMETRY_TOL: f64 = 1e-12;
const PHYSICAL_TOL: f64 = 1e-9;

/// Real symmetric covariance matrix of a one- or two-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix {
    modes: usize,
    entries: [[f64; 4]; 4],
}

/// Homodyne quadrature `X_θ = X cos θ + Y sin θ` of a given mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub mode_index: usize,
    theta: f64,
}

impl QuadratureSpec {
    pub fn new(mode_index: usize, theta: f64) -> Self {
        Self {
            mode_index,
            theta: theta.rem_euclid(TAU),
        }
    }

    /// LO phase reduced to `[0, 2π)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl CovMatrix {
    /// Vacuum state of `modes` modes.
    pub fn vacuum(modes: usize) -> Result<Self> {
        if !(1..=2).contains(&modes) {
            return Err(Error::param(
                "dim",
                format!("mode count must be 1 or 2, got {modes}"),
            ));
        }
        let mut entries = [[0.0; 4]; 4];
        for (k, row) in entries.iter_mut().enumerate().take(2 * modes) {
            row[k] = VACUUM_VARIANCE;
        }
        Ok(Self { modes, entries })
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    ///
    /// Each arm alone is thermal with quadrature variance `cosh(2r)/2`. The
    /// cross block is `diag(-sinh(2r), sinh(2r))/2`, so the joint quadrature
    /// `X_p,θp − X_c,θc` reaches `e^{-2r}` when `θp + θc = π`.
    pub fn two_mode_squeezed(r: f64) -> Result<Self> {
        check_squeezing(r)?;
        let c = (2.0 * r).cosh() / 2.0;
        let s = (2.0 * r).sinh() / 2.0;
        let entries = [
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, s],
            [-s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ];
        Ok(Self { modes: 2, entries })
    }

    /// Single-mode squeezed vacuum, `diag(e^{-2r}, e^{2r})/2`.
    pub fn single_mode_squeezed(r: f64) -> Result<Self> {
        check_squeezing(r)?;
        let mut entries = [[0.0; 4]; 4];
        entries[0][0] = (-2.0 * r).exp() / 2.0;
        entries[1][1] = (2.0 * r).exp() / 2.0;
        Ok(Self { modes: 1, entries })
    }

    /// Builds a covariance matrix from its `2·modes` square upper-left block.
    pub fn from_entries(modes: usize, block: &[Vec<f64>]) -> Result<Self> {
        let n = 2 * modes;
        if !(1..=2).contains(&modes) || block.len() != n || block.iter().any(|row| row.len() != n) {
            return Err(Error::param("entries", format!("expected a {n}x{n} block")));
        }
        let mut entries = [[0.0; 4]; 4];
        for j in 0..n {
            for k in 0..n {
                let v = block[j][k];
                if !v.is_finite() {
                    return Err(Error::param("entries", "non-finite entry"));
                }
                if (v - block[k][j]).abs() > SYMMETRY_TOL {
                    return Err(Error::param(
                        "entries",
                        format!("not symmetric at ({j},{k})"),
                    ));
                }
                entries[j][k] = v;
            }
        }
        Ok(Self { modes, entries })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        2 * self.modes
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    /// The active `2·modes` square block, row-major.
    pub fn entries(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        self.entries[..n]
            .iter()
            .map(|row| row[..n].to_vec())
            .collect()
    }

    fn check_mode(&self, index: usize) -> Result<()> {
        if index >= self.modes {
            return Err(Error::ModeIndex {
                index,
                modes: self.modes,
            });
        }
        Ok(())
    }

    /// Beam-splitter loss with power transmission `t` on one mode: the mode
    /// block becomes `t·V + (1 − t)/2·I` and its cross-covariances scale by `√t`.
    pub fn apply_loss(&self, mode_index: usize, t: f64) -> Result<Self> {
        self.check_mode(mode_index)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param(
                "transmission",
                format!("{t} is outside [0, 1]"),
            ));
        }
        let mut out = *self;
        let amp = t.sqrt();
        let own = [2 * mode_index, 2 * mode_index + 1];
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                let in_j = own.contains(&j);
                let in_k = own.contains(&k);
                out.entries[j][k] = match (in_j, in_k) {
                    (true, true) => {
                        let vac = if j == k {
                            VACUUM_VARIANCE * (1.0 - t)
                        } else {
                            0.0
                        };
                        t * self.entries[j][k] + vac
                    }
                    (true, false) | (false, true) => amp * self.entries[j][k],
                    (false, false) => self.entries[j][k],
                };
            }
        }
        Ok(out)
    }

    /// Rotates the quadrature frame of one mode by `phi`: `V → R V Rᵀ` with
    /// `R` the rotation acting on that mode's `(x, y)` pair.
    pub fn phase_rotate(&self, mode_index: usize, phi: f64) -> Result<Self> {
        self.check_mode(mode_index)?;
        let (s, c) = phi.sin_cos();
        let mut rot = Matrix4::<f64>::identity();
        let b = 2 * mode_index;
        rot[(b, b)] = c;
        rot[(b, b + 1)] = -s;
        rot[(b + 1, b)] = s;
        rot[(b + 1, b + 1)] = c;
        let rotated = rot * self.as_matrix() * rot.transpose();
        let mut out = *self;
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                // symmetrize to keep the invariant exact under rounding
                out.entries[j][k] = 0.5 * (rotated[(j, k)] + rotated[(k, j)]);
            }
        }
        Ok(out)
    }

    fn as_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|j, k| self.entries[j][k])
    }

    fn quadratic_form(&self, u: &[f64; 4]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for j in 0..n {
            for k in 0..n {
                acc += u[j] * self.entries[j][k] * u[k];
            }
        }
        acc
    }

    /// Variance of `X_θ` of one mode.
    pub fn quad_variance(&self, spec: QuadratureSpec) -> Result<f64> {
        self.check_mode(spec.mode_index)?;
        let mut u = [0.0; 4];
        let (s, c) = spec.theta.sin_cos();
        u[2 * spec.mode_index] = c;
        u[2 * spec.mode_index + 1] = s;
        Ok(self.quadratic_form(&u).max(0.0))
    }

    /// Variance of the joint quadrature `X_p,θp − X_c,θc`.
    pub fn joint_quad_variance(&self, theta_p: f64, theta_c: f64) -> Result<f64> {
        if self.modes != 2 {
            return Err(Error::NotTwoMode(self.modes));
        }
        let (sp, cp) = theta_p.sin_cos();
        let (sc, cc) = theta_c.sin_cos();
        Ok(self.quadratic_form(&[cp, sp, -cc, -sc]).max(0.0))
    }

    /// Joint-quadrature variance with the probe phase held at 0 and the
    /// conjugate phase scanned to the minimum, as a noise lock acting on one
    /// LO would do. Returns `(variance, theta_c)`.
    pub fn locked_joint_variance(&self) -> Result<(f64, f64)> {
        if self.modes != 2 {
            return Err(Error::NotTwoMode(self.modes));
        }
        let f = |tc: f64| self.quadratic_form(&[1.0, 0.0, -tc.cos(), -tc.sin()]);
        let (theta, value) = minimize_periodic(f);
        Ok((value.max(0.0), theta))
    }

    /// Symplectic eigenvalues, ascending.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let e = &self.entries;
        if self.modes == 1 {
            return vec![(e[0][0] * e[1][1] - e[0][1] * e[1][0]).max(0.0).sqrt()];
        }
        // ν² are the eigenvalues of −(S Ω S)² = (S Ω S)ᵀ(S Ω S) with S = V^{1/2}
        let eig = self.as_matrix().symmetric_eigen();
        let sqrt_v = eig.eigenvectors
            * Matrix4::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()))
            * eig.eigenvectors.transpose();
        let omega = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        );
        let m = sqrt_v * omega * sqrt_v;
        let mut nu2: Vec<f64> = (m.transpose() * m)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nu2.sort_by(f64::total_cmp);
        // eigenvalues come in equal pairs
        vec![nu2[0].max(0.0).sqrt(), nu2[3].max(0.0).sqrt()]
    }

    /// Uncertainty principle: every symplectic eigenvalue ≥ 1/2 and the matrix
    /// is positive definite.
    pub fn is_physical(&self) -> bool {
        let positive = (0..self.dim()).all(|k| self.entries[k][k] > 0.0);
        positive
            && self
                .symplectic_eigenvalues()
                .iter()
                .all(|&nu| nu >= VACUUM_VARIANCE - PHYSICAL_TOL)
    }
}

fn check_squeezing(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::param(
            "r",
            format!("squeezing parameter must be finite and ≥ 0, got {r}"),
        ));
    }
    Ok(())
}

/// Minimizes a smooth 2π-periodic function: coarse grid, then golden-section
/// refinement inside the best grid bracket.
fn minimize_periodic(f: impl Fn(f64) -> f64) -> (f64, f64) {
    const GRID: usize = 256;
    let step = TAU / GRID as f64;
    let (mut best_k, mut best_v) = (0, f64::INFINITY);
    for k in 0..GRID {
        let v = f(k as f64 * step);
        if v < best_v {
            best_k = k;
            best_v = v;
        }
    }
    let (x, v) = golden_min(
        &f,
        (best_k as f64 - 1.0) * step,
        (best_k as f64 + 1.0) * step,
    );
    if v < best_v {
        (x.rem_euclid(TAU), v)
    } else {
        (best_k as f64 * step, best_v)
    }
}

pub(crate) fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// How a squeezing figure in dB is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SqueezingConvention {
    /// Squeezing of the source itself, before any loss: `r = dB·ln10/20`.
    Intrinsic,
    /// Squeezing read at the detector after losses and lock noise.
    #[default]
    Detected,
}

/// Intrinsic squeezing in dB (magnitude; sign ignored) to `r`.
pub fn r_from_intrinsic_db(db: f64) -> f64 {
    db.abs() * LN_10 / 20.0
}

/// Noise power in SNL units to dB.
pub fn to_db(n: f64) -> f64 {
    10.0 * n.log10()
}

/// Lossy detected joint-quadrature variance (SNL units) for a squeezer `r`,
/// plus an additive technical term.
pub fn detected_variance(r: f64, t_probe: f64, t_conj: f64, extra: f64) -> Result<f64> {
    let cov = CovMatrix::two_mode_squeezed(r)?
        .apply_loss(PROBE, t_probe)?
        .apply_loss(CONJUGATE, t_conj)?;
    let snl = CovMatrix::vacuum(2)?.joint_quad_variance(0.0, PI)?;
    Ok(cov.locked_joint_variance()?.0 / snl + extra)
}

/// Solves for the `r` whose detected squeezing (after the given transmissions
/// and additive technical noise) equals `db` below the SNL.
pub fn r_for_detected_db(db: f64, t_probe: f64, t_conj: f64, extra: f64) -> Result<f64> {
    let target = 10f64.powf(-db.abs() / 10.0);
    let at = |r: f64| detected_variance(r, t_probe, t_conj, extra);
    if (at(0.0)? - target).abs() < 1e-15 {
        return Ok(0.0);
    }
    // locate the most squeezed point; with unbalanced loss the variance turns
    // back up at large r
    const R_MAX: f64 = 8.0;
    let g = |r: f64| at(r).unwrap_or(f64::INFINITY);
    let (mut r_best, mut v_best) = golden_min(&g, 0.0, R_MAX);
    if g(R_MAX) < v_best {
        r_best = R_MAX;
        v_best = g(R_MAX);
    }
    if target < v_best || at(0.0)? < target {
        return Err(Error::Unachievable {
            target_db: -db.abs(),
            bound_db: to_db(v_best),
        });
    }
    let (mut lo, mut hi) = (0.0, r_best);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
