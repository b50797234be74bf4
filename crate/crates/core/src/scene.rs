//! Transverse geometry: bow-tie masks, LO–mask overlap, and the split of the
//! LO footprint into coherence cells.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::bitmap::{Bitmap, WeightMap};
use crate::error::{Error, Result};

/// Two opposed angular wedges about the grid centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowTie {
    /// Rotation of the wedge axis, radians.
    pub rotation: f64,
    /// Half-angle of each wedge, radians, in `(0, π/2)`.
    pub half_angle: f64,
    /// Outer radius in pixels.
    pub radius: f64,
}

impl BowTie {
    pub const DEFAULT_HALF_ANGLE: f64 = PI / 8.0;

    /// Rasterizes by pixel-centre sampling on a `width × height` grid.
    pub fn rasterize(&self, width: usize, height: usize) -> Result<Bitmap> {
        let alpha = self.half_angle;
        if !(alpha > 0.0 && alpha < FRAC_PI_2) {
            return Err(Error::param(
                "half_angle",
                format!("{alpha} is outside (0, π/2)"),
            ));
        }
        let max_r = 0.5 * width.min(height) as f64;
        if !(self.radius > 0.0 && self.radius <= max_r) {
            return Err(Error::param(
                "radius",
                format!("{} does not fit a {width}x{height} grid", self.radius),
            ));
        }
        let axis = self.rotation.rem_euclid(PI);
        let (cx, cy) = (0.5 * width as f64, 0.5 * height as f64);
        let r2 = self.radius * self.radius;
        Bitmap::from_fn(width, height, |x, y| {
            let dx = x as f64 + 0.5 - cx;
            let dy = cy - (y as f64 + 0.5);
            if dx * dx + dy * dy > r2 {
                return false;
            }
            let d = (dy.atan2(dx) - axis).rem_euclid(PI);
            d.min(PI - d) <= alpha
        })
    }
}

/// Convenience wrapper around [`BowTie::rasterize`].
pub fn bowtie(
    rotation: f64,
    half_angle: f64,
    radius: f64,
    width: usize,
    height: usize,
) -> Result<Bitmap> {
    BowTie {
        rotation,
        half_angle,
        radius,
    }
    .rasterize(width, height)
}

/// Fraction of LO power transmitted by the mask, `|lo ∧ mask| / |lo|`.
pub fn overlap(lo: &Bitmap, mask: &Bitmap) -> Result<f64> {
    lo.same_shape(mask)?;
    let total = lo.count();
    if total == 0 {
        return Err(Error::EmptyLo);
    }
    Ok(lo.and(mask)?.count() as f64 / total as f64)
}

/// Overlap with a non-uniform beam intensity profile.
pub fn overlap_weighted(lo: &Bitmap, mask: &Bitmap, weights: &WeightMap) -> Result<f64> {
    lo.same_shape(mask)?;
    check_weights(lo, weights)?;
    let (mut hit, mut total) = (0.0, 0.0);
    for (k, (&l, &m)) in lo.bits().iter().zip(mask.bits()).enumerate() {
        if l {
            let w = weights.values()[k];
            total += w;
            if m {
                hit += w;
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptyLo);
    }
    Ok(hit / total)
}

fn check_weights(lo: &Bitmap, weights: &WeightMap) -> Result<()> {
    if weights.width() != lo.width() || weights.height() != lo.height() {
        return Err(Error::DimensionMismatch(
            lo.width(),
            lo.height(),
            weights.width(),
            weights.height(),
        ));
    }
    Ok(())
}

/// Square partition of the transverse plane into coherence areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceGrid {
    pub cell_size: usize,
    /// Shift of the grid relative to pixel `(0, 0)`; cells at the edges may be partial.
    pub origin: usize,
}

impl CoherenceGrid {
    pub fn new(cell_size: usize) -> Result<Self> {
        Self::with_origin(cell_size, 0)
    }

    pub fn with_origin(cell_size: usize, origin: usize) -> Result<Self> {
        if cell_size == 0 {
            return Err(Error::param("cell_size", "must be ≥ 1"));
        }
        Ok(Self {
            cell_size,
            origin: origin % cell_size,
        })
    }

    fn cell_of(&self, x: usize, y: usize, cols: usize) -> usize {
        let cx = (x + self.origin) / self.cell_size;
        let cy = (y + self.origin) / self.cell_size;
        cy * cols + cx
    }
}

/// One coherence cell seen by the LO.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Fraction of the LO power in this cell.
    pub weight: f64,
    /// Fraction of the cell's LO power that the mask transmits.
    pub transmission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDecomposition {
    cells: Vec<Cell>,
    lo_pixel_count: usize,
}

impl CellDecomposition {
    /// Validates a hand-built decomposition: weights non-negative and summing
    /// to one, transmissions in `[0, 1]`.
    pub fn new(cells: Vec<Cell>, lo_pixel_count: usize) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::param("cells", "decomposition has no cells"));
        }
        let mut sum = 0.0;
        for c in &cells {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return Err(Error::param(
                    "weight",
                    format!("{} is not a valid weight", c.weight),
                ));
            }
            if !(0.0..=1.0).contains(&c.transmission) {
                return Err(Error::param(
                    "transmission",
                    format!("{} is outside [0, 1]", c.transmission),
                ));
            }
            sum += c.weight;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "weight",
                format!("weights sum to {sum}, expected 1"),
            ));
        }
        Ok(Self {
            cells,
            lo_pixel_count,
        })
    }

    /// Single cell with overlap `o`.
    pub fn single(o: f64) -> Result<Self> {
        Self::new(
            vec![Cell {
                weight: 1.0,
                transmission: o,
            }],
            1,
        )
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn lo_pixel_count(&self) -> usize {
        self.lo_pixel_count
    }

    /// `Σ wᵢ·Tᵢ`.
    pub fn overlap(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.weight * c.transmission)
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }
}

/// Splits the LO footprint over the coherence grid. Cells the LO does not
/// touch are omitted; the rest are listed in row-major cell order.
pub fn decompose(lo: &Bitmap, mask: &Bitmap, grid: &CoherenceGrid) -> Result<CellDecomposition> {
    decompose_inner(lo, mask, grid, None)
}

pub fn decompose_weighted(
    lo: &Bitmap,
    mask: &Bitmap,
    grid: &CoherenceGrid,
    weights: &WeightMap,
) -> Result<CellDecomposition> {
    check_weights(lo, weights)?;
    decompose_inner(lo, mask, grid, Some(weights))
}

fn decompose_inner(
    lo: &Bitmap,
    mask: &Bitmap,
    grid: &CoherenceGrid,
    weights: Option<&WeightMap>,
) -> Result<CellDecomposition> {
    lo.same_shape(mask)?;
    if grid.cell_size == 0 {
        return Err(Error::param("cell_size", "must be ≥ 1"));
    }
    let lo_pixel_count = lo.count();
    if lo_pixel_count == 0 {
        return Err(Error::EmptyLo);
    }
    let cs = grid.cell_size;
    let cols = (lo.width() + grid.origin).div_ceil(cs);
    let rows = (lo.height() + grid.origin).div_ceil(cs);
    let mut lo_power = vec![0.0; cols * rows];
    let mut passed = vec![0.0; cols * rows];
    for y in 0..lo.height() {
        for x in 0..lo.width() {
            if !lo.get(x, y) {
                continue;
            }
            let w = weights.map_or(1.0, |m| m.get(x, y));
            let cell = grid.cell_of(x, y, cols);
            lo_power[cell] += w;
            if mask.get(x, y) {
                passed[cell] += w;
            }
        }
    }
    let total: f64 = lo_power.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyLo);
    }
    let cells = lo_power
        .iter()
        .zip(&passed)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &t)| Cell {
            weight: p / total,
            transmission: (t / p).clamp(0.0, 1.0),
        })
        .collect();
    Ok(CellDecomposition {
        cells,
        lo_pixel_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bowtie_point_symmetry() {
        for delta in [0.0, 0.3, 1.1, 2.9] {
            let a = bowtie(delta, PI / 8.0, 60.0, 128, 128).unwrap();
            let b = bowtie(delta + PI, PI / 8.0, 60.0, 128, 128).unwrap();
            assert_eq!(a, b);
            let flipped = Bitmap::from_fn(128, 128, |x, y| a.get(127 - x, 127 - y)).unwrap();
            assert_eq!(a, flipped);
        }
    }

    #[test]
    fn bowtie_rejects_bad_half_angle() {
        assert!(bowtie(0.0, 0.0, 10.0, 32, 32).is_err());
        assert!(bowtie(0.0, FRAC_PI_2, 10.0, 32, 32).is_err());
        assert!(bowtie(0.0, 0.3, 17.0, 32, 32).is_err());
    }

    #[test]
    fn bowtie_area_fraction() {
        // pixel count vs disk pixel count at 512²
        let alpha = PI / 8.0;
        let radius = 250.0;
        let tie = bowtie(0.0, alpha, radius, 512, 512).unwrap();
        let disk = Bitmap::from_fn(512, 512, |x, y| {
            let dx = x as f64 + 0.5 - 256.0;
            let dy = y as f64 + 0.5 - 256.0;
            dx * dx + dy * dy <= radius * radius
        })
        .unwrap();
        let frac = tie.count() as f64 / disk.count() as f64;
        let expected = 2.0 * alpha / PI;
        assert!(
            (frac - expected).abs() / expected < 0.01,
            "{frac} vs {expected}"
        );
    }

    #[test]
    fn bowtie_overlap_matches_wedge_formula() {
        let alpha = PI / 8.0;
        let lo = bowtie(0.0, alpha, 250.0, 512, 512).unwrap();
        for k in 0..=10 {
            let delta = 2.0 * alpha * k as f64 / 10.0;
            let mask = bowtie(delta, alpha, 250.0, 512, 512).unwrap();
            let o = overlap(&lo, &mask).unwrap();
            assert_abs_diff_eq!(o, 1.0 - delta / (2.0 * alpha), epsilon = 0.01);
        }
    }

    #[test]
    fn overlap_trivial_cases() {
        let lo = Bitmap::from_fn(8, 8, |x, _| x < 4).unwrap();
        assert_eq!(overlap(&lo, &Bitmap::ones(8, 8).unwrap()).unwrap(), 1.0);
        assert_eq!(overlap(&lo, &Bitmap::zeros(8, 8).unwrap()).unwrap(), 0.0);
        let top = Bitmap::from_fn(8, 8, |_, y| y < 4).unwrap();
        assert_eq!(overlap(&lo, &top).unwrap(), 0.5);
    }

    #[test]
    fn overlap_errors() {
        let lo = Bitmap::ones(4, 4).unwrap();
        assert!(matches!(
            overlap(&lo, &Bitmap::ones(4, 5).unwrap()),
            Err(Error::DimensionMismatch(..))
        ));
        let empty = Bitmap::zeros(4, 4).unwrap();
        assert!(matches!(overlap(&empty, &lo), Err(Error::EmptyLo)));
        assert!(matches!(
            decompose(&empty, &lo, &CoherenceGrid::new(2).unwrap()),
            Err(Error::EmptyLo)
        ));
    }

    #[test]
    fn degenerate_grids() {
        let lo = bowtie(0.0, 0.4, 30.0, 64, 64).unwrap();
        let mask = bowtie(0.2, 0.4, 30.0, 64, 64).unwrap();
        let o = overlap(&lo, &mask).unwrap();
        let whole = decompose(&lo, &mask, &CoherenceGrid::new(64).unwrap()).unwrap();
        assert_eq!(whole.cells().len(), 1);
        assert_abs_diff_eq!(whole.cells()[0].weight, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(whole.cells()[0].transmission, o, epsilon = 1e-15);
        let pixels = decompose(&lo, &mask, &CoherenceGrid::new(1).unwrap()).unwrap();
        assert_eq!(pixels.cells().len(), lo.count());
        assert!(pixels
            .cells()
            .iter()
            .all(|c| c.transmission == 0.0 || c.transmission == 1.0));
    }

    #[test]
    fn partial_edge_cells_keep_full_weight() {
        let lo = Bitmap::ones(10, 10).unwrap();
        let mask = Bitmap::from_fn(10, 10, |x, _| x < 3).unwrap();
        let d = decompose(&lo, &mask, &CoherenceGrid::with_origin(4, 1).unwrap()).unwrap();
        let sum: f64 = d.cells().iter().map(|c| c.weight).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.overlap(), 0.3, epsilon = 1e-12);
        assert_eq!(d.cells().len(), 9);
    }

    #[test]
    fn weighted_decomposition_matches_weighted_overlap() {
        let lo = bowtie(0.0, 0.4, 30.0, 64, 64).unwrap();
        let mask = bowtie(0.25, 0.4, 30.0, 64, 64).unwrap();
        let w = WeightMap::gaussian(64, 64, 40.0, 30.0, 25.0).unwrap();
        let d = decompose_weighted(&lo, &mask, &CoherenceGrid::new(8).unwrap(), &w).unwrap();
        assert_abs_diff_eq!(
            d.overlap(),
            overlap_weighted(&lo, &mask, &w).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn decomposition_validation() {
        assert!(CellDecomposition::new(
            vec![Cell {
                weight: 0.5,
                transmission: 1.0
            }],
            1
        )
        .is_err());
        assert!(CellDecomposition::new(
            vec![Cell {
                weight: 1.0,
                transmission: 1.5
            }],
            1
        )
        .is_err());
        assert!(CellDecomposition::single(0.4).is_ok());
    }
}
