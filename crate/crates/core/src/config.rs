//! Run configuration, stored as TOML with `[source]`, `[scene]`,
//! `[acquisition]` and `[output]` tables. Every field has a default, so an
//! empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bitmap::WeightMap;
use crate::error::{Error, Result};
use crate::font::Font;
use crate::gaussian::{self, SqueezingConvention};
use crate::noise::TwinBeamParams;
use crate::scene::{BowTie, CoherenceGrid};
use crate::trace::AcquisitionConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Squeezing magnitude in dB (2.2 means 2.2 dB below the SNL).
    pub squeezing_db: f64,
    pub convention: SqueezingConvention,
    /// Explicit squeezing parameter; takes precedence over `squeezing_db`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub t_probe: f64,
    pub t_conj: f64,
    pub lock_noise: f64,
    pub electronic_floor: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            squeezing_db: 2.2,
            convention: SqueezingConvention::Detected,
            r: None,
            t_probe: 0.912,
            t_conj: 0.912,
            lock_noise: TwinBeamParams::DEFAULT_LOCK_NOISE,
            electronic_floor: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub grid_size: usize,
    pub cell_size: usize,
    pub half_angle_deg: f64,
    pub radius: f64,
    /// LO power contributed by one lit pixel, in the units of `electronic_floor`.
    pub lo_power_per_pixel: f64,
    /// Directory of `A.pbm` … `Z.pbm`; the bundled font is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub font_dir: Option<PathBuf>,
    /// Plain PGM beam intensity profile for the bow-tie sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_map: Option<PathBuf>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            grid_size: 256,
            cell_size: 16,
            half_angle_deg: BowTie::DEFAULT_HALF_ANGLE.to_degrees(),
            radius: 120.0,
            lo_power_per_pixel: 1.0 / 65536.0,
            font_dir: None,
            weight_map: None,
        }
    }
}

pub const DEFAULT_ANGLES_DEG: [f64; 15] = [
    0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0, 8.0, 12.0, 17.0, 23.0, 29.0, 35.0, 41.0,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSection {
    pub seed: u64,
    pub points_per_trace: usize,
    pub segment_length: usize,
    pub samples_per_point: usize,
    pub point_correlation: f64,
    pub series: usize,
    /// LO bow-tie rotations for the sweep.
    pub angles_deg: Vec<f64>,
}

impl Default for AcquisitionSection {
    fn default() -> Self {
        let a = AcquisitionConfig::default();
        Self {
            seed: a.rng_seed,
            points_per_trace: a.points_per_trace,
            segment_length: a.segment_length,
            samples_per_point: a.samples_per_point,
            point_correlation: a.point_correlation,
            series: 10,
            angles_deg: DEFAULT_ANGLES_DEG.to_vec(),
        }
    }
}

impl AcquisitionSection {
    pub fn trace_config(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            points_per_trace: self.points_per_trace,
            segment_length: self.segment_length,
            samples_per_point: self.samples_per_point,
            point_correlation: self.point_correlation,
            rng_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("qni-out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub scene: SceneConfig,
    pub acquisition: AcquisitionSection,
    pub output: OutputConfig,
}

fn field_err(field: &str, e: impl std::fmt::Display) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: e.to_string(),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(
                || "<document>".to_string(),
                |s| {
                    let line = text[..s.start].lines().count().max(1);
                    format!("line {line}")
                },
            );
            Error::Config {
                field,
                reason: e.message().to_string(),
            }
        })?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Reads a config file. Relative `font_dir` and `weight_map` paths are
    /// taken relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.scene.font_dir, &mut cfg.scene.weight_map]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.source;
        if !(s.squeezing_db.is_finite()) {
            return Err(field_err("source.squeezing_db", "must be finite"));
        }
        if let Some(r) = s.r {
            if !(r.is_finite() && r >= 0.0) {
                return Err(field_err("source.r", format!("{r} must be finite and ≥ 0")));
            }
        }
        for (name, t) in [("source.t_probe", s.t_probe), ("source.t_conj", s.t_conj)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(field_err(name, format!("{t} is outside [0, 1]")));
            }
        }
        if !(s.lock_noise.is_finite() && s.lock_noise >= 0.0) {
            return Err(field_err(
                "source.lock_noise",
                format!("{} must be ≥ 0", s.lock_noise),
            ));
        }
        if !(s.electronic_floor.is_finite() && s.electronic_floor >= 0.0) {
            return Err(field_err(
                "source.electronic_floor",
                format!("{} must be ≥ 0", s.electronic_floor),
            ));
        }

        let sc = &self.scene;
        if sc.grid_size < 8 {
            return Err(field_err(
                "scene.grid_size",
                format!("{} is too small (minimum 8)", sc.grid_size),
            ));
        }
        if sc.cell_size == 0 || sc.cell_size > sc.grid_size {
            return Err(field_err(
                "scene.cell_size",
                format!("{} must be in [1, grid_size]", sc.cell_size),
            ));
        }
        if !(sc.half_angle_deg > 0.0 && sc.half_angle_deg < 90.0) {
            return Err(field_err(
                "scene.half_angle_deg",
                format!("{} must be in (0, 90)", sc.half_angle_deg),
            ));
        }
        if !(sc.radius > 0.0 && sc.radius <= sc.grid_size as f64 / 2.0) {
            return Err(field_err(
                "scene.radius",
                format!("{} must be in (0, grid_size/2]", sc.radius),
            ));
        }
        if !(sc.lo_power_per_pixel.is_finite() && sc.lo_power_per_pixel >= 0.0) {
            return Err(field_err("scene.lo_power_per_pixel", "must be ≥ 0"));
        }
        if let Some(d) = &sc.font_dir {
            if !d.is_dir() {
                return Err(field_err(
                    "scene.font_dir",
                    format!("{} is not a directory", d.display()),
                ));
            }
        }
        if let Some(p) = &sc.weight_map {
            if !p.is_file() {
                return Err(field_err(
                    "scene.weight_map",
                    format!("{} does not exist", p.display()),
                ));
            }
        }

        let a = &self.acquisition;
        a.trace_config()
            .validate()
            .map_err(|e| field_err("acquisition", e))?;
        if a.series == 0 {
            return Err(field_err("acquisition.series", "must be ≥ 1"));
        }
        if a.angles_deg.len() < 5 {
            return Err(field_err(
                "acquisition.angles_deg",
                "need at least 5 angles",
            ));
        }
        if a.angles_deg.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(field_err(
                "acquisition.angles_deg",
                "angles must be finite and ≥ 0",
            ));
        }
        Ok(())
    }

    /// Squeezing parameter implied by the source section.
    pub fn resolve_r(&self) -> Result<f64> {
        let s = &self.source;
        if let Some(r) = s.r {
            return Ok(r);
        }
        match s.convention {
            SqueezingConvention::Intrinsic => Ok(gaussian::r_from_intrinsic_db(s.squeezing_db)),
            SqueezingConvention::Detected => {
                gaussian::r_for_detected_db(s.squeezing_db, s.t_probe, s.t_conj, s.lock_noise)
            }
        }
    }

    pub fn params(&self) -> Result<TwinBeamParams> {
        let s = &self.source;
        let p = TwinBeamParams {
            r: self.resolve_r()?,
            t_probe: s.t_probe,
            t_conj: s.t_conj,
            lock_noise: s.lock_noise,
            electronic_floor: s.electronic_floor,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> Result<CoherenceGrid> {
        CoherenceGrid::new(self.scene.cell_size)
    }

    pub fn half_angle(&self) -> f64 {
        self.scene.half_angle_deg.to_radians()
    }

    pub fn font(&self) -> Result<Font> {
        match &self.scene.font_dir {
            Some(d) => Font::load_dir(d),
            None => Ok(Font::bundled()),
        }
    }

    pub fn weights(&self) -> Result<Option<WeightMap>> {
        self.scene
            .weight_map
            .as_ref()
            .map(WeightMap::load)
            .transpose()
    }

    /// Same configuration with the squeezing fixed to `r`.
    pub fn with_r(&self, r: f64) -> Self {
        let mut c = self.clone();
        c.source.r = Some(r);
        c
    }
}
