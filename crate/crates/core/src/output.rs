//! CSV and JSON artifacts written by the command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimation::AlphabetReport;
use crate::gaussian::to_db;
use crate::noise::Technique;
use crate::pipeline::{Calibration, SweepReport};

pub const SWEEP_SCHEMA: &str = "qni-sweep/1";
pub const ALPHABET_SCHEMA: &str = "qni-alphabet/1";

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// One row per angle, technique and series.
pub fn sweep_csv(report: &SweepReport) -> String {
    let mut s = format!(
        "# schema: {SWEEP_SCHEMA}\nangle_deg,overlap,technique,series,n,n_db,delta_n,valid\n"
    );
    for p in &report.points {
        for technique in Technique::BOTH {
            for (k, m) in p.series(technique).iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{k},{},{},{},{}",
                    p.angle_deg,
                    p.overlap,
                    technique.as_str(),
                    m.n,
                    to_db(m.n),
                    m.delta_n,
                    m.valid
                );
            }
        }
    }
    s
}

pub fn fits_json(report: &SweepReport) -> Result<String> {
    let fit = |f: &crate::pipeline::FitSummary| {
        json!({
            "coefficients": f.curve.coeffs,
            "coefficient_sigma": f.coeff_sigma,
            "line": { "intercept": f.curve.line.0, "slope": f.curve.line.1 },
            "synthetic_point": f.curve.synthetic_point,
            "residual_rms": f.curve.residual_rms,
            "points": f.curve.points.iter().map(|(o, m)| json!({"overlap": o, "n": m.n, "delta_n": m.delta_n})).collect::<Vec<_>>(),
        })
    };
    to_json(&json!({
        "classical": fit(&report.classical_fit),
        "quantum": fit(&report.quantum_fit),
    }))
}

pub fn sweep_summary_json(cfg: &RunConfig, report: &SweepReport) -> Result<String> {
    to_json(&json!({
        "config": cfg,
        "r": report.r,
        "enhancement": report.enhancement,
        "angle_enhancement": report.angle_enhancement,
        "o_cross": report.o_cross,
        "classical_n_at_unity": report.classical_fit.curve.eval(1.0),
        "quantum_n_at_unity": report.quantum_fit.curve.eval(1.0),
        "delta_o": report.delta_o,
    }))
}

/// Writes `sweep.csv`, `fits.json` and `summary.json`.
pub fn write_sweep(dir: &Path, cfg: &RunConfig, report: &SweepReport) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, "sweep.csv", &sweep_csv(report))?,
        write(dir, "fits.json", &fits_json(report)?)?,
        write(dir, "summary.json", &sweep_summary_json(cfg, report)?)?,
    ])
}

/// One row per letter and technique.
pub fn alphabet_csv(report: &AlphabetReport) -> String {
    let mut s = format!(
        "# schema: {ALPHABET_SCHEMA}\nletter,technique,lo_pixels,overlap,n_baseline,delta_n_baseline,n_masked,delta_n_masked,n_masked_db,d,sigma_d,valid,sub_snl\n"
    );
    for r in &report.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.letter,
            r.technique.as_str(),
            r.lo_pixels,
            r.overlap,
            r.baseline.n,
            r.baseline.delta_n,
            r.masked.n,
            r.masked.delta_n,
            to_db(r.masked.n),
            r.d,
            r.sigma_d,
            r.valid,
            r.sub_snl
        );
    }
    s
}

pub fn ranking_json(cfg: &RunConfig, mask_letter: char, report: &AlphabetReport) -> Result<String> {
    to_json(&json!({
        "config": cfg,
        "mask": mask_letter.to_ascii_uppercase().to_string(),
        "classical": report.classical,
        "quantum": report.quantum,
        "sub_snl_letters": report.sub_snl_letters,
        "excluded": report.excluded.iter().map(|(c, why)| json!({"letter": c.to_string(), "reason": why})).collect::<Vec<_>>(),
    }))
}

/// Writes `alphabet.csv` and `ranking.json`.
pub fn write_alphabet(
    dir: &Path,
    cfg: &RunConfig,
    mask_letter: char,
    report: &AlphabetReport,
) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, "alphabet.csv", &alphabet_csv(report))?,
        write(
            dir,
            "ranking.json",
            &ranking_json(cfg, mask_letter, report)?,
        )?,
    ])
}

/// Writes `calibrated.toml` and `calibration.json`.
pub fn write_calibration(dir: &Path, cal: &Calibration) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write(dir, "calibrated.toml", &cal.config.to_toml_string()?)?,
        write(dir, "calibration.json", &to_json(cal)?)?,
    ])
}
