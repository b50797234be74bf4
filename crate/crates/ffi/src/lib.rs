//! C ABI for the qni simulator.
//!
//! Every fallible function returns a [`QniStatus`]; on failure a message for
//! the calling thread is available from [`qni_last_error_message`]. Bitmaps and
//! run configurations are opaque handles created by `*_new`/`*_load`-style
//! functions and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use qni_core::bitmap::Bitmap;
use qni_core::config::RunConfig;
use qni_core::font::Font;
use qni_core::noise::{self, Technique, TwinBeamParams};
use qni_core::scene::{self, CoherenceGrid};
use qni_core::trace::{self, AcquisitionConfig};
use qni_core::{gaussian, output, pipeline, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QniStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidParameter = 3,
    DimensionMismatch = 4,
    EmptyLo = 5,
    UnknownLetter = 6,
    Bitmap = 7,
    InsufficientData = 8,
    Degenerate = 9,
    Insensitive = 10,
    NonMonotone = 11,
    AllLettersInvalid = 12,
    Unachievable = 13,
    Config = 14,
    Io = 15,
    Serialize = 16,
    Panic = 17,
    Other = 18,
}

impl From<&Error> for QniStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => QniStatus::InvalidParameter,
            Error::DimensionMismatch(..) => QniStatus::DimensionMismatch,
            Error::EmptyLo => QniStatus::EmptyLo,
            Error::UnknownLetter(_) => QniStatus::UnknownLetter,
            Error::Bitmap(_) => QniStatus::Bitmap,
            Error::InsufficientData(_) => QniStatus::InsufficientData,
            Error::Degenerate(_) => QniStatus::Degenerate,
            Error::InsensitivePoint { .. } => QniStatus::Insensitive,
            Error::NonMonotone(_) => QniStatus::NonMonotone,
            Error::AllLettersInvalid => QniStatus::AllLettersInvalid,
            Error::Unachievable { .. } => QniStatus::Unachievable,
            Error::Config { .. } => QniStatus::Config,
            Error::Io { .. } => QniStatus::Io,
            Error::Serialize(_) => QniStatus::Serialize,
            _ => QniStatus::Other,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QniTechnique {
    Classical = 0,
    Quantum = 1,
}

impl From<QniTechnique> for Technique {
    fn from(t: QniTechnique) -> Self {
        match t {
            QniTechnique::Classical => Technique::Classical,
            QniTechnique::Quantum => Technique::Quantum,
        }
    }
}

/// Source and detection parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QniParams {
    pub r: f64,
    pub t_probe: f64,
    pub t_conj: f64,
    pub lock_noise: f64,
    pub electronic_floor: f64,
}

impl From<QniParams> for TwinBeamParams {
    fn from(p: QniParams) -> Self {
        TwinBeamParams {
            r: p.r,
            t_probe: p.t_probe,
            t_conj: p.t_conj,
            lock_noise: p.lock_noise,
            electronic_floor: p.electronic_floor,
        }
    }
}

/// Trace geometry for [`qni_simulate_measurement`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QniAcquisition {
    pub points_per_trace: usize,
    pub segment_length: usize,
    pub samples_per_point: usize,
    pub point_correlation: f64,
    pub rng_seed: u64,
}

impl From<QniAcquisition> for AcquisitionConfig {
    fn from(a: QniAcquisition) -> Self {
        AcquisitionConfig {
            points_per_trace: a.points_per_trace,
            segment_length: a.segment_length,
            samples_per_point: a.samples_per_point,
            point_correlation: a.point_correlation,
            rng_seed: a.rng_seed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QniMeasurement {
    pub n: f64,
    pub delta_n: f64,
}

/// Opaque binary image.
pub struct QniBitmap(Bitmap);

/// Opaque run configuration.
pub struct QniConfig(RunConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), QniStatus>) -> QniStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QniStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            QniStatus::Panic
        }
    }
}

fn fail(e: Error) -> QniStatus {
    set_error(e.to_string());
    QniStatus::from(&e)
}

fn null(name: &str) -> QniStatus {
    set_error(format!("`{name}` is null"));
    QniStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, QniStatus> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("`{name}` is not valid UTF-8"));
        QniStatus::InvalidArgument
    })
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), QniStatus> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn bitmap_ref<'a>(p: *const QniBitmap, name: &str) -> Result<&'a Bitmap, QniStatus> {
    p.as_ref().map(|b| &b.0).ok_or_else(|| null(name))
}

unsafe fn config_ref<'a>(p: *const QniConfig, name: &str) -> Result<&'a RunConfig, QniStatus> {
    p.as_ref().map(|c| &c.0).ok_or_else(|| null(name))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qni_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next qni call on the same thread.
#[no_mangle]
pub extern "C" fn qni_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_load(
    path: *const c_char,
    out: *mut *mut QniBitmap,
) -> QniStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let bm = Bitmap::load(path).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(QniBitmap(bm))), "out")
    })
}

/// Parses plain PBM (`P1`) text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_parse(
    text: *const c_char,
    out: *mut *mut QniBitmap,
) -> QniStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let bm = Bitmap::parse_pbm(text).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(QniBitmap(bm))), "out")
    })
}

/// Bow tie rasterized on a `size × size` grid; angles in radians.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_bowtie(
    size: usize,
    rotation: f64,
    half_angle: f64,
    radius: f64,
    out: *mut *mut QniBitmap,
) -> QniStatus {
    guard(|| {
        let bm = scene::bowtie(rotation, half_angle, radius, size, size).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(QniBitmap(bm))), "out")
    })
}

/// Bundled glyph for `letter`, scaled and centred in a `size × size` grid.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_glyph(
    letter: c_char,
    size: usize,
    out: *mut *mut QniBitmap,
) -> QniStatus {
    guard(|| {
        let bm = Font::bundled()
            .glyph_in_grid(letter as u8 as char, size, size)
            .map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(QniBitmap(bm))), "out")
    })
}

/// # Safety
/// `bitmap` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_free(bitmap: *mut QniBitmap) {
    if !bitmap.is_null() {
        drop(Box::from_raw(bitmap));
    }
}

/// Width, height and number of lit pixels.
///
/// # Safety
/// `bitmap` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn qni_bitmap_info(
    bitmap: *const QniBitmap,
    width: *mut usize,
    height: *mut usize,
    lit: *mut usize,
) -> QniStatus {
    guard(|| {
        let bm = bitmap_ref(bitmap, "bitmap")?;
        for (p, v) in [
            (width, bm.width()),
            (height, bm.height()),
            (lit, bm.count()),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Fraction of the LO's lit pixels that the mask transmits.
///
/// # Safety
/// `lo` and `mask` must be live handles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_overlap(
    lo: *const QniBitmap,
    mask: *const QniBitmap,
    out: *mut f64,
) -> QniStatus {
    guard(|| {
        let o = scene::overlap(bitmap_ref(lo, "lo")?, bitmap_ref(mask, "mask")?).map_err(fail)?;
        write_out(out, o, "out")
    })
}

/// Noise power in shot-noise units for the LO/mask pair on a square
/// coherence grid of `cell_size` pixels.
///
/// # Safety
/// Handles must be live; `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qni_noise(
    technique: QniTechnique,
    lo: *const QniBitmap,
    mask: *const QniBitmap,
    cell_size: usize,
    params: *const QniParams,
    out: *mut f64,
) -> QniStatus {
    guard(|| {
        let params: TwinBeamParams = params
            .as_ref()
            .copied()
            .ok_or_else(|| null("params"))?
            .into();
        let grid = CoherenceGrid::new(cell_size).map_err(fail)?;
        let decomp = scene::decompose(bitmap_ref(lo, "lo")?, bitmap_ref(mask, "mask")?, &grid)
            .map_err(fail)?;
        let n = noise::noise(technique.into(), &decomp, &params).map_err(fail)?;
        write_out(out, n, "out")
    })
}

/// Squeezing parameter giving `db` of detected squeezing after the given
/// transmissions and additive noise.
///
/// # Safety
/// `out_r` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_solve_squeezing(
    db: f64,
    t_probe: f64,
    t_conj: f64,
    extra_noise: f64,
    out_r: *mut f64,
) -> QniStatus {
    guard(|| {
        let r = gaussian::r_for_detected_db(db, t_probe, t_conj, extra_noise).map_err(fail)?;
        write_out(out_r, r, "out_r")
    })
}

/// Default trace geometry.
#[no_mangle]
pub extern "C" fn qni_acquisition_default() -> QniAcquisition {
    let a = AcquisitionConfig::default();
    QniAcquisition {
        points_per_trace: a.points_per_trace,
        segment_length: a.segment_length,
        samples_per_point: a.samples_per_point,
        point_correlation: a.point_correlation,
        rng_seed: a.rng_seed,
    }
}

/// Simulates one trace of true power `n_true` and reduces it to `N` and `ΔN`.
///
/// # Safety
/// `acquisition` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qni_simulate_measurement(
    n_true: f64,
    acquisition: *const QniAcquisition,
    out: *mut QniMeasurement,
) -> QniStatus {
    guard(|| {
        let acq: AcquisitionConfig = acquisition
            .as_ref()
            .copied()
            .ok_or_else(|| null("acquisition"))?
            .into();
        let t = trace::simulate_trace(n_true, &acq).map_err(fail)?;
        let m = trace::segment_stats(&t, Technique::Quantum).map_err(fail)?;
        write_out(
            out,
            QniMeasurement {
                n: m.n,
                delta_n: m.delta_n,
            },
            "out",
        )
    })
}

/// Configuration with every field at its default.
#[no_mangle]
pub extern "C" fn qni_config_default() -> *mut QniConfig {
    Box::into_raw(Box::new(QniConfig(RunConfig::default())))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qni_config_load(
    path: *const c_char,
    out: *mut *mut QniConfig,
) -> QniStatus {
    guard(|| {
        let cfg = RunConfig::load(str_arg(path, "path")?).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(QniConfig(cfg))), "out")
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qni_config_set_seed(config: *mut QniConfig, seed: u64) -> QniStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.0.acquisition.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qni_config_free(config: *mut QniConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the bow-tie sweep and writes `sweep.csv`, `fits.json` and
/// `summary.json` into `out_dir`. `enhancement` may be null.
///
/// # Safety
/// `config` must be a live handle and `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qni_run_sweep(
    config: *const QniConfig,
    out_dir: *const c_char,
    enhancement: *mut f64,
) -> QniStatus {
    guard(|| {
        let cfg = config_ref(config, "config")?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let rep = pipeline::run_sweep(cfg).map_err(fail)?;
        output::write_sweep(&dir, cfg, &rep).map_err(fail)?;
        if !enhancement.is_null() {
            enhancement.write(rep.enhancement.factor);
        }
        Ok(())
    })
}

/// Runs the alphabet test against a glyph mask and writes `alphabet.csv`
/// and `ranking.json`. `best_quantum` may be null.
///
/// # Safety
/// `config` must be a live handle and `out_dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qni_run_alphabet(
    config: *const QniConfig,
    mask_letter: c_char,
    out_dir: *const c_char,
    best_quantum: *mut c_char,
) -> QniStatus {
    guard(|| {
        let cfg = config_ref(config, "config")?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let letter = mask_letter as u8 as char;
        let rep = pipeline::run_alphabet(cfg, letter).map_err(fail)?;
        output::write_alphabet(&dir, cfg, letter, &rep).map_err(fail)?;
        if !best_quantum.is_null() {
            best_quantum.write(rep.quantum.best as u8 as c_char);
        }
        Ok(())
    })
}

/// Calibrates the squeezing for `db` of detected squeezing and writes
/// `calibrated.toml` and `calibration.json`.
///
/// # Safety
/// `config` must be a live handle, `out_dir` a NUL-terminated string and
/// `out_r` null or valid.
#[no_mangle]
pub unsafe extern "C" fn qni_run_calibrate(
    config: *const QniConfig,
    db: f64,
    out_dir: *const c_char,
    out_r: *mut f64,
) -> QniStatus {
    guard(|| {
        let cfg = config_ref(config, "config")?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let cal = pipeline::run_calibrate(cfg, db).map_err(fail)?;
        output::write_calibration(&dir, &cal).map_err(fail)?;
        if !out_r.is_null() {
            out_r.write(cal.r);
        }
        Ok(())
    })
}
