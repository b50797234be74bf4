//! Binary and weighted pixel grids with ASCII portable-bitmap IO.
//!
//! Bitmaps read and write the plain PBM format (magic `P1`), weight maps the
//! plain PGM format (magic `P2`). Pixels are stored row-major, `(0, 0)` at the
//! top-left.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, false)
    }

    pub fn ones(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, true)
    }

    fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Bitmap(format!(
                "dimensions must be ≥ 1, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            bits: vec![value; width * height],
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut bm = Self::zeros(width, height)?;
        for y in 0..height {
            for x in 0..width {
                bm.bits[y * width + x] = f(x, y);
            }
        }
        Ok(bm)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &Bitmap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn and(&self, other: &Bitmap) -> Result<Bitmap> {
        self.same_shape(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a && *b)
            .collect();
        Ok(Bitmap {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn or(&self, other: &Bitmap) -> Result<Bitmap> {
        self.same_shape(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| *a || *b)
            .collect();
        Ok(Bitmap {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    /// Nearest-neighbour integer upscaling.
    pub fn scaled(&self, factor: usize) -> Result<Bitmap> {
        if factor == 0 {
            return Err(Error::Bitmap("scale factor must be ≥ 1".into()));
        }
        Bitmap::from_fn(self.width * factor, self.height * factor, |x, y| {
            self.get(x / factor, y / factor)
        })
    }

    /// Places this bitmap at the centre of a larger canvas.
    pub fn centered_in(&self, width: usize, height: usize) -> Result<Bitmap> {
        if width < self.width || height < self.height {
            return Err(Error::Bitmap(format!(
                "{}x{} does not fit in {width}x{height}",
                self.width, self.height
            )));
        }
        let ox = (width - self.width) / 2;
        let oy = (height - self.height) / 2;
        Bitmap::from_fn(width, height, |x, y| {
            x >= ox
                && y >= oy
                && x - ox < self.width
                && y - oy < self.height
                && self.get(x - ox, y - oy)
        })
    }

    pub fn parse_pbm(text: &str) -> Result<Bitmap> {
        let mut tokens = PnmTokens::new(text);
        if tokens.next_token().as_deref() != Some("P1") {
            return Err(Error::Bitmap("missing P1 magic".into()));
        }
        let width = tokens.next_usize("width")?;
        let height = tokens.next_usize("height")?;
        let mut bm = Bitmap::zeros(width, height)?;
        // raster digits may be run together, so read characters, not tokens
        let mut k = 0;
        for c in tokens.rest().chars() {
            match c {
                '0' | '1' if k < width * height => {
                    bm.bits[k] = c == '1';
                    k += 1;
                }
                '0' | '1' => return Err(Error::Bitmap("too many pixels".into())),
                c if c.is_whitespace() => {}
                '#' => return Err(Error::Bitmap("comment inside raster".into())),
                other => return Err(Error::Bitmap(format!("unexpected character {other:?}"))),
            }
        }
        if k != width * height {
            return Err(Error::Bitmap(format!(
                "expected {} pixels, found {k}",
                width * height
            )));
        }
        Ok(bm)
    }

    pub fn to_pbm(&self) -> String {
        let mut out = format!("P1\n{} {}\n", self.width, self.height);
        for row in self.bits.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Bitmap> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Bitmap::parse_pbm(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_pbm()).map_err(|e| Error::io(path, e))
    }
}

/// Per-pixel intensity weights (non-negative).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl WeightMap {
    pub fn uniform(width: usize, height: usize) -> Result<Self> {
        Self::from_fn(width, height, |_, _| 1.0)
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Bitmap(format!(
                "dimensions must be ≥ 1, got {width}x{height}"
            )));
        }
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Bitmap(format!("weight at ({x},{y}) is {v}")));
                }
                values.push(v);
            }
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Gaussian beam profile `exp(-2ρ²/w²)` centred at `(cx, cy)` in pixel units.
    pub fn gaussian(width: usize, height: usize, cx: f64, cy: f64, waist: f64) -> Result<Self> {
        Self::from_fn(width, height, |x, y| {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            (-2.0 * (dx * dx + dy * dy) / (waist * waist)).exp()
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Reads a plain PGM (`P2`) file; weights are `value / maxval`.
    pub fn parse_pgm(text: &str) -> Result<Self> {
        let mut tokens = PnmTokens::new(text);
        if tokens.next_token().as_deref() != Some("P2") {
            return Err(Error::Bitmap("missing P2 magic".into()));
        }
        let width = tokens.next_usize("width")?;
        let height = tokens.next_usize("height")?;
        let maxval = tokens.next_usize("maxval")?;
        if maxval == 0 {
            return Err(Error::Bitmap("maxval must be ≥ 1".into()));
        }
        let mut raw = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            let v = tokens.next_usize("pixel")?;
            if v > maxval {
                return Err(Error::Bitmap(format!("pixel {v} exceeds maxval {maxval}")));
            }
            raw.push(v as f64 / maxval as f64);
        }
        Self::from_fn(width, height, |x, y| raw[y * width + x])
    }

    pub fn to_pgm(&self, maxval: u16) -> String {
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        let scale = if peak > 0.0 {
            maxval as f64 / peak
        } else {
            0.0
        };
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, maxval);
        for row in self.values.chunks(self.width) {
            let mut line = String::new();
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{}", (v * scale).round() as u32);
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_pgm(&text)
    }
}

/// Whitespace tokenizer that skips `#` comments in a PNM header.
struct PnmTokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> PnmTokens<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn skip_space_and_comments(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() {
            if bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            } else if bytes[self.pos] == b'#' {
                while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Option<String> {
        self.skip_space_and_comments();
        let bytes = self.text.as_bytes();
        let start = self.pos;
        while self.pos < bytes.len()
            && !bytes[self.pos].is_ascii_whitespace()
            && bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.text[start..self.pos].to_string())
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .next_token()
            .ok_or_else(|| Error::Bitmap(format!("missing {what}")))?;
        tok.parse()
            .map_err(|_| Error::Bitmap(format!("bad {what}: {tok:?}")))
    }

    fn rest(&mut self) -> &'a str {
        self.skip_space_and_comments();
        &self.text[self.pos..]
    }
}
