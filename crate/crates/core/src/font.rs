//! Letter glyphs for the alphabet test.
//!
//! The bundled set is 26 upper-case letters at 64×64, drawn from the
//! public-domain 8×8 IBM PC BIOS glyph shapes (as in `font8x8_basic`), each
//! cropped to its ink and centred in a common 8×8 box before 8× upscaling.
//! The same glyphs ship as plain PBM files under `assets/font/`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};

const BUNDLED: [(char, &str); 26] = [
    ('A', include_str!("../assets/font/A.pbm")),
    ('B', include_str!("../assets/font/B.pbm")),
    ('C', include_str!("../assets/font/C.pbm")),
    ('D', include_str!("../assets/font/D.pbm")),
    ('E', include_str!("../assets/font/E.pbm")),
    ('F', include_str!("../assets/font/F.pbm")),
    ('G', include_str!("../assets/font/G.pbm")),
    ('H', include_str!("../assets/font/H.pbm")),
    ('I', include_str!("../assets/font/I.pbm")),
    ('J', include_str!("../assets/font/J.pbm")),
    ('K', include_str!("../assets/font/K.pbm")),
    ('L', include_str!("../assets/font/L.pbm")),
    ('M', include_str!("../assets/font/M.pbm")),
    ('N', include_str!("../assets/font/N.pbm")),
    ('O', include_str!("../assets/font/O.pbm")),
    ('P', include_str!("../assets/font/P.pbm")),
    ('Q', include_str!("../assets/font/Q.pbm")),
    ('R', include_str!("../assets/font/R.pbm")),
    ('S', include_str!("../assets/font/S.pbm")),
    ('T', include_str!("../assets/font/T.pbm")),
    ('U', include_str!("../assets/font/U.pbm")),
    ('V', include_str!("../assets/font/V.pbm")),
    ('W', include_str!("../assets/font/W.pbm")),
    ('X', include_str!("../assets/font/X.pbm")),
    ('Y', include_str!("../assets/font/Y.pbm")),
    ('Z', include_str!("../assets/font/Z.pbm")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Font {
    glyphs: BTreeMap<char, Bitmap>,
}

impl Font {
    pub fn bundled() -> Self {
        let glyphs = BUNDLED
            .iter()
            .map(|&(c, text)| (c, Bitmap::parse_pbm(text).expect("bundled glyph parses")))
            .collect();
        Self { glyphs }
    }

    /// Loads every `<LETTER>.pbm` (A–Z) found in `dir`. All glyphs must share
    /// one bounding box.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut glyphs = BTreeMap::new();
        for c in 'A'..='Z' {
            let path = dir.join(format!("{c}.pbm"));
            if path.exists() {
                glyphs.insert(c, Bitmap::load(&path)?);
            }
        }
        Self::from_glyphs(glyphs)
    }

    pub fn from_glyphs(glyphs: BTreeMap<char, Bitmap>) -> Result<Self> {
        let mut shapes = glyphs.values().map(|g| (g.width(), g.height()));
        let first = shapes
            .next()
            .ok_or_else(|| Error::Bitmap("font has no glyphs".into()))?;
        if let Some(other) = shapes.find(|&s| s != first) {
            return Err(Error::DimensionMismatch(first.0, first.1, other.0, other.1));
        }
        Ok(Self { glyphs })
    }

    pub fn letters(&self) -> impl Iterator<Item = char> + '_ {
        self.glyphs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    pub fn glyph(&self, letter: char) -> Result<&Bitmap> {
        self.glyphs
            .get(&letter.to_ascii_uppercase())
            .ok_or(Error::UnknownLetter(letter))
    }

    /// Glyph upscaled by the largest integer factor that fits and centred in
    /// a `width × height` grid.
    pub fn glyph_in_grid(&self, letter: char, width: usize, height: usize) -> Result<Bitmap> {
        let g = self.glyph(letter)?;
        let factor = (width / g.width()).min(height / g.height());
        if factor == 0 {
            return Err(Error::Bitmap(format!(
                "{}x{} glyph does not fit a {width}x{height} grid",
                g.width(),
                g.height()
            )));
        }
        g.scaled(factor)?.centered_in(width, height)
    }
}
