//! Binary PPM (P6, maxval 255) images.
//!
//! Values are mapped linearly between the unit interval and 0..=255.
//! Single-channel images are written by replicating the channel; reading
//! always yields a 3-channel image.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::ImageGrid;

pub fn write_ppm(path: &Path, image: &ImageGrid) -> Result<()> {
    let (w, h, c) = (image.width(), image.height(), image.channels());
    let mut out = Vec::with_capacity(32 + w * h * 3);
    out.extend_from_slice(format!("P6\n{w} {h}\n255\n").as_bytes());
    for v in 0..h {
        for u in 0..w {
            for ch in 0..3 {
                let value = image.get(u, v, if c == 1 { 0 } else { ch });
                out.push((value * 255.0).round() as u8);
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<ImageGrid> {
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let mut cursor = Cursor { bytes: &bytes, pos: 0, source: &source };

    let magic = cursor.token()?;
    if magic != b"P6" {
        return Err(cursor.error(format!(
            "expected magic P6, got {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let w = cursor.unsigned()?;
    let h = cursor.unsigned()?;
    let maxval = cursor.unsigned()?;
    if maxval != 255 {
        return Err(cursor.error(format!("only maxval 255 is supported, got {maxval}")));
    }
    if w == 0 || h == 0 {
        return Err(cursor.error(format!("degenerate image size {w}x{h}")));
    }
    cursor.single_whitespace()?;
    let need = w * h * 3;
    let raster = cursor.rest();
    if raster.len() < need {
        return Err(Error::Parse {
            location: format!("{source}: raster"),
            message: format!("raster holds {} bytes, expected {need}", raster.len()),
        });
    }
    let data: Vec<f64> = raster[..need].iter().map(|&b| b as f64 / 255.0).collect();
    ImageGrid::new(w, h, 3, data)
}

/// Byte cursor over a PPM header: whitespace- and comment-tolerant tokens.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a str,
}

impl<'a> Cursor<'a> {
    fn error(&self, message: String) -> Error {
        Error::Parse { location: format!("{}: byte {}", self.source, self.pos), message }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<Vec<u8>> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("unexpected end of header".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn unsigned(&mut self) -> Result<usize> {
        let tok = self.token()?;
        let text = std::str::from_utf8(&tok).map_err(|_| self.error("non-ASCII header token".into()))?;
        text.parse::<usize>().map_err(|_| self.error(format!("expected an unsigned integer, got {text:?}")))
    }

    /// Exactly one whitespace byte separates the header from the raster.
    fn single_whitespace(&mut self) -> Result<()> {
        if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("expected a whitespace byte before the raster".into()))
        }
    }

    fn rest(&self) -> &'a [u8] {
        &self.bytes[self.pos..]
    }
}
