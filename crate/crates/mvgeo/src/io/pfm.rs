//! Grayscale PFM depth maps.
//!
//! Header `Pf`, dimensions, then a scale whose sign encodes endianness; we
//! always write `-1.0` (little endian) but accept big-endian files on read.
//! The raster is rows of f32, bottom row first. NaN marks an invalid pixel.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::DepthMap;

pub fn write_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    let (w, h) = (depth.width(), depth.height());
    let mut out = Vec::with_capacity(64 + w * h * 4);
    out.extend_from_slice(format!("Pf\n{w} {h}\n-1.0\n").as_bytes());
    for v in (0..h).rev() {
        for u in 0..w {
            let value: f32 = match depth.get(u, v) {
                Some(d) => d as f32,
                None => f32::NAN,
            };
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pfm(path: &Path) -> Result<DepthMap> {
    let bytes = fs::read(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let parse_err = |message: String| Error::Parse { location: source.clone(), message };

    // Header: three tokens separated by single whitespace characters.
    let mut pos = 0;
    let mut token = |bytes: &[u8]| -> Result<String> {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse {
                location: format!("{source}: byte {pos}"),
                message: "unexpected end of header".into(),
            });
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1; // consume the single separator
        Ok(tok)
    };
    let magic = token(&bytes)?;
    if magic != "Pf" {
        return Err(parse_err(format!("expected magic Pf (grayscale), got {magic:?}")));
    }
    let w: usize = token(&bytes)?
        .parse()
        .map_err(|e| parse_err(format!("bad width: {e}")))?;
    let h_tok = token(&bytes)?;
    let h: usize = h_tok.parse().map_err(|e| parse_err(format!("bad height: {e}")))?;
    let scale: f64 = token(&bytes)?
        .parse()
        .map_err(|e| parse_err(format!("bad scale: {e}")))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(parse_err(format!("scale {scale} encodes no endianness")));
    }
    let big_endian = scale > 0.0;
    if w == 0 || h == 0 {
        return Err(parse_err(format!("degenerate size {w}x{h}")));
    }
    let need = w * h * 4;
    let raster = &bytes[pos..];
    if raster.len() < need {
        return Err(parse_err(format!("raster holds {} bytes, expected {need}", raster.len())));
    }

    let mut values = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    for (row_from_bottom, chunk) in raster[..need].chunks_exact(w * 4).enumerate() {
        let v = h - 1 - row_from_bottom;
        for (u, px) in chunk.chunks_exact(4).enumerate() {
            let quad = [px[0], px[1], px[2], px[3]];
            let f = if big_endian { f32::from_be_bytes(quad) } else { f32::from_le_bytes(quad) };
            if f.is_nan() {
                continue;
            }
            if !f.is_finite() {
                return Err(parse_err(format!("non-finite depth {f} at ({u},{v})")));
            }
            values[v * w + u] = f as f64;
            valid[v * w + u] = true;
        }
    }
    DepthMap::new(w, h, values, valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn depths_and_invalid_pixels_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let mut values = vec![0.0; 6 * 4];
        let mut valid = vec![true; 6 * 4];
        for (i, v) in values.iter_mut().enumerate() {
            *v = 0.5 + i as f64 * 0.37;
        }
        valid[5] = false;
        valid[17] = false;
        let depth = DepthMap::new(6, 4, values.clone(), valid.clone()).unwrap();
        write_pfm(&path, &depth).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(back.width(), 6);
        assert_eq!(back.height(), 4);
        for v in 0..4 {
            for u in 0..6 {
                let i = v * 6 + u;
                assert_eq!(back.is_valid(u, v), valid[i]);
                if valid[i] {
                    // Storage is f32; the round trip is exact at f32 precision.
                    assert_eq!(back.value_unchecked(u, v), values[i] as f32 as f64);
                }
            }
        }
        // A second write reproduces the file byte for byte.
        let again = dir.path().join("d2.pfm");
        write_pfm(&again, &back).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn bottom_row_comes_first_in_the_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rows.pfm");
        // 1x2 map: top pixel 1.0, bottom pixel 2.0.
        let depth = DepthMap::new(1, 2, vec![1.0, 2.0], vec![true, true]).unwrap();
        write_pfm(&path, &depth).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let raster = &bytes[bytes.len() - 8..];
        let first = f32::from_le_bytes([raster[0], raster[1], raster[2], raster[3]]);
        let second = f32::from_le_bytes([raster[4], raster[5], raster[6], raster[7]]);
        assert_eq!(first, 2.0, "bottom row first");
        assert_eq!(second, 1.0);
    }

    #[test]
    fn big_endian_files_are_read_but_never_written() {
        let dir = tempdir().unwrap();
        let be = dir.path().join("be.pfm");
        // 1x1 map holding 1.5f32 in big-endian byte order.
        std::fs::write(&be, b"Pf\n1 1\n1.0\n\x3f\xc0\x00\x00").unwrap();
        let depth = read_pfm(&be).unwrap();
        assert_eq!(depth.value_unchecked(0, 0), 1.5);

        // Rewriting produces the canonical little-endian form.
        let out = dir.path().join("le.pfm");
        write_pfm(&out, &depth).unwrap();
        let bytes = std::fs::read(&out).unwrap();
        assert!(bytes.starts_with(b"Pf\n1 1\n-1.0\n"));
        assert_eq!(&bytes[bytes.len() - 4..], b"\x00\x00\xc0\x3f");
    }

    #[test]
    fn zero_scale_and_color_magic_are_rejected() {
        let dir = tempdir().unwrap();
        let zero = dir.path().join("zero.pfm");
        std::fs::write(&zero, b"Pf\n1 1\n0.0\n\x3f\x80\x00\x00").unwrap();
        assert!(matches!(read_pfm(&zero), Err(Error::Parse { .. })));

        let color = dir.path().join("color.pfm");
        std::fs::write(&color, b"PF\n1 1\n-1.0\n\x00\x00\x80\x3f\x00\x00\x80\x3f\x00\x00\x80\x3f").unwrap();
        assert!(matches!(read_pfm(&color), Err(Error::Parse { .. })));
    }
}
