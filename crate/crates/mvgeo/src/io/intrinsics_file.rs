//! Pinhole intrinsics as a single whitespace-separated line:
//! `width height fx fy cx cy`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Intrinsics;

pub fn write_intrinsics(path: &Path, k: &Intrinsics) -> Result<()> {
    fs::write(
        path,
        format!("{} {} {} {} {} {}\n", k.width, k.height, k.fx, k.fy, k.cx, k.cy),
    )?;
    Ok(())
}

pub fn read_intrinsics(path: &Path) -> Result<Intrinsics> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| Error::Parse { location: source.clone(), message: "no intrinsics line found".into() })?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(Error::Parse {
            location: source.clone(),
            message: format!("expected `width height fx fy cx cy`, got {} fields", fields.len()),
        });
    }
    let width: usize = fields[0]
        .parse()
        .map_err(|e| Error::Parse { location: source.clone(), message: format!("bad width: {e}") })?;
    let height: usize = fields[1]
        .parse()
        .map_err(|e| Error::Parse { location: source.clone(), message: format!("bad height: {e}") })?;
    let mut f = [0.0f64; 4];
    for (i, name) in ["fx", "fy", "cx", "cy"].iter().enumerate() {
        f[i] = fields[i + 2]
            .parse()
            .map_err(|e| Error::Parse { location: source.clone(), message: format!("bad {name}: {e}") })?;
    }
    Intrinsics::new(f[0], f[1], f[2], f[3], width, height)
}
