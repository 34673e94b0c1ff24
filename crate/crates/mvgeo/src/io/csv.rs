//! CSV serialization of training loss curves.
//!
//! Fixed header `step,total,photometric,smoothness,geometry`; floats are
//! written with shortest round-trip formatting so read-back is lossless.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optimizer::LossTrace;

pub fn write_loss_csv(path: &Path, history: &[LossTrace]) -> Result<()> {
    let mut out = String::from("step,total,photometric,smoothness,geometry\n");
    for row in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.step, row.total, row.photometric, row.smoothness, row.geometry
        ));
    }
    fs::write(path, out).map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<LossTrace>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let Some((_, header)) = lines.next() else {
        return Err(Error::Parse { location: format!("{source}:1"), message: "empty file".into() });
    };
    if header.trim() != "step,total,photometric,smoothness,geometry" {
        return Err(Error::Parse {
            location: format!("{source}:1"),
            message: format!("unexpected header {header:?}"),
        });
    }

    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let location = || format!("{source}:{}", idx + 1);
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                location: location(),
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let step = fields[0]
            .parse()
            .map_err(|e| Error::Parse { location: location(), message: format!("bad step: {e}") })?;
        let mut nums = [0.0f64; 4];
        for (slot, raw) in nums.iter_mut().zip(&fields[1..]) {
            *slot = raw
                .parse()
                .map_err(|e| Error::Parse { location: location(), message: format!("bad number {raw:?}: {e}") })?;
        }
        rows.push(LossTrace {
            step,
            total: nums[0],
            photometric: nums[1],
            smoothness: nums[2],
            geometry: nums[3],
        });
    }
    Ok(rows)
}
