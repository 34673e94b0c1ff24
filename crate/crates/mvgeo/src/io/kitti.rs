//! Trajectory files: one pose per line as the 12 row-major entries of the
//! 3x4 matrix `[R | t]`.
//!
//! Values are written with the shortest decimal representation that parses
//! back to the same float, so write -> read -> write is byte-stable. Reading
//! tolerates slightly non-orthonormal rotations (they are projected back onto
//! the rotation group and reported as warnings); badly broken lines are
//! errors.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{nearest_rotation, PoseSE3};

pub fn write_trajectory(path: &Path, poses: &[PoseSE3]) -> Result<()> {
    let mut out = String::new();
    for pose in poses {
        let m = pose.to_matrix_row_major();
        for (i, value) in m.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            // `{}` prints the shortest string that round-trips the f64.
            out.push_str(&format!("{value}"));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Reads a trajectory; returns the poses together with human-readable
/// warnings for every line whose rotation needed repair.
pub fn read_trajectory(path: &Path) -> Result<(Vec<PoseSE3>, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display().to_string();
    let mut poses = Vec::new();
    let mut warnings = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 12 {
            return Err(Error::Parse {
                location: format!("{source}:{line}"),
                message: format!("expected 12 values per pose, got {}", fields.len()),
            });
        }
        let mut m = [0.0f64; 12];
        for (i, f) in fields.iter().enumerate() {
            m[i] = f.parse().map_err(|e| Error::Parse {
                location: format!("{source}:{line}"),
                message: format!("bad number {f:?}: {e}"),
            })?;
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                location: format!("{source}:{line}"),
                message: "non-finite matrix entry".into(),
            });
        }
        let rotation = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        let translation = Vector3::new(m[3], m[7], m[11]);
        let pose = match PoseSE3::new(rotation, translation) {
            Ok(p) => p,
            Err(_) => {
                let repaired = nearest_rotation(&rotation);
                let drift = (repaired - rotation).norm();
                if drift > 1e-3 {
                    return Err(Error::Parse {
                        location: format!("{source}:{line}"),
                        message: format!("rotation block is too far from orthonormal (drift {drift:.2e})"),
                    });
                }
                warnings.push(format!(
                    "{source}:{line}: rotation re-orthonormalized (drift {drift:.2e})"
                ));
                PoseSE3::new(repaired, translation).map_err(|e| Error::Parse {
                    location: format!("{source}:{line}"),
                    message: format!("repaired rotation still rejected: {e}"),
                })?
            }
        };
        poses.push(pose);
    }
    Ok((poses, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Twist;
    use tempfile::tempdir;

    fn example_poses() -> Vec<PoseSE3> {
        vec![
            PoseSE3::identity(),
            PoseSE3::exp(&Twist::from_column_slice(&[0.1, -0.2, 0.9, 0.05, 0.02, -0.01])),
            PoseSE3::exp(&Twist::from_column_slice(&[-1.3, 0.4, 2.2, -0.3, 0.21, 0.17])),
        ]
    }

    #[test]
    fn write_read_write_is_byte_identical_and_lossless() {
        let dir = tempdir().unwrap();
        let a = dir.path().join("a.txt");
        let b = dir.path().join("b.txt");
        let poses = example_poses();
        write_trajectory(&a, &poses).unwrap();
        let (back, warnings) = read_trajectory(&a).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(back.len(), poses.len());
        for (p, q) in poses.iter().zip(&back) {
            assert_eq!(p.to_matrix_row_major(), q.to_matrix_row_major());
        }
        write_trajectory(&b, &back).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn slightly_skewed_rotation_is_repaired_with_a_warning() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.txt");
        // Rotation entries perturbed by ~1e-5: valid data, imperfect numerics.
        std::fs::write(
            &path,
            "1.00001 0 0 0.5 0 0.99999 0.00002 -0.25 0 0 1 0.125\n",
        )
        .unwrap();
        let (poses, warnings) = read_trajectory(&path).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(warnings.len(), 1, "{warnings:?}");
        assert!(warnings[0].contains("re-orthonormalized"));
        assert!(poses[0].orthonormality_deviation() < 1e-12);
        assert_eq!(poses[0].translation(), &Vector3::new(0.5, -0.25, 0.125));
    }

    #[test]
    fn wrong_field_count_and_garbage_are_parse_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "1 0 0 0 0 1 0 0 0 0 1\n").unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "1 0 0 0 0 1 0 0 0 0 1 abc\n").unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Parse { .. })));
        // A matrix nowhere near a rotation must not be silently repaired.
        std::fs::write(&path, "2 0 0 0 0 2 0 0 0 0 2 0\n").unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn blank_lines_are_ignored() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("blank.txt");
        std::fs::write(&path, "\n1 0 0 0 0 1 0 0 0 0 1 0\n\n").unwrap();
        let (poses, _) = read_trajectory(&path).unwrap();
        assert_eq!(poses.len(), 1);
    }
}
