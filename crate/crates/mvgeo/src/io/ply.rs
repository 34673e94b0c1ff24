//! ASCII PLY point-cloud export.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::geometry::PointCloud;

/// Writes the cloud as `ply / format ascii 1.0`; colors (if present) are
/// emitted as 8-bit `red green blue` properties.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", cloud.points.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if cloud.colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        out.push_str(&format!("{} {} {}", p[0] as f32, p[1] as f32, p[2] as f32));
        if let Some(colors) = &cloud.colors {
            let c = colors[i];
            out.push_str(&format!(
                " {} {} {}",
                (c[0] * 255.0).round() as u8,
                (c[1] * 255.0).round() as u8,
                (c[2] * 255.0).round() as u8
            ));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use tempfile::tempdir;

    #[test]
    fn header_and_rows_have_the_expected_shape() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        let cloud = PointCloud {
            points: vec![Vector3::new(1.0, 2.0, 3.0), Vector3::new(-0.5, 0.25, 4.0)],
            colors: Some(vec![[1.0, 0.0, 0.5], [0.0, 1.0, 0.0]]),
        };
        write_ply(&path, &cloud).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ply");
        assert_eq!(lines[1], "format ascii 1.0");
        assert_eq!(lines[2], "element vertex 2");
        assert!(lines.contains(&"property uchar red"));
        assert_eq!(lines[lines.len() - 2], "1 2 3 255 0 128");
        assert_eq!(lines[lines.len() - 1], "-0.5 0.25 4 0 255 0");
    }

    #[test]
    fn colorless_clouds_omit_the_color_properties() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        let cloud = PointCloud { points: vec![Vector3::new(0.0, 0.0, 1.0)], colors: None };
        write_ply(&path, &cloud).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains("uchar"));
        assert!(text.ends_with("0 0 1\n"));
    }
}
