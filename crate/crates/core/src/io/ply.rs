//! ASCII PLY reader/writer for plain `x y z` vertex clouds.

use super::IoError;
use crate::cloud::PointCloud;
use crate::geom::Frame;
use nalgebra::Vector3;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    writeln!(w, "end_header")?;
    for p in cloud.iter() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an ASCII PLY vertex list. Only the leading three float properties per
/// vertex are used; the cloud is tagged as world-frame.
pub fn read_ply(path: &Path) -> Result<PointCloud, IoError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();

    let magic = lines
        .next()
        .transpose()?
        .ok_or_else(|| IoError::format(path, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(IoError::format(path, "missing `ply` magic"));
    }

    let mut vertex_count: Option<usize> = None;
    let mut in_vertex_element = false;
    let mut vertex_props = 0usize;
    loop {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| IoError::format(path, "header ended before end_header"))?;
        let line = line.trim().to_string();
        if line == "end_header" {
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["format", kind, _] => {
                if *kind != "ascii" {
                    return Err(IoError::format(path, format!("unsupported format `{kind}`")));
                }
            }
            ["element", "vertex", n] => {
                vertex_count = Some(n.parse().map_err(|_| {
                    IoError::format(path, format!("bad vertex count `{n}`"))
                })?);
                in_vertex_element = true;
            }
            ["element", ..] => in_vertex_element = false,
            ["property", ..] if in_vertex_element => vertex_props += 1,
            _ => {}
        }
    }

    let count = vertex_count.ok_or_else(|| IoError::format(path, "no vertex element"))?;
    if vertex_props < 3 {
        return Err(IoError::format(path, "vertex element has fewer than 3 properties"));
    }

    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let line = lines
            .next()
            .transpose()?
            .ok_or_else(|| IoError::format(path, format!("expected {count} vertices, got {i}")))?;
        let mut it = line.split_whitespace();
        let mut coord = [0.0f64; 3];
        for c in coord.iter_mut() {
            let tok = it
                .next()
                .ok_or_else(|| IoError::format(path, format!("vertex {i}: short line")))?;
            *c = tok
                .parse()
                .map_err(|_| IoError::format(path, format!("vertex {i}: bad float `{tok}`")))?;
        }
        points.push(Vector3::new(coord[0], coord[1], coord[2]));
    }
    Ok(PointCloud::new(points, Frame::World))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = PointCloud::new(
            vec![
                Vector3::new(0.1, -0.25, 1.0 / 3.0),
                Vector3::new(1e-12, 2.5e8, -0.0),
            ],
            Frame::World,
        );
        write_ply(&path, &cloud).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.len(), cloud.len());
        for (a, b) in cloud.iter().zip(back.iter()) {
            for i in 0..3 {
                assert_eq!(a[i].to_bits(), b[i].to_bits());
            }
        }
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nend_header\n0 0 0\n",
        )
        .unwrap();
        assert!(read_ply(&path).is_err());
    }
}
