//! `SVXL` label maps: magic, width/height/frame count as little-endian
//! `u32`, then one little-endian `u32` label per voxel in `(t, y, x)` order.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Hierarchy, SupervoxelLabeling};
use crate::error::{Error, Result};

pub const LABEL_MAGIC: &[u8; 4] = b"SVXL";

pub fn write_label_map(s: &SupervoxelLabeling, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = Vec::with_capacity(16 + 4 * s.labels().len());
    body.extend_from_slice(LABEL_MAGIC);
    for d in [s.width(), s.height(), s.frame_count()] {
        body.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in s.labels() {
        body.extend_from_slice(&l.to_le_bytes());
    }
    w.write_all(&body)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a label map; `level` is recorded on the returned labeling.
pub fn read_label_map(path: impl AsRef<Path>, level: usize) -> Result<SupervoxelLabeling> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != LABEL_MAGIC {
        return Err(Error::Format(format!(
            "{} is not an SVXL label map",
            path.display()
        )));
    }
    let dim = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, t) = (dim(0), dim(1), dim(2));
    let body = &bytes[16..];
    if body.len() != 4 * w * h * t {
        return Err(Error::Format(format!(
            "label map {} holds {} bytes, expected {} for {w}x{h}x{t}",
            path.display(),
            body.len(),
            4 * w * h * t
        )));
    }
    let labels = body
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    SupervoxelLabeling::from_labels(level, w, h, t, labels)
}

/// Writes `level_01.svxl` ... into `dir`, one file per level.
pub fn write_hierarchy(h: &Hierarchy, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for level in h.levels() {
        write_label_map(&level, dir.join(format!("level_{:02}.svxl", level.level())))?;
    }
    Ok(())
}
