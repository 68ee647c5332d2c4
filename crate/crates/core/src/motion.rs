//! Dense optical flow (Horn-Schunck) and the flow center of mass used as the
//! per-frame reference point of the shape context.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::video::VideoVolume;

pub const FLOW_MAGIC: &[u8; 4] = b"SVXF";

/// Regularization weight of the smoothness term.
pub const HS_ALPHA: f32 = 15.0;
pub const HS_ITERATIONS: usize = 100;
/// Total flow magnitude below which a frame counts as motionless.
pub const STILL_EPSILON: f64 = 1e-6;

/// Per-pixel `(u, v)` displacement for each consecutive frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    /// `frame_count - 1` fields, each `width * height` row-major vectors.
    pub fields: Vec<Vec<[f32; 2]>>,
}

impl FlowField {
    pub fn pair_count(&self) -> usize {
        self.fields.len()
    }

    /// Number of video frames the field was computed from.
    pub fn frame_count(&self) -> usize {
        self.fields.len() + 1
    }

    #[inline]
    pub fn at(&self, pair: usize, x: usize, y: usize) -> [f32; 2] {
        self.fields[pair][y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub frame_index: usize,
    pub x: f64,
    pub y: f64,
}

pub fn grayscale(v: &VideoVolume, t: usize) -> Vec<f32> {
    v.frame_pixels(t)
        .iter()
        .map(|c| 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2])
        .collect()
}

pub fn compute_flow(v: &VideoVolume) -> Result<FlowField> {
    compute_flow_with(v, HS_ALPHA, HS_ITERATIONS)
}

pub fn compute_flow_with(v: &VideoVolume, alpha: f32, iterations: usize) -> Result<FlowField> {
    if v.frame_count() < 2 {
        return Err(Error::Param(
            "optical flow needs at least two frames".into(),
        ));
    }
    let gray: Vec<Vec<f32>> = (0..v.frame_count()).map(|t| grayscale(v, t)).collect();
    let fields = (0..v.frame_count() - 1)
        .into_par_iter()
        .map(|t| horn_schunck(&gray[t], &gray[t + 1], v.width(), v.height(), alpha, iterations))
        .collect();
    Ok(FlowField {
        width: v.width(),
        height: v.height(),
        fields,
    })
}

/// Horn-Schunck with the original first-difference estimates averaged over
/// the 2x2x2 cube and the 3x3 weighted neighborhood average.
pub fn horn_schunck(
    f0: &[f32],
    f1: &[f32],
    w: usize,
    h: usize,
    alpha: f32,
    iterations: usize,
) -> Vec<[f32; 2]> {
    let at = |img: &[f32], x: usize, y: usize| img[y.min(h - 1) * w + x.min(w - 1)];
    let n = w * h;
    let (mut ex, mut ey, mut et) = (vec![0.0f32; n], vec![0.0f32; n], vec![0.0f32; n]);
    for y in 0..h {
        for x in 0..w {
            let (x1, y1) = (x + 1, y + 1);
            let i = y * w + x;
            ex[i] = 0.25
                * (at(f0, x1, y) - at(f0, x, y) + at(f0, x1, y1) - at(f0, x, y1)
                    + at(f1, x1, y) - at(f1, x, y) + at(f1, x1, y1) - at(f1, x, y1));
            ey[i] = 0.25
                * (at(f0, x, y1) - at(f0, x, y) + at(f0, x1, y1) - at(f0, x1, y)
                    + at(f1, x, y1) - at(f1, x, y) + at(f1, x1, y1) - at(f1, x1, y));
            et[i] = 0.25
                * (at(f1, x, y) - at(f0, x, y) + at(f1, x1, y) - at(f0, x1, y)
                    + at(f1, x, y1) - at(f0, x, y1) + at(f1, x1, y1) - at(f0, x1, y1));
        }
    }

    let a2 = alpha * alpha;
    let mut u = vec![0.0f32; n];
    let mut v = vec![0.0f32; n];
    let (mut nu, mut nv) = (vec![0.0f32; n], vec![0.0f32; n]);
    for _ in 0..iterations {
        for y in 0..h {
            for x in 0..w {
                let (ubar, vbar) = local_average(&u, &v, x, y, w, h);
                let i = y * w + x;
                let t = (ex[i] * ubar + ey[i] * vbar + et[i]) / (a2 + ex[i] * ex[i] + ey[i] * ey[i]);
                nu[i] = ubar - ex[i] * t;
                nv[i] = vbar - ey[i] * t;
            }
        }
        std::mem::swap(&mut u, &mut nu);
        std::mem::swap(&mut v, &mut nv);
    }
    u.into_iter().zip(v).map(|(a, b)| [a, b]).collect()
}

#[inline]
fn local_average(u: &[f32], v: &[f32], x: usize, y: usize, w: usize, h: usize) -> (f32, f32) {
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let side = [(xm, y), (xp, y), (x, ym), (x, yp)];
    let corner = [(xm, ym), (xp, ym), (xm, yp), (xp, yp)];
    let (mut su, mut sv) = (0.0, 0.0);
    for (cx, cy) in side {
        su += u[cy * w + cx] / 6.0;
        sv += v[cy * w + cx] / 6.0;
    }
    for (cx, cy) in corner {
        su += u[cy * w + cx] / 12.0;
        sv += v[cy * w + cx] / 12.0;
    }
    (su, sv)
}

/// Magnitude-weighted centroid of the flow for `frame_index`. The last frame
/// has no forward flow and reuses the final frame pair; motionless frames
/// fall back to the frame center.
pub fn flow_center_of_mass(f: &FlowField, frame_index: usize) -> Result<ReferencePoint> {
    if frame_index >= f.frame_count() {
        return Err(Error::Param(format!(
            "frame {frame_index} out of range for {} frames",
            f.frame_count()
        )));
    }
    let pair = frame_index.min(f.pair_count() - 1);
    let (mut mx, mut my, mut total) = (0.0f64, 0.0f64, 0.0f64);
    for y in 0..f.height {
        for x in 0..f.width {
            let [u, v] = f.at(pair, x, y);
            let m = ((u as f64).powi(2) + (v as f64).powi(2)).sqrt();
            mx += m * x as f64;
            my += m * y as f64;
            total += m;
        }
    }
    let (x, y) = if total < STILL_EPSILON {
        ((f.width - 1) as f64 / 2.0, (f.height - 1) as f64 / 2.0)
    } else {
        (mx / total, my / total)
    };
    Ok(ReferencePoint { frame_index, x, y })
}

/// One reference point per video frame.
pub fn reference_points(f: &FlowField) -> Vec<ReferencePoint> {
    (0..f.frame_count())
        .map(|t| flow_center_of_mass(f, t).expect("frame index in range"))
        .collect()
}

/// `SVXF`: magic, width, height and pair count as little-endian `u32`, then
/// per pixel a little-endian `f32` pair `(u, v)`, pair by pair.
pub fn write_flow(f: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = Vec::with_capacity(16 + 8 * f.width * f.height * f.pair_count());
    buf.extend_from_slice(FLOW_MAGIC);
    for d in [f.width, f.height, f.pair_count()] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for field in &f.fields {
        for [u, v] in field {
            buf.extend_from_slice(&u.to_le_bytes());
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != FLOW_MAGIC {
        return Err(Error::Format(format!("{} is not an SVXF flow file", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (width, height, pairs) = (word(0), word(1), word(2));
    let plane = width * height;
    if bytes.len() != 16 + 8 * plane * pairs || pairs == 0 {
        return Err(Error::Format(format!(
            "flow file {} has wrong length for {width}x{height}x{pairs}",
            path.display()
        )));
    }
    let floats: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let fields = floats
        .chunks_exact(2 * plane)
        .map(|field| field.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
        .collect();
    Ok(FlowField {
        width,
        height,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(w: usize, h: usize, f: impl Fn(usize, usize) -> [f32; 2]) -> FlowField {
        let mut v = Vec::new();
        for y in 0..h {
            for x in 0..w {
                v.push(f(x, y));
            }
        }
        FlowField {
            width: w,
            height: h,
            fields: vec![v],
        }
    }

    #[test]
    fn identical_frames_have_zero_flow() {
        let mut v = VideoVolume::new(12, 10, 2).unwrap();
        for t in 0..2 {
            for y in 0..10 {
                for x in 0..12 {
                    v.set(t, y, x, [(x * 20) as f32, (y * 10) as f32, 0.0]);
                }
            }
        }
        let f = compute_flow(&v).unwrap();
        assert!(f.fields[0].iter().all(|[u, v]| (u * u + v * v).sqrt() < 1e-6));
    }

    #[test]
    fn single_frame_is_an_error() {
        let v = VideoVolume::new(4, 4, 1).unwrap();
        assert!(compute_flow(&v).is_err());
    }

    /// Smooth blob `exp(-r^2 / (2 s^2))` on a gray ramp, centered at `(cx, cy)`.
    fn blob_frame(w: usize, h: usize, cx: f32, cy: f32, v: &mut VideoVolume, t: usize) {
        for y in 0..h {
            for x in 0..w {
                let r2 = (x as f32 - cx).powi(2) + (y as f32 - cy).powi(2);
                let g = 40.0 + 180.0 * (-r2 / (2.0 * 4.0f32.powi(2))).exp();
                v.set(t, y, x, [g; 3]);
            }
        }
    }

    #[test]
    fn translated_blob_flow_is_recovered() {
        let (w, h) = (64, 48);
        let mut v = VideoVolume::new(w, h, 2).unwrap();
        blob_frame(w, h, 30.0, 24.0, &mut v, 0);
        blob_frame(w, h, 32.0, 24.0, &mut v, 1);
        let f = compute_flow(&v).unwrap();
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0.0);
        for y in 20..29 {
            for x in 27..36 {
                let [u, vv] = f.at(0, x, y);
                su += u;
                sv += vv;
                n += 1.0;
            }
        }
        let (mu, mv) = (su / n, sv / n);
        assert!((mu - 2.0).abs() < 0.5 && mv.abs() < 0.5, "mean flow ({mu}, {mv})");
        let p = flow_center_of_mass(&f, 0).unwrap();
        assert!((p.x - 31.0).abs() < 2.0 && (p.y - 24.0).abs() < 2.0, "{p:?}");
        assert_eq!(reference_points(&f).len(), 2);
    }

    #[test]
    fn center_of_mass_is_translation_equivariant() {
        let (w, h) = (64, 48);
        let com = |cx: f32, cy: f32| {
            let mut v = VideoVolume::new(w, h, 2).unwrap();
            blob_frame(w, h, cx, cy, &mut v, 0);
            blob_frame(w, h, cx + 1.0, cy + 1.0, &mut v, 1);
            flow_center_of_mass(&compute_flow(&v).unwrap(), 0).unwrap()
        };
        let a = com(20.0, 18.0);
        let b = com(32.0, 26.0);
        assert!((b.x - a.x - 12.0).abs() < 1.0 && (b.y - a.y - 8.0).abs() < 1.0, "{a:?} {b:?}");
    }

    #[test]
    fn zero_flow_falls_back_to_center() {
        let f = field(9, 7, |_, _| [0.0, 0.0]);
        let p = flow_center_of_mass(&f, 0).unwrap();
        assert_eq!((p.x, p.y), (4.0, 3.0));
        assert_eq!(flow_center_of_mass(&f, 1).unwrap().x, 4.0);
        assert!(flow_center_of_mass(&f, 2).is_err());
    }

    #[test]
    fn two_equal_blobs_give_midpoint() {
        let f = field(40, 40, |x, y| {
            let near = |cx: usize, cy: usize| x.abs_diff(cx) <= 2 && y.abs_diff(cy) <= 2;
            if near(10, 10) || near(30, 30) {
                [1.0, -0.5]
            } else {
                [0.0, 0.0]
            }
        });
        let p = flow_center_of_mass(&f, 0).unwrap();
        assert!((p.x - 20.0).abs() < 1.0 && (p.y - 20.0).abs() < 1.0, "{p:?}");
    }

    #[test]
    fn flow_file_round_trip() {
        let f = field(3, 2, |x, y| [x as f32 * 0.5, -(y as f32)]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.svxf");
        write_flow(&f, &p).unwrap();
        assert_eq!(read_flow(&p).unwrap(), f);
        std::fs::write(&p, b"SVXF\x01\0\0\0").unwrap();
        assert!(read_flow(&p).is_err());
    }
}
