//! Video volumes and the simple frame formats used to move them around.
//!
//! Two on-disk layouts are supported:
//!
//! * a directory of binary PPM (P6) frames named `frame_00000.ppm`,
//!   `frame_00001.ppm`, ...
//! * a single raw volume file: magic `SVXV`, then width, height and
//!   frame count as little-endian `u32`, then the frames back to back, each
//!   frame row-major with interleaved RGB bytes.
//!
//! Voxels are stored as `f32` RGB triples so that smoothed volumes share the
//! same type as freshly ingested 8-bit ones.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ImageEncoder, RgbImage};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"SVXV";

pub type Rgb = [f32; 3];

/// A single frame of RGB pixels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Frame {
    pub fn new(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Frame {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = c;
    }

    fn to_rgb8(&self) -> RgbImage {
        let mut img = RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in img.pixels_mut().zip(&self.pixels) {
            dst.0 = quantize(*src);
        }
        img
    }

    fn from_rgb8(img: &RgbImage) -> Self {
        Frame {
            width: img.width() as usize,
            height: img.height() as usize,
            pixels: img
                .pixels()
                .map(|p| [p.0[0] as f32, p.0[1] as f32, p.0[2] as f32])
                .collect(),
        }
    }
}

#[inline]
fn quantize(c: Rgb) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

/// Dense `frame_count x height x width` lattice of RGB voxels.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVolume {
    width: usize,
    height: usize,
    frame_count: usize,
    voxels: Vec<Rgb>,
}

impl VideoVolume {
    pub fn new(width: usize, height: usize, frame_count: usize) -> Result<Self> {
        Self::filled(width, height, frame_count, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, frame_count: usize, color: Rgb) -> Result<Self> {
        check_dims(width, height, frame_count)?;
        Ok(VideoVolume {
            width,
            height,
            frame_count,
            voxels: vec![color; width * height * frame_count],
        })
    }

    pub fn from_voxels(
        width: usize,
        height: usize,
        frame_count: usize,
        voxels: Vec<Rgb>,
    ) -> Result<Self> {
        check_dims(width, height, frame_count)?;
        if voxels.len() != width * height * frame_count {
            return Err(Error::Param(format!(
                "expected {} voxels for {}x{}x{}, got {}",
                width * height * frame_count,
                width,
                height,
                frame_count,
                voxels.len()
            )));
        }
        Ok(VideoVolume {
            width,
            height,
            frame_count,
            voxels,
        })
    }

    /// Stacks frames into a volume. All frames must share dimensions.
    pub fn from_frames(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Ingest("no frames".into()))?;
        let (width, height) = (first.width, first.height);
        let frame_count = frames.len();
        let mut voxels = Vec::with_capacity(width * height * frame_count);
        for (t, f) in frames.into_iter().enumerate() {
            if f.width != width || f.height != height {
                return Err(Error::Ingest(format!(
                    "frame {t} is {}x{}, expected {width}x{height}",
                    f.width, f.height
                )));
            }
            voxels.extend(f.pixels);
        }
        Self::from_voxels(width, height, frame_count, voxels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn voxels(&self) -> &[Rgb] {
        &self.voxels
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> Rgb {
        self.voxels[self.index(t, y, x)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, c: Rgb) {
        let i = self.index(t, y, x);
        self.voxels[i] = c;
    }

    pub fn frame_pixels(&self, t: usize) -> &[Rgb] {
        let n = self.frame_len();
        &self.voxels[t * n..(t + 1) * n]
    }

    pub fn frame(&self, t: usize) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            pixels: self.frame_pixels(t).to_vec(),
        }
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.frame_count).map(move |t| self.frame(t))
    }

    /// Frames `start..end` as a new volume.
    pub fn slice_frames(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.frame_count {
            return Err(Error::Param(format!(
                "bad frame range {start}..{end} for {} frames",
                self.frame_count
            )));
        }
        let n = self.frame_len();
        Self::from_voxels(
            self.width,
            self.height,
            end - start,
            self.voxels[start * n..end * n].to_vec(),
        )
    }

    fn map_frames<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&Frame) -> Frame + Sync,
    {
        let frames: Vec<Frame> = (0..self.frame_count)
            .into_par_iter()
            .map(|t| f(&self.frame(t)))
            .collect();
        Self::from_frames(frames)
    }
}

fn check_dims(width: usize, height: usize, frame_count: usize) -> Result<()> {
    if width == 0 || height == 0 || frame_count == 0 {
        return Err(Error::Param(format!(
            "volume dimensions must be positive, got {width}x{height}x{frame_count}"
        )));
    }
    Ok(())
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.ppm")
}

fn parse_frame_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".ppm")?;
    if digits.len() < 5 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Loads a volume from either a directory of `frame_%05d.ppm` files or a raw
/// `SVXV` file.
pub fn load_frames(source: impl AsRef<Path>) -> Result<VideoVolume> {
    let source = source.as_ref();
    if source.is_dir() {
        load_ppm_dir(source)
    } else {
        read_raw(source)
    }
}

fn load_ppm_dir(dir: &Path) -> Result<VideoVolume> {
    let mut indexed: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        if let Some(i) = name.to_str().and_then(parse_frame_index) {
            indexed.push((i, entry.path()));
        }
    }
    if indexed.is_empty() {
        return Err(Error::Ingest(format!(
            "no frame_%05d.ppm files in {}",
            dir.display()
        )));
    }
    indexed.sort();
    for (expected, (found, _)) in indexed.iter().enumerate() {
        if *found != expected {
            return Err(Error::Ingest(format!("missing frame {expected}")));
        }
    }
    let frames = indexed
        .iter()
        .map(|(_, path)| read_ppm(path))
        .collect::<Result<Vec<_>>>()?;
    let (w, h) = (frames[0].width, frames[0].height);
    if let Some((i, f)) = frames
        .iter()
        .enumerate()
        .find(|(_, f)| f.width != w || f.height != h)
    {
        return Err(Error::Ingest(format!(
            "frame {i} has dimensions {}x{}, expected {w}x{h}",
            f.width, f.height
        )));
    }
    VideoVolume::from_frames(frames)
}

pub fn read_ppm(path: &Path) -> Result<Frame> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()?;
    Ok(Frame::from_rgb8(&img.to_rgb8()))
}

pub fn write_ppm(frame: &Frame, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let img = frame.to_rgb8();
    PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
        .write_image(
            img.as_raw(),
            img.width(),
            img.height(),
            image::ExtendedColorType::Rgb8,
        )?;
    Ok(())
}

/// Writes every frame as `dir/frame_%05d.ppm`, creating `dir` if needed.
pub fn write_frames(v: &VideoVolume, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..v.frame_count())
        .into_par_iter()
        .try_for_each(|t| write_ppm(&v.frame(t), &dir.join(frame_file_name(t))))
}

pub fn write_raw(v: &VideoVolume, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_raw_to(v, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_raw_to(v: &VideoVolume, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(RAW_MAGIC)?;
    for d in [v.width(), v.height(), v.frame_count()] {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    let bytes: Vec<u8> = v.voxels().iter().flat_map(|c| quantize(*c)).collect();
    w.write_all(&bytes)
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<VideoVolume> {
    let reader = RawFrameReader::open(path)?;
    let frames = reader.collect::<Result<Vec<_>>>()?;
    VideoVolume::from_frames(frames)
}

/// Reads an `SVXV` file one frame at a time.
pub struct RawFrameReader<R> {
    inner: R,
    width: usize,
    height: usize,
    frame_count: usize,
    next: usize,
}

impl RawFrameReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::new(BufReader::new(file))
    }
}

impl<R: Read> RawFrameReader<R> {
    pub fn new(mut inner: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        inner.read_exact(&mut magic)?;
        if &magic != RAW_MAGIC {
            return Err(Error::Format(format!(
                "bad raw volume magic {magic:?}, expected SVXV"
            )));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            inner.read_exact(&mut b)?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let [width, height, frame_count] = dims;
        check_dims(width, height, frame_count)?;
        Ok(RawFrameReader {
            inner,
            width,
            height,
            frame_count,
            next: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }
}

impl<R: Read> Iterator for RawFrameReader<R> {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.frame_count {
            return None;
        }
        let mut buf = vec![0u8; self.width * self.height * 3];
        if let Err(e) = self.inner.read_exact(&mut buf) {
            self.next = self.frame_count;
            return Some(Err(Error::Ingest(format!(
                "raw volume truncated in frame {}: {e}",
                self.next
            ))));
        }
        self.next += 1;
        Some(Ok(Frame {
            width: self.width,
            height: self.height,
            pixels: buf
                .chunks_exact(3)
                .map(|c| [c[0] as f32, c[1] as f32, c[2] as f32])
                .collect(),
        }))
    }
}

/// Output dimensions for a resize, optionally fitting inside the target box.
pub fn fitted_dims(
    width: usize,
    height: usize,
    target_w: usize,
    target_h: usize,
    preserve_aspect: bool,
) -> (usize, usize) {
    if !preserve_aspect {
        return (target_w, target_h);
    }
    let scale = (target_w as f64 / width as f64).min(target_h as f64 / height as f64);
    let w = ((width as f64 * scale).round() as usize).clamp(1, target_w);
    let h = ((height as f64 * scale).round() as usize).clamp(1, target_h);
    (w, h)
}

/// Per-frame bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(
    v: &VideoVolume,
    target_w: usize,
    target_h: usize,
    preserve_aspect: bool,
) -> Result<VideoVolume> {
    if target_w == 0 || target_h == 0 {
        return Err(Error::Param(format!(
            "resize target must be positive, got {target_w}x{target_h}"
        )));
    }
    let (ow, oh) = fitted_dims(v.width(), v.height(), target_w, target_h, preserve_aspect);
    if (ow, oh) == (v.width(), v.height()) {
        return Ok(v.clone());
    }
    v.map_frames(|f| resize_frame(f, ow, oh))
}

pub fn resize_frame(f: &Frame, ow: usize, oh: usize) -> Frame {
    let sx = f.width as f64 / ow as f64;
    let sy = f.height as f64 / oh as f64;
    let sample_axis = |dst: usize, scale: f64, n: usize| -> (usize, usize, f32) {
        let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, (src - i0 as f64) as f32)
    };
    let xs: Vec<_> = (0..ow).map(|x| sample_axis(x, sx, f.width)).collect();
    let mut out = Frame::new(ow, oh);
    for y in 0..oh {
        let (y0, y1, fy) = sample_axis(y, sy, f.height);
        for (x, &(x0, x1, fx)) in xs.iter().enumerate() {
            let (a, b, c, d) = (f.get(x0, y0), f.get(x1, y0), f.get(x0, y1), f.get(x1, y1));
            let mut px = [0.0; 3];
            for k in 0..3 {
                let top = a[k] + (b[k] - a[k]) * fx;
                let bot = c[k] + (d[k] - c[k]) * fx;
                px[k] = top + (bot - top) * fy;
            }
            out.set(x, y, px);
        }
    }
    out
}

/// Normalized 1D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| (t / sum) as f32).collect()
}

/// Half-sample symmetric reflection: `... c b a | a b c ... x y z | z y x ...`.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Spatial (per-frame) separable Gaussian smoothing of each channel.
pub fn gaussian_smooth(v: &VideoVolume, sigma: f64) -> Result<VideoVolume> {
    if !(sigma >= 0.0) {
        return Err(Error::Param(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(v.clone());
    }
    let kernel = gaussian_kernel(sigma);
    v.map_frames(|f| smooth_frame(f, &kernel))
}

pub fn smooth_frame(f: &Frame, kernel: &[f32]) -> Frame {
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (f.width, f.height);
    let mut tmp = Frame::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 3];
            for (k, &g) in kernel.iter().enumerate() {
                let sx = reflect(x as isize + k as isize - r, w);
                let p = f.get(sx, y);
                for c in 0..3 {
                    acc[c] += g * p[c];
                }
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Frame::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 3];
            for (k, &g) in kernel.iter().enumerate() {
                let sy = reflect(y as isize + k as isize - r, h);
                let p = tmp.get(x, sy);
                for c in 0..3 {
                    acc[c] += g * p[c];
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}
