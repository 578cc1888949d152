//! On-disk artifacts: multiband frames, box annotations and detections.
//!
//! Frame files (`.hmc`) are a small little-endian container:
//!
//! ```text
//! "HMC1" | u32 width | u32 height | u32 bands
//!        | bands × f32 center_nm | bands × f32 fwhm_nm
//!        | width·height·bands × f32 samples (band-major, then row-major)
//! ```
//!
//! Annotations and detections are JSON lines, one box per line:
//! `{"frame":"f0","box":[x,y,w,h]}` and the same with `"conf":c`.
//! Boxes are half-open pixel rectangles `[x, x+w) × [y, y+h)`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FRAME_MAGIC: &[u8; 4] = b"HMC1";
const HEADER_LEN: usize = 16;

/// Planar multiband intensity image.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandFrame {
    width: usize,
    height: usize,
    bands: usize,
    band_centers_nm: Vec<f32>,
    band_fwhm_nm: Vec<f32>,
    data: Vec<f32>,
}

impl MultibandFrame {
    pub fn new(
        width: usize,
        height: usize,
        band_centers_nm: Vec<f32>,
        band_fwhm_nm: Vec<f32>,
        data: Vec<f32>,
    ) -> Result<Self> {
        let bands = band_centers_nm.len();
        if bands == 0 {
            return Err(Error::Format("frame has zero bands".into()));
        }
        if band_fwhm_nm.len() != bands {
            return Err(Error::Format(format!(
                "{} band centres but {} FWHM values",
                bands,
                band_fwhm_nm.len()
            )));
        }
        if let Some(v) = band_centers_nm
            .iter()
            .chain(&band_fwhm_nm)
            .find(|v| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::Format(format!("band metadata must be positive, got {v}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(bands))
            .ok_or_else(|| Error::Format("frame dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} samples for {width}x{height}x{bands}, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Format(format!("sample {v} is not a finite non-negative value")));
        }
        Ok(Self {
            width,
            height,
            bands,
            band_centers_nm,
            band_fwhm_nm,
            data,
        })
    }

    /// All-zero frame with the prototype camera's band set.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::new(
            width,
            height,
            crate::DEFAULT_BAND_CENTERS_NM.to_vec(),
            crate::DEFAULT_BAND_FWHM_NM.to_vec(),
            vec![value; width * height * 4],
        )
        .expect("default band metadata is valid")
    }

    /// Builds a frame from one plane per band, each `width·height` long.
    pub fn from_planes(
        width: usize,
        height: usize,
        band_centers_nm: Vec<f32>,
        band_fwhm_nm: Vec<f32>,
        planes: &[Vec<f32>],
    ) -> Result<Self> {
        if planes.len() != band_centers_nm.len() {
            return Err(Error::Format(format!(
                "{} planes for {} bands",
                planes.len(),
                band_centers_nm.len()
            )));
        }
        let mut data = Vec::with_capacity(width * height * planes.len());
        for p in planes {
            if p.len() != width * height {
                return Err(Error::Format("plane size does not match frame".into()));
            }
            data.extend_from_slice(p);
        }
        Self::new(width, height, band_centers_nm, band_fwhm_nm, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn band_centers_nm(&self) -> &[f32] {
        &self.band_centers_nm
    }

    pub fn band_fwhm_nm(&self) -> &[f32] {
        &self.band_fwhm_nm
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.data[b * n..(b + 1) * n]
    }

    pub fn sample(&self, band: usize, x: usize, y: usize) -> f32 {
        self.data[band * self.pixel_count() + y * self.width + x]
    }

    /// Replaces the samples while keeping geometry and band metadata.
    pub fn with_data(&self, data: Vec<f32>) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.band_centers_nm.clone(),
            self.band_fwhm_nm.clone(),
            data,
        )
    }

    /// Same bands with new geometry; used by spatial transforms.
    pub(crate) fn reshaped(&self, width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(
            width,
            height,
            self.band_centers_nm.clone(),
            self.band_fwhm_nm.clone(),
            data,
        )
    }
}

pub fn encode_frame(frame: &MultibandFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * (2 * frame.bands + frame.data.len()));
    out.extend_from_slice(FRAME_MAGIC);
    for v in [frame.width, frame.height, frame.bands] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for v in frame
        .band_centers_nm
        .iter()
        .chain(&frame.band_fwhm_nm)
        .chain(&frame.data)
    {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<MultibandFrame> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("file too short: {} bytes", bytes.len())));
    }
    if &bytes[..4] != FRAME_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (width, height, bands) = (word(0), word(1), word(2));
    if bands == 0 {
        return Err(Error::Format("band count is zero".into()));
    }
    let samples = (width as u64) * (height as u64) * (bands as u64);
    let declared = HEADER_LEN as u64 + 4 * (2 * bands as u64 + samples);
    if declared != bytes.len() as u64 {
        return Err(Error::Format(format!(
            "declared size {declared} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut floats = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let centers: Vec<f32> = floats.by_ref().take(bands).collect();
    let fwhm: Vec<f32> = floats.by_ref().take(bands).collect();
    let data: Vec<f32> = floats.collect();
    MultibandFrame::new(width, height, centers, fwhm, data)
}

pub fn write_frame(frame: &MultibandFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_frame(frame)).map_err(|e| Error::io(path, e))
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<MultibandFrame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_frame(&bytes)
}

/// Stacks grayscale images into one frame, band-major in argument order.
///
/// 8-bit planes are scaled by 1/255 and 16-bit planes by 1/65535, so the
/// resulting intensities lie in `[0, 1]`.
pub fn import_band_planes<P: AsRef<Path>>(
    paths: &[P],
    centers_nm: &[f32],
    fwhm_nm: &[f32],
) -> Result<MultibandFrame> {
    let mut planes = Vec::with_capacity(paths.len());
    let mut dims: Option<(u32, u32)> = None;
    for p in paths {
        let path = p.as_ref();
        let img = image::open(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let (w, h) = (img.width(), img.height());
        match dims {
            None => dims = Some((w, h)),
            Some(d) if d != (w, h) => {
                return Err(Error::Format(format!(
                    "{} is {w}x{h}, expected {}x{}",
                    path.display(),
                    d.0,
                    d.1
                )))
            }
            _ => {}
        }
        let plane: Vec<f32> = if img.color().bytes_per_pixel() / img.color().channel_count() > 1 {
            img.into_luma16()
                .into_raw()
                .into_iter()
                .map(|v| v as f32 / 65535.0)
                .collect()
        } else {
            img.into_luma8()
                .into_raw()
                .into_iter()
                .map(|v| v as f32 / 255.0)
                .collect()
        };
        planes.push(plane);
    }
    let (w, h) = dims.ok_or_else(|| Error::Format("no band planes given".into()))?;
    MultibandFrame::from_planes(
        w as usize,
        h as usize,
        centers_nm.to_vec(),
        fwhm_nm.to_vec(),
        &planes,
    )
}

/// Axis-aligned half-open pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[i64; 4]", into = "[i64; 4]")]
pub struct BBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BBox {
    pub const fn new(x: i64, y: i64, w: i64, h: i64) -> Self {
        Self { x, y, w, h }
    }

    pub fn is_valid(&self) -> bool {
        self.w >= 1 && self.h >= 1
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    pub fn right(&self) -> i64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.h
    }

    /// Intersection with the frame, `None` when nothing is left.
    pub fn clamp_to(&self, width: usize, height: usize) -> Option<BBox> {
        let x0 = self.x.max(0);
        let y0 = self.y.max(0);
        let x1 = self.right().min(width as i64);
        let y1 = self.bottom().min(height as i64);
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }
}

impl From<[i64; 4]> for BBox {
    fn from(v: [i64; 4]) -> Self {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [i64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    #[serde(rename = "frame")]
    pub frame_id: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(rename = "frame")]
    pub frame_id: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(rename = "conf")]
    pub confidence: f64,
}

trait Record: Serialize + for<'de> Deserialize<'de> {
    fn check(&self) -> std::result::Result<(), String>;
}

impl Record for GroundTruthBox {
    fn check(&self) -> std::result::Result<(), String> {
        if !self.bbox.is_valid() {
            return Err(format!("box {:?} has non-positive size", self.bbox));
        }
        Ok(())
    }
}

impl Record for DetectionRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if !self.bbox.is_valid() {
            return Err(format!("box {:?} has non-positive size", self.bbox));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(format!("confidence {} outside (0, 1]", self.confidence));
        }
        Ok(())
    }
}

fn read_records<T: Record>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::FormatLine {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let rec: T = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        rec.check().map_err(bad)?;
        out.push(rec);
    }
    Ok(out)
}

fn write_records<T: Record>(records: &[T], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<GroundTruthBox>> {
    read_records(path.as_ref())
}

pub fn write_annotations(boxes: &[GroundTruthBox], path: impl AsRef<Path>) -> Result<()> {
    write_records(boxes, path.as_ref())
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    read_records(path.as_ref())
}

pub fn write_detections(dets: &[DetectionRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records(dets, path.as_ref())
}

/// Class names of the classifier output and whether each counts as clothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTable {
    names: Vec<String>,
    is_clothing: Vec<bool>,
}

/// Number of clothing categories in the standard table.
pub const STANDARD_CLOTHING_CLASSES: usize = 39;
/// Background categories in the standard table.
pub const STANDARD_BACKGROUND_CLASSES: [&str; 2] = ["non_organic", "plant"];

impl LabelTable {
    pub fn new(names: Vec<String>, is_clothing: Vec<bool>) -> Result<Self> {
        if names.len() != is_clothing.len() {
            return Err(Error::Format(format!(
                "{} label names but {} clothing flags",
                names.len(),
                is_clothing.len()
            )));
        }
        if !is_clothing.iter().any(|&c| c) || is_clothing.iter().all(|&c| c) {
            return Err(Error::Format(
                "label table needs at least one clothing and one non-clothing entry".into(),
            ));
        }
        Ok(Self { names, is_clothing })
    }

    /// 39 clothing categories followed by the two background categories.
    pub fn standard() -> Self {
        Self::from_categories(&[], &STANDARD_BACKGROUND_CLASSES, 41).expect("valid")
    }

    /// Lays out `clothing` names, reserve clothing slots, `background` names,
    /// then inert padding, for a total of `out_dim` entries.
    ///
    /// Clothing slots are reserved until the table reaches
    /// `min(out_dim, 41)` entries; anything beyond 41 becomes non-clothing
    /// padding that the classifier never learns to emit.
    pub fn from_categories<S: AsRef<str>>(
        clothing: &[S],
        background: &[S],
        out_dim: usize,
    ) -> Result<Self> {
        let named = clothing.len() + background.len();
        if out_dim < named {
            return Err(Error::Format(format!(
                "out_dim {out_dim} smaller than {named} named classes"
            )));
        }
        let standard_len = STANDARD_CLOTHING_CLASSES + STANDARD_BACKGROUND_CLASSES.len();
        let reserved = out_dim.min(standard_len).saturating_sub(named);
        let mut names: Vec<String> = clothing.iter().map(|s| s.as_ref().to_string()).collect();
        names.extend((0..reserved).map(|i| format!("clothing_{:02}", clothing.len() + i)));
        names.extend(background.iter().map(|s| s.as_ref().to_string()));
        let mut is_clothing = vec![true; clothing.len() + reserved];
        is_clothing.extend(std::iter::repeat_n(false, background.len()));
        let pad = out_dim - names.len();
        names.extend((0..pad).map(|i| format!("unused_{i:02}")));
        is_clothing.extend(std::iter::repeat_n(false, pad));
        Self::new(names, is_clothing)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_clothing(&self) -> &[bool] {
        &self.is_clothing
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
