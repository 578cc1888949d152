//! White-plate balancing and luminance-vector extraction.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{BBox, MultibandFrame};

/// Band means at or below this are treated as an unlit white plate.
pub const WB_EPSILON: f64 = 1e-9;

/// Per-band gains that flatten a white reference.
///
/// Persisted as `{"gains":[g0,g1,g2,g3],"target":t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WbCoefficients {
    pub gains: Vec<f64>,
    #[serde(rename = "target")]
    pub reference_target: f64,
}

impl WbCoefficients {
    pub fn identity(bands: usize) -> Self {
        Self {
            gains: vec![1.0; bands],
            reference_target: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.is_empty() || self.gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::Domain(format!("invalid gains {:?}", self.gains)));
        }
        if !(self.reference_target.is_finite() && self.reference_target > 0.0) {
            return Err(Error::Domain(format!("invalid target {}", self.reference_target)));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let wb: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        wb.validate()?;
        Ok(wb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self).expect("wb serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// WB-corrected intensities of one pixel, one value per band.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSpectrum(pub Vec<f64>);

impl PixelSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for PixelSpectrum {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Mean of each band over `region`.
pub fn region_means(frame: &MultibandFrame, region: BBox) -> Result<Vec<f64>> {
    let inside = region.is_valid()
        && region.x >= 0
        && region.y >= 0
        && region.right() <= frame.width() as i64
        && region.bottom() <= frame.height() as i64;
    if !inside {
        return Err(Error::Bounds {
            x: region.x.max(0) as usize,
            y: region.y.max(0) as usize,
            width: frame.width(),
            height: frame.height(),
        });
    }
    let (x0, y0) = (region.x as usize, region.y as usize);
    let (x1, y1) = (region.right() as usize, region.bottom() as usize);
    let n = region.area() as f64;
    Ok((0..frame.bands())
        .map(|b| {
            let plane = frame.band(b);
            let sum: f64 = (y0..y1)
                .flat_map(|y| plane[y * frame.width() + x0..y * frame.width() + x1].iter())
                .map(|&v| v as f64)
                .sum();
            sum / n
        })
        .collect())
}

/// Gains mapping each band's white-region mean to the mean of those means.
pub fn compute_wb(frame: &MultibandFrame, white_region: BBox) -> Result<WbCoefficients> {
    let means = region_means(frame, white_region)?;
    if let Some((band, &mean)) = means.iter().enumerate().find(|(_, &m)| m <= WB_EPSILON) {
        return Err(Error::DegenerateWhitePlate { band, mean });
    }
    let target = means.iter().sum::<f64>() / means.len() as f64;
    Ok(WbCoefficients {
        gains: means.iter().map(|m| target / m).collect(),
        reference_target: target,
    })
}

/// One corrected sample. Shared by [`apply_wb`] and the fused inference
/// path so both round identically.
#[inline]
pub fn corrected_sample(value: f32, gain: f64) -> f32 {
    (value as f64 * gain) as f32
}

pub fn apply_wb(frame: &MultibandFrame, wb: &WbCoefficients) -> Result<MultibandFrame> {
    check_bands(frame, wb)?;
    let n = frame.pixel_count();
    let mut data = Vec::with_capacity(frame.data().len());
    for (b, &g) in wb.gains.iter().enumerate() {
        data.extend(frame.data()[b * n..(b + 1) * n].iter().map(|&v| corrected_sample(v, g)));
    }
    frame.with_data(data)
}

pub(crate) fn check_bands(frame: &MultibandFrame, wb: &WbCoefficients) -> Result<()> {
    if wb.gains.len() != frame.bands() {
        return Err(Error::Shape(format!(
            "{} WB gains for a {}-band frame",
            wb.gains.len(),
            frame.bands()
        )));
    }
    Ok(())
}

pub fn extract_spectrum(frame: &MultibandFrame, x: usize, y: usize) -> Result<PixelSpectrum> {
    if x >= frame.width() || y >= frame.height() {
        return Err(Error::Bounds {
            x,
            y,
            width: frame.width(),
            height: frame.height(),
        });
    }
    Ok(PixelSpectrum(
        (0..frame.bands()).map(|b| frame.sample(b, x, y) as f64).collect(),
    ))
}
