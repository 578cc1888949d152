//! The online path: balanced frame → per-pixel classification → clothing
//! map → noise removal → closing → connected components → boxes.

mod components;
mod morphology;
mod transform;

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use components::{connected_components, fit_boxes, Component, Connectivity, DetectionSet};
pub use morphology::{close, dilate, erode, open};
pub use transform::Dihedral;

use crate::error::{Error, Result};
use crate::formats::MultibandFrame;
use crate::mlp::{argmax, Category, MlpModel};
use crate::radiometry::{apply_wb, check_bands, corrected_sample, WbCoefficients};

/// Per-pixel binary mask, `true` = clothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClothingMap {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
}

impl ClothingMap {
    pub fn new(width: usize, height: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != width * height {
            return Err(Error::Shape(format!(
                "mask of {} for {width}x{height}",
                mask.len()
            )));
        }
        Ok(Self { width, height, mask })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                mask.push(f(x, y));
            }
        }
        Self { width, height, mask }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&v| v).count()
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &ClothingMap) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !a || *b)
    }

    /// 8-bit graymap, 255 for clothing.
    pub fn to_gray_image(&self) -> image::GrayImage {
        let px = self.mask.iter().map(|&v| if v { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, px).expect("size matches")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub min_component_area: usize,
    pub open_kernel: usize,
    pub close_kernel: usize,
    pub close_iterations: usize,
    pub connectivity: Connectivity,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            min_component_area: 8,
            open_kernel: 3,
            close_kernel: 3,
            close_iterations: 1,
            connectivity: Connectivity::Eight,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("open_kernel", self.open_kernel), ("close_kernel", self.close_kernel)] {
            if k == 0 || k % 2 == 0 {
                return Err(Error::Domain(format!("{name} must be odd and positive, got {k}")));
            }
        }
        if self.min_component_area == 0 {
            return Err(Error::Domain("min_component_area must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_inputs(frame: &MultibandFrame, wb: &WbCoefficients, model: &MlpModel) -> Result<()> {
    check_bands(frame, wb)?;
    if model.input_dim() != frame.bands() {
        return Err(Error::Shape(format!(
            "model takes {} bands, frame has {}",
            model.input_dim(),
            frame.bands()
        )));
    }
    Ok(())
}

/// Classifies every pixel independently.
///
/// Rows are spread over the rayon pool; each pixel's result depends on that
/// pixel alone, so the mask is the same for any worker count.
pub fn classify_frame(frame: &MultibandFrame, wb: &WbCoefficients, model: &MlpModel) -> Result<ClothingMap> {
    check_inputs(frame, wb, model)?;
    let (w, h, bands) = (frame.width(), frame.height(), frame.bands());
    let n = w * h;
    let data = frame.data();
    let clothing = model.labels().is_clothing();
    let mut mask = vec![false; n];
    mask.par_chunks_mut(w.max(1)).enumerate().for_each(|(y, row)| {
        let mut scratch = model.scratch();
        let mut x_buf = vec![0.0f64; bands];
        for (x, out) in row.iter_mut().enumerate() {
            let p = y * w + x;
            for b in 0..bands {
                x_buf[b] = corrected_sample(data[b * n + p], wb.gains[b]) as f64;
            }
            *out = clothing[argmax(model.forward_with(&x_buf, &mut scratch))];
        }
    });
    ClothingMap::new(w, h, mask)
}

/// Opening followed by removal of components smaller than
/// `min_component_area`.
pub fn denoise(map: &ClothingMap, params: &PipelineParams) -> ClothingMap {
    let opened = open(map, params.open_kernel);
    let mut out = ClothingMap {
        width: map.width,
        height: map.height,
        mask: vec![false; map.mask.len()],
    };
    for c in connected_components(&opened, params.connectivity) {
        if c.area() >= params.min_component_area {
            for (x, y) in c.pixels {
                out.mask[y * map.width + x] = true;
            }
        }
    }
    out
}

/// Morphological closing: fuses fragments separated by less than a kernel.
pub fn close_regions(map: &ClothingMap, params: &PipelineParams) -> ClothingMap {
    close(map, params.close_kernel, params.close_iterations)
}

thread_local! {
    static LOGITS: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// Stages of the online path, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    WbCorrection,
    SpectrumExtraction,
    MlpInference,
    PixelClassification,
    MapGeneration,
    Postprocess,
    BoxOutput,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::WbCorrection,
        Stage::SpectrumExtraction,
        Stage::MlpInference,
        Stage::PixelClassification,
        Stage::MapGeneration,
        Stage::Postprocess,
        Stage::BoxOutput,
    ];
}

/// Intermediate masks and final boxes of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineTrace {
    pub initial: ClothingMap,
    pub denoised: ClothingMap,
    pub closed: ClothingMap,
    pub detections: DetectionSet,
}

/// Runs the online path stage by stage, calling `on_stage` after each one.
///
/// The staged path materialises every intermediate (corrected frame, input
/// vectors, logits, winners) so each can be timed separately; it produces the
/// same mask as [`classify_frame`].
pub fn run_staged(
    frame_id: &str,
    frame: &MultibandFrame,
    wb: &WbCoefficients,
    model: &MlpModel,
    params: &PipelineParams,
    mut on_stage: impl FnMut(Stage),
) -> Result<PipelineTrace> {
    check_inputs(frame, wb, model)?;
    params.validate()?;
    let (w, h, bands) = (frame.width(), frame.height(), frame.bands());
    let n = w * h;

    let corrected = apply_wb(frame, wb)?;
    on_stage(Stage::WbCorrection);

    let mut inputs = vec![0.0f64; n * bands];
    let data = corrected.data();
    for (p, px) in inputs.chunks_exact_mut(bands).enumerate() {
        for (b, v) in px.iter_mut().enumerate() {
            *v = data[b * n + p] as f64;
        }
    }
    on_stage(Stage::SpectrumExtraction);

    let c = model.output_dim();
    // Reused across frames: a fresh multi-megabyte buffer per frame costs
    // more in page faults than the network does in arithmetic.
    let mut logits = LOGITS.with(|b| b.take());
    logits.clear();
    logits.resize(n * c, 0.0);
    let row_len = w.max(1);
    logits
        .par_chunks_mut(row_len * c)
        .zip(inputs.par_chunks(row_len * bands))
        .for_each(|(out, xs)| {
            let mut scratch = model.scratch();
            for (o, x) in out.chunks_exact_mut(c).zip(xs.chunks_exact(bands)) {
                o.copy_from_slice(model.forward_with(x, &mut scratch));
            }
        });
    on_stage(Stage::MlpInference);

    let winners: Vec<usize> = logits.chunks_exact(c).map(argmax).collect();
    on_stage(Stage::PixelClassification);

    let mask = winners
        .iter()
        .map(|&k| model.categorize(k).category == Category::Clothing)
        .collect();
    let initial = ClothingMap::new(w, h, mask)?;
    on_stage(Stage::MapGeneration);

    let denoised = denoise(&initial, params);
    let closed = close_regions(&denoised, params);
    let comps = connected_components(&closed, params.connectivity);
    on_stage(Stage::Postprocess);

    let detections = fit_boxes(frame_id, &comps);
    on_stage(Stage::BoxOutput);
    LOGITS.with(|b| b.replace(logits));

    Ok(PipelineTrace {
        initial,
        denoised,
        closed,
        detections,
    })
}

/// Full detection on one frame.
pub fn detect(
    frame_id: &str,
    frame: &MultibandFrame,
    wb: &WbCoefficients,
    model: &MlpModel,
    params: &PipelineParams,
) -> Result<DetectionSet> {
    params.validate()?;
    let initial = classify_frame(frame, wb, model)?;
    let closed = close_regions(&denoise(&initial, params), params);
    Ok(fit_boxes(frame_id, &connected_components(&closed, params.connectivity)))
}

/// Sizes the global worker pool; `0` lets rayon choose. Only the first call
/// in a process takes effect.
pub fn configure_threads(threads: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

/// Worker cap from `HITOMI_THREADS` (`0` or unset = automatic).
pub fn threads_from_env() -> usize {
    std::env::var("HITOMI_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}
