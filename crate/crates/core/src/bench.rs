//! Per-stage wall-clock timing of the online detection path.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{decode_frame, encode_frame, MultibandFrame};
use crate::mlp::MlpModel;
use crate::pipeline::{run_staged, DetectionSet, PipelineParams, Stage};
use crate::radiometry::WbCoefficients;

/// Stage names in report order. `frame-ingest` decodes the frame from an
/// in-memory container; `other` is whatever the named stages do not cover.
pub const STAGES: [&str; 9] = [
    "frame-ingest",
    "wb-correction",
    "spectrum-extraction",
    "mlp-inference",
    "pixel-classification",
    "map-generation",
    "postprocess",
    "box-output",
    "other",
];

fn stage_slot(s: Stage) -> usize {
    match s {
        Stage::WbCorrection => 1,
        Stage::SpectrumExtraction => 2,
        Stage::MlpInference => 3,
        Stage::PixelClassification => 4,
        Stage::MapGeneration => 5,
        Stage::Postprocess => 6,
        Stage::BoxOutput => 7,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub mean_ms: f64,
    pub sd_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub stages: Vec<StageTiming>,
    pub total_mean_ms: f64,
    pub total_sd_ms: f64,
    pub fps: f64,
    pub iterations: usize,
    pub width: usize,
    pub height: usize,
    /// Output of the last timed run.
    pub detections: DetectionSet,
}

impl TimingReport {
    pub fn stage(&self, name: &str) -> Option<&StageTiming> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn stage_sum_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.mean_ms).sum()
    }

    /// `|Σ stages − total| / total`.
    pub fn stage_sum_error(&self) -> f64 {
        (self.stage_sum_ms() - self.total_mean_ms).abs() / self.total_mean_ms
    }

    /// `stage,mean_ms,sd_ms` rows followed by a `total` row.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format(format!("timing csv: {e}"));
        for s in &self.stages {
            w.serialize(s).map_err(csv_err)?;
        }
        w.serialize(StageTiming {
            stage: "total",
            mean_ms: self.total_mean_ms,
            sd_ms: self.total_sd_ms,
        })
        .map_err(csv_err)?;
        w.flush().map_err(|e| Error::Format(format!("timing csv: {e}")))
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the full path `warmup` times untimed, then `iterations` times with
/// a monotonic clock read at every stage boundary. Stages partition each
/// run, so their means add up to the total mean.
pub fn time_pipeline(
    frame: &MultibandFrame,
    wb: &WbCoefficients,
    model: &MlpModel,
    params: &PipelineParams,
    iterations: usize,
    warmup: usize,
) -> Result<TimingReport> {
    if iterations == 0 {
        return Err(Error::Domain("iterations must be at least 1".into()));
    }
    let bytes = encode_frame(frame);
    for _ in 0..warmup {
        let f = decode_frame(&bytes)?;
        run_staged("bench", &f, wb, model, params, |_| {})?;
    }

    let mut samples = vec![Vec::with_capacity(iterations); STAGES.len()];
    let mut totals = Vec::with_capacity(iterations);
    let mut detections = DetectionSet::default();
    for _ in 0..iterations {
        let mut row = [0.0f64; 9];
        let start = Instant::now();
        let f = decode_frame(&bytes)?;
        let mut mark = Instant::now();
        row[0] = (mark - start).as_secs_f64() * 1e3;
        let trace = run_staged("bench", &f, wb, model, params, |s| {
            let now = Instant::now();
            row[stage_slot(s)] = (now - mark).as_secs_f64() * 1e3;
            mark = now;
        })?;
        let end = Instant::now();
        row[8] = (end - mark).as_secs_f64() * 1e3;
        totals.push((end - start).as_secs_f64() * 1e3);
        for (s, v) in samples.iter_mut().zip(row) {
            s.push(v);
        }
        detections = trace.detections;
    }

    let stages = STAGES
        .iter()
        .zip(&samples)
        .map(|(&stage, xs)| {
            let (mean_ms, sd_ms) = mean_sd(xs);
            StageTiming { stage, mean_ms, sd_ms }
        })
        .collect();
    let (total_mean_ms, total_sd_ms) = mean_sd(&totals);
    Ok(TimingReport {
        stages,
        total_mean_ms,
        total_sd_ms,
        fps: 1000.0 / total_mean_ms,
        iterations,
        width: frame.width(),
        height: frame.height(),
        detections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::LabelTable;
    use crate::pipeline::detect;

    fn setup() -> (MultibandFrame, MlpModel) {
        let mut rng = crate::rng::SplitMix64::new(3);
        let frame = MultibandFrame::zeros(40, 30)
            .with_data((0..40 * 30 * 4).map(|_| rng.next_f64() as f32).collect())
            .unwrap();
        (frame, MlpModel::init(4, &[16, 8], LabelTable::standard(), 1).unwrap())
    }

    #[test]
    fn one_iteration_has_zero_sd() {
        let (f, m) = setup();
        let r = time_pipeline(&f, &WbCoefficients::identity(4), &m, &PipelineParams::default(), 1, 0).unwrap();
        assert!(r.stages.iter().all(|s| s.sd_ms == 0.0 && s.mean_ms >= 0.0));
        assert_eq!(r.total_sd_ms, 0.0);
        assert_eq!(r.stages.len(), 9);
    }

    #[test]
    fn report_is_consistent() {
        let (f, m) = setup();
        let wb = WbCoefficients::identity(4);
        let p = PipelineParams::default();
        let r = time_pipeline(&f, &wb, &m, &p, 5, 1).unwrap();
        assert!(r.stage_sum_error() <= 0.05);
        assert_eq!(r.fps, 1000.0 / r.total_mean_ms);
        assert_eq!((r.width, r.height, r.iterations), (40, 30, 5));
        assert_eq!(r.detections, detect("bench", &f, &wb, &m, &p).unwrap());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stage,mean_ms,sd_ms\nframe-ingest,"));
        assert_eq!(text.lines().count(), 11);
    }

    #[test]
    fn zero_iterations_rejected() {
        let (f, m) = setup();
        assert!(time_pipeline(&f, &WbCoefficients::identity(4), &m, &PipelineParams::default(), 0, 0).is_err());
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-15);
    }
}
