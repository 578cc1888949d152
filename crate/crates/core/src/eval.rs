//! Presence-detection evaluation: IoU matching, precision/recall, PR curves,
//! all-points AP and IoU sweeps.
//!
//! Detections are matched per frame, greedily in descending confidence with
//! ties kept in input order. Each detection takes the unmatched ground truth
//! of highest IoU (lowest index on ties) if that IoU reaches the threshold.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::{BBox, DetectionRecord, GroundTruthBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ApInterpolation {
    /// Monotone precision envelope integrated over every recall step.
    #[default]
    AllPoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub confidence_floor: f64,
    pub ap_interpolation: ApInterpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.2,
            confidence_floor: 0.01,
            ap_interpolation: ApInterpolation::AllPoints,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Domain(format!("IoU threshold {} outside (0, 1]", self.iou_threshold)));
        }
        if !self.confidence_floor.is_finite() {
            return Err(Error::Domain("confidence floor must be finite".into()));
        }
        Ok(())
    }
}

pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    if !a.is_valid() || !b.is_valid() {
        return Err(Error::Domain(format!("degenerate box in IoU: {a:?} / {b:?}")));
    }
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    Ok(inter as f64 / union as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatch {
    pub counts: Counts,
    /// `(detection index, ground-truth index, IoU)` for each true positive,
    /// indices into the slices passed to [`match_frame`].
    pub pairs: Vec<(usize, usize, f64)>,
    /// True-positive flag per detection, `None` for detections below the
    /// confidence floor.
    pub outcome: Vec<Option<bool>>,
}

/// Greedy one-to-one matching of one frame's detections to its ground truth.
pub fn match_frame(dets: &[DetectionRecord], gts: &[GroundTruthBox], cfg: &EvalConfig) -> Result<FrameMatch> {
    let mut order: Vec<usize> = (0..dets.len())
        .filter(|&i| dets[i].confidence >= cfg.confidence_floor)
        .collect();
    // Stable sort keeps input order within equal confidence.
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let mut taken = vec![false; gts.len()];
    let mut outcome = vec![None; dets.len()];
    let mut pairs = Vec::new();
    let mut counts = Counts::default();
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for (j, g) in gts.iter().enumerate() {
            if taken[j] {
                continue;
            }
            let v = iou(&dets[i].bbox, &g.bbox)?;
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) if v >= cfg.iou_threshold => {
                taken[j] = true;
                pairs.push((i, j, v));
                counts.tp += 1;
                outcome[i] = Some(true);
            }
            _ => {
                counts.fp += 1;
                outcome[i] = Some(false);
            }
        }
    }
    counts.fn_ = taken.iter().filter(|t| !**t).count();
    Ok(FrameMatch { counts, pairs, outcome })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
    /// Confidence of the detection that produced this point.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame_id: String,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub ap: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    pub pr_points: Vec<PrPoint>,
    pub per_frame: Vec<FrameReport>,
}

fn group<T>(items: &[T], id: impl Fn(&T) -> &str) -> BTreeMap<String, Vec<usize>> {
    let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        map.entry(id(it).to_string()).or_default().push(i);
    }
    map
}

/// Matches every frame, returning the per-detection outcome (in input order)
/// and per-frame counts in frame-id order.
fn match_all(
    dets: &[DetectionRecord],
    gts: &[GroundTruthBox],
    cfg: &EvalConfig,
) -> Result<(Vec<Option<bool>>, Vec<FrameReport>)> {
    let det_groups = group(dets, |d| &d.frame_id);
    let gt_groups = group(gts, |g| &g.frame_id);
    let mut frames: Vec<&String> = det_groups.keys().chain(gt_groups.keys()).collect();
    frames.sort();
    frames.dedup();
    let mut outcome = vec![None; dets.len()];
    let mut per_frame = Vec::with_capacity(frames.len());
    let empty = Vec::new();
    for f in frames {
        let di = det_groups.get(f).unwrap_or(&empty);
        let gi = gt_groups.get(f).unwrap_or(&empty);
        let fd: Vec<DetectionRecord> = di.iter().map(|&i| dets[i].clone()).collect();
        let fg: Vec<GroundTruthBox> = gi.iter().map(|&i| gts[i].clone()).collect();
        let m = match_frame(&fd, &fg, cfg)?;
        for (k, o) in m.outcome.into_iter().enumerate() {
            outcome[di[k]] = o;
        }
        per_frame.push(FrameReport {
            frame_id: f.clone(),
            counts: m.counts,
        });
    }
    Ok((outcome, per_frame))
}

/// Cumulative precision/recall after each detection, sweeping detections
/// across all frames by descending confidence (input order within ties).
pub fn pr_curve(dets: &[DetectionRecord], gts: &[GroundTruthBox], cfg: &EvalConfig) -> Result<Vec<PrPoint>> {
    if gts.is_empty() {
        return Err(Error::DegenerateEval("no ground-truth boxes".into()));
    }
    let (outcome, _) = match_all(dets, gts, cfg)?;
    Ok(sweep(dets, &outcome, gts.len()))
}

fn sweep(dets: &[DetectionRecord], outcome: &[Option<bool>], n_gt: usize) -> Vec<PrPoint> {
    let mut order: Vec<usize> = (0..dets.len()).filter(|&i| outcome[i].is_some()).collect();
    order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
    let (mut tp, mut fp) = (0usize, 0usize);
    order
        .into_iter()
        .map(|i| {
            if outcome[i] == Some(true) {
                tp += 1;
            } else {
                fp += 1;
            }
            PrPoint {
                recall: tp as f64 / n_gt as f64,
                precision: tp as f64 / (tp + fp) as f64,
                confidence: dets[i].confidence,
            }
        })
        .collect()
}

/// All-points AP: precision made non-increasing from the right, integrated
/// over recall increments.
pub fn average_precision(points: &[PrPoint]) -> f64 {
    let mut envelope: Vec<f64> = points.iter().map(|p| p.precision).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (p, env) in points.iter().zip(&envelope) {
        ap += (p.recall - prev_recall) * env;
        prev_recall = p.recall;
    }
    ap
}

/// Keeps the last point of each run of equal confidence, as drawn in a PR
/// plot. A detector whose boxes all carry the same confidence collapses to a
/// single point.
pub fn collapse_ties(points: &[PrPoint]) -> Vec<PrPoint> {
    let mut out: Vec<PrPoint> = Vec::new();
    for p in points {
        match out.last_mut() {
            Some(last) if last.confidence == p.confidence => *last = *p,
            _ => out.push(*p),
        }
    }
    out
}

pub fn evaluate(dets: &[DetectionRecord], gts: &[GroundTruthBox], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    if gts.is_empty() {
        return Err(Error::DegenerateEval("no ground-truth boxes".into()));
    }
    let (outcome, per_frame) = match_all(dets, gts, cfg)?;
    let mut counts = Counts::default();
    for f in &per_frame {
        counts.add(f.counts);
    }
    let pr_points = sweep(dets, &outcome, gts.len());
    Ok(EvalReport {
        iou_threshold: cfg.iou_threshold,
        ap: average_precision(&pr_points),
        precision: counts.precision(),
        recall: counts.recall(),
        f1: counts.f1(),
        counts,
        pr_points,
        per_frame,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub ap: f64,
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
}

pub fn sweep_iou(
    dets: &[DetectionRecord],
    gts: &[GroundTruthBox],
    thresholds: &[f64],
    cfg: &EvalConfig,
) -> Result<Vec<SweepRow>> {
    thresholds
        .iter()
        .map(|&t| {
            let r = evaluate(dets, gts, &EvalConfig { iou_threshold: t, ..cfg.clone() })?;
            Ok(SweepRow {
                threshold: t,
                ap: r.ap,
                tp: r.counts.tp,
                fn_: r.counts.fn_,
                fp: r.counts.fp,
            })
        })
        .collect()
}

/// Parses `start:stop:step` into thresholds, inclusive of `stop`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Domain(format!("bad sweep '{spec}': {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::Domain(format!("sweep must be start:stop:step, got '{spec}'")));
    };
    if !(step > 0.0) || start > stop {
        return Err(Error::Domain(format!("bad sweep '{spec}'")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // Rounded to 10 decimals so 0.1 increments print as 0.3, not 0.30000000000000004.
    Ok((0..=n)
        .map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// Detections from another detector, e.g. a CNN baseline already filtered
/// to the person class.
pub fn ingest_external_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    crate::formats::read_detections(path)
}

/// One row of the report CSV.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub model: String,
    pub scene: String,
    pub iou: f64,
    pub ap: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ReportRow {
    pub fn new(model: &str, scene: &str, r: &EvalReport) -> Self {
        Self {
            model: model.into(),
            scene: scene.into(),
            iou: r.iou_threshold,
            ap: r.ap,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            tp: r.counts.tp,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
        }
    }
}

/// CSV with header `model,scene,iou,ap,precision,recall,f1,tp,fp,fn`.
pub fn write_report_csv<W: std::io::Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}

/// Standalone SVG plot of one or more PR curves (ties collapsed).
pub fn pr_svg(curves: &[(&str, &[PrPoint])]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let px = |r: f64| M + r * (W - 2.0 * M);
    let py = |p: f64| H - M - p * (H - 2.0 * M);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<path d=\"M{:.1} {:.1} L{:.1} {:.1} L{:.1} {:.1}\" stroke=\"black\" fill=\"none\"/>",
        px(0.0),
        py(1.0),
        px(0.0),
        py(0.0),
        px(1.0),
        py(0.0)
    );
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\">{v:.1}</text>",
            px(v),
            py(0.0) + 14.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"end\">{v:.1}</text>",
            px(0.0) - 4.0,
            py(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">Recall</text>",
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">Precision</text>",
        H / 2.0,
        H / 2.0
    );
    for (i, (name, points)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts = collapse_ties(points);
        // Step from recall 0 at the first precision, then right and down.
        let mut d = String::new();
        if let Some(first) = pts.first() {
            let _ = write!(d, "M{:.1} {:.1}", px(0.0), py(first.precision));
            for p in &pts {
                let _ = write!(d, " L{:.1} {:.1}", px(p.recall), py(p.precision));
            }
        }
        let _ = writeln!(s, "<path d=\"{d}\" stroke=\"{color}\" stroke-width=\"2\" fill=\"none\"/>");
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" fill=\"{color}\">{}</text>",
            W - M - 100.0,
            M + 14.0 * i as f64,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(frame: &str, b: [i64; 4], conf: f64) -> DetectionRecord {
        DetectionRecord {
            frame_id: frame.into(),
            bbox: b.into(),
            confidence: conf,
        }
    }

    fn gt(frame: &str, b: [i64; 4]) -> GroundTruthBox {
        GroundTruthBox {
            frame_id: frame.into(),
            bbox: b.into(),
        }
    }

    fn pt(recall: f64, precision: f64) -> PrPoint {
        PrPoint {
            recall,
            precision,
            confidence: 1.0,
        }
    }

    #[test]
    fn iou_cases() {
        let a = BBox::new(0, 0, 10, 10);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &BBox::new(10, 0, 5, 5)).unwrap(), 0.0);
        assert!((iou(&a, &BBox::new(5, 0, 10, 10)).unwrap() - 50.0 / 150.0).abs() < 1e-15);
        assert!(matches!(iou(&a, &BBox::new(0, 0, 0, 3)), Err(Error::Domain(_))));
    }

    #[test]
    fn single_exact_match() {
        let m = match_frame(&[det("f", [0, 0, 4, 4], 1.0)], &[gt("f", [0, 0, 4, 4])], &EvalConfig::default()).unwrap();
        assert_eq!(m.counts, Counts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(m.pairs, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn duplicate_detection_is_fp() {
        let dets = [det("f", [0, 0, 4, 4], 1.0), det("f", [1, 0, 4, 4], 1.0)];
        let m = match_frame(&dets, &[gt("f", [0, 0, 4, 4])], &EvalConfig::default()).unwrap();
        assert_eq!(m.counts, Counts { tp: 1, fp: 1, fn_: 0 });
        // Input order breaks the tie: the first detection wins.
        assert_eq!(m.outcome, vec![Some(true), Some(false)]);
    }

    #[test]
    fn confidence_floor_drops_detections() {
        let dets = [det("f", [0, 0, 4, 4], 0.005)];
        let m = match_frame(&dets, &[gt("f", [0, 0, 4, 4])], &EvalConfig::default()).unwrap();
        assert_eq!(m.counts, Counts { tp: 0, fp: 0, fn_: 1 });
        assert_eq!(m.outcome, vec![None]);
    }

    #[test]
    fn detections_do_not_cross_frames() {
        let r = evaluate(&[det("a", [0, 0, 4, 4], 1.0)], &[gt("b", [0, 0, 4, 4])], &EvalConfig::default()).unwrap();
        assert_eq!(r.counts, Counts { tp: 0, fp: 1, fn_: 1 });
        assert_eq!(r.per_frame.len(), 2);
    }

    #[test]
    fn pr_curves() {
        let cfg = EvalConfig::default();
        let g = [gt("f", [0, 0, 10, 10])];
        let perfect = pr_curve(&[det("f", [0, 0, 10, 10], 1.0)], &g, &cfg).unwrap();
        assert_eq!(perfect.iter().map(|p| (p.recall, p.precision)).collect::<Vec<_>>(), vec![(1.0, 1.0)]);
        let tp_fp = [det("f", [0, 0, 10, 10], 0.9), det("f", [50, 50, 5, 5], 0.8)];
        let c = pr_curve(&tp_fp, &g, &cfg).unwrap();
        assert_eq!(c.iter().map(|p| (p.recall, p.precision)).collect::<Vec<_>>(), vec![(1.0, 1.0), (1.0, 0.5)]);
        let fp_tp = [det("f", [50, 50, 5, 5], 0.9), det("f", [0, 0, 10, 10], 0.8)];
        let c = pr_curve(&fp_tp, &g, &cfg).unwrap();
        assert_eq!(c.iter().map(|p| (p.recall, p.precision)).collect::<Vec<_>>(), vec![(0.0, 0.0), (1.0, 0.5)]);
        assert!(matches!(pr_curve(&tp_fp, &[], &cfg), Err(Error::DegenerateEval(_))));
    }

    #[test]
    fn ap_cases() {
        assert_eq!(average_precision(&[pt(1.0, 1.0)]), 1.0);
        assert_eq!(average_precision(&[pt(1.0, 1.0), pt(1.0, 0.5)]), 1.0);
        assert_eq!(average_precision(&[pt(0.0, 0.0), pt(1.0, 0.5)]), 0.5);
        assert_eq!(average_precision(&[]), 0.0);
    }

    #[test]
    fn uniform_confidence_collapses() {
        let pts = [pt(0.5, 1.0), pt(0.5, 0.5), pt(1.0, 0.666)];
        assert_eq!(collapse_ties(&pts), vec![pt(1.0, 0.666)]);
    }

    #[test]
    fn sweep_exact_matches_constant() {
        let g: Vec<_> = (0..5).map(|i| gt("f", [20 * i, 0, 10, 10])).collect();
        let d: Vec<_> = (0..5).map(|i| det("f", [20 * i, 0, 10, 10], 1.0)).collect();
        let th = parse_sweep("0.1:0.9:0.1").unwrap();
        assert_eq!(th.len(), 9);
        assert_eq!(th[2], 0.3);
        let rows = sweep_iou(&d, &g, &th, &EvalConfig::default()).unwrap();
        assert!(rows.iter().all(|r| r.tp == 5 && r.fp == 0 && r.fn_ == 0));
    }

    #[test]
    fn parse_sweep_errors() {
        assert!(parse_sweep("0.1:0.9").is_err());
        assert!(parse_sweep("0.5:0.1:0.1").is_err());
        assert!(parse_sweep("0.1:0.9:0").is_err());
        assert_eq!(parse_sweep("0.2:0.2:0.1").unwrap(), vec![0.2]);
    }

    #[test]
    fn report_csv_header() {
        let r = evaluate(&[det("f", [0, 0, 4, 4], 1.0)], &[gt("f", [0, 0, 4, 4])], &EvalConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&[ReportRow::new("m", "s", &r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("model,scene,iou,ap,precision,recall,f1,tp,fp,fn"));
        assert_eq!(lines.next(), Some("m,s,0.2,1.0,1.0,1.0,1.0,1,0,0"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let pts = [pt(0.5, 1.0), pt(1.0, 0.9)];
        let s = pr_svg(&[("a<b", &pts)]);
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
    }
}
