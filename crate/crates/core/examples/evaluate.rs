//! Score a toy detector against ground truth: single-threshold report, an
//! IoU sweep, and a PR curve written as SVG.
//!
//! cargo run --example evaluate

use hitomi::eval::{evaluate, parse_sweep, pr_svg, sweep_iou, write_report_csv, EvalConfig, ReportRow};
use hitomi::{BBox, DetectionRecord, GroundTruthBox};

fn main() -> hitomi::Result<()> {
    let gt = |f: &str, x, y, w, h| GroundTruthBox { frame_id: f.into(), bbox: BBox::new(x, y, w, h) };
    let det = |f: &str, x, y, w, h, c| DetectionRecord { frame_id: f.into(), bbox: BBox::new(x, y, w, h), confidence: c };
    let gts = vec![gt("a", 10, 10, 40, 80), gt("a", 100, 20, 30, 60), gt("b", 50, 50, 40, 40)];
    let dets = vec![
        det("a", 12, 30, 36, 40, 0.9),  // torso only
        det("a", 100, 20, 30, 58, 0.8), // whole body
        det("a", 200, 100, 10, 10, 0.6), // clutter
        det("b", 52, 48, 40, 42, 0.7),
    ];

    let report = evaluate(&dets, &gts, &EvalConfig::default())?;
    write_report_csv(&[ReportRow::new("toy", "demo", &report)], std::io::stdout().lock())?;

    println!("\niou    ap      tp  fp  fn");
    for r in sweep_iou(&dets, &gts, &parse_sweep("0.1:0.9:0.1")?, &EvalConfig::default())? {
        println!("{:.1}   {:.4}  {:2}  {:2}  {:2}", r.threshold, r.ap, r.tp, r.fp, r.fn_);
    }

    let svg = std::env::temp_dir().join("hitomi-pr.svg");
    std::fs::write(&svg, pr_svg(&[("toy", &report.pr_points)])).map_err(|e| hitomi::Error::io(&svg, e))?;
    println!("\nPR curve: {}", svg.display());
    Ok(())
}
