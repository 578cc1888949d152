//! Run the full detection path on one synthetic frame and show the mask at
//! every post-processing step.
//!
//! cargo run --release --example detect_frame

use hitomi::mlp::train;
use hitomi::pipeline::run_staged;
use hitomi::radiometry::compute_wb;
use hitomi::synth::{builtin_library, generate_training_set, render_scene, DatasetConfig, Illuminant, SceneSpec, Shape};
use hitomi::{ClothingMap, PipelineParams, TrainConfig};

fn ascii(map: &ClothingMap) {
    for y in (0..map.height).step_by(2) {
        let row: String = (0..map.width).map(|x| if map.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> hitomi::Result<()> {
    let library = builtin_library();
    let cfg = TrainConfig { seed: 1, ..TrainConfig::default() };
    let ds = generate_training_set(&library, &Illuminant::daylight(), &DatasetConfig::default(), &cfg, 1)?;
    let (model, _) = train(&ds, &cfg)?;

    let mut spec = SceneSpec::new(72, 40, "dry_grass")
        .with_shape("white_reference", Shape::Rectangle { x: 0, y: 0, w: 8, h: 8 })
        .with_shape("blue_tarp", Shape::Rectangle { x: 50, y: 4, w: 18, h: 12 })
        .with_shape("polyester_blue", Shape::Ellipse { cx: 25.0, cy: 24.0, rx: 14.0, ry: 6.0, angle_deg: -20.0 })
        .with_shape("wool_brown", Shape::Rectangle { x: 48, y: 24, w: 14, h: 12 });
    spec.noise_sigma = 0.015;
    spec.seed = 3;
    let scene = render_scene(&spec, &library, "demo")?;
    let wb = compute_wb(&scene.frame, hitomi::BBox::new(0, 0, 8, 8))?;

    let mut stages = Vec::new();
    let trace = run_staged("demo", &scene.frame, &wb, &model, &PipelineParams::default(), |s| stages.push(s))?;
    println!("stages: {stages:?}");
    println!("initial map ({} px):", trace.initial.count());
    ascii(&trace.initial);
    println!("after opening and area filter ({} px):", trace.denoised.count());
    ascii(&trace.denoised);
    println!("after closing ({} px):", trace.closed.count());
    ascii(&trace.closed);
    for (d, n) in trace.detections.boxes.iter().zip(&trace.detections.support) {
        println!("box {:?} from {n} px", d.bbox);
    }
    for g in &scene.ground_truth {
        println!("truth {:?}", g.bbox);
    }
    Ok(())
}
