//! Render a hand-written scene and a random outdoor scene to HMC1 frames
//! with ground-truth boxes.
//!
//! cargo run --example synth_scene -- [out_dir]

use std::path::PathBuf;

use hitomi::formats::{write_annotations, write_frame};
use hitomi::synth::{builtin_library, random_sar_scene, render_scene, SarSceneConfig, SceneSpec, Shape};

fn main() -> hitomi::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hitomi-synth"));
    std::fs::create_dir_all(&out).map_err(|e| hitomi::Error::io(&out, e))?;
    let library = builtin_library();

    // A jacket lying diagonally on grass, half in a tree's shadow.
    let mut spec = SceneSpec::new(253, 190, "vegetation")
        .with_shape("white_reference", Shape::Rectangle { x: 0, y: 0, w: 14, h: 14 })
        .with_shape("denim", Shape::Ellipse { cx: 120.0, cy: 95.0, rx: 40.0, ry: 14.0, angle_deg: 35.0 })
        .with_shape("nylon_orange", Shape::Polygon { points: vec![[190.0, 40.0], [230.0, 60.0], [205.0, 75.0], [215.0, 110.0], [180.0, 90.0]] });
    spec.shading.push(hitomi::synth::ShadePatch {
        shape: Shape::Rectangle { x: 100, y: 0, w: 153, h: 95 },
        factor: 0.8,
    });
    spec.noise_sigma = 0.01;
    spec.seed = 1;
    let scene = render_scene(&spec, &library, "handmade")?;
    write_frame(&scene.frame, out.join("handmade.hmc"))?;
    write_annotations(&scene.ground_truth, out.join("handmade.jsonl"))?;
    for g in &scene.ground_truth {
        println!("handmade: clothing at {:?}", g.bbox);
    }

    let (spec, plate) = random_sar_scene(&SarSceneConfig::default(), &library, 42);
    let scene = render_scene(&spec, &library, "random42")?;
    write_frame(&scene.frame, out.join("random42.hmc"))?;
    write_annotations(&scene.ground_truth, out.join("random42.jsonl"))?;
    println!(
        "random42: {} shapes on {}, {} clothing boxes, white plate {:?}, {} clothing pixels",
        spec.shapes.len(),
        spec.background,
        scene.ground_truth.len(),
        plate,
        scene.oracle_mask.count()
    );
    println!("written to {}", out.display());
    Ok(())
}
