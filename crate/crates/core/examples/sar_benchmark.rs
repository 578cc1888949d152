//! Train on the builtin library, then score detection on random cluttered
//! scenes with irregular clothing shapes, shading, colour cast and noise.
//!
//! cargo run --release --example sar_benchmark -- [scenes] [seed]

use hitomi::eval::{evaluate, EvalConfig};
use hitomi::mlp::train;
use hitomi::radiometry::compute_wb;
use hitomi::synth::{builtin_library, generate_training_set, random_sar_scene, render_scene, DatasetConfig, Illuminant, SarSceneConfig};
use hitomi::{detect, PipelineParams, TrainConfig};

fn main() -> hitomi::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let scenes = args.first().copied().unwrap_or(50);
    let seed = args.get(1).copied().unwrap_or(7);

    let library = builtin_library();
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let ds = generate_training_set(&library, &Illuminant::daylight(), &DatasetConfig::default(), &cfg, seed)?;
    let t = std::time::Instant::now();
    let (model, log) = train(&ds, &cfg)?;
    let best = log.best().expect("at least one epoch");
    println!(
        "trained on {} samples in {:.1}s: {} epochs, val acc {:.4}",
        ds.len(),
        t.elapsed().as_secs_f64(),
        log.epochs.len(),
        best.val_accuracy
    );

    let params = PipelineParams::default();
    let (mut dets, mut gts) = (Vec::new(), Vec::new());
    for s in 0..scenes {
        let (spec, plate) = random_sar_scene(&SarSceneConfig::default(), &library, seed * 1000 + s);
        let id = format!("scene{s:03}");
        let scene = render_scene(&spec, &library, &id)?;
        let wb = compute_wb(&scene.frame, plate)?;
        let found = detect(&id, &scene.frame, &wb, &model, &params)?;
        dets.extend(found.boxes);
        gts.extend(scene.ground_truth);
    }
    let r = evaluate(&dets, &gts, &EvalConfig::default())?;
    println!(
        "{} scenes, {} ground-truth boxes: AP {:.4}, precision {:.4}, recall {:.4}, TP {} FP {} FN {}",
        scenes, gts.len(), r.ap, r.precision, r.recall, r.counts.tp, r.counts.fp, r.counts.fn_
    );
    Ok(())
}
