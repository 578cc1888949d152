//! Per-stage timing at the prototype resolution with a trained model.
//!
//! cargo run --release --example bench_pipeline -- [iterations]

use hitomi::bench::time_pipeline;
use hitomi::mlp::train;
use hitomi::radiometry::compute_wb;
use hitomi::synth::{builtin_library, generate_training_set, random_sar_scene, render_scene, DatasetConfig, Illuminant, SarSceneConfig};
use hitomi::{PipelineParams, TrainConfig};

fn main() -> hitomi::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let library = builtin_library();
    let cfg = TrainConfig { seed: 2, ..TrainConfig::default() };
    let ds = generate_training_set(&library, &Illuminant::daylight(), &DatasetConfig::default(), &cfg, 2)?;
    let (model, _) = train(&ds, &cfg)?;

    let (spec, plate) = random_sar_scene(&SarSceneConfig::default(), &library, 2);
    let frame = render_scene(&spec, &library, "bench")?.frame;
    let wb = compute_wb(&frame, plate)?;
    let r = time_pipeline(&frame, &wb, &model, &PipelineParams::default(), iterations, 10)?;

    println!("{:<22}{:>10}{:>10}", "stage", "mean ms", "sd ms");
    for s in &r.stages {
        println!("{:<22}{:>10.3}{:>10.3}", s.stage, s.mean_ms, s.sd_ms);
    }
    println!("{:<22}{:>10.3}{:>10.3}", "total", r.total_mean_ms, r.total_sd_ms);
    println!("{}x{}, {} iterations: {:.1} fps, stage sum off by {:.2}%", r.width, r.height, r.iterations, r.fps, 100.0 * r.stage_sum_error());
    Ok(())
}
