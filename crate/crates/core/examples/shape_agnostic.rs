//! Rotate and mirror a frame through all eight square symmetries and check
//! that the clothing map follows the frame exactly.
//!
//! cargo run --release --example shape_agnostic

use hitomi::mlp::train;
use hitomi::pipeline::{classify_frame, Dihedral};
use hitomi::radiometry::compute_wb;
use hitomi::synth::{builtin_library, generate_training_set, random_sar_scene, render_scene, DatasetConfig, Illuminant, SarSceneConfig};
use hitomi::TrainConfig;

fn main() -> hitomi::Result<()> {
    let library = builtin_library();
    let cfg = TrainConfig { seed: 5, ..TrainConfig::default() };
    let ds = generate_training_set(&library, &Illuminant::daylight(), &DatasetConfig::default(), &cfg, 5)?;
    let (model, _) = train(&ds, &cfg)?;

    let (spec, plate) = random_sar_scene(&SarSceneConfig::default(), &library, 11);
    let frame = render_scene(&spec, &library, "s")?.frame;
    let wb = compute_wb(&frame, plate)?;
    let base = classify_frame(&frame, &wb, &model)?;
    for t in Dihedral::ALL {
        let turned = classify_frame(&t.apply_frame(&frame)?, &wb, &model)?;
        let same = turned == t.apply_map(&base);
        println!("{t:?}: {}x{} map, {} clothing px, commutes: {same}", turned.width, turned.height, turned.count());
    }
    Ok(())
}
