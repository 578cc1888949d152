//! Balance a frame with a colour cast against the white plate in view and
//! save the gains as a sidecar.
//!
//! cargo run --example white_balance

use hitomi::radiometry::{apply_wb, compute_wb, region_means};
use hitomi::synth::{builtin_library, render_scene, SceneSpec, Shape};
use hitomi::BBox;

fn main() -> hitomi::Result<()> {
    let plate = BBox::new(4, 4, 20, 20);
    let mut spec = SceneSpec::new(64, 48, "soil")
        .with_shape("white_reference", Shape::Rectangle { x: 4, y: 4, w: 20, h: 20 })
        .with_shape("cotton_red", Shape::Rectangle { x: 30, y: 20, w: 20, h: 20 });
    spec.sensor_gains = Some(vec![0.8, 1.1, 1.0, 1.25]);
    let frame = render_scene(&spec, &builtin_library(), "cast")?.frame;

    println!("plate means before: {:.4?}", region_means(&frame, plate)?);
    let wb = compute_wb(&frame, plate)?;
    println!("gains {:.4?}, target {:.4}", wb.gains, wb.reference_target);
    let balanced = apply_wb(&frame, &wb)?;
    println!("plate means after:  {:.4?}", region_means(&balanced, plate)?);
    println!("red cloth after:    {:.4?}", region_means(&balanced, BBox::new(30, 20, 20, 20))?);

    let sidecar = std::env::temp_dir().join("hitomi-wb.json");
    wb.save(&sidecar)?;
    println!("sidecar: {}", std::fs::read_to_string(&sidecar).map_err(|e| hitomi::Error::io(&sidecar, e))?);
    Ok(())
}
