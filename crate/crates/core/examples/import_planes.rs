//! Stack four grayscale band images into an HMC1 frame and read it back.
//!
//! cargo run --example import_planes -- [b0.png b1.png b2.png b3.png]

use std::path::PathBuf;

use hitomi::formats::{import_band_planes, read_frame, write_frame};
use hitomi::{DEFAULT_BAND_CENTERS_NM, DEFAULT_BAND_FWHM_NM};

fn main() -> hitomi::Result<()> {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let dir = std::env::temp_dir().join("hitomi-planes");
    if paths.is_empty() {
        // No input: make four gradient planes to import.
        std::fs::create_dir_all(&dir).map_err(|e| hitomi::Error::io(&dir, e))?;
        for b in 0..4u32 {
            let img = image::GrayImage::from_fn(64, 48, |x, y| image::Luma([((x * 4 + y * b) % 256) as u8]));
            let p = dir.join(format!("band{b}.png"));
            img.save(&p).map_err(|e| hitomi::Error::Image { path: p.clone(), message: e.to_string() })?;
            paths.push(p);
        }
    }
    let frame = import_band_planes(&paths, &DEFAULT_BAND_CENTERS_NM, &DEFAULT_BAND_FWHM_NM)?;
    println!("{}x{} with {} bands at {:?} nm", frame.width(), frame.height(), frame.bands(), frame.band_centers_nm());
    for b in 0..frame.bands() {
        let band = frame.band(b);
        let mean = band.iter().map(|&v| v as f64).sum::<f64>() / band.len() as f64;
        println!("band {b}: mean {mean:.4}");
    }
    let out = dir.join("stacked.hmc");
    std::fs::create_dir_all(&dir).map_err(|e| hitomi::Error::io(&dir, e))?;
    write_frame(&frame, &out)?;
    assert_eq!(read_frame(&out)?, frame);
    println!("round-tripped through {}", out.display());
    Ok(())
}
