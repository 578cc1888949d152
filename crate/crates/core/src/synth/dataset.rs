use serde::{Deserialize, Serialize};

use super::band::band_vector;
use super::library::{Curve, Illuminant, MaterialSignature};
use crate::error::{Error, Result};
use crate::formats::LabelTable;
use crate::mlp::{SpectralDataset, TrainConfig};
use crate::radiometry::PixelSpectrum;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_per_material: usize,
    /// Additive Gaussian noise per band, in reflectance units.
    pub noise_sigma: f64,
    /// Draw a luminance factor per sample from the training config's range.
    pub augment: bool,
    /// Flat grey patches added as extra non-organic background.
    pub chart_levels: Vec<f64>,
    pub out_dim: usize,
    pub band_centers_nm: Vec<f32>,
    pub band_fwhm_nm: Vec<f32>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_per_material: 1000,
            noise_sigma: 0.01,
            augment: true,
            chart_levels: vec![0.05, 0.2, 0.35, 0.5, 0.65, 0.8],
            out_dim: 41,
            band_centers_nm: crate::DEFAULT_BAND_CENTERS_NM.to_vec(),
            band_fwhm_nm: crate::DEFAULT_BAND_FWHM_NM.to_vec(),
        }
    }
}

fn chart_patches(levels: &[f64]) -> Result<Vec<MaterialSignature>> {
    levels
        .iter()
        .map(|&v| MaterialSignature::new(&format!("chart_{:03}", (v * 100.0).round() as i64), false, "non_organic", Curve::flat(v)))
        .collect()
}

/// Labelled 4-band spectra drawn from material signatures.
///
/// Clothing materials map to their own classes, backgrounds to their shared
/// classes; the label table is padded to `out_dim`. Each sample is the
/// material's band vector, times a luminance factor in
/// `[train.aug_min, train.aug_max]` when `augment` is on, plus noise.
pub fn generate_training_set(
    materials: &[MaterialSignature],
    illuminant: &Illuminant,
    cfg: &DatasetConfig,
    train: &TrainConfig,
    seed: u64,
) -> Result<SpectralDataset> {
    let mut all: Vec<MaterialSignature> = materials.to_vec();
    all.extend(chart_patches(&cfg.chart_levels)?);
    if !all.iter().any(|m| m.is_clothing) || all.iter().all(|m| m.is_clothing) {
        return Err(Error::DegenerateDataset(
            "need at least one clothing and one background material".into(),
        ));
    }
    let mut clothing: Vec<&str> = Vec::new();
    let mut background: Vec<&str> = Vec::new();
    for m in &all {
        let list = if m.is_clothing { &mut clothing } else { &mut background };
        if !list.contains(&m.class.as_str()) {
            list.push(&m.class);
        }
    }
    if let Some(c) = clothing.iter().find(|c| background.contains(c)) {
        return Err(Error::DegenerateDataset(format!("class '{c}' is both clothing and background")));
    }
    let labels = LabelTable::from_categories(&clothing, &background, cfg.out_dim)?;

    let mut rng = SplitMix64::new(seed);
    let mut samples = Vec::with_capacity(all.len() * cfg.n_per_material);
    for m in &all {
        let base = band_vector(m, illuminant, &cfg.band_centers_nm, &cfg.band_fwhm_nm)?;
        let label = labels.index_of(&m.class).expect("class was registered");
        for _ in 0..cfg.n_per_material {
            let factor = if cfg.augment {
                rng.uniform(train.aug_min, train.aug_max)
            } else {
                1.0
            };
            let x = base
                .iter()
                .map(|v| {
                    let noise = if cfg.noise_sigma > 0.0 { cfg.noise_sigma * rng.normal() } else { 0.0 };
                    (v * factor + noise).max(0.0)
                })
                .collect();
            samples.push((PixelSpectrum(x), label));
        }
    }
    SpectralDataset::new(samples, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::library::{builtin_library, find_material};

    fn two_materials() -> Vec<MaterialSignature> {
        let lib = builtin_library();
        vec![
            find_material(&lib, "cotton_red").unwrap().clone(),
            find_material(&lib, "soil").unwrap().clone(),
        ]
    }

    #[test]
    fn counts() {
        let cfg = DatasetConfig {
            n_per_material: 100,
            chart_levels: vec![],
            ..Default::default()
        };
        let ds = generate_training_set(&two_materials(), &Illuminant::daylight(), &cfg, &TrainConfig::default(), 1).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.labels.len(), 41);
        assert_eq!(ds.labels.names()[0], "cotton_red");
        assert_eq!(ds.labels.names()[40], "non_organic");
    }

    #[test]
    fn no_noise_no_aug_is_constant_per_material() {
        let cfg = DatasetConfig {
            n_per_material: 20,
            noise_sigma: 0.0,
            augment: false,
            ..Default::default()
        };
        let ds = generate_training_set(&two_materials(), &Illuminant::daylight(), &cfg, &TrainConfig::default(), 1).unwrap();
        for chunk in ds.samples.chunks(20) {
            assert!(chunk.iter().all(|s| s == &chunk[0]));
        }
        assert_eq!(ds.len(), 20 * (2 + cfg.chart_levels.len()));
    }

    #[test]
    fn augmentation_stays_in_range() {
        let cfg = DatasetConfig {
            n_per_material: 500,
            noise_sigma: 0.0,
            chart_levels: vec![],
            ..Default::default()
        };
        let mats = two_materials();
        let il = Illuminant::daylight();
        let ds = generate_training_set(&mats, &il, &cfg, &TrainConfig::default(), 3).unwrap();
        let base = band_vector(&mats[0], &il, &cfg.band_centers_nm, &cfg.band_fwhm_nm).unwrap();
        let factors: Vec<f64> = ds.samples[..500].iter().map(|(x, _)| x.0[3] / base[3]).collect();
        assert!(factors.iter().all(|f| (0.68 - 1e-12..=1.46 + 1e-12).contains(f)));
        let lo = factors.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = factors.iter().cloned().fold(0.0, f64::max);
        assert!(lo < 0.72 && hi > 1.42);
    }

    #[test]
    fn needs_both_categories() {
        let lib = builtin_library();
        let only = vec![find_material(&lib, "denim").unwrap().clone()];
        let cfg = DatasetConfig {
            chart_levels: vec![],
            ..Default::default()
        };
        assert!(matches!(
            generate_training_set(&only, &Illuminant::daylight(), &cfg, &TrainConfig::default(), 0),
            Err(Error::DegenerateDataset(_))
        ));
    }
}
