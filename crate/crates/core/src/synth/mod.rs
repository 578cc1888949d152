//! Synthetic stand-ins for the camera and the spectral measurement campaign.
//!
//! Materials are stylised reflectance curves; a band value is the
//! illuminant-weighted mean reflectance under a Gaussian filter model
//! (`σ = FWHM / 2.3548`), integrated at 1 nm steps over ±3σ. Scenes are
//! composed from shapes of those materials, and labelled training spectra
//! are drawn from the same curves.

mod band;
mod dataset;
mod library;
mod scene;

pub use band::{band_response, band_vector, FWHM_TO_SIGMA};
pub use dataset::{generate_training_set, DatasetConfig};
pub use library::{
    builtin_illuminant, builtin_library, find_material, Curve, Illuminant, MaterialSignature,
    WHITE_REFERENCE,
};
pub use scene::{
    random_sar_scene, render_scene, PlacedShape, RenderedScene, SarSceneConfig, SceneSpec,
    ShadePatch, Shape,
};
