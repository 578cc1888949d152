use serde::{Deserialize, Serialize};

use super::band::band_vector;
use super::library::{builtin_illuminant, find_material, MaterialSignature, WHITE_REFERENCE};
use crate::error::{Error, Result};
use crate::formats::{BBox, GroundTruthBox, MultibandFrame};
use crate::pipeline::ClothingMap;
use crate::rng::{keyed_normal, SplitMix64};

/// Region of the image plane. A pixel belongs to a shape when its centre
/// `(x + 0.5, y + 0.5)` does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rectangle { x: i64, y: i64, w: i64, h: i64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64, angle_deg: f64 },
    /// Even-odd fill.
    Polygon { points: Vec<[f64; 2]> },
}

impl Shape {
    fn contains(&self, px: f64, py: f64) -> bool {
        match self {
            Shape::Rectangle { x, y, w, h } => {
                px >= *x as f64 && px < (x + w) as f64 && py >= *y as f64 && py < (y + h) as f64
            }
            Shape::Ellipse { cx, cy, rx, ry, angle_deg } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let (dx, dy) = (px - cx, py - cy);
                let u = dx * c + dy * s;
                let v = -dx * s + dy * c;
                (u / rx).powi(2) + (v / ry).powi(2) <= 1.0
            }
            Shape::Polygon { points } => {
                let mut inside = false;
                let n = points.len();
                for i in 0..n {
                    let [xi, yi] = points[i];
                    let [xj, yj] = points[(i + n - 1) % n];
                    if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    /// Real-valued extent `(x0, y0, x1, y1)`.
    fn extent(&self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Rectangle { x, y, w, h } => (*x as f64, *y as f64, (x + w) as f64, (y + h) as f64),
            Shape::Ellipse { cx, cy, rx, ry, angle_deg } => {
                let (s, c) = angle_deg.to_radians().sin_cos();
                let hx = ((rx * c).powi(2) + (ry * s).powi(2)).sqrt();
                let hy = ((rx * s).powi(2) + (ry * c).powi(2)).sqrt();
                (cx - hx, cy - hy, cx + hx, cy + hy)
            }
            Shape::Polygon { points } => points.iter().fold(
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
            ),
        }
    }

    fn validate(&self, width: usize, height: usize) -> Result<()> {
        let ok = match self {
            Shape::Rectangle { w, h, .. } => *w > 0 && *h > 0,
            Shape::Ellipse { cx, cy, rx, ry, angle_deg } => {
                *rx > 0.0 && *ry > 0.0 && [cx, cy, angle_deg].iter().all(|v| v.is_finite())
            }
            Shape::Polygon { points } => points.len() >= 3 && points.iter().flatten().all(|v| v.is_finite()),
        };
        if !ok {
            return Err(Error::Spec(format!("malformed shape {self:?}")));
        }
        let (x0, y0, x1, y1) = self.extent();
        let eps = 1e-9;
        if x0 < -eps || y0 < -eps || x1 > width as f64 + eps || y1 > height as f64 + eps {
            return Err(Error::Spec(format!("shape {self:?} leaves the {width}x{height} frame")));
        }
        Ok(())
    }

    /// Calls `f` for every covered pixel.
    fn for_each_pixel(&self, width: usize, height: usize, mut f: impl FnMut(usize, usize)) {
        let (x0, y0, x1, y1) = self.extent();
        let xa = (x0.floor().max(0.0)) as usize;
        let ya = (y0.floor().max(0.0)) as usize;
        let xb = (x1.ceil().max(0.0) as usize).min(width);
        let yb = (y1.ceil().max(0.0) as usize).min(height);
        for y in ya..yb {
            for x in xa..xb {
                if self.contains(x as f64 + 0.5, y as f64 + 0.5) {
                    f(x, y);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedShape {
    pub material: String,
    pub shape: Shape,
}

/// Multiplies pixel intensities under `shape` by `factor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadePatch {
    pub shape: Shape,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: String,
    /// Drawn in order; later shapes cover earlier ones.
    #[serde(default)]
    pub shapes: Vec<PlacedShape>,
    #[serde(default = "default_illuminant")]
    pub illuminant: String,
    #[serde(default)]
    pub shading: Vec<ShadePatch>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Per-band sensor sensitivity; a colour cast for white balance to undo.
    #[serde(default)]
    pub sensor_gains: Option<Vec<f64>>,
}

fn default_illuminant() -> String {
    "daylight".into()
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, background: &str) -> Self {
        Self {
            width,
            height,
            background: background.into(),
            shapes: Vec::new(),
            illuminant: default_illuminant(),
            shading: Vec::new(),
            noise_sigma: 0.0,
            seed: 0,
            sensor_gains: None,
        }
    }

    pub fn with_shape(mut self, material: &str, shape: Shape) -> Self {
        self.shapes.push(PlacedShape {
            material: material.into(),
            shape,
        });
        self
    }
}

#[derive(Debug, Clone)]
pub struct RenderedScene {
    pub frame: MultibandFrame,
    pub ground_truth: Vec<GroundTruthBox>,
    /// `true` where a clothing material is visible.
    pub oracle_mask: ClothingMap,
}

/// Renders a 4-band frame with the prototype's band set.
///
/// Pixel value = band response of the visible material × sensor gain ×
/// shading + N(0, noise_sigma), clamped at zero. Noise is keyed by pixel
/// position, so the result does not depend on traversal order.
pub fn render_scene(spec: &SceneSpec, library: &[MaterialSignature], frame_id: &str) -> Result<RenderedScene> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 {
        return Err(Error::Spec("scene has zero size".into()));
    }
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(Error::Spec(format!("noise_sigma {} invalid", spec.noise_sigma)));
    }
    let centers = crate::DEFAULT_BAND_CENTERS_NM;
    let fwhm = crate::DEFAULT_BAND_FWHM_NM;
    let bands = centers.len();
    let gains = spec.sensor_gains.clone().unwrap_or_else(|| vec![1.0; bands]);
    if gains.len() != bands || gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Spec(format!("sensor_gains {gains:?} invalid")));
    }
    let illuminant = builtin_illuminant(&spec.illuminant)?;

    // Material 0 is the background, i + 1 is shape i.
    let mut materials = vec![find_material(library, &spec.background)?];
    for s in &spec.shapes {
        s.shape.validate(w, h)?;
        materials.push(find_material(library, &s.material)?);
    }
    let responses: Vec<Vec<f64>> = materials
        .iter()
        .map(|m| band_vector(m, &illuminant, &centers, &fwhm))
        .collect::<Result<_>>()?;

    let mut owner = vec![0usize; w * h];
    for (i, s) in spec.shapes.iter().enumerate() {
        s.shape.for_each_pixel(w, h, |x, y| owner[y * w + x] = i + 1);
    }
    let mut shade = vec![1.0f64; w * h];
    for p in &spec.shading {
        if !(p.factor > 0.0 && p.factor <= 1.0) {
            return Err(Error::Spec(format!("shading factor {} outside (0, 1]", p.factor)));
        }
        p.shape.validate(w, h)?;
        p.shape.for_each_pixel(w, h, |x, y| shade[y * w + x] *= p.factor);
    }

    let n = w * h;
    let mut data = vec![0.0f32; n * bands];
    for b in 0..bands {
        for p in 0..n {
            let mut v = responses[owner[p]][b] * gains[b] * shade[p];
            if spec.noise_sigma > 0.0 {
                v += spec.noise_sigma * keyed_normal(spec.seed, (p * bands + b) as u64);
            }
            data[b * n + p] = v.max(0.0) as f32;
        }
    }
    let frame = MultibandFrame::new(w, h, centers.to_vec(), fwhm.to_vec(), data)?;

    let oracle_mask = ClothingMap::new(w, h, owner.iter().map(|&o| materials[o].is_clothing).collect())?;
    let mut bounds: Vec<Option<(usize, usize, usize, usize)>> = vec![None; spec.shapes.len() + 1];
    for y in 0..h {
        for x in 0..w {
            let o = owner[y * w + x];
            let b = bounds[o].get_or_insert((x, y, x, y));
            *b = (b.0.min(x), b.1.min(y), b.2.max(x), b.3.max(y));
        }
    }
    let ground_truth = (1..=spec.shapes.len())
        .filter(|&o| materials[o].is_clothing)
        .filter_map(|o| bounds[o])
        .map(|(x0, y0, x1, y1)| GroundTruthBox {
            frame_id: frame_id.to_string(),
            bbox: BBox::new(x0 as i64, y0 as i64, (x1 - x0 + 1) as i64, (y1 - y0 + 1) as i64),
        })
        .collect();
    Ok(RenderedScene {
        frame,
        ground_truth,
        oracle_mask,
    })
}

/// Knobs for [`random_sar_scene`].
#[derive(Debug, Clone, PartialEq)]
pub struct SarSceneConfig {
    pub width: usize,
    pub height: usize,
    pub max_noise_sigma: f64,
    pub min_people: usize,
    pub max_people: usize,
    pub distractors: usize,
    /// Lower bound of the shadow factor; `None` disables shading.
    pub shadow_min: Option<f64>,
    /// Sensor gains are drawn from `1 ± cast`.
    pub cast: f64,
    /// Side of the white plate placed in the top-left corner.
    pub plate: usize,
}

impl Default for SarSceneConfig {
    fn default() -> Self {
        Self {
            width: crate::DEFAULT_WIDTH,
            height: crate::DEFAULT_HEIGHT,
            max_noise_sigma: 0.02,
            min_people: 1,
            max_people: 3,
            distractors: 3,
            shadow_min: Some(0.8),
            cast: 0.15,
            plate: 14,
        }
    }
}

fn random_shape(rng: &mut SplitMix64, cx: f64, cy: f64, radius: f64) -> Shape {
    match rng.below(3) {
        0 => {
            let rx = radius * rng.uniform(0.5, 1.0);
            let ry = radius * rng.uniform(0.5, 1.0);
            Shape::Ellipse {
                cx,
                cy,
                rx,
                ry,
                angle_deg: rng.uniform(0.0, 180.0),
            }
        }
        1 => {
            let k = 5 + rng.below(5);
            let phase = rng.uniform(0.0, std::f64::consts::TAU);
            let points = (0..k)
                .map(|i| {
                    let a = phase + std::f64::consts::TAU * i as f64 / k as f64;
                    let r = radius * rng.uniform(0.55, 1.0);
                    [cx + r * a.cos(), cy + r * a.sin()]
                })
                .collect();
            Shape::Polygon { points }
        }
        _ => {
            let hw = (radius * rng.uniform(0.5, 1.0)).max(3.0);
            let hh = (radius * rng.uniform(0.5, 1.0)).max(3.0);
            Shape::Rectangle {
                x: (cx - hw).round() as i64,
                y: (cy - hh).round() as i64,
                w: (2.0 * hw).round() as i64,
                h: (2.0 * hh).round() as i64,
            }
        }
    }
}

/// Clothing on the ground in cluttered surroundings: irregular polygons,
/// rotated ellipses and rectangles of random fabrics, background distractor
/// patches, an optional shadow, sensor colour cast and noise. Returns the
/// spec and the white-plate rectangle to balance with.
pub fn random_sar_scene(cfg: &SarSceneConfig, library: &[MaterialSignature], seed: u64) -> (SceneSpec, BBox) {
    let mut rng = SplitMix64::new(seed);
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let clothing: Vec<&MaterialSignature> = library.iter().filter(|m| m.is_clothing).collect();
    let backgrounds: Vec<&MaterialSignature> = library
        .iter()
        .filter(|m| !m.is_clothing && m.name != WHITE_REFERENCE)
        .collect();
    let ground = backgrounds[rng.below(backgrounds.len())].name.clone();
    let mut spec = SceneSpec::new(cfg.width, cfg.height, &ground);
    spec.seed = rng.next_u64();
    spec.noise_sigma = rng.uniform(0.0, cfg.max_noise_sigma);
    spec.sensor_gains = Some((0..4).map(|_| rng.uniform(1.0 - cfg.cast, 1.0 + cfg.cast)).collect());

    let plate = BBox::new(0, 0, cfg.plate as i64, cfg.plate as i64);
    let keep_out = cfg.plate as f64 + 8.0;

    for _ in 0..cfg.distractors {
        let m = backgrounds[rng.below(backgrounds.len())];
        let r = rng.uniform(10.0, 35.0);
        let cx = rng.uniform(r, w - r);
        let cy = rng.uniform(r, h - r);
        if cx - r < keep_out && cy - r < keep_out {
            continue;
        }
        spec.shapes.push(PlacedShape {
            material: m.name.clone(),
            shape: random_shape(&mut rng, cx, cy, r),
        });
    }

    let people = cfg.min_people + rng.below(cfg.max_people - cfg.min_people + 1);
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut attempts = 0;
    while placed.len() < people && attempts < 200 {
        attempts += 1;
        let r = rng.uniform(10.0, 24.0);
        let cx = rng.uniform(r + 1.0, w - r - 1.0);
        let cy = rng.uniform(r + 1.0, h - r - 1.0);
        if cx - r < keep_out && cy - r < keep_out {
            continue;
        }
        // Keep fabrics apart so closing never fuses two of them.
        if placed.iter().any(|&(x, y, q)| (x - cx).hypot(y - cy) < r + q + 10.0) {
            continue;
        }
        placed.push((cx, cy, r));
        let m = clothing[rng.below(clothing.len())];
        spec.shapes.push(PlacedShape {
            material: m.name.clone(),
            shape: random_shape(&mut rng, cx, cy, r),
        });
    }

    spec.shapes.push(PlacedShape {
        material: WHITE_REFERENCE.into(),
        shape: Shape::Rectangle {
            x: plate.x,
            y: plate.y,
            w: plate.w,
            h: plate.h,
        },
    });

    if let Some(lo) = cfg.shadow_min {
        let x0 = rng.uniform(keep_out, w * 0.6);
        let y0 = rng.uniform(0.0, h * 0.5);
        let sw = rng.uniform(w * 0.2, w - x0);
        let sh = rng.uniform(h * 0.2, h - y0);
        spec.shading.push(ShadePatch {
            shape: Shape::Rectangle {
                x: x0 as i64,
                y: y0 as i64,
                w: sw as i64,
                h: sh as i64,
            },
            factor: rng.uniform(lo, 0.95),
        });
    }
    (spec, plate)
}
