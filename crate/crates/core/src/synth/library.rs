use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function of wavelength, held constant beyond its ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Curve {
    wavelengths: Vec<f64>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Spec("a curve needs at least two points".into()));
        }
        if points.windows(2).any(|p| !(p[1][0] > p[0][0])) {
            return Err(Error::Spec("curve wavelengths must be strictly increasing".into()));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Spec("curve has non-finite points".into()));
        }
        Ok(Self {
            wavelengths: points.iter().map(|p| p[0]).collect(),
            values: points.iter().map(|p| p[1]).collect(),
        })
    }

    /// Samples `f` at every `step` nm over `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = ((hi - lo) / step).round() as usize;
        let points = (0..=n)
            .map(|i| {
                let l = lo + i as f64 * step;
                [l, f(l)]
            })
            .collect();
        Self::new(points).expect("sampled curve is valid")
    }

    pub fn flat(value: f64) -> Self {
        Self::sample(400.0, 800.0, 10.0, |_| value)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.wavelengths[0], *self.wavelengths.last().unwrap())
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, wl: f64) -> f64 {
        let xs = &self.wavelengths;
        if wl <= xs[0] {
            return self.values[0];
        }
        if wl >= xs[xs.len() - 1] {
            return self.values[xs.len() - 1];
        }
        let i = xs.partition_point(|&x| x <= wl) - 1;
        let t = (wl - xs[i]) / (xs[i + 1] - xs[i]);
        self.values[i] + t * (self.values[i + 1] - self.values[i])
    }
}

impl TryFrom<Vec<[f64; 2]>> for Curve {
    type Error = Error;

    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        Curve::new(points)
    }
}

impl From<Curve> for Vec<[f64; 2]> {
    fn from(c: Curve) -> Self {
        c.wavelengths.into_iter().zip(c.values).map(|(a, b)| [a, b]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSignature {
    pub name: String,
    pub is_clothing: bool,
    /// Classifier category; clothing materials usually use their own name,
    /// backgrounds share `plant` or `non_organic`.
    pub class: String,
    pub reflectance: Curve,
}

impl MaterialSignature {
    pub fn new(name: &str, is_clothing: bool, class: &str, reflectance: Curve) -> Result<Self> {
        let m = Self {
            name: name.into(),
            is_clothing,
            class: class.into(),
            reflectance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.reflectance;
        let (lo, hi) = c.domain();
        if c.len() < 10 || lo > 400.0 || hi < 800.0 {
            return Err(Error::Spec(format!(
                "{}: reflectance needs at least 10 samples covering 400-800 nm",
                self.name
            )));
        }
        if c.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Spec(format!("{}: reflectance outside [0, 1]", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Illuminant {
    pub name: String,
    pub power: Curve,
    pub scale: f64,
}

impl Illuminant {
    pub fn new(name: &str, power: Curve, scale: f64) -> Result<Self> {
        if power.values().iter().any(|v| *v < 0.0) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Spec(format!("{name}: illuminant must be non-negative")));
        }
        Ok(Self {
            name: name.into(),
            power,
            scale,
        })
    }

    pub fn equal_energy() -> Self {
        Self::new("equal_energy", Curve::flat(1.0), 1.0).unwrap()
    }

    /// Black body at 6504 K normalised to 1 at 560 nm, a stand-in for
    /// outdoor daylight.
    pub fn daylight() -> Self {
        let planck = |nm: f64| {
            let l = nm * 1e-9;
            let c2 = 1.438_776_877e-2;
            1.0 / (l.powi(5) * ((c2 / (l * 6504.0)).exp() - 1.0))
        };
        let norm = planck(560.0);
        Self::new("daylight", Curve::sample(380.0, 820.0, 5.0, |nm| planck(nm) / norm), 1.0).unwrap()
    }
}

pub fn builtin_illuminant(name: &str) -> Result<Illuminant> {
    match name {
        "daylight" => Ok(Illuminant::daylight()),
        "equal_energy" | "flat" => Ok(Illuminant::equal_energy()),
        other => Err(Error::Spec(format!("unknown illuminant '{other}'"))),
    }
}

/// Flat reference material used for white balancing.
pub const WHITE_REFERENCE: &str = "white_reference";

fn sig(l: f64, center: f64, width: f64) -> f64 {
    1.0 / (1.0 + (-(l - center) / width).exp())
}

fn bump(l: f64, center: f64, sigma: f64) -> f64 {
    (-0.5 * ((l - center) / sigma).powi(2)).exp()
}

fn material(name: &str, is_clothing: bool, class: &str, f: impl Fn(f64) -> f64) -> MaterialSignature {
    MaterialSignature::new(name, is_clothing, class, Curve::sample(400.0, 800.0, 10.0, |l| f(l).clamp(0.0, 1.0)))
        .expect("builtin material is valid")
}

/// Stylised signatures: dyed fabrics stay reflective past ~700 nm whatever
/// their visible colour; vegetation shows a green bump and a later red edge;
/// mineral and man-made surfaces are flat or slowly rising; the blue tarp
/// peaks near 457 nm with little near-infrared return.
pub fn builtin_library() -> Vec<MaterialSignature> {
    vec![
        material("cotton_beige", true, "cotton_beige", |l| 0.28 + 0.12 * sig(l, 520.0, 30.0) + 0.40 * sig(l, 700.0, 15.0)),
        material("cotton_red", true, "cotton_red", |l| 0.06 + 0.40 * sig(l, 600.0, 12.0) + 0.35 * sig(l, 700.0, 15.0)),
        material("cotton_navy", true, "cotton_navy", |l| 0.05 + 0.12 * bump(l, 460.0, 35.0) + 0.65 * sig(l, 705.0, 15.0)),
        material("polyester_black", true, "polyester_black", |l| 0.04 + 0.50 * sig(l, 705.0, 15.0)),
        material("polyester_blue", true, "polyester_blue", |l| 0.06 + 0.30 * bump(l, 470.0, 40.0) + 0.65 * sig(l, 700.0, 15.0)),
        material("polyester_yellow", true, "polyester_yellow", |l| 0.08 + 0.50 * sig(l, 530.0, 15.0) + 0.30 * sig(l, 700.0, 15.0)),
        material("wool_grey", true, "wool_grey", |l| 0.20 + 0.02 * (l - 400.0) / 400.0 + 0.40 * sig(l, 700.0, 20.0)),
        material("wool_brown", true, "wool_brown", |l| 0.06 + 0.18 * sig(l, 600.0, 40.0) + 0.45 * sig(l, 700.0, 20.0)),
        material("denim", true, "denim", |l| 0.08 + 0.10 * bump(l, 470.0, 40.0) + 0.45 * sig(l, 690.0, 20.0)),
        material("nylon_orange", true, "nylon_orange", |l| 0.06 + 0.55 * sig(l, 580.0, 12.0) + 0.25 * sig(l, 700.0, 15.0)),
        material("vegetation", false, "plant", |l| 0.04 + 0.08 * bump(l, 555.0, 30.0) + 0.42 * sig(l, 725.0, 10.0)),
        material("dry_grass", false, "plant", |l| 0.10 + 0.22 * sig(l, 580.0, 60.0) + 0.08 * sig(l, 720.0, 20.0)),
        material("soil", false, "non_organic", |l| 0.08 + 0.22 * (l - 400.0) / 400.0),
        material("asphalt", false, "non_organic", |l| 0.06 + 0.02 * (l - 400.0) / 400.0),
        material("concrete", false, "non_organic", |l| 0.30 + 0.08 * (l - 400.0) / 400.0),
        material("blue_tarp", false, "non_organic", |l| 0.08 + 0.40 * bump(l, 460.0, 35.0) + 0.07 * sig(l, 700.0, 20.0)),
        material(WHITE_REFERENCE, false, "non_organic", |_| 0.95),
    ]
}

pub fn find_material<'a>(library: &'a [MaterialSignature], name: &str) -> Result<&'a MaterialSignature> {
    library
        .iter()
        .find(|m| m.name == name)
        .ok_or_else(|| Error::Spec(format!("unknown material '{name}'")))
}
