use super::library::{Illuminant, MaterialSignature};
use crate::error::{Error, Result};

/// `σ = FWHM / (2·sqrt(2·ln 2))`.
pub const FWHM_TO_SIGMA: f64 = 2.3548;

/// Illuminant-weighted mean reflectance seen through a Gaussian band.
///
/// Sums over the 1 nm grid `center + k` for `|k| ≤ floor(3σ)`; the
/// illuminant appears in numerator and denominator so its scale cancels.
pub fn band_response(
    signature: &MaterialSignature,
    illuminant: &Illuminant,
    center_nm: f64,
    fwhm_nm: f64,
) -> Result<f64> {
    let (lo, hi) = signature.reflectance.domain();
    if !(center_nm >= lo && center_nm <= hi) {
        return Err(Error::Domain(format!(
            "band centre {center_nm} nm outside {}'s {lo}-{hi} nm",
            signature.name
        )));
    }
    if !(fwhm_nm > 0.0) {
        return Err(Error::Domain(format!("FWHM {fwhm_nm} must be positive")));
    }
    let sigma = fwhm_nm / FWHM_TO_SIGMA;
    let half = (3.0 * sigma).floor() as i64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in -half..=half {
        let l = center_nm + k as f64;
        let g = (-0.5 * (k as f64 / sigma).powi(2)).exp();
        let w = illuminant.scale * illuminant.power.eval(l) * g;
        num += w * signature.reflectance.eval(l);
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::Domain(format!("illuminant has no power near {center_nm} nm")));
    }
    Ok(num / den)
}

/// Responses for every band of a camera.
pub fn band_vector(
    signature: &MaterialSignature,
    illuminant: &Illuminant,
    centers_nm: &[f32],
    fwhm_nm: &[f32],
) -> Result<Vec<f64>> {
    centers_nm
        .iter()
        .zip(fwhm_nm)
        .map(|(&c, &f)| band_response(signature, illuminant, c as f64, f as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::library::{builtin_library, find_material, Curve};

    fn step_material() -> MaterialSignature {
        let mut pts: Vec<[f64; 2]> = (0..20).map(|i| [400.0 + 10.0 * i as f64, 0.0]).collect();
        pts.push([599.999, 0.0]);
        pts.push([600.0, 1.0]);
        pts.extend((61..=80).map(|i| [10.0 * i as f64, 1.0]));
        MaterialSignature::new("step", false, "x", Curve::new(pts).unwrap()).unwrap()
    }

    /// Independent quadrature: trapezoid at 0.01 nm over the same ±3σ span.
    fn fine_quadrature(m: &MaterialSignature, il: &Illuminant, c: f64, fwhm: f64) -> f64 {
        let sigma = fwhm / 2.3548;
        let span = (3.0 * sigma).floor();
        let n = (2.0 * span / 0.01).round() as usize;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..=n {
            let l = c - span + i as f64 * 0.01;
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            let g = (-0.5 * ((l - c) / sigma).powi(2)).exp();
            let w = wt * il.power.eval(l) * g;
            num += w * m.reflectance.eval(l);
            den += w;
        }
        num / den
    }

    #[test]
    fn flat_reflectance() {
        let m = MaterialSignature::new("grey", false, "x", Curve::flat(0.5)).unwrap();
        let il = Illuminant::equal_energy();
        for (c, f) in crate::DEFAULT_BAND_CENTERS_NM.iter().zip(crate::DEFAULT_BAND_FWHM_NM) {
            let r = band_response(&m, &il, *c as f64, f as f64).unwrap();
            assert!((r - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn step_edge() {
        let m = step_material();
        let il = Illuminant::equal_energy();
        let blue = band_response(&m, &il, 457.0, 36.0).unwrap();
        let nir = band_response(&m, &il, 735.0, 29.0).unwrap();
        assert!((blue - fine_quadrature(&m, &il, 457.0, 36.0)).abs() < 1e-3);
        assert!((nir - fine_quadrature(&m, &il, 735.0, 29.0)).abs() < 1e-3);
        assert!(blue.abs() < 1e-12);
        assert!((nir - 1.0).abs() < 1e-12);
        // Straddling the edge: half the Gaussian mass is above 600 nm.
        let mid = band_response(&m, &il, 600.0, 25.0).unwrap();
        assert!((mid - fine_quadrature(&m, &il, 600.0, 25.0)).abs() < 0.02, "{mid}");
    }

    #[test]
    fn builtin_curves_match_fine_quadrature() {
        let il = Illuminant::daylight();
        for m in builtin_library() {
            for (c, f) in crate::DEFAULT_BAND_CENTERS_NM.iter().zip(crate::DEFAULT_BAND_FWHM_NM) {
                let coarse = band_response(&m, &il, *c as f64, f as f64).unwrap();
                let fine = fine_quadrature(&m, &il, *c as f64, f as f64);
                assert!((coarse - fine).abs() < 2e-3, "{} @ {c}: {coarse} vs {fine}", m.name);
            }
        }
    }

    #[test]
    fn illuminant_scale_cancels() {
        let m = find_material(&builtin_library(), "cotton_red").unwrap().clone();
        let base = Illuminant::daylight();
        let r = band_response(&m, &base, 645.0, 21.0).unwrap();
        for s in [0.25, 4.0, 1024.0] {
            let scaled = Illuminant { scale: s, ..base.clone() };
            assert_eq!(band_response(&m, &scaled, 645.0, 21.0).unwrap(), r);
        }
        let odd = Illuminant { scale: 3.7, ..base };
        assert!((band_response(&m, &odd, 645.0, 21.0).unwrap() - r).abs() < 1e-14);
    }

    #[test]
    fn centre_outside_domain() {
        let m = step_material();
        assert!(matches!(
            band_response(&m, &Illuminant::equal_energy(), 950.0, 30.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vegetation_differs_from_clothing() {
        let lib = builtin_library();
        let il = Illuminant::equal_energy();
        let c = &crate::DEFAULT_BAND_CENTERS_NM;
        let f = &crate::DEFAULT_BAND_FWHM_NM;
        let veg = band_vector(find_material(&lib, "vegetation").unwrap(), &il, c, f).unwrap();
        for m in lib.iter().filter(|m| m.is_clothing) {
            let v = band_vector(m, &il, c, f).unwrap();
            let d = v.iter().zip(&veg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(d >= 0.05, "{} too close to vegetation: {d}", m.name);
        }
    }
}
