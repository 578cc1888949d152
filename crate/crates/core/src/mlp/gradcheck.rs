use super::model::MlpModel;
use crate::radiometry::PixelSpectrum;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / max(|analytic| + |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    /// Largest plain `|analytic − numeric|`.
    pub max_abs_error: f64,
    pub checked: usize,
    /// Parameters whose ±h probe crossed a ReLU kink; finite differences are
    /// meaningless there.
    pub skipped_kinks: usize,
}

/// Compares backprop gradients of the mean cross-entropy on `batch` with
/// central finite differences over every parameter.
pub fn grad_check(model: &MlpModel, batch: &[(PixelSpectrum, usize)]) -> GradCheckReport {
    let refs: Vec<(&[f64], usize)> = batch.iter().map(|(x, y)| (x.values(), *y)).collect();
    let (_, grads) = model.loss_and_grad(&refs);
    let analytic = grads.flatten();
    let base_pattern: Vec<Vec<bool>> = refs.iter().map(|(x, _)| model.activation_pattern(x)).collect();

    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
    };
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.param_mut(i);
        let mut eval = |delta: f64| {
            *probe.param_mut(i) = original + delta;
            let loss = probe.loss(&refs);
            let same = refs
                .iter()
                .zip(&base_pattern)
                .all(|((x, _), p)| probe.activation_pattern(x) == *p);
            (loss, same)
        };
        let (plus, same_plus) = eval(FD_STEP);
        let (minus, same_minus) = eval(-FD_STEP);
        *probe.param_mut(i) = original;
        if !(same_plus && same_minus) {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let abs = (a - numeric).abs();
        let rel = abs / (a.abs() + numeric.abs()).max(1e-8);
        report.max_abs_error = report.max_abs_error.max(abs);
        report.max_rel_error = report.max_rel_error.max(rel);
        report.checked += 1;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::LabelTable;
    use crate::rng::SplitMix64;

    fn labels(c: usize) -> LabelTable {
        let names = (0..c).map(|i| format!("l{i}")).collect();
        let mut flags = vec![true; c];
        flags[0] = false;
        LabelTable::new(names, flags).unwrap()
    }

    fn random_batch(rng: &mut SplitMix64, n: usize, classes: usize) -> Vec<(PixelSpectrum, usize)> {
        (0..n)
            .map(|_| {
                let x = (0..4).map(|_| rng.uniform(0.0, 1.0)).collect();
                (PixelSpectrum(x), rng.below(classes))
            })
            .collect()
    }

    #[test]
    fn random_model_passes() {
        let mut rng = SplitMix64::new(8);
        let model = MlpModel::standard(labels(5), 21);
        let batch = random_batch(&mut rng, 6, 5);
        let r = grad_check(&model, &batch);
        assert!(r.max_rel_error < 1e-4, "{r:?}");
        assert_eq!(r.checked + r.skipped_kinks, model.param_count());
        assert!(r.checked > model.param_count() / 2);
    }

    #[test]
    fn zero_model_bias_gradients() {
        let model = MlpModel::zeros(4, &[16, 8], labels(4)).unwrap();
        let batch = vec![(PixelSpectrum(vec![0.0; 4]), 2), (PixelSpectrum(vec![0.0; 4]), 1)];
        let r = grad_check(&model, &batch);
        assert!(r.max_abs_error < 1e-6, "{r:?}");
        // Output bias gradient is mean(softmax − onehot): uniform softmax 1/4.
        let refs: Vec<(&[f64], usize)> = batch.iter().map(|(x, y)| (x.values(), *y)).collect();
        let (_, g) = model.loss_and_grad(&refs);
        let expected = [0.25, -0.25, -0.25, 0.25];
        for (a, b) in g.bias[2].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeatable() {
        let mut rng = SplitMix64::new(2);
        let model = MlpModel::standard(labels(3), 5);
        let batch = random_batch(&mut rng, 4, 3);
        assert_eq!(grad_check(&model, &batch), grad_check(&model, &batch));
    }
}
