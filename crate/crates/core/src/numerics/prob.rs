use crate::error::{Error, Result};

/// Probabilities are clamped to this floor before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// Numerically stable softmax (max-subtracted).
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::Empty("softmax input"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// In-place variant used on the training hot path. Input must be non-empty.
#[inline]
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `-ln p[label]` with `p` clamped below at [`PROB_FLOOR`].
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs
        .get(label)
        .ok_or(Error::LabelOutOfRange { label, classes: probs.len() })?;
    if p.is_nan() {
        return Ok(f64::NAN);
    }
    Ok(-p.max(PROB_FLOOR).ln())
}

/// `ln Σ exp(x)`; returns `-inf` for an empty slice or all `-inf` entries.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in x.iter().enumerate().skip(1) {
        if v > x[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn softmax_examples() {
        assert!(close(&softmax(&[0.0, 0.0]).unwrap(), &[0.5, 0.5], 1e-15));
        let third = 1.0 / 3.0;
        assert!(close(&softmax(&[1000.0; 3]).unwrap(), &[third; 3], 1e-15));
        let p = softmax(&[1f64.ln(), 2f64.ln(), 3f64.ln()]).unwrap();
        assert!(close(&p, &[1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0], 1e-12));
        assert!(matches!(softmax(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = [0.25; 4];
        for label in 0..4 {
            assert!((cross_entropy(&uniform, label).unwrap() - 4f64.ln()).abs() < 1e-12);
        }
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1).unwrap(), 0.0);
        let ce = cross_entropy(&[0.7, 0.3], 1).unwrap();
        assert!((ce - 1.203973).abs() < 1e-6);
        assert!(matches!(
            cross_entropy(&[0.5, 0.5], 2),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
        // Floor keeps the loss finite.
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() - (-PROB_FLOOR.ln())).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0]), 0);
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 2]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            let p = softmax(&z).unwrap();
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn softmax_shift_invariant(z in prop::collection::vec(-50f64..50.0, 1..12), c in -100f64..100.0) {
            let a = softmax(&z).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let b = softmax(&shifted).unwrap();
            prop_assert!(close(&a, &b, 1e-12));
        }

        #[test]
        fn cross_entropy_non_negative(z in prop::collection::vec(-20f64..20.0, 2..8), pick in 0usize..8) {
            let p = softmax(&z).unwrap();
            let label = pick % p.len();
            let ce = cross_entropy(&p, label).unwrap();
            prop_assert!(ce >= 0.0);
            prop_assert_eq!(ce == 0.0, p[label] == 1.0);
        }
    }
}
