use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const STD_FLOOR: f64 = 1e-8;

/// Per-dimension z-scoring fitted on the training split (population std).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn fit<'a, I>(rows: I, dim: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        if rows.is_empty() {
            return Err(Error::Empty("normalizer training rows"));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            if r.len() != dim {
                return Err(Error::Dimension(format!("numeric row of {} values, expected {dim}", r.len())));
            }
            for (m, v) in mean.iter_mut().zip(*r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(*r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn two_values() {
        let rows = [vec![0.0, 5.0], vec![2.0, 5.0]];
        let n = Normalizer::fit(rows.iter().map(Vec::as_slice), 2).unwrap();
        assert_eq!(n.mean, vec![1.0, 5.0]);
        assert_eq!(n.std[0], 1.0);
        assert_eq!(n.std[1], STD_FLOOR);
        assert_eq!(n.apply(&rows[0]), vec![-1.0, 0.0]);
        assert_eq!(n.apply(&rows[1]), vec![1.0, 0.0]);
    }

    #[test]
    fn moments_after_normalization() {
        let mut rng = Rng::new(8);
        let rows: Vec<Vec<f64>> =
            (0..500).map(|_| vec![3.0 + 2.0 * rng.normal(), -1.0 + 0.1 * rng.normal()]).collect();
        let n = Normalizer::fit(rows.iter().map(Vec::as_slice), 2).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| n.apply(r)).collect();
        for d in 0..2 {
            let m = z.iter().map(|r| r[d]).sum::<f64>() / 500.0;
            let v = z.iter().map(|r| (r[d] - m).powi(2)).sum::<f64>() / 500.0;
            assert!(m.abs() < 1e-10);
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_dim_is_noop_and_empty_is_error() {
        let rows = [vec![], vec![]];
        let n = Normalizer::fit(rows.iter().map(Vec::as_slice), 0).unwrap();
        assert_eq!(n.dim(), 0);
        assert!(Normalizer::fit(std::iter::empty(), 3).is_err());
    }
}
