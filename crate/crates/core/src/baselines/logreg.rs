//! Multinomial logistic regression trained with the shared Adam optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dense;
use crate::numerics::{argmax, cross_entropy, softmax_in_place, Matrix, Rng};
use crate::training::{adam_step, AdamConfig, EarlyStopper, OptimizerState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub learning_rate: f64,
    /// Coefficient of `0.5 * l2 * ||W||²`; biases are not penalized.
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            l2: 1e-4,
            batch_size: 256,
            max_epochs: 500,
            patience: 20,
            min_delta: 1e-4,
            seed: 0,
        }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("logreg learning_rate {} must be finite and >= 0", self.learning_rate)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("logreg l2 {} must be finite and >= 0", self.l2)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("logreg batch_size and max_epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Softmax regression for one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    /// `classes × features`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Features stored row-wise as `(column, value)` pairs of the non-zeros.
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl SparseRows {
    fn new(x: &Matrix) -> Self {
        let rows = (0..x.rows())
            .map(|r| x.row(r).iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect())
            .collect();
        Self { rows, cols: x.cols() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogRegFit {
    pub epochs: usize,
    pub best_epoch: usize,
    /// Monitored loss (validation if given, else training) per epoch.
    pub losses: Vec<f64>,
}

impl LogReg {
    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn features(&self) -> usize {
        self.weight.cols()
    }

    fn logits_sparse(&self, x: &[(usize, f64)], z: &mut [f64]) {
        z.copy_from_slice(&self.bias);
        for (k, zk) in z.iter_mut().enumerate() {
            let w = self.weight.row(k);
            *zk += x.iter().map(|&(j, v)| w[j] * v).sum::<f64>();
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.features() {
            return Err(Error::Dimension(format!("logreg expects {} features, got {}", self.features(), x.len())));
        }
        let mut z = vec![0.0; self.classes()];
        self.weight.matvec_into(x, &mut z);
        z.iter_mut().zip(&self.bias).for_each(|(v, b)| *v += b);
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Arg-max class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    /// Mean cross-entropy and the gradient of the penalized objective.
    fn loss_and_grad(&self, data: &SparseRows, labels: &[usize], idx: &[usize], l2: f64, grad: &mut Dense) -> Result<f64> {
        grad.weight.fill(0.0);
        grad.bias.iter_mut().for_each(|b| *b = 0.0);
        let mut z = vec![0.0; self.classes()];
        let mut loss = 0.0;
        let scale = 1.0 / idx.len() as f64;
        for &i in idx {
            let x = &data.rows[i];
            self.logits_sparse(x, &mut z);
            softmax_in_place(&mut z);
            loss += cross_entropy(&z, labels[i])?;
            z[labels[i]] -= 1.0;
            for (k, &dz) in z.iter().enumerate() {
                let g = dz * scale;
                grad.bias[k] += g;
                let row = grad.weight.row_mut(k);
                for &(j, v) in x {
                    row[j] += g * v;
                }
            }
        }
        if l2 > 0.0 {
            for (g, w) in grad.weight.data_mut().iter_mut().zip(self.weight.data()) {
                *g += l2 * w;
            }
        }
        Ok(loss * scale)
    }

    fn mean_loss(&self, data: &SparseRows, labels: &[usize]) -> Result<f64> {
        let mut z = vec![0.0; self.classes()];
        let mut loss = 0.0;
        for (x, &y) in data.rows.iter().zip(labels) {
            self.logits_sparse(x, &mut z);
            softmax_in_place(&mut z);
            loss += cross_entropy(&z, y)?;
        }
        Ok(loss / labels.len() as f64)
    }

    /// Full-data gradient of the penalized objective, for convergence checks.
    pub fn gradient_norm(&self, x: &Matrix, labels: &[usize], l2: f64) -> Result<f64> {
        let data = SparseRows::new(x);
        let idx: Vec<usize> = (0..labels.len()).collect();
        let mut grad = Dense::zeros(self.classes(), self.features());
        self.loss_and_grad(&data, labels, &idx, l2, &mut grad)?;
        let sq: f64 = grad.weight.data().iter().chain(&grad.bias).map(|g| g * g).sum();
        Ok(sq.sqrt())
    }
}

fn check_labels(x: &Matrix, labels: &[usize], classes: usize) -> Result<()> {
    if x.rows() != labels.len() {
        return Err(Error::Dimension(format!("{} feature rows but {} labels", x.rows(), labels.len())));
    }
    if let Some(&label) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    x.ensure_finite("logreg features")
}

/// Fits one softmax regression from zero initialization.
///
/// Early stopping monitors the validation loss when `val` is given and
/// the training loss otherwise; the best epoch is restored.
pub fn fit_logreg(
    x: &Matrix,
    labels: &[usize],
    classes: usize,
    val: Option<(&Matrix, &[usize])>,
    cfg: &LogRegConfig,
) -> Result<(LogReg, LogRegFit)> {
    cfg.validate()?;
    if labels.is_empty() {
        return Err(Error::Empty("logreg training set"));
    }
    if classes == 0 {
        return Err(Error::Config("logreg needs at least one class".into()));
    }
    check_labels(x, labels, classes)?;
    let train = SparseRows::new(x);
    let val = match val {
        Some((vx, vy)) => {
            check_labels(vx, vy, classes)?;
            if vx.cols() != x.cols() {
                return Err(Error::Dimension("validation features differ in width".into()));
            }
            Some((SparseRows::new(vx), vy))
        }
        None => None,
    };
    debug_assert!(val.as_ref().is_none_or(|(v, _)| v.cols == train.cols));

    let mut params = Dense::zeros(classes, x.cols());
    let mut model = LogReg { weight: params.weight.clone(), bias: params.bias.clone() };
    let monitor = |m: &LogReg| match &val {
        Some((vx, vy)) => m.mean_loss(vx, vy),
        None => m.mean_loss(&train, labels),
    };
    let mut stopper = EarlyStopper::new(cfg.patience, cfg.min_delta, monitor(&model)?);
    let mut best = model.clone();
    let mut state = OptimizerState::new(&params);
    let mut grad = Dense::zeros(classes, x.cols());
    let adam = AdamConfig::default();
    let shuffle = Rng::new(cfg.seed).stream("logreg.shuffle");
    let mut losses = Vec::new();
    let mut order: Vec<usize> = (0..labels.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        shuffle.substream(epoch as u64).shuffle(&mut order);
        for chunk in order.chunks(cfg.batch_size) {
            let loss = model.loss_and_grad(&train, labels, chunk, cfg.l2, &mut grad)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, detail: format!("logreg batch loss {loss}") });
            }
            adam_step(&mut params, &grad, &mut state, cfg.learning_rate, &adam)?;
            model.weight.data_mut().copy_from_slice(params.weight.data());
            model.bias.copy_from_slice(&params.bias);
        }
        let loss = monitor(&model)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, detail: format!("logreg monitored loss {loss}") });
        }
        losses.push(loss);
        let (new_best, stop) = stopper.observe(epoch, loss);
        if new_best {
            best = model.clone();
        }
        if stop {
            break;
        }
    }
    let fit = LogRegFit { epochs: losses.len(), best_epoch: stopper.best_epoch, losses };
    Ok((best, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_blobs(n: usize, offset: f64, rng: &mut Rng) -> (Matrix, Vec<usize>) {
        let mut x = Matrix::zeros(n, 2);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let c = i % 2;
            let sign = if c == 0 { -1.0 } else { 1.0 };
            // Means at ±offset along the diagonal, identity covariance.
            let m = sign * offset / 2f64.sqrt();
            x.set(i, 0, m + rng.normal());
            x.set(i, 1, m + rng.normal());
            y.push(c);
        }
        (x, y)
    }

    fn accuracy(m: &LogReg, x: &Matrix, y: &[usize]) -> f64 {
        let hits = (0..x.rows()).filter(|&i| m.predict(x.row(i)).unwrap() == y[i]).count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 0.0], vec![3.0, 1.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let cfg = LogRegConfig { batch_size: 4, max_epochs: 300, learning_rate: 0.1, ..LogRegConfig::default() };
        let (m, _) = fit_logreg(&x, &y, 2, None, &cfg).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn identical_features_predict_majority() {
        let x = Matrix::from_rows(&vec![vec![1.0, 2.0]; 10]).unwrap();
        let y = [2, 0, 2, 1, 2, 2, 0, 2, 1, 2];
        let (m, _) = fit_logreg(&x, &y, 3, None, &LogRegConfig { batch_size: 10, ..LogRegConfig::default() }).unwrap();
        assert_eq!(m.predict(&[1.0, 2.0]).unwrap(), 2);
        let p = m.predict_proba(&[1.0, 2.0]).unwrap();
        assert!((p[2] - 0.6).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn gaussian_accuracy_near_bayes_rate() {
        // Equal priors, unit covariance, means 2 apart: Bayes accuracy is Φ(1).
        const PHI_1: f64 = 0.841_344_746_068_542_9;
        let mut rng = Rng::new(5).stream("blobs");
        let (x, y) = gaussian_blobs(200, 1.0, &mut rng);
        let (tx, ty) = gaussian_blobs(40_000, 1.0, &mut rng);
        let (m, _) = fit_logreg(&x, &y, 2, None, &LogRegConfig::default()).unwrap();
        let acc = accuracy(&m, &tx, &ty);
        assert!((acc - PHI_1).abs() < 0.02, "{acc}");
    }

    #[test]
    fn converges_on_toy_problem() {
        let mut rng = Rng::new(9).stream("blobs");
        let (x, y) = gaussian_blobs(60, 1.0, &mut rng);
        let cfg = LogRegConfig { batch_size: 60, max_epochs: 5000, patience: 5000, ..LogRegConfig::default() };
        let (m, fit) = fit_logreg(&x, &y, 2, None, &cfg).unwrap();
        let g = m.gradient_norm(&x, &y, cfg.l2).unwrap();
        assert!(g < 1e-3, "gradient norm {g} after {} epochs", fit.epochs);
    }

    #[test]
    fn best_epoch_is_loss_minimum() {
        let mut rng = Rng::new(3).stream("blobs");
        let (x, y) = gaussian_blobs(100, 1.0, &mut rng);
        let (vx, vy) = gaussian_blobs(50, 1.0, &mut rng);
        let cfg = LogRegConfig { batch_size: 16, max_epochs: 40, patience: 5, ..LogRegConfig::default() };
        let (m, fit) = fit_logreg(&x, &y, 2, Some((&vx, &vy)), &cfg).unwrap();
        let min = fit.losses.iter().copied().fold(f64::INFINITY, f64::min);
        let data = SparseRows::new(&vx);
        assert_eq!(m.mean_loss(&data, &vy).unwrap(), min.min(2f64.ln()));
    }

    #[test]
    fn rejects_bad_input() {
        let x = Matrix::zeros(2, 2);
        assert!(fit_logreg(&x, &[0, 2], 2, None, &LogRegConfig::default()).is_err());
        assert!(fit_logreg(&x, &[0], 2, None, &LogRegConfig::default()).is_err());
        let mut bad = Matrix::zeros(2, 2);
        bad.set(0, 0, f64::NAN);
        assert!(fit_logreg(&bad, &[0, 1], 2, None, &LogRegConfig::default()).is_err());
    }
}
