use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

/// Fitted principal component projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × d`, orthonormal rows sorted by decreasing variance.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    /// Number of components asked for before clamping.
    pub requested: usize,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Projects a single row into component space.
    pub fn project_row(&self, x: &[f64], out: &mut [f64]) {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.components.matvec_into(&centered, out);
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, z: &Matrix) -> Result<Matrix> {
        let mut x = z.matmul(&self.components)?;
        for r in 0..x.rows() {
            for (v, m) in x.row_mut(r).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(x)
    }
}

/// Sample covariance (denominator `N - 1`) and column means.
///
/// Zero entries are skipped while accumulating `XᵀX`, which makes sparse
/// rows such as token distributions cheap.
pub fn covariance(x: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Degenerate(format!("covariance needs at least 2 rows, got {n}")));
    }
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut gram = Matrix::zeros(d, d);
    let mut nz: Vec<(usize, f64)> = Vec::with_capacity(d);
    for r in 0..n {
        nz.clear();
        nz.extend(x.row(r).iter().copied().enumerate().filter(|&(_, v)| v != 0.0));
        for &(i, vi) in &nz {
            let row = gram.row_mut(i);
            for &(j, vj) in &nz {
                row[j] += vi * vj;
            }
        }
    }
    let scale = 1.0 / (n as f64 - 1.0);
    for i in 0..d {
        for j in 0..d {
            let v = (gram.get(i, j) - n as f64 * mean[i] * mean[j]) * scale;
            gram.set(i, j, v);
        }
    }
    gram.ensure_finite("covariance")?;
    Ok((gram, mean))
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in decreasing order and the matching eigenvectors as
/// the rows of a matrix. Eigenvalue ties keep their diagonal order.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!("eigen needs a square matrix, got {}x{}", n, a.cols())));
    }
    a.ensure_finite("eigen input")?;
    let mut m = a.clone();
    // Columns of `v` are eigenvectors; stored transposed (row k = vector k) to
    // keep the per-rotation update contiguous.
    let mut vt = Matrix::identity(n);

    let total: f64 = m.data().iter().map(|x| x * x).sum();
    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q) * m.get(p, q);
            }
        }
        if off == 0.0 || off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let g = 100.0 * apq.abs();
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m.set(p, q, 0.0);
                    m.set(q, p, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, p, q, c, s);
                // Accumulate V ← V·J on the transposed storage (rows p, q).
                let (rp, rq) = two_rows(&mut vt, p, q);
                for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).unwrap().then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.row_mut(dst).copy_from_slice(vt.row(src));
    }
    Ok((values, vectors))
}

/// Applies `A ← Jᵀ A J` for the rotation in plane `(p, q)`.
fn rotate(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows();
    // Columns p, q.
    for k in 0..n {
        let akp = m.get(k, p);
        let akq = m.get(k, q);
        m.set(k, p, c * akp - s * akq);
        m.set(k, q, s * akp + c * akq);
    }
    // Rows p, q.
    let (rp, rq) = two_rows(m, p, q);
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
}

fn two_rows(m: &mut Matrix, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let cols = m.cols();
    let (head, tail) = m.data_mut().split_at_mut(q * cols);
    (&mut head[p * cols..(p + 1) * cols], &mut tail[..cols])
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits PCA with `k` clamped to `min(k, N - 1, d)`.
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaModel> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::Degenerate(format!("PCA needs at least 2 rows, got {n}")));
    }
    let d = x.cols();
    let kept = k.min(n - 1).min(d);
    let (cov, mean) = covariance(x)?;
    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut components = Matrix::zeros(kept, d);
    for i in 0..kept {
        let row = components.row_mut(i);
        row.copy_from_slice(vectors.row(i));
        let norm = dot(row, row).sqrt();
        row.iter_mut().for_each(|v| *v /= norm);
        normalize_sign(row);
    }
    let explained_variance = values[..kept].iter().map(|v| v.max(0.0)).collect();
    Ok(PcaModel { mean, components, explained_variance, requested: k })
}

/// `(x - mean) · componentsᵀ`.
pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    if x.cols() != model.dim() {
        return Err(Error::Dimension(format!(
            "PCA fitted on {} columns, got {}",
            model.dim(),
            x.cols()
        )));
    }
    let k = model.n_components();
    let mut out = Matrix::zeros(x.rows(), k);
    for r in 0..x.rows() {
        model.project_row(x.row(r), out.row_mut(r));
    }
    out.ensure_finite("pca_transform")?;
    Ok(out)
}
