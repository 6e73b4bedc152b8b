//! k-nearest-neighbors on standardized features.

use nalgebra::DMatrix;

/// Stored training data (already standardized) plus class indices.
pub struct KnnModel {
    x: DMatrix<f64>,
    y: Vec<usize>,
    n_classes: usize,
}

impl KnnModel {
    /// "Fitting" is just storing the data.
    pub fn fit(x: &DMatrix<f64>, y: &[usize], n_classes: usize) -> KnnModel {
        KnnModel {
            x: x.clone(),
            y: y.to_vec(),
            n_classes,
        }
    }

    /// Vote fractions of the `k` nearest training rows (squared Euclidean
    /// distance; ties broken by training index, so results are independent
    /// of any internal ordering). `k` is capped at the training size.
    pub fn score(&self, queries: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
        let n_train = self.x.nrows();
        let k = k.min(n_train).max(1);
        let mut scores = DMatrix::zeros(queries.nrows(), self.n_classes);
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n_train);
        for qi in 0..queries.nrows() {
            dist.clear();
            for ti in 0..n_train {
                let mut d2 = 0.0;
                for j in 0..self.x.ncols() {
                    let diff = queries[(qi, j)] - self.x[(ti, j)];
                    d2 += diff * diff;
                }
                dist.push((d2, ti));
            }
            dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let w = 1.0 / k as f64;
            for &(_, ti) in dist.iter().take(k) {
                scores[(qi, self.y[ti])] += w;
            }
        }
        scores
    }
}
