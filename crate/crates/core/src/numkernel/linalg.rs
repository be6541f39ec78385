//! Dense SPD kernels: Cholesky with pivot reporting, squared Mahalanobis
//! distances, det-1 shape normalization and weighted moments.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative pivot floor below which a matrix is treated as numerically singular.
const PIVOT_FLOOR: f64 = 1e-13;

/// An `n x p` sample with `n >= p + 1`, `p >= 2` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, p) = values.shape();
        if p < 2 {
            return Err(Error::InvalidData(format!("dimension p = {p}, need p >= 2")));
        }
        if n < p + 1 {
            return Err(Error::InvalidData(format!(
                "n = {n} observations in dimension {p}, need n >= p + 1"
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (idx % n, idx / n);
            return Err(Error::InvalidData(format!("non-finite entry at row {r}, column {c}")));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::InvalidData(format!(
                "row {bad} has {} columns, expected {p}",
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    #[inline]
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.values.row(i).transpose()
    }

    /// Rows restricted to `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> DMatrix<f64> {
        self.values.select_rows(idx)
    }

    /// The image `x -> A x + b` of every row.
    pub fn affine_map(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let mut values = &self.values * a.transpose();
        for mut row in values.row_iter_mut() {
            row += b.transpose();
        }
        Self::new(values)
    }
}

/// Location plus scatter split into a det-1 shape and a positive size, so the
/// full scatter matrix is `size * shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationScatter {
    pub mu: DVector<f64>,
    pub shape: DMatrix<f64>,
    pub size: f64,
}

impl LocationScatter {
    /// Builds an estimate from a location and an arbitrary SPD scatter matrix.
    pub fn from_scatter(mu: DVector<f64>, scatter: &DMatrix<f64>) -> Result<Self> {
        let (shape, size) = normalize_shape(scatter)?;
        Ok(Self { mu, shape, size })
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.mu.len()
    }

    /// Full scatter matrix `size * shape`.
    pub fn scatter(&self) -> DMatrix<f64> {
        &self.shape * self.size
    }

    pub fn with_size(mut self, size: f64) -> Self {
        self.size = size;
        self
    }

    /// Estimate mapped by `x -> A x + b`: `(A mu + b, A Sigma A')`.
    pub fn affine_map(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        let mu = a * &self.mu + b;
        let scatter = a * self.scatter() * a.transpose();
        Self::from_scatter(mu, &symmetrize(scatter))
    }
}

/// Squared Mahalanobis distances, one per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceVector(pub Vec<f64>);

impl DistanceVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self(self.0.iter().map(|d| d * k).collect())
    }
}

impl From<Vec<f64>> for DistanceVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Lower Cholesky factor of an SPD matrix.
///
/// Fails with [`Error::SingularScatter`] carrying the offending pivot when a
/// pivot is non-positive, non-finite, or below a relative floor.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::Domain(format!("cholesky of a {}x{} matrix", p, a.ncols())));
    }
    let mut l = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        let floor = PIVOT_FLOOR * a[(j, j)].abs();
        if !diag.is_finite() || diag <= floor {
            return Err(Error::SingularScatter { pivot: diag });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Log-determinant from a Cholesky factor.
pub fn log_det_from_cholesky(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn spd_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cholesky(a)?;
    let p = a.nrows();
    let linv = l
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::SingularScatter { pivot: 0.0 })?;
    Ok(linv.transpose() * linv)
}

/// Averages `a` with its transpose.
pub fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    let t = a.transpose();
    (a + t) * 0.5
}

/// Squared distances of the rows of `x` from `mu` in the metric of `scatter`,
/// using one factorization for all rows.
pub fn mahalanobis_raw(
    x: &DMatrix<f64>,
    mu: &DVector<f64>,
    scatter: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let l = cholesky(scatter)?;
    Ok(mahalanobis_with_factor(x, mu, &l))
}

/// Squared distances given the lower Cholesky factor of the scatter.
pub fn mahalanobis_with_factor(x: &DMatrix<f64>, mu: &DVector<f64>, l: &DMatrix<f64>) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut centered_t = DMatrix::<f64>::zeros(p, n);
    for i in 0..n {
        for j in 0..p {
            centered_t[(j, i)] = x[(i, j)] - mu[j];
        }
    }
    l.solve_lower_triangular_mut(&mut centered_t);
    centered_t
        .column_iter()
        .map(|c| c.norm_squared())
        .collect()
}

/// Squared Mahalanobis distances of every row of `x` w.r.t. `est`.
///
/// With `use_size` the full scatter `size * shape` is used, otherwise the
/// det-1 shape alone.
pub fn mahalanobis(x: &DataMatrix, est: &LocationScatter, use_size: bool) -> Result<DistanceVector> {
    let mut d = mahalanobis_raw(x.values(), &est.mu, &est.shape)?;
    if use_size {
        let inv = 1.0 / est.size;
        d.iter_mut().for_each(|v| *v *= inv);
    }
    Ok(DistanceVector(d))
}

/// Splits an SPD matrix into `(shape, size)` with `det(shape) = 1` and
/// `size = det(S)^(1/p)`.
pub fn normalize_shape(s: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let p = s.nrows();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateScatter("non-finite scatter entry".into()));
    }
    let l = cholesky(s).map_err(|e| match e {
        Error::SingularScatter { pivot } => Error::DegenerateScatter(format!(
            "scatter is not positive definite (pivot {pivot:.3e})"
        )),
        other => other,
    })?;
    let log_det = log_det_from_cholesky(&l);
    let size = (log_det / p as f64).exp();
    if !(size.is_finite() && size > 0.0) {
        return Err(Error::DegenerateScatter(format!("det^(1/p) = {size}")));
    }
    Ok((s / size, size))
}

/// Weighted mean and weighted covariance `sum w_i (x_i - m)(x_i - m)' / sum w_i`.
pub fn weighted_moments(x: &DMatrix<f64>, w: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (n, p) = x.shape();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroWeights(format!("sum of weights is {total}")));
    }
    let mut mu = DVector::<f64>::zeros(p);
    for i in 0..n {
        if w[i] != 0.0 {
            for j in 0..p {
                mu[j] += w[i] * x[(i, j)];
            }
        }
    }
    mu /= total;
    let mut scaled = DMatrix::<f64>::zeros(n, p);
    let mut centered = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            let c = x[(i, j)] - mu[j];
            centered[(i, j)] = c;
            scaled[(i, j)] = w[i] * c;
        }
    }
    let cov = symmetrize(centered.transpose() * scaled) / total;
    Ok((mu, cov))
}

/// Sample mean and unbiased sample covariance.
pub fn sample_moments(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (n, p) = x.shape();
    let mu = DVector::from_fn(p, |j, _| x.column(j).mean());
    let mut centered = x.clone();
    for j in 0..p {
        let m = mu[j];
        centered.column_mut(j).iter_mut().for_each(|v| *v -= m);
    }
    let cov = symmetrize(centered.transpose() * &centered) / (n as f64 - 1.0);
    (mu, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_spd(p: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(p, p, |_, _| next());
        &a * a.transpose() + DMatrix::identity(p, p) * 0.5
    }

    #[test]
    fn identity_case_gives_zero_distances() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let est = LocationScatter {
            mu: DVector::from_vec(vec![1.0, 2.0]),
            shape: DMatrix::identity(2, 2),
            size: 1.0,
        };
        let d = mahalanobis(&x, &est, true).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_sphere_rows() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let est = LocationScatter {
            mu: DVector::zeros(2),
            shape: DMatrix::identity(2, 2),
            size: 1.0,
        };
        let d = mahalanobis(&x, &est, false).unwrap();
        assert_eq!(&d.as_slice()[..2], &[1.0, 1.0]);
    }

    #[test]
    fn distances_match_explicit_inverse() {
        let x = DMatrix::from_row_slice(
            5,
            3,
            &[
                0.3, -1.2, 2.0, 1.1, 0.4, -0.7, -2.2, 0.9, 0.1, 0.0, 0.5, 1.5, 3.1, -0.3, 0.2,
            ],
        );
        let x = DataMatrix::new(x).unwrap();
        let sigma = random_spd(3, 7);
        let mu = DVector::from_vec(vec![0.2, -0.1, 0.4]);
        let est = LocationScatter::from_scatter(mu.clone(), &sigma).unwrap();
        let d = mahalanobis(&x, &est, true).unwrap();
        let inv = sigma.clone().try_inverse().unwrap();
        for i in 0..x.n() {
            let r = x.row(i) - &mu;
            let oracle = (r.transpose() * &inv * &r)[(0, 0)];
            assert_relative_eq!(d.0[i], oracle, max_relative = 1e-10);
        }
    }

    #[test]
    fn normalize_shape_examples() {
        let (s, k) = normalize_shape(&DMatrix::identity(3, 3)).unwrap();
        assert_relative_eq!(s, DMatrix::identity(3, 3), epsilon = 1e-15);
        assert_relative_eq!(k, 1.0, epsilon = 1e-15);

        let (s, k) = normalize_shape(&(DMatrix::identity(2, 2) * 4.0)).unwrap();
        assert_relative_eq!(s, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(k, 4.0, epsilon = 1e-14);

        let (s, k) = normalize_shape(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))).unwrap();
        assert_relative_eq!(k, 2.0, epsilon = 1e-14);
        assert_relative_eq!(s[(0, 0)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(s[(1, 1)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn normalize_shape_is_idempotent_and_exact() {
        let a = random_spd(4, 3);
        let (shape, size) = normalize_shape(&a).unwrap();
        assert_relative_eq!(&shape * size, a, max_relative = 1e-12);
        let (again, unit) = normalize_shape(&shape).unwrap();
        assert_relative_eq!(unit, 1.0, epsilon = 1e-12);
        assert_relative_eq!(again, shape, max_relative = 1e-12);
        assert_relative_eq!(shape.determinant(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn non_spd_is_reported() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&bad) {
            Err(Error::SingularScatter { pivot }) => assert!(pivot < 0.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(normalize_shape(&bad), Err(Error::DegenerateScatter(_))));
    }

    #[test]
    fn data_matrix_validation() {
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0], vec![3.0], vec![2.0]]).is_err());
        assert!(
            DataMatrix::from_rows(&[vec![1.0, f64::NAN], vec![3.0, 4.0], vec![0.0, 1.0]]).is_err()
        );
    }

    #[test]
    fn weighted_moments_equal_weights_is_classical() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 1.0, 0.0, -1.0, 2.0, 2.0]);
        let (m1, c1) = weighted_moments(&x, &[2.0; 4]).unwrap();
        let (m2, c2) = sample_moments(&x);
        assert_relative_eq!(m1, m2, epsilon = 1e-14);
        assert_relative_eq!(c1 * 4.0 / 3.0, c2, epsilon = 1e-14);
    }
}
