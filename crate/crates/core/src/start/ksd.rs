//! Kurtosis plus specific directions (KSD): projection outlyingness over
//! `2p` extremal-kurtosis directions and random hyperplane normals, followed
//! by hard rejection. The search is repeated on the least outlying half of
//! the data until that half stops changing.
//!
//! All searches run on the data whitened by the sample mean and covariance.
//! Whitening maps an affine image of the data to a rotation of the same
//! whitened cloud, and every step below (starting points, Newton and
//! gradient updates, deflation) commutes with rotations, so the resulting
//! outlyingness values are affine invariant.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{size_from_median, StartConfig};
use crate::error::{Error, Result};
use crate::numkernel::linalg::{cholesky, mahalanobis_raw, sample_moments, weighted_moments};
use crate::numkernel::{chi2_median, chi2_quantile, median, normalize_shape, rng_stream, stream_key, DataMatrix, LocationScatter};

/// Consistency factor turning the MAD into a normal standard deviation.
pub const MAD_CONSISTENCY: f64 = 0.6745;

const RESTARTS: usize = 3;
const MOVE_TOL: f64 = 1e-8;
const MAX_STEPS: usize = 200;
const RELAX_FACTOR: f64 = 1.5;
const MAX_RELAX: usize = 20;
const MAX_PASSES: usize = 5;
/// Chi-square quantile of the default flagging cutoff, set so that the
/// start keeps its usual efficiency on normal data.
const CUTOFF_QUANTILE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionKind {
    MaxKurtosis,
    MinKurtosis,
    Specific,
    Subsample,
}

/// A unit projection direction with the median and normalized MAD of the
/// projected sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub u: DVector<f64>,
    pub center: f64,
    pub spread: f64,
    pub kind: DirectionKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub dirs: Vec<Direction>,
    /// Directions discarded because their projections had zero MAD.
    pub dropped_zero_spread: usize,
    /// Kurtosis directions not produced because the deflated data lost rank.
    pub missing_kurtosis: usize,
}

impl DirectionSet {
    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Builds a set from raw (not necessarily unit) directions, computing the
    /// projection median and MAD on `x`.
    pub fn from_directions(x: &DataMatrix, raw: Vec<(DVector<f64>, DirectionKind)>) -> Self {
        let mut set = DirectionSet::default();
        for (v, kind) in raw {
            let norm = v.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                set.dropped_zero_spread += 1;
                continue;
            }
            let u = v / norm;
            let proj = x.values() * &u;
            let center = median(proj.as_slice()).unwrap_or(0.0);
            let abs_dev: Vec<f64> = proj.iter().map(|v| (v - center).abs()).collect();
            let spread = median(&abs_dev).unwrap_or(0.0) / MAD_CONSISTENCY;
            let scale = proj.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if spread > 1e-12 * scale {
                set.dirs.push(Direction { u, center, spread, kind });
            } else {
                set.dropped_zero_spread += 1;
            }
        }
        set
    }

    /// Outlyingness `max_k |u_k'x_i − center_k| / spread_k` of every row of `x`.
    pub fn outlyingness(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let n = x.nrows();
        let mut out = vec![0.0f64; n];
        for dir in &self.dirs {
            let proj = x * &dir.u;
            for (o, v) in out.iter_mut().zip(proj.iter()) {
                let r = (v - dir.center).abs() / dir.spread;
                if r > *o {
                    *o = r;
                }
            }
        }
        out
    }
}

/// Data whitened by the sample mean and the Cholesky factor of the sample
/// covariance, with the factor kept to map directions back.
pub struct Whitened {
    pub z: DMatrix<f64>,
    pub chol: DMatrix<f64>,
}

pub fn whiten(x: &DataMatrix) -> Result<Whitened> {
    let (mu, cov) = sample_moments(x.values());
    let chol = cholesky(&cov).map_err(|e| match e {
        Error::SingularScatter { pivot } => Error::DegenerateScatter(format!(
            "sample covariance is singular (pivot {pivot:.3e})"
        )),
        other => other,
    })?;
    let (n, p) = (x.n(), x.p());
    let mut zt = DMatrix::<f64>::zeros(p, n);
    for i in 0..n {
        for j in 0..p {
            zt[(j, i)] = x.values()[(i, j)] - mu[j];
        }
    }
    chol.solve_lower_triangular_mut(&mut zt);
    Ok(Whitened { z: zt.transpose(), chol })
}

impl Whitened {
    /// Direction in the original coordinates whose projections are affine in
    /// the projections of the whitened data on `u`.
    pub fn to_original(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut a = u.clone();
        self.chol.transpose().solve_upper_triangular_mut(&mut a);
        a
    }
}

/// Kurtosis coefficient `m4 / m2²` of the projections of centered data.
pub fn projection_kurtosis(z: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let y = z * u;
    let m2 = y.iter().map(|v| v * v).sum::<f64>();
    let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>();
    y.len() as f64 * m4 / (m2 * m2)
}

/// Kurtosis with its Euclidean gradient and Hessian in `u`.
fn kurtosis_derivatives(z: &DMatrix<f64>, u: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
    let (n, p) = z.shape();
    let nf = n as f64;
    let y = z * u;
    let m2 = y.iter().map(|v| v * v).sum::<f64>() / nf;
    let m4 = y.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
    let y3 = y.map(|v| v * v * v);
    let g2 = z.transpose() * &y * (2.0 / nf);
    let g4 = z.transpose() * &y3 * (4.0 / nf);
    let k = m4 / (m2 * m2);
    let grad = &g4 / (m2 * m2) - &g2 * (2.0 * m4 / (m2 * m2 * m2));
    // Hessians of the moments
    let mut zw2 = z.clone();
    for i in 0..n {
        let w = 12.0 * y[i] * y[i] / nf;
        zw2.row_mut(i).scale_mut(w);
    }
    let h4 = z.transpose() * zw2;
    let h2 = z.transpose() * z * (2.0 / nf);
    let m2s = m2 * m2;
    let hess = &h4 / m2s
        - (&g4 * g2.transpose() + &g2 * g4.transpose()) * (2.0 / (m2s * m2))
        + &g2 * g2.transpose() * (6.0 * m4 / (m2s * m2s))
        - &h2 * (2.0 * m4 / (m2s * m2));
    debug_assert_eq!(hess.shape(), (p, p));
    (k, grad, hess)
}

fn project_out(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for b in basis {
        let c = b.dot(v);
        v.axpy(-c, b, 1.0);
    }
}

/// Local optimization of the projection kurtosis on the unit sphere of the
/// orthogonal complement of `fixed`, from `start`. `sign = 1` maximizes,
/// `sign = -1` minimizes.
fn optimize_direction(
    z: &DMatrix<f64>,
    fixed: &[DVector<f64>],
    start: DVector<f64>,
    sign: f64,
) -> (DVector<f64>, f64) {
    let p = z.ncols();
    let mut u = start;
    project_out(&mut u, fixed);
    u.normalize_mut();
    let mut step: f64 = 1.0;
    let mut value = projection_kurtosis(z, &u);
    for _ in 0..MAX_STEPS {
        let (_, grad, hess) = kurtosis_derivatives(z, &u);
        let mut constraint: Vec<DVector<f64>> = fixed.to_vec();
        constraint.push(u.clone());
        let mut rgrad = grad.clone();
        project_out(&mut rgrad, &constraint);
        if rgrad.norm() < 1e-14 {
            break;
        }
        // Riemannian Hessian on the tangent space: P (H − (u'g) I) P
        let ug = u.dot(&grad);
        let mut proj = DMatrix::<f64>::identity(p, p);
        for c in &constraint {
            proj -= c * c.transpose();
        }
        let rhess = &proj * (&hess - DMatrix::identity(p, p) * ug) * &proj;
        // For ascent of sign·k we need −sign·rhess positive definite on the tangent space.
        let system = -&rhess * sign + (DMatrix::identity(p, p) - &proj);
        let newton = cholesky(&system).ok().map(|l| {
            let rhs = &rgrad * sign;
            let mut xi = l.solve_lower_triangular(&rhs).unwrap_or(rhs.clone());
            l.transpose().solve_upper_triangular_mut(&mut xi);
            xi
        });

        let mut accepted = None;
        if let Some(xi) = newton {
            let mut cand = &u + &xi;
            project_out(&mut cand, fixed);
            cand.normalize_mut();
            let v = projection_kurtosis(z, &cand);
            if sign * (v - value) >= -1e-14 * value.abs() {
                accepted = Some((cand, v));
            }
        }
        if accepted.is_none() {
            // backtracking gradient step along the retraction
            let dir = &rgrad * sign / rgrad.norm();
            let slope = rgrad.norm();
            let mut s = (step * 2.0).min(1.0);
            while s > 1e-12 {
                let mut cand = &u + &dir * s;
                project_out(&mut cand, fixed);
                cand.normalize_mut();
                let v = projection_kurtosis(z, &cand);
                if sign * (v - value) >= 1e-4 * s * slope {
                    accepted = Some((cand, v));
                    break;
                }
                s *= 0.5;
            }
            step = s;
        }
        let Some((cand, v)) = accepted else { break };
        let moved = (&cand - &u).norm();
        u = cand;
        value = v;
        if moved < MOVE_TOL {
            break;
        }
    }
    (u, value)
}

/// Whitened rows with the largest norms, normalized, as starting points.
fn starting_points(z: &DMatrix<f64>, k: usize) -> Vec<DVector<f64>> {
    let norms: Vec<f64> = z.row_iter().map(|r| r.norm_squared()).collect();
    let scale = norms.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut order: Vec<usize> = (0..z.nrows()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take_while(|&i| norms[i] > 1e-20 * scale.max(1e-300))
        .take(k)
        .map(|i| z.row(i).transpose().normalize())
        .collect()
}

/// Two groups of up to `p` mutually orthogonal whitened directions: local
/// maximizers and local minimizers of the projection kurtosis, each found
/// after deflating the previously found directions.
pub fn kurtosis_search(z: &DMatrix<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let group = |sign: f64| -> Vec<DVector<f64>> {
        let p = z.ncols();
        let mut found: Vec<DVector<f64>> = Vec::with_capacity(p);
        let mut deflated = z.clone();
        for _ in 0..p {
            let starts = starting_points(&deflated, RESTARTS);
            if starts.is_empty() {
                break;
            }
            let mut best: Option<(DVector<f64>, f64)> = None;
            for s in starts {
                let (u, v) = optimize_direction(&deflated, &found, s, sign);
                if best.as_ref().is_none_or(|(_, bv)| sign * (v - bv) > 0.0) {
                    best = Some((u, v));
                }
            }
            let (mut u, _) = best.expect("nonempty starts");
            project_out(&mut u, &found);
            project_out(&mut u, &found);
            u.normalize_mut();
            let proj = &deflated * &u;
            deflated -= proj * u.transpose();
            found.push(u);
        }
        found
    };
    (group(1.0), group(-1.0))
}

/// Indices of the `h` whitened rows closest to a concentrated center: start
/// from the mean, take the `h` closest rows, recenter on their mean, and
/// repeat until the subset is stable.
fn inner_subset(z: &DMatrix<f64>, h: usize) -> Vec<usize> {
    let (n, p) = z.shape();
    let mut center = DVector::<f64>::zeros(p);
    let mut subset: Vec<usize> = Vec::new();
    for _ in 0..50 {
        let d: Vec<f64> = z.row_iter().map(|r| (r.transpose() - &center).norm_squared()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        let mut next = order[..h].to_vec();
        next.sort_unstable();
        if next == subset {
            break;
        }
        subset = next;
        center = subset.iter().fold(DVector::zeros(p), |acc, &i| acc + z.row(i).transpose()) / h as f64;
    }
    subset
}

/// Normals of hyperplanes through `p` random whitened points of the inner
/// subset. A cluster of outliers inflates the sample covariance along its
/// direction, so after whitening the clean points form a thin slab
/// orthogonal to it. The concentrated inner subset is mostly clean, and
/// hyperplanes through its points tend to lie along the slab.
fn specific_directions<R: Rng>(z: &DMatrix<f64>, count: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let (n, p) = z.shape();
    let h = ((n + p + 1) / 2).min(n);
    let inner = inner_subset(z, h);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let pick = rand::seq::index::sample(rng, inner.len(), p).into_vec();
        let base = z.row(inner[pick[0]]);
        let diffs = DMatrix::from_fn(p, p - 1, |r, c| z[(inner[pick[c + 1]], r)] - base[r]);
        if let Some(normal) = null_vector(&diffs) {
            out.push(normal);
        }
    }
    out
}

/// Default number of specific directions for dimension `p`.
pub fn default_specific_count(p: usize) -> usize {
    (5 * p).max(100)
}

/// The KSD direction set: `p` max-kurtosis and `p` min-kurtosis directions
/// plus the configured number of specific directions.
pub fn kurtosis_directions(x: &DataMatrix, cfg: &StartConfig) -> Result<DirectionSet> {
    let (raw, missing) = pass_directions(x, cfg, cfg.stream)?;
    let mut set = DirectionSet::from_directions(x, raw);
    set.missing_kurtosis = missing;
    Ok(set)
}

fn pass_directions(x: &DataMatrix, cfg: &StartConfig, stream: u64) -> Result<(Vec<(DVector<f64>, DirectionKind)>, usize)> {
    let (n, p) = (x.n(), x.p());
    if n < p + 2 {
        return Err(Error::InvalidData(format!("KSD needs n >= p + 2 (n = {n}, p = {p})")));
    }
    let w = whiten(x)?;
    let (maxd, mind) = kurtosis_search(&w.z);
    let missing = 2 * p - maxd.len() - mind.len();
    let count = cfg.ksd_specific_directions.unwrap_or_else(|| default_specific_count(p));
    let mut rng = rng_stream(cfg.seed, stream);
    let spec = specific_directions(&w.z, count, &mut rng);

    let raw = maxd
        .iter()
        .map(|u| (w.to_original(u), DirectionKind::MaxKurtosis))
        .chain(mind.iter().map(|u| (w.to_original(u), DirectionKind::MinKurtosis)))
        .chain(spec.iter().map(|u| (w.to_original(u), DirectionKind::Specific)))
        .collect();
    Ok((raw, missing))
}

/// Directions of the iterated search. The first pass runs on the full
/// sample. Each further pass recomputes the KSD directions on the `h` points
/// of lowest outlyingness under all directions found so far: a cluster too
/// large to change the kurtosis of the full sample is diluted in that subset
/// and shows up as an extremal-kurtosis direction there. Stops when the
/// subset repeats or after `MAX_PASSES`. Returns the union of all passes
/// with medians and MADs taken on the full sample, and the pass count.
pub fn iterated_directions(x: &DataMatrix, cfg: &StartConfig) -> Result<(DirectionSet, usize)> {
    let (n, p) = (x.n(), x.p());
    let h = (n + p + 1) / 2;
    let (mut raw, mut missing) = pass_directions(x, cfg, cfg.stream)?;
    let mut set = DirectionSet::from_directions(x, raw.clone());
    let mut passes = 1;
    let mut active: Vec<usize> = Vec::new();
    while passes < MAX_PASSES && h >= p + 2 {
        let ol = set.outlyingness(x.values());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ol[a].total_cmp(&ol[b]).then(a.cmp(&b)));
        let mut next = order[..h].to_vec();
        next.sort_unstable();
        if next == active {
            break;
        }
        active = next;
        let sub = DataMatrix::new(x.select_rows(&active))?;
        let Ok((dirs, miss)) = pass_directions(&sub, cfg, stream_key(&[cfg.stream, passes as u64])) else {
            break;
        };
        passes += 1;
        missing += miss;
        raw.extend(dirs);
        set = DirectionSet::from_directions(x, raw.clone());
    }
    set.missing_kurtosis = missing;
    Ok((set, passes))
}

/// Diagnostics of a KSD start.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsdFit {
    pub estimate: LocationScatter,
    pub directions: DirectionSet,
    pub outlyingness: Vec<f64>,
    pub weights: Vec<f64>,
    /// Outlyingness cutoff finally applied.
    pub cutoff: f64,
    pub relaxations: usize,
    /// Direction-search passes run.
    pub passes: usize,
}

/// Default hard-rejection cutoff on the outlyingness:
/// `OL² > χ²_p(0.95) · median(OL²) / median(χ²_p)`.
pub fn default_cutoff(outlyingness: &[f64], p: usize) -> Result<f64> {
    let sq: Vec<f64> = outlyingness.iter().map(|v| v * v).collect();
    let med = median(&sq).unwrap_or(0.0);
    let q = chi2_quantile(p, CUTOFF_QUANTILE)?;
    Ok((q * med / chi2_median(p)).sqrt())
}

pub fn ksd_fit(x: &DataMatrix, cfg: &StartConfig) -> Result<KsdFit> {
    let (directions, passes) = iterated_directions(x, cfg)?;
    if directions.is_empty() {
        return Err(Error::StartFailure("no usable KSD directions".into()));
    }
    let (n, p) = (x.n(), x.p());
    let ol = directions.outlyingness(x.values());
    let mut cutoff = match cfg.ksd_cutoff_beta {
        Some(beta) => beta,
        None => default_cutoff(&ol, p)?,
    };
    let mut relaxations = 0;
    loop {
        let weights: Vec<f64> = ol.iter().map(|&o| if o <= cutoff { 1.0 } else { 0.0 }).collect();
        let kept = weights.iter().filter(|&&w| w > 0.0).count();
        let fitted = if kept > p {
            weighted_moments(x.values(), &weights).and_then(|(mu, cov)| {
                let (shape, _) = normalize_shape(&cov)?;
                Ok((mu, shape))
            })
        } else {
            Err(Error::StartFailure(format!("{kept} points retained of {n}")))
        };
        match fitted {
            Ok((mu, shape)) => {
                let d = mahalanobis_raw(x.values(), &mu, &shape)?;
                let size = size_from_median(median(&d).unwrap_or(0.0), p)?;
                return Ok(KsdFit {
                    estimate: LocationScatter { mu, shape, size },
                    directions,
                    outlyingness: ol,
                    weights,
                    cutoff,
                    relaxations,
                    passes,
                });
            }
            Err(e) if relaxations >= MAX_RELAX => {
                return Err(Error::StartFailure(format!(
                    "KSD still degenerate after {relaxations} cutoff relaxations: {e}"
                )))
            }
            Err(_) => {
                cutoff *= RELAX_FACTOR;
                relaxations += 1;
            }
        }
    }
}

/// KSD start: the estimate and the direction set for reuse by Stahel–Donoho.
pub fn ksd_start(x: &DataMatrix, cfg: &StartConfig) -> Result<(LocationScatter, DirectionSet)> {
    let fit = ksd_fit(x, cfg)?;
    Ok((fit.estimate, fit.directions))
}

/// Normals of hyperplanes through `p` random observations, `count` of them.
pub fn subsample_directions(x: &DataMatrix, count: usize, seed: u64, stream: u64) -> DirectionSet {
    let (n, p) = (x.n(), x.p());
    let mut rng = rng_stream(seed, stream);
    let mut raw = Vec::with_capacity(count);
    for _ in 0..count {
        let idx = rand::seq::index::sample(&mut rng, n, p).into_vec();
        let base = x.row(idx[0]);
        let diffs = DMatrix::from_fn(p, p - 1, |r, c| x.values()[(idx[c + 1], r)] - base[r]);
        if let Some(normal) = null_vector(&diffs) {
            raw.push((normal, DirectionKind::Subsample));
        }
    }
    DirectionSet::from_directions(x, raw)
}

/// Unit vector orthogonal to the columns of a `p x (p-1)` matrix.
fn null_vector(cols: &DMatrix<f64>) -> Option<DVector<f64>> {
    let p = cols.nrows();
    let q = cols.clone().qr().q();
    let mut best: Option<DVector<f64>> = None;
    let mut best_norm = 0.0;
    for j in 0..p {
        let mut e = DVector::<f64>::zeros(p);
        e[j] = 1.0;
        let r = &e - &q * (q.transpose() * &e);
        let nr = r.norm();
        if nr > best_norm {
            best_norm = nr;
            best = Some(r);
        }
    }
    let scale = cols.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = cols.transpose() * best.as_ref()?;
    if best_norm < 1e-8 || residual.amax() > 1e-8 * scale * best_norm {
        return None;
    }
    best.map(|v| v / best_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::rng::standard_normal_matrix;

    #[test]
    fn kurtosis_groups_are_orthonormal() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(3, 0), 80, 5)).unwrap();
        let w = whiten(&x).unwrap();
        let (maxd, mind) = kurtosis_search(&w.z);
        for group in [&maxd, &mind] {
            assert_eq!(group.len(), 5);
            for i in 0..group.len() {
                assert!((group[i].norm() - 1.0).abs() < 1e-10);
                for j in 0..i {
                    assert!(group[i].dot(&group[j]).abs() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn maximizer_beats_random_directions() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(4, 0), 60, 4)).unwrap();
        let w = whiten(&x).unwrap();
        let (maxd, mind) = kurtosis_search(&w.z);
        let kmax = projection_kurtosis(&w.z, &maxd[0]);
        let kmin = projection_kurtosis(&w.z, &mind[0]);
        let mut rng = rng_stream(9, 9);
        for _ in 0..200 {
            let v = standard_normal_matrix(&mut rng, 4, 1).column(0).normalize();
            let k = projection_kurtosis(&w.z, &v);
            assert!(k <= kmax + 1e-9 && k >= kmin - 1e-9);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = DataMatrix::new(standard_normal_matrix(&mut rng_stream(5, 0), 30, 3)).unwrap();
        let z = whiten(&x).unwrap().z;
        let u = DVector::from_vec(vec![0.3, -0.5, 0.8]);
        let (_, g, h) = kurtosis_derivatives(&z, &u);
        let eps = 1e-6;
        for j in 0..3 {
            let mut up = u.clone();
            up[j] += eps;
            let mut dn = u.clone();
            dn[j] -= eps;
            let fd = (projection_kurtosis(&z, &up) - projection_kurtosis(&z, &dn)) / (2.0 * eps);
            assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g[j].abs()));
            let (_, gu, _) = kurtosis_derivatives(&z, &up);
            let (_, gd, _) = kurtosis_derivatives(&z, &dn);
            let col = (gu - gd) / (2.0 * eps);
            for i in 0..3 {
                assert!((col[i] - h[(i, j)]).abs() < 1e-5 * (1.0 + h[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn null_vector_is_orthogonal() {
        let cols = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let v = null_vector(&cols).unwrap();
        assert!((cols.transpose() * &v).amax() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mad_directions_are_dropped() {
        // half the points share the same first coordinate
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![if i < 6 { 0.0 } else { i as f64 }, (i * i) as f64 % 7.0]);
        }
        let x = DataMatrix::from_rows(&rows).unwrap();
        let set = DirectionSet::from_directions(
            &x,
            vec![
                (DVector::from_vec(vec![1.0, 0.0]), DirectionKind::Specific),
                (DVector::from_vec(vec![0.0, 1.0]), DirectionKind::Specific),
            ],
        );
        assert_eq!(set.dropped_zero_spread, 1);
        assert_eq!(set.len(), 1);
    }
}
