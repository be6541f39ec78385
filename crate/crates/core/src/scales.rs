//! Robust scales of squared-distance vectors: the M-scale, the τ-scale and
//! the median.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{median, DistanceVector};
use crate::rho::RhoSpec;

/// `δ = (1 − p/n) / 2`, the value maximizing the finite-sample breakdown point.
pub fn breakdown_delta(n: usize, p: usize) -> Result<f64> {
    if n <= p {
        return Err(Error::Domain(format!("breakdown delta needs n > p (n = {n}, p = {p})")));
    }
    Ok(0.5 * (1.0 - p as f64 / n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MScaleParams {
    pub delta: f64,
    pub rho: RhoSpec,
    /// Relative residual tolerance: stop once `|mean ρ(d/S) − δ| <= tol·δ`.
    pub tol: f64,
    pub max_iter: usize,
}

impl MScaleParams {
    pub fn new(rho: RhoSpec, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::Domain(format!("M-scale delta {delta} outside (0, 0.5]")));
        }
        Ok(Self { delta, rho, tol: 1e-12, max_iter: 200 })
    }
}

#[inline]
fn mean_rho(d: &[f64], rho: &RhoSpec, scale: f64) -> f64 {
    let inv = 1.0 / scale;
    d.iter().map(|&v| rho.rho_unchecked(v * inv)).sum::<f64>() / d.len() as f64
}

/// M-scale `S` solving `(1/n) Σ ρ(d_i / S) = δ`.
///
/// `h(S) = mean ρ(d/S)` is continuous and nonincreasing, falling from the
/// fraction of positive distances to 0, so a root exists exactly when more
/// than `n·δ` distances are positive. The root is bracketed geometrically
/// around the median and refined with Brent's method.
pub fn mscale(d: &DistanceVector, params: &MScaleParams) -> Result<f64> {
    mscale_slice(d.as_slice(), params)
}

pub(crate) fn mscale_slice(d: &[f64], params: &MScaleParams) -> Result<f64> {
    let n = d.len();
    if n == 0 {
        return Err(Error::Domain("M-scale of an empty vector".into()));
    }
    if let Some(bad) = d.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("distance {bad} is not a finite nonnegative value")));
    }
    let delta = params.delta;
    let positive = d.iter().filter(|&&v| v > 0.0).count();
    let needed = n as f64 * delta;
    if positive as f64 <= needed {
        return Err(Error::DegenerateScale { positive, n, needed });
    }
    let rho = &params.rho;
    let h = |s: f64| mean_rho(d, rho, s) - delta;

    let positives: Vec<f64> = d.iter().copied().filter(|&v| v > 0.0).collect();
    let s0 = median(&positives).unwrap_or(1.0);
    let (mut lo, mut hi) = (s0 * 1e-3, s0 * 1e3);
    let mut h_lo = h(lo);
    let mut expansions = 0;
    while h_lo <= 0.0 {
        hi = lo;
        lo *= 1e-3;
        h_lo = h(lo);
        expansions += 1;
        if expansions > 100 || lo == 0.0 {
            return Err(Error::Convergence("M-scale lower bracket not found".into()));
        }
    }
    let mut h_hi = h(hi);
    expansions = 0;
    while h_hi > 0.0 {
        lo = hi;
        h_lo = h_hi;
        hi *= 1e3;
        h_hi = h(hi);
        expansions += 1;
        if expansions > 100 || !hi.is_finite() {
            return Err(Error::Convergence("M-scale upper bracket not found".into()));
        }
    }
    brent(h, lo, hi, h_lo, h_hi, params.tol * delta, params.max_iter)
}

/// Brent's root finder on a bracket with `f(a) > 0 >= f(b)` (any sign pair works).
fn brent<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa.abs() <= ftol {
        return Ok(a);
    }
    if fb.abs() <= ftol {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let xtol = 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= xtol {
            return Ok(b);
        }
        if e.abs() >= xtol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > xtol { d } else { xtol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Convergence(format!("Brent iteration limit {max_iter} reached")))
}

/// τ-scale pair `(σ₀, σ)`: `σ₀` is the M-scale under `rho1` and
/// `σ = σ₀ · mean ρ₂(d/σ₀)` with `ρ₂(t) = ρ₁(t/c)`.
pub fn tau_scale(d: &DistanceVector, rho1: &RhoSpec, c: f64, delta: f64) -> Result<(f64, f64)> {
    let params = MScaleParams::new(*rho1, delta)?;
    let rho2 = rho1.scaled(c)?;
    let sigma0 = mscale(d, &params)?;
    Ok((sigma0, sigma0 * mean_rho(d.as_slice(), &rho2, sigma0)))
}

/// Sample median of the distances.
pub fn median_scale(d: &DistanceVector) -> Result<f64> {
    median(d.as_slice()).ok_or_else(|| Error::Domain("median of an empty vector".into()))
}
