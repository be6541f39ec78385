//! The three ρ/weight families used on squared distances: bisquare,
//! "optimal" and Rocke's biflat.
//!
//! Every family is bounded with `ρ(0) = 0` and `sup ρ = 1`. Tuning enters only
//! as a divisor of the argument: a spec with divisor `c` evaluates the base
//! family at `t / c`.
//!
//! The optimal ρ is built as the exact integral of its weight function,
//! `ρ(t) = (1/6.5) ∫₀ᵗ W(u) du`. On `(4, 9]` this is
//! `(3.584 − 1.944t + 0.864t² − 0.104t³ + 0.004t⁴) / 6.5`, which is continuous
//! at both knots and reaches exactly 1 at `t = 9`.
//!
//! The biflat ρ is the normalized integral of its weight over the band
//! `[1 − γ, 1 + γ]`, i.e. `(y(3 − y²) + 2) / 4` with `y = (t − 1)/γ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::chi2_quantile;

/// Smallest admissible biflat band half-width.
pub const MIN_GAMMA: f64 = 1e-3;

const OPT_NORMALIZER: f64 = 6.5;
const OPT_S_CONST: f64 = 3.584;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoFamily {
    Bisquare,
    Optimal,
    #[serde(rename = "rocke")]
    RockeBiflat,
}

impl std::fmt::Display for RhoFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RhoFamily::Bisquare => "bisquare",
            RhoFamily::Optimal => "optimal",
            RhoFamily::RockeBiflat => "rocke",
        })
    }
}

impl std::str::FromStr for RhoFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bisquare" | "bisq" | "bis" => Ok(RhoFamily::Bisquare),
            "optimal" | "opt" => Ok(RhoFamily::Optimal),
            "rocke" | "biflat" => Ok(RhoFamily::RockeBiflat),
            other => Err(Error::Domain(format!("unknown rho family '{other}'"))),
        }
    }
}

/// A ρ/weight function: family, argument divisor and, for the biflat family,
/// the band parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoSpec {
    family: RhoFamily,
    divisor: f64,
    alpha: Option<f64>,
    gamma: Option<f64>,
}

impl RhoSpec {
    pub fn bisquare() -> Self {
        Self { family: RhoFamily::Bisquare, divisor: 1.0, alpha: None, gamma: None }
    }

    pub fn optimal() -> Self {
        Self { family: RhoFamily::Optimal, divisor: 1.0, alpha: None, gamma: None }
    }

    /// Biflat weight tuned by `alpha` in dimension `p`.
    pub fn rocke(p: usize, alpha: f64) -> Result<Self> {
        let gamma = rocke_gamma(p, alpha)?;
        Ok(Self { family: RhoFamily::RockeBiflat, divisor: 1.0, alpha: Some(alpha), gamma: Some(gamma) })
    }

    /// Biflat weight with an explicit band half-width.
    pub fn rocke_with_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Domain(format!("biflat band half-width {gamma} outside (0, 1]")));
        }
        Ok(Self { family: RhoFamily::RockeBiflat, divisor: 1.0, alpha: None, gamma: Some(gamma) })
    }

    /// Base spec of a non-biflat family.
    pub fn of_family(family: RhoFamily) -> Result<Self> {
        match family {
            RhoFamily::Bisquare => Ok(Self::bisquare()),
            RhoFamily::Optimal => Ok(Self::optimal()),
            RhoFamily::RockeBiflat => Err(Error::Domain(
                "biflat rho needs a dimension and alpha; use RhoSpec::rocke".into(),
            )),
        }
    }

    pub fn family(&self) -> RhoFamily {
        self.family
    }

    pub fn divisor(&self) -> f64 {
        self.divisor
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// Spec evaluating this one at `t / divisor`.
    pub fn scaled(&self, divisor: f64) -> Result<Self> {
        if !(divisor > 0.0 && divisor.is_finite()) {
            return Err(Error::Domain(format!("rho divisor must be positive, got {divisor}")));
        }
        Ok(Self { divisor: self.divisor * divisor, ..*self })
    }

    /// Same family and divisor with a widened biflat band (capped at 1).
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma: Some(gamma.clamp(MIN_GAMMA, 1.0)), ..*self }
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.rho_unchecked(t))
    }

    pub fn weight(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.weight_unchecked(t))
    }

    /// ρ at a nonnegative argument, without the domain check.
    #[inline]
    pub fn rho_unchecked(&self, t: f64) -> f64 {
        let u = t / self.divisor;
        match self.family {
            RhoFamily::Bisquare => {
                if u >= 1.0 {
                    1.0
                } else {
                    let v = 1.0 - u;
                    1.0 - v * v * v
                }
            }
            RhoFamily::Optimal => {
                if u <= 4.0 {
                    u / OPT_NORMALIZER
                } else if u <= 9.0 {
                    let s = OPT_S_CONST + u * (-1.944 + u * (0.864 + u * (-0.104 + u * 0.004)));
                    // the quartic overshoots 1 by rounding at the knot
                    (s / OPT_NORMALIZER).min(1.0)
                } else {
                    1.0
                }
            }
            RhoFamily::RockeBiflat => {
                let g = self.gamma.unwrap_or(1.0);
                let y = (u - 1.0) / g;
                if y <= -1.0 {
                    0.0
                } else if y >= 1.0 {
                    1.0
                } else {
                    (y * (3.0 - y * y) + 2.0) / 4.0
                }
            }
        }
    }

    /// Weight function W at a nonnegative argument, without the domain check.
    #[inline]
    pub fn weight_unchecked(&self, t: f64) -> f64 {
        let u = t / self.divisor;
        match self.family {
            RhoFamily::Bisquare => {
                if u <= 1.0 {
                    let v = 1.0 - u;
                    3.0 * v * v
                } else {
                    0.0
                }
            }
            RhoFamily::Optimal => optimal_weight(u),
            RhoFamily::RockeBiflat => {
                let g = self.gamma.unwrap_or(1.0);
                let y = (u - 1.0) / g;
                if y.abs() <= 1.0 {
                    1.0 - y * y
                } else {
                    0.0
                }
            }
        }
    }

    /// Ratio `ρ'(u) / W(u)` of the unscaled family.
    pub fn weight_to_derivative(&self) -> f64 {
        match self.family {
            RhoFamily::Bisquare => 1.0,
            RhoFamily::Optimal => 1.0 / OPT_NORMALIZER,
            RhoFamily::RockeBiflat => 0.75 / self.gamma.unwrap_or(1.0),
        }
    }

    /// Exact derivative `dρ/dt`, including the divisor.
    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        self.weight_unchecked(t) * self.weight_to_derivative() / self.divisor
    }

    /// Largest argument with a nonzero weight (infinite if none).
    pub fn support_end(&self) -> f64 {
        let base = match self.family {
            RhoFamily::Bisquare => 1.0,
            RhoFamily::Optimal => 9.0,
            RhoFamily::RockeBiflat => 1.0 + self.gamma.unwrap_or(1.0),
        };
        base * self.divisor
    }
}

/// Optimal weight: 1 up to 4, the cubic `q` on `(4, 9]`, 0 beyond.
#[inline]
pub fn optimal_weight(d: f64) -> f64 {
    if d <= 4.0 {
        1.0
    } else if d < 9.0 {
        optimal_q(d)
    } else {
        0.0
    }
}

/// The cubic bridge of the optimal weight between its knots.
#[inline]
pub fn optimal_q(d: f64) -> f64 {
    -1.944 + d * (1.728 + d * (-0.312 + d * 0.016))
}

/// Biflat band half-width `min(1, χ²_p(1 − α)/p − 1)`, floored at [`MIN_GAMMA`].
pub fn rocke_gamma(p: usize, alpha: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::Domain(format!("biflat weight needs p >= 2, got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let q = chi2_quantile(p, 1.0 - alpha)?;
    Ok((q / p as f64 - 1.0).clamp(MIN_GAMMA, 1.0))
}

fn check_arg(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("rho argument must be nonnegative, got {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn families() -> Vec<RhoSpec> {
        vec![
            RhoSpec::bisquare(),
            RhoSpec::optimal(),
            RhoSpec::rocke_with_gamma(1.0).unwrap(),
            RhoSpec::rocke(30, 0.05).unwrap(),
        ]
    }

    #[test]
    fn bisquare_values() {
        let r = RhoSpec::bisquare();
        assert_relative_eq!(r.rho(0.5).unwrap(), 0.875, epsilon = 1e-15);
        assert_eq!(r.rho(1.0).unwrap(), 1.0);
        assert_eq!(r.rho(7.0).unwrap(), 1.0);
        assert_relative_eq!(r.weight(0.5).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn optimal_knots() {
        assert_relative_eq!(optimal_q(4.0), 1.0, epsilon = 1e-9);
        assert_relative_eq!(optimal_q(9.0), 0.0, epsilon = 1e-9);
        let r = RhoSpec::optimal();
        assert_relative_eq!(r.rho(2.0).unwrap(), 2.0 / 6.5, epsilon = 1e-15);
        for knot in [4.0, 9.0] {
            let (a, b) = (r.rho(knot - 1e-12).unwrap(), r.rho(knot + 1e-12).unwrap());
            assert!((a - b).abs() < 1e-9, "rho jump at {knot}");
            let (a, b) = (r.weight(knot - 1e-12).unwrap(), r.weight(knot + 1e-12).unwrap());
            assert!((a - b).abs() < 1e-9, "weight jump at {knot}");
        }
        assert_relative_eq!(r.rho(9.0).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rocke_band() {
        let r = RhoSpec::rocke_with_gamma(1.0).unwrap();
        assert_relative_eq!(r.rho(1.0).unwrap(), 0.5, epsilon = 1e-15);

        let r = RhoSpec::rocke(30, 0.05).unwrap();
        let g = r.gamma().unwrap();
        assert!((g - 0.4591).abs() < 1e-3, "gamma {g}");
        assert_eq!(r.weight(1.0).unwrap(), 1.0);
        assert!(r.weight(1.0 + g).unwrap().abs() < 1e-12);
        assert!(r.weight(1.0 - g).unwrap().abs() < 1e-12);
        assert_eq!(r.weight(1.0 + g + 1e-9).unwrap(), 0.0);
        assert_eq!(r.weight(1.0 - g - 1e-9).unwrap(), 0.0);
        for k in 0..100 {
            let h = g * k as f64 / 100.0;
            assert_relative_eq!(r.weight(1.0 + h).unwrap(), r.weight(1.0 - h).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rocke_gamma_examples() {
        assert_eq!(rocke_gamma(5, 0.05).unwrap(), 1.0);
        assert!((rocke_gamma(30, 0.05).unwrap() - 0.4591).abs() < 1e-3);
        // χ²_p(ε)/p − 1 is negative for α near 1: floor applies
        assert_eq!(rocke_gamma(10, 0.999).unwrap(), MIN_GAMMA);
        assert!(rocke_gamma(10, 1.0).is_err());
    }

    #[test]
    fn normalized_and_monotone() {
        for r in families() {
            assert_eq!(r.rho(0.0).unwrap(), 0.0);
            let mut prev = 0.0;
            let mut t = 0.0;
            while t <= 20.0 {
                let v = r.rho(t).unwrap();
                assert!(v >= prev - 1e-15, "{:?} decreases at {t}", r.family());
                assert!((0.0..=1.0).contains(&v));
                prev = v;
                t += 1e-3;
            }
            assert_eq!(r.rho(1e6).unwrap(), 1.0);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let h = 1e-6;
        for r in families() {
            let mut t = 0.013;
            while t < 12.0 {
                let near_knot = [1.0, 4.0, 9.0]
                    .iter()
                    .chain([1.0 - r.gamma().unwrap_or(0.0), 1.0 + r.gamma().unwrap_or(0.0)].iter())
                    .any(|k| (t - k).abs() < 1e-3);
                if !near_knot {
                    let fd = (r.rho(t + h).unwrap() - r.rho(t - h).unwrap()) / (2.0 * h);
                    let exact = r.derivative(t);
                    let err = (fd - exact).abs() / exact.abs().max(1e-3);
                    assert!(err <= 1e-5, "{:?} at {t}: fd {fd} vs {exact}", r.family());
                }
                t += 0.0371;
            }
        }
    }

    #[test]
    fn scaling_composes() {
        let base = RhoSpec::bisquare();
        let same = base.scaled(1.0).unwrap();
        for t in [0.0, 0.3, 0.9, 2.0] {
            assert_eq!(base.rho(t).unwrap(), same.rho(t).unwrap());
        }
        assert_eq!(base.scaled(2.0).unwrap().rho(2.0).unwrap(), 1.0);

        let c = 0.83;
        let opt = RhoSpec::optimal().scaled(c).unwrap();
        assert!(opt.weight(9.0 * c * (1.0 - 1e-12)).unwrap().abs() < 1e-9);
        assert_eq!(opt.weight(9.0 * c * (1.0 + 1e-12)).unwrap(), 0.0);
        assert_eq!(opt.support_end(), 9.0 * c);
        assert!(RhoSpec::optimal().scaled(0.0).is_err());
        assert!(RhoSpec::optimal().scaled(-1.0).is_err());
    }

    #[test]
    fn negative_argument_is_rejected() {
        for r in families() {
            assert!(r.rho(-1e-9).is_err());
            assert!(r.weight(-1.0).is_err());
        }
    }
}
