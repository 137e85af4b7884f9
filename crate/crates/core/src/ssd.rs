//! Second-order stochastic dominance and benchmark-adjusted risk.
//!
//! `X >=SSD Z` (for losses) holds iff `ES_p(X) <= ES_p(Z)` for every `p`, and the
//! smallest cash amount making `X` dominate `Z` is `sup_p {ES_p(X) - ES_p(Z)}`.

use serde::Serialize;

use crate::adjusted::{adjusted_es, candidate_levels};
use crate::error::{Result, RiskError};
use crate::profile::RiskProfile;
use crate::quantile::{LossDistribution, StepQuantile};
use crate::EXACT_TOL;

/// `u(y) = min(y - kink, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampUtility {
    kink: f64,
}

impl RampUtility {
    pub fn new(kink: f64) -> Result<Self> {
        if !kink.is_finite() {
            return Err(RiskError::InvalidUtility(format!("kink must be finite, got {kink}")));
        }
        Ok(RampUtility { kink })
    }

    pub fn kink(&self) -> f64 {
        self.kink
    }

    pub fn eval(&self, y: f64) -> f64 {
        (y - self.kink).min(0.0)
    }

    /// `E[u(m - X)]`.
    pub fn expected_of_position(&self, m: f64, x: &StepQuantile) -> f64 {
        x.atoms().map(|(w, v)| w * self.eval(m - v)).sum()
    }
}

fn scale(x: &StepQuantile, z: &StepQuantile) -> f64 {
    [x.min(), x.max(), z.min(), z.max()]
        .iter()
        .fold(1.0, |acc: f64, v| acc.max(v.abs()))
}

/// `ES^g(X)` with `g = ES(Z)`: `inf{m : X - m >=SSD Z}`.
pub fn ssd_based_risk(x: &StepQuantile, z: &StepQuantile) -> f64 {
    adjusted_es(x, &RiskProfile::benchmark_es(z.clone())).value
}

/// `X >=SSD Z`, decided from ES differences at the merged breakpoints.
pub fn ssd_dominates(x: &StepQuantile, z: &StepQuantile) -> bool {
    ssd_based_risk(x, z) <= EXACT_TOL * scale(x, z)
}

/// Infimum of `{p : ES_p(X) > ES_p(Z)}`, or `None` when `X >=SSD Z`.
///
/// `(1 - p)(ES_p(X) - ES_p(Z))` is affine between merged breakpoints, so the crossing
/// is located exactly by linear interpolation on the first violating piece.
pub fn first_violation(x: &StepQuantile, z: &StepQuantile) -> Option<f64> {
    if ssd_dominates(x, z) {
        return None;
    }
    let tol = EXACT_TOL * scale(x, z);
    let profile = RiskProfile::benchmark_es(z.clone());
    let levels = candidate_levels(x, &profile);
    let numerator = |p: f64| {
        x.integrated_tail(p).expect("level in range") - z.integrated_tail(p).expect("level in range")
    };
    let mut prev: Option<f64> = None;
    for &p in &levels {
        let diff = x.es(p).expect("level in range") - z.es(p).expect("level in range");
        if diff > tol {
            return Some(match prev {
                None => p,
                Some(a) if p < 1.0 => {
                    let (da, db) = (numerator(a), numerator(p));
                    if db > da {
                        (a + (p - a) * (-da) / (db - da)).clamp(a, p)
                    } else {
                        p
                    }
                }
                Some(_) => p,
            });
        }
        prev = Some(p);
    }
    None
}

/// Result of checking that `Z` is the SSD-minimum of its acceptance set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MinimumCheck {
    pub holds: bool,
    /// Index of an acceptable sample that does not dominate `Z`.
    pub witness: Option<usize>,
}

/// `Z` is acceptable for its own benchmark risk and every acceptable sample dominates it.
pub fn acceptance_minimum_check(z: &StepQuantile, samples: &[StepQuantile]) -> MinimumCheck {
    let tol = |x: &StepQuantile| EXACT_TOL * scale(x, z);
    if ssd_based_risk(z, z) > tol(z) {
        return MinimumCheck {
            holds: false,
            witness: None,
        };
    }
    for (i, x) in samples.iter().enumerate() {
        if ssd_based_risk(x, z) <= tol(x) && !ssd_dominates(x, z) {
            return MinimumCheck {
                holds: false,
                witness: Some(i),
            };
        }
    }
    MinimumCheck {
        holds: true,
        witness: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UtilityRequirement {
    /// Smallest `m` with `E[u(m - X)] >= E[u(-Z)]`.
    pub m: f64,
    /// The left bracket edge was already feasible; `m` is that edge, not an infimum.
    pub vacuous: bool,
}

const BISECTION_TOL: f64 = 1e-10;

/// `inf{m : E[u(m - X)] >= E[u(-Z)]}` for a ramp utility, by bisection.
pub fn utility_requirement(x: &StepQuantile, z: &StepQuantile, u: &RampUtility) -> UtilityRequirement {
    let target: f64 = z.atoms().map(|(w, v)| w * u.eval(-v)).sum();
    let feasible = |m: f64| u.expected_of_position(m, x) >= target;
    let mut lo = x.min() - z.max() - 1.0;
    if feasible(lo) {
        return UtilityRequirement { m: lo, vacuous: true };
    }
    let mut hi = ssd_based_risk(x, z) + 1.0;
    while !feasible(hi) {
        // guards against rounding in the target; the bound is feasible in exact arithmetic
        hi += (hi - lo).max(1.0);
    }
    for _ in 0..400 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    UtilityRequirement { m: hi, vacuous: false }
}
