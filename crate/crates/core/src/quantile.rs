//! Loss distributions and their VaR / ES.
//!
//! VaR is the left quantile `inf{x : P(X <= x) >= p}`, so a [`StepQuantile`] is
//! left-continuous: evaluating at a breakpoint returns the value of the interval
//! that ends there.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::normal;

fn check_level(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(RiskError::OutOfRangeLevel(p))
    }
}

/// Common interface of the loss models.
pub trait LossDistribution {
    /// Left quantile at level `p`.
    fn var(&self, p: f64) -> Result<f64>;
    /// Tail mean `1/(1-p) * int_p^1 VaR_u du`; the essential supremum at `p = 1`.
    fn es(&self, p: f64) -> Result<f64>;
}

/// Left-continuous piecewise-constant quantile function of a finitely supported loss.
///
/// The quantile equals `values[k]` on `(breakpoints[k-1], breakpoints[k]]` with an
/// implicit leading breakpoint at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantile", into = "RawQuantile")]
pub struct StepQuantile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    /// `tail[k] = int_{b_k}^1 VaR_u du`.
    tail: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawQuantile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawQuantile> for StepQuantile {
    type Error = RiskError;

    fn try_from(raw: RawQuantile) -> Result<Self> {
        StepQuantile::new(raw.breakpoints, raw.values)
    }
}

impl From<StepQuantile> for RawQuantile {
    fn from(q: StepQuantile) -> Self {
        RawQuantile {
            breakpoints: q.breakpoints,
            values: q.values,
        }
    }
}

impl StepQuantile {
    /// Builds a quantile from its breakpoints and interval values.
    ///
    /// A last breakpoint within 1e-12 of 1 is snapped to 1.
    pub fn new(mut breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(RiskError::InvalidQuantile("no breakpoints".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(RiskError::InvalidQuantile(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        let last = breakpoints.len() - 1;
        if (breakpoints[last] - 1.0).abs() > crate::EXACT_TOL {
            return Err(RiskError::InvalidQuantile(format!(
                "last breakpoint must be 1, got {}",
                breakpoints[last]
            )));
        }
        breakpoints[last] = 1.0;
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b <= 1.0) {
                return Err(RiskError::InvalidQuantile(format!(
                    "breakpoints must be strictly increasing in (0, 1], found {b} after {prev}"
                )));
            }
            prev = b;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::InvalidQuantile("values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(RiskError::InvalidQuantile(
                "values must be nondecreasing".into(),
            ));
        }
        Ok(Self::from_parts_unchecked(breakpoints, values))
    }

    fn from_parts_unchecked(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let n = values.len();
        let mut tail = vec![0.0; n];
        for k in (0..n.saturating_sub(1)).rev() {
            let width = breakpoints[k + 1] - breakpoints[k];
            tail[k] = tail[k + 1] + values[k + 1] * width;
        }
        StepQuantile {
            breakpoints,
            values,
            tail,
        }
    }

    /// Point mass at `value`.
    pub fn constant(value: f64) -> Self {
        Self::from_parts_unchecked(vec![1.0], vec![value])
    }

    /// Quantile of the discrete law putting weight `w_i` on `samples[i]`
    /// (equal weights when `weights` is `None`).
    pub fn from_samples(samples: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if samples.is_empty() {
            return Err(RiskError::EmptySample);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(RiskError::InvalidQuantile("samples must be finite".into()));
        }
        let n = samples.len();
        let mut atoms: Vec<(f64, f64)> = match weights {
            None => samples.iter().map(|&x| (x, 1.0 / n as f64)).collect(),
            Some(w) => {
                if w.len() != n {
                    return Err(RiskError::BadWeights(format!(
                        "{} weights for {} samples",
                        w.len(),
                        n
                    )));
                }
                if let Some(bad) = w.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
                    return Err(RiskError::BadWeights(format!("invalid weight {bad}")));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > crate::EXACT_TOL {
                    return Err(RiskError::BadWeights(format!(
                        "weights sum to {total}, not 1"
                    )));
                }
                samples.iter().copied().zip(w.iter().copied()).collect()
            }
        };
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut breakpoints: Vec<f64> = Vec::with_capacity(n);
        let mut values: Vec<f64> = Vec::with_capacity(n);
        let mut cum = 0.0;
        for (x, w) in atoms {
            if w == 0.0 {
                continue;
            }
            let next = cum + w;
            match values.last() {
                Some(&last) if last == x => {
                    *breakpoints.last_mut().unwrap() = next;
                }
                _ if next <= cum => {
                    // weight below floating resolution at this level
                    continue;
                }
                _ => {
                    breakpoints.push(next);
                    values.push(x);
                }
            }
            cum = next;
        }
        if values.is_empty() {
            return Err(RiskError::BadWeights("all weights are zero".into()));
        }
        *breakpoints.last_mut().unwrap() = 1.0;
        Ok(Self::from_parts_unchecked(breakpoints, values))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Atoms as `(probability, value)` pairs in increasing value order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(move |(k, &b)| {
                let start = if k == 0 { 0.0 } else { self.breakpoints[k - 1] };
                (b - start, self.values[k])
            })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.tail[0] + self.values[0] * self.breakpoints[0]
    }

    pub fn is_constant(&self) -> bool {
        self.values[0] == self.max()
    }

    /// Index of the interval containing `p` (`p = 0` maps to the first interval).
    fn interval(&self, p: f64) -> usize {
        self.breakpoints
            .partition_point(|&b| b < p)
            .min(self.values.len() - 1)
    }

    /// Integrated quantile `H(p) = int_p^1 VaR_u du`.
    pub fn integrated_tail(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        let k = self.interval(p);
        Ok(self.tail[k] + self.values[k] * (self.breakpoints[k] - p))
    }

    /// Law of `X + m`.
    pub fn shifted(&self, m: f64) -> Self {
        let values = self.values.iter().map(|v| v + m).collect();
        Self::from_parts_unchecked(self.breakpoints.clone(), values)
    }

    /// Law of `lambda * X` for `lambda >= 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(RiskError::InvalidParameter(format!(
                "scale factor must be finite and nonnegative, got {lambda}"
            )));
        }
        if lambda == 0.0 {
            return Ok(Self::constant(0.0));
        }
        let values = self.values.iter().map(|v| v * lambda).collect();
        Ok(Self::from_parts_unchecked(self.breakpoints.clone(), values))
    }

    /// Law of the comonotone sum `F_X^{-1}(U) + F_Y^{-1}(U)`.
    pub fn comonotone_sum(&self, other: &StepQuantile) -> Self {
        let breakpoints = merge_levels(&self.breakpoints, &other.breakpoints);
        let values = breakpoints
            .iter()
            .map(|&b| self.values[self.interval(b)] + other.values[other.interval(b)])
            .collect();
        Self::from_parts_unchecked(breakpoints, values).normalized()
    }

    /// Comonotone mixture `lambda X + (1 - lambda) Y` for `lambda` in `[0, 1]`.
    pub fn comonotone_mix(&self, other: &StepQuantile, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(RiskError::InvalidParameter(format!(
                "mixing weight {lambda} outside [0, 1]"
            )));
        }
        let breakpoints = merge_levels(&self.breakpoints, &other.breakpoints);
        let values = breakpoints
            .iter()
            .map(|&b| {
                lambda * self.values[self.interval(b)]
                    + (1.0 - lambda) * other.values[other.interval(b)]
            })
            .collect();
        Ok(Self::from_parts_unchecked(breakpoints, values).normalized())
    }

    /// Same function with adjacent equal intervals merged.
    pub fn normalized(&self) -> Self {
        let mut breakpoints = Vec::with_capacity(self.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.len());
        for (&b, &v) in self.breakpoints.iter().zip(&self.values) {
            if values.last() == Some(&v) {
                *breakpoints.last_mut().unwrap() = b;
            } else {
                breakpoints.push(b);
                values.push(v);
            }
        }
        Self::from_parts_unchecked(breakpoints, values)
    }
}

impl LossDistribution for StepQuantile {
    fn var(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        Ok(self.values[self.interval(p)])
    }

    fn es(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        let k = self.interval(p);
        let n = self.values.len();
        if p == 1.0 || k + 1 == n || (k + 2 == n && p == self.breakpoints[k]) {
            // from the start of the top atom on, the tail mean is its value
            return Ok(self.max());
        }
        let h = self.tail[k] + self.values[k] * (self.breakpoints[k] - p);
        Ok(h / (1.0 - p))
    }
}

/// Empirical quantile of `samples` (see [`StepQuantile::from_samples`]).
pub fn empirical_from_samples(samples: &[f64], weights: Option<&[f64]>) -> Result<StepQuantile> {
    StepQuantile::from_samples(samples, weights)
}

/// Sorted union of two ascending level lists, exact duplicates removed.
pub fn merge_levels(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Normally distributed loss `N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLoss {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianLoss {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(RiskError::InvalidParameter(format!(
                "gaussian loss needs finite mu and sigma >= 0, got ({mu}, {sigma})"
            )));
        }
        Ok(GaussianLoss { mu, sigma })
    }

    /// Equal-probability discretization with `atoms` cells, each atom carrying the
    /// conditional mean of the loss on its cell.
    ///
    /// The integrated quantile is preserved at every multiple of `1/atoms`, so ES at
    /// those levels is exact.
    pub fn discretize(&self, atoms: usize) -> Result<StepQuantile> {
        if atoms == 0 {
            return Err(RiskError::InvalidParameter("atom count must be positive".into()));
        }
        if self.sigma == 0.0 {
            return Ok(StepQuantile::constant(self.mu));
        }
        let n = atoms as f64;
        let dens_at = |k: usize| -> f64 {
            if k == 0 || k == atoms {
                0.0
            } else {
                normal::pdf(normal::inv_cdf(k as f64 / n))
            }
        };
        let mut breakpoints = Vec::with_capacity(atoms);
        let mut values = Vec::with_capacity(atoms);
        let mut left = dens_at(0);
        for k in 1..=atoms {
            let right = dens_at(k);
            // int over the cell of Phi^{-1}(u) du = phi(Phi^{-1}(a)) - phi(Phi^{-1}(b))
            let mean = self.mu + self.sigma * (left - right) * n;
            let value = match values.last() {
                Some(&prev) if mean < prev => prev,
                _ => mean,
            };
            breakpoints.push(k as f64 / n);
            values.push(value);
            left = right;
        }
        StepQuantile::new(breakpoints, values)
    }
}

impl LossDistribution for GaussianLoss {
    fn var(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        if p == 0.0 || p == 1.0 {
            if self.sigma == 0.0 {
                return Ok(self.mu);
            }
            return Err(RiskError::UnboundedQuantile(p));
        }
        Ok(self.mu + self.sigma * normal::inv_cdf(p))
    }

    fn es(&self, p: f64) -> Result<f64> {
        check_level(p)?;
        if self.sigma == 0.0 || p == 0.0 {
            return Ok(self.mu);
        }
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        gaussian_es(self.mu, self.sigma, p)
    }
}

/// Closed-form Gaussian ES: `mu + sigma * phi(Phi^{-1}(p)) / (1 - p)` for `p` in `(0, 1)`.
pub fn gaussian_es(mu: f64, sigma: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::OutOfRangeLevel(p));
    }
    if !(sigma >= 0.0) {
        return Err(RiskError::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(mu);
    }
    Ok(mu + sigma * normal::pdf(normal::inv_cdf(p)) / (1.0 - p))
}

/// The curve `p -> ES_p(X)` of a step quantile.
///
/// `H(p) = (1 - p) ES_p(X)` is affine between consecutive breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EsCurve {
    source: StepQuantile,
}

impl EsCurve {
    pub fn new(source: &StepQuantile) -> Self {
        EsCurve {
            source: source.clone(),
        }
    }

    pub fn source(&self) -> &StepQuantile {
        &self.source
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        self.source.es(p)
    }

    /// `H(p)`; continuous with `H(1) = 0`.
    pub fn integrated(&self, p: f64) -> Result<f64> {
        self.source.integrated_tail(p)
    }

    /// `(p, ES_p)` at 0 and at every breakpoint.
    pub fn knots(&self) -> Vec<(f64, f64)> {
        std::iter::once(0.0)
            .chain(self.source.breakpoints().iter().copied())
            .map(|p| (p, self.source.es(p).expect("level in range")))
            .collect()
    }
}

pub fn es_curve(dist: &StepQuantile) -> EsCurve {
    EsCurve::new(dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four() -> StepQuantile {
        StepQuantile::from_samples(&[1.0, 2.0, 3.0, 4.0], None).unwrap()
    }

    #[test]
    fn equal_weight_empirical() {
        let q = four();
        assert_eq!(q.breakpoints(), &[0.25, 0.5, 0.75, 1.0]);
        assert_eq!(q.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn point_mass() {
        let q = StepQuantile::from_samples(&[5.0], None).unwrap();
        assert_eq!(q.breakpoints(), &[1.0]);
        assert_eq!(q.values(), &[5.0]);
    }

    #[test]
    fn weighted_empirical_matches_cdf_scan() {
        let q = StepQuantile::from_samples(&[3.0, 1.0], Some(&[0.25, 0.75])).unwrap();
        assert_eq!(q.breakpoints(), &[0.75, 1.0]);
        assert_eq!(q.values(), &[1.0, 3.0]);
    }

    #[test]
    fn duplicate_samples_merge() {
        let q = StepQuantile::from_samples(&[2.0, 1.0, 2.0, 1.0], None).unwrap();
        assert_eq!(q.breakpoints(), &[0.5, 1.0]);
        assert_eq!(q.values(), &[1.0, 2.0]);
    }

    #[test]
    fn sample_errors() {
        assert_eq!(
            StepQuantile::from_samples(&[], None),
            Err(RiskError::EmptySample)
        );
        assert!(matches!(
            StepQuantile::from_samples(&[1.0, 2.0], Some(&[0.5, 0.6])),
            Err(RiskError::BadWeights(_))
        ));
        assert!(matches!(
            StepQuantile::from_samples(&[1.0, 2.0], Some(&[1.5, -0.5])),
            Err(RiskError::BadWeights(_))
        ));
        assert!(matches!(
            StepQuantile::from_samples(&[1.0, 2.0], Some(&[1.0])),
            Err(RiskError::BadWeights(_))
        ));
    }

    #[test]
    fn constructor_validation() {
        assert!(StepQuantile::new(vec![0.5, 1.0], vec![2.0, 1.0]).is_err());
        assert!(StepQuantile::new(vec![0.5, 0.5, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepQuantile::new(vec![0.5, 0.9], vec![1.0, 2.0]).is_err());
        assert!(StepQuantile::new(vec![1.0], vec![f64::NAN]).is_err());
    }

    #[test]
    fn var_is_left_quantile() {
        let q = four();
        assert_eq!(q.var(0.5).unwrap(), 2.0);
        assert_eq!(q.var(0.50001).unwrap(), 3.0);
        assert_eq!(q.var(0.0).unwrap(), 1.0);
        assert_eq!(q.var(1.0).unwrap(), 4.0);
        assert_eq!(q.var(1.1), Err(RiskError::OutOfRangeLevel(1.1)));
    }

    #[test]
    fn es_values() {
        let q = four();
        assert_eq!(q.es(0.0).unwrap(), 2.5);
        assert!((q.es(0.5).unwrap() - 3.5).abs() < 1e-15);
        assert_eq!(q.es(1.0).unwrap(), 4.0);
        assert_eq!(q.es(-0.1), Err(RiskError::OutOfRangeLevel(-0.1)));
    }

    #[test]
    fn curve_knots() {
        let curve = es_curve(&four());
        let expected = [(0.0, 2.5), (0.25, 3.0), (0.5, 3.5), (0.75, 4.0), (1.0, 4.0)];
        for ((p, v), (ep, ev)) in curve.knots().into_iter().zip(expected) {
            assert_eq!(p, ep);
            assert!((v - ev).abs() < 1e-12);
        }
        let flat = es_curve(&StepQuantile::constant(5.0));
        for i in 0..=10 {
            assert_eq!(flat.eval(i as f64 / 10.0).unwrap(), 5.0);
        }
        assert_eq!(curve.integrated(1.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_basics() {
        let g = GaussianLoss::new(0.0, 1.0).unwrap();
        assert_eq!(g.var(0.5).unwrap(), 0.0);
        assert_eq!(g.var(0.0), Err(RiskError::UnboundedQuantile(0.0)));
        assert_eq!(g.var(1.0), Err(RiskError::UnboundedQuantile(1.0)));
        assert_eq!(g.es(1.0).unwrap(), f64::INFINITY);
        assert_eq!(g.es(0.0).unwrap(), 0.0);
        assert!(GaussianLoss::new(0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_es_reference_values() {
        let x1 = gaussian_es(1.0, 0.125, 0.99).unwrap();
        assert!((x1 - 1.33).abs() < 0.01);
        let x2 = gaussian_es(0.0, 0.5, 0.9975).unwrap();
        assert!((x2 - 0.1 - 1.45).abs() < 0.01);
        assert_eq!(gaussian_es(3.0, 0.0, 0.7).unwrap(), 3.0);
        assert!(gaussian_es(0.0, 1.0, 1.0).is_err());
        assert!(gaussian_es(0.0, 1.0, 0.0).is_err());
        let g = GaussianLoss::new(1.0, 0.125).unwrap();
        assert!((g.es(0.99).unwrap() - x1).abs() < 1e-12);
    }

    #[test]
    fn discretization_preserves_es_on_grid() {
        let g = GaussianLoss::new(0.0, 0.5).unwrap();
        let d = g.discretize(10_000).unwrap();
        for &p in &[0.5, 0.9, 0.99, 0.9975] {
            let exact = g.es(p).unwrap();
            assert!((d.es(p).unwrap() - exact).abs() < 1e-8, "p = {p}");
        }
        assert!(d.mean().abs() < 1e-12);
    }

    #[test]
    fn comonotone_sum_adds_quantiles() {
        let a = four();
        let b = StepQuantile::from_samples(&[0.0, 1.0], None).unwrap();
        let s = a.comonotone_sum(&b);
        for &p in &[0.0, 0.1, 0.3, 0.5, 0.6, 0.9, 1.0] {
            let lhs = s.es(p).unwrap();
            let rhs = a.es(p).unwrap() + b.es(p).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
