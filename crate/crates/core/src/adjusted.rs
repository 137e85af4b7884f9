//! `ES^g(X) = sup_p { ES_p(X) - g(p) }` and the structural results built on it.
//!
//! Writing the objective as `(H(p) - h_g(p)) / (1 - p)` with `H(p) = int_p^1 VaR_u du`,
//! both numerator terms are affine between consecutive breakpoints of `X` and `g`.
//! A ratio `(a + b p) / (1 - p)` is monotone on such a piece, so the supremum is a
//! maximum over the merged breakpoints together with `p = 0` and `p = 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, RiskError};
use crate::profile::{
    benchmark_from_es_profile, sum_profiles, HFunction, ProfileClass, ProfileShape, RiskProfile,
};
use crate::quantile::{merge_levels, GaussianLoss, LossDistribution, StepQuantile};
use crate::EXACT_TOL;

/// Atom count used when a Gaussian loss is discretized for `ES^g`.
pub const DEFAULT_GAUSSIAN_ATOMS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustedEsResult {
    pub value: f64,
    /// Smallest level attaining the supremum.
    pub argmax_p: f64,
    pub finite: bool,
    /// Set when the loss was replaced by an equal-probability discretization.
    pub discretized: bool,
}

fn rel_tol(x: f64) -> f64 {
    EXACT_TOL * x.abs().max(1.0)
}

/// Levels at which `ES_p(X) - g(p)` can attain its supremum.
pub fn candidate_levels(x: &StepQuantile, g: &RiskProfile) -> Vec<f64> {
    let mut levels = merge_levels(x.breakpoints(), &g.breakpoints());
    levels = merge_levels(&levels, &[0.0, 1.0]);
    levels
}

/// Exact `ES^g(X)` for a finitely supported loss.
pub fn adjusted_es(x: &StepQuantile, g: &RiskProfile) -> AdjustedEsResult {
    let mut finite: Vec<(f64, f64, f64)> = Vec::new();
    for p in candidate_levels(x, g) {
        let gp = g.value(p);
        if gp == f64::INFINITY {
            // inf - inf = -inf: the level never contributes
            continue;
        }
        finite.push((p, x.es(p).expect("candidate level in [0, 1]"), gp));
    }
    // ES_p is nondecreasing in p; undo rounding inversions between nearby levels
    for i in (0..finite.len().saturating_sub(1)).rev() {
        finite[i].1 = finite[i].1.min(finite[i + 1].1);
    }
    let evaluated: Vec<(f64, f64)> = finite.iter().map(|&(p, es, gp)| (p, es - gp)).collect();
    // g(0) < inf, so p = 0 always survives
    let best = evaluated
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = rel_tol(best);
    let argmax_p = evaluated
        .iter()
        .find(|&&(_, v)| v >= best - tol)
        .map(|&(p, _)| p)
        .unwrap_or(0.0);
    AdjustedEsResult {
        value: best,
        argmax_p,
        finite: best.is_finite(),
        discretized: false,
    }
}

/// `ES^g` of a Gaussian loss through its `atoms`-point equal-probability
/// discretization (exact ES at every multiple of `1 / atoms`).
pub fn adjusted_es_gaussian(
    x: &GaussianLoss,
    g: &RiskProfile,
    atoms: usize,
) -> Result<AdjustedEsResult> {
    let q = x.discretize(atoms)?;
    let mut result = adjusted_es(&q, g);
    result.discretized = true;
    Ok(result)
}

/// `X` lies in the acceptance set `{ES_p(X) <= g(p) for all p}`.
pub fn is_acceptable(x: &StepQuantile, g: &RiskProfile) -> bool {
    adjusted_es(x, g).value <= EXACT_TOL
}

fn h_tol(h: &HFunction) -> f64 {
    let scale = h
        .pieces()
        .iter()
        .flat_map(|piece| [piece.intercept.abs(), piece.slope.abs()])
        .fold(1.0, f64::max);
    EXACT_TOL * scale
}

/// Whether `g` is constant on `(0, p)`, i.e. `ES^g(X)` depends only on the
/// quantiles of `X` above `p`.
pub fn has_p_tail_property(g: &RiskProfile, p: f64) -> Result<bool> {
    if !(p > 0.0 && p < 1.0) {
        return Err(RiskError::OutOfRangeLevel(p));
    }
    let (end, closed) = g.finite_region();
    if end < p || (end == p && !closed && end < 1.0) {
        return Ok(false);
    }
    let h = g.h_function();
    let tol = h_tol(&h);
    let mut level: Option<f64> = None;
    for piece in h.pieces().iter().filter(|piece| piece.start < p) {
        // g = (a + b q) / (1 - q) is constant c on the piece iff a = c and b = -c
        if (piece.intercept + piece.slope).abs() > tol {
            return Ok(false);
        }
        match level {
            None => level = Some(piece.intercept),
            Some(c) if (c - piece.intercept).abs() > tol => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Homogeneity {
    /// `ES^g = ES_p` with `p = sup{q : g(q) = 0}`.
    Homogeneous { level: f64 },
    NotHomogeneous,
}

/// End of the leading region where `g` vanishes, or `None` if `g(0) != 0`.
fn zero_region_end(g: &RiskProfile) -> Option<f64> {
    let h = g.h_function();
    let tol = h_tol(&h);
    let g0 = g.value(0.0);
    if g0.abs() > tol {
        return None;
    }
    let mut end = 0.0;
    for piece in h.pieces() {
        if piece.intercept.abs() <= tol && piece.slope.abs() <= tol {
            end = piece.end;
        } else {
            break;
        }
    }
    Some(end)
}

/// Positive homogeneity of `ES^g`: holds exactly when `g` is zero on its whole
/// finite region (it then equals `ES_p` at the end of that region).
pub fn homogeneity_analysis(g: &RiskProfile) -> Homogeneity {
    match zero_region_end(g) {
        Some(end) if end > 0.0 && end == g.finite_region().0 => {
            Homogeneity::Homogeneous { level: end }
        }
        _ => Homogeneity::NotHomogeneous,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    /// `dQ/dP` on the atoms of `X`, in increasing order of value.
    pub density: Vec<f64>,
    /// Level `p` with `||dQ/dP||_inf = 1 / (1 - p)`.
    pub level: f64,
    pub dual_value: f64,
}

/// Tail measure attaining `ES_{p*}(X)` at the maximizing level `p*`.
pub fn dual_certificate(x: &StepQuantile, g: &RiskProfile) -> Result<DualCertificate> {
    let primal = adjusted_es(x, g);
    let p_star = primal.argmax_p;
    if p_star >= 1.0 {
        return Err(RiskError::ArgmaxAtOne);
    }
    let mass = 1.0 - p_star;
    let mut density = Vec::with_capacity(x.len());
    let mut start = 0.0;
    let mut expectation = 0.0;
    let mut whole_atom_above = false;
    for (&end, &v) in x.breakpoints().iter().zip(x.values()) {
        let width = end - start;
        let d = if start >= p_star {
            whole_atom_above = true;
            1.0 / mass
        } else if end > p_star {
            (end - p_star) / (mass * width)
        } else {
            0.0
        };
        expectation += d * width * v;
        density.push(d);
        start = end;
    }
    let level = if whole_atom_above || x.len() == 1 {
        p_star
    } else {
        // only the top atom carries mass and its density is 1 / (its weight)
        x.breakpoints()[x.len() - 2]
    };
    let dual_value = expectation - g.value(level);
    Ok(DualCertificate {
        density,
        level,
        dual_value,
    })
}

/// Dual objective `E[D X] - g(1 - 1 / max D)` for a density `D` on the atoms of `X`.
pub fn dual_objective(x: &StepQuantile, g: &RiskProfile, density: &[f64]) -> Result<f64> {
    if density.len() != x.len() {
        return Err(RiskError::InvalidParameter(format!(
            "density has {} entries for {} atoms",
            density.len(),
            x.len()
        )));
    }
    if density.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
        return Err(RiskError::InvalidParameter(
            "density must be finite and nonnegative".into(),
        ));
    }
    let (mut total, mut expectation) = (0.0, 0.0);
    for ((w, v), d) in x.atoms().zip(density) {
        total += w * d;
        expectation += w * d * v;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(RiskError::InvalidParameter(format!(
            "density must integrate to 1, got {total}"
        )));
    }
    let sup = density.iter().copied().fold(0.0, f64::max);
    let level = (1.0 - 1.0 / sup).clamp(0.0, 1.0);
    Ok(expectation - g.value(level))
}

// ---------------------------------------------------------------------------
// inf-convolution

/// A split `X = X_1 + ... + X_n` on a common probability partition: every part is a
/// function of the uniform variable generating `X`, constant on each cell
/// `(breakpoints[k-1], breakpoints[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub breakpoints: Vec<f64>,
    /// `parts[i][k]`: value of `X_i` on cell `k`.
    pub parts: Vec<Vec<f64>>,
}

impl Allocation {
    /// Checks that the cells refine the partition of `x` and the parts add up to `x`.
    pub fn validate(&self, x: &StepQuantile) -> Result<()> {
        let bad = |msg: String| RiskError::BadAllocation(msg);
        let cells = self.breakpoints.len();
        if cells == 0 || *self.breakpoints.last().unwrap() != 1.0 {
            return Err(bad("cell breakpoints must end at 1".into()));
        }
        if self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) || !(self.breakpoints[0] > 0.0) {
            return Err(bad("cell breakpoints must increase strictly in (0, 1]".into()));
        }
        for &b in x.breakpoints() {
            let idx = self.breakpoints.partition_point(|&c| c < b - EXACT_TOL);
            if idx == cells || (self.breakpoints[idx] - b).abs() > EXACT_TOL {
                return Err(bad(format!("cells do not refine the loss breakpoint {b}")));
            }
        }
        for (i, part) in self.parts.iter().enumerate() {
            if part.len() != cells {
                return Err(bad(format!("part {i} has {} cells, expected {cells}", part.len())));
            }
        }
        for (k, &end) in self.breakpoints.iter().enumerate() {
            let target = x.var(end)?;
            let sum: f64 = self.parts.iter().map(|part| part[k]).sum();
            if (sum - target).abs() > rel_tol(target) {
                return Err(bad(format!(
                    "parts sum to {sum} on cell {k}, loss value is {target}"
                )));
            }
        }
        Ok(())
    }

    /// Distribution of part `i`.
    pub fn part_quantile(&self, i: usize) -> Result<StepQuantile> {
        let mut start = 0.0;
        let weights: Vec<f64> = self
            .breakpoints
            .iter()
            .map(|&end| {
                let w = end - start;
                start = end;
                w
            })
            .collect();
        StepQuantile::from_samples(&self.parts[i], Some(&weights))
    }
}

/// Source of candidate allocations for the inf-convolution.
pub trait AllocationSampler {
    fn allocations(&self, x: &StepQuantile, profiles: &[RiskProfile]) -> Result<Vec<Allocation>>;
}

/// `X_i = X / n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EqualSplit;

impl AllocationSampler for EqualSplit {
    fn allocations(&self, x: &StepQuantile, profiles: &[RiskProfile]) -> Result<Vec<Allocation>> {
        let n = profiles.len() as f64;
        let part: Vec<f64> = x.values().iter().map(|v| v / n).collect();
        Ok(vec![Allocation {
            breakpoints: x.breakpoints().to_vec(),
            parts: vec![part; profiles.len()],
        }])
    }
}

/// `X_i = Z_i + (X - sum_j Z_j) / n` with every `Z_i` comonotone with `X`, where `Z_i` is
/// the benchmark of an ES-class profile `g_i` (zero for other profiles).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComonotoneSplit;

impl AllocationSampler for ComonotoneSplit {
    fn allocations(&self, x: &StepQuantile, profiles: &[RiskProfile]) -> Result<Vec<Allocation>> {
        let benchmarks: Vec<Option<StepQuantile>> = profiles
            .iter()
            .map(|g| match g.shape() {
                ProfileShape::BenchmarkEs(z) if g.truncate_at().is_none() => Some(z.clone()),
                _ if g.classify() == ProfileClass::EsClass => benchmark_from_es_profile(g).ok(),
                _ => None,
            })
            .collect();
        let mut cells = x.breakpoints().to_vec();
        for z in benchmarks.iter().flatten() {
            cells = merge_levels(&cells, z.breakpoints());
        }
        let n = profiles.len() as f64;
        let mut parts = vec![Vec::with_capacity(cells.len()); profiles.len()];
        for &end in &cells {
            let zs: Vec<f64> = benchmarks
                .iter()
                .map(|z| z.as_ref().map_or(Ok(0.0), |z| z.var(end)))
                .collect::<Result<_>>()?;
            let residual = (x.var(end)? - zs.iter().sum::<f64>()) / n;
            for (part, z) in parts.iter_mut().zip(&zs) {
                part.push(z + residual);
            }
        }
        Ok(vec![Allocation {
            breakpoints: cells,
            parts,
        }])
    }
}

/// Random cellwise splits: positive random weights of `X` plus zero-sum noise.
#[derive(Debug, Clone, Copy)]
pub struct RandomSplit {
    pub seed: u64,
    pub count: usize,
}

impl AllocationSampler for RandomSplit {
    fn allocations(&self, x: &StepQuantile, profiles: &[RiskProfile]) -> Result<Vec<Allocation>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = profiles.len();
        let spread = x.max() - x.min() + 1.0;
        let mut out = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let mut parts = vec![Vec::with_capacity(x.len()); n];
            for &v in x.values() {
                let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = weights.iter().sum();
                let mut assigned = 0.0;
                for (i, part) in parts.iter_mut().enumerate() {
                    let value = if i + 1 == n {
                        v - assigned
                    } else {
                        v * weights[i] / total + spread * rng.gen_range(-0.5..0.5)
                    };
                    assigned += value;
                    part.push(value);
                }
            }
            out.push(Allocation {
                breakpoints: x.breakpoints().to_vec(),
                parts,
            });
        }
        Ok(out)
    }
}

/// Caller-supplied allocations.
#[derive(Debug, Clone, Default)]
pub struct FixedAllocations(pub Vec<Allocation>);

impl AllocationSampler for FixedAllocations {
    fn allocations(&self, _: &StepQuantile, _: &[RiskProfile]) -> Result<Vec<Allocation>> {
        Ok(self.0.clone())
    }
}

/// Several samplers queried in turn.
pub struct Combined<'a>(pub Vec<&'a dyn AllocationSampler>);

impl AllocationSampler for Combined<'_> {
    fn allocations(&self, x: &StepQuantile, profiles: &[RiskProfile]) -> Result<Vec<Allocation>> {
        let mut out = Vec::new();
        for sampler in &self.0 {
            out.extend(sampler.allocations(x, profiles)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfConvolution {
    /// `ES^{g_1 + ... + g_n}(X)`.
    pub lower_bound: f64,
    /// Smallest `sum_i ES^{g_i}(X_i)` over the sampled allocations.
    pub best_found: f64,
    pub best_index: usize,
}

pub fn inf_convolution_value(
    x: &StepQuantile,
    gs: &[RiskProfile],
    sampler: &dyn AllocationSampler,
) -> Result<InfConvolution> {
    let lower_bound = adjusted_es(x, &sum_profiles(gs)?).value;
    let allocations = sampler.allocations(x, gs)?;
    if allocations.is_empty() {
        return Err(RiskError::BadAllocation("sampler produced no allocations".into()));
    }
    let mut best = (f64::INFINITY, 0);
    for (idx, allocation) in allocations.iter().enumerate() {
        if allocation.parts.len() != gs.len() {
            return Err(RiskError::BadAllocation(format!(
                "allocation {idx} has {} parts for {} profiles",
                allocation.parts.len(),
                gs.len()
            )));
        }
        allocation.validate(x)?;
        let mut total = 0.0;
        for (i, g) in gs.iter().enumerate() {
            total += adjusted_es(&allocation.part_quantile(i)?, g).value;
        }
        if total < best.0 {
            best = (total, idx);
        }
    }
    Ok(InfConvolution {
        lower_bound,
        best_found: best.0,
        best_index: best.1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegulatoryArbitrage {
    pub gap: f64,
    /// `lim_n ES^{n g}(X) = ES_{p0}(X)` with `p0 = sup{p : g(p) = 0}`.
    pub limit: f64,
    pub level: f64,
}

pub fn regulatory_arbitrage(x: &StepQuantile, g: &RiskProfile) -> Result<RegulatoryArbitrage> {
    let level = zero_region_end(g).ok_or(RiskError::ProfileNotNormalized(g.value(0.0)))?;
    let limit = x.es(level)?;
    let gap = adjusted_es(x, g).value - limit;
    Ok(RegulatoryArbitrage { gap, limit, level })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparability {
    /// `ES_p(X)`.
    pub base: f64,
    /// `ES^g(X) - ES_p(X)`.
    pub exceedance: f64,
}

/// Splits `ES^g(X)` into `ES_p(X)` and the extra capital charged by `g`; requires
/// `g = 0` on `[0, p)`.
pub fn comparability_decomposition(
    x: &StepQuantile,
    g: &RiskProfile,
    p: f64,
) -> Result<Comparability> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RiskError::OutOfRangeLevel(p));
    }
    match zero_region_end(g) {
        Some(end) if p <= end => {}
        _ => return Err(RiskError::ProfileNotFlatBelowP(p)),
    }
    let base = x.es(p)?;
    // ES_p <= ES_{p0} <= ES^g; only rounding can push the difference below zero
    let exceedance = (adjusted_es(x, g).value - base).max(0.0);
    Ok(Comparability { base, exceedance })
}
