//! Risk profiles `g : [0,1] -> (-inf, +inf]`.
//!
//! Every profile here has a piecewise-affine transform `h_g(p) = (1-p) g(p)`
//! (with `0 * inf = 0`, so `h_g(1) = 0`). Membership in the VaR and ES profile
//! classes, the benchmark losses realizing a profile and the exact `ES^g`
//! evaluation in [`crate::adjusted`] are all read off that representation.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::quantile::{merge_levels, LossDistribution, StepQuantile};

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    /// `g = levels[0]` on `[0, t_0]`, `levels[i]` on `(t_{i-1}, t_i]`, `+inf` above the
    /// last threshold (no infinite region when the last threshold is 1).
    PiecewiseConstant {
        levels: Vec<f64>,
        thresholds: Vec<f64>,
    },
    /// `g(p) = ES_p(Z)`.
    BenchmarkEs(StepQuantile),
    /// `g(p) = scale / (1 - p)`, `g(1) = +inf`.
    Hyperbolic { scale: f64 },
    /// Pointwise sum of profiles that do not collapse into a single family.
    Sum(Vec<RiskProfile>),
}

/// A nondecreasing profile with `g(0) < inf`, optionally forced to `+inf` above a
/// truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskProfile {
    shape: ProfileShape,
    truncate_at: Option<f64>,
}

/// Nested classes `ESClass ⊂ VaRClass ⊂ GeneralOnly`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProfileClass {
    /// ES profile of some integrable loss (`h_g` concave, `h_g(1-) = 0`).
    EsClass,
    /// VaR profile of some loss bounded from below (finite on `[0,1)`).
    VarClass,
    GeneralOnly,
}

impl ProfileClass {
    pub fn label(&self) -> &'static str {
        match self {
            ProfileClass::EsClass => "ES",
            ProfileClass::VarClass => "VaR",
            ProfileClass::GeneralOnly => "general",
        }
    }
}

/// Affine piece `h(p) = intercept + slope * p` on `(start, end]` (the first piece also
/// covers `p = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPiece {
    pub start: f64,
    pub end: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl HPiece {
    pub fn at(&self, p: f64) -> f64 {
        self.intercept + self.slope * p
    }
}

/// Piecewise-affine `h_g` on its finite region `[0, finite_end]`; `+inf` on
/// `(finite_end, 1)` and `0` at `p = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HFunction {
    pieces: Vec<HPiece>,
    finite_end: f64,
}

impl HFunction {
    pub fn pieces(&self) -> &[HPiece] {
        &self.pieces
    }

    pub fn finite_end(&self) -> f64 {
        self.finite_end
    }

    pub fn eval(&self, p: f64) -> f64 {
        if p == 1.0 {
            return 0.0;
        }
        if p > self.finite_end {
            return f64::INFINITY;
        }
        let idx = self
            .pieces
            .partition_point(|piece| piece.end < p)
            .min(self.pieces.len() - 1);
        self.pieces[idx].at(p)
    }

    /// `lim_{p -> 1-} h(p)`; `+inf` when the finite region stops before 1.
    pub fn left_limit_at_one(&self) -> f64 {
        if self.finite_end < 1.0 {
            return f64::INFINITY;
        }
        let last = self.pieces.last().unwrap();
        last.intercept + last.slope
    }

    fn scale(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| [p.intercept.abs(), p.slope.abs()])
            .fold(1.0, f64::max)
    }

    /// Concavity on `(0, 1)` for a piecewise-affine function: continuity at every
    /// interior knot and nonincreasing slopes, both at relative tolerance 1e-12.
    pub fn is_concave(&self) -> bool {
        let tol = crate::EXACT_TOL * self.scale();
        self.pieces.windows(2).all(|w| {
            let knot = w[0].end;
            let jump = (w[1].at(knot) - w[0].at(knot)).abs();
            jump <= tol && w[1].slope <= w[0].slope + tol
        })
    }

    fn clipped(mut self, t: f64) -> Self {
        if t >= self.finite_end {
            return self;
        }
        self.pieces.retain(|piece| piece.start < t);
        if let Some(last) = self.pieces.last_mut() {
            last.end = t;
        }
        self.finite_end = t;
        self
    }

    fn sum(parts: &[HFunction]) -> HFunction {
        let finite_end = parts.iter().map(|h| h.finite_end).fold(1.0, f64::min);
        let mut knots: Vec<f64> = Vec::new();
        for h in parts {
            knots = merge_levels(&knots, &h.pieces.iter().map(|p| p.end).collect::<Vec<_>>());
        }
        knots.retain(|&k| k < finite_end);
        knots.push(finite_end);
        let mut pieces = Vec::with_capacity(knots.len());
        let mut start = 0.0;
        for &end in &knots {
            let (mut intercept, mut slope) = (0.0, 0.0);
            for h in parts {
                let idx = h
                    .pieces
                    .partition_point(|piece| piece.end < end)
                    .min(h.pieces.len() - 1);
                intercept += h.pieces[idx].intercept;
                slope += h.pieces[idx].slope;
            }
            pieces.push(HPiece {
                start,
                end,
                intercept,
                slope,
            });
            start = end;
        }
        HFunction { pieces, finite_end }
    }
}

fn validate_level(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(RiskError::OutOfRangeLevel(p))
    }
}

impl RiskProfile {
    fn from_shape(shape: ProfileShape) -> Self {
        RiskProfile {
            shape,
            truncate_at: None,
        }
    }

    /// Piecewise-constant profile. Thresholds are strictly increasing in `(0, 1]`;
    /// a last threshold below 1 makes `g = +inf` above it.
    pub fn piecewise_constant(levels: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(RiskError::InvalidProfile("levels: must not be empty".into()));
        }
        if levels.len() != thresholds.len() {
            return Err(RiskError::InvalidProfile(format!(
                "thresholds: expected {} entries, got {}",
                levels.len(),
                thresholds.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &t) in thresholds.iter().enumerate() {
            if !(t > prev && t <= 1.0) {
                return Err(RiskError::InvalidProfile(format!(
                    "thresholds[{i}]: {t} must be strictly increasing in (0, 1]"
                )));
            }
            prev = t;
        }
        for (i, &r) in levels.iter().enumerate() {
            if !r.is_finite() {
                return Err(RiskError::InvalidProfile(format!(
                    "levels[{i}]: must be finite"
                )));
            }
            if i > 0 && r < levels[i - 1] {
                return Err(RiskError::InvalidProfile(format!(
                    "levels[{i}]: profile must be nondecreasing"
                )));
            }
        }
        Ok(Self::from_shape(ProfileShape::PiecewiseConstant { levels, thresholds }))
    }

    /// `g = c` on `[0, 1]`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::piecewise_constant(vec![c], vec![1.0])
    }

    /// `g = 0` on `[0, p]`, `+inf` above: `ES^g = ES_p`.
    pub fn standard_es(p: f64) -> Result<Self> {
        Self::piecewise_constant(vec![0.0], vec![p])
    }

    pub fn benchmark_es(benchmark: StepQuantile) -> Self {
        Self::from_shape(ProfileShape::BenchmarkEs(benchmark))
    }

    pub fn hyperbolic(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(RiskError::InvalidProfile(format!(
                "scale: must be finite and positive, got {scale}"
            )));
        }
        Ok(Self::from_shape(ProfileShape::Hyperbolic { scale }))
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn truncate_at(&self) -> Option<f64> {
        self.truncate_at
    }

    /// Value of `g` at `p`, `+inf` in the infinite region.
    pub fn eval(&self, p: f64) -> Result<f64> {
        validate_level(p)?;
        Ok(self.value(p))
    }

    pub(crate) fn value(&self, p: f64) -> f64 {
        if let Some(t) = self.truncate_at {
            if p > t {
                return f64::INFINITY;
            }
        }
        match &self.shape {
            ProfileShape::PiecewiseConstant { levels, thresholds } => {
                let idx = thresholds.partition_point(|&t| t < p);
                levels.get(idx).copied().unwrap_or(f64::INFINITY)
            }
            ProfileShape::BenchmarkEs(z) => z.es(p).expect("level checked"),
            ProfileShape::Hyperbolic { scale } => {
                if p == 1.0 {
                    f64::INFINITY
                } else {
                    scale / (1.0 - p)
                }
            }
            ProfileShape::Sum(parts) => parts.iter().map(|g| g.value(p)).sum(),
        }
    }

    /// Finite region as `(end, closed)`: `g < inf` on `[0, end]` when `closed`,
    /// on `[0, end)` otherwise.
    pub fn finite_region(&self) -> (f64, bool) {
        let (mut end, mut closed) = match &self.shape {
            ProfileShape::PiecewiseConstant { thresholds, .. } => {
                (*thresholds.last().unwrap(), true)
            }
            ProfileShape::BenchmarkEs(_) => (1.0, true),
            ProfileShape::Hyperbolic { .. } => (1.0, false),
            ProfileShape::Sum(parts) => {
                let mut region = (1.0, true);
                for g in parts {
                    let (e, c) = g.finite_region();
                    if e < region.0 {
                        region = (e, c);
                    } else if e == region.0 {
                        region.1 &= c;
                    }
                }
                region
            }
        };
        if let Some(t) = self.truncate_at {
            if t < end {
                end = t;
                closed = true;
            }
        }
        (end, closed)
    }

    /// Levels in `(0, 1]` where the representation changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.shape {
            ProfileShape::PiecewiseConstant { thresholds, .. } => thresholds.clone(),
            ProfileShape::BenchmarkEs(z) => z.breakpoints().to_vec(),
            ProfileShape::Hyperbolic { .. } => Vec::new(),
            ProfileShape::Sum(parts) => parts
                .iter()
                .fold(Vec::new(), |acc, g| merge_levels(&acc, &g.breakpoints())),
        };
        if let Some(t) = self.truncate_at {
            out = merge_levels(&out, &[t]);
        }
        out
    }

    /// The transform `h_g(p) = (1 - p) g(p)`.
    pub fn h_function(&self) -> HFunction {
        let h = match &self.shape {
            ProfileShape::PiecewiseConstant { levels, thresholds } => {
                let mut start = 0.0;
                let pieces = levels
                    .iter()
                    .zip(thresholds)
                    .map(|(&r, &end)| {
                        let piece = HPiece {
                            start,
                            end,
                            intercept: r,
                            slope: -r,
                        };
                        start = end;
                        piece
                    })
                    .collect();
                HFunction {
                    pieces,
                    finite_end: *thresholds.last().unwrap(),
                }
            }
            ProfileShape::BenchmarkEs(z) => {
                let mut start = 0.0;
                let pieces = z
                    .breakpoints()
                    .iter()
                    .zip(z.values())
                    .map(|(&end, &v)| {
                        let tail = z.integrated_tail(end).expect("breakpoint in range");
                        let piece = HPiece {
                            start,
                            end,
                            intercept: tail + v * end,
                            slope: -v,
                        };
                        start = end;
                        piece
                    })
                    .collect();
                HFunction {
                    pieces,
                    finite_end: 1.0,
                }
            }
            ProfileShape::Hyperbolic { scale } => HFunction {
                pieces: vec![HPiece {
                    start: 0.0,
                    end: 1.0,
                    intercept: *scale,
                    slope: 0.0,
                }],
                finite_end: 1.0,
            },
            ProfileShape::Sum(parts) => {
                HFunction::sum(&parts.iter().map(|g| g.h_function()).collect::<Vec<_>>())
            }
        };
        match self.truncate_at {
            Some(t) => h.clipped(t),
            None => h,
        }
    }

    /// Membership in the ES / VaR profile classes, decided from `h_g`.
    pub fn classify(&self) -> ProfileClass {
        let (end, _) = self.finite_region();
        if end < 1.0 {
            return ProfileClass::GeneralOnly;
        }
        let h = self.h_function();
        let tol = crate::EXACT_TOL * h.scale();
        if h.is_concave() && h.left_limit_at_one().abs() <= tol {
            ProfileClass::EsClass
        } else {
            ProfileClass::VarClass
        }
    }

    fn untruncated(&self) -> RiskProfile {
        RiskProfile {
            shape: self.shape.clone(),
            truncate_at: None,
        }
    }

    /// Pointwise `n * g`.
    pub fn scaled(&self, n: f64) -> Result<RiskProfile> {
        if !(n > 0.0) || !n.is_finite() {
            return Err(RiskError::InvalidParameter(format!(
                "profile scale must be finite and positive, got {n}"
            )));
        }
        let shape = match &self.shape {
            ProfileShape::PiecewiseConstant { levels, thresholds } => {
                ProfileShape::PiecewiseConstant {
                    levels: levels.iter().map(|r| r * n).collect(),
                    thresholds: thresholds.clone(),
                }
            }
            ProfileShape::BenchmarkEs(z) => ProfileShape::BenchmarkEs(z.scaled(n)?),
            ProfileShape::Hyperbolic { scale } => ProfileShape::Hyperbolic { scale: scale * n },
            ProfileShape::Sum(parts) => ProfileShape::Sum(
                parts
                    .iter()
                    .map(|g| g.scaled(n))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(RiskProfile {
            shape,
            truncate_at: self.truncate_at,
        })
    }

    /// `h = g` on `[0, level]`, `+inf` above.
    pub fn truncated(&self, level: f64) -> Result<RiskProfile> {
        if !(level > 0.0 && level < 1.0) {
            return Err(RiskError::OutOfRangeLevel(level));
        }
        let t = self.truncate_at.map_or(level, |old| old.min(level));
        Ok(RiskProfile {
            shape: self.shape.clone(),
            truncate_at: Some(t),
        })
    }
}

/// Pointwise sum `sum_i g_i` (with `+inf` absorbing). Profiles of the same family
/// are combined in closed form; mixed families are kept as a [`ProfileShape::Sum`].
pub fn sum_profiles(gs: &[RiskProfile]) -> Result<RiskProfile> {
    if gs.is_empty() {
        return Err(RiskError::InvalidProfile("cannot sum an empty list".into()));
    }
    let truncate_at = gs
        .iter()
        .filter_map(|g| g.truncate_at)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))));

    let mut flat: Vec<RiskProfile> = Vec::new();
    let mut stack: Vec<RiskProfile> = gs.iter().map(|g| g.untruncated()).collect();
    stack.reverse();
    while let Some(g) = stack.pop() {
        match g.shape {
            ProfileShape::Sum(parts) => {
                for part in parts.into_iter().rev() {
                    stack.push(part);
                }
            }
            _ => flat.push(g),
        }
    }

    let mut piecewise: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut benchmark: Option<StepQuantile> = None;
    let mut hyperbolic: Option<f64> = None;
    let mut other: Vec<RiskProfile> = Vec::new();
    for g in flat {
        match g.shape {
            ProfileShape::PiecewiseConstant { levels, thresholds } => {
                piecewise = Some(match piecewise {
                    None => (levels, thresholds),
                    Some((l0, t0)) => add_piecewise(&l0, &t0, &levels, &thresholds),
                });
            }
            ProfileShape::BenchmarkEs(z) => {
                benchmark = Some(match benchmark {
                    None => z,
                    Some(acc) => acc.comonotone_sum(&z),
                });
            }
            ProfileShape::Hyperbolic { scale } => {
                hyperbolic = Some(hyperbolic.unwrap_or(0.0) + scale);
            }
            ProfileShape::Sum(_) => other.push(g),
        }
    }
    let mut parts: Vec<RiskProfile> = Vec::new();
    if let Some((levels, thresholds)) = piecewise {
        parts.push(RiskProfile::from_shape(ProfileShape::PiecewiseConstant {
            levels,
            thresholds,
        }));
    }
    if let Some(z) = benchmark {
        parts.push(RiskProfile::benchmark_es(z));
    }
    if let Some(scale) = hyperbolic {
        parts.push(RiskProfile::from_shape(ProfileShape::Hyperbolic { scale }));
    }
    parts.extend(other);

    let shape = if parts.len() == 1 {
        parts.pop().unwrap().shape
    } else {
        ProfileShape::Sum(parts)
    };
    Ok(RiskProfile { shape, truncate_at })
}

fn add_piecewise(l0: &[f64], t0: &[f64], l1: &[f64], t1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let end = t0.last().unwrap().min(*t1.last().unwrap());
    let mut thresholds = merge_levels(t0, t1);
    thresholds.retain(|&t| t <= end);
    let levels = thresholds
        .iter()
        .map(|&t| l0[t0.partition_point(|&x| x < t)] + l1[t1.partition_point(|&x| x < t)])
        .collect();
    (levels, thresholds)
}

pub fn scale_profile(g: &RiskProfile, n: f64) -> Result<RiskProfile> {
    g.scaled(n)
}

pub fn truncate_profile(g: &RiskProfile, level: f64) -> Result<RiskProfile> {
    g.truncated(level)
}

pub fn classify(g: &RiskProfile) -> ProfileClass {
    g.classify()
}

pub fn h_function(g: &RiskProfile) -> HFunction {
    g.h_function()
}

/// A loss `Z` with `ES_p(Z) = g(p)` for every `p`: the quantile of `Z` is minus the
/// left derivative of `h_g`.
pub fn benchmark_from_es_profile(g: &RiskProfile) -> Result<StepQuantile> {
    if g.classify() != ProfileClass::EsClass {
        return Err(RiskError::NotEsClass);
    }
    let h = g.h_function();
    let mut breakpoints = Vec::with_capacity(h.pieces.len());
    let mut values: Vec<f64> = Vec::with_capacity(h.pieces.len());
    for piece in &h.pieces {
        let v = -piece.slope;
        // slopes are nonincreasing up to tolerance; keep the quantile monotone
        let v = values.last().map_or(v, |&prev| v.max(prev));
        breakpoints.push(piece.end);
        values.push(v);
    }
    Ok(StepQuantile::new(breakpoints, values)?.normalized())
}

/// Quantile handle of `Z = g(U)`, `U` uniform, so that `VaR_p(Z) = g(p)`.
#[derive(Debug, Clone, PartialEq)]
pub enum VarBenchmark {
    Step(StepQuantile),
    /// Quantile equal to the ES curve of the inner loss.
    EsCurveOf(StepQuantile),
    /// Quantile `scale / (1 - p)`, unbounded above.
    Hyperbolic { scale: f64 },
    /// Comonotone sum of the parts.
    Sum(Vec<VarBenchmark>),
}

impl VarBenchmark {
    pub fn var(&self, p: f64) -> Result<f64> {
        validate_level(p)?;
        Ok(match self {
            VarBenchmark::Step(q) => q.var(p)?,
            VarBenchmark::EsCurveOf(z) => z.es(p)?,
            VarBenchmark::Hyperbolic { scale } => {
                if p == 1.0 {
                    f64::INFINITY
                } else {
                    scale / (1.0 - p)
                }
            }
            VarBenchmark::Sum(parts) => {
                let mut total = 0.0;
                for part in parts {
                    total += part.var(p)?;
                }
                total
            }
        })
    }
}

pub fn var_benchmark_from_profile(g: &RiskProfile) -> Result<VarBenchmark> {
    if g.classify() == ProfileClass::GeneralOnly {
        return Err(RiskError::NotVarClass);
    }
    fn build(g: &RiskProfile) -> Result<VarBenchmark> {
        Ok(match &g.shape {
            ProfileShape::PiecewiseConstant { levels, thresholds } => {
                VarBenchmark::Step(StepQuantile::new(thresholds.clone(), levels.clone())?)
            }
            ProfileShape::BenchmarkEs(z) => VarBenchmark::EsCurveOf(z.clone()),
            ProfileShape::Hyperbolic { scale } => VarBenchmark::Hyperbolic { scale: *scale },
            ProfileShape::Sum(parts) => {
                VarBenchmark::Sum(parts.iter().map(build).collect::<Result<Vec<_>>>()?)
            }
        })
    }
    build(g)
}

// ---------------------------------------------------------------------------
// JSON schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub upto: f64,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKindSpec {
    PiecewiseConstant {
        pieces: Vec<PieceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        infinite_above: Option<f64>,
    },
    BenchmarkEs {
        quantile: QuantileSpec,
    },
    Hyperbolic {
        scale: f64,
    },
}

/// Serialized profile:
///
/// ```json
/// {"kind":"piecewise_constant","pieces":[{"upto":0.95,"level":0.0},{"upto":0.99,"level":0.01}],"infinite_above":0.99}
/// {"kind":"benchmark_es","quantile":{"breakpoints":[0.5,1.0],"values":[0.0,1.0]}}
/// {"kind":"hyperbolic","scale":1.0,"truncate_at":0.999}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    #[serde(flatten)]
    pub kind: ProfileKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncate_at: Option<f64>,
}

impl TryFrom<ProfileSpec> for RiskProfile {
    type Error = RiskError;

    fn try_from(spec: ProfileSpec) -> Result<Self> {
        let invalid = |msg: String| RiskError::InvalidProfile(msg);
        let profile = match spec.kind {
            ProfileKindSpec::PiecewiseConstant {
                pieces,
                infinite_above,
            } => {
                if pieces.is_empty() {
                    return Err(invalid("pieces: must not be empty".into()));
                }
                let mut prev = 0.0;
                for (i, piece) in pieces.iter().enumerate() {
                    if !(piece.upto > prev && piece.upto <= 1.0) {
                        return Err(invalid(format!(
                            "pieces[{i}].upto: {} must be strictly increasing in (0, 1]",
                            piece.upto
                        )));
                    }
                    if !piece.level.is_finite() {
                        return Err(invalid(format!("pieces[{i}].level: must be finite")));
                    }
                    if i > 0 && piece.level < pieces[i - 1].level {
                        return Err(invalid(format!(
                            "pieces[{i}].level: levels must be nondecreasing"
                        )));
                    }
                    prev = piece.upto;
                }
                let last = pieces.len() - 1;
                match infinite_above {
                    Some(t) if t != pieces[last].upto => {
                        return Err(invalid(format!(
                            "infinite_above: {t} must equal the last piece's upto {}",
                            pieces[last].upto
                        )));
                    }
                    Some(t) if t >= 1.0 => {
                        return Err(invalid("infinite_above: must be below 1".into()));
                    }
                    None if pieces[last].upto != 1.0 => {
                        return Err(invalid(format!(
                            "pieces[{last}].upto: must be 1 when infinite_above is absent"
                        )));
                    }
                    _ => {}
                }
                RiskProfile::piecewise_constant(
                    pieces.iter().map(|p| p.level).collect(),
                    pieces.iter().map(|p| p.upto).collect(),
                )?
            }
            ProfileKindSpec::BenchmarkEs { quantile } => {
                let z = StepQuantile::new(quantile.breakpoints, quantile.values)
                    .map_err(|e| invalid(format!("quantile: {e}")))?;
                RiskProfile::benchmark_es(z)
            }
            ProfileKindSpec::Hyperbolic { scale } => RiskProfile::hyperbolic(scale)?,
        };
        match spec.truncate_at {
            Some(t) if !(t > 0.0 && t < 1.0) => Err(invalid(format!(
                "truncate_at: {t} must lie in (0, 1)"
            ))),
            Some(t) => profile.truncated(t),
            None => Ok(profile),
        }
    }
}
