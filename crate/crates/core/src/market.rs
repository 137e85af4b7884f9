//! Finite complete market and the closed-form optimizers of the form `Z + z`.
//!
//! `Z` is a loss whose ES profile is the ES-class profile `g` (so `ES^g(Z) = 0`),
//! arranged comonotonically with the pricing density `dQ/dP`. The market is finite, so
//! states are split into sub-states of equal density whenever the benchmark quantile
//! changes inside a state; this keeps the construction exact.
//!
//! Positions are losses: the budget of a payoff `X` is `E_Q[w - X]`.

use serde::{Deserialize, Serialize};

use crate::adjusted::adjusted_es;
use crate::error::{Result, RiskError};
use crate::profile::{benchmark_from_es_profile, ProfileSpec, RiskProfile};
use crate::quantile::{LossDistribution, StepQuantile};
use crate::EXACT_TOL;

const SUM_TOL: f64 = 1e-12;
const MAX_BISECTION: usize = 200;
const Z_TOL: f64 = 1e-10;
const MAX_GRID_POINTS: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Physical probability.
    pub p: f64,
    /// Risk-neutral probability.
    pub q: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct RawMarket {
    states: Vec<State>,
}

/// States with physical and risk-neutral probabilities; `Q << P` with density `q / p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarket")]
pub struct MarketModel {
    states: Vec<State>,
}

impl TryFrom<RawMarket> for MarketModel {
    type Error = RiskError;

    fn try_from(raw: RawMarket) -> Result<Self> {
        MarketModel::new(raw.states)
    }
}

impl MarketModel {
    pub fn new(states: Vec<State>) -> Result<Self> {
        let bad = |msg: String| RiskError::InvalidMarket(msg);
        if states.is_empty() {
            return Err(bad("states: must not be empty".into()));
        }
        for (i, s) in states.iter().enumerate() {
            if !(s.p > 0.0) || !s.p.is_finite() {
                return Err(bad(format!("states[{i}].p: must be positive, got {}", s.p)));
            }
            if !(s.q >= 0.0) || !s.q.is_finite() {
                return Err(bad(format!("states[{i}].q: must be nonnegative, got {}", s.q)));
            }
        }
        let (sp, sq): (f64, f64) = states.iter().fold((0.0, 0.0), |(a, b), s| (a + s.p, b + s.q));
        if (sp - 1.0).abs() > SUM_TOL {
            return Err(bad(format!("states: p must sum to 1, got {sp}")));
        }
        if (sq - 1.0).abs() > SUM_TOL {
            return Err(bad(format!("states: q must sum to 1, got {sq}")));
        }
        Ok(MarketModel { states })
    }

    /// Market from parallel probability vectors.
    pub fn from_vectors(p: &[f64], q: &[f64]) -> Result<Self> {
        if p.len() != q.len() {
            return Err(RiskError::InvalidMarket(format!(
                "p has {} entries, q has {}",
                p.len(),
                q.len()
            )));
        }
        Self::new(p.iter().zip(q).map(|(&p, &q)| State { p, q }).collect())
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn density(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.q / s.p).collect()
    }

    pub fn expectation_p(&self, payoff: &[f64]) -> f64 {
        self.states.iter().zip(payoff).map(|(s, x)| s.p * x).sum()
    }

    pub fn expectation_q(&self, payoff: &[f64]) -> f64 {
        self.states.iter().zip(payoff).map(|(s, x)| s.q * x).sum()
    }

    /// Law of `payoff` under `P`.
    pub fn law(&self, payoff: &[f64]) -> Result<StepQuantile> {
        let weights: Vec<f64> = self.states.iter().map(|s| s.p).collect();
        StepQuantile::from_samples(payoff, Some(&weights))
    }

    /// State indices sorted by increasing density, ties by index.
    fn density_order(&self) -> Vec<usize> {
        let d = self.density();
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        order
    }
}

/// A loss vector on a (possibly refined) market. `origin[i]` is the index of the
/// original state that sub-state `i` was split from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Position {
    pub market: MarketModel,
    pub payoff: Vec<f64>,
    pub origin: Vec<usize>,
}

impl Position {
    pub fn on(market: &MarketModel, payoff: Vec<f64>) -> Result<Self> {
        if payoff.len() != market.len() {
            return Err(RiskError::InvalidParameter(format!(
                "payoff has {} entries for {} states",
                payoff.len(),
                market.len()
            )));
        }
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(RiskError::InvalidParameter("payoff must be finite".into()));
        }
        Ok(Position {
            market: market.clone(),
            origin: (0..payoff.len()).collect(),
            payoff,
        })
    }

    pub fn shifted(&self, z: f64) -> Position {
        Position {
            market: self.market.clone(),
            payoff: self.payoff.iter().map(|v| v + z).collect(),
            origin: self.origin.clone(),
        }
    }

    pub fn law(&self) -> StepQuantile {
        self.market.law(&self.payoff).expect("validated payoff")
    }

    pub fn expectation_p(&self) -> f64 {
        self.market.expectation_p(&self.payoff)
    }

    pub fn expectation_q(&self) -> f64 {
        self.market.expectation_q(&self.payoff)
    }

    /// `E_Q[w - X]`.
    pub fn price(&self, w: f64) -> f64 {
        w - self.expectation_q()
    }

    /// Payoff on the original states, when every split state carries a single value.
    pub fn on_original_states(&self, original: usize) -> Option<Vec<f64>> {
        let mut out: Vec<Option<f64>> = vec![None; original];
        for (&o, &v) in self.origin.iter().zip(&self.payoff) {
            match out.get(o)? {
                None => out[o] = Some(v),
                Some(prev) if (prev - v).abs() <= EXACT_TOL * v.abs().max(1.0) => {}
                Some(_) => return None,
            }
        }
        out.into_iter().collect()
    }
}

/// Arranges the law `q` on `market` comonotonically with the density, splitting states
/// where the quantile changes inside them.
pub fn assign_comonotone(market: &MarketModel, q: &StepQuantile) -> Result<Position> {
    let order = market.density_order();
    let d = market.density();
    let mut ends = Vec::with_capacity(order.len());
    let mut cum = 0.0;
    for &i in &order {
        cum += market.states[i].p;
        ends.push(cum);
    }
    *ends.last_mut().unwrap() = 1.0;

    let mut cuts: Vec<(f64, bool)> = ends.iter().map(|&e| (e, true)).collect();
    for &b in q.breakpoints() {
        let close = ends.iter().any(|&e| (e - b).abs() <= SUM_TOL);
        if !close {
            cuts.push((b, false));
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut states = Vec::new();
    let mut payoff: Vec<f64> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    let mut start = 0.0;
    let mut j = 0;
    for (cut, is_state_end) in cuts {
        if j >= order.len() {
            return Err(RiskError::IncompatibleAtoms(format!(
                "cut {cut} lies beyond the last state"
            )));
        }
        let width = cut - start;
        if width > 0.0 {
            let state = order[j];
            let value = q.var(0.5 * (start + cut))?;
            let merge = origin.last() == Some(&state) && payoff.last() == Some(&value);
            if merge {
                let last: &mut State = states.last_mut().unwrap();
                last.p += width;
                last.q = last.p * d[state];
            } else {
                states.push(State {
                    p: width,
                    q: width * d[state],
                });
                payoff.push(value);
                origin.push(state);
            }
        }
        if is_state_end {
            j += 1;
        }
        start = cut;
    }
    // restore the exact original masses of unsplit states
    for (k, s) in states.iter_mut().enumerate() {
        let o = origin[k];
        if origin.iter().filter(|&&x| x == o).count() == 1 {
            *s = market.states[o];
        }
    }
    let total_q: f64 = states.iter().map(|s| s.q).sum();
    let total_p: f64 = states.iter().map(|s| s.p).sum();
    if (total_p - 1.0).abs() > SUM_TOL || (total_q - 1.0).abs() > SUM_TOL {
        return Err(RiskError::IncompatibleAtoms(format!(
            "refined market has total masses ({total_p}, {total_q})"
        )));
    }
    Ok(Position {
        market: MarketModel { states },
        payoff,
        origin,
    })
}

/// Rearrangement of a payoff with the same law under `P`, comonotone with `dQ/dP`.
pub fn comonotone_rearrangement(market: &MarketModel, payoff: &[f64]) -> Result<Position> {
    let law = Position::on(market, payoff.to_vec())?.law();
    assign_comonotone(market, &law)
}

/// Loss with ES profile `g`, comonotone with the pricing density.
pub fn construct_optimal_z(market: &MarketModel, g: &RiskProfile) -> Result<Position> {
    let benchmark = benchmark_from_es_profile(g)?;
    assign_comonotone(market, &benchmark)
}

/// Concave nondecreasing piecewise-affine utility. `slopes[0]` applies left of the
/// first kink, `slopes[i]` between `kinks[i-1]` and `kinks[i]`; `u = 0` at the first
/// kink (at 0 without kinks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawUtility")]
pub struct UtilityFn {
    kinks: Vec<f64>,
    slopes: Vec<f64>,
    #[serde(skip)]
    at_kinks: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawUtility {
    #[serde(default)]
    kinks: Vec<f64>,
    slopes: Vec<f64>,
}

impl TryFrom<RawUtility> for UtilityFn {
    type Error = RiskError;

    fn try_from(raw: RawUtility) -> Result<Self> {
        UtilityFn::new(raw.kinks, raw.slopes)
    }
}

impl UtilityFn {
    pub fn new(kinks: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| RiskError::InvalidUtility(msg);
        if slopes.len() != kinks.len() + 1 {
            return Err(bad(format!(
                "slopes: expected {} entries for {} kinks, got {}",
                kinks.len() + 1,
                kinks.len(),
                slopes.len()
            )));
        }
        if kinks.iter().any(|k| !k.is_finite()) || kinks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(bad("kinks: must be finite and strictly increasing".into()));
        }
        if slopes.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(bad("slopes: must be finite and nonnegative".into()));
        }
        if slopes.windows(2).any(|w| w[1] > w[0]) {
            return Err(bad("slopes: must be nonincreasing (concavity)".into()));
        }
        if slopes[0] == 0.0 {
            return Err(bad("slopes: utility must be nonconstant".into()));
        }
        let mut at_kinks = Vec::with_capacity(kinks.len());
        for (i, &k) in kinks.iter().enumerate() {
            let prev = if i == 0 {
                0.0
            } else {
                at_kinks[i - 1] + slopes[i] * (k - kinks[i - 1])
            };
            at_kinks.push(prev);
        }
        Ok(UtilityFn {
            kinks,
            slopes,
            at_kinks,
        })
    }

    /// `u(y) = y`.
    pub fn linear() -> Self {
        UtilityFn::new(Vec::new(), vec![1.0]).expect("valid")
    }

    /// `u(y) = min(y - kink, 0)`.
    pub fn ramp(kink: f64) -> Result<Self> {
        UtilityFn::new(vec![kink], vec![1.0, 0.0])
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn eval(&self, y: f64) -> f64 {
        if self.kinks.is_empty() {
            return self.slopes[0] * y;
        }
        let i = self.kinks.partition_point(|&k| k < y);
        if i == 0 {
            self.slopes[0] * (y - self.kinks[0])
        } else {
            self.at_kinks[i - 1] + self.slopes[i] * (y - self.kinks[i - 1])
        }
    }

    /// `lim_{y -> inf} u(y)`.
    pub fn supremum(&self) -> f64 {
        if *self.slopes.last().unwrap() > 0.0 {
            f64::INFINITY
        } else {
            *self.at_kinks.last().unwrap()
        }
    }

    /// `E_P[u(w - X)]`.
    pub fn expected(&self, w: f64, position: &Position) -> f64 {
        position
            .market
            .states()
            .iter()
            .zip(&position.payoff)
            .map(|(s, x)| s.p * self.eval(w - x))
            .sum()
    }
}

/// `rho'(X) = sum_i weights[i] ES_{levels[i]}(X)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectral")]
pub struct SpectralFunctional {
    levels: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawSpectral {
    levels: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawSpectral> for SpectralFunctional {
    type Error = RiskError;

    fn try_from(raw: RawSpectral) -> Result<Self> {
        SpectralFunctional::new(raw.levels, raw.weights)
    }
}

impl SpectralFunctional {
    pub fn new(levels: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| RiskError::InvalidParameter(msg);
        if levels.is_empty() || levels.len() != weights.len() {
            return Err(bad("spectral: levels and weights must be nonempty and of equal length".into()));
        }
        if levels.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return Err(bad("spectral.levels: must lie in [0, 1)".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(bad("spectral.weights: must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(bad(format!("spectral.weights: must sum to 1, got {total}")));
        }
        Ok(SpectralFunctional { levels, weights })
    }

    pub fn single(level: f64) -> Result<Self> {
        Self::new(vec![level], vec![1.0])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, x: &StepQuantile) -> f64 {
        self.levels
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * x.es(p).expect("level in [0, 1)"))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    A,
    B,
    C,
    D,
    E,
}

/// Optimizer `position = Z + shift` and the problem's optimal value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub problem: Problem,
    pub position: Position,
    pub shift: f64,
    /// (A), (C): minimal risk; (B): minimal price; (D): worst utility; (E): worst risk.
    pub value: f64,
}

/// (A) minimize `ES^g(X)` subject to `E_Q[w - X] <= x`.
pub fn solve_problem_a(market: &MarketModel, g: &RiskProfile, w: f64, x: f64) -> Result<Solution> {
    let z = construct_optimal_z(market, g)?;
    let shift = w - x - z.expectation_q();
    Ok(Solution {
        problem: Problem::A,
        position: z.shifted(shift),
        shift,
        value: shift,
    })
}

/// (B) minimize `E_Q[w - X]` subject to `ES^g(X) <= x`.
pub fn solve_problem_b(market: &MarketModel, g: &RiskProfile, w: f64, x: f64) -> Result<Solution> {
    let z = construct_optimal_z(market, g)?;
    let price = w - x - z.expectation_q();
    Ok(Solution {
        problem: Problem::B,
        position: z.shifted(x),
        shift: x,
        value: price,
    })
}

/// Smallest `z` with `E[u(w - Z - z)] = x`.
fn utility_shift(z: &Position, w: f64, x: f64, u: &UtilityFn) -> Result<f64> {
    if !(x < u.supremum()) || !x.is_finite() {
        return Err(RiskError::TargetUnreachable(format!(
            "target utility {x} is not below the utility supremum {}",
            u.supremum()
        )));
    }
    let f = |s: f64| u.expected(w, &z.shifted(s));
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut step = 1.0;
    let mut expansions = 0;
    while f(lo) <= x {
        lo -= step;
        step *= 2.0;
        expansions += 1;
        if expansions > MAX_BISECTION || !lo.is_finite() {
            return Err(RiskError::TargetUnreachable(format!(
                "no shift reaches utility {x}"
            )));
        }
    }
    step = 1.0;
    expansions = 0;
    while f(hi) > x {
        hi += step;
        step *= 2.0;
        expansions += 1;
        if expansions > MAX_BISECTION || !hi.is_finite() {
            return Err(RiskError::TargetUnreachable(format!(
                "no shift lowers utility to {x}"
            )));
        }
    }
    // f(lo) > x >= f(hi); f is continuous and nonincreasing
    for _ in 0..MAX_BISECTION {
        if hi - lo <= Z_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // f is affine near the root: one secant step removes the remaining bisection error
    let (flo, fhi) = (f(lo), f(hi));
    let mut best = hi;
    if flo > fhi {
        let secant = (lo + (hi - lo) * (flo - x) / (flo - fhi)).clamp(lo, hi);
        if (f(secant) - x).abs() < (fhi - x).abs() {
            best = secant;
        }
    }
    Ok(best)
}

/// (C) minimize `ES^g(X)` subject to `E[u(w - X)] = x`.
pub fn solve_problem_c(
    market: &MarketModel,
    g: &RiskProfile,
    w: f64,
    x: f64,
    u: &UtilityFn,
) -> Result<Solution> {
    let z = construct_optimal_z(market, g)?;
    let shift = utility_shift(&z, w, x, u)?;
    Ok(Solution {
        problem: Problem::C,
        position: z.shifted(shift),
        shift,
        value: shift,
    })
}

/// (D) minimize `E[u(w - X)]` subject to `ES^g(X) = x`.
pub fn solve_problem_d(
    market: &MarketModel,
    g: &RiskProfile,
    w: f64,
    x: f64,
    u: &UtilityFn,
) -> Result<Solution> {
    let position = construct_optimal_z(market, g)?.shifted(x);
    let value = u.expected(w, &position);
    Ok(Solution {
        problem: Problem::D,
        position,
        shift: x,
        value,
    })
}

/// (E) maximize `rho'(X)` subject to `ES^g(X) = x`.
pub fn solve_problem_e(
    market: &MarketModel,
    g: &RiskProfile,
    x: f64,
    rho_prime: &SpectralFunctional,
) -> Result<Solution> {
    let position = construct_optimal_z(market, g)?.shifted(x);
    let value = x
        + rho_prime
            .levels()
            .iter()
            .zip(rho_prime.weights())
            .map(|(&p, &w)| w * g.value(p))
            .sum::<f64>();
    Ok(Solution {
        problem: Problem::E,
        position,
        shift: x,
        value,
    })
}

/// Solver request as read from JSON.
#[derive(Debug, Clone, Deserialize)]
pub struct SolverRequest {
    pub problem: Problem,
    #[serde(default)]
    pub w: f64,
    pub x: f64,
    pub profile: ProfileSpec,
    #[serde(default)]
    pub utility: Option<UtilityFn>,
    #[serde(default)]
    pub spectral: Option<SpectralFunctional>,
}

pub fn solve_request(market: &MarketModel, request: &SolverRequest) -> Result<Solution> {
    let g = RiskProfile::try_from(request.profile.clone())?;
    let utility = || {
        request.utility.as_ref().ok_or_else(|| {
            RiskError::InvalidUtility(format!("utility: required for problem {:?}", request.problem))
        })
    };
    let (w, x) = (request.w, request.x);
    match request.problem {
        Problem::A => solve_problem_a(market, &g, w, x),
        Problem::B => solve_problem_b(market, &g, w, x),
        Problem::C => solve_problem_c(market, &g, w, x, utility()?),
        Problem::D => solve_problem_d(market, &g, w, x, utility()?),
        Problem::E => {
            let spectral = request.spectral.as_ref().ok_or_else(|| {
                RiskError::InvalidParameter("spectral: required for problem E".into())
            })?;
            solve_problem_e(market, &g, x, spectral)
        }
    }
}

// ---------------------------------------------------------------------------
// brute-force validation oracle

/// Functional of a position on the market's original states.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    /// `ES^g(X)`.
    AdjustedEs(RiskProfile),
    /// `E_Q[w - X]`.
    Price { w: f64 },
    /// `E_P[u(w - X)]`.
    Utility { w: f64, u: UtilityFn },
    /// `rho'(X)`.
    Spectral(SpectralFunctional),
}

impl Functional {
    pub fn eval(&self, position: &Position) -> f64 {
        match self {
            Functional::AdjustedEs(g) => adjusted_es(&position.law(), g).value,
            Functional::Price { w } => position.price(*w),
            Functional::Utility { w, u } => u.expected(*w, position),
            Functional::Spectral(rho) => rho.eval(&position.law()),
        }
    }

    /// `d/dc F(X + c)` for the cash-additive functionals.
    fn cash_slope(&self) -> Option<f64> {
        match self {
            Functional::AdjustedEs(_) | Functional::Spectral(_) => Some(1.0),
            Functional::Price { .. } => Some(-1.0),
            Functional::Utility { .. } => None,
        }
    }

    /// Smallest `c` with `F(X + c) = bound`.
    fn binding_shift(&self, position: &Position, bound: f64) -> Option<f64> {
        match (self, self.cash_slope()) {
            (_, Some(slope)) => Some((bound - self.eval(position)) / slope),
            (Functional::Utility { w, u }, None) => utility_shift(position, *w, bound, u).ok(),
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Optimize `objective` over positions with `constraint(X) = bound`. For (A) and (B)
/// the inequality constraint binds at the optimum, so it is imposed as an equality.
#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub sense: Sense,
    pub objective: Functional,
    pub constraint: Functional,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub radius: f64,
}

/// Exhaustive search over payoff shapes `(0, k_2 step, ..., k_n step)` with
/// `|k_i step| <= radius`; each shape is shifted so the constraint binds. Ties keep the
/// first shape in lexicographic grid order.
pub fn brute_force_oracle(
    market: &MarketModel,
    problem: &OracleProblem,
    grid: &Grid,
) -> Result<(Position, f64)> {
    if !(grid.step > 0.0) || !(grid.radius >= 0.0) {
        return Err(RiskError::InvalidParameter("grid step and radius must be positive".into()));
    }
    let n = market.len();
    if n > 4 {
        return Err(RiskError::InvalidMarket(format!(
            "oracle supports at most 4 states, got {n}"
        )));
    }
    let k = (grid.radius / grid.step).floor() as i64;
    let per_axis = (2 * k + 1) as u128;
    let points = per_axis.pow((n - 1) as u32);
    if points > MAX_GRID_POINTS {
        return Err(RiskError::GridTooLarge(points));
    }
    let mut best: Option<(Position, f64)> = None;
    let mut index = vec![-k; n - 1];
    for _ in 0..points {
        let mut payoff = Vec::with_capacity(n);
        payoff.push(0.0);
        payoff.extend(index.iter().map(|&i| i as f64 * grid.step));
        let shape = Position::on(market, payoff)?;
        if let Some(c) = problem.constraint.binding_shift(&shape, problem.bound) {
            let candidate = shape.shifted(c);
            let value = problem.objective.eval(&candidate);
            let better = match &best {
                None => true,
                Some((_, b)) => match problem.sense {
                    Sense::Minimize => value < *b,
                    Sense::Maximize => value > *b,
                },
            };
            if better {
                best = Some((candidate, value));
            }
        }
        // odometer increment, last coordinate fastest
        for slot in index.iter_mut().rev() {
            if *slot < k {
                *slot += 1;
                break;
            }
            *slot = -k;
        }
    }
    best.ok_or_else(|| RiskError::TargetUnreachable("no grid point satisfies the constraint".into()))
}
