use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("sample is empty")]
    EmptySample,

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("probability level {0} is outside the admissible range")]
    OutOfRangeLevel(f64),

    #[error("quantile is unbounded at level {0}")]
    UnboundedQuantile(f64),

    #[error("invalid quantile: {0}")]
    InvalidQuantile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("profile is not the ES profile of any loss")]
    NotEsClass,

    #[error("profile is not the VaR profile of any loss bounded from below")]
    NotVarClass,

    #[error("supremum is attained only at p = 1; no dual certificate")]
    ArgmaxAtOne,

    #[error("bad allocation: {0}")]
    BadAllocation(String),

    #[error("profile is not normalized: g(0) = {0}")]
    ProfileNotNormalized(f64),

    #[error("profile is not identically zero below level {0}")]
    ProfileNotFlatBelowP(f64),

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("grid has {0} points, above the evaluation limit")]
    GridTooLarge(u128),

    #[error("benchmark atoms do not fit the state partition: {0}")]
    IncompatibleAtoms(String),
}

impl RiskError {
    /// True for errors caused by a numeric condition rather than malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            RiskError::TargetUnreachable(_)
                | RiskError::ArgmaxAtOne
                | RiskError::UnboundedQuantile(_)
                | RiskError::GridTooLarge(_)
                | RiskError::IncompatibleAtoms(_)
        )
    }
}
