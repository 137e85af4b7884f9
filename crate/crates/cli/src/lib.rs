//! Library side of the `esg` command line tool: CSV ingestion, rolling-window
//! historical estimation of VaR, ES and adjusted ES, and the subcommand runners.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use esg_core::adjusted::{adjusted_es_gaussian, homogeneity_analysis, Homogeneity};
use esg_core::market::{solve_request, MarketModel, SolverRequest};
use esg_core::profile::{ProfileShape, ProfileSpec};
use esg_core::ssd::ssd_based_risk;
use esg_core::{adjusted_es, GaussianLoss, LossDistribution, RiskError, RiskProfile, StepQuantile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: dates must be strictly increasing")]
    NonMonotoneDates { line: u64 },
    #[error("window {window} exceeds the series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{context}: {message}")]
    Json { context: String, message: String },
    #[error(transparent)]
    Core(#[from] RiskError),
}

impl CliError {
    /// 2 for input and validation problems, 3 for numeric conditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Values are returns; losses are their negatives.
    Returns,
    /// Values are already losses.
    Losses,
    /// Values are prices; losses are negative log-returns.
    Prices,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSeries {
    pub dates: Vec<NaiveDate>,
    pub losses: Vec<f64>,
}

impl LossSeries {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    Ok(text)
}

/// Parses a `date,value` CSV into a loss series.
pub fn ingest_str(text: &str, mode: Mode) -> CliResult<LossSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "value" {
        return Err(CliError::Parse {
            line: 1,
            message: "header must be `date,value`".into(),
        });
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| CliError::Parse { line, message };
        if record.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, got {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| parse_err(format!("bad date `{}`: {e}", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(format!("bad value `{}`", &record[1])))?;
        if !value.is_finite() {
            return Err(parse_err(format!("value `{}` is not finite", &record[1])));
        }
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(CliError::NonMonotoneDates { line });
            }
        }
        if mode == Mode::Prices && value <= 0.0 {
            return Err(parse_err(format!("price {value} must be positive")));
        }
        dates.push(date);
        values.push(value);
    }
    let series = match mode {
        Mode::Returns => LossSeries {
            losses: values.iter().map(|v| -v).collect(),
            dates,
        },
        Mode::Losses => LossSeries {
            losses: values,
            dates,
        },
        Mode::Prices => LossSeries {
            losses: values.windows(2).map(|w| -(w[1] / w[0]).ln()).collect(),
            dates: dates.into_iter().skip(1).collect(),
        },
    };
    if series.is_empty() {
        return Err(CliError::Parse {
            line: 1,
            message: "no observations".into(),
        });
    }
    Ok(series)
}

pub fn ingest(path: &Path, mode: Mode) -> CliResult<LossSeries> {
    ingest_str(&read_text(path)?, mode)
}

fn json_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Json {
        context: context.into(),
        message: e.to_string(),
    }
}

pub fn parse_profile(text: &str) -> CliResult<RiskProfile> {
    let spec: ProfileSpec = serde_json::from_str(text).map_err(|e| json_err("profile", e))?;
    Ok(RiskProfile::try_from(spec)?)
}

pub fn load_profile(path: &Path) -> CliResult<RiskProfile> {
    parse_profile(&read_text(path)?)
}

/// Reference level for the `var_p1` / `es_p1` columns: the explicit level, or the
/// profile's first breakpoint.
pub fn reference_level(profile: &RiskProfile, level: Option<f64>) -> CliResult<f64> {
    if let Some(p) = level {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::InvalidArgument(format!("--level {p} must lie in [0, 1]")));
        }
        return Ok(p);
    }
    let first = match profile.shape() {
        ProfileShape::PiecewiseConstant { thresholds, .. } => Some(thresholds[0]),
        _ => profile.breakpoints().first().copied(),
    };
    first.ok_or_else(|| {
        CliError::InvalidArgument("profile has no first threshold; pass --level".into())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub window: usize,
    /// Trailing-average length; 0 and 1 leave rows unchanged.
    pub smoothing: usize,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub date: NaiveDate,
    pub var_p1: f64,
    pub es_p1: f64,
    pub adj_es: f64,
    pub argmax_p: f64,
}

/// One row per window ending at each date from the `window`-th observation on; the
/// window includes its end date.
pub fn rolling_report(
    series: &LossSeries,
    profile: &RiskProfile,
    config: &ReportConfig,
) -> CliResult<Vec<ReportRow>> {
    if config.window < 2 {
        return Err(CliError::InvalidArgument(format!(
            "--window must be at least 2, got {}",
            config.window
        )));
    }
    if config.window > series.len() {
        return Err(CliError::WindowTooLong {
            window: config.window,
            len: series.len(),
        });
    }
    let ends: Vec<usize> = (config.window - 1..series.len()).collect();
    let rows = ends
        .par_iter()
        .map(|&t| {
            let sample = &series.losses[t + 1 - config.window..=t];
            let x = StepQuantile::from_samples(sample, None)?;
            let adj = adjusted_es(&x, profile);
            Ok(ReportRow {
                date: series.dates[t],
                var_p1: x.var(config.level)?,
                es_p1: x.es(config.level)?,
                adj_es: adj.value,
                argmax_p: adj.argmax_p,
            })
        })
        .collect::<std::result::Result<Vec<_>, RiskError>>()?;
    smooth(rows, config.smoothing)
}

/// Trailing `k`-row simple mean of the risk columns; the first `k - 1` rows are
/// dropped and `argmax_p` is taken from the last row of each block.
pub fn smooth(rows: Vec<ReportRow>, k: usize) -> CliResult<Vec<ReportRow>> {
    if k <= 1 {
        return Ok(rows);
    }
    if k > rows.len() {
        return Err(CliError::InvalidArgument(format!(
            "--smooth {k} exceeds the {} report rows",
            rows.len()
        )));
    }
    let kf = k as f64;
    Ok(rows
        .windows(k)
        .map(|block| {
            let last = block.last().unwrap();
            let mean = |f: fn(&ReportRow) -> f64| block.iter().map(f).sum::<f64>() / kf;
            ReportRow {
                date: last.date,
                var_p1: mean(|r| r.var_p1),
                es_p1: mean(|r| r.es_p1),
                adj_es: mean(|r| r.adj_es),
                argmax_p: last.argmax_p,
            }
        })
        .collect())
}

/// 12 significant digits, trailing zeros trimmed, `-0` printed as `0`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float");
    format!("{rounded}")
}

pub fn render_report(rows: &[ReportRow]) -> String {
    let mut out = String::from("date,var_p1,es_p1,adj_es,argmax_p\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.date.format("%Y-%m-%d"),
            format_number(r.var_p1),
            format_number(r.es_p1),
            format_number(r.adj_es),
            format_number(r.argmax_p)
        );
    }
    out
}

/// Parses a report back into rows (used by tests and downstream tooling).
pub fn parse_report(text: &str) -> CliResult<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| CliError::Parse {
            line,
            message: e.to_string(),
        })?;
        let num = |j: usize| -> CliResult<f64> {
            record[j].parse().map_err(|_| CliError::Parse {
                line,
                message: format!("bad number `{}`", &record[j]),
            })
        };
        rows.push(ReportRow {
            date: NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| CliError::Parse {
                line,
                message: e.to_string(),
            })?,
            var_p1: num(1)?,
            es_p1: num(2)?,
            adj_es: num(3)?,
            argmax_p: num(4)?,
        });
    }
    Ok(rows)
}

pub fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// subcommands

pub struct ComputeArgs<'a> {
    pub input: &'a Path,
    pub mode: Mode,
    pub window: usize,
    pub smoothing: usize,
    pub profile: &'a Path,
    pub level: Option<f64>,
}

pub fn run_compute(args: &ComputeArgs) -> CliResult<String> {
    let series = ingest(args.input, args.mode)?;
    let profile = load_profile(args.profile)?;
    let config = ReportConfig {
        window: args.window,
        smoothing: args.smoothing,
        level: reference_level(&profile, args.level)?,
    };
    Ok(render_report(&rolling_report(&series, &profile, &config)?))
}

pub fn check_ssd(x: &LossSeries, z: &LossSeries, tol: f64) -> CliResult<String> {
    let xq = StepQuantile::from_samples(&x.losses, None)?;
    let zq = StepQuantile::from_samples(&z.losses, None)?;
    let risk = ssd_based_risk(&xq, &zq);
    Ok(format!(
        "dominates: {}, risk: {}\n",
        risk <= tol,
        format_number(risk)
    ))
}

pub fn run_check_ssd(x: &Path, z: &Path, mode: Mode, tol: f64) -> CliResult<String> {
    check_ssd(&ingest(x, mode)?, &ingest(z, mode)?, tol)
}

pub fn classify_profile(profile: &RiskProfile) -> String {
    let class = profile.classify().label();
    match homogeneity_analysis(profile) {
        Homogeneity::Homogeneous { level } => format!(
            "class: {class}, homogeneous: true, level: {}\n",
            format_number(level)
        ),
        Homogeneity::NotHomogeneous => format!("class: {class}, homogeneous: false\n"),
    }
}

pub fn run_classify_profile(path: &Path) -> CliResult<String> {
    Ok(classify_profile(&load_profile(path)?))
}

pub fn optimize(market_json: &str, request_json: &str) -> CliResult<String> {
    let market: MarketModel =
        serde_json::from_str(market_json).map_err(|e| json_err("market", e))?;
    let request: SolverRequest =
        serde_json::from_str(request_json).map_err(|e| json_err("request", e))?;
    let solution = solve_request(&market, &request)?;
    let mut out = format!(
        "problem: {:?}, value: {}, shift: {}\n",
        solution.problem,
        format_number(solution.value),
        format_number(solution.shift)
    );
    let pos = &solution.position;
    match pos.on_original_states(market.len()) {
        Some(payoff) => {
            let cells: Vec<String> = payoff.iter().map(|v| format_number(*v)).collect();
            let _ = writeln!(out, "payoff: {}", cells.join(" "));
        }
        None => {
            let cells: Vec<String> = pos
                .market
                .states()
                .iter()
                .zip(&pos.payoff)
                .zip(&pos.origin)
                .map(|((s, v), o)| format!("{o}:{}@{}", format_number(*v), format_number(s.p)))
                .collect();
            let _ = writeln!(out, "payoff (split states, origin:value@p): {}", cells.join(" "));
        }
    }
    Ok(out)
}

pub fn run_optimize(market: &Path, request: &Path) -> CliResult<String> {
    optimize(&read_text(market)?, &read_text(request)?)
}

pub fn run_gaussian(mu: f64, sigma: f64, profile: &Path, atoms: usize) -> CliResult<String> {
    let g = load_profile(profile)?;
    let x = GaussianLoss::new(mu, sigma)?;
    let r = adjusted_es_gaussian(&x, &g, atoms)?;
    Ok(format!(
        "adj_es: {}, argmax_p: {}, discretized: {}, atoms: {atoms}\n",
        format_number(r.value),
        format_number(r.argmax_p),
        r.discretized
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STEP_PROFILE: &str = r#"{"kind":"piecewise_constant","pieces":[{"upto":0.95,"level":0.0},{"upto":0.99,"level":0.01}],"infinite_above":0.99}"#;

    #[test]
    fn ingest_modes() {
        let returns = ingest_str("date,value\n2024-01-01,0.01\n2024-01-02,-0.02\n", Mode::Returns).unwrap();
        assert_eq!(returns.losses, vec![-0.01, 0.02]);
        let flat = ingest_str("date,value\n2024-01-01,100\n2024-01-02,100\n", Mode::Prices).unwrap();
        assert_eq!(flat.losses, vec![0.0]);
        let drop = ingest_str("date,value\n2024-01-01,100\n2024-01-02,90\n", Mode::Prices).unwrap();
        assert!((drop.losses[0] - 0.105_360_515_657_826_3).abs() < 1e-12);
        assert_eq!(drop.dates, vec![NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()]);
    }

    #[test]
    fn ingest_errors() {
        let err = ingest_str("date,value\n2024-01-01,1\n2024-01-02,x\n", Mode::Losses).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 3, .. }), "{err:?}");
        let err = ingest_str("date,value\n2024-01-02,1\n2024-01-01,2\n", Mode::Losses).unwrap_err();
        assert!(matches!(err, CliError::NonMonotoneDates { line: 3 }));
        let err = ingest_str("day,value\n2024-01-01,1\n", Mode::Losses).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }));
        let err = ingest_str("date,value\n2024-01-01,\n", Mode::Losses).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(-0.75), "-0.75");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123_456_789.123_456_78), "123456789.123");
        assert_eq!(format_number(2.0), "2");
    }

    fn series(losses: &[f64]) -> LossSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        LossSeries {
            dates: (0..losses.len()).map(|i| start + chrono::Days::new(i as u64)).collect(),
            losses: losses.to_vec(),
        }
    }

    #[test]
    fn constant_series_gives_constant_rows() {
        let g = parse_profile(TWO_STEP_PROFILE).unwrap();
        let config = ReportConfig { window: 5, smoothing: 0, level: 0.95 };
        let rows = rolling_report(&series(&[0.2; 12]), &g, &config).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert_eq!((r.var_p1, r.es_p1, r.adj_es), (0.2, 0.2, 0.2));
        }
    }

    #[test]
    fn smoothing_one_is_identity() {
        let g = parse_profile(TWO_STEP_PROFILE).unwrap();
        let s = series(&[0.1, -0.3, 0.5, 0.2, 0.9, -0.1, 0.4]);
        let base = ReportConfig { window: 3, smoothing: 0, level: 0.95 };
        let one = ReportConfig { smoothing: 1, ..base };
        assert_eq!(rolling_report(&s, &g, &base).unwrap(), rolling_report(&s, &g, &one).unwrap());
        let three = rolling_report(&s, &g, &ReportConfig { smoothing: 3, ..base }).unwrap();
        assert_eq!(three.len(), 3);
    }

    #[test]
    fn window_errors() {
        let g = parse_profile(TWO_STEP_PROFILE).unwrap();
        let config = ReportConfig { window: 10, smoothing: 0, level: 0.95 };
        assert!(matches!(
            rolling_report(&series(&[1.0; 4]), &g, &config),
            Err(CliError::WindowTooLong { window: 10, len: 4 })
        ));
    }

    #[test]
    fn subcommand_outputs() {
        let s = series(&[0.1, 0.2, 0.3]);
        assert_eq!(check_ssd(&s, &s, 1e-12).unwrap(), "dominates: true, risk: 0\n");
        let hyp = parse_profile(r#"{"kind":"hyperbolic","scale":1.0}"#).unwrap();
        assert_eq!(classify_profile(&hyp), "class: VaR, homogeneous: false\n");
        let out = optimize(
            r#"{"states":[{"p":0.5,"q":0.75},{"p":0.5,"q":0.25}]}"#,
            r#"{"problem":"A","w":0.0,"x":0.0,"profile":{"kind":"benchmark_es","quantile":{"breakpoints":[0.5,1.0],"values":[0.0,1.0]}}}"#,
        )
        .unwrap();
        assert!(out.starts_with("problem: A, value: -0.75"), "{out}");
        assert!(out.contains("payoff: 0.25 -0.75"));
    }

    #[test]
    fn reference_levels() {
        let g = parse_profile(TWO_STEP_PROFILE).unwrap();
        assert_eq!(reference_level(&g, None).unwrap(), 0.95);
        assert_eq!(reference_level(&g, Some(0.9)).unwrap(), 0.9);
        let hyp = parse_profile(r#"{"kind":"hyperbolic","scale":1.0}"#).unwrap();
        assert!(reference_level(&hyp, None).is_err());
    }
}
