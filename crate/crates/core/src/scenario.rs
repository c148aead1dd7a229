//! Scenario files (JSON) and Monte Carlo tables (CSV).
//!
//! Parsing happens in two stages. Syntax and shape errors surface as
//! [`ScenarioError::Parse`] with a line and column; model invariants are then
//! checked field by field and surface as [`ScenarioError::Validation`].

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ambiguity::{ConcentrationConstants, DiscreteDistribution};
use crate::harness::{TrialConfig, ViolationStats};
use crate::model::{Population, TimeGrid, DEFAULT_TOLERANCE};

/// Horizon used when a scenario does not set `steps`.
pub const DEFAULT_STEPS: usize = 24;
/// Power rating used when a scenario does not set `power`.
pub const DEFAULT_POWER: f64 = 1.0;

/// Exact CSV header of a Monte Carlo table.
pub const CSV_HEADER: [&str; 10] = [
    "epsilon",
    "epsilon_sq",
    "N",
    "T",
    "trials",
    "violations",
    "beta_hat",
    "ci_lo",
    "ci_hi",
    "degenerate",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// True for malformed input, false for well-formed input breaking an invariant.
    pub fn is_parse(&self) -> bool {
        matches!(self, Self::Io { .. } | Self::Parse { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    steps: Option<usize>,
    power: Option<f64>,
    population: Option<Vec<(f64, f64)>>,
    profile: Option<Vec<f64>>,
    distribution: Option<RawSource>,
    robust: Option<RawRobust>,
    harness: Option<RawHarness>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawSource {
    Path(PathBuf),
    Inline(RawDistribution),
}

/// Distribution as written in a file: weights default to uniform and the
/// ceiling to `m T`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    atoms: Vec<(f64, f64)>,
    weights: Option<Vec<f64>>,
    ceiling: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobust {
    n: usize,
    epsilon: Option<f64>,
    beta: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    #[serde(default)]
    normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHarness {
    n: usize,
    epsilons: Vec<f64>,
    trials: u64,
    seed: Option<u64>,
    #[serde(default)]
    normalize: bool,
}

/// How the ball radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusTarget {
    Epsilon(f64),
    Beta {
        beta: f64,
        constants: ConcentrationConstants,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSpec {
    pub n: usize,
    pub target: RadiusTarget,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessSpec {
    pub n: usize,
    pub epsilons: Vec<f64>,
    pub trials: u64,
    pub seed: Option<u64>,
    pub normalize: bool,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub power: f64,
    pub population: Option<Population>,
    pub profile: Option<Vec<f64>>,
    pub distribution: Option<DiscreteDistribution>,
    pub robust: Option<RobustSpec>,
    pub harness: Option<HarnessSpec>,
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Reads and validates a scenario file. Relative distribution paths resolve
/// against the scenario's directory.
pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = read(path)?;
    let raw: RawScenario = parse_json(path, &text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    validate(raw, base, path)
}

/// Parses scenario text directly; `origin` only labels error messages.
pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = parse_json(origin, text)?;
    validate(raw, Path::new("."), origin)
}

fn validate(raw: RawScenario, base: &Path, origin: &Path) -> Result<Scenario, ScenarioError> {
    let steps = raw.steps.unwrap_or(DEFAULT_STEPS);
    let grid = TimeGrid::new(steps).map_err(|e| ScenarioError::invalid("steps", e))?;
    let power = raw.power.unwrap_or(DEFAULT_POWER);
    if !(power > 0.0 && power.is_finite()) {
        return Err(ScenarioError::invalid(
            "power",
            format!("must be positive, got {power}"),
        ));
    }
    let ceiling = power * steps as f64;

    let population = raw
        .population
        .map(|iv| {
            Population::from_intervals(grid, power, &iv)
                .map_err(|e| ScenarioError::invalid("population", e))
        })
        .transpose()?;

    let profile = match raw.profile {
        Some(u) if u.len() != steps => {
            return Err(ScenarioError::invalid(
                "profile",
                format!("has length {}, expected {steps}", u.len()),
            ));
        }
        other => other,
    };

    let distribution = match raw.distribution {
        None => None,
        Some(RawSource::Inline(d)) => Some(build_distribution(d, ceiling, "distribution")?),
        Some(RawSource::Path(p)) => {
            let full = if p.is_absolute() { p } else { base.join(p) };
            let text = read(&full)?;
            let d: RawDistribution = parse_json(&full, &text)?;
            Some(build_distribution(
                d,
                ceiling,
                &format!("distribution ({})", full.display()),
            )?)
        }
    };

    let robust = raw.robust.map(validate_robust).transpose()?;
    if robust.is_some() && distribution.is_none() {
        return Err(ScenarioError::invalid(
            "robust",
            "requires a `distribution`",
        ));
    }

    let harness = match raw.harness {
        None => None,
        Some(h) => {
            if distribution.is_none() {
                return Err(ScenarioError::invalid(
                    "harness",
                    "requires a `distribution`",
                ));
            }
            if h.n == 0 {
                return Err(ScenarioError::invalid("harness.n", "must be at least 1"));
            }
            if h.trials == 0 {
                return Err(ScenarioError::invalid(
                    "harness.trials",
                    "must be at least 1",
                ));
            }
            if h.epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(ScenarioError::invalid(
                    "harness.epsilons",
                    "must be finite and non-negative",
                ));
            }
            if h.epsilons.is_empty() || h.epsilons.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScenarioError::invalid(
                    "harness.epsilons",
                    "must be non-empty and strictly increasing",
                ));
            }
            Some(HarnessSpec {
                n: h.n,
                epsilons: h.epsilons,
                trials: h.trials,
                seed: h.seed,
                normalize: h.normalize,
            })
        }
    };
    log::debug!("validated scenario {}", origin.display());
    Ok(Scenario {
        grid,
        power,
        population,
        profile,
        distribution,
        robust,
        harness,
    })
}

fn build_distribution(
    d: RawDistribution,
    ceiling: f64,
    field: &str,
) -> Result<DiscreteDistribution, ScenarioError> {
    if let Some(c) = d.ceiling {
        if (c - ceiling).abs() > DEFAULT_TOLERANCE * ceiling.max(1.0) {
            return Err(ScenarioError::invalid(
                format!("{field}.ceiling"),
                format!("is {c} but m T = {ceiling}"),
            ));
        }
    }
    if let Some(w) = &d.weights {
        let total: f64 = w.iter().sum();
        if w.len() != d.atoms.len() {
            return Err(ScenarioError::invalid(
                format!("{field}.weights"),
                format!("has {} entries for {} atoms", w.len(), d.atoms.len()),
            ));
        }
        if (total - 1.0).abs() > crate::ambiguity::WEIGHT_SUM_TOLERANCE {
            return Err(ScenarioError::invalid(
                format!("{field}.weights"),
                format!("sum to {total}, expected 1"),
            ));
        }
    }
    let built = match d.weights {
        Some(w) => DiscreteDistribution::new(d.atoms, w, ceiling),
        None => DiscreteDistribution::uniform(d.atoms, ceiling),
    };
    built.map_err(|e| ScenarioError::invalid(field, e))
}

fn validate_robust(r: RawRobust) -> Result<RobustSpec, ScenarioError> {
    if r.n == 0 {
        return Err(ScenarioError::invalid("robust.n", "must be at least 1"));
    }
    let target = match (r.epsilon, r.beta) {
        (Some(e), None) => {
            if !(e.is_finite() && e >= 0.0) {
                return Err(ScenarioError::invalid(
                    "robust.epsilon",
                    format!("must be non-negative, got {e}"),
                ));
            }
            RadiusTarget::Epsilon(e)
        }
        (None, Some(beta)) => {
            let (Some(c1), Some(c2)) = (r.c1, r.c2) else {
                return Err(ScenarioError::invalid(
                    "robust",
                    "`beta` needs constants `c1` and `c2`",
                ));
            };
            let constants = ConcentrationConstants::new(c1, c2)
                .map_err(|e| ScenarioError::invalid("robust.c1", e))?;
            if !(beta > 0.0 && beta < c1) {
                return Err(ScenarioError::invalid(
                    "robust.beta",
                    format!("must lie in (0, c1 = {c1})"),
                ));
            }
            RadiusTarget::Beta { beta, constants }
        }
        _ => {
            return Err(ScenarioError::invalid(
                "robust",
                "set exactly one of `epsilon` and `beta`",
            ))
        }
    };
    Ok(RobustSpec {
        n: r.n,
        target,
        normalize: r.normalize,
    })
}

impl Scenario {
    /// Harness configuration; `seed` overrides the file's seed.
    pub fn trial_config(&self, seed: Option<u64>) -> Result<TrialConfig, ScenarioError> {
        let h = self
            .harness
            .as_ref()
            .ok_or_else(|| ScenarioError::invalid("harness", "section is missing"))?;
        let seed = seed.or(h.seed).ok_or_else(|| {
            ScenarioError::invalid("harness.seed", "no seed in file or on the command line")
        })?;
        Ok(TrialConfig {
            distribution: self
                .distribution
                .clone()
                .expect("validated: harness requires a distribution"),
            n: h.n,
            epsilons: h.epsilons.clone(),
            trials: h.trials,
            seed,
            steps: self.grid.steps(),
            power: self.power,
            normalize: h.normalize,
            tolerance: DEFAULT_TOLERANCE,
        })
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a `# seed=<n>` line, the header and one row per radius.
pub fn write_csv<W: Write>(out: W, seed: u64, rows: &[ViolationStats]) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# seed={seed}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_float(r.epsilon),
            fmt_float(r.epsilon * r.epsilon),
            r.n.to_string(),
            r.steps.to_string(),
            r.trials.to_string(),
            r.violations.to_string(),
            fmt_float(r.beta_hat),
            fmt_float(r.ci_lo),
            fmt_float(r.ci_hi),
            r.degenerate.to_string(),
        ])?;
    }
    w.flush()
}

/// Reads a table written by [`write_csv`] (or several concatenated ones).
/// Returns the first seed comment found, if any.
pub fn read_csv<R: BufRead>(
    input: R,
    origin: &Path,
) -> Result<(Option<u64>, Vec<ViolationStats>), ScenarioError> {
    let parse_err = |line: usize, message: String| ScenarioError::Parse {
        path: origin.to_path_buf(),
        line,
        column: 1,
        message,
    };
    let mut seed = None;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| ScenarioError::Io {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("seed=") {
                let v = v
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| parse_err(lineno, format!("bad seed: {e}")))?;
                seed.get_or_insert(v);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(line.as_bytes());
        let record = reader
            .records()
            .next()
            .transpose()
            .map_err(|e| parse_err(lineno, e.to_string()))?
            .ok_or_else(|| parse_err(lineno, "empty record".into()))?;
        if record.iter().eq(CSV_HEADER.iter().copied()) {
            header_seen = true;
            continue;
        }
        if !header_seen {
            return Err(parse_err(
                lineno,
                format!("expected header `{}`", CSV_HEADER.join(",")),
            ));
        }
        if record.len() != CSV_HEADER.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, got {}", CSV_HEADER.len(), record.len()),
            ));
        }
        let f = |k: usize| -> Result<f64, ScenarioError> {
            record[k]
                .parse()
                .map_err(|e| parse_err(lineno, format!("{}: {e}", CSV_HEADER[k])))
        };
        let u = |k: usize| -> Result<u64, ScenarioError> {
            record[k]
                .parse()
                .map_err(|e| parse_err(lineno, format!("{}: {e}", CSV_HEADER[k])))
        };
        let degenerate = record[9]
            .parse::<bool>()
            .map_err(|e| parse_err(lineno, format!("degenerate: {e}")))?;
        let row = ViolationStats {
            epsilon: f(0)?,
            n: u(2)? as usize,
            steps: u(3)? as usize,
            trials: u(4)?,
            violations: u(5)?,
            beta_hat: f(6)?,
            ci_lo: f(7)?,
            ci_hi: f(8)?,
            degenerate,
        };
        if row.trials == 0 || row.violations > row.trials {
            return Err(ScenarioError::invalid(
                format!("line {lineno}"),
                "violations must not exceed trials > 0",
            ));
        }
        rows.push(row);
    }
    if !header_seen {
        return Err(parse_err(1, "missing header".into()));
    }
    Ok((seed, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        parse_scenario_str(text, Path::new("inline.json"))
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let s = parse("{}").unwrap();
        assert_eq!(s.grid.steps(), 24);
        assert_eq!(s.power, 1.0);
        assert!(s.population.is_none() && s.distribution.is_none());
    }

    #[test]
    fn bad_weights_name_the_field() {
        let err = parse(r#"{"distribution": {"atoms": [[0, 1], [1, 2]], "weights": [0.5, 0.4]}}"#)
            .unwrap_err();
        match err {
            ScenarioError::Validation { field, .. } => assert_eq!(field, "distribution.weights"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = parse(r#"{"steps": 4,"#).unwrap_err();
        assert!(err.is_parse());
        let err = parse(r#"{"stepz": 4}"#).unwrap_err();
        assert!(err.is_parse());
        assert!(parse_scenario(Path::new("/nonexistent/scenario.json"))
            .unwrap_err()
            .is_parse());
    }

    #[test]
    fn robust_needs_exactly_one_target() {
        let d = r#""distribution": {"atoms": [[0, 1]]}"#;
        assert!(parse(&format!(r#"{{"steps": 2, {d}, "robust": {{"n": 1}}}}"#)).is_err());
        assert!(parse(&format!(
            r#"{{"steps": 2, {d}, "robust": {{"n": 1, "epsilon": 0.1, "beta": 0.1}}}}"#
        ))
        .is_err());
        assert!(parse(&format!(
            r#"{{"steps": 2, {d}, "robust": {{"n": 1, "beta": 0.1}}}}"#
        ))
        .is_err());
        let s = parse(&format!(
            r#"{{"steps": 2, {d}, "robust": {{"n": 1, "beta": 0.1, "c1": 2, "c2": 1}}}}"#
        ))
        .unwrap();
        assert!(matches!(
            s.robust.unwrap().target,
            RadiusTarget::Beta { .. }
        ));
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = vec![
            ViolationStats::from_counts(0.1, 10, 24, 2000, 37, false),
            ViolationStats::from_counts(1.0 / 3.0, 10, 24, 2000, 0, true),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, 42, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# seed=42\nepsilon,epsilon_sq,N,T,trials,violations,beta_hat,ci_lo,ci_hi,degenerate\n"
        ));
        let (seed, back) = read_csv(buf.as_slice(), Path::new("t.csv")).unwrap();
        assert_eq!(seed, Some(42));
        assert_eq!(back, rows);
    }
}
