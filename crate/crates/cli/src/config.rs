//! Experiment configuration: a TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::registry::ExampleId;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    HVersion,
    PVersion,
    SingleRun,
    EnergyTrace,
}

impl FromStr for Mode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h_version" => Ok(Mode::HVersion),
            "p_version" => Ok(Mode::PVersion),
            "single_run" => Ok(Mode::SingleRun),
            "energy_trace" => Ok(Mode::EnergyTrace),
            other => Err(ConfigError::Invalid(format!(
                "unknown mode '{other}' (expected h_version, p_version, single_run or energy_trace)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::HVersion => "h_version",
            Mode::PVersion => "p_version",
            Mode::SingleRun => "single_run",
            Mode::EnergyTrace => "energy_trace",
        })
    }
}

/// A step size written either as `1/N` or as a decimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub value: f64,
    /// `N` when given as `1/N`.
    pub reciprocal: Option<u64>,
}

impl FromStr for Step {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || {
            ConfigError::Invalid(format!(
                "cannot read step size '{s}' (use 1/N or a decimal)"
            ))
        };
        let step = match s.split_once('/') {
            Some((num, den)) => {
                let num: f64 = num.trim().parse().map_err(|_| bad())?;
                let den_int: u64 = den.trim().parse().map_err(|_| bad())?;
                Step {
                    value: num / den_int as f64,
                    reciprocal: (num == 1.0).then_some(den_int),
                }
            }
            None => Step {
                value: s.parse().map_err(|_| bad())?,
                reciprocal: None,
            },
        };
        if !(step.value > 0.0) || !step.value.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "step size '{s}' must be positive"
            )));
        }
        Ok(step)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.reciprocal {
            Some(n) => write!(f, "1/{n}"),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Parses `"3,4,5"`.
pub fn parse_degrees(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("cannot read degree '{p}'")))
        })
        .collect()
}

/// Parses `"1/32,1/64"`.
pub fn parse_steps(s: &str) -> Result<Vec<Step>, ConfigError> {
    s.split(',').map(str::parse).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iters: usize,
    /// Gauss points beyond the local degree for the load integrals.
    pub quad_points: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = hpcpg::SolverOptions::default();
        Self {
            tol: d.tol,
            max_iters: d.max_iters,
            quad_points: d.quad_extra,
        }
    }
}

impl SolverSection {
    pub fn options(&self) -> hpcpg::SolverOptions {
        hpcpg::SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            quad_extra: self.quad_points,
        }
    }
}

/// Example parameters; each example reads the ones it understands.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Eccentricity of the two-body orbit.
    pub epsilon: Option<f64>,
    /// Frequency of the custom oscillator.
    pub omega: Option<f64>,
    /// Spatial modal degree per direction for the wave examples.
    pub spatial_degree: Option<usize>,
    /// Spatial Gauss points per direction for the wave examples.
    pub spatial_quad: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    example: String,
    mode: String,
    degrees: Vec<usize>,
    #[serde(default)]
    steps: Vec<String>,
    /// Per-degree step lists, keyed by the degree.
    #[serde(default)]
    degree_steps: BTreeMap<String, Vec<String>>,
    horizon: Option<f64>,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    params: Params,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: ExampleId,
    pub mode: Mode,
    pub degrees: Vec<usize>,
    pub steps: Vec<Step>,
    /// Step lists replacing `steps` for single degrees.
    pub degree_steps: BTreeMap<usize, Vec<Step>>,
    /// Final time; `None` uses the example default.
    pub horizon: Option<f64>,
    pub solver: SolverSection,
    pub params: Params,
    pub out_dir: PathBuf,
    /// Write wall-clock times into the CSV (breaks bit-identical output).
    pub timings: bool,
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub example: Option<String>,
    pub mode: Option<String>,
    pub degrees: Option<String>,
    pub steps: Option<String>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub quad_points: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let steps = raw
            .steps
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Step>, _>>()?;
        let degree_steps = raw
            .degree_steps
            .iter()
            .map(|(r, list)| {
                let r: usize = r.parse().map_err(|_| {
                    ConfigError::Invalid(format!("degree_steps key '{r}' is not a degree"))
                })?;
                let list = list
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<Step>, _>>()?;
                Ok((r, list))
            })
            .collect::<Result<BTreeMap<_, _>, ConfigError>>()?;
        let cfg = Self {
            example: raw.example.parse()?,
            mode: raw.mode.parse()?,
            degrees: raw.degrees,
            steps,
            degree_steps,
            horizon: raw.horizon,
            solver: raw.solver,
            params: raw.params,
            out_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
            timings: raw.output.timings,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn apply(mut self, o: &Overrides) -> Result<Self, ConfigError> {
        if let Some(e) = &o.example {
            self.example = e.parse()?;
        }
        if let Some(m) = &o.mode {
            self.mode = m.parse()?;
        }
        if let Some(d) = &o.degrees {
            self.degrees = parse_degrees(d)?;
        }
        if let Some(s) = &o.steps {
            self.steps = parse_steps(s)?;
            self.degree_steps.clear();
        }
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(tol) = o.tol {
            self.solver.tol = tol;
        }
        if let Some(q) = o.quad_points {
            self.solver.quad_points = q;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.degrees.is_empty() {
            return Err(ConfigError::Invalid(
                "the degree list must be nonempty".into(),
            ));
        }
        if let Some(r) = self.degrees.iter().find(|&&r| self.steps_for(r).is_empty()) {
            return Err(ConfigError::Invalid(format!(
                "no step sizes given for degree {r}"
            )));
        }
        if let Some(&r) = self.degrees.iter().find(|&&r| r < hpcpg::mesh::MIN_DEGREE) {
            return Err(ConfigError::Invalid(format!(
                "degree {r} is below the minimum of 2"
            )));
        }
        if self.mode == Mode::SingleRun
            && (self.degrees.len() != 1 || self.steps_for(self.degrees[0]).len() != 1)
        {
            return Err(ConfigError::Invalid(
                "single_run takes exactly one degree and one step".into(),
            ));
        }
        if self.mode == Mode::EnergyTrace && self.example != ExampleId::TwoBody {
            return Err(ConfigError::Invalid(
                "energy_trace needs the two_body example".into(),
            ));
        }
        if !(self.solver.tol >= 0.0) || self.solver.max_iters == 0 {
            return Err(ConfigError::Invalid(
                "solver tol must be >= 0 and max_iters >= 1".into(),
            ));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) || !t.is_finite() {
                return Err(ConfigError::Invalid(format!(
                    "horizon must be positive, got {t}"
                )));
            }
        }
        let horizon = self.horizon();
        for &r in &self.degrees {
            for s in self.steps_for(r) {
                intervals(horizon, s.value)?;
            }
        }
        Ok(())
    }

    /// Step sizes run at degree `r`.
    pub fn steps_for(&self, r: usize) -> &[Step] {
        self.degree_steps.get(&r).unwrap_or(&self.steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
            .unwrap_or_else(|| self.example.default_horizon())
    }
}

/// Interval count `N = T/k`; `k` has to divide `T`.
pub fn intervals(horizon: f64, step: f64) -> Result<usize, ConfigError> {
    let n = (horizon / step).round();
    if n < 1.0 || ((n * step - horizon) / horizon).abs() > 1e-9 {
        return Err(ConfigError::Invalid(format!(
            "step {step} does not divide the horizon {horizon}"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
example = "ex1"
mode = "h_version"
degrees = [3]
steps = ["1/32", "1/64", "0.0078125"]

[solver]
tol = 0.0
"#;

    #[test]
    fn parses_file() {
        let cfg = ExperimentConfig::from_toml(BASE, Path::new("t.toml")).unwrap();
        assert_eq!(cfg.example, ExampleId::Ex1);
        assert_eq!(cfg.mode, Mode::HVersion);
        assert_eq!(cfg.steps[0].reciprocal, Some(32));
        assert_eq!(cfg.steps[2].value, 1.0 / 128.0);
        assert_eq!(cfg.solver.tol, 0.0);
        assert_eq!(cfg.solver.max_iters, 200);
        assert_eq!(cfg.horizon(), 1.0);
    }

    #[test]
    fn overrides_replace_fields() {
        let cfg = ExperimentConfig::from_toml(BASE, Path::new("t.toml")).unwrap();
        let cfg = cfg
            .apply(&Overrides {
                degrees: Some("3,4,5".into()),
                steps: Some("1/8".into()),
                tol: Some(1e-12),
                quad_points: Some(12),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(cfg.degrees, vec![3, 4, 5]);
        assert_eq!(cfg.steps.len(), 1);
        assert_eq!(cfg.solver.tol, 1e-12);
        assert_eq!(cfg.solver.quad_points, 12);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            BASE.replace("ex1", "ex9"),
            BASE.replace("h_version", "q_version"),
            BASE.replace("[3]", "[]"),
            BASE.replace("[3]", "[1]"),
            BASE.replace("\"1/32\"", "\"-1/32\""),
            BASE.replace("\"1/32\"", "\"0.3\""),
            BASE.replace("h_version", "energy_trace"),
            BASE.replace("tol = 0.0", "tol = 0.0\nbogus = 1"),
        ];
        for text in cases {
            assert!(
                ExperimentConfig::from_toml(&text, Path::new("t.toml")).is_err(),
                "{text}"
            );
        }
    }

    #[test]
    fn per_degree_steps() {
        let text = BASE.replace("degrees = [3]", "degrees = [3, 4]")
            + "\n[degree_steps]\n4 = [\"1/4\", \"1/8\"]\n";
        let text = text
            .replacen("[solver]", "", 1)
            .replacen("tol = 0.0", "", 1);
        let cfg = ExperimentConfig::from_toml(&text, Path::new("t.toml")).unwrap();
        assert_eq!(cfg.steps_for(3).len(), 3);
        assert_eq!(cfg.steps_for(4)[1].value, 0.125);
    }

    #[test]
    fn interval_counts() {
        assert_eq!(intervals(1.0, 1.0 / 64.0).unwrap(), 64);
        assert_eq!(intervals(10.0, 0.05).unwrap(), 200);
        assert!(intervals(1.0, 0.3).is_err());
    }
}
