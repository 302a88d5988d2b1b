//! Run configuration: TOML schema, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use cavity_singlet::model::{ModelParams, DEFAULT_N_MAX};
use serde::Deserialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub g: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "Omega")]
    pub omega: Option<f64>,
    #[serde(rename = "Omega_MW")]
    pub omega_mw: Option<f64>,
    #[serde(rename = "Delta")]
    pub laser_detuning: Option<f64>,
    #[serde(rename = "delta")]
    pub cavity_detuning: Option<f64>,
    pub n_max: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

/// The file as written; every field optional so that validation can report
/// all problems at once.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub mode: Option<String>,
    pub params: Option<RawParams>,
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
    pub n_steps: Option<i64>,
    #[serde(rename = "C_list")]
    pub c_list: Option<Vec<f64>>,
    pub kappa_over_gamma: Option<OneOrMany>,
    pub gap_targets: Option<Vec<f64>>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<String>,
    /// γ in 1/s; adds SI times to the output.
    #[serde(rename = "gamma_SI")]
    pub gamma_si: Option<f64>,
    /// Sweep only: refine the drives after the detuning search.
    pub polish: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Dynamics {
        params: ModelParams,
        t_max: f64,
        n_steps: usize,
    },
    Steady {
        params: ModelParams,
    },
    Effective {
        params: ModelParams,
    },
    Sweep {
        c_list: Vec<f64>,
        kappa_over_gamma: Vec<f64>,
        polish: bool,
        n_max: usize,
    },
    Tradeoff {
        c: f64,
        kappa_over_gamma: f64,
        gap_targets: Vec<f64>,
        n_max: usize,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dynamics { .. } => "dynamics",
            Self::Steady { .. } => "steady",
            Self::Effective { .. } => "effective",
            Self::Sweep { .. } => "sweep",
            Self::Tradeoff { .. } => "tradeoff",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub gamma_si: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<FieldError>),
}

pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

#[derive(Default)]
struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    fn require<T: Copy>(&mut self, field: &str, v: Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(field, "missing");
        }
        v
    }

    fn positive(&mut self, field: &str, v: Option<f64>) -> Option<f64> {
        let v = self.require(field, v)?;
        if v.is_finite() && v > 0.0 {
            Some(v)
        } else {
            self.push(field, format!("must be positive, got {v}"));
            None
        }
    }

    fn non_negative(&mut self, field: &str, v: Option<f64>) -> Option<f64> {
        let v = self.require(field, v)?;
        if v.is_finite() && v >= 0.0 {
            Some(v)
        } else {
            self.push(field, format!("must be non-negative, got {v}"));
            None
        }
    }

    fn finite(&mut self, field: &str, v: Option<f64>) -> Option<f64> {
        let v = self.require(field, v)?;
        if v.is_finite() {
            Some(v)
        } else {
            self.push(field, format!("must be finite, got {v}"));
            None
        }
    }

    fn positive_list(&mut self, field: &str, v: Option<Vec<f64>>) -> Option<Vec<f64>> {
        let Some(v) = v else {
            self.push(field, "missing");
            return None;
        };
        if v.is_empty() {
            self.push(field, "must not be empty");
            return None;
        }
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            self.push(field, format!("entries must be positive, got {bad}"));
            return None;
        }
        Some(v)
    }
}

fn n_max_of(errors: &mut Errors, raw: &RawParams) -> Option<usize> {
    match raw.n_max {
        None => Some(DEFAULT_N_MAX),
        Some(n) if n >= 1 => Some(n as usize),
        Some(n) => {
            errors.push("params.n_max", format!("must be at least 1, got {n}"));
            None
        }
    }
}

fn model_params(errors: &mut Errors, raw: Option<&RawParams>) -> Option<ModelParams> {
    let empty = RawParams::default();
    if raw.is_none() {
        errors.push("params", "missing");
    }
    let r = raw.unwrap_or(&empty);
    let g = errors.positive("params.g", r.g);
    let kappa = errors.positive("params.kappa", r.kappa);
    let gamma = errors.positive("params.gamma", r.gamma.or(Some(1.0)));
    let omega = errors.non_negative("params.Omega", r.omega);
    let omega_mw = errors.non_negative("params.Omega_MW", r.omega_mw);
    let laser = errors.finite("params.Delta", r.laser_detuning);
    if laser == Some(0.0) {
        errors.push("params.Delta", "must be nonzero");
    }
    let cavity = errors.finite("params.delta", r.cavity_detuning);
    let n_max = n_max_of(errors, r);
    Some(ModelParams {
        g: g?,
        kappa: kappa?,
        gamma: gamma?,
        omega: omega?,
        omega_mw: omega_mw?,
        laser_detuning: laser.filter(|&d| d != 0.0)?,
        cavity_detuning: cavity?,
        n_max: n_max?,
    })
}

impl RawConfig {
    /// Checks every field relevant to the selected mode and reports all
    /// problems together.
    pub fn validate(&self) -> Result<RunConfig, Vec<FieldError>> {
        let mut e = Errors::default();
        let output_format = match &self.output_format {
            None => Some(OutputFormat::Csv),
            Some(s) => OutputFormat::parse(s).or_else(|| {
                e.push("output_format", format!("must be csv or json, got {s:?}"));
                None
            }),
        };
        if let Some(v) = self.gamma_si {
            if !(v.is_finite() && v > 0.0) {
                e.push("gamma_SI", format!("must be positive, got {v}"));
            }
        }
        let n_max = self
            .params
            .as_ref()
            .map_or(Some(DEFAULT_N_MAX), |p| n_max_of(&mut e, p));

        let mode = match self.mode.as_deref() {
            None => {
                e.push("mode", "missing");
                None
            }
            Some("dynamics") => {
                let params = model_params(&mut e, self.params.as_ref());
                let t_max = e.positive("t_max", self.t_max);
                let n_steps = match e.require("n_steps", self.n_steps) {
                    Some(n) if n >= 1 => Some(n as usize),
                    Some(n) => {
                        e.push("n_steps", format!("must be at least 1, got {n}"));
                        None
                    }
                    None => None,
                };
                match (params, t_max, n_steps) {
                    (Some(params), Some(t_max), Some(n_steps)) => Some(Mode::Dynamics {
                        params,
                        t_max,
                        n_steps,
                    }),
                    _ => None,
                }
            }
            Some("steady") => {
                model_params(&mut e, self.params.as_ref()).map(|params| Mode::Steady { params })
            }
            Some("effective") => {
                model_params(&mut e, self.params.as_ref()).map(|params| Mode::Effective { params })
            }
            Some("sweep") => {
                let c_list = e.positive_list("C_list", self.c_list.clone());
                let kog = e.positive_list(
                    "kappa_over_gamma",
                    self.kappa_over_gamma.as_ref().map(OneOrMany::values),
                );
                match (c_list, kog, n_max) {
                    (Some(c_list), Some(kappa_over_gamma), Some(n_max)) => Some(Mode::Sweep {
                        c_list,
                        kappa_over_gamma,
                        polish: self.polish.unwrap_or(true),
                        n_max,
                    }),
                    _ => None,
                }
            }
            Some("tradeoff") => {
                let c = e
                    .positive_list("C_list", self.c_list.clone())
                    .and_then(|v| {
                        if v.len() == 1 {
                            Some(v[0])
                        } else {
                            e.push("C_list", "tradeoff takes exactly one cooperativity");
                            None
                        }
                    });
                let kog = e
                    .positive_list(
                        "kappa_over_gamma",
                        self.kappa_over_gamma.as_ref().map(OneOrMany::values),
                    )
                    .and_then(|v| {
                        if v.len() == 1 {
                            Some(v[0])
                        } else {
                            e.push("kappa_over_gamma", "tradeoff takes exactly one value");
                            None
                        }
                    });
                let targets = e.positive_list("gap_targets", self.gap_targets.clone());
                match (c, kog, targets, n_max) {
                    (Some(c), Some(kappa_over_gamma), Some(gap_targets), Some(n_max)) => {
                        Some(Mode::Tradeoff {
                            c,
                            kappa_over_gamma,
                            gap_targets,
                            n_max,
                        })
                    }
                    _ => None,
                }
            }
            Some(other) => {
                e.push(
                    "mode",
                    format!("must be one of dynamics, steady, effective, sweep, tradeoff; got {other:?}"),
                );
                None
            }
        };

        match (mode, output_format) {
            (Some(mode), Some(output_format)) if e.0.is_empty() => Ok(RunConfig {
                mode,
                seed: self.seed.unwrap_or(0),
                output_path: self.output_path.clone(),
                output_format,
                gamma_si: self.gamma_si,
            }),
            _ => Err(e.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEADY: &str = r#"
mode = "steady"
[params]
g = 5.0
kappa = 0.5
Omega = 0.25
Omega_MW = 0.1
Delta = 7.76
delta = 3.14
"#;

    #[test]
    fn defaults_applied() {
        let c = parse(STEADY).unwrap().validate().unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.output_format, OutputFormat::Csv);
        match c.mode {
            Mode::Steady { params } => {
                assert_eq!(params.n_max, 2);
                assert_eq!(params.gamma, 1.0);
            }
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn missing_g_is_named() {
        let text = STEADY.replace("g = 5.0\n", "");
        let err = parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].field, "params.g");
    }

    #[test]
    fn errors_are_aggregated() {
        let text = r#"
mode = "dynamics"
output_format = "xml"
t_max = -1.0
[params]
kappa = 0.0
Omega = 0.1
Omega_MW = 0.1
Delta = 0.0
delta = 1.0
n_max = 0
"#;
        let err = parse(text).unwrap().validate().unwrap_err();
        let fields: Vec<&str> = err.iter().map(|e| e.field.as_str()).collect();
        for f in [
            "output_format",
            "params.g",
            "params.kappa",
            "params.Delta",
            "params.n_max",
            "t_max",
            "n_steps",
        ] {
            assert!(fields.contains(&f), "{f} not in {fields:?}");
        }
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(matches!(
            parse("mode = \"steady\"\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn sweep_accepts_scalar_ratio() {
        let c =
            parse("mode = \"sweep\"\nC_list = [10, 20]\nkappa_over_gamma = 1.0\npolish = false\n")
                .unwrap()
                .validate()
                .unwrap();
        assert_eq!(
            c.mode,
            Mode::Sweep {
                c_list: vec![10.0, 20.0],
                kappa_over_gamma: vec![1.0],
                polish: false,
                n_max: 2
            }
        );
    }

    #[test]
    fn tradeoff_needs_single_cooperativity() {
        let err = parse("mode = \"tradeoff\"\nC_list = [10, 20]\nkappa_over_gamma = 1.0\ngap_targets = [0.01]\n")
            .unwrap()
            .validate()
            .unwrap_err();
        assert_eq!(err[0].field, "C_list");
    }

    #[test]
    fn unknown_mode_rejected() {
        let err = parse("mode = \"fly\"\n").unwrap().validate().unwrap_err();
        assert_eq!(err[0].field, "mode");
    }
}
