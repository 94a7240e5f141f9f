//! Run configuration: a flat `key = value` document with `#` comments.
//!
//! ```text
//! # reference configuration
//! L = 1
//! T = 1
//! h = 1
//! alpha = 0.5
//! beta = 0.2
//! dx = 0.01
//! dt = 0.001
//! drho = 0.001
//! equation = linear          # or nonlinear
//! initial = paper_default    # or zero, or file <path>
//! lyapunov = auto            # or none, or "mu1, mu2"
//! sample_every = 1
//! ```

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analysis::LyapunovWeights;
use crate::certificates::is_admissible;
use crate::error::{Error, Result};
use crate::lattice::{Discretization, FeedbackLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equation {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `y0(x) = 1 - cos(2 pi x / L)`, `z0(rho) = 0.1 sin(-2 pi rho h)`.
    PaperDefault,
    Zero,
    /// Text file with a `y` row of `J + 1` values and a `z` row of `K + 1` values.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LyapunovChoice {
    /// Half of the admissible bounds.
    Auto,
    Fixed(LyapunovWeights),
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub equation: Equation,
    pub length: f64,
    pub final_time: f64,
    pub delay: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dx: f64,
    pub dt: f64,
    pub drho: f64,
    pub initial: InitialData,
    /// Rescale the initial data to this energy norm `sqrt(E(0))`.
    pub initial_norm: Option<f64>,
    pub lyapunov: LyapunovChoice,
    pub output_dir: PathBuf,
    pub sample_every: usize,
}

impl RunConfig {
    /// `T = 1, L = 1, h = 1, alpha = 0.5, beta = 0.2, dt = 0.001, dx = 0.01, drho = 0.001`.
    pub fn reference() -> Self {
        Self {
            equation: Equation::Linear,
            length: 1.0,
            final_time: 1.0,
            delay: 1.0,
            alpha: 0.5,
            beta: 0.2,
            dx: 0.01,
            dt: 0.001,
            drho: 0.001,
            initial: InitialData::PaperDefault,
            initial_norm: None,
            lyapunov: LyapunovChoice::Auto,
            output_dir: PathBuf::from("output"),
            sample_every: 1,
        }
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Discretization::new(self.length, self.final_time, self.delay, self.dx, self.dt, self.drho)
    }

    pub fn law(&self) -> Result<FeedbackLaw> {
        FeedbackLaw::new(self.alpha, self.beta, self.delay)
    }

    /// Every violated precondition, in one error.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.discretization() {
            problems.push(e.to_string());
        }
        if self.sample_every == 0 {
            problems.push("sample_every must be at least 1".to_string());
        }
        if let LyapunovChoice::Fixed(w) = self.lyapunov {
            if let Err(e) = LyapunovWeights::new(w.mu1, w.mu2) {
                problems.push(e.to_string());
            }
        }
        if let Some(norm) = self.initial_norm {
            if !(norm > 0.0) || !norm.is_finite() {
                problems.push(format!("initial_norm must be strictly positive (got {norm})"));
            }
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            problems.push("alpha and beta must be finite".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !is_admissible(self.alpha, self.beta) {
            out.push(format!(
                "inadmissible: |α|+|β| ≥ 1 (|{}| + |{}| = {}); the simulation still runs",
                self.alpha,
                self.beta,
                self.alpha.abs() + self.beta.abs()
            ));
        }
        out
    }
}

const REQUIRED: [&str; 8] = ["L", "T", "h", "alpha", "beta", "dx", "dt", "drho"];

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config = RunConfig::reference();
    let mut seen = HashSet::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                key: content.to_string(),
                message: "expected `key = value`".to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let err = |message: String| Error::Parse {
            line,
            key: key.to_string(),
            message,
        };
        if !seen.insert(key.to_string()) {
            return Err(err("duplicate key".to_string()));
        }
        match key {
            "L" => config.length = number(value).map_err(err)?,
            "T" => config.final_time = number(value).map_err(err)?,
            "h" => config.delay = number(value).map_err(err)?,
            "alpha" => config.alpha = number(value).map_err(err)?,
            "beta" => config.beta = number(value).map_err(err)?,
            "dx" => config.dx = number(value).map_err(err)?,
            "dt" => config.dt = number(value).map_err(err)?,
            "drho" => config.drho = number(value).map_err(err)?,
            "initial_norm" => config.initial_norm = Some(number(value).map_err(err)?),
            "sample_every" => {
                config.sample_every = value
                    .parse()
                    .map_err(|_| err(format!("expected a non-negative integer, got `{value}`")))?
            }
            "output_dir" => config.output_dir = PathBuf::from(value),
            "equation" => {
                config.equation = match value {
                    "linear" => Equation::Linear,
                    "nonlinear" => Equation::Nonlinear,
                    other => return Err(err(format!("expected `linear` or `nonlinear`, got `{other}`"))),
                }
            }
            "initial" => {
                config.initial = match value.split_once(char::is_whitespace) {
                    Some(("file", path)) => InitialData::File(PathBuf::from(path.trim())),
                    _ if value == "paper_default" => InitialData::PaperDefault,
                    _ if value == "zero" => InitialData::Zero,
                    _ => {
                        return Err(err(format!(
                            "expected `paper_default`, `zero` or `file <path>`, got `{value}`"
                        )))
                    }
                }
            }
            "lyapunov" => {
                config.lyapunov = match value {
                    "auto" => LyapunovChoice::Auto,
                    "none" => LyapunovChoice::Off,
                    pair => {
                        let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
                        let [mu1, mu2] = parts.as_slice() else {
                            return Err(err(format!("expected `auto`, `none` or `mu1, mu2`, got `{pair}`")));
                        };
                        LyapunovChoice::Fixed(LyapunovWeights {
                            mu1: number(mu1).map_err(err)?,
                            mu2: number(mu2).map_err(err)?,
                        })
                    }
                }
            }
            _ => return Err(err("unknown key".to_string())),
        }
    }
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|k| !seen.contains(**k))
        .map(|k| format!("missing required key `{k}`"))
        .collect();
    if !missing.is_empty() {
        let mut problems = missing;
        if let Err(Error::Validation(more)) = config.validate() {
            problems.extend(more);
        }
        return Err(Error::Validation(problems));
    }
    config.validate()?;
    Ok(config)
}

fn number(value: &str) -> std::result::Result<f64, String> {
    f64::from_str(value).map_err(|_| format!("expected a number, got `{value}`"))
}
