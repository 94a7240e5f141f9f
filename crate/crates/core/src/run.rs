//! Single runs and parameter sweeps.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::analysis::{energy, fit_decay_rate, DecayFit, EnergySample, LyapunovWeights};
use crate::certificates::{certify, CertificateReport, CertificateRequest};
use crate::config::{Equation, InitialData, LyapunovChoice, RunConfig};
use crate::error::{Error, Result};
use crate::lattice::{reference_history, reference_profile, Discretization, FeedbackLaw, State};
use crate::scheme::SystemMatrix;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub samples: Vec<EnergySample>,
    pub fit: DecayFit,
    pub report: CertificateReport,
    pub notices: Vec<String>,
}

/// Builds the grid, steps `Nt` times, fits the decay on `[T/2, T]` and
/// evaluates the certificates. Writes nothing.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let disc = config.discretization()?;
    let law = config.law()?;
    let mut notices = Vec::new();

    let mut initial = initial_state(config, &disc)?;
    let e0 = energy(&initial, &disc, &law);
    if let Some(norm) = config.initial_norm {
        if e0 > 0.0 {
            initial = initial.scaled(norm / e0.sqrt());
        } else {
            notices.push("initial data is zero; initial_norm ignored".to_string());
        }
    }
    let radius = match config.equation {
        Equation::Nonlinear => Some(energy(&initial, &disc, &law).sqrt()),
        Equation::Linear => None,
    };

    let report = certify(&CertificateRequest {
        alpha: config.alpha,
        beta: config.beta,
        length: config.length,
        delay: config.delay,
        weights: match config.lyapunov {
            LyapunovChoice::Fixed(w) => Some(w),
            _ => None,
        },
        radius,
    });
    let weights = match config.lyapunov {
        LyapunovChoice::Off => None,
        LyapunovChoice::Fixed(w) => Some(w),
        LyapunovChoice::Auto => {
            let w = report.weights();
            if w.is_none() {
                notices.push(
                    "no automatic Lyapunov weights (beta = 0, inadmissible, or L >= sqrt(3) pi); V omitted".to_string(),
                );
            }
            w
        }
    };

    let samples = simulate(&disc, &law, initial, config.equation, weights, config.sample_every)?;
    let window = (0.5 * disc.final_time, disc.time(disc.time_steps));
    let fit = fit_or_flat(&samples, window)?;
    Ok(RunOutput {
        samples,
        fit,
        report,
        notices,
    })
}

fn fit_or_flat(samples: &[EnergySample], window: (f64, f64)) -> Result<DecayFit> {
    match fit_decay_rate(samples, window) {
        Ok(fit) => Ok(fit),
        Err(Error::NonPositiveEnergy { .. })
            if samples
                .iter()
                .filter(|s| s.t >= window.0 && s.t <= window.1 + 1e-9)
                .all(|s| s.energy == 0.0) =>
        {
            Ok(DecayFit {
                nu: 0.0,
                kappa: 0.0,
                r2: 1.0,
                window,
                samples: 0,
                truncated: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Steps `disc.time_steps` times from `initial`, recording step 0 and every
/// `sample_every`-th step.
pub fn simulate(
    disc: &Discretization,
    law: &FeedbackLaw,
    initial: State,
    equation: Equation,
    weights: Option<LyapunovWeights>,
    sample_every: usize,
) -> Result<Vec<EnergySample>> {
    let matrix = SystemMatrix::assemble(disc, law).map_err(|e| Error::AtStep {
        step: 0,
        source: Box::new(e),
    })?;
    let mut ws = matrix.workspace();
    let mut state = initial;
    let mut samples = Vec::with_capacity(disc.time_steps / sample_every.max(1) + 1);
    samples.push(EnergySample::record(&state, disc, law, weights));
    for n in 1..=disc.time_steps {
        let next = match equation {
            Equation::Linear => matrix.step_linear_with(&state, &mut ws),
            Equation::Nonlinear => matrix.step_nonlinear_with(&state, &mut ws),
        };
        state = next.map_err(|e| Error::AtStep {
            step: n,
            source: Box::new(e),
        })?;
        state.t = disc.time(n);
        if n % sample_every.max(1) == 0 {
            samples.push(EnergySample::record(&state, disc, law, weights));
        }
    }
    Ok(samples)
}

pub fn initial_state(config: &RunConfig, disc: &Discretization) -> Result<State> {
    match &config.initial {
        InitialData::PaperDefault => State::sample(disc, reference_profile(disc.length), reference_history(disc.delay)),
        InitialData::Zero => Ok(State::zero(disc)),
        InitialData::File(path) => {
            let (y, z) = read_initial_file(path)?;
            State::initial(disc, y, z)
        }
    }
}

/// Reads an initial-data file: a line `y: v0, v1, ...` and a line
/// `z: v0, v1, ...` (commas or whitespace), `#` comments allowed.
pub fn read_initial_file(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut y = None;
    let mut z = None;
    for (index, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: index + 1,
            key: path.display().to_string(),
            message,
        };
        let (tag, rest) = content
            .split_once(':')
            .ok_or_else(|| parse_err("expected `y: ...` or `z: ...`".to_string()))?;
        let values = rest
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| f64::from_str(s).map_err(|_| parse_err(format!("bad number `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        match tag.trim() {
            "y" => y = Some(values),
            "z" => z = Some(values),
            other => return Err(parse_err(format!("unknown row `{other}`"))),
        }
    }
    match (y, z) {
        (Some(y), Some(z)) => Ok((y, z)),
        _ => Err(Error::Validation(vec![format!(
            "{}: initial data file needs both a `y:` and a `z:` row",
            path.display()
        )])),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Delay,
    Beta,
    Alpha,
    Length,
}

impl SweepAxis {
    pub fn apply(self, base: &RunConfig, value: f64) -> RunConfig {
        let mut c = base.clone();
        match self {
            SweepAxis::Delay => c.delay = value,
            SweepAxis::Beta => c.beta = value,
            SweepAxis::Alpha => c.alpha = value,
            SweepAxis::Length => c.length = value,
        }
        c
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delay => "h",
            SweepAxis::Beta => "beta",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Length => "L",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "h" => Ok(SweepAxis::Delay),
            "beta" => Ok(SweepAxis::Beta),
            "alpha" => Ok(SweepAxis::Alpha),
            "L" => Ok(SweepAxis::Length),
            other => Err(format!("unknown sweep axis `{other}` (expected h, beta, alpha or L)")),
        }
    }
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<RunOutput>,
}

impl SweepRow {
    pub fn fit(&self) -> Option<&DecayFit> {
        self.outcome.as_ref().ok().map(|o| &o.fit)
    }
}

/// One independent run per value, in parallel; failures stay in their row.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[f64]) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: run(&axis.apply(base, value)),
        })
        .collect()
}
