//! Grid geometry and the coupled `(y, z)` state.
//!
//! `y` lives on `x_j = j dx`, `j = 0..=J`, and `z` is the delay line
//! `z(rho, t) = y_x(0, t - rho h)` sampled on `rho_i = i / K`, `i = 0..=K`.
//! `drho` is the step of the delay in time units, so `K = h / drho` and the
//! normalized step in `rho` is `drho / h`.

use crate::error::{Error, Result};

const DIRICHLET_TOL: f64 = 1e-9;
const INVARIANT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub length: f64,
    pub final_time: f64,
    pub delay: f64,
    pub dx: f64,
    pub dt: f64,
    pub drho: f64,
    /// `J`
    pub space_steps: usize,
    /// `K`
    pub delay_steps: usize,
    /// `Nt`
    pub time_steps: usize,
}

impl Discretization {
    /// Rounds the requested steps so that they divide `L`, `h` and `T`
    /// exactly, then recomputes them.
    pub fn new(length: f64, final_time: f64, delay: f64, dx: f64, dt: f64, drho: f64) -> Result<Self> {
        for (name, value) in [
            ("L", length),
            ("T", final_time),
            ("h", delay),
            ("dx", dx),
            ("dt", dt),
            ("drho", drho),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveParameter { name, value });
            }
        }
        let space_steps = (length / dx).round() as usize;
        if space_steps < 4 {
            return Err(Error::GridTooCoarse { space_steps });
        }
        let delay_steps = ((delay / drho).round() as usize).max(1);
        let time_steps = ((final_time / dt).round() as usize).max(1);
        Ok(Self {
            length,
            final_time,
            delay,
            dx: length / space_steps as f64,
            dt: final_time / time_steps as f64,
            drho: delay / delay_steps as f64,
            space_steps,
            delay_steps,
            time_steps,
        })
    }

    /// Number of interior unknowns `J - 2 + K` of the implicit step.
    pub fn unknowns(&self) -> usize {
        self.space_steps - 2 + self.delay_steps
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    /// Normalized delay coordinate `rho_i in [0, 1]`.
    pub fn rho(&self, i: usize) -> f64 {
        i as f64 / self.delay_steps as f64
    }

    pub fn rho_step(&self) -> f64 {
        1.0 / self.delay_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn with_delay(&self, delay: f64) -> Result<Self> {
        Self::new(self.length, self.final_time, delay, self.dx, self.dt, self.drho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackLaw {
    pub alpha: f64,
    pub beta: f64,
    pub delay: f64,
}

impl FeedbackLaw {
    pub fn new(alpha: f64, beta: f64, delay: f64) -> Result<Self> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(Error::NonPositiveParameter {
                name: "h",
                value: delay,
            });
        }
        Ok(Self { alpha, beta, delay })
    }

    /// Right-hand side of the Neumann reconstruction
    /// `y_{J-1} = -alpha y_1 - beta dx z_K`.
    pub fn reconstruct(&self, y1: f64, z_last: f64, dx: f64) -> f64 {
        -self.alpha * y1 - self.beta * dx * z_last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Set on initial data, which need not satisfy the Neumann
    /// reconstruction. Cleared by the first step.
    pub precompatible: bool,
}

impl State {
    pub fn zero(disc: &Discretization) -> Self {
        Self {
            t: 0.0,
            y: vec![0.0; disc.space_steps + 1],
            z: vec![0.0; disc.delay_steps + 1],
            precompatible: false,
        }
    }

    /// Samples `y0` on the spatial grid and `z0` on the normalized delay grid.
    pub fn sample<F, G>(disc: &Discretization, y0: F, z0: G) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        for x in [0.0, disc.length] {
            let value = y0(x);
            if !(value.abs() <= DIRICHLET_TOL) {
                return Err(Error::IncompatibleDirichletData { x, value });
            }
        }
        let y = (0..=disc.space_steps).map(|j| y0(disc.x(j))).collect();
        let z = (0..=disc.delay_steps).map(|i| z0(disc.rho(i))).collect();
        Self::initial(disc, y, z)
    }

    /// Initial data from grid values. Imposes `y_0 = y_J = 0` and
    /// `z_0 = y_1 / dx`; the Neumann reconstruction is left to the first step.
    pub fn initial(disc: &Discretization, mut y: Vec<f64>, mut z: Vec<f64>) -> Result<Self> {
        check_len("y", disc.space_steps + 1, y.len())?;
        check_len("z", disc.delay_steps + 1, z.len())?;
        let j_max = disc.space_steps;
        for j in [0, j_max] {
            if !(y[j].abs() <= DIRICHLET_TOL) {
                return Err(Error::IncompatibleDirichletData {
                    x: disc.x(j),
                    value: y[j],
                });
            }
        }
        y[0] = 0.0;
        y[j_max] = 0.0;
        z[0] = y[1] / disc.dx;
        Ok(Self {
            t: 0.0,
            y,
            z,
            precompatible: true,
        })
    }

    /// Builds a state from raw values and imposes all three boundary
    /// relations, overwriting `y_0`, `y_J`, `y_{J-1}` and `z_0`.
    pub fn compatible(disc: &Discretization, law: &FeedbackLaw, t: f64, mut y: Vec<f64>, mut z: Vec<f64>) -> Result<Self> {
        check_len("y", disc.space_steps + 1, y.len())?;
        check_len("z", disc.delay_steps + 1, z.len())?;
        let j_max = disc.space_steps;
        y[0] = 0.0;
        y[j_max] = 0.0;
        y[j_max - 1] = law.reconstruct(y[1], z[disc.delay_steps], disc.dx);
        z[0] = y[1] / disc.dx;
        Ok(Self {
            t,
            y,
            z,
            precompatible: false,
        })
    }

    pub fn conforms_to(&self, disc: &Discretization) -> Result<()> {
        check_len("y", disc.space_steps + 1, self.y.len())?;
        check_len("z", disc.delay_steps + 1, self.z.len())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t: self.t,
            y: self.y.iter().map(|v| v * factor).collect(),
            z: self.z.iter().map(|v| v * factor).collect(),
            precompatible: self.precompatible,
        }
    }

    /// Checks the Dirichlet zeros, the trace coupling and (unless
    /// `precompatible`) the Neumann reconstruction.
    pub fn check_invariants(&self, disc: &Discretization, law: &FeedbackLaw) -> std::result::Result<(), String> {
        self.conforms_to(disc).map_err(|e| e.to_string())?;
        let j_max = disc.space_steps;
        if self.y[0] != 0.0 || self.y[j_max] != 0.0 {
            return Err(format!("Dirichlet: y_0 = {}, y_J = {}", self.y[0], self.y[j_max]));
        }
        let trace = self.y[1] / disc.dx;
        if !close(self.z[0], trace) {
            return Err(format!("trace coupling: z_0 = {}, y_1/dx = {trace}", self.z[0]));
        }
        if !self.precompatible {
            let expected = law.reconstruct(self.y[1], self.z[disc.delay_steps], disc.dx);
            if !close(self.y[j_max - 1], expected) {
                return Err(format!(
                    "Neumann reconstruction: y_(J-1) = {}, expected {expected}",
                    self.y[j_max - 1]
                ));
            }
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= INVARIANT_RTOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}

/// `y0(x) = 1 - cos(2 pi x / L)`; on `L = 1` this is the reference profile.
pub fn reference_profile(length: f64) -> impl Fn(f64) -> f64 {
    move |x| 1.0 - (2.0 * std::f64::consts::PI * x / length).cos()
}

/// `z0(rho) = 0.1 sin(-2 pi rho h)`, sampled literally in `rho`.
pub fn reference_history(delay: f64) -> impl Fn(f64) -> f64 {
    move |rho| 0.1 * (-2.0 * std::f64::consts::PI * rho * delay).sin()
}
