//! Implicit Euler step for the coupled KdV / transport system.
//!
//! The unknowns are `u = (y_1 .. y_{J-2}, z_1 .. z_K)`. The y rows discretize
//! `y_xxx + y_x` by `D+ D+ D- + D`, and every reference to `y_{J-1}` is
//! replaced by `-alpha y_1 - beta dx z_K`, which produces the column-1
//! corner entries and the last-column coupling to the delay line. The z rows
//! are the upwind transport `h z_t + z_rho = 0` with inflow `z_0 = y_1 / dx`.

use std::collections::BTreeMap;

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::lattice::{Discretization, FeedbackLaw, State};

/// Any component of `y` above this magnitude is reported as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Row coefficients of `I + dt (D+ D+ D- + D)` on `y_{j-1}, y_j, y_{j+1}, y_{j+2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub a4: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Stencil {
    pub fn new(dt: f64, dx: f64) -> Self {
        let dispersive = dt / (dx * dx * dx);
        let advective = dt / (2.0 * dx);
        Self {
            a4: -dispersive - advective,
            a1: 1.0 + 3.0 * dispersive,
            a2: -3.0 * dispersive + advective,
            a3: dispersive,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemMatrix {
    disc: Discretization,
    law: FeedbackLaw,
    entries: BTreeMap<(usize, usize), f64>,
    solver: BorderedLu,
}

impl SystemMatrix {
    pub fn assemble(disc: &Discretization, law: &FeedbackLaw) -> Result<Self> {
        if law.delay != disc.delay {
            return Err(Error::Validation(vec![format!(
                "feedback delay {} differs from grid delay {}",
                law.delay, disc.delay
            )]));
        }
        let entries = assemble_entries(disc, law);
        let solver = BorderedLu::factor(disc, &entries)?;
        Ok(Self {
            disc: *disc,
            law: *law,
            entries,
            solver,
        })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn law(&self) -> &FeedbackLaw {
        &self.law
    }

    pub fn dim(&self) -> usize {
        self.disc.unknowns()
    }

    /// Entry of `A` (0-based), zero outside the stored pattern.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries.get(&(row, col)).copied().unwrap_or(0.0)
    }

    /// Stored `(row, col, value)` triplets in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut dense = vec![vec![0.0; n]; n];
        for (r, c, v) in self.entries() {
            dense[r][c] = v;
        }
        dense
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            rhs: vec![0.0; self.dim()],
        }
    }

    /// Solves `A x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        self.solver.solve_in_place(rhs);
    }

    pub fn step_linear(&self, s: &State) -> Result<State> {
        self.step_linear_with(s, &mut self.workspace())
    }

    pub fn step_nonlinear(&self, s: &State) -> Result<State> {
        self.step_nonlinear_with(s, &mut self.workspace())
    }

    pub fn step_linear_with(&self, s: &State, ws: &mut Workspace) -> Result<State> {
        s.conforms_to(&self.disc)?;
        self.load_rhs(s, ws);
        self.solve_in_place(&mut ws.rhs);
        Ok(self.unpack(s.t, &ws.rhs))
    }

    /// Semi-implicit step: `y y_x` is taken at the old level with the
    /// centered difference and moved to the right-hand side.
    pub fn step_nonlinear_with(&self, s: &State, ws: &mut Workspace) -> Result<State> {
        s.conforms_to(&self.disc)?;
        self.load_rhs(s, ws);
        let dx = self.disc.dx;
        let dt = self.disc.dt;
        for j in 1..=self.disc.space_steps - 2 {
            let centered = (s.y[j + 1] - s.y[j - 1]) / (2.0 * dx);
            ws.rhs[j - 1] -= dt * s.y[j] * centered;
        }
        self.solve_in_place(&mut ws.rhs);
        let next = self.unpack(s.t, &ws.rhs);
        let magnitude = next.y.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if magnitude > BLOWUP_THRESHOLD || !magnitude.is_finite() {
            return Err(Error::BlowUp { magnitude });
        }
        Ok(next)
    }

    fn load_rhs(&self, s: &State, ws: &mut Workspace) {
        let ny = self.disc.space_steps - 2;
        ws.rhs.resize(self.dim(), 0.0);
        ws.rhs[..ny].copy_from_slice(&s.y[1..=ny]);
        ws.rhs[ny..].copy_from_slice(&s.z[1..]);
    }

    fn unpack(&self, t: f64, u: &[f64]) -> State {
        let disc = &self.disc;
        let j_max = disc.space_steps;
        let ny = j_max - 2;
        let mut y = Vec::with_capacity(j_max + 1);
        y.push(0.0);
        y.extend_from_slice(&u[..ny]);
        let mut z = Vec::with_capacity(disc.delay_steps + 1);
        z.push(y[1] / disc.dx);
        z.extend_from_slice(&u[ny..]);
        y.push(self.law.reconstruct(y[1], z[disc.delay_steps], disc.dx));
        y.push(0.0);
        State {
            t: t + disc.dt,
            y,
            z,
            precompatible: false,
        }
    }
}

/// Caller-owned scratch for one solve.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    rhs: Vec<f64>,
}

/// Discrete `y_x(0, t)`: the one-sided difference `y_1 / dx`.
pub fn boundary_trace(s: &State, disc: &Discretization) -> f64 {
    s.y[1] / disc.dx
}

fn assemble_entries(disc: &Discretization, law: &FeedbackLaw) -> BTreeMap<(usize, usize), f64> {
    let j_max = disc.space_steps;
    let ny = j_max - 2;
    let k = disc.delay_steps;
    let z_last = ny + k - 1;
    let dx = disc.dx;
    let dt = disc.dt;
    let stencil = Stencil::new(dt, dx);

    let mut entries = BTreeMap::new();
    let mut add = |row: usize, col: usize, value: f64| {
        *entries.entry((row, col)).or_insert(0.0) += value;
    };

    for j in 1..=ny {
        let row = j - 1;
        let terms = [
            (j - 1, stencil.a4),
            (j, stencil.a1),
            (j + 1, stencil.a2),
            (j + 2, stencil.a3),
        ];
        for (m, coef) in terms {
            if m == 0 || m == j_max {
                continue;
            }
            if m == j_max - 1 {
                add(row, 0, -law.alpha * coef);
                add(row, z_last, -law.beta * dx * coef);
            } else {
                add(row, m - 1, coef);
            }
        }
    }

    // h z_t + z_rho = 0 on rho_i = i / K, upwind in rho.
    let courant = dt / (disc.delay * disc.rho_step());
    for i in 1..=k {
        let row = ny + i - 1;
        add(row, row, 1.0 + courant);
        if i == 1 {
            add(row, 0, -courant / dx);
        } else {
            add(row, row - 1, -courant);
        }
    }
    entries
}

/// Exact elimination of the lower-bidiagonal delay block, leaving a banded
/// y-system with a rank-one spike in its first column, which is handled by
/// Sherman-Morrison around the band LU.
#[derive(Debug, Clone)]
struct BorderedLu {
    ny: usize,
    band: BandLu,
    /// Coupling of the y rows to the last delay cell, as `(row, value)`.
    coupling: Vec<(usize, f64)>,
    /// Coupling of the delay rows to `y_1`, indexed by z row.
    inflow: Vec<f64>,
    diag: Vec<f64>,
    sub: Vec<f64>,
    spike_solution: Vec<f64>,
    spike_denominator: f64,
}

impl BorderedLu {
    fn factor(disc: &Discretization, entries: &BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let ny = disc.space_steps - 2;
        let k = disc.delay_steps;
        let last = ny + k - 1;
        let mut band = BandMatrix::zeros(ny, 1, 2);
        let mut spike = vec![0.0; ny];
        let mut coupling = Vec::new();
        let mut inflow = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sub = vec![0.0; k];
        for (&(r, c), &v) in entries {
            match (r < ny, c < ny) {
                (true, true) if band.in_band(r, c) => band.add(r, c, v),
                (true, true) => {
                    assert_eq!(c, 0, "y-block fill outside band must sit in column 0");
                    spike[r] += v;
                }
                (true, false) => {
                    assert_eq!(c, last, "delay coupling must sit in the last column");
                    coupling.push((r, v));
                }
                (false, true) => {
                    assert_eq!(c, 0, "inflow must sit in column 0");
                    inflow[r - ny] += v;
                }
                (false, false) if r == c => diag[r - ny] += v,
                (false, false) => {
                    assert_eq!(r, c + 1, "delay block must be lower bidiagonal");
                    sub[r - ny] += v;
                }
            }
        }
        for (i, &d) in diag.iter().enumerate() {
            if !(d != 0.0) || !d.is_finite() {
                return Err(Error::SingularMatrix { pivot: ny + i });
            }
        }

        // Response of z_K to y_1 through the delay line.
        let mut response = inflow.clone();
        forward_bidiagonal(&diag, &sub, &mut response);
        let gain = response[k - 1];
        for &(r, v) in &coupling {
            spike[r] -= gain * v;
        }

        let band = band.factor()?;
        let mut spike_solution = spike;
        band.solve_in_place(&mut spike_solution);
        let spike_denominator = 1.0 + spike_solution[0];
        if !(spike_denominator != 0.0) || !spike_denominator.is_finite() {
            return Err(Error::SingularMatrix { pivot: 0 });
        }
        Ok(Self {
            ny,
            band,
            coupling,
            inflow,
            diag,
            sub,
            spike_solution,
            spike_denominator,
        })
    }

    fn solve_in_place(&self, rhs: &mut [f64]) {
        let (y, z) = rhs.split_at_mut(self.ny);
        // z_K as if y_1 = 0; the y_1 feedback is folded into the spike.
        let mut free = z.to_vec();
        forward_bidiagonal(&self.diag, &self.sub, &mut free);
        let free_last = free[free.len() - 1];
        for &(r, v) in &self.coupling {
            y[r] -= v * free_last;
        }
        self.band.solve_in_place(y);
        let shift = y[0] / self.spike_denominator;
        if shift != 0.0 {
            for (yi, qi) in y.iter_mut().zip(&self.spike_solution) {
                *yi -= qi * shift;
            }
        }
        let y1 = y[0];
        for (zi, ci) in z.iter_mut().zip(&self.inflow) {
            *zi -= ci * y1;
        }
        forward_bidiagonal(&self.diag, &self.sub, z);
    }
}

fn forward_bidiagonal(diag: &[f64], sub: &[f64], x: &mut [f64]) {
    let mut prev = 0.0;
    for i in 0..x.len() {
        let v = (x[i] - sub[i] * prev) / diag[i];
        x[i] = v;
        prev = v;
    }
}
