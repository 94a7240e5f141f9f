//! Closed-form stability conditions for the delayed boundary feedback
//! `y_x(L, t) = alpha y_x(0, t) + beta y_x(0, t - h)`.
//!
//! Everything here is scalar arithmetic on `(alpha, beta, L, h, mu1, mu2, r)`.
//! All inequalities are strict; boundary cases report failure.

use std::f64::consts::PI;

use crate::analysis::LyapunovWeights;
use crate::error::{Error, Result};

pub const DEFAULT_CRITICAL_TOL: f64 = 1e-9;
pub const DEFAULT_K_MAX: u32 = 200;

/// Upper end of the length range `L < sqrt(3) pi` covered by the
/// Lyapunov certificate.
pub fn max_certified_length() -> f64 {
    3f64.sqrt() * PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    /// Boundary form of the energy identity.
    M,
    /// Boundary form of the adjoint system.
    MTilde,
    /// Boundary form of the Lyapunov functional.
    MMu,
}

/// Symmetric 2x2 matrix; the off-diagonal entry is stored once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
    pub kind: MatrixKind,
}

impl BoundaryMatrix {
    pub fn m21(&self) -> f64 {
        self.m12
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.m11, self.m12], [self.m12, self.m22]]
    }
}

pub fn is_admissible(alpha: f64, beta: f64) -> bool {
    alpha.abs() + beta.abs() < 1.0
}

/// Admissibility without delay (`beta = 0`): `|alpha| < 1`.
pub fn is_admissible_without_delay(alpha: f64) -> bool {
    alpha.abs() < 1.0
}

pub fn boundary_matrix_m(alpha: f64, beta: f64) -> BoundaryMatrix {
    let b = beta.abs();
    BoundaryMatrix {
        m11: alpha * alpha - 1.0 + b,
        m12: alpha * beta,
        m22: beta * beta - b,
        kind: MatrixKind::M,
    }
}

pub fn boundary_matrix_m_tilde(alpha: f64, beta: f64) -> BoundaryMatrix {
    let b = beta.abs();
    BoundaryMatrix {
        m11: alpha * alpha + b - 1.0,
        m12: alpha * b,
        m22: beta * beta - b,
        kind: MatrixKind::MTilde,
    }
}

/// `M + mu1 L [a^2, ab; ab, b^2] + mu2 [1, 0; 0, 0]`.
pub fn boundary_matrix_mmu(alpha: f64, beta: f64, length: f64, mu1: f64, mu2: f64) -> Result<BoundaryMatrix> {
    LyapunovWeights::new(mu1, mu2)?;
    if !(length > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "L",
            value: length,
        });
    }
    let b = beta.abs();
    let g = 1.0 + length * mu1;
    Ok(BoundaryMatrix {
        m11: g * alpha * alpha - 1.0 + b + mu2,
        m12: alpha * beta * g,
        m22: g * beta * beta - b,
        kind: MatrixKind::MMu,
    })
}

/// Exact 2x2 criterion: `trace < 0` and `det > 0`.
pub fn is_negative_definite(m: &BoundaryMatrix) -> bool {
    m.trace() < 0.0 && m.det() > 0.0
}

/// Sufficient bounds on `(mu1, mu2)` for a negative definite Lyapunov
/// boundary form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovBounds {
    pub alpha: f64,
    pub beta: f64,
    pub length: f64,
    pub mu2_max: f64,
}

impl LyapunovBounds {
    pub fn new(alpha: f64, beta: f64, length: f64) -> Result<Self> {
        if !is_admissible(alpha, beta) {
            return Err(Error::NotAdmissible {
                sum: alpha.abs() + beta.abs(),
            });
        }
        if beta == 0.0 {
            return Err(Error::BetaZero);
        }
        if !(length > 0.0) {
            return Err(Error::NonPositiveParameter {
                name: "L",
                value: length,
            });
        }
        let (a2, b) = (alpha * alpha, beta.abs());
        let b2 = beta * beta;
        let mu2_max = (1.0 - a2 - b2)
            .min(((b - 1.0).powi(2) - a2) / (1.0 - b))
            .min((a2 - b2 + b) / b);
        Ok(Self {
            alpha,
            beta,
            length,
            mu2_max,
        })
    }

    /// Bound on `mu1` for a given `mu2`; non-positive denominators give `+inf`.
    pub fn mu1_max(&self, mu2: f64) -> f64 {
        let (num1, den1, num2, den2) = self.mu1_terms(mu2);
        ratio_or_inf(num1, den1).min(ratio_or_inf(num2, den2))
    }

    /// True when either `mu1` denominator is non-positive at this `mu2`.
    pub fn degenerate_denominator(&self, mu2: f64) -> bool {
        let (_, den1, _, den2) = self.mu1_terms(mu2);
        !(den1 > 0.0 && den2 > 0.0)
    }

    fn mu1_terms(&self, mu2: f64) -> (f64, f64, f64, f64) {
        let (a2, b) = (self.alpha * self.alpha, self.beta.abs());
        let b2 = self.beta * self.beta;
        let l = self.length;
        (
            1.0 - mu2 - (a2 + b2),
            l * (a2 + b2),
            (b - 1.0).powi(2) - a2 - mu2 * (1.0 - b),
            l * (a2 - b2 + b * (1.0 - mu2)),
        )
    }

    /// Half of each bound: `mu2 = mu2_max / 2`, `mu1 = mu1_max(mu2) / 2`.
    pub fn halved(&self) -> Result<LyapunovWeights> {
        let mu2 = 0.5 * self.mu2_max.min(1.0);
        let mu1 = 0.5 * self.mu1_max(mu2);
        LyapunovWeights::new(mu1, mu2)
    }
}

fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

fn check_length(length: f64) -> Result<()> {
    if length > 0.0 && length < max_certified_length() {
        Ok(())
    } else {
        Err(Error::LengthOutOfRange { length })
    }
}

/// Largest initial norm `r` covered by the nonlinear certificate:
/// `3 (3 pi^2 - L^2) / (2 L^{3/2} pi^2)`.
pub fn smallness_radius(length: f64) -> Result<f64> {
    check_length(length)?;
    let pi2 = PI * PI;
    Ok(3.0 * (3.0 * pi2 - length * length) / (2.0 * length.powf(1.5) * pi2))
}

/// Supremum of the certified decay rate `gamma` in `E(t) <= kappa E(0) e^{-2 gamma t}`.
///
/// The nonlinear form carries the radius `r`; the linear form ignores it.
pub fn gamma_bound(length: f64, r: f64, mu1: f64, mu2: f64, beta: f64, delay: f64, nonlinear: bool) -> Result<f64> {
    check_length(length)?;
    LyapunovWeights::new(mu1, mu2)?;
    if !(delay > 0.0) {
        return Err(Error::NonPositiveParameter {
            name: "h",
            value: delay,
        });
    }
    let pi2 = PI * PI;
    let l2 = length * length;
    let spatial = if nonlinear {
        let r_max = smallness_radius(length)?;
        if !(r < r_max) {
            return Err(Error::RadiusTooLarge { r, max: r_max });
        }
        (9.0 * pi2 - 3.0 * l2 - 2.0 * length.powf(1.5) * r * pi2) * mu1 / (6.0 * l2 * (1.0 + length * mu1))
    } else {
        (3.0 * pi2 - l2) * mu1 / (2.0 * l2 * (1.0 + length * mu1))
    };
    let delayed = mu2 / (2.0 * (mu2 + beta.abs()) * delay);
    Ok(spatial.min(delayed))
}

/// `kappa = 1 + max{L mu1, mu2 / |beta|}`, the norm-equivalence constant between `E` and `V`.
pub fn equivalence_constant(length: f64, weights: LyapunovWeights, beta: f64) -> f64 {
    1.0 + (length * weights.mu1).max(weights.mu2 / beta.abs())
}

/// `2 pi sqrt((k^2 + k l + l^2) / 3)`.
pub fn critical_length(k: u32, l: u32) -> f64 {
    let (k, l) = (k as f64, l as f64);
    2.0 * PI * ((k * k + k * l + l * l) / 3.0).sqrt()
}

/// Witness `(k, l)` with `k <= l <= k_max` and `|L - critical_length(k, l)| <= tol`.
pub fn is_critical_length(length: f64, tol: f64, k_max: u32) -> Option<(u32, u32)> {
    for k in 1..=k_max {
        // smallest value for this k is at l = k: 2 pi k
        if critical_length(k, k) > length + tol {
            break;
        }
        for l in k..=k_max {
            let value = critical_length(k, l);
            if value > length + tol {
                break;
            }
            if (length - value).abs() <= tol {
                return Some((k, l));
            }
        }
    }
    None
}

/// All critical lengths not exceeding `max`, sorted, with one witness each.
pub fn critical_lengths_below(max: f64) -> Vec<(f64, u32, u32)> {
    let mut out = Vec::new();
    let mut k = 1u32;
    while critical_length(k, k) <= max {
        let mut l = k;
        while critical_length(k, l) <= max {
            out.push((critical_length(k, l), k, l));
            l += 1;
        }
        k += 1;
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-12 * a.0);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRequest {
    pub alpha: f64,
    pub beta: f64,
    pub length: f64,
    pub delay: f64,
    /// `None` takes half the admissible bounds.
    pub weights: Option<LyapunovWeights>,
    /// Norm of the initial data; `None` gives the linear certificate.
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub alpha: f64,
    pub beta: f64,
    pub length: f64,
    pub delay: f64,
    pub admissible: bool,
    pub admissible_without_delay: bool,
    pub m_negdef: bool,
    pub m_tilde_negdef: bool,
    pub mmu_negdef: Option<bool>,
    pub mu2_max: Option<f64>,
    pub mu1_max: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    /// A `mu1` bound denominator was non-positive and mapped to `+inf`.
    pub degenerate_mu1_bound: bool,
    pub r_max: Option<f64>,
    pub r: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub critical: Option<(u32, u32)>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn weights(&self) -> Option<LyapunovWeights> {
        match (self.mu1, self.mu2) {
            (Some(mu1), Some(mu2)) => LyapunovWeights::new(mu1, mu2).ok(),
            _ => None,
        }
    }

    /// Flat `(key, value)` view; absent values are `None`.
    pub fn entries(&self) -> Vec<(&'static str, Option<f64>)> {
        let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
        vec![
            ("alpha", Some(self.alpha)),
            ("beta", Some(self.beta)),
            ("L", Some(self.length)),
            ("h", Some(self.delay)),
            ("admissible", flag(self.admissible)),
            ("admissible_without_delay", flag(self.admissible_without_delay)),
            ("M_negdef", flag(self.m_negdef)),
            ("M_tilde_negdef", flag(self.m_tilde_negdef)),
            ("Mmu_negdef", self.mmu_negdef.and_then(flag)),
            ("mu2_max", self.mu2_max),
            ("mu1_max", self.mu1_max),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("degenerate_mu1_bound", flag(self.degenerate_mu1_bound)),
            ("r_max", self.r_max),
            ("r", self.r),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("critical", flag(self.critical.is_some())),
            ("critical_k", self.critical.map(|w| w.0 as f64)),
            ("critical_l", self.critical.map(|w| w.1 as f64)),
        ]
    }
}

/// Evaluates every closed-form condition that applies to the request.
pub fn certify(req: &CertificateRequest) -> CertificateReport {
    let CertificateRequest {
        alpha,
        beta,
        length,
        delay,
        ..
    } = *req;
    let mut notes = Vec::new();
    let admissible = is_admissible(alpha, beta);
    if !admissible {
        notes.push(format!("inadmissible: |alpha| + |beta| = {} >= 1", alpha.abs() + beta.abs()));
    }

    let bounds = match LyapunovBounds::new(alpha, beta, length) {
        Ok(b) => Some(b),
        Err(e) => {
            if admissible {
                notes.push(format!("no Lyapunov bounds: {e}"));
            }
            None
        }
    };
    let weights = match (req.weights, bounds) {
        (Some(w), _) => Some(w),
        (None, Some(b)) => match b.halved() {
            Ok(w) => Some(w),
            Err(e) => {
                notes.push(format!("automatic Lyapunov weights unavailable: {e}"));
                None
            }
        },
        (None, None) => None,
    };
    let mu1_max = match (bounds, weights) {
        (Some(b), Some(w)) => Some(b.mu1_max(w.mu2)),
        (Some(b), None) => Some(b.mu1_max(0.0)),
        _ => None,
    };
    let degenerate_mu1_bound = match (bounds, weights) {
        (Some(b), Some(w)) => b.degenerate_denominator(w.mu2),
        _ => false,
    };
    let mmu_negdef = weights
        .and_then(|w| boundary_matrix_mmu(alpha, beta, length, w.mu1, w.mu2).ok())
        .map(|m| is_negative_definite(&m));

    let r_max = smallness_radius(length).ok();
    if r_max.is_none() {
        notes.push(format!("L = {length} >= sqrt(3) pi: no explicit decay rate"));
    }
    let gamma = match (weights, r_max) {
        (Some(w), Some(_)) if admissible && beta != 0.0 => {
            let nonlinear = req.radius.is_some();
            match gamma_bound(length, req.radius.unwrap_or(0.0), w.mu1, w.mu2, beta, delay, nonlinear) {
                Ok(g) => Some(g),
                Err(e) => {
                    notes.push(format!("no decay rate: {e}"));
                    None
                }
            }
        }
        _ => None,
    };
    let kappa = weights
        .filter(|_| beta != 0.0)
        .map(|w| equivalence_constant(length, w, beta));

    CertificateReport {
        alpha,
        beta,
        length,
        delay,
        admissible,
        admissible_without_delay: is_admissible_without_delay(alpha),
        m_negdef: is_negative_definite(&boundary_matrix_m(alpha, beta)),
        m_tilde_negdef: is_negative_definite(&boundary_matrix_m_tilde(alpha, beta)),
        mmu_negdef,
        mu2_max: bounds.map(|b| b.mu2_max),
        mu1_max,
        mu1: weights.map(|w| w.mu1),
        mu2: weights.map(|w| w.mu2),
        degenerate_mu1_bound,
        r_max,
        r: req.radius,
        gamma,
        kappa,
        critical: is_critical_length(length, DEFAULT_CRITICAL_TOL, DEFAULT_K_MAX),
        notes,
    }
}
