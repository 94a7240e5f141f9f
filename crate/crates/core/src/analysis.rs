//! Discrete energy, Lyapunov functional and log-linear decay fits.
//!
//! Quadratures: trapezoid in `x` (endpoints vanish anyway), right-endpoint
//! rectangles in `rho` over `z_1 ..= z_K`, matching the upwind delay grid.

use crate::error::{Error, Result};
use crate::lattice::{Discretization, FeedbackLaw, State};
use crate::scheme::boundary_trace;

pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub lyapunov: Option<f64>,
    /// Discrete `y_x(0, t)`.
    pub trace: f64,
}

impl EnergySample {
    pub fn record(s: &State, disc: &Discretization, law: &FeedbackLaw, weights: Option<LyapunovWeights>) -> Self {
        Self {
            t: s.t,
            energy: energy(s, disc, law),
            lyapunov: weights.map(|w| lyapunov_unchecked(s, disc, law, w)),
            trace: boundary_trace(s, disc),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovWeights {
    pub mu1: f64,
    pub mu2: f64,
}

impl LyapunovWeights {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if mu1 > 0.0 && mu1.is_finite() && mu2 > 0.0 && mu2 < 1.0 {
            Ok(Self { mu1, mu2 })
        } else {
            Err(Error::InvalidLyapunovParams { mu1, mu2 })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Fitted rate: `E(t) ~ kappa e^{-nu t}`.
    pub nu: f64,
    pub kappa: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// Energy reached zero inside the window; only the prefix was fitted.
    pub truncated: bool,
}

/// `int_0^L y^2 dx + |beta| h int_0^1 z^2 drho`.
pub fn energy(s: &State, disc: &Discretization, law: &FeedbackLaw) -> f64 {
    let spatial = trapezoid(&s.y, disc.dx, |_| 1.0);
    let delay_line: f64 = s.z[1..].iter().map(|z| z * z).sum::<f64>() * disc.rho_step();
    spatial + law.beta.abs() * law.delay * delay_line
}

/// `E + mu1 int_0^L x y^2 dx + mu2 h int_0^1 (1 - rho) z^2 drho`.
pub fn lyapunov(s: &State, disc: &Discretization, law: &FeedbackLaw, mu1: f64, mu2: f64) -> Result<f64> {
    let weights = LyapunovWeights::new(mu1, mu2)?;
    Ok(lyapunov_unchecked(s, disc, law, weights))
}

fn lyapunov_unchecked(s: &State, disc: &Discretization, law: &FeedbackLaw, w: LyapunovWeights) -> f64 {
    let moment = trapezoid(&s.y, disc.dx, |j| disc.x(j));
    let tail: f64 = s.z[1..]
        .iter()
        .enumerate()
        .map(|(i, z)| (1.0 - disc.rho(i + 1)) * z * z)
        .sum::<f64>()
        * disc.rho_step();
    energy(s, disc, law) + w.mu1 * moment + w.mu2 * law.delay * tail
}

fn trapezoid(y: &[f64], dx: f64, weight: impl Fn(usize) -> f64) -> f64 {
    let last = y.len() - 1;
    let sum: f64 = y
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let end = if j == 0 || j == last { 0.5 } else { 1.0 };
            end * weight(j) * v * v
        })
        .sum();
    sum * dx
}

/// Least-squares line through `(t, ln E)` over samples with `t` in `window`.
pub fn fit_decay_rate(series: &[EnergySample], window: (f64, f64)) -> Result<DecayFit> {
    let (lo, hi) = window;
    let slack = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    let mut points = Vec::new();
    let mut truncated_at = None;
    for s in series.iter().filter(|s| s.t >= lo - slack && s.t <= hi + slack) {
        if !(s.energy > 0.0) || !s.energy.is_finite() {
            truncated_at = Some(s.t);
            break;
        }
        points.push((s.t, s.energy.ln()));
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(match truncated_at {
            Some(t) => Error::NonPositiveEnergy { t },
            None => Error::InsufficientSamples {
                found: points.len(),
                required: MIN_FIT_SAMPLES,
            },
        });
    }

    let n = points.len() as f64;
    let first = points[0].1;
    let (slope, intercept, r2) = if points.iter().all(|p| p.1 == first) {
        (0.0, first, 1.0)
    } else {
        let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
        let l_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
        let (mut stt, mut stl, mut sll) = (0.0, 0.0, 0.0);
        for &(t, l) in &points {
            let (dt, dl) = (t - t_mean, l - l_mean);
            stt += dt * dt;
            stl += dt * dl;
            sll += dl * dl;
        }
        let slope = if stt > 0.0 { stl / stt } else { 0.0 };
        let intercept = l_mean - slope * t_mean;
        let residual: f64 = points
            .iter()
            .map(|&(t, l)| {
                let e = l - (intercept + slope * t);
                e * e
            })
            .sum();
        let r2 = if sll > 0.0 { (1.0 - residual / sll).clamp(0.0, 1.0) } else { 1.0 };
        (slope, intercept, r2)
    };
    Ok(DecayFit {
        nu: -slope,
        kappa: intercept.exp(),
        r2,
        window,
        samples: points.len(),
        truncated: truncated_at.is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::reference_profile;
    use std::f64::consts::PI;

    fn grid(dx: f64, drho: f64) -> Discretization {
        Discretization::new(1.0, 1.0, 1.0, dx, 0.001, drho).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let d = grid(0.01, 0.001);
        let law = FeedbackLaw::new(0.5, 0.2, 1.0).unwrap();
        let s = State::zero(&d);
        assert_eq!(energy(&s, &d, &law), 0.0);
        assert_eq!(lyapunov(&s, &d, &law, 0.1, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn spatial_energy_of_reference_profile() {
        // int_0^1 (1 - cos 2 pi x)^2 dx = 3/2
        let d = grid(0.01, 0.001);
        let law = FeedbackLaw::new(0.5, 0.7, 1.0).unwrap();
        let s = State::sample(&d, reference_profile(1.0), |_| 0.0).unwrap();
        let mut s = s;
        s.z.iter_mut().for_each(|z| *z = 0.0);
        assert!((energy(&s, &d, &law) - 1.5).abs() < 1e-3);
    }

    #[test]
    fn delay_energy_of_sine_history() {
        // int_0^1 (0.1 sin 2 pi rho)^2 = 0.005
        let d = grid(0.01, 0.001);
        let law = FeedbackLaw::new(0.0, 0.3, 1.0).unwrap();
        let mut s = State::zero(&d);
        for i in 1..=d.delay_steps {
            s.z[i] = 0.1 * (2.0 * PI * d.rho(i)).sin();
        }
        assert!((energy(&s, &d, &law) - 1.5e-3).abs() < 1e-5);
    }

    #[test]
    fn constant_history_lyapunov_excess() {
        let d = grid(0.01, 0.001);
        let law = FeedbackLaw::new(0.0, 0.3, 1.0).unwrap();
        let (mu2, c) = (0.4, 2.0);
        let mut s = State::zero(&d);
        s.z[1..].iter_mut().for_each(|z| *z = c);
        let excess = lyapunov(&s, &d, &law, 0.5, mu2).unwrap() - energy(&s, &d, &law);
        let k = d.delay_steps as f64;
        let exact_sum: f64 = (1..=d.delay_steps).map(|i| 1.0 - i as f64 / k).sum();
        assert!((excess - mu2 * c * c * exact_sum / k).abs() < 1e-12);
        assert!((excess - mu2 * c * c / 2.0).abs() < 1e-3);
    }

    #[test]
    fn invalid_weights_rejected() {
        let d = grid(0.01, 0.001);
        let law = FeedbackLaw::new(0.0, 0.3, 1.0).unwrap();
        let s = State::zero(&d);
        for (mu1, mu2) in [(0.0, 0.5), (0.1, 1.0), (0.1, 0.0), (-1.0, 0.5)] {
            assert!(matches!(
                lyapunov(&s, &d, &law, mu1, mu2),
                Err(Error::InvalidLyapunovParams { .. })
            ));
        }
    }

    #[test]
    fn refinement_orders() {
        // Smooth data: halving dx moves the trapezoid energy by O(dx^2),
        // halving drho moves the rectangle energy by O(drho).
        let law = FeedbackLaw::new(0.0, 1.0, 1.0).unwrap();
        let sample = |dx: f64, drho: f64| {
            let d = grid(dx, drho);
            let s = State::sample(&d, |x| (PI * x).sin().powi(2), |rho| 1.0 + rho).unwrap();
            let spatial = {
                let mut only_y = s.clone();
                only_y.z.iter_mut().for_each(|z| *z = 0.0);
                energy(&only_y, &d, &law)
            };
            (spatial, energy(&s, &d, &law) - spatial)
        };
        let exact_spatial = 0.375;
        let exact_delay = 7.0 / 3.0;
        let (s1, d1) = sample(0.1, 0.01);
        let (s2, d2) = sample(0.05, 0.005);
        let spatial_ratio = (s1 - exact_spatial).abs() / (s2 - exact_spatial).abs().max(1e-300);
        let delay_ratio = (d1 - exact_delay).abs() / (d2 - exact_delay).abs();
        // trapezoid on a periodic-like integrand can be exact; only bound from above
        assert!((s2 - exact_spatial).abs() <= (s1 - exact_spatial).abs() + 1e-15);
        assert!(spatial_ratio >= 3.9 || (s1 - exact_spatial).abs() < 1e-12);
        assert!((delay_ratio - 2.0).abs() < 0.05, "{delay_ratio}");
    }

    fn synthetic(f: impl Fn(f64) -> f64, n: usize) -> Vec<EnergySample> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                EnergySample {
                    t,
                    energy: f(t),
                    lyapunov: None,
                    trace: 0.0,
                }
            })
            .collect()
    }

    #[test]
    fn exact_exponential_recovered() {
        let fit = fit_decay_rate(&synthetic(|t| 2.0 * (-3.0 * t).exp(), 100), (0.0, 1.0)).unwrap();
        assert!((fit.nu - 3.0).abs() < 1e-10);
        assert!((fit.kappa - 2.0).abs() < 1e-10);
        assert!((fit.r2 - 1.0).abs() < 1e-10);
        assert!(!fit.truncated);
    }

    #[test]
    fn constant_series_has_no_decay() {
        let fit = fit_decay_rate(&synthetic(|_| 5.0, 100), (0.0, 1.0)).unwrap();
        assert_eq!(fit.nu, 0.0);
        assert_eq!(fit.r2, 1.0);
        assert!((fit.kappa - 5.0).abs() < 1e-12);
    }

    #[test]
    fn window_restricts_samples() {
        let series = synthetic(|t| if t < 0.5 { 1.0 } else { (-2.0 * t).exp() }, 101);
        let fit = fit_decay_rate(&series, (0.5, 1.0)).unwrap();
        assert_eq!(fit.samples, 51);
        assert!((fit.nu - 2.0).abs() < 1e-10);
    }

    #[test]
    fn too_few_samples() {
        let err = fit_decay_rate(&synthetic(|_| 1.0, 5), (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { found: 5, .. }));
    }

    #[test]
    fn zero_energy_truncates() {
        let series = synthetic(|t| if t < 0.5 { (-t).exp() } else { 0.0 }, 101);
        let fit = fit_decay_rate(&series, (0.0, 1.0)).unwrap();
        assert!(fit.truncated);
        assert_eq!(fit.samples, 50);
        assert!((fit.nu - 1.0).abs() < 1e-10);

        let err = fit_decay_rate(&synthetic(|_| 0.0, 50), (0.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NonPositiveEnergy { t } if t == 0.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn state_from(values: &[f64], d: &Discretization) -> State {
            let mut s = State::zero(d);
            for (j, v) in s.y[1..d.space_steps].iter_mut().zip(values) {
                *j = *v;
            }
            for (z, v) in s.z.iter_mut().zip(values.iter().rev()) {
                *z = *v;
            }
            s
        }

        proptest! {
            #[test]
            fn quadratic_in_state(values in prop::collection::vec(-3.0f64..3.0, 20), scale in -4.0f64..4.0) {
                let d = Discretization::new(1.0, 1.0, 1.0, 0.05, 0.01, 0.05).unwrap();
                let law = FeedbackLaw::new(0.3, -0.4, 1.0).unwrap();
                let s = state_from(&values, &d);
                let e = energy(&s, &d, &law);
                let v = lyapunov(&s, &d, &law, 0.3, 0.2).unwrap();
                let scaled = s.scaled(scale);
                prop_assert!((energy(&scaled, &d, &law) - scale * scale * e).abs() <= 1e-12 * scale * scale * e + 1e-300);
                prop_assert!((lyapunov(&scaled, &d, &law, 0.3, 0.2).unwrap() - scale * scale * v).abs() <= 1e-12 * scale * scale * v + 1e-300);
            }

            #[test]
            fn energy_lyapunov_bracket(
                values in prop::collection::vec(-3.0f64..3.0, 20),
                mu1 in 0.01f64..2.0,
                mu2 in 0.01f64..0.99,
                beta in prop_oneof![-0.9f64..-0.05, 0.05f64..0.9],
            ) {
                let d = Discretization::new(1.0, 1.0, 1.0, 0.05, 0.01, 0.05).unwrap();
                let law = FeedbackLaw::new(0.1, beta, 1.0).unwrap();
                let s = state_from(&values, &d);
                let e = energy(&s, &d, &law);
                let v = lyapunov(&s, &d, &law, mu1, mu2).unwrap();
                let bound = 1.0 + (d.length * mu1).max(mu2 / beta.abs());
                prop_assert!(e >= 0.0);
                prop_assert!(e <= v * (1.0 + 1e-14));
                prop_assert!(v <= bound * e * (1.0 + 1e-14));
            }

            #[test]
            fn fit_scale_invariant(nu in 0.0f64..5.0, c in 0.1f64..10.0, scale in 0.01f64..100.0) {
                let a = synthetic(|t| c * (-nu * t).exp() * (1.0 + 0.01 * (7.0 * t).sin()), 50);
                let b: Vec<_> = a.iter().map(|s| EnergySample { energy: s.energy * scale, ..*s }).collect();
                let fa = fit_decay_rate(&a, (0.0, 1.0)).unwrap();
                let fb = fit_decay_rate(&b, (0.0, 1.0)).unwrap();
                prop_assert!((fa.nu - fb.nu).abs() < 1e-9);
                prop_assert!((fb.kappa / fa.kappa - scale).abs() < 1e-9 * scale);
            }
        }
    }
}
