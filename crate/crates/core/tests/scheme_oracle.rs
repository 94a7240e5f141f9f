//! Implicit step against an independent dense solve.
//!
//! The oracle writes the block matrix down entry by entry from the closed
//! forms (diagonal bands a1..a4, the two alpha corners, the beta column,
//! the inflow entry and the bidiagonal delay block) and solves it by dense
//! Gaussian elimination with partial pivoting.

use kdv_delay::analysis::energy;
use kdv_delay::lattice::{reference_history, reference_profile, Discretization, FeedbackLaw, State};
use kdv_delay::scheme::{boundary_trace, SystemMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle_matrix(disc: &Discretization, law: &FeedbackLaw) -> Vec<Vec<f64>> {
    let (dt, dx) = (disc.dt, disc.dx);
    let ny = disc.space_steps - 2;
    let k = disc.delay_steps;
    let n = ny + k;
    let (alpha, beta, h) = (law.alpha, law.beta, law.delay);
    let drho = 1.0 / k as f64;
    let c3 = dt / dx.powi(3);
    let c1 = dt / (2.0 * dx);
    let (a1, a2, a3, a4) = (1.0 + 3.0 * c3, -3.0 * c3 + c1, c3, -c3 - c1);

    let mut a = vec![vec![0.0; n]; n];
    for i in 0..ny {
        a[i][i] = a1;
        if i + 1 < ny {
            a[i][i + 1] = a2;
        }
        if i + 2 < ny {
            a[i][i + 2] = a3;
        }
        if i >= 1 {
            a[i][i - 1] = a4;
        }
    }
    a[ny - 2][0] += -alpha * dt / dx.powi(3);
    a[ny - 1][0] += 3.0 * alpha * dt / dx.powi(3) - alpha * dt / (2.0 * dx);
    a[ny - 2][n - 1] = -beta * dt / (dx * dx);
    a[ny - 1][n - 1] = 3.0 * beta * dt / (dx * dx) - beta * dt / 2.0;
    a[ny][0] = -dt / (h * dx * drho);
    for i in 0..k {
        a[ny + i][ny + i] = 1.0 + dt / (h * drho);
        if i >= 1 {
            a[ny + i][ny + i - 1] = -dt / (h * drho);
        }
    }
    a
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn oracle_step(disc: &Discretization, law: &FeedbackLaw, s: &State, nonlinear: bool) -> State {
    let j_max = disc.space_steps;
    let ny = j_max - 2;
    let mut rhs: Vec<f64> = s.y[1..=ny].iter().chain(&s.z[1..]).copied().collect();
    if nonlinear {
        for j in 1..=ny {
            rhs[j - 1] -= disc.dt * s.y[j] * (s.y[j + 1] - s.y[j - 1]) / (2.0 * disc.dx);
        }
    }
    let u = gauss_solve(oracle_matrix(disc, law), rhs);
    let mut y = vec![0.0; j_max + 1];
    y[1..=ny].copy_from_slice(&u[..ny]);
    let mut z = vec![0.0; disc.delay_steps + 1];
    z[1..].copy_from_slice(&u[ny..]);
    z[0] = y[1] / disc.dx;
    y[j_max - 1] = -law.alpha * y[1] - law.beta * disc.dx * z[disc.delay_steps];
    State {
        t: s.t + disc.dt,
        y,
        z,
        precompatible: false,
    }
}

fn random_state(rng: &mut ChaCha8Rng, disc: &Discretization, law: &FeedbackLaw, amplitude: f64) -> State {
    let y = (0..=disc.space_steps).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    let z = (0..=disc.delay_steps).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect();
    State::compatible(disc, law, 0.0, y, z).unwrap()
}

fn relative_gap(a: &State, b: &State) -> f64 {
    let diff = a.y.iter().zip(&b.y).chain(a.z.iter().zip(&b.z)).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    let scale = b.y.iter().chain(&b.z).map(|v| v.abs()).fold(0.0, f64::max);
    diff / scale
}

fn small_grid(j: usize, k: usize, delay: f64) -> Discretization {
    let dx = 0.05;
    Discretization::new(j as f64 * dx, 1.0, delay, dx, 0.001, delay / k as f64).unwrap()
}

#[test]
fn assembled_matrix_matches_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for &(j, k, h) in &[(6, 2, 1.0), (8, 4, 1.0), (10, 4, 1.0), (12, 3, 0.5), (9, 5, 2.0)] {
        let d = small_grid(j, k, h);
        let law = FeedbackLaw::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.4..0.4), h).unwrap();
        let a = SystemMatrix::assemble(&d, &law).unwrap().to_dense();
        let expected = oracle_matrix(&d, &law);
        for (r, (row, erow)) in a.iter().zip(&expected).enumerate() {
            for (c, (v, e)) in row.iter().zip(erow).enumerate() {
                assert!((v - e).abs() <= 1e-12 * e.abs().max(1.0), "J={j} K={k} ({r},{c}): {v} vs {e}");
            }
        }
    }
}

#[test]
fn linear_step_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for j in [6, 8, 10] {
        for k in [2, 4] {
            let d = small_grid(j, k, 1.0);
            let law = FeedbackLaw::new(0.5, 0.2, 1.0).unwrap();
            let a = SystemMatrix::assemble(&d, &law).unwrap();
            for _ in 0..100 {
                let s = random_state(&mut rng, &d, &law, 1.0);
                let gap = relative_gap(&a.step_linear(&s).unwrap(), &oracle_step(&d, &law, &s, false));
                assert!(gap <= 1e-12, "J={j} K={k}: {gap:e}");
            }
        }
    }
}

#[test]
fn nonlinear_step_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = small_grid(8, 4, 1.0);
    let law = FeedbackLaw::new(-0.3, 0.6, 1.0).unwrap();
    let a = SystemMatrix::assemble(&d, &law).unwrap();
    for _ in 0..100 {
        let s = random_state(&mut rng, &d, &law, 0.1);
        let next = a.step_nonlinear(&s).unwrap();
        let gap = relative_gap(&next, &oracle_step(&d, &law, &s, true));
        assert!(gap <= 1e-12, "{gap:e}");
        next.check_invariants(&d, &law).unwrap();
    }
}

#[test]
fn oracle_at_other_delays() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for h in [0.5, 2.0] {
        let d = small_grid(10, 4, h);
        let law = FeedbackLaw::new(0.1, -0.5, h).unwrap();
        let a = SystemMatrix::assemble(&d, &law).unwrap();
        for _ in 0..20 {
            let s = random_state(&mut rng, &d, &law, 1.0);
            assert!(relative_gap(&a.step_linear(&s).unwrap(), &oracle_step(&d, &law, &s, false)) <= 1e-12);
        }
    }
}

#[test]
fn factor_once_is_bit_identical() {
    let d = Discretization::new(1.0, 1.0, 1.0, 0.01, 0.001, 0.001).unwrap();
    let law = FeedbackLaw::new(0.5, 0.2, 1.0).unwrap();
    let s0 = State::sample(&d, reference_profile(1.0), reference_history(1.0)).unwrap();
    let shared = SystemMatrix::assemble(&d, &law).unwrap();
    let a = shared.step_nonlinear(&shared.step_linear(&s0).unwrap()).unwrap();
    let first = SystemMatrix::assemble(&d, &law).unwrap().step_linear(&s0).unwrap();
    let b = SystemMatrix::assemble(&d, &law).unwrap().step_nonlinear(&first).unwrap();
    assert_eq!(a, b);
    let bits = |s: &State| s.y.iter().chain(&s.z).map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn nonlinear_gap_vanishes_linearly_with_amplitude() {
    let d = Discretization::new(1.0, 1.0, 1.0, 0.01, 0.001, 0.001).unwrap();
    let law = FeedbackLaw::new(0.5, 0.2, 1.0).unwrap();
    let a = SystemMatrix::assemble(&d, &law).unwrap();
    let base = State::sample(&d, reference_profile(1.0), reference_history(1.0)).unwrap();
    let mut prev = None;
    for eps in [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3] {
        let s = base.scaled(eps);
        let gap = relative_gap(&a.step_nonlinear(&s).unwrap(), &a.step_linear(&s).unwrap());
        if let Some(p) = prev {
            assert!(gap <= 0.5 * p * (1.0 + 1e-6), "eps={eps}: {gap:e} vs {p:e}");
        }
        prev = Some(gap);
    }
}

#[test]
fn trace_matches_delay_inflow_along_run() {
    let d = Discretization::new(1.0, 1.0, 1.0, 0.01, 0.001, 0.001).unwrap();
    let law = FeedbackLaw::new(0.5, 0.2, 1.0).unwrap();
    let a = SystemMatrix::assemble(&d, &law).unwrap();
    let mut s = State::sample(&d, reference_profile(1.0), reference_history(1.0)).unwrap();
    let mut e_prev = energy(&s, &d, &law);
    for _ in 0..50 {
        s = a.step_linear(&s).unwrap();
        s.check_invariants(&d, &law).unwrap();
        assert_eq!(boundary_trace(&s, &d), s.z[0]);
        let e = energy(&s, &d, &law);
        assert!(e <= e_prev * (1.0 + 1e-10));
        e_prev = e;
    }
}
