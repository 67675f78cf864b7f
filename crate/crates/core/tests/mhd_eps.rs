use std::f64::consts::PI;

use machlim::mhd_eps::{
    cfl_dt, constraint_residual_field, make_initial_data, rhs_full, step_imex, EpsState, InitMode,
    InitialDataSpec, PhysParams, Scheme, Stepper, CFL_FLOOR,
};
use machlim::norms::data_norm;
use machlim::{Grid, ScalarField, VectorField};

fn params(eps: f64) -> PhysParams {
    PhysParams::new(eps, 0.1, 0.0, 0.1, 0.1, 1.0).unwrap()
}

fn close(a: &ScalarField, b: &ScalarField) -> f64 {
    (a - b).max_abs() / b.max_abs().max(1.0)
}

#[test]
fn equilibrium_is_an_exact_fixed_point() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let p = params(0.1);
    let s = EpsState::equilibrium(g, p.theta_bar);
    let t = rhs_full(&s, &p).unwrap();
    assert_eq!(t.dp.max_abs(), 0.0);
    assert_eq!(t.du.max_magnitude(), 0.0);
    assert_eq!(t.dh.max_magnitude(), 0.0);
    assert_eq!(t.dtheta.max_abs(), 0.0);
    let next = step_imex(&s, 0.01, &p).unwrap();
    assert!((&next.theta - &s.theta).max_abs() <= 1e-14);
    assert!(next.p.max_abs() <= 1e-14 && next.u.max_magnitude() <= 1e-14 && next.h.max_magnitude() <= 1e-14);
}

#[test]
fn heat_conduction_state_matches_closed_form() {
    let l = 2.0 * PI;
    let g = Grid::new(32, l).unwrap();
    let p = params(0.1);
    let (a, k) = (0.01, 2.0 * PI / l);
    let mut s = EpsState::equilibrium(g, p.theta_bar);
    s.theta = ScalarField::from_fn(g, |x, _, _| p.theta_bar + a * (k * x).sin());
    let t = rhs_full(&s, &p).unwrap();
    // div(e^θ ∇θ) = e^θ (θ'' + θ'^2)
    let q = ScalarField::from_fn(g, |x, _, _| {
        let th = p.theta_bar + a * (k * x).sin();
        th.exp() * (-a * k * k * (k * x).sin() + (a * k * (k * x).cos()).powi(2))
    });
    assert!(close(&t.dp, &(&q * (p.kappa / p.eps))) <= 1e-10);
    assert!(close(&t.dtheta, &(&q * p.kappa)) <= 1e-10);
    assert!(t.du.max_magnitude() <= 1e-10);
    assert!(t.dh.max_magnitude() <= 1e-10);
}

#[test]
fn shear_field_state_matches_closed_form() {
    let l = 2.0 * PI;
    let g = Grid::new(32, l).unwrap();
    let p = params(0.1);
    let k = 2.0 * PI / l;
    let mut s = EpsState::equilibrium(g, p.theta_bar);
    s.h = VectorField::from_fn(g, |_, _, z| [(k * z).sin(), 0.0, 0.0]);
    let t = rhs_full(&s, &p).unwrap();
    let e = p.theta_bar.exp();
    // curl H = (0, k cos kz, 0), (curl H) × H = (0, 0, -k sin kz cos kz)
    let lorentz = ScalarField::from_fn(g, |_, _, z| -e * k * (k * z).sin() * (k * z).cos());
    let heat = ScalarField::from_fn(g, |_, _, z| p.nu * (k * (k * z).cos()).powi(2));
    let diffusion = ScalarField::from_fn(g, |_, _, z| -p.nu * k * k * (k * z).sin());
    assert!(close(&t.du.components()[2], &lorentz) <= 1e-10);
    assert!(t.du.components()[0].max_abs() <= 1e-10 && t.du.components()[1].max_abs() <= 1e-10);
    assert!(close(&t.dh.components()[0], &diffusion) <= 1e-10);
    assert!(close(&t.dp, &(&heat * p.eps)) <= 1e-10);
    assert!(close(&t.dtheta, &(&heat * (p.eps * p.eps))) <= 1e-10);
}

/// Projects onto a single Fourier profile.
fn coefficient(f: &ScalarField, profile: &ScalarField) -> f64 {
    f.inner(profile) / profile.inner(profile)
}

/// Linear acoustic mode: amplitudes of p = P cos kx, u_x = U sin kx,
/// θ − θ̄ = D cos kx, integrated with fine RK4.
fn linear_mode_oracle(p: &PhysParams, k: f64, init: [f64; 3], t_end: f64) -> [f64; 3] {
    let c = p.theta_bar.exp();
    let rhs = |y: [f64; 3]| {
        [
            -(2.0 / p.eps) * k * y[1] - (p.kappa / p.eps) * c * k * k * y[2],
            (c / p.eps) * k * y[0] - (2.0 * p.mu + p.lambda) * k * k * c * y[1],
            -k * y[1] - p.kappa * c * k * k * y[2],
        ]
    };
    let steps = 200_000;
    let h = t_end / steps as f64;
    let mut y = init;
    let add = |y: [f64; 3], d: [f64; 3], s: f64| [y[0] + s * d[0], y[1] + s * d[1], y[2] + s * d[2]];
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, 0.5 * h));
        let k3 = rhs(add(y, k2, 0.5 * h));
        let k4 = rhs(add(y, k3, h));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

#[test]
fn acoustic_mode_converges_at_first_order() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let p = params(0.1);
    let (k, amp) = (1.0, 1e-6);
    let omega = (2.0 * p.theta_bar.exp()).sqrt() * k / p.eps;
    let period = 2.0 * PI / omega;
    let cos = ScalarField::from_fn(g, |x, _, _| (k * x).cos());
    let sin = ScalarField::from_fn(g, |x, _, _| (k * x).sin());
    let exact = linear_mode_oracle(&p, k, [amp, 0.0, 0.0], period);
    let error = |steps: usize| {
        let mut s = EpsState::equilibrium(g, p.theta_bar);
        s.p = &cos * amp;
        let dt = period / steps as f64;
        for _ in 0..steps {
            s = step_imex(&s, dt, &p).unwrap();
        }
        let got = [
            coefficient(&s.p, &cos),
            coefficient(&s.u.components()[0], &sin),
            coefficient(&(&s.theta - &ScalarField::constant(g, p.theta_bar)), &cos),
        ];
        let d: f64 = got.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum();
        d.sqrt() / amp
    };
    let (e1, e2) = (error(200), error(400));
    assert!(e1 < 0.2, "error {e1}");
    let ratio = e1 / e2;
    assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn second_order_scheme_beats_first_order() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let p = params(0.1);
    let spec = InitialDataSpec::new(InitMode::WellPrepared, 1.0, 2.0, PI / 2.0);
    let init = make_initial_data(g, &spec, &p, 5).unwrap();
    let run = |scheme: Scheme, steps: usize| {
        let mut st = Stepper::new(p, scheme);
        let mut s = init.clone();
        let dt = 0.2 / steps as f64;
        for _ in 0..steps {
            s = st.step(&s, dt).unwrap();
        }
        s
    };
    let reference = run(Scheme::ImexBdf2, 400);
    let err = |s: EpsState| (&s.u - &reference.u).l2_norm() + (&s.p - &reference.p).l2_norm();
    let e1 = err(run(Scheme::Imex1, 20));
    let e2 = err(run(Scheme::ImexBdf2, 20));
    assert!(e2 < 0.5 * e1, "bdf2 {e2:e} vs imex1 {e1:e}");
}

#[test]
fn cfl_on_quiet_state_uses_floor() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let s = EpsState::equilibrium(g, 1.0);
    assert_eq!(cfl_dt(&s, 0.4), 0.4 * g.dx() / CFL_FLOOR);
}

#[test]
fn well_prepared_data_nearly_satisfy_the_constraint() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    for eps in [0.1, 0.05] {
        let p = params(eps);
        let spec = InitialDataSpec::new(InitMode::WellPrepared, 1.0, 2.0, PI / 2.0);
        let s = make_initial_data(g, &spec, &p, 3).unwrap();
        let r = constraint_residual_field(&s, &p).l2_norm();
        assert!(r <= 2.0 * eps * spec.l0, "eps {eps}: residual {r}");
    }
}

#[test]
fn ill_prepared_data_are_rescaled_into_range() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let p = params(0.1);
    let spec = InitialDataSpec::new(InitMode::IllPrepared, 1.0, 2.0, PI / 2.0);
    let s = make_initial_data(g, &spec, &p, 3).unwrap();
    let n = data_norm(&s, &p, spec.norm_s);
    assert!((0.5..=1.0).contains(&n), "norm {n}");
    assert!(s.div_h_residual() <= 1e-12);
}

#[test]
fn same_seed_gives_identical_data() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let p = params(0.2);
    let spec = InitialDataSpec::new(InitMode::IllPrepared, 1.0, 2.0, PI / 2.0);
    let a = make_initial_data(g, &spec, &p, 42).unwrap();
    let b = make_initial_data(g, &spec, &p, 42).unwrap();
    assert_eq!(a, b);
    let c = make_initial_data(g, &spec, &p, 43).unwrap();
    assert_ne!(a, c);
}

#[test]
fn short_run_conserves_reconstructed_energy() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let p = params(0.1);
    let spec = InitialDataSpec::new(InitMode::IllPrepared, 1.0, 2.0, PI / 2.0);
    let mut s = make_initial_data(g, &spec, &p, 8).unwrap();
    let e0 = s.reconstructed_energy(p.eps);
    let mut st = Stepper::new(p, Scheme::Imex1);
    for _ in 0..20 {
        let dt = cfl_dt(&s, 0.4).min(0.01);
        s = st.step(&s, dt).unwrap();
    }
    let drift = ((s.reconstructed_energy(p.eps) - e0) / e0).abs();
    assert!(drift <= 1e-6, "drift {drift:e}");
    assert!(s.div_h_residual() <= 1e-10);
}

#[test]
fn overflowing_temperature_is_a_numerical_error() {
    let g = Grid::new(8, 2.0 * PI).unwrap();
    let p = params(0.1);
    let mut s = EpsState::equilibrium(g, p.theta_bar);
    s.theta = ScalarField::constant(g, 1e3);
    assert!(matches!(step_imex(&s, 0.01, &p), Err(machlim::Error::Numerical { .. })));
}
