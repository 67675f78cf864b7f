use std::f64::consts::PI;

use machlim::spectral::{random_band_limited, random_band_limited_vector};
use machlim::{curl, dealias_scalar, div, grad, leray_project, Grid, ScalarField, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel(a: &VectorField, b: &VectorField) -> f64 {
    (a - b).l2_norm() / b.l2_norm()
}

/// Fourth-order centred differences along one axis.
fn fd4(f: &ScalarField, axis: usize) -> ScalarField {
    let g = f.grid();
    let n = g.n();
    let h = g.dx();
    let v = f.values();
    let mut out = vec![0.0; g.len()];
    for ix in 0..n {
        for iy in 0..n {
            for iz in 0..n {
                let at = |d: isize| {
                    let mut i = [ix, iy, iz];
                    i[axis] = ((i[axis] as isize + d).rem_euclid(n as isize)) as usize;
                    v[g.index(i[0], i[1], i[2])]
                };
                out[g.index(ix, iy, iz)] = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
            }
        }
    }
    ScalarField::from_values(g, out).unwrap()
}

#[test]
fn gradient_matches_finite_differences_at_128() {
    let g = Grid::new(128, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = random_band_limited(g, 1.0, &mut rng);
    let spec = grad(&f);
    let scale = spec.max_magnitude();
    for axis in 0..3 {
        let fd = fd4(&f, axis);
        let err = (&spec.components()[axis] - &fd).max_abs() / scale;
        assert!(err <= 1e-6, "axis {axis}: {err:e}");
    }
}

#[test]
fn div_of_curl_vanishes() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_band_limited_vector(g, 5.0, &mut rng);
    let c = curl(&a);
    assert!(div(&c).l2_norm() <= 1e-12 * c.l2_norm());
}

#[test]
fn pure_mode_above_cutoff_is_removed() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    assert_eq!(g.dealias_cutoff(), 10);
    let f = ScalarField::from_fn(g, |x, _, _| (15.0 * x).cos());
    // Only transform roundoff survives.
    assert!(dealias_scalar(&f).max_abs() <= 1e-14);
}

#[test]
fn dealias_is_idempotent_and_keeps_low_modes() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let low = random_band_limited(g, 4.0, &mut rng);
    assert!((&dealias_scalar(&low) - &low).max_abs() < 1e-14);
    let rough = random_band_limited(g, 12.0, &mut rng);
    let once = dealias_scalar(&rough);
    assert!((&dealias_scalar(&once) - &once).max_abs() <= 1e-15 * once.max_abs());
}

#[test]
fn leray_kills_gradients_and_keeps_curls() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_band_limited(g, 4.0, &mut rng);
    let gf = grad(&f);
    assert!(leray_project(&gf).l2_norm() <= 1e-13 * gf.l2_norm());
    let c = curl(&random_band_limited_vector(g, 4.0, &mut rng));
    assert!(rel(&leray_project(&c), &c) <= 1e-12);
}

#[test]
fn spectral_accuracy_on_analytic_field() {
    let err = |n: usize| {
        let g = Grid::with_dealias(n, 1.0, 1.0).unwrap();
        let k = 2.0 * PI;
        let f = ScalarField::from_fn(g, |x, _, _| (k * x).sin().exp());
        let exact = ScalarField::from_fn(g, |x, _, _| k * (k * x).cos() * (k * x).sin().exp());
        (&grad(&f).components()[0] - &exact).max_abs()
    };
    let ratio = err(32) / err(16);
    assert!(ratio <= 1e-4, "ratio {ratio:e}");
}
