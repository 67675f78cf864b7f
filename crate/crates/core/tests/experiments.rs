use std::f64::consts::PI;
use std::fs;

use machlim::experiments::{fit_csv, fit_rate, run_single, run_sweep, write_report, SweepMode, SweepPlan};
use machlim::io::config::RunConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn fit_of_exact_linear_data() {
    let s = [(0.4, 0.4), (0.2, 0.2), (0.1, 0.1), (0.05, 0.05)];
    let f = fit_rate("q", &s).unwrap();
    assert!((f.alpha - 1.0).abs() <= 1e-12);
    assert_eq!(f.r2, 1.0);
}

#[test]
fn fit_of_constant_data() {
    let f = fit_rate("q", &[(0.4, 2.5), (0.2, 2.5), (0.1, 2.5)]).unwrap();
    assert!(f.alpha.abs() <= 1e-12);
}

#[test]
fn fit_of_noisy_square_root() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..20 {
        let s: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.sqrt() * (1.0 + 0.01 * noise.sample(&mut rng))))
            .collect();
        let f = fit_rate("q", &s).unwrap();
        assert!((0.45..=0.55).contains(&f.alpha), "{}", f.alpha);
        assert!((0.0..=1.0).contains(&f.r2));
    }
}

#[test]
fn nonpositive_values_are_rejected() {
    assert!(fit_rate("q", &[(0.4, 1.0), (0.2, -1.0), (0.1, 1.0)]).is_err());
    assert!(fit_rate("q", &[(0.0, 1.0), (0.2, 1.0), (0.1, 1.0)]).is_err());
}

#[test]
fn csv_columns_are_fitted_separately() {
    let text = "eps,a,b\n0.4,0.4,1\n0.2,0.2,1\n0.1,0.1,1\n";
    let fits = fit_csv(text).unwrap();
    assert_eq!(fits.len(), 2);
    assert!((fits[0].alpha - 1.0).abs() < 1e-12 && fits[1].alpha.abs() < 1e-12);
    assert!(fit_csv("x,a\n1,1\n").is_err());
}

#[test]
fn plan_validation() {
    let c = RunConfig::with_n(8);
    assert!(SweepPlan::new(vec![0.4, 0.2], c.clone(), SweepMode::WellPrepared).is_err());
    assert!(SweepPlan::new(vec![0.2, 0.4, 0.1], c.clone(), SweepMode::WellPrepared).is_err());
    assert!(SweepPlan::new(vec![0.4, 0.2, 0.1], c, SweepMode::WellPrepared).is_ok());
}

fn small_config() -> RunConfig {
    let mut c = RunConfig::with_n(16);
    c.box_length = 8.0 * PI;
    c.theta_radius = Some(4.0 * PI);
    c.theta_share = 0.1;
    c.dt_max = Some(0.01);
    c.t_end = 0.2;
    c.out_every = 5;
    c
}

#[test]
fn small_sweep_is_ordered_and_reproducible() {
    let plan = SweepPlan::new(vec![0.4, 0.2, 0.1], small_config(), SweepMode::WellPrepared).unwrap();
    let a = run_sweep(&plan).unwrap();
    let q1: Vec<f64> = a.runs.iter().map(|r| r.q1).collect();
    assert!(q1.windows(2).all(|w| w[1] < w[0]), "{q1:?}");
    // The smallest ε tracks the limit solver at least as well as the largest.
    assert!(a.runs[2].q3 <= a.runs[0].q3);

    let b = run_sweep(&plan).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_report(&a, da.path()).unwrap();
    write_report(&b, db.path()).unwrap();
    for f in ["rates.csv", "quantities.csv", "summary.txt", "eps_0.1/diag.csv"] {
        let x = fs::read(da.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(db.path().join(f)).unwrap(), "{f}");
    }
    let header = fs::read_to_string(da.path().join("eps_0.4/diag.csv")).unwrap();
    assert!(header.starts_with("t,eps,Hs_p,Hs_u,Hs_H,Hs_theta_dev,triple_norm,divH_res,constraint_res,energy_total,acoustic_L2_local,curl_btu_Hsm1\n"));
}

#[test]
fn single_run_keeps_div_h_and_energy() {
    let mut c = small_config();
    c.init_mode = machlim::mhd_eps::InitMode::IllPrepared;
    let r = run_single(&c).unwrap();
    assert!(r.max_div_h <= 1e-10);
    assert!(r.energy_drift <= 1e-5);
    assert!((r.final_state.time - c.t_end).abs() < 1e-12);
    assert_eq!(r.records.first().unwrap().t, 0.0);
}
