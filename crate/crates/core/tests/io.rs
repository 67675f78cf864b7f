use std::f64::consts::PI;
use std::fs;

use machlim::io::checkpoint::{read_checkpoint, read_limit_checkpoint, write_checkpoint, write_limit_checkpoint};
use machlim::io::config::{parse_config, RunConfig};
use machlim::mhd_eps::{make_initial_data, InitMode, InitialDataSpec, PhysParams};
use machlim::mhd_limit::LimitState;
use machlim::{Error, Grid};

fn state(n: usize) -> machlim::mhd_eps::EpsState {
    let g = Grid::new(n, 2.0 * PI).unwrap();
    let p = PhysParams::new(0.1, 0.1, 0.0, 0.1, 0.1, 1.0).unwrap();
    let spec = InitialDataSpec::new(InitMode::IllPrepared, 1.0, 2.0, PI / 2.0);
    let mut s = make_initial_data(g, &spec, &p, 17).unwrap();
    s.time = 0.375;
    s
}

#[test]
fn minimal_config_fills_defaults() {
    let c = parse_config("grid.n = 32\n").unwrap();
    assert_eq!(c, RunConfig::with_n(32));
    assert_eq!(c.theta_radius(), 0.5 * PI);
    assert_eq!(c.sponge_radii(), (0.6 * PI, PI));
}

#[test]
fn negative_viscosity_cites_the_constraint() {
    let err = parse_config("grid.n = 32\nphys.mu = -1\n").unwrap_err();
    let text = err.to_string();
    assert!(text.contains("mu > 0"), "{text}");
    assert!(err.0.iter().any(|i| i.line == 2));
}

#[test]
fn config_text_round_trips() {
    let text = "grid.n = 16\ngrid.L = 8pi\nphys.eps = 0.05\ninit.mode = ill_prepared\n\
                init.theta_radius = 4*pi\ntime.dt_max = 0.01\ntime.scheme = imexbdf2\n\
                sweep.eps_list = 0.4, 0.2, 0.1\nsweep.mode = ill_prepared_sponged\n\
                diag.probe_radius = 2\n# a comment\nout.dir = runs/a\n";
    let c = parse_config(text).unwrap();
    assert_eq!(c.box_length, 8.0 * PI);
    assert_eq!(c.eps_list, Some(vec![0.4, 0.2, 0.1]));
    assert_eq!(parse_config(&c.to_text()).unwrap(), c);
}

#[test]
fn unknown_and_duplicate_keys_are_reported_together() {
    let err = parse_config("grid.n = 16\ngrid.n = 32\nfoo.bar = 1\nsweep.eps_list = 0.1,0.2,0.3\n").unwrap_err();
    let lines: Vec<usize> = err.0.iter().map(|i| i.line).collect();
    assert!(lines.contains(&2) && lines.contains(&3) && lines.contains(&4), "{err}");
    assert!(parse_config("phys.eps = 0.1\n").is_err());
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.mlim");
    let s = state(16);
    write_checkpoint(&s, &path).unwrap();
    let back = read_checkpoint(&path, Some(s.grid())).unwrap();
    assert_eq!(back, s);
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[0..4], b"MLIM");
    assert_eq!(bytes.len(), 20 + 8 * (8 * 16usize.pow(3) + 1));
}

#[test]
fn limit_checkpoint_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.mlim");
    let g = Grid::new(8, 2.0 * PI).unwrap();
    let mut s = LimitState::rest(g, 1.0);
    s.w = machlim::VectorField::from_fn(g, |x, y, _| [y.sin(), x.cos(), 0.0]);
    s.time = 2.5;
    write_limit_checkpoint(&s, &path).unwrap();
    assert_eq!(read_limit_checkpoint(&path, None).unwrap(), s);
}

#[test]
fn corrupted_magic_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.mlim");
    write_checkpoint(&state(8), &path).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes[0] = b'X';
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_checkpoint(&path, None), Err(Error::Format(_))));
}

#[test]
fn truncated_file_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.mlim");
    write_checkpoint(&state(8), &path).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
    assert!(matches!(read_checkpoint(&path, None), Err(Error::Format(_))));
}

#[test]
fn resolution_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.mlim");
    write_checkpoint(&state(32), &path).unwrap();
    let g64 = Grid::new(64, 2.0 * PI).unwrap();
    assert!(matches!(read_checkpoint(&path, Some(g64)), Err(Error::DimensionMismatch { .. })));
}
