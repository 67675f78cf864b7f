//! Little-endian binary snapshots: `"MLIM"`, `u32` version, `u32 n`,
//! `f64 L`, eight `f64` arrays of length `n³` in declared order, then the
//! `f64` time.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::mhd_eps::EpsState;
use crate::mhd_limit::LimitState;

pub const MAGIC: &[u8; 4] = b"MLIM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;
const FIELDS: usize = 8;

/// The raw contents of a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: Grid,
    pub arrays: Vec<Vec<f64>>,
    pub time: f64,
}

fn encode(snap: &Snapshot) -> Vec<u8> {
    let len = snap.grid.len();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * (FIELDS * len + 1));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(snap.grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&snap.grid.box_length().to_le_bytes());
    for a in &snap.arrays {
        for v in a {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf.extend_from_slice(&snap.time.to_le_bytes());
    buf
}

fn decode(bytes: &[u8], expected: Option<Grid>) -> Result<Snapshot> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[0..4],
            MAGIC
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let n = u32_at(8) as usize;
    let l = f64_at(12);
    if let Some(g) = expected {
        if g.n() != n || g.box_length() != l {
            return Err(Error::DimensionMismatch {
                expected: format!("n = {}, L = {}", g.n(), g.box_length()),
                found: format!("n = {n}, L = {l}"),
            });
        }
    }
    let grid = match expected {
        Some(g) => g,
        None => Grid::new(n, l).map_err(|e| Error::Format(format!("bad header: {e}")))?,
    };
    let len = grid.len();
    let need = HEADER_LEN + 8 * (FIELDS * len + 1);
    if bytes.len() != need {
        return Err(Error::Format(format!(
            "expected {need} bytes for n = {n}, found {}",
            bytes.len()
        )));
    }
    let mut arrays = Vec::with_capacity(FIELDS);
    let mut o = HEADER_LEN;
    for _ in 0..FIELDS {
        arrays.push((0..len).map(|i| f64_at(o + 8 * i)).collect());
        o += 8 * len;
    }
    Ok(Snapshot {
        grid,
        arrays,
        time: f64_at(o),
    })
}

pub fn write_snapshot(snap: &Snapshot, path: &Path) -> Result<()> {
    if snap.arrays.len() != FIELDS || snap.arrays.iter().any(|a| a.len() != snap.grid.len()) {
        return Err(Error::contract("snapshot needs eight arrays of n³ values"));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(snap))?;
    Ok(())
}

/// Reads a snapshot; with `expected` set, a different grid is a dimension
/// mismatch.
pub fn read_snapshot(path: &Path, expected: Option<Grid>) -> Result<Snapshot> {
    decode(&fs::read(path)?, expected)
}

fn scalar(grid: Grid, v: Vec<f64>) -> ScalarField {
    ScalarField::from_values(grid, v).expect("length checked on decode")
}

fn vector(grid: Grid, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> VectorField {
    VectorField::new([scalar(grid, x), scalar(grid, y), scalar(grid, z)]).expect("one grid")
}

fn values(v: &VectorField) -> [Vec<f64>; 3] {
    v.components().clone().map(|c| c.into_values())
}

/// Order: `p, u_x, u_y, u_z, H_x, H_y, H_z, θ`.
pub fn write_checkpoint(state: &EpsState, path: &Path) -> Result<()> {
    let [ux, uy, uz] = values(&state.u);
    let [hx, hy, hz] = values(&state.h);
    write_snapshot(
        &Snapshot {
            grid: state.grid(),
            arrays: vec![
                state.p.values().to_vec(),
                ux,
                uy,
                uz,
                hx,
                hy,
                hz,
                state.theta.values().to_vec(),
            ],
            time: state.time,
        },
        path,
    )
}

pub fn read_checkpoint(path: &Path, expected: Option<Grid>) -> Result<EpsState> {
    let s = read_snapshot(path, expected)?;
    let g = s.grid;
    let mut a = s.arrays.into_iter();
    let mut next = || a.next().unwrap();
    Ok(EpsState {
        p: scalar(g, next()),
        u: vector(g, next(), next(), next()),
        h: vector(g, next(), next(), next()),
        theta: scalar(g, next()),
        time: s.time,
    })
}

/// Order: `w_x, w_y, w_z, h_x, h_y, h_z, ϑ, π`.
pub fn write_limit_checkpoint(state: &LimitState, path: &Path) -> Result<()> {
    let [wx, wy, wz] = values(&state.w);
    let [hx, hy, hz] = values(&state.h);
    write_snapshot(
        &Snapshot {
            grid: state.grid(),
            arrays: vec![
                wx,
                wy,
                wz,
                hx,
                hy,
                hz,
                state.vartheta.values().to_vec(),
                state.pi.values().to_vec(),
            ],
            time: state.time,
        },
        path,
    )
}

pub fn read_limit_checkpoint(path: &Path, expected: Option<Grid>) -> Result<LimitState> {
    let s = read_snapshot(path, expected)?;
    let g = s.grid;
    let mut a = s.arrays.into_iter();
    let mut next = || a.next().unwrap();
    Ok(LimitState {
        w: vector(g, next(), next(), next()),
        h: vector(g, next(), next(), next()),
        vartheta: scalar(g, next()),
        pi: scalar(g, next()),
        time: s.time,
    })
}
