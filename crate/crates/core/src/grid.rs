//! Periodic box discretization.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid with `n` points per axis on `[0, L)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
    dealias_fraction: f64,
}

impl Grid {
    pub const DEFAULT_DEALIAS: f64 = 2.0 / 3.0;

    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(n, box_length, Self::DEFAULT_DEALIAS)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::contract(format!(
                "grid needs an even number of points per axis, at least 8 (got {n})"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::contract(format!(
                "box length must be positive and finite (got {box_length})"
            )));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::contract(format!(
                "dealias fraction must lie in (0, 1] (got {dealias_fraction})"
            )));
        }
        Ok(Self {
            n,
            box_length,
            dealias_fraction,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Total number of grid points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Fundamental wavenumber `2 pi / L`.
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Signed mode index for array position `i` along one axis.
    ///
    /// Positions `0..n/2` map to `0..n/2`, the rest to `-n/2..0`, so the
    /// Nyquist position carries `-n/2`.
    pub fn mode_index(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Largest retained `|m|` under the dealias rule.
    pub fn dealias_cutoff(&self) -> i64 {
        // The small bias keeps exact products such as 0.5 * 16 from rounding down.
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-12).floor() as i64
    }

    /// Wavenumbers along one axis, Nyquist included with its signed value.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.k0() * self.mode_index(i) as f64)
            .collect()
    }

    /// Wavenumbers used for first derivatives: the Nyquist entry is zeroed so
    /// derivatives of real fields stay real.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let half = self.n / 2;
        (0..self.n)
            .map(|i| {
                if i == half {
                    0.0
                } else {
                    self.k0() * self.mode_index(i) as f64
                }
            })
            .collect()
    }

    /// Coordinates of grid nodes along one axis.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.dx()).collect()
    }

    /// Geometric centre of the box.
    pub fn center(&self) -> [f64; 3] {
        let c = 0.5 * self.box_length;
        [c, c, c]
    }

    /// Flat index of `(ix, iy, iz)` in row-major order with `z` fastest.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.n + iy) * self.n + iz
    }

    pub(crate) fn same_shape(&self, other: &Grid) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }
}
