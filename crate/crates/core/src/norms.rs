//! Spectral Sobolev norms, the ε-weighted `H^σ_η` norms and the composite
//! trajectory norm of the scaled system.
//!
//! All norms are Parseval-consistent with the box volume: `H^0` is the
//! `L²(box)` norm.

use crate::error::{Error, Result};
use crate::field::{Field, ScalarField, VectorField};
use crate::grid::Grid;
use crate::mhd_eps::{EpsState, PhysParams};
use crate::spectral::{forward_all, Spectrum};

/// Something whose components can be transformed.
pub trait NormInput {
    fn spectra(&self) -> Vec<Spectrum>;
}

impl NormInput for ScalarField {
    fn spectra(&self) -> Vec<Spectrum> {
        vec![Spectrum::of(self)]
    }
}

impl NormInput for VectorField {
    fn spectra(&self) -> Vec<Spectrum> {
        let [x, y, z] = self.components();
        forward_all(&[x, y, z])
    }
}

impl NormInput for Field {
    fn spectra(&self) -> Vec<Spectrum> {
        match self {
            Field::Scalar(s) => s.spectra(),
            Field::Vector(v) => v.spectra(),
        }
    }
}

fn energy(spectra: &[Spectrum], w: impl Fn(f64, f64) -> f64 + Copy) -> f64 {
    spectra
        .iter()
        .map(|s| s.weighted_energy(|m| w(m.ksq, m.kd_sq())))
        .sum()
}

fn hs(spectra: &[Spectrum], s: f64) -> f64 {
    energy(spectra, |k2, _| (1.0 + k2).powf(s)).sqrt()
}

/// `‖∇f‖_{H^s}`.
fn grad_hs(spectra: &[Spectrum], s: f64) -> f64 {
    energy(spectra, |k2, kd2| kd2 * (1.0 + k2).powf(s)).sqrt()
}

/// `(Σ (1+|k|²)^s |f̂|²)^{1/2}`, scaled so that `s = 0` is the `L²` norm.
pub fn sobolev_norm<F: NormInput + ?Sized>(f: &F, s: f64) -> f64 {
    hs(&f.spectra(), s)
}

/// `‖f‖_{H^{σ−1}} + η ‖f‖_{H^σ}`.
pub fn weighted_norm<F: NormInput + ?Sized>(f: &F, sigma: f64, eta: f64) -> f64 {
    let sp = f.spectra();
    hs(&sp, sigma - 1.0) + eta * hs(&sp, sigma)
}

fn weighted_of(sp: &[Spectrum], sigma: f64, eta: f64) -> f64 {
    hs(sp, sigma - 1.0) + eta * hs(sp, sigma)
}

fn grad_weighted_of(sp: &[Spectrum], sigma: f64, eta: f64) -> f64 {
    grad_hs(sp, sigma - 1.0) + eta * grad_hs(sp, sigma)
}

/// The two pieces of the composite norm at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParts {
    /// `Σ‖(p,u,H)‖_{H^s} + Σ‖(εp,εu,εH,θ−θ̄)‖_{H^{s+2}_ε}`.
    pub instant: f64,
    /// `(Σ‖∇(p,u,H)‖_{H^s})² + (Σ‖∇(εu,εH,θ)‖_{H^{s+2}_ε})²`.
    pub gradient_sq: f64,
    pub hs_p: f64,
    pub hs_u: f64,
    pub hs_h: f64,
    pub hs_theta_dev: f64,
}

/// Evaluates every piece of the composite norm from one set of transforms.
pub fn norm_parts(state: &EpsState, params: &PhysParams, s: f64) -> NormParts {
    let delta = state.theta.map(|t| t - params.theta_bar);
    let [ux, uy, uz] = state.u.components();
    let [hx, hy, hz] = state.h.components();
    let all = forward_all(&[&state.p, ux, uy, uz, hx, hy, hz, &delta]);
    let (p, rest) = all.split_at(1);
    let (u, rest) = rest.split_at(3);
    let (h, d) = rest.split_at(3);
    let e = params.eps;
    let sigma = s + 2.0;
    let (hs_p, hs_u, hs_h) = (hs(p, s), hs(u, s), hs(h, s));
    let weighted = e * (weighted_of(p, sigma, e) + weighted_of(u, sigma, e) + weighted_of(h, sigma, e))
        + weighted_of(d, sigma, e);
    let g1 = grad_hs(p, s) + grad_hs(u, s) + grad_hs(h, s);
    let g2 = e * (grad_weighted_of(u, sigma, e) + grad_weighted_of(h, sigma, e))
        + grad_weighted_of(d, sigma, e);
    NormParts {
        instant: hs_p + hs_u + hs_h + weighted,
        gradient_sq: g1 * g1 + g2 * g2,
        hs_p,
        hs_u,
        hs_h,
        hs_theta_dev: hs(d, s),
    }
}

/// The initial-data norm `‖(p,u,H)‖_{H^s} + ‖(εp,εu,εH,θ−θ̄)‖_{H^{s+2}_ε}`.
pub fn data_norm(state: &EpsState, params: &PhysParams, s: f64) -> f64 {
    norm_parts(state, params, s).instant
}

/// Running composite norm `sup_t I(t) + (∫ G dt)^{1/2}` along a trajectory,
/// left-endpoint quadrature in time.
#[derive(Debug, Clone)]
pub struct TripleNormAccumulator {
    s: f64,
    params: PhysParams,
    sup_part: f64,
    int_part: f64,
    t: f64,
    last_gradient_sq: Option<f64>,
}

impl TripleNormAccumulator {
    pub fn new(s: f64, params: PhysParams) -> Self {
        Self {
            s,
            params,
            sup_part: 0.0,
            int_part: 0.0,
            t: 0.0,
            last_gradient_sq: None,
        }
    }

    /// Accumulator primed with the state at the start of a trajectory.
    pub fn starting_at(s: f64, params: PhysParams, state: &EpsState) -> Self {
        let mut acc = Self::new(s, params);
        let parts = norm_parts(state, &params, s);
        acc.sup_part = parts.instant;
        acc.last_gradient_sq = Some(parts.gradient_sq);
        acc.t = state.time;
        acc
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn eps(&self) -> f64 {
        self.params.eps
    }

    pub fn sup_part(&self) -> f64 {
        self.sup_part
    }

    pub fn int_part(&self) -> f64 {
        self.int_part
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn value(&self) -> f64 {
        self.sup_part + self.int_part.sqrt()
    }

    /// Advances to `state`, which must sit at `t + dt`. Without a primed
    /// start the first interval uses the new state's gradient term.
    pub fn accumulate(&mut self, state: &EpsState, dt: f64) -> Result<NormParts> {
        if !(dt > 0.0) {
            return Err(Error::contract(format!("dt must be positive, got {dt}")));
        }
        if state.time < self.t {
            return Err(Error::contract(format!(
                "time regression: accumulator at {}, state at {}",
                self.t, state.time
            )));
        }
        let expected = self.t + dt;
        if (state.time - expected).abs() > 1e-9 * expected.abs().max(1.0) {
            return Err(Error::contract(format!(
                "state time {} does not match accumulator time {} + dt {}",
                state.time, self.t, dt
            )));
        }
        let parts = norm_parts(state, &self.params, self.s);
        let left = self.last_gradient_sq.unwrap_or(parts.gradient_sq);
        self.int_part += dt * left;
        self.sup_part = self.sup_part.max(parts.instant);
        self.last_gradient_sq = Some(parts.gradient_sq);
        self.t = state.time;
        Ok(parts)
    }
}

/// Functional form of [`TripleNormAccumulator::accumulate`].
pub fn accumulate_triple(
    mut acc: TripleNormAccumulator,
    state: &EpsState,
    dt: f64,
) -> Result<TripleNormAccumulator> {
    acc.accumulate(state, dt)?;
    Ok(acc)
}

/// `C^∞` step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let f = |x: f64| (-1.0 / x).exp();
        f(t) / (f(t) + f(1.0 - t))
    }
}

/// Smooth cutoff of the central ball of radius `R`: 1 up to `R/2`, 0
/// beyond `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMask {
    radius: f64,
    weights: ScalarField,
}

impl LocalMask {
    pub fn new(grid: Grid, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::contract("mask radius must be positive"));
        }
        let c = grid.center();
        let weights = ScalarField::from_fn(grid, |x, y, z| {
            let r = ((x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2)).sqrt();
            1.0 - smooth_step((r - 0.5 * radius) / (0.5 * radius))
        });
        Ok(Self { radius, weights })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn weights(&self) -> &ScalarField {
        &self.weights
    }

    /// `∫ χ dx`.
    pub fn volume(&self) -> f64 {
        self.weights.integral()
    }

    /// `∫ χ |f|² dx`.
    pub fn l2_sq(&self, f: &ScalarField) -> f64 {
        self.weights
            .values()
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            * f.grid().cell_volume()
    }

    pub fn l2_sq_vector(&self, v: &VectorField) -> f64 {
        v.components().iter().map(|c| self.l2_sq(c)).sum()
    }

    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        &self.weights * f
    }

    pub fn apply_vector(&self, v: &VectorField) -> VectorField {
        v.scale_by(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_closed_form() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |x, y, _| (2.0 * x + y).cos());
        let a = f.l2_norm();
        for s in [0.0, 1.0, 2.5, 4.0] {
            let expect = a * 6f64.powf(s / 2.0);
            assert!((sobolev_norm(&f, s) - expect).abs() < 1e-10 * expect);
        }
        let w = weighted_norm(&f, 3.0, 1.0);
        assert!((w - a * (6.0 + 216f64.sqrt())).abs() < 1e-9 * w);
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mask_is_one_inside_half_radius() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let m = LocalMask::new(g, 2.0).unwrap();
        let c = g.center();
        let inside = g.index(8, 8, 8);
        assert_eq!(m.weights().values()[inside], 1.0);
        assert_eq!(c, [PI, PI, PI]);
        assert_eq!(m.weights().values()[0], 0.0);
    }
}
