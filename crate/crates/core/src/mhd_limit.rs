//! The zero-Mach limit system
//!
//! ```text
//! div(2w − κ e^ϑ ∇ϑ) = 0
//! e^{−ϑ}(∂t w + (w·∇)w) + ∇π = (curl h)×h + div Φ(w)
//! ∂t h − curl(w×h) − ν Δh = 0,   div h = 0
//! ∂t ϑ + w·∇ϑ + div w = κ div(e^ϑ ∇ϑ)
//! ```
//!
//! with `Φ(w) = 2μ D(w) + λ (div w) I`. The multiplier `π` is eliminated by
//! a variable-coefficient projection.

use crate::elliptic::solve_variable_poisson;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::mhd_eps::{EpsState, PhysParams, THETA_LIMIT};
use crate::spectral::{
    self, curl, dealias_scalar, dealias_vector, div, for_each_mode, grad, vector_spectrum, Spectrum,
};

/// Relative tolerance of the pressure solve.
pub const PRESSURE_TOL: f64 = 1e-10;
/// Constraint tolerance, relative to `max(1, ‖w‖_{H¹})`.
pub const CONSTRAINT_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 200;
const PCG_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub w: VectorField,
    pub h: VectorField,
    pub vartheta: ScalarField,
    /// Multiplier from the last step or tendency evaluation, zero mean.
    pub pi: ScalarField,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitTendencies {
    pub dw: VectorField,
    pub dh: VectorField,
    pub dvartheta: ScalarField,
    pub pi: ScalarField,
}

impl LimitState {
    /// `w = 0, h = 0, ϑ = θ̄`.
    pub fn rest(grid: crate::grid::Grid, theta_bar: f64) -> Self {
        Self {
            w: VectorField::zeros(grid),
            h: VectorField::zeros(grid),
            vartheta: ScalarField::constant(grid, theta_bar),
            pi: ScalarField::zeros(grid),
            time: 0.0,
        }
    }

    /// Limit data from a compressible state: drop `p`, keep `H` (projected)
    /// and `θ`, and project `u` onto the constraint.
    pub fn from_eps(state: &EpsState, params: &PhysParams) -> Result<Self> {
        let s = Self {
            w: state.u.clone(),
            h: spectral::leray_project(&state.h),
            vartheta: state.theta.clone(),
            pi: ScalarField::zeros(state.grid()),
            time: state.time,
        };
        enforce_constraint(&s, params)
    }

    pub fn grid(&self) -> crate::grid::Grid {
        self.w.grid()
    }

    fn check(&self) -> Result<()> {
        self.w.check_finite("w")?;
        self.h.check_finite("h")?;
        self.vartheta.check_finite("vartheta")?;
        let m = self.vartheta.max_abs();
        if m > THETA_LIMIT {
            return Err(Error::numerical(
                "vartheta",
                format!("|vartheta| reached {m:.3e}, overflow guard is {THETA_LIMIT}"),
            ));
        }
        Ok(())
    }

    /// Energy `∫ e^{−ϑ}|w|²/2`.
    pub fn kinetic_energy(&self) -> f64 {
        let w2 = self.w.norm_sq();
        w2.zip_map(&self.vartheta, |a, t| 0.5 * a * (-t).exp()).integral()
    }
}

/// Dealiased `e^ϑ ∇ϑ`, built from the deviation `ϑ − θ̄`.
fn heat_flux(vartheta: &ScalarField, theta_bar: f64) -> VectorField {
    let delta = vartheta.map(|t| t - theta_bar);
    dealias_vector(&grad(&delta).scale_by(&vartheta.map(f64::exp)))
}

/// `div(2w − κ P(e^ϑ ∇ϑ))`.
pub fn constraint_residual(state: &LimitState, params: &PhysParams) -> ScalarField {
    let flux = heat_flux(&state.vartheta, params.theta_bar);
    let v = &(&state.w * 2.0) - &(&flux * params.kappa);
    div(&v)
}

fn h1_norm(v: &VectorField) -> f64 {
    crate::norms::sobolev_norm(v, 1.0)
}

/// Replaces `w` by `w − ∇φ`, `2Δφ = div(2w − κ e^ϑ∇ϑ)`, repeating on the
/// residual until the constraint holds to [`CONSTRAINT_TOL`].
pub fn enforce_constraint(state: &LimitState, params: &PhysParams) -> Result<LimitState> {
    state.check()?;
    let flux = &heat_flux(&state.vartheta, params.theta_bar) * params.kappa;
    let mut w = state.w.clone();
    let mut best = f64::INFINITY;
    for sweep in 0..MAX_SWEEPS {
        let res = div(&(&(&w * 2.0) - &flux));
        let r = res.l2_norm();
        let tol = CONSTRAINT_TOL * h1_norm(&w).max(1.0);
        // Stop once converged and no longer improving.
        if r <= tol && (r >= 0.5 * best || r == 0.0) {
            return Ok(LimitState { w, ..state.clone() });
        }
        if r >= best && sweep > 1 {
            return Err(Error::Convergence {
                iterations: sweep,
                residual: r,
            });
        }
        best = best.min(r);
        let phi = spectral::inverse_laplacian(&res).map(|v| 0.5 * v);
        w = &w - &grad(&phi);
    }
    let r = div(&(&(&w * 2.0) - &flux)).l2_norm();
    if r <= CONSTRAINT_TOL * h1_norm(&w).max(1.0) {
        Ok(LimitState { w, ..state.clone() })
    } else {
        Err(Error::Convergence {
            iterations: MAX_SWEEPS,
            residual: r,
        })
    }
}

/// `μΔw + (μ+λ)∇div w` scaled by `c`, in spectral space.
fn viscous_spectra(ws: &[Spectrum; 3], params: &PhysParams, c: f64) -> [Spectrum; 3] {
    let g = ws[0].grid();
    let mut out = [Spectrum::zeros(g), Spectrum::zeros(g), Spectrum::zeros(g)];
    let (mu, lambda) = (params.mu, params.lambda);
    for_each_mode(g, |i, m| {
        let kdw = m.kd[0] * ws[0].data()[i] + m.kd[1] * ws[1].data()[i] + m.kd[2] * ws[2].data()[i];
        for (a, o) in out.iter_mut().enumerate() {
            o.data_mut()[i] = -c * (mu * m.ksq * ws[a].data()[i] + (mu + lambda) * m.kd[a] * kdw);
        }
    });
    out
}

fn from_spectra(s: &[Spectrum; 3]) -> VectorField {
    let mut f = spectral::inverse_all(&[&s[0], &s[1], &s[2]]).into_iter();
    VectorField::new([f.next().unwrap(), f.next().unwrap(), f.next().unwrap()]).expect("one grid")
}

/// Everything in the three evolution equations except the multiplier.
struct Forcing {
    /// `−(w·∇)w + e^ϑ[(curl h)×h + div Φ(w)]`.
    g: VectorField,
    dvartheta: ScalarField,
    /// `curl(w×h)`.
    induction: VectorField,
}

fn forcing(state: &LimitState, params: &PhysParams) -> Forcing {
    let w = &state.w;
    let h = &state.h;
    let e = state.vartheta.map(f64::exp);
    let ws = vector_spectrum(w);
    let visc = from_spectra(&viscous_spectra(&ws, params, 1.0));
    let grads: Vec<VectorField> = w.components().iter().map(grad).collect();
    let adv = VectorField::new([w.dot(&grads[0]), w.dot(&grads[1]), w.dot(&grads[2])]).expect("one grid");
    let lor = curl(h).cross(h);
    let g = dealias_vector(&(&(&lor + &visc).scale_by(&e) - &adv));

    let delta = state.vartheta.map(|t| t - params.theta_bar);
    let gd = grad(&delta);
    let lap = spectral::laplacian(&delta);
    let diffusion = &(&lap + &gd.norm_sq()) * &e;
    let divw = div(w);
    let dv = &(&(&diffusion * params.kappa) - &w.dot(&gd)) - &divw;
    let dvartheta = dealias_scalar(&dv);
    let induction = curl(&dealias_vector(&w.cross(h)));
    Forcing {
        g,
        dvartheta,
        induction,
    }
}

/// Zero-mean `π` with `div(e^ϑ ∇π) = rhs`, and the correction `P(e^ϑ ∇π)`.
fn pressure(vartheta: &ScalarField, rhs: &ScalarField) -> Result<(ScalarField, VectorField)> {
    let e = vartheta.map(f64::exp);
    let out = solve_variable_poisson(&e, rhs, PRESSURE_TOL, PCG_MAX_ITER)?;
    let corr = dealias_vector(&grad(&out.solution).scale_by(&e));
    Ok((out.solution, corr))
}

/// Tendencies of `(w, h, ϑ)` with `π` chosen so that `∂t w` is compatible
/// with the time derivative of the constraint.
pub fn rhs_limit(state: &LimitState, params: &PhysParams) -> Result<LimitTendencies> {
    state.check()?;
    let f = forcing(state, params);
    let e = state.vartheta.map(f64::exp);
    let delta = state.vartheta.map(|t| t - params.theta_bar);
    // ∂t(e^ϑ∇ϑ) = e^ϑ(∂tϑ ∇ϑ + ∇∂tϑ)
    let dflux = dealias_vector(
        &(&grad(&delta).scale_by(&f.dvartheta) + &grad(&f.dvartheta)).scale_by(&e),
    );
    let tau = &div(&dflux) * (0.5 * params.kappa);
    let rhs = &div(&f.g) - &tau;
    let (pi, corr) = pressure(&state.vartheta, &rhs)?;
    let dh = &f.induction + &spectral::vector_laplacian(&state.h).map(|c| c * params.nu);
    Ok(LimitTendencies {
        dw: &f.g - &corr,
        dh,
        dvartheta: f.dvartheta,
        pi,
    })
}

/// One projection step: implicit frozen-coefficient diffusion, explicit
/// transport and Lorentz force, a variable-coefficient pressure solve that
/// restores the constraint with the new `ϑ`, then a final constraint sweep
/// and Leray projection of `h`.
pub fn step_limit(state: &LimitState, dt: f64, params: &PhysParams) -> Result<LimitState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::contract(format!("dt must be positive, got {dt}")));
    }
    state.check()?;
    let f = forcing(state, params);
    let c = state.vartheta.max().max(params.theta_bar).exp();
    let (kappa, nu, mu, lambda) = (params.kappa, params.nu, params.mu, params.lambda);

    // ϑ: implicit κcΔ, explicit remainder.
    let delta = state.vartheta.map(|t| t - params.theta_bar);
    let mut ds = Spectrum::of(&delta);
    let ns = Spectrum::of(&f.dvartheta);
    let mut ds_new = ds.clone();
    for_each_mode(ds.grid(), |i, m| {
        let lin = -kappa * c * m.ksq;
        let n = if m.kept { ns.data()[i] - lin * ds.data()[i] } else { ns.data()[i] };
        ds_new.data_mut()[i] = (ds.data()[i] + dt * n) / (1.0 - dt * lin);
    });
    ds = ds_new;
    let vartheta = ds.to_field().map(|d| d + params.theta_bar);

    // h: implicit ν, explicit induction.
    let mut hs = vector_spectrum(&state.h);
    let is = vector_spectrum(&f.induction);
    for (hc, ic) in hs.iter_mut().zip(&is) {
        let old = hc.clone();
        for_each_mode(old.grid(), |i, m| {
            hc.data_mut()[i] = (old.data()[i] + dt * ic.data()[i]) / (1.0 + dt * nu * m.ksq);
        });
    }
    spectral::leray_spectra(&mut hs);
    let h = from_spectra(&hs);

    // w*: implicit frozen viscous term, explicit rest.
    let ws = vector_spectrum(&state.w);
    let lin = viscous_spectra(&ws, params, c);
    let gs = vector_spectrum(&f.g);
    let mut rs = gs.clone();
    for a in 0..3 {
        let lin_a = lin[a].dealiased();
        rs[a] = ws[a].clone();
        rs[a].axpy(dt, &gs[a]);
        rs[a].axpy(-dt, &lin_a);
    }
    let mut star = rs.clone();
    for_each_mode(star[0].grid(), |i, m| {
        let kn2 = m.kd_sq();
        let r = [rs[0].data()[i], rs[1].data()[i], rs[2].data()[i]];
        let et = 1.0 + dt * c * mu * m.ksq;
        if kn2 == 0.0 {
            for a in 0..3 {
                star[a].data_mut()[i] = r[a] / et;
            }
        } else {
            let el = 1.0 + dt * c * (mu * m.ksq + (mu + lambda) * kn2);
            let rl = (m.kd[0] * r[0] + m.kd[1] * r[1] + m.kd[2] * r[2]) / kn2;
            for a in 0..3 {
                let long = rl * m.kd[a];
                star[a].data_mut()[i] = (r[a] - long) / et + long / el;
            }
        }
    });
    let w_star = from_spectra(&star);

    // Pressure: div(e^ϑ∇π) = (div w* − g^{n+1})/dt, g = (κ/2) div P(e^ϑ∇ϑ).
    let g_new = &div(&heat_flux(&vartheta, params.theta_bar)) * (0.5 * kappa);
    let rhs = &(&div(&w_star) - &g_new) * (1.0 / dt);
    let (pi, corr) = pressure(&vartheta, &rhs)?;
    let w = &w_star - &(&corr * dt);
    let next = LimitState {
        w,
        h,
        vartheta,
        pi,
        time: state.time + dt,
    };
    enforce_constraint(&next, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn rest_state_is_fixed() {
        let g = Grid::new(8, 2.0 * std::f64::consts::PI).unwrap();
        let pr = PhysParams::new(0.1, 0.1, 0.0, 0.1, 0.1, 1.0).unwrap();
        let s = LimitState::rest(g, 1.0);
        let t = rhs_limit(&s, &pr).unwrap();
        assert_eq!(t.dw.max_magnitude(), 0.0);
        assert_eq!(t.dvartheta.max_abs(), 0.0);
        let n = step_limit(&s, 0.1, &pr).unwrap();
        assert_eq!(n.w, s.w);
        assert_eq!(n.vartheta, s.vartheta);
    }
}
