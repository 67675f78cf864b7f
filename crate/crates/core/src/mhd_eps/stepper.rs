use rustfft::num_complex::Complex64;

use super::rhs::{rhs_spectral, StateSpectra};
use super::{EpsState, PhysParams};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::spectral::{self, for_each_mode, Spectrum};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Lower bound on the signal speed used by [`cfl_dt`].
pub const CFL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Imex1,
    ImexBdf2,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "imex1" => Ok(Scheme::Imex1),
            "imexbdf2" => Ok(Scheme::ImexBdf2),
            other => Err(format!("unknown scheme `{other}` (expected imex1 or imexbdf2)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Imex1 => "imex1",
            Scheme::ImexBdf2 => "imexbdf2",
        })
    }
}

/// `safety Δx / max(|u|_∞ + |H|_∞ e^{θmax/2}, floor)`. The singular terms
/// are implicit, so there is no ε in here.
pub fn cfl_dt(state: &EpsState, safety: f64) -> f64 {
    let speed = state.u.max_magnitude() + state.h.max_magnitude() * (0.5 * state.theta.max()).exp();
    safety * state.grid().dx() / speed.max(CFL_FLOOR)
}

/// Log of the frozen implicit coefficient: the largest exponent that
/// multiplies a stiff term anywhere in the box.
fn theta_star(state: &EpsState, params: &PhysParams) -> f64 {
    let tmax = state.theta.max();
    let tp = state
        .theta
        .values()
        .iter()
        .zip(state.p.values())
        .map(|(t, p)| t - params.eps * p)
        .fold(f64::NEG_INFINITY, f64::max);
    params.theta_bar.max(tmax).max(tp)
}

/// The frozen-coefficient linear operator `L*` applied to `y`, dealiased.
fn apply_linear(y: &StateSpectra, params: &PhysParams, c: f64) -> StateSpectra {
    let PhysParams {
        eps,
        mu,
        lambda,
        nu,
        kappa,
        ..
    } = *params;
    let mut out = y.clone();
    for s in out.parts_mut() {
        s.data_mut().fill(ZERO);
    }
    let g = y.p.grid();
    for_each_mode(g, |i, m| {
        if !m.kept {
            return;
        }
        let k = m.kd;
        let q = m.ksq;
        let u = [y.u[0].data()[i], y.u[1].data()[i], y.u[2].data()[i]];
        let kdu = k[0] * u[0] + k[1] * u[1] + k[2] * u[2];
        let p = y.p.data()[i];
        let d = y.delta.data()[i];
        out.p.data_mut()[i] = -(2.0 / eps) * I * kdu - (kappa * c / eps) * q * d;
        for a in 0..3 {
            out.u[a].data_mut()[i] =
                -(c / eps) * I * k[a] * p - c * (mu * q * u[a] + (mu + lambda) * k[a] * kdu);
            out.h[a].data_mut()[i] = -nu * q * y.h[a].data()[i];
        }
        out.delta.data_mut()[i] = -I * kdu - kappa * c * q * d;
    });
    out
}

/// Solves `(I − s L*) y = r` mode by mode and Leray-projects `H`.
fn solve_implicit(r: &StateSpectra, params: &PhysParams, c: f64, s: f64) -> StateSpectra {
    let PhysParams {
        eps,
        mu,
        lambda,
        nu,
        kappa,
        ..
    } = *params;
    let mut out = r.clone();
    let g = r.p.grid();
    for_each_mode(g, |i, m| {
        let q = m.ksq;
        let kn = m.kd_sq().sqrt();
        let rp = r.p.data()[i];
        let rd = r.delta.data()[i];
        let ru = [r.u[0].data()[i], r.u[1].data()[i], r.u[2].data()[i]];
        let ed = 1.0 + s * kappa * c * q;
        let et = 1.0 + s * c * mu * q;
        let p0 = rp - (s * kappa * c * q / (eps * ed)) * rd;
        if kn == 0.0 {
            let d = rd / ed;
            out.delta.data_mut()[i] = d;
            out.p.data_mut()[i] = p0;
            for a in 0..3 {
                out.u[a].data_mut()[i] = ru[a] / et;
            }
        } else {
            let kh = [m.kd[0] / kn, m.kd[1] / kn, m.kd[2] / kn];
            let rl = kh[0] * ru[0] + kh[1] * ru[1] + kh[2] * ru[2];
            let a_ll = s * c * (mu * q + (mu + lambda) * kn * kn);
            let coupling = 2.0 - s * kappa * c * q / ed;
            let den = 1.0 + a_ll + s * s * c * kn * kn / (eps * eps) * coupling;
            debug_assert!(den > 0.0);
            let l = (rl - (s * c / eps) * I * kn * p0) / den;
            out.p.data_mut()[i] = p0 - I * kn * (s / eps) * coupling * l;
            out.delta.data_mut()[i] = (rd - s * I * kn * l) / ed;
            for a in 0..3 {
                out.u[a].data_mut()[i] = (ru[a] - kh[a] * rl) / et + kh[a] * l;
            }
        }
        let eh = 1.0 + s * nu * q;
        for a in 0..3 {
            out.h[a].data_mut()[i] = r.h[a].data()[i] / eh;
        }
    });
    spectral::leray_spectra(&mut out.h);
    out
}

/// `F − L* y`, the part of the tendency treated explicitly.
fn explicit_part(y: &StateSpectra, f: &StateSpectra, params: &PhysParams, c: f64) -> StateSpectra {
    let ly = apply_linear(y, params, c);
    let mut n = f.clone();
    for (a, b) in n.parts_mut().into_iter().zip(ly.parts()) {
        a.axpy(-1.0, b);
    }
    n
}

fn finish(out: &StateSpectra, params: &PhysParams, time: f64) -> Result<EpsState> {
    let state = out.to_state(params.theta_bar, time);
    state.check()?;
    Ok(state)
}

/// One first-order IMEX step: the frozen-coefficient singular and diffusive
/// terms are implicit, everything else explicit. `H` is projected after.
pub fn step_imex(state: &EpsState, dt: f64, params: &PhysParams) -> Result<EpsState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::contract(format!("dt must be positive, got {dt}")));
    }
    let c = theta_star(state, params).exp();
    let (y, f) = rhs_spectral(state, params)?;
    let n = explicit_part(&y, &f, params, c);
    let mut r = y;
    for (a, b) in r.parts_mut().into_iter().zip(n.parts()) {
        a.axpy(dt, b);
    }
    finish(&solve_implicit(&r, params, c, dt), params, state.time + dt)
}

#[derive(Debug, Clone)]
struct History {
    y: StateSpectra,
    n: StateSpectra,
    dt: f64,
}

/// Owns the multistep history for IMEX-BDF2; the first step, and any step
/// after a change of `dt` or of the frozen coefficient, falls back to IMEX1.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: PhysParams,
    scheme: Scheme,
    theta_star: Option<f64>,
    history: Option<History>,
}

/// Head room added to the frozen exponent so BDF2 histories survive small
/// temperature excursions.
const THETA_MARGIN: f64 = 0.1;

impl Stepper {
    pub fn new(params: PhysParams, scheme: Scheme) -> Self {
        Self {
            params,
            scheme,
            theta_star: None,
            history: None,
        }
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn reset(&mut self) {
        self.history = None;
        self.theta_star = None;
    }

    pub fn step(&mut self, state: &EpsState, dt: f64) -> Result<EpsState> {
        if self.scheme == Scheme::Imex1 {
            return step_imex(state, dt, &self.params);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::contract(format!("dt must be positive, got {dt}")));
        }
        let needed = theta_star(state, &self.params);
        let ts = match self.theta_star {
            Some(ts) if ts >= needed => ts,
            _ => {
                self.history = None;
                needed + THETA_MARGIN
            }
        };
        self.theta_star = Some(ts);
        let c = ts.exp();
        let params = self.params;
        let (y, f) = rhs_spectral(state, &params)?;
        let n = explicit_part(&y, &f, &params, c);
        let (out, s) = match self.history.take() {
            Some(h) if (h.dt - dt).abs() <= 1e-10 * dt => {
                let mut r = y.clone();
                for ((a, yo), (nn, no)) in r
                    .parts_mut()
                    .into_iter()
                    .zip(h.y.parts())
                    .zip(n.parts().into_iter().zip(h.n.parts()))
                {
                    let mut acc: Spectrum = a.scaled(4.0 / 3.0);
                    acc.axpy(-1.0 / 3.0, yo);
                    acc.axpy(4.0 * dt / 3.0, nn);
                    acc.axpy(-2.0 * dt / 3.0, no);
                    *a = acc;
                }
                (r, 2.0 * dt / 3.0)
            }
            _ => {
                let mut r = y.clone();
                for (a, b) in r.parts_mut().into_iter().zip(n.parts()) {
                    a.axpy(dt, b);
                }
                (r, dt)
            }
        };
        let next = finish(&solve_implicit(&out, &params, c, s), &params, state.time + dt)?;
        self.history = Some(History { y, n, dt });
        Ok(next)
    }
}

/// Implicit damping of the acoustic pair inside a sponge: `p` and the
/// gradient part of `u` relax at the local rate `sigma`.
pub fn apply_acoustic_sponge(state: &EpsState, sigma: &ScalarField, dt: f64) -> EpsState {
    let keep = sigma.map(|s| 1.0 / (1.0 + dt * s));
    let lose = keep.map(|k| 1.0 - k);
    let us = spectral::vector_spectrum(&state.u);
    let div = spectral::div_spectrum(&us);
    let phi = div.inverse_laplacian();
    let g = spectral::grad_spectra(&phi);
    let ugrad = spectral::vector_from_spectra([&g[0], &g[1], &g[2]]);
    let u = &state.u - &ugrad.scale_by(&lose);
    EpsState {
        p: &state.p * &keep,
        u,
        h: state.h.clone(),
        theta: state.theta.clone(),
        time: state.time,
    }
}
