//! The Mach-number-scaled compressible MHD system in the variables
//! `(p, u, H, θ)`: log-pressure fluctuation, scaled velocity, scaled
//! magnetic field and log-temperature, with time measured on the slow scale.
//!
//! ```text
//! ∂t p + u·∇p + (1/ε) div(2u − κ e^{−εp+θ} ∇θ) = ε e^{−εp}[ν|curl H|² + Ψ(u):∇u] + κ e^{−εp+θ} ∇p·∇θ
//! e^{−θ}(∂t u + u·∇u) + ∇p/ε                   = e^{−εp}[(curl H)×H + div Ψ(u)]
//! ∂t H − curl(u×H) − ν ΔH                      = 0,   div H = 0
//! ∂t θ + u·∇θ + div u                          = ε² e^{−εp}[ν|curl H|² + Ψ(u):∇u] + κ e^{−εp} div(e^θ ∇θ)
//! ```
//!
//! with `Ψ(u) = 2μ D(u) + λ (div u) I`.

mod init;
mod rhs;
mod stepper;

pub use init::{central_bump, make_initial_data, InitMode, InitialDataSpec};
pub use rhs::{constraint_residual_field, rhs_full};
pub use stepper::{apply_acoustic_sponge, cfl_dt, step_imex, Scheme, Stepper, CFL_FLOOR};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral;

/// Guard on `|θ|`; beyond it `e^θ` is treated as blow-up.
pub const THETA_LIMIT: f64 = 20.0;

/// Constant transport coefficients and the Mach number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub kappa: f64,
    pub theta_bar: f64,
}

impl PhysParams {
    pub fn new(eps: f64, mu: f64, lambda: f64, nu: f64, kappa: f64, theta_bar: f64) -> Result<Self> {
        let p = Self {
            eps,
            mu,
            lambda,
            nu,
            kappa,
            theta_bar,
        };
        let problems = p.violations();
        if problems.is_empty() {
            Ok(p)
        } else {
            let msgs: Vec<String> = problems.into_iter().map(|(_, m)| m).collect();
            Err(Error::contract(msgs.join("; ")))
        }
    }

    /// Violated constraints as `(parameter, message)`, empty when valid.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            v.push(("eps", format!("0 < eps <= 1 (got {})", self.eps)));
        }
        if !(self.mu > 0.0) {
            v.push(("mu", format!("mu > 0 (got {})", self.mu)));
        }
        if !(2.0 * self.mu + 3.0 * self.lambda > 0.0) {
            v.push((
                "lambda",
                format!("2*mu + 3*lambda > 0 (got {})", 2.0 * self.mu + 3.0 * self.lambda),
            ));
        }
        if !(self.nu > 0.0) {
            v.push(("nu", format!("nu > 0 (got {})", self.nu)));
        }
        if !(self.kappa > 0.0) {
            v.push(("kappa", format!("kappa > 0 (got {})", self.kappa)));
        }
        if !(self.theta_bar > 0.0 && self.theta_bar.is_finite()) {
            v.push(("theta_bar", format!("theta_bar > 0 (got {})", self.theta_bar)));
        }
        v
    }

    pub fn with_eps(self, eps: f64) -> Self {
        Self { eps, ..self }
    }
}

/// Unknowns of the scaled system at one (slow) time.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsState {
    pub p: ScalarField,
    pub u: VectorField,
    pub h: VectorField,
    pub theta: ScalarField,
    pub time: f64,
}

impl EpsState {
    /// The constant state `p = 0, u = 0, H = 0, θ = θ̄`.
    pub fn equilibrium(grid: Grid, theta_bar: f64) -> Self {
        Self {
            p: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            h: VectorField::zeros(grid),
            theta: ScalarField::constant(grid, theta_bar),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.p.grid()
    }

    pub fn check(&self) -> Result<()> {
        let g = self.grid();
        if !(self.u.grid().same_shape(&g)
            && self.h.grid().same_shape(&g)
            && self.theta.grid().same_shape(&g))
        {
            return Err(Error::contract("state fields live on different grids"));
        }
        self.p.check_finite("p")?;
        self.u.check_finite("u")?;
        self.h.check_finite("H")?;
        self.theta.check_finite("theta")?;
        let tmax = self.theta.max_abs();
        if tmax > THETA_LIMIT {
            return Err(Error::numerical(
                "theta",
                format!("|theta| reached {tmax:.3e}, exp(theta) overflow guard is {THETA_LIMIT}"),
            ));
        }
        Ok(())
    }

    /// Total energy of the unscaled flow, `∫ ρ(e + |u|²/2) + |H|²/2`, with
    /// `ρe = P = e^{εp}`, `ρ = e^{εp−θ}`, physical velocity `εu` and
    /// physical field `εH`.
    pub fn reconstructed_energy(&self, eps: f64) -> f64 {
        let u2 = self.u.norm_sq();
        let h2 = self.h.norm_sq();
        let e2 = 0.5 * eps * eps;
        let dv = self.grid().cell_volume();
        (0..self.grid().len())
            .map(|i| {
                let (p, t) = (self.p.values()[i], self.theta.values()[i]);
                (eps * p).exp() * (1.0 + e2 * (-t).exp() * u2.values()[i]) + e2 * h2.values()[i]
            })
            .sum::<f64>()
            * dv
    }

    /// `‖div H‖_{L²}`.
    pub fn div_h_residual(&self) -> f64 {
        spectral::div(&self.h).l2_norm()
    }
}

/// Time derivatives of the four unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendencies {
    pub dp: ScalarField,
    pub du: VectorField,
    pub dh: VectorField,
    pub dtheta: ScalarField,
}
