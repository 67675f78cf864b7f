use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rhs::constraint_residual_field;
use super::{EpsState, PhysParams};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::norms::data_norm;
use crate::spectral::{self, random_band_limited, random_band_limited_vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// `p = O(ε)` and the limit constraint holds at `t = 0`.
    WellPrepared,
    /// `O(1)` acoustic components.
    IllPrepared,
}

impl std::str::FromStr for InitMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "well_prepared" => Ok(InitMode::WellPrepared),
            "ill_prepared" => Ok(InitMode::IllPrepared),
            other => Err(format!(
                "unknown init mode `{other}` (expected well_prepared or ill_prepared)"
            )),
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitMode::WellPrepared => "well_prepared",
            InitMode::IllPrepared => "ill_prepared",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDataSpec {
    pub mode: InitMode,
    /// Bound on the composite data norm; the constructor aims at `0.9 L0`.
    pub l0: f64,
    /// Largest Euclidean mode index of the random fields.
    pub band: f64,
    /// Support radius of the temperature bump around the box centre.
    pub theta_radius: f64,
    /// Fraction of the norm budget given to `θ − θ̄`.
    pub theta_share: f64,
    /// Sobolev index of the data norm.
    pub norm_s: f64,
    /// Mach number at which the data norm is measured; `None` means the run's
    /// own ε. Sweeps set it to their largest ε so every member gets the same
    /// amplitudes.
    pub norm_eps: Option<f64>,
}

impl InitialDataSpec {
    pub fn new(mode: InitMode, l0: f64, band: f64, theta_radius: f64) -> Self {
        Self {
            mode,
            l0,
            band,
            theta_radius,
            theta_share: 0.5,
            norm_s: 4.0,
            norm_eps: None,
        }
    }

    fn validate(&self, grid: Grid) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.l0 > 0.0) {
            bad.push(format!("L0 must be positive (got {})", self.l0));
        }
        if !(self.band >= 1.0) {
            bad.push(format!("band must be at least 1 (got {})", self.band));
        }
        if self.band > grid.dealias_cutoff() as f64 {
            bad.push(format!(
                "band {} exceeds the dealias cutoff {}",
                self.band,
                grid.dealias_cutoff()
            ));
        }
        if !(self.theta_radius > 0.0 && self.theta_radius <= 0.5 * grid.box_length()) {
            bad.push(format!(
                "theta radius must lie in (0, L/2] (got {})",
                self.theta_radius
            ));
        }
        if !(0.0..=1.0).contains(&self.theta_share) {
            bad.push(format!("theta share must lie in [0, 1] (got {})", self.theta_share));
        }
        if let Some(e) = self.norm_eps {
            if !(e > 0.0 && e <= 1.0) {
                bad.push(format!("norm eps must lie in (0, 1] (got {e})"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::contract(bad.join("; ")))
        }
    }
}

/// Dealiased `C^∞` bump of unit height supported in the ball of radius `r`
/// around the box centre.
pub fn central_bump(grid: Grid, r: f64) -> ScalarField {
    let c = grid.center();
    let raw = ScalarField::from_fn(grid, |x, y, z| {
        let s = ((x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2)).sqrt() / r;
        if s < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    });
    let smooth = spectral::dealias_scalar(&raw);
    let peak = smooth.max_abs();
    smooth.map(|v| v / peak)
}

struct Ingredients {
    p: ScalarField,
    u: VectorField,
    h: VectorField,
    bump: ScalarField,
}

fn assemble(ing: &Ingredients, mode: InitMode, params: &PhysParams, alpha: f64, beta: f64) -> EpsState {
    let theta = ing.bump.map(|b| params.theta_bar + beta * b);
    let mut state = EpsState {
        p: &ing.p * alpha,
        u: &ing.u * alpha,
        h: &ing.h * alpha,
        theta,
        time: 0.0,
    };
    if mode == InitMode::WellPrepared {
        state.p = &state.p * params.eps;
        // u − ∇φ with 2Δφ = div(2u − κ e^{−εp+θ}∇θ).
        let res = constraint_residual_field(&state, params);
        let phi = spectral::inverse_laplacian(&res).map(|v| 0.5 * v);
        state.u = &state.u - &spectral::grad(&phi);
    }
    state
}

/// Random band-limited data with a localized temperature bump, rescaled so
/// the composite data norm sits at `0.9 L0`. Same seed, same state.
pub fn make_initial_data(
    grid: Grid,
    spec: &InitialDataSpec,
    params: &PhysParams,
    seed: u64,
) -> Result<EpsState> {
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_band_limited(grid, spec.band, &mut rng);
    let u = random_band_limited_vector(grid, spec.band, &mut rng);
    let h = spectral::leray_project(&random_band_limited_vector(grid, spec.band, &mut rng));
    let ing = Ingredients {
        p,
        u,
        h,
        bump: central_bump(grid, spec.theta_radius),
    };
    let norm_params = params.with_eps(spec.norm_eps.unwrap_or(params.eps));
    let target = 0.9 * spec.l0;
    let measure = |alpha: f64, beta: f64| {
        // Amplitudes are fixed at the norm's ε; the build uses the run's ε.
        let at_norm = assemble(&ing, spec.mode, &norm_params, alpha, beta);
        data_norm(&at_norm, &norm_params, spec.norm_s)
    };
    let a = measure(1.0, 0.0);
    let b = measure(0.0, 1.0);
    let alpha0 = if a > 0.0 { (1.0 - spec.theta_share) * target / a } else { 0.0 };
    let beta0 = if b > 0.0 { spec.theta_share * target / b } else { 0.0 };

    // Secant search for the common factor that lands on the target.
    let f = |g: f64| measure(g * alpha0, g * beta0) - target;
    let (mut g0, mut f0) = (1.0, f(1.0));
    let mut g1 = target / (f0 + target);
    let mut f1 = f(g1);
    for _ in 0..30 {
        if f1.abs() <= 1e-9 * target || f1 == f0 {
            break;
        }
        let g2 = g1 - f1 * (g1 - g0) / (f1 - f0);
        (g0, f0) = (g1, f1);
        g1 = g2;
        f1 = f(g1);
    }
    if !(f1.abs() <= 1e-3 * target) {
        return Err(Error::Convergence {
            iterations: 30,
            residual: f1.abs() / target,
        });
    }
    let state = assemble(&ing, spec.mode, params, g1 * alpha0, g1 * beta0);
    state.check()?;
    Ok(state)
}
