//! The singular wave equation `ε² ∂t(a ∂t v) − div(b ∇v) = c` with frozen
//! coefficients, a sponge annulus standing in for radiation to infinity, and
//! probes of the energy left near the origin.

use crate::elliptic::pcg;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::norms::{smooth_step, LocalMask};
use crate::spectral::{self, Spectrum};

/// Largest `ω dt` for which velocity Verlet is stable is 2; with the
/// largest derivative wavenumber below `√3 π/Δx` this gives the factor in
/// [`wave_cfl_dt`].
pub const LEAPFROG_SAFETY: f64 = 0.367_552_596_947_861; // 2 / (π √3)

/// Floor on the coefficients.
pub const COEF_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub v: ScalarField,
    pub vt: ScalarField,
    pub a_coef: ScalarField,
    pub b_coef: ScalarField,
    pub eps: f64,
    pub time: f64,
}

impl WaveState {
    pub fn new(v: ScalarField, vt: ScalarField, a_coef: ScalarField, b_coef: ScalarField, eps: f64) -> Result<Self> {
        let g = v.grid();
        if vt.grid() != g || a_coef.grid() != g || b_coef.grid() != g {
            return Err(Error::contract("wave fields live on different grids"));
        }
        if !(a_coef.min() > COEF_FLOOR && b_coef.min() > COEF_FLOOR) {
            return Err(Error::contract(format!(
                "wave coefficients must exceed {COEF_FLOOR} (min a {}, min b {})",
                a_coef.min(),
                b_coef.min()
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::contract("eps must be positive"));
        }
        Ok(Self {
            v,
            vt,
            a_coef,
            b_coef,
            eps,
            time: 0.0,
        })
    }

    pub fn grid(&self) -> Grid {
        self.v.grid()
    }
}

/// Damping annulus `inner ≤ |x − x_c| ≤ outer`, constant beyond `outer`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpongeProfile {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub strength: f64,
}

impl SpongeProfile {
    pub fn new(inner_radius: f64, outer_radius: f64, strength: f64) -> Result<Self> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius) {
            return Err(Error::contract(format!(
                "sponge radii must satisfy 0 < inner < outer (got {inner_radius}, {outer_radius})"
            )));
        }
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::contract(format!("sponge strength must be >= 0 (got {strength})")));
        }
        Ok(Self {
            inner_radius,
            outer_radius,
            strength,
        })
    }

    /// No damping anywhere.
    pub fn off() -> Self {
        Self {
            inner_radius: f64::INFINITY,
            outer_radius: f64::INFINITY,
            strength: 0.0,
        }
    }

    pub fn is_off(&self) -> bool {
        self.strength == 0.0
    }

    pub fn with_strength(self, strength: f64) -> Self {
        Self { strength, ..self }
    }

    /// Damping rate `σ(x)`, ramping smoothly from 0 at the inner radius to
    /// `strength` at the outer one.
    pub fn sigma(&self, grid: Grid) -> ScalarField {
        if self.is_off() {
            return ScalarField::zeros(grid);
        }
        let c = grid.center();
        let width = self.outer_radius - self.inner_radius;
        ScalarField::from_fn(grid, |x, y, z| {
            let r = ((x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2)).sqrt();
            self.strength * smooth_step((r - self.inner_radius) / width)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveScheme {
    /// Velocity Verlet; needs `dt <= wave_cfl_dt`.
    Leapfrog,
    /// Trapezoidal rule, one PCG solve per step.
    Trapezoidal,
}

/// Largest stable explicit step, `ε Δx (2/(π√3)) √(min a / max b)`.
pub fn wave_cfl_dt(state: &WaveState) -> f64 {
    state.eps * state.grid().dx() * LEAPFROG_SAFETY * (state.a_coef.min() / state.b_coef.max()).sqrt()
}

/// `div(b ∇v)` with spectral derivatives and no filtering, so the
/// operator stays symmetric.
fn div_b_grad(b: &ScalarField, v: &ScalarField) -> ScalarField {
    let s = Spectrum::of(v);
    let g = spectral::grad_spectra(&s);
    let gv = spectral::inverse_all(&[&g[0], &g[1], &g[2]]);
    let flux: Vec<ScalarField> = gv.iter().map(|c| c * b).collect();
    let fs = spectral::forward_all(&[&flux[0], &flux[1], &flux[2]]);
    spectral::div_spectrum(&[fs[0].clone(), fs[1].clone(), fs[2].clone()]).to_field()
}

/// `∫ b |∇v|²`.
fn potential(b: &ScalarField, v: &ScalarField) -> f64 {
    -div_b_grad(b, v).inner(v)
}

/// `∫ (ε² a vt² + b |∇v|²)`.
pub fn total_energy(state: &WaveState) -> f64 {
    let kin = (&(&state.vt * &state.vt) * &state.a_coef).integral() * state.eps * state.eps;
    kin + potential(&state.b_coef, &state.v)
}

/// The quadratic invariant of velocity Verlet at step `dt`:
/// `total_energy − (dt²/4) ∫ |div(b∇v)|² / (ε² a)`. Exactly conserved by
/// the undamped leapfrog scheme with zero forcing.
pub fn discrete_energy(state: &WaveState, dt: f64) -> f64 {
    let kv = div_b_grad(&state.b_coef, &state.v);
    let e2 = state.eps * state.eps;
    let corr = kv
        .zip_map(&state.a_coef, |k, a| k * k / (e2 * a))
        .integral();
    total_energy(state) - 0.25 * dt * dt * corr
}

/// Stepper with the damping field and scheme fixed for a run.
#[derive(Debug, Clone)]
pub struct WaveSolver {
    sigma: ScalarField,
    scheme: WaveScheme,
}

impl WaveSolver {
    pub fn new(grid: Grid, sponge: &SpongeProfile, scheme: WaveScheme) -> Self {
        Self {
            sigma: sponge.sigma(grid),
            scheme,
        }
    }

    pub fn sigma(&self) -> &ScalarField {
        &self.sigma
    }

    fn damp(&self, vt: &ScalarField, tau: f64) -> ScalarField {
        vt.zip_map(&self.sigma, |x, s| x * (1.0 - 0.5 * s * tau) / (1.0 + 0.5 * s * tau))
    }

    /// Half a step of damping, the undamped step, another half of damping.
    pub fn step(&self, state: &WaveState, dt: f64, forcing: &ScalarField) -> Result<WaveState> {
        if !(dt > 0.0) {
            return Err(Error::contract(format!("dt must be positive, got {dt}")));
        }
        let e2 = state.eps * state.eps;
        let (a, b) = (&state.a_coef, &state.b_coef);
        let vt0 = self.damp(&state.vt, 0.5 * dt);
        let (v, vt) = match self.scheme {
            WaveScheme::Leapfrog => {
                let limit = wave_cfl_dt(state);
                if dt > limit * (1.0 + 1e-12) {
                    return Err(Error::contract(format!(
                        "explicit wave step {dt:e} exceeds the stability limit {limit:e}"
                    )));
                }
                let accel = |v: &ScalarField| {
                    (&div_b_grad(b, v) + forcing).zip_map(a, |f, a| f / (e2 * a))
                };
                let mut half = vt0;
                half.axpy(0.5 * dt, &accel(&state.v));
                let mut v = state.v.clone();
                v.axpy(dt, &half);
                let mut vt = half;
                vt.axpy(0.5 * dt, &accel(&v));
                (v, vt)
            }
            WaveScheme::Trapezoidal => {
                // (M + dt²/4 K) v' = M v + dt M vt − dt²/4 K v + dt²/2 c,
                // with M = ε²a and K = −div(b∇·).
                let m = a * e2;
                let q = 0.25 * dt * dt;
                let kv = -&div_b_grad(b, &state.v);
                let mut rhs = &m * &(&state.v + &(&vt0 * dt));
                rhs.axpy(-q, &kv);
                rhs.axpy(2.0 * q, forcing);
                let (m_ref, b_ref) = (m.mean(), b.mean());
                let apply = |x: &ScalarField| {
                    let mut y = &m * x;
                    y.axpy(-q, &div_b_grad(b, x));
                    y
                };
                let precondition = |r: &ScalarField| {
                    Spectrum::of(r)
                        .map_modes(|md, c| c / (m_ref + q * b_ref * md.kd_sq()))
                        .to_field()
                };
                let out = pcg(apply, precondition, &rhs, Some(&state.v), 1e-12, 500)?;
                let v = out.solution;
                let vt = &(&(&v - &state.v) * (2.0 / dt)) - &vt0;
                (v, vt)
            }
        };
        let vt = self.damp(&vt, 0.5 * dt);
        v.check_finite("v")?;
        vt.check_finite("vt")?;
        Ok(WaveState {
            v,
            vt,
            time: state.time + dt,
            ..state.clone()
        })
    }
}

/// One step with a freshly built damping field; use [`WaveSolver`] in loops.
pub fn step_wave(
    state: &WaveState,
    dt: f64,
    forcing: &ScalarField,
    sponge: &SpongeProfile,
    scheme: WaveScheme,
) -> Result<WaveState> {
    WaveSolver::new(state.grid(), sponge, scheme).step(state, dt, forcing)
}

/// `∫ χ_R |v|²` for a cached smooth cutoff of the ball of radius `R`.
#[derive(Debug, Clone)]
pub struct LocalProbe {
    mask: LocalMask,
}

impl LocalProbe {
    pub fn new(grid: Grid, radius: f64) -> Result<Self> {
        Ok(Self {
            mask: LocalMask::new(grid, radius)?,
        })
    }

    /// Rejects a probe that reaches into the sponge.
    pub fn inside(grid: Grid, radius: f64, sponge: &SpongeProfile) -> Result<Self> {
        if !sponge.is_off() && radius >= sponge.inner_radius {
            return Err(Error::contract(format!(
                "probe radius {radius} must be below the sponge radius {}",
                sponge.inner_radius
            )));
        }
        Self::new(grid, radius)
    }

    pub fn radius(&self) -> f64 {
        self.mask.radius()
    }

    /// `∫ χ dx`, the probe of `v ≡ 1`.
    pub fn volume(&self) -> f64 {
        self.mask.volume()
    }

    pub fn energy(&self, state: &WaveState) -> f64 {
        self.mask.l2_sq(&state.v)
    }
}

/// `∫ χ_R |v|²`.
pub fn local_energy(state: &WaveState, radius: f64) -> Result<f64> {
    Ok(LocalProbe::new(state.grid(), radius)?.energy(state))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefProfile {
    /// `b = e^{θ̄}`.
    Uniform,
    /// `b = e^{θ̄ + β bump}`, a localized temperature perturbation.
    Bump,
}

impl std::str::FromStr for CoefProfile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(CoefProfile::Uniform),
            "bump" => Ok(CoefProfile::Bump),
            other => Err(format!("unknown profile `{other}` (expected uniform or bump)")),
        }
    }
}

impl std::fmt::Display for CoefProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CoefProfile::Uniform => "uniform",
            CoefProfile::Bump => "bump",
        })
    }
}

/// A decay run: a Gaussian pulse at rest in the centre, `a = 1/2`, `b` per
/// profile, no forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayPlan {
    pub n: usize,
    pub box_length: f64,
    pub eps_list: Vec<f64>,
    pub profile: CoefProfile,
    pub sponge: bool,
    /// End time in slow units.
    pub t_end: f64,
    pub theta_bar: f64,
    /// Amplitude of the temperature bump in `b`.
    pub bump_amplitude: f64,
    /// Sponge strength at `ε = 1`; the run uses `strength / ε` so the
    /// absorption keeps pace with the `1/ε` wave speed.
    pub sponge_strength: f64,
    /// Fraction of [`wave_cfl_dt`] used.
    pub cfl_fraction: f64,
    /// Samples per run written to the series.
    pub samples: usize,
    pub scheme: WaveScheme,
}

impl DecayPlan {
    pub fn new(n: usize, box_length: f64, eps_list: Vec<f64>) -> Self {
        Self {
            n,
            box_length,
            eps_list,
            profile: CoefProfile::Bump,
            sponge: true,
            t_end: 0.5,
            theta_bar: 1.0,
            bump_amplitude: 0.5,
            sponge_strength: 4.0,
            cfl_fraction: 0.9,
            samples: 50,
            scheme: WaveScheme::Leapfrog,
        }
    }

    pub fn sponge_profile(&self, eps: f64) -> SpongeProfile {
        if self.sponge {
            SpongeProfile {
                inner_radius: 0.3 * self.box_length,
                outer_radius: 0.5 * self.box_length,
                strength: self.sponge_strength / eps,
            }
        } else {
            SpongeProfile::off()
        }
    }

    pub fn probe_radius(&self) -> f64 {
        0.2 * self.box_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub eps: f64,
    pub t: f64,
    pub local_energy: f64,
    pub total_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRun {
    pub eps: f64,
    pub samples: Vec<DecaySample>,
    /// `(1/T) ∫_0^T local_energy dt`, trapezoidal over every step.
    pub mean_local_energy: f64,
}

/// Initial data shared by every member of a decay plan.
pub fn decay_initial_state(plan: &DecayPlan, eps: f64) -> Result<WaveState> {
    let grid = Grid::new(plan.n, plan.box_length)?;
    let c = grid.center();
    let width = 0.06 * plan.box_length;
    let v = ScalarField::from_fn(grid, |x, y, z| {
        let r2 = (x - c[0]).powi(2) + (y - c[1]).powi(2) + (z - c[2]).powi(2);
        (-r2 / (width * width)).exp()
    });
    let b = match plan.profile {
        CoefProfile::Uniform => ScalarField::constant(grid, plan.theta_bar.exp()),
        CoefProfile::Bump => {
            let bump = crate::mhd_eps::central_bump(grid, 0.25 * plan.box_length);
            bump.map(|s| (plan.theta_bar + plan.bump_amplitude * s).exp())
        }
    };
    WaveState::new(
        v,
        ScalarField::zeros(grid),
        ScalarField::constant(grid, 0.5),
        b,
        eps,
    )
}

/// Runs one member of a decay plan.
pub fn run_decay(plan: &DecayPlan, eps: f64) -> Result<DecayRun> {
    if !(plan.t_end > 0.0) {
        return Err(Error::contract(format!("decay run needs T > 0 (got {})", plan.t_end)));
    }
    let mut state = decay_initial_state(plan, eps)?;
    let grid = state.grid();
    let sponge = plan.sponge_profile(eps);
    let probe = LocalProbe::inside(grid, plan.probe_radius(), &sponge)?;
    let solver = WaveSolver::new(grid, &sponge, plan.scheme);
    let forcing = ScalarField::zeros(grid);
    let dt_target = plan.cfl_fraction * wave_cfl_dt(&state);
    let steps = (plan.t_end / dt_target).ceil().max(1.0) as usize;
    let dt = plan.t_end / steps as f64;
    let every = (steps / plan.samples.max(1)).max(1);
    let mut samples = Vec::new();
    let mut le = probe.energy(&state);
    samples.push(DecaySample {
        eps,
        t: 0.0,
        local_energy: le,
        total_energy: total_energy(&state),
    });
    let mut integral = 0.0;
    for k in 1..=steps {
        state = solver.step(&state, dt, &forcing)?;
        state.time = k as f64 * dt;
        let next = probe.energy(&state);
        integral += 0.5 * dt * (le + next);
        le = next;
        if k % every == 0 || k == steps {
            samples.push(DecaySample {
                eps,
                t: state.time,
                local_energy: le,
                total_energy: total_energy(&state),
            });
        }
    }
    Ok(DecayRun {
        eps,
        samples,
        mean_local_energy: integral / plan.t_end,
    })
}

/// Every member of the plan, in parallel; results in plan order.
pub fn run_decay_plan(plan: &DecayPlan) -> Result<Vec<DecayRun>> {
    use rayon::prelude::*;
    plan.eps_list.par_iter().map(|&e| run_decay(plan, e)).collect()
}
