//! The ε-sweep: one compressible run per Mach number from shared data, a
//! limit-solver reference, the convergence quantities and their rates.
//!
//! * `Q1 = (∫_0^T ‖p‖²_{L²(K)} dt)^{1/2}`
//! * `Q2 = (∫_0^T ‖div(2u − κ e^{−εp+θ}∇θ)‖²_{L²(K)} dt)^{1/2}`
//! * `Q3 = sup_t ‖χ_K (curl(e^{−θ}u) − curl(e^{−ϑ}w))‖_{H^{s−2}}`
//!
//! with `K` the central ball and `χ_K` its smooth cutoff.

use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::acoustic::SpongeProfile;
use crate::diagnostics::{self, curl_btu, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::io::checkpoint::{read_checkpoint, write_checkpoint, write_limit_checkpoint};
use crate::io::config::RunConfig;
use crate::io::csv::{self, fmt_f64};
use crate::mhd_eps::{
    apply_acoustic_sponge, cfl_dt, constraint_residual_field, make_initial_data, EpsState, InitMode,
    PhysParams, Stepper,
};
use crate::mhd_limit::{self, step_limit, LimitState};
use crate::norms::{sobolev_norm, LocalMask, TripleNormAccumulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Torus runs from well-prepared data.
    WellPrepared,
    /// Ill-prepared data with the acoustic pair damped in a sponge annulus.
    IllPreparedSponged,
}

impl std::str::FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "well_prepared" => Ok(SweepMode::WellPrepared),
            "ill_prepared_sponged" => Ok(SweepMode::IllPreparedSponged),
            other => Err(format!(
                "unknown sweep mode `{other}` (expected well_prepared or ill_prepared_sponged)"
            )),
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::WellPrepared => "well_prepared",
            SweepMode::IllPreparedSponged => "ill_prepared_sponged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Strictly descending, at least three values.
    pub eps_list: Vec<f64>,
    pub base: RunConfig,
    pub mode: SweepMode,
    pub t_end: f64,
    pub s_report: f64,
    /// Number of equal intervals at whose ends `Q3` is sampled.
    pub samples: usize,
}

impl SweepPlan {
    pub fn new(eps_list: Vec<f64>, base: RunConfig, mode: SweepMode) -> Result<Self> {
        let plan = Self {
            eps_list,
            t_end: base.t_end,
            s_report: base.s,
            mode,
            base,
            samples: 10,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan described entirely by a config with `sweep.eps_list` set.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let list = cfg
            .eps_list
            .clone()
            .ok_or_else(|| Error::contract("sweep needs sweep.eps_list"))?;
        Self::new(list, cfg.clone(), cfg.sweep_mode)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.len() < 3 {
            return Err(Error::contract("eps_list needs at least three values"));
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::contract("eps values must lie in (0, 1]"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::contract("eps_list must be strictly descending"));
        }
        if !(self.t_end > 0.0) || self.samples == 0 {
            return Err(Error::contract("sweep needs T_end > 0 and at least one sample"));
        }
        Ok(())
    }

    fn params(&self, eps: f64) -> Result<PhysParams> {
        Ok(self.base.params()?.with_eps(eps))
    }

    /// Data spec shared by all members: amplitudes fixed at the largest ε
    /// unless the config pins another.
    fn data_spec(&self) -> crate::mhd_eps::InitialDataSpec {
        let mut spec = self.base.init_spec();
        spec.mode = match self.mode {
            SweepMode::WellPrepared => InitMode::WellPrepared,
            SweepMode::IllPreparedSponged => InitMode::IllPrepared,
        };
        spec.norm_eps = Some(spec.norm_eps.unwrap_or(self.eps_list[0]));
        spec
    }

    fn sample_times(&self) -> Vec<f64> {
        (0..=self.samples)
            .map(|k| self.t_end * k as f64 / self.samples as f64)
            .collect()
    }
}

/// Fitted `value ≈ C ε^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub quantity: String,
    pub alpha: f64,
    /// Coefficient of determination of the log-log fit, in `[0, 1]`.
    pub r2: f64,
}

/// Least-squares slope of `ln value` against `ln ε`.
pub fn fit_rate(quantity: &str, series: &[(f64, f64)]) -> Result<RateFit> {
    if series.len() < 3 {
        return Err(Error::contract(format!(
            "{quantity}: rate fit needs at least 3 points, got {}",
            series.len()
        )));
    }
    if let Some((e, v)) = series.iter().find(|(e, v)| !(*e > 0.0 && *v > 0.0)) {
        return Err(Error::contract(format!(
            "{quantity}: rate fit needs positive pairs, got ({e}, {v})"
        )));
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::contract(format!("{quantity}: eps values must differ")));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - alpha * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        quantity: quantity.to_string(),
        alpha,
        r2,
    })
}

/// Fits every value column of a CSV whose first column is `eps`.
pub fn fit_csv(text: &str) -> Result<Vec<RateFit>> {
    let (header, rows) = csv::parse(text);
    if header.first().map(String::as_str) != Some("eps") || header.len() < 2 {
        return Err(Error::contract("rates CSV needs an `eps` column followed by value columns"));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::contract(format!("`{s}` is not a number")))
    };
    let mut fits = Vec::new();
    for (j, name) in header.iter().enumerate().skip(1) {
        let series = rows
            .iter()
            .map(|r| {
                let e = num(r.first().map_or("", String::as_str))?;
                let v = num(r.get(j).map_or("", String::as_str))?;
                Ok((e, v))
            })
            .collect::<Result<Vec<_>>>()?;
        fits.push(fit_rate(name, &series)?);
    }
    Ok(fits)
}

/// Result of one member of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRun {
    pub eps: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub sup_triple: f64,
    pub steps: usize,
    /// Largest relative drift of the reconstructed energy.
    pub energy_drift: f64,
    pub max_div_h: f64,
}

/// Named pass/fail outcome of a sweep assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub plan: SweepPlan,
    pub runs: Vec<EpsRun>,
    pub fits: Vec<RateFit>,
    pub checks: Vec<Check>,
}

impl SweepReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// A sweep in which some member failed; completed members are kept.
#[derive(Debug)]
pub struct SweepError {
    pub partial: Vec<EpsRun>,
    pub failures: Vec<(f64, Error)>,
}

impl fmt::Display for SweepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} of {} sweep runs failed",
            self.failures.len(),
            self.failures.len() + self.partial.len()
        )?;
        for (e, err) in &self.failures {
            write!(f, "\n  eps = {e}: {err}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SweepError {}

impl From<Error> for SweepError {
    fn from(e: Error) -> Self {
        SweepError {
            partial: Vec::new(),
            failures: vec![(f64::NAN, e)],
        }
    }
}

/// `curl(e^{−ϑ}w)` of the limit solution at each sample time, masked.
struct LimitReference {
    masked_curls: Vec<VectorField>,
}

/// Explicit step bound for the limit solver, same form as [`cfl_dt`].
pub fn limit_cfl_dt(state: &LimitState, safety: f64) -> f64 {
    let speed = state.w.max_magnitude() + state.h.max_magnitude() * (0.5 * state.vartheta.max()).exp();
    safety * state.grid().dx() / speed.max(crate::mhd_eps::CFL_FLOOR)
}

/// Splits the remaining time to the next target into equal steps no
/// longer than `dt_cap`.
fn segment_dt(t: f64, target: f64, dt_cap: f64) -> f64 {
    let remaining = target - t;
    let m = (remaining / dt_cap * (1.0 - 1e-12)).ceil().max(1.0);
    remaining / m
}

fn run_limit_reference(plan: &SweepPlan, grid: Grid, mask: &LocalMask) -> Result<LimitReference> {
    let eps_min = *plan.eps_list.last().expect("validated");
    let params = plan.params(eps_min)?;
    let data = make_initial_data(grid, &plan.data_spec(), &params, plan.base.seed)?;
    let mut state = LimitState::from_eps(&data, &params)?;
    let times = plan.sample_times();
    let curl_of = |s: &LimitState| mask.apply_vector(&curl_btu(&s.w, &s.vartheta));
    let mut masked_curls = vec![curl_of(&state)];
    for &target in &times[1..] {
        while state.time < target {
            let cap = limit_cfl_dt(&state, plan.base.dt_safety).min(plan.base.dt_max.unwrap_or(f64::INFINITY));
            let dt = segment_dt(state.time, target, cap);
            state = step_limit(&state, dt, &params)?;
            if (state.time - target).abs() <= 1e-9 * target.max(1.0) {
                state.time = target;
            }
        }
        masked_curls.push(curl_of(&state));
    }
    Ok(LimitReference { masked_curls })
}

/// Time loop shared by sweep members and single runs.
struct Trajectory<'a> {
    params: PhysParams,
    cfg: &'a RunConfig,
    sponge_sigma: Option<ScalarField>,
    mask: LocalMask,
}

struct TrajectoryOut {
    records: Vec<DiagnosticsRecord>,
    final_state: EpsState,
    q1: f64,
    q2: f64,
    q3: f64,
    sup_triple: f64,
    steps: usize,
    energy_drift: f64,
    max_div_h: f64,
}

impl Trajectory<'_> {
    fn dt_cap(&self, state: &EpsState) -> f64 {
        let mut cap = cfl_dt(state, self.cfg.dt_safety);
        if let Some(m) = self.cfg.dt_max {
            cap = cap.min(m);
        }
        if self.sponge_sigma.is_some() {
            // Resolve the acoustic period so the sponge, not the implicit
            // solver, is what removes the waves.
            let c = (2.0 * state.theta.max().exp()).sqrt();
            cap = cap.min(self.cfg.dt_safety * state.grid().dx() * self.params.eps / c);
        }
        cap
    }

    fn run(&self, init: EpsState, times: &[f64], reference: Option<&LimitReference>) -> Result<TrajectoryOut> {
        let p = &self.params;
        let s = self.cfg.s;
        let mut state = init;
        let mut stepper = Stepper::new(*p, self.cfg.scheme);
        let mut acc = TripleNormAccumulator::starting_at(s, *p, &state);
        let e0 = state.reconstructed_energy(p.eps);
        let local = |st: &EpsState| {
            (
                self.mask.l2_sq(&st.p),
                self.mask.l2_sq(&constraint_residual_field(st, p)),
            )
        };
        let q3_at = |st: &EpsState, k: usize| -> f64 {
            reference.map_or(0.0, |r| {
                let d = &self.mask.apply_vector(&curl_btu(&st.u, &st.theta)) - &r.masked_curls[k];
                sobolev_norm(&d, s - 2.0)
            })
        };
        let mut records = vec![diagnostics::measure(&state, p, s, &self.mask, acc.value())];
        let (mut l1, mut l2) = local(&state);
        let (mut i1, mut i2) = (0.0, 0.0);
        let mut q3: f64 = q3_at(&state, 0);
        let mut drift: f64 = 0.0;
        let mut max_div_h = state.div_h_residual();
        let mut steps = 0;
        for (k, &target) in times.iter().enumerate().skip(1) {
            while state.time < target {
                let dt = segment_dt(state.time, target, self.dt_cap(&state));
                let mut next = stepper.step(&state, dt)?;
                if let Some(sigma) = &self.sponge_sigma {
                    next = apply_acoustic_sponge(&next, sigma, dt);
                }
                if (next.time - target).abs() <= 1e-9 * target.max(1.0) {
                    next.time = target;
                }
                let dt = next.time - state.time;
                state = next;
                steps += 1;
                acc.accumulate(&state, dt)?;
                let (n1, n2) = local(&state);
                i1 += 0.5 * dt * (l1 + n1);
                i2 += 0.5 * dt * (l2 + n2);
                (l1, l2) = (n1, n2);
                drift = drift.max(((state.reconstructed_energy(p.eps) - e0) / e0).abs());
                let last = state.time >= *times.last().unwrap();
                if steps % self.cfg.out_every == 0 || last {
                    let rec = diagnostics::measure(&state, p, s, &self.mask, acc.value());
                    max_div_h = max_div_h.max(rec.div_h_res);
                    records.push(rec);
                }
            }
            q3 = q3.max(q3_at(&state, k));
        }
        Ok(TrajectoryOut {
            records,
            final_state: state,
            q1: i1.sqrt(),
            q2: i2.sqrt(),
            q3,
            sup_triple: acc.value(),
            steps,
            energy_drift: drift,
            max_div_h,
        })
    }
}

fn sponge_sigma(cfg: &RunConfig, grid: Grid, eps: f64) -> Result<ScalarField> {
    let (inner, outer) = cfg.sponge_radii();
    Ok(SpongeProfile::new(inner, outer, cfg.sponge_strength / eps)?.sigma(grid))
}

fn run_member(plan: &SweepPlan, grid: Grid, eps: f64, reference: &LimitReference) -> Result<EpsRun> {
    let params = plan.params(eps)?;
    let data = make_initial_data(grid, &plan.data_spec(), &params, plan.base.seed)?;
    let traj = Trajectory {
        params,
        cfg: &plan.base,
        sponge_sigma: match plan.mode {
            SweepMode::IllPreparedSponged => Some(sponge_sigma(&plan.base, grid, eps)?),
            SweepMode::WellPrepared => None,
        },
        mask: LocalMask::new(grid, plan.base.probe_radius())?,
    };
    let out = traj.run(data, &plan.sample_times(), Some(reference))?;
    Ok(EpsRun {
        eps,
        records: out.records,
        q1: out.q1,
        q2: out.q2,
        q3: out.q3,
        sup_triple: out.sup_triple,
        steps: out.steps,
        energy_drift: out.energy_drift,
        max_div_h: out.max_div_h,
    })
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

fn checks_for(plan: &SweepPlan, runs: &[EpsRun], fits: &[RateFit]) -> Vec<Check> {
    let q1: Vec<f64> = runs.iter().map(|r| r.q1).collect();
    let q2: Vec<f64> = runs.iter().map(|r| r.q2).collect();
    let q3: Vec<f64> = runs.iter().map(|r| r.q3).collect();
    let triple: Vec<f64> = runs.iter().map(|r| r.sup_triple).collect();
    let mut checks = vec![
        Check {
            name: "q1_decreasing".into(),
            passed: strictly_decreasing(&q1),
            detail: list(&q1),
        },
        Check {
            name: "q2_decreasing".into(),
            passed: strictly_decreasing(&q2),
            detail: list(&q2),
        },
    ];
    if plan.mode == SweepMode::WellPrepared {
        let max = triple.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = triple.iter().cloned().fold(f64::INFINITY, f64::min);
        let alpha = fits.iter().find(|f| f.quantity == "Q1").map_or(f64::NAN, |f| f.alpha);
        checks.push(Check {
            name: "q1_rate".into(),
            passed: alpha >= 0.8,
            detail: format!("alpha = {alpha:.4}"),
        });
        checks.push(Check {
            name: "q3_decreasing".into(),
            passed: strictly_decreasing(&q3),
            detail: list(&q3),
        });
        checks.push(Check {
            name: "uniform_bound".into(),
            passed: max < 2.0 * min,
            detail: format!("max/min sup triple norm = {:.4}", max / min),
        });
    }
    checks
}

/// Runs every member (in parallel) against one limit reference.
pub fn run_sweep(plan: &SweepPlan) -> std::result::Result<SweepReport, SweepError> {
    plan.validate()?;
    let grid = plan.base.grid()?;
    let mask = LocalMask::new(grid, plan.base.probe_radius())?;
    let reference = run_limit_reference(plan, grid, &mask)?;
    let results: Vec<(f64, Result<EpsRun>)> = plan
        .eps_list
        .par_iter()
        .map(|&e| (e, run_member(plan, grid, e, &reference)))
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (e, r) in results {
        match r {
            Ok(run) => runs.push(run),
            Err(err) => failures.push((e, err)),
        }
    }
    if !failures.is_empty() {
        return Err(SweepError {
            partial: runs,
            failures,
        });
    }
    let mut fits = Vec::new();
    for (name, get) in [
        ("Q1", (|r: &EpsRun| r.q1) as fn(&EpsRun) -> f64),
        ("Q2", |r: &EpsRun| r.q2),
        ("Q3", |r: &EpsRun| r.q3),
    ] {
        let series: Vec<(f64, f64)> = runs.iter().map(|r| (r.eps, get(r))).collect();
        // A quantity at exact zero has no rate; leave it out.
        if let Ok(f) = fit_rate(name, &series) {
            fits.push(f);
        }
    }
    let checks = checks_for(plan, &runs, &fits);
    Ok(SweepReport {
        plan: plan.clone(),
        runs,
        fits,
        checks,
    })
}

/// Directory name of one member's output.
pub fn eps_dir_name(eps: f64) -> String {
    format!("eps_{eps}")
}

/// `dir/eps_<ε>/diag.csv`, `dir/quantities.csv`, `dir/rates.csv` and
/// `dir/summary.txt`.
pub fn write_report(report: &SweepReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for run in &report.runs {
        csv::write_csv(
            &dir.join(eps_dir_name(run.eps)).join("diag.csv"),
            &diagnostics::CSV_HEADER,
            &diagnostics::csv_rows(&run.records),
        )?;
    }
    let rows: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| [r.eps, r.q1, r.q2, r.q3, r.sup_triple].iter().map(|&v| fmt_f64(v)).collect())
        .collect();
    csv::write_csv(
        &dir.join("quantities.csv"),
        &["eps", "Q1", "Q2", "Q3", "sup_triple"],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = report
        .fits
        .iter()
        .map(|f| vec![f.quantity.clone(), fmt_f64(f.alpha), fmt_f64(f.r2)])
        .collect();
    csv::write_csv(&dir.join("rates.csv"), &["quantity", "alpha", "r2"], &rows)?;
    fs::write(dir.join("summary.txt"), summary_text(report))?;
    Ok(())
}

pub fn summary_text(report: &SweepReport) -> String {
    let p = &report.plan;
    let mut s = format!(
        "sweep mode {} | n = {} | L = {} | T = {} | s = {} | seed = {}\n\n",
        p.mode, p.base.n, p.base.box_length, p.t_end, p.s_report, p.base.seed
    );
    s.push_str("eps         steps  Q1          Q2          Q3          sup_triple  energy_drift  max_divH\n");
    for r in &report.runs {
        s.push_str(&format!(
            "{:<10}  {:>5}  {:.4e}  {:.4e}  {:.4e}  {:.4e}  {:.4e}    {:.2e}\n",
            r.eps, r.steps, r.q1, r.q2, r.q3, r.sup_triple, r.energy_drift, r.max_div_h
        ));
    }
    s.push('\n');
    for f in &report.fits {
        s.push_str(&format!("{}: alpha = {:.4}, r2 = {:.4}\n", f.quantity, f.alpha, f.r2));
    }
    s.push('\n');
    for c in &report.checks {
        s.push_str(&format!(
            "{} {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    s
}

/// A single compressible run as described by a config.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: EpsState,
    pub energy_drift: f64,
    pub max_div_h: f64,
}

/// Initial state of a config: its checkpoint if set, generated data
/// otherwise.
pub fn initial_state(cfg: &RunConfig) -> Result<EpsState> {
    let grid = cfg.grid()?;
    match &cfg.checkpoint {
        Some(path) => read_checkpoint(path, Some(grid)),
        None => make_initial_data(grid, &cfg.init_spec(), &cfg.params()?, cfg.seed),
    }
}

pub fn run_single(cfg: &RunConfig) -> Result<SingleRun> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let init = initial_state(cfg)?;
    let t0 = init.time;
    let sponged = cfg.sweep_mode == SweepMode::IllPreparedSponged && cfg.init_mode == InitMode::IllPrepared;
    let traj = Trajectory {
        params,
        cfg,
        sponge_sigma: if sponged { Some(sponge_sigma(cfg, grid, params.eps)?) } else { None },
        mask: LocalMask::new(grid, cfg.probe_radius())?,
    };
    let out = traj.run(init, &[t0, t0 + cfg.t_end], None)?;
    Ok(SingleRun {
        records: out.records,
        final_state: out.final_state,
        energy_drift: out.energy_drift,
        max_div_h: out.max_div_h,
    })
}

/// Writes `dir/diag.csv` and `dir/final.mlim`.
pub fn write_single(run: &SingleRun, dir: &Path) -> Result<()> {
    csv::write_csv(
        &dir.join("diag.csv"),
        &diagnostics::CSV_HEADER,
        &diagnostics::csv_rows(&run.records),
    )?;
    write_checkpoint(&run.final_state, &dir.join("final.mlim"))
}

pub const LIMIT_CSV_HEADER: [&str; 5] = ["t", "kinetic_energy", "constraint_res", "divh_res", "Hs_w"];

/// Limit solver alone, from a limit checkpoint or from projected data.
/// Returns CSV rows and the final state.
pub fn run_limit(cfg: &RunConfig) -> Result<(Vec<Vec<String>>, LimitState)> {
    let grid = cfg.grid()?;
    let params = cfg.params()?;
    let mut state = match &cfg.checkpoint {
        Some(path) => crate::io::checkpoint::read_limit_checkpoint(path, Some(grid))?,
        None => LimitState::from_eps(&make_initial_data(grid, &cfg.init_spec(), &params, cfg.seed)?, &params)?,
    };
    let row = |s: &LimitState| -> Vec<String> {
        [
            s.time,
            s.kinetic_energy(),
            mhd_limit::constraint_residual(s, &params).l2_norm(),
            crate::spectral::div(&s.h).l2_norm(),
            sobolev_norm(&s.w, cfg.s),
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect()
    };
    let mut rows = vec![row(&state)];
    let end = state.time + cfg.t_end;
    let mut steps = 0;
    while state.time < end {
        let cap = limit_cfl_dt(&state, cfg.dt_safety).min(cfg.dt_max.unwrap_or(f64::INFINITY));
        let dt = segment_dt(state.time, end, cap);
        state = step_limit(&state, dt, &params)?;
        steps += 1;
        if steps % cfg.out_every == 0 || state.time >= end - 1e-12 {
            rows.push(row(&state));
        }
    }
    Ok((rows, state))
}

pub fn write_limit(rows: &[Vec<String>], state: &LimitState, dir: &Path) -> Result<()> {
    csv::write_csv(&dir.join("limit.csv"), &LIMIT_CSV_HEADER, rows)?;
    write_limit_checkpoint(state, &dir.join("limit_final.mlim"))
}
