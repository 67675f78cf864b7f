use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use machlim::acoustic::{run_decay_plan, CoefProfile, DecayPlan};
use machlim::experiments::{self, SweepMode, SweepPlan};
use machlim::grid::Grid;
use machlim::identities;
use machlim::io::config::{load_config, RunConfig};
use machlim::io::csv::{self, fmt_f64};
use machlim::mhd_limit::CONSTRAINT_TOL;

const IDENTITY_THRESHOLD: f64 = 1e-10;
const DIV_H_TOL: f64 = 1e-10;
const ENERGY_DRIFT_TOL: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "machlim", version, about = "Low Mach number MHD solvers and convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One compressible run; writes diag.csv and final.mlim under out.dir.
    Run { config: PathBuf },
    /// The ε-sweep described by a config with sweep.eps_list set.
    Sweep { plan: PathBuf },
    /// The incompressible limit solver alone.
    Limit { config: PathBuf },
    /// Local energy decay of the variable-coefficient wave equation.
    Acoustic {
        #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
        eps_list: Vec<f64>,
        #[arg(long, default_value = "bump")]
        profile: CoefProfile,
        #[arg(long, default_value = "on", value_parser = on_off)]
        sponge: bool,
        #[arg(long = "T", default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long = "L", default_value_t = 2.0 * std::f64::consts::PI)]
        box_length: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The vector identity suite on random band-limited fields.
    Identities {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Fits value ≈ C ε^α for each column of a CSV whose first column is eps.
    Rates { csv: PathBuf },
}

fn on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}

fn verdict(ok: bool, what: &str) -> bool {
    eprintln!("{} {what}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cfg: &RunConfig) -> Result<bool> {
    let r = experiments::run_single(cfg)?;
    experiments::write_single(&r, &cfg.out_dir)?;
    let mut ok = verdict(r.max_div_h <= DIV_H_TOL, &format!("div H residual {:.3e}", r.max_div_h));
    if cfg.sweep_mode != SweepMode::IllPreparedSponged {
        ok &= verdict(
            r.energy_drift <= ENERGY_DRIFT_TOL,
            &format!("energy drift {:.3e}", r.energy_drift),
        );
    }
    Ok(ok)
}

fn sweep(cfg: &RunConfig) -> Result<bool> {
    let plan = SweepPlan::from_config(cfg)?;
    let report = match experiments::run_sweep(&plan) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return Err(anyhow::anyhow!("sweep aborted after {} completed runs", e.partial.len()));
        }
    };
    experiments::write_report(&report, &cfg.out_dir)?;
    print!("{}", experiments::summary_text(&report));
    Ok(report.all_passed())
}

fn limit(cfg: &RunConfig) -> Result<bool> {
    let (rows, state) = experiments::run_limit(cfg)?;
    experiments::write_limit(&rows, &state, &cfg.out_dir)?;
    let worst = rows
        .iter()
        .map(|r| r[2].parse::<f64>().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    Ok(verdict(worst <= CONSTRAINT_TOL, &format!("limit constraint residual {worst:.3e}")))
}

fn acoustic(plan: &DecayPlan, out: Option<&Path>) -> Result<bool> {
    let runs = run_decay_plan(plan)?;
    let rows: Vec<Vec<String>> = runs
        .iter()
        .flat_map(|r| &r.samples)
        .map(|s| vec![fmt_f64(s.eps), fmt_f64(s.t), fmt_f64(s.local_energy), fmt_f64(s.total_energy)])
        .collect();
    emit(&csv::render(&["eps", "t", "local_energy", "total_energy"], &rows), out)?;
    if !plan.sponge {
        return Ok(true);
    }
    let means: Vec<f64> = runs.iter().map(|r| r.mean_local_energy).collect();
    let ok = means.windows(2).all(|w| w[1] < w[0]);
    let listed: Vec<String> = means.iter().map(|m| format!("{m:.4e}")).collect();
    Ok(verdict(ok, &format!("mean local energy decreasing: {}", listed.join(", "))))
}

fn identity_suite(n: usize, samples: usize, seed: u64) -> Result<bool> {
    let cases = identities::run_suite(Grid::new(n, 2.0 * std::f64::consts::PI)?, samples, seed)?;
    let rows: Vec<Vec<String>> = cases
        .iter()
        .map(|c| {
            vec![
                c.name.as_str().to_string(),
                fmt_f64(c.residual_norm),
                fmt_f64(c.input_norm),
                if c.passes(IDENTITY_THRESHOLD) { "pass" } else { "fail" }.to_string(),
            ]
        })
        .collect();
    print!("{}", csv::render(&["name", "residual", "input_norm", "pass"], &rows));
    Ok(cases.iter().all(|c| c.passes(IDENTITY_THRESHOLD)))
}

fn rates(path: &Path) -> Result<bool> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let fits = experiments::fit_csv(&text)?;
    let rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| vec![f.quantity.clone(), fmt_f64(f.alpha), fmt_f64(f.r2)])
        .collect();
    print!("{}", csv::render(&["quantity", "alpha", "r2"], &rows));
    Ok(true)
}

fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config } => run(&load_config(&config)?),
        Command::Sweep { plan } => sweep(&load_config(&plan)?),
        Command::Limit { config } => limit(&load_config(&config)?),
        Command::Acoustic {
            eps_list,
            profile,
            sponge,
            t_end,
            n,
            box_length,
            out,
        } => {
            if eps_list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                anyhow::bail!("--eps-list values must lie in (0, 1]");
            }
            let mut plan = DecayPlan::new(n, box_length, eps_list);
            plan.profile = profile;
            plan.sponge = sponge;
            plan.t_end = t_end;
            acoustic(&plan, out.as_deref())
        }
        Command::Identities { n, samples, seed } => identity_suite(n, samples, seed),
        Command::Rates { csv } => rates(&csv),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
