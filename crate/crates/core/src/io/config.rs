//! Flat `key = value` run configuration. Every problem in a file is
//! reported, each with its line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{ConfigErrors, ConfigIssue, Result};
use crate::experiments::SweepMode;
use crate::grid::Grid;
use crate::mhd_eps::{InitMode, InitialDataSpec, PhysParams, Scheme};

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "grid.n",
    "grid.L",
    "grid.dealias",
    "phys.eps",
    "phys.mu",
    "phys.lambda",
    "phys.nu",
    "phys.kappa",
    "phys.theta_bar",
    "init.mode",
    "init.L0",
    "init.band",
    "init.seed",
    "init.theta_radius",
    "init.theta_share",
    "init.norm_eps",
    "init.checkpoint",
    "time.dt_safety",
    "time.T_end",
    "time.scheme",
    "time.dt_max",
    "out.every",
    "out.dir",
    "diag.s",
    "diag.probe_radius",
    "sweep.eps_list",
    "sweep.mode",
    "sponge.inner",
    "sponge.outer",
    "sponge.strength",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub box_length: f64,
    pub dealias: f64,
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub kappa: f64,
    pub theta_bar: f64,
    pub init_mode: InitMode,
    pub l0: f64,
    pub band: f64,
    pub seed: u64,
    /// Defaults to `L/4`.
    pub theta_radius: Option<f64>,
    pub theta_share: f64,
    pub norm_eps: Option<f64>,
    /// Start from this checkpoint instead of generated data.
    pub checkpoint: Option<PathBuf>,
    pub dt_safety: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub dt_max: Option<f64>,
    pub out_every: usize,
    pub out_dir: PathBuf,
    /// Sobolev index of the reported norms.
    pub s: f64,
    /// Radius of the central ball `K`; defaults to `L/4`.
    pub probe_radius: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub sweep_mode: SweepMode,
    /// Sponge radii default to `0.3 L` and `0.5 L`.
    pub sponge_inner: Option<f64>,
    pub sponge_outer: Option<f64>,
    /// Damping rate at `ε = 1`; runs use `strength / ε`.
    pub sponge_strength: f64,
}

impl RunConfig {
    /// Defaults for everything but the resolution.
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            box_length: 2.0 * std::f64::consts::PI,
            dealias: Grid::DEFAULT_DEALIAS,
            eps: 0.1,
            mu: 0.1,
            lambda: 0.0,
            nu: 0.1,
            kappa: 0.1,
            theta_bar: 1.0,
            init_mode: InitMode::WellPrepared,
            l0: 1.0,
            band: 2.0,
            seed: 1,
            theta_radius: None,
            theta_share: 0.5,
            norm_eps: None,
            checkpoint: None,
            dt_safety: 0.4,
            t_end: 0.5,
            scheme: Scheme::Imex1,
            dt_max: None,
            out_every: 1,
            out_dir: PathBuf::from("out"),
            s: 4.0,
            probe_radius: None,
            eps_list: None,
            sweep_mode: SweepMode::WellPrepared,
            sponge_inner: None,
            sponge_outer: None,
            sponge_strength: 4.0,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::with_dealias(self.n, self.box_length, self.dealias)
    }

    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::new(self.eps, self.mu, self.lambda, self.nu, self.kappa, self.theta_bar)
    }

    pub fn theta_radius(&self) -> f64 {
        self.theta_radius.unwrap_or(0.25 * self.box_length)
    }

    pub fn probe_radius(&self) -> f64 {
        self.probe_radius.unwrap_or(0.25 * self.box_length)
    }

    pub fn sponge_radii(&self) -> (f64, f64) {
        (
            self.sponge_inner.unwrap_or(0.3 * self.box_length),
            self.sponge_outer.unwrap_or(0.5 * self.box_length),
        )
    }

    pub fn init_spec(&self) -> InitialDataSpec {
        InitialDataSpec {
            mode: self.init_mode,
            l0: self.l0,
            band: self.band,
            theta_radius: self.theta_radius(),
            theta_share: self.theta_share,
            norm_s: self.s,
            norm_eps: self.norm_eps,
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("grid.n", self.n.to_string());
        put("grid.L", self.box_length.to_string());
        put("grid.dealias", self.dealias.to_string());
        put("phys.eps", self.eps.to_string());
        put("phys.mu", self.mu.to_string());
        put("phys.lambda", self.lambda.to_string());
        put("phys.nu", self.nu.to_string());
        put("phys.kappa", self.kappa.to_string());
        put("phys.theta_bar", self.theta_bar.to_string());
        put("init.mode", self.init_mode.to_string());
        put("init.L0", self.l0.to_string());
        put("init.band", self.band.to_string());
        put("init.seed", self.seed.to_string());
        if let Some(r) = self.theta_radius {
            put("init.theta_radius", r.to_string());
        }
        put("init.theta_share", self.theta_share.to_string());
        if let Some(e) = self.norm_eps {
            put("init.norm_eps", e.to_string());
        }
        if let Some(p) = &self.checkpoint {
            put("init.checkpoint", p.display().to_string());
        }
        put("time.dt_safety", self.dt_safety.to_string());
        put("time.T_end", self.t_end.to_string());
        put("time.scheme", self.scheme.to_string());
        if let Some(d) = self.dt_max {
            put("time.dt_max", d.to_string());
        }
        put("out.every", self.out_every.to_string());
        put("out.dir", self.out_dir.display().to_string());
        put("diag.s", self.s.to_string());
        if let Some(r) = self.probe_radius {
            put("diag.probe_radius", r.to_string());
        }
        if let Some(list) = &self.eps_list {
            let v: Vec<String> = list.iter().map(|e| e.to_string()).collect();
            put("sweep.eps_list", v.join(","));
        }
        put("sweep.mode", self.sweep_mode.to_string());
        if let Some(r) = self.sponge_inner {
            put("sponge.inner", r.to_string());
        }
        if let Some(r) = self.sponge_outer {
            put("sponge.outer", r.to_string());
        }
        put("sponge.strength", self.sponge_strength.to_string());
        out
    }
}

/// A real number, optionally a multiple of `pi` (`pi`, `8pi`, `8*pi`).
fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let v = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let m = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
        };
        m * std::f64::consts::PI
    } else {
        t.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

struct Reader {
    values: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }

    fn issue(&mut self, key: &str, message: String) {
        let line = self.line(key);
        self.issues.push(ConfigIssue { line, message });
    }

    fn get<T>(&mut self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Option<T> {
        let (line, raw) = self.values.get(key)?.clone();
        match parse(&raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.issues.push(ConfigIssue {
                    line,
                    message: format!("{key}: {e}"),
                });
                None
            }
        }
    }

    fn real(&mut self, key: &str, slot: &mut f64) {
        if let Some(v) = self.get(key, parse_real) {
            *slot = v;
        }
    }

    fn opt_real(&mut self, key: &str, slot: &mut Option<f64>) {
        if let Some(v) = self.get(key, parse_real) {
            *slot = Some(v);
        }
    }

    fn parsed<T: FromStr>(&mut self, key: &str, slot: &mut T)
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key, |s| s.trim().parse::<T>().map_err(|e| format!("`{s}`: {e}"))) {
            *slot = v;
        }
    }
}

/// Parses and validates a config. All problems are returned together.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, ConfigErrors> {
    let mut r = Reader {
        values: BTreeMap::new(),
        issues: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            r.issues.push(ConfigIssue {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            r.issues.push(ConfigIssue {
                line,
                message: format!("unknown key `{k}`"),
            });
            continue;
        }
        if v.is_empty() {
            r.issues.push(ConfigIssue {
                line,
                message: format!("{k}: missing value"),
            });
            continue;
        }
        if let Some((first, _)) = r.values.get(k) {
            r.issues.push(ConfigIssue {
                line,
                message: format!("{k}: duplicate key (first set on line {first})"),
            });
            continue;
        }
        r.values.insert(k.to_string(), (line, v.to_string()));
    }

    let mut c = RunConfig::with_n(0);
    if r.values.contains_key("grid.n") {
        r.parsed("grid.n", &mut c.n);
    } else {
        r.issues.push(ConfigIssue {
            line: 0,
            message: "grid.n is required".to_string(),
        });
    }
    r.real("grid.L", &mut c.box_length);
    r.real("grid.dealias", &mut c.dealias);
    r.real("phys.eps", &mut c.eps);
    r.real("phys.mu", &mut c.mu);
    r.real("phys.lambda", &mut c.lambda);
    r.real("phys.nu", &mut c.nu);
    r.real("phys.kappa", &mut c.kappa);
    r.real("phys.theta_bar", &mut c.theta_bar);
    r.parsed("init.mode", &mut c.init_mode);
    r.real("init.L0", &mut c.l0);
    r.real("init.band", &mut c.band);
    r.parsed("init.seed", &mut c.seed);
    r.opt_real("init.theta_radius", &mut c.theta_radius);
    r.real("init.theta_share", &mut c.theta_share);
    r.opt_real("init.norm_eps", &mut c.norm_eps);
    if let Some(p) = r.get("init.checkpoint", |s| Ok(PathBuf::from(s))) {
        c.checkpoint = Some(p);
    }
    r.real("time.dt_safety", &mut c.dt_safety);
    r.real("time.T_end", &mut c.t_end);
    r.parsed("time.scheme", &mut c.scheme);
    r.opt_real("time.dt_max", &mut c.dt_max);
    r.parsed("out.every", &mut c.out_every);
    if let Some(p) = r.get("out.dir", |s| Ok(PathBuf::from(s))) {
        c.out_dir = p;
    }
    r.real("diag.s", &mut c.s);
    r.opt_real("diag.probe_radius", &mut c.probe_radius);
    if let Some(list) = r.get("sweep.eps_list", |s| {
        s.split(',').map(parse_real).collect::<std::result::Result<Vec<_>, _>>()
    }) {
        c.eps_list = Some(list);
    }
    r.parsed("sweep.mode", &mut c.sweep_mode);
    r.opt_real("sponge.inner", &mut c.sponge_inner);
    r.opt_real("sponge.outer", &mut c.sponge_outer);
    r.real("sponge.strength", &mut c.sponge_strength);

    validate(&c, &mut r);
    if r.issues.is_empty() {
        Ok(c)
    } else {
        r.issues.sort_by_key(|i| i.line);
        Err(ConfigErrors(r.issues))
    }
}

fn validate(c: &RunConfig, r: &mut Reader) {
    let has = |r: &Reader, k: &str| r.values.contains_key(k);
    if has(r, "grid.n") && (c.n < 8 || c.n % 2 != 0) {
        r.issue("grid.n", format!("grid.n must be even and >= 8 (got {})", c.n));
    }
    if !(c.box_length > 0.0) {
        r.issue("grid.L", format!("grid.L must be positive (got {})", c.box_length));
    }
    if !(c.dealias > 0.0 && c.dealias <= 1.0) {
        r.issue("grid.dealias", format!("grid.dealias must lie in (0, 1] (got {})", c.dealias));
    }
    let params = PhysParams {
        eps: c.eps,
        mu: c.mu,
        lambda: c.lambda,
        nu: c.nu,
        kappa: c.kappa,
        theta_bar: c.theta_bar,
    };
    for (name, msg) in params.violations() {
        let key = format!("phys.{name}");
        r.issue(&key, format!("{key}: constraint violated: {msg}"));
    }
    if !(c.l0 > 0.0) {
        r.issue("init.L0", format!("init.L0 must be positive (got {})", c.l0));
    }
    if !(c.band >= 1.0) {
        r.issue("init.band", format!("init.band must be at least 1 (got {})", c.band));
    } else if c.n >= 8 && c.dealias > 0.0 && c.dealias <= 1.0 {
        let cutoff = (c.dealias * (c.n / 2) as f64 + 1e-12).floor();
        if c.band > cutoff {
            r.issue(
                "init.band",
                format!("init.band {} exceeds the dealias cutoff {cutoff}", c.band),
            );
        }
    }
    if let Some(rad) = c.theta_radius {
        if !(rad > 0.0 && rad <= 0.5 * c.box_length) {
            r.issue("init.theta_radius", format!("init.theta_radius must lie in (0, L/2] (got {rad})"));
        }
    }
    if !(0.0..=1.0).contains(&c.theta_share) {
        r.issue("init.theta_share", format!("init.theta_share must lie in [0, 1] (got {})", c.theta_share));
    }
    if let Some(e) = c.norm_eps {
        if !(e > 0.0 && e <= 1.0) {
            r.issue("init.norm_eps", format!("init.norm_eps must lie in (0, 1] (got {e})"));
        }
    }
    if !(c.dt_safety > 0.0) {
        r.issue("time.dt_safety", format!("time.dt_safety must be positive (got {})", c.dt_safety));
    }
    if !(c.t_end > 0.0) {
        r.issue("time.T_end", format!("time.T_end must be positive (got {})", c.t_end));
    }
    if let Some(d) = c.dt_max {
        if !(d > 0.0) {
            r.issue("time.dt_max", format!("time.dt_max must be positive (got {d})"));
        }
    }
    if c.out_every == 0 {
        r.issue("out.every", "out.every must be at least 1".to_string());
    }
    if !(c.s >= 0.0) {
        r.issue("diag.s", format!("diag.s must be >= 0 (got {})", c.s));
    }
    let (inner, outer) = c.sponge_radii();
    if !(inner > 0.0 && inner < outer) {
        let key = if has(r, "sponge.inner") { "sponge.inner" } else { "sponge.outer" };
        r.issue(key, format!("sponge radii must satisfy 0 < inner < outer (got {inner}, {outer})"));
    }
    if !(c.sponge_strength >= 0.0) {
        r.issue("sponge.strength", format!("sponge.strength must be >= 0 (got {})", c.sponge_strength));
    }
    let probe = c.probe_radius();
    if !(probe > 0.0) {
        r.issue("diag.probe_radius", format!("diag.probe_radius must be positive (got {probe})"));
    } else if c.sweep_mode == SweepMode::IllPreparedSponged && probe >= inner {
        r.issue(
            "diag.probe_radius",
            format!("diag.probe_radius {probe} must be below the sponge inner radius {inner}"),
        );
    }
    if let Some(list) = &c.eps_list {
        if list.len() < 3 {
            r.issue("sweep.eps_list", format!("sweep.eps_list needs at least 3 values (got {})", list.len()));
        }
        if list.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            r.issue("sweep.eps_list", "sweep.eps_list values must lie in (0, 1]".to_string());
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            r.issue("sweep.eps_list", "sweep.eps_list must be strictly descending".to_string());
        }
    }
}

/// Reads and parses a config file.
pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}
