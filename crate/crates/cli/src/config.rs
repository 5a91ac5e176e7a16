//! Run configuration: defaults, then a JSON file, then command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use defectlab::lattice::Integrator;
use defectlab::transmission::Parity;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const TZ_DEFAULT_BETA2: f64 = 7.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Scatter,
    Tmatrix,
    Verify,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scatter => "scatter",
            Command::Tmatrix => "tmatrix",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DefectKind {
    /// One type I sine-Gordon defect per η, at the given positions.
    #[default]
    Type1,
    /// A single type II defect equal to two fused type I defects (η₁, η₂).
    Fused,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TKind {
    #[default]
    Kl,
    Type2,
    Tz,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ParityArg {
    #[default]
    Even,
    Odd,
}

impl ParityArg {
    pub fn parity(&self) -> Parity {
        match self {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorArg {
    #[default]
    Leapfrog,
    Composed4,
}

impl IntegratorArg {
    pub fn integrator(&self) -> Integrator {
        match self {
            IntegratorArg::Leapfrog => Integrator::Leapfrog,
            IntegratorArg::Composed4 => Integrator::Composed4,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Borel,
    #[default]
    Serre,
    Intertwiner,
    Tzmatrix,
    Rho,
    All,
}

impl Suite {
    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Borel => "borel",
            Suite::Serre => "serre",
            Suite::Intertwiner => "intertwiner",
            Suite::Tzmatrix => "tzmatrix",
            Suite::Rho => "rho",
            Suite::All => "all",
        }
    }
}

/// Deformation parameter used by the algebraic suites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QChoice {
    /// q = 1.2
    Real,
    /// q = e^(0.4i)
    Unit,
    #[default]
    Both,
}

/// Canonical configuration. Every field has a default; `None` grid fields
/// are derived from the physics at run time and echoed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<Command>,
    pub theta: f64,
    /// Rapidity sweep for `scatter`: "start:stop:step" or a comma list.
    pub theta_sweep: String,
    pub eta: Vec<f64>,
    /// Defect positions; default 0, 6, 12, …
    pub positions: Vec<f64>,
    pub defect: DefectKind,
    pub charge: i32,
    pub x0: f64,
    pub dx: f64,
    pub dt: Option<f64>,
    pub half_width: Option<f64>,
    pub t_max: Option<f64>,
    pub record_every: Option<usize>,
    pub integrator: IntegratorArg,
    /// Skip the lattice in `scatter` and only tabulate predictions.
    pub analytic: bool,
    pub beta2: Option<f64>,
    pub gamma: f64,
    pub window: i32,
    pub k_max: usize,
    pub parity: ParityArg,
    pub tkind: TKind,
    /// Random (θa, θb) pairs for the triangle check.
    pub pairs: usize,
    pub suite: Suite,
    pub q: QChoice,
    pub qgroup_window: i32,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: None,
            theta: 0.5,
            theta_sweep: "0.1:2.0:0.1".into(),
            eta: vec![1.0],
            positions: Vec::new(),
            defect: DefectKind::Type1,
            charge: 1,
            x0: -10.0,
            dx: 0.01,
            dt: None,
            half_width: None,
            t_max: None,
            record_every: None,
            integrator: IntegratorArg::Leapfrog,
            analytic: false,
            beta2: None,
            gamma: 3.0,
            window: 6,
            k_max: 200,
            parity: ParityArg::Even,
            tkind: TKind::Kl,
            pairs: 20,
            suite: Suite::Serre,
            q: QChoice::Both,
            qgroup_window: 12,
            seed: 0,
            output_dir: PathBuf::from("defectlab-out"),
        }
    }
}

fn usage(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Usage {
        field: field.to_string(),
        msg: msg.into(),
    }
}

impl RunConfig {
    pub fn command(&self) -> Result<Command, CliError> {
        self.subcommand.ok_or_else(|| usage("subcommand", "missing"))
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.4 * self.dx)
    }

    /// Defect positions padded with 0, 6, 12, … up to one per η.
    pub fn defect_positions(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|i| self.positions.get(i).copied().unwrap_or(6.0 * i as f64))
            .collect()
    }

    /// γ from β² when given, else the `gamma` field.
    /// β² for the Tzitzéica matrix; γ = 3 would put q at 1.
    pub fn tz_beta2(&self) -> f64 {
        self.beta2.unwrap_or(TZ_DEFAULT_BETA2)
    }

    pub fn coupling_gamma(&self) -> f64 {
        match self.beta2 {
            Some(b) => 8.0 * std::f64::consts::PI / b - 1.0,
            None => self.gamma,
        }
    }

    pub fn thetas(&self) -> Result<Vec<f64>, CliError> {
        parse_sweep(&self.theta_sweep).map_err(|m| usage("theta_sweep", m))
    }

    /// Check every numeric field the chosen subcommand uses.
    pub fn validate(&self) -> Result<(), CliError> {
        let cmd = self.command()?;
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(usage(name, "must be finite"))
            }
        };
        match cmd {
            Command::Simulate | Command::Scatter => {
                if cmd == Command::Simulate && !(self.theta > 0.0 && self.theta < 5.0) {
                    return Err(usage("theta", "must be in (0, 5)"));
                }
                if cmd == Command::Scatter {
                    let ts = self.thetas()?;
                    if ts.iter().any(|t| !(*t > 0.0 && *t < 5.0)) {
                        return Err(usage("theta_sweep", "rapidities must be in (0, 5)"));
                    }
                }
                if self.eta.is_empty() {
                    return Err(usage("eta", "at least one defect parameter required"));
                }
                for &e in &self.eta {
                    finite("eta", e)?;
                }
                if self.defect == DefectKind::Fused && self.eta.len() != 2 {
                    return Err(usage("eta", "fused defect needs exactly two values"));
                }
                let pos = self.defect_positions(self.eta.len());
                if self.defect == DefectKind::Type1 && pos.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(usage("positions", "must be strictly increasing"));
                }
                if self.charge.abs() != 1 {
                    return Err(usage("charge", "must be +1 or -1"));
                }
                finite("x0", self.x0)?;
                if self.x0 >= pos[0] {
                    return Err(usage("x0", "soliton must start left of the first defect"));
                }
                if !(self.dx > 0.0 && self.dx.is_finite()) {
                    return Err(usage("dx", "must be positive"));
                }
                let dt = self.dt();
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(usage("dt", "must be positive"));
                }
                if dt / self.dx > 0.5 {
                    return Err(usage("dt", format!("dt/dx = {} exceeds 0.5", dt / self.dx)));
                }
                if let Some(t) = self.t_max {
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(usage("t_max", "must be positive"));
                    }
                }
                if let Some(l) = self.half_width {
                    if !(l > pos[pos.len() - 1] && l > -self.x0) {
                        return Err(usage("half_width", "domain must contain the soliton and all defects"));
                    }
                }
                if self.record_every == Some(0) {
                    return Err(usage("record_every", "must be at least 1"));
                }
            }
            Command::Tmatrix => {
                finite("theta", self.theta)?;
                if let Some(b) = self.beta2 {
                    if !(b > 0.0 && b < 8.0 * std::f64::consts::PI) {
                        return Err(usage("beta2", "must be in (0, 8π)"));
                    }
                }
                if !(self.coupling_gamma() > 0.0) {
                    return Err(usage("gamma", "must be positive"));
                }
                if self.window < 3 {
                    return Err(usage("window", "must be at least 3"));
                }
                if self.k_max < 50 {
                    return Err(usage("k_max", "must be at least 50"));
                }
                if self.tkind == TKind::Tz {
                    let phi = defectlab::qgroup::TzCoupling::from_beta2(self.tz_beta2()).phi();
                    if phi == 0.0 || phi.abs() >= 0.75 * std::f64::consts::PI {
                        return Err(usage("beta2", format!("spectral phase {phi:.6} of -q^-2 is outside 0 < |phi| < 0.75 pi")));
                    }
                }
                if self.eta.is_empty() {
                    return Err(usage("eta", "missing"));
                }
                finite("eta", self.eta[0])?;
            }
            Command::Verify => {
                if self.qgroup_window < 4 {
                    return Err(usage("qgroup_window", "must be at least 4"));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| usage("config", e.to_string()))
    }
}

/// "a:b:h" (inclusive, rounded to the step count) or "x,y,z".
pub fn parse_sweep(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("range must be start:stop:step".into());
        }
        let (a, b, h) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(h > 0.0) || b < a {
            return Err("range needs step > 0 and stop >= start".into());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        // a + i·h, with the endpoint snapped to the decimal grid
        Ok((0..=n).map(|i| round_sig(a + h * i as f64)).collect())
    } else {
        s.split(',').map(num).collect()
    }
}

fn round_sig(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

#[derive(Parser, Debug)]
#[command(name = "defectlab", version, about = "Integrable defect experiments: lattice scattering, transmission matrices, quantum-group checks")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Run one soliton through one or more defects.
    Simulate(SimArgs),
    /// Sweep rapidities through the same defects.
    Scatter(ScatterArgs),
    /// Emit a transmission matrix and its residuals.
    Tmatrix(TArgs),
    /// Run a named quantum-algebra verification suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
pub struct GridArgs {
    /// Defect parameters η (comma separated for several defects).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub defect: Option<DefectKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub charge: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub dx: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[arg(long)]
    pub theta: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct ScatterArgs {
    /// "start:stop:step" or a comma list.
    #[arg(long)]
    pub theta: Option<String>,
    /// Tabulate predictions only.
    #[arg(long)]
    pub analytic: bool,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug)]
pub struct TArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub window: Option<i32>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    #[arg(long, value_enum)]
    pub kind: Option<TKind>,
    #[arg(long)]
    pub pairs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long, value_enum)]
    pub q: Option<QChoice>,
    #[arg(long)]
    pub window: Option<i32>,
}

macro_rules! set {
    ($cfg:expr, $field:ident, $v:expr) => {
        if let Some(v) = $v {
            $cfg.$field = v;
        }
    };
}

impl GridArgs {
    fn apply(self, c: &mut RunConfig) {
        set!(c, eta, self.eta);
        set!(c, positions, self.positions);
        set!(c, defect, self.defect);
        set!(c, charge, self.charge);
        set!(c, x0, self.x0);
        set!(c, dx, self.dx);
        set!(c, integrator, self.integrator);
        c.dt = self.dt.or(c.dt);
        c.half_width = self.half_width.or(c.half_width);
        c.t_max = self.t_max.or(c.t_max);
        c.record_every = self.record_every.or(c.record_every);
    }
}

impl Cli {
    /// Defaults, then `--config`, then flags.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        set!(c, output_dir, self.output_dir);
        set!(c, seed, self.seed);
        let cmd = match self.command {
            Sub::Simulate(a) => {
                set!(c, theta, a.theta);
                a.grid.apply(&mut c);
                Command::Simulate
            }
            Sub::Scatter(a) => {
                set!(c, theta_sweep, a.theta);
                c.analytic |= a.analytic;
                a.grid.apply(&mut c);
                Command::Scatter
            }
            Sub::Tmatrix(a) => {
                set!(c, theta, a.theta);
                if let Some(e) = a.eta {
                    c.eta = vec![e];
                }
                c.beta2 = a.beta2.or(c.beta2);
                set!(c, gamma, a.gamma);
                set!(c, window, a.window);
                set!(c, k_max, a.k_max);
                set!(c, parity, a.parity);
                set!(c, tkind, a.kind);
                set!(c, pairs, a.pairs);
                Command::Tmatrix
            }
            Sub::Verify(a) => {
                set!(c, suite, a.suite);
                set!(c, q, a.q);
                set!(c, qgroup_window, a.window);
                Command::Verify
            }
        };
        if let Some(file_cmd) = c.subcommand {
            if file_cmd != cmd {
                return Err(usage(
                    "subcommand",
                    format!("config file is for '{}' but '{}' was run", file_cmd.as_str(), cmd.as_str()),
                ));
            }
        }
        c.subcommand = Some(cmd);
        Ok(c)
    }
}
