//! `verify`: named quantum-algebra suites with pass/fail thresholds.

use std::time::Instant;

use defectlab::qgroup::{
    check_borel, check_oscillator, check_serre, intertwiner_residual, rho_functional_residuals, solve_intertwiner, tz_operator,
    tz_transmission_x, CrossingShift, FParams, FundamentalRep, MinimalRho, OscTCoeffs, OscillatorRep, QGroupError, TzCoupling,
    TzitzeicaTParams, COEFF_NAMES, TZ_LABELS,
};
use defectlab::Complex64;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{QChoice, RunConfig, Suite};
use crate::output::{ensure_dir, write_json, write_manifest};
use crate::CliError;

pub const OPERATOR_TOL: f64 = 1e-10;
pub const NEGATIVE_TOL: f64 = 1e-3;
pub const PERTURB_TOL: f64 = 1e-4;
pub const RHO_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: Value,
    pub residuals: Map<String, Value>,
    pub pass: bool,
}

fn num(e: QGroupError) -> CliError {
    CliError::Numerical(e.to_string())
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn qs(choice: QChoice) -> Vec<(&'static str, Complex64)> {
    let real = ("q=1.2", c(1.2));
    let unit = ("q=exp(0.4i)", Complex64::from_polar(1.0, 0.4));
    match choice {
        QChoice::Real => vec![real],
        QChoice::Unit => vec![unit],
        QChoice::Both => vec![real, unit],
    }
}

struct Acc {
    residuals: Map<String, Value>,
    pass: bool,
}

impl Acc {
    fn new() -> Self {
        Self {
            residuals: Map::new(),
            pass: true,
        }
    }

    /// Record `v`, which must be below `tol`.
    fn below(&mut self, name: String, v: f64, tol: f64) {
        self.pass &= v < tol;
        self.residuals.insert(name, json!(v));
    }

    /// Record a negative control, which must exceed `tol`.
    fn above(&mut self, name: String, v: f64, tol: f64) {
        self.pass &= v > tol;
        self.residuals.insert(name, json!(v));
    }

    fn flag(&mut self, name: String, ok: bool) {
        self.pass &= ok;
        self.residuals.insert(name, json!(ok));
    }

    fn finish(self, suite: &str, params: Value) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            params,
            residuals: self.residuals,
            pass: self.pass,
        }
    }
}

pub fn admissible_f() -> FParams {
    FParams::new(0.5, 1.0, 0.7, 1.4)
}

/// b₂ moved so that b₁c₂ − b₂c₁ = −0.1.
pub fn inadmissible_f() -> FParams {
    let f = admissible_f();
    FParams {
        b2: f.b2 + 0.1 / f.c1,
        ..f
    }
}

pub fn borel(window: i32, choice: QChoice) -> Result<SuiteReport, CliError> {
    let mut acc = Acc::new();
    for (tag, q) in qs(choice) {
        let rep = OscillatorRep::new(window, FParams::new(0.0, 0.0, 1.0, 1.0), q).with_kappas(c(0.8), c(1.3));
        for (name, v) in check_borel(&rep).map_err(num)?.residuals {
            acc.below(format!("{tag} {name}"), v, OPERATOR_TOL);
        }
        let osc = check_oscillator(&rep, |n| Complex64::new(0.1 * n as f64, 0.5).exp());
        for (name, v) in osc.residuals {
            acc.below(format!("{tag} {name}"), v, OPERATOR_TOL);
        }
    }
    Ok(acc.finish("borel", json!({ "window": window, "F": [0.0, 0.0, 1.0, 1.0], "kappa0": 0.8, "kappa1": 1.3 })))
}

pub fn serre(window: i32, choice: QChoice) -> Result<SuiteReport, CliError> {
    let mut acc = Acc::new();
    for (tag, q) in qs(choice) {
        let good = check_serre(&OscillatorRep::new(window, admissible_f(), q)).map_err(num)?;
        for (name, v) in good.residuals {
            acc.below(format!("{tag} {name}"), v, OPERATOR_TOL);
        }
        let bad = check_serre(&OscillatorRep::new(window, inadmissible_f(), q)).map_err(num)?;
        acc.above(format!("{tag} inadmissible serre5"), bad.get("serre5").unwrap_or(0.0), NEGATIVE_TOL);
    }
    let f = admissible_f();
    Ok(acc.finish(
        "serre",
        json!({ "window": window, "F": [f.b1.re, f.b2.re, f.c1.re, f.c2.re], "inadmissible_b2": inadmissible_f().b2.re }),
    ))
}

/// F = 0.8 q^(−2N) + 1.3 q^(2N), κ₁ = 1.4, κ₀ = κ₁⁻², z = 1.7, x = 0.9.
pub fn solvable_rep(window: i32, q: Complex64) -> OscillatorRep {
    let k1 = c(1.4);
    OscillatorRep::new(window, FParams::new(0.0, 0.0, 0.8, 1.3), q).with_kappas(k1.powi(-2), k1)
}

pub const Z_DEFECT: f64 = 1.7;
pub const X_SOLITON: f64 = 0.9;

pub fn intertwiner(window: i32, choice: QChoice) -> Result<SuiteReport, CliError> {
    let mut acc = Acc::new();
    for (tag, q) in qs(choice) {
        let rep = solvable_rep(window, q);
        let fund = FundamentalRep::standard(q);
        acc.below(format!("{tag} fundamental audit"), fund.audit().map_err(num)?.max(), OPERATOR_TOL);
        let (z, x) = (c(Z_DEFECT), c(X_SOLITON));
        let sol = solve_intertwiner(&rep, z, &fund, x).map_err(num)?;
        acc.flag(format!("{tag} nullity is 1"), sol.nullity(1e-10) == 1);
        for (g, v) in &sol.residuals {
            acc.below(format!("{tag} {g:?}"), *v, OPERATOR_TOL);
        }
        let mut weakest = f64::INFINITY;
        for k in 0..11 {
            let mut cs = sol.coeffs.to_vec();
            cs[k] *= 1.01;
            let t = OscTCoeffs::from_slice(&cs).operator(&rep);
            let r = intertwiner_residual(&t, &rep, z, &fund, x).map_err(num)?;
            let worst = r.iter().map(|p| p.1).fold(0.0, f64::max);
            if worst < weakest {
                weakest = worst;
            }
            acc.above(format!("{tag} perturbed {}", COEFF_NAMES[k]), worst, PERTURB_TOL);
        }
        let coeffs: Map<String, Value> = COEFF_NAMES
            .iter()
            .zip(sol.coeffs.to_vec())
            .map(|(n, v)| (format!("{tag} coeff {n}"), json!([v.re, v.im])))
            .collect();
        acc.residuals.extend(coeffs);
    }
    Ok(acc.finish(
        "intertwiner",
        json!({ "window": window, "F": [0.0, 0.0, 0.8, 1.3], "kappa1": 1.4, "kappa0": 1.0 / 1.96, "z": Z_DEFECT, "x": X_SOLITON }),
    ))
}

pub fn tzmatrix(window: i32, choice: QChoice) -> Result<SuiteReport, CliError> {
    let mut acc = Acc::new();
    for (tag, q) in qs(choice) {
        // the μλ relation at ε = τ = ε̃ = τ̃ = 1
        let one = c(1.0);
        let p1 = TzitzeicaTParams::with_mu(one, one, one, one, q, -5, 5, |a| Complex64::new(1.0 + 0.1 * a as f64, 0.2));
        let mut worst: f64 = 0.0;
        for a in -4..=4 {
            let lhs = p1.mu_at(a).map_err(num)? * p1.lambda_at(a + 1).map_err(num)?;
            let rhs = (q + q.inv()) * (q.powi(-2 * a - 1) + q.powi(2 * a + 1));
            worst = worst.max((lhs - rhs).norm() / rhs.norm());
        }
        acc.below(format!("{tag} mu lambda relation"), worst, 1e-12);

        let rep = solvable_rep(window, q);
        let fund = FundamentalRep::standard(q);
        let x = c(X_SOLITON);
        let sol = solve_intertwiner(&rep, c(Z_DEFECT), &fund, x).map_err(num)?;
        let p = TzitzeicaTParams::from_intertwiner(&sol.coeffs, &rep, x);
        acc.flag(format!("{tag} mu lambda check"), p.check_mu_lambda().is_ok());
        let t = tz_transmission_x(x, &p, window, one).map_err(num)?;
        acc.flag(format!("{tag} charge conservation"), t.conserves_charge());
        let mut structural = true;
        for alpha in -window..=window {
            if alpha + 2 <= window {
                let m = p.mu_at(alpha).map_err(num)? * p.mu_at(alpha + 1).map_err(num)? * q.powi(-2 * alpha - 1) / (one + q * q);
                structural &= t.get(0, alpha, 2, alpha + 2) == m;
            }
            if alpha - 2 >= -window {
                let l = p.lambda_at(alpha).map_err(num)? * p.lambda_at(alpha - 1).map_err(num)? * q.powi(2 * alpha - 1) / (one + q * q);
                structural &= t.get(2, alpha, 0, alpha - 2) == l * x;
            }
            for a in 0..3 {
                for b in 0..3 {
                    for beta in -window..=window {
                        if TZ_LABELS[a] + alpha != TZ_LABELS[b] + beta {
                            structural &= t.get(a, alpha, b, beta) == Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
        }
        acc.flag(format!("{tag} M, L and delta structure exact"), structural);
        let r = intertwiner_residual(&tz_operator(&t, &rep), &rep, c(Z_DEFECT), &fund, x).map_err(num)?;
        for (g, v) in r {
            acc.below(format!("{tag} intertwiner {g:?}"), v, OPERATOR_TOL);
        }
    }
    Ok(acc.finish("tzmatrix", json!({ "window": window, "z": Z_DEFECT, "x": X_SOLITON })))
}

pub const RHO_BETA2: f64 = 7.3;

pub fn rho_params(coupling: &TzCoupling) -> TzitzeicaTParams {
    let one = c(1.0);
    TzitzeicaTParams::with_mu(one, Complex64::new(0.7, 0.2), c(1.3), Complex64::new(0.9, -0.1), coupling.q, -3, 3, |_| one)
}

pub fn rho() -> Result<SuiteReport, CliError> {
    let mut acc = Acc::new();
    let cp = TzCoupling::from_beta2(RHO_BETA2);
    let p = rho_params(&cp);
    let rho = MinimalRho::new(&p, &cp).map_err(num)?;
    let grid: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let s = rho_functional_residuals(&rho, &p, &cp, &grid, CrossingShift::Plus).map_err(num)?;
    acc.below("crossing".into(), s.iter().map(|r| r.crossing).fold(0.0, f64::max), RHO_TOL);
    acc.below("bootstrap".into(), s.iter().map(|r| r.bootstrap).fold(0.0, f64::max), RHO_TOL);
    let unit = |_: Complex64| c(1.0);
    let u = rho_functional_residuals(&unit, &p, &cp, &grid, CrossingShift::Plus).map_err(num)?;
    acc.above("rho=1 bootstrap".into(), u.iter().map(|r| r.bootstrap).fold(f64::INFINITY, f64::min), NEGATIVE_TOL);
    let minus = rho_functional_residuals(&rho, &p, &cp, &grid, CrossingShift::Minus).map_err(num)?;
    // informational: the other reading of the crossing relation
    acc.residuals
        .insert("crossing (theta - i pi reading)".into(), json!(minus.iter().map(|r| r.crossing).fold(0.0, f64::max)));
    Ok(acc.finish(
        "rho",
        json!({ "beta2": RHO_BETA2, "kappa": cp.kappa, "eps": [1.0, 0.0], "eps_t": [0.7, 0.2], "tau": [1.3, 0.0], "tau_t": [0.9, -0.1], "theta_grid": [-3.0, 3.0, 0.25] }),
    ))
}

pub fn run_suite(suite: Suite, window: i32, q: QChoice) -> Result<Vec<SuiteReport>, CliError> {
    Ok(match suite {
        Suite::Borel => vec![borel(window, q)?],
        Suite::Serre => vec![serre(window, q)?],
        Suite::Intertwiner => vec![intertwiner(window, q)?],
        Suite::Tzmatrix => vec![tzmatrix(window, q)?],
        Suite::Rho => vec![rho()?],
        Suite::All => vec![
            borel(window, q)?,
            serre(window, q)?,
            intertwiner(window, q)?,
            tzmatrix(window, q)?,
            rho()?,
        ],
    })
}

pub fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    ensure_dir(&cfg.output_dir)?;
    let reports = run_suite(cfg.suite, cfg.qgroup_window, cfg.q)?;
    let name = cfg.suite.as_str();
    let value = if reports.len() == 1 { json!(reports[0]) } else { json!(reports) };
    let file = write_json(cfg.output_dir.join(format!("verify_{name}.json")), &value)?;
    let pass = reports.iter().all(|r| r.pass);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.suite.as_str()).collect();
    write_manifest(
        cfg,
        "verify",
        json!({ "suites": reports.iter().map(|r| r.suite.clone()).collect::<Vec<_>>() }),
        &[file],
        json!({ "pass": pass, "failed": failed }),
        start.elapsed(),
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Threshold(format!("suite(s) failed: {}", failed.join(", "))))
    }
}
