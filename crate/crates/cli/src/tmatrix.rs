//! `tmatrix`: matrix entries and residual tables.

use std::time::Instant;

use defectlab::qgroup::{self, MinimalRho, TzCoupling, TzitzeicaTParams};
use defectlab::transmission::{
    f_residuals, kl_transmission, smatrix, triangle_residual, type2_transmission, ChargeWindowMatrix, CouplingParams, Type2Params,
};
use defectlab::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{RunConfig, TKind};
use crate::output::{ensure_dir, fmt_f64, write_json, write_manifest, Csv};
use crate::simulate::pool;
use crate::CliError;

fn num(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Admissible type II constants drawn from the run seed.
pub fn type2_params(seed: u64) -> Type2Params {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7459_7065_3249_4900);
    let mut c = || Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    Type2Params::admissible([c(), c()], [c(), c()], [c(), c()], Complex64::new(1.0, 0.0))
}

/// ε = ε̃ = τ = τ̃ = 1 with μ ≡ 1.
pub fn tz_params(coupling: &TzCoupling, window: i32) -> TzitzeicaTParams {
    let one = Complex64::new(1.0, 0.0);
    TzitzeicaTParams::with_mu(one, one, one, one, coupling.q, -window - 1, window + 1, |_| one)
}

pub fn tmatrix(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let gamma = cfg.coupling_gamma();
    let beta2 = match cfg.tkind {
        TKind::Tz => cfg.tz_beta2(),
        _ => 8.0 * std::f64::consts::PI / (gamma + 1.0),
    };
    let coupling = CouplingParams::from_gamma(gamma, 1.0).map_err(num)?;
    let (theta, eta, m, k) = (cfg.theta, cfg.eta[0], cfg.window, cfg.k_max);
    let parity = cfg.parity.parity();
    let mut residuals = serde_json::Map::new();

    let matrix: ChargeWindowMatrix = match cfg.tkind {
        TKind::Kl | TKind::Type2 => {
            let p2 = type2_params(cfg.seed);
            let factory = |t: f64| -> Result<ChargeWindowMatrix, defectlab::transmission::TransmissionError> {
                match cfg.tkind {
                    TKind::Kl => kl_transmission(t, eta, &coupling, m, parity, k),
                    _ => type2_transmission(t, &coupling, &p2, m, parity),
                }
            };
            let t = factory(theta).map_err(num)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let pairs: Vec<(f64, f64)> = (0..cfg.pairs).map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let tri: Vec<Result<f64, _>> = pool()?.install(|| {
                pairs
                    .par_iter()
                    .map(|&(a, b)| triangle_residual(|d| smatrix(d, &coupling), factory, a, b, m))
                    .collect()
            });
            let tri: Vec<f64> = tri.into_iter().collect::<Result<_, _>>().map_err(num)?;
            let worst = tri.iter().copied().fold(0.0, f64::max);
            let mut table = Csv::new(out.join("triangle.csv"), &["pair", "theta_a", "theta_b", "residual"]);
            for (i, ((a, b), r)) in pairs.iter().zip(&tri).enumerate() {
                table.row(vec![i.to_string(), fmt_f64(*a), fmt_f64(*b), fmt_f64(*r)]);
            }
            table.write()?;
            residuals.insert("triangle_max".into(), json!(worst));
            if cfg.tkind == TKind::Kl {
                residuals.insert("unitarity".into(), json!(t.unitarity_residual()));
                let f = f_residuals(theta, eta, &coupling, k, true).map_err(num)?;
                residuals.insert("f_unitarity".into(), json!(f.unitarity));
                residuals.insert("f_conjugation".into(), json!(f.conjugation));
            }
            t
        }
        TKind::Tz => {
            let tz = TzCoupling::from_beta2(cfg.tz_beta2());
            let p = tz_params(&tz, m);
            let rho = MinimalRho::new(&p, &tz).map_err(num)?;
            let r = rho.eval(Complex64::from(theta));
            let t = qgroup::tz_transmission(theta, &p, &tz, m, r).map_err(num)?;
            let s = qgroup::rho_functional_residuals(&rho, &p, &tz, &[theta], Default::default()).map_err(num)?;
            residuals.insert("rho_crossing".into(), json!(s[0].crossing));
            residuals.insert("rho_bootstrap".into(), json!(s[0].bootstrap));
            residuals.insert("kappa".into(), json!(tz.kappa));
            t
        }
    };

    let mut csv = Csv::new(
        out.join("tmatrix.csv"),
        &["beta2", "theta", "eta", "window", "k_max", "a", "alpha", "b", "beta", "re", "im"],
    );
    let labels = matrix.labels.clone();
    for &alpha in matrix.charges() {
        for a in 0..labels.len() {
            for b in 0..labels.len() {
                for &beta in matrix.charges() {
                    let v = matrix.get(a, alpha, b, beta);
                    if labels[a] + alpha != labels[b] + beta {
                        continue;
                    }
                    csv.row(vec![
                        fmt_f64(beta2),
                        fmt_f64(theta),
                        fmt_f64(eta),
                        m.to_string(),
                        k.to_string(),
                        labels[a].to_string(),
                        alpha.to_string(),
                        labels[b].to_string(),
                        beta.to_string(),
                        fmt_f64(v.re),
                        fmt_f64(v.im),
                    ]);
                }
            }
        }
    }
    let mut files = vec![csv.write()?];
    if cfg.tkind != TKind::Tz {
        files.push(out.join("triangle.csv"));
    }
    let key = json!({ "beta2": beta2, "gamma": gamma, "theta": theta, "eta": eta, "window": m, "k_max": k });
    let report = json!({ "key": key, "kind": format!("{:?}", cfg.tkind).to_lowercase(), "residuals": residuals });
    files.push(write_json(out.join("residuals.json"), &report)?);
    write_manifest(cfg, "tmatrix", key, &files, report, start.elapsed())?;
    Ok(())
}
