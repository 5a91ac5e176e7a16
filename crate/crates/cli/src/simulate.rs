//! `simulate` and `scatter`.

use std::time::Instant;

use defectlab::analytics::{chain_delay, classify, position_shift, soliton_energy, DefectChain, Delay, SolitonParams};
use defectlab::lattice::{
    measure_outcome, relative_drift, Cadence, DefectSpec, History, LatticeConfig, Placement, ScatteringOutcome, Simulation,
};
use defectlab::potentials::{BulkPotential, TypeIDefectPotential, TypeIIDefectPotential};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{DefectKind, RunConfig};
use crate::output::{ensure_dir, fmt_f64, fmt_opt, write_json, write_manifest, Csv};
use crate::CliError;

/// Grid and run length actually used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Derived {
    pub dt: f64,
    pub half_width: f64,
    pub t_max: f64,
    pub record_every: usize,
}

/// Run length: the time at which an undelayed outgoing kink would be ten
/// widths past the last defect. Domain: L ≥ 1.5 t_max, and never closer to
/// the soliton or defects than 20 widths.
pub fn derive(cfg: &RunConfig, theta: f64) -> Result<Derived, CliError> {
    let p = SolitonParams::centred_at(theta, cfg.x0, cfg.charge).map_err(|e| CliError::Numerical(e.to_string()))?;
    let (v, w) = (p.velocity().abs(), p.width());
    let pos = cfg.defect_positions(cfg.eta.len());
    let last = if cfg.defect == DefectKind::Fused { pos[0] } else { pos[pos.len() - 1] };
    let t_max = cfg.t_max.unwrap_or((last + 10.0 * w - cfg.x0) / v);
    let dt = cfg.dt();
    let half_width = cfg.half_width.unwrap_or_else(|| {
        let l = (1.5 * t_max).max(-cfg.x0 + 20.0 * w).max(last + 20.0 * w);
        (l / cfg.dx).ceil() * cfg.dx
    });
    let record_every = cfg.record_every.unwrap_or(((0.1 / dt).round() as usize).max(1));
    Ok(Derived {
        dt,
        half_width,
        t_max,
        record_every,
    })
}

fn sigma(eta: f64) -> f64 {
    (-eta).exp()
}

pub fn placements(cfg: &RunConfig) -> Result<Vec<Placement>, CliError> {
    let num = |e: defectlab::potentials::PotentialError| CliError::Numerical(e.to_string());
    let pos = cfg.defect_positions(cfg.eta.len());
    Ok(match cfg.defect {
        DefectKind::Type1 => cfg
            .eta
            .iter()
            .zip(pos)
            .map(|(&e, x)| {
                Ok(Placement {
                    x,
                    defect: DefectSpec::TypeI(TypeIDefectPotential::sine_gordon(sigma(e)).map_err(num)?),
                })
            })
            .collect::<Result<_, CliError>>()?,
        DefectKind::Fused => vec![Placement {
            x: pos[0],
            defect: DefectSpec::TypeII(TypeIIDefectPotential::sine_gordon_fused(sigma(cfg.eta[0]), sigma(cfg.eta[1])).map_err(num)?),
        }],
    })
}

pub struct Experiment {
    pub theta: f64,
    pub derived: Derived,
    pub history: History,
    pub outcome: ScatteringOutcome,
    pub predicted: Prediction,
    pub energy_drift: f64,
    pub momentum_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub regime: String,
    pub z: Option<f64>,
    pub shift: Option<f64>,
}

pub fn predict(cfg: &RunConfig, theta: f64) -> Result<Prediction, CliError> {
    let chain = DefectChain::new(cfg.eta.clone(), cfg.defect_positions(cfg.eta.len())).map_err(|e| CliError::Numerical(e.to_string()))?;
    let z = chain_delay(theta, &chain);
    let regime = match z {
        Delay::Infinite(_) => "Absorb",
        Delay::Finite(v) if v < 0.0 => "Flip",
        Delay::Finite(_) => "Pass",
    };
    // a single defect goes through classify so its rules are the reference
    let regime = if cfg.eta.len() == 1 {
        classify(theta, cfg.eta[0]).map_err(|e| CliError::Numerical(e.to_string()))?.as_str()
    } else {
        regime
    };
    Ok(Prediction {
        regime: regime.to_string(),
        z: z.value(),
        shift: position_shift(z, theta).ok(),
    })
}

pub fn run_experiment(cfg: &RunConfig, theta: f64) -> Result<Experiment, CliError> {
    let d = derive(cfg, theta)?;
    let num = |e: defectlab::lattice::LatticeError| CliError::Numerical(format!("lattice: {e}"));
    let grid = LatticeConfig {
        dx: cfg.dx,
        dt: d.dt,
        half_width: d.half_width,
    };
    let mut sim = Simulation::new(grid, vec![BulkPotential::sine_gordon()], placements(cfg)?).map_err(num)?;
    sim.set_integrator(cfg.integrator.integrator());
    sim.init_soliton(theta, cfg.x0, cfg.charge).map_err(num)?;
    let history = sim
        .run(
            d.t_max,
            Cadence {
                record_every: d.record_every,
                profile_every: None,
            },
        )
        .map_err(num)?;
    let outcome = measure_outcome(&history).map_err(num)?;
    let scale = soliton_energy(theta);
    Ok(Experiment {
        theta,
        derived: d,
        energy_drift: relative_drift(&history.records, |r| r.e_total, scale),
        momentum_drift: relative_drift(&history.records, |r| r.p_total, scale),
        history,
        outcome,
        predicted: predict(cfg, theta)?,
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let ex = run_experiment(cfg, cfg.theta)?;
    let mut charges = Csv::new(
        out.join("charges.csv"),
        &["t", "p0_bulk", "p1_bulk", "d0", "d1", "e_total", "p_total", "u0", "v0", "lambda"],
    );
    for r in &ex.history.records {
        charges.row(vec![
            fmt_f64(r.t),
            fmt_f64(r.p0_bulk),
            fmt_f64(r.p1_bulk),
            fmt_f64(r.d0),
            fmt_f64(r.d1),
            fmt_f64(r.e_total),
            fmt_f64(r.p_total),
            fmt_f64(r.u0),
            fmt_f64(r.v0),
            fmt_opt(r.lambda),
        ]);
    }
    let mut tracks = Csv::new(out.join("tracks.csv"), &["t", "segment", "x", "peak"]);
    for s in &ex.history.tracks {
        tracks.row(vec![fmt_f64(s.t), s.segment.to_string(), fmt_f64(s.x), fmt_f64(s.peak)]);
    }
    let summary = json!({
        "outcome": ex.outcome.regime.as_str(),
        "predicted": ex.predicted,
        "final_jump": ex.outcome.final_jump,
        "transmitted_fraction": ex.outcome.transmitted_fraction,
        "outgoing_charge": ex.outcome.outgoing_charge,
        "shift": ex.outcome.shift,
        "delay": ex.outcome.delay,
        "energy_drift": ex.energy_drift,
        "momentum_drift": ex.momentum_drift,
    });
    let files = vec![
        charges.write()?,
        tracks.write()?,
        write_json(out.join("outcome.json"), &summary)?,
    ];
    write_manifest(cfg, "simulate", json!(ex.derived), &files, summary, start.elapsed())?;
    Ok(())
}

/// Worker pool capped by DEFECTLAB_THREADS when set.
pub fn pool() -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("DEFECTLAB_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Usage {
            field: "DEFECTLAB_THREADS".into(),
            msg: format!("'{v}' is not a thread count"),
        })?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn scatter(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let thetas = cfg.thetas()?;
    let results: Vec<Result<(Prediction, Option<Experiment>), CliError>> = pool()?.install(|| {
        thetas
            .par_iter()
            .map(|&t| {
                let p = predict(cfg, t)?;
                let ex = if cfg.analytic { None } else { Some(run_experiment(cfg, t)?) };
                Ok((p, ex))
            })
            .collect()
    });
    let mut csv = Csv::new(
        out.join("scatter.csv"),
        &[
            "index",
            "theta",
            "predicted",
            "z",
            "predicted_shift",
            "measured",
            "final_jump",
            "transmitted_fraction",
            "measured_shift",
            "energy_drift",
            "error",
        ],
    );
    let mut failures = Vec::new();
    let mut mismatches = 0;
    for (i, (t, r)) in thetas.iter().zip(results).enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(*t)];
        match r {
            Ok((p, ex)) => {
                row.extend([p.regime.clone(), fmt_opt(p.z), fmt_opt(p.shift)]);
                match ex {
                    Some(ex) => {
                        if ex.outcome.regime.as_str() != p.regime {
                            mismatches += 1;
                        }
                        row.extend([
                            ex.outcome.regime.as_str().to_string(),
                            fmt_f64(ex.outcome.final_jump),
                            fmt_f64(ex.outcome.transmitted_fraction),
                            fmt_opt(ex.outcome.shift),
                            fmt_f64(ex.energy_drift),
                            String::new(),
                        ]);
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), 6)),
                }
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 8));
                row.push(e.to_string());
                failures.push(format!("theta={t}: {e}"));
            }
        }
        csv.row(row);
    }
    let rows = csv.len();
    let files = vec![csv.write()?];
    let summary = json!({ "rows": rows, "regime_mismatches": mismatches, "failures": failures });
    write_manifest(cfg, "scatter", json!({ "thetas": thetas }), &files, summary, start.elapsed())?;
    if !failures.is_empty() {
        return Err(CliError::Numerical(failures.join("; ")));
    }
    Ok(())
}
