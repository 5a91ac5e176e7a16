//! Kink tracking and classification of a finished scattering run.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ChargeRecord, LatticeError, Profile, Segment, Simulation};
use crate::analytics::{soliton_energy, SolitonParams};
use crate::potentials::BulkPotential;

/// Centre of the energy-density peak in one segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub segment: usize,
    pub x: f64,
    pub peak: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub t: f64,
    /// Field just left of the first defect.
    pub left_value: f64,
    /// Field just right of the last defect.
    pub right_value: f64,
    /// Clamped value at the right edge.
    pub far_right: f64,
    /// Bulk energy on the last segment.
    pub transmitted_energy: f64,
    /// |φ(x_k⁻) - φ(x_k⁺)| at each defect.
    pub junction_jumps: Vec<f64>,
}

pub struct History {
    pub dx: f64,
    pub junctions: Vec<f64>,
    pub x_left: f64,
    pub x_right: f64,
    pub incident: Option<SolitonParams>,
    pub records: Vec<ChargeRecord>,
    pub tracks: Vec<TrackSample>,
    pub profiles: Vec<Profile>,
    pub final_state: Option<FinalState>,
}

impl History {
    pub(crate) fn new(sim: &Simulation) -> Self {
        let lat = sim.lattice();
        let dx = lat.dx;
        Self {
            dx,
            junctions: sim.defects().iter().map(|d| d.x).collect(),
            x_left: lat.segments[0].x_start,
            x_right: lat.segments[lat.segments.len() - 1].x_end(dx),
            incident: sim.incident().copied(),
            records: Vec::new(),
            tracks: Vec::new(),
            profiles: Vec::new(),
            final_state: None,
        }
    }

    pub(crate) fn record(&mut self, sim: &Simulation) {
        self.records.push(sim.charges());
        let lat = sim.lattice();
        for (s, seg) in lat.segments.iter().enumerate() {
            if let Some((x, peak)) = kink_centre(seg, lat.dx, &sim.bulks()[s]) {
                self.tracks.push(TrackSample {
                    t: lat.t,
                    segment: s,
                    x,
                    peak,
                });
            }
        }
    }

    pub(crate) fn finish(&mut self, sim: &Simulation) {
        let lat = sim.lattice();
        let dx = lat.dx;
        let segs = &lat.segments;
        let last = &segs[segs.len() - 1];
        let bulk = &sim.bulks()[segs.len() - 1];
        let n = last.len();
        let mut e = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
            e += w * (0.5 * last.phi_t[i] * last.phi_t[i] + bulk.eval(last.phi[i]));
        }
        for i in 0..n - 1 {
            let d = last.phi[i + 1] - last.phi[i];
            e += d * d / (2.0 * dx);
        }
        let jumps = (0..segs.len() - 1)
            .map(|j| (segs[j].phi[segs[j].len() - 1] - segs[j + 1].phi[0]).abs())
            .collect();
        let first = &segs[0];
        self.final_state = Some(FinalState {
            t: lat.t,
            left_value: first.phi[first.len() - 1],
            right_value: last.phi[0],
            far_right: last.phi[n - 1],
            transmitted_energy: e,
            junction_jumps: jumps,
        });
    }
}

/// Position and height of the energy-density maximum over the interior of a
/// segment, refined by a parabola through the three nodes around it.
pub fn kink_centre(seg: &Segment, dx: f64, bulk: &BulkPotential) -> Option<(f64, f64)> {
    let n = seg.len();
    if n < 3 {
        return None;
    }
    let dens = |i: usize| -> f64 {
        let px = (seg.phi[i + 1] - seg.phi[i - 1]) / (2.0 * dx);
        0.5 * (seg.phi_t[i] * seg.phi_t[i] + px * px) + bulk.eval(seg.phi[i])
    };
    let mut best = 1;
    let mut best_e = f64::NEG_INFINITY;
    for i in 1..n - 1 {
        let e = dens(i);
        if e > best_e {
            best_e = e;
            best = i;
        }
    }
    let mut x = seg.x_start + dx * best as f64;
    let mut peak = best_e;
    if best >= 2 && best + 2 < n {
        let (em, ep) = (dens(best - 1), dens(best + 1));
        let denom = em - 2.0 * best_e + ep;
        if denom < 0.0 {
            let off = 0.5 * (em - ep) / denom;
            x += off * dx;
            peak = best_e - 0.25 * (em - ep) * off;
        }
    }
    Some((x, peak))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeRegime {
    Pass,
    Flip,
    Absorb,
    Indeterminate,
}

impl OutcomeRegime {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeRegime::Pass => "Pass",
            OutcomeRegime::Flip => "Flip",
            OutcomeRegime::Absorb => "Absorb",
            OutcomeRegime::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringOutcome {
    pub regime: OutcomeRegime,
    /// |u(x₁⁻) - v(xₙ⁺)| at the end of the run.
    pub final_jump: f64,
    /// Bulk energy past the last defect over the incident soliton energy.
    pub transmitted_fraction: f64,
    /// Topological charge of whatever left through the far side.
    pub outgoing_charge: f64,
    /// Spatial offset of the outgoing trajectory from the free one.
    pub shift: Option<f64>,
    /// Time delay, -shift / v.
    pub delay: Option<f64>,
    pub incoming_velocity: Option<f64>,
    pub outgoing_velocity: Option<f64>,
    pub incoming_samples: usize,
    pub outgoing_samples: usize,
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum();
    let slope = if stt > 0.0 { stx / stt } else { 0.0 };
    (mx - slope * mt, slope)
}

/// Classify a finished run. Absorb means under 1% of the incident energy
/// reached the far side; Pass and Flip need a clean outgoing kink whose
/// charge equals, or is opposite to, the incident one.
pub fn measure_outcome(hist: &History) -> Result<ScatteringOutcome, LatticeError> {
    let inc = hist.incident.ok_or(LatticeError::NoTrack("incident"))?;
    let fin = hist.final_state.as_ref().ok_or(LatticeError::NoTrack("final"))?;
    let first = *hist.junctions.first().ok_or(LatticeError::NoTrack("junction"))?;
    let last = *hist.junctions.last().expect("junction");
    let nseg = hist.junctions.len() + 1;
    let w = inc.width();
    let a = inc.a();
    let peak_ref = 4.0 * a * a;
    let incoming: Vec<(f64, f64)> = hist
        .tracks
        .iter()
        .filter(|s| {
            s.segment == 0
                && s.peak > 0.5 * peak_ref
                && s.x > hist.x_left + 5.0 * w
                && s.x < first - 3.0 * w
        })
        .map(|s| (s.t, s.x))
        .collect();
    let outgoing: Vec<(f64, f64)> = hist
        .tracks
        .iter()
        .filter(|s| {
            s.segment == nseg - 1
                && s.peak > 0.5 * peak_ref
                && s.x > last + 3.0 * w
                && s.x < hist.x_right - 5.0 * w
        })
        .map(|s| (s.t, s.x))
        .collect();
    let transmitted = fin.transmitted_energy / soliton_energy(inc.theta);
    let charge_out = (fin.far_right - fin.right_value) / (2.0 * PI);
    let c_in = inc.charge as f64;
    let regime = if transmitted < 0.01 {
        OutcomeRegime::Absorb
    } else if outgoing.len() >= 5 && transmitted > 0.5 {
        if (charge_out - c_in).abs() < 0.1 {
            OutcomeRegime::Pass
        } else if (charge_out + c_in).abs() < 0.1 {
            OutcomeRegime::Flip
        } else {
            OutcomeRegime::Indeterminate
        }
    } else {
        OutcomeRegime::Indeterminate
    };
    let mut out = ScatteringOutcome {
        regime,
        final_jump: (fin.left_value - fin.right_value).abs(),
        transmitted_fraction: transmitted,
        outgoing_charge: charge_out,
        shift: None,
        delay: None,
        incoming_velocity: None,
        outgoing_velocity: None,
        incoming_samples: incoming.len(),
        outgoing_samples: outgoing.len(),
    };
    if incoming.len() >= 5 {
        let (ai, bi) = line_fit(&incoming);
        out.incoming_velocity = Some(bi);
        if outgoing.len() >= 5 && matches!(regime, OutcomeRegime::Pass | OutcomeRegime::Flip) {
            let (ao, bo) = line_fit(&outgoing);
            let tbar = outgoing.iter().map(|p| p.0).sum::<f64>() / outgoing.len() as f64;
            let shift = (ao + bo * tbar) - (ai + bi * tbar);
            out.shift = Some(shift);
            out.delay = Some(-shift / bi);
            out.outgoing_velocity = Some(bo);
        }
    }
    Ok(out)
}

/// max_t |X(t) - X(0)| / scale.
pub fn relative_drift(records: &[ChargeRecord], f: impl Fn(&ChargeRecord) -> f64, scale: f64) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let x0 = f(first);
    records.iter().map(|r| (f(r) - x0).abs()).fold(0.0, f64::max) / scale
}
