use serde::{Deserialize, Serialize};

use super::{DefectSpec, FieldLattice, Placement};
use crate::potentials::BulkPotential;

/// Energy and momentum at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeRecord {
    pub t: f64,
    pub p0_bulk: f64,
    pub p1_bulk: f64,
    pub d0: f64,
    pub d1: f64,
    pub e_total: f64,
    pub p_total: f64,
    pub u0: f64,
    pub v0: f64,
    pub lambda: Option<f64>,
}

/// Bulk charges by the trapezoid rule (gradient energy on links), plus the
/// defect contributions. Spatial derivatives at junction endpoints come from
/// the sewing conditions.
pub fn charges(lat: &FieldLattice, bulks: &[BulkPotential], defects: &[Placement]) -> ChargeRecord {
    let dx = lat.dx;
    let nseg = lat.segments.len();
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    // boundary slopes (left end, right end) per segment
    let mut slopes = vec![(0.0, 0.0); nseg];
    for (j, place) in defects.iter().enumerate() {
        let l = &lat.segments[j];
        let r = &lat.segments[j + 1];
        let n = l.len();
        let (u, v) = (l.phi[n - 1], r.phi[0]);
        let (ut, vt) = (l.phi_t[n - 1], r.phi_t[0]);
        match &place.defect {
            DefectSpec::TypeI(pot) => {
                let (du, dv) = pot.gradient(u, v);
                d0 += pot.d0(u, v);
                d1 += pot.d1(u, v);
                slopes[j].1 = vt - du;
                slopes[j + 1].0 = ut + dv;
            }
            DefectSpec::TypeII(pot) => {
                let p = 0.5 * (u + v);
                let q = 0.5 * (u - v);
                let lam = lat.lambda[j].unwrap_or(0.0);
                let lam_t = lat.lambda_t[j].unwrap_or(0.0);
                let part = pot.partials(p, q, lam);
                let du = 0.5 * (part.dp + part.dq);
                let dv = 0.5 * (part.dp - part.dq);
                d0 += part.d;
                d1 += pot.d1(p, q, lam);
                slopes[j].1 = lam_t - du;
                slopes[j + 1].0 = lam_t + dv;
            }
        }
    }
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    for (s, seg) in lat.segments.iter().enumerate() {
        let bulk = &bulks[s];
        let n = seg.len();
        let phi = &seg.phi;
        let pt = &seg.phi_t;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 * dx } else { dx };
            p0 += w * (0.5 * pt[i] * pt[i] + bulk.eval(phi[i]));
            let phx = if i == 0 {
                slopes[s].0
            } else if i == n - 1 {
                slopes[s].1
            } else {
                (phi[i + 1] - phi[i - 1]) / (2.0 * dx)
            };
            p1 -= w * pt[i] * phx;
        }
        for i in 0..n - 1 {
            let d = phi[i + 1] - phi[i];
            p0 += d * d / (2.0 * dx);
        }
    }
    let (u0, v0) = if defects.is_empty() {
        let seg = &lat.segments[0];
        let i = ((-seg.x_start) / dx).round().clamp(0.0, (seg.len() - 1) as f64) as usize;
        (seg.phi[i], seg.phi[i])
    } else {
        let n = lat.segments[0].len();
        (lat.segments[0].phi[n - 1], lat.segments[nseg - 1].phi[0])
    };
    ChargeRecord {
        t: lat.t,
        p0_bulk: p0,
        p1_bulk: p1,
        d0,
        d1,
        e_total: p0 + d0,
        p_total: p1 + d1,
        u0,
        v0,
        lambda: lat.first_lambda(),
    }
}
