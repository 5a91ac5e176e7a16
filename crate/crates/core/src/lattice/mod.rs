//! Finite-difference evolution of scalar fields joined by point defects.
//!
//! The line [-L, L] is cut at the defect positions into segments. Each segment
//! owns its nodes, including both endpoints, so the field is allowed to jump
//! across a defect. Endpoint nodes carry half-cell weight `dx/2` and their
//! equations come from varying the discrete Lagrangian, which makes the
//! semi-discrete energy (bulk plus D⁰) an exact invariant.
//!
//! Time stepping is velocity Verlet for the interior nodes. The junctions are
//! stiff (the coupling has frequency 2/dx) so they are sub-stepped. The type I
//! junction adds a velocity coupling `u_tt ∋ (2/dx) v_t`, `v_tt ∋ -(2/dx) u_t`
//! which is integrated with an implicit-midpoint kick solved in closed form.
//! A type II junction evolves p = (u+v)/2 by Verlet and (q, λ) by a midpoint
//! rule.

mod charges;
mod junction;
mod outcome;

pub use charges::{charges, ChargeRecord};
pub use outcome::{
    kink_centre, measure_outcome, relative_drift, FinalState, History, OutcomeRegime,
    ScatteringOutcome, TrackSample,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{soliton_field, soliton_velocity, SolitonParams};
use crate::potentials::{BulkPotential, TypeIDefectPotential, TypeIIDefectPotential};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dx and dt must be positive and finite (dx = {dx}, dt = {dt})")]
    BadSpacing { dx: f64, dt: f64 },
    #[error("CFL violated: dt/dx = {0} > 0.5")]
    Cfl(f64),
    #[error("defect at x = {0} is not on a grid node")]
    OffGrid(f64),
    #[error("defect positions must be increasing and strictly inside (-{0}, {0})")]
    BadPositions(f64),
    #[error("segment {0} has fewer than 3 nodes")]
    ShortSegment(usize),
    #[error("expected 1 or {expected} bulk potentials, got {got}")]
    BulkCount { expected: usize, got: usize },
    #[error("|theta| = {0} must be below 5")]
    RapidityTooLarge(f64),
    #[error("soliton charge must be +1 or -1, got {0}")]
    BadCharge(i32),
    #[error("soliton at x0 = {x0} is {widths:.2} widths left of the defect at {defect}; at least 10 required")]
    TooClose { x0: f64, defect: f64, widths: f64 },
    #[error("soliton tail at the outer edge is {0:e}, above 1e-8")]
    TailTooLarge(f64),
    #[error("type II junction {index}: lambda Newton solve failed at t = {t} (|D_lambda| = {residual:e} after 20 iterations)")]
    Newton { index: usize, t: f64, residual: f64 },
    #[error("non-finite field value in segment {segment} at t = {t}")]
    NonFinite { segment: usize, t: f64 },
    #[error("no kink samples in the {0} window; run too short or soliton lost")]
    NoTrack(&'static str),
}

/// Grid parameters. Defaults are dx = 0.01, dt = 0.004, L = 60.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dx: f64,
    pub dt: f64,
    pub half_width: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            dx: 0.01,
            dt: 0.004,
            half_width: 60.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum DefectSpec {
    TypeI(TypeIDefectPotential),
    TypeII(TypeIIDefectPotential),
}

impl DefectSpec {
    pub fn name(&self) -> &str {
        match self {
            DefectSpec::TypeI(d) => &d.name,
            DefectSpec::TypeII(d) => &d.name,
        }
    }
}

/// A defect sitting at grid position `x`.
#[derive(Clone, Debug)]
pub struct Placement {
    pub x: f64,
    pub defect: DefectSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub x_start: f64,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn x_end(&self, dx: f64) -> f64 {
        self.x_start + dx * (self.len() - 1) as f64
    }

    pub fn xs(&self, dx: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.x_start + dx * i as f64).collect()
    }
}

/// Discretised fields. `segments[0]` is the left field u, the last segment the
/// right field v; chains add intermediate segments.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldLattice {
    pub dx: f64,
    pub dt: f64,
    pub t: f64,
    pub segments: Vec<Segment>,
    /// λ per junction, `None` for type I.
    pub lambda: Vec<Option<f64>>,
    /// Value of λ_t at the last force evaluation, `None` for type I.
    pub lambda_t: Vec<Option<f64>>,
}

impl FieldLattice {
    pub fn u(&self) -> &[f64] {
        &self.segments[0].phi
    }
    pub fn u_t(&self) -> &[f64] {
        &self.segments[0].phi_t
    }
    pub fn v(&self) -> &[f64] {
        &self.segments[self.segments.len() - 1].phi
    }
    pub fn v_t(&self) -> &[f64] {
        &self.segments[self.segments.len() - 1].phi_t
    }
    pub fn xs_left(&self) -> Vec<f64> {
        self.segments[0].xs(self.dx)
    }
    pub fn xs_right(&self) -> Vec<f64> {
        self.segments[self.segments.len() - 1].xs(self.dx)
    }
    /// λ of the first type II junction.
    pub fn first_lambda(&self) -> Option<f64> {
        self.lambda.iter().flatten().next().copied()
    }
}

/// Sampling cadence for [`Simulation::run`], in steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub record_every: usize,
    pub profile_every: Option<usize>,
}

impl Default for Cadence {
    fn default() -> Self {
        Self {
            record_every: 25,
            profile_every: None,
        }
    }
}

/// Time integrator. Both are built from the same leapfrog step; `Composed4`
/// chains three of them with the weights 1/(2-2^(1/3)), -2^(1/3)/(2-2^(1/3)),
/// 1/(2-2^(1/3)), which cancels the second-order error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    #[default]
    Leapfrog,
    Composed4,
}

/// Full field profile at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub t: f64,
    /// (segment, x, φ, φ_t) rows.
    pub rows: Vec<(usize, f64, f64, f64)>,
}

pub struct Simulation {
    lattice: FieldLattice,
    bulks: Vec<BulkPotential>,
    defects: Vec<Placement>,
    acc: Vec<Vec<f64>>,
    /// p and p_t for type II junctions (indexed by junction).
    pair: Vec<(f64, f64)>,
    /// p acceleration for type II junctions.
    substeps: usize,
    integrator: Integrator,
    incident: Option<SolitonParams>,
}

impl Simulation {
    /// Vacuum lattice with the given defects. `bulks` holds one potential for
    /// every segment, or a single one shared by all.
    pub fn new(
        config: LatticeConfig,
        bulks: Vec<BulkPotential>,
        defects: Vec<Placement>,
    ) -> Result<Self, LatticeError> {
        let LatticeConfig { dx, dt, half_width } = config;
        if !(dx > 0.0 && dt > 0.0 && dx.is_finite() && dt.is_finite() && half_width > 0.0) {
            return Err(LatticeError::BadSpacing { dx, dt });
        }
        if dt / dx > 0.5 + 1e-12 {
            return Err(LatticeError::Cfl(dt / dx));
        }
        let mut cuts = vec![-half_width];
        for (i, d) in defects.iter().enumerate() {
            if !(d.x > -half_width && d.x < half_width) || (i > 0 && d.x <= defects[i - 1].x) {
                return Err(LatticeError::BadPositions(half_width));
            }
            let k = (d.x + half_width) / dx;
            if (k - k.round()).abs() > 1e-6 {
                return Err(LatticeError::OffGrid(d.x));
            }
            cuts.push(d.x);
        }
        cuts.push(half_width);
        let nseg = defects.len() + 1;
        let bulks = match bulks.len() {
            1 => vec![bulks[0].clone(); nseg],
            n if n == nseg => bulks,
            n => {
                return Err(LatticeError::BulkCount {
                    expected: nseg,
                    got: n,
                })
            }
        };
        let mut segments = Vec::with_capacity(nseg);
        for s in 0..nseg {
            let n = ((cuts[s + 1] - cuts[s]) / dx).round() as usize + 1;
            if n < 3 {
                return Err(LatticeError::ShortSegment(s));
            }
            segments.push(Segment {
                x_start: cuts[s],
                phi: vec![0.0; n],
                phi_t: vec![0.0; n],
            });
        }
        let lambda: Vec<Option<f64>> = defects
            .iter()
            .map(|d| match d.defect {
                DefectSpec::TypeI(_) => None,
                DefectSpec::TypeII(_) => Some(0.0),
            })
            .collect();
        let nj = defects.len();
        let acc = segments.iter().map(|s| vec![0.0; s.len()]).collect();
        let mut sim = Self {
            lattice: FieldLattice {
                dx,
                dt,
                t: 0.0,
                segments,
                lambda_t: lambda.clone(),
                lambda,
            },
            bulks,
            defects,
            acc,
            pair: vec![(0.0, 0.0); nj],
            substeps: 8,
            integrator: Integrator::Leapfrog,
            incident: None,
        };
        sim.settle_junctions()?;
        Ok(sim)
    }

    pub fn lattice(&self) -> &FieldLattice {
        &self.lattice
    }

    pub fn defects(&self) -> &[Placement] {
        &self.defects
    }

    pub fn bulks(&self) -> &[BulkPotential] {
        &self.bulks
    }

    pub fn incident(&self) -> Option<&SolitonParams> {
        self.incident.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.lattice.t
    }

    /// Set all fields to constant values (one per segment) at rest.
    pub fn set_vacuum(&mut self, values: &[f64]) -> Result<(), LatticeError> {
        for (seg, &val) in self.lattice.segments.iter_mut().zip(values) {
            seg.phi.iter_mut().for_each(|p| *p = val);
            seg.phi_t.iter_mut().for_each(|p| *p = 0.0);
        }
        self.settle_junctions()
    }

    /// Place the exact one-soliton profile u = 4 arctan E (charge +1) on the
    /// left segment; every segment to the right starts in the vacuum the
    /// soliton is heading into (2π for charge +1, 0 for charge -1).
    pub fn init_soliton(&mut self, theta: f64, x0: f64, charge: i32) -> Result<(), LatticeError> {
        if theta.abs() >= 5.0 || !theta.is_finite() {
            return Err(LatticeError::RapidityTooLarge(theta));
        }
        if charge != 1 && charge != -1 {
            return Err(LatticeError::BadCharge(charge));
        }
        let params = SolitonParams::centred_at(theta, x0, charge).map_err(|_| LatticeError::BadCharge(charge))?;
        let width = params.width();
        let dx = self.lattice.dx;
        let first_end = self.lattice.segments[0].x_end(dx);
        let widths = (first_end - x0) / width;
        if self.defects.is_empty() {
            // no defect: only the edges matter
        } else if widths < 10.0 {
            return Err(LatticeError::TooClose {
                x0,
                defect: first_end,
                widths,
            });
        }
        let left = self.lattice.segments[0].x_start;
        let right = self.lattice.segments.last().expect("segment").x_end(dx);
        let tail_left = 4.0 * (params.a() * (left - x0)).exp().atan();
        let tail_right = if self.defects.is_empty() {
            4.0 * (-params.a() * (right - x0)).exp().atan()
        } else {
            0.0
        };
        let tail = tail_left.max(tail_right);
        if tail > 1e-8 {
            return Err(LatticeError::TailTooLarge(tail));
        }
        let ahead = if charge == 1 { 2.0 * std::f64::consts::PI } else { 0.0 };
        for (s, seg) in self.lattice.segments.iter_mut().enumerate() {
            for i in 0..seg.phi.len() {
                let x = seg.x_start + dx * i as f64;
                if s == 0 {
                    seg.phi[i] = soliton_field(x, 0.0, &params);
                    seg.phi_t[i] = soliton_velocity(x, 0.0, &params);
                } else {
                    seg.phi[i] = ahead;
                    seg.phi_t[i] = 0.0;
                }
            }
        }
        // outer clamps sit exactly on the vacua
        let first = &mut self.lattice.segments[0];
        first.phi[0] = if charge == 1 { 0.0 } else { 2.0 * std::f64::consts::PI };
        first.phi_t[0] = 0.0;
        let last = self.lattice.segments.last_mut().expect("segment");
        let n = last.phi.len();
        last.phi[n - 1] = ahead;
        last.phi_t[n - 1] = 0.0;
        self.incident = Some(params);
        self.lattice.t = 0.0;
        self.settle_junctions()
    }

    /// Solve for λ so that D⁰ is stationary in λ at every type II junction,
    /// then refresh cached forces.
    fn settle_junctions(&mut self) -> Result<(), LatticeError> {
        for j in 0..self.defects.len() {
            if let DefectSpec::TypeII(pot) = &self.defects[j].defect {
                let (u_n, v_0, u_t, v_t) = self.junction_values(j);
                let p = 0.5 * (u_n + v_0);
                let q = 0.5 * (u_n - v_0);
                let lambda = junction::solve_lambda(pot, p, q).map_err(|residual| LatticeError::Newton {
                    index: j,
                    t: self.lattice.t,
                    residual,
                })?;
                self.lattice.lambda[j] = Some(lambda);
                self.pair[j] = (p, 0.5 * (u_t + v_t));
            }
        }
        self.compute_forces();
        self.sync_type2_velocities();
        Ok(())
    }

    fn junction_values(&self, j: usize) -> (f64, f64, f64, f64) {
        let l = &self.lattice.segments[j];
        let r = &self.lattice.segments[j + 1];
        let n = l.len();
        (l.phi[n - 1], r.phi[0], l.phi_t[n - 1], r.phi_t[0])
    }

    /// Advance by one time step.
    pub fn step(&mut self) -> Result<(), LatticeError> {
        let dt = self.lattice.dt;
        match self.integrator {
            Integrator::Leapfrog => self.leapfrog(dt),
            Integrator::Composed4 => {
                let c = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - c);
                let w0 = -c * w1;
                self.leapfrog(w1 * dt);
                self.leapfrog(w0 * dt);
                self.leapfrog(w1 * dt);
            }
        }
        self.lattice.t += dt;
        Ok(())
    }

    /// Interior nodes take a velocity Verlet step of length `tau`; each
    /// junction is integrated with `junction_substeps` smaller steps while its
    /// bulk neighbours move linearly between the two time levels.
    fn leapfrog(&mut self, tau: f64) {
        let h = 0.5 * tau;
        self.kick_interior(h);
        let old_nb = self.neighbours();
        self.drift_interior(tau);
        let new_nb = self.neighbours();
        for j in 0..self.defects.len() {
            self.advance_junction(j, tau, old_nb[j], new_nb[j]);
        }
        self.compute_forces();
        self.kick_interior(h);
        self.sync_type2_velocities();
    }

    pub fn set_integrator(&mut self, integrator: Integrator) {
        self.integrator = integrator;
    }

    /// Number of junction substeps per time step (default 8).
    pub fn set_junction_substeps(&mut self, m: usize) {
        self.substeps = m.max(1);
    }

    /// Step until `t_max`, recording charges and kink tracks.
    pub fn run(&mut self, t_max: f64, cadence: Cadence) -> Result<History, LatticeError> {
        let steps = ((t_max - self.lattice.t) / self.lattice.dt).round().max(0.0) as usize;
        let every = cadence.record_every.max(1);
        let mut hist = History::new(self);
        hist.record(self);
        if cadence.profile_every.is_some() {
            hist.profiles.push(self.profile());
        }
        for k in 1..=steps {
            self.step()?;
            if k % every == 0 || k == steps {
                self.check_finite()?;
                hist.record(self);
            }
            if let Some(pe) = cadence.profile_every {
                if pe > 0 && k % pe == 0 {
                    hist.profiles.push(self.profile());
                }
            }
        }
        hist.finish(self);
        Ok(hist)
    }

    fn check_finite(&self) -> Result<(), LatticeError> {
        for (s, seg) in self.lattice.segments.iter().enumerate() {
            if seg.phi.iter().chain(&seg.phi_t).any(|v| !v.is_finite()) {
                return Err(LatticeError::NonFinite {
                    segment: s,
                    t: self.lattice.t,
                });
            }
        }
        Ok(())
    }

    pub fn profile(&self) -> Profile {
        let dx = self.lattice.dx;
        let mut rows = Vec::new();
        for (s, seg) in self.lattice.segments.iter().enumerate() {
            for i in 0..seg.len() {
                rows.push((s, seg.x_start + dx * i as f64, seg.phi[i], seg.phi_t[i]));
            }
        }
        Profile {
            t: self.lattice.t,
            rows,
        }
    }

    pub fn charges(&self) -> ChargeRecord {
        charges(&self.lattice, &self.bulks, &self.defects)
    }

    /// Bulk accelerations of the interior nodes.
    fn compute_forces(&mut self) {
        let inv_dx2 = 1.0 / (self.lattice.dx * self.lattice.dx);
        for (s, seg) in self.lattice.segments.iter().enumerate() {
            let bulk = &self.bulks[s];
            let acc = &mut self.acc[s];
            let phi = &seg.phi;
            let n = phi.len();
            for i in 1..n - 1 {
                acc[i] = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * inv_dx2 - bulk.deriv(phi[i]);
            }
        }
    }

    fn kick_interior(&mut self, h: f64) {
        for (seg, acc) in self.lattice.segments.iter_mut().zip(&self.acc) {
            let n = seg.len();
            for i in 1..n - 1 {
                seg.phi_t[i] += h * acc[i];
            }
        }
    }

    fn drift_interior(&mut self, dt: f64) {
        for seg in &mut self.lattice.segments {
            let n = seg.len();
            for i in 1..n - 1 {
                seg.phi[i] += dt * seg.phi_t[i];
            }
        }
    }

    /// (u_{N-1}, v_1) next to each junction.
    fn neighbours(&self) -> Vec<(f64, f64)> {
        (0..self.defects.len())
            .map(|j| {
                let l = &self.lattice.segments[j];
                (l.phi[l.len() - 2], self.lattice.segments[j + 1].phi[1])
            })
            .collect()
    }

    fn advance_junction(&mut self, j: usize, tau: f64, old_nb: (f64, f64), new_nb: (f64, f64)) {
        let m = self.substeps;
        let dx = self.lattice.dx;
        let ds = tau / m as f64;
        let hs = 0.5 * ds;
        let omega = 2.0 / dx;
        let nb_at = |k: usize| {
            let s = k as f64 / m as f64;
            (
                old_nb.0 + s * (new_nb.0 - old_nb.0),
                old_nb.1 + s * (new_nb.1 - old_nb.1),
            )
        };
        let (u_bulk, v_bulk) = (&self.bulks[j], &self.bulks[j + 1]);
        let n = self.lattice.segments[j].len();
        let mut u = self.lattice.segments[j].phi[n - 1];
        let mut v = self.lattice.segments[j + 1].phi[0];
        let view = |u_n: f64, v_0: f64, nb: (f64, f64)| junction::JunctionView {
            u_n,
            u_nm1: nb.0,
            v_0,
            v_1: nb.1,
            dx,
            u_bulk,
            v_bulk,
        };
        match &self.defects[j].defect {
            DefectSpec::TypeI(pot) => {
                let mut ut = self.lattice.segments[j].phi_t[n - 1];
                let mut vt = self.lattice.segments[j + 1].phi_t[0];
                let (mut r1, mut r2) = junction::type1_forces(pot, &view(u, v, nb_at(0)));
                for k in 0..m {
                    (ut, vt) = junction::gyro_kick(ut, vt, r1, r2, omega, hs);
                    u += ds * ut;
                    v += ds * vt;
                    (r1, r2) = junction::type1_forces(pot, &view(u, v, nb_at(k + 1)));
                    (ut, vt) = junction::gyro_kick(ut, vt, r1, r2, omega, hs);
                }
                self.lattice.segments[j].phi_t[n - 1] = ut;
                self.lattice.segments[j + 1].phi_t[0] = vt;
            }
            DefectSpec::TypeII(pot) => {
                let st = junction::Type2Step {
                    pot,
                    u_bulk,
                    v_bulk,
                    dx,
                    dt: ds,
                };
                let (mut p, mut p_t) = self.pair[j];
                let mut q = 0.5 * (u - v);
                let mut lam = self.lattice.lambda[j].expect("type II lambda");
                let mut a = junction::type2_p_accel(pot, &view(p + q, p - q, nb_at(0)), lam);
                for k in 0..m {
                    p_t += hs * a;
                    (p, q, lam) = st.advance(p, p_t, q, lam, nb_at(k), nb_at(k + 1));
                    a = junction::type2_p_accel(pot, &view(p + q, p - q, nb_at(k + 1)), lam);
                    p_t += hs * a;
                }
                self.pair[j] = (p, p_t);
                self.lattice.lambda[j] = Some(lam);
                u = p + q;
                v = p - q;
            }
        }
        self.lattice.segments[j].phi[n - 1] = u;
        self.lattice.segments[j + 1].phi[0] = v;
    }

    /// Write u_t, v_t at type II junctions from p_t and q_t = -D_λ/2, and
    /// refresh λ_t.
    fn sync_type2_velocities(&mut self) {
        let dx = self.lattice.dx;
        for j in 0..self.defects.len() {
            if let DefectSpec::TypeII(pot) = &self.defects[j].defect {
                let (l, r) = self.lattice.segments.split_at_mut(j + 1);
                let left = &mut l[j];
                let right = &mut r[0];
                let n = left.len();
                let (_, p_t) = self.pair[j];
                let jv = junction::JunctionView {
                    u_n: left.phi[n - 1],
                    u_nm1: left.phi[n - 2],
                    v_0: right.phi[0],
                    v_1: right.phi[1],
                    dx,
                    u_bulk: &self.bulks[j],
                    v_bulk: &self.bulks[j + 1],
                };
                let lam = self.lattice.lambda[j].expect("type II lambda");
                let (q_t, lam_t) = junction::type2_rates(pot, &jv, p_t, lam);
                left.phi_t[n - 1] = p_t + q_t;
                right.phi_t[0] = p_t - q_t;
                self.lattice.lambda_t[j] = Some(lam_t);
            }
        }
    }
}
