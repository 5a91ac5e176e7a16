//! Junction equations. With w = dx/2 the boundary nodes obey
//!
//! ```text
//! type I:   w u_tt = (u_{N-1} - u_N)/dx - w U'(u_N) + v_t - D_u
//!           w v_tt = (v_1 - v_0)/dx     - w V'(v_0) - u_t - D_v
//! type II:  2w p_tt = -W_p,   q_t = -D_λ/2,
//!           λ_t (2 + w D_λλ) = W_q - w (D_λp p_t + D_λq q_t)
//! ```
//!
//! where W collects the link energies, the half-cell bulk potentials and D⁰.

use crate::potentials::{BulkPotential, TypeIDefectPotential, TypeIIDefectPotential};

pub(crate) struct JunctionView<'a> {
    pub u_n: f64,
    pub u_nm1: f64,
    pub v_0: f64,
    pub v_1: f64,
    pub dx: f64,
    pub u_bulk: &'a BulkPotential,
    pub v_bulk: &'a BulkPotential,
}

/// Position-dependent accelerations of u_N and v_0 (the velocity coupling is
/// handled by [`gyro_kick`]).
pub(crate) fn type1_forces(pot: &TypeIDefectPotential, j: &JunctionView) -> (f64, f64) {
    let (du, dv) = pot.gradient(j.u_n, j.v_0);
    let inv = 1.0 / j.dx;
    let r1 = 2.0 * (j.u_nm1 - j.u_n) * inv * inv - j.u_bulk.deriv(j.u_n) - 2.0 * inv * du;
    let r2 = 2.0 * (j.v_1 - j.v_0) * inv * inv - j.v_bulk.deriv(j.v_0) - 2.0 * inv * dv;
    (r1, r2)
}

/// Half kick of length h for u_t' = r1 + Ω v_t, v_t' = r2 - Ω u_t, with the
/// Ω terms taken at the midpoint of the old and new velocities.
pub(crate) fn gyro_kick(ut: f64, vt: f64, r1: f64, r2: f64, omega: f64, h: f64) -> (f64, f64) {
    let k = 0.5 * h * omega;
    let a = ut + h * r1 + k * vt;
    let b = vt + h * r2 - k * ut;
    let d = 1.0 + k * k;
    ((a + k * b) / d, (b - k * a) / d)
}

fn w_p(pot: &TypeIIDefectPotential, j: &JunctionView, lam: f64) -> f64 {
    let p = 0.5 * (j.u_n + j.v_0);
    let q = 0.5 * (j.u_n - j.v_0);
    let w = 0.5 * j.dx;
    let part = pot.partials(p, q, lam);
    (j.u_n - j.u_nm1) / j.dx - (j.v_1 - j.v_0) / j.dx
        + w * (j.u_bulk.deriv(j.u_n) + j.v_bulk.deriv(j.v_0))
        + part.dp
}

pub(crate) fn type2_p_accel(pot: &TypeIIDefectPotential, j: &JunctionView, lam: f64) -> f64 {
    -w_p(pot, j, lam) / j.dx
}

/// (q_t, λ_t) at the current junction state.
pub(crate) fn type2_rates(pot: &TypeIIDefectPotential, j: &JunctionView, p_t: f64, lam: f64) -> (f64, f64) {
    let p = 0.5 * (j.u_n + j.v_0);
    let q = 0.5 * (j.u_n - j.v_0);
    let w = 0.5 * j.dx;
    let part = pot.partials(p, q, lam);
    let q_t = -0.5 * part.dl;
    let w_q = (j.u_n - j.u_nm1) / j.dx
        + (j.v_1 - j.v_0) / j.dx
        + w * (j.u_bulk.deriv(j.u_n) - j.v_bulk.deriv(j.v_0))
        + part.dq;
    let lam_t = (w_q - w * (part.dlp * p_t + part.dlq * q_t)) / (2.0 + w * part.dll);
    (q_t, lam_t)
}

pub(crate) struct Type2Step<'a> {
    pub pot: &'a TypeIIDefectPotential,
    pub u_bulk: &'a BulkPotential,
    pub v_bulk: &'a BulkPotential,
    pub dx: f64,
    pub dt: f64,
}

impl Type2Step<'_> {
    fn rates(&self, p: f64, p_t: f64, q: f64, lam: f64, nb: (f64, f64)) -> (f64, f64) {
        let j = JunctionView {
            u_n: p + q,
            u_nm1: nb.0,
            v_0: p - q,
            v_1: nb.1,
            dx: self.dx,
            u_bulk: self.u_bulk,
            v_bulk: self.v_bulk,
        };
        type2_rates(self.pot, &j, p_t, lam)
    }

    /// One drift of length dt: p moves with the half-kicked p_t, (q, λ) by
    /// the midpoint rule with neighbour values interpolated in time.
    pub fn advance(
        &self,
        p: f64,
        p_t: f64,
        q: f64,
        lam: f64,
        old_nb: (f64, f64),
        new_nb: (f64, f64),
    ) -> (f64, f64, f64) {
        let dt = self.dt;
        let (q1, l1) = self.rates(p, p_t, q, lam, old_nb);
        let mid_nb = (0.5 * (old_nb.0 + new_nb.0), 0.5 * (old_nb.1 + new_nb.1));
        let (q2, l2) = self.rates(
            p + 0.5 * dt * p_t,
            p_t,
            q + 0.5 * dt * q1,
            lam + 0.5 * dt * l1,
            mid_nb,
        );
        (p + dt * p_t, q + dt * q2, lam + dt * l2)
    }
}

/// Newton iteration on D_λ = 0 starting from λ = p. On failure returns the
/// final |D_λ|.
pub(crate) fn solve_lambda(pot: &TypeIIDefectPotential, p: f64, q: f64) -> Result<f64, f64> {
    let mut lam = p;
    let mut last = f64::INFINITY;
    for _ in 0..20 {
        let part = pot.partials(p, q, lam);
        last = part.dl.abs();
        if last < 1e-11 {
            return Ok(lam);
        }
        if part.dll == 0.0 || !part.dll.is_finite() {
            break;
        }
        let step = part.dl / part.dll;
        lam -= step;
        if step.abs() < 1e-13 {
            return Ok(lam);
        }
    }
    let part = pot.partials(p, q, lam);
    if part.dl.abs() < 1e-9 {
        Ok(lam)
    } else {
        Err(last.min(part.dl.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gyro_kick_is_exact_midpoint() {
        let (ut, vt, r1, r2, om, h) = (0.3, -0.7, 1.5, 0.2, 200.0, 0.002);
        let (nu, nv) = gyro_kick(ut, vt, r1, r2, om, h);
        assert!((nu - (ut + h * (r1 + om * 0.5 * (vt + nv)))).abs() < 1e-13);
        assert!((nv - (vt + h * (r2 - om * 0.5 * (ut + nu)))).abs() < 1e-13);
        // pure rotation preserves u_t² + v_t²
        let (a, b) = gyro_kick(ut, vt, 0.0, 0.0, om, h);
        assert!((a * a + b * b - ut * ut - vt * vt).abs() < 1e-14);
    }

    #[test]
    fn newton_failure_reported() {
        use std::sync::Arc;
        // D_λ = 1 + λ² has no root
        let pot = TypeIIDefectPotential::new(
            "bad",
            1.0,
            Arc::new(|s, _| s + s * s * s / 3.0),
            Arc::new(|_, _| 0.0),
        );
        assert!(solve_lambda(&pot, 0.0, 0.0).is_err());
    }
}
