//! Quantum transmission data for the sine-Gordon defect: coupling constants,
//! the bulk two-soliton S-matrix, the Konik–LeClair and type II transmission
//! matrices, the minimal prefactor f(q, x) and the triangle-relation check.
//!
//! Soliton labels are stored as indices, `0` for + and `1` for −. Transmission
//! matrices live on a window of defect charges α ∈ [−M, M] of one parity.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{bernoulli_poly, gamma_pole, hurwitz_zeta, ln_gamma};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Distance to θ = η − iπ/2γ (the pole of f) or to the cancelling zero of
/// 1 + i e^{γ(θ−η)} below which f is not evaluated.
pub const RESONANCE_TOL: f64 = 1e-8;

/// Tolerance on a±d± − b±c± for type II parameters.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransmissionError {
    #[error("beta^2 must be in (0, 8π) so that gamma > 0, got {0}")]
    BadCoupling(f64),
    #[error("window M = {0} too small (need at least {1})")]
    WindowTooSmall(i32, i32),
    #[error("truncation K = {0} below the minimum of 50")]
    TruncationTooSmall(usize),
    #[error("Gamma pole in factor {factor} at argument {arg}")]
    GammaPole { factor: String, arg: Complex64 },
    #[error("theta is within {distance:e} of the resonance pole theta = eta - i pi/(2 gamma)")]
    ResonancePole { distance: f64 },
    #[error("1 + i e^(gamma (theta - eta)) = {distance:e}: the explicit pole cancels against a zero of the Gamma product there")]
    RemovablePoint { distance: f64 },
    #[error("constraint {name} violated: |residual| = {value:e}")]
    Constraint { name: &'static str, value: f64 },
    #[error("matrix shapes differ")]
    Shape,
}

/// β², γ = 8π/β² − 1, q = e^{iπγ}, Q = e^{4π²i/β²} = √(−q) and the soliton
/// mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub beta2: f64,
    pub gamma: f64,
    pub qdef: Complex64,
    pub qdef_big: Complex64,
    pub ms: f64,
}

impl CouplingParams {
    pub fn from_beta2(beta2: f64, ms: f64) -> Result<Self, TransmissionError> {
        if !(beta2 > 0.0 && beta2 < 8.0 * PI) {
            return Err(TransmissionError::BadCoupling(beta2));
        }
        let gamma = 8.0 * PI / beta2 - 1.0;
        Ok(Self {
            beta2,
            gamma,
            qdef: Complex64::from_polar(1.0, PI * gamma),
            qdef_big: Complex64::from_polar(1.0, 4.0 * PI * PI / beta2),
            ms,
        })
    }

    pub fn from_gamma(gamma: f64, ms: f64) -> Result<Self, TransmissionError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(TransmissionError::BadCoupling(8.0 * PI / (gamma + 1.0)));
        }
        Self::from_beta2(8.0 * PI / (gamma + 1.0), ms)
    }

    /// q^{1/2} = e^{iπγ/2}.
    pub fn q_half(&self) -> Complex64 {
        Complex64::from_polar(1.0, 0.5 * PI * self.gamma)
    }

    /// x(θ) = e^{γθ}.
    pub fn x(&self, theta: Complex64) -> Complex64 {
        (theta * self.gamma).exp()
    }

    /// Smallest n ≤ `max_order` with |qⁿ − 1| < 1e-9, if any. Such couplings
    /// make the S-matrix degenerate (at γ = 3, q = −1 and c = 0).
    pub fn root_of_unity_order(&self, max_order: u32) -> Option<u32> {
        (1..=max_order).find(|&n| (self.qdef.powu(n) - 1.0).norm() < 1e-9)
    }
}

/// Unnormalised six-vertex S_{ab}^{cd}(Θ), stored as `m[2a+b][2c+d]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SMatrix {
    pub theta_diff: f64,
    pub m: [[Complex64; 4]; 4],
}

impl SMatrix {
    pub fn entry(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        self.m[2 * a + b][2 * c + d]
    }
}

/// Weights (a, b, c): a = q/x − x/q on like charges, b = x − 1/x on the
/// exchange channel S_{ab}^{ba}, c = q − 1/q on S_{ab}^{ab} (a ≠ b).
pub fn six_vertex_weights(theta_diff: Complex64, coupling: &CouplingParams) -> (Complex64, Complex64, Complex64) {
    let x = coupling.x(theta_diff);
    let q = coupling.qdef;
    (q / x - x / q, x - x.inv(), q - q.inv())
}

pub fn smatrix(theta_diff: f64, coupling: &CouplingParams) -> SMatrix {
    let (a, b, c) = six_vertex_weights(Complex64::new(theta_diff, 0.0), coupling);
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = a;
    m[3][3] = a;
    // (+,-) -> (-,+) and back
    m[1][2] = b;
    m[2][1] = b;
    m[1][1] = c;
    m[2][2] = c;
    SMatrix { theta_diff, m }
}

/// Max-norm of the braid-form Yang–Baxter defect
/// Ř₁₂(Θ₁₂)Ř₂₃(Θ₁₃)Ř₁₂(Θ₂₃) − Ř₂₃(Θ₂₃)Ř₁₂(Θ₁₃)Ř₂₃(Θ₁₂) on three lines, with
/// Ř the matrix of S_{ab}^{cd} acting (c,d) → (a,b).
pub fn yang_baxter_residual(coupling: &CouplingParams, t1: f64, t2: f64, t3: f64) -> f64 {
    let s12 = smatrix(t1 - t2, coupling);
    let s13 = smatrix(t1 - t3, coupling);
    let s23 = smatrix(t2 - t3, coupling);
    let on12 = |s: &SMatrix| {
        let mut r = [[ZERO; 8]; 8];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    for d in 0..2 {
                        for e in 0..2 {
                            r[4 * a + 2 * b + e][4 * c + 2 * d + e] = s.entry(a, b, c, d);
                        }
                    }
                }
            }
        }
        r
    };
    let on23 = |s: &SMatrix| {
        let mut r = [[ZERO; 8]; 8];
        for e in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for d in 0..2 {
                            r[4 * e + 2 * a + b][4 * e + 2 * c + d] = s.entry(a, b, c, d);
                        }
                    }
                }
            }
        }
        r
    };
    let mul = |x: &[[Complex64; 8]; 8], y: &[[Complex64; 8]; 8]| {
        let mut r = [[ZERO; 8]; 8];
        for i in 0..8 {
            for k in 0..8 {
                if x[i][k] == ZERO {
                    continue;
                }
                for j in 0..8 {
                    r[i][j] += x[i][k] * y[k][j];
                }
            }
        }
        r
    };
    let lhs = mul(&mul(&on12(&s12), &on23(&s13)), &on12(&s23));
    let rhs = mul(&mul(&on23(&s23), &on12(&s13)), &on23(&s12));
    let mut worst: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            worst = worst.max((lhs[i][j] - rhs[i][j]).norm());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    /// Every integer charge (used when labels differ by one).
    All,
}

impl Parity {
    pub fn admits(&self, alpha: i32) -> bool {
        match self {
            Parity::Even => alpha.rem_euclid(2) == 0,
            Parity::Odd => alpha.rem_euclid(2) == 1,
            Parity::All => true,
        }
    }
}

/// T_{aα}^{bβ} on labels × charges, dense. `labels[i]` is the charge carried
/// by soliton label i, used for the conservation rule a + α = b + β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeWindowMatrix {
    pub window: i32,
    pub parity: Parity,
    pub labels: Vec<i32>,
    charges: Vec<i32>,
    entries: Vec<Complex64>,
}

impl ChargeWindowMatrix {
    pub fn zeros(window: i32, parity: Parity, labels: Vec<i32>) -> Self {
        let charges: Vec<i32> = (-window..=window).filter(|&a| parity.admits(a)).collect();
        let dim = labels.len() * charges.len();
        Self {
            window,
            parity,
            labels,
            charges,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn charges(&self) -> &[i32] {
        &self.charges
    }

    pub fn dim(&self) -> usize {
        self.labels.len() * self.charges.len()
    }

    fn charge_index(&self, alpha: i32) -> Option<usize> {
        if alpha.abs() > self.window || !self.parity.admits(alpha) {
            return None;
        }
        self.charges.iter().position(|&c| c == alpha)
    }

    /// Flat index of (label, charge), if inside the window.
    pub fn index(&self, label: usize, alpha: i32) -> Option<usize> {
        self.charge_index(alpha).map(|c| label * self.charges.len() + c)
    }

    /// (label, charge) of a flat index.
    pub fn state(&self, idx: usize) -> (usize, i32) {
        let n = self.charges.len();
        (idx / n, self.charges[idx % n])
    }

    /// T_{aα}^{bβ}; zero outside the window.
    pub fn get(&self, a: usize, alpha: i32, b: usize, beta: i32) -> Complex64 {
        match (self.index(a, alpha), self.index(b, beta)) {
            (Some(i), Some(j)) => self.entries[i * self.dim() + j],
            _ => ZERO,
        }
    }

    /// Set an entry. Panics if it breaks charge conservation; entries whose
    /// target lies outside the window are silently dropped.
    pub fn set(&mut self, a: usize, alpha: i32, b: usize, beta: i32, value: Complex64) {
        assert_eq!(
            self.labels[a] + alpha,
            self.labels[b] + beta,
            "charge conservation violated at ({a},{alpha}) -> ({b},{beta})"
        );
        if let (Some(i), Some(j)) = (self.index(a, alpha), self.index(b, beta)) {
            let d = self.dim();
            self.entries[i * d + j] = value;
        }
    }

    pub fn entry_flat(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim() + j]
    }

    pub fn is_interior(&self, alpha: i32) -> bool {
        alpha.abs() <= self.window - 2
    }

    /// True if every non-zero entry conserves a + α = b + β.
    pub fn conserves_charge(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let (a, al) = self.state(i);
                let (b, be) = self.state(j);
                self.entries[i * d + j] == ZERO || self.labels[a] + al == self.labels[b] + be
            })
        })
    }

    pub fn scale(&mut self, s: Complex64) {
        self.entries.iter_mut().for_each(|e| *e *= s);
    }

    /// Multiply the entries with a ≠ b by `s`.
    pub fn scale_off_diagonal(&mut self, s: f64) {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if self.state(i).0 != self.state(j).0 {
                    self.entries[i * d + j] *= s;
                }
            }
        }
    }

    /// Replace every entry by `f(a, α, b, β, value)`.
    pub fn map_entries(&mut self, f: impl Fn(usize, i32, usize, i32, Complex64) -> Complex64) {
        let d = self.dim();
        for i in 0..d {
            let (a, al) = self.state(i);
            for j in 0..d {
                let (b, be) = self.state(j);
                self.entries[i * d + j] = f(a, al, b, be, self.entries[i * d + j]);
            }
        }
    }

    /// max |(T T†)_{ij} − δ_ij| over interior rows and columns.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            if !self.is_interior(self.state(i).1) {
                continue;
            }
            for j in 0..d {
                if !self.is_interior(self.state(j).1) {
                    continue;
                }
                let mut s = ZERO;
                for k in 0..d {
                    s += self.entries[i * d + k] * self.entries[j * d + k].conj();
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

fn check_window(m: i32, min: i32) -> Result<(), TransmissionError> {
    if m < min {
        Err(TransmissionError::WindowTooSmall(m, min))
    } else {
        Ok(())
    }
}

/// Shifts s and signs of the Gamma factors in r(x) relative to kγ.
fn r_shifts(gamma: f64) -> [(f64, f64, &'static str); 4] {
    [
        (0.25, 1.0, "Gamma(k*gamma + 1/4 -+ z)"),
        (gamma + 0.75, 1.0, "Gamma((k+1)*gamma + 3/4 -+ z)"),
        (0.5 * gamma + 0.25, -1.0, "Gamma((k+1/2)*gamma + 1/4 -+ z)"),
        (0.5 * gamma + 0.75, -1.0, "Gamma((k+1/2)*gamma + 3/4 -+ z)"),
    ]
}

/// ln(r(x)/r̄(x)) with z = iγ(θ−η)/2π, the product over k = 0..K, and (if
/// `tail`) the remainder k > K summed from the Stirling expansion.
fn ln_r_ratio(z: Complex64, gamma: f64, k_max: usize, tail: bool) -> Result<Complex64, TransmissionError> {
    let shifts = r_shifts(gamma);
    let mut acc = ZERO;
    for k in 0..=k_max {
        let base = k as f64 * gamma;
        for &(s, eps, name) in &shifts {
            for (sign, arg) in [(1.0, base + s - z), (-1.0, base + s + z)] {
                if gamma_pole(arg).is_some() {
                    return Err(TransmissionError::GammaPole {
                        factor: format!("{name} at k = {k}"),
                        arg,
                    });
                }
                acc += ln_gamma(arg) * (eps * sign);
            }
        }
    }
    if tail {
        // ln Γ(N + s) ~ (N + s − ½) ln N − N + ½ ln 2π
        //             + Σ_n (−1)^{n+1} B_{n+1}(s) / (n (n+1) Nⁿ),  N = kγ.
        // The n = 0 and n = 1 pieces cancel between r and r̄.
        for n in 2..=8usize {
            let mut beta = ZERO;
            for &(s, eps, _) in &shifts {
                let sc = Complex64::new(s, 0.0);
                beta += (bernoulli_poly(n + 1, sc - z) - bernoulli_poly(n + 1, sc + z)) * eps;
            }
            let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
            let zeta = hurwitz_zeta(n as u32, (k_max + 1) as f64);
            acc += beta * (sign * zeta / ((n * (n + 1)) as f64 * gamma.powi(n as i32)));
        }
    }
    Ok(acc)
}

fn minimal_f_impl(
    theta: Complex64,
    eta: f64,
    coupling: &CouplingParams,
    k_max: usize,
    tail: bool,
) -> Result<Complex64, TransmissionError> {
    if k_max < 50 {
        return Err(TransmissionError::TruncationTooSmall(k_max));
    }
    let g = coupling.gamma;
    let pole = Complex64::new(eta, -PI / (2.0 * g));
    let distance = (theta - pole).norm();
    if distance < RESONANCE_TOL {
        return Err(TransmissionError::ResonancePole { distance });
    }
    let xe = ((theta - eta) * g).exp();
    let den = ONE + I * xe;
    if den.norm() < RESONANCE_TOL {
        return Err(TransmissionError::RemovablePoint { distance: den.norm() });
    }
    let z = I * g * (theta - eta) / (2.0 * PI);
    let lr = ln_r_ratio(z, g, k_max, tail)?;
    let pre = Complex64::from_polar(1.0, PI * (1.0 + g) / 4.0);
    Ok(pre / den * lr.exp())
}

/// Minimal prefactor f(q, x) at complex rapidity, with the Stirling tail of
/// the infinite product added to the K-term truncation.
pub fn minimal_f_at(theta: Complex64, eta: f64, coupling: &CouplingParams, k_max: usize) -> Result<Complex64, TransmissionError> {
    minimal_f_impl(theta, eta, coupling, k_max, true)
}

pub fn minimal_f(theta: f64, eta: f64, coupling: &CouplingParams, k_max: usize) -> Result<Complex64, TransmissionError> {
    minimal_f_at(Complex64::new(theta, 0.0), eta, coupling, k_max)
}

/// As [`minimal_f_at`] but with the bare truncated product.
pub fn minimal_f_truncated(
    theta: Complex64,
    eta: f64,
    coupling: &CouplingParams,
    k_max: usize,
) -> Result<Complex64, TransmissionError> {
    minimal_f_impl(theta, eta, coupling, k_max, false)
}

/// Residuals of f(x) f(qx) = 1/(1 + e^{2γ(θ−η)}) and conj f(x) = f(qx) at
/// real θ; qx means θ → θ + iπ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FResiduals {
    pub unitarity: f64,
    pub conjugation: f64,
}

pub fn f_residuals(theta: f64, eta: f64, coupling: &CouplingParams, k_max: usize, tail: bool) -> Result<FResiduals, TransmissionError> {
    let th = Complex64::new(theta, 0.0);
    let th_q = Complex64::new(theta, PI);
    let f1 = minimal_f_impl(th, eta, coupling, k_max, tail)?;
    let f2 = minimal_f_impl(th_q, eta, coupling, k_max, tail)?;
    let target = 1.0 / (1.0 + (2.0 * coupling.gamma * (theta - eta)).exp());
    Ok(FResiduals {
        unitarity: (f1 * f2 - target).norm(),
        conjugation: (f1.conj() - f2).norm(),
    })
}

fn kl_fill(t: &mut ChargeWindowMatrix, f: Complex64, off: Complex64, big_q: Complex64) {
    for &alpha in &t.charges().to_vec() {
        let qa = big_q.powi(alpha);
        t.set(0, alpha, 0, alpha, f * qa);
        t.set(1, alpha, 1, alpha, f * qa.inv());
        t.set(0, alpha, 1, alpha + 2, f * off);
        t.set(1, alpha, 0, alpha - 2, f * off);
    }
}

/// Konik–LeClair matrix at complex rapidity.
pub fn kl_transmission_at(
    theta: Complex64,
    eta: f64,
    coupling: &CouplingParams,
    window: i32,
    parity: Parity,
    k_max: usize,
) -> Result<ChargeWindowMatrix, TransmissionError> {
    check_window(window, 2)?;
    let f = minimal_f_at(theta, eta, coupling, k_max)?;
    let off = coupling.q_half().inv() * ((theta - eta) * coupling.gamma).exp();
    let mut t = ChargeWindowMatrix::zeros(window, parity, vec![1, -1]);
    kl_fill(&mut t, f, off, coupling.qdef_big);
    Ok(t)
}

/// T = f(q,x) [[Q^α δ, q^{−1/2}e^{γ(θ−η)} δ_{β,α+2}], [q^{−1/2}e^{γ(θ−η)} δ_{β,α−2}, Q^{−α} δ]].
pub fn kl_transmission(
    theta: f64,
    eta: f64,
    coupling: &CouplingParams,
    window: i32,
    parity: Parity,
    k_max: usize,
) -> Result<ChargeWindowMatrix, TransmissionError> {
    kl_transmission_at(Complex64::new(theta, 0.0), eta, coupling, window, parity, k_max)
}

/// The Konik–LeClair structure with the prefactor set to one, for triangle
/// checks that do not need f.
pub fn kl_structure(theta: f64, eta: f64, coupling: &CouplingParams, window: i32, parity: Parity) -> ChargeWindowMatrix {
    let off = coupling.q_half().inv() * (coupling.gamma * (theta - eta)).exp();
    let mut t = ChargeWindowMatrix::zeros(window, parity, vec![1, -1]);
    kl_fill(&mut t, ONE, off, coupling.qdef_big);
    t
}

/// m_s cosh(η − iπ/2γ) = m_s (cosh η cos(π/2γ) − i sinh η sin(π/2γ)).
pub fn resonance_energy(eta: f64, coupling: &CouplingParams) -> Complex64 {
    let w = PI / (2.0 * coupling.gamma);
    Complex64::new(eta.cosh() * w.cos(), -eta.sinh() * w.sin()) * coupling.ms
}

/// Lightest-breather transmission −i sinh((θ−η)/2 − iπ/4) / sinh((θ−η)/2 + iπ/4).
pub fn breather_transmission(theta: f64, eta: f64) -> Complex64 {
    let h = Complex64::new(0.5 * (theta - eta), 0.0);
    let w = Complex64::new(0.0, PI / 4.0);
    -I * (h - w).sinh() / (h + w).sinh()
}

/// Free constants of the type II solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Type2Params {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub b_plus: Complex64,
    pub b_minus: Complex64,
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub d_plus: Complex64,
    pub d_minus: Complex64,
    pub rho: Complex64,
}

impl Type2Params {
    /// Fill d± from a±d± = b±c±.
    pub fn admissible(a: [Complex64; 2], b: [Complex64; 2], c: [Complex64; 2], rho: Complex64) -> Self {
        Self {
            a_plus: a[0],
            a_minus: a[1],
            b_plus: b[0],
            b_minus: b[1],
            c_plus: c[0],
            c_minus: c[1],
            d_plus: b[0] * c[0] / a[0],
            d_minus: b[1] * c[1] / a[1],
            rho,
        }
    }

    pub fn check(&self) -> Result<(), TransmissionError> {
        let p = (self.a_plus * self.d_plus - self.b_plus * self.c_plus).norm();
        if p > CONSTRAINT_TOL {
            return Err(TransmissionError::Constraint {
                name: "a+ d+ - b+ c+ = 0",
                value: p,
            });
        }
        let m = (self.a_minus * self.d_minus - self.b_minus * self.c_minus).norm();
        if m > CONSTRAINT_TOL {
            return Err(TransmissionError::Constraint {
                name: "a- d- - b- c- = 0",
                value: m,
            });
        }
        Ok(())
    }
}

/// Type II matrix without the constraint check.
pub fn type2_transmission_unchecked(
    theta: f64,
    coupling: &CouplingParams,
    p: &Type2Params,
    window: i32,
    parity: Parity,
) -> ChargeWindowMatrix {
    let x = coupling.x(Complex64::new(theta, 0.0));
    let x2 = x * x;
    let mut t = ChargeWindowMatrix::zeros(window, parity, vec![1, -1]);
    for &alpha in &t.charges().to_vec() {
        let qa = coupling.qdef_big.powi(alpha);
        let qm = qa.inv();
        t.set(0, alpha, 0, alpha, p.rho * (p.a_plus * qa + p.a_minus * qm * x2));
        t.set(0, alpha, 1, alpha + 2, p.rho * x * (p.b_plus * qa + p.b_minus * qm));
        t.set(1, alpha, 0, alpha - 2, p.rho * x * (p.c_plus * qa + p.c_minus * qm));
        t.set(1, alpha, 1, alpha, p.rho * (p.d_plus * qa * x2 + p.d_minus * qm));
    }
    t
}

pub fn type2_transmission(
    theta: f64,
    coupling: &CouplingParams,
    p: &Type2Params,
    window: i32,
    parity: Parity,
) -> Result<ChargeWindowMatrix, TransmissionError> {
    check_window(window, 2)?;
    p.check()?;
    Ok(type2_transmission_unchecked(theta, coupling, p, window, parity))
}

/// max |LHS − RHS| of
/// Σ S_{ab}^{cd}(Θ) T_{dα}^{fβ}(θa) T_{cβ}^{eγ}(θb) = Σ T_{bα}^{dβ}(θb) T_{aβ}^{cγ}(θa) S_{cd}^{ef}(Θ)
/// over all labels and interior charges α, γ, with Θ = θa − θb, divided by
/// max|S|·max|T(θa)|·max|T(θb)| so that rescaling T(θ) leaves it unchanged.
pub fn triangle_residual<S, T>(s: S, t: T, theta_a: f64, theta_b: f64, window: i32) -> Result<f64, TransmissionError>
where
    S: Fn(f64) -> SMatrix,
    T: Fn(f64) -> Result<ChargeWindowMatrix, TransmissionError>,
{
    check_window(window, 3)?;
    let sm = s(theta_a - theta_b);
    let ta = t(theta_a)?;
    let tb = t(theta_b)?;
    if ta.window != window || tb.window != window || ta.labels.len() != 2 || tb.labels.len() != 2 {
        return Err(TransmissionError::Shape);
    }
    let charges: Vec<i32> = ta.charges().to_vec();
    let peak = |t: &ChargeWindowMatrix| (0..t.dim()).flat_map(|i| (0..t.dim()).map(move |j| (i, j))).map(|(i, j)| t.entry_flat(i, j).norm()).fold(0.0, f64::max);
    let s_peak = (0..16).map(|k| sm.entry(k >> 3, (k >> 2) & 1, (k >> 1) & 1, k & 1).norm()).fold(0.0, f64::max);
    let scale = s_peak * peak(&ta) * peak(&tb);
    if !(scale > 0.0) {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for &alpha in charges.iter().filter(|&&a| ta.is_interior(a)) {
        for &gam in charges.iter().filter(|&&a| ta.is_interior(a)) {
            for a in 0..2 {
                for b in 0..2 {
                    for e in 0..2 {
                        for f in 0..2 {
                            let mut lhs = ZERO;
                            let mut rhs = ZERO;
                            for &beta in &charges {
                                for c in 0..2 {
                                    for d in 0..2 {
                                        lhs += sm.entry(a, b, c, d) * ta.get(d, alpha, f, beta) * tb.get(c, beta, e, gam);
                                        rhs += tb.get(b, alpha, d, beta) * ta.get(a, beta, c, gam) * sm.entry(c, d, e, f);
                                    }
                                }
                            }
                            worst = worst.max((lhs - rhs).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cp(g: f64) -> CouplingParams {
        CouplingParams::from_gamma(g, 1.0).unwrap()
    }

    #[test]
    fn coupling_relations() {
        for g in [3.0, 3.137, 0.7] {
            let c = cp(g);
            assert!((c.qdef_big * c.qdef_big + c.qdef).norm() < 1e-12);
            assert!((c.q_half() * c.q_half() - c.qdef).norm() < 1e-12);
            assert!((c.qdef_big - I * c.q_half()).norm() < 1e-12);
        }
        assert_eq!(cp(3.0).root_of_unity_order(4), Some(2));
        assert_eq!(cp(3.137).root_of_unity_order(12), None);
        assert!(CouplingParams::from_beta2(30.0, 1.0).is_err());
    }

    #[test]
    fn smatrix_structure() {
        let c = cp(3.137);
        let s0 = smatrix(0.0, &c);
        assert_eq!(s0.entry(0, 1, 1, 0), ZERO);
        let s = smatrix(0.4, &c);
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    for d in 0..2 {
                        // label charges: + = 1, - = -1
                        let q = |i: usize| 1 - 2 * i as i32;
                        if q(a) + q(b) != q(cc) + q(d) {
                            assert_eq!(s.entry(a, b, cc, d), ZERO);
                        }
                    }
                }
            }
        }
        for (t1, t2, t3) in [(0.3, -0.2, 0.9), (1.1, 0.4, -0.6)] {
            // relative to the size of a cubic product of entries
            let scale = [t1 - t2, t1 - t3, t2 - t3]
                .iter()
                .map(|&d| smatrix(d, &c).m.iter().flatten().map(|e| e.norm()).fold(0.0, f64::max))
                .product::<f64>();
            let r = yang_baxter_residual(&c, t1, t2, t3);
            assert!(r < 1e-12 * scale, "{r} {scale}");
        }
    }

    #[test]
    fn prefactor_functional_relations() {
        let c = cp(3.0);
        for d in [-1.0, 0.0, 1.0] {
            let r = f_residuals(0.2 + d, 0.2, &c, 200, true).unwrap();
            assert!(r.unitarity < 1e-6 && r.conjugation < 1e-6, "{r:?}");
            // the bare truncation converges like 1/K
            let raw = f_residuals(0.2 + d, 0.2, &c, 200, false).unwrap();
            assert!(raw.unitarity < 1e-2);
        }
    }

    #[test]
    fn bare_truncation_improves_with_k() {
        let c = cp(3.137);
        let mut last = f64::INFINITY;
        for k in [50, 100, 200] {
            let r = f_residuals(0.8, 0.1, &c, k, false).unwrap();
            assert!(r.unitarity < last);
            last = r.unitarity;
        }
    }

    #[test]
    fn resonance_and_pole_errors() {
        let c = cp(3.0);
        let pole = Complex64::new(0.5, -PI / 6.0);
        let e = minimal_f_at(pole, 0.5, &c, 60).unwrap_err();
        assert!(matches!(e, TransmissionError::ResonancePole { .. }));
        // simple pole: |f| grows like 1/distance
        let near = |d: f64| minimal_f_at(pole + d, 0.5, &c, 60).unwrap().norm();
        let ratio = near(1e-6) / near(1e-4);
        assert!((ratio - 100.0).abs() < 0.1, "{ratio}");
        let zero = Complex64::new(0.5, PI / 6.0);
        assert!(matches!(
            minimal_f_at(zero, 0.5, &c, 60),
            Err(TransmissionError::RemovablePoint { .. })
        ));
        assert!(matches!(minimal_f(0.0, 0.0, &c, 10), Err(TransmissionError::TruncationTooSmall(10))));
        let en = resonance_energy(1.0, &c);
        let want = Complex64::new(1f64.cosh() * (PI / 6.0).cos(), -1f64.sinh() * (PI / 6.0).sin());
        assert!((en - want).norm() < 1e-15);
        assert!(resonance_energy(0.0, &c).im == 0.0);
        assert!(resonance_energy(1.0, &cp(1e6)).im.abs() < 1e-5);
    }

    #[test]
    fn breather_values() {
        assert!((breather_transmission(0.7, 0.7) - I).norm() < 1e-12);
        assert!((breather_transmission(60.0, 0.0) + 1.0).norm() < 1e-12);
    }

    #[test]
    fn kl_unitary_and_structure() {
        let c = cp(3.0);
        for parity in [Parity::Even, Parity::Odd] {
            let t = kl_transmission(0.9, 0.2, &c, 6, parity, 200).unwrap();
            assert!(t.conserves_charge());
            assert!(t.unitarity_residual() < 1e-8, "{}", t.unitarity_residual());
            let q2 = c.qdef_big * c.qdef_big;
            for &a in t.charges() {
                if a + 2 <= 6 {
                    let r = t.get(0, a + 2, 0, a + 2) - t.get(0, a, 0, a) * q2;
                    assert!(r.norm() < 1e-14);
                    let r = t.get(1, a + 2, 1, a + 2) - t.get(1, a, 1, a) / q2;
                    assert!(r.norm() < 1e-14);
                }
            }
        }
        let ratio = |eta: f64| {
            let t = kl_transmission(0.3, eta, &c, 4, Parity::Even, 60).unwrap();
            (t.get(0, 0, 1, 2) / t.get(0, 0, 0, 0)).norm()
        };
        assert!(ratio(8.0) < 1e-8);
        assert!(ratio(-8.0) > 1e8);
    }

    #[test]
    fn triangle_kl_and_type2() {
        let c = cp(3.137);
        let s = |th: f64| smatrix(th, &c);
        for parity in [Parity::Even, Parity::Odd] {
            let kl = |th: f64| Ok(kl_structure(th, 0.3, &c, 6, parity));
            let r = triangle_residual(s, kl, 0.4, -0.7, 6).unwrap();
            assert!(r < 1e-10, "{r}");
            let bad = |th: f64| {
                let mut t = kl_structure(th, 0.3, &c, 6, parity);
                t.scale_off_diagonal(1.1);
                Ok(t)
            };
            // rescaling off-diagonals is an η shift plus a charge similarity
            assert!(triangle_residual(s, bad, 0.4, -0.7, 6).unwrap() < 1e-10);
            let bad = |th: f64| {
                let mut t = kl_structure(th, 0.3, &c, 6, parity);
                // off-diagonal ×1.1 on one half of the window only
                t.map_entries(|a, al, b, _, v| if a != b && al >= 0 { v * 1.1 } else { v });
                Ok(t)
            };
            let r = triangle_residual(s, bad, 0.4, -0.7, 6).unwrap();
            assert!(r > 1e-3, "{r}");
            let mut q = Type2Params::admissible(
                [Complex64::new(0.7, 0.2), Complex64::new(-0.4, 0.9)],
                [Complex64::new(1.1, -0.3), Complex64::new(0.5, 0.5)],
                [Complex64::new(-0.6, 0.1), Complex64::new(0.8, -1.2)],
                ONE,
            );
            q.d_plus += 0.1 / q.a_plus;
            let bad2 = |th: f64| Ok(type2_transmission_unchecked(th, &c, &q, 6, parity));
            let r = triangle_residual(s, bad2, 0.4, -0.7, 6).unwrap();
            assert!(r > 1e-3, "{r}");
            let p = Type2Params::admissible(
                [Complex64::new(0.7, 0.2), Complex64::new(-0.4, 0.9)],
                [Complex64::new(1.1, -0.3), Complex64::new(0.5, 0.5)],
                [Complex64::new(-0.6, 0.1), Complex64::new(0.8, -1.2)],
                ONE,
            );
            let t2 = |th: f64| type2_transmission(th, &c, &p, 6, parity);
            let r = triangle_residual(s, t2, 0.4, -0.7, 6).unwrap();
            assert!(r < 1e-10, "{r}");
        }
        assert!(matches!(
            triangle_residual(s, |th| Ok(kl_structure(th, 0.0, &c, 2, Parity::Even)), 0.1, 0.2, 2),
            Err(TransmissionError::WindowTooSmall(2, 3))
        ));
    }

    #[test]
    fn type2_constraint_rejected() {
        let c = cp(3.0);
        let mut p = Type2Params::admissible([ONE, ONE], [ONE, ONE], [ONE, ONE], ONE);
        p.d_plus += 0.1;
        match type2_transmission(0.1, &c, &p, 4, Parity::Even) {
            Err(TransmissionError::Constraint { name, .. }) => assert!(name.starts_with("a+")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn type2_reduces_to_kl() {
        let c = cp(3.137);
        let (theta, eta) = (0.35, -0.2);
        let p = Type2Params {
            a_plus: Complex64::new(0.8, 0.1),
            a_minus: ZERO,
            b_plus: ZERO,
            b_minus: Complex64::new(1.3, -0.4),
            c_plus: Complex64::new(0.2, 0.6),
            c_minus: ZERO,
            d_plus: ZERO,
            d_minus: Complex64::new(-0.5, 0.3),
            rho: Complex64::new(0.9, 0.0),
        };
        let t2 = type2_transmission(theta, &c, &p, 6, Parity::Even).unwrap();
        let kl = kl_transmission(theta, eta, &c, 6, Parity::Even, 60).unwrap();
        // similarity D = diag(1 on +, Q^β on −)
        let qb = c.qdef_big;
        let dfac = |lab: usize, a: i32| if lab == 0 { ONE } else { qb.powi(a) };
        let mut ratios: [Option<Complex64>; 4] = [None; 4];
        for &a in t2.charges() {
            for (slot, (la, lb, db)) in [(0, 0, 0), (0, 1, 2), (1, 0, -2), (1, 1, 0)].iter().enumerate() {
                let b = a + db;
                if b.abs() > 6 {
                    continue;
                }
                let k = kl.get(*la, a, *lb, b) * dfac(*la, a) / dfac(*lb, b);
                let r = t2.get(*la, a, *lb, b) / k;
                match ratios[slot] {
                    None => ratios[slot] = Some(r),
                    Some(r0) => assert!((r - r0).norm() < 1e-12 * r0.norm(), "{slot} {a}"),
                }
            }
        }
    }

    proptest! {
        #[test]
        fn triangle_is_scalar_invariant(ta in -1.0f64..1.0, tb in -1.0f64..1.0, w in 0.1f64..2.0) {
            let c = cp(3.0);
            let s = |th: f64| smatrix(th, &c);
            let base = triangle_residual(s, |th| Ok(kl_structure(th, 0.2, &c, 5, Parity::Odd)), ta, tb, 5).unwrap();
            let scaled = triangle_residual(s, |th| {
                let mut t = kl_structure(th, 0.2, &c, 5, Parity::Odd);
                t.scale(Complex64::from_polar(1.0 + w * th * th, w * th));
                Ok(t)
            }, ta, tb, 5).unwrap();
            prop_assert!(base < 1e-10 && scaled < 1e-10);
        }

        #[test]
        fn breather_unimodular(t in -20.0f64..20.0, e in -5.0f64..5.0) {
            prop_assert!((breather_transmission(t, e).norm() - 1.0).abs() < 1e-12);
        }
    }
}
