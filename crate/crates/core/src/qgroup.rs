//! Borel subalgebra of U_q(a₂⁽²⁾) in a q-oscillator representation.
//!
//! The defect space is spanned by charge states |j⟩, j ∈ [−M, M], with
//! a|j⟩ = F(j)|j−1⟩ and â|j⟩ = |j+1⟩. The soliton space is the
//! three-dimensional fundamental representation with basis e₊, e₀, e₋.
//! Tensor products are ordered defect ⊗ soliton and flattened as
//! 3·(j + M) + label.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transmission::{ChargeWindowMatrix, Parity};

pub type CMatrix = DMatrix<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Constraint tolerance for b₁c₂ = b₂c₁ and the μλ relation.
pub const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum QGroupError {
    #[error("q-number [{0}] vanishes: q is a root of unity")]
    RootOfUnity(u32),
    #[error("binomial needs 0 <= k <= n, got n={n}, k={k}")]
    BadBinomial { n: u32, k: u32 },
    #[error("window M={window} too small, need at least {need}")]
    WindowTooSmall { window: i32, need: i32 },
    #[error("F parameters violate b1 c2 = b2 c1 by {0:e}")]
    Inadmissible(f64),
    #[error("{0} image is not invertible")]
    Singular(&'static str),
    #[error("mu(alpha) lambda(alpha+1) relation fails at alpha={alpha} by {value:e}")]
    MuLambda { alpha: i32, value: f64 },
    #[error("mu or lambda missing at alpha={0}")]
    MissingGauge(i32),
    #[error("rho sample missing at theta={0}")]
    MissingSample(Complex64),
    #[error("spectral phase {0} too close to pi for the strip evaluation")]
    BadPhase(f64),
}

/// q-number [m] = (q^m − q^−m)/(q − q^−1).
pub fn q_number(m: i32, q: Complex64) -> Result<Complex64, QGroupError> {
    let d = q - q.inv();
    let num = q.powi(m) - q.powi(-m);
    if d.norm() < 1e-14 || (m != 0 && num.norm() < 1e-14 * q.norm().powi(m.abs())) {
        return Err(QGroupError::RootOfUnity(m.unsigned_abs()));
    }
    Ok(num / d)
}

/// Symmetric Gaussian binomial [n k]_q.
pub fn q_binomial(n: u32, k: u32, q: Complex64) -> Result<Complex64, QGroupError> {
    if k > n {
        return Err(QGroupError::BadBinomial { n, k });
    }
    let mut out = ONE;
    for i in 1..=k {
        out *= q_number((n - k + i) as i32, q)? / q_number(i as i32, q)?;
    }
    Ok(out)
}

/// F(N) = (b₁(−1)^N + c₁) q^(−2N) + (b₂(−1)^N + c₂) q^(2N).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FParams {
    pub b1: Complex64,
    pub b2: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl FParams {
    pub fn new(b1: f64, b2: f64, c1: f64, c2: f64) -> Self {
        Self {
            b1: b1.into(),
            b2: b2.into(),
            c1: c1.into(),
            c2: c2.into(),
        }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn violation(&self) -> f64 {
        (self.b1 * self.c2 - self.b2 * self.c1).norm()
    }

    pub fn eval(&self, n: i32, q: Complex64) -> Complex64 {
        let s = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        (self.b1 * s + self.c1) * q.powi(-2 * n) + (self.b2 * s + self.c2) * q.powi(2 * n)
    }

    /// Parameters of N ↦ F(N+1).
    pub fn shifted(&self, q: Complex64) -> Self {
        let (qm, qp) = (q.powi(-2), q.powi(2));
        Self {
            b1: -self.b1 * qm,
            b2: -self.b2 * qp,
            c1: self.c1 * qm,
            c2: self.c2 * qp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorRep {
    pub window: i32,
    pub f: FParams,
    pub kappa0: Complex64,
    pub kappa1: Complex64,
    pub q: Complex64,
}

/// Window images of X₁⁺ = â, X₀⁺ = a·a, K₁ = κ₁q^N, K₀ = κ₀q^(−2N).
#[derive(Clone, Debug)]
pub struct BorelGenerators {
    pub x1p: CMatrix,
    pub x0p: CMatrix,
    pub k1: CMatrix,
    pub k0: CMatrix,
}

impl OscillatorRep {
    pub fn new(window: i32, f: FParams, q: Complex64) -> Self {
        Self {
            window,
            f,
            kappa0: ONE,
            kappa1: ONE,
            q,
        }
    }

    pub fn with_kappas(mut self, kappa0: Complex64, kappa1: Complex64) -> Self {
        self.kappa0 = kappa0;
        self.kappa1 = kappa1;
        self
    }

    pub fn dim(&self) -> usize {
        (2 * self.window + 1) as usize
    }

    pub fn index(&self, j: i32) -> usize {
        (j + self.window) as usize
    }

    pub fn charges(&self) -> impl Iterator<Item = i32> {
        -self.window..=self.window
    }

    /// |j| ≤ M − 3.
    pub fn interior(&self) -> impl Iterator<Item = i32> {
        let m = self.window - 3;
        -m..=m
    }

    pub fn check(&self) -> Result<(), QGroupError> {
        let v = self.f.violation();
        if v > CONSTRAINT_TOL {
            return Err(QGroupError::Inadmissible(v));
        }
        Ok(())
    }

    pub fn f_at(&self, n: i32) -> Complex64 {
        self.f.eval(n, self.q)
    }

    /// a|j⟩ = F(j)|j−1⟩; a|−M⟩ = 0.
    pub fn a(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for j in self.charges().skip(1) {
            m[(self.index(j - 1), self.index(j))] = self.f_at(j);
        }
        m
    }

    /// â|j⟩ = |j+1⟩; â|M⟩ = 0.
    pub fn a_hat(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for j in self.charges().take(self.dim() - 1) {
            m[(self.index(j + 1), self.index(j))] = ONE;
        }
        m
    }

    /// diag(c · q^(pN)).
    pub fn diag_pow(&self, c: Complex64, p: i32) -> CMatrix {
        let d: Vec<Complex64> = self.charges().map(|j| c * self.q.powi(p * j)).collect();
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// diag(G(N)).
    pub fn diag_fn(&self, g: impl Fn(i32) -> Complex64) -> CMatrix {
        let d: Vec<Complex64> = self.charges().map(g).collect();
        CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    pub fn generators(&self) -> BorelGenerators {
        let a = self.a();
        BorelGenerators {
            x1p: self.a_hat(),
            x0p: &a * &a,
            k1: self.diag_pow(self.kappa1, 1),
            k0: self.diag_pow(self.kappa0, -2),
        }
    }

    pub fn k1_inv(&self) -> CMatrix {
        self.diag_pow(self.kappa1.inv(), -1)
    }

    pub fn k0_inv(&self) -> CMatrix {
        self.diag_pow(self.kappa0.inv(), 2)
    }
}

fn norm_max(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-norm of `m` over the columns of the listed states (all rows),
/// divided by `scale` unless that is zero.
fn column_residual(m: &CMatrix, cols: impl Iterator<Item = usize>, scale: f64) -> f64 {
    let mut r: f64 = 0.0;
    for c in cols {
        for z in m.column(c).iter() {
            r = r.max(z.norm());
        }
    }
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

/// Named residuals; values are relative to the largest term of each relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<(String, f64)>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.residuals.iter().find(|r| r.0 == name).map(|r| r.1)
    }

    fn push(&mut self, name: &str, v: f64) {
        self.residuals.push((name.to_string(), v));
    }
}

/// `lhs − rhs` on interior columns, relative to the larger side.
fn relation(lhs: &CMatrix, rhs: &CMatrix, cols: &[usize]) -> f64 {
    let scale = column_residual(lhs, cols.iter().copied(), 0.0).max(column_residual(rhs, cols.iter().copied(), 0.0));
    column_residual(&(lhs - rhs), cols.iter().copied(), scale)
}

/// Borel relations on states |j| ≤ M−3.
pub fn check_borel(rep: &OscillatorRep) -> Result<ResidualReport, QGroupError> {
    if rep.window < 4 {
        return Err(QGroupError::WindowTooSmall { window: rep.window, need: 4 });
    }
    let g = rep.generators();
    let (k1i, k0i) = (rep.k1_inv(), rep.k0_inv());
    let q = rep.q;
    let cols: Vec<usize> = rep.interior().map(|j| rep.index(j)).collect();
    let mut out = ResidualReport { residuals: Vec::new() };
    let comm = &g.k1 * &g.k0 - &g.k0 * &g.k1;
    out.push("[K1,K0]", column_residual(&comm, cols.iter().copied(), 0.0));
    out.push("K0 X0+ K0^-1 = q^4 X0+", relation(&(&g.k0 * &g.x0p * &k0i), &(&g.x0p * q.powi(4)), &cols));
    out.push("K1 X1+ K1^-1 = q X1+", relation(&(&g.k1 * &g.x1p * &k1i), &(&g.x1p * q), &cols));
    out.push("K1 X0+ K1^-1 = q^-2 X0+", relation(&(&g.k1 * &g.x0p * &k1i), &(&g.x0p * q.powi(-2)), &cols));
    out.push("K0 X1+ K0^-1 = q^-2 X1+", relation(&(&g.k0 * &g.x1p * &k0i), &(&g.x1p * q.powi(-2)), &cols));
    Ok(out)
}

/// Oscillator identities aâ = F(N+1), âa = F(N) and a G(N) = G(N+1) a,
/// â G(N) = G(N−1) â for the supplied G.
pub fn check_oscillator(rep: &OscillatorRep, g: impl Fn(i32) -> Complex64) -> ResidualReport {
    let (a, ah) = (rep.a(), rep.a_hat());
    let cols: Vec<usize> = rep.interior().map(|j| rep.index(j)).collect();
    let mut out = ResidualReport { residuals: Vec::new() };
    out.push("a ah = F(N+1)", relation(&(&a * &ah), &rep.diag_fn(|j| rep.f_at(j + 1)), &cols));
    out.push("ah a = F(N)", relation(&(&ah * &a), &rep.diag_fn(|j| rep.f_at(j)), &cols));
    let gn = rep.diag_fn(&g);
    out.push("a G(N) = G(N+1) a", relation(&(&a * &gn), &(rep.diag_fn(|j| g(j + 1)) * &a), &cols));
    out.push("ah G(N) = G(N-1) ah", relation(&(&ah * &gn), &(rep.diag_fn(|j| g(j - 1)) * &ah), &cols));
    out
}

/// Per-state Serre sums Σ(−1)^k[5 k]_q F(N+k)F(N+k+1) and
/// Σ(−1)^k[2 k]_{q⁴} F(N+2k), each relative to the sum of term magnitudes.
pub fn serre_profile(f: &FParams, q: Complex64, states: impl Iterator<Item = i32>) -> Result<Vec<(i32, f64, f64)>, QGroupError> {
    let b5: Vec<Complex64> = (0..=5).map(|k| q_binomial(5, k, q)).collect::<Result<_, _>>()?;
    let b2: Vec<Complex64> = (0..=2).map(|k| q_binomial(2, k, q.powi(4))).collect::<Result<_, _>>()?;
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let rel = |sum: Complex64, mag: f64| if mag > 0.0 { sum.norm() / mag } else { sum.norm() };
    Ok(states
        .map(|n| {
            let (mut s1, mut m1) = (ZERO, 0.0);
            for (k, b) in b5.iter().enumerate() {
                let t = b * f.eval(n + k as i32, q) * f.eval(n + k as i32 + 1, q) * sign(k);
                s1 += t;
                m1 += t.norm();
            }
            let (mut s2, mut m2) = (ZERO, 0.0);
            for (k, b) in b2.iter().enumerate() {
                let t = b * f.eval(n + 2 * k as i32, q) * sign(k);
                s2 += t;
                m2 += t.norm();
            }
            (n, rel(s1, m1), rel(s2, m2))
        })
        .collect())
}

/// Serre relations on |j| ≤ M−3: the two F-sums, plus the operator forms
/// Σ(−1)^k[5 k](X₁⁺)^(5−k) X₀⁺ (X₁⁺)^k and Σ(−1)^k[2 k]_{q⁴}(X₀⁺)^(2−k) X₁⁺ (X₀⁺)^k
/// on the states whose support stays inside the window.
pub fn check_serre(rep: &OscillatorRep) -> Result<ResidualReport, QGroupError> {
    if rep.window < 4 {
        return Err(QGroupError::WindowTooSmall { window: rep.window, need: 4 });
    }
    let q = rep.q;
    let prof = serre_profile(&rep.f, q, rep.interior())?;
    let mut out = ResidualReport { residuals: Vec::new() };
    out.push("serre5", prof.iter().map(|p| p.1).fold(0.0, f64::max));
    out.push("serre2", prof.iter().map(|p| p.2).fold(0.0, f64::max));

    let g = rep.generators();
    let pow = |m: &CMatrix, k: usize| (0..k).fold(CMatrix::identity(rep.dim(), rep.dim()), |acc, _| &acc * m);
    let sign = |k: u32| if k % 2 == 0 { 1.0 } else { -1.0 };
    let (mut op5, mut mag5) = (CMatrix::zeros(rep.dim(), rep.dim()), CMatrix::zeros(rep.dim(), rep.dim()));
    for k in 0..=5u32 {
        let t = pow(&g.x1p, 5 - k as usize) * &g.x0p * pow(&g.x1p, k as usize) * (q_binomial(5, k, q)? * sign(k));
        mag5 += t.map(|z| Complex64::from(z.norm()));
        op5 += t;
    }
    let (mut op2, mut mag2) = (CMatrix::zeros(rep.dim(), rep.dim()), CMatrix::zeros(rep.dim(), rep.dim()));
    for k in 0..=2u32 {
        let t = pow(&g.x0p, 2 - k as usize) * &g.x1p * pow(&g.x0p, k as usize) * (q_binomial(2, k, q.powi(4))? * sign(k));
        mag2 += t.map(|z| Complex64::from(z.norm()));
        op2 += t;
    }
    // (X₁⁺)^5 reaches j+5; (X₀⁺)² reaches j−4
    let m = rep.window;
    let per_state = |op: &CMatrix, mag: &CMatrix, lo: i32, hi: i32| {
        (lo..=hi)
            .map(|j| {
                let c = rep.index(j);
                let s = mag.column(c).iter().map(|z| z.re).fold(0.0, f64::max);
                let r = op.column(c).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if s > 0.0 {
                    r / s
                } else {
                    r
                }
            })
            .fold(0.0, f64::max)
    };
    out.push("serre5 operator", per_state(&op5, &mag5, -m + 2, m - 5));
    out.push("serre2 operator", per_state(&op2, &mag2, -m + 4, m - 1));
    Ok(out)
}

/// Three-dimensional images of the six generators on e₊, e₀, e₋.
#[derive(Clone, Debug)]
pub struct FundamentalRep {
    pub q: Complex64,
    pub x1p: CMatrix,
    pub x1m: CMatrix,
    pub x0p: CMatrix,
    pub x0m: CMatrix,
    pub k1: CMatrix,
    pub k0: CMatrix,
}

impl FundamentalRep {
    /// K₁ = diag(q, 1, q⁻¹), K₀ = K₁⁻², X₁⁺: e₋ → e₀ → e₊ with unit
    /// weights, X₁⁻ with weights [2]_q, X₀⁺: e₊ → e₋, X₀⁻: e₋ → e₊.
    pub fn standard(q: Complex64) -> Self {
        let z = || CMatrix::zeros(3, 3);
        let two = q + q.inv();
        let mut x1p = z();
        x1p[(0, 1)] = ONE;
        x1p[(1, 2)] = ONE;
        let mut x1m = z();
        x1m[(1, 0)] = two;
        x1m[(2, 1)] = two;
        let mut x0p = z();
        x0p[(2, 0)] = ONE;
        let mut x0m = z();
        x0m[(0, 2)] = ONE;
        let k1 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![q, ONE, q.inv()]));
        let k0 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![q.powi(-2), ONE, q.powi(2)]));
        Self {
            q,
            x1p,
            x1m,
            x0p,
            x0m,
            k1,
            k0,
        }
    }

    fn inv(m: &CMatrix, name: &'static str) -> Result<CMatrix, QGroupError> {
        m.clone().try_inverse().ok_or(QGroupError::Singular(name))
    }

    pub fn k1_inv(&self) -> Result<CMatrix, QGroupError> {
        Self::inv(&self.k1, "K1")
    }

    pub fn k0_inv(&self) -> Result<CMatrix, QGroupError> {
        Self::inv(&self.k0, "K0")
    }

    /// Every defining relation of U_q(a₂⁽²⁾), including those with X⁻.
    pub fn audit(&self) -> Result<ResidualReport, QGroupError> {
        let q = self.q;
        let (k1i, k0i) = (self.k1_inv()?, self.k0_inv()?);
        let cols = [0usize, 1, 2];
        let mut out = ResidualReport { residuals: Vec::new() };
        let r = |l: CMatrix, rr: CMatrix| relation(&l, &rr, &cols);
        out.push("[K1,K0]", norm_max(&(&self.k1 * &self.k0 - &self.k0 * &self.k1)));
        for (s, x0, x1) in [(1, &self.x0p, &self.x1p), (-1, &self.x0m, &self.x1m)] {
            out.push("K0 X0 K0^-1", r(&self.k0 * x0 * &k0i, x0 * q.powi(4 * s)));
            out.push("K1 X1 K1^-1", r(&self.k1 * x1 * &k1i, x1 * q.powi(s)));
            out.push("K1 X0 K1^-1", r(&self.k1 * x0 * &k1i, x0 * q.powi(-2 * s)));
            out.push("K0 X1 K0^-1", r(&self.k0 * x1 * &k0i, x1 * q.powi(-2 * s)));
        }
        let k0sq = &self.k0 * &self.k0 - &k0i * &k0i;
        let k1sq = &self.k1 * &self.k1 - &k1i * &k1i;
        out.push(
            "[X0+,X0-]",
            r(&self.x0p * &self.x0m - &self.x0m * &self.x0p, k0sq / (q.powi(4) - q.powi(-4))),
        );
        out.push("[X1+,X1-]", r(&self.x1p * &self.x1m - &self.x1m * &self.x1p, k1sq / (q - q.inv())));
        out.push("[X1+,X0-]", norm_max(&(&self.x1p * &self.x0m - &self.x0m * &self.x1p)));
        out.push("[X1-,X0+]", norm_max(&(&self.x1m * &self.x0p - &self.x0p * &self.x1m)));
        let sign = |k: u32| if k % 2 == 0 { 1.0 } else { -1.0 };
        let pow = |m: &CMatrix, k: u32| (0..k).fold(CMatrix::identity(3, 3), |acc, _| &acc * m);
        for (x0, x1) in [(&self.x0p, &self.x1p), (&self.x0m, &self.x1m)] {
            let mut s5 = CMatrix::zeros(3, 3);
            for k in 0..=5 {
                s5 += pow(x1, 5 - k) * x0 * pow(x1, k) * (q_binomial(5, k, q)? * sign(k));
            }
            let mut s2 = CMatrix::zeros(3, 3);
            for k in 0..=2 {
                s2 += pow(x0, 2 - k) * x1 * pow(x0, k) * (q_binomial(2, k, q.powi(4))? * sign(k));
            }
            out.push("serre5", norm_max(&s5));
            out.push("serre2", norm_max(&s2));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    X1p,
    X0p,
    K1,
    K0,
}

pub const BOREL: [Generator; 4] = [Generator::X1p, Generator::X0p, Generator::K1, Generator::K0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Delta,
    DeltaPrime,
}

/// Δ(K) = K⊗K, Δ(X) = X⊗K⁻¹ + K⊗X, Δ′(X) = K⁻¹⊗X + X⊗K, on
/// 𝒱_z ⊗ V_x with the homogeneous gradation E₀ = z·X₀⁺ on the defect
/// and E₀ = x·X₀⁺ on the soliton.
pub fn coproduct(
    gen: Generator,
    side: Side,
    rep: &OscillatorRep,
    z: Complex64,
    fund: &FundamentalRep,
    x: Complex64,
) -> Result<CMatrix, QGroupError> {
    let g = rep.generators();
    let (a, ak, aki, b, bk, bki) = match gen {
        Generator::X1p => (g.x1p, g.k1, rep.k1_inv(), fund.x1p.clone(), fund.k1.clone(), fund.k1_inv()?),
        Generator::X0p => (g.x0p * z, g.k0, rep.k0_inv(), &fund.x0p * x, fund.k0.clone(), fund.k0_inv()?),
        Generator::K1 => return Ok(g.k1.kronecker(&fund.k1)),
        Generator::K0 => return Ok(g.k0.kronecker(&fund.k0)),
    };
    Ok(match side {
        Side::Delta => a.kronecker(&bki) + ak.kronecker(&b),
        Side::DeltaPrime => aki.kronecker(&b) + a.kronecker(&bk),
    })
}

/// Coefficients of the oscillator-form intertwiner
///
/// ```text
/// ⎛ a′q^(−2N) + a″q^(2N)   k q^N a        v a a              ⎞
/// ⎜ j q^(−N) â             b              i q^(−N) a         ⎟
/// ⎝ w â â                  l q^N â        c′q^(2N) + c″q^(−2N)⎠
/// ```
///
/// where entry (r, s) maps e_s to e_r.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscTCoeffs {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub i: Complex64,
    pub j: Complex64,
    pub k: Complex64,
    pub l: Complex64,
    pub v: Complex64,
    pub w: Complex64,
}

pub const COEFF_NAMES: [&str; 11] = ["a'", "a''", "b", "c'", "c''", "i", "j", "k", "l", "v", "w"];

impl OscTCoeffs {
    pub fn to_vec(&self) -> [Complex64; 11] {
        [
            self.a1, self.a2, self.b, self.c1, self.c2, self.i, self.j, self.k, self.l, self.v, self.w,
        ]
    }

    pub fn from_slice(c: &[Complex64]) -> Self {
        Self {
            a1: c[0],
            a2: c[1],
            b: c[2],
            c1: c[3],
            c2: c[4],
            i: c[5],
            j: c[6],
            k: c[7],
            l: c[8],
            v: c[9],
            w: c[10],
        }
    }

    /// The eleven operator blocks, each with unit coefficient.
    fn basis(rep: &OscillatorRep) -> [(usize, usize, CMatrix); 11] {
        let (a, ah) = (rep.a(), rep.a_hat());
        let d = |p: i32| rep.diag_pow(ONE, p);
        let id = CMatrix::identity(rep.dim(), rep.dim());
        [
            (0, 0, d(-2)),
            (0, 0, d(2)),
            (1, 1, id),
            (2, 2, d(2)),
            (2, 2, d(-2)),
            (1, 2, d(-1) * &a),
            (1, 0, d(-1) * &ah),
            (0, 1, d(1) * &a),
            (2, 1, d(1) * &ah),
            (0, 2, &a * &a),
            (2, 0, &ah * &ah),
        ]
    }

    pub fn operator(&self, rep: &OscillatorRep) -> CMatrix {
        let n = rep.dim();
        let mut t = CMatrix::zeros(3 * n, 3 * n);
        for ((r, s, blk), c) in Self::basis(rep).into_iter().zip(self.to_vec()) {
            t += blk.kronecker(&unit(r, s)) * c;
        }
        t
    }
}

fn unit(r: usize, s: usize) -> CMatrix {
    let mut e = CMatrix::zeros(3, 3);
    e[(r, s)] = ONE;
    e
}

fn interior_tensor_cols(rep: &OscillatorRep) -> Vec<usize> {
    rep.interior().flat_map(|j| (0..3).map(move |a| 3 * rep.index(j) + a)).collect()
}

/// Per Borel generator, the max-norm of T·Δ(b) − Δ′(b)·T on interior
/// columns, each column relative to the larger of T·Δ(b) and Δ′(b)·T there.
pub fn intertwiner_residual(
    t: &CMatrix,
    rep: &OscillatorRep,
    z: Complex64,
    fund: &FundamentalRep,
    x: Complex64,
) -> Result<Vec<(Generator, f64)>, QGroupError> {
    let cols = interior_tensor_cols(rep);
    BOREL
        .iter()
        .map(|&g| {
            let d = coproduct(g, Side::Delta, rep, z, fund, x)?;
            let dp = coproduct(g, Side::DeltaPrime, rep, z, fund, x)?;
            let (lhs, rhs) = (t * &d, &dp * t);
            let worst = cols
                .iter()
                .map(|&c| relation(&lhs, &rhs, &[c]))
                .fold(0.0, f64::max);
            Ok((g, worst))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwinerSolution {
    pub coeffs: OscTCoeffs,
    /// Singular values of the linear condition, ascending.
    pub singular_values: Vec<f64>,
    pub residuals: Vec<(Generator, f64)>,
}

impl IntertwinerSolution {
    /// Number of singular values below `tol` times the largest.
    pub fn nullity(&self, tol: f64) -> usize {
        let top = self.singular_values.last().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|s| **s <= tol * top).count()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Solve T·Δ(b) = Δ′(b)·T for the eleven coefficients on interior columns.
/// The null vector of the stacked condition is taken from an SVD and
/// normalised so that b = 1 (or its largest entry is 1 when b vanishes).
pub fn solve_intertwiner(
    rep: &OscillatorRep,
    z: Complex64,
    fund: &FundamentalRep,
    x: Complex64,
) -> Result<IntertwinerSolution, QGroupError> {
    if rep.window < 4 {
        return Err(QGroupError::WindowTooSmall { window: rep.window, need: 4 });
    }
    let cols = interior_tensor_cols(rep);
    let n = 3 * rep.dim();
    let basis: Vec<CMatrix> = OscTCoeffs::basis(rep)
        .into_iter()
        .map(|(r, s, blk)| blk.kronecker(&unit(r, s)))
        .collect();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for g in [Generator::X1p, Generator::X0p] {
        let d = coproduct(g, Side::Delta, rep, z, fund, x)?;
        let dp = coproduct(g, Side::DeltaPrime, rep, z, fund, x)?;
        let images: Vec<CMatrix> = basis.iter().map(|b| b * &d - &dp * b).collect();
        let scale = norm_max(&d).max(norm_max(&dp));
        for &c in &cols {
            for r in 0..n {
                let row: Vec<Complex64> = images.iter().map(|m| m[(r, c)] / scale).collect();
                if row.iter().any(|v| v.norm() > 0.0) {
                    rows.push(row);
                }
            }
        }
    }
    // columns scaled to unit norm so large q^(2N) entries do not dominate
    let mut a = CMatrix::from_fn(rows.len(), 11, |r, c| rows[r][c]);
    let mut colscale = [1.0; 11];
    for (c, s) in colscale.iter_mut().enumerate() {
        let nrm = a.column(c).norm();
        if nrm > 0.0 {
            *s = nrm;
            a.column_mut(c).unscale_mut(nrm);
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc });
    let mut c: Vec<Complex64> = (0..11).map(|k| vt[(imin, k)].conj() / colscale[k]).collect();
    let norm = if c[2].norm() > 1e-8 * c.iter().map(|v| v.norm()).fold(0.0, f64::max) {
        c[2]
    } else {
        *c.iter().max_by(|p, q| p.norm().total_cmp(&q.norm())).expect("nonempty")
    };
    for v in c.iter_mut() {
        *v /= norm;
    }
    let coeffs = OscTCoeffs::from_slice(&c);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let residuals = intertwiner_residual(&coeffs.operator(rep), rep, z, fund, x)?;
    Ok(IntertwinerSolution {
        coeffs,
        singular_values: sv,
        residuals,
    })
}

/// Deformation and spectral exponent for the Tzitzéica blocks: x = e^(κθ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TzCoupling {
    pub q: Complex64,
    pub kappa: f64,
}

impl TzCoupling {
    /// q = e^(4π²i/β²) with κ fixed by x(θ + iπ/3) = −q⁻² x(θ), the
    /// condition under which crossing follows from the bootstrap relation.
    /// The principal phase of −q⁻² is used.
    pub fn from_beta2(beta2: f64) -> Self {
        let q = Complex64::from_polar(1.0, 4.0 * PI * PI / beta2);
        let phi = (-q.powi(-2)).arg();
        Self { q, kappa: 3.0 * phi / PI }
    }

    pub fn x(&self, theta: Complex64) -> Complex64 {
        (theta * self.kappa).exp()
    }

    /// Phase of x under θ → θ + iπ/3.
    pub fn phi(&self) -> f64 {
        self.kappa * PI / 3.0
    }
}

/// ε, ε̃, τ, τ̃ and the gauge functions μ, λ on a range of charges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TzitzeicaTParams {
    pub eps: Complex64,
    pub eps_t: Complex64,
    pub tau: Complex64,
    pub tau_t: Complex64,
    pub q: Complex64,
    /// μ(α) for α in `lo..=hi`.
    pub mu: Vec<Complex64>,
    /// λ(α) for α in `lo..=hi`.
    pub lambda: Vec<Complex64>,
    pub lo: i32,
}

impl TzitzeicaTParams {
    /// (q+q⁻¹)(ττ̃ q^(−2α−1) + εε̃ q^(2α+1)).
    pub fn mu_lambda_target(&self, alpha: i32) -> Complex64 {
        let q = self.q;
        (q + q.inv())
            * (self.tau * self.tau_t * q.powi(-2 * alpha - 1) + self.eps * self.eps_t * q.powi(2 * alpha + 1))
    }

    /// Choose μ on [lo, hi] and fix λ(α+1) from the μλ relation; λ(lo)
    /// comes from the relation at lo − 1 with μ(lo − 1) = `mu(lo - 1)`.
    pub fn with_mu(
        eps: Complex64,
        eps_t: Complex64,
        tau: Complex64,
        tau_t: Complex64,
        q: Complex64,
        lo: i32,
        hi: i32,
        mu: impl Fn(i32) -> Complex64,
    ) -> Self {
        let mut p = Self {
            eps,
            eps_t,
            tau,
            tau_t,
            q,
            mu: (lo..=hi).map(&mu).collect(),
            lambda: Vec::new(),
            lo,
        };
        p.lambda = (lo..=hi).map(|a| p.mu_lambda_target(a - 1) / mu(a - 1)).collect();
        p
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.mu.len() as i32 - 1
    }

    pub fn mu_at(&self, alpha: i32) -> Result<Complex64, QGroupError> {
        let i = alpha - self.lo;
        self.mu.get(usize::try_from(i).map_err(|_| QGroupError::MissingGauge(alpha))?).copied().ok_or(QGroupError::MissingGauge(alpha))
    }

    pub fn lambda_at(&self, alpha: i32) -> Result<Complex64, QGroupError> {
        let i = alpha - self.lo;
        self.lambda
            .get(usize::try_from(i).map_err(|_| QGroupError::MissingGauge(alpha))?)
            .copied()
            .ok_or(QGroupError::MissingGauge(alpha))
    }

    /// Relative failure of μ(α)λ(α+1) = target, worst α first.
    pub fn check_mu_lambda(&self) -> Result<(), QGroupError> {
        for alpha in self.lo..self.hi() {
            let lhs = self.mu_at(alpha)? * self.lambda_at(alpha + 1)?;
            let rhs = self.mu_lambda_target(alpha);
            let v = (lhs - rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
            if v > CONSTRAINT_TOL {
                return Err(QGroupError::MuLambda { alpha, value: v });
            }
        }
        Ok(())
    }

    /// M(α) = μ(α)μ(α+1) q^(−2α−1)/(1+q²).
    pub fn big_m(&self, alpha: i32) -> Result<Complex64, QGroupError> {
        let q = self.q;
        Ok(self.mu_at(alpha)? * self.mu_at(alpha + 1)? * q.powi(-2 * alpha - 1) / (ONE + q * q))
    }

    /// L(α) = λ(α)λ(α−1) q^(2α−1)/(1+q²).
    pub fn big_l(&self, alpha: i32) -> Result<Complex64, QGroupError> {
        let q = self.q;
        Ok(self.lambda_at(alpha)? * self.lambda_at(alpha - 1)? * q.powi(2 * alpha - 1) / (ONE + q * q))
    }

    /// Read the Tzitzéica parameters off a solved oscillator intertwiner at
    /// soliton parameter `x`. Uses a″ = ε², c″ = τ̃², a′ = τ²x, c′ = ε̃²x,
    /// the sign of b = τ̃ε + τε̃x, and j, k for the gauge μ, λ; the
    /// remaining coefficients are then predictions.
    pub fn from_intertwiner(c: &OscTCoeffs, rep: &OscillatorRep, x: Complex64) -> Self {
        let q = rep.q;
        let eps = c.a2.sqrt();
        let tau_t = c.c2.sqrt();
        let mut tau = (c.a1 / x).sqrt();
        let eps_t = (c.c1 / x).sqrt();
        if (c.b - (tau_t * eps - tau * eps_t * x)).norm() < (c.b - (tau_t * eps + tau * eps_t * x)).norm() {
            tau = -tau;
        }
        let (lo, hi) = (-rep.window - 1, rep.window + 1);
        // tz(+,0) = εμ(α) is k q^α F(α+1); tz(0,+) = τλ(α)x is j q^(−α)
        let mu = (lo..=hi).map(|a| c.k * q.powi(a) * rep.f_at(a + 1) / eps).collect();
        let lambda = (lo..=hi).map(|a| c.j * q.powi(-a) / (tau * x)).collect();
        Self {
            eps,
            eps_t,
            tau,
            tau_t,
            q,
            mu,
            lambda,
            lo,
        }
    }
}

pub const TZ_LABELS: [i32; 3] = [1, 0, -1];

/// Tzitzéica transmission matrix on α ∈ [−M, M] with labels +1, 0, −1,
/// times `rho`. Rejected if the μλ relation fails anywhere it is used.
pub fn tz_transmission(
    theta: f64,
    p: &TzitzeicaTParams,
    coupling: &TzCoupling,
    window: i32,
    rho: Complex64,
) -> Result<ChargeWindowMatrix, QGroupError> {
    if window < 3 {
        return Err(QGroupError::WindowTooSmall { window, need: 3 });
    }
    p.check_mu_lambda()?;
    tz_transmission_x(coupling.x(Complex64::from(theta)), p, window, rho)
}

/// As [`tz_transmission`] at a given spectral parameter x, constraint unchecked.
pub fn tz_transmission_x(x: Complex64, p: &TzitzeicaTParams, window: i32, rho: Complex64) -> Result<ChargeWindowMatrix, QGroupError> {
    let q = p.q;
    let mut t = ChargeWindowMatrix::zeros(window, Parity::All, TZ_LABELS.to_vec());
    let (e, et, ta, tt) = (p.eps, p.eps_t, p.tau, p.tau_t);
    for alpha in -window..=window {
        let q2a = q.powi(2 * alpha);
        let entries = [
            (0, 0, (e * e * q2a + ta * ta * x / q2a)),
            (0, 1, e * p.mu_at(alpha)?),
            (0, 2, p.big_m(alpha)?),
            (1, 0, ta * p.lambda_at(alpha)? * x),
            (1, 1, tt * e + ta * et * x),
            (1, 2, tt * p.mu_at(alpha)? * q.powi(-2 * alpha - 1)),
            (2, 0, p.big_l(alpha)? * x),
            (2, 1, et * q.powi(2 * alpha - 1) * p.lambda_at(alpha)? * x),
            (2, 2, et * et * q2a * x + tt * tt / q2a),
        ];
        for (a, b, v) in entries {
            let beta = alpha + TZ_LABELS[a] - TZ_LABELS[b];
            t.set(a, alpha, b, beta, v * rho);
        }
    }
    Ok(t)
}

/// T_op with ⟨α, a| T_op |β, b⟩ = T_{aα}^{bβ}, on the tensor ordering of
/// [`coproduct`] for a representation of the same window.
pub fn tz_operator(t: &ChargeWindowMatrix, rep: &OscillatorRep) -> CMatrix {
    let n = 3 * rep.dim();
    let mut op = CMatrix::zeros(n, n);
    for alpha in rep.charges() {
        for a in 0..3 {
            for b in 0..3 {
                let beta = alpha + TZ_LABELS[a] - TZ_LABELS[b];
                if beta.abs() <= rep.window {
                    op[(3 * rep.index(alpha) + a, 3 * rep.index(beta) + b)] = t.get(a, alpha, b, beta);
                }
            }
        }
    }
    op
}

/// Source of ρ values at complex rapidity.
pub trait RhoSource {
    fn rho(&self, theta: Complex64) -> Option<Complex64>;
}

impl<F: Fn(Complex64) -> Complex64> RhoSource for F {
    fn rho(&self, theta: Complex64) -> Option<Complex64> {
        Some(self(theta))
    }
}

/// Tabulated ρ; lookups match within 1e-12.
pub struct RhoTable(pub Vec<(Complex64, Complex64)>);

impl RhoSource for RhoTable {
    fn rho(&self, theta: Complex64) -> Option<Complex64> {
        self.0.iter().find(|(t, _)| (t - theta).norm() < 1e-12).map(|p| p.1)
    }
}

/// Direction of the iπ shift in the crossing relation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CrossingShift {
    /// ρ(θ)ρ(θ + iπ)
    #[default]
    Plus,
    /// ρ(θ)ρ(θ − iπ)
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSample {
    pub theta: f64,
    /// |ρ(θ)ρ(θ±iπ)(τ̃ε + τε̃q⁻⁴x)(τ̃ε − τε̃q⁻²x) − 1|
    pub crossing: f64,
    /// |ρ(θ) − A ρ(θ+iπ/3)ρ(θ−iπ/3)| / |ρ(θ)|, A = τ̃ε + τε̃x
    pub bootstrap: f64,
    /// ρ(θ) / (A ρ(θ+iπ/3)ρ(θ−iπ/3))
    pub bootstrap_ratio: Complex64,
}

pub fn rho_functional_residuals(
    rho: &dyn RhoSource,
    p: &TzitzeicaTParams,
    coupling: &TzCoupling,
    thetas: &[f64],
    crossing: CrossingShift,
) -> Result<Vec<RhoSample>, QGroupError> {
    let q = coupling.q;
    let (te, te2) = (p.tau_t * p.eps, p.tau * p.eps_t);
    let get = |t: Complex64| rho.rho(t).ok_or(QGroupError::MissingSample(t));
    let shift = match crossing {
        CrossingShift::Plus => Complex64::new(0.0, PI),
        CrossingShift::Minus => Complex64::new(0.0, -PI),
    };
    let third = Complex64::new(0.0, PI / 3.0);
    thetas
        .iter()
        .map(|&th| {
            let t = Complex64::from(th);
            let x = coupling.x(t);
            let r0 = get(t)?;
            let cross = r0 * get(t + shift)? * (te + te2 * q.powi(-4) * x) * (te - te2 * q.powi(-2) * x);
            let rhs = (te + te2 * x) * get(t + third)? * get(t - third)?;
            Ok(RhoSample {
                theta: th,
                crossing: (cross - ONE).norm(),
                bootstrap: (r0 - rhs).norm() / r0.norm(),
                bootstrap_ratio: r0 / rhs,
            })
        })
        .collect()
}

/// Numerical solution of ρ(θ) = A(θ)ρ(θ+iπ/3)ρ(θ−iπ/3) with
/// A = τ̃ε(1 + s x), s = τε̃/(τ̃ε).
///
/// Writing t = ln s + κθ and ρ = e^{L(t)}/(τ̃ε), the remainder
/// R = L + ln(1+e^t) solves R(t) − R(t+iφ) − R(t−iφ) = S(t) with S
/// decaying at both ends, so R is a Fourier integral
/// R(t) = (1/π)∫₀^∞ 4π sinh²(kφ/2) cos(kt) / (k sinh(πk)(1 − 2cosh kφ)) dk,
/// valid for |Im t| < π. Further from the real axis the bootstrap
/// relation itself continues ρ.
#[derive(Clone, Debug)]
pub struct MinimalRho {
    te: Complex64,
    ln_s: Option<Complex64>,
    kappa: f64,
    phi: f64,
    quad: Vec<(f64, f64)>,
}

/// Half-width of the strip |Im t| where the integral is evaluated directly.
const RHO_STRIP: f64 = 0.8 * PI;

impl MinimalRho {
    pub fn new(p: &TzitzeicaTParams, coupling: &TzCoupling) -> Result<Self, QGroupError> {
        let te = p.tau_t * p.eps;
        if te.norm() == 0.0 {
            return Err(QGroupError::Singular("tau~ eps"));
        }
        let s = p.tau * p.eps_t / te;
        let phi = coupling.phi();
        if phi.abs() >= 0.75 * PI || phi == 0.0 {
            return Err(QGroupError::BadPhase(phi));
        }
        let quad = gauss_quad::legendre::GaussLegendre::new(24.try_into().expect("nonzero"))
            .as_node_weight_pairs()
            .to_vec();
        Ok(Self {
            te,
            ln_s: if s.norm() > 0.0 { Some(s.ln()) } else { None },
            kappa: coupling.kappa,
            phi,
            quad,
        })
    }

    fn remainder(&self, t: Complex64) -> Complex64 {
        let phi = self.phi;
        let decay = PI - t.im.abs();
        let kmax = 45.0 / decay;
        let width = (0.5f64).min(1.5 / t.re.abs().max(1e-3)).min(kmax);
        let panels = (kmax / width).ceil() as usize;
        let f = |k: f64| {
            let sh = (0.5 * k * phi).sinh();
            let num = 4.0 * PI * sh * sh;
            let den = k * (PI * k).sinh() * (1.0 - 2.0 * (k * phi).cosh());
            (t * k).cos() * (num / den)
        };
        let mut acc = ZERO;
        for p in 0..panels {
            let (a, b) = (p as f64 * width, (p + 1) as f64 * width);
            let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
            for &(x, w) in &self.quad {
                acc += f(m + h * x) * (w * h);
            }
        }
        acc / PI
    }

    fn ln_rho_strip(&self, t: Complex64) -> Complex64 {
        -(ONE + t.exp()).ln() + self.remainder(t)
    }

    pub fn eval(&self, theta: Complex64) -> Complex64 {
        let Some(ln_s) = self.ln_s else {
            return self.te.inv();
        };
        let t = ln_s + theta * self.kappa;
        if t.im.abs() <= RHO_STRIP {
            return self.ln_rho_strip(t).exp() / self.te;
        }
        // ρ(θ) = ρ(θ−d)/(A(θ−d) ρ(θ−2d)) with d moving t towards the axis
        let d = Complex64::new(0.0, PI / 3.0 * (t.im * self.phi).signum());
        let a = self.te * (ONE + (ln_s + (theta - d) * self.kappa).exp());
        self.eval(theta - d) / (a * self.eval(theta - d * 2.0))
    }
}

impl RhoSource for MinimalRho {
    fn rho(&self, theta: Complex64) -> Option<Complex64> {
        Some(self.eval(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qs() -> [Complex64; 2] {
        [Complex64::new(1.2, 0.0), Complex64::from_polar(1.0, 0.4)]
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn binomials() {
        let q = c(1.3);
        assert_eq!(q_binomial(7, 0, q).unwrap(), ONE);
        assert!((q_binomial(2, 1, q).unwrap() - (q + q.inv())).norm() < 1e-15);
        // ([5][4])/([2][1]) written out as Laurent polynomials
        let lp = |m: i32| (q.powi(m) - q.powi(-m)) / (q - q.inv());
        let direct = lp(5) * lp(4) / (lp(2) * lp(1));
        let v = q_binomial(5, 2, q).unwrap();
        assert!((v - direct).norm() < 1e-12);
        assert!((v.re - 14.8036449603415).abs() < 1e-10);
        assert!(matches!(q_binomial(2, 3, q), Err(QGroupError::BadBinomial { .. })));
        assert!(matches!(q_binomial(3, 1, ONE), Err(QGroupError::RootOfUnity(_))));
        // q = e^(iπ/3): [3] = 0
        let root = Complex64::from_polar(1.0, PI / 3.0);
        assert!(matches!(q_binomial(4, 2, root), Err(QGroupError::RootOfUnity(3))));
    }

    #[test]
    fn oscillator_identities() {
        for q in qs() {
            let rep = OscillatorRep::new(8, FParams::new(0.3, 0.6, 0.5, 1.0), q);
            let r = check_oscillator(&rep, |n| Complex64::new(0.2 * n as f64, 1.0).exp());
            assert!(r.max() < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn borel_relations() {
        for q in qs() {
            let rep = OscillatorRep::new(12, FParams::new(0.0, 0.0, 1.0, 1.0), q);
            let r = check_borel(&rep).unwrap();
            assert_eq!(r.get("[K1,K0]"), Some(0.0));
            assert!(r.max() < 1e-12, "{r:?}");
            // inadmissible F still satisfies the Borel relations
            let bad = OscillatorRep::new(12, FParams::new(0.4, 0.1, 1.0, 1.0), q);
            assert!(check_borel(&bad).unwrap().max() < 1e-12);
            let scaled = rep.clone().with_kappas(c(2.0), c(2.0));
            assert_eq!(check_borel(&scaled).unwrap(), r);
        }
        let small = OscillatorRep::new(3, FParams::zero(), c(1.2));
        assert!(matches!(check_borel(&small), Err(QGroupError::WindowTooSmall { .. })));
    }

    #[test]
    fn serre_admissible_and_not() {
        for q in qs() {
            for f in [FParams::new(0.0, 0.0, 1.0, 1.0), FParams::new(0.5, 1.0, 0.7, 1.4), FParams::new(0.3, 0.0, 1.0, 0.0)] {
                let rep = OscillatorRep::new(12, f, q);
                rep.check().unwrap();
                let r = check_serre(&rep).unwrap();
                assert!(r.max() < 1e-10, "{f:?} {r:?}");
            }
            let bad = OscillatorRep::new(12, FParams::new(0.5, 1.1, 0.7, 1.4), q);
            assert!(matches!(bad.check(), Err(QGroupError::Inadmissible(_))));
            let r = check_serre(&bad).unwrap();
            assert!(r.get("serre5").unwrap() > 1e-3, "{r:?}");
            assert!(r.get("serre5 operator").unwrap() > 1e-3);
            assert!(r.get("serre2").unwrap() < 1e-10);
        }
        let zero = OscillatorRep::new(12, FParams::zero(), c(1.2));
        assert_eq!(check_serre(&zero).unwrap().max(), 0.0);
    }

    #[test]
    fn serre_linear_sum_detects_extra_term() {
        let q = c(1.2);
        let f = FParams::new(0.0, 0.0, 1.0, 1.0);
        let states = -9..=9;
        let b2: Vec<Complex64> = (0..=2).map(|k| q_binomial(2, k, q.powi(4)).unwrap()).collect();
        let g = |n: i32| f.eval(n, q) + q.powi(3 * n) * 0.1;
        let worst = states
            .map(|n| {
                let s = b2[0] * g(n) - b2[1] * g(n + 2) + b2[2] * g(n + 4);
                let m = b2[0].norm() * g(n).norm() + b2[1].norm() * g(n + 2).norm() + b2[2].norm() * g(n + 4).norm();
                s.norm() / m
            })
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "{worst}");
    }

    #[test]
    fn serre_translation_covariance() {
        for q in qs() {
            for f in [FParams::new(0.5, 1.0, 0.7, 1.4), FParams::new(0.5, 1.3, 0.7, 1.4)] {
                let p0 = serre_profile(&f, q, -8..=8).unwrap();
                let p1 = serre_profile(&f.shifted(q), q, -9..=7).unwrap();
                for (a, b) in p0.iter().zip(&p1) {
                    assert_eq!(a.0, b.0 + 1);
                    assert!((a.1 - b.1).abs() <= 1e-12 * a.1.max(1e-300) + 1e-15);
                    assert!((a.2 - b.2).abs() <= 1e-12 * a.2.max(1e-300) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn fundamental_rep_audit() {
        for q in qs() {
            let r = FundamentalRep::standard(q).audit().unwrap();
            assert!(r.max() < 1e-14, "{r:?}");
        }
        let mut bad = FundamentalRep::standard(c(1.2));
        bad.x1m[(1, 0)] *= 1.1;
        assert!(bad.audit().unwrap().get("[X1+,X1-]").unwrap() > 1e-3);
        bad.k0 = CMatrix::zeros(3, 3);
        assert!(matches!(bad.audit(), Err(QGroupError::Singular("K0"))));
    }

    #[test]
    fn coproduct_structure() {
        let q = c(1.2);
        let rep = OscillatorRep::new(5, FParams::new(0.0, 0.0, 1.0, 1.0), q).with_kappas(c(0.25), c(2.0));
        let fund = FundamentalRep::standard(q);
        let (z, x) = (c(1.3), c(0.7));
        let d = coproduct(Generator::K1, Side::Delta, &rep, z, &fund, x).unwrap();
        let kf = [q, ONE, q.inv()];
        for j in rep.charges() {
            for a in 0..3 {
                let i = 3 * rep.index(j) + a;
                let expect = rep.kappa1 * q.powi(j) * kf[a];
                assert!((d[(i, i)] - expect).norm() < 1e-14);
            }
        }
        for g in [Generator::K1, Generator::K0] {
            let a = coproduct(g, Side::Delta, &rep, z, &fund, x).unwrap();
            let b = coproduct(g, Side::DeltaPrime, &rep, z, &fund, x).unwrap();
            assert_eq!(a, b);
        }
        // x enters only the soliton X₀⁺ term
        let osc_part = coproduct(Generator::X0p, Side::Delta, &rep, z, &fund, ZERO).unwrap();
        let base = coproduct(Generator::X0p, Side::Delta, &rep, z, &fund, x).unwrap() - &osc_part;
        let scaled = coproduct(Generator::X0p, Side::Delta, &rep, z, &fund, x * 3.0).unwrap() - &osc_part;
        assert!(norm_max(&(scaled - base * c(3.0))) < 1e-13);
    }

    fn solvable_rep(q: Complex64, window: i32) -> OscillatorRep {
        let k1 = Complex64::new(1.4, 0.0);
        OscillatorRep::new(window, FParams::new(0.0, 0.0, 0.8, 1.3), q).with_kappas(k1.powi(-2), k1)
    }

    #[test]
    fn intertwiner_solves_and_is_sharp() {
        for q in qs() {
            let rep = solvable_rep(q, 8);
            let fund = FundamentalRep::standard(q);
            let (z, x) = (c(1.7), c(0.9));
            let sol = solve_intertwiner(&rep, z, &fund, x).unwrap();
            assert_eq!(sol.nullity(1e-10), 1, "{:?}", sol.singular_values);
            assert!(sol.max_residual() < 1e-10, "{:?}", sol.residuals);
            for k in 0..11 {
                let mut c = sol.coeffs.to_vec();
                c[k] *= 1.01;
                let t = OscTCoeffs::from_slice(&c).operator(&rep);
                let r = intertwiner_residual(&t, &rep, z, &fund, x).unwrap();
                let worst = r.iter().map(|p| p.1).fold(0.0, f64::max);
                assert!(worst > 1e-4, "{} {worst}", COEFF_NAMES[k]);
                // charge-conserving T commutes with the diagonal generators
                assert!(r[2].1 < 1e-14 && r[3].1 < 1e-14);
            }
        }
    }

    #[test]
    fn intertwiner_needs_constraints() {
        let q = c(1.2);
        let fund = FundamentalRep::standard(q);
        for rep in [
            OscillatorRep::new(8, FParams::new(0.5, 0.5, 1.0, 1.0), q),
            solvable_rep(q, 8).with_kappas(c(2.0), c(1.0)),
        ] {
            let sol = solve_intertwiner(&rep, c(1.0), &fund, c(1.0)).unwrap();
            assert_eq!(sol.nullity(1e-10), 0);
            assert!(sol.max_residual() > 1e-5);
        }
    }

    fn unit_params(q: Complex64) -> TzitzeicaTParams {
        TzitzeicaTParams::with_mu(ONE, ONE, ONE, ONE, q, -6, 6, |a| Complex64::new(1.0 + 0.1 * a as f64, 0.2))
    }

    #[test]
    fn tz_mu_lambda_and_definitions() {
        let q = c(1.2);
        let p = unit_params(q);
        p.check_mu_lambda().unwrap();
        for a in -4..=4 {
            let lhs = p.mu_at(a).unwrap() * p.lambda_at(a + 1).unwrap();
            let rhs = (q + q.inv()) * (q.powi(-2 * a - 1) + q.powi(2 * a + 1));
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        }
        let cp = TzCoupling { q, kappa: 1.0 };
        let t = tz_transmission(0.4, &p, &cp, 5, ONE).unwrap();
        assert!(t.conserves_charge());
        for a in -5..=5 {
            if a + 2 <= 5 {
                assert_eq!(t.get(0, a, 2, a + 2), p.big_m(a).unwrap());
                let m = p.mu_at(a).unwrap() * p.mu_at(a + 1).unwrap() * q.powi(-2 * a - 1) / (ONE + q * q);
                assert_eq!(t.get(0, a, 2, a + 2), m);
            }
            if a - 2 >= -5 {
                let l = p.lambda_at(a).unwrap() * p.lambda_at(a - 1).unwrap() * q.powi(2 * a - 1) / (ONE + q * q);
                assert_eq!(t.get(2, a, 0, a - 2), l * cp.x(Complex64::from(0.4)));
            }
            // nothing outside a + α = b + β
            assert_eq!(t.get(0, a, 0, a + 1), ZERO);
            assert_eq!(t.get(1, a, 2, a), ZERO);
        }
        let mut bad = p.clone();
        bad.lambda[7] *= 1.001;
        match tz_transmission(0.4, &bad, &cp, 5, ONE) {
            Err(QGroupError::MuLambda { alpha, .. }) => assert_eq!(alpha, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tz_matrix_is_the_oscillator_intertwiner() {
        for q in qs() {
            let rep = solvable_rep(q, 8);
            let fund = FundamentalRep::standard(q);
            let (z, x) = (c(1.7), c(0.9));
            let sol = solve_intertwiner(&rep, z, &fund, x).unwrap();
            let p = TzitzeicaTParams::from_intertwiner(&sol.coeffs, &rep, x);
            p.check_mu_lambda().unwrap();
            // b₁ = b₂ = 0 and c₂/c₁ = εε̃/(ττ̃q²)
            let ratio = p.eps * p.eps_t / (p.tau * p.tau_t * q * q);
            assert!((ratio - rep.f.c2 / rep.f.c1).norm() < 1e-9, "{ratio}");
            let t = tz_transmission_x(x, &p, rep.window, ONE).unwrap();
            let op = tz_operator(&t, &rep);
            let r = intertwiner_residual(&op, &rep, z, &fund, x).unwrap();
            assert!(r.iter().all(|p| p.1 < 1e-10), "{r:?}");
        }
    }

    #[test]
    fn rho_solution_and_residual_laws() {
        let cp = TzCoupling::from_beta2(7.3);
        let p = TzitzeicaTParams::with_mu(ONE, Complex64::new(0.7, 0.2), c(1.3), Complex64::new(0.9, -0.1), cp.q, -3, 3, |_| ONE);
        let rho = MinimalRho::new(&p, &cp).unwrap();
        let grid: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
        let s = rho_functional_residuals(&rho, &p, &cp, &grid, CrossingShift::Plus).unwrap();
        assert!(s.iter().all(|r| r.crossing < 1e-8 && r.bootstrap < 1e-8));
        let minus = rho_functional_residuals(&rho, &p, &cp, &grid, CrossingShift::Minus).unwrap();
        assert!(minus.iter().any(|r| r.crossing > 1e-3));
        let unit = |_: Complex64| ONE;
        let u = rho_functional_residuals(&unit, &p, &cp, &grid, CrossingShift::Plus).unwrap();
        assert!(u.iter().all(|r| r.crossing > 1e-3 && r.bootstrap > 1e-3));
        let k = Complex64::new(1.7, 0.3);
        let scaled = |t: Complex64| rho.eval(t) * k;
        let sc = rho_functional_residuals(&scaled, &p, &cp, &grid, CrossingShift::Plus).unwrap();
        for (a, b) in s.iter().zip(&sc) {
            assert!((b.bootstrap_ratio - a.bootstrap_ratio / k).norm() < 1e-12);
        }
    }

    #[test]
    fn rho_table_reports_missing_shift() {
        let cp = TzCoupling::from_beta2(7.3);
        let p = unit_params(cp.q);
        let table = RhoTable(vec![(ZERO, ONE), (Complex64::new(0.0, PI), ONE)]);
        match rho_functional_residuals(&table, &p, &cp, &[0.0], CrossingShift::Plus) {
            Err(QGroupError::MissingSample(t)) => assert!((t.im - PI / 3.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn admissible_f_passes_serre(b1 in -2.0..2.0f64, c1 in 0.1..2.0f64, c2 in -2.0..2.0f64, ph in 0.1..0.6f64) {
            // b₂ from b₁c₂ = b₂c₁
            let f = FParams::new(b1, b1 * c2 / c1, c1, c2);
            let q = Complex64::from_polar(1.0, ph);
            let r = check_serre(&OscillatorRep::new(12, f, q)).unwrap();
            prop_assert!(r.max() < 1e-10);
        }

        #[test]
        fn kappa_scaling_leaves_borel_residuals(k0 in 0.2..5.0f64, k1 in 0.2..5.0f64) {
            let q = Complex64::new(1.2, 0.0);
            let rep = OscillatorRep::new(6, FParams::new(0.0, 0.0, 1.0, 1.0), q).with_kappas(c(k0), c(k1));
            prop_assert!(check_borel(&rep).unwrap().max() < 1e-12);
        }
    }
}
