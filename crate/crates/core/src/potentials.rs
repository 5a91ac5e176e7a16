//! Bulk potentials, defect potentials and residual checks of the integrability
//! constraints that tie them together.
//!
//! A type I defect between fields `u` (left) and `v` (right) is integrable when
//!
//! ```text
//! D0_vv - D0_uu = 0,        ½ D0_u² - ½ D0_v² = U(u) - V(v)
//! ```
//!
//! and a type II defect with `D0 = f(p+λ, q) + g(p-λ, q)`, `p = (u+v)/2`,
//! `q = (u-v)/2`, when `f_λ g_q - g_λ f_q = U(u) - V(v)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type PairGradFn = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Default finite-difference step for unit-scale fields.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("unknown potential name `{0}`")]
    UnknownName(String),
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("mass must be non-negative and finite, got {0}")]
    BadMass(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum BulkKind {
    SineGordon,
    Liouville,
    FreeMassive { m: f64 },
    FreeMassless,
    Tzitzeica,
    Custom(String),
}

/// A bulk potential U(φ) together with its force U'(φ).
#[derive(Clone)]
pub struct BulkPotential {
    kind: BulkKind,
    offset: f64,
    custom: Option<(ScalarFn, ScalarFn)>,
}

impl fmt::Debug for BulkPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BulkPotential")
            .field("kind", &self.kind)
            .field("offset", &self.offset)
            .finish()
    }
}

impl BulkPotential {
    pub fn sine_gordon() -> Self {
        Self::builtin(BulkKind::SineGordon)
    }
    /// U = e^{2φ}.
    pub fn liouville() -> Self {
        Self::builtin(BulkKind::Liouville)
    }
    /// U = m²φ²/2.
    pub fn free_massive(m: f64) -> Self {
        Self::builtin(BulkKind::FreeMassive { m })
    }
    pub fn free_massless() -> Self {
        Self::builtin(BulkKind::FreeMassless)
    }
    pub fn tzitzeica() -> Self {
        Self::builtin(BulkKind::Tzitzeica)
    }

    pub fn custom(name: &str, eval: ScalarFn, deriv: ScalarFn) -> Self {
        Self {
            kind: BulkKind::Custom(name.to_string()),
            offset: 0.0,
            custom: Some((eval, deriv)),
        }
    }

    fn builtin(kind: BulkKind) -> Self {
        Self {
            kind,
            offset: 0.0,
            custom: None,
        }
    }

    /// Look up a shipped potential by its CLI name.
    pub fn from_name(name: &str, mass: f64) -> Result<Self, PotentialError> {
        match name {
            "sine-gordon" => Ok(Self::sine_gordon()),
            "liouville" => Ok(Self::liouville()),
            "free-massive" => {
                if !(mass.is_finite() && mass >= 0.0) {
                    return Err(PotentialError::BadMass(mass));
                }
                Ok(Self::free_massive(mass))
            }
            "free-massless" => Ok(Self::free_massless()),
            "tzitzeica" => Ok(Self::tzitzeica()),
            other => Err(PotentialError::UnknownName(other.to_string())),
        }
    }

    /// Same potential shifted by a constant.
    pub fn with_offset(mut self, c: f64) -> Self {
        self.offset += c;
        self
    }

    pub fn kind(&self) -> &BulkKind {
        &self.kind
    }

    pub fn eval(&self, u: f64) -> f64 {
        let base = match &self.kind {
            BulkKind::SineGordon => 1.0 - u.cos(),
            BulkKind::Liouville => (2.0 * u).exp(),
            BulkKind::FreeMassive { m } => 0.5 * m * m * u * u,
            BulkKind::FreeMassless => 0.0,
            BulkKind::Tzitzeica => u.exp() + 2.0 * (-0.5 * u).exp() - 3.0,
            BulkKind::Custom(_) => (self.custom.as_ref().expect("custom eval").0)(u),
        };
        base + self.offset
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match &self.kind {
            BulkKind::SineGordon => u.sin(),
            BulkKind::Liouville => 2.0 * (2.0 * u).exp(),
            BulkKind::FreeMassive { m } => m * m * u,
            BulkKind::FreeMassless => 0.0,
            BulkKind::Tzitzeica => u.exp() - (-0.5 * u).exp(),
            BulkKind::Custom(_) => (self.custom.as_ref().expect("custom deriv").1)(u),
        }
    }
}

fn check_sigma(sigma: f64) -> Result<(), PotentialError> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(PotentialError::BadSigma(sigma))
    }
}

/// Type I defect potential: D⁰(u, v) and its momentum partner D¹(u, v).
#[derive(Clone)]
pub struct TypeIDefectPotential {
    pub name: String,
    pub sigma: f64,
    d0: PairFn,
    d1: PairFn,
    grad: Option<PairGradFn>,
}

impl fmt::Debug for TypeIDefectPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeIDefectPotential")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl TypeIDefectPotential {
    pub fn new(name: &str, sigma: f64, d0: PairFn, d1: PairFn) -> Self {
        Self {
            name: name.to_string(),
            sigma,
            d0,
            d1,
            grad: None,
        }
    }

    /// Register an analytic gradient (∂D⁰/∂u, ∂D⁰/∂v).
    pub fn with_gradient(mut self, grad: PairGradFn) -> Self {
        self.grad = Some(grad);
        self
    }

    /// Sine-Gordon defect with D⁰ = -2(σ cos p + σ⁻¹ cos q), p = (u+v)/2,
    /// q = (u-v)/2. This sign reproduces the sewing conditions
    /// `u_x = v_t - σ sin p - σ⁻¹ sin q`, `v_x = u_t + σ sin p - σ⁻¹ sin q`.
    pub fn sine_gordon(sigma: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma)?;
        let s = sigma;
        let si = 1.0 / sigma;
        Ok(Self::new(
            "sine-gordon",
            sigma,
            Arc::new(move |u, v| -2.0 * (s * (0.5 * (u + v)).cos() + si * (0.5 * (u - v)).cos())),
            Arc::new(move |u, v| 2.0 * s * (0.5 * (u + v)).cos() - 2.0 * si * (0.5 * (u - v)).cos()),
        )
        .with_gradient(Arc::new(move |u, v| {
            let sp = s * (0.5 * (u + v)).sin();
            let sq = si * (0.5 * (u - v)).sin();
            (sp + sq, sp - sq)
        })))
    }

    /// D⁰ = σ e^{u+v} + σ⁻¹ cosh(u-v), paired with U = e^{2u}.
    pub fn liouville(sigma: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma)?;
        let s = sigma;
        let si = 1.0 / sigma;
        Ok(Self::new(
            "liouville",
            sigma,
            Arc::new(move |u, v| s * (u + v).exp() + si * (u - v).cosh()),
            Arc::new(move |u, v| si * (u - v).cosh() - s * (u + v).exp()),
        )
        .with_gradient(Arc::new(move |u, v| {
            let e = s * (u + v).exp();
            let h = si * (u - v).sinh();
            (e + h, e - h)
        })))
    }

    /// D⁰ = (mσ/4)(u+v)² + (m/4σ)(u-v)².
    pub fn free_massive(m: f64, sigma: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma)?;
        let a = m * sigma / 4.0;
        let b = m / (4.0 * sigma);
        Ok(Self::new(
            "free-massive",
            sigma,
            Arc::new(move |u, v| a * (u + v).powi(2) + b * (u - v).powi(2)),
            Arc::new(move |u, v| b * (u - v).powi(2) - a * (u + v).powi(2)),
        )
        .with_gradient(Arc::new(move |u, v| {
            let s = 2.0 * a * (u + v);
            let d = 2.0 * b * (u - v);
            (s + d, s - d)
        })))
    }

    /// D⁰ = σ(u+v)²/4.
    pub fn free_massless(sigma: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma)?;
        let a = sigma / 4.0;
        Ok(Self::new(
            "free-massless",
            sigma,
            Arc::new(move |u, v| a * (u + v).powi(2)),
            Arc::new(move |u, v| -a * (u + v).powi(2)),
        )
        .with_gradient(Arc::new(move |u, v| {
            let s = 2.0 * a * (u + v);
            (s, s)
        })))
    }

    pub fn zero() -> Self {
        Self::new("zero", 1.0, Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0))
            .with_gradient(Arc::new(|_, _| (0.0, 0.0)))
    }

    /// Shipped defect for a named bulk theory.
    pub fn from_name(name: &str, sigma: f64, mass: f64) -> Result<Self, PotentialError> {
        match name {
            "sine-gordon" => Self::sine_gordon(sigma),
            "liouville" => Self::liouville(sigma),
            "free-massive" => Self::free_massive(mass, sigma),
            "free-massless" => Self::free_massless(sigma),
            other => Err(PotentialError::UnknownName(other.to_string())),
        }
    }

    /// D⁰ → -D⁰, D¹ → -D¹. The constraints are invariant under this map.
    pub fn negated(&self) -> Self {
        let d0 = self.d0.clone();
        let d1 = self.d1.clone();
        let grad = self.grad.clone();
        Self {
            name: format!("-{}", self.name),
            sigma: self.sigma,
            d0: Arc::new(move |u, v| -d0(u, v)),
            d1: Arc::new(move |u, v| -d1(u, v)),
            grad: grad.map(|g| -> PairGradFn {
                Arc::new(move |u, v| {
                    let (a, b) = g(u, v);
                    (-a, -b)
                })
            }),
        }
    }

    pub fn eta(&self) -> f64 {
        -self.sigma.ln()
    }

    pub fn d0(&self, u: f64, v: f64) -> f64 {
        (self.d0)(u, v)
    }

    pub fn d1(&self, u: f64, v: f64) -> f64 {
        (self.d1)(u, v)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// (∂D⁰/∂u, ∂D⁰/∂v), analytic when registered.
    pub fn gradient(&self, u: f64, v: f64) -> (f64, f64) {
        match &self.grad {
            Some(g) => g(u, v),
            None => self.fd_gradient(u, v, FD_STEP),
        }
    }

    pub fn fd_gradient(&self, u: f64, v: f64, h: f64) -> (f64, f64) {
        fd_grad(&*self.d0, u, v, h)
    }
}

fn fd_grad(f: &dyn Fn(f64, f64) -> f64, u: f64, v: f64, h: f64) -> (f64, f64) {
    (
        (f(u + h, v) - f(u - h, v)) / (2.0 * h),
        (f(u, v + h) - f(u, v - h)) / (2.0 * h),
    )
}

/// Rectangular sample grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n;
        (0..n).map(move |i| {
            if n == 1 {
                self.lo
            } else {
                self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2 {
    pub u: Axis,
    pub v: Axis,
}

impl Default for Grid2 {
    fn default() -> Self {
        Self {
            u: Axis::new(-3.0, 3.0, 41),
            v: Axis::new(-3.0, 3.0, 41),
        }
    }
}

/// Grid over (p, q, λ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid3 {
    pub p: Axis,
    pub q: Axis,
    pub lambda: Axis,
}

impl Default for Grid3 {
    fn default() -> Self {
        Self {
            p: Axis::new(-3.0, 3.0, 41),
            q: Axis::new(-3.0, 3.0, 41),
            lambda: Axis::new(-2.0, 2.0, 41),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeMode {
    /// Analytic gradient when registered; second derivatives as centred
    /// differences of the gradient.
    Auto { h: f64 },
    /// Centred differences of D⁰ only.
    FiniteDifference { h: f64 },
}

impl Default for DerivativeMode {
    fn default() -> Self {
        DerivativeMode::Auto { h: FD_STEP }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalFailure {
    pub point: Vec<f64>,
    pub quantity: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Type1Report {
    /// max |D⁰_vv - D⁰_uu|
    pub wave_residual: f64,
    /// max |½D⁰_u² - ½D⁰_v² - (U - V)|
    pub energy_residual: f64,
    /// max |-D⁰_u - D¹_v|
    pub x_residual: f64,
    /// max |D⁰_v + D¹_u|
    pub y_residual: f64,
    /// max |analytic gradient - centred difference|, 0 without a registered gradient.
    pub gradient_mismatch: f64,
    pub nodes: usize,
    pub failures: Vec<EvalFailure>,
}

impl Type1Report {
    pub fn max_constraint_residual(&self) -> f64 {
        self.wave_residual.max(self.energy_residual)
    }
}

/// Residuals of the type I constraint pair over a grid.
pub fn verify_type1_constraints(
    u_pot: &BulkPotential,
    v_pot: &BulkPotential,
    defect: &TypeIDefectPotential,
    grid: &Grid2,
    mode: DerivativeMode,
) -> Type1Report {
    let mut rep = Type1Report {
        wave_residual: 0.0,
        energy_residual: 0.0,
        x_residual: 0.0,
        y_residual: 0.0,
        gradient_mismatch: 0.0,
        nodes: 0,
        failures: Vec::new(),
    };
    let d0 = &*defect.d0;
    let d1 = &*defect.d1;
    for u in grid.u.points() {
        for v in grid.v.points() {
            rep.nodes += 1;
            let (gu, gv, duu, dvv, h) = match mode {
                DerivativeMode::Auto { h } => {
                    let (gu, gv) = defect.gradient(u, v);
                    let (duu, dvv) = match &defect.grad {
                        Some(g) => (
                            (g(u + h, v).0 - g(u - h, v).0) / (2.0 * h),
                            (g(u, v + h).1 - g(u, v - h).1) / (2.0 * h),
                        ),
                        None => second_diffs(d0, u, v, h),
                    };
                    if defect.grad.is_some() {
                        let (fu, fv) = defect.fd_gradient(u, v, h);
                        let mis = (fu - gu).abs().max((fv - gv).abs());
                        if mis.is_finite() {
                            rep.gradient_mismatch = rep.gradient_mismatch.max(mis);
                        }
                    }
                    (gu, gv, duu, dvv, h)
                }
                DerivativeMode::FiniteDifference { h } => {
                    let (gu, gv) = fd_grad(d0, u, v, h);
                    let (duu, dvv) = second_diffs(d0, u, v, h);
                    (gu, gv, duu, dvv, h)
                }
            };
            let (d1u, d1v) = fd_grad(d1, u, v, h);
            let target = u_pot.eval(u) - v_pot.eval(v);
            let wave = (dvv - duu).abs();
            let energy = (0.5 * gu * gu - 0.5 * gv * gv - target).abs();
            let xr = (-gu - d1v).abs();
            let yr = (gv + d1u).abs();
            let checks = [
                ("wave", wave),
                ("energy", energy),
                ("x", xr),
                ("y", yr),
            ];
            let mut ok = true;
            for (name, val) in checks {
                if !val.is_finite() {
                    rep.failures.push(EvalFailure {
                        point: vec![u, v],
                        quantity: name.to_string(),
                    });
                    ok = false;
                }
            }
            if ok {
                rep.wave_residual = rep.wave_residual.max(wave);
                rep.energy_residual = rep.energy_residual.max(energy);
                rep.x_residual = rep.x_residual.max(xr);
                rep.y_residual = rep.y_residual.max(yr);
            }
        }
    }
    rep
}

fn second_diffs(f: &dyn Fn(f64, f64) -> f64, u: f64, v: f64, h: f64) -> (f64, f64) {
    let c = f(u, v);
    (
        (f(u + h, v) - 2.0 * c + f(u - h, v)) / (h * h),
        (f(u, v + h) - 2.0 * c + f(u, v - h)) / (h * h),
    )
}

/// Type II defect potential D⁰ = f(p+λ, q) + g(p-λ, q).
#[derive(Clone)]
pub struct TypeIIDefectPotential {
    pub name: String,
    pub sigma: f64,
    f: PairFn,
    g: PairFn,
}

impl fmt::Debug for TypeIIDefectPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TypeIIDefectPotential")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .finish()
    }
}

/// Value and partial derivatives of D⁰(p, q, λ) at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TypeIIPartials {
    pub d: f64,
    pub dp: f64,
    pub dq: f64,
    pub dl: f64,
    pub dll: f64,
    pub dlp: f64,
    pub dlq: f64,
}

impl TypeIIDefectPotential {
    pub fn new(name: &str, sigma: f64, f: PairFn, g: PairFn) -> Self {
        Self {
            name: name.to_string(),
            sigma,
            f,
            g,
        }
    }

    /// f = 2σ(e^{s/2} + e^{-s/4}(e^{q/2} + e^{-q/2})),
    /// g = σ⁻¹(8e^{-r/4} + e^{r/2}(e^{q/2} + e^{-q/2})²), s = p+λ, r = p-λ.
    pub fn tzitzeica(sigma: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma)?;
        let s = sigma;
        let si = 1.0 / sigma;
        Ok(Self::new(
            "tzitzeica",
            sigma,
            Arc::new(move |a, q| 2.0 * s * ((0.5 * a).exp() + (-0.25 * a).exp() * 2.0 * (0.5 * q).cosh())),
            Arc::new(move |r, q| si * (8.0 * (-0.25 * r).exp() + (0.5 * r).exp() * (2.0 * (0.5 * q).cosh()).powi(2))),
        ))
    }

    /// Two sine-Gordon type I defects with parameters σ₁, σ₂ fused into one
    /// type II defect; λ plays the role of the field between them.
    pub fn sine_gordon_fused(sigma1: f64, sigma2: f64) -> Result<Self, PotentialError> {
        check_sigma(sigma1)?;
        check_sigma(sigma2)?;
        let (a1, a2) = (sigma1, sigma2);
        let (b1, b2) = (1.0 / sigma1, 1.0 / sigma2);
        Ok(Self::new(
            "sine-gordon-fused",
            (sigma1 * sigma2).sqrt(),
            Arc::new(move |s, q| -2.0 * (a1 * (0.5 * (s + q)).cos() + a2 * (0.5 * (s - q)).cos())),
            Arc::new(move |r, q| -2.0 * (b1 * (0.5 * (r + q)).cos() + b2 * (0.5 * (r - q)).cos())),
        ))
    }

    pub fn zero() -> Self {
        Self::new("zero", 1.0, Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0))
    }

    pub fn from_name(name: &str, sigma: f64, sigma2: Option<f64>) -> Result<Self, PotentialError> {
        match name {
            "tzitzeica" => Self::tzitzeica(sigma),
            "sine-gordon-fused" => Self::sine_gordon_fused(sigma, sigma2.unwrap_or(sigma)),
            other => Err(PotentialError::UnknownName(other.to_string())),
        }
    }

    /// Replace g by g + δg.
    pub fn perturb_g(&self, dg: PairFn) -> Self {
        let g = self.g.clone();
        Self {
            name: format!("{}+perturbed", self.name),
            sigma: self.sigma,
            f: self.f.clone(),
            g: Arc::new(move |r, q| g(r, q) + dg(r, q)),
        }
    }

    pub fn f(&self, s: f64, q: f64) -> f64 {
        (self.f)(s, q)
    }

    pub fn g(&self, r: f64, q: f64) -> f64 {
        (self.g)(r, q)
    }

    pub fn d0(&self, p: f64, q: f64, lambda: f64) -> f64 {
        self.f(p + lambda, q) + self.g(p - lambda, q)
    }

    /// Momentum partner, g - f with momentum density −u_t u_x.
    pub fn d1(&self, p: f64, q: f64, lambda: f64) -> f64 {
        self.g(p - lambda, q) - self.f(p + lambda, q)
    }

    /// Finite-difference partials of D⁰; second derivatives use a wider step
    /// to keep roundoff below 1e-7.
    pub fn partials(&self, p: f64, q: f64, l: f64) -> TypeIIPartials {
        let h = FD_STEP;
        let h2 = 1e-4;
        let d = |p: f64, q: f64, l: f64| self.d0(p, q, l);
        let c = d(p, q, l);
        TypeIIPartials {
            d: c,
            dp: (d(p + h, q, l) - d(p - h, q, l)) / (2.0 * h),
            dq: (d(p, q + h, l) - d(p, q - h, l)) / (2.0 * h),
            dl: (d(p, q, l + h) - d(p, q, l - h)) / (2.0 * h),
            dll: (d(p, q, l + h2) - 2.0 * c + d(p, q, l - h2)) / (h2 * h2),
            dlp: (d(p + h2, q, l + h2) - d(p + h2, q, l - h2) - d(p - h2, q, l + h2)
                + d(p - h2, q, l - h2))
                / (4.0 * h2 * h2),
            dlq: (d(p, q + h2, l + h2) - d(p, q + h2, l - h2) - d(p, q - h2, l + h2)
                + d(p, q - h2, l - h2))
                / (4.0 * h2 * h2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Type2Report {
    /// max |f_λ g_q - g_λ f_q - (U - V)|
    pub residual: f64,
    pub nodes: usize,
    pub failures: Vec<EvalFailure>,
}

/// Residual of the type II constraint over a (p, q, λ) grid.
pub fn verify_type2_constraint(
    defect: &TypeIIDefectPotential,
    u_pot: &BulkPotential,
    v_pot: &BulkPotential,
    grid: &Grid3,
    h: f64,
) -> Type2Report {
    let mut rep = Type2Report {
        residual: 0.0,
        nodes: 0,
        failures: Vec::new(),
    };
    for p in grid.p.points() {
        for q in grid.q.points() {
            for l in grid.lambda.points() {
                rep.nodes += 1;
                let s = p + l;
                let r = p - l;
                let f_l = (defect.f(s + h, q) - defect.f(s - h, q)) / (2.0 * h);
                let f_q = (defect.f(s, q + h) - defect.f(s, q - h)) / (2.0 * h);
                let g_l = -(defect.g(r + h, q) - defect.g(r - h, q)) / (2.0 * h);
                let g_q = (defect.g(r, q + h) - defect.g(r, q - h)) / (2.0 * h);
                let res = (f_l * g_q - g_l * f_q - (u_pot.eval(p + q) - v_pot.eval(p - q))).abs();
                if res.is_finite() {
                    rep.residual = rep.residual.max(res);
                } else {
                    rep.failures.push(EvalFailure {
                        point: vec![p, q, l],
                        quantity: "type2".to_string(),
                    });
                }
            }
        }
    }
    rep
}

/// Exponents a of the ansatz D⁰ = Σ c_{ab} e^{a u + b v}, a, b ∈ {0, ±¼, ±½, ±1}.
pub const ANSATZ_EXPONENTS: [f64; 7] = [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSearchReport {
    /// Smallest root-mean-square energy residual found.
    pub min_rms: f64,
    /// Max-norm residual of that best fit; always ≥ `min_rms`.
    pub min_max: f64,
    /// Coefficients of e^{a(u+v)} for each nonzero exponent a.
    pub plus_coeffs: Vec<f64>,
    /// Coefficients of e^{a(u-v)}.
    pub minus_coeffs: Vec<f64>,
    pub starts: usize,
}

/// Best fit of the type I energy constraint for U = V = Tzitzéica over the
/// exponential ansatz family.
///
/// The wave constraint kills every term with b² ≠ a², so the surviving ansatz
/// is D⁰ = A(u+v) + B(u-v) with A, B sums of exponentials. The energy constraint
/// becomes 2 A'(u+v) B'(u-v) = U(u) - U(v), bilinear in the coefficients;
/// alternating least squares from several starts gives the smallest RMS
/// residual, which bounds the max residual from below.
pub fn tzitzeica_type1_ansatz_search(grid: &Grid2, iterations: usize) -> AnsatzSearchReport {
    let exps: Vec<f64> = ANSATZ_EXPONENTS.iter().copied().filter(|a| *a != 0.0).collect();
    let k = exps.len();
    let u_pot = BulkPotential::tzitzeica();
    let mut pts = Vec::new();
    for u in grid.u.points() {
        for v in grid.v.points() {
            pts.push((u + v, u - v, u_pot.eval(u) - u_pot.eval(v)));
        }
    }
    let n = pts.len();
    // A'(s) = Σ α_i a_i e^{a_i s}; fold a_i into the basis.
    let basis = |x: f64| -> Vec<f64> { exps.iter().map(|a| a * (a * x).exp()).collect() };
    let bs: Vec<Vec<f64>> = pts.iter().map(|p| basis(p.0)).collect();
    let br: Vec<Vec<f64>> = pts.iter().map(|p| basis(p.1)).collect();
    let target = DVector::from_iterator(n, pts.iter().map(|p| p.2));

    let mut starts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e
        })
        .collect();
    starts.push(vec![1.0; k]);
    starts.push((0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    starts.push((0..k).map(|i| 1.0 / (1.0 + i as f64)).collect());

    let lsq = |fixed: &[f64], fixed_basis: &[Vec<f64>], free_basis: &[Vec<f64>]| -> Vec<f64> {
        let m = DMatrix::from_fn(n, k, |r, c| {
            let w: f64 = fixed.iter().zip(&fixed_basis[r]).map(|(a, b)| a * b).sum();
            2.0 * w * free_basis[r][c]
        });
        let svd = m.svd(true, true);
        match svd.solve(&target, 1e-12) {
            Ok(x) => x.iter().copied().collect(),
            Err(_) => vec![0.0; k],
        }
    };
    let eval = |alpha: &[f64], beta: &[f64]| -> (f64, f64) {
        let mut ss = 0.0;
        let mut mx: f64 = 0.0;
        for r in 0..n {
            let a: f64 = alpha.iter().zip(&bs[r]).map(|(x, y)| x * y).sum();
            let b: f64 = beta.iter().zip(&br[r]).map(|(x, y)| x * y).sum();
            let e = 2.0 * a * b - target[r];
            ss += e * e;
            mx = mx.max(e.abs());
        }
        ((ss / n as f64).sqrt(), mx)
    };

    let mut best = AnsatzSearchReport {
        min_rms: f64::INFINITY,
        min_max: f64::INFINITY,
        plus_coeffs: vec![0.0; k],
        minus_coeffs: vec![0.0; k],
        starts: starts.len(),
    };
    for start in &starts {
        let mut beta = start.clone();
        let mut alpha = lsq(&beta, &br, &bs);
        for _ in 0..iterations {
            beta = lsq(&alpha, &bs, &br);
            alpha = lsq(&beta, &br, &bs);
        }
        let (rms, mx) = eval(&alpha, &beta);
        if rms < best.min_rms {
            best.min_rms = rms;
            best.min_max = mx;
            best.plus_coeffs = alpha;
            best.minus_coeffs = beta;
        }
    }
    best
}
