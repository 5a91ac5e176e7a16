//! Closed-form sine-Gordon soliton data and the defect scattering predictions
//! the simulator is checked against.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on |θ - η| below which the analytic classification is Absorb.
pub const ABSORB_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("charge must be +1 or -1, got {0}")]
    BadCharge(i32),
    #[error("rapidity must be finite, got {0}")]
    BadRapidity(f64),
    #[error("defect positions must be strictly increasing (index {0})")]
    UnorderedChain(usize),
    #[error("chain has {positions} positions but {etas} parameters")]
    ChainLength { positions: usize, etas: usize },
    #[error("classification needs an incoming soliton with theta > 0, got {0}")]
    NotIncoming(f64),
    #[error("position shift undefined for delay {0}")]
    UndefinedShift(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub theta: f64,
    pub c: f64,
    pub charge: i32,
}

impl SolitonParams {
    pub fn new(theta: f64, c: f64, charge: i32) -> Result<Self, AnalyticsError> {
        if !theta.is_finite() {
            return Err(AnalyticsError::BadRapidity(theta));
        }
        if charge != 1 && charge != -1 {
            return Err(AnalyticsError::BadCharge(charge));
        }
        Ok(Self { theta, c, charge })
    }

    /// Soliton centred at x0 at t = 0.
    pub fn centred_at(theta: f64, x0: f64, charge: i32) -> Result<Self, AnalyticsError> {
        Self::new(theta, -theta.cosh() * x0, charge)
    }

    pub fn a(&self) -> f64 {
        self.theta.cosh()
    }

    pub fn b(&self) -> f64 {
        -self.theta.sinh()
    }

    pub fn velocity(&self) -> f64 {
        self.theta.tanh()
    }

    pub fn width(&self) -> f64 {
        1.0 / self.a()
    }

    /// E = exp(a x + b t + c).
    pub fn tail(&self, x: f64, t: f64) -> f64 {
        (self.a() * x + self.b() * t + self.c).exp()
    }

    pub fn centre(&self, t: f64) -> f64 {
        -(self.b() * t + self.c) / self.a()
    }
}

/// 4 arctan E for charge +1, 2π - 4 arctan E for charge -1.
pub fn soliton_field(x: f64, t: f64, p: &SolitonParams) -> f64 {
    let u = 4.0 * p.tail(x, t).atan();
    if p.charge == 1 {
        u
    } else {
        2.0 * PI - u
    }
}

/// ∂u/∂t of [`soliton_field`].
pub fn soliton_velocity(x: f64, t: f64, p: &SolitonParams) -> f64 {
    let e = p.tail(x, t);
    let ut = if e.is_finite() {
        4.0 * p.b() * e / (1.0 + e * e)
    } else {
        0.0
    };
    ut * p.charge as f64
}

/// Extended real delay factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Delay {
    Finite(f64),
    /// θ = η: no emerging soliton. The sign records the side of approach
    /// when known, +1 otherwise.
    Infinite(i8),
}

impl Delay {
    pub fn is_absorb(&self) -> bool {
        matches!(self, Delay::Infinite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Delay::Finite(z) => Some(*z),
            Delay::Infinite(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Pass,
    Flip,
    Absorb,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Pass => "Pass",
            Regime::Flip => "Flip",
            Regime::Absorb => "Absorb",
        }
    }
}

/// z = coth((η - θ)/2).
pub fn delay_factor(theta: f64, eta: f64) -> Delay {
    let s = eta - theta;
    if s.abs() < ABSORB_TOL {
        return Delay::Infinite(1);
    }
    Delay::Finite(1.0 / (0.5 * s).tanh())
}

pub fn classify(theta: f64, eta: f64) -> Result<Regime, AnalyticsError> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(AnalyticsError::NotIncoming(theta));
    }
    let s = eta - theta;
    Ok(if s.abs() < ABSORB_TOL {
        Regime::Absorb
    } else if s < 0.0 {
        Regime::Flip
    } else {
        Regime::Pass
    })
}

/// Ordered defects η₁…ηₙ at x₁ < … < xₙ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectChain {
    etas: Vec<f64>,
    positions: Vec<f64>,
}

impl DefectChain {
    pub fn new(etas: Vec<f64>, positions: Vec<f64>) -> Result<Self, AnalyticsError> {
        if etas.len() != positions.len() {
            return Err(AnalyticsError::ChainLength {
                positions: positions.len(),
                etas: etas.len(),
            });
        }
        for i in 1..positions.len() {
            if !(positions[i] > positions[i - 1]) {
                return Err(AnalyticsError::UnorderedChain(i));
            }
        }
        Ok(Self { etas, positions })
    }

    pub fn empty() -> Self {
        Self {
            etas: Vec::new(),
            positions: Vec::new(),
        }
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }
}

/// z = z₁ z₂ … zₙ; Absorb if any factor is.
pub fn chain_delay(theta: f64, chain: &DefectChain) -> Delay {
    let mut z = 1.0;
    for &eta in chain.etas() {
        match delay_factor(theta, eta) {
            Delay::Finite(zi) => z *= zi,
            inf => return inf,
        }
    }
    Delay::Finite(z)
}

/// Spatial offset of the outgoing trajectory, -ln|z| / cosh θ.
pub fn position_shift(z: Delay, theta: f64) -> Result<f64, AnalyticsError> {
    match z {
        Delay::Finite(v) if v != 0.0 && v.is_finite() => Ok(-v.abs().ln() / theta.cosh()),
        other => Err(AnalyticsError::UndefinedShift(format!("{other:?}"))),
    }
}

/// Total rest-frame energy of a unit-mass soliton with rapidity θ.
pub fn soliton_energy(theta: f64) -> f64 {
    8.0 * theta.cosh()
}
