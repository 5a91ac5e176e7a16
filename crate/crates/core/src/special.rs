//! Special functions used by the transmission-matrix prefactor.
//!
//! The complex log-Gamma uses the Lanczos approximation with the Pugh
//! coefficient set (r = 10.900511, eleven terms), which is accurate to about
//! sixteen digits on the right half-plane, and the reflection formula on the
//! left half-plane. An independent Stirling-series route is kept for
//! cross-checking and for very large arguments.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_R: f64 = 10.900511;

const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

/// ln(2·sqrt(e/π))
const LN_TWO_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

/// Bernoulli numbers B_0..B_16 (B_1 = -1/2 convention).
const BERNOULLI: [f64; 17] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
    0.0,
    7.0 / 6.0,
    0.0,
    -3617.0 / 510.0,
];

/// Distance below which an argument is treated as sitting on a pole of Γ.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Returns the non-positive integer `-n` if `z` lies within
/// [`POLE_TOLERANCE`] of it.
pub fn gamma_pole(z: Complex64) -> Option<i64> {
    if z.re > 0.5 {
        return None;
    }
    let n = z.re.round();
    if n <= 0.0 && (z - Complex64::new(n, 0.0)).norm() < POLE_TOLERANCE {
        Some(n as i64)
    } else {
        None
    }
}

/// Complex log-Gamma. Only exp(ln_gamma(z)) is branch independent; the
/// imaginary part may differ from the principal branch by a multiple of 2π.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1-z) = π / sin(πz)
        let s = (z * PI).sin();
        Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma_right(Complex64::new(1.0, 0.0) - z)
    } else {
        ln_gamma_right(z)
    }
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    if z.norm() > 40.0 {
        return ln_gamma_stirling(z);
    }
    let mut s = Complex64::new(LANCZOS_DK[0], 0.0);
    for (i, &dk) in LANCZOS_DK.iter().enumerate().skip(1) {
        s += dk / (z + (i as f64 - 1.0));
    }
    let base = z - 0.5 + LANCZOS_R;
    s.ln() + LN_TWO_SQRT_E_OVER_PI + (z - 0.5) * (base.ln() - 1.0)
}

/// Stirling series for ln Γ(z), shifting the argument up by recurrence until
/// |z| ≥ 15 so eight correction terms reach double precision.
pub fn ln_gamma_stirling(z: Complex64) -> Complex64 {
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.norm() < 15.0 || w.re < 1.0 {
        shift += w.ln();
        w += 1.0;
    }
    let half_ln_two_pi = 0.5 * (2.0 * PI).ln();
    let mut acc = (w - 0.5) * w.ln() - w + half_ln_two_pi;
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for j in 1..=8 {
        let b = BERNOULLI[2 * j];
        acc += pow * (b / ((2 * j) as f64 * (2 * j - 1) as f64));
        pow *= inv2;
    }
    acc - shift
}

/// Bernoulli number B_n for n ≤ 16.
pub fn bernoulli_number(n: usize) -> f64 {
    BERNOULLI[n]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernoulli polynomial B_n(x) = Σ_k C(n,k) B_k x^(n-k), n ≤ 16.
pub fn bernoulli_poly(n: usize, x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        acc += x.powi((n - k) as i32) * (binomial(n, k) * BERNOULLI[k]);
    }
    acc
}

/// Hurwitz zeta ζ(s, a) = Σ_{k≥0} (k+a)^(-s) for integer s ≥ 2 and a > 0,
/// by direct summation up to a shifted base followed by Euler–Maclaurin.
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    assert!(s >= 2, "hurwitz_zeta needs s >= 2");
    assert!(a > 0.0, "hurwitz_zeta needs a > 0");
    let sf = s as f64;
    let mut head = 0.0;
    let mut base = a;
    while base < 20.0 {
        head += base.powf(-sf);
        base += 1.0;
    }
    let mut tail = base.powf(1.0 - sf) / (sf - 1.0) + 0.5 * base.powf(-sf);
    // rising factorial s (s+1) ... (s+2j-2) / (2j)!
    let mut rising = sf;
    let mut fact = 2.0;
    let mut pow = base.powf(-sf - 1.0);
    for j in 1..=7 {
        tail += BERNOULLI[2 * j] / fact * rising * pow;
        rising *= (sf + 2.0 * j as f64 - 1.0) * (sf + 2.0 * j as f64);
        fact *= (2 * j + 1) as f64 * (2 * j + 2) as f64;
        pow /= base * base;
    }
    head + tail
}
