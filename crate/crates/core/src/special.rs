//! Gamma-function helpers shared by the Mittag-Leffler evaluator and the
//! fractional predictor-corrector.

use std::f64::consts::PI;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_sum(zm1: f64) -> f64 {
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (zm1 + i as f64);
    }
    acc
}

/// `sin(pi * x)`, exactly zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // r in [-1, 1]
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `ln |Gamma(z)|` for real `z` that is not a non-positive integer.
pub fn ln_gamma(z: f64) -> f64 {
    if z < 0.5 {
        let s = sin_pi(z);
        if s == 0.0 {
            return f64::INFINITY;
        }
        return (PI / s.abs()).ln() - ln_gamma(1.0 - z);
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (zm1 + 0.5) * t.ln() - t + lanczos_sum(zm1).ln()
}

/// `Gamma(z)` for real `z`; infinite at the poles.
pub fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        let s = sin_pi(z);
        if s == 0.0 {
            return f64::INFINITY;
        }
        return PI / (s * gamma(1.0 - z));
    }
    if z > 171.7 {
        return f64::INFINITY;
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    // split the power so t^(z - 1/2) does not overflow before exp(-t) is applied
    let half = t.powf(0.5 * (zm1 + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(zm1)
}

/// `1 / Gamma(z)`, zero at the poles of Gamma.
pub fn rgamma(z: f64) -> f64 {
    if z < 0.5 {
        let s = sin_pi(z);
        if s == 0.0 {
            return 0.0;
        }
        // reflection: 1/Gamma(z) = Gamma(1 - z) sin(pi z) / pi
        return gamma(1.0 - z) * s / PI;
    }
    1.0 / gamma(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials() {
        let mut f = 1.0;
        for n in 1..20 {
            f *= n as f64;
            let g = gamma(n as f64 + 1.0);
            assert!((g - f).abs() <= 1e-14 * f, "n={n} {g} {f}");
        }
    }

    #[test]
    fn half_integer_and_reflection() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-15);
        assert!((gamma(-0.5) + 2.0 * sqrt_pi).abs() < 1e-14);
        assert!((ln_gamma(0.5) - sqrt_pi.ln()).abs() < 1e-15);
        assert!((ln_gamma(100.0) - 359.134_205_369_575_4).abs() < 1e-11);
    }

    #[test]
    fn poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!(gamma(-2.0).is_infinite());
        assert_eq!(sin_pi(7.0), 0.0);
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-16);
        assert!((sin_pi(-2.5) + 1.0).abs() < 1e-16);
    }
}
