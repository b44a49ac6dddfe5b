//! Factorials, binomials, superfactorials and the level-size products, in
//! log space, with exact big-integer versions for small arguments.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::One;

use super::{LogScalar, TheoryError};

pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        libm::lgamma(k as f64 + 1.0)
    }
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let s = k.min(n - k);
    if s <= 256 {
        (0..s).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
    } else {
        ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
    }
}

/// `C(n, k)` with `C(n, k) = 0` for `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> LogScalar {
    if k < 0 {
        LogScalar::ZERO
    } else {
        LogScalar::from_ln(ln_binomial(n, k as u64))
    }
}

pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(t, m) = t(t-1)...(t-m+1)/m!` for a real, possibly astronomically large,
/// upper argument `t >= 0`.
///
/// Each factor is `ln t + ln(1 - i/t)`, so no factor is ever materialised.
pub fn binomial_real(t: LogScalar, m: u64) -> LogScalar {
    if m == 0 {
        return LogScalar::ONE;
    }
    if t.is_zero() {
        return LogScalar::ZERO;
    }
    assert!(t.is_positive(), "binomial of a negative upper argument");
    let inv_t = (-t.ln()).exp();
    let mut ln = 0.0;
    let mut sign = 1i8;
    for i in 0..m {
        let r = i as f64 * inv_t;
        // a factor `t - i` within rounding of zero is zero: integer `t < m`
        if (r - 1.0).abs() <= 4.0 * f64::EPSILON {
            return LogScalar::ZERO;
        } else if r < 1.0 {
            ln += t.ln() + (-r).ln_1p();
        } else {
            ln += t.ln() + (r - 1.0).ln();
            sign = -sign;
        }
    }
    LogScalar::from_signed_ln(sign, ln - ln_factorial(m))
}

/// Binomial approximation `C(m, s) ≈ m^s/s! · exp(-s²/2m)`, valid when
/// `s³ <= m²`.
pub fn binom_approx(m: f64, s: u64) -> Result<LogScalar, TheoryError> {
    let sf = s as f64;
    if !(m > 0.0) || sf.powi(3) > m * m {
        return Err(TheoryError::Guard(format!(
            "binomial approximation needs s^3 <= m^2 (m = {m}, s = {s})"
        )));
    }
    Ok(LogScalar::from_ln(
        sf * m.ln() - ln_factorial(s) - sf * sf / (2.0 * m),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuperfactorialMode {
    /// `ln Π_{r<=l} r!`.
    ExactLog,
    /// Closed-form estimate of `φ(l - x)/φ(l)`.
    AsymptoticRatio(u64),
}

pub fn ln_superfactorial(ell: u64) -> f64 {
    (2..=ell).map(ln_factorial).sum()
}

/// Superfactorial `φ(l) = Π_{r=1}^{l} r!`, or the asymptotic ratio
/// `φ(l - x)/φ(l) ≈ l^{-lx + x²/2 - x} e^{lx + εa·x - εb·x²} (2π)^{-x/2}`.
pub fn superfactorial(ell: u64, mode: SuperfactorialMode) -> Result<LogScalar, TheoryError> {
    match mode {
        SuperfactorialMode::ExactLog => Ok(LogScalar::from_ln(ln_superfactorial(ell))),
        SuperfactorialMode::AsymptoticRatio(x) => {
            let l = ell as f64;
            let x = x as f64;
            if ell == 0 || x > 3.0 * l.sqrt() {
                return Err(TheoryError::Guard(format!(
                    "superfactorial ratio needs x <= 3 sqrt(l) (l = {ell}, x = {x})"
                )));
            }
            let (ea, eb) = truncated_corrections(x, l);
            let ln = (-l * x + x * x / 2.0 - x) * l.ln() + l * x + ea * x
                - eb * x * x
                - x / 2.0 * (2.0 * PI).ln();
            Ok(LogScalar::from_ln(ln))
        }
    }
}

/// Leading orders of the corrections `εa = x/2l`, `εb = x/6l + x²/24l²`.
fn truncated_corrections(x: f64, l: f64) -> (f64, f64) {
    let r = x / l;
    (r / 2.0, r / 6.0 + r * r / 24.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaMode {
    Exact,
    Asymptotic,
}

/// `η(j) = Π_{s=0}^{j-1} C(n, l - s)`, the product of the sizes of levels
/// `n - l, ..., n - l + j - 1`.
pub fn eta(j: u64, n: u64, ell: u64, mode: EtaMode) -> Result<LogScalar, TheoryError> {
    if j > ell + 1 {
        return Err(TheoryError::OutOfRange(format!(
            "eta needs j <= l + 1 (j = {j}, l = {ell})"
        )));
    }
    match mode {
        EtaMode::Exact => {
            if j > ell {
                return Ok(LogScalar::ZERO);
            }
            Ok(LogScalar::from_ln(
                (0..j).map(|s| ln_binomial(n, ell - s)).sum(),
            ))
        }
        EtaMode::Asymptotic => {
            let (nf, l, jf) = (n as f64, ell as f64, j as f64);
            if l > nf.powf(0.49) || jf > l.powf(0.6) {
                return Err(TheoryError::Guard(format!(
                    "eta asymptotics need l <= n^0.49 and j <= l^0.6 (n = {n}, l = {ell}, j = {j})"
                )));
            }
            let (ea, eb) = truncated_corrections(jf, l);
            let ln = jf * (l - (jf - 1.0) / 2.0) * (nf / l).ln() - jf / 2.0 * (2.0 * PI * l).ln()
                + l * jf
                + 3.0 * l * l * jf / (2.0 * nf)
                + ea * jf
                - eb * jf * jf;
            Ok(LogScalar::from_ln(ln))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn small_binomials_exact() {
        for n in 0..60u64 {
            for k in 0..=n {
                let exact = binomial_exact(n, k);
                let as_f64: f64 = exact.to_string().parse().unwrap();
                assert!(rel(ln_binomial(n, k).exp(), as_f64) < 1e-12, "C({n},{k})");
            }
        }
        assert_eq!(ln_binomial(3, 4), f64::NEG_INFINITY);
        assert!(binomial(10, -1).is_zero());
        assert_eq!(binomial_exact(10, 4), BigUint::from(210u32));
    }

    #[test]
    fn large_binomial_routes_agree() {
        let direct = ln_factorial(1_000_000) - ln_factorial(300) - ln_factorial(999_700);
        assert!(rel(ln_binomial(1_000_000, 300), direct) < 1e-12);
    }

    #[test]
    fn real_binomial_matches_integer() {
        for (t, m) in [(10u64, 3u64), (48, 6), (1000, 20), (7, 7), (5, 0)] {
            let got = binomial_real(LogScalar::from_f64(t as f64), m);
            assert!((got.ln() - ln_binomial(t, m)).abs() < 1e-12, "C({t},{m})");
        }
        // integer upper argument below m vanishes
        assert!(binomial_real(LogScalar::from_f64(3.0), 5).is_zero());
        // C(2.5, 3) = 2.5 * 1.5 * 0.5 / 6
        let got = binomial_real(LogScalar::from_f64(2.5), 3);
        assert!((got.to_f64() - 0.3125).abs() < 1e-15);
        // C(0.5, 2) = 0.5 * -0.5 / 2
        assert!((binomial_real(LogScalar::from_f64(0.5), 2).to_f64() + 0.125).abs() < 1e-15);
    }

    #[test]
    fn real_binomial_of_huge_argument() {
        let t = LogScalar::from_ln(1000.0);
        let got = binomial_real(t, 10);
        assert!((got.ln() - (10_000.0 - ln_factorial(10))).abs() < 1e-9);
    }

    #[test]
    fn superfactorial_exact_small() {
        let s = superfactorial(3, SuperfactorialMode::ExactLog).unwrap();
        assert!((s.ln() - 12f64.ln()).abs() < 1e-14);
        assert_eq!(
            superfactorial(0, SuperfactorialMode::ExactLog).unwrap(),
            LogScalar::ONE
        );
        assert!(superfactorial(100, SuperfactorialMode::AsymptoticRatio(31)).is_err());
    }

    #[test]
    fn superfactorial_ratio_at_zero_shift() {
        let r = superfactorial(50, SuperfactorialMode::AsymptoticRatio(0)).unwrap();
        assert_eq!(r.ln(), 0.0);
    }

    #[test]
    fn superfactorial_ratio_close_to_exact() {
        for x in 1..=10 {
            let exact = ln_superfactorial(400 - x) - ln_superfactorial(400);
            let asym = superfactorial(400, SuperfactorialMode::AsymptoticRatio(x))
                .unwrap()
                .ln();
            assert!(rel(asym, exact) <= 0.01, "x = {x}");
        }
    }

    #[test]
    fn eta_values() {
        assert_eq!(eta(0, 10, 4, EtaMode::Exact).unwrap(), LogScalar::ONE);
        assert_eq!(eta(0, 10_000, 50, EtaMode::Asymptotic).unwrap().ln(), 0.0);
        let e = eta(2, 10, 4, EtaMode::Exact).unwrap();
        assert!((e.ln() - 25_200f64.ln()).abs() < 1e-12);
        assert!(eta(5, 10, 4, EtaMode::Exact).unwrap().is_zero());
        assert!(eta(6, 10, 4, EtaMode::Exact).is_err());
        assert!(eta(5, 10_000, 200, EtaMode::Asymptotic).is_err());
        assert!(eta(11, 10_000, 50, EtaMode::Asymptotic).is_err());
    }

    #[test]
    fn eta_asymptotics_within_one_percent() {
        for j in 1..=10 {
            let exact = eta(j, 10_000, 50, EtaMode::Exact).unwrap().ln();
            let asym = eta(j, 10_000, 50, EtaMode::Asymptotic).unwrap().ln();
            assert!(rel(asym, exact) <= 0.01, "j = {j}");
        }
    }

    #[test]
    fn binom_approx_cases() {
        assert_eq!(binom_approx(100.0, 0).unwrap().ln(), 0.0);
        let one = binom_approx(1e4, 1).unwrap().to_f64();
        assert!((one - 1e4 * (-1.0 / 2e4f64).exp()).abs() < 1e-9);
        let approx = binom_approx(1e6, 50).unwrap().ln();
        assert!(rel(approx, ln_binomial(1_000_000, 50)) <= 1e-3);
        assert!(binom_approx(10.0, 5).is_err());
    }
}
