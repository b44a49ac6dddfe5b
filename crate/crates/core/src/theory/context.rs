//! The parameter tower for the long-path analysis: `l`, `j0`, `μ0`, `μ1`,
//! the thresholds `ζ`, the comparison targets `ξ`, and the lower-tail schedule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::combinatorics::{binomial, binomial_real, eta, ln_binomial, EtaMode};
use super::{LogScalar, TheoryError};

/// All derived parameters for one dimension `n`.
///
/// Logs are natural throughout, including in `ω = (1 - a) log n` and
/// `ω1 = log² n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryContext {
    pub n: u64,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Path length target, `round(n^a)` but at least 2.
    pub ell: u64,
    /// Base level `n - l`.
    pub k: u64,
    pub omega: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub j0: u64,
    pub theta0: f64,
    pub mu0: LogScalar,
    pub mu1: LogScalar,
    /// Offset at which the stopping rule fired, once known.
    pub jstar: Option<u64>,
}

impl TheoryContext {
    /// Exponents `a = 1/2 - ε`, `b = 1/2 - 2ε`, `c = 1/4 - ε/3`.
    pub fn new(n: u64, eps: f64) -> Result<Self, TheoryError> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(TheoryError::OutOfRange(format!(
                "eps = {eps} not in (0, 1/2)"
            )));
        }
        if n < 3 {
            return Err(TheoryError::OutOfRange(format!("n = {n} too small")));
        }
        let nf = n as f64;
        let a = 0.5 - eps;
        let b = 0.5 - 2.0 * eps;
        let c = 0.25 - eps / 3.0;
        let ell = (nf.powf(a).round() as u64).max(2);
        if ell >= n {
            return Err(TheoryError::Degenerate(format!("l = {ell} >= n = {n}")));
        }
        let omega = (1.0 - a) * nf.ln();
        if omega <= 1.0 {
            return Err(TheoryError::Degenerate(format!(
                "omega = {omega} <= 1 at n = {n}; j0 undefined"
            )));
        }
        let target = 2.0 * ell as f64 + 4.0 * ell as f64 / (omega - 1.0);
        let j0 = (1u64..)
            .find(|&j| (j * (j + 3)) as f64 >= target)
            .expect("j(j+3) is unbounded");
        let theta0 = (j0 * j0) as f64 - target;

        let mu0 = LogScalar::from_ln(ln_mu0(nf, ell as f64, j0 as f64, b));
        let omega1 = nf.ln().powi(2);
        let mu1 = mu0 - LogScalar::from_f64(omega1) * binomial(n, ell as i64 - j0 as i64);

        Ok(Self {
            n,
            eps,
            a,
            b,
            c,
            ell,
            k: n - ell,
            omega,
            omega1,
            omega2: nf.powf(c),
            j0,
            theta0,
            mu0,
            mu1,
            jstar: None,
        })
    }

    /// Context with the path exponent `a` given directly; `ε = 1/2 - a`.
    pub fn with_exponent(n: u64, a: f64) -> Result<Self, TheoryError> {
        Self::new(n, 0.5 - a)
    }

    pub fn with_jstar(mut self, jstar: u64) -> Result<Self, TheoryError> {
        if jstar >= self.j0 {
            return Err(TheoryError::OutOfRange(format!(
                "j* = {jstar} must be below j0 = {}",
                self.j0
            )));
        }
        self.jstar = Some(jstar);
        Ok(self)
    }

    /// Whether offset `j` names an actual level (`k + j <= n`).
    pub fn level_exists(&self, j: u64) -> bool {
        j <= self.ell
    }

    fn require_level(&self, j: u64, what: &str) -> Result<(), TheoryError> {
        if j > self.j0 {
            return Err(TheoryError::OutOfRange(format!(
                "{what}: j = {j} > j0 = {}",
                self.j0
            )));
        }
        if !self.level_exists(j) {
            return Err(TheoryError::OutOfRange(format!(
                "{what}: level k + {j} exceeds n = {}",
                self.n
            )));
        }
        Ok(())
    }

    fn eta(&self, j: u64) -> LogScalar {
        eta(j, self.n, self.ell, EtaMode::Exact).expect("j <= l checked by caller")
    }

    fn jstar(&self) -> Result<u64, TheoryError> {
        self.jstar
            .ok_or_else(|| TheoryError::OutOfRange("j* not set on context".into()))
    }
}

fn ln_mu0(n: f64, ell: f64, j0: f64, b: f64) -> f64 {
    let inner = (1.0 + 1.0 / j0) * (j0 + 1.0).ln()
        + (ell - (j0 - 1.0) / 2.0) * n.ln()
        + (ell - 1.0 / 3.0 + 4.0 / (3.0 * j0))
        + j0.ln() / (2.0 * j0)
        + b / j0 * n.ln()
        - (j0 - 1.0) / (2.0 * j0) * (2.0 * PI).ln()
        - (ell - j0 / 2.0 + 1.0) * ell.ln();
    -1.0 + inner * j0 / (j0 + 1.0)
}

/// Threshold `ζ(j, μ0) = C(μ0, j0+1) / (j0 · C(μ0, j0-j) · η(j))`.
pub fn zeta(j: u64, ctx: &TheoryContext) -> Result<LogScalar, TheoryError> {
    ctx.require_level(j, "zeta")?;
    let num = binomial_real(ctx.mu0, ctx.j0 + 1);
    let den = LogScalar::from_f64(ctx.j0 as f64) * binomial_real(ctx.mu0, ctx.j0 - j) * ctx.eta(j);
    Ok(num / den)
}

/// Comparison target `ξ(j, t) = C(μ0, j0+1)/η(j) · C(t, j)/C(μ0, j0)`.
pub fn xi(j: u64, t: LogScalar, ctx: &TheoryContext) -> Result<LogScalar, TheoryError> {
    ctx.require_level(j, "xi")?;
    Ok(
        binomial_real(ctx.mu0, ctx.j0 + 1) / ctx.eta(j) * binomial_real(t, j)
            / binomial_real(ctx.mu0, ctx.j0),
    )
}

/// `ξ(j0 - 1, μ0) / ξ(j0, μ0)`.
pub fn xi_ratio(ctx: &TheoryContext) -> Result<f64, TheoryError> {
    let hi = xi(ctx.j0, ctx.mu0, ctx)?;
    let lo = xi(ctx.j0 - 1, ctx.mu0, ctx)?;
    Ok((lo / hi).to_f64())
}

/// `N_j = C(n, l - j)` and `L_j = C(μ0, j0+1) / (j0 η(j) C(μ0, j0 - j*))`.
pub fn nj_lj(j: u64, ctx: &TheoryContext) -> Result<(LogScalar, LogScalar), TheoryError> {
    let jstar = ctx.jstar()?;
    ctx.require_level(j, "nj_lj")?;
    let nj = binomial(ctx.n, ctx.ell as i64 - j as i64);
    let lj = binomial_real(ctx.mu0, ctx.j0 + 1)
        / (LogScalar::from_f64(ctx.j0 as f64)
            * ctx.eta(j)
            * binomial_real(ctx.mu0, ctx.j0 - jstar));
    Ok((nj, lj))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScheduleTime {
    /// The stopping time itself; only used for `j = j*`.
    Tau0,
    /// Steps after the stopping time.
    AfterTau0(LogScalar),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub j: u64,
    pub t_hat: Option<LogScalar>,
    pub t: ScheduleTime,
    pub delta: f64,
}

/// Smallest `t` with `ln C(t, m) >= target`; exact integer while `t` fits in
/// a float mantissa, otherwise bisection on `ln t`.
fn min_time_with_ln_binomial(m: u64, target: f64) -> LogScalar {
    let ln_c = |ln_t: f64| binomial_real(LogScalar::from_ln(ln_t), m).ln();
    if target <= 0.0 {
        return LogScalar::from_f64(m as f64);
    }
    let mut lo = (m.max(1) as f64).ln();
    let mut hi = lo + 1.0;
    while ln_c(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    if hi < 52.0 * std::f64::consts::LN_2 {
        let (mut a, mut b) = (m, hi.exp().ceil() as u64);
        while a < b {
            let mid = a + (b - a) / 2;
            if ln_binomial(mid, m) >= target {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        return LogScalar::from_f64(a as f64);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_c(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    LogScalar::from_ln(hi)
}

/// Lower-tail schedule for level offset `j`: `t̂_j`, `t_j` and `δ_j`.
///
/// Times are counted from the stopping time, so `t_{j*}` is the stopping time
/// itself and `t_{j*+1} = max(t̂, ω2 · 0) = t̂`.
pub fn schedule(j: u64, ctx: &TheoryContext) -> Result<ScheduleEntry, TheoryError> {
    let jstar = ctx.jstar()?;
    if j < jstar || j + 1 > ctx.j0 {
        return Err(TheoryError::OutOfRange(format!(
            "schedule needs j* <= j <= j0 - 1 (j = {j}, j* = {jstar}, j0 = {})",
            ctx.j0
        )));
    }
    if j == jstar {
        return Ok(ScheduleEntry {
            j,
            t_hat: None,
            t: ScheduleTime::Tau0,
            delta: 0.0,
        });
    }
    let omega2 = LogScalar::from_f64(ctx.omega2);
    let ln_n = (ctx.n as f64).ln();
    let mut prev = LogScalar::ZERO;
    let mut entry = None;
    for jj in jstar + 1..=j {
        let (nj, lj) = nj_lj(jj, ctx)?;
        let t_hat = min_time_with_ln_binomial(jj - jstar, ln_n + nj.ln() - lj.ln());
        let scaled = omega2 * prev;
        let t = if t_hat >= scaled { t_hat } else { scaled };
        prev = t;
        entry = Some(ScheduleEntry {
            j: jj,
            t_hat: Some(t_hat),
            t: ScheduleTime::AfterTau0(t),
            delta: (jj - jstar) as f64 / ctx.omega2,
        });
    }
    Ok(entry.expect("loop runs at least once"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::ln_factorial;

    #[test]
    fn exponents_and_j0() {
        let ctx = TheoryContext::new(10_000, 0.01).unwrap();
        assert!((ctx.a - 0.49).abs() < 1e-15);
        assert!((ctx.b - 0.48).abs() < 1e-15);
        assert!((ctx.c - (0.25 - 0.01 / 3.0)).abs() < 1e-15);
        assert_eq!(ctx.ell, 91);
        assert_eq!(ctx.k, 10_000 - 91);
        let target = 2.0 * 91.0 + 4.0 * 91.0 / (ctx.omega - 1.0);
        assert!((ctx.j0 * (ctx.j0 + 3)) as f64 >= target);
        assert!((((ctx.j0 - 1) * (ctx.j0 + 2)) as f64) < target);
        assert!(ctx.theta0.abs() <= 3.0 * ctx.j0 as f64);
        assert!(ctx.mu1 <= ctx.mu0);
    }

    #[test]
    fn small_contexts() {
        let ctx = TheoryContext::with_exponent(16, 0.45).unwrap();
        assert_eq!(ctx.ell, 3);
        assert_eq!(ctx.k, 13);
        assert_eq!(ctx.j0, 5);
        // l - j0 < 0 so the subtracted term vanishes
        assert_eq!(ctx.mu1, ctx.mu0);
        assert!(zeta(3, &ctx).is_ok());
        assert!(zeta(4, &ctx).is_err());
        assert!(TheoryContext::new(4, 0.05).is_err());
        assert!(TheoryContext::new(100, 0.6).is_err());
    }

    #[test]
    fn theta0_bound_on_grid() {
        for n in [50u64, 100, 1_000, 10_000, 100_000, 1_000_000] {
            let ctx = TheoryContext::new(n, 0.01).unwrap();
            assert!(ctx.theta0.abs() <= 3.0 * ctx.j0 as f64, "n = {n}");
        }
    }

    #[test]
    fn xi_at_offset_zero() {
        let ctx = TheoryContext::new(10_000, 0.01).unwrap();
        let got = xi(0, LogScalar::from_ln(123.0), &ctx).unwrap();
        let want = (ctx.mu0 - LogScalar::from_f64(ctx.j0 as f64))
            / LogScalar::from_f64((ctx.j0 + 1) as f64);
        assert!((got.ln() - want.ln()).abs() < 1e-9 * want.ln().abs());
    }

    #[test]
    fn zeta_small_case_by_hand() {
        let ctx = TheoryContext::with_exponent(16, 0.45).unwrap();
        let mu = ctx.mu0.to_f64();
        let falling =
            |m: u64| (0..m).map(|i| mu - i as f64).product::<f64>() / ln_factorial(m).exp();
        // η(1) = C(16, 3) = 560
        let want = falling(6) / (5.0 * falling(4) * 560.0);
        let got = zeta(1, &ctx).unwrap().to_f64();
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn schedule_endpoints() {
        let ctx = TheoryContext::new(10_000, 0.01)
            .unwrap()
            .with_jstar(0)
            .unwrap();
        let first = schedule(0, &ctx).unwrap();
        assert_eq!(first.t, ScheduleTime::Tau0);
        assert_eq!(first.delta, 0.0);
        let next = schedule(1, &ctx).unwrap();
        let ScheduleTime::AfterTau0(t1) = next.t else {
            panic!()
        };
        assert_eq!(Some(t1), next.t_hat);
        assert!((next.delta - 1.0 / ctx.omega2).abs() < 1e-15);
        assert!(schedule(ctx.j0, &ctx).is_err());
        assert!(nj_lj(1, &TheoryContext::new(10_000, 0.01).unwrap()).is_err());
    }

    #[test]
    fn schedule_hits_target_minimally() {
        let ctx = TheoryContext::with_exponent(200, 0.45)
            .unwrap()
            .with_jstar(0)
            .unwrap();
        let e = schedule(1, &ctx).unwrap();
        let (nj, lj) = nj_lj(1, &ctx).unwrap();
        let t = e.t_hat.unwrap();
        let ln_value = |t: LogScalar| (lj * binomial_real(t, 1) / nj).ln();
        let goal = 200f64.ln();
        assert!(ln_value(t) >= goal - 1e-12);
        // one percent less time falls short
        assert!(ln_value(t * LogScalar::from_f64(0.99)) < goal);
    }

    #[test]
    fn schedule_grows_by_omega2() {
        let ctx = TheoryContext::new(100_000, 0.01)
            .unwrap()
            .with_jstar(1)
            .unwrap();
        let mut prev: Option<LogScalar> = None;
        for j in 2..ctx.j0 {
            let e = schedule(j, &ctx).unwrap();
            let ScheduleTime::AfterTau0(t) = e.t else {
                panic!()
            };
            assert!(t >= e.t_hat.unwrap());
            if let Some(p) = prev {
                assert!(t.ln() >= p.ln() + ctx.omega2.ln() - 1e-9);
            }
            prev = Some(t);
        }
    }
}
