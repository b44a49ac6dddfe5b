//! Fill times of low levels, the vacancy bound for middle levels, tail bounds
//! for bounded sums, and the closed forms solving the occupancy recurrences.

use std::f64::consts::E;

use num_traits::{FromPrimitive, Num};

use super::combinatorics::ln_binomial;
use super::TheoryError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauK {
    /// `τ_{k,ε} = (ε/4) C(n, k+1)`.
    pub tau: f64,
    /// `ω_{k,ε} = (ε/4)(n-k)/(k+1)`, so that `τ = ω C(n, k)`.
    pub omega: f64,
}

pub fn tau_k_eps(n: u64, k: u64, eps: f64) -> Result<TauK, TheoryError> {
    if k >= n {
        return Err(TheoryError::OutOfRange(format!(
            "level k = {k} must be below n = {n}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(TheoryError::OutOfRange(format!(
            "eps = {eps} not in (0, 1)"
        )));
    }
    Ok(TauK {
        tau: eps / 4.0 * ln_binomial(n, k + 1).exp(),
        omega: eps / 4.0 * (n - k) as f64 / (k + 1) as f64,
    })
}

fn check_level(n: u64, k: u64) -> Result<(), TheoryError> {
    if k == 0 || k >= n {
        return Err(TheoryError::OutOfRange(format!(
            "need 1 <= k < n (n = {n}, k = {k})"
        )));
    }
    Ok(())
}

/// `ρ = max(1 - ((k+1)/en)^100, 1 - (1/10e)^10)`.
pub fn notall_rho(n: u64, k: u64) -> Result<f64, TheoryError> {
    check_level(n, k)?;
    let near = ((k + 1) as f64 / (E * n as f64)).powf(100.0);
    let far = (1.0 / (10.0 * E)).powf(10.0);
    Ok((1.0 - near).max(1.0 - far))
}

/// Guaranteed vacant fraction of level `k`: `((1-ρ)/2) e^{-10n/9k}`.
///
/// `1 - ρ` is formed as the smaller of the two powers so it keeps full
/// precision when it is far below machine epsilon.
pub fn notall_bound(n: u64, k: u64) -> Result<f64, TheoryError> {
    check_level(n, k)?;
    let near = ((k + 1) as f64 / (E * n as f64)).powf(100.0);
    let far = (1.0 / (10.0 * E)).powf(10.0);
    Ok(near.min(far) / 2.0 * (-10.0 * n as f64 / (9.0 * k as f64)).exp())
}

/// Natural log of [`notall_bound`], evaluated entirely in log space.
pub fn notall_bound_ln(n: u64, k: u64) -> Result<f64, TheoryError> {
    check_level(n, k)?;
    let near = 100.0 * ((k + 1) as f64 / n as f64).ln() - 100.0;
    let far = -10.0 * (10f64.ln() + 1.0);
    Ok(near.min(far) - std::f64::consts::LN_2 - 10.0 * n as f64 / (9.0 * k as f64))
}

/// Two-sided tail bound `2 exp(-t²/(4NEC))` for a sum of `N` independent
/// variables in `[0, C]` with means at most `E`, valid for `t <= NE`.
pub fn conc_bound(n: u64, e: f64, c: f64, t: f64) -> Result<f64, TheoryError> {
    if n == 0 || !(e > 0.0) || !(c > 0.0) {
        return Err(TheoryError::OutOfRange(format!(
            "need N >= 1, E > 0, C > 0 (N = {n}, E = {e}, C = {c})"
        )));
    }
    let nf = n as f64;
    if !(t >= 0.0) || t > nf * e {
        return Err(TheoryError::OutOfRange(format!(
            "need 0 <= t <= NE (t = {t}, NE = {})",
            nf * e
        )));
    }
    Ok(2.0 * (-t * t / (4.0 * nf * e * c)).exp())
}

/// The same tail without the `t <= NE` restriction:
/// `2 exp(-(t²/2)/(NEC + Ct))`.
pub fn conc_bound_unrestricted(n: u64, e: f64, c: f64, t: f64) -> f64 {
    let nf = n as f64;
    2.0 * (-(t * t / 2.0) / (nf * e * c + c * t)).exp()
}

/// Hoeffding's two-sided bound `2 exp(-2t²/(NC²))`.
pub fn hoeffding_bound(n: u64, c: f64, t: f64) -> f64 {
    2.0 * (-2.0 * t * t / (n as f64 * c * c)).exp()
}

/// One-sided Bernstein tail `exp(-t²/(2(V + Ct)))`.
pub fn bernstein_tail(v: f64, c: f64, t: f64) -> f64 {
    (-t * t / (2.0 * (v + c * t))).exp()
}

/// `C(t, i)` built incrementally in the target number type.
fn binomials_up_to<T: Clone + Num + FromPrimitive>(t: u64, top: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(top + 1);
    let mut cur = T::one();
    out.push(cur.clone());
    for i in 1..=top as u64 {
        if i > t {
            cur = T::zero();
        } else {
            cur = cur * T::from_u64(t - i + 1).unwrap() / T::from_u64(i).unwrap();
        }
        out.push(cur.clone());
    }
    out
}

fn check_betas<T: Num + PartialOrd>(betas: &[T]) -> Result<(), TheoryError> {
    match betas.iter().position(|b| *b < T::zero()) {
        Some(s) => Err(TheoryError::NegativeBeta(s)),
        None => Ok(()),
    }
}

/// Upper closed form for `x_{j,t}` when `x_{0,t} <= α0 + t`, `x_{j,0} <= αj`
/// and `x_{j,t} - x_{j,t-1} <= β_{j-1} x_{j-1,t-1}`:
///
/// `Σ_{i=0}^{j+1} α_{j-i} C(t, i) Π_{s=j-i}^{j-1} β_s` with `α_{-1} = β_{-1} = 1`.
///
/// `alphas` holds `α_0..=α_j` and `betas` holds at least `β_0..β_{j-1}`.
pub fn rec1_upper<T>(alphas: &[T], betas: &[T], t: u64, j: usize) -> Result<T, TheoryError>
where
    T: Clone + Num + PartialOrd + FromPrimitive,
{
    if alphas.len() <= j || betas.len() < j {
        return Err(TheoryError::OutOfRange(format!(
            "need alpha_0..=alpha_{j} and beta_0..beta_{j} (got {} and {})",
            alphas.len(),
            betas.len()
        )));
    }
    check_betas(&betas[..j])?;
    let binom: Vec<T> = binomials_up_to(t, j + 1);
    let alpha = |idx: isize| {
        if idx < 0 {
            T::one()
        } else {
            alphas[idx as usize].clone()
        }
    };
    let mut total = T::zero();
    // running product Π_{s=j-i}^{j-1} β_s, empty for i = 0
    let mut prod = T::one();
    #[allow(clippy::needless_range_loop)]
    for i in 0..=j + 1 {
        if i > 0 {
            let s = j as isize - i as isize;
            if s >= 0 {
                prod = prod * betas[s as usize].clone();
            }
        }
        total = total + alpha(j as isize - i as isize) * binom[i].clone() * prod.clone();
    }
    Ok(total)
}

/// Lower closed form `α_{j*} C(t, j - j*) Π_{s=j*}^{j-1} β_s` for `y_{j,t}`
/// when `y_{j*,t} >= α_{j*}`, `y_{j,0} >= 0` and
/// `y_{j,t} - y_{j,t-1} >= β_{j-1} y_{j-1,t-1}`.
pub fn rec1_lower<T>(
    alpha_jstar: &T,
    betas: &[T],
    t: u64,
    j: usize,
    jstar: usize,
) -> Result<T, TheoryError>
where
    T: Clone + Num + PartialOrd + FromPrimitive,
{
    if j < jstar || betas.len() < j {
        return Err(TheoryError::OutOfRange(format!(
            "need j >= j* and beta_0..beta_{j} (j = {j}, j* = {jstar}, got {})",
            betas.len()
        )));
    }
    check_betas(&betas[jstar..j])?;
    let binom: Vec<T> = binomials_up_to(t, j - jstar);
    let prod = betas[jstar..j]
        .iter()
        .cloned()
        .fold(T::one(), |acc, b| acc * b);
    Ok(alpha_jstar.clone() * binom[j - jstar].clone() * prod)
}
