//! Checks of the closed forms: algebraic identities, asymptotic estimates
//! against exact values, the recurrence solutions, and the tail bound.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

use super::{trial_rng, ExperimentConfig, HarnessError, ReportRow, SuiteReport};
use crate::theory::{
    conc_bound, eta, hoeffding_bound, ln_superfactorial, rec1_lower, rec1_upper, superfactorial,
    xi, xi_ratio, zeta, EtaMode, LogScalar, SuperfactorialMode, TheoryContext,
};

/// Dimensions at which the parameter tower is checked.
pub const TOWER_GRID: [u64; 3] = [1_000, 10_000, 100_000];

fn log_rel(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1.0)
}

/// Identities and asymptotic estimates of the parameter tower.
pub fn identities_suite(cfg: &ExperimentConfig) -> Result<SuiteReport, HarnessError> {
    let mut out = SuiteReport::default();
    out.extend(zeta_xi_identity(cfg.eps)?);
    out.extend(asymptotic_estimates(cfg.eps)?);
    out.extend(tower_ratios(cfg.eps)?);
    Ok(out)
}

/// `ζ(j0-1, μ0) = ξ(j0-1, μ0)(μ0 - j0 + 1)/(j0² μ0)`.
pub fn zeta_xi_identity(eps: f64) -> Result<SuiteReport, HarnessError> {
    const EXP: &str = "identity";
    let mut out = SuiteReport::default();
    for n in TOWER_GRID {
        let ctx = TheoryContext::new(n, eps)?;
        let j = ctx.j0 - 1;
        let lhs = zeta(j, &ctx)?;
        let j0 = LogScalar::from_f64(ctx.j0 as f64);
        let rhs =
            xi(j, ctx.mu0, &ctx)? * (ctx.mu0 - LogScalar::from_f64(j as f64)) / (j0 * j0 * ctx.mu0);
        let residual = log_rel(rhs.ln(), lhs.ln());
        let nn = n as u32;
        out.rows
            .push(ReportRow::new(EXP, nn, "theory", "ln_zeta_j0m1", lhs.ln()));
        out.rows.push(ReportRow::new(
            EXP,
            nn,
            "theory",
            "zeta_xi_residual",
            residual,
        ));
        out.check(
            format!("n={n}: zeta/xi identity"),
            residual <= 1e-9,
            format!("log-relative residual {residual:.3e}"),
        );
    }
    Ok(out)
}

/// Worst log-relative error of the `η` asymptotics over `j <= jmax`.
fn eta_error(n: u64, ell: u64, jmax: u64) -> Result<f64, HarnessError> {
    let mut worst: f64 = 0.0;
    for j in 1..=jmax {
        let exact = eta(j, n, ell, EtaMode::Exact)?.ln();
        let asym = eta(j, n, ell, EtaMode::Asymptotic)?.ln();
        worst = worst.max(log_rel(asym, exact));
    }
    Ok(worst)
}

/// Worst log-relative error of the superfactorial ratio over `x <= xmax`.
fn superfactorial_error(ell: u64, xmax: u64) -> Result<f64, HarnessError> {
    let mut worst: f64 = 0.0;
    for x in 1..=xmax {
        let exact = ln_superfactorial(ell - x) - ln_superfactorial(ell);
        let asym = superfactorial(ell, SuperfactorialMode::AsymptoticRatio(x))?.ln();
        worst = worst.max(log_rel(asym, exact));
    }
    Ok(worst)
}

/// The `η` and superfactorial estimates at fixed points, and their error
/// shrinking along geometric grids with `l = n^a`.
pub fn asymptotic_estimates(eps: f64) -> Result<SuiteReport, HarnessError> {
    const EXP: &str = "asymptotics";
    let mut out = SuiteReport::default();

    let e = eta_error(10_000, 50, 10)?;
    out.rows
        .push(ReportRow::new(EXP, 10_000, "theory", "eta_error.l50", e));
    out.check(
        "eta estimate at n=1e4, l=50, j<=10",
        e <= 0.01,
        format!("{e:.3e}"),
    );
    let s = superfactorial_error(400, 10)?;
    out.rows.push(ReportRow::new(
        EXP,
        0,
        "theory",
        "superfactorial_error.l400",
        s,
    ));
    out.check(
        "superfactorial ratio at l=400, x<=10",
        s <= 0.01,
        format!("{s:.3e}"),
    );

    let a = 0.5 - eps;
    let mut eta_errors = Vec::new();
    let mut sf_errors = Vec::new();
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        // rounded down so that the estimate's guard l <= n^0.49 holds
        let ell = (n as f64).powf(a).floor() as u64;
        let e = eta_error(n, ell, 5)?;
        let s = superfactorial_error(ell, 5)?;
        out.rows
            .push(ReportRow::new(EXP, n as u32, "theory", "eta_error.j5", e));
        out.rows.push(ReportRow::new(
            EXP,
            n as u32,
            "theory",
            "superfactorial_error.x5",
            s,
        ));
        eta_errors.push(e);
        sf_errors.push(s);
    }
    let falling = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    out.check(
        "eta error decreasing in n",
        falling(&eta_errors),
        format!("{eta_errors:?}"),
    );
    out.check(
        "superfactorial error decreasing in n",
        falling(&sf_errors),
        format!("{sf_errors:?}"),
    );
    Ok(out)
}

/// `μ1/μ0 >= 1 - e^{-j0}`, `ξ(j0-1, μ0)/ξ(j0, μ0)` bounded and stable across
/// the grid, and `ξ(j0, μ0) ≈ n^b`.
pub fn tower_ratios(eps: f64) -> Result<SuiteReport, HarnessError> {
    const EXP: &str = "tower";
    let mut out = SuiteReport::default();
    let mut xi_ratios = Vec::new();
    for n in TOWER_GRID {
        let ctx = TheoryContext::new(n, eps)?;
        let nn = n as u32;
        let mu_ratio = (ctx.mu1 / ctx.mu0).to_f64();
        let floor = 1.0 - (-(ctx.j0 as f64)).exp();
        let ratio = xi_ratio(&ctx)?;
        let xi_top = xi(ctx.j0, ctx.mu0, &ctx)?;
        let scaled = (xi_top / LogScalar::from_f64(n as f64).powf(ctx.b)).to_f64();
        let zeta_last = zeta(ctx.j0 - 1, &ctx)?;
        for (metric, v) in [
            ("ell", ctx.ell as f64),
            ("j0", ctx.j0 as f64),
            ("ln_mu0", ctx.mu0.ln()),
            ("mu1_over_mu0", mu_ratio),
            ("xi_ratio", ratio),
            ("xi_j0_over_n_b", scaled),
            ("zeta_j0m1", zeta_last.to_f64()),
        ] {
            out.rows.push(ReportRow::new(EXP, nn, "theory", metric, v));
        }
        out.check(
            format!("n={n}: mu1/mu0 >= 1 - e^-j0"),
            mu_ratio >= floor,
            format!("{mu_ratio} vs {floor}"),
        );
        out.check(
            format!("n={n}: xi ratio in [1, 20]"),
            (1.0..=20.0).contains(&ratio),
            format!("{ratio:.4}"),
        );
        out.check(
            format!("n={n}: xi(j0)/n^b in [0.5, 2]"),
            (0.5..=2.0).contains(&scaled),
            format!("{scaled:.4e}"),
        );
        xi_ratios.push(ratio);
    }
    let hi = xi_ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = xi_ratios.iter().cloned().fold(f64::MAX, f64::min);
    out.check(
        "xi ratio stable across the grid within x2",
        hi <= 2.0 * lo,
        format!("{xi_ratios:.4?}"),
    );
    Ok(out)
}

fn small_rational<R: Rng>(rng: &mut R, max_num: i64) -> BigRational {
    BigRational::new(
        BigInt::from(rng.random_range(0..=max_num)),
        BigInt::from(rng.random_range(1..=12i64)),
    )
}

/// Iterates `x_{0,t} = α0 + t`, `x_{j,0} = α_j`,
/// `x_{j,t} = x_{j,t-1} + β_{j-1} x_{j-1,t-1}` exactly.
pub fn iterate_upper(
    alphas: &[BigRational],
    betas: &[BigRational],
    tmax: u64,
) -> Vec<Vec<BigRational>> {
    let jn = alphas.len();
    let mut x = vec![alphas.to_vec()];
    for t in 1..=tmax {
        let prev = &x[t as usize - 1];
        let mut row = Vec::with_capacity(jn);
        row.push(&alphas[0] + BigRational::from_integer(BigInt::from(t)));
        for j in 1..jn {
            row.push(&prev[j] + &betas[j - 1] * &prev[j - 1]);
        }
        x.push(row);
    }
    x
}

/// Same recurrence from `y_{j*,t} = α_{j*}` and `y_{j,0} = 0` above `j*`.
pub fn iterate_lower(
    alpha: &BigRational,
    betas: &[BigRational],
    jstar: usize,
    jn: usize,
    tmax: u64,
) -> Vec<Vec<BigRational>> {
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut first = vec![zero; jn];
    first[jstar] = alpha.clone();
    let mut y = vec![first];
    for t in 1..=tmax as usize {
        let prev = &y[t - 1];
        let mut row = prev.clone();
        for j in jstar + 1..jn {
            row[j] = &prev[j] + &betas[j - 1] * &prev[j - 1];
        }
        y.push(row);
    }
    y
}

/// Closed forms against exact iteration on random rational instances.
pub fn rec1_suite(cfg: &ExperimentConfig) -> Result<SuiteReport, HarnessError> {
    const EXP: &str = "rec1";
    const INSTANCES: u64 = 1000;
    let mut out = SuiteReport::default();
    let mut rng = trial_rng(cfg.master_seed, u64::MAX);
    let mut mismatches = 0u64;
    for _ in 0..INSTANCES {
        let j = rng.random_range(0..=5usize);
        let t = rng.random_range(0..=40u64);
        let alphas: Vec<BigRational> = (0..=j).map(|_| small_rational(&mut rng, 100)).collect();
        let betas: Vec<BigRational> = (0..j).map(|_| small_rational(&mut rng, 10)).collect();
        let x = iterate_upper(&alphas, &betas, t);
        mismatches += u64::from(rec1_upper(&alphas, &betas, t, j)? != x[t as usize][j]);

        let jstar = rng.random_range(0..=j);
        let y = iterate_lower(&alphas[jstar], &betas, jstar, j + 1, t);
        mismatches +=
            u64::from(rec1_lower(&alphas[jstar], &betas, t, j, jstar)? != y[t as usize][j]);
    }
    out.rows.push(
        ReportRow::new(EXP, 0, "aggregate", "mismatches", mismatches as f64)
            .with_provenance(INSTANCES, cfg.master_seed),
    );
    out.check(
        "closed forms equal exact iteration",
        mismatches == 0,
        format!("{mismatches} mismatches over {INSTANCES} instances"),
    );
    Ok(out)
}

/// Random `(N, E, C, t)` with `t <= NE`; summands are `C` times a
/// Bernoulli(`E/C`), so each lies in `[0, C]` with mean `E`.
pub fn conc_suite(cfg: &ExperimentConfig) -> Result<SuiteReport, HarnessError> {
    const EXP: &str = "conc";
    const SETTINGS: u64 = 20;
    const SUMS: u64 = 10_000;
    let mut out = SuiteReport::default();
    let mut all_below = true;
    let mut all_equiv = true;
    for s in 0..SETTINGS {
        let mut rng = trial_rng(cfg.master_seed, s);
        let n = rng.random_range(10..=200u64);
        let e = rng.random_range(0.05..1.0);
        // ratios C/E on both sides of 8
        let c = e * rng.random_range(1.0..16.0);
        let t = n as f64 * e * rng.random_range(0.05..=1.0);
        let p = e / c;
        let mean = n as f64 * e;
        let mut deviations = 0u64;
        for _ in 0..SUMS {
            let hits = (0..n).filter(|_| rng.random_bool(p)).count();
            deviations += u64::from((hits as f64 * c - mean).abs() >= t);
        }
        let freq = deviations as f64 / SUMS as f64;
        let bound = conc_bound(n, e, c, t)?;
        let hoeff = hoeffding_bound(n, c, t);
        let below = freq <= bound;
        let equiv = (bound < hoeff) == (c > 8.0 * e);
        all_below &= below;
        all_equiv &= equiv;
        let tag = format!("s{s}");
        for (metric, v) in [
            ("N", n as f64),
            ("E", e),
            ("C", c),
            ("t", t),
            ("frequency", freq),
            ("conc_bound", bound),
            ("hoeffding_bound", hoeff),
        ] {
            out.rows.push(
                ReportRow::new(EXP, 0, &tag, metric, v).with_provenance(SUMS, cfg.master_seed),
            );
        }
    }
    out.check("deviation frequency <= conc bound", all_below, "");
    out.check(
        "conc bound below Hoeffding exactly when C > 8E",
        all_equiv,
        "",
    );
    Ok(out)
}
