//! Acceptance checks. Each test prints one `PASS`/`FAIL` line and then
//! asserts it, so `cargo test --test acceptance -- --nocapture` doubles as
//! the acceptance report.

use std::collections::{BTreeMap, VecDeque};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::Deserialize;

use hdla::dla::{run, ClusterState, DepositOutcome, RunOptions, StopRule};
use hdla::harness::{map_trials, trial_rng};
use hdla::observables::{isolated_path_length, phi, upsilon, PhiMethod};
use hdla::theory::{
    conc_bound, eta, hoeffding_bound, rec1_lower, rec1_upper, superfactorial, xi, xi_ratio, zeta,
    EtaMode, LogScalar, SuperfactorialMode, TheoryContext,
};
use hdla::VertexMask;

const SEED: u64 = 0xD1A;

fn verdict(criterion: u32, title: &str, passed: bool, detail: String, elapsed: Duration) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion} {status}: {title} ({detail}; {:.2}s)",
        elapsed.as_secs_f64()
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

/// Exact law of `T_end` by enumerating every walk order at every step.
fn exact_tend_law(n: u32) -> BTreeMap<u64, f64> {
    fn perms(n: u32) -> Vec<Vec<u32>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    fn go(
        n: u32,
        occupied: u64,
        t: u64,
        p: f64,
        orders: &[Vec<u32>],
        law: &mut BTreeMap<u64, f64>,
    ) {
        let top = (1u32 << n) - 1;
        for order in orders {
            let mut cur = top;
            for &c in order {
                let next = cur & !(1 << c);
                if occupied >> next & 1 == 1 {
                    break;
                }
                cur = next;
            }
            let q = p / orders.len() as f64;
            if cur == top {
                *law.entry(t + 1).or_default() += q;
            } else {
                go(n, occupied | 1 << cur, t + 1, q, orders, law);
            }
        }
    }
    let mut law = BTreeMap::new();
    go(n, 1, 0, 1.0, &perms(n), &mut law);
    law
}

#[test]
fn criterion_1_two_cube_law() {
    let start = Instant::now();
    let law = exact_tend_law(2);
    let p2 = law[&2];
    let mean: f64 = law.iter().map(|(t, p)| *t as f64 * p).sum();
    let tends = map_trials(100_000, SEED, 0, |_, rng| {
        let mut c = ClusterState::new(2).unwrap();
        run(
            &mut c,
            rng,
            StopRule::UntilTermination,
            &RunOptions::default(),
        )
        .t_end
        .unwrap()
    });
    let p_hat = tends.iter().filter(|&&t| t == 2).count() as f64 / 1e5;
    let mean_hat = tends.iter().sum::<u64>() as f64 / 1e5;
    let elapsed = start.elapsed();
    let passed = (p2 - 0.5).abs() < 1e-15
        && (mean - 2.5).abs() < 1e-15
        && (p_hat - p2).abs() <= 0.01
        && (mean_hat - mean).abs() <= 0.01
        && elapsed < Duration::from_secs(5);
    verdict(
        1,
        "n=2 law of T_end",
        passed,
        format!("exact P(2)={p2}, E={mean}; Monte Carlo P(2)={p_hat:.4}, E={mean_hat:.4}"),
        elapsed,
    );
}

#[test]
fn criterion_2_phi_oracles() {
    let start = Instant::now();
    let mut rng = trial_rng(SEED, 2);
    let mut worst_z: f64 = 0.0;
    let mut dp_mismatch = 0;
    for i in 0..100u64 {
        let n = rng.random_range(3..=8u32);
        let mut c = ClusterState::new(n).unwrap();
        if i % 2 == 0 {
            let steps = rng.random_range(0..=(1u64 << n) / 3);
            run(
                &mut c,
                &mut rng,
                StopRule::StepBudget(steps),
                &RunOptions::default(),
            );
        } else {
            let verts: Vec<u32> = (1..1u32 << n).filter(|_| rng.random_bool(0.3)).collect();
            c = ClusterState::from_vertices(n, &verts).unwrap();
        }
        let v = VertexMask::new(rng.random_range(0..1u32 << n), n).unwrap();
        let dp = phi(&c, v, PhiMethod::ExactDp).unwrap();
        let bf = phi(&c, v, PhiMethod::BruteForce).unwrap();
        let mc = phi(
            &c,
            v,
            PhiMethod::MonteCarlo {
                samples: 100_000,
                seed: i,
            },
        )
        .unwrap();
        dp_mismatch += usize::from((dp.hits, dp.total) != (bf.hits, bf.total));
        let p = dp.value;
        let sd = (p * (1.0 - p) / 1e5).sqrt();
        let z = if sd == 0.0 {
            if mc.value == p {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (mc.value - p).abs() / sd
        };
        worst_z = worst_z.max(z);
    }
    let elapsed = start.elapsed();
    let passed = dp_mismatch == 0 && worst_z <= 4.0 && elapsed < Duration::from_secs(30);
    verdict(
        2,
        "path fraction: dynamic programme, enumeration, sampling",
        passed,
        format!("{dp_mismatch} exact mismatches, worst Monte Carlo deviation {worst_z:.2} sd"),
        elapsed,
    );
}

#[test]
fn criterion_3_zeta_xi_identity() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [1_000u64, 10_000, 100_000] {
        let ctx = TheoryContext::new(n, 0.01).unwrap();
        let j0 = ctx.j0;
        let lhs = zeta(j0 - 1, &ctx).unwrap();
        let jf = LogScalar::from_f64(j0 as f64);
        let rhs = xi(j0 - 1, ctx.mu0, &ctx).unwrap()
            * (ctx.mu0 - LogScalar::from_f64((j0 - 1) as f64))
            / (jf * jf * ctx.mu0);
        worst = worst.max((lhs.ln() - rhs.ln()).abs() / lhs.ln().abs().max(1.0));
    }
    verdict(
        3,
        "zeta(j0-1) against xi(j0-1)",
        worst <= 1e-9,
        format!("worst log-relative residual {worst:.3e}"),
        start.elapsed(),
    );
}

/// `ln C(n, k)` as a plain sum of logs.
fn ln_choose(n: u64, k: u64) -> f64 {
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

fn ln_fact(m: u64) -> f64 {
    (2..=m).map(|r| (r as f64).ln()).sum()
}

#[test]
fn criterion_4_asymptotics_against_exact() {
    let start = Instant::now();
    let rel = |a: f64, e: f64| (a - e).abs() / e.abs();
    let eta_err = |n: u64, ell: u64, jmax: u64| {
        (1..=jmax)
            .map(|j| {
                let exact: f64 = (0..j).map(|s| ln_choose(n, ell - s)).sum();
                rel(eta(j, n, ell, EtaMode::Asymptotic).unwrap().ln(), exact)
            })
            .fold(0.0, f64::max)
    };
    // ln φ(l-x) - ln φ(l) = -Σ_{r=l-x+1}^{l} ln r!
    let sf_err = |ell: u64, xmax: u64| {
        (1..=xmax)
            .map(|x| {
                let exact: f64 = -(ell - x + 1..=ell).map(ln_fact).sum::<f64>();
                rel(
                    superfactorial(ell, SuperfactorialMode::AsymptoticRatio(x))
                        .unwrap()
                        .ln(),
                    exact,
                )
            })
            .fold(0.0, f64::max)
    };
    let e = eta_err(10_000, 50, 10);
    let s = sf_err(400, 10);
    let grid = [1_000u64, 10_000, 100_000, 1_000_000];
    let eta_grid: Vec<f64> = grid
        .iter()
        .map(|&n| eta_err(n, (n as f64).powf(0.49).floor() as u64, 5))
        .collect();
    let sf_grid: Vec<f64> = grid
        .iter()
        .map(|&n| sf_err((n as f64).powf(0.49).floor() as u64, 5))
        .collect();
    let falling = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed();
    let passed = e <= 0.01
        && s <= 0.01
        && falling(&eta_grid)
        && falling(&sf_grid)
        && elapsed < Duration::from_secs(10);
    verdict(
        4,
        "eta and superfactorial estimates",
        passed,
        format!("eta {e:.2e}, superfactorial {s:.2e}, grid eta {eta_grid:?}, grid superfactorial {sf_grid:?}"),
        elapsed,
    );
}

#[test]
fn criterion_5_tower_ratios() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut ratios = Vec::new();
    for n in [1_000u64, 10_000, 100_000] {
        let ctx = TheoryContext::new(n, 0.01).unwrap();
        let mu = (ctx.mu1 / ctx.mu0).to_f64();
        let floor = 1.0 - (-(ctx.j0 as f64)).exp();
        if mu < floor {
            failures.push(format!("n={n}: mu1/mu0 = {mu:.10} < {floor:.10}"));
        }
        let r = xi_ratio(&ctx).unwrap();
        if !(1.0..=20.0).contains(&r) {
            failures.push(format!("n={n}: xi ratio {r:.3e}"));
        }
        ratios.push(r);
        let xb = xi(ctx.j0, ctx.mu0, &ctx).unwrap() / LogScalar::from_f64(n as f64).powf(ctx.b);
        let xb = xb.to_f64();
        if !(0.5..=2.0).contains(&xb) {
            failures.push(format!("n={n}: xi(j0)/n^b = {xb:.3e}"));
        }
    }
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    if hi > 2.0 * lo {
        failures.push(format!("xi ratio spread {:.3e}", hi / lo));
    }
    verdict(
        5,
        "mu1/mu0 and xi ratios",
        failures.is_empty(),
        if failures.is_empty() {
            "all within range".into()
        } else {
            failures.join("; ")
        },
        start.elapsed(),
    );
}

fn rational<R: Rng>(rng: &mut R, max: i64) -> BigRational {
    BigRational::new(
        BigInt::from(rng.random_range(0..=max)),
        BigInt::from(rng.random_range(1..=9i64)),
    )
}

#[test]
fn criterion_6_recurrence_closed_forms() {
    let start = Instant::now();
    let mut rng = trial_rng(SEED, 6);
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut mismatches = 0;
    for _ in 0..1000 {
        let j = rng.random_range(0..=5usize);
        let t = rng.random_range(0..=40u64);
        let alphas: Vec<BigRational> = (0..=j).map(|_| rational(&mut rng, 50)).collect();
        let betas: Vec<BigRational> = (0..j).map(|_| rational(&mut rng, 5)).collect();
        let jstar = rng.random_range(0..=j);
        // x and y at equality, one time step at a time
        let mut x = alphas.clone();
        let mut y = vec![zero.clone(); j + 1];
        y[jstar] = alphas[jstar].clone();
        for s in 1..=t {
            let prev_x = x.clone();
            let prev_y = y.clone();
            x[0] = &alphas[0] + BigRational::from_integer(BigInt::from(s));
            for i in 1..=j {
                x[i] = &prev_x[i] + &betas[i - 1] * &prev_x[i - 1];
                if i > jstar {
                    y[i] = &prev_y[i] + &betas[i - 1] * &prev_y[i - 1];
                }
            }
        }
        mismatches += usize::from(rec1_upper(&alphas, &betas, t, j).unwrap() != x[j]);
        mismatches += usize::from(rec1_lower(&alphas[jstar], &betas, t, j, jstar).unwrap() != y[j]);
    }
    let elapsed = start.elapsed();
    verdict(
        6,
        "recurrence closed forms in exact arithmetic",
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatches over 1000 instances"),
        elapsed,
    );
}

#[test]
fn criterion_7_concentration() {
    let start = Instant::now();
    let mut rng = trial_rng(SEED, 7);
    let mut violations = Vec::new();
    let mut mismatched = 0;
    for s in 0..20 {
        let n = rng.random_range(5..=150u64);
        let e = rng.random_range(0.05..2.0);
        let c = e * rng.random_range(1.0..20.0);
        let t = n as f64 * e * rng.random_range(0.1..=1.0);
        // uniform on [0, 2E] when that fits in [0, C], else C·Bernoulli(E/C)
        let uniform = 2.0 * e <= c;
        let mut hits = 0;
        for _ in 0..10_000 {
            let sum: f64 = (0..n)
                .map(|_| {
                    if uniform {
                        rng.random_range(0.0..2.0 * e)
                    } else if rng.random_bool(e / c) {
                        c
                    } else {
                        0.0
                    }
                })
                .sum();
            hits += usize::from((sum - n as f64 * e).abs() >= t);
        }
        let freq = hits as f64 / 1e4;
        let bound = conc_bound(n, e, c, t).unwrap();
        if freq > bound {
            violations.push(format!("setting {s}: {freq} > {bound:.4}"));
        }
        mismatched += usize::from((bound < hoeffding_bound(n, c, t)) != (c > 8.0 * e));
    }
    let elapsed = start.elapsed();
    verdict(
        7,
        "concentration bound",
        violations.is_empty() && mismatched == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{} frequency violations {violations:?}, {mismatched} ordering mismatches",
            violations.len()
        ),
        elapsed,
    );
}

fn connected(c: &ClusterState) -> bool {
    let n = c.dim();
    let mut seen = vec![false; 1 << n];
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    let mut reached = 1u64;
    while let Some(u) = queue.pop_front() {
        for b in 0..n {
            let w = u ^ (1 << b);
            if !seen[w as usize] && c.is_occupied(VertexMask::new(w, n).unwrap()) {
                seen[w as usize] = true;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    reached == c.occupied_count()
}

#[test]
fn criterion_8_process_invariants() {
    let start = Instant::now();
    const N: u32 = 12;
    let failures = map_trials(100, SEED, 0, |trial, rng| {
        let mut c = ClusterState::new(N).unwrap();
        let mut sample = trial_rng(SEED ^ 8, trial);
        let probes: Vec<VertexMask> = (0..5)
            .map(|_| loop {
                let v = sample.random_range(1..1u32 << N);
                // codimension at most 8 keeps the exact count cheap
                if v.count_ones() >= 4 {
                    break VertexMask::new(v, N).unwrap();
                }
            })
            .collect();
        let mut last: Vec<(f64, f64)> = probes.iter().map(|_| (0.0, 1.0)).collect();
        let mut bad = Vec::new();
        while !c.is_terminated() {
            match c.deposit(rng) {
                DepositOutcome::Deposited(v) => {
                    let attached = v.down_neighbors().iter().any(|&u| c.is_occupied(u));
                    if !attached {
                        bad.push(format!("t={}: {v} not attached", c.time()));
                    }
                }
                DepositOutcome::Overflow => bad.push("overflow before termination".into()),
            }
            if c.occupied_count() != c.time() + 1 {
                bad.push(format!("t={}: |C| = {}", c.time(), c.occupied_count()));
            }
            for (v, prev) in probes.iter().zip(last.iter_mut()) {
                let p = phi(&c, *v, PhiMethod::ExactDp).unwrap().value;
                let u = upsilon(&c, *v).unwrap();
                if p < prev.0 || u > prev.1 {
                    bad.push(format!("t={}: monotonicity at {v}", c.time()));
                }
                *prev = (p, u);
            }
            if c.time().is_multiple_of(256) && !connected(&c) {
                bad.push(format!("t={}: disconnected", c.time()));
            }
        }
        if !connected(&c) {
            bad.push("disconnected at termination".into());
        }
        bad
    });
    let failures: Vec<String> = failures.into_iter().flatten().collect();
    let elapsed = start.elapsed();
    verdict(
        8,
        "process invariants at n=12",
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{} violations {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
        elapsed,
    );
}

#[derive(Deserialize)]
struct GridValue {
    n: u32,
    value: f64,
}

#[derive(Deserialize)]
struct Pilot {
    seed: u64,
    fullness_l1_n20: f64,
    path_means: Vec<GridValue>,
    tend_ratios: Vec<GridValue>,
}

#[test]
fn criterion_9_empirical_shadows() {
    let start = Instant::now();
    let pilot: Pilot = serde_json::from_str(include_str!("golden/pilot.json")).unwrap();
    assert_eq!(pilot.seed, SEED);

    let finals = |n: u32, trials: u64| {
        map_trials(trials, SEED, 0, move |_, rng| {
            let mut c = ClusterState::new(n).unwrap();
            let r = run(
                &mut c,
                rng,
                StopRule::UntilTermination,
                &RunOptions::default(),
            );
            (
                r.final_level_counts[1],
                r.t_end.unwrap(),
                isolated_path_length(&c),
            )
        })
    };
    let l1 = finals(20, 100).iter().filter(|r| r.0 == 20).count() as f64 / 100.0;

    let mut means = Vec::new();
    for n in [12, 16, 20, 24] {
        let runs = finals(n, 200);
        means.push(runs.iter().map(|r| f64::from(r.2)).sum::<f64>() / 200.0);
    }
    let ratio = |n: u32| {
        let runs = finals(n, 100);
        runs.iter().map(|r| r.1 as f64).sum::<f64>() / 100.0 / (1u64 << n) as f64
    };
    let (r16, r22) = (ratio(16), ratio(22));
    let elapsed = start.elapsed();

    let golden_path: Vec<f64> = pilot.path_means.iter().map(|g| g.value).collect();
    let golden_ratio = |n: u32| pilot.tend_ratios.iter().find(|g| g.n == n).unwrap().value;
    let passed = l1 >= pilot.fullness_l1_n20 - 0.05
        && means.windows(2).all(|w| w[1] >= w[0])
        && r22 < r16
        && elapsed < Duration::from_secs(600);
    verdict(
        9,
        "fullness, path length and T_end trends",
        passed,
        format!(
            "L1 full {l1} (pilot {}); mean path {means:?} (pilot {golden_path:?}); T_end/2^n n=16 {r16:.5}, n=22 {r22:.5} (pilot {:.5}, {:.5})",
            pilot.fullness_l1_n20,
            golden_ratio(16),
            golden_ratio(22)
        ),
        elapsed,
    );
}
