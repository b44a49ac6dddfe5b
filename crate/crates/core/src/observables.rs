//! Statistics measured on the cluster: path and neighbour fractions, level
//! crossing times, the stopping time `τ0`, the post-`τ0` series, and the shape
//! of the top of a finished cluster.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dla::{ClusterState, TrialRecord};
use crate::lattice::{full_mask, DescendingWalk, VertexMask};
use crate::theory::{binomial_exact, zeta, TheoryContext};

/// Largest codimension accepted by [`PhiMethod::BruteForce`].
pub const BRUTE_FORCE_MAX_CODIM: u32 = 8;
/// Largest codimension accepted by [`PhiMethod::ExactDp`]; the table has
/// `2^codim` entries.
pub const EXACT_DP_MAX_CODIM: u32 = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObservableError {
    #[error("the zero vertex has no down-neighbours")]
    ZeroVertex,
    #[error("{method} needs codimension <= {limit}, got {codim}")]
    MethodLimit {
        method: &'static str,
        codim: u32,
        limit: u32,
    },
    #[error("vertex of dimension {got} used on a cluster of dimension {expected}")]
    DimensionMismatch { expected: u32, got: u32 },
    #[error("no snapshot at time {0}")]
    MissingCheckpoint(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiMethod {
    ExactDp,
    BruteForce,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFraction {
    pub value: f64,
    pub method: PhiMethod,
    /// Paths hitting the cluster, out of all paths considered (every path for
    /// the exact methods, the samples for Monte Carlo).
    pub hits: u128,
    pub total: u128,
}

fn check_dim(c: &ClusterState, v: VertexMask) -> Result<(), ObservableError> {
    if v.dim() != c.dim() {
        return Err(ObservableError::DimensionMismatch {
            expected: c.dim(),
            got: v.dim(),
        });
    }
    Ok(())
}

/// Fraction of the down-neighbours of `v` that are unoccupied.
pub fn upsilon(c: &ClusterState, v: VertexMask) -> Result<f64, ObservableError> {
    check_dim(c, v)?;
    if v.is_zero() {
        return Err(ObservableError::ZeroVertex);
    }
    let down = v.down_neighbors();
    let free = down.iter().filter(|&&u| !c.is_occupied(u)).count();
    Ok(free as f64 / down.len() as f64)
}

/// Fraction of monotone paths from the top down to `v` that pass through an
/// occupied vertex other than `v`.
///
/// The Monte Carlo method draws from its own stream, keyed by its seed.
pub fn phi(
    c: &ClusterState,
    v: VertexMask,
    method: PhiMethod,
) -> Result<PathFraction, ObservableError> {
    check_dim(c, v)?;
    let codim = v.dim() - v.level();
    let limit = match method {
        PhiMethod::ExactDp => Some(("exact_dp", EXACT_DP_MAX_CODIM)),
        PhiMethod::BruteForce => Some(("brute_force", BRUTE_FORCE_MAX_CODIM)),
        PhiMethod::MonteCarlo { .. } => None,
    };
    if let Some((name, limit)) = limit {
        if codim > limit {
            return Err(ObservableError::MethodLimit {
                method: name,
                codim,
                limit,
            });
        }
    }
    let (hits, total) = match method {
        PhiMethod::ExactDp => {
            let total = factorial(codim);
            (total - avoiding_paths(c, v), total)
        }
        PhiMethod::BruteForce => brute_force(c, v),
        PhiMethod::MonteCarlo { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hits = (0..samples)
                .filter(|_| sampled_path_hits(c, v, &mut rng))
                .count();
            (hits as u128, u128::from(samples))
        }
    };
    Ok(PathFraction {
        value: if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        },
        method,
        hits,
        total,
    })
}

fn factorial(m: u32) -> u128 {
    (1..=u128::from(m)).product()
}

/// Bits of `v` that are zero, lowest first.
fn free_bits(v: VertexMask) -> Vec<u32> {
    let mut rest = full_mask(v.dim()) & !v.bits();
    let mut out = Vec::new();
    while rest != 0 {
        out.push(1u32 << rest.trailing_zeros());
        rest &= rest - 1;
    }
    out
}

/// Paths from the top to `v` that avoid every occupied vertex except `v`,
/// counted over the upset of `v`. Entry `s` of the table is the vertex `v`
/// plus the free bits selected by `s`, so up-neighbours have larger indices.
fn avoiding_paths(c: &ClusterState, v: VertexMask) -> u128 {
    let free = free_bits(v);
    let m = free.len();
    let cells = 1usize << m;
    let vertex = |s: usize| {
        let mut bits = v.bits();
        for (i, b) in free.iter().enumerate() {
            if s >> i & 1 == 1 {
                bits |= b;
            }
        }
        bits
    };
    let open = |bits: u32| bits == v.bits() || !c.is_occupied_bits(bits);
    let mut a = vec![0u128; cells];
    let top = cells - 1;
    a[top] = u128::from(open(vertex(top)));
    for s in (0..top).rev() {
        if !open(vertex(s)) {
            continue;
        }
        let mut rest = top & !s;
        let mut sum = 0;
        while rest != 0 {
            sum += a[s | 1 << rest.trailing_zeros()];
            rest &= rest - 1;
        }
        a[s] = sum;
    }
    a[0]
}

/// Visits every ordering of the free bits and follows the resulting path.
fn brute_force(c: &ClusterState, v: VertexMask) -> (u128, u128) {
    let mut order = free_bits(v);
    let top = full_mask(v.dim());
    let blocked = |bits: u32| bits != v.bits() && c.is_occupied_bits(bits);
    let mut hits = 0u128;
    let mut total = 0u128;
    permutations(&mut order, 0, &mut |perm| {
        total += 1;
        let mut cur = top;
        let mut hit = blocked(cur);
        for b in perm {
            cur &= !b;
            hit |= blocked(cur);
        }
        hits += u128::from(hit);
    });
    (hits, total)
}

fn permutations(items: &mut [u32], from: usize, visit: &mut impl FnMut(&[u32])) {
    if from + 1 >= items.len() {
        visit(items);
        return;
    }
    for i in from..items.len() {
        items.swap(from, i);
        permutations(items, from + 1, visit);
        items.swap(from, i);
    }
}

fn sampled_path_hits<R: Rng + ?Sized>(c: &ClusterState, v: VertexMask, rng: &mut R) -> bool {
    let top = VertexMask::from_raw(full_mask(v.dim()), v.dim());
    let blocked = |u: VertexMask| u != v && c.is_occupied(u);
    if blocked(top) {
        return true;
    }
    DescendingWalk::between(rng, top, v).any(blocked)
}

/// First time level `k` holds at least `rho · C(n, k)` vertices.
///
/// Exact when the trace carries its level history; otherwise the earliest
/// snapshot past the crossing.
pub fn first_rho_time(trace: &TrialRecord, k: u32, rho: f64) -> Option<u64> {
    let k = k as usize;
    let size = binomial_exact(u64::from(trace.n), k as u64);
    let need = rho * size.to_string().parse::<f64>().expect("integer parses");
    let reached = |count: u64| count as f64 >= need;
    if !trace.level_history.is_empty() || trace.snapshots.is_empty() {
        let mut count = *trace.initial_level_counts.get(k)?;
        if reached(count) {
            return Some(trace.start_time);
        }
        for (i, &level) in trace.level_history.iter().enumerate() {
            if level as usize == k {
                count += 1;
                if reached(count) {
                    return Some(trace.start_time + i as u64 + 1);
                }
            }
        }
        return None;
    }
    trace
        .snapshots
        .iter()
        .find(|s| reached(s.level_counts[k]))
        .map(|s| s.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tau0 {
    pub step: u64,
    pub jstar: u64,
}

/// Runs `c` until some offset `j < j0` has `|O_{k+j}| >= ζ(j, μ0)` and
/// returns that time with the smallest such offset; `None` if the cluster
/// terminates first, after which its level counts no longer move.
///
/// Offsets above `l` name no level and are skipped.
pub fn stopping_time_tau0<R: Rng + ?Sized>(
    c: &mut ClusterState,
    ctx: &TheoryContext,
    rng: &mut R,
) -> Option<Tau0> {
    assert_eq!(
        u64::from(c.dim()),
        ctx.n,
        "context built for another dimension"
    );
    let thresholds: Vec<(u64, f64)> = (0..ctx.j0)
        .filter(|&j| ctx.level_exists(j))
        .map(|j| (j, zeta(j, ctx).expect("level exists").ln()))
        .collect();
    let fired = |c: &ClusterState| {
        thresholds.iter().find_map(|&(j, ln_zeta)| {
            let count = c.level_counts()[(ctx.k + j) as usize];
            ((count as f64).ln() >= ln_zeta).then_some(j)
        })
    };
    loop {
        if let Some(jstar) = fired(c) {
            return Some(Tau0 {
                step: c.time(),
                jstar,
            });
        }
        if c.is_terminated() {
            return None;
        }
        c.deposit(rng);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// Offset above the base level `k`.
    pub j: u64,
    /// Steps since `τ0`.
    pub t: u64,
    pub x: u64,
    pub y: u128,
}

/// `X_{j,t} = |O_{k+j}|` and `Y_{j,t} = Θ² + Σ_{r >= j*+j} X_{r,t}` at
/// `τ0 + t` for each checkpoint `t` and each offset `0..=l`.
pub fn xy_series(
    trace: &TrialRecord,
    ctx: &TheoryContext,
    tau0: u64,
    jstar: u64,
    checkpoints: &[u64],
) -> Result<Vec<SeriesPoint>, ObservableError> {
    let mut out = Vec::new();
    for &t in checkpoints {
        let snap = trace
            .snapshot_at(tau0 + t)
            .ok_or(ObservableError::MissingCheckpoint(tau0 + t))?;
        let x: Vec<u64> = (0..=ctx.ell)
            .map(|j| snap.level_counts[(ctx.k + j) as usize])
            .collect();
        let theta_sq = u128::from(snap.theta).pow(2);
        for j in 0..=ctx.ell {
            let tail: u128 = x
                .iter()
                .skip((jstar + j) as usize)
                .map(|&c| u128::from(c))
                .sum();
            out.push(SeriesPoint {
                j,
                t,
                x: x[j as usize],
                y: theta_sq + tail,
            });
        }
    }
    Ok(out)
}

/// Highest non-empty level.
pub fn height(c: &ClusterState) -> u32 {
    c.level_counts()
        .iter()
        .rposition(|&k| k > 0)
        .expect("level 0 is always occupied") as u32
}

/// Number of consecutive top levels, from `n` down to level 1, that each hold
/// exactly one vertex, with each one adjacent to the one above it.
pub fn isolated_path_length(c: &ClusterState) -> u32 {
    let n = c.dim();
    let counts = c.level_counts();
    let top = VertexMask::from_raw(full_mask(n), n);
    if !c.is_occupied(top) {
        return 0;
    }
    let mut length = 1;
    let mut cur = top;
    while cur.level() > 1 && counts[cur.level() as usize - 1] == 1 {
        match cur.down_neighbors().into_iter().find(|&u| c.is_occupied(u)) {
            Some(next) => {
                cur = next;
                length += 1;
            }
            None => break,
        }
    }
    length
}
