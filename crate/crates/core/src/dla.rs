//! The aggregation process: particles walk down from the top vertex and stick
//! at the last vertex before the first occupied one.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{full_mask, DescendingWalk, VertexMask};

/// Default cap on the dimension: `2^30` cells is 128 MiB of occupancy bits.
pub const DEFAULT_MAX_DIMENSION: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DlaError {
    #[error("dimension {n} outside 1..={cap}")]
    DimensionOutOfRange { n: u32, cap: u32 },
}

/// Occupancy of every vertex of `{0,1}^n` plus the bookkeeping needed by the
/// observables.
#[derive(Clone)]
pub struct ClusterState {
    n: u32,
    occupied: Vec<u64>,
    level_counts: Vec<u64>,
    occupied_total: u64,
    t: u64,
    terminated_at: Option<u64>,
    theta: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepositOutcome {
    Deposited(VertexMask),
    /// The cluster already holds the top vertex; the particle only counts
    /// towards the overflow counter.
    Overflow,
}

impl ClusterState {
    pub fn new(n: u32) -> Result<Self, DlaError> {
        Self::with_cap(n, DEFAULT_MAX_DIMENSION)
    }

    pub fn with_cap(n: u32, cap: u32) -> Result<Self, DlaError> {
        let cap = cap.min(crate::lattice::MAX_DIMENSION);
        if n == 0 || n > cap {
            return Err(DlaError::DimensionOutOfRange { n, cap });
        }
        let cells = 1usize << n;
        let mut occupied = vec![0u64; cells.div_ceil(64)];
        occupied[0] = 1;
        let mut level_counts = vec![0u64; n as usize + 1];
        level_counts[0] = 1;
        Ok(Self {
            n,
            occupied,
            level_counts,
            occupied_total: 1,
            t: 0,
            terminated_at: None,
            theta: 0,
        })
    }

    /// Builds a state holding `0` plus the given vertices, at `t` equal to the
    /// number of extra vertices. Intended for tests and hand-traced setups.
    pub fn from_vertices(n: u32, vertices: &[u32]) -> Result<Self, DlaError> {
        let mut c = Self::new(n)?;
        for &bits in vertices {
            let bits = bits & full_mask(n);
            if !c.is_occupied_bits(bits) {
                c.occupy(bits);
                c.t += 1;
                if bits == full_mask(n) {
                    c.terminated_at = Some(c.t);
                }
            }
        }
        Ok(c)
    }

    #[inline]
    pub fn dim(&self) -> u32 {
        self.n
    }

    /// Particles processed so far, overflow included.
    #[inline]
    pub fn time(&self) -> u64 {
        self.t
    }

    #[inline]
    pub fn terminated_at(&self) -> Option<u64> {
        self.terminated_at
    }

    #[inline]
    pub fn is_terminated(&self) -> bool {
        self.terminated_at.is_some()
    }

    /// Particles that arrived after termination.
    #[inline]
    pub fn theta(&self) -> u64 {
        self.theta
    }

    #[inline]
    pub fn level_counts(&self) -> &[u64] {
        &self.level_counts
    }

    #[inline]
    pub fn occupied_count(&self) -> u64 {
        self.occupied_total
    }

    #[inline]
    pub fn is_occupied(&self, v: VertexMask) -> bool {
        debug_assert_eq!(v.dim(), self.n);
        self.is_occupied_bits(v.bits())
    }

    #[inline]
    pub(crate) fn is_occupied_bits(&self, bits: u32) -> bool {
        let i = bits as usize;
        self.occupied[i >> 6] >> (i & 63) & 1 == 1
    }

    /// All occupied vertices in increasing mask order.
    pub fn occupied_vertices(&self) -> impl Iterator<Item = VertexMask> + '_ {
        let n = self.n;
        self.occupied
            .iter()
            .enumerate()
            .flat_map(move |(w, &word)| {
                let mut rest = word;
                std::iter::from_fn(move || {
                    if rest == 0 {
                        return None;
                    }
                    let b = rest.trailing_zeros();
                    rest &= rest - 1;
                    Some(VertexMask::from_raw((w as u32) << 6 | b, n))
                })
            })
    }

    fn occupy(&mut self, bits: u32) {
        let i = bits as usize;
        self.occupied[i >> 6] |= 1 << (i & 63);
        self.level_counts[bits.count_ones() as usize] += 1;
        self.occupied_total += 1;
    }

    /// Sends one particle down from the top vertex.
    pub fn deposit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DepositOutcome {
        let top = full_mask(self.n);
        self.t += 1;
        if self.is_occupied_bits(top) {
            self.theta += 1;
            return DepositOutcome::Overflow;
        }
        let mut last = top;
        for next in DescendingWalk::from_top(rng, self.n) {
            if self.is_occupied_bits(next.bits()) {
                break;
            }
            last = next.bits();
        }
        // the walk always ends at the occupied zero vertex, so `last` is the
        // vertex just before the first occupied one
        self.occupy(last);
        debug_assert_eq!(self.occupied_total, self.t + 1);
        if last == top {
            self.terminated_at = Some(self.t);
        }
        DepositOutcome::Deposited(VertexMask::from_raw(last, self.n))
    }
}

impl std::fmt::Debug for ClusterState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClusterState")
            .field("n", &self.n)
            .field("t", &self.t)
            .field("level_counts", &self.level_counts)
            .field("terminated_at", &self.terminated_at)
            .field("theta", &self.theta)
            .finish()
    }
}

/// When [`run`] stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    UntilTermination,
    /// At most this many further particles, stopping early at termination.
    StepBudget(u64),
    /// Keep sending particles, past termination, until the clock reads this.
    ExtendedUntil(u64),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Absolute times at which to snapshot the level counts.
    pub checkpoints: Vec<u64>,
    /// Keep the level of every deposited particle, in order.
    pub record_levels: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: u64,
    pub level_counts: Vec<u64>,
    pub theta: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: u32,
    /// Clock at the start of the run.
    pub start_time: u64,
    /// Level counts when the run started; needed to replay `level_history`.
    pub initial_level_counts: Vec<u64>,
    pub final_level_counts: Vec<u64>,
    pub steps: u64,
    pub t_end: Option<u64>,
    pub theta: u64,
    pub snapshots: Vec<Snapshot>,
    /// `level_history[i]` is the level of the particle deposited at time
    /// `start_time + i + 1`; empty unless requested.
    pub level_history: Vec<u8>,
}

impl TrialRecord {
    pub fn snapshot_at(&self, t: u64) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&t, |s| s.t)
            .ok()
            .map(|i| &self.snapshots[i])
    }
}

/// Drives `c` with fresh particles until `stop` fires.
pub fn run<R: Rng + ?Sized>(
    c: &mut ClusterState,
    rng: &mut R,
    stop: StopRule,
    opts: &RunOptions,
) -> TrialRecord {
    let mut checkpoints = opts.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let mut pending = checkpoints.into_iter().peekable();
    let mut snapshots = Vec::new();
    let mut take = |c: &ClusterState, snapshots: &mut Vec<Snapshot>| {
        while let Some(&t) = pending.peek() {
            if t > c.t {
                break;
            }
            if t == c.t {
                snapshots.push(Snapshot {
                    t,
                    level_counts: c.level_counts.clone(),
                    theta: c.theta,
                });
            }
            pending.next();
        }
    };

    let start_time = c.t;
    let initial_level_counts = c.level_counts.clone();
    let mut level_history = Vec::new();
    take(c, &mut snapshots);
    loop {
        let done = match stop {
            StopRule::UntilTermination => c.is_terminated(),
            StopRule::StepBudget(b) => c.is_terminated() || c.t - start_time >= b,
            StopRule::ExtendedUntil(total) => c.t >= total,
        };
        if done {
            break;
        }
        if let DepositOutcome::Deposited(v) = c.deposit(rng) {
            if opts.record_levels {
                level_history.push(v.level() as u8);
            }
        }
        take(c, &mut snapshots);
    }

    TrialRecord {
        n: c.n,
        start_time,
        initial_level_counts,
        final_level_counts: c.level_counts.clone(),
        steps: c.t - start_time,
        t_end: c.terminated_at,
        theta: c.theta,
        snapshots,
        level_history,
    }
}

/// `T_end`, the step at which the top vertex was occupied.
pub fn t_end(r: &TrialRecord) -> Option<u64> {
    r.t_end
}
