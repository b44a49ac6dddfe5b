//! Vertices of the Boolean lattice `{0,1}^n`, their neighborhoods, and
//! uniform decreasing walks from the top vertex.
//!
//! Coordinates are little-endian: bit `i` of the mask is coordinate `i`.

use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Largest dimension a [`VertexMask`] can represent.
pub const MAX_DIMENSION: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIMENSION}")]
    BadDimension(u32),
    #[error("bits {bits:#b} do not fit in dimension {n}")]
    BitsOutOfRange { bits: u32, n: u32 },
}

#[inline]
pub(crate) fn full_mask(n: u32) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// One vertex of `{0,1}^n`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexMask {
    bits: u32,
    n: u8,
}

impl VertexMask {
    pub fn new(bits: u32, n: u32) -> Result<Self, LatticeError> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(LatticeError::BadDimension(n));
        }
        if bits & !full_mask(n) != 0 {
            return Err(LatticeError::BitsOutOfRange { bits, n });
        }
        Ok(Self { bits, n: n as u8 })
    }

    /// Caller guarantees `1 <= n <= 32` and `bits < 2^n`.
    #[inline]
    pub(crate) fn from_raw(bits: u32, n: u32) -> Self {
        debug_assert!((1..=MAX_DIMENSION).contains(&n) && bits & !full_mask(n) == 0);
        Self { bits, n: n as u8 }
    }

    pub fn zero(n: u32) -> Result<Self, LatticeError> {
        Self::new(0, n)
    }

    pub fn ones(n: u32) -> Result<Self, LatticeError> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(LatticeError::BadDimension(n));
        }
        Ok(Self::from_raw(full_mask(n), n))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn dim(self) -> u32 {
        u32::from(self.n)
    }

    /// Number of set coordinates, `|v|`.
    #[inline]
    pub fn level(self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn is_top(self) -> bool {
        self.bits == full_mask(self.dim())
    }

    /// `self <= other` coordinatewise.
    #[inline]
    pub fn is_below(self, other: VertexMask) -> bool {
        self.bits & !other.bits == 0
    }

    /// The `level(v)` vertices reached by clearing one set bit.
    pub fn down_neighbors(self) -> Vec<VertexMask> {
        let mut out = Vec::with_capacity(self.level() as usize);
        let mut rest = self.bits;
        while rest != 0 {
            let low = rest & rest.wrapping_neg();
            out.push(Self::from_raw(self.bits ^ low, self.dim()));
            rest ^= low;
        }
        out
    }

    /// The `n - level(v)` vertices reached by setting one clear bit.
    pub fn up_neighbors(self) -> Vec<VertexMask> {
        let n = self.dim();
        let mut out = Vec::with_capacity((n - self.level()) as usize);
        let mut rest = !self.bits & full_mask(n);
        while rest != 0 {
            let low = rest & rest.wrapping_neg();
            out.push(Self::from_raw(self.bits | low, n));
            rest ^= low;
        }
        out
    }
}

impl fmt::Debug for VertexMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // most significant coordinate first, like a binary literal
        write!(f, "{:0width$b}", self.bits, width = self.dim() as usize)
    }
}

impl fmt::Display for VertexMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A decreasing walk from the top vertex (or from an arbitrary start) that
/// clears one bit per step, produced lazily.
///
/// Each step picks uniformly among the coordinates still to be cleared, a
/// partial Fisher-Yates shuffle, so stopping early costs only the steps taken.
/// Restricting the cleared coordinates to `start \ target` yields a uniform
/// monotone path from `start` down to `target`.
pub struct DescendingWalk<'r, R: ?Sized> {
    rng: &'r mut R,
    n: u32,
    current: u32,
    coords: [u8; MAX_DIMENSION as usize],
    taken: usize,
    len: usize,
}

impl<'r, R: Rng + ?Sized> DescendingWalk<'r, R> {
    /// Walk from all-ones down to all-zeros.
    pub fn from_top(rng: &'r mut R, n: u32) -> Self {
        Self::between(
            rng,
            VertexMask::from_raw(full_mask(n), n),
            VertexMask::from_raw(0, n),
        )
    }

    /// Walk from `start` down to `target`; `target` must lie below `start`.
    pub fn between(rng: &'r mut R, start: VertexMask, target: VertexMask) -> Self {
        debug_assert!(target.is_below(start) && start.dim() == target.dim());
        let mut coords = [0u8; MAX_DIMENSION as usize];
        let mut len = 0;
        let mut rest = start.bits & !target.bits;
        while rest != 0 {
            coords[len] = rest.trailing_zeros() as u8;
            len += 1;
            rest &= rest - 1;
        }
        Self {
            rng,
            n: start.dim(),
            current: start.bits,
            coords,
            taken: 0,
            len,
        }
    }

    /// Number of steps left before the target is reached.
    pub fn remaining(&self) -> usize {
        self.len - self.taken
    }

    /// Coordinate cleared by the next step, advancing the walk.
    pub fn next_coordinate(&mut self) -> Option<u32> {
        if self.taken == self.len {
            return None;
        }
        let pick = self.rng.random_range(self.taken..self.len);
        self.coords.swap(self.taken, pick);
        let coord = self.coords[self.taken];
        self.taken += 1;
        self.current &= !(1u32 << coord);
        Some(u32::from(coord))
    }
}

impl<R: Rng + ?Sized> Iterator for DescendingWalk<'_, R> {
    type Item = VertexMask;

    /// Yields the vertex after each step (the start vertex is not yielded).
    fn next(&mut self) -> Option<VertexMask> {
        self.next_coordinate()
            .map(|_| VertexMask::from_raw(self.current, self.n))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining(), Some(self.remaining()))
    }
}

/// A complete decreasing walk `1 = w_0 > w_1 > ... > w_n = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecreasingWalk {
    n: u32,
    order: Vec<u8>,
}

impl DecreasingWalk {
    /// Builds a walk from the order in which coordinates are cleared.
    pub fn from_order(n: u32, order: Vec<u8>) -> Result<Self, LatticeError> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(LatticeError::BadDimension(n));
        }
        let mut seen = 0u32;
        for &c in &order {
            if u32::from(c) >= n || seen & (1 << c) != 0 {
                return Err(LatticeError::BitsOutOfRange {
                    bits: 1 << c.min(31),
                    n,
                });
            }
            seen |= 1 << c;
        }
        if seen != full_mask(n) {
            return Err(LatticeError::BitsOutOfRange { bits: seen, n });
        }
        Ok(Self { n, order })
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    /// The coordinate cleared at each step.
    pub fn order(&self) -> &[u8] {
        &self.order
    }

    /// `steps()[i]` is the vertex after `i` steps; `n + 1` entries.
    pub fn steps(&self) -> Vec<VertexMask> {
        let mut bits = full_mask(self.n);
        let mut out = Vec::with_capacity(self.order.len() + 1);
        out.push(VertexMask::from_raw(bits, self.n));
        for &c in &self.order {
            bits &= !(1u32 << c);
            out.push(VertexMask::from_raw(bits, self.n));
        }
        out
    }
}

/// Draws a walk uniformly from the `n!` decreasing walks.
pub fn sample_walk<R: Rng + ?Sized>(rng: &mut R, n: u32) -> Result<DecreasingWalk, LatticeError> {
    if n == 0 || n > MAX_DIMENSION {
        return Err(LatticeError::BadDimension(n));
    }
    let mut walk = DescendingWalk::from_top(rng, n);
    let mut order = Vec::with_capacity(n as usize);
    while let Some(c) = walk.next_coordinate() {
        order.push(c as u8);
    }
    Ok(DecreasingWalk { n, order })
}
