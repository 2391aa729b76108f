//! Exact dyadic rationals in `[0, 1)`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{invalid, Result};

/// Deepest resolution level a [`DyadicPoint`] may carry.
pub const MAX_LEVEL: u32 = 62;

/// The dyadic rational `index * 2^-level` in `[0, 1)`, kept in canonical form
/// (odd index, or the point zero at level 0).
///
/// Ordering and equality are integer operations on [`DyadicPoint::key`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicPoint {
    index: u64,
    level: u32,
}

impl DyadicPoint {
    pub const ZERO: DyadicPoint = DyadicPoint { index: 0, level: 0 };

    pub fn new(index: u64, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return invalid(format!("level {level} exceeds {MAX_LEVEL}"));
        }
        if index >> level != 0 {
            return invalid(format!("index {index} out of range at level {level}"));
        }
        Ok(Self::canonical(index, level))
    }

    fn canonical(index: u64, level: u32) -> Self {
        if index == 0 {
            return Self::ZERO;
        }
        let shift = index.trailing_zeros().min(level);
        DyadicPoint {
            index: index >> shift,
            level: level - shift,
        }
    }

    /// Numerator over `2^MAX_LEVEL`; a total order-preserving encoding.
    pub fn key(self) -> u64 {
        self.index << (MAX_LEVEL - self.level)
    }

    pub fn from_key(key: u64) -> Result<Self> {
        Self::new(key, MAX_LEVEL)
    }

    pub fn index(self) -> u64 {
        self.index
    }

    /// Canonical level: the coarsest grid `2^-i Z` containing the point.
    pub fn level(self) -> u32 {
        self.level
    }

    pub fn value(self) -> f64 {
        self.index as f64 / (1u64 << self.level) as f64
    }

    /// Index on the `2^-level` grid, if the point lies on it.
    pub fn index_at(self, level: u32) -> Option<u64> {
        (self.level <= level).then(|| self.index << (level - self.level))
    }

    /// Smallest grid index `k` at `level` with `k * 2^-level >= self`.
    pub fn ceil_index_at(self, level: u32) -> u64 {
        if self.level <= level {
            self.index << (level - self.level)
        } else {
            let shift = self.level - level;
            (self.index >> shift) + 1
        }
    }
}

impl Ord for DyadicPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for DyadicPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for DyadicPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.index, self.level)
    }
}

/// The half-open interval `2^-level [start, end)` with `end <= 2^level`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadicInterval {
    pub level: u32,
    pub start: u64,
    pub end: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, start: u64, end: u64) -> Result<Self> {
        if level > MAX_LEVEL || start > end || end > 1u64 << level {
            return invalid(format!("bad interval 2^-{level}[{start}, {end})"));
        }
        Ok(DyadicInterval { level, start, end })
    }

    /// The dyadic cell `2^-level [index, index + 1)`.
    pub fn cell(level: u32, index: u64) -> Result<Self> {
        Self::new(level, index, index + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn lo(&self) -> DyadicPoint {
        DyadicPoint::canonical(self.start, self.level)
    }

    /// Endpoints as numerators over `2^MAX_LEVEL`; the upper one may equal `2^MAX_LEVEL`.
    pub fn key_range(&self) -> (u64, u64) {
        let shift = MAX_LEVEL - self.level;
        (self.start << shift, self.end << shift)
    }

    /// Same interval expressed on a finer grid.
    pub fn refine_to(&self, level: u32) -> DyadicInterval {
        debug_assert!(level >= self.level);
        let shift = level - self.level;
        DyadicInterval {
            level,
            start: self.start << shift,
            end: self.end << shift,
        }
    }

    pub fn contains(&self, p: DyadicPoint) -> bool {
        let (lo, hi) = self.key_range();
        let key = p.key();
        lo <= key && key < hi
    }

    /// `self ⊆ other` as sets of reals.
    pub fn is_subset_of(&self, other: &DyadicInterval) -> bool {
        if self.is_empty() {
            return true;
        }
        let (a, b) = self.key_range();
        let (c, d) = other.key_range();
        c <= a && b <= d
    }

    pub fn intersects(&self, other: &DyadicInterval) -> bool {
        let (a, b) = self.key_range();
        let (c, d) = other.key_range();
        a < d && c < b
    }

    pub fn width(&self) -> f64 {
        (self.end - self.start) as f64 / (1u64 << self.level) as f64
    }
}
