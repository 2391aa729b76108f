//! Designs made of distinct dyadic points, and the grid-containment queries
//! that decide how accurately each wavelet coefficient can be estimated.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::dyadic::{DyadicInterval, DyadicPoint, MAX_LEVEL};
use crate::error::{invalid, Error, Result};
use crate::wavelet::{footprint_cells, WaveletSpec};

/// Observed values keyed by design point.
pub type Observations = BTreeMap<DyadicPoint, f64>;

/// A set of distinct design points in `[0, 1)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Design {
    points: BTreeSet<DyadicPoint>,
}

impl Design {
    pub fn new() -> Self {
        Self::default()
    }

    /// `n0` equally spaced points `0, 1/n0, .., (n0 - 1)/n0`.
    pub fn uniform(n0: u64) -> Result<Self> {
        if !n0.is_power_of_two() || n0 > 1 << MAX_LEVEL {
            return invalid(format!("initial design size {n0} is not a power of two"));
        }
        let level = n0.trailing_zeros();
        let mut design = Design::new();
        design.insert_grid(DyadicInterval::cell(0, 0)?, level)?;
        Ok(design)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: DyadicPoint) -> bool {
        self.points.contains(&p)
    }

    /// Returns `true` if the point was new.
    pub fn insert(&mut self, p: DyadicPoint) -> bool {
        self.points.insert(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = DyadicPoint> + '_ {
        self.points.iter().copied()
    }

    /// Design points inside `interval`, in increasing order.
    pub fn points_in(&self, interval: &DyadicInterval) -> impl Iterator<Item = DyadicPoint> + '_ {
        let (lo, hi) = interval.key_range();
        // lo < 2^MAX_LEVEL whenever the interval is non-empty
        let start = DyadicPoint::from_key(lo.min((1 << MAX_LEVEL) - 1)).expect("key in range");
        self.points.range(start..).take_while(move |p| p.key() < hi)
            .copied()
    }

    /// Points of `2^-level Z ∩ cell` not yet in the design, in increasing order.
    pub fn missing_grid_points(&self, cell: &DyadicInterval, level: u32) -> Result<Vec<DyadicPoint>> {
        if level < cell.level || level > MAX_LEVEL {
            return invalid(format!(
                "grid level {level} must lie in [{}, {MAX_LEVEL}]",
                cell.level
            ));
        }
        let fine = cell.refine_to(level);
        let mut missing = Vec::new();
        for index in fine.start..fine.end {
            let p = DyadicPoint::new(index, level)?;
            if !self.points.contains(&p) {
                missing.push(p);
            }
        }
        Ok(missing)
    }

    /// Adds every point of `2^-level Z ∩ cell`; returns how many were new.
    pub fn insert_grid(&mut self, cell: DyadicInterval, level: u32) -> Result<usize> {
        let missing = self.missing_grid_points(&cell, level)?;
        let added = missing.len();
        self.points.extend(missing);
        Ok(added)
    }

    /// Largest `i >= interval.level` such that `2^-i Z ∩ interval ⊆ design`,
    /// or `None` if even the `2^-interval.level` grid is incomplete.
    pub fn grid_depth(&self, interval: &DyadicInterval) -> Option<u32> {
        if interval.is_empty() {
            return Some(MAX_LEVEL);
        }
        let base = interval.level;
        let cells = interval.end - interval.start;
        // histogram of canonical levels relative to the interval's level
        let mut counts = vec![0u64; (MAX_LEVEL - base + 1) as usize];
        for p in self.points_in(interval) {
            counts[p.level().saturating_sub(base) as usize] += 1;
        }
        let mut total = 0u64;
        let mut depth = None;
        for (d, c) in counts.iter().enumerate() {
            total += c;
            // the 2^-(base + d) grid has cells * 2^d points in the interval
            if total == cells << d {
                depth = Some(base + d as u32);
            } else {
                break;
            }
        }
        depth
    }

    /// [`Design::grid_depth`] for each cell of the partition at `partition_level`.
    pub fn cell_levels(&self, partition_level: u32) -> Vec<Option<u32>> {
        (0..1u64 << partition_level)
            .map(|l| self.grid_depth(&DyadicInterval { level: partition_level, start: l, end: l + 1 }))
            .collect()
    }

    /// Canonical level of the finest design point.
    pub fn deepest_level(&self) -> u32 {
        self.points.iter().map(|p| p.level()).max().unwrap_or(0)
    }

    /// `i_max` with `2^i_max = n^2` (rounded down), bounding the resolution search.
    pub fn max_refinement_level(&self) -> u32 {
        let n = self.len() as u128;
        if n <= 1 {
            0
        } else {
            (n * n).ilog2()
        }
    }

    pub fn effective_density(&self, partition_level: u32) -> EffectiveDensity {
        let n = self.len();
        let values = self
            .cell_levels(partition_level)
            .into_iter()
            .map(|depth| match depth {
                Some(i) if n > 0 => 2f64.powi(i as i32) / n as f64,
                _ => 0.0,
            })
            .collect();
        EffectiveDensity { partition_level, values, n }
    }

    /// Grid-containment depths for every dyadic cell, used for `i_n(j, k)`.
    pub fn grid_depths(&self) -> GridDepths {
        GridDepths::new(self)
    }

    /// `i_n(j, k)`: the finest `i > j`, at most `i_max`, whose full grid on
    /// the coefficient's footprint lies in the design.
    pub fn finest_embedded_level(&self, j: u32, k: u64, spec: &WaveletSpec) -> Result<Option<u32>> {
        spec.footprint(j, k)?;
        Ok(self.grid_depths().resolution_index(j, k, spec.half_support()))
    }

    /// Largest design point `<= x`.
    pub fn nearest_left(&self, x: DyadicPoint) -> Option<DyadicPoint> {
        self.points.range(..=x).next_back().copied()
    }

    /// CSV with columns `numerator,level`, one canonical point per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("numerator,level\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p.index(), p.level());
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "numerator,level" => {}
            other => return invalid(format!("unexpected design header {other:?}")),
        }
        let mut design = Design::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (num, level) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("bad design row `{line}`")))?;
            let num = num.trim().parse::<u64>().map_err(|e| Error::InvalidInput(format!("{e}: `{line}`")))?;
            let level = level.trim().parse::<u32>().map_err(|e| Error::InvalidInput(format!("{e}: `{line}`")))?;
            if !design.insert(DyadicPoint::new(num, level)?) {
                return invalid(format!("duplicate design point `{line}`"));
            }
        }
        Ok(design)
    }
}

impl FromIterator<DyadicPoint> for Design {
    fn from_iter<I: IntoIterator<Item = DyadicPoint>>(iter: I) -> Self {
        Design { points: iter.into_iter().collect() }
    }
}

/// Piecewise-constant density `q_l = 2^{depth_l} / n` on the cells of a
/// dyadic partition; zero where a cell's left endpoint is missing.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveDensity {
    pub partition_level: u32,
    pub values: Vec<f64>,
    pub n: usize,
}

impl EffectiveDensity {
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / (1u64 << self.partition_level) as f64
    }
}

/// Dense table of grid-containment depths for all dyadic cells down to a
/// bottom level, which is the finer of the deepest design level and `i_max`.
///
/// Entry `(j, c)` holds the largest `i` (at most the bottom level) with
/// `2^-i Z ∩ 2^-j [c, c + 1) ⊆ design`, or `-1` if the cell's left endpoint
/// is missing. Memory is `2^(bottom + 1)` bytes.
#[derive(Clone, Debug)]
pub struct GridDepths {
    bottom: u32,
    levels: Vec<Vec<i8>>,
}

impl GridDepths {
    pub fn new(design: &Design) -> Self {
        let bottom = design.deepest_level().min(design.max_refinement_level());
        let mut finest = vec![-1i8; 1 << bottom];
        for p in design.iter() {
            if let Some(idx) = p.index_at(bottom) {
                finest[idx as usize] = bottom as i8;
            }
        }
        let mut levels = vec![finest];
        for j in (0..bottom).rev() {
            let child = levels.last().expect("non-empty");
            let stride = 1usize << (bottom - j);
            let present = &levels[0];
            let parent: Vec<i8> = (0..1usize << j)
                .map(|c| {
                    if present[c * stride] < 0 {
                        -1
                    } else {
                        (j as i8).max(child[2 * c].min(child[2 * c + 1]))
                    }
                })
                .collect();
            levels.push(parent);
        }
        levels.reverse();
        GridDepths { bottom, levels }
    }

    pub fn bottom_level(&self) -> u32 {
        self.bottom
    }

    /// Depth of the level-`j` cell `c`; `None` if its left endpoint is absent
    /// or `j` is below the bottom of the table.
    pub fn cell_depth(&self, j: u32, c: u64) -> Option<u32> {
        let d = *self.levels.get(j as usize)?.get(c as usize)?;
        (d >= 0).then_some(d as u32)
    }

    /// `i_n(j, k)` for a wavelet of half support `half_support`.
    pub fn resolution_index(&self, j: u32, k: u64, half_support: u32) -> Option<u32> {
        let cells = self.levels.get(j as usize)?;
        let mut depth = i8::MAX;
        for (start, end) in footprint_cells(j, k, half_support) {
            for &d in &cells[start as usize..end as usize] {
                depth = depth.min(d);
            }
        }
        (depth as i32 > j as i32).then_some(depth as u32)
    }

    /// `i_n(j, k)` for every `k` at level `j`; `-1` marks undefined entries.
    pub fn resolution_row(&self, j: u32, half_support: u32) -> Vec<i8> {
        let size = 1usize << j;
        let Some(cells) = self.levels.get(j as usize) else {
            return vec![-1; size];
        };
        let width = 2 * half_support as usize - 1;
        let mut out = vec![-1i8; size];
        if width >= size {
            let m = cells.iter().copied().min().unwrap_or(-1);
            out.fill(if m as i32 > j as i32 { m } else { -1 });
            return out;
        }
        // windows start at k - L + 1; extend cyclically so each is contiguous
        let shift = half_support as usize - 1;
        let ext: Vec<i8> = (0..size + width).map(|t| cells[(t + size - shift) % size]).collect();
        let mut mins = ext[..size].to_vec();
        for offset in 1..width {
            for (m, &e) in mins.iter_mut().zip(&ext[offset..offset + size]) {
                *m = (*m).min(e);
            }
        }
        for (o, m) in out.iter_mut().zip(mins) {
            *o = if m as i32 > j as i32 { m } else { -1 };
        }
        out
    }
}
