//! Shift-invariant form of the line kernel on a uniform lattice.
//!
//! When the source and target grids share spacing and their breakpoints sit
//! on the same lattice, the sequence of cells crossed by `x + a eps` (and the
//! mass of each crossing) is the same for every source cell center up to a
//! translation. The crossings are therefore computed once per direction and
//! reused for every state; only the clipping to the target box depends on
//! the state. Along each axis the cell offset is monotone in `eps`, so the
//! taps that stay inside the box form one contiguous run.

use std::ops::Range;

use super::{sweep, truncated_tail, TransitionRow, EPS_TRUNCATION};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Crossing sequence of the line through a lattice cell center.
#[derive(Debug, Clone)]
pub struct LineKernel {
    direction: Vec<f64>,
    /// `offsets[d][k]`: lattice offset along axis `d` of tap `k`.
    offsets: Vec<Vec<i64>>,
    weights: Vec<f64>,
    /// `prefix[k] = weights[..k].sum()`.
    prefix: Vec<f64>,
    tail: f64,
}

impl LineKernel {
    /// Taps for direction `a` on a lattice with per-axis spacing `spacing`,
    /// seen from the center of lattice cell zero.
    pub fn new(a: &[f64], spacing: &[f64]) -> Self {
        assert_eq!(a.len(), spacing.len());
        let m = a.len();
        let mut cuts = Vec::new();
        for d in (0..m).filter(|&d| a[d] != 0.0) {
            let h = spacing[d];
            assert!(h > 0.0, "lattice spacing must be positive");
            // Breakpoints j h seen from the center h / 2.
            let reach = (EPS_TRUNCATION * a[d].abs() / h).ceil() as i64 + 1;
            for j in -reach..=reach + 1 {
                cuts.push((j as f64 - 0.5) * h / a[d]);
            }
        }
        let mut offsets: Vec<Vec<i64>> = vec![Vec::new(); m];
        let mut weights: Vec<f64> = Vec::new();
        sweep(cuts, |mid, mass| {
            let off: Vec<i64> = (0..m)
                .map(|d| {
                    if a[d] == 0.0 {
                        0
                    } else {
                        (0.5 + a[d] * mid / spacing[d]).floor() as i64
                    }
                })
                .collect();
            let same = !weights.is_empty() && (0..m).all(|d| offsets[d].last() == Some(&off[d]));
            if same {
                *weights.last_mut().unwrap() += mass;
            } else {
                for d in 0..m {
                    offsets[d].push(off[d]);
                }
                weights.push(mass);
            }
        });
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in &weights {
            acc += w;
            prefix.push(acc);
        }
        Self {
            direction: a.to_vec(),
            offsets,
            weights,
            prefix,
            tail: truncated_tail(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self, d: usize) -> &[i64] {
        &self.offsets[d]
    }

    /// Sum of the weights of taps `range`.
    #[inline]
    pub fn mass(&self, range: Range<usize>) -> f64 {
        if range.start >= range.end {
            0.0
        } else {
            self.prefix[range.end] - self.prefix[range.start]
        }
    }

    /// Taps `k` with `lo[d] <= base[d] + offsets[d][k] < hi[d]` on every axis.
    pub fn range_within(&self, base: &[i64], lo: &[i64], hi: &[i64]) -> Range<usize> {
        let mut start = 0;
        let mut end = self.len();
        for d in 0..self.direction.len() {
            let (l, h) = (lo[d] - base[d], hi[d] - base[d]);
            let offs = &self.offsets[d];
            let a = self.direction[d];
            let (s, e) = if a > 0.0 {
                (
                    offs.partition_point(|&o| o < l),
                    offs.partition_point(|&o| o < h),
                )
            } else if a < 0.0 {
                (
                    offs.partition_point(|&o| o >= h),
                    offs.partition_point(|&o| o >= l),
                )
            } else if l <= 0 && 0 < h {
                (0, self.len())
            } else {
                (0, 0)
            };
            start = start.max(s);
            end = end.min(e);
            if start >= end {
                return start..start;
            }
        }
        start..end
    }

    /// Escaped mass for a state whose in-box taps are `range`.
    #[inline]
    pub fn escaped(&self, range: Range<usize>) -> f64 {
        self.tail + self.prefix[self.len()] - self.mass(range)
    }

    /// Binds the kernel to a target grid so that taps can be turned into
    /// linear cell indices.
    pub fn bind<'a>(&'a self, target: &'a Grid) -> BoundKernel<'a> {
        let strides = target.strides();
        let linear = (0..self.len())
            .map(|k| {
                (0..self.direction.len())
                    .map(|d| self.offsets[d][k] * strides[d] as i64)
                    .sum()
            })
            .collect();
        BoundKernel {
            kernel: self,
            target,
            linear,
            upper: target.cells_per_dim().iter().map(|&n| n as i64).collect(),
        }
    }
}

/// Lattice offset of `source` cell indices inside `target`: source cell `p`
/// has its center in target cell `p + shift` (per axis).
pub fn lattice_shift(source: &Grid, target: &Grid) -> Result<Vec<i64>> {
    if source.dim() != target.dim() {
        return Err(Error::Dimension(format!(
            "source grid has {} axes, target has {}",
            source.dim(),
            target.dim()
        )));
    }
    (0..source.dim())
        .map(|d| {
            let (hs, ht) = (source.spacing(d), target.spacing(d));
            if !(hs > 0.0) || (hs - ht).abs() > 1e-12 * ht {
                return Err(Error::Misaligned(format!("axis {d}: spacing {hs} vs {ht}")));
            }
            let shift = (source.bounds().lo(d) - target.bounds().lo(d)) / ht;
            let rounded = shift.round();
            if (shift - rounded).abs() > 1e-9 {
                return Err(Error::Misaligned(format!(
                    "axis {d}: origins differ by {shift} cells"
                )));
            }
            Ok(rounded as i64)
        })
        .collect()
}

/// A [`LineKernel`] with tap offsets resolved against one target grid.
#[derive(Debug)]
pub struct BoundKernel<'a> {
    kernel: &'a LineKernel,
    target: &'a Grid,
    linear: Vec<i64>,
    upper: Vec<i64>,
}

impl<'a> BoundKernel<'a> {
    pub fn kernel(&self) -> &LineKernel {
        self.kernel
    }

    pub fn target(&self) -> &Grid {
        self.target
    }

    /// Taps of a state at target-lattice position `base` that stay in the box.
    #[inline]
    pub fn in_box(&self, base: &[i64]) -> Range<usize> {
        let zeros = [0i64; 8];
        if base.len() <= zeros.len() {
            self.kernel
                .range_within(base, &zeros[..base.len()], &self.upper)
        } else {
            self.kernel
                .range_within(base, &vec![0; base.len()], &self.upper)
        }
    }

    #[inline]
    pub fn base_linear(&self, base: &[i64]) -> i64 {
        base.iter()
            .zip(self.target.strides())
            .map(|(b, s)| b * *s as i64)
            .sum()
    }

    /// `sum_k w_k values[cell_k]` over `range`, in tap order with four
    /// interleaved partial sums combined in a fixed order.
    #[inline]
    pub fn weighted_sum(&self, base_linear: i64, range: Range<usize>, values: &[f64]) -> f64 {
        if range.start >= range.end {
            return 0.0;
        }
        let w = &self.kernel.weights[range.clone()];
        let l = &self.linear[range];
        let mut acc = [0.0f64; 4];
        let mut wc = w.chunks_exact(4);
        let mut lc = l.chunks_exact(4);
        for (ws, ls) in (&mut wc).zip(&mut lc) {
            for j in 0..4 {
                acc[j] += ws[j] * values[(base_linear + ls[j]) as usize];
            }
        }
        let mut rest = 0.0;
        for (wv, lv) in wc.remainder().iter().zip(lc.remainder()) {
            rest += wv * values[(base_linear + lv) as usize];
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + rest
    }

    /// The full transition row of the state at `base`, equivalent to
    /// [`super::transition_row`] from the corresponding cell center.
    pub fn row(&self, base: &[i64]) -> TransitionRow {
        let range = self.in_box(base);
        let b = self.base_linear(base);
        TransitionRow {
            entries: range
                .clone()
                .map(|k| ((b + self.linear[k]) as usize, self.kernel.weights[k]))
                .collect(),
            escaped_mass: self.kernel.escaped(range),
        }
    }

    #[inline]
    pub(crate) fn linear_offset(&self, k: usize) -> i64 {
        self.linear[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, TruncationBox, DEFAULT_CELL_BUDGET};
    use crate::kernel::transition_row;
    use proptest::prelude::*;

    fn lattice_grid(half_cells: usize, h: f64, m: usize) -> Grid {
        let r = half_cells as f64 * h;
        Grid::with_spacing(&TruncationBox::cube(r, m).unwrap(), h, DEFAULT_CELL_BUDGET).unwrap()
    }

    #[test]
    fn shift_between_nested_lattice_grids() {
        let src = lattice_grid(6, 0.25, 2);
        let tgt = lattice_grid(10, 0.25, 2);
        assert_eq!(lattice_shift(&src, &tgt).unwrap(), vec![4, 4]);
        let odd = Grid::with_spacing(
            &TruncationBox::new(vec![-1.1, -1.0], vec![1.4, 1.5]).unwrap(),
            0.25,
            DEFAULT_CELL_BUDGET,
        )
        .unwrap();
        assert!(lattice_shift(&odd, &tgt).is_err());
    }

    #[test]
    fn kernel_is_normalized() {
        let k = LineKernel::new(&[0.9, -1.0], &[0.05, 0.05]);
        let total = k.mass(0..k.len()) + k.escaped(0..k.len());
        assert!((total - 1.0).abs() < 1e-13);
        assert!(k.offsets(0).windows(2).all(|w| w[0] <= w[1]));
        assert!(k.offsets(1).windows(2).all(|w| w[0] >= w[1]));
    }

    proptest! {
        #[test]
        fn shifted_rows_match_direct_rows(
            a in proptest::collection::vec(-2.0f64..2.0, 2),
            cell in proptest::collection::vec(0usize..12, 2),
            h in 0.08f64..0.4,
        ) {
            let src = lattice_grid(6, h, 2);
            let tgt = lattice_grid(9, h, 2);
            let shift = lattice_shift(&src, &tgt).unwrap();
            let kernel = LineKernel::new(&a, &[h, h]);
            let bound = kernel.bind(&tgt);
            let idx = src.linear_index(&cell);
            let x = src.representative(idx);
            let base: Vec<i64> = (0..2).map(|d| cell[d] as i64 + shift[d]).collect();
            let fast = bound.row(&base);
            let slow = transition_row(&x, &a, &tgt).unwrap();
            prop_assert!((fast.escaped_mass - slow.escaped_mass).abs() < 1e-12);
            let mut dense_fast = vec![0.0; tgt.len()];
            for &(c, p) in &fast.entries { dense_fast[c] += p; }
            let mut dense_slow = vec![0.0; tgt.len()];
            for &(c, p) in &slow.entries { dense_slow[c] += p; }
            for c in 0..tgt.len() {
                prop_assert!((dense_fast[c] - dense_slow[c]).abs() < 1e-12, "cell {}", c);
            }
        }
    }
}
