//! Backward induction over the discretized state spaces.
//!
//! `V_T = g` on the terminal grid and `V_t(x) = sum_y P(x -> y) V_{t+1}(y)`
//! on earlier grids, with mass that leaves the truncation box counted as
//! zero. The estimate of the polytope probability is `V_0(0)`.

mod bound;
mod solve;

pub use bound::{error_bound, ErrorBudget};
pub use solve::{escape_audit, solve, solve_with, SolveOptions, SolveReport};

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernel::{lattice_shift, transition_row, BoundKernel, LineKernel};
use crate::smoothing::SmoothingParams;

/// States handed to one rayon task.
const CHUNK: usize = 1024;

/// Values of one stage on its grid. Cells the solver proved unreachable from
/// the origin hold NaN.
#[derive(Debug, Clone)]
pub struct ValueTable {
    t: usize,
    grid: Grid,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(t: usize, grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { t, grid, values })
    }

    pub fn stage(&self) -> usize {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-constant extension: the value at the representative of the
    /// cell containing `x`.
    pub fn extended(&self, x: &[f64]) -> Result<f64> {
        Ok(self.values[self.grid.project(x)?])
    }
}

/// Ramp factor of every cell representative, per axis.
pub(crate) fn ramp_factors(grid: &Grid, s: &SmoothingParams) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|d| {
            (0..grid.cells_per_dim()[d])
                .map(|q| s.ramp(d, grid.representative_coord(d, q)))
                .collect()
        })
        .collect()
}

/// `V_T = g_{lambda,b}` at the representatives of `grid`.
pub fn terminal_values(horizon: usize, grid: &Grid, s: &SmoothingParams) -> Result<ValueTable> {
    if s.dim() != grid.dim() {
        return Err(Error::Dimension(format!(
            "offsets of length {} against a {}-dimensional grid",
            s.dim(),
            grid.dim()
        )));
    }
    let factors = ramp_factors(grid, s);
    let values = (0..grid.len())
        .map(|idx| {
            grid.multi_index(idx)
                .iter()
                .enumerate()
                .fold(1.0, |acc, (d, &q)| acc * factors[d][q])
        })
        .collect();
    ValueTable::new(horizon, grid.clone(), values)
}

/// Walks the cells of a grid in linear order, tracking the multi-index and
/// its image on a target lattice.
pub(crate) struct Cursor<'a> {
    cells: &'a [usize],
    multi: Vec<usize>,
    base: Vec<i64>,
}

impl<'a> Cursor<'a> {
    pub(crate) fn at(grid: &'a Grid, shift: &[i64], idx: usize) -> Self {
        let multi = grid.multi_index(idx);
        let base = multi
            .iter()
            .zip(shift)
            .map(|(&q, s)| q as i64 + s)
            .collect();
        Self {
            cells: grid.cells_per_dim(),
            multi,
            base,
        }
    }

    pub(crate) fn base(&self) -> &[i64] {
        &self.base
    }

    #[inline]
    pub(crate) fn advance(&mut self) {
        for d in (0..self.cells.len()).rev() {
            self.multi[d] += 1;
            self.base[d] += 1;
            if self.multi[d] < self.cells[d] {
                return;
            }
            self.base[d] -= self.cells[d] as i64;
            self.multi[d] = 0;
        }
    }
}

/// Which cells of a stage get evaluated.
#[derive(Debug, Clone, Copy)]
pub(crate) enum States<'a> {
    All,
    /// Sorted linear indices.
    Subset(&'a [usize]),
}

/// Runs `f(base) -> (value, escaped)` for the selected cells of `grid`, in
/// parallel. Returns the dense values (NaN elsewhere) and the largest
/// escaped mass seen.
pub(crate) fn evaluate<F>(grid: &Grid, shift: &[i64], states: States<'_>, f: F) -> (Vec<f64>, f64)
where
    F: Fn(&[i64]) -> (f64, f64) + Sync,
{
    let mut values = vec![f64::NAN; grid.len()];
    let worst = match states {
        States::All => values
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(ci, out)| {
                let mut cur = Cursor::at(grid, shift, ci * CHUNK);
                let mut worst = 0.0f64;
                for slot in out.iter_mut() {
                    let (v, e) = f(cur.base());
                    *slot = v;
                    worst = worst.max(e);
                    cur.advance();
                }
                worst
            })
            .reduce(|| 0.0, f64::max),
        States::Subset(list) => {
            let results: Vec<(f64, f64)> = list
                .par_iter()
                .map_init(
                    || vec![0i64; grid.dim()],
                    |base, &idx| {
                        let mut rest = idx;
                        for d in 0..grid.dim() {
                            let stride = grid.strides()[d];
                            base[d] = (rest / stride) as i64 + shift[d];
                            rest %= stride;
                        }
                        f(base)
                    },
                )
                .collect();
            let mut worst = 0.0f64;
            for (&idx, &(v, e)) in list.iter().zip(&results) {
                values[idx] = v;
                worst = worst.max(e);
            }
            worst
        }
    };
    (values, worst)
}

/// Splits the selected cells into maximal runs of consecutive linear
/// indices that stay within one line along the last axis.
pub(crate) fn runs(grid: &Grid, states: States<'_>) -> Vec<Range<usize>> {
    let row = *grid.cells_per_dim().last().unwrap();
    match states {
        States::All => (0..grid.len() / row)
            .map(|r| r * row..(r + 1) * row)
            .collect(),
        States::Subset(list) => {
            let mut out: Vec<Range<usize>> = Vec::new();
            for &idx in list {
                match out.last_mut() {
                    Some(r) if r.end == idx && idx % row != 0 => r.end += 1,
                    _ => out.push(idx..idx + 1),
                }
            }
            out
        }
    }
}

/// `out[j] = sum_k w_k next[cell_k(j)]` for the cells `run` of `grid`,
/// tap by tap: along the run every tap reads a contiguous stretch of `next`.
/// Each state still sums its taps in ascending order. Returns the largest
/// escaped mass in the run.
pub(crate) fn line_sums(
    bk: &BoundKernel<'_>,
    grid: &Grid,
    shift: &[i64],
    run: Range<usize>,
    next: &[f64],
    out: &mut [f64],
) -> f64 {
    let kernel = bk.kernel();
    let last = grid.dim() - 1;
    let mut base: Vec<i64> = grid
        .multi_index(run.start)
        .iter()
        .zip(shift)
        .map(|(&q, s)| q as i64 + s)
        .collect();
    let q0 = base[last];
    let len = run.len() as i64;
    let n_last = bk.target().cells_per_dim()[last] as i64;

    // Taps that stay in the box along every axis but the last.
    let lo: Vec<i64> = (0..=last)
        .map(|d| if d == last { i64::MIN / 4 } else { 0 })
        .collect();
    let hi: Vec<i64> = (0..=last)
        .map(|d| {
            if d == last {
                i64::MAX / 4
            } else {
                bk.target().cells_per_dim()[d] as i64
            }
        })
        .collect();
    let taps = kernel.range_within(&base, &lo, &hi);

    let origin = bk.base_linear(&base);
    let offs = kernel.offsets(last);
    let weights = kernel.weights();
    out.fill(0.0);
    for k in taps {
        let o = q0 + offs[k];
        let j_lo = (-o).max(0);
        let j_hi = (n_last - o).min(len);
        if j_lo >= j_hi {
            continue;
        }
        let w = weights[k];
        let start = (origin + bk.linear_offset(k) + j_lo) as usize;
        let src = &next[start..start + (j_hi - j_lo) as usize];
        for (acc, v) in out[j_lo as usize..j_hi as usize].iter_mut().zip(src) {
            *acc += w * v;
        }
    }

    let mut worst = 0.0f64;
    for j in 0..len {
        base[last] = q0 + j;
        worst = worst.max(kernel.escaped(bk.in_box(&base)));
    }
    worst
}

/// Kernel expectations of `next` for the selected cells of `grid`, NaN
/// elsewhere, and the largest escaped mass.
pub(crate) fn evaluate_lines(
    bk: &BoundKernel<'_>,
    grid: &Grid,
    shift: &[i64],
    states: States<'_>,
    next: &[f64],
) -> (Vec<f64>, f64) {
    let mut values = vec![f64::NAN; grid.len()];
    let worst = match states {
        States::All => {
            let row = *grid.cells_per_dim().last().unwrap();
            values
                .par_chunks_mut(row)
                .enumerate()
                .map(|(r, out)| line_sums(bk, grid, shift, r * row..(r + 1) * row, next, out))
                .reduce(|| 0.0, f64::max)
        }
        States::Subset(_) => {
            let parts: Vec<(Range<usize>, Vec<f64>, f64)> = runs(grid, states)
                .into_par_iter()
                .map(|run| {
                    let mut out = vec![0.0; run.len()];
                    let e = line_sums(bk, grid, shift, run.clone(), next, &mut out);
                    (run, out, e)
                })
                .collect();
            let mut worst = 0.0f64;
            for (run, out, e) in parts {
                values[run].copy_from_slice(&out);
                worst = worst.max(e);
            }
            worst
        }
    };
    (values, worst)
}

/// One backward step: `V_t` on `grid` from `next = V_{t+1}` under the
/// transition `x -> x + column * eps`.
///
/// When `grid` and `next.grid()` share a lattice the shift-invariant kernel
/// is used; otherwise every row is built from its cell center.
pub fn backward_step(next: &ValueTable, grid: &Grid, column: &[f64]) -> Result<ValueTable> {
    if next.t == 0 {
        return Err(Error::invalid("next", "stage 0 has no predecessor"));
    }
    let target = next.grid();
    if column.len() != target.dim() || grid.dim() != target.dim() {
        return Err(Error::Dimension(format!(
            "column of length {}, grids of {} and {} axes",
            column.len(),
            grid.dim(),
            target.dim()
        )));
    }
    let values = match lattice_shift(grid, target) {
        Ok(shift) => {
            let spacing: Vec<f64> = (0..target.dim()).map(|d| target.spacing(d)).collect();
            let kernel = LineKernel::new(column, &spacing);
            let bound = kernel.bind(target);
            evaluate_lines(&bound, grid, &shift, States::All, &next.values).0
        }
        Err(_) => (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                transition_row(&grid.representative(idx), column, target)
                    .map(|row| row.expectation(&next.values))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    ValueTable::new(next.t - 1, grid.clone(), values)
}
