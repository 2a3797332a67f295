//! The full solver.
//!
//! All grids `Gamma_1..Gamma_T` are cut from one lattice of spacing
//! `h = c / k`, `c = sqrt(2 ln lambda)`, `k = ceil(c / h_max)`, so that every
//! box `H_t` is exactly `2tk` cells wide per axis and each backward step can
//! use the shift-invariant line kernel. Two further savings keep the work
//! proportional to what actually matters:
//!
//! * the step into the terminal stage never builds the terminal table; the
//!   ramp is 1 or 0 on all but a thin band of cells, so each state needs one
//!   prefix-sum difference plus a short explicit sum over the band;
//! * stages before `T - 1` are only evaluated on cells reachable from the
//!   origin (those with a positive-probability path through in-box cells).
//!   Other cells never enter `V_0(0)`.

use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use tracing::debug;

use super::bound::{check_parameters, error_bound, ErrorBudget};
use super::{evaluate, evaluate_lines, ramp_factors, Cursor, States, CHUNK};
use crate::error::{Error, Result};
use crate::grid::{box_radius, build_box, max_spacing, Grid, DEFAULT_CELL_BUDGET};
use crate::kernel::{lattice_shift, transition_row, BoundKernel, LineKernel, TransitionRow};
use crate::preprocess::PolytopeProblem;
use crate::smoothing::SmoothingParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub lambda: f64,
    pub beta: f64,
    /// Upper limit on the cell count of any single grid.
    pub cell_budget: u64,
    /// Skip cells that cannot be reached from the origin.
    pub prune_unreachable: bool,
}

impl SolveOptions {
    pub fn new(lambda: f64, beta: f64) -> Self {
        Self {
            lambda,
            beta,
            cell_budget: DEFAULT_CELL_BUDGET,
            prune_unreachable: true,
        }
    }

    /// `lambda = sqrt(n)`, `beta = 1/n`.
    pub fn from_n(n: f64) -> Self {
        Self::new(n.sqrt(), 1.0 / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub estimate: f64,
    pub bound: ErrorBudget,
    /// Lattice spacing shared by all grids after the origin.
    pub spacing: f64,
    /// Cell count of `Gamma_t`, `t = 0..=T`.
    pub grid_cells: Vec<usize>,
    pub cells_total: usize,
    /// Cells whose value was actually computed.
    pub states_evaluated: usize,
    /// Largest mass any evaluated state loses out of the next box.
    pub escaped_mass_max: f64,
    pub elapsed: Duration,
}

/// Estimate of `P(A z <= b)` for `z ~ N(0, I_T)` with its a-priori bound.
pub fn solve(p: &PolytopeProblem, lambda: f64, beta: f64) -> Result<SolveReport> {
    solve_with(p, &SolveOptions::new(lambda, beta))
}

struct Lattice {
    grids: Vec<Grid>,
    spacing: f64,
}

fn lattice(p: &PolytopeProblem, opts: &SolveOptions) -> Result<Lattice> {
    let m = p.constraints();
    let c = box_radius(opts.lambda)?;
    let hmax = max_spacing(opts.beta, m)?;
    let k = (c / hmax * (1.0 - 1e-12)).ceil().max(1.0);
    let spacing = c / k;
    let mut grids = Vec::with_capacity(p.horizon() + 1);
    grids.push(Grid::with_spacing(
        &build_box(0, opts.lambda, m)?,
        spacing,
        opts.cell_budget,
    )?);
    for t in 1..=p.horizon() {
        grids.push(Grid::with_spacing(
            &build_box(t, opts.lambda, m)?,
            spacing,
            opts.cell_budget,
        )?);
    }
    Ok(Lattice { grids, spacing })
}

fn spacings(g: &Grid) -> Vec<f64> {
    (0..g.dim()).map(|d| g.spacing(d)).collect()
}

/// Per-axis cell thresholds of the terminal ramp: below `ones[d]` the factor
/// is 1, from `zeros[d]` on it is 0.
struct RampZones {
    ones: Vec<i64>,
    zeros: Vec<i64>,
    factors: Vec<Vec<f64>>,
}

impl RampZones {
    fn new(grid: &Grid, s: &SmoothingParams) -> Self {
        let factors = ramp_factors(grid, s);
        let ones = factors
            .iter()
            .map(|f| f.partition_point(|&v| v == 1.0) as i64)
            .collect();
        let zeros = factors
            .iter()
            .map(|f| f.partition_point(|&v| v > 0.0) as i64)
            .collect();
        Self {
            ones,
            zeros,
            factors,
        }
    }

    fn product_sum(&self, kernel: &LineKernel, base: &[i64], range: Range<usize>) -> f64 {
        let w = kernel.weights();
        let mut sum = 0.0;
        for k in range {
            let mut v = w[k];
            for (d, f) in self.factors.iter().enumerate() {
                v *= f[(base[d] + kernel.offsets(d)[k]) as usize];
            }
            sum += v;
        }
        sum
    }

    /// `sum_k w_k g(y_k)` over the in-box taps of the state at `base`.
    fn expectation(&self, kernel: &LineKernel, base: &[i64], zero: &[i64]) -> f64 {
        let r2 = kernel.range_within(base, zero, &self.zeros);
        if r2.start >= r2.end {
            return 0.0;
        }
        let r1 = kernel.range_within(base, zero, &self.ones);
        if r1.start >= r1.end {
            return self.product_sum(kernel, base, r2);
        }
        kernel.mass(r1.clone())
            + self.product_sum(kernel, base, r2.start..r1.start)
            + self.product_sum(kernel, base, r1.end..r2.end)
    }
}

/// Cells of `bound.target()` that some in-box tap from `sources` lands in.
fn reachable(
    bound: &BoundKernel<'_>,
    source: &Grid,
    shift: &[i64],
    sources: &[usize],
) -> Vec<usize> {
    let target = bound.target();
    let mut hit = vec![false; target.len()];
    let mut base = vec![0i64; source.dim()];
    for &idx in sources {
        let mut rest = idx;
        for d in 0..source.dim() {
            let stride = source.strides()[d];
            base[d] = (rest / stride) as i64 + shift[d];
            rest %= stride;
        }
        let b = bound.base_linear(&base);
        // Zero-weight taps count too: their cells still enter the sum.
        for k in bound.in_box(&base) {
            hit[(b + bound.linear_offset(k)) as usize] = true;
        }
    }
    hit.iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(i, _)| i)
        .collect()
}

fn origin_row(p: &PolytopeProblem, grid_1: &Grid) -> Result<TransitionRow> {
    transition_row(&vec![0.0; p.constraints()], &p.column(0), grid_1)
}

pub fn solve_with(p: &PolytopeProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    check_parameters(opts.lambda, opts.beta)?;
    if !p.is_normalized() {
        return Err(Error::invalid(
            "A",
            "last column has a zero entry; normalize the problem first",
        ));
    }
    let bound = error_bound(p, opts.lambda, opts.beta)?;
    let horizon = p.horizon();
    let m = p.constraints();
    let Lattice { grids, spacing } = lattice(p, opts)?;
    let s = SmoothingParams::new(opts.lambda, p.offsets().to_vec())?;
    let zones = RampZones::new(&grids[horizon], &s);
    let zero = vec![0i64; m];
    debug!(
        horizon,
        m,
        spacing,
        cells = grids[horizon].len(),
        "lattice built"
    );

    let row0 = origin_row(p, &grids[1])?;
    let mut escaped_max = row0.escaped_mass;
    let mut evaluated = 1usize;

    let estimate = if horizon == 1 {
        let strides = grids[1].strides();
        row0.entries
            .iter()
            .map(|&(c, w)| {
                let mut rest = c;
                let mut v = w;
                for d in 0..m {
                    v *= zones.factors[d][rest / strides[d]];
                    rest %= strides[d];
                }
                v
            })
            .sum()
    } else {
        // Reachable cells of Gamma_1..=Gamma_{T-2}; Gamma_{T-1} is evaluated
        // in full since the ramp step is cheap.
        let kernels: Vec<LineKernel> = (1..horizon)
            .map(|t| LineKernel::new(&p.column(t), &spacings(&grids[t + 1])))
            .collect();
        let shifts: Vec<Vec<i64>> = (1..horizon)
            .map(|t| lattice_shift(&grids[t], &grids[t + 1]))
            .collect::<Result<_>>()?;
        let bounds: Vec<BoundKernel<'_>> = (1..horizon)
            .map(|t| kernels[t - 1].bind(&grids[t + 1]))
            .collect();

        let mut masks: Vec<Option<Vec<usize>>> = vec![None; horizon];
        if opts.prune_unreachable {
            let mut first: Vec<usize> = row0.entries.iter().map(|(c, _)| *c).collect();
            first.sort_unstable();
            first.dedup();
            masks[1] = Some(first);
            for t in 2..horizon.saturating_sub(1) {
                let prev = masks[t - 1].as_deref().unwrap();
                masks[t] = Some(reachable(
                    &bounds[t - 2],
                    &grids[t - 1],
                    &shifts[t - 2],
                    prev,
                ));
            }
        }
        let states = |t: usize| match &masks[t] {
            Some(list) => States::Subset(list),
            None => States::All,
        };
        let count = |t: usize| masks[t].as_ref().map_or(grids[t].len(), Vec::len);

        let last = horizon - 1;
        let kernel = &kernels[last - 1];
        let bk = &bounds[last - 1];
        let (mut values, worst) = evaluate(&grids[last], &shifts[last - 1], states(last), |base| {
            let esc = kernel.escaped(bk.in_box(base));
            (zones.expectation(kernel, base, &zero), esc)
        });
        escaped_max = escaped_max.max(worst);
        evaluated += count(last);
        debug!(t = last, states = count(last), "terminal step");

        for t in (1..last).rev() {
            let bk = &bounds[t - 1];
            let next = values;
            let (v, worst) = evaluate_lines(bk, &grids[t], &shifts[t - 1], states(t), &next);
            values = v;
            escaped_max = escaped_max.max(worst);
            evaluated += count(t);
            debug!(t, states = count(t), "backward step");
        }
        row0.expectation(&values)
    };

    let grid_cells: Vec<usize> = grids.iter().map(Grid::len).collect();
    Ok(SolveReport {
        estimate,
        bound,
        spacing,
        cells_total: grid_cells.iter().sum(),
        grid_cells,
        states_evaluated: evaluated,
        escaped_mass_max: escaped_max,
        elapsed: start.elapsed(),
    })
}

/// Largest escaped mass over every state of `Gamma_{t-1}` for each step
/// `t = 1..=T` on the solver's lattice. Unlike [`SolveReport`], this covers
/// unreachable cells too.
pub fn escape_audit(p: &PolytopeProblem, opts: &SolveOptions) -> Result<Vec<f64>> {
    check_parameters(opts.lambda, opts.beta)?;
    let Lattice { grids, .. } = lattice(p, opts)?;
    let mut out = vec![origin_row(p, &grids[1])?.escaped_mass];
    for t in 1..p.horizon() {
        let (src, tgt) = (&grids[t], &grids[t + 1]);
        let kernel = LineKernel::new(&p.column(t), &spacings(tgt));
        let bk = kernel.bind(tgt);
        let shift = lattice_shift(src, tgt)?;
        let chunks = src.len().div_ceil(CHUNK);
        let worst = (0..chunks)
            .into_par_iter()
            .map(|ci| {
                let first = ci * CHUNK;
                let mut cur = Cursor::at(src, &shift, first);
                let mut worst = 0.0f64;
                for _ in first..(first + CHUNK).min(src.len()) {
                    worst = worst.max(kernel.escaped(bk.in_box(cur.base())));
                    cur.advance();
                }
                worst
            })
            .reduce(|| 0.0, f64::max);
        out.push(worst);
    }
    Ok(out)
}
