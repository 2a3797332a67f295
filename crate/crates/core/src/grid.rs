//! Truncation boxes and uniform partitions of them.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default cap on the number of cells a single grid may have.
pub const DEFAULT_CELL_BUDGET: u64 = 100_000_000;

/// Axis-aligned closed box `prod_i [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TruncationBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension(format!(
                "box bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(d) = (0..lo.len()).find(|&d| !(lo[d] <= hi[d])) {
            return Err(Error::invalid(
                "box",
                format!("lower bound exceeds upper bound in dimension {d}"),
            ));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-r, r]^m`.
    pub fn cube(radius: f64, m: usize) -> Result<Self> {
        Self::new(vec![-radius; m], vec![radius; m])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self, d: usize) -> f64 {
        self.lo[d]
    }

    pub fn hi(&self, d: usize) -> f64 {
        self.hi[d]
    }

    pub fn width(&self, d: usize) -> f64 {
        self.hi[d] - self.lo[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, v)| self.lo[d] <= *v && *v <= self.hi[d])
    }

    pub fn contains_box(&self, other: &TruncationBox) -> bool {
        (0..self.dim()).all(|d| self.lo[d] <= other.lo[d] && other.hi[d] <= self.hi[d])
    }
}

/// Half-width `sqrt(2 ln lambda)` of the step-one box; `H_t` has `t` times it.
pub fn box_radius(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::invalid(
            "lambda",
            format!("lambda must exceed 1, got {lambda}"),
        ));
    }
    Ok((2.0 * lambda.ln()).sqrt())
}

/// `H_t = [-t sqrt(2 ln lambda), t sqrt(2 ln lambda)]^m`; `H_0 = {0}^m`.
pub fn build_box(t: usize, lambda: f64, m: usize) -> Result<TruncationBox> {
    let r = box_radius(lambda)?;
    TruncationBox::cube(t as f64 * r, m)
}

/// Uniform rectangular partition of a box with representatives at cell
/// centers. Cells are half-open `[lo, lo + h)` except the last one along each
/// axis, which is closed. A zero-width axis has a single cell whose
/// representative is the axis value itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: TruncationBox,
    cells: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

/// Partition of `bx` fine enough that every point is within Euclidean
/// distance `beta` of its representative, using the default cell budget.
pub fn build_grid(bx: &TruncationBox, beta: f64) -> Result<Grid> {
    build_grid_with_budget(bx, beta, DEFAULT_CELL_BUDGET)
}

pub fn build_grid_with_budget(bx: &TruncationBox, beta: f64, budget: u64) -> Result<Grid> {
    let max_h = max_spacing(beta, bx.dim())?;
    let cells = (0..bx.dim())
        .map(|d| {
            let w = bx.width(d);
            if w == 0.0 {
                1
            } else {
                // The shave keeps exact fits (w / max_h integral) from
                // gaining a cell to rounding.
                ((w / max_h) * (1.0 - 1e-12)).ceil().max(1.0) as usize
            }
        })
        .collect();
    Grid::from_cells(bx.clone(), cells, budget)
}

/// Largest per-axis spacing `h` with `(h / 2) sqrt(m) <= beta`.
pub fn max_spacing(beta: f64, m: usize) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("beta must be positive, got {beta}"),
        ));
    }
    Ok(2.0 * beta / (m as f64).sqrt())
}

impl Grid {
    /// Grid with a prescribed spacing that must divide every axis of the box
    /// a whole number of times. Grids built this way over boxes whose corners
    /// sit on multiples of `spacing` share one lattice.
    pub fn with_spacing(bx: &TruncationBox, spacing: f64, budget: u64) -> Result<Grid> {
        if !(spacing > 0.0) {
            return Err(Error::invalid(
                "spacing",
                format!("must be positive, got {spacing}"),
            ));
        }
        let mut cells = Vec::with_capacity(bx.dim());
        for d in 0..bx.dim() {
            let w = bx.width(d);
            if w == 0.0 {
                cells.push(1);
                continue;
            }
            let ratio = w / spacing;
            let n = ratio.round();
            if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
                return Err(Error::Misaligned(format!(
                    "axis {d} of width {w} is not a multiple of {spacing}"
                )));
            }
            cells.push(n as usize);
        }
        Grid::from_cells(bx.clone(), cells, budget)
    }

    fn from_cells(bounds: TruncationBox, cells: Vec<usize>, budget: u64) -> Result<Grid> {
        let required: f64 = cells.iter().map(|&n| n as f64).product();
        if required > budget as f64 {
            return Err(Error::GridBudget {
                required,
                allowed: budget,
            });
        }
        let spacing = cells
            .iter()
            .enumerate()
            .map(|(d, &n)| bounds.width(d) / n as f64)
            .collect();
        // Row-major: the last axis varies fastest.
        let mut strides = vec![1; cells.len()];
        for d in (0..cells.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * cells[d + 1];
        }
        Ok(Grid {
            bounds,
            cells,
            spacing,
            strides,
        })
    }

    pub fn bounds(&self) -> &TruncationBox {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cells_per_dim(&self) -> &[usize] {
        &self.cells
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.spacing[d]
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Breakpoint `i` (of `0..=n`) along axis `d`.
    #[inline]
    pub fn breakpoint(&self, d: usize, i: usize) -> f64 {
        if i >= self.cells[d] {
            self.bounds.hi(d)
        } else {
            self.bounds.lo(d) + i as f64 * self.spacing[d]
        }
    }

    #[inline]
    pub fn representative_coord(&self, d: usize, i: usize) -> f64 {
        self.bounds.lo(d) + (i as f64 + 0.5) * self.spacing[d]
    }

    pub fn representative(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .enumerate()
            .map(|(d, i)| self.representative_coord(d, i))
            .collect()
    }

    /// Cell along axis `d` containing coordinate `x`, or `None` outside the box.
    #[inline]
    pub fn cell_coord(&self, d: usize, x: f64) -> Option<usize> {
        let (lo, hi) = (self.bounds.lo(d), self.bounds.hi(d));
        if !(lo <= x && x <= hi) {
            return None;
        }
        let n = self.cells[d];
        let h = self.spacing[d];
        if h == 0.0 {
            return Some(0);
        }
        let mut i = (((x - lo) / h).floor().max(0.0) as usize).min(n - 1);
        // Settle rounding against the same breakpoints the grid reports.
        if i + 1 < n && x >= self.breakpoint(d, i + 1) {
            i += 1;
        } else if i > 0 && x < self.breakpoint(d, i) {
            i -= 1;
        }
        Some(i)
    }

    /// Index of the cell containing `x`.
    pub fn project(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point of length {} against a {}-dimensional grid",
                x.len(),
                self.dim()
            )));
        }
        let mut idx = 0;
        for (d, &v) in x.iter().enumerate() {
            let i = self.cell_coord(d, v).ok_or_else(|| Error::OutsideBox {
                point: x.to_vec(),
                dim: d,
            })?;
            idx += i * self.strides[d];
        }
        Ok(idx)
    }

    #[inline]
    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for d in 0..self.dim() {
            out[d] = idx / self.strides[d];
            idx %= self.strides[d];
        }
        out
    }
}

/// One-step escape budget for the boxes `H_t`:
/// `sqrt(2) m max|a| / sqrt(ln lambda) * lambda^(-1 / max a^2)`.
pub fn alpha_for(lambda: f64, a: &Matrix) -> Result<f64> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::invalid(
            "lambda",
            format!("lambda must exceed 1, got {lambda}"),
        ));
    }
    let amax = a.max_abs();
    if amax == 0.0 {
        return Err(Error::invalid("A", "constraint matrix is zero"));
    }
    let m = a.rows() as f64;
    Ok(
        std::f64::consts::SQRT_2 * m * amax / lambda.ln().sqrt()
            * lambda.powf(-1.0 / (amax * amax)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boxes() {
        let b0 = build_box(0, 7.0, 3).unwrap();
        assert!((0..3).all(|d| b0.lo(d) == 0.0 && b0.hi(d) == 0.0));
        let b1 = build_box(1, std::f64::consts::E.powi(2), 1).unwrap();
        assert!((b1.lo(0) + 2.0).abs() < 1e-15 && (b1.hi(0) - 2.0).abs() < 1e-15);
        let b3 = build_box(3, 20.0, 2).unwrap();
        let r = 3.0 * (2.0 * 20f64.ln()).sqrt();
        assert!((b3.hi(1) - r).abs() < 1e-14);
        assert!((r - 7.3425).abs() < 1e-3);
        assert!(build_box(2, 1.0, 2).is_err());
        for t in 1..6 {
            assert!(build_box(t, 5.0, 2)
                .unwrap()
                .contains_box(&build_box(t - 1, 5.0, 2).unwrap()));
        }
    }

    #[test]
    fn exact_fit_grid() {
        let g = build_grid(&TruncationBox::cube(1.0, 1).unwrap(), 0.5).unwrap();
        assert_eq!(g.cells_per_dim(), &[2]);
        assert_eq!(g.representative(0), vec![-0.5]);
        assert_eq!(g.representative(1), vec![0.5]);
    }

    #[test]
    fn degenerate_grid() {
        let g = build_grid(&build_box(0, 9.0, 2).unwrap(), 0.1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.representative(0), vec![0.0, 0.0]);
        assert_eq!(g.project(&[0.0, 0.0]).unwrap(), 0);
        assert!(g.project(&[0.0, 1e-300]).is_err());
    }

    #[test]
    fn fine_grid_corners_within_beta() {
        let g = build_grid(&TruncationBox::cube(2.0, 2).unwrap(), 0.1).unwrap();
        let hmax = 0.2 / 2f64.sqrt();
        let n = (4.0 / hmax).ceil() as usize;
        assert_eq!(g.cells_per_dim(), &[n, n]);
        assert!((g.spacing(0) - 4.0 / n as f64).abs() < 1e-15);
        // Corners are the farthest points of a cell from its center.
        for idx in 0..g.len() {
            let rep = g.representative(idx);
            let mi = g.multi_index(idx);
            for corner in 0..4 {
                let c: Vec<f64> = (0..2)
                    .map(|d| g.breakpoint(d, mi[d] + ((corner >> d) & 1)))
                    .collect();
                let dist = ((c[0] - rep[0]).powi(2) + (c[1] - rep[1]).powi(2)).sqrt();
                assert!(dist <= 0.1 + 1e-12, "cell {idx}: {dist}");
            }
        }
    }

    #[test]
    fn breakpoint_tie_goes_to_upper_cell() {
        let g = build_grid(&TruncationBox::cube(1.0, 1).unwrap(), 0.125).unwrap();
        assert_eq!(g.cells_per_dim(), &[8]);
        for i in 1..8 {
            assert_eq!(g.project(&[g.breakpoint(0, i)]).unwrap(), i);
        }
        assert_eq!(g.project(&[1.0]).unwrap(), 7);
        assert_eq!(g.project(&[-1.0]).unwrap(), 0);
        for i in 0..8 {
            assert_eq!(g.project(&g.representative(i)).unwrap(), i);
        }
        assert!(matches!(
            g.project(&[1.0 + 1e-12]),
            Err(Error::OutsideBox { dim: 0, .. })
        ));
    }

    #[test]
    fn budget_guard() {
        let bx = TruncationBox::cube(10.0, 3).unwrap();
        match build_grid_with_budget(&bx, 0.001, 1_000_000) {
            Err(Error::GridBudget { required, allowed }) => {
                assert!(required > 1e9);
                assert_eq!(allowed, 1_000_000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lattice_spacing() {
        let r = 1.5;
        let h = r / 6.0;
        let g = Grid::with_spacing(
            &TruncationBox::cube(2.0 * r, 2).unwrap(),
            h,
            DEFAULT_CELL_BUDGET,
        )
        .unwrap();
        assert_eq!(g.cells_per_dim(), &[24, 24]);
        assert!(Grid::with_spacing(&TruncationBox::cube(1.0, 1).unwrap(), 0.3, 100).is_err());
    }

    #[test]
    fn alpha_values() {
        let a = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let want = 2.0 * 2f64.sqrt() / 20f64.ln().sqrt() / 20.0;
        assert!((alpha_for(20.0, &a).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.08171).abs() < 1e-5);
        let at_e = alpha_for(std::f64::consts::E, &a).unwrap();
        assert!((at_e - 2.0 * 2f64.sqrt() / std::f64::consts::E).abs() < 1e-14);
        assert!((at_e - 1.0405).abs() < 1e-4);
        let ladder: Vec<f64> = [2.0, 5.0, 10.0, 50.0, 1e3, 1e6]
            .iter()
            .map(|&l| alpha_for(l, &a).unwrap())
            .collect();
        assert!(ladder.windows(2).all(|w| w[1] < w[0]));
        assert!(alpha_for(1.0, &a).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_within_beta(
            beta in 0.02f64..0.5,
            radius in 0.1f64..3.0,
            m in 1usize..4,
            u in proptest::collection::vec(0.0f64..=1.0, 3),
        ) {
            let bx = TruncationBox::cube(radius, m).unwrap();
            let g = build_grid(&bx, beta).unwrap();
            let x: Vec<f64> = (0..m).map(|d| -radius + 2.0 * radius * u[d]).collect();
            let idx = g.project(&x).unwrap();
            let rep = g.representative(idx);
            let dist: f64 = x.iter().zip(&rep).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(dist <= beta * (1.0 + 1e-9));
            // Exactly one cell holds x: its own breakpoints bracket it.
            let mi = g.multi_index(idx);
            for d in 0..m {
                prop_assert!(g.breakpoint(d, mi[d]) <= x[d]);
                let upper = g.breakpoint(d, mi[d] + 1);
                prop_assert!(x[d] < upper || (mi[d] + 1 == g.cells_per_dim()[d] && x[d] <= upper));
            }
        }
    }
}
