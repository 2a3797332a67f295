//! One-dimensional Gaussian machinery and the rank-one transition kernel
//! `x -> x + a eps`, `eps ~ N(0, 1)`.
//!
//! Because the noise enters along a single direction, the law of the next
//! state is supported on the line `{x + a eps}`. The probability of landing
//! in each grid cell is therefore an exact difference of normal CDF values
//! between consecutive breakpoint crossings of that line; no
//! multi-dimensional quadrature is needed.

mod line;
mod normal;

pub use line::{lattice_shift, BoundKernel, LineKernel};
pub use normal::{gaussian_tail_bound, normal_mass, std_normal_cdf, std_normal_pdf, std_normal_sf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::smoothing::{in_smoothing_region, SmoothingParams};

/// Noise values beyond `+-EPS_TRUNCATION` are never swept; their mass
/// (about `2.3e-19`) is reported as escaped.
pub const EPS_TRUNCATION: f64 = 9.0;

/// Crossings closer than this (in units of `eps`) are merged.
pub(crate) const MERGE_TOL: f64 = 1e-14;

/// Distribution of the destination cell of one transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    /// `(cell index, probability)` in order of increasing `eps`.
    pub entries: Vec<(usize, f64)>,
    /// Mass that leaves the target box (or the swept noise range).
    pub escaped_mass: f64,
}

impl TransitionRow {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum::<f64>() + self.escaped_mass
    }

    /// `sum_k p_k values[cell_k]`, summed in row order; escaped mass counts
    /// as zero.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, p)| p * values[c]).sum()
    }
}

/// Tail mass outside the swept noise range.
pub(crate) fn truncated_tail() -> f64 {
    2.0 * std_normal_sf(EPS_TRUNCATION)
}

/// Sorts the crossing points, adds the truncation ends, merges near
/// duplicates and calls `visit(mid, mass)` for each elementary interval.
pub(crate) fn sweep(mut cuts: Vec<f64>, mut visit: impl FnMut(f64, f64)) {
    cuts.retain(|e| e.abs() < EPS_TRUNCATION);
    cuts.push(-EPS_TRUNCATION);
    cuts.push(EPS_TRUNCATION);
    cuts.sort_unstable_by(f64::total_cmp);
    cuts.dedup_by(|next, prev| *next - *prev <= MERGE_TOL);
    // dedup may have merged the upper end into a cut just below it.
    if let Some(last) = cuts.last_mut() {
        *last = EPS_TRUNCATION;
    }
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        visit(0.5 * (lo + hi), normal_mass(lo, hi));
    }
}

/// Exact distribution over the cells of `target` of the state
/// `x + a eps`.
///
/// Coordinates with `a_i = 0` do not move and must already lie inside the
/// target box; the nested truncation boxes guarantee this, so a violation
/// points at a box-construction bug and is reported as an error.
pub fn transition_row(x: &[f64], a: &[f64], target: &Grid) -> Result<TransitionRow> {
    let m = target.dim();
    if x.len() != m || a.len() != m {
        return Err(Error::Dimension(format!(
            "state of length {} and direction of length {} against a {m}-dimensional grid",
            x.len(),
            a.len()
        )));
    }
    let mut fixed = vec![0usize; m];
    for d in 0..m {
        if a[d] == 0.0 {
            fixed[d] = target
                .cell_coord(d, x[d])
                .ok_or_else(|| Error::OutsideBox {
                    point: x.to_vec(),
                    dim: d,
                })?;
        }
    }

    let mut cuts = Vec::new();
    for d in (0..m).filter(|&d| a[d] != 0.0) {
        let bx = target.bounds();
        let h = target.spacing(d);
        if h == 0.0 {
            cuts.push((bx.lo(d) - x[d]) / a[d]);
            continue;
        }
        let reach = EPS_TRUNCATION * a[d].abs();
        let n = target.cells_per_dim()[d];
        let first = (((x[d] - reach - bx.lo(d)) / h).floor().max(0.0) as usize).min(n);
        let last = (((x[d] + reach - bx.lo(d)) / h).ceil().max(0.0) as usize).min(n);
        for i in first..=last {
            cuts.push((target.breakpoint(d, i) - x[d]) / a[d]);
        }
    }

    let strides = target.strides();
    let mut entries: Vec<(usize, f64)> = Vec::new();
    let mut escaped = truncated_tail();
    sweep(cuts, |mid, mass| {
        let mut idx = 0;
        for d in 0..m {
            let i = if a[d] == 0.0 {
                fixed[d]
            } else {
                match target.cell_coord(d, x[d] + a[d] * mid) {
                    Some(i) => i,
                    None => {
                        escaped += mass;
                        return;
                    }
                }
            };
            idx += i * strides[d];
        }
        match entries.last_mut() {
            Some((c, p)) if *c == idx => *p += mass,
            _ => entries.push((idx, mass)),
        }
    });
    Ok(TransitionRow {
        entries,
        escaped_mass: escaped,
    })
}

/// Exact probability that `x + a eps` lands in the smoothing region of `s`,
/// from a sweep over the region's slab boundaries `b_i - 1/lambda` and `b_i`.
pub fn smoothing_region_mass(x: &[f64], a: &[f64], s: &SmoothingParams) -> f64 {
    let b = s.offsets();
    let width = 1.0 / s.lambda();
    let mut cuts = Vec::with_capacity(2 * b.len());
    for i in (0..b.len()).filter(|&i| a[i] != 0.0) {
        cuts.push((b[i] - width - x[i]) / a[i]);
        cuts.push((b[i] - x[i]) / a[i]);
    }
    let mut y = x.to_vec();
    let mut total = 0.0;
    sweep(cuts, |mid, mass| {
        for i in 0..y.len() {
            y[i] = x[i] + a[i] * mid;
        }
        if in_smoothing_region(&y, s) {
            total += mass;
        }
    });
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, TruncationBox};
    use proptest::prelude::*;

    fn one_dim_grid(lo: f64, hi: f64, cells: usize) -> Grid {
        let bx = TruncationBox::new(vec![lo], vec![hi]).unwrap();
        let beta = (hi - lo) / cells as f64 / 2.0;
        let g = build_grid(&bx, beta).unwrap();
        assert_eq!(g.cells_per_dim(), &[cells]);
        g
    }

    #[test]
    fn single_cell_row() {
        let g = one_dim_grid(-10.0, 10.0, 1);
        let row = transition_row(&[0.0], &[1.0], &g).unwrap();
        assert_eq!(row.entries.len(), 1);
        assert_eq!(row.entries[0].0, 0);
        assert!((row.entries[0].1 - 1.0).abs() < 1e-15);
        assert!(row.escaped_mass < 1e-18);
        assert!((row.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_split() {
        let g = one_dim_grid(-10.0, 10.0, 2);
        let row = transition_row(&[0.0], &[1.0], &g).unwrap();
        assert_eq!(row.entries.len(), 2);
        assert!((row.entries[0].1 - 0.5).abs() < 1e-10);
        assert!((row.entries[1].1 - 0.5).abs() < 1e-10);
        assert!(row.escaped_mass < 1e-18);
    }

    #[test]
    fn zero_direction_outside_box_is_an_error() {
        let g = build_grid(&TruncationBox::cube(1.0, 2).unwrap(), 0.25).unwrap();
        assert!(matches!(
            transition_row(&[2.0, 0.0], &[0.0, 0.0], &g),
            Err(Error::OutsideBox { dim: 0, .. })
        ));
        let row = transition_row(&[0.3, -0.2], &[0.0, 0.0], &g).unwrap();
        assert_eq!(
            row.entries,
            vec![(g.project(&[0.3, -0.2]).unwrap(), row.entries[0].1)]
        );
        assert!((row.entries[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partially_frozen_direction() {
        let g = build_grid(&TruncationBox::cube(3.0, 2).unwrap(), 0.2).unwrap();
        let row = transition_row(&[0.4, -1.1], &[0.0, 1.5], &g).unwrap();
        let col = g.cell_coord(0, 0.4).unwrap();
        for &(c, _) in &row.entries {
            assert_eq!(g.multi_index(c)[0], col);
        }
        let inside = normal_mass((-3.0 + 1.1) / 1.5, (3.0 + 1.1) / 1.5);
        assert!((row.total() - 1.0).abs() < 1e-14);
        assert!((row.escaped_mass - (1.0 - inside)).abs() < 1e-14);
    }

    #[test]
    fn smoothing_mass_of_a_single_slab() {
        let s = SmoothingParams::new(10.0, vec![0.0]).unwrap();
        let got = smoothing_region_mass(&[0.0], &[1.0], &s);
        assert!((got - normal_mass(-0.1, 0.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn rows_are_normalized_and_on_the_line(
            x in proptest::collection::vec(-2.5f64..2.5, 2),
            a in proptest::collection::vec(-2.0f64..2.0, 2),
            beta in 0.05f64..0.6,
        ) {
            let g = build_grid(&TruncationBox::cube(3.0, 2).unwrap(), beta).unwrap();
            let row = transition_row(&x, &a, &g).unwrap();
            prop_assert!((row.total() - 1.0).abs() < 1e-10);
            prop_assert!(row.entries.iter().all(|&(_, p)| p >= 0.0));
            // Each charged cell meets the line x + a eps.
            for &(c, p) in &row.entries {
                if p == 0.0 { continue; }
                let mi = g.multi_index(c);
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for d in 0..2 {
                    let (l, u) = (g.breakpoint(d, mi[d]), g.breakpoint(d, mi[d] + 1));
                    if a[d] == 0.0 {
                        prop_assert!(l <= x[d] && x[d] <= u);
                    } else {
                        let (e0, e1) = ((l - x[d]) / a[d], (u - x[d]) / a[d]);
                        lo = lo.max(e0.min(e1));
                        hi = hi.min(e0.max(e1));
                    }
                }
                prop_assert!(lo <= hi + 1e-12);
            }
        }
    }
}
