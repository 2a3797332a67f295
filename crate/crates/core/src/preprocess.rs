//! Reduction of a general Gaussian/polytope instance to the standard form the
//! solver works with: `Z ~ N(0, I)` and a constraint matrix whose last column
//! has no zero entries.
//!
//! Strict and non-strict inequalities are treated as the same constraint;
//! they differ only on a set of Gaussian measure zero.

use tracing::info;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Half-space description `{x : A x <= b}`. Rows are constraints and columns
/// are time steps of the dynamic program.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeProblem {
    a: Matrix,
    b: Vec<f64>,
}

impl PolytopeProblem {
    pub fn new(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::Dimension(format!(
                "constraint matrix must be at least 1x1, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!(
                "b has {} entries but A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        for i in 0..a.rows() {
            if a.row(i).iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "A",
                    format!("row {i} has a non-finite entry"),
                ));
            }
        }
        if let Some(i) = b.iter().position(|v| v.is_nan()) {
            return Err(Error::invalid("b", format!("entry {i} is NaN")));
        }
        Ok(Self { a, b })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], b: &[f64]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, b.to_vec())
    }

    /// Number of constraints, which is also the dimension of the DP state.
    pub fn constraints(&self) -> usize {
        self.a.rows()
    }

    /// Number of columns of `A`, i.e. the horizon of the DP.
    pub fn horizon(&self) -> usize {
        self.a.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    /// Column `t` (zero based) of `A`; it drives the transition into step `t + 1`.
    pub fn column(&self, t: usize) -> Vec<f64> {
        self.a.column(t)
    }

    pub fn last_column(&self) -> Vec<f64> {
        self.a.column(self.a.cols() - 1)
    }

    /// True when every entry of the last column is nonzero.
    pub fn is_normalized(&self) -> bool {
        self.last_column().iter().all(|v| *v != 0.0)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with_tolerance(x, 0.0)
    }

    /// Membership with every constraint relaxed by `tol` (may be negative to
    /// tighten instead).
    pub fn contains_with_tolerance(&self, x: &[f64], tol: f64) -> bool {
        debug_assert_eq!(x.len(), self.horizon());
        (0..self.constraints()).all(|i| {
            let lhs: f64 = self.a.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            lhs <= self.b[i] + tol
        })
    }
}

/// Mean and covariance of the Gaussian being integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    covariance: Matrix,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        if covariance.rows() != mean.len() || covariance.cols() != mean.len() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{} but mean has length {}",
                covariance.rows(),
                covariance.cols(),
                mean.len()
            )));
        }
        Ok(Self { mean, covariance })
    }

    pub fn standard(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            covariance: Matrix::identity(n),
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Rewrites `P(Z in {Ax <= b})` for `Z ~ N(mu, Sigma)` as the mass of
/// `{x : A C x <= b - A mu}` under `N(0, I)`, where `Sigma = C Cᵀ` with `C`
/// the lower Cholesky factor.
pub fn whiten(g: &GaussianSpec, p: &PolytopeProblem) -> Result<PolytopeProblem> {
    if g.dim() != p.horizon() {
        return Err(Error::Dimension(format!(
            "Gaussian has dimension {} but A has {} columns",
            g.dim(),
            p.horizon()
        )));
    }
    let c = g.covariance().cholesky()?;
    let a = p.matrix().matmul(&c)?;
    let shift = p.matrix().mul_vec(g.mean())?;
    let b = p.offsets().iter().zip(&shift).map(|(b, s)| b - s).collect();
    PolytopeProblem::new(a, b)
}

/// Result of [`normalize_last_column`].
#[derive(Debug, Clone)]
pub struct Normalized {
    pub problem: PolytopeProblem,
    /// Columns of the input that were identically zero and have been removed.
    pub dropped_columns: Vec<usize>,
    /// Orthogonal (and symmetric) change of variables applied to the kept
    /// columns: the new matrix is `A_kept * rotation`.
    pub rotation: Matrix,
}

impl Normalized {
    /// Maps a point of the input space to the coordinates of the normalized
    /// problem. Membership is preserved: `input.contains(x)` iff
    /// `normalized.contains(map_point(x))` up to rounding.
    pub fn map_point(&self, x: &[f64]) -> Vec<f64> {
        let kept: Vec<f64> = x
            .iter()
            .enumerate()
            .filter(|(j, _)| !self.dropped_columns.contains(j))
            .map(|(_, v)| *v)
            .collect();
        // The rotation is its own inverse.
        self.rotation
            .mul_vec(&kept)
            .expect("rotation matches the kept columns")
    }
}

/// Produces an equivalent problem under `N(0, I)` whose last column has no
/// zero entry.
///
/// Identically zero columns are dropped first (each contributes a free
/// standard normal factor of mass one). If the last column still contains a
/// zero, the kept coordinates are rotated by a Householder reflection that
/// sends the last basis vector to a direction `q` with `A q` free of zeros.
/// Rotations leave the standard Gaussian invariant, so the probability is
/// unchanged. A problem that is already normalized is returned as is.
///
/// Rows of `A` that are identically zero are not polytope constraints and are
/// rejected.
pub fn normalize_last_column(p: &PolytopeProblem) -> Result<Normalized> {
    let a = p.matrix();
    for i in 0..a.rows() {
        if a.row(i).iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateRow { row: i });
        }
    }

    let dropped: Vec<usize> = (0..a.cols())
        .filter(|&j| (0..a.rows()).all(|i| a[(i, j)] == 0.0))
        .collect();
    for &j in &dropped {
        info!(
            column = j,
            "dropping all-zero column; horizon shrinks by one"
        );
    }
    let kept = a.without_columns(&dropped);
    let n = kept.cols();

    if (0..kept.rows()).all(|i| kept[(i, n - 1)] != 0.0) {
        return Ok(Normalized {
            problem: PolytopeProblem::new(kept, p.offsets().to_vec())?,
            dropped_columns: dropped,
            rotation: Matrix::identity(n),
        });
    }

    // n >= 2 here: with a single column a zero entry would be a zero row.
    let q = best_direction(&kept);
    let rotation = householder_to(&q);
    let rotated = kept.matmul(&rotation)?;
    info!(?q, "rotated coordinates so the last column has no zeros");
    Ok(Normalized {
        problem: PolytopeProblem::new(rotated, p.offsets().to_vec())?,
        dropped_columns: dropped,
        rotation,
    })
}

/// Picks a unit vector maximizing `min_i |a_i . q|` over a fixed candidate
/// set: pairwise mixes of the last axis with each other axis, then a Halton
/// cloud over the hemisphere around the last axis.
fn best_direction(a: &Matrix) -> Vec<f64> {
    let n = a.cols();
    let score = |q: &[f64]| -> f64 {
        (0..a.rows())
            .map(|i| {
                a.row(i)
                    .iter()
                    .zip(q)
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
                    .abs()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = unit_axis(n, n - 1);
    let mut best_score = score(&best);
    let mut consider = |mut q: Vec<f64>| {
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        q.iter_mut().for_each(|v| *v /= norm);
        let s = score(&q);
        if s > best_score {
            best_score = s;
            best = q;
        }
    };
    for j in 0..n - 1 {
        for s in [1.0, -1.0, 0.5, -0.5, 2.0, -2.0] {
            let mut q = unit_axis(n, n - 1);
            q[j] = s;
            consider(q);
        }
    }
    const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for k in 1..=1024u32 {
        let mut q = unit_axis(n, n - 1);
        for j in 0..n - 1 {
            let base = PRIMES[j % PRIMES.len()];
            q[j] = 2.0 * radical_inverse(k + (j / PRIMES.len()) as u32 * 7919, base) - 1.0;
        }
        consider(q);
    }
    best
}

fn unit_axis(n: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = 1.0;
    e
}

fn radical_inverse(mut k: u32, base: u32) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

/// Householder reflection `H = I - 2 v vᵀ / vᵀv` with `v = e_n - q`, so that
/// `H e_n = q`. `H` is symmetric and orthogonal.
fn householder_to(q: &[f64]) -> Matrix {
    let n = q.len();
    let mut v = q.iter().map(|x| -x).collect::<Vec<_>>();
    v[n - 1] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut h = Matrix::identity(n);
    if vv < 1e-30 {
        return h;
    }
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn sample_membership_agrees(p: &PolytopeProblem, norm: &Normalized, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = p.horizon();
        let mut disagreements = 0;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n)
                .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let y = norm.map_point(&x);
            let inside = p.contains(&x);
            if inside != norm.problem.contains(&y) {
                // Only tolerated inside the boundary band.
                let near =
                    p.contains_with_tolerance(&x, 1e-9) != p.contains_with_tolerance(&x, -1e-9);
                assert!(near, "membership differs at {x:?}");
                disagreements += 1;
            }
        }
        assert!(disagreements < 5);
    }

    #[test]
    fn whiten_identity_is_noop() {
        let p = PolytopeProblem::from_rows(&[[1.0, -2.0], [0.5, 3.0]], &[1.0, 2.0]).unwrap();
        let w = whiten(&GaussianSpec::standard(2), &p).unwrap();
        assert_eq!(w, p);
    }

    #[test]
    fn whiten_pure_shift() {
        let p = PolytopeProblem::from_rows(&[[1.0, 0.0], [0.0, 1.0]], &[0.0, 0.0]).unwrap();
        let g = GaussianSpec::new(vec![1.0, 0.0], Matrix::identity(2)).unwrap();
        let w = whiten(&g, &p).unwrap();
        assert_eq!(w.matrix(), p.matrix());
        assert_eq!(w.offsets(), &[-1.0, 0.0]);
    }

    #[test]
    fn whiten_scales_columns() {
        let p = PolytopeProblem::from_rows(&[[1.0, 0.0], [0.0, 1.0]], &[2.0, 1.0]).unwrap();
        let cov = Matrix::from_rows(&[[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let g = GaussianSpec::new(vec![0.0, 0.0], cov).unwrap();
        let w = whiten(&g, &p).unwrap();
        assert_eq!(w.matrix().to_rows(), vec![vec![2.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(w.offsets(), &[2.0, 1.0]);
    }

    #[test]
    fn whiten_rejects_indefinite_covariance() {
        let p = PolytopeProblem::from_rows(&[[1.0, 0.0]], &[0.0]).unwrap();
        let cov = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        let g = GaussianSpec::new(vec![0.0, 0.0], cov).unwrap();
        let err = whiten(&g, &p).unwrap_err();
        assert_eq!(
            err,
            Error::NotPositiveDefinite {
                pivot: 1,
                value: -3.0
            }
        );
        assert!(err.to_string().contains("pivot 1"));
    }

    #[test]
    fn normalized_problem_is_fixed_point() {
        let p = PolytopeProblem::from_rows(&[[1.0], [1.0]], &[0.0, 0.0]).unwrap();
        let n = normalize_last_column(&p).unwrap();
        assert_eq!(n.problem, p);
        assert!(n.dropped_columns.is_empty());
        assert_eq!(n.rotation, Matrix::identity(1));
    }

    #[test]
    fn zero_column_is_dropped() {
        let p = PolytopeProblem::from_rows(&[[1.0, 0.0], [2.0, 0.0]], &[1.0, 1.0]).unwrap();
        let n = normalize_last_column(&p).unwrap();
        assert_eq!(n.dropped_columns, vec![1]);
        assert_eq!(n.problem.matrix().to_rows(), vec![vec![1.0], vec![2.0]]);
        assert_eq!(n.problem.offsets(), &[1.0, 1.0]);
    }

    #[test]
    fn interior_zero_column_is_dropped() {
        let p =
            PolytopeProblem::from_rows(&[[1.0, 0.0, 1.0], [2.0, 0.0, -1.0]], &[1.0, 1.0]).unwrap();
        let n = normalize_last_column(&p).unwrap();
        assert_eq!(n.dropped_columns, vec![1]);
        assert_eq!(n.problem.horizon(), 2);
        assert!(n.problem.is_normalized());
    }

    #[test]
    fn identity_constraints_get_nonzero_last_column() {
        let p = PolytopeProblem::from_rows(&[[1.0, 0.0], [0.0, 1.0]], &[1.0, 1.0]).unwrap();
        let n = normalize_last_column(&p).unwrap();
        assert!(n.problem.is_normalized());
        let r = &n.rotation;
        let rtr = r.matmul(&r.transpose()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((rtr[(i, j)] - want).abs() < 1e-14);
            }
        }
        sample_membership_agrees(&p, &n, 7);
    }

    #[test]
    fn zero_row_is_rejected() {
        let p = PolytopeProblem::from_rows(&[[1.0, 1.0], [0.0, 0.0]], &[1.0, 1.0]).unwrap();
        assert_eq!(
            normalize_last_column(&p).unwrap_err(),
            Error::DegenerateRow { row: 1 }
        );
    }

    #[test]
    fn sparse_last_column_in_higher_dimension() {
        let p = PolytopeProblem::from_rows(
            &[
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.3, -0.2, 0.0, 1.0],
            ],
            &[0.5, 1.0, -0.2, 0.1],
        )
        .unwrap();
        let n = normalize_last_column(&p).unwrap();
        assert!(n.problem.is_normalized());
        let min = n
            .problem
            .last_column()
            .iter()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        assert!(min > 0.1, "poorly conditioned last column: {min}");
        sample_membership_agrees(&p, &n, 11);
    }
}
