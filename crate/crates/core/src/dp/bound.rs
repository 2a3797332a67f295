use crate::error::{Error, Result};
use crate::grid::alpha_for;
use crate::preprocess::PolytopeProblem;
use crate::smoothing::LipschitzLedger;

/// A-priori supremum-norm error bound of the discretized program, split into
/// its smoothing, truncation and discretization parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    /// Mass near the polytope boundary that the ramp misrepresents.
    pub theta_term: f64,
    /// Mass lost through the truncation boxes over the horizon.
    pub alpha_term: f64,
    /// Projection onto cell representatives.
    pub beta_term: f64,
    pub total: f64,
}

pub(crate) fn check_parameters(lambda: f64, beta: f64) -> Result<()> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::invalid(
            "lambda",
            format!("lambda must exceed 1, got {lambda}"),
        ));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("beta must be positive, got {beta}"),
        ));
    }
    Ok(())
}

/// Error bound for `|P(Z in P) - J_0(0)|` at smoothing `lambda` and
/// partition radius `beta`:
///
/// ```text
/// 2m / (min_i |a_iT| lambda)
///   + sqrt(2) m T max|a| / sqrt(ln lambda) * lambda^(-1 / max a^2)
///   + 2 m lambda beta (T + 1)
/// ```
pub fn error_bound(p: &PolytopeProblem, lambda: f64, beta: f64) -> Result<ErrorBudget> {
    check_parameters(lambda, beta)?;
    let last = p.last_column();
    let min_last = last.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
    if min_last == 0.0 {
        return Err(Error::invalid(
            "A",
            "last column has a zero entry; normalize the problem first",
        ));
    }
    let m = p.constraints() as f64;
    let horizon = p.horizon() as f64;
    let amax = p.matrix().max_abs();

    let theta_term = 2.0 * m / (min_last * lambda);
    let alpha_term = std::f64::consts::SQRT_2 * m * horizon * amax / lambda.ln().sqrt()
        * (1.0 / lambda).powf(1.0 / (amax * amax));
    let beta_term = 2.0 * m * lambda * beta * (horizon + 1.0);

    debug_assert!({
        let per_step = alpha_for(lambda, p.matrix()).unwrap();
        (alpha_term - horizon * per_step).abs() <= 1e-12 * alpha_term
    });
    debug_assert!({
        let ledger = LipschitzLedger::polytope(lambda, p.constraints(), p.horizon());
        let general = beta * ledger.beta_coefficient();
        (general - beta_term).abs() <= 1e-12 * beta_term
    });

    Ok(ErrorBudget {
        theta_term,
        alpha_term,
        beta_term,
        total: theta_term + alpha_term + beta_term,
    })
}
