//! Smoothed terminal indicator and the Lipschitz constants that feed the
//! discretization error bound.

use crate::error::{Error, Result};

/// Sharpness `lambda` and offset `b` of the ramp-product approximation of
/// `1{x < b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingParams {
    lambda: f64,
    b: Vec<f64>,
}

impl SmoothingParams {
    pub fn new(lambda: f64, b: Vec<f64>) -> Result<Self> {
        if !(lambda > 1.0) || !lambda.is_finite() {
            return Err(Error::invalid(
                "lambda",
                format!("lambda must exceed 1, got {lambda}"),
            ));
        }
        Ok(Self { lambda, b })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// One ramp factor: 1 below `b_i - 1/lambda`, `-lambda (x - b_i)` on the
    /// ramp, 0 from `b_i` on. The two breakpoints take the limits from the
    /// ramp, so the factor is continuous.
    #[inline]
    pub fn ramp(&self, i: usize, x: f64) -> f64 {
        ramp(self.lambda, self.b[i], x)
    }
}

#[inline]
pub(crate) fn ramp(lambda: f64, b: f64, x: f64) -> f64 {
    if x >= b {
        0.0
    } else if x <= b - 1.0 / lambda {
        1.0
    } else {
        (-lambda * (x - b)).clamp(0.0, 1.0)
    }
}

/// `g_{lambda,b}(x)`, the product of the per-coordinate ramps.
pub fn g_eval(x: &[f64], s: &SmoothingParams) -> f64 {
    debug_assert_eq!(x.len(), s.dim());
    let mut out = 1.0;
    for (i, &xi) in x.iter().enumerate() {
        out *= s.ramp(i, xi);
        if out == 0.0 {
            break;
        }
    }
    out
}

/// Sharp indicator `1{x < b}` taken componentwise.
pub fn strict_indicator(x: &[f64], b: &[f64]) -> f64 {
    if x.iter().zip(b).all(|(x, b)| x < b) {
        1.0
    } else {
        0.0
    }
}

/// Whether `x` lies in the smoothing region, the set where the ramp product
/// and the sharp indicator disagree.
pub fn in_smoothing_region(x: &[f64], s: &SmoothingParams) -> bool {
    g_eval(x, s) != strict_indicator(x, s.offsets())
}

/// Lipschitz constant of `f1 g + f2 (1 - g)` for bounded Lipschitz `f1, f2`
/// on an `m`-dimensional space.
pub fn lipschitz_h_tilde(
    lambda: f64,
    m: usize,
    l_f1: f64,
    l_f2: f64,
    f1_sup: f64,
    f2_sup: f64,
) -> f64 {
    l_f1 + l_f2 + 2.0 * lambda * m as f64 * f1_sup.max(f2_sup)
}

/// Regularity constants of the underlying MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MdpConstants {
    /// Running cost.
    pub l_c: f64,
    /// Control-set map (Hausdorff).
    pub l_psi: f64,
    /// Transition kernel acting on Lipschitz functions.
    pub l_q: f64,
    /// Lipschitz part of the terminal cost.
    pub l_h: f64,
    pub l_f1: f64,
    pub l_f2: f64,
    pub f1_sup: f64,
    pub f2_sup: f64,
}

impl MdpConstants {
    /// Constants of the polytope instance: no running cost, no controls, a
    /// kernel with `L_q = 1`, and terminal cost `1{x <= b}` (so `f1 = 1`,
    /// `f2 = 0`).
    pub const POLYTOPE: MdpConstants = MdpConstants {
        l_c: 0.0,
        l_psi: 0.0,
        l_q: 1.0,
        l_h: 0.0,
        l_f1: 0.0,
        l_f2: 0.0,
        f1_sup: 1.0,
        f2_sup: 0.0,
    };
}

/// Closed-form Lipschitz constant of the smoothed cost-to-go at step `t` of a
/// horizon-`horizon` problem.
pub fn lipschitz_j_tilde(t: usize, horizon: usize, c: &MdpConstants, lambda: f64, m: usize) -> f64 {
    assert!(t <= horizon, "t = {t} beyond horizon {horizon}");
    let growth = c.l_q * (1.0 + c.l_psi);
    let steps = (horizon - t) as i32;
    let terminal = lipschitz_h_tilde(lambda, m, c.l_f1, c.l_f2, c.f1_sup, c.f2_sup) + c.l_h;
    let geometric: f64 = (1..=steps).map(|i| growth.powi(i - 1)).sum();
    growth.powi(steps) * terminal + c.l_c * (1.0 + c.l_psi) * geometric
}

/// Per-step Lipschitz constants, built by the backward recursion
/// `L_t = (L_c + L_q L_{t+1}) (1 + L_psi)` from `L_T = L_h_tilde + L_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzLedger {
    pub constants: MdpConstants,
    pub lambda: f64,
    pub m: usize,
    pub l_h_tilde: f64,
    /// Indexed by `t = 0..=T`.
    pub l_j_tilde: Vec<f64>,
}

impl LipschitzLedger {
    pub fn new(constants: MdpConstants, lambda: f64, m: usize, horizon: usize) -> Self {
        let c = constants;
        let l_h_tilde = lipschitz_h_tilde(lambda, m, c.l_f1, c.l_f2, c.f1_sup, c.f2_sup);
        let mut l_j_tilde = vec![0.0; horizon + 1];
        l_j_tilde[horizon] = l_h_tilde + c.l_h;
        for t in (0..horizon).rev() {
            l_j_tilde[t] = (c.l_c + c.l_q * l_j_tilde[t + 1]) * (1.0 + c.l_psi);
        }
        Self {
            constants,
            lambda,
            m,
            l_h_tilde,
            l_j_tilde,
        }
    }

    pub fn polytope(lambda: f64, m: usize, horizon: usize) -> Self {
        Self::new(MdpConstants::POLYTOPE, lambda, m, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.l_j_tilde.len() - 1
    }

    /// Coefficient multiplying `beta` in the discretization error at `t = 0`:
    /// `L_h + L_h_tilde + sum_{i=1}^{T} L_{J~_{i-1}}`.
    pub fn beta_coefficient(&self) -> f64 {
        let horizon = self.horizon();
        self.constants.l_h + self.l_h_tilde + self.l_j_tilde[..horizon].iter().sum::<f64>()
    }
}
