use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::preprocess::PolytopeProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub estimate: f64,
    /// `sqrt(p (1 - p) / N)` at the estimate.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Hit-or-miss Monte Carlo estimate of `P(A z <= b)`, `z ~ N(0, I_T)`.
///
/// Draws come from ChaCha8 seeded with `seed`, one normal per coordinate in
/// order, so a given `(samples, seed)` always gives the same answer.
pub fn mc_estimate(p: &PolytopeProblem, samples: u64, seed: u64) -> Result<McResult> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; p.horizon()];
    let mut hits = 0u64;
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        if p.contains(&z) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let estimate = hits as f64 / n;
    Ok(McResult {
        estimate,
        std_error: (estimate * (1.0 - estimate) / n).sqrt(),
        samples,
        seed,
    })
}
