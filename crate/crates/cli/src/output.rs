//! Number formatting and the sweep CSV.

use gauss_polytope_core::ErrorBudget;

/// `x` rounded to 12 significant digits, printed in its shortest form.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}")
        .parse()
        .expect("scientific float round-trips");
    format!("{rounded}")
}

pub const CSV_HEADER: &str = "n,lambda,beta,estimate,bound_theta,bound_alpha,bound_beta,bound_total,mc_ref,mc_sigma,abs_err_vs_mc,cells_total,seconds";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: u64,
    pub lambda: f64,
    pub beta: f64,
    pub estimate: f64,
    pub bound: ErrorBudget,
    pub mc_ref: f64,
    pub mc_sigma: f64,
    pub cells_total: usize,
    pub seconds: f64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        [
            self.n.to_string(),
            sig12(self.lambda),
            sig12(self.beta),
            sig12(self.estimate),
            sig12(self.bound.theta_term),
            sig12(self.bound.alpha_term),
            sig12(self.bound.beta_term),
            sig12(self.bound.total),
            sig12(self.mc_ref),
            sig12(self.mc_sigma),
            sig12((self.estimate - self.mc_ref).abs()),
            self.cells_total.to_string(),
            sig12(self.seconds),
        ]
        .join(",")
    }
}

pub fn csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// `name value` lines with the values aligned.
pub fn report(lines: &[(&str, String)]) -> String {
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0) + 2;
    lines
        .iter()
        .map(|(k, v)| format!("{k:<width$}{v}\n"))
        .collect()
}
