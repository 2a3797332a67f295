use std::time::Instant;

use gauss_polytope_core::oracle::MAX_QUADRATURE_HORIZON;
use gauss_polytope_core::{
    error_bound, mc_estimate, quadrature_estimate, solve_with, SolveOptions,
};
use tracing::info;

use crate::output::{csv, report, sig12, SweepRow};
use crate::problem::{load, Loaded};
use crate::{CliError, Common, OracleArgs, SolveArgs, SweepArgs};

fn setup(common: &Common) -> Result<Loaded, CliError> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Invalid("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Resource(format!("threads: {e}")))?;
    }
    load(&common.problem)
}

fn lambda_beta(args: &SolveArgs) -> Result<(f64, f64), CliError> {
    match (args.n, args.lambda, args.beta) {
        (Some(n), _, _) => Ok(((n as f64).sqrt(), 1.0 / n as f64)),
        (None, Some(l), Some(b)) => Ok((l, b)),
        _ => Err(CliError::Invalid(
            "n: give either --n or both --lambda and --beta".into(),
        )),
    }
}

fn options(lambda: f64, beta: f64, budget: Option<u64>) -> SolveOptions {
    let mut opts = SolveOptions::new(lambda, beta);
    if let Some(b) = budget {
        opts.cell_budget = b;
    }
    opts
}

pub fn integrate(args: &SolveArgs) -> Result<String, CliError> {
    let loaded = setup(&args.common)?;
    let (lambda, beta) = lambda_beta(args)?;
    let r = solve_with(
        &loaded.normalized.problem,
        &options(lambda, beta, args.cell_budget),
    )?;
    let grids: Vec<String> = r.grid_cells.iter().map(usize::to_string).collect();
    Ok(report(&[
        ("estimate", sig12(r.estimate)),
        ("bound_theta", sig12(r.bound.theta_term)),
        ("bound_alpha", sig12(r.bound.alpha_term)),
        ("bound_beta", sig12(r.bound.beta_term)),
        ("bound_total", sig12(r.bound.total)),
        ("lambda", sig12(lambda)),
        ("beta", sig12(beta)),
        ("spacing", sig12(r.spacing)),
        ("grid_cells", grids.join(",")),
        ("cells_total", r.cells_total.to_string()),
        ("states_evaluated", r.states_evaluated.to_string()),
        ("escaped_mass_max", sig12(r.escaped_mass_max)),
        ("seconds", sig12(r.elapsed.as_secs_f64())),
    ]))
}

pub fn bound(args: &SolveArgs) -> Result<String, CliError> {
    let loaded = setup(&args.common)?;
    let (lambda, beta) = lambda_beta(args)?;
    let b = error_bound(&loaded.normalized.problem, lambda, beta)?;
    Ok(report(&[
        ("lambda", sig12(lambda)),
        ("beta", sig12(beta)),
        ("bound_theta", sig12(b.theta_term)),
        ("bound_alpha", sig12(b.alpha_term)),
        ("bound_beta", sig12(b.beta_term)),
        ("bound_total", sig12(b.total)),
    ]))
}

fn float_list(field: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Invalid(format!("{field}: `{s}`: {e}")))
        })
        .collect()
}

fn sweep_ns(text: &str) -> Result<Vec<u64>, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Invalid("sweep: empty sweep list".into()));
    }
    text.split(',')
        .map(|s| {
            let n: u64 = s
                .trim()
                .parse()
                .map_err(|e| CliError::Invalid(format!("sweep: `{s}`: {e}")))?;
            if n <= 1 {
                return Err(CliError::Invalid(format!(
                    "sweep: n = {n} gives lambda = sqrt(n) <= 1; lambda must exceed 1"
                )));
            }
            Ok(n)
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Result<String, CliError> {
    let ns = sweep_ns(&args.sweep)?;
    let per_n = |field: &str, list: &Option<String>, default: fn(f64) -> f64| match list {
        None => Ok(ns.iter().map(|&n| default(n as f64)).collect::<Vec<f64>>()),
        Some(text) => {
            let v = float_list(field, text)?;
            if v.len() != ns.len() {
                return Err(CliError::Invalid(format!(
                    "{field}: {} values for {} sweep points",
                    v.len(),
                    ns.len()
                )));
            }
            Ok(v)
        }
    };
    let lambdas = per_n("lambdas", &args.lambdas, f64::sqrt)?;
    let betas = per_n("betas", &args.betas, |n| 1.0 / n)?;
    let loaded = setup(&args.common)?;

    let (mc_ref, mc_sigma) = match args.reference {
        Some(v) => (v, 0.0),
        None => {
            let mc = mc_estimate(&loaded.standard, args.samples, args.seed)?;
            (mc.estimate, mc.std_error)
        }
    };

    let mut rows = Vec::with_capacity(ns.len());
    for ((&n, &lambda), &beta) in ns.iter().zip(&lambdas).zip(&betas) {
        let start = Instant::now();
        let r = solve_with(
            &loaded.normalized.problem,
            &options(lambda, beta, args.cell_budget),
        )?;
        let seconds = if args.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        info!(n, estimate = r.estimate, "sweep point");
        rows.push(SweepRow {
            n,
            lambda,
            beta,
            estimate: r.estimate,
            bound: r.bound,
            mc_ref,
            mc_sigma,
            cells_total: r.cells_total,
            seconds,
        });
    }
    let text = csv(&rows);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| {
                CliError::Resource(format!("out: cannot write {}: {e}", path.display()))
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn oracle(args: &OracleArgs) -> Result<String, CliError> {
    let loaded = setup(&args.common)?;
    let p = &loaded.standard;
    let mc = mc_estimate(p, args.samples, args.seed)?;
    let half = 1.96 * mc.std_error;
    let mut lines = vec![
        ("mc_estimate", sig12(mc.estimate)),
        ("mc_std_error", sig12(mc.std_error)),
        (
            "mc_ci95",
            format!(
                "{} {}",
                sig12(mc.estimate - half),
                sig12(mc.estimate + half)
            ),
        ),
        ("samples", mc.samples.to_string()),
        ("seed", mc.seed.to_string()),
    ];
    if p.horizon() <= MAX_QUADRATURE_HORIZON {
        let q = quadrature_estimate(p, args.tol)?;
        lines.push(("quadrature", sig12(q)));
        lines.push(("discrepancy", sig12((mc.estimate - q).abs())));
    } else {
        lines.push((
            "quadrature",
            format!("skipped (T>{MAX_QUADRATURE_HORIZON})"),
        ));
    }
    Ok(report(&lines))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_list_parsing() {
        assert_eq!(sweep_ns("25, 100,400").unwrap(), vec![25, 100, 400]);
        assert!(matches!(sweep_ns(""), Err(CliError::Invalid(_))));
        assert!(matches!(sweep_ns("1"), Err(CliError::Invalid(_))));
        assert!(matches!(sweep_ns("4,x"), Err(CliError::Invalid(_))));
    }
}
