//! Continuous relaxation of the average-rate problem over one block of
//! `m` steps, and the block decomposition of an expansion-rate sequence.

use crate::error::{Error, Result};
use crate::rates::{necessary_rate, r_ratio, NecessaryRate};

/// Minimizer of the geometric-mean cell count subject to the relaxed
/// product constraint, together with both function values there.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub point: Vec<f64>,
    pub objective: f64,
    pub constraint: f64,
}

/// `eps / (1 - r^{N/2})` for a real cell count `N > 0`.
pub fn relaxed_v(lambda_abs: f64, eps_n: f64, levels: f64) -> Result<f64> {
    let r = r_ratio(lambda_abs, eps_n)?;
    Ok(eps_n / (1.0 - r.powf(levels / 2.0)))
}

/// Geometric mean `Π N_j^{1/m}`.
pub fn relaxation_objective(point: &[f64]) -> f64 {
    let m = point.len() as f64;
    (point.iter().map(|n| n.ln()).sum::<f64>() / m).exp()
}

/// `Π_j eps / (1 - r^{N_j/2}) - 1`.
pub fn relaxation_constraint(lambda_abs: f64, eps_n: f64, point: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for &n in point {
        product *= relaxed_v(lambda_abs, eps_n, n)?;
    }
    Ok(product - 1.0)
}

pub fn relaxed_min_rate(lambda_abs: f64, eps_n: f64, m: usize) -> Result<RelaxedSolution> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "block length must be positive".into(),
        ));
    }
    if !(eps_n > 0.0 && eps_n < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation needs 0 < eps_n < 1, got {eps_n}"
        )));
    }
    let bits = match necessary_rate(lambda_abs, eps_n)? {
        NecessaryRate::Bits(b) => b,
        NecessaryRate::Infeasible => unreachable!("eps_n < 1 checked above"),
    };
    let level = bits.exp2();
    let point = vec![level; m];
    let constraint = relaxation_constraint(lambda_abs, eps_n, &point)?;
    Ok(RelaxedSolution {
        objective: relaxation_objective(&point),
        point,
        constraint,
    })
}

/// Block lengths along the residue class `alpha` modulo `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub alpha: usize,
    pub lengths: Vec<usize>,
    /// Trailing entries whose running product had not yet dropped below 1.
    pub remainder: usize,
}

/// Greedy scan of `v_{n j + alpha}`, closing a block as soon as its running
/// product drops below 1. `None` when no block closes.
pub fn interval_decomposition(
    v_seq: &[f64],
    n: usize,
    alpha: usize,
) -> Result<Option<Decomposition>> {
    if n == 0 || alpha >= n {
        return Err(Error::InvalidArgument(format!(
            "residue {alpha} must lie in 0..{n}"
        )));
    }
    let mut lengths = Vec::new();
    let mut product = 1.0;
    let mut open = 0;
    for v in v_seq.iter().skip(alpha).step_by(n) {
        product *= v;
        open += 1;
        if product < 1.0 {
            lengths.push(open);
            product = 1.0;
            open = 0;
        }
    }
    if lengths.is_empty() {
        return Ok(None);
    }
    Ok(Some(Decomposition {
        alpha,
        lengths,
        remainder: open,
    }))
}
