//! Brute-force verifiers for the closed forms, at desk scale.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::plant::UncertainPlant;
use crate::quantizer::{expansion_profile, QuantizerSpec};
use crate::rates::{relaxation_constraint, relaxation_objective, relaxed_min_rate, relaxed_v};

const REFINE_ROUNDS: usize = 5;

/// Best boundary vector found by the grid search, and its largest rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub h: Vec<f64>,
    pub value: f64,
}

/// Largest `a_n` expansion rate of the quantizer with boundaries `h`, or
/// `None` when `h` is not strictly increasing.
fn worst_rate(lambda_abs: f64, eps_n: f64, odd: bool, h: &[f64]) -> Option<f64> {
    if h.windows(2).any(|p| !(p[0] < p[1])) {
        return None;
    }
    let (hi, lo) = (lambda_abs + eps_n, lambda_abs - eps_n);
    let mut worst = f64::NEG_INFINITY;
    for l in 0..h.len() - 1 {
        let w = if odd && l == 0 {
            2.0 * hi * h[1]
        } else {
            hi * h[l + 1] - lo * h[l]
        };
        worst = worst.max(w);
    }
    Some(worst)
}

/// Joint grid over the free boundaries with spacing `step`, each coordinate
/// limited to `[center - reach, center + reach]` intersected with `(0, 1/2)`.
fn grid_pass(
    lambda_abs: f64,
    eps_n: f64,
    odd: bool,
    center: &[f64],
    reach: f64,
    step: f64,
) -> Option<GridOptimum> {
    let free = center.len();
    let axes: Vec<Vec<f64>> = center
        .iter()
        .map(|&c| {
            let first = ((c - reach).max(0.0) / step).ceil() as i64;
            let last = ((c + reach).min(0.5) / step).floor() as i64;
            (first..=last)
                .map(|i| i as f64 * step)
                .filter(|&x| x > 0.0 && x < 0.5)
                .collect()
        })
        .collect();
    if axes.iter().any(Vec::is_empty) {
        return None;
    }
    let total: usize = axes.iter().map(Vec::len).product();
    let best = (0..total)
        .into_par_iter()
        .filter_map(|flat| {
            let mut h = Vec::with_capacity(free + 2);
            h.push(0.0);
            let mut rest = flat;
            for axis in &axes {
                h.push(axis[rest % axis.len()]);
                rest /= axis.len();
            }
            h.push(0.5);
            worst_rate(lambda_abs, eps_n, odd, &h).map(|v| (flat, v, h))
        })
        // ties go to the lowest flat index so the result is order independent
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))?;
    Some(GridOptimum {
        h: best.2,
        value: best.1,
    })
}

/// Minimizes the largest expansion rate over boundary vectors by a coarse
/// grid with spacing `10 * resolution`, then joint refinement rounds around
/// the incumbent, each ten times finer than the last, down to spacing
/// `resolution / 1e4`.
pub fn grid_optimal_boundaries(
    lambda_abs: f64,
    eps_n: f64,
    levels: usize,
    resolution: f64,
) -> Result<GridOptimum> {
    if !(2..=6).contains(&levels) {
        return Err(Error::InvalidArgument(format!(
            "grid oracle supports 2..=6 cells, got {levels}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "resolution must lie in (0, 1e-2], got {resolution}"
        )));
    }
    let odd = levels % 2 == 1;
    let free = levels.div_ceil(2) - 1;
    if free == 0 {
        let h = vec![0.0, 0.5];
        let value = worst_rate(lambda_abs, eps_n, odd, &h).expect("0 < 1/2");
        return Ok(GridOptimum { h, value });
    }
    let mut step = 10.0 * resolution;
    let mut best = grid_pass(lambda_abs, eps_n, odd, &vec![0.25; free], 0.25, step)
        .ok_or_else(|| Error::InvalidArgument("coarse grid has no feasible point".into()))?;
    for _ in 0..REFINE_ROUNDS {
        let reach = 2.0 * step;
        step /= 10.0;
        let center = best.h[1..=free].to_vec();
        if let Some(found) = grid_pass(lambda_abs, eps_n, odd, &center, reach, step) {
            if found.value <= best.value {
                best = found;
            }
        }
    }
    Ok(best)
}

/// Positive root of `z^n = Σ_i w̄_i z^{n-i}` by plain bisection on
/// `1 - Σ_i w̄_i z^{-i}`, which increases in `z > 0`.
pub fn perron_root_bisection(w_bar: &[f64]) -> Result<f64> {
    if w_bar.is_empty() || w_bar.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument(
            "rates must be a nonempty nonnegative vector".into(),
        ));
    }
    let total: f64 = w_bar.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let f = |z: f64| {
        let mut acc = 1.0;
        let mut power = 1.0;
        for w in w_bar {
            power /= z;
            acc -= w * power;
        }
        acc
    };
    let (mut lo, mut hi) = (0.0, total.max(1.0));
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether all `a_n` expansion rates of `q` agree to relative tolerance `tol`.
pub fn verify_equalization(q: &QuantizerSpec, plant: &UncertainPlant, tol: f64) -> bool {
    let profile = expansion_profile(q, plant);
    let row = profile.last_row();
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = row.iter().copied().fold(f64::INFINITY, f64::min);
    max - min <= tol * max.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub passed: bool,
    pub trials: usize,
    /// Probes that could be projected back onto the constraint surface.
    pub projected: usize,
    pub optimum: f64,
    /// Smallest `φ(probe) - φ*` seen over projected probes.
    pub min_gap: f64,
}

/// Solves `ψ(point) = 0` for component `j` by bisection. `false` when no
/// positive value of that component restores feasibility.
fn project(lambda_abs: f64, eps_n: f64, point: &mut [f64], j: usize) -> Result<bool> {
    let others: f64 = point
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, &n)| relaxed_v(lambda_abs, eps_n, n))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .product();
    // v decreases from +inf to eps as N grows; need v(N_j) = 1 / others
    let target = 1.0 / others;
    if !(target > eps_n) {
        return Ok(false);
    }
    let (mut lo, mut hi) = (1e-9, 1.0);
    while relaxed_v(lambda_abs, eps_n, hi)? > target {
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(false);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if relaxed_v(lambda_abs, eps_n, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    point[j] = hi;
    Ok(true)
}

/// Random local probe of the relaxed minimizer: each trial perturbs every
/// component by up to 30%, restores `ψ = 0` through one randomly chosen
/// component, and checks that the geometric mean did not drop by more
/// than `1e-9`.
pub fn verify_relaxation_kkt(
    lambda_abs: f64,
    eps_n: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<KktReport> {
    let solution = relaxed_min_rate(lambda_abs, eps_n, m)?;
    let optimum = solution.objective;
    if m == 1 {
        return Ok(KktReport {
            passed: true,
            trials,
            projected: 0,
            optimum,
            min_gap: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut projected = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..trials {
        let mut point: Vec<f64> = solution
            .point
            .iter()
            .map(|n| n * (1.0 + rng.gen_range(-0.3..0.3)))
            .collect();
        let j = rng.gen_range(0..m);
        if !project(lambda_abs, eps_n, &mut point, j)? {
            continue;
        }
        projected += 1;
        min_gap = min_gap.min(relaxation_objective(&point) - optimum);
    }
    Ok(KktReport {
        passed: projected > 0 && min_gap >= -1e-9,
        trials,
        projected,
        optimum,
        min_gap,
    })
}

/// Geometric mean of `point` after restoring `ψ = 0` through its last
/// component. Used to score hand-picked candidates against the minimizer.
pub fn feasible_objective(lambda_abs: f64, eps_n: f64, point: &[f64]) -> Result<Option<f64>> {
    if point.is_empty() {
        return Err(Error::InvalidArgument("empty candidate".into()));
    }
    let mut p = point.to_vec();
    let last = p.len() - 1;
    if !project(lambda_abs, eps_n, &mut p, last)? {
        return Ok(None);
    }
    debug_assert!(relaxation_constraint(lambda_abs, eps_n, &p)?.abs() < 1e-9);
    Ok(Some(relaxation_objective(&p)))
}

/// Checks on a dense grid of `[-1/2, 1/2]` plus every cell edge that the
/// encoded cell contains the input, and that the cells tile the range.
pub fn exhaustive_encode_decode(q: &QuantizerSpec, samples: usize) -> Result<bool> {
    if samples < q.levels() {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples, got {samples}",
            q.levels()
        )));
    }
    let cells = q.cells();
    let tiles = cells.first().map(|c| c.lo) == Some(-0.5)
        && cells.last().map(|c| c.hi) == Some(0.5)
        && cells
            .windows(2)
            .all(|p| p[0].hi == p[1].lo && !p[0].closed_hi)
        && cells.last().is_some_and(|c| c.closed_hi);
    if !tiles {
        return Ok(false);
    }
    let edges = q.edges();
    let grid = (0..=samples).map(|i| -0.5 + i as f64 / samples as f64);
    for x in grid.chain(edges.iter().copied()) {
        let x = x.clamp(-0.5, 0.5);
        let s = q.encode(x)?;
        let cell = &cells[s - 1];
        if !cell.contains(x) || !q.decode(s, 1.0)?.contains(x) {
            return Ok(false);
        }
        // exactly one cell claims x
        if cells.iter().filter(|c| c.contains(x)).count() != 1 {
            return Ok(false);
        }
    }
    // an interior edge opens the cell on its right
    for (i, &e) in edges.iter().enumerate().take(q.levels()).skip(1) {
        if q.encode(e)? != i + 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One line of an oracle report.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub case: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub pass: bool,
}

impl OracleRow {
    pub fn new(case: impl Into<String>, closed_form: f64, oracle: f64, pass: bool) -> Self {
        Self {
            case: case.into(),
            closed_form,
            oracle,
            pass,
        }
    }

    pub fn abs_diff(&self) -> f64 {
        (self.closed_form - self.oracle).abs()
    }
}

/// `case,closed_form,oracle,abs_diff,pass` rows with a header.
pub fn report_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("case,closed_form,oracle,abs_diff,pass\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.case,
            fmt_num(row.closed_form),
            fmt_num(row.oracle),
            fmt_num(row.abs_diff()),
            row.pass
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::{optimal_boundaries, v_rate};
    use proptest::prelude::*;

    fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_matches_closed_form() {
        let g = grid_optimal_boundaries(3.0, 0.5, 4, 1e-3).unwrap();
        let v = v_rate(3.0, 0.5, 4).unwrap();
        assert!((g.value - v).abs() < 1e-6, "{} vs {v}", g.value);
        let q = optimal_boundaries(3.0, 0.5, 4).unwrap();
        assert!(sup_dist(&g.h, q.boundaries()) < 2e-3);
    }

    #[test]
    fn grid_recovers_uniform_without_uncertainty() {
        let g = grid_optimal_boundaries(3.0, 0.0, 4, 1e-3).unwrap();
        assert!(sup_dist(&g.h, &[0.0, 0.25, 0.5]) < 1e-3);
        let g = grid_optimal_boundaries(2.0, 0.0, 5, 1e-3).unwrap();
        assert!(sup_dist(&g.h, &[0.0, 0.1, 0.3, 0.5]) < 1e-3);
    }

    #[test]
    fn uniform_is_beaten_under_uncertainty() {
        let p = UncertainPlant::scalar(3.0, 0.5).unwrap();
        let uniform = expansion_profile(&QuantizerSpec::uniform(4).unwrap(), &p).last_max();
        let g = grid_optimal_boundaries(3.0, 0.5, 4, 1e-3).unwrap();
        assert!(g.value < uniform - 1e-3);
    }

    #[test]
    fn grid_rejects_out_of_scale() {
        assert!(grid_optimal_boundaries(3.0, 0.5, 7, 1e-3).is_err());
        assert!(grid_optimal_boundaries(3.0, 0.5, 4, 0.1).is_err());
    }

    #[test]
    fn equalization_examples() {
        let p = UncertainPlant::scalar(3.0, 0.5).unwrap();
        assert!(verify_equalization(
            &optimal_boundaries(3.0, 0.5, 8).unwrap(),
            &p,
            1e-12
        ));
        let uniform = QuantizerSpec::uniform(8).unwrap();
        assert!(!verify_equalization(&uniform, &p, 1e-12));
        let row = expansion_profile(&uniform, &p).last_row().to_vec();
        assert!((row[0] - 0.4375).abs() < 1e-15 && (row[3] - 0.8125).abs() < 1e-15);
        let p0 = UncertainPlant::scalar(3.0, 0.0).unwrap();
        assert!(verify_equalization(&uniform, &p0, 1e-12));
    }

    #[test]
    fn kkt_probe_examples() {
        let r = verify_relaxation_kkt(3.0, 0.35, 3, 2000, 7).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.projected > 1000);
        assert!(verify_relaxation_kkt(3.0, 0.35, 1, 10, 7).unwrap().passed);
    }

    #[test]
    fn wrong_candidate_scores_worse() {
        let star = relaxed_min_rate(3.0, 0.35, 3).unwrap();
        let n = star.point[0];
        let worse = feasible_objective(3.0, 0.35, &[n + 0.5, n - 0.5, n])
            .unwrap()
            .unwrap();
        assert!(worse > star.objective + 1e-6);
        let same = feasible_objective(3.0, 0.35, &star.point).unwrap().unwrap();
        assert!((same - star.objective).abs() < 1e-9);
    }

    #[test]
    fn encode_decode_examples() {
        assert!(
            exhaustive_encode_decode(&optimal_boundaries(3.0, 0.5, 8).unwrap(), 100_000).unwrap()
        );
        let q = QuantizerSpec::uniform(3).unwrap();
        assert!(exhaustive_encode_decode(&q, 3).unwrap());
        assert_eq!(q.encode(-1.0 / 6.0).unwrap(), 2);
        assert_eq!(q.encode(1.0 / 6.0).unwrap(), 3);
        assert!(QuantizerSpec::new(4, vec![0.0, 0.5, 0.25]).is_err());
        assert!(exhaustive_encode_decode(&q, 2).is_err());
    }

    #[test]
    fn bisection_root_examples() {
        assert_eq!(perron_root_bisection(&[0.5]).unwrap(), 0.5);
        // z^2 = z + 1
        let phi = perron_root_bisection(&[1.0, 1.0]).unwrap();
        assert!((phi - 1.618033988749895).abs() < 1e-14);
        assert_eq!(perron_root_bisection(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(perron_root_bisection(&[]).is_err());
    }

    #[test]
    fn report_layout() {
        let csv = report_csv(&[OracleRow::new("v(3,0.5,4)", 1.0, 1.5, false)]);
        assert_eq!(
            csv,
            "case,closed_form,oracle,abs_diff,pass\nv(3,0.5,4),1,1.5,0.5,false\n"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn grid_value_brackets_closed_form(
            lambda in 1.6f64..5.0,
            frac in 0.0f64..0.5,
            levels in 2usize..=6,
        ) {
            let eps = frac * (lambda - 1.05);
            let v = v_rate(lambda, eps, levels).unwrap();
            let g = grid_optimal_boundaries(lambda, eps, levels, 1e-2).unwrap();
            // the objective is (lambda + eps)-Lipschitz in each boundary
            prop_assert!(g.value >= v - 1e-9);
            prop_assert!(g.value <= v + 2.0 * (lambda + eps) * 1e-4);
        }

        #[test]
        fn optimal_quantizers_equalize(
            lambda in 1.6f64..5.0,
            frac in 0.01f64..0.9,
            levels in 2usize..24,
        ) {
            let eps = frac * (lambda - 1.05);
            let p = UncertainPlant::scalar(lambda, eps).unwrap();
            let q = optimal_boundaries(lambda, eps, levels).unwrap();
            prop_assert!(verify_equalization(&q, &p, 1e-9));
            prop_assert!(!verify_equalization(&QuantizerSpec::uniform(levels).unwrap(), &p, 1e-9) || levels == 2);
        }

        #[test]
        fn encode_decode_on_random_quantizers(
            lambda in 1.6f64..5.0,
            frac in 0.0f64..0.9,
            levels in 2usize..20,
        ) {
            let eps = frac * (lambda - 1.05);
            let q = optimal_boundaries(lambda, eps, levels).unwrap();
            prop_assert!(exhaustive_encode_decode(&q, 2000).unwrap());
        }
    }
}
