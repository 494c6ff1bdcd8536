//! Data-rate bounds and stability tests.
//!
//! Rates are in bits per sample. `lambda_abs` is always `|a_n*|`, the
//! magnitude of the nominal pole product, and `eps_n` its uncertainty.

mod relaxation;
mod schedule;
mod spectral;

pub use relaxation::{
    interval_decomposition, relaxation_constraint, relaxation_objective, relaxed_min_rate,
    relaxed_v, Decomposition, RelaxedSolution,
};
pub use schedule::{periodic_sufficient_test, search_periodic_schedule, Schedule, ScheduleSearch};
pub use spectral::{
    matrix_spectral_radius, spectral_radius, spectral_radius_detailed, HMatrix, SpectralEstimate,
    SpectralMethod, DEFAULT_TOLERANCE, MAX_ITERATIONS,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::plant::UncertainPlant;
use crate::quantizer::{expansion_profile, optimal_boundaries, ratio_pair, QuantizerSpec};

/// `(lambda - eps) / (lambda + eps)`.
pub fn r_ratio(lambda_abs: f64, eps_n: f64) -> Result<f64> {
    ratio_pair(lambda_abs, eps_n).map(|(r, _)| r)
}

/// Outcome of the necessary-rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NecessaryRate {
    Bits(f64),
    /// `eps_n >= 1`: no finite data rate stabilizes the plant.
    Infeasible,
}

impl NecessaryRate {
    pub fn bits(self) -> Option<f64> {
        match self {
            NecessaryRate::Bits(b) => Some(b),
            NecessaryRate::Infeasible => None,
        }
    }
}

impl fmt::Display for NecessaryRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NecessaryRate::Bits(b) => write!(f, "{b}"),
            NecessaryRate::Infeasible => f.write_str("infeasible"),
        }
    }
}

/// Lower bound on the (average) data rate of any stabilizing scheme.
pub fn necessary_rate(lambda_abs: f64, eps_n: f64) -> Result<NecessaryRate> {
    if !(eps_n >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_n must be >= 0, got {eps_n}"
        )));
    }
    let margin = lambda_abs - eps_n;
    if !(margin > 1.0) {
        return Err(Error::AssumptionViolated { margin });
    }
    if eps_n >= 1.0 {
        return Ok(NecessaryRate::Infeasible);
    }
    if eps_n == 0.0 {
        return Ok(NecessaryRate::Bits(lambda_abs.log2()));
    }
    let r = r_ratio(lambda_abs, eps_n)?;
    let levels = (2.0 * (1.0 - eps_n).ln()) / r.ln();
    Ok(NecessaryRate::Bits(levels.log2()))
}

/// `max log2|λ'|` over `λ' in [lambda - eps, lambda + eps]`.
pub fn conservative_known_plant_rate(lambda_abs: f64, eps_n: f64) -> f64 {
    (lambda_abs + eps_n).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub rho: f64,
    pub stable: bool,
}

impl StabilityVerdict {
    pub(crate) fn new(rho: f64, margin: f64) -> Self {
        Self {
            rho,
            stable: rho < 1.0 - margin,
        }
    }
}

/// Quantizer family used when only the cell count is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `q*_N` built from `|a_n*|` and `eps_n`.
    Optimal,
    Uniform,
}

impl Family {
    pub fn quantizer(self, plant: &UncertainPlant, levels: usize) -> Result<QuantizerSpec> {
        match self {
            Family::Optimal => {
                optimal_boundaries(plant.poles_product_magnitude(), plant.eps_n(), levels)
            }
            Family::Uniform => QuantizerSpec::uniform(levels),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Optimal => "optimal",
            Family::Uniform => "uniform",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "optimal" => Ok(Family::Optimal),
            "uniform" => Ok(Family::Uniform),
            other => Err(Error::InvalidArgument(format!(
                "unknown quantizer family `{other}`"
            ))),
        }
    }
}

pub fn h_matrix(plant: &UncertainPlant, q: &QuantizerSpec) -> Result<HMatrix> {
    HMatrix::from_profile(&expansion_profile(q, plant))
}

/// `rho(H)` for the given quantizer; stable when `rho < 1 - margin`.
pub fn sufficient_test(
    plant: &UncertainPlant,
    q: &QuantizerSpec,
    margin: f64,
) -> Result<StabilityVerdict> {
    let h = h_matrix(plant, q)?;
    let rho = spectral_radius(&h, DEFAULT_TOLERANCE)?;
    Ok(StabilityVerdict::new(rho, margin))
}

/// Smallest `N <= n_max` whose family quantizer passes [`sufficient_test`].
/// Sizes whose cells cannot be told apart in double precision end the scan.
pub fn min_sufficient_n(
    plant: &UncertainPlant,
    family: Family,
    n_max: usize,
    margin: f64,
) -> Result<Option<usize>> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    for levels in 2..=n_max {
        let q = match family.quantizer(plant, levels) {
            Ok(q) => q,
            // finer cells collapse in double precision, and so do all larger N
            Err(Error::InvalidQuantizer(_)) => break,
            Err(e) => return Err(e),
        };
        if sufficient_test(plant, &q, margin)?.stable {
            return Ok(Some(levels));
        }
    }
    Ok(None)
}

/// Scalar-plant sufficient bounds from the earlier literature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonBounds {
    /// Norm-bounded-uncertainty bound; `None` where its formula is undefined.
    pub r_suf: Option<f64>,
    /// Stochastic-uncertainty bound `log2(λ / (1 - ε))`.
    pub r_suf_prime: Option<f64>,
}

pub fn comparison_bounds(lambda_abs: f64, eps1: f64) -> ComparisonBounds {
    let numerator = lambda_abs - eps1 * (lambda_abs + eps1);
    let denominator = 1.0 - eps1 * (2.0 * lambda_abs + 2.0 * eps1 + 1.0);
    let r_suf = (numerator > 0.0 && denominator > 0.0).then(|| (numerator / denominator).log2());
    let r_suf_prime = (eps1 < 1.0 && lambda_abs > 0.0).then(|| (lambda_abs / (1.0 - eps1)).log2());
    ComparisonBounds { r_suf, r_suf_prime }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::v_rate;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn r_ratio_examples() {
        assert_eq!(r_ratio(3.0, 0.0).unwrap(), 1.0);
        assert!(close(r_ratio(3.0, 0.35).unwrap(), 0.791044776119, 1e-12));
        assert!(close(r_ratio(3.0, 0.5).unwrap(), 5.0 / 7.0, 1e-15));
        assert!(matches!(
            r_ratio(1.2, 0.3),
            Err(Error::AssumptionViolated { .. })
        ));
    }

    #[test]
    fn necessary_rate_examples() {
        assert_eq!(necessary_rate(2.0, 0.0).unwrap(), NecessaryRate::Bits(1.0));
        let b = necessary_rate(3.0, 0.35).unwrap().bits().unwrap();
        assert!(close(b, 1.877984122809, 1e-11), "{b}");
        let b = necessary_rate(2.0, 0.1).unwrap().bits().unwrap();
        assert!(close(b, 1.074130761295, 1e-11), "{b}");
        assert_eq!(necessary_rate(3.0, 1.0).unwrap(), NecessaryRate::Infeasible);
        assert_eq!(necessary_rate(5.0, 1.5).unwrap(), NecessaryRate::Infeasible);
        assert!(necessary_rate(1.3, 0.35).is_err());
    }

    #[test]
    fn conservative_rate_examples() {
        assert_eq!(conservative_known_plant_rate(2.0, 0.0), 1.0);
        assert!(close(
            conservative_known_plant_rate(3.0, 0.35),
            1.744161095570,
            1e-11
        ));
        let nec = necessary_rate(3.0, 0.35).unwrap().bits().unwrap();
        assert!(nec > conservative_known_plant_rate(3.0, 0.35));
    }

    #[test]
    fn sufficient_test_examples() {
        let p = UncertainPlant::scalar(3.0, 0.5).unwrap();
        let v = sufficient_test(&p, &optimal_boundaries(3.0, 0.5, 8).unwrap(), 0.0).unwrap();
        assert!(close(v.rho, v_rate(3.0, 0.5, 8).unwrap(), 1e-14) && v.stable);
        let v = sufficient_test(&p, &QuantizerSpec::uniform(8).unwrap(), 0.0).unwrap();
        assert!(close(v.rho, 0.8125, 1e-14) && v.stable);
        let p = UncertainPlant::scalar(3.0, 0.35).unwrap();
        let v = sufficient_test(&p, &optimal_boundaries(3.0, 0.35, 2).unwrap(), 0.0).unwrap();
        assert!(close(v.rho, 1.675, 1e-12) && !v.stable);
    }

    #[test]
    fn margin_tightens_the_test() {
        let p = UncertainPlant::scalar(2.0, 0.0).unwrap();
        let q = QuantizerSpec::uniform(2).unwrap();
        assert!(!sufficient_test(&p, &q, 0.0).unwrap().stable);
        let q = QuantizerSpec::uniform(3).unwrap();
        assert!(sufficient_test(&p, &q, 0.0).unwrap().stable);
        assert!(!sufficient_test(&p, &q, 0.5).unwrap().stable);
    }

    #[test]
    fn min_sufficient_n_examples() {
        let p = UncertainPlant::scalar(2.0, 0.0).unwrap();
        assert_eq!(
            min_sufficient_n(&p, Family::Uniform, 64, 0.0).unwrap(),
            Some(3)
        );
        let p = UncertainPlant::scalar(3.0, 0.35).unwrap();
        assert_eq!(
            min_sufficient_n(&p, Family::Optimal, 64, 0.0).unwrap(),
            Some(4)
        );
        assert_eq!(min_sufficient_n(&p, Family::Optimal, 3, 0.0).unwrap(), None);
        let p = UncertainPlant::scalar(3.0, 1.2).unwrap();
        assert_eq!(
            min_sufficient_n(&p, Family::Optimal, 64, 0.0).unwrap(),
            None
        );
    }

    #[test]
    fn comparison_bound_examples() {
        let b = comparison_bounds(2.0, 0.1);
        assert!(close(b.r_suf.unwrap(), (1.79f64 / 0.48).log2(), 1e-14));
        assert!(close(b.r_suf_prime.unwrap(), (2.0f64 / 0.9).log2(), 1e-14));
        let nec = necessary_rate(2.0, 0.1).unwrap().bits().unwrap();
        assert!(nec < b.r_suf_prime.unwrap() && b.r_suf_prime.unwrap() < b.r_suf.unwrap());
        let b = comparison_bounds(3.0, 0.0);
        assert_eq!(b.r_suf, Some(3.0f64.log2()));
        assert_eq!(b.r_suf_prime, Some(3.0f64.log2()));
        assert_eq!(comparison_bounds(5.0, 0.1).r_suf, None);
    }

    #[test]
    fn family_parsing() {
        assert_eq!("optimal".parse::<Family>().unwrap(), Family::Optimal);
        assert_eq!(" uniform".parse::<Family>().unwrap(), Family::Uniform);
        assert!("log".parse::<Family>().is_err());
    }

    proptest! {
        #[test]
        fn necessary_rate_monotone(lambda in 1.6f64..6.0, eps in 0.01f64..0.5, d in 0.01f64..0.5) {
            let base = necessary_rate(lambda, eps).unwrap().bits().unwrap();
            let more_unstable = necessary_rate(lambda + d, eps).unwrap().bits().unwrap();
            prop_assert!(more_unstable >= base);
            let eps2 = (eps + d).min(0.59);
            let more_uncertain = necessary_rate(lambda, eps2).unwrap().bits().unwrap();
            prop_assert!(more_uncertain >= base);
        }

        #[test]
        fn necessary_rate_exceeds_known_plant_rate(lambda in 1.2f64..20.0, eps in 0.001f64..0.99) {
            prop_assume!(lambda - eps > 1.0);
            let b = necessary_rate(lambda, eps).unwrap().bits().unwrap();
            if b > 1.0 {
                prop_assert!(b > conservative_known_plant_rate(lambda, eps));
            }
        }

        #[test]
        fn scalar_sufficiency_matches_v_rate(lambda in 1.5f64..6.0, frac in 0.0f64..0.9, levels in 2usize..30) {
            let eps = frac * (lambda - 1.0).min(0.99);
            let p = UncertainPlant::scalar(lambda, eps).unwrap();
            let q = optimal_boundaries(lambda, eps, levels).unwrap();
            let verdict = sufficient_test(&p, &q, 0.0).unwrap();
            let v = v_rate(lambda, eps, levels).unwrap();
            let w_max = expansion_profile(&q, &p).last_max();
            prop_assert!((verdict.rho - v).abs() <= 1e-12 * v);
            prop_assert_eq!(verdict.stable, v < 1.0);
            prop_assert_eq!(verdict.stable, w_max < 1.0);
        }
    }
}
