//! Closed-loop simulator: encoder with the prediction-width scaling law,
//! decoder, prediction sets and the midpoint controller.
//!
//! At every step `k` the loop
//! 1. predicts `Y⁻_{k+1} = Σ_i A_i Y_{k-i+1}` and sets `σ_{k+1} = μ(Y⁻_{k+1})`,
//! 2. applies `u_k = -mid(Y⁻_{k+1})`, which centers the next output in
//!    `[-σ_{k+1}/2, σ_{k+1}/2]`,
//! 3. encodes `y_{k+1} / σ_{k+1}` with the quantizer scheduled for `k+1` and
//!    decodes `Y_{k+1} = σ_{k+1} C_s`.
//!
//! Times `j <= 0` use the prior boxes `[-Y_j, Y_j]` without transmission.
//! Every invariant the sufficiency argument relies on is checked per step.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::intervals::{minkowski_sum, Interval};
use crate::plant::{InitMode, PlantInstance, SampleMode, UncertainPlant};
use crate::quantizer::{expansion_profile, QuantizerSpec};
use crate::rates::{Family, HMatrix, Schedule};

/// `σ < CONVERGED * σ_0` ends a run as stabilized.
pub const CONVERGED: f64 = 1e-12;
/// `σ > DIVERGED * σ_0` ends a run as diverged.
pub const DIVERGED: f64 = 1e12;
/// Relative slack for floating-point comparisons in the invariant checks.
pub const CHECK_TOL: f64 = 1e-9;
/// Encoder inputs within this relative distance outside `±1/2` are rounding
/// artifacts and are snapped back onto the range edge.
const SNAP_TOL: f64 = 1e-12;

/// Estimation sets and scaling parameters of the last `n` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    pub k: i64,
    /// `Y_k, Y_{k-1}, ..., Y_{k-n+1}`.
    pub est_sets: Vec<Interval>,
    /// `σ_k, ..., σ_{k-n+1}`.
    pub sigmas: Vec<f64>,
}

impl LoopState {
    /// Prior boxes at `k = 0`, with `σ_j = 2 Y_j`.
    pub fn initial(plant: &UncertainPlant) -> Self {
        let bounds: Vec<f64> = plant.init_bounds().iter().rev().copied().collect();
        Self {
            k: 0,
            est_sets: bounds
                .iter()
                .map(|b| Interval::symmetric(*b).expect("bounds are positive"))
                .collect(),
            sigmas: bounds.iter().map(|b| 2.0 * b).collect(),
        }
    }

    fn push(&mut self, set: Interval, sigma: f64) {
        self.est_sets.rotate_right(1);
        self.est_sets[0] = set;
        self.sigmas.rotate_right(1);
        self.sigmas[0] = sigma;
        self.k += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub set: Interval,
    pub sigma_next: f64,
    /// `A_i Y_{k-i+1}` for each `i`.
    pub terms: Vec<Interval>,
}

/// Prediction set of `y_{k+1}` before the control input is added.
pub fn predict(state: &LoopState, plant: &UncertainPlant) -> Result<Prediction> {
    if state.est_sets.len() != plant.order() {
        return Err(Error::HistoryLength {
            expected: plant.order(),
            got: state.est_sets.len(),
        });
    }
    let terms: Vec<Interval> = plant
        .parameter_intervals()
        .iter()
        .zip(&state.est_sets)
        .map(|(a, y)| a.product(y))
        .collect();
    let set = minkowski_sum(&terms)?;
    Ok(Prediction {
        sigma_next: set.width(),
        set,
        terms,
    })
}

/// Negated midpoint of the prediction set.
pub fn control(pred: &Interval) -> f64 {
    -0.5 * (pred.hi() + pred.lo())
}

/// Iterates `ζ_{k+1} = H ζ_k` from `ζ_0 = (σ_{-n+1}, ..., σ_0)` and returns the
/// bottom entry of `ζ_1, ..., ζ_K`.
pub fn sigma_envelope(h: &HMatrix, init_sigmas: &[f64], steps: usize) -> Result<Vec<f64>> {
    if init_sigmas.len() != h.order() {
        return Err(Error::HistoryLength {
            expected: h.order(),
            got: init_sigmas.len(),
        });
    }
    let mut zeta = init_sigmas.to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        zeta = h.apply(&zeta);
        out.push(*zeta.last().expect("order >= 1"));
    }
    Ok(out)
}

/// The quantizers used at times `k ≡ 0, 1, ..., m-1 (mod m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerPlan {
    slots: Vec<QuantizerSpec>,
}

impl QuantizerPlan {
    pub fn from_family(
        plant: &UncertainPlant,
        family: Family,
        schedule: &Schedule,
    ) -> Result<Self> {
        let slots = schedule
            .sizes()
            .iter()
            .map(|&n| family.quantizer(plant, n))
            .collect::<Result<_>>()?;
        Ok(Self { slots })
    }

    pub fn fixed(q: QuantizerSpec) -> Self {
        Self { slots: vec![q] }
    }

    pub fn custom(slots: Vec<QuantizerSpec>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidSchedule(
                "custom plan needs at least one quantizer".into(),
            ));
        }
        Ok(Self { slots })
    }

    pub fn period(&self) -> usize {
        self.slots.len()
    }

    pub fn at(&self, k: i64) -> &QuantizerSpec {
        &self.slots[k.rem_euclid(self.slots.len() as i64) as usize]
    }

    pub fn slots(&self) -> &[QuantizerSpec] {
        &self.slots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stabilized,
    Diverged,
    HorizonExhausted,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Stabilized => "stabilized",
            Verdict::Diverged => "diverged",
            Verdict::HorizonExhausted => "horizon_exhausted",
        }
    }
}

/// One row of a run. `symbol` is `None` at `k = 0`, which is not transmitted.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub y: f64,
    pub symbol: Option<usize>,
    pub sigma: f64,
    pub est: Interval,
    /// `Y⁻_{k+1}`.
    pub pred_next: Interval,
    pub u: f64,
}

/// Counts of per-step invariant failures. All zero for a correct run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvariantReport {
    pub checked_steps: usize,
    pub containment: usize,
    pub width_bound: usize,
    pub sigma_lower_bound: usize,
    pub envelope: usize,
    pub first_failure: Option<String>,
}

impl InvariantReport {
    pub fn failures(&self) -> usize {
        self.containment + self.width_bound + self.sigma_lower_bound + self.envelope
    }

    pub fn all_hold(&self) -> bool {
        self.failures() == 0
    }

    fn fail(&mut self, what: String) {
        if self.first_failure.is_none() {
            self.first_failure = Some(what);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub verdict: Verdict,
    pub sigma0: f64,
    pub invariants: InvariantReport,
}

impl Trajectory {
    pub fn final_sigma_ratio(&self) -> f64 {
        self.steps.last().map_or(1.0, |s| s.sigma / self.sigma0)
    }

    /// `k,y,s,sigma,Y_lo,Y_hi,u` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,y,s,sigma,Y_lo,Y_hi,u\n");
        for s in &self.steps {
            let symbol = s.symbol.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.k,
                fmt_num(s.y),
                symbol,
                fmt_num(s.sigma),
                fmt_num(s.est.lo()),
                fmt_num(s.est.hi()),
                fmt_num(s.u)
            );
        }
        out
    }
}

/// Runs the loop for at most `horizon` transmissions.
pub fn run_closed_loop(
    plant: &UncertainPlant,
    inst: &PlantInstance,
    plan: &QuantizerPlan,
    horizon: usize,
    init: InitMode,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    if !plant.is_admissible(inst) {
        return Err(Error::InvalidArgument(
            "plant instance lies outside the parameter box".into(),
        ));
    }
    let n = plant.order();
    // per-slot rates of every coefficient, and of a_n by cell
    let profiles: Vec<_> = plan
        .slots()
        .iter()
        .map(|q| expansion_profile(q, plant))
        .collect();

    let mut state = LoopState::initial(plant);
    let mut outputs = plant.initial_outputs(init);
    let sigma0 = state.sigmas[0];
    let mut inner_index: Vec<Option<usize>> = vec![None; n];
    let mut envelope: Vec<f64> = Vec::new();
    let mut report = InvariantReport::default();
    let mut steps = Vec::with_capacity(horizon + 1);
    let mut symbol: Option<usize> = None;
    let mut verdict = Verdict::HorizonExhausted;

    for k in 0..=horizon {
        let sigma_k = state.sigmas[0];
        let est_k = state.est_sets[0];
        let y_k = outputs[0];
        let pred = predict(&state, plant)?;
        let u = control(&pred.set);
        steps.push(StepRecord {
            k,
            y: y_k,
            symbol,
            sigma: sigma_k,
            est: est_k,
            pred_next: pred.set,
            u,
        });

        if k > 0 {
            report.checked_steps += 1;
            let slack = CHECK_TOL * sigma_k;
            if !(est_k.lo() - slack <= y_k && y_k <= est_k.hi() + slack) {
                report.containment += 1;
                report.fail(format!("step {k}: y = {y_k} outside {est_k}"));
            }
            if est_k.width() > sigma_k * (1.0 + CHECK_TOL) {
                report.width_bound += 1;
                report.fail(format!(
                    "step {k}: width {} exceeds sigma {sigma_k}",
                    est_k.width()
                ));
            }
            if sigma_k < CONVERGED * sigma0 {
                verdict = Verdict::Stabilized;
                break;
            }
            if sigma_k > DIVERGED * sigma0 {
                verdict = Verdict::Diverged;
                break;
            }
        }
        if k == horizon {
            break;
        }

        // advance the plant and the channel to k + 1
        let y_next = inst.step(&outputs, u)?;
        let sigma_next = pred.sigma_next;
        let k_next = k as i64 + 1;

        // lower bound through a_n alone: σ_{k+1} >= w_{n,l} σ_{k-n+1}
        if let Some(l) = inner_index[n - 1] {
            let slot = (k_next - n as i64).rem_euclid(plan.period() as i64) as usize;
            let w = profiles[slot].last_row()[l];
            let oldest = state.sigmas[n - 1];
            if sigma_next < w * oldest * (1.0 - CHECK_TOL) {
                report.sigma_lower_bound += 1;
                report.fail(format!(
                    "step {k_next}: sigma {sigma_next} below w_(n,{l}) * sigma = {}",
                    w * oldest
                ));
            }
        }

        // envelope θ_{k+1} = Σ_i w̄_i(q_{k-i+1}) θ_{k-i+1}, seeded by σ_1..σ_n
        if k_next as usize > n {
            let theta: f64 = (1..=n)
                .map(|i| {
                    let t = k_next - i as i64;
                    let slot = t.rem_euclid(plan.period() as i64) as usize;
                    profiles[slot].w_bar[i - 1] * envelope[envelope.len() - i]
                })
                .sum();
            envelope.push(theta);
            if sigma_next > theta * (1.0 + CHECK_TOL) {
                report.envelope += 1;
                report.fail(format!(
                    "step {k_next}: sigma {sigma_next} above envelope {theta}"
                ));
            }
        } else {
            envelope.push(sigma_next);
        }

        let half = 0.5 * sigma_next;
        if y_next.abs() > half * (1.0 + SNAP_TOL) {
            return Err(Error::SimulationSaturation {
                step: k_next as usize,
                y_abs: y_next.abs(),
                half_sigma: half,
            });
        }
        let q = plan.at(k_next);
        let x = (y_next / sigma_next).clamp(-0.5, 0.5);
        let s = q.encode(x)?;
        let est_next = q.decode(s, sigma_next)?;

        inner_index.rotate_right(1);
        inner_index[0] = Some(q.inner_index(s));
        outputs.rotate_right(1);
        outputs[0] = y_next;
        state.push(est_next, sigma_next);
        symbol = Some(s);
    }

    Ok(Trajectory {
        steps,
        verdict,
        sigma0,
        invariants: report,
    })
}

/// Aggregate of a Monte-Carlo batch over seeded admissible instances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSummary {
    pub runs: usize,
    pub stabilized: usize,
    pub diverged: usize,
    pub exhausted: usize,
    pub saturations: usize,
    /// Runs with `σ_K / σ_0` below the requested ratio.
    pub below_ratio: usize,
    pub invariant_failures: usize,
    pub worst_ratio: f64,
    pub first_saturation: Option<(u64, usize)>,
}

/// Instance seed `seed + i` and initial-output seed derived from it, for
/// `i in 0..runs`. Runs execute in parallel; the summary is order independent.
pub fn run_batch(
    plant: &UncertainPlant,
    plan: &QuantizerPlan,
    horizon: usize,
    runs: usize,
    seed: u64,
    ratio: f64,
) -> Result<BatchSummary> {
    let outcomes: Vec<(u64, Result<Trajectory>)> = (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let run_seed = seed.wrapping_add(i);
            let traj = plant
                .sample_instance(SampleMode::Uniform(run_seed))
                .and_then(|inst| {
                    let init = InitMode::Uniform(run_seed ^ 0x9e37_79b9_7f4a_7c15);
                    run_closed_loop(plant, &inst, plan, horizon, init)
                });
            (run_seed, traj)
        })
        .collect();

    let mut summary = BatchSummary {
        runs,
        ..BatchSummary::default()
    };
    for (run_seed, outcome) in outcomes {
        match outcome {
            Ok(traj) => {
                match traj.verdict {
                    Verdict::Stabilized => summary.stabilized += 1,
                    Verdict::Diverged => summary.diverged += 1,
                    Verdict::HorizonExhausted => summary.exhausted += 1,
                }
                let r = traj.final_sigma_ratio();
                if r < ratio {
                    summary.below_ratio += 1;
                }
                summary.worst_ratio = summary.worst_ratio.max(r);
                summary.invariant_failures += traj.invariants.failures();
            }
            Err(Error::SimulationSaturation { step, .. }) => {
                summary.saturations += 1;
                if summary.first_saturation.is_none() {
                    summary.first_saturation = Some((run_seed, step));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}
