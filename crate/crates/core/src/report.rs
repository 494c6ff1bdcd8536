//! Batch commands behind the command-line front-end. Each returns the text it
//! would write, so the binary only handles I/O and exit codes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::closed_loop::{run_batch, run_closed_loop, QuantizerPlan};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::format::{fmt_num, fmt_opt};
use crate::oracle::{
    exhaustive_encode_decode, grid_optimal_boundaries, perron_root_bisection, verify_equalization,
    verify_relaxation_kkt, OracleRow,
};
use crate::plant::UncertainPlant;
use crate::quantizer::{optimal_boundaries, v_rate, QuantizerSpec};
use crate::rates::{
    comparison_bounds, conservative_known_plant_rate, min_sufficient_n, necessary_rate,
    search_periodic_schedule, spectral_radius, ComparisonBounds, Family, HMatrix, NecessaryRate,
    Schedule, ScheduleSearch, DEFAULT_TOLERANCE,
};

pub const BOUNDS_HEADER: &str =
    "lambda,eps,R_nec,R_known_max,N_suf_opt,N_suf_uni,R_suf_phat,R_suf_martins,avg_rate_best,m_best";

/// One grid point of a bound sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsRow {
    pub lambda: f64,
    pub eps: f64,
    /// `None` where `|a_n*| - eps_n <= 1`.
    pub r_nec: Option<NecessaryRate>,
    pub r_known_max: f64,
    pub n_suf_opt: Option<usize>,
    pub n_suf_uni: Option<usize>,
    /// Scalar plants only.
    pub comparison: Option<ComparisonBounds>,
    /// Filled by the schedule sweep; the inner `None` means nothing passed.
    pub best: Option<Option<ScheduleSearch>>,
}

impl BoundsRow {
    /// `log2` of the smallest sufficient `q*_N`.
    pub fn static_rate(&self) -> Option<f64> {
        self.n_suf_opt.map(|n| (n as f64).log2())
    }

    fn csv_line(&self) -> String {
        let r_nec = match self.r_nec {
            Some(NecessaryRate::Bits(b)) => fmt_num(b),
            Some(NecessaryRate::Infeasible) => "infeasible".into(),
            None => "assumption_violated".into(),
        };
        let count = |n: Option<usize>| n.map_or_else(|| "not_found".into(), |n| n.to_string());
        let (phat, martins) = match self.comparison {
            Some(c) => (fmt_opt(c.r_suf), fmt_opt(c.r_suf_prime)),
            None => (String::new(), String::new()),
        };
        let (avg, m) = match &self.best {
            None => (String::new(), String::new()),
            Some(None) => ("not_found".into(), String::new()),
            Some(Some(s)) => (fmt_num(s.avg_rate), s.schedule.period().to_string()),
        };
        let viable = self.r_nec.is_some();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_num(self.lambda),
            fmt_num(self.eps),
            r_nec,
            fmt_num(self.r_known_max),
            if viable {
                count(self.n_suf_opt)
            } else {
                String::new()
            },
            if viable {
                count(self.n_suf_uni)
            } else {
                String::new()
            },
            phat,
            martins,
            avg,
            m
        )
    }
}

pub fn rows_csv(rows: &[BoundsRow]) -> String {
    let mut out = format!("{BOUNDS_HEADER}\n");
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

fn bounds_row(
    base: &UncertainPlant,
    lambda: f64,
    cfg: &Config,
    schedule: bool,
) -> Result<BoundsRow> {
    let sign = if base.a_star()[base.order() - 1] < 0.0 {
        -1.0
    } else {
        1.0
    };
    let plant = base.with_pole_product(sign * lambda)?;
    let eps = plant.eps_n();
    let comparison = (plant.order() == 1).then(|| comparison_bounds(lambda, eps));
    let mut row = BoundsRow {
        lambda,
        eps,
        r_nec: None,
        r_known_max: conservative_known_plant_rate(lambda, eps),
        n_suf_opt: None,
        n_suf_uni: None,
        comparison,
        best: None,
    };
    if !plant.satisfies_assumption1() {
        return Ok(row);
    }
    let sched = &cfg.schedule;
    row.r_nec = Some(necessary_rate(lambda, eps)?);
    row.n_suf_opt = min_sufficient_n(&plant, Family::Optimal, sched.n_max, sched.margin)?;
    row.n_suf_uni = min_sufficient_n(&plant, Family::Uniform, sched.n_max, sched.margin)?;
    if schedule {
        row.best = Some(search_periodic_schedule(
            &plant,
            sched.m_max,
            sched.n_max,
            sched.family,
            sched.margin,
        )?);
    }
    Ok(row)
}

/// Rows of a sweep over `|a_n*|`, evaluated in parallel and returned in grid
/// order.
pub fn sweep_rows(cfg: &Config, schedule: bool) -> Result<Vec<BoundsRow>> {
    let plant = cfg.plant()?;
    let points = cfg.sweep()?.points();
    points
        .par_iter()
        .map(|&lambda| bounds_row(plant, lambda, cfg, schedule))
        .collect()
}

/// Necessary and sufficient bounds across the sweep.
pub fn cmd_bounds(cfg: &Config) -> Result<String> {
    Ok(rows_csv(&sweep_rows(cfg, false)?))
}

/// Bounds plus the best periodic schedule at each sweep point.
pub fn cmd_schedule(cfg: &Config) -> Result<String> {
    Ok(rows_csv(&sweep_rows(cfg, true)?))
}

/// Boundaries of the configured family at `levels` cells as `l,h_l` rows.
pub fn cmd_quantizer(cfg: &Config, levels: usize) -> Result<String> {
    Ok(cfg
        .schedule
        .family
        .quantizer(cfg.plant()?, levels)?
        .to_csv())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    /// Trajectory rows for a single run.
    pub csv: Option<String>,
    pub summary: String,
    pub passed: bool,
}

fn simulation_plan(cfg: &Config, plant: &UncertainPlant) -> Result<QuantizerPlan> {
    let sched = &cfg.schedule;
    let schedule = match &sched.sizes {
        Some(sizes) => Schedule::new(sizes.clone())?,
        None => {
            let n = min_sufficient_n(plant, sched.family, sched.n_max, sched.margin)?.ok_or_else(
                || {
                    Error::InvalidArgument(format!(
                        "no {} quantizer with at most {} cells passes the sufficient test",
                        sched.family.name(),
                        sched.n_max
                    ))
                },
            )?;
            Schedule::constant(n, 1)?
        }
    };
    QuantizerPlan::from_family(plant, sched.family, &schedule)
}

/// A single trajectory, or a seeded batch when `[sim] runs > 0`.
pub fn cmd_simulate(cfg: &Config) -> Result<SimulateOutput> {
    let plant = cfg.plant()?;
    let plan = simulation_plan(cfg, plant)?;
    let sizes: Vec<String> = plan
        .slots()
        .iter()
        .map(|q| q.levels().to_string())
        .collect();
    let sim = &cfg.sim;
    if sim.runs == 0 {
        let inst = plant.sample_instance(sim.instance)?;
        return match run_closed_loop(plant, &inst, &plan, sim.horizon, sim.init) {
            Ok(traj) => {
                let inv = &traj.invariants;
                let mut summary = format!(
                    "{}\nschedule={} steps={} sigma_ratio={} invariant_failures={}\n",
                    traj.verdict.as_str(),
                    sizes.join(" "),
                    traj.steps.len() - 1,
                    fmt_num(traj.final_sigma_ratio()),
                    inv.failures()
                );
                if let Some(first) = &inv.first_failure {
                    let _ = writeln!(summary, "first failure: {first}");
                }
                Ok(SimulateOutput {
                    csv: Some(traj.to_csv()),
                    summary,
                    passed: inv.all_hold(),
                })
            }
            Err(Error::SimulationSaturation {
                step,
                y_abs,
                half_sigma,
            }) => Ok(SimulateOutput {
                csv: None,
                summary: format!(
                    "saturated\nstep={step} |y|={} sigma/2={}\n",
                    fmt_num(y_abs),
                    fmt_num(half_sigma)
                ),
                passed: false,
            }),
            Err(e) => Err(e),
        };
    }
    let b = run_batch(plant, &plan, sim.horizon, sim.runs, cfg.seed, sim.ratio)?;
    let mut summary = String::from(
        "runs,stabilized,diverged,horizon_exhausted,saturations,below_ratio,invariant_failures,worst_ratio\n",
    );
    let _ = writeln!(
        summary,
        "{},{},{},{},{},{},{},{}",
        b.runs,
        b.stabilized,
        b.diverged,
        b.exhausted,
        b.saturations,
        b.below_ratio,
        b.invariant_failures,
        fmt_num(b.worst_ratio)
    );
    if let Some((seed, step)) = b.first_saturation {
        let _ = writeln!(summary, "# first saturation: seed {seed}, step {step}");
    }
    Ok(SimulateOutput {
        csv: None,
        passed: b.saturations == 0 && b.invariant_failures == 0 && b.below_ratio == b.runs,
        summary,
    })
}

/// One check of the verification suite.
#[derive(Debug, Clone, PartialEq)]
pub enum VerifyCase {
    /// Grid search against `q*_N`.
    GridOptimum {
        lambda: f64,
        eps: f64,
        levels: usize,
    },
    /// `q*_N` (or uniform cells when `uniform`) with equal `a_n` rates;
    /// `perturb` moves `h_1` to inject a fault.
    Equalization {
        lambda: f64,
        eps: f64,
        levels: usize,
        uniform: bool,
        perturb: f64,
    },
    RelaxationKkt {
        lambda: f64,
        eps: f64,
        m: usize,
        trials: usize,
        seed: u64,
    },
    EncodeDecode {
        lambda: f64,
        eps: f64,
        levels: usize,
        samples: usize,
    },
    /// Power iteration against bisection on a random rate vector.
    Spectral { seed: u64, order: usize },
    /// Seeded batch at the smallest sufficient `q*_N`.
    ClosedLoop {
        a_star: Vec<f64>,
        eps: Vec<f64>,
        runs: usize,
        seed: u64,
    },
}

/// The default suite.
pub fn canonical_cases(seed: u64) -> Vec<VerifyCase> {
    let mut cases = Vec::new();
    for &(lambda, eps) in &[(2.0, 0.2), (2.5, 0.35), (3.0, 0.5)] {
        for levels in 2..=5 {
            cases.push(VerifyCase::GridOptimum {
                lambda,
                eps,
                levels,
            });
            cases.push(VerifyCase::Equalization {
                lambda,
                eps,
                levels,
                uniform: false,
                perturb: 0.0,
            });
            cases.push(VerifyCase::EncodeDecode {
                lambda,
                eps,
                levels,
                samples: 10_000,
            });
        }
        cases.push(VerifyCase::Equalization {
            lambda,
            eps,
            levels: 8,
            uniform: true,
            perturb: 0.0,
        });
    }
    for m in [2, 3, 5] {
        cases.push(VerifyCase::RelaxationKkt {
            lambda: 3.0,
            eps: 0.35,
            m,
            trials: 2_000,
            seed,
        });
    }
    for order in 1..=6 {
        cases.push(VerifyCase::Spectral {
            seed: seed.wrapping_add(order as u64),
            order,
        });
    }
    cases.push(VerifyCase::ClosedLoop {
        a_star: vec![3.0],
        eps: vec![0.5],
        runs: 20,
        seed,
    });
    cases.push(VerifyCase::ClosedLoop {
        a_star: vec![1.0, 3.0],
        eps: vec![0.1, 0.35],
        runs: 20,
        seed,
    });
    cases
}

fn case_name(case: &VerifyCase) -> String {
    match case {
        VerifyCase::GridOptimum {
            lambda,
            eps,
            levels,
        } => format!("grid_optimum({lambda} {eps} {levels})"),
        VerifyCase::Equalization {
            lambda,
            eps,
            levels,
            uniform,
            perturb,
        } => {
            let kind = if *uniform { "uniform" } else { "optimal" };
            if *perturb != 0.0 {
                format!("equalization_{kind}({lambda} {eps} {levels} perturb {perturb})")
            } else {
                format!("equalization_{kind}({lambda} {eps} {levels})")
            }
        }
        VerifyCase::RelaxationKkt { lambda, eps, m, .. } => {
            format!("relaxation_kkt({lambda} {eps} m={m})")
        }
        VerifyCase::EncodeDecode {
            lambda,
            eps,
            levels,
            ..
        } => format!("encode_decode({lambda} {eps} {levels})"),
        VerifyCase::Spectral { seed, order } => format!("spectral(order={order} seed={seed})"),
        VerifyCase::ClosedLoop { a_star, .. } => format!("closed_loop(order={})", a_star.len()),
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn run_case(case: &VerifyCase) -> Result<OracleRow> {
    let name = case_name(case);
    Ok(match case {
        VerifyCase::GridOptimum {
            lambda,
            eps,
            levels,
        } => {
            let closed = optimal_boundaries(*lambda, *eps, *levels)?;
            let v = v_rate(*lambda, *eps, *levels)?;
            let grid = grid_optimal_boundaries(*lambda, *eps, *levels, 1e-3)?;
            let pass =
                (grid.value - v).abs() <= 1e-4 && sup_dist(&grid.h, closed.boundaries()) <= 2e-3;
            OracleRow::new(name, v, grid.value, pass)
        }
        VerifyCase::Equalization {
            lambda,
            eps,
            levels,
            uniform,
            perturb,
        } => {
            let plant = UncertainPlant::scalar(*lambda, *eps)?;
            let q = if *uniform {
                QuantizerSpec::uniform(*levels)?
            } else {
                optimal_boundaries(*lambda, *eps, *levels)?
            };
            let q = if *perturb != 0.0 {
                let mut h = q.boundaries().to_vec();
                if h.len() > 2 {
                    h[1] += perturb;
                }
                QuantizerSpec::new(*levels, h)?
            } else {
                q
            };
            let equal = verify_equalization(&q, &plant, 1e-12);
            // uniform cells are expected to fail equalization under uncertainty
            let expected = !*uniform || *eps == 0.0 || *levels == 2;
            let row = crate::quantizer::expansion_profile(&q, &plant);
            let spread = row
                .last_row()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                - row.last_row().iter().copied().fold(f64::INFINITY, f64::min);
            OracleRow::new(name, 0.0, spread, equal == expected)
        }
        VerifyCase::RelaxationKkt {
            lambda,
            eps,
            m,
            trials,
            seed,
        } => {
            let r = verify_relaxation_kkt(*lambda, *eps, *m, *trials, *seed)?;
            OracleRow::new(name, r.optimum, r.optimum + r.min_gap.min(0.0), r.passed)
        }
        VerifyCase::EncodeDecode {
            lambda,
            eps,
            levels,
            samples,
        } => {
            let ok =
                exhaustive_encode_decode(&optimal_boundaries(*lambda, *eps, *levels)?, *samples)?;
            OracleRow::new(name, 1.0, if ok { 1.0 } else { 0.0 }, ok)
        }
        VerifyCase::Spectral { seed, order } => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            let w: Vec<f64> = (0..*order).map(|_| rng.gen_range(0.0..2.0)).collect();
            let rho = spectral_radius(&HMatrix::new(w.clone())?, DEFAULT_TOLERANCE)?;
            let root = perron_root_bisection(&w)?;
            OracleRow::new(
                name,
                rho,
                root,
                (rho - root).abs() <= 1e-9 * root.max(1e-300),
            )
        }
        VerifyCase::ClosedLoop {
            a_star,
            eps,
            runs,
            seed,
        } => {
            let plant = UncertainPlant::new(a_star.clone(), eps.clone(), vec![1.0; a_star.len()])?;
            let n = min_sufficient_n(&plant, Family::Optimal, 64, 0.0)?
                .ok_or_else(|| Error::InvalidArgument("no sufficient N up to 64".into()))?;
            let plan =
                QuantizerPlan::from_family(&plant, Family::Optimal, &Schedule::constant(n, 1)?)?;
            let b = run_batch(&plant, &plan, 500, *runs, *seed, 1e-6)?;
            let bad = b.saturations + b.invariant_failures + (b.runs - b.below_ratio);
            OracleRow::new(name, 0.0, bad as f64, bad == 0)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<OracleRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn to_csv(&self) -> String {
        crate::oracle::report_csv(&self.rows)
    }
}

/// Runs every case; an empty list is an error.
pub fn cmd_verify(cases: &[VerifyCase]) -> Result<VerifyReport> {
    if cases.is_empty() {
        return Err(Error::NoCases);
    }
    let rows = cases.par_iter().map(run_case).collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { rows })
}
