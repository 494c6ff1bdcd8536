//! Periodic quantizer schedules: the product-matrix stability test and the
//! minimum-average-rate search.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::plant::UncertainPlant;
use crate::rates::spectral::{matrix_spectral_radius, spectral_radius, HMatrix, DEFAULT_TOLERANCE};
use crate::rates::{h_matrix, Family, StabilityVerdict};

/// Cell counts `N_0, ..., N_{m-1}` repeated with period `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    sizes: Vec<usize>,
}

impl Schedule {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidSchedule("period must be positive".into()));
        }
        if let Some(bad) = sizes.iter().find(|n| **n < 2) {
            return Err(Error::InvalidSchedule(format!(
                "every slot needs at least 2 cells, got {bad}"
            )));
        }
        Ok(Self { sizes })
    }

    pub fn constant(levels: usize, period: usize) -> Result<Self> {
        Self::new(vec![levels; period])
    }

    pub fn period(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Cell count used at time `k`.
    pub fn size_at(&self, k: usize) -> usize {
        self.sizes[k % self.sizes.len()]
    }

    /// `(1/m) Σ log2 N_j`.
    pub fn average_rate(&self) -> f64 {
        self.sizes.iter().map(|n| (*n as f64).log2()).sum::<f64>() / self.period() as f64
    }
}

pub(crate) fn schedule_h_matrices(
    plant: &UncertainPlant,
    schedule: &Schedule,
    family: Family,
) -> Result<Vec<HMatrix>> {
    schedule
        .sizes()
        .iter()
        .map(|&n| h_matrix(plant, &family.quantizer(plant, n)?))
        .collect()
}

fn product_radius(hs: &[HMatrix]) -> Result<f64> {
    if hs.len() == 1 {
        return spectral_radius(&hs[0], DEFAULT_TOLERANCE);
    }
    if hs[0].order() == 1 {
        return Ok(hs.iter().fold(1.0, |acc, h| acc * h.w_bar()[0]));
    }
    let mut product: DMatrix<f64> = hs[0].to_matrix();
    for h in &hs[1..] {
        product = h.to_matrix() * product;
    }
    matrix_spectral_radius(&product, DEFAULT_TOLERANCE)
}

/// `rho(H_{m-1} ... H_1 H_0)`; stable when below `1 - margin`.
pub fn periodic_sufficient_test(
    plant: &UncertainPlant,
    schedule: &Schedule,
    family: Family,
    margin: f64,
) -> Result<StabilityVerdict> {
    let hs = schedule_h_matrices(plant, schedule, family)?;
    Ok(StabilityVerdict::new(product_radius(&hs)?, margin))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSearch {
    pub schedule: Schedule,
    pub avg_rate: f64,
    /// True when the search is exhaustive (scalar plants).
    pub exact: bool,
}

const TIE: f64 = 1e-9;

/// Minimum average rate over schedules with period `<= m_max` and cell
/// counts in `2..=n_max` that pass [`periodic_sufficient_test`].
///
/// Exact for scalar plants, where the product of rates commutes and the
/// search runs over multisets. Higher orders use a two-level heuristic.
/// Ties go to the shorter period, then to the lexicographically smaller
/// sizes.
pub fn search_periodic_schedule(
    plant: &UncertainPlant,
    m_max: usize,
    n_max: usize,
    family: Family,
    margin: f64,
) -> Result<Option<ScheduleSearch>> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("m_max must be >= 1".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::InvalidArgument(format!(
            "margin must lie in [0, 1), got {margin}"
        )));
    }
    let mut hs: Vec<HMatrix> = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        match family.quantizer(plant, n) {
            Ok(q) => hs.push(h_matrix(plant, &q)?),
            Err(Error::InvalidQuantizer(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let found = if plant.order() == 1 {
        let rates: Vec<f64> = hs.iter().map(|h| h.w_bar()[0]).collect();
        ScalarSearch::new(&rates, margin).run(m_max)
    } else {
        heuristic_search(&hs, m_max, margin)?
    };
    let Some(sizes) = found else {
        return Ok(None);
    };
    let schedule = Schedule::new(sizes)?;
    Ok(Some(ScheduleSearch {
        avg_rate: schedule.average_rate(),
        schedule,
        exact: plant.order() == 1,
    }))
}

#[derive(Debug, Clone, Copy)]
struct Item {
    levels: usize,
    cost: f64,
    rate: f64,
    benefit: f64,
}

/// Lower convex envelope of `(benefit, cost)` over a suffix of the items:
/// the cheapest mixture reaching a given mean benefit.
#[derive(Debug, Clone)]
struct Envelope {
    points: Vec<(f64, f64)>,
}

impl Envelope {
    fn build(items: &[Item]) -> Self {
        let start = (items[0].benefit, items[0].cost);
        let mut rest: Vec<(f64, f64)> = items[1..]
            .iter()
            .filter(|it| it.benefit > start.0)
            .map(|it| (it.benefit, it.cost))
            .collect();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut hull: Vec<(f64, f64)> = vec![start];
        for p in rest {
            if hull.last().is_some_and(|q| q.0 == p.0) {
                continue;
            }
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Self { points: hull }
    }

    fn max_benefit(&self) -> f64 {
        self.points.last().expect("nonempty").0
    }

    /// Cheapest mean cost with mean benefit at least `beta`.
    fn eval(&self, beta: f64) -> Option<f64> {
        let first = self.points[0];
        if beta <= first.0 {
            return Some(first.1);
        }
        if beta > self.max_benefit() + 1e-12 {
            return None;
        }
        let k = self.points.partition_point(|p| p.0 < beta);
        if k >= self.points.len() {
            return Some(self.points.last().expect("nonempty").1);
        }
        let (a, b) = (self.points[k - 1], self.points[k]);
        Some(a.1 + (b.1 - a.1) * (beta - a.0) / (b.0 - a.0))
    }
}

struct ScalarSearch {
    items: Vec<Item>,
    envelopes: Vec<Envelope>,
    bound: f64,
    threshold: f64,
}

struct Incumbent {
    cost: f64,
    sizes: Option<Vec<usize>>,
}

impl ScalarSearch {
    fn new(rates: &[f64], margin: f64) -> Self {
        let items: Vec<Item> = rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| {
                let levels = i + 2;
                Item {
                    levels,
                    cost: (levels as f64).log2(),
                    rate,
                    benefit: -rate.ln(),
                }
            })
            .collect();
        let envelopes = (0..items.len())
            .map(|s| Envelope::build(&items[s..]))
            .collect();
        let bound = 1.0 - margin;
        Self {
            items,
            envelopes,
            bound,
            threshold: -bound.ln(),
        }
    }

    fn run(&self, m_max: usize) -> Option<Vec<usize>> {
        let mut best_avg = f64::INFINITY;
        let mut best = None;
        for m in 1..=m_max {
            let mut incumbent = Incumbent {
                cost: best_avg * m as f64,
                sizes: None,
            };
            let mut prefix = Vec::with_capacity(m);
            self.descend(m, 0, 0.0, 0.0, 1.0, &mut prefix, &mut incumbent);
            if let Some(sizes) = incumbent.sizes {
                best_avg = incumbent.cost / m as f64;
                best = Some(sizes);
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        m: usize,
        start: usize,
        cost: f64,
        benefit: f64,
        product: f64,
        prefix: &mut Vec<usize>,
        incumbent: &mut Incumbent,
    ) {
        let remaining = m - prefix.len();
        if remaining == 0 {
            if product < self.bound && cost < incumbent.cost - TIE {
                incumbent.cost = cost;
                incumbent.sizes = Some(prefix.clone());
            }
            return;
        }
        let need = (self.threshold - benefit) / remaining as f64;
        for idx in start..self.items.len() {
            // both the envelope cost and its infeasibility only worsen with idx
            let Some(mean_cost) = self.envelopes[idx].eval(need) else {
                break;
            };
            if cost + remaining as f64 * mean_cost >= incumbent.cost - TIE {
                break;
            }
            let item = self.items[idx];
            prefix.push(item.levels);
            self.descend(
                m,
                idx,
                cost + item.cost,
                benefit + item.benefit,
                product * item.rate,
                prefix,
                incumbent,
            );
            prefix.pop();
        }
    }
}

/// Schedules built from at most two cell counts, spread evenly over the
/// period. `hs[i]` belongs to `N = i + 2`.
fn heuristic_search(hs: &[HMatrix], m_max: usize, margin: f64) -> Result<Option<Vec<usize>>> {
    let bound = 1.0 - margin;
    let mut best_avg = f64::INFINITY;
    let mut best: Option<Vec<usize>> = None;
    let log2 = |n: usize| (n as f64).log2();
    for m in 1..=m_max {
        for b in 0..hs.len() {
            for a in 0..=b {
                let counts: Vec<usize> = if a == b { vec![m] } else { (1..m).collect() };
                for k in counts {
                    // k slots of the larger count, m - k of the smaller
                    let (na, nb) = (a + 2, b + 2);
                    let avg = ((m - k) as f64 * log2(na) + k as f64 * log2(nb)) / m as f64;
                    if avg >= best_avg - TIE {
                        continue;
                    }
                    let sizes: Vec<usize> = (0..m)
                        .map(|j| if (j + 1) * k / m > j * k / m { nb } else { na })
                        .collect();
                    let slot_hs: Vec<HMatrix> = sizes.iter().map(|n| hs[n - 2].clone()).collect();
                    if product_radius(&slot_hs)? < bound {
                        best_avg = avg;
                        best = Some(sizes);
                    }
                }
            }
        }
    }
    Ok(best)
}
