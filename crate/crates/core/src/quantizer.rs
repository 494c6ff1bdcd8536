//! Symmetric N-level quantizers on `[-1/2, 1/2]`.
//!
//! A quantizer is stored as its nonnegative boundary points
//! `h_0 = 0 < h_1 < ... < h_{ceil(N/2)} = 1/2`. For odd `N` the origin is not
//! a boundary and the center cell is `[-h_1, h_1)`. Interior boundaries belong
//! to the cell on their right; `-1/2` belongs to `C_1` and `+1/2` to `C_N`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::intervals::Interval;
use crate::plant::UncertainPlant;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    levels: usize,
    h: Vec<f64>,
}

/// One quantization cell `[lo, hi)`, or `[lo, hi]` for the rightmost cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// 1-based symbol.
    pub symbol: usize,
    pub lo: f64,
    pub hi: f64,
    pub closed_hi: bool,
    /// Index `l` of the boundary nearer the origin (`h_l`); 0 for the center cell.
    pub inner: usize,
}

impl Cell {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && (x < self.hi || (self.closed_hi && x == self.hi))
    }

    pub fn closure(&self) -> Interval {
        Interval::new(self.lo, self.hi).expect("cell endpoints are ordered")
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Expansion rates `w[i][l]` of cell `l` under coefficient `i` (zero-based),
/// and their row maxima.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionProfile {
    pub w: Vec<Vec<f64>>,
    pub w_bar: Vec<f64>,
}

impl ExpansionProfile {
    /// Rates of the pole-product coefficient `a_n`.
    pub fn last_row(&self) -> &[f64] {
        self.w.last().expect("profile has at least one row")
    }

    pub fn last_max(&self) -> f64 {
        *self.w_bar.last().expect("profile has at least one row")
    }
}

fn half_count(levels: usize) -> usize {
    levels.div_ceil(2)
}

impl QuantizerSpec {
    pub fn new(levels: usize, h: Vec<f64>) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidQuantizer(format!(
                "need at least 2 cells, got {levels}"
            )));
        }
        let half = half_count(levels);
        if h.len() != half + 1 {
            return Err(Error::InvalidQuantizer(format!(
                "{levels} cells need {} boundary points, got {}",
                half + 1,
                h.len()
            )));
        }
        if h[0] != 0.0 || h[half] != 0.5 {
            return Err(Error::InvalidQuantizer(
                "boundaries must start at 0 and end at 1/2".into(),
            ));
        }
        if h.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(Error::InvalidQuantizer(
                "boundaries must be strictly increasing".into(),
            ));
        }
        Ok(Self { levels, h })
    }

    /// Equal-width cells.
    pub fn uniform(levels: usize) -> Result<Self> {
        Self::new(levels, uniform_boundaries(levels))
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.h
    }

    /// Number of nonnegative cells, `ceil(N/2)`.
    pub fn half(&self) -> usize {
        half_count(self.levels)
    }

    /// All `N + 1` cell edges in ascending order, from `-1/2` to `1/2`.
    pub fn edges(&self) -> Vec<f64> {
        let skip_origin = self.levels % 2 == 1;
        let negative = self.h.iter().skip(1).rev().map(|h| -h);
        let positive = self.h.iter().skip(usize::from(skip_origin)).copied();
        let mut edges: Vec<f64> = negative.collect();
        edges.extend(positive);
        edges
    }

    /// `C_1, ..., C_N`, left to right.
    pub fn cells(&self) -> Vec<Cell> {
        let edges = self.edges();
        (1..=self.levels)
            .map(|symbol| Cell {
                symbol,
                lo: edges[symbol - 1],
                hi: edges[symbol],
                closed_hi: symbol == self.levels,
                inner: self.inner_index(symbol),
            })
            .collect()
    }

    /// Boundary index `l` nearer the origin for a symbol.
    pub fn inner_index(&self, symbol: usize) -> usize {
        let half = self.half();
        if self.levels % 2 == 1 {
            symbol.abs_diff(half)
        } else if symbol <= half {
            half - symbol
        } else {
            symbol - half - 1
        }
    }

    /// Symbol of the cell containing `x`.
    pub fn encode(&self, x: f64) -> Result<usize> {
        if !(-0.5..=0.5).contains(&x) {
            return Err(Error::Saturation { x });
        }
        let edges = self.edges();
        let interior = &edges[1..self.levels];
        Ok(1 + interior.partition_point(|&b| b <= x))
    }

    /// `sigma * C_s`, closed.
    pub fn decode(&self, symbol: usize, sigma: f64) -> Result<Interval> {
        if symbol == 0 || symbol > self.levels {
            return Err(Error::InvalidSymbol {
                symbol,
                cells: self.levels,
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let edges = self.edges();
        Interval::new(sigma * edges[symbol - 1], sigma * edges[symbol])
    }

    /// `l,h_l` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,h_l\n");
        for (l, h) in self.h.iter().enumerate() {
            let _ = writeln!(out, "{l},{}", fmt_num(*h));
        }
        out
    }
}

fn uniform_boundaries(levels: usize) -> Vec<f64> {
    let half = half_count(levels);
    let n = levels as f64;
    let mut h: Vec<f64> = (0..=half)
        .map(|l| {
            if l == 0 {
                0.0
            } else if levels % 2 == 1 {
                (l as f64 - 0.5) / n
            } else {
                l as f64 / n
            }
        })
        .collect();
    h[half] = 0.5;
    h
}

/// `r = (lambda - eps) / (lambda + eps)` and `t = lambda / (lambda - eps)`.
pub(crate) fn ratio_pair(lambda_abs: f64, eps_n: f64) -> Result<(f64, f64)> {
    let margin = lambda_abs - eps_n;
    if !(margin > 1.0) {
        return Err(Error::AssumptionViolated { margin });
    }
    Ok((margin / (lambda_abs + eps_n), lambda_abs / margin))
}

/// Boundaries of the rate-equalizing quantizer `q*_N`.
///
/// With `eps_n > 0` the cells shrink geometrically with ratio `r` towards
/// `±1/2`; with `eps_n = 0` they are uniform.
pub fn optimal_boundaries(lambda_abs: f64, eps_n: f64, levels: usize) -> Result<QuantizerSpec> {
    if levels < 2 {
        return Err(Error::InvalidQuantizer(format!(
            "need at least 2 cells, got {levels}"
        )));
    }
    if !(eps_n >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_n must be >= 0, got {eps_n}"
        )));
    }
    if eps_n == 0.0 {
        return QuantizerSpec::uniform(levels);
    }
    let (r, t) = ratio_pair(lambda_abs, eps_n)?;
    let half = half_count(levels);
    let odd = levels % 2 == 1;
    let scale = if odd { t } else { 1.0 };
    let denominator = 1.0 - scale * r.powi(half as i32);
    if !(denominator > 0.0) {
        return Err(Error::NonContracting { denominator });
    }
    let mut h: Vec<f64> = (0..=half)
        .map(|l| {
            if l == 0 {
                0.0
            } else {
                0.5 * (1.0 - scale * r.powi(l as i32)) / denominator
            }
        })
        .collect();
    h[half] = 0.5;
    if h.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidQuantizer(format!(
            "outer cells of q*_{levels} are narrower than double precision resolves"
        )));
    }
    QuantizerSpec::new(levels, h)
}

/// Expansion rates of every cell under every coefficient of `plant`.
pub fn expansion_profile(q: &QuantizerSpec, plant: &UncertainPlant) -> ExpansionProfile {
    let h = q.boundaries();
    let odd = q.levels() % 2 == 1;
    let w: Vec<Vec<f64>> = plant
        .a_star()
        .iter()
        .zip(plant.eps())
        .map(|(&a_star, &eps)| {
            let a = a_star.abs();
            let contains_zero = a <= eps;
            (0..q.half())
                .map(|l| {
                    if odd && l == 0 {
                        2.0 * (a + eps) * h[1]
                    } else if contains_zero {
                        2.0 * eps * h[l + 1]
                    } else {
                        (a + eps) * h[l + 1] - (a - eps) * h[l]
                    }
                })
                .collect()
        })
        .collect();
    let w_bar = w
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    ExpansionProfile { w, w_bar }
}

/// Largest expansion rate of `q*_N`.
pub fn v_rate(lambda_abs: f64, eps_n: f64, levels: usize) -> Result<f64> {
    if levels < 2 {
        return Err(Error::InvalidQuantizer(format!(
            "need at least 2 cells, got {levels}"
        )));
    }
    if eps_n == 0.0 {
        return Ok(lambda_abs / levels as f64);
    }
    let (r, t) = ratio_pair(lambda_abs, eps_n)?;
    let denominator = if levels % 2 == 1 {
        1.0 - t * r.powi(levels.div_ceil(2) as i32)
    } else {
        1.0 - r.powi((levels / 2) as i32)
    };
    if !(denominator > 0.0) {
        return Err(Error::NonContracting { denominator });
    }
    Ok(eps_n / denominator)
}
