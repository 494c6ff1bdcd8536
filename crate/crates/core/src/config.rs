//! Flat `key = value` configuration files.
//!
//! ```text
//! # Example 2 plant, sweeping a_2*
//! [plant]
//! n = 2
//! a_star = 1.0, 3.0
//! eps = 0.10, 0.35
//! init_bounds = 1, 1
//!
//! [sweep]
//! start = 2.0
//! stop = 6.0
//! step = 0.1
//!
//! [schedule]
//! m_max = 8
//! n_max = 64
//! family = optimal
//!
//! [sim]
//! horizon = 500
//! runs = 100
//!
//! [seeds]
//! seed = 42
//! ```
//!
//! `#` starts a comment. Vectors are comma separated. The sweep varies the
//! nominal pole product `|a_n*|` of the plant, keeping its sign.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::plant::{InitMode, SampleMode, UncertainPlant};
use crate::rates::Family;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(start <= stop) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sweep needs start <= stop and step > 0, got {start}..{stop} by {step}"
            )));
        }
        Ok(Self { start, stop, step })
    }

    /// `start + i * step` up to `stop`, computed by index so that repeated
    /// additions do not drift.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConfig {
    pub m_max: usize,
    pub n_max: usize,
    pub family: Family,
    pub margin: f64,
    /// Explicit cell counts for `simulate`; otherwise the smallest static
    /// sufficient count is used.
    pub sizes: Option<Vec<usize>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            m_max: 8,
            n_max: 64,
            family: Family::Optimal,
            margin: 0.0,
            sizes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    /// 0 runs a single trajectory; more runs a seeded Monte-Carlo batch.
    pub runs: usize,
    pub init: InitMode,
    pub instance: SampleMode,
    /// Batch pass threshold on `σ_K / σ_0`.
    pub ratio: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 500,
            runs: 0,
            init: InitMode::UpperEndpoints,
            instance: SampleMode::Nominal,
            ratio: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub plant: Option<UncertainPlant>,
    pub sweep: Option<Sweep>,
    pub schedule: ScheduleConfig,
    pub sim: SimConfig,
    pub seed: u64,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn plant(&self) -> Result<&UncertainPlant> {
        self.plant.as_ref().ok_or(Error::MissingSection("plant"))
    }

    pub fn sweep(&self) -> Result<&Sweep> {
        self.sweep.as_ref().ok_or(Error::MissingSection("sweep"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        let mut seen: HashSet<(String, String)> = HashSet::new();
        let mut plant = PlantKeys::default();
        let mut sweep = SweepKeys::default();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if !["plant", "sweep", "schedule", "sim", "seeds"].contains(&name) {
                    return Err(err(line, format!("unknown section [{name}]")));
                }
                if name == "plant" {
                    plant.line = line;
                }
                if name == "sweep" {
                    sweep.line = line;
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section
                .clone()
                .ok_or_else(|| err(line, "key outside of any section"))?;
            if !seen.insert((sec.clone(), key.to_string())) {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
            match (sec.as_str(), key) {
                ("plant", "n") => plant.n = Some(parse_num(line, value)?),
                ("plant", "a_star") => plant.a_star = Some(parse_vec(line, value)?),
                ("plant", "eps") => plant.eps = Some(parse_vec(line, value)?),
                ("plant", "init_bounds") => plant.init_bounds = Some(parse_vec(line, value)?),
                ("sweep", "start") => sweep.start = Some(parse_num(line, value)?),
                ("sweep", "stop") => sweep.stop = Some(parse_num(line, value)?),
                ("sweep", "step") => sweep.step = Some(parse_num(line, value)?),
                ("schedule", "m_max") => cfg.schedule.m_max = parse_num(line, value)?,
                ("schedule", "n_max") => cfg.schedule.n_max = parse_num(line, value)?,
                ("schedule", "margin") => cfg.schedule.margin = parse_num(line, value)?,
                ("schedule", "family") => {
                    cfg.schedule.family =
                        value.parse().map_err(|e: Error| err(line, e.to_string()))?
                }
                ("schedule", "sizes") => cfg.schedule.sizes = Some(parse_vec(line, value)?),
                ("sim", "horizon") => cfg.sim.horizon = parse_num(line, value)?,
                ("sim", "runs") => cfg.sim.runs = parse_num(line, value)?,
                ("sim", "ratio") => cfg.sim.ratio = parse_num(line, value)?,
                ("sim", "init") => cfg.sim.init = parse_init(line, value)?,
                ("sim", "instance") => cfg.sim.instance = parse_instance(line, value)?,
                ("seeds", "seed") => cfg.seed = parse_num(line, value)?,
                _ => return Err(err(line, format!("unknown key `{key}` in [{sec}]"))),
            }
        }

        cfg.plant = plant.build()?;
        cfg.sweep = sweep.build()?;
        Ok(cfg)
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| err(line, format!("cannot parse `{value}`")))
}

fn parse_vec<T: std::str::FromStr>(line: usize, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_num(line, v.trim()))
        .collect()
}

fn parse_init(line: usize, value: &str) -> Result<InitMode> {
    match value {
        "zero" => Ok(InitMode::Zero),
        "upper" => Ok(InitMode::UpperEndpoints),
        "lower" => Ok(InitMode::LowerEndpoints),
        _ => match value.strip_prefix("uniform:") {
            Some(seed) => Ok(InitMode::Uniform(parse_num(line, seed)?)),
            None => Err(err(
                line,
                format!("init must be zero, upper, lower or uniform:<seed>, got `{value}`"),
            )),
        },
    }
}

fn parse_instance(line: usize, value: &str) -> Result<SampleMode> {
    if value == "nominal" {
        return Ok(SampleMode::Nominal);
    }
    if let Some(j) = value.strip_prefix("vertex:") {
        return Ok(SampleMode::Vertex(parse_num(line, j)?));
    }
    if let Some(seed) = value.strip_prefix("uniform:") {
        return Ok(SampleMode::Uniform(parse_num(line, seed)?));
    }
    Err(err(
        line,
        format!("instance must be nominal, vertex:<j> or uniform:<seed>, got `{value}`"),
    ))
}

#[derive(Default)]
struct PlantKeys {
    line: usize,
    n: Option<usize>,
    a_star: Option<Vec<f64>>,
    eps: Option<Vec<f64>>,
    init_bounds: Option<Vec<f64>>,
}

impl PlantKeys {
    fn build(self) -> Result<Option<UncertainPlant>> {
        if self.line == 0 {
            return Ok(None);
        }
        let a_star = self
            .a_star
            .ok_or_else(|| err(self.line, "[plant] needs a_star"))?;
        let order = a_star.len();
        if let Some(n) = self.n {
            if n != order {
                return Err(err(
                    self.line,
                    format!("n = {n} but a_star has {order} entries"),
                ));
            }
        }
        let eps = self.eps.unwrap_or_else(|| vec![0.0; order]);
        let init = self.init_bounds.unwrap_or_else(|| vec![1.0; order]);
        UncertainPlant::new(a_star, eps, init)
            .map(Some)
            .map_err(|e| err(self.line, e.to_string()))
    }
}

#[derive(Default)]
struct SweepKeys {
    line: usize,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
}

impl SweepKeys {
    fn build(self) -> Result<Option<Sweep>> {
        if self.line == 0 {
            return Ok(None);
        }
        match (self.start, self.stop, self.step) {
            (Some(a), Some(b), Some(s)) => Sweep::new(a, b, s)
                .map(Some)
                .map_err(|e| err(self.line, e.to_string())),
            _ => Err(err(self.line, "[sweep] needs start, stop and step")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# Example 2
[plant]
n = 2
a_star = 1.0, 3.0   # a_1*, a_2*
eps = 0.10, 0.35
init_bounds = 1, 0.5

[sweep]
start = 2.0
stop = 6.0
step = 0.1

[schedule]
m_max = 4
n_max = 32
family = uniform
sizes = 2, 8

[sim]
horizon = 60
runs = 10
init = uniform:3
instance = vertex:2

[seeds]
seed = 42
";

    #[test]
    fn parses_every_section() {
        let cfg = Config::parse(FULL).unwrap();
        let p = cfg.plant().unwrap();
        assert_eq!(p.a_star(), &[1.0, 3.0]);
        assert_eq!(p.init_bounds(), &[1.0, 0.5]);
        assert_eq!(cfg.sweep().unwrap().points().len(), 41);
        assert_eq!(cfg.schedule.family, Family::Uniform);
        assert_eq!(cfg.schedule.sizes, Some(vec![2, 8]));
        assert_eq!(cfg.sim.init, InitMode::Uniform(3));
        assert_eq!(cfg.sim.instance, SampleMode::Vertex(2));
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn defaults_apply() {
        let cfg = Config::parse("[plant]\na_star = 3\neps = 0.5\n").unwrap();
        assert_eq!(cfg.plant().unwrap().init_bounds(), &[1.0]);
        assert_eq!(cfg.schedule, ScheduleConfig::default());
        assert!(matches!(cfg.sweep(), Err(Error::MissingSection("sweep"))));
        assert!(matches!(
            Config::parse("").unwrap().plant(),
            Err(Error::MissingSection("plant"))
        ));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[plant]\na_star = 3, x\n", 2),
            ("[plant]\na_star = 3\n\n[oops]\n", 4),
            ("a_star = 3\n", 1),
            ("[plant]\na_star 3\n", 2),
            ("[plant]\na_star = 3\na_star = 4\n", 3),
            ("[sim]\nbogus = 1\n", 2),
            ("\n[plant]\nn = 2\na_star = 3\n", 2),
            ("[sweep]\nstart = 2\nstop = 1\nstep = 0.1\n", 1),
            ("[sim]\ninit = sideways\n", 2),
            ("[plant]\na_star = 3\neps = -1\n", 1),
        ];
        for (text, want) in cases {
            match Config::parse(text) {
                Err(Error::Config { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn sweep_points_do_not_drift() {
        let pts = Sweep::new(1.5, 5.0, 0.05).unwrap().points();
        assert_eq!(pts.len(), 71);
        assert!((pts[70] - 5.0).abs() < 1e-12);
    }
}
