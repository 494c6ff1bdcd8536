//! Uncertain autoregressive plants `y_{k+1} = a_1 y_k + ... + a_n y_{k-n+1} + u_k`
//! with each `a_i` somewhere in `[a_i* - eps_i, a_i* + eps_i]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::intervals::Interval;

/// Nominal parameters, perturbation widths and initial-output bounds.
///
/// `init_bounds[j]` bounds `|y_{j-n+1}|`, so the last entry bounds `y_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainPlant {
    a_star: Vec<f64>,
    eps: Vec<f64>,
    init_bounds: Vec<f64>,
}

/// One admissible parameter vector, fixed for a whole run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantInstance {
    a: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Nominal,
    /// Bit `i` of the index selects `a_i* + eps_i` (set) or `a_i* - eps_i`.
    Vertex(usize),
    Uniform(u64),
}

/// How the unquantized initial outputs `y_{-n+1}, ..., y_0` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Zero,
    UpperEndpoints,
    LowerEndpoints,
    Uniform(u64),
}

impl UncertainPlant {
    pub fn new(a_star: Vec<f64>, eps: Vec<f64>, init_bounds: Vec<f64>) -> Result<Self> {
        let n = a_star.len();
        if n == 0 {
            return Err(Error::InvalidPlant("order must be positive".into()));
        }
        if eps.len() != n || init_bounds.len() != n {
            return Err(Error::InvalidPlant(format!(
                "expected {n} entries in eps and init_bounds, got {} and {}",
                eps.len(),
                init_bounds.len()
            )));
        }
        if a_star.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPlant("a_star must be finite".into()));
        }
        if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(Error::InvalidPlant("eps entries must be >= 0".into()));
        }
        if init_bounds.iter().any(|y| !y.is_finite() || *y <= 0.0) {
            return Err(Error::InvalidPlant(
                "init_bounds entries must be > 0".into(),
            ));
        }
        Ok(Self {
            a_star,
            eps,
            init_bounds,
        })
    }

    /// Scalar plant `y_{k+1} = a y_k + u_k` with unit initial bound.
    pub fn scalar(a_star: f64, eps: f64) -> Result<Self> {
        Self::new(vec![a_star], vec![eps], vec![1.0])
    }

    pub fn order(&self) -> usize {
        self.a_star.len()
    }

    pub fn a_star(&self) -> &[f64] {
        &self.a_star
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn init_bounds(&self) -> &[f64] {
        &self.init_bounds
    }

    /// `|a_n*|`, the magnitude of the nominal pole product.
    pub fn poles_product_magnitude(&self) -> f64 {
        self.a_star[self.order() - 1].abs()
    }

    /// `eps_n`, the uncertainty on the pole product.
    pub fn eps_n(&self) -> f64 {
        self.eps[self.order() - 1]
    }

    pub fn satisfies_assumption1(&self) -> bool {
        self.poles_product_magnitude() - self.eps_n() > 1.0
    }

    /// `A_i` for a zero-based coefficient index.
    pub fn parameter_interval(&self, i: usize) -> Interval {
        Interval::centered(self.a_star[i], self.eps[i]).expect("eps is nonnegative by construction")
    }

    pub fn parameter_intervals(&self) -> Vec<Interval> {
        (0..self.order())
            .map(|i| self.parameter_interval(i))
            .collect()
    }

    /// Same plant with the pole-product coefficient replaced, used by sweeps.
    pub fn with_pole_product(&self, a_n: f64) -> Result<Self> {
        let mut a_star = self.a_star.clone();
        let n = a_star.len();
        a_star[n - 1] = a_n;
        Self::new(a_star, self.eps.clone(), self.init_bounds.clone())
    }

    pub fn with_eps_n(&self, eps_n: f64) -> Result<Self> {
        let mut eps = self.eps.clone();
        let n = eps.len();
        eps[n - 1] = eps_n;
        Self::new(self.a_star.clone(), eps, self.init_bounds.clone())
    }

    pub fn sample_instance(&self, mode: SampleMode) -> Result<PlantInstance> {
        let n = self.order();
        let a = match mode {
            SampleMode::Nominal => self.a_star.clone(),
            SampleMode::Vertex(index) => {
                if n >= usize::BITS as usize || index >> n != 0 {
                    return Err(Error::VertexIndex { index, order: n });
                }
                (0..n)
                    .map(|i| {
                        if index >> i & 1 == 1 {
                            self.a_star[i] + self.eps[i]
                        } else {
                            self.a_star[i] - self.eps[i]
                        }
                    })
                    .collect()
            }
            SampleMode::Uniform(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n)
                    .map(|i| {
                        let u: f64 = rng.gen();
                        let a = self.a_star[i] - self.eps[i] + 2.0 * self.eps[i] * u;
                        a.clamp(self.a_star[i] - self.eps[i], self.a_star[i] + self.eps[i])
                    })
                    .collect()
            }
        };
        Ok(PlantInstance { a })
    }

    pub fn is_admissible(&self, inst: &PlantInstance) -> bool {
        inst.a.len() == self.order()
            && inst
                .a
                .iter()
                .enumerate()
                .all(|(i, a)| self.parameter_interval(i).contains(*a))
    }

    /// Initial outputs ordered most recent first: `(y_0, y_{-1}, ..., y_{-n+1})`.
    pub fn initial_outputs(&self, mode: InitMode) -> Vec<f64> {
        let mut rng = match mode {
            InitMode::Uniform(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        self.init_bounds
            .iter()
            .rev()
            .map(|&bound| match mode {
                InitMode::Zero => 0.0,
                InitMode::UpperEndpoints => bound,
                InitMode::LowerEndpoints => -bound,
                InitMode::Uniform(_) => {
                    let u: f64 = rng.as_mut().expect("seeded above").gen();
                    (bound * (2.0 * u - 1.0)).clamp(-bound, bound)
                }
            })
            .collect()
    }
}

impl PlantInstance {
    pub fn new(a: Vec<f64>) -> Self {
        Self { a }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// One plant update. `history` is `(y_k, ..., y_{k-n+1})`, most recent first.
    pub fn step(&self, history: &[f64], u: f64) -> Result<f64> {
        if history.len() != self.a.len() {
            return Err(Error::HistoryLength {
                expected: self.a.len(),
                got: history.len(),
            });
        }
        Ok(self.a.iter().zip(history).map(|(a, y)| a * y).sum::<f64>() + u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pole_product_magnitude() {
        assert_eq!(
            UncertainPlant::scalar(2.0, 0.0)
                .unwrap()
                .poles_product_magnitude(),
            2.0
        );
        let p = UncertainPlant::new(vec![1.0, 3.0], vec![0.1, 0.35], vec![1.0, 1.0]).unwrap();
        assert_eq!(p.poles_product_magnitude(), 3.0);
        let p = UncertainPlant::new(vec![0.0, 0.0, -2.5], vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(p.poles_product_magnitude(), 2.5);
    }

    #[test]
    fn assumption1() {
        assert!(UncertainPlant::scalar(3.0, 0.5)
            .unwrap()
            .satisfies_assumption1());
        assert!(!UncertainPlant::scalar(1.3, 0.35)
            .unwrap()
            .satisfies_assumption1());
        assert!(UncertainPlant::scalar(-3.0, 0.5)
            .unwrap()
            .satisfies_assumption1());
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        assert!(UncertainPlant::new(vec![], vec![], vec![]).is_err());
        assert!(UncertainPlant::new(vec![2.0], vec![-0.1], vec![1.0]).is_err());
        assert!(UncertainPlant::new(vec![2.0], vec![0.1], vec![0.0]).is_err());
        assert!(UncertainPlant::new(vec![2.0], vec![0.1, 0.2], vec![1.0]).is_err());
    }

    #[test]
    fn step_examples() {
        let inst = PlantInstance::new(vec![2.0]);
        assert_eq!(inst.step(&[1.0], 0.0).unwrap(), 2.0);
        assert_eq!(inst.step(&[1.0], -2.0).unwrap(), 0.0);
        let inst = PlantInstance::new(vec![1.1, 3.2]);
        assert!((inst.step(&[0.5, -0.25], 0.1).unwrap() + 0.15).abs() < 1e-15);
        assert_eq!(
            inst.step(&[0.5], 0.0),
            Err(Error::HistoryLength {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn sampling_modes() {
        let p = UncertainPlant::scalar(3.0, 0.5).unwrap();
        assert_eq!(
            p.sample_instance(SampleMode::Nominal)
                .unwrap()
                .coefficients(),
            &[3.0]
        );
        assert_eq!(
            p.sample_instance(SampleMode::Vertex(1))
                .unwrap()
                .coefficients(),
            &[3.5]
        );
        assert_eq!(
            p.sample_instance(SampleMode::Vertex(0))
                .unwrap()
                .coefficients(),
            &[2.5]
        );
        assert_eq!(
            p.sample_instance(SampleMode::Vertex(2)),
            Err(Error::VertexIndex { index: 2, order: 1 })
        );
        let a = p.sample_instance(SampleMode::Uniform(7)).unwrap();
        let b = p.sample_instance(SampleMode::Uniform(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_outputs_are_most_recent_first() {
        let p = UncertainPlant::new(vec![0.5, 2.0], vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(p.initial_outputs(InitMode::UpperEndpoints), vec![3.0, 1.0]);
        assert_eq!(p.initial_outputs(InitMode::Zero), vec![0.0, 0.0]);
        let ys = p.initial_outputs(InitMode::Uniform(3));
        assert!(ys[0].abs() <= 3.0 && ys[1].abs() <= 1.0);
        assert_eq!(ys, p.initial_outputs(InitMode::Uniform(3)));
    }

    proptest! {
        #[test]
        fn sampled_instances_are_admissible(
            a in prop::collection::vec(-5.0f64..5.0, 1..5),
            e in 0.0f64..1.0,
            seed in any::<u64>(),
            vertex in 0usize..16,
        ) {
            let n = a.len();
            let p = UncertainPlant::new(a, vec![e; n], vec![1.0; n]).unwrap();
            prop_assert!(p.is_admissible(&p.sample_instance(SampleMode::Uniform(seed)).unwrap()));
            prop_assert!(p.is_admissible(&p.sample_instance(SampleMode::Nominal).unwrap()));
            let idx = vertex % (1 << n);
            prop_assert!(p.is_admissible(&p.sample_instance(SampleMode::Vertex(idx)).unwrap()));
        }

        #[test]
        fn step_is_homogeneous(
            a in prop::collection::vec(-3.0f64..3.0, 3),
            h in prop::collection::vec(-2.0f64..2.0, 3),
            u in -2.0f64..2.0,
            alpha in -4.0f64..4.0,
        ) {
            let inst = PlantInstance::new(a);
            let scaled: Vec<f64> = h.iter().map(|y| alpha * y).collect();
            let lhs = inst.step(&scaled, alpha * u).unwrap();
            let rhs = alpha * inst.step(&h, u).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
