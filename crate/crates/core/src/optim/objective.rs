use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::ParamShape;

/// Test functions with closed-form gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// `0.5 * |theta|^2` over a 4x4 matrix, so Adafactor takes its
    /// factored path.
    Bowl,
    /// `0.5 * sum c_i theta_i^2` with `c_i = 10^(3i/7)`, i = 0..8:
    /// condition number 1000.
    IllConditioned,
    /// `(1 - x)^2 + 100 (y - x^2)^2`.
    Rosenbrock,
}

impl Objective {
    pub const ALL: [Objective; 3] = [
        Objective::Bowl,
        Objective::IllConditioned,
        Objective::Rosenbrock,
    ];

    pub fn shape(self) -> ParamShape {
        match self {
            Objective::Bowl => ParamShape::Matrix { rows: 4, cols: 4 },
            Objective::IllConditioned => ParamShape::Vector(8),
            Objective::Rosenbrock => ParamShape::Vector(2),
        }
    }

    pub fn dim(self) -> usize {
        self.shape().len()
    }

    fn curvature(i: usize) -> f64 {
        10f64.powf(3.0 * i as f64 / 7.0)
    }

    pub fn minimizer(self) -> Vec<f64> {
        match self {
            Objective::Rosenbrock => vec![1.0, 1.0],
            _ => vec![0.0; self.dim()],
        }
    }

    pub fn loss(self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim());
        match self {
            Objective::Bowl => 0.5 * theta.iter().map(|x| x * x).sum::<f64>(),
            Objective::IllConditioned => {
                0.5 * theta
                    .iter()
                    .enumerate()
                    .map(|(i, x)| Self::curvature(i) * x * x)
                    .sum::<f64>()
            }
            Objective::Rosenbrock => {
                let (x, y) = (theta[0], theta[1]);
                (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
            }
        }
    }

    pub fn gradient(self, theta: &[f64]) -> Vec<f64> {
        debug_assert_eq!(theta.len(), self.dim());
        match self {
            Objective::Bowl => theta.to_vec(),
            Objective::IllConditioned => theta
                .iter()
                .enumerate()
                .map(|(i, x)| Self::curvature(i) * x)
                .collect(),
            Objective::Rosenbrock => {
                let (x, y) = (theta[0], theta[1]);
                vec![
                    -2.0 * (1.0 - x) - 400.0 * x * (y - x * x),
                    200.0 * (y - x * x),
                ]
            }
        }
    }

    /// Uniform start in `[-2, 2]^dim`.
    pub fn random_point<R: Rng + ?Sized>(self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.gen_range(-2.0..=2.0)).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Bowl => "bowl",
            Objective::IllConditioned => "ill-conditioned",
            Objective::Rosenbrock => "rosenbrock",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown objective `{s}` (bowl, ill-conditioned, rosenbrock)"))
    }
}

/// Central differences with a step scaled to each coordinate.
pub fn finite_difference_gradient(objective: Objective, theta: &[f64]) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = 1e-6 * theta[i].abs().max(1.0);
            probe[i] = theta[i] + h;
            let up = objective.loss(&probe);
            probe[i] = theta[i] - h;
            let down = objective.loss(&probe);
            probe[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
