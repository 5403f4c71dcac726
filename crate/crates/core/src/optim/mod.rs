//! Adam, RAdam and Adafactor updates, learning-rate schedules, and a small
//! harness that runs them on analytic objectives.
//!
//! Every optimizer owns the state of one parameter group and exposes
//! `step(params, grads, ..) -> delta`: the caller applies `params += delta`.
//! Gradients are checked before any state is touched, so a rejected step
//! leaves the optimizer exactly as it was.

mod adafactor;
mod adam;
mod defaults;
mod objective;
mod schedule;
mod simulate;

use thiserror::Error;

pub use adafactor::{factored_second_moment, row_col_means, Adafactor, AdafactorHyper};
pub use adam::{radam_rectifier, radam_rho, Adam, AdamHyper, RAdam};
pub use defaults::{Defaults, DefaultsError};
pub use objective::{finite_difference_gradient, Objective};
pub use schedule::{Schedule, ScheduleSpec};
pub use simulate::{simulate, simulate_from, OptimizerKind, Trajectory, TrajectoryRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("gradient {index} is not finite ({value})")]
    NonFiniteGradient { index: usize, value: f64 },
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyper(String),
    #[error("schedule steps start at 1, got {0}")]
    Step(u64),
    #[error(transparent)]
    Defaults(#[from] DefaultsError),
}

/// Layout of a parameter group. Matrices are row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamShape {
    Vector(usize),
    Matrix { rows: usize, cols: usize },
}

impl ParamShape {
    pub fn len(self) -> usize {
        match self {
            ParamShape::Vector(n) => n,
            ParamShape::Matrix { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

pub(crate) fn check_inputs(n: usize, params: &[f64], grads: &[f64]) -> Result<(), OptimError> {
    for len in [params.len(), grads.len()] {
        if len != n {
            return Err(OptimError::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if let Some((index, &value)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(OptimError::NonFiniteGradient { index, value });
    }
    Ok(())
}

pub(crate) fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}
