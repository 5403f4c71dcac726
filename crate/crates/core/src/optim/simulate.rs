use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    Adafactor, AdafactorHyper, Adam, AdamHyper, Defaults, Objective, OptimError, RAdam, Schedule,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    RAdam,
    Adafactor,
}

impl FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adam" => Ok(Self::Adam),
            "radam" => Ok(Self::RAdam),
            "adafactor" => Ok(Self::Adafactor),
            _ => Err(format!("unknown optimizer `{s}` (adam, radam, adafactor)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub step: u64,
    /// Loss after the update of this step.
    pub loss: f64,
    /// Step size used: the schedule value for Adam and RAdam, the relative
    /// step times the parameter scale for Adafactor.
    pub lr: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub diverged: bool,
    pub final_params: Vec<f64>,
}

impl Trajectory {
    pub fn final_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,lr,diverged\n");
        for r in &self.rows {
            writeln!(out, "{},{:e},{:e},{}", r.step, r.loss, r.lr, u8::from(r.diverged))
                .expect("writing to a String");
        }
        out
    }
}

enum Runner {
    Adam(Adam),
    RAdam(RAdam),
    Adafactor(Adafactor),
}

/// Runs `steps` updates from a start drawn uniformly in `[-2, 2]^dim` with
/// `seed`. Without a schedule Adam and RAdam use the defaults-file learning
/// rate and Adafactor its built-in relative step.
pub fn simulate(
    kind: OptimizerKind,
    schedule: Option<Schedule>,
    objective: Objective,
    steps: u64,
    seed: u64,
    defaults: &Defaults,
) -> Result<Trajectory, OptimError> {
    let start = objective.random_point(&mut ChaCha8Rng::seed_from_u64(seed));
    simulate_from(kind, schedule, objective, steps, start, defaults)
}

/// Like [`simulate`] from a given starting point. The run stops at the
/// first step whose loss is non-finite or above `simulate.divergence_loss`,
/// or whose gradient is non-finite; that row carries the divergence flag.
pub fn simulate_from(
    kind: OptimizerKind,
    schedule: Option<Schedule>,
    objective: Objective,
    steps: u64,
    start: Vec<f64>,
    defaults: &Defaults,
) -> Result<Trajectory, OptimError> {
    if start.len() != objective.dim() {
        return Err(OptimError::LengthMismatch {
            expected: objective.dim(),
            found: start.len(),
        });
    }
    let limit = defaults.f64("simulate.divergence_loss")?;
    let mut runner = match kind {
        OptimizerKind::Adam => Runner::Adam(Adam::new(
            AdamHyper::from_defaults(defaults, "adam")?,
            objective.dim(),
        )?),
        OptimizerKind::RAdam => Runner::RAdam(RAdam::new(
            AdamHyper::from_defaults(defaults, "radam")?,
            objective.dim(),
        )?),
        OptimizerKind::Adafactor => Runner::Adafactor(Adafactor::new(
            AdafactorHyper::from_defaults(defaults)?,
            objective.shape(),
        )?),
    };
    let fallback = match kind {
        OptimizerKind::Adam => Some(defaults.f64("adam.lr")?),
        OptimizerKind::RAdam => Some(defaults.f64("radam.lr")?),
        OptimizerKind::Adafactor => None,
    };

    let mut params = start;
    let mut rows = Vec::with_capacity(steps as usize);
    let mut diverged = false;
    for step in 1..=steps {
        let lr = match schedule {
            Some(s) => Some(s.value(step)?),
            None => fallback,
        };
        let grads = objective.gradient(&params);
        let result = match &mut runner {
            Runner::Adam(o) => {
                let lr = lr.expect("adam always has a learning rate");
                o.step(&params, &grads, lr).map(|d| (d, lr))
            }
            Runner::RAdam(o) => {
                let lr = lr.expect("radam always has a learning rate");
                o.step(&params, &grads, lr).map(|d| (d, lr))
            }
            Runner::Adafactor(o) => o.step(&params, &grads, lr).map(|d| (d, o.last_lr())),
        };
        let (loss, used_lr) = match result {
            Ok((delta, used)) => {
                params.iter_mut().zip(&delta).for_each(|(p, d)| *p += d);
                (objective.loss(&params), used)
            }
            Err(OptimError::NonFiniteGradient { .. }) => (f64::NAN, lr.unwrap_or(f64::NAN)),
            Err(e) => return Err(e),
        };
        diverged = !loss.is_finite() || loss > limit;
        rows.push(TrajectoryRow {
            step,
            loss,
            lr: used_lr,
            diverged,
        });
        if diverged {
            break;
        }
    }
    Ok(Trajectory {
        rows,
        diverged,
        final_params: params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d() -> &'static Defaults {
        Defaults::builtin()
    }

    #[test]
    fn adam_solves_the_bowl() {
        let s = Some(Schedule::Constant { lr: 1e-2 });
        let t = simulate(OptimizerKind::Adam, s, Objective::Bowl, 2000, 0, d()).unwrap();
        assert!(!t.diverged);
        assert_eq!(t.rows.len(), 2000);
        assert!(t.final_loss().unwrap() < 1e-6, "{:?}", t.final_loss());
    }

    #[test]
    fn adafactor_defaults_solve_the_bowl() {
        let t = simulate(OptimizerKind::Adafactor, None, Objective::Bowl, 5000, 0, d()).unwrap();
        assert!(t.final_loss().unwrap() < 1e-4, "{:?}", t.final_loss());
        for w in t.rows.windows(2) {
            assert!(w[1].loss <= w[0].loss, "loss rose at step {}", w[1].step);
        }
        let golden = [
            (1, 9.929525795037463),
            (10, 8.399483628316396),
            (100, 2.1375220923538363),
            (1000, 0.007600767054912829),
            (5000, 2.0345335262290797e-6),
        ];
        for (step, loss) in golden {
            let got = t.rows[step - 1].loss;
            assert!((got - loss).abs() <= 1e-9 * loss, "step {step}: {got}");
        }
    }

    #[test]
    fn optimum_start_stays_put() {
        for kind in [OptimizerKind::Adam, OptimizerKind::RAdam, OptimizerKind::Adafactor] {
            for o in Objective::ALL {
                let t = simulate_from(kind, None, o, 50, o.minimizer(), d()).unwrap();
                assert!(t.rows.iter().all(|r| r.loss == 0.0), "{kind:?} {o}");
            }
        }
    }

    #[test]
    fn huge_steps_diverge() {
        let s = Some(Schedule::Constant { lr: 1e200 });
        let t = simulate(OptimizerKind::Adam, s, Objective::Rosenbrock, 100, 1, d()).unwrap();
        assert!(t.diverged);
        assert!(t.rows.last().unwrap().diverged);
        assert!(t.rows.len() < 100);
    }

    #[test]
    fn deterministic_csv() {
        let run = || {
            simulate(OptimizerKind::RAdam, None, Objective::IllConditioned, 50, 9, d())
                .unwrap()
                .to_csv()
        };
        let csv = run();
        assert_eq!(csv, run());
        assert!(csv.starts_with("step,loss,lr,diverged\n1,"));
        assert_eq!(csv.lines().count(), 51);
    }
}
