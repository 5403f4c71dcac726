use std::fmt;
use std::str::FromStr;

use super::{Defaults, OptimError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Constant { lr: f64 },
    /// Linear ramp from 0 to `target` over `warmup` steps, then flat.
    /// `warmup = 0` is a constant `target`.
    LinearWarmup { target: f64, warmup: u64 },
    /// `scale * min(step^-0.5, step / knee)`.
    Noam { scale: f64, knee: f64 },
    /// Relative step `min(1e-2, 1/sqrt(s))` where `s` only advances every
    /// `call_every` steps.
    AdafactorAnneal { call_every: u64 },
}

impl Schedule {
    /// The 0.0325 / 252982 preset; the two arguments of the `min` meet at
    /// step 4000, because 252982 is 4000^1.5 rounded.
    pub fn noam() -> Self {
        let d = Defaults::builtin();
        Schedule::Noam {
            scale: d.f64("noam.scale").expect("builtin"),
            knee: d.f64("noam.knee").expect("builtin"),
        }
    }

    /// The transformer parameterization `d_model^-0.5 * min(s^-0.5, s * warmup^-1.5)`.
    pub fn noam_from_model(d_model: usize, warmup: u64) -> Self {
        Schedule::Noam {
            scale: (d_model as f64).powf(-0.5),
            knee: (warmup as f64).powf(1.5),
        }
    }

    /// Cadence `min(epoch_iters, round(2 / (1 - beta2)))`.
    pub fn adafactor_anneal(epoch_iters: u64, beta2: f64) -> Result<Self, OptimError> {
        if !(0.0..1.0).contains(&beta2) {
            return Err(OptimError::Hyper(format!("beta2 = {beta2} is outside [0, 1)")));
        }
        let horizon = (2.0 / (1.0 - beta2)).round() as u64;
        let call_every = epoch_iters.min(horizon);
        if call_every == 0 {
            return Err(OptimError::Hyper("anneal cadence must be at least 1".into()));
        }
        Ok(Schedule::AdafactorAnneal { call_every })
    }

    pub fn value(&self, step: u64) -> Result<f64, OptimError> {
        if step < 1 {
            return Err(OptimError::Step(step));
        }
        let s = step as f64;
        Ok(match *self {
            Schedule::Constant { lr } => lr,
            Schedule::LinearWarmup { target, warmup } => {
                if warmup == 0 || step >= warmup {
                    target
                } else {
                    target * s / warmup as f64
                }
            }
            Schedule::Noam { scale, knee } => scale * s.powf(-0.5).min(s / knee),
            Schedule::AdafactorAnneal { call_every } => {
                let effective = (step - 1) / call_every.max(1) + 1;
                1e-2f64.min(1.0 / (effective as f64).sqrt())
            }
        })
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant { lr } => write!(f, "const({lr})"),
            Schedule::LinearWarmup { target, warmup } => write!(f, "warmup:{warmup}({target})"),
            Schedule::Noam { scale, knee } => write!(f, "noam({scale}, {knee})"),
            Schedule::AdafactorAnneal { call_every } => write!(f, "anneal:{call_every}"),
        }
    }
}

/// Command-line spelling of a schedule; the learning rate is filled in later.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleSpec {
    Const,
    Warmup(u64),
    Noam,
    /// Optional explicit cadence; otherwise derived from the defaults file.
    Anneal(Option<u64>),
}

impl ScheduleSpec {
    pub fn build(self, lr: f64, d: &Defaults) -> Result<Schedule, OptimError> {
        Ok(match self {
            ScheduleSpec::Const => Schedule::Constant { lr },
            ScheduleSpec::Warmup(k) => Schedule::LinearWarmup {
                target: lr,
                warmup: k,
            },
            ScheduleSpec::Noam => Schedule::Noam {
                scale: d.f64("noam.scale")?,
                knee: d.f64("noam.knee")?,
            },
            ScheduleSpec::Anneal(Some(0)) => {
                return Err(OptimError::Hyper("anneal cadence must be at least 1".into()))
            }
            ScheduleSpec::Anneal(Some(k)) => Schedule::AdafactorAnneal { call_every: k },
            ScheduleSpec::Anneal(None) => {
                Schedule::adafactor_anneal(d.u64("anneal.epoch_iters")?, d.f64("anneal.beta2")?)?
            }
        })
    }
}

impl FromStr for ScheduleSpec {
    type Err = String;

    /// `const`, `warmup:K`, `noam`, `anneal` or `anneal:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let count = |a: &str| {
            a.parse::<u64>()
                .map_err(|_| format!("`{a}` is not a step count"))
        };
        match (name, arg) {
            ("const", None) => Ok(ScheduleSpec::Const),
            ("noam", None) => Ok(ScheduleSpec::Noam),
            ("warmup", Some(a)) => Ok(ScheduleSpec::Warmup(count(a)?)),
            ("anneal", None) => Ok(ScheduleSpec::Anneal(None)),
            ("anneal", Some(a)) => Ok(ScheduleSpec::Anneal(Some(count(a)?))),
            _ => Err(format!(
                "unknown schedule `{s}` (expected const, warmup:K, noam, anneal[:K])"
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_values() {
        let s = Schedule::LinearWarmup {
            target: 1e-4,
            warmup: 2000,
        };
        assert_eq!(s.value(1000).unwrap(), 5e-5);
        assert_eq!(s.value(2000).unwrap(), 1e-4);
        assert_eq!(s.value(5000).unwrap(), 1e-4);
        let flat = Schedule::LinearWarmup {
            target: 3e-4,
            warmup: 0,
        };
        for t in [1, 2, 17, 100_000] {
            assert_eq!(flat.value(t).unwrap(), 3e-4);
        }
        assert_eq!(s.value(0), Err(OptimError::Step(0)));
    }

    #[test]
    fn noam_crossover() {
        let s = Schedule::noam();
        let v = s.value(4000).unwrap();
        assert!((v - 0.0325 / 4000f64.sqrt()).abs() < 1e-7);
        assert!((v - 5.139e-4).abs() < 1e-7);
        // Rising before the corner, falling after.
        assert!(s.value(3999).unwrap() < v);
        assert!(s.value(4001).unwrap() < v);
        let knee = 252_982.0;
        assert!(3999.0 / knee < 3999f64.powf(-0.5));
        assert!(4001.0 / knee > 4001f64.powf(-0.5));
    }

    #[test]
    fn noam_from_model_matches_transformer_formula() {
        let s = Schedule::noam_from_model(512, 4000);
        let expected = 512f64.powf(-0.5) * 10_000f64.powf(-0.5);
        assert!((s.value(10_000).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn anneal_cadence() {
        assert_eq!(
            Schedule::adafactor_anneal(78, 0.999).unwrap(),
            Schedule::AdafactorAnneal { call_every: 78 }
        );
        assert_eq!(
            Schedule::adafactor_anneal(146, 0.999).unwrap(),
            Schedule::AdafactorAnneal { call_every: 146 }
        );
        assert_eq!(
            Schedule::adafactor_anneal(5000, 0.999).unwrap(),
            Schedule::AdafactorAnneal { call_every: 2000 }
        );
        let s = Schedule::AdafactorAnneal { call_every: 78 };
        assert_eq!(s.value(1).unwrap(), 1e-2);
        // Held for the first 78 steps of each block; the 1/sqrt(s) branch
        // only wins once s passes 10^4.
        let late = Schedule::AdafactorAnneal { call_every: 2 };
        assert_eq!(late.value(20_001).unwrap(), late.value(20_002).unwrap());
        assert!(late.value(20_003).unwrap() < late.value(20_002).unwrap());
        assert_eq!(late.value(20_003).unwrap(), 1.0 / 10_002f64.sqrt());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("const".parse(), Ok(ScheduleSpec::Const));
        assert_eq!("warmup:2000".parse(), Ok(ScheduleSpec::Warmup(2000)));
        assert_eq!("anneal:146".parse(), Ok(ScheduleSpec::Anneal(Some(146))));
        assert!("warmup".parse::<ScheduleSpec>().is_err());
        assert!("cosine".parse::<ScheduleSpec>().is_err());
        let d = Defaults::builtin();
        assert_eq!(
            ScheduleSpec::Anneal(None).build(0.0, d).unwrap(),
            Schedule::AdafactorAnneal { call_every: 78 }
        );
    }
}
