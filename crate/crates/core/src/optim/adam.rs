use super::{check_inputs, Defaults, OptimError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty folded into the gradient.
    pub weight_decay: f64,
}

impl AdamHyper {
    /// Reads `{prefix}.beta1`, `{prefix}.beta2`, `{prefix}.eps` and
    /// `{prefix}.weight_decay`.
    pub fn from_defaults(d: &Defaults, prefix: &str) -> Result<Self, OptimError> {
        let h = Self {
            beta1: d.f64(&format!("{prefix}.beta1"))?,
            beta2: d.f64(&format!("{prefix}.beta2"))?,
            eps: d.f64(&format!("{prefix}.eps"))?,
            weight_decay: d.f64(&format!("{prefix}.weight_decay"))?,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(OptimError::Hyper(format!("{name} = {b} is outside [0, 1)")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(OptimError::Hyper(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(OptimError::Hyper("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self::from_defaults(Defaults::builtin(), "adam").expect("builtin adam defaults")
    }
}

/// First and second moment estimates shared by Adam and RAdam.
#[derive(Clone, Debug, PartialEq)]
struct Moments {
    hyper: AdamHyper,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    fn new(hyper: AdamHyper, n: usize) -> Result<Self, OptimError> {
        hyper.validate()?;
        Ok(Self {
            hyper,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        })
    }

    /// Advances the moments; returns the bias corrections `(1 - b1^t, 1 - b2^t)`.
    fn update(&mut self, params: &[f64], grads: &[f64]) -> Result<(f64, f64), OptimError> {
        check_inputs(self.m.len(), params, grads)?;
        let AdamHyper {
            beta1,
            beta2,
            weight_decay,
            ..
        } = self.hyper;
        self.step += 1;
        for i in 0..self.m.len() {
            let g = grads[i] + weight_decay * params[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
        }
        let t = self.step as i32;
        Ok((1.0 - beta1.powi(t), 1.0 - beta2.powi(t)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam(Moments);

impl Adam {
    pub fn new(hyper: AdamHyper, n: usize) -> Result<Self, OptimError> {
        Moments::new(hyper, n).map(Self)
    }

    /// `delta = -lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &[f64], grads: &[f64], lr: f64) -> Result<Vec<f64>, OptimError> {
        let (bc1, bc2) = self.0.update(params, grads)?;
        let eps = self.0.hyper.eps;
        Ok(self
            .0
            .m
            .iter()
            .zip(&self.0.v)
            .map(|(m, v)| -lr * (m / bc1) / ((v / bc2).sqrt() + eps))
            .collect())
    }

    pub fn step_count(&self) -> u64 {
        self.0.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.0.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.0.v
    }

    pub fn hyper(&self) -> &AdamHyper {
        &self.0.hyper
    }
}

/// Length of the approximated simple moving average at step `t`:
/// `rho_inf - 2 t b2^t / (1 - b2^t)` with `rho_inf = 2 / (1 - b2) - 1`.
pub fn radam_rho(beta2: f64, t: u64) -> f64 {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let b2t = beta2.powf(t as f64);
    rho_inf - 2.0 * t as f64 * b2t / (1.0 - b2t)
}

/// Variance rectification term, or `None` while `rho_t <= 4` and the
/// adaptive learning rate is switched off.
pub fn radam_rectifier(beta2: f64, t: u64) -> Option<f64> {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let rho = radam_rho(beta2, t);
    (rho > 4.0).then(|| {
        (((rho - 4.0) * (rho - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho)).sqrt()
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RAdam(Moments);

impl RAdam {
    pub fn new(hyper: AdamHyper, n: usize) -> Result<Self, OptimError> {
        Moments::new(hyper, n).map(Self)
    }

    pub fn step(&mut self, params: &[f64], grads: &[f64], lr: f64) -> Result<Vec<f64>, OptimError> {
        let (bc1, bc2) = self.0.update(params, grads)?;
        let AdamHyper { beta2, eps, .. } = self.0.hyper;
        let m_hat = self.0.m.iter().map(|m| m / bc1);
        Ok(match radam_rectifier(beta2, self.0.step) {
            Some(r) => m_hat
                .zip(&self.0.v)
                .map(|(m, v)| -lr * r * m / ((v / bc2).sqrt() + eps))
                .collect(),
            None => m_hat.map(|m| -lr * m).collect(),
        })
    }

    pub fn step_count(&self) -> u64 {
        self.0.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.0.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.0.v
    }

    pub fn hyper(&self) -> &AdamHyper {
        &self.0.hyper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step() {
        let mut opt = Adam::new(AdamHyper::default(), 1).unwrap();
        let d = opt.step(&[0.0], &[1.0], 1e-3).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((d[0] - expected).abs() <= 1e-12);
        assert!((d[0] + 9.999_999_90e-4).abs() <= 1e-12);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut opt = Adam::new(AdamHyper::default(), 3).unwrap();
        for _ in 0..5 {
            assert_eq!(opt.step(&[1.0; 3], &[0.0; 3], 1e-3).unwrap(), vec![0.0; 3]);
        }
        assert_eq!(opt.first_moment(), &[0.0; 3]);
        assert_eq!(opt.second_moment(), &[0.0; 3]);

        let mut opt = RAdam::new(AdamHyper::default(), 2).unwrap();
        for _ in 0..10 {
            assert_eq!(opt.step(&[1.0; 2], &[0.0; 2], 1e-3).unwrap(), vec![0.0; 2]);
        }
    }

    #[test]
    fn no_averaging_collapses() {
        let hyper = AdamHyper {
            beta1: 0.0,
            beta2: 0.0,
            ..AdamHyper::default()
        };
        let mut opt = Adam::new(hyper, 1).unwrap();
        let lr = 0.1;
        let d = opt.step(&[0.0], &[2.0], lr).unwrap();
        assert_eq!(d[0], -lr * 2.0 / (2.0 + hyper.eps));
    }

    #[test]
    fn step_bounded_without_momentum() {
        let hyper = AdamHyper {
            beta1: 0.0,
            ..AdamHyper::default()
        };
        let lr = 1e-2;
        // Constant gradient magnitudes keep every step within lr.
        let mut opt = Adam::new(hyper, 3).unwrap();
        for k in 0..100 {
            let s = if k % 3 == 0 { 1.0 } else { -1.0 };
            for d in opt.step(&[0.0; 3], &[s * 2.0, -s * 0.5, s * 1e-3], lr).unwrap() {
                assert!(d.abs() <= lr * (1.0 + 1e-12));
            }
        }
        // A sudden large gradient can exceed lr, but never the supremum
        // lr * sqrt((1 - b2^t) / (1 - b2)) of g_t / sqrt(v_hat_t).
        let mut opt = Adam::new(hyper, 4).unwrap();
        let grads = [[1.0, -3.0, 1e-4, 50.0], [-2.0, 0.5, 1e3, -1e-3], [0.0, 7.0, -7.0, 1.0]];
        let mut exceeded = false;
        for (t, g) in (1..).zip(grads.iter().cycle().take(60)) {
            let bound = lr * ((1.0 - hyper.beta2.powi(t)) / (1.0 - hyper.beta2)).sqrt();
            for d in opt.step(&[0.0; 4], g, lr).unwrap() {
                assert!(d.abs() <= bound * (1.0 + 1e-12));
                exceeded |= d.abs() > lr;
            }
        }
        assert!(exceeded);
    }

    #[test]
    fn non_finite_gradient_leaves_state_alone() {
        let mut opt = Adam::new(AdamHyper::default(), 2).unwrap();
        opt.step(&[0.0; 2], &[1.0, 1.0], 1e-3).unwrap();
        let before = opt.clone();
        let err = opt.step(&[0.0; 2], &[1.0, f64::NAN], 1e-3).unwrap_err();
        assert!(matches!(err, OptimError::NonFiniteGradient { index: 1, .. }));
        assert_eq!(opt, before);
        assert!(matches!(
            opt.step(&[0.0; 3], &[0.0; 3], 1e-3),
            Err(OptimError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn radam_first_step_is_momentum_only() {
        assert!(radam_rho(0.999, 1) <= 4.0);
        assert_eq!(radam_rectifier(0.999, 1), None);
        let mut opt = RAdam::new(AdamHyper::default(), 1).unwrap();
        let d = opt.step(&[0.0], &[0.5], 1e-3).unwrap();
        // m_hat equals the gradient after one step.
        assert!((d[0] + 1e-3 * 0.5).abs() <= 1e-18);
    }

    #[test]
    fn rectifier_increases_toward_one() {
        let r: Vec<f64> = [10, 100, 10_000]
            .iter()
            .map(|&t| radam_rectifier(0.999, t).unwrap())
            .collect();
        assert!(r[0] < r[1] && r[1] < r[2] && r[2] < 1.0);

        let mut prev = 0.0;
        let mut t = 6;
        while t <= 1_000_000 {
            let r = radam_rectifier(0.999, t).unwrap();
            assert!(r >= prev && r <= 1.0, "t = {t}");
            prev = r;
            t = t * 11 / 10 + 1;
        }
        assert!(1.0 - prev < 1e-3);
    }

    #[test]
    fn rejects_bad_hyper() {
        let bad = AdamHyper {
            beta2: 1.0,
            ..AdamHyper::default()
        };
        assert!(Adam::new(bad, 1).is_err());
        let bad = AdamHyper {
            eps: 0.0,
            ..AdamHyper::default()
        };
        assert!(RAdam::new(bad, 1).is_err());
    }
}
