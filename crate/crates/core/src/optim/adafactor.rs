use super::{check_inputs, rms, Defaults, OptimError, ParamShape};

/// Constructor options of the Hugging Face `Adafactor` optimizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdafactorHyper {
    /// External learning rate; only meaningful with `relative_step = false`.
    pub lr: Option<f64>,
    /// Added to squared gradients.
    pub eps1: f64,
    /// Floor of the parameter scale.
    pub eps2: f64,
    pub clip_threshold: f64,
    pub decay_rate: f64,
    pub beta1: Option<f64>,
    pub weight_decay: f64,
    pub scale_parameter: bool,
    pub relative_step: bool,
    pub warmup_init: bool,
}

impl AdafactorHyper {
    pub fn from_defaults(d: &Defaults) -> Result<Self, OptimError> {
        let h = Self {
            lr: d.opt_f64("adafactor.lr")?,
            eps1: d.f64("adafactor.eps1")?,
            eps2: d.f64("adafactor.eps2")?,
            clip_threshold: d.f64("adafactor.clip_threshold")?,
            decay_rate: d.f64("adafactor.decay_rate")?,
            beta1: d.opt_f64("adafactor.beta1")?,
            weight_decay: d.f64("adafactor.weight_decay")?,
            scale_parameter: d.bool("adafactor.scale_parameter")?,
            relative_step: d.bool("adafactor.relative_step")?,
            warmup_init: d.bool("adafactor.warmup_init")?,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: &str| Err(OptimError::Hyper(m.to_string()));
        match (self.lr, self.relative_step) {
            (Some(_), true) => return bad("an explicit lr cannot be combined with relative_step"),
            (None, false) => return bad("relative_step = false needs an explicit lr"),
            _ => {}
        }
        if self.warmup_init && !self.relative_step {
            return bad("warmup_init requires relative_step");
        }
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return bad("eps1 and eps2 must be positive");
        }
        if !(self.clip_threshold > 0.0) {
            return bad("clip_threshold must be positive");
        }
        if !(self.decay_rate < 0.0) {
            return bad("decay_rate must be negative");
        }
        if let Some(b) = self.beta1 {
            if !(0.0..1.0).contains(&b) {
                return bad("beta1 is outside [0, 1)");
            }
        }
        if !(self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative");
        }
        Ok(())
    }
}

impl Default for AdafactorHyper {
    fn default() -> Self {
        Self::from_defaults(Defaults::builtin()).expect("builtin adafactor defaults")
    }
}

/// Row means and column means of a row-major `rows x cols` matrix.
pub fn row_col_means(values: &[f64], rows: usize, cols: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(values.len(), rows * cols);
    let mut row = vec![0.0; rows];
    let mut col = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            let x = values[i * cols + j];
            row[i] += x;
            col[j] += x;
        }
    }
    row.iter_mut().for_each(|r| *r /= cols as f64);
    col.iter_mut().for_each(|c| *c /= rows as f64);
    (row, col)
}

/// Rank-1 estimate `V[i][j] = row[i] * col[j] / mean(row)`, row-major.
pub fn factored_second_moment(row: &[f64], col: &[f64]) -> Vec<f64> {
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    let mut out = Vec::with_capacity(row.len() * col.len());
    for r in row {
        let scaled = r / mean;
        out.extend(col.iter().map(|c| scaled * c));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
enum SecondMoment {
    Factored { row: Vec<f64>, col: Vec<f64> },
    Full(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adafactor {
    hyper: AdafactorHyper,
    shape: ParamShape,
    step: u64,
    moment: SecondMoment,
    exp_avg: Option<Vec<f64>>,
    last_lr: f64,
}

impl Adafactor {
    /// Matrices keep factored row/column statistics; vectors keep a full one.
    pub fn new(hyper: AdafactorHyper, shape: ParamShape) -> Result<Self, OptimError> {
        hyper.validate()?;
        let moment = match shape {
            ParamShape::Matrix { rows, cols } => SecondMoment::Factored {
                row: vec![0.0; rows],
                col: vec![0.0; cols],
            },
            ParamShape::Vector(n) => SecondMoment::Full(vec![0.0; n]),
        };
        Ok(Self {
            hyper,
            shape,
            step: 0,
            moment,
            exp_avg: hyper.beta1.map(|_| vec![0.0; shape.len()]),
            last_lr: 0.0,
        })
    }

    /// The relative step size used when no schedule overrides it.
    pub fn relative_step_size(&self, t: u64) -> f64 {
        if !self.hyper.relative_step {
            return self.hyper.lr.expect("validated");
        }
        let min_step = if self.hyper.warmup_init {
            1e-6 * t as f64
        } else {
            1e-2
        };
        min_step.min(1.0 / (t as f64).sqrt())
    }

    /// One update. `rel_step` replaces the built-in relative step size (the
    /// anneal schedule feeds its value through here); it is still multiplied
    /// by the parameter scale when `scale_parameter` is set.
    pub fn step(
        &mut self,
        params: &[f64],
        grads: &[f64],
        rel_step: Option<f64>,
    ) -> Result<Vec<f64>, OptimError> {
        check_inputs(self.shape.len(), params, grads)?;
        let h = self.hyper;
        self.step += 1;
        let t = self.step as f64;

        let rel = rel_step.unwrap_or_else(|| self.relative_step_size(self.step));
        let scale = if h.scale_parameter {
            h.eps2.max(rms(params))
        } else {
            1.0
        };
        let lr = rel * scale;
        self.last_lr = lr;

        let beta2t = 1.0 - t.powf(h.decay_rate);
        let sq: Vec<f64> = grads.iter().map(|g| g * g + h.eps1).collect();
        let mut update: Vec<f64> = match (&mut self.moment, self.shape) {
            (SecondMoment::Factored { row, col }, ParamShape::Matrix { rows, cols }) => {
                let (row_mean, col_mean) = row_col_means(&sq, rows, cols);
                for (r, m) in row.iter_mut().zip(row_mean) {
                    *r = beta2t * *r + (1.0 - beta2t) * m;
                }
                for (c, m) in col.iter_mut().zip(col_mean) {
                    *c = beta2t * *c + (1.0 - beta2t) * m;
                }
                factored_second_moment(row, col)
                    .iter()
                    .zip(grads)
                    .map(|(v, g)| g / v.sqrt())
                    .collect()
            }
            (SecondMoment::Full(v), _) => {
                for (vi, s) in v.iter_mut().zip(&sq) {
                    *vi = beta2t * *vi + (1.0 - beta2t) * s;
                }
                v.iter().zip(grads).map(|(v, g)| g / v.sqrt()).collect()
            }
            _ => unreachable!("moment layout follows the shape"),
        };

        let denom = (rms(&update) / h.clip_threshold).max(1.0);
        update.iter_mut().for_each(|u| *u = *u / denom * lr);

        if let (Some(b1), Some(avg)) = (h.beta1, self.exp_avg.as_mut()) {
            for (a, u) in avg.iter_mut().zip(update.iter_mut()) {
                *a = b1 * *a + (1.0 - b1) * *u;
                *u = *a;
            }
        }
        Ok(update
            .iter()
            .zip(params)
            .map(|(u, p)| -u - h.weight_decay * lr * p)
            .collect())
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Effective step size (relative step times parameter scale) of the last update.
    pub fn last_lr(&self) -> f64 {
        self.last_lr
    }

    pub fn shape(&self) -> ParamShape {
        self.shape
    }

    pub fn hyper(&self) -> &AdafactorHyper {
        &self.hyper
    }

    /// Current second-moment estimate, reconstructed for matrices.
    pub fn second_moment(&self) -> Vec<f64> {
        match &self.moment {
            SecondMoment::Factored { row, col } => factored_second_moment(row, col),
            SecondMoment::Full(v) => v.clone(),
        }
    }

    /// Row and column accumulators of a matrix parameter.
    pub fn factors(&self) -> Option<(&[f64], &[f64])> {
        match &self.moment {
            SecondMoment::Factored { row, col } => Some((row, col)),
            SecondMoment::Full(_) => None,
        }
    }
}
