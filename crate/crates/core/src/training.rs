//! Full-batch gradient descent on the twelve model parameters.
//!
//! Gradients are derived by the chain rule through `E(x) = R(x) - P(x)` and
//! the channel recurrences. [`finite_difference_gradients`] is the
//! independent check and only ever touches the forward pass.

use std::ops::Index;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{
    sequence_score, sigmoid, sigmoid_prime, AccumulatorParams, ChannelState, FeatureSequence,
    LwcModel, Step, WundtParams, NUM_PARAMS, PARAM_NAMES,
};
use crate::scalar::Scalar;

/// Top of the raw rating scale.
pub const RATING_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample<T> {
    pub seq: FeatureSequence<T>,
    /// Normalized rating in `[0, 1]`.
    pub target: T,
}

impl<T: Scalar> TrainingExample<T> {
    pub fn new(seq: FeatureSequence<T>, target: T) -> Result<Self> {
        if !(target >= T::zero() && target <= T::one()) {
            return Err(Error::Domain(format!("target {target} outside [0, 1]")));
        }
        Ok(Self { seq, target })
    }

    /// Builds an example from a mean rating on the `[0, 4]` scale.
    pub fn from_rating(seq: FeatureSequence<T>, rating: T) -> Result<Self> {
        let max = T::lit(RATING_MAX);
        if !(rating >= T::zero() && rating <= max) {
            return Err(Error::Domain(format!("rating {rating} outside [0, {max}]")));
        }
        Self::new(seq, rating / max)
    }
}

/// Gradient of the loss in canonical parameter order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientVector<T>(pub [T; NUM_PARAMS]);

impl<T: Scalar> GradientVector<T> {
    pub fn zeros() -> Self {
        Self([T::zero(); NUM_PARAMS])
    }

    pub fn get(&self, name: &str) -> Option<T> {
        crate::model::param_index(name).map(|i| self.0[i])
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|g| *g * *g).sum::<T>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, T)> + '_ {
        PARAM_NAMES.iter().copied().zip(self.0.iter().copied())
    }
}

impl<T> Index<usize> for GradientVector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Starting point for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitPreset {
    #[default]
    Canonical,
    /// Canonical parameters, each scaled by a seeded factor in `[0.9, 1.1]`.
    Jittered,
}

impl InitPreset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "canonical" => Ok(Self::Canonical),
            "jittered" => Ok(Self::Jittered),
            other => Err(Error::usage(format!("unknown init preset `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Canonical => "canonical",
            Self::Jittered => "jittered",
        }
    }

    pub fn build<T: Scalar>(&self, seed: u64) -> LwcModel<T> {
        let base = LwcModel::<T>::canonical();
        match self {
            Self::Canonical => base,
            Self::Jittered => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v = base.to_array();
                for x in v.iter_mut() {
                    *x = *x * T::lit(rng.random_range(0.9..=1.1));
                }
                LwcModel::from_array(v).clamped()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub learning_rate: T,
    pub epochs: usize,
    pub seed: u64,
    /// Rescales the mean gradient to at most this Euclidean norm.
    pub grad_clip: Option<T>,
    pub init: InitPreset,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            learning_rate: T::lit(0.01),
            epochs: 5000,
            seed: 0,
            grad_clip: None,
            init: InitPreset::Canonical,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= T::zero() && self.learning_rate.is_finite()) {
            return Err(Error::usage(format!(
                "learning rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::usage("epochs must be at least 1"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > T::zero()) {
                return Err(Error::usage("gradient clip must be positive"));
            }
        }
        Ok(())
    }
}

fn squared_error<T: Scalar>(m: &LwcModel<T>, ex: &TrainingExample<T>) -> Result<T> {
    let r = sequence_score(m, &ex.seq)? - ex.target;
    Ok(r * r)
}

/// Mean squared error of the model over `data`.
pub fn mse_loss<T: Scalar>(m: &LwcModel<T>, data: &[TrainingExample<T>]) -> Result<T> {
    if data.is_empty() {
        return Err(Error::usage("loss over an empty dataset"));
    }
    let mut total = T::zero();
    for ex in data {
        total = total + squared_error(m, ex)?;
    }
    Ok(total / T::lit(data.len() as f64))
}

/// Squared error and its gradient for one example.
fn loss_and_gradient<T: Scalar>(
    m: &LwcModel<T>,
    ex: &TrainingExample<T>,
) -> Result<(T, GradientVector<T>)> {
    let WundtParams {
        r_max,
        rho_r,
        d_r,
        p_max,
        rho_p,
        d_p,
    } = m.wundt;
    let accum: &AccumulatorParams<T> = &m.accum;
    let lambdas = accum.lambdas();
    let weights = accum.weights();

    // ds[c] = dS_c/dlambda_c, carried alongside S_c by differentiating the
    // recurrence: D_n = S_{n-1} + lambda * D_{n-1}.
    let mut state = ChannelState::default();
    let mut ds = [T::zero(); 3];
    for step in ex.seq.steps() {
        for c in 0..3 {
            ds[c] = state.s[c] + lambdas[c] * ds[c];
        }
        state = state.push(step, accum);
    }
    let x = state.intensity(accum);

    let z_r = rho_r * (x - d_r);
    let z_p = rho_p * (x - d_p);
    let sig_r = sigmoid(z_r);
    let sig_p = sigmoid(z_p);
    let dsig_r = sigmoid_prime(z_r);
    let dsig_p = sigmoid_prime(z_p);

    let e = r_max * sig_r - p_max * sig_p;
    let resid = e - ex.target;
    let l_prime = T::lit(2.0) * resid;
    let de_dx = r_max * dsig_r * rho_r - p_max * dsig_p * rho_p;
    let dl_dx = l_prime * de_dx;

    let g = [
        l_prime * sig_r,
        l_prime * r_max * dsig_r * (x - d_r),
        -l_prime * r_max * dsig_r * rho_r,
        -l_prime * sig_p,
        -l_prime * p_max * dsig_p * (x - d_p),
        l_prime * p_max * dsig_p * rho_p,
        dl_dx * state.s[0],
        dl_dx * state.s[1],
        dl_dx * state.s[2],
        dl_dx * weights[0] * ds[0],
        dl_dx * weights[1] * ds[1],
        dl_dx * weights[2] * ds[2],
    ];
    for (v, name) in g.iter().zip(PARAM_NAMES) {
        if !v.is_finite() {
            return Err(Error::Numeric {
                param: name,
                detail: format!("gradient component is {v}"),
            });
        }
    }
    Ok((resid * resid, GradientVector(g)))
}

/// Analytic gradient of `(E - y)^2` with respect to all twelve parameters.
pub fn analytic_gradients<T: Scalar>(
    m: &LwcModel<T>,
    ex: &TrainingExample<T>,
) -> Result<GradientVector<T>> {
    loss_and_gradient(m, ex).map(|(_, g)| g)
}

/// Central differences of the per-example squared error. Near a clamping
/// bound the step shrinks to stay feasible; exactly on a bound a one-sided
/// difference into the feasible side is used.
pub fn finite_difference_gradients<T: Scalar>(
    m: &LwcModel<T>,
    ex: &TrainingExample<T>,
    h: T,
) -> Result<GradientVector<T>> {
    if !(h > T::zero()) {
        return Err(Error::usage(format!("step {h} must be positive")));
    }
    let base = m.to_array();
    let bounds = LwcModel::<T>::bounds();
    let eval = |i: usize, delta: T| -> Result<T> {
        let mut v = base;
        v[i] = v[i] + delta;
        squared_error(&LwcModel::from_array(v), ex)
    };
    let mut out = [T::zero(); NUM_PARAMS];
    for i in 0..NUM_PARAMS {
        let (lo, hi) = bounds[i];
        let room_up = hi - base[i];
        let room_down = base[i] - lo;
        let step = h.min(room_up).min(room_down);
        out[i] = if step > T::zero() {
            (eval(i, step)? - eval(i, -step)?) / (T::lit(2.0) * step)
        } else if room_up >= h {
            (eval(i, h)? - eval(i, T::zero())?) / h
        } else if room_down >= h {
            (eval(i, T::zero())? - eval(i, -h)?) / h
        } else {
            return Err(Error::usage(format!(
                "parameter {} has no room for a step of {h}",
                PARAM_NAMES[i]
            )));
        };
    }
    Ok(GradientVector(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T> {
    pub model: LwcModel<T>,
    /// Loss at the start of each epoch, before that epoch's update.
    pub loss_trace: Vec<T>,
}

/// Fixed-rate full-batch descent. After every update the slopes are floored
/// and the decays clamped to `[0, 1]`.
pub fn train<T: Scalar>(
    init: &LwcModel<T>,
    data: &[TrainingExample<T>],
    cfg: &TrainConfig<T>,
) -> Result<TrainOutcome<T>> {
    if data.is_empty() {
        return Err(Error::usage("training on an empty dataset"));
    }
    cfg.validate()?;
    init.validate()?;

    let n = T::lit(data.len() as f64);
    let mut model = *init;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut loss = T::zero();
        let mut grad = [T::zero(); NUM_PARAMS];
        for ex in data {
            let (l, g) = loss_and_gradient(&model, ex).map_err(|e| match e {
                Error::Numeric { .. } => Error::Diverged {
                    epoch,
                    loss: f64::NAN,
                },
                other => other,
            })?;
            loss = loss + l;
            for (acc, gi) in grad.iter_mut().zip(g.0) {
                *acc = *acc + gi;
            }
        }
        loss = loss / n;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                loss: loss.as_f64(),
            });
        }
        trace.push(loss);

        let mut mean = GradientVector(grad.map(|g| g / n));
        if let Some(clip) = cfg.grad_clip {
            let norm = mean.norm();
            if norm > clip {
                mean = GradientVector(mean.0.map(|g| g * clip / norm));
            }
        }
        let mut theta = model.to_array();
        for (t, g) in theta.iter_mut().zip(mean.0) {
            *t = *t - cfg.learning_rate * g;
        }
        model = LwcModel::from_array(theta).clamped();
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}

/// Random dataset labelled by a ground-truth model plus Gaussian noise.
/// Feature components are uniform in `[0, 1)` and lengths uniform in the
/// inclusive `len_range`.
pub fn synth_dataset<T: Scalar>(
    gt: &LwcModel<T>,
    n: usize,
    noise_sigma: T,
    len_range: (usize, usize),
    seed: u64,
) -> Result<Vec<TrainingExample<T>>> {
    if n == 0 {
        return Err(Error::usage("synthetic dataset needs n >= 1"));
    }
    if !(noise_sigma >= T::zero() && noise_sigma.is_finite()) {
        return Err(Error::usage("noise sigma must be finite and non-negative"));
    }
    let (lo, hi) = len_range;
    if lo == 0 || lo > hi {
        return Err(Error::usage(format!("invalid length range [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.random_range(lo..=hi);
        let steps = (0..len)
            .map(|_| {
                Step::new(
                    T::lit(rng.random::<f64>()),
                    T::lit(rng.random::<f64>()),
                    T::lit(rng.random::<f64>()),
                )
            })
            .collect();
        let seq = FeatureSequence::unit(steps)?;
        let noise: f64 = rng.sample(StandardNormal);
        let target = (sequence_score(gt, &seq)? + noise_sigma * T::lit(noise))
            .max(T::zero())
            .min(T::one());
        out.push(TrainingExample { seq, target });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub draws: usize,
    pub seed: u64,
    pub h: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Test hook: perturbs this analytic component before comparing.
    pub corrupt: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            draws: 200,
            seed: 0,
            h: 1e-5,
            rel_tol: 1e-5,
            abs_tol: 1e-8,
            corrupt: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOffender {
    pub draw: usize,
    pub param: &'static str,
    pub analytic: f64,
    pub numeric: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub draws: usize,
    pub comparisons: usize,
    pub failures: usize,
    /// Component with the largest error relative to its tolerance.
    pub worst: Option<GradCheckOffender>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Draws a model with every parameter comfortably inside its bounds.
pub fn random_model<T: Scalar, R: Rng>(rng: &mut R) -> LwcModel<T> {
    let mut u = |lo: f64, hi: f64| T::lit(rng.random_range(lo..hi));
    LwcModel::new(
        WundtParams::new(
            u(0.2, 2.0),
            u(0.5, 5.0),
            u(0.0, 2.0),
            u(0.2, 2.0),
            u(0.5, 5.0),
            u(0.5, 3.0),
        ),
        AccumulatorParams::new(
            u(0.0, 1.0),
            u(0.0, 1.0),
            u(0.0, 1.0),
            u(0.05, 0.95),
            u(0.05, 0.95),
            u(0.05, 0.95),
        ),
    )
}

pub fn random_example<T: Scalar, R: Rng>(rng: &mut R, max_len: usize) -> TrainingExample<T> {
    let len = rng.random_range(1..=max_len.max(1));
    let steps = (0..len)
        .map(|_| {
            Step::new(
                T::lit(rng.random::<f64>()),
                T::lit(rng.random::<f64>()),
                T::lit(rng.random::<f64>()),
            )
        })
        .collect();
    TrainingExample {
        seq: FeatureSequence::unit(steps).expect("unit components"),
        target: T::lit(rng.random::<f64>()),
    }
}

/// Compares analytic gradients against central differences over random
/// draws. With `model` set, only the examples are random.
pub fn gradient_check(model: Option<&LwcModel<f64>>, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if cfg.draws == 0 {
        return Err(Error::usage("gradient check needs at least one draw"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = GradCheckReport {
        draws: cfg.draws,
        comparisons: 0,
        failures: 0,
        worst: None,
    };
    let mut worst_ratio = f64::NEG_INFINITY;
    for draw in 0..cfg.draws {
        let m = match model {
            Some(m) => *m,
            None => random_model(&mut rng),
        };
        let ex = random_example(&mut rng, 8);
        let mut analytic = analytic_gradients(&m, &ex)?;
        if let Some(i) = cfg.corrupt {
            analytic.0[i] = analytic.0[i] * 1.01 + 1e-3;
        }
        let numeric = finite_difference_gradients(&m, &ex, cfg.h)?;
        for i in 0..NUM_PARAMS {
            let (a, f) = (analytic[i], numeric[i]);
            let abs_err = (a - f).abs();
            let scale = a.abs().max(f.abs());
            let allowed = cfg.abs_tol.max(cfg.rel_tol * scale);
            report.comparisons += 1;
            if abs_err > allowed {
                report.failures += 1;
            }
            let ratio = abs_err / allowed;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                report.worst = Some(GradCheckOffender {
                    draw,
                    param: PARAM_NAMES[i],
                    analytic: a,
                    numeric: f,
                    abs_err,
                    rel_err: if scale > 0.0 { abs_err / scale } else { 0.0 },
                });
            }
        }
    }
    Ok(report)
}
