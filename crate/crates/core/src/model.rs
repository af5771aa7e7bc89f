//! Wundt curve and recurrent stimulus accumulator.
//!
//! A sequence of feature triples `(dissimilarity, aesthetics, arousal)` is
//! folded per channel by `S_n = v_n + lambda * S_{n-1}` (with `S_0 = 0`), the
//! three channel totals are mixed linearly into a stimulus intensity `x`, and
//! `x` is mapped through the Wundt curve `E(x) = R(x) - P(x)`, the difference
//! of a reward and a punishment sigmoid.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower bound applied to both sigmoid slopes.
pub const RHO_FLOOR: f64 = 1e-6;

/// Format tag on the first line of a serialized model.
pub const MODEL_FORMAT: &str = "lwc-v1";

/// Canonical parameter order shared by gradients, serialization and tests.
pub const PARAM_NAMES: [&str; 12] = [
    "r_max", "rho_r", "d_r", "p_max", "rho_p", "d_p", "w_d", "w_a", "w_e", "lambda_d",
    "lambda_a", "lambda_e",
];

pub const NUM_PARAMS: usize = PARAM_NAMES.len();

/// Index of a parameter name in [`PARAM_NAMES`].
pub fn param_index(name: &str) -> Option<usize> {
    PARAM_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WundtParams<T> {
    pub r_max: T,
    pub rho_r: T,
    pub d_r: T,
    pub p_max: T,
    pub rho_p: T,
    pub d_p: T,
}

impl<T: Scalar> WundtParams<T> {
    pub fn new(r_max: T, rho_r: T, d_r: T, p_max: T, rho_p: T, d_p: T) -> Self {
        Self {
            r_max,
            rho_r,
            d_r,
            p_max,
            rho_p,
            d_p,
        }
    }

    fn from_f64(v: [f64; 6]) -> Self {
        Self::new(
            T::lit(v[0]),
            T::lit(v[1]),
            T::lit(v[2]),
            T::lit(v[3]),
            T::lit(v[4]),
            T::lit(v[5]),
        )
    }
}

/// Channel weights and decay factors of the stimulus accumulator. The input
/// weight inside each recurrence is fixed to 1 and not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccumulatorParams<T> {
    pub w_d: T,
    pub w_a: T,
    pub w_e: T,
    pub lambda_d: T,
    pub lambda_a: T,
    pub lambda_e: T,
}

impl<T: Scalar> AccumulatorParams<T> {
    pub fn new(w_d: T, w_a: T, w_e: T, lambda_d: T, lambda_a: T, lambda_e: T) -> Self {
        Self {
            w_d,
            w_a,
            w_e,
            lambda_d,
            lambda_a,
            lambda_e,
        }
    }

    pub fn weights(&self) -> [T; 3] {
        [self.w_d, self.w_a, self.w_e]
    }

    pub fn lambdas(&self) -> [T; 3] {
        [self.lambda_d, self.lambda_a, self.lambda_e]
    }
}

/// The twelve trainable scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LwcModel<T> {
    pub wundt: WundtParams<T>,
    pub accum: AccumulatorParams<T>,
}

impl<T: Scalar> LwcModel<T> {
    pub fn new(wundt: WundtParams<T>, accum: AccumulatorParams<T>) -> Self {
        Self { wundt, accum }
    }

    /// Default starting point for training: a bell with the punishment onset
    /// after the reward onset and equally weighted channels.
    pub fn canonical() -> Self {
        let third = T::one() / T::lit(3.0);
        let half = T::lit(0.5);
        Self::new(
            WundtParams::from_f64([1.0, 1.0, 1.0, 1.0, 1.0, 2.0]),
            AccumulatorParams::new(third, third, third, half, half, half),
        )
    }

    /// Reference bell `(1, 3, 0.8, 1, 3, 1.6)` with the canonical accumulator.
    /// Used as the ground truth of the synthetic-recovery harness.
    pub fn reference() -> Self {
        Self {
            wundt: WundtParams::from_f64([1.0, 3.0, 0.8, 1.0, 3.0, 1.6]),
            ..Self::canonical()
        }
    }

    pub fn to_array(&self) -> [T; NUM_PARAMS] {
        let w = &self.wundt;
        let a = &self.accum;
        [
            w.r_max, w.rho_r, w.d_r, w.p_max, w.rho_p, w.d_p, a.w_d, a.w_a, a.w_e, a.lambda_d,
            a.lambda_a, a.lambda_e,
        ]
    }

    pub fn from_array(v: [T; NUM_PARAMS]) -> Self {
        Self::new(
            WundtParams::new(v[0], v[1], v[2], v[3], v[4], v[5]),
            AccumulatorParams::new(v[6], v[7], v[8], v[9], v[10], v[11]),
        )
    }

    /// Feasible interval `[lo, hi]` of each parameter in canonical order.
    pub fn bounds() -> [(T, T); NUM_PARAMS] {
        let inf = T::infinity();
        let floor = T::lit(RHO_FLOOR);
        let z = T::zero();
        let one = T::one();
        [
            (z, inf),
            (floor, inf),
            (-inf, inf),
            (z, inf),
            (floor, inf),
            (-inf, inf),
            (-inf, inf),
            (-inf, inf),
            (-inf, inf),
            (z, one),
            (z, one),
            (z, one),
        ]
    }

    /// Projects every parameter onto its feasible interval.
    pub fn clamped(&self) -> Self {
        let mut v = self.to_array();
        for (x, (lo, hi)) in v.iter_mut().zip(Self::bounds()) {
            *x = x.max(lo).min(hi);
        }
        Self::from_array(v)
    }

    /// Checks finiteness and the feasible intervals.
    pub fn validate(&self) -> Result<()> {
        for ((x, (lo, hi)), name) in self.to_array().iter().zip(Self::bounds()).zip(PARAM_NAMES) {
            if !x.is_finite() {
                return Err(Error::Domain(format!("parameter {name} is not finite")));
            }
            if *x < lo || *x > hi {
                return Err(Error::Domain(format!(
                    "parameter {name} = {x} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Serializes as the `lwc-v1` text record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MODEL_FORMAT);
        out.push('\n');
        for (name, v) in PARAM_NAMES.iter().zip(self.to_array()) {
            // `{:?}` on f64 is the shortest representation that round-trips.
            let _ = writeln!(out, "{name}={:?}", v.as_f64());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(tag) if tag == MODEL_FORMAT => {}
            Some(tag) => {
                return Err(Error::load(
                    "format",
                    format!("expected `{MODEL_FORMAT}`, found `{tag}`"),
                ))
            }
            None => return Err(Error::load("format", "empty model file")),
        }
        let mut values: [Option<T>; NUM_PARAMS] = [None; NUM_PARAMS];
        for line in lines {
            let (name, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::load(line, "expected name=value"))?;
            let name = name.trim();
            let idx = param_index(name)
                .ok_or_else(|| Error::load(name, "unknown parameter"))?;
            if values[idx].is_some() {
                return Err(Error::load(name, "duplicate parameter"));
            }
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|e| Error::load(name, format!("{e}")))?;
            values[idx] = Some(T::lit(v));
        }
        let mut arr = [T::zero(); NUM_PARAMS];
        for (i, v) in values.iter().enumerate() {
            arr[i] = v.ok_or_else(|| Error::load(PARAM_NAMES[i], "missing parameter"))?;
        }
        let model = Self::from_array(arr);
        model
            .validate()
            .map_err(|e| Error::load("parameters", e.to_string()))?;
        Ok(model)
    }
}

/// One position of a sequence: dissimilarity to the predecessor, aesthetics
/// and arousal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub d: T,
    pub a: T,
    pub e: T,
}

impl<T: Scalar> Step<T> {
    pub fn new(d: T, a: T, e: T) -> Self {
        Self { d, a, e }
    }

    pub fn channels(&self) -> [T; 3] {
        [self.d, self.a, self.e]
    }
}

/// Non-empty ordered feature triples for one candidate ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence<T> {
    steps: Vec<Step<T>>,
}

impl<T: Scalar> FeatureSequence<T> {
    /// Validates every component into `[0, 1 + incentive]`.
    pub fn new(steps: Vec<Step<T>>, incentive: T) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::usage("feature sequence must not be empty"));
        }
        let upper = T::one() + incentive.max(T::zero());
        for (i, s) in steps.iter().enumerate() {
            for c in s.channels() {
                if !(c >= T::zero() && c <= upper) {
                    return Err(Error::Domain(format!(
                        "step {i}: component {c} outside [0, {upper}]"
                    )));
                }
            }
        }
        Ok(Self { steps })
    }

    /// Sequence whose components all lie in `[0, 1]`.
    pub fn unit(steps: Vec<Step<T>>) -> Result<Self> {
        Self::new(steps, T::zero())
    }

    pub fn steps(&self) -> &[Step<T>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn column(&self, channel: usize) -> Vec<T> {
        self.steps.iter().map(|s| s.channels()[channel]).collect()
    }
}

/// Unit logistic function, branching on the sign of `z` so `exp` only ever
/// sees a non-positive argument.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (T::one() + ez)
    }
}

/// `sigmoid'(z) = sigmoid(z) * sigmoid(-z)`, free of cancellation in both tails.
pub fn sigmoid_prime<T: Scalar>(z: T) -> T {
    sigmoid(z) * sigmoid(-z)
}

fn check_finite<T: Scalar>(x: T) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("stimulus {x} is not finite")))
    }
}

pub fn reward<T: Scalar>(w: &WundtParams<T>, x: T) -> Result<T> {
    check_finite(x)?;
    Ok(w.r_max * sigmoid(w.rho_r * (x - w.d_r)))
}

pub fn punishment<T: Scalar>(w: &WundtParams<T>, x: T) -> Result<T> {
    check_finite(x)?;
    Ok(w.p_max * sigmoid(w.rho_p * (x - w.d_p)))
}

pub fn wundt_eval<T: Scalar>(w: &WundtParams<T>, x: T) -> Result<T> {
    Ok(reward(w, x)? - punishment(w, x)?)
}

/// Runs `S_n = v_n + lambda * S_{n-1}` from `S_0 = 0` and returns `S_N`.
pub fn accumulate_channel<T: Scalar>(lambda: T, values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::usage("cannot accumulate an empty channel"));
    }
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::Domain(format!("decay {lambda} outside [0, 1]")));
    }
    Ok(values
        .iter()
        .fold(T::zero(), |acc, &v| v + lambda * acc))
}

/// Running per-channel accumulator values, for extending a sequence one step
/// at a time. Produces the same values as [`accumulate_channel`] bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState<T> {
    pub s: [T; 3],
}

impl<T: Scalar> Default for ChannelState<T> {
    fn default() -> Self {
        Self { s: [T::zero(); 3] }
    }
}

impl<T: Scalar> ChannelState<T> {
    pub fn push(&self, step: &Step<T>, accum: &AccumulatorParams<T>) -> Self {
        let l = accum.lambdas();
        let c = step.channels();
        Self {
            s: [
                c[0] + l[0] * self.s[0],
                c[1] + l[1] * self.s[1],
                c[2] + l[2] * self.s[2],
            ],
        }
    }

    pub fn intensity(&self, accum: &AccumulatorParams<T>) -> T {
        accum.w_d * self.s[0] + accum.w_a * self.s[1] + accum.w_e * self.s[2]
    }
}

pub fn stimulus_intensity<T: Scalar>(a: &AccumulatorParams<T>, seq: &FeatureSequence<T>) -> Result<T> {
    let lambdas = a.lambdas();
    let mut s = [T::zero(); 3];
    for (ch, slot) in s.iter_mut().enumerate() {
        *slot = accumulate_channel(lambdas[ch], &seq.column(ch))?;
    }
    Ok(ChannelState { s }.intensity(a))
}

/// Perceived persuasiveness `E(S(seq))`.
pub fn sequence_score<T: Scalar>(m: &LwcModel<T>, seq: &FeatureSequence<T>) -> Result<T> {
    wundt_eval(&m.wundt, stimulus_intensity(&m.accum, seq)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(v: [f64; 6]) -> WundtParams<f64> {
        WundtParams::from_f64(v)
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(&wp([1.0, 1.0, 0.0, 0.0, 1.0, 0.0]), 0.0).unwrap(), 0.5);
        assert_eq!(reward(&wp([0.0, 4.0, 2.0, 0.0, 1.0, 0.0]), 3.7).unwrap(), 0.0);
        assert_eq!(reward(&wp([2.0, 3.0, 1.0, 0.0, 1.0, 0.0]), 1.0).unwrap(), 1.0);
        assert!(matches!(
            reward(&wp([1.0; 6]), f64::NAN),
            Err(Error::Domain(_))
        ));
        assert!(reward(&wp([1.0; 6]), f64::INFINITY).is_err());
    }

    #[test]
    fn punishment_examples() {
        assert_eq!(punishment(&wp([0.0, 1.0, 0.0, 1.0, 1.0, 0.0]), 0.0).unwrap(), 0.5);
        assert!(punishment(&wp([0.0, 1.0, 0.0, 1.0, 1.0, 50.0]), 0.0).unwrap() < 1e-12);
        assert_eq!(punishment(&wp([0.0, 1.0, 0.0, 0.5, 2.0, 2.0]), 2.0).unwrap(), 0.25);
    }

    #[test]
    fn wundt_examples() {
        let same = wp([0.7, 2.0, 0.3, 0.7, 2.0, 0.3]);
        assert_eq!(wundt_eval(&same, 1.234).unwrap(), 0.0);
        assert_eq!(wundt_eval(&wp([1.0, 1.0, 0.0, 0.0, 1.0, 0.0]), 0.0).unwrap(), 0.5);
    }

    #[test]
    fn bell_shape_on_dense_grid() {
        let w = wp([1.0, 3.0, 0.8, 1.0, 3.0, 1.6]);
        let xs: Vec<f64> = (0..=30_000).map(|i| i as f64 * 1e-4).collect();
        let es: Vec<f64> = xs.iter().map(|&x| wundt_eval(&w, x).unwrap()).collect();
        let (imax, _) = es
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &e)| if e > b.1 { (i, e) } else { b });
        let xmax = xs[imax];
        assert!(xmax > 0.8 && xmax < 1.6, "argmax {xmax}");
        assert!(es[imax..].windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        for z in [-700.0, -1e3, -1e300, 700.0, 1e3, 1e300] {
            let s: f64 = sigmoid(z);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
            assert!(sigmoid_prime(z).is_finite());
        }
        let w = wp([1e3, 1e3, -1e3, 1e3, 1e3, 1e3]);
        for x in [-1e3, 0.0, 1e3] {
            assert!(wundt_eval(&w, x).unwrap().is_finite());
        }
    }

    #[test]
    fn accumulate_examples() {
        assert_eq!(accumulate_channel(0.0, &[0.7]).unwrap(), 0.7);
        assert_eq!(accumulate_channel(0.5, &[1.0, 1.0]).unwrap(), 1.5);
        assert_eq!(accumulate_channel(1.0, &[0.25, 0.5, 0.125]).unwrap(), 0.875);
        assert!(matches!(accumulate_channel::<f64>(0.5, &[]), Err(Error::Usage(_))));
        assert!(accumulate_channel(1.5, &[1.0]).is_err());
    }

    fn seq(steps: &[[f64; 3]]) -> FeatureSequence<f64> {
        FeatureSequence::unit(steps.iter().map(|s| Step::new(s[0], s[1], s[2])).collect()).unwrap()
    }

    #[test]
    fn stimulus_examples() {
        let ones = AccumulatorParams::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);
        assert_eq!(stimulus_intensity(&ones, &seq(&[[0.2, 0.3, 0.5]])).unwrap(), 1.0);
        let zero = AccumulatorParams::new(0.0, 0.0, 0.0, 0.3, 0.3, 0.3);
        assert_eq!(stimulus_intensity(&zero, &seq(&[[0.2, 0.3, 0.5], [1.0, 1.0, 1.0]])).unwrap(), 0.0);
        let d_only = AccumulatorParams::new(2.0, 0.0, 0.0, 0.5, 0.0, 0.0);
        assert_eq!(stimulus_intensity(&d_only, &seq(&[[1.0, 0.4, 0.1], [1.0, 0.9, 0.2]])).unwrap(), 3.0);
    }

    #[test]
    fn score_composition() {
        let mut m = LwcModel::<f64>::reference();
        m.accum.w_d = 0.0;
        m.accum.w_a = 0.0;
        m.accum.w_e = 0.0;
        let s = seq(&[[0.2, 0.3, 0.5], [0.9, 0.1, 0.4]]);
        assert_eq!(sequence_score(&m, &s).unwrap(), wundt_eval(&m.wundt, 0.0).unwrap());

        let m = LwcModel::<f64>::reference();
        let one = seq(&[[0.2, 0.3, 0.5]]);
        let x = stimulus_intensity(&m.accum, &one).unwrap();
        assert_eq!(sequence_score(&m, &one).unwrap(), wundt_eval(&m.wundt, x).unwrap());
    }

    #[test]
    fn order_matters_with_memory() {
        let mut m = LwcModel::<f64>::reference();
        m.accum.lambda_d = 0.9;
        m.accum.lambda_a = 0.9;
        m.accum.lambda_e = 0.9;
        let a = seq(&[[0.1, 0.9, 0.2], [0.8, 0.1, 0.7]]);
        let b = seq(&[[0.8, 0.1, 0.7], [0.1, 0.9, 0.2]]);
        assert_ne!(sequence_score(&m, &a).unwrap(), sequence_score(&m, &b).unwrap());
    }

    #[test]
    fn sequence_validation() {
        assert!(FeatureSequence::<f64>::unit(vec![]).is_err());
        assert!(FeatureSequence::unit(vec![Step::new(1.05, 0.0, 0.0)]).is_err());
        assert!(FeatureSequence::new(vec![Step::new(0.0, 1.05, 0.0)], 0.1).is_ok());
        assert!(FeatureSequence::unit(vec![Step::new(f64::NAN, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = LwcModel::<f64>::canonical();
        let text = m.to_text();
        assert!(text.starts_with("lwc-v1\n"));
        assert_eq!(LwcModel::<f64>::from_text(&text).unwrap(), m);
        assert!(LwcModel::<f64>::from_text("lwc-v0\n").is_err());
        let missing = text.replace("lambda_e=0.5\n", "");
        assert!(LwcModel::<f64>::from_text(&missing).is_err());
        let bad = text.replace("lambda_e=0.5", "lambda_e=1.5");
        assert!(LwcModel::<f64>::from_text(&bad).is_err());
        let dup = format!("{text}r_max=1.0\n");
        assert!(LwcModel::<f64>::from_text(&dup).is_err());
    }

    #[test]
    fn f32_agrees_with_f64() {
        let m32 = LwcModel::<f32>::reference();
        let m64 = LwcModel::<f64>::reference();
        let s32 = FeatureSequence::unit(vec![Step::new(1.0f32, 0.4, 0.6), Step::new(0.3, 0.7, 0.2)]).unwrap();
        let s64 = seq(&[[1.0, 0.4, 0.6], [0.3, 0.7, 0.2]]);
        let a = sequence_score(&m32, &s32).unwrap() as f64;
        let b = sequence_score(&m64, &s64).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn clamp_projects_onto_bounds() {
        let mut m = LwcModel::<f64>::canonical();
        m.wundt.rho_r = -3.0;
        m.wundt.p_max = -0.1;
        m.accum.lambda_a = 1.7;
        m.accum.lambda_e = -0.2;
        let c = m.clamped();
        assert_eq!(c.wundt.rho_r, RHO_FLOOR);
        assert_eq!(c.wundt.p_max, 0.0);
        assert_eq!(c.accum.lambda_a, 1.0);
        assert_eq!(c.accum.lambda_e, 0.0);
        assert!(c.validate().is_ok());
    }
}
