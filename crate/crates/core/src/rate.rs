//! Power-to-rate maps.
//!
//! A rate function must satisfy `r(0) = 0` and be strictly increasing and
//! strictly concave on `[0, inf)`. The throughput solver never evaluates it;
//! only the completion-time solver, the oracles and the baselines do.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub trait RateFunction: Send + Sync {
    /// Registry name, e.g. `"awgn"`.
    fn name(&self) -> &str;

    /// Bits per unit time at transmit power `power >= 0`.
    fn eval(&self, power: f64) -> f64;

    /// `r'(0)`, the largest slope of a concave rate function. Bounds both the
    /// reachable bit count (`r'(0) * energy`) and grid discretization error.
    fn derivative_at_zero(&self) -> f64;
}

impl fmt::Debug for dyn RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RateFunction({})", self.name())
    }
}

/// Gaussian channel capacity with unit noise: `r(p) = 0.5 * log2(1 + p)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Awgn;

impl RateFunction for Awgn {
    fn name(&self) -> &str {
        "awgn"
    }

    fn eval(&self, power: f64) -> f64 {
        0.5 * power.ln_1p() / std::f64::consts::LN_2
    }

    fn derivative_at_zero(&self) -> f64 {
        0.5 / std::f64::consts::LN_2
    }
}

/// `r(p) = sqrt(1 + p) - 1`. Evaluated in a cancellation-free form.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqrtRate;

impl RateFunction for SqrtRate {
    fn name(&self) -> &str {
        "sqrt"
    }

    fn eval(&self, power: f64) -> f64 {
        power / ((1.0 + power).sqrt() + 1.0)
    }

    fn derivative_at_zero(&self) -> f64 {
        0.5
    }
}

/// Wraps an arbitrary closure. Run [`check_rate`] on it before trusting it.
pub struct CustomRate<F> {
    name: String,
    func: F,
    slope_at_zero: f64,
}

impl<F> CustomRate<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, slope_at_zero: f64, func: F) -> Self {
        Self {
            name: name.into(),
            func,
            slope_at_zero,
        }
    }
}

impl<F> RateFunction for CustomRate<F>
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, power: f64) -> f64 {
        (self.func)(power)
    }

    fn derivative_at_zero(&self) -> f64 {
        self.slope_at_zero
    }
}

/// Spot-checks `r(0) = 0`, strict monotonicity and strict concavity on a
/// fixed log-spaced grid of powers.
pub fn check_rate(rate: &dyn RateFunction) -> Result<()> {
    let bad = |what: String| {
        Err(Error::InvalidScenario(format!(
            "rate '{}': {what}",
            rate.name()
        )))
    };

    if rate.eval(0.0).abs() > 1e-12 {
        return bad(format!("r(0) = {} != 0", rate.eval(0.0)));
    }
    let slope = rate.derivative_at_zero();
    if !(slope.is_finite() && slope > 0.0) {
        return bad(format!("r'(0) = {slope} must be finite and positive"));
    }

    let grid: Vec<f64> = (-6..=12).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    for w in grid.windows(2) {
        let (p, q) = (w[0], w[1]);
        let (rp, rq) = (rate.eval(p), rate.eval(q));
        if rq.partial_cmp(&rp) != Some(Ordering::Greater) {
            return bad(format!("not increasing between {p} and {q}"));
        }
        if rp > slope * p * (1.0 + 1e-9) {
            return bad(format!("r({p}) exceeds r'(0) * {p}"));
        }
        for lambda in [0.25, 0.5, 0.75] {
            let mid = rate.eval(lambda * p + (1.0 - lambda) * q);
            let chord = lambda * rp + (1.0 - lambda) * rq;
            if (mid - chord).partial_cmp(&(1e-12 * chord.abs())) != Some(Ordering::Greater) {
                return bad(format!("not concave on [{p}, {q}]"));
            }
        }
    }
    Ok(())
}

/// Names accepted by [`rate_by_name`].
pub const RATE_NAMES: &[&str] = &["awgn", "sqrt"];

pub fn rate_by_name(name: &str) -> Result<Arc<dyn RateFunction>> {
    match name {
        "awgn" => Ok(Arc::new(Awgn)),
        "sqrt" => Ok(Arc::new(SqrtRate)),
        _ => Err(Error::UnknownName {
            kind: "rate function",
            name: name.to_string(),
            available: RATE_NAMES.join(", "),
        }),
    }
}
