//! Mean-field ignorant/spreader ODE, integrated with fixed-step RK4:
//!
//! ```text
//! ds/dt = γ·i − β(t)·s·i
//! di/dt = β(t)·s·i − γ·i
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on leaving `[0, 1]` before a step is rejected.
pub const RANGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub t: f64,
    pub s: f64,
    pub i: f64,
}

/// Piecewise-constant β(t) sampled once per round; times past the last
/// sample reuse the last value.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaSeries {
    values: Vec<f64>,
}

impl BetaSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("beta series is empty"));
        }
        if let Some(b) = values.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::arg(format!("beta value {b} outside [0, 1]")));
        }
        Ok(BetaSeries { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, t: f64) -> f64 {
        let idx = if t <= 0.0 { 0 } else { t.floor() as usize };
        self.values[idx.min(self.values.len() - 1)]
    }
}

#[inline]
fn rhs(beta: f64, gamma: f64, s: f64, i: f64) -> (f64, f64) {
    let ds = gamma * i - beta * s * i;
    // exact negation keeps s + i conserved up to addition rounding
    (ds, -ds)
}

/// Integrates from `(1 - i0, i0)` over `round(horizon / dt)` RK4 steps and
/// returns every state including the initial one.
pub fn integrate<F>(beta: F, gamma: f64, i0: f64, horizon: f64, dt: f64) -> Result<Vec<MeanFieldState>>
where
    F: Fn(f64) -> f64,
{
    if !(0.0..=1.0).contains(&i0) {
        return Err(Error::arg(format!(
            "initial spreader fraction must lie in [0, 1], got {i0}"
        )));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::arg(format!(
            "forgetting probability must lie in [0, 1], got {gamma}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::arg(format!("step must be positive, got {dt}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::arg(format!("horizon must be non-negative, got {horizon}")));
    }
    let steps = (horizon / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut s, mut i) = (1.0 - i0, i0);
    out.push(MeanFieldState { t: 0.0, s, i });
    for n in 0..steps {
        let t = n as f64 * dt;
        let half = t + 0.5 * dt;
        let (b0, bh, b1) = (beta(t), beta(half), beta(t + dt));
        let k1 = rhs(b0, gamma, s, i);
        let k2 = rhs(bh, gamma, s + 0.5 * dt * k1.0, i + 0.5 * dt * k1.1);
        let k3 = rhs(bh, gamma, s + 0.5 * dt * k2.0, i + 0.5 * dt * k2.1);
        let k4 = rhs(b1, gamma, s + dt * k3.0, i + dt * k3.1);
        s += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        i += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let t_next = (n + 1) as f64 * dt;
        let bad = |x: f64| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&x);
        if bad(s) || bad(i) {
            return Err(Error::Integration { t: t_next, s, i });
        }
        out.push(MeanFieldState { t: t_next, s, i });
    }
    Ok(out)
}
