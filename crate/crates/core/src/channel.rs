//! Delay-function models for single-history channels.
//!
//! A channel delays each input transition by `delta(T)`, where `T` is the
//! gap between the input transition and the previous output transition.
//! The involution models here satisfy
//!
//! ```text
//!   -delta_up(-delta_down(T)) = T   and   -delta_down(-delta_up(T)) = T
//! ```
//!
//! on their whole domain, which makes both functions strictly increasing,
//! concave, and bounded above by finite limits `delta_inf` while being
//! unbounded below.
//!
//! Two involution constructions are provided:
//!
//! * `Exp`: the closed-form family induced by a pure delay `tp`, a
//!   first-order RC slew limiter with time constant `tau`, and a comparator
//!   at threshold `vth`:
//!
//!   ```text
//!   delta_up(T)   = tau*ln(1 - e^(-(T + tp - tau*ln(vth))/tau))     + tp - tau*ln(1-vth)
//!   delta_down(T) = tau*ln(1 - e^(-(T + tp - tau*ln(1-vth))/tau))   + tp - tau*ln(vth)
//!   ```
//!
//! * `Waveform`: the generic construction from a pair of sampled monotone
//!   switching waveforms `f_up` (0 -> 1) and `f_down` (1 -> 0):
//!
//!   ```text
//!   delta_up(T)   = -f_up^-1(f_down(T + dinf_down)) + dinf_up
//!   delta_down(T) = -f_down^-1(f_up(T + dinf_up))   + dinf_down
//!   dinf_up = tp + f_up^-1(vth),  dinf_down = tp + f_down^-1(vth)
//!   ```
//!
//! Constant-delay baselines (pure, inertial) are included for contrast
//! experiments; they are explicitly flagged non-involution and rejected by
//! operations that need the involution property.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::MonotoneCubic;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("gap {gap} outside the delay-function domain (must be > {boundary})")]
    DomainError { gap: f64, boundary: f64 },
    #[error("model is not strictly causal: delta_up(0) = {delta_at_zero} <= 0")]
    NotStrictlyCausal { delta_at_zero: f64 },
    #[error("waveform samples are not strictly monotone in the required direction")]
    NonMonotoneWaveform,
    #[error("threshold {vth} outside the open interval (0, 1) or the sampled waveform range")]
    ThresholdOutOfRange { vth: f64 },
    #[error("invalid channel parameter: {0}")]
    InvalidParameter(String),
}

/// Transition polarity at the channel input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Rising,
    Falling,
}

impl Edge {
    pub fn of(value: bool) -> Edge {
        if value {
            Edge::Rising
        } else {
            Edge::Falling
        }
    }
}

/// Parameters of the closed-form exp-channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpChannelParams {
    /// RC time constant, > 0.
    pub tau: f64,
    /// Pure delay; the model is strictly causal iff tp > 0.
    pub tp: f64,
    /// Comparator threshold, in (0, 1). Symmetric iff vth = 0.5.
    pub vth: f64,
}

impl ExpChannelParams {
    pub fn new(tau: f64, tp: f64, vth: f64) -> Result<Self, ChannelError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ChannelError::InvalidParameter(format!("tau must be > 0, got {tau}")));
        }
        if !(vth > 0.0 && vth < 1.0) {
            return Err(ChannelError::ThresholdOutOfRange { vth });
        }
        if !tp.is_finite() {
            return Err(ChannelError::InvalidParameter(format!("tp must be finite, got {tp}")));
        }
        Ok(ExpChannelParams { tau, tp, vth })
    }
}

/// Waveform-derived involution channel: monotone interpolants of the two
/// switching waveforms plus the comparator data.
#[derive(Debug, Clone)]
pub struct WaveformChannel {
    f_up: MonotoneCubic,
    f_down: MonotoneCubic,
    pub tp: f64,
    pub vth: f64,
    /// Kept for netlist round-trips.
    pub samples: WaveformSamples,
}

/// Raw waveform samples as read from a `t,f_up,f_down` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSamples {
    pub t: Vec<f64>,
    pub f_up: Vec<f64>,
    pub f_down: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum DelayKind {
    Exp(ExpChannelParams),
    Waveform(Box<WaveformChannel>),
    BaselinePure { delay: f64 },
    BaselineInertial { delay: f64, min_pulse: f64 },
}

/// A pair of delay functions with cached limits and minimum delay.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct DelayModel {
    kind: DelayKind,
    delta_inf_up: f64,
    delta_inf_down: f64,
    /// Unique positive fixed point delta(-d) = d; `None` when the model is
    /// not strictly causal.
    delta_min: Option<f64>,
}

/// Absolute tolerance used by the internal bisections.
pub const BISECT_TOL: f64 = 1e-12;
const BISECT_MAX_ITER: usize = 200;

/// Stable ln(1 - e^(-a)) for a > 0.
fn log1mexp(a: f64) -> f64 {
    debug_assert!(a > 0.0);
    if a <= std::f64::consts::LN_2 {
        (-(-a).exp_m1()).ln()
    } else {
        (-(-a).exp()).ln_1p()
    }
}

impl DelayModel {
    pub fn exp(params: ExpChannelParams) -> Result<Self, ChannelError> {
        let ExpChannelParams { tau, tp, vth } = params;
        let delta_inf_up = tp - tau * (1.0 - vth).ln();
        let delta_inf_down = tp - tau * vth.ln();
        let mut model = DelayModel {
            kind: DelayKind::Exp(params),
            delta_inf_up,
            delta_inf_down,
            delta_min: None,
        };
        model.delta_min = model.solve_delta_min().ok();
        Ok(model)
    }

    pub fn exp_params(tau: f64, tp: f64, vth: f64) -> Result<Self, ChannelError> {
        Self::exp(ExpChannelParams::new(tau, tp, vth)?)
    }

    /// Builds a waveform-derived model. `f_up` must rise strictly from ~0 to
    /// ~1 and `f_down` fall strictly from ~1 to ~0 over the sampled times.
    pub fn from_waveforms(samples: WaveformSamples, tp: f64, vth: f64) -> Result<Self, ChannelError> {
        if !(vth > 0.0 && vth < 1.0) {
            return Err(ChannelError::ThresholdOutOfRange { vth });
        }
        let f_up = MonotoneCubic::new(samples.t.clone(), samples.f_up.clone())
            .filter(|c| c.is_increasing())
            .ok_or(ChannelError::NonMonotoneWaveform)?;
        let f_down = MonotoneCubic::new(samples.t.clone(), samples.f_down.clone())
            .filter(|c| !c.is_increasing())
            .ok_or(ChannelError::NonMonotoneWaveform)?;
        // The threshold must be invertible on both waveforms.
        let up_range = f_up.y_first()..=f_up.y_last();
        let down_range = f_down.y_last()..=f_down.y_first();
        if !up_range.contains(&vth) || !down_range.contains(&vth) {
            return Err(ChannelError::ThresholdOutOfRange { vth });
        }
        let delta_inf_up = tp + f_up.inverse(vth, BISECT_TOL);
        let delta_inf_down = tp + f_down.inverse(vth, BISECT_TOL);
        let chan = WaveformChannel { f_up, f_down, tp, vth, samples };
        let mut model = DelayModel {
            kind: DelayKind::Waveform(Box::new(chan)),
            delta_inf_up,
            delta_inf_down,
            delta_min: None,
        };
        model.delta_min = model.solve_delta_min().ok();
        Ok(model)
    }

    /// Constant-delay baseline. Not an involution channel.
    pub fn pure(delay: f64) -> Result<Self, ChannelError> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(ChannelError::InvalidParameter(format!("delay must be > 0, got {delay}")));
        }
        Ok(DelayModel {
            kind: DelayKind::BaselinePure { delay },
            delta_inf_up: delay,
            delta_inf_down: delay,
            delta_min: Some(delay),
        })
    }

    /// Inertial baseline: constant delay, and pulses shorter than
    /// `min_pulse` vanish. Not an involution channel.
    pub fn inertial(delay: f64, min_pulse: f64) -> Result<Self, ChannelError> {
        if !(delay.is_finite() && delay > 0.0) {
            return Err(ChannelError::InvalidParameter(format!("delay must be > 0, got {delay}")));
        }
        if !(min_pulse.is_finite() && min_pulse > 0.0) {
            return Err(ChannelError::InvalidParameter(format!(
                "min_pulse must be > 0, got {min_pulse}"
            )));
        }
        Ok(DelayModel {
            kind: DelayKind::BaselineInertial { delay, min_pulse },
            delta_inf_up: delay,
            delta_inf_down: delay,
            delta_min: Some(delay),
        })
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    pub fn is_involution_kind(&self) -> bool {
        matches!(self.kind, DelayKind::Exp(_) | DelayKind::Waveform(_))
    }

    pub fn min_pulse(&self) -> Option<f64> {
        match self.kind {
            DelayKind::BaselineInertial { min_pulse, .. } => Some(min_pulse),
            _ => None,
        }
    }

    /// Limit of delta_up(T) as T -> infinity: the rising delay of a
    /// perfectly idle channel.
    pub fn delta_inf_up(&self) -> f64 {
        self.delta_inf_up
    }

    pub fn delta_inf_down(&self) -> f64 {
        self.delta_inf_down
    }

    pub fn delta_inf(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Rising => self.delta_inf_up,
            Edge::Falling => self.delta_inf_down,
        }
    }

    pub fn is_strictly_causal(&self) -> bool {
        self.delta_min.is_some()
    }

    /// The cached minimum delay: the unique positive fixed point
    /// delta_up(-d) = d = delta_down(-d).
    pub fn delta_min(&self) -> Result<f64, ChannelError> {
        self.delta_min.ok_or(ChannelError::NotStrictlyCausal {
            delta_at_zero: self.eval_delta(Edge::Rising, 0.0).unwrap_or(f64::NEG_INFINITY),
        })
    }

    /// Lower domain boundary for `edge`: the gap must stay strictly above
    /// minus the opposite edge's limit.
    pub fn domain_boundary(&self, edge: Edge) -> f64 {
        match edge {
            Edge::Rising => -self.delta_inf_down,
            Edge::Falling => -self.delta_inf_up,
        }
    }

    /// Evaluates the delay function for `edge` at gap `t_prev_gap`.
    pub fn eval_delta(&self, edge: Edge, t_prev_gap: f64) -> Result<f64, ChannelError> {
        match &self.kind {
            DelayKind::BaselinePure { delay } | DelayKind::BaselineInertial { delay, .. } => Ok(*delay),
            DelayKind::Exp(p) => {
                let boundary = self.domain_boundary(edge);
                if !(t_prev_gap > boundary) {
                    return Err(ChannelError::DomainError { gap: t_prev_gap, boundary });
                }
                if t_prev_gap == f64::INFINITY {
                    return Ok(self.delta_inf(edge));
                }
                let a = (t_prev_gap - boundary) / p.tau;
                Ok(p.tau * log1mexp(a) + self.delta_inf(edge))
            }
            DelayKind::Waveform(w) => {
                let boundary = self.domain_boundary(edge);
                if !(t_prev_gap > boundary) {
                    return Err(ChannelError::DomainError { gap: t_prev_gap, boundary });
                }
                if t_prev_gap == f64::INFINITY {
                    return Ok(self.delta_inf(edge));
                }
                // Times beyond the sampled range saturate at the endpoint
                // values, which sends delta to its limit.
                let x = t_prev_gap - boundary;
                Ok(match edge {
                    Edge::Rising => {
                        -w.f_up.inverse(w.f_down.eval(x), BISECT_TOL) + self.delta_inf_up
                    }
                    Edge::Falling => {
                        -w.f_down.inverse(w.f_up.eval(x), BISECT_TOL) + self.delta_inf_down
                    }
                })
            }
        }
    }

    /// Engine-facing evaluation: gaps at or below the domain boundary are
    /// clamped just inside it instead of failing, and the clamp is reported.
    /// A valid run never needs the clamp (such transitions cancel first);
    /// it exists so float round-off at the boundary cannot produce NaN.
    pub fn eval_delta_clamped(&self, edge: Edge, t_prev_gap: f64) -> (f64, bool) {
        match self.eval_delta(edge, t_prev_gap) {
            Ok(d) => (d, false),
            Err(_) => {
                let boundary = self.domain_boundary(edge);
                let eps = 1e-12 * self.time_scale();
                let d = self
                    .eval_delta(edge, boundary + eps)
                    .expect("clamped gap is inside the domain");
                (d, true)
            }
        }
    }

    fn time_scale(&self) -> f64 {
        match &self.kind {
            DelayKind::Exp(p) => p.tau.max(1.0),
            _ => 1.0,
        }
    }

    /// Central finite-difference derivative of the delay function.
    pub fn derivative(&self, edge: Edge, t: f64, h: f64) -> Result<f64, ChannelError> {
        let lo = self.eval_delta(edge, t - h)?;
        let hi = self.eval_delta(edge, t + h)?;
        Ok((hi - lo) / (2.0 * h))
    }

    /// Recomputes delta_min by bisection of `g(T) = -T + delta_up(-T)` on
    /// `[0, delta_inf_down)`. `g` is continuous and strictly decreasing, with
    /// `g(0) = delta_up(0) > 0` for strictly causal models, so the root is
    /// unique. For exp-channels the result equals `tp`.
    pub fn solve_delta_min(&self) -> Result<f64, ChannelError> {
        let delta_at_zero = self.eval_delta(Edge::Rising, 0.0)?;
        if !(delta_at_zero > 0.0) {
            return Err(ChannelError::NotStrictlyCausal { delta_at_zero });
        }
        if let DelayKind::BaselinePure { delay } | DelayKind::BaselineInertial { delay, .. } = self.kind
        {
            return Ok(delay);
        }
        let g = |t: f64| -> f64 { -t + self.eval_delta(Edge::Rising, -t).unwrap_or(f64::NEG_INFINITY) };
        let mut lo = 0.0;
        let mut hi = self.delta_inf_down - 1e-9;
        debug_assert!(g(lo) > 0.0);
        for _ in 0..BISECT_MAX_ITER {
            if hi - lo <= BISECT_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// True when the rising and falling delay functions coincide. The
    /// storage-loop analysis requires a symmetric model.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            DelayKind::Exp(p) => p.vth == 0.5,
            DelayKind::BaselinePure { .. } | DelayKind::BaselineInertial { .. } => true,
            DelayKind::Waveform(_) => {
                if (self.delta_inf_up - self.delta_inf_down).abs() > 1e-9 {
                    return false;
                }
                let lo = self.domain_boundary(Edge::Rising).max(self.domain_boundary(Edge::Falling));
                (0..32).all(|i| {
                    let t = lo + 0.05 * self.time_scale() + i as f64 * 0.31;
                    match (self.eval_delta(Edge::Rising, t), self.eval_delta(Edge::Falling, t)) {
                        (Ok(a), Ok(b)) => (a - b).abs() <= 1e-9,
                        _ => false,
                    }
                })
            }
        }
    }

    /// Checks the involution identity and shape properties over `grid`.
    pub fn validate_involution(&self, grid: &[f64], tol: f64) -> ValidationReport {
        let mut report = ValidationReport {
            involution_kind: self.is_involution_kind(),
            max_err_up_down: 0.0,
            max_err_down_up: 0.0,
            monotone: true,
            concave: true,
            tol,
            grid_points: grid.len(),
        };
        // Grid points outside a composition's domain are skipped: the
        // identity is only required for applicable T.
        let check = |outer: Edge, inner: Edge, acc: &mut f64| {
            for &t in grid {
                if let Ok(d_inner) = self.eval_delta(inner, t) {
                    if let Ok(d_outer) = self.eval_delta(outer, -d_inner) {
                        let err = (-d_outer - t).abs();
                        if err > *acc {
                            *acc = err;
                        }
                    }
                }
            }
        };
        check(Edge::Rising, Edge::Falling, &mut report.max_err_up_down);
        check(Edge::Falling, Edge::Rising, &mut report.max_err_down_up);

        // Finite-difference shape checks on the grid: the first differences
        // must be positive (strictly increasing) and themselves decreasing
        // (concavity). Baselines have zero differences and fail monotone.
        for edge in [Edge::Rising, Edge::Falling] {
            let vals: Vec<Option<f64>> = grid.iter().map(|&t| self.eval_delta(edge, t).ok()).collect();
            let mut prev_diff: Option<f64> = None;
            for w in vals.windows(2).zip(grid.windows(2)) {
                let ((pair, ts),) = (w,);
                if let (Some(a), Some(b)) = (pair[0], pair[1]) {
                    let diff = (b - a) / (ts[1] - ts[0]);
                    if diff <= 0.0 {
                        report.monotone = false;
                    }
                    if let Some(p) = prev_diff {
                        if diff > p + tol.max(1e-9) {
                            report.concave = false;
                        }
                    }
                    prev_diff = Some(diff);
                }
            }
        }
        report
    }
}

/// Outcome of an involution validation run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub involution_kind: bool,
    pub max_err_up_down: f64,
    pub max_err_down_up: f64,
    pub monotone: bool,
    pub concave: bool,
    pub tol: f64,
    pub grid_points: usize,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.involution_kind
            && self.max_err_up_down <= self.tol
            && self.max_err_down_up <= self.tol
            && self.monotone
            && self.concave
    }
}

/// Evenly spaced grid helper for validation sweeps.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
