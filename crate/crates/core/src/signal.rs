//! Transition-list signals.
//!
//! A signal is a binary-valued function of continuous time, represented by
//! its value at minus infinity plus a strictly increasing list of transition
//! times. Values alternate, so the transition times alone determine the
//! whole waveform. The value convention is half-open: the signal already has
//! the new value at the time of a transition, i.e. it is constant on
//! `[t_n, t_{n+1})`.
//!
//! Also provides the measure `mu` (total 1-time on `[0, T]`) and the
//! distance `||s1 - s2||_T` (measure of pointwise disagreement), which the
//! continuity experiments are built on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("invalid pulse: start={start}, length={length}")]
    InvalidPulse { start: f64, length: f64 },
    #[error("transition times must be finite, >= 0 and strictly increasing (index {index})")]
    NonMonotoneTimes { index: usize },
}

/// A single transition: the signal takes `value` at `time` and holds it
/// until the next transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time: f64,
    pub value: bool,
}

/// Binary signal: initial value at -infinity plus alternating transitions
/// at finite times >= 0.
///
/// Only transition times are stored; values are implied by alternation
/// starting from `initial`, which makes malformed (non-alternating) signals
/// unrepresentable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    initial: bool,
    times: Vec<f64>,
}

impl Signal {
    /// Constant signal with the given value and no transitions.
    pub fn constant(value: bool) -> Self {
        Signal { initial: value, times: Vec::new() }
    }

    pub fn zero() -> Self {
        Self::constant(false)
    }

    pub fn one() -> Self {
        Self::constant(true)
    }

    /// Builds a signal from its initial value and transition times.
    /// Times must be finite, non-negative and strictly increasing.
    pub fn from_times(initial: bool, times: Vec<f64>) -> Result<Self, SignalError> {
        for (i, &t) in times.iter().enumerate() {
            let ok = t.is_finite() && t >= 0.0 && (i == 0 || times[i - 1] < t);
            if !ok {
                return Err(SignalError::NonMonotoneTimes { index: i });
            }
        }
        Ok(Signal { initial, times })
    }

    /// A pulse of length `length` at time `start`: initial value 0, rises at
    /// `start`, falls at `start + length`.
    pub fn pulse(start: f64, length: f64) -> Result<Self, SignalError> {
        if !(start >= 0.0 && length > 0.0 && start.is_finite() && length.is_finite()) {
            return Err(SignalError::InvalidPulse { start, length });
        }
        Ok(Signal { initial: false, times: vec![start, start + length] })
    }

    /// Periodic pulse train: pulses of length `pulse_len` separated by
    /// 0-gaps of length `gap`, starting at `start`, truncated to `horizon`.
    /// The 1-to-0 duty ratio is `pulse_len / gap`.
    pub fn pulse_train(start: f64, pulse_len: f64, gap: f64, horizon: f64) -> Result<Self, SignalError> {
        if !(start >= 0.0 && pulse_len > 0.0 && gap > 0.0) {
            return Err(SignalError::InvalidPulse { start, length: pulse_len });
        }
        let mut times = Vec::new();
        let mut t = start;
        while t <= horizon {
            times.push(t);
            times.push(t + pulse_len);
            t += pulse_len + gap;
        }
        Signal::from_times(false, times)
    }

    pub fn initial(&self) -> bool {
        self.initial
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn is_constant(&self) -> bool {
        self.times.is_empty()
    }

    /// Value of the k-th transition (alternation implies it).
    pub fn value_of(&self, index: usize) -> bool {
        self.initial ^ index.is_multiple_of(2)
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.times.iter().enumerate().map(|(i, &t)| Transition { time: t, value: self.value_of(i) })
    }

    pub fn last_transition_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Signal value at time `t` (half-open convention: a transition at `t`
    /// already counts).
    pub fn value_at(&self, t: f64) -> bool {
        let n = self.times.partition_point(|&x| x <= t);
        self.initial ^ (n % 2 == 1)
    }

    /// Flips the signal pointwise.
    pub fn complement(&self) -> Signal {
        Signal { initial: !self.initial, times: self.times.clone() }
    }

    /// Restriction to `[-inf, horizon]`: drops transitions after `horizon`.
    pub fn truncated(&self, horizon: f64) -> Signal {
        let n = self.times.partition_point(|&x| x <= horizon);
        Signal { initial: self.initial, times: self.times[..n].to_vec() }
    }

    /// Maximal 1-intervals `(start, length)` that are closed by a falling
    /// transition. A trailing rise that never falls is not a pulse.
    pub fn pulses(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut rise: Option<f64> = None;
        if self.initial {
            rise = Some(0.0);
        }
        for tr in self.transitions() {
            if tr.value {
                rise = Some(tr.time);
            } else if let Some(r) = rise.take() {
                out.push((r, tr.time - r));
            }
        }
        out
    }

    /// Lebesgue measure of `{t in [0, horizon] : s(t) = 1}`.
    pub fn mu(&self, horizon: f64) -> f64 {
        debug_assert!(horizon >= 0.0);
        let mut total = 0.0;
        let mut value = self.initial;
        let mut seg_start = 0.0;
        for tr in self.transitions() {
            if tr.time >= horizon {
                break;
            }
            if value {
                total += tr.time.max(0.0) - seg_start;
            }
            value = tr.value;
            seg_start = tr.time.max(0.0);
        }
        if value {
            total += horizon - seg_start;
        }
        total
    }

    /// `||self - other||_horizon`: measure of the set where the two signals
    /// disagree on `[0, horizon]`.
    pub fn distance(&self, other: &Signal, horizon: f64) -> f64 {
        merge_measure(self, other, horizon, |a, b| a != b)
    }

    /// Pointwise `(min, max)` of two signals. Both results satisfy the
    /// signal well-formedness rules.
    pub fn pointwise_min_max(&self, other: &Signal) -> (Signal, Signal) {
        let min = merge_signal(self, other, |a, b| a && b);
        let max = merge_signal(self, other, |a, b| a || b);
        (min, max)
    }

    /// True if `self(t) <= other(t)` for all t.
    pub fn le_pointwise(&self, other: &Signal) -> bool {
        let (min, _) = self.pointwise_min_max(other);
        min == *self
    }
}

/// Two-pointer merge over both transition lists, accumulating the measure of
/// `{t in [0, horizon] : pred(s1(t), s2(t))}`. O(n + m).
fn merge_measure(s1: &Signal, s2: &Signal, horizon: f64, pred: impl Fn(bool, bool) -> bool) -> f64 {
    let mut total = 0.0;
    let mut v1 = s1.initial;
    let mut v2 = s2.initial;
    let mut seg_start = 0.0_f64;
    let (mut i, mut j) = (0, 0);
    loop {
        let t1 = s1.times.get(i).copied().unwrap_or(f64::INFINITY);
        let t2 = s2.times.get(j).copied().unwrap_or(f64::INFINITY);
        let t = t1.min(t2);
        let upto = t.min(horizon).max(0.0);
        if pred(v1, v2) && upto > seg_start {
            total += upto - seg_start;
        }
        if t >= horizon || t == f64::INFINITY {
            break;
        }
        seg_start = upto;
        if t1 == t {
            v1 = s1.value_of(i);
            i += 1;
        }
        if t2 == t {
            v2 = s2.value_of(j);
            j += 1;
        }
    }
    total
}

fn merge_signal(s1: &Signal, s2: &Signal, op: impl Fn(bool, bool) -> bool) -> Signal {
    let initial = op(s1.initial, s2.initial);
    let mut times = Vec::new();
    let mut v1 = s1.initial;
    let mut v2 = s2.initial;
    let mut cur = initial;
    let (mut i, mut j) = (0, 0);
    while i < s1.times.len() || j < s2.times.len() {
        let t1 = s1.times.get(i).copied().unwrap_or(f64::INFINITY);
        let t2 = s2.times.get(j).copied().unwrap_or(f64::INFINITY);
        let t = t1.min(t2);
        if t1 == t {
            v1 = s1.value_of(i);
            i += 1;
        }
        if t2 == t {
            v2 = s2.value_of(j);
            j += 1;
        }
        let v = op(v1, v2);
        if v != cur {
            times.push(t);
            cur = v;
        }
    }
    Signal { initial, times }
}
