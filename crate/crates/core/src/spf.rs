//! Storage-loop analysis and short-pulse-filtration checks.
//!
//! The storage loop is an OR gate fed back through a symmetric strictly
//! causal channel. An input pulse of length `D0` either dies out, gets
//! captured (output eventually constant 1), or -- at exactly one critical
//! length -- produces an unbounded pulse train. The loop's pulse lengths
//! obey the iteration
//!
//! ```text
//!   D1      = D0 - dinf + delta(D0 - dinf)
//!   D_{n+1} = f(D_n),   f(D) = delta(D - delta(-D)) + D - delta(-D)
//! ```
//!
//! A pulse materializes at the OR output only while `0 < D_n < delta_min`:
//! at `D_n <= 0` its own transitions cancel (loop dies), and at
//! `D_n >= delta_min` the feedback rise cancels the pending falling
//! transition, so the output stays at 1. Note `f(delta_min) = delta(0)`,
//! which is where the captured/canceled thresholds `f(D) >= delta(0)` and
//! `f(D) <= 0` come from; stopping at `delta_min` keeps the iteration in
//! lockstep with the constructed execution.
//!
//! The critical pulse length `D0~` is bracketed by classifying outcomes;
//! an independent closed-form route solves `D1(D0) = D1~` where `D1~` is
//! the unique root of `delta(-x) = 2x`.

use serde::Serialize;
use thiserror::Error;

use crate::channel::{ChannelError, DelayModel, Edge, ExpChannelParams};
use crate::circuit::{Circuit, CircuitBuilder, TruthTable};
use crate::engine::{self, EngineError};
use crate::signal::Signal;

#[derive(Debug, Error)]
pub enum SpfError {
    #[error("storage-loop analysis requires a symmetric channel (delta_up = delta_down)")]
    AsymmetricChannel,
    #[error("storage-loop analysis requires a strictly causal channel")]
    NotStrictlyCausal,
    #[error("input pulse length must be positive, got {0}")]
    InvalidPulseLength(f64),
    #[error("critical-pulse methods disagree: bisection {bisect} vs closed-form {solve} (tol {tol})")]
    MethodDisagreement { bisect: f64, solve: f64, tol: f64 },
    #[error("circuit must have exactly one input and one output port")]
    NotSingleInputOutput,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Final behavior of the storage loop for a given input pulse length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// The pulse train dies out; output eventually constant 0.
    Settles0,
    /// The pulse is captured; output eventually constant 1.
    Settles1,
    /// Not settled within the step budget.
    Metastable,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Settles0 => write!(f, "settles0"),
            Regime::Settles1 => write!(f, "settles1"),
            Regime::Metastable => write!(f, "metastable"),
        }
    }
}

/// Outcome of the pulse-length iteration for one input pulse.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub delta0: f64,
    pub regime: Regime,
    /// Pulse lengths D1, D2, ... that materialize at the OR output (the
    /// input pulse D0 itself is not included).
    pub pulse_lengths: Vec<f64>,
    /// Time of the last OR-output transition, reconstructed from the
    /// iteration; `None` when metastable.
    pub stabilization_time: Option<f64>,
    pub iterations: usize,
}

fn require_loop_channel(model: &DelayModel) -> Result<f64, SpfError> {
    if !model.is_symmetric() {
        return Err(SpfError::AsymmetricChannel);
    }
    model.delta_min().map_err(|_| SpfError::NotStrictlyCausal)
}

fn delta(model: &DelayModel, t: f64) -> Result<f64, SpfError> {
    Ok(model.eval_delta(Edge::Rising, t)?)
}

/// First-pulse length `D1 = D0 - dinf + delta(D0 - dinf)`.
pub fn first_pulse(model: &DelayModel, delta0: f64) -> Result<f64, SpfError> {
    let u = delta0 - model.delta_inf_up();
    Ok(u + delta(model, u)?)
}

/// The auxiliary iteration map `f(D) = delta(D - delta(-D)) + D - delta(-D)`.
pub fn iteration_map(model: &DelayModel, d: f64) -> Result<f64, SpfError> {
    let shift = d - delta(model, -d)?;
    Ok(delta(model, shift)? + shift)
}

/// Runs the pulse-length iteration for an input pulse of length `delta0`.
///
/// `delta0 >= dinf` is captured immediately (the OR output has a single
/// rising transition); `delta0 <= dinf - delta_min` dies immediately (the
/// OR output is just the input pulse).
pub fn loop_iterate(
    model: &DelayModel,
    delta0: f64,
    max_steps: usize,
) -> Result<RegimeReport, SpfError> {
    let delta_min = require_loop_channel(model)?;
    if !(delta0 > 0.0) {
        return Err(SpfError::InvalidPulseLength(delta0));
    }
    let dinf = model.delta_inf_up();
    if delta0 >= dinf {
        return Ok(RegimeReport {
            delta0,
            regime: Regime::Settles1,
            pulse_lengths: vec![],
            stabilization_time: Some(0.0),
            iterations: 0,
        });
    }

    // Rise time of the n-th loop pulse; the first loop pulse starts where
    // the idle channel delivers the input rise.
    let mut rise = dinf;
    let mut pulses = Vec::new();
    let mut d = first_pulse(model, delta0)?;
    let mut iterations = 0;
    loop {
        if d <= 0.0 {
            // The pending pair of the would-be next pulse cancels.
            let stab = match pulses.last() {
                Some(&last) => rise + last,
                None => delta0,
            };
            return Ok(RegimeReport {
                delta0,
                regime: Regime::Settles0,
                pulse_lengths: pulses,
                stabilization_time: Some(stab),
                iterations,
            });
        }
        if d >= delta_min {
            // The feedback rise cancels the pending fall: captured. When a
            // pulse already materialized, the final rise happens one
            // feedback delay after it; otherwise at the first loop rise.
            let stab = match pulses.last() {
                Some(&last) => rise + delta(model, -last)?,
                None => rise,
            };
            return Ok(RegimeReport {
                delta0,
                regime: Regime::Settles1,
                pulse_lengths: pulses,
                stabilization_time: Some(stab),
                iterations,
            });
        }
        if iterations >= max_steps {
            return Ok(RegimeReport {
                delta0,
                regime: Regime::Metastable,
                pulse_lengths: pulses,
                stabilization_time: None,
                iterations,
            });
        }
        if let Some(&last) = pulses.last() {
            rise += delta(model, -last)?;
        }
        pulses.push(d);
        iterations += 1;
        d = iteration_map(model, d)?;
    }
}

/// Gap between consecutive loop pulses of length `d`: `delta(-d) - d`. At
/// the fixed point this equals the pulse length (duty cycle 50%).
pub fn pulse_gap(model: &DelayModel, d: f64) -> Result<f64, SpfError> {
    Ok(delta(model, -d)? - d)
}

/// The nontrivial fixed point `D1~` of the iteration map: the unique root
/// of `delta(-x) - 2x` in `(0, delta(0))`, by bisection to `tol`.
pub fn tilde_delta1(model: &DelayModel, tol: f64) -> Result<f64, SpfError> {
    require_loop_channel(model)?;
    let delta_at_zero = delta(model, 0.0)?;
    let mut lo = 0.0;
    let mut hi = delta_at_zero;
    // h(0) = delta(0) > 0, h(delta(0)) = -2*delta(0) < 0 by the involution
    // identity delta(-delta(0)) = 0.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let h = delta(model, -mid)? - 2.0 * mid;
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One step of the critical-pulse outcome bisection.
#[derive(Debug, Clone, Serialize)]
pub struct BisectStep {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
    pub regime: Regime,
}

/// Result of the critical-pulse search with its audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalSearch {
    /// The critical pulse length from outcome bisection.
    pub delta0: f64,
    /// Independent closed-form estimate: solve `D1(D0) = D1~`.
    pub delta0_solve: f64,
    pub tilde_delta1: f64,
    pub trace: Vec<BisectStep>,
}

/// Finds the critical pulse length `D0~` in `(dinf - delta_min, dinf)`.
///
/// Primary route: bisection on the loop outcome (below: dies, above:
/// captured). Cross-check: solve `u + delta(u) = D1~` for `u = D0 - dinf`.
/// Disagreement beyond `10 * tol` is a hard error.
pub fn critical_delta0_search(
    model: &DelayModel,
    tol: f64,
    max_steps: usize,
) -> Result<CriticalSearch, SpfError> {
    let delta_min = require_loop_channel(model)?;
    let dinf = model.delta_inf_up();
    let mut lo = dinf - delta_min;
    let mut hi = dinf;
    let mut trace = Vec::new();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let regime = loop_iterate(model, mid, max_steps)?.regime;
        trace.push(BisectStep { lo, hi, mid, regime });
        match regime {
            Regime::Settles1 => hi = mid,
            // A metastable classification means the point is within float
            // noise of the critical value; tighten from below.
            Regime::Settles0 | Regime::Metastable => lo = mid,
        }
    }
    let delta0 = 0.5 * (lo + hi);

    // Closed-form route: D1 = u + delta(u) is strictly increasing in u with
    // value 0 at u = -delta_min and delta(0) at u = 0.
    let d1_target = tilde_delta1(model, tol.min(1e-13))?;
    let mut ulo = -delta_min;
    let mut uhi = 0.0;
    for _ in 0..200 {
        if uhi - ulo <= tol.min(1e-13) {
            break;
        }
        let mid = 0.5 * (ulo + uhi);
        if mid + delta(model, mid)? < d1_target {
            ulo = mid;
        } else {
            uhi = mid;
        }
    }
    let delta0_solve = dinf + 0.5 * (ulo + uhi);

    if (delta0 - delta0_solve).abs() > 10.0 * tol {
        return Err(SpfError::MethodDisagreement {
            bisect: delta0,
            solve: delta0_solve,
            tol,
        });
    }
    Ok(CriticalSearch { delta0, delta0_solve, tilde_delta1: d1_target, trace })
}

/// The critical pulse length; see [`critical_delta0_search`].
pub fn critical_delta0(model: &DelayModel, tol: f64, max_steps: usize) -> Result<f64, SpfError> {
    Ok(critical_delta0_search(model, tol, max_steps)?.delta0)
}

/// Builds the bare storage loop: `i -> OR`, `OR -> channel c -> OR`, output
/// port on the OR gate.
pub fn build_storage_loop(loop_model: &DelayModel) -> Result<Circuit, SpfError> {
    require_loop_channel(loop_model)?;
    let mut b = CircuitBuilder::new();
    b.input("i");
    b.gate("or1", TruthTable::or2(), &["i", "c"]);
    b.channel("c", loop_model.clone(), false, "or1");
    b.output("o", "or1");
    b.build().map_err(|_| SpfError::NotSingleInputOutput)
}

/// Builds the full short-pulse-filtration circuit: the storage loop plus a
/// high-threshold filter channel feeding the output through a buffer gate.
pub fn build_spf_circuit(
    loop_model: &DelayModel,
    ht_params: ExpChannelParams,
) -> Result<Circuit, SpfError> {
    require_loop_channel(loop_model)?;
    let ht = DelayModel::exp(ht_params)?;
    let mut b = CircuitBuilder::new();
    b.input("i");
    b.gate("or1", TruthTable::or2(), &["i", "c"]);
    b.channel("c", loop_model.clone(), false, "or1");
    b.channel("ht", ht, false, "or1");
    b.gate("obuf", TruthTable::buffer(), &["ht"]);
    b.output("o", "obuf");
    b.build().map_err(|_| SpfError::NotSingleInputOutput)
}

/// Simulates the bare storage loop for an input pulse of length `delta0`
/// and returns the time of the last OR-output transition, or `horizon` if
/// the loop has not settled.
pub fn stabilization_time(
    model: &DelayModel,
    delta0: f64,
    horizon: f64,
) -> Result<f64, SpfError> {
    let circuit = build_storage_loop(model)?;
    let mut inputs = std::collections::BTreeMap::new();
    inputs.insert(
        "i".to_string(),
        Signal::pulse(0.0, delta0).map_err(|_| SpfError::InvalidPulseLength(delta0))?,
    );
    let exec = engine::execute(&circuit, &inputs, horizon)?;
    if !exec.terminated {
        return Ok(horizon);
    }
    Ok(exec.signal("or1")?.last_transition_time().unwrap_or(0.0))
}

/// Default pure delay assigned to synthesized high-threshold filters.
pub const HT_DEFAULT_TP: f64 = 1.0;

/// Chooses an exp-channel acting as a high-threshold filter: every pulse
/// train with pulse lengths at most `delta_hat` and 1-to-0 duty ratio at
/// most `gamma` maps to the zero signal.
///
/// The threshold is `gamma` and the time constant is twice the analytic
/// lower bound `max(delta_hat / L, delta_hat * (1 + 1/gamma) / L)` with
/// `L = -ln(1 - gamma)`; the second term (from the peak of
/// `h(D) = gamma*e^(-D/(gamma*tau)) + (1-gamma)*e^(D/tau)`) always
/// dominates. Doubling avoids sitting exactly on the bound.
pub fn choose_ht_filter(delta_hat: f64, gamma: f64) -> Result<ExpChannelParams, SpfError> {
    if !(delta_hat > 0.0) {
        return Err(SpfError::InvalidPulseLength(delta_hat));
    }
    let log_term = -(1.0 - gamma).ln();
    let bound_threshold = delta_hat / log_term;
    let bound_peak = delta_hat * (1.0 + 1.0 / gamma) / log_term;
    let tau = 2.0 * bound_threshold.max(bound_peak);
    Ok(ExpChannelParams::new(tau, HT_DEFAULT_TP, gamma)?)
}

/// Configuration for the short-pulse-filtration conditions.
#[derive(Debug, Clone, Copy)]
pub struct SpfCheckConfig {
    /// Minimum admissible output pulse length (condition F4).
    pub epsilon: f64,
    /// Stabilization bound K (condition F5), if required.
    pub bound_k: Option<f64>,
    pub horizon: f64,
}

/// Results of checking the SPF conditions over a set of input pulses.
#[derive(Debug, Clone, Serialize)]
pub struct SpfVerdict {
    /// F2: zero input gives zero output.
    pub f2_no_generation: bool,
    /// F3: some input pulse yields a non-zero output.
    pub f3_nontrivial: bool,
    /// F4: no output pulse shorter than epsilon over the pulse set.
    pub f4_no_short_pulses: bool,
    /// Shortest output pulse observed, if any.
    pub min_output_pulse: Option<f64>,
    /// F5 (when a bound K is configured): the last output transition stays
    /// before T + K, with T the last input transition time.
    pub f5_bounded: Option<bool>,
    pub pulses_checked: usize,
}

impl SpfVerdict {
    pub fn passes(&self) -> bool {
        self.f2_no_generation
            && self.f3_nontrivial
            && self.f4_no_short_pulses
            && self.f5_bounded.unwrap_or(true)
    }
}

/// Simulates every pulse length in `pulse_set` through `circuit` and checks
/// the SPF conditions.
pub fn check_spf(
    circuit: &Circuit,
    cfg: &SpfCheckConfig,
    pulse_set: &[f64],
) -> Result<SpfVerdict, SpfError> {
    let ins = circuit.input_ports();
    let outs = circuit.output_ports();
    if ins.len() != 1 || outs.len() != 1 {
        return Err(SpfError::NotSingleInputOutput);
    }
    let in_id = circuit.vertex(ins[0]).id.clone();
    let out_id = circuit.vertex(outs[0]).id.clone();

    let run = |signal: Signal| -> Result<Signal, SpfError> {
        let mut inputs = std::collections::BTreeMap::new();
        inputs.insert(in_id.clone(), signal);
        let exec = engine::execute(circuit, &inputs, cfg.horizon)?;
        Ok(exec.signal(&out_id)?.clone())
    };

    let zero_out = run(Signal::zero())?;
    let f2 = zero_out == Signal::zero();

    let mut f3 = false;
    let mut f4 = true;
    let mut f5 = cfg.bound_k.map(|_| true);
    let mut min_pulse: Option<f64> = None;
    for &len in pulse_set {
        let out = run(Signal::pulse(0.0, len).map_err(|_| SpfError::InvalidPulseLength(len))?)?;
        if out != Signal::zero() {
            f3 = true;
        }
        for (_, plen) in out.pulses() {
            min_pulse = Some(min_pulse.map_or(plen, |m: f64| m.min(plen)));
            if plen < cfg.epsilon {
                f4 = false;
            }
        }
        if let (Some(k), Some(flag)) = (cfg.bound_k, f5.as_mut()) {
            let input_last = len; // pulse at time 0: last input transition at `len`
            if let Some(t) = out.last_transition_time() {
                if t >= input_last + k {
                    *flag = false;
                }
            }
        }
    }
    Ok(SpfVerdict {
        f2_no_generation: f2,
        f3_nontrivial: f3,
        f4_no_short_pulses: f4,
        min_output_pulse: min_pulse,
        f5_bounded: f5,
        pulses_checked: pulse_set.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn model() -> DelayModel {
        DelayModel::exp_params(1.0, 1.0, 0.5).unwrap()
    }

    const DINF: f64 = 1.0 + std::f64::consts::LN_2;

    #[test]
    fn big_pulse_settles1_immediately() {
        let r = loop_iterate(&model(), 2.0, 100).unwrap();
        assert_eq!(r.regime, Regime::Settles1);
        assert_eq!(r.iterations, 0);
        assert!(r.pulse_lengths.is_empty());
        assert_eq!(r.stabilization_time, Some(0.0));
    }

    #[test]
    fn small_pulse_settles0_immediately() {
        let r = loop_iterate(&model(), 0.5, 100).unwrap();
        assert_eq!(r.regime, Regime::Settles0);
        assert!(r.pulse_lengths.is_empty());
        assert_eq!(r.stabilization_time, Some(0.5));
    }

    #[test]
    fn asymmetric_channel_rejected() {
        let m = DelayModel::exp_params(1.0, 1.0, 0.6).unwrap();
        assert!(matches!(loop_iterate(&m, 1.0, 10), Err(SpfError::AsymmetricChannel)));
    }

    #[test]
    fn tilde_delta1_residual_and_bounds() {
        let m = model();
        let x = tilde_delta1(&m, 1e-14).unwrap();
        let residual = (m.eval_delta(Edge::Rising, -x).unwrap() - 2.0 * x).abs();
        assert!(residual < 1e-12, "residual {residual}");
        let delta_at_zero = m.eval_delta(Edge::Rising, 0.0).unwrap();
        assert!(x > 0.0 && x < delta_at_zero);
        // Bracket endpoints have opposite signs: h(0) = delta(0) > 0 and
        // h(delta(0)) = delta(-delta(0)) - 2 delta(0) = -2 delta(0) < 0.
        assert!(delta_at_zero > 0.0);
        let hi = m.eval_delta(Edge::Rising, -delta_at_zero).unwrap() - 2.0 * delta_at_zero;
        assert!(hi < 0.0);
        assert_abs_diff_eq!(
            m.eval_delta(Edge::Rising, -delta_at_zero).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn critical_delta0_two_routes_agree() {
        let m = model();
        let s = critical_delta0_search(&m, 1e-12, 2000).unwrap();
        assert!(s.delta0 > DINF - 1.0 && s.delta0 < DINF);
        assert!((s.delta0 - s.delta0_solve).abs() < 1e-10);
        // Right below dies, right above captures.
        assert_eq!(loop_iterate(&m, s.delta0 - 1e-9, 2000).unwrap().regime, Regime::Settles0);
        assert_eq!(loop_iterate(&m, s.delta0 + 1e-9, 2000).unwrap().regime, Regime::Settles1);
    }

    #[test]
    fn critical_delta0_scales_with_time_units() {
        let a = critical_delta0(&model(), 1e-12, 2000).unwrap();
        let m2 = DelayModel::exp_params(2.0, 2.0, 0.5).unwrap();
        let b = critical_delta0(&m2, 1e-12, 2000).unwrap();
        assert_abs_diff_eq!(b, 2.0 * a, epsilon = 1e-9);
    }

    #[test]
    fn near_critical_pulses_converge_to_fixed_point() {
        let m = model();
        let c = critical_delta0(&m, 1e-13, 4000).unwrap();
        let d1 = tilde_delta1(&m, 1e-14).unwrap();
        let r = loop_iterate(&m, c, 22).unwrap();
        assert_eq!(r.regime, Regime::Metastable);
        assert_eq!(r.pulse_lengths.len(), 22);
        // The bisection residue is amplified by roughly f'(D1~) ~ 2.34 per
        // pulse, so the tail stays near the fixed point for ~25 pulses.
        for &p in r.pulse_lengths.iter().rev().take(10) {
            assert!((p - d1).abs() < 1e-4, "pulse {p} vs fixed point {d1}");
        }
        // Duty cycle converges to 50%: gap equals pulse length at the
        // fixed point.
        let gap = pulse_gap(&m, d1).unwrap();
        assert_abs_diff_eq!(gap, d1, epsilon = 1e-10);
    }

    #[test]
    fn iteration_matches_engine_simulation() {
        let m = model();
        for delta0 in [0.8, 1.0, 1.2, 1.30592, 1.4] {
            let report = loop_iterate(&m, delta0, 10_000).unwrap();
            let mut inputs = BTreeMap::new();
            inputs.insert("i".to_string(), Signal::pulse(0.0, delta0).unwrap());
            let circuit = build_storage_loop(&m).unwrap();
            let exec = engine::execute(&circuit, &inputs, 200.0).unwrap();
            let or = exec.signal("or1").unwrap();
            let observed = or.pulses();
            // Pulse 0 is the input pulse itself.
            assert_abs_diff_eq!(observed[0].1, delta0, epsilon = 1e-12);
            assert_eq!(
                observed.len() - 1,
                report.pulse_lengths.len(),
                "delta0={delta0}: engine {observed:?} vs iteration {:?}",
                report.pulse_lengths
            );
            for ((_, olen), ilen) in observed[1..].iter().zip(&report.pulse_lengths) {
                assert_abs_diff_eq!(*olen, *ilen, epsilon = 1e-9);
            }
            // Settled runs agree on the final transition time.
            if report.regime != Regime::Metastable {
                assert!(exec.terminated);
                assert_abs_diff_eq!(
                    or.last_transition_time().unwrap(),
                    report.stabilization_time.unwrap(),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn iteration_map_is_expanding() {
        // |f(D) - D1~| >= (1 + delta'(0)) |D - D1~| away from the fixed
        // point, with the derivative from central differences.
        let m = model();
        let d1 = tilde_delta1(&m, 1e-14).unwrap();
        let h = 1e-6;
        let slope_at_zero = m.derivative(Edge::Rising, 0.0, h).unwrap();
        let factor = 1.0 + slope_at_zero;
        let delta_at_zero = m.eval_delta(Edge::Rising, 0.0).unwrap();
        for i in 1..200 {
            let d = delta_at_zero * i as f64 / 200.0;
            let fd = iteration_map(&m, d).unwrap();
            assert!(
                (fd - d1).abs() >= factor * (d - d1).abs() - 1e-9,
                "d={d}: |f-d1|={} vs {}",
                (fd - d1).abs(),
                factor * (d - d1).abs()
            );
        }
    }

    #[test]
    fn big_and_small_pulse_output_shapes() {
        let m = model();
        let circuit = build_storage_loop(&m).unwrap();
        // Captured: the OR output has exactly one rising transition and
        // never falls.
        let mut inputs = BTreeMap::new();
        inputs.insert("i".to_string(), Signal::pulse(0.0, 2.0).unwrap());
        let exec = engine::execute(&circuit, &inputs, 50.0).unwrap();
        let or = exec.signal("or1").unwrap();
        assert_eq!(or.times().len(), 1);
        assert!(or.value_at(50.0));
        // Filtered: the OR output is exactly the input pulse.
        let mut inputs = BTreeMap::new();
        inputs.insert("i".to_string(), Signal::pulse(0.0, 0.5).unwrap());
        let exec = engine::execute(&circuit, &inputs, 50.0).unwrap();
        assert_eq!(exec.signal("or1").unwrap(), &Signal::pulse(0.0, 0.5).unwrap());
        assert!(exec.terminated);
    }

    #[test]
    fn stabilization_time_examples() {
        let m = model();
        // Very large pulse: single rise at 0, settle time 0.
        assert_abs_diff_eq!(
            stabilization_time(&m, 2.0 * DINF, 100.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        // Tiny pulse: output is exactly the input pulse.
        let tiny = 0.1;
        assert_abs_diff_eq!(stabilization_time(&m, tiny, 100.0).unwrap(), tiny, epsilon = 1e-12);
    }

    #[test]
    fn ht_filter_bounds_and_behavior() {
        let p = choose_ht_filter(0.5, 0.6).unwrap();
        assert_eq!(p.vth, 0.6);
        let log_term = 2.5f64.ln();
        let lb = (0.5 / log_term).max(0.5 * (1.0 + 1.0 / 0.6) / log_term);
        assert_abs_diff_eq!(p.tau, 2.0 * lb, epsilon = 1e-12);
        // The synthesized filter kills a compliant pulse train.
        let m = DelayModel::exp(p).unwrap();
        let train = Signal::pulse_train(0.0, 0.4, 0.8, 60.0).unwrap();
        let out = engine::channel_output(&m, false, &train, 80.0).unwrap();
        assert_eq!(out, Signal::zero());
    }

    #[test]
    fn spf_circuit_shape_and_end_to_end() {
        let m = model();
        let ht = choose_ht_filter(2.0, 0.6).unwrap();
        let c = build_spf_circuit(&m, ht).unwrap();
        assert!(c.validate().is_empty());
        assert!(!c.is_forward());
        // A huge pulse produces a clean single rising transition.
        let mut inputs = BTreeMap::new();
        inputs.insert("i".to_string(), Signal::pulse(0.0, 2.0 * DINF).unwrap());
        let exec = engine::execute(&c, &inputs, 120.0).unwrap();
        let o = exec.signal("o").unwrap();
        assert_eq!(o.times().len(), 1);
        assert!(o.value_at(exec.horizon));
    }

    #[test]
    fn check_spf_on_identity_wire_fails_f4() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g", TruthTable::buffer(), &["i"]);
        b.output("o", "g");
        let c = b.build().unwrap();
        let cfg = SpfCheckConfig { epsilon: 0.5, bound_k: None, horizon: 20.0 };
        let v = check_spf(&c, &cfg, &[0.1]).unwrap();
        assert!(v.f2_no_generation);
        assert!(v.f3_nontrivial);
        assert!(!v.f4_no_short_pulses);
    }
}
