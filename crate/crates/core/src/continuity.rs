//! Empirical continuity probes and forward-circuit measure sweeps.
//!
//! Involution channels are continuous with respect to the distance
//! `||.||_T`: shrinking a perturbing pulse shrinks the output disturbance,
//! with the bound `d * epsilon` where
//! `d = max(2, delta'(t_n - t_{n-1} - delta_{n-1}))` at the last transition
//! of the base signal. The worst-case single-pulse perturbation appends the
//! pulse at `t_n + (delta_n - delta_min)+`, which right-shifts the last
//! output transition.
//!
//! Constant-delay baselines are the contrast: a pure delay is trivially
//! continuous (distance equals the pulse length), while an inertial delay
//! jumps discontinuously when the pulse crosses its minimum width.

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{ChannelError, DelayKind, DelayModel, Edge};
use crate::circuit::Circuit;
use crate::engine::{self, EngineError};
use crate::signal::{Signal, SignalError};

#[derive(Debug, Error)]
pub enum ContinuityError {
    #[error("probe requires an involution-kind model; baselines go through baseline_probe")]
    NonInvolutionModel,
    #[error("baseline_probe requires a pure or inertial baseline model")]
    NotBaselineModel,
    #[error("base signal must be eventually constant 0")]
    BaseNotEventuallyZero,
    #[error("circuit must be forward (acyclic)")]
    NotForward,
    #[error("circuit must have exactly one input and one output port")]
    NotSingleInputOutput,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Distance of the perturbed output from the base output, per perturbation
/// size.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ProbePoint {
    pub epsilon: f64,
    pub out_distance: f64,
}

/// Replays the channel recursion over `base` and returns the last input
/// transition's time and delay, or `None` for a constant signal.
fn last_transition_delay(model: &DelayModel, base: &Signal) -> Option<(f64, f64)> {
    let mut prev: Option<(f64, f64)> = None;
    for tr in base.transitions() {
        let gap = match prev {
            None => f64::INFINITY,
            Some((pt, pd)) => tr.time - pt - pd,
        };
        let (d, _) = model.eval_delta_clamped(Edge::of(tr.value), gap);
        prev = Some((tr.time, d));
    }
    prev
}

fn ends_at_zero(base: &Signal) -> bool {
    let final_value = base.initial() ^ (base.times().len() % 2 == 1);
    !final_value
}

/// Where the worst-case perturbing pulse goes: `t_n + (delta_n - delta_min)+`
/// after the last transition, or time 0 for a constant-0 base.
pub fn worst_case_offset(model: &DelayModel, base: &Signal) -> Result<f64, ContinuityError> {
    let delta_min = model.delta_min()?;
    Ok(match last_transition_delay(model, base) {
        Some((t_n, d_n)) => t_n + (d_n - delta_min).max(0.0),
        None => 0.0,
    })
}

/// The constant `d` of the perturbation bound `d * epsilon`:
/// `max(2, delta'(gap))` with the derivative taken at the last transition's
/// input gap (2 alone for constant bases).
pub fn epsilon_bound_constant(model: &DelayModel, base: &Signal) -> Result<f64, ContinuityError> {
    let mut prev: Option<(f64, f64)> = None;
    let mut last_gap = f64::INFINITY;
    for tr in base.transitions() {
        let gap = match prev {
            None => f64::INFINITY,
            Some((pt, pd)) => tr.time - pt - pd,
        };
        last_gap = gap;
        let (d, _) = model.eval_delta_clamped(Edge::of(tr.value), gap);
        prev = Some((tr.time, d));
    }
    if last_gap.is_finite() {
        let h = 1e-6;
        Ok(2.0f64.max(model.derivative(Edge::Falling, last_gap, h)?))
    } else {
        Ok(2.0)
    }
}

/// Adds a pulse of length `epsilon` at `position` (pointwise max), merging
/// adjacent transitions.
pub fn with_pulse_added(
    base: &Signal,
    position: f64,
    epsilon: f64,
) -> Result<Signal, ContinuityError> {
    let pulse = Signal::pulse(position, epsilon)?;
    let (_, max) = base.pointwise_min_max(&pulse);
    Ok(max)
}

fn probe_impl(
    model: &DelayModel,
    base: &Signal,
    epsilons: &[f64],
    horizon: f64,
) -> Result<Vec<ProbePoint>, ContinuityError> {
    if !ends_at_zero(base) {
        return Err(ContinuityError::BaseNotEventuallyZero);
    }
    let init = base.initial();
    let base_out = engine::channel_output(model, init, base, horizon)?;
    let position = worst_case_offset(model, base)?;
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let out_distance = if eps == 0.0 {
            0.0
        } else {
            let perturbed = with_pulse_added(base, position, eps)?;
            let out = engine::channel_output(model, init, &perturbed, horizon)?;
            out.distance(&base_out, horizon)
        };
        points.push(ProbePoint { epsilon: eps, out_distance });
    }
    Ok(points)
}

/// Worst-case single-pulse perturbation probe for involution channels: the
/// output distance must shrink to 0 with the pulse length, bounded by
/// `d * epsilon`.
pub fn continuity_probe(
    model: &DelayModel,
    base: &Signal,
    epsilons: &[f64],
    horizon: f64,
) -> Result<Vec<ProbePoint>, ContinuityError> {
    if !model.is_involution_kind() {
        return Err(ContinuityError::NonInvolutionModel);
    }
    probe_impl(model, base, epsilons, horizon)
}

/// Same protocol for the constant-delay baselines. The inertial baseline is
/// expected to jump when `epsilon` crosses its minimum pulse width.
pub fn baseline_probe(
    model: &DelayModel,
    base: &Signal,
    epsilons: &[f64],
    horizon: f64,
) -> Result<Vec<ProbePoint>, ContinuityError> {
    if !matches!(
        model.kind(),
        DelayKind::BaselinePure { .. } | DelayKind::BaselineInertial { .. }
    ) {
        return Err(ContinuityError::NotBaselineModel);
    }
    probe_impl(model, base, epsilons, horizon)
}

/// One point of a forward-circuit measure sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub mu: f64,
}

/// Feeds a pulse of each length in `grid` into a forward circuit and
/// measures `mu_horizon` of the output. Grid points run in parallel;
/// results keep grid order.
pub fn forward_sweep(
    circuit: &Circuit,
    grid: &[f64],
    horizon: f64,
) -> Result<Vec<SweepPoint>, ContinuityError> {
    if !circuit.is_forward() {
        return Err(ContinuityError::NotForward);
    }
    let ins = circuit.input_ports();
    let outs = circuit.output_ports();
    if ins.len() != 1 || outs.len() != 1 {
        return Err(ContinuityError::NotSingleInputOutput);
    }
    let in_id = circuit.vertex(ins[0]).id.clone();
    let out_id = circuit.vertex(outs[0]).id.clone();
    grid.par_iter()
        .map(|&delta| {
            let input = if delta > 0.0 { Signal::pulse(0.0, delta)? } else { Signal::zero() };
            let mut inputs = std::collections::BTreeMap::new();
            inputs.insert(in_id.clone(), input);
            let exec = engine::execute(circuit, &inputs, horizon)?;
            Ok(SweepPoint { delta, mu: exec.signal(&out_id)?.mu(horizon) })
        })
        .collect()
}

/// Largest adjacent jump of the sweep divided by the grid step.
pub fn max_jump_per_step(points: &[SweepPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| ((w[1].mu - w[0].mu) / (w[1].delta - w[0].delta)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, TruthTable};
    use approx::assert_abs_diff_eq;

    fn exp_model() -> DelayModel {
        DelayModel::exp_params(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn probe_shrinks_to_zero_within_bound() {
        let m = exp_model();
        let base = Signal::pulse(0.0, 2.0).unwrap();
        let eps = [0.1, 0.01, 0.001, 0.0];
        let pts = continuity_probe(&m, &base, &eps, 50.0).unwrap();
        let d = epsilon_bound_constant(&m, &base).unwrap();
        assert_abs_diff_eq!(d, 2.0, epsilon = 1e-9);
        for w in pts.windows(2) {
            assert!(w[1].out_distance <= w[0].out_distance);
        }
        for p in &pts {
            assert!(p.out_distance <= d * p.epsilon + 1e-12, "{p:?}");
        }
        assert_eq!(pts.last().unwrap().out_distance, 0.0);
    }

    #[test]
    fn baselines_rejected_by_involution_probe() {
        let m = DelayModel::inertial(1.0, 0.5).unwrap();
        let base = Signal::zero();
        assert!(matches!(
            continuity_probe(&m, &base, &[0.1], 10.0),
            Err(ContinuityError::NonInvolutionModel)
        ));
        assert!(matches!(
            baseline_probe(&exp_model(), &base, &[0.1], 10.0),
            Err(ContinuityError::NotBaselineModel)
        ));
    }

    #[test]
    fn inertial_baseline_jumps_at_threshold() {
        let m = DelayModel::inertial(1.0, 0.5).unwrap();
        let base = Signal::zero();
        let pts = baseline_probe(&m, &base, &[0.49, 0.51], 20.0).unwrap();
        assert_eq!(pts[0].out_distance, 0.0);
        assert_abs_diff_eq!(pts[1].out_distance, 0.51, epsilon = 1e-12);
    }

    #[test]
    fn pure_baseline_shifts_exactly() {
        let m = DelayModel::pure(1.0).unwrap();
        let base = Signal::zero();
        for eps in [0.3, 0.05] {
            let pts = baseline_probe(&m, &base, &[eps], 20.0).unwrap();
            assert_abs_diff_eq!(pts[0].out_distance, eps, epsilon = 1e-12);
        }
    }

    #[test]
    fn worst_case_placement_beats_alternatives() {
        let m = exp_model();
        let base = Signal::pulse(0.0, 2.0).unwrap();
        let opt = worst_case_offset(&m, &base).unwrap();
        let eps = 0.05;
        let horizon = 60.0;
        let mu_at = |pos: f64| {
            let s = with_pulse_added(&base, pos, eps).unwrap();
            engine::channel_output(&m, false, &s, horizon).unwrap().mu(horizon)
        };
        let best = mu_at(opt);
        let t_n = base.last_transition_time().unwrap();
        for pos in [t_n, t_n + 0.1, opt - 0.2, opt + 0.3, opt + 1.0, opt + 4.0] {
            if pos >= t_n {
                assert!(mu_at(pos) <= best + 1e-12, "placement {pos} beats optimum {opt}");
            }
        }
    }

    fn chain(last_stage: DelayModel) -> Circuit {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", DelayModel::exp_params(0.8, 0.6, 0.5).unwrap(), false, "g1");
        b.gate("g2", TruthTable::buffer(), &["c1"]);
        b.channel("c2", DelayModel::exp_params(1.25, 0.8, 0.5).unwrap(), false, "g2");
        b.gate("g3", TruthTable::buffer(), &["c2"]);
        b.channel("c3", last_stage, false, "g3");
        b.gate("g4", TruthTable::buffer(), &["c3"]);
        b.output("o", "g4");
        b.build().unwrap()
    }

    #[test]
    fn forward_sweep_is_smooth_for_involution_chain() {
        let c = chain(DelayModel::exp_params(1.0, 1.0, 0.5).unwrap());
        let grid: Vec<f64> = (0..600).map(|i| 0.01 + 3.0 * i as f64 / 599.0).collect();
        let step = grid[1] - grid[0];
        let pts = forward_sweep(&c, &grid, 25.0).unwrap();
        assert_eq!(pts.len(), grid.len());
        // Measure 0 right at the small end.
        assert_eq!(pts[0].mu, 0.0);
        // No adjacent jump anywhere near the inertial-style O(1) scale.
        let max_jump = pts.windows(2).map(|w| (w[1].mu - w[0].mu).abs()).fold(0.0, f64::max);
        assert!(max_jump < 20.0 * step, "max jump {max_jump} vs step {step}");
    }

    #[test]
    fn forward_sweep_detects_inertial_discontinuity() {
        // Inertial stage last, so its cliff is visible at the output.
        let c = chain(DelayModel::inertial(1.0, 0.5).unwrap());
        let grid: Vec<f64> = (0..400).map(|i| 0.3 + 2.0 * i as f64 / 399.0).collect();
        let step = grid[1] - grid[0];
        let pts = forward_sweep(&c, &grid, 25.0).unwrap();
        let max_jump = pts.windows(2).map(|w| (w[1].mu - w[0].mu).abs()).fold(0.0, f64::max);
        // An O(min_pulse) cliff appears where the upstream output crosses
        // the inertial threshold.
        assert!(max_jump >= 0.4 * 0.5, "max jump {max_jump} too small vs step {step}");
    }

    #[test]
    fn forward_sweep_rejects_feedback() {
        let c = crate::spf::build_storage_loop(&exp_model()).unwrap();
        assert!(matches!(forward_sweep(&c, &[0.5], 10.0), Err(ContinuityError::NotForward)));
    }
}
