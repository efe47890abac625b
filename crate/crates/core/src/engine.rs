//! Deterministic construction of circuit executions.
//!
//! The algorithm repeatedly picks the smallest time `t` carrying a non-fixed
//! transition, marks everything at `t` fixed, re-evaluates gates whose
//! inputs just changed, and feeds newly fixed transitions into successor
//! channels. Channel outputs are generated by the single-history recursion
//!
//! ```text
//!   delta_n = delta_edge(t_n - t_{n-1} - delta_{n-1}),   t_0 = -inf, delta_0 = 0
//! ```
//!
//! with pending output transitions at `t_n + delta_n`. A pending pair is
//! canceled when its output times would be out of order (closed inequality:
//! equal times cancel). Fixed transitions are never removed.
//!
//! Each transition carries a causal depth: input-port and initial
//! transitions have depth 0, implicit reset transitions at time 0 have depth
//! 1, a channel adds one hop, and a gate transition takes the maximum depth
//! over everything fixed at or before it on the gate's inputs. When a gate
//! or channel consumes an input-port transition directly, the port
//! transition counts as one hop (depth 1), so that transitions produced by
//! non-port vertices always have depth >= 1; the unrolling bound `z` counts
//! hops the same way.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::channel::{DelayModel, Edge};
use crate::circuit::{Circuit, StructuralError, VertexKind};
use crate::signal::Signal;

/// Causal depth assigned to the implicit reset transitions added at time 0.
pub const RESET_DEPTH: u32 = 1;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("circuit does not validate: {0:?}")]
    InvalidCircuit(Vec<StructuralError>),
    #[error("channel `{channel}` is not strictly causal")]
    NonCausalChannel { channel: String },
    #[error("no input signal provided for port `{port}`")]
    MissingInput { port: String },
    #[error("input signal provided for `{name}`, which is not an input port")]
    UnknownInput { name: String },
    #[error("no vertex named `{0}` in the execution")]
    UnknownVertex(String),
    #[error("transition index {index} out of range for `{vertex}`")]
    IndexOutOfRange { vertex: String, index: usize },
}

/// A fixed transition together with its causal depth.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    value: bool,
    depth: u32,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    delay: f64,
    out_time: f64,
    value: bool,
    depth: u32,
}

/// Incremental single-history channel simulation; shared between the
/// standalone `channel_output` and the circuit engine.
#[derive(Debug)]
struct ChannelSim {
    model: DelayModel,
    delta_min: f64,
    /// Time and delay of the previous input transition, if any.
    prev_in: Option<(f64, f64)>,
    reset_injected: bool,
    pending: VecDeque<Pending>,
    fixed: Vec<Event>,
    /// Value after the last fixed transition.
    current: bool,
    last_fixed_out: Option<f64>,
    clamped: usize,
}

impl ChannelSim {
    fn new(model: DelayModel, init: bool, driver_initial: bool) -> Result<Self, EngineError> {
        let delta_min = model
            .delta_min()
            .map_err(|_| EngineError::NonCausalChannel { channel: String::new() })?;
        let mut sim = ChannelSim {
            model,
            delta_min,
            prev_in: None,
            reset_injected: false,
            pending: VecDeque::new(),
            fixed: Vec::new(),
            current: init,
            last_fixed_out: None,
            clamped: 0,
        };
        if driver_initial != init {
            // Implicit reset: behave as if the input carried a transition to
            // its own initial value at time 0.
            sim.feed(0.0, driver_initial, RESET_DEPTH);
            sim.reset_injected = true;
        }
        Ok(sim)
    }

    fn cancels(&self, earlier_out: f64, new_out: f64) -> bool {
        match self.model.min_pulse() {
            // Inertial rule: output pulses shorter than min_pulse vanish.
            Some(p) => new_out - earlier_out < p,
            // Involution / pure rule: out-of-order output times cancel,
            // equality included.
            None => earlier_out >= new_out,
        }
    }

    /// Processes the input transition `(t, value)` whose generating
    /// transition has (lifted) causal depth `cause_depth`.
    fn feed(&mut self, t: f64, value: bool, cause_depth: u32) {
        if self.reset_injected && t == 0.0 {
            // A real input transition at time 0 supersedes the reset.
            debug_assert_eq!(self.pending.len(), 1);
            self.pending.clear();
            self.prev_in = None;
            self.reset_injected = false;
        }
        let gap = match self.prev_in {
            None => f64::INFINITY,
            Some((pt, pd)) => t - pt - pd,
        };
        let (delay, clamped) = self.model.eval_delta_clamped(Edge::of(value), gap);
        if clamped {
            self.clamped += 1;
        }
        self.prev_in = Some((t, delay));
        let out_time = t + delay;
        if let Some(last) = self.pending.back() {
            if self.cancels(last.out_time, out_time) {
                self.pending.pop_back();
                return;
            }
            debug_assert!(last.out_time < out_time);
        } else if let Some(lf) = self.last_fixed_out {
            assert!(
                out_time > lf,
                "pending output at {out_time} not after last fixed output {lf}"
            );
        }
        self.pending.push_back(Pending { delay, out_time, value, depth: cause_depth + 1 });
    }

    fn next_out_time(&self) -> Option<f64> {
        self.pending.front().map(|p| p.out_time)
    }

    /// Fixes the front pending transition (which must be at `t`). Returns
    /// the fixed event unless it was a value-preserving no-op.
    fn fix_front(&mut self, t: f64) -> Option<Event> {
        let p = self.pending.pop_front().expect("front pending exists");
        debug_assert_eq!(p.out_time, t);
        let tol = 1e-9 * self.delta_min.max(1.0);
        assert!(
            p.delay >= self.delta_min - tol,
            "surviving output transition has delay {} below delta_min {}",
            p.delay,
            self.delta_min
        );
        self.last_fixed_out = Some(t);
        self.emit(p.out_time, p.value, p.depth)
    }

    fn emit(&mut self, time: f64, value: bool, depth: u32) -> Option<Event> {
        if value == self.current {
            // Transition to the already-held value (only possible when an
            // input transition at time 0 replaced the reset): drop it.
            return None;
        }
        self.current = value;
        let ev = Event { time, value, depth };
        self.fixed.push(ev);
        Some(ev)
    }

    /// Drains all remaining pendings into fixed events (standalone use).
    fn flush(&mut self) {
        while let Some(p) = self.pending.pop_front() {
            self.emit(p.out_time, p.value, p.depth);
        }
    }
}

fn events_to_signal(initial: bool, events: &[Event], horizon: f64) -> (Signal, Vec<u32>) {
    let mut times = Vec::new();
    let mut depths = Vec::new();
    let mut value = initial;
    for ev in events {
        if ev.time > horizon {
            break;
        }
        assert_ne!(ev.value, value, "fixed transitions must alternate");
        value = ev.value;
        times.push(ev.time);
        depths.push(ev.depth);
    }
    let signal = Signal::from_times(initial, times).expect("engine produces well-formed signals");
    (signal, depths)
}

/// Applies a single channel to `input`, returning the output signal
/// truncated at `horizon`.
///
/// The output has initial value `init` and contains the non-canceled pending
/// transitions of the recursion; the implicit reset applies when the input's
/// initial value differs from `init`.
pub fn channel_output(
    model: &DelayModel,
    init: bool,
    input: &Signal,
    horizon: f64,
) -> Result<Signal, EngineError> {
    Ok(channel_output_with_depths(model, init, input, horizon)?.0)
}

pub(crate) fn channel_output_with_depths(
    model: &DelayModel,
    init: bool,
    input: &Signal,
    horizon: f64,
) -> Result<(Signal, Vec<u32>), EngineError> {
    let mut sim = ChannelSim::new(model.clone(), init, input.initial())?;
    for tr in input.transitions() {
        // Standalone inputs count as port transitions: one hop to consume.
        sim.feed(tr.time, tr.value, 1);
    }
    sim.flush();
    Ok(events_to_signal(init, &sim.fixed, horizon))
}

/// A constructed execution: one signal per vertex plus per-transition causal
/// depths, truncated at `horizon`.
#[derive(Debug, Clone)]
pub struct Execution {
    ids: Vec<String>,
    signals: Vec<Signal>,
    depths: Vec<Vec<u32>>,
    pub horizon: f64,
    /// True when the algorithm ran out of non-fixed transitions before the
    /// horizon; metastable runs report `false`.
    pub terminated: bool,
    /// Number of delay evaluations that had to be clamped to the domain
    /// boundary (0 in a valid run).
    pub clamped_evals: usize,
}

impl Execution {
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn idx(&self, id: &str) -> Result<usize, EngineError> {
        self.ids
            .binary_search_by(|x| x.as_str().cmp(id))
            .map_err(|_| EngineError::UnknownVertex(id.to_string()))
    }

    pub fn signal(&self, id: &str) -> Result<&Signal, EngineError> {
        Ok(&self.signals[self.idx(id)?])
    }

    pub fn depths(&self, id: &str) -> Result<&[u32], EngineError> {
        Ok(&self.depths[self.idx(id)?])
    }

    /// Causal depth of the `index`-th transition of vertex `id`.
    pub fn causal_depth_of(&self, id: &str, index: usize) -> Result<u32, EngineError> {
        let i = self.idx(id)?;
        self.depths[i].get(index).copied().ok_or(EngineError::IndexOutOfRange {
            vertex: id.to_string(),
            index,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Signal, &[u32])> {
        self.ids
            .iter()
            .zip(&self.signals)
            .zip(&self.depths)
            .map(|((id, s), d)| (id.as_str(), s, d.as_slice()))
    }
}

/// Runs the construction algorithm on `circuit` with the given input-port
/// signals. Deterministic: identical inputs give identical outputs.
pub fn execute(
    circuit: &Circuit,
    inputs: &BTreeMap<String, Signal>,
    horizon: f64,
) -> Result<Execution, EngineError> {
    let errors = circuit.validate();
    if !errors.is_empty() {
        return Err(EngineError::InvalidCircuit(errors));
    }
    let n = circuit.len();
    for name in inputs.keys() {
        match circuit.index_of(name) {
            Some(i) if matches!(circuit.vertex(i).kind, VertexKind::InputPort) => {}
            _ => return Err(EngineError::UnknownInput { name: name.clone() }),
        }
    }

    // Initial values: ports and channels first, then gates (gate inputs are
    // never gates, so one pass suffices), then output ports.
    let mut initial = vec![false; n];
    let mut port_signals: Vec<Option<&Signal>> = vec![None; n];
    for i in 0..n {
        match &circuit.vertex(i).kind {
            VertexKind::InputPort => {
                let s = inputs.get(&circuit.vertex(i).id).ok_or_else(|| {
                    EngineError::MissingInput { port: circuit.vertex(i).id.clone() }
                })?;
                port_signals[i] = Some(s);
                initial[i] = s.initial();
            }
            VertexKind::Channel { init, .. } => initial[i] = *init,
            _ => {}
        }
    }
    for i in 0..n {
        if let VertexKind::Gate(table) = &circuit.vertex(i).kind {
            let args: Vec<bool> = circuit.vertex(i).inputs.iter().map(|&p| initial[p]).collect();
            initial[i] = table.eval(&args);
        }
    }
    for i in 0..n {
        if let VertexKind::OutputPort = circuit.vertex(i).kind {
            initial[i] = initial[circuit.vertex(i).inputs[0]];
        }
    }

    // Channel simulators, with implicit resets relative to driver initials.
    let mut sims: Vec<Option<ChannelSim>> = Vec::with_capacity(n);
    for i in 0..n {
        match &circuit.vertex(i).kind {
            VertexKind::Channel { model, init } => {
                if !model.is_strictly_causal() {
                    return Err(EngineError::NonCausalChannel {
                        channel: circuit.vertex(i).id.clone(),
                    });
                }
                let driver = circuit.vertex(i).inputs[0];
                let sim = ChannelSim::new(model.clone(), *init, initial[driver])
                    .map_err(|_| EngineError::NonCausalChannel {
                        channel: circuit.vertex(i).id.clone(),
                    })?;
                sims.push(Some(sim));
            }
            _ => sims.push(None),
        }
    }

    let mut cursor = vec![0usize; n];
    let mut current = initial.clone();
    let mut events: Vec<Vec<Event>> = vec![Vec::new(); n];
    // Lifted running max depth per vertex: max over fixed transitions so
    // far, with port transitions counting as depth 1 to consumers.
    let mut runmax = vec![0u32; n];

    let gates: Vec<usize> =
        (0..n).filter(|&i| matches!(circuit.vertex(i).kind, VertexKind::Gate(_))).collect();

    let mut prev_t = f64::NEG_INFINITY;
    let mut terminated = false;
    loop {
        let mut t = f64::INFINITY;
        for i in 0..n {
            if let Some(s) = port_signals[i] {
                if let Some(&pt) = s.times().get(cursor[i]) {
                    t = t.min(pt);
                }
            }
            if let Some(sim) = &sims[i] {
                if let Some(ot) = sim.next_out_time() {
                    t = t.min(ot);
                }
            }
        }
        if t == f64::INFINITY {
            terminated = true;
            break;
        }
        if t > horizon {
            break;
        }
        assert!(t > prev_t, "iteration times must strictly increase: {t} after {prev_t}");
        prev_t = t;

        // Step (i): fix everything at time t. `feeds` collects what must be
        // pushed into successor channels in step (iii).
        let mut changed = vec![false; n];
        let mut feeds: Vec<(usize, bool, u32)> = Vec::new();
        for i in 0..n {
            if let Some(s) = port_signals[i] {
                if s.times().get(cursor[i]) == Some(&t) {
                    let value = s.value_of(cursor[i]);
                    cursor[i] += 1;
                    events[i].push(Event { time: t, value, depth: 0 });
                    current[i] = value;
                    runmax[i] = runmax[i].max(1);
                    changed[i] = true;
                    feeds.push((i, value, 1));
                }
            }
            if sims[i].as_ref().is_some_and(|s| s.next_out_time() == Some(t)) {
                let sim = sims[i].as_mut().unwrap();
                if let Some(ev) = sim.fix_front(t) {
                    events[i].push(ev);
                    current[i] = ev.value;
                    runmax[i] = runmax[i].max(ev.depth);
                    changed[i] = true;
                }
            }
        }

        // Step (ii): re-evaluate gates whose inputs changed at t.
        for &g in &gates {
            if !circuit.vertex(g).inputs.iter().any(|&p| changed[p]) {
                continue;
            }
            let VertexKind::Gate(table) = &circuit.vertex(g).kind else { unreachable!() };
            let args: Vec<bool> = circuit.vertex(g).inputs.iter().map(|&p| current[p]).collect();
            let value = table.eval(&args);
            if value != current[g] {
                let depth =
                    circuit.vertex(g).inputs.iter().map(|&p| runmax[p]).max().unwrap_or(0);
                current[g] = value;
                events[g].push(Event { time: t, value, depth });
                runmax[g] = runmax[g].max(depth);
                feeds.push((g, value, depth));
            }
        }

        // Step (iii): feed newly fixed port/gate transitions into successor
        // channels.
        for (v, value, depth) in feeds {
            for &s in circuit.successors(v) {
                if let Some(sim) = sims[s].as_mut() {
                    sim.feed(t, value, depth);
                }
            }
        }
    }

    let mut signals = Vec::with_capacity(n);
    let mut depths = Vec::with_capacity(n);
    let mut clamped = 0;
    for i in 0..n {
        if let Some(sim) = &sims[i] {
            clamped += sim.clamped;
        }
        let (s, d) = events_to_signal(initial[i], &events[i], horizon);
        signals.push(s);
        depths.push(d);
    }
    // Output ports mirror their driving gate.
    for i in 0..n {
        if let VertexKind::OutputPort = circuit.vertex(i).kind {
            let drv = circuit.vertex(i).inputs[0];
            signals[i] = signals[drv].clone();
            depths[i] = depths[drv].clone();
        }
    }

    Ok(Execution {
        ids: circuit.vertices().iter().map(|v| v.id.clone()).collect(),
        signals,
        depths,
        horizon,
        terminated,
        clamped_evals: clamped,
    })
}

/// A violation of the execution conditions found by `verify_execution`.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Gate output does not equal its Boolean function at `time`.
    GateEquation { gate: String, time: f64 },
    /// Channel signal differs from the channel function of its input.
    ChannelFunction { channel: String },
    /// Output port does not mirror its driving gate.
    OutputMirror { port: String },
    /// A vertex initial value is inconsistent.
    InitialValue { vertex: String },
}

/// Checks an execution against the circuit: gate equations hold at all
/// transition times (half-open convention), every channel signal equals the
/// channel function applied to its input signal, and output ports mirror
/// their gates.
pub fn verify_execution(circuit: &Circuit, execution: &Execution) -> Vec<Violation> {
    let mut violations = Vec::new();
    let horizon = execution.horizon;
    let sig = |i: usize| execution.signal(&circuit.vertex(i).id).expect("vertex signal");
    for i in 0..circuit.len() {
        let v = circuit.vertex(i);
        match &v.kind {
            VertexKind::Gate(table) => {
                let args: Vec<bool> = v.inputs.iter().map(|&p| sig(p).initial()).collect();
                if table.eval(&args) != sig(i).initial() {
                    violations.push(Violation::InitialValue { vertex: v.id.clone() });
                }
                let mut times: Vec<f64> = sig(i).times().to_vec();
                for &p in &v.inputs {
                    times.extend_from_slice(sig(p).times());
                }
                times.retain(|&t| t <= horizon);
                times.sort_by(f64::total_cmp);
                times.dedup();
                for &t in &times {
                    let args: Vec<bool> = v.inputs.iter().map(|&p| sig(p).value_at(t)).collect();
                    if table.eval(&args) != sig(i).value_at(t) {
                        violations.push(Violation::GateEquation { gate: v.id.clone(), time: t });
                    }
                }
            }
            VertexKind::Channel { model, init } => {
                let input = sig(v.inputs[0]);
                match channel_output(model, *init, input, horizon) {
                    Ok(expected) => {
                        if &expected != sig(i) {
                            violations.push(Violation::ChannelFunction { channel: v.id.clone() });
                        }
                    }
                    Err(_) => violations.push(Violation::ChannelFunction { channel: v.id.clone() }),
                }
            }
            VertexKind::OutputPort => {
                if sig(i) != sig(v.inputs[0]) {
                    violations.push(Violation::OutputMirror { port: v.id.clone() });
                }
            }
            VertexKind::InputPort => {}
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, TruthTable};
    use approx::assert_abs_diff_eq;

    fn exp_model() -> DelayModel {
        DelayModel::exp_params(1.0, 1.0, 0.5).unwrap()
    }

    const DINF: f64 = 1.0 + std::f64::consts::LN_2;

    #[test]
    fn short_pulse_cancels() {
        // 0.5 <= dinf - dmin = ln 2, so the pending pair cancels.
        let out = channel_output(&exp_model(), false, &Signal::pulse(0.0, 0.5).unwrap(), 20.0)
            .unwrap();
        assert_eq!(out, Signal::zero());
    }

    #[test]
    fn long_pulse_passes_with_closed_form_times() {
        let out = channel_output(&exp_model(), false, &Signal::pulse(0.0, 2.0).unwrap(), 20.0)
            .unwrap();
        // Rise at dinf; fall at 2 + delta(2 - dinf), both from the closed
        // form evaluated independently.
        let expected_rise = DINF;
        let expected_fall = 2.0 + ((1.0 - (-(2.0 - DINF + DINF)).exp()).ln() + DINF);
        assert_eq!(out.times().len(), 2);
        assert_abs_diff_eq!(out.times()[0], expected_rise, epsilon = 1e-12);
        assert_abs_diff_eq!(out.times()[1], expected_fall, epsilon = 1e-12);
        assert_abs_diff_eq!(out.times()[1], 3.5477337226910875, epsilon = 1e-9);
    }

    #[test]
    fn cancellation_boundary_bracket() {
        // Pulses below dinf - dmin cancel, above pass. The razor edge
        // itself sits within a float ulp and is not asserted.
        let m = exp_model();
        let boundary = DINF - 1.0;
        let shorter =
            channel_output(&m, false, &Signal::pulse(0.0, boundary - 1e-12).unwrap(), 20.0)
                .unwrap();
        assert_eq!(shorter, Signal::zero());
        let longer =
            channel_output(&m, false, &Signal::pulse(0.0, boundary + 1e-12).unwrap(), 20.0)
                .unwrap();
        assert_eq!(longer.times().len(), 2);
    }

    #[test]
    fn reset_emits_delayed_transition() {
        // init 1, constant-0 input: falling output at dinf_down.
        let out = channel_output(&exp_model(), true, &Signal::zero(), 20.0).unwrap();
        assert!(out.initial());
        assert_eq!(out.times().len(), 1);
        assert_abs_diff_eq!(out.times()[0], DINF, epsilon = 1e-12);
    }

    #[test]
    fn input_transition_at_zero_supersedes_reset() {
        // init 1, input rises at 0: the would-be reset is replaced by the
        // real transition, whose output is a no-op (value already 1).
        let input = Signal::from_times(false, vec![0.0]).unwrap();
        let out = channel_output(&exp_model(), true, &input, 20.0).unwrap();
        assert_eq!(out, Signal::one());
    }

    #[test]
    fn pure_baseline_shifts() {
        let m = DelayModel::pure(1.0).unwrap();
        let out = channel_output(&m, false, &Signal::pulse(0.5, 0.2).unwrap(), 20.0).unwrap();
        assert_eq!(out, Signal::from_times(false, vec![1.5, 1.7]).unwrap());
    }

    #[test]
    fn inertial_baseline_filters_short_pulses() {
        let m = DelayModel::inertial(1.0, 0.5).unwrap();
        let short = channel_output(&m, false, &Signal::pulse(0.0, 0.49).unwrap(), 20.0).unwrap();
        assert_eq!(short, Signal::zero());
        let long = channel_output(&m, false, &Signal::pulse(0.0, 0.51).unwrap(), 20.0).unwrap();
        assert_eq!(long, Signal::from_times(false, vec![1.0, 1.51]).unwrap());
        // Exactly min_pulse survives (strict inequality).
        let edge = channel_output(&m, false, &Signal::pulse(0.0, 0.5).unwrap(), 20.0).unwrap();
        assert_eq!(edge.times().len(), 2);
    }

    fn buffer_chain() -> Circuit {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", exp_model(), false, "g1");
        b.gate("g2", TruthTable::buffer(), &["c1"]);
        b.channel("c2", exp_model(), false, "g2");
        b.gate("g3", TruthTable::buffer(), &["c2"]);
        b.output("o", "g3");
        b.build().unwrap()
    }

    fn run(c: &Circuit, input: Signal, horizon: f64) -> Execution {
        let mut m = BTreeMap::new();
        m.insert("i".to_string(), input);
        execute(c, &m, horizon).unwrap()
    }

    #[test]
    fn quiescent_chain_terminates() {
        let c = buffer_chain();
        let e = run(&c, Signal::zero(), 50.0);
        assert!(e.terminated);
        for (_, s, _) in e.iter() {
            assert_eq!(*s, Signal::zero());
        }
        assert!(verify_execution(&c, &e).is_empty());
    }

    #[test]
    fn chain_propagates_pulse_with_depths() {
        let c = buffer_chain();
        let e = run(&c, Signal::pulse(1.0, 3.0).unwrap(), 50.0);
        assert!(e.terminated);
        assert!(verify_execution(&c, &e).is_empty());
        // Port transition depth 0; first gate reacts at depth 1; each
        // channel adds one hop; g2 inherits the channel depth.
        assert_eq!(e.causal_depth_of("i", 0).unwrap(), 0);
        assert_eq!(e.causal_depth_of("g1", 0).unwrap(), 1);
        assert_eq!(e.causal_depth_of("c1", 0).unwrap(), 2);
        assert_eq!(e.causal_depth_of("g2", 0).unwrap(), 2);
        assert_eq!(e.causal_depth_of("c2", 0).unwrap(), 3);
        assert_eq!(e.causal_depth_of("g3", 0).unwrap(), 3);
        // Depths along each signal are nondecreasing.
        for (_, _, d) in e.iter() {
            assert!(d.windows(2).all(|w| w[0] <= w[1]));
        }
        // Rise arrives at the output after two idle-channel delays.
        let o = e.signal("o").unwrap();
        assert_abs_diff_eq!(o.times()[0], 1.0 + 2.0 * DINF, epsilon = 1e-9);
    }

    #[test]
    fn reset_output_depth_is_two() {
        // Channel init 1 fed by a constant-0 gate: the reset transition at
        // time 0 (depth 1) produces the falling output one hop later.
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::parse("00").unwrap(), &["i"]); // constant 0
        b.channel("c1", exp_model(), true, "g1");
        b.gate("g2", TruthTable::buffer(), &["c1"]);
        b.output("o", "g2");
        let c = b.build().unwrap();
        let e = run(&c, Signal::zero(), 20.0);
        let c1 = e.signal("c1").unwrap();
        assert!(c1.initial());
        assert_eq!(c1.times().len(), 1);
        assert_abs_diff_eq!(c1.times()[0], DINF, epsilon = 1e-12);
        assert_eq!(e.causal_depth_of("c1", 0).unwrap(), RESET_DEPTH + 1);
        assert!(verify_execution(&c, &e).is_empty());
    }

    #[test]
    fn execute_is_deterministic() {
        let c = buffer_chain();
        let input = Signal::from_times(false, vec![0.25, 0.5, 2.0, 2.2]).unwrap();
        let a = run(&c, input.clone(), 30.0);
        let b = run(&c, input, 30.0);
        for ((_, sa, da), (_, sb, db)) in a.iter().zip(b.iter()) {
            assert_eq!(sa, sb);
            assert_eq!(da, db);
        }
    }

    #[test]
    fn verify_detects_perturbations() {
        let c = buffer_chain();
        let e = run(&c, Signal::pulse(1.0, 3.0).unwrap(), 50.0);
        // Perturb one channel transition time.
        let mut bad = e.clone();
        let i = bad.ids.iter().position(|s| s == "c1").unwrap();
        let mut times = bad.signals[i].times().to_vec();
        times[0] += 1e-3;
        bad.signals[i] = Signal::from_times(bad.signals[i].initial(), times).unwrap();
        let v = verify_execution(&c, &bad);
        assert!(v.iter().any(|x| matches!(x, Violation::ChannelFunction { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::GateEquation { .. })));
    }

    #[test]
    fn non_causal_channel_rejected() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", DelayModel::exp_params(1.0, 0.0, 0.5).unwrap(), false, "g1");
        b.gate("g2", TruthTable::buffer(), &["c1"]);
        b.output("o", "g2");
        let c = b.build().unwrap();
        let mut m = BTreeMap::new();
        m.insert("i".to_string(), Signal::zero());
        assert!(matches!(
            execute(&c, &m, 10.0),
            Err(EngineError::NonCausalChannel { .. })
        ));
    }

    #[test]
    fn horizon_truncates_but_cancellation_still_applies() {
        // A pulse whose falling output lands beyond the horizon but cancels
        // the rising one: the truncated signal must reflect the
        // cancellation, not keep the rise.
        let m = exp_model();
        // Pulse short enough to cancel; horizon cuts right after the
        // would-be rise time.
        let out = channel_output(&m, false, &Signal::pulse(0.0, 0.6).unwrap(), 1.75).unwrap();
        assert_eq!(out, Signal::zero());
    }
}
