//! Bounded-depth unrolling of feedback circuits.
//!
//! `unroll(c, v, k)` builds the acyclic circuit that reproduces the fan-in
//! cone of gate `v` up to recursion depth `k`: at depth 0 every channel
//! feeding a gate is cut and re-fed from a constant gate carrying the
//! channel's initial value; at depth `k > 0` each feeding channel is kept
//! and driven by the unrolling of its own driver at depth `k - 1`. Input
//! ports are shared rather than duplicated (observationally equivalent,
//! since input signals are unconstrained).
//!
//! Every unrolled vertex gets a bound `z`: cut constants have `z = 0`,
//! input ports and copies of source gates `z = infinity`, a channel has
//! `1 + z` of its driver, and a gate the minimum over its drivers. The
//! engine's causal depths and `z` count channel hops the same way: a copy
//! reproduces its original faithfully until an original transition beyond
//! the `z` budget of some copy in its fan-in cone has had time to
//! propagate over (at least `delta_min` per channel hop). The differential
//! checker `check_simulation` verifies exact agreement within these
//! windows. Note the budget bound alone does not filter reproducible
//! transitions pointwise: a silenced cut subtree can spawn extra activity
//! through non-monotone gates, and that activity may cancel pending
//! transitions whose own causal depth is still within budget.

use std::collections::BTreeMap;

use serde::ser::Serializer;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, StructuralError, TruthTable, Vertex, VertexKind};
use crate::engine::{self, EngineError, Execution};
use crate::signal::Signal;

#[derive(Debug, Error)]
pub enum UnrollError {
    #[error("circuit does not validate: {0:?}")]
    InvalidCircuit(Vec<StructuralError>),
    #[error("`{0}` is not a gate; unrolling roots at a gate or input")]
    RootNotGate(String),
    #[error("circuit has no unique output port to root the unrolling at")]
    NoOutputRoot,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Causal-depth bound of an unrolled vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ZValue {
    Finite(u64),
    Infinite,
}

impl ZValue {
    fn plus_one(self) -> ZValue {
        match self {
            ZValue::Finite(n) => ZValue::Finite(n + 1),
            ZValue::Infinite => ZValue::Infinite,
        }
    }

    pub fn admits(&self, depth: u32) -> bool {
        match self {
            ZValue::Finite(n) => u64::from(depth) <= *n,
            ZValue::Infinite => true,
        }
    }
}

impl Serialize for ZValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ZValue::Finite(n) => s.serialize_u64(*n),
            ZValue::Infinite => s.serialize_str("inf"),
        }
    }
}

impl std::fmt::Display for ZValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZValue::Finite(n) => write!(f, "{n}"),
            ZValue::Infinite => write!(f, "inf"),
        }
    }
}

/// An unrolled circuit with its vertex correspondence and z-map.
#[derive(Debug, Clone)]
pub struct UnrolledCircuit {
    pub circuit: Circuit,
    /// Unrolled vertex id -> original vertex id. Cut constants have no
    /// correspondent and are absent.
    pub correspondence: BTreeMap<String, String>,
    pub z: BTreeMap<String, ZValue>,
    pub depth: usize,
}

struct Builder<'a> {
    original: &'a Circuit,
    counter: usize,
    vertices: Vec<Vertex>,
    pending: Vec<(String, Vec<String>)>,
    correspondence: BTreeMap<String, String>,
    shared_inputs: BTreeMap<usize, String>,
    /// Which unrolled ids are cut constants (z = 0).
    cut_constants: Vec<String>,
}

impl<'a> Builder<'a> {
    fn fresh(&mut self, orig: &str) -> String {
        self.counter += 1;
        format!("{orig}@{}", self.counter)
    }

    fn shared_input(&mut self, idx: usize) -> String {
        if let Some(id) = self.shared_inputs.get(&idx) {
            return id.clone();
        }
        let id = self.original.vertex(idx).id.clone();
        self.vertices.push(Vertex { id: id.clone(), kind: VertexKind::InputPort, inputs: vec![] });
        self.correspondence.insert(id.clone(), id.clone());
        self.shared_inputs.insert(idx, id.clone());
        id
    }

    fn cut_constant(&mut self, value: bool) -> String {
        let id = self.fresh(if value { "const1" } else { "const0" });
        self.vertices.push(Vertex {
            id: id.clone(),
            kind: VertexKind::Gate(TruthTable::constant(value)),
            inputs: vec![],
        });
        self.cut_constants.push(id.clone());
        id
    }

    /// Builds the k-unrolling rooted at `v` (a gate or input port) and
    /// returns the unrolled id of the root.
    fn build(&mut self, v: usize, k: usize) -> String {
        let vertex = self.original.vertex(v).clone();
        match &vertex.kind {
            VertexKind::InputPort => self.shared_input(v),
            VertexKind::Gate(table) => {
                let my_id = self.fresh(&vertex.id);
                self.correspondence.insert(my_id.clone(), vertex.id.clone());
                let mut feed_ids = Vec::with_capacity(vertex.inputs.len());
                for &pred in &vertex.inputs {
                    match self.original.vertex(pred).kind.clone() {
                        VertexKind::InputPort => feed_ids.push(self.shared_input(pred)),
                        VertexKind::Channel { model, init } => {
                            let ch_orig = self.original.vertex(pred).id.clone();
                            let ch_driver = self.original.vertex(pred).inputs[0];
                            let ch_id = self.fresh(&ch_orig);
                            self.correspondence.insert(ch_id.clone(), ch_orig);
                            let feed = if k == 0 {
                                self.cut_constant(init)
                            } else {
                                self.build(ch_driver, k - 1)
                            };
                            self.vertices.push(Vertex {
                                id: ch_id.clone(),
                                kind: VertexKind::Channel { model, init },
                                inputs: vec![],
                            });
                            self.pending.push((ch_id.clone(), vec![feed]));
                            feed_ids.push(ch_id);
                        }
                        // Gate-to-gate edges are excluded by alternation.
                        _ => unreachable!("gate fed by non-channel non-port"),
                    }
                }
                self.vertices.push(Vertex {
                    id: my_id.clone(),
                    kind: VertexKind::Gate(table.clone()),
                    inputs: vec![],
                });
                self.pending.push((my_id.clone(), feed_ids));
                my_id
            }
            _ => unreachable!("unrolling roots at gates or inputs"),
        }
    }
}

/// Unrolls `circuit` to depth `k` rooted at gate `root` and attaches a
/// fresh output port to the root copy.
pub fn unroll(circuit: &Circuit, root: &str, k: usize) -> Result<UnrolledCircuit, UnrollError> {
    let errors = circuit.validate();
    if !errors.is_empty() {
        return Err(UnrollError::InvalidCircuit(errors));
    }
    let root_idx = circuit
        .index_of(root)
        .filter(|&i| matches!(circuit.vertex(i).kind, VertexKind::Gate(_)))
        .ok_or_else(|| UnrollError::RootNotGate(root.to_string()))?;

    let mut b = Builder {
        original: circuit,
        counter: 0,
        vertices: Vec::new(),
        pending: Vec::new(),
        correspondence: BTreeMap::new(),
        shared_inputs: BTreeMap::new(),
        cut_constants: Vec::new(),
    };
    let root_copy = b.build(root_idx, k);

    // Attach an output port corresponding to the original one when the
    // rooted gate drives it.
    let out_corr = circuit
        .output_ports()
        .into_iter()
        .find(|&o| circuit.vertex(o).inputs == vec![root_idx])
        .map(|o| circuit.vertex(o).id.clone());
    let out_id = b.fresh(out_corr.as_deref().unwrap_or("out"));
    if let Some(orig) = out_corr {
        b.correspondence.insert(out_id.clone(), orig);
    }
    b.vertices.push(Vertex { id: out_id.clone(), kind: VertexKind::OutputPort, inputs: vec![] });
    b.pending.push((out_id, vec![root_copy]));

    let cut_constants = std::mem::take(&mut b.cut_constants);
    let correspondence = std::mem::take(&mut b.correspondence);
    let unrolled =
        Circuit::from_parts(b.vertices, b.pending).map_err(UnrollError::InvalidCircuit)?;
    let z = compute_z(&unrolled, &cut_constants);
    Ok(UnrolledCircuit { circuit: unrolled, correspondence, z, depth: k })
}

/// Unrolls at the driving gate of the single output port.
pub fn unroll_at_output(circuit: &Circuit, k: usize) -> Result<UnrolledCircuit, UnrollError> {
    let driver = circuit.output_driver().ok_or(UnrollError::NoOutputRoot)?;
    let root = circuit.vertex(driver).id.clone();
    unroll(circuit, &root, k)
}

fn compute_z(circuit: &Circuit, cut_constants: &[String]) -> BTreeMap<String, ZValue> {
    let n = circuit.len();
    let mut z: Vec<Option<ZValue>> = vec![None; n];
    // Seed sources: cut constants are 0, everything else without
    // predecessors (inputs, copied source gates) is infinity.
    for (i, slot) in z.iter_mut().enumerate() {
        let v = circuit.vertex(i);
        if v.inputs.is_empty() {
            let is_cut = cut_constants.contains(&v.id);
            *slot = Some(if is_cut { ZValue::Finite(0) } else { ZValue::Infinite });
        }
    }
    // The graph is acyclic; propagate until all assigned.
    let mut remaining: Vec<usize> = (0..n).filter(|&i| z[i].is_none()).collect();
    while !remaining.is_empty() {
        let before = remaining.len();
        remaining.retain(|&i| {
            let v = circuit.vertex(i);
            let preds: Option<Vec<ZValue>> = v.inputs.iter().map(|&p| z[p]).collect();
            let Some(preds) = preds else { return true };
            z[i] = Some(match v.kind {
                VertexKind::Channel { .. } => preds[0].plus_one(),
                VertexKind::OutputPort => preds[0],
                _ => preds.into_iter().min().unwrap_or(ZValue::Infinite),
            });
            false
        });
        assert!(remaining.len() < before, "z propagation requires an acyclic circuit");
    }
    (0..n).map(|i| (circuit.vertex(i).id.clone(), z[i].unwrap())).collect()
}

/// Which side of the differential comparison lacks a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MissingIn {
    Original,
    Unrolled,
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub unrolled_vertex: String,
    pub original_vertex: String,
    pub time: f64,
    pub value: bool,
    /// Guaranteed-agreement window of this vertex pair.
    pub window: f64,
    pub missing_in: MissingIn,
}

/// Outcome of the differential simulation check.
#[derive(Debug, Clone, Serialize)]
pub struct DiffReport {
    pub mismatches: Vec<Mismatch>,
    pub vertices_compared: usize,
}

impl DiffReport {
    pub fn passes(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Executes the original and the unrolled circuit on the same inputs and
/// checks the simulation property; see [`diff_executions`].
pub fn check_simulation(
    circuit: &Circuit,
    unrolled: &UnrolledCircuit,
    inputs: &BTreeMap<String, Signal>,
    horizon: f64,
) -> Result<DiffReport, UnrollError> {
    let orig_exec = engine::execute(circuit, inputs, horizon)?;
    // Shallow unrollings may cut the input port out of the cone entirely.
    let kept: BTreeMap<String, Signal> = inputs
        .iter()
        .filter(|(name, _)| unrolled.circuit.index_of(name).is_some())
        .map(|(name, s)| (name.clone(), s.clone()))
        .collect();
    let unrolled_exec = engine::execute(&unrolled.circuit, &kept, horizon)?;
    Ok(diff_executions(unrolled, &orig_exec, &unrolled_exec))
}

fn contains(signal: &Signal, time: f64, value: bool) -> bool {
    signal.transitions().any(|tr| tr.time == time && tr.value == value)
}

/// Per-pair guaranteed-agreement windows.
///
/// A pair `(orig(w'), w')` can first diverge locally when an original
/// transition at `orig(w')` exceeds the copy's depth budget `z(w')` (a cut
/// subtree falls silent, or the silence spawns extra activity). Influence
/// of that divergence reaches another copy only by crossing the channels in
/// between, each adding at least its `delta_min`; gates react instantly.
/// So `sigma'` provably agrees with its original strictly before
///
/// ```text
///   W(sigma') = min over cone copies w' of
///               [ first original transition at orig(w') with depth > z(w')
///                 + min-path sum of delta_min from w' to sigma' ]
/// ```
fn agreement_windows(unrolled: &UnrolledCircuit, orig_exec: &Execution) -> Vec<f64> {
    let circuit = &unrolled.circuit;
    let n = circuit.len();

    // Local exhaustion time per unrolled vertex.
    let mut exhaust = vec![f64::INFINITY; n];
    for (i, slot) in exhaust.iter_mut().enumerate() {
        let u_id = &circuit.vertex(i).id;
        let Some(o_id) = unrolled.correspondence.get(u_id) else { continue };
        let zv = unrolled.z[u_id];
        if let (Ok(sig), Ok(dep)) = (orig_exec.signal(o_id), orig_exec.depths(o_id)) {
            for (tr, &d) in sig.transitions().zip(dep) {
                if !zv.admits(d) {
                    *slot = tr.time;
                    break;
                }
            }
        }
    }

    let hop = |i: usize| -> f64 {
        match &circuit.vertex(i).kind {
            VertexKind::Channel { model, .. } => model.delta_min().unwrap_or(0.0),
            _ => 0.0,
        }
    };

    // windows[t] = min over sources w of exhaust[w] + path cost; relax in
    // topological order (the unrolled circuit is a DAG).
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut indeg: Vec<usize> = (0..n).map(|i| circuit.vertex(i).inputs.len()).collect();
    let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(v) = queue.pop() {
        order.push(v);
        for &s in circuit.successors(v) {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                queue.push(s);
            }
        }
    }
    let mut window = exhaust;
    for &v in &order {
        for &p in &circuit.vertex(v).inputs {
            let via = window[p] + hop(v);
            if via < window[v] {
                window[v] = via;
            }
        }
    }
    window
}

/// Compares two already-computed executions: every corresponding vertex
/// pair must carry identical signals (initial value and exact transition
/// times/values) strictly before its guaranteed-agreement window. Deeper
/// unrollings push the windows out by at least one channel `delta_min` per
/// level, so agreement provably extends with the unrolling depth.
pub fn diff_executions(
    unrolled: &UnrolledCircuit,
    orig_exec: &Execution,
    unrolled_exec: &Execution,
) -> DiffReport {
    let windows = agreement_windows(unrolled, orig_exec);
    let mut mismatches = Vec::new();
    let mut compared = 0;
    for (u_id, o_id) in &unrolled.correspondence {
        let idx = unrolled.circuit.index_of(u_id).expect("correspondence key exists");
        let window = windows[idx];
        let Ok(o_sig) = orig_exec.signal(o_id) else { continue };
        let Ok(u_sig) = unrolled_exec.signal(u_id) else { continue };
        compared += 1;
        let mut push = |time: f64, value: bool, missing_in: MissingIn| {
            mismatches.push(Mismatch {
                unrolled_vertex: u_id.clone(),
                original_vertex: o_id.clone(),
                time,
                value,
                window,
                missing_in,
            });
        };
        if o_sig.initial() != u_sig.initial() {
            push(f64::NEG_INFINITY, u_sig.initial(), MissingIn::Original);
            continue;
        }
        for tr in o_sig.transitions().take_while(|tr| tr.time < window) {
            if !contains(u_sig, tr.time, tr.value) {
                push(tr.time, tr.value, MissingIn::Unrolled);
            }
        }
        for tr in u_sig.transitions().take_while(|tr| tr.time < window) {
            if !contains(o_sig, tr.time, tr.value) {
                push(tr.time, tr.value, MissingIn::Original);
            }
        }
    }
    DiffReport { mismatches, vertices_compared: compared }
}
