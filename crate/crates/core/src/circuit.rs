//! Circuit graph data model and structural validation.
//!
//! A circuit is a directed graph of input ports, output ports, gates and
//! channels. The structural rules:
//!
//! * input ports have no incoming and at least one outgoing edge,
//! * output ports have exactly one incoming edge, from a gate, and none out,
//! * channels have exactly one incoming and one outgoing edge,
//! * gates carry a total Boolean function whose arity matches their ordered
//!   in-degree,
//! * gates and channels alternate on every path,
//! * channels fanning out from a common source share one initial value.

use std::collections::BTreeMap;

use crate::channel::DelayModel;

/// Gate truth table over up to 8 ordered inputs, in input-order-major binary
/// order (first input is the most significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTable {
    arity: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub const MAX_ARITY: usize = 8;

    pub fn new(arity: usize, bits: Vec<bool>) -> Option<Self> {
        if arity > Self::MAX_ARITY || bits.len() != 1 << arity {
            return None;
        }
        Some(TruthTable { arity, bits })
    }

    /// Parses a truth-table string of `0`/`1` characters, e.g. `"0111"` for
    /// a two-input OR.
    pub fn parse(s: &str) -> Option<Self> {
        let len = s.len();
        if !len.is_power_of_two() {
            return None;
        }
        let arity = len.trailing_zeros() as usize;
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()?;
        TruthTable::new(arity, bits)
    }

    pub fn constant(value: bool) -> Self {
        TruthTable { arity: 0, bits: vec![value] }
    }

    pub fn buffer() -> Self {
        TruthTable { arity: 1, bits: vec![false, true] }
    }

    pub fn inverter() -> Self {
        TruthTable { arity: 1, bits: vec![true, false] }
    }

    pub fn or2() -> Self {
        TruthTable::parse("0111").unwrap()
    }

    pub fn and2() -> Self {
        TruthTable::parse("0001").unwrap()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, inputs: &[bool]) -> bool {
        debug_assert_eq!(inputs.len(), self.arity);
        let idx = inputs.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.bits[idx]
    }

    pub fn to_string_bits(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone)]
pub enum VertexKind {
    InputPort,
    OutputPort,
    Gate(TruthTable),
    Channel { model: DelayModel, init: bool },
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: String,
    pub kind: VertexKind,
    /// Ordered incoming edges (the gate input ordering).
    pub inputs: Vec<usize>,
}

/// Immutable circuit graph. Vertex indices are assigned deterministically by
/// sorted id so that runs are reproducible regardless of build order.
#[derive(Debug, Clone)]
pub struct Circuit {
    vertices: Vec<Vertex>,
    index: BTreeMap<String, usize>,
    successors: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructuralError {
    #[error("duplicate vertex id `{0}`")]
    DuplicateId(String),
    #[error("vertex `{vertex}` references unknown vertex `{missing}`")]
    UnknownVertex { vertex: String, missing: String },
    #[error("input port `{0}` must have no incoming and at least one outgoing edge")]
    BadInputPort(String),
    #[error("output port `{port}` must have exactly one incoming edge from a gate")]
    BadOutputPort { port: String },
    #[error("channel `{0}` must have exactly one incoming and one outgoing edge")]
    BadChannelDegree(String),
    #[error("gate `{gate}` arity {arity} does not match its in-degree {in_degree}")]
    ArityMismatch { gate: String, arity: usize, in_degree: usize },
    #[error("gates and channels must alternate: edge `{from}` -> `{to}`")]
    AlternationViolation { from: String, to: String },
    #[error("channels `{a}` and `{b}` share input `{shared_from}` but have different initial values")]
    SharedInitialValueMismatch { a: String, b: String, shared_from: String },
}

/// Collects vertices by name; indices are resolved against the sorted id
/// order at build time.
pub struct CircuitBuilder {
    vertices: Vec<Vertex>,
    pending: Vec<(String, Vec<String>)>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        CircuitBuilder { vertices: Vec::new(), pending: Vec::new() }
    }

    pub fn input(&mut self, id: &str) -> &mut Self {
        self.vertices.push(Vertex { id: id.into(), kind: VertexKind::InputPort, inputs: vec![] });
        self
    }

    /// Output port driven by `from` (must be a gate for the circuit to
    /// validate).
    pub fn output(&mut self, id: &str, from: &str) -> &mut Self {
        self.vertices.push(Vertex {
            id: id.into(),
            kind: VertexKind::OutputPort,
            inputs: vec![usize::MAX],
        });
        self.unresolved(id, vec![from.into()]);
        self
    }

    pub fn gate(&mut self, id: &str, table: TruthTable, inputs: &[&str]) -> &mut Self {
        self.vertices.push(Vertex {
            id: id.into(),
            kind: VertexKind::Gate(table),
            inputs: vec![usize::MAX; inputs.len()],
        });
        self.unresolved(id, inputs.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn channel(&mut self, id: &str, model: DelayModel, init: bool, from: &str) -> &mut Self {
        self.vertices.push(Vertex {
            id: id.into(),
            kind: VertexKind::Channel { model, init },
            inputs: vec![usize::MAX],
        });
        self.unresolved(id, vec![from.into()]);
        self
    }

    fn unresolved(&mut self, id: &str, names: Vec<String>) {
        self.pending.push((id.to_string(), names));
    }

    pub fn build(self) -> Result<Circuit, Vec<StructuralError>> {
        Circuit::from_parts(self.vertices, self.pending)
    }
}

impl Default for CircuitBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub(crate) fn from_parts(
        mut vertices: Vec<Vertex>,
        pending: Vec<(String, Vec<String>)>,
    ) -> Result<Circuit, Vec<StructuralError>> {
        let mut errors = Vec::new();
        vertices.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.id.clone(), i).is_some() {
                errors.push(StructuralError::DuplicateId(v.id.clone()));
            }
        }
        for (id, names) in &pending {
            let Some(&vi) = index.get(id) else { continue };
            let mut resolved = Vec::with_capacity(names.len());
            for name in names {
                match index.get(name) {
                    Some(&src) => resolved.push(src),
                    None => errors.push(StructuralError::UnknownVertex {
                        vertex: id.clone(),
                        missing: name.clone(),
                    }),
                }
            }
            if resolved.len() == names.len() {
                vertices[vi].inputs = resolved;
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        let mut successors = vec![Vec::new(); vertices.len()];
        for (i, v) in vertices.iter().enumerate() {
            for &src in &v.inputs {
                successors[src].push(i);
            }
        }
        Ok(Circuit { vertices, index, successors })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, idx: usize) -> &Vertex {
        &self.vertices[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.successors[idx]
    }

    pub fn input_ports(&self) -> Vec<usize> {
        self.filtered(|k| matches!(k, VertexKind::InputPort))
    }

    pub fn output_ports(&self) -> Vec<usize> {
        self.filtered(|k| matches!(k, VertexKind::OutputPort))
    }

    pub fn channels(&self) -> Vec<usize> {
        self.filtered(|k| matches!(k, VertexKind::Channel { .. }))
    }

    fn filtered(&self, pred: impl Fn(&VertexKind) -> bool) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&i| pred(&self.vertices[i].kind)).collect()
    }

    /// The gate driving the single output port, for SPF-style circuits.
    pub fn output_driver(&self) -> Option<usize> {
        let outs = self.output_ports();
        if outs.len() != 1 {
            return None;
        }
        self.vertices[outs[0]].inputs.first().copied()
    }

    /// Checks the structural constraints and returns every violation found.
    pub fn validate(&self) -> Vec<StructuralError> {
        let mut errors = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            match &v.kind {
                VertexKind::InputPort => {
                    if !v.inputs.is_empty() || self.successors[i].is_empty() {
                        errors.push(StructuralError::BadInputPort(v.id.clone()));
                    }
                }
                VertexKind::OutputPort => {
                    let from_gate = v.inputs.len() == 1
                        && matches!(self.vertices[v.inputs[0]].kind, VertexKind::Gate(_));
                    if !from_gate || !self.successors[i].is_empty() {
                        errors.push(StructuralError::BadOutputPort { port: v.id.clone() });
                    }
                }
                VertexKind::Channel { .. } => {
                    if v.inputs.len() != 1 || self.successors[i].len() != 1 {
                        errors.push(StructuralError::BadChannelDegree(v.id.clone()));
                    }
                }
                VertexKind::Gate(table) => {
                    if table.arity() != v.inputs.len() {
                        errors.push(StructuralError::ArityMismatch {
                            gate: v.id.clone(),
                            arity: table.arity(),
                            in_degree: v.inputs.len(),
                        });
                    }
                }
            }
        }
        // Alternation: channel -> channel and gate -> gate edges are both
        // forbidden; channels may not feed output ports directly.
        for v in &self.vertices {
            for &src in &v.inputs {
                let bad = matches!(
                    (&self.vertices[src].kind, &v.kind),
                    (VertexKind::Channel { .. }, VertexKind::Channel { .. })
                        | (VertexKind::Gate(_), VertexKind::Gate(_))
                        | (VertexKind::Channel { .. }, VertexKind::OutputPort)
                );
                if bad {
                    errors.push(StructuralError::AlternationViolation {
                        from: self.vertices[src].id.clone(),
                        to: v.id.clone(),
                    });
                }
            }
        }
        // Channels branching from one source must agree on the initial value.
        for i in 0..self.vertices.len() {
            let chans: Vec<usize> = self.successors[i]
                .iter()
                .copied()
                .filter(|&s| matches!(self.vertices[s].kind, VertexKind::Channel { .. }))
                .collect();
            for w in chans.windows(2) {
                let (a, b) = (w[0], w[1]);
                let (VertexKind::Channel { init: ia, .. }, VertexKind::Channel { init: ib, .. }) =
                    (&self.vertices[a].kind, &self.vertices[b].kind)
                else {
                    unreachable!()
                };
                if ia != ib {
                    errors.push(StructuralError::SharedInitialValueMismatch {
                        a: self.vertices[a].id.clone(),
                        b: self.vertices[b].id.clone(),
                        shared_from: self.vertices[i].id.clone(),
                    });
                }
            }
        }
        errors
    }

    /// True iff the graph is acyclic (a forward circuit).
    pub fn is_forward(&self) -> bool {
        // Kahn's algorithm.
        let n = self.vertices.len();
        let mut in_deg: Vec<usize> = self.vertices.iter().map(|v| v.inputs.len()).collect();
        let mut queue: Vec<usize> = (0..n).filter(|&i| in_deg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &s in &self.successors[v] {
                in_deg[s] -= 1;
                if in_deg[s] == 0 {
                    queue.push(s);
                }
            }
        }
        seen == n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::DelayModel;

    fn exp_model() -> DelayModel {
        DelayModel::exp_params(1.0, 1.0, 0.5).unwrap()
    }

    /// The storage-loop circuit: input -> OR, OR fed back through channel c,
    /// OR -> HT channel -> buffer -> output.
    pub fn spf_fixture(loop_model: DelayModel, ht_model: DelayModel) -> Circuit {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("or1", TruthTable::or2(), &["i", "c"]);
        b.channel("c", loop_model, false, "or1");
        b.channel("ht", ht_model, false, "or1");
        b.gate("obuf", TruthTable::buffer(), &["ht"]);
        b.output("o", "obuf");
        b.build().unwrap()
    }

    #[test]
    fn spf_fixture_validates_and_is_cyclic() {
        let c = spf_fixture(exp_model(), exp_model());
        assert!(c.validate().is_empty());
        assert!(!c.is_forward());
    }

    #[test]
    fn forward_chain_is_forward() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", exp_model(), false, "g1");
        b.gate("g2", TruthTable::buffer(), &["c1"]);
        b.output("o", "g2");
        let c = b.build().unwrap();
        assert!(c.validate().is_empty());
        assert!(c.is_forward());
    }

    #[test]
    fn minimal_buffer_circuit_is_forward() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g", TruthTable::buffer(), &["i"]);
        b.output("o", "g");
        let c = b.build().unwrap();
        assert!(c.validate().is_empty());
        assert!(c.is_forward());
    }

    #[test]
    fn two_channels_in_series_violate_alternation() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", exp_model(), false, "g1");
        b.channel("c2", exp_model(), false, "c1");
        b.gate("g2", TruthTable::buffer(), &["c2"]);
        b.output("o", "g2");
        let c = b.build().unwrap();
        let errs = c.validate();
        assert!(errs.iter().any(|e| matches!(e, StructuralError::AlternationViolation { .. })),
            "{errs:?}");
    }

    #[test]
    fn shared_initial_value_mismatch_detected() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::buffer(), &["i"]);
        b.channel("c1", exp_model(), false, "g1");
        b.channel("c2", exp_model(), true, "g1");
        b.gate("g2", TruthTable::or2(), &["c1", "c2"]);
        b.output("o", "g2");
        let c = b.build().unwrap();
        let errs = c.validate();
        assert!(errs
            .iter()
            .any(|e| matches!(e, StructuralError::SharedInitialValueMismatch { .. })));
    }

    #[test]
    fn arity_mismatch_detected() {
        let mut b = CircuitBuilder::new();
        b.input("i");
        b.gate("g1", TruthTable::or2(), &["i"]);
        b.output("o", "g1");
        let c = b.build().unwrap();
        assert!(c.validate().iter().any(|e| matches!(e, StructuralError::ArityMismatch { .. })));
    }

    #[test]
    fn truth_table_ordering() {
        let t = TruthTable::parse("0111").unwrap();
        assert!(!t.eval(&[false, false]));
        assert!(t.eval(&[false, true]));
        assert!(t.eval(&[true, false]));
        assert!(t.eval(&[true, true]));
        assert_eq!(t.to_string_bits(), "0111");
    }
}
