//! Netlist (JSON) and signal (CSV) file formats.
//!
//! Netlist schema, one object per vertex:
//!
//! ```json
//! {"vertices":[
//!   {"id":"i","kind":"input"},
//!   {"id":"or1","kind":"gate","table":"0111","inputs":["i","c"]},
//!   {"id":"c","kind":"channel","model":{"kind":"exp","tau":1.0,"tp":1.0,"vth":0.5},
//!    "init":0,"from":"or1","to":"or1"},
//!   {"id":"o","kind":"output","from":"or1"}
//! ]}
//! ```
//!
//! Gate `table` is the truth-table string in input-order-major binary order
//! (first input = most significant bit). Channel models:
//! `{"kind":"exp","tau":..,"tp":..,"vth":..}`,
//! `{"kind":"waveform","file":"wave.csv","tp":..,"vth":..}` (CSV columns
//! `t,f_up,f_down`), `{"kind":"waveform","samples":{..},..}` inline,
//! `{"kind":"pure","delay":..}`, `{"kind":"inertial","delay":..,
//! "min_pulse":..}`.
//!
//! An output port whose `from` names a channel gets an implicit buffer gate
//! inserted (`<id>__buf`), since output ports are driven by gates.
//!
//! Signal files are CSV with a header line `initial,<0|1>` followed by
//! `time,value` rows.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, DelayKind, DelayModel, WaveformSamples};
use crate::circuit::{Circuit, StructuralError, TruthTable, Vertex, VertexKind};
use crate::signal::{Signal, SignalError};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error reading `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid truth table `{table}` for gate `{gate}`")]
    BadTable { gate: String, table: String },
    #[error("channel `{channel}`: `to` field names `{to}`, which does not consume it")]
    BadChannelTarget { channel: String, to: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("structural errors: {0:?}")]
    Structural(Vec<StructuralError>),
    #[error("bad signal file: {0}")]
    BadSignal(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("waveform file `{0}` must have a `t,f_up,f_down` header and numeric rows")]
    BadWaveformFile(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Exp { tau: f64, tp: f64, vth: f64 },
    Waveform {
        #[serde(skip_serializing_if = "Option::is_none")]
        file: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        samples: Option<WaveformSamples>,
        tp: f64,
        vth: f64,
    },
    Pure { delay: f64 },
    Inertial { delay: f64, min_pulse: f64 },
}

impl ModelSpec {
    /// Instantiates the delay model; `base_dir` resolves relative waveform
    /// file paths.
    pub fn instantiate(&self, base_dir: Option<&Path>) -> Result<DelayModel, NetlistError> {
        match self {
            ModelSpec::Exp { tau, tp, vth } => Ok(DelayModel::exp_params(*tau, *tp, *vth)?),
            ModelSpec::Pure { delay } => Ok(DelayModel::pure(*delay)?),
            ModelSpec::Inertial { delay, min_pulse } => {
                Ok(DelayModel::inertial(*delay, *min_pulse)?)
            }
            ModelSpec::Waveform { file, samples, tp, vth } => {
                let samples = match (samples, file) {
                    (Some(s), _) => s.clone(),
                    (None, Some(f)) => {
                        let path = match base_dir {
                            Some(dir) => dir.join(f),
                            None => Path::new(f).to_path_buf(),
                        };
                        let text = std::fs::read_to_string(&path).map_err(|source| {
                            NetlistError::Io { path: path.display().to_string(), source }
                        })?;
                        parse_waveform_csv(&text)
                            .ok_or_else(|| NetlistError::BadWaveformFile(f.clone()))?
                    }
                    (None, None) => {
                        return Err(NetlistError::BadWaveformFile(
                            "<missing file and samples>".into(),
                        ))
                    }
                };
                Ok(DelayModel::from_waveforms(samples, *tp, *vth)?)
            }
        }
    }

    pub fn of_model(model: &DelayModel) -> ModelSpec {
        match model.kind() {
            DelayKind::Exp(p) => ModelSpec::Exp { tau: p.tau, tp: p.tp, vth: p.vth },
            DelayKind::Waveform(w) => ModelSpec::Waveform {
                file: None,
                samples: Some(w.samples.clone()),
                tp: w.tp,
                vth: w.vth,
            },
            DelayKind::BaselinePure { delay } => ModelSpec::Pure { delay: *delay },
            DelayKind::BaselineInertial { delay, min_pulse } => {
                ModelSpec::Inertial { delay: *delay, min_pulse: *min_pulse }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetVertex {
    Input {
        id: String,
    },
    Output {
        id: String,
        from: String,
    },
    Gate {
        id: String,
        table: String,
        inputs: Vec<String>,
    },
    Channel {
        id: String,
        model: ModelSpec,
        init: u8,
        from: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        to: Option<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetlistDoc {
    pub vertices: Vec<NetVertex>,
}

/// Parses a netlist document into a circuit. `base_dir` resolves waveform
/// file references.
pub fn parse_netlist(text: &str, base_dir: Option<&Path>) -> Result<Circuit, NetlistError> {
    let doc: NetlistDoc = serde_json::from_str(text)?;
    let mut vertices = Vec::new();
    let mut pending: Vec<(String, Vec<String>)> = Vec::new();
    let mut channel_targets: Vec<(String, String)> = Vec::new();
    for nv in &doc.vertices {
        match nv {
            NetVertex::Input { id } => {
                vertices.push(Vertex { id: id.clone(), kind: VertexKind::InputPort, inputs: vec![] });
            }
            NetVertex::Output { id, from } => {
                // Channel-driven outputs get an implicit buffer gate.
                let is_channel_driver = doc.vertices.iter().any(is_channel_named(from));
                let driver = if is_channel_driver {
                    let buf_id = format!("{id}__buf");
                    vertices.push(Vertex {
                        id: buf_id.clone(),
                        kind: VertexKind::Gate(TruthTable::buffer()),
                        inputs: vec![],
                    });
                    pending.push((buf_id.clone(), vec![from.clone()]));
                    buf_id
                } else {
                    from.clone()
                };
                vertices.push(Vertex { id: id.clone(), kind: VertexKind::OutputPort, inputs: vec![] });
                pending.push((id.clone(), vec![driver]));
            }
            NetVertex::Gate { id, table, inputs } => {
                let parsed = TruthTable::parse(table).filter(|t| t.arity() == inputs.len());
                let Some(parsed) = parsed else {
                    return Err(NetlistError::BadTable { gate: id.clone(), table: table.clone() });
                };
                vertices.push(Vertex { id: id.clone(), kind: VertexKind::Gate(parsed), inputs: vec![] });
                pending.push((id.clone(), inputs.clone()));
            }
            NetVertex::Channel { id, model, init, from, to } => {
                let model = model.instantiate(base_dir)?;
                vertices.push(Vertex {
                    id: id.clone(),
                    kind: VertexKind::Channel { model, init: *init != 0 },
                    inputs: vec![],
                });
                pending.push((id.clone(), vec![from.clone()]));
                if let Some(to) = to {
                    channel_targets.push((id.clone(), to.clone()));
                }
            }
        }
    }
    // Redundant `to` fields must agree with the consumer side.
    for (channel, to) in &channel_targets {
        let consumed = doc.vertices.iter().any(|nv| match nv {
            NetVertex::Gate { id, inputs, .. } => id == to && inputs.contains(channel),
            NetVertex::Output { id, from } => id == to && from == channel,
            _ => false,
        });
        if !consumed {
            return Err(NetlistError::BadChannelTarget { channel: channel.clone(), to: to.clone() });
        }
    }
    Circuit::from_parts(vertices, pending).map_err(NetlistError::Structural)
}

// Does this netlist vertex declare a channel named `name`?
fn is_channel_named(name: &str) -> impl Fn(&NetVertex) -> bool + '_ {
    move |nv| matches!(nv, NetVertex::Channel { id, .. } if id == name)
}

/// Serializes a circuit back into the netlist document format.
pub fn serialize_netlist(circuit: &Circuit) -> NetlistDoc {
    let id_of = |i: usize| circuit.vertex(i).id.clone();
    let vertices = circuit
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| match &v.kind {
            VertexKind::InputPort => NetVertex::Input { id: v.id.clone() },
            VertexKind::OutputPort => {
                NetVertex::Output { id: v.id.clone(), from: id_of(v.inputs[0]) }
            }
            VertexKind::Gate(t) => NetVertex::Gate {
                id: v.id.clone(),
                table: t.to_string_bits(),
                inputs: v.inputs.iter().map(|&p| id_of(p)).collect(),
            },
            VertexKind::Channel { model, init } => NetVertex::Channel {
                id: v.id.clone(),
                model: ModelSpec::of_model(model),
                init: u8::from(*init),
                from: id_of(v.inputs[0]),
                to: circuit.successors(i).first().map(|&s| id_of(s)),
            },
        })
        .collect();
    NetlistDoc { vertices }
}

pub fn netlist_to_string(circuit: &Circuit) -> String {
    serde_json::to_string_pretty(&serialize_netlist(circuit)).expect("netlist serializes")
}

/// Parses a `t,f_up,f_down` CSV (header required).
pub fn parse_waveform_csv(text: &str) -> Option<WaveformSamples> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next()?;
    if header.trim() != "t,f_up,f_down" {
        return None;
    }
    let mut t = Vec::new();
    let mut f_up = Vec::new();
    let mut f_down = Vec::new();
    for line in lines {
        let mut cols = line.split(',');
        t.push(cols.next()?.trim().parse().ok()?);
        f_up.push(cols.next()?.trim().parse().ok()?);
        f_down.push(cols.next()?.trim().parse().ok()?);
    }
    Some(WaveformSamples { t, f_up, f_down })
}

/// Parses the signal CSV format: `initial,<0|1>` header then `time,value`
/// rows with strictly increasing times and alternating values.
pub fn parse_signal_csv(text: &str) -> Result<Signal, NetlistError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| NetlistError::BadSignal("empty file".into()))?;
    let initial = match header.trim() {
        "initial,0" => false,
        "initial,1" => true,
        other => {
            return Err(NetlistError::BadSignal(format!(
                "expected header `initial,<0|1>`, got `{other}`"
            )))
        }
    };
    let mut times = Vec::new();
    let mut expect = !initial;
    for line in lines {
        let (t, v) = line
            .trim()
            .split_once(',')
            .ok_or_else(|| NetlistError::BadSignal(format!("bad row `{line}`")))?;
        let time: f64 = t
            .trim()
            .parse()
            .map_err(|_| NetlistError::BadSignal(format!("bad time `{t}`")))?;
        let value = match v.trim() {
            "0" => false,
            "1" => true,
            other => return Err(NetlistError::BadSignal(format!("bad value `{other}`"))),
        };
        if value != expect {
            return Err(NetlistError::BadSignal(format!(
                "values must alternate starting from {}",
                u8::from(!initial)
            )));
        }
        expect = !expect;
        times.push(time);
    }
    Ok(Signal::from_times(initial, times)?)
}

/// Writes the signal CSV format with shortest round-trip float formatting.
pub fn signal_to_csv(signal: &Signal) -> String {
    let mut out = format!("initial,{}\n", u8::from(signal.initial()));
    for tr in signal.transitions() {
        out.push_str(&format!("{},{}\n", tr.time, u8::from(tr.value)));
    }
    out
}
