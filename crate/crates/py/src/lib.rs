//! Python bindings: the delay models, signals, circuits, the execution
//! engine and the analysis operations, exposed as the `ivsim` module.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use ivsim_core::channel::{self, Edge};
use ivsim_core::continuity;
use ivsim_core::engine;
use ivsim_core::netlist;
use ivsim_core::signal;
use ivsim_core::spf;
use ivsim_core::unroll::{self, ZValue};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_edge(edge: &str) -> PyResult<Edge> {
    match edge {
        "rising" | "up" => Ok(Edge::Rising),
        "falling" | "down" => Ok(Edge::Falling),
        other => Err(value_err(format!("edge must be rising/falling, got `{other}`"))),
    }
}

/// A pair of involution delay functions (or a constant-delay baseline).
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct DelayModel {
    inner: channel::DelayModel,
}

#[pymethods]
impl DelayModel {
    /// Closed-form exp-channel with time constant `tau`, pure delay `tp`
    /// and threshold `vth`.
    #[staticmethod]
    fn exp(tau: f64, tp: f64, vth: f64) -> PyResult<Self> {
        Ok(DelayModel { inner: channel::DelayModel::exp_params(tau, tp, vth).map_err(value_err)? })
    }

    /// Waveform-derived channel from sampled switching waveforms.
    #[staticmethod]
    fn waveform(t: Vec<f64>, f_up: Vec<f64>, f_down: Vec<f64>, tp: f64, vth: f64) -> PyResult<Self> {
        let samples = channel::WaveformSamples { t, f_up, f_down };
        Ok(DelayModel {
            inner: channel::DelayModel::from_waveforms(samples, tp, vth).map_err(value_err)?,
        })
    }

    /// Constant-delay baseline.
    #[staticmethod]
    fn pure(delay: f64) -> PyResult<Self> {
        Ok(DelayModel { inner: channel::DelayModel::pure(delay).map_err(value_err)? })
    }

    /// Inertial baseline: constant delay, pulses shorter than `min_pulse`
    /// vanish.
    #[staticmethod]
    fn inertial(delay: f64, min_pulse: f64) -> PyResult<Self> {
        Ok(DelayModel { inner: channel::DelayModel::inertial(delay, min_pulse).map_err(value_err)? })
    }

    /// Delay for an edge ("rising"/"falling") at input-to-previous-output
    /// gap `t_prev_gap`.
    fn eval_delta(&self, edge: &str, t_prev_gap: f64) -> PyResult<f64> {
        self.inner.eval_delta(parse_edge(edge)?, t_prev_gap).map_err(value_err)
    }

    fn delta_min(&self) -> PyResult<f64> {
        self.inner.delta_min().map_err(value_err)
    }

    #[getter]
    fn delta_inf_up(&self) -> f64 {
        self.inner.delta_inf_up()
    }

    #[getter]
    fn delta_inf_down(&self) -> f64 {
        self.inner.delta_inf_down()
    }

    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }

    fn is_strictly_causal(&self) -> bool {
        self.inner.is_strictly_causal()
    }

    fn is_involution_kind(&self) -> bool {
        self.inner.is_involution_kind()
    }

    /// Checks the involution identity on `n` grid points in `[lo, hi]`.
    #[pyo3(signature = (lo, hi, n=1000, tol=1e-9))]
    fn validate_involution<'py>(
        &self,
        py: Python<'py>,
        lo: f64,
        hi: f64,
        n: usize,
        tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let report = self.inner.validate_involution(&channel::linspace(lo, hi, n.max(2)), tol);
        let d = PyDict::new(py);
        d.set_item("pass", report.passes())?;
        d.set_item("involution_kind", report.involution_kind)?;
        d.set_item("max_err_up_down", report.max_err_up_down)?;
        d.set_item("max_err_down_up", report.max_err_down_up)?;
        d.set_item("monotone", report.monotone)?;
        d.set_item("concave", report.concave)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        match self.inner.kind() {
            channel::DelayKind::Exp(p) => {
                format!("DelayModel.exp(tau={}, tp={}, vth={})", p.tau, p.tp, p.vth)
            }
            channel::DelayKind::Waveform(w) => {
                format!("DelayModel.waveform(<{} samples>, tp={}, vth={})", w.samples.t.len(), w.tp, w.vth)
            }
            channel::DelayKind::BaselinePure { delay } => format!("DelayModel.pure({delay})"),
            channel::DelayKind::BaselineInertial { delay, min_pulse } => {
                format!("DelayModel.inertial({delay}, {min_pulse})")
            }
        }
    }
}

/// Binary signal: initial value plus strictly increasing alternating
/// transition times.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Signal {
    inner: signal::Signal,
}

#[pymethods]
impl Signal {
    #[staticmethod]
    fn zero() -> Self {
        Signal { inner: signal::Signal::zero() }
    }

    #[staticmethod]
    fn one() -> Self {
        Signal { inner: signal::Signal::one() }
    }

    #[staticmethod]
    fn pulse(start: f64, length: f64) -> PyResult<Self> {
        Ok(Signal { inner: signal::Signal::pulse(start, length).map_err(value_err)? })
    }

    #[staticmethod]
    fn pulse_train(start: f64, pulse_len: f64, gap: f64, horizon: f64) -> PyResult<Self> {
        Ok(Signal {
            inner: signal::Signal::pulse_train(start, pulse_len, gap, horizon).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_transitions(initial: bool, times: Vec<f64>) -> PyResult<Self> {
        Ok(Signal { inner: signal::Signal::from_times(initial, times).map_err(value_err)? })
    }

    #[getter]
    fn initial(&self) -> bool {
        self.inner.initial()
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn value_at(&self, t: f64) -> bool {
        self.inner.value_at(t)
    }

    /// Total 1-time on [0, horizon].
    fn mu(&self, horizon: f64) -> f64 {
        self.inner.mu(horizon)
    }

    /// Measure of pointwise disagreement on [0, horizon].
    fn distance(&self, other: &Signal, horizon: f64) -> f64 {
        self.inner.distance(&other.inner, horizon)
    }

    fn complement(&self) -> Signal {
        Signal { inner: self.inner.complement() }
    }

    /// Closed 1-intervals as (start, length) pairs.
    fn pulses(&self) -> Vec<(f64, f64)> {
        self.inner.pulses()
    }

    /// Pointwise (min, max) with another signal.
    fn min_max(&self, other: &Signal) -> (Signal, Signal) {
        let (lo, hi) = self.inner.pointwise_min_max(&other.inner);
        (Signal { inner: lo }, Signal { inner: hi })
    }

    fn __eq__(&self, other: &Signal) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Signal(initial={}, times={:?})", self.inner.initial(), self.inner.times())
    }
}

/// Circuit graph of ports, gates and channels.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Circuit {
    inner: ivsim_core::Circuit,
}

#[pymethods]
impl Circuit {
    /// Parses the JSON netlist format.
    #[staticmethod]
    fn from_netlist(text: &str) -> PyResult<Self> {
        Ok(Circuit { inner: netlist::parse_netlist(text, None).map_err(value_err)? })
    }

    fn to_netlist(&self) -> String {
        netlist::netlist_to_string(&self.inner)
    }

    /// Structural violations, empty when the circuit is well-formed.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|e| e.to_string()).collect()
    }

    fn is_forward(&self) -> bool {
        self.inner.is_forward()
    }

    fn input_ports(&self) -> Vec<String> {
        self.inner.input_ports().iter().map(|&i| self.inner.vertex(i).id.clone()).collect()
    }

    fn output_ports(&self) -> Vec<String> {
        self.inner.output_ports().iter().map(|&i| self.inner.vertex(i).id.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Circuit(<{} vertices>)", self.inner.len())
    }
}

/// A constructed execution: per-vertex signals and causal depths.
#[pyclass(frozen)]
struct Execution {
    inner: engine::Execution,
}

#[pymethods]
impl Execution {
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    fn signal(&self, id: &str) -> PyResult<Signal> {
        Ok(Signal { inner: self.inner.signal(id).map_err(value_err)?.clone() })
    }

    fn depths(&self, id: &str) -> PyResult<Vec<u32>> {
        Ok(self.inner.depths(id).map_err(value_err)?.to_vec())
    }

    fn causal_depth_of(&self, id: &str, index: usize) -> PyResult<u32> {
        self.inner.causal_depth_of(id, index).map_err(value_err)
    }

    #[getter]
    fn terminated(&self) -> bool {
        self.inner.terminated
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }
}

/// Unrolled circuit with correspondence and z-map.
#[pyclass(frozen)]
struct Unrolled {
    inner: unroll::UnrolledCircuit,
}

fn z_to_py(py: Python<'_>, z: ZValue) -> Py<PyAny> {
    match z {
        ZValue::Finite(n) => n.into_pyobject(py).unwrap().into_any().unbind(),
        ZValue::Infinite => "inf".into_pyobject(py).unwrap().into_any().unbind(),
    }
}

#[pymethods]
impl Unrolled {
    #[getter]
    fn circuit(&self) -> Circuit {
        Circuit { inner: self.inner.circuit.clone() }
    }

    /// z bound per unrolled vertex (int, or "inf").
    fn z<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (id, &z) in &self.inner.z {
            d.set_item(id, z_to_py(py, z))?;
        }
        Ok(d)
    }

    fn correspondence(&self) -> BTreeMap<String, String> {
        self.inner.correspondence.clone()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth
    }
}

fn to_input_map(inputs: BTreeMap<String, Signal>) -> BTreeMap<String, signal::Signal> {
    inputs.into_iter().map(|(k, v)| (k, v.inner)).collect()
}

/// Applies a single channel to a signal.
#[pyfunction]
fn channel_output(model: &DelayModel, init: bool, input: &Signal, horizon: f64) -> PyResult<Signal> {
    Ok(Signal {
        inner: engine::channel_output(&model.inner, init, &input.inner, horizon)
            .map_err(value_err)?,
    })
}

/// Runs the deterministic execution-construction algorithm.
#[pyfunction]
fn execute(circuit: &Circuit, inputs: BTreeMap<String, Signal>, horizon: f64) -> PyResult<Execution> {
    Ok(Execution {
        inner: engine::execute(&circuit.inner, &to_input_map(inputs), horizon).map_err(value_err)?,
    })
}

/// Checks an execution against the gate/channel/port conditions.
#[pyfunction]
fn verify_execution(circuit: &Circuit, execution: &Execution) -> Vec<String> {
    engine::verify_execution(&circuit.inner, &execution.inner)
        .iter()
        .map(|v| format!("{v:?}"))
        .collect()
}

/// Runs the storage-loop pulse-length iteration.
#[pyfunction]
#[pyo3(signature = (model, delta0, max_steps=10_000))]
fn loop_iterate<'py>(
    py: Python<'py>,
    model: &DelayModel,
    delta0: f64,
    max_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = spf::loop_iterate(&model.inner, delta0, max_steps).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("delta0", r.delta0)?;
    d.set_item("regime", r.regime.to_string())?;
    d.set_item("pulse_lengths", r.pulse_lengths)?;
    d.set_item("stabilization_time", r.stabilization_time)?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

/// The nontrivial fixed point of the loop iteration map.
#[pyfunction]
#[pyo3(signature = (model, tol=1e-13))]
fn tilde_delta1(model: &DelayModel, tol: f64) -> PyResult<f64> {
    spf::tilde_delta1(&model.inner, tol).map_err(value_err)
}

/// The critical input pulse length of the storage loop.
#[pyfunction]
#[pyo3(signature = (model, tol=1e-12, max_steps=10_000))]
fn critical_delta0(model: &DelayModel, tol: f64, max_steps: usize) -> PyResult<f64> {
    spf::critical_delta0(&model.inner, tol, max_steps).map_err(value_err)
}

/// Simulated storage-loop settling time for one input pulse.
#[pyfunction]
fn stabilization_time(model: &DelayModel, delta0: f64, horizon: f64) -> PyResult<f64> {
    spf::stabilization_time(&model.inner, delta0, horizon).map_err(value_err)
}

/// Synthesizes a high-threshold filter as (tau, tp, vth).
#[pyfunction]
fn choose_ht_filter(delta_hat: f64, gamma: f64) -> PyResult<(f64, f64, f64)> {
    let p = spf::choose_ht_filter(delta_hat, gamma).map_err(value_err)?;
    Ok((p.tau, p.tp, p.vth))
}

/// The bare storage loop: OR gate fed back through `model`.
#[pyfunction]
fn build_storage_loop(model: &DelayModel) -> PyResult<Circuit> {
    Ok(Circuit { inner: spf::build_storage_loop(&model.inner).map_err(value_err)? })
}

/// Storage loop plus a high-threshold exp filter (ht_tau, ht_tp, ht_vth).
#[pyfunction]
fn build_spf_circuit(model: &DelayModel, ht_tau: f64, ht_tp: f64, ht_vth: f64) -> PyResult<Circuit> {
    let params = channel::ExpChannelParams::new(ht_tau, ht_tp, ht_vth).map_err(value_err)?;
    Ok(Circuit { inner: spf::build_spf_circuit(&model.inner, params).map_err(value_err)? })
}

/// Checks the short-pulse-filtration conditions over a set of input pulse
/// lengths.
#[pyfunction]
#[pyo3(signature = (circuit, pulses, epsilon, horizon, bound_k=None))]
fn check_spf<'py>(
    py: Python<'py>,
    circuit: &Circuit,
    pulses: Vec<f64>,
    epsilon: f64,
    horizon: f64,
    bound_k: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = spf::SpfCheckConfig { epsilon, bound_k, horizon };
    let v = spf::check_spf(&circuit.inner, &cfg, &pulses).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("f2_no_generation", v.f2_no_generation)?;
    d.set_item("f3_nontrivial", v.f3_nontrivial)?;
    d.set_item("f4_no_short_pulses", v.f4_no_short_pulses)?;
    d.set_item("min_output_pulse", v.min_output_pulse)?;
    d.set_item("f5_bounded", v.f5_bounded)?;
    d.set_item("pass", v.passes())?;
    Ok(d)
}

/// Unrolls a feedback circuit to depth `k`, rooted at `root` (default: the
/// output port's driving gate).
#[pyfunction]
#[pyo3(signature = (circuit, k, root=None))]
fn unroll_circuit(circuit: &Circuit, k: usize, root: Option<String>) -> PyResult<Unrolled> {
    let u = match root {
        Some(root) => unroll::unroll(&circuit.inner, &root, k),
        None => unroll::unroll_at_output(&circuit.inner, k),
    }
    .map_err(value_err)?;
    Ok(Unrolled { inner: u })
}

/// Differential check of the unrolling against the original execution.
#[pyfunction]
fn check_simulation<'py>(
    py: Python<'py>,
    circuit: &Circuit,
    unrolled: &Unrolled,
    inputs: BTreeMap<String, Signal>,
    horizon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let report =
        unroll::check_simulation(&circuit.inner, &unrolled.inner, &to_input_map(inputs), horizon)
            .map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("pass", report.passes())?;
    d.set_item("vertices_compared", report.vertices_compared)?;
    let items = PyList::empty(py);
    for m in &report.mismatches {
        let e = PyDict::new(py);
        e.set_item("unrolled_vertex", &m.unrolled_vertex)?;
        e.set_item("original_vertex", &m.original_vertex)?;
        e.set_item("time", m.time)?;
        e.set_item("value", m.value)?;
        e.set_item("window", m.window)?;
        e.set_item("missing_in", format!("{:?}", m.missing_in))?;
        items.append(e)?;
    }
    d.set_item("mismatches", items)?;
    Ok(d)
}

/// Worst-case perturbation continuity probe; returns (epsilon, distance)
/// pairs.
#[pyfunction]
fn continuity_probe(
    model: &DelayModel,
    base: &Signal,
    epsilons: Vec<f64>,
    horizon: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let pts = continuity::continuity_probe(&model.inner, &base.inner, &epsilons, horizon)
        .map_err(value_err)?;
    Ok(pts.iter().map(|p| (p.epsilon, p.out_distance)).collect())
}

/// Same probe for the constant-delay baselines.
#[pyfunction]
fn baseline_probe(
    model: &DelayModel,
    base: &Signal,
    epsilons: Vec<f64>,
    horizon: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let pts = continuity::baseline_probe(&model.inner, &base.inner, &epsilons, horizon)
        .map_err(value_err)?;
    Ok(pts.iter().map(|p| (p.epsilon, p.out_distance)).collect())
}

/// Measure sweep of a forward circuit; returns (delta, mu) pairs.
#[pyfunction]
fn forward_sweep(circuit: &Circuit, grid: Vec<f64>, horizon: f64) -> PyResult<Vec<(f64, f64)>> {
    let pts = continuity::forward_sweep(&circuit.inner, &grid, horizon).map_err(value_err)?;
    Ok(pts.iter().map(|p| (p.delta, p.mu)).collect())
}

#[pymodule]
fn ivsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<DelayModel>()?;
    m.add_class::<Signal>()?;
    m.add_class::<Circuit>()?;
    m.add_class::<Execution>()?;
    m.add_class::<Unrolled>()?;
    m.add_function(wrap_pyfunction!(channel_output, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(verify_execution, m)?)?;
    m.add_function(wrap_pyfunction!(loop_iterate, m)?)?;
    m.add_function(wrap_pyfunction!(tilde_delta1, m)?)?;
    m.add_function(wrap_pyfunction!(critical_delta0, m)?)?;
    m.add_function(wrap_pyfunction!(stabilization_time, m)?)?;
    m.add_function(wrap_pyfunction!(choose_ht_filter, m)?)?;
    m.add_function(wrap_pyfunction!(build_storage_loop, m)?)?;
    m.add_function(wrap_pyfunction!(build_spf_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(check_spf, m)?)?;
    m.add_function(wrap_pyfunction!(unroll_circuit, m)?)?;
    m.add_function(wrap_pyfunction!(check_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(continuity_probe, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_probe, m)?)?;
    m.add_function(wrap_pyfunction!(forward_sweep, m)?)?;
    Ok(())
}
