//! `ivsim` — command-line front end for the involution-channel circuit
//! simulator.
//!
//! Exit codes: 0 success, 1 runtime error, 2 input error (bad files, bad
//! arguments, structural violations). Errors are emitted as JSON
//! diagnostics on stderr.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ivsim_core::channel::{linspace, DelayModel};
use ivsim_core::continuity;
use ivsim_core::engine;
use ivsim_core::netlist::{self, ModelSpec};
use ivsim_core::signal::Signal;
use ivsim_core::spf;
use ivsim_core::unroll;
use ivsim_core::vcd;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "ivsim", version, about = "Involution-channel circuit simulator")]
struct Cli {
    /// Simulation horizon (time units), where applicable.
    #[arg(long, global = true, default_value_t = 50.0)]
    horizon: f64,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Random seed; reserved for randomized experiment drivers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Waveform output format for `simulate`.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Vcd)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Vcd,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a netlist with input signals and write waveforms.
    Simulate(SimulateArgs),
    /// Sweep input pulse lengths through the storage loop (or a netlist)
    /// and classify the outcome per pulse.
    SpfSweep(SpfSweepArgs),
    /// Locate the critical pulse length and fixed point of the storage
    /// loop.
    Critical(CriticalArgs),
    /// Unroll a feedback netlist to bounded depth; write the forward
    /// netlist and its z-map.
    Unroll(UnrollArgs),
    /// Check the involution identity and shape properties of a channel
    /// model.
    ValidateChannel(ValidateChannelArgs),
    /// Run the perturbation-continuity probe on a channel model.
    Continuity(ContinuityArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Netlist JSON file.
    #[arg(long)]
    netlist: PathBuf,
    /// Signal CSV file (single-input circuits) or a directory holding
    /// `<port>.csv` per input port.
    #[arg(long)]
    signals: PathBuf,
    /// Ticks per time unit for VCD output (timescale 1ps).
    #[arg(long, default_value_t = vcd::DEFAULT_SCALE)]
    vcd_scale: f64,
}

#[derive(Args)]
struct SpfSweepArgs {
    /// Storage-loop channel: time constant.
    #[arg(long, conflicts_with = "netlist")]
    tau: Option<f64>,
    /// Storage-loop channel: pure delay.
    #[arg(long, requires = "tau")]
    tp: Option<f64>,
    /// Storage-loop channel: threshold (0.5 for the symmetric loop).
    #[arg(long, requires = "tau", default_value_t = 0.5)]
    vth: f64,
    /// Alternatively: sweep pulses through this netlist.
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    delta0_min: f64,
    #[arg(long, default_value_t = 2.5)]
    delta0_max: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Iteration budget before classifying a pulse as metastable.
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    tp: f64,
    #[arg(long, default_value_t = 0.5)]
    vth: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    /// Also write the bisection trace as JSON into the output directory.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct UnrollArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Unrolling depth.
    #[arg(long)]
    k: usize,
    /// Root gate; defaults to the driver of the single output port.
    #[arg(long)]
    root: Option<String>,
}

#[derive(Args)]
struct ValidateChannelArgs {
    /// Channel model as JSON, e.g. '{"kind":"exp","tau":1.0,"tp":1.0,"vth":0.5}'.
    #[arg(long)]
    model: String,
    #[arg(long)]
    grid_lo: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    grid_hi: f64,
    #[arg(long, default_value_t = 1000)]
    grid_n: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct ContinuityArgs {
    /// Channel model as JSON; baselines dispatch to the baseline probe.
    #[arg(long)]
    model: String,
    /// Base signal: pulse start (omit both for a constant-0 base).
    #[arg(long, default_value_t = 0.0)]
    base_start: f64,
    /// Base signal: pulse length; 0 means constant-0 base.
    #[arg(long, default_value_t = 0.0)]
    base_len: f64,
    /// Comma-separated perturbation pulse lengths.
    #[arg(long, default_value = "0.1,0.01,0.001,0.0001,0.00001,0.000001")]
    epsilons: String,
}

enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    fn emit(&self) -> ExitCode {
        let (kind, message, code) = match self {
            CliError::Input(m) => ("input", m, 2),
            CliError::Runtime(m) => ("runtime", m, 1),
        };
        eprintln!(
            "{}",
            serde_json::json!({"error": {"kind": kind, "message": message}})
        );
        ExitCode::from(code)
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.emit(),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read `{}`: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| runtime_err(format!("cannot create `{}`: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| runtime_err(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(path)
}

fn load_circuit(path: &Path) -> Result<ivsim_core::Circuit, CliError> {
    let text = read_file(path)?;
    let circuit = netlist::parse_netlist(&text, path.parent()).map_err(input_err)?;
    let errors = circuit.validate();
    if !errors.is_empty() {
        let messages: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        return Err(CliError::Input(
            serde_json::json!({"structural": messages}).to_string(),
        ));
    }
    Ok(circuit)
}

fn parse_model(text: &str) -> Result<DelayModel, CliError> {
    let spec: ModelSpec = serde_json::from_str(text).map_err(input_err)?;
    spec.instantiate(None).map_err(input_err)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(args) => simulate(cli, args),
        Command::SpfSweep(args) => spf_sweep(cli, args),
        Command::Critical(args) => critical(cli, args),
        Command::Unroll(args) => cmd_unroll(cli, args),
        Command::ValidateChannel(args) => validate_channel(args),
        Command::Continuity(args) => cmd_continuity(cli, args),
    }
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.netlist)?;
    let ports = circuit.input_ports();
    let mut inputs = BTreeMap::new();
    if args.signals.is_dir() {
        for &p in &ports {
            let id = &circuit.vertex(p).id;
            let path = args.signals.join(format!("{id}.csv"));
            let signal = netlist::parse_signal_csv(&read_file(&path)?).map_err(input_err)?;
            inputs.insert(id.clone(), signal);
        }
    } else {
        if ports.len() != 1 {
            return Err(CliError::Input(format!(
                "circuit has {} input ports; pass a directory of <port>.csv files",
                ports.len()
            )));
        }
        let signal = netlist::parse_signal_csv(&read_file(&args.signals)?).map_err(input_err)?;
        inputs.insert(circuit.vertex(ports[0]).id.clone(), signal);
    }
    let exec = engine::execute(&circuit, &inputs, cli.horizon).map_err(input_err)?;
    let mut outputs = Vec::new();
    match cli.format {
        OutFormat::Vcd => {
            let path = write_file(&cli.out_dir, "waves.vcd", &vcd::write_vcd(&exec, args.vcd_scale))?;
            outputs.push(path);
        }
        OutFormat::Csv => {
            for (id, signal, _) in exec.iter() {
                let path =
                    write_file(&cli.out_dir, &format!("{id}.csv"), &netlist::signal_to_csv(signal))?;
                outputs.push(path);
            }
        }
    }
    println!(
        "{}",
        serde_json::json!({
            "status": "ok",
            "terminated": exec.terminated,
            "horizon": exec.horizon,
            "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        })
    );
    Ok(())
}

fn spf_sweep(cli: &Cli, args: &SpfSweepArgs) -> Result<(), CliError> {
    // Zero steps is a legitimate empty sweep: header-only output.
    let grid = match args.steps {
        0 => Vec::new(),
        1 => vec![args.delta0_min],
        n => linspace(args.delta0_min, args.delta0_max, n),
    };
    let mut csv = String::from("delta0,regime,n_pulses,stab_time\n");
    if let Some(netlist_path) = &args.netlist {
        let circuit = load_circuit(netlist_path)?;
        let ins = circuit.input_ports();
        let outs = circuit.output_ports();
        if ins.len() != 1 || outs.len() != 1 {
            return Err(CliError::Input("netlist must have one input and one output".into()));
        }
        for &d0 in &grid {
            let mut inputs = BTreeMap::new();
            inputs.insert(
                circuit.vertex(ins[0]).id.clone(),
                Signal::pulse(0.0, d0).map_err(input_err)?,
            );
            let exec = engine::execute(&circuit, &inputs, cli.horizon).map_err(runtime_err)?;
            let out = exec.signal(&circuit.vertex(outs[0]).id).map_err(runtime_err)?;
            let regime = if !exec.terminated {
                spf::Regime::Metastable
            } else if out.value_at(cli.horizon) {
                spf::Regime::Settles1
            } else {
                spf::Regime::Settles0
            };
            let stab = out.last_transition_time().unwrap_or(0.0);
            csv.push_str(&format!("{d0},{regime},{},{stab}\n", out.pulses().len()));
        }
    } else {
        let (Some(tau), Some(tp)) = (args.tau, args.tp) else {
            return Err(CliError::Input("pass either --netlist or --tau/--tp".into()));
        };
        let model = DelayModel::exp_params(tau, tp, args.vth).map_err(input_err)?;
        // Grid points are independent; collect preserves grid order.
        let rows: Result<Vec<String>, spf::SpfError> = grid
            .par_iter()
            .map(|&d0| {
                let report = spf::loop_iterate(&model, d0, args.max_steps)?;
                let stab = report
                    .stabilization_time
                    .map_or_else(String::new, |t| t.to_string());
                Ok(format!("{d0},{},{},{stab}\n", report.regime, report.pulse_lengths.len()))
            })
            .collect();
        for row in rows.map_err(input_err)? {
            csv.push_str(&row);
        }
    }
    let path = write_file(&cli.out_dir, "spf_sweep.csv", &csv)?;
    println!(
        "{}",
        serde_json::json!({"status": "ok", "rows": grid.len(), "output": path.display().to_string()})
    );
    Ok(())
}

fn critical(cli: &Cli, args: &CriticalArgs) -> Result<(), CliError> {
    let model = DelayModel::exp_params(args.tau, args.tp, args.vth).map_err(input_err)?;
    let search = spf::critical_delta0_search(&model, args.tol, args.max_steps).map_err(input_err)?;
    if args.trace {
        let trace = serde_json::to_string_pretty(&search.trace).map_err(runtime_err)?;
        write_file(&cli.out_dir, "critical_trace.json", &trace)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "tau": args.tau,
            "tp": args.tp,
            "vth": args.vth,
            "delta_inf": model.delta_inf_up(),
            "delta_min": model.delta_min().map_err(input_err)?,
            "tilde_delta1": search.tilde_delta1,
            "tilde_delta0": search.delta0,
            "tilde_delta0_solve": search.delta0_solve,
            "bisection_steps": search.trace.len(),
        })
    );
    Ok(())
}

fn cmd_unroll(cli: &Cli, args: &UnrollArgs) -> Result<(), CliError> {
    let circuit = load_circuit(&args.netlist)?;
    let unrolled = match &args.root {
        Some(root) => unroll::unroll(&circuit, root, args.k),
        None => unroll::unroll_at_output(&circuit, args.k),
    }
    .map_err(input_err)?;
    let netlist_path = write_file(
        &cli.out_dir,
        "unrolled.json",
        &netlist::netlist_to_string(&unrolled.circuit),
    )?;
    let zmap = serde_json::json!({
        "depth": unrolled.depth,
        "z": unrolled.z,
        "correspondence": unrolled.correspondence,
    });
    let zmap_path = write_file(
        &cli.out_dir,
        "zmap.json",
        &serde_json::to_string_pretty(&zmap).map_err(runtime_err)?,
    )?;
    println!(
        "{}",
        serde_json::json!({
            "status": "ok",
            "vertices": unrolled.circuit.len(),
            "netlist": netlist_path.display().to_string(),
            "zmap": zmap_path.display().to_string(),
        })
    );
    Ok(())
}

fn validate_channel(args: &ValidateChannelArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model)?;
    let lo = args.grid_lo.unwrap_or_else(|| {
        model.domain_boundary(ivsim_core::Edge::Rising)
            .max(model.domain_boundary(ivsim_core::Edge::Falling))
            + 0.01
    });
    // NaN-safe rejection of empty or malformed grids.
    if lo.partial_cmp(&args.grid_hi) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Input(format!("empty grid [{lo}, {}]", args.grid_hi)));
    }
    let grid = linspace(lo, args.grid_hi, args.grid_n.max(2));
    let report = model.validate_involution(&grid, args.tol);
    println!(
        "{}",
        serde_json::json!({
            "pass": report.passes(),
            "report": report,
        })
    );
    Ok(())
}

fn cmd_continuity(cli: &Cli, args: &ContinuityArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model)?;
    let base = if args.base_len > 0.0 {
        Signal::pulse(args.base_start, args.base_len).map_err(input_err)?
    } else {
        Signal::zero()
    };
    let epsilons: Vec<f64> = args
        .epsilons
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(input_err))
        .collect::<Result<_, _>>()?;
    let points = if model.is_involution_kind() {
        continuity::continuity_probe(&model, &base, &epsilons, cli.horizon)
    } else {
        continuity::baseline_probe(&model, &base, &epsilons, cli.horizon)
    }
    .map_err(input_err)?;
    let mut csv = String::from("epsilon,distance\n");
    for p in &points {
        csv.push_str(&format!("{},{}\n", p.epsilon, p.out_distance));
    }
    let path = write_file(&cli.out_dir, "continuity.csv", &csv)?;
    println!(
        "{}",
        serde_json::json!({"status": "ok", "rows": points.len(), "output": path.display().to_string()})
    );
    Ok(())
}
