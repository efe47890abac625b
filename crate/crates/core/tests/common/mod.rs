//! Shared helpers for the integration suites: seeded random circuits and
//! input signals.

use std::collections::BTreeMap;

use ivsim_core::channel::DelayModel;
use ivsim_core::circuit::{Circuit, CircuitBuilder, TruthTable};
use ivsim_core::signal::Signal;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_exp_model(rng: &mut ChaCha8Rng) -> DelayModel {
    let tau = rng.gen_range(0.3..2.0);
    let tp = rng.gen_range(0.3..1.5);
    let vth = rng.gen_range(0.2..0.8);
    DelayModel::exp_params(tau, tp, vth).unwrap()
}

fn random_table(rng: &mut ChaCha8Rng, arity: usize) -> TruthTable {
    loop {
        let bits: Vec<bool> = (0..1usize << arity).map(|_| rng.gen()).collect();
        // Skip constant tables so circuits stay lively.
        if bits.iter().any(|&b| b) && bits.iter().any(|&b| !b) {
            return TruthTable::new(arity, bits).unwrap();
        }
    }
}

/// A valid random circuit: up to `max_gates` gates of arity 1..=2, channels
/// on every gate-to-gate connection, at most `max_feedback` feedback edges,
/// one input and one output port. Channels sharing a source share one
/// initial value.
pub fn random_circuit(rng: &mut ChaCha8Rng, max_gates: usize, max_feedback: usize) -> Circuit {
    let n_gates = rng.gen_range(2..=max_gates.max(2));
    let gate_init: Vec<bool> = (0..n_gates).map(|_| rng.gen()).collect();
    let mut feedback_left = max_feedback;

    let mut b = CircuitBuilder::new();
    b.input("i");
    let mut channel_count = 0;
    let mut specs: Vec<(String, TruthTable, Vec<String>)> = Vec::new();
    for g in 0..n_gates {
        let arity = rng.gen_range(1..=2);
        let mut inputs = Vec::with_capacity(arity);
        for slot in 0..arity {
            // Gate 0's first input is the port, keeping the port connected.
            let use_port = (g == 0 && slot == 0) || rng.gen_bool(0.25);
            if use_port {
                inputs.push("i".to_string());
                continue;
            }
            // A source gate; picking one at or above `g` creates feedback.
            let src = if feedback_left > 0 && rng.gen_bool(0.3) {
                feedback_left -= 1;
                rng.gen_range(0..n_gates)
            } else if g == 0 {
                inputs.push("i".to_string());
                continue;
            } else {
                rng.gen_range(0..g)
            };
            let ch = format!("ch{channel_count}");
            channel_count += 1;
            b.channel(&ch, random_exp_model(rng), gate_init[src], &format!("g{src}"));
            inputs.push(ch);
        }
        specs.push((format!("g{g}"), random_table(rng, inputs.len()), inputs));
    }
    for (id, table, inputs) in &specs {
        let refs: Vec<&str> = inputs.iter().map(String::as_str).collect();
        b.gate(id, table.clone(), &refs);
    }
    let out_gate = rng.gen_range(0..n_gates);
    b.output("o", &format!("g{out_gate}"));
    let circuit = b.build().expect("generator produces resolvable circuits");
    assert!(circuit.validate().is_empty(), "{:?}", circuit.validate());
    circuit
}

/// Random input signal with up to `max_transitions` transitions in (0, 8).
pub fn random_signal(rng: &mut ChaCha8Rng, max_transitions: usize) -> Signal {
    let n = rng.gen_range(0..=max_transitions);
    let mut t = 0.0;
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        t += rng.gen_range(0.05..2.0);
        times.push(t);
    }
    Signal::from_times(false, times).unwrap()
}

pub fn input_map(signal: Signal) -> BTreeMap<String, Signal> {
    let mut m = BTreeMap::new();
    m.insert("i".to_string(), signal);
    m
}
