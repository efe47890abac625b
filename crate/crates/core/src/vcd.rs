//! VCD (value change dump) export of executions.
//!
//! One scope, one 1-bit wire per vertex, timescale 1ps. Float transition
//! times are scaled by a configurable factor and rounded half-even to
//! integer ticks; this rounding is for VCD output only, analysis paths keep
//! full float times. When rounding collapses several changes of one wire
//! onto a tick, the last value wins.

use std::fmt::Write as _;

use crate::engine::Execution;

/// Default time scale: one simulation time unit = 1000 ticks (1 ns at the
/// 1ps timescale).
pub const DEFAULT_SCALE: f64 = 1000.0;

fn identifier(mut n: usize) -> String {
    // Printable VCD identifier characters, base 94 starting at '!'.
    let mut s = String::new();
    loop {
        s.push((33 + (n % 94)) as u8 as char);
        n /= 94;
        if n == 0 {
            break;
        }
    }
    s
}

/// Renders the whole execution as a VCD document.
pub fn write_vcd(execution: &Execution, scale: f64) -> String {
    let mut out = String::new();
    out.push_str("$timescale 1ps $end\n");
    out.push_str("$scope module top $end\n");
    let ids: Vec<String> = (0..execution.ids().len()).map(identifier).collect();
    for (i, name) in execution.ids().iter().enumerate() {
        let _ = writeln!(out, "$var wire 1 {} {} $end", ids[i], name);
    }
    out.push_str("$upscope $end\n");
    out.push_str("$enddefinitions $end\n");

    // Initial values at tick 0.
    out.push_str("#0\n$dumpvars\n");
    for ((_, signal, _), code) in execution.iter().zip(&ids) {
        let _ = writeln!(out, "{}{}", u8::from(signal.initial()), code);
    }
    out.push_str("$end\n");

    // Merge all transitions, keyed by rounded tick; later changes of the
    // same wire on one tick overwrite earlier ones.
    let mut changes: Vec<(u64, usize, bool)> = Vec::new();
    for (i, (_, signal, _)) in execution.iter().enumerate() {
        for tr in signal.transitions() {
            let tick = (tr.time * scale).round_ties_even() as u64;
            changes.push((tick, i, tr.value));
        }
    }
    changes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut idx = 0;
    while idx < changes.len() {
        let tick = changes[idx].0;
        let _ = writeln!(out, "#{tick}");
        let mut end = idx;
        while end < changes.len() && changes[end].0 == tick {
            end += 1;
        }
        // Last value per wire within the tick.
        for j in idx..end {
            let (_, wire, value) = changes[j];
            let is_last = changes[j + 1..end].iter().all(|&(_, w, _)| w != wire);
            if is_last {
                let _ = writeln!(out, "{}{}", u8::from(value), ids[wire]);
            }
        }
        idx = end;
    }
    out
}
