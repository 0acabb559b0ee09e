//! Gnuplot scripts written next to the CSV outputs. They only reference
//! relative file names so an output directory can be moved around.

use std::fmt::Write as _;

use anoma_core::AllocationMethod;

fn header(out: &mut String, png: &str, xlabel: &str, ylabel: &str) {
    out.push_str("set datafile separator ','\n");
    out.push_str("set terminal pngcairo size 900,600\n");
    writeln!(out, "set output '{png}'").unwrap();
    writeln!(out, "set xlabel '{xlabel}'").unwrap();
    writeln!(out, "set ylabel '{ylabel}'").unwrap();
    out.push_str("set key bottom right\nset grid\n");
}

fn variant_words(variants: &[AllocationMethod]) -> String {
    variants
        .iter()
        .map(|v| v.name())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Expected rate against bits, one curve per variant plus the full-CSI
/// levels as dashed lines.
pub fn sweep_script(variants: &[AllocationMethod]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "sweep.png",
        "feedback bits per user",
        "average max-min rate [bit/channel use]",
    );
    writeln!(out, "variants = \"{}\"", variant_words(variants)).unwrap();
    out.push_str(
        "plot for [v in variants] 'sweep.csv' skip 1 using 1:(strcol(2) eq v ? $3 : 1/0) \
         with linespoints title v, \\\n     \
         for [v in variants] 'sweep.csv' skip 1 using 1:(strcol(2) eq v ? $4 : 1/0) \
         with lines dashtype 2 title v.' full CSI'\n",
    );
    out
}

/// Objective against iteration for every optimized variant.
pub fn optimizer_script(variants: &[AllocationMethod]) -> String {
    let mut out = String::new();
    header(
        &mut out,
        "optimize_trace.png",
        "iteration",
        "average max-min rate [bit/channel use]",
    );
    writeln!(out, "variants = \"{}\"", variant_words(variants)).unwrap();
    out.push_str(
        "plot for [v in variants] 'optimize_trace.csv' skip 1 \
         using 1:(strcol(2) eq v ? $3 : 1/0) with lines title v\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_name_their_inputs() {
        let s = sweep_script(&AllocationMethod::ALL);
        assert!(s.contains("'sweep.csv'"));
        assert!(s.contains("noma anoma_z05 anoma_exact anoma_z1"));
        let o = optimizer_script(&[AllocationMethod::NomaClosedForm]);
        assert!(o.contains("'optimize_trace.csv'"));
    }
}
