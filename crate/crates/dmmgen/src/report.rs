//! CSV reports. Each starts with a `#` line echoing the invocation that
//! produced it.

use std::io::Write;

use dmmgen_core::ge::GenerationLog;
use dmmgen_core::simulator::SimMetrics;

use crate::bench::BenchRow;
use crate::compare::CompareRow;

fn csv_writer<W: Write>(mut w: W, invocation: &str) -> std::io::Result<csv::Writer<W>> {
    writeln!(w, "# {invocation}")?;
    Ok(csv::Writer::from_writer(w))
}

pub fn write_generation_log<W: Write>(w: W, invocation: &str, log: &[GenerationLog]) -> csv::Result<()> {
    let mut csv = csv_writer(w, invocation)?;
    csv.write_record(GenerationLog::CSV_HEADER.split(','))?;
    for row in log {
        csv.write_record([
            row.generation.to_string(),
            row.best_fitness.to_string(),
            row.mean_fitness.to_string(),
            row.best_adm_count.to_string(),
            row.invalid_count.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// `ex_time,mem_acc,peak_mem_used,energy,fitness` without a header.
pub fn simulate_line(m: &SimMetrics, fitness: f64) -> String {
    format!("{},{},{},{},{}", m.ex_time, m.mem_acc, m.peak_mem_used, m.energy, fitness)
}

pub fn write_compare<W: Write>(w: W, invocation: &str, rows: &[CompareRow]) -> csv::Result<()> {
    let mut csv = csv_writer(w, invocation)?;
    csv.write_record([
        "dmm",
        "ex_time",
        "mem_acc",
        "peak_mem_used",
        "energy",
        "fitness",
        "exhausted",
        "time_saving_vs_kingsley_pct",
        "mem_saving_vs_kingsley_pct",
        "energy_saving_vs_kingsley_pct",
        "time_saving_vs_lea_pct",
        "mem_saving_vs_lea_pct",
        "energy_saving_vs_lea_pct",
    ])?;
    for r in rows {
        let m = &r.metrics;
        let mut record = vec![
            r.name.clone(),
            m.ex_time.to_string(),
            m.mem_acc.to_string(),
            m.peak_mem_used.to_string(),
            m.energy.to_string(),
            r.fitness.to_string(),
            m.exhausted.to_string(),
        ];
        for d in [&r.vs_kingsley, &r.vs_lea] {
            record.extend([d.time, d.mem, d.energy].map(|x| format!("{x:.2}")));
        }
        csv.write_record(record)?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_bench<W: Write>(w: W, invocation: &str, rows: &[BenchRow]) -> csv::Result<()> {
    let mut csv = csv_writer(w, invocation)?;
    csv.write_record(["mode", "workers", "units", "reps", "mean_s", "stddev_s", "speedup"])?;
    for r in rows {
        let (mode, workers) = match r.workers {
            Some(w) => ("parallel", w.to_string()),
            None => ("sequential", String::new()),
        };
        csv.write_record([
            mode.to_string(),
            workers,
            r.units.to_string(),
            r.reps.to_string(),
            format!("{:.6}", r.mean_s),
            format!("{:.6}", r.stddev_s),
            format!("{:.4}", r.speedup),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
