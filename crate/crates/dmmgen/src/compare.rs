//! Baselines against an evolved DMM.

use dmmgen_core::dmm_space::{kingsley_config, lea_config, DmmConfig, HwParams};
use dmmgen_core::ge::kingsley_weights;
use dmmgen_core::simulator::{fitness, simulate, SimMetrics, WeightsError};
use dmmgen_core::trace::Trace;

/// Percentage saved relative to a baseline: `(base - x) / base * 100`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Savings {
    pub time: f64,
    pub mem: f64,
    pub energy: f64,
}

fn saving(base: f64, x: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        (base - x) / base * 100.0
    }
}

impl Savings {
    pub fn between(base: &SimMetrics, m: &SimMetrics) -> Self {
        Self {
            time: saving(base.ex_time as f64, m.ex_time as f64),
            mem: saving(base.peak_mem_used as f64, m.peak_mem_used as f64),
            energy: saving(base.energy, m.energy),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub metrics: SimMetrics,
    pub fitness: f64,
    pub vs_kingsley: Savings,
    pub vs_lea: Savings,
}

/// Rows for Kingsley, Lea-like and `evolved`, in that order.
pub fn compare(trace: &Trace, hw: &HwParams, evolved: &DmmConfig, w: [f64; 3]) -> Result<Vec<CompareRow>, WeightsError> {
    let weights = kingsley_weights(trace, hw, w)?;
    let kingsley = simulate(&kingsley_config(32), trace, hw);
    let lea = simulate(&lea_config(), trace, hw);
    let evolved = simulate(evolved, trace, hw);
    Ok([("kingsley", kingsley), ("lea", lea), ("evolved", evolved)]
        .into_iter()
        .map(|(name, m)| CompareRow {
            name: name.to_string(),
            metrics: m,
            fitness: fitness(&m, &weights),
            vs_kingsley: Savings::between(&kingsley, &m),
            vs_lea: Savings::between(&lea, &m),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use dmmgen_core::trace::{synth_workload, WorkloadSpec};

    #[test]
    fn kingsley_against_itself() {
        let trace = synth_workload(&WorkloadSpec::discrete(vec![24, 100, 700], 200, 20), 1).unwrap();
        let rows = compare(&trace, &HwParams::default(), &kingsley_config(32), [1.0 / 3.0; 3]).unwrap();
        assert_eq!(rows[2].vs_kingsley, Savings::default());
        assert_eq!(rows[0].metrics, rows[2].metrics);
        assert!((rows[0].fitness - 1.0).abs() < 1e-12);
        for r in &rows {
            assert_eq!(r.metrics.energy, r.metrics.mem_acc as f64 * HwParams::default().energy_per_access);
        }
    }
}
