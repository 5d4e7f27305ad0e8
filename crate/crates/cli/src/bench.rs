use std::time::Instant;

use gk_core::KernelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Gram,
    Classify,
}

impl Phase {
    fn as_str(self) -> &'static str {
        match self {
            Phase::Gram => "gram",
            Phase::Classify => "classify",
        }
    }
}

/// One timed measurement; `wall_time_s` is the median over `repetitions`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub dataset: String,
    pub kind: KernelKind,
    pub k: usize,
    pub phase: Phase,
    pub wall_time_s: f64,
    pub accuracy: Option<f64>,
    pub repetitions: usize,
}

pub const BENCH_HEADER: &str = "dataset,kernel,K,phase,wall_time_s,accuracy,repetitions";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{},{}",
            self.dataset,
            self.kind,
            self.k,
            self.phase.as_str(),
            self.wall_time_s,
            self.accuracy.map(|a| format!("{:.4}", 100.0 * a)).unwrap_or_default(),
            self.repetitions
        )
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median wall time in seconds of `run(c)` for each of `configs`
/// configurations. Every configuration gets one untimed warm-up run, then
/// the `reps` timed runs are interleaved round-robin across configurations
/// so that slow periods on a shared machine do not land on a single
/// configuration. Timings are clamped to 1 ns so they are always positive.
pub fn interleaved_medians<E>(configs: usize, reps: usize, mut run: impl FnMut(usize) -> Result<(), E>) -> Result<Vec<f64>, E> {
    for c in 0..configs {
        run(c)?;
    }
    let mut times = vec![Vec::with_capacity(reps); configs];
    for _ in 0..reps.max(1) {
        for (c, t) in times.iter_mut().enumerate() {
            let start = Instant::now();
            run(c)?;
            t.push(start.elapsed().as_secs_f64().max(1e-9));
        }
    }
    Ok(times.iter().map(|t| median(t)).collect())
}

/// A `# provenance: {json}` comment line for the top of a CSV file.
pub fn provenance_comment(value: &serde_json::Value) -> String {
    format!("# provenance: {value}\n")
}
