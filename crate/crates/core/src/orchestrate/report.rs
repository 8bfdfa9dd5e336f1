//! Run reports, the event log and CSV exports.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::backend::CallTally;
use crate::formula::Cube;
use crate::tune::EntryKind;
use crate::validate::ValidationReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Sdac,
    PlainCnc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Answer {
    /// Model as DIMACS literals, one per variable.
    Sat { model: Vec<i32> },
    Unsat,
}

impl Answer {
    pub fn sat(model: &[bool]) -> Self {
        let model = model
            .iter()
            .enumerate()
            .map(|(i, &v)| if v { i as i32 + 1 } else { -(i as i32 + 1) })
            .collect();
        Answer::Sat { model }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, Answer::Sat { .. })
    }

    pub fn assignment(&self) -> Option<Vec<bool>> {
        match self {
            Answer::Sat { model } => Some(model.iter().map(|&l| l > 0).collect()),
            Answer::Unsat => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Cubing,
    Tuning,
    Validation,
    Retuning,
    Solving,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Cubing => "cubing",
            Phase::Tuning => "tuning",
            Phase::Validation => "validation",
            Phase::Retuning => "retuning",
            Phase::Solving => "solving",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRow {
    pub strategy: String,
    pub budget: Option<u64>,
    pub status: String,
    pub cost: u64,
}

/// A cube that was decided, with the phase that decided it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedCube {
    pub id: u64,
    pub cube: Cube,
    pub phase: Phase,
    /// Strategy of the deciding check; absent when the cuber decided it.
    pub strategy: Option<String>,
    pub status: String,
    pub cost: u64,
    pub budget: Option<u64>,
    pub attempts: Vec<AttemptRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub kind: EntryKind,
    pub strategy: String,
    pub cost: u64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRow {
    pub cube_id: u64,
    pub cost_default: u64,
    pub cost_learned: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningSummary {
    pub cubes: usize,
    pub best: String,
    pub best_cost: u64,
    pub default_cost: u64,
    pub beta: f64,
    pub evaluations: usize,
    pub trajectory: Vec<TrajectoryRow>,
    /// Tuning cubes priced under the default and the best strategy.
    pub per_cube: Vec<CostRow>,
}

/// Solver cost spent per activity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCosts {
    /// Checks made while collecting tuning and validation cubes.
    pub collection: u64,
    /// PAR-capped prices computed by tuning and validation (ledger hits
    /// included, so this overstates fresh solver work).
    pub pricing: u64,
    /// Final-phase attempts.
    pub solving: u64,
}

impl PhaseCosts {
    /// Cost of the checks that decided cubes or ran out of budget on them.
    pub fn conquer(&self) -> u64 {
        self.collection.saturating_add(self.solving)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub cubing_s: f64,
    pub learning_s: f64,
    pub solving_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyRow {
    Single { strategy: String },
    SequentialPortfolio { first: String, first_budget: u64, fallback: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub workers: usize,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub initial_cubes: usize,
    /// Absent only in the partial report of an aborted run.
    pub answer: Option<Answer>,
    pub learned: Option<String>,
    pub policy: Option<PolicyRow>,
    pub tuning: Option<TuningSummary>,
    pub retuning: Option<TuningSummary>,
    pub validation: Option<ValidationReport>,
    pub cubes: Vec<SolvedCube>,
    /// Cubes left undecided because a model was found first.
    pub unsolved_cubes: usize,
    pub costs: PhaseCosts,
    pub tally: CallTally,
    pub timings: Timings,
}

impl RunReport {
    /// JSON with timings zeroed: the part that is a pure function of
    /// formula, configuration and seed at one worker.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings = Timings::default();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn solved_in(&self, phase: Phase) -> impl Iterator<Item = &SolvedCube> {
        self.cubes.iter().filter(move |c| c.phase == phase)
    }

    /// Cost per cube decided in the final solving phase.
    pub fn solving_costs(&self) -> HashMap<&Cube, u64> {
        self.solved_in(Phase::Solving).map(|c| (&c.cube, c.cost)).collect()
    }
}

/// Cubes decided in the final phase of both runs, with the baseline's cost
/// as `cost_default` and the tuned run's as `cost_learned`, in the tuned
/// run's solving order.
pub fn common_cube_costs(baseline: &RunReport, tuned: &RunReport) -> Vec<(u64, u64, u64)> {
    let base = baseline.solving_costs();
    tuned
        .solved_in(Phase::Solving)
        .filter_map(|c| base.get(&c.cube).map(|&b| (c.id, b, c.cost)))
        .collect()
}

/// Line-delimited JSON event sink shared by the coordinator.
pub struct RunLog {
    out: Option<Mutex<BufWriter<File>>>,
}

#[derive(Serialize)]
pub struct LogRecord<'a> {
    pub phase: Phase,
    pub event: &'a str,
    pub cube_id: u64,
    pub cube: &'a Cube,
    pub strategy: Option<&'a str>,
    pub budget: Option<u64>,
    pub status: Option<&'a str>,
    pub cost: Option<u64>,
    pub children: Option<&'a [u64]>,
    pub wall_s: f64,
}

impl RunLog {
    pub fn disabled() -> Self {
        RunLog { out: None }
    }

    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(RunLog { out: Some(Mutex::new(BufWriter::new(File::create(path)?))) })
    }

    pub fn record(&self, record: &LogRecord<'_>) {
        if let Some(out) = &self.out {
            let mut out = out.lock().unwrap();
            let line = serde_json::to_string(record).expect("log record serializes");
            if let Err(e) = writeln!(out, "{line}") {
                log::warn!("cannot write run log: {e}");
            }
        }
    }

    pub fn flush(&self) {
        if let Some(out) = &self.out {
            let _ = out.lock().unwrap().flush();
        }
    }
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()
}

/// Writes the scatter tables: tuning cubes under default and learned
/// strategy, validation cubes, final-phase attempts, and (with a baseline)
/// commonly solved cubes.
pub fn write_csv_tables(dir: &Path, report: &RunReport, baseline: Option<&RunReport>) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let header = "cube_id,cost_default,cost_learned,phase";
    let mut written = Vec::new();
    let mut emit = |name: &str, rows: Vec<String>| -> std::io::Result<()> {
        write_csv(&dir.join(name), header, rows)?;
        written.push(name.to_string());
        Ok(())
    };

    if let Some(t) = &report.tuning {
        let rows = t
            .per_cube
            .iter()
            .map(|r| format!("{},{},{},tuning", r.cube_id, r.cost_default, r.cost_learned))
            .collect();
        emit("tuning_costs.csv", rows)?;
    }
    if let Some(v) = &report.validation {
        let rows = v
            .per_cube
            .iter()
            .map(|r| format!("{},{},{},validation", r.cube_id, r.cost_default, r.cost_learned))
            .collect();
        emit("validation_costs.csv", rows)?;
    }
    // first attempt (learned) against what the default fallback needed
    let attempts = report
        .solved_in(Phase::Solving)
        .map(|c| {
            let learned = c.attempts.first().map_or(0, |a| a.cost);
            let fallback = c.attempts.get(1).map_or(String::new(), |a| a.cost.to_string());
            format!("{},{},{},solving", c.id, fallback, learned)
        })
        .collect();
    emit("attempt_costs.csv", attempts)?;
    if let Some(base) = baseline {
        let rows = common_cube_costs(base, report)
            .into_iter()
            .map(|(id, d, l)| format!("{id},{d},{l},solving"))
            .collect();
        emit("common_costs.csv", rows)?;
    }
    Ok(written)
}
