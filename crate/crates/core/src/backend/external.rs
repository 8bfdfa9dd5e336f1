//! Adapter for solvers run as child processes.
//!
//! The command line is a whitespace-separated template. Inside any token,
//! `{formula_file}`, `{budget}` and `{param:NAME}` are substituted; a token
//! that mentions `{budget}` is dropped entirely for unlimited checks. A
//! token that is exactly `{params}` expands to one flag per non-default
//! parameter, `--NAME=VALUE` unless `param_flags` overrides it (the override
//! may use `{name}` and `{value}`).

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use super::{BackendError, Budget, SolveOutcome, SolveStatus, Solver};
use crate::formula::{write_dimacs, Cube, Formula};
use crate::strategy::{Strategy, StrategySpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalConfig {
    pub command: String,
    pub param_flags: BTreeMap<String, String>,
    pub sat_pattern: String,
    pub unsat_pattern: String,
    /// Must have exactly one capture group holding the cost.
    pub cost_pattern: String,
    /// Exit codes that mean "gave up" when no status line is printed.
    pub unknown_exit_codes: Vec<i32>,
    pub working_dir: Option<PathBuf>,
    /// Wall-clock limit per call in seconds.
    pub timeout_secs: Option<f64>,
    /// Where formula files go. Defaults to a fresh directory that lives as
    /// long as the solver.
    pub temp_dir: Option<PathBuf>,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            command: "kissat -q {formula_file} --conflicts={budget} {params}".into(),
            param_flags: BTreeMap::new(),
            sat_pattern: r"(?m)^s SATISFIABLE\s*$".into(),
            unsat_pattern: r"(?m)^s UNSATISFIABLE\s*$".into(),
            cost_pattern: r"(?m)^c conflicts:\s*(\d+)".into(),
            unknown_exit_codes: vec![0],
            working_dir: None,
            timeout_secs: None,
            temp_dir: None,
        }
    }
}

enum Workdir {
    Owned(TempDir),
    Given(PathBuf),
}

impl Workdir {
    fn path(&self) -> &Path {
        match self {
            Workdir::Owned(dir) => dir.path(),
            Workdir::Given(path) => path,
        }
    }
}

pub struct ExternalSolver {
    config: ExternalConfig,
    space: StrategySpace,
    sat: Regex,
    unsat: Regex,
    cost: Regex,
    workdir: Arc<Workdir>,
    calls: AtomicU64,
}

fn compile(pattern: &str) -> Result<Regex, BackendError> {
    Regex::new(pattern).map_err(|e| BackendError::Config(format!("bad pattern {pattern:?}: {e}")))
}

impl ExternalSolver {
    pub fn new(config: ExternalConfig, space: StrategySpace) -> Result<Self, BackendError> {
        let tokens: Vec<&str> = config.command.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(BackendError::Config("empty command".into()));
        }
        if !config.command.contains("{formula_file}") {
            return Err(BackendError::Config("command lacks {formula_file}".into()));
        }
        if !config.command.contains("{budget}") {
            return Err(BackendError::Config("command lacks {budget}".into()));
        }
        let generic = tokens.contains(&"{params}");
        let named = Regex::new(r"\{param:([^}]*)\}").unwrap();
        for cap in named.captures_iter(&config.command) {
            if !space.params().iter().any(|p| p.name() == &cap[1]) {
                return Err(BackendError::Config(format!("unknown parameter in template: {}", &cap[1])));
            }
        }
        for p in space.params() {
            if !generic && !config.command.contains(&format!("{{param:{}}}", p.name())) {
                return Err(BackendError::Config(format!("parameter {} has no placeholder", p.name())));
            }
        }
        for name in config.param_flags.keys() {
            if !space.params().iter().any(|p| p.name() == name) {
                return Err(BackendError::Config(format!("flag override for unknown parameter {name}")));
            }
        }
        let cost = compile(&config.cost_pattern)?;
        if cost.captures_len() != 2 {
            return Err(BackendError::Config("cost pattern needs exactly one capture group".into()));
        }
        let workdir = match &config.temp_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Workdir::Given(dir.clone())
            }
            None => Workdir::Owned(tempfile::Builder::new().prefix("cubetune-").tempdir()?),
        };
        Ok(ExternalSolver {
            sat: compile(&config.sat_pattern)?,
            unsat: compile(&config.unsat_pattern)?,
            cost,
            config,
            space,
            workdir: Arc::new(workdir),
            calls: AtomicU64::new(0),
        })
    }

    pub fn workdir(&self) -> &Path {
        self.workdir.path()
    }

    /// Argument vector for a call, program first.
    pub fn argv(&self, formula_file: &Path, strategy: &Strategy, budget: Budget) -> Result<Vec<String>, BackendError> {
        if !self.space.contains(strategy) {
            return Err(BackendError::Decode("strategy not in space".into()));
        }
        let assignment = self.space.assignment(strategy);
        let file = formula_file.to_string_lossy();
        let mut argv = Vec::new();
        for token in self.config.command.split_whitespace() {
            if token == "{params}" {
                for (name, value) in self.space.non_default(strategy) {
                    let flag = match self.config.param_flags.get(name) {
                        Some(t) => t.replace("{name}", name).replace("{value}", value),
                        None => format!("--{name}={value}"),
                    };
                    argv.extend(flag.split_whitespace().map(str::to_owned));
                }
                continue;
            }
            let mut arg = token.replace("{formula_file}", &file);
            if arg.contains("{budget}") {
                match budget.limit() {
                    Some(b) => arg = arg.replace("{budget}", &b.to_string()),
                    None => continue,
                }
            }
            for (name, value) in &assignment {
                arg = arg.replace(&format!("{{param:{name}}}"), value);
            }
            argv.push(arg);
        }
        Ok(argv)
    }

    fn run(&self, argv: &[String], timeout: Option<Duration>) -> Result<(String, Option<i32>), BackendError> {
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..]).stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
        if let Some(dir) = &self.config.working_dir {
            cmd.current_dir(dir);
        }
        let mut child = cmd
            .spawn()
            .map_err(|e| BackendError::SpawnFailure(format!("{}: {e}", argv[0])))?;
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
        });

        let start = Instant::now();
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if let Some(limit) = timeout {
                if start.elapsed() >= limit {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(BackendError::Timeout(limit));
                }
            }
            thread::sleep(Duration::from_millis(2));
        };
        let output = out_reader.join().unwrap_or_default();
        let _ = err_reader.join();
        Ok((output, status.code()))
    }

    fn classify(&self, formula: &Formula, output: &str, code: Option<i32>, budget: Budget) -> Result<SolveOutcome, BackendError> {
        let sat = self.sat.is_match(output);
        let unsat = self.unsat.is_match(output);
        let status = match (sat, unsat) {
            (true, true) => return Err(BackendError::UnparseableOutput("both status lines present".into())),
            (true, false) => SolveStatus::Sat(parse_model(formula, output)?),
            (false, true) => SolveStatus::Unsat,
            (false, false) => {
                let known = code.is_some_and(|c| self.config.unknown_exit_codes.contains(&c));
                return match budget.limit() {
                    Some(b) if known => Ok(SolveOutcome::new(SolveStatus::Unknown, b)),
                    _ => Err(BackendError::UnparseableOutput(format!("no status line (exit code {code:?})"))),
                };
            }
        };
        let cost: u64 = self
            .cost
            .captures(output)
            .and_then(|c| c[1].parse().ok())
            .ok_or_else(|| BackendError::UnparseableOutput("no cost in output".into()))?;
        let cost = budget.limit().map_or(cost, |b| cost.min(b));
        Ok(SolveOutcome::new(status, cost))
    }
}

fn parse_model(formula: &Formula, output: &str) -> Result<Vec<bool>, BackendError> {
    let mut model = vec![false; formula.num_vars()];
    for line in output.lines().filter_map(|l| l.strip_prefix("v ")) {
        for token in line.split_whitespace() {
            let lit: i64 = token
                .parse()
                .map_err(|_| BackendError::UnparseableOutput(format!("bad model token {token:?}")))?;
            let var = lit.unsigned_abs() as usize;
            if var >= 1 && var <= model.len() {
                model[var - 1] = lit > 0;
            }
        }
    }
    if !formula.is_satisfied_by(&model) {
        return Err(BackendError::UnparseableOutput("reported model does not satisfy the formula".into()));
    }
    Ok(model)
}

impl Solver for ExternalSolver {
    fn check(&self, formula: &Formula, cube: &Cube, strategy: &Strategy, budget: Budget) -> Result<SolveOutcome, BackendError> {
        let conjoined = formula.conjoin(cube);
        let id = self.calls.fetch_add(1, Ordering::Relaxed);
        let path = self.workdir().join(format!("check-{}-{id}.cnf", std::process::id()));
        std::fs::write(&path, write_dimacs(&conjoined))?;
        let argv = self.argv(&path, strategy, budget)?;
        let timeout = self.config.timeout_secs.map(Duration::from_secs_f64);
        let result = self
            .run(&argv, timeout)
            .and_then(|(output, code)| self.classify(&conjoined, &output, code, budget));
        match &result {
            Ok(_) => {
                let _ = std::fs::remove_file(&path);
            }
            Err(e) => log::warn!("external check failed ({e}); formula kept at {}", path.display()),
        }
        result
    }
}
