//! Offline commands behind the `plantutor` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plantutor_core::curriculum::{generate_adaptive_task, generate_random_task, CurriculumError, GeneratedTask};
use plantutor_core::explainer::explain_failure;
use plantutor_core::pddl::{ground, parse_domain, parse_problem, GroundError, GroundedTask, ParseError};
use plantutor_core::semantics::{SemanticMap, SemanticsError};
use plantutor_core::session::{export_csv, load_sessions, SessionError};
use plantutor_core::validator::{validate, Plan, PlanParseError, StepStatus, UnresolvableStep};
use plantutor_core::PerformanceMap;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error("{}: {error}", path.display())]
    Ground { path: PathBuf, error: GroundError },
    #[error("{}: {error}", path.display())]
    Semantics { path: PathBuf, error: SemanticsError },
    #[error("{}: {error}", path.display())]
    PlanSyntax { path: PathBuf, error: Box<PlanParseError> },
    #[error("{}: {error}", path.display())]
    PlanSteps {
        path: PathBuf,
        error: Box<UnresolvableStep>,
    },
    #[error("{}: {error}", path.display())]
    Costs { path: PathBuf, error: String },
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Sessions(#[from] SessionError),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A grounded task plus the phrasing used to explain it.
pub struct LoadedTask {
    pub task: GroundedTask,
    pub semantics: SemanticMap,
}

/// Parses and grounds a domain/problem pair. Templates come from
/// `semantics.map` next to the domain file when present.
pub fn load_task(domain_file: &Path, problem_file: &Path) -> Result<LoadedTask, CliError> {
    let domain = parse_domain(&read(domain_file)?).map_err(|error| CliError::Parse {
        path: domain_file.to_path_buf(),
        error,
    })?;
    let problem = parse_problem(&read(problem_file)?, &domain).map_err(|error| CliError::Parse {
        path: problem_file.to_path_buf(),
        error,
    })?;
    let task = ground(&domain, &problem).map_err(|error| CliError::Ground {
        path: problem_file.to_path_buf(),
        error,
    })?;
    let map_path = domain_file.with_file_name("semantics.map");
    let semantics = if map_path.is_file() {
        SemanticMap::parse(&read(&map_path)?)
            .and_then(|m| m.check_against(&domain).map(|_| m))
            .map_err(|error| CliError::Semantics { path: map_path, error })?
    } else {
        SemanticMap::default()
    };
    Ok(LoadedTask { task, semantics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Solved,
    ValidUnsolved,
    Invalid,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Solved => 0,
            Verdict::ValidUnsolved => 1,
            Verdict::Invalid => 2,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckFailure {
    pub step: usize,
    pub action: String,
    pub unmet: Vec<String>,
    pub tldr: String,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub is_valid: bool,
    pub goal_achieved: bool,
    pub steps: Vec<StepStatus>,
    pub failures: Vec<CheckFailure>,
}

impl CheckReport {
    pub fn verdict(&self) -> Verdict {
        match (self.is_valid, self.goal_achieved) {
            (true, true) => Verdict::Solved,
            (true, false) => Verdict::ValidUnsolved,
            (false, _) => Verdict::Invalid,
        }
    }

    pub fn write_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        for f in &self.failures {
            writeln!(out, "{}", f.tldr)?;
        }
        let verdict = match self.verdict() {
            Verdict::Solved => "solved",
            Verdict::ValidUnsolved => "valid, goal not achieved",
            Verdict::Invalid => "invalid",
        };
        writeln!(
            out,
            "plan: {} step(s), {} failing, {verdict}",
            self.steps.len(),
            self.failures.len()
        )
    }
}

pub fn check(domain_file: &Path, problem_file: &Path, plan_file: &Path) -> Result<CheckReport, CliError> {
    let loaded = load_task(domain_file, problem_file)?;
    let plan = Plan::parse(&read(plan_file)?).map_err(|error| CliError::PlanSyntax {
        path: plan_file.to_path_buf(),
        error: Box::new(error),
    })?;
    let report = validate(&loaded.task, &plan).map_err(|error| CliError::PlanSteps {
        path: plan_file.to_path_buf(),
        error: Box::new(error),
    })?;
    let failures = report
        .failures
        .iter()
        .filter_map(|f| {
            let exp = explain_failure(f, &loaded.semantics, &loaded.task).ok()?;
            Some(CheckFailure {
                step: exp.step_index,
                action: f.action.label(),
                unmet: f.unmet.iter().map(|a| loaded.task.decode(a).to_string()).collect(),
                tldr: exp.tldr,
            })
        })
        .collect();
    Ok(CheckReport {
        is_valid: report.is_valid,
        goal_achieved: report.goal_achieved,
        steps: report.step_status,
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GenMode {
    Adaptive,
    Random,
}

#[derive(Debug, Serialize)]
pub struct GenReport {
    pub goal: Vec<String>,
    pub provenance: plantutor_core::Provenance,
    pub trigger: Option<plantutor_core::Trigger>,
    pub reference_plan_length: usize,
    pub witness: Vec<String>,
}

impl GenReport {
    fn new(task: &GroundedTask, generated: GeneratedTask) -> Self {
        GenReport {
            goal: generated.goal.iter().map(|a| task.decode(a).to_string()).collect(),
            provenance: generated.provenance,
            trigger: generated.trigger,
            reference_plan_length: generated.reference_plan_length,
            witness: generated.witness.iter().map(|a| a.label()).collect(),
        }
    }

    /// Goal atoms, one per line.
    pub fn write_text(&self, out: &mut impl Write) -> std::io::Result<()> {
        for g in &self.goal {
            writeln!(out, "{g}")?;
        }
        Ok(())
    }
}

/// Reads a JSON object of schema scores; unlisted schemas stay at zero.
pub fn load_costs(path: &Path, task: &GroundedTask) -> Result<PerformanceMap, CliError> {
    let bad = |error: String| CliError::Costs {
        path: path.to_path_buf(),
        error,
    };
    let listed: BTreeMap<String, u32> = serde_json::from_str(&read(path)?).map_err(|e| bad(e.to_string()))?;
    let mut map = PerformanceMap::cold_start(task.domain());
    for (schema, cost) in listed {
        map.set(&schema.to_lowercase(), cost).map_err(|e| bad(e.to_string()))?;
    }
    Ok(map)
}

pub struct GenOptions<'a> {
    pub mode: GenMode,
    pub depth: usize,
    pub seed: u64,
    pub costs_file: Option<&'a Path>,
}

pub fn gen(domain_file: &Path, problem_file: &Path, opts: &GenOptions<'_>) -> Result<GenReport, CliError> {
    let loaded = load_task(domain_file, problem_file)?;
    let task = &loaded.task;
    let generated = match opts.mode {
        GenMode::Adaptive => {
            let map = match opts.costs_file {
                Some(p) => load_costs(p, task)?,
                None => PerformanceMap::cold_start(task.domain()),
            };
            generate_adaptive_task(&map, task, opts.depth)?
        }
        GenMode::Random => generate_random_task(task, opts.depth, opts.seed)?,
    };
    Ok(GenReport::new(task, generated))
}

/// Writes the per-task CSV for every session under `data_dir`.
pub fn export(data_dir: &Path, out: &mut impl Write) -> Result<usize, CliError> {
    if !data_dir.is_dir() {
        return Err(CliError::Io {
            path: data_dir.to_path_buf(),
            source: std::io::ErrorKind::NotFound.into(),
        });
    }
    let sessions = load_sessions(data_dir)?;
    export_csv(&sessions, &mut *out)?;
    Ok(sessions.len())
}
