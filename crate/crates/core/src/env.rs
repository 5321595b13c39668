//! Bundled environments: domain, preset problems with reference plans, and
//! the natural-language mapping, loaded from
//! `env/<name>/{domain.pddl, problems/*.pddl, semantics.map, description.md, assets/}`.
//! A preset `problems/<id>.pddl` must come with `problems/<id>.plan`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::pddl::{ground, parse_domain, parse_problem, Domain, GroundError, GroundedTask, ParseError, Problem};
use crate::semantics::{SemanticMap, SemanticsError};
use crate::validator::{validate, Plan, PlanParseError, UnresolvableStep};

#[derive(Debug, Error)]
pub enum BundleError {
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
    #[error("{}: reference plan {problem}", path.display())]
    ReferencePlan { path: PathBuf, problem: &'static str },
    #[error("{}: bundle has no preset problems", path.display())]
    NoPresets { path: PathBuf },
    #[error("duplicate environment '{0}'")]
    Duplicate(String),
}

fn read(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub id: String,
    pub problem_text: String,
    pub problem: Problem,
    pub task: GroundedTask,
    pub reference_plan: Plan,
}

#[derive(Debug, Clone)]
pub struct EnvironmentBundle {
    pub root: PathBuf,
    pub domain_text: String,
    pub domain: Domain,
    /// Sorted by id; the first one is the base for generated tasks.
    pub presets: Vec<Preset>,
    pub semantics: SemanticMap,
    pub description: String,
    pub assets: Vec<PathBuf>,
}

impl EnvironmentBundle {
    /// Loads and cross-validates a bundle directory.
    pub fn load(root: impl AsRef<Path>) -> Result<Self, BundleError> {
        let root = root.as_ref();
        let domain_path = root.join("domain.pddl");
        let domain_text = read(&domain_path)?;
        let domain = parse_domain(&domain_text).map_err(|error| BundleError::Parse {
            path: domain_path.clone(),
            error,
        })?;

        let map_path = root.join("semantics.map");
        let semantics = SemanticMap::parse(&read(&map_path)?)
            .and_then(|m| m.check_against(&domain).map(|_| m))
            .map_err(|error| BundleError::Semantics {
                path: map_path.clone(),
                error,
            })?;

        let description = read(&root.join("description.md"))?;

        let problems_dir = root.join("problems");
        let mut problem_files: Vec<PathBuf> = fs::read_dir(&problems_dir)
            .map_err(|source| BundleError::Io {
                path: problems_dir.clone(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pddl"))
            .collect();
        problem_files.sort();
        if problem_files.is_empty() {
            return Err(BundleError::NoPresets { path: problems_dir });
        }

        let mut presets = Vec::with_capacity(problem_files.len());
        for path in problem_files {
            presets.push(load_preset(&domain, &path)?);
        }

        let mut assets: Vec<PathBuf> = fs::read_dir(root.join("assets"))
            .map(|rd| {
                rd.filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
                    .collect()
            })
            .unwrap_or_default();
        assets.sort();

        Ok(EnvironmentBundle {
            root: root.to_path_buf(),
            domain_text,
            domain,
            presets,
            semantics,
            description,
            assets,
        })
    }

    pub fn name(&self) -> &str {
        &self.domain.name
    }

    pub fn preset(&self, id: &str) -> Option<&Preset> {
        self.presets.iter().find(|p| p.id == id)
    }

    /// The task that generated goals are built on.
    pub fn base(&self) -> &Preset {
        &self.presets[0]
    }

    /// First heading of the description, or the domain name.
    pub fn title(&self) -> String {
        self.description
            .lines()
            .find_map(|l| l.strip_prefix("# "))
            .map(|t| t.trim().to_string())
            .unwrap_or_else(|| self.domain.name.clone())
    }
}

fn load_preset(domain: &Domain, path: &Path) -> Result<Preset, BundleError> {
    let problem_text = read(path)?;
    let problem = parse_problem(&problem_text, domain).map_err(|error| BundleError::Parse {
        path: path.to_path_buf(),
        error,
    })?;
    let task = ground(domain, &problem).map_err(|error| BundleError::Ground {
        path: path.to_path_buf(),
        error,
    })?;
    let plan_path = path.with_extension("plan");
    let reference_plan = Plan::parse(&read(&plan_path)?).map_err(|error| BundleError::PlanSyntax {
        path: plan_path.clone(),
        error: Box::new(error),
    })?;
    let report = validate(&task, &reference_plan).map_err(|error| BundleError::PlanSteps {
        path: plan_path.clone(),
        error: Box::new(error),
    })?;
    if !report.is_valid {
        return Err(BundleError::ReferencePlan {
            path: plan_path,
            problem: "is not executable",
        });
    }
    if !report.goal_achieved {
        return Err(BundleError::ReferencePlan {
            path: plan_path,
            problem: "does not reach the goal",
        });
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Preset {
        id,
        problem_text,
        problem,
        task,
        reference_plan,
    })
}

/// All loaded environments by domain name.
#[derive(Debug, Clone, Default)]
pub struct EnvRegistry {
    bundles: BTreeMap<String, Arc<EnvironmentBundle>>,
}

impl EnvRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads every subdirectory of `dir` as a bundle; any failure aborts.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, BundleError> {
        let dir = dir.as_ref();
        let mut roots: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|source| BundleError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        roots.sort();
        let mut reg = EnvRegistry::new();
        for root in roots {
            reg.register(EnvironmentBundle::load(&root)?)?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, bundle: EnvironmentBundle) -> Result<(), BundleError> {
        let name = bundle.name().to_string();
        if self.bundles.contains_key(&name) {
            return Err(BundleError::Duplicate(name));
        }
        self.bundles.insert(name, Arc::new(bundle));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<EnvironmentBundle>> {
        self.bundles.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<EnvironmentBundle>> {
        self.bundles.values()
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}
