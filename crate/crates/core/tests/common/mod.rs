//! Reference implementations used as test oracles. They work on lifted
//! schemas and string atoms only, sharing nothing with the grounder or the
//! encoded state representation beyond the parsed model.
#![allow(dead_code)]

pub mod stub_llm;

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::path::PathBuf;

use plantutor_core::pddl::{ActionSchema, Domain, GroundAtom, LiftedAtom, Problem};
use plantutor_core::EnvironmentBundle;
use rand::Rng;

pub type Facts = BTreeSet<GroundAtom>;
pub type Call = (String, Vec<String>);

pub fn env_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../env")
}

pub fn bundle(name: &str) -> EnvironmentBundle {
    EnvironmentBundle::load(env_root().join(name)).expect("bundled environment loads")
}

fn bind(atoms: &[LiftedAtom], schema: &ActionSchema, args: &[String]) -> Vec<GroundAtom> {
    atoms
        .iter()
        .map(|a| GroundAtom {
            predicate: a.predicate.clone(),
            args: a
                .args
                .iter()
                .map(|v| {
                    let i = schema.params.iter().position(|p| &p.name == v).expect("bound variable");
                    args[i].clone()
                })
                .collect(),
        })
        .collect()
}

/// Every type-correct argument tuple for `schema`.
pub fn typed_calls(domain: &Domain, problem: &Problem, schema: &ActionSchema) -> Vec<Vec<String>> {
    let mut tuples: Vec<Vec<String>> = vec![vec![]];
    for p in &schema.params {
        let candidates: Vec<&String> = problem
            .objects
            .iter()
            .filter(|o| domain.is_subtype(&o.ty, &p.ty))
            .map(|o| &o.name)
            .collect();
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                candidates.iter().map(move |c| {
                    let mut t = t.clone();
                    t.push((*c).clone());
                    t
                })
            })
            .collect();
    }
    tuples
}

pub fn unmet(domain: &Domain, facts: &Facts, call: &Call) -> BTreeSet<GroundAtom> {
    let schema = domain.schema(&call.0).expect("known schema");
    bind(&schema.precondition, schema, &call.1)
        .into_iter()
        .filter(|a| !facts.contains(a))
        .collect()
}

/// Delete effects first, then add effects.
pub fn apply(domain: &Domain, facts: &Facts, call: &Call) -> Facts {
    let schema = domain.schema(&call.0).expect("known schema");
    let mut next = facts.clone();
    for a in bind(&schema.del_effects, schema, &call.1) {
        next.remove(&a);
    }
    next.extend(bind(&schema.add_effects, schema, &call.1));
    next
}

/// Type-correct instantiations whose static preconditions hold initially.
pub fn static_feasible_calls(domain: &Domain, problem: &Problem) -> Vec<Call> {
    let statics = domain.static_predicates();
    let mut out = Vec::new();
    for schema in &domain.schemas {
        for args in typed_calls(domain, problem, schema) {
            let call = (schema.name.clone(), args);
            let ok = unmet(domain, &problem.init, &call)
                .iter()
                .all(|a| !statics.contains(&a.predicate));
            if ok {
                out.push(call);
            }
        }
    }
    out
}

pub fn applicable_calls(domain: &Domain, calls: &[Call], facts: &Facts) -> Vec<Call> {
    calls
        .iter()
        .filter(|c| unmet(domain, facts, c).is_empty())
        .cloned()
        .collect()
}

pub fn goal_holds(problem: &Problem, facts: &Facts) -> bool {
    problem.goal.iter().all(|g| facts.contains(g))
}

/// Exhaustive breadth-first search; the shortest plan length to the goal.
pub fn bfs_plan_length(domain: &Domain, problem: &Problem) -> Option<usize> {
    let calls = static_feasible_calls(domain, problem);
    let mut seen: HashSet<Facts> = HashSet::from([problem.init.clone()]);
    let mut queue = VecDeque::from([(problem.init.clone(), 0usize)]);
    while let Some((facts, d)) = queue.pop_front() {
        if goal_holds(problem, &facts) {
            return Some(d);
        }
        for c in applicable_calls(domain, &calls, &facts) {
            let next = apply(domain, &facts, &c);
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// All states reachable within `depth` steps.
pub fn reachable_states(domain: &Domain, problem: &Problem, depth: usize) -> HashSet<Facts> {
    let calls = static_feasible_calls(domain, problem);
    let mut seen: HashSet<Facts> = HashSet::from([problem.init.clone()]);
    let mut frontier = vec![problem.init.clone()];
    for _ in 0..depth {
        let mut next_frontier = Vec::new();
        for facts in &frontier {
            for c in applicable_calls(domain, &calls, facts) {
                let next = apply(domain, facts, &c);
                if seen.insert(next.clone()) {
                    next_frontier.push(next);
                }
            }
        }
        frontier = next_frontier;
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveReport {
    pub valid: Vec<bool>,
    pub unmet: Vec<BTreeSet<GroundAtom>>,
    pub final_state: Facts,
    /// Goal test on the state after the valid prefix.
    pub goal_achieved: bool,
}

/// Skip-and-continue interpretation: failing steps leave the state unchanged.
pub fn naive_validate(domain: &Domain, problem: &Problem, plan: &[Call]) -> NaiveReport {
    let mut facts = problem.init.clone();
    let mut prefix: Option<Facts> = None;
    let mut report = NaiveReport {
        valid: vec![],
        unmet: vec![],
        final_state: Facts::new(),
        goal_achieved: false,
    };
    for call in plan {
        let missing = unmet(domain, &facts, call);
        if missing.is_empty() {
            facts = apply(domain, &facts, call);
            report.valid.push(true);
        } else {
            prefix.get_or_insert_with(|| facts.clone());
            report.valid.push(false);
        }
        report.unmet.push(missing);
    }
    report.goal_achieved = goal_holds(problem, prefix.as_ref().unwrap_or(&facts));
    report.final_state = facts;
    report
}

/// Random plans: with probability 0.6 a step is applicable in the naive
/// working state, otherwise it is any type-correct call.
pub struct PlanSampler<'a> {
    domain: &'a Domain,
    problem: &'a Problem,
    feasible: Vec<Call>,
    all: Vec<Call>,
}

impl<'a> PlanSampler<'a> {
    pub fn new(domain: &'a Domain, problem: &'a Problem) -> Self {
        let mut all = Vec::new();
        for schema in &domain.schemas {
            for args in typed_calls(domain, problem, schema) {
                all.push((schema.name.clone(), args));
            }
        }
        PlanSampler {
            domain,
            problem,
            feasible: static_feasible_calls(domain, problem),
            all,
        }
    }

    pub fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<Call> {
        let mut facts = self.problem.init.clone();
        let mut plan = Vec::with_capacity(len);
        for _ in 0..len {
            let applicable = applicable_calls(self.domain, &self.feasible, &facts);
            let call = if !applicable.is_empty() && rng.random_bool(0.6) {
                applicable[rng.random_range(0..applicable.len())].clone()
            } else {
                self.all[rng.random_range(0..self.all.len())].clone()
            };
            if unmet(self.domain, &facts, &call).is_empty() {
                facts = apply(self.domain, &facts, &call);
            }
            plan.push(call);
        }
        plan
    }
}
