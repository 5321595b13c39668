//! Learner performance tracking and task generation.
//!
//! Each action schema carries a non-negative score: using it correctly
//! without a hint raises the score, a failed or hinted use lowers it (never
//! below zero). A score of zero means the learner does not know the schema
//! yet. The adaptive generator runs a cost-ordered search from the initial
//! state where each edge costs the score of its schema, and stops at the
//! first action the learner does not know, or at a depth cap.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{Domain, GroundedTask};
use crate::state::{Atom, GroundAction, State};

/// Depth cap of the adaptive generator.
pub const DEFAULT_MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurriculumError {
    #[error("unknown action schema '{0}'")]
    UnknownSchema(String),
    #[error("no action is applicable in the initial state")]
    NoApplicableAction,
    #[error("search space exhausted before any task could be generated")]
    Exhausted,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error(
        "no state lies exactly {requested} step(s) from the initial state; maximum reachable depth is {max_depth}"
    )]
    DepthUnreachable { requested: usize, max_depth: usize },
    #[error("test task length must be at least 2, got {0}")]
    TestTaskTooShort(usize),
}

/// Per-schema proficiency scores.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PerformanceMap {
    costs: BTreeMap<String, u32>,
}

impl PerformanceMap {
    /// Every schema of `domain` at zero.
    pub fn cold_start(domain: &Domain) -> Self {
        PerformanceMap {
            costs: domain.schemas.iter().map(|s| (s.name.clone(), 0)).collect(),
        }
    }

    pub fn from_costs(costs: impl IntoIterator<Item = (String, u32)>) -> Self {
        PerformanceMap {
            costs: costs.into_iter().collect(),
        }
    }

    pub fn get(&self, schema: &str) -> Option<u32> {
        self.costs.get(schema).copied()
    }

    pub fn set(&mut self, schema: &str, cost: u32) -> Result<(), CurriculumError> {
        let slot = self
            .costs
            .get_mut(schema)
            .ok_or_else(|| CurriculumError::UnknownSchema(schema.to_string()))?;
        *slot = cost;
        Ok(())
    }

    pub fn is_known(&self, schema: &str) -> bool {
        self.get(schema).is_some_and(|c| c > 0)
    }

    pub fn costs(&self) -> &BTreeMap<String, u32> {
        &self.costs
    }

    /// Score update for one use of `schema`; returns the new score.
    pub fn record_use(&mut self, schema: &str, applicable: bool, hinted: bool) -> Result<u32, CurriculumError> {
        let slot = self
            .costs
            .get_mut(schema)
            .ok_or_else(|| CurriculumError::UnknownSchema(schema.to_string()))?;
        *slot = if applicable && !hinted {
            slot.saturating_add(1)
        } else {
            slot.saturating_sub(1)
        };
        Ok(*slot)
    }
}

/// Score update for the learner adding `action` while in `state`.
pub fn update_performance(
    map: &mut PerformanceMap,
    state: &State,
    action: &GroundAction,
    hinted: bool,
) -> Result<u32, CurriculumError> {
    map.record_use(&action.schema, state.is_applicable(action), hinted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Adaptive,
    Random,
    Preset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The schema had score zero.
    UnknownAction,
    DepthCap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub schema: String,
    pub depth: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedTask {
    /// Atoms of the target state that are false initially.
    pub goal: Vec<Atom>,
    pub provenance: Provenance,
    pub trigger: Option<Trigger>,
    pub reference_plan_length: usize,
    /// Action sequence from the initial state to `target`.
    pub witness: Vec<GroundAction>,
    pub target: State,
}

/// A fringe pop of the adaptive search, for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FringePop {
    pub cost: u64,
    pub depth: usize,
    pub seq: usize,
}

struct SearchNode {
    state: State,
    depth: usize,
    parent: Option<(usize, usize)>,
}

fn witness(task: &GroundedTask, nodes: &[SearchNode], mut id: usize, last: usize) -> Vec<GroundAction> {
    let mut out = vec![task.actions()[last].clone()];
    while let Some((parent, action)) = nodes[id].parent {
        out.push(task.actions()[action].clone());
        id = parent;
    }
    out.reverse();
    out
}

fn delta_goal(init: &State, target: &State) -> Vec<Atom> {
    target.added_since(init)
}

pub fn generate_adaptive_task(
    map: &PerformanceMap,
    task: &GroundedTask,
    max_depth: usize,
) -> Result<GeneratedTask, CurriculumError> {
    generate_adaptive_task_traced(map, task, max_depth).map(|(t, _)| t)
}

/// Adaptive generation that also returns the sequence of fringe pops.
///
/// The fringe is a min-priority queue on cumulative score, ties broken by
/// insertion order. A successor that was already visited is skipped before
/// the stop test, so a generated task can never be solved by a shorter path
/// through states the search has already seen.
pub fn generate_adaptive_task_traced(
    map: &PerformanceMap,
    task: &GroundedTask,
    max_depth: usize,
) -> Result<(GeneratedTask, Vec<FringePop>), CurriculumError> {
    if max_depth == 0 {
        return Err(CurriculumError::ZeroDepth);
    }
    let init = task.init();
    if !task.actions().iter().any(|a| init.is_applicable(a)) {
        return Err(CurriculumError::NoApplicableAction);
    }
    let costs: Vec<u64> = task
        .actions()
        .iter()
        .map(|a| {
            map.get(&a.schema)
                .map(u64::from)
                .ok_or_else(|| CurriculumError::UnknownSchema(a.schema.clone()))
        })
        .collect::<Result<_, _>>()?;

    let mut nodes = vec![SearchNode {
        state: init.clone(),
        depth: 0,
        parent: None,
    }];
    let mut visited: HashSet<State> = HashSet::from([init.clone()]);
    let mut fringe = BinaryHeap::from([Reverse((0u64, 0usize))]);
    let mut pops = Vec::new();

    while let Some(Reverse((cost, id))) = fringe.pop() {
        pops.push(FringePop {
            cost,
            depth: nodes[id].depth,
            seq: id,
        });
        for (ai, action) in task.actions().iter().enumerate() {
            let state = &nodes[id].state;
            if !state.is_applicable(action) {
                continue;
            }
            let next = state.apply_unchecked(action);
            if visited.contains(&next) {
                continue;
            }
            let next_cost = cost + costs[ai];
            let next_depth = nodes[id].depth + 1;
            let reason = if costs[ai] == 0 {
                Some(StopReason::UnknownAction)
            } else if next_depth >= max_depth {
                Some(StopReason::DepthCap)
            } else {
                None
            };
            if let Some(reason) = reason {
                let witness = witness(task, &nodes, id, ai);
                let generated = GeneratedTask {
                    goal: delta_goal(init, &next),
                    provenance: Provenance::Adaptive,
                    trigger: Some(Trigger {
                        schema: action.schema.clone(),
                        depth: next_depth,
                        reason,
                    }),
                    reference_plan_length: witness.len(),
                    witness,
                    target: next,
                };
                return Ok((generated, pops));
            }
            visited.insert(next.clone());
            let nid = nodes.len();
            nodes.push(SearchNode {
                state: next,
                depth: next_depth,
                parent: Some((id, ai)),
            });
            // ids grow with insertion order and break cost ties
            fringe.push(Reverse((next_cost, nid)));
        }
    }
    Err(CurriculumError::Exhausted)
}

/// Equal-cost generator: breadth-first to exactly `depth` levels, then a
/// seeded uniform pick among the states first reached at that level.
pub fn generate_random_task(task: &GroundedTask, depth: usize, seed: u64) -> Result<GeneratedTask, CurriculumError> {
    if depth == 0 {
        return Err(CurriculumError::ZeroDepth);
    }
    let init = task.init().clone();
    let mut nodes = vec![SearchNode {
        state: init.clone(),
        depth: 0,
        parent: None,
    }];
    let mut seen: HashMap<State, usize> = HashMap::from([(init.clone(), 0)]);
    let mut level: Vec<usize> = vec![0];
    for d in 1..=depth {
        let mut next_level = Vec::new();
        for &id in &level {
            for (ai, action) in task.actions().iter().enumerate() {
                if !nodes[id].state.is_applicable(action) {
                    continue;
                }
                let next = nodes[id].state.apply_unchecked(action);
                if seen.contains_key(&next) {
                    continue;
                }
                let nid = nodes.len();
                seen.insert(next.clone(), nid);
                nodes.push(SearchNode {
                    state: next,
                    depth: d,
                    parent: Some((id, ai)),
                });
                next_level.push(nid);
            }
        }
        if next_level.is_empty() {
            return Err(CurriculumError::DepthUnreachable {
                requested: depth,
                max_depth: d - 1,
            });
        }
        level = next_level;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = level[rng.random_range(0..level.len())];
    let (parent, last) = nodes[pick].parent.expect("depth >= 1");
    let witness = witness(task, &nodes, parent, last);
    let target = nodes[pick].state.clone();
    Ok(GeneratedTask {
        goal: delta_goal(&init, &target),
        provenance: Provenance::Random,
        trigger: None,
        reference_plan_length: witness.len(),
        witness,
        target,
    })
}

/// Depth cap for training tasks: half the test task length, rounded up.
pub fn training_cap(test_task_length: usize, max_depth: usize) -> usize {
    test_task_length.div_ceil(2).min(max_depth)
}

/// A series of adaptive training tasks, each at most half as long as the
/// test task. Between tasks the learner is assumed to have solved the
/// previous one by following its witness without hints.
pub fn training_task_series(
    map: &PerformanceMap,
    task: &GroundedTask,
    test_task_length: usize,
    count: usize,
    max_depth: usize,
) -> Result<Vec<GeneratedTask>, CurriculumError> {
    if test_task_length < 2 {
        return Err(CurriculumError::TestTaskTooShort(test_task_length));
    }
    let cap = training_cap(test_task_length, max_depth);
    let mut learner = map.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let generated = generate_adaptive_task(&learner, task, cap)?;
        let mut state = task.init().clone();
        for a in &generated.witness {
            update_performance(&mut learner, &state, a, false)?;
            state = state.apply_unchecked(a);
        }
        out.push(generated);
    }
    Ok(out)
}
