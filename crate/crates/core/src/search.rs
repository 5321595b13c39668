//! Forward state-space search over a grounded task.
//!
//! Greedy best-first search ordered by heuristic value, then path cost,
//! then insertion order, with duplicate detection on generated states. With
//! the zero heuristic the ordering collapses to uniform-cost search, which is
//! breadth-first on unit-cost actions and therefore returns shortest plans.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use crate::pddl::GroundedTask;
use crate::state::{Atom, GroundAction, State};

pub trait Heuristic {
    /// Estimated remaining cost, or `None` when the goal is provably unreachable.
    fn estimate(&self, state: &State) -> Option<u64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn estimate(&self, _state: &State) -> Option<u64> {
        Some(0)
    }
}

/// h_add: the delete relaxation with additive goal-cost aggregation.
#[derive(Debug, Clone)]
pub struct AdditiveHeuristic {
    atom_ids: HashMap<Atom, usize>,
    actions: Vec<(Vec<usize>, Vec<usize>)>,
    goal: Vec<usize>,
}

impl AdditiveHeuristic {
    pub fn new(task: &GroundedTask) -> Self {
        let mut atom_ids = HashMap::new();
        let mut id = |a: &Atom| -> usize {
            let next = atom_ids.len();
            *atom_ids.entry(a.clone()).or_insert(next)
        };
        let actions = task
            .actions()
            .iter()
            .map(|a| (a.pre.iter().map(&mut id).collect(), a.add.iter().map(&mut id).collect()))
            .collect();
        let goal = task.goal().iter().map(&mut id).collect();
        AdditiveHeuristic {
            atom_ids,
            actions,
            goal,
        }
    }
}

impl Heuristic for AdditiveHeuristic {
    fn estimate(&self, state: &State) -> Option<u64> {
        const INF: u64 = u64::MAX;
        let mut cost = vec![INF; self.atom_ids.len()];
        for a in state.atoms() {
            if let Some(&i) = self.atom_ids.get(a) {
                cost[i] = 0;
            }
        }
        let mut changed = true;
        while changed {
            changed = false;
            for (pre, add) in &self.actions {
                let mut c: u64 = 1;
                let mut reachable = true;
                for &p in pre {
                    if cost[p] == INF {
                        reachable = false;
                        break;
                    }
                    c = c.saturating_add(cost[p]);
                }
                if !reachable {
                    continue;
                }
                for &q in add {
                    if c < cost[q] {
                        cost[q] = c;
                        changed = true;
                    }
                }
            }
        }
        self.goal
            .iter()
            .try_fold(0u64, |acc, &g| (cost[g] != INF).then(|| acc.saturating_add(cost[g])))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Plan(Vec<GroundAction>),
    Timeout,
    /// The reachable space was exhausted without meeting the goal.
    Unsolvable,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SearchLimits<'a> {
    pub deadline: Option<Instant>,
    pub cancel: Option<&'a AtomicBool>,
}

impl<'a> SearchLimits<'a> {
    pub fn timeout(t: Duration) -> Self {
        SearchLimits {
            deadline: Instant::now().checked_add(t),
            cancel: None,
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.cancel.is_some_and(|c| c.load(Ordering::Relaxed))
    }
}

struct Node {
    state: State,
    parent: Option<(usize, usize)>,
    g: u64,
}

pub fn best_first_search(
    task: &GroundedTask,
    from: &State,
    heuristic: &dyn Heuristic,
    limits: SearchLimits<'_>,
) -> SearchOutcome {
    if from.satisfies(task.goal()) {
        return SearchOutcome::Plan(Vec::new());
    }
    let Some(h0) = heuristic.estimate(from) else {
        return SearchOutcome::Unsolvable;
    };
    let mut nodes = vec![Node {
        state: from.clone(),
        parent: None,
        g: 0,
    }];
    let mut seen: HashMap<State, usize> = HashMap::from([(from.clone(), 0)]);
    let mut open = BinaryHeap::from([Reverse((h0, 0u64, 0usize))]);

    while let Some(Reverse((_, _, node_id))) = open.pop() {
        if limits.expired() {
            return SearchOutcome::Timeout;
        }
        if nodes[node_id].state.satisfies(task.goal()) {
            return SearchOutcome::Plan(extract(task, &nodes, node_id));
        }
        let g = nodes[node_id].g + 1;
        for (ai, action) in task.actions().iter().enumerate() {
            if !nodes[node_id].state.is_applicable(action) {
                continue;
            }
            let next = nodes[node_id].state.apply_unchecked(action);
            let Entry::Vacant(slot) = seen.entry(next) else {
                continue;
            };
            let Some(h) = heuristic.estimate(slot.key()) else {
                continue;
            };
            let id = nodes.len();
            nodes.push(Node {
                state: slot.key().clone(),
                parent: Some((node_id, ai)),
                g,
            });
            slot.insert(id);
            // node ids grow with insertion, so they break ties FIFO
            open.push(Reverse((h, g, id)));
        }
    }
    SearchOutcome::Unsolvable
}

fn extract(task: &GroundedTask, nodes: &[Node], mut id: usize) -> Vec<GroundAction> {
    let mut plan = Vec::new();
    while let Some((parent, action)) = nodes[id].parent {
        plan.push(task.actions()[action].clone());
        id = parent;
    }
    plan.reverse();
    plan
}

/// Greedy best-first search with h_add under a wall-clock budget.
pub fn plan_search(task: &GroundedTask, from: &State, timeout: Duration) -> SearchOutcome {
    let h = AdditiveHeuristic::new(task);
    best_first_search(task, from, &h, SearchLimits::timeout(timeout))
}
