//! Closed-world states, ground actions, applicability and progression.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A ground atom in canonical encoding: predicate id plus object ids.
///
/// Ids come from the owning [`GroundedTask`](crate::pddl::GroundedTask):
/// predicates in declaration order, objects in lexicographic name order, so
/// the derived ordering is the canonical atom order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: u32,
    pub args: Box<[u32]>,
}

impl Atom {
    pub fn new(predicate: u32, args: impl Into<Box<[u32]>>) -> Self {
        Atom {
            predicate,
            args: args.into(),
        }
    }
}

/// The set of true atoms; everything else is false.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    atoms: BTreeSet<Atom>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action {action} is not applicable: {missing} precondition(s) unmet")]
pub struct InapplicableAction {
    pub action: String,
    pub missing: usize,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        State {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_applicable(&self, action: &GroundAction) -> bool {
        action.pre.iter().all(|p| self.atoms.contains(p))
    }

    /// Preconditions of `action` that are false here, in canonical order.
    pub fn unmet_preconditions(&self, action: &GroundAction) -> Vec<Atom> {
        action.pre.iter().filter(|p| !self.atoms.contains(p)).cloned().collect()
    }

    /// Progression: `(s \ del) ∪ add`. Fails when a precondition is unmet.
    pub fn apply(&self, action: &GroundAction) -> Result<State, InapplicableAction> {
        let missing = action.pre.iter().filter(|p| !self.atoms.contains(p)).count();
        if missing > 0 {
            return Err(InapplicableAction {
                action: action.label(),
                missing,
            });
        }
        Ok(self.apply_unchecked(action))
    }

    /// Progression without the applicability check, for callers that just tested it.
    pub fn apply_unchecked(&self, action: &GroundAction) -> State {
        let mut atoms = self.atoms.clone();
        for d in &action.del {
            atoms.remove(d);
        }
        atoms.extend(action.add.iter().cloned());
        State { atoms }
    }

    pub fn satisfies<'a>(&self, goal: impl IntoIterator<Item = &'a Atom>) -> bool {
        goal.into_iter().all(|g| self.atoms.contains(g))
    }

    /// Atoms true here but not in `other`.
    pub fn added_since(&self, other: &State) -> Vec<Atom> {
        self.atoms.difference(&other.atoms).cloned().collect()
    }
}

impl FromIterator<Atom> for State {
    fn from_iter<T: IntoIterator<Item = Atom>>(iter: T) -> Self {
        State::new(iter)
    }
}

/// A schema instantiated with concrete objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    /// Position in the task's action list; `None` for instantiations that
    /// grounding pruned because a static precondition can never hold.
    pub index: Option<usize>,
}

impl GroundAction {
    /// Builds an action with sorted, deduplicated atom sets. Atoms both added
    /// and deleted are dropped from the delete set, which is what progression
    /// would do anyway.
    pub fn new(
        schema: impl Into<String>,
        args: Vec<String>,
        pre: impl IntoIterator<Item = Atom>,
        add: impl IntoIterator<Item = Atom>,
        del: impl IntoIterator<Item = Atom>,
    ) -> Self {
        let pre: BTreeSet<Atom> = pre.into_iter().collect();
        let add: BTreeSet<Atom> = add.into_iter().collect();
        let del: BTreeSet<Atom> = del.into_iter().filter(|a| !add.contains(a)).collect();
        GroundAction {
            schema: schema.into(),
            args,
            pre: pre.into_iter().collect(),
            add: add.into_iter().collect(),
            del: del.into_iter().collect(),
            index: None,
        }
    }

    /// `(schema arg1 arg2 ...)`
    pub fn label(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}
