use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::model::*;
use super::sexpr::{read_one, Sexpr};
use crate::state::{Atom, GroundAction, State};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("problem refers to undeclared predicate {0}")]
    UnknownPredicate(String),
    #[error("problem refers to undeclared object {0}")]
    UnknownObject(String),
}

/// Why a plan step or atom string could not be resolved against a task.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("unknown action '{0}'")]
    UnknownSchema(String),
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("'{name}' takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("object '{object}' has type {found}, but '{name}' expects {expected} for argument {position}")]
    Type {
        name: String,
        position: usize,
        object: String,
        expected: String,
        found: String,
    },
    #[error("cannot read '{0}' as (name arg ...)")]
    Syntax(String),
}

/// A parsed domain and problem, with every schema instantiated.
#[derive(Debug, Clone)]
pub struct GroundedTask {
    domain: Arc<Domain>,
    problem: Arc<Problem>,
    /// Objects sorted by name; an object's id is its index here.
    objects: Vec<TypedName>,
    object_ids: HashMap<String, u32>,
    predicate_ids: HashMap<String, u32>,
    actions: Vec<GroundAction>,
    lookup: HashMap<(String, Vec<String>), usize>,
    init: State,
    goal: Vec<Atom>,
}

/// Instantiates every schema with all type-compatible object tuples.
///
/// Actions are ordered by schema declaration order, then lexicographically by
/// argument names. Instantiations whose static preconditions are false in the
/// initial state are dropped; they can still be built on demand through
/// [`GroundedTask::resolve`] so that invalid user steps get diagnosed.
pub fn ground(domain: &Domain, problem: &Problem) -> Result<GroundedTask, GroundError> {
    let mut objects = problem.objects.clone();
    objects.sort_by(|a, b| a.name.cmp(&b.name));
    let object_ids: HashMap<String, u32> = objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.name.clone(), i as u32))
        .collect();
    let predicate_ids: HashMap<String, u32> = domain
        .predicates
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.clone(), i as u32))
        .collect();

    let encode = |a: &GroundAtom| -> Result<Atom, GroundError> {
        let p = *predicate_ids
            .get(&a.predicate)
            .ok_or_else(|| GroundError::UnknownPredicate(a.predicate.clone()))?;
        let args = a
            .args
            .iter()
            .map(|o| {
                object_ids
                    .get(o)
                    .copied()
                    .ok_or_else(|| GroundError::UnknownObject(o.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom::new(p, args))
    };
    let init: State = problem.init.iter().map(&encode).collect::<Result<_, _>>()?;
    let goal_set: BTreeSet<Atom> = problem.goal.iter().map(&encode).collect::<Result<_, _>>()?;

    let mut task = GroundedTask {
        domain: Arc::new(domain.clone()),
        problem: Arc::new(problem.clone()),
        objects,
        object_ids,
        predicate_ids,
        actions: Vec::new(),
        lookup: HashMap::new(),
        init,
        goal: goal_set.into_iter().collect(),
    };

    let statics = domain.static_predicates();
    let mut actions = Vec::new();
    for schema in &domain.schemas {
        let candidates: Vec<Vec<u32>> = schema.params.iter().map(|p| task.objects_of_type(&p.ty)).collect();
        let static_pre: Vec<&LiftedAtom> = schema
            .precondition
            .iter()
            .filter(|a| statics.contains(&a.predicate))
            .collect();
        for tuple in cartesian(&candidates) {
            let binding: HashMap<&str, u32> = schema
                .params
                .iter()
                .zip(&tuple)
                .map(|(p, &o)| (p.name.as_str(), o))
                .collect();
            let holds = static_pre.iter().all(|a| task.init.contains(&task.bind(a, &binding)));
            if holds {
                actions.push(task.instantiate(schema, &tuple));
            }
        }
    }
    for (i, a) in actions.iter_mut().enumerate() {
        a.index = Some(i);
    }
    task.lookup = actions
        .iter()
        .enumerate()
        .map(|(i, a)| ((a.schema.clone(), a.args.clone()), i))
        .collect();
    task.actions = actions;
    Ok(task)
}

fn cartesian(candidates: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for options in candidates {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for prefix in &out {
            for &o in options {
                let mut t = prefix.clone();
                t.push(o);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

impl GroundedTask {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &[Atom] {
        &self.goal
    }

    /// Objects in id order (lexicographic by name).
    pub fn objects(&self) -> &[TypedName] {
        &self.objects
    }

    /// Same model with a different goal.
    pub fn with_goal(&self, goal: impl IntoIterator<Item = Atom>) -> GroundedTask {
        let goal: BTreeSet<Atom> = goal.into_iter().collect();
        let mut t = self.clone();
        t.goal = goal.into_iter().collect();
        t
    }

    pub fn objects_of_type(&self, ty: &str) -> Vec<u32> {
        self.objects
            .iter()
            .enumerate()
            .filter(|(_, o)| self.domain.is_subtype(&o.ty, ty))
            .map(|(i, _)| i as u32)
            .collect()
    }

    pub fn object_name(&self, id: u32) -> &str {
        &self.objects[id as usize].name
    }

    pub fn predicate_name(&self, id: u32) -> &str {
        &self.domain.predicates[id as usize].name
    }

    pub fn encode(&self, atom: &GroundAtom) -> Result<Atom, ResolveError> {
        let p = *self
            .predicate_ids
            .get(&atom.predicate)
            .ok_or_else(|| ResolveError::UnknownPredicate(atom.predicate.clone()))?;
        let decl = &self.domain.predicates[p as usize];
        if decl.arity() != atom.args.len() {
            return Err(ResolveError::Arity {
                name: atom.predicate.clone(),
                expected: decl.arity(),
                found: atom.args.len(),
            });
        }
        let mut args = Vec::with_capacity(atom.args.len());
        for (i, (name, slot)) in atom.args.iter().zip(&decl.params).enumerate() {
            let id = self.object_id(name)?;
            self.check_type(&atom.predicate, i, id, &slot.ty)?;
            args.push(id);
        }
        Ok(Atom::new(p, args))
    }

    pub fn decode(&self, atom: &Atom) -> GroundAtom {
        GroundAtom {
            predicate: self.predicate_name(atom.predicate).to_string(),
            args: atom.args.iter().map(|&o| self.object_name(o).to_string()).collect(),
        }
    }

    /// `(pred obj1 obj2)`
    pub fn atom_string(&self, atom: &Atom) -> String {
        self.decode(atom).to_string()
    }

    /// Parses `(pred obj ...)` into an atom of this task.
    pub fn parse_atom(&self, text: &str) -> Result<Atom, ResolveError> {
        let (name, args) = parse_call(text)?;
        self.encode(&GroundAtom { predicate: name, args })
    }

    /// Sorted atom strings, the serialized form of a state.
    pub fn state_strings(&self, state: &State) -> Vec<String> {
        let mut v: Vec<String> = state.atoms().iter().map(|a| self.atom_string(a)).collect();
        v.sort();
        v
    }

    pub fn action_index(&self, schema: &str, args: &[String]) -> Option<usize> {
        self.lookup.get(&(schema.to_string(), args.to_vec())).copied()
    }

    /// Resolves a step such as `move d1 d2 peg3` to a ground action.
    ///
    /// Well-typed instantiations pruned during grounding are built on the
    /// fly (with `index: None`) so their false static preconditions show up
    /// as unmet rather than as an unknown action.
    pub fn resolve(&self, schema: &str, args: &[String]) -> Result<GroundAction, ResolveError> {
        if let Some(i) = self.action_index(schema, args) {
            return Ok(self.actions[i].clone());
        }
        let s = self
            .domain
            .schema(schema)
            .ok_or_else(|| ResolveError::UnknownSchema(schema.to_string()))?;
        if s.params.len() != args.len() {
            return Err(ResolveError::Arity {
                name: schema.to_string(),
                expected: s.params.len(),
                found: args.len(),
            });
        }
        let mut tuple = Vec::with_capacity(args.len());
        for (i, (name, p)) in args.iter().zip(&s.params).enumerate() {
            let id = self.object_id(name)?;
            self.check_type(schema, i, id, &p.ty)?;
            tuple.push(id);
        }
        Ok(self.instantiate(s, &tuple))
    }

    fn object_id(&self, name: &str) -> Result<u32, ResolveError> {
        self.object_ids
            .get(name)
            .copied()
            .ok_or_else(|| ResolveError::UnknownObject(name.to_string()))
    }

    fn check_type(&self, name: &str, position: usize, id: u32, expected: &str) -> Result<(), ResolveError> {
        let obj = &self.objects[id as usize];
        if self.domain.is_subtype(&obj.ty, expected) {
            Ok(())
        } else {
            Err(ResolveError::Type {
                name: name.to_string(),
                position: position + 1,
                object: obj.name.clone(),
                expected: expected.to_string(),
                found: obj.ty.clone(),
            })
        }
    }

    fn bind(&self, atom: &LiftedAtom, binding: &HashMap<&str, u32>) -> Atom {
        Atom::new(
            self.predicate_ids[&atom.predicate],
            atom.args.iter().map(|v| binding[v.as_str()]).collect::<Vec<_>>(),
        )
    }

    fn instantiate(&self, schema: &ActionSchema, tuple: &[u32]) -> GroundAction {
        let binding: HashMap<&str, u32> = schema
            .params
            .iter()
            .zip(tuple)
            .map(|(p, &o)| (p.name.as_str(), o))
            .collect();
        let bind_all = |atoms: &[LiftedAtom]| -> Vec<Atom> { atoms.iter().map(|a| self.bind(a, &binding)).collect() };
        GroundAction::new(
            schema.name.clone(),
            tuple.iter().map(|&o| self.object_name(o).to_string()).collect(),
            bind_all(&schema.precondition),
            bind_all(&schema.add_effects),
            bind_all(&schema.del_effects),
        )
    }
}

/// Splits `(name a b c)` (parentheses optional) into its parts, lower-cased.
pub fn parse_call(text: &str) -> Result<(String, Vec<String>), ResolveError> {
    let trimmed = text.trim();
    let wrapped;
    let src = if trimmed.starts_with('(') {
        trimmed
    } else {
        wrapped = format!("({trimmed})");
        &wrapped
    };
    let bad = || ResolveError::Syntax(text.to_string());
    let expr = read_one(src).map_err(|_| bad())?;
    let items = expr.as_list().ok_or_else(bad)?;
    let mut names = Vec::with_capacity(items.len());
    for item in items {
        match item {
            Sexpr::Symbol(s, _) => names.push(s.clone()),
            Sexpr::List(..) => return Err(bad()),
        }
    }
    if names.is_empty() {
        return Err(bad());
    }
    let name = names.remove(0);
    Ok((name, names))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const DOMAIN: &str = "(define (domain g) (:requirements :strips :typing)
        (:types a b)
        (:predicates (p ?x - a) (link ?x - a ?y - b) (done))
        (:action zero :parameters () :precondition (and) :effect (and (done)))
        (:action use :parameters (?x - a ?y - b)
           :precondition (and (p ?x) (link ?x ?y)) :effect (and (not (p ?x)))))";

    fn task(objects: &str, init: &str) -> GroundedTask {
        let d = parse_domain(DOMAIN).unwrap();
        let p = parse_problem(
            &format!("(define (problem q) (:domain g) (:objects {objects}) (:init {init}) (:goal (and)))"),
            &d,
        )
        .unwrap();
        ground(&d, &p).unwrap()
    }

    #[test]
    fn zero_parameter_schema_grounds_once() {
        let t = task("", "");
        assert_eq!(t.actions().len(), 1);
        assert_eq!(t.actions()[0].label(), "(zero)");
    }

    #[test]
    fn unmatched_types_contribute_nothing() {
        // only a-objects: `use` needs a b-object too
        let t = task("x1 x2 - a", "");
        assert_eq!(t.actions().len(), 1);
    }

    #[test]
    fn static_preconditions_filter_and_order() {
        let t = task("x2 x1 - a y1 - b", "(link x2 y1) (link x1 y1)");
        let labels: Vec<String> = t.actions().iter().map(GroundAction::label).collect();
        assert_eq!(labels, ["(zero)", "(use x1 y1)", "(use x2 y1)"]);
        let t = task("x2 x1 - a y1 - b", "(link x2 y1)");
        assert_eq!(t.actions().len(), 2);
        // the pruned instantiation still resolves and keeps its static precondition
        let a = t.resolve("use", &["x1".into(), "y1".into()]).unwrap();
        assert_eq!(a.index, None);
        assert_eq!(t.init().unmet_preconditions(&a).len(), 2);
    }

    #[test]
    fn resolve_errors() {
        let t = task("x1 - a y1 - b", "");
        assert_eq!(t.resolve("fly", &[]), Err(ResolveError::UnknownSchema("fly".into())));
        assert!(matches!(
            t.resolve("use", &["x1".into()]),
            Err(ResolveError::Arity { .. })
        ));
        assert!(matches!(
            t.resolve("use", &["y1".into(), "y1".into()]),
            Err(ResolveError::Type { position: 1, .. })
        ));
        assert_eq!(
            t.resolve("use", &["x1".into(), "zz".into()]),
            Err(ResolveError::UnknownObject("zz".into()))
        );
    }

    #[test]
    fn atom_strings_round_trip() {
        let t = task("x1 - a y1 - b", "(link x1 y1) (p x1)");
        let a = t.parse_atom("(LINK x1 y1)").unwrap();
        assert_eq!(t.atom_string(&a), "(link x1 y1)");
        assert!(t.init().contains(&a));
        assert_eq!(t.state_strings(t.init()), ["(link x1 y1)", "(p x1)"]);
        assert!(t.parse_atom("(link y1 x1)").is_err());
    }

    #[test]
    fn grounding_is_deterministic() {
        let a = task("x2 x1 - a y2 y1 - b", "(link x2 y1) (link x1 y1) (link x1 y2)");
        let b = task("x2 x1 - a y2 y1 - b", "(link x2 y1) (link x1 y1) (link x1 y2)");
        assert_eq!(a.actions(), b.actions());
    }
}
