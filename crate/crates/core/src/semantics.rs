//! Per-domain natural-language templates for actions and predicates.
//!
//! File format, one entry per line (`#` starts a comment):
//!
//! ```text
//! action place = Place at location '{0}' object '{1}' using gripper '{2}' this robot '{3}'
//! predicate holding = '{0}' is holding '{1}'
//! unmet holding = '{0}' is not holding '{1}'
//! object start = starting point
//! ```
//!
//! `unmet` entries phrase a false precondition; predicates without one fall
//! back to a generic sentence. `object` entries give display names.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::pddl::{Domain, GroundAtom};
use crate::state::GroundAction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no action template for '{0}'")]
    MissingAction(String),
    #[error("no predicate template for '{0}'")]
    MissingPredicate(String),
    #[error("template for '{name}' uses slots {found:?}, but '{name}' has {arity} argument(s)")]
    SlotMismatch {
        name: String,
        arity: usize,
        found: Vec<usize>,
    },
    #[error("template for unknown {what} '{name}'")]
    Unknown { what: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(usize),
}

/// A pattern such as `Move the robot {0} from the {1} to the {2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, String> {
        let mut pieces = Vec::new();
        let mut text = String::new();
        let mut rest = source;
        while let Some(open) = rest.find('{') {
            text.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after
                .find('}')
                .ok_or_else(|| format!("unclosed '{{' in template '{source}'"))?;
            let idx: usize = after[..close]
                .trim()
                .parse()
                .map_err(|_| format!("bad slot '{{{}}}' in template '{source}'", &after[..close]))?;
            if !text.is_empty() {
                pieces.push(Piece::Text(std::mem::take(&mut text)));
            }
            pieces.push(Piece::Slot(idx));
            rest = &after[close + 1..];
        }
        text.push_str(rest);
        if !text.is_empty() {
            pieces.push(Piece::Text(text));
        }
        Ok(Template {
            source: source.to_string(),
            pieces,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn slots(&self) -> BTreeSet<usize> {
        self.pieces
            .iter()
            .filter_map(|p| match p {
                Piece::Slot(i) => Some(*i),
                Piece::Text(_) => None,
            })
            .collect()
    }

    pub fn render<S: AsRef<str>>(&self, args: &[S]) -> String {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(i) => out.push_str(args.get(*i).map(AsRef::as_ref).unwrap_or("?")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticMap {
    pub actions: BTreeMap<String, Template>,
    pub predicates: BTreeMap<String, Template>,
    pub unmet: BTreeMap<String, Template>,
    pub objects: BTreeMap<String, String>,
}

impl SemanticMap {
    pub fn parse(text: &str) -> Result<Self, SemanticsError> {
        let mut map = SemanticMap::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: String| SemanticsError::Syntax { line: i + 1, message };
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected '<kind> <name> = <template>'".into()))?;
            let mut words = lhs.split_whitespace();
            let (kind, name) = match (words.next(), words.next(), words.next()) {
                (Some(k), Some(n), None) => (k, n.to_lowercase()),
                _ => return Err(syntax("expected '<kind> <name> = <template>'".into())),
            };
            let rhs = rhs.trim().to_string();
            let table = match kind {
                "action" => &mut map.actions,
                "predicate" => &mut map.predicates,
                "unmet" => &mut map.unmet,
                "object" => {
                    map.objects.insert(name, rhs);
                    continue;
                }
                other => return Err(syntax(format!("unknown entry kind '{other}'"))),
            };
            let template = Template::parse(&rhs).map_err(syntax)?;
            if table.insert(name.clone(), template).is_some() {
                return Err(syntax(format!("duplicate {kind} entry '{name}'")));
            }
        }
        Ok(map)
    }

    /// Checks that every schema and predicate has a template whose slots
    /// are exactly the argument positions.
    pub fn check_against(&self, domain: &Domain) -> Result<(), SemanticsError> {
        fn check(name: &str, arity: usize, t: &Template) -> Result<(), SemanticsError> {
            let found = t.slots();
            if found != (0..arity).collect() {
                return Err(SemanticsError::SlotMismatch {
                    name: name.to_string(),
                    arity,
                    found: found.into_iter().collect(),
                });
            }
            Ok(())
        }
        for s in &domain.schemas {
            let t = self
                .actions
                .get(&s.name)
                .ok_or_else(|| SemanticsError::MissingAction(s.name.clone()))?;
            check(&s.name, s.params.len(), t)?;
        }
        for p in &domain.predicates {
            let t = self
                .predicates
                .get(&p.name)
                .ok_or_else(|| SemanticsError::MissingPredicate(p.name.clone()))?;
            check(&p.name, p.arity(), t)?;
            if let Some(u) = self.unmet.get(&p.name) {
                check(&p.name, p.arity(), u)?;
            }
        }
        for name in self.actions.keys() {
            if domain.schema(name).is_none() {
                return Err(SemanticsError::Unknown {
                    what: "action",
                    name: name.clone(),
                });
            }
        }
        for name in self.predicates.keys().chain(self.unmet.keys()) {
            if domain.predicate(name).is_none() {
                return Err(SemanticsError::Unknown {
                    what: "predicate",
                    name: name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn object_display<'a>(&'a self, name: &'a str) -> &'a str {
        self.objects.get(name).map(String::as_str).unwrap_or(name)
    }

    /// Renders an action label with the given argument display strings.
    pub fn render_action_with(&self, schema: &str, args: &[String]) -> String {
        match self.actions.get(schema) {
            Some(t) => t.render(args),
            None => {
                let mut s = schema.to_string();
                for a in args {
                    s.push(' ');
                    s.push_str(a);
                }
                s
            }
        }
    }

    pub fn render_action(&self, action: &GroundAction) -> String {
        let args: Vec<String> = action.args.iter().map(|a| self.object_display(a).to_string()).collect();
        self.render_action_with(&action.schema, &args)
    }

    fn display_args<'a>(&'a self, atom: &'a GroundAtom) -> Vec<&'a str> {
        atom.args.iter().map(|a| self.object_display(a)).collect()
    }

    /// Positive phrasing, e.g. `'gripper' is holding 'can_blue'`.
    pub fn render_fact(&self, atom: &GroundAtom) -> String {
        match self.predicates.get(&atom.predicate) {
            Some(t) => t.render(&self.display_args(atom)),
            None => atom.to_string(),
        }
    }

    /// Phrasing of a false precondition, e.g. `'gripper' is not holding 'can_blue'`.
    pub fn render_unmet(&self, atom: &GroundAtom) -> String {
        match self.unmet.get(&atom.predicate) {
            Some(t) => t.render(&self.display_args(atom)),
            None => format!("precondition '{atom}' is false"),
        }
    }
}
