use std::fmt::Write;

use super::model::*;

fn typed(out: &mut String, items: &[TypedName]) {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{} - {}", t.name, t.ty);
    }
}

fn conj<T: std::fmt::Display>(atoms: impl IntoIterator<Item = T>, negate: bool) -> String {
    atoms
        .into_iter()
        .map(|a| if negate { format!("(not {a})") } else { a.to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

impl Domain {
    /// Renders the domain back to PDDL text that reparses to an equal model.
    pub fn to_pddl(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(define (domain {})", self.name);
        if !self.requirements.is_empty() {
            let _ = writeln!(out, "  (:requirements {})", self.requirements.join(" "));
        }
        if !self.types.is_empty() {
            out.push_str("  (:types");
            for t in &self.types {
                let _ = write!(out, "\n    {} - {}", t.name, t.parent);
            }
            out.push_str(")\n");
        }
        if !self.predicates.is_empty() {
            out.push_str("  (:predicates");
            for p in &self.predicates {
                let _ = write!(out, "\n    ({}", p.name);
                if !p.params.is_empty() {
                    out.push(' ');
                    typed(&mut out, &p.params);
                }
                out.push(')');
            }
            out.push_str(")\n");
        }
        for s in &self.schemas {
            let _ = writeln!(out, "  (:action {}", s.name);
            out.push_str("    :parameters (");
            typed(&mut out, &s.params);
            out.push_str(")\n");
            let _ = writeln!(out, "    :precondition (and {})", conj(&s.precondition, false));
            let _ = writeln!(
                out,
                "    :effect (and {} {}))",
                conj(&s.add_effects, false),
                conj(&s.del_effects, true)
            );
        }
        out.push_str(")\n");
        out
    }
}

impl Problem {
    pub fn to_pddl(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(define (problem {})", self.name);
        let _ = writeln!(out, "  (:domain {})", self.domain_name);
        out.push_str("  (:objects ");
        typed(&mut out, &self.objects);
        out.push_str(")\n  (:init");
        for a in &self.init {
            let _ = write!(out, "\n    {a}");
        }
        out.push_str(")\n");
        let _ = writeln!(out, "  (:goal (and {})))", conj(&self.goal, false));
        out
    }
}
