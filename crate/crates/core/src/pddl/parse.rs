//! Parser and type checker for the supported PDDL subset: `:strips` and
//! `:typing`, positive conjunctive preconditions and goals, add/delete effects.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::error::{ParseError, ParseErrorKind};
use super::model::*;
use super::sexpr::{read_one, Pos, Sexpr};

type Result<T> = std::result::Result<T, ParseError>;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing"];
const KNOWN_UNSUPPORTED_REQUIREMENTS: &[&str] = &[
    ":negative-preconditions",
    ":disjunctive-preconditions",
    ":equality",
    ":existential-preconditions",
    ":universal-preconditions",
    ":quantified-preconditions",
    ":conditional-effects",
    ":fluents",
    ":numeric-fluents",
    ":object-fluents",
    ":adl",
    ":durative-actions",
    ":duration-inequalities",
    ":continuous-effects",
    ":derived-predicates",
    ":timed-initial-literals",
    ":preferences",
    ":constraints",
    ":action-costs",
];

fn err<T>(pos: Pos, kind: ParseErrorKind) -> Result<T> {
    Err(ParseError::new(pos, kind))
}

fn syntax<T>(pos: Pos, msg: impl Into<String>) -> Result<T> {
    err(pos, ParseErrorKind::Syntax(msg.into()))
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr]> {
    e.as_list()
        .ok_or_else(|| ParseError::new(e.pos(), ParseErrorKind::Syntax(format!("expected {what}"))))
}

fn expect_symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str> {
    e.as_symbol()
        .ok_or_else(|| ParseError::new(e.pos(), ParseErrorKind::Syntax(format!("expected {what}"))))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic()) && chars.all(|c| c.is_alphanumeric() || c == '-' || c == '_')
}

fn expect_identifier<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str> {
    let s = expect_symbol(e, what)?;
    if is_identifier(s) {
        Ok(s)
    } else {
        syntax(e.pos(), format!("invalid {what} '{s}'"))
    }
}

/// Splits `(define (<kind> name) section...)` into its name and sections.
fn split_define<'a>(root: &'a Sexpr, kind: &str) -> Result<(&'a str, &'a [Sexpr])> {
    let items = expect_list(root, "(define ...)")?;
    match items.first().and_then(Sexpr::as_symbol) {
        Some("define") => {}
        _ => return syntax(root.pos(), "expected (define ...)"),
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::new(root.pos(), ParseErrorKind::Syntax(format!("missing ({kind} <name>)"))))?;
    let h = expect_list(header, &format!("({kind} <name>)"))?;
    if h.len() != 2 || h[0].as_symbol() != Some(kind) {
        return syntax(header.pos(), format!("expected ({kind} <name>)"));
    }
    let name = expect_identifier(&h[1], &format!("{kind} name"))?;
    Ok((name, &items[2..]))
}

/// Parses a typed list such as `a b - t1 c - t2 d`. Untyped names get `object`.
fn typed_list(items: &[Sexpr], variables: bool) -> Result<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        if let Some(list) = item.as_list() {
            if list.first().and_then(Sexpr::as_symbol) == Some("either") {
                return err(item.pos(), ParseErrorKind::Unsupported("either type".into()));
            }
            return syntax(item.pos(), "unexpected list in typed list");
        }
        let sym = item.as_symbol().unwrap_or_default();
        if sym == "-" {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| ParseError::new(item.pos(), ParseErrorKind::Syntax("missing type after '-'".into())))?;
            if ty_expr.head() == Some("either") {
                return err(ty_expr.pos(), ParseErrorKind::Unsupported("either type".into()));
            }
            let ty = expect_identifier(ty_expr, "type name")?;
            if pending.is_empty() {
                return syntax(item.pos(), "type annotation without names");
            }
            out.extend(pending.drain(..).map(|(n, p)| (n, ty.to_string(), p)));
            i += 2;
            continue;
        }
        let name_ok = if variables {
            sym.strip_prefix('?').is_some_and(is_identifier)
        } else {
            is_identifier(sym)
        };
        if !name_ok {
            let what = if variables { "variable" } else { "name" };
            return syntax(item.pos(), format!("invalid {what} '{sym}'"));
        }
        pending.push((sym.to_string(), item.pos()));
        i += 1;
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, OBJECT_TYPE.to_string(), p)));
    Ok(out)
}

fn parse_requirements(items: &[Sexpr]) -> Result<Vec<String>> {
    let mut reqs = Vec::new();
    for item in items {
        let r = expect_symbol(item, "requirement flag")?;
        if SUPPORTED_REQUIREMENTS.contains(&r) {
            if !reqs.iter().any(|x| x == r) {
                reqs.push(r.to_string());
            }
        } else if KNOWN_UNSUPPORTED_REQUIREMENTS.contains(&r) {
            return err(item.pos(), ParseErrorKind::Unsupported(format!("requirement {r}")));
        } else {
            return err(item.pos(), ParseErrorKind::UnknownRequirement(r.to_string()));
        }
    }
    Ok(reqs)
}

/// Flattens a condition into positive atoms. `(and)` and `()` are empty.
fn conjunction<'a>(e: &'a Sexpr, context: &str) -> Result<Vec<&'a Sexpr>> {
    let items = expect_list(e, "condition")?;
    match items.first() {
        None => Ok(Vec::new()),
        Some(h) => match h.as_symbol() {
            Some("and") => {
                let mut out = Vec::new();
                for c in &items[1..] {
                    out.extend(conjunction(c, context)?);
                }
                Ok(out)
            }
            Some("not") => err(e.pos(), ParseErrorKind::Unsupported(format!("negated {context}"))),
            Some(
                kw @ ("or" | "imply" | "exists" | "forall" | "when" | "=" | "increase" | "decrease" | "assign"
                | "preference"),
            ) => err(e.pos(), ParseErrorKind::Unsupported(format!("'{kw}' in {context}"))),
            Some(_) => Ok(vec![e]),
            None => syntax(e.pos(), "expected predicate name"),
        },
    }
}

struct EffectAtoms<'a> {
    add: Vec<&'a Sexpr>,
    del: Vec<&'a Sexpr>,
}

fn effects(e: &Sexpr) -> Result<EffectAtoms<'_>> {
    let mut out = EffectAtoms {
        add: Vec::new(),
        del: Vec::new(),
    };
    collect_effects(e, &mut out)?;
    Ok(out)
}

fn collect_effects<'a>(e: &'a Sexpr, out: &mut EffectAtoms<'a>) -> Result<()> {
    let items = expect_list(e, "effect")?;
    match items.first().map(|h| h.as_symbol()) {
        None => Ok(()),
        Some(Some("and")) => {
            for c in &items[1..] {
                collect_effects(c, out)?;
            }
            Ok(())
        }
        Some(Some("not")) => {
            if items.len() != 2 {
                return syntax(e.pos(), "(not ...) takes exactly one atom");
            }
            match items[1].head() {
                Some("and" | "not" | "or" | "forall" | "when") | None => err(
                    items[1].pos(),
                    ParseErrorKind::Unsupported("compound delete effect".into()),
                ),
                Some(_) => {
                    out.del.push(&items[1]);
                    Ok(())
                }
            }
        }
        Some(Some(kw @ ("forall" | "when" | "increase" | "decrease" | "assign" | "or"))) => {
            err(e.pos(), ParseErrorKind::Unsupported(format!("'{kw}' effect")))
        }
        Some(Some(_)) => {
            out.add.push(e);
            Ok(())
        }
        Some(None) => syntax(e.pos(), "expected predicate name"),
    }
}

fn atom_parts(e: &Sexpr) -> Result<(&str, Vec<(&str, Pos)>)> {
    let items = expect_list(e, "atom")?;
    let pred = expect_symbol(
        items
            .first()
            .ok_or_else(|| ParseError::new(e.pos(), ParseErrorKind::Syntax("empty atom".into())))?,
        "predicate name",
    )?;
    let mut args = Vec::new();
    for a in &items[1..] {
        args.push((expect_symbol(a, "atom argument")?, a.pos()));
    }
    Ok((pred, args))
}

/// Reads the domain name from `(define (domain <name>) ...)` without parsing the rest.
pub fn domain_name(text: &str) -> Option<String> {
    let root = read_one(text).ok()?;
    split_define(&root, "domain").ok().map(|(n, _)| n.to_string())
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    let root = read_one(text)?;
    let (name, sections) = split_define(&root, "domain")?;
    let mut domain = Domain {
        name: name.to_string(),
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };
    let mut seen_sections: HashSet<&str> = HashSet::new();

    for section in sections {
        let items = expect_list(section, "domain section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_symbol)
            .ok_or_else(|| ParseError::new(section.pos(), ParseErrorKind::Syntax("expected section keyword".into())))?;
        if head != ":action" && !seen_sections.insert(head) {
            return err(
                section.pos(),
                ParseErrorKind::Duplicate {
                    what: "section",
                    name: head.to_string(),
                },
            );
        }
        match head {
            ":requirements" => domain.requirements = parse_requirements(&items[1..])?,
            ":types" => parse_types(&mut domain, &items[1..])?,
            ":predicates" => parse_predicates(&mut domain, &items[1..])?,
            ":action" => {
                let schema = parse_action(&domain, section, &items[1..])?;
                if domain.schema(&schema.name).is_some() {
                    return err(
                        section.pos(),
                        ParseErrorKind::Duplicate {
                            what: "action",
                            name: schema.name,
                        },
                    );
                }
                domain.schemas.push(schema);
            }
            ":constants" | ":functions" | ":durative-action" | ":derived" | ":constraints" => {
                return err(section.pos(), ParseErrorKind::Unsupported(head.to_string()))
            }
            other => return syntax(section.pos(), format!("unknown domain section '{other}'")),
        }
    }
    Ok(domain)
}

fn parse_types(domain: &mut Domain, items: &[Sexpr]) -> Result<()> {
    let entries = typed_list(items, false)?;
    for (name, _, pos) in &entries {
        if name == OBJECT_TYPE {
            continue;
        }
        if domain.types.iter().any(|t| &t.name == name) {
            return err(
                *pos,
                ParseErrorKind::Duplicate {
                    what: "type",
                    name: name.clone(),
                },
            );
        }
        domain.types.push(TypeDecl {
            name: name.clone(),
            parent: OBJECT_TYPE.into(),
        });
    }
    // parents may be declared later in the list, or only used as parents
    for (name, parent, _) in &entries {
        if name == OBJECT_TYPE {
            continue;
        }
        if !domain.has_type(parent) {
            domain.types.push(TypeDecl {
                name: parent.clone(),
                parent: OBJECT_TYPE.into(),
            });
        }
        if let Some(t) = domain.types.iter_mut().find(|t| &t.name == name) {
            t.parent = parent.clone();
        }
    }
    for (name, _, pos) in &entries {
        let mut cur = name.as_str();
        let mut steps = 0;
        while let Some(t) = domain.types.iter().find(|t| t.name == cur) {
            cur = &t.parent;
            steps += 1;
            if steps > domain.types.len() {
                return syntax(*pos, format!("cyclic type hierarchy through '{name}'"));
            }
        }
    }
    Ok(())
}

fn parse_predicates(domain: &mut Domain, items: &[Sexpr]) -> Result<()> {
    for item in items {
        let list = expect_list(item, "predicate declaration")?;
        let name = expect_identifier(
            list.first().ok_or_else(|| {
                ParseError::new(item.pos(), ParseErrorKind::Syntax("empty predicate declaration".into()))
            })?,
            "predicate name",
        )?;
        if domain.predicate(name).is_some() {
            return err(
                item.pos(),
                ParseErrorKind::Duplicate {
                    what: "predicate",
                    name: name.to_string(),
                },
            );
        }
        let mut params = Vec::new();
        for (var, ty, pos) in typed_list(&list[1..], true)? {
            if !domain.has_type(&ty) {
                return err(pos, ParseErrorKind::Undeclared { what: "type", name: ty });
            }
            params.push(TypedName { name: var, ty });
        }
        domain.predicates.push(PredicateDecl {
            name: name.to_string(),
            params,
        });
    }
    Ok(())
}

fn lifted_atom(domain: &Domain, params: &[TypedName], e: &Sexpr) -> Result<LiftedAtom> {
    let (pred, args) = atom_parts(e)?;
    let decl = domain.predicate(pred).ok_or_else(|| {
        ParseError::new(
            e.pos(),
            ParseErrorKind::Undeclared {
                what: "predicate",
                name: pred.to_string(),
            },
        )
    })?;
    if decl.arity() != args.len() {
        return err(
            e.pos(),
            ParseErrorKind::ArityMismatch {
                predicate: pred.to_string(),
                expected: decl.arity(),
                found: args.len(),
            },
        );
    }
    for ((arg, pos), slot) in args.iter().zip(&decl.params) {
        if !arg.starts_with('?') {
            return err(*pos, ParseErrorKind::Unsupported(format!("constant '{arg}' in action")));
        }
        let param = params.iter().find(|p| p.name == *arg).ok_or_else(|| {
            ParseError::new(
                *pos,
                ParseErrorKind::Undeclared {
                    what: "variable",
                    name: arg.to_string(),
                },
            )
        })?;
        if !domain.is_subtype(&param.ty, &slot.ty) {
            return err(
                *pos,
                ParseErrorKind::TypeMismatch {
                    name: arg.to_string(),
                    expected: slot.ty.clone(),
                    found: param.ty.clone(),
                },
            );
        }
    }
    Ok(LiftedAtom {
        predicate: pred.to_string(),
        args: args.iter().map(|(a, _)| a.to_string()).collect(),
    })
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

fn parse_action(domain: &Domain, section: &Sexpr, items: &[Sexpr]) -> Result<ActionSchema> {
    let name_expr = items
        .first()
        .ok_or_else(|| ParseError::new(section.pos(), ParseErrorKind::Syntax("missing action name".into())))?;
    let name = expect_identifier(name_expr, "action name")?.to_string();
    let mut schema = ActionSchema {
        name,
        params: Vec::new(),
        precondition: Vec::new(),
        add_effects: Vec::new(),
        del_effects: Vec::new(),
    };
    let mut seen = HashSet::new();
    let mut i = 1;
    while i < items.len() {
        let key = expect_symbol(&items[i], "action keyword")?;
        let value = items.get(i + 1).ok_or_else(|| {
            ParseError::new(
                items[i].pos(),
                ParseErrorKind::Syntax(format!("missing value for {key}")),
            )
        })?;
        if !seen.insert(key) {
            return err(
                items[i].pos(),
                ParseErrorKind::Duplicate {
                    what: "action field",
                    name: key.to_string(),
                },
            );
        }
        match key {
            ":parameters" => {
                for (var, ty, pos) in typed_list(expect_list(value, "parameter list")?, true)? {
                    if !domain.has_type(&ty) {
                        return err(pos, ParseErrorKind::Undeclared { what: "type", name: ty });
                    }
                    if schema.params.iter().any(|p| p.name == var) {
                        return err(
                            pos,
                            ParseErrorKind::Duplicate {
                                what: "parameter",
                                name: var,
                            },
                        );
                    }
                    schema.params.push(TypedName { name: var, ty });
                }
            }
            ":precondition" => {
                for a in conjunction(value, "precondition")? {
                    let atom = lifted_atom(domain, &schema.params, a)?;
                    push_unique(&mut schema.precondition, atom);
                }
            }
            ":effect" => {
                let eff = effects(value)?;
                for a in eff.add {
                    let atom = lifted_atom(domain, &schema.params, a)?;
                    push_unique(&mut schema.add_effects, atom);
                }
                for a in eff.del {
                    let atom = lifted_atom(domain, &schema.params, a)?;
                    if schema.add_effects.contains(&atom) {
                        return err(
                            a.pos(),
                            ParseErrorKind::ConflictingEffects {
                                action: schema.name.clone(),
                                atom: atom.to_string(),
                            },
                        );
                    }
                    push_unique(&mut schema.del_effects, atom);
                }
            }
            other => {
                return err(
                    items[i].pos(),
                    ParseErrorKind::Unsupported(format!("action field {other}")),
                )
            }
        }
        i += 2;
    }
    Ok(schema)
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem> {
    let root = read_one(text)?;
    let (name, sections) = split_define(&root, "problem")?;
    let mut problem = Problem {
        name: name.to_string(),
        domain_name: String::new(),
        objects: Vec::new(),
        init: BTreeSet::new(),
        goal: BTreeSet::new(),
    };
    let mut seen_sections: HashSet<&str> = HashSet::new();
    let mut init_exprs: Option<&[Sexpr]> = None;
    let mut goal_expr: Option<&Sexpr> = None;

    for section in sections {
        let items = expect_list(section, "problem section")?;
        let head = items
            .first()
            .and_then(Sexpr::as_symbol)
            .ok_or_else(|| ParseError::new(section.pos(), ParseErrorKind::Syntax("expected section keyword".into())))?;
        if !seen_sections.insert(head) {
            return err(
                section.pos(),
                ParseErrorKind::Duplicate {
                    what: "section",
                    name: head.to_string(),
                },
            );
        }
        match head {
            ":domain" => {
                if items.len() != 2 {
                    return syntax(section.pos(), "expected (:domain <name>)");
                }
                let d = expect_identifier(&items[1], "domain name")?;
                if d != domain.name {
                    return err(
                        items[1].pos(),
                        ParseErrorKind::DomainMismatch {
                            expected: domain.name.clone(),
                            found: d.to_string(),
                        },
                    );
                }
                problem.domain_name = d.to_string();
            }
            ":requirements" => {
                parse_requirements(&items[1..])?;
            }
            ":objects" => {
                for (obj, ty, pos) in typed_list(&items[1..], false)? {
                    if !domain.has_type(&ty) {
                        return err(pos, ParseErrorKind::Undeclared { what: "type", name: ty });
                    }
                    if problem.objects.iter().any(|o| o.name == obj) {
                        return err(
                            pos,
                            ParseErrorKind::Duplicate {
                                what: "object",
                                name: obj,
                            },
                        );
                    }
                    problem.objects.push(TypedName { name: obj, ty });
                }
            }
            ":init" => init_exprs = Some(&items[1..]),
            ":goal" => {
                if items.len() != 2 {
                    return syntax(section.pos(), "expected (:goal <condition>)");
                }
                goal_expr = Some(&items[1]);
            }
            ":constraints" | ":metric" | ":length" => {
                return err(section.pos(), ParseErrorKind::Unsupported(head.to_string()))
            }
            other => return syntax(section.pos(), format!("unknown problem section '{other}'")),
        }
    }
    if problem.domain_name.is_empty() {
        return syntax(root.pos(), "missing (:domain <name>)");
    }

    let object_types: HashMap<&str, &str> = problem
        .objects
        .iter()
        .map(|o| (o.name.as_str(), o.ty.as_str()))
        .collect();
    let check = |e: &Sexpr| -> Result<GroundAtom> { ground_atom(domain, &object_types, e) };

    let mut init = BTreeSet::new();
    for e in init_exprs.unwrap_or_default() {
        if e.head() == Some("not") {
            return err(e.pos(), ParseErrorKind::Unsupported("negated initial fact".into()));
        }
        if e.head() == Some("=") {
            return err(e.pos(), ParseErrorKind::Unsupported("numeric initial value".into()));
        }
        init.insert(check(e)?);
    }
    let mut goal = BTreeSet::new();
    if let Some(g) = goal_expr {
        for a in conjunction(g, "goal")? {
            goal.insert(check(a)?);
        }
    }
    problem.init = init;
    problem.goal = goal;
    Ok(problem)
}

fn ground_atom(domain: &Domain, objects: &HashMap<&str, &str>, e: &Sexpr) -> Result<GroundAtom> {
    let (pred, args) = atom_parts(e)?;
    let decl = domain.predicate(pred).ok_or_else(|| {
        ParseError::new(
            e.pos(),
            ParseErrorKind::Undeclared {
                what: "predicate",
                name: pred.to_string(),
            },
        )
    })?;
    if decl.arity() != args.len() {
        return err(
            e.pos(),
            ParseErrorKind::ArityMismatch {
                predicate: pred.to_string(),
                expected: decl.arity(),
                found: args.len(),
            },
        );
    }
    for ((arg, pos), slot) in args.iter().zip(&decl.params) {
        let ty = objects.get(arg).ok_or_else(|| {
            ParseError::new(
                *pos,
                ParseErrorKind::Undeclared {
                    what: "object",
                    name: arg.to_string(),
                },
            )
        })?;
        if !domain.is_subtype(ty, &slot.ty) {
            return err(
                *pos,
                ParseErrorKind::TypeMismatch {
                    name: arg.to_string(),
                    expected: slot.ty.clone(),
                    found: ty.to_string(),
                },
            );
        }
    }
    Ok(GroundAtom {
        predicate: pred.to_string(),
        args: args.iter().map(|(a, _)| a.to_string()).collect(),
    })
}
