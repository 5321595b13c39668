//! STRIPS + typing subset of PDDL: parsing, printing and grounding.

mod error;
mod ground;
mod model;
mod parse;
mod print;
pub(crate) mod sexpr;

pub use error::{ParseError, ParseErrorKind};
pub use ground::{ground, parse_call, GroundError, GroundedTask, ResolveError};
pub use model::*;
pub use parse::{domain_name, parse_domain, parse_problem};
