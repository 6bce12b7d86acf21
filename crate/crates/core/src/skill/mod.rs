//! A resource-typed language for player skills.
//!
//! Skills compose primitive intents with sequencing (`;`), parallel
//! composition (`||`), `do e recv <pattern>. e`, `case` over sum types,
//! recursion and `fail`.
//!
//! ```
//! use intentlang::skill::{Program, RunConfig, SkillArgs};
//! use intentlang::{builtin, Trace, WorldDef};
//!
//! let world = WorldDef::parse(builtin::FARM_WORLD).unwrap();
//! let g = world.initial_state().unwrap();
//! let program = Program::load(
//!     "action mine(p: pickaxe, r: rock) = select p; move_near r; apply r : mineral",
//!     &g,
//! )
//! .unwrap();
//! let args = SkillArgs::from([("p", "pickaxe_1"), ("r", "rock_3")]);
//! let run = program
//!     .run(&g, "mine", &args, &RunConfig::default(), Trace::for_world(&world, 42))
//!     .unwrap();
//! assert_eq!(run.outcome.to_string(), "produced result = rock_drop_1 : mineral");
//! ```

pub mod ast;
mod check;
mod interp;
mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

pub use ast::{Arg, Binding, Expr, ExprKind, SkillDef, Span, SumType, TypeParam};
pub use check::{Class, Prod, WorldSig};
pub use interp::{Outcome, ParOrder, Run, RunConfig, RunError, SkillArgs, DEFAULT_DEPTH_LIMIT};
pub use parser::parse_skills;

use crate::world::{GameState, ResourceType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkillErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("skill `{0}` is defined twice")]
    DuplicateSkill(String),
    #[error("unbound resource `{0}`")]
    UnboundResource(String),
    #[error("case does not cover `{0}`")]
    NonExhaustiveCase(ResourceType),
    #[error("`{0}` is used by both sides of `||`")]
    OverlappingPar(String),
    #[error("type mismatch: expected {expected}, got {got}")]
    TypeMismatch { expected: String, got: String },
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("`{skill}` takes {expected} argument(s), got {got}")]
    Arity {
        skill: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown type `{0}`")]
    UnknownType(String),
}

/// An error located in skill source.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct SkillError {
    pub kind: SkillErrorKind,
    pub span: Span,
}

/// Checks a set of definitions against a world's resource signature.
pub fn typecheck_skills(defs: &[SkillDef], sig: &WorldSig) -> Result<(), Vec<SkillError>> {
    let map: BTreeMap<String, SkillDef> =
        defs.iter().map(|d| (d.name.clone(), d.clone())).collect();
    let errors = check::Checker::new(sig, &map).check_all();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// A parsed and typechecked set of skills.
#[derive(Debug, Clone)]
pub struct Program {
    defs: BTreeMap<String, SkillDef>,
}

impl Program {
    /// Parses `src` and typechecks it against the signature of `g`.
    pub fn load(src: &str, g: &GameState) -> Result<Program, Vec<SkillError>> {
        Program::load_with(src, &WorldSig::of(g))
    }

    pub fn load_with(src: &str, sig: &WorldSig) -> Result<Program, Vec<SkillError>> {
        let defs = parse_skills(src)?;
        typecheck_skills(&defs, sig)?;
        Ok(Program::unchecked(defs))
    }

    /// Wraps definitions without typechecking them.
    pub fn unchecked(defs: Vec<SkillDef>) -> Program {
        Program {
            defs: defs.into_iter().map(|d| (d.name.clone(), d)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&SkillDef> {
        self.defs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(String::as_str)
    }

    pub fn defs(&self) -> impl Iterator<Item = &SkillDef> {
        self.defs.values()
    }
}

/// Renders errors against their source, one caret line each.
pub fn render_errors(src: &str, errors: &[SkillError]) -> String {
    let mut out = String::new();
    for e in errors {
        let line = src.lines().nth(e.span.line.saturating_sub(1)).unwrap_or("");
        let width = src
            .get(e.span.start..e.span.end)
            .map_or(1, |s| s.lines().next().unwrap_or("").chars().count().max(1));
        out.push_str(&format!(
            "{e}\n  {line}\n  {}{}\n",
            " ".repeat(e.span.col.saturating_sub(1)),
            "^".repeat(width)
        ));
    }
    out
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, d) in self.defs.values().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
