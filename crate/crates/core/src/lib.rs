//! Player intent languages for games.
//!
//! A game's interface is treated as a small programming language. Keys,
//! clicks, typed commands and hypertext choices elaborate into one core
//! intent syntax. [`step`] executes an intent against a [`GameState`];
//! [`typing`] derives a typing context from a state and decides which intents
//! are well typed; [`trace`] records, replays and queries play; [`skill`] is
//! a resource-typed language for composing intents into reusable programs.
//!
//! ```
//! use intentlang::{builtin, parse_command_line, step, WorldDef};
//!
//! let world = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
//! let g = world.initial_state().unwrap();
//! let r = step(&g, &parse_command_line("take flask").unwrap()).unwrap();
//! assert!(r.resp.is_success());
//! ```

pub mod builtin;
pub mod explore;
pub mod farm;
pub mod intent;
pub mod rng;
pub mod service;
pub mod skill;
pub mod step;
pub mod trace;
pub mod typing;
pub mod world;

pub use explore::Limits;
pub use intent::{
    elaborate_click, enumerate_choices, enumerate_choices_for, map_key, parse_command_line, Choice,
    ClickRejected, ClickTarget, CoreIntent, ParseError, Verb,
};
pub use step::{
    check_totality, format_response, step, Response, StepResult, TotalityReport, Verdict,
};
pub use trace::{query, replay, why, ReplayVerdict, Trace, TracePattern};
pub use typing::{
    abstract_state, check_progress, typecheck, Context, ProgressReport, TypingVerdict,
};
pub use world::{
    load_world, state_digest, Direction, EngineError, EntityId, EntityKind, GameState,
    ResourceType, RoomId, WorldDef, WorldError,
};
