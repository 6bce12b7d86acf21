use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::intent::{
    elaborate_click, enumerate_choices_for, map_key, parse_command_line, world_verbs, Choice,
    ClickTarget, CoreIntent, ParseError, Verb,
};
use crate::skill::{render_errors, Outcome, ParOrder, Program, RunConfig, RunError, SkillArgs};
use crate::step::{format_response, step, Response, Verdict};
use crate::trace::{transcript, Trace};
use crate::typing::{abstract_state, typecheck, TypingVerdict};
use crate::world::{state_digest, GameState, WorldDef, WorldError};

/// Which surface interface a session speaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Cli,
    Wasd,
    Birdseye,
    Hypertext,
    Farm,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::Cli,
        Profile::Wasd,
        Profile::Birdseye,
        Profile::Hypertext,
        Profile::Farm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Cli => "cli",
            Profile::Wasd => "wasd",
            Profile::Birdseye => "birdseye",
            Profile::Hypertext => "hypertext",
            Profile::Farm => "farm",
        }
    }

    /// The intent verbs this interface can produce in `g`.
    pub fn verbs(self, g: &GameState) -> Vec<Verb> {
        match self {
            Profile::Cli => vec![Verb::Move, Verb::Take, Verb::Wait],
            Profile::Wasd => vec![Verb::Move, Verb::Collect],
            Profile::Birdseye | Profile::Hypertext => vec![Verb::Move, Verb::Take],
            Profile::Farm if g.is_farm() => world_verbs(g).to_vec(),
            Profile::Farm => vec![Verb::Wait],
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown profile `{s}` (cli, wasd, birdseye, hypertext, farm)"))
    }
}

/// One raw input from a surface interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    /// Typed command text.
    Intent(String),
    Key(String),
    /// A room or entity name clicked on the map.
    Click(String),
    /// A hypertext choice, by id or 1-based position.
    Choice(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("at column {}: {error}", error.offset() + 1)]
    Parse { error: ParseError },
    #[error("{0}")]
    Rejected(String),
    #[error("`{verb}` is not available in the {profile} interface")]
    NotInProfile { verb: Verb, profile: Profile },
    #[error("no choice `{0}`")]
    NoSuchChoice(String),
    #[error("choose 1 to {0}")]
    OutOfRange(usize),
    #[error("{0}")]
    Skill(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// The result of one accepted input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stepped {
    pub intent: CoreIntent,
    pub response: Response,
    pub text: String,
    pub digest: String,
    pub recorded: bool,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub world_name: String,
    world: WorldDef,
    state: GameState,
    profile: Profile,
    trace: Trace,
    /// What the player actually typed or clicked, with the verdict.
    said: Vec<(String, Verdict)>,
}

impl Session {
    pub fn new(
        id: &str,
        world_name: &str,
        world: WorldDef,
        profile: Profile,
        seed: u64,
    ) -> Result<Self, WorldError> {
        let state = world.initial_state_with_seed(seed)?;
        Ok(Session {
            id: id.to_string(),
            world_name: world_name.to_string(),
            trace: Trace::for_world(&world, seed),
            world,
            state,
            profile,
            said: Vec::new(),
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn world(&self) -> &WorldDef {
        &self.world
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn choices(&self) -> Vec<Choice> {
        enumerate_choices_for(&self.state, &self.profile.verbs(&self.state))
    }

    /// `PLAYER:`/`GAME:` lines using the raw inputs.
    pub fn transcript(&self) -> String {
        transcript(self.said.iter().cloned())
    }

    fn elaborate(&self, input: &Input) -> Result<CoreIntent, SessionError> {
        let g = &self.state;
        let intent = match input {
            Input::Intent(text) => {
                parse_command_line(text).map_err(|error| SessionError::Parse { error })?
            }
            Input::Key(k) => map_key(k).map_err(|e| SessionError::Rejected(e.to_string()))?,
            Input::Click(name) => {
                let target = ClickTarget::resolve(g, name).ok_or_else(|| {
                    SessionError::Rejected(format!("`{name}` is not part of this world"))
                })?;
                elaborate_click(g, &target).map_err(|e| SessionError::Rejected(e.to_string()))?
            }
            Input::Choice(c) => {
                let choices = self.choices();
                let picked = match c.parse::<usize>() {
                    Ok(n) if n >= 1 && n <= choices.len() => &choices[n - 1],
                    Ok(_) => return Err(SessionError::OutOfRange(choices.len())),
                    Err(_) => choices
                        .iter()
                        .find(|ch| ch.id == *c)
                        .ok_or_else(|| SessionError::NoSuchChoice(c.clone()))?,
                };
                picked.intent.clone()
            }
        };
        let verbs = self.profile.verbs(g);
        if !verbs.contains(&intent.verb()) {
            return Err(SessionError::NotInProfile {
                verb: intent.verb(),
                profile: self.profile,
            });
        }
        if self.profile == Profile::Hypertext {
            if let TypingVerdict::IllTyped { missing, .. } = typecheck(&abstract_state(g), &intent)
            {
                let why: Vec<String> = missing.iter().map(ToString::to_string).collect();
                return Err(SessionError::Rejected(format!(
                    "`{intent}` is not offered here: needs {}",
                    why.join(", ")
                )));
            }
        }
        Ok(intent)
    }

    /// Elaborates, steps and records one input. Names the world never
    /// declared answer with a failure and leave no trace entry.
    pub fn input(&mut self, input: &Input) -> Result<Stepped, SessionError> {
        let intent = self.elaborate(input)?;
        let raw = match input {
            Input::Intent(t) => t.trim().to_string(),
            _ => intent.to_string(),
        };
        match step(&self.state, &intent) {
            Ok(r) => {
                self.trace.record(&r, &intent);
                self.said.push((raw, r.resp.verdict));
                self.state = r.next;
                Ok(Stepped {
                    text: format_response(&r.resp),
                    response: r.resp,
                    digest: state_digest(&self.state),
                    intent,
                    recorded: true,
                })
            }
            Err(e) => {
                let response = Response::failure(&e.to_string());
                Ok(Stepped {
                    text: format_response(&response),
                    response,
                    digest: state_digest(&self.state),
                    intent,
                    recorded: false,
                })
            }
        }
    }

    /// Loads, typechecks and runs a skill from this session's state,
    /// recording its steps into the session trace.
    pub fn run_skill(
        &mut self,
        source: &str,
        entry: &str,
        args: &SkillArgs,
        par_order: ParOrder,
    ) -> Result<Outcome, SessionError> {
        let program = Program::load(source, &self.state)
            .map_err(|e| SessionError::Skill(render_errors(source, &e)))?;
        let cfg = RunConfig {
            par_order,
            ..RunConfig::default()
        };
        let before = self.trace.len();
        let run = program.run(&self.state, entry, args, &cfg, self.trace.clone())?;
        for e in &run.trace.entries[before..] {
            self.said.push((e.intent.to_string(), e.resp.verdict));
        }
        self.trace = run.trace;
        self.state = run.state;
        Ok(run.outcome)
    }

    /// A JSON view of the state for clients.
    pub fn view(&self) -> Value {
        let g = &self.state;
        let here = g.player_room();
        let names = |it: &mut dyn Iterator<Item = &crate::world::EntityId>| -> Vec<String> {
            it.map(|e| e.to_string()).collect()
        };
        let rooms: Vec<Value> = g
            .rooms()
            .map(|r| json!({"name": r, "entities": names(&mut g.entities_in(r))}))
            .collect();
        let adjacency: Vec<Value> = g
            .adjacency()
            .map(|(a, d, b)| json!([a, d.as_str(), b]))
            .collect();
        let exits: Vec<&str> = crate::world::Direction::ALL
            .into_iter()
            .filter(|d| g.exit(here, *d).is_some())
            .map(|d| d.as_str())
            .collect();
        json!({
            "session": self.id,
            "world": self.world_name,
            "profile": self.profile,
            "room": here,
            "exits": exits,
            "here": names(&mut g.entities_in(here)),
            "inventory": names(&mut g.inventory()),
            "selected": g.selected(),
            "day": g.day(),
            "rooms": rooms,
            "adjacency": adjacency,
            "steps": self.trace.len(),
            "digest": state_digest(g),
        })
    }
}
