//! The game-step function `⟨G; intent⟩ → ⟨G'; resp⟩` and the exhaustive
//! totality checker.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::explore::{explore, Limits};
use crate::farm::step_farm;
use crate::intent::{candidate_intents, CoreIntent, Verb};
use crate::world::{
    holds, player_move, player_take, state_digest, Atom, EngineError, EntityId, GameState,
    ResourceType, WorldDef, WorldError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Success,
    Failure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Success => "success",
            Verdict::Failure => "failure",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Response {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub payload: Vec<(ResourceType, EntityId)>,
    pub message: String,
}

impl Response {
    pub fn success(message: &str, payload: Vec<(ResourceType, EntityId)>) -> Self {
        Response {
            verdict: Verdict::Success,
            payload,
            message: message.to_string(),
        }
    }

    pub fn failure(message: &str) -> Self {
        Response {
            verdict: Verdict::Failure,
            payload: Vec::new(),
            message: message.to_string(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.verdict == Verdict::Success
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub next: GameState,
    pub resp: Response,
}

impl StepResult {
    pub(crate) fn success(
        next: GameState,
        message: &str,
        payload: Vec<(ResourceType, EntityId)>,
    ) -> Self {
        StepResult {
            next,
            resp: Response::success(message, payload),
        }
    }

    /// A failure leaves the state exactly as it was.
    pub(crate) fn unchanged(g: &GameState, message: &str) -> Self {
        StepResult {
            next: g.clone(),
            resp: Response::failure(message),
        }
    }
}

/// Every message the engine can answer with, apart from npc dialogue.
pub mod msg {
    pub const TAKEN: &str = "Taken.";
    pub const MOVED: &str = "You go that way.";
    pub const NO_EXIT: &str = "You can't go that way.";
    pub const ALREADY_HELD: &str = "You already have that.";
    pub const NOT_HERE: &str = "That is not here.";
    pub const NOT_PORTABLE: &str = "That can't be taken.";
    pub const NOTHING_TO_TAKE: &str = "There is nothing here to take.";
    pub const SELECTED: &str = "Selected.";
    pub const NOT_HELD: &str = "You don't have that.";
    pub const NOTHING_SELECTED: &str = "You have nothing in hand.";
    pub const NOTHING_HAPPENS: &str = "Nothing happens.";
    pub const DONE: &str = "Done.";
    pub const WATERED: &str = "Watered.";
    pub const PLANTED: &str = "Planted.";
    pub const WONT_GROW: &str = "That won't grow.";
    pub const STILL_GROWING: &str = "It is still growing.";
    pub const HARVESTED: &str = "Harvested.";
    pub const NPC_SILENT: &str = "They have nothing to say.";
    pub const STEP_INSIDE: &str = "You step inside.";
    pub const WONT_OPEN: &str = "It won't open.";
    pub const ALREADY_NEAR: &str = "You are next to it.";
    pub const WALKED_OVER: &str = "You walk over.";
    pub const TOO_FAR: &str = "That is too far away.";
    pub const DAY_PASSES: &str = "A day passes.";
    pub const TIME_STANDS_STILL: &str = "Time stands still here.";
    pub const NEED_ROD: &str = "You need a rod in hand.";
    pub const NO_WATER: &str = "There is no water here.";
    pub const CAUGHT_FISH: &str = "Something tugs at the line: a fish!";
    pub const CAUGHT_TRASH: &str = "Something tugs at the line: just trash.";
}

/// One step of the game. Total over well-formed intents whose names the
/// world declares; an undeclared name is an engine error, not a failure.
pub fn step(g: &GameState, i: &CoreIntent) -> Result<StepResult, EngineError> {
    if let Some(o) = i.entity() {
        if !g.is_known(o) {
            return Err(EngineError::UndeclaredEntity(o.clone()));
        }
    }
    Ok(match i {
        CoreIntent::Take(o) => {
            let near = holds(g, &Atom::PlayerNear(o.clone()).into())?;
            let held = holds(g, &Atom::HoldsItem(o.clone()).into())?;
            let portable = g.entity(o).is_some_and(|e| e.kind.is_portable());
            if near && !held && portable {
                StepResult::success(player_take(g, o)?, msg::TAKEN, vec![])
            } else if held {
                StepResult::unchanged(g, msg::ALREADY_HELD)
            } else if near {
                StepResult::unchanged(g, msg::NOT_PORTABLE)
            } else {
                StepResult::unchanged(g, msg::NOT_HERE)
            }
        }
        CoreIntent::Move(d) | CoreIntent::MoveOffscreen(d) => match g.exit(g.player_room(), *d) {
            Some(_) => StepResult::success(player_move(g, *d)?, msg::MOVED, vec![]),
            None => StepResult::unchanged(g, msg::NO_EXIT),
        },
        CoreIntent::Collect => {
            let room = g.player_room().clone();
            let items: Vec<EntityId> = g
                .entities_in(&room)
                .filter(|o| g.entity(o).is_some_and(|e| e.kind.is_portable()))
                .cloned()
                .collect();
            if items.is_empty() {
                StepResult::unchanged(g, msg::NOTHING_TO_TAKE)
            } else {
                let mut next = g.clone();
                for o in &items {
                    next = player_take(&next, o)?;
                }
                StepResult::success(next, msg::TAKEN, vec![])
            }
        }
        _ => step_farm(g, i),
    })
}

/// `ok: <message>` or `fail: <message>`, with payload types in brackets.
pub fn format_response(r: &Response) -> String {
    match r.verdict {
        Verdict::Failure => format!("fail: {}", r.message),
        Verdict::Success if r.payload.is_empty() => format!("ok: {}", r.message),
        Verdict::Success => {
            let types: Vec<String> = r.payload.iter().map(|(t, _)| t.to_string()).collect();
            format!("ok: {} [{}]", r.message, types.join(", "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndefinedPair {
    pub state: String,
    pub intent: CoreIntent,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalityReport {
    pub states: usize,
    pub pairs: usize,
    pub undefined: Vec<UndefinedPair>,
    pub truncated: bool,
}

/// Verbs that drive exploration: the world's own interface profile.
pub fn exploration_verbs(g: &GameState) -> Vec<Verb> {
    if g.is_farm() {
        crate::intent::world_verbs(g).to_vec()
    } else {
        vec![Verb::Move, Verb::Take, Verb::Collect]
    }
}

/// Breadth-first over the states reachable through the world's profile,
/// stepping every well-formed intent (all verbs, all declared names) in each.
pub fn check_totality(world: &WorldDef, limits: Limits) -> Result<TotalityReport, WorldError> {
    let g0 = world.initial_state()?;
    let explore_verbs = exploration_verbs(&g0);
    let all = candidate_intents(&g0, &Verb::ALL);
    let drive = candidate_intents(&g0, &explore_verbs);
    let result = explore(&g0, limits, |g| {
        let mut undefined = Vec::new();
        let mut succ = Vec::new();
        for i in &all {
            match step(g, i) {
                Ok(r) => {
                    if drive.contains(i) {
                        succ.push(r.next);
                    }
                }
                Err(e) => undefined.push(UndefinedPair {
                    state: state_digest(g),
                    intent: i.clone(),
                    error: e.to_string(),
                }),
            }
        }
        (succ, all.len(), undefined)
    });
    Ok(TotalityReport {
        states: result.states,
        pairs: result.checked,
        undefined: result.findings,
        truncated: result.truncated,
    })
}
