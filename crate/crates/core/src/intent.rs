//! The core intent syntax and the four surface interfaces that elaborate
//! into it: keys, clicks on a bird's-eye map, typed commands and hypertext
//! choices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::typing::{abstract_state, typecheck, TypingVerdict};
use crate::world::{is_identifier, Direction, EntityId, EntityKind, GameState, Location, RoomId};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CoreIntent {
    Move(Direction),
    Take(EntityId),
    Collect,
    Select(EntityId),
    Apply(EntityId),
    Inquire(EntityId),
    MoveNear(EntityId),
    MoveOffscreen(Direction),
    Wait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Move,
    Take,
    Collect,
    Select,
    Apply,
    Inquire,
    MoveNear,
    MoveOffscreen,
    Wait,
}

impl Verb {
    pub const ALL: [Verb; 9] = [
        Verb::Move,
        Verb::Take,
        Verb::Collect,
        Verb::Select,
        Verb::Apply,
        Verb::Inquire,
        Verb::MoveNear,
        Verb::MoveOffscreen,
        Verb::Wait,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Move => "move",
            Verb::Take => "take",
            Verb::Collect => "collect",
            Verb::Select => "select",
            Verb::Apply => "apply",
            Verb::Inquire => "inquire",
            Verb::MoveNear => "move_near",
            Verb::MoveOffscreen => "move_offscreen",
            Verb::Wait => "wait",
        }
    }

    pub fn from_word(w: &str) -> Option<Verb> {
        Some(match w {
            "move" | "go" => Verb::Move,
            "take" => Verb::Take,
            "collect" => Verb::Collect,
            "select" => Verb::Select,
            "apply" => Verb::Apply,
            "inquire" => Verb::Inquire,
            "move_near" => Verb::MoveNear,
            "move_offscreen" => Verb::MoveOffscreen,
            "wait" => Verb::Wait,
            _ => return None,
        })
    }

    fn arg(self) -> ArgKind {
        match self {
            Verb::Move | Verb::MoveOffscreen => ArgKind::Direction,
            Verb::Collect | Verb::Wait => ArgKind::None,
            _ => ArgKind::Entity,
        }
    }
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

enum ArgKind {
    None,
    Direction,
    Entity,
}

impl CoreIntent {
    pub fn verb(&self) -> Verb {
        match self {
            CoreIntent::Move(_) => Verb::Move,
            CoreIntent::Take(_) => Verb::Take,
            CoreIntent::Collect => Verb::Collect,
            CoreIntent::Select(_) => Verb::Select,
            CoreIntent::Apply(_) => Verb::Apply,
            CoreIntent::Inquire(_) => Verb::Inquire,
            CoreIntent::MoveNear(_) => Verb::MoveNear,
            CoreIntent::MoveOffscreen(_) => Verb::MoveOffscreen,
            CoreIntent::Wait => Verb::Wait,
        }
    }

    pub fn entity(&self) -> Option<&EntityId> {
        match self {
            CoreIntent::Take(o)
            | CoreIntent::Select(o)
            | CoreIntent::Apply(o)
            | CoreIntent::Inquire(o)
            | CoreIntent::MoveNear(o) => Some(o),
            _ => None,
        }
    }

    pub fn direction(&self) -> Option<Direction> {
        match self {
            CoreIntent::Move(d) | CoreIntent::MoveOffscreen(d) => Some(*d),
            _ => None,
        }
    }

    /// The argument as it is printed, if any.
    pub fn arg(&self) -> Option<&str> {
        self.entity()
            .map(EntityId::as_str)
            .or_else(|| self.direction().map(Direction::as_str))
    }

    fn with_entity(verb: Verb, o: EntityId) -> CoreIntent {
        match verb {
            Verb::Take => CoreIntent::Take(o),
            Verb::Select => CoreIntent::Select(o),
            Verb::Apply => CoreIntent::Apply(o),
            Verb::Inquire => CoreIntent::Inquire(o),
            Verb::MoveNear => CoreIntent::MoveNear(o),
            _ => unreachable!("{verb} takes no entity"),
        }
    }

    fn with_direction(verb: Verb, d: Direction) -> CoreIntent {
        match verb {
            Verb::Move => CoreIntent::Move(d),
            Verb::MoveOffscreen => CoreIntent::MoveOffscreen(d),
            _ => unreachable!("{verb} takes no direction"),
        }
    }
}

/// Canonical lowercase command form, e.g. `take flask`, `move north`.
impl fmt::Display for CoreIntent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.arg() {
            Some(a) => write!(f, "{} {}", self.verb(), a),
            None => f.write_str(self.verb().as_str()),
        }
    }
}

impl From<CoreIntent> for String {
    fn from(i: CoreIntent) -> String {
        i.to_string()
    }
}

impl TryFrom<String> for CoreIntent {
    type Error = ParseError;

    fn try_from(s: String) -> Result<Self, ParseError> {
        parse_command_line(&s)
    }
}

impl std::str::FromStr for CoreIntent {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_command_line(s)
    }
}

/// A located command-line parse error. Offsets are byte offsets into the
/// input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("unknown verb `{verb}` at byte {offset}")]
    UnknownVerb { verb: String, offset: usize },
    #[error("`{verb}` needs {expected} (at byte {offset})")]
    MissingArgument {
        verb: Verb,
        expected: &'static str,
        offset: usize,
    },
    #[error("unexpected `{token}` at byte {offset}")]
    ExtraTokens { token: String, offset: usize },
    #[error("`{token}` at byte {offset} is not {expected}")]
    BadArgument {
        token: String,
        expected: &'static str,
        offset: usize,
    },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Empty => 0,
            ParseError::UnknownVerb { offset, .. }
            | ParseError::MissingArgument { offset, .. }
            | ParseError::ExtraTokens { offset, .. }
            | ParseError::BadArgument { offset, .. } => *offset,
        }
    }
}

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split(' ')
        .scan(0usize, |pos, tok| {
            let start = *pos;
            *pos += tok.len() + 1;
            Some((start, tok))
        })
        .filter(|(_, tok)| !tok.is_empty())
}

/// Parses a typed command. Nouns are not checked against any world; that is
/// the type system's job.
pub fn parse_command_line(text: &str) -> Result<CoreIntent, ParseError> {
    let lowered = text.to_ascii_lowercase();
    let trimmed = lowered.trim_end_matches(['\n', '\r']);
    let mut toks = tokens(trimmed);
    let (voff, vtok) = toks.next().ok_or(ParseError::Empty)?;
    let verb = Verb::from_word(vtok).ok_or_else(|| ParseError::UnknownVerb {
        verb: text[voff..voff + vtok.len()].to_string(),
        offset: voff,
    })?;
    let end = voff + vtok.len();
    let intent = match verb.arg() {
        ArgKind::None => match verb {
            Verb::Collect => CoreIntent::Collect,
            _ => CoreIntent::Wait,
        },
        ArgKind::Direction => {
            let (aoff, atok) = toks.next().ok_or(ParseError::MissingArgument {
                verb,
                expected: "a direction",
                offset: end,
            })?;
            let d = atok.parse().map_err(|_| ParseError::BadArgument {
                token: atok.to_string(),
                expected: "a direction",
                offset: aoff,
            })?;
            CoreIntent::with_direction(verb, d)
        }
        ArgKind::Entity => {
            let (aoff, atok) = toks.next().ok_or(ParseError::MissingArgument {
                verb,
                expected: "an object",
                offset: end,
            })?;
            if !is_identifier(atok) || atok.parse::<Direction>().is_ok() {
                return Err(ParseError::BadArgument {
                    token: atok.to_string(),
                    expected: "an object name",
                    offset: aoff,
                });
            }
            CoreIntent::with_entity(verb, EntityId::from(atok))
        }
    };
    if let Some((off, tok)) = toks.next() {
        return Err(ParseError::ExtraTokens {
            token: tok.to_string(),
            offset: off,
        });
    }
    Ok(intent)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("key `{0}` is not bound")]
pub struct Unbound(pub String);

/// WASD or arrow keys move; `E` collects everything in the room.
pub fn map_key(key: &str) -> Result<CoreIntent, Unbound> {
    let d = match key {
        "w" | "W" | "ArrowUp" | "Up" | "↑" => Direction::North,
        "s" | "S" | "ArrowDown" | "Down" | "↓" => Direction::South,
        "d" | "D" | "ArrowRight" | "Right" | "→" => Direction::East,
        "a" | "A" | "ArrowLeft" | "Left" | "←" => Direction::West,
        "e" | "E" => return Ok(CoreIntent::Collect),
        _ => return Err(Unbound(key.to_string())),
    };
    Ok(CoreIntent::Move(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickTarget {
    Entity(EntityId),
    Room(RoomId),
}

impl ClickTarget {
    /// Room names and entity names are disjoint within a world.
    pub fn resolve(g: &GameState, name: &str) -> Option<ClickTarget> {
        let room = RoomId::from(name);
        if g.has_room(&room) {
            return Some(ClickTarget::Room(room));
        }
        let e = EntityId::from(name);
        g.is_known(&e).then_some(ClickTarget::Entity(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClickRejected {
    #[error("you are already there")]
    NoOp,
    #[error("out of range")]
    OutOfRange,
    #[error("nothing to do with that")]
    NotTakeable,
    #[error("`{0}` is not part of this world")]
    Undeclared(String),
}

/// Clicks only do something to things in the player's room or adjacent
/// rooms.
pub fn elaborate_click(g: &GameState, target: &ClickTarget) -> Result<CoreIntent, ClickRejected> {
    match target {
        ClickTarget::Room(r) => {
            if !g.has_room(r) {
                return Err(ClickRejected::Undeclared(r.to_string()));
            }
            if r == g.player_room() {
                return Err(ClickRejected::NoOp);
            }
            Direction::ALL
                .into_iter()
                .find(|d| g.exit(g.player_room(), *d) == Some(r))
                .map(CoreIntent::Move)
                .ok_or(ClickRejected::OutOfRange)
        }
        ClickTarget::Entity(o) => {
            if !g.is_known(o) {
                return Err(ClickRejected::Undeclared(o.to_string()));
            }
            let Some(e) = g.entity(o) else {
                return Err(ClickRejected::OutOfRange);
            };
            match &e.location {
                Location::Room(r) if r == g.player_room() && e.kind == EntityKind::Item => {
                    Ok(CoreIntent::Take(o.clone()))
                }
                Location::Room(r) if r == g.player_room() => Err(ClickRejected::NotTakeable),
                Location::Inventory => Err(ClickRejected::NoOp),
                Location::Room(_) => Err(ClickRejected::OutOfRange),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub id: String,
    pub label: String,
    pub intent: CoreIntent,
}

/// Intent verbs a world offers: farm worlds expose the farm verbs,
/// everything else moves and takes.
pub fn world_verbs(g: &GameState) -> &'static [Verb] {
    if g.is_farm() {
        &[
            Verb::Select,
            Verb::Apply,
            Verb::Inquire,
            Verb::MoveNear,
            Verb::MoveOffscreen,
            Verb::Wait,
        ]
    } else {
        &[Verb::Move, Verb::Take]
    }
}

/// Every syntactically possible intent over the world's names for the given
/// verbs.
pub fn candidate_intents(g: &GameState, verbs: &[Verb]) -> Vec<CoreIntent> {
    let mut out = Vec::new();
    for &v in verbs {
        match v.arg() {
            ArgKind::None => out.push(if v == Verb::Collect {
                CoreIntent::Collect
            } else {
                CoreIntent::Wait
            }),
            ArgKind::Direction => {
                out.extend(Direction::ALL.map(|d| CoreIntent::with_direction(v, d)))
            }
            ArgKind::Entity => out.extend(
                g.known_entities()
                    .map(|o| CoreIntent::with_entity(v, o.clone())),
            ),
        }
    }
    out
}

fn choice_id(i: &CoreIntent, room: &RoomId) -> String {
    let verb = match i.verb() {
        Verb::Move => "go",
        v => v.as_str(),
    };
    match i.arg() {
        Some(a) => format!("{verb}_{a}_from_{room}"),
        None => format!("{verb}_from_{room}"),
    }
}

/// The well-typed intents of the world's profile, as links sorted by id.
pub fn enumerate_choices(g: &GameState) -> Vec<Choice> {
    enumerate_choices_for(g, world_verbs(g))
}

pub fn enumerate_choices_for(g: &GameState, verbs: &[Verb]) -> Vec<Choice> {
    let ctx = abstract_state(g);
    let mut out: Vec<Choice> = candidate_intents(g, verbs)
        .into_iter()
        .filter(|i| typecheck(&ctx, i) == TypingVerdict::Ok)
        .map(|i| Choice {
            id: choice_id(&i, g.player_room()),
            label: i.to_string(),
            intent: i,
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::step::step;
    use crate::world::load_world;

    fn e(s: &str) -> EntityId {
        EntityId::from(s)
    }

    #[test]
    fn command_line_examples() {
        assert_eq!(
            parse_command_line("take flask"),
            Ok(CoreIntent::Take(e("flask")))
        );
        assert_eq!(
            parse_command_line("move north"),
            Ok(CoreIntent::Move(Direction::North))
        );
        assert_eq!(
            parse_command_line("Go  South"),
            Ok(CoreIntent::Move(Direction::South))
        );
        assert_eq!(
            parse_command_line("take fnord"),
            Ok(CoreIntent::Take(e("fnord")))
        );
        assert_eq!(parse_command_line("WAIT"), Ok(CoreIntent::Wait));
        assert_eq!(
            parse_command_line("take"),
            Err(ParseError::MissingArgument {
                verb: Verb::Take,
                expected: "an object",
                offset: 4
            })
        );
    }

    #[test]
    fn command_line_errors_are_located() {
        assert_eq!(parse_command_line(""), Err(ParseError::Empty));
        assert_eq!(
            parse_command_line("  jump"),
            Err(ParseError::UnknownVerb {
                verb: "jump".into(),
                offset: 2
            })
        );
        assert_eq!(
            parse_command_line("take flask now").unwrap_err().offset(),
            11
        );
        assert!(matches!(
            parse_command_line("move up"),
            Err(ParseError::BadArgument { offset: 5, .. })
        ));
        assert!(matches!(
            parse_command_line("take north"),
            Err(ParseError::BadArgument { .. })
        ));
    }

    #[test]
    fn keys() {
        assert_eq!(map_key("W"), Ok(CoreIntent::Move(Direction::North)));
        assert_eq!(map_key("↓"), Ok(CoreIntent::Move(Direction::South)));
        assert_eq!(map_key("ArrowRight"), Ok(CoreIntent::Move(Direction::East)));
        assert_eq!(map_key("a"), Ok(CoreIntent::Move(Direction::West)));
        assert_eq!(map_key("E"), Ok(CoreIntent::Collect));
        assert_eq!(map_key("Q"), Err(Unbound("Q".into())));
    }

    #[test]
    fn clicks() {
        let g0 = load_world(builtin::MOVE_TAKE_WORLD).unwrap();
        let click =
            |g: &GameState, name: &str| elaborate_click(g, &ClickTarget::resolve(g, name).unwrap());
        assert_eq!(click(&g0, "flask"), Ok(CoreIntent::Take(e("flask"))));
        assert_eq!(
            click(&g0, "library"),
            Ok(CoreIntent::Move(Direction::South))
        );
        assert_eq!(click(&g0, "lab"), Err(ClickRejected::NoOp));
        assert_eq!(click(&g0, "book"), Err(ClickRejected::OutOfRange));
        let lib = step(&g0, &CoreIntent::Move(Direction::South)).unwrap().next;
        assert_eq!(click(&lib, "quarters"), Err(ClickRejected::OutOfRange));
        assert!(ClickTarget::resolve(&g0, "attic").is_none());
    }

    #[test]
    fn hypertext_choices() {
        let g0 = load_world(builtin::MOVE_TAKE_WORLD).unwrap();
        let ids: Vec<String> = enumerate_choices(&g0).into_iter().map(|c| c.id).collect();
        assert_eq!(
            ids,
            [
                "go_east_from_lab",
                "go_south_from_lab",
                "go_west_from_lab",
                "take_flask_from_lab"
            ]
        );
        let lib = step(&g0, &CoreIntent::Move(Direction::South)).unwrap().next;
        let ids: Vec<String> = enumerate_choices(&lib).into_iter().map(|c| c.id).collect();
        assert_eq!(ids, ["go_north_from_library", "take_book_from_library"]);
    }

    #[test]
    fn isolated_empty_room_has_no_choices() {
        let g = load_world(r#"{"rooms":["cell"],"start":"cell"}"#).unwrap();
        assert!(enumerate_choices(&g).is_empty());
    }

    #[test]
    fn display_parses_back() {
        for i in [
            CoreIntent::Move(Direction::West),
            CoreIntent::Take(e("flask")),
            CoreIntent::Collect,
            CoreIntent::MoveNear(e("rock_3")),
            CoreIntent::MoveOffscreen(Direction::East),
            CoreIntent::Wait,
        ] {
            assert_eq!(parse_command_line(&i.to_string()), Ok(i));
        }
    }
}
