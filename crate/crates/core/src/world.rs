//! Concrete game states, the proposition judgment `G ⊢ P`, and the partial
//! semantic functions that transform states.
//!
//! A [`GameState`] is an immutable value. Every operation here returns a new
//! state; the step relation in [`crate::step`] is built on top of these.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::farm::{FarmRules, GrowthState};
use crate::rng::RngState;

/// `[a-z_][a-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoomId(String);

impl RoomId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RoomId {
    fn from(s: &str) -> Self {
        RoomId(s.to_string())
    }
}

impl fmt::Display for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        EntityId(s)
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "north" => Ok(Direction::North),
            "south" => Ok(Direction::South),
            "east" => Ok(Direction::East),
            "west" => Ok(Direction::West),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Item,
    Fixture,
    Npc,
    Opening,
}

impl EntityKind {
    pub fn is_portable(self) -> bool {
        self == EntityKind::Item
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Item => "item",
            EntityKind::Fixture => "fixture",
            EntityKind::Npc => "npc",
            EntityKind::Opening => "opening",
        }
    }
}

impl FromStr for EntityKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "item" => Ok(EntityKind::Item),
            "fixture" => Ok(EntityKind::Fixture),
            "npc" => Ok(EntityKind::Npc),
            "opening" => Ok(EntityKind::Opening),
            _ => Err(()),
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An atomic resource type such as `rock` or `seeds(parsnip)`.
///
/// Sums of resource types only occur in skill signatures; world entities
/// always carry a single atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ResourceType {
    pub ctor: String,
    pub param: Option<String>,
}

impl ResourceType {
    pub fn new(ctor: &str) -> Self {
        ResourceType {
            ctor: ctor.to_string(),
            param: None,
        }
    }

    pub fn with_param(ctor: &str, param: &str) -> Self {
        ResourceType {
            ctor: ctor.to_string(),
            param: Some(param.to_string()),
        }
    }
}

impl FromStr for ResourceType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (ctor, param) = match s.find('(') {
            Some(open) => {
                let inner = s[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("unclosed parameter in resource type `{s}`"))?;
                (s[..open].trim(), Some(inner.trim()))
            }
            None => (s, None),
        };
        if !is_identifier(ctor) {
            return Err(format!("bad resource type constructor `{ctor}`"));
        }
        if let Some(p) = param {
            if !is_identifier(p) {
                return Err(format!("bad resource type parameter `{p}`"));
            }
        }
        Ok(ResourceType {
            ctor: ctor.to_string(),
            param: param.map(str::to_string),
        })
    }
}

impl TryFrom<String> for ResourceType {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<ResourceType> for String {
    fn from(t: ResourceType) -> String {
        t.to_string()
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            Some(p) => write!(f, "{}({})", self.ctor, p),
            None => f.write_str(&self.ctor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Room(RoomId),
    Inventory,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub rtype: Option<ResourceType>,
    pub location: Location,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub says: Option<String>,
}

/// Static world rules shared by every state of one world. They take no part
/// in state equality or digests.
#[derive(Debug, Clone, Default)]
pub(crate) struct SharedRules(pub(crate) Option<Arc<FarmRules>>);

impl PartialEq for SharedRules {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for SharedRules {}

impl Hash for SharedRules {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GameState {
    pub(crate) rooms: BTreeSet<RoomId>,
    pub(crate) adjacency: BTreeMap<RoomId, BTreeMap<Direction, RoomId>>,
    pub(crate) entities: BTreeMap<EntityId, Entity>,
    /// Every entity name ever live in this world, including consumed ones.
    pub(crate) known: BTreeSet<EntityId>,
    pub(crate) player_room: RoomId,
    pub(crate) day: u32,
    pub(crate) rng: RngState,
    pub(crate) growth: BTreeMap<EntityId, GrowthState>,
    pub(crate) selected: Option<EntityId>,
    pub(crate) spawned: u32,
    #[serde(skip)]
    pub(crate) rules: SharedRules,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("undeclared entity `{0}`")]
    UndeclaredEntity(EntityId),
    #[error("undeclared room `{0}`")]
    UndeclaredRoom(RoomId),
    #[error("{op} is undefined here: {reason}")]
    Undefined { op: &'static str, reason: String },
}

impl GameState {
    pub fn rooms(&self) -> impl Iterator<Item = &RoomId> {
        self.rooms.iter()
    }

    pub fn has_room(&self, r: &RoomId) -> bool {
        self.rooms.contains(r)
    }

    pub fn exit(&self, from: &RoomId, d: Direction) -> Option<&RoomId> {
        self.adjacency.get(from).and_then(|m| m.get(&d))
    }

    /// All `(from, direction, to)` triples in a fixed order.
    pub fn adjacency(&self) -> impl Iterator<Item = (&RoomId, Direction, &RoomId)> {
        self.adjacency
            .iter()
            .flat_map(|(from, m)| m.iter().map(move |(d, to)| (from, *d, to)))
    }

    pub fn entity(&self, id: &EntityId) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = (&EntityId, &Entity)> {
        self.entities.iter()
    }

    pub fn location(&self, id: &EntityId) -> Option<&Location> {
        self.entities.get(id).map(|e| &e.location)
    }

    /// Known to the world: declared, spawned, or since consumed.
    pub fn is_known(&self, id: &EntityId) -> bool {
        self.known.contains(id)
    }

    pub fn known_entities(&self) -> impl Iterator<Item = &EntityId> {
        self.known.iter()
    }

    pub fn player_room(&self) -> &RoomId {
        &self.player_room
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn rng(&self) -> RngState {
        self.rng
    }

    pub fn selected(&self) -> Option<&EntityId> {
        self.selected.as_ref()
    }

    pub fn growth(&self, id: &EntityId) -> Option<&GrowthState> {
        self.growth.get(id)
    }

    pub fn growth_entries(&self) -> impl Iterator<Item = (&EntityId, &GrowthState)> {
        self.growth.iter()
    }

    pub fn is_farm(&self) -> bool {
        self.rules.0.is_some()
    }

    pub fn rules(&self) -> &FarmRules {
        static EMPTY: std::sync::OnceLock<FarmRules> = std::sync::OnceLock::new();
        match &self.rules.0 {
            Some(r) => r,
            None => EMPTY.get_or_init(FarmRules::default),
        }
    }

    /// Entities located in `room`, in name order.
    pub fn entities_in<'a>(&'a self, room: &'a RoomId) -> impl Iterator<Item = &'a EntityId> + 'a {
        self.entities
            .iter()
            .filter(move |(_, e)| matches!(&e.location, Location::Room(r) if r == room))
            .map(|(id, _)| id)
    }

    pub fn inventory(&self) -> impl Iterator<Item = &EntityId> {
        self.entities
            .iter()
            .filter(|(_, e)| e.location == Location::Inventory)
            .map(|(id, _)| id)
    }

    fn require_entity(&self, id: &EntityId) -> Result<Option<&Entity>, EngineError> {
        if !self.known.contains(id) {
            return Err(EngineError::UndeclaredEntity(id.clone()));
        }
        Ok(self.entities.get(id))
    }

    fn require_room(&self, r: &RoomId) -> Result<(), EngineError> {
        if self.rooms.contains(r) {
            Ok(())
        } else {
            Err(EngineError::UndeclaredRoom(r.clone()))
        }
    }

    pub(crate) fn entity_mut(&mut self, id: &EntityId) -> &mut Entity {
        self.entities
            .get_mut(id)
            .expect("entity_mut called on a live entity")
    }

    pub(crate) fn remove_entity(&mut self, id: &EntityId) {
        self.entities.remove(id);
        self.growth.remove(id);
        if self.selected.as_ref() == Some(id) {
            self.selected = None;
        }
    }

    /// Adds a fresh entity named `<stem>_<n>` to the inventory.
    pub(crate) fn spawn_into_inventory(
        &mut self,
        stem: &str,
        kind: EntityKind,
        rtype: ResourceType,
    ) -> EntityId {
        let id = loop {
            self.spawned += 1;
            let candidate = EntityId(format!("{stem}_{}", self.spawned));
            if !self.known.contains(&candidate) {
                break candidate;
            }
        };
        self.known.insert(id.clone());
        self.entities.insert(
            id.clone(),
            Entity {
                kind,
                rtype: Some(rtype),
                location: Location::Inventory,
                says: None,
            },
        );
        id
    }

    pub(crate) fn check_invariants(&self) -> Result<(), String> {
        if !self.rooms.contains(&self.player_room) {
            return Err(format!("player room `{}` not declared", self.player_room));
        }
        for (from, d, to) in self.adjacency() {
            if !self.rooms.contains(from) || !self.rooms.contains(to) {
                return Err(format!("adjacency {from} -{d}-> {to} leaves the room set"));
            }
        }
        for (id, e) in &self.entities {
            if !self.known.contains(id) {
                return Err(format!("entity `{id}` is not known"));
            }
            if let Location::Room(r) = &e.location {
                if !self.rooms.contains(r) {
                    return Err(format!("entity `{id}` in undeclared room `{r}`"));
                }
            }
            if e.location == Location::Inventory && !e.kind.is_portable() {
                return Err(format!("non-portable `{id}` is in the inventory"));
            }
        }
        if let Some(sel) = &self.selected {
            if self.location(sel) != Some(&Location::Inventory) {
                return Err(format!("selected `{sel}` is not held"));
            }
        }
        for (id, g) in &self.growth {
            if !self.entities.contains_key(id) {
                return Err(format!("growth entry for missing entity `{id}`"));
            }
            if g.days_watered > self.day {
                return Err(format!(
                    "`{id}` watered {} days by day {}",
                    g.days_watered, self.day
                ));
            }
        }
        Ok(())
    }
}

/// Atomic world propositions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    PlayerIn(RoomId),
    At(EntityId, RoomId),
    PlayerNear(EntityId),
    HoldsItem(EntityId),
    Adjacent(RoomId, Direction, RoomId),
    Selected(EntityId),
    IsA(EntityId, ResourceType),
    KindOf(EntityId, EntityKind),
    /// The world's tool table has a row for `(tool, target)` constructors.
    ToolApplies(String, String),
    /// The crop has a growth time in this world.
    Grows(String),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::PlayerIn(r) => write!(f, "playerIn({r})"),
            Atom::At(o, r) => write!(f, "at({o},{r})"),
            Atom::PlayerNear(o) => write!(f, "playerNear({o})"),
            Atom::HoldsItem(o) => write!(f, "holds_item({o})"),
            Atom::Adjacent(a, d, b) => write!(f, "adjacent({a},{d},{b})"),
            Atom::Selected(o) => write!(f, "selected({o})"),
            Atom::IsA(o, t) => write!(f, "is_a({o},{t})"),
            Atom::KindOf(o, k) => write!(f, "kind_of({o},{k})"),
            Atom::ToolApplies(a, b) => write!(f, "tool_applies({a},{b})"),
            Atom::Grows(c) => write!(f, "grows({c})"),
        }
    }
}

/// A proposition: an atom or its one-level negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Proposition {
    Atom(Atom),
    Not(Atom),
}

impl From<Atom> for Proposition {
    fn from(a: Atom) -> Self {
        Proposition::Atom(a)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Proposition::Atom(a) => a.fmt(f),
            Proposition::Not(a) => write!(f, "not({a})"),
        }
    }
}

/// The judgment `G ⊢ P`. Nearness is same-room.
pub fn holds(g: &GameState, p: &Proposition) -> Result<bool, EngineError> {
    match p {
        Proposition::Atom(a) => holds_atom(g, a),
        Proposition::Not(a) => holds_atom(g, a).map(|b| !b),
    }
}

fn holds_atom(g: &GameState, a: &Atom) -> Result<bool, EngineError> {
    let in_room = |o: &EntityId, r: &RoomId| -> Result<bool, EngineError> {
        Ok(matches!(g.require_entity(o)?, Some(e) if e.location == Location::Room(r.clone())))
    };
    match a {
        Atom::PlayerIn(r) => {
            g.require_room(r)?;
            Ok(&g.player_room == r)
        }
        Atom::At(o, r) => {
            g.require_room(r)?;
            in_room(o, r)
        }
        Atom::PlayerNear(o) => in_room(o, &g.player_room),
        Atom::HoldsItem(o) => {
            Ok(matches!(g.require_entity(o)?, Some(e) if e.location == Location::Inventory))
        }
        Atom::Adjacent(a, d, b) => {
            g.require_room(a)?;
            g.require_room(b)?;
            Ok(g.exit(a, *d) == Some(b))
        }
        Atom::Selected(o) => {
            g.require_entity(o)?;
            Ok(g.selected.as_ref() == Some(o))
        }
        Atom::IsA(o, t) => {
            Ok(matches!(g.require_entity(o)?, Some(e) if e.rtype.as_ref() == Some(t)))
        }
        Atom::KindOf(o, k) => Ok(matches!(g.require_entity(o)?, Some(e) if e.kind == *k)),
        Atom::ToolApplies(tool, target) => Ok(g.rules().applies(tool, target)),
        Atom::Grows(crop) => Ok(g.rules().growth_days(crop).is_some()),
    }
}

/// `playerTake(G, O)`: defined only when `O` is a portable item in the
/// player's room that the player does not already hold.
pub fn player_take(g: &GameState, o: &EntityId) -> Result<GameState, EngineError> {
    let undefined = |reason: &str| EngineError::Undefined {
        op: "player_take",
        reason: reason.to_string(),
    };
    let e = g
        .require_entity(o)?
        .ok_or_else(|| undefined("the entity no longer exists"))?;
    if !e.kind.is_portable() {
        return Err(undefined("not a portable item"));
    }
    if e.location == Location::Inventory {
        return Err(undefined("already held"));
    }
    if e.location != Location::Room(g.player_room.clone()) {
        return Err(undefined("not near the player"));
    }
    let mut next = g.clone();
    next.entity_mut(o).location = Location::Inventory;
    Ok(next)
}

/// Moves the player through the exit in direction `d`.
pub fn player_move(g: &GameState, d: Direction) -> Result<GameState, EngineError> {
    let to = g
        .exit(&g.player_room, d)
        .ok_or_else(|| EngineError::Undefined {
            op: "player_move",
            reason: format!("no exit {d} from {}", g.player_room),
        })?;
    let mut next = g.clone();
    next.player_room = to.clone();
    Ok(next)
}

/// Canonical serialization of `g`, hashed with SHA-256 (64 hex chars).
pub fn state_digest(g: &GameState) -> String {
    let bytes = serde_json::to_vec(g).expect("game states always serialize");
    hex_digest(&bytes)
}

/// Canonical JSON dump of a state (the input to [`state_digest`]).
pub fn state_snapshot(g: &GameState) -> String {
    serde_json::to_string(g).expect("game states always serialize")
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// World documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("malformed world document at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed world document at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("dangling room reference `{name}` at {path}")]
    DanglingRoom { path: String, name: String },
    #[error("duplicate entity `{name}` at {path}")]
    DuplicateEntity { path: String, name: String },
    #[error("start room `{name}` is not declared (at start)")]
    UndeclaredStart { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDecl {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub held: bool,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub rtype: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub says: Option<String>,
}

/// A parsed (not yet validated) world-definition document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDef {
    pub rooms: Vec<String>,
    #[serde(default)]
    pub adjacency: Vec<(String, String, String)>,
    #[serde(default)]
    pub entities: Vec<EntityDecl>,
    pub start: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub farm_rules: Option<FarmRules>,
}

/// Parses and validates a world document into its initial state.
pub fn load_world(doc: &str) -> Result<GameState, WorldError> {
    WorldDef::parse(doc)?.initial_state()
}

impl WorldDef {
    pub fn parse(doc: &str) -> Result<WorldDef, WorldError> {
        let def: WorldDef = serde_json::from_str(doc).map_err(|e| WorldError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        def.initial_state()?;
        Ok(def)
    }

    /// Digest identifying this world; traces refer to it as `world_ref`.
    pub fn digest(&self) -> String {
        hex_digest(&serde_json::to_vec(self).expect("world documents always serialize"))
    }

    pub fn declared_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn initial_state(&self) -> Result<GameState, WorldError> {
        self.initial_state_with_seed(self.declared_seed())
    }

    pub fn initial_state_with_seed(&self, seed: u64) -> Result<GameState, WorldError> {
        let malformed = |path: String, message: String| WorldError::Malformed { path, message };

        if self.rooms.is_empty() {
            return Err(malformed(
                "rooms".into(),
                "a world needs at least one room".into(),
            ));
        }
        let mut rooms = BTreeSet::new();
        for (i, r) in self.rooms.iter().enumerate() {
            if !is_identifier(r) {
                return Err(malformed(
                    format!("rooms[{i}]"),
                    format!("`{r}` is not an identifier"),
                ));
            }
            if !rooms.insert(RoomId::from(r.as_str())) {
                return Err(malformed(
                    format!("rooms[{i}]"),
                    format!("room `{r}` declared twice"),
                ));
            }
        }
        let room_ref = |path: String, name: &str| -> Result<RoomId, WorldError> {
            let id = RoomId::from(name);
            if rooms.contains(&id) {
                Ok(id)
            } else {
                Err(WorldError::DanglingRoom {
                    path,
                    name: name.to_string(),
                })
            }
        };

        let mut adjacency: BTreeMap<RoomId, BTreeMap<Direction, RoomId>> = BTreeMap::new();
        for (i, (from, dir, to)) in self.adjacency.iter().enumerate() {
            let from = room_ref(format!("adjacency[{i}][0]"), from)?;
            let d: Direction = dir.parse().map_err(|_| {
                malformed(
                    format!("adjacency[{i}][1]"),
                    format!("`{dir}` is not a direction"),
                )
            })?;
            let to = room_ref(format!("adjacency[{i}][2]"), to)?;
            if adjacency
                .entry(from.clone())
                .or_default()
                .insert(d, to)
                .is_some()
            {
                return Err(malformed(
                    format!("adjacency[{i}]"),
                    format!("second exit {d} from `{from}`"),
                ));
            }
        }

        let aliases = self.farm_rules.as_ref().map(|r| &r.aliases);
        let mut entities = BTreeMap::new();
        for (i, decl) in self.entities.iter().enumerate() {
            let path = |field: &str| format!("entities[{i}].{field}");
            if !is_identifier(&decl.name) || decl.name.parse::<Direction>().is_ok() {
                return Err(malformed(
                    path("name"),
                    format!("`{}` is not a valid entity name", decl.name),
                ));
            }
            if rooms.contains(&RoomId::from(decl.name.as_str())) {
                return Err(malformed(
                    path("name"),
                    format!("`{}` is also a room name", decl.name),
                ));
            }
            let kind: EntityKind = decl
                .kind
                .parse()
                .map_err(|_| malformed(path("kind"), format!("unknown kind `{}`", decl.kind)))?;
            let location = match (&decl.room, decl.held) {
                (Some(r), false) => Location::Room(room_ref(path("room"), r)?),
                (None, true) if kind.is_portable() => Location::Inventory,
                (None, true) => {
                    return Err(malformed(path("held"), "only items can be held".into()))
                }
                _ => {
                    return Err(malformed(
                        path("room"),
                        "give exactly one of `room` or `held`".into(),
                    ))
                }
            };
            let rtype = match &decl.rtype {
                Some(t) => {
                    let mut t: ResourceType = t.parse().map_err(|m| malformed(path("type"), m))?;
                    if let Some(aliases) = aliases {
                        t = FarmRules::normalize_with(aliases, t);
                    }
                    if t.ctor == "door" {
                        match &t.param {
                            Some(p) => {
                                room_ref(path("type"), p)?;
                            }
                            None => {
                                return Err(malformed(
                                    path("type"),
                                    "door types name a room".into(),
                                ))
                            }
                        }
                    }
                    Some(t)
                }
                None => None,
            };
            let entity = Entity {
                kind,
                rtype,
                location,
                says: decl.says.clone(),
            };
            if entities
                .insert(EntityId::from(decl.name.as_str()), entity)
                .is_some()
            {
                return Err(WorldError::DuplicateEntity {
                    path: path("name"),
                    name: decl.name.clone(),
                });
            }
        }

        let player_room = RoomId::from(self.start.as_str());
        if !rooms.contains(&player_room) {
            return Err(WorldError::UndeclaredStart {
                name: self.start.clone(),
            });
        }

        let rules = match &self.farm_rules {
            Some(r) => {
                r.validate()
                    .map_err(|(p, m)| malformed(format!("farm_rules.{p}"), m))?;
                Some(Arc::new(r.clone()))
            }
            None => None,
        };

        let mut state = GameState {
            rooms,
            adjacency,
            known: entities.keys().cloned().collect(),
            entities,
            player_room,
            day: 0,
            rng: RngState::new(seed),
            growth: BTreeMap::new(),
            selected: None,
            spawned: 0,
            rules: SharedRules(rules),
        };
        // Crops declared in the document start a fresh growth record.
        let planted: Vec<(EntityId, String)> = state
            .entities
            .iter()
            .filter_map(|(id, e)| {
                let t = e.rtype.as_ref()?;
                match (t.ctor.as_str(), &t.param) {
                    ("planted" | "growing", Some(crop)) => Some((id.clone(), crop.clone())),
                    _ => None,
                }
            })
            .collect();
        for (id, crop) in planted {
            state.growth.insert(id, GrowthState::new(&crop));
        }
        state
            .check_invariants()
            .map_err(|m| malformed("(document)".into(), m))?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    fn g0() -> GameState {
        load_world(builtin::MOVE_TAKE_WORLD).unwrap()
    }

    fn e(s: &str) -> EntityId {
        EntityId::from(s)
    }

    fn r(s: &str) -> RoomId {
        RoomId::from(s)
    }

    #[test]
    fn move_take_world_loads() {
        let g = g0();
        assert_eq!(g.player_room(), &r("lab"));
        assert_eq!(g.rooms().count(), 4);
        assert_eq!(g.exit(&r("lab"), Direction::South), Some(&r("library")));
        assert_eq!(g.exit(&r("library"), Direction::North), Some(&r("lab")));
        assert_eq!(g.exit(&r("lab"), Direction::North), None);
        assert_eq!(g.rng(), RngState::new(0));
    }

    #[test]
    fn dangling_adjacency_is_reported_with_its_location() {
        let doc = r#"{"rooms":["lab"],"adjacency":[["lab","north","attic"]],"entities":[],"start":"lab"}"#;
        assert_eq!(
            load_world(doc).unwrap_err(),
            WorldError::DanglingRoom {
                path: "adjacency[0][2]".into(),
                name: "attic".into()
            }
        );
    }

    #[test]
    fn empty_rooms_is_malformed() {
        let doc = r#"{"rooms":[],"adjacency":[],"entities":[],"start":"lab"}"#;
        assert!(
            matches!(load_world(doc), Err(WorldError::Malformed { path, .. }) if path == "rooms")
        );
    }

    #[test]
    fn duplicate_entities_and_bad_start_are_rejected() {
        let dup = r#"{"rooms":["a"],"entities":[{"name":"x","kind":"item","room":"a"},{"name":"x","kind":"item","room":"a"}],"start":"a"}"#;
        assert!(
            matches!(load_world(dup), Err(WorldError::DuplicateEntity { path, .. }) if path == "entities[1].name")
        );
        let start = r#"{"rooms":["a"],"start":"b"}"#;
        assert_eq!(
            load_world(start).unwrap_err(),
            WorldError::UndeclaredStart { name: "b".into() }
        );
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_rejected() {
        let unknown = r#"{"rooms":["a"],"start":"a","weather":"rain"}"#;
        assert!(matches!(
            load_world(unknown),
            Err(WorldError::Syntax { .. })
        ));
        let broken = "{\"rooms\": [\"a\",\n";
        assert!(matches!(
            load_world(broken),
            Err(WorldError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn second_exit_in_one_direction_is_rejected() {
        let doc = r#"{"rooms":["a","b","c"],"adjacency":[["a","north","b"],["a","north","c"]],"start":"a"}"#;
        assert!(
            matches!(load_world(doc), Err(WorldError::Malformed { path, .. }) if path == "adjacency[1]")
        );
    }

    #[test]
    fn holds_examples() {
        let g = g0();
        assert!(holds(&g, &Atom::PlayerNear(e("flask")).into()).unwrap());
        assert!(holds(&g, &Atom::PlayerIn(r("lab")).into()).unwrap());
        assert!(holds(&g, &Proposition::Not(Atom::At(e("book"), r("lab")))).unwrap());
        assert!(holds(
            &g,
            &Atom::Adjacent(r("lab"), Direction::West, r("courtyard")).into()
        )
        .unwrap());
        assert_eq!(
            holds(&g, &Atom::PlayerNear(e("fnord")).into()),
            Err(EngineError::UndeclaredEntity(e("fnord")))
        );
        assert_eq!(
            holds(&g, &Atom::PlayerIn(r("attic")).into()),
            Err(EngineError::UndeclaredRoom(r("attic")))
        );
    }

    #[test]
    fn take_examples() {
        let g0 = g0();
        let g1 = player_take(&g0, &e("flask")).unwrap();
        assert_eq!(g1.location(&e("flask")), Some(&Location::Inventory));
        // Frame: everything else is untouched.
        let mut back = g1.clone();
        back.entity_mut(&e("flask")).location = Location::Room(r("lab"));
        assert_eq!(back, g0);

        assert!(matches!(
            player_take(&g1, &e("flask")),
            Err(EngineError::Undefined { .. })
        ));
        assert!(matches!(
            player_take(&g0, &e("book")),
            Err(EngineError::Undefined { .. })
        ));
    }

    #[test]
    fn move_examples() {
        let g0 = g0();
        let south = player_move(&g0, Direction::South).unwrap();
        assert_eq!(south.player_room(), &r("library"));
        assert!(matches!(
            player_move(&g0, Direction::North),
            Err(EngineError::Undefined { .. })
        ));
        assert_eq!(player_move(&south, Direction::North).unwrap(), g0);
    }

    #[test]
    fn digests() {
        let a = g0();
        let b = load_world(builtin::MOVE_TAKE_WORLD).unwrap();
        assert_eq!(state_digest(&a), state_digest(&b));
        let g1 = player_take(&a, &e("flask")).unwrap();
        assert_ne!(state_digest(&a), state_digest(&g1));
        let d = state_digest(&a);
        assert_eq!(d.len(), 64);
        assert!(d.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn resource_types_parse_and_print() {
        let t: ResourceType = "seeds(parsnip)".parse().unwrap();
        assert_eq!(t, ResourceType::with_param("seeds", "parsnip"));
        assert_eq!(t.to_string(), "seeds(parsnip)");
        assert!("Seeds".parse::<ResourceType>().is_err());
        assert!("seeds(parsnip".parse::<ResourceType>().is_err());
    }

    #[test]
    fn farm_world_loads_with_aliases_normalized() {
        let g = load_world(builtin::FARM_WORLD).unwrap();
        assert!(g.is_farm());
        assert_eq!(g.player_room(), &r("farm"));
        assert_eq!(g.rng(), RngState::new(42));
        assert_eq!(
            g.entity(&e("plot_1")).unwrap().rtype,
            Some(ResourceType::new("hard_ground"))
        );
        assert_eq!(g.inventory().count(), 7);
    }
}
