//! Contexts Γ abstracting game states, the judgment `Γ ⊢ intent ok`, context
//! succession and the progress checker.
//!
//! Premises are read off Γ only. The world's tool table and growth table are
//! static facts carried alongside it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::explore::{explore, Limits};
use crate::farm::FarmRules;
use crate::intent::{candidate_intents, world_verbs, CoreIntent, Verb};
use crate::step::{exploration_verbs, step, Verdict};
use crate::world::{
    state_digest, Atom, Direction, EntityId, EntityKind, GameState, Location, Proposition,
    ResourceType, RoomId, SharedRules, WorldDef, WorldError,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    /// `adjacent`, `tool_applies` and `grows` facts. Never change.
    pub statics: BTreeSet<Atom>,
    pub fluents: BTreeSet<Atom>,
    farm: bool,
    rules: SharedRules,
}

impl Context {
    pub fn is_farm(&self) -> bool {
        self.farm
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.statics.contains(a) || self.fluents.contains(a)
    }

    pub fn player_room(&self) -> Option<&RoomId> {
        self.fluents.iter().find_map(|a| match a {
            Atom::PlayerIn(r) => Some(r),
            _ => None,
        })
    }

    pub fn room_of(&self, o: &EntityId) -> Option<&RoomId> {
        self.fluents.iter().find_map(|a| match a {
            Atom::At(x, r) if x == o => Some(r),
            _ => None,
        })
    }

    pub fn type_of(&self, o: &EntityId) -> Option<&ResourceType> {
        self.fluents.iter().find_map(|a| match a {
            Atom::IsA(x, t) if x == o => Some(t),
            _ => None,
        })
    }

    pub fn kind_of(&self, o: &EntityId) -> Option<EntityKind> {
        self.fluents.iter().find_map(|a| match a {
            Atom::KindOf(x, k) if x == o => Some(*k),
            _ => None,
        })
    }

    pub fn selected(&self) -> Option<&EntityId> {
        self.fluents.iter().find_map(|a| match a {
            Atom::Selected(x) => Some(x),
            _ => None,
        })
    }

    pub fn exit(&self, from: &RoomId, d: Direction) -> Option<&RoomId> {
        self.statics.iter().find_map(|a| match a {
            Atom::Adjacent(r, e, to) if r == from && *e == d => Some(to),
            _ => None,
        })
    }

    fn rules(&self) -> Option<&FarmRules> {
        self.rules.0.as_deref()
    }

    fn check_invariants(&self) -> Result<(), String> {
        let rooms = self
            .fluents
            .iter()
            .filter(|a| matches!(a, Atom::PlayerIn(_)))
            .count();
        if rooms != 1 {
            return Err(format!("{rooms} playerIn facts"));
        }
        let mut placed = BTreeSet::new();
        for a in &self.fluents {
            if let Atom::At(o, _) | Atom::HoldsItem(o) = a {
                if !placed.insert(o) {
                    return Err(format!("`{o}` is in two places"));
                }
            }
        }
        let mut exits = BTreeSet::new();
        for a in &self.statics {
            if let Atom::Adjacent(r, d, _) = a {
                if !exits.insert((r, d)) {
                    return Err(format!("two exits {d} from `{r}`"));
                }
            }
        }
        Ok(())
    }
}

/// The canonical full-precision context of a state.
pub fn abstract_state(g: &GameState) -> Context {
    let mut statics = BTreeSet::new();
    for (from, d, to) in g.adjacency() {
        statics.insert(Atom::Adjacent(from.clone(), d, to.clone()));
    }
    let rules = g.rules();
    for r in &rules.tools {
        statics.insert(Atom::ToolApplies(r.tool.clone(), r.target.clone()));
    }
    if let Some(f) = &rules.fishing {
        statics.insert(Atom::ToolApplies(f.tool.clone(), f.target.clone()));
    }
    for crop in rules.growth_days.keys() {
        statics.insert(Atom::Grows(crop.clone()));
    }

    let mut fluents = BTreeSet::new();
    fluents.insert(Atom::PlayerIn(g.player_room().clone()));
    for (id, e) in g.entities() {
        fluents.insert(match &e.location {
            Location::Room(r) => Atom::At(id.clone(), r.clone()),
            Location::Inventory => Atom::HoldsItem(id.clone()),
        });
        fluents.insert(Atom::KindOf(id.clone(), e.kind));
        if let Some(t) = &e.rtype {
            fluents.insert(Atom::IsA(id.clone(), t.clone()));
        }
    }
    if let Some(s) = g.selected() {
        fluents.insert(Atom::Selected(s.clone()));
    }
    Context {
        statics,
        fluents,
        farm: g.is_farm(),
        rules: g.rules.clone(),
    }
}

/// A typing-rule premise. Existential premises that fail are reported as
/// patterns with `_` for the unknown part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Premise {
    Holds(Proposition),
    Pattern(String),
}

impl Premise {
    fn fact(a: Atom) -> Premise {
        Premise::Holds(Proposition::Atom(a))
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Premise::Holds(p) => p.fmt(f),
            Premise::Pattern(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypingVerdict {
    Ok,
    IllTyped { rule: Verb, missing: Vec<Premise> },
}

type Derivation = Result<Vec<Premise>, Premise>;

fn need(
    acc: &mut Vec<Premise>,
    ok: bool,
    satisfied: Premise,
    missing: impl FnOnce() -> Premise,
) -> Result<(), Premise> {
    if ok {
        acc.push(satisfied);
        Ok(())
    } else {
        Err(missing())
    }
}

fn is_crop(t: &ResourceType) -> bool {
    matches!(t.ctor.as_str(), "planted" | "growing") && t.param.is_some()
}

fn derive(ctx: &Context, i: &CoreIntent) -> Derivation {
    let mut acc = Vec::new();
    let Some(here) = ctx.player_room().cloned() else {
        return Err(Premise::Pattern("playerIn(_)".into()));
    };
    acc.push(Premise::fact(Atom::PlayerIn(here.clone())));
    let at_here = |o: &EntityId| Atom::At(o.clone(), here.clone());

    match i {
        CoreIntent::Take(o) => {
            let a = at_here(o);
            need(&mut acc, ctx.contains(&a), Premise::fact(a.clone()), || {
                Premise::fact(a)
            })?;
        }
        CoreIntent::Move(d) | CoreIntent::MoveOffscreen(d) => {
            let to = ctx.exit(&here, *d).cloned();
            need(
                &mut acc,
                to.is_some(),
                Premise::fact(Atom::Adjacent(
                    here.clone(),
                    *d,
                    to.clone().unwrap_or_else(|| here.clone()),
                )),
                || Premise::Pattern(format!("adjacent({here},{d},_)")),
            )?;
        }
        CoreIntent::Collect => {
            let item = ctx.fluents.iter().find_map(|a| match a {
                Atom::At(o, r) if *r == here && ctx.kind_of(o) == Some(EntityKind::Item) => {
                    Some(o.clone())
                }
                _ => None,
            });
            let missing = || Premise::Pattern(format!("at(_,{here})"));
            let Some(o) = item else { return Err(missing()) };
            acc.push(Premise::fact(at_here(&o)));
            acc.push(Premise::fact(Atom::KindOf(o, EntityKind::Item)));
        }
        CoreIntent::Select(o) => {
            let a = Atom::HoldsItem(o.clone());
            need(&mut acc, ctx.contains(&a), Premise::fact(a.clone()), || {
                Premise::fact(a)
            })?;
        }
        CoreIntent::Wait => {
            need(
                &mut acc,
                ctx.is_farm(),
                Premise::Pattern("farm_world".into()),
                || Premise::Pattern("farm_world".into()),
            )?;
        }
        CoreIntent::MoveNear(o) => match ctx.room_of(o) {
            Some(r) if *r == here => acc.push(Premise::fact(at_here(o))),
            Some(r) => {
                let d = Direction::ALL
                    .into_iter()
                    .find(|d| ctx.exit(&here, *d) == Some(r));
                let r = r.clone();
                need(
                    &mut acc,
                    d.is_some(),
                    Premise::fact(Atom::Adjacent(
                        here.clone(),
                        d.unwrap_or(Direction::North),
                        r.clone(),
                    )),
                    || Premise::Pattern(format!("adjacent({here},_,{r})")),
                )?;
                acc.push(Premise::fact(Atom::At(o.clone(), r)));
            }
            None => return Err(Premise::Pattern(format!("at({o},_)"))),
        },
        CoreIntent::Inquire(o) => {
            let a = at_here(o);
            need(&mut acc, ctx.contains(&a), Premise::fact(a.clone()), || {
                Premise::fact(a)
            })?;
            let t = ctx.type_of(o);
            match (ctx.kind_of(o), t) {
                (_, Some(t)) if is_crop(t) => {
                    acc.push(Premise::fact(Atom::IsA(o.clone(), t.clone())))
                }
                (Some(EntityKind::Npc), _) | (Some(EntityKind::Item), _) => {
                    let k = ctx.kind_of(o).unwrap();
                    acc.push(Premise::fact(Atom::KindOf(o.clone(), k)));
                }
                (Some(EntityKind::Opening), Some(t)) if t.ctor == "door" && t.param.is_some() => {
                    acc.push(Premise::fact(Atom::IsA(o.clone(), t.clone())));
                }
                (Some(EntityKind::Opening), _) => {
                    return Err(Premise::Pattern(format!("is_a({o},door(_))")))
                }
                _ => return Err(Premise::Pattern(format!("inquirable({o})"))),
            }
        }
        CoreIntent::Apply(o) => {
            let Some(tool) = ctx.selected().cloned() else {
                return Err(Premise::Pattern("selected(_)".into()));
            };
            acc.push(Premise::fact(Atom::Selected(tool.clone())));
            let a = at_here(o);
            need(&mut acc, ctx.contains(&a), Premise::fact(a.clone()), || {
                Premise::fact(a)
            })?;
            let Some(tool_t) = ctx.type_of(&tool).cloned() else {
                return Err(Premise::Pattern(format!("is_a({tool},_)")));
            };
            acc.push(Premise::fact(Atom::IsA(tool.clone(), tool_t.clone())));
            let Some(target_t) = ctx.type_of(o).cloned() else {
                return Err(Premise::Pattern(format!("is_a({o},_)")));
            };
            acc.push(Premise::fact(Atom::IsA(o.clone(), target_t.clone())));
            let applies = Atom::ToolApplies(tool_t.ctor.clone(), target_t.ctor.clone());
            need(
                &mut acc,
                ctx.contains(&applies),
                Premise::fact(applies.clone()),
                || Premise::fact(applies),
            )?;

            let rules = ctx
                .rules()
                .expect("tool_applies facts come from farm rules");
            if rules.is_fishing(&tool_t.ctor, &target_t.ctor) {
                return Ok(acc);
            }
            let rule = rules
                .rule(&tool_t.ctor, &target_t.ctor)
                .expect("tool_applies has a row");
            if rule.waters && !is_crop(&target_t) {
                return Err(Premise::Pattern(format!("is_a({o},planted(_))")));
            }
            if rule.becomes.as_deref() == Some("planted") {
                let Some(crop) = tool_t.param.clone().or_else(|| target_t.param.clone()) else {
                    return Err(Premise::Pattern("grows(_)".into()));
                };
                let g = Atom::Grows(crop);
                need(&mut acc, ctx.contains(&g), Premise::fact(g.clone()), || {
                    Premise::fact(g)
                })?;
            }
        }
    }
    Ok(acc)
}

/// `Γ ⊢ i ok`, or the rule and its first unsatisfied premise.
pub fn typecheck(ctx: &Context, i: &CoreIntent) -> TypingVerdict {
    match derive(ctx, i) {
        Ok(_) => TypingVerdict::Ok,
        Err(p) => TypingVerdict::IllTyped {
            rule: i.verb(),
            missing: vec![p],
        },
    }
}

/// The premises a well-typed intent was derived from, all concrete facts.
pub fn justify(ctx: &Context, i: &CoreIntent) -> Option<Vec<Proposition>> {
    let premises = derive(ctx, i).ok()?;
    Some(
        premises
            .into_iter()
            .filter_map(|p| match p {
                Premise::Holds(p) => Some(p),
                Premise::Pattern(_) => None,
            })
            .collect(),
    )
}

/// `Γ ⊆ Γ'`: the static facts carry over unchanged and Γ' is a well-formed
/// context. Fluents may change freely.
pub fn context_succeeds(g1: &Context, g2: &Context) -> bool {
    g1.statics == g2.statics && g2.check_invariants().is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EngineError,
    Failure,
    Context,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub state: String,
    pub intent: CoreIntent,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressReport {
    pub states: usize,
    pub pairs: usize,
    pub violations: Vec<Violation>,
    pub truncated: bool,
}

pub fn check_progress(world: &WorldDef, limits: Limits) -> Result<ProgressReport, WorldError> {
    check_progress_with(world, limits, typecheck)
}

/// Progress against an arbitrary typing judgment: every intent it accepts
/// must step to success without an engine error, and its successor context
/// must succeed the original.
pub fn check_progress_with<T>(
    world: &WorldDef,
    limits: Limits,
    typer: T,
) -> Result<ProgressReport, WorldError>
where
    T: Fn(&Context, &CoreIntent) -> TypingVerdict + Sync,
{
    let g0 = world.initial_state()?;
    let typed = candidate_intents(&g0, world_verbs(&g0));
    let drive = candidate_intents(&g0, &exploration_verbs(&g0));
    let result = explore(&g0, limits, |g| {
        let ctx = abstract_state(g);
        let mut violations = Vec::new();
        let mut checked = 0;
        let violation = |i: &CoreIntent, kind| Violation {
            state: state_digest(g),
            intent: i.clone(),
            kind,
        };
        for i in typed.iter().filter(|i| typer(&ctx, i) == TypingVerdict::Ok) {
            checked += 1;
            match step(g, i) {
                Err(_) => violations.push(violation(i, ViolationKind::EngineError)),
                Ok(r) if r.resp.verdict == Verdict::Failure => {
                    violations.push(violation(i, ViolationKind::Failure))
                }
                Ok(r) if !context_succeeds(&ctx, &abstract_state(&r.next)) => {
                    violations.push(violation(i, ViolationKind::Context))
                }
                Ok(_) => {}
            }
        }
        let succ = drive
            .iter()
            .filter_map(|i| step(g, i).ok())
            .map(|r| r.next)
            .collect();
        (succ, checked, violations)
    });
    Ok(ProgressReport {
        states: result.states,
        pairs: result.checked,
        violations: result.findings,
        truncated: result.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::world::{holds, load_world};

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
    fn abstraction_of_the_initial_state() {
        let g = g0();
        let ctx = abstract_state(&g);
        for a in [
            Atom::PlayerIn(r("lab")),
            Atom::At(e("flask"), r("lab")),
            Atom::At(e("book"), r("library")),
        ] {
            assert!(ctx.fluents.contains(&a), "{a}");
        }
        assert_eq!(ctx, abstract_state(&g));
        for a in ctx.fluents.iter().chain(&ctx.statics) {
            assert!(holds(&g, &a.clone().into()).unwrap(), "{a}");
        }
    }

    #[test]
    fn taken_flask_is_held_not_placed() {
        let g1 = crate::world::player_take(&g0(), &e("flask")).unwrap();
        let ctx = abstract_state(&g1);
        assert!(ctx.fluents.contains(&Atom::HoldsItem(e("flask"))));
        assert_eq!(ctx.room_of(&e("flask")), None);
    }

    #[test]
    fn typing_examples() {
        let ctx = abstract_state(&g0());
        assert_eq!(
            typecheck(&ctx, &CoreIntent::Take(e("flask"))),
            TypingVerdict::Ok
        );
        assert_eq!(
            typecheck(&ctx, &CoreIntent::Move(Direction::North)),
            TypingVerdict::IllTyped {
                rule: Verb::Move,
                missing: vec![Premise::Pattern("adjacent(lab,north,_)".into())]
            }
        );
        assert_eq!(
            typecheck(&ctx, &CoreIntent::Take(e("fnord"))),
            TypingVerdict::IllTyped {
                rule: Verb::Take,
                missing: vec![Premise::fact(Atom::At(e("fnord"), r("lab")))]
            }
        );
        let ill = typecheck(&ctx, &CoreIntent::Take(e("fnord")));
        let TypingVerdict::IllTyped { missing, .. } = ill else {
            unreachable!()
        };
        assert_eq!(missing[0].to_string(), "at(fnord,lab)");
    }

    #[test]
    fn succession() {
        let g0 = g0();
        let g1 = crate::world::player_take(&g0, &e("flask")).unwrap();
        let (c0, c1) = (abstract_state(&g0), abstract_state(&g1));
        assert!(context_succeeds(&c0, &c1));
        assert!(context_succeeds(&c0, &c0));
        let mut broken = c1.clone();
        broken
            .statics
            .remove(&Atom::Adjacent(r("lab"), Direction::South, r("library")));
        assert!(!context_succeeds(&c0, &broken));
        let mut two_rooms = c1;
        two_rooms.fluents.insert(Atom::PlayerIn(r("library")));
        assert!(!context_succeeds(&c0, &two_rooms));
    }

    #[test]
    fn justification_lists_concrete_premises() {
        let ctx = abstract_state(&g0());
        assert_eq!(
            justify(&ctx, &CoreIntent::Take(e("flask"))),
            Some(vec![
                Atom::PlayerIn(r("lab")).into(),
                Atom::At(e("flask"), r("lab")).into()
            ])
        );
        assert_eq!(justify(&ctx, &CoreIntent::Take(e("book"))), None);
    }

    #[test]
    fn move_take_progress_holds() {
        let def = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
        let report = check_progress(&def, Limits::default()).unwrap();
        assert_eq!(report.states, 16);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(!report.truncated);
    }

    #[test]
    fn farm_progress_holds_up_to_a_cutoff() {
        let def = WorldDef::parse(builtin::FARM_WORLD).unwrap();
        let report = check_progress(
            &def,
            Limits {
                max_states: 3_000,
                max_day: 30,
            },
        )
        .unwrap();
        assert!(report.truncated);
        assert!(
            report.violations.is_empty(),
            "{:?}",
            &report.violations[..report.violations.len().min(5)]
        );
    }

    #[test]
    fn weakened_take_rule_is_caught() {
        let def = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
        let without_at = |ctx: &Context, i: &CoreIntent| match i {
            CoreIntent::Take(_) => TypingVerdict::Ok,
            _ => typecheck(ctx, i),
        };
        let report = check_progress_with(&def, Limits::default(), without_at).unwrap();
        let take_book = report
            .violations
            .iter()
            .find(|v| v.intent == CoreIntent::Take(e("book")))
            .expect("taking the book from the lab fails");
        assert_eq!(take_book.kind, ViolationKind::Failure);
        assert_eq!(take_book.state.len(), 64);
    }
}
