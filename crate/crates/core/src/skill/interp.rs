use std::collections::BTreeMap;
use std::fmt;

use super::ast::{Arg, Binding, Expr, ExprKind, SkillDef, SumType};
use super::check::{infer_type_args, subst, subst_sum, WorldSig};
use super::Program;
use crate::intent::{CoreIntent, Verb};
use crate::step::step;
use crate::trace::Trace;
use crate::world::{Direction, EngineError, EntityId, GameState, Location, ResourceType};

pub const DEFAULT_DEPTH_LIMIT: usize = 10_000;

/// Which operand of `||` runs first. Results are always assembled in
/// source order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParOrder {
    #[default]
    LeftFirst,
    RightFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub depth_limit: usize,
    pub par_order: ParOrder,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            depth_limit: DEFAULT_DEPTH_LIMIT,
            par_order: ParOrder::LeftFirst,
        }
    }
}

/// Entry arguments: resource variables to entity names, and type binders to
/// concrete parameters (`t` to `parsnip`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkillArgs(pub BTreeMap<String, String>);

impl<const N: usize> From<[(&str, &str); N]> for SkillArgs {
    fn from(pairs: [(&str, &str); N]) -> Self {
        SkillArgs(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }
}

impl SkillArgs {
    pub fn insert(&mut self, var: &str, value: &str) {
        self.0.insert(var.to_string(), value.to_string());
    }
}

pub type Value = (ResourceType, EntityId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Bound as `result`, or `result_0`, `result_1`, ... for tuples.
    Produced(BTreeMap<String, Value>),
    Failed {
        at: String,
        reason: String,
    },
}

impl Outcome {
    pub fn is_produced(&self) -> bool {
        matches!(self, Outcome::Produced(_))
    }

    pub fn result(&self) -> Option<&Value> {
        match self {
            Outcome::Produced(m) => m.get("result"),
            Outcome::Failed { .. } => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Produced(m) if m.is_empty() => f.write_str("produced nothing"),
            Outcome::Produced(m) => {
                let parts: Vec<String> = m
                    .iter()
                    .map(|(k, (t, e))| format!("{k} = {e} : {t}"))
                    .collect();
                write!(f, "produced {}", parts.join(", "))
            }
            Outcome::Failed { at, reason } => write!(f, "failed at `{at}`: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("call depth exceeded {0}")]
    DepthExceeded(usize),
    #[error("`{got}` does not match pattern type {expected}")]
    PatternMismatch { expected: String, got: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("bad argument: {0}")]
    Argument(String),
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
}

#[derive(Debug, Clone)]
pub struct Run {
    pub state: GameState,
    pub outcome: Outcome,
    pub trace: Trace,
}

type Env = BTreeMap<String, Value>;
type Subst = BTreeMap<String, String>;

enum Frame<'a> {
    Seq(&'a Expr),
    ParSecond {
        second: &'a Expr,
        first_is_left: bool,
    },
    ParJoin {
        first: Vec<Value>,
        first_is_left: bool,
    },
    Recv {
        pattern: &'a [Binding],
        rest: &'a Expr,
    },
    Restore {
        env: Env,
        subst: Subst,
        call: bool,
    },
}

enum Ctl<'a> {
    Eval(&'a Expr),
    Return(Vec<Value>),
}

struct Machine<'a> {
    program: &'a Program,
    sig: WorldSig,
    cfg: RunConfig,
    g: GameState,
    trace: Trace,
    env: Env,
    subst: Subst,
    depth: usize,
    stack: Vec<Frame<'a>>,
}

enum Halt {
    Failed { at: String, reason: String },
    Error(RunError),
}

impl From<RunError> for Halt {
    fn from(e: RunError) -> Self {
        Halt::Error(e)
    }
}

fn mismatch(expected: &SumType, got: &ResourceType) -> RunError {
    RunError::PatternMismatch {
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

impl<'a> Machine<'a> {
    fn norm_sum(&self, t: &SumType) -> SumType {
        subst_sum(&t.map(|m| self.sig.normalize(m)), &self.subst)
    }

    fn run(&mut self, body: &'a Expr) -> Result<Vec<Value>, Halt> {
        let mut ctl = Ctl::Eval(body);
        loop {
            ctl = match ctl {
                Ctl::Eval(e) => self.eval(e)?,
                Ctl::Return(vals) => match self.stack.pop() {
                    None => return Ok(vals),
                    Some(frame) => self.resume(frame, vals)?,
                },
            };
        }
    }

    fn resume(&mut self, frame: Frame<'a>, vals: Vec<Value>) -> Result<Ctl<'a>, Halt> {
        Ok(match frame {
            Frame::Seq(next) => Ctl::Eval(next),
            Frame::ParSecond {
                second,
                first_is_left,
            } => {
                self.stack.push(Frame::ParJoin {
                    first: vals,
                    first_is_left,
                });
                Ctl::Eval(second)
            }
            Frame::ParJoin {
                first,
                first_is_left,
            } => {
                let (mut left, right) = if first_is_left {
                    (first, vals)
                } else {
                    (vals, first)
                };
                left.extend(right);
                Ctl::Return(left)
            }
            Frame::Recv { pattern, rest } => {
                if vals.len() != pattern.len() {
                    return Err(RunError::PatternMismatch {
                        expected: format!("{} value(s)", pattern.len()),
                        got: format!("{} value(s)", vals.len()),
                    }
                    .into());
                }
                let saved = self.env.clone();
                for (b, v) in pattern.iter().zip(vals) {
                    let want = self.norm_sum(&b.ty);
                    if !want.contains(&v.0) {
                        return Err(mismatch(&want, &v.0).into());
                    }
                    self.env.insert(b.name.clone(), v);
                }
                self.stack.push(Frame::Restore {
                    env: saved,
                    subst: self.subst.clone(),
                    call: false,
                });
                Ctl::Eval(rest)
            }
            Frame::Restore { env, subst, call } => {
                self.env = env;
                self.subst = subst;
                if call {
                    self.depth -= 1;
                }
                Ctl::Return(vals)
            }
        })
    }

    fn eval(&mut self, e: &'a Expr) -> Result<Ctl<'a>, Halt> {
        Ok(match &e.kind {
            ExprKind::Fail => {
                return Err(Halt::Failed {
                    at: "fail".into(),
                    reason: "the skill gave up".into(),
                })
            }
            ExprKind::Var(x) => match self.env.get(x) {
                Some(v) => Ctl::Return(vec![v.clone()]),
                None => self.call(x, &[])?,
            },
            ExprKind::Seq(a, b) => {
                self.stack.push(Frame::Seq(b));
                Ctl::Eval(a)
            }
            ExprKind::Par(a, b) => {
                let (first, second, first_is_left) = match self.cfg.par_order {
                    ParOrder::LeftFirst => (a, b, true),
                    ParOrder::RightFirst => (b, a, false),
                };
                self.stack.push(Frame::ParSecond {
                    second,
                    first_is_left,
                });
                Ctl::Eval(first)
            }
            ExprKind::DoRecv {
                body,
                pattern,
                rest,
            } => {
                self.stack.push(Frame::Recv { pattern, rest });
                Ctl::Eval(body)
            }
            ExprKind::Case { scrutinee, arms } => {
                let v = self
                    .env
                    .get(scrutinee)
                    .cloned()
                    .ok_or_else(|| RunError::Argument(format!("`{scrutinee}` is unbound")))?;
                let arm = arms
                    .iter()
                    .find(|(b, _)| self.norm_sum(&b.ty).contains(&v.0));
                let Some((b, body)) = arm else {
                    let all = arms
                        .iter()
                        .fold(SumType(Default::default()), |acc, (b, _)| {
                            acc.union(&self.norm_sum(&b.ty))
                        });
                    return Err(mismatch(&all, &v.0).into());
                };
                self.stack.push(Frame::Restore {
                    env: self.env.clone(),
                    subst: self.subst.clone(),
                    call: false,
                });
                self.env.insert(b.name.clone(), v);
                Ctl::Eval(body)
            }
            ExprKind::Call { name, args } => self.call(name, args)?,
            ExprKind::Prim { verb, arg } => Ctl::Return(self.prim(*verb, arg.as_ref())?),
        })
    }

    fn call(&mut self, name: &str, args: &[Arg]) -> Result<Ctl<'a>, Halt> {
        let def: &'a SkillDef = self
            .program
            .get(name)
            .ok_or_else(|| RunError::UnknownSkill(name.to_string()))?;
        let binders: Vec<String> = def.type_params.iter().map(|t| t.name.clone()).collect();
        let explicit = !binders.is_empty() && args.len() == binders.len() + def.params.len();
        let (type_args, value_args) = args.split_at(if explicit { binders.len() } else { 0 });
        let mut values = Vec::new();
        for a in value_args {
            let v = match a {
                Arg::Name(n, _) => self.env.get(n).cloned(),
                Arg::Typed(..) => None,
            };
            values.push(
                v.ok_or_else(|| RunError::Argument(format!("`{a}` is not a bound resource")))?,
            );
        }
        if values.len() != def.params.len() {
            return Err(RunError::Argument(format!(
                "`{name}` takes {} argument(s)",
                def.params.len()
            ))
            .into());
        }
        let subst = if explicit {
            binders
                .iter()
                .zip(type_args)
                .map(|(b, a)| {
                    let n = a.to_string();
                    (b.clone(), self.subst.get(&n).cloned().unwrap_or(n))
                })
                .collect()
        } else {
            let params: Vec<&SumType> = def.params.iter().map(|p| &p.ty).collect();
            let singles: Vec<SumType> = values
                .iter()
                .map(|v| SumType::single(v.0.clone()))
                .collect();
            let refs: Vec<&SumType> = singles.iter().collect();
            infer_type_args(&binders, &params, &refs).map_err(RunError::Argument)?
        };
        self.enter(def, values, subst)
    }

    fn enter(
        &mut self,
        def: &'a SkillDef,
        values: Vec<Value>,
        subst: Subst,
    ) -> Result<Ctl<'a>, Halt> {
        if self.depth >= self.cfg.depth_limit {
            return Err(RunError::DepthExceeded(self.cfg.depth_limit).into());
        }
        self.depth += 1;
        let env = def
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(values)
            .collect();
        self.stack.push(Frame::Restore {
            env: std::mem::replace(&mut self.env, env),
            subst: std::mem::replace(&mut self.subst, subst),
            call: true,
        });
        Ok(Ctl::Eval(&def.body))
    }

    /// Finds an entity of class `t`: in the inventory for `select`, otherwise
    /// nearest room first.
    fn resolve_class(&self, verb: Verb, t: &ResourceType) -> Option<EntityId> {
        let g = &self.g;
        let matches = |id: &EntityId| {
            g.entity(id)
                .and_then(|e| e.rtype.as_ref())
                .is_some_and(|et| {
                    let et = self.sig.normalize(et);
                    if t.param.is_some() {
                        et == *t
                    } else {
                        et.ctor == t.ctor
                    }
                })
        };
        let first =
            |ids: &mut dyn Iterator<Item = &EntityId>| ids.filter(|i| matches(i)).min().cloned();
        if verb == Verb::Select {
            return first(&mut g.inventory());
        }
        let here = g.player_room();
        if let Some(e) = first(&mut g.entities_in(here)) {
            return Some(e);
        }
        for d in Direction::ALL {
            if let Some(r) = g.exit(here, d) {
                if let Some(e) = first(&mut g.entities_in(r)) {
                    return Some(e);
                }
            }
        }
        first(
            &mut g
                .entities()
                .map(|(id, _)| id)
                .filter(|id| matches!(g.location(id), Some(Location::Room(_)))),
        )
    }

    fn prim(&mut self, verb: Verb, arg: Option<&Arg>) -> Result<Vec<Value>, Halt> {
        let describe = || match arg {
            Some(a) => format!("{} {a}", verb.as_str()),
            None => verb.as_str().to_string(),
        };
        let entity = |m: &Self| -> Option<EntityId> {
            let class = match arg? {
                Arg::Name(n, _) => {
                    if let Some(v) = m.env.get(n) {
                        return Some(v.1.clone());
                    }
                    let id = EntityId::from(n.as_str());
                    if m.g.is_known(&id) {
                        return Some(id);
                    }
                    m.sig.normalize(&ResourceType::new(n))
                }
                Arg::Typed(t, _) => subst(&m.sig.normalize(t), &m.subst),
            };
            m.resolve_class(verb, &class)
        };
        let direction = || -> Result<Direction, Halt> {
            arg.and_then(|a| a.to_string().parse().ok()).ok_or_else(|| {
                RunError::Argument(format!("`{}` needs a direction", describe())).into()
            })
        };
        let intent = match verb {
            Verb::Move => CoreIntent::Move(direction()?),
            Verb::MoveOffscreen => CoreIntent::MoveOffscreen(direction()?),
            Verb::Wait => CoreIntent::Wait,
            Verb::Collect => CoreIntent::Collect,
            _ => {
                let Some(o) = entity(self) else {
                    return Err(Halt::Failed {
                        at: describe(),
                        reason: "no such entity".into(),
                    });
                };
                match verb {
                    Verb::Take => CoreIntent::Take(o),
                    Verb::Select => CoreIntent::Select(o),
                    Verb::Apply => CoreIntent::Apply(o),
                    Verb::Inquire => CoreIntent::Inquire(o),
                    Verb::MoveNear => CoreIntent::MoveNear(o),
                    _ => unreachable!(),
                }
            }
        };
        let r = step(&self.g, &intent).map_err(RunError::from)?;
        self.trace.record(&r, &intent);
        self.g = r.next;
        if r.resp.is_success() {
            Ok(r.resp.payload)
        } else {
            Err(Halt::Failed {
                at: intent.to_string(),
                reason: r.resp.message,
            })
        }
    }
}

impl Program {
    /// Runs `entry` from `g`, appending each executed intent to `trace`.
    pub fn run(
        &self,
        g: &GameState,
        entry: &str,
        args: &SkillArgs,
        cfg: &RunConfig,
        trace: Trace,
    ) -> Result<Run, RunError> {
        let def = self
            .get(entry)
            .ok_or_else(|| RunError::UnknownSkill(entry.to_string()))?;
        let sig = WorldSig::of(g);
        let binders: Vec<String> = def.type_params.iter().map(|t| t.name.clone()).collect();
        for k in args.0.keys() {
            if !binders.contains(k) && !def.params.iter().any(|p| &p.name == k) {
                return Err(RunError::Argument(format!(
                    "`{entry}` has no parameter `{k}`"
                )));
            }
        }
        let mut values = Vec::new();
        for p in &def.params {
            let name = args
                .0
                .get(&p.name)
                .ok_or_else(|| RunError::Argument(format!("missing argument `{}`", p.name)))?;
            let id = EntityId::from(name.as_str());
            let t = g
                .entity(&id)
                .and_then(|e| e.rtype.clone())
                .ok_or_else(|| RunError::Argument(format!("no typed entity `{name}`")))?;
            values.push((sig.normalize(&t), id));
        }
        let mut s: Subst = binders
            .iter()
            .filter_map(|b| args.0.get(b).map(|v| (b.clone(), v.clone())))
            .collect();
        if s.len() < binders.len() {
            let missing: Vec<String> = binders
                .iter()
                .filter(|b| !s.contains_key(*b))
                .cloned()
                .collect();
            let params: Vec<&SumType> = def.params.iter().map(|p| &p.ty).collect();
            let singles: Vec<SumType> = values
                .iter()
                .map(|v| SumType::single(v.0.clone()))
                .collect();
            let refs: Vec<&SumType> = singles.iter().collect();
            s.extend(infer_type_args(&missing, &params, &refs).map_err(RunError::Argument)?);
        }
        for (p, v) in def.params.iter().zip(&values) {
            let want = subst_sum(&p.ty.map(|m| sig.normalize(m)), &s);
            if !want.contains(&v.0) {
                return Err(RunError::Argument(format!(
                    "`{}` is a {}, not a {want}",
                    v.1, v.0
                )));
            }
        }
        let mut m = Machine {
            program: self,
            sig,
            cfg: *cfg,
            g: g.clone(),
            trace,
            env: def
                .params
                .iter()
                .map(|p| p.name.clone())
                .zip(values)
                .collect(),
            subst: s,
            depth: 1,
            stack: Vec::new(),
        };
        let outcome = match m.run(&def.body) {
            Ok(vals) => {
                let map = if vals.len() == 1 {
                    BTreeMap::from([("result".to_string(), vals[0].clone())])
                } else {
                    vals.into_iter()
                        .enumerate()
                        .map(|(i, v)| (format!("result_{i}"), v))
                        .collect()
                };
                Outcome::Produced(map)
            }
            Err(Halt::Failed { at, reason }) => Outcome::Failed { at, reason },
            Err(Halt::Error(e)) => return Err(e),
        };
        Ok(Run {
            state: m.g,
            outcome,
            trace: m.trace,
        })
    }
}
