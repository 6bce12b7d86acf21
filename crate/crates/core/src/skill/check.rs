//! The resource typechecker.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::{Arg, Binding, Expr, ExprKind, SkillDef, Span, SumType};
use super::{SkillError, SkillErrorKind};
use crate::farm::FarmRules;
use crate::intent::Verb;
use crate::world::{Direction, EntityKind, GameState, ResourceType};

/// How inquiring into something of a given type behaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Item,
    Crop,
    Other,
}

/// The resource signature of a world: which type constructors exist, how
/// they behave under `inquire`, and the tool table.
#[derive(Debug, Clone)]
pub struct WorldSig {
    classes: BTreeMap<String, Class>,
    croptypes: BTreeSet<String>,
    params: BTreeSet<String>,
    rules: FarmRules,
}

impl WorldSig {
    pub fn of(g: &GameState) -> Self {
        let rules = g.rules().clone();
        let mut classes = BTreeMap::new();
        let mut params = BTreeSet::new();
        let class_of = |k: EntityKind| {
            if k == EntityKind::Item {
                Class::Item
            } else {
                Class::Other
            }
        };
        for (_, e) in g.entities() {
            if let Some(t) = &e.rtype {
                classes.insert(t.ctor.clone(), class_of(e.kind));
                params.extend(t.param.clone());
            }
        }
        for r in &rules.tools {
            classes.entry(r.tool.clone()).or_insert(Class::Item);
            classes.entry(r.target.clone()).or_insert(Class::Other);
            if let Some(p) = &r.produces {
                classes.insert(p.clone(), Class::Item);
            }
            if let Some(b) = &r.becomes {
                let target_class = classes[&r.target];
                classes.entry(b.clone()).or_insert(target_class);
            }
        }
        if let Some(f) = &rules.fishing {
            classes.entry(f.tool.clone()).or_insert(Class::Item);
            classes.entry(f.target.clone()).or_insert(Class::Other);
            classes.insert("fish".into(), Class::Item);
            classes.insert("trash".into(), Class::Item);
        }
        classes.insert("crop".into(), Class::Item);
        classes.insert("planted".into(), Class::Crop);
        classes.insert("growing".into(), Class::Crop);
        let croptypes: BTreeSet<String> = rules.growth_days.keys().cloned().collect();
        params.extend(croptypes.iter().cloned());
        WorldSig {
            classes,
            croptypes,
            params,
            rules,
        }
    }

    pub fn normalize(&self, t: &ResourceType) -> ResourceType {
        self.rules.normalize(t.clone())
    }

    pub fn is_croptype(&self, c: &str) -> bool {
        self.croptypes.contains(c)
    }

    /// Whether `p` names a concrete type parameter, such as a crop or a room
    /// behind a door.
    pub fn is_param(&self, p: &str) -> bool {
        self.params.contains(p)
    }

    pub fn class(&self, ctor: &str) -> Option<Class> {
        self.classes.get(ctor).copied()
    }

    pub fn rules(&self) -> &FarmRules {
        &self.rules
    }
}

/// What an expression hands back: nothing (`fail`), or a tuple of resources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Prod {
    Bottom,
    Tuple(Vec<SumType>),
}

impl Prod {
    pub fn unit() -> Prod {
        Prod::Tuple(Vec::new())
    }

    fn describe(&self) -> String {
        match self {
            Prod::Bottom => "nothing".into(),
            Prod::Tuple(v) if v.is_empty() => "no resources".into(),
            Prod::Tuple(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                format!("<{}>", parts.join(", "))
            }
        }
    }
}

fn join(a: Prod, b: Prod) -> Option<Prod> {
    match (a, b) {
        (Prod::Bottom, p) | (p, Prod::Bottom) => Some(p),
        (Prod::Tuple(x), Prod::Tuple(y)) if x == y => Some(Prod::Tuple(x)),
        (Prod::Tuple(x), Prod::Tuple(y)) if x.len() == 1 && y.len() == 1 => {
            Some(Prod::Tuple(vec![x[0].union(&y[0])]))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sel {
    Nothing,
    Known(SumType),
    Unknown,
}

/// Substitutes type variables in a resource type.
pub fn subst(t: &ResourceType, s: &BTreeMap<String, String>) -> ResourceType {
    match &t.param {
        Some(p) => match s.get(p) {
            Some(q) => ResourceType::with_param(&t.ctor, q),
            None => t.clone(),
        },
        None => t.clone(),
    }
}

pub fn subst_sum(t: &SumType, s: &BTreeMap<String, String>) -> SumType {
    t.map(|m| subst(m, s))
}

/// Binds type parameters by matching declared parameter types against
/// argument types, member by member on the constructor.
pub fn infer_type_args(
    binders: &[String],
    params: &[&SumType],
    args: &[&SumType],
) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for b in binders {
        let found = params.iter().zip(args).find_map(|(p, a)| {
            p.members().find_map(|pm| {
                if pm.param.as_deref() != Some(b) {
                    return None;
                }
                a.members()
                    .find(|am| am.ctor == pm.ctor)
                    .and_then(|am| am.param.clone())
            })
        });
        match found {
            Some(t) => {
                out.insert(b.clone(), t);
            }
            None => return Err(format!("cannot infer type parameter `{b}`")),
        }
    }
    Ok(out)
}

pub(crate) struct Checker<'a> {
    pub sig: &'a WorldSig,
    pub defs: &'a BTreeMap<String, SkillDef>,
    /// Productions of unannotated skills, filled in on demand.
    synthesized: BTreeMap<String, Prod>,
    in_progress: BTreeSet<String>,
    errors: Vec<SkillError>,
}

struct Scope<'a> {
    vars: BTreeMap<String, SumType>,
    binders: &'a BTreeSet<String>,
}

fn err(kind: SkillErrorKind, span: Span) -> SkillError {
    SkillError { kind, span }
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a WorldSig, defs: &'a BTreeMap<String, SkillDef>) -> Self {
        Checker {
            sig,
            defs,
            synthesized: BTreeMap::new(),
            in_progress: BTreeSet::new(),
            errors: Vec::new(),
        }
    }

    pub fn check_all(mut self) -> Vec<SkillError> {
        for name in self.defs.keys() {
            self.check_def(name);
        }
        self.errors.sort_by_key(|e| e.span.start);
        self.errors.dedup();
        self.errors
    }

    fn check_type(
        &self,
        t: &ResourceType,
        binders: &BTreeSet<String>,
        span: Span,
    ) -> Result<(), SkillError> {
        let t = self.sig.normalize(t);
        if self.sig.class(&t.ctor).is_none() {
            return Err(err(SkillErrorKind::UnknownType(t.ctor.clone()), span));
        }
        if let Some(p) = &t.param {
            if !binders.contains(p) && !self.sig.is_param(p) {
                return Err(err(SkillErrorKind::UnboundResource(p.clone()), span));
            }
        }
        Ok(())
    }

    fn check_sum(
        &self,
        t: &SumType,
        binders: &BTreeSet<String>,
        span: Span,
    ) -> Result<(), SkillError> {
        t.members()
            .try_for_each(|m| self.check_type(m, binders, span))
    }

    /// The production of a call to `name`, before type substitution.
    fn production_of(&mut self, name: &str) -> Prod {
        let def = &self.defs[name];
        if let Some(r) = &def.ret {
            return Prod::Tuple(vec![r.clone()]);
        }
        if let Some(p) = self.synthesized.get(name) {
            return p.clone();
        }
        if self.in_progress.contains(name) {
            return Prod::unit();
        }
        self.check_def(name).unwrap_or(Prod::Bottom)
    }

    fn check_def(&mut self, name: &str) -> Option<Prod> {
        if let Some(p) = self.synthesized.get(name) {
            return Some(p.clone());
        }
        if self.in_progress.contains(name) {
            return None;
        }
        self.in_progress.insert(name.to_string());
        let def = &self.defs[name];
        let binders: BTreeSet<String> = def.type_params.iter().map(|t| t.name.clone()).collect();
        let result = (|| {
            for tp in &def.type_params {
                if let Some(k) = &tp.kind {
                    if k != "croptype" {
                        return Err(err(SkillErrorKind::UnknownType(k.clone()), tp.span));
                    }
                }
            }
            let mut scope = Scope {
                vars: BTreeMap::new(),
                binders: &binders,
            };
            for p in &def.params {
                self.check_sum(&p.ty, &binders, p.span)?;
                if scope
                    .vars
                    .insert(p.name.clone(), p.ty.map(|m| self.sig.normalize(m)))
                    .is_some()
                {
                    return Err(err(
                        SkillErrorKind::Syntax(format!("parameter `{}` repeated", p.name)),
                        p.span,
                    ));
                }
            }
            if let Some(r) = &def.ret {
                self.check_sum(r, &binders, def.span)?;
            }
            let (prod, _) = self.expr(&def.body, &mut scope, Sel::Unknown)?;
            if let Some(r) = &def.ret {
                let r = &r.map(|m| self.sig.normalize(m));
                let ok = match &prod {
                    Prod::Bottom => true,
                    Prod::Tuple(v) => v.len() == 1 && v[0].is_subsumed_by(r),
                };
                if !ok {
                    return Err(err(
                        SkillErrorKind::TypeMismatch {
                            expected: r.to_string(),
                            got: prod.describe(),
                        },
                        def.body.span,
                    ));
                }
            }
            Ok(prod)
        })();
        self.in_progress.remove(name);
        match result {
            Ok(p) => {
                self.synthesized.insert(name.to_string(), p.clone());
                Some(p)
            }
            Err(e) => {
                self.errors.push(e);
                self.synthesized.insert(name.to_string(), Prod::Bottom);
                None
            }
        }
    }

    /// A primitive's argument: a variable's type or an ambient class.
    fn arg_type(&self, a: &Arg, scope: &Scope) -> Result<SumType, SkillError> {
        match a {
            Arg::Name(n, span) => {
                if let Some(t) = scope.vars.get(n) {
                    return Ok(t.clone());
                }
                let t = self.sig.normalize(&ResourceType::new(n));
                if self.sig.class(&t.ctor).is_some() {
                    Ok(SumType::single(t))
                } else {
                    Err(err(SkillErrorKind::UnboundResource(n.clone()), *span))
                }
            }
            Arg::Typed(t, span) => {
                let t = self.sig.normalize(t);
                self.check_type(&t, scope.binders, *span)?;
                Ok(SumType::single(t))
            }
        }
    }

    fn expr(&mut self, e: &Expr, scope: &mut Scope, sel: Sel) -> Result<(Prod, Sel), SkillError> {
        match &e.kind {
            ExprKind::Fail => Ok((Prod::Bottom, sel)),
            ExprKind::Var(x) => match scope.vars.get(x) {
                Some(t) => Ok((Prod::Tuple(vec![t.clone()]), sel)),
                None if self.defs.contains_key(x) => self.call(x, &[], e.span, scope),
                None => Err(err(SkillErrorKind::UnboundResource(x.clone()), e.span)),
            },
            ExprKind::Seq(a, b) => {
                let (_, sel) = self.expr(a, scope, sel)?;
                self.expr(b, scope, sel)
            }
            ExprKind::Par(a, b) => {
                let left = footprint(a, &scope.vars.keys().cloned().collect());
                let right = footprint(b, &scope.vars.keys().cloned().collect());
                if let Some(v) = left.intersection(&right).next() {
                    return Err(err(SkillErrorKind::OverlappingPar(v.clone()), e.span));
                }
                let (pa, _) = self.expr(a, scope, sel.clone())?;
                let (pb, _) = self.expr(b, scope, sel)?;
                let prod = match (pa, pb) {
                    (Prod::Tuple(mut x), Prod::Tuple(y)) => {
                        x.extend(y);
                        Prod::Tuple(x)
                    }
                    _ => Prod::Bottom,
                };
                Ok((prod, Sel::Unknown))
            }
            ExprKind::DoRecv {
                body,
                pattern,
                rest,
            } => {
                let (prod, sel) = self.expr(body, scope, sel)?;
                let want: Vec<SumType> = pattern
                    .iter()
                    .map(|b| b.ty.map(|m| self.sig.normalize(m)))
                    .collect();
                for b in pattern {
                    self.check_sum(&b.ty, scope.binders, b.span)?;
                }
                if let Prod::Tuple(got) = &prod {
                    if *got != want {
                        let expected: Vec<String> = want.iter().map(ToString::to_string).collect();
                        return Err(err(
                            SkillErrorKind::TypeMismatch {
                                expected: format!("<{}>", expected.join(", ")),
                                got: prod.describe(),
                            },
                            body.span,
                        ));
                    }
                }
                let saved = scope.vars.clone();
                for (b, t) in pattern.iter().zip(want) {
                    scope.vars.insert(b.name.clone(), t);
                }
                let out = self.expr(rest, scope, sel);
                scope.vars = saved;
                out
            }
            ExprKind::Case { scrutinee, arms } => {
                let Some(st) = scope.vars.get(scrutinee).cloned() else {
                    return Err(err(
                        SkillErrorKind::UnboundResource(scrutinee.clone()),
                        e.span,
                    ));
                };
                let arm_types: Vec<SumType> = arms
                    .iter()
                    .map(|(b, _)| b.ty.map(|m| self.sig.normalize(m)))
                    .collect();
                for ((b, _), t) in arms.iter().zip(&arm_types) {
                    self.check_sum(&b.ty, scope.binders, b.span)?;
                    if !t.is_subsumed_by(&st) {
                        return Err(err(
                            SkillErrorKind::TypeMismatch {
                                expected: st.to_string(),
                                got: t.to_string(),
                            },
                            b.span,
                        ));
                    }
                }
                for m in st.members() {
                    if !arm_types.iter().any(|t| t.contains(m)) {
                        return Err(err(SkillErrorKind::NonExhaustiveCase(m.clone()), e.span));
                    }
                }
                let mut prod = Prod::Bottom;
                for ((b, body), t) in arms.iter().zip(arm_types) {
                    let saved = scope.vars.clone();
                    scope.vars.insert(b.name.clone(), t);
                    let r = self.expr(body, scope, sel.clone());
                    scope.vars = saved;
                    let (p, _) = r?;
                    prod = join(prod.clone(), p.clone()).ok_or_else(|| {
                        err(
                            SkillErrorKind::TypeMismatch {
                                expected: prod.describe(),
                                got: p.describe(),
                            },
                            body.span,
                        )
                    })?;
                }
                Ok((prod, Sel::Unknown))
            }
            ExprKind::Call { name, args } => self.call(name, args, e.span, scope),
            ExprKind::Prim { verb, arg } => self.prim(*verb, arg.as_ref(), e.span, scope, sel),
        }
    }

    fn call(
        &mut self,
        name: &str,
        args: &[Arg],
        span: Span,
        scope: &Scope,
    ) -> Result<(Prod, Sel), SkillError> {
        let Some(def) = self.defs.get(name) else {
            return Err(err(SkillErrorKind::UnknownSkill(name.to_string()), span));
        };
        let binders: Vec<String> = def.type_params.iter().map(|t| t.name.clone()).collect();
        let n_params = def.params.len();
        let explicit = args.len() == binders.len() + n_params && !binders.is_empty();
        if args.len() != n_params && !explicit {
            return Err(err(
                SkillErrorKind::Arity {
                    skill: name.to_string(),
                    expected: n_params,
                    got: args.len(),
                },
                span,
            ));
        }
        let (type_args, value_args) = if explicit {
            args.split_at(binders.len())
        } else {
            args.split_at(0)
        };
        let mut arg_types = Vec::new();
        for a in value_args {
            match a {
                Arg::Name(n, s) => match scope.vars.get(n) {
                    Some(t) => arg_types.push(t.clone()),
                    None => return Err(err(SkillErrorKind::UnboundResource(n.clone()), *s)),
                },
                Arg::Typed(t, s) => {
                    return Err(err(
                        SkillErrorKind::TypeMismatch {
                            expected: "a resource variable".into(),
                            got: t.to_string(),
                        },
                        *s,
                    ))
                }
            }
        }
        let s = if explicit {
            let mut s = BTreeMap::new();
            for (b, a) in binders.iter().zip(type_args) {
                let Arg::Name(n, sp) = a else {
                    return Err(err(
                        SkillErrorKind::UnboundResource(a.to_string()),
                        a.span(),
                    ));
                };
                if !scope.binders.contains(n) && !self.sig.is_croptype(n) {
                    return Err(err(SkillErrorKind::UnboundResource(n.clone()), *sp));
                }
                s.insert(b.clone(), n.clone());
            }
            s
        } else {
            let params: Vec<&SumType> = def.params.iter().map(|p| &p.ty).collect();
            let args: Vec<&SumType> = arg_types.iter().collect();
            infer_type_args(&binders, &params, &args).map_err(|m| {
                err(
                    SkillErrorKind::TypeMismatch {
                        expected: format!("arguments fixing the type parameters of `{name}`"),
                        got: m,
                    },
                    span,
                )
            })?
        };
        for (p, got) in def.params.iter().zip(&arg_types) {
            let want = subst_sum(&p.ty.map(|m| self.sig.normalize(m)), &s);
            if !got.is_subsumed_by(&want) {
                return Err(err(
                    SkillErrorKind::TypeMismatch {
                        expected: want.to_string(),
                        got: got.to_string(),
                    },
                    span,
                ));
            }
        }
        let prod = match self.production_of(name) {
            Prod::Bottom => Prod::Bottom,
            Prod::Tuple(v) => Prod::Tuple(
                v.iter()
                    .map(|t| subst_sum(&t.map(|m| self.sig.normalize(m)), &s))
                    .collect(),
            ),
        };
        Ok((prod, Sel::Unknown))
    }

    fn prim(
        &mut self,
        verb: Verb,
        arg: Option<&Arg>,
        span: Span,
        scope: &Scope,
        sel: Sel,
    ) -> Result<(Prod, Sel), SkillError> {
        let direction = |a: Option<&Arg>| -> Result<(), SkillError> {
            match a {
                Some(Arg::Name(n, _)) if n.parse::<Direction>().is_ok() => Ok(()),
                _ => Err(err(
                    SkillErrorKind::TypeMismatch {
                        expected: "a direction".into(),
                        got: a.map_or("nothing".into(), ToString::to_string),
                    },
                    span,
                )),
            }
        };
        match verb {
            Verb::Move | Verb::MoveOffscreen => {
                direction(arg)?;
                Ok((Prod::unit(), sel))
            }
            Verb::Wait | Verb::Collect => Ok((Prod::unit(), sel)),
            Verb::Take | Verb::MoveNear => {
                self.arg_type(arg.expect("parser requires an argument"), scope)?;
                Ok((Prod::unit(), sel))
            }
            Verb::Select => {
                let t = self.arg_type(arg.expect("parser requires an argument"), scope)?;
                Ok((Prod::unit(), Sel::Known(t)))
            }
            Verb::Inquire => {
                let t = self.arg_type(arg.expect("parser requires an argument"), scope)?;
                let mut prod: Option<Prod> = None;
                for m in t.members() {
                    let p = match self.sig.class(&m.ctor) {
                        Some(Class::Crop) => {
                            let c = m.param.clone().unwrap_or_default();
                            Prod::Tuple(vec![SumType(BTreeSet::from([
                                ResourceType::with_param("crop", &c),
                                ResourceType::with_param("growing", &c),
                            ]))])
                        }
                        Some(Class::Item) => Prod::Tuple(vec![SumType::single(m.clone())]),
                        _ => Prod::unit(),
                    };
                    prod = Some(match prod {
                        None => p,
                        Some(q) => join(q.clone(), p.clone()).ok_or_else(|| {
                            err(
                                SkillErrorKind::TypeMismatch {
                                    expected: q.describe(),
                                    got: p.describe(),
                                },
                                span,
                            )
                        })?,
                    });
                }
                Ok((prod.unwrap_or_else(Prod::unit), sel))
            }
            Verb::Apply => {
                let target = self.arg_type(arg.expect("parser requires an argument"), scope)?;
                let tool = match sel {
                    Sel::Known(t) => t,
                    Sel::Nothing | Sel::Unknown => {
                        return Err(err(
                            SkillErrorKind::TypeMismatch {
                                expected: "a selected tool".into(),
                                got: "nothing selected".into(),
                            },
                            span,
                        ))
                    }
                };
                let rules = self.sig.rules();
                let mut prod: Option<Prod> = None;
                let mut consumed = false;
                for tm in tool.members() {
                    for gm in target.members() {
                        let p = if rules.is_fishing(&tm.ctor, &gm.ctor) {
                            Prod::Tuple(vec![SumType(BTreeSet::from([
                                ResourceType::new("fish"),
                                ResourceType::new("trash"),
                            ]))])
                        } else if let Some(r) = rules.rule(&tm.ctor, &gm.ctor) {
                            consumed |= r.consumes_tool;
                            if let Some(p) = &r.produces {
                                Prod::Tuple(vec![SumType::single(ResourceType::new(p))])
                            } else if let Some(b) = &r.becomes {
                                let param = tm.param.clone().or_else(|| gm.param.clone());
                                Prod::Tuple(vec![SumType::single(ResourceType {
                                    ctor: b.clone(),
                                    param,
                                })])
                            } else {
                                Prod::unit()
                            }
                        } else {
                            return Err(err(
                                SkillErrorKind::TypeMismatch {
                                    expected: format!("something a {tm} applies to"),
                                    got: gm.to_string(),
                                },
                                span,
                            ));
                        };
                        prod = Some(match prod {
                            None => p,
                            Some(q) => join(q.clone(), p.clone()).ok_or_else(|| {
                                err(
                                    SkillErrorKind::TypeMismatch {
                                        expected: q.describe(),
                                        got: p.describe(),
                                    },
                                    span,
                                )
                            })?,
                        });
                    }
                }
                let sel = if consumed {
                    Sel::Nothing
                } else {
                    Sel::Known(tool)
                };
                Ok((prod.unwrap_or_else(Prod::unit), sel))
            }
        }
    }
}

/// Resource variables from `locals` that an expression mentions.
pub fn footprint(e: &Expr, locals: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk(e, locals, &mut out);
    out
}

fn walk(e: &Expr, locals: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    let mention = |a: &Arg, out: &mut BTreeSet<String>| {
        if let Arg::Name(n, _) = a {
            if locals.contains(n) {
                out.insert(n.clone());
            }
        }
    };
    match &e.kind {
        ExprKind::Prim { arg, .. } => {
            if let Some(a) = arg {
                mention(a, out);
            }
        }
        ExprKind::Call { args, .. } => args.iter().for_each(|a| mention(a, out)),
        ExprKind::Var(x) => {
            if locals.contains(x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Seq(a, b) | ExprKind::Par(a, b) => {
            walk(a, locals, out);
            walk(b, locals, out);
        }
        ExprKind::Fail => {}
        ExprKind::Case { scrutinee, arms } => {
            if locals.contains(scrutinee) {
                out.insert(scrutinee.clone());
            }
            for (b, body) in arms {
                walk(body, &shadow(locals, std::slice::from_ref(b)), out);
            }
        }
        ExprKind::DoRecv {
            body,
            pattern,
            rest,
        } => {
            walk(body, locals, out);
            walk(rest, &shadow(locals, pattern), out);
        }
    }
}

fn shadow(locals: &BTreeSet<String>, bound: &[Binding]) -> BTreeSet<String> {
    let mut l = locals.clone();
    for b in bound {
        l.remove(&b.name);
    }
    l
}
