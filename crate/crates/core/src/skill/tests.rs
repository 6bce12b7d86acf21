use super::*;
use crate::builtin;
use crate::intent::{CoreIntent, Verb};
use crate::step::Verdict;
use crate::trace::{replay, ReplayVerdict, Trace};
use crate::world::{state_digest, EntityId, WorldDef};

fn farm() -> (WorldDef, GameState) {
    let w = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    let g = w.initial_state().unwrap();
    (w, g)
}

fn kinds(errors: &[SkillError]) -> Vec<SkillErrorKind> {
    errors.iter().map(|e| e.kind.clone()).collect()
}

fn run(src: &str, g: &GameState, entry: &str, args: SkillArgs) -> Run {
    let w = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    let p = Program::load(src, g).unwrap_or_else(|e| panic!("{}", render_errors(src, &e)));
    p.run(
        g,
        entry,
        &args,
        &RunConfig::default(),
        Trace::for_world(&w, 42),
    )
    .unwrap()
}

fn verbs(t: &Trace) -> Vec<Verb> {
    t.entries.iter().map(|e| e.intent.verb()).collect()
}

#[test]
fn one_liners_parse() {
    let defs = parse_skills(builtin::BASIC_SKILLS).unwrap();
    let names: Vec<&str> = defs.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(names, ["till", "plant", "mine", "talk", "enter_shop"]);
    assert!(defs.iter().all(|d| d.params.is_empty() && d.ret.is_none()));
}

#[test]
fn grow_crop_shape() {
    let defs = parse_skills(builtin::FARM_SKILLS).unwrap();
    let g = defs.iter().find(|d| d.name == "grow_crop").unwrap();
    assert_eq!(g.type_params.len(), 1);
    assert_eq!(g.type_params[0].kind.as_deref(), Some("croptype"));
    assert_eq!(g.params.len(), 2);
    let ExprKind::DoRecv { body, pattern, .. } = &g.body.kind else {
        panic!("{:?}", g.body.kind)
    };
    assert!(matches!(body.kind, ExprKind::Par(..)));
    assert_eq!(pattern.len(), 2);
}

#[test]
fn syntax_error_location() {
    let e = parse_skills("action x = ;").unwrap_err();
    assert_eq!(e.len(), 1);
    assert_eq!((e[0].span.line, e[0].span.col), (1, 12));
    assert!(matches!(e[0].kind, SkillErrorKind::Syntax(_)));
    assert_eq!(
        e[0].to_string(),
        "1:12: syntax error: expected an expression, found `;`"
    );
}

#[test]
fn errors_recover_per_definition() {
    let src = "action a = ;\naction b = select hoe\naction c = apply (";
    let e = parse_skills(src).unwrap_err();
    assert_eq!(e.iter().map(|e| e.span.line).collect::<Vec<_>>(), [1, 3]);
}

#[test]
fn duplicates_rejected() {
    let e = parse_skills("action a = wait\nfun a = wait").unwrap_err();
    assert_eq!(kinds(&e), [SkillErrorKind::DuplicateSkill("a".into())]);
    assert_eq!(e[0].span.line, 2);
}

#[test]
fn sequencing_is_right_associative_and_par_binds_tighter() {
    let d = &parse_skills("action a = wait; collect || wait; wait").unwrap()[0];
    let ExprKind::Seq(first, rest) = &d.body.kind else {
        panic!()
    };
    assert!(matches!(
        first.kind,
        ExprKind::Prim {
            verb: Verb::Wait,
            ..
        }
    ));
    let ExprKind::Seq(mid, _) = &rest.kind else {
        panic!()
    };
    assert!(matches!(mid.kind, ExprKind::Par(..)));
}

#[test]
fn shipped_skills_typecheck() {
    let (_, g) = farm();
    Program::load(builtin::BASIC_SKILLS, &g).unwrap();
    Program::load(builtin::FARM_SKILLS, &g).unwrap();
}

#[test]
fn single_retry_does_not_typecheck() {
    let (_, g) = farm();
    let e = Program::load(builtin::WATER_SINGLE_RETRY, &g).unwrap_err();
    assert_eq!(
        kinds(&e),
        [SkillErrorKind::TypeMismatch {
            expected: "crop(t)".into(),
            got: "<crop(t) + growing(t)>".into()
        }]
    );
}

#[test]
fn missing_case_arm() {
    let (_, g) = farm();
    let src = builtin::FARM_SKILLS.replace(
        "        c:crop(t) => c\n      | g:growing(t) => \n          water(g); \n          wait(day); \n          water_until_harvestable(g)",
        "        c:crop(t) => c",
    );
    assert_ne!(src, builtin::FARM_SKILLS);
    let e = Program::load(&src, &g).unwrap_err();
    assert_eq!(
        kinds(&e),
        [SkillErrorKind::NonExhaustiveCase(ResourceType::with_param(
            "growing", "t"
        ))]
    );
}

#[test]
fn overlapping_par() {
    let (_, g) = farm();
    let src = builtin::FARM_SKILLS.replace(
        "get_seeds(t) || till_soil(s)",
        "till_soil(s) || till_soil(s)",
    );
    let e = Program::load(&src, &g).unwrap_err();
    assert_eq!(kinds(&e), [SkillErrorKind::OverlappingPar("s".into())]);
}

#[test]
fn checker_rejections() {
    let (_, g) = farm();
    let cases = [
        (
            "action a = move_near r",
            SkillErrorKind::UnboundResource("r".into()),
        ),
        (
            "action a(p: pickaxe) = apply rock",
            SkillErrorKind::TypeMismatch {
                expected: "a selected tool".into(),
                got: "nothing selected".into(),
            },
        ),
        (
            "action a(p: pickaxe, r: rock): wood = select p; apply r",
            SkillErrorKind::TypeMismatch {
                expected: "wood".into(),
                got: "<mineral>".into(),
            },
        ),
        (
            "action a(p: spaceship) = select p",
            SkillErrorKind::UnknownType("spaceship".into()),
        ),
        ("action a = b()", SkillErrorKind::UnknownSkill("b".into())),
        (
            "action a(p: pickaxe) = b(p, p)\naction b(x: pickaxe) = select x",
            SkillErrorKind::Arity {
                skill: "b".into(),
                expected: 1,
                got: 2,
            },
        ),
        (
            "action a(h: hoe, r: rock) = select h; apply r",
            SkillErrorKind::TypeMismatch {
                expected: "something a hoe applies to".into(),
                got: "rock".into(),
            },
        ),
        (
            "action a = inquire seeds(t)",
            SkillErrorKind::UnboundResource("t".into()),
        ),
        (
            "action a(p: pickaxe) = do select p recv <m: mineral>. m",
            SkillErrorKind::TypeMismatch {
                expected: "<mineral>".into(),
                got: "no resources".into(),
            },
        ),
    ];
    for (src, want) in cases {
        let e = Program::load(src, &g).unwrap_err();
        assert_eq!(kinds(&e), [want], "{src}");
    }
}

#[test]
fn mine_produces_mineral() {
    let (_, g) = farm();
    let r = run(
        builtin::FARM_SKILLS,
        &g,
        "mine",
        SkillArgs::from([("p", "pickaxe_1"), ("r", "rock_3")]),
    );
    assert_eq!(
        r.outcome.result(),
        Some(&(ResourceType::new("mineral"), EntityId::from("rock_drop_1")))
    );
    assert_eq!(verbs(&r.trace), [Verb::Select, Verb::MoveNear, Verb::Apply]);
    assert!(r.state.entity(&"rock_3".into()).is_none());
}

#[test]
fn mine_without_rocks_fails_at_move_near() {
    let (_, mut g) = farm();
    for r in ["rock_1", "rock_2", "rock_3"] {
        g.remove_entity(&r.into());
    }
    let r = run(builtin::BASIC_SKILLS, &g, "mine", SkillArgs::default());
    assert_eq!(
        r.outcome,
        Outcome::Failed {
            at: "move_near rock".into(),
            reason: "no such entity".into()
        }
    );
    assert_eq!(verbs(&r.trace), [Verb::Select]);
    assert_eq!(state_digest(&r.state), r.trace.entries[0].digest);
}

#[test]
fn failing_primitive_aborts() {
    let (_, g) = farm();
    let src = "action a(p: pickaxe, r: rock) = select p; wait; apply r; wait";
    let r = run(
        src,
        &g,
        "a",
        SkillArgs::from([("p", "pickaxe_1"), ("r", "rock_1")]),
    );
    let Outcome::Failed { at, reason } = &r.outcome else {
        panic!()
    };
    assert_eq!(
        (at.as_str(), reason.as_str()),
        ("apply rock_1", crate::step::msg::NOT_HERE)
    );
    assert_eq!(r.trace.len(), 3);
    assert_eq!(r.trace.entries[2].resp.verdict, Verdict::Failure);
    assert_eq!(state_digest(&r.state), r.trace.entries[1].digest);
}

#[test]
fn one_liners_run() {
    let (_, g) = farm();
    let r = run(builtin::BASIC_SKILLS, &g, "till", SkillArgs::default());
    assert_eq!(r.outcome.result().unwrap().1.as_str(), "plot_1");
    let r2 = run(
        builtin::BASIC_SKILLS,
        &r.state,
        "plant",
        SkillArgs::default(),
    );
    assert_eq!(
        r2.outcome.result(),
        Some(&(
            ResourceType::with_param("planted", "parsnip"),
            EntityId::from("plot_1")
        ))
    );
    let r = run(builtin::BASIC_SKILLS, &g, "talk", SkillArgs::default());
    assert!(r.outcome.is_produced(), "{}", r.outcome);
    assert_eq!(
        r.trace.entries[1].resp.message,
        "Welcome! Fresh seeds are in the shop."
    );
    let r = run(
        builtin::BASIC_SKILLS,
        &g,
        "enter_shop",
        SkillArgs::default(),
    );
    assert!(r.outcome.is_produced(), "{}", r.outcome);
    assert_eq!(r.state.player_room().as_str(), "shop");
    let r = run(builtin::BASIC_SKILLS, &g, "mine", SkillArgs::default());
    assert_eq!(r.outcome.result().unwrap().0, ResourceType::new("mineral"));
}

#[test]
fn grow_crop_waits_growth_days() {
    let (_, g) = farm();
    let args = SkillArgs::from([("t", "parsnip"), ("s", "plot_1"), ("w", "can_1")]);
    let r = run(builtin::FARM_SKILLS, &g, "grow_crop", args);
    assert_eq!(
        r.outcome.result(),
        Some(&(
            ResourceType::with_param("crop", "parsnip"),
            EntityId::from("parsnip_1")
        ))
    );
    let waits = r
        .trace
        .entries
        .iter()
        .filter(|e| e.intent == CoreIntent::Wait)
        .count();
    assert_eq!(waits, 4);
    assert_eq!(r.state.day(), 4);
    assert_eq!(
        r.state.entity(&"plot_1".into()).unwrap().rtype,
        Some(ResourceType::new("tilled_ground"))
    );
}

#[test]
fn already_harvestable_needs_no_water() {
    let (_, g) = farm();
    let p = Program::load(builtin::FARM_SKILLS, &g).unwrap();
    let w = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    let mut g2 = g.clone();
    let setup = [
        CoreIntent::Select("hoe_1".into()),
        CoreIntent::Apply("plot_2".into()),
        CoreIntent::Select("parsnip_seeds_1".into()),
        CoreIntent::Apply("plot_2".into()),
    ];
    for i in &setup {
        g2 = crate::step::step(&g2, i).unwrap().next;
    }
    for _ in 0..4 {
        g2 = crate::step::step(&g2, &CoreIntent::Select("can_1".into()))
            .unwrap()
            .next;
        g2 = crate::step::step(&g2, &CoreIntent::Apply("plot_2".into()))
            .unwrap()
            .next;
        g2 = crate::step::step(&g2, &CoreIntent::Wait).unwrap().next;
    }
    let r = p
        .run(
            &g2,
            "water_until_harvestable",
            &SkillArgs::from([("p", "plot_2")]),
            &RunConfig::default(),
            Trace::for_world(&w, 42),
        )
        .unwrap();
    assert_eq!(
        r.outcome.result().unwrap().0,
        ResourceType::with_param("crop", "parsnip")
    );
    assert_eq!(verbs(&r.trace), [Verb::MoveNear, Verb::Inquire]);
}

#[test]
fn par_order_commutes_on_grow_crop() {
    let (_, g) = farm();
    let p = Program::load(builtin::FARM_SKILLS, &g).unwrap();
    let w = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    let args = SkillArgs::from([("t", "parsnip"), ("s", "plot_2"), ("w", "can_1")]);
    let go = |order| {
        let cfg = RunConfig {
            par_order: order,
            ..RunConfig::default()
        };
        p.run(&g, "grow_crop", &args, &cfg, Trace::for_world(&w, 42))
            .unwrap()
    };
    let (a, b) = (go(ParOrder::LeftFirst), go(ParOrder::RightFirst));
    assert_eq!(state_digest(&a.state), state_digest(&b.state));
    assert_eq!(a.outcome, b.outcome);
    assert_ne!(verbs(&a.trace)[..3], verbs(&b.trace)[..3]);
}

#[test]
fn fishing_until_caught() {
    let (w, g) = farm();
    let r = run(
        builtin::FARM_SKILLS,
        &g,
        "fish_until_caught",
        SkillArgs::from([("r", "rod_1"), ("w", "pond_water")]),
    );
    assert_eq!(r.outcome.result().unwrap().0, ResourceType::new("fish"));
    assert_eq!(replay(&w, &r.trace).unwrap(), ReplayVerdict::Exact);
}

#[test]
fn depth_limit() {
    let (w, g) = farm();
    let p = Program::load("action spin = wait; spin", &g).unwrap();
    let cfg = RunConfig {
        depth_limit: 50,
        ..RunConfig::default()
    };
    let e = p
        .run(
            &g,
            "spin",
            &SkillArgs::default(),
            &cfg,
            Trace::for_world(&w, 42),
        )
        .unwrap_err();
    assert_eq!(e, RunError::DepthExceeded(50));
}

#[test]
fn deep_recursion_does_not_overflow() {
    let (w, g) = farm();
    let p = Program::load("action spin = wait; spin", &g).unwrap();
    let e = p
        .run(
            &g,
            "spin",
            &SkillArgs::default(),
            &RunConfig::default(),
            Trace::for_world(&w, 42),
        )
        .unwrap_err();
    assert_eq!(e, RunError::DepthExceeded(DEFAULT_DEPTH_LIMIT));
}

#[test]
fn entry_arguments_checked() {
    let (w, g) = farm();
    let p = Program::load(builtin::FARM_SKILLS, &g).unwrap();
    let t = || Trace::for_world(&w, 42);
    let cfg = RunConfig::default();
    let bad = [
        SkillArgs::from([("p", "hoe_1"), ("r", "rock_1")]),
        SkillArgs::from([("p", "pickaxe_1")]),
        SkillArgs::from([("p", "pickaxe_1"), ("r", "rock_1"), ("q", "rock_2")]),
        SkillArgs::from([("p", "ghost"), ("r", "rock_1")]),
    ];
    for a in bad {
        assert!(
            matches!(p.run(&g, "mine", &a, &cfg, t()), Err(RunError::Argument(_))),
            "{a:?}"
        );
    }
    assert!(matches!(
        p.run(&g, "nope", &SkillArgs::default(), &cfg, t()),
        Err(RunError::UnknownSkill(_))
    ));
}

#[test]
fn unchecked_program_mismatch_is_loud() {
    let (w, g) = farm();
    let defs = parse_skills(
        "action a(p: pickaxe) = do select p; inquire parsnip_seeds_2 recv <m: mineral>. m",
    )
    .unwrap();
    let e = Program::unchecked(defs)
        .run(
            &g,
            "a",
            &SkillArgs::from([("p", "pickaxe_1")]),
            &RunConfig::default(),
            Trace::for_world(&w, 42),
        )
        .unwrap_err();
    assert!(matches!(e, RunError::PatternMismatch { .. }), "{e}");
}
