use proptest::prelude::*;

use intentlang::intent::candidate_intents;
use intentlang::skill::{parse_skills, Program, RunConfig, RunError, SkillArgs};
use intentlang::trace::record_run;
use intentlang::{
    abstract_state, builtin, parse_command_line, replay, step, typecheck, CoreIntent, Direction,
    EntityId, GameState, ReplayVerdict, Trace, TypingVerdict, Verb, WorldDef,
};

fn worlds() -> [WorldDef; 2] {
    [
        WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap(),
        WorldDef::parse(builtin::FARM_WORLD).unwrap(),
    ]
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,8}"
}

fn direction() -> impl Strategy<Value = Direction> {
    prop::sample::select(Direction::ALL.to_vec())
}

fn intent() -> impl Strategy<Value = CoreIntent> {
    let id = || ident().prop_map(EntityId::from);
    prop_oneof![
        direction().prop_map(CoreIntent::Move),
        direction().prop_map(CoreIntent::MoveOffscreen),
        Just(CoreIntent::Collect),
        Just(CoreIntent::Wait),
        id().prop_map(CoreIntent::Take),
        id().prop_map(CoreIntent::Select),
        id().prop_map(CoreIntent::Apply),
        id().prop_map(CoreIntent::Inquire),
        id().prop_map(CoreIntent::MoveNear),
    ]
}

/// Walks `picks` through the world, each pick indexing the candidate list.
fn walk(w: &WorldDef, seed: u64, picks: &[usize]) -> (GameState, Vec<CoreIntent>) {
    let mut g = w.initial_state_with_seed(seed).unwrap();
    let all = candidate_intents(&g, &Verb::ALL);
    let mut taken = vec![];
    for p in picks {
        let i = all[p % all.len()].clone();
        g = step(&g, &i).unwrap().next;
        taken.push(i);
    }
    (g, taken)
}

proptest! {
    #[test]
    fn intents_round_trip_through_text(i in intent()) {
        prop_assert_eq!(parse_command_line(&i.to_string()).unwrap(), i);
    }

    #[test]
    fn parser_never_panics(s in "\\PC{0,40}") {
        let _ = parse_command_line(&s);
        let _ = parse_skills(&s);
    }

    #[test]
    fn step_is_total_on_reachable_states(
        which in 0usize..2,
        seed in any::<u64>(),
        picks in prop::collection::vec(any::<usize>(), 0..30),
        extra in intent(),
    ) {
        let w = &worlds()[which];
        let (g, _) = walk(w, seed, &picks);
        let declared = extra.entity().is_none_or(|e| g.entity(e).is_some());
        prop_assert_eq!(step(&g, &extra).is_ok(), declared);
        for i in &candidate_intents(&g, &Verb::ALL) {
            let r = step(&g, i);
            prop_assert!(r.is_ok(), "{} undefined", i);
            let r = r.unwrap();
            if !r.resp.is_success() {
                prop_assert_eq!(&r.next, &g);
            }
        }
    }

    #[test]
    fn well_typed_intents_succeed(seed in any::<u64>(), picks in prop::collection::vec(any::<usize>(), 0..20)) {
        let w = &worlds()[0];
        let (g, _) = walk(w, seed, &picks);
        let ctx = abstract_state(&g);
        for i in candidate_intents(&g, &[Verb::Move, Verb::Take]) {
            if typecheck(&ctx, &i) == TypingVerdict::Ok {
                prop_assert!(step(&g, &i).unwrap().resp.is_success(), "{} typed but failed", i);
            }
        }
    }

    #[test]
    fn recorded_runs_replay_exactly(
        which in 0usize..2,
        seed in any::<u64>(),
        picks in prop::collection::vec(any::<usize>(), 0..40),
    ) {
        let w = &worlds()[which];
        let (end, intents) = walk(w, seed, &picks);
        let (g, t) = record_run(w, seed, &intents).unwrap();
        prop_assert_eq!(g, end);
        let text = t.to_jsonl();
        let back = Trace::from_jsonl(&text).unwrap();
        prop_assert_eq!(back.to_jsonl(), text);
        prop_assert_eq!(replay(w, &back).unwrap(), ReplayVerdict::Exact);
    }
}

const VARS: [(&str, &str, &str); 4] = [
    ("p", "pickaxe", "pickaxe_1"),
    ("r", "rock", "rock_1"),
    ("h", "hoe", "hoe_1"),
    ("g", "hard_ground", "plot_1"),
];

fn body() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..5, 0usize..4), 1..6)
}

fn render(body: &[(usize, usize)], ret: &str) -> String {
    let prims: Vec<String> = body
        .iter()
        .map(|&(verb, var)| {
            let v = VARS[var].0;
            match verb {
                0 => format!("select {v}"),
                1 => format!("move_near {v}"),
                2 => format!("apply {v}"),
                3 => format!("inquire {v}"),
                _ => "wait(day)".to_string(),
            }
        })
        .collect();
    let params: Vec<String> = VARS.iter().map(|(v, t, _)| format!("{v}: {t}")).collect();
    let ret = if ret.is_empty() {
        String::new()
    } else {
        format!(": {ret}")
    };
    format!(
        "action s({}){ret} =\n  {}\n",
        params.join(", "),
        prims.join("; ")
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn accepted_skills_never_go_wrong(
        body in body(),
        ret in prop::sample::select(vec!["", "mineral", "tilled_ground", "hard_ground"]),
    ) {
        let w = &worlds()[1];
        let g = w.initial_state().unwrap();
        let src = render(&body, ret);
        let Ok(program) = Program::load(&src, &g) else { return Ok(()) };
        let args = SkillArgs(VARS.iter().map(|(v, _, e)| (v.to_string(), e.to_string())).collect());
        let run = program.run(&g, "s", &args, &RunConfig::default(), Trace::for_world(w, 42));
        prop_assert!(
            !matches!(run, Err(RunError::PatternMismatch { .. }) | Err(RunError::Engine(_))),
            "{src}: {run:?}"
        );
        if let (Ok(run), false) = (run, ret.is_empty()) {
            if let Some((t, _)) = run.outcome.result() {
                prop_assert_eq!(t.to_string(), ret);
            }
        }
    }

    #[test]
    fn printed_programs_reparse(body in body(), ret in prop::sample::select(vec!["", "mineral"])) {
        let src = render(&body, ret);
        let once = Program::unchecked(parse_skills(&src).unwrap()).to_string();
        let twice = Program::unchecked(parse_skills(&once).unwrap()).to_string();
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn shipped_skill_files_reprint_stably() {
    let g = worlds()[1].initial_state().unwrap();
    for src in [builtin::BASIC_SKILLS, builtin::FARM_SKILLS] {
        let once = Program::unchecked(parse_skills(src).unwrap()).to_string();
        let twice = Program::load(&once, &g).unwrap().to_string();
        assert_eq!(once, twice);
    }
}

#[test]
fn the_generator_reaches_accepted_programs() {
    let g = worlds()[1].initial_state().unwrap();
    assert!(Program::load(&render(&[(0, 0), (1, 1), (2, 1)], "mineral"), &g).is_ok());
    assert!(Program::load(&render(&[(2, 1)], "mineral"), &g).is_err());
}
