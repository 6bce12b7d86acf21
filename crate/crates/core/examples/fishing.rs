//! Fishing outcomes come from a counter-based generator, so a seed fixes
//! every cast and replays are exact.

use intentlang::skill::{Program, RunConfig, SkillArgs};
use intentlang::{builtin, replay, Trace, WorldDef};

fn main() {
    let world = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    for seed in [42, 7, 2024] {
        let g = world.initial_state_with_seed(seed).unwrap();
        let program = Program::load(builtin::FARM_SKILLS, &g).unwrap();
        let args = SkillArgs::from([("r", "rod_1"), ("w", "pond_water")]);
        let run = program
            .run(
                &g,
                "fish_until_caught",
                &args,
                &RunConfig::default(),
                Trace::for_world(&world, seed),
            )
            .unwrap();
        let casts: Vec<String> = run
            .trace
            .entries
            .iter()
            .filter_map(|e| e.resp.payload.first())
            .map(|(t, _)| t.to_string())
            .collect();
        println!(
            "seed {seed:>4}: {} -> {} (replay {:?})",
            casts.join(", "),
            run.outcome,
            replay(&world, &run.trace).unwrap()
        );
    }
}
