//! Typechecks the farm skill library and grows a parsnip.

use intentlang::skill::{Program, RunConfig, SkillArgs};
use intentlang::{builtin, format_response, Trace, WorldDef};

fn main() {
    let world = WorldDef::parse(builtin::FARM_WORLD).unwrap();
    let g = world.initial_state_with_seed(42).unwrap();
    let program = Program::load(builtin::FARM_SKILLS, &g).unwrap();
    println!("{program}");

    let args = SkillArgs::from([("t", "parsnip"), ("s", "plot_1"), ("w", "can_1")]);
    let run = program
        .run(
            &g,
            "grow_crop",
            &args,
            &RunConfig::default(),
            Trace::for_world(&world, 42),
        )
        .unwrap();
    for e in &run.trace.entries {
        println!("{:<24} {}", e.intent.to_string(), format_response(&e.resp));
    }
    println!("{} (day {})", run.outcome, run.state.day());

    let broken = "action bad(p: planted(parsnip)): crop(parsnip) =\n  move_near p; inquire p\n";
    if let Err(errors) = Program::load(broken, &g) {
        print!("\n{}", intentlang::skill::render_errors(broken, &errors));
    }
}
