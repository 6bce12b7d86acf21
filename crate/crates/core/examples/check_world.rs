//! Exhaustive totality and progress checks.

use intentlang::{builtin, check_progress, check_totality, Limits, WorldDef};

fn main() {
    for (name, src) in [
        ("move-take", builtin::MOVE_TAKE_WORLD),
        ("farm", builtin::FARM_WORLD),
    ] {
        let world = WorldDef::parse(src).unwrap();
        let limits = Limits {
            max_states: 2_000,
            ..Limits::default()
        };
        let t = check_totality(&world, limits).unwrap();
        println!(
            "{name}: {} states, {} pairs, {} undefined{}",
            t.states,
            t.pairs,
            t.undefined.len(),
            if t.truncated { " (truncated)" } else { "" }
        );
        let p = check_progress(&world, limits).unwrap();
        println!(
            "{name}: {} well-typed pairs, {} progress violations",
            p.pairs,
            p.violations.len()
        );
    }
}
