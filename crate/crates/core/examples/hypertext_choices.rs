//! The choices offered in every reachable state are exactly the intents
//! that typecheck there.

use std::collections::{HashSet, VecDeque};

use intentlang::{
    abstract_state, builtin, enumerate_choices, step, typecheck, TypingVerdict, WorldDef,
};

fn main() {
    let world = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
    let g0 = world.initial_state().unwrap();
    let mut seen = HashSet::from([g0.clone()]);
    let mut queue = VecDeque::from([g0]);
    while let Some(g) = queue.pop_front() {
        let ctx = abstract_state(&g);
        let held: Vec<String> = g.inventory().map(ToString::to_string).collect();
        let choices = enumerate_choices(&g);
        let labels: Vec<&str> = choices.iter().map(|c| c.label.as_str()).collect();
        println!(
            "{:<6} holding [{}]: {}",
            g.player_room().to_string(),
            held.join(", "),
            labels.join(" | ")
        );
        for c in choices {
            assert_eq!(typecheck(&ctx, &c.intent), TypingVerdict::Ok);
            let next = step(&g, &c.intent).unwrap().next;
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    println!("\n{} states reachable through choices", seen.len());
}
