//! One world, four interfaces: keys, clicks, typed commands and hypertext
//! choices all elaborate to the same core intents.

use intentlang::intent::ClickTarget;
use intentlang::{
    builtin, elaborate_click, enumerate_choices, map_key, parse_command_line, step, WorldDef,
};

fn main() {
    let world = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
    let g = world.initial_state().unwrap();

    for key in ["w", "a", "e", "q"] {
        match map_key(key) {
            Ok(i) => println!("key {key:<3} => {i}"),
            Err(e) => println!("key {key:<3} => unbound ({})", e.0),
        }
    }
    for name in ["flask", "book", "quarters", "lab", "attic"] {
        match ClickTarget::resolve(&g, name).map(|t| elaborate_click(&g, &t)) {
            Some(Ok(i)) => println!("click {name:<9} => {i}"),
            Some(Err(e)) => println!("click {name:<9} => {e}"),
            None => println!("click {name:<9} => nothing there"),
        }
    }
    for text in ["go north", "pick up flask", "take"] {
        match parse_command_line(text) {
            Ok(i) => println!("typed {text:<14} => {i}"),
            Err(e) => println!("typed {text:<14} => {e}"),
        }
    }
    for (n, c) in enumerate_choices(&g).iter().enumerate() {
        println!("choice {}) {:<12} => {}", n + 1, c.label, c.intent);
    }

    let by_key = step(&g, &map_key("e").unwrap()).unwrap();
    println!("\ncollect: {}", by_key.resp.message);
}
