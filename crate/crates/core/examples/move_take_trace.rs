//! Plays three commands and prints the recorded trace as JSON Lines.

use intentlang::trace::record_run;
use intentlang::{builtin, format_response, parse_command_line, WorldDef};

fn main() {
    let world = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
    let intents: Vec<_> = ["go north", "take flask", "go south"]
        .iter()
        .map(|c| parse_command_line(c).unwrap())
        .collect();
    let (end, trace) = record_run(&world, 0, &intents).unwrap();
    for e in &trace.entries {
        println!("{:<12} {}", e.intent.to_string(), format_response(&e.resp));
    }
    println!("\nplayer ends in the {}\n", end.player_room());
    print!("{}", trace.to_jsonl());
}
