//! Searches a trace with a pattern and asks why a step succeeded.

use intentlang::trace::record_run;
use intentlang::{builtin, parse_command_line, query, why, TracePattern, WorldDef};

fn main() {
    let world = WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap();
    let script = [
        "go north",
        "take flask",
        "go north",
        "go south",
        "go north",
        "go south",
    ];
    let intents: Vec<_> = script
        .iter()
        .map(|c| parse_command_line(c).unwrap())
        .collect();
    let (_, trace) = record_run(&world, 0, &intents).unwrap();
    print!("{}", trace.transcript());

    for pattern in ["move north", "take _ ... move _ => ok", "_ => fail"] {
        let p: TracePattern = pattern.parse().unwrap();
        let spans: Vec<String> = query(&trace, &p)
            .iter()
            .map(|(a, b)| format!("{a}..{b}"))
            .collect();
        println!("{pattern:<24} {}", spans.join(" "));
    }
    println!("\n{}", why(&world, &trace, 1).unwrap());
}
