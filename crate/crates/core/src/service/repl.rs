//! The interactive loop.

use std::io::{self, BufRead, Write};

use super::{Input, Profile, Session};

fn show_choices(s: &Session, out: &mut impl Write) -> io::Result<()> {
    let choices = s.choices();
    if choices.is_empty() {
        writeln!(out, "no actions available")?;
    }
    for (n, c) in choices.iter().enumerate() {
        writeln!(out, "  {}) {}", n + 1, c.id)?;
    }
    Ok(())
}

fn show_room(s: &Session, out: &mut impl Write) -> io::Result<()> {
    let g = s.state();
    let here: Vec<String> = g
        .entities_in(g.player_room())
        .map(ToString::to_string)
        .collect();
    write!(out, "You are in the {}.", g.player_room())?;
    if !here.is_empty() {
        write!(out, " You see: {}.", here.join(", "))?;
    }
    writeln!(out)
}

fn help(profile: Profile) -> &'static str {
    match profile {
        Profile::Cli | Profile::Farm => "type a command such as `go north` or `take flask`",
        Profile::Hypertext => "enter the number of a choice",
        Profile::Wasd => "one key per line: w a s d to move, e to pick everything up",
        Profile::Birdseye => "enter the name of a room or thing to click it",
    }
}

/// Reads inputs line by line until `:quit` or end of input. Errors are
/// reported and the loop carries on.
pub fn run(s: &mut Session, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    writeln!(
        out,
        "{} ({}; :help for commands)",
        s.world_name,
        help(s.profile())
    )?;
    show_room(s, &mut out)?;
    if s.profile() == Profile::Hypertext {
        show_choices(s, &mut out)?;
    }
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix(':') {
            let (cmd, rest) = meta.split_once(' ').unwrap_or((meta, ""));
            match cmd {
                "quit" | "q" => return Ok(()),
                "trace" => write!(out, "{}", s.transcript())?,
                "save" if !rest.trim().is_empty() => {
                    match std::fs::write(rest.trim(), s.trace().to_jsonl()) {
                        Ok(()) => {
                            writeln!(out, "saved {} steps to {}", s.trace().len(), rest.trim())?
                        }
                        Err(e) => writeln!(out, "error: {e}")?,
                    }
                }
                "save" => writeln!(out, "usage: :save <file>")?,
                "look" => show_room(s, &mut out)?,
                "help" => writeln!(
                    out,
                    "{}\n:look :trace :save <file> :quit",
                    help(s.profile())
                )?,
                _ => writeln!(out, "unknown command :{cmd}")?,
            }
            continue;
        }
        let inp = match s.profile() {
            Profile::Cli | Profile::Farm => Input::Intent(line.to_string()),
            Profile::Hypertext => Input::Choice(line.to_string()),
            Profile::Wasd => Input::Key(line.to_string()),
            Profile::Birdseye => Input::Click(line.to_string()),
        };
        match s.input(&inp) {
            Ok(r) => writeln!(out, "{}", r.text)?,
            Err(e) => writeln!(out, "error: {e}")?,
        }
        if s.profile() == Profile::Hypertext {
            show_choices(s, &mut out)?;
        }
    }
    Ok(())
}
