//! `intentlang play|serve|check|run-skill|trace`.
//!
//! Exit codes: 0 ok, 1 violations (or a failed skill or diverged replay),
//! 2 usage errors.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use super::{load_world_file, protocol, repl, Engine, Profile, Session};
use crate::builtin;
use crate::explore::Limits;
use crate::skill::{render_errors, ParOrder, Program, RunConfig, SkillArgs};
use crate::step::check_totality;
use crate::trace::{query, replay, why, ReplayVerdict, Trace, TracePattern};
use crate::typing::check_progress;
use crate::world::WorldDef;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "intentlang",
    version,
    about = "Play, check, script and query game worlds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct WorldArg {
    /// World file, or a shipped world: move-take, farm.
    #[arg(long)]
    pub world: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play interactively on standard input.
    Play {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long, default_value = "cli")]
        profile: Profile,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Answer JSON requests, one per line, over TCP or standard input.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878", conflicts_with = "stdio")]
        listen: String,
        #[arg(long)]
        stdio: bool,
        /// Directory searched for `<name>.world`.
        #[arg(long)]
        world_dir: Option<PathBuf>,
    },
    /// Exhaustively check totality or progress, printing a JSON report.
    Check {
        #[command(flatten)]
        world: WorldArg,
        #[arg(
            long,
            conflicts_with = "progress",
            required_unless_present = "progress"
        )]
        totality: bool,
        #[arg(long)]
        progress: bool,
        #[arg(long, default_value_t = Limits::default().max_states)]
        max_states: usize,
        #[arg(long, default_value_t = Limits::default().max_day)]
        max_day: u32,
    },
    /// Run a skill from a skill file (or the shipped `basic`, `farm`).
    RunSkill {
        #[command(flatten)]
        world: WorldArg,
        #[arg(long)]
        skills: String,
        #[arg(long)]
        entry: String,
        /// `var=entity`, or `t=parsnip` for a type parameter.
        #[arg(long = "arg", value_parser = parse_kv)]
        args: Vec<(String, String)>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run the right operand of `||` first.
        #[arg(long)]
        right_first: bool,
        /// Write the trace as JSON Lines.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Query, replay or explain a recorded trace.
    #[command(subcommand)]
    Trace(TraceCommand),
}

#[derive(Debug, Subcommand)]
pub enum TraceCommand {
    /// Print the span `a..b` of every match, one per line.
    Query { file: PathBuf, pattern: String },
    /// Re-execute the trace and compare responses and digests.
    Replay {
        file: PathBuf,
        #[command(flatten)]
        world: WorldArg,
    },
    /// Show which earlier steps established the premises of a step.
    Why {
        file: PathBuf,
        index: usize,
        #[command(flatten)]
        world: WorldArg,
    },
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected var=value, got `{s}`"))
}

struct Io<'a> {
    input: &'a mut dyn BufRead,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

type Exit = Result<i32, String>;

fn world(w: &WorldArg) -> Result<WorldDef, String> {
    load_world_file(&w.world).map_err(|e| e.to_string())
}

fn read(path: &std::path::Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn read_trace(path: &std::path::Path) -> Result<Trace, String> {
    Trace::from_jsonl(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses arguments and runs a command, returning the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let mut io = Io { input, out, err };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(io.err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, io: &mut Io) -> Exit {
    let w = |r: std::io::Result<()>| r.map_err(|e| e.to_string());
    match cmd {
        Command::Play {
            world: wa,
            profile,
            seed,
        } => {
            let def = world(&wa)?;
            let seed = seed.unwrap_or_else(|| def.declared_seed());
            let mut s =
                Session::new("play", &wa.world, def, profile, seed).map_err(|e| e.to_string())?;
            w(repl::run(&mut s, &mut *io.input, &mut *io.out))?;
            Ok(EXIT_OK)
        }
        Command::Serve {
            listen,
            stdio,
            world_dir,
        } => {
            let engine = match &world_dir {
                Some(d) => Engine::with_world_dir(d),
                None => Engine::new(),
            };
            if stdio {
                w(protocol::serve_lines(&engine, &mut *io.input, &mut *io.out))?;
            } else {
                let listener = std::net::TcpListener::bind(&listen)
                    .map_err(|e| format!("cannot listen on {listen}: {e}"))?;
                w(writeln!(
                    io.err,
                    "listening on {}",
                    listener.local_addr().map_err(|e| e.to_string())?
                ))?;
                w(protocol::serve_listener(Arc::new(engine), listener))?;
            }
            Ok(EXIT_OK)
        }
        Command::Check {
            world: wa,
            totality,
            progress: _,
            max_states,
            max_day,
        } => {
            let def = world(&wa)?;
            let limits = Limits {
                max_states,
                max_day,
            };
            let (json, bad) = if totality {
                let r = check_totality(&def, limits).map_err(|e| e.to_string())?;
                (serde_json::to_string_pretty(&r), !r.undefined.is_empty())
            } else {
                let r = check_progress(&def, limits).map_err(|e| e.to_string())?;
                (serde_json::to_string_pretty(&r), !r.violations.is_empty())
            };
            w(writeln!(io.out, "{}", json.expect("reports serialize")))?;
            Ok(if bad { EXIT_VIOLATIONS } else { EXIT_OK })
        }
        Command::RunSkill {
            world: wa,
            skills,
            entry,
            args,
            seed,
            right_first,
            save,
        } => {
            let def = world(&wa)?;
            let src = match builtin::skills(&skills) {
                Some(s) => s.to_string(),
                None => read(std::path::Path::new(&skills))?,
            };
            let seed = seed.unwrap_or_else(|| def.declared_seed());
            let g = def
                .initial_state_with_seed(seed)
                .map_err(|e| e.to_string())?;
            let program = match Program::load(&src, &g) {
                Ok(p) => p,
                Err(errors) => {
                    w(write!(io.err, "{}", render_errors(&src, &errors)))?;
                    return Ok(EXIT_VIOLATIONS);
                }
            };
            let cfg = RunConfig {
                par_order: if right_first {
                    ParOrder::RightFirst
                } else {
                    ParOrder::LeftFirst
                },
                ..RunConfig::default()
            };
            let args = SkillArgs(args.into_iter().collect());
            let run = program
                .run(&g, &entry, &args, &cfg, Trace::for_world(&def, seed))
                .map_err(|e| e.to_string())?;
            for e in &run.trace.entries {
                w(writeln!(
                    io.out,
                    "{} => {}",
                    e.intent,
                    crate::step::format_response(&e.resp)
                ))?;
            }
            w(writeln!(io.out, "{}", run.outcome))?;
            if let Some(p) = save {
                std::fs::write(&p, run.trace.to_jsonl())
                    .map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            }
            Ok(if run.outcome.is_produced() {
                EXIT_OK
            } else {
                EXIT_VIOLATIONS
            })
        }
        Command::Trace(TraceCommand::Query { file, pattern }) => {
            let p: TracePattern = match pattern.parse() {
                Ok(p) => p,
                Err(e) => {
                    let e: crate::trace::PatternError = e;
                    w(writeln!(io.err, "{}", e.render(&pattern)))?;
                    return Ok(EXIT_USAGE);
                }
            };
            let t = read_trace(&file)?;
            for (a, b) in query(&t, &p) {
                w(writeln!(io.out, "{a}..{b}"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Trace(TraceCommand::Replay { file, world: wa }) => {
            let def = world(&wa)?;
            let t = read_trace(&file)?;
            match replay(&def, &t).map_err(|e| e.to_string())? {
                ReplayVerdict::Exact => {
                    w(writeln!(io.out, "exact: {} steps", t.len()))?;
                    Ok(EXIT_OK)
                }
                d => {
                    w(writeln!(
                        io.out,
                        "{}",
                        serde_json::to_string(&d).expect("verdicts serialize")
                    ))?;
                    Ok(EXIT_VIOLATIONS)
                }
            }
        }
        Command::Trace(TraceCommand::Why {
            file,
            index,
            world: wa,
        }) => {
            let def = world(&wa)?;
            let t = read_trace(&file)?;
            let y = why(&def, &t, index).map_err(|e| e.to_string())?;
            w(write!(io.out, "{y}"))?;
            Ok(EXIT_OK)
        }
    }
}
