//! Play traces: recording, JSON Lines serialization, replay, pattern queries
//! and premise provenance ("why did this step succeed?").

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::{CoreIntent, Verb};
use crate::step::{step, Response, StepResult, Verdict};
use crate::typing::{abstract_state, justify, typecheck, Premise, TypingVerdict};
use crate::world::{
    holds, state_digest, EngineError, EntityId, GameState, Proposition, ResourceType, WorldDef,
    WorldError,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub index: usize,
    pub intent: CoreIntent,
    pub resp: Response,
    /// Digest of the state after the step.
    pub digest: String,
    /// Full post-state, when recorded verbosely.
    pub snapshot: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub world_ref: String,
    pub seed: u64,
    pub entries: Vec<TraceEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    world_ref: String,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    i: usize,
    intent: CoreIntent,
    verdict: Verdict,
    message: String,
    digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    payload: Vec<(ResourceType, EntityId)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trace line {line}: expected index {expected}, found {found}")]
    Index {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("trace is for world {expected}, not {got}")]
    WorldMismatch { expected: String, got: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("step {at}: {error}")]
    Engine { at: usize, error: EngineError },
}

impl Trace {
    pub fn new(world_ref: &str, seed: u64) -> Self {
        Trace {
            world_ref: world_ref.to_string(),
            seed,
            entries: Vec::new(),
        }
    }

    pub fn for_world(world: &WorldDef, seed: u64) -> Self {
        Trace::new(&world.digest(), seed)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(&mut self, result: &StepResult, intent: &CoreIntent) {
        self.push(result, intent, false);
    }

    /// Records the step with a full dump of the post-state.
    pub fn record_verbose(&mut self, result: &StepResult, intent: &CoreIntent) {
        self.push(result, intent, true);
    }

    fn push(&mut self, result: &StepResult, intent: &CoreIntent, verbose: bool) {
        self.entries.push(TraceEntry {
            index: self.entries.len(),
            intent: intent.clone(),
            resp: result.resp.clone(),
            digest: state_digest(&result.next),
            snapshot: verbose
                .then(|| serde_json::to_value(&result.next).expect("states serialize")),
        });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header {
            world_ref: self.world_ref.clone(),
            seed: self.seed,
        })
        .expect("headers serialize");
        out.push('\n');
        for e in &self.entries {
            let line = Line {
                i: e.index,
                intent: e.intent.clone(),
                verdict: e.resp.verdict,
                message: e.resp.message.clone(),
                digest: e.digest.clone(),
                payload: e.resp.payload.clone(),
                state: e.snapshot.clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, TraceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, e: serde_json::Error| TraceError::Parse {
            line: line + 1,
            message: e.to_string(),
        };
        let (n, first) = lines.next().ok_or(TraceError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header: Header = serde_json::from_str(first).map_err(|e| parse_err(n, e))?;
        let mut trace = Trace::new(&header.world_ref, header.seed);
        for (n, l) in lines {
            let line: Line = serde_json::from_str(l).map_err(|e| parse_err(n, e))?;
            if line.i != trace.entries.len() {
                return Err(TraceError::Index {
                    line: n + 1,
                    expected: trace.entries.len(),
                    found: line.i,
                });
            }
            trace.entries.push(TraceEntry {
                index: line.i,
                intent: line.intent,
                resp: Response {
                    verdict: line.verdict,
                    payload: line.payload,
                    message: line.message,
                },
                digest: line.digest,
                snapshot: line.state,
            });
        }
        Ok(trace)
    }

    /// `PLAYER: <intent>` / `GAME: <verdict>` lines.
    pub fn transcript(&self) -> String {
        transcript(
            self.entries
                .iter()
                .map(|e| (e.intent.to_string(), e.resp.verdict)),
        )
    }
}

pub fn transcript(lines: impl IntoIterator<Item = (String, Verdict)>) -> String {
    let mut out = String::new();
    for (said, verdict) in lines {
        out.push_str(&format!("PLAYER: {said}\nGAME: {verdict}\n"));
    }
    out
}

/// Runs intents from the world's initial state with `seed`, recording each
/// step.
pub fn record_run(
    world: &WorldDef,
    seed: u64,
    intents: &[CoreIntent],
) -> Result<(GameState, Trace), TraceError> {
    let mut g = world.initial_state_with_seed(seed)?;
    let mut t = Trace::for_world(world, seed);
    for (at, i) in intents.iter().enumerate() {
        let r = step(&g, i).map_err(|error| TraceError::Engine { at, error })?;
        t.record(&r, i);
        g = r.next;
    }
    Ok((g, t))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum ReplayVerdict {
    Exact,
    /// `at` is the first step whose response differs or, failing that, the
    /// first whose post-state digest differs.
    Diverged {
        at: usize,
        expected: String,
        got: String,
        first_digest_mismatch: Option<usize>,
    },
}

fn describe(r: &Response) -> String {
    format!("{}: {}", r.verdict, r.message)
}

/// Re-steps the trace from the world's initial state with the trace's seed.
pub fn replay(world: &WorldDef, t: &Trace) -> Result<ReplayVerdict, TraceError> {
    let got = world.digest();
    if got != t.world_ref {
        return Err(TraceError::WorldMismatch {
            expected: t.world_ref.clone(),
            got,
        });
    }
    replay_unverified(world, t)
}

/// Replay against a world without checking the trace was recorded in it.
/// Useful for asking what the same inputs would do in a changed world.
pub fn replay_unverified(world: &WorldDef, t: &Trace) -> Result<ReplayVerdict, TraceError> {
    let mut g = world.initial_state_with_seed(t.seed)?;
    let mut first_response = None;
    let mut first_digest = None;
    for e in &t.entries {
        let r = match step(&g, &e.intent) {
            Ok(r) => r,
            Err(EngineError::UndeclaredEntity(o)) => StepResult {
                next: g.clone(),
                resp: Response::failure(&format!("`{o}` does not exist in this world")),
            },
            Err(error) => return Err(TraceError::Engine { at: e.index, error }),
        };
        if first_response.is_none() && r.resp != e.resp {
            first_response = Some((e.index, describe(&e.resp), describe(&r.resp)));
        }
        if first_digest.is_none() && state_digest(&r.next) != e.digest {
            first_digest = Some((e.index, e.digest.clone(), state_digest(&r.next)));
        }
        g = r.next;
    }
    let first_digest_mismatch = first_digest.as_ref().map(|d| d.0);
    Ok(match (first_response, first_digest) {
        (Some((at, expected, got)), _) | (None, Some((at, expected, got))) => {
            ReplayVerdict::Diverged {
                at,
                expected,
                got,
                first_digest_mismatch,
            }
        }
        (None, None) => ReplayVerdict::Exact,
    })
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepPattern {
    /// Any number of entries, matched lazily.
    Gap,
    Step {
        verb: Option<Verb>,
        arg: Option<String>,
        verdict: Option<Verdict>,
    },
}

impl StepPattern {
    fn matches(&self, e: &TraceEntry) -> bool {
        match self {
            StepPattern::Gap => true,
            StepPattern::Step { verb, arg, verdict } => {
                verb.is_none_or(|v| v == e.intent.verb())
                    && arg.as_deref().is_none_or(|a| e.intent.arg() == Some(a))
                    && verdict.is_none_or(|v| v == e.resp.verdict)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracePattern {
    pub steps: Vec<StepPattern>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at byte {offset}")]
pub struct PatternError {
    pub offset: usize,
    pub len: usize,
    pub message: String,
}

impl PatternError {
    /// The pattern with a caret line under the offending text.
    pub fn render(&self, source: &str) -> String {
        let pad: String = source[..self.offset.min(source.len())]
            .chars()
            .map(|c| if c == '\t' { '\t' } else { ' ' })
            .collect();
        format!(
            "error: {}\n  {}\n  {}{}",
            self.message,
            source,
            pad,
            "^".repeat(self.len.max(1))
        )
    }
}

fn pattern_tokens(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in src.char_indices() {
        if c.is_whitespace() || c == ';' {
            if let Some(s) = start.take() {
                out.push((s, &src[s..i]));
            }
            if c == ';' {
                out.push((i, ";"));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &src[s..]));
    }
    out
}

fn is_separator(tok: &str) -> bool {
    matches!(tok, ";" | "..." | "=>")
}

impl std::str::FromStr for TracePattern {
    type Err = PatternError;

    /// Steps are `verb arg => verdict`, separated by `;` or whitespace.
    /// `_` is a wildcard verb or argument; `...` skips any number of entries.
    fn from_str(src: &str) -> Result<Self, PatternError> {
        let toks = pattern_tokens(src);
        let err = |(off, tok): (usize, &str), message: String| PatternError {
            offset: off,
            len: tok.chars().count(),
            message,
        };
        let mut steps = Vec::new();
        let mut k = 0;
        while k < toks.len() {
            let (off, tok) = toks[k];
            k += 1;
            match tok {
                ";" => continue,
                "..." => {
                    if steps.last() == Some(&StepPattern::Gap) {
                        return Err(err((off, tok), "two gaps in a row".into()));
                    }
                    steps.push(StepPattern::Gap);
                    continue;
                }
                "=>" => return Err(err((off, tok), "verdict without a step".into())),
                _ => {}
            }
            let verb = if tok == "_" {
                None
            } else {
                Some(
                    Verb::from_word(tok)
                        .ok_or_else(|| err((off, tok), format!("unknown verb `{tok}`")))?,
                )
            };
            let takes_arg = verb.is_none_or(|v| !matches!(v, Verb::Collect | Verb::Wait));
            let mut arg = None;
            if let Some(&(aoff, atok)) = toks.get(k) {
                let next_is_step = verb.is_none() && Verb::from_word(atok).is_some();
                if !is_separator(atok) && !next_is_step {
                    if !takes_arg {
                        return Err(err((aoff, atok), format!("`{tok}` takes no argument")));
                    }
                    k += 1;
                    if atok != "_" {
                        arg = Some(atok.to_string());
                    }
                }
            }
            let mut verdict = None;
            if let Some(&(voff, "=>")) = toks.get(k) {
                k += 1;
                let Some(&(doff, dtok)) = toks.get(k) else {
                    return Err(err((voff, "=>"), "expected ok or fail after `=>`".into()));
                };
                verdict = Some(match dtok {
                    "ok" | "success" => Verdict::Success,
                    "fail" | "failure" => Verdict::Failure,
                    _ => return Err(err((doff, dtok), format!("`{dtok}` is not ok or fail"))),
                });
                k += 1;
            }
            steps.push(StepPattern::Step { verb, arg, verdict });
        }
        while steps.first() == Some(&StepPattern::Gap) {
            steps.remove(0);
        }
        while steps.last() == Some(&StepPattern::Gap) {
            steps.pop();
        }
        if steps.is_empty() {
            return Err(PatternError {
                offset: 0,
                len: src.len(),
                message: "empty pattern".into(),
            });
        }
        Ok(TracePattern { steps })
    }
}

impl fmt::Display for TracePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .steps
            .iter()
            .map(|s| match s {
                StepPattern::Gap => "...".to_string(),
                StepPattern::Step { verb, arg, verdict } => {
                    let mut out = verb.map_or("_".to_string(), |v| v.to_string());
                    if let Some(a) = arg {
                        out.push(' ');
                        out.push_str(a);
                    }
                    if let Some(v) = verdict {
                        out.push_str(if *v == Verdict::Success {
                            " => ok"
                        } else {
                            " => fail"
                        });
                    }
                    out
                }
            })
            .collect();
        f.write_str(&parts.join(" ; "))
    }
}

fn match_at(steps: &[StepPattern], entries: &[TraceEntry], at: usize) -> Option<usize> {
    match steps.split_first() {
        None => at.checked_sub(1),
        Some((StepPattern::Gap, rest)) => {
            (at..=entries.len()).find_map(|k| match_at(rest, entries, k))
        }
        Some((s, rest)) => {
            let e = entries.get(at)?;
            if s.matches(e) {
                match rest {
                    [] => Some(at),
                    _ => match_at(rest, entries, at + 1),
                }
            } else {
                None
            }
        }
    }
}

/// Leftmost, non-overlapping matches as inclusive `(start, end)` spans.
pub fn query(t: &Trace, p: &TracePattern) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut at = 0;
    while at < t.entries.len() {
        match match_at(&p.steps, &t.entries, at) {
            Some(end) => {
                out.push((at, end));
                at = end + 1;
            }
            None => at += 1,
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Why
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Established {
    pub premise: Proposition,
    /// The step that made the premise true, or `None` if it held from the
    /// start.
    pub by: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Why {
    pub index: usize,
    pub intent: CoreIntent,
    pub verdict: Verdict,
    pub premises: Vec<Established>,
    /// For an ill-typed step, the premise that did not hold.
    pub missing: Option<Premise>,
}

impl fmt::Display for Why {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "step {}: {} => {}",
            self.index, self.intent, self.verdict
        )?;
        for p in &self.premises {
            match p.by {
                Some(j) => writeln!(f, "  {} established by step {j}", p.premise)?,
                None => writeln!(f, "  {} held initially", p.premise)?,
            }
        }
        if let Some(m) = &self.missing {
            writeln!(f, "  missing {m}")?;
        }
        Ok(())
    }
}

/// Which earlier steps established each premise of step `index`.
pub fn why(world: &WorldDef, t: &Trace, index: usize) -> Result<Why, TraceError> {
    let entry = t.entries.get(index).ok_or(TraceError::Parse {
        line: index + 2,
        message: format!("no step {index} in a trace of {}", t.len()),
    })?;
    let mut states = vec![world.initial_state_with_seed(t.seed)?];
    for e in &t.entries[..index] {
        let g = states.last().unwrap();
        let r = step(g, &e.intent).map_err(|error| TraceError::Engine { at: e.index, error })?;
        states.push(r.next);
    }
    let pre = states.last().unwrap();
    let ctx = abstract_state(pre);
    let mut out = Why {
        index,
        intent: entry.intent.clone(),
        verdict: entry.resp.verdict,
        premises: Vec::new(),
        missing: None,
    };
    let Some(premises) = justify(&ctx, &entry.intent) else {
        if let TypingVerdict::IllTyped { missing, .. } = typecheck(&ctx, &entry.intent) {
            out.missing = missing.into_iter().next();
        }
        return Ok(out);
    };
    for p in premises {
        let holds_in = |g: &GameState| holds(g, &p).unwrap_or(false);
        let by = (0..index)
            .rev()
            .find(|&j| !holds_in(&states[j]) && holds_in(&states[j + 1]));
        out.premises.push(Established { premise: p, by });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::intent::parse_command_line;

    fn world() -> WorldDef {
        WorldDef::parse(builtin::MOVE_TAKE_WORLD).unwrap()
    }

    fn intents(cmds: &[&str]) -> Vec<CoreIntent> {
        cmds.iter()
            .map(|c| parse_command_line(c).unwrap())
            .collect()
    }

    fn three_step() -> Trace {
        record_run(
            &world(),
            0,
            &intents(&["go north", "take flask", "go south"]),
        )
        .unwrap()
        .1
    }

    #[test]
    fn records_the_three_step_session() {
        let t = three_step();
        let got: Vec<(String, Verdict)> = t
            .entries
            .iter()
            .map(|e| (e.intent.to_string(), e.resp.verdict))
            .collect();
        assert_eq!(
            got,
            [
                ("move north".to_string(), Verdict::Failure),
                ("take flask".to_string(), Verdict::Success),
                ("move south".to_string(), Verdict::Success)
            ]
        );
        assert_eq!(
            t.entries.iter().map(|e| e.index).collect::<Vec<_>>(),
            [0, 1, 2]
        );
    }

    #[test]
    fn empty_and_long_traces() {
        let (_, t) = record_run(&world(), 0, &[]).unwrap();
        assert!(t.is_empty());
        assert_eq!(replay(&world(), &t).unwrap(), ReplayVerdict::Exact);
        let many: Vec<CoreIntent> = (0..1000)
            .map(|k| if k % 2 == 0 { "go south" } else { "go north" })
            .map(|c| parse_command_line(c).unwrap())
            .collect();
        let (_, t) = record_run(&world(), 0, &many).unwrap();
        assert!(t.entries.iter().enumerate().all(|(k, e)| e.index == k));
        assert_eq!(t.len(), 1000);
    }

    #[test]
    fn jsonl_round_trip() {
        let t = three_step();
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 4);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .contains("\"intent\":\"move north\""));
        assert_eq!(Trace::from_jsonl(&text).unwrap(), t);
    }

    #[test]
    fn replay_detects_a_moved_flask() {
        let t = three_step();
        assert_eq!(replay(&world(), &t).unwrap(), ReplayVerdict::Exact);
        let moved = builtin::MOVE_TAKE_WORLD.replace(
            r#"{"name": "flask", "kind": "item", "room": "lab"}"#,
            r#"{"name": "flask", "kind": "item", "room": "courtyard"}"#,
        );
        let moved = WorldDef::parse(&moved).unwrap();
        assert!(matches!(
            replay(&moved, &t),
            Err(TraceError::WorldMismatch { .. })
        ));
        match replay_unverified(&moved, &t).unwrap() {
            ReplayVerdict::Diverged {
                at,
                first_digest_mismatch,
                ..
            } => {
                assert_eq!(at, 1);
                assert_eq!(first_digest_mismatch, Some(0));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn queries() {
        let t = three_step();
        let q = |p: &str| query(&t, &p.parse().unwrap());
        assert_eq!(q("move _ => failure"), [(0, 0)]);
        assert_eq!(q("move _ => fail"), [(0, 0)]);
        assert_eq!(q("take flask ... move south"), [(1, 2)]);
        assert_eq!(q("collect"), []);
        assert_eq!(q("_"), [(0, 0), (1, 1), (2, 2)]);
        assert_eq!(q("move _ => fail ; ... ; take flask => ok"), [(0, 1)]);
        assert_eq!(q("go south => ok"), [(2, 2)]);
    }

    #[test]
    fn malformed_patterns() {
        for (src, offset) in [
            ("", 0),
            ("jump", 0),
            ("take flask => maybe", 14),
            ("... ; ...", 6),
            ("=> ok", 0),
            ("wait now", 5),
        ] {
            let e = src.parse::<TracePattern>().unwrap_err();
            assert_eq!(e.offset, offset, "{src}: {e}");
        }
        let e = "take flask => maybe".parse::<TracePattern>().unwrap_err();
        assert_eq!(
            e.render("take flask => maybe"),
            "error: `maybe` is not ok or fail\n  take flask => maybe\n                ^^^^^"
        );
    }

    #[test]
    fn why_points_at_the_step_that_moved_the_player() {
        let t = record_run(&world(), 0, &intents(&["go south", "take book"]))
            .unwrap()
            .1;
        let w = why(&world(), &t, 1).unwrap();
        assert_eq!(
            w.premises
                .iter()
                .map(|e| (e.premise.to_string(), e.by))
                .collect::<Vec<_>>(),
            [
                ("playerIn(library)".to_string(), Some(0)),
                ("at(book,library)".to_string(), None)
            ]
        );
        let failed = why(&world(), &three_step(), 0).unwrap();
        assert_eq!(failed.missing.unwrap().to_string(), "adjacent(lab,north,_)");
    }
}
