use std::collections::BTreeSet;

use super::ast::{Arg, Binding, Expr, ExprKind, SkillDef, Span, SumType, TypeParam};
use super::lexer::{lex, Tok};
use super::{SkillError, SkillErrorKind};
use crate::intent::Verb;
use crate::world::ResourceType;

const KEYWORDS: &[&str] = &["action", "fun", "do", "recv", "case", "of", "fail"];

fn prim_verb(word: &str) -> Option<Verb> {
    match word {
        "go" => None,
        w => Verb::from_word(w),
    }
}

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || prim_verb(word).is_some()
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    eof: Span,
}

type PResult<T> = Result<T, SkillError>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map_or(self.eof, |(_, s)| *s)
    }

    fn prev_span(&self) -> Span {
        self.pos
            .checked_sub(1)
            .and_then(|p| self.toks.get(p))
            .map_or(self.eof, |(_, s)| *s)
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let found = self
            .peek()
            .map_or("end of input".to_string(), Tok::describe);
        Err(SkillError {
            kind: SkillErrorKind::Syntax(format!("expected {expected}, found {found}")),
            span: self.span(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if self.eat(&t) {
            Ok(self.prev_span())
        } else {
            self.error(&t.describe())
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Span> {
        if self.eat_word(w) {
            Ok(self.prev_span())
        } else {
            self.error(&format!("`{w}`"))
        }
    }

    /// A non-reserved identifier.
    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek() {
            Some(Tok::Ident(s)) if !is_reserved(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, self.prev_span()))
            }
            _ => self.error(what),
        }
    }

    fn at_def_start(&self) -> bool {
        self.is_word("action") || self.is_word("fun")
    }

    fn file(&mut self) -> (Vec<SkillDef>, Vec<SkillError>) {
        let mut defs = Vec::new();
        let mut errors = Vec::new();
        while self.peek().is_some() {
            match self.def() {
                Ok(d) => defs.push(d),
                Err(e) => {
                    errors.push(e);
                    self.pos += 1;
                    while self.peek().is_some() && !self.at_def_start() {
                        self.pos += 1;
                    }
                }
            }
        }
        (defs, errors)
    }

    fn def(&mut self) -> PResult<SkillDef> {
        let start = self.span();
        if !(self.eat_word("action") || self.eat_word("fun")) {
            return self.error("`action` or `fun`");
        }
        let (name, _) = self.ident("a skill name")?;
        let mut type_params = Vec::new();
        if self.eat(&Tok::LBracket) {
            loop {
                let (name, span) = self.ident("a type parameter")?;
                let kind = if self.eat(&Tok::Colon) {
                    Some(self.ident("a kind")?.0)
                } else {
                    None
                };
                type_params.push(TypeParam { name, kind, span });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) && !self.eat(&Tok::RParen) {
            loop {
                params.push(self.binding()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        let mut ret = None;
        if self.eat(&Tok::Colon) {
            ret = Some(self.sum()?);
        }
        self.expect(Tok::Eq)?;
        let body = self.expr()?;
        if self.eat(&Tok::Colon) {
            if ret.is_some() {
                return Err(SkillError {
                    kind: SkillErrorKind::Syntax("second return type".into()),
                    span: self.prev_span(),
                });
            }
            ret = Some(self.sum()?);
        }
        if self.peek().is_some() && !self.at_def_start() {
            return self.error("`;` or the next definition");
        }
        Ok(SkillDef {
            name,
            type_params,
            params,
            ret,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn binding(&mut self) -> PResult<Binding> {
        let (name, span) = self.ident("a variable")?;
        self.expect(Tok::Colon)?;
        let ty = self.sum()?;
        Ok(Binding { name, ty, span })
    }

    fn rtype(&mut self) -> PResult<ResourceType> {
        let (ctor, _) = self.ident("a type")?;
        if self.eat(&Tok::LParen) {
            let (param, _) = self.ident("a type parameter")?;
            self.expect(Tok::RParen)?;
            Ok(ResourceType::with_param(&ctor, &param))
        } else {
            Ok(ResourceType::new(&ctor))
        }
    }

    fn sum(&mut self) -> PResult<SumType> {
        let start = self.span();
        let mut members = vec![self.rtype()?];
        while self.eat(&Tok::Plus) {
            members.push(self.rtype()?);
        }
        let set: BTreeSet<ResourceType> = members.iter().cloned().collect();
        if set.len() != members.len() {
            return Err(SkillError {
                kind: SkillErrorKind::Syntax("repeated member in a sum type".into()),
                span: start.to(self.prev_span()),
            });
        }
        Ok(SumType(set))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let first = self.par()?;
        if self.eat(&Tok::Semi) {
            let rest = self.expr()?;
            let span = first.span.to(rest.span);
            Ok(Expr {
                kind: ExprKind::Seq(Box::new(first), Box::new(rest)),
                span,
            })
        } else {
            Ok(first)
        }
    }

    fn par(&mut self) -> PResult<Expr> {
        let mut left = self.unit()?;
        while self.eat(&Tok::BarBar) {
            let right = self.unit()?;
            let span = left.span.to(right.span);
            left = Expr {
                kind: ExprKind::Par(Box::new(left), Box::new(right)),
                span,
            };
        }
        Ok(left)
    }

    fn arg(&mut self) -> PResult<Arg> {
        let (name, span) = self.ident("an argument")?;
        if self.peek() == Some(&Tok::LParen)
            && matches!(self.peek_at(1), Some(Tok::Ident(_)))
            && self.peek_at(2) == Some(&Tok::RParen)
        {
            self.pos += 1;
            let (param, _) = self.ident("a type parameter")?;
            self.expect(Tok::RParen)?;
            return Ok(Arg::Typed(
                ResourceType::with_param(&name, &param),
                span.to(self.prev_span()),
            ));
        }
        Ok(Arg::Name(name, span))
    }

    fn unit(&mut self) -> PResult<Expr> {
        let start = self.span();
        let word = match self.peek() {
            Some(Tok::Ident(w)) => w.clone(),
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(e);
            }
            _ => return self.error("an expression"),
        };
        let done = |p: &Parser, kind| Expr {
            kind,
            span: start.to(p.prev_span()),
        };
        match word.as_str() {
            "do" => {
                self.pos += 1;
                let body = self.expr()?;
                self.expect_word("recv")?;
                self.expect(Tok::Lt)?;
                let mut pattern = Vec::new();
                if self.peek() != Some(&Tok::Gt) {
                    loop {
                        pattern.push(self.binding()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let rest = self.expr()?;
                Ok(done(
                    self,
                    ExprKind::DoRecv {
                        body: Box::new(body),
                        pattern,
                        rest: Box::new(rest),
                    },
                ))
            }
            "case" => {
                self.pos += 1;
                let (scrutinee, _) = self.ident("a variable to case on")?;
                self.expect_word("of")?;
                self.eat(&Tok::Bar);
                let mut arms = Vec::new();
                loop {
                    let b = self.binding()?;
                    self.expect(Tok::Arrow)?;
                    let e = self.expr()?;
                    arms.push((b, e));
                    if !self.eat(&Tok::Bar) {
                        break;
                    }
                }
                Ok(done(self, ExprKind::Case { scrutinee, arms }))
            }
            "fail" => {
                self.pos += 1;
                Ok(done(self, ExprKind::Fail))
            }
            w if KEYWORDS.contains(&w) => self.error("an expression"),
            w => {
                if let Some(verb) = prim_verb(w) {
                    self.pos += 1;
                    let optional = matches!(verb, Verb::Wait | Verb::Collect);
                    let arg = if self.eat(&Tok::LParen) {
                        let a = self.arg()?;
                        self.expect(Tok::RParen)?;
                        Some(a)
                    } else if optional {
                        None
                    } else {
                        Some(self.arg()?)
                    };
                    if verb == Verb::Collect && arg.is_some() {
                        return Err(SkillError {
                            kind: SkillErrorKind::Syntax("`collect` takes no argument".into()),
                            span: start.to(self.prev_span()),
                        });
                    }
                    if let (Verb::Wait, Some(a)) = (verb, &arg) {
                        if !matches!(a, Arg::Name(n, _) if n == "day") {
                            return Err(SkillError {
                                kind: SkillErrorKind::Syntax("`wait` only waits a `day`".into()),
                                span: a.span(),
                            });
                        }
                    }
                    return Ok(done(self, ExprKind::Prim { verb, arg }));
                }
                let (name, _) = self.ident("an expression")?;
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.arg()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(Tok::RParen)?;
                    }
                    Ok(done(self, ExprKind::Call { name, args }))
                } else {
                    Ok(done(self, ExprKind::Var(name)))
                }
            }
        }
    }
}

/// Parses skill source. Errors are collected per definition; parsing resumes
/// at the next `action` or `fun`.
pub fn parse_skills(src: &str) -> Result<Vec<SkillDef>, Vec<SkillError>> {
    let toks = lex(src).map_err(|e| vec![e])?;
    let eof = Span {
        line: src.lines().count().max(1),
        col: src.lines().last().map_or(0, |l| l.chars().count()) + 1,
        start: src.len(),
        end: src.len(),
    };
    let mut p = Parser { toks, pos: 0, eof };
    let (defs, mut errors) = p.file();
    let mut seen = BTreeSet::new();
    for d in &defs {
        if !seen.insert(d.name.as_str()) {
            errors.push(SkillError {
                kind: SkillErrorKind::DuplicateSkill(d.name.clone()),
                span: d.span,
            });
        }
    }
    if errors.is_empty() {
        Ok(defs)
    } else {
        errors.sort_by_key(|e| e.span.start);
        Err(errors)
    }
}
