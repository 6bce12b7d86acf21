use super::ast::Span;
use super::{SkillError, SkillErrorKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Semi,
    Dot,
    Eq,
    Arrow,
    Bar,
    BarBar,
    Plus,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Bar => "`|`".into(),
            Tok::BarBar => "`||`".into(),
            Tok::Plus => "`+`".into(),
        }
    }
}

/// Splits skill source into tokens. `#` starts a comment to end of line.
pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, SkillError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut line_start = 0;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let span = |end: usize| Span {
            line,
            col: src[line_start..i].chars().count() + 1,
            start: i,
            end,
        };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((Tok::Ident(src[i..j].to_string()), span(j)));
                i = j;
            }
            _ => {
                let two = bytes.get(i + 1).copied();
                let (tok, len) = match (c, two) {
                    (b'=', Some(b'>')) => (Tok::Arrow, 2),
                    (b'|', Some(b'|')) => (Tok::BarBar, 2),
                    (b'=', _) => (Tok::Eq, 1),
                    (b'|', _) => (Tok::Bar, 1),
                    (b'(', _) => (Tok::LParen, 1),
                    (b')', _) => (Tok::RParen, 1),
                    (b'[', _) => (Tok::LBracket, 1),
                    (b']', _) => (Tok::RBracket, 1),
                    (b'<', _) => (Tok::Lt, 1),
                    (b'>', _) => (Tok::Gt, 1),
                    (b',', _) => (Tok::Comma, 1),
                    (b':', _) => (Tok::Colon, 1),
                    (b';', _) => (Tok::Semi, 1),
                    (b'.', _) => (Tok::Dot, 1),
                    (b'+', _) => (Tok::Plus, 1),
                    _ => {
                        let ch = src[i..].chars().next().unwrap();
                        return Err(SkillError {
                            kind: SkillErrorKind::Syntax(format!("unexpected character `{ch}`")),
                            span: span(i + ch.len_utf8()),
                        });
                    }
                };
                out.push((tok, span(i + len)));
                i += len;
            }
        }
    }
    Ok(out)
}
