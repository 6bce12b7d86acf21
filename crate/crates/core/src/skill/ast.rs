use std::collections::BTreeSet;
use std::fmt;

use crate::intent::Verb;
use crate::world::ResourceType;

/// A source location: 1-based line and column plus byte range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span {
            end: other.end.max(self.end),
            ..self
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// `τ₁ + τ₂ + …`, members kept distinct and sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SumType(pub BTreeSet<ResourceType>);

impl SumType {
    pub fn single(t: ResourceType) -> Self {
        SumType(BTreeSet::from([t]))
    }

    pub fn members(&self) -> impl Iterator<Item = &ResourceType> {
        self.0.iter()
    }

    pub fn contains(&self, t: &ResourceType) -> bool {
        self.0.contains(t)
    }

    pub fn is_subsumed_by(&self, other: &SumType) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &SumType) -> SumType {
        SumType(self.0.union(&other.0).cloned().collect())
    }

    pub fn map(&self, f: impl Fn(&ResourceType) -> ResourceType) -> SumType {
        SumType(self.0.iter().map(f).collect())
    }
}

impl fmt::Display for SumType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeParam {
    pub name: String,
    pub kind: Option<String>,
    pub span: Span,
}

/// `x : τ` in parameter lists, `recv` patterns and case arms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub name: String,
    pub ty: SumType,
    pub span: Span,
}

/// A primitive or call argument: a name, or a constructor applied to a name
/// such as `door(shop)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Name(String, Span),
    Typed(ResourceType, Span),
}

impl Arg {
    pub fn span(&self) -> Span {
        match self {
            Arg::Name(_, s) | Arg::Typed(_, s) => *s,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Name(n, _) => f.write_str(n),
            Arg::Typed(t, _) => t.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Prim {
        verb: Verb,
        arg: Option<Arg>,
    },
    Seq(Box<Expr>, Box<Expr>),
    Par(Box<Expr>, Box<Expr>),
    Call {
        name: String,
        args: Vec<Arg>,
    },
    Var(String),
    Case {
        scrutinee: String,
        arms: Vec<(Binding, Expr)>,
    },
    DoRecv {
        body: Box<Expr>,
        pattern: Vec<Binding>,
        rest: Box<Expr>,
    },
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillDef {
    pub name: String,
    pub type_params: Vec<TypeParam>,
    pub params: Vec<Binding>,
    pub ret: Option<SumType>,
    pub body: Expr,
    pub span: Span,
}

impl Expr {
    fn is_atom(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Prim { .. } | ExprKind::Call { .. } | ExprKind::Var(_) | ExprKind::Fail
        )
    }
}

struct Atom<'a>(&'a Expr);

impl fmt::Display for Atom<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_atom() {
            self.0.fmt(f)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

fn bindings(bs: &[Binding]) -> String {
    let parts: Vec<String> = bs.iter().map(|b| format!("{}: {}", b.name, b.ty)).collect();
    parts.join(", ")
}

/// Source form. Compound operands are parenthesized, so printing then
/// parsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Prim { verb, arg: Some(a) } if *verb == Verb::Wait => write!(f, "wait({a})"),
            ExprKind::Prim { verb, arg: Some(a) } => write!(f, "{verb} {a}"),
            ExprKind::Prim { verb, arg: None } => write!(f, "{verb}"),
            ExprKind::Seq(a, b) => write!(f, "{}; {b}", Atom(a)),
            ExprKind::Par(a, b) => write!(f, "{} || {}", Atom(a), Atom(b)),
            ExprKind::Call { name, args } => {
                let args: Vec<String> = args.iter().map(ToString::to_string).collect();
                write!(f, "{name}({})", args.join(", "))
            }
            ExprKind::Var(v) => f.write_str(v),
            ExprKind::Case { scrutinee, arms } => {
                write!(f, "case {scrutinee} of")?;
                for (n, (b, e)) in arms.iter().enumerate() {
                    let bar = if n == 0 { "" } else { " |" };
                    write!(f, "{bar} {}: {} => {}", b.name, b.ty, Atom(e))?;
                }
                Ok(())
            }
            ExprKind::DoRecv {
                body,
                pattern,
                rest,
            } => {
                write!(f, "do {} recv <{}>. {rest}", Atom(body), bindings(pattern))
            }
            ExprKind::Fail => f.write_str("fail"),
        }
    }
}

impl fmt::Display for SkillDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "action {}", self.name)?;
        if !self.type_params.is_empty() {
            let tps: Vec<String> = self
                .type_params
                .iter()
                .map(|t| match &t.kind {
                    Some(k) => format!("{}: {k}", t.name),
                    None => t.name.clone(),
                })
                .collect();
            write!(f, "[{}]", tps.join(", "))?;
        }
        if !self.params.is_empty() {
            write!(f, "({})", bindings(&self.params))?;
        }
        if let Some(r) = &self.ret {
            write!(f, ": {r}")?;
        }
        write!(f, " =\n  {}", self.body)
    }
}
