//! Terms, types and typing contexts of the simply typed lambda calculus,
//! together with their canonical concrete syntax.
//!
//! The textual form is
//!
//! ```text
//! term ::= "lambda" ident ":" type "." term | "[" term term "]" | ident
//! type ::= type "->" type | ident
//! ```
//!
//! Whitespace is insignificant and parentheses may wrap any term or type.
//! Arrows associate to the right, so `T -> T -> T` is `T -> (T -> T)`.

use std::fmt;

use thiserror::Error;

/// Name of the single base type of the default global context.
pub const BASE_TYPE: &str = "T";
/// Name of the single base variable of the default global context.
pub const BASE_VARIABLE: &str = "x";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Base(String),
    Arrow(Box<Type>, Box<Type>),
    /// Sentinel produced when a predicted rule sequence is not a valid
    /// derivation. Never nested inside another type.
    Error,
}

impl Type {
    pub fn base(name: impl Into<String>) -> Self {
        Type::Base(name.into())
    }

    pub fn arrow(left: Type, right: Type) -> Self {
        Type::Arrow(Box::new(left), Box::new(right))
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Type::Error)
    }

    /// 1 for a base type, `1 + max` of both sides for an arrow.
    pub fn depth(&self) -> usize {
        match self {
            Type::Base(_) | Type::Error => 1,
            Type::Arrow(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn arrow_count(&self) -> usize {
        match self {
            Type::Base(_) | Type::Error => 0,
            Type::Arrow(l, r) => 1 + l.arrow_count() + r.arrow_count(),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Base(name) => f.write_str(name),
            Type::Arrow(l, r) => {
                if matches!(**l, Type::Arrow(..)) {
                    write!(f, "({l}) -> {r}")
                } else {
                    write!(f, "{l} -> {r}")
                }
            }
            Type::Error => f.write_str("<error>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Abs {
        bound: String,
        annot: Type,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn abs(bound: impl Into<String>, annot: Type, body: Term) -> Self {
        Term::Abs {
            bound: bound.into(),
            annot,
            body: Box::new(body),
        }
    }

    pub fn app(fun: Term, arg: Term) -> Self {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// 1 for a variable, `1 + depth(body)` for an abstraction and
    /// `1 + max` of both sides for an application. Annotations do not count.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Abs { body, .. } => 1 + body.depth(),
            Term::App(f, a) => 1 + f.depth().max(a.depth()),
        }
    }

    pub fn abstraction_count(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Abs { body, .. } => 1 + body.abstraction_count(),
            Term::App(f, a) => f.abstraction_count() + a.abstraction_count(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => f.write_str(name),
            Term::Abs { bound, annot, body } => write!(f, "lambda {bound} : {annot} . {body}"),
            Term::App(fun, arg) => write!(f, "[{fun} {arg}]"),
        }
    }
}

/// Canonical text of a term; the inverse of [`parse_term`].
pub fn print_term(term: &Term) -> String {
    term.to_string()
}

pub fn print_type(ty: &Type) -> String {
    ty.to_string()
}

/// Ordered variable bindings plus the alphabet of base types.
///
/// Later bindings shadow earlier ones with the same name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypingContext {
    base_types: Vec<String>,
    bindings: Vec<(String, Type)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unbound variable `{0}`")]
pub struct UnboundVariable(pub String);

impl TypingContext {
    pub fn empty(base_types: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            base_types: base_types.into_iter().map(Into::into).collect(),
            bindings: Vec::new(),
        }
    }

    /// The global context `{x : T}`.
    pub fn global() -> Self {
        Self::empty([BASE_TYPE]).extend(BASE_VARIABLE, Type::base(BASE_TYPE))
    }

    pub fn extend(mut self, name: impl Into<String>, ty: Type) -> Self {
        self.bindings.push((name.into(), ty));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, ty: Type) {
        self.bindings.push((name.into(), ty));
    }

    pub fn pop(&mut self) -> Option<(String, Type)> {
        self.bindings.pop()
    }

    pub fn lookup(&self, name: &str) -> Result<&Type, UnboundVariable> {
        self.bindings
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| UnboundVariable(name.to_string()))
    }

    pub fn base_types(&self) -> &[String] {
        &self.base_types
    }

    pub fn is_base_type(&self, name: &str) -> bool {
        self.base_types.iter().any(|b| b == name)
    }

    /// All bindings in insertion order, including shadowed ones.
    pub fn bindings(&self) -> &[(String, Type)] {
        &self.bindings
    }

    /// Names currently in scope with their visible type, innermost binding
    /// first; shadowed bindings are omitted.
    pub fn visible(&self) -> Vec<(&str, &Type)> {
        let mut out: Vec<(&str, &Type)> = Vec::with_capacity(self.bindings.len());
        for (name, ty) in self.bindings.iter().rev() {
            if !out.iter().any(|(n, _)| *n == name) {
                out.push((name, ty));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at byte {pos}")]
    UnknownToken { ch: char, pos: usize },
    #[error("expected {expected} at byte {pos}, found {found}")]
    Unexpected {
        expected: &'static str,
        found: String,
        pos: usize,
    },
    #[error("unknown base type `{name}` at byte {pos}")]
    UnknownBaseType { name: String, pos: usize },
    #[error("trailing input at byte {pos}")]
    Trailing { pos: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Lambda,
    Colon,
    Dot,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Arrow,
    Ident(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Lambda => "lambda",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Arrow => "->",
            Tok::Ident(s) => s,
        };
        write!(f, "`{s}`")
    }
}

pub(crate) fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        match ch {
            c if c.is_whitespace() => {
                chars.next();
            }
            ':' | '.' | '[' | ']' | '(' | ')' | 'λ' | '→' => {
                chars.next();
                let tok = match ch {
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    'λ' => Tok::Lambda,
                    _ => Tok::Arrow,
                };
                out.push((tok, pos));
            }
            '-' => {
                chars.next();
                match chars.next() {
                    Some((_, '>')) => out.push((Tok::Arrow, pos)),
                    _ => return Err(ParseError::UnknownToken { ch: '-', pos }),
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut ident = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        ident.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                if ident == "lambda" {
                    out.push((Tok::Lambda, pos));
                } else {
                    out.push((Tok::Ident(ident), pos));
                }
            }
            other => return Err(ParseError::UnknownToken { ch: other, pos }),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    ctx: &'a TypingContext,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn found(&self) -> String {
        self.peek()
            .map(ToString::to_string)
            .unwrap_or_else(|| "end of input".to_string())
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(ParseError::Unexpected {
                expected,
                found: self.found(),
                pos: self.pos(),
            })
        }
    }

    fn ident(&mut self, expected: &'static str) -> Result<(String, usize), ParseError> {
        match self.toks.get(self.at) {
            Some((Tok::Ident(name), pos)) => {
                let out = (name.clone(), *pos);
                self.at += 1;
                Ok(out)
            }
            _ => Err(ParseError::Unexpected {
                expected,
                found: self.found(),
                pos: self.pos(),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Some(Tok::Lambda) => {
                self.at += 1;
                let bound = self.binder()?;
                self.expect(Tok::Colon, "`:`")?;
                let annot = self.ty()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.term()?;
                Ok(Term::abs(bound, annot, body))
            }
            Some(Tok::LBracket) => {
                self.at += 1;
                let f = self.term()?;
                let a = self.term()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Term::app(f, a))
            }
            _ => Ok(Term::Var(self.ident("a term")?.0)),
        }
    }

    fn binder(&mut self) -> Result<String, ParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            let b = self.binder()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(b);
        }
        Ok(self.ident("a bound variable")?.0)
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let left = self.ty_atom()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.at += 1;
            let right = self.ty()?;
            return Ok(Type::arrow(left, right));
        }
        Ok(left)
    }

    fn ty_atom(&mut self) -> Result<Type, ParseError> {
        if self.peek() == Some(&Tok::LParen) {
            self.at += 1;
            let t = self.ty()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(t);
        }
        let (name, pos) = self.ident("a type")?;
        if !self.ctx.is_base_type(&name) {
            return Err(ParseError::UnknownBaseType { name, pos });
        }
        Ok(Type::Base(name))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at < self.toks.len() {
            Err(ParseError::Trailing { pos: self.pos() })
        } else {
            Ok(())
        }
    }
}

fn parser<'a>(text: &str, ctx: &'a TypingContext) -> Result<Parser<'a>, ParseError> {
    Ok(Parser {
        toks: lex(text)?,
        at: 0,
        end: text.len(),
        ctx,
    })
}

/// Parses a term; type annotations must use base types known to `ctx`.
pub fn parse_term(text: &str, ctx: &TypingContext) -> Result<Term, ParseError> {
    let mut p = parser(text, ctx)?;
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_type(text: &str, ctx: &TypingContext) -> Result<Type, ParseError> {
    let mut p = parser(text, ctx)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Type {
        Type::base("T")
    }

    #[test]
    fn parses_worked_examples() {
        let ctx = TypingContext::global();
        assert_eq!(parse_term("x", &ctx).unwrap(), Term::var("x"));
        assert_eq!(
            parse_term("lambda x_0 : T . x", &ctx).unwrap(),
            Term::abs("x_0", t(), Term::var("x"))
        );
        assert_eq!(
            parse_term("[ lambda x_0 : T . x   x ]", &ctx).unwrap(),
            Term::app(Term::abs("x_0", t(), Term::var("x")), Term::var("x"))
        );
    }

    #[test]
    fn prints_canonical_forms() {
        assert_eq!(print_term(&Term::var("x")), "x");
        assert_eq!(
            print_term(&Term::abs("x_0", t(), Term::var("x"))),
            "lambda x_0 : T . x"
        );
        assert_eq!(print_term(&Term::app(Term::var("f"), Term::var("x"))), "[f x]");
    }

    #[test]
    fn arrows_associate_right() {
        let ctx = TypingContext::global();
        let right = Type::arrow(t(), Type::arrow(t(), t()));
        let left = Type::arrow(Type::arrow(t(), t()), t());
        assert_eq!(parse_type("T -> T -> T", &ctx).unwrap(), right);
        assert_eq!(parse_type("(T -> T) -> T", &ctx).unwrap(), left);
        assert_eq!(print_type(&left), "(T -> T) -> T");
        assert_eq!(print_type(&right), "T -> T -> T");
    }

    #[test]
    fn parentheses_and_whitespace_are_ignorable() {
        let ctx = TypingContext::global();
        let a = parse_term("[(lambda y:(T). (y)) ((x))]", &ctx).unwrap();
        let b = parse_term("[lambda y : T . y x]", &ctx).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            parse_term("λy:T→T.y", &ctx).unwrap(),
            parse_term("lambda y : T -> T . y", &ctx).unwrap()
        );
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let ctx = TypingContext::global();
        assert_eq!(
            parse_term("x $", &ctx),
            Err(ParseError::UnknownToken { ch: '$', pos: 2 })
        );
        assert!(matches!(
            parse_term("lambda y T . y", &ctx),
            Err(ParseError::Unexpected { pos: 9, .. })
        ));
        assert_eq!(parse_term("x x", &ctx), Err(ParseError::Trailing { pos: 2 }));
        assert!(matches!(
            parse_term("[x x", &ctx),
            Err(ParseError::Unexpected { expected: "`]`", .. })
        ));
        assert_eq!(
            parse_term("lambda y : U . y", &ctx),
            Err(ParseError::UnknownBaseType {
                name: "U".into(),
                pos: 11
            })
        );
        assert!(parse_term("", &ctx).is_err());
        assert!(parse_term("x - y", &ctx).is_err());
    }

    #[test]
    fn depths() {
        assert_eq!(Term::var("x").depth(), 1);
        assert_eq!(Term::abs("y", t(), Term::var("x")).depth(), 2);
        assert_eq!(Type::arrow(Type::arrow(t(), t()), t()).depth(), 3);
        assert_eq!(t().depth(), 1);
    }

    #[test]
    fn context_lookup_and_shadowing() {
        let ctx = TypingContext::global()
            .extend("y", t())
            .extend("y", Type::arrow(t(), t()));
        assert_eq!(ctx.lookup("y").unwrap(), &Type::arrow(t(), t()));
        assert_eq!(ctx.lookup("z"), Err(UnboundVariable("z".into())));
        let visible = ctx.visible();
        assert_eq!(visible.len(), 2);
        assert_eq!(visible[0], ("y", &Type::arrow(t(), t())));
        assert_eq!(ctx.base_types(), ["T".to_string()]);
    }
}
