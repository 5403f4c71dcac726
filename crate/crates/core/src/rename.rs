//! Canonical renaming of bound variables by breadth-first position.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::syntax::Term;

/// Size of the closed set of bound-variable names.
pub const MAX_BOUND_NAMES: usize = 32;

const RESERVED_PREFIX: &str = "bv";

/// The reserved name for the binder at breadth-first position `index`.
pub fn reserved_name(index: usize) -> String {
    format!("{RESERVED_PREFIX}{index}")
}

pub fn is_reserved_name(name: &str) -> bool {
    name.strip_prefix(RESERVED_PREFIX)
        .and_then(|rest| rest.parse::<usize>().ok())
        .is_some_and(|i| i < MAX_BOUND_NAMES && reserved_name(i) == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenameError {
    #[error("term has {0} binders, more than the {MAX_BOUND_NAMES} reserved names")]
    TooManyBinders(usize),
    #[error("free variable `{0}` collides with a reserved bound-variable name")]
    ReservedFreeVariable(String),
}

/// Renames every binder to `bv{i}`, where `i` is the breadth-first index of
/// its abstraction among all abstractions of the term. Occurrences follow
/// their (innermost) binding site; free variables are kept as they are.
pub fn bfs_rename(term: &Term) -> Result<Term, RenameError> {
    let mut order: HashMap<*const Term, usize> = HashMap::new();
    let mut queue = VecDeque::from([term]);
    while let Some(node) = queue.pop_front() {
        match node {
            Term::Var(_) => {}
            Term::Abs { body, .. } => {
                order.insert(node as *const Term, order.len());
                queue.push_back(body);
            }
            Term::App(f, a) => {
                queue.push_back(f);
                queue.push_back(a);
            }
        }
    }
    if order.len() > MAX_BOUND_NAMES {
        return Err(RenameError::TooManyBinders(order.len()));
    }
    let mut scope: Vec<(&str, String)> = Vec::new();
    rewrite(term, &order, &mut scope)
}

fn rewrite<'t>(
    term: &'t Term,
    order: &HashMap<*const Term, usize>,
    scope: &mut Vec<(&'t str, String)>,
) -> Result<Term, RenameError> {
    match term {
        Term::Var(name) => match scope.iter().rev().find(|(old, _)| old == name) {
            Some((_, new)) => Ok(Term::Var(new.clone())),
            None if is_reserved_name(name) => Err(RenameError::ReservedFreeVariable(name.clone())),
            None => Ok(Term::Var(name.clone())),
        },
        Term::Abs { bound, annot, body } => {
            let fresh = reserved_name(order[&(term as *const Term)]);
            scope.push((bound, fresh.clone()));
            let body = rewrite(body, order, scope);
            scope.pop();
            Ok(Term::abs(fresh, annot.clone(), body?))
        }
        Term::App(f, a) => Ok(Term::app(
            rewrite(f, order, scope)?,
            rewrite(a, order, scope)?,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infer::infer_type;
    use crate::syntax::{parse_term, print_term, TypingContext};

    fn renamed(s: &str) -> String {
        let ctx = TypingContext::global();
        print_term(&bfs_rename(&parse_term(s, &ctx).unwrap()).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(renamed("x"), "x");
        assert_eq!(renamed("lambda y : T . y"), "lambda bv0 : T . bv0");
        assert_eq!(
            renamed("lambda y : T . lambda y : T . y"),
            "lambda bv0 : T . lambda bv1 : T . bv1"
        );
    }

    #[test]
    fn numbering_is_breadth_first() {
        // The right-hand abstraction sits one level above the nested one.
        assert_eq!(
            renamed("[lambda a : T . lambda b : T . a lambda c : T . c]"),
            "[lambda bv0 : T . lambda bv2 : T . bv0 lambda bv1 : T . bv1]"
        );
    }

    #[test]
    fn idempotent_and_type_preserving() {
        let ctx = TypingContext::global();
        let t = parse_term(
            "[[lambda x_1 : T . lambda x_2 : T -> T . x_2 x] lambda x_0 : T . x_0]",
            &ctx,
        )
        .unwrap();
        let once = bfs_rename(&t).unwrap();
        assert_eq!(bfs_rename(&once).unwrap(), once);
        assert_eq!(infer_type(&once, &ctx), infer_type(&t, &ctx));
    }

    #[test]
    fn overflow_is_an_error() {
        let mut t = Term::var("x");
        for i in 0..33 {
            t = Term::abs(format!("y{i}"), crate::syntax::Type::base("T"), t);
        }
        assert_eq!(bfs_rename(&t), Err(RenameError::TooManyBinders(33)));
    }

    #[test]
    fn reserved_names() {
        assert!(is_reserved_name("bv0"));
        assert!(is_reserved_name("bv31"));
        assert!(!is_reserved_name("bv32"));
        assert!(!is_reserved_name("bv01"));
        assert!(!is_reserved_name("x"));
        assert_eq!(
            bfs_rename(&Term::var("bv3")),
            Err(RenameError::ReservedFreeVariable("bv3".into()))
        );
    }
}
