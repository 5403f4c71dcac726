//! Type inference for the simply typed lambda calculus.

use thiserror::Error;

use crate::syntax::{Term, Type, TypingContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("cannot apply a term of non-function type `{0}`")]
    NotAFunction(Type),
    #[error("argument has type `{found}` but the function expects `{expected}`")]
    ArgumentMismatch { expected: Type, found: Type },
    #[error("the error type cannot annotate a binder")]
    ErrorAnnotation,
}

/// Computes the type of `term` under `ctx` with the standard rules:
/// variables are looked up, `lambda x : A . e` has type `A -> B` when `e : B`
/// and `[f a]` has type `B` when `f : A -> B` and `a : A`.
pub fn infer_type(term: &Term, ctx: &TypingContext) -> Result<Type, TypeError> {
    let mut scope = ctx.clone();
    infer_in(term, &mut scope)
}

fn infer_in(term: &Term, scope: &mut TypingContext) -> Result<Type, TypeError> {
    match term {
        Term::Var(name) => scope
            .lookup(name)
            .cloned()
            .map_err(|e| TypeError::Unbound(e.0)),
        Term::Abs { bound, annot, body } => {
            if contains_error(annot) {
                return Err(TypeError::ErrorAnnotation);
            }
            scope.push(bound.clone(), annot.clone());
            let body_ty = infer_in(body, scope);
            scope.pop();
            Ok(Type::arrow(annot.clone(), body_ty?))
        }
        Term::App(fun, arg) => {
            let fun_ty = infer_in(fun, scope)?;
            let arg_ty = infer_in(arg, scope)?;
            match fun_ty {
                Type::Arrow(param, result) => {
                    if *param == arg_ty {
                        Ok(*result)
                    } else {
                        Err(TypeError::ArgumentMismatch {
                            expected: *param,
                            found: arg_ty,
                        })
                    }
                }
                other => Err(TypeError::NotAFunction(other)),
            }
        }
    }
}

fn contains_error(ty: &Type) -> bool {
    match ty {
        Type::Error => true,
        Type::Base(_) => false,
        Type::Arrow(l, r) => contains_error(l) || contains_error(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_term, parse_type};

    fn check(term: &str, expected: &str) {
        let ctx = TypingContext::global();
        let t = parse_term(term, &ctx).unwrap();
        assert_eq!(
            infer_type(&t, &ctx).unwrap(),
            parse_type(expected, &ctx).unwrap(),
            "{term}"
        );
    }

    #[test]
    fn worked_examples() {
        check("x", "T");
        check("lambda x_0 : T . x", "T -> T");
        check("[lambda x_0 : T . x x]", "T");
        check("lambda x_0 : T -> T . x", "(T -> T) -> T");
        check(
            "[[lambda x_1 : T . lambda x_2 : T -> T . x_2 x] lambda x_0 : T . x_0]",
            "T -> T",
        );
    }

    #[test]
    fn innermost_binding_wins() {
        check("lambda y : T . lambda y : T -> T . y", "T -> (T -> T) -> T -> T");
    }

    #[test]
    fn errors() {
        let ctx = TypingContext::global();
        let p = |s| parse_term(s, &ctx).unwrap();
        assert_eq!(
            infer_type(&p("z"), &ctx),
            Err(TypeError::Unbound("z".into()))
        );
        assert_eq!(
            infer_type(&p("[x x]"), &ctx),
            Err(TypeError::NotAFunction(Type::base("T")))
        );
        assert_eq!(
            infer_type(&p("[lambda y : T -> T . y x]"), &ctx),
            Err(TypeError::ArgumentMismatch {
                expected: Type::arrow(Type::base("T"), Type::base("T")),
                found: Type::base("T"),
            })
        );
        let bad = Term::abs("y", Type::Error, Term::var("y"));
        assert_eq!(infer_type(&bad, &ctx), Err(TypeError::ErrorAnnotation));
    }

    #[test]
    fn scope_is_restored_after_abstraction() {
        // `y` must not leak out of the abstraction in the function position.
        let ctx = TypingContext::global();
        let t = parse_term("[lambda y : T . y y]", &ctx).unwrap();
        assert_eq!(infer_type(&t, &ctx), Err(TypeError::Unbound("y".into())));
    }
}
