use rand::Rng;

use super::{gen_type, GenError};
use crate::syntax::{Term, Type, TypingContext};

/// Smallest depth of a term of type `ty` under `ctx`, if any exists.
///
/// A variable of the exact type costs 1; otherwise an arrow `A -> B` costs
/// one abstraction over a fresh binder of type `A` plus the cost of `B`.
/// Applications never make a term shallower, so they are not considered.
pub fn min_term_depth(ty: &Type, ctx: &TypingContext) -> Option<usize> {
    let mut available: Vec<&Type> = ctx.visible().into_iter().map(|(_, t)| t).collect();
    let mut current = ty;
    let mut depth = 1;
    loop {
        if available.contains(&current) {
            return Some(depth);
        }
        match current {
            Type::Arrow(l, r) => {
                available.push(l);
                current = r;
                depth += 1;
            }
            _ => return None,
        }
    }
}

fn fits(ty: &Type, ctx: &TypingContext, budget: usize) -> bool {
    min_term_depth(ty, ctx).is_some_and(|d| d <= budget)
}

/// Generates a term of type `ty` whose depth is at most `max_depth`.
///
/// Base types choose uniformly between a context variable and an
/// application; arrow types choose uniformly between a context variable, a
/// fresh abstraction and an application. Only options that can still be
/// completed within the remaining depth are offered. One level above the
/// limit an arrow type is built from a context variable when there is one,
/// and from a single abstraction over a variable otherwise.
pub fn gen_term<R: Rng + ?Sized>(
    rng: &mut R,
    ty: &Type,
    ctx: &TypingContext,
    max_depth: usize,
    p_branch: f64,
) -> Result<Term, GenError> {
    if !fits(ty, ctx, max_depth) {
        return Err(GenError::Unproducible {
            ty: ty.clone(),
            max_depth,
        });
    }
    let mut gen = TermGen {
        rng,
        p_branch,
        reserved: ctx.bindings().iter().map(|(n, _)| n.clone()).collect(),
        used: Vec::new(),
        next_fresh: 0,
    };
    let mut scope = ctx.clone();
    Ok(gen.term(ty, max_depth, &mut scope))
}

enum Choice {
    Var,
    Abs,
    App(Type),
}

struct TermGen<'r, R: ?Sized> {
    rng: &'r mut R,
    p_branch: f64,
    /// Names of the global context; never reused for binders.
    reserved: Vec<String>,
    /// Binder names handed out so far in this term.
    used: Vec<String>,
    next_fresh: usize,
}

impl<R: Rng + ?Sized> TermGen<'_, R> {
    // Callers guarantee `fits(ty, scope, budget)`.
    fn term(&mut self, ty: &Type, budget: usize, scope: &mut TypingContext) -> Term {
        let vars: Vec<String> = scope
            .visible()
            .into_iter()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n.to_string())
            .collect();

        let choice = match ty {
            Type::Arrow(..) if budget == 2 => {
                if vars.is_empty() {
                    Choice::Abs
                } else {
                    Choice::Var
                }
            }
            _ => {
                let mut options = Vec::with_capacity(3);
                if !vars.is_empty() {
                    options.push(Choice::Var);
                }
                if budget > 1 {
                    if let Type::Arrow(l, r) = ty {
                        scope.push(self.fresh_name_peek(), (**l).clone());
                        let ok = fits(r, scope, budget - 1);
                        scope.pop();
                        if ok {
                            options.push(Choice::Abs);
                        }
                    }
                    if let Some(arg) = self.application_argument(ty, budget, scope) {
                        options.push(Choice::App(arg));
                    }
                }
                debug_assert!(!options.is_empty(), "{ty} does not fit in {budget}");
                let at = self.rng.gen_range(0..options.len());
                options.swap_remove(at)
            }
        };

        match choice {
            Choice::Var => Term::Var(vars[self.rng.gen_range(0..vars.len())].clone()),
            Choice::Abs => {
                let Type::Arrow(l, r) = ty else {
                    unreachable!("abstractions are only chosen for arrow types")
                };
                let name = self.binder_name(l, r, budget - 1, scope);
                scope.push(name.clone(), (**l).clone());
                let body = self.term(r, budget - 1, scope);
                scope.pop();
                Term::abs(name, (**l).clone(), body)
            }
            Choice::App(arg) => {
                let fun_ty = Type::arrow(arg.clone(), ty.clone());
                let fun = self.term(&fun_ty, budget - 1, scope);
                let arg = self.term(&arg, budget - 1, scope);
                Term::app(fun, arg)
            }
        }
    }

    /// Draws the argument type of an application returning `ty`, if both
    /// sides of the application fit below `budget`.
    fn application_argument(
        &mut self,
        ty: &Type,
        budget: usize,
        scope: &TypingContext,
    ) -> Option<Type> {
        let arg = gen_type(&mut *self.rng, scope, budget - 1, self.p_branch);
        let fun_ty = Type::arrow(arg.clone(), ty.clone());
        (fits(&fun_ty, scope, budget - 1) && fits(&arg, scope, budget - 1)).then_some(arg)
    }

    fn fresh_name_peek(&self) -> String {
        let mut k = self.next_fresh;
        loop {
            let name = format!("x_{k}");
            if !self.reserved.contains(&name) && !self.used.contains(&name) {
                return name;
            }
            k += 1;
        }
    }

    /// Uniform over the names already used in this term plus one fresh name,
    /// restricted to names whose shadowing keeps the body producible.
    fn binder_name(
        &mut self,
        param: &Type,
        body_ty: &Type,
        body_budget: usize,
        scope: &mut TypingContext,
    ) -> String {
        let fresh = self.fresh_name_peek();
        let mut candidates: Vec<String> = Vec::with_capacity(self.used.len() + 1);
        for name in self.used.iter().chain(std::iter::once(&fresh)) {
            scope.push(name.clone(), param.clone());
            let ok = fits(body_ty, scope, body_budget);
            scope.pop();
            if ok {
                candidates.push(name.clone());
            }
        }
        let name = candidates.swap_remove(self.rng.gen_range(0..candidates.len()));
        if name == fresh {
            self.used.push(fresh);
            self.next_fresh += 1;
        }
        name
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::example_rng;
    use crate::infer::infer_type;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t() -> Type {
        Type::base("T")
    }

    #[test]
    fn depth_one_base_type_is_the_base_variable() {
        let ctx = TypingContext::global();
        for seed in 0..20 {
            let term = gen_term(&mut example_rng(seed, 0), &t(), &ctx, 1, 0.5).unwrap();
            assert_eq!(term, Term::var("x"));
        }
    }

    #[test]
    fn minimal_arrow_abstraction_has_two_outcomes() {
        // At depth 2 with no T -> T variable the only construction is
        // `lambda b : T . v` where `v` is `x` or the binder itself.
        let ctx = TypingContext::global();
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            let term =
                gen_term(&mut example_rng(seed, 3), &Type::arrow(t(), t()), &ctx, 2, 0.5).unwrap();
            let renamed = crate::rename::bfs_rename(&term).unwrap().to_string();
            assert!(
                renamed == "lambda bv0 : T . x" || renamed == "lambda bv0 : T . bv0",
                "{renamed}"
            );
            seen.insert(renamed);
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn seeded_term_is_golden() {
        let ctx = TypingContext::global();
        let draw = || gen_term(&mut ChaCha8Rng::seed_from_u64(0), &t(), &ctx, 4, 0.5).unwrap();
        let term = draw();
        assert_eq!(infer_type(&term, &ctx).unwrap(), t());
        assert!(term.depth() <= 4);
        assert_eq!(term, draw());
        assert_eq!(
            term.to_string(),
            "[[lambda x_0 : T -> T . x_0 lambda x_0 : T . x] \
             [lambda x_1 : T -> T . x lambda x_1 : T . x]]"
        );
    }

    #[test]
    fn min_depth_follows_the_right_spine() {
        let ctx = TypingContext::global();
        assert_eq!(min_term_depth(&t(), &ctx), Some(1));
        assert_eq!(min_term_depth(&Type::arrow(t(), t()), &ctx), Some(2));
        let tt = Type::arrow(t(), t());
        // lambda b : T -> T . b
        assert_eq!(min_term_depth(&Type::arrow(tt.clone(), tt.clone()), &ctx), Some(2));
        // lambda a : T . lambda b : T . x
        assert_eq!(
            min_term_depth(&Type::arrow(t(), Type::arrow(t(), t())), &ctx),
            Some(3)
        );
        let empty = TypingContext::empty(["T"]);
        assert_eq!(min_term_depth(&t(), &empty), None);
        assert_eq!(min_term_depth(&Type::arrow(t(), t()), &empty), Some(2));
    }

    #[test]
    fn unproducible_targets_are_reported() {
        let empty = TypingContext::empty(["T"]);
        let err = gen_term(&mut example_rng(0, 0), &t(), &empty, 5, 0.5).unwrap_err();
        assert!(matches!(err, GenError::Unproducible { .. }));
    }

    #[test]
    fn random_targets_type_check() {
        let ctx = TypingContext::global();
        for seed in 0..500 {
            let mut rng = example_rng(seed, 9);
            let ty = gen_type(&mut rng, &ctx, 5, 0.5);
            let Ok(term) = gen_term(&mut rng, &ty, &ctx, 5, 0.5) else {
                continue;
            };
            assert_eq!(infer_type(&term, &ctx).unwrap(), ty, "{term}");
            assert!(term.depth() <= 5);
        }
    }
}
