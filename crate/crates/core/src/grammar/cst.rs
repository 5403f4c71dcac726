//! Concrete syntax trees stored in breadth-first order.

use std::collections::VecDeque;

use thiserror::Error;

use super::{NonTerminal, RuleId, RuleTable, Symbol};
use crate::syntax::{Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CstError {
    #[error("variable `{0}` is not in the closed vocabulary")]
    UnknownVariable(String),
    #[error("base type `{0}` is not in the closed vocabulary")]
    UnknownBaseType(String),
    #[error("the error type has no concrete syntax")]
    ErrorType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CstNode {
    pub symbol: Symbol,
    /// Producing rule for internal nodes, `None` for leaves.
    pub rule: Option<RuleId>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl CstNode {
    pub fn is_leaf(&self) -> bool {
        self.rule.is_none()
    }
}

/// A parse tree whose node vector is in breadth-first order, so a node's
/// position in [`Cst::nodes`] is its BFS index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cst {
    nodes: Vec<CstNode>,
}

enum Pending<'a> {
    Term(&'a Term),
    Var(&'a str),
    Type(&'a Type),
    Leaf(&'a str),
}

impl Cst {
    pub fn from_term(term: &Term, table: &RuleTable) -> Result<Self, CstError> {
        Self::build(Pending::Term(term), table)
    }

    pub fn from_type(ty: &Type, table: &RuleTable) -> Result<Self, CstError> {
        Self::build(Pending::Type(ty), table)
    }

    fn build(root: Pending<'_>, table: &RuleTable) -> Result<Self, CstError> {
        use NonTerminal::{Term as TermNt, Type as TypeNt};
        let mut nodes: Vec<CstNode> = Vec::new();
        let mut queue = VecDeque::from([(root, None::<usize>)]);
        while let Some((item, parent)) = queue.pop_front() {
            let index = nodes.len();
            let (symbol, rule, children) = match item {
                Pending::Term(Term::Var(name)) => variable(name, table)?,
                Pending::Var(name) => variable(name, table)?,
                Pending::Term(Term::Abs { bound, annot, body }) => (
                    Symbol::NonTerminal(TermNt),
                    Some(table.lambda_rule()),
                    vec![
                        Pending::Leaf("lambda"),
                        Pending::Var(bound),
                        Pending::Leaf(":"),
                        Pending::Type(annot),
                        Pending::Leaf("."),
                        Pending::Term(body),
                    ],
                ),
                Pending::Term(Term::App(f, a)) => (
                    Symbol::NonTerminal(TermNt),
                    Some(table.application_rule()),
                    vec![
                        Pending::Leaf("["),
                        Pending::Term(f),
                        Pending::Term(a),
                        Pending::Leaf("]"),
                    ],
                ),
                Pending::Type(Type::Arrow(l, r)) => (
                    Symbol::NonTerminal(TypeNt),
                    Some(table.arrow_rule()),
                    vec![Pending::Type(l), Pending::Leaf("->"), Pending::Type(r)],
                ),
                Pending::Type(Type::Base(name)) => {
                    let rule = table
                        .base_type_rule(name)
                        .ok_or_else(|| CstError::UnknownBaseType(name.clone()))?;
                    (Symbol::NonTerminal(TypeNt), Some(rule), vec![Pending::Leaf(name)])
                }
                Pending::Type(Type::Error) => return Err(CstError::ErrorType),
                Pending::Leaf(text) => (Symbol::terminal(text), None, Vec::new()),
            };
            nodes.push(CstNode {
                symbol,
                rule,
                parent,
                children: Vec::new(),
            });
            if let Some(p) = parent {
                nodes[p].children.push(index);
            }
            queue.extend(children.into_iter().map(|c| (c, Some(index))));
        }
        Ok(Cst { nodes })
    }

    pub fn nodes(&self) -> &[CstNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, index: usize) -> &CstNode {
        &self.nodes[index]
    }

    /// Node indices from the root down to `index`, inclusive.
    pub fn path_to(&self, index: usize) -> Vec<usize> {
        let mut path = vec![index];
        let mut at = index;
        while let Some(p) = self.nodes[at].parent {
            path.push(p);
            at = p;
        }
        path.reverse();
        path
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        let mut max = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            depth[i] = node.parent.map_or(1, |p| depth[p] + 1);
            max = max.max(depth[i]);
        }
        max
    }

    /// Leaf lexemes in left-to-right order.
    pub fn frontier(&self) -> Vec<&str> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if node.is_leaf() {
                out.push(node.symbol.text());
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }
}

fn variable<'a>(
    name: &'a str,
    table: &RuleTable,
) -> Result<(Symbol, Option<RuleId>, Vec<Pending<'a>>), CstError> {
    let rule = table
        .variable_rule(name)
        .ok_or_else(|| CstError::UnknownVariable(name.to_string()))?;
    Ok((
        Symbol::NonTerminal(NonTerminal::Term),
        Some(rule),
        vec![Pending::Leaf(name)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::build_rule_table;
    use crate::syntax::{lex, parse_term, print_term, Tok, TypingContext};

    fn table() -> RuleTable {
        build_rule_table(&TypingContext::global(), 32)
    }

    fn t() -> Type {
        Type::base("T")
    }

    #[test]
    fn base_type_is_one_rule_and_one_leaf() {
        let cst = Cst::from_type(&t(), &table()).unwrap();
        assert_eq!(cst.len(), 2);
        assert_eq!(cst.node(0).symbol.text(), "type");
        assert_eq!(cst.node(0).rule, table().base_type_rule("T"));
        assert_eq!(cst.node(1).symbol, Symbol::terminal("T"));
        assert_eq!(cst.node(1).parent, Some(0));
    }

    #[test]
    fn arrow_type_expands_by_hand() {
        let table = table();
        let cst = Cst::from_type(&Type::arrow(t(), t()), &table).unwrap();
        let root = cst.node(0);
        assert_eq!(root.rule, Some(table.arrow_rule()));
        let kids: Vec<_> = root.children.iter().map(|&c| cst.node(c).symbol.text()).collect();
        assert_eq!(kids, ["type", "->", "type"]);
        for &c in &[root.children[0], root.children[2]] {
            let n = cst.node(c);
            assert_eq!(n.rule, table.base_type_rule("T"));
            assert_eq!(cst.node(n.children[0]).symbol.text(), "T");
        }
        assert_eq!(cst.frontier(), ["T", "->", "T"]);
    }

    #[test]
    fn variable_term() {
        let cst = Cst::from_term(&Term::var("x"), &table()).unwrap();
        assert_eq!(cst.len(), 2);
        assert_eq!(cst.node(0).symbol.text(), "term");
        assert_eq!(cst.node(1).symbol.text(), "x");
    }

    #[test]
    fn frontier_matches_printed_tokens() {
        let ctx = TypingContext::global();
        let term = parse_term(
            "[[lambda bv0 : T . lambda bv1 : (T -> T) -> T . bv1 x] lambda bv2 : T . bv2]",
            &ctx,
        )
        .unwrap();
        let cst = Cst::from_term(&term, &table()).unwrap();
        let printed: Vec<String> = lex(&print_term(&term))
            .unwrap()
            .into_iter()
            .filter(|(t, _)| !matches!(t, Tok::LParen | Tok::RParen))
            .map(|(t, _)| t.to_string().trim_matches('`').to_string())
            .collect();
        assert_eq!(cst.frontier(), printed);
        for (i, node) in cst.nodes().iter().enumerate() {
            if let Some(p) = node.parent {
                assert!(p < i);
            }
            assert_eq!(node.is_leaf(), node.children.is_empty());
            assert!(!matches!(node.symbol.text(), "(" | ")"));
        }
    }

    #[test]
    fn closed_vocabulary_is_enforced() {
        assert_eq!(
            Cst::from_term(&Term::var("y"), &table()),
            Err(CstError::UnknownVariable("y".into()))
        );
        assert_eq!(
            Cst::from_type(&Type::base("U"), &table()),
            Err(CstError::UnknownBaseType("U".into()))
        );
        assert_eq!(Cst::from_type(&Type::Error, &table()), Err(CstError::ErrorType));
    }

    #[test]
    fn paths_and_height() {
        let cst = Cst::from_term(&Term::var("x"), &table()).unwrap();
        assert_eq!(cst.path_to(1), vec![0, 1]);
        assert_eq!(cst.height(), 2);
    }
}
