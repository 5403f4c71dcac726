//! The preprocessed term/type grammar and its rule-ID inventory.
//!
//! Identifier alternatives of the grammar are expanded into one production
//! per name: the base variables of the global context followed by the
//! reserved bound-variable names for terms, and the base types for types.
//! Rule IDs follow order of appearance; the first four IDs are reserved for
//! the `pad`, `sos`, `eos` and `none` markers.

pub mod codec;
pub mod cst;
pub mod metrics;

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::rename::reserved_name;
use crate::syntax::TypingContext;

pub use codec::{
    decode_greedy, decode_rule_ids, encode_type_rules, one_hot_rows, DecodeError, EncodeError,
    RuleSequence,
};
pub use cst::{Cst, CstError, CstNode};
pub use metrics::{batch_accuracy, exact_match, sequence_exact_match, MetricError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub u32);

impl RuleId {
    pub const PAD: RuleId = RuleId(0);
    pub const SOS: RuleId = RuleId(1);
    pub const EOS: RuleId = RuleId(2);
    /// Marks "no parent rule" in per-position parent features.
    pub const NONE: RuleId = RuleId(3);
    pub const FIRST_CONTENT: u32 = 4;

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_special(self) -> bool {
        self.0 < Self::FIRST_CONTENT
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NonTerminal {
    Term,
    Type,
}

impl NonTerminal {
    pub fn name(self) -> &'static str {
        match self {
            NonTerminal::Term => "term",
            NonTerminal::Type => "type",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    NonTerminal(NonTerminal),
    Terminal(String),
}

impl Symbol {
    pub fn terminal(s: impl Into<String>) -> Self {
        Symbol::Terminal(s.into())
    }

    /// Vocabulary spelling: nonterminal name or terminal lexeme.
    pub fn text(&self) -> &str {
        match self {
            Symbol::NonTerminal(nt) => nt.name(),
            Symbol::Terminal(s) => s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: RuleId,
    pub lhs: NonTerminal,
    pub rhs: Vec<Symbol>,
}

/// What a content rule builds; used by the CST builder and the decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Lambda,
    Application,
    Variable(String),
    Arrow,
    BaseType(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTable {
    rules: Vec<Rule>,
    kinds: Vec<RuleKind>,
    variables: HashMap<String, RuleId>,
    base_types: HashMap<String, RuleId>,
    arrow: RuleId,
    n_bound_names: usize,
}

/// Builds the rule inventory for `ctx` with `n_bound_names` reserved
/// bound-variable names.
pub fn build_rule_table(ctx: &TypingContext, n_bound_names: usize) -> RuleTable {
    use NonTerminal::{Term, Type};
    let nt = Symbol::NonTerminal;
    let lit = |s: &str| Symbol::Terminal(s.to_string());

    let mut table = RuleTable {
        rules: Vec::new(),
        kinds: Vec::new(),
        variables: HashMap::new(),
        base_types: HashMap::new(),
        arrow: RuleId::NONE,
        n_bound_names,
    };
    table.push(
        Term,
        vec![lit("lambda"), nt(Term), lit(":"), nt(Type), lit("."), nt(Term)],
        RuleKind::Lambda,
    );
    table.push(
        Term,
        vec![lit("["), nt(Term), nt(Term), lit("]")],
        RuleKind::Application,
    );

    let mut names: Vec<String> = Vec::new();
    for (name, _) in ctx.bindings() {
        if !names.contains(name) {
            names.push(name.clone());
        }
    }
    names.extend((0..n_bound_names).map(reserved_name));
    for name in names {
        if table.variables.contains_key(&name) {
            continue;
        }
        let id = table.push(Term, vec![lit(&name)], RuleKind::Variable(name.clone()));
        table.variables.insert(name, id);
    }

    table.arrow = table.push(
        Type,
        vec![nt(Type), lit("->"), nt(Type)],
        RuleKind::Arrow,
    );
    for base in ctx.base_types() {
        if table.base_types.contains_key(base) {
            continue;
        }
        let id = table.push(Type, vec![lit(base)], RuleKind::BaseType(base.clone()));
        table.base_types.insert(base.clone(), id);
    }
    table
}

impl RuleTable {
    fn push(&mut self, lhs: NonTerminal, rhs: Vec<Symbol>, kind: RuleKind) -> RuleId {
        let id = RuleId(RuleId::FIRST_CONTENT + self.rules.len() as u32);
        self.rules.push(Rule { id, lhs, rhs });
        self.kinds.push(kind);
        id
    }

    /// Content rules in ID order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Total number of IDs, special markers included. Score rows passed to
    /// the decoder must have exactly this width.
    pub fn num_ids(&self) -> usize {
        RuleId::FIRST_CONTENT as usize + self.rules.len()
    }

    pub fn n_bound_names(&self) -> usize {
        self.n_bound_names
    }

    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        id.0.checked_sub(RuleId::FIRST_CONTENT)
            .and_then(|i| self.rules.get(i as usize))
    }

    pub fn kind(&self, id: RuleId) -> Option<&RuleKind> {
        id.0.checked_sub(RuleId::FIRST_CONTENT)
            .and_then(|i| self.kinds.get(i as usize))
    }

    pub fn lambda_rule(&self) -> RuleId {
        RuleId(RuleId::FIRST_CONTENT)
    }

    pub fn application_rule(&self) -> RuleId {
        RuleId(RuleId::FIRST_CONTENT + 1)
    }

    pub fn variable_rule(&self, name: &str) -> Option<RuleId> {
        self.variables.get(name).copied()
    }

    pub fn arrow_rule(&self) -> RuleId {
        self.arrow
    }

    pub fn base_type_rule(&self, name: &str) -> Option<RuleId> {
        self.base_types.get(name).copied()
    }

    /// The line-oriented rules file: a header naming the special IDs, then
    /// `<id>\t<lhs>\t<rhs>` per content rule with terminals double-quoted.
    pub fn to_rules_text(&self) -> String {
        let mut out = format!(
            "# pad={} sos={} eos={} none={}\n",
            RuleId::PAD,
            RuleId::SOS,
            RuleId::EOS,
            RuleId::NONE
        );
        for rule in &self.rules {
            let rhs: Vec<String> = rule
                .rhs
                .iter()
                .map(|s| match s {
                    Symbol::NonTerminal(nt) => nt.name().to_string(),
                    Symbol::Terminal(t) => format!("\"{t}\""),
                })
                .collect();
            let _ = writeln!(out, "{}\t{}\t{}", rule.id, rule.lhs.name(), rhs.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_subgrammar_has_two_rules() {
        let table = build_rule_table(&TypingContext::global(), 32);
        let type_rules: Vec<_> = table
            .rules()
            .iter()
            .filter(|r| r.lhs == NonTerminal::Type)
            .collect();
        assert_eq!(type_rules.len(), 2);
        assert_eq!(table.kind(table.arrow_rule()), Some(&RuleKind::Arrow));
        let t = table.base_type_rule("T").unwrap();
        assert_eq!(table.rule(t).unwrap().rhs, vec![Symbol::terminal("T")]);
        // lambda, application, x, bv0..bv31, arrow, T
        assert_eq!(table.rules().len(), 2 + 1 + 32 + 2);
        assert_eq!(table.num_ids(), 4 + 37);
    }

    #[test]
    fn no_bound_names_leaves_only_base_variables() {
        let table = build_rule_table(&TypingContext::global(), 0);
        let vars: Vec<_> = table
            .rules()
            .iter()
            .filter_map(|r| match table.kind(r.id) {
                Some(RuleKind::Variable(v)) => Some(v.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(vars, vec!["x".to_string()]);
    }

    #[test]
    fn rules_text_is_deterministic() {
        let a = build_rule_table(&TypingContext::global(), 32).to_rules_text();
        let b = build_rule_table(&TypingContext::global(), 32).to_rules_text();
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert_eq!(lines.next(), Some("# pad=0 sos=1 eos=2 none=3"));
        assert_eq!(
            lines.next(),
            Some("4\tterm\t\"lambda\" term \":\" type \".\" term")
        );
        assert_eq!(lines.next(), Some("5\tterm\t\"[\" term term \"]\""));
        assert_eq!(lines.next(), Some("6\tterm\t\"x\""));
        assert!(a.ends_with("39\ttype\ttype \"->\" type\n40\ttype\t\"T\"\n"));
    }

    #[test]
    fn special_ids_are_not_content_rules() {
        let table = build_rule_table(&TypingContext::global(), 32);
        for id in [RuleId::PAD, RuleId::SOS, RuleId::EOS, RuleId::NONE] {
            assert!(id.is_special());
            assert!(table.rule(id).is_none());
        }
        assert!(table.rules().iter().all(|r| !r.id.is_special()));
    }
}
