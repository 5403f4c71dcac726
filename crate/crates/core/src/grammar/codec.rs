//! Types as breadth-first rule sequences, and greedy synthesis back.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{RuleId, RuleKind, RuleTable};
use crate::syntax::Type;

/// Rule IDs of a type's CST internal nodes in BFS order, without framing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleSequence(pub Vec<RuleId>);

impl RuleSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[RuleId] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("the error type cannot be encoded")]
    ErrorType,
    #[error("base type `{0}` has no rule")]
    UnknownBaseType(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("score row {row} has width {width}, expected {expected}")]
    RowWidth {
        row: usize,
        width: usize,
        expected: usize,
    },
    #[error("score row {row} contains a non-finite value")]
    NonFinite { row: usize },
}

pub fn encode_type_rules(ty: &Type, table: &RuleTable) -> Result<RuleSequence, EncodeError> {
    let mut out = Vec::with_capacity(2 * ty.arrow_count() + 1);
    let mut queue = VecDeque::from([ty]);
    while let Some(t) = queue.pop_front() {
        match t {
            Type::Arrow(l, r) => {
                out.push(table.arrow_rule());
                queue.push_back(l);
                queue.push_back(r);
            }
            Type::Base(name) => out.push(
                table
                    .base_type_rule(name)
                    .ok_or_else(|| EncodeError::UnknownBaseType(name.clone()))?,
            ),
            Type::Error => return Err(EncodeError::ErrorType),
        }
    }
    Ok(RuleSequence(out))
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Greedy synthesis: the argmax rule of every row expands the front pending
/// `type` slot, and the children of an arrow are queued left to right.
///
/// Returns [`Type::Error`] when a rule cannot be applied at its position,
/// when rules remain after the type is complete, or when the rows (or an
/// `eos`) end while slots are still open. Rows after `eos` and `pad` rows
/// are ignored.
pub fn decode_greedy<R: AsRef<[f64]>>(rows: &[R], table: &RuleTable) -> Result<Type, DecodeError> {
    let expected = table.num_ids();
    let mut ids = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != expected {
            return Err(DecodeError::RowWidth {
                row: i,
                width: row.len(),
                expected,
            });
        }
        let mut best = 0;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(DecodeError::NonFinite { row: i });
            }
            if v > row[best] {
                best = j;
            }
        }
        ids.push(RuleId(best as u32));
    }
    Ok(decode_rule_ids(&ids, table))
}

enum Slot<'a> {
    Open,
    Base(&'a str),
    Arrow(usize, usize),
}

/// [`decode_greedy`] on already-chosen rule IDs.
pub fn decode_rule_ids(ids: &[RuleId], table: &RuleTable) -> Type {
    let mut slots = vec![Slot::Open];
    let mut open = VecDeque::from([0usize]);
    for &id in ids {
        match id {
            RuleId::PAD => continue,
            RuleId::EOS => break,
            _ => {}
        }
        let Some(front) = open.pop_front() else {
            return Type::Error;
        };
        match table.kind(id) {
            Some(RuleKind::Arrow) => {
                let (l, r) = (slots.len(), slots.len() + 1);
                slots.push(Slot::Open);
                slots.push(Slot::Open);
                slots[front] = Slot::Arrow(l, r);
                open.push_back(l);
                open.push_back(r);
            }
            Some(RuleKind::BaseType(name)) => slots[front] = Slot::Base(name),
            // Term rules, sos and none can never expand a type slot.
            _ => return Type::Error,
        }
    }
    if !open.is_empty() {
        return Type::Error;
    }
    assemble(&slots, 0)
}

fn assemble(slots: &[Slot], at: usize) -> Type {
    match &slots[at] {
        Slot::Base(name) => Type::base(*name),
        Slot::Arrow(l, r) => Type::arrow(assemble(slots, *l), assemble(slots, *r)),
        Slot::Open => unreachable!("all slots are filled once the queue is empty"),
    }
}

/// One-hot score rows for a rule sequence, with a trailing `eos` row.
pub fn one_hot_rows(rules: &RuleSequence, table: &RuleTable) -> Vec<Vec<f64>> {
    rules
        .ids()
        .iter()
        .chain(std::iter::once(&RuleId::EOS))
        .map(|id| {
            let mut row = vec![0.0; table.num_ids()];
            row[id.index()] = 1.0;
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::build_rule_table;
    use crate::syntax::TypingContext;

    fn table() -> RuleTable {
        build_rule_table(&TypingContext::global(), 32)
    }

    fn t() -> Type {
        Type::base("T")
    }

    #[test]
    fn encode_examples() {
        let table = table();
        let (a, b) = (table.arrow_rule(), table.base_type_rule("T").unwrap());
        assert_eq!(encode_type_rules(&t(), &table).unwrap().0, vec![b]);
        assert_eq!(
            encode_type_rules(&Type::arrow(t(), t()), &table).unwrap().0,
            vec![a, b, b]
        );
        assert_eq!(
            encode_type_rules(&Type::arrow(Type::arrow(t(), t()), t()), &table)
                .unwrap()
                .0,
            vec![a, a, b, b, b]
        );
        assert_eq!(encode_type_rules(&Type::Error, &table), Err(EncodeError::ErrorType));
    }

    #[test]
    fn decode_examples() {
        let table = table();
        let (a, b) = (table.arrow_rule(), table.base_type_rule("T").unwrap());
        assert_eq!(decode_rule_ids(&[a, b, b], &table), Type::arrow(t(), t()));
        assert_eq!(decode_rule_ids(&[b, b], &table), Type::Error);
        assert_eq!(decode_rule_ids(&[a, b, RuleId::EOS], &table), Type::Error);
        assert_eq!(decode_rule_ids(&[], &table), Type::Error);
        assert_eq!(decode_rule_ids(&[RuleId::EOS, b], &table), Type::Error);
        // Everything after eos is ignored, pads are skipped.
        assert_eq!(decode_rule_ids(&[b, RuleId::EOS, b, a], &table), t());
        assert_eq!(decode_rule_ids(&[RuleId::PAD, b, RuleId::PAD], &table), t());
        // Term rules and start markers are never applicable.
        assert_eq!(decode_rule_ids(&[table.lambda_rule()], &table), Type::Error);
        assert_eq!(decode_rule_ids(&[RuleId::SOS, b], &table), Type::Error);
        assert_eq!(decode_rule_ids(&[RuleId(999)], &table), Type::Error);
    }

    #[test]
    fn argmax_prefers_lowest_id_on_ties() {
        assert_eq!(argmax(&[0.5, 1.0, 1.0, 0.2]), 1);
        assert_eq!(argmax(&[3.0, 3.0]), 0);
    }

    #[test]
    fn decode_from_scores() {
        let table = table();
        let seq = encode_type_rules(&Type::arrow(t(), Type::arrow(t(), t())), &table).unwrap();
        let rows = one_hot_rows(&seq, &table);
        assert_eq!(
            decode_greedy(&rows, &table).unwrap(),
            Type::arrow(t(), Type::arrow(t(), t()))
        );
        let empty: Vec<Vec<f64>> = Vec::new();
        assert_eq!(decode_greedy(&empty, &table).unwrap(), Type::Error);
        assert_eq!(
            decode_greedy(&[vec![0.0; 3]], &table),
            Err(DecodeError::RowWidth {
                row: 0,
                width: 3,
                expected: table.num_ids()
            })
        );
        let mut nan = vec![0.0; table.num_ids()];
        nan[5] = f64::NAN;
        assert_eq!(
            decode_greedy(&[nan], &table),
            Err(DecodeError::NonFinite { row: 0 })
        );
    }
}
