//! Model-facing index sequences built from concrete syntax trees.
//!
//! The encoder side of an example is the BFS symbol sequence of the term's
//! CST framed by `<sos>`/`<eos>`, with per-position root paths and parent
//! features; the decoder side is the BFS rule sequence of the target type,
//! right-shifted behind `<sos>` for the input and closed by `<eos>` for the
//! target. Masks are `true` exactly at padding positions.

use std::collections::HashMap;

use serde::ser::{Serialize, Serializer};
use serde::Deserialize;
use thiserror::Error;

use crate::grammar::{
    encode_type_rules, Cst, CstError, EncodeError, RuleId, RuleSequence, RuleTable, Symbol,
};
use crate::syntax::{Term, Type};

/// Default length of a root path row.
pub const PATH_LEN: usize = 13;

pub const PAD: &str = "<pad>";
pub const SOS: &str = "<sos>";
pub const EOS: &str = "<eos>";
/// Parent symbol of the root and of framing positions.
pub const NO_PARENT: &str = "<none>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("symbol `{0}` is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("symbol `{0}` appears twice in the vocabulary")]
    DuplicateSymbol(String),
    #[error("concrete syntax trees are never empty")]
    EmptyCst,
    #[error("root path of length {len} exceeds the maximum {max}")]
    PathTooLong { len: usize, max: usize },
    #[error("rule sequences are never empty")]
    EmptyRules,
    #[error("cannot pad an empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Cst(#[from] CstError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// Bijection between symbols and indices. Index 0 is `<pad>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub const PAD: u32 = 0;
    pub const SOS: u32 = 1;
    pub const EOS: u32 = 2;
    pub const NO_PARENT: u32 = 3;

    /// Special markers, then nonterminal names and terminal lexemes in order
    /// of first appearance in the rule table.
    pub fn from_rule_table(table: &RuleTable) -> Result<Self, TokenizeError> {
        let mut vocab = Vocab {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for s in [PAD, SOS, EOS, NO_PARENT] {
            vocab.insert(s)?;
        }
        // A terminal spelled like a nonterminal or a special marker would
        // make the symbol-to-index map ambiguous.
        let mut terminals = std::collections::HashSet::new();
        for rule in table.rules() {
            let lhs = Symbol::NonTerminal(rule.lhs);
            for sym in std::iter::once(&lhs).chain(&rule.rhs) {
                let fresh = !vocab.index.contains_key(sym.text());
                let terminal = matches!(sym, Symbol::Terminal(_));
                if fresh {
                    vocab.insert(sym.text())?;
                    if terminal {
                        terminals.insert(sym.text().to_string());
                    }
                } else if terminal != terminals.contains(sym.text()) {
                    return Err(TokenizeError::DuplicateSymbol(sym.text().to_string()));
                }
            }
        }
        Ok(vocab)
    }

    fn insert(&mut self, s: &str) -> Result<(), TokenizeError> {
        if self.index.contains_key(s) {
            return Err(TokenizeError::DuplicateSymbol(s.to_string()));
        }
        self.index.insert(s.to_string(), self.symbols.len() as u32);
        self.symbols.push(s.to_string());
        Ok(())
    }

    pub fn get(&self, symbol: &str) -> Result<u32, TokenizeError> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| TokenizeError::UnknownSymbol(symbol.to_string()))
    }

    pub fn symbol(&self, index: u32) -> Option<&str> {
        self.symbols.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// The vocab file: a JSON object from symbol to index, in index order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocab serializes")
    }
}

impl Serialize for Vocab {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.symbols.iter().enumerate().map(|(i, s)| (s, i)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct EncodedExample {
    pub id: u64,
    pub enc_tokens: Vec<u32>,
    pub enc_mask: Vec<bool>,
    pub paths: Vec<Vec<u32>>,
    pub parent_symbol: Vec<u32>,
    pub parent_rule: Vec<RuleId>,
    pub dec_rules_in: Vec<RuleId>,
    pub dec_rules_target: Vec<RuleId>,
    pub dec_mask: Vec<bool>,
}

/// BFS symbols of `cst` framed by `<sos>`/`<eos>`, with an all-false mask.
pub fn encode_term_sequence(
    cst: &Cst,
    vocab: &Vocab,
) -> Result<(Vec<u32>, Vec<bool>), TokenizeError> {
    if cst.is_empty() {
        return Err(TokenizeError::EmptyCst);
    }
    let mut tokens = Vec::with_capacity(cst.len() + 2);
    tokens.push(Vocab::SOS);
    for node in cst.nodes() {
        tokens.push(vocab.get(node.symbol.text())?);
    }
    tokens.push(Vocab::EOS);
    let mask = vec![false; tokens.len()];
    Ok((tokens, mask))
}

/// One row per CST node in BFS order: the symbols from the root down to the
/// node, right-padded with `<pad>` to `path_len`.
pub fn extract_paths(
    cst: &Cst,
    vocab: &Vocab,
    path_len: usize,
) -> Result<Vec<Vec<u32>>, TokenizeError> {
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(cst.len());
    for (i, node) in cst.nodes().iter().enumerate() {
        let mut row = match node.parent {
            // Parents precede children in BFS order.
            Some(p) => rows[p].clone(),
            None => Vec::with_capacity(path_len),
        };
        let depth = row.iter().take_while(|&&s| s != Vocab::PAD).count();
        if depth + 1 > path_len {
            return Err(TokenizeError::PathTooLong {
                len: cst.path_to(i).len(),
                max: path_len,
            });
        }
        row.resize(path_len, Vocab::PAD);
        row[depth] = vocab.get(node.symbol.text())?;
        rows.push(row);
    }
    Ok(rows)
}

/// Per CST node in BFS order: the parent's symbol index and producing rule,
/// or the no-parent markers for the root.
pub fn extract_parent_ids(
    cst: &Cst,
    vocab: &Vocab,
) -> Result<(Vec<u32>, Vec<RuleId>), TokenizeError> {
    let mut symbols = Vec::with_capacity(cst.len());
    let mut rules = Vec::with_capacity(cst.len());
    for node in cst.nodes() {
        match node.parent {
            Some(p) => {
                let parent = cst.node(p);
                symbols.push(vocab.get(parent.symbol.text())?);
                rules.push(parent.rule.expect("parents are internal nodes"));
            }
            None => {
                symbols.push(Vocab::NO_PARENT);
                rules.push(RuleId::NONE);
            }
        }
    }
    Ok((symbols, rules))
}

/// `([sos] ++ rules, rules ++ [eos])`.
pub fn build_decoder_io(
    rules: &RuleSequence,
) -> Result<(Vec<RuleId>, Vec<RuleId>), TokenizeError> {
    if rules.is_empty() {
        return Err(TokenizeError::EmptyRules);
    }
    let mut input = Vec::with_capacity(rules.len() + 1);
    input.push(RuleId::SOS);
    input.extend_from_slice(rules.ids());
    let mut target = rules.ids().to_vec();
    target.push(RuleId::EOS);
    Ok((input, target))
}

/// Encodes one (term, type) pair into model inputs and decoder targets.
pub fn encode_example(
    id: u64,
    term: &Term,
    target: &Type,
    table: &RuleTable,
    vocab: &Vocab,
    path_len: usize,
) -> Result<EncodedExample, TokenizeError> {
    let cst = Cst::from_term(term, table)?;
    let (enc_tokens, enc_mask) = encode_term_sequence(&cst, vocab)?;

    let blank = vec![Vocab::PAD; path_len];
    let mut paths = Vec::with_capacity(enc_tokens.len());
    paths.push(blank.clone());
    paths.extend(extract_paths(&cst, vocab, path_len)?);
    paths.push(blank);

    let (symbols, rules) = extract_parent_ids(&cst, vocab)?;
    let mut parent_symbol = Vec::with_capacity(enc_tokens.len());
    parent_symbol.push(Vocab::NO_PARENT);
    parent_symbol.extend(symbols);
    parent_symbol.push(Vocab::NO_PARENT);
    let mut parent_rule = Vec::with_capacity(enc_tokens.len());
    parent_rule.push(RuleId::NONE);
    parent_rule.extend(rules);
    parent_rule.push(RuleId::NONE);

    let (dec_rules_in, dec_rules_target) = build_decoder_io(&encode_type_rules(target, table)?)?;
    let dec_mask = vec![false; dec_rules_in.len()];
    Ok(EncodedExample {
        id,
        enc_tokens,
        enc_mask,
        paths,
        parent_symbol,
        parent_rule,
        dec_rules_in,
        dec_rules_target,
        dec_mask,
    })
}

impl EncodedExample {
    /// The target rule sequence without framing or padding.
    pub fn target_rules(&self) -> RuleSequence {
        RuleSequence(
            self.dec_rules_target
                .iter()
                .copied()
                .filter(|&r| r != RuleId::PAD)
                .take_while(|&r| r != RuleId::EOS)
                .collect(),
        )
    }
}

/// A padded batch; row `b` of every field belongs to example `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<u64>,
    pub enc_tokens: Vec<Vec<u32>>,
    pub enc_mask: Vec<Vec<bool>>,
    pub paths: Vec<Vec<Vec<u32>>>,
    pub parent_symbol: Vec<Vec<u32>>,
    pub parent_rule: Vec<Vec<RuleId>>,
    pub dec_rules_in: Vec<Vec<RuleId>>,
    pub dec_rules_target: Vec<Vec<RuleId>>,
    pub dec_mask: Vec<Vec<bool>>,
}

fn padded<T: Clone>(v: &[T], len: usize, fill: T) -> Vec<T> {
    let mut out = v.to_vec();
    out.resize(len, fill);
    out
}

/// Pads encoder fields to the longest encoder sequence of the batch and
/// decoder fields to the longest decoder sequence.
pub fn pad_batch(examples: &[EncodedExample]) -> Result<Batch, TokenizeError> {
    let first = examples.first().ok_or(TokenizeError::EmptyBatch)?;
    let enc_len = examples.iter().map(|e| e.enc_tokens.len()).max().unwrap_or(0);
    let dec_len = examples.iter().map(|e| e.dec_rules_in.len()).max().unwrap_or(0);
    let path_len = first.paths.first().map_or(PATH_LEN, Vec::len);
    let blank = vec![Vocab::PAD; path_len];

    let mut batch = Batch {
        ids: Vec::with_capacity(examples.len()),
        enc_tokens: Vec::with_capacity(examples.len()),
        enc_mask: Vec::with_capacity(examples.len()),
        paths: Vec::with_capacity(examples.len()),
        parent_symbol: Vec::with_capacity(examples.len()),
        parent_rule: Vec::with_capacity(examples.len()),
        dec_rules_in: Vec::with_capacity(examples.len()),
        dec_rules_target: Vec::with_capacity(examples.len()),
        dec_mask: Vec::with_capacity(examples.len()),
    };
    for e in examples {
        batch.ids.push(e.id);
        batch.enc_tokens.push(padded(&e.enc_tokens, enc_len, Vocab::PAD));
        batch.enc_mask.push(padded(&e.enc_mask, enc_len, true));
        batch.paths.push(padded(&e.paths, enc_len, blank.clone()));
        batch.parent_symbol.push(padded(&e.parent_symbol, enc_len, Vocab::NO_PARENT));
        batch.parent_rule.push(padded(&e.parent_rule, enc_len, RuleId::NONE));
        batch.dec_rules_in.push(padded(&e.dec_rules_in, dec_len, RuleId::PAD));
        batch.dec_rules_target.push(padded(&e.dec_rules_target, dec_len, RuleId::PAD));
        batch.dec_mask.push(padded(&e.dec_mask, dec_len, true));
    }
    Ok(batch)
}
