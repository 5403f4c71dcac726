//! A workbench for the simply typed lambda calculus.
//!
//! The crate generates well-typed synthetic datasets, infers types as a
//! ground-truth oracle, serializes terms and types into grammar-rule and
//! concrete-syntax token sequences for sequence models, decodes predicted
//! rule sequences back into types, and implements the Adam, RAdam and
//! Adafactor updates with their learning-rate schedules.

pub mod cli;
pub mod generator;
pub mod grammar;
pub mod infer;
pub mod io;
pub mod optim;
pub mod rename;
pub mod syntax;
pub mod tokenizer;

pub use grammar::{build_rule_table, Cst, RuleId, RuleSequence, RuleTable};
pub use infer::{infer_type, TypeError};
pub use rename::{bfs_rename, RenameError, MAX_BOUND_NAMES};
pub use syntax::{parse_term, parse_type, print_term, print_type, Term, Type, TypingContext};
