//! File formats shared with downstream tools: dataset and encoded JSONL,
//! predictions, the manifest and the eval report.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::generator::{Example, GenConfig};
use crate::grammar::{decode_greedy, decode_rule_ids, DecodeError, RuleId, RuleTable};
use crate::syntax::{parse_term, parse_type, ParseError, Type, TypingContext};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| IoError::Json {
            line: i + 1,
            source,
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> Result<(), IoError> {
    for item in items {
        serde_json::to_writer(&mut writer, item).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// One line of a dataset file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub term: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub term_depth: usize,
    pub type_depth: usize,
}

impl From<&Example> for DatasetRecord {
    fn from(e: &Example) -> Self {
        Self {
            id: e.id,
            term: e.term.to_string(),
            ty: e.target_type.to_string(),
            term_depth: e.term_depth,
            type_depth: e.type_depth,
        }
    }
}

impl DatasetRecord {
    /// Parses the term and type back. `line` is only used in errors.
    pub fn to_example(&self, ctx: &TypingContext, line: usize) -> Result<Example, IoError> {
        let term = parse_term(&self.term, ctx).map_err(|source| IoError::Parse { line, source })?;
        let ty = parse_type(&self.ty, ctx).map_err(|source| IoError::Parse { line, source })?;
        Ok(Example {
            id: self.id,
            term,
            target_type: ty,
            term_depth: self.term_depth,
            type_depth: self.type_depth,
        })
    }
}

pub fn dataset_jsonl(examples: &[Example]) -> String {
    let mut buf = Vec::new();
    let records: Vec<DatasetRecord> = examples.iter().map(DatasetRecord::from).collect();
    write_jsonl(&mut buf, &records).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn read_dataset<R: BufRead>(reader: R, ctx: &TypingContext) -> Result<Vec<Example>, IoError> {
    let records: Vec<DatasetRecord> = read_jsonl(reader)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| r.to_example(ctx, i + 1))
        .collect()
}

/// One model output: per-step score rows, or already-chosen rule IDs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<u32>>,
}

impl PredictionRecord {
    /// Greedy decoding of whichever field is present. Exactly one of `rows`
    /// and `argmax` must be given.
    pub fn decode(&self, table: &RuleTable, line: usize) -> Result<Type, IoError> {
        match (&self.rows, &self.argmax) {
            (Some(rows), None) => decode_greedy(rows, table).map_err(|e: DecodeError| {
                IoError::Record {
                    line,
                    message: e.to_string(),
                }
            }),
            (None, Some(ids)) => {
                let ids: Vec<RuleId> = ids.iter().copied().map(RuleId).collect();
                Ok(decode_rule_ids(&ids, table))
            }
            _ => Err(IoError::Record {
                line,
                message: "expected exactly one of `rows` and `argmax`".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedRecord {
    pub id: u64,
    /// Printed type, `<error>` when the rules do not form a type.
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    pub total: usize,
    pub correct: usize,
    pub errors: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub config: GenConfig,
    pub examples: usize,
    pub splits: SplitCounts,
    pub path_len: usize,
    pub num_rule_ids: usize,
    pub rules_sha256: String,
    pub vocab_sha256: String,
    /// SHA-256 of every other file written next to the manifest.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::gen_dataset;
    use crate::grammar::build_rule_table;

    #[test]
    fn dataset_round_trip() {
        let cfg = GenConfig {
            n_examples: 50,
            ..GenConfig::default()
        };
        let data = gen_dataset(&cfg).unwrap();
        let text = dataset_jsonl(&data);
        assert_eq!(text.lines().count(), 50);
        let back = read_dataset(text.as_bytes(), &TypingContext::global()).unwrap();
        assert_eq!(back, data);
        assert!(text.starts_with("{\"id\":0,\"term\":"));
    }

    #[test]
    fn bad_lines_report_position() {
        let text = "{\"id\":0,\"term\":\"x\",\"type\":\"T\",\"term_depth\":1,\"type_depth\":1}\n\nnot json\n";
        match read_dataset(text.as_bytes(), &TypingContext::global()) {
            Err(IoError::Json { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "{\"id\":0,\"term\":\"[x\",\"type\":\"T\",\"term_depth\":1,\"type_depth\":1}\n";
        assert!(matches!(
            read_dataset(text.as_bytes(), &TypingContext::global()),
            Err(IoError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn predictions_decode() {
        let table = build_rule_table(&TypingContext::global(), 32);
        let p: PredictionRecord = serde_json::from_str(r#"{"id":3,"argmax":[39,40,40,2]}"#).unwrap();
        assert_eq!(p.decode(&table, 1).unwrap().to_string(), "T -> T");
        let p: PredictionRecord = serde_json::from_str(r#"{"id":3,"argmax":[4]}"#).unwrap();
        assert_eq!(p.decode(&table, 1).unwrap(), Type::Error);
        let p: PredictionRecord = serde_json::from_str(r#"{"id":3}"#).unwrap();
        assert!(p.decode(&table, 1).is_err());
        let p = PredictionRecord {
            id: 0,
            rows: Some(vec![vec![0.0; 5]]),
            argmax: None,
        };
        assert!(matches!(p.decode(&table, 7), Err(IoError::Record { line: 7, .. })));
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
