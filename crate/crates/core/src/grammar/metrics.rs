use thiserror::Error;

use super::RuleId;
use crate::syntax::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("{preds} predictions for {targets} targets")]
    LengthMismatch { preds: usize, targets: usize },
    #[error("accuracy of an empty batch is undefined")]
    Empty,
}

/// Structural equality where the error type matches nothing, itself included.
pub fn exact_match(pred: &Type, target: &Type) -> bool {
    !pred.is_error() && !target.is_error() && pred == target
}

pub fn batch_accuracy(preds: &[Type], targets: &[Type]) -> Result<f64, MetricError> {
    if preds.len() != targets.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            targets: targets.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = preds
        .iter()
        .zip(targets)
        .filter(|(p, t)| exact_match(p, t))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Teacher-forced rule-sequence match: the predicted IDs up to the first
/// `eos` (pads dropped) equal the target rules.
pub fn sequence_exact_match(pred: &[RuleId], target: &[RuleId]) -> bool {
    let trimmed = pred
        .iter()
        .copied()
        .take_while(|&id| id != RuleId::EOS)
        .filter(|&id| id != RuleId::PAD);
    trimmed.eq(target.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t() -> Type {
        Type::base("T")
    }

    #[test]
    fn exact_match_examples() {
        let tt = Type::arrow(t(), t());
        assert!(exact_match(&tt, &tt.clone()));
        assert!(!exact_match(&Type::Error, &t()));
        assert!(!exact_match(&Type::Error, &Type::Error));
    }

    #[test]
    fn batch_accuracy_examples() {
        let preds = [t(), Type::arrow(t(), t())];
        assert_eq!(batch_accuracy(&preds, &[t(), t()]), Ok(0.5));
        assert_eq!(
            batch_accuracy(&preds, &[t()]),
            Err(MetricError::LengthMismatch {
                preds: 2,
                targets: 1
            })
        );
        assert_eq!(batch_accuracy(&[], &[]), Err(MetricError::Empty));
    }

    #[test]
    fn sequence_match_stops_at_eos() {
        let r = |i| RuleId(i);
        assert!(sequence_exact_match(&[r(39), r(40), r(40), RuleId::EOS, r(7)], &[r(39), r(40), r(40)]));
        assert!(!sequence_exact_match(&[r(39), r(40)], &[r(39), r(40), r(40)]));
    }
}
