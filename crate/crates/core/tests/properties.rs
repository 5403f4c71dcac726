use proptest::prelude::*;

use stlc::generator::{gen_example, GenConfig};
use stlc::grammar::{decode_greedy, decode_rule_ids, encode_type_rules, one_hot_rows, Cst, RuleId};
use stlc::tokenizer::{encode_example, pad_batch, Vocab, PATH_LEN};
use stlc::{bfs_rename, build_rule_table, infer_type, parse_term, parse_type, Type, TypingContext};

fn example(seed: u64, id: u64, depth: usize) -> stlc::generator::Example {
    let cfg = GenConfig {
        seed,
        max_type_depth: depth,
        max_term_depth: depth,
        ..GenConfig::default()
    };
    gen_example(&cfg, &TypingContext::global(), id).unwrap()
}

fn arb_type() -> impl Strategy<Value = Type> {
    let leaf = Just(Type::base("T"));
    leaf.prop_recursive(7, 128, 2, |inner| {
        (inner.clone(), inner).prop_map(|(a, b)| Type::arrow(a, b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>(), id in 0u64..1000, depth in 1usize..=7) {
        let ex = example(seed, id, depth);
        let ctx = TypingContext::global();
        let text = ex.term.to_string();
        prop_assert_eq!(parse_term(&text, &ctx).unwrap(), ex.term.clone());
        prop_assert_eq!(parse_type(&ex.target_type.to_string(), &ctx).unwrap(), ex.target_type.clone());
        prop_assert_eq!(infer_type(&ex.term, &ctx).unwrap(), ex.target_type.clone());
        prop_assert_eq!(bfs_rename(&ex.term).unwrap(), ex.term);
    }

    #[test]
    fn type_codec_round_trips(ty in arb_type()) {
        let table = build_rule_table(&TypingContext::global(), 32);
        let rules = encode_type_rules(&ty, &table).unwrap();
        prop_assert_eq!(rules.len(), 2 * ty.arrow_count() + 1);
        prop_assert_eq!(decode_greedy(&one_hot_rows(&rules, &table), &table).unwrap(), ty.clone());
        prop_assert_eq!(decode_rule_ids(rules.ids(), &table), ty);
    }

    #[test]
    fn random_rule_ids_always_decode(ids in prop::collection::vec(0u32..41, 0..=32)) {
        let table = build_rule_table(&TypingContext::global(), 32);
        let ids: Vec<RuleId> = ids.into_iter().map(RuleId).collect();
        // Either a well-formed type or the error sentinel; never a panic.
        let ty = decode_rule_ids(&ids, &table);
        if !ty.is_error() {
            let again = encode_type_rules(&ty, &table).unwrap();
            prop_assert!(again.len() <= ids.len());
        }
    }

    #[test]
    fn encoded_examples_are_coherent(seed in any::<u64>(), ids in prop::collection::vec(0u64..500, 1..6)) {
        let table = build_rule_table(&TypingContext::global(), 32);
        let vocab = Vocab::from_rule_table(&table).unwrap();
        let mut encoded = Vec::new();
        for id in ids {
            let ex = example(seed, id, 6);
            let e = encode_example(id, &ex.term, &ex.target_type, &table, &vocab, PATH_LEN).unwrap();
            let n = e.enc_tokens.len();
            prop_assert_eq!(e.enc_mask.len(), n);
            prop_assert_eq!(e.paths.len(), n);
            prop_assert_eq!(e.parent_symbol.len(), n);
            prop_assert_eq!(e.parent_rule.len(), n);
            prop_assert_eq!(e.dec_rules_in.len(), e.dec_rules_target.len());
            prop_assert_eq!(e.dec_rules_in[0], RuleId::SOS);
            prop_assert_eq!(decode_rule_ids(e.target_rules().ids(), &table), ex.target_type.clone());

            let cst = Cst::from_term(&ex.term, &table).unwrap();
            for (i, node) in cst.nodes().iter().enumerate() {
                if let Some(parent) = node.parent {
                    prop_assert!(parent < i);
                }
                let row = &e.paths[i + 1];
                prop_assert_eq!(row.len(), PATH_LEN);
                prop_assert_eq!(row[0], e.enc_tokens[1]);
                let last = row.iter().rposition(|&s| s != Vocab::PAD).unwrap();
                prop_assert_eq!(row[last], e.enc_tokens[i + 1]);
                prop_assert_eq!(last + 1, cst.path_to(i).len());
            }
            encoded.push(e);
        }

        let batch = pad_batch(&encoded).unwrap();
        let width = encoded.iter().map(|e| e.enc_tokens.len()).max().unwrap();
        let dec_width = encoded.iter().map(|e| e.dec_rules_in.len()).max().unwrap();
        for b in 0..encoded.len() {
            prop_assert_eq!(batch.enc_tokens[b].len(), width);
            prop_assert_eq!(batch.paths[b].len(), width);
            prop_assert_eq!(batch.dec_rules_target[b].len(), dec_width);
            for (tok, m) in batch.enc_tokens[b].iter().zip(&batch.enc_mask[b]) {
                prop_assert_eq!(*tok == Vocab::PAD, *m);
            }
            for (r, m) in batch.dec_rules_in[b].iter().zip(&batch.dec_mask[b]) {
                prop_assert_eq!(*r == RuleId::PAD, *m);
            }
            for (j, m) in batch.enc_mask[b].iter().enumerate() {
                if *m {
                    prop_assert!(batch.paths[b][j].iter().all(|&s| s == Vocab::PAD));
                    prop_assert_eq!(batch.parent_symbol[b][j], Vocab::NO_PARENT);
                    prop_assert_eq!(batch.parent_rule[b][j], RuleId::NONE);
                }
            }
        }
    }
}
