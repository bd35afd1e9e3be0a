//! Property tests for the format, scoring, and metric invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rrank_core::corpus::{
    read_run, tokenize, write_run, Document, Query, RelationLabel, RunEntry,
};
use rrank_core::discourse::{default_rules, heuristic_tag};
use rrank_core::evaluation::{
    average_precision, bpref, ndcg, paired_ttest, per_query_diff,
};
use rrank_core::index::{
    build_stats, read_stats_snapshot, write_stats_snapshot,
};
use rrank_core::scoring::{
    mixture_score, rerank, relation_weights, retrieve, RerankConfig, RerankMode,
};
use rrank_testkit::gen::{random_corpus, random_judged_ranking};
use rrank_testkit::oracles::{ap_oracle, bpref_oracle, ndcg_oracle};

// One query's worth of run entries with 6-decimal scores, descending.
fn run_block(qid: usize, docs: usize, seed: i64) -> Vec<RunEntry> {
    let mut scores: Vec<i64> = (0..docs)
        .map(|i| seed.wrapping_mul(i as i64 + 17).rem_euclid(2_000_000) - 1_000_000)
        .collect();
    scores.sort_unstable_by(|a, b| b.cmp(a));
    scores
        .iter()
        .enumerate()
        .map(|(i, &s)| RunEntry {
            query_id: format!("q{qid}"),
            doc_id: format!("d{i:03}"),
            rank: (i + 1) as u32,
            score: s as f64 / 1e6,
            tag: "t".into(),
        })
        .collect()
}

proptest! {
    #[test]
    fn run_round_trip_is_byte_identical(
        blocks in prop::collection::vec((1usize..30, 1usize..12, any::<i64>()), 1..6)
    ) {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (qid, docs, seed) in blocks {
            if seen.insert(qid) {
                entries.extend(run_block(qid, docs, seed));
            }
        }
        let text = write_run(&entries).unwrap();
        let parsed = read_run(&text).unwrap();
        prop_assert_eq!(&parsed, &entries);
        prop_assert_eq!(write_run(&parsed).unwrap(), text);
    }

    #[test]
    fn tokenizer_is_idempotent_on_its_own_output(raw in "\\PC{0,120}") {
        let once = tokenize(&raw);
        let again = tokenize(&once.join(" "));
        prop_assert_eq!(once, again);
    }

    #[test]
    fn tagged_spans_satisfy_document_invariants(
        words in prop::collection::vec("[a-z]{1,8}", 1..80),
        dots in prop::collection::vec(any::<bool>(), 1..80),
    ) {
        let raw: String = words
            .iter()
            .zip(dots.iter().chain(std::iter::repeat(&false)))
            .map(|(w, &dot)| if dot { format!("{w}. ") } else { format!("{w} ") })
            .collect();
        let doc = Document::from_raw("d", &raw).unwrap();
        let mut copy = doc.clone();
        for span in heuristic_tag(&doc, &default_rules()) {
            prop_assert!(span.start < span.end && span.end <= doc.len());
            copy.attach_span(span).unwrap();
        }
    }

    #[test]
    fn ttest_is_antisymmetric(
        vals in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20)
    ) {
        let a: BTreeMap<String, f64> = vals
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (format!("q{i}"), *x))
            .collect();
        let b: BTreeMap<String, f64> = vals
            .iter()
            .enumerate()
            .map(|(i, (_, y))| (format!("q{i}"), *y))
            .collect();
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        prop_assert_eq!(ab.t, -ba.t);
        prop_assert_eq!(ab.significant_95, ba.significant_95);
        prop_assert_eq!(ab.significant_99, ba.significant_99);
    }

    #[test]
    fn diff_output_is_sorted_permutation(
        vals in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20)
    ) {
        let a: BTreeMap<String, f64> = vals
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (format!("q{i}"), *x))
            .collect();
        let b: BTreeMap<String, f64> = vals
            .iter()
            .enumerate()
            .map(|(i, (_, y))| (format!("q{i}"), *y))
            .collect();
        let diffs = per_query_diff(&a, &b);
        prop_assert_eq!(diffs.len(), vals.len());
        for pair in diffs.windows(2) {
            prop_assert!(pair[0].0 <= pair[1].0);
        }
        let mut expected: Vec<f64> = vals.iter().map(|(x, y)| x - y).collect();
        let mut got: Vec<f64> = diffs.iter().map(|(d, _)| *d).collect();
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn metrics_match_oracles_and_stay_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, rels) = random_judged_ranking(&mut rng, 20, 5);
        let refs: Vec<&str> = ranked.iter().map(String::as_str).collect();
        for (lib, oracle) in [
            (average_precision::<f64>(&refs, &rels), ap_oracle(&refs, &rels)),
            (bpref::<f64>(&refs, &rels), bpref_oracle(&refs, &rels)),
            (ndcg::<f64>(&refs, &rels, None), ndcg_oracle(&refs, &rels, None)),
        ] {
            prop_assert_eq!(lib.is_some(), oracle.is_some());
            if let (Some(l), Some(o)) = (lib, oracle) {
                prop_assert!((l - o).abs() <= 1e-12, "{} vs {}", l, o);
                prop_assert!((0.0..=1.0).contains(&l));
            }
        }
    }

    #[test]
    fn metrics_are_invariant_to_document_renaming(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, rels) = random_judged_ranking(&mut rng, 15, 4);
        let rename = |d: &str| format!("XX-{d}");
        let renamed: Vec<String> = ranked.iter().map(|d| rename(d)).collect();
        let renamed_rels: BTreeMap<String, u32> =
            rels.iter().map(|(d, &g)| (rename(d), g)).collect();
        let refs: Vec<&str> = ranked.iter().map(String::as_str).collect();
        let renamed_refs: Vec<&str> = renamed.iter().map(String::as_str).collect();
        prop_assert_eq!(
            average_precision::<f64>(&refs, &rels),
            average_precision::<f64>(&renamed_refs, &renamed_rels)
        );
        prop_assert_eq!(
            bpref::<f64>(&refs, &rels),
            bpref::<f64>(&renamed_refs, &renamed_rels)
        );
        prop_assert_eq!(
            ndcg::<f64>(&refs, &rels, None),
            ndcg::<f64>(&renamed_refs, &renamed_rels, None)
        );
    }

    #[test]
    fn unjudged_insertion_lowers_ap_and_leaves_bpref(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (ranked, rels) = random_judged_ranking(&mut rng, 12, 4);
        let refs: Vec<&str> = ranked.iter().map(String::as_str).collect();
        // Need at least one retrieved relevant document.
        let first_rel = refs
            .iter()
            .position(|d| rels.get(*d).map(|&g| g >= 1).unwrap_or(false));
        prop_assume!(first_rel.is_some());
        let pos = first_rel.unwrap();

        let mut padded: Vec<&str> = refs.clone();
        padded.insert(pos, "unjudged-pad-a");
        padded.insert(pos, "unjudged-pad-b");

        let ap_before: f64 = average_precision(&refs, &rels).unwrap();
        let ap_after: f64 = average_precision(&padded, &rels).unwrap();
        prop_assert!(ap_after < ap_before);

        let bp_before: f64 = bpref(&refs, &rels).unwrap();
        let bp_after: f64 = bpref(&padded, &rels).unwrap();
        prop_assert_eq!(bp_before, bp_after);
    }

    #[test]
    fn scoring_is_finite_bounded_and_permutes(seed in any::<u64>(), kappa in 0.0f64..=1.0) {
        let corpus = random_corpus(seed, 12);
        let stats = build_stats(&corpus).unwrap();
        let q = Query::new("q", vec!["t00".into(), "t17".into()]).unwrap();
        let candidates: Vec<&Document> = corpus.docs().iter().collect();
        for mode in [
            RerankMode::SingleRelation(RelationLabel::Contrast),
            RerankMode::AllRelations,
        ] {
            let cfg = RerankConfig { kappa, mu: 1500.0, mode, span_weight: true };
            let ranked = rerank(&q, &candidates, &stats, &cfg).unwrap();
            prop_assert_eq!(ranked.len(), candidates.len());
            let mut ids: Vec<&str> = ranked.iter().map(|s| s.doc_id.as_str()).collect();
            ids.sort_unstable();
            let mut expected: Vec<&str> = corpus.docs().iter().map(|d| d.id()).collect();
            expected.sort_unstable();
            prop_assert_eq!(ids, expected);
            for s in &ranked {
                prop_assert!(s.final_score.is_finite());
                prop_assert!(s.final_score > 0.0 && s.final_score <= 1.0);
                prop_assert!(s.baseline_score > 0.0 && s.baseline_score <= 1.0);
            }
        }
    }

    #[test]
    fn kappa_zero_reranking_equals_baseline(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 15);
        let stats = build_stats(&corpus).unwrap();
        let q = Query::new("q", vec!["t03".into(), "t21".into(), "t05".into()]).unwrap();
        let baseline = retrieve(&q, corpus.docs(), &stats, 900.0, usize::MAX).unwrap();
        let candidates: Vec<&Document> = corpus.docs().iter().collect();
        for mode in [
            RerankMode::SingleRelation(RelationLabel::Elaboration),
            RerankMode::AllRelations,
        ] {
            let cfg = RerankConfig { kappa: 0.0, mu: 900.0, mode, span_weight: true };
            let ranked = rerank(&q, &candidates, &stats, &cfg).unwrap();
            for (r, b) in ranked.iter().zip(&baseline) {
                prop_assert_eq!(&r.doc_id, &b.doc_id);
                prop_assert_eq!(r.final_score, b.final_score);
            }
        }
    }

    #[test]
    fn mixture_is_monotone_in_kappa(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 8);
        let stats = build_stats(&corpus).unwrap();
        let q = Query::new("q", vec!["t01".into(), "t09".into()]).unwrap();
        let doc = &corpus.docs()[0];
        let psi: Vec<String> = vec!["t01".into(), "t30".into(), "t09".into()];
        let values: Vec<f64> = (0..=10)
            .map(|i| mixture_score(&q, doc, &psi, &stats, i as f64 / 10.0, 800.0).unwrap())
            .collect();
        let increasing = values[10] >= values[0];
        for pair in values.windows(2) {
            if increasing {
                prop_assert!(pair[1] >= pair[0] - 1e-15);
            } else {
                prop_assert!(pair[1] <= pair[0] + 1e-15);
            }
        }
    }

    #[test]
    fn relation_weights_normalize(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 10);
        let stats = build_stats(&corpus).unwrap();
        for doc in corpus.docs() {
            let weights = relation_weights(doc, &stats);
            if weights.is_empty() {
                prop_assert!(doc.spans().is_empty());
            } else {
                let sum: f64 = weights.iter().map(|(_, w)| w).sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {}", sum);
            }
        }
    }

    #[test]
    fn stats_snapshot_round_trips(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 10);
        let stats = build_stats(&corpus).unwrap();
        let text = write_stats_snapshot(&stats);
        let back = read_stats_snapshot(&text).unwrap();
        prop_assert_eq!(&back, &stats);
        prop_assert_eq!(write_stats_snapshot(&back), text);
    }

    #[test]
    fn stats_equal_fold_of_per_document_counts(seed in any::<u64>()) {
        let corpus = random_corpus(seed, 10);
        let stats = build_stats(&corpus).unwrap();
        // Brute-force recount over the concatenated token stream.
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        let mut total = 0u64;
        for doc in corpus.docs() {
            for t in doc.tokens() {
                *counts.entry(t.as_str()).or_insert(0) += 1;
                total += 1;
            }
        }
        prop_assert_eq!(stats.total_tokens(), total);
        prop_assert_eq!(stats.vocabulary_size(), counts.len());
        for (term, count) in counts {
            prop_assert_eq!(stats.collection_freq(term), count);
        }
        // Per-document frequencies sum to the document length.
        for doc in corpus.docs() {
            let sum: u32 = doc.term_counts().values().sum();
            prop_assert_eq!(sum as usize, doc.len());
        }
    }
}
