//! Deterministic synthetic corpora with known optimal parameters.
//!
//! Both planted corpora use equal-length documents and spans whose tokens
//! all repeat the same number of times, so baseline rankings depend only on
//! query-term frequencies and the relation weights cancel between
//! documents. That makes the kappa value at which a relevant document
//! overtakes a decoy an exact, hand-checkable function of the decoy's
//! term frequency, the smoothing parameter, and the vocabulary size.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrank_core::corpus::{Corpus, DiscourseSpan, Document, Judgments, Query, RelationLabel};

/// A generated corpus with its queries and judgments.
pub struct Planted {
    /// Documents with spans attached.
    pub corpus: Corpus,
    /// One query per topic, two unique terms each.
    pub queries: Vec<Query>,
    /// Relevant documents graded 1-2, decoys judged 0.
    pub judgments: Judgments,
}

/// All documents share this length.
pub const DOC_LEN: usize = 52;
/// The relation whose spans carry the query terms.
pub const SEEDED_RELATION: RelationLabel = RelationLabel::Background;
/// Decoy query-term frequencies for the monotone corpus; the largest one
/// only flips below the relevant documents at the top of the kappa grid.
pub const MONOTONE_DECOY_TFS: [u32; 6] = [3, 4, 5, 6, 8, 16];

fn filler(rng: &mut ChaCha8Rng) -> String {
    format!("w{:03}", rng.gen_range(0..120))
}

fn push_fillers(tokens: &mut Vec<String>, rng: &mut ChaCha8Rng, n: usize) {
    for _ in 0..n {
        tokens.push(filler(rng));
    }
}

struct DocSpec {
    id: String,
    tokens: Vec<String>,
    spans: Vec<DiscourseSpan>,
}

fn build(spec: DocSpec) -> Document {
    assert_eq!(spec.tokens.len(), DOC_LEN, "doc {} length", spec.id);
    let mut doc = Document::new(spec.id, spec.tokens).unwrap();
    for s in spec.spans {
        doc.attach_span(s).unwrap();
    }
    doc
}

fn side_spans() -> Vec<DiscourseSpan> {
    vec![
        DiscourseSpan {
            relation: RelationLabel::Elaboration,
            start: 0,
            end: 4,
        },
        DiscourseSpan {
            relation: RelationLabel::Temporal,
            start: DOC_LEN - 4,
            end: DOC_LEN,
        },
    ]
}

fn seeded_span() -> DiscourseSpan {
    DiscourseSpan {
        relation: SEEDED_RELATION,
        start: 8,
        end: 16,
    }
}

// Span layout shared by relevant and spam documents: the query terms twice
// each plus a repeated token pair, so every span token occurs exactly twice
// in the document.
fn seeded_span_tokens(qa: &str, qb: &str, pad: &str) -> Vec<String> {
    vec![
        qa.into(),
        qb.into(),
        qa.into(),
        qb.into(),
        format!("{pad}x"),
        format!("{pad}y"),
        format!("{pad}x"),
        format!("{pad}y"),
    ]
}

// Decoy span: four tokens repeated twice each. Shared across documents of
// the same frequency class to keep the vocabulary small.
fn decoy_span_tokens(class: &str) -> Vec<String> {
    let mut v = Vec::with_capacity(8);
    for i in 0..4 {
        v.push(format!("u{class}{i}"));
        v.push(format!("u{class}{i}"));
    }
    v
}

/// Corpus where re-ranking with the seeded relation strictly improves with
/// kappa: every query has four relevant documents whose terms sit inside
/// seeded-relation spans, one judged-0 twin that ties them and caps average
/// precision below 1, and six decoys of increasing query-term frequency.
/// The hardest decoy (tf 16) only drops below the relevant documents at
/// kappa 0.9 once mu is large enough for the relation evidence to matter.
pub fn planted_monotone(seed: u64, n_queries: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    let mut judgments = Judgments::new();

    for q in 0..n_queries {
        let qid = format!("{:03}", q + 1);
        let qa = format!("qa{qid}");
        let qb = format!("qb{qid}");
        queries.push(Query::new(qid.clone(), vec![qa.clone(), qb.clone()]).unwrap());

        // Four relevant documents.
        for k in 0..4 {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(seeded_span_tokens(&qa, &qb, &format!("s{qid}")));
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 16);
            let id = format!("{qid}-r{k}");
            judgments.insert(&qid, &id, if k % 3 == 0 { 2 } else { 1 });
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }

        // A judged-0 twin with identical statistics; its id sorts before
        // the relevant documents, so ties keep it right above them.
        {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(seeded_span_tokens(&qa, &qb, &format!("z{qid}")));
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 16);
            let id = format!("{qid}-a-twin");
            judgments.insert(&qid, &id, 0);
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }

        // Decoys: query terms outside the span, frequency per class.
        for &tf in &MONOTONE_DECOY_TFS {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(decoy_span_tokens(&format!("c{tf:02}")));
            for _ in 0..tf {
                tokens.push(qa.clone());
                tokens.push(qb.clone());
            }
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 16 - 2 * tf as usize);
            let id = format!("{qid}-d{tf:02}");
            judgments.insert(&qid, &id, 0);
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }
    }

    Planted {
        corpus: Corpus::from_documents(docs).unwrap(),
        queries,
        judgments,
    }
}

/// Pads a monotone corpus with span-free filler documents until it holds
/// exactly `total` documents.
pub fn planted_monotone_padded(seed: u64, n_queries: usize, total: usize) -> Planted {
    let mut planted = planted_monotone(seed, n_queries);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0deb);
    let mut docs: Vec<Document> = planted.corpus.docs().to_vec();
    assert!(docs.len() <= total);
    let mut i = 0;
    while docs.len() < total {
        let mut tokens = Vec::with_capacity(DOC_LEN);
        push_fillers(&mut tokens, &mut rng, 8);
        tokens.extend(decoy_span_tokens("pad"));
        push_fillers(&mut tokens, &mut rng, DOC_LEN - 16);
        let mut doc = Document::new(format!("zzz-pad{i}"), tokens).unwrap();
        for s in side_spans() {
            doc.attach_span(s).unwrap();
        }
        doc.attach_span(seeded_span()).unwrap();
        docs.push(doc);
        i += 1;
    }
    planted.corpus = Corpus::from_documents(docs).unwrap();
    planted
}

/// Corpus where kappa = 0.5 strictly dominates 0.1/0.3/0.7/0.9 at mu =
/// 1000: low kappa leaves text-matching decoys above the span-relevant
/// documents, high kappa pushes span-spamming decoys above the
/// text-relevant documents.
pub fn planted_peak(seed: u64, n_queries: usize) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::new();
    let mut queries = Vec::new();
    let mut judgments = Judgments::new();

    for q in 0..n_queries {
        let qid = format!("{:03}", q + 1);
        let qa = format!("qa{qid}");
        let qb = format!("qb{qid}");
        queries.push(Query::new(qid.clone(), vec![qa.clone(), qb.clone()]).unwrap());

        // Relevant, terms inside the span (tf 2).
        for k in 0..2 {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(seeded_span_tokens(&qa, &qb, &format!("s{qid}")));
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 16);
            let id = format!("{qid}-rspan{k}");
            judgments.insert(&qid, &id, if k == 0 { 2 } else { 1 });
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }

        // Relevant, terms outside the span (tf 5).
        for k in 0..2 {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(decoy_span_tokens(&format!("t{k}")));
            for _ in 0..5 {
                tokens.push(qa.clone());
                tokens.push(qb.clone());
            }
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 26);
            let id = format!("{qid}-rtext{k}");
            judgments.insert(&qid, &id, 1);
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }

        // Decoys matching on text only (tf 4).
        for k in 0..3 {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            tokens.extend(decoy_span_tokens(&format!("p{k}")));
            for _ in 0..4 {
                tokens.push(qa.clone());
                tokens.push(qb.clone());
            }
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 24);
            let id = format!("{qid}-dtext{k}");
            judgments.insert(&qid, &id, 0);
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }

        // Decoys spamming the span: the terms appear once each inside it
        // and nowhere else, so their relation evidence beats the
        // text-relevant documents only once kappa runs high.
        for k in 0..3 {
            let mut tokens = Vec::with_capacity(DOC_LEN);
            push_fillers(&mut tokens, &mut rng, 8);
            let v = |i: usize| format!("v{qid}{k}{i}");
            tokens.extend([
                qa.clone(),
                qb.clone(),
                v(1),
                v(1),
                v(2),
                v(2),
                v(3),
                v(3),
            ]);
            push_fillers(&mut tokens, &mut rng, DOC_LEN - 16);
            let id = format!("{qid}-dspan{k}");
            judgments.insert(&qid, &id, 0);
            let mut spans = side_spans();
            spans.push(seeded_span());
            docs.push(build(DocSpec { id, tokens, spans }));
        }
    }

    Planted {
        corpus: Corpus::from_documents(docs).unwrap(),
        queries,
        judgments,
    }
}

/// Random documents with random valid spans, for fuzzing invariants.
pub fn random_corpus(seed: u64, n_docs: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let len = rng.gen_range(4..60);
        let tokens: Vec<String> = (0..len)
            .map(|_| format!("t{:02}", rng.gen_range(0..40)))
            .collect();
        let mut doc = Document::new(format!("doc{d:04}"), tokens).unwrap();
        for _ in 0..rng.gen_range(0..5) {
            let start = rng.gen_range(0..len);
            let end = rng.gen_range(start + 1..=len);
            let relation = RelationLabel::ALL[rng.gen_range(0..15)];
            // Skip same-label overlaps rather than engineering around them.
            let span = DiscourseSpan {
                relation,
                start,
                end,
            };
            let _ = doc.attach_span(span);
        }
        docs.push(doc);
    }
    Corpus::from_documents(docs).unwrap()
}

/// A random ranked list plus judgments: up to `max_docs` retrieved
/// documents, up to `max_relevant` relevant ones (some possibly
/// unretrieved), a sprinkle of judged-0 and unjudged documents.
pub fn random_judged_ranking(
    rng: &mut ChaCha8Rng,
    max_docs: usize,
    max_relevant: usize,
) -> (Vec<String>, BTreeMap<String, u32>) {
    let n_docs = rng.gen_range(1..=max_docs);
    let mut ranked: Vec<String> = (0..n_docs).map(|i| format!("d{i:02}")).collect();
    ranked.shuffle(rng);

    let mut rels = BTreeMap::new();
    let n_rel = rng.gen_range(1..=max_relevant);
    for r in 0..n_rel {
        // Relevant docs may or may not be retrieved.
        let id = if rng.gen_bool(0.8) && n_docs > 0 {
            ranked[rng.gen_range(0..n_docs)].clone()
        } else {
            format!("miss{r}")
        };
        rels.insert(id, rng.gen_range(1..=3));
    }
    // Judged non-relevant and unjudged mix.
    for doc in &ranked {
        if !rels.contains_key(doc) && rng.gen_bool(0.4) {
            rels.insert(doc.clone(), 0);
        }
    }
    (ranked, rels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_corpus_shape() {
        let p = planted_monotone(1, 3);
        assert_eq!(p.corpus.len(), 33);
        assert_eq!(p.queries.len(), 3);
        for doc in p.corpus.docs() {
            assert_eq!(doc.len(), DOC_LEN);
            assert!(doc
                .spans()
                .iter()
                .any(|s| s.relation == SEEDED_RELATION));
        }
        // Twin and relevant docs tie exactly: same term stats.
        let twin = p.corpus.get("001-a-twin").unwrap();
        let rel = p.corpus.get("001-r0").unwrap();
        assert_eq!(twin.term_count("qa001"), rel.term_count("qa001"));
        assert_eq!(p.judgments.relevant_count("001"), 4);
    }

    #[test]
    fn padded_corpus_reaches_exact_size() {
        let p = planted_monotone_padded(1, 3, 40);
        assert_eq!(p.corpus.len(), 40);
    }

    #[test]
    fn random_corpus_spans_are_valid() {
        let corpus = random_corpus(7, 50);
        for doc in corpus.docs() {
            for s in doc.spans() {
                assert!(s.start < s.end && s.end <= doc.len());
            }
        }
    }
}
