//! Baseline Dirichlet query-likelihood ranking and the rhetorical-relation
//! mixture re-ranker.
//!
//! The baseline scores a document by the smoothed likelihood of its language
//! model generating the query. The re-ranker mixes that likelihood with the
//! likelihood of generating the query from the text covered by one of the
//! document's rhetorical relations, weighted by how representative that text
//! is of the document. All scores live in probability space as per-term
//! geometric means, so they are bounded in (0, 1] and comparable across
//! lengths.

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Document, Query, RelationLabel, RunEntry};
use crate::index::CollectionStats;
use crate::num::count;
use crate::{Real, Score};

/// Errors from scoring configuration and relation models.
#[derive(Debug, Error)]
pub enum ScoringError {
    /// A relation language model needs at least one token.
    #[error("relation text is empty")]
    EmptyRelationText,
    /// A configuration field is out of range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which relation evidence the re-ranker uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RerankMode {
    /// Score against one relation; documents lacking it keep their baseline.
    SingleRelation(RelationLabel),
    /// Sum over every relation present in the document, with weights
    /// normalized to 1.
    AllRelations,
}

/// Re-ranker parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RerankConfig {
    /// Mixture weight on the relation language model, in [0, 1].
    /// 0 disables relation evidence entirely.
    pub kappa: Score,
    /// Dirichlet smoothing parameter of the baseline, > 0.
    pub mu: Score,
    /// Relation evidence mode.
    pub mode: RerankMode,
    /// Multiply by the relation-given-document weight (the faithful
    /// product form). With `false`, single-relation mode uses the mixture
    /// alone and all-relations mode weights relations uniformly.
    pub span_weight: bool,
}

impl RerankConfig {
    /// Validates parameter ranges.
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(0.0..=1.0).contains(&self.kappa) || !self.kappa.is_finite() {
            return Err(ScoringError::InvalidConfig(format!(
                "kappa {} not in [0, 1]",
                self.kappa
            )));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(ScoringError::InvalidConfig(format!(
                "mu {} must be > 0",
                self.mu
            )));
        }
        Ok(())
    }
}

/// A scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    /// Document identifier.
    pub doc_id: String,
    /// Normalized baseline likelihood.
    pub baseline_score: Score,
    /// Score the ranking is sorted by.
    pub final_score: Score,
}

/// Log query likelihood under the document model with Dirichlet smoothing:
/// `sum_i ln((f(q_i, d) + mu * p(q_i | C)) / (|d| + mu))`.
///
/// Always finite: unseen terms fall back to the collection model, which is
/// itself floored for out-of-vocabulary terms.
pub fn dirichlet_log_likelihood<R: Real>(
    query: &Query,
    doc: &Document,
    stats: &CollectionStats,
    mu: R,
) -> R {
    let doc_len = count::<R>(doc.len());
    let mut total = R::zero();
    for term in &query.terms {
        let tf = R::from_u32(doc.term_count(term)).unwrap();
        let p_c: R = stats.prob(term);
        total += ((tf + mu * p_c) / (doc_len + mu)).ln();
    }
    total
}

/// Per-term geometric mean of a log likelihood: `exp(ll / length)`.
///
/// Strictly monotone in `ll` for a fixed length, so it preserves rankings
/// while mapping into (0, 1].
pub fn normalized_likelihood<R: Real>(log_likelihood: R, length: usize) -> R {
    (log_likelihood / count::<R>(length.max(1))).exp()
}

/// Log likelihood of the query under the relation-text language model with
/// add-one smoothing over the collection vocabulary:
/// `sum_i ln((f(q_i, psi) + 1) / (|psi| + V))`.
pub fn log_prob_query_given_relation<R: Real>(
    query: &Query,
    relation_tokens: &[String],
    stats: &CollectionStats,
) -> Result<R, ScoringError> {
    if relation_tokens.is_empty() {
        return Err(ScoringError::EmptyRelationText);
    }
    let denom = count::<R>(relation_tokens.len()) + count::<R>(stats.vocabulary_size());
    let mut total = R::zero();
    for term in &query.terms {
        let f = count::<R>(relation_tokens.iter().filter(|t| *t == term).count());
        total += ((f + R::one()) / denom).ln();
    }
    Ok(total)
}

/// Log likelihood of the relation text under the document model with
/// add-one smoothing: `sum_j ln((f(psi_j, d) + 1) / (|d| + V))`.
///
/// Callers normalize this to a per-token geometric mean before using it as
/// a weight.
pub fn log_prob_relation_given_doc<R: Real>(
    relation_tokens: &[String],
    doc: &Document,
    stats: &CollectionStats,
) -> Result<R, ScoringError> {
    if relation_tokens.is_empty() {
        return Err(ScoringError::EmptyRelationText);
    }
    let denom = count::<R>(doc.len()) + count::<R>(stats.vocabulary_size());
    let mut total = R::zero();
    for token in relation_tokens {
        let f = R::from_u32(doc.term_count(token)).unwrap();
        total += ((f + R::one()) / denom).ln();
    }
    Ok(total)
}

/// Mixture of the baseline and relation likelihoods in probability space:
/// `(1 - kappa) * p(q|d) + kappa * p(q|psi)`, both components normalized to
/// per-term geometric means. Result is in (0, 1].
pub fn mixture_score<R: Real>(
    query: &Query,
    doc: &Document,
    relation_tokens: &[String],
    stats: &CollectionStats,
    kappa: R,
    mu: R,
) -> Result<R, ScoringError> {
    let base = normalized_likelihood(dirichlet_log_likelihood(query, doc, stats, mu), query.terms.len());
    let rel = normalized_likelihood(
        log_prob_query_given_relation(query, relation_tokens, stats)?,
        query.terms.len(),
    );
    Ok((R::one() - kappa) * base + kappa * rel)
}

/// Normalized relation weights for the labels present in `doc`, in label
/// order. Weights are per-token geometric means of the relation-given-
/// document likelihood, scaled to sum to 1. Empty when the document has no
/// spans.
pub fn relation_weights(
    doc: &Document,
    stats: &CollectionStats,
) -> Vec<(RelationLabel, Score)> {
    let labels = doc.relations_present();
    let mut weights: Vec<(RelationLabel, Score)> = labels
        .into_iter()
        .map(|label| {
            let tokens = doc.relation_text(label);
            let w = normalized_likelihood(
                log_prob_relation_given_doc::<Score>(&tokens, doc, stats)
                    .expect("present label has tokens"),
                tokens.len(),
            );
            (label, w)
        })
        .collect();
    let total: Score = weights.iter().map(|(_, w)| w).sum();
    if total > 0.0 {
        for (_, w) in &mut weights {
            *w /= total;
        }
    }
    weights
}

fn score_candidate(
    query: &Query,
    doc: &Document,
    stats: &CollectionStats,
    cfg: &RerankConfig,
) -> ScoredDoc {
    let base = normalized_likelihood(
        dirichlet_log_likelihood::<Score>(query, doc, stats, cfg.mu),
        query.terms.len(),
    );
    // kappa = 0 means no relation evidence: keep the baseline exactly so the
    // ranking is reproduced bit for bit, span weights included out.
    let final_score = if cfg.kappa == 0.0 {
        base
    } else {
        match cfg.mode {
            RerankMode::SingleRelation(label) => {
                let tokens = doc.relation_text(label);
                if tokens.is_empty() {
                    base
                } else {
                    let mix = mixture_score::<Score>(query, doc, &tokens, stats, cfg.kappa, cfg.mu)
                        .expect("non-empty relation text");
                    if cfg.span_weight {
                        let w = normalized_likelihood(
                            log_prob_relation_given_doc::<Score>(&tokens, doc, stats)
                                .expect("non-empty relation text"),
                            tokens.len(),
                        );
                        mix * w
                    } else {
                        mix
                    }
                }
            }
            RerankMode::AllRelations => {
                let labels = doc.relations_present();
                if labels.is_empty() {
                    base
                } else {
                    let uniform = 1.0 / labels.len() as Score;
                    let weights = relation_weights(doc, stats);
                    weights
                        .iter()
                        .map(|(label, w)| {
                            let tokens = doc.relation_text(*label);
                            let mix = mixture_score::<Score>(
                                query, doc, &tokens, stats, cfg.kappa, cfg.mu,
                            )
                            .expect("present label has tokens");
                            mix * if cfg.span_weight { *w } else { uniform }
                        })
                        .sum()
                }
            }
        }
    };
    ScoredDoc {
        doc_id: doc.id().to_string(),
        baseline_score: base,
        final_score,
    }
}

fn sort_ranking(scored: &mut [ScoredDoc]) {
    scored.sort_by(|a, b| {
        b.final_score
            .total_cmp(&a.final_score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
}

/// Re-scores `candidates` for `query` and returns them sorted by final
/// score (ties broken by ascending document id).
pub fn rerank(
    query: &Query,
    candidates: &[&Document],
    stats: &CollectionStats,
    cfg: &RerankConfig,
) -> Result<Vec<ScoredDoc>, ScoringError> {
    cfg.validate()?;
    let mut scored: Vec<ScoredDoc> = candidates
        .par_iter()
        .map(|doc| score_candidate(query, doc, stats, cfg))
        .collect();
    sort_ranking(&mut scored);
    Ok(scored)
}

/// Exhaustive baseline retrieval: every document scored by the normalized
/// Dirichlet likelihood, top `depth` returned.
pub fn retrieve(
    query: &Query,
    docs: &[Document],
    stats: &CollectionStats,
    mu: Score,
    depth: usize,
) -> Result<Vec<ScoredDoc>, ScoringError> {
    if !(mu > 0.0) {
        return Err(ScoringError::InvalidConfig(format!("mu {mu} must be > 0")));
    }
    let mut scored: Vec<ScoredDoc> = docs
        .par_iter()
        .map(|doc| {
            let base = normalized_likelihood(
                dirichlet_log_likelihood::<Score>(query, doc, stats, mu),
                query.terms.len(),
            );
            ScoredDoc {
                doc_id: doc.id().to_string(),
                baseline_score: base,
                final_score: base,
            }
        })
        .collect();
    sort_ranking(&mut scored);
    scored.truncate(depth);
    Ok(scored)
}

/// Converts a sorted scoring into run entries for `query_id` with `tag`.
pub fn run_entries(query_id: &str, scored: &[ScoredDoc], tag: &str) -> Vec<RunEntry> {
    scored
        .iter()
        .enumerate()
        .map(|(i, s)| RunEntry {
            query_id: query_id.to_string(),
            doc_id: s.doc_id.clone(),
            rank: (i + 1) as u32,
            score: s.final_score,
            tag: tag.to_string(),
        })
        .collect()
}
