//! Collection statistics backing all probability estimates.

use std::collections::HashMap;

use thiserror::Error;

use crate::corpus::{Corpus, DiscourseSpan, Document};
use crate::Real;

/// Errors from statistics construction and snapshot I/O.
#[derive(Debug, Error)]
pub enum IndexError {
    /// Statistics were requested over a corpus with no tokens.
    #[error("cannot build statistics: {0}")]
    EmptyCorpus(String),
    /// A snapshot file was malformed.
    #[error("snapshot line {line}: {msg}")]
    Snapshot {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
}

const SNAPSHOT_MAGIC: &str = "rrank-stats";
const SNAPSHOT_VERSION: u32 = 1;

/// Term statistics over the whole collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectionStats {
    counts: HashMap<String, u64>,
    total_tokens: u64,
}

impl CollectionStats {
    /// Collection frequency of `term` (total occurrences across documents).
    pub fn collection_freq(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Total token count across documents.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Number of distinct terms.
    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    /// Collection model probability of `term`.
    ///
    /// Seen terms get `cf / total_tokens`; unseen terms get
    /// `1 / (total_tokens + vocabulary_size)` so Dirichlet scores stay
    /// finite.
    pub fn prob<R: Real>(&self, term: &str) -> R {
        let cf = self.collection_freq(term);
        if cf > 0 {
            R::from_u64(cf).unwrap() / R::from_u64(self.total_tokens).unwrap()
        } else {
            R::one() / R::from_u64(self.total_tokens + self.vocabulary_size() as u64).unwrap()
        }
    }
}

/// Builds exact collection statistics; deterministic regardless of document
/// order. Errors when the corpus has no documents or a document has no
/// tokens.
pub fn build_stats(corpus: &Corpus) -> Result<CollectionStats, IndexError> {
    if corpus.is_empty() {
        return Err(IndexError::EmptyCorpus("no documents".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for doc in corpus.docs() {
        if doc.is_empty() {
            return Err(IndexError::EmptyCorpus(format!(
                "document `{}` has no tokens",
                doc.id()
            )));
        }
        for (term, &c) in doc.term_counts() {
            *counts.entry(term.clone()).or_insert(0) += u64::from(c);
        }
        total += doc.len() as u64;
    }
    Ok(CollectionStats {
        counts,
        total_tokens: total,
    })
}

/// Occurrences of `term` in `doc`.
pub fn term_freq(doc: &Document, term: &str) -> u32 {
    doc.term_count(term)
}

/// The token slice covered by `span`. The span must be valid for `doc`.
pub fn span_text<'a>(doc: &'a Document, span: &DiscourseSpan) -> &'a [String] {
    &doc.tokens()[span.start..span.end]
}

/// Serializes statistics as a version-tagged snapshot: a header line with
/// the totals, then sorted `term<TAB>count` lines.
pub fn write_stats_snapshot(stats: &CollectionStats) -> String {
    let mut terms: Vec<(&str, u64)> = stats
        .counts
        .iter()
        .map(|(t, &c)| (t.as_str(), c))
        .collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let mut out = format!(
        "{SNAPSHOT_MAGIC}\t{SNAPSHOT_VERSION}\t{}\t{}\n",
        stats.total_tokens,
        stats.vocabulary_size()
    );
    for (t, c) in terms {
        out.push_str(&format!("{t}\t{c}\n"));
    }
    out
}

/// Parses a snapshot produced by [`write_stats_snapshot`], validating the
/// version tag and that the header totals match the term lines.
pub fn read_stats_snapshot(text: &str) -> Result<CollectionStats, IndexError> {
    let snap_err = |line: usize, msg: String| IndexError::Snapshot { line, msg };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| snap_err(1, "empty snapshot".into()))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 4 || fields[0] != SNAPSHOT_MAGIC {
        return Err(snap_err(1, "bad header".into()));
    }
    let version: u32 = fields[1]
        .parse()
        .map_err(|_| snap_err(1, format!("bad version `{}`", fields[1])))?;
    if version != SNAPSHOT_VERSION {
        return Err(snap_err(
            1,
            format!("unsupported snapshot version {version}"),
        ));
    }
    let total_tokens: u64 = fields[2]
        .parse()
        .map_err(|_| snap_err(1, format!("bad total `{}`", fields[2])))?;
    let vocab: usize = fields[3]
        .parse()
        .map_err(|_| snap_err(1, format!("bad vocabulary size `{}`", fields[3])))?;

    let mut counts = HashMap::new();
    let mut sum = 0u64;
    let mut prev: Option<String> = None;
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let (term, count) = line
            .split_once('\t')
            .ok_or_else(|| snap_err(line_no, "expected `term<TAB>count`".into()))?;
        let count: u64 = count
            .parse()
            .map_err(|_| snap_err(line_no, format!("bad count `{count}`")))?;
        if count == 0 {
            return Err(snap_err(line_no, format!("zero count for `{term}`")));
        }
        if let Some(p) = &prev {
            if p.as_str() >= term {
                return Err(snap_err(line_no, "terms out of order".into()));
            }
        }
        prev = Some(term.to_string());
        counts.insert(term.to_string(), count);
        sum += count;
    }
    if counts.len() != vocab {
        return Err(snap_err(
            1,
            format!("header says {vocab} terms, found {}", counts.len()),
        ));
    }
    if sum != total_tokens {
        return Err(snap_err(
            1,
            format!("header says {total_tokens} tokens, term counts sum to {sum}"),
        ));
    }
    Ok(CollectionStats {
        counts,
        total_tokens,
    })
}
