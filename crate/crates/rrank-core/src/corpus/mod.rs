//! Canonical data model and line-oriented readers/writers for queries,
//! judgments, run files, raw documents, and discourse annotations.
//!
//! Everything here is immutable after load and safe to share across threads;
//! parsing itself is single-threaded per file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

mod formats;

pub use formats::{
    load_corpus, parse_annotations, parse_docs_tsv, parse_qrels, parse_topics, read_run,
    tokenize, tokenize_flagged, write_annotations, write_run, AnnotationReport,
};

/// Errors produced while parsing or validating corpus data.
#[derive(Debug, Error)]
pub enum CorpusError {
    /// A line of an input file violated its format.
    #[error("line {line}: {msg}")]
    Format {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
    /// A type invariant was violated outside of file parsing.
    #[error("{0}")]
    Invalid(String),
    /// Two documents share an identifier.
    #[error("duplicate document id `{0}`")]
    DuplicateDocument(String),
    /// Filesystem trouble while loading a corpus.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_err(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Format {
        line,
        msg: msg.into(),
    }
}

/// The closed taxonomy of rhetorical relations.
///
/// Variant order is the lexicographic order of the textual labels, so the
/// derived `Ord` doubles as the tie-break order used elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[allow(missing_docs)]
pub enum RelationLabel {
    Attribution,
    Background,
    CauseResult,
    Comparison,
    Condition,
    Consequence,
    Contrast,
    Elaboration,
    Enablement,
    Evaluation,
    Explanation,
    MannerMeans,
    Summary,
    Temporal,
    TopicComment,
}

impl RelationLabel {
    /// All 15 relations in label order.
    pub const ALL: [RelationLabel; 15] = [
        RelationLabel::Attribution,
        RelationLabel::Background,
        RelationLabel::CauseResult,
        RelationLabel::Comparison,
        RelationLabel::Condition,
        RelationLabel::Consequence,
        RelationLabel::Contrast,
        RelationLabel::Elaboration,
        RelationLabel::Enablement,
        RelationLabel::Evaluation,
        RelationLabel::Explanation,
        RelationLabel::MannerMeans,
        RelationLabel::Summary,
        RelationLabel::Temporal,
        RelationLabel::TopicComment,
    ];

    /// The textual label, e.g. `"cause-result"`.
    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::Attribution => "attribution",
            RelationLabel::Background => "background",
            RelationLabel::CauseResult => "cause-result",
            RelationLabel::Comparison => "comparison",
            RelationLabel::Condition => "condition",
            RelationLabel::Consequence => "consequence",
            RelationLabel::Contrast => "contrast",
            RelationLabel::Elaboration => "elaboration",
            RelationLabel::Enablement => "enablement",
            RelationLabel::Evaluation => "evaluation",
            RelationLabel::Explanation => "explanation",
            RelationLabel::MannerMeans => "manner-means",
            RelationLabel::Summary => "summary",
            RelationLabel::Temporal => "temporal",
            RelationLabel::TopicComment => "topic-comment",
        }
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationLabel::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| CorpusError::Invalid(format!("unknown relation label `{s}`")))
    }
}

/// A tokenized query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Query identifier, non-empty.
    pub id: String,
    /// Canonicalized terms, non-empty.
    pub terms: Vec<String>,
}

impl Query {
    /// Builds a query, rejecting empty ids or term lists.
    pub fn new(id: impl Into<String>, terms: Vec<String>) -> Result<Self, CorpusError> {
        let id = id.into();
        if id.is_empty() {
            return Err(CorpusError::Invalid("query id must be non-empty".into()));
        }
        if terms.is_empty() {
            return Err(CorpusError::Invalid(format!(
                "query `{id}` has no terms after tokenization"
            )));
        }
        Ok(Query { id, terms })
    }
}

/// A contiguous token range carrying one relation label.
///
/// `start` is inclusive, `end` exclusive, both in token positions of the
/// owning document. Spans of the same label within a document must be
/// pairwise non-overlapping; spans of different labels may overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DiscourseSpan {
    /// The relation this span realizes.
    pub relation: RelationLabel,
    /// First token covered.
    pub start: usize,
    /// One past the last token covered.
    pub end: usize,
}

impl DiscourseSpan {
    /// Checks `0 <= start < end <= doc_len`.
    pub fn validate(&self, doc_len: usize) -> Result<(), CorpusError> {
        if self.start >= self.end {
            return Err(CorpusError::Invalid(format!(
                "span {}..{} is empty or inverted",
                self.start, self.end
            )));
        }
        if self.end > doc_len {
            return Err(CorpusError::Invalid(format!(
                "span {}..{} exceeds document length {doc_len}",
                self.start, self.end
            )));
        }
        Ok(())
    }

    /// Token-range intersection test.
    pub fn overlaps(&self, other: &DiscourseSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// A tokenized document with optional discourse spans attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    id: String,
    tokens: Vec<String>,
    sentence_ends: Vec<bool>,
    spans: Vec<DiscourseSpan>,
    term_counts: HashMap<String, u32>,
}

impl Document {
    /// Builds a document from pre-tokenized text with no sentence flags.
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Result<Self, CorpusError> {
        let flags = vec![false; tokens.len()];
        Document::with_sentence_ends(id, tokens, flags)
    }

    /// Builds a document from raw text, recording sentence-end flags.
    pub fn from_raw(id: impl Into<String>, raw: &str) -> Result<Self, CorpusError> {
        let (tokens, flags) = tokenize_flagged(raw);
        Document::with_sentence_ends(id, tokens, flags)
    }

    /// Builds a document from tokens plus explicit sentence-end flags.
    pub fn with_sentence_ends(
        id: impl Into<String>,
        tokens: Vec<String>,
        sentence_ends: Vec<bool>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if id.is_empty() {
            return Err(CorpusError::Invalid("document id must be non-empty".into()));
        }
        if sentence_ends.len() != tokens.len() {
            return Err(CorpusError::Invalid(format!(
                "document `{id}`: {} sentence flags for {} tokens",
                sentence_ends.len(),
                tokens.len()
            )));
        }
        let mut term_counts = HashMap::new();
        for t in &tokens {
            *term_counts.entry(t.clone()).or_insert(0) += 1;
        }
        Ok(Document {
            id,
            tokens,
            sentence_ends,
            spans: Vec::new(),
            term_counts,
        })
    }

    /// Document identifier.
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Tokens in document order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Document length in tokens.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when the document has no tokens.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sentence-end flag per token (true when the token was terminated by
    /// `.`, `!` or `?` in the raw text).
    pub fn sentence_ends(&self) -> &[bool] {
        &self.sentence_ends
    }

    /// Attached discourse spans.
    pub fn spans(&self) -> &[DiscourseSpan] {
        &self.spans
    }

    /// Occurrences of `term` in this document.
    pub fn term_count(&self, term: &str) -> u32 {
        self.term_counts.get(term).copied().unwrap_or(0)
    }

    /// Distinct terms with their counts. Iteration order is unspecified.
    pub fn term_counts(&self) -> &HashMap<String, u32> {
        &self.term_counts
    }

    /// Attaches a span, enforcing bounds and same-label non-overlap.
    pub fn attach_span(&mut self, span: DiscourseSpan) -> Result<(), CorpusError> {
        span.validate(self.len())?;
        if let Some(prev) = self
            .spans
            .iter()
            .find(|s| s.relation == span.relation && s.overlaps(&span))
        {
            return Err(CorpusError::Invalid(format!(
                "document `{}`: {} span {}..{} overlaps existing span {}..{}",
                self.id, span.relation, span.start, span.end, prev.start, prev.end
            )));
        }
        self.spans.push(span);
        Ok(())
    }

    /// Drops all attached spans.
    pub fn clear_spans(&mut self) {
        self.spans.clear();
    }

    /// Concatenation (document order) of the spans labeled `relation`.
    /// Empty when the document has no such span.
    pub fn relation_text(&self, relation: RelationLabel) -> Vec<String> {
        let mut ranges: Vec<&DiscourseSpan> = self
            .spans
            .iter()
            .filter(|s| s.relation == relation)
            .collect();
        ranges.sort_by_key(|s| (s.start, s.end));
        ranges
            .iter()
            .flat_map(|s| self.tokens[s.start..s.end].iter().cloned())
            .collect()
    }

    /// Relation labels with at least one span on this document, in label order.
    pub fn relations_present(&self) -> Vec<RelationLabel> {
        let mut labels: Vec<RelationLabel> = self.spans.iter().map(|s| s.relation).collect();
        labels.sort();
        labels.dedup();
        labels
    }
}

/// An ordered set of documents with id lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate document ids.
    pub fn from_documents(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if by_id.insert(d.id().to_string(), i).is_some() {
                return Err(CorpusError::DuplicateDocument(d.id().to_string()));
            }
        }
        Ok(Corpus { docs, by_id })
    }

    /// Documents in load order.
    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    /// Number of documents.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    /// True when the corpus holds no documents.
    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Lookup by document id.
    pub fn get(&self, id: &str) -> Option<&Document> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    /// Mutable lookup by document id (used by annotation ingestion).
    pub fn get_mut(&mut self, id: &str) -> Option<&mut Document> {
        let idx = self.by_id.get(id).copied()?;
        Some(&mut self.docs[idx])
    }
}

/// Relevance judgments: query id → document id → grade.
///
/// Grades of 1 or more count as relevant for binary metrics. Documents
/// absent from a query's map are unjudged, which is distinct from an
/// explicit grade of 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Judgments {
    by_query: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Judgments {
    /// Creates an empty judgment set.
    pub fn new() -> Self {
        Judgments::default()
    }

    /// Records a grade; later inserts for the same (query, document) win.
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>, grade: u32) {
        self.by_query
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into(), grade);
    }

    /// Judged documents for a query.
    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.by_query.get(query_id)
    }

    /// Grade of a (query, document) pair, `None` when unjudged.
    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.by_query.get(query_id)?.get(doc_id).copied()
    }

    /// Query ids in sorted order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    /// Number of documents with grade >= 1 for the query.
    pub fn relevant_count(&self, query_id: &str) -> usize {
        self.by_query
            .get(query_id)
            .map(|m| m.values().filter(|&&g| g >= 1).count())
            .unwrap_or(0)
    }

    /// Number of documents judged explicitly non-relevant (grade 0).
    pub fn judged_nonrelevant_count(&self, query_id: &str) -> usize {
        self.by_query
            .get(query_id)
            .map(|m| m.values().filter(|&&g| g == 0).count())
            .unwrap_or(0)
    }
}

/// One line of a TREC-style run file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    /// Query the entry belongs to.
    pub query_id: String,
    /// Ranked document.
    pub doc_id: String,
    /// 1-based rank; within one query ranks are 1..k with no gaps.
    pub rank: u32,
    /// Retrieval score; non-increasing with rank within one query.
    pub score: crate::Score,
    /// Free-form run tag.
    pub tag: String,
}
