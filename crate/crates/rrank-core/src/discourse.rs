//! Heuristic discourse tagging for corpora without annotations, plus
//! relation-distribution statistics.
//!
//! The tagger is a cue-word stand-in for a real discourse parser: it matches
//! cue token sequences and emits a span covering the clause on the rule's
//! scope side. No fidelity to any particular parser is claimed.

use std::collections::BTreeMap;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, DiscourseSpan, Document, RelationLabel};

/// Errors from rule parsing and distribution statistics.
#[derive(Debug, Error)]
pub enum DiscourseError {
    /// A rule file line violated its format.
    #[error("line {line}: {msg}")]
    Format {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
    /// Statistics were requested for a corpus without any spans.
    #[error("no annotations in corpus")]
    NoAnnotations,
}

/// Which side of the cue the emitted span covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CueScope {
    /// Span runs from the cue to the next clause boundary.
    ClauseAfterCue,
    /// Span runs from the previous clause boundary through the cue.
    ClauseBeforeCue,
}

impl CueScope {
    fn as_str(self) -> &'static str {
        match self {
            CueScope::ClauseAfterCue => "clause-after-cue",
            CueScope::ClauseBeforeCue => "clause-before-cue",
        }
    }
}

impl FromStr for CueScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clause-after-cue" => Ok(CueScope::ClauseAfterCue),
            "clause-before-cue" => Ok(CueScope::ClauseBeforeCue),
            other => Err(format!("unknown scope `{other}`")),
        }
    }
}

/// One tagging rule: a cue token sequence mapped to a relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueRule {
    /// Token sequence that triggers the rule, already canonicalized.
    pub cue: Vec<String>,
    /// Relation emitted for a match.
    pub relation: RelationLabel,
    /// Side of the cue the span covers.
    pub scope: CueScope,
}

impl CueRule {
    /// Builds a rule, rejecting empty cues.
    pub fn new(
        cue: &[&str],
        relation: RelationLabel,
        scope: CueScope,
    ) -> Result<Self, CorpusError> {
        if cue.is_empty() {
            return Err(CorpusError::Invalid("cue must be non-empty".into()));
        }
        Ok(CueRule {
            cue: cue.iter().map(|s| s.to_string()).collect(),
            relation,
            scope,
        })
    }
}

/// The built-in rule set: common connectives chosen for testability.
pub fn default_rules() -> Vec<CueRule> {
    use CueScope::{ClauseAfterCue as After, ClauseBeforeCue as Before};
    use RelationLabel::*;
    let table: &[(&[&str], RelationLabel, CueScope)] = &[
        (&["because"], Explanation, After),
        (&["since"], Explanation, After),
        (&["although"], Contrast, After),
        (&["though"], Contrast, After),
        (&["but"], Contrast, After),
        (&["however"], Contrast, After),
        (&["whereas"], Comparison, After),
        (&["than"], Comparison, After),
        (&["if"], Condition, After),
        (&["unless"], Condition, After),
        (&["when"], Temporal, After),
        (&["before"], Temporal, After),
        (&["after"], Temporal, After),
        (&["until"], Temporal, After),
        (&["in", "order", "to"], Enablement, After),
        (&["so", "that"], Enablement, After),
        (&["said"], Attribution, Before),
        (&["according", "to"], Attribution, After),
        (&["therefore"], Consequence, After),
        (&["thus"], Consequence, After),
        (&["as", "a", "result"], CauseResult, After),
        (&["for", "example"], Elaboration, After),
        (&["such", "as"], Elaboration, After),
        (&["namely"], Elaboration, After),
        (&["in", "summary"], Summary, After),
        (&["overall"], Summary, After),
    ];
    table
        .iter()
        .map(|(cue, rel, scope)| CueRule::new(cue, *rel, *scope).expect("built-in cue non-empty"))
        .collect()
}

/// Parses `<cue words><TAB><relation><TAB><scope>` lines.
pub fn parse_rules(text: &str) -> Result<Vec<CueRule>, DiscourseError> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DiscourseError::Format {
                line: line_no,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let cue: Vec<String> = crate::corpus::tokenize(fields[0]);
        if cue.is_empty() {
            return Err(DiscourseError::Format {
                line: line_no,
                msg: "empty cue".into(),
            });
        }
        let relation: RelationLabel = fields[1].parse().map_err(|e| DiscourseError::Format {
            line: line_no,
            msg: format!("{e}"),
        })?;
        let scope: CueScope = fields[2].parse().map_err(|msg| DiscourseError::Format {
            line: line_no,
            msg,
        })?;
        rules.push(CueRule {
            cue,
            relation,
            scope,
        });
    }
    Ok(rules)
}

/// Serializes rules in the rule-file format.
pub fn write_rules(rules: &[CueRule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            r.cue.join(" "),
            r.relation,
            r.scope.as_str()
        ));
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct CueMatch {
    rule_idx: usize,
    start: usize,
    end: usize,
}

/// Tags a document with the given rules.
///
/// Every cue match emits a span covering the clause on the rule's scope
/// side. A clause boundary is the nearest sentence end (a token flagged by
/// the tokenizer) or the start of another cue match. Same-label overlaps are
/// resolved by keeping the earlier span; the result always satisfies the
/// span invariants.
pub fn heuristic_tag(doc: &Document, rules: &[CueRule]) -> Vec<DiscourseSpan> {
    let tokens = doc.tokens();
    let n = tokens.len();
    if n == 0 {
        return Vec::new();
    }

    let mut matches: Vec<CueMatch> = Vec::new();
    for (rule_idx, rule) in rules.iter().enumerate() {
        let k = rule.cue.len();
        if k == 0 || k > n {
            continue;
        }
        for start in 0..=(n - k) {
            if tokens[start..start + k]
                .iter()
                .zip(&rule.cue)
                .all(|(t, c)| t == c)
            {
                matches.push(CueMatch {
                    rule_idx,
                    start,
                    end: start + k,
                });
            }
        }
    }
    if matches.is_empty() {
        return Vec::new();
    }

    // Clause boundaries: document edges, token positions right after a
    // sentence end, and every cue-match start.
    let mut boundaries: Vec<usize> = vec![0, n];
    for (i, &flag) in doc.sentence_ends().iter().enumerate() {
        if flag {
            boundaries.push(i + 1);
        }
    }
    for m in &matches {
        boundaries.push(m.start);
    }
    boundaries.sort_unstable();
    boundaries.dedup();

    matches.sort_by_key(|m| (m.start, m.end, m.rule_idx));

    let mut spans: Vec<DiscourseSpan> = Vec::new();
    for m in &matches {
        let rule = &rules[m.rule_idx];
        let (start, end) = match rule.scope {
            CueScope::ClauseAfterCue => {
                let end = boundaries
                    .iter()
                    .copied()
                    .find(|&b| b >= m.end)
                    .unwrap_or(n);
                (m.start, end)
            }
            CueScope::ClauseBeforeCue => {
                let start = boundaries
                    .iter()
                    .copied()
                    .rev()
                    .find(|&b| b < m.start)
                    .unwrap_or(0);
                (start, m.end)
            }
        };
        if start >= end {
            continue;
        }
        let candidate = DiscourseSpan {
            relation: rule.relation,
            start,
            end,
        };
        // Earlier spans win same-label conflicts.
        if spans
            .iter()
            .any(|s| s.relation == candidate.relation && s.overlaps(&candidate))
        {
            continue;
        }
        spans.push(candidate);
    }
    spans
}

/// Percentage of spans per relation over the whole corpus.
///
/// Percentages are non-negative and sum to 100 (modulo rounding).
pub fn relation_distribution(
    corpus: &Corpus,
) -> Result<BTreeMap<RelationLabel, f64>, DiscourseError> {
    let mut counts: BTreeMap<RelationLabel, usize> = BTreeMap::new();
    let mut total = 0usize;
    for doc in corpus.docs() {
        for s in doc.spans() {
            *counts.entry(s.relation).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(DiscourseError::NoAnnotations);
    }
    Ok(counts
        .into_iter()
        .map(|(r, c)| (r, 100.0 * c as f64 / total as f64))
        .collect())
}
