//! The line-oriented text formats: topics, qrels, run files, discourse
//! annotations, and raw documents.

use std::collections::HashSet;
use std::path::Path;

use super::{format_err, Corpus, CorpusError, Document, DiscourseSpan, Judgments, Query, RunEntry};

/// Lowercased maximal runs of letters/digits; everything else separates.
pub fn tokenize(raw: &str) -> Vec<String> {
    tokenize_flagged(raw).0
}

/// Tokenizes and records, per token, whether the token was terminated by
/// `.`, `!` or `?` before the next token began (the sentence-end side
/// channel used by the cue tagger).
pub fn tokenize_flagged(raw: &str) -> (Vec<String>, Vec<bool>) {
    let mut tokens: Vec<String> = Vec::new();
    let mut flags: Vec<bool> = Vec::new();
    let mut run = String::new();

    let close_run = |run: &mut String, tokens: &mut Vec<String>, flags: &mut Vec<bool>| {
        if run.is_empty() {
            return;
        }
        let token: String = run
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        run.clear();
        if !token.is_empty() {
            tokens.push(token);
            flags.push(false);
        }
    };

    for c in raw.chars() {
        if c.is_alphanumeric() {
            run.push(c);
        } else {
            close_run(&mut run, &mut tokens, &mut flags);
            if matches!(c, '.' | '!' | '?') {
                if let Some(last) = flags.last_mut() {
                    *last = true;
                }
            }
        }
    }
    close_run(&mut run, &mut tokens, &mut flags);
    (tokens, flags)
}

/// Parses `<qid><TAB><free text>` lines into queries, in file order.
pub fn parse_topics(text: &str) -> Result<Vec<Query>, CorpusError> {
    let mut queries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (qid, rest) = line
            .split_once('\t')
            .ok_or_else(|| format_err(line_no, "expected `<qid><TAB><text>`"))?;
        if qid.is_empty() {
            return Err(format_err(line_no, "empty query id"));
        }
        if !seen.insert(qid.to_string()) {
            return Err(format_err(line_no, format!("duplicate query id `{qid}`")));
        }
        let terms = tokenize(rest);
        if terms.is_empty() {
            return Err(format_err(
                line_no,
                format!("query `{qid}` has no terms after tokenization"),
            ));
        }
        queries.push(Query {
            id: qid.to_string(),
            terms,
        });
    }
    Ok(queries)
}

/// Parses `<qid> 0 <docid> <grade>` lines. The last occurrence of a
/// (query, document) pair wins; negative grades clamp to 0.
pub fn parse_qrels(text: &str) -> Result<Judgments, CorpusError> {
    let mut judgments = Judgments::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(format_err(
                line_no,
                format!("expected 4 whitespace-separated fields, got {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| format_err(line_no, format!("non-integer grade `{}`", fields[3])))?;
        judgments.insert(fields[0], fields[2], grade.max(0) as u32);
    }
    Ok(judgments)
}

/// Parses a run file: `<qid> Q0 <docid> <rank> <score> <tag>` lines.
///
/// Within each query, ranks must start at 1 and increase without gaps, and
/// scores must be non-increasing.
pub fn read_run(text: &str) -> Result<Vec<RunEntry>, CorpusError> {
    let mut entries = Vec::new();
    let mut last: std::collections::HashMap<String, (u32, crate::Score)> =
        std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(format_err(
                line_no,
                format!("expected 6 whitespace-separated fields, got {}", fields.len()),
            ));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| format_err(line_no, format!("bad rank `{}`", fields[3])))?;
        let score: crate::Score = fields[4]
            .parse()
            .map_err(|_| format_err(line_no, format!("bad score `{}`", fields[4])))?;
        if !score.is_finite() {
            return Err(format_err(line_no, "score must be finite"));
        }
        match last.get(fields[0]) {
            None if rank != 1 => {
                return Err(format_err(
                    line_no,
                    format!("query `{}` starts at rank {rank}, expected 1", fields[0]),
                ));
            }
            Some(&(prev_rank, prev_score)) => {
                if rank != prev_rank + 1 {
                    return Err(format_err(
                        line_no,
                        format!(
                            "query `{}` jumps from rank {prev_rank} to {rank}",
                            fields[0]
                        ),
                    ));
                }
                if score > prev_score {
                    return Err(format_err(
                        line_no,
                        format!(
                            "query `{}` score increases from {prev_score} to {score}",
                            fields[0]
                        ),
                    ));
                }
            }
            None => {}
        }
        last.insert(fields[0].to_string(), (rank, score));
        entries.push(RunEntry {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            score,
            tag: fields[5].to_string(),
        });
    }
    Ok(entries)
}

/// Serializes run entries with scores printed to 6 decimal places.
///
/// Validates the same invariants `read_run` enforces, so a round trip
/// through text is the identity up to score rounding.
pub fn write_run(entries: &[RunEntry]) -> Result<String, CorpusError> {
    let mut last: std::collections::HashMap<&str, (u32, crate::Score)> =
        std::collections::HashMap::new();
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if e.query_id.is_empty() || e.doc_id.is_empty() || e.tag.is_empty() {
            return Err(CorpusError::Invalid(format!(
                "run entry {i}: empty query id, doc id, or tag"
            )));
        }
        if !e.score.is_finite() {
            return Err(CorpusError::Invalid(format!(
                "run entry {i}: non-finite score"
            )));
        }
        match last.get(e.query_id.as_str()) {
            None if e.rank != 1 => {
                return Err(CorpusError::Invalid(format!(
                    "query `{}` starts at rank {}, expected 1",
                    e.query_id, e.rank
                )));
            }
            Some(&(prev_rank, prev_score)) => {
                if e.rank != prev_rank + 1 {
                    return Err(CorpusError::Invalid(format!(
                        "query `{}` jumps from rank {prev_rank} to {}",
                        e.query_id, e.rank
                    )));
                }
                if e.score > prev_score {
                    return Err(CorpusError::Invalid(format!(
                        "query `{}` score increases at rank {}",
                        e.query_id, e.rank
                    )));
                }
            }
            None => {}
        }
        last.insert(e.query_id.as_str(), (e.rank, e.score));
        out.push_str(&format!(
            "{} Q0 {} {} {:.6} {}\n",
            e.query_id, e.doc_id, e.rank, e.score, e.tag
        ));
    }
    Ok(out)
}

/// Outcome of annotation ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnotationReport {
    /// Spans attached to documents.
    pub attached: usize,
    /// Lines skipped because their document id is not in the corpus.
    pub skipped_unknown_doc: usize,
}

/// Parses `<docid><TAB><relation><TAB><start><TAB><end>` lines and attaches
/// the spans to the matching documents.
///
/// Lines naming unknown documents are skipped and counted; invalid labels,
/// out-of-range offsets, and same-label overlaps are errors naming the line.
pub fn parse_annotations(text: &str, corpus: &mut Corpus) -> Result<AnnotationReport, CorpusError> {
    let mut report = AnnotationReport {
        attached: 0,
        skipped_unknown_doc: 0,
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(format_err(
                line_no,
                format!("expected 4 tab-separated fields, got {}", fields.len()),
            ));
        }
        let relation: super::RelationLabel = fields[1]
            .parse()
            .map_err(|e| format_err(line_no, format!("{e}")))?;
        let start: usize = fields[2]
            .parse()
            .map_err(|_| format_err(line_no, format!("bad start offset `{}`", fields[2])))?;
        let end: usize = fields[3]
            .parse()
            .map_err(|_| format_err(line_no, format!("bad end offset `{}`", fields[3])))?;
        let Some(doc) = corpus.get_mut(fields[0]) else {
            report.skipped_unknown_doc += 1;
            continue;
        };
        doc.attach_span(DiscourseSpan {
            relation,
            start,
            end,
        })
        .map_err(|e| format_err(line_no, format!("{e}")))?;
        report.attached += 1;
    }
    Ok(report)
}

/// Serializes the spans of every document as annotation lines, documents in
/// corpus order, spans in (start, end, label) order.
pub fn write_annotations(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in corpus.docs() {
        let mut spans = doc.spans().to_vec();
        spans.sort_by_key(|s| (s.start, s.end, s.relation));
        for s in spans {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                doc.id(),
                s.relation,
                s.start,
                s.end
            ));
        }
    }
    out
}

/// Parses `<docid><TAB><raw text>` lines into a corpus.
pub fn parse_docs_tsv(text: &str) -> Result<Corpus, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, raw) = line
            .split_once('\t')
            .ok_or_else(|| format_err(line_no, "expected `<docid><TAB><text>`"))?;
        if id.is_empty() {
            return Err(format_err(line_no, "empty document id"));
        }
        docs.push(Document::from_raw(id, raw).map_err(|e| format_err(line_no, format!("{e}")))?);
    }
    Corpus::from_documents(docs)
}

/// Loads raw documents from `path`.
///
/// A directory is read as one file per document (document id = file stem,
/// files visited in name order); a file is read as `<docid><TAB><text>`
/// lines.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    if path.is_dir() {
        let mut names: Vec<std::path::PathBuf> = std::fs::read_dir(path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        let mut docs = Vec::new();
        for file in names {
            let id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| {
                    CorpusError::Invalid(format!("unusable file name {}", file.display()))
                })?
                .to_string();
            let raw = std::fs::read_to_string(&file)?;
            docs.push(Document::from_raw(id, &raw)?);
        }
        Corpus::from_documents(docs)
    } else {
        let text = std::fs::read_to_string(path)?;
        parse_docs_tsv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("The ARPANET quickly developed"),
            ["the", "arpanet", "quickly", "developed"]
        );
        assert_eq!(tokenize("evo-devo (2009)!"), ["evo", "devo", "2009"]);
    }

    #[test]
    fn tokenize_records_sentence_ends() {
        let (tokens, flags) = tokenize_flagged("It rained. We went!  Then (quietly) home");
        assert_eq!(
            tokens,
            ["it", "rained", "we", "went", "then", "quietly", "home"]
        );
        assert_eq!(flags, [false, true, false, true, false, false, false]);
    }

    #[test]
    fn tokenize_flags_ignore_leading_punctuation() {
        let (tokens, flags) = tokenize_flagged("...abc def");
        assert_eq!(tokens, ["abc", "def"]);
        assert_eq!(flags, [false, false]);
    }

    #[test]
    fn parse_topics_examples() {
        let qs = parse_topics("1\thorse hooves\n").unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].id, "1");
        assert_eq!(qs[0].terms, ["horse", "hooves"]);

        assert!(parse_topics("").unwrap().is_empty());

        let err = parse_topics("1\ta\n1\tb\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let err = parse_topics("1 horse\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn parse_qrels_examples() {
        let j = parse_qrels("1 0 dA 2\n1 0 dB 0\n").unwrap();
        assert_eq!(j.grade("1", "dA"), Some(2));
        assert_eq!(j.grade("1", "dB"), Some(0));

        let j = parse_qrels("1 0 dA -2\n").unwrap();
        assert_eq!(j.grade("1", "dA"), Some(0));

        assert!(parse_qrels("1 0 dA x\n").is_err());

        // Last occurrence wins.
        let j = parse_qrels("1 0 dA 2\n1 0 dA 1\n").unwrap();
        assert_eq!(j.grade("1", "dA"), Some(1));
    }

    #[test]
    fn run_write_format() {
        let entries = vec![RunEntry {
            query_id: "1".into(),
            doc_id: "dA".into(),
            rank: 1,
            score: 0.5,
            tag: "t".into(),
        }];
        assert_eq!(write_run(&entries).unwrap(), "1 Q0 dA 1 0.500000 t\n");
    }

    #[test]
    fn run_round_trip() {
        let entries = vec![
            RunEntry {
                query_id: "1".into(),
                doc_id: "dA".into(),
                rank: 1,
                score: 0.75,
                tag: "t".into(),
            },
            RunEntry {
                query_id: "1".into(),
                doc_id: "dB".into(),
                rank: 2,
                score: 0.5,
                tag: "t".into(),
            },
            RunEntry {
                query_id: "2".into(),
                doc_id: "dB".into(),
                rank: 1,
                score: -1.25,
                tag: "t".into(),
            },
        ];
        let text = write_run(&entries).unwrap();
        let back = read_run(&text).unwrap();
        assert_eq!(back, entries);
        assert_eq!(write_run(&back).unwrap(), text);
    }

    #[test]
    fn run_rank_gap_is_rejected() {
        assert!(read_run("1 Q0 dA 2 0.5 t\n").is_err());
        assert!(read_run("1 Q0 dA 1 0.5 t\n1 Q0 dB 3 0.4 t\n").is_err());
        assert!(read_run("1 Q0 dA 1 0.5 t\n1 Q0 dB 2 0.6 t\n").is_err());
        // Interleaved queries are fine as long as each stays contiguous.
        assert!(
            read_run("1 Q0 dA 1 0.5 t\n2 Q0 dA 1 0.9 t\n1 Q0 dB 2 0.4 t\n").is_ok()
        );
    }

    #[test]
    fn annotations_attach_and_validate() {
        let mut corpus = Corpus::from_documents(vec![Document::new(
            "dA",
            vec!["a".into(), "b".into(), "c".into(), "d".into(), "e".into()],
        )
        .unwrap()])
        .unwrap();

        let report = parse_annotations("dA\tcontrast\t0\t3\n", &mut corpus).unwrap();
        assert_eq!(report.attached, 1);
        assert_eq!(report.skipped_unknown_doc, 0);
        assert_eq!(
            corpus.get("dA").unwrap().spans(),
            &[DiscourseSpan {
                relation: crate::corpus::RelationLabel::Contrast,
                start: 0,
                end: 3
            }]
        );

        let err = parse_annotations("dA\tsarcasm\t0\t3\n", &mut corpus).unwrap_err();
        assert!(err.to_string().contains("sarcasm"), "{err}");

        let err = parse_annotations("dA\tcontrast\t4\t9\n", &mut corpus).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");

        // Same-label overlap against the span attached above.
        assert!(parse_annotations("dA\tcontrast\t2\t4\n", &mut corpus).is_err());

        // Unknown documents are skipped, not fatal.
        let report = parse_annotations("dZ\tcontrast\t0\t1\n", &mut corpus).unwrap();
        assert_eq!(report.attached, 0);
        assert_eq!(report.skipped_unknown_doc, 1);
    }

    #[test]
    fn docs_tsv_parses_and_rejects_duplicates() {
        let corpus = parse_docs_tsv("dA\tThe cat sat.\ndB\tA dog barked!\n").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.get("dA").unwrap().tokens(), ["the", "cat", "sat"]);
        assert_eq!(corpus.get("dA").unwrap().sentence_ends(), [false, false, true]);

        assert!(parse_docs_tsv("dA\ta\ndA\tb\n").is_err());
        assert!(parse_docs_tsv("no tab here\n").is_err());
    }
}
