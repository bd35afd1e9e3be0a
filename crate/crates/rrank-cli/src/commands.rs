//! Command implementations. Each command resolves its options against the
//! config file, loads inputs through the library parsers, computes its
//! outputs fully, then writes them atomically.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use rrank_core::corpus::{
    self, Corpus, Judgments, Query, RelationLabel, RunEntry,
};
use rrank_core::discourse;
use rrank_core::evaluation::{
    self, cross_validate, evaluate_run, paired_ttest, per_query_diff, CvConfig, CvGrid, Metric,
    MetricReport, SummaryRow,
};
use rrank_core::index::{build_stats, read_stats_snapshot, write_stats_snapshot, CollectionStats};
use rrank_core::scoring::{self, RerankConfig, RerankMode};
use rrank_core::selection::{
    aggregate_observations, parse_score_set, pooled_selection, rate_posterior, write_density_tsv,
    Hyperparams, ScoreSet,
};

use crate::config::{resolve, resolve_required, ConfigMap};
use crate::{
    EvaluateArgs, IndexArgs, PipelineArgs, RerankArgs, RetrieveArgs, SelectArgs, TagArgs, TuneArgs,
};

const DEFAULT_MU: f64 = 1000.0;
const DEFAULT_KAPPA: f64 = 0.5;
const DEFAULT_DEPTH: usize = 1000;
const DEFAULT_SEED: u64 = 42;
const DEFAULT_REPEATS: usize = 5;

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("moving {} into place", tmp.display()))?;
    Ok(())
}

fn read_input(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_docs(path: &Path) -> Result<Corpus> {
    corpus::load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn load_topics(path: &Path) -> Result<Vec<Query>> {
    let text = read_input(path)?;
    corpus::parse_topics(&text).with_context(|| format!("parsing topics {}", path.display()))
}

fn load_qrels(path: &Path) -> Result<Judgments> {
    let text = read_input(path)?;
    corpus::parse_qrels(&text).with_context(|| format!("parsing qrels {}", path.display()))
}

fn load_run(path: &Path) -> Result<Vec<RunEntry>> {
    let text = read_input(path)?;
    corpus::read_run(&text).with_context(|| format!("parsing run {}", path.display()))
}

fn apply_annotations(corpus: &mut Corpus, path: &Path) -> Result<()> {
    let text = read_input(path)?;
    let report = corpus::parse_annotations(&text, corpus)
        .with_context(|| format!("parsing annotations {}", path.display()))?;
    if report.skipped_unknown_doc > 0 {
        eprintln!(
            "warning: {} annotation line(s) named unknown documents",
            report.skipped_unknown_doc
        );
    }
    Ok(())
}

fn load_stats(corpus: &Corpus, snapshot: Option<&Path>) -> Result<CollectionStats> {
    match snapshot {
        Some(path) => {
            let text = read_input(path)?;
            read_stats_snapshot(&text)
                .with_context(|| format!("parsing snapshot {}", path.display()))
        }
        None => Ok(build_stats(corpus)?),
    }
}

fn resolve_mode(
    relation: Option<String>,
    all_relations: bool,
    cfg: &ConfigMap,
) -> Result<RerankMode> {
    let relation = match relation {
        Some(r) => Some(r),
        None => cfg.get::<String>("relation")?,
    };
    let all = all_relations || cfg.get_bool("all-relations")?.unwrap_or(false);
    match (relation, all) {
        (Some(_), true) => bail!("--relation conflicts with --all-relations"),
        (Some(r), false) => Ok(RerankMode::SingleRelation(
            r.parse::<RelationLabel>()?,
        )),
        (None, true) => Ok(RerankMode::AllRelations),
        (None, false) => bail!("one of --relation or --all-relations is required"),
    }
}

fn resolve_span_weight(no_span_weight: bool, cfg: &ConfigMap) -> Result<bool> {
    Ok(!(no_span_weight || cfg.get_bool("no-span-weight")?.unwrap_or(false)))
}

fn resolve_metrics(metric: Option<String>, cfg: &ConfigMap, default: &str) -> Result<Vec<Metric>> {
    let name = resolve(metric, cfg.get("metric")?, default.to_string());
    if name == "all" {
        Ok(Metric::ALL.to_vec())
    } else {
        Ok(vec![name.parse::<Metric>()?])
    }
}

fn parse_grid(text: &str, key: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad {key} value `{v}`"))
        })
        .collect()
}

fn default_tag(mode: RerankMode) -> String {
    match mode {
        RerankMode::SingleRelation(r) => r.to_string(),
        RerankMode::AllRelations => "all-relations".to_string(),
    }
}

// Baseline ranking for every query, emitted in sorted query order.
fn retrieve_entries(
    queries: &[Query],
    corpus: &Corpus,
    stats: &CollectionStats,
    mu: f64,
    depth: usize,
    tag: &str,
) -> Result<Vec<RunEntry>> {
    let mut sorted: Vec<&Query> = queries.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut entries = Vec::new();
    for q in sorted {
        let scored = scoring::retrieve(q, corpus.docs(), stats, mu, depth)?;
        entries.extend(scoring::run_entries(&q.id, &scored, tag));
    }
    Ok(entries)
}

// Re-ranks the baseline candidates per query, emitted in sorted query order.
fn rerank_entries(
    queries: &[Query],
    corpus: &Corpus,
    stats: &CollectionStats,
    baseline: &[RunEntry],
    rcfg: &RerankConfig,
    tag: &str,
) -> Result<Vec<RunEntry>> {
    let by_id: BTreeMap<&str, &Query> = queries.iter().map(|q| (q.id.as_str(), q)).collect();
    let mut groups: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
    for e in baseline {
        groups.entry(&e.query_id).or_default().push(e);
    }
    let mut entries = Vec::new();
    for (qid, mut group) in groups {
        let q = by_id
            .get(qid)
            .with_context(|| format!("run query `{qid}` not found in topics"))?;
        group.sort_by_key(|e| e.rank);
        let candidates: Vec<&rrank_core::corpus::Document> = group
            .iter()
            .map(|e| {
                corpus
                    .get(&e.doc_id)
                    .with_context(|| format!("run document `{}` not found in corpus", e.doc_id))
            })
            .collect::<Result<_>>()?;
        let scored = scoring::rerank(q, &candidates, stats, rcfg)?;
        entries.extend(scoring::run_entries(qid, &scored, tag));
    }
    Ok(entries)
}

struct EvalOutput {
    files: Vec<(String, String)>,
}

// Detail, summary, and (with a baseline) diff files for a run.
fn evaluation_outputs(
    run: &[RunEntry],
    baseline: Option<&[RunEntry]>,
    judgments: &Judgments,
    metrics: &[Metric],
    cutoff: Option<usize>,
) -> Result<EvalOutput> {
    let run_tag = run.first().map(|e| e.tag.clone()).unwrap_or("run".into());
    let base_tag = baseline
        .and_then(|b| b.first())
        .map(|e| e.tag.clone())
        .unwrap_or("baseline".into());

    let mut files = Vec::new();
    let mut summary: Vec<SummaryRow> = Vec::new();
    for &metric in metrics {
        let report: MetricReport = evaluate_run(run, judgments, metric, cutoff);
        if !report.skipped.is_empty() {
            eprintln!(
                "{metric}: {} quer{} with no relevant documents excluded from the mean",
                report.skipped.len(),
                if report.skipped.len() == 1 { "y" } else { "ies" }
            );
        }
        files.push((
            format!("{metric}.tsv"),
            evaluation::write_metric_detail(metric, &report),
        ));
        if let Some(base_entries) = baseline {
            let base = evaluate_run(base_entries, judgments, metric, cutoff);
            let ttest = paired_ttest(&report.per_query, &base.per_query)?;
            let pct = if base.mean != 0.0 {
                Some(100.0 * (report.mean - base.mean) / base.mean)
            } else {
                None
            };
            summary.push(SummaryRow {
                relation: base_tag.clone(),
                metric,
                value: base.mean,
                pct_vs_baseline: None,
                ttest: None,
            });
            summary.push(SummaryRow {
                relation: run_tag.clone(),
                metric,
                value: report.mean,
                pct_vs_baseline: pct,
                ttest: Some(ttest),
            });
            let diffs = per_query_diff(&report.per_query, &base.per_query);
            files.push((
                format!("diff_{metric}.tsv"),
                evaluation::write_diff_tsv(&diffs),
            ));
        } else {
            summary.push(SummaryRow {
                relation: run_tag.clone(),
                metric,
                value: report.mean,
                pct_vs_baseline: None,
                ttest: None,
            });
        }
    }
    files.push(("summary.tsv".into(), evaluation::write_summary(&summary)));
    Ok(EvalOutput { files })
}

pub fn index(args: IndexArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let out = resolve_required(args.out, cfg.get_path("out"), "out")?;
    let corpus = load_docs(&docs)?;
    let stats = build_stats(&corpus)?;
    write_atomic(&out, &write_stats_snapshot(&stats))
}

pub fn tag(args: TagArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let out = resolve_required(args.out, cfg.get_path("out"), "out")?;
    let rules = match args.rules.or(cfg.get_path("rules")) {
        Some(path) => {
            let text = read_input(&path)?;
            discourse::parse_rules(&text)
                .with_context(|| format!("parsing rules {}", path.display()))?
        }
        None => discourse::default_rules(),
    };
    let mut corpus = load_docs(&docs)?;
    let mut tagged: Vec<rrank_core::corpus::Document> = Vec::with_capacity(corpus.len());
    for doc in corpus.docs() {
        let mut doc = doc.clone();
        doc.clear_spans();
        for span in discourse::heuristic_tag(&doc, &rules) {
            doc.attach_span(span)?;
        }
        tagged.push(doc);
    }
    corpus = Corpus::from_documents(tagged)?;
    write_atomic(&out, &corpus::write_annotations(&corpus))?;
    match discourse::relation_distribution(&corpus) {
        Ok(dist) => {
            for (relation, pct) in dist {
                println!("{relation}\t{pct:.2}");
            }
        }
        Err(_) => eprintln!("warning: no cue matched, annotations file is empty"),
    }
    Ok(())
}

pub fn retrieve(args: RetrieveArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let topics = resolve_required(args.topics, cfg.get_path("topics"), "topics")?;
    let out = resolve_required(args.out, cfg.get_path("out"), "out")?;
    let mu = resolve(args.mu, cfg.get("mu")?, DEFAULT_MU);
    let depth = resolve(args.depth, cfg.get("depth")?, DEFAULT_DEPTH);
    let tag = resolve(args.tag, cfg.get("tag")?, "baseline".into());

    let corpus = load_docs(&docs)?;
    let stats = load_stats(&corpus, args.stats.or(cfg.get_path("stats")).as_deref())?;
    let queries = load_topics(&topics)?;
    let entries = retrieve_entries(&queries, &corpus, &stats, mu, depth, &tag)?;
    write_atomic(&out, &corpus::write_run(&entries)?)
}

pub fn rerank(args: RerankArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let topics = resolve_required(args.topics, cfg.get_path("topics"), "topics")?;
    let annotations =
        resolve_required(args.annotations, cfg.get_path("annotations"), "annotations")?;
    let baseline = resolve_required(args.baseline, cfg.get_path("baseline"), "baseline")?;
    let out = resolve_required(args.out, cfg.get_path("out"), "out")?;
    let mode = resolve_mode(args.relation, args.all_relations, cfg)?;
    let rcfg = RerankConfig {
        kappa: resolve(args.kappa, cfg.get("kappa")?, DEFAULT_KAPPA),
        mu: resolve(args.mu, cfg.get("mu")?, DEFAULT_MU),
        mode,
        span_weight: resolve_span_weight(args.no_span_weight, cfg)?,
    };
    let tag = resolve(args.tag, cfg.get("tag")?, default_tag(mode));

    let mut corpus = load_docs(&docs)?;
    apply_annotations(&mut corpus, &annotations)?;
    let stats = build_stats(&corpus)?;
    let queries = load_topics(&topics)?;
    let baseline_entries = load_run(&baseline)?;
    let entries = rerank_entries(&queries, &corpus, &stats, &baseline_entries, &rcfg, &tag)?;
    write_atomic(&out, &corpus::write_run(&entries)?)
}

pub fn evaluate(args: EvaluateArgs, cfg: &ConfigMap) -> Result<()> {
    let run = resolve_required(args.run, cfg.get_path("run"), "run")?;
    let qrels = resolve_required(args.qrels, cfg.get_path("qrels"), "qrels")?;
    let out_dir = resolve_required(args.out_dir, cfg.get_path("out-dir"), "out-dir")?;
    let metrics = resolve_metrics(args.metric, cfg, "all")?;
    let cutoff = args.cutoff.or(cfg.get("cutoff")?);

    let run_entries = load_run(&run)?;
    let judgments = load_qrels(&qrels)?;
    let baseline = match args.baseline_run.or(cfg.get_path("baseline-run")) {
        Some(path) => Some(load_run(&path)?),
        None => None,
    };
    let output = evaluation_outputs(
        &run_entries,
        baseline.as_deref(),
        &judgments,
        &metrics,
        cutoff,
    )?;
    for (name, content) in output.files {
        write_atomic(&out_dir.join(name), &content)?;
    }
    Ok(())
}

pub fn tune(args: TuneArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let topics = resolve_required(args.topics, cfg.get_path("topics"), "topics")?;
    let qrels = resolve_required(args.qrels, cfg.get_path("qrels"), "qrels")?;
    let annotations =
        resolve_required(args.annotations, cfg.get_path("annotations"), "annotations")?;
    let out = resolve_required(args.out, cfg.get_path("out"), "out")?;
    let mode = resolve_mode(args.relation, args.all_relations, cfg)?;
    let metric = resolve_metrics(args.metric, cfg, "map")?
        .into_iter()
        .next()
        .expect("one metric");

    let mut grid = CvGrid::default();
    if let Some(text) = args.mu_grid.or(cfg.get("mu-grid")?) {
        grid.mu = parse_grid(&text, "mu-grid")?;
    }
    if let Some(text) = args.kappa_grid.or(cfg.get("kappa-grid")?) {
        grid.kappa = parse_grid(&text, "kappa-grid")?;
    }
    grid.folds = resolve(args.folds, cfg.get("folds")?, grid.folds);

    let cv = CvConfig {
        grid,
        metric,
        mode,
        span_weight: resolve_span_weight(args.no_span_weight, cfg)?,
        depth: resolve(args.depth, cfg.get("depth")?, DEFAULT_DEPTH),
        cutoff: args.cutoff.or(cfg.get("cutoff")?),
        seed: resolve(args.seed, cfg.get("seed")?, DEFAULT_SEED),
    };

    let mut corpus = load_docs(&docs)?;
    apply_annotations(&mut corpus, &annotations)?;
    let stats = build_stats(&corpus)?;
    let queries = load_topics(&topics)?;
    let judgments = load_qrels(&qrels)?;
    let report = cross_validate(&queries, &corpus, &stats, &judgments, &cv)?;
    write_atomic(&out, &evaluation::write_cv_report(metric, &report))
}

pub fn select(args: SelectArgs, cfg: &ConfigMap) -> Result<()> {
    let mut score_paths = args.scores;
    if score_paths.is_empty() {
        if let Some(text) = cfg.get::<String>("scores")? {
            score_paths = text.split(',').map(|s| PathBuf::from(s.trim())).collect();
        }
    }
    if score_paths.len() < 2 {
        bail!("need at least two --scores files (one per query set)");
    }
    let out_dir = resolve_required(args.out_dir, cfg.get_path("out-dir"), "out-dir")?;
    let seed = resolve(args.seed, cfg.get("seed")?, DEFAULT_SEED);
    let repeats = resolve(args.repeats, cfg.get("repeats")?, DEFAULT_REPEATS);

    let mut sets: Vec<ScoreSet> = Vec::with_capacity(score_paths.len());
    for path in &score_paths {
        let text = read_input(path)?;
        sets.push(
            parse_score_set(&text)
                .with_context(|| format!("parsing scores {}", path.display()))?,
        );
    }

    let selections = pooled_selection(&sets, seed, repeats)?;
    let mut out = String::from("repeat\trelation\n");
    for (i, relation) in selections.iter().enumerate() {
        out.push_str(&format!("{}\t{relation}\n", i + 1));
    }

    // Posterior densities from the full (unpooled) observations.
    let observations = aggregate_observations(&sets);
    let hp = Hyperparams::default();
    let mut density_files = Vec::new();
    for j in 0..observations.len() {
        let posterior = rate_posterior(j, &observations, &hp)?;
        density_files.push((
            format!("posterior_{}.tsv", posterior.relation),
            write_density_tsv(&posterior.density),
        ));
    }

    write_atomic(&out_dir.join("selections.tsv"), &out)?;
    for (name, content) in density_files {
        write_atomic(&out_dir.join(name), &content)?;
    }
    Ok(())
}

pub fn pipeline(args: PipelineArgs, cfg: &ConfigMap) -> Result<()> {
    let docs = resolve_required(args.docs, cfg.get_path("docs"), "docs")?;
    let topics = resolve_required(args.topics, cfg.get_path("topics"), "topics")?;
    let qrels = resolve_required(args.qrels, cfg.get_path("qrels"), "qrels")?;
    let out_dir = resolve_required(args.out_dir, cfg.get_path("out-dir"), "out-dir")?;
    let mode = resolve_mode(args.relation, args.all_relations, cfg)?;
    let rcfg = RerankConfig {
        kappa: resolve(args.kappa, cfg.get("kappa")?, DEFAULT_KAPPA),
        mu: resolve(args.mu, cfg.get("mu")?, DEFAULT_MU),
        mode,
        span_weight: resolve_span_weight(args.no_span_weight, cfg)?,
    };
    let metrics = resolve_metrics(args.metric, cfg, "all")?;
    let depth = resolve(args.depth, cfg.get("depth")?, DEFAULT_DEPTH);
    let cutoff = args.cutoff.or(cfg.get("cutoff")?);

    let mut corpus = load_docs(&docs)?;
    let annotations_out: Option<String> =
        match args.annotations.or(cfg.get_path("annotations")) {
            Some(path) => {
                apply_annotations(&mut corpus, &path)?;
                None
            }
            None => {
                let rules = match args.rules.or(cfg.get_path("rules")) {
                    Some(path) => discourse::parse_rules(&read_input(&path)?)?,
                    None => discourse::default_rules(),
                };
                let mut tagged = Vec::with_capacity(corpus.len());
                for doc in corpus.docs() {
                    let mut doc = doc.clone();
                    for span in discourse::heuristic_tag(&doc, &rules) {
                        doc.attach_span(span)?;
                    }
                    tagged.push(doc);
                }
                corpus = Corpus::from_documents(tagged)?;
                Some(corpus::write_annotations(&corpus))
            }
        };

    let stats = build_stats(&corpus)?;
    let queries = load_topics(&topics)?;
    let judgments = load_qrels(&qrels)?;

    let baseline = retrieve_entries(&queries, &corpus, &stats, rcfg.mu, depth, "baseline")?;
    let reranked = rerank_entries(
        &queries,
        &corpus,
        &stats,
        &baseline,
        &rcfg,
        &default_tag(mode),
    )?;
    let eval = evaluation_outputs(&reranked, Some(&baseline), &judgments, &metrics, cutoff)?;

    write_atomic(&out_dir.join("stats.tsv"), &write_stats_snapshot(&stats))?;
    if let Some(text) = annotations_out {
        write_atomic(&out_dir.join("annotations.tsv"), &text)?;
    }
    write_atomic(&out_dir.join("baseline.run"), &corpus::write_run(&baseline)?)?;
    write_atomic(&out_dir.join("reranked.run"), &corpus::write_run(&reranked)?)?;
    for (name, content) in eval.files {
        write_atomic(&out_dir.join(name), &content)?;
    }
    Ok(())
}
