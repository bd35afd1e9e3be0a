//! MAP, BPREF, NDCG, paired t-test significance, per-query diffs, and
//! 5-fold cross-validation tuning over the smoothing and mixture
//! parameters.
//!
//! Conventions match common trec_eval behavior: queries with no relevant
//! document are excluded from means (and reported), unjudged documents
//! count as non-relevant for MAP and NDCG but are invisible to BPREF, and
//! the BPREF numerator is capped so every per-document term stays in
//! [0, 1].

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Judgments, Query, RunEntry};
use crate::index::CollectionStats;
use crate::num::{count, lit, t_two_sided_p};
use crate::scoring::{rerank, retrieve, RerankConfig, RerankMode};
use crate::{Real, Score};

/// Errors from evaluation and tuning.
#[derive(Debug, Error)]
pub enum EvalError {
    /// Paired analysis needs at least two common queries.
    #[error("need at least 2 common queries, got {0}")]
    TooFewCommonQueries(usize),
    /// Cross-validation needs at least as many usable queries as folds.
    #[error("{got} usable queries for {need} folds")]
    TooFewQueries {
        /// Fold count requested.
        need: usize,
        /// Usable queries available.
        got: usize,
    },
    /// Bad configuration or inputs.
    #[error("{0}")]
    Invalid(String),
    /// Scoring failed while tuning.
    #[error(transparent)]
    Scoring(#[from] crate::scoring::ScoringError),
}

/// The retrieval metrics the harness reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Mean average precision.
    Map,
    /// Binary preference.
    Bpref,
    /// Normalized discounted cumulative gain.
    Ndcg,
}

impl Metric {
    /// All metrics.
    pub const ALL: [Metric; 3] = [Metric::Map, Metric::Bpref, Metric::Ndcg];

    /// Lowercase name used in files and flags.
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Map => "map",
            Metric::Bpref => "bpref",
            Metric::Ndcg => "ndcg",
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Metric {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "map" => Ok(Metric::Map),
            "bpref" => Ok(Metric::Bpref),
            "ndcg" => Ok(Metric::Ndcg),
            other => Err(EvalError::Invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// Average precision of one ranked list.
///
/// `None` when the query has no relevant document. Unjudged documents count
/// as non-relevant.
pub fn average_precision<R: Real>(ranked: &[&str], rels: &BTreeMap<String, u32>) -> Option<R> {
    let total_relevant = rels.values().filter(|&&g| g >= 1).count();
    if total_relevant == 0 {
        return None;
    }
    let mut relevant_seen = 0usize;
    let mut sum = R::zero();
    for (i, doc) in ranked.iter().enumerate() {
        if rels.get(*doc).copied().unwrap_or(0) >= 1 {
            relevant_seen += 1;
            sum += count::<R>(relevant_seen) / count::<R>(i + 1);
        }
    }
    Some(sum / count::<R>(total_relevant))
}

/// Binary preference of one ranked list.
///
/// Unjudged documents are ignored entirely. Each retrieved relevant
/// document contributes `1 - min(nonrel_above, min(R, N)) / min(R, N)`;
/// with no judged non-relevant documents every term is 1.
pub fn bpref<R: Real>(ranked: &[&str], rels: &BTreeMap<String, u32>) -> Option<R> {
    let total_relevant = rels.values().filter(|&&g| g >= 1).count();
    if total_relevant == 0 {
        return None;
    }
    let judged_nonrel = rels.values().filter(|&&g| g == 0).count();
    let bound = total_relevant.min(judged_nonrel);
    let mut nonrel_above = 0usize;
    let mut sum = R::zero();
    for doc in ranked {
        match rels.get(*doc) {
            Some(&g) if g >= 1 => {
                if judged_nonrel == 0 {
                    sum += R::one();
                } else {
                    sum += R::one() - count::<R>(nonrel_above.min(bound)) / count::<R>(bound);
                }
            }
            Some(_) => nonrel_above += 1,
            None => {}
        }
    }
    Some(sum / count::<R>(total_relevant))
}

fn gain<R: Real>(grade: u32) -> R {
    lit::<R>(2.0).powi(grade as i32) - R::one()
}

/// NDCG of one ranked list with gain `2^grade - 1` and discount
/// `log2(rank + 1)`.
///
/// `cutoff` limits both the run and the ideal ranking; `None` uses the full
/// run depth. `None` is returned when no positive grade exists for the
/// query.
pub fn ndcg<R: Real>(
    ranked: &[&str],
    rels: &BTreeMap<String, u32>,
    cutoff: Option<usize>,
) -> Option<R> {
    let depth = cutoff.unwrap_or(ranked.len());
    let mut ideal: Vec<u32> = rels.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() {
        return None;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));

    let log2 = |i: usize| count::<R>(i + 1).log2();
    let dcg = ranked
        .iter()
        .take(depth)
        .enumerate()
        .fold(R::zero(), |acc, (i, doc)| {
            acc + gain::<R>(rels.get(*doc).copied().unwrap_or(0)) / log2(i + 1)
        });
    let idcg = ideal
        .iter()
        .take(depth)
        .enumerate()
        .fold(R::zero(), |acc, (i, &g)| acc + gain::<R>(g) / log2(i + 1));
    Some(dcg / idcg)
}

/// Per-query values plus their mean; queries with no relevant document are
/// listed in `skipped` and excluded from the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Metric value per evaluated query.
    pub per_query: BTreeMap<String, Score>,
    /// Arithmetic mean over evaluated queries (0 when none).
    pub mean: Score,
    /// Queries excluded for lack of relevant documents.
    pub skipped: Vec<String>,
}

/// Mean over a qid-sorted map, summed in key order.
pub fn pooled_mean(per_query: &BTreeMap<String, Score>) -> Score {
    if per_query.is_empty() {
        return 0.0;
    }
    per_query.values().sum::<Score>() / per_query.len() as Score
}

/// Evaluates a (possibly multi-query) run against judgments.
///
/// Entries are grouped per query and ordered by rank; only queries present
/// in the run are considered.
pub fn evaluate_run(
    entries: &[RunEntry],
    judgments: &Judgments,
    metric: Metric,
    cutoff: Option<usize>,
) -> MetricReport {
    let mut by_query: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
    for e in entries {
        by_query.entry(&e.query_id).or_default().push(e);
    }
    let empty = BTreeMap::new();
    let mut report = MetricReport {
        per_query: BTreeMap::new(),
        mean: 0.0,
        skipped: Vec::new(),
    };
    for (qid, mut group) in by_query {
        group.sort_by_key(|e| e.rank);
        let ranked: Vec<&str> = group.iter().map(|e| e.doc_id.as_str()).collect();
        let rels = judgments.for_query(qid).unwrap_or(&empty);
        let value = match metric {
            Metric::Map => average_precision::<Score>(&ranked, rels),
            Metric::Bpref => bpref::<Score>(&ranked, rels),
            Metric::Ndcg => ndcg::<Score>(&ranked, rels, cutoff),
        };
        match value {
            Some(v) => {
                report.per_query.insert(qid.to_string(), v);
            }
            None => report.skipped.push(qid.to_string()),
        }
    }
    report.mean = pooled_mean(&report.per_query);
    report
}

/// Paired t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    /// The t statistic (0 for degenerate inputs).
    pub t: Score,
    /// Degrees of freedom (n - 1).
    pub df: usize,
    /// Two-sided p-value (1 for degenerate inputs).
    pub p_two_sided: Score,
    /// Significant at the 95% confidence level.
    pub significant_95: bool,
    /// Significant at the 99% confidence level.
    pub significant_99: bool,
    /// All per-query differences were identical (zero variance).
    pub degenerate: bool,
}

/// Two-sided paired t-test over the queries common to both maps.
///
/// Critical decisions come from the t distribution with n-1 degrees of
/// freedom via the regularized incomplete beta function, so any n >= 2
/// works without tables.
pub fn paired_ttest(
    a: &BTreeMap<String, Score>,
    b: &BTreeMap<String, Score>,
) -> Result<TTest, EvalError> {
    let diffs: Vec<Score> = a
        .iter()
        .filter_map(|(qid, &va)| b.get(qid).map(|&vb| va - vb))
        .collect();
    let n = diffs.len();
    if n < 2 {
        return Err(EvalError::TooFewCommonQueries(n));
    }
    let mean = diffs.iter().sum::<Score>() / n as Score;
    let ss: Score = diffs.iter().map(|d| (d - mean) * (d - mean)).sum();
    let var = ss / (n - 1) as Score;
    if var == 0.0 {
        return Ok(TTest {
            t: 0.0,
            df: n - 1,
            p_two_sided: 1.0,
            significant_95: false,
            significant_99: false,
            degenerate: true,
        });
    }
    let t = mean / (var / n as Score).sqrt();
    let p = t_two_sided_p(t, (n - 1) as Score);
    Ok(TTest {
        t,
        df: n - 1,
        p_two_sided: p,
        significant_95: p < 0.05,
        significant_99: p < 0.01,
        degenerate: false,
    })
}

/// Per-query differences `a - b` over common queries, sorted ascending
/// (ties by query id).
pub fn per_query_diff(
    a: &BTreeMap<String, Score>,
    b: &BTreeMap<String, Score>,
) -> Vec<(Score, String)> {
    let mut diffs: Vec<(Score, String)> = a
        .iter()
        .filter_map(|(qid, &va)| b.get(qid).map(|&vb| (va - vb, qid.clone())))
        .collect();
    diffs.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(&y.1)));
    diffs
}

/// Serializes sorted differences as `index<TAB>diff<TAB>qid` lines,
/// 1-based index.
pub fn write_diff_tsv(diffs: &[(Score, String)]) -> String {
    let mut out = String::new();
    for (i, (diff, qid)) in diffs.iter().enumerate() {
        out.push_str(&format!("{}\t{diff:.6}\t{qid}\n", i + 1));
    }
    out
}

/// Serializes a report as `metric<TAB>qid<TAB>value` lines plus a final
/// mean row.
pub fn write_metric_detail(metric: Metric, report: &MetricReport) -> String {
    let mut out = String::new();
    for (qid, value) in &report.per_query {
        out.push_str(&format!("{metric}\t{qid}\t{value:.6}\n"));
    }
    out.push_str(&format!("{metric}\tall\t{:.6}\n", report.mean));
    out
}

/// One row of the comparison summary table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    /// Relation (or run tag) the row describes.
    pub relation: String,
    /// Metric reported.
    pub metric: Metric,
    /// Mean metric value.
    pub value: Score,
    /// Percent difference against the baseline, when one was given.
    pub pct_vs_baseline: Option<Score>,
    /// Paired t-test against the baseline, when one was given.
    pub ttest: Option<TTest>,
}

/// Serializes summary rows: relation, metric, value, percent vs baseline,
/// and significance stars (* at 95%, ** at 99%).
pub fn write_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::from("relation\tmetric\tvalue\tpct_vs_baseline\tsignificance\n");
    for row in rows {
        let pct = match row.pct_vs_baseline {
            Some(p) => format!("{p:+.1}%"),
            None => "-".into(),
        };
        let stars = match row.ttest {
            Some(t) if t.significant_99 => "**",
            Some(t) if t.significant_95 => "*",
            Some(_) => "",
            None => "-",
        };
        out.push_str(&format!(
            "{}\t{}\t{:.4}\t{}\t{}\n",
            row.relation, row.metric, row.value, pct, stars
        ));
    }
    out
}

/// Parameter grid for cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvGrid {
    /// Dirichlet smoothing values, ascending.
    pub mu: Vec<Score>,
    /// Mixture weights, ascending.
    pub kappa: Vec<Score>,
    /// Number of folds.
    pub folds: usize,
}

impl Default for CvGrid {
    fn default() -> Self {
        CvGrid {
            mu: vec![
                100.0, 500.0, 800.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 8000.0, 10000.0,
            ],
            kappa: vec![0.1, 0.3, 0.5, 0.7, 0.9],
            folds: 5,
        }
    }
}

/// Cross-validation configuration.
#[derive(Debug, Clone)]
pub struct CvConfig {
    /// Parameter grid.
    pub grid: CvGrid,
    /// Metric to tune for.
    pub metric: Metric,
    /// Relation evidence mode of the re-ranker.
    pub mode: RerankMode,
    /// Whether the re-ranker multiplies by the relation weight.
    pub span_weight: bool,
    /// First-stage retrieval depth.
    pub depth: usize,
    /// NDCG cutoff.
    pub cutoff: Option<usize>,
    /// Seed for the fold shuffle.
    pub seed: u64,
}

/// Cross-validation outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Winning (mu, kappa) per fold.
    pub fold_winners: Vec<(Score, Score)>,
    /// Held-out query ids per fold, sorted.
    pub folds: Vec<Vec<String>>,
    /// Held-out metric value per query (each query is held out once).
    pub per_query: BTreeMap<String, Score>,
    /// Mean over all held-out values.
    pub mean: Score,
    /// Queries excluded for lack of relevant documents.
    pub skipped: Vec<String>,
}

fn metric_for_ranking(
    metric: Metric,
    ranked: &[&str],
    rels: &BTreeMap<String, u32>,
    cutoff: Option<usize>,
) -> Option<Score> {
    match metric {
        Metric::Map => average_precision(ranked, rels),
        Metric::Bpref => bpref(ranked, rels),
        Metric::Ndcg => ndcg(ranked, rels, cutoff),
    }
}

/// Tunes (mu, kappa) by k-fold cross-validation.
///
/// Usable queries (those with at least one relevant document) are sorted by
/// id, shuffled by the seed, and dealt round-robin into folds. Per fold,
/// the grid point maximizing the metric mean on the other folds is applied
/// to the held-out fold; grid ties go to the smallest mu, then the smallest
/// kappa. The reported mean pools the held-out per-query values, so with a
/// single grid point it equals plain evaluation of that setting.
pub fn cross_validate(
    queries: &[Query],
    corpus: &Corpus,
    stats: &CollectionStats,
    judgments: &Judgments,
    cfg: &CvConfig,
) -> Result<CvReport, EvalError> {
    if cfg.grid.mu.is_empty() || cfg.grid.kappa.is_empty() {
        return Err(EvalError::Invalid("empty parameter grid".into()));
    }
    if cfg.grid.folds < 2 {
        return Err(EvalError::Invalid(format!(
            "need at least 2 folds, got {}",
            cfg.grid.folds
        )));
    }
    let mut grid = cfg.grid.clone();
    grid.mu.sort_by(Score::total_cmp);
    grid.kappa.sort_by(Score::total_cmp);

    let mut skipped = Vec::new();
    let mut usable: Vec<&Query> = Vec::new();
    for q in queries {
        if judgments.relevant_count(&q.id) >= 1 {
            usable.push(q);
        } else {
            skipped.push(q.id.clone());
        }
    }
    if usable.len() < grid.folds {
        return Err(EvalError::TooFewQueries {
            need: grid.folds,
            got: usable.len(),
        });
    }

    // Deterministic balanced folds: sort, seeded shuffle, round-robin deal.
    usable.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    usable.shuffle(&mut rng);
    let fold_of: Vec<usize> = (0..usable.len()).map(|i| i % grid.folds).collect();

    // Metric value for every (query, mu, kappa); queries usable by
    // construction so every value is defined.
    let empty = BTreeMap::new();
    let per_query_grid: Vec<Vec<Vec<Score>>> = usable
        .par_iter()
        .map(|q| {
            let rels = judgments.for_query(&q.id).unwrap_or(&empty);
            grid.mu
                .iter()
                .map(|&mu| {
                    let baseline = retrieve(q, corpus.docs(), stats, mu, cfg.depth)
                        .expect("validated mu");
                    let candidates: Vec<&crate::corpus::Document> = baseline
                        .iter()
                        .filter_map(|s| corpus.get(&s.doc_id))
                        .collect();
                    grid.kappa
                        .iter()
                        .map(|&kappa| {
                            let rcfg = RerankConfig {
                                kappa,
                                mu,
                                mode: cfg.mode,
                                span_weight: cfg.span_weight,
                            };
                            let ranked = rerank(q, &candidates, stats, &rcfg)
                                .expect("validated config");
                            let ids: Vec<&str> =
                                ranked.iter().map(|s| s.doc_id.as_str()).collect();
                            metric_for_ranking(cfg.metric, &ids, rels, cfg.cutoff)
                                .expect("usable query")
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut fold_winners = Vec::with_capacity(grid.folds);
    let mut folds = Vec::with_capacity(grid.folds);
    let mut per_query: BTreeMap<String, Score> = BTreeMap::new();
    for fold in 0..grid.folds {
        let mut train: Vec<usize> =
            (0..usable.len()).filter(|&i| fold_of[i] != fold).collect();
        let test: Vec<usize> = (0..usable.len()).filter(|&i| fold_of[i] == fold).collect();
        // Fixed qid order keeps the sums deterministic.
        train.sort_by(|&a, &b| usable[a].id.cmp(&usable[b].id));

        let mut best: Option<(Score, usize, usize)> = None;
        for (mi, _) in grid.mu.iter().enumerate() {
            for (ki, _) in grid.kappa.iter().enumerate() {
                let sum: Score = train.iter().map(|&qi| per_query_grid[qi][mi][ki]).sum();
                let mean = sum / train.len() as Score;
                if best.is_none_or(|(b, _, _)| mean > b) {
                    best = Some((mean, mi, ki));
                }
            }
        }
        let (_, mi, ki) = best.expect("non-empty grid");
        fold_winners.push((grid.mu[mi], grid.kappa[ki]));
        let mut fold_qids: Vec<String> =
            test.iter().map(|&qi| usable[qi].id.clone()).collect();
        fold_qids.sort();
        folds.push(fold_qids);
        for &qi in &test {
            per_query.insert(usable[qi].id.clone(), per_query_grid[qi][mi][ki]);
        }
    }
    let mean = pooled_mean(&per_query);
    Ok(CvReport {
        fold_winners,
        folds,
        per_query,
        mean,
        skipped,
    })
}

/// Serializes a CV report: fold winners then the pooled mean and held-out
/// per-query values.
pub fn write_cv_report(metric: Metric, report: &CvReport) -> String {
    let mut out = String::from("fold\tmu\tkappa\n");
    for (i, (mu, kappa)) in report.fold_winners.iter().enumerate() {
        out.push_str(&format!("{}\t{mu}\t{kappa}\n", i + 1));
    }
    out.push_str(&format!("mean_{metric}\t{:.6}\n", report.mean));
    out.push_str(&format!("skipped_queries\t{}\n", report.skipped.len()));
    for (qid, value) in &report.per_query {
        out.push_str(&format!("heldout\t{qid}\t{value:.6}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rels(pairs: &[(&str, u32)]) -> BTreeMap<String, u32> {
        pairs.iter().map(|(d, g)| (d.to_string(), *g)).collect()
    }

    #[test]
    fn average_precision_hand_examples() {
        // Relevant at ranks 1 and 3, R = 2.
        let j = rels(&[("r1", 1), ("r2", 1), ("n", 0)]);
        let ap: f64 = average_precision(&["r1", "n", "r2"], &j).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);

        // Perfect run.
        let ap: f64 = average_precision(&["r1", "r2"], &j).unwrap();
        assert_eq!(ap, 1.0);

        // No relevant retrieved.
        let ap: f64 = average_precision(&["n", "x"], &j).unwrap();
        assert_eq!(ap, 0.0);

        // No relevant documents at all: skipped.
        let none = rels(&[("n", 0)]);
        assert_eq!(average_precision::<f64>(&["n"], &none), None);
    }

    #[test]
    fn average_precision_counts_unjudged_as_nonrelevant() {
        let j = rels(&[("r1", 1)]);
        let with_unjudged: f64 = average_precision(&["u", "r1"], &j).unwrap();
        assert!((with_unjudged - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bpref_hand_examples() {
        // [rel, judged-nonrel, rel] with R = 2, N = 3.
        let j = rels(&[("r1", 1), ("r2", 1), ("n1", 0), ("n2", 0), ("n3", 0)]);
        let b: f64 = bpref(&["r1", "n1", "r2"], &j).unwrap();
        assert!((b - 0.75).abs() < 1e-12);

        // Unjudged documents are invisible.
        let b: f64 = bpref(&["r1", "UNJUDGED", "r2"], &j).unwrap();
        assert_eq!(b, 1.0);

        // No judged-nonrelevant above any relevant.
        let b: f64 = bpref(&["r1", "r2", "n1"], &j).unwrap();
        assert_eq!(b, 1.0);

        // N = 0: every retrieved relevant contributes 1.
        let j0 = rels(&[("r1", 1), ("r2", 1)]);
        let b: f64 = bpref(&["r1", "x"], &j0).unwrap();
        assert_eq!(b, 0.5);
    }

    #[test]
    fn bpref_stays_in_unit_interval_under_many_nonrelevant() {
        // More judged-nonrelevant above than min(R, N): term is capped at 0.
        let j = rels(&[("r1", 1), ("n1", 0), ("n2", 0), ("n3", 0), ("n4", 0)]);
        let b: f64 = bpref(&["n1", "n2", "n3", "n4", "r1"], &j).unwrap();
        assert_eq!(b, 0.0);
    }

    #[test]
    fn ndcg_hand_examples() {
        let j = rels(&[("a", 1), ("b", 0), ("c", 2)]);
        let n: f64 = ndcg(&["a", "b", "c"], &j, None).unwrap();
        let dcg = 1.0 + 0.0 + 3.0 / 2.0;
        let idcg = 3.0 + 1.0 / 3f64.log2();
        assert!((n - dcg / idcg).abs() < 1e-12);
        assert!((n - 0.6885).abs() < 5e-5);

        // Ideal ordering scores 1.
        let n: f64 = ndcg(&["c", "a", "b"], &j, None).unwrap();
        assert!((n - 1.0).abs() < 1e-12);

        // Positive grades exist but none retrieved.
        let j2 = rels(&[("b", 0), ("z", 3)]);
        let n: f64 = ndcg(&["b"], &j2, None).unwrap();
        assert_eq!(n, 0.0);

        // No positive grades: skipped.
        let none = rels(&[("b", 0)]);
        assert_eq!(ndcg::<f64>(&["b"], &none, None), None);
    }

    #[test]
    fn ndcg_cutoff_limits_both_sides() {
        let j = rels(&[("a", 2), ("b", 2)]);
        // At cutoff 1 only the first position counts, ideal too.
        let n: f64 = ndcg(&["b", "a"], &j, Some(1)).unwrap();
        assert_eq!(n, 1.0);
        let n: f64 = ndcg(&["x", "a"], &j, Some(1)).unwrap();
        assert_eq!(n, 0.0);
    }

    fn map_of(pairs: &[(&str, f64)]) -> BTreeMap<String, Score> {
        pairs.iter().map(|(q, v)| (q.to_string(), *v)).collect()
    }

    #[test]
    fn ttest_hand_example() {
        // Differences [1, 1, 1, 1, -1]: t = 1.5, not significant at 95%
        // (critical value 2.776 at 4 degrees of freedom).
        let a = map_of(&[("q1", 1.0), ("q2", 1.0), ("q3", 1.0), ("q4", 1.0), ("q5", -1.0)]);
        let b = map_of(&[("q1", 0.0), ("q2", 0.0), ("q3", 0.0), ("q4", 0.0), ("q5", 0.0)]);
        let t = paired_ttest(&a, &b).unwrap();
        assert!((t.t - 1.5).abs() < 1e-12);
        assert_eq!(t.df, 4);
        assert!(!t.significant_95);
        assert!(!t.significant_99);
        assert!(!t.degenerate);
    }

    #[test]
    fn ttest_degenerate_and_errors() {
        let a = map_of(&[("q1", 0.5), ("q2", 0.75)]);
        let t = paired_ttest(&a, &a).unwrap();
        assert!(t.degenerate);
        assert!(!t.significant_95);
        assert_eq!(t.t, 0.0);

        // Identical non-zero differences are degenerate too.
        let b = map_of(&[("q1", 0.25), ("q2", 0.5)]);
        let t = paired_ttest(&a, &b).unwrap();
        assert!(t.degenerate);

        let single = map_of(&[("q1", 0.3)]);
        assert!(paired_ttest(&single, &single).is_err());

        let disjoint = map_of(&[("zz", 0.3), ("zy", 0.1)]);
        assert!(paired_ttest(&a, &disjoint).is_err());
    }

    #[test]
    fn ttest_antisymmetry() {
        let a = map_of(&[("q1", 0.9), ("q2", 0.2), ("q3", 0.4)]);
        let b = map_of(&[("q1", 0.1), ("q2", 0.3), ("q3", 0.35)]);
        let ab = paired_ttest(&a, &b).unwrap();
        let ba = paired_ttest(&b, &a).unwrap();
        assert_eq!(ab.t, -ba.t);
        assert_eq!(ab.significant_95, ba.significant_95);
        assert_eq!(ab.significant_99, ba.significant_99);
    }

    #[test]
    fn diff_output_is_sorted() {
        let a = map_of(&[("q1", 0.9), ("q2", 0.2), ("q3", 0.4)]);
        let b = map_of(&[("q1", 0.1), ("q2", 0.3), ("q3", 0.4)]);
        let diffs = per_query_diff(&a, &b);
        let values: Vec<f64> = diffs.iter().map(|(d, _)| *d).collect();
        assert_eq!(values, vec![-0.09999999999999998, 0.0, 0.8]);
        let text = write_diff_tsv(&diffs);
        assert!(text.starts_with("1\t-0.100000\tq2\n"));

        // Identical inputs: all zeros; single query: single row.
        let same = per_query_diff(&a, &a);
        assert!(same.iter().all(|(d, _)| *d == 0.0));
        let one = per_query_diff(&map_of(&[("q", 1.0)]), &map_of(&[("q", 0.5)]));
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn evaluate_run_groups_and_skips() {
        let entries = vec![
            RunEntry {
                query_id: "1".into(),
                doc_id: "r1".into(),
                rank: 1,
                score: 0.9,
                tag: "t".into(),
            },
            RunEntry {
                query_id: "1".into(),
                doc_id: "n".into(),
                rank: 2,
                score: 0.8,
                tag: "t".into(),
            },
            RunEntry {
                query_id: "1".into(),
                doc_id: "r2".into(),
                rank: 3,
                score: 0.7,
                tag: "t".into(),
            },
            RunEntry {
                query_id: "2".into(),
                doc_id: "x".into(),
                rank: 1,
                score: 0.9,
                tag: "t".into(),
            },
        ];
        let mut judgments = Judgments::new();
        judgments.insert("1", "r1", 1);
        judgments.insert("1", "r2", 1);
        judgments.insert("1", "n", 0);
        // Query 2 has no relevant docs at all.
        judgments.insert("2", "x", 0);

        let report = evaluate_run(&entries, &judgments, Metric::Map, None);
        assert_eq!(report.per_query.len(), 1);
        assert!((report.per_query["1"] - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(report.skipped, vec!["2".to_string()]);
        assert_eq!(report.mean, report.per_query["1"]);
    }

    #[test]
    fn default_grid_is_pinned() {
        let grid = CvGrid::default();
        assert_eq!(
            grid.mu,
            [100.0, 500.0, 800.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 8000.0, 10000.0]
        );
        assert_eq!(grid.kappa, [0.1, 0.3, 0.5, 0.7, 0.9]);
        assert_eq!(grid.folds, 5);
    }

    #[test]
    fn summary_formatting() {
        let rows = vec![
            SummaryRow {
                relation: "none".into(),
                metric: Metric::Map,
                value: 0.25,
                pct_vs_baseline: None,
                ttest: None,
            },
            SummaryRow {
                relation: "contrast".into(),
                metric: Metric::Map,
                value: 0.275,
                pct_vs_baseline: Some(10.0),
                ttest: Some(TTest {
                    t: 3.0,
                    df: 9,
                    p_two_sided: 0.011,
                    significant_95: true,
                    significant_99: false,
                    degenerate: false,
                }),
            },
        ];
        let text = write_summary(&rows);
        assert!(text.contains("none\tmap\t0.2500\t-\t-\n"));
        assert!(text.contains("contrast\tmap\t0.2750\t+10.0%\t*\n"));
    }
}
