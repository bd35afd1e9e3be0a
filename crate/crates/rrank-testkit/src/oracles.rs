//! Brute-force metric reimplementations straight from the textbook
//! definitions, with naive recounting loops. No code is shared with the
//! library implementations.

use std::collections::BTreeMap;

/// Average precision: mean of precision-at-rank over retrieved relevant
/// documents, divided by the total number of relevant documents.
pub fn ap_oracle(ranked: &[&str], rels: &BTreeMap<String, u32>) -> Option<f64> {
    let total_relevant = rels.values().filter(|&&g| g >= 1).count();
    if total_relevant == 0 {
        return None;
    }
    let is_rel = |d: &str| rels.get(d).map(|&g| g >= 1).unwrap_or(false);
    let mut sum = 0.0;
    for i in 0..ranked.len() {
        if is_rel(ranked[i]) {
            let mut hits = 0usize;
            for r in ranked.iter().take(i + 1) {
                if is_rel(r) {
                    hits += 1;
                }
            }
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / total_relevant as f64)
}

/// Binary preference per Buckley & Voorhees, with the customary cap on the
/// count of non-relevant documents ranked above each relevant one.
pub fn bpref_oracle(ranked: &[&str], rels: &BTreeMap<String, u32>) -> Option<f64> {
    let r = rels.values().filter(|&&g| g >= 1).count();
    if r == 0 {
        return None;
    }
    let n = rels.values().filter(|&&g| g == 0).count();
    let mut sum = 0.0;
    for i in 0..ranked.len() {
        let grade = rels.get(ranked[i]);
        if !matches!(grade, Some(&g) if g >= 1) {
            continue;
        }
        if n == 0 {
            sum += 1.0;
            continue;
        }
        let mut nonrel_above = 0usize;
        for d in ranked.iter().take(i) {
            if matches!(rels.get(*d), Some(&0)) {
                nonrel_above += 1;
            }
        }
        let bound = r.min(n);
        sum += 1.0 - nonrel_above.min(bound) as f64 / bound as f64;
    }
    Some(sum / r as f64)
}

/// NDCG with gain `2^g - 1` and discount `log2(rank + 1)`, ideal ranking
/// from the judged grades sorted descending.
pub fn ndcg_oracle(
    ranked: &[&str],
    rels: &BTreeMap<String, u32>,
    cutoff: Option<usize>,
) -> Option<f64> {
    let depth = cutoff.unwrap_or(ranked.len());
    let mut grades: Vec<u32> = rels.values().copied().collect();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    if grades.first().is_none_or(|&g| g == 0) {
        return None;
    }
    let mut dcg = 0.0;
    for (i, d) in ranked.iter().enumerate() {
        if i >= depth {
            break;
        }
        let g = rels.get(*d).copied().unwrap_or(0);
        dcg += (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2();
    }
    let mut idcg = 0.0;
    for (i, &g) in grades.iter().enumerate() {
        if i >= depth {
            break;
        }
        idcg += (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2();
    }
    Some(dcg / idcg)
}
