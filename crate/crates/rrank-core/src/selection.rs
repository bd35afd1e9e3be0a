//! Bayesian inference of expected per-relation retrieval performance and the
//! optimal-relation choice, plus the randomized pooling driver.
//!
//! Per-relation retrieval scores are modeled as a Poisson-gamma hierarchy:
//! conditional on a per-relation rate, summed scores are Poisson with mean
//! rate times query count; rates are gamma with shape `alpha` and rate
//! `beta`; `beta` itself carries a gamma prior with shape `nu` and rate
//! `phi`. Marginalizing the rates leaves one-dimensional integrals over
//! `beta` that are approximated by Laplace's method, including the standard
//! second-order correction (which vanishes for quadratic objectives). All
//! density arithmetic happens in log space.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::RelationLabel;
use crate::num::{count, lit, ln_gamma};
use crate::{Real, Score};

/// Number of grid points in tabulated densities.
pub const GRID_POINTS: usize = 512;
/// Half-width of the beta grid in posterior standard deviations.
const BETA_SPAN_SIGMAS: f64 = 8.0;
/// Rate grid upper bound as a multiple of `(score_sum + alpha) / query_count`.
const RATE_SPAN_FACTOR: f64 = 8.0;
/// Convergence threshold on the objective derivative at the mode.
const NEWTON_TOL: f64 = 1e-10;
/// Mode search happens inside this interval.
const SCAN_LO: f64 = 1e-8;
const SCAN_HI: f64 = 1e8;

/// Errors from inference and score-file parsing.
#[derive(Debug, Error)]
pub enum SelectionError {
    /// At least one observation is required.
    #[error("no observations")]
    EmptyObservations,
    /// An observation violated its invariants.
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    /// The objective is only defined for positive beta.
    #[error("beta must be positive, got {0}")]
    NonPositiveBeta(String),
    /// The objective derivative never changes sign from negative to
    /// positive inside the search interval.
    #[error("objective has no interior minimum in ({SCAN_LO:e}, {SCAN_HI:e})")]
    NoInteriorMode,
    /// Something non-finite or non-convex showed up mid-computation.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// A score-file line violated its format.
    #[error("line {line}: {msg}")]
    Format {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        msg: String,
    },
    /// Pooling needs at least two query sets.
    #[error("pooling needs at least 2 query sets, got {0}")]
    TooFewQuerySets(usize),
}

/// One aggregated observation: a relation's exposure and summed score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation<R> {
    /// Relation the scores belong to.
    pub relation: RelationLabel,
    /// Number of queries contributing (positive; real-valued so weighted
    /// aggregations work too).
    pub query_count: R,
    /// Summed retrieval score over those queries (non-negative).
    pub score_sum: R,
}

impl<R: Real> Observation<R> {
    /// Builds an observation, validating `query_count > 0` and
    /// `score_sum >= 0`.
    pub fn new(
        relation: RelationLabel,
        query_count: R,
        score_sum: R,
    ) -> Result<Self, SelectionError> {
        if !(query_count > R::zero()) || !query_count.is_finite() {
            return Err(SelectionError::InvalidObservation(format!(
                "{relation}: query count {query_count} must be > 0"
            )));
        }
        if !(score_sum >= R::zero()) || !score_sum.is_finite() {
            return Err(SelectionError::InvalidObservation(format!(
                "{relation}: score sum {score_sum} must be >= 0"
            )));
        }
        Ok(Observation {
            relation,
            query_count,
            score_sum,
        })
    }
}

/// Hierarchy hyperparameters. The defaults are fixed and untuned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams<R> {
    /// Shape of the gamma distribution over per-relation rates.
    pub alpha: R,
    /// Shape of the gamma prior on beta.
    pub nu: R,
    /// Rate of the gamma prior on beta.
    pub phi: R,
}

impl<R: Real> Default for Hyperparams<R> {
    fn default() -> Self {
        Hyperparams {
            alpha: lit(1.8),
            nu: lit(0.1),
            phi: lit(1.0),
        }
    }
}

fn validate_obs<R: Real>(obs: &[Observation<R>]) -> Result<(), SelectionError> {
    if obs.is_empty() {
        return Err(SelectionError::EmptyObservations);
    }
    for o in obs {
        Observation::new(o.relation, o.query_count, o.score_sum)?;
    }
    Ok(())
}

// h(beta) without domain checks; callers keep beta > 0.
fn objective_raw<R: Real>(beta: R, obs: &[Observation<R>], hp: &Hyperparams<R>) -> R {
    let n = count::<R>(obs.len());
    let c = n * hp.alpha + hp.nu - R::one();
    let mut acc = hp.phi * beta - c * beta.ln();
    for o in obs {
        acc += (o.score_sum + hp.alpha) * (o.query_count + beta).ln();
    }
    acc
}

fn objective_d1_raw<R: Real>(beta: R, obs: &[Observation<R>], hp: &Hyperparams<R>) -> R {
    let n = count::<R>(obs.len());
    let c = n * hp.alpha + hp.nu - R::one();
    let mut acc = hp.phi - c / beta;
    for o in obs {
        acc += (o.score_sum + hp.alpha) / (o.query_count + beta);
    }
    acc
}

fn objective_d2_raw<R: Real>(beta: R, obs: &[Observation<R>], hp: &Hyperparams<R>) -> R {
    let n = count::<R>(obs.len());
    let c = n * hp.alpha + hp.nu - R::one();
    let mut acc = c / (beta * beta);
    for o in obs {
        let d = o.query_count + beta;
        acc = acc - (o.score_sum + hp.alpha) / (d * d);
    }
    acc
}

fn check_beta<R: Real>(beta: R) -> Result<(), SelectionError> {
    if !(beta > R::zero()) {
        return Err(SelectionError::NonPositiveBeta(format!("{beta}")));
    }
    Ok(())
}

/// Negative log of the unnormalized marginal density of `beta`:
/// `phi*beta - (n*alpha + nu - 1)*ln(beta) + sum_j (y_j + alpha)*ln(x_j + beta)`
/// with `n` the number of observed relations.
pub fn beta_objective<R: Real>(
    beta: R,
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<R, SelectionError> {
    validate_obs(obs)?;
    check_beta(beta)?;
    Ok(objective_raw(beta, obs, hp))
}

/// Analytic first derivative of [`beta_objective`] in `beta`.
pub fn beta_objective_deriv<R: Real>(
    beta: R,
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<R, SelectionError> {
    validate_obs(obs)?;
    check_beta(beta)?;
    Ok(objective_d1_raw(beta, obs, hp))
}

/// Same objective with relation `j` held out and its rate `lambda` pinned:
/// `(phi + lambda)*beta - (n*alpha + nu - 1)*ln(beta)
///  + sum_{i != j} (y_i + alpha)*ln(x_i + beta)`.
///
/// `n` stays the full observation count.
pub fn beta_objective_excluding<R: Real>(
    j: usize,
    lambda: R,
    beta: R,
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<R, SelectionError> {
    validate_obs(obs)?;
    check_beta(beta)?;
    if j >= obs.len() {
        return Err(SelectionError::InvalidObservation(format!(
            "index {j} out of range for {} observations",
            obs.len()
        )));
    }
    let hp_shifted = Hyperparams {
        phi: hp.phi + lambda,
        ..*hp
    };
    let held_out: Vec<Observation<R>> = held_out(obs, j);
    let n_full = count::<R>(obs.len());
    let n_used = count::<R>(held_out.len());
    // objective_raw uses |obs| for the log-beta coefficient; compensate for
    // the held-out relation so the coefficient keeps the full n.
    let correction = (n_full - n_used) * hp.alpha * beta.ln();
    Ok(objective_raw(beta, &held_out, &hp_shifted) - correction)
}

fn held_out<R: Real>(obs: &[Observation<R>], j: usize) -> Vec<Observation<R>> {
    obs.iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, o)| *o)
        .collect()
}

/// Result of a Laplace approximation to `∫ exp(-h(beta)) dbeta` over
/// `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Laplace<R> {
    /// Interior minimizer of `h`.
    pub mode: R,
    /// Log of the approximate integral; safe against under/overflow.
    pub log_value: R,
    /// `exp(log_value)`; may underflow to 0 or overflow for extreme
    /// objectives, use `log_value` for ratios.
    pub value: R,
}

/// Laplace approximation to `∫ exp(-h) dbeta`.
///
/// The mode is located by safeguarded Newton iteration on `h_prime`
/// (bisection fallback inside a sign-change bracket found on a geometric
/// scan of `(1e-8, 1e8)`). The Gaussian value
/// `exp(-h(mode)) * sqrt(2*pi / h''(mode))` is multiplied by the standard
/// second-order factor `1 - h''''/(8 h''^2) + 5 h'''^2/(24 h''^3)`, which is
/// exactly 1 for quadratic `h`. `h''` comes from `h_second` when supplied,
/// else central differences of `h_prime` with step `1e-5 * max(1, mode)`.
pub fn laplace_integral<R: Real>(
    h: &dyn Fn(R) -> R,
    h_prime: &dyn Fn(R) -> R,
    h_second: Option<&dyn Fn(R) -> R>,
) -> Result<Laplace<R>, SelectionError> {
    let fd_second = |x: R| {
        let s = lit::<R>(1e-5) * x.abs().max(R::one());
        (h_prime(x + s) - h_prime(x - s)) / (lit::<R>(2.0) * s)
    };
    let second = |x: R| match h_second {
        Some(f) => f(x),
        None => fd_second(x),
    };

    // Bracket a minimum: h' goes from negative to non-negative.
    let mut bracket: Option<(R, R)> = None;
    let mut prev: Option<(R, R)> = None;
    let mut x = lit::<R>(SCAN_LO);
    let hi = lit::<R>(SCAN_HI);
    let ten = lit::<R>(10.0);
    while x <= hi * lit::<R>(1.000001) {
        let fx = h_prime(x);
        if !fx.is_finite() {
            return Err(SelectionError::NumericalFailure(format!(
                "h' not finite at beta = {x}"
            )));
        }
        if let Some((px, pfx)) = prev {
            if pfx < R::zero() && fx >= R::zero() {
                bracket = Some((px, x));
                break;
            }
        }
        prev = Some((x, fx));
        x = x * ten;
    }
    let (mut a, mut b) = bracket.ok_or(SelectionError::NoInteriorMode)?;

    let tol = lit::<R>(NEWTON_TOL);
    let four_eps = R::epsilon() * lit::<R>(4.0);
    let mut x = (a * b).sqrt();
    for _ in 0..200 {
        let f = h_prime(x);
        if f.abs() < tol {
            break;
        }
        if f < R::zero() {
            a = x;
        } else {
            b = x;
        }
        if b - a <= four_eps * x.abs().max(R::one()) {
            break;
        }
        let d2 = second(x);
        let newton = x - f / d2;
        x = if d2 > R::zero() && newton > a && newton < b {
            newton
        } else if b / a > lit::<R>(4.0) {
            (a * b).sqrt()
        } else {
            (a + b) / lit::<R>(2.0)
        };
    }
    let mode = x;
    let d2 = second(mode);
    if !(d2 > R::zero()) || !d2.is_finite() {
        return Err(SelectionError::NumericalFailure(format!(
            "h'' = {d2} at mode {mode} is not positive"
        )));
    }

    // Second-order factor from the third and fourth derivatives, probed at
    // a hundredth of the posterior standard deviation.
    let sigma = d2.sqrt().recip();
    let probe = (lit::<R>(0.01) * sigma).min(mode / lit::<R>(8.0));
    let corr = if probe > R::zero() {
        let d2p = second(mode + probe);
        let d2m = second(mode - probe);
        let d3 = (d2p - d2m) / (lit::<R>(2.0) * probe);
        let d4 = (d2p - lit::<R>(2.0) * d2 + d2m) / (probe * probe);
        let c = R::one() - d4 / (lit::<R>(8.0) * d2 * d2)
            + lit::<R>(5.0) * d3 * d3 / (lit::<R>(24.0) * d2 * d2 * d2);
        if c.is_finite() && c > lit::<R>(0.5) && c < lit::<R>(2.0) {
            c
        } else {
            R::one()
        }
    } else {
        R::one()
    };

    let two_pi = lit::<R>(2.0 * std::f64::consts::PI);
    let log_value = -h(mode) + (two_pi / d2).ln() / lit::<R>(2.0) + corr.ln();
    Ok(Laplace {
        mode,
        log_value,
        value: log_value.exp(),
    })
}

fn laplace_beta<R: Real>(
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<Laplace<R>, SelectionError> {
    laplace_integral(
        &|b| objective_raw(b, obs, hp),
        &|b| objective_d1_raw(b, obs, hp),
        Some(&|b| objective_d2_raw(b, obs, hp)),
    )
}

fn trapezoid_weights<R: Real>(len: usize, step: R) -> impl Fn(usize) -> R {
    let half = step / lit::<R>(2.0);
    move |i| {
        if i == 0 || i + 1 == len {
            half
        } else {
            step
        }
    }
}

/// Tabulated posterior density of `beta` on a 512-point grid spanning the
/// mode plus/minus 8 posterior standard deviations, clipped to positive
/// `beta`. The grid is renormalized so its trapezoid integral is 1.
pub fn beta_posterior_density<R: Real>(
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<Vec<(R, R)>, SelectionError> {
    validate_obs(obs)?;
    let lap = laplace_beta(obs, hp)?;
    let sigma = objective_d2_raw(lap.mode, obs, hp).sqrt().recip();
    let span = lit::<R>(BETA_SPAN_SIGMAS) * sigma;
    let lo = (lap.mode - span).max(lap.mode * lit::<R>(1e-9));
    let hi = lap.mode + span;
    let step = (hi - lo) / count::<R>(GRID_POINTS - 1);
    let h_mode = objective_raw(lap.mode, obs, hp);

    let grid: Vec<R> = (0..GRID_POINTS)
        .map(|i| lo + step * count::<R>(i))
        .collect();
    let values: Vec<R> = grid
        .iter()
        .map(|&b| (h_mode - objective_raw(b, obs, hp)).exp())
        .collect();
    let w = trapezoid_weights(GRID_POINTS, step);
    let total: R = values
        .iter()
        .enumerate()
        .fold(R::zero(), |acc, (i, &v)| acc + v * w(i));
    if !(total > R::zero()) || !total.is_finite() {
        return Err(SelectionError::NumericalFailure(
            "beta density mass is not positive".into(),
        ));
    }
    Ok(grid
        .into_iter()
        .zip(values)
        .map(|(b, v)| (b, v / total))
        .collect())
}

/// Posterior summary for one relation's rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePosterior<R> {
    /// Relation the posterior describes.
    pub relation: RelationLabel,
    /// Posterior mean of the rate (trapezoid mean of the grid).
    pub mean: R,
    /// Tabulated (rate, density) grid; trapezoid integral is 1.
    pub density: Vec<(R, R)>,
}

/// Posterior density and mean of relation `j`'s rate.
///
/// The density at each grid rate combines the gamma kernel of the held-out
/// relation with Laplace approximations of the held-out and full beta
/// integrals, all in log space. The grid starts from the span
/// `(0, 8 * (y_j + alpha) / x_j]` and is tightened (up to twice) to the
/// region actually carrying mass, so coarse tails cannot bias the mean.
pub fn rate_posterior<R: Real>(
    j: usize,
    obs: &[Observation<R>],
    hp: &Hyperparams<R>,
) -> Result<RatePosterior<R>, SelectionError> {
    validate_obs(obs)?;
    if j >= obs.len() {
        return Err(SelectionError::InvalidObservation(format!(
            "index {j} out of range for {} observations",
            obs.len()
        )));
    }
    let x = obs[j].query_count;
    let shape = obs[j].score_sum + hp.alpha;
    let log_gamma_shape = ln_gamma(shape);
    let lap_full = laplace_beta(obs, hp)?;

    let rest = held_out(obs, j);
    let n_gap = count::<R>(obs.len()) - count::<R>(rest.len());
    let log_numerator = |lambda: R| -> Result<R, SelectionError> {
        let hp_shifted = Hyperparams {
            phi: hp.phi + lambda,
            ..*hp
        };
        // Keep the full-n log-beta coefficient (see beta_objective_excluding).
        let lap = laplace_integral(
            &|b: R| objective_raw(b, &rest, &hp_shifted) - n_gap * hp.alpha * b.ln(),
            &|b: R| objective_d1_raw(b, &rest, &hp_shifted) - n_gap * hp.alpha / b,
            Some(&|b: R| {
                objective_d2_raw(b, &rest, &hp_shifted) + n_gap * hp.alpha / (b * b)
            }),
        )?;
        Ok((shape - R::one()) * lambda.ln() - lambda * x + lap.log_value
            - log_gamma_shape
            - lap_full.log_value)
    };

    let spec_hi = lit::<R>(RATE_SPAN_FACTOR) * shape / x;
    let mut hi = spec_hi;
    let mut tabulated: Option<(Vec<R>, Vec<R>, R)> = None;
    for _pass in 0..3 {
        let step = hi / count::<R>(GRID_POINTS);
        let grid: Vec<R> = (1..=GRID_POINTS).map(|i| step * count::<R>(i)).collect();
        let log_rho = grid
            .iter()
            .map(|&l| log_numerator(l))
            .collect::<Result<Vec<R>, _>>()?;
        let max_log = log_rho
            .iter()
            .fold(R::neg_infinity(), |m, &v| if v > m { v } else { m });
        if !max_log.is_finite() {
            return Err(SelectionError::NumericalFailure(
                "rate density is zero everywhere on the grid".into(),
            ));
        }
        let values: Vec<R> = log_rho.iter().map(|&v| (v - max_log).exp()).collect();
        let w = trapezoid_weights(GRID_POINTS, step);
        let mut mass = R::zero();
        let mut first = R::zero();
        let mut second = R::zero();
        for (i, (&l, &v)) in grid.iter().zip(&values).enumerate() {
            let wv = v * w(i);
            mass += wv;
            first += l * wv;
            second += l * l * wv;
        }
        if !(mass > R::zero()) {
            return Err(SelectionError::NumericalFailure(
                "rate density mass is not positive".into(),
            ));
        }
        let mean = first / mass;
        let var = (second / mass - mean * mean).max(R::zero());
        let spread = mean + lit::<R>(12.0) * var.sqrt();
        tabulated = Some((grid, values.iter().map(|&v| v / mass).collect(), mean));
        if spread >= hi * lit::<R>(0.98) || spread <= R::zero() {
            break;
        }
        hi = spread.min(spec_hi);
    }
    let (grid, density, mean) = tabulated.expect("at least one tabulation pass");
    Ok(RatePosterior {
        relation: obs[j].relation,
        mean,
        density: grid.into_iter().zip(density).collect(),
    })
}

/// Picks the relation with the largest posterior mean rate under the
/// default hyperparameters. Ties go to the lexicographically smallest
/// label. Observations must cover distinct relations.
pub fn select_optimal<R: Real>(obs: &[Observation<R>]) -> Result<RelationLabel, SelectionError> {
    validate_obs(obs)?;
    let mut seen = BTreeSet::new();
    for o in obs {
        if !seen.insert(o.relation) {
            return Err(SelectionError::InvalidObservation(format!(
                "relation {} observed twice",
                o.relation
            )));
        }
    }
    let hp = Hyperparams::default();
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by_key(|&i| obs[i].relation);
    let means: Vec<(RelationLabel, R)> = order
        .par_iter()
        .map(|&i| rate_posterior(i, obs, &hp).map(|p| (p.relation, p.mean)))
        .collect::<Result<_, _>>()?;
    let mut best = means[0];
    for &(relation, mean) in &means[1..] {
        if mean > best.1 {
            best = (relation, mean);
        }
    }
    Ok(best.0)
}

/// Per-query retrieval scores for one query set, keyed by relation then
/// query id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    per_relation: BTreeMap<RelationLabel, BTreeMap<String, Score>>,
}

impl ScoreSet {
    /// Creates an empty score set.
    pub fn new() -> Self {
        ScoreSet::default()
    }

    /// Records a score; duplicate (relation, query) pairs are rejected.
    pub fn insert(
        &mut self,
        relation: RelationLabel,
        query_id: impl Into<String>,
        score: Score,
    ) -> Result<(), SelectionError> {
        if !score.is_finite() || score < 0.0 {
            return Err(SelectionError::InvalidObservation(format!(
                "score {score} must be finite and >= 0"
            )));
        }
        let qid = query_id.into();
        if self
            .per_relation
            .entry(relation)
            .or_default()
            .insert(qid.clone(), score)
            .is_some()
        {
            return Err(SelectionError::InvalidObservation(format!(
                "duplicate score for ({relation}, {qid})"
            )));
        }
        Ok(())
    }

    /// Relations present.
    pub fn relations(&self) -> impl Iterator<Item = RelationLabel> + '_ {
        self.per_relation.keys().copied()
    }

    /// Union of query ids across relations, sorted.
    pub fn query_ids(&self) -> Vec<String> {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        for per_q in self.per_relation.values() {
            ids.extend(per_q.keys().map(String::as_str));
        }
        ids.into_iter().map(str::to_string).collect()
    }

    /// Score of a (relation, query) pair.
    pub fn get(&self, relation: RelationLabel, query_id: &str) -> Option<Score> {
        self.per_relation.get(&relation)?.get(query_id).copied()
    }

    /// True when no scores are recorded.
    pub fn is_empty(&self) -> bool {
        self.per_relation.is_empty()
    }
}

/// Parses `<relation><TAB><qid><TAB><score>` lines.
pub fn parse_score_set(text: &str) -> Result<ScoreSet, SelectionError> {
    let mut set = ScoreSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(SelectionError::Format {
                line: line_no,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let relation: RelationLabel = fields[0].parse().map_err(|e| SelectionError::Format {
            line: line_no,
            msg: format!("{e}"),
        })?;
        if fields[1].is_empty() {
            return Err(SelectionError::Format {
                line: line_no,
                msg: "empty query id".into(),
            });
        }
        let score: Score = fields[2].parse().map_err(|_| SelectionError::Format {
            line: line_no,
            msg: format!("bad score `{}`", fields[2]),
        })?;
        set.insert(relation, fields[1], score)
            .map_err(|e| SelectionError::Format {
                line: line_no,
                msg: format!("{e}"),
            })?;
    }
    Ok(set)
}

/// Serializes a score set in the `<relation><TAB><qid><TAB><score>` format,
/// relations then query ids in sorted order.
pub fn write_score_set(set: &ScoreSet) -> String {
    let mut out = String::new();
    for (relation, per_q) in &set.per_relation {
        for (qid, score) in per_q {
            out.push_str(&format!("{relation}\t{qid}\t{score:.6}\n"));
        }
    }
    out
}

/// Aggregates full (unpooled) observations over every query of every set:
/// per relation, the query count and summed score.
pub fn aggregate_observations(sets: &[ScoreSet]) -> Vec<Observation<Score>> {
    let mut acc: BTreeMap<RelationLabel, (usize, Score)> = BTreeMap::new();
    for set in sets {
        for (relation, per_q) in &set.per_relation {
            let entry = acc.entry(*relation).or_insert((0, 0.0));
            for score in per_q.values() {
                entry.0 += 1;
                entry.1 += score;
            }
        }
    }
    acc.into_iter()
        .filter(|(_, (count, _))| *count > 0)
        .map(|(relation, (count, sum))| Observation {
            relation,
            query_count: count as Score,
            score_sum: sum,
        })
        .collect()
}

/// Draws `repeats` pooled observation sets: per repeat, half of each query
/// set (rounded up) is sampled without replacement, deterministically from
/// `seed`, and the sampled scores are aggregated per relation.
pub fn pool_observations(
    sets: &[ScoreSet],
    seed: u64,
    repeats: usize,
) -> Result<Vec<Vec<Observation<Score>>>, SelectionError> {
    if sets.len() < 2 {
        return Err(SelectionError::TooFewQuerySets(sets.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut acc: BTreeMap<RelationLabel, (usize, Score)> = BTreeMap::new();
        for set in sets {
            let mut qids = set.query_ids();
            qids.shuffle(&mut rng);
            let take = qids.len().div_ceil(2);
            let mut sampled: Vec<String> = qids.into_iter().take(take).collect();
            sampled.sort();
            for relation in set.relations() {
                for qid in &sampled {
                    if let Some(score) = set.get(relation, qid) {
                        let entry = acc.entry(relation).or_insert((0, 0.0));
                        entry.0 += 1;
                        entry.1 += score;
                    }
                }
            }
        }
        pools.push(
            acc.into_iter()
                .filter(|(_, (count, _))| *count > 0)
                .map(|(relation, (count, sum))| Observation {
                    relation,
                    query_count: count as Score,
                    score_sum: sum,
                })
                .collect(),
        );
    }
    Ok(pools)
}

/// Runs the full pooling driver: `repeats` rounds of 50/50 sampling, each
/// followed by optimal-relation selection. Deterministic given the seed.
pub fn pooled_selection(
    sets: &[ScoreSet],
    seed: u64,
    repeats: usize,
) -> Result<Vec<RelationLabel>, SelectionError> {
    pool_observations(sets, seed, repeats)?
        .iter()
        .map(|obs| select_optimal(obs))
        .collect()
}

/// Serializes a tabulated density as `value<TAB>density` lines with a
/// header.
pub fn write_density_tsv(density: &[(Score, Score)]) -> String {
    let mut out = String::from("lambda\tdensity\n");
    for (x, d) in density {
        out.push_str(&format!("{x:.6e}\t{d:.6e}\n"));
    }
    out
}
