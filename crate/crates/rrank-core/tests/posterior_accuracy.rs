//! Quadrature-oracle checks for the Laplace machinery: the approximated
//! integrals, the tabulated posterior densities, and the rate means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrank_core::corpus::RelationLabel;
use rrank_core::selection::{
    beta_objective, beta_objective_deriv, beta_posterior_density, laplace_integral,
    rate_posterior, select_optimal, Hyperparams, Observation,
};
use rrank_testkit::quad::{log_integral_exp_neg, rate_mean_2d};

type Obs = Observation<f64>;

fn obs(pairs: &[(f64, f64)]) -> Vec<Obs> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Observation::new(RelationLabel::ALL[i], x, y).unwrap())
        .collect()
}

fn random_instance(rng: &mut ChaCha8Rng) -> Vec<Obs> {
    let n = rng.gen_range(1..=5);
    (0..n)
        .map(|i| {
            Observation::new(
                RelationLabel::ALL[i],
                rng.gen_range(0.5..20.0),
                rng.gen_range(0.0..20.0),
            )
            .unwrap()
        })
        .collect()
}

fn laplace_log_value(o: &[Obs], hp: &Hyperparams<f64>) -> f64 {
    let h = |b: f64| beta_objective(b, o, hp).unwrap();
    let h1 = |b: f64| beta_objective_deriv(b, o, hp).unwrap();
    laplace_integral(&h, &h1, None).unwrap().log_value
}

#[test]
fn laplace_single_observation_matches_quadrature() {
    let hp = Hyperparams::default();
    let o = obs(&[(1.0, 0.0)]);
    let approx = laplace_log_value(&o, &hp);
    let exact = log_integral_exp_neg(&|b| beta_objective(b, &o, &hp).unwrap(), 1e-6, 1e4);
    assert!(
        (approx - exact).abs() <= 1.02f64.ln(),
        "log values {approx} vs {exact}"
    );
}

#[test]
fn laplace_random_instances_match_quadrature() {
    let hp = Hyperparams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    for trial in 0..30 {
        let o = random_instance(&mut rng);
        let approx = laplace_log_value(&o, &hp);
        let exact =
            log_integral_exp_neg(&|b| beta_objective(b, &o, &hp).unwrap(), 1e-6, 1e4);
        assert!(
            (approx - exact).abs() <= 1.02f64.ln(),
            "trial {trial}: {approx} vs {exact} on {o:?}"
        );
    }
}

#[test]
fn beta_posterior_mean_matches_quadrature() {
    let hp = Hyperparams::default();
    let o = obs(&[(2.0, 3.0), (4.0, 1.0), (1.0, 6.5)]);
    let grid = beta_posterior_density(&o, &hp).unwrap();

    let step = grid[1].0 - grid[0].0;
    let mut mean_grid = 0.0;
    for (i, (b, d)) in grid.iter().enumerate() {
        let w = if i == 0 || i + 1 == grid.len() {
            step / 2.0
        } else {
            step
        };
        mean_grid += b * d * w;
    }

    let h = |b: f64| beta_objective(b, &o, &hp).unwrap();
    let log_mass = log_integral_exp_neg(&h, 1e-6, 1e4);
    let log_first = log_integral_exp_neg(&|b| h(b) - b.ln(), 1e-6, 1e4);
    let mean_quad = (log_first - log_mass).exp();
    assert!(
        (mean_grid - mean_quad).abs() / mean_quad < 0.02,
        "{mean_grid} vs {mean_quad}"
    );
}

#[test]
fn rate_mean_matches_2d_quadrature() {
    let hp = Hyperparams::default();
    let cases: &[&[(f64, f64)]] = &[
        &[(5.0, 3.0), (2.0, 8.0)],
        &[(1.0, 0.0), (3.0, 4.0)],
        &[(10.0, 8.0), (10.0, 1.0), (4.0, 2.5)],
    ];
    for pairs in cases {
        let o = obs(pairs);
        for j in 0..o.len() {
            let xs: Vec<f64> = o.iter().map(|v| v.query_count).collect();
            let ys: Vec<f64> = o.iter().map(|v| v.score_sum).collect();
            let lap = rate_posterior(j, &o, &hp).unwrap().mean;
            let exact = rate_mean_2d(&xs, &ys, j, hp.alpha, hp.nu, hp.phi);
            assert!(
                (lap - exact).abs() / exact < 0.02,
                "j = {j}: {lap} vs {exact} on {pairs:?}"
            );
        }
    }
}

#[test]
fn selection_order_matches_quadrature_means() {
    // Equal exposure, different scores: the posterior means must order like
    // the independent 2-D quadrature means.
    let o = obs(&[(10.0, 8.0), (10.0, 1.0)]);
    let hp = Hyperparams::default();
    let xs = [10.0, 10.0];
    let ys = [8.0, 1.0];
    let exact_a = rate_mean_2d(&xs, &ys, 0, hp.alpha, hp.nu, hp.phi);
    let exact_b = rate_mean_2d(&xs, &ys, 1, hp.alpha, hp.nu, hp.phi);
    assert!(exact_a > exact_b);

    let mean_a = rate_posterior(0, &o, &hp).unwrap().mean;
    let mean_b = rate_posterior(1, &o, &hp).unwrap().mean;
    assert!(mean_a > mean_b);
    assert_eq!(select_optimal(&o).unwrap(), o[0].relation);
}
