//! Quadrature oracles: adaptive Simpson integration and brute-force
//! posterior means for the Poisson-gamma hierarchy.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fb, fm) = (f(a), f(b), f(m));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// Log of `∫ exp(-h(x)) dx` over `(lo, hi)`.
///
/// The domain is split into geometric panels so a narrow peak anywhere in
/// the range is found; the integrand is shifted by the minimum of `h` seen
/// on a dense scan so the arithmetic stays in range.
pub fn log_integral_exp_neg(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    assert!(lo > 0.0 && hi > lo);
    let edges: Vec<f64> = {
        let n = 400;
        let ratio = (hi / lo).ln();
        (0..=n).map(|i| lo * (ratio * i as f64 / n as f64).exp()).collect()
    };
    let h_min = edges
        .iter()
        .map(|&x| h(x))
        .fold(f64::INFINITY, f64::min);
    let g = |x: f64| (-(h(x) - h_min)).exp();
    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += adaptive_simpson(&g, pair[0], pair[1], 1e-12);
    }
    total.ln() - h_min
}

/// Log of the beta-marginal integrand minimum statistics used by the 2-D
/// posterior mean below.
#[allow(clippy::too_many_arguments)]
fn log_joint_rate_beta(
    lambda: f64,
    beta: f64,
    xs: &[f64],
    ys: &[f64],
    j: usize,
    alpha: f64,
    nu: f64,
    phi: f64,
) -> f64 {
    let n = xs.len() as f64;
    let c = n * alpha + nu - 1.0;
    let shape = ys[j] + alpha;
    let mut acc = (shape - 1.0) * lambda.ln() - lambda * (xs[j] + beta) + c * beta.ln()
        - phi * beta;
    for i in 0..xs.len() {
        if i != j {
            acc -= (ys[i] + alpha) * (xs[i] + beta).ln();
        }
    }
    acc
}

/// Brute-force 2-D posterior mean of relation `j`'s rate: trapezoid
/// quadrature over a (rate, beta) grid, independent of any Laplace
/// machinery.
pub fn rate_mean_2d(xs: &[f64], ys: &[f64], j: usize, alpha: f64, nu: f64, phi: f64) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let c = n * alpha + nu - 1.0;
    // Locate the beta bulk from the marginal objective's stationary point.
    let h1 = |b: f64| {
        phi - c / b
            + xs.iter()
                .zip(ys)
                .map(|(&x, &y)| (y + alpha) / (x + b))
                .sum::<f64>()
    };
    let (mut a, mut b): (f64, f64) = (1e-10, 1e10);
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if h1(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let beta_mode = (a * b).sqrt();
    let h2 = {
        let s = 1e-6 * beta_mode;
        (h1(beta_mode + s) - h1(beta_mode - s)) / (2.0 * s)
    };
    let sigma = if h2 > 0.0 {
        h2.sqrt().recip()
    } else {
        beta_mode
    };
    let beta_lo = (beta_mode - 10.0 * sigma).max(beta_mode * 1e-6);
    let beta_hi = beta_mode + 10.0 * sigma;

    let shape = ys[j] + alpha;
    let lambda_hi = 12.0 * shape / xs[j];
    let nb = 600;
    let nl = 600;
    let betas: Vec<f64> = (0..=nb)
        .map(|i| beta_lo + (beta_hi - beta_lo) * i as f64 / nb as f64)
        .collect();
    let lambdas: Vec<f64> = (1..=nl).map(|i| lambda_hi * i as f64 / nl as f64).collect();

    // One pass for the max, one for the shifted sums.
    let mut max_log = f64::NEG_INFINITY;
    for &l in &lambdas {
        for &bv in &betas {
            let v = log_joint_rate_beta(l, bv, xs, ys, j, alpha, nu, phi);
            if v > max_log {
                max_log = v;
            }
        }
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (li, &l) in lambdas.iter().enumerate() {
        let wl = if li == 0 || li + 1 == lambdas.len() { 0.5 } else { 1.0 };
        for (bi, &bv) in betas.iter().enumerate() {
            let wb = if bi == 0 || bi + 1 == betas.len() { 0.5 } else { 1.0 };
            let w = wl * wb
                * (log_joint_rate_beta(l, bv, xs, ys, j, alpha, nu, phi) - max_log).exp();
            num += l * w;
            den += w;
        }
    }
    num / den
}
