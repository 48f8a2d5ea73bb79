//! Independent oracles: multiprecision series and Taylor stepping for the
//! special functions, spectral collocation for the Painlevé II transcendent,
//! direct dense sampling for the ensembles, and property tests.

use gapprob::ensembles::{
    empirical_gap_soft, sample_eigenvalues_trial, sample_tridiagonal, EnsembleSpec,
};
use gapprob::fredholm::fredholm_det;
use gapprob::gap::{gap_soft, Route};
use gapprob::operators::sine_kernel;
use gapprob::painleve::solve_pii_q;
use gapprob::specfun::{airy_ai, airy_ai_prime, bessel_j, gamma_fn, sinc_pi};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rug::Float;

const PREC: u32 = 512;

fn fl(x: f64) -> Float {
    Float::with_val(PREC, x)
}

/// `Ai(0)` and `Ai'(0)` from the gamma function.
fn airy_origin() -> (Float, Float) {
    let third = Float::with_val(PREC, 1) / 3u32;
    let two_thirds = Float::with_val(PREC, 2) / 3u32;
    let ln3 = fl(3.0).ln();
    let ai0 = (-Float::with_val(PREC, &two_thirds * &ln3)).exp()
        / Float::with_val(PREC, two_thirds.gamma_ref());
    let aip0 =
        -(-Float::with_val(PREC, &third * &ln3)).exp() / Float::with_val(PREC, third.gamma_ref());
    (ai0, aip0)
}

/// Maclaurin series of `y'' = x y` through the Airy data at the origin.
fn airy_maclaurin(x: f64) -> f64 {
    let (a0, a1) = airy_origin();
    let x = fl(x);
    let mut coeffs = vec![a0, a1, fl(0.0)];
    let mut sum = fl(0.0);
    let mut power = fl(1.0);
    let mut recent = [fl(1.0), fl(1.0), fl(1.0)];
    let mut n = 0usize;
    loop {
        if n >= 3 {
            let c = Float::with_val(PREC, &coeffs[n - 3] / ((n * (n - 1)) as u32));
            coeffs.push(c);
        }
        let term = Float::with_val(PREC, &coeffs[n] * &power);
        sum += &term;
        power *= &x;
        recent[n % 3] = term.abs();
        n += 1;
        if n > 30 && recent.iter().all(|t| *t < 1e-60) {
            break;
        }
    }
    sum.to_f64()
}

/// Propagate `(Ai, Ai')` from the origin to `target` by Taylor steps of `y'' = x y`.
fn airy_taylor_stepped(target: f64) -> (f64, f64) {
    let (mut y, mut yp) = airy_origin();
    let steps = (target.abs() / 0.25).ceil() as usize;
    let h = fl(target / steps as f64);
    let mut x0 = fl(0.0);
    for _ in 0..steps {
        let mut c = vec![
            y.clone(),
            yp.clone(),
            Float::with_val(PREC, &x0 * &y) / 2u32,
        ];
        for n in 0..78usize {
            let next =
                (Float::with_val(PREC, &x0 * &c[n + 1]) + &c[n]) / (((n + 3) * (n + 2)) as u32);
            c.push(next);
        }
        let mut value = fl(0.0);
        let mut slope = fl(0.0);
        for (n, cn) in c.iter().enumerate().rev() {
            value = value * &h + cn;
            if n > 0 {
                slope = slope * &h + Float::with_val(PREC, cn * (n as u32));
            }
        }
        y = value;
        yp = slope;
        x0 += &h;
    }
    (y.to_f64(), yp.to_f64())
}

/// Power series of `J_nu(x)` in multiprecision.
fn bessel_series(nu: f64, x: f64) -> f64 {
    let prec = 1024;
    let half = Float::with_val(prec, x) / 2u32;
    let nu_f = Float::with_val(prec, nu);
    let lead = Float::with_val(prec, half.ln_ref()) * &nu_f;
    let mut term =
        lead.exp() / Float::with_val(prec, Float::with_val(prec, &nu_f + 1u32).gamma_ref());
    let q = Float::with_val(prec, &half * &half);
    let mut sum = Float::with_val(prec, &term);
    for k in 1..2000u32 {
        term = -term * &q / Float::with_val(prec, Float::with_val(prec, &nu_f + k) * k);
        sum += &term;
        if k as f64 > x && term.clone().abs() < 1e-40 {
            break;
        }
    }
    sum.to_f64()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn airy_matches_multiprecision_series() {
    for i in 0..=100 {
        let x = -15.0 + 0.25 * i as f64;
        let exact = airy_maclaurin(x);
        let got = airy_ai(x).unwrap();
        assert!(
            (got - exact).abs() <= 1e-12f64.max(1e-12 * exact.abs()) * 10.0,
            "x = {x}: {got} vs {exact}"
        );
    }
}

#[test]
fn airy_first_zero_by_bisection() {
    let (mut lo, mut hi) = (-2.4, -2.3);
    assert!(airy_maclaurin(lo).signum() != airy_maclaurin(hi).signum());
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if airy_maclaurin(mid).signum() == airy_maclaurin(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zero = 0.5 * (lo + hi);
    assert!((zero + 2.338_107_410_459_767).abs() < 1e-12);
    assert!(airy_ai(zero).unwrap().abs() < 1e-10);
}

#[test]
fn airy_matches_taylor_stepped_ode() {
    let (ai10, _) = airy_taylor_stepped(10.0);
    assert!(
        rel_err(airy_ai(10.0).unwrap(), ai10) < 1e-10,
        "{} vs {ai10}",
        airy_ai(10.0).unwrap()
    );
    let (_, aip5) = airy_taylor_stepped(5.0);
    assert!(rel_err(airy_ai_prime(5.0).unwrap(), aip5) < 1e-10);
    let (ai_m7, aip_m7) = airy_taylor_stepped(-7.0);
    assert!((airy_ai(-7.0).unwrap() - ai_m7).abs() < 1e-12);
    assert!((airy_ai_prime(-7.0).unwrap() - aip_m7).abs() < 1e-11);
    // the two oracles agree with each other
    assert!(rel_err(airy_maclaurin(3.0), airy_taylor_stepped(3.0).0) < 1e-14);
}

#[test]
fn bessel_matches_multiprecision_series() {
    for nu in [-0.5, -0.25, 0.0, 0.5, 1.0, 2.5, 7.0, 13.3, 20.0] {
        for x in [1e-3, 0.5, 3.0, 10.0, 27.5, 60.0, 100.0] {
            let exact = bessel_series(nu, x);
            let got = bessel_j(nu, x).unwrap();
            let err = (got - exact).abs();
            assert!(
                err < 1e-10 || err < 1e-10 * exact.abs(),
                "nu = {nu}, x = {x}: {got} vs {exact}"
            );
        }
    }
}

#[test]
fn gamma_matches_multiprecision() {
    for i in 1..=100 {
        let x = 0.5 * i as f64 - 0.37;
        if x <= 0.0 {
            continue;
        }
        let exact = Float::with_val(PREC, fl(x).gamma_ref()).to_f64();
        assert!(rel_err(gamma_fn(x).unwrap(), exact) < 1e-12, "x = {x}");
    }
}

fn chebyshev(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let x: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let c = |j: usize| {
        (if j == 0 || j == n { 2.0 } else { 1.0 }) * if j.is_multiple_of(2) { 1.0 } else { -1.0 }
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    (x, d)
}

fn barycentric(x: &[f64], f: &[f64], t: f64) -> f64 {
    let n = x.len() - 1;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..=n {
        if (t - x[j]).abs() < 1e-15 {
            return f[j];
        }
        let w = (if j == 0 || j == n { 0.5 } else { 1.0 }) * if j % 2 == 0 { 1.0 } else { -1.0 };
        num += w / (t - x[j]) * f[j];
        den += w / (t - x[j]);
    }
    num / den
}

#[test]
fn painleve_ii_matches_chebyshev_collocation() {
    // q'' = s q + 2 q^3 on [-6, 6] with q ~ sqrt(xi) Ai at the right end
    let xi: f64 = 0.25;
    let k = xi.sqrt();
    let (lo, hi) = (-6.0, 6.0);
    let (centre, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let n = 96;
    let (x, d) = chebyshev(n);
    let s: Vec<f64> = x.iter().map(|&t| centre + half * t).collect();
    let d1 = &d / half;
    let d2 = &d1 * &d1;
    let (ai, aip) = airy_taylor_stepped(hi);
    let mut q = DVector::from_iterator(n + 1, s.iter().map(|&v| k * airy_ai(v).unwrap()));
    for _ in 0..30 {
        let lap = &d2 * &q;
        let mut f = DVector::zeros(n + 1);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        f[0] = q[0] - k * ai;
        jac[(0, 0)] = 1.0;
        f[n] = (d1.row(0) * &q)[0] - k * aip;
        jac.row_mut(n).copy_from(&d1.row(0));
        for i in 1..n {
            f[i] = lap[i] - s[i] * q[i] - 2.0 * q[i].powi(3);
            jac.row_mut(i).copy_from(&d2.row(i));
            jac[(i, i)] -= s[i] + 6.0 * q[i] * q[i];
        }
        let step = jac
            .lu()
            .solve(&f)
            .expect("nonsingular collocation Jacobian");
        q -= &step;
        if step.amax() < 1e-14 {
            break;
        }
    }
    let sol = solve_pii_q(xi, lo, hi).unwrap();
    let values: Vec<f64> = q.iter().copied().collect();
    let mut worst: f64 = 0.0;
    for target in [-6.0, -4.5, -3.0, -1.0, 0.0, 2.0, 5.0] {
        let idx = sol
            .grid
            .iter()
            .position(|&g| (g - target).abs() < 1e-12)
            .unwrap();
        let colloc = barycentric(&x, &values, (target - centre) / half);
        worst = worst.max((sol.values[idx] - colloc).abs());
    }
    assert!(worst < 1e-7, "max deviation {worst:e}");
}

#[test]
fn gue_two_by_two_largest_eigenvalue() {
    // for exp(-tr H^2), lambda_max - mean = |(X, Y, Z)| with X, Y, Z ~ N(0, 1/4)
    let expected = (2.0 / std::f64::consts::PI).sqrt();
    let spec = EnsembleSpec::gaussian(2, 2, 17);
    let trials = 100_000u64;
    let samples: Vec<f64> = (0..trials)
        .map(|k| sample_eigenvalues_trial(&spec, k).unwrap()[1])
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let sigma = (var / trials as f64).sqrt();
    assert!(
        (mean - expected).abs() < 3.0 * sigma,
        "{mean} vs {expected} (sigma {sigma})"
    );

    // direct dense sampling of the same ensemble
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let diag = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let off = Normal::new(0.0, 0.5).unwrap();
    let mut dense = 0.0;
    for _ in 0..trials {
        let (h11, h22) = (diag.sample(&mut rng), diag.sample(&mut rng));
        let (re, im) = (off.sample(&mut rng), off.sample(&mut rng));
        dense += 0.5 * (h11 + h22) + (0.25 * (h11 - h22).powi(2) + re * re + im * im).sqrt();
    }
    dense /= trials as f64;
    assert!((dense - mean).abs() < 4.0 * sigma, "{dense} vs {mean}");
}

#[test]
fn gue_density_is_semicircle() {
    let n = 500;
    let spec = EnsembleSpec::gaussian(2, n, 23);
    let bins = 20;
    let radius = (2.0 * n as f64).sqrt();
    let edges: Vec<f64> = (0..=bins)
        .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
        .collect();
    let mut counts = vec![0usize; bins];
    let samples = 200;
    for k in 0..samples {
        let t = sample_tridiagonal(&spec, &mut spec.rng(k));
        let below: Vec<usize> = edges.iter().map(|&e| t.count_below(e * radius)).collect();
        for b in 0..bins {
            counts[b] += below[b + 1] - below[b];
        }
    }
    let total = (samples as usize * n) as f64;
    let cdf = |x: f64| 0.5 + (x * (1.0 - x * x).sqrt() + x.asin()) / std::f64::consts::PI;
    let inside: f64 = counts.iter().sum::<usize>() as f64 / total;
    let mut tv = 0.5 * (1.0 - inside);
    for b in 0..bins {
        tv += 0.5 * (counts[b] as f64 / total - (cdf(edges[b + 1]) - cdf(edges[b]))).abs();
    }
    assert!(tv < 0.05, "total variation {tv}");
}

#[test]
fn goe_soft_edge_bias_shrinks_with_n() {
    let exact = gap_soft(1, 0.0, 1.0, Route::Fredholm).unwrap();
    let small = empirical_gap_soft(&EnsembleSpec::gaussian(1, 50, 31), 0.0, 40_000).unwrap();
    let large = empirical_gap_soft(&EnsembleSpec::gaussian(1, 400, 32), 0.0, 40_000).unwrap();
    let (ds, dl) = (
        (small.estimate - exact).abs(),
        (large.estimate - exact).abs(),
    );
    assert!(
        dl + 2.0 * (small.sigma() + large.sigma()) < ds,
        "{ds} -> {dl}"
    );
}

#[test]
fn soft_edge_far_right_is_almost_sure() {
    let e = empirical_gap_soft(&EnsembleSpec::gaussian(2, 100, 41), 5.0, 2000).unwrap();
    assert!(e.estimate > 0.998);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_recurrence(x in 0.01f64..49.0) {
        let lhs = gamma_fn(x + 1.0).unwrap();
        let rhs = x * gamma_fn(x).unwrap();
        prop_assert!(rel_err(lhs, rhs) < 1e-12);
    }

    #[test]
    fn bessel_recurrence(nu in 0.5f64..19.0, x in 0.1f64..1e4) {
        let lhs = bessel_j(nu - 1.0, x).unwrap() + bessel_j(nu + 1.0, x).unwrap();
        let rhs = 2.0 * nu / x * bessel_j(nu, x).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn sinc_is_even_and_bounded(u in -50.0f64..50.0) {
        prop_assert_eq!(sinc_pi(u), sinc_pi(-u));
        prop_assert!(sinc_pi(u).abs() <= 1.0);
    }

    #[test]
    fn bulk_gap_is_a_decreasing_probability(s1 in 0.01f64..3.0, ds in 0.01f64..1.0) {
        let e1 = fredholm_det(&sine_kernel(s1).unwrap(), 1.0, 48).unwrap().value;
        let e2 = fredholm_det(&sine_kernel(s1 + ds).unwrap(), 1.0, 48).unwrap().value;
        prop_assert!(e1 > 0.0 && e1 <= 1.0);
        prop_assert!(e2 < e1);
    }

    #[test]
    fn laguerre_eigenvalues_are_nonnegative(seed in any::<u64>(), a in 0.0f64..3.0, beta in prop::sample::select(vec![1u8, 2, 4]), half in 1usize..20) {
        let spec = EnsembleSpec::laguerre(beta, 2 * half, a, seed);
        let ev = sample_eigenvalues_trial(&spec, seed % 7).unwrap();
        prop_assert!(ev[0] >= 0.0, "{:?}", ev);
        prop_assert_eq!(sample_tridiagonal(&spec, &mut spec.rng(0)).count_below(0.0), 0);
    }

    #[test]
    fn sturm_count_is_monotone(seed in any::<u64>(), x in -20.0f64..20.0, dx in 0.0f64..5.0) {
        let spec = EnsembleSpec::gaussian(1, 40, seed);
        let t = sample_tridiagonal(&spec, &mut spec.rng(0));
        prop_assert!(t.count_below(x) <= t.count_below(x + dx));
    }
}
