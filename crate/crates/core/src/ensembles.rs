//! Finite-N Gaussian and Laguerre β-ensembles sampled through their
//! tridiagonal models, and Monte Carlo estimates of edge gap probabilities
//! under the soft and hard edge scalings.
//!
//! Gap tests only need the number of eigenvalues on one side of a point,
//! which a Sturm sequence gives in O(N) without an eigensolve.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Generator used for every sample; trial `k` draws from stream `k` of the seed.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Largest matrix dimension accepted by [`EnsembleSpec::validate`].
pub const MAX_N: usize = 4000;

/// Fewest trials accepted by the empirical gap estimators.
pub const MIN_TRIALS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Laguerre,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Laguerre => "laguerre",
        })
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "laguerre" => Ok(Family::Laguerre),
            _ => Err(Error::InvalidParameter(format!("unknown family '{s}'"))),
        }
    }
}

/// A finite-N ensemble with eigenvalue density proportional to
/// `prod g(x_l) prod |x_k - x_j|^beta`.
///
/// For β = 1, 2 the weight is `exp(-beta x^2 / 2)` (Gaussian) or
/// `x^a exp(-beta x / 2)` (Laguerre) on `n` eigenvalues. For β = 4 it is
/// `exp(-x^2)` or `x^a exp(-x)` on `n / 2` eigenvalues, so `n` must be even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: Family,
    pub beta: u8,
    pub n: usize,
    pub a: f64,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn gaussian(beta: u8, n: usize, seed: u64) -> Self {
        Self {
            family: Family::Gaussian,
            beta,
            n,
            a: 0.0,
            seed,
        }
    }

    pub fn laguerre(beta: u8, n: usize, a: f64, seed: u64) -> Self {
        Self {
            family: Family::Laguerre,
            beta,
            n,
            a,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.beta, 1 | 2 | 4) {
            return Err(Error::InvalidParameter(format!(
                "beta must be 1, 2 or 4, got {}",
                self.beta
            )));
        }
        if self.n < 2 || self.n > MAX_N {
            return Err(Error::InvalidParameter(format!(
                "N must lie in [2, {MAX_N}], got {}",
                self.n
            )));
        }
        if self.beta == 4 && !self.n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "beta = 4 uses N/2 eigenvalues, N = {} is odd",
                self.n
            )));
        }
        if self.family == Family::Laguerre && !(self.a > -1.0 && self.a.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Laguerre exponent a must exceed -1, got {}",
                self.a
            )));
        }
        Ok(())
    }

    /// Number of eigenvalues actually sampled.
    pub fn dimension(&self) -> usize {
        if self.beta == 4 {
            self.n / 2
        } else {
            self.n
        }
    }

    /// Generator for trial `trial`.
    pub fn rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    /// Start of the soft-edge interval `(threshold, inf)` for scaled position `s`.
    pub fn soft_threshold(&self, s: f64) -> f64 {
        let n = self.n as f64;
        match self.family {
            Family::Gaussian => (2.0 * n).sqrt() + s / (2f64.sqrt() * n.powf(1.0 / 6.0)),
            Family::Laguerre => 4.0 * n + 2.0 * (2.0 * n).cbrt() * s,
        }
    }

    /// End of the hard-edge interval `(0, threshold)` for scaled length `s`.
    pub fn hard_threshold(&self, s: f64) -> f64 {
        s / (4.0 * self.n as f64)
    }
}

/// Symmetric tridiagonal matrix stored as its diagonal and squared
/// off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off_sq: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            let coupling = if i == 0 { 0.0 } else { self.off_sq[i - 1] / q };
            q = d - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                let b = self.off_sq[i].sqrt();
                m[(i, i + 1)] = b;
                m[(i + 1, i)] = b;
            }
        }
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

fn chi_sq<R: Rng>(rng: &mut R, dof: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("positive degrees of freedom")
        .sample(rng)
}

/// Weight exponent multiplier: the weight is `exp(-w x^2 / 2)` or `exp(-w x / 2)`.
fn weight_beta(beta: u8) -> f64 {
    if beta == 4 {
        2.0
    } else {
        beta as f64
    }
}

/// Draw the tridiagonal model of one sample, already in the ensemble's units.
pub fn sample_tridiagonal<R: Rng>(spec: &EnsembleSpec, rng: &mut R) -> Tridiagonal {
    let m = spec.dimension();
    let beta = spec.beta as f64;
    let w = weight_beta(spec.beta);
    match spec.family {
        Family::Gaussian => {
            // entries N(0, 2) / sqrt 2 and chi_{beta k} / sqrt 2 give exp(-lambda^2 / 2)
            let scale = 1.0 / w.sqrt();
            let diag = (0..m)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                })
                .collect();
            let off_sq = (1..m)
                .rev()
                .map(|k| 0.5 * chi_sq(rng, beta * k as f64) * scale * scale)
                .collect();
            Tridiagonal { diag, off_sq }
        }
        Family::Laguerre => {
            // B lower bidiagonal, B B^T has density prod lambda^{a} exp(-lambda / 2)
            let scale = 1.0 / w;
            let dof0 = 2.0 * (spec.a + 1.0) + beta * (m as f64 - 1.0);
            let d_sq: Vec<f64> = (0..m)
                .map(|i| chi_sq(rng, dof0 - beta * i as f64))
                .collect();
            let e_sq: Vec<f64> = (1..m).rev().map(|k| chi_sq(rng, beta * k as f64)).collect();
            let diag = (0..m)
                .map(|i| (d_sq[i] + if i > 0 { e_sq[i - 1] } else { 0.0 }) * scale)
                .collect();
            let off_sq = (0..m.saturating_sub(1))
                .map(|i| d_sq[i] * e_sq[i] * scale * scale)
                .collect();
            Tridiagonal { diag, off_sq }
        }
    }
}

/// Eigenvalues of trial 0 of `spec`, sorted ascending.
pub fn sample_eigenvalues(spec: &EnsembleSpec) -> Result<Vec<f64>> {
    sample_eigenvalues_trial(spec, 0)
}

pub fn sample_eigenvalues_trial(spec: &EnsembleSpec, trial: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = spec.rng(trial);
    Ok(sample_tridiagonal(spec, &mut rng).eigenvalues())
}

/// Monte Carlo estimate of a probability with its 95% binomial half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGap {
    pub estimate: f64,
    pub trials: usize,
    pub ci_halfwidth: f64,
}

impl EmpiricalGap {
    pub fn from_counts(hits: usize, trials: usize) -> Self {
        let p = hits as f64 / trials as f64;
        Self {
            estimate: p,
            trials,
            ci_halfwidth: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    /// Binomial standard deviation of the estimate.
    pub fn sigma(&self) -> f64 {
        self.ci_halfwidth / 1.96
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_TRIALS} trials required, got {trials}"
        )));
    }
    Ok(())
}

/// Fraction of trials for which `empty` holds, run in parallel over trials.
pub fn empirical_fraction<F>(
    spec: &EnsembleSpec,
    trials: usize,
    exec: Execution,
    empty: F,
) -> Result<EmpiricalGap>
where
    F: Fn(&Tridiagonal) -> bool + Sync + Send,
{
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let indices: Vec<u64> = (0..trials as u64).collect();
    let hits = exec::map(exec, &indices, |&k| {
        let mut rng = spec.rng(k);
        empty(&sample_tridiagonal(spec, &mut rng))
    })
    .into_iter()
    .filter(|&b| b)
    .count();
    Ok(EmpiricalGap::from_counts(hits, trials))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Soft,
    Hard,
}

impl std::fmt::Display for Edge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Edge::Soft => "soft",
            Edge::Hard => "hard",
        })
    }
}

impl std::str::FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(Edge::Soft),
            "hard" => Ok(Edge::Hard),
            _ => Err(Error::InvalidParameter(format!("unknown edge '{s}'"))),
        }
    }
}

/// Empirical edge gap probability for any positive number of trials.
pub fn empirical_gap(
    spec: &EnsembleSpec,
    edge: Edge,
    s: f64,
    trials: usize,
    exec: Execution,
) -> Result<EmpiricalGap> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "s must be finite, got {s}"
        )));
    }
    match edge {
        Edge::Soft => {
            let x = spec.soft_threshold(s);
            let m = spec.dimension();
            empirical_fraction(spec, trials, exec, |t| t.count_below(x) == m)
        }
        Edge::Hard => {
            if spec.family != Family::Laguerre {
                return Err(Error::Capability(
                    "the hard edge exists only for the Laguerre family".into(),
                ));
            }
            if s < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "interval length must be non-negative, got {s}"
                )));
            }
            let x = spec.hard_threshold(s);
            empirical_fraction(spec, trials, exec, |t| t.count_below(x) == 0)
        }
    }
}

/// Probability that no eigenvalue lies beyond the soft-edge point for `s`.
pub fn empirical_gap_soft(spec: &EnsembleSpec, s: f64, trials: usize) -> Result<EmpiricalGap> {
    empirical_gap_soft_with(spec, s, trials, Execution::default())
}

pub fn empirical_gap_soft_with(
    spec: &EnsembleSpec,
    s: f64,
    trials: usize,
    exec: Execution,
) -> Result<EmpiricalGap> {
    check_trials(trials)?;
    empirical_gap(spec, Edge::Soft, s, trials, exec)
}

/// Probability that no eigenvalue lies in the hard-edge interval for `s`.
pub fn empirical_gap_hard(spec: &EnsembleSpec, s: f64, trials: usize) -> Result<EmpiricalGap> {
    empirical_gap_hard_with(spec, s, trials, Execution::default())
}

pub fn empirical_gap_hard_with(
    spec: &EnsembleSpec,
    s: f64,
    trials: usize,
    exec: Execution,
) -> Result<EmpiricalGap> {
    check_trials(trials)?;
    empirical_gap(spec, Edge::Hard, s, trials, exec)
}
