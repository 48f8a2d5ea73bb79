//! Nystrom discretization of integral operators and the determinants,
//! resolvent brackets and spectra built on it.
//!
//! A kernel `K` on a rule with nodes `x_i` and weights `w_i` becomes the
//! symmetric matrix `sqrt(w_i) K(x_i, x_j) sqrt(w_j)`. Every determinant is
//! evaluated at order `n` and `2n`; the `2n` value is reported and the
//! difference serves as the error estimate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{v_hard, KernelSpec, RankOneTerm};
use crate::quadrature::MappedRule;
use crate::report::IdentityReport;
use crate::specfun::bessel_j_unchecked;

/// Condition number above which a bracket is flagged as degraded.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative step of the finite-difference checks of the scaling lemmas.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FredholmEval {
    pub value: f64,
    pub error_estimate: f64,
    pub order_used: usize,
}

/// Symmetrized Nystrom matrix of a kernel on a rule.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<f64>,
    pub rule: MappedRule,
    kernel: Option<KernelSpec>,
}

impl DiscreteOperator {
    /// Wrap an explicit matrix; order doubling is unavailable for it.
    pub fn from_matrix(matrix: DMatrix<f64>, rule: MappedRule) -> Result<Self> {
        if matrix.nrows() != rule.len() || matrix.ncols() != rule.len() {
            return Err(Error::InvalidParameter(
                "matrix dimension does not match the rule".into(),
            ));
        }
        Ok(Self {
            matrix,
            rule,
            kernel: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.kernel.as_ref()
    }

    pub fn sqrt_weights(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.rule.physical_weights.iter().map(|w| w.sqrt()),
        )
    }

    /// The same kernel on the rule of twice the order.
    pub fn refined(&self) -> Result<Option<DiscreteOperator>> {
        match &self.kernel {
            Some(k) => Ok(Some(discretize(k, &self.rule.doubled()?)?)),
            None => Ok(None),
        }
    }

    /// Matrix of the composition with itself; discretizes `K^2` on the same rule.
    pub fn squared(&self) -> DiscreteOperator {
        DiscreteOperator {
            matrix: &self.matrix * &self.matrix,
            rule: self.rule.clone(),
            kernel: None,
        }
    }
}

fn same_interval(a: (f64, f64), b: (f64, f64)) -> bool {
    let close = |u: f64, v: f64| {
        u == v
            || (u.is_finite()
                && v.is_finite()
                && (u - v).abs() <= 1e-12 * (1.0 + u.abs().max(v.abs())))
    };
    close(a.0, b.0) && close(a.1, b.1)
}

pub fn discretize(kernel: &KernelSpec, rule: &MappedRule) -> Result<DiscreteOperator> {
    let want = kernel.domain.bounds();
    let have = rule.map_kind.interval();
    if !same_interval(want, have) {
        return Err(Error::DomainMismatch {
            kernel: format!("{} on ({}, {})", kernel.name, want.0, want.1),
            rule: format!("({}, {})", have.0, have.1),
        });
    }
    let n = rule.len();
    let sw: Vec<f64> = rule.physical_weights.iter().map(|w| w.sqrt()).collect();
    let x = &rule.physical_nodes;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = sw[i] * kernel.eval(x[i], x[j]) * sw[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(DiscreteOperator {
        matrix: m,
        rule: rule.clone(),
        kernel: Some(kernel.clone()),
    })
}

/// Convenience: discretize on the kernel's default rule of order `n`.
pub fn discretize_default(kernel: &KernelSpec, n: usize) -> Result<DiscreteOperator> {
    discretize(kernel, &kernel.rule(n)?)
}

/// `det(I - z M)` by LU with the pivot product accumulated in log space.
pub fn det_matrix(z: f64, m: &DMatrix<f64>) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    let n = m.nrows();
    let a = DMatrix::identity(n, n) - m * z;
    det_lu(a)
}

fn det_lu(a: DMatrix<f64>) -> f64 {
    let lu = a.lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut sign = lu.p().determinant::<f64>();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return 0.0;
        }
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
    }
    sign * log_abs.exp()
}

pub fn det_id_minus(z: f64, op: &DiscreteOperator) -> Result<FredholmEval> {
    let coarse = det_matrix(z, &op.matrix);
    if z == 0.0 {
        return Ok(FredholmEval {
            value: 1.0,
            error_estimate: 0.0,
            order_used: op.dim(),
        });
    }
    match op.refined()? {
        Some(fine) => {
            let value = det_matrix(z, &fine.matrix);
            Ok(FredholmEval {
                value,
                error_estimate: (value - coarse).abs(),
                order_used: fine.dim(),
            })
        }
        None => Ok(FredholmEval {
            value: coarse,
            error_estimate: f64::NAN,
            order_used: op.dim(),
        }),
    }
}

/// `det(I - z K)` for a kernel at order `n` (with a `2n` estimate).
pub fn fredholm_det(kernel: &KernelSpec, z: f64, n: usize) -> Result<FredholmEval> {
    det_id_minus(z, &discretize_default(kernel, n)?)
}

/// Resolvent bracket value and the condition number of the system solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketEval {
    pub value: f64,
    pub condition: f64,
    pub degraded: bool,
}

/// Solve `(I + z V) g = f` by Nystrom and return `g(point)`.
pub fn bracket_delta(
    point: f64,
    z: f64,
    v: &KernelSpec,
    rule: &MappedRule,
    f: impl Fn(f64) -> f64,
) -> Result<BracketEval> {
    if z == 0.0 {
        return Ok(BracketEval {
            value: f(point),
            condition: 1.0,
            degraded: false,
        });
    }
    let op = discretize(v, rule)?;
    let n = op.dim();
    let sw = op.sqrt_weights();
    let a = DMatrix::identity(n, n) + &op.matrix * z;
    let eig = a.clone().symmetric_eigenvalues();
    let lmax = eig.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let lmin = eig.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    let condition = lmax / lmin;
    if !(lmin > 0.0) || !condition.is_finite() {
        return Err(Error::Singular { condition });
    }
    let rhs = DVector::from_iterator(
        n,
        rule.physical_nodes
            .iter()
            .zip(sw.iter())
            .map(|(&x, s)| s * f(x)),
    );
    let sol = a.lu().solve(&rhs).ok_or(Error::Singular { condition })?;
    // sol_i = sqrt(w_i) g(x_i)
    let mut acc = 0.0;
    for i in 0..n {
        acc += sw[i] * v.eval(point, rule.physical_nodes[i]) * sol[i];
    }
    Ok(BracketEval {
        value: f(point) - z * acc,
        condition,
        degraded: condition > CONDITION_LIMIT,
    })
}

/// `d^T (I - z D)^{-1} c` with `c_i = sqrt(w_i) left(x_i)`, `d_j = sqrt(w_j) right(x_j)`.
fn rank_one_bracket(z: f64, op: &DiscreteOperator, term: &RankOneTerm) -> Result<(f64, f64)> {
    let n = op.dim();
    let sw = op.sqrt_weights();
    let x = &op.rule.physical_nodes;
    let c = DVector::from_iterator(n, (0..n).map(|i| sw[i] * (term.left)(x[i])));
    let d = DVector::from_iterator(n, (0..n).map(|i| sw[i] * (term.right)(x[i])));
    let a = DMatrix::identity(n, n) - &op.matrix * z;
    let det = det_lu(a.clone());
    let sol = a.lu().solve(&c).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    Ok((det, d.dot(&sol)))
}

/// `det(I - z D - c d^T)` via `det(I - z D) (1 - d^T (I - z D)^{-1} c)`.
pub fn det_with_rank_one(
    z: f64,
    op: &DiscreteOperator,
    term: &RankOneTerm,
) -> Result<FredholmEval> {
    let (det, b) = rank_one_bracket(z, op, term)?;
    let coarse = det * (1.0 - b);
    match op.refined()? {
        Some(fine) => {
            let (det, b) = rank_one_bracket(z, &fine, term)?;
            let value = det * (1.0 - b);
            Ok(FredholmEval {
                value,
                error_estimate: (value - coarse).abs(),
                order_used: fine.dim(),
            })
        }
        None => Ok(FredholmEval {
            value: coarse,
            error_estimate: f64::NAN,
            order_used: op.dim(),
        }),
    }
}

/// `1 - int [(I - z K)^{-1} left](y) right(y) dy`.
pub fn rank_one_resolvent_bracket(
    z: f64,
    op: &DiscreteOperator,
    term: &RankOneTerm,
) -> Result<f64> {
    Ok(1.0 - rank_one_bracket(z, op, term)?.1)
}

/// Eigenvalues of the symmetric Nystrom matrix, in descending order.
pub fn spectrum(op: &DiscreteOperator) -> Vec<f64> {
    let mut ev: Vec<f64> = op
        .matrix
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// `x d/dx f` at `x` by a central difference with relative step.
fn log_derivative(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (f(x * (1.0 + FD_STEP)) - f(x * (1.0 - FD_STEP))) / (2.0 * FD_STEP)
}

fn v_hard_value(s: f64, a: f64, x: f64, y: f64) -> f64 {
    0.5 * s.sqrt() * bessel_j_unchecked(a, (s * x * y).sqrt())
}

/// Pointwise check of `2 s dV/ds = (I + 2 x d/dx) V` on a 5 x 5 grid of (0, 1]^2
/// including the row `x = 0`.
pub fn verify_lemma2_scaling(s: f64, a: f64) -> Result<IdentityReport> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "scaling check needs s > 0, got {s}"
        )));
    }
    v_hard(s, a)?;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mut worst = (0.0f64, 0.0, 0.0, 0.0, 0.0);
    for &x in &grid {
        for &y in &grid {
            let lhs = 2.0 * log_derivative(|t| v_hard_value(t, a, x, y), s);
            let rhs =
                v_hard_value(s, a, x, y) + 2.0 * log_derivative(|t| v_hard_value(s, a, t, y), x);
            let d = (lhs - rhs).abs();
            if d >= worst.0 {
                worst = (d, lhs, rhs, x, y);
            }
        }
    }
    let (_, lhs, rhs, x, y) = worst;
    Ok(
        IdentityReport::absolute("lemma2_scaling", format!("s={s},a={a}"), lhs, rhs, 1e-5)
            .with_diagnostics(format!(
                "worst grid point (x, y) = ({x}, {y}); relative step {FD_STEP}"
            )),
    )
}

/// `Tr[(I + 2 Delta) V] = V(1, 1)` with the trace on a rule of order `n`.
pub fn verify_lemma3_trace(s: f64, a: f64, n: usize) -> Result<IdentityReport> {
    let v = v_hard(s, a)?;
    let rule = v.rule(n)?;
    let lhs = rule.integrate(|x| v.eval(x, x) + 2.0 * log_derivative(|t| v.eval(t, x), x));
    let rhs = v.eval(1.0, 1.0);
    Ok(
        IdentityReport::absolute("lemma3_trace", format!("s={s},a={a}"), lhs, rhs, 1e-5)
            .with_diagnostics(format!("order {n}; relative step {FD_STEP}")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        bessel_kernel, composed_square, sine_kernel, sine_kernel_pm, v_soft, Domain, KernelParams,
        MapHint, Parity,
    };
    use std::sync::Arc;

    fn rank_one_kernel() -> KernelSpec {
        KernelSpec::new(
            "rank_one",
            Domain::Interval { a: 0.0, b: 1.0 },
            KernelParams {
                s: 1.0,
                a: None,
                xi: 1.0,
            },
            MapHint::Affine,
            Arc::new(|x: f64, y: f64| (1.0 + x) * (1.0 + y)),
        )
    }

    #[test]
    fn discretize_structure() {
        let k = rank_one_kernel();
        let op = discretize_default(&k, 12).unwrap();
        let sw = op.sqrt_weights();
        for i in 0..12 {
            for j in 0..12 {
                let vi = sw[i] * (1.0 + op.rule.physical_nodes[i]);
                let vj = sw[j] * (1.0 + op.rule.physical_nodes[j]);
                assert!((op.matrix[(i, j)] - vi * vj).abs() < 1e-15);
            }
        }
        let wrong = crate::operators::airy_kernel(0.0).unwrap().rule(8).unwrap();
        assert!(matches!(
            discretize(&k, &wrong),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn sine_trace_oracle() {
        let plus = discretize_default(&sine_kernel_pm(1.0, Parity::Even).unwrap(), 32).unwrap();
        let minus = discretize_default(&sine_kernel_pm(1.0, Parity::Odd).unwrap(), 32).unwrap();
        let trace = plus.matrix.trace() + minus.matrix.trace();
        assert!((trace - 2.0).abs() < 1e-10);
    }

    #[test]
    fn determinant_basics() {
        let k = rank_one_kernel();
        let op = discretize_default(&k, 16).unwrap();
        assert_eq!(det_id_minus(0.0, &op).unwrap().value, 1.0);
        // int_0^1 (1 + x)^2 = 7/3
        let z = 0.3;
        let d = det_id_minus(z, &op).unwrap();
        assert!((d.value - (1.0 - z * 7.0 / 3.0)).abs() < 1e-13);
        assert!(d.error_estimate >= 0.0 && d.order_used == 32);
    }

    #[test]
    fn small_interval_trace_expansion() {
        let s = 1e-3;
        let d = fredholm_det(&sine_kernel(s).unwrap(), 1.0, 16).unwrap();
        assert!((d.value - (1.0 - s)).abs() < 1e-9);
    }

    #[test]
    fn sine_factorization() {
        // the unfolded operator on (0, 2s) splits into even and odd parts on (0, s)
        let s = 0.5;
        let full = fredholm_det(&sine_kernel(2.0 * s).unwrap(), 1.0, 32)
            .unwrap()
            .value;
        let p = fredholm_det(&sine_kernel_pm(s, Parity::Even).unwrap(), 1.0, 32)
            .unwrap()
            .value;
        let m = fredholm_det(&sine_kernel_pm(s, Parity::Odd).unwrap(), 1.0, 32)
            .unwrap()
            .value;
        assert!((full - p * m).abs() < 1e-12);
    }

    #[test]
    fn error_estimates_shrink() {
        let k = bessel_kernel(0.5, 4.0).unwrap();
        let e8 = fredholm_det(&k, 1.0, 8).unwrap().error_estimate;
        let e16 = fredholm_det(&k, 1.0, 16).unwrap().error_estimate;
        let e32 = fredholm_det(&k, 1.0, 32).unwrap().error_estimate;
        assert!(e16 < e8 && (e32 < e16 || e32 < 1e-14));
    }

    #[test]
    fn bracket_identity_and_rank_one() {
        let k = rank_one_kernel();
        let rule = k.rule(16).unwrap();
        let f = |x: f64| x * x;
        assert_eq!(bracket_delta(0.7, 0.0, &k, &rule, f).unwrap().value, f(0.7));
        // Sherman-Morrison: g = f - z phi <phi, f> / (1 + z <phi, phi>), phi = 1 + x
        let z = 0.8;
        let pf = 7.0 / 12.0; // int_0^1 (1 + x) x^2
        let pp = 7.0 / 3.0;
        let point = 0.4;
        let expect = f(point) - z * (1.0 + point) * pf / (1.0 + z * pp);
        let got = bracket_delta(point, z, &k, &rule, f).unwrap();
        assert!((got.value - expect).abs() < 1e-12);
        assert!(!got.degraded);
    }

    #[test]
    fn rank_one_updates() {
        let k = bessel_kernel(1.0, 1.0).unwrap();
        let op = discretize_default(&k, 24).unwrap();
        let plain = det_id_minus(1.0, &op).unwrap().value;
        let with_zero = det_with_rank_one(1.0, &op, &RankOneTerm::zero())
            .unwrap()
            .value;
        assert!((plain - with_zero).abs() < 1e-15);
        let term = RankOneTerm::new(Arc::new(|x: f64| x), Arc::new(|y: f64| 1.0 + y));
        let pure = det_with_rank_one(0.0, &op, &term).unwrap().value;
        // 1 - int_0^1 x (1 + x) dx over the doubled rule
        assert!((pure - (1.0 - 5.0 / 6.0)).abs() < 1e-13);
    }

    #[test]
    fn spectra() {
        let k = rank_one_kernel();
        let op = discretize_default(&k, 10).unwrap();
        let ev = spectrum(&op);
        let norm2: f64 = op.rule.integrate(|x| (1.0 + x) * (1.0 + x));
        assert!((ev[0] - norm2).abs() < 1e-12);
        assert!(ev[1..].iter().all(|l| l.abs() < 1e-12));
        let zero = DiscreteOperator::from_matrix(
            DMatrix::zeros(4, 4),
            crate::quadrature::map_finite(&crate::quadrature::gauss_legendre(4).unwrap(), 0.0, 1.0)
                .unwrap(),
        )
        .unwrap();
        assert!(spectrum(&zero).iter().all(|&l| l == 0.0));
        let ev = spectrum(&discretize_default(&v_soft(-2.0).unwrap(), 96).unwrap());
        assert!(ev.iter().any(|&l| l < -1e-6) && ev.iter().any(|&l| l > 1e-3));
    }

    #[test]
    fn square_factorization_is_exact() {
        for v in [
            v_soft(0.0).unwrap(),
            crate::operators::v_hard(1.0, 0.5).unwrap(),
        ] {
            let op = discretize_default(&v, 48).unwrap();
            let sq = op.squared();
            for zeta in [0.25f64, 1.0] {
                let r = zeta.sqrt();
                let lhs = det_matrix(zeta, &sq.matrix);
                let rhs = det_matrix(r, &op.matrix) * det_matrix(-r, &op.matrix);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn square_matches_bessel_kernel_determinant() {
        let s = 1.0;
        let v = crate::operators::v_hard(s, 0.0).unwrap();
        let rule = v.rule(48).unwrap();
        let sq = composed_square(&v, &rule);
        let a = fredholm_det(&sq, 1.0, 48).unwrap().value;
        let b = fredholm_det(&bessel_kernel(0.0, s).unwrap(), 1.0, 48)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-12);
        // a = 0, unit scale: det = exp(-s/4)
        assert!((b - (-s / 4.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn lemma_checks() {
        for (s, a) in [(1.0, 0.0), (4.0, 0.5), (0.5, 2.0)] {
            let r = verify_lemma2_scaling(s, a).unwrap();
            assert!(r.abs_diff < 1e-6, "{r:?}");
        }
        for (s, a) in [(1.0, 0.0), (0.25, 2.0)] {
            let r = verify_lemma3_trace(s, a, 96).unwrap();
            assert!(r.abs_diff < 1e-5, "{r:?}");
        }
        let r = verify_lemma3_trace(1e-4, 1.0, 96).unwrap();
        assert!(r.abs_diff < 1e-7, "{r:?}");
    }
}
