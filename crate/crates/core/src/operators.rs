//! Integral-operator kernels: folded sine kernels, the Airy kernel and its
//! square root `V^soft`, the Bessel kernel and its square root `V^hard`,
//! plus the rank-one terms that enter the orthogonal-symmetry formulas.
//!
//! The Bessel kernel is normalized as
//!
//! ```text
//! K(x, y) = [J(sqrt x) sqrt y J'(sqrt y) - sqrt x J'(sqrt x) J(sqrt y)] / (2 (x - y))
//!         = 1/4 int_0^1 J(sqrt(x u)) J(sqrt(y u)) du,
//! ```
//!
//! so that `s K(s x, s y)` is the square of `V^hard` on (0, 1).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{apply_map, gauss_legendre_cached, MapKind, MappedRule};
use crate::specfun::{airy_pair, bessel_j_integral, bessel_j_prime, bessel_j_unchecked, sinc_pi};

pub type Evaluator = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Default scale of the rational map for Airy-type integrands.
pub const SEMI_INFINITE_SCALE: f64 = 2.0;

/// Relative separation below which kernels with a removable diagonal
/// singularity are evaluated from the diagonal formula at the midpoint.
const NEAR_DIAGONAL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    HalfLine { start: f64 },
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Interval { a, b } => (a, b),
            Domain::HalfLine { start } => (start, f64::INFINITY),
        }
    }
}

/// How a default quadrature rule is laid onto the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapHint {
    Affine,
    /// Power clustering at the left end, see [`MapKind::Power`].
    Power(u32),
    /// Rational map with the given scale, see [`MapKind::SemiInfinite`].
    Rational(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub s: f64,
    pub a: Option<f64>,
    /// Bookkeeping only; applied by the Fredholm layer.
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// A symmetric kernel together with its domain and parameters.
#[derive(Clone)]
pub struct KernelSpec {
    pub name: String,
    pub domain: Domain,
    pub params: KernelParams,
    pub map_hint: MapHint,
    evaluator: Evaluator,
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("params", &self.params)
            .field("map_hint", &self.map_hint)
            .finish_non_exhaustive()
    }
}

impl KernelSpec {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        params: KernelParams,
        map_hint: MapHint,
        evaluator: Evaluator,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            params,
            map_hint,
            evaluator,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.evaluator)(x, y)
    }

    pub fn evaluator(&self) -> Evaluator {
        Arc::clone(&self.evaluator)
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.params.xi = xi;
        self
    }

    pub fn map_kind(&self) -> MapKind {
        match (self.domain, self.map_hint) {
            (Domain::HalfLine { start }, MapHint::Rational(scale)) => {
                MapKind::SemiInfinite { s: start, scale }
            }
            (Domain::HalfLine { start }, _) => MapKind::SemiInfinite {
                s: start,
                scale: SEMI_INFINITE_SCALE,
            },
            (Domain::Interval { a, b }, MapHint::Power(p)) => MapKind::Power { a, b, p },
            (Domain::Interval { a, b }, _) => MapKind::Finite { a, b },
        }
    }

    /// Gauss-Legendre rule of order `n` laid onto the kernel's domain.
    pub fn rule(&self, n: usize) -> Result<MappedRule> {
        if n == 0 || n > crate::quadrature::MAX_ORDER {
            return Err(Error::QuadratureOrder(n));
        }
        apply_map(&gauss_legendre_cached(n), self.map_kind())
    }
}

/// `f (x) g (y)`.
#[derive(Clone)]
pub struct RankOneTerm {
    pub left: Profile,
    pub right: Profile,
}

impl fmt::Debug for RankOneTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RankOneTerm { .. }")
    }
}

impl RankOneTerm {
    pub fn new(left: Profile, right: Profile) -> Self {
        Self { left, right }
    }

    pub fn zero() -> Self {
        Self {
            left: Arc::new(|_| 0.0),
            right: Arc::new(|_| 0.0),
        }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::InvalidParameter(format!(
            "xi must lie in [0, 1], got {xi}"
        )));
    }
    Ok(())
}

fn check_order(a: f64) -> Result<()> {
    if !(a > -1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Bessel order must exceed -1, got {a}"
        )));
    }
    Ok(())
}

/// Power used to cluster nodes at the hard edge for order `a`.
pub fn hard_edge_power(a: f64) -> u32 {
    if a < 3.0 {
        4
    } else {
        2
    }
}

/// Sine kernel folded onto (0, s) by parity: `sinc(x - y) +- sinc(x + y)`.
/// On (0, s) this realizes the even or odd part of the sine kernel on an
/// interval of length `2 s`.
pub fn sine_kernel_pm(s: f64, parity: Parity) -> Result<KernelSpec> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sine kernel needs s > 0, got {s}"
        )));
    }
    let sign = parity.sign();
    let name = match parity {
        Parity::Even => "sine+",
        Parity::Odd => "sine-",
    };
    Ok(KernelSpec::new(
        name,
        Domain::Interval { a: 0.0, b: s },
        KernelParams {
            s,
            a: None,
            xi: 1.0,
        },
        MapHint::Affine,
        Arc::new(move |x, y| sinc_pi(x - y) + sign * sinc_pi(x + y)),
    ))
}

/// The unfolded sine kernel on (0, s).
pub fn sine_kernel(s: f64) -> Result<KernelSpec> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sine kernel needs s > 0, got {s}"
        )));
    }
    Ok(KernelSpec::new(
        "sine",
        Domain::Interval { a: 0.0, b: s },
        KernelParams {
            s,
            a: None,
            xi: 1.0,
        },
        MapHint::Affine,
        Arc::new(|x, y| sinc_pi(x - y)),
    ))
}

/// Airy kernel value; symmetric by construction.
pub fn airy_kernel_value(x: f64, y: f64) -> f64 {
    let scale = 1.0f64.max(x.abs()).max(y.abs());
    if (x - y).abs() <= NEAR_DIAGONAL * scale {
        let m = 0.5 * (x + y);
        let (ai, aip) = airy_pair(m);
        return aip * aip - m * ai * ai;
    }
    let (ax, apx) = airy_pair(x);
    let (ay, apy) = airy_pair(y);
    (ax * apy - ay * apx) / (x - y)
}

/// Airy kernel on (s, inf).
pub fn airy_kernel(s: f64) -> Result<KernelSpec> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter("Airy kernel needs finite s".into()));
    }
    Ok(KernelSpec::new(
        "airy",
        Domain::HalfLine { start: s },
        KernelParams {
            s,
            a: None,
            xi: 1.0,
        },
        MapHint::Rational(SEMI_INFINITE_SCALE),
        Arc::new(|x, y| {
            if x <= y {
                airy_kernel_value(x, y)
            } else {
                airy_kernel_value(y, x)
            }
        }),
    ))
}

/// `V^soft(x, u) = Ai(x + u + s)` on (0, inf).
pub fn v_soft(s: f64) -> Result<KernelSpec> {
    if !s.is_finite() {
        return Err(Error::InvalidParameter("V^soft needs finite s".into()));
    }
    Ok(KernelSpec::new(
        "v_soft",
        Domain::HalfLine { start: 0.0 },
        KernelParams {
            s,
            a: None,
            xi: 1.0,
        },
        MapHint::Rational(SEMI_INFINITE_SCALE),
        Arc::new(move |x, u| airy_pair(x + u + s).0),
    ))
}

/// Diagonal of the Bessel kernel: `(J_a^2 - J_{a+1} J_{a-1}) / 4` at `sqrt x`.
pub fn bessel_kernel_diagonal(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if a == 0.0 {
            0.25
        } else if a > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let z = x.sqrt();
    let j = bessel_j_unchecked(a, z);
    let jp1 = bessel_j_unchecked(a + 1.0, z);
    let jm1 = 2.0 * a / z * j - jp1;
    0.25 * (j * j - jp1 * jm1)
}

fn bessel_kernel_value(a: f64, x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if (x - y).abs() <= NEAR_DIAGONAL * scale || scale == 0.0 {
        return bessel_kernel_diagonal(a, 0.5 * (x + y));
    }
    let (zx, zy) = (x.sqrt(), y.sqrt());
    let jx = bessel_j_unchecked(a, zx);
    let jy = bessel_j_unchecked(a, zy);
    let dx = zx * bessel_j_prime(a, zx);
    let dy = zy * bessel_j_prime(a, zy);
    (jx * dy - dx * jy) / (2.0 * (x - y))
}

/// Bessel kernel on (0, s).
pub fn bessel_kernel(a: f64, s: f64) -> Result<KernelSpec> {
    check_order(a)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Bessel kernel needs s > 0, got {s}"
        )));
    }
    Ok(KernelSpec::new(
        "bessel",
        Domain::Interval { a: 0.0, b: s },
        KernelParams {
            s,
            a: Some(a),
            xi: 1.0,
        },
        MapHint::Power(hard_edge_power(a)),
        Arc::new(move |x, y| {
            if x <= y {
                bessel_kernel_value(a, x, y)
            } else {
                bessel_kernel_value(a, y, x)
            }
        }),
    ))
}

/// `V^hard(x, y) = (sqrt s / 2) J_a(sqrt(s x y))` on (0, 1).
pub fn v_hard(s: f64, a: f64) -> Result<KernelSpec> {
    check_order(a)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "V^hard needs s > 0, got {s}"
        )));
    }
    let half_root = 0.5 * s.sqrt();
    Ok(KernelSpec::new(
        "v_hard",
        Domain::Interval { a: 0.0, b: 1.0 },
        KernelParams {
            s,
            a: Some(a),
            xi: 1.0,
        },
        MapHint::Power(hard_edge_power(a)),
        Arc::new(move |x, y| half_root * bessel_j_unchecked(a, (s * x * y).sqrt())),
    ))
}

/// Kernel of `V^2` with the inner integral taken on `rule`.
pub fn composed_square(v: &KernelSpec, rule: &MappedRule) -> KernelSpec {
    let inner = v.evaluator();
    let nodes = rule.physical_nodes.clone();
    let weights = rule.physical_weights.clone();
    KernelSpec::new(
        format!("{}^2", v.name),
        v.domain,
        v.params,
        v.map_hint,
        Arc::new(move |x, y| {
            nodes
                .iter()
                .zip(&weights)
                .map(|(&t, &w)| w * inner(x, t) * inner(t, y))
                .sum()
        }),
    )
}

/// `sqrt(xi) J_a(sqrt x)` and `(1 - sqrt(xi) int_0^sqrt(y) J_a) / (2 sqrt y)`.
pub fn hard_rank_one(s: f64, a: f64, xi: f64) -> Result<RankOneTerm> {
    check_order(a)?;
    check_xi(xi)?;
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hard rank-one term needs s > 0, got {s}"
        )));
    }
    let r = xi.sqrt();
    Ok(RankOneTerm::new(
        Arc::new(move |x| r * bessel_j_unchecked(a, x.sqrt())),
        Arc::new(move |y| {
            let root = y.sqrt();
            (1.0 - r * bessel_j_integral(a, root)) / (2.0 * root)
        }),
    ))
}

/// `int_y^inf Ai`.
pub fn airy_tail_integral(y: f64) -> f64 {
    let rule = gauss_legendre_cached(64);
    let mapped = apply_map(
        &rule,
        MapKind::SemiInfinite {
            s: y,
            scale: SEMI_INFINITE_SCALE,
        },
    )
    .expect("valid semi-infinite map");
    if y >= 0.0 {
        return mapped.integrate(|x| airy_pair(x).0);
    }
    // oscillatory head on (y, 0) handled separately
    let head = apply_map(&gauss_legendre_cached(64), MapKind::Finite { a: y, b: 0.0 })
        .expect("valid finite map");
    let tail = apply_map(
        &rule,
        MapKind::SemiInfinite {
            s: 0.0,
            scale: SEMI_INFINITE_SCALE,
        },
    )
    .expect("valid map");
    head.integrate(|x| airy_pair(x).0) + tail.integrate(|x| airy_pair(x).0)
}

/// `sqrt(xi) Ai(x)` and `1 - sqrt(xi) int_y^inf Ai`.
pub fn soft_rank_one(s: f64, xi: f64) -> Result<RankOneTerm> {
    check_xi(xi)?;
    if !s.is_finite() {
        return Err(Error::InvalidParameter(
            "soft rank-one term needs finite s".into(),
        ));
    }
    let r = xi.sqrt();
    Ok(RankOneTerm::new(
        Arc::new(move |x| r * airy_pair(x).0),
        Arc::new(move |y| {
            if r == 0.0 {
                1.0
            } else {
                1.0 - r * airy_tail_integral(y)
            }
        }),
    ))
}
