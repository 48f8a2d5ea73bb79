//! Gauss-Legendre rules and the maps that carry them onto physical domains.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 2048;

/// Gauss-Legendre rule on (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

/// How reference nodes are carried onto the physical domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    /// Affine map onto `(a, b)`.
    Finite { a: f64, b: f64 },
    /// `x = s + L u / (1 - u)` with `u` in (0, 1), onto `(s, inf)`.
    SemiInfinite { s: f64, scale: f64 },
    /// `x = a + (b - a) u^p` with `u` in (0, 1), onto `(a, b)`, clustering
    /// nodes at `a`. Resolves integrands with `(x - a)^(nu/2)` behaviour.
    Power { a: f64, b: f64, p: u32 },
}

impl MapKind {
    /// Physical interval `(lo, hi)`; `hi` may be infinite.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            MapKind::Finite { a, b } | MapKind::Power { a, b, .. } => (a, b),
            MapKind::SemiInfinite { s, .. } => (s, f64::INFINITY),
        }
    }
}

/// A rule carried onto a physical domain; the weights include the Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedRule {
    pub physical_nodes: Vec<f64>,
    pub physical_weights: Vec<f64>,
    pub map_kind: MapKind,
}

impl MappedRule {
    pub fn len(&self) -> usize {
        self.physical_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.physical_nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.physical_nodes
            .iter()
            .zip(&self.physical_weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Same map with the reference order doubled.
    pub fn doubled(&self) -> Result<MappedRule> {
        let rule = gauss_legendre(2 * self.len())?;
        apply_map(&rule, self.map_kind)
    }
}

/// Gauss-Legendre rule of order `n` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::QuadratureOrder(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root
        let theta = PI * (4.0 * i as f64 + 3.0) / (4.0 * nf + 2.0);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        order: n,
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared cache of rules; rules are immutable once built.
pub fn gauss_legendre_cached(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(gauss_legendre(n).expect("cached rule order in range"));
    cache
        .lock()
        .expect("rule cache poisoned")
        .entry(n)
        .or_insert(rule)
        .clone()
}

pub fn map_finite(rule: &QuadratureRule, a: f64, b: f64) -> Result<MappedRule> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "finite map needs a < b, got ({a}, {b})"
        )));
    }
    apply_map(rule, MapKind::Finite { a, b })
}

pub fn map_semi_infinite(rule: &QuadratureRule, s: f64, scale: f64) -> Result<MappedRule> {
    if !(scale > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "semi-infinite map needs L > 0, got {scale}"
        )));
    }
    apply_map(rule, MapKind::SemiInfinite { s, scale })
}

pub fn map_power(rule: &QuadratureRule, a: f64, b: f64, p: u32) -> Result<MappedRule> {
    if !(a < b) || !a.is_finite() || !b.is_finite() || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "power map needs a < b and p >= 1, got ({a}, {b}), p = {p}"
        )));
    }
    apply_map(rule, MapKind::Power { a, b, p })
}

/// Apply a map without re-validating its parameters.
pub fn apply_map(rule: &QuadratureRule, kind: MapKind) -> Result<MappedRule> {
    let n = rule.order;
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let (x, jw) = match kind {
            MapKind::Finite { a, b } => (0.5 * (b - a) * t + 0.5 * (a + b), 0.5 * (b - a) * w),
            MapKind::SemiInfinite { s, scale } => {
                let u = 0.5 * (t + 1.0);
                let one_minus = 0.5 * (1.0 - t);
                (
                    s + scale * u / one_minus,
                    0.5 * w * scale / (one_minus * one_minus),
                )
            }
            MapKind::Power { a, b, p } => {
                let u = 0.5 * (t + 1.0);
                let pf = p as f64;
                (
                    a + (b - a) * u.powi(p as i32),
                    0.5 * w * (b - a) * pf * u.powi(p as i32 - 1),
                )
            }
        };
        xs.push(x);
        ws.push(jw);
    }
    Ok(MappedRule {
        physical_nodes: xs,
        physical_weights: ws,
        map_kind: kind,
    })
}
