//! Adaptive Bulirsch-Stoer integration (modified midpoint steps with
//! polynomial extrapolation in `h^2`), reporting the state at prescribed
//! output points.

use crate::error::{Error, Result};

const SEQUENCE: [usize; 9] = [2, 4, 6, 8, 10, 12, 14, 16, 18];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-11,
            initial_step: 1e-2,
            max_step: 0.25,
            max_steps: 200_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

struct Workspace {
    n: usize,
    ym: Vec<f64>,
    yn: Vec<f64>,
    dy: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            n,
            ym: vec![0.0; n],
            yn: vec![0.0; n],
            dy: vec![0.0; n],
        }
    }
}

#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
fn midpoint<F>(
    f: &F,
    t: f64,
    y: &[f64],
    dydt: &[f64],
    big_h: f64,
    steps: usize,
    ws: &mut Workspace,
    out: &mut [f64],
) -> bool
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = ws.n;
    let h = big_h / steps as f64;
    for i in 0..n {
        ws.ym[i] = y[i];
        ws.yn[i] = y[i] + h * dydt[i];
    }
    let mut x = t + h;
    f(x, &ws.yn, &mut ws.dy);
    let h2 = 2.0 * h;
    for _ in 1..steps {
        for i in 0..n {
            let next = ws.ym[i] + h2 * ws.dy[i];
            ws.ym[i] = ws.yn[i];
            ws.yn[i] = next;
        }
        x += h;
        f(x, &ws.yn, &mut ws.dy);
    }
    let mut finite = true;
    for i in 0..n {
        out[i] = 0.5 * (ws.ym[i] + ws.yn[i] + h * ws.dy[i]);
        finite &= out[i].is_finite();
    }
    finite
}

/// Attempt one step of size `big_h`. On success writes the new state and
/// returns the proposed next step; on failure returns `None` and a reduced step.
fn try_step<F>(
    f: &F,
    t: f64,
    y: &[f64],
    big_h: f64,
    opts: &OdeOptions,
    ws: &mut Workspace,
    y_new: &mut [f64],
) -> (bool, f64)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = ws.n;
    let mut dydt = vec![0.0; n];
    f(t, y, &mut dydt);
    if dydt.iter().any(|v| !v.is_finite()) {
        return (false, 0.25 * big_h);
    }
    let mut last_err = f64::INFINITY;
    // prev[j] = T_{k-1, j}, cur[j] = T_{k, j}
    let mut prev: Vec<Vec<f64>> = Vec::with_capacity(SEQUENCE.len());
    for k in 0..SEQUENCE.len() {
        let mut cur: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
        let mut base = vec![0.0; n];
        if !midpoint(f, t, y, &dydt, big_h, SEQUENCE[k], ws, &mut base) {
            return (false, 0.25 * big_h);
        }
        cur.push(base);
        for j in 1..=k {
            let ratio = (SEQUENCE[k] as f64 / SEQUENCE[k - j] as f64).powi(2);
            let row: Vec<f64> = (0..n)
                .map(|i| cur[j - 1][i] + (cur[j - 1][i] - prev[j - 1][i]) / (ratio - 1.0))
                .collect();
            cur.push(row);
        }
        if k > 0 {
            let mut err: f64 = 0.0;
            for i in 0..n {
                let scale = opts.atol + opts.rtol * y[i].abs().max(cur[k][i].abs());
                err = err.max((cur[k][i] - cur[k - 1][i]).abs() / scale);
            }
            if !err.is_finite() {
                return (false, 0.25 * big_h);
            }
            if err <= 1.0 {
                y_new.copy_from_slice(&cur[k]);
                let exponent = 1.0 / (2 * k + 1) as f64;
                let mut factor = 0.9 * (1.0 / err.max(1e-10)).powf(exponent);
                if k <= 3 {
                    factor = factor.max(1.5);
                } else if k >= 6 {
                    factor = factor.min(0.8);
                }
                return (true, big_h * factor.clamp(0.2, 4.0));
            }
            if k >= 4 && err > last_err {
                break;
            }
            last_err = err;
        }
        prev = cur;
    }
    (false, 0.4 * big_h)
}

/// Integrate `y' = f(t, y)` from `t0` through every point of `outputs`
/// (monotone, all on the same side of `t0`). `check` is called at every
/// accepted step and may abort the integration.
pub fn integrate<F, C>(
    f: F,
    t0: f64,
    y0: &[f64],
    outputs: &[f64],
    opts: &OdeOptions,
    mut check: C,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64, &[f64], &mut [f64]),
    C: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let mut ws = Workspace::new(n);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut results = Vec::with_capacity(outputs.len());
    let mut steps = 0usize;
    let mut h_abs = opts.initial_step.min(opts.max_step);
    for &target in outputs {
        let dir = if target >= t { 1.0 } else { -1.0 };
        while (target - t) * dir > 0.0 {
            let remaining = (target - t).abs();
            let mut h = h_abs.min(opts.max_step);
            let landing = h >= remaining * (1.0 - 1e-12);
            if landing {
                h = remaining;
            }
            let (ok, proposal) = try_step(&f, t, &y, dir * h, opts, &mut ws, &mut y_new);
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Integration {
                    at: t,
                    msg: "step budget exhausted".into(),
                });
            }
            let proposal = proposal.abs();
            if ok {
                t = if landing { target } else { t + dir * h };
                std::mem::swap(&mut y, &mut y_new);
                check(t, &y)?;
                // a forced short landing step must not shrink the controller
                h_abs = if landing {
                    h_abs.max(proposal)
                } else {
                    proposal
                };
            } else {
                h_abs = proposal;
                if h_abs < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::Integration {
                        at: t,
                        msg: "step size underflow".into(),
                    });
                }
            }
        }
        results.push(y.clone());
    }
    Ok(results)
}
