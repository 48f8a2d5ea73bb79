//! Command-line front end: `eval`, `table`, `verify` and `sample`.
//!
//! Exit codes are 0 on success, 1 when a verification fails or a
//! computation breaks down, and 2 on usage errors. Every JSON document has
//! the top-level keys `config`, `results` and `version`, and all numbers
//! are printed with 15 significant digits.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::ensembles::{empirical_gap, Edge, EnsembleSpec, Family, RNG_ALGORITHM};
use crate::error::Error;
use crate::exec::Execution;
use crate::gap::{
    evaluate, evaluate_many, verify_identities_full, GapQuery, Regime, Route, Settings, Suite,
    Tolerances,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const DEFAULT_SEED: u64 = 1;
pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 2048;
/// Orders below this are accepted but too coarse for the default tolerances.
pub const RECOMMENDED_MIN_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Effective configuration of a run, echoed into every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub quadrature_order: usize,
    pub ode_tolerance: f64,
    /// Overrides every per-identity tolerance when set.
    pub identity_tolerance: Option<f64>,
    pub output_format: OutputFormat,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            quadrature_order: crate::gap::DEFAULT_ORDER,
            ode_tolerance: crate::painleve::DEFAULT_TOLERANCE,
            identity_tolerance: None,
            output_format: OutputFormat::Csv,
            seed: DEFAULT_SEED,
        }
    }
}

impl RunConfig {
    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), String> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| format!("config line {}: invalid {what} '{value}'", lineno + 1);
            match key {
                "quadrature_order" => {
                    self.quadrature_order = value.parse().map_err(|_| bad(key))?
                }
                "ode_tolerance" => self.ode_tolerance = value.parse().map_err(|_| bad(key))?,
                "identity_tolerance" => {
                    self.identity_tolerance = Some(value.parse().map_err(|_| bad(key))?)
                }
                "output_format" => {
                    self.output_format =
                        OutputFormat::from_str(value, true).map_err(|_| bad(key))?;
                }
                "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
                _ => return Err(format!("config line {}: unknown key '{key}'", lineno + 1)),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(MIN_ORDER..=MAX_ORDER).contains(&self.quadrature_order) {
            return Err(format!(
                "quadrature order must lie in [{MIN_ORDER}, {MAX_ORDER}], got {}",
                self.quadrature_order
            ));
        }
        if !(self.ode_tolerance > 0.0 && self.ode_tolerance.is_finite()) {
            return Err(format!(
                "ODE tolerance must be positive, got {}",
                self.ode_tolerance
            ));
        }
        if let Some(t) = self.identity_tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("identity tolerance must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn settings(&self) -> Settings {
        Settings {
            order: self.quadrature_order,
            ode_tolerance: self.ode_tolerance,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gapprob",
    version,
    about = "Gap probabilities of random matrix ensembles"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Plain `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub quadrature_order: Option<usize>,
    #[arg(long, global = true)]
    pub ode_tol: Option<f64>,
    #[arg(long, global = true)]
    pub identity_tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub regime: Regime,
    #[arg(long)]
    pub beta: u8,
    /// Laguerre exponent, hard edge only.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    #[arg(long, default_value = "fredholm")]
    pub route: Route,
}

impl QueryArgs {
    fn query(&self, s: f64) -> GapQuery {
        let q = GapQuery::new(self.regime, self.beta, s)
            .with_xi(self.xi)
            .with_route(self.route);
        match self.a {
            Some(a) => q.with_a(a),
            None => q,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one gap probability.
    Eval {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
    },
    /// Tabulate a gap probability over an increasing grid of `s`.
    Table {
        #[command(flatten)]
        query: QueryArgs,
        /// Comma-separated, strictly increasing.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        s: Vec<f64>,
    },
    /// Run an identity suite and report every check.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
    /// Monte Carlo estimate of an edge gap probability at finite N.
    Sample {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        beta: u8,
        #[arg(long = "n")]
        n: usize,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value = "soft")]
        edge: Edge,
        /// Laguerre exponent.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        a: f64,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Singular { .. } | Error::Integration { .. } => EXIT_FAILURE,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Round to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Text form of `x` with at most 15 significant digits.
pub fn fmt15(x: f64) -> String {
    let r = round15(x);
    if r == 0.0 || (1e-5..1e15).contains(&r.abs()) {
        format!("{r}")
    } else if r.is_finite() {
        let s = format!("{r:e}");
        s.replace("e", "e+").replace("e+-", "e-")
    } else {
        format!("{r}")
    }
}

fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(r) = n
                    .as_f64()
                    .map(round15)
                    .and_then(serde_json::Number::from_f64)
                {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn document(config: &RunConfig, results: Value, extra: Option<(&str, Value)>) -> String {
    let mut doc = json!({
        "config": config,
        "results": results,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let Some((key, value)) = extra {
        doc[key] = value;
    }
    round_json(&mut doc);
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Merge defaults, the optional config file and flags, in that order.
pub fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(Failure::usage)?;
    }
    if let Some(v) = args.quadrature_order {
        cfg.quadrature_order = v;
    }
    if let Some(v) = args.ode_tol {
        cfg.ode_tolerance = v;
    }
    if let Some(v) = args.identity_tol {
        cfg.identity_tolerance = Some(v);
    }
    if let Some(v) = args.format {
        cfg.output_format = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn gap_record(q: &GapQuery, value: &crate::gap::GapValue) -> Value {
    json!({
        "regime": q.regime,
        "beta": q.beta,
        "s": q.s,
        "a": q.a,
        "xi": q.xi,
        "route": value.route,
        "value": value.value,
        "error_estimate": value.error_estimate,
        "fredholm": value.fredholm,
        "painleve": value.painleve,
    })
}

fn cmd_eval(
    cfg: &RunConfig,
    query: &QueryArgs,
    s: f64,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let q = query.query(s);
    let v = evaluate(&q, &cfg.settings())?;
    let body = document(cfg, json!([gap_record(&q, &v)]), None);
    writeln!(out, "{}\n{body}", fmt15(v.value)).map_err(io_failure)
}

fn cmd_table(
    cfg: &RunConfig,
    query: &QueryArgs,
    grid: &[f64],
    out: &mut dyn Write,
) -> Result<(), Failure> {
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(Failure::usage("grid values must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::usage("grid must be strictly increasing"));
    }
    let queries: Vec<GapQuery> = grid.iter().map(|&s| query.query(s)).collect();
    for q in &queries {
        q.validate()?;
    }
    let values = evaluate_many(&queries, &cfg.settings())
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let text = match cfg.output_format {
        OutputFormat::Csv => {
            let mut csv = String::from("s,value,route,error_estimate\n");
            for (q, v) in queries.iter().zip(&values) {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt15(q.s),
                    fmt15(v.value),
                    v.route,
                    fmt15(v.error_estimate)
                ));
            }
            csv
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = queries
                .iter()
                .zip(&values)
                .map(|(q, v)| gap_record(q, v))
                .collect();
            document(cfg, Value::Array(rows), None) + "\n"
        }
    };
    out.write_all(text.as_bytes()).map_err(io_failure)
}

fn cmd_verify(
    cfg: &RunConfig,
    suite: Suite,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<bool, Failure> {
    let tol = Tolerances {
        identity: cfg.identity_tolerance,
        settings: cfg.settings(),
    };
    let run = verify_identities_full(suite, &tol);
    let failed: Vec<_> = run.reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        writeln!(
            err,
            "FAIL {} [{}] abs_diff={} tolerance={} {}",
            r.identity_name,
            r.parameters,
            fmt15(r.abs_diff),
            fmt15(r.tolerance),
            r.diagnostics
        )
        .map_err(io_failure)?;
    }
    let summary = json!({
        "suite": suite,
        "total": run.reports.len(),
        "failed": failed.len(),
        "max_fredholm_error": run.max_fredholm_error,
    });
    let body = document(
        cfg,
        serde_json::to_value(&run.reports).expect("serializable"),
        Some(("summary", summary)),
    );
    writeln!(out, "{body}").map_err(io_failure)?;
    Ok(failed.is_empty())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    cfg: &RunConfig,
    family: Family,
    beta: u8,
    n: usize,
    s: f64,
    trials: usize,
    edge: Edge,
    a: f64,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let spec = EnsembleSpec {
        family,
        beta,
        n,
        a,
        seed: cfg.seed,
    };
    let gap = empirical_gap(&spec, edge, s, trials, Execution::default())?;
    let q = match edge {
        Edge::Soft => GapQuery::new(Regime::Soft, beta, s),
        Edge::Hard => GapQuery::new(Regime::Hard, beta, s).with_a(a),
    };
    let analytic = evaluate(&q, &cfg.settings())?;
    let z = if gap.ci_halfwidth > 0.0 {
        (gap.estimate - analytic.value) / (gap.ci_halfwidth / 1.96)
    } else {
        f64::NAN
    };
    let record = json!({
        "family": family,
        "beta": beta,
        "n": n,
        "a": a,
        "edge": edge,
        "s": s,
        "seed": cfg.seed,
        "rng": RNG_ALGORITHM,
        "estimate": gap.estimate,
        "trials": gap.trials,
        "ci_halfwidth": gap.ci_halfwidth,
        "analytic": analytic.value,
        "analytic_error_estimate": analytic.error_estimate,
        "z_score": z,
    });
    writeln!(out, "{}", document(cfg, json!([record]), None)).map_err(io_failure)
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        message: format!("write failed: {e}"),
    }
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = resolve_config(&cli.config).and_then(|cfg| {
        if cfg.quadrature_order < RECOMMENDED_MIN_ORDER {
            let _ = writeln!(
                err,
                "warning: quadrature order {} is below {RECOMMENDED_MIN_ORDER}",
                cfg.quadrature_order
            );
        }
        match &cli.command {
            Command::Eval { query, s } => cmd_eval(&cfg, query, *s, out).map(|_| EXIT_OK),
            Command::Table { query, s } => cmd_table(&cfg, query, s, out).map(|_| EXIT_OK),
            Command::Verify { suite } => {
                cmd_verify(&cfg, *suite, out, err).map(|ok| if ok { EXIT_OK } else { EXIT_FAILURE })
            }
            Command::Sample {
                family,
                beta,
                n,
                s,
                trials,
                edge,
                a,
            } => cmd_sample(&cfg, *family, *beta, *n, *s, *trials, *edge, *a, out).map(|_| EXIT_OK),
        }
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
