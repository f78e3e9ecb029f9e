//! Command-line front end.
//!
//! Every run writes its effective configuration ahead of the results: as
//! `# key=value` comment lines in CSV output, or as a `config` object in JSON
//! output. Output is buffered and only written once the command succeeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansion::{cdf_expansion, composite_coefficients, st_moments, CumulantTensors};
use crate::expfam::{catalog_model, parse_fixed, read_data_file, CatalogModel, ExponentialFamily, CATALOG_NAMES};
use crate::localpower::{local_powers, noncentrality, power_ordering, CoefficientSource, Direction, PowerQuery, DEFAULT_EPS_GRID};
use crate::montecarlo::{simulate, SimulationConfig, SimulationReport};
use crate::teststats::{compute_statistics, TestKind};

/// Grid used by `power` when `--eps` is given as a bare `:`.
pub const DEFAULT_POWER_GRID: (f64, f64, f64) = (0.0, 2.0, 0.1);

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "gradpower",
    version,
    about = "Gradient, likelihood-ratio, Wald and score tests for one-parameter exponential families"
)]
pub struct Cli {
    /// Output format; defaults to csv for `power` and `expand`, text otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to this file instead of standard output.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    /// Structured text (JSON).
    #[value(alias = "json")]
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect the model catalog.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Compute the four test statistics for a data file.
    Stat(StatArgs),
    /// Tabulate local power over a grid of ε.
    Power(PowerArgs),
    /// Rank the four tests by local power.
    Order(OrderArgs),
    /// Evaluate the composite-hypothesis expansion from a tensor file.
    Expand(ExpandArgs),
    /// Monte Carlo rejection rates and gradient-statistic moments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// List catalog entries.
    List,
    /// Show α, ζ, d, v, support and MLE of one entry.
    Info {
        /// Catalog entry name.
        name: String,
        /// Known constants, e.g. `k=2`.
        #[arg(long, default_value = "")]
        fixed: String,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Catalog entry name (see `model list`).
    #[arg(long)]
    pub model: String,
    /// Known constants as a comma-separated key=value list, e.g. `k=2`.
    #[arg(long, default_value = "")]
    pub fixed: String,
}

#[derive(Debug, Args)]
pub struct StatArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Null value θ0.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: f64,
    /// Observation file: one value per line, `#` comments allowed.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Null value θ0.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: f64,
    /// A single ε, a grid `a:b:step`, or `:` for 0:2:0.1.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_grid)]
    pub eps: Grid,
    /// Sample size.
    #[arg(long)]
    pub n: u64,
    /// Nominal size.
    #[arg(long)]
    pub alpha: f64,
    /// Gradient `a_40` coefficient source: consistent or table.
    #[arg(long, default_value = "consistent", value_parser = parse_source)]
    pub source: CoefficientSource,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Null value θ0.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: f64,
    /// Nominal size.
    #[arg(long)]
    pub alpha: f64,
    /// Side of θ0 on which the alternatives lie: above or below.
    #[arg(long, value_parser = parse_direction)]
    pub direction: Direction,
    /// Gradient `a_40` coefficient source: consistent or table.
    #[arg(long, default_value = "consistent", value_parser = parse_source)]
    pub source: CoefficientSource,
    /// Comma-separated |ε| magnitudes to examine.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPS_GRID.to_vec())]
    pub eps_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    /// Tensor file (JSON with fields p, q, K, k3, k21 and optional k111).
    #[arg(long, value_name = "FILE")]
    pub tensors: PathBuf,
    /// Comma-separated ε vector of length p - q.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Sample size.
    #[arg(long)]
    pub n: u64,
    /// Evaluation points: a comma list or a grid `a:b:step`.
    #[arg(long, value_parser = parse_points)]
    pub x: Points,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Null value θ0.
    #[arg(long, allow_negative_numbers = true)]
    pub theta0: f64,
    /// Local alternative: data drawn at θ0 + ε/√n.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    /// Observations per replicate.
    #[arg(long)]
    pub n: usize,
    /// Number of replicates.
    #[arg(long)]
    pub reps: usize,
    /// Nominal size.
    #[arg(long)]
    pub alpha: f64,
    /// Seed; replicate j always uses stream j of this seed.
    #[arg(long)]
    pub seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, env = "GRADPOWER_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Also predict power with the paper-table gradient coefficients.
    #[arg(long)]
    pub compare_sources: bool,
}

/// An ε specification for `power`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: String,
    pub values: Vec<f64>,
}

/// Evaluation points for `expand`.
#[derive(Debug, Clone, PartialEq)]
pub struct Points(pub Vec<f64>);

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

/// Evenly spaced `a, a + step, ..., b` (inclusive when `b` is on the lattice).
pub fn expand_range(a: f64, b: f64, step: f64) -> std::result::Result<Vec<f64>, String> {
    if !(step > 0.0) {
        return Err(format!("grid step must be positive, got {step}"));
    }
    if b < a {
        return Err(format!("grid end {b} is below its start {a}"));
    }
    let intervals = ((b - a) / step + 1e-9).floor();
    if intervals > 1e6 {
        return Err("grid has more than a million points".to_string());
    }
    let m = intervals as usize;
    let end = a + intervals * step;
    Ok((0..=m).map(|i| if m == 0 { a } else { a + (end - a) * i as f64 / m as f64 }).collect())
}

fn parse_range(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("`{s}` is not a grid of the form a:b:step"));
    }
    expand_range(parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?)
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let s = s.trim();
    let values = if s == ":" {
        let (a, b, step) = DEFAULT_POWER_GRID;
        expand_range(a, b, step)?
    } else if s.contains(':') {
        parse_range(s)?
    } else {
        vec![parse_f64(s)?]
    };
    Ok(Grid { spec: s.to_string(), values })
}

fn parse_points(s: &str) -> std::result::Result<Points, String> {
    if s.contains(':') {
        return parse_range(s).map(Points);
    }
    s.split(',').map(parse_f64).collect::<std::result::Result<Vec<_>, _>>().map(Points)
}

fn parse_source(s: &str) -> std::result::Result<CoefficientSource, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_DOMAIN
    }
}

/// Parse `argv` (including the program name), run, and return the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli, stderr) {
        Ok(text) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, text.as_bytes())
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
                None => stdout.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    exit_code(&e)
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Run a parsed command and return its complete output.
pub fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<String> {
    let default = match cli.command {
        Command::Power(_) | Command::Expand(_) => Format::Csv,
        _ => Format::Text,
    };
    let format = cli.format.unwrap_or(default);
    match &cli.command {
        Command::Model(m) => model_cmd(m, format),
        Command::Stat(a) => stat_cmd(a, format),
        Command::Power(a) => power_cmd(a, format),
        Command::Order(a) => order_cmd(a, format),
        Command::Expand(a) => expand_cmd(a, format),
        Command::Simulate(a) => simulate_cmd(a, format, stderr),
    }
}

/// CSV writer with a comment header.
struct Csv {
    out: String,
}

impl Csv {
    fn new(command: &str) -> Self {
        let mut c = Csv { out: String::new() };
        c.comment("command", command);
        c
    }

    fn comment(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "# {key}={value}");
    }

    fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(|f| f.as_ref()).collect();
        let _ = writeln!(self.out, "{}", line.join(","));
    }
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn build_model(args: &ModelArgs) -> Result<CatalogModel> {
    catalog_model(&args.model, &parse_fixed(&args.fixed)?)
}

fn fixed_text(model: &CatalogModel) -> String {
    model.fixed_params().iter().map(|(k, v)| format!("{k}={}", fmt_f64(*v))).collect::<Vec<_>>().join(";")
}

fn fixed_json(model: &CatalogModel) -> Value {
    Value::Object(model.fixed_params().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn model_cmd(cmd: &ModelCommand, format: Format) -> Result<String> {
    match cmd {
        ModelCommand::List => {
            let keys = |name: &str| -> &'static str {
                match name {
                    "normal-variance" | "invnormal-theta" => "mu",
                    "normal-mean" | "invnormal-mu" => "theta",
                    "gamma" | "pareto" | "laplace" => "k",
                    "power" => "phi",
                    _ => "",
                }
            };
            match format {
                Format::Csv => {
                    let mut csv = Csv::new("model list");
                    csv.row(&["name", "fixed"]);
                    for name in CATALOG_NAMES {
                        csv.row(&[name, keys(name)]);
                    }
                    Ok(csv.out)
                }
                Format::Text => {
                    let models: Vec<Value> =
                        CATALOG_NAMES.iter().map(|n| json!({"name": n, "fixed": keys(n)})).collect();
                    Ok(to_json_text(&json!({"command": "model list", "models": models})))
                }
            }
        }
        ModelCommand::Info { name, fixed } => {
            let model = catalog_model(name, &parse_fixed(fixed)?)?;
            let info = model.info();
            let fields: Vec<(&str, String)> = vec![
                ("name", info.name.to_string()),
                ("parameter", info.parameter.to_string()),
                ("fixed", fixed_text(&model)),
                ("alpha", info.alpha.to_string()),
                ("zeta", info.zeta.to_string()),
                ("d", info.d.to_string()),
                ("v", info.v.to_string()),
                ("support", info.support.to_string()),
                ("param_space", info.param_space.to_string()),
                ("mle", info.mle.to_string()),
                ("natural", model.is_natural().to_string()),
            ];
            match format {
                Format::Csv => {
                    let mut csv = Csv::new("model info");
                    csv.row(&["field", "value"]);
                    for (k, v) in fields {
                        csv.row(&[k.to_string(), csv_quote(&v)]);
                    }
                    Ok(csv.out)
                }
                Format::Text => {
                    let mut obj: serde_json::Map<String, Value> =
                        fields.into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
                    obj.insert("fixed".into(), fixed_json(&model));
                    obj.insert("natural".into(), Value::Bool(model.is_natural()));
                    Ok(to_json_text(&json!({"command": "model info", "model": Value::Object(obj)})))
                }
            }
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn stat_cmd(a: &StatArgs, format: Format) -> Result<String> {
    let model = build_model(&a.model)?;
    let data = read_data_file(&a.data)?;
    let r = compute_statistics(&model, &data, a.theta0)?;
    match format {
        Format::Csv => {
            let mut csv = Csv::new("stat");
            csv.comment("model", model.name());
            csv.comment("fixed", fixed_text(&model));
            csv.comment("theta0", fmt_f64(a.theta0));
            csv.comment("data", a.data.display());
            csv.comment("n", r.n);
            csv.comment("d_bar", fmt_f64(r.d_bar));
            csv.comment("theta_hat", fmt_f64(r.theta_hat));
            csv.row(&["test", "statistic", "p_value"]);
            for t in TestKind::ALL {
                csv.row(&[t.label().to_string(), fmt_f64(r.s[t.index()]), fmt_f64(r.p_values[t.index()])]);
            }
            Ok(csv.out)
        }
        Format::Text => {
            let per_test = |v: &[f64; 4]| -> Value {
                Value::Object(TestKind::ALL.iter().map(|t| (t.label().to_string(), json!(v[t.index()]))).collect())
            };
            Ok(to_json_text(&json!({
                "command": "stat",
                "config": {
                    "model": model.name(),
                    "fixed": fixed_json(&model),
                    "theta0": a.theta0,
                    "data": a.data.display().to_string(),
                },
                "n": r.n,
                "d_bar": r.d_bar,
                "theta_hat": r.theta_hat,
                "statistics": per_test(&r.s),
                "p_values": per_test(&r.p_values),
            })))
        }
    }
}

fn power_cmd(a: &PowerArgs, format: Format) -> Result<String> {
    let model = build_model(&a.model)?;
    let mut rows = Vec::with_capacity(a.eps.values.len());
    for &eps in &a.eps.values {
        let q = PowerQuery { theta0: a.theta0, eps, n: a.n, alpha: a.alpha };
        let p = local_powers(&model, &q, a.source)?;
        rows.push((eps, noncentrality(&model, a.theta0, eps), p));
    }
    let x = PowerQuery { theta0: a.theta0, eps: 0.0, n: a.n, alpha: a.alpha }.critical_value()?;
    let clamped: Vec<String> =
        rows.iter().filter(|r| r.2.iter().any(|v| v.out_of_range)).map(|r| fmt_f64(r.0)).collect();
    match format {
        Format::Csv => {
            let mut csv = Csv::new("power");
            csv.comment("model", model.name());
            csv.comment("fixed", fixed_text(&model));
            csv.comment("theta0", fmt_f64(a.theta0));
            csv.comment("eps", &a.eps.spec);
            csv.comment("n", a.n);
            csv.comment("alpha", fmt_f64(a.alpha));
            csv.comment("source", a.source);
            csv.comment("critical_value", fmt_f64(x));
            if !clamped.is_empty() {
                csv.comment("clamped_eps", clamped.join(";"));
            }
            csv.row(&["eps", "lambda", "pi_lr", "pi_wald", "pi_score", "pi_gradient"]);
            for (eps, lambda, p) in &rows {
                let mut fields = vec![fmt_f64(*eps), fmt_f64(*lambda)];
                fields.extend(p.iter().map(|v| fmt_f64(v.power)));
                csv.row(&fields);
            }
            Ok(csv.out)
        }
        Format::Text => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(eps, lambda, p)| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("eps".into(), json!(eps));
                    obj.insert("lambda".into(), json!(lambda));
                    for t in TestKind::ALL {
                        obj.insert(format!("pi_{}", t.label()), json!(p[t.index()]));
                    }
                    Value::Object(obj)
                })
                .collect();
            Ok(to_json_text(&json!({
                "command": "power",
                "config": {
                    "model": model.name(),
                    "fixed": fixed_json(&model),
                    "theta0": a.theta0,
                    "eps": a.eps.spec,
                    "n": a.n,
                    "alpha": a.alpha,
                    "source": a.source,
                },
                "critical_value": x,
                "rows": rows,
            })))
        }
    }
}

fn order_cmd(a: &OrderArgs, format: Format) -> Result<String> {
    let model = build_model(&a.model)?;
    let report = power_ordering(&model, a.theta0, a.direction, a.alpha, a.source, &a.eps_grid)?;
    let consensus = report.consensus.as_ref().map(|o| o.to_string());
    let grid_text = a.eps_grid.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";");
    match format {
        Format::Csv => {
            let mut csv = Csv::new("order");
            csv.comment("model", model.name());
            csv.comment("fixed", fixed_text(&model));
            csv.comment("theta0", fmt_f64(a.theta0));
            csv.comment("alpha", fmt_f64(a.alpha));
            csv.comment("direction", direction_label(a.direction));
            csv.comment("source", a.source);
            csv.comment("eps_grid", grid_text);
            csv.comment("critical_value", fmt_f64(report.critical_value));
            csv.comment("ordering", consensus.as_deref().unwrap_or("none (ordering changes with eps)"));
            csv.row(&["eps", "lambda", "ordering", "uniform", "consistent"]);
            for e in &report.per_eps {
                csv.row(&[
                    fmt_f64(e.eps),
                    fmt_f64(e.lambda),
                    e.ordering.to_string(),
                    e.ordering.uniform.to_string(),
                    e.ordering.consistent.to_string(),
                ]);
            }
            Ok(csv.out)
        }
        Format::Text => {
            let per_eps: Vec<Value> = report
                .per_eps
                .iter()
                .map(|e| {
                    json!({
                        "eps": e.eps,
                        "lambda": e.lambda,
                        "ordering": e.ordering.to_string(),
                        "uniform": e.ordering.uniform,
                        "consistent": e.ordering.consistent,
                        "pairs": e.pairs,
                    })
                })
                .collect();
            Ok(to_json_text(&json!({
                "command": "order",
                "config": {
                    "model": model.name(),
                    "fixed": fixed_json(&model),
                    "theta0": a.theta0,
                    "alpha": a.alpha,
                    "direction": a.direction,
                    "source": a.source,
                    "eps_grid": a.eps_grid,
                },
                "critical_value": report.critical_value,
                "ordering": consensus,
                "per_eps": per_eps,
            })))
        }
    }
}

fn direction_label(d: Direction) -> &'static str {
    match d {
        Direction::Above => "above",
        Direction::Below => "below",
    }
}

fn expand_cmd(a: &ExpandArgs, format: Format) -> Result<String> {
    let tensors = CumulantTensors::read(&a.tensors)?;
    let e = composite_coefficients(&tensors, &a.eps)?;
    let m = st_moments(&tensors, &a.eps, a.n)?;
    let mut cdf = Vec::with_capacity(a.x.0.len());
    for &x in &a.x.0 {
        cdf.push((x, cdf_expansion(&e, a.n, x)?));
    }
    let eps_text = a.eps.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";");
    match format {
        Format::Csv => {
            let mut csv = Csv::new("expand");
            csv.comment("tensors", a.tensors.display());
            csv.comment("p", tensors.p());
            csv.comment("q", tensors.q());
            csv.comment("eps", eps_text);
            csv.comment("n", a.n);
            csv.row(&[
                "x", "cdf", "cdf_raw", "f", "lambda", "a0", "a1", "a2", "a3", "mean_literal", "mean_mixture",
                "var_literal", "third_literal",
            ]);
            for (x, v) in &cdf {
                let fields: Vec<String> = [
                    *x, v.power, v.raw, e.f, e.lambda, e.a[0], e.a[1], e.a[2], e.a[3], m.m1, m.mixture_mean, m.m2, m.m3,
                ]
                .iter()
                .map(|v| fmt_f64(*v))
                .collect();
                csv.row(&fields);
            }
            Ok(csv.out)
        }
        Format::Text => {
            let points: Vec<Value> = cdf
                .iter()
                .map(|(x, v)| json!({"x": x, "cdf": v.power, "cdf_raw": v.raw, "clamped": v.out_of_range}))
                .collect();
            Ok(to_json_text(&json!({
                "command": "expand",
                "config": {
                    "tensors": a.tensors.display().to_string(),
                    "p": tensors.p(),
                    "q": tensors.q(),
                    "eps": a.eps,
                    "n": a.n,
                },
                "f": e.f,
                "lambda": e.lambda,
                "a": e.a,
                "moments": m,
                "cdf": points,
            })))
        }
    }
}

fn simulate_cmd(a: &SimulateArgs, format: Format, stderr: &mut dyn Write) -> Result<String> {
    let model = build_model(&a.model)?;
    let config = SimulationConfig {
        theta0: a.theta0,
        eps: a.eps,
        n: a.n,
        reps: a.reps,
        alpha: a.alpha,
        seed: a.seed,
        compare_sources: a.compare_sources,
    };
    let threads = a.threads.map(|t| t as usize);
    let report = simulate(&model, &config, threads)?;
    let _ = writeln!(stderr, "wall time: {:.3} s", report.wall_time.as_secs_f64());
    Ok(match format {
        Format::Csv => simulation_csv(&model, &report),
        Format::Text => simulation_json(&model, &report),
    })
}

fn simulation_csv(model: &CatalogModel, r: &SimulationReport) -> String {
    let c = &r.config;
    let mut csv = Csv::new("simulate");
    csv.comment("model", model.name());
    csv.comment("fixed", fixed_text(model));
    csv.comment("theta0", fmt_f64(c.theta0));
    csv.comment("eps", fmt_f64(c.eps));
    csv.comment("n", c.n);
    csv.comment("reps", c.reps);
    csv.comment("alpha", fmt_f64(c.alpha));
    csv.comment("seed", c.seed);
    csv.comment("compare_sources", c.compare_sources);
    csv.comment("theta_alternative", fmt_f64(r.theta_alternative));
    csv.comment("critical_value", fmt_f64(r.critical_value));
    csv.comment("completed", r.completed);
    csv.comment("failures", r.failures);
    let g = &r.gradient_moments;
    csv.comment("gradient_mean", format!("{} (se {})", fmt_f64(g.mean), fmt_f64(g.mean_se)));
    csv.comment("gradient_variance", format!("{} (se {})", fmt_f64(g.variance), fmt_f64(g.variance_se)));
    csv.comment(
        "gradient_third_central",
        format!("{} (se {})", fmt_f64(g.third_central), fmt_f64(g.third_central_se)),
    );
    let m = &r.moment_adjudication;
    csv.comment("mixture_mean", format!("{} ({:+.3} se)", fmt_f64(m.mixture_mean), m.mixture_z));
    csv.comment("literal_mean", format!("{} ({:+.3} se)", fmt_f64(m.literal_mean), m.literal_z));
    if let Some(s) = &r.source_adjudication {
        csv.comment("source_adjudication", &s.statement);
    }
    let mut header = vec!["test".to_string(), "rejection_rate".to_string(), "mc_stderr".to_string()];
    header.extend(r.predicted_power.iter().map(|p| format!("predicted_{}", p.source.label().replace('-', "_"))));
    csv.row(&header);
    for t in TestKind::ALL {
        let i = t.index();
        let mut fields = vec![t.label().to_string(), fmt_f64(r.rejection_rate[i]), fmt_f64(r.mc_stderr[i])];
        fields.extend(r.predicted_power.iter().map(|p| fmt_f64(p.power[i])));
        csv.row(&fields);
    }
    csv.out
}

fn simulation_json(model: &CatalogModel, r: &SimulationReport) -> String {
    let per_test = |v: &[f64; 4]| -> Value {
        Value::Object(TestKind::ALL.iter().map(|t| (t.label().to_string(), json!(v[t.index()]))).collect())
    };
    let predicted: BTreeMap<&str, Value> = r
        .predicted_power
        .iter()
        .map(|p| (p.source.label(), json!({"power": per_test(&p.power), "raw": per_test(&p.raw)})))
        .collect();
    to_json_text(&json!({
        "command": "simulate",
        "config": {
            "model": model.name(),
            "fixed": fixed_json(model),
            "theta0": r.config.theta0,
            "eps": r.config.eps,
            "n": r.config.n,
            "reps": r.config.reps,
            "alpha": r.config.alpha,
            "seed": r.config.seed,
            "compare_sources": r.config.compare_sources,
        },
        "theta_alternative": r.theta_alternative,
        "critical_value": r.critical_value,
        "completed": r.completed,
        "failures": r.failures,
        "rejection_rate": per_test(&r.rejection_rate),
        "mc_stderr": per_test(&r.mc_stderr),
        "predicted_power": predicted,
        "gradient_moments": r.gradient_moments,
        "moment_adjudication": r.moment_adjudication,
        "source_adjudication": r.source_adjudication,
    }))
}
