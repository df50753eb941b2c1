//! Command-line front end: argument parsing, dispatch and report emission.

pub mod svg;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use coalesce::dist::{parse_dist, preset, preset_names, DistError, DistSpec};
use coalesce::interval::{ColoredInterval, Colour};
use coalesce::lbound::{certify_trajectory_with, trajectory, write_trajectory_csv, LBoundState, EPS0};
use coalesce::montecarlo::{aggregate, compare_dominance, write_trials_csv, Experiment};
use coalesce::renorm::{certify, RenormError, RenormParams, Verdict};
use coalesce::verify::{
    verify_e1_largex, verify_e1_with, verify_toy_with, E1Config, Status, ToyConfig, VerificationReport, VerifyError,
    TOY_LAMBDA,
};
use coalesce::Exec;
use serde::Serialize;
use serde_json::{json, Value};

/// Version of the JSON documents written by every subcommand.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_RUNTIME: i32 = 70;

#[derive(Debug, Parser)]
#[command(
    name = "coalesce",
    version,
    about = "Two-colour interval coalescence: simulation, estimation and verification"
)]
pub struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "COALESCE_THREADS")]
    pub threads: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ColourArg {
    Red,
    Blue,
}

impl From<ColourArg> for Colour {
    fn from(c: ColourArg) -> Colour {
        match c {
            ColourArg::Red => Colour::Red,
            ColourArg::Blue => Colour::Blue,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PairArgs {
    /// Red length law, e.g. "pareto(1)".
    #[arg(long)]
    pub red: Option<String>,
    /// Blue length law, e.g. "sexp(3)".
    #[arg(long)]
    pub blue: Option<String>,
    /// Named red/blue pair (see preset-list).
    #[arg(long, conflicts_with_all = ["red", "blue"])]
    pub preset: Option<String>,
    /// Preset parameter, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_kv)]
    pub params: Vec<(String, f64)>,
    /// Colour of the central segment of a good window.
    #[arg(long, value_enum)]
    pub target: Option<ColourArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one window, close it and optionally render threshold snapshots.
    Simulate {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long, default_value_t = 0.23)]
        alpha: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Number of snapshot bars when thresholds are not given.
        #[arg(long, default_value_t = 6)]
        snapshots: usize,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Include the initial segment lengths and recolour counts.
        #[arg(long)]
        full: bool,
    },
    /// Estimate the badness rate q(n) with an exact binomial confidence bound.
    EstimateQ {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long, value_parser = parse_count)]
        trials: u64,
        #[arg(long, default_value_t = 0.23)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        /// Rate the confidence bound is stated against; defaults to the
        /// preset threshold, else 0.058.
        #[arg(long)]
        q_star: Option<f64>,
        /// Per-trial CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Renormalisation certificate for an asserted badness rate.
    CertifyRenorm {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        k: u64,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        /// Asserted q(n).
        #[arg(long)]
        q: f64,
        /// log10 probability attached to the asserted rate.
        #[arg(long, allow_hyphen_values = true)]
        confidence: Option<f64>,
    },
    /// Evolve and certify the (a, lambda) bounds of the l-bounding argument.
    EvolveLbound {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "big-lambda", default_value_t = TOY_LAMBDA)]
        big_lambda: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = EPS0)]
        eps0: f64,
        #[arg(long, default_value_t = 1_000_000, value_parser = parse_count)]
        max_steps: u64,
        /// Trajectory CSV (t, a, lambda, zeta, xi).
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1000, value_parser = parse_count)]
        csv_steps: u64,
    },
    /// Rectangle-subdivision check of the two-summand Pareto inequality.
    VerifyE1 {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-10)]
        delta: f64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 1.0])]
        a_range: Vec<f64>,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [4.0, 100.0])]
        x_range: Vec<f64>,
        /// Start of the large-x closed-form check.
        #[arg(long, default_value_t = 100.0)]
        largex_x0: f64,
        #[arg(long, default_value_t = 60)]
        max_depth: u32,
        #[arg(long, default_value_t = 1e-9)]
        min_width: f64,
        /// Include every certified leaf rectangle.
        #[arg(long)]
        leaves: bool,
    },
    /// Case analysis for the uniform-against-constant example.
    VerifyToy {
        #[arg(long)]
        gamma: f64,
        #[arg(long, value_enum)]
        side: ColourArg,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 0.999)]
        a: f64,
        #[arg(long, default_value_t = TOY_LAMBDA)]
        lambda: f64,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long, default_value_t = 64)]
        band_terms: u64,
    },
    /// Empirical tail comparison: is X stochastically at least Y?
    VerifyDominance {
        /// Law expected to dominate; with --preset, the red law.
        #[arg(long)]
        x: Option<String>,
        /// Law expected to be dominated; with --preset, the blue law.
        #[arg(long)]
        y: Option<String>,
        #[arg(long, conflicts_with_all = ["x", "y"])]
        preset: Option<String>,
        #[arg(long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
        #[arg(long, default_value_t = 1_000_000, value_parser = parse_count)]
        samples: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4.0)]
        sigmas: f64,
    },
    /// List the named distribution pairs.
    PresetList,
    /// Render an SVG from a colouring or a trajectory CSV.
    Plot {
        /// Segment list such as "R:1, B:2.5, R:0.7".
        #[arg(long, conflicts_with = "trajectory")]
        colouring: Option<String>,
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long, default_value_t = 6)]
        snapshots: usize,
        /// CSV written by evolve-lbound.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Dist(d) => runtime(d),
            other => usage(other),
        }
    }
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// Accepts integers written as `20000`, `2e6` or `2_000_000`.
fn parse_count(s: &str) -> Result<u64, String> {
    let t = s.replace('_', "");
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = t.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(63) {
        Ok(f as u64)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}

fn parse_spec(text: &str) -> Result<DistSpec, CliError> {
    parse_dist(text).map_err(usage)
}

struct Pair {
    red: DistSpec,
    blue: DistSpec,
    target: Colour,
    q_threshold: Option<f64>,
}

fn preset_pair(name: &str, params: &[(String, f64)]) -> Result<Pair, CliError> {
    let map: BTreeMap<String, f64> = params.iter().cloned().collect();
    let p = preset(name, &map).map_err(|e| match e {
        DistError::UnknownPreset(_) | DistError::MissingParam(_) | DistError::Invalid(_) => usage(e),
        other => runtime(other),
    })?;
    Ok(Pair { red: p.red, blue: p.blue, target: p.target, q_threshold: p.q_threshold })
}

fn resolve(pair: &PairArgs) -> Result<Pair, CliError> {
    let mut p = match (&pair.preset, &pair.red, &pair.blue) {
        (Some(name), _, _) => preset_pair(name, &pair.params)?,
        (None, Some(r), Some(b)) => {
            Pair { red: parse_spec(r)?, blue: parse_spec(b)?, target: Colour::Blue, q_threshold: None }
        }
        _ => return Err(usage("give --preset, or both --red and --blue")),
    };
    if let Some(t) = pair.target {
        p.target = t.into();
    }
    Ok(p)
}

fn colour_name(c: Colour) -> &'static str {
    match c {
        Colour::Red => "red",
        Colour::Blue => "blue",
    }
}

fn envelope(command: &str, body: Value) -> Value {
    let mut doc = json!({ "schema_version": SCHEMA_VERSION, "command": command });
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
    }
    doc
}

fn to_value(v: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(runtime)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    std::fs::File::create(path).map(std::io::BufWriter::new).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Outcome of a subcommand: the JSON document and the process exit code.
pub struct Outcome {
    pub doc: Value,
    pub code: i32,
}

fn report_outcome(command: &str, status: Status, body: Value) -> Outcome {
    Outcome { doc: envelope(command, body), code: status.exit_code() }
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be positive"));
        }
        // A pool that is already built (tests running in-process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

/// Runs one parsed command.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    set_threads(cli.threads)?;
    match &cli.command {
        Command::Simulate { pair, n, seed, trial, alpha, svg, snapshots, thresholds, full } => {
            let p = resolve(pair)?;
            if *n == 0 {
                return Err(usage("--n must be positive"));
            }
            let exp = Experiment::new(&p.red, &p.blue, *n, *alpha, *seed).target(p.target);
            let window = exp.window(*trial).map_err(runtime)?;
            let (closed, trace) = window.closure().map_err(runtime)?;
            let goodness = closed.central_segment(*alpha, p.target);
            if let Some(path) = svg {
                let ts = match thresholds {
                    Some(t) => t.clone(),
                    None => svg::auto_thresholds(&window, &closed, *snapshots),
                };
                svg::write_snapshots(&window, &ts, path).map_err(|e| match e {
                    svg::SvgError::Io(io) => runtime(format!("{}: {io}", path.display())),
                    other => usage(other),
                })?;
            }
            let segs = |c: &ColoredInterval<f64>| -> Vec<Value> {
                c.segments().map(|(col, l)| json!({ "colour": colour_name(col), "length": l })).collect()
            };
            let mut body = json!({
                "red": p.red.to_string(),
                "blue": p.blue.to_string(),
                "target": colour_name(p.target),
                "n": n,
                "seed": seed,
                "trial": trial,
                "alpha": alpha,
                "window_length": window.total_length(),
                "closure": segs(&closed),
                "goodness": to_value(&goodness)?,
            });
            if *full {
                body["window"] = Value::Array(segs(&window));
                body["recolour_counts"] = to_value(&trace.counts)?;
            }
            Ok(Outcome { doc: envelope("simulate", body), code: 0 })
        }
        Command::EstimateQ { pair, n, trials, alpha, seed, q_star, csv } => {
            let p = resolve(pair)?;
            if *n == 0 || *trials == 0 {
                return Err(usage("--n and --trials must be positive"));
            }
            let q_star = q_star.or(p.q_threshold).unwrap_or(0.058);
            let exp = Experiment::new(&p.red, &p.blue, *n, *alpha, *seed).target(p.target).exec(Exec::Parallel);
            let reports = exp.reports(*trials);
            if let Some(path) = csv {
                write_trials_csv(&reports, create(path)?).map_err(runtime)?;
            }
            let est = aggregate(&reports, q_star);
            let body = json!({
                "red": p.red.to_string(),
                "blue": p.blue.to_string(),
                "target": colour_name(p.target),
                "n": n,
                "trials": trials,
                "alpha": alpha,
                "seed": seed,
                "estimate": to_value(&est)?,
            });
            Ok(Outcome { doc: envelope("estimate-q", body), code: 0 })
        }
        Command::CertifyRenorm { pair, alpha, beta, k, n, q, confidence } => {
            let p = resolve(pair)?;
            let params = RenormParams { alpha: *alpha, beta: *beta, k: *k, n: *n };
            let cert = certify(params, &p.red, &p.blue, *q, *confidence).map_err(|e| match e {
                RenormError::NotRenormalisable { .. } => usage(e),
                RenormError::Dist(d) => runtime(d),
            })?;
            let code = match cert.verdict {
                Verdict::BlueWinCertified => 0,
                Verdict::NotCertified => Status::Inconclusive.exit_code(),
            };
            Ok(Outcome { doc: envelope("certify-renorm", json!({ "certificate": to_value(&cert)? })), code })
        }
        Command::EvolveLbound { a, lambda, eps, big_lambda, delta, eps0, max_steps, csv, csv_steps } => {
            if !(*delta > 0.0 && *delta < 1.0) {
                return Err(usage("--delta must lie in (0, 1)"));
            }
            if !(*lambda > 0.0 && *a >= 0.0 && *eps >= 0.0) {
                return Err(usage("need a >= 0, lambda > 0 and eps >= 0"));
            }
            let s0 = LBoundState::new(*a, *lambda, *eps, *big_lambda);
            if let Some(path) = csv {
                write_trajectory_csv(&trajectory(&s0, *csv_steps), create(path)?).map_err(runtime)?;
            }
            let rep = certify_trajectory_with(&s0, *delta, *eps0, *max_steps);
            Ok(report_outcome(
                "evolve-lbound",
                rep.status,
                json!({ "initial": to_value(&s0)?, "delta": delta, "eps0": eps0, "report": to_value(&rep)? }),
            ))
        }
        Command::VerifyE1 { lambda, delta, a_range, x_range, largex_x0, max_depth, min_width, leaves } => {
            if !(*lambda > 0.0 && *delta > 0.0) {
                return Err(usage("need lambda > 0 and delta > 0"));
            }
            let mut cfg = E1Config::new(*lambda, *delta);
            cfg.a_range = (a_range[0], a_range[1]);
            cfg.x_range = (x_range[0], x_range[1]);
            cfg.max_depth = *max_depth;
            cfg.min_width = *min_width;
            cfg.record_leaves = *leaves;
            let boxed = verify_e1_with(&cfg);
            let large = verify_e1_largex(*lambda, *largex_x0)?;
            let combined = VerificationReport::all_of(
                "e1",
                format!("Lambda = {lambda}, delta = {delta}, all a in [0, 1] and x >= 4"),
                vec![boxed, large],
            );
            Ok(report_outcome("verify-e1", combined.status, json!({ "report": to_value(&combined)? })))
        }
        Command::VerifyToy { gamma, side, c, a, lambda, x0, floor, band_terms } => {
            let side: Colour = (*side).into();
            let c = match (side, c) {
                (Colour::Blue, None) => return Err(usage("--side blue needs --c")),
                (_, c) => c.unwrap_or(0.0),
            };
            let mut cfg = ToyConfig::new(*gamma, side, c, *a);
            cfg.big_lambda = *lambda;
            cfg.band_terms = *band_terms;
            if let Some(x) = x0 {
                cfg.x0 = *x;
            }
            if let Some(f) = floor {
                cfg.floor = *f;
            }
            let rep = verify_toy_with(&cfg)?;
            Ok(report_outcome("verify-toy", rep.status, json!({ "report": to_value(&rep)? })))
        }
        Command::VerifyDominance { x, y, preset: name, params, samples, grid, seed, sigmas } => {
            let (xs, ys) = match (name, x, y) {
                (Some(name), _, _) => {
                    let p = preset_pair(name, params)?;
                    (p.red, p.blue)
                }
                (None, Some(x), Some(y)) => (parse_spec(x)?, parse_spec(y)?),
                _ => return Err(usage("give --preset, or both --x and --y")),
            };
            if *samples == 0 {
                return Err(usage("--samples must be positive"));
            }
            let cmp = compare_dominance(&xs, &ys, *samples, grid, *seed, *sigmas, Exec::Parallel);
            let code = if cmp.consistent { 0 } else { Status::Falsified.exit_code() };
            Ok(Outcome { doc: envelope("verify-dominance", json!({ "comparison": to_value(&cmp)? })), code })
        }
        Command::PresetList => {
            let list: Vec<Value> = preset_names().iter().map(|(n, d)| json!({ "name": n, "description": d })).collect();
            Ok(Outcome { doc: envelope("preset-list", json!({ "presets": list })), code: 0 })
        }
        Command::Plot { colouring, thresholds, snapshots, trajectory: traj, svg: path } => {
            let doc = match (colouring, traj) {
                (Some(text), None) => {
                    let c = ColoredInterval::parse(text).map_err(usage)?;
                    let ts = match thresholds {
                        Some(t) => t.clone(),
                        None => {
                            let (closed, _) = c.closure().map_err(runtime)?;
                            svg::auto_thresholds(&c, &closed, *snapshots)
                        }
                    };
                    svg::render_snapshots(&c, &ts).map_err(usage)?
                }
                (None, Some(csv_path)) => {
                    let (t, a, l) = read_trajectory(csv_path)?;
                    svg::render_series(&t, &[("a_t", a), ("lambda_t", l)]).map_err(usage)?
                }
                _ => return Err(usage("give --colouring or --trajectory")),
            };
            std::fs::write(path, doc).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            Ok(Outcome { doc: envelope("plot", json!({ "svg": path.display().to_string() })), code: 0 })
        }
    }
}

type Columns = (Vec<f64>, Vec<f64>, Vec<f64>);

fn read_trajectory(path: &Path) -> Result<Columns, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(runtime)?.clone();
    let col =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| usage(format!("CSV lacks column {name:?}")));
    let (it, ia, il) = (col("t")?, col("a")?, col("lambda")?);
    let (mut t, mut a, mut l) = (Vec::new(), Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(runtime)?;
        let get = |i: usize| rec[i].parse::<f64>().map_err(|e| usage(format!("bad CSV value {:?}: {e}", &rec[i])));
        t.push(get(it)?);
        a.push(get(ia)?);
        l.push(get(il)?);
    }
    Ok((t, a, l))
}

/// Parses `args`, runs the command, writes the report and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).and_then(|o| emit(&cli, &o.doc).map(|_| o.code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, doc: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).map_err(runtime)?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| runtime(format!("{}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(runtime)
        }
    }
}
