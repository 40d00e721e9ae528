//! Command-line front end for `mixmoran`.
//!
//! Subcommands: `exact`, `estimate`, `closed-form`, `certify`, `generate`.
//! Every row-producing command writes CSV (default) or JSON with the same
//! fields. Exit codes: 0 ok, 1 i/o, 2 usage, 3 domain error, 4 estimator abort.

pub mod error;
pub mod output;
pub mod spec;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mixmoran::closed_forms::{
    bidegreed_neutral_fp, cycle_fp, cycle_fp_exact, neutral_half_lambda_fp, neutral_regular_fp, star_fp,
    ClosedFormError,
};
use mixmoran::estimator::{certified_constants, estimate, EstimatorConfig, EstimatorError};
use mixmoran::exact::{self, Method, SolverOptions};
use mixmoran::graph::{generate_gnp, GnpSample};
use mixmoran::kernel::{default_max_steps, Params};
use mixmoran::rng::derive_seed;
use mixmoran::{Configuration, ExactParams, Graph, ProcessParams, Rational, Scalar};

pub use error::CliError;
use output::{Format, Number};
use spec::{load_graph, parse_graph_source, parse_grid, parse_inits, GraphSource, GridValue, LoadedGraph};

#[derive(Debug, Parser)]
#[command(name = "mixmoran", version, about = "Lambda-mixed Bd/dB Moran process on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Brute-force fixation probabilities and absorption times (n <= 16).
    Exact(ExactArgs),
    /// Monte Carlo estimates with Wilson intervals.
    Estimate(EstimateArgs),
    /// Neutral, bidegreed, cycle and star formulas.
    ClosedForm(ClosedFormArgs),
    /// Degree profile, alpha, regular/bidegreed flags and connectivity.
    Certify(CertifyArgs),
    /// Write a family or G(n, p) graph as an edge list.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge list file: `u v` per line, optional `n <count>` header, `#` comments.
    #[arg(long, value_name = "PATH")]
    pub graph: Option<String>,
    /// cycle:N, star:LEAVES, complete:N, path:N or book:PAGES.
    #[arg(long, value_name = "NAME:ARGS")]
    pub family: Option<String>,
    /// Erdos-Renyi sample, e.g. 30,0.5,7. Must be connected.
    #[arg(long, value_name = "n,p,seed")]
    pub gnp: Option<String>,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource, CliError> {
        parse_graph_source(self.graph.as_deref(), self.family.as_deref(), self.gnp.as_deref())
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Comma list or inclusive range start:stop:step.
    #[arg(long, value_name = "LIST|RANGE", allow_hyphen_values = true)]
    pub lambda: String,
    /// Mutant fitness; comma list or inclusive range start:stop:step.
    #[arg(long = "r", value_name = "LIST|RANGE", allow_hyphen_values = true)]
    pub r: String,
    /// vertex:K, set:A,B,... or all-singletons. Repeatable; default vertex:0.
    #[arg(long, value_name = "SPEC")]
    pub init: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write to a file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverMethod {
    GaussSeidel,
    DenseLu,
}

#[derive(Debug, Clone, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Solve over the rationals (n <= 8); values print as p/q.
    #[arg(long)]
    pub rational: bool,
    #[arg(long, default_value_t = exact::DEFAULT_MAX_N)]
    pub max_n: usize,
    #[arg(long, value_enum, default_value = "gauss-seidel")]
    pub method: SolverMethod,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Runs per grid point [default: 10000].
    #[arg(long, conflicts_with = "auto")]
    pub replicates: Option<u64>,
    /// Per-run step cutoff [default: 100 n^4 scaled by the drift constant].
    #[arg(long, conflicts_with = "auto")]
    pub max_steps: Option<u64>,
    /// Derive N and T from the certified regime table; refuses outside it.
    #[arg(long)]
    pub auto: bool,
    /// Relative accuracy for --auto.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Abort (exit 4) if any run hits the cutoff. Implied by --auto.
    #[arg(long)]
    pub strict_cutoff: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ClosedFormArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Evaluate over the rationals; values print as p/q.
    #[arg(long)]
    pub rational: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also test alpha-almost regularity, e.g. 2 or 3/2.
    #[arg(long)]
    pub alpha: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
}

/// Resolved inputs shared by the row-producing commands.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub graph: LoadedGraph,
    pub lambdas: Vec<GridValue>,
    pub rs: Vec<GridValue>,
    pub inits: Vec<Configuration>,
    pub format: Format,
    pub out: Option<String>,
}

impl RunSpec {
    fn build(graph: &GraphArgs, grid: &GridArgs, output: &OutputArgs) -> Result<Self, CliError> {
        let lambdas = parse_grid("lambda", &grid.lambda)?;
        let rs = parse_grid("r", &grid.r)?;
        let graph = load_graph(&graph.source()?)?;
        let inits = parse_inits(&grid.init, &graph)?;
        Ok(RunSpec {
            graph,
            lambdas,
            rs,
            inits,
            format: output.format,
            out: output.out.clone(),
        })
    }

    fn points(&self) -> impl Iterator<Item = (usize, &GridValue, usize, &GridValue)> {
        self.lambdas
            .iter()
            .enumerate()
            .flat_map(move |(i, l)| self.rs.iter().enumerate().map(move |(j, r)| (i, l, j, r)))
    }

    fn float_params(l: &GridValue, r: &GridValue) -> Result<ProcessParams, CliError> {
        ProcessParams::new(l.value, r.value).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn exact_params(l: &GridValue, r: &GridValue) -> Result<ExactParams, CliError> {
        ExactParams::new(l.exact.clone(), r.exact.clone()).map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// Bytes to write and where.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub path: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ExactRow {
    pub lambda: f64,
    pub r: f64,
    pub initial_set: String,
    pub fp: Number,
    pub abs_time: Number,
}

#[derive(Debug, Serialize)]
pub struct EstimateRow {
    pub lambda: f64,
    pub r: f64,
    pub initial_set: String,
    pub fp_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub fixations: u64,
    pub extinctions: u64,
    pub cutoffs: u64,
    pub replicates: u64,
    pub mean_steps: f64,
}

#[derive(Debug, Serialize)]
pub struct ClosedFormRow {
    pub lambda: f64,
    pub r: f64,
    pub initial_set: String,
    pub fp: Number,
    pub method: &'static str,
}

#[derive(Debug, Serialize)]
pub struct CertifyRow {
    pub n: usize,
    pub edges: Option<usize>,
    pub components: usize,
    pub connected: bool,
    pub d_min: Option<usize>,
    pub d_max: Option<usize>,
    pub alpha: Option<String>,
    pub distinct_degrees: Option<String>,
    pub regular: Option<bool>,
    pub bidegreed: Option<bool>,
    pub almost_regular: Option<bool>,
}

fn exact_error(e: exact::ExactError) -> CliError {
    CliError::Domain(e.to_string())
}

pub fn cmd_exact(args: &ExactArgs) -> Result<Output, CliError> {
    let spec = RunSpec::build(&args.graph, &args.grid, &args.output)?;
    let g = &spec.graph.graph;
    let mut rows = Vec::new();
    for (_, l, _, r) in spec.points() {
        if args.rational {
            let params = RunSpec::exact_params(l, r)?;
            let sol = exact::solve_rational(g, &params, args.max_n.min(exact::RATIONAL_MAX_N)).map_err(exact_error)?;
            for s in &spec.inits {
                rows.push(ExactRow {
                    lambda: l.value,
                    r: r.value,
                    initial_set: spec.graph.format_set(s),
                    fp: Number::Exact(sol.fixation_probability(s).to_string()),
                    abs_time: Number::Exact(sol.absorption_time(s).to_string()),
                });
            }
        } else {
            let params = RunSpec::float_params(l, r)?;
            let opts = SolverOptions {
                max_n: args.max_n,
                method: match args.method {
                    SolverMethod::GaussSeidel => Method::GaussSeidel,
                    SolverMethod::DenseLu => Method::DenseLu,
                },
                ..SolverOptions::default()
            };
            let sol = exact::solve_with(g, &params, &opts).map_err(exact_error)?;
            for s in &spec.inits {
                rows.push(ExactRow {
                    lambda: l.value,
                    r: r.value,
                    initial_set: spec.graph.format_set(s),
                    fp: Number::Float(sol.fixation_probability(s)),
                    abs_time: Number::Float(sol.absorption_time(s)),
                });
            }
        }
    }
    Ok(Output {
        bytes: output::render(&rows, spec.format)?,
        path: spec.out,
    })
}

/// Grid cell `(i, j)` runs with `derive_seed(seed, [i, j])`, shared by all
/// initial sets, matching `estimator::sweep`.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<Output, CliError> {
    let spec = RunSpec::build(&args.graph, &args.grid, &args.output)?;
    let g = &spec.graph.graph;
    let n = g.n();
    let mut rows = Vec::new();
    for (i, l, j, r) in spec.points() {
        let params = RunSpec::float_params(l, r)?;
        let seed = derive_seed(args.seed, &[i as u64, j as u64]);
        for s in &spec.inits {
            let mut cfg = if args.auto {
                let cert = certified_constants(g, s, &params).ok_or_else(|| {
                    CliError::Domain(format!(
                        "no certified FPRAS constants for lambda = {}, r = {} on this graph; use --replicates/--max-steps",
                        l.value, r.value
                    ))
                })?;
                EstimatorConfig::auto(cert.constants, args.epsilon, seed)
            } else {
                let cutoff = args.max_steps.unwrap_or_else(|| default_max_steps(n, r.value));
                EstimatorConfig::manual(args.replicates.unwrap_or(10_000), cutoff, seed)
            };
            cfg.epsilon = args.epsilon;
            cfg.confidence = args.confidence;
            cfg.strict = args.auto || args.strict_cutoff;
            cfg.threads = args.threads;
            let rep = estimate(g, s, &params, &cfg).map_err(|e| match e {
                EstimatorError::InvalidConfig(m) => CliError::Usage(m),
                EstimatorError::Aborted(_) => CliError::Aborted(format!(
                    "lambda = {}, r = {}, S = {}: {e}",
                    l.value,
                    r.value,
                    spec.graph.format_set(s)
                )),
            })?;
            rows.push(EstimateRow {
                lambda: l.value,
                r: r.value,
                initial_set: spec.graph.format_set(s),
                fp_hat: rep.fp_hat,
                ci_low: rep.ci_low,
                ci_high: rep.ci_high,
                fixations: rep.fixations,
                extinctions: rep.extinctions,
                cutoffs: rep.cutoffs,
                replicates: rep.replicates,
                mean_steps: rep.mean_steps,
            });
        }
    }
    Ok(Output {
        bytes: output::render(&rows, spec.format)?,
        path: spec.out,
    })
}

fn closed_form_error(e: ClosedFormError) -> CliError {
    CliError::Domain(e.to_string())
}

/// Picks the applicable formula for `(g, s, lambda, r)`.
///
/// At `r = 1`: `lambda = 1/2`, then regular, then bidegreed. Otherwise the
/// cycle formula (single mutant) or the star recurrence (any set).
pub fn closed_form<T: Scalar>(
    g: &Graph,
    s: &Configuration,
    params: &Params<T>,
    cycle: impl Fn(usize, &Params<T>) -> Result<T, ClosedFormError>,
) -> Result<(T, &'static str), CliError> {
    let n = g.n();
    let profile = g.degree_profile();
    let neutral = *params.r() == T::one();
    if neutral {
        if *params.lambda() == T::ratio(1, 2) {
            return Ok((neutral_half_lambda_fp(n, s.len()).map_err(closed_form_error)?, "neutral-half-lambda"));
        }
        if profile.is_regular() {
            return Ok((neutral_regular_fp(n, s.len()).map_err(closed_form_error)?, "neutral-regular"));
        }
        if profile.is_bidegreed() {
            return Ok((bidegreed_neutral_fp(g, params.lambda(), s).map_err(closed_form_error)?, "bidegreed"));
        }
        return Err(CliError::Domain(format!(
            "no closed form: r = 1 but lambda != 1/2 and the graph is neither regular nor bidegreed (degrees {:?})",
            profile.distinct_degrees
        )));
    }
    if s.is_empty() || s.is_full() {
        return Ok((if s.is_full() { T::one() } else { T::zero() }, "trivial"));
    }
    if g.is_cycle() {
        if s.len() != 1 {
            return Err(CliError::Domain(
                "no closed form: the cycle formula covers single-mutant starts only".into(),
            ));
        }
        return Ok((cycle(n, params).map_err(closed_form_error)?, "cycle"));
    }
    if let Some(center) = g.star_center() {
        let sol = star_fp(n - 1, params).map_err(closed_form_error)?;
        let c = s.contains(center);
        let i = s.len() - usize::from(c);
        let v = if c { &sol.center_mutant[i] } else { &sol.center_resident[i] };
        return Ok((v.clone(), "star"));
    }
    Err(CliError::Domain(if profile.is_bidegreed() {
        "no closed form: bidegreed formula needs r = 1, and the graph is not a cycle or star".into()
    } else {
        "no closed form: r != 1 and the graph is not a cycle or star".into()
    }))
}

pub fn cmd_closed_form(args: &ClosedFormArgs) -> Result<Output, CliError> {
    let spec = RunSpec::build(&args.graph, &args.grid, &args.output)?;
    let g = &spec.graph.graph;
    let mut rows = Vec::new();
    for (_, l, _, r) in spec.points() {
        for s in &spec.inits {
            let (fp, method) = if args.rational {
                let params = RunSpec::exact_params(l, r)?;
                let (v, m) = closed_form(g, s, &params, cycle_fp_exact::<Rational>)?;
                (Number::Exact(v.to_string()), m)
            } else {
                let params = RunSpec::float_params(l, r)?;
                let (v, m) = closed_form(g, s, &params, cycle_fp)?;
                (Number::Float(v), m)
            };
            rows.push(ClosedFormRow {
                lambda: l.value,
                r: r.value,
                initial_set: spec.graph.format_set(s),
                fp,
                method,
            });
        }
    }
    Ok(Output {
        bytes: output::render(&rows, spec.format)?,
        path: spec.out,
    })
}

fn join(values: &[usize]) -> String {
    values.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" ")
}

/// Degree certificate. A disconnected input is reported rather than refused.
pub fn cmd_certify(args: &CertifyArgs) -> Result<Output, CliError> {
    let alpha = args
        .alpha
        .as_deref()
        .map(|a| {
            let q = mixmoran::scalar::parse_rational(a).map_err(|e| CliError::Usage(e.to_string()))?;
            if q < Rational::from_usize(1) {
                return Err(CliError::Usage(format!("--alpha {a} must be at least 1")));
            }
            Ok(q)
        })
        .transpose()?;
    let source = args.graph.source()?;
    let row = match (&source, load_graph(&source)) {
        (_, Ok(loaded)) => {
            let g = &loaded.graph;
            let p = g.degree_profile();
            let almost = alpha.as_ref().map(|a| {
                let (num, den) = (Rational::from_usize(p.d_max), Rational::from_usize(p.d_min));
                num <= a.clone() * den
            });
            CertifyRow {
                n: g.n(),
                edges: Some(g.edge_count()),
                components: 1,
                connected: true,
                d_min: Some(p.d_min),
                d_max: Some(p.d_max),
                alpha: Some(p.alpha.to_string()),
                distinct_degrees: Some(join(&p.distinct_degrees)),
                regular: Some(p.is_regular()),
                bidegreed: Some(p.is_bidegreed()),
                almost_regular: almost,
            }
        }
        (GraphSource::Gnp { n, p, seed }, Err(CliError::Domain(_))) => {
            match generate_gnp(*n, *p, *seed).map_err(|e| CliError::Usage(e.to_string()))? {
                GnpSample::Disconnected {
                    components,
                    edges,
                    degrees,
                } => {
                    let mut distinct = degrees.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    CertifyRow {
                        n: *n,
                        edges: Some(edges),
                        components,
                        connected: false,
                        d_min: distinct.first().copied(),
                        d_max: distinct.last().copied(),
                        alpha: None,
                        distinct_degrees: Some(join(&distinct)),
                        regular: None,
                        bidegreed: None,
                        almost_regular: None,
                    }
                }
                GnpSample::Connected(_) => unreachable!("load_graph failed on a connected sample"),
            }
        }
        (_, Err(e)) => return Err(e),
    };
    Ok(Output {
        bytes: output::render(&[row], args.output.format)?,
        path: args.output.out.clone(),
    })
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<Output, CliError> {
    let loaded = load_graph(&args.graph.source()?)?;
    Ok(Output {
        bytes: loaded.graph.to_edge_list().into_bytes(),
        path: args.out.clone(),
    })
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    match &cli.command {
        Command::Exact(a) => cmd_exact(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::ClosedForm(a) => cmd_closed_form(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Generate(a) => cmd_generate(a),
    }
}

/// Parses `args`, runs, writes output and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).and_then(|o| output::emit(&o.bytes, o.path.as_deref())) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mixmoran: {e}");
            e.exit_code()
        }
    }
}
