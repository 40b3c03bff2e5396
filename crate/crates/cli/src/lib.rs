//! Command-line front end: reduce problems, solve them with distributed QAOA,
//! brute-force small instances, generate graphs and run benchmarks.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on bad input.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use pbqaoa::distributed::DistributedReport;
use pbqaoa::harness::{gen_er, gen_regular, run_benchmark, BenchResult, BenchSpec};
use pbqaoa::ising::{read_graph, write_graph, BRUTE_FORCE_CAP};
use pbqaoa::pbf::ProblemJson;
use pbqaoa::{
    approximation_ratio, brute_force_min, parse_problem, reduce_full, solve_distributed, Baseline, ConstrainedProblem,
    Decode, DistributedConfig, IsingModel, LambdaPolicy, PartitionMethod, PenaltyWeight, QaoaConfig, ReductionConfig,
    ReductionTrace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "pbqaoa", version, about = "Pseudo-Boolean reduction and distributed QAOA")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a constrained problem to an Ising model.
    Reduce {
        file: PathBuf,
        #[command(flatten)]
        reduction: ReductionArgs,
    },
    /// Solve a problem file or a graph file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        reduction: ReductionArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Exhaustive ground state of a graph file (or optimum of a problem file).
    Oracle { file: PathBuf },
    /// Generate a random graph.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run a benchmark described by a JSON spec (one object or a list).
    Bench { spec: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Random d-regular graph.
    Regular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        weights: WeightArgs,
    },
    /// Erdos-Renyi graph with a target average degree.
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long = "avg-degree")]
        avg_degree: f64,
        #[command(flatten)]
        weights: WeightArgs,
    },
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Draw integer weights uniformly from [wmin, wmax].
    #[arg(long)]
    pub weighted: bool,
    #[arg(long, default_value_t = 1)]
    pub wmin: i64,
    #[arg(long, default_value_t = 6)]
    pub wmax: i64,
}

#[derive(Debug, Args)]
pub struct ReductionArgs {
    /// Constraint penalty weight (default: 1 + sum of |objective coefficients|).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Quadratization penalty (default: 1 + sum of |coefficients|).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Slack bits for every inequality constraint.
    #[arg(long = "slack-bits")]
    pub slack_bits: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Qubit cap per subproblem.
    #[arg(long, default_value_t = 10)]
    pub q: usize,
    #[arg(long, default_value = "louvain", value_parser = parse_from_str::<PartitionMethod>)]
    pub partition: PartitionMethod,
    #[arg(long, default_value = "none", value_parser = parse_from_str::<Baseline>)]
    pub baseline: Baseline,
    /// QAOA layers.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Optimizer evaluations per restart.
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1024)]
    pub shots: usize,
    #[arg(long, default_value = "best-of-shots", value_parser = parse_from_str::<Decode>)]
    pub decode: Decode,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

/// Error carrying the exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl ReductionArgs {
    fn config(&self, constraints: usize) -> Result<ReductionConfig, CliError> {
        let mut c = ReductionConfig::default();
        if let Some(mu) = self.mu {
            c.mu = PenaltyWeight::Fixed(mu);
        }
        if let Some(l) = self.lambda {
            c.lambda_policy = LambdaPolicy::Fixed(l);
        }
        if let Some(b) = self.slack_bits {
            c.slack_bits_override = vec![Some(b); constraints];
        }
        c.validate().map_err(CliError::usage)?;
        Ok(c)
    }
}

impl SolverArgs {
    fn config(&self, seed: u64) -> Result<DistributedConfig, CliError> {
        let qaoa = QaoaConfig {
            p: self.p,
            iterations: self.iters,
            restarts: self.restarts,
            shots: self.shots,
            seed,
            decode: self.decode,
        };
        qaoa.validate().map_err(CliError::usage)?;
        if self.q < 2 {
            return Err(CliError::usage("--q must be at least 2"));
        }
        Ok(DistributedConfig {
            q_cap: self.q,
            partition: self.partition,
            qaoa,
            baseline: self.baseline,
            ..DistributedConfig::default()
        })
    }
}

/// Parses `args` (program name first) and runs the command, writing results
/// to `stdout` (or `--out`) and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
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
    match execute(&cli) {
        Ok(output) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &output).map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
                None => stdout.write_all(output.as_bytes()).map_err(CliError::input),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {}", e.message);
                    e.code
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

enum Input {
    Problem(ConstrainedProblem),
    Graph(IsingModel),
}

/// Problem files start with `min:`/`max:` (or are JSON objects with a
/// `sense`); anything else is read as a graph.
fn load(path: &Path) -> Result<Input, CliError> {
    let text = read(path)?;
    let first = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let at = |e: &dyn std::fmt::Display| CliError::input(format!("{}: {e}", path.display()));
    if first.starts_with('{') {
        let value: Value = serde_json::from_str(&text).map_err(|e| at(&e))?;
        if value.get("sense").is_some() {
            let pj: ProblemJson = serde_json::from_value(value).map_err(|e| at(&e))?;
            return Ok(Input::Problem(pj.into_problem()));
        }
        return serde_json::from_value(value).map(Input::Graph).map_err(|e| at(&e));
    }
    if first.starts_with("min") || first.starts_with("max") {
        parse_problem(&text).map(Input::Problem).map_err(|e| at(&e))
    } else {
        read_graph(&text).map(Input::Graph).map_err(|e| at(&e))
    }
}

fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Reduce { file, reduction } => {
            let Input::Problem(problem) = load(file)? else {
                return Err(CliError::input(format!("{}: expected a problem file", file.display())));
            };
            let config = reduction.config(problem.constraints.len())?;
            let (model, trace) = reduce_full(&problem, &config).map_err(CliError::input)?;
            Ok(render_reduction(cli.format, &model, &trace))
        }
        Command::Solve { file, reduction, solver } => {
            let config = solver.config(cli.seed)?;
            match load(file)? {
                Input::Graph(model) => {
                    let report = solve_distributed(&model, &config).map_err(CliError::input)?;
                    Ok(render_graph_solution(cli.format, &model, &report))
                }
                Input::Problem(problem) => {
                    let rc = reduction.config(problem.constraints.len())?;
                    let (model, trace) = reduce_full(&problem, &rc).map_err(CliError::input)?;
                    let report = solve_distributed(&model, &config).map_err(CliError::input)?;
                    let rec = trace.reconstruct(report.assignment.values()).map_err(CliError::input)?;
                    Ok(render_problem_solution(cli.format, &problem, &report, &rec))
                }
            }
        }
        Command::Oracle { file } => match load(file)? {
            Input::Graph(model) => {
                if model.n() > BRUTE_FORCE_CAP {
                    return Err(CliError::input(format!("{} spins exceeds the oracle cap of {BRUTE_FORCE_CAP}", model.n())));
                }
                let (z, e) = brute_force_min(&model).map_err(CliError::input)?;
                Ok(match cli.format {
                    Format::Json => pretty(&json!({ "value": e, "assignment": z.values() })),
                    Format::Csv => format!("value,assignment\n{e},{}\n", spins(z.values())),
                    Format::Text => format!("{e}\nassignment: {}\n", spins(z.values())),
                })
            }
            Input::Problem(problem) => {
                if problem.num_vars() > BRUTE_FORCE_CAP {
                    return Err(CliError::input(format!(
                        "{} variables exceeds the oracle cap of {BRUTE_FORCE_CAP}",
                        problem.num_vars()
                    )));
                }
                let Some((value, x)) = problem.brute_force_optimum() else {
                    return Err(CliError::input("problem is infeasible"));
                };
                let bits = bit_string(&problem, &x);
                Ok(match cli.format {
                    Format::Json => pretty(&json!({ "objective": value, "x": bits })),
                    Format::Csv => format!("objective,x\n{value},{bits}\n"),
                    Format::Text => format!("{value}\nx: {bits}\n"),
                })
            }
        },
        Command::Gen { kind } => {
            let (result, w) = match kind {
                GenKind::Regular { n, d, weights } => (gen_regular(*n, *d, weights.range(), cli.seed), weights),
                GenKind::Er { n, avg_degree, weights } => (gen_er(*n, *avg_degree, weights.range(), cli.seed), weights),
            };
            if w.weighted && w.wmin > w.wmax {
                return Err(CliError::usage("--wmin must not exceed --wmax"));
            }
            let model = result.map_err(CliError::usage)?;
            Ok(render_graph(cli.format, &model))
        }
        Command::Bench { spec } => {
            let text = read(spec)?;
            let value: Value =
                serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", spec.display())))?;
            let specs: Vec<BenchSpec> = match value {
                Value::Array(_) => serde_json::from_value(value),
                other => serde_json::from_value(other).map(|s| vec![s]),
            }
            .map_err(|e| CliError::input(format!("{}: {e}", spec.display())))?;
            let mut all = BenchResult {
                rows: Vec::new(),
                summary: Vec::new(),
                denominators: Vec::new(),
            };
            for s in &specs {
                all.extend(run_benchmark(s).map_err(CliError::input)?);
            }
            Ok(match cli.format {
                Format::Csv => all.to_csv(),
                Format::Json => pretty(&serde_json::to_value(&all).expect("results serialize")),
                Format::Text => all.to_text(),
            })
        }
    }
}

impl WeightArgs {
    fn range(&self) -> Option<(i64, i64)> {
        self.weighted.then_some((self.wmin, self.wmax))
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn spins(z: &[i8]) -> String {
    z.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn bit_string(problem: &ConstrainedProblem, x: &[bool]) -> String {
    problem
        .natural_order()
        .iter()
        .map(|&i| if x[i] { '1' } else { '0' })
        .collect()
}

fn render_graph(format: Format, model: &IsingModel) -> String {
    match format {
        Format::Text => write_graph(model),
        Format::Json => pretty(&serde_json::to_value(model).expect("models serialize")),
        Format::Csv => {
            let mut s = String::from("i,j,w\n");
            for ((i, j), w) in model.quadratic_terms() {
                let _ = writeln!(s, "{i},{j},{w}");
            }
            s
        }
    }
}

fn render_reduction(format: Format, model: &IsingModel, trace: &ReductionTrace) -> String {
    match format {
        Format::Json => pretty(&json!({
            "model": serde_json::to_value(model).expect("models serialize"),
            "trace": serde_json::to_value(trace).expect("traces serialize"),
        })),
        Format::Csv => {
            let mut s = String::from("kind,i,j,label_i,label_j,weight\n");
            for (i, h) in model.linear_terms() {
                let _ = writeln!(s, "linear,{i},,{},,{h}", model.labels[i]);
            }
            for ((i, j), w) in model.quadratic_terms() {
                let _ = writeln!(s, "quadratic,{i},{j},{},{},{w}", model.labels[i], model.labels[j]);
            }
            let _ = writeln!(s, "offset,,,,,{}", model.offset);
            s
        }
        Format::Text => {
            let mut s = format!(
                "# {} variables -> {} spins ({} steps)\n# spins: {}\n",
                trace.total_var_count,
                model.n(),
                trace.steps.len(),
                model.labels.join(" ")
            );
            s.push_str(&write_graph(model));
            s
        }
    }
}

/// `r` against the exhaustive ground state, for graphs small enough.
fn exhaustive_ratio(model: &IsingModel, value: f64) -> Option<f64> {
    if model.n() > BRUTE_FORCE_CAP || model.n() == 0 {
        return None;
    }
    let (_, v_min) = brute_force_min(model).ok()?;
    approximation_ratio(0.0, v_min, value).ok()
}

fn report_json(report: &DistributedReport, r: Option<f64>) -> Value {
    json!({
        "global_value": report.value,
        "r": r,
        "assignment": report.assignment.values(),
        "tree": serde_json::to_value(report.merge_tree()).expect("trees serialize"),
        "per_level": report.levels.iter().map(|l| json!({
            "level": l.level,
            "nodes": l.nodes,
            "community_sizes": l.community_sizes,
            "local_energy": l.local_energy,
            "energy": l.energy,
            "truncated": l.truncated,
            "updated": l.updated,
        })).collect::<Vec<_>>(),
        "root": { "size": report.root_size, "value": report.root_value, "expectation": report.root_expectation },
        "modularity": report.modularity,
        "tree_height": report.tree_height,
        "guard_used": report.guard_used,
        "baseline_value": report.baseline.as_ref().map(|b| b.value),
    })
}

fn report_text(report: &DistributedReport, r: Option<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "global_value: {}", report.value);
    if let Some(r) = r {
        let _ = writeln!(s, "r: {r:.6}");
    }
    let _ = writeln!(s, "assignment: {}", spins(report.assignment.values()));
    let _ = writeln!(
        s,
        "tree: height {}, root {} nodes (decoded {}, expectation {:.4})",
        report.tree_height, report.root_size, report.root_value, report.root_expectation
    );
    for l in &report.levels {
        let _ = writeln!(
            s,
            "level {}: {} nodes, communities {:?}, local {} -> {}, truncated {}, updated {}",
            l.level, l.nodes, l.community_sizes, l.local_energy, l.energy, l.truncated, l.updated
        );
    }
    let _ = writeln!(s, "modularity: {:.6}", report.modularity);
    if let Some(b) = &report.baseline {
        let _ = writeln!(s, "baseline_value: {}", b.value);
    }
    s
}

fn render_graph_solution(format: Format, model: &IsingModel, report: &DistributedReport) -> String {
    let r = exhaustive_ratio(model, report.value);
    match format {
        Format::Json => pretty(&report_json(report, r)),
        Format::Csv => format!(
            "value,r,tree_height,modularity,baseline_value,assignment\n{},{},{},{},{},{}\n",
            report.value,
            r.map_or(String::new(), |r| r.to_string()),
            report.tree_height,
            report.modularity,
            report.baseline.as_ref().map_or(String::new(), |b| b.value.to_string()),
            spins(report.assignment.values())
        ),
        Format::Text => report_text(report, r),
    }
}

fn render_problem_solution(
    format: Format,
    problem: &ConstrainedProblem,
    report: &DistributedReport,
    rec: &pbqaoa::Reconstruction,
) -> String {
    let bits = bit_string(problem, &rec.assignment);
    let objective = rec.objective.unwrap_or(f64::NAN);
    match format {
        Format::Json => {
            let mut v = report_json(report, None);
            v["objective"] = json!(rec.objective);
            v["x"] = json!(bits);
            v["feasible"] = json!(rec.feasible);
            pretty(&v)
        }
        Format::Csv => format!("objective,x,feasible,energy\n{objective},{bits},{},{}\n", rec.feasible, report.value),
        Format::Text => {
            let mut s = format!("objective: {objective}\nx: {bits}\nfeasible: {}\n", rec.feasible);
            s.push_str(&report_text(report, None));
            s
        }
    }
}
