use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bnpc_core::data::{load_dataset, LoadOptions};
use bnpc_core::orient::{apply_meek_rules, orient_v_structures};
use bnpc_core::output::OutputGraph;
use bnpc_core::perfmodel::{estimate_speedups, format_significant, SpeedupParams};
use bnpc_core::skeleton::{learn_skeleton, LearnConfig, LearnError, Skeleton};
use bnpc_core::stats::DEFAULT_TABLE_CELL_CAP;
use bnpc_core::synth::{forward_sample, load_bn_spec};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "bnpc",
    version,
    about = "Parallel PC-stable Bayesian network structure learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a CPDAG (or skeleton) from categorical data.
    Learn(LearnArgs),
    /// Draw samples from a discrete Bayesian network file.
    Sample(SampleArgs),
    /// Evaluate the analytical speedup model.
    PerfModel(PerfArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Edgelist,
    Dot,
}

#[derive(clap::Args)]
struct LearnArgs {
    /// Delimited text file, one sample per row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// CI tests run per edge before it goes back to the pool.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    group_size: u64,
    /// Worker threads [default: available parallelism]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Largest conditioning-set size to test [default: unbounded]
    #[arg(long)]
    max_depth: Option<usize>,
    /// Write the graph here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Edgelist)]
    format: Format,
    /// Contingency tables above this many cells count as uninformative tests.
    #[arg(long, default_value_t = DEFAULT_TABLE_CELL_CAP as u64, value_parser = clap::value_parser!(u64).range(1..))]
    table_cap: u64,
    /// Stop after the skeleton search.
    #[arg(long)]
    skeleton_only: bool,
    /// The input has no header row; variables are named V0, V1, ...
    #[arg(long)]
    no_header: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(clap::Args)]
struct SampleArgs {
    /// Network description file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write samples here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Defaults reproduce the worked example: 4 threads at depth 2 over 1200
/// edges, 60% deleted, degree 10, 64-byte lines, DRAM 8x slower than cache.
#[derive(clap::Args)]
struct PerfArgs {
    #[arg(long, default_value_t = 4)]
    threads: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long, default_value_t = 1200)]
    edges: usize,
    #[arg(long, default_value_t = 0.6)]
    deletion_ratio: f64,
    #[arg(long, default_value_t = 10)]
    mean_degree: usize,
    #[arg(long, default_value_t = 64)]
    cache_line_bytes: usize,
    #[arg(long, default_value_t = 8.0)]
    dram_to_cache_ratio: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

fn learn_failure(e: LearnError) -> Failure {
    let code = match e {
        LearnError::Config(_) => EXIT_USAGE,
        LearnError::Stats(_) | LearnError::Combinatorics(_) => EXIT_DATA,
        LearnError::Graph(_) | LearnError::PoolContract(_) | LearnError::WorkerPanicked(_) => EXIT_INTERNAL,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let result = match path {
        Some(p) => std::fs::write(p, text).map_err(|e| (p.display().to_string(), e)),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| ("standard output".into(), e)),
    };
    result.map_err(|(target, e)| Failure::data(format!("cannot write {target}: {e}")))
}

fn report(skeleton: &Skeleton, elapsed: f64) {
    let mut err = io::stderr().lock();
    for d in &skeleton.stats.depths {
        let _ = writeln!(
            err,
            "depth {}: edges tested={} ci tests={} removed={} edges remaining={}",
            d.depth, d.edges_tested, d.ci_tests, d.removed, d.edges_remaining
        );
    }
    let _ = writeln!(err, "depths executed={}", skeleton.stats.depths.len());
    let _ = writeln!(err, "ci tests={}", skeleton.stats.total_ci_tests());
    let _ = writeln!(err, "wall time={elapsed:.3}s");
}

fn cmd_learn(args: LearnArgs) -> Result<(), Failure> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(Failure::usage(format!(
            "--alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    if !args.delimiter.is_ascii() {
        return Err(Failure::usage("--delimiter must be a single ASCII character"));
    }
    let cfg = LearnConfig {
        alpha: args.alpha,
        group_size: args.group_size as usize,
        threads: args
            .threads
            .map(|t| t as usize)
            .unwrap_or(LearnConfig::default().threads),
        max_depth: args.max_depth,
        table_cell_cap: usize::try_from(args.table_cap).unwrap_or(usize::MAX),
    };
    cfg.validate().map_err(learn_failure)?;

    let options = LoadOptions {
        has_header: !args.no_header,
        delimiter: args.delimiter as u8,
    };
    let ds = load_dataset(open(&args.input)?, &options)
        .map_err(|e| Failure::data(format!("{}: {e}", args.input.display())))?;

    let start = Instant::now();
    let skeleton = learn_skeleton(&ds, &cfg).map_err(learn_failure)?;
    let graph = if args.skeleton_only {
        skeleton.graph.clone()
    } else {
        apply_meek_rules(&orient_v_structures(&skeleton.graph, &skeleton.sepsets)).into_graph()
    };
    let elapsed = start.elapsed().as_secs_f64();
    graph.audit().map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;

    let out = OutputGraph::new(&graph, ds.var_names());
    let text = match args.format {
        Format::Edgelist => out.to_edgelist(),
        Format::Dot => out.to_dot(),
    };
    write_output(args.output.as_deref(), &text)?;
    report(&skeleton, elapsed);
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    let spec = load_bn_spec(open(&args.spec)?).map_err(|e| Failure::data(format!("{}: {e}", args.spec.display())))?;
    let ds = forward_sample(&spec, args.samples as usize, args.seed).map_err(|e| Failure::data(e.to_string()))?;
    let written = match &args.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
            ds.write_delimited(BufWriter::new(file), b',')
        }
        None => ds.write_delimited(io::stdout().lock(), b','),
    };
    written.map_err(|e| Failure::data(format!("cannot write samples: {e}")))
}

fn cmd_perf_model(args: PerfArgs) -> Result<(), Failure> {
    let params = SpeedupParams {
        threads: args.threads,
        depth: args.depth,
        edges_in_depth: args.edges,
        deletion_ratio: args.deletion_ratio,
        mean_degree: args.mean_degree,
        cache_line_bytes: args.cache_line_bytes,
        dram_to_cache_ratio: args.dram_to_cache_ratio,
    };
    let r = estimate_speedups(&params).map_err(|e| Failure::usage(e.to_string()))?;
    let text = format!(
        "s_ci={}\ns_grouping={}\ns_cache={}\ns_overall={}\n",
        format_significant(r.s_ci, 3),
        format_significant(r.s_grouping, 3),
        format_significant(r.s_cache, 3),
        format_significant(r.s_overall, 3),
    );
    write_output(None, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::new().parse_filters("warn").init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Learn(a) => cmd_learn(a),
        Command::Sample(a) => cmd_sample(a),
        Command::PerfModel(a) => cmd_perf_model(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bnpc: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
