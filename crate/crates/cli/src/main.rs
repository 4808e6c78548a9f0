mod keys;
mod study;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use consensus::mphf::{build_bucketed, BucketSize, MphfConfig, MphfIndex};

#[derive(Parser)]
#[command(name = "consensus", version, about = "Build, query and study CONSENSUS-RecSplit minimal perfect hash functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index over a key file or random keys.
    Build(BuildArgs),
    /// Look up one key, or check that a key set maps bijectively onto 1..=n.
    Query(QueryArgs),
    /// Build and time a grid of configurations, one CSV row each.
    Bench(BenchArgs),
    /// Tables of the survival recurrence and space bounds.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Space and work of the MIN, UNI and CONSENSUS strategies on synthetic trials.
    #[command(subcommand)]
    Baseline(BaselineCmd),
}

#[derive(Args)]
struct KeySource {
    /// Key file, one key per line (or length-prefixed records with --binary).
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Generate this many random alphanumeric keys of length 10 to 50.
    #[arg(long)]
    random: Option<usize>,
    /// Key file records are a u32 little-endian length followed by the bytes.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    keys: KeySource,
    /// Space overhead parameter, in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Bucket size, or "auto".
    #[arg(long, default_value = "auto", value_parser = parse_k)]
    k: BucketSize,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, env = "CONSENSUS_SEED", default_value_t = 0)]
    seed: u64,
    /// Also write the generated keys here (newline separated).
    #[arg(long, requires = "random")]
    keys_out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    mphf: PathBuf,
    #[arg(long, conflicts_with = "verify_input", required_unless_present = "verify_input")]
    key: Option<String>,
    /// Query every key of this file and check the answers form a permutation.
    #[arg(long)]
    verify_input: Option<PathBuf>,
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma separated overhead values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    grid: Vec<f64>,
    /// Comma separated bucket sizes.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    k_list: Vec<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    /// Timed repetitions per configuration; the median is reported.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Output file (standard output if absent).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, env = "CONSENSUS_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// q_i for every index of an instance.
    Qcurve {
        /// Success probabilities, cycled to length n.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Branch counts, cycled to length n.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u64>,
        #[arg(long)]
        n: Option<usize>,
        /// Overhead used to check the branch counts (inferred if absent).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Iterates of f(x) = 1 - (1 - p x)^k.
    Fixedpoint {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
        #[arg(long, default_value_t = 30)]
        steps: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Space and work lower bounds for a list of probabilities.
    Bounds {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, env = "CONSENSUS_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BaselineCmd {
    /// Smallest successful seed per index, Rice coded.
    Min(TrialArgs),
    /// One seed that succeeds everywhere.
    Uni {
        #[command(flatten)]
        trials: TrialArgs,
        /// Give up after this many trials.
        #[arg(long, default_value_t = 100_000_000)]
        cap: u64,
    },
    /// Combined search and encoding, for comparison.
    Consensus {
        #[command(flatten)]
        trials: TrialArgs,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
}

fn parse_k(s: &str) -> Result<BucketSize, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(BucketSize::Auto);
    }
    s.parse()
        .map(BucketSize::Fixed)
        .map_err(|_| format!("expected an integer or \"auto\", got {s:?}"))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_keys(src: &KeySource, seed: u64) -> Result<Vec<Vec<u8>>> {
    match (&src.input, src.random) {
        (Some(path), _) => keys::read_keys(path, src.binary),
        (None, Some(n)) => Ok(keys::random_keys(n, seed)),
        (None, None) => bail!("either --input or --random is required"),
    }
}

fn cmd_build(args: BuildArgs) -> Result<()> {
    if !(args.epsilon > 0.0 && args.epsilon <= 1.0) {
        bail!("--epsilon must lie in (0, 1], got {}", args.epsilon);
    }
    let keys = load_keys(&args.keys, args.seed)?;
    if let Some(path) = &args.keys_out {
        keys::write_lines(path, &keys)?;
    }
    let cfg = MphfConfig::new(args.epsilon, args.k).with_seed(args.seed);
    let (index, report) = build_bucketed(&keys, &cfg)?;
    let bytes = index.serialize();
    fs::write(&args.output, &bytes).with_context(|| format!("writing {}", args.output.display()))?;

    let s = &report.space;
    let per_key = |b: u64| b as f64 / report.n.max(1) as f64;
    println!("n: {}", report.n);
    println!("k: {}", report.k);
    println!("epsilon: {}", report.eps);
    println!("bits_per_key: {:.4}", report.bits_per_key);
    println!("kperfect_bits_per_key: {:.4}", per_key(s.kperfect));
    println!("layer_bits_per_key: {:.4}", per_key(s.layers.iter().sum()));
    println!("fallback_bits_per_key: {:.4}", per_key(s.fallback));
    println!("trials: {}", report.total_trials());
    println!("retries: {}", report.retries);
    println!("build_seconds: {:.3}", report.wall_time.as_secs_f64());
    println!("file_bytes: {}", bytes.len());
    Ok(())
}

fn load_index(path: &Path) -> Result<MphfIndex> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    MphfIndex::deserialize(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let index = load_index(&args.mphf)?;
    if let Some(key) = &args.key {
        println!("{}", index.query(key.as_bytes()));
        return Ok(());
    }
    let path = args.verify_input.as_ref().expect("clap requires one of the two");
    let keys = keys::read_keys(path, args.binary)?;
    if keys.len() as u64 != index.len() {
        bail!("index holds {} keys but {} has {}", index.len(), path.display(), keys.len());
    }
    let mut owner = vec![0usize; keys.len()];
    for (i, k) in keys.iter().enumerate() {
        let v = index.query(k) as usize;
        if v == 0 || v > keys.len() {
            bail!("key {} maps to {v}, outside 1..={}", i + 1, keys.len());
        }
        if owner[v - 1] != 0 {
            bail!("keys {} and {} both map to {v}", owner[v - 1], i + 1);
        }
        owner[v - 1] = i + 1;
    }
    println!("bijection OK, n={}", keys.len());
    Ok(())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    xs[xs.len() / 2]
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.grid.is_empty() || args.k_list.is_empty() {
        bail!("--grid and --k-list must each name at least one value");
    }
    if args.runs == 0 || args.n == 0 {
        bail!("--runs and --n must be positive");
    }
    let keys = keys::random_keys(args.n, args.seed);
    let n = args.n as f64;
    let mut out = sink(args.csv.as_deref())?;
    writeln!(out, "eps,k,n,bits_per_key,build_ns_per_key,query_ns,trials_per_key")?;
    for &eps in &args.grid {
        for &k in &args.k_list {
            let cfg = MphfConfig::new(eps, BucketSize::Fixed(k)).with_seed(args.seed);
            let mut build_ns = Vec::new();
            let mut last = None;
            for _ in 0..args.runs {
                let (index, report) = build_bucketed(&keys, &cfg)?;
                build_ns.push(report.wall_time.as_nanos() as f64 / n);
                last = Some((index, report));
            }
            let (index, report) = last.expect("at least one run");
            let mut checksum = 0u64;
            // warm-up pass, then timed passes
            for k in &keys {
                checksum = checksum.wrapping_add(index.query(k));
            }
            let mut query_ns = Vec::new();
            for _ in 0..args.runs {
                let t = Instant::now();
                for k in &keys {
                    checksum = checksum.wrapping_add(index.query(k));
                }
                query_ns.push(t.elapsed().as_nanos() as f64 / n);
            }
            let expected = (args.runs as u64 + 1).wrapping_mul(args.n as u64 * (args.n as u64 + 1) / 2);
            if checksum != expected {
                bail!("eps={eps} k={k}: query answers are not a permutation of 1..=n");
            }
            writeln!(
                out,
                "{eps},{k},{},{:.6},{:.1},{:.1},{:.3}",
                args.n,
                report.bits_per_key,
                median(build_ns),
                median(query_ns),
                report.total_trials() as f64 / n
            )?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_analyze(cmd: AnalyzeCmd) -> Result<()> {
    match cmd {
        AnalyzeCmd::Qcurve { p, k, n, epsilon, output } => {
            let len = Some(n.unwrap_or(p.len().max(k.len())));
            let (probs, ks) = (study::cycle(&p, len), study::cycle(&k, len));
            study::qcurve(&mut *sink(output.as_deref())?, &probs, &ks, epsilon)
        }
        AnalyzeCmd::Fixedpoint { p, k, x0, steps, output } => {
            study::fixedpoint(&mut *sink(output.as_deref())?, p, k, x0, steps)
        }
        AnalyzeCmd::Bounds { p, n, output } => {
            study::bounds(&mut *sink(output.as_deref())?, &study::cycle(&p, n))
        }
    }
}

fn cmd_baseline(cmd: BaselineCmd) -> Result<()> {
    let (t, strategy) = match cmd {
        BaselineCmd::Min(t) => (t, study::Strategy::Min),
        BaselineCmd::Uni { trials, cap } => (trials, study::Strategy::Uni { cap }),
        BaselineCmd::Consensus { trials, epsilon } => (trials, study::Strategy::Consensus { eps: epsilon }),
    };
    if t.n == 0 {
        bail!("--n must be positive");
    }
    study::baseline(&mut *sink(t.output.as_deref())?, strategy, t.n, t.p, t.seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Analyze(c) => cmd_analyze(c),
        Command::Baseline(c) => cmd_baseline(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
