//! `tucker` command-line front end: tensor file I/O, decompositions and
//! benchmark matrices with machine-readable reports.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::Instant;
use tucker_ra::hooi::{self, HooiConfig, RankHistory};
use tucker_ra::hosvd::{self, Truncation, TuckerModel};
use tucker_ra::report::DecompositionReport;
use tucker_ra::tensor::{self, DenseTensor};
use tucker_ra::{io, synth};

#[derive(Parser)]
#[command(
    name = "tucker",
    about = "Truncated Tucker decomposition under an error tolerance",
    long_about = "Computes truncated Tucker decompositions of dense tensors, either at a \
fixed multilinear rank or under a relative-error tolerance via rank-adaptive HOOI and \
HOSVD-family baselines.\n\n\
Tensor files use the TNSR container: magic \"TNSR\", format version u16, order u16, \
shape entries u64, then binary64 values little-endian, first mode fastest.\n\n\
The environment variable TUCKER_RA_THREADS caps kernel parallelism (the built-in \
kernels are serial, so any positive value is honored trivially)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic tensor file
    Synth {
        #[command(subcommand)]
        family: SynthFamily,
    },
    /// Decompose a tensor file and report the result as JSON
    Decompose(DecomposeArgs),
    /// Run a benchmark matrix from a JSON config and emit CSV
    Bench {
        /// JSON config: {"dataset": ..., "algorithms": [...], "tolerances": [...], "seeds": [...]}
        config: PathBuf,
        /// CSV output path (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Summarize a tensor file
    Info {
        file: PathBuf,
        /// Relative singular-value cutoff for the multilinear-rank report
        #[arg(long, default_value_t = 1e-10)]
        rank_tol: f64,
    },
}

#[derive(Subcommand)]
enum SynthFamily {
    /// Low multilinear-rank tensor, normalized, with additive Gaussian noise
    NoisyLowrank {
        /// Comma-separated dimensions, e.g. 60,60,60
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        /// Comma-separated true multilinear rank, e.g. 10,10,10
        #[arg(long, value_delimiter = ',', required = true)]
        rank: Vec<usize>,
        /// Noise level
        #[arg(long, default_value_t = 1e-2)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Regularized 2D Coulomb kernel on a uniform 4-way grid
    Coulomb {
        /// Grid points per mode
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 100.0)]
        hi: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    #[value(name = "t-hosvd")]
    THosvd,
    #[value(name = "st-hosvd")]
    StHosvd,
    #[value(name = "greedy-bu")]
    GreedyBottomUp,
    #[value(name = "greedy-td")]
    GreedyTopDown,
    #[value(name = "hooi")]
    Hooi,
    #[value(name = "ra-hooi")]
    RaHooi,
    #[value(name = "als")]
    Als,
}

impl Algorithm {
    fn name(&self) -> &'static str {
        match self {
            Algorithm::THosvd => "t-hosvd",
            Algorithm::StHosvd => "st-hosvd",
            Algorithm::GreedyBottomUp => "greedy-bu",
            Algorithm::GreedyTopDown => "greedy-td",
            Algorithm::Hooi => "hooi",
            Algorithm::RaHooi => "ra-hooi",
            Algorithm::Als => "als",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitKind {
    #[value(name = "st-hosvd")]
    StHosvd,
    #[value(name = "random")]
    Random,
}

#[derive(Args)]
struct DecomposeArgs {
    input: PathBuf,
    #[arg(short, long)]
    algorithm: Algorithm,
    /// Fixed truncation, comma-separated; exclusive with --tol
    #[arg(long, value_delimiter = ',', conflicts_with = "tol")]
    rank: Option<Vec<usize>>,
    /// Relative-error tolerance in (0,1); exclusive with --rank
    #[arg(long)]
    tol: Option<f64>,
    /// Initial guess for ra-hooi (st-hosvd or random)
    #[arg(long, value_enum, default_value = "st-hosvd")]
    init: InitKind,
    /// Seed for random initialization
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Write core and factors to a model file
    #[arg(long)]
    save_model: Option<PathBuf>,
    /// Report path (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    check_thread_cap();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn check_thread_cap() {
    if let Ok(v) = std::env::var("TUCKER_RA_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {}
            _ => {
                eprintln!("error: TUCKER_RA_THREADS must be a positive integer, got {v:?}");
                std::process::exit(1);
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Synth { family } => {
            cmd_synth(family)?;
            Ok(0)
        }
        Command::Decompose(args) => cmd_decompose(args),
        Command::Bench { config, output } => {
            cmd_bench(&config, output.as_deref())?;
            Ok(0)
        }
        Command::Info { file, rank_tol } => {
            cmd_info(&file, rank_tol)?;
            Ok(0)
        }
    }
}

fn cmd_synth(family: SynthFamily) -> Result<(), Box<dyn std::error::Error>> {
    let (tensor, path, seed) = match family {
        SynthFamily::NoisyLowrank {
            shape,
            rank,
            delta,
            seed,
            output,
        } => {
            let base = synth::random_low_rank_tensor(&shape, &rank, seed)?;
            // Noise seed is derived so one flag controls the whole draw.
            let noisy = synth::add_gaussian_noise(&base, delta, seed.wrapping_add(1))?;
            (noisy, output, Some(seed))
        }
        SynthFamily::Coulomb { size, lo, hi, output } => {
            (synth::coulomb_kernel_tensor(size, lo, hi)?, output, None)
        }
    };
    io::write_tensor(&path, &tensor)?;
    println!(
        "wrote {} | shape {} | frobenius norm {:.12e}{}",
        path.display(),
        format_shape(tensor.shape()),
        tensor.frobenius_norm(),
        seed.map_or(String::new(), |s| format!(" | seed {s}")),
    );
    Ok(())
}

struct RunOutcome {
    model: TuckerModel,
    sweeps: usize,
    history: Option<RankHistory>,
}

fn run_algorithm(
    a: &DenseTensor,
    alg: Algorithm,
    rank: Option<&[usize]>,
    tol: Option<f64>,
    init: InitKind,
    seed: u64,
    max_iter: usize,
) -> Result<RunOutcome, Box<dyn std::error::Error>> {
    let needs_rank = matches!(alg, Algorithm::Hooi | Algorithm::Als);
    let tol_only = matches!(
        alg,
        Algorithm::GreedyBottomUp | Algorithm::GreedyTopDown | Algorithm::RaHooi
    );
    if needs_rank && rank.is_none() {
        return Err(format!("{} requires --rank", alg.name()).into());
    }
    if tol_only && tol.is_none() {
        return Err(format!("{} requires --tol", alg.name()).into());
    }
    if rank.is_none() && tol.is_none() {
        return Err("exactly one of --rank or --tol is required".into());
    }
    let cfg = HooiConfig {
        max_iter,
        ..Default::default()
    };
    let outcome = match (alg, rank, tol) {
        (Algorithm::THosvd, Some(r), None) => RunOutcome {
            model: hosvd::t_hosvd_rank(a, &Truncation::new(r.to_vec())?)?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::THosvd, None, Some(eps)) => RunOutcome {
            model: hosvd::t_hosvd_tol(a, eps)?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::StHosvd, Some(r), None) => RunOutcome {
            model: hosvd::st_hosvd_rank(
                a,
                &Truncation::new(r.to_vec())?,
                &hosvd::ascending_order(a.order()),
            )?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::StHosvd, None, Some(eps)) => RunOutcome {
            model: hosvd::st_hosvd_tol(a, eps)?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::GreedyBottomUp, _, Some(eps)) => RunOutcome {
            model: hosvd::greedy_hosvd_bottom_up(a, eps)?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::GreedyTopDown, _, Some(eps)) => RunOutcome {
            model: hosvd::greedy_hosvd_top_down(a, eps)?,
            sweeps: 1,
            history: None,
        },
        (Algorithm::Hooi, Some(r), None) => {
            let trunc = Truncation::new(r.to_vec())?;
            let init_factors = hosvd::t_hosvd_rank(a, &trunc)?.factors;
            let (model, trace) = hooi::hooi(a, &trunc, &init_factors, &cfg)?;
            RunOutcome {
                model,
                sweeps: trace.sweeps,
                history: None,
            }
        }
        (Algorithm::RaHooi, _, Some(eps)) => {
            let init_factors = match init {
                InitKind::StHosvd => hooi::init_st_hosvd(a, eps)?,
                InitKind::Random => hooi::init_random(a, eps, seed)?,
            };
            let cfg = HooiConfig {
                epsilon: Some(eps),
                ..cfg
            };
            let (model, history) = hooi::rank_adaptive_hooi(a, &cfg, &init_factors)?;
            RunOutcome {
                model,
                sweeps: history.sweeps.len(),
                history: Some(history),
            }
        }
        (Algorithm::Als, Some(r), None) => {
            let trunc = Truncation::new(r.to_vec())?;
            let (model, trace) = hooi::classical_als(a, &trunc, None, &cfg)?;
            RunOutcome {
                model,
                sweeps: trace.sweeps,
                history: None,
            }
        }
        _ => {
            return Err(format!(
                "{} does not support this rank/tolerance combination",
                alg.name()
            )
            .into())
        }
    };
    Ok(outcome)
}

fn cmd_decompose(args: DecomposeArgs) -> Result<i32, Box<dyn std::error::Error>> {
    let a = io::read_tensor(&args.input)?;
    let start = Instant::now();
    let outcome = run_algorithm(
        &a,
        args.algorithm,
        args.rank.as_deref(),
        args.tol,
        args.init,
        args.seed,
        args.max_iter,
    )?;
    let wall = start.elapsed().as_secs_f64();
    let used_seed =
        (args.algorithm == Algorithm::RaHooi && args.init == InitKind::Random).then_some(args.seed);
    let report = DecompositionReport::from_model(
        args.algorithm.name(),
        &a,
        &outcome.model,
        args.tol,
        outcome.history.as_ref(),
        outcome.sweeps,
        wall,
        used_seed,
    )?;
    if let Some(path) = &args.save_model {
        io::write_model(path, &outcome.model)?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    match &args.output {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(if report.meets_tolerance() { 0 } else { 2 })
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum DatasetSpec {
    NoisyLowrank {
        shape: Vec<usize>,
        rank: Vec<usize>,
        delta: f64,
        seed: u64,
    },
    Coulomb {
        size: usize,
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_lo() -> f64 {
    -100.0
}

fn default_hi() -> f64 {
    100.0
}

#[derive(Deserialize)]
struct BenchConfig {
    dataset: DatasetSpec,
    /// Tolerance-mode algorithms; "ra-hooi" uses the st-HOSVD init,
    /// "ra-hooi-random" the randomized one.
    algorithms: Vec<String>,
    tolerances: Vec<f64>,
    #[serde(default)]
    seeds: Vec<u64>,
}

fn bench_algorithm(name: &str) -> Result<(Algorithm, InitKind), Box<dyn std::error::Error>> {
    match name {
        "t-hosvd" => Ok((Algorithm::THosvd, InitKind::StHosvd)),
        "st-hosvd" => Ok((Algorithm::StHosvd, InitKind::StHosvd)),
        "greedy-bu" => Ok((Algorithm::GreedyBottomUp, InitKind::StHosvd)),
        "greedy-td" => Ok((Algorithm::GreedyTopDown, InitKind::StHosvd)),
        "ra-hooi" => Ok((Algorithm::RaHooi, InitKind::StHosvd)),
        "ra-hooi-random" => Ok((Algorithm::RaHooi, InitKind::Random)),
        other => Err(format!(
            "unknown benchmark algorithm {other:?} (benchmarks run tolerance-mode algorithms)"
        )
        .into()),
    }
}

fn cmd_bench(config_path: &Path, output: Option<&Path>) -> Result<(), Box<dyn std::error::Error>> {
    let cfg: BenchConfig = serde_json::from_str(&std::fs::read_to_string(config_path)?)?;
    let a = match &cfg.dataset {
        DatasetSpec::NoisyLowrank {
            shape,
            rank,
            delta,
            seed,
        } => {
            let base = synth::random_low_rank_tensor(shape, rank, *seed)?;
            synth::add_gaussian_noise(&base, *delta, seed.wrapping_add(1))?
        }
        DatasetSpec::Coulomb { size, lo, hi } => synth::coulomb_kernel_tensor(*size, *lo, *hi)?,
        DatasetSpec::File { path } => io::read_tensor(path)?,
    };
    let seeds = if cfg.seeds.is_empty() { vec![0] } else { cfg.seeds.clone() };
    let mut rows = vec![DecompositionReport::CSV_HEADER.to_string()];
    for name in &cfg.algorithms {
        let (alg, init) = bench_algorithm(name)?;
        for &eps in &cfg.tolerances {
            for &seed in &seeds {
                let start = Instant::now();
                let outcome =
                    run_algorithm(&a, alg, None, Some(eps), init, seed, 500)?;
                let wall = start.elapsed().as_secs_f64();
                let used_seed = (init == InitKind::Random).then_some(seed);
                let report = DecompositionReport::from_model(
                    name,
                    &a,
                    &outcome.model,
                    Some(eps),
                    outcome.history.as_ref(),
                    outcome.sweeps,
                    wall,
                    used_seed,
                )?;
                rows.push(report.csv_row());
            }
        }
    }
    let csv = rows.join("\n") + "\n";
    match output {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_info(file: &Path, rank_tol: f64) -> Result<(), Box<dyn std::error::Error>> {
    let t = io::read_tensor(file)?;
    let est = tensor::multilinear_rank(&t, rank_tol)?;
    println!("shape: {}", format_shape(t.shape()));
    println!("entries: {}", t.len());
    println!("frobenius norm: {:.12e}", t.frobenius_norm());
    println!(
        "multilinear rank (cutoff {rank_tol:e}): {}{}",
        format_shape(&est.ranks),
        if est.degenerate { " [zero tensor]" } else { "" }
    );
    Ok(())
}

fn format_shape(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}
