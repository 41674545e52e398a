use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lowbit::apb::{apb_forward, decompose_apb, init_alpha_delta, store_layer, ApbParams};
use lowbit::kernels::{backend, GemmProblem};
use lowbit::tensor::io::{load_dense, store_thm};
use lowbit::tensor::{pack_signs, store_tensor, DenseMatrix, Tensor};
use lowbit::transform::{decompose_thm, quantize_uniform_2bit};
use lowbit::Error;
use lowbit_cli::bench::{self, BenchConfig, Routine};
use lowbit_cli::shapes::{im2col_shape, ConvLayer};
use lowbit_cli::stats::{apb_stats, tpp_table};
use lowbit_cli::verify::{self, VerifyConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Parser)]
#[command(name = "lowbit", version, about = "Low-bit GEMM kernels: verification, benchmarks, APB statistics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every kernel against brute-force oracles.
    Verify(VerifyArgs),
    /// Time GEMM routines and print CSV.
    Bench(BenchArgs),
    /// Theoretical peak per precision.
    Tpp {
        /// Core clock in GHz (peak GUPS column scales with it).
        #[arg(long, default_value_t = 1.0)]
        clock_ghz: f64,
    },
    /// APB decomposition statistics of a dense weight tensor, as JSON.
    ApbStats(ApbStatsArgs),
    /// Convert or generate tensor files.
    #[command(subcommand)]
    Pack(PackCmd),
    /// GEMM shape of a convolution lowered with im2col.
    Shapes(ShapesArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Run the full-size suites (exhaustive n ≤ 12, large GEMMs).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Flip one weight bit before the first 1/1 GEMM.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated: ref_dense, 1x1, 1x2, 2x2, spmm, 1x32_ref.
    #[arg(long, default_value = "1x1,1x2,2x2", value_delimiter = ',')]
    routine: Vec<String>,
    #[arg(long, requires_all = ["k", "n"], conflicts_with = "square")]
    m: Option<usize>,
    #[arg(long, requires_all = ["m", "n"])]
    k: Option<usize>,
    #[arg(long, requires_all = ["m", "k"])]
    n: Option<usize>,
    /// Square sweep LO..HI[:STEP]; sizes double when STEP is omitted.
    #[arg(long)]
    square: Option<String>,
    #[arg(long, default_value_t = 9)]
    reps: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Enables the tpp_gops and pct_tpp columns.
    #[arg(long)]
    clock_ghz: Option<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct ApbStatsArgs {
    /// Dense tensor file.
    weights: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Bits per stored full-precision value.
    #[arg(long, default_value_t = 32)]
    b_v: u32,
    /// Layer dimensions used for position bits (default: larger matrix dimension).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum PackCmd {
    /// Dense tensor to a sign bit matrix.
    Signs { input: PathBuf, output: PathBuf },
    /// Dense non-negative tensor to 2-bit {t, h, m} planes (STEM.{t,h,m}.btsr + STEM.json).
    Thm {
        input: PathBuf,
        stem: PathBuf,
        #[arg(long)]
        scale: f32,
    },
    /// Dense weights to an APB layer (STEM.bin.btsr, STEM.full.btsr, STEM.json).
    Apb {
        input: PathBuf,
        stem: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Write a dense tensor of Gaussian samples.
    Gaussian {
        output: PathBuf,
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 0.0)]
        mean: f32,
        #[arg(long, default_value_t = 1.0)]
        std: f32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ShapesArgs {
    #[arg(long)]
    c_in: usize,
    #[arg(long)]
    c_out: usize,
    /// Kernel size, `K` or `KHxKW`.
    #[arg(long, default_value = "3")]
    kernel: String,
    /// Input size, `S` or `HxW`.
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = 0)]
    pad: usize,
}

enum Failure {
    Verify,
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) | Error::Json(_) => Failure::Io(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn pair(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("expected N or AxB, got {s:?}"));
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn params(w: &DenseMatrix, alpha: Option<f64>, delta: Option<f64>) -> Result<ApbParams, Failure> {
    let init = init_alpha_delta(w)?;
    Ok(ApbParams::clamped(alpha.unwrap_or(init.alpha()), delta.unwrap_or(init.delta()))?)
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Verify(a) => {
            let mut cfg = if a.full {
                VerifyConfig::full(a.seed)
            } else {
                VerifyConfig {
                    seed: a.seed,
                    ..VerifyConfig::default()
                }
            };
            cfg.threads = a.threads;
            cfg.inject_fault = a.inject_fault;
            eprintln!("backend: {}", backend());
            let report = verify::run(&cfg);
            println!("{report}");
            if !report.passed() {
                return Err(Failure::Verify);
            }
        }
        Cmd::Bench(a) => {
            let routines = a
                .routine
                .iter()
                .map(|r| r.parse::<Routine>())
                .collect::<Result<Vec<_>, _>>()?;
            let problems = match (&a.square, a.m, a.k, a.n) {
                (Some(sq), ..) => bench::parse_square(sq)?
                    .into_iter()
                    .map(GemmProblem::square)
                    .collect::<Result<Vec<_>, _>>()?,
                (None, Some(m), Some(k), Some(n)) => vec![GemmProblem::new(m, k, n)?],
                _ => vec![GemmProblem::square(1024)?],
            };
            let cfg = BenchConfig {
                warmup: a.warmup,
                reps: a.reps,
                seed: a.seed,
                clock_ghz: a.clock_ghz,
                threads: a.threads,
            };
            let records = bench::run(&routines, &problems, &cfg)?;
            match a.csv {
                Some(path) => {
                    let mut f = BufWriter::new(File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?);
                    bench::write_csv(&mut f, &records)?;
                    f.flush()?;
                }
                None => bench::write_csv(&mut io::stdout().lock(), &records)?,
            }
        }
        Cmd::Tpp { clock_ghz } => print!("{}", tpp_table(clock_ghz)?),
        Cmd::ApbStats(a) => {
            let w = load_dense(&a.weights)?;
            let st = apb_stats(&w, a.alpha, a.delta, a.b_v, a.dims.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&st).map_err(Error::from)?);
        }
        Cmd::Pack(p) => match p {
            PackCmd::Signs { input, output } => {
                let w = load_dense(&input)?;
                store_tensor(&output, &Tensor::Bits(pack_signs(&w)))?;
            }
            PackCmd::Thm { input, stem, scale } => {
                let w = load_dense(&input)?;
                store_thm(&stem, &decompose_thm(&quantize_uniform_2bit(&w, scale)?))?;
            }
            PackCmd::Apb {
                input,
                stem,
                alpha,
                delta,
            } => {
                let w = load_dense(&input)?;
                let p = params(&w, alpha, delta)?;
                let layer = decompose_apb(&apb_forward(&w, &p), p.alpha() as f32)?;
                store_layer(&stem, &layer)?;
                println!("alpha {} delta {} survivors {}", p.alpha(), p.delta(), layer.nnz());
            }
            PackCmd::Gaussian {
                output,
                rows,
                cols,
                mean,
                std,
                seed,
            } => {
                let dist = Normal::new(mean, std).map_err(|e| Failure::Usage(e.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let data = (0..rows * cols).map(|_| dist.sample(&mut rng)).collect();
                store_tensor(&output, &Tensor::Dense(DenseMatrix::new(rows, cols, data)?))?;
            }
        },
        Cmd::Shapes(a) => {
            let (kh, kw) = pair(&a.kernel)?;
            let (h, w) = pair(&a.input)?;
            let p = im2col_shape(&ConvLayer {
                c_in: a.c_in,
                c_out: a.c_out,
                kh,
                kw,
                h,
                w,
                stride: a.stride,
                pad: a.pad,
            })?;
            println!("M={} K={} N={}", p.m, p.k, p.n);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
