//! Timing harness behind `lowbit bench`.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use lowbit::kernels::{gemm_ref_dense, tpp_model, Executor, GemmProblem, Precision, TppModel};
use lowbit::tensor::{pack_signs, pack_signs_columns, CsrMatrix, DenseMatrix};
use lowbit::transform::{decompose_thm, TwoBitMatrix};
use lowbit::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle;

/// Fraction of nonzeros in the sparse operand of the `spmm` routine.
pub const SPMM_DENSITY: f64 = 0.05;

/// Measured percentages above this are flagged as jitter.
pub const PCT_TPP_JITTER: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Routine {
    RefDense,
    W1A1,
    W1A2,
    W2A2,
    Spmm,
    Ref1x32,
}

impl Routine {
    pub const ALL: [Routine; 6] = [
        Routine::RefDense,
        Routine::W1A1,
        Routine::W1A2,
        Routine::W2A2,
        Routine::Spmm,
        Routine::Ref1x32,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Routine::RefDense => "ref_dense",
            Routine::W1A1 => "1x1",
            Routine::W1A2 => "1x2",
            Routine::W2A2 => "2x2",
            Routine::Spmm => "spmm",
            Routine::Ref1x32 => "1x32_ref",
        }
    }

    /// Precision whose peak is the denominator of `pct_tpp`.
    pub fn precision(self) -> Precision {
        match self {
            Routine::W1A1 => Precision::W1A1,
            Routine::W1A2 => Precision::W1A2,
            Routine::W2A2 => Precision::W2A2,
            Routine::RefDense | Routine::Spmm | Routine::Ref1x32 => Precision::Fp32,
        }
    }
}

impl fmt::Display for Routine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Routine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Routine::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Routine::ALL.iter().map(|r| r.name()).collect();
                Error::InvalidParameter(format!("unknown routine {s:?} (expected one of {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub warmup: usize,
    pub reps: usize,
    pub seed: u64,
    pub clock_ghz: Option<f64>,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            warmup: 2,
            reps: 9,
            seed: 1,
            clock_ghz: None,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub routine: Routine,
    pub problem: GemmProblem,
    pub reps: usize,
    /// Median wall time of one call.
    pub seconds: f64,
    /// Logical updates per second / 1e9.
    pub gops: f64,
    /// Peak updates per second / 1e9 for this routine; needs a clock.
    pub tpp_gops: Option<f64>,
    pub pct_tpp: Option<f64>,
}

impl BenchRecord {
    pub fn gflops(&self) -> f64 {
        2.0 * self.gops
    }

    pub fn flagged(&self) -> bool {
        self.pct_tpp.is_some_and(|p| p > PCT_TPP_JITTER)
    }
}

pub const CSV_HEADER: &str = "routine,m,k,n,reps,seconds,gops,gflops,tpp_gops,pct_tpp,flag";

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.4}")).unwrap_or_default();
        let p = &self.problem;
        format!(
            "{},{},{},{},{},{:.9},{:.4},{:.4},{},{},{}",
            self.routine,
            p.m,
            p.k,
            p.n,
            self.reps,
            self.seconds,
            self.gops,
            self.gflops(),
            opt(self.tpp_gops),
            opt(self.pct_tpp),
            if self.flagged() { "jitter" } else { "" }
        )
    }
}

pub fn write_csv(out: &mut impl Write, records: &[BenchRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Median of the samples; sorts in place.
pub fn median(samples: &mut [f64]) -> f64 {
    assert!(!samples.is_empty(), "median of no samples");
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

/// Parses `LO..HI[:STEP]` into the sizes `LO, LO+STEP, …, ≤ HI`.
/// Without a step the sizes double.
pub fn parse_square(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("square sweep {spec:?} is not LO..HI[:STEP]"));
    let (range, step) = match spec.split_once(':') {
        Some((r, s)) => (r, Some(s.parse::<usize>().map_err(|_| bad())?)),
        None => (spec, None),
    };
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: usize = lo.parse().map_err(|_| bad())?;
    let hi: usize = hi.parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi || step == Some(0) {
        return Err(bad());
    }
    let mut sizes = Vec::new();
    let mut s = lo;
    while s <= hi {
        sizes.push(s);
        s = match step {
            Some(step) => s + step,
            None => s * 2,
        };
    }
    Ok(sizes)
}

type Job = Box<dyn FnMut()>;

fn prepare(routine: Routine, p: GemmProblem, exec: Executor, rng: &mut ChaCha8Rng) -> Job {
    let GemmProblem { m, k, n } = p;
    match routine {
        Routine::RefDense => {
            let a = DenseMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0f32..1.0));
            let b = DenseMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0f32..1.0));
            Box::new(move || {
                black_box(gemm_ref_dense(&a, &b).expect("dims"));
            })
        }
        Routine::W1A1 => {
            let a = pack_signs(&oracle::random_signs(rng, m, k));
            let b = pack_signs_columns(&oracle::random_signs(rng, k, n));
            Box::new(move || {
                black_box(exec.gemm_1x1(&a, &b, Some((1.0, 1.0))).expect("dims"));
            })
        }
        Routine::W1A2 => {
            let w = pack_signs(&oracle::random_signs(rng, m, k));
            let act = TwoBitMatrix::new(n, k, oracle::random_levels(rng, n, k), 0.5).expect("levels");
            let a = decompose_thm(&act);
            Box::new(move || {
                black_box(exec.gemm_1x2(&w, 1.0, &a).expect("dims"));
            })
        }
        Routine::W2A2 => {
            let w = decompose_thm(&TwoBitMatrix::new(m, k, oracle::random_levels(rng, m, k), 0.5).expect("levels"));
            let a = decompose_thm(&TwoBitMatrix::new(n, k, oracle::random_levels(rng, n, k), 0.5).expect("levels"));
            Box::new(move || {
                black_box(exec.gemm_2x2(&w, &a).expect("dims"));
            })
        }
        Routine::Spmm => {
            let dense = DenseMatrix::from_fn(m, k, |_, _| {
                if rng.random_bool(SPMM_DENSITY) {
                    rng.random_range(-1.0f32..1.0)
                } else {
                    0.0
                }
            });
            let a = CsrMatrix::from_dense(&dense);
            let b = DenseMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0f32..1.0));
            Box::new(move || {
                black_box(exec.spmm_csr(&a, &b).expect("dims"));
            })
        }
        Routine::Ref1x32 => {
            let w = pack_signs(&oracle::random_signs(rng, m, k));
            let b = DenseMatrix::from_fn(k, n, |_, _| rng.random_range(-1.0f32..1.0));
            Box::new(move || {
                black_box(exec.gemm_1x32(&w, 1.0, &b).expect("dims"));
            })
        }
    }
}

pub fn bench_one(routine: Routine, p: GemmProblem, cfg: &BenchConfig) -> Result<BenchRecord> {
    Ok(bench_shape(&[routine], p, cfg)?.remove(0))
}

/// Times several routines on one shape, each with its own warmup and
/// consecutive repetitions.
pub fn bench_shape(routines: &[Routine], p: GemmProblem, cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("reps must be at least 1".into()));
    }
    let exec = Executor::new(cfg.threads);
    let mut samples = Vec::with_capacity(routines.len());
    for &r in routines {
        let mut job = prepare(r, p, exec, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
        for _ in 0..cfg.warmup {
            job();
        }
        let times: Vec<f64> = (0..cfg.reps)
            .map(|_| {
                let t = Instant::now();
                job();
                t.elapsed().as_secs_f64().max(1e-9)
            })
            .collect();
        samples.push(times);
    }
    routines
        .iter()
        .zip(&mut samples)
        .map(|(&routine, times)| {
            let tpp_gops = match cfg.clock_ghz {
                Some(clock) => {
                    let peak = tpp_model(&TppModel::avx512(clock, routine.precision()))?.peak_gups;
                    Some(peak * cfg.threads.max(1) as f64)
                }
                None => None,
            };
            let seconds = median(times);
            let gops = p.updates() / seconds / 1e9;
            Ok(BenchRecord {
                routine,
                problem: p,
                reps: cfg.reps,
                seconds,
                gops,
                tpp_gops,
                pct_tpp: tpp_gops.map(|t| 100.0 * gops / t),
            })
        })
        .collect()
}

pub fn run(routines: &[Routine], problems: &[GemmProblem], cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    let mut out = Vec::with_capacity(routines.len() * problems.len());
    for &p in problems {
        out.extend(bench_shape(routines, p, cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routine_names_round_trip() {
        for r in Routine::ALL {
            assert_eq!(r.name().parse::<Routine>().unwrap(), r);
        }
        assert!("3x3".parse::<Routine>().is_err());
    }

    #[test]
    fn median_is_order_invariant() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [2.0, 3.0, 1.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn square_sweeps() {
        assert_eq!(parse_square("256..2048").unwrap(), [256, 512, 1024, 2048]);
        assert_eq!(parse_square("100..300:100").unwrap(), [100, 200, 300]);
        assert!(parse_square("0..4").is_err());
        assert!(parse_square("8..4").is_err());
        assert!(parse_square("4..8:0").is_err());
        assert!(parse_square("4-8").is_err());
    }

    #[test]
    fn schema_does_not_depend_on_reps() {
        let p = GemmProblem::square(16).unwrap();
        for reps in [1, 9] {
            let cfg = BenchConfig { warmup: 0, reps, clock_ghz: Some(3.0), ..BenchConfig::default() };
            for r in Routine::ALL {
                let rec = bench_one(r, p, &cfg).unwrap();
                assert!(rec.seconds > 0.0);
                assert_eq!(rec.csv_row().split(',').count(), CSV_HEADER.split(',').count());
            }
        }
    }

    #[test]
    fn pct_tpp_needs_clock() {
        let p = GemmProblem::square(8).unwrap();
        let rec = bench_one(Routine::W1A1, p, &BenchConfig { warmup: 0, reps: 1, ..BenchConfig::default() }).unwrap();
        assert_eq!(rec.pct_tpp, None);
        assert!(rec.csv_row().ends_with(",,,"));
    }
}
