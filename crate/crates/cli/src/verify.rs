//! Oracle-equivalence suites behind `lowbit verify`.

use std::fmt;

use lowbit::apb::{apb_forward, decompose_apb, grad_alpha, grad_delta, layer_forward, ApbParams};
use lowbit::kernels::{dot_binary, gemm_ref_dense, mbm, Accumulators, Executor};
use lowbit::tensor::{pack_signs, pack_signs_columns, DenseMatrix, ThmPlanes};
use lowbit::transform::{decompose_thm, recompose_thm, TwoBitMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle;

/// Sizes of every suite.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Exhaustive `dot_binary` over all operand pairs for `n ≤ this`.
    pub exhaustive_dot_n: u32,
    /// Exhaustive `mbm` over all operand/mask triples for `n ≤ this`.
    pub exhaustive_mbm_n: u32,
    /// Beyond `exhaustive_mbm_n` (up to `exhaustive_dot_n`): every operand
    /// pair against this many masks.
    pub pair_sweep_masks: usize,
    pub random_bitops: usize,
    pub random_bitops_max_n: usize,
    /// Exhaustive `{t, h, m}` round trip for level strings up to this length.
    pub thm_n: u32,
    pub gemm_cases: usize,
    pub gemm_max_dim: usize,
    pub gemm_large_cases: usize,
    pub gemm_large: (usize, usize, usize),
    pub apb_layers: usize,
    pub apb_max: (usize, usize),
    pub grad_cases: usize,
    pub threads: usize,
    /// Flip one weight bit before the first 1/1 GEMM (failure-path check).
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            exhaustive_dot_n: 10,
            exhaustive_mbm_n: 6,
            pair_sweep_masks: 4,
            random_bitops: 2_000,
            random_bitops_max_n: 4096,
            thm_n: 6,
            gemm_cases: 40,
            gemm_max_dim: 64,
            gemm_large_cases: 2,
            gemm_large: (64, 2048, 64),
            apb_layers: 20,
            apb_max: (64, 256),
            grad_cases: 200,
            threads: 1,
            inject_fault: false,
        }
    }
}

impl VerifyConfig {
    /// The full-size run: exhaustive `dot_binary` for `n ≤ 12`, 200 + 20 GEMM shapes.
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            exhaustive_dot_n: 12,
            exhaustive_mbm_n: 9,
            pair_sweep_masks: 16,
            random_bitops: 10_000,
            random_bitops_max_n: 4096,
            thm_n: 6,
            gemm_cases: 200,
            gemm_max_dim: 256,
            gemm_large_cases: 20,
            gemm_large: (256, 4096, 256),
            apb_layers: 100,
            apb_max: (128, 512),
            grad_cases: 1_000,
            threads: 1,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for s in &self.suites {
            let status = if s.passed() { "ok  " } else { "FAIL" };
            writeln!(f, "{status} {:<22} {:>12} cases {:>8} failures", s.name, s.cases, s.failures)?;
            if let Some(detail) = &s.first_failure {
                writeln!(f, "     first failure: {detail}")?;
            }
        }
        if self.passed() {
            write!(f, "all suites passed")
        } else {
            write!(f, "verification FAILED")
        }
    }
}

pub fn run(cfg: &VerifyConfig) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let exec = Executor::new(cfg.threads);
    let suites = vec![
        exhaustive_dot(cfg),
        exhaustive_mbm(cfg),
        random_bitops(cfg, &mut rng),
        thm_bijection(cfg),
        gemm_suite(cfg, &exec, &mut rng),
        apb_suite(cfg, &mut rng),
        grad_suite(cfg, &mut rng),
    ];
    Report {
        seed: cfg.seed,
        suites,
    }
}

pub fn exhaustive_dot(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = SuiteResult::new("dot_binary/exhaustive");
    for n in 1..=cfg.exhaustive_dot_n {
        let mut row_u = [0u64; 8];
        let mut row_v = [0u64; 8];
        for u in 0..1u64 << n {
            row_u[0] = u;
            for v in 0..1u64 << n {
                row_v[0] = v;
                let got = dot_binary(&row_u, &row_v, n as usize).ok();
                let want = oracle::dot_pm1_word(u, v, n);
                s.check(got == Some(want), || format!("n={n} u={u:#b} v={v:#b}: {got:?} != {want}"));
            }
        }
    }
    s
}

pub fn exhaustive_mbm(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = SuiteResult::new("mbm/exhaustive");
    let mut rows = [[0u64; 8]; 3];
    let mut one = |s: &mut SuiteResult, x: u64, y: u64, z: u64, n: u32| {
        rows[0][0] = x;
        rows[1][0] = y;
        rows[2][0] = z;
        let got = mbm(&rows[0], &rows[1], &rows[2], n as usize).ok();
        let want = oracle::masked_dot_pm1_word(x, y, z, n);
        s.check(got == Some(want), || {
            format!("n={n} x={x:#b} y={y:#b} z={z:#b}: {got:?} != {want}")
        });
    };
    for n in 1..=cfg.exhaustive_mbm_n {
        for x in 0..1u64 << n {
            for y in 0..1u64 << n {
                for z in 0..1u64 << n {
                    one(&mut s, x, y, z, n);
                }
            }
        }
    }
    // wider rows: every (x, y) pair against structured and random masks
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6d626d);
    for n in cfg.exhaustive_mbm_n + 1..=cfg.exhaustive_dot_n {
        let full = (1u64 << n) - 1;
        let mut masks = vec![0, full, 0x5555_5555_5555_5555 & full, 0xAAAA_AAAA_AAAA_AAAA & full];
        while masks.len() < cfg.pair_sweep_masks.max(4) {
            masks.push(rng.random::<u64>() & full);
        }
        for &z in &masks {
            for x in 0..=full {
                for y in 0..=full {
                    one(&mut s, x, y, z, n);
                }
            }
        }
    }
    s
}

pub fn random_bitops(cfg: &VerifyConfig, rng: &mut impl Rng) -> SuiteResult {
    let mut s = SuiteResult::new("dot+mbm/random");
    for _ in 0..cfg.random_bitops {
        let n = rng.random_range(1..=cfg.random_bitops_max_n);
        let words = oracle::lane_words(n);
        let u = oracle::random_row(rng, n, words);
        let v = oracle::random_row(rng, n, words);
        let z = oracle::random_row(rng, n, words);
        let d = dot_binary(&u, &v, n).ok();
        let want = oracle::dot_pm1(&u, &v, n);
        s.check(d == Some(want), || format!("dot n={n}: {d:?} != {want}"));
        let m = mbm(&u, &v, &z, n).ok();
        let want = oracle::masked_dot_pm1(&u, &v, &z, n);
        s.check(m == Some(want), || format!("mbm n={n}: {m:?} != {want}"));
        // mask of all ones reduces to the plain dot product
        let ones = oracle::random_row(&mut ConstOnes, n, words);
        let m1 = mbm(&u, &v, &ones, n).ok();
        s.check(m1 == d, || format!("mbm(all ones) n={n}: {m1:?} != {d:?}"));
    }
    s
}

/// An `Rng` that only yields set bits, to build all-ones rows.
struct ConstOnes;

impl rand::RngCore for ConstOnes {
    fn next_u32(&mut self) -> u32 {
        u32::MAX
    }
    fn next_u64(&mut self) -> u64 {
        u64::MAX
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        dst.fill(0xff);
    }
}

pub fn thm_bijection(cfg: &VerifyConfig) -> SuiteResult {
    let mut s = SuiteResult::new("thm/bijection");
    for n in 1..=cfg.thm_n {
        for code in 0..4u32.pow(n) {
            let levels: Vec<u8> = (0..n).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
            let q = TwoBitMatrix::new(1, n as usize, levels.clone(), 1.0).expect("valid levels");
            let p = decompose_thm(&q);
            let exclusive = (0..n as usize).all(|i| {
                let triple = (p.t().get(0, i), p.h().get(0, i), p.m().get(0, i));
                // the four table columns for levels 0..=3
                let table = [(false, false, true), (false, false, false), (false, true, false), (true, false, true)];
                triple == table[levels[i] as usize]
            });
            let back = recompose_thm(&p).ok();
            s.check(exclusive && back.as_ref() == Some(&q), || {
                format!("levels {levels:?}: exclusive={exclusive}, recomposed {back:?}")
            });
        }
    }
    s
}

fn first_mismatch(got: &Accumulators, want: &DenseMatrix) -> Option<(usize, usize, i64, f64)> {
    for r in 0..want.rows() {
        for c in 0..want.cols() {
            let w = f64::from(want.get(r, c));
            if f64::from(got.get(r, c)) != w {
                return Some((r, c, i64::from(got.get(r, c)), w));
            }
        }
    }
    None
}

fn first_dense_mismatch(got: &DenseMatrix, want: &DenseMatrix) -> Option<(usize, usize, f32, f32)> {
    for r in 0..want.rows() {
        for c in 0..want.cols() {
            if got.get(r, c) != want.get(r, c) {
                return Some((r, c, got.get(r, c), want.get(r, c)));
            }
        }
    }
    None
}

const DYADIC: [f32; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// One random GEMM shape through all three bitwise routines.
///
/// Each routine is compared twice against the dense reference: its integer
/// accumulators against the reference on centered, scale-free operands, and
/// its scaled output (with power-of-two scales, so every value is exact)
/// against the reference on the uncentered decoded operands.
pub fn gemm_case(
    exec: &Executor,
    rng: &mut impl Rng,
    (m, k, n): (usize, usize, usize),
    inject_fault: bool,
    s: &mut SuiteResult,
) {
    let tag = |routine: &str, what: &str| format!("{routine} {what} (M,K,N)=({m},{k},{n})");

    // 1/1
    let a = oracle::random_signs(rng, m, k);
    let b = oracle::random_signs(rng, k, n);
    let mut a_bits = pack_signs(&a);
    if inject_fault {
        let mut flipped = a.clone().into_vec();
        flipped[0] = -flipped[0];
        a_bits = pack_signs(&DenseMatrix::new(m, k, flipped).expect("finite"));
    }
    let b_bits = pack_signs_columns(&b);
    let want = gemm_ref_dense(&a, &b).expect("dims");
    let got = exec.gemm_1x1_int(&a_bits, &b_bits).expect("dims");
    let bad = first_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("1x1", "integer"))
    });
    let (ga, gb) = (DYADIC[rng.random_range(0..5)], DYADIC[rng.random_range(0..5)]);
    let got = exec.gemm_1x1(&a_bits, &b_bits, Some((ga, gb))).expect("dims");
    let want = gemm_ref_dense(&a.map(|v| v * ga), &b.map(|v| v * gb)).expect("dims");
    let bad = first_dense_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("1x1", "scaled"))
    });

    // 1/2: binary weights × 2-bit activations
    let w = oracle::random_signs(rng, m, k);
    let act = oracle::random_levels(rng, k, n);
    let s_a = DYADIC[rng.random_range(0..5)];
    let gamma = DYADIC[rng.random_range(0..5)];
    let q = TwoBitMatrix::new(k, n, act.clone(), s_a).expect("levels");
    let planes = decompose_thm(&q.transpose());
    let w_bits = pack_signs(&w);
    let centered2 = oracle::levels_dense(&act, k, n, |p| 2.0 * f32::from(p) - 3.0);
    let want = gemm_ref_dense(&w, &centered2).expect("dims");
    let got = exec.gemm_1x2_int(&w_bits, &planes).expect("dims");
    let bad = first_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("1x2", "integer"))
    });
    let got = exec.gemm_1x2(&w_bits, gamma, &planes).expect("dims");
    let want = gemm_ref_dense(
        &w.map(|v| v * gamma),
        &oracle::levels_dense(&act, k, n, |p| f32::from(p) * s_a),
    )
    .expect("dims");
    let bad = first_dense_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("1x2", "uncentered"))
    });

    // 2/2
    let wl = oracle::random_levels(rng, m, k);
    let al = oracle::random_levels(rng, k, n);
    let (s_w, s_a) = (DYADIC[rng.random_range(0..5)], DYADIC[rng.random_range(0..5)]);
    let wp = decompose_thm(&TwoBitMatrix::new(m, k, wl.clone(), s_w).expect("levels"));
    let ap = decompose_thm(&TwoBitMatrix::new(k, n, al.clone(), s_a).expect("levels").transpose());
    let want = gemm_ref_dense(
        &oracle::levels_dense(&wl, m, k, |p| 2.0 * f32::from(p) - 3.0),
        &oracle::levels_dense(&al, k, n, |p| 2.0 * f32::from(p) - 3.0),
    )
    .expect("dims");
    let got = exec.gemm_2x2_int(&wp, &ap).expect("dims");
    let bad = first_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("2x2", "integer"))
    });
    let got = exec.gemm_2x2(&wp, &ap).expect("dims");
    let want = gemm_ref_dense(
        &oracle::levels_dense(&wl, m, k, |p| f32::from(p) * s_w),
        &oracle::levels_dense(&al, k, n, |p| f32::from(p) * s_a),
    )
    .expect("dims");
    let bad = first_dense_mismatch(&got, &want);
    s.check(bad.is_none(), || {
        let (r, c, g, w) = bad.unwrap();
        format!("{} at (r,c)=({r},{c}): {g} != {w}", tag("2x2", "uncentered"))
    });
}

pub fn gemm_suite(cfg: &VerifyConfig, exec: &Executor, rng: &mut impl Rng) -> SuiteResult {
    let mut s = SuiteResult::new("gemm/cross-oracle");
    let d = cfg.gemm_max_dim.max(1);
    for i in 0..cfg.gemm_cases {
        let shape = (rng.random_range(1..=d), rng.random_range(1..=d), rng.random_range(1..=d));
        gemm_case(exec, rng, shape, cfg.inject_fault && i == 0, &mut s);
    }
    let (lm, lk, ln) = cfg.gemm_large;
    for _ in 0..cfg.gemm_large_cases {
        let shape = (
            rng.random_range(lm / 2..=lm).max(1),
            rng.random_range(lk / 2..=lk).max(1),
            rng.random_range(ln / 2..=ln).max(1),
        );
        gemm_case(exec, rng, shape, false, &mut s);
    }
    s
}

/// Random weight matrix and interval parameters for the APB suites.
pub fn random_layer(rng: &mut impl Rng, max: (usize, usize)) -> (DenseMatrix, ApbParams) {
    let rows = rng.random_range(1..=max.0);
    let cols = rng.random_range(1..=max.1);
    let spread: f32 = rng.random_range(0.05..3.0);
    let w = DenseMatrix::from_fn(rows, cols, |_, _| {
        // sum of uniforms: bell-shaped with occasional large magnitudes
        let u: f32 = (0..4).map(|_| rng.random_range(-1.0f32..1.0)).sum();
        u * spread
    });
    let alpha = rng.random_range(0.01..2.0) * f64::from(spread);
    let delta = rng.random_range(0.0..2.0) * f64::from(spread);
    (w, ApbParams::clamped(alpha, delta).expect("positive alpha"))
}

pub fn apb_suite(cfg: &VerifyConfig, rng: &mut impl Rng) -> SuiteResult {
    let mut s = SuiteResult::new("apb/reconstruct+forward");
    for _ in 0..cfg.apb_layers {
        let (w, p) = random_layer(rng, cfg.apb_max);
        let a = apb_forward(&w, &p);
        let layer = decompose_apb(&a, p.alpha() as f32).expect("alpha > 0");
        let rec = layer.reconstruct();
        let exact = rec.as_slice().iter().zip(a.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits());
        s.check(exact, || format!("{}x{} reconstruction differs", w.rows(), w.cols()));
        // survivors only where the weight left the interval
        let support = layer
            .survivors()
            .triplets()
            .all(|(r, c, _)| !p.binarizes(w.get(r, c)));
        s.check(support, || "survivor inside the binarization interval".into());

        let n = rng.random_range(1..=32);
        let b = DenseMatrix::from_fn(a.cols(), n, |_, _| rng.random_range(-1.0f32..1.0));
        let got = layer_forward(&layer, &b).expect("dims");
        let want = gemm_ref_dense(&a, &b).expect("dims");
        let err = got.relative_error(&want).expect("dims");
        s.check(err < 1e-4, || format!("{}x{}x{n} relative error {err:e}", a.rows(), a.cols()));
    }
    s
}

pub fn grad_suite(cfg: &VerifyConfig, rng: &mut impl Rng) -> SuiteResult {
    let mut s = SuiteResult::new("apb/gradients");
    for _ in 0..cfg.grad_cases {
        let (w, p) = random_layer(rng, (8, 64));
        let g = DenseMatrix::from_fn(w.rows(), w.cols(), |_, _| rng.random_range(-1.0f32..1.0));
        let (wa, wd) = oracle::apb_grads(g.as_slice(), w.as_slice(), p.alpha(), p.delta());
        let ga = grad_alpha(&g, &w, &p).expect("shape");
        let gd = grad_delta(&g, &w, &p).expect("shape");
        s.check((ga - wa).abs() <= 1e-12 && (gd - wd).abs() <= 1e-12, || {
            format!("alpha {ga} vs {wa}, delta {gd} vs {wd}")
        });
    }
    s
}

/// Exhaustive/random planes used by external callers to double-check parity.
pub fn planes_of(levels: &[u8], rows: usize, cols: usize, scale: f32) -> ThmPlanes {
    decompose_thm(&TwoBitMatrix::new(rows, cols, levels.to_vec(), scale).expect("levels"))
}
