//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string. The `*_json` functions hold the logic
//! so they can be tested natively.

use lowbit::apb::{apb_forward, decompose_apb, init_alpha_delta, memory_bits, position_bits, ApbParams};
use lowbit::kernels::{gemm_1x2, gemm_ref_dense, mbm, tpp_model, Precision, TppModel};
use lowbit::tensor::{complement_mask, pack_signs, DenseMatrix};
use lowbit::transform::{decompose_thm, TwoBitMatrix};
use lowbit::{Error, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const CURVE_POINTS: usize = 241;
const MAX_SAMPLES: usize = 1 << 22;

#[derive(Serialize)]
struct ApbView {
    alpha: f64,
    delta: f64,
    suggested_alpha: f64,
    suggested_delta: f64,
    /// `[w, APB(w)]` pairs across ±4σ.
    curve: Vec<[f64; 2]>,
    n: usize,
    s: usize,
    b_p: u32,
    avg_bits_exact: f64,
    avg_bits_approx: f64,
}

/// Binarizes `samples` Gaussian weights with the given interval and reports
/// the transfer curve plus storage cost. Non-positive `alpha`/`delta` fall
/// back to the data-driven initialization.
pub fn apb_json(alpha: f64, delta: f64, std: f64, samples: usize, seed: u32) -> Result<String> {
    if !(std.is_finite() && std > 0.0) || samples == 0 || samples > MAX_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need std > 0 and 1..={MAX_SAMPLES} samples, got std {std}, {samples} samples"
        )));
    }
    let dist = Normal::new(0.0, std as f32).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from(seed));
    let data = (0..samples).map(|_| dist.sample(&mut rng)).collect();
    let w = DenseMatrix::new(1, samples, data)?;

    let init = init_alpha_delta(&w)?;
    let p = ApbParams::clamped(
        if alpha > 0.0 { alpha } else { init.alpha() },
        if delta > 0.0 { delta } else { init.delta() },
    )?;
    let layer = decompose_apb(&apb_forward(&w, &p), p.alpha() as f32)?;
    let b_p = position_bits(&[samples.max(2)])?;
    let mem = memory_bits(samples, layer.nnz(), 32, b_p)?;

    let span = 4.0 * std;
    let xs: Vec<f32> = (0..CURVE_POINTS)
        .map(|i| (-span + 2.0 * span * i as f64 / (CURVE_POINTS - 1) as f64) as f32)
        .collect();
    let ys = apb_forward(&DenseMatrix::new(1, xs.len(), xs.clone())?, &p);
    let curve = xs
        .iter()
        .zip(ys.as_slice())
        .map(|(&x, &y)| [f64::from(x), f64::from(y)])
        .collect();

    let view = ApbView {
        alpha: p.alpha(),
        delta: p.delta(),
        suggested_alpha: init.alpha(),
        suggested_delta: init.delta(),
        curve,
        n: samples,
        s: layer.nnz(),
        b_p,
        avg_bits_exact: mem.avg_exact,
        avg_bits_approx: mem.avg_approx,
    };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct ThmView {
    t: String,
    h: String,
    m: String,
    centered: Vec<f32>,
    mbm_t: i64,
    mbm_h: i64,
    /// `(3/2)·mbm_t + (1/2)·mbm_h`: binary weights against the centered levels.
    centered_dot: f64,
    /// Binary weights against the raw levels, through the kernel and densely.
    kernel_dot: f32,
    dense_dot: f32,
}

fn bit_string(b: &lowbit::tensor::BitMatrix) -> String {
    (0..b.cols()).map(|c| if b.get(0, c) { '1' } else { '0' }).collect()
}

/// Splits a string of levels (`0`–`3`) into `{t, h, m}` planes and dots it
/// with a sign string (`+`/`-`) of the same length.
pub fn thm_json(levels: &str, signs: &str) -> Result<String> {
    let levels: Vec<u8> = levels
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0'..='3' => Ok(c as u8 - b'0'),
            _ => Err(Error::InvalidParameter(format!("level {c:?} is not 0-3"))),
        })
        .collect::<Result<_>>()?;
    let signs: Vec<f32> = signs
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '+' => Ok(1.0),
            '-' => Ok(-1.0),
            _ => Err(Error::InvalidParameter(format!("sign {c:?} is not + or -"))),
        })
        .collect::<Result<_>>()?;
    let k = levels.len();
    if k == 0 || signs.len() != k {
        return Err(Error::DimensionMismatch(format!("{k} levels but {} signs", signs.len())));
    }

    let q = TwoBitMatrix::new(1, k, levels, 1.0)?;
    let p = decompose_thm(&q);
    let w = DenseMatrix::new(1, k, signs)?;
    let w_bits = pack_signs(&w);
    let mbm_t = mbm(w_bits.row(0), p.t().row(0), p.m().row(0), k)?;
    let mbm_h = mbm(w_bits.row(0), p.h().row(0), complement_mask(p.m()).row(0), k)?;
    let kernel = gemm_1x2(&w_bits, 1.0, &p)?;
    let dense = gemm_ref_dense(&w, &q.to_dense().transpose())?;

    let view = ThmView {
        t: bit_string(p.t()),
        h: bit_string(p.h()),
        m: bit_string(p.m()),
        centered: (0..k).map(|c| f32::from(q.level(0, c)) - 1.5).collect(),
        mbm_t,
        mbm_h,
        centered_dot: 1.5 * mbm_t as f64 + 0.5 * mbm_h as f64,
        kernel_dot: kernel.get(0, 0),
        dense_dot: dense.get(0, 0),
    };
    Ok(serde_json::to_string(&view)?)
}

#[derive(Serialize)]
struct TppRow {
    precision: &'static str,
    values_per_cycle: f64,
    cost_vs_1x1: Option<f64>,
    speedup_vs_fp32: f64,
    peak_gups: f64,
}

pub fn tpp_json(clock_ghz: f64) -> Result<String> {
    let rows = Precision::ALL
        .into_iter()
        .map(|p| {
            let r = tpp_model(&TppModel::avx512(clock_ghz, p))?;
            Ok(TppRow {
                precision: p.label(),
                values_per_cycle: r.values_per_cycle,
                cost_vs_1x1: p.binary_cost().map(|_| r.cost_ratio_vs_1x1),
                speedup_vs_fp32: r.speedup_vs_fp32,
                peak_gups: r.peak_gups,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&rows)?)
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn apb(alpha: f64, delta: f64, std: f64, samples: usize, seed: u32) -> std::result::Result<String, JsError> {
    js(apb_json(alpha, delta, std, samples, seed))
}

#[wasm_bindgen]
pub fn thm(levels: &str, signs: &str) -> std::result::Result<String, JsError> {
    js(thm_json(levels, signs))
}

#[wasm_bindgen]
pub fn tpp(clock_ghz: f64) -> std::result::Result<String, JsError> {
    js(tpp_json(clock_ghz))
}
