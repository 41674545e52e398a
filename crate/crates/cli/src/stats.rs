//! `lowbit tpp` and `lowbit apb-stats`.

use std::fmt::Write as _;

use lowbit::apb::{apb_forward, decompose_apb, init_alpha_delta, memory_bits, position_bits, ApbParams};
use lowbit::kernels::{tpp_model, Precision, TppModel, TppReport};
use lowbit::tensor::DenseMatrix;
use lowbit::Result;
use serde::Serialize;

pub fn tpp_rows(clock_ghz: f64) -> Result<Vec<(Precision, TppReport)>> {
    Precision::ALL
        .into_iter()
        .map(|p| Ok((p, tpp_model(&TppModel::avx512(clock_ghz, p))?)))
        .collect()
}

pub fn tpp_table(clock_ghz: f64) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "AVX-512, 2 ports, {clock_ghz} GHz");
    let _ = writeln!(
        out,
        "{:<6} {:>12} {:>10} {:>12} {:>10}",
        "prec", "values/cyc", "cost", "vs fp32", "peak GUPS"
    );
    for (p, r) in tpp_rows(clock_ghz)? {
        let cost = match p {
            Precision::Fp32 => "-".to_string(),
            _ => format!("{:.0}", r.cost_ratio_vs_1x1),
        };
        let _ = writeln!(
            out,
            "{:<6} {:>12.2} {:>10} {:>11.2}x {:>10.1}",
            p.label(),
            r.values_per_cycle,
            cost,
            r.speedup_vs_fp32,
            r.peak_gups
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub exact: u64,
    pub approx: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApbStats {
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    pub s: usize,
    pub density: f64,
    pub sparsity: f64,
    pub alpha: f64,
    pub delta: f64,
    pub b_v: u32,
    pub b_p: u32,
    pub memory_bits: MemoryReport,
    pub avg_bits_exact: f64,
    pub avg_bits_approx: f64,
}

/// Runs the APB pipeline on `w` and reports its storage cost.
///
/// Missing `alpha`/`delta` come from [`init_alpha_delta`]; missing `dims`
/// default to the larger matrix dimension.
pub fn apb_stats(
    w: &DenseMatrix,
    alpha: Option<f64>,
    delta: Option<f64>,
    b_v: u32,
    dims: Option<&[usize]>,
) -> Result<ApbStats> {
    let init = init_alpha_delta(w)?;
    let p = ApbParams::clamped(alpha.unwrap_or(init.alpha()), delta.unwrap_or(init.delta()))?;
    let a = apb_forward(w, &p);
    let layer = decompose_apb(&a, p.alpha() as f32)?;
    let b_p = match dims {
        Some(d) => position_bits(d)?,
        None => position_bits(&[w.rows().max(w.cols()).max(2)])?,
    };
    let (n, s) = (w.len(), layer.nnz());
    let mem = memory_bits(n, s, b_v, b_p)?;
    Ok(ApbStats {
        rows: w.rows(),
        cols: w.cols(),
        n,
        s,
        density: s as f64 / n as f64,
        sparsity: 1.0 - s as f64 / n as f64,
        alpha: p.alpha(),
        delta: p.delta(),
        b_v,
        b_p,
        memory_bits: MemoryReport {
            exact: mem.exact,
            approx: mem.approx,
        },
        avg_bits_exact: mem.avg_exact,
        avg_bits_approx: mem.avg_approx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_mentions_every_precision() {
        let t = tpp_table(3.0).unwrap();
        assert!(t.contains("341.33"));
        assert!(t.contains("10.67x"));
        for p in Precision::ALL {
            assert!(t.contains(p.label()));
        }
        assert!(tpp_table(0.0).is_err());
    }

    #[test]
    fn fully_binary_input() {
        let w = DenseMatrix::from_fn(4, 8, |r, c| if (r + c) % 3 == 0 { 0.75 } else { -0.75 });
        let st = apb_stats(&w, None, None, 32, None).unwrap();
        assert_eq!(st.s, 0);
        assert_eq!(st.avg_bits_exact, 1.0);
        assert_eq!(st.b_p, 3);
    }

    #[test]
    fn explicit_parameters() {
        let w = DenseMatrix::new(1, 4, vec![0.1, -0.2, 3.0, -4.0]).unwrap();
        let st = apb_stats(&w, Some(0.5), Some(0.5), 32, Some(&[1000])).unwrap();
        assert_eq!((st.s, st.b_p), (2, 10));
        assert_eq!(st.memory_bits, MemoryReport { exact: 2 + 2 * 42, approx: 4 + 2 * 42 });
    }
}
